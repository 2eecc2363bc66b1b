//! Solver state and options.

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::linear_models::PressureOptions;
use crate::spectral_field::multipliers::{leray_spectra, spectral_divergence_max};
use crate::spectral_field::{Field, Grid, Spectrum, TensorField, VectorField};

/// `(a, u, E)` with `a = 1/rho - 1`, `E = F - I`, plus the diagnostic pressure.
#[derive(Clone, Debug)]
pub struct SimState {
    pub t: f64,
    pub a: Field,
    pub u: VectorField,
    pub e: TensorField,
    pub pi: Field,
    pub mu: f64,
    /// Friedrichs radius in physical wavenumber units.
    pub n_cut: f64,
}

impl SimState {
    /// State at `t = 0` with the default Friedrichs radius and zero pressure.
    pub fn new(a: Field, u: VectorField, e: TensorField, mu: f64) -> Result<Self> {
        let grid = a.grid().clone();
        if !u.grid().same_as(&grid) || !e.grid().same_as(&grid) {
            return Err(Error::GridMismatch);
        }
        if !(mu > 0.0) {
            return precondition(format!("viscosity must be positive, got {mu}"));
        }
        Ok(Self {
            t: 0.0,
            pi: Field::zeros(&grid),
            n_cut: grid.default_n_cut(),
            a,
            u,
            e,
            mu,
        })
    }

    pub fn rest(grid: &Grid, mu: f64) -> Self {
        Self::new(Field::zeros(grid), VectorField::zeros(grid), TensorField::zeros(grid), mu)
            .expect("rest state is valid")
    }

    pub fn grid(&self) -> &Grid {
        self.a.grid()
    }

    pub fn with_n_cut(mut self, n_cut: f64) -> Self {
        self.n_cut = n_cut;
        self
    }

    /// Packs `[a, u_i, E_ij]` into spectra.
    pub(crate) fn to_spectra(&self) -> Vec<Spectrum> {
        let mut fields = vec![self.a.clone()];
        fields.extend(self.u.components().iter().cloned());
        fields.extend(self.e.components().iter().cloned());
        crate::spectral_field::spectra_of(&fields)
    }

    pub(crate) fn from_spectra(template: &SimState, t: f64, s: &[Spectrum], pi: Field) -> SimState {
        let dim = template.grid().dim();
        let phys = crate::spectral_field::fields_of(&s.iter().collect::<Vec<_>>());
        let mut it = phys.into_iter();
        let a = it.next().expect("density slot");
        let u: Vec<Field> = (&mut it).take(dim).collect();
        let e: Vec<Field> = it.collect();
        SimState {
            t,
            a,
            u: VectorField::new(u).expect("velocity slots"),
            e: TensorField::new(e).expect("deformation slots"),
            pi,
            mu: template.mu,
            n_cut: template.n_cut,
        }
    }

    /// Checks the state invariants: incompressibility, density floor, Friedrichs support.
    pub fn check(&self, b_min: f64) -> Result<()> {
        let spectra = self.u.spectra();
        let div = spectral_divergence_max(&spectra);
        let scale = self.u.l2_norm();
        if div > 1e-10 * scale.max(f64::MIN_POSITIVE) && div > 1e-14 {
            return precondition(format!("velocity divergence {div:.3e} exceeds 1e-10 |u|"));
        }
        let floor = self.a.min() + 1.0;
        if floor < b_min {
            return precondition(format!("inf(1 + a) = {floor:.6} is below {b_min}"));
        }
        let mask = FriedrichsMask::new(self.grid(), self.n_cut);
        for s in self.to_spectra() {
            let outside = mask.leak(&s);
            if outside > 1e-12 * s.l2_norm().max(1e-300) && outside > 1e-15 {
                return precondition(format!("spectral content {outside:.3e} outside |xi| <= n_cut"));
            }
        }
        Ok(())
    }

    /// Projects the state onto the Friedrichs space and makes `u` divergence-free.
    pub fn projected(&self) -> SimState {
        let mask = FriedrichsMask::new(self.grid(), self.n_cut);
        let mut s = self.to_spectra();
        for x in &mut s {
            mask.apply(x);
        }
        let dim = self.grid().dim();
        let p = leray_spectra(&s[1..1 + dim]);
        for (i, c) in p.into_iter().enumerate() {
            s[1 + i] = c;
        }
        SimState::from_spectra(self, self.t, &s, self.pi.clone())
    }
}

/// Retained modes: the dealias mask intersected with the ball `|xi| <= n_cut`.
#[derive(Clone, Debug)]
pub struct FriedrichsMask {
    keep: Vec<bool>,
}

impl FriedrichsMask {
    pub fn new(grid: &Grid, n_cut: f64) -> Self {
        let m = grid.modes();
        let keep = m
            .keep
            .iter()
            .zip(&m.xi_norm)
            .map(|(&k, &x)| k && x <= n_cut * (1.0 + 1e-12))
            .collect();
        Self { keep }
    }

    pub fn apply(&self, s: &mut Spectrum) {
        for (c, &k) in s.coefs_mut().iter_mut().zip(&self.keep) {
            if !k {
                *c = Default::default();
            }
        }
    }

    /// `L^2` norm of the discarded part.
    pub fn leak(&self, s: &Spectrum) -> f64 {
        s.coefs()
            .iter()
            .zip(&self.keep)
            .filter(|(_, &k)| !k)
            .map(|(c, _)| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Tunables of the nonlinear solver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub b_min: f64,
    pub pressure: PressureOptions,
    pub cfl_cap: f64,
    /// Abort threshold on `max |det(I + E) - 1|`.
    pub det_abort: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            b_min: 0.1,
            pressure: PressureOptions::default(),
            cfl_cap: crate::linear_models::transport::DEFAULT_CFL_CAP,
            det_abort: 1e-2,
        }
    }
}
