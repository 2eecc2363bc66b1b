//! Right-hand side of the `(a, u, E)` system, Friedrichs-projected:
//!
//! `a' = -u . grad a`,
//! `u' = P[-u . grad u + (1 + a)(mu Lap u - grad Pi) + G]`,
//! `E' = -u . grad E + grad u E + grad u`,
//!
//! with `G_i = (1 + a)(d_j (E E^T)_ij + d_j E_ij)` and the pressure from
//! `div((1 + a) grad Pi) = div(mu (1 + a) Lap u - u . grad u + G)`.

use num_complex::Complex64;

use super::state::{FriedrichsMask, SimState, SolverOptions};
use crate::error::Result;
use crate::linear_models::momentum::pressure_spectral;
use crate::spectral_field::multipliers::{derivative_spectrum, laplacian_spectrum, leray_spectra};
use crate::spectral_field::{fields_of, spectra_of, Field, Spectrum, TensorField, VectorField};

/// Physical-space quantities needed by the right-hand side.
pub(crate) struct Phys {
    pub dim: usize,
    pub a: Field,
    pub u: Vec<Field>,
    pub grad_a: Vec<Field>,
    /// `[i * dim + k] = d_k u_i`
    pub grad_u: Vec<Field>,
    pub e: Vec<Field>,
    /// `[(i * dim + j) * dim + l] = d_l E_ij`
    pub grad_e: Vec<Field>,
    pub lap_u: Vec<Field>,
}

impl Phys {
    pub fn new(s: &[Spectrum], dim: usize) -> Self {
        let a = &s[0];
        let u = &s[1..1 + dim];
        let e = &s[1 + dim..];
        let mut all: Vec<Spectrum> = Vec::with_capacity(1 + 3 * dim + 2 * dim * dim + dim * dim * dim);
        all.push(a.clone());
        all.extend(u.iter().cloned());
        all.extend((0..dim).map(|j| derivative_spectrum(a, j)));
        for c in u {
            all.extend((0..dim).map(|k| derivative_spectrum(c, k)));
        }
        all.extend(e.iter().cloned());
        for c in e {
            all.extend((0..dim).map(|l| derivative_spectrum(c, l)));
        }
        all.extend(u.iter().map(laplacian_spectrum));
        let mut it = fields_of(&all.iter().collect::<Vec<_>>()).into_iter();
        let mut take = |n: usize| -> Vec<Field> { (&mut it).take(n).collect() };
        let a = take(1).remove(0);
        let u = take(dim);
        let grad_a = take(dim);
        let grad_u = take(dim * dim);
        let e = take(dim * dim);
        let grad_e = take(dim * dim * dim);
        let lap_u = take(dim);
        Self {
            dim,
            a,
            u,
            grad_a,
            grad_u,
            e,
            grad_e,
            lap_u,
        }
    }

    pub fn len(&self) -> usize {
        self.a.values().len()
    }

    #[inline]
    pub fn e_at(&self, i: usize, j: usize, p: usize) -> f64 {
        self.e[i * self.dim + j].values()[p]
    }

    #[inline]
    pub fn de_at(&self, i: usize, j: usize, l: usize, p: usize) -> f64 {
        self.grad_e[(i * self.dim + j) * self.dim + l].values()[p]
    }

    #[inline]
    pub fn du_at(&self, i: usize, k: usize, p: usize) -> f64 {
        self.grad_u[i * self.dim + k].values()[p]
    }

    /// `u . grad` of a quantity whose gradient is given by `grad(l, p)`.
    #[inline]
    pub fn advect_at(&self, p: usize, grad: impl Fn(usize) -> f64) -> f64 {
        (0..self.dim).map(|l| self.u[l].values()[p] * grad(l)).sum()
    }

    /// `d_j (E E^T)_ij = sum_{j,k} (d_j E_ik E_jk + E_ik d_j E_jk)` at one point.
    #[inline]
    pub fn div_eet_at(&self, i: usize, p: usize) -> f64 {
        let d = self.dim;
        let mut acc = 0.0;
        for j in 0..d {
            for k in 0..d {
                acc += self.de_at(i, k, j, p) * self.e_at(j, k, p) + self.e_at(i, k, p) * self.de_at(j, k, j, p);
            }
        }
        acc
    }

    /// `d_j E_ij` at one point.
    #[inline]
    pub fn div_e_at(&self, i: usize, p: usize) -> f64 {
        (0..self.dim).map(|j| self.de_at(i, j, j, p)).sum()
    }
}

/// Output of one right-hand-side evaluation.
pub(crate) struct Tendency {
    /// `[a', u'_i, E'_ij]`
    pub rates: Vec<Spectrum>,
    pub grad_pi: Vec<Spectrum>,
    /// Dealiased `a grad Pi`.
    pub a_grad_pi: Vec<Spectrum>,
    pub pressure_iterations: usize,
    pub phys: Phys,
}

pub(crate) fn masked(mut v: Vec<Spectrum>, mask: &FriedrichsMask) -> Vec<Spectrum> {
    for s in &mut v {
        mask.apply(s);
    }
    v
}

pub(crate) fn evaluate(
    s: &[Spectrum],
    mu: f64,
    mask: &FriedrichsMask,
    opts: &SolverOptions,
    warm: Option<&[Spectrum]>,
) -> Result<Tendency> {
    let grid = s[0].grid().clone();
    let dim = grid.dim();
    let phys = Phys::new(s, dim);
    let n = phys.len();
    let mut out: Vec<Vec<f64>> = vec![vec![0.0; n]; 1 + dim + dim * dim];
    for p in 0..n {
        let a = phys.a.values()[p];
        let b = 1.0 + a;
        out[0][p] = -phys.advect_at(p, |l| phys.grad_a[l].values()[p]);
        for i in 0..dim {
            let adv = phys.advect_at(p, |l| phys.du_at(i, l, p));
            let g = b * (phys.div_eet_at(i, p) + phys.div_e_at(i, p));
            out[1 + i][p] = mu * b * phys.lap_u[i].values()[p] - adv + g;
        }
        for i in 0..dim {
            for j in 0..dim {
                let adv = phys.advect_at(p, |l| phys.de_at(i, j, l, p));
                let stretch: f64 = (0..dim).map(|k| phys.du_at(i, k, p) * phys.e_at(k, j, p)).sum();
                out[1 + dim + i * dim + j][p] = -adv + stretch + phys.du_at(i, j, p);
            }
        }
    }
    let fields: Vec<Field> = out
        .into_iter()
        .map(|v| Field::from_values(&grid, v).expect("grid-sized buffer"))
        .collect();
    let mut rates = masked(spectra_of(&fields), mask);
    let l = rates[1..1 + dim].to_vec();
    let sol = pressure_spectral(&phys.a, &l, warm, &opts.pressure)?;
    let mut rest = l;
    for ((x, g), w) in rest.iter_mut().zip(&sol.grad_pi).zip(&sol.a_grad_pi) {
        x.axpy(-1.0, g);
        x.axpy(-1.0, w);
    }
    let projected = masked(leray_spectra(&rest), mask);
    for (i, c) in projected.into_iter().enumerate() {
        rates[1 + i] = c;
    }
    Ok(Tendency {
        rates,
        grad_pi: masked(sol.grad_pi, mask),
        a_grad_pi: sol.a_grad_pi,
        pressure_iterations: sol.iterations,
        phys,
    })
}

/// Pressure from its gradient: `Pi_hat = -i xi . (grad Pi)_hat / |xi|^2`, mean zero.
pub(crate) fn pressure_from_gradient(g: &[Spectrum]) -> Field {
    let grid = g[0].grid();
    let m = grid.modes();
    let coefs: Vec<Complex64> = (0..grid.len())
        .map(|k| {
            let x2: f64 = m.xi[k].iter().map(|x| x * x).sum();
            if x2 == 0.0 {
                return Complex64::default();
            }
            let dot: Complex64 = g.iter().enumerate().map(|(j, s)| s.coefs()[k] * m.xi[k][j]).sum();
            Complex64::new(0.0, -1.0) * dot / x2
        })
        .collect();
    Spectrum::from_coefs(grid, coefs).expect("grid-sized").to_field()
}

/// Time derivatives `(a', u', E')` and the pressure `Pi` of a state.
#[derive(Clone, Debug)]
pub struct Rates {
    pub da: Field,
    pub du: VectorField,
    pub de: TensorField,
    pub pi: Field,
    pub grad_pi: VectorField,
}

pub fn rhs(state: &SimState, opts: &SolverOptions) -> Result<Rates> {
    let mask = FriedrichsMask::new(state.grid(), state.n_cut);
    let s = masked(state.to_spectra(), &mask);
    let t = evaluate(&s, state.mu, &mask, opts, None)?;
    let dim = state.grid().dim();
    let phys = fields_of(&t.rates.iter().collect::<Vec<_>>());
    Ok(Rates {
        da: phys[0].clone(),
        du: VectorField::new(phys[1..1 + dim].to_vec())?,
        de: TensorField::new(phys[1 + dim..].to_vec())?,
        pi: pressure_from_gradient(&t.grad_pi),
        grad_pi: VectorField::from_spectra(&t.grad_pi),
    })
}

/// `E' = -v . grad E + grad v E + grad v` for a frozen velocity `v`.
pub fn deformation_rates(v: &[Spectrum], e: &[Spectrum], mask: &FriedrichsMask) -> Vec<Spectrum> {
    let dim = v.len();
    let grid = v[0].grid().clone();
    let mut state = vec![Spectrum::zeros(&grid)];
    state.extend(v.iter().cloned());
    state.extend(e.iter().cloned());
    let phys = Phys::new(&state, dim);
    let n = phys.len();
    let mut out: Vec<Vec<f64>> = vec![vec![0.0; n]; dim * dim];
    for p in 0..n {
        for i in 0..dim {
            for j in 0..dim {
                let adv = phys.advect_at(p, |l| phys.de_at(i, j, l, p));
                let stretch: f64 = (0..dim).map(|k| phys.du_at(i, k, p) * phys.e_at(k, j, p)).sum();
                out[i * dim + j][p] = -adv + stretch + phys.du_at(i, j, p);
            }
        }
    }
    let fields: Vec<Field> = out
        .into_iter()
        .map(|v| Field::from_values(&grid, v).expect("grid-sized buffer"))
        .collect();
    masked(spectra_of(&fields), mask)
}
