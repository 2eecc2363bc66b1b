//! Constraint residuals of the deformation tensor and the running global norm.

use std::fmt::Write as _;

use serde::Serialize;

use super::state::SimState;
use crate::besov::{norm_from_blocks, NormSpec};
use crate::spectral_field::multipliers::{derivative_spectrum, div_spectra};
use crate::spectral_field::{block_norms, fields_of, BlockNorms, Field, Spectrum, TensorField, VectorField};

/// Residuals of `det(I + E) = 1`, `div E^T = 0` and the compatibility identity
/// `d_m E_ij - d_j E_im = E_lj d_l E_im - E_lm d_l E_ij`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ConstraintResiduals {
    /// `max |det(I + E) - 1|` over grid points.
    pub det: f64,
    /// `||div E^T||_{L^2}`
    pub div_et: f64,
    /// `L^2` norm of the compatibility defect over all `(i, j, m)`.
    pub compat: f64,
}

fn det_minus_one(m: &[f64], dim: usize) -> f64 {
    let f = |i: usize, j: usize| m[i * dim + j] + if i == j { 1.0 } else { 0.0 };
    let det = match dim {
        2 => f(0, 0) * f(1, 1) - f(0, 1) * f(1, 0),
        _ => {
            f(0, 0) * (f(1, 1) * f(2, 2) - f(1, 2) * f(2, 1)) - f(0, 1) * (f(1, 0) * f(2, 2) - f(1, 2) * f(2, 0))
                + f(0, 2) * (f(1, 0) * f(2, 1) - f(1, 1) * f(2, 0))
        }
    };
    det - 1.0
}

pub fn constraint_residuals(e: &TensorField) -> ConstraintResiduals {
    let dim = e.dim();
    let grid = e.grid();
    let spectra = e.spectra();
    let grads: Vec<Spectrum> = spectra
        .iter()
        .flat_map(|c| (0..dim).map(move |l| derivative_spectrum(c, l)))
        .collect();
    let de = fields_of(&grads.iter().collect::<Vec<_>>());
    let de_at = |i: usize, j: usize, l: usize, p: usize| de[(i * dim + j) * dim + l].values()[p];
    let e_at = |i: usize, j: usize, p: usize| e.get(i, j).values()[p];

    let mut det = 0.0_f64;
    let mut local = vec![0.0; dim * dim];
    let mut compat_sq = 0.0;
    for p in 0..grid.len() {
        for i in 0..dim {
            for j in 0..dim {
                local[i * dim + j] = e_at(i, j, p);
            }
        }
        det = det.max(det_minus_one(&local, dim).abs());
        for i in 0..dim {
            for j in 0..dim {
                for m in 0..dim {
                    let mut c = de_at(i, j, m, p) - de_at(i, m, j, p);
                    for l in 0..dim {
                        c -= e_at(l, j, p) * de_at(i, m, l, p) - e_at(l, m, p) * de_at(i, j, l, p);
                    }
                    compat_sq += c * c;
                }
            }
        }
    }
    let transposed = e.transpose().spectra();
    let div_et = div_rows(&transposed, dim);
    ConstraintResiduals {
        det,
        div_et,
        compat: (compat_sq * grid.cell_volume()).sqrt(),
    }
}

/// `||(d_j T_ij)_i||_{L^2}` for a row-major tensor of spectra.
fn div_rows(t: &[Spectrum], dim: usize) -> f64 {
    (0..dim)
        .map(|i| div_spectra(&t[i * dim..(i + 1) * dim]).l2_norm().powi(2))
        .sum::<f64>()
        .sqrt()
}

/// One row of run diagnostics.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub div_u_residual: f64,
    pub det_residual: f64,
    pub div_et_residual: f64,
    pub compat_residual: f64,
    /// Running `||a||_{Ltilde^inf(Btilde^{N/2,inf})} + ||u||_{Ltilde^inf(Bdot^{N/2-1})}
    /// + ||u||_{L^1(Bdot^{N/2+1})} + ||E||_{Ltilde^inf(Btilde^{N/2,inf})}`.
    pub y_norm: f64,
    pub a_hybrid: f64,
    pub u_low: f64,
    pub u_high_integral: f64,
    pub e_hybrid: f64,
    pub kinetic_energy: f64,
}

pub const DIAGNOSTICS_CSV_HEADER: &str = "t,div_u_residual,det_residual,divET_residual,compat_residual,Y_norm,a_hybrid,u_low,u_high_integral,E_hybrid,kinetic_energy";

pub fn diagnostics_csv(rows: &[DiagnosticsRow]) -> String {
    let mut out = String::from(DIAGNOSTICS_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.t,
            r.div_u_residual,
            r.det_residual,
            r.div_et_residual,
            r.compat_residual,
            r.y_norm,
            r.a_hybrid,
            r.u_low,
            r.u_high_integral,
            r.e_hybrid,
            r.kinetic_energy
        );
    }
    out
}

/// Norm choices of the global functional at scaling index `N/2`.
#[derive(Clone, Copy, Debug)]
pub struct YSpecs {
    pub hybrid: NormSpec,
    pub u_low: NormSpec,
    pub u_high: NormSpec,
}

impl YSpecs {
    pub fn new(dim: usize, mu: f64) -> Self {
        let h = dim as f64 / 2.0;
        Self {
            hybrid: NormSpec::hybrid(h, f64::INFINITY, mu),
            u_low: NormSpec::homogeneous(h - 1.0, 1.0),
            u_high: NormSpec::homogeneous(h + 1.0, 1.0),
        }
    }
}

/// Block norms of the three unknowns of a state.
pub(crate) struct StateBlocks {
    pub a: BlockNorms,
    pub u: BlockNorms,
    pub e: BlockNorms,
}

impl StateBlocks {
    pub fn of(a: &Spectrum, u: &[Spectrum], e: &[Spectrum]) -> Self {
        Self {
            a: block_norms(&[a]),
            u: block_norms(&u.iter().collect::<Vec<_>>()),
            e: block_norms(&e.iter().collect::<Vec<_>>()),
        }
    }
}

fn block_max(acc: &mut BlockNorms, b: &BlockNorms) {
    acc.low = acc.low.max(b.low);
    for (x, y) in acc.blocks.iter_mut().zip(&b.blocks) {
        *x = x.max(*y);
    }
}

/// Running Chemin-Lerner suprema and the time integral entering the global functional.
#[derive(Clone, Debug)]
pub struct YMonitor {
    specs: YSpecs,
    sup_a: Option<BlockNorms>,
    sup_u: Option<BlockNorms>,
    sup_e: Option<BlockNorms>,
    last: Option<(f64, f64)>,
    integral: f64,
}

impl YMonitor {
    pub fn new(dim: usize, mu: f64) -> Self {
        Self {
            specs: YSpecs::new(dim, mu),
            sup_a: None,
            sup_u: None,
            sup_e: None,
            last: None,
            integral: 0.0,
        }
    }

    pub(crate) fn update(&mut self, t: f64, b: &StateBlocks) {
        for (slot, x) in [(&mut self.sup_a, &b.a), (&mut self.sup_u, &b.u), (&mut self.sup_e, &b.e)] {
            match slot {
                Some(acc) => block_max(acc, x),
                None => *slot = Some(x.clone()),
            }
        }
        let high = norm_from_blocks(&b.u, &self.specs.u_high);
        if let Some((t0, h0)) = self.last {
            self.integral += 0.5 * (t - t0) * (h0 + high);
        }
        self.last = Some((t, high));
    }

    pub fn integral(&self) -> f64 {
        self.integral
    }

    pub fn value(&self) -> f64 {
        let n = |b: &Option<BlockNorms>, s: &NormSpec| b.as_ref().map_or(0.0, |b| norm_from_blocks(b, s));
        n(&self.sup_a, &self.specs.hybrid) + n(&self.sup_u, &self.specs.u_low) + self.integral + n(&self.sup_e, &self.specs.hybrid)
    }
}

pub(crate) fn diagnostics_row(state: &SimState, blocks: &StateBlocks, monitor: &YMonitor) -> DiagnosticsRow {
    let specs = YSpecs::new(state.grid().dim(), state.mu);
    let c = constraint_residuals(&state.e);
    DiagnosticsRow {
        t: state.t,
        div_u_residual: div_spectra(&state.u.spectra()).l2_norm(),
        det_residual: c.det,
        div_et_residual: c.div_et,
        compat_residual: c.compat,
        y_norm: monitor.value(),
        a_hybrid: norm_from_blocks(&blocks.a, &specs.hybrid),
        u_low: norm_from_blocks(&blocks.u, &specs.u_low),
        u_high_integral: monitor.integral(),
        e_hybrid: norm_from_blocks(&blocks.e, &specs.hybrid),
        kinetic_energy: 0.5 * state.u.l2_norm().powi(2),
    }
}

/// Instantaneous diagnostics of a single state (the time integral is zero).
pub fn invariants_report(state: &SimState) -> DiagnosticsRow {
    let blocks = StateBlocks::of(&state.a.spectrum(), &state.u.spectra(), &state.e.spectra());
    let mut monitor = YMonitor::new(state.grid().dim(), state.mu);
    monitor.update(state.t, &blocks);
    diagnostics_row(state, &blocks, &monitor)
}

/// `alpha = ||a0||_{Btilde^{N/2,inf}} + ||u0||_{Bdot^{N/2-1}} + ||E0||_{Btilde^{N/2,inf}}`.
pub fn data_size(a: &Field, u: &VectorField, e: &TensorField, mu: f64) -> f64 {
    let specs = YSpecs::new(a.grid().dim(), mu);
    let b = StateBlocks::of(&a.spectrum(), &u.spectra(), &e.spectra());
    norm_from_blocks(&b.a, &specs.hybrid) + norm_from_blocks(&b.u, &specs.u_low) + norm_from_blocks(&b.e, &specs.hybrid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_field::Grid;

    #[test]
    fn zero_deformation_is_admissible() {
        let g = Grid::new(2, 16).unwrap();
        let r = constraint_residuals(&TensorField::zeros(&g));
        assert_eq!(r, ConstraintResiduals::default());
    }

    /// `E = grad X - I` for the shear map `X = (x + eps sin y, y)`.
    #[test]
    fn shear_map_is_admissible_and_its_transpose_is_not() {
        let g = Grid::new(2, 32).unwrap();
        let eps = 0.1;
        let mut e = TensorField::zeros(&g);
        *e.get_mut(0, 1) = Field::from_fn(&g, |x| eps * x[1].cos());
        let r = constraint_residuals(&e);
        assert!(r.det < 1e-15 && r.div_et < 1e-13 && r.compat < 1e-13, "{r:?}");
        let broken = constraint_residuals(&e.transpose());
        assert!(broken.compat > 1e-2);
    }
}
