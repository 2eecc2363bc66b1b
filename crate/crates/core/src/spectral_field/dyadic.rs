//! Littlewood-Paley blocks on the torus.
//!
//! Blocks are indexed by the normalized radius `r = |k|` (wavevector in units of
//! `2 pi / L`): `Delta_q` has symbol `phi(r / 2^q)` and `S_q` has `chi(r / 2^q)`.
//! Since the smallest nonzero radius is 1 the low block `S_{q_min}` carries
//! only the mean.

use num_complex::Complex64;

use super::field::{Field, Spectrum};
use super::grid::Grid;
use crate::error::{Error, Result};

const INNER: f64 = 0.75;
const OUTER: f64 = 1.0;

fn smooth_step_kernel(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Radial low-pass profile: 1 on `[0, 3/4]`, 0 on `[1, inf)`, smooth between.
pub fn chi(r: f64) -> f64 {
    let t = (r - INNER) / (OUTER - INNER);
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let a = smooth_step_kernel(1.0 - t);
        let b = smooth_step_kernel(t);
        a / (a + b)
    }
}

/// Annular profile `chi(r/2) - chi(r)`: support `(3/4, 2)`, equal to 1 on `[1, 3/2]`.
pub fn phi(r: f64) -> f64 {
    chi(0.5 * r) - chi(r)
}

/// `phi(2^{-q} r)`.
pub fn phi_q(r: f64, q: i32) -> f64 {
    phi(r * 2f64.powi(-q))
}

/// `chi(2^{-q} r)`.
pub fn chi_q(r: f64, q: i32) -> f64 {
    chi(r * 2f64.powi(-q))
}

/// Per-mode cached weights: the two blocks that can be nonzero at radius `r`.
pub(crate) fn block_candidates(r: f64) -> (i32, [f64; 2]) {
    if r == 0.0 {
        return (i32::MIN, [0.0, 0.0]);
    }
    let q0 = r.log2().floor() as i32;
    // phi(r/2^q) > 0 only for log2 r - 1 < q < log2 r + log2(4/3).
    debug_assert!(phi_q(r, q0 - 1) == 0.0 && phi_q(r, q0 + 2) == 0.0);
    (q0, [phi_q(r, q0), phi_q(r, q0 + 1)])
}

/// The radial cutoff family evaluated on a grid.
#[derive(Clone, Debug)]
pub struct DyadicCutoffs {
    grid: Grid,
    pub q_min: i32,
    pub q_max: i32,
}

/// `dyadic_cutoffs` for a grid.
pub fn dyadic_cutoffs(grid: &Grid) -> DyadicCutoffs {
    DyadicCutoffs {
        grid: grid.clone(),
        q_min: grid.q_min(),
        q_max: grid.q_max(),
    }
}

impl DyadicCutoffs {
    /// Low-block weight `chi(r / 2^{q_min})` at spectral index `idx`.
    pub fn low(&self, idx: usize) -> f64 {
        chi_q(self.grid.modes().radius[idx], self.q_min)
    }

    /// Block weight `phi(r / 2^q)` at spectral index `idx`.
    pub fn block(&self, idx: usize, q: i32) -> f64 {
        phi_q(self.grid.modes().radius[idx], q)
    }

    /// `chi + sum_q phi_q` at spectral index `idx`.
    pub fn partition_sum(&self, idx: usize) -> f64 {
        self.low(idx)
            + (self.q_min..=self.q_max)
                .map(|q| self.block(idx, q))
                .sum::<f64>()
    }
}

fn check_q(grid: &Grid, q: i32) -> Result<()> {
    if q < grid.q_min() || q > grid.q_max() {
        return Err(Error::OutOfRange {
            what: "dyadic index q",
            value: q as i64,
            min: grid.q_min() as i64,
            max: grid.q_max() as i64,
        });
    }
    Ok(())
}

/// `Delta_q` applied to a spectrum; any integer `q`.
pub fn block_spectrum(s: &Spectrum, q: i32) -> Spectrum {
    let radius = &s.grid().modes().radius;
    let scale = 2f64.powi(-q);
    s.map_modes(|k, c| {
        let w = phi(radius[k] * scale);
        if w == 0.0 {
            Complex64::default()
        } else {
            c * w
        }
    })
}

/// `S_q` applied to a spectrum; any integer `q`.
pub fn low_pass_spectrum(s: &Spectrum, q: i32) -> Spectrum {
    let radius = &s.grid().modes().radius;
    let scale = 2f64.powi(-q);
    s.map_modes(|k, c| {
        let w = chi(radius[k] * scale);
        if w == 0.0 {
            Complex64::default()
        } else {
            c * w
        }
    })
}

pub fn dyadic_block(f: &Field, q: i32) -> Result<Field> {
    check_q(f.grid(), q)?;
    Ok(block_spectrum(&f.spectrum(), q).to_field())
}

pub fn low_pass(f: &Field, q: i32) -> Result<Field> {
    check_q(f.grid(), q)?;
    Ok(low_pass_spectrum(&f.spectrum(), q).to_field())
}

/// The family `{Delta_q f}` together with the low block `S_{q_min} f`.
#[derive(Clone, Debug)]
pub struct DyadicDecomposition {
    pub q_min: i32,
    pub q_max: i32,
    pub blocks: Vec<Field>,
    pub low_block: Field,
}

impl DyadicDecomposition {
    pub fn new(f: &Field) -> Self {
        let g = f.grid();
        let s = f.spectrum();
        let blocks = (g.q_min()..=g.q_max())
            .map(|q| block_spectrum(&s, q).to_field())
            .collect();
        Self {
            q_min: g.q_min(),
            q_max: g.q_max(),
            blocks,
            low_block: low_pass_spectrum(&s, g.q_min()).to_field(),
        }
    }

    pub fn block(&self, q: i32) -> Option<&Field> {
        usize::try_from(q - self.q_min)
            .ok()
            .and_then(|i| self.blocks.get(i))
    }

    /// `S_{q_min} f + sum_q Delta_q f`.
    pub fn reconstruct(&self) -> Field {
        let mut acc = self.low_block.clone();
        for b in &self.blocks {
            acc.axpy(1.0, b);
        }
        acc
    }
}

/// `L^2` norms of the low block and of every homogeneous block.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockNorms {
    pub q_min: i32,
    pub low: f64,
    /// `blocks[i]` is `||Delta_{q_min + i} f||`.
    pub blocks: Vec<f64>,
}

impl BlockNorms {
    pub fn q_max(&self) -> i32 {
        self.q_min + self.blocks.len() as i32 - 1
    }

    pub fn get(&self, q: i32) -> f64 {
        usize::try_from(q - self.q_min)
            .ok()
            .and_then(|i| self.blocks.get(i).copied())
            .unwrap_or(0.0)
    }

    /// Iterator over `(q, ||Delta_q f||)`.
    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.blocks
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.q_min + i as i32, v))
    }
}

/// Block norms of a scalar spectrum, or Euclidean block norms of several
/// components (vector / tensor fields), in one pass via Parseval.
pub fn block_norms(components: &[&Spectrum]) -> BlockNorms {
    let grid = components[0].grid();
    let m = grid.modes();
    let q_min = grid.q_min();
    let q_max = grid.q_max();
    let mut low = 0.0;
    let mut blocks = vec![0.0; (q_max - q_min + 1) as usize];
    for k in 0..grid.len() {
        let e: f64 = components.iter().map(|s| s.coefs()[k].norm_sqr()).sum();
        if e == 0.0 {
            continue;
        }
        let q0 = m.lp_q0[k];
        if q0 == i32::MIN {
            low += e;
            continue;
        }
        let w = m.lp_w[k];
        for (off, wq) in w.iter().enumerate() {
            if *wq != 0.0 {
                let q = q0 + off as i32;
                if let Some(slot) = usize::try_from(q - q_min).ok().and_then(|i| blocks.get_mut(i)) {
                    *slot += wq * wq * e;
                }
            }
        }
    }
    BlockNorms {
        q_min,
        low: low.sqrt(),
        blocks: blocks.into_iter().map(f64::sqrt).collect(),
    }
}

pub fn field_block_norms(f: &Field) -> BlockNorms {
    block_norms(&[&f.spectrum()])
}

/// Outcome of the Littlewood-Paley self-check.
#[derive(Clone, Debug, serde::Serialize)]
pub struct LpCheckReport {
    pub partition_max_error: f64,
    pub quasi_orthogonality_max: f64,
    pub bernstein_min: f64,
    pub bernstein_max: f64,
    pub ensemble_size: usize,
    pub partition_ok: bool,
    pub quasi_orthogonality_ok: bool,
    pub bernstein_ok: bool,
}

impl LpCheckReport {
    pub fn pass(&self) -> bool {
        self.partition_ok && self.quasi_orthogonality_ok && self.bernstein_ok
    }

    /// Names of the checks that failed.
    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.partition_ok {
            out.push("partition_of_unity");
        }
        if !self.quasi_orthogonality_ok {
            out.push("quasi_orthogonality");
        }
        if !self.bernstein_ok {
            out.push("bernstein");
        }
        out
    }
}

/// Partition of unity, quasi-orthogonality and Bernstein ratios on `grid`.
///
/// `cutoff_scale` multiplies every block profile; 1 is the real family, any
/// other value corrupts it (used to exercise the failure path).
pub fn lp_check(grid: &Grid, ensemble_size: usize, seed: u64, cutoff_scale: f64) -> LpCheckReport {
    let m = grid.modes();
    let (q_min, q_max) = (grid.q_min(), grid.q_max());
    let mut partition_max_error: f64 = 0.0;
    let mut quasi: f64 = 0.0;
    let mut weights = Vec::with_capacity((q_max - q_min + 1) as usize);
    for k in 0..grid.len() {
        let r = m.radius[k];
        weights.clear();
        weights.extend((q_min..=q_max).map(|q| cutoff_scale * phi_q(r, q)));
        let sum = chi_q(r, q_min) + weights.iter().sum::<f64>();
        partition_max_error = partition_max_error.max((sum - 1.0).abs());
        for i in 0..weights.len() {
            for j in i + 2..weights.len() {
                quasi = quasi.max((weights[i] * weights[j]).abs());
            }
        }
    }

    let mut bmin = f64::INFINITY;
    let mut bmax: f64 = 0.0;
    for member in 0..ensemble_size {
        let f = super::random::random_field(grid, seed.wrapping_add(member as u64), 0.0, None);
        let s = f.spectrum();
        for q in q_min..=q_max {
            let mut num = 0.0;
            let mut den = 0.0;
            for k in 0..grid.len() {
                let w = cutoff_scale * phi_q(m.radius[k], q);
                if w == 0.0 {
                    continue;
                }
                let e = w * w * s.coefs()[k].norm_sqr();
                let x2: f64 = m.xi[k][..grid.dim()].iter().map(|x| x * x).sum();
                num += x2 * e;
                den += e;
            }
            if den > 1e-300 {
                let ratio = num.sqrt() / (2f64.powi(q) * grid.fundamental() * den.sqrt());
                bmin = bmin.min(ratio);
                bmax = bmax.max(ratio);
            }
        }
    }
    if ensemble_size == 0 {
        bmin = 1.0;
        bmax = 1.0;
    }
    LpCheckReport {
        partition_max_error,
        quasi_orthogonality_max: quasi,
        bernstein_min: bmin,
        bernstein_max: bmax,
        ensemble_size,
        partition_ok: partition_max_error <= 1e-12,
        quasi_orthogonality_ok: quasi == 0.0,
        bernstein_ok: bmin >= 0.75 && bmax <= 8.0 / 3.0,
    }
}
