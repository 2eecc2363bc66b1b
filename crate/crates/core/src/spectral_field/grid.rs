use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub const DEFAULT_DEALIAS_FRACTION: f64 = 2.0 / 3.0;

/// Periodic computational box `[0, L)^dim` sampled with `n` points per axis.
///
/// Cloning is cheap: the wavevector tables and FFT plans are shared.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    dim: usize,
    n: usize,
    period: f64,
    dealias_fraction: f64,
    modes: ModeTable,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Per-mode lookup tables, indexed like the row-major sample array.
pub(crate) struct ModeTable {
    /// Integer wavevector, components in `[-n/2, n/2)`.
    pub k: Vec<[i32; 3]>,
    /// Physical wavevector used by odd multipliers; Nyquist components are zeroed
    /// so that first-order symbols preserve Hermitian symmetry.
    pub xi: Vec<[f64; 3]>,
    /// True `|xi|` (physical units).
    pub xi_norm: Vec<f64>,
    /// `|k|` in units of the fundamental `2 pi / L`.
    pub radius: Vec<f64>,
    /// Spectral index of `-k` (Hermitian partner).
    pub partner: Vec<usize>,
    /// 2/3-rule retention mask.
    pub keep: Vec<bool>,
    /// Lowest dyadic block touching the mode (`i32::MIN` for the mean).
    pub lp_q0: Vec<i32>,
    /// Block weights for `lp_q0` and `lp_q0 + 1`.
    pub lp_w: Vec<[f64; 2]>,
}

impl Grid {
    /// Grid on the default torus `[0, 2 pi)^dim` with the 2/3 dealias rule.
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        Self::with_params(dim, n, 2.0 * PI, DEFAULT_DEALIAS_FRACTION)
    }

    pub fn with_params(dim: usize, n: usize, period: f64, dealias_fraction: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dimension must be 2 or 3, got {dim}")));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 16, got {n}"
            )));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidGrid(format!("period must be positive, got {period}")));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::InvalidGrid(format!(
                "dealias fraction must lie in (0, 1], got {dealias_fraction}"
            )));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let modes = ModeTable::build(dim, n, period, dealias_fraction);
        Ok(Self {
            inner: Arc::new(GridInner {
                dim,
                n,
                period,
                dealias_fraction,
                modes,
                forward,
                inverse,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn period(&self) -> f64 {
        self.inner.period
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.inner.dealias_fraction
    }

    /// Total number of samples, `n^dim`.
    pub fn len(&self) -> usize {
        self.inner.n.pow(self.inner.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Fundamental wavenumber `2 pi / L`.
    pub fn fundamental(&self) -> f64 {
        2.0 * PI / self.inner.period
    }

    /// Cell volume `(L/n)^dim`.
    pub fn cell_volume(&self) -> f64 {
        (self.inner.period / self.inner.n as f64).powi(self.inner.dim as i32)
    }

    /// Physical Nyquist radius `(n/2) * 2 pi / L`.
    pub fn nyquist(&self) -> f64 {
        self.inner.n as f64 / 2.0 * self.fundamental()
    }

    /// Default Friedrichs radius: Nyquist scaled by the dealias fraction.
    pub fn default_n_cut(&self) -> f64 {
        self.nyquist() * self.inner.dealias_fraction
    }

    /// Largest retained integer wavenumber per axis under the dealias rule.
    pub fn dealias_kmax(&self) -> i32 {
        (self.inner.dealias_fraction * self.inner.n as f64 / 2.0 + 1e-9).floor() as i32
    }

    /// Largest `|k|` present on the grid (corner of the spectral box).
    pub fn max_radius(&self) -> f64 {
        (self.inner.dim as f64).sqrt() * self.inner.n as f64 / 2.0
    }

    /// Lowest homogeneous dyadic index. Blocks are indexed by normalized radius
    /// `|k|`, whose smallest nonzero value is 1, so the first populated block is 0.
    pub fn q_min(&self) -> i32 {
        0
    }

    /// Highest dyadic index needed to cover every grid mode.
    pub fn q_max(&self) -> i32 {
        self.max_radius().log2().ceil() as i32
    }

    /// Physical coordinate of sample `idx`.
    pub fn coordinates(&self, idx: usize) -> [f64; 3] {
        let n = self.inner.n;
        let h = self.inner.period / n as f64;
        let mut out = [0.0; 3];
        let mut rem = idx;
        for axis in (0..self.inner.dim).rev() {
            out[axis] = (rem % n) as f64 * h;
            rem /= n;
        }
        out
    }

    pub(crate) fn modes(&self) -> &ModeTable {
        &self.inner.modes
    }

    pub(crate) fn forward_plan(&self) -> &Arc<dyn Fft<f64>> {
        &self.inner.forward
    }

    pub(crate) fn inverse_plan(&self) -> &Arc<dyn Fft<f64>> {
        &self.inner.inverse
    }

    /// Integer wavevector of spectral index `idx`.
    pub fn wavenumber(&self, idx: usize) -> [i32; 3] {
        self.inner.modes.k[idx]
    }

    /// Spectral index of an integer wavevector (components taken modulo `n`).
    pub fn index_of(&self, k: [i32; 3]) -> usize {
        let n = self.inner.n as i32;
        let mut idx = 0usize;
        for &kj in k.iter().take(self.inner.dim) {
            idx = idx * self.inner.n + kj.rem_euclid(n) as usize;
        }
        idx
    }

    /// Physical `|xi|` of spectral index `idx`.
    pub fn xi_norm(&self, idx: usize) -> f64 {
        self.inner.modes.xi_norm[idx]
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self == other
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.inner.dim == other.inner.dim
            && self.inner.n == other.inner.n
            && self.inner.period.to_bits() == other.inner.period.to_bits()
            && self.inner.dealias_fraction.to_bits() == other.inner.dealias_fraction.to_bits()
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.inner.dim)
            .field("n", &self.inner.n)
            .field("period", &self.inner.period)
            .field("dealias_fraction", &self.inner.dealias_fraction)
            .finish()
    }
}

impl ModeTable {
    fn build(dim: usize, n: usize, period: f64, frac: f64) -> Self {
        let len = n.pow(dim as u32);
        let k0 = 2.0 * PI / period;
        let half = (n / 2) as i32;
        let kmax = (frac * n as f64 / 2.0 + 1e-9).floor() as i32;
        let mut k = Vec::with_capacity(len);
        let mut xi = Vec::with_capacity(len);
        let mut xi_norm = Vec::with_capacity(len);
        let mut radius = Vec::with_capacity(len);
        let mut partner = Vec::with_capacity(len);
        let mut keep = Vec::with_capacity(len);
        let mut lp_q0 = Vec::with_capacity(len);
        let mut lp_w = Vec::with_capacity(len);
        for idx in 0..len {
            let mut kk = [0i32; 3];
            let mut rem = idx;
            for axis in (0..dim).rev() {
                let m = (rem % n) as i32;
                kk[axis] = if m < half { m } else { m - n as i32 };
                rem /= n;
            }
            let mut x = [0.0; 3];
            let mut r2 = 0.0;
            let mut kept = true;
            let mut p = 0usize;
            for axis in 0..dim {
                let kj = kk[axis];
                r2 += (kj as f64) * (kj as f64);
                x[axis] = if kj == -half { 0.0 } else { kj as f64 * k0 };
                kept &= kj.abs() <= kmax && kj != -half;
                p = p * n + (-kj).rem_euclid(n as i32) as usize;
            }
            let r = r2.sqrt();
            k.push(kk);
            xi.push(x);
            radius.push(r);
            xi_norm.push(r * k0);
            partner.push(p);
            keep.push(kept);
            let (q0, w) = super::dyadic::block_candidates(r);
            lp_q0.push(q0);
            lp_w.push(w);
        }
        Self {
            k,
            xi,
            xi_norm,
            radius,
            partner,
            keep,
            lp_q0,
            lp_w,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(1, 32).is_err());
        assert!(Grid::new(2, 8).is_err());
        assert!(Grid::new(2, 48).is_err());
        assert!(Grid::with_params(2, 32, -1.0, 0.5).is_err());
        assert!(Grid::with_params(2, 32, 1.0, 0.0).is_err());
    }

    #[test]
    fn wavenumbers_cover_symmetric_range() {
        let g = Grid::new(2, 16).unwrap();
        let ks: Vec<i32> = (0..16).map(|i| g.wavenumber(i)[1]).collect();
        assert_eq!(ks[0], 0);
        assert_eq!(ks[7], 7);
        assert_eq!(ks[8], -8);
        assert_eq!(ks[15], -1);
        for idx in 0..g.len() {
            assert_eq!(g.index_of(g.wavenumber(idx)), idx);
        }
    }

    #[test]
    fn partner_is_negated_wavevector() {
        let g = Grid::new(3, 16).unwrap();
        let m = g.modes();
        for idx in 0..g.len() {
            let k = m.k[idx];
            let p = m.partner[idx];
            let kp = m.k[p];
            for j in 0..3 {
                assert_eq!((k[j] + kp[j]).rem_euclid(16), 0);
            }
            assert_eq!(m.partner[p], idx);
        }
    }

    #[test]
    fn dyadic_range_covers_corner() {
        let g = Grid::new(2, 256).unwrap();
        assert_eq!(g.q_min(), 0);
        assert!(2f64.powi(g.q_max()) >= g.max_radius());
        assert_eq!(g.dealias_kmax(), 85);
    }
}
