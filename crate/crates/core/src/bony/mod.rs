//! Homogeneous paraproduct / remainder decomposition and an empirical
//! harness for the associated product estimates.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::besov::{norm_from_blocks, NormSpec};
use crate::error::{precondition, Error, Result};
use crate::spectral_field::dyadic::{block_spectrum, low_pass_spectrum};
use crate::spectral_field::multipliers::dealias_spectrum;
use crate::spectral_field::{field_block_norms, fields_of, random_field, Field, Grid, Spectrum};

fn check_pair(f: &Field, g: &Field) -> Result<()> {
    if f.grid() != g.grid() {
        return precondition("paraproduct operands live on different grids");
    }
    for (name, h) in [("first", f), ("second", g)] {
        if h.mean().abs() > 1e-12 * h.l2_norm() + 1e-300 {
            return precondition(format!("{name} operand must have zero mean"));
        }
    }
    Ok(())
}

/// Accumulates `sum_q A_q * B_q` pointwise, then transforms and dealiases.
fn sum_of_products(grid: &Grid, pairs: impl Iterator<Item = (Spectrum, Spectrum)>) -> Field {
    let mut acc = Field::zeros(grid);
    for (a, b) in pairs {
        if a.l2_norm() == 0.0 || b.l2_norm() == 0.0 {
            continue;
        }
        let phys = fields_of(&[&a, &b]);
        for ((o, x), y) in acc
            .values_mut()
            .iter_mut()
            .zip(phys[0].values())
            .zip(phys[1].values())
        {
            *o += x * y;
        }
    }
    dealias_spectrum(&acc.spectrum()).to_field()
}

/// `T_f g = sum_q S_{q-1} f * Delta_q g`.
pub fn paraproduct(f: &Field, g: &Field) -> Result<Field> {
    check_pair(f, g)?;
    Ok(paraproduct_unchecked(f, g))
}

fn paraproduct_unchecked(f: &Field, g: &Field) -> Field {
    let grid = f.grid();
    let (fs, gs) = (f.spectrum(), g.spectrum());
    let pairs =
        (grid.q_min()..=grid.q_max()).map(|q| (low_pass_spectrum(&fs, q - 1), block_spectrum(&gs, q)));
    sum_of_products(grid, pairs)
}

/// `R(f, g) = sum_{|p - q| <= 1} Delta_p f * Delta_q g`.
pub fn remainder(f: &Field, g: &Field) -> Result<Field> {
    check_pair(f, g)?;
    Ok(remainder_unchecked(f, g))
}

fn remainder_unchecked(f: &Field, g: &Field) -> Field {
    let grid = f.grid();
    let (fs, gs) = (f.spectrum(), g.spectrum());
    let pairs = (grid.q_min()..=grid.q_max()).map(|q| {
        let wide = &(&block_spectrum(&gs, q - 1) + &block_spectrum(&gs, q)) + &block_spectrum(&gs, q + 1);
        (block_spectrum(&fs, q), wide)
    });
    sum_of_products(grid, pairs)
}

/// Residual of `fg = T_f g + T_g f + R(f, g)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BonyResidual {
    pub residual: f64,
    /// False when `fg` vanished and the absolute residual is reported.
    pub relative: bool,
}

/// Compares the three Bony pieces with the dealiased pointwise product.
pub fn bony_reconstruct(f: &Field, g: &Field) -> Result<BonyResidual> {
    check_pair(f, g)?;
    let tfg = paraproduct_unchecked(f, g);
    let tgf = paraproduct_unchecked(g, f);
    let r = remainder_unchecked(f, g);
    let product = dealias_spectrum(&f.pointwise(g).spectrum()).to_field();
    let mut sum = &tfg + &tgf;
    sum.axpy(1.0, &r);
    let diff = (&sum - &product).l2_norm();
    let scale = product.l2_norm();
    Ok(if scale > 0.0 {
        BonyResidual {
            residual: diff / scale,
            relative: true,
        }
    } else {
        BonyResidual {
            residual: diff,
            relative: false,
        }
    })
}

/// The eight product estimates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateId {
    /// `|uv|_{Bdot^s} <= C(|u|_inf |v|_{Bdot^s} + |v|_inf |u|_{Bdot^s})`, `s > 0`.
    ProductLinf,
    /// `|uv|_{Bdot^{s+t-N/2}} <= C |u|_{Bdot^s} |v|_{Bdot^t}`, `s, t <= N/2`, `s + t > 0`.
    ProductBesov,
    /// `|T_u v|_{Bt^{s+t-N/2,r}} <= C |u|_{Bt^{s,r}} |v|_{Bdot^t}`, `s <= min(1 - 2/r + N/2, N/2)`.
    ParaHybridLeft,
    /// `|T_u v|_{Bt^{s+t-N/2,r}} <= C |u|_{Bdot^s} |v|_{Bt^{t,r}}`, `s <= N/2`.
    ParaHybridRight,
    /// `|R(u,v)|_{Bt^{s+t-N/2,r}} <= C |u|_{Bt^{s,r}} |v|_{Bdot^t}`, `s + t > max(0, 1 - 2/r)`.
    RemainderHybrid,
    /// `|T_u v|_{Bdot^{s+t-N/2}} <= C |u|_{Bt^{s,inf}} |v|_{Bt^{t,1}}`, `s <= N/2`.
    ParaMixedLeft,
    /// `|T_u v|_{Bdot^{s+t-N/2}} <= C |u|_{Bt^{s,1}} |v|_{Bt^{t,inf}}`, `s <= N/2 - 1`.
    ParaMixedRight,
    /// `|R(u,v)|_{Bdot^{s+t-N/2}} <= C |u|_{Bt^{s,inf}} |v|_{Bt^{t,1}}`, `s + t > 0`.
    RemainderMixed,
}

impl EstimateId {
    pub const ALL: [EstimateId; 8] = [
        EstimateId::ProductLinf,
        EstimateId::ProductBesov,
        EstimateId::ParaHybridLeft,
        EstimateId::ParaHybridRight,
        EstimateId::RemainderHybrid,
        EstimateId::ParaMixedLeft,
        EstimateId::ParaMixedRight,
        EstimateId::RemainderMixed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimateId::ProductLinf => "product_linf",
            EstimateId::ProductBesov => "product_besov",
            EstimateId::ParaHybridLeft => "para_hybrid_left",
            EstimateId::ParaHybridRight => "para_hybrid_right",
            EstimateId::RemainderHybrid => "remainder_hybrid",
            EstimateId::ParaMixedLeft => "para_mixed_left",
            EstimateId::ParaMixedRight => "para_mixed_right",
            EstimateId::RemainderMixed => "remainder_mixed",
        }
    }

    /// Index choice satisfying the side conditions in dimension `dim`.
    pub fn default_params(self, dim: usize) -> ProductParams {
        let h = dim as f64 / 2.0;
        let (s, t, r) = match self {
            EstimateId::ProductLinf => (h - 0.5, 0.0, 1.0),
            EstimateId::ProductBesov => (h - 0.25, h - 0.25, 1.0),
            EstimateId::ParaHybridLeft => (h - 0.5, h, 2.0),
            EstimateId::ParaHybridRight => (h, h - 0.5, f64::INFINITY),
            EstimateId::RemainderHybrid => (h - 0.5, h - 0.5, 1.0),
            EstimateId::ParaMixedLeft => (h, 0.0, f64::INFINITY),
            EstimateId::ParaMixedRight => (h - 1.0, h, f64::INFINITY),
            EstimateId::RemainderMixed => (h - 0.5, h - 0.5, f64::INFINITY),
        };
        ProductParams {
            s,
            t,
            r,
            mu: 1.0,
            dim,
        }
    }
}

impl fmt::Display for EstimateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimateId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        EstimateId::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::Config {
                key: "estimate".into(),
                message: format!("unknown estimate `{s}`"),
            })
    }
}

/// Indices of one estimate. For `ProductBesov`, `s` and `t` are the two
/// regularities; `ProductLinf` ignores `t`. `r` is used only by the hybrid
/// estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProductParams {
    pub s: f64,
    pub t: f64,
    pub r: f64,
    pub mu: f64,
    pub dim: usize,
}

impl ProductParams {
    /// Checks the side conditions of `id`, naming the violated one.
    pub fn validate(&self, id: EstimateId) -> Result<()> {
        let h = self.dim as f64 / 2.0;
        let (s, t, r) = (self.s, self.t, self.r);
        if !(self.mu > 0.0) {
            return precondition("mu must be positive");
        }
        if !(r >= 1.0) {
            return precondition("r must lie in [1, inf]");
        }
        let one_minus = if r.is_infinite() { 1.0 } else { 1.0 - 2.0 / r };
        let fail = |cond: &str| precondition(format!("{id}: side condition `{cond}` violated"));
        match id {
            EstimateId::ProductLinf if !(s > 0.0) => fail("s > 0"),
            EstimateId::ProductBesov if !(s <= h && t <= h) => fail("s1, s2 <= N/2"),
            EstimateId::ProductBesov if !(s + t > 0.0) => fail("s1 + s2 > 0"),
            EstimateId::ParaHybridLeft if !(s <= (one_minus + h).min(h)) => {
                fail("s <= min(1 - 2/r + N/2, N/2)")
            }
            EstimateId::ParaHybridRight if !(s <= h) => fail("s <= N/2"),
            EstimateId::RemainderHybrid if !(s + t > one_minus.max(0.0)) => {
                fail("s + t > max(0, 1 - 2/r)")
            }
            EstimateId::ParaMixedLeft if !(s <= h) => fail("s <= N/2"),
            EstimateId::ParaMixedRight if !(s <= h - 1.0) => fail("s <= N/2 - 1"),
            EstimateId::RemainderMixed if !(s + t > 0.0) => fail("s + t > 0"),
            _ => Ok(()),
        }
    }
}

/// Evaluates `(lhs, rhs)` of one estimate for one pair.
pub fn estimate_sides(id: EstimateId, p: &ProductParams, u: &Field, v: &Field) -> Result<(f64, f64)> {
    let h = p.dim as f64 / 2.0;
    let (s, t, r, mu) = (p.s, p.t, p.r, p.mu);
    let hom = |x: f64| NormSpec::homogeneous(x, 1.0);
    let hyb = |x: f64, rr: f64| NormSpec::hybrid(x, rr, mu);
    let bu = field_block_norms(u);
    let bv = field_block_norms(v);
    let n = |b: &crate::spectral_field::BlockNorms, spec: NormSpec| norm_from_blocks(b, &spec);
    let target = s + t - h;
    Ok(match id {
        EstimateId::ProductLinf => {
            let uv = dealias_spectrum(&u.pointwise(v).spectrum());
            let lhs = n(&field_block_norms(&uv.to_field()), hom(s));
            let rhs = u.max_abs() * n(&bv, hom(s)) + v.max_abs() * n(&bu, hom(s));
            (lhs, rhs)
        }
        EstimateId::ProductBesov => {
            let uv = dealias_spectrum(&u.pointwise(v).spectrum()).to_field();
            let lhs = n(&field_block_norms(&uv), hom(target));
            (lhs, n(&bu, hom(s)) * n(&bv, hom(t)))
        }
        EstimateId::ParaHybridLeft => {
            let tp = paraproduct(u, v)?;
            let lhs = n(&field_block_norms(&tp), hyb(target, r));
            (lhs, n(&bu, hyb(s, r)) * n(&bv, hom(t)))
        }
        EstimateId::ParaHybridRight => {
            let tp = paraproduct(u, v)?;
            let lhs = n(&field_block_norms(&tp), hyb(target, r));
            (lhs, n(&bu, hom(s)) * n(&bv, hyb(t, r)))
        }
        EstimateId::RemainderHybrid => {
            let rm = remainder(u, v)?;
            let lhs = n(&field_block_norms(&rm), hyb(target, r));
            (lhs, n(&bu, hyb(s, r)) * n(&bv, hom(t)))
        }
        EstimateId::ParaMixedLeft => {
            let tp = paraproduct(u, v)?;
            let lhs = n(&field_block_norms(&tp), hom(target));
            (lhs, n(&bu, hyb(s, f64::INFINITY)) * n(&bv, hyb(t, 1.0)))
        }
        EstimateId::ParaMixedRight => {
            let tp = paraproduct(u, v)?;
            let lhs = n(&field_block_norms(&tp), hom(target));
            (lhs, n(&bu, hyb(s, 1.0)) * n(&bv, hyb(t, f64::INFINITY)))
        }
        EstimateId::RemainderMixed => {
            let rm = remainder(u, v)?;
            let lhs = n(&field_block_norms(&rm), hom(target));
            (lhs, n(&bu, hyb(s, f64::INFINITY)) * n(&bv, hyb(t, 1.0)))
        }
    })
}

/// Seeded ensemble of mean-zero field pairs.
#[derive(Clone, Debug)]
pub struct Ensemble {
    pub grid: Grid,
    pub seed: u64,
    pub members: usize,
    /// Spectral slope exponent: amplitudes scale like `|k|^{-slope}`.
    pub slope: f64,
    /// Multiplies every member (0 gives the zero ensemble).
    pub amplitude: f64,
}

impl Ensemble {
    pub fn new(grid: &Grid, seed: u64, members: usize) -> Self {
        Self {
            grid: grid.clone(),
            seed,
            members,
            slope: (grid.dim() as f64 + 1.0) / 2.0,
            amplitude: 1.0,
        }
    }

    /// Seed of member `i`.
    pub fn member_seed(&self, i: usize) -> u64 {
        self.seed.wrapping_mul(1_000_003).wrapping_add(i as u64)
    }

    /// The `(u, v)` pair of member `i`.
    pub fn pair(&self, i: usize) -> (Field, Field) {
        let base = self.member_seed(i);
        let u = random_field(&self.grid, base.wrapping_mul(2), self.slope, None);
        let v = random_field(&self.grid, base.wrapping_mul(2).wrapping_add(1), self.slope, None);
        (u.scaled(self.amplitude), v.scaled(self.amplitude))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProductSample {
    pub seed: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProductEstimateReport {
    pub estimate_id: EstimateId,
    pub parameters: ProductParams,
    pub samples: Vec<ProductSample>,
    pub skipped: usize,
    pub max_ratio: f64,
    pub median_ratio: f64,
    pub c_max: f64,
    pub pass: bool,
}

impl ProductEstimateReport {
    pub fn ratios(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.ratio).collect()
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("estimate_id,seed,lhs,rhs,ratio\n");
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e}",
                self.estimate_id, s.seed, s.lhs, s.rhs, s.ratio
            );
        }
        out
    }
}

/// Runs one estimate over an ensemble and records `lhs / rhs` per member.
pub fn product_estimate_harness(
    id: EstimateId,
    params: &ProductParams,
    ensemble: &Ensemble,
    c_max: f64,
) -> Result<ProductEstimateReport> {
    params.validate(id)?;
    if params.dim != ensemble.grid.dim() {
        return precondition("parameter dimension differs from the ensemble grid");
    }
    let mut samples = Vec::with_capacity(ensemble.members);
    let mut skipped = 0;
    for i in 0..ensemble.members {
        let (u, v) = ensemble.pair(i);
        let (lhs, rhs) = estimate_sides(id, params, &u, &v)?;
        if !(rhs > 0.0) {
            skipped += 1;
            continue;
        }
        samples.push(ProductSample {
            seed: ensemble.member_seed(i),
            lhs,
            rhs,
            ratio: lhs / rhs,
        });
    }
    let mut sorted: Vec<f64> = samples.iter().map(|s| s.ratio).collect();
    sorted.sort_by(f64::total_cmp);
    let max_ratio = sorted.last().copied().unwrap_or(0.0);
    let median_ratio = if sorted.is_empty() {
        0.0
    } else if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };
    let finite = sorted.iter().all(|r| r.is_finite() && *r >= 0.0);
    Ok(ProductEstimateReport {
        estimate_id: id,
        parameters: *params,
        samples,
        skipped,
        max_ratio,
        median_ratio,
        c_max,
        pass: finite && max_ratio <= c_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mode(g: &Grid, k: [i32; 3]) -> Field {
        Spectrum::cosine_mode(g, k, 0.5).to_field()
    }

    #[test]
    fn separated_modes() {
        let g = Grid::new(2, 64).unwrap();
        // |k| = 1 (block 0) and |k| = 10 (block 3).
        let f = mode(&g, [1, 0, 0]);
        let h = mode(&g, [6, 8, 0]);
        let tfh = paraproduct(&f, &h).unwrap();
        let fh = f.pointwise(&h);
        assert!((&tfh - &fh).max_abs() < 1e-12);
        assert!(paraproduct(&h, &f).unwrap().max_abs() < 1e-14);
        assert!(remainder(&f, &h).unwrap().max_abs() < 1e-14);
        let res = bony_reconstruct(&f, &h).unwrap();
        assert!(res.relative && res.residual < 1e-12);
    }

    #[test]
    fn zero_operand() {
        let g = Grid::new(2, 32).unwrap();
        let z = Field::zeros(&g);
        let f = random_field(&g, 1, 1.5, None);
        assert_eq!(paraproduct(&z, &f).unwrap().max_abs(), 0.0);
        assert_eq!(remainder(&z, &f).unwrap().max_abs(), 0.0);
        let res = bony_reconstruct(&z, &f).unwrap();
        assert!(!res.relative);
        assert_eq!(res.residual, 0.0);
    }

    #[test]
    fn remainder_of_single_block_field() {
        let g = Grid::new(2, 64).unwrap();
        let f = random_field(&g, 4, 0.0, Some((8.0, 12.0)));
        let rff = remainder(&f, &f).unwrap();
        let tff = paraproduct(&f, &f).unwrap();
        let oracle = crate::spectral_field::dealias(&f.pointwise(&f));
        let err = (&(&rff + &tff.scaled(2.0)) - &oracle).l2_norm() / oracle.l2_norm();
        assert!(err < 1e-12);
    }

    #[test]
    fn rejects_mean_and_grid_mismatch() {
        let g = Grid::new(2, 16).unwrap();
        let g2 = Grid::new(2, 32).unwrap();
        let c = Field::constant(&g, 1.0);
        assert!(paraproduct(&c, &c).is_err());
        assert!(paraproduct(&Field::zeros(&g), &Field::zeros(&g2)).is_err());
    }

    #[test]
    fn side_conditions_are_named() {
        let p = ProductParams {
            s: 1.5,
            t: 0.0,
            r: 1.0,
            mu: 1.0,
            dim: 2,
        };
        let err = p.validate(EstimateId::ParaMixedRight).unwrap_err().to_string();
        assert!(err.contains("s <= N/2 - 1"));
        for id in EstimateId::ALL {
            id.default_params(2).validate(id).unwrap();
            id.default_params(3).validate(id).unwrap();
            assert_eq!(id.as_str().parse::<EstimateId>().unwrap(), id);
        }
    }

    #[test]
    fn zero_ensemble_gives_empty_report() {
        let g = Grid::new(2, 16).unwrap();
        let mut e = Ensemble::new(&g, 1, 3);
        e.amplitude = 0.0;
        let id = EstimateId::ParaMixedLeft;
        let rep = product_estimate_harness(id, &id.default_params(2), &e, 1e3).unwrap();
        assert!(rep.samples.is_empty());
        assert_eq!(rep.skipped, 3);
        assert_eq!(rep.max_ratio, 0.0);
    }

    #[test]
    fn single_block_one_term_ratio() {
        let g = Grid::new(2, 64).unwrap();
        let id = EstimateId::ParaMixedLeft;
        let p = ProductParams {
            s: 1.0,
            t: 0.0,
            r: f64::INFINITY,
            mu: 1.0,
            dim: 2,
        };
        // u on block 0 plateau (|k| = 1), v on block 3 plateau (|k| = 10).
        let u = mode(&g, [1, 0, 0]);
        let v = mode(&g, [6, 8, 0]);
        let (lhs, rhs) = estimate_sides(id, &p, &u, &v).unwrap();
        // T_u v = uv has |k| in {sqrt(89), sqrt(113)}, both on the block 3 plateau,
        // and the target regularity is 0.
        let lhs_exact = u.pointwise(&v).l2_norm();
        // Both hybrid weights equal 1 at mu = 1 for blocks 0 and 3.
        let rhs_exact = u.l2_norm() * v.l2_norm();
        assert!((lhs - lhs_exact).abs() < 1e-12 * lhs_exact);
        assert!((rhs - rhs_exact).abs() < 1e-12 * rhs_exact);
    }
}
