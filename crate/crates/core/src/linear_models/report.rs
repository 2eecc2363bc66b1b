//! Estimate reports and constant fitting shared by the linear checks.

use std::collections::BTreeMap;

use serde::Serialize;

/// Outcome of an a-priori estimate check on one run.
#[derive(Clone, Debug, Serialize)]
pub struct EstimateReport {
    pub name: String,
    /// Left-hand side at the final time.
    pub lhs: f64,
    /// Right-hand side terms at the final time, evaluated with `fitted_c`.
    pub rhs_components: BTreeMap<String, f64>,
    /// `lhs / sum(rhs_components)`.
    pub ratio: f64,
    /// Smallest constant for which the bound holds at every snapshot.
    pub fitted_c: f64,
    pub c_max: f64,
    pub pass: bool,
    pub extras: BTreeMap<String, f64>,
    pub flags: BTreeMap<String, bool>,
}

impl EstimateReport {
    pub fn rhs_total(&self) -> f64 {
        self.rhs_components.values().sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Smallest `C >= 0` with `lhs <= rhs(C)` for one snapshot, where `rhs` is
/// nondecreasing in `C`. Returns infinity when no finite constant works.
pub fn fit_single(lhs: f64, rhs: impl Fn(f64) -> f64) -> f64 {
    let holds = |c: f64| lhs <= rhs(c) * (1.0 + 1e-12);
    if holds(0.0) {
        return 0.0;
    }
    let mut hi = 1e-6;
    while !holds(hi) {
        hi *= 2.0;
        if hi > 1e15 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    hi
}

/// Smallest constant valid at every snapshot: the maximum of the per-snapshot fits.
pub fn fit_constant(lhs: &[f64], rhs: impl Fn(usize, f64) -> f64) -> f64 {
    lhs.iter()
        .enumerate()
        .map(|(i, &l)| fit_single(l, |c| rhs(i, c)))
        .fold(0.0, f64::max)
}
