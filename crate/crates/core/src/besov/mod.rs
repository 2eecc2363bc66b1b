//! Besov, hybrid Besov and Chemin-Lerner time-space norms (Lebesgue index 2).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::spectral_field::{block_norms, BlockNorms, Field, Spectrum, TensorField, VectorField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Nonhomogeneous,
    Homogeneous,
    Hybrid,
}

/// Selects a norm: regularity `s`, summation index `r` (`f64::INFINITY`
/// allowed), viscosity weight `mu` (hybrid only) and time exponent `rho`
/// (time-space norms only).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub s: f64,
    pub r: f64,
    pub mu: f64,
    pub flavor: Flavor,
    pub rho: Option<f64>,
}

impl NormSpec {
    pub fn homogeneous(s: f64, r: f64) -> Self {
        Self {
            s,
            r,
            mu: 1.0,
            flavor: Flavor::Homogeneous,
            rho: None,
        }
    }

    pub fn nonhomogeneous(s: f64, r: f64) -> Self {
        Self {
            flavor: Flavor::Nonhomogeneous,
            ..Self::homogeneous(s, r)
        }
    }

    pub fn hybrid(s: f64, r: f64, mu: f64) -> Self {
        Self {
            mu,
            flavor: Flavor::Hybrid,
            ..Self::homogeneous(s, r)
        }
    }

    pub fn with_rho(self, rho: f64) -> Self {
        Self {
            rho: Some(rho),
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r >= 1.0) {
            return precondition(format!("summation index r must be >= 1, got {}", self.r));
        }
        if !self.s.is_finite() {
            return precondition("regularity s must be finite");
        }
        if self.flavor == Flavor::Hybrid && !(self.mu > 0.0) {
            return precondition(format!("hybrid norms need mu > 0, got {}", self.mu));
        }
        if let Some(rho) = self.rho {
            if !(rho >= 1.0) {
                return precondition(format!("time exponent rho must be >= 1, got {rho}"));
            }
        }
        Ok(())
    }

    /// Short identifier used in CSV output.
    pub fn id(&self) -> String {
        let base = match self.flavor {
            Flavor::Nonhomogeneous => "B",
            Flavor::Homogeneous => "Bdot",
            Flavor::Hybrid => "Btilde",
        };
        match self.rho {
            Some(rho) => format!("Ltilde{}({base})", fmt_ext(rho)),
            None => base.to_string(),
        }
    }
}

fn fmt_ext(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x}")
    }
}

/// Hybrid weight `max(mu, 2^{-q})^{1 - 2/r}`.
pub fn hybrid_weight(q: i32, mu: f64, r: f64) -> f64 {
    let exponent = if r.is_infinite() { 1.0 } else { 1.0 - 2.0 / r };
    mu.max(2f64.powi(-q)).powf(exponent)
}

/// `(sum_q (2^{qs} x_q)^r)^{1/r}` with the `r = inf` supremum convention.
pub fn lr_sum(terms: impl IntoIterator<Item = (i32, f64)>, s: f64, r: f64) -> f64 {
    let weighted = terms.into_iter().map(|(q, x)| 2f64.powf(q as f64 * s) * x);
    if r.is_infinite() {
        weighted.fold(0.0, f64::max)
    } else if r == 1.0 {
        weighted.sum()
    } else {
        weighted.map(|v| v.powf(r)).sum::<f64>().powf(1.0 / r)
    }
}

/// Hybrid block sum `sum_q 2^{qs} max(mu, 2^{-q})^{1-2/r} x_q`, an `l^1` sum for
/// every `r`.
pub fn hybrid_sum(terms: impl IntoIterator<Item = (i32, f64)>, s: f64, r: f64, mu: f64) -> f64 {
    terms
        .into_iter()
        .map(|(q, x)| 2f64.powf(q as f64 * s) * hybrid_weight(q, mu, r) * x)
        .sum()
}

/// Norm from precomputed block norms. Homogeneous and hybrid flavors ignore
/// the low block; the nonhomogeneous flavor treats it as block `q_min - 1`.
pub fn norm_from_blocks(b: &BlockNorms, spec: &NormSpec) -> f64 {
    match spec.flavor {
        Flavor::Homogeneous => lr_sum(b.iter(), spec.s, spec.r),
        Flavor::Nonhomogeneous => lr_sum(
            std::iter::once((b.q_min - 1, b.low)).chain(b.iter()),
            spec.s,
            spec.r,
        ),
        Flavor::Hybrid => hybrid_sum(b.iter(), spec.s, spec.r, spec.mu),
    }
}

fn check_mean(b: &BlockNorms, spec: &NormSpec) -> Result<()> {
    if spec.flavor == Flavor::Nonhomogeneous {
        return Ok(());
    }
    let total = (b.low * b.low + b.blocks.iter().map(|v| v * v).sum::<f64>()).sqrt();
    if b.low > 1e-12 * total + 1e-300 {
        return Err(Error::Precondition(format!(
            "{:?} norm needs a mean-zero field (mean block {:.3e})",
            spec.flavor, b.low
        )));
    }
    Ok(())
}

/// Anything with Littlewood-Paley block norms (Euclidean over components).
pub trait HasBlocks {
    fn blocks(&self) -> BlockNorms;
}

impl HasBlocks for Field {
    fn blocks(&self) -> BlockNorms {
        block_norms(&[&self.spectrum()])
    }
}

impl HasBlocks for Spectrum {
    fn blocks(&self) -> BlockNorms {
        block_norms(&[self])
    }
}

impl HasBlocks for [Spectrum] {
    fn blocks(&self) -> BlockNorms {
        let refs: Vec<&Spectrum> = self.iter().collect();
        block_norms(&refs)
    }
}

impl HasBlocks for Vec<Spectrum> {
    fn blocks(&self) -> BlockNorms {
        self.as_slice().blocks()
    }
}

impl HasBlocks for VectorField {
    fn blocks(&self) -> BlockNorms {
        self.spectra().blocks()
    }
}

impl HasBlocks for TensorField {
    fn blocks(&self) -> BlockNorms {
        self.spectra().blocks()
    }
}

impl HasBlocks for BlockNorms {
    fn blocks(&self) -> BlockNorms {
        self.clone()
    }
}

/// Besov norm `B^s_{2,r}` (nonhomogeneous) or `Bdot^s_{2,r}` (homogeneous).
pub fn besov_norm<F: HasBlocks + ?Sized>(f: &F, spec: &NormSpec) -> Result<f64> {
    spec.validate()?;
    if spec.flavor == Flavor::Hybrid {
        return precondition("besov_norm takes a homogeneous or nonhomogeneous spec");
    }
    let b = f.blocks();
    check_mean(&b, spec)?;
    Ok(norm_from_blocks(&b, spec))
}

/// Hybrid norm `sum_q 2^{qs} max(mu, 2^{-q})^{1-2/r} ||Delta_q f||`.
pub fn hybrid_norm<F: HasBlocks + ?Sized>(f: &F, spec: &NormSpec) -> Result<f64> {
    spec.validate()?;
    if spec.flavor != Flavor::Hybrid {
        return precondition("hybrid_norm takes a hybrid spec");
    }
    let b = f.blocks();
    check_mean(&b, spec)?;
    Ok(norm_from_blocks(&b, spec))
}

/// Snapshots at increasing times on one grid.
#[derive(Clone, Debug)]
pub struct TimeSeries<T> {
    pub times: Vec<f64>,
    pub snapshots: Vec<T>,
}

impl<T> TimeSeries<T> {
    pub fn new(times: Vec<f64>, snapshots: Vec<T>) -> Result<Self> {
        if times.len() != snapshots.len() {
            return precondition("times and snapshots differ in length");
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return precondition("timestamps must increase strictly");
        }
        Ok(Self { times, snapshots })
    }

    pub fn empty() -> Self {
        Self {
            times: Vec::new(),
            snapshots: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, snapshot: T) {
        debug_assert!(self.times.last().is_none_or(|&last| t > last));
        self.times.push(t);
        self.snapshots.push(snapshot);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&T> {
        self.snapshots.last()
    }

    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Prefix up to and including index `end`.
    pub fn prefix(&self, end: usize) -> TimeSeries<T>
    where
        T: Clone,
    {
        TimeSeries {
            times: self.times[..=end].to_vec(),
            snapshots: self.snapshots[..=end].to_vec(),
        }
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> TimeSeries<U> {
        TimeSeries {
            times: self.times.clone(),
            snapshots: self.snapshots.iter().map(f).collect(),
        }
    }
}

/// Linear combination used for piecewise-linear interpolation in time.
pub trait Interpolate: Clone {
    /// `(1 - w) * self + w * other`
    fn lerp(&self, other: &Self, w: f64) -> Self;
}

impl Interpolate for Field {
    fn lerp(&self, other: &Self, w: f64) -> Self {
        self.zip_with(other, |a, b| (1.0 - w) * a + w * b)
    }
}

impl Interpolate for VectorField {
    fn lerp(&self, other: &Self, w: f64) -> Self {
        let comps = self
            .components()
            .iter()
            .zip(other.components())
            .map(|(a, b)| a.lerp(b, w))
            .collect();
        VectorField::new(comps).expect("components share a grid")
    }
}

impl Interpolate for TensorField {
    fn lerp(&self, other: &Self, w: f64) -> Self {
        let comps = self
            .components()
            .iter()
            .zip(other.components())
            .map(|(a, b)| a.lerp(b, w))
            .collect();
        TensorField::new(comps).expect("components share a grid")
    }
}

impl<T: Interpolate> TimeSeries<T> {
    /// Piecewise-linear value at `t`, clamped to the stored range.
    pub fn at(&self, t: f64) -> T {
        let n = self.times.len();
        assert!(n > 0, "empty time series");
        if t <= self.times[0] {
            return self.snapshots[0].clone();
        }
        if t >= self.times[n - 1] {
            return self.snapshots[n - 1].clone();
        }
        let i = self.times.partition_point(|&x| x <= t);
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        self.snapshots[i - 1].lerp(&self.snapshots[i], (t - t0) / (t1 - t0))
    }
}

/// Trapezoidal `(int |x(t)|^rho dt)^{1/rho}`, or the supremum for `rho = inf`.
pub fn time_norm(times: &[f64], values: &[f64], rho: f64) -> f64 {
    if rho.is_infinite() {
        return values.iter().copied().fold(0.0, f64::max);
    }
    let mut acc = 0.0;
    for i in 1..times.len() {
        let dt = times[i] - times[i - 1];
        acc += 0.5 * dt * (values[i - 1].powf(rho) + values[i].powf(rho));
    }
    acc.powf(1.0 / rho)
}

/// Chemin-Lerner norm from block-norm histories.
pub fn time_space_norm_blocks(times: &[f64], blocks: &[BlockNorms], spec: &NormSpec) -> Result<f64> {
    spec.validate()?;
    let Some(rho) = spec.rho else {
        return precondition("time-space norm needs rho");
    };
    if blocks.is_empty() {
        return Ok(0.0);
    }
    if rho.is_finite() && blocks.len() < 2 {
        return precondition("time integration needs at least two snapshots");
    }
    let q_min = blocks[0].q_min;
    let nq = blocks[0].blocks.len();
    let mut per_block = Vec::with_capacity(nq);
    let mut hist = vec![0.0; blocks.len()];
    for i in 0..nq {
        for (h, b) in hist.iter_mut().zip(blocks) {
            *h = b.blocks[i];
        }
        per_block.push(time_norm(times, &hist, rho));
    }
    for (h, b) in hist.iter_mut().zip(blocks) {
        *h = b.low;
    }
    let low = time_norm(times, &hist, rho);
    let folded = BlockNorms {
        q_min,
        low,
        blocks: per_block,
    };
    Ok(norm_from_blocks(&folded, spec))
}

/// Chemin-Lerner norm over every prefix `[t_0, t_i]` of the history, in one
/// pass. For finite `rho` the single-snapshot prefix has norm 0.
pub fn running_time_space_norm(times: &[f64], blocks: &[BlockNorms], spec: &NormSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let Some(rho) = spec.rho else {
        return precondition("time-space norm needs rho");
    };
    let Some(first) = blocks.first() else {
        return Ok(Vec::new());
    };
    let nq = first.blocks.len();
    // Per-block running sup or running integral of the rho-th power; slot nq is the low block.
    let mut acc = vec![0.0_f64; nq + 1];
    let value = |b: &BlockNorms, i: usize| if i == nq { b.low } else { b.blocks[i] };
    let mut out = Vec::with_capacity(blocks.len());
    for (n, b) in blocks.iter().enumerate() {
        for (i, slot) in acc.iter_mut().enumerate() {
            if rho.is_infinite() {
                *slot = slot.max(value(b, i));
            } else if n > 0 {
                let dt = times[n] - times[n - 1];
                *slot += 0.5 * dt * (value(&blocks[n - 1], i).powf(rho) + value(b, i).powf(rho));
            }
        }
        let folded = BlockNorms {
            q_min: first.q_min,
            low: if rho.is_infinite() { acc[nq] } else { acc[nq].powf(1.0 / rho) },
            blocks: acc[..nq]
                .iter()
                .map(|&v| if rho.is_infinite() { v } else { v.powf(1.0 / rho) })
                .collect(),
        };
        out.push(norm_from_blocks(&folded, spec));
    }
    Ok(out)
}

/// Running trapezoidal integral `int_0^{t_i} x dt`.
pub fn running_integral(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for i in 0..values.len() {
        if i > 0 {
            acc += 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
        }
        out.push(acc);
    }
    out
}

/// `Ltilde^rho_T(B^s_{2,r})` over a series.
pub fn time_space_norm<T: HasBlocks>(series: &TimeSeries<T>, spec: &NormSpec) -> Result<f64> {
    let blocks: Vec<BlockNorms> = series.snapshots.iter().map(HasBlocks::blocks).collect();
    time_space_norm_blocks(&series.times, &blocks, spec)
}

/// One CSV row `(norm_id, s, r, mu, rho, value)`.
#[derive(Clone, Debug)]
pub struct NormRow {
    pub norm_id: String,
    pub spec: NormSpec,
    pub value: f64,
}

pub const NORM_CSV_HEADER: &str = "norm_id,s,r,mu,rho,value";

pub fn norm_csv(rows: &[NormRow]) -> String {
    let mut out = String::from(NORM_CSV_HEADER);
    out.push('\n');
    for row in rows {
        let rho = row.spec.rho.map(fmt_ext).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{:.16e},{},{:.16e},{},{:.16e}",
            row.norm_id,
            row.spec.s,
            fmt_ext(row.spec.r),
            row.spec.mu,
            rho,
            row.value
        );
    }
    out
}
