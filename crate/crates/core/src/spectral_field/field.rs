use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::fft;
use super::grid::Grid;
use crate::error::{Error, Result};

/// Real scalar field sampled on a [`Grid`], row-major (axis 0 slowest).
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

/// Fourier coefficients of a real field, indexed like [`Field`] samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    coefs: Vec<Complex64>,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![value; grid.len()],
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Precondition(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.coordinates(i))).collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum {
            grid: self.grid.clone(),
            coefs: fft::forward_real(&self.grid, &self.values),
        }
    }

    /// `L^2` norm over the torus.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.cell_volume() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// `L^2` inner product over the torus.
    pub fn inner(&self, other: &Field) -> f64 {
        self.grid.cell_volume()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Raw pointwise product on the grid (no dealiasing).
    pub fn pointwise(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        debug_assert!(self.grid == other.grid);
        Field {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: f64, other: &Field) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }
}

impl Spectrum {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            coefs: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn from_coefs(grid: &Grid, coefs: Vec<Complex64>) -> Result<Self> {
        if coefs.len() != grid.len() {
            return Err(Error::Precondition(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coefs.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            coefs,
        })
    }

    pub(crate) fn from_raw(grid: &Grid, coefs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coefs.len(), grid.len());
        Self {
            grid: grid.clone(),
            coefs,
        }
    }

    /// Single Fourier mode `amplitude * e^{i k.x}` plus its conjugate partner,
    /// i.e. the real field `2 * amplitude * cos(k.x)` for real amplitude.
    pub fn cosine_mode(grid: &Grid, k: [i32; 3], amplitude: f64) -> Self {
        let mut s = Self::zeros(grid);
        let scale = grid.period().powf(grid.dim() as f64 / 2.0);
        let i = grid.index_of(k);
        let j = grid.index_of([-k[0], -k[1], -k[2]]);
        s.coefs[i] += Complex64::new(amplitude * scale, 0.0);
        s.coefs[j] += Complex64::new(amplitude * scale, 0.0);
        s
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefs(&self) -> &[Complex64] {
        &self.coefs
    }

    pub fn coefs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coefs
    }

    pub fn into_coefs(self) -> Vec<Complex64> {
        self.coefs
    }

    pub fn to_field(&self) -> Field {
        Field {
            grid: self.grid.clone(),
            values: fft::inverse_real(&self.grid, &self.coefs),
        }
    }

    /// `L^2` norm via Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.coefs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Mean value of the physical field.
    pub fn mean(&self) -> f64 {
        self.coefs[0].re / self.grid.period().powf(self.grid.dim() as f64 / 2.0)
    }

    /// Multiplies every coefficient by a per-mode factor.
    pub fn map_modes(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Spectrum {
        Spectrum {
            grid: self.grid.clone(),
            coefs: self
                .coefs
                .iter()
                .enumerate()
                .map(|(i, &c)| f(i, c))
                .collect(),
        }
    }

    pub fn scale_by(&self, real_symbol: impl Fn(usize) -> f64) -> Spectrum {
        self.map_modes(|i, c| c * real_symbol(i))
    }

    pub fn scaled(&self, c: f64) -> Spectrum {
        self.map_modes(|_, z| z * c)
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: f64, other: &Spectrum) {
        for (a, b) in self.coefs.iter_mut().zip(&other.coefs) {
            *a += b * c;
        }
    }

    /// Largest `|coef(-k) - conj(coef(k))|` relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let partner = &self.grid.modes().partner;
        let peak = self.coefs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        if peak == 0.0 {
            return 0.0;
        }
        let worst = self
            .coefs
            .iter()
            .enumerate()
            .map(|(i, c)| (self.coefs[partner[i]] - c.conj()).norm())
            .fold(0.0f64, f64::max);
        worst / peak
    }
}

macro_rules! impl_linear_ops {
    ($ty:ident, $buf:ident) => {
        impl Add for &$ty {
            type Output = $ty;
            fn add(self, rhs: &$ty) -> $ty {
                debug_assert!(self.grid == rhs.grid);
                $ty {
                    grid: self.grid.clone(),
                    $buf: self.$buf.iter().zip(&rhs.$buf).map(|(a, b)| a + b).collect(),
                }
            }
        }
        impl Sub for &$ty {
            type Output = $ty;
            fn sub(self, rhs: &$ty) -> $ty {
                debug_assert!(self.grid == rhs.grid);
                $ty {
                    grid: self.grid.clone(),
                    $buf: self.$buf.iter().zip(&rhs.$buf).map(|(a, b)| a - b).collect(),
                }
            }
        }
        impl Neg for &$ty {
            type Output = $ty;
            fn neg(self) -> $ty {
                $ty {
                    grid: self.grid.clone(),
                    $buf: self.$buf.iter().map(|a| -a).collect(),
                }
            }
        }
        impl Mul<f64> for &$ty {
            type Output = $ty;
            fn mul(self, c: f64) -> $ty {
                $ty {
                    grid: self.grid.clone(),
                    $buf: self.$buf.iter().map(|a| a * c).collect(),
                }
            }
        }
    };
}

impl_linear_ops!(Field, values);
impl_linear_ops!(Spectrum, coefs);

/// `dim` scalar components on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    components: Vec<Field>,
}

/// `dim x dim` components, row-major: entry `(i, j)` at `i * dim + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorField {
    components: Vec<Field>,
}

fn check_components(components: &[Field], expected: usize) -> Result<()> {
    if components.len() != expected {
        return Err(Error::Precondition(format!(
            "expected {expected} components, got {}",
            components.len()
        )));
    }
    let grid = components[0].grid();
    if components.iter().any(|c| c.grid() != grid) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

impl VectorField {
    pub fn new(components: Vec<Field>) -> Result<Self> {
        let dim = components.first().map(|c| c.grid().dim()).unwrap_or(0);
        if dim == 0 {
            return Err(Error::Precondition("vector field needs components".into()));
        }
        check_components(&components, dim)?;
        Ok(Self { components })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            components: (0..grid.dim()).map(|_| Field::zeros(grid)).collect(),
        }
    }

    pub fn from_spectra(spectra: &[Spectrum]) -> Self {
        let grid = spectra[0].grid();
        let refs: Vec<&[Complex64]> = spectra.iter().map(|s| s.coefs()).collect();
        let components = fft::inverse_batch(grid, &refs)
            .into_iter()
            .map(|values| Field {
                grid: grid.clone(),
                values,
            })
            .collect();
        Self { components }
    }

    pub fn grid(&self) -> &Grid {
        self.components[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Field] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Field {
        &self.components[i]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut Field {
        &mut self.components[i]
    }

    pub fn spectra(&self) -> Vec<Spectrum> {
        spectra_of(&self.components)
    }

    pub fn l2_norm(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.l2_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Pointwise Euclidean maximum.
    pub fn max_abs(&self) -> f64 {
        let len = self.grid().len();
        (0..len)
            .map(|p| {
                self.components
                    .iter()
                    .map(|c| c.values()[p].powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            components: self.components.iter().map(|f| f.scaled(c)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl TensorField {
    pub fn new(components: Vec<Field>) -> Result<Self> {
        let dim = components.first().map(|c| c.grid().dim()).unwrap_or(0);
        if dim == 0 {
            return Err(Error::Precondition("tensor field needs components".into()));
        }
        check_components(&components, dim * dim)?;
        Ok(Self { components })
    }

    pub fn zeros(grid: &Grid) -> Self {
        let d = grid.dim();
        Self {
            components: (0..d * d).map(|_| Field::zeros(grid)).collect(),
        }
    }

    pub fn from_spectra(spectra: &[Spectrum]) -> Self {
        let v = VectorField::from_spectra(spectra);
        Self {
            components: v.components,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.components[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.grid().dim()
    }

    pub fn components(&self) -> &[Field] {
        &self.components
    }

    pub fn get(&self, i: usize, j: usize) -> &Field {
        &self.components[i * self.dim() + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut Field {
        let d = self.dim();
        &mut self.components[i * d + j]
    }

    pub fn spectra(&self) -> Vec<Spectrum> {
        spectra_of(&self.components)
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim();
        let mut components = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                components.push(self.get(j, i).clone());
            }
        }
        Self { components }
    }

    pub fn l2_norm(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.l2_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().map(Field::max_abs).fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            components: self.components.iter().map(|f| f.scaled(c)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Forward transforms of several fields, paired two per complex FFT.
pub fn spectra_of(fields: &[Field]) -> Vec<Spectrum> {
    if fields.is_empty() {
        return Vec::new();
    }
    let grid = fields[0].grid();
    let refs: Vec<&[f64]> = fields.iter().map(|f| f.values()).collect();
    fft::forward_batch(grid, &refs)
        .into_iter()
        .map(|coefs| Spectrum::from_raw(grid, coefs))
        .collect()
}

/// Inverse transforms of several spectra, paired two per complex FFT.
pub fn fields_of(spectra: &[&Spectrum]) -> Vec<Field> {
    if spectra.is_empty() {
        return Vec::new();
    }
    let grid = spectra[0].grid();
    let refs: Vec<&[Complex64]> = spectra.iter().map(|s| s.coefs()).collect();
    fft::inverse_batch(grid, &refs)
        .into_iter()
        .map(|values| Field {
            grid: grid.clone(),
            values,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: &Grid, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        Field::from_values(grid, values).unwrap()
    }

    #[test]
    fn round_trip_and_hermitian_symmetry() {
        for (dim, n) in [(2, 32), (3, 16)] {
            let g = Grid::new(dim, n).unwrap();
            let f = random_field(&g, 7);
            let s = f.spectrum();
            assert!(s.hermitian_defect() < 1e-12);
            let back = s.to_field();
            let err = (&back - &f).l2_norm() / f.l2_norm();
            assert!(err < 1e-12, "round trip error {err}");
        }
    }

    #[test]
    fn parseval_with_unit_constant() {
        let g = Grid::with_params(2, 32, 3.0, 2.0 / 3.0).unwrap();
        let f = random_field(&g, 11);
        let phys = f.l2_norm();
        let spec = f.spectrum().l2_norm();
        assert!((phys - spec).abs() / phys < 1e-12);
    }

    #[test]
    fn mean_is_zero_mode() {
        let g = Grid::new(2, 16).unwrap();
        let f = Field::constant(&g, 2.5);
        assert!((f.spectrum().mean() - 2.5).abs() < 1e-13);
    }

    #[test]
    fn vector_field_rejects_mixed_grids() {
        let a = Grid::new(2, 16).unwrap();
        let b = Grid::new(2, 32).unwrap();
        assert!(VectorField::new(vec![Field::zeros(&a), Field::zeros(&b)]).is_err());
        assert!(VectorField::new(vec![Field::zeros(&a)]).is_err());
    }
}
