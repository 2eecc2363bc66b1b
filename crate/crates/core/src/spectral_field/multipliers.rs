//! Fourier multipliers: derivatives, `Lambda^s`, Leray and Friedrichs projectors,
//! dealiasing.
//!
//! Odd symbols use the Nyquist-zeroed wavevector so real fields stay real;
//! radial symbols use the true `|xi|`.

use num_complex::Complex64;

use super::field::{spectra_of, Field, Spectrum, TensorField, VectorField};
use crate::error::{precondition, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `d/dx_j` in spectral form.
pub fn derivative_spectrum(s: &Spectrum, j: usize) -> Spectrum {
    let xi = &s.grid().modes().xi;
    s.map_modes(|k, c| I * xi[k][j] * c)
}

pub fn laplacian_spectrum(s: &Spectrum) -> Spectrum {
    let xn = &s.grid().modes().xi_norm;
    s.scale_by(|k| -xn[k] * xn[k])
}

/// `Lambda^s` with the zero mode mapped to zero; no mean check.
pub fn lambda_pow_spectrum(sp: &Spectrum, s: f64) -> Spectrum {
    let xn = &sp.grid().modes().xi_norm;
    sp.scale_by(|k| if k == 0 { 0.0 } else { xn[k].powf(s) })
}

/// `Lambda^{-1} d_j`, symbol `i xi_j / |xi|`.
pub fn riesz_spectrum(s: &Spectrum, j: usize) -> Spectrum {
    let m = s.grid().modes();
    s.map_modes(|k, c| {
        if k == 0 {
            Complex64::default()
        } else {
            I * (m.xi[k][j] / m.xi_norm[k]) * c
        }
    })
}

/// Zeroes modes outside the dealias mask.
pub fn dealias_spectrum(s: &Spectrum) -> Spectrum {
    let keep = &s.grid().modes().keep;
    s.map_modes(|k, c| if keep[k] { c } else { Complex64::default() })
}

pub fn dealias_in_place(s: &mut Spectrum) {
    let grid = s.grid().clone();
    let keep = &grid.modes().keep;
    for (c, &kept) in s.coefs_mut().iter_mut().zip(keep) {
        if !kept {
            *c = Complex64::default();
        }
    }
}

/// Keeps `|xi| <= n_cut`. Nyquist planes are always dropped so the result stays
/// Hermitian.
pub fn friedrichs_spectrum(s: &Spectrum, n_cut: f64) -> Spectrum {
    let m = s.grid().modes();
    let half = (s.grid().n() / 2) as i32;
    s.map_modes(|k, c| {
        let nyq = m.k[k].iter().any(|&kj| kj == -half);
        if m.xi_norm[k] <= n_cut * (1.0 + 1e-12) && !nyq {
            c
        } else {
            Complex64::default()
        }
    })
}

/// Leray projection `u - xi (xi . u) / |xi|^2` of a vector of spectra.
pub fn leray_spectra(u: &[Spectrum]) -> Vec<Spectrum> {
    let q = gradient_part_spectra(u);
    u.iter().zip(&q).map(|(a, b)| a - b).collect()
}

/// Gradient part `Q = grad (-Delta)^{-1} div`.
pub fn gradient_part_spectra(u: &[Spectrum]) -> Vec<Spectrum> {
    let grid = u[0].grid().clone();
    let m = grid.modes();
    let dim = grid.dim();
    let mut out: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); grid.len()]; dim];
    for k in 0..grid.len() {
        let xi = &m.xi[k];
        let x2: f64 = xi[..dim].iter().map(|x| x * x).sum();
        if x2 == 0.0 {
            continue;
        }
        let mut dot = Complex64::default();
        for j in 0..dim {
            dot += u[j].coefs()[k] * xi[j];
        }
        let f = dot / x2;
        for j in 0..dim {
            out[j][k] = f * xi[j];
        }
    }
    out.into_iter()
        .map(|c| Spectrum::from_raw(&grid, c))
        .collect()
}

pub fn derivative(f: &Field, j: usize) -> Field {
    derivative_spectrum(&f.spectrum(), j).to_field()
}

pub fn laplacian(f: &Field) -> Field {
    laplacian_spectrum(&f.spectrum()).to_field()
}

pub fn grad(f: &Field) -> VectorField {
    let s = f.spectrum();
    let d: Vec<Spectrum> = (0..f.grid().dim())
        .map(|j| derivative_spectrum(&s, j))
        .collect();
    VectorField::from_spectra(&d)
}

pub fn div(u: &VectorField) -> Field {
    let spectra = u.spectra();
    div_spectra(&spectra).to_field()
}

pub fn div_spectra(u: &[Spectrum]) -> Spectrum {
    let mut acc = Spectrum::zeros(u[0].grid());
    for (j, s) in u.iter().enumerate() {
        acc = &acc + &derivative_spectrum(s, j);
    }
    acc
}

/// `(grad u)_{ij} = d_j u_i`.
pub fn grad_vector(u: &VectorField) -> TensorField {
    let dim = u.dim();
    let spectra = u.spectra();
    let mut out = Vec::with_capacity(dim * dim);
    for s in &spectra {
        for j in 0..dim {
            out.push(derivative_spectrum(s, j));
        }
    }
    TensorField::from_spectra(&out)
}

/// Row divergence `(div E)_i = d_j E_{ij}`.
pub fn div_tensor(e: &TensorField) -> VectorField {
    let dim = e.dim();
    let spectra = e.spectra();
    let rows: Vec<Spectrum> = (0..dim)
        .map(|i| div_spectra(&spectra[i * dim..(i + 1) * dim]))
        .collect();
    VectorField::from_spectra(&rows)
}

/// Column divergence `(div E^T)_j = d_i E_{ij}`.
pub fn div_transpose(e: &TensorField) -> VectorField {
    div_tensor(&e.transpose())
}

/// `Lambda^s f`; negative `s` requires a mean-zero field.
pub fn lambda_pow(f: &Field, s: f64) -> Result<Field> {
    let sp = f.spectrum();
    if s < 0.0 && sp.mean().abs() > 1e-12 * f.l2_norm().max(f64::MIN_POSITIVE) {
        return precondition(format!(
            "Lambda^{s} needs a mean-zero field (mean = {:.3e})",
            sp.mean()
        ));
    }
    Ok(lambda_pow_spectrum(&sp, s).to_field())
}

pub fn leray_project(u: &VectorField) -> VectorField {
    VectorField::from_spectra(&leray_spectra(&u.spectra()))
}

pub fn friedrichs_project(f: &Field, n_cut: f64) -> Result<Field> {
    if !(n_cut > 0.0) {
        return precondition(format!("Friedrichs radius must be positive, got {n_cut}"));
    }
    Ok(friedrichs_spectrum(&f.spectrum(), n_cut).to_field())
}

pub fn dealias(f: &Field) -> Field {
    dealias_spectrum(&f.spectrum()).to_field()
}

/// Pointwise product followed by the dealias mask.
pub fn dealiased_product(f: &Field, g: &Field) -> Field {
    dealias(&f.pointwise(g))
}

/// Maximum over modes of `|xi . u_hat|`, the spectral divergence.
pub fn spectral_divergence_max(u: &[Spectrum]) -> f64 {
    let grid = u[0].grid();
    let m = grid.modes();
    (0..grid.len())
        .map(|k| {
            let mut dot = Complex64::default();
            for (j, s) in u.iter().enumerate() {
                dot += s.coefs()[k] * m.xi[k][j];
            }
            dot.norm()
        })
        .fold(0.0, f64::max)
}

/// Forward transforms of vector components.
pub fn spectra(fields: &[Field]) -> Vec<Spectrum> {
    spectra_of(fields)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_field::Grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_band(grid: &Grid, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = Spectrum::zeros(grid);
        let m = grid.modes();
        for k in 1..grid.len() {
            if m.keep[k] && m.radius[k] <= 6.0 {
                s.coefs_mut()[k] = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
        }
        // Symmetrize to a real field.
        let c = s.coefs().to_vec();
        for k in 0..grid.len() {
            s.coefs_mut()[k] = (c[k] + c[m.partner[k]].conj()) * 0.5;
        }
        s.to_field()
    }

    #[test]
    fn derivative_of_sine() {
        let g = Grid::new(2, 32).unwrap();
        let f = Field::from_fn(&g, |x| x[0].sin());
        let d = derivative(&f, 0);
        let exact = Field::from_fn(&g, |x| x[0].cos());
        assert!((&d - &exact).max_abs() < 1e-12);
        assert!(derivative(&Field::constant(&g, 3.0), 1).max_abs() < 1e-14);
    }

    #[test]
    fn leray_examples() {
        let g = Grid::new(2, 16).unwrap();
        let along_x2 = VectorField::new(vec![
            Field::from_fn(&g, |x| x[1].cos()),
            Field::zeros(&g),
        ])
        .unwrap();
        let p = leray_project(&along_x2);
        assert!(p.sub(&along_x2).max_abs() < 1e-12);
        let along_x1 = VectorField::new(vec![
            Field::from_fn(&g, |x| x[0].cos()),
            Field::zeros(&g),
        ])
        .unwrap();
        assert!(leray_project(&along_x1).max_abs() < 1e-12);
        let psi = random_band(&g, 3);
        assert!(leray_project(&grad(&psi)).max_abs() < 1e-12);
    }

    #[test]
    fn leray_is_idempotent_and_divergence_free() {
        let g = Grid::new(2, 32).unwrap();
        let u = VectorField::new(vec![random_band(&g, 1), random_band(&g, 2)]).unwrap();
        let p = leray_project(&u);
        let pp = leray_project(&p);
        assert!(pp.sub(&p).l2_norm() < 1e-12 * u.l2_norm());
        assert!(spectral_divergence_max(&p.spectra()) < 1e-12 * u.l2_norm());
    }

    #[test]
    fn lambda_pow_single_mode_and_riesz() {
        let g = Grid::new(2, 16).unwrap();
        let f = Field::from_fn(&g, |x| (2.0 * x[0]).cos());
        let out = lambda_pow(&f, 1.5).unwrap();
        assert!((&out - &f.scaled(2f64.powf(1.5))).max_abs() < 1e-12);
        assert!(lambda_pow(&Field::constant(&g, 1.0), -1.0).is_err());
        // Lambda^{-1} d_1 cos(2 x1) = -sin(2 x1)
        let r = riesz_spectrum(&f.spectrum(), 0).to_field();
        let exact = Field::from_fn(&g, |x| -(2.0 * x[0]).sin());
        assert!((&r - &exact).max_abs() < 1e-12);
    }

    #[test]
    fn friedrichs_is_self_adjoint_and_idempotent() {
        let g = Grid::new(2, 32).unwrap();
        let f = random_band(&g, 5);
        let h = random_band(&g, 6);
        let jf = friedrichs_project(&f, 3.5).unwrap();
        let jh = friedrichs_project(&h, 3.5).unwrap();
        assert!((jf.inner(&h) - f.inner(&jh)).abs() < 1e-12 * f.l2_norm() * h.l2_norm());
        let jjf = friedrichs_project(&jf, 3.5).unwrap();
        assert!((&jjf - &jf).max_abs() < 1e-13);
        let id = friedrichs_project(&f, g.nyquist() * 2.0).unwrap();
        assert!((&id - &f).max_abs() < 1e-12);
        assert!(friedrichs_project(&f, 0.0).is_err());
    }

    #[test]
    fn div_transpose_matches_finite_differences() {
        let g = Grid::new(2, 64).unwrap();
        let comps: Vec<Field> = (0..4).map(|s| random_band(&g, 10 + s)).collect();
        let e = TensorField::new(comps).unwrap();
        let spectral = div_transpose(&e);
        let n = g.n();
        let h = g.period() / n as f64;
        let idx = |i: usize, j: usize| (i % n) * n + (j % n);
        for col in 0..2 {
            let mut err: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let e0 = e.get(0, col).values();
                    let e1 = e.get(1, col).values();
                    let d0 = (e0[idx(i + 1, j)] - e0[idx(i + n - 1, j)]) / (2.0 * h);
                    let d1 = (e1[idx(i, j + 1)] - e1[idx(i, j + n - 1)]) / (2.0 * h);
                    err = err.max((d0 + d1 - spectral.component(col).values()[idx(i, j)]).abs());
                }
            }
            // Central differences are O(h^2) with a band up to |k| = 6.
            assert!(err < 36.0 * 36.0 * h * h, "err {err}");
        }
    }
}
