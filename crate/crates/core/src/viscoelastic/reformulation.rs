//! The damped reformulation in terms of `d^{ij} = -Lambda^{-1} d_j u^i`:
//!
//! `d_t E + u . grad E + Lambda d = R`, `R_ij = d_k u_i E_kj`,
//! `d_t d + u . grad d - mu Lap d - Lambda E = H`,
//!
//! where `H` collects the nonlinear terms and the compatibility identity turns
//! `Lambda^{-1} d_j d_k E_ik` into `-Lambda E_ij` plus quadratic terms.

use serde::Serialize;

use super::rhs::{evaluate, masked, Phys};
use super::state::{FriedrichsMask, SimState, SolverOptions};
use crate::error::Result;
use crate::spectral_field::multipliers::{
    derivative_spectrum, lambda_pow_spectrum, laplacian_spectrum, riesz_spectrum,
};
use crate::spectral_field::{fields_of, spectra_of, Field, Spectrum, TensorField};

#[derive(Clone, Debug)]
pub struct DFormulation {
    pub d: TensorField,
    pub h: TensorField,
    pub r: TensorField,
    pub residuals: DResiduals,
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct DResiduals {
    /// `||Lambda d + grad u|| / ||grad u||`
    pub lambda_identity: f64,
    /// `||Lambda^{-1} d_j d^{ij} - (u^i - mean u^i)|| / ||u - mean u||`; the mean of
    /// `u` is not conserved when the density varies and `d` cannot see it.
    pub recovery: f64,
    /// `||d_t E + u . grad E + Lambda d - R||`, relative to the largest term.
    pub e_equation: f64,
    /// `||d_t d + u . grad d - mu Lap d - Lambda E - H||`, relative to the largest term.
    pub d_equation: f64,
}

fn norm(v: &[Spectrum]) -> f64 {
    v.iter().map(|s| s.l2_norm().powi(2)).sum::<f64>().sqrt()
}

fn mean_free(s: &Spectrum) -> Spectrum {
    let mut out = s.clone();
    out.coefs_mut()[0] = Default::default();
    out
}

fn rel(num: f64, scales: &[f64]) -> f64 {
    let s = scales.iter().copied().fold(0.0, f64::max);
    if s == 0.0 {
        num
    } else {
        num / s
    }
}

fn physical_to_masked(grid: &crate::spectral_field::Grid, data: Vec<Vec<f64>>, mask: &FriedrichsMask) -> Vec<Spectrum> {
    let fields: Vec<Field> = data
        .into_iter()
        .map(|v| Field::from_values(grid, v).expect("grid-sized buffer"))
        .collect();
    masked(spectra_of(&fields), mask)
}

/// Evaluates `d`, `H`, `R` and the residuals of both reformulated equations,
/// with time derivatives taken from the solver's right-hand side.
pub fn d_reformulation(state: &SimState, opts: &SolverOptions) -> Result<DFormulation> {
    let grid = state.grid().clone();
    let dim = grid.dim();
    let mask = FriedrichsMask::new(&grid, state.n_cut);
    let s = masked(state.to_spectra(), &mask);
    let tend = evaluate(&s, state.mu, &mask, opts, None)?;
    let phys: &Phys = &tend.phys;
    let n = grid.len();
    let u = &s[1..1 + dim];
    let e = &s[1 + dim..];
    let at = |i: usize, j: usize| i * dim + j;

    let d: Vec<Spectrum> = (0..dim * dim)
        .map(|ij| -&riesz_spectrum(&u[ij / dim], ij % dim))
        .collect();
    let lambda_d: Vec<Spectrum> = d.iter().map(|x| lambda_pow_spectrum(x, 1.0)).collect();
    let grad_u: Vec<Spectrum> = (0..dim * dim)
        .map(|ij| derivative_spectrum(&u[ij / dim], ij % dim))
        .collect();
    let lambda_identity = rel(
        norm(&lambda_d.iter().zip(&grad_u).map(|(x, y)| x + y).collect::<Vec<_>>()),
        &[norm(&grad_u)],
    );
    let recovered: Vec<Spectrum> = (0..dim)
        .map(|i| {
            let mut acc = Spectrum::zeros(&grid);
            for j in 0..dim {
                acc.axpy(1.0, &riesz_spectrum(&d[at(i, j)], j));
            }
            acc
        })
        .collect();
    let fluctuating: Vec<Spectrum> = u.iter().map(mean_free).collect();
    let recovery = rel(
        norm(&recovered.iter().zip(&fluctuating).map(|(x, y)| x - y).collect::<Vec<_>>()),
        &[norm(&fluctuating)],
    );

    // Physical products: R, u . grad E, u . grad d and the pieces of H.
    let mut r_data = vec![vec![0.0; n]; dim * dim];
    let mut adv_e = vec![vec![0.0; n]; dim * dim];
    let mut x_data = vec![vec![0.0; n]; dim];
    let mut c_data = vec![vec![0.0; n]; dim * dim * dim];
    for p in 0..n {
        let a = phys.a.values()[p];
        let b = 1.0 + a;
        for i in 0..dim {
            x_data[i][p] = phys.advect_at(p, |l| phys.du_at(i, l, p))
                - state.mu * a * phys.lap_u[i].values()[p]
                - b * phys.div_eet_at(i, p)
                - a * phys.div_e_at(i, p);
            for j in 0..dim {
                r_data[at(i, j)][p] = (0..dim).map(|k| phys.du_at(i, k, p) * phys.e_at(k, j, p)).sum();
                adv_e[at(i, j)][p] = phys.advect_at(p, |l| phys.de_at(i, j, l, p));
                for k in 0..dim {
                    c_data[(i * dim + j) * dim + k][p] = (0..dim)
                        .map(|l| phys.e_at(l, k, p) * phys.de_at(i, j, l, p) - phys.e_at(l, j, p) * phys.de_at(i, k, l, p))
                        .sum();
                }
            }
        }
    }
    let r = physical_to_masked(&grid, r_data, &mask);
    let adv_e = physical_to_masked(&grid, adv_e, &mask);
    let mut x = physical_to_masked(&grid, x_data, &mask);
    for (xi, (g, w)) in x.iter_mut().zip(tend.grad_pi.iter().zip(&tend.a_grad_pi)) {
        xi.axpy(1.0, g);
        xi.axpy(1.0, w);
    }
    let c = physical_to_masked(&grid, c_data, &mask);

    let grad_d: Vec<Spectrum> = d
        .iter()
        .flat_map(|x| (0..dim).map(move |l| derivative_spectrum(x, l)))
        .collect();
    let grad_d_phys = fields_of(&grad_d.iter().collect::<Vec<_>>());
    let mut adv_d = vec![vec![0.0; n]; dim * dim];
    for (ij, out) in adv_d.iter_mut().enumerate() {
        for (p, o) in out.iter_mut().enumerate() {
            *o = phys.advect_at(p, |l| grad_d_phys[ij * dim + l].values()[p]);
        }
    }
    let adv_d = physical_to_masked(&grid, adv_d, &mask);

    let de = &tend.rates[1 + dim..];
    let du = &tend.rates[1..1 + dim];
    let mut e_res = Vec::with_capacity(dim * dim);
    let mut d_res = Vec::with_capacity(dim * dim);
    let mut h = Vec::with_capacity(dim * dim);
    let mut dt_d = Vec::with_capacity(dim * dim);
    let mut visc = Vec::with_capacity(dim * dim);
    let mut lambda_e = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let ij = at(i, j);
            e_res.push(&(&(&de[ij] + &adv_e[ij]) + &lambda_d[ij]) - &r[ij]);
            let mut hij = adv_d[ij].clone();
            hij.axpy(1.0, &riesz_spectrum(&x[i], j));
            for k in 0..dim {
                hij.axpy(-1.0, &riesz_spectrum(&c[(i * dim + j) * dim + k], k));
            }
            let ddt = -&riesz_spectrum(&du[i], j);
            let v = laplacian_spectrum(&d[ij]).scaled(state.mu);
            let le = lambda_pow_spectrum(&e[ij], 1.0);
            let mut res = &ddt + &adv_d[ij];
            res.axpy(-1.0, &v);
            res.axpy(-1.0, &le);
            res.axpy(-1.0, &hij);
            d_res.push(res);
            h.push(hij);
            dt_d.push(ddt);
            visc.push(v);
            lambda_e.push(le);
        }
    }
    let residuals = DResiduals {
        lambda_identity,
        recovery,
        e_equation: rel(norm(&e_res), &[norm(de), norm(&lambda_d), norm(&r), norm(&adv_e)]),
        d_equation: rel(
            norm(&d_res),
            &[norm(&dt_d), norm(&visc), norm(&lambda_e), norm(&h), norm(&adv_d)],
        ),
    };
    Ok(DFormulation {
        d: TensorField::from_spectra(&d),
        h: TensorField::from_spectra(&h),
        r: TensorField::from_spectra(&r),
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_field::{Grid, VectorField};

    #[test]
    fn single_mode_velocity_without_deformation() {
        let g = Grid::new(2, 32).unwrap();
        let u = VectorField::new(vec![
            Field::from_fn(&g, |x| (2.0 * x[1]).sin()),
            Field::zeros(&g),
        ])
        .unwrap();
        let st = SimState::new(Field::zeros(&g), u, TensorField::zeros(&g), 1.0).unwrap();
        let f = d_reformulation(&st, &SolverOptions::default()).unwrap();
        assert_eq!(f.r.max_abs(), 0.0);
        assert!(f.residuals.lambda_identity < 1e-12);
        assert!(f.residuals.recovery < 1e-12);
        assert!(f.residuals.e_equation < 1e-12);
        assert!(f.residuals.d_equation < 1e-12);
    }

    #[test]
    fn rest_state_is_all_zero() {
        let g = Grid::new(2, 16).unwrap();
        let f = d_reformulation(&SimState::rest(&g, 1.0), &SolverOptions::default()).unwrap();
        assert_eq!(f.d.max_abs(), 0.0);
        assert_eq!(f.h.max_abs(), 0.0);
        assert_eq!(f.residuals.d_equation, 0.0);
    }
}
