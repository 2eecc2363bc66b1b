//! Batched pseudospectral kernels shared by the solvers: gradients in physical
//! space, dealiased advection and dealiased multiplication.

use super::field::{fields_of, spectra_of, Field, Spectrum};
use super::multipliers::{dealias_in_place, derivative_spectrum};

/// `d_j s` for every axis, in physical space.
pub fn gradient_fields(s: &Spectrum) -> Vec<Field> {
    let d: Vec<Spectrum> = (0..s.grid().dim())
        .map(|j| derivative_spectrum(s, j))
        .collect();
    fields_of(&d.iter().collect::<Vec<_>>())
}

/// `(grad s)` for several spectra at once: entry `[m][j]` is `d_j s_m`.
pub fn gradient_fields_many(targets: &[&Spectrum]) -> Vec<Vec<Field>> {
    if targets.is_empty() {
        return Vec::new();
    }
    let dim = targets[0].grid().dim();
    let mut d = Vec::with_capacity(targets.len() * dim);
    for s in targets {
        for j in 0..dim {
            d.push(derivative_spectrum(s, j));
        }
    }
    let phys = fields_of(&d.iter().collect::<Vec<_>>());
    let mut out = Vec::with_capacity(targets.len());
    let mut it = phys.into_iter();
    for _ in 0..targets.len() {
        out.push((&mut it).take(dim).collect());
    }
    out
}

/// Dealiased spectra of several physical products, transformed in pairs.
pub fn to_dealiased_spectra(fields: &[Field]) -> Vec<Spectrum> {
    let mut out = spectra_of(fields);
    for s in &mut out {
        dealias_in_place(s);
    }
    out
}

/// Dealiased `v . grad s_m` for every target, given `v` in physical space.
pub fn advect(v: &[Field], targets: &[&Spectrum]) -> Vec<Spectrum> {
    let grads = gradient_fields_many(targets);
    let products: Vec<Field> = grads
        .iter()
        .map(|g| dot(v, g))
        .collect();
    to_dealiased_spectra(&products)
}

/// Pointwise `sum_j v_j w_j`.
pub fn dot(v: &[Field], w: &[Field]) -> Field {
    let mut acc = v[0].pointwise(&w[0]);
    for j in 1..v.len() {
        for ((o, a), b) in acc
            .values_mut()
            .iter_mut()
            .zip(v[j].values())
            .zip(w[j].values())
        {
            *o += a * b;
        }
    }
    acc
}

/// Dealiased `a * s_m` for every target.
pub fn multiply(a: &Field, targets: &[&Spectrum]) -> Vec<Spectrum> {
    let phys = fields_of(targets);
    let products: Vec<Field> = phys.iter().map(|f| a.pointwise(f)).collect();
    to_dealiased_spectra(&products)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_field::Grid;

    #[test]
    fn advection_of_single_modes() {
        let g = Grid::new(2, 32).unwrap();
        let a = Field::from_fn(&g, |x| (2.0 * x[0]).sin() + x[1].cos());
        let v = vec![Field::constant(&g, 1.5), Field::from_fn(&g, |x| x[0].cos())];
        let out = advect(&v, &[&a.spectrum()])[0].to_field();
        let exact = Field::from_fn(&g, |x| {
            1.5 * 2.0 * (2.0 * x[0]).cos() - x[0].cos() * x[1].sin()
        });
        assert!((&out - &exact).max_abs() < 1e-12);
    }
}
