//! Multi-dimensional transforms on top of `rustfft`.
//!
//! Unitary convention on the torus: `coef(k) = L^{dim/2} / n^dim * sum_x f(x) e^{-i k.x}`,
//! so `sum_k |coef(k)|^2 = int_T |f|^2 dx` with constant one.
//! Two real fields can share one complex transform (`f + i g`); the batch
//! helpers pair inputs automatically.

use num_complex::Complex64;

use super::grid::Grid;

fn transform_axes(grid: &Grid, data: &mut [Complex64], inverse: bool) {
    let plan = if inverse {
        grid.inverse_plan()
    } else {
        grid.forward_plan()
    };
    let n = grid.n();
    let dim = grid.dim();
    let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        if stride == 1 {
            plan.process_with_scratch(data, &mut scratch);
            continue;
        }
        let block_len = n * stride;
        let mut buf = vec![Complex64::default(); block_len];
        for block in data.chunks_exact_mut(block_len) {
            for i in 0..n {
                let row = &block[i * stride..(i + 1) * stride];
                for (inner, v) in row.iter().enumerate() {
                    buf[inner * n + i] = *v;
                }
            }
            plan.process_with_scratch(&mut buf, &mut scratch);
            for i in 0..n {
                let row = &mut block[i * stride..(i + 1) * stride];
                for (inner, v) in row.iter_mut().enumerate() {
                    *v = buf[inner * n + i];
                }
            }
        }
    }
}

fn forward_scale(grid: &Grid) -> f64 {
    grid.period().powf(grid.dim() as f64 / 2.0) / grid.len() as f64
}

fn inverse_scale(grid: &Grid) -> f64 {
    grid.period().powf(-(grid.dim() as f64) / 2.0)
}

/// Forward transform of a complex array in place (unitary-on-torus scaling).
pub fn forward_complex(grid: &Grid, data: &mut [Complex64]) {
    transform_axes(grid, data, false);
    let s = forward_scale(grid);
    data.iter_mut().for_each(|c| *c *= s);
}

/// Inverse of [`forward_complex`].
pub fn inverse_complex(grid: &Grid, data: &mut [Complex64]) {
    transform_axes(grid, data, true);
    let s = inverse_scale(grid);
    data.iter_mut().for_each(|c| *c *= s);
}

pub fn forward_real(grid: &Grid, values: &[f64]) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward_complex(grid, &mut data);
    data
}

/// Two real fields through one complex transform.
pub fn forward_real_pair(grid: &Grid, f: &[f64], g: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut z: Vec<Complex64> = f
        .iter()
        .zip(g)
        .map(|(&a, &b)| Complex64::new(a, b))
        .collect();
    forward_complex(grid, &mut z);
    let partner = &grid.modes().partner;
    let mut fs = Vec::with_capacity(z.len());
    let mut gs = Vec::with_capacity(z.len());
    for (idx, zk) in z.iter().enumerate() {
        let zm = z[partner[idx]].conj();
        fs.push((zk + zm) * 0.5);
        // (zk - zm) / (2i)
        let d = zk - zm;
        gs.push(Complex64::new(d.im * 0.5, -d.re * 0.5));
    }
    (fs, gs)
}

/// Inverse transform keeping the real part.
pub fn inverse_real(grid: &Grid, coefs: &[Complex64]) -> Vec<f64> {
    let mut data = coefs.to_vec();
    inverse_complex(grid, &mut data);
    data.into_iter().map(|c| c.re).collect()
}

/// Two Hermitian spectra through one complex inverse transform.
pub fn inverse_real_pair(grid: &Grid, f: &[Complex64], g: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    let mut z: Vec<Complex64> = f
        .iter()
        .zip(g)
        .map(|(a, b)| Complex64::new(a.re - b.im, a.im + b.re))
        .collect();
    inverse_complex(grid, &mut z);
    z.into_iter().map(|c| (c.re, c.im)).unzip()
}

pub fn forward_batch(grid: &Grid, inputs: &[&[f64]]) -> Vec<Vec<Complex64>> {
    let mut out = Vec::with_capacity(inputs.len());
    let mut chunks = inputs.chunks_exact(2);
    for pair in &mut chunks {
        let (a, b) = forward_real_pair(grid, pair[0], pair[1]);
        out.push(a);
        out.push(b);
    }
    for single in chunks.remainder() {
        out.push(forward_real(grid, single));
    }
    out
}

pub fn inverse_batch(grid: &Grid, inputs: &[&[Complex64]]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(inputs.len());
    let mut chunks = inputs.chunks_exact(2);
    for pair in &mut chunks {
        let (a, b) = inverse_real_pair(grid, pair[0], pair[1]);
        out.push(a);
        out.push(b);
    }
    for single in chunks.remainder() {
        out.push(inverse_real(grid, single));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sample(grid: &Grid, f: impl Fn([f64; 3]) -> f64) -> Vec<f64> {
        (0..grid.len()).map(|i| f(grid.coordinates(i))).collect()
    }

    #[test]
    fn single_mode_lands_on_its_index() {
        let g = Grid::new(2, 16).unwrap();
        // cos(3x + 2y) = (e^{i(3,2).x} + e^{-i(3,2).x}) / 2
        let v = sample(&g, |x| (3.0 * x[0] + 2.0 * x[1]).cos());
        let c = forward_real(&g, &v);
        let amp = 2.0 * PI / 2.0; // L^{dim/2} / 2
        let i = g.index_of([3, 2, 0]);
        let j = g.index_of([-3, -2, 0]);
        assert!((c[i].re - amp).abs() < 1e-12);
        assert!((c[j].re - amp).abs() < 1e-12);
        let rest: f64 = c
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != i && *k != j)
            .map(|(_, z)| z.norm())
            .sum();
        assert!(rest < 1e-10);
    }

    #[test]
    fn pair_transform_matches_single() {
        let g = Grid::new(3, 16).unwrap();
        let f = sample(&g, |x| (x[0] + 2.0 * x[2]).sin() + 0.3);
        let h = sample(&g, |x| (x[1] - x[0]).cos() * (2.0 * x[2]).sin());
        let (fp, hp) = forward_real_pair(&g, &f, &h);
        let fs = forward_real(&g, &f);
        let hs = forward_real(&g, &h);
        for k in 0..g.len() {
            assert!((fp[k] - fs[k]).norm() < 1e-12);
            assert!((hp[k] - hs[k]).norm() < 1e-12);
        }
        let (fb, hb) = inverse_real_pair(&g, &fp, &hp);
        for k in 0..g.len() {
            assert!((fb[k] - f[k]).abs() < 1e-12);
            assert!((hb[k] - h[k]).abs() < 1e-12);
        }
    }
}
