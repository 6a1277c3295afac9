//! Block averages `η^ℓ(x)` and double block averages `η^{ℓ,L}(x)` on the torus.

use std::ops::{Add, Sub};

use super::lattice::Lattice;
use crate::error::Result;

/// One periodic sliding-window pass of radius `r` along axis `axis`.
fn slide<T>(lattice: &Lattice, values: &[T], r: usize, axis: usize) -> Vec<T>
where
    T: Copy + Default + Add<Output = T> + Sub<Output = T>,
{
    let n = lattice.side();
    let stride = if axis == 0 { 1 } else { n };
    let lines = lattice.sites() / n;
    let mut out = vec![T::default(); values.len()];
    for line in 0..lines {
        let base = if axis == 0 { line * n } else { line };
        let at = |i: usize| values[base + (i % n) * stride];
        let mut acc = T::default();
        for i in 0..=2 * r {
            acc = acc + at(n - r + i);
        }
        for i in 0..n {
            out[base + i * stride] = acc;
            acc = acc + at(i + r + 1) - at(i + n - r);
        }
    }
    out
}

/// `sum_{|y|_∞ <= r} v(x + y)` for every site, exact on integers.
pub fn window_sums(lattice: &Lattice, values: &[u64], r: usize) -> Result<Vec<u64>> {
    lattice.check_radius(r)?;
    let mut out = slide(lattice, values, r, 0);
    if lattice.dim() == 2 {
        out = slide(lattice, &out, r, 1);
    }
    Ok(out)
}

/// Floating-point window sums, each evaluated directly in a fixed order.
pub fn window_sums_f64(lattice: &Lattice, values: &[f64], r: usize) -> Result<Vec<f64>> {
    lattice.check_radius(r)?;
    let n = lattice.side();
    let pass = |input: &[f64], axis: usize| -> Vec<f64> {
        let stride = if axis == 0 { 1 } else { n };
        let mut out = vec![0.0; input.len()];
        for (x, slot) in out.iter_mut().enumerate() {
            let c = lattice.coords(x)[axis];
            let base = x - c * stride;
            let mut acc = 0.0;
            for k in 0..=2 * r {
                let i = (c + n - r + k) % n;
                acc += input[base + i * stride];
            }
            *slot = acc;
        }
        out
    };
    let mut out = pass(values, 0);
    if lattice.dim() == 2 {
        out = pass(&out, 1);
    }
    Ok(out)
}

/// Integer block sums `sum_{|y| <= ℓ} η(x + y)`.
pub fn block_sums(lattice: &Lattice, occ: &[u32], ell: usize) -> Result<Vec<u64>> {
    let wide: Vec<u64> = occ.iter().map(|&k| k as u64).collect();
    window_sums(lattice, &wide, ell)
}

/// `η^ℓ(x)` for every site.
pub fn block_averages(lattice: &Lattice, occ: &[u32], ell: usize) -> Result<Vec<f64>> {
    let size = lattice.ball_size(ell) as f64;
    Ok(block_sums(lattice, occ, ell)?.into_iter().map(|s| s as f64 / size).collect())
}

/// `η^ℓ(x) = (2ℓ+1)^{-d} sum_{|y|_∞ <= ℓ} η(x + y)`.
pub fn block_average(lattice: &Lattice, occ: &[u32], x: usize, ell: usize) -> Result<f64> {
    lattice.check_radius(ell)?;
    let sum: u64 = lattice.ball_offsets(ell).into_iter().map(|y| occ[lattice.shift(x, y)] as u64).sum();
    Ok(sum as f64 / lattice.ball_size(ell) as f64)
}

/// `η^{ℓ,L}(x)`: the `L`-block average of `η^ℓ`, for every site.
pub fn double_block_averages(lattice: &Lattice, occ: &[u32], ell: usize, big: usize) -> Result<Vec<f64>> {
    let inner = block_sums(lattice, occ, ell)?;
    let outer = window_sums(lattice, &inner, big)?;
    let size = (lattice.ball_size(ell) * lattice.ball_size(big)) as f64;
    Ok(outer.into_iter().map(|s| s as f64 / size).collect())
}

pub fn double_block_average(lattice: &Lattice, occ: &[u32], x: usize, ell: usize, big: usize) -> Result<f64> {
    Ok(double_block_averages(lattice, occ, ell, big)?[x])
}

/// Right-hand side of the consecutive-average bound,
/// `L_*^{-d} sum_{L-ℓ < |z|_∞ <= L+ℓ} η(x + z)` with `L_* = 2L + 1`.
/// Offsets are summed as offsets, so wrapped sites may be counted twice.
pub fn consecutive_average_bound(lattice: &Lattice, occ: &[u32], x: usize, ell: usize, big: usize) -> f64 {
    let outer = (big + ell) as i32;
    let inner = big as i32 - ell as i32;
    let two_d = lattice.dim() == 2;
    let mut sum = 0u64;
    for b in if two_d { -outer..=outer } else { 0..=0 } {
        for a in -outer..=outer {
            let norm = a.abs().max(b.abs());
            if norm > inner {
                sum += occ[lattice.shift(x, [a, b])] as u64;
            }
        }
    }
    sum as f64 / lattice.ball_size(big) as f64
}
