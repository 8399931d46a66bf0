//! Anisotropic total variation on the interior density layers.
//!
//! The dual pairs with `G f = (D̂_i f / c)_i`, where `D̂_i` are unscaled
//! forward differences along the non-colour spatial axes (wrapping on periodic
//! axes) and `c = 2 √(#axes)` keeps `‖G‖ ≤ 1`. Since the scaled difference is
//! `N_i D̂_i`, the penalty `γ Σ_i ‖N_i D̂_i f‖₁` becomes `Σ_i γ N_i c ‖G_i f‖₁`.

use crate::grid::{BoundaryKind, GridSpec};
use crate::nd;

#[derive(Debug, Clone)]
pub(crate) struct TvOperator {
    grid: GridSpec,
    axes: Vec<usize>,
    scale: f64,
    weights: Vec<f64>,
}

fn diff_len(grid: &GridSpec, axis: usize) -> usize {
    let n = grid.spatial_dims()[axis];
    match grid.boundary(axis) {
        BoundaryKind::Mirror => n - 1,
        BoundaryKind::Periodic if n > 1 => n,
        BoundaryKind::Periodic => 0,
    }
}

/// Non-colour spatial axes with at least one difference.
fn tv_axes(grid: &GridSpec) -> Vec<usize> {
    (0..grid.ndim())
        .filter(|&a| Some(a) != grid.color_axis() && diff_len(grid, a) > 0)
        .collect()
}

fn forward_diff(grid: &GridSpec, axis: usize, dims: &[usize], f: &[f64], out: &mut [f64]) {
    let n = grid.spatial_dims()[axis];
    let len = diff_len(grid, axis);
    nd::map_axis(f, dims, axis, len, out, |x, y| {
        for k in 0..len {
            y[k] = x[(k + 1) % n] - x[k];
        }
    });
}

fn forward_diff_t(grid: &GridSpec, axis: usize, dims: &[usize], w: &[f64], out: &mut [f64]) {
    let n = grid.spatial_dims()[axis];
    let periodic = grid.boundary(axis) == BoundaryKind::Periodic;
    let mut wdims = dims.to_vec();
    wdims[axis] = diff_len(grid, axis);
    nd::map_axis(w, &wdims, axis, n, out, |x, y| {
        for j in 0..n {
            let prev = if j > 0 {
                x[j - 1]
            } else if periodic {
                x[n - 1]
            } else {
                0.0
            };
            let cur = if periodic || j + 1 < n { x[j] } else { 0.0 };
            y[j] = prev - cur;
        }
    });
}

/// Anisotropic TV `Σ_i Σ |D̂_i f|` of one spatial frame, colour axis excluded.
pub fn frame_tv(grid: &GridSpec, frame: &[f64]) -> f64 {
    let dims = grid.spatial_dims().to_vec();
    let mut total = 0.0;
    for a in tv_axes(grid) {
        let mut d = dims.clone();
        d[a] = diff_len(grid, a);
        let mut out = vec![0.0; d.iter().product()];
        forward_diff(grid, a, &dims, frame, &mut out);
        total += out.iter().map(|v| v.abs()).sum::<f64>();
    }
    total
}

impl TvOperator {
    pub(crate) fn new(grid: &GridSpec, gamma: f64) -> Self {
        let axes = tv_axes(grid);
        let scale = 2.0 * (axes.len().max(1) as f64).sqrt();
        let weights = axes
            .iter()
            .map(|&a| gamma * grid.spatial_dims()[a] as f64 * scale)
            .collect();
        TvOperator {
            grid: grid.clone(),
            axes,
            scale,
            weights,
        }
    }

    pub(crate) fn block_lens(&self) -> Vec<usize> {
        let dims = self.grid.interior_dims();
        self.axes
            .iter()
            .map(|&a| {
                let mut d = dims.clone();
                d[a] = diff_len(&self.grid, a);
                d.iter().product()
            })
            .collect()
    }

    /// `G f`, one block per axis.
    pub(crate) fn apply(&self, f: &[f64], out: &mut [Vec<f64>]) {
        let dims = self.grid.interior_dims();
        for (&a, o) in self.axes.iter().zip(out.iter_mut()) {
            forward_diff(&self.grid, a, &dims, f, o);
            o.iter_mut().for_each(|v| *v /= self.scale);
        }
    }

    /// `out += Gᵀ w`.
    pub(crate) fn apply_t_add(&self, w: &[Vec<f64>], out: &mut [f64]) {
        let dims = self.grid.interior_dims();
        let mut tmp = vec![0.0; out.len()];
        for (&a, wa) in self.axes.iter().zip(w) {
            forward_diff_t(&self.grid, a, &dims, wa, &mut tmp);
            out.iter_mut().zip(&tmp).for_each(|(o, t)| *o += t / self.scale);
        }
    }

    /// `prox` of `Σ_i w_i ‖·‖₁` with step `1/σ`: soft-thresholding.
    pub(crate) fn shrink(&self, z: &mut [Vec<f64>], sigma: f64) {
        for (za, w) in z.iter_mut().zip(&self.weights) {
            let t = w / sigma;
            za.iter_mut().for_each(|v| *v = v.signum() * (v.abs() - t).max(0.0));
        }
    }

    /// `γ Σ_i N_i ‖D̂_i f‖₁` over the interior layers.
    #[cfg(test)]
    pub(crate) fn penalty(&self, f: &[f64]) -> f64 {
        let mut blocks: Vec<Vec<f64>> = self.block_lens().into_iter().map(|n| vec![0.0; n]).collect();
        self.apply(f, &mut blocks);
        blocks
            .iter()
            .zip(&self.weights)
            .map(|(b, w)| w * b.iter().map(|v| v.abs()).sum::<f64>())
            .sum()
    }
}
