//! Column-major lane helpers for flat arrays.
//!
//! An array with dims `(n_0, .., n_{k-1})` stores element `(i_0, .., i_{k-1})`
//! at `i_0 + n_0 * (i_1 + n_1 * (..))`. Axis `a` splits the array into
//! `inner = prod(n_0..n_{a-1})`, `n_a` and `outer = prod(n_{a+1}..)`.

use rayon::prelude::*;

/// Arrays below this size are processed on the calling thread.
const PAR_THRESHOLD: usize = 1 << 13;

pub(crate) fn split_axis(dims: &[usize], axis: usize) -> (usize, usize, usize) {
    let inner = dims[..axis].iter().product();
    let outer = dims[axis + 1..].iter().product();
    (inner, dims[axis], outer)
}

/// Applies `kernel` to every lane of `input` along `axis`, writing lanes of
/// length `n_out` into `out` (same dims as `input` except along `axis`).
pub(crate) fn map_axis<F>(input: &[f64], dims: &[usize], axis: usize, n_out: usize, out: &mut [f64], kernel: F)
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let (inner, n_in, outer) = split_axis(dims, axis);
    debug_assert_eq!(input.len(), inner * n_in * outer);
    debug_assert_eq!(out.len(), inner * n_out * outer);
    if out.is_empty() {
        return;
    }
    let slab_in = inner * n_in;
    let slab_out = inner * n_out;

    let run_slab = |src: &[f64], dst: &mut [f64], lane_in: &mut Vec<f64>, lane_out: &mut Vec<f64>| {
        if inner == 1 {
            kernel(src, dst);
            return;
        }
        lane_in.resize(n_in, 0.0);
        lane_out.resize(n_out, 0.0);
        for i in 0..inner {
            for j in 0..n_in {
                lane_in[j] = src[i + inner * j];
            }
            kernel(lane_in, lane_out);
            for j in 0..n_out {
                dst[i + inner * j] = lane_out[j];
            }
        }
    };

    if out.len() >= PAR_THRESHOLD && outer > 1 {
        // slab_in may be zero when the input lane is empty
        let srcs: Vec<&[f64]> = (0..outer).map(|o| &input[o * slab_in..(o + 1) * slab_in]).collect();
        out.par_chunks_mut(slab_out)
            .zip(srcs.into_par_iter())
            .for_each_init(
                || (Vec::new(), Vec::new()),
                |(li, lo), (dst, src)| run_slab(src, dst, li, lo),
            );
    } else {
        let mut li = Vec::new();
        let mut lo = Vec::new();
        for o in 0..outer {
            run_slab(
                &input[o * slab_in..(o + 1) * slab_in],
                &mut out[o * slab_out..(o + 1) * slab_out],
                &mut li,
                &mut lo,
            );
        }
    }
}

/// In-place lane transform along `axis`. Lanes are gathered into a contiguous
/// buffer so that the work can be spread over threads; every lane is handled
/// independently, so results do not depend on the thread count.
pub(crate) fn transform_lanes<T, S, I, F>(data: &mut [T], dims: &[usize], axis: usize, init: I, f: F)
where
    T: Copy + Send + Sync + Default,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, &mut [T]) + Sync + Send,
{
    let (inner, n, outer) = split_axis(dims, axis);
    if n == 0 || data.is_empty() {
        return;
    }
    let par = data.len() >= PAR_THRESHOLD;
    if inner == 1 {
        if par {
            data.par_chunks_mut(n).for_each_init(&init, &f);
        } else {
            let mut s = init();
            data.chunks_mut(n).for_each(|lane| f(&mut s, lane));
        }
        return;
    }

    let lanes = inner * outer;
    let mut buf = vec![T::default(); lanes * n];
    for o in 0..outer {
        for j in 0..n {
            let base = inner * (j + n * o);
            for i in 0..inner {
                buf[(i + inner * o) * n + j] = data[base + i];
            }
        }
    }
    if par {
        buf.par_chunks_mut(n).for_each_init(&init, &f);
    } else {
        let mut s = init();
        buf.chunks_mut(n).for_each(|lane| f(&mut s, lane));
    }
    for o in 0..outer {
        for j in 0..n {
            let base = inner * (j + n * o);
            for i in 0..inner {
                data[base + i] = buf[(i + inner * o) * n + j];
            }
        }
    }
}

/// Visits every multi-index of `dims` in storage order.
pub(crate) fn for_each_index(dims: &[usize], mut f: impl FnMut(&[usize])) {
    if dims.contains(&0) {
        return;
    }
    let mut idx = vec![0usize; dims.len()];
    loop {
        f(&idx);
        let mut a = 0;
        loop {
            if a == dims.len() {
                return;
            }
            idx[a] += 1;
            if idx[a] < dims[a] {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}
