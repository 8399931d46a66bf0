//! Averaging and difference operators on the staggered grid.
//!
//! Momentum block `i` lives on the faces of axis `i` at half-integer times,
//! the density on cell centres at integer times. Everything is applied
//! matrix-free, one axis at a time:
//!
//! ```text
//! S_m m  : face -> centre averages along axis i      (mirror: S_Nᵀ, periodic: S_N^perᵀ)
//! D_m m  : Σ_i  N_i-scaled face differences          (mirror: D_Nᵀ, periodic: D_N^perᵀ)
//! S_f f  : time averages of neighbouring layers       (S_Pᵀ ⊗ I)
//! D_f f  : P-scaled time differences                  (D_Pᵀ ⊗ I)
//! A      = (D_m | D_f),  A (m, f) = f⁻ is the discrete continuity equation
//! ```

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{OtError, Result};
use crate::grid::{check_endpoint, BoundaryKind, CenterField, FaceField, GridSpec};
use crate::nd;

const PAR_LAYERS: usize = 1 << 13;

/// Operators bound to a grid and a pair of endpoint densities.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    grid: GridSpec,
    f0: Arc<[f64]>,
    f1: Arc<[f64]>,
    f_plus: Vec<f64>,
    f_minus: Vec<f64>,
}

impl OperatorSet {
    pub fn new(grid: &GridSpec, f0: Arc<[f64]>, f1: Arc<[f64]>) -> Result<Self> {
        check_endpoint(grid, &f0, "f0")?;
        check_endpoint(grid, &f1, "f1")?;
        let cells = grid.cells();
        let p = grid.time_steps();
        let pf = p as f64;
        let mut f_plus = vec![0.0; cells * p];
        let mut f_minus = vec![0.0; cells * p];
        for c in 0..cells {
            f_plus[c] += 0.5 * f0[c];
            f_plus[(p - 1) * cells + c] += 0.5 * f1[c];
            f_minus[c] -= pf * f0[c];
            f_minus[(p - 1) * cells + c] += pf * f1[c];
        }
        Ok(OperatorSet {
            grid: grid.clone(),
            f0,
            f1,
            f_plus,
            f_minus,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn f0(&self) -> &Arc<[f64]> {
        &self.f0
    }

    pub fn f1(&self) -> &Arc<[f64]> {
        &self.f1
    }

    /// `½(f0, 0, .., 0, f1)` on the `P` half-time layers.
    pub fn f_plus(&self) -> &[f64] {
        &self.f_plus
    }

    /// `P(-f0, 0, .., 0, f1)`, the right-hand side of the continuity equation.
    pub fn f_minus(&self) -> &[f64] {
        &self.f_minus
    }

    /// Wraps an interior vector with this set's endpoints.
    pub fn center(&self, interior: Vec<f64>) -> Result<CenterField> {
        CenterField::new(&self.grid, interior, self.f0.clone(), self.f1.clone())
    }

    /// `S_m m`, one midpoint block (cells × P) per spatial axis.
    pub fn apply_sm(&self, m: &FaceField) -> Result<Vec<Vec<f64>>> {
        m.check(&self.grid)?;
        let len = self.grid.midpoint_len();
        Ok((0..self.grid.ndim())
            .map(|a| {
                let mut out = vec![0.0; len];
                sm_axis(&self.grid, a, m.block(a), &mut out);
                out
            })
            .collect())
    }

    /// `S_mᵀ`, the adjoint of [`apply_sm`](Self::apply_sm).
    pub fn apply_sm_t(&self, y: &[Vec<f64>]) -> Result<FaceField> {
        let g = &self.grid;
        if y.len() != g.ndim() {
            return Err(OtError::shape("apply_sm_t", "blocks", g.ndim(), y.len()));
        }
        let mut out = FaceField::zeros(g);
        for (a, ya) in y.iter().enumerate() {
            check_len("apply_sm_t", format!("block {}", a + 1), g.midpoint_len(), ya.len())?;
            sm_t_axis(g, a, ya, out.block_mut(a));
        }
        Ok(out)
    }

    /// `S_f f`, plus `f⁺` when `with_endpoints` is set.
    pub fn apply_sf(&self, f: &CenterField, with_endpoints: bool) -> Result<Vec<f64>> {
        check_len("apply_sf", "interior", self.grid.f_len(), f.interior().len())?;
        let mut out = vec![0.0; self.grid.midpoint_len()];
        sf(&self.grid, f.interior(), &mut out);
        if with_endpoints {
            out.iter_mut().zip(&self.f_plus).for_each(|(o, p)| *o += p);
        }
        Ok(out)
    }

    /// `S_fᵀ y`, returned as interior layers.
    pub fn apply_sf_t(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len("apply_sf_t", "time", self.grid.midpoint_len(), y.len())?;
        let mut out = vec![0.0; self.grid.f_len()];
        sf_t(&self.grid, y, &mut out);
        Ok(out)
    }

    pub fn apply_dm(&self, m: &FaceField) -> Result<Vec<f64>> {
        m.check(&self.grid)?;
        let mut out = vec![0.0; self.grid.midpoint_len()];
        dm(&self.grid, m.as_slice(), &mut out);
        Ok(out)
    }

    pub fn apply_dm_t(&self, y: &[f64]) -> Result<FaceField> {
        check_len("apply_dm_t", "time", self.grid.midpoint_len(), y.len())?;
        let mut out = FaceField::zeros(&self.grid);
        dm_t(&self.grid, y, out.as_mut_slice());
        Ok(out)
    }

    pub fn apply_df(&self, f: &CenterField) -> Result<Vec<f64>> {
        check_len("apply_df", "interior", self.grid.f_len(), f.interior().len())?;
        let mut out = vec![0.0; self.grid.midpoint_len()];
        df(&self.grid, f.interior(), &mut out);
        Ok(out)
    }

    pub fn apply_df_t(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len("apply_df_t", "time", self.grid.midpoint_len(), y.len())?;
        let mut out = vec![0.0; self.grid.f_len()];
        df_t(&self.grid, y, &mut out);
        Ok(out)
    }

    /// `A (m, f) = D_m m + D_f f`.
    pub fn apply_a(&self, m: &FaceField, f: &CenterField) -> Result<Vec<f64>> {
        m.check(&self.grid)?;
        check_len("apply_a", "interior", self.grid.f_len(), f.interior().len())?;
        let mut out = vec![0.0; self.grid.midpoint_len()];
        apply_a(&self.grid, m.as_slice(), f.interior(), &mut out);
        Ok(out)
    }

    pub fn apply_at(&self, y: &[f64]) -> Result<(FaceField, CenterField)> {
        check_len("apply_at", "time", self.grid.midpoint_len(), y.len())?;
        let mut m = FaceField::zeros(&self.grid);
        let mut f = vec![0.0; self.grid.f_len()];
        apply_at(&self.grid, y, m.as_mut_slice(), &mut f);
        Ok((m, self.center(f)?))
    }

    /// `‖A (m, f) - f⁻‖₂`.
    pub fn residual(&self, m: &FaceField, f: &CenterField) -> Result<f64> {
        let r = self.apply_a(m, f)?;
        Ok(r.iter().zip(&self.f_minus).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
    }
}

/// Total mass of every time layer `0..=P`, endpoints included.
pub fn mass_per_layer(f: &CenterField) -> Vec<f64> {
    (0..=f.time_steps()).map(|k| f.layer(k).iter().sum()).collect()
}

fn check_len(what: &'static str, axis: impl Into<String>, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(OtError::shape(what, axis, expected, got));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// raw kernels on flat column-major slices

fn block_dims(g: &GridSpec, axis: usize) -> Vec<usize> {
    let mut d = g.face_dims(axis);
    d.push(g.time_steps());
    d
}

fn block_offsets(g: &GridSpec) -> Vec<usize> {
    let mut off = vec![0];
    for a in 0..g.ndim() {
        off.push(off[a] + g.face_block_len(a));
    }
    off
}

/// Face block of `axis` -> midpoint array.
pub(crate) fn sm_axis(g: &GridSpec, axis: usize, m: &[f64], out: &mut [f64]) {
    let n = g.spatial_dims()[axis];
    let dims = block_dims(g, axis);
    match g.boundary(axis) {
        BoundaryKind::Mirror => {
            if n == 1 {
                out.fill(0.0);
                return;
            }
            nd::map_axis(m, &dims, axis, n, out, |x, y| {
                y[0] = 0.5 * x[0];
                for j in 1..n - 1 {
                    y[j] = 0.5 * (x[j - 1] + x[j]);
                }
                y[n - 1] = 0.5 * x[n - 2];
            })
        }
        BoundaryKind::Periodic => nd::map_axis(m, &dims, axis, n, out, |x, y| {
            for j in 0..n {
                y[j] = 0.5 * (x[j] + x[(j + 1) % n]);
            }
        }),
    }
}

/// Midpoint array -> face block of `axis`.
pub(crate) fn sm_t_axis(g: &GridSpec, axis: usize, y: &[f64], out: &mut [f64]) {
    let n = g.spatial_dims()[axis];
    let dims = g.midpoint_dims();
    match g.boundary(axis) {
        BoundaryKind::Mirror => {
            if n == 1 {
                return;
            }
            nd::map_axis(y, &dims, axis, n - 1, out, |x, z| {
                for k in 0..n - 1 {
                    z[k] = 0.5 * (x[k] + x[k + 1]);
                }
            })
        }
        BoundaryKind::Periodic => nd::map_axis(y, &dims, axis, n, out, |x, z| {
            for k in 0..n {
                z[k] = 0.5 * (x[k] + x[(k + n - 1) % n]);
            }
        }),
    }
}

pub(crate) fn dm_axis(g: &GridSpec, axis: usize, m: &[f64], out: &mut [f64]) {
    let n = g.spatial_dims()[axis];
    let nf = n as f64;
    let dims = block_dims(g, axis);
    match g.boundary(axis) {
        BoundaryKind::Mirror => {
            if n == 1 {
                out.fill(0.0);
                return;
            }
            nd::map_axis(m, &dims, axis, n, out, |x, y| {
                y[0] = -nf * x[0];
                for j in 1..n - 1 {
                    y[j] = nf * (x[j - 1] - x[j]);
                }
                y[n - 1] = nf * x[n - 2];
            })
        }
        BoundaryKind::Periodic => nd::map_axis(m, &dims, axis, n, out, |x, y| {
            for j in 0..n {
                y[j] = nf * (x[j] - x[(j + 1) % n]);
            }
        }),
    }
}

pub(crate) fn dm_t_axis(g: &GridSpec, axis: usize, y: &[f64], out: &mut [f64]) {
    let n = g.spatial_dims()[axis];
    let nf = n as f64;
    let dims = g.midpoint_dims();
    match g.boundary(axis) {
        BoundaryKind::Mirror => {
            if n == 1 {
                return;
            }
            nd::map_axis(y, &dims, axis, n - 1, out, |x, z| {
                for k in 0..n - 1 {
                    z[k] = nf * (x[k + 1] - x[k]);
                }
            })
        }
        BoundaryKind::Periodic => nd::map_axis(y, &dims, axis, n, out, |x, z| {
            for k in 0..n {
                z[k] = nf * (x[k] - x[(k + n - 1) % n]);
            }
        }),
    }
}

/// `D_m m` for the concatenated momentum; blocks are summed in axis order.
pub(crate) fn dm(g: &GridSpec, m: &[f64], out: &mut [f64]) {
    let off = block_offsets(g);
    out.fill(0.0);
    let mut tmp = vec![0.0; out.len()];
    for a in 0..g.ndim() {
        dm_axis(g, a, &m[off[a]..off[a + 1]], &mut tmp);
        out.iter_mut().zip(&tmp).for_each(|(o, t)| *o += t);
    }
}

pub(crate) fn dm_t(g: &GridSpec, y: &[f64], out: &mut [f64]) {
    let off = block_offsets(g);
    for a in 0..g.ndim() {
        dm_t_axis(g, a, y, &mut out[off[a]..off[a + 1]]);
    }
}

/// Runs `f(k, layer_k)` over the `P` output layers of a midpoint array.
fn for_layers(out: &mut [f64], cells: usize, f: impl Fn(usize, &mut [f64]) + Sync + Send) {
    if out.len() >= PAR_LAYERS {
        out.par_chunks_mut(cells).enumerate().for_each(|(k, l)| f(k, l));
    } else {
        out.chunks_mut(cells).enumerate().for_each(|(k, l)| f(k, l));
    }
}

/// `S_f f` without the endpoint term.
pub(crate) fn sf(g: &GridSpec, f: &[f64], out: &mut [f64]) {
    let cells = g.cells();
    let p = g.time_steps();
    for_layers(out, cells, |k, o| {
        // interior layer l (0-based) is time l + 1; output k sits between k and k + 1
        o.fill(0.0);
        if k >= 1 {
            let prev = &f[(k - 1) * cells..k * cells];
            o.iter_mut().zip(prev).for_each(|(a, b)| *a += 0.5 * b);
        }
        if k + 1 < p {
            let next = &f[k * cells..(k + 1) * cells];
            o.iter_mut().zip(next).for_each(|(a, b)| *a += 0.5 * b);
        }
    });
}

pub(crate) fn sf_t(g: &GridSpec, y: &[f64], out: &mut [f64]) {
    let cells = g.cells();
    for_layers(out, cells, |l, o| {
        let a = &y[l * cells..(l + 1) * cells];
        let b = &y[(l + 1) * cells..(l + 2) * cells];
        for ((o, a), b) in o.iter_mut().zip(a).zip(b) {
            *o = 0.5 * (a + b);
        }
    });
}

pub(crate) fn df(g: &GridSpec, f: &[f64], out: &mut [f64]) {
    let cells = g.cells();
    let p = g.time_steps();
    let pf = p as f64;
    for_layers(out, cells, |k, o| {
        o.fill(0.0);
        if k >= 1 {
            let prev = &f[(k - 1) * cells..k * cells];
            o.iter_mut().zip(prev).for_each(|(a, b)| *a += pf * b);
        }
        if k + 1 < p {
            let next = &f[k * cells..(k + 1) * cells];
            o.iter_mut().zip(next).for_each(|(a, b)| *a -= pf * b);
        }
    });
}

pub(crate) fn df_t(g: &GridSpec, y: &[f64], out: &mut [f64]) {
    let cells = g.cells();
    let pf = g.time_steps() as f64;
    for_layers(out, cells, |l, o| {
        let a = &y[l * cells..(l + 1) * cells];
        let b = &y[(l + 1) * cells..(l + 2) * cells];
        for ((o, a), b) in o.iter_mut().zip(a).zip(b) {
            *o = pf * (b - a);
        }
    });
}

pub(crate) fn apply_a(g: &GridSpec, m: &[f64], f: &[f64], out: &mut [f64]) {
    dm(g, m, out);
    let mut tmp = vec![0.0; out.len()];
    df(g, f, &mut tmp);
    out.iter_mut().zip(&tmp).for_each(|(o, t)| *o += t);
}

pub(crate) fn apply_at(g: &GridSpec, y: &[f64], m: &mut [f64], f: &mut [f64]) {
    dm_t(g, y, m);
    df_t(g, y, f);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::dense;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn ops(grid: &GridSpec, rng: &mut ChaCha8Rng) -> OperatorSet {
        let c = grid.cells();
        OperatorSet::new(grid, random(c, rng).into(), random(c, rng).into()).unwrap()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    fn grids() -> Vec<GridSpec> {
        use BoundaryKind::*;
        let mut v = Vec::new();
        for b in [Mirror, Periodic] {
            v.push(GridSpec::signal(5, 3, b).unwrap());
            v.push(GridSpec::signal(1, 2, b).unwrap());
            v.push(GridSpec::grayscale(4, 3, 4, b).unwrap());
            for c in [Mirror, Periodic] {
                v.push(GridSpec::rgb(4, 3, 4, b, c).unwrap());
            }
        }
        v
    }

    #[test]
    fn sm_mirror_example() {
        let g = GridSpec::signal(4, 2, BoundaryKind::Mirror).unwrap();
        let o = OperatorSet::new(&g, vec![0.0; 4].into(), vec![0.0; 4].into()).unwrap();
        let m = FaceField::unflatten(&g, &[1.0, 2.0, 3.0, 1.0, 2.0, 3.0]).unwrap();
        let out = o.apply_sm(&m).unwrap();
        assert_eq!(out[0][..4], [0.5, 1.5, 2.5, 1.5]);
    }

    #[test]
    fn sm_periodic_alternating_kernel() {
        let g = GridSpec::signal(4, 2, BoundaryKind::Periodic).unwrap();
        let o = OperatorSet::new(&g, vec![0.0; 4].into(), vec![0.0; 4].into()).unwrap();
        let m = FaceField::unflatten(&g, &[1.0, -1.0, 1.0, -1.0, 2.0, 2.0, 2.0, 2.0]).unwrap();
        let out = o.apply_sm(&m).unwrap();
        assert_eq!(out[0][..4], [0.0; 4]);
        assert_eq!(out[0][4..], [2.0; 4]);
    }

    #[test]
    fn sm_mirror_and_odd_periodic_have_trivial_kernel() {
        use BoundaryKind::*;
        for (n, b) in [(4, Mirror), (5, Mirror), (5, Periodic)] {
            let g = GridSpec::signal(n, 2, b).unwrap();
            let sm = dense::sm(&g);
            let smallest = sm.transpose().clone() * &sm;
            let eig = smallest.symmetric_eigenvalues();
            assert!(eig.min() > 1e-6, "n={n} {b:?}");
        }
    }

    #[test]
    fn sf_two_steps() {
        let g = GridSpec::signal(2, 2, BoundaryKind::Mirror).unwrap();
        let o = OperatorSet::new(&g, vec![1.0, 2.0].into(), vec![5.0, 7.0].into()).unwrap();
        let f = o.center(vec![3.0, 4.0]).unwrap();
        let out = o.apply_sf(&f, true).unwrap();
        assert_eq!(out, vec![2.0, 3.0, 4.0, 5.5]);
    }

    #[test]
    fn constant_density_reproduces_endpoint() {
        let g = GridSpec::grayscale(3, 2, 4, BoundaryKind::Mirror).unwrap();
        let f0: Vec<f64> = (0..6).map(|v| v as f64 + 1.0).collect();
        let o = OperatorSet::new(&g, f0.clone().into(), f0.clone().into()).unwrap();
        let f = o.center(f0.repeat(3)).unwrap();
        let sf = o.apply_sf(&f, true).unwrap();
        for layer in sf.chunks(6) {
            assert_eq!(layer, &f0[..]);
        }
        let a = o.apply_a(&FaceField::zeros(&g), &f).unwrap();
        assert_eq!(a, o.f_minus());
    }

    #[test]
    fn boundary_vectors() {
        let g = GridSpec::signal(3, 4, BoundaryKind::Periodic).unwrap();
        let o = OperatorSet::new(&g, vec![1.0, 2.0, 3.0].into(), vec![0.5, 0.5, 0.0].into()).unwrap();
        let sum: f64 = o.f_minus().iter().sum();
        assert_abs_diff_eq!(sum, 4.0 * (1.0 - 6.0), epsilon = 1e-12);
        assert_eq!(&o.f_plus()[..3], &[0.5, 1.0, 1.5]);
        assert_eq!(&o.f_plus()[9..], &[0.25, 0.25, 0.0]);
        assert!(o.f_plus()[3..9].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matrix_free_matches_dense_kronecker() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for g in grids() {
            let o = ops(&g, &mut rng);
            let m = random(g.m_len(), &mut rng);
            let f = random(g.f_len(), &mut rng);
            let y = random(g.midpoint_len(), &mut rng);
            let mf = FaceField::unflatten(&g, &m).unwrap();
            let fc = o.center(f.clone()).unwrap();

            let a = dense::constraint_matrix(&g);
            let x = DVector::from_vec([m.clone(), f.clone()].concat());
            let ax = &a * &x;
            assert!(max_diff(&o.apply_a(&mf, &fc).unwrap(), ax.as_slice()) < 1e-12, "{g:?}");
            let aty = a.transpose() * DVector::from_vec(y.clone());
            let (tm, tf) = o.apply_at(&y).unwrap();
            assert!(max_diff(&[tm.as_slice(), tf.interior()].concat(), aty.as_slice()) < 1e-12);

            let sm = dense::sm(&g);
            let smx = &sm * DVector::from_vec(m.clone());
            let got: Vec<f64> = o.apply_sm(&mf).unwrap().concat();
            assert!(max_diff(&got, smx.as_slice()) < 1e-12);
            let ys = random(sm.nrows(), &mut rng);
            let smty = sm.transpose() * DVector::from_vec(ys.clone());
            let blocks: Vec<Vec<f64>> = ys.chunks(g.midpoint_len()).map(|c| c.to_vec()).collect();
            assert!(max_diff(o.apply_sm_t(&blocks).unwrap().as_slice(), smty.as_slice()) < 1e-12);

            let s = dense::sf(&g);
            let sfx = &s * DVector::from_vec(f.clone());
            assert!(max_diff(&o.apply_sf(&fc, false).unwrap(), sfx.as_slice()) < 1e-12);
            let sfty = s.transpose() * DVector::from_vec(y.clone());
            assert!(max_diff(&o.apply_sf_t(&y).unwrap(), sfty.as_slice()) < 1e-12);
        }
    }

    #[test]
    fn constraint_rows_sum_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for g in grids() {
            let o = ops(&g, &mut rng);
            let m = FaceField::unflatten(&g, &random(g.m_len(), &mut rng)).unwrap();
            let f = o.center(random(g.f_len(), &mut rng)).unwrap();
            let s: f64 = o.apply_a(&m, &f).unwrap().iter().sum();
            assert!(s.abs() < 1e-10, "{g:?}: {s}");
        }
    }

    #[test]
    fn mass_per_layer_counts_endpoints() {
        let g = GridSpec::signal(2, 3, BoundaryKind::Mirror).unwrap();
        let o = OperatorSet::new(&g, vec![1.0, 0.0].into(), vec![0.25, 0.75].into()).unwrap();
        let f = o.center(vec![0.5, 0.5, 0.0, 1.0]).unwrap();
        assert_eq!(mass_per_layer(&f), vec![1.0, 1.0, 1.0, 1.0]);
        let z = OperatorSet::new(&g, vec![0.0; 2].into(), vec![0.0; 2].into()).unwrap();
        assert_eq!(mass_per_layer(&z.center(vec![0.0; 4]).unwrap()), vec![0.0; 4]);
    }

    #[test]
    fn shape_errors() {
        let g = GridSpec::signal(4, 3, BoundaryKind::Mirror).unwrap();
        let o = OperatorSet::new(&g, vec![0.0; 4].into(), vec![0.0; 4].into()).unwrap();
        assert!(o.apply_dm_t(&[0.0; 5]).is_err());
        assert!(o.apply_sf_t(&[0.0; 11]).is_err());
        assert!(OperatorSet::new(&g, vec![0.0; 3].into(), vec![0.0; 4].into()).is_err());
    }

    proptest! {
        #[test]
        fn adjoint_identity(seed in any::<u64>(), gi in 0usize..10) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = &grids()[gi];
            let o = ops(g, &mut rng);
            let m = random(g.m_len(), &mut rng);
            let f = random(g.f_len(), &mut rng);
            let y = random(g.midpoint_len(), &mut rng);
            let ax = o.apply_a(&FaceField::unflatten(g, &m).unwrap(), &o.center(f.clone()).unwrap()).unwrap();
            let (tm, tf) = o.apply_at(&y).unwrap();
            let lhs: f64 = ax.iter().zip(&y).map(|(a, b)| a * b).sum();
            let rhs: f64 = m.iter().zip(tm.as_slice()).chain(f.iter().zip(tf.interior())).map(|(a, b)| a * b).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs().max(rhs.abs())) * 10.0);
        }

        #[test]
        fn sf_preserves_nonnegativity(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = GridSpec::grayscale(3, 3, 3, BoundaryKind::Mirror).unwrap();
            let pos = |n, rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.gen_range(0.0..1.0)).collect() };
            let o = OperatorSet::new(&g, pos(9, &mut rng).into(), pos(9, &mut rng).into()).unwrap();
            let f = o.center(pos(18, &mut rng)).unwrap();
            prop_assert!(o.apply_sf(&f, true).unwrap().iter().all(|&v| v >= 0.0));
        }
    }
}
