//! Orthogonal projection onto `C = {x : A x = f⁻}` (least-squares when the
//! endpoint masses differ).
//!
//! `A Aᵀ = Σ_i N_i² Δ_i ⊗ .. + P² Δ_P^mirr ⊗ I` is diagonalised by the tensor
//! product of DCT-II (mirror axes and time) and DFT (periodic axes), with
//! eigenvalues the sums of the per-axis spectra. The only zero eigenvalue is
//! the constant mode.

use crate::error::{OtError, Result};
use crate::grid::{CenterField, FaceField, GridSpec};
use crate::operators::{self, OperatorSet};
use crate::transforms::{sum_spectra, AxisTransform, SpectralOperator, SpectralPlan};

/// Eigenvalues below `PINV_RTOL · max` are treated as zero.
pub const PINV_RTOL: f64 = 1e-12;

/// Spectrum of `A Aᵀ` on the midpoint grid, column-major.
pub fn aat_spectrum(grid: &GridSpec) -> Vec<f64> {
    let plan = SpectralPlan::for_grid(grid);
    let spectra: Vec<Vec<f64>> = plan.axes.iter().map(|a| a.scaled_laplacian()).collect();
    sum_spectra(&spectra)
}

/// Spectral operator `T⁻¹ diag(w(d)) T` on the midpoint grid, where `d` runs
/// over the eigenvalues of `A Aᵀ`.
pub(crate) fn midpoint_operator(grid: &GridSpec, w: impl Fn(f64) -> f64) -> SpectralOperator {
    let plan = SpectralPlan::for_grid(grid);
    let axes = plan.axes.iter().map(|a| AxisTransform::new(Some(a.kind), a.len)).collect();
    let weights = aat_spectrum(grid).into_iter().map(w).collect();
    SpectralOperator::new(grid.midpoint_dims(), axes, weights)
}

#[derive(Clone)]
pub struct ProjectionPlan {
    grid: GridSpec,
    pinv: SpectralOperator,
}

impl std::fmt::Debug for ProjectionPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProjectionPlan").field("grid", &self.grid).finish_non_exhaustive()
    }
}

impl ProjectionPlan {
    pub fn new(grid: &GridSpec) -> Self {
        let max = aat_spectrum(grid).into_iter().fold(0.0, f64::max);
        let pinv = midpoint_operator(grid, |d| if d.abs() <= PINV_RTOL * max { 0.0 } else { 1.0 / d });
        ProjectionPlan {
            grid: grid.clone(),
            pinv,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// The pseudo-inverted eigenvalues `d̃`.
    pub fn inverse_eigenvalues(&self) -> &[f64] {
        self.pinv.weights()
    }

    /// `(A Aᵀ)† y`.
    pub fn apply_pinv(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.grid.midpoint_len() {
            return Err(OtError::shape("apply_pinv", "time", self.grid.midpoint_len(), y.len()));
        }
        Ok(self.pinv.apply(y))
    }

    /// In-place `x ← x - Aᵀ (A Aᵀ)† (A x - f⁻)` on raw slices.
    pub(crate) fn project_in_place(&self, m: &mut [f64], f: &mut [f64], f_minus: &[f64]) {
        let g = &self.grid;
        let mut r = vec![0.0; g.midpoint_len()];
        operators::apply_a(g, m, f, &mut r);
        r.iter_mut().zip(f_minus).for_each(|(a, b)| *a -= b);
        let w = self.pinv.apply(&r);
        let mut cm = vec![0.0; m.len()];
        let mut cf = vec![0.0; f.len()];
        operators::apply_at(g, &w, &mut cm, &mut cf);
        m.iter_mut().zip(&cm).for_each(|(a, b)| *a -= b);
        f.iter_mut().zip(&cf).for_each(|(a, b)| *a -= b);
    }
}

/// `Π_C(a) = a - Aᵀ (A Aᵀ)† (A a - f⁻)`.
pub fn project_onto_c(
    m: &FaceField,
    f: &CenterField,
    plan: &ProjectionPlan,
    ops: &OperatorSet,
) -> Result<(FaceField, CenterField)> {
    if ops.grid() != plan.grid() {
        return Err(OtError::InvalidArgument("projection plan was built for a different grid".into()));
    }
    let g = plan.grid();
    m.check(g)?;
    let mut mv = m.as_slice().to_vec();
    let mut fv = f.flatten(g)?;
    plan.project_in_place(&mut mv, &mut fv, ops.f_minus());
    Ok((FaceField::unflatten(g, &mv)?, ops.center(fv)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoundaryKind::{self, *};
    use crate::solvers::dense::{self, dense_oracle, OracleKind};
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn combos() -> Vec<GridSpec> {
        let mut v = vec![
            GridSpec::signal(5, 3, Mirror).unwrap(),
            GridSpec::signal(5, 3, Periodic).unwrap(),
            GridSpec::grayscale(4, 3, 4, Periodic).unwrap(),
        ];
        for b in [Mirror, Periodic] {
            for c in [Mirror, Periodic] {
                v.push(GridSpec::rgb(4, 3, 4, b, c).unwrap());
            }
        }
        v
    }

    #[test]
    fn exactly_one_zero_eigenvalue() {
        for g in combos() {
            let zeros = ProjectionPlan::new(&g).inverse_eigenvalues().iter().filter(|&&d| d == 0.0).count();
            assert_eq!(zeros, 1);
        }
    }

    #[test]
    fn spectral_pinv_matches_dense() {
        for g in combos() {
            let plan = ProjectionPlan::new(&g);
            let n = g.midpoint_len();
            let mut spectral = DMatrix::zeros(n, n);
            for j in 0..n {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                spectral.set_column(j, &DVector::from_vec(plan.apply_pinv(&e).unwrap()));
            }
            let reference = dense_oracle(&g, OracleKind::PseudoInverse).unwrap();
            let rel = (&spectral - &reference).norm() / reference.norm();
            assert!(rel < 1e-10, "{g:?}: {rel}");
        }
    }

    #[test]
    fn aat_eigenvalues_match_dense_multiset() {
        for g in combos() {
            let a = dense::constraint_matrix(&g);
            let mut dense_eigs: Vec<f64> = (&a * a.transpose()).symmetric_eigenvalues().iter().copied().collect();
            let mut ours = aat_spectrum(&g);
            dense_eigs.sort_by(f64::total_cmp);
            ours.sort_by(f64::total_cmp);
            let scale = ours.last().copied().unwrap();
            for (x, y) in dense_eigs.iter().zip(&ours) {
                assert!((x - y).abs() <= 1e-10 * scale, "{g:?}");
            }
        }
    }

    fn spike_problem(b: BoundaryKind) -> (GridSpec, OperatorSet) {
        let g = GridSpec::signal(5, 3, b).unwrap();
        let mut d = vec![0.0; 5];
        d[2] = 1.0;
        let ops = OperatorSet::new(&g, d.clone().into(), d.into()).unwrap();
        (g, ops)
    }

    #[test]
    fn spike_projection_has_unit_layers() {
        let (g, ops) = spike_problem(Mirror);
        let plan = ProjectionPlan::new(&g);
        let (m, f) = project_onto_c(&FaceField::zeros(&g), &ops.center(vec![0.0; 10]).unwrap(), &plan, &ops).unwrap();
        for s in crate::operators::mass_per_layer(&f) {
            assert!((s - 1.0).abs() < 1e-12);
        }
        // dense oracle: a - Aᵀ (AAᵀ)† (A a - f⁻) with a = 0
        let a = dense::constraint_matrix(&g);
        let pinv = dense_oracle(&g, OracleKind::PseudoInverse).unwrap();
        let x = a.transpose() * pinv * DVector::from_vec(ops.f_minus().to_vec());
        let got: Vec<f64> = [m.as_slice(), f.interior()].concat();
        for (u, v) in got.iter().zip(x.iter()) {
            assert!((u - v).abs() < 1e-10);
        }
        assert!(ops.residual(&m, &f).unwrap() < 1e-10);
    }

    #[test]
    fn projection_is_idempotent_and_fixes_feasible_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for g in combos() {
            let c = g.cells();
            let f0: Vec<f64> = random(c, &mut rng).iter().map(|v| v.abs()).collect();
            let total: f64 = f0.iter().sum();
            let mut f1: Vec<f64> = random(c, &mut rng).iter().map(|v| v.abs()).collect();
            let t1: f64 = f1.iter().sum();
            f1.iter_mut().for_each(|v| *v *= total / t1);
            let ops = OperatorSet::new(&g, f0.into(), f1.into()).unwrap();
            let plan = ProjectionPlan::new(&g);
            let m = FaceField::unflatten(&g, &random(g.m_len(), &mut rng)).unwrap();
            let f = ops.center(random(g.f_len(), &mut rng)).unwrap();
            let (m1, f1p) = project_onto_c(&m, &f, &plan, &ops).unwrap();
            let scale = ops.f_minus().iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(ops.residual(&m1, &f1p).unwrap() <= 1e-10 * scale);
            let (m2, f2) = project_onto_c(&m1, &f1p, &plan, &ops).unwrap();
            let d = m1.as_slice().iter().zip(m2.as_slice()).chain(f1p.interior().iter().zip(f2.interior()));
            assert!(d.map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) < 1e-10);
        }
    }

    #[test]
    fn unbalanced_masses_give_least_squares() {
        let g = GridSpec::signal(4, 3, Mirror).unwrap();
        let ops = OperatorSet::new(&g, vec![1.0, 0.0, 0.0, 0.0].into(), vec![0.0, 0.0, 0.0, 2.0].into()).unwrap();
        let plan = ProjectionPlan::new(&g);
        let (m, f) = project_onto_c(&FaceField::zeros(&g), &ops.center(vec![0.0; 8]).unwrap(), &plan, &ops).unwrap();
        // residual is orthogonal to the range of A, i.e. constant
        let r: Vec<f64> = ops.apply_a(&m, &f).unwrap().iter().zip(ops.f_minus()).map(|(a, b)| a - b).collect();
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        assert!(r.iter().all(|v| (v - mean).abs() < 1e-10));
    }

    proptest::proptest! {
        #[test]
        fn projection_is_idempotent_and_least_squares(gi in 0usize..7, seed in proptest::prelude::any::<u64>()) {
            let g = combos().swap_remove(gi);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f0: std::sync::Arc<[f64]> = random(g.cells(), &mut rng).iter().map(|v| v.abs()).collect();
            let f1: std::sync::Arc<[f64]> = random(g.cells(), &mut rng).iter().map(|v| v.abs()).collect();
            let ops = OperatorSet::new(&g, f0, f1).unwrap();
            let plan = ProjectionPlan::new(&g);
            let m = FaceField::unflatten(&g, &random(g.m_len(), &mut rng)).unwrap();
            let f = ops.center(random(g.f_len(), &mut rng)).unwrap();
            let (pm, pf) = project_onto_c(&m, &f, &plan, &ops).unwrap();
            let (qm, qf) = project_onto_c(&pm, &pf, &plan, &ops).unwrap();
            let drift = pm.as_slice().iter().zip(qm.as_slice()).chain(pf.interior().iter().zip(qf.interior()))
                .map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            proptest::prop_assert!(drift < 1e-12);
            // normal equations Aᵀ(A x - f⁻) = 0
            let mut r = ops.apply_a(&pm, &pf).unwrap();
            r.iter_mut().zip(ops.f_minus()).for_each(|(a, b)| *a -= b);
            let (gm, gf) = ops.apply_at(&r).unwrap();
            let worst = gm.as_slice().iter().chain(gf.interior()).map(|v| v.abs()).fold(0.0, f64::max);
            proptest::prop_assert!(worst < 1e-10, "{worst}");
        }
    }
}
