//! Preconditioned conjugate gradients for `(λ AᵀA + I/τ) x = r`.
//!
//! The preconditioner is the Woodbury form
//! `(λ AᵀA + I/τ)⁻¹ = τ (I - λτ Aᵀ (I + λτ A Aᵀ)⁻¹ A)`, whose inner inverse is
//! diagonal in the same basis as `A Aᵀ`.

use crate::error::{OtError, Result};
use crate::grid::GridSpec;
use crate::operators;
use crate::solvers::projection::midpoint_operator;
use crate::solvers::schur::check_lambda_tau;
use crate::transforms::SpectralOperator;

pub const DEFAULT_CG_TOL: f64 = 1e-10;
pub const DEFAULT_CG_MAX_ITER: usize = 200;

#[derive(Clone)]
pub struct CgPlan {
    grid: GridSpec,
    lambda: f64,
    tau: f64,
    inner: SpectralOperator,
    pub tol: f64,
    pub max_iter: usize,
    pub precondition: bool,
}

impl std::fmt::Debug for CgPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CgPlan")
            .field("grid", &self.grid)
            .field("lambda", &self.lambda)
            .field("tau", &self.tau)
            .field("tol", &self.tol)
            .field("max_iter", &self.max_iter)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub m: Vec<f64>,
    pub f: Vec<f64>,
    pub iterations: usize,
    /// `‖r - M x‖ / ‖r‖`.
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl CgPlan {
    pub fn new(grid: &GridSpec, lambda: f64, tau: f64) -> Result<Self> {
        check_lambda_tau(lambda, tau)?;
        let inner = midpoint_operator(grid, |d| 1.0 / (1.0 + lambda * tau * d));
        Ok(CgPlan {
            grid: grid.clone(),
            lambda,
            tau,
            inner,
            tol: DEFAULT_CG_TOL,
            max_iter: DEFAULT_CG_MAX_ITER,
            precondition: true,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// `(λ AᵀA + I/τ) x` on the concatenated vector.
    fn apply_matrix(&self, x: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        let ml = g.m_len();
        let mut ax = vec![0.0; g.midpoint_len()];
        operators::apply_a(g, &x[..ml], &x[ml..], &mut ax);
        let (om, of) = out.split_at_mut(ml);
        operators::apply_at(g, &ax, om, of);
        out.iter_mut().zip(x).for_each(|(o, v)| *o = self.lambda * *o + v / self.tau);
    }

    fn apply_preconditioner(&self, r: &[f64], out: &mut [f64]) {
        if !self.precondition {
            out.copy_from_slice(r);
            return;
        }
        let g = &self.grid;
        let ml = g.m_len();
        let mut ar = vec![0.0; g.midpoint_len()];
        operators::apply_a(g, &r[..ml], &r[ml..], &mut ar);
        let w = self.inner.apply(&ar);
        let (om, of) = out.split_at_mut(ml);
        operators::apply_at(g, &w, om, of);
        let c = self.lambda * self.tau;
        out.iter_mut().zip(r).for_each(|(o, v)| *o = self.tau * (v - c * *o));
    }

    /// Solves from the initial guess `(m0, f0)`; a zero right-hand side
    /// returns zero.
    pub fn solve(&self, r_m: &[f64], r_f: &[f64], m0: &[f64], f0: &[f64]) -> Result<CgOutcome> {
        let g = &self.grid;
        for (what, exp, got) in [("m", g.m_len(), r_m.len()), ("f", g.f_len(), r_f.len())] {
            if exp != got {
                return Err(OtError::shape("CgPlan::solve", what, exp, got));
            }
        }
        for (what, exp, got) in [("m0", g.m_len(), m0.len()), ("f0", g.f_len(), f0.len())] {
            if exp != got {
                return Err(OtError::shape("CgPlan::solve", what, exp, got));
            }
        }
        let b: Vec<f64> = [r_m, r_f].concat();
        let n = b.len();
        let b_norm = dot(&b, &b).sqrt();
        if b_norm == 0.0 {
            return Ok(CgOutcome {
                m: vec![0.0; g.m_len()],
                f: vec![0.0; g.f_len()],
                iterations: 0,
                relative_residual: 0.0,
            });
        }

        let mut x: Vec<f64> = [m0, f0].concat();
        let mut r = vec![0.0; n];
        self.apply_matrix(&x, &mut r);
        r.iter_mut().zip(&b).for_each(|(ri, bi)| *ri = bi - *ri);
        let mut rel = dot(&r, &r).sqrt() / b_norm;
        let mut z = vec![0.0; n];
        self.apply_preconditioner(&r, &mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut q = vec![0.0; n];
        let mut it = 0;
        while rel > self.tol && it < self.max_iter {
            self.apply_matrix(&p, &mut q);
            let alpha = rz / dot(&p, &q);
            if !alpha.is_finite() {
                return Err(OtError::NonFinite("conjugate gradient step"));
            }
            x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
            r.iter_mut().zip(&q).for_each(|(ri, qi)| *ri -= alpha * qi);
            it += 1;
            rel = dot(&r, &r).sqrt() / b_norm;
            if rel <= self.tol {
                break;
            }
            self.apply_preconditioner(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
        }
        let f = x.split_off(g.m_len());
        Ok(CgOutcome {
            m: x,
            f,
            iterations: it,
            relative_residual: rel,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoundaryKind::*;
    use crate::solvers::dense::{dense_oracle, OracleKind};
    use crate::solvers::schur::SchurPlan;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn matches_dense_in_every_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let grids = [
            GridSpec::signal(5, 3, Mirror).unwrap(),
            GridSpec::grayscale(4, 3, 3, Periodic).unwrap(),
            GridSpec::rgb(3, 2, 3, Mirror, Periodic).unwrap(),
            GridSpec::rgb(3, 3, 2, Periodic, Mirror).unwrap(),
        ];
        for g in grids {
            let plan = CgPlan::new(&g, 2.0, 0.1).unwrap();
            let inv = dense_oracle(&g, OracleKind::PenalizedInverse { lambda: 2.0, tau: 0.1 }).unwrap();
            let r = random(g.m_len() + g.f_len(), &mut rng);
            let expect = &inv * DVector::from_vec(r.clone());
            let out = plan
                .solve(&r[..g.m_len()], &r[g.m_len()..], &vec![0.0; g.m_len()], &vec![0.0; g.f_len()])
                .unwrap();
            assert!(out.relative_residual <= 1e-10);
            assert!(out.iterations <= 60);
            let got = DVector::from_vec([out.m, out.f].concat());
            assert!((&got - &expect).norm() / expect.norm() < 1e-9, "{g:?}");
        }
    }

    #[test]
    fn unpreconditioned_cg_converges_too() {
        let g = GridSpec::signal(6, 4, Periodic).unwrap();
        let mut plan = CgPlan::new(&g, 1.0, 0.05).unwrap();
        plan.precondition = false;
        plan.max_iter = 2000;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = random(g.m_len() + g.f_len(), &mut rng);
        let out = plan
            .solve(&r[..g.m_len()], &r[g.m_len()..], &vec![0.0; g.m_len()], &vec![0.0; g.f_len()])
            .unwrap();
        assert!(out.relative_residual <= 1e-10);
    }

    #[test]
    fn agrees_with_block_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for b in [Mirror, Periodic] {
            let g = GridSpec::signal(16, 8, b).unwrap();
            let cg = CgPlan::new(&g, 5.0, 0.02).unwrap();
            let schur = SchurPlan::new(&g, 5.0, 0.02).unwrap();
            for _ in 0..5 {
                let r = random(g.m_len() + g.f_len(), &mut rng);
                let (rm, rf) = r.split_at(g.m_len());
                let a = cg.solve(rm, rf, &random(g.m_len(), &mut rng), &random(g.f_len(), &mut rng)).unwrap();
                let (m, f) = schur.solve(rm, rf).unwrap();
                let diff = a.m.iter().zip(&m).chain(a.f.iter().zip(&f)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                assert!(diff < 1e-9);
            }
        }
    }

    #[test]
    fn zero_rhs() {
        let g = GridSpec::signal(4, 2, Mirror).unwrap();
        let plan = CgPlan::new(&g, 1.0, 1.0).unwrap();
        let out = plan.solve(&[0.0; 6], &[0.0; 4], &[1.0; 6], &[1.0; 4]).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.m.iter().chain(&out.f).all(|&v| v == 0.0));
    }

    proptest::proptest! {
        #[test]
        fn agrees_with_schur_in_1d(
            n in 2usize..10,
            p in 2usize..7,
            periodic in proptest::prelude::any::<bool>(),
            log_lambda in -2.0..3.0f64,
            seed in proptest::prelude::any::<u64>(),
        ) {
            let g = GridSpec::signal(n, p, if periodic { Periodic } else { Mirror }).unwrap();
            let (lambda, tau) = (10f64.powf(log_lambda), 0.02);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rm = random(g.m_len(), &mut rng);
            let rf = random(g.f_len(), &mut rng);
            let (sm, sf) = SchurPlan::new(&g, lambda, tau).unwrap().solve(&rm, &rf).unwrap();
            let out = CgPlan::new(&g, lambda, tau)
                .unwrap()
                .solve(&rm, &rf, &vec![0.0; g.m_len()], &vec![0.0; g.f_len()])
                .unwrap();
            let scale = sm.iter().chain(&sf).map(|v| v.abs()).fold(0.0, f64::max);
            let diff = sm.iter().chain(&sf).zip(out.m.iter().chain(&out.f)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            proptest::prop_assert!(diff <= 1e-9 * scale.max(1.0), "{diff}");
        }
    }
}
