//! Closed-form block solve of `(λ AᵀA + I/τ) x = r` on 1D grids.
//!
//! Writing the matrix as `[[X, Y], [Yᵀ, Z]]` with `X = λ D_mᵀD_m + I/τ`,
//! `Y = λ D_mᵀD_f`, both `X` and the Schur complement
//! `S = Z - Yᵀ X⁻¹ Y = λ P² Δ⁰_{P-1} ⊗ (I + λτ N² Δ_N)⁻¹ + I/τ`
//! are diagonalised by trigonometric transforms:
//!
//! ```text
//! X⁻¹ = I_P ⊗ T_m⁻¹ diag(1 / (λ N² d_m + 1/τ)) T_m     T_m = S_{N-1} (mirror) | F_N (periodic)
//! S⁻¹ = (S_{P-1} ⊗ T_f)⁻¹ diag(1 / (λ P² d⁰_P / (1 + λτ N² d_f) + 1/τ)) (S_{P-1} ⊗ T_f)
//!                                                      T_f = C_N (mirror) | F_N (periodic)
//! ```

use crate::error::{OtError, Result};
use crate::grid::{BoundaryKind, GridSpec};
use crate::operators;
use crate::transforms::{laplacian_eigs, sum_spectra, AxisTransform, LaplacianKind, SpectralOperator, TransformKind};

#[derive(Clone)]
pub struct SchurPlan {
    grid: GridSpec,
    lambda: f64,
    tau: f64,
    x_inv: SpectralOperator,
    s_inv: SpectralOperator,
}

impl std::fmt::Debug for SchurPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SchurPlan")
            .field("grid", &self.grid)
            .field("lambda", &self.lambda)
            .field("tau", &self.tau)
            .finish_non_exhaustive()
    }
}

pub(crate) fn check_lambda_tau(lambda: f64, tau: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(OtError::InvalidArgument(format!("λ must be positive and finite, got {lambda}")));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(OtError::InvalidArgument(format!("τ must be positive and finite, got {tau}")));
    }
    Ok(())
}

impl SchurPlan {
    pub fn new(grid: &GridSpec, lambda: f64, tau: f64) -> Result<Self> {
        check_lambda_tau(lambda, tau)?;
        if grid.ndim() != 1 {
            return Err(OtError::Unsupported(format!(
                "the block solve is implemented for 1D grids only, got {} spatial axes",
                grid.ndim()
            )));
        }
        let n = grid.spatial_dims()[0];
        let p = grid.time_steps();
        let n2 = (n * n) as f64;
        let p2 = (p * p) as f64;

        let (m_kind, d_m, f_kind, d_f) = match grid.spatial_boundary() {
            BoundaryKind::Mirror => (
                TransformKind::Dst1,
                if n >= 2 { laplacian_eigs(LaplacianKind::Zero, n)? } else { Vec::new() },
                TransformKind::Dct2,
                laplacian_eigs(LaplacianKind::Mirror, n)?,
            ),
            BoundaryKind::Periodic => {
                let d = laplacian_eigs(LaplacianKind::Periodic, n)?;
                (TransformKind::Dft, d.clone(), TransformKind::Dft, d)
            }
        };
        let faces = d_m.len();

        let x_w: Vec<f64> = sum_spectra(&[d_m, vec![0.0; p]])
            .into_iter()
            .map(|d| 1.0 / (lambda * n2 * d + 1.0 / tau))
            .collect();
        let x_inv = SpectralOperator::new(
            vec![faces, p],
            vec![AxisTransform::new(Some(m_kind), faces), AxisTransform::Identity],
            x_w,
        );

        let d_t = laplacian_eigs(LaplacianKind::Zero, p)?;
        let mut s_w = Vec::with_capacity(n * (p - 1));
        for &dt in &d_t {
            for &ds in &d_f {
                s_w.push(1.0 / (lambda * p2 * dt / (1.0 + lambda * tau * n2 * ds) + 1.0 / tau));
            }
        }
        let s_inv = SpectralOperator::new(
            vec![n, p - 1],
            vec![
                AxisTransform::new(Some(f_kind), n),
                AxisTransform::new(Some(TransformKind::Dst1), p - 1),
            ],
            s_w,
        );

        Ok(SchurPlan {
            grid: grid.clone(),
            lambda,
            tau,
            x_inv,
            s_inv,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Solves `(λ AᵀA + I/τ)(m, f) = (r_m, r_f)`.
    pub fn solve(&self, r_m: &[f64], r_f: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let g = &self.grid;
        if r_m.len() != g.m_len() {
            return Err(OtError::shape("SchurPlan::solve", "m", g.m_len(), r_m.len()));
        }
        if r_f.len() != g.f_len() {
            return Err(OtError::shape("SchurPlan::solve", "f", g.f_len(), r_f.len()));
        }
        let lam = self.lambda;
        let mut mid = vec![0.0; g.midpoint_len()];

        let t = self.x_inv.apply(r_m);
        operators::dm(g, &t, &mut mid);
        let mut yt = vec![0.0; g.f_len()];
        operators::df_t(g, &mid, &mut yt);
        let rhs_f: Vec<f64> = r_f.iter().zip(&yt).map(|(r, y)| r - lam * y).collect();
        let f = self.s_inv.apply(&rhs_f);

        operators::df(g, &f, &mut mid);
        let mut yf = vec![0.0; g.m_len()];
        operators::dm_t(g, &mid, &mut yf);
        let rhs_m: Vec<f64> = r_m.iter().zip(&yf).map(|(r, y)| r - lam * y).collect();
        let m = self.x_inv.apply(&rhs_m);
        Ok((m, f))
    }
}
