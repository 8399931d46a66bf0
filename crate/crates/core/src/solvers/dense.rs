//! Explicit matrices built from the Kronecker definitions of the operators,
//! and dense reference inverses for small grids.
//!
//! Arrays are column-major, so an operator `M` acting along axis `a` of an
//! array with `inner` entries before and `outer` entries after that axis is
//! `I_outer ⊗ M ⊗ I_inner`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{OtError, Result};
use crate::grid::{BoundaryKind, GridSpec};

/// Largest `m_len + f_len` accepted by [`dense_oracle`].
pub const DENSE_SIZE_CAP: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleKind {
    /// `(A Aᵀ)†`.
    PseudoInverse,
    /// `(λ AᵀA + I/τ)⁻¹`.
    PenalizedInverse { lambda: f64, tau: f64 },
}

/// `(n-1) × n`, rows `½(x_i + x_{i+1})`.
pub fn avg(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n.saturating_sub(1), n, |i, j| if j == i || j == i + 1 { 0.5 } else { 0.0 })
}

/// `n × n`, rows `½(x_{i-1} + x_i)` with wrap-around.
pub fn avg_per(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] += 0.5;
        m[(i, (i + n - 1) % n)] += 0.5;
    }
    m
}

/// `(n-1) × n`, rows `n(x_{i+1} - x_i)`.
pub fn diff(n: usize) -> DMatrix<f64> {
    let nf = n as f64;
    DMatrix::from_fn(n.saturating_sub(1), n, |i, j| {
        if j == i {
            -nf
        } else if j == i + 1 {
            nf
        } else {
            0.0
        }
    })
}

/// `n × n`, rows `n(x_i - x_{i-1})` with wrap-around.
pub fn diff_per(n: usize) -> DMatrix<f64> {
    let nf = n as f64;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] += nf;
        m[(i, (i + n - 1) % n)] -= nf;
    }
    m
}

/// `I_outer ⊗ m ⊗ I_inner`.
pub fn lift(m: &DMatrix<f64>, inner: usize, outer: usize) -> DMatrix<f64> {
    DMatrix::identity(outer, outer).kronecker(&m.kronecker(&DMatrix::identity(inner, inner)))
}

fn axis_factors(g: &GridSpec, axis: usize) -> (usize, usize) {
    let dims = g.spatial_dims();
    let inner = dims[..axis].iter().product();
    let outer = dims[axis + 1..].iter().product::<usize>() * g.time_steps();
    (inner, outer)
}

fn space_matrix(g: &GridSpec, axis: usize, averaging: bool) -> DMatrix<f64> {
    let n = g.spatial_dims()[axis];
    let one_d = match (g.boundary(axis), averaging) {
        (BoundaryKind::Mirror, true) => avg(n),
        (BoundaryKind::Mirror, false) => diff(n),
        (BoundaryKind::Periodic, true) => avg_per(n),
        (BoundaryKind::Periodic, false) => diff_per(n),
    };
    let (inner, outer) = axis_factors(g, axis);
    lift(&one_d.transpose(), inner, outer)
}

/// `S_m`: block diagonal, one `cells·P × face_block_len` block per axis.
pub fn sm(g: &GridSpec) -> DMatrix<f64> {
    let rows = g.ndim() * g.midpoint_len();
    let mut out = DMatrix::zeros(rows, g.m_len());
    let mut col = 0;
    for a in 0..g.ndim() {
        let b = space_matrix(g, a, true);
        out.view_mut((a * g.midpoint_len(), col), (b.nrows(), b.ncols())).copy_from(&b);
        col += b.ncols();
    }
    out
}

/// `D_m = (D_1 | .. | D_d)`.
pub fn dm(g: &GridSpec) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(g.midpoint_len(), g.m_len());
    let mut col = 0;
    for a in 0..g.ndim() {
        let b = space_matrix(g, a, false);
        out.view_mut((0, col), (b.nrows(), b.ncols())).copy_from(&b);
        col += b.ncols();
    }
    out
}

/// `S_f = S_Pᵀ ⊗ I_cells`.
pub fn sf(g: &GridSpec) -> DMatrix<f64> {
    lift(&avg(g.time_steps()).transpose(), g.cells(), 1)
}

/// `D_f = D_Pᵀ ⊗ I_cells`.
pub fn df(g: &GridSpec) -> DMatrix<f64> {
    lift(&diff(g.time_steps()).transpose(), g.cells(), 1)
}

/// `A = (D_m | D_f)`.
pub fn constraint_matrix(g: &GridSpec) -> DMatrix<f64> {
    let d_m = dm(g);
    let d_f = df(g);
    let mut out = DMatrix::zeros(g.midpoint_len(), d_m.ncols() + d_f.ncols());
    out.view_mut((0, 0), d_m.shape()).copy_from(&d_m);
    out.view_mut((0, d_m.ncols()), d_f.shape()).copy_from(&d_f);
    out
}

/// Dense reference operator for small grids, computed by eigendecomposition
/// (pseudo-inverse) or Cholesky factorisation (penalised inverse).
pub fn dense_oracle(grid: &GridSpec, kind: OracleKind) -> Result<DMatrix<f64>> {
    let size = grid.m_len() + grid.f_len();
    if size > DENSE_SIZE_CAP {
        return Err(OtError::SizeCap {
            size,
            cap: DENSE_SIZE_CAP,
        });
    }
    let a = constraint_matrix(grid);
    match kind {
        OracleKind::PseudoInverse => pseudo_inverse_psd(&a * a.transpose()),
        OracleKind::PenalizedInverse { lambda, tau } => {
            if !(lambda > 0.0 && tau > 0.0) {
                return Err(OtError::InvalidArgument(format!(
                    "penalised inverse needs λ > 0 and τ > 0, got λ={lambda}, τ={tau}"
                )));
            }
            let n = a.ncols();
            let m = a.transpose() * &a * lambda + DMatrix::identity(n, n) / tau;
            let chol = m
                .cholesky()
                .ok_or_else(|| OtError::InvalidArgument("penalised matrix is not positive definite".into()))?;
            Ok(chol.inverse())
        }
    }
}

/// Moore-Penrose inverse of a symmetric positive semidefinite matrix as
/// `(B + Z Zᵀ)⁻¹ - Z Zᵀ`, where the orthonormal null-space basis `Z` is taken
/// from an eigensolve and polished by shifted inverse iteration.
fn pseudo_inverse_psd(b: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = b.nrows();
    let eig = SymmetricEigen::new(b.clone());
    let max = eig.eigenvalues.amax();
    let null: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i].abs() <= 1e-9 * max).collect();
    if null.is_empty() {
        return b
            .cholesky()
            .map(|c| c.inverse())
            .ok_or_else(|| OtError::InvalidArgument("matrix is not positive definite".into()));
    }
    let mut z = DMatrix::from_fn(n, null.len(), |i, j| eig.eigenvectors[(i, null[j])]);
    let shift = 1e-6 * max;
    let shifted = (&b + DMatrix::identity(n, n) * shift)
        .cholesky()
        .ok_or_else(|| OtError::InvalidArgument("matrix is not positive semidefinite".into()))?;
    for _ in 0..4 {
        z = shifted.solve(&z);
        z = z.qr().q();
    }
    let zzt = &z * z.transpose();
    let inv = (b + &zzt)
        .cholesky()
        .ok_or_else(|| OtError::InvalidArgument("matrix is not positive semidefinite".into()))?
        .inverse();
    Ok(inv - zzt)
}
