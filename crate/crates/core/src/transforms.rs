//! Orthogonal trigonometric transforms and the Laplacian spectra they
//! diagonalise.
//!
//! With the orthonormal matrices
//!
//! * `C_n  = sqrt(2/n) (ε_j cos(j(2k+1)π/2n))`, `ε_0 = 1/√2` (DCT-II),
//! * `S_{n-1} = sqrt(2/n) (sin(jkπ/n))`, `j,k = 1..n-1` (DST-I),
//! * `F_n  = n^{-1/2} (exp(-2πi jk/n))` (DFT),
//!
//! the second-difference matrices factor as
//!
//! ```text
//! Δ_n^per    = conj(F_n) diag(d_per) F_n,   d_per[k]  = 4 sin²(kπ/n),  k = 0..n-1
//! Δ_{n-1}^0  = S_{n-1} diag(d_zero) S_{n-1}, d_zero[k] = 4 sin²(kπ/2n), k = 1..n-1
//! Δ_n^mirr   = C_nᵀ diag(d_mirr) C_n,       d_mirr    = (0, d_zero)
//! ```
//!
//! The dense matrices are the reference; the fast paths below go through
//! `rustdct` / `rustfft` and rescale to the orthonormal convention.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::sync::Arc;

use num_complex::Complex64;
use rustdct::{DctPlanner, Dst1, TransformType2And3};
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{OtError, Result};
use crate::grid::{BoundaryKind, GridSpec};
use crate::nd;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LaplacianKind {
    /// Zero (Dirichlet) boundary, `n - 1` eigenvalues.
    Zero,
    /// Mirror (Neumann) boundary, `n` eigenvalues.
    Mirror,
    /// Periodic boundary, `n` eigenvalues.
    Periodic,
}

/// Eigenvalues of the unscaled second-difference matrix of the given kind.
pub fn laplacian_eigs(kind: LaplacianKind, n: usize) -> Result<Vec<f64>> {
    let sin2 = |x: f64| {
        let s = x.sin();
        4.0 * s * s
    };
    match kind {
        LaplacianKind::Zero => {
            if n < 2 {
                return Err(OtError::InvalidArgument(format!("zero-boundary spectrum needs n >= 2, got {n}")));
            }
            Ok((1..n).map(|k| sin2(k as f64 * PI / (2 * n) as f64)).collect())
        }
        LaplacianKind::Mirror => {
            check_len(n, "mirror spectrum")?;
            Ok((0..n).map(|k| sin2(k as f64 * PI / (2 * n) as f64)).collect())
        }
        LaplacianKind::Periodic => {
            check_len(n, "periodic spectrum")?;
            Ok((0..n).map(|k| sin2(k as f64 * PI / n as f64)).collect())
        }
    }
}

fn check_len(n: usize, what: &str) -> Result<()> {
    if n < 1 {
        return Err(OtError::InvalidArgument(format!("{what}: length must be at least 1")));
    }
    Ok(())
}

/// `C_n v`.
pub fn dct2(v: &[f64]) -> Result<Vec<f64>> {
    check_len(v.len(), "dct2")?;
    let t = RealTransform::cosine(v.len());
    let mut out = v.to_vec();
    t.forward(&mut out, &mut t.scratch());
    Ok(out)
}

/// `C_nᵀ v`, the inverse of [`dct2`].
pub fn idct2(v: &[f64]) -> Result<Vec<f64>> {
    check_len(v.len(), "idct2")?;
    let t = RealTransform::cosine(v.len());
    let mut out = v.to_vec();
    t.inverse(&mut out, &mut t.scratch());
    Ok(out)
}

/// `S_{n-1} v` for `v` of length `n - 1`; an involution.
pub fn dst1(v: &[f64]) -> Result<Vec<f64>> {
    check_len(v.len(), "dst1")?;
    let t = RealTransform::sine(v.len());
    let mut out = v.to_vec();
    t.forward(&mut out, &mut t.scratch());
    Ok(out)
}

/// `F_n v`.
pub fn dft(v: &[Complex64]) -> Result<Vec<Complex64>> {
    check_len(v.len(), "dft")?;
    let t = Fourier::new(v.len());
    let mut out = v.to_vec();
    t.forward(&mut out, &mut t.scratch());
    Ok(out)
}

/// `conj(F_n) v`, the inverse of [`dft`].
pub fn idft(v: &[Complex64]) -> Result<Vec<Complex64>> {
    check_len(v.len(), "idft")?;
    let t = Fourier::new(v.len());
    let mut out = v.to_vec();
    t.inverse(&mut out, &mut t.scratch());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    /// DST-I, diagonalises zero-boundary Laplacians.
    Dst1,
    /// DCT-II, diagonalises mirror-boundary Laplacians.
    Dct2,
    /// DFT, diagonalises circulant (periodic) matrices.
    Dft,
}

/// Spectral data for one axis of a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisSpectrum {
    pub kind: TransformKind,
    pub len: usize,
    /// `d_zero(n - 1)`, empty when `n = 1`.
    pub d_zero: Vec<f64>,
    pub d_mirr: Vec<f64>,
    pub d_per: Vec<f64>,
}

impl AxisSpectrum {
    pub fn new(kind: TransformKind, n: usize) -> Self {
        AxisSpectrum {
            kind,
            len: n,
            d_zero: if n >= 2 {
                laplacian_eigs(LaplacianKind::Zero, n).unwrap()
            } else {
                Vec::new()
            },
            d_mirr: laplacian_eigs(LaplacianKind::Mirror, n).unwrap(),
            d_per: laplacian_eigs(LaplacianKind::Periodic, n).unwrap(),
        }
    }

    /// Spectrum of `n² Δ` for the boundary condition this axis is solved with.
    pub fn scaled_laplacian(&self) -> Vec<f64> {
        let n2 = (self.len * self.len) as f64;
        let d = match self.kind {
            TransformKind::Dct2 => &self.d_mirr,
            TransformKind::Dft => &self.d_per,
            TransformKind::Dst1 => &self.d_zero,
        };
        d.iter().map(|v| n2 * v).collect()
    }
}

/// Per-axis transforms and spectra for a grid: the spatial axes (DCT-II on
/// mirror axes, DFT on periodic ones) followed by time (DCT-II).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralPlan {
    pub axes: Vec<AxisSpectrum>,
}

impl SpectralPlan {
    pub fn for_grid(grid: &GridSpec) -> Self {
        let mut axes: Vec<AxisSpectrum> = (0..grid.ndim())
            .map(|a| {
                let kind = match grid.boundary(a) {
                    BoundaryKind::Mirror => TransformKind::Dct2,
                    BoundaryKind::Periodic => TransformKind::Dft,
                };
                AxisSpectrum::new(kind, grid.spatial_dims()[a])
            })
            .collect();
        axes.push(AxisSpectrum::new(TransformKind::Dct2, grid.time_steps()));
        SpectralPlan { axes }
    }
}

// ---------------------------------------------------------------------------
// planned 1D transforms

#[derive(Clone)]
pub(crate) enum RealTransform {
    Cosine {
        n: usize,
        plan: Arc<dyn TransformType2And3<f64>>,
    },
    Sine {
        n: usize,
        plan: Arc<dyn Dst1<f64>>,
    },
}

impl RealTransform {
    pub(crate) fn cosine(n: usize) -> Self {
        let plan = DctPlanner::new().plan_dct2(n);
        RealTransform::Cosine { n, plan }
    }

    pub(crate) fn sine(n: usize) -> Self {
        let plan = DctPlanner::new().plan_dst1(n);
        RealTransform::Sine { n, plan }
    }

    pub(crate) fn scratch(&self) -> Vec<f64> {
        let len = match self {
            RealTransform::Cosine { plan, .. } => plan.get_scratch_len(),
            RealTransform::Sine { plan, .. } => plan.get_scratch_len(),
        };
        vec![0.0; len]
    }

    pub(crate) fn forward(&self, buf: &mut [f64], scratch: &mut [f64]) {
        match self {
            RealTransform::Cosine { n, plan } => {
                plan.process_dct2_with_scratch(buf, scratch);
                let scale = (2.0 / *n as f64).sqrt();
                buf.iter_mut().for_each(|v| *v *= scale);
                buf[0] *= FRAC_1_SQRT_2;
            }
            RealTransform::Sine { n, plan } => {
                plan.process_dst1_with_scratch(buf, scratch);
                let scale = (2.0 / (*n + 1) as f64).sqrt();
                buf.iter_mut().for_each(|v| *v *= scale);
            }
        }
    }

    pub(crate) fn inverse(&self, buf: &mut [f64], scratch: &mut [f64]) {
        match self {
            RealTransform::Cosine { n, plan } => {
                // rustdct's DCT-III halves the zeroth input
                buf[0] *= SQRT_2;
                plan.process_dct3_with_scratch(buf, scratch);
                let scale = (2.0 / *n as f64).sqrt();
                buf.iter_mut().for_each(|v| *v *= scale);
            }
            RealTransform::Sine { .. } => self.forward(buf, scratch),
        }
    }
}

#[derive(Clone)]
pub(crate) struct Fourier {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fourier {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fourier {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub(crate) fn scratch(&self) -> Vec<Complex64> {
        let len = self.fwd.get_inplace_scratch_len().max(self.inv.get_inplace_scratch_len());
        vec![Complex64::new(0.0, 0.0); len]
    }

    pub(crate) fn forward(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.fwd.process_with_scratch(buf, scratch);
        let scale = 1.0 / (self.n as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= scale);
    }

    pub(crate) fn inverse(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inv.process_with_scratch(buf, scratch);
        let scale = 1.0 / (self.n as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= scale);
    }
}

/// Transform applied along one axis of a [`SpectralOperator`].
#[derive(Clone)]
pub(crate) enum AxisTransform {
    Identity,
    Real(RealTransform),
    Fourier(Fourier),
}

impl AxisTransform {
    pub(crate) fn new(kind: Option<TransformKind>, n: usize) -> Self {
        if n == 0 {
            return AxisTransform::Identity;
        }
        match kind {
            None => AxisTransform::Identity,
            Some(TransformKind::Dct2) => AxisTransform::Real(RealTransform::cosine(n)),
            Some(TransformKind::Dst1) => AxisTransform::Real(RealTransform::sine(n)),
            Some(TransformKind::Dft) => AxisTransform::Fourier(Fourier::new(n)),
        }
    }
}

/// `T⁻¹ diag(w) T` on a column-major array, where `T` is a tensor product of
/// per-axis orthogonal/unitary transforms.
#[derive(Clone)]
pub(crate) struct SpectralOperator {
    dims: Vec<usize>,
    axes: Vec<AxisTransform>,
    weights: Vec<f64>,
    complex: bool,
}

impl SpectralOperator {
    pub(crate) fn new(dims: Vec<usize>, axes: Vec<AxisTransform>, weights: Vec<f64>) -> Self {
        debug_assert_eq!(dims.len(), axes.len());
        debug_assert_eq!(weights.len(), dims.iter().product::<usize>());
        let complex = axes.iter().any(|a| matches!(a, AxisTransform::Fourier(_)));
        SpectralOperator {
            dims,
            axes,
            weights,
            complex,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.weights.len()
    }

    pub(crate) fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.len());
        if self.complex {
            let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            self.sweep_complex(&mut buf, true);
            buf.iter_mut().zip(&self.weights).for_each(|(v, w)| *v *= *w);
            self.sweep_complex(&mut buf, false);
            buf.into_iter().map(|v| v.re).collect()
        } else {
            let mut buf = x.to_vec();
            self.sweep_real(&mut buf, true);
            buf.iter_mut().zip(&self.weights).for_each(|(v, w)| *v *= *w);
            self.sweep_real(&mut buf, false);
            buf
        }
    }

    fn sweep_real(&self, buf: &mut [f64], forward: bool) {
        for (axis, t) in self.axes.iter().enumerate() {
            if let AxisTransform::Real(rt) = t {
                nd::transform_lanes(buf, &self.dims, axis, || rt.scratch(), |s, lane| {
                    if forward {
                        rt.forward(lane, s)
                    } else {
                        rt.inverse(lane, s)
                    }
                });
            }
        }
    }

    fn sweep_complex(&self, buf: &mut [Complex64], forward: bool) {
        for (axis, t) in self.axes.iter().enumerate() {
            match t {
                AxisTransform::Identity => {}
                AxisTransform::Fourier(ft) => {
                    nd::transform_lanes(buf, &self.dims, axis, || ft.scratch(), |s, lane| {
                        if forward {
                            ft.forward(lane, s)
                        } else {
                            ft.inverse(lane, s)
                        }
                    });
                }
                AxisTransform::Real(rt) => {
                    // real transforms act on both parts independently
                    let n = self.dims[axis];
                    nd::transform_lanes(
                        buf,
                        &self.dims,
                        axis,
                        || (rt.scratch(), vec![0.0; n], vec![0.0; n]),
                        |(s, re, im), lane| {
                            for (k, v) in lane.iter().enumerate() {
                                re[k] = v.re;
                                im[k] = v.im;
                            }
                            if forward {
                                rt.forward(re, s);
                                rt.forward(im, s);
                            } else {
                                rt.inverse(re, s);
                                rt.inverse(im, s);
                            }
                            for (k, v) in lane.iter_mut().enumerate() {
                                *v = Complex64::new(re[k], im[k]);
                            }
                        },
                    );
                }
            }
        }
    }
}

/// Fills `out` with `Σ_a spectra[a][k_a]` over all multi-indices, column-major.
pub(crate) fn sum_spectra(spectra: &[Vec<f64>]) -> Vec<f64> {
    let dims: Vec<usize> = spectra.iter().map(|s| s.len()).collect();
    let mut out = Vec::with_capacity(dims.iter().product());
    nd::for_each_index(&dims, |idx| {
        out.push(idx.iter().zip(spectra).map(|(&k, s)| s[k]).sum());
    });
    out
}

#[cfg(test)]
pub(crate) mod dense {
    //! Dense transform and difference matrices written straight from their
    //! definitions. Test oracle only.
    use super::*;
    use nalgebra::{DMatrix, DVector};

    pub fn cosine(n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |j, k| {
            let eps = if j == 0 { FRAC_1_SQRT_2 } else { 1.0 };
            (2.0 / n as f64).sqrt() * eps * ((j * (2 * k + 1)) as f64 * PI / (2 * n) as f64).cos()
        })
    }

    /// `S_{n-1}`, of size `(n-1) × (n-1)`.
    pub fn sine(n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n - 1, n - 1, |j, k| {
            (2.0 / n as f64).sqrt() * (((j + 1) * (k + 1)) as f64 * PI / n as f64).sin()
        })
    }

    pub fn fourier(n: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(n, n, |j, k| {
            Complex64::from_polar(1.0 / (n as f64).sqrt(), -2.0 * PI * (j * k) as f64 / n as f64)
        })
    }

    pub fn to_vec(v: &DVector<f64>) -> Vec<f64> {
        v.iter().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::dense;
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn dct2_of_length_one_is_identity() {
        assert_abs_diff_eq!(dct2(&[2.5]).unwrap()[0], 2.5, epsilon = 1e-14);
    }

    #[test]
    fn dct2_of_constant() {
        for n in 1..10 {
            let out = dct2(&vec![1.0; n]).unwrap();
            assert_abs_diff_eq!(out[0], (n as f64).sqrt(), epsilon = 1e-12);
            assert!(out[1..].iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn dct2_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v = random(7, &mut rng);
        let back = idct2(&dct2(&v).unwrap()).unwrap();
        assert!(max_diff(&v, &back) < 1e-12);
    }

    #[test]
    fn dst1_small_and_involution() {
        assert_abs_diff_eq!(dst1(&[3.0]).unwrap()[0], 3.0, epsilon = 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let v = random(7, &mut rng);
        let once = dst1(&v).unwrap();
        let twice = dst1(&once).unwrap();
        assert!(max_diff(&v, &twice) < 1e-12);
        let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert_abs_diff_eq!(norm(&v), norm(&once), epsilon = 1e-12);
    }

    #[test]
    fn fast_transforms_match_dense_definitions() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=64 {
            let v = random(n, &mut rng);
            let dv = DVector::from_vec(v.clone());
            let c = dense::cosine(n);
            assert!(max_diff(&dct2(&v).unwrap(), &dense::to_vec(&(&c * &dv))) < 1e-12, "dct2 n={n}");
            assert!(max_diff(&idct2(&v).unwrap(), &dense::to_vec(&(c.transpose() * &dv))) < 1e-12);

            let s = dense::sine(n + 1);
            assert!(max_diff(&dst1(&v).unwrap(), &dense::to_vec(&(&s * &dv))) < 1e-12, "dst1 n={n}");

            let z: Vec<Complex64> = v.iter().zip(random(n, &mut rng)).map(|(&a, b)| Complex64::new(a, b)).collect();
            let f = dense::fourier(n);
            let fz = &f * DVector::from_vec(z.clone());
            let got = dft(&z).unwrap();
            let err = got.iter().zip(fz.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "dft n={n} err={err}");
            let back = idft(&got).unwrap();
            let err = back.iter().zip(&z).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12);
        }
    }

    #[test]
    fn dft_of_constant() {
        let n = 6;
        let out = dft(&vec![Complex64::new(1.0, 0.0); n]).unwrap();
        assert_abs_diff_eq!(out[0].re, (n as f64).sqrt(), epsilon = 1e-12);
        assert!(out[1..].iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn circulant_product_via_fourier() {
        // first column (2,-1,0,-1) applied to e_0 gives the first column back
        let a = [2.0, -1.0, 0.0, -1.0];
        let n = 4;
        let circ = DMatrix::from_fn(n, n, |j, k| a[(j + n - k) % n]);
        let e0 = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(dense::to_vec(&(&circ * &e0)), a.to_vec());

        // conj(F) diag(sqrt(n) F a) F
        let ac: Vec<Complex64> = a.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let eig: Vec<Complex64> = dft(&ac).unwrap().into_iter().map(|v| v * 2.0).collect();
        let x = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
        let fx = dft(&x).unwrap();
        let scaled: Vec<Complex64> = fx.iter().zip(&eig).map(|(u, w)| u * w).collect();
        let y = idft(&scaled).unwrap();
        for (yk, ak) in y.iter().zip(a) {
            assert_abs_diff_eq!(yk.re, ak, epsilon = 1e-12);
            assert_abs_diff_eq!(yk.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn laplacian_eig_examples() {
        let per = laplacian_eigs(LaplacianKind::Periodic, 4).unwrap();
        for (a, b) in per.iter().zip([0.0, 2.0, 4.0, 2.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        let mirr = laplacian_eigs(LaplacianKind::Mirror, 3).unwrap();
        for (a, b) in mirr.iter().zip([0.0, 1.0, 3.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        let zero = laplacian_eigs(LaplacianKind::Zero, 4).unwrap();
        for (a, b) in zero.iter().zip([0.585_786_437_626_905, 2.0, 3.414_213_562_373_095]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        assert!(laplacian_eigs(LaplacianKind::Zero, 1).is_err());
        assert!(laplacian_eigs(LaplacianKind::Mirror, 0).is_err());
    }

    #[test]
    fn mirror_spectrum_extends_zero_spectrum() {
        for n in 2..10 {
            let mirr = laplacian_eigs(LaplacianKind::Mirror, n).unwrap();
            let zero = laplacian_eigs(LaplacianKind::Zero, n).unwrap();
            assert_eq!(mirr[0], 0.0);
            assert!(max_diff(&mirr[1..], &zero) < 1e-15);
        }
    }

    #[test]
    fn spectral_operator_matches_tensor_definition() {
        // DCT along axis 0, DFT along axis 1, DST along axis 2
        let dims = vec![3, 4, 2];
        let axes = vec![
            AxisTransform::new(Some(TransformKind::Dct2), 3),
            AxisTransform::new(Some(TransformKind::Dft), 4),
            AxisTransform::new(Some(TransformKind::Dst1), 2),
        ];
        let per = laplacian_eigs(LaplacianKind::Periodic, 4).unwrap();
        let w = sum_spectra(&[vec![1.0, 2.0, 3.0], per, vec![0.5, 0.25]]);
        let op = SpectralOperator::new(dims.clone(), axes, w.clone());

        // dense: (S ⊗ conj F ⊗ Cᵀ) diag(w) (S ⊗ F ⊗ C), kron order reversed for column-major
        let c = dense::cosine(3).map(|v| Complex64::new(v, 0.0));
        let s = dense::sine(3).map(|v| Complex64::new(v, 0.0));
        let f = dense::fourier(4);
        let t = s.kronecker(&f).kronecker(&c);
        let ti = s.kronecker(&f.conjugate()).kronecker(&c.transpose());
        let d = DMatrix::from_diagonal(&DVector::from_iterator(w.len(), w.iter().map(|&v| Complex64::new(v, 0.0))));
        let full = ti * d * t;

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random(24, &mut rng);
        let xc = DVector::from_iterator(24, x.iter().map(|&v| Complex64::new(v, 0.0)));
        let expect: Vec<f64> = (full * xc).iter().map(|v| v.re).collect();
        assert!(max_diff(&op.apply(&x), &expect) < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn round_trips(n in 2usize..48, seed in proptest::prelude::any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = random(n, &mut rng);
            proptest::prop_assert!(max_diff(&idct2(&dct2(&v).unwrap()).unwrap(), &v) < 1e-12);
            let w = &v[..n - 1];
            proptest::prop_assert!(max_diff(&dst1(&dst1(w).unwrap()).unwrap(), w) < 1e-12);
            let z: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, -x)).collect();
            let back = idft(&dft(&z).unwrap()).unwrap();
            proptest::prop_assert!(back.iter().zip(&z).all(|(a, b)| (a - b).norm() < 1e-12));
        }

        #[test]
        fn transforms_are_orthogonal(n in 2usize..48, seed in proptest::prelude::any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = random(n, &mut rng);
            let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
            proptest::prop_assert!((norm(&dct2(&v).unwrap()) - norm(&v)).abs() < 1e-12);
            proptest::prop_assert!((norm(&dst1(&v[1..]).unwrap()) - norm(&v[1..])).abs() < 1e-12);
        }
    }
}
