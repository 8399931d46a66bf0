//! The perspective energy `J_p(x, y) = |x|^p / (p y^{p-1})` and its proximal
//! map.
//!
//! The conjugate of `J_p` is the indicator of
//! `K_p = {(a, b) : |a|^q / q + b ≤ 0}`, so by Moreau
//! `prox_{J_p/σ}(x*, y*) = (x*, y*) - Π_{K_p}(σx*, σy*) / σ`. Projecting onto
//! `K_p` reduces to the scalar root `ẑ = |a|` of
//!
//! ```text
//! φ(z) = z (1 + h(z)) - σ|x*|,   h(z) = (σy* + z^q/q) z^{q-2},
//! ```
//!
//! which is increasing and convex on `[z_s, ∞)`, `z_s = max(0, -qσy*)^{1/q}`.

use rayon::prelude::*;

use crate::error::{OtError, Result};

/// Absolute-plus-relative stopping tolerance on `φ`.
pub const NEWTON_TOL: f64 = 1e-13;
/// Newton steps before switching to bisection.
pub const NEWTON_MAX_ITER: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxParams {
    p: f64,
    q: f64,
    sigma: f64,
}

impl ProxParams {
    pub fn new(p: f64, sigma: f64) -> Result<Self> {
        if !(p > 1.0 && p <= 2.0) {
            return Err(OtError::InvalidArgument(format!("p must lie in (1, 2], got {p}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(OtError::InvalidArgument(format!("σ must be positive and finite, got {sigma}")));
        }
        Ok(ProxParams {
            p,
            q: p / (p - 1.0),
            sigma,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `J_p(x, y)`, `+∞` outside the domain.
pub fn eval_jp(x: &[f64], y: f64, p: f64) -> f64 {
    let r = norm(x);
    if y > 0.0 {
        r.powf(p) / (p * y.powf(p - 1.0))
    } else if y == 0.0 && r == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// `|a|^q / q + b ≤ 0`.
pub fn in_kp(a: &[f64], b: f64, q: f64) -> bool {
    norm(a).powf(q) / q + b <= 0.0
}

/// Scalar root problem `φ(z) = 0` for fixed `σy*` and `c = σ|x*|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootProblem {
    pub q: f64,
    /// `σ y*`.
    pub sy: f64,
    /// `σ |x*|`.
    pub c: f64,
}

impl RootProblem {
    /// Left end of the convergence region.
    pub fn z_start(&self) -> f64 {
        (-self.q * self.sy).max(0.0).powf(1.0 / self.q)
    }

    pub fn h(&self, z: f64) -> f64 {
        (self.sy + z.powf(self.q) / self.q) * z.powf(self.q - 2.0)
    }

    pub fn phi(&self, z: f64) -> f64 {
        z * (1.0 + self.h(z)) - self.c
    }

    fn phi_and_slope(&self, z: f64) -> (f64, f64) {
        let q = self.q;
        let zq2 = z.powf(q - 2.0);
        let mu = self.sy + z.powf(q) / q;
        let h = mu * zq2;
        // z h'(z) = (q-2) μ z^{q-2} + z^{2q-2}
        let zh = (q - 2.0) * mu * zq2 + z.powf(2.0 * q - 2.0);
        (z * (1.0 + h) - self.c, 1.0 + h + zh)
    }

    fn tolerance(&self) -> f64 {
        NEWTON_TOL * (1.0 + self.c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOutcome {
    pub root: f64,
    pub newton_steps: usize,
    /// Whether the bisection fallback was needed.
    pub bisected: bool,
}

/// Safeguarded Newton iteration from `start ≥ z_s`. Steps that leave the
/// current bracket are replaced by bisection; after [`NEWTON_MAX_ITER`] steps
/// the bracket is bisected to the end.
pub fn newton_root(prob: &RootProblem, start: f64) -> RootOutcome {
    let tol = prob.tolerance();
    let mut lo = prob.z_start();
    let mut hi = prob.c.max(lo);
    // φ(z_s) ≤ 0 ≤ φ(c) whenever the point is outside K_p; widen if rounding
    // says otherwise
    while prob.phi(hi) < 0.0 && hi.is_finite() {
        hi = 2.0 * hi + 1.0;
    }
    let mut z = start.clamp(lo, hi);
    let mut bisected = false;
    for it in 0..NEWTON_MAX_ITER {
        let (phi, slope) = prob.phi_and_slope(z);
        if phi.abs() <= tol {
            return RootOutcome {
                root: z,
                newton_steps: it,
                bisected,
            };
        }
        if phi < 0.0 {
            lo = lo.max(z);
        } else {
            hi = hi.min(z);
        }
        let mut next = z - phi / slope;
        if !next.is_finite() || next < lo || next > hi {
            next = 0.5 * (lo + hi);
            bisected = true;
        }
        if (next - z).abs() <= f64::EPSILON * z.abs().max(f64::MIN_POSITIVE) {
            return RootOutcome {
                root: next,
                newton_steps: it + 1,
                bisected,
            };
        }
        z = next;
    }
    RootOutcome {
        root: bisect(prob, lo, hi),
        newton_steps: NEWTON_MAX_ITER,
        bisected: true,
    }
}

fn bisect(prob: &RootProblem, mut lo: f64, mut hi: f64) -> f64 {
    let tol = prob.tolerance();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = prob.phi(mid);
        if v.abs() <= tol || mid <= lo || mid >= hi {
            return mid;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Starting point used by [`prox_jp`]: the root of the dominant term
/// `z^{2q-1}/q = c`, clipped to `[z_s, c]`.
pub fn newton_start(prob: &RootProblem) -> f64 {
    let zs = prob.z_start();
    let guess = (prob.q * prob.c).powf(1.0 / (2.0 * prob.q - 1.0));
    zs.max(guess.min(prob.c))
}

/// `prox_{J_p/σ}` in place: `x` holds `x*` (any length), `y` holds `y*`.
/// Returns the number of Newton steps taken.
pub fn prox_jp_in_place(x: &mut [f64], y: &mut f64, params: &ProxParams) -> usize {
    let s = params.sigma;
    let q = params.q;
    let r = norm(x);
    if in_kp_scaled(s * r, s * *y, q) {
        x.iter_mut().for_each(|v| *v = 0.0);
        *y = 0.0;
        return 0;
    }
    let prob = RootProblem {
        q,
        sy: s * *y,
        c: s * r,
    };
    if prob.c == 0.0 {
        // y* > 0 and x* = 0 is already a fixed point
        return 0;
    }
    let out = newton_root(&prob, newton_start(&prob));
    let z = out.root;
    let h = prob.h(z);
    let shrink = h / (1.0 + h);
    x.iter_mut().for_each(|v| *v *= shrink);
    *y = ((prob.sy + z.powf(q) / q) / s).max(0.0);
    out.newton_steps
}

fn in_kp_scaled(r: f64, b: f64, q: f64) -> bool {
    r.powf(q) / q + b <= 0.0
}

/// `prox_{J_p/σ}(x*, y*)`.
pub fn prox_jp(x: &[f64], y: f64, params: &ProxParams) -> (Vec<f64>, f64) {
    let mut xo = x.to_vec();
    let mut yo = y;
    prox_jp_in_place(&mut xo, &mut yo, params);
    (xo, yo)
}

const PROX_CHUNK: usize = 1024;

/// Cellwise prox over a field stored as `d` component blocks plus the density
/// block, all of the same length. Cells are independent, so the result does
/// not depend on the thread count.
pub fn prox_field(u: &mut [Vec<f64>], v: &mut [f64], params: &ProxParams) {
    let d = u.len();
    let len = v.len();
    debug_assert!(u.iter().all(|b| b.len() == len));
    let mut block_chunks: Vec<_> = u.iter_mut().map(|b| b.chunks_mut(PROX_CHUNK)).collect();
    let mut work = Vec::with_capacity(len / PROX_CHUNK + 1);
    for vc in v.chunks_mut(PROX_CHUNK) {
        let us: Vec<&mut [f64]> = block_chunks.iter_mut().map(|it| it.next().unwrap()).collect();
        work.push((us, vc));
    }
    let run = |(mut us, vc): (Vec<&mut [f64]>, &mut [f64])| {
        let mut x = vec![0.0; d];
        for i in 0..vc.len() {
            for (a, ua) in us.iter().enumerate() {
                x[a] = ua[i];
            }
            prox_jp_in_place(&mut x, &mut vc[i], params);
            for (a, ua) in us.iter_mut().enumerate() {
                ua[i] = x[a];
            }
        }
    };
    if len > PROX_CHUNK {
        work.into_par_iter().for_each(run);
    } else {
        work.into_iter().for_each(run);
    }
}

/// `Σ_cells J_p`, summed in storage order.
pub fn energy_field(u: &[Vec<f64>], v: &[f64], p: f64) -> f64 {
    let mut x = vec![0.0; u.len()];
    let mut total = 0.0;
    for (i, &y) in v.iter().enumerate() {
        for (a, ua) in u.iter().enumerate() {
            x[a] = ua[i];
        }
        total += eval_jp(&x, y, p);
    }
    total
}
