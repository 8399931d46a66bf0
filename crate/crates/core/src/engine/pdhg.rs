//! Primal-dual iteration with scaled dual variables.
//!
//! With `K(m, f) = (S_m m, S_f f + f⁺)` and duals `b = (b_u, b_v)` each step
//! reads
//!
//! ```text
//! 1. x  ← argmin  G(x) + ‖x - (x - τσ Kᵀ b̄)‖² / 2τ      G = ι_C  or  (λ/2)‖A x - f⁻‖²
//! 2. y  ← prox_{J/σ}(K x + b)
//! 3. b  ← b + K x - y
//! 4. b̄  ← b + θ (b - b_old)
//! ```
//!
//! An optional TV term adds the block `G f` to `K` and a soft-threshold to
//! step 2.

use std::time::Instant;

use crate::engine::config::{Model, SolverConfig, TvKind};
use crate::engine::tv::TvOperator;
use crate::error::{OtError, Result};
use crate::grid::{check_endpoint, CenterField, FaceField, GridSpec, RunReport};
use crate::operators::{self, OperatorSet};
use crate::prox::{energy_field, prox_field, ProxParams};
use crate::solvers::{PenalizedSolver, ProjectionPlan};

/// One row of progress output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProgressRow {
    pub iteration: usize,
    pub energy: f64,
    pub residual: f64,
    pub dual_residual: f64,
}

/// Output of a run.
#[derive(Debug, Clone)]
pub struct Solution {
    /// `P + 1` frames; the first and last are the inputs verbatim.
    pub frames: Vec<Vec<f64>>,
    pub momentum: FaceField,
    /// Unclamped final density.
    pub density: CenterField,
    pub report: RunReport,
}

/// Initial dual variables, scaled by `1/σ`: one midpoint block per spatial
/// axis and one for the density.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub b_u: Vec<Vec<f64>>,
    pub b_v: Vec<f64>,
}

enum PrimalStep {
    Project(ProjectionPlan),
    Penalized {
        solver: PenalizedSolver,
        tau: f64,
        /// `λ Aᵀ f⁻`.
        shift_m: Vec<f64>,
        shift_f: Vec<f64>,
    },
}

pub struct Solver {
    grid: GridSpec,
    ops: OperatorSet,
    config: SolverConfig,
    step: PrimalStep,
    tv: Option<TvOperator>,
    duals: Option<DualState>,
}

impl std::fmt::Debug for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Solver")
            .field("grid", &self.grid)
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

fn check_inputs(grid: &GridSpec, f0: &[f64], f1: &[f64]) -> Result<()> {
    check_endpoint(grid, f0, "f0")?;
    check_endpoint(grid, f1, "f1")?;
    for (name, v) in [("f0", f0), ("f1", f1)] {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(OtError::NonFinite(if name == "f0" { "f0" } else { "f1" }));
        }
        if v.iter().any(|&x| x < 0.0) {
            return Err(OtError::InvalidArgument(format!("{name} must be non-negative")));
        }
    }
    Ok(())
}

fn block_offsets(grid: &GridSpec) -> Vec<usize> {
    let mut off = vec![0];
    for a in 0..grid.ndim() {
        off.push(off[a] + grid.face_block_len(a));
    }
    off
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl Solver {
    pub fn new(grid: &GridSpec, f0: &[f64], f1: &[f64], config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        check_inputs(grid, f0, f1)?;
        if config.tv_gamma > 0.0 && config.tv_kind == TvKind::Isotropic {
            return Err(OtError::Unsupported("isotropic TV regularisation".into()));
        }
        let ops = OperatorSet::new(grid, f0.into(), f1.into())?;
        let step = match config.model {
            Model::Constrained => PrimalStep::Project(ProjectionPlan::new(grid)),
            Model::Penalized { lambda } => {
                let solver = PenalizedSolver::new(grid, lambda, config.tau, config.penalized_method)?;
                let mut shift_m = vec![0.0; grid.m_len()];
                let mut shift_f = vec![0.0; grid.f_len()];
                operators::apply_at(grid, ops.f_minus(), &mut shift_m, &mut shift_f);
                shift_m.iter_mut().chain(shift_f.iter_mut()).for_each(|v| *v *= lambda);
                PrimalStep::Penalized {
                    solver,
                    tau: config.tau,
                    shift_m,
                    shift_f,
                }
            }
        };
        let tv = (config.tv_gamma > 0.0).then(|| TvOperator::new(grid, config.tv_gamma));
        Ok(Solver {
            grid: grid.clone(),
            ops,
            config: *config,
            step,
            tv,
            duals: None,
        })
    }

    pub fn operators(&self) -> &OperatorSet {
        &self.ops
    }

    /// Starts from the given duals instead of zero.
    pub fn set_initial_duals(&mut self, duals: DualState) -> Result<()> {
        let g = &self.grid;
        if duals.b_u.len() != g.ndim() {
            return Err(OtError::shape("initial duals", "b_u blocks", g.ndim(), duals.b_u.len()));
        }
        for (a, b) in duals.b_u.iter().enumerate() {
            if b.len() != g.midpoint_len() {
                return Err(OtError::shape("initial duals", format!("b_u{}", a + 1), g.midpoint_len(), b.len()));
            }
        }
        if duals.b_v.len() != g.midpoint_len() {
            return Err(OtError::shape("initial duals", "b_v", g.midpoint_len(), duals.b_v.len()));
        }
        self.duals = Some(duals);
        Ok(())
    }

    pub fn run(&self, mut progress: Option<&mut dyn FnMut(&ProgressRow)>) -> Result<Solution> {
        let start = Instant::now();
        let g = &self.grid;
        let cfg = &self.config;
        let mid = g.midpoint_len();
        let active = g.active_axes();
        let off = block_offsets(g);
        let sigma = if self.tv.is_some() { cfg.sigma / 2.0 } else { cfg.sigma };
        let ts = cfg.tau * sigma;
        let params = ProxParams::new(cfg.p, sigma)?;

        let mut m = vec![0.0; g.m_len()];
        let mut f = vec![0.0; g.f_len()];
        let (mut b_u, mut b_v) = match &self.duals {
            Some(d) => (active.iter().map(|&a| d.b_u[a].clone()).collect::<Vec<_>>(), d.b_v.clone()),
            None => (vec![vec![0.0; mid]; active.len()], vec![0.0; mid]),
        };
        let tv_lens = self.tv.as_ref().map(|t| t.block_lens()).unwrap_or_default();
        let mut b_w: Vec<Vec<f64>> = tv_lens.iter().map(|&n| vec![0.0; n]).collect();
        let mut bar_u = b_u.clone();
        let mut bar_v = b_v.clone();
        let mut bar_w = b_w.clone();

        let mut report = RunReport::default();
        let mut grad_m = vec![0.0; g.m_len()];
        let mut grad_f = vec![0.0; g.f_len()];
        let mut km: Vec<Vec<f64>> = vec![vec![0.0; mid]; active.len()];
        let mut kv = vec![0.0; mid];
        let mut kw: Vec<Vec<f64>> = tv_lens.iter().map(|&n| vec![0.0; n]).collect();
        let mut r = vec![0.0; mid];

        for it in 0..cfg.iterations {
            // step 1: primal update
            grad_m.fill(0.0);
            for (i, &a) in active.iter().enumerate() {
                operators::sm_t_axis(g, a, &bar_u[i], &mut grad_m[off[a]..off[a + 1]]);
            }
            operators::sf_t(g, &bar_v, &mut grad_f);
            if let Some(tv) = &self.tv {
                tv.apply_t_add(&bar_w, &mut grad_f);
            }
            let mut a_m: Vec<f64> = m.iter().zip(&grad_m).map(|(x, d)| x - ts * d).collect();
            let mut a_f: Vec<f64> = f.iter().zip(&grad_f).map(|(x, d)| x - ts * d).collect();
            match &self.step {
                PrimalStep::Project(plan) => {
                    plan.project_in_place(&mut a_m, &mut a_f, self.ops.f_minus());
                    m = a_m;
                    f = a_f;
                }
                PrimalStep::Penalized {
                    solver,
                    tau,
                    shift_m,
                    shift_f,
                } => {
                    a_m.iter_mut().zip(shift_m).for_each(|(x, s)| *x = s + *x / tau);
                    a_f.iter_mut().zip(shift_f).for_each(|(x, s)| *x = s + *x / tau);
                    let (nm, nf) = solver.solve(&a_m, &a_f, &m, &f)?;
                    m = nm;
                    f = nf;
                }
            }

            // step 2: prox on K x + b
            for (i, &a) in active.iter().enumerate() {
                operators::sm_axis(g, a, &m[off[a]..off[a + 1]], &mut km[i]);
            }
            operators::sf(g, &f, &mut kv);
            kv.iter_mut().zip(self.ops.f_plus()).for_each(|(x, p)| *x += p);
            let energy = energy_field(&km, &kv, cfg.p);

            let mut u: Vec<Vec<f64>> = km.iter().zip(&b_u).map(|(k, b)| k.iter().zip(b).map(|(x, y)| x + y).collect()).collect();
            let mut v: Vec<f64> = kv.iter().zip(&b_v).map(|(x, y)| x + y).collect();
            prox_field(&mut u, &mut v, &params);
            let mut w: Vec<Vec<f64>> = Vec::new();
            if let Some(tv) = &self.tv {
                tv.apply(&f, &mut kw);
                w = kw.iter().zip(&b_w).map(|(k, b)| k.iter().zip(b).map(|(x, y)| x + y).collect()).collect();
                tv.shrink(&mut w, sigma);
            }

            // steps 3 and 4: dual update and extrapolation
            let mut du_sq = 0.0;
            for i in 0..active.len() {
                for j in 0..mid {
                    let d = km[i][j] - u[i][j];
                    du_sq += d * d;
                    b_u[i][j] += d;
                    bar_u[i][j] = b_u[i][j] + cfg.theta * d;
                }
            }
            let mut dv_sq = 0.0;
            for j in 0..mid {
                let d = kv[j] - v[j];
                dv_sq += d * d;
                b_v[j] += d;
                bar_v[j] = b_v[j] + cfg.theta * d;
            }
            let mut dw_sq = 0.0;
            for i in 0..w.len() {
                for j in 0..w[i].len() {
                    let d = kw[i][j] - w[i][j];
                    dw_sq += d * d;
                    b_w[i][j] += d;
                    bar_w[i][j] = b_w[i][j] + cfg.theta * d;
                }
            }
            let dual_residual = du_sq.sqrt().max(dv_sq.sqrt()).max(dw_sq.sqrt());

            operators::apply_a(g, &m, &f, &mut r);
            r.iter_mut().zip(self.ops.f_minus()).for_each(|(x, y)| *x -= y);
            let residual = norm2(&r);

            if !dual_residual.is_finite() || !residual.is_finite() {
                return Err(OtError::NonFinite("primal-dual iterates"));
            }
            report.energy_trace.push(energy);
            report.residual_trace.push(residual);
            report.dual_residual_trace.push(dual_residual);
            report.iterations = it + 1;
            if let Some(cb) = progress.as_mut() {
                cb(&ProgressRow {
                    iteration: it + 1,
                    energy,
                    residual,
                    dual_residual,
                });
            }
            if cfg.tolerance.is_some_and(|tol| dual_residual <= tol) {
                break;
            }
        }

        let density = self.ops.center(f)?;
        let cells = g.cells();
        let p = g.time_steps();
        let mut frames = Vec::with_capacity(p + 1);
        frames.push(self.ops.f0().to_vec());
        for k in 1..p {
            let mut layer = density.interior()[(k - 1) * cells..k * cells].to_vec();
            if cfg.gamut_clamp {
                layer.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
            }
            frames.push(layer);
        }
        frames.push(self.ops.f1().to_vec());
        report.wall_time_s = start.elapsed().as_secs_f64();
        Ok(Solution {
            frames,
            momentum: FaceField::from_vec_unchecked(g, m),
            density,
            report,
        })
    }
}

/// Runs whichever model `config` selects.
pub fn run(f0: &[f64], f1: &[f64], grid: &GridSpec, config: &SolverConfig) -> Result<Solution> {
    Solver::new(grid, f0, f1, config)?.run(None)
}

pub fn run_constrained(f0: &[f64], f1: &[f64], grid: &GridSpec, config: &SolverConfig) -> Result<Solution> {
    let cfg = SolverConfig {
        model: Model::Constrained,
        ..*config
    };
    run(f0, f1, grid, &cfg)
}

pub fn run_penalized(f0: &[f64], f1: &[f64], grid: &GridSpec, config: &SolverConfig) -> Result<Solution> {
    if config.lambda().is_none() {
        return Err(OtError::InvalidConfig("the penalised model needs λ".into()));
    }
    run(f0, f1, grid, config)
}

/// Runs with TV regularisation; `tv_gamma = 0` is the plain run.
pub fn run_with_tv(f0: &[f64], f1: &[f64], grid: &GridSpec, config: &SolverConfig) -> Result<Solution> {
    if config.tv_kind == TvKind::Isotropic {
        return Err(OtError::Unsupported("isotropic TV regularisation".into()));
    }
    run(f0, f1, grid, config)
}

/// `‖J_p(S_m m, S_f f + f⁺)‖₁`.
pub fn energy(m: &FaceField, f: &CenterField, ops: &OperatorSet, p: f64) -> Result<f64> {
    let u = ops.apply_sm(m)?;
    let v = ops.apply_sf(f, true)?;
    Ok(energy_field(&u, &v, p))
}

/// `‖A (m, f) - f⁻‖₂`.
pub fn residual(m: &FaceField, f: &CenterField, ops: &OperatorSet) -> Result<f64> {
    ops.residual(m, f)
}
