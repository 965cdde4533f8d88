//! Critical points of the discretized free-time action: global and local
//! minimizers by multistart conjugate descent with Armijo backtracking, and
//! mountain-pass points by an elastic-string relaxation with a climbing
//! image, scanned monotonically in the energy.
//!
//! Plain steepest descent needs O(N^2) iterations on fine path grids, so the
//! descent direction is Polak-Ribiere conjugate with automatic restarts; the
//! line search still enforces strict Armijo decrease at every accepted step.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::PathError;
use crate::flow::{verify_solution, ResidualReport};
use crate::geom::{wrap_signed, wrap_unit, ChartKind, Vec2};
use crate::models::SurfaceModel;
use crate::pathspace::{
    action_gradient, classify_component, discrete_action, loop_action, loop_gradient,
    lower_bound_estimate, BoundarySpec, CosetLabel, DiscretePath, LoopPath, ActionValue,
};

/// Largest chart chord accepted for a torus segment; larger jumps would make
/// the minimal-image winding bookkeeping ambiguous.
const MAX_TORUS_CHORD: f64 = 0.45;
const ARMIJO_MAX_BACKTRACKS: usize = 48;
/// Tolerance slack accepted on the quadratic action lower bound.
const BOUND_SLACK: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct MinimizeConfig {
    /// Segment count used by seed builders.
    pub n_segments: usize,
    pub max_iters: usize,
    /// Gradient tolerance; the effective stop is grad_tol * sqrt(N).
    pub grad_tol: f64,
    /// Lower guard for the total time.
    pub t_min: f64,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub multistart: usize,
    pub seed: u64,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        MinimizeConfig {
            n_segments: 64,
            max_iters: 50_000,
            grad_tol: 1e-7,
            t_min: 1e-4,
            armijo_c: 1e-4,
            backtrack: 0.5,
            multistart: 8,
            seed: 0,
        }
    }
}

impl MinimizeConfig {
    fn validate(&self) -> Result<(), PathError> {
        if self.grad_tol <= 0.0 {
            return Err(PathError::Serialization("grad_tol must be positive".into()));
        }
        if self.n_segments < 16 {
            return Err(PathError::TooFewSegments(self.n_segments));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveVerdict {
    Converged,
    /// T hit the lower guard while the action drained to zero: the path
    /// degenerated onto the constant-path valley.
    CollapsedToConstant,
    MaxIters,
    /// No admissible starting object exists (e.g. no negative-action head).
    NotApplicable,
    Stalled,
    DomainExit,
}

impl SolveVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveVerdict::Converged => "CONVERGED",
            SolveVerdict::CollapsedToConstant => "COLLAPSED_TO_CONSTANT",
            SolveVerdict::MaxIters => "MAX_ITERS",
            SolveVerdict::NotApplicable => "NOT_APPLICABLE",
            SolveVerdict::Stalled => "STALLED",
            SolveVerdict::DomainExit => "DOMAIN_EXIT",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TracePoint {
    pub iter: usize,
    pub action: f64,
    pub grad_norm: f64,
    pub t_total: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub verdict: SolveVerdict,
    pub path: DiscretePath,
    pub action: ActionValue,
    pub grad_norm: f64,
    pub iterations: usize,
    pub residuals: Option<ResidualReport>,
    pub component: Option<CosetLabel>,
    pub trace: Vec<TracePoint>,
    pub trust_region_hit: bool,
    pub bound_violations: usize,
}

impl SolveReport {
    pub fn csv_header() -> String {
        format!(
            "verdict,action,da_dt,length,t_total,grad_norm,iterations,component,{},trust_region_hit,bound_violations",
            ResidualReport::csv_header()
        )
    }

    pub fn csv_row(&self) -> String {
        let res = self
            .residuals
            .map(|r| r.csv_row())
            .unwrap_or_else(|| ",,,,,".into());
        format!(
            "{},{:.12e},{:.6e},{:.6e},{:.12e},{:.6e},{},{},{},{},{}",
            self.verdict.as_str(),
            self.action.action,
            self.action.da_dt,
            self.action.length,
            self.path.t_total,
            self.grad_norm,
            self.iterations,
            self.component.map(|c| c.to_string()).unwrap_or_default(),
            res,
            self.trust_region_hit,
            self.bound_violations
        )
    }
}

// ---------------------------------------------------------------------------
// flat-vector problems
// ---------------------------------------------------------------------------

#[derive(Default)]
struct SharedDiagnostics {
    bound_violations: AtomicUsize,
    trust_region_hit: AtomicBool,
}

trait ActionProblem: Sync {
    fn dim(&self) -> usize;
    fn n_segments(&self) -> usize;
    fn t_index(&self) -> usize {
        self.dim() - 1
    }
    fn eval(&self, z: &[f64]) -> Result<ActionValue, PathError>;
    fn eval_grad(&self, z: &[f64], grad: &mut [f64]) -> Result<ActionValue, PathError>;
    fn canonicalize(&self, z: &mut [f64]);
    /// Largest chart chord of a segment (for the torus winding guard).
    fn max_chord(&self, z: &[f64]) -> f64;
    /// Minimal-image displacement of every segment; used to reject steps
    /// that would flip a segment onto another sheet of the torus cover.
    fn segment_disps(&self, z: &[f64]) -> Vec<Vec2>;
    fn diagnostics(&self) -> &SharedDiagnostics;
    fn record(&self, model: &SurfaceModel, k: f64, v: &ActionValue, t: f64) {
        if v.max_speed > model.v_max() {
            // outside the velocity trust region the certified quadratic
            // bound does not apply; the engine flags accepted iterates
            self.diagnostics()
                .trust_region_hit
                .store(true, Ordering::Relaxed);
            return;
        }
        let b = model.quadratic_bounds();
        let bound = lower_bound_estimate(v.length, t, b.a, b.b, k);
        if v.action + BOUND_SLACK < bound {
            self.diagnostics()
                .bound_violations
                .fetch_add(1, Ordering::Relaxed);
            debug_assert!(
                false,
                "action lower bound violated: A = {}, bound = {bound}",
                v.action
            );
        }
    }
}

struct ConnectProblem<'a> {
    model: &'a SurfaceModel,
    q0: &'a BoundarySpec,
    q1: &'a BoundarySpec,
    n: usize,
    k: f64,
    diag: SharedDiagnostics,
}

impl<'a> ConnectProblem<'a> {
    fn new(
        model: &'a SurfaceModel,
        q0: &'a BoundarySpec,
        q1: &'a BoundarySpec,
        n: usize,
        k: f64,
    ) -> Self {
        ConnectProblem {
            model,
            q0,
            q1,
            n,
            k,
            diag: SharedDiagnostics::default(),
        }
    }

    fn to_flat(&self, p: &DiscretePath) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.dim());
        if !self.q0.is_point() {
            z.push(p.s0.unwrap_or(0.0));
        }
        for q in &p.interior {
            z.push(q.x);
            z.push(q.y);
        }
        if !self.q1.is_point() {
            z.push(p.s1.unwrap_or(0.0));
        }
        z.push(p.t_total);
        z
    }

    fn to_path(&self, z: &[f64]) -> DiscretePath {
        let mut idx = 0;
        let s0 = if self.q0.is_point() {
            None
        } else {
            idx += 1;
            Some(z[0])
        };
        let mut interior = Vec::with_capacity(self.n - 1);
        for _ in 0..self.n - 1 {
            interior.push(Vec2::new(z[idx], z[idx + 1]));
            idx += 2;
        }
        let s1 = if self.q1.is_point() {
            None
        } else {
            let v = z[idx];
            idx += 1;
            Some(v)
        };
        DiscretePath {
            s0,
            interior,
            s1,
            t_total: z[idx],
        }
    }
}

impl ActionProblem for ConnectProblem<'_> {
    fn dim(&self) -> usize {
        2 * (self.n - 1)
            + 1
            + usize::from(!self.q0.is_point())
            + usize::from(!self.q1.is_point())
    }

    fn n_segments(&self) -> usize {
        self.n
    }

    fn eval(&self, z: &[f64]) -> Result<ActionValue, PathError> {
        let path = self.to_path(z);
        let v = discrete_action(self.model, self.q0, self.q1, &path, self.k)?;
        self.record(self.model, self.k, &v, path.t_total);
        Ok(v)
    }

    fn eval_grad(&self, z: &[f64], grad: &mut [f64]) -> Result<ActionValue, PathError> {
        let path = self.to_path(z);
        let (v, g) = action_gradient(self.model, self.q0, self.q1, &path, self.k)?;
        self.record(self.model, self.k, &v, path.t_total);
        let flat = g.flat();
        grad.copy_from_slice(&flat);
        Ok(v)
    }

    // node coordinates stay in lift coordinates during descent: the
    // minimal-image evaluation is representation-independent, and wrapping
    // mid-run would flip seam-adjacent coordinates between representatives,
    // poisoning the conjugate direction memory
    fn canonicalize(&self, _z: &mut [f64]) {}

    fn max_chord(&self, z: &[f64]) -> f64 {
        let chart = self.model.chart();
        if !chart.is_torus() {
            return 0.0;
        }
        let path = self.to_path(z);
        let pts = path.chain(self.q0, self.q1);
        let mut worst = 0.0_f64;
        for i in 0..pts.len() - 1 {
            worst = worst.max(chart.displacement(pts[i], pts[i + 1]).norm());
        }
        worst
    }

    fn segment_disps(&self, z: &[f64]) -> Vec<Vec2> {
        let chart = self.model.chart();
        let path = self.to_path(z);
        let pts = path.chain(self.q0, self.q1);
        (0..pts.len() - 1)
            .map(|i| chart.displacement(pts[i], pts[i + 1]))
            .collect()
    }

    fn diagnostics(&self) -> &SharedDiagnostics {
        &self.diag
    }
}

struct LoopProblem<'a> {
    model: &'a SurfaceModel,
    m: usize,
    k: f64,
    diag: SharedDiagnostics,
}

impl<'a> LoopProblem<'a> {
    fn new(model: &'a SurfaceModel, m: usize, k: f64) -> Self {
        LoopProblem {
            model,
            m,
            k,
            diag: SharedDiagnostics::default(),
        }
    }

    fn to_flat(&self, p: &LoopPath) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.dim());
        for q in &p.nodes {
            z.push(q.x);
            z.push(q.y);
        }
        z.push(p.t_total);
        z
    }

    fn to_loop(&self, z: &[f64]) -> LoopPath {
        let nodes = (0..self.m)
            .map(|j| Vec2::new(z[2 * j], z[2 * j + 1]))
            .collect();
        LoopPath {
            nodes,
            t_total: z[2 * self.m],
        }
    }
}

impl ActionProblem for LoopProblem<'_> {
    fn dim(&self) -> usize {
        2 * self.m + 1
    }

    fn n_segments(&self) -> usize {
        self.m
    }

    fn eval(&self, z: &[f64]) -> Result<ActionValue, PathError> {
        let lp = self.to_loop(z);
        let v = loop_action(self.model, &lp, self.k)?;
        self.record(self.model, self.k, &v, lp.t_total);
        Ok(v)
    }

    fn eval_grad(&self, z: &[f64], grad: &mut [f64]) -> Result<ActionValue, PathError> {
        let lp = self.to_loop(z);
        let (v, g) = loop_gradient(self.model, &lp, self.k)?;
        self.record(self.model, self.k, &v, lp.t_total);
        for (j, n) in g.nodes.iter().enumerate() {
            grad[2 * j] = n.x;
            grad[2 * j + 1] = n.y;
        }
        grad[2 * self.m] = g.dt;
        Ok(v)
    }

    // see the connect problem: evaluation is representation-independent
    fn canonicalize(&self, _z: &mut [f64]) {}

    fn max_chord(&self, z: &[f64]) -> f64 {
        let chart = self.model.chart();
        if !chart.is_torus() {
            return 0.0;
        }
        let lp = self.to_loop(z);
        let mut worst = 0.0_f64;
        for i in 0..self.m {
            worst = worst.max(
                chart
                    .displacement(lp.nodes[i], lp.nodes[(i + 1) % self.m])
                    .norm(),
            );
        }
        worst
    }

    fn segment_disps(&self, z: &[f64]) -> Vec<Vec2> {
        let chart = self.model.chart();
        let lp = self.to_loop(z);
        (0..self.m)
            .map(|i| chart.displacement(lp.nodes[i], lp.nodes[(i + 1) % self.m]))
            .collect()
    }

    fn diagnostics(&self) -> &SharedDiagnostics {
        &self.diag
    }
}

// ---------------------------------------------------------------------------
// conjugate descent engine
// ---------------------------------------------------------------------------

struct EngineOutcome {
    z: Vec<f64>,
    value: ActionValue,
    grad_norm: f64,
    iterations: usize,
    verdict: SolveVerdict,
    trace: Vec<TracePoint>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn descend<P: ActionProblem>(
    problem: &P,
    z0: Vec<f64>,
    cfg: &MinimizeConfig,
) -> Result<EngineOutcome, PathError> {
    let dim = problem.dim();
    let t_idx = problem.t_index();
    let tol = cfg.grad_tol * (problem.n_segments() as f64).sqrt();

    let mut z = z0;
    problem.canonicalize(&mut z);
    if z[t_idx] < cfg.t_min {
        z[t_idx] = cfg.t_min;
    }
    let mut grad = vec![0.0; dim];
    let mut value = problem.eval_grad(&z, &mut grad)?;
    let mut f = value.action;
    let mut disps = problem.segment_disps(&z);
    let mut dir: Vec<f64> = grad.iter().map(|g| -g).collect();
    let mut alpha = 0.05_f64;
    // limited-memory quasi-Newton pairs (s, y, rho)
    let memory = 10usize;
    let mut pairs: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)> =
        std::collections::VecDeque::with_capacity(memory);
    let mut z_prev = z.clone();
    let mut grad_prev = grad.clone();
    let mut t_clamp_streak = 0usize;
    let mut trace = Vec::new();
    let trace_every = (cfg.max_iters / 256).max(1);
    // progress over a window, to stop once decrease hits the float floor
    let stall_window = 400usize;
    let mut window_anchor = f;
    let mut window_grad_anchor = f64::INFINITY;

    // a trial is admissible if no torus segment flipped onto another sheet
    // and the chord guard holds; flips would silently change the component
    let admissible = |z_new: &[f64], disps: &[Vec2]| -> bool {
        if problem.max_chord(z_new) > MAX_TORUS_CHORD {
            return false;
        }
        let new_disps = problem.segment_disps(z_new);
        new_disps
            .iter()
            .zip(disps)
            .all(|(a, b)| (a.x - b.x).abs() < 0.5 && (a.y - b.y).abs() < 0.5)
    };

    let mut iterations = 0;
    let mut verdict = SolveVerdict::MaxIters;
    while iterations < cfg.max_iters {
        iterations += 1;
        let g_norm = norm(&grad);
        if iterations % trace_every == 0 || iterations == 1 {
            trace.push(TracePoint {
                iter: iterations,
                action: f,
                grad_norm: g_norm,
                t_total: z[t_idx],
            });
        }
        if g_norm <= tol {
            verdict = SolveVerdict::Converged;
            break;
        }

        // limited-memory quasi-Newton direction by the two-loop recursion
        if pairs.is_empty() {
            for i in 0..dim {
                dir[i] = -grad[i];
            }
        } else {
            let mut q: Vec<f64> = grad.clone();
            let mut a = vec![0.0; pairs.len()];
            for (i, (s, y, rho)) in pairs.iter().enumerate().rev() {
                a[i] = rho * dot(s, &q);
                for (qj, yj) in q.iter_mut().zip(y) {
                    *qj -= a[i] * yj;
                }
            }
            let (s_last, y_last, _) = pairs.back().expect("nonempty");
            let gamma = dot(s_last, y_last) / dot(y_last, y_last).max(1e-300);
            for qj in q.iter_mut() {
                *qj *= gamma;
            }
            for (i, (s, y, rho)) in pairs.iter().enumerate() {
                let b = rho * dot(y, &q);
                for (qj, sj) in q.iter_mut().zip(s) {
                    *qj += (a[i] - b) * sj;
                }
            }
            for i in 0..dim {
                dir[i] = -q[i];
            }
            // quasi-Newton steps are natural scale: try unit step first
            alpha = 1.0;
        }
        if dot(&dir, &grad) >= -1e-14 * norm(&dir) * g_norm {
            for i in 0..dim {
                dir[i] = -grad[i];
            }
            pairs.clear();
        }

        let mut accepted = false;
        'tries: for attempt in 0..2 {
            if attempt == 1 {
                // quasi-Newton direction failed: steepest-descent retry
                for i in 0..dim {
                    dir[i] = -grad[i];
                }
                pairs.clear();
                alpha = alpha.min(1e-3);
            }
            let slope = dot(&dir, &grad);
            let trial = |step: f64| -> Option<(Vec<f64>, ActionValue, bool)> {
                let mut z_new: Vec<f64> =
                    z.iter().zip(&dir).map(|(zi, di)| zi + step * di).collect();
                problem.canonicalize(&mut z_new);
                let mut clamped = false;
                if z_new[t_idx] < cfg.t_min {
                    z_new[t_idx] = cfg.t_min;
                    clamped = true;
                }
                if !admissible(&z_new, &disps) {
                    return None;
                }
                match problem.eval(&z_new) {
                    Ok(v) if v.action <= f + cfg.armijo_c * step * slope => {
                        Some((z_new, v, clamped))
                    }
                    _ => None,
                }
            };
            let mut step = alpha;
            for bt in 0..ARMIJO_MAX_BACKTRACKS {
                let Some((mut z_new, mut v_new, mut clamped)) = trial(step) else {
                    step *= cfg.backtrack;
                    continue;
                };
                // gallop forward while the action keeps dropping, which keeps
                // the conjugate directions close to exact line searches
                if bt == 0 {
                    let mut grow = step * 2.0;
                    while let Some((z_g, v_g, c_g)) = trial(grow) {
                        if v_g.action >= v_new.action {
                            break;
                        }
                        z_new = z_g;
                        v_new = v_g;
                        clamped = c_g;
                        step = grow;
                        grow *= 2.0;
                        if grow > 1e3 {
                            break;
                        }
                    }
                }
                z = z_new;
                f = v_new.action;
                value = v_new;
                disps = problem.segment_disps(&z);
                t_clamp_streak = if clamped { t_clamp_streak + 1 } else { 0 };
                accepted = true;
                alpha = step.clamp(1e-12, 1e3);
                break 'tries;
            }
        }
        let mut flat_window = false;
        if iterations % stall_window == 0 {
            let g_now = norm(&grad);
            flat_window = window_anchor - f <= 1e-12 * (1.0 + f.abs())
                && g_now >= 0.5 * window_grad_anchor;
            window_anchor = f;
            window_grad_anchor = g_now;
        }
        if !accepted || flat_window {
            // no resolvable decrease left at this precision
            verdict = if g_norm <= 100.0 * tol {
                SolveVerdict::Converged
            } else {
                SolveVerdict::Stalled
            };
            break;
        }

        value = problem.eval_grad(&z, &mut grad)?;
        f = value.action;

        // update the quasi-Newton memory with a curvature-safe pair
        let s: Vec<f64> = z.iter().zip(&z_prev).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = grad.iter().zip(&grad_prev).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if pairs.len() == memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        } else {
            pairs.clear();
        }
        z_prev.copy_from_slice(&z);
        grad_prev.copy_from_slice(&grad);

        // the T -> 0 degeneration: time pinned at the guard while the path
        // shrinks and the action drains to zero from above
        if t_clamp_streak >= 8 && value.length < 0.05 && f > -1e-9 && f < 1e-2 {
            verdict = SolveVerdict::CollapsedToConstant;
            break;
        }
    }

    let grad_norm = norm(&grad);
    trace.push(TracePoint {
        iter: iterations,
        action: f,
        grad_norm,
        t_total: z[t_idx],
    });
    Ok(EngineOutcome {
        z,
        value,
        grad_norm,
        iterations,
        verdict,
        trace,
    })
}

// ---------------------------------------------------------------------------
// minimization fronts
// ---------------------------------------------------------------------------

/// Minimize the free-time action from one starting path.
pub fn minimize_action(
    model: &SurfaceModel,
    q0: &BoundarySpec,
    q1: &BoundarySpec,
    k: f64,
    init: &DiscretePath,
    cfg: &MinimizeConfig,
) -> Result<SolveReport, PathError> {
    cfg.validate()?;
    let n = init.n_segments();
    let problem = ConnectProblem::new(model, q0, q1, n, k);
    let z0 = problem.to_flat(init);
    if problem.eval(&z0).is_err() {
        // initial path leaves the chart: report instead of failing
        return Ok(SolveReport {
            verdict: SolveVerdict::DomainExit,
            path: init.clone(),
            action: ActionValue {
                action: f64::NAN,
                da_dt: f64::NAN,
                length: f64::NAN,
                kinetic: f64::NAN,
                max_speed: f64::NAN,
            },
            grad_norm: f64::NAN,
            iterations: 0,
            residuals: None,
            component: None,
            trace: vec![],
            trust_region_hit: false,
            bound_violations: 0,
        });
    }
    let out = descend(&problem, z0, cfg)?;
    let path = problem.to_path(&out.z);
    let residuals = match out.verdict {
        SolveVerdict::Converged | SolveVerdict::MaxIters | SolveVerdict::Stalled => {
            Some(verify_solution(model, q0, q1, &path, k))
        }
        _ => None,
    };
    let component = if model.chart().is_torus() {
        classify_component(model.chart(), q0, q1, &path).ok()
    } else {
        None
    };
    Ok(SolveReport {
        verdict: out.verdict,
        path,
        action: out.value,
        grad_norm: out.grad_norm,
        iterations: out.iterations,
        residuals,
        component,
        trace: out.trace,
        trust_region_hit: problem.diag.trust_region_hit.load(Ordering::Relaxed),
        bound_violations: problem.diag.bound_violations.load(Ordering::Relaxed),
    })
}

/// Run `minimize_action` from many seeds concurrently and keep the best
/// report: converged beats non-converged, then lowest action, ties within
/// 1e-8 broken by the smaller time.
pub fn minimize_action_multistart(
    model: &SurfaceModel,
    q0: &BoundarySpec,
    q1: &BoundarySpec,
    k: f64,
    seeds: &[DiscretePath],
    cfg: &MinimizeConfig,
) -> Result<(SolveReport, Vec<SolveReport>), PathError> {
    if seeds.is_empty() {
        return Err(PathError::Serialization("no seeds provided".into()));
    }
    let reports: Vec<SolveReport> = seeds
        .par_iter()
        .map(|s| minimize_action(model, q0, q1, k, s, cfg))
        .collect::<Result<_, _>>()?;
    let best = pick_best(&reports);
    Ok((reports[best].clone(), reports))
}

fn pick_best(reports: &[SolveReport]) -> usize {
    let mut best = 0;
    for i in 1..reports.len() {
        let (a, b) = (&reports[i], &reports[best]);
        let a_conv = a.verdict == SolveVerdict::Converged;
        let b_conv = b.verdict == SolveVerdict::Converged;
        let better = if a_conv != b_conv {
            a_conv
        } else if a.action.action.is_nan() {
            false
        } else if b.action.action.is_nan() {
            true
        } else if (a.action.action - b.action.action).abs() <= 1e-8 {
            a.path.t_total < b.path.t_total
        } else {
            a.action.action < b.action.action
        };
        if better {
            best = i;
        }
    }
    best
}

/// Straight seed with the requested extra winding and a speed-matched time.
#[allow(clippy::too_many_arguments)]
pub fn straight_seed(
    model: &SurfaceModel,
    q0: &BoundarySpec,
    q1: &BoundarySpec,
    s0: Option<f64>,
    s1: Option<f64>,
    extra_winding: [i64; 2],
    k: f64,
    n: usize,
) -> Result<DiscretePath, PathError> {
    let chart = model.chart();
    let a = q0.realize(s0);
    let b = q1.realize(s1);
    let mut d = chart.displacement(a, b);
    d.x += extra_winding[0] as f64;
    d.y += extra_winding[1] as f64;
    let len = d.norm();
    let speed = (2.0 * k.max(1e-6)).sqrt();
    let t = (len / speed).clamp(0.05, 20.0);
    DiscretePath::straight(chart, q0, q1, s0, s1, extra_winding, n, t)
}

/// Random seeds around straight chords: endpoint parameters swept and the
/// interior perturbed by low Fourier modes that keep the endpoints fixed.
pub fn random_seeds(
    model: &SurfaceModel,
    q0: &BoundarySpec,
    q1: &BoundarySpec,
    extra_winding: [i64; 2],
    k: f64,
    cfg: &MinimizeConfig,
) -> Vec<DiscretePath> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut seeds = Vec::with_capacity(cfg.multistart.max(1));
    for idx in 0..cfg.multistart.max(1) {
        let s0 = if q0.is_point() {
            None
        } else {
            Some(rng.gen_range(0.0..1.0))
        };
        let s1 = if q1.is_point() {
            None
        } else {
            Some(rng.gen_range(0.0..1.0))
        };
        let mut path = match straight_seed(model, q0, q1, s0, s1, extra_winding, k, cfg.n_segments)
        {
            Ok(p) => p,
            Err(_) => continue,
        };
        if idx > 0 {
            let amp = 0.35 * rng.gen_range(0.0..1.0);
            let (a1, b1, a2, b2) = (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let n = path.n_segments();
            let scale = model.chart().displacement(q0.realize(s0), q1.realize(s1)).norm() + 0.2;
            for (j, p) in path.interior.iter_mut().enumerate() {
                let s = (j + 1) as f64 / n as f64;
                let w1 = (std::f64::consts::PI * s).sin();
                let w2 = (2.0 * std::f64::consts::PI * s).sin();
                let dx = amp * scale * (a1 * w1 + a2 * w2) * 0.5;
                let dy = amp * scale * (b1 * w1 + b2 * w2) * 0.5;
                *p = model.chart().canonical(Vec2::new(p.x + dx, p.y + dy));
            }
        }
        seeds.push(path);
    }
    seeds
}

// ---------------------------------------------------------------------------
// loop minimization (used by the critical-value probes)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct LoopReport {
    pub verdict: SolveVerdict,
    pub loop_path: LoopPath,
    pub action: ActionValue,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Minimize the free-time loop action from one starting loop.
pub fn minimize_loop(
    model: &SurfaceModel,
    k: f64,
    init: &LoopPath,
    cfg: &MinimizeConfig,
) -> Result<LoopReport, PathError> {
    let problem = LoopProblem::new(model, init.nodes.len(), k);
    let z0 = problem.to_flat(init);
    let out = descend(&problem, z0, cfg)?;
    let lp = problem.to_loop(&out.z);
    Ok(LoopReport {
        verdict: out.verdict,
        loop_path: lp,
        action: out.value,
        grad_norm: out.grad_norm,
        iterations: out.iterations,
    })
}

// ---------------------------------------------------------------------------
// mountain pass: elastic string with a climbing image
// ---------------------------------------------------------------------------

/// Anchor on an intersection component of the two boundary submanifolds.
#[derive(Debug, Clone, Copy)]
pub struct OmegaAnchor {
    pub point: Vec2,
    pub s0: f64,
    pub s1: f64,
    /// Isolation radius of the component.
    pub epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct StringConfig {
    pub beads: usize,
    pub n_segments: usize,
    pub outer_iters: usize,
    /// Full-gradient norm target for the climbing bead.
    pub saddle_tol: f64,
    pub seed: u64,
    /// Budget for the negative-action head search.
    pub head_search: MinimizeConfig,
}

impl Default for StringConfig {
    fn default() -> Self {
        StringConfig {
            beads: 20,
            n_segments: 48,
            outer_iters: 6000,
            saddle_tol: 1e-5,
            seed: 0,
            head_search: MinimizeConfig {
                n_segments: 48,
                max_iters: 4000,
                grad_tol: 1e-6,
                multistart: 10,
                ..MinimizeConfig::default()
            },
        }
    }
}

/// Mountain-pass barrier constants computed from the scenario data.
#[derive(Debug, Clone, Copy)]
pub struct AlphaBound {
    /// Barrier valid when theta vanishes near the anchor: 2 eps sqrt(a (k - e0)).
    pub theta_free: Option<f64>,
    /// General barrier (2 sqrt(a (k - c_e)) - c_theta) eps, clamped at 0.
    pub general: f64,
    pub c_e: f64,
    pub c_theta: f64,
}

impl AlphaBound {
    pub fn best(&self) -> f64 {
        self.theta_free.unwrap_or(0.0).max(self.general).max(0.0)
    }
}

/// Sample the epsilon-ball around the anchor for the barrier constants.
pub fn alpha_bound(model: &SurfaceModel, anchor: &OmegaAnchor, k: f64) -> AlphaBound {
    let a = model.quadratic_bounds().a;
    let mut c_e = 0.0_f64;
    let mut c_theta = 0.0_f64;
    let m = 48;
    for i in 0..m {
        for j in 0..m {
            let q = Vec2::new(
                anchor.point.x + anchor.epsilon * (2.0 * i as f64 / (m - 1) as f64 - 1.0),
                anchor.point.y + anchor.epsilon * (2.0 * j as f64 / (m - 1) as f64 - 1.0),
            );
            if (q - anchor.point).norm() > anchor.epsilon {
                continue;
            }
            if !model.chart().contains(q) {
                continue;
            }
            c_e = c_e.max(model.rest_energy(q));
            if let Ok(t) = model.theta_at(q) {
                c_theta = c_theta.max(t.dual_norm);
            }
        }
    }
    let e0 = global_rest_energy_max(model);
    let theta_free = if c_theta <= 1e-12 && k > e0 {
        Some(2.0 * anchor.epsilon * (a * (k - e0)).sqrt())
    } else {
        None
    };
    let general = if k > c_e {
        anchor.epsilon * (2.0 * (a * (k - c_e)).sqrt() - c_theta)
    } else {
        0.0
    };
    AlphaBound {
        theta_free,
        general: general.max(0.0),
        c_e,
        c_theta,
    }
}

fn global_rest_energy_max(model: &SurfaceModel) -> f64 {
    model
        .region_grid(128)
        .into_iter()
        .map(|q| model.rest_energy(q))
        .fold(0.0_f64, f64::max)
}

#[derive(Debug, Clone)]
pub struct MountainPassReport {
    pub verdict: SolveVerdict,
    /// Action of the highest bead after relaxation.
    pub minimax_value: f64,
    /// The highest bead as a solver report (with orbit diagnostics).
    pub saddle: Option<SolveReport>,
    pub alpha: AlphaBound,
    pub t0: f64,
    pub bead_actions: Vec<f64>,
    pub outer_iterations: usize,
    /// Final full-gradient norm of the climbing bead.
    pub saddle_grad_norm: f64,
}

/// Internal string state passed between scan energies for warm starting.
#[derive(Debug, Clone)]
pub struct StringState {
    beads: Vec<Vec<f64>>,
    n: usize,
}

fn segment_flip(old: Vec<Vec2>, new: Vec<Vec2>) -> bool {
    old.iter()
        .zip(&new)
        .any(|(a, b)| (a.x - b.x).abs() >= 0.5 || (a.y - b.y).abs() >= 0.5)
}

fn aligned_diff(torus: bool, a: &[f64], b: &[f64], s_indices: &[usize], t_idx: usize) -> Vec<f64> {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(i, (x, y))| {
            // periodic coordinates compare by minimal image
            if (torus && i != t_idx) || s_indices.contains(&i) {
                wrap_signed(y - x)
            } else {
                y - x
            }
        })
        .collect()
}

fn head_seed_paths(
    model: &SurfaceModel,
    q0: &BoundarySpec,
    q1: &BoundarySpec,
    anchor: &OmegaAnchor,
    k: f64,
    cfg: &StringConfig,
) -> Vec<DiscretePath> {
    let mut seeds = Vec::new();
    let n = cfg.n_segments;
    // sweeps of straight chords between the two submanifolds
    for i in 0..8 {
        for j in 0..8 {
            let s0 = i as f64 / 8.0;
            let s1 = j as f64 / 8.0;
            if let Ok(p) = straight_seed(model, q0, q1, Some(s0), Some(s1), [0, 0], k, n) {
                seeds.push(p);
            }
        }
    }
    // loop-concatenation heads: ride a candidate negative loop from the anchor
    if model.chart().is_torus() {
        if let Some(psi) = model.psi() {
            for turns in 1..=3 {
                let mut nodes = Vec::new();
                let p = anchor.point;
                let y_peak = psi.peak();
                let m = 12 * turns;
                // down to the bump peak row, ride it westward, come back
                for i in 0..8 {
                    let f = i as f64 / 8.0;
                    nodes.push(Vec2::new(p.x, p.y + f * wrap_signed(y_peak - p.y)));
                }
                for i in 0..(m * 8) {
                    let f = i as f64 / (m * 8) as f64;
                    nodes.push(Vec2::new(
                        wrap_unit(p.x - f * turns as f64),
                        y_peak,
                    ));
                }
                for i in 0..=8 {
                    let f = i as f64 / 8.0;
                    nodes.push(Vec2::new(p.x, y_peak + f * wrap_signed(p.y - y_peak)));
                }
                let t = (turns as f64 + 1.0) / (2.0 * k.max(0.01)).sqrt();
                let interior = resample_polyline(model.chart(), &nodes, n);
                if let Ok(path) = DiscretePath::new(
                    if q0.is_point() { None } else { Some(anchor.s0) },
                    interior,
                    if q1.is_point() { None } else { Some(anchor.s1) },
                    t,
                ) {
                    seeds.push(path);
                }
            }
        }
    }
    seeds
}

/// Resample a polyline to n-1 interior nodes at uniform arclength.
fn resample_polyline(chart: ChartKind, nodes: &[Vec2], n: usize) -> Vec<Vec2> {
    // cumulative chart lengths in the lift
    let mut lifted = vec![nodes[0]];
    for w in nodes.windows(2) {
        let d = chart.displacement(w[0], w[1]);
        let last = *lifted.last().unwrap();
        lifted.push(last + d);
    }
    let mut cum = vec![0.0];
    for w in lifted.windows(2) {
        cum.push(cum.last().unwrap() + (w[1] - w[0]).norm());
    }
    let total: f64 = *cum.last().unwrap();
    let mut interior = Vec::with_capacity(n - 1);
    let mut seg = 0;
    for j in 1..n {
        let target = total * j as f64 / n as f64;
        while seg + 1 < cum.len() - 1 && cum[seg + 1] < target {
            seg += 1;
        }
        let span = (cum[seg + 1] - cum[seg]).max(1e-300);
        let f = (target - cum[seg]) / span;
        let p = lifted[seg] + (lifted[seg + 1] - lifted[seg]) * f;
        interior.push(chart.canonical(p));
    }
    interior
}

/// Elastic-string mountain-pass search between the constant-path valley at
/// the anchor and the negative-action valley.
pub fn mountain_pass(
    model: &SurfaceModel,
    q0: &BoundarySpec,
    q1: &BoundarySpec,
    anchor: &OmegaAnchor,
    k: f64,
    cfg: &StringConfig,
    warm: Option<&StringState>,
) -> Result<(MountainPassReport, Option<StringState>), PathError> {
    let alpha = alpha_bound(model, anchor, k);
    let chart = model.chart();
    let n = cfg.n_segments;

    // tail: constant path at the anchor, short enough that its action is
    // at most a quarter of the barrier (with slack for the endpoint
    // parameters not sitting exactly on the intersection)
    let t0 = if alpha.best() > 0.0 {
        let denom = 4.0 * (k - model.rest_energy(anchor.point)).max(1e-9);
        (0.99 * alpha.best() / denom).clamp(1e-4, 1.0)
    } else {
        1e-2
    };
    let tail_path = DiscretePath::new(
        if q0.is_point() { None } else { Some(anchor.s0) },
        vec![anchor.point; n - 1],
        if q1.is_point() { None } else { Some(anchor.s1) },
        t0,
    )?;

    let problem = ConnectProblem::new(model, q0, q1, n, k);
    let tail_label = if chart.is_torus() {
        classify_component(chart, q0, q1, &tail_path).ok()
    } else {
        None
    };

    // head: negative-action path in the tail's component
    let mut head_path: Option<DiscretePath> = None;
    let mut head_from_warm = false;
    if let Some(w) = warm {
        if w.n == n && w.beads.len() >= 2 {
            let candidate = problem.to_path(w.beads.last().unwrap());
            if let Ok(v) = discrete_action(model, q0, q1, &candidate, k) {
                if v.action < 0.0 {
                    head_path = Some(candidate);
                    head_from_warm = true;
                }
            }
        }
    }
    if head_path.is_none() {
        let mut seeds = head_seed_paths(model, q0, q1, anchor, k, cfg);
        seeds.retain(|p| {
            discrete_action(model, q0, q1, p, k).is_ok()
                && (!chart.is_torus()
                    || classify_component(chart, q0, q1, p).ok() == tail_label)
        });
        // quick pre-rank by raw action, then polish the most promising seeds
        let mut ranked: Vec<(f64, DiscretePath)> = seeds
            .into_iter()
            .map(|p| {
                (
                    discrete_action(model, q0, q1, &p, k)
                        .map(|v| v.action)
                        .unwrap_or(f64::INFINITY),
                    p,
                )
            })
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
        if ranked.first().is_some_and(|(a, _)| *a < -1e-6) {
            head_path = Some(ranked.remove(0).1);
        } else {
            let polish_cfg = cfg.head_search.clone();
            let candidates: Vec<DiscretePath> =
                ranked.into_iter().take(polish_cfg.multistart).map(|(_, p)| p).collect();
            let polished: Vec<Option<DiscretePath>> = candidates
                .par_iter()
                .map(|p| {
                    minimize_action(model, q0, q1, k, p, &polish_cfg)
                        .ok()
                        .filter(|r| {
                            r.action.action < -1e-6
                                && (!chart.is_torus()
                                    || classify_component(chart, q0, q1, &r.path).ok()
                                        == tail_label)
                        })
                        .map(|r| r.path)
                })
                .collect();
            head_path = polished.into_iter().flatten().next();
        }
    }

    let Some(head_path) = head_path else {
        return Ok((
            MountainPassReport {
                verdict: SolveVerdict::NotApplicable,
                minimax_value: f64::NAN,
                saddle: None,
                alpha,
                t0,
                bead_actions: vec![],
                outer_iterations: 0,
                saddle_grad_norm: f64::NAN,
            },
            None,
        ));
    };

    // indices of the periodic endpoint parameters in the flat layout
    let mut s_indices = Vec::new();
    if !q0.is_point() {
        s_indices.push(0);
    }
    if !q1.is_point() {
        s_indices.push(problem.dim() - 2);
    }
    let t_idx = problem.t_index();
    let torus = chart.is_torus();

    // initial string: contraction of the head toward the anchor point;
    // warm strings are reused only while their head stays in the valley,
    // and the tail is refreshed so its action matches the current barrier
    let m = cfg.beads.max(6);
    let mut beads: Vec<Vec<f64>> = match warm {
        Some(w) if head_from_warm && w.n == n && w.beads.len() == m => {
            let mut beads = w.beads.clone();
            beads[0] = problem.to_flat(&tail_path);
            beads
        }
        _ => {
            let tail_flat = problem.to_flat(&tail_path);
            let head_flat = problem.to_flat(&head_path);
            // lift head nodes continuously so the contraction is coherent
            let head_pts = head_path.chain(q0, q1);
            let mut lifted = vec![head_pts[0]];
            for w in head_pts.windows(2) {
                let d = chart.displacement(w[0], w[1]);
                let last = *lifted.last().unwrap();
                lifted.push(last + d);
            }
            (0..m)
                .map(|bi| {
                    let f = bi as f64 / (m - 1) as f64;
                    if bi == 0 {
                        return tail_flat.clone();
                    }
                    if bi == m - 1 {
                        return head_flat.clone();
                    }
                    let mut z = Vec::with_capacity(problem.dim());
                    if !q0.is_point() {
                        z.push(wrap_unit(
                            anchor.s0 + f * wrap_signed(head_path.s0.unwrap_or(0.0) - anchor.s0),
                        ));
                    }
                    let base = chart.displacement(anchor.point, head_pts[0]);
                    #[allow(clippy::needless_range_loop)]
                    for j in 1..n {
                        let rel = lifted[j] - head_pts[0] + base;
                        let p = chart.canonical(anchor.point + rel * f);
                        z.push(p.x);
                        z.push(p.y);
                    }
                    if !q1.is_point() {
                        z.push(wrap_unit(
                            anchor.s1 + f * wrap_signed(head_path.s1.unwrap_or(0.0) - anchor.s1),
                        ));
                    }
                    z.push(t0 + f * (head_path.t_total - t0));
                    z
                })
                .collect()
        }
    };

    let eval_actions = |beads: &[Vec<f64>]| -> Result<Vec<ActionValue>, PathError> {
        beads.par_iter().map(|z| problem.eval(z)).collect()
    };

    let mut step = 0.02;
    let mut prev_force = f64::INFINITY;
    let mut outer = 0;
    let climb_start = cfg.outer_iters / 3;
    let mut stalled = false;

    let mut actions = eval_actions(&beads)?;
    debug_assert!(actions[m - 1].action < 0.0, "head bead must stay negative");
    debug_assert!(
        alpha.best() <= 0.0 || actions[0].action <= 0.25 * alpha.best() + 1e-12,
        "tail action {} exceeds a quarter of the barrier {}",
        actions[0].action,
        alpha.best()
    );

    while outer < cfg.outer_iters {
        outer += 1;
        // gradients of the interior beads
        let grads: Vec<(Vec<f64>, ActionValue)> = beads[1..m - 1]
            .par_iter()
            .map(|z| {
                let mut g = vec![0.0; problem.dim()];
                let v = problem.eval_grad(z, &mut g)?;
                Ok((g, v))
            })
            .collect::<Result<_, PathError>>()?;

        // highest interior bead climbs after the warmup phase
        let i_max = grads
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .1.action.total_cmp(&b.1 .1.action))
            .map(|(i, _)| i + 1)
            .unwrap_or(1);

        let mut max_force = 0.0_f64;
        let mut new_beads = beads.clone();
        for bi in 1..m - 1 {
            let (g, v) = &grads[bi - 1];
            // freeze beads that already settled into the constant valley
            if alpha.best() > 0.0 && v.action < 0.5 * alpha.best() && v.length < anchor.epsilon {
                continue;
            }
            let tau_raw = aligned_diff(torus, &beads[bi - 1], &beads[bi + 1], &s_indices, t_idx);
            let tn = norm(&tau_raw).max(1e-300);
            let tau: Vec<f64> = tau_raw.iter().map(|x| x / tn).collect();
            let g_par = dot(g, &tau);
            let climbing = outer > climb_start && bi == i_max;
            let force: Vec<f64> = g
                .iter()
                .zip(&tau)
                .map(|(gi, ti)| {
                    if climbing {
                        -gi + 2.0 * g_par * ti
                    } else {
                        -(gi - g_par * ti)
                    }
                })
                .collect();
            let fnorm = norm(&force);
            max_force = max_force.max(if climbing { 0.0 } else { fnorm });
            let move_scale = (step / fnorm.max(1e-9)).min(step * 10.0);
            for (zi, fi) in new_beads[bi].iter_mut().zip(&force) {
                *zi += move_scale * fi.clamp(-1e6, 1e6);
            }
            problem.canonicalize(&mut new_beads[bi]);
            if new_beads[bi][t_idx] < 1e-4 {
                new_beads[bi][t_idx] = 1e-4;
            }
            if problem.max_chord(&new_beads[bi]) > MAX_TORUS_CHORD
                || segment_flip(problem.segment_disps(&beads[bi]), problem.segment_disps(&new_beads[bi]))
            {
                new_beads[bi] = beads[bi].clone(); // reject this bead move
            }
        }

        // redistribute by path-space arclength, keeping the climbing bead
        let redistribute = outer <= climb_start || outer % 10 == 0;
        if redistribute {
            let mut cum = vec![0.0];
            for i in 0..m - 1 {
                let d = aligned_diff(torus, &new_beads[i], &new_beads[i + 1], &s_indices, t_idx);
                cum.push(cum.last().unwrap() + norm(&d));
            }
            let total = *cum.last().unwrap();
            if total > 1e-12 {
                let mut placed = new_beads.clone();
                #[allow(clippy::needless_range_loop)]
                for bi in 1..m - 1 {
                    if outer > climb_start && bi == i_max {
                        continue;
                    }
                    let target = total * bi as f64 / (m - 1) as f64;
                    let mut seg = 0;
                    while seg + 1 < cum.len() - 1 && cum[seg + 1] < target {
                        seg += 1;
                    }
                    let span = (cum[seg + 1] - cum[seg]).max(1e-300);
                    let f = (target - cum[seg]) / span;
                    let d =
                        aligned_diff(torus, &new_beads[seg], &new_beads[seg + 1], &s_indices, t_idx);
                    let mut z: Vec<f64> = new_beads[seg]
                        .iter()
                        .zip(&d)
                        .map(|(a, di)| a + f * di)
                        .collect();
                    problem.canonicalize(&mut z);
                    placed[bi] = z;
                }
                new_beads = placed;
            }
        }

        beads = new_beads;
        actions = eval_actions(&beads)?;

        // adaptive step: grow while the transverse force keeps shrinking
        if max_force < prev_force {
            step = (step * 1.02).min(0.1);
        } else {
            step = (step * 0.7).max(1e-5);
        }
        prev_force = max_force;

        if outer > climb_start {
            let mut g = vec![0.0; problem.dim()];
            let i_max = actions[1..m - 1]
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.action.total_cmp(&b.1.action))
                .map(|(i, _)| i + 1)
                .unwrap_or(1);
            problem.eval_grad(&beads[i_max], &mut g)?;
            if norm(&g) <= cfg.saddle_tol * (n as f64).sqrt() {
                break;
            }
        }
    }

    // polish the climbing bead with a short saddle refinement
    let i_max = actions[1..m - 1]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.action.total_cmp(&b.1.action))
        .map(|(i, _)| i + 1)
        .unwrap_or(1);
    let (saddle_z, saddle_grad_norm) = climb_refine(
        &problem,
        &beads,
        i_max,
        &s_indices,
        t_idx,
        torus,
        cfg.saddle_tol * (n as f64).sqrt(),
        12_000,
    )?;
    beads[i_max] = saddle_z;
    actions = eval_actions(&beads)?;

    let bead_actions: Vec<f64> = actions.iter().map(|v| v.action).collect();
    let minimax_value = bead_actions[i_max];
    let saddle_path = problem.to_path(&beads[i_max]);
    let residuals = Some(verify_solution(model, q0, q1, &saddle_path, k));
    let converged = saddle_grad_norm <= cfg.saddle_tol * (n as f64).sqrt() * 10.0;
    if !converged {
        stalled = true;
    }
    let report = MountainPassReport {
        verdict: if converged {
            SolveVerdict::Converged
        } else {
            SolveVerdict::Stalled
        },
        minimax_value,
        saddle: Some(SolveReport {
            verdict: if converged {
                SolveVerdict::Converged
            } else {
                SolveVerdict::Stalled
            },
            path: saddle_path,
            action: actions[i_max],
            grad_norm: saddle_grad_norm,
            iterations: outer,
            residuals,
            component: tail_label,
            trace: vec![],
            trust_region_hit: problem.diag.trust_region_hit.load(Ordering::Relaxed),
            bound_violations: problem.diag.bound_violations.load(Ordering::Relaxed),
        }),
        alpha,
        t0,
        bead_actions,
        outer_iterations: outer,
        saddle_grad_norm,
    };
    let _ = stalled;
    Ok((
        report,
        Some(StringState { beads, n }),
    ))
}

/// Climbing-image refinement of a single bead between its fixed neighbors.
#[allow(clippy::too_many_arguments)]
fn climb_refine(
    problem: &ConnectProblem<'_>,
    beads: &[Vec<f64>],
    i_max: usize,
    s_indices: &[usize],
    t_idx: usize,
    torus: bool,
    tol: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, f64), PathError> {
    let mut z = beads[i_max].clone();
    let mut g = vec![0.0; problem.dim()];
    let mut step = 1e-3_f64;
    let mut best_norm = f64::INFINITY;
    let mut best_z = z.clone();
    for _ in 0..max_iters {
        problem.eval_grad(&z, &mut g)?;
        let gn = norm(&g);
        if gn < best_norm {
            best_norm = gn;
            best_z = z.clone();
            step = (step * 1.1).min(2e-2);
        } else {
            step = (step * 0.5).max(1e-8);
            z = best_z.clone();
            problem.eval_grad(&z, &mut g)?;
        }
        if best_norm <= tol {
            break;
        }
        let tau_raw = aligned_diff(torus, &beads[i_max - 1], &beads[i_max + 1], s_indices, t_idx);
        let tn = norm(&tau_raw).max(1e-300);
        let tau: Vec<f64> = tau_raw.iter().map(|x| x / tn).collect();
        let g_par = dot(&g, &tau);
        for i in 0..z.len() {
            z[i] += step * (-g[i] + 2.0 * g_par * tau[i]) / (1.0 + norm(&g));
        }
        problem.canonicalize(&mut z);
        if z[t_idx] < 1e-4 {
            z[t_idx] = 1e-4;
        }
        if problem.max_chord(&z) > MAX_TORUS_CHORD
            || segment_flip(problem.segment_disps(&best_z), problem.segment_disps(&z))
        {
            z = best_z.clone();
            step *= 0.5;
        }
    }
    Ok((best_z, best_norm))
}

// ---------------------------------------------------------------------------
// Struwe-style monotone scan
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct MinimaxRow {
    pub k: f64,
    pub c_omega: f64,
    pub converged: bool,
    pub t_star: f64,
    pub residual: f64,
    /// Difference-quotient time bound satisfied w.r.t. the previous row.
    pub t_bounded: bool,
}

#[derive(Debug, Clone)]
pub struct MinimaxCurve {
    pub rows: Vec<MinimaxRow>,
}

impl MinimaxCurve {
    /// Monotonicity defect: worst decrease between consecutive converged rows.
    pub fn monotonicity_defect(&self) -> f64 {
        let mut defect = 0.0_f64;
        let conv: Vec<&MinimaxRow> = self.rows.iter().filter(|r| r.converged).collect();
        for w in conv.windows(2) {
            defect = defect.max(w[0].c_omega - w[1].c_omega);
        }
        defect
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,c_omega,converged,T_star,residual\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:.12e},{:.12e},{},{:.12e},{:.6e}\n",
                r.k, r.c_omega, r.converged, r.t_star, r.residual
            ));
        }
        out
    }
}

/// Run the mountain pass over an ascending energy grid with warm-started
/// strings; failures at individual energies are flagged, never hidden.
pub fn struwe_scan(
    model: &SurfaceModel,
    q0: &BoundarySpec,
    q1: &BoundarySpec,
    anchor: &OmegaAnchor,
    k_grid: &[f64],
    cfg: &StringConfig,
) -> Result<MinimaxCurve, PathError> {
    let mut rows = Vec::with_capacity(k_grid.len());
    let mut warm: Option<StringState> = None;
    let mut prev: Option<(f64, f64)> = None; // (k, c_omega) of last converged row
    for &k in k_grid {
        let (report, state) = mountain_pass(model, q0, q1, anchor, k, cfg, warm.as_ref())?;
        warm = state;
        let converged = report.verdict == SolveVerdict::Converged;
        let t_star = report
            .saddle
            .as_ref()
            .map(|s| s.path.t_total)
            .unwrap_or(f64::NAN);
        let residual = report.saddle_grad_norm;
        let t_bounded = match (converged, prev) {
            (true, Some((k_prev, c_prev))) => {
                let slope = (report.minimax_value - c_prev) / (k - k_prev);
                t_star <= slope + 2.0 + 1e-6
            }
            _ => true,
        };
        if converged {
            prev = Some((k, report.minimax_value));
        }
        rows.push(MinimaxRow {
            k,
            c_omega: report.minimax_value,
            converged,
            t_star,
            residual,
            t_bounded,
        });
    }
    Ok(MinimaxCurve { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::PsiProfile;
    use crate::pathspace::CurveKind;
    use approx::assert_relative_eq;

    fn kinetic_torus() -> SurfaceModel {
        SurfaceModel::torus_mechanical(0.0).unwrap()
    }

    fn torus_magnetic() -> SurfaceModel {
        SurfaceModel::torus_magnetic(PsiProfile::default()).unwrap()
    }

    #[test]
    fn kinetic_minimizer_matches_geodesic_action() {
        let model = kinetic_torus();
        let q0 = BoundarySpec::Point(Vec2::new(0.0, 0.0));
        let q1 = BoundarySpec::Point(Vec2::new(0.3, 0.4));
        let k = 0.5;
        let cfg = MinimizeConfig {
            n_segments: 32,
            max_iters: 20_000,
            ..Default::default()
        };
        // deliberately bad initial time and a bent seed
        let mut init = straight_seed(&model, &q0, &q1, None, None, [0, 0], k, 32).unwrap();
        init.t_total = 2.0;
        for (j, p) in init.interior.iter_mut().enumerate() {
            p.y += 0.05 * (std::f64::consts::PI * (j + 1) as f64 / 32.0).sin();
        }
        let rep = minimize_action(&model, &q0, &q1, k, &init, &cfg).unwrap();
        assert_eq!(rep.verdict, SolveVerdict::Converged);
        let d = 0.5;
        assert_relative_eq!(rep.action.action, d * (2.0 * k).sqrt(), epsilon = 1e-6);
        assert_relative_eq!(rep.path.t_total, d / (2.0 * k).sqrt(), epsilon = 1e-4);
        assert_eq!(rep.bound_violations, 0);
    }

    #[test]
    fn descent_is_strictly_monotone_in_trace() {
        let model = torus_magnetic();
        let q0 = BoundarySpec::Point(Vec2::new(0.5, 0.0));
        let q1 = BoundarySpec::Curve(CurveKind::HorizontalCircle { y: 0.5 });
        let cfg = MinimizeConfig {
            n_segments: 32,
            max_iters: 3000,
            ..Default::default()
        };
        let init = straight_seed(&model, &q0, &q1, None, Some(0.5), [0, 0], 0.75, 32).unwrap();
        let rep = minimize_action(&model, &q0, &q1, 0.75, &init, &cfg).unwrap();
        for w in rep.trace.windows(2) {
            assert!(
                w[1].action <= w[0].action + 1e-12,
                "action increased along the descent"
            );
        }
    }

    #[test]
    fn supercritical_minimizers_in_three_components() {
        let model = torus_magnetic();
        let q0 = BoundarySpec::Point(Vec2::new(0.5, 0.0));
        let q1 = BoundarySpec::Curve(CurveKind::HorizontalCircle { y: 0.5 });
        let k = 0.75;
        let cfg = MinimizeConfig {
            n_segments: 64,
            max_iters: 30_000,
            grad_tol: 1e-7,
            ..Default::default()
        };
        let mut labels = Vec::new();
        for w in [-1i64, 0, 1] {
            let init = straight_seed(&model, &q0, &q1, None, Some(0.5), [0, w], k, 64).unwrap();
            let rep = minimize_action(&model, &q0, &q1, k, &init, &cfg).unwrap();
            assert_eq!(rep.verdict, SolveVerdict::Converged, "winding {w}");
            let res = rep.residuals.unwrap();
            assert!(res.conormal_1 <= 1e-4, "conormal {}", res.conormal_1);
            assert!(res.energy_mismatch.abs() <= 1e-5);
            labels.push(rep.component.unwrap());
        }
        assert_ne!(labels[0], labels[1]);
        assert_ne!(labels[1], labels[2]);
    }

    #[test]
    fn subcritical_connection_does_not_converge() {
        // below the obstruction level no conormal orbit exists; the descent
        // must either run out of iterations or collapse, never converge
        let model = torus_magnetic();
        let q0 = BoundarySpec::Point(Vec2::new(0.5, 0.0));
        let q1 = BoundarySpec::Curve(CurveKind::HorizontalCircle { y: 0.5 });
        let k = 0.3;
        let cfg = MinimizeConfig {
            n_segments: 32,
            max_iters: 4000,
            ..Default::default()
        };
        for w in [0i64, -1] {
            let init = straight_seed(&model, &q0, &q1, None, Some(0.5), [0, w], k, 32).unwrap();
            let rep = minimize_action(&model, &q0, &q1, k, &init, &cfg).unwrap();
            if rep.verdict == SolveVerdict::Converged {
                // a converged point must not satisfy the conormal condition
                let res = rep.residuals.unwrap();
                assert!(
                    res.conormal_1 > 1e-3,
                    "unexpected conormal orbit below the obstruction level"
                );
            }
        }
    }

    #[test]
    fn loop_minimization_recovers_negative_witness() {
        let model = torus_magnetic();
        let k = 0.45;
        let lp = LoopPath::straight(model.chart(), Vec2::new(0.0, 0.45), [-1, 0], 40, 1.3)
            .unwrap();
        let cfg = MinimizeConfig {
            n_segments: 40,
            max_iters: 8000,
            ..Default::default()
        };
        let rep = minimize_loop(&model, k, &lp, &cfg).unwrap();
        // the optimal horizontal loop action is sqrt(2k) - 1 at the peak row
        assert!(rep.action.action <= k - 0.5 + 1e-6, "{}", rep.action.action);
        assert!(rep.action.action >= (2.0 * k).sqrt() - 1.0 - 1e-6);
        assert_eq!(rep.loop_path.winding(model.chart()), [-1, 0]);
    }

    #[test]
    fn collapse_detected_for_contractible_loop_above_cu() {
        let model = torus_magnetic();
        let k = 0.2; // above the contractible threshold: no negative loops
        let circle: Vec<Vec2> = (0..32)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / 32.0;
                Vec2::new(0.5 + 0.1 * t.cos(), 0.15 + 0.1 * t.sin())
            })
            .collect();
        let lp = LoopPath::new(circle, 0.8).unwrap();
        let cfg = MinimizeConfig {
            n_segments: 32,
            max_iters: 20_000,
            ..Default::default()
        };
        let rep = minimize_loop(&model, k, &lp, &cfg).unwrap();
        assert!(
            rep.action.action >= -1e-9,
            "contractible loop action must stay non-negative, got {}",
            rep.action.action
        );
    }

    #[test]
    fn mountain_pass_not_applicable_for_orthogonal_kinetic_circles() {
        let model = kinetic_torus();
        let q0 = BoundarySpec::Curve(CurveKind::HorizontalCircle { y: 0.25 });
        let q1 = BoundarySpec::Curve(CurveKind::VerticalCircle { x: 0.25 });
        let anchor = OmegaAnchor {
            point: Vec2::new(0.25, 0.25),
            s0: 0.25,
            s1: 0.25,
            epsilon: 0.1,
        };
        let cfg = StringConfig {
            beads: 8,
            n_segments: 24,
            outer_iters: 50,
            head_search: MinimizeConfig {
                n_segments: 24,
                max_iters: 400,
                multistart: 4,
                ..Default::default()
            },
            ..Default::default()
        };
        let (rep, _) = mountain_pass(&model, &q0, &q1, &anchor, 0.4, &cfg, None).unwrap();
        assert_eq!(rep.verdict, SolveVerdict::NotApplicable);
    }
}
