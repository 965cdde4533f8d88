//! Critical energy values: the obstruction level of the conormal bundles,
//! the zero-section maximum e0, loop-action probes, a grid estimator for the
//! Hamiltonian sup-inf characterization on torus covers, certified brackets,
//! the nonnegativity thresholds of path components, isolating thresholds of
//! intersection components, and the chain-of-inequalities audit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::CriticalError;
use crate::geom::{ChartKind, SymMat2, Vec2};
use crate::models::SurfaceModel;
use crate::pathspace::{
    loop_action, BoundarySpec, CosetLabel, CurveKind, DiscretePath, LoopPath,
};
use crate::solvers::{
    minimize_action, minimize_loop, straight_seed, MinimizeConfig, SolveVerdict,
};

/// Tolerance slack on bracket and chain comparisons.
const CHAIN_TOL: f64 = 1e-6;

// ---------------------------------------------------------------------------
// integer winding lattices
// ---------------------------------------------------------------------------

/// Sublattice of Z^2 generated by boundary winding vectors, with canonical
/// coset representatives used as component labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeClass {
    /// Reduced basis rows: either empty, [g], or [g, [0, d]] in echelon form.
    basis: Vec<[i64; 2]>,
}

fn floor_div(a: i64, b: i64) -> i64 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

impl LatticeClass {
    pub fn new(generators: Vec<[i64; 2]>) -> Self {
        let mut rows: Vec<[i64; 2]> = generators.into_iter().filter(|g| *g != [0, 0]).collect();
        // echelon reduction over the integers (column 1 pivot, then column 2)
        let mut basis: Vec<[i64; 2]> = Vec::new();
        // reduce first components to a single pivot row by gcd steps
        loop {
            rows.retain(|r| *r != [0, 0]);
            let with_x: Vec<usize> = (0..rows.len()).filter(|&i| rows[i][0] != 0).collect();
            if with_x.len() <= 1 {
                break;
            }
            // subtract the row of smallest |x| from another to shrink
            let &imin = with_x
                .iter()
                .min_by_key(|&&i| rows[i][0].abs())
                .expect("nonempty");
            let other = *with_x.iter().find(|&&i| i != imin).expect("two rows");
            let q = floor_div(rows[other][0], rows[imin][0]);
            rows[other][0] -= q * rows[imin][0];
            rows[other][1] -= q * rows[imin][1];
        }
        if let Some(i) = (0..rows.len()).find(|&i| rows[i][0] != 0) {
            let mut pivot = rows.remove(i);
            if pivot[0] < 0 {
                pivot = [-pivot[0], -pivot[1]];
            }
            basis.push(pivot);
        }
        // remaining rows have x = 0: gcd of y entries
        let mut d = 0i64;
        for r in rows {
            d = gcd(d, r[1].abs());
        }
        if d != 0 {
            basis.push([0, d]);
            // normalize the first row's y entry into [0, d)
            if basis.len() == 2 {
                let m = floor_div(basis[0][1], d);
                basis[0][1] -= m * d;
            }
        }
        LatticeClass { basis }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[[i64; 2]] {
        &self.basis
    }

    /// Canonical representative of w modulo the lattice.
    pub fn reduce(&self, mut w: [i64; 2]) -> [i64; 2] {
        for row in &self.basis {
            if row[0] != 0 {
                let m = floor_div(w[0], row[0]);
                w[0] -= m * row[0];
                w[1] -= m * row[1];
            } else if row[1] != 0 {
                let m = floor_div(w[1], row[1]);
                w[1] -= m * row[1];
            }
        }
        w
    }

    /// Whether w lies in the lattice.
    pub fn contains(&self, w: [i64; 2]) -> bool {
        self.reduce(w) == [0, 0]
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

// ---------------------------------------------------------------------------
// obstruction level and zero-section maximum
// ---------------------------------------------------------------------------

/// Contribution of one boundary submanifold to the obstruction level:
/// min over the conormal bundle of the Hamiltonian. For a point the
/// minimum is E(q, 0); for a curve it is 1/2 (theta . t)^2 / |t|^2_g + V.
fn boundary_obstruction(model: &SurfaceModel, spec: &BoundarySpec, samples: usize) -> f64 {
    match spec {
        BoundarySpec::Point(q) => model.rest_energy(*q),
        BoundarySpec::Curve(c) => {
            let f = |s: f64| -> f64 {
                let q = c.at(s);
                let t = c.tangent(s);
                let g = model.metric(q);
                let theta = model.theta_at(q).map(|t| t.theta).unwrap_or(Vec2::ZERO);
                let tt = g.quad(t).max(1e-300);
                0.5 * theta.dot(t) * theta.dot(t) / tt + model.rest_energy(q)
            };
            let mut best = (f64::INFINITY, 0.0);
            for i in 0..samples {
                let s = i as f64 / samples as f64;
                let v = f(s);
                if v < best.0 {
                    best = (v, s);
                }
            }
            // golden-section refinement around the best sample
            let (mut lo, mut hi) = (best.1 - 1.0 / samples as f64, best.1 + 1.0 / samples as f64);
            let phi = 0.5 * (3.0 - 5.0_f64.sqrt());
            for _ in 0..60 {
                let m1 = lo + phi * (hi - lo);
                let m2 = hi - phi * (hi - lo);
                if f(m1) <= f(m2) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            f(0.5 * (lo + hi)).min(best.0)
        }
    }
}

/// Least energy at which both conormal bundles meet the level set:
/// max over the two boundaries of the minimal conormal Hamiltonian.
pub fn k_obstruction(model: &SurfaceModel, q0: &BoundarySpec, q1: &BoundarySpec) -> f64 {
    let a = boundary_obstruction(model, q0, 1024);
    let b = boundary_obstruction(model, q1, 1024);
    a.max(b)
}

/// Maximum of the energy on the zero section, by dense grid with local
/// refinement.
pub fn e0(model: &SurfaceModel) -> f64 {
    let mut best_val = f64::NEG_INFINITY;
    let mut best_q = Vec2::ZERO;
    for q in model.region_grid(512) {
        let v = model.rest_energy(q);
        if v > best_val {
            best_val = v;
            best_q = q;
        }
    }
    // shrinking local grids around the best cell
    let mut radius = 1.0 / 512.0;
    for _ in 0..24 {
        let mut improved = false;
        for i in -2i32..=2 {
            for j in -2i32..=2 {
                let q = Vec2::new(
                    best_q.x + radius * i as f64 / 2.0,
                    best_q.y + radius * j as f64 / 2.0,
                );
                if !model.chart().contains(model.chart().canonical(q)) {
                    continue;
                }
                let v = model.rest_energy(q);
                if v > best_val {
                    best_val = v;
                    best_q = q;
                    improved = true;
                }
            }
        }
        if !improved {
            radius *= 0.5;
        }
    }
    best_val
}

// ---------------------------------------------------------------------------
// loop probes
// ---------------------------------------------------------------------------

/// Loop class probed for negative action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopClass {
    Contractible,
    Winding([i64; 2]),
}

impl LoopClass {
    fn winding(&self) -> [i64; 2] {
        match self {
            LoopClass::Contractible => [0, 0],
            LoopClass::Winding(w) => *w,
        }
    }
}

/// The rectangular concatenation family: n turns westward along the bump
/// peak row, a drop to the zero row, n turns eastward, and a climb back,
/// all at constant speed sqrt(2k). Contractible by construction; its exact
/// action is n (2 sqrt(2k) - 1) + sqrt(2k) on the torus magnetic model.
pub fn rect_loop(y_peak: f64, y_zero: f64, n: usize, k: f64) -> LoopPath {
    let dy = (y_peak - y_zero).abs();
    let spacing = 0.1_f64;
    let m_horiz = (1.0 / spacing).round() as usize;
    let m_vert = ((dy / spacing).round() as usize).max(2);
    let mut nodes = Vec::new();
    // westward turns along the peak row, starting at x = 1 (wrapped to 0)
    for t in 0..n * m_horiz {
        let x = 1.0 - t as f64 / m_horiz as f64;
        nodes.push(Vec2::new(crate::geom::wrap_unit(x), y_peak));
    }
    // down to the zero row at x = 1 - n = 0 (wrapped)
    for t in 0..m_vert {
        let f = t as f64 / m_vert as f64;
        nodes.push(Vec2::new(0.0, y_peak + f * (y_zero - y_peak)));
    }
    // eastward turns along the zero row
    for t in 0..n * m_horiz {
        let x = t as f64 / m_horiz as f64;
        nodes.push(Vec2::new(crate::geom::wrap_unit(x), y_zero));
    }
    // back up at x = 1 (wrapped to 0)
    for t in 0..m_vert {
        let f = t as f64 / m_vert as f64;
        nodes.push(Vec2::new(0.0, y_zero + f * (y_peak - y_zero)));
    }
    let length = 2.0 * n as f64 + 2.0 * dy;
    let t_total = length / (2.0 * k).sqrt();
    LoopPath::new(nodes, t_total).expect("rectangle loop is well-formed")
}

fn loop_seeds(model: &SurfaceModel, class: LoopClass, k: f64, seed: u64) -> Vec<LoopPath> {
    let chart = model.chart();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x517c_c1b7_2722_0a95);
    let speed = (2.0 * k.max(1e-3)).sqrt();
    let mut seeds = Vec::new();
    match class {
        LoopClass::Winding(w) => {
            let wf = Vec2::new(w[0] as f64, w[1] as f64);
            let m = ((4.0 * wf.norm()).ceil() as usize).max(24);
            for i in 0..12 {
                let f = i as f64 / 12.0;
                let base = if w[0] != 0 {
                    Vec2::new(0.0, f)
                } else {
                    Vec2::new(f, 0.0)
                };
                let t = (wf.norm() / speed).max(0.05);
                if let Ok(lp) = LoopPath::straight(chart, base, w, m, t) {
                    seeds.push(lp);
                }
            }
        }
        LoopClass::Contractible => {
            if chart.is_torus() {
                let (y_peak, y_zero) = match model.psi() {
                    Some(p) => (p.peak(), 0.0),
                    None => (0.5, 0.0),
                };
                for n in [1usize, 2, 3, 4, 6, 8, 12, 16, 25] {
                    seeds.push(rect_loop(y_peak, y_zero, n, k.max(1e-3)));
                }
            }
            // round loops at random centers
            for _ in 0..8 {
                let c = Vec2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
                let r = rng.gen_range(0.05..0.2);
                let m = 32;
                let nodes: Vec<Vec2> = (0..m)
                    .map(|i| {
                        let t = std::f64::consts::TAU * i as f64 / m as f64;
                        chart.canonical(c + Vec2::new(r * t.cos(), r * t.sin()))
                    })
                    .collect();
                let t_total = (std::f64::consts::TAU * r / speed).max(0.05);
                if let Ok(lp) = LoopPath::new(nodes, t_total) {
                    seeds.push(lp);
                }
            }
        }
    }
    seeds
}

#[derive(Debug, Clone)]
pub struct LoopProbeReport {
    /// Best (lowest) loop action found in the class.
    pub best_action: f64,
    pub witness: Option<LoopPath>,
    pub starts: usize,
    pub negatives: usize,
}

/// Search a loop class for negative free-time action at energy k.
/// A negative result certifies that k lies below the corresponding critical
/// value; a non-negative result is only evidence.
pub fn loop_probe(
    model: &SurfaceModel,
    class: LoopClass,
    k: f64,
    cfg: &MinimizeConfig,
) -> Result<LoopProbeReport, CriticalError> {
    let seeds = loop_seeds(model, class, k, cfg.seed);
    let starts = seeds.len();
    // raw seed actions often certify negativity without optimization
    let mut best: Option<(f64, LoopPath)> = None;
    for s in &seeds {
        if let Ok(v) = loop_action(model, s, k) {
            if best.as_ref().is_none_or(|(b, _)| v.action < *b) {
                best = Some((v.action, s.clone()));
            }
        }
    }
    let quick_negative = best.as_ref().is_some_and(|(a, _)| *a < -1e-9);
    if !quick_negative {
        let reports: Vec<Option<(f64, LoopPath)>> = seeds
            .par_iter()
            .map(|s| {
                minimize_loop(model, k, s, cfg)
                    .ok()
                    .filter(|r| {
                        r.loop_path.winding(model.chart()) == class.winding()
                            && r.verdict != SolveVerdict::DomainExit
                    })
                    .map(|r| (r.action.action, r.loop_path))
            })
            .collect();
        for r in reports.into_iter().flatten() {
            if best.as_ref().is_none_or(|(b, _)| r.0 < *b) {
                best = Some(r);
            }
        }
    }
    let (best_action, witness) = match best {
        Some((a, w)) => (a, Some(w)),
        None => (f64::INFINITY, None),
    };
    Ok(LoopProbeReport {
        best_action,
        witness,
        starts,
        negatives: usize::from(best_action < -1e-9),
    })
}

// ---------------------------------------------------------------------------
// Hamiltonian sup upper bound on torus covers
// ---------------------------------------------------------------------------

/// Which cover the test functions live on.
#[derive(Debug, Clone)]
pub enum CoverKind {
    /// The surface itself: doubly periodic test functions.
    Base,
    /// The abelian cover: a free linear part plus a periodic part.
    Abelian,
    /// The cover determined by a winding sublattice: the linear part is
    /// constrained to directions annihilating the lattice.
    Sublattice(LatticeClass),
}

impl CoverKind {
    fn linear_directions(&self) -> Vec<Vec2> {
        match self {
            CoverKind::Base => vec![],
            CoverKind::Abelian => vec![Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)],
            CoverKind::Sublattice(l) => match l.rank() {
                0 => vec![Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)],
                2 => vec![],
                _ => {
                    let g = l.basis()[0];
                    let d = Vec2::new(-(g[1] as f64), g[0] as f64);
                    vec![d * (1.0 / d.norm())]
                }
            },
        }
    }
}

/// Grid-resolution upper bound for inf_u sup_q H(q, du).
#[derive(Debug, Clone)]
pub struct GridUpperBound {
    pub value: f64,
    /// Hard max re-evaluated on a 4x finer grid with the interpolated field.
    pub refined_value: f64,
    pub resolution: usize,
    pub linear: Vec2,
    /// The periodic part of the test function, row-major on the grid.
    pub u: Vec<f64>,
    pub stalled: bool,
}

struct GridField {
    n: usize,
    h: f64,
    theta: Vec<Vec2>,
    g_inv: Vec<SymMat2>,
    potential: Vec<f64>,
}

impl GridField {
    fn build(model: &SurfaceModel, n: usize) -> Self {
        let h = 1.0 / n as f64;
        let mut theta = Vec::with_capacity(n * n);
        let mut g_inv = Vec::with_capacity(n * n);
        let mut potential = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let q = Vec2::new(i as f64 * h, j as f64 * h);
                let jet = model.jet(q);
                theta.push(jet.theta);
                g_inv.push(jet.g.inverse());
                potential.push(jet.potential);
            }
        }
        GridField {
            n,
            h,
            theta,
            g_inv,
            potential,
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    /// Momentum field p = linear + central-difference gradient of u.
    fn momenta(&self, u: &[f64], linear: Vec2) -> Vec<Vec2> {
        let n = self.n;
        let mut p = vec![Vec2::ZERO; n * n];
        for i in 0..n {
            let ip = (i + 1) % n;
            let im = (i + n - 1) % n;
            for j in 0..n {
                let jp = (j + 1) % n;
                let jm = (j + n - 1) % n;
                p[self.idx(i, j)] = Vec2::new(
                    linear.x + (u[self.idx(ip, j)] - u[self.idx(im, j)]) / (2.0 * self.h),
                    linear.y + (u[self.idx(i, jp)] - u[self.idx(i, jm)]) / (2.0 * self.h),
                );
            }
        }
        p
    }

    fn hamiltonians(&self, p: &[Vec2]) -> Vec<f64> {
        (0..self.n * self.n)
            .map(|c| {
                let d = p[c] - self.theta[c];
                0.5 * self.g_inv[c].quad(d) + self.potential[c]
            })
            .collect()
    }
}

fn softmax_objective(h_vals: &[f64], beta: f64) -> (f64, Vec<f64>) {
    let h_max = h_vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = h_vals.iter().map(|h| (beta * (h - h_max)).exp()).collect();
    let z: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= z;
    }
    (h_max + (z / h_vals.len() as f64).ln() / beta, weights)
}

/// Minimize the soft maximum of H(q, du) over grid test functions, with a
/// sharpness schedule, and report the final hard maximum.
pub fn hamiltonian_sup_upper(
    model: &SurfaceModel,
    cover: &CoverKind,
    grid_n: usize,
) -> Result<GridUpperBound, CriticalError> {
    if !model.chart().is_torus() {
        return Err(CriticalError::TorusRequired);
    }
    let field = GridField::build(model, grid_n);
    let lin_dirs = cover.linear_directions();
    let n2 = grid_n * grid_n;
    let mut u = vec![0.0; n2];
    let mut lin_coeff = vec![0.0; lin_dirs.len()];
    let mut stalled = false;

    let eval = |u: &[f64], lc: &[f64]| -> (f64, Vec<f64>, Vec<Vec2>) {
        let mut linear = Vec2::ZERO;
        for (c, d) in lc.iter().zip(&lin_dirs) {
            linear += *d * *c;
        }
        let p = field.momenta(u, linear);
        let h_vals = field.hamiltonians(&p);
        (0.0, h_vals, p)
    };

    for stage in 0..8 {
        let beta = 8.0 * 2f64.powi(stage);
        let mut step = 0.1;
        for _ in 0..160 {
            let (_, h_vals, p) = eval(&u, &lin_coeff);
            let (f, weights) = softmax_objective(&h_vals, beta);
            // dual-metric momentum defect per cell
            let m: Vec<Vec2> = (0..n2)
                .map(|c| field.g_inv[c].mul_vec(p[c] - field.theta[c]))
                .collect();
            // adjoint of the central-difference stencil
            let n = grid_n;
            let mut grad_u = vec![0.0; n2];
            for i in 0..n {
                let ip = (i + 1) % n;
                let im = (i + n - 1) % n;
                for j in 0..n {
                    let jp = (j + 1) % n;
                    let jm = (j + n - 1) % n;
                    let c = field.idx(i, j);
                    grad_u[c] = (weights[field.idx(im, j)] * m[field.idx(im, j)].x
                        - weights[field.idx(ip, j)] * m[field.idx(ip, j)].x
                        + weights[field.idx(i, jm)] * m[field.idx(i, jm)].y
                        - weights[field.idx(i, jp)] * m[field.idx(i, jp)].y)
                        / (2.0 * field.h);
                }
            }
            let grad_lin: Vec<f64> = lin_dirs
                .iter()
                .map(|d| (0..n2).map(|c| weights[c] * m[c].dot(*d)).sum())
                .collect();
            let gnorm = (grad_u.iter().map(|g| g * g).sum::<f64>()
                + grad_lin.iter().map(|g| g * g).sum::<f64>())
            .sqrt();
            if gnorm <= 1e-10 {
                break;
            }
            // backtracking on the softmax value
            let mut accepted = false;
            for _ in 0..30 {
                let u_try: Vec<f64> = u
                    .iter()
                    .zip(&grad_u)
                    .map(|(ui, gi)| ui - step * gi)
                    .collect();
                let lc_try: Vec<f64> = lin_coeff
                    .iter()
                    .zip(&grad_lin)
                    .map(|(ci, gi)| ci - step * gi)
                    .collect();
                let (_, h_try, _) = eval(&u_try, &lc_try);
                let (f_try, _) = softmax_objective(&h_try, beta);
                if f_try < f - 1e-14 {
                    u = u_try;
                    lin_coeff = lc_try;
                    step = (step * 1.5).min(10.0);
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                if stage == 7 {
                    stalled = gnorm > 1e-4;
                }
                break;
            }
        }
    }

    let mut linear = Vec2::ZERO;
    for (c, d) in lin_coeff.iter().zip(&lin_dirs) {
        linear += *d * *c;
    }
    let p = field.momenta(&u, linear);
    let h_vals = field.hamiltonians(&p);
    let value = h_vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    // re-evaluate on a 4x finer grid with a bilinearly interpolated field
    let fine = 4 * grid_n;
    let mut refined_value = f64::NEG_INFINITY;
    for i in 0..fine {
        for j in 0..fine {
            let q = Vec2::new(i as f64 / fine as f64, j as f64 / fine as f64);
            let gx = q.x * grid_n as f64;
            let gy = q.y * grid_n as f64;
            let (i0, j0) = (gx.floor() as usize % grid_n, gy.floor() as usize % grid_n);
            let (i1, j1) = ((i0 + 1) % grid_n, (j0 + 1) % grid_n);
            let (fx, fy) = (gx.fract(), gy.fract());
            let interp = p[field.idx(i0, j0)] * ((1.0 - fx) * (1.0 - fy))
                + p[field.idx(i1, j0)] * (fx * (1.0 - fy))
                + p[field.idx(i0, j1)] * ((1.0 - fx) * fy)
                + p[field.idx(i1, j1)] * (fx * fy);
            let h = model
                .hamiltonian(q, interp)
                .expect("torus points always admissible");
            refined_value = refined_value.max(h);
        }
    }

    Ok(GridUpperBound {
        value,
        refined_value,
        resolution: grid_n,
        linear,
        u,
        stalled,
    })
}

// ---------------------------------------------------------------------------
// certified brackets
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum BracketTarget {
    /// The critical value over all loops.
    ManeC,
    /// The contractible-loop value (equal to the abelian one here, the
    /// fundamental group being abelian).
    ManeCuC0,
    /// The value attached to a pair of boundary submanifolds.
    PairValue(BoundarySpec, BoundarySpec),
}

impl BracketTarget {
    fn name(&self) -> &'static str {
        match self {
            BracketTarget::ManeC => "c",
            BracketTarget::ManeCuC0 => "c_u",
            BracketTarget::PairValue(..) => "c_pair",
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoopWitness {
    pub k: f64,
    pub action: f64,
    pub loop_path: LoopPath,
}

#[derive(Debug, Clone)]
pub struct CriticalBracket {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub lower_witness: Option<LoopWitness>,
    pub upper_witness: Option<GridUpperBound>,
    pub method: String,
    /// False when no negative loop was found anywhere in the interval and
    /// the lower end is just the search floor.
    pub lower_certified: bool,
}

impl CriticalBracket {
    pub fn contains(&self, v: f64) -> bool {
        self.lower - CHAIN_TOL <= v && v <= self.upper + CHAIN_TOL
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn csv_row(&self, lower_file: &str, upper_file: &str) -> String {
        format!(
            "{},{:.12e},{:.12e},{},{},{}",
            self.name, self.lower, self.upper, lower_file, upper_file, self.method
        )
    }
}

#[derive(Debug, Clone)]
pub struct BracketConfig {
    pub grid_n: usize,
    pub tol: f64,
    pub max_bisections: usize,
    pub probe: MinimizeConfig,
}

impl Default for BracketConfig {
    fn default() -> Self {
        BracketConfig {
            grid_n: 64,
            tol: 0.04,
            max_bisections: 12,
            probe: MinimizeConfig {
                n_segments: 32,
                max_iters: 4000,
                grad_tol: 1e-5,
                multistart: 8,
                ..MinimizeConfig::default()
            },
        }
    }
}

fn probe_classes(model: &SurfaceModel, target: &BracketTarget) -> Vec<LoopClass> {
    let _ = model;
    match target {
        BracketTarget::ManeC => vec![
            LoopClass::Winding([-1, 0]),
            LoopClass::Winding([1, 0]),
            LoopClass::Winding([0, 1]),
            LoopClass::Winding([0, -1]),
            LoopClass::Contractible,
        ],
        BracketTarget::ManeCuC0 => vec![LoopClass::Contractible],
        BracketTarget::PairValue(q0, q1) => {
            let mut gens = q0.generators();
            gens.extend(q1.generators());
            let lattice = LatticeClass::new(gens);
            let mut classes = vec![LoopClass::Contractible];
            for g in lattice.basis() {
                classes.push(LoopClass::Winding(*g));
                classes.push(LoopClass::Winding([-g[0], -g[1]]));
            }
            classes
        }
    }
}

fn cover_for(target: &BracketTarget) -> CoverKind {
    match target {
        BracketTarget::ManeC => CoverKind::Base,
        BracketTarget::ManeCuC0 => CoverKind::Abelian,
        BracketTarget::PairValue(q0, q1) => {
            let mut gens = q0.generators();
            gens.extend(q1.generators());
            CoverKind::Sublattice(LatticeClass::new(gens))
        }
    }
}

/// Enclose a critical value: lower bounds from negative-loop witnesses,
/// upper bound from the grid Hamiltonian estimator on the matching cover.
pub fn bracket_critical(
    model: &SurfaceModel,
    target: &BracketTarget,
    interval: (f64, f64),
    cfg: &BracketConfig,
) -> Result<CriticalBracket, CriticalError> {
    let classes = probe_classes(model, target);
    let cover = cover_for(target);
    let upper_witness = hamiltonian_sup_upper(model, &cover, cfg.grid_n)?;
    let upper = upper_witness.value.min(interval.1);

    let probe_at = |k: f64| -> Result<Option<LoopWitness>, CriticalError> {
        for class in &classes {
            let rep = loop_probe(model, *class, k, &cfg.probe)?;
            if rep.best_action < -1e-9 {
                return Ok(Some(LoopWitness {
                    k,
                    action: rep.best_action,
                    loop_path: rep.witness.expect("negative probe carries a witness"),
                }));
            }
        }
        Ok(None)
    };

    let mut lo = interval.0;
    let mut lower_witness: Option<LoopWitness> = None;
    let mut hi_search = upper;
    for _ in 0..cfg.max_bisections {
        if hi_search - lo <= cfg.tol {
            break;
        }
        let mid = 0.5 * (lo + hi_search);
        match probe_at(mid)? {
            Some(w) => {
                lo = mid;
                lower_witness = Some(w);
            }
            None => hi_search = mid,
        }
    }

    // soundness: the stored witness must stay negative when re-evaluated
    // directly through the quadrature at k just above the certified lower end
    if let Some(w) = &lower_witness {
        let v = loop_action(model, &w.loop_path, w.k + 1e-9)
            .map_err(CriticalError::Path)?
            .action;
        if v >= 0.0 {
            return Err(CriticalError::IntervalDoesNotBracket {
                lo: interval.0,
                hi: interval.1,
                detail: format!("witness action {v} not negative on re-evaluation"),
            });
        }
    }

    let lower_certified = lower_witness.is_some();
    let lower = lower_witness.as_ref().map(|w| w.k).unwrap_or(interval.0);
    if lower > upper + CHAIN_TOL {
        return Err(CriticalError::IntervalDoesNotBracket {
            lo: interval.0,
            hi: interval.1,
            detail: format!("certified lower {lower} exceeds upper {upper}"),
        });
    }
    Ok(CriticalBracket {
        name: target.name().to_string(),
        lower,
        upper,
        lower_witness,
        upper_witness: Some(upper_witness),
        method: format!("loop-probe lower + {}^2-grid dual upper", cfg.grid_n),
        lower_certified,
    })
}

// ---------------------------------------------------------------------------
// component nonnegativity threshold
// ---------------------------------------------------------------------------

/// Enclose the least energy making the action nonnegative on one path
/// component: negative minimizers certify the lower end; the upper end is
/// soft evidence clamped by the analytic bound e0 + |theta|_inf^2 / (4a).
pub fn k_n_estimate(
    model: &SurfaceModel,
    q0: &BoundarySpec,
    q1: &BoundarySpec,
    component: CosetLabel,
    interval: (f64, f64),
    cfg: &BracketConfig,
) -> Result<KnBracket, CriticalError> {
    let chart = model.chart();
    if !chart.is_torus() {
        return Err(CriticalError::TorusRequired);
    }
    let base = straight_seed(model, q0, q1, Some(0.0), Some(0.0), [0, 0], 0.5, cfg.probe.n_segments)
        .map_err(CriticalError::Path)?;
    let base_label = crate::pathspace::classify_component(chart, q0, q1, &base)
        .map_err(CriticalError::Path)?;
    let extra = [
        component.0[0] - base_label.0[0],
        component.0[1] - base_label.0[1],
    ];

    let probe_at = |k: f64| -> Result<Option<(DiscretePath, f64)>, CriticalError> {
        // endpoint sweeps of straight chords with the component-correcting
        // winding; raw actions first, then a short descent on the best seeds
        let mut seeds = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                if let Ok(p) = straight_seed(
                    model,
                    q0,
                    q1,
                    Some(i as f64 / 10.0),
                    Some(j as f64 / 10.0),
                    extra,
                    k,
                    cfg.probe.n_segments,
                ) {
                    seeds.push(p);
                }
            }
        }
        let mut ranked: Vec<(f64, DiscretePath)> = seeds
            .into_iter()
            .filter_map(|p| {
                crate::pathspace::discrete_action(model, q0, q1, &p, k)
                    .ok()
                    .map(|v| (v.action, p))
            })
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some((a, p)) = ranked.first() {
            if *a < -1e-9 {
                return Ok(Some((p.clone(), *a)));
            }
        }
        let candidates: Vec<DiscretePath> = ranked
            .into_iter()
            .take(cfg.probe.multistart)
            .map(|(_, p)| p)
            .collect();
        let found: Vec<Option<(DiscretePath, f64)>> = candidates
            .par_iter()
            .map(|p| {
                minimize_action(model, q0, q1, k, p, &cfg.probe)
                    .ok()
                    .filter(|r| {
                        r.action.action < -1e-9
                            && crate::pathspace::classify_component(chart, q0, q1, &r.path).ok()
                                == Some(component)
                    })
                    .map(|r| (r.path.clone(), r.action.action))
            })
            .collect();
        Ok(found.into_iter().flatten().next())
    };

    let a = model.quadratic_bounds().a;
    let analytic_upper = e0(model) + model.theta_sup_norm(256).powi(2) / (4.0 * a);
    let mut lo = interval.0;
    let mut hi_search = interval.1.min(analytic_upper);
    let mut witness: Option<(DiscretePath, f64, f64)> = None;
    for _ in 0..cfg.max_bisections {
        if hi_search - lo <= cfg.tol {
            break;
        }
        let mid = 0.5 * (lo + hi_search);
        match probe_at(mid)? {
            Some((p, a)) => {
                lo = mid;
                witness = Some((p, a, mid));
            }
            None => hi_search = mid,
        }
    }
    let lower_certified = witness.is_some();
    let lower = witness.as_ref().map(|w| w.2).unwrap_or(interval.0);
    Ok(KnBracket {
        lower,
        upper: analytic_upper.min(interval.1),
        soft_upper: hi_search,
        analytic_upper,
        witness,
        lower_certified,
    })
}

#[derive(Debug, Clone)]
pub struct KnBracket {
    pub lower: f64,
    pub upper: f64,
    /// Largest energy at which the probe stopped finding negative paths.
    pub soft_upper: f64,
    /// e0 + |theta|_inf^2/(4a).
    pub analytic_upper: f64,
    pub witness: Option<(DiscretePath, f64, f64)>,
    pub lower_certified: bool,
}

// ---------------------------------------------------------------------------
// intersections and isolating thresholds
// ---------------------------------------------------------------------------

/// Intersection points of two boundary submanifolds, by sign-change
/// bracketing on a dense parameter grid plus bisection.
pub fn curve_intersections(
    chart: ChartKind,
    q0: &BoundarySpec,
    q1: &BoundarySpec,
) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = Vec::new();
    let mut push_unique = |p: Vec2| {
        if !pts.iter().any(|q| chart.distance(*q, p) < 1e-6) {
            pts.push(p);
        }
    };
    match (q0, q1) {
        (BoundarySpec::Point(a), BoundarySpec::Point(b)) => {
            if chart.distance(*a, *b) < 1e-8 {
                push_unique(*a);
            }
        }
        (BoundarySpec::Point(a), BoundarySpec::Curve(c))
        | (BoundarySpec::Curve(c), BoundarySpec::Point(a)) => {
            if c.level(chart, *a).abs() < 1e-8 {
                push_unique(*a);
            }
        }
        (BoundarySpec::Curve(c0), BoundarySpec::Curve(c1)) => {
            let samples = 2048;
            let f = |s: f64| c1.level(chart, c0.at(s));
            let mut prev = f(0.0);
            for i in 1..=samples {
                let s = i as f64 / samples as f64;
                let cur = f(s);
                if prev == 0.0 {
                    push_unique(c0.at((i - 1) as f64 / samples as f64));
                } else if prev * cur < 0.0 {
                    // bisect the sign change
                    let (mut a, mut b) = ((i - 1) as f64 / samples as f64, s);
                    let mut fa = prev;
                    for _ in 0..60 {
                        let m = 0.5 * (a + b);
                        let fm = f(m);
                        if fa * fm <= 0.0 {
                            b = m;
                        } else {
                            a = m;
                            fa = fm;
                        }
                    }
                    push_unique(c0.at(0.5 * (a + b)));
                }
                prev = cur;
            }
        }
    }
    pts
}

/// Curve parameter of the point nearest to `target`, refined to full
/// precision by golden-section around the best grid sample.
pub fn nearest_param(chart: ChartKind, c: &CurveKind, target: Vec2) -> f64 {
    let f = |s: f64| chart.distance(c.at(s), target);
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..8192 {
        let s = i as f64 / 8192.0;
        let d = f(s);
        if d < best.0 {
            best = (d, s);
        }
    }
    let (mut lo, mut hi) = (best.1 - 1.0 / 8192.0, best.1 + 1.0 / 8192.0);
    let phi = 0.5 * (3.0 - 5.0_f64.sqrt());
    for _ in 0..80 {
        let m1 = lo + phi * (hi - lo);
        let m2 = hi - phi * (hi - lo);
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    crate::geom::wrap_unit(0.5 * (lo + hi))
}

/// One isolating family: a subset of the intersection components.
#[derive(Debug, Clone)]
pub struct IsolatingFamily {
    pub points: Vec<Vec2>,
}

#[derive(Debug, Clone)]
pub struct KOmegaReport {
    /// min over families of k_nu.
    pub k_omega: f64,
    /// Per family: (zero-section/one-form candidate, clamped k_nu).
    pub per_family: Vec<(f64, f64)>,
    pub c_pair_upper: f64,
    pub intersections: Vec<Vec2>,
}

/// Isolating threshold: for each family, min of the pair value and
/// max over the family of E(q,0) + |theta_q|^2 / (4a); the reported value
/// is the minimum over the supplied families (all components if none).
pub fn k_omega(
    model: &SurfaceModel,
    q0: &BoundarySpec,
    q1: &BoundarySpec,
    families: &[IsolatingFamily],
    c_pair_upper: f64,
) -> Result<KOmegaReport, CriticalError> {
    let intersections = curve_intersections(model.chart(), q0, q1);
    if intersections.is_empty() {
        return Err(CriticalError::EmptyIntersection);
    }
    let a = model.quadratic_bounds().a;
    let all = IsolatingFamily {
        points: intersections.clone(),
    };
    let list: Vec<&IsolatingFamily> = if families.is_empty() {
        vec![&all]
    } else {
        families.iter().collect()
    };
    let mut per_family = Vec::with_capacity(list.len());
    let mut k_omega = f64::INFINITY;
    for fam in list {
        let mut candidate = f64::NEG_INFINITY;
        for p in &fam.points {
            let e = model.rest_energy(*p);
            let th = model
                .theta_at(*p)
                .map(|t| t.dual_norm)
                .unwrap_or(0.0);
            candidate = candidate.max(e + th * th / (4.0 * a));
        }
        let k_nu = c_pair_upper.min(candidate);
        per_family.push((candidate, k_nu));
        k_omega = k_omega.min(k_nu);
    }
    Ok(KOmegaReport {
        k_omega,
        per_family,
        c_pair_upper,
        intersections,
    })
}

// ---------------------------------------------------------------------------
// chain audit
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ChainLink {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct ChainAuditReport {
    pub e0: f64,
    pub cu: (f64, f64),
    pub c_pair: Option<(f64, f64)>,
    pub c: (f64, f64),
    pub k0: (f64, f64),
    pub links: Vec<ChainLink>,
}

/// Verify the chain of critical values on bracket enclosures: the lower end
/// of each value must not exceed the upper end of the next.
pub fn chain_audit_values(
    e0: f64,
    cu: (f64, f64),
    c_pair: Option<(f64, f64)>,
    c: (f64, f64),
    k0_upper: f64,
) -> Result<ChainAuditReport, CriticalError> {
    let mut links = Vec::new();
    let push = |name: &str, lhs: f64, rhs: f64, links: &mut Vec<ChainLink>| {
        links.push(ChainLink {
            name: name.to_string(),
            lhs,
            rhs,
            ok: lhs <= rhs + CHAIN_TOL,
        });
    };
    push("e0 <= c_u", e0, cu.1, &mut links);
    match c_pair {
        Some(cp) => {
            push("c_u <= c_pair", cu.0, cp.1, &mut links);
            push("c_pair <= c", cp.0, c.1, &mut links);
        }
        None => push("c_u <= c", cu.0, c.1, &mut links),
    }
    push("c <= k0", c.0, k0_upper, &mut links);
    let report = ChainAuditReport {
        e0,
        cu,
        c_pair,
        c,
        k0: (c.0, k0_upper),
        links,
    };
    if let Some(bad) = report.links.iter().find(|l| !l.ok) {
        return Err(CriticalError::ChainViolation(format!(
            "{}: {:.6} > {:.6}",
            bad.name, bad.lhs, bad.rhs
        )));
    }
    Ok(report)
}

/// Compute all brackets on a torus model and audit the chain.
pub fn chain_audit(
    model: &SurfaceModel,
    pair: Option<(&BoundarySpec, &BoundarySpec)>,
    cfg: &BracketConfig,
) -> Result<ChainAuditReport, CriticalError> {
    let e0_v = e0(model);
    let span = {
        let a = model.quadratic_bounds().a;
        let top = e0_v + model.theta_sup_norm(256).powi(2) / (4.0 * a);
        (0.0, top + 0.5)
    };
    let cu = bracket_critical(model, &BracketTarget::ManeCuC0, span, cfg)?;
    let c = bracket_critical(model, &BracketTarget::ManeC, span, cfg)?;
    let c_pair = match pair {
        Some((q0, q1)) => Some(bracket_critical(
            model,
            &BracketTarget::PairValue(*q0, *q1),
            span,
            cfg,
        )?),
        None => None,
    };
    let a = model.quadratic_bounds().a;
    let k0_upper = e0_v + model.theta_sup_norm(256).powi(2) / (4.0 * a);
    chain_audit_values(
        e0_v,
        (cu.lower, cu.upper),
        c_pair.as_ref().map(|b| (b.lower, b.upper)),
        (c.lower, c.upper),
        k0_upper,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::PsiProfile;
    use approx::assert_relative_eq;

    fn torus_magnetic() -> SurfaceModel {
        SurfaceModel::torus_magnetic(PsiProfile::default()).unwrap()
    }

    #[test]
    fn lattice_reduction_basics() {
        let l = LatticeClass::new(vec![[1, 0]]);
        assert_eq!(l.rank(), 1);
        assert_eq!(l.reduce([3, 2]), [0, 2]);
        assert_eq!(l.reduce([-4, -1]), [0, -1]);
        assert!(l.contains([7, 0]));
        assert!(!l.contains([0, 1]));

        let full = LatticeClass::new(vec![[1, 0], [0, 1]]);
        assert_eq!(full.rank(), 2);
        assert_eq!(full.reduce([5, -3]), [0, 0]);

        let empty = LatticeClass::new(vec![]);
        assert_eq!(empty.rank(), 0);
        assert_eq!(empty.reduce([5, -3]), [5, -3]);

        let skew = LatticeClass::new(vec![[2, 3]]);
        assert_eq!(skew.reduce([2, 3]), [0, 0]);
        assert_eq!(skew.reduce([4, 7]), [0, 1]);
        assert!(skew.contains([-6, -9]));

        // generated lattice from redundant generators
        let l2 = LatticeClass::new(vec![[2, 0], [3, 0]]);
        assert_eq!(l2.rank(), 1);
        assert!(l2.contains([1, 0]));
    }

    #[test]
    fn obstruction_level_fixtures() {
        let model = torus_magnetic();
        // point + peak-row circle: the circle contributes 1/2
        let q0 = BoundarySpec::Point(Vec2::new(0.5, 0.0));
        let q1 = BoundarySpec::Curve(CurveKind::HorizontalCircle { y: 0.5 });
        let k = k_obstruction(&model, &q0, &q1);
        assert_relative_eq!(k, 0.5, epsilon = 1e-4);
        // theta-free model: zero for any pair of curves
        let kinetic = SurfaceModel::torus_mechanical(0.0).unwrap();
        let k = k_obstruction(&kinetic, &q0, &q1);
        assert!(k.abs() <= 1e-12);
        // vertical circle: the one-form is orthogonal to the tangent
        let qv = BoundarySpec::Curve(CurveKind::VerticalCircle { x: 0.3 });
        let k = boundary_obstruction(&model, &qv, 1024);
        assert!(k.abs() <= 1e-12);
    }

    #[test]
    fn e0_fixtures() {
        assert_eq!(e0(&torus_magnetic()), 0.0);
        let mech = SurfaceModel::torus_mechanical(0.7).unwrap();
        assert_relative_eq!(e0(&mech), 0.7, epsilon = 1e-9);
    }

    #[test]
    fn rect_loop_matches_closed_form() {
        let model = torus_magnetic();
        for k in [0.045, 0.08, 0.125] {
            for n in [1usize, 2, 5, 10] {
                let lp = rect_loop(0.5, 0.0, n, k);
                let v = loop_action(&model, &lp, k).unwrap();
                let expected = n as f64 * (2.0 * (2.0 * k).sqrt() - 1.0) + (2.0 * k).sqrt();
                assert_relative_eq!(v.action, expected, epsilon = 1e-10);
                assert_eq!(lp.winding(model.chart()), [0, 0]);
            }
        }
    }

    #[test]
    fn loop_probe_finds_negative_horizontal_class() {
        let model = torus_magnetic();
        let cfg = BracketConfig::default().probe;
        let rep = loop_probe(&model, LoopClass::Winding([-1, 0]), 0.45, &cfg).unwrap();
        assert!(rep.best_action <= 0.45 - 0.5 + 1e-9, "{}", rep.best_action);
    }

    #[test]
    fn contractible_probe_negative_below_threshold() {
        let model = torus_magnetic();
        let cfg = BracketConfig::default().probe;
        let rep = loop_probe(&model, LoopClass::Contractible, 0.1, &cfg).unwrap();
        // the 5-turn rectangle already certifies about -0.0807
        assert!(rep.best_action <= -0.08, "{}", rep.best_action);
        // above the threshold nothing negative exists
        let rep = loop_probe(&model, LoopClass::Contractible, 0.2, &cfg).unwrap();
        assert!(rep.best_action >= -1e-9, "{}", rep.best_action);
    }

    #[test]
    fn dual_grid_upper_bounds() {
        let model = torus_magnetic();
        let base = hamiltonian_sup_upper(&model, &CoverKind::Base, 64).unwrap();
        assert!(base.value <= 0.52, "base cover bound {}", base.value);
        assert!(base.value >= 0.5 - 1e-9);
        let abelian = hamiltonian_sup_upper(&model, &CoverKind::Abelian, 64).unwrap();
        assert!(abelian.value <= 0.13, "abelian bound {}", abelian.value);
        assert!(abelian.value >= 0.125 - 1e-9);
        // refined evaluation must not blow up
        assert!(abelian.refined_value <= abelian.value * 1.05 + 1e-6);
        // mechanical: the chain collapses onto max V
        let mech = SurfaceModel::torus_mechanical(0.7).unwrap();
        let b = hamiltonian_sup_upper(&mech, &CoverKind::Base, 64).unwrap();
        assert_relative_eq!(b.value, 0.7, epsilon = 5e-3);
    }

    #[test]
    fn half_plane_estimator_rejected() {
        let hp = SurfaceModel::half_plane_horocycle(1.0).unwrap();
        assert!(matches!(
            hamiltonian_sup_upper(&hp, &CoverKind::Base, 32),
            Err(CriticalError::TorusRequired)
        ));
    }

    #[test]
    fn intersections_of_two_circles() {
        let chart = ChartKind::FlatTorus;
        let q0 = BoundarySpec::Curve(CurveKind::Circle {
            center: Vec2::new(0.5, 0.5),
            radius: 0.3,
        });
        let q1 = BoundarySpec::Curve(CurveKind::Circle {
            center: Vec2::new(0.0, 0.5),
            radius: 0.25,
        });
        let pts = curve_intersections(chart, &q0, &q1);
        assert_eq!(pts.len(), 4, "four intersection points on the torus");
        for p in &pts {
            assert!((chart.distance(*p, Vec2::new(0.5, 0.5)) - 0.3).abs() < 1e-7);
            assert!((chart.distance(*p, Vec2::new(0.0, 0.5)) - 0.25).abs() < 1e-7);
        }
    }

    #[test]
    fn k_omega_clamps_and_orders() {
        let model = torus_magnetic();
        // circles crossing away from the bump: the candidate vanishes
        let q0 = BoundarySpec::Curve(CurveKind::Circle {
            center: Vec2::new(0.4, 0.5),
            radius: 0.3,
        });
        let q1 = BoundarySpec::Curve(CurveKind::Circle {
            center: Vec2::new(0.6, 0.5),
            radius: 0.3,
        });
        let rep = k_omega(&model, &q0, &q1, &[], 0.13).unwrap();
        assert!(rep.k_omega.abs() <= 1e-12, "theta vanishes on the crossing");
        // small circles crossing near the bump peak: the candidate exceeds
        // the pair value, so the minimum clamps there
        let q0 = BoundarySpec::Curve(CurveKind::Circle {
            center: Vec2::new(0.48, 0.5),
            radius: 0.05,
        });
        let q1 = BoundarySpec::Curve(CurveKind::Circle {
            center: Vec2::new(0.52, 0.5),
            radius: 0.05,
        });
        let rep = k_omega(&model, &q0, &q1, &[], 0.13).unwrap();
        assert_relative_eq!(rep.k_omega, 0.13, epsilon = 1e-12);
        let a = model.quadratic_bounds().a;
        for p in &rep.intersections {
            let th = model.theta_at(*p).unwrap().dual_norm;
            let direct = model.rest_energy(*p) + th * th / (4.0 * a);
            assert!(rep.per_family[0].0 >= direct - 1e-12);
        }
        // family monotonicity: a subfamily can only lower the threshold
        let single = IsolatingFamily {
            points: vec![rep.intersections[0]],
        };
        let rep_single = k_omega(&model, &q0, &q1, &[single], 0.13).unwrap();
        assert!(rep_single.k_omega <= rep.k_omega + 1e-12);
        // disjoint boundaries are rejected
        let far = BoundarySpec::Curve(CurveKind::Circle {
            center: Vec2::new(0.1, 0.1),
            radius: 0.05,
        });
        assert!(matches!(
            k_omega(&model, &q0, &far, &[], 0.13),
            Err(CriticalError::EmptyIntersection)
        ));
    }

    #[test]
    fn pair_bracket_contains_half_and_is_symmetric() {
        let model = torus_magnetic();
        let q0 = BoundarySpec::Point(Vec2::new(0.5, 0.0));
        let q1 = BoundarySpec::Curve(CurveKind::HorizontalCircle { y: 0.5 });
        let cfg = BracketConfig::default();
        let b01 = bracket_critical(
            &model,
            &BracketTarget::PairValue(q0, q1),
            (0.0, 1.0),
            &cfg,
        )
        .unwrap();
        assert!(b01.contains(0.5), "pair bracket [{}, {}]", b01.lower, b01.upper);
        assert!(b01.width() <= 0.05);
        // swapping the boundaries gives the identical enclosure
        let b10 = bracket_critical(
            &model,
            &BracketTarget::PairValue(q1, q0),
            (0.0, 1.0),
            &cfg,
        )
        .unwrap();
        assert_eq!(b01.lower.to_bits(), b10.lower.to_bits());
        assert_eq!(b01.upper.to_bits(), b10.upper.to_bits());
        // the obstruction level never exceeds the pair value
        let k = k_obstruction(&model, &q0, &q1);
        assert!(k <= b01.upper + 1e-4, "obstruction {k} above pair upper {}", b01.upper);
    }

    #[test]
    fn enlarging_probe_lattice_never_lowers_the_bound() {
        // the contractible class alone certifies about 1/8; adding the
        // horizontal generators raises the certified lower end toward 1/2
        let model = torus_magnetic();
        let cfg = BracketConfig::default();
        let cu = bracket_critical(&model, &BracketTarget::ManeCuC0, (0.0, 1.0), &cfg).unwrap();
        let c = bracket_critical(&model, &BracketTarget::ManeC, (0.0, 1.0), &cfg).unwrap();
        assert!(
            c.lower >= cu.lower - 1e-12,
            "c lower {} below c_u lower {}",
            c.lower,
            cu.lower
        );
    }

    #[test]
    fn chain_audit_value_checks() {
        // the collapsed mechanical chain passes
        chain_audit_values(0.7, (0.68, 0.72), None, (0.68, 0.72), 0.7 + 1e-9).unwrap();
        // a violated link is a hard failure
        assert!(matches!(
            chain_audit_values(0.7, (0.1, 0.2), None, (0.68, 0.72), 0.71),
            Err(CriticalError::ChainViolation(_))
        ));
    }
}
