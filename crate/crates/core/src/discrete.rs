//! Capacity and symmetrizability machinery for the discrete AVC with fixed
//! parameters.
//!
//! The random code capacity is the saddle value of
//! `min_q max_p I_q(X;Y|T)` where `p(x|t)` respects the input budget
//! `sum_t P_T(t) E[phi(X)|t] <= gamma` and `q(s|t)` the state budget. The
//! objective is concave in `p` and convex in `q`, so the alternating
//! projected-gradient solver (inner full maximization, outer descent with the
//! Danskin gradient) finds the global saddle; random restarts and an
//! exhaustive grid oracle guard against numerical trouble.
//!
//! Deterministic coding adds the symmetrizability side: a per-parameter
//! kernel `J(s|x)` that makes the averaged channel symmetric in the two input
//! arguments. `min_symm_cost` is the corresponding least average state cost
//! (a small LP), `symm_threshold` maximizes it over feasible inputs, and the
//! deterministic capacity formula switches on that threshold against the
//! state budget.

use crate::error::{Error, Result};
use crate::lp::{solve_equality_form, LpOutcome};
use crate::model::DiscreteAvcSpec;
use crate::opt::{project_halfspace, project_rows_budget};
use crate::random::{derived_rng, uniform_simplex};
use serde::Serialize;

const LOG2_E: f64 = std::f64::consts::LOG2_E;
/// Symmetrization equalities must hold to this residual.
pub const SYMM_RESIDUAL_TOL: f64 = 1e-8;
/// `|L* - lambda|` below this is flagged as the open boundary case.
pub const BOUNDARY_TOL: f64 = 1e-6;

fn log2_safe(x: f64) -> f64 {
    x.max(1e-300).ln() * LOG2_E
}

/// Binary entropy in bits, with `0 log 0 = 0`.
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }
}

/// Binary convolution `a * b = (1-a) b + a (1-b)`.
pub fn binary_convolution(a: f64, b: f64) -> f64 {
    (1.0 - a) * b + a * (1.0 - b)
}

/// Conditional input distribution `p(x|t)`, row-stochastic `|T| x |X|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalInput {
    pub rows: Vec<Vec<f64>>,
}

impl ConditionalInput {
    pub fn validate(&self, spec: &DiscreteAvcSpec) -> Result<()> {
        check_rows(&self.rows, spec.nt, spec.nx, "p(x|t)")
    }
}

/// Conditional state distribution `q(s|t)`, row-stochastic `|T| x |S|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalState {
    pub rows: Vec<Vec<f64>>,
}

impl ConditionalState {
    pub fn validate(&self, spec: &DiscreteAvcSpec) -> Result<()> {
        check_rows(&self.rows, spec.nt, spec.ns, "q(s|t)")
    }
}

fn check_rows(rows: &[Vec<f64>], nt: usize, k: usize, what: &str) -> Result<()> {
    if rows.len() != nt {
        return Err(Error::DimensionMismatch(format!("{what}: expected {nt} rows")));
    }
    for (t, row) in rows.iter().enumerate() {
        if row.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "{what}: row {t} has length {}, expected {k}",
                row.len()
            )));
        }
        if row.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::DimensionMismatch(format!("{what}: row {t} has invalid entries")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::DimensionMismatch(format!("{what}: row {t} sums to {sum}")));
        }
    }
    Ok(())
}

/// Channel `K(y|x) = sum_s q(s) W(y|x,s)` for one parameter value.
fn effective_channel(slice: &[Vec<Vec<f64>>], q_row: &[f64]) -> Vec<Vec<f64>> {
    let nx = slice.len();
    let ny = slice[0][0].len();
    let mut k = vec![vec![0.0; ny]; nx];
    for (x, per_x) in slice.iter().enumerate() {
        for (s, per_s) in per_x.iter().enumerate() {
            let qs = q_row[s];
            if qs == 0.0 {
                continue;
            }
            for (y, &w) in per_s.iter().enumerate() {
                k[x][y] += qs * w;
            }
        }
    }
    k
}

/// `I(X;Y)` in bits for one parameter value.
fn mi_single(p_row: &[f64], k: &[Vec<f64>]) -> f64 {
    let ny = k[0].len();
    let mut py = vec![0.0; ny];
    for (x, &px) in p_row.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        for (y, val) in py.iter_mut().enumerate() {
            *val += px * k[x][y];
        }
    }
    let mut info = 0.0;
    for (x, &px) in p_row.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        for y in 0..ny {
            let kxy = k[x][y];
            if kxy > 0.0 && py[y] > 0.0 {
                info += px * kxy * (kxy / py[y]).log2();
            }
        }
    }
    info
}

fn mutual_info_unchecked(
    p_t: &[f64],
    p: &[Vec<f64>],
    q: &[Vec<f64>],
    kernel: &[Vec<Vec<Vec<f64>>>],
) -> f64 {
    let mut total = 0.0;
    for (t, &wt) in p_t.iter().enumerate() {
        if wt == 0.0 {
            continue;
        }
        let k = effective_channel(&kernel[t], &q[t]);
        total += wt * mi_single(&p[t], &k);
    }
    total
}

/// `I_q(X;Y|T) = sum_t P_T(t) I(X;Y|T=t)` in bits, with the channel
/// `P(y|x,t) = sum_s q(s|t) W(y|x,s,t)` and the convention `0 log 0 = 0`.
pub fn mutual_info_cond(
    p_t: &[f64],
    p: &[Vec<f64>],
    q: &[Vec<f64>],
    kernel: &[Vec<Vec<Vec<f64>>>],
) -> Result<f64> {
    let nt = p_t.len();
    if kernel.len() != nt {
        return Err(Error::DimensionMismatch(format!(
            "kernel has {} parameter slices, P_T has {nt}",
            kernel.len()
        )));
    }
    let nx = kernel[0].len();
    let ns = kernel[0][0].len();
    check_rows(p, nt, nx, "p(x|t)")?;
    check_rows(q, nt, ns, "q(s|t)")?;
    Ok(mutual_info_unchecked(p_t, p, q, kernel))
}

/// `d I / d p(x|t)`: `P_T(t) (D(K(.|x) || P_Y|t) - log2 e)`.
fn grad_p(p_t: &[f64], p: &[Vec<f64>], q: &[Vec<f64>], kernel: &[Vec<Vec<Vec<f64>>>]) -> Vec<Vec<f64>> {
    let mut g = Vec::with_capacity(p_t.len());
    for (t, &wt) in p_t.iter().enumerate() {
        let slice = &kernel[t];
        let nx = slice.len();
        let ny = slice[0][0].len();
        let k = effective_channel(slice, &q[t]);
        let mut py = vec![0.0; ny];
        for (x, &px) in p[t].iter().enumerate() {
            for (y, val) in py.iter_mut().enumerate() {
                *val += px * k[x][y];
            }
        }
        let mut gt = vec![0.0; nx];
        if wt > 0.0 {
            for (x, gx) in gt.iter_mut().enumerate() {
                let mut div = 0.0;
                for y in 0..ny {
                    let kxy = k[x][y];
                    if kxy > 0.0 {
                        div += kxy * (log2_safe(kxy) - log2_safe(py[y]));
                    }
                }
                *gx = wt * (div - LOG2_E);
            }
        }
        g.push(gt);
    }
    g
}

/// `d I / d q(s|t)`: `P_T(t) sum_{x,y} p(x|t) W(y|x,s,t) log2(K(y|x)/P_Y(y))`.
fn grad_q(p_t: &[f64], p: &[Vec<f64>], q: &[Vec<f64>], kernel: &[Vec<Vec<Vec<f64>>>]) -> Vec<Vec<f64>> {
    let mut g = Vec::with_capacity(p_t.len());
    for (t, &wt) in p_t.iter().enumerate() {
        let slice = &kernel[t];
        let ns = slice[0].len();
        let ny = slice[0][0].len();
        let k = effective_channel(slice, &q[t]);
        let mut py = vec![0.0; ny];
        for (x, &px) in p[t].iter().enumerate() {
            for (y, val) in py.iter_mut().enumerate() {
                *val += px * k[x][y];
            }
        }
        let mut gt = vec![0.0; ns];
        if wt > 0.0 {
            for (x, &px) in p[t].iter().enumerate() {
                if px == 0.0 {
                    continue;
                }
                for (s, gs) in gt.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (y, &w) in slice[x][s].iter().enumerate() {
                        if w > 0.0 {
                            acc += w * (log2_safe(k[x][y]) - log2_safe(py[y]));
                        }
                    }
                    *gs += wt * px * acc;
                }
            }
        }
        g.push(gt);
    }
    g
}

// ---------------------------------------------------------------------------
// Symmetrizability LPs
// ---------------------------------------------------------------------------

/// A kernel `J(s|x)` satisfying the symmetrization equalities for one fixed
/// parameter, together with its average state cost under the input
/// distribution it was solved for.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetrizingKernel {
    /// `j[x][s] = J(s|x)`.
    pub j: Vec<Vec<f64>>,
    pub cost: f64,
}

impl SymmetrizingKernel {
    /// Heuristic 0-1-law detection: the LP vertex has integral entries, i.e.
    /// the minimum is attained by a deterministic map `s = G(x)`.
    pub fn is_zero_one_law(&self) -> bool {
        self.j
            .iter()
            .flatten()
            .all(|&v| v.abs() <= 1e-9 || (v - 1.0).abs() <= 1e-9)
    }
}

/// Max over `(x1, x2, y)` of the symmetrization equality residual
/// `|sum_s W(y|x1,s) J(s|x2) - sum_s W(y|x2,s) J(s|x1)|`.
pub fn symmetrization_residual(slice: &[Vec<Vec<f64>>], j: &[Vec<f64>]) -> f64 {
    let nx = slice.len();
    let ns = slice[0].len();
    let ny = slice[0][0].len();
    let mut worst = 0.0f64;
    for x1 in 0..nx {
        for x2 in 0..nx {
            for y in 0..ny {
                let mut lhs = 0.0;
                let mut rhs = 0.0;
                for s in 0..ns {
                    lhs += slice[x1][s][y] * j[x2][s];
                    rhs += slice[x2][s][y] * j[x1][s];
                }
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    worst
}

/// Build the LP constraint system for kernels symmetrizing `slice`:
/// variables `J(s|x)` (index `x * ns + s`), equality rows for each
/// `(x1 < x2, y)` plus one pmf row per `x`.
fn symmetrization_system(slice: &[Vec<Vec<f64>>]) -> (Vec<Vec<f64>>, Vec<f64>, usize, usize) {
    let nx = slice.len();
    let ns = slice[0].len();
    let ny = slice[0][0].len();
    let nvars = nx * ns;
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for x1 in 0..nx {
        for x2 in (x1 + 1)..nx {
            for y in 0..ny {
                let mut row = vec![0.0; nvars];
                for s in 0..ns {
                    // sum_s W(y|x1,s) J(s|x2) - sum_s W(y|x2,s) J(s|x1) = 0
                    row[x2 * ns + s] += slice[x1][s][y];
                    row[x1 * ns + s] -= slice[x2][s][y];
                }
                rows.push(row);
                rhs.push(0.0);
            }
        }
    }
    for x in 0..nx {
        let mut row = vec![0.0; nvars];
        for s in 0..ns {
            row[x * ns + s] = 1.0;
        }
        rows.push(row);
        rhs.push(1.0);
    }
    (rows, rhs, nx, ns)
}

fn unpack_kernel(x: &[f64], nx: usize, ns: usize) -> Vec<Vec<f64>> {
    (0..nx).map(|xi| x[xi * ns..(xi + 1) * ns].to_vec()).collect()
}

/// Decide symmetrizability of one constant-parameter channel `W(y|x,s)` and
/// return a feasible kernel if one exists.
pub fn find_symmetrizer(slice: &[Vec<Vec<f64>>]) -> Option<Vec<Vec<f64>>> {
    let (rows, rhs, nx, ns) = symmetrization_system(slice);
    let c = vec![0.0; nx * ns];
    match solve_equality_form(&c, &rows, &rhs) {
        LpOutcome::Optimal { x, .. } => Some(unpack_kernel(&x, nx, ns)),
        _ => None,
    }
}

/// Outcome of the minimal symmetrizability cost LP.
#[derive(Debug, Clone, PartialEq)]
pub enum SymmCost {
    Feasible(SymmetrizingKernel),
    /// Empty feasible set; the cost is `+inf` by convention.
    Infeasible,
}

impl SymmCost {
    pub fn value(&self) -> f64 {
        match self {
            SymmCost::Feasible(k) => k.cost,
            SymmCost::Infeasible => f64::INFINITY,
        }
    }
}

/// Least average state cost `sum_{x,s} p(x) J(s|x) l(s)` over kernels that
/// symmetrize `slice`.
pub fn min_symm_cost(slice: &[Vec<Vec<f64>>], p_row: &[f64], l: &[f64]) -> SymmCost {
    let (rows, rhs, nx, ns) = symmetrization_system(slice);
    let mut c = vec![0.0; nx * ns];
    for x in 0..nx {
        for s in 0..ns {
            c[x * ns + s] = p_row[x] * l[s];
        }
    }
    match solve_equality_form(&c, &rows, &rhs) {
        LpOutcome::Optimal { x, value } => SymmCost::Feasible(SymmetrizingKernel {
            j: unpack_kernel(&x, nx, ns),
            cost: value.max(0.0),
        }),
        _ => SymmCost::Infeasible,
    }
}

/// Minimal symmetrizability cost of the parameter-averaged channel:
/// `sum_t P_T(t) min_symm_cost(W_t, p(.|t), l)`, `+inf` when any symmetrizable
/// parameter of positive mass fails.
pub fn symm_cost_profile(spec: &DiscreteAvcSpec, p: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for (t, &wt) in spec.p_t.iter().enumerate() {
        if wt == 0.0 {
            continue;
        }
        match min_symm_cost(spec.kernel_slice(t), &p[t], &spec.l) {
            SymmCost::Feasible(k) => total += wt * k.cost,
            SymmCost::Infeasible => return f64::INFINITY,
        }
    }
    total
}

/// Symmetrizability threshold `L*` and a maximizing input distribution.
#[derive(Debug, Clone)]
pub struct SymmThreshold {
    /// `+inf` when some positive-mass parameter is non-symmetrizable.
    pub value: f64,
    pub argmax: Option<ConditionalInput>,
}

/// Maximize the symmetrizability cost over feasible inputs by projected
/// supergradient ascent. The objective is a `P_T`-average of per-parameter LP
/// minima, hence concave; the LP's optimal kernel yields a supergradient.
pub fn symm_threshold(spec: &DiscreteAvcSpec) -> Result<SymmThreshold> {
    for (t, &wt) in spec.p_t.iter().enumerate() {
        if wt > 0.0 && find_symmetrizer(spec.kernel_slice(t)).is_none() {
            return Ok(SymmThreshold { value: f64::INFINITY, argmax: None });
        }
    }
    let nt = spec.nt;
    let nx = spec.nx;
    let gamma = spec.constraints.gamma;
    let eval = |p: &[Vec<f64>]| -> (f64, Vec<Vec<f64>>) {
        let mut value = 0.0;
        let mut grad = vec![vec![0.0; nx]; nt];
        for t in 0..nt {
            let wt = spec.p_t[t];
            if wt == 0.0 {
                continue;
            }
            match min_symm_cost(spec.kernel_slice(t), &p[t], &spec.l) {
                SymmCost::Feasible(k) => {
                    value += wt * k.cost;
                    for x in 0..nx {
                        let jl: f64 =
                            k.j[x].iter().zip(spec.l.iter()).map(|(&j, &c)| j * c).sum();
                        grad[t][x] = wt * jl;
                    }
                }
                SymmCost::Infeasible => unreachable!("checked above"),
            }
        }
        (value, grad)
    };

    let mut best_value = f64::NEG_INFINITY;
    let mut best_p: Option<Vec<Vec<f64>>> = None;
    for restart in 0..4u64 {
        let mut rng = derived_rng(0x5417_u64, restart);
        let start: Vec<Vec<f64>> = (0..nt)
            .map(|_| {
                if restart == 0 {
                    vec![1.0 / nx as f64; nx]
                } else {
                    uniform_simplex(&mut rng, nx, 1.0)
                }
            })
            .collect();
        let mut p = project_rows_budget(&start, &spec.p_t, &spec.phi, gamma);
        let (mut value, mut grad) = eval(&p);
        let mut stall = 0;
        let mut step = 1.0;
        for _ in 0..500 {
            let ascent: Vec<Vec<f64>> = p
                .iter()
                .zip(grad.iter())
                .map(|(row, g)| row.iter().zip(g.iter()).map(|(&v, &gi)| v + step * gi).collect())
                .collect();
            let cand = project_rows_budget(&ascent, &spec.p_t, &spec.phi, gamma);
            let (cand_value, cand_grad) = eval(&cand);
            if cand_value > value + 1e-14 {
                p = cand;
                value = cand_value;
                grad = cand_grad;
                step = (step * 2.0).min(16.0);
                stall = 0;
            } else {
                step *= 0.5;
                stall += 1;
                if step < 1e-12 || stall > 60 {
                    break;
                }
            }
        }
        if value > best_value {
            best_value = value;
            best_p = Some(p);
        }
    }
    Ok(SymmThreshold {
        value: best_value,
        argmax: best_p.map(|rows| ConditionalInput { rows }),
    })
}

// ---------------------------------------------------------------------------
// Min-max capacity solver
// ---------------------------------------------------------------------------

/// Knobs for the alternating projected-gradient saddle solver.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub restarts: usize,
    /// Cap on outer (state-player) iterations per restart.
    pub max_outer: usize,
    /// Cap on inner (input-player) iterations per maximization.
    pub max_inner: usize,
    /// Projected-gradient norm at which a player is considered converged.
    pub tol: f64,
    pub seed: u64,
    /// Run the exhaustive grid oracle with this step denominator and record
    /// the gap (alphabets must be small).
    pub oracle_grid: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            restarts: 8,
            max_outer: 400,
            max_inner: 400,
            tol: 1e-6,
            seed: 0xA5C1,
            oracle_grid: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub residual: f64,
    pub restarts: usize,
    pub oracle_gap: Option<f64>,
}

/// Saddle value with the optimizing distributions and solver diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct CapacityResult {
    pub value: f64,
    pub p: ConditionalInput,
    pub q: ConditionalState,
    pub diagnostics: SolverDiagnostics,
}

/// Feasible-input projection, optionally restricted to inputs whose
/// symmetrizability cost stays at or above `lambda_min` (alternating
/// projections with supergradient cuts for the concave constraint).
fn project_input(spec: &DiscreteAvcSpec, z: &[Vec<f64>], lambda_min: Option<f64>) -> Vec<Vec<f64>> {
    let budget = |rows: &[Vec<f64>]| project_rows_budget(rows, &spec.p_t, &spec.phi, spec.constraints.gamma);
    let mut x = budget(z);
    let Some(lam) = lambda_min else { return x };
    if !lam.is_finite() {
        return x;
    }
    for _ in 0..100 {
        let profile = symm_cost_profile(spec, &x);
        if profile.is_infinite() || profile >= lam - 1e-10 {
            return x;
        }
        // Supergradient cut: Lambda(x') <= Lambda(x) + g.(x'-x), so the true
        // set lies inside the halfspace g.x' >= lam - Lambda(x) + g.x.
        let mut g = Vec::new();
        for t in 0..spec.nt {
            let wt = spec.p_t[t];
            match min_symm_cost(spec.kernel_slice(t), &x[t], &spec.l) {
                SymmCost::Feasible(k) => {
                    for xi in 0..spec.nx {
                        let jl: f64 =
                            k.j[xi].iter().zip(spec.l.iter()).map(|(&j, &c)| j * c).sum();
                        g.push(wt * jl);
                    }
                }
                SymmCost::Infeasible => return x,
            }
        }
        let flat: Vec<f64> = x.iter().flatten().cloned().collect();
        let gdotx: f64 = g.iter().zip(flat.iter()).map(|(&a, &b)| a * b).sum();
        let cut = project_halfspace(&flat, &g, lam - profile + gdotx, true);
        let rows: Vec<Vec<f64>> = cut.chunks(spec.nx).map(|c| c.to_vec()).collect();
        x = budget(&rows);
    }
    x
}

fn project_state(spec: &DiscreteAvcSpec, z: &[Vec<f64>]) -> Vec<Vec<f64>> {
    project_rows_budget(z, &spec.p_t, &spec.l, spec.constraints.lambda)
}

fn pg_norm(current: &[Vec<f64>], moved: &[Vec<f64>]) -> f64 {
    current
        .iter()
        .flatten()
        .zip(moved.iter().flatten())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

struct InnerResult {
    p: Vec<Vec<f64>>,
    value: f64,
    residual: f64,
    iterations: usize,
}

/// Full concave maximization over the input player at a fixed state player.
fn inner_maximize(
    spec: &DiscreteAvcSpec,
    q: &[Vec<f64>],
    p_start: &[Vec<f64>],
    lambda_min: Option<f64>,
    opts: &SolverOptions,
) -> InnerResult {
    let mut p = project_input(spec, p_start, lambda_min);
    let mut value = mutual_info_unchecked(&spec.p_t, &p, q, &spec.kernel);
    let mut step = 0.5;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..opts.max_inner {
        iterations = it + 1;
        let g = grad_p(&spec.p_t, &p, q, &spec.kernel);
        let probe: Vec<Vec<f64>> = p
            .iter()
            .zip(g.iter())
            .map(|(row, gr)| row.iter().zip(gr.iter()).map(|(&v, &gi)| v + gi).collect())
            .collect();
        residual = pg_norm(&p, &project_input(spec, &probe, lambda_min));
        if residual < opts.tol {
            break;
        }
        let mut eta = step;
        let mut accepted = false;
        for _ in 0..40 {
            let ascent: Vec<Vec<f64>> = p
                .iter()
                .zip(g.iter())
                .map(|(row, gr)| row.iter().zip(gr.iter()).map(|(&v, &gi)| v + eta * gi).collect())
                .collect();
            let cand = project_input(spec, &ascent, lambda_min);
            let cand_value = mutual_info_unchecked(&spec.p_t, &cand, q, &spec.kernel);
            let inner: f64 = cand
                .iter()
                .flatten()
                .zip(p.iter().flatten())
                .zip(g.iter().flatten())
                .map(|((&c, &v), &gi)| gi * (c - v))
                .sum();
            if cand_value >= value + 1e-4 * inner.max(0.0) && cand_value > value - 1e-15 {
                p = cand;
                value = cand_value;
                step = (eta * 2.0).min(4.0);
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    InnerResult { p, value, residual, iterations }
}

fn solve_minmax(
    spec: &DiscreteAvcSpec,
    lambda_min: Option<f64>,
    opts: &SolverOptions,
) -> Result<CapacityResult> {
    struct Restart {
        value: f64,
        p: Vec<Vec<f64>>,
        q: Vec<Vec<f64>>,
        residual: f64,
        iterations: usize,
    }

    let run_one = |restart: u64| -> Restart {
        let mut rng = derived_rng(opts.seed, restart);
        let p0: Vec<Vec<f64>> = (0..spec.nt)
            .map(|_| {
                if restart == 0 {
                    vec![1.0 / spec.nx as f64; spec.nx]
                } else {
                    uniform_simplex(&mut rng, spec.nx, 1.0)
                }
            })
            .collect();
        let q0: Vec<Vec<f64>> = (0..spec.nt)
            .map(|_| {
                if restart == 0 {
                    vec![1.0 / spec.ns as f64; spec.ns]
                } else {
                    uniform_simplex(&mut rng, spec.ns, 1.0)
                }
            })
            .collect();
        let mut q = project_state(spec, &q0);
        let mut inner = inner_maximize(spec, &q, &p0, lambda_min, opts);
        let mut step = 0.5;
        let mut residual_q = f64::INFINITY;
        let mut iterations = inner.iterations;
        for _ in 0..opts.max_outer {
            let gq = grad_q(&spec.p_t, &inner.p, &q, &spec.kernel);
            let probe: Vec<Vec<f64>> = q
                .iter()
                .zip(gq.iter())
                .map(|(row, gr)| row.iter().zip(gr.iter()).map(|(&v, &gi)| v - gi).collect())
                .collect();
            residual_q = pg_norm(&q, &project_state(spec, &probe));
            if residual_q < opts.tol && inner.residual < opts.tol {
                break;
            }
            let mut eta = step;
            let mut accepted = false;
            for _ in 0..40 {
                let descent: Vec<Vec<f64>> = q
                    .iter()
                    .zip(gq.iter())
                    .map(|(row, gr)| {
                        row.iter().zip(gr.iter()).map(|(&v, &gi)| v - eta * gi).collect()
                    })
                    .collect();
                let cand_q = project_state(spec, &descent);
                let cand = inner_maximize(spec, &cand_q, &inner.p, lambda_min, opts);
                iterations += cand.iterations;
                if cand.value < inner.value - 1e-15 {
                    q = cand_q;
                    inner = cand;
                    step = (eta * 2.0).min(4.0);
                    accepted = true;
                    break;
                }
                eta *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        Restart {
            value: inner.value,
            p: inner.p,
            q,
            residual: inner.residual.max(residual_q),
            iterations,
        }
    };

    let outcomes: Vec<Restart> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..opts.restarts as u64)
            .map(|i| scope.spawn(move || run_one(i)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("restart panicked")).collect()
    });
    let best = outcomes
        .into_iter()
        .min_by(|a, b| a.value.partial_cmp(&b.value).unwrap())
        .expect("at least one restart");
    if best.residual > 1e-5 {
        return Err(Error::SolverDidNotConverge(format!(
            "projected-gradient residual {:.3e} after {} iterations",
            best.residual, best.iterations
        )));
    }
    let oracle_gap = match opts.oracle_grid {
        Some(steps) if lambda_min.is_none() => {
            Some((grid_oracle(spec, steps)?.value - best.value).abs())
        }
        _ => None,
    };
    Ok(CapacityResult {
        value: best.value.max(0.0),
        p: ConditionalInput { rows: best.p },
        q: ConditionalState { rows: best.q },
        diagnostics: SolverDiagnostics {
            iterations: best.iterations,
            residual: best.residual,
            restarts: opts.restarts,
            oracle_gap,
        },
    })
}

/// Random code capacity of the AVC with fixed parameters, default options.
pub fn random_capacity_fixed_params(spec: &DiscreteAvcSpec) -> Result<CapacityResult> {
    random_capacity_with(spec, &SolverOptions::default())
}

pub fn random_capacity_with(spec: &DiscreteAvcSpec, opts: &SolverOptions) -> Result<CapacityResult> {
    solve_minmax(spec, None, opts)
}

// ---------------------------------------------------------------------------
// Exhaustive grid oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub value: f64,
    /// Largest single-grid-step change of the objective observed along each
    /// player's axes; the continuous saddle lies within this slack.
    pub lipschitz_slack: f64,
    pub p_points: usize,
    pub q_points: usize,
}

/// All pmfs on `k` symbols with entries that are multiples of `1/steps`.
fn simplex_grid(k: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(k: usize, left: usize, steps: usize, prefix: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if k == 1 {
            let mut row = prefix.clone();
            row.push(left as f64 / steps as f64);
            out.push(row);
            return;
        }
        for i in 0..=left {
            prefix.push(i as f64 / steps as f64);
            rec(k - 1, left - i, steps, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, steps, steps, &mut Vec::new(), &mut out);
    out
}

fn tuples(counts: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &c in counts {
        let mut next = Vec::with_capacity(out.len() * c);
        for t in &out {
            for i in 0..c {
                let mut t2 = t.clone();
                t2.push(i);
                next.push(t2);
            }
        }
        out = next;
    }
    out
}

/// Exhaustive min-max over simplex grids with step `1/steps` per coordinate.
/// Independent of the projected-gradient path; feasible only for small
/// alphabets.
pub fn grid_oracle(spec: &DiscreteAvcSpec, steps: usize) -> Result<OracleReport> {
    let p_rows = simplex_grid(spec.nx, steps);
    let q_rows = simplex_grid(spec.ns, steps);
    let np = p_rows.len().pow(spec.nt as u32);
    let nq = q_rows.len().pow(spec.nt as u32);
    if np.saturating_mul(nq) > 400_000_000 {
        return Err(Error::Domain(format!(
            "grid oracle would evaluate {np} x {nq} tuples; reduce the alphabet or step count"
        )));
    }

    // Per-parameter tables I_t[p_idx][q_idx].
    let mut tables = Vec::with_capacity(spec.nt);
    for t in 0..spec.nt {
        let slice = spec.kernel_slice(t);
        let mut table = vec![vec![0.0; q_rows.len()]; p_rows.len()];
        for (qi, q_row) in q_rows.iter().enumerate() {
            let k = effective_channel(slice, q_row);
            for (pi, p_row) in p_rows.iter().enumerate() {
                table[pi][qi] = mi_single(p_row, &k);
            }
        }
        tables.push(table);
    }

    let p_cost: Vec<f64> = p_rows
        .iter()
        .map(|row| row.iter().zip(spec.phi.iter()).map(|(&p, &c)| p * c).sum())
        .collect();
    let q_cost: Vec<f64> = q_rows
        .iter()
        .map(|row| row.iter().zip(spec.l.iter()).map(|(&p, &c)| p * c).sum())
        .collect();

    let feasible = |idx: &[usize], costs: &[f64], budget: f64| -> bool {
        let total: f64 = idx
            .iter()
            .zip(spec.p_t.iter())
            .map(|(&i, &w)| w * costs[i])
            .sum();
        total <= budget + 1e-12
    };

    let p_tuples: Vec<Vec<usize>> = tuples(&vec![p_rows.len(); spec.nt])
        .into_iter()
        .filter(|t| feasible(t, &p_cost, spec.constraints.gamma))
        .collect();
    let q_tuples: Vec<Vec<usize>> = tuples(&vec![q_rows.len(); spec.nt])
        .into_iter()
        .filter(|t| feasible(t, &q_cost, spec.constraints.lambda))
        .collect();
    if p_tuples.is_empty() || q_tuples.is_empty() {
        return Err(Error::Domain("empty feasible grid".to_string()));
    }

    let mut value = f64::INFINITY;
    for qt in &q_tuples {
        let mut best = f64::NEG_INFINITY;
        for pt in &p_tuples {
            let mut v = 0.0;
            for t in 0..spec.nt {
                v += spec.p_t[t] * tables[t][pt[t]][qt[t]];
            }
            if v > best {
                best = v;
            }
        }
        if best < value {
            value = best;
        }
    }

    // Largest one-step move along either player's grid, weighted by P_T.
    let mut slack = 0.0f64;
    for t in 0..spec.nt {
        let wt = spec.p_t[t];
        let table = &tables[t];
        let mut dp = 0.0f64;
        for qi in 0..q_rows.len() {
            for pi in 1..p_rows.len() {
                dp = dp.max((table[pi][qi] - table[pi - 1][qi]).abs());
            }
        }
        let mut dq = 0.0f64;
        for pi in 0..p_rows.len() {
            for qi in 1..q_rows.len() {
                dq = dq.max((table[pi][qi] - table[pi][qi - 1]).abs());
            }
        }
        slack += wt * (dp + dq);
    }

    Ok(OracleReport {
        value,
        lipschitz_slack: slack,
        p_points: p_tuples.len(),
        q_points: q_tuples.len(),
    })
}

// ---------------------------------------------------------------------------
// Per-parameter decomposition
// ---------------------------------------------------------------------------

/// Spec for the constant-parameter slice `t` with budgets `(omega, lambda)`.
fn slice_spec(spec: &DiscreteAvcSpec, t: usize, omega: f64, lambda: f64) -> DiscreteAvcSpec {
    DiscreteAvcSpec {
        nx: spec.nx,
        ns: spec.ns,
        nt: 1,
        ny: spec.ny,
        kernel: vec![spec.kernel[t].clone()],
        p_t: vec![1.0],
        phi: spec.phi.clone(),
        l: spec.l.clone(),
        constraints: crate::model::Constraints { gamma: omega, lambda },
    }
}

/// Per-parameter constrained saddle `C_t*(omega, lambda)`.
fn per_parameter_value(spec: &DiscreteAvcSpec, t: usize, omega: f64, lambda: f64) -> Result<f64> {
    let opts = SolverOptions {
        restarts: 2,
        max_outer: 200,
        max_inner: 200,
        ..SolverOptions::default()
    };
    Ok(solve_minmax(&slice_spec(spec, t, omega, lambda), None, &opts)?.value)
}

fn ternary_min(mut lo: f64, mut hi: f64, iters: usize, mut f: impl FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    for _ in 0..iters {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1)? <= f(m2)? {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let x = 0.5 * (lo + hi);
    Ok((x, f(x)?))
}

/// Saddle value of the budget-allocation form with the per-parameter budgets
/// attaining it.
#[derive(Debug, Clone, Serialize)]
pub struct Decomposition {
    pub value: f64,
    /// Per-parameter input budgets `omega_t`.
    pub omega: Vec<f64>,
    /// Per-parameter state budgets `lambda_t`.
    pub lambda: Vec<f64>,
}

/// The budget-allocation form `R_n*`: minimize over per-parameter state
/// budgets, maximize over per-parameter input budgets, of the `P_T`-average
/// of constant-parameter capacities. Equals the joint saddle value.
pub fn per_parameter_decomposition(spec: &DiscreteAvcSpec) -> Result<Decomposition> {
    let gamma = spec.constraints.gamma;
    let lambda = spec.constraints.lambda;
    match spec.nt {
        1 => Ok(Decomposition {
            value: per_parameter_value(spec, 0, gamma, lambda)?,
            omega: vec![gamma],
            lambda: vec![lambda],
        }),
        2 => {
            let w0 = spec.p_t[0];
            let w1 = spec.p_t[1];
            if w0 == 0.0 || w1 == 0.0 {
                let t = usize::from(w0 == 0.0);
                let w = spec.p_t[t];
                let mut omega = vec![0.0; 2];
                let mut lam = vec![0.0; 2];
                omega[t] = gamma / w;
                lam[t] = lambda / w;
                return Ok(Decomposition {
                    value: per_parameter_value(spec, t, omega[t], lam[t])?,
                    omega,
                    lambda: lam,
                });
            }
            // Both budget constraints bind at the saddle; each player's split
            // is one-dimensional, and the value is convex in the state split
            // and concave in the input split.
            let inner_max = |l0: f64| -> Result<(f64, f64)> {
                let l1 = (lambda - w0 * l0) / w1;
                let (o0, neg) = ternary_min(0.0, gamma / w0, 24, |o0| {
                    let o1 = (gamma - w0 * o0) / w1;
                    Ok(-(w0 * per_parameter_value(spec, 0, o0, l0)?
                        + w1 * per_parameter_value(spec, 1, o1, l1)?))
                })?;
                Ok((o0, -neg))
            };
            let (l0, _) = ternary_min(0.0, lambda / w0, 24, |l0| Ok(inner_max(l0)?.1))?;
            let (o0, value) = inner_max(l0)?;
            Ok(Decomposition {
                value,
                omega: vec![o0, (gamma - w0 * o0) / w1],
                lambda: vec![l0, (lambda - w0 * l0) / w1],
            })
        }
        _ => per_parameter_decomposition_general(spec),
    }
}

/// Projected-gradient fallback for three or more parameter values, with
/// central-difference envelope gradients.
fn per_parameter_decomposition_general(spec: &DiscreteAvcSpec) -> Result<Decomposition> {
    let gamma = spec.constraints.gamma;
    let lambda = spec.constraints.lambda;
    let nt = spec.nt;
    let w = &spec.p_t;
    let value_at = |omega: &[f64], lam: &[f64]| -> Result<f64> {
        let mut v = 0.0;
        for t in 0..nt {
            if w[t] > 0.0 {
                v += w[t] * per_parameter_value(spec, t, omega[t], lam[t])?;
            }
        }
        Ok(v)
    };
    let inner = |lam: &[f64]| -> Result<(f64, Vec<f64>)> {
        let mut omega = vec![gamma; nt];
        omega = crate::opt::project_orthant_budget(&omega, w, gamma);
        let mut best = value_at(&omega, lam)?;
        let mut step = gamma.max(1.0);
        for _ in 0..60 {
            let h = 1e-4 * gamma.max(1.0);
            let mut g = vec![0.0; nt];
            for t in 0..nt {
                if w[t] == 0.0 {
                    continue;
                }
                let mut up = omega.clone();
                up[t] += h;
                let up = crate::opt::project_orthant_budget(&up, w, gamma);
                g[t] = (value_at(&up, lam)? - best) / h;
            }
            let probe: Vec<f64> = omega.iter().zip(g.iter()).map(|(&o, &gi)| o + step * gi).collect();
            let cand = crate::opt::project_orthant_budget(&probe, w, gamma);
            let cand_v = value_at(&cand, lam)?;
            if cand_v > best + 1e-10 {
                omega = cand;
                best = cand_v;
                step = (step * 1.5).min(10.0 * gamma.max(1.0));
            } else {
                step *= 0.5;
                if step < 1e-7 {
                    break;
                }
            }
        }
        Ok((best, omega))
    };
    let mut lam = crate::opt::project_orthant_budget(&vec![lambda; nt], w, lambda);
    let (mut best, mut omega) = inner(&lam)?;
    let mut step = lambda.max(1.0);
    for _ in 0..60 {
        let h = 1e-4 * lambda.max(1.0);
        let mut g = vec![0.0; nt];
        for t in 0..nt {
            if w[t] == 0.0 {
                continue;
            }
            let mut up = lam.clone();
            up[t] += h;
            let up = crate::opt::project_orthant_budget(&up, w, lambda);
            g[t] = (inner(&up)?.0 - best) / h;
        }
        let probe: Vec<f64> = lam.iter().zip(g.iter()).map(|(&l, &gi)| l - step * gi).collect();
        let cand = crate::opt::project_orthant_budget(&probe, w, lambda);
        let (cand_v, cand_omega) = inner(&cand)?;
        if cand_v < best - 1e-10 {
            lam = cand;
            best = cand_v;
            omega = cand_omega;
            step = (step * 1.5).min(10.0 * lambda.max(1.0));
        } else {
            step *= 0.5;
            if step < 1e-7 {
                break;
            }
        }
    }
    Ok(Decomposition { value: best, omega, lambda: lam })
}

// ---------------------------------------------------------------------------
// Deterministic capacity and the BSC example
// ---------------------------------------------------------------------------

/// Deterministic code capacity with its threshold analysis.
#[derive(Debug, Clone, Serialize)]
pub struct DetCapacity {
    pub value: f64,
    /// Symmetrizability threshold `L*` (`+inf` when some parameter is
    /// non-symmetrizable).
    pub l_star: f64,
    /// `|L* - lambda| <= 1e-6`: the boundary case the theory leaves open; the
    /// value is computed by the positive-threshold formula but flagged.
    pub boundary: bool,
    pub result: Option<CapacityResult>,
}

/// Deterministic code capacity of the AVC with fixed parameters: the
/// constrained saddle when `L* > lambda`, zero when `L* < lambda`, and the
/// formula value with a `boundary` flag when `L* = lambda` within 1e-6.
pub fn deterministic_capacity_fixed_params(spec: &DiscreteAvcSpec) -> Result<DetCapacity> {
    deterministic_capacity_with(spec, &SolverOptions::default())
}

pub fn deterministic_capacity_with(
    spec: &DiscreteAvcSpec,
    opts: &SolverOptions,
) -> Result<DetCapacity> {
    let threshold = symm_threshold(spec)?;
    let l_star = threshold.value;
    let lambda = spec.constraints.lambda;
    if l_star.is_infinite() {
        // No symmetrizing kernel exists for some parameter: the constraint is
        // vacuous and deterministic coding matches random coding.
        let result = solve_minmax(spec, None, opts)?;
        return Ok(DetCapacity { value: result.value, l_star, boundary: false, result: Some(result) });
    }
    let boundary = (l_star - lambda).abs() <= BOUNDARY_TOL;
    if l_star < lambda && !boundary {
        return Ok(DetCapacity { value: 0.0, l_star, boundary: false, result: None });
    }
    let result = solve_minmax(spec, Some(lambda), opts)?;
    Ok(DetCapacity { value: result.value, l_star, boundary, result: Some(result) })
}

/// One constant-parameter capacity of the binary example: input budget
/// `omega`, state budget `lambda`, crossover `eps`, Hamming costs.
pub fn bsc_constant_parameter_capacity(omega: f64, lambda: f64, eps: f64) -> f64 {
    if lambda >= 0.5 || omega <= lambda {
        return 0.0;
    }
    let noise = binary_convolution(lambda, eps);
    if omega >= 0.5 {
        1.0 - binary_entropy(noise)
    } else {
        binary_entropy(binary_convolution(omega, noise)) - binary_entropy(noise)
    }
}

/// Closed-form evaluation of the two-parameter binary example.
#[derive(Debug, Clone, Serialize)]
pub struct BscExampleReport {
    /// Joint-coding rate at the noise-equalizing jammer split.
    pub c_joint: f64,
    /// Rate of two independent constant-parameter codes at the same split.
    pub c_split: f64,
    pub superadditive: bool,
    pub l_star: f64,
    /// Jammer budgets `(lambda_0, lambda_1)` equalizing the effective noise.
    pub lambda_split: (f64, f64),
    /// Effective crossover probabilities after jamming, per parameter.
    pub effective_noise: (f64, f64),
}

/// Evaluate the binary-symmetric example `Y = X + S + Z_t mod 2` with
/// `Z_t ~ Bernoulli(eps_t)`, equal-frequency parameters, and Hamming costs.
///
/// The jammer splits its budget to equalize the effective crossovers
/// `lambda_t * eps_t`; the user spends `gamma` on both parameters. The report
/// compares joint coding against independent per-parameter coding at the same
/// budgets, which exposes the super-additivity of joint coding. Note that the
/// equalizing split is a convenient comparison point, not the worst jammer:
/// the exact saddle value comes from [`random_capacity_fixed_params`] /
/// [`deterministic_capacity_fixed_params`] and can be slightly lower than
/// `c_joint`.
pub fn bsc_example(eps0: f64, eps1: f64, gamma: f64, lambda: f64) -> Result<BscExampleReport> {
    if !(0.0 < eps0 && eps0 < eps1 && eps1 < 0.5) {
        return Err(Error::Domain(format!(
            "need 0 < eps0 < eps1 < 1/2, got eps0 = {eps0}, eps1 = {eps1}"
        )));
    }
    if !(gamma > 0.0 && lambda > 0.0) {
        return Err(Error::Domain("budgets must be positive".to_string()));
    }
    let l_star = gamma.min(0.5);

    // Split lambda = (l0 + l1)/2 so that l0 * eps0 = l1 * eps1 when possible.
    let lo = (2.0 * lambda - 1.0).max(0.0);
    let hi = (2.0 * lambda).min(1.0);
    let mismatch = |l0: f64| {
        binary_convolution(l0, eps0) - binary_convolution(2.0 * lambda - l0, eps1)
    };
    let l0 = if mismatch(lo) >= 0.0 {
        lo
    } else if mismatch(hi) <= 0.0 {
        hi
    } else {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mismatch(mid) < 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    };
    let l1 = 2.0 * lambda - l0;
    let d0 = binary_convolution(l0, eps0);
    let d1 = binary_convolution(l1, eps1);

    let joint_rate = |delta: f64| -> f64 {
        if delta >= 0.5 {
            0.0
        } else if gamma >= 0.5 {
            1.0 - binary_entropy(delta)
        } else {
            binary_entropy(binary_convolution(gamma, delta)) - binary_entropy(delta)
        }
    };
    let c_joint = if l_star > lambda {
        0.5 * joint_rate(d0) + 0.5 * joint_rate(d1)
    } else {
        0.0
    };
    let c_split = 0.5 * bsc_constant_parameter_capacity(gamma, l0, eps0)
        + 0.5 * bsc_constant_parameter_capacity(gamma, l1, eps1);
    Ok(BscExampleReport {
        c_joint,
        c_split,
        superadditive: c_joint > c_split,
        l_star,
        lambda_split: (l0, l1),
        effective_noise: (d0, d1),
    })
}

// ---------------------------------------------------------------------------
