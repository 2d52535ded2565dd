//! Angle-setting strategies: fixed-angle linear schedules, full 2p-parameter
//! quasi-Newton optimization, linear-ramp (4-parameter) and γ-only
//! (2-parameter) derivative-free optimization, and cross-instance transfer.
//!
//! All optimizers share the same contract: box- or budget-bounded, counting
//! every objective evaluation, and returning the best point seen (the
//! initial point included), flagged non-converged when the budget ran out
//! first. Ties between equal costs keep the first point found, so results
//! are deterministic for a fixed seed.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::engine::{expectation, run_circuit, AngleSchedule, CostDiagonal};
use crate::error::{Error, Result};
use crate::ising::IsingModel;

/// Default evaluation budgets: each evaluation is a full 2^N circuit.
pub const DEFAULT_BUDGET_FULL: usize = 500;
pub const DEFAULT_BUDGET_RAMP: usize = 200;
pub const DEFAULT_BUDGET_GAMMA_ONLY: usize = 100;

/// Central-difference step for quasi-Newton gradients (radians).
const GRADIENT_STEP: f64 = 1e-6;
/// Gradient infinity-norm below which the quasi-Newton search stops.
const GRADIENT_TOL: f64 = 1e-6;
/// Pattern-search poll step converges once it shrinks below this fraction
/// of the box span.
const PATTERN_STEP_TOL: f64 = 1e-3;

/// Slope/intercept pairs for schedules linear in the layer index:
/// `γ_l = −(gamma_intercept + gamma_slope·(l−1)/p) / scale`,
/// `β_l = beta_intercept − beta_slope·(l−1)/p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearRampParams {
    #[serde(rename = "alpha_I")]
    pub gamma_slope: f64,
    #[serde(rename = "b_I")]
    pub gamma_intercept: f64,
    #[serde(rename = "alpha_z")]
    pub beta_slope: f64,
    #[serde(rename = "b_z")]
    pub beta_intercept: f64,
}

impl Default for LinearRampParams {
    /// Defaults that sample well on fully connected random-coefficient
    /// models around ten sites.
    fn default() -> Self {
        Self {
            gamma_slope: 0.03,
            gamma_intercept: 0.20,
            beta_slope: 1.2,
            beta_intercept: 1.5,
        }
    }
}

impl LinearRampParams {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("ramp params serialization cannot fail")
    }

    fn validate(&self) -> Result<()> {
        let vals = [
            self.gamma_slope,
            self.gamma_intercept,
            self.beta_slope,
            self.beta_intercept,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "ramp parameters must be finite".into(),
            ));
        }
        Ok(())
    }

    fn to_vec(self) -> Vec<f64> {
        vec![
            self.gamma_slope,
            self.gamma_intercept,
            self.beta_slope,
            self.beta_intercept,
        ]
    }

    fn from_slice(x: &[f64]) -> Self {
        Self {
            gamma_slope: x[0],
            gamma_intercept: x[1],
            beta_slope: x[2],
            beta_intercept: x[3],
        }
    }
}

/// Instance-derived scale dividing every γ so phase angles fit the
/// coefficient range: the largest |field| or |coupling| of the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaScaling {
    scale_factor: f64,
}

impl GammaScaling {
    pub fn for_model(model: &IsingModel) -> Self {
        Self {
            scale_factor: model.max_abs_coefficient(),
        }
    }

    /// Scale 1: raw angles, for unit-coefficient benchmarks.
    pub fn unit() -> Self {
        Self { scale_factor: 1.0 }
    }

    pub fn new(scale_factor: f64) -> Result<Self> {
        if !scale_factor.is_finite() || scale_factor < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "scale factor {scale_factor} must be finite and non-negative"
            )));
        }
        Ok(Self { scale_factor })
    }

    pub fn scale_factor(&self) -> f64 {
        self.scale_factor
    }
}

/// Expand ramp parameters into a depth-p schedule.
pub fn fixed_angle_schedule(
    p: usize,
    params: &LinearRampParams,
    scaling: &GammaScaling,
) -> Result<AngleSchedule> {
    if p < 1 {
        return Err(Error::InvalidArgument("depth p must be >= 1".into()));
    }
    params.validate()?;
    let scale = scaling.scale_factor;
    if scale == 0.0 {
        return Err(Error::InvalidArgument(
            "gamma scale factor is zero (all-zero model has nothing to optimize)".into(),
        ));
    }
    let pf = p as f64;
    let gamma = (1..=p)
        .map(|l| -(params.gamma_intercept + params.gamma_slope / pf * (l - 1) as f64) / scale)
        .collect();
    let beta = (1..=p)
        .map(|l| params.beta_intercept - params.beta_slope / pf * (l - 1) as f64)
        .collect();
    AngleSchedule::new(gamma, beta)
}

/// Outcome of an optimizer run.
#[derive(Debug, Clone)]
pub struct OptimizationResult {
    /// Best schedule found (the initial schedule if nothing improved).
    pub schedule: AngleSchedule,
    /// Objective value at `schedule`.
    pub final_cost: f64,
    /// Objective evaluations spent.
    pub evaluations: usize,
    /// False when the budget ran out before the stopping rule fired.
    pub converged: bool,
    /// `(evaluation index, cost)` for every evaluation, in order.
    pub trace: Vec<(usize, f64)>,
}

/// Objective wrapper enforcing the evaluation budget and tracking the
/// best-so-far point (strict improvement only, so the first of equal costs
/// wins).
struct BudgetedObjective<F> {
    f: F,
    budget: usize,
    evaluations: usize,
    best_x: Vec<f64>,
    best_cost: f64,
    trace: Vec<(usize, f64)>,
}

impl<F: FnMut(&[f64]) -> Result<f64>> BudgetedObjective<F> {
    fn new(f: F, budget: usize) -> Self {
        Self {
            f,
            budget,
            evaluations: 0,
            best_x: Vec::new(),
            best_cost: f64::INFINITY,
            trace: Vec::new(),
        }
    }

    /// `Ok(None)` once the budget is spent.
    fn eval(&mut self, x: &[f64]) -> Result<Option<f64>> {
        if self.evaluations >= self.budget {
            return Ok(None);
        }
        self.evaluations += 1;
        let cost = (self.f)(x)?;
        if !cost.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "objective returned {cost} at {x:?}"
            )));
        }
        self.trace.push((self.evaluations, cost));
        if cost < self.best_cost {
            self.best_cost = cost;
            self.best_x = x.to_vec();
        }
        Ok(Some(cost))
    }
}

fn circuit_cost(diag: &CostDiagonal) -> impl FnMut(&[f64]) -> Result<f64> + '_ {
    |flat: &[f64]| {
        let schedule = AngleSchedule::from_flat(flat)?;
        let state = run_circuit(diag, &schedule)?;
        expectation(&state, diag)
    }
}

/// Quasi-Newton (BFGS) minimization of ⟨H_C⟩ over all 2p angles with
/// central finite-difference gradients, starting from `initial`. Returns the
/// best schedule seen even on non-convergence.
pub fn optimize_full(
    diag: &CostDiagonal,
    initial: &AngleSchedule,
    budget: usize,
) -> Result<OptimizationResult> {
    if budget == 0 {
        return Err(Error::InvalidArgument("budget must be > 0".into()));
    }
    let dims = 2 * initial.depth();
    let mut obj = BudgetedObjective::new(circuit_cost(diag), budget);

    let mut x = initial.to_flat();
    let mut converged = false;

    'search: {
        let Some(mut fx) = obj.eval(&x)? else {
            break 'search;
        };

        let grad = |obj: &mut BudgetedObjective<_>, x: &[f64]| -> Result<Option<Vec<f64>>> {
            let mut g = vec![0.0; dims];
            let mut probe = x.to_vec();
            for k in 0..dims {
                probe[k] = x[k] + GRADIENT_STEP;
                let Some(fp) = obj.eval(&probe)? else {
                    return Ok(None);
                };
                probe[k] = x[k] - GRADIENT_STEP;
                let Some(fm) = obj.eval(&probe)? else {
                    return Ok(None);
                };
                probe[k] = x[k];
                g[k] = (fp - fm) / (2.0 * GRADIENT_STEP);
            }
            Ok(Some(g))
        };

        let Some(mut g) = grad(&mut obj, &x)? else {
            break 'search;
        };
        // inverse-Hessian approximation, row-major
        let mut h_inv = identity(dims);

        loop {
            if g.iter().all(|v| v.abs() < GRADIENT_TOL) {
                converged = true;
                break;
            }
            let mut dir: Vec<f64> = (0..dims)
                .map(|r| -(0..dims).map(|c| h_inv[r * dims + c] * g[c]).sum::<f64>())
                .collect();
            let mut slope: f64 = dir.iter().zip(&g).map(|(d, g)| d * g).sum();
            if slope >= 0.0 {
                // stale curvature; restart from steepest descent
                h_inv = identity(dims);
                dir = g.iter().map(|v| -v).collect();
                slope = -g.iter().map(|v| v * v).sum::<f64>();
            }

            // Armijo backtracking
            let mut alpha = 1.0;
            let mut accepted: Option<(Vec<f64>, f64)> = None;
            for _ in 0..30 {
                let cand: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + alpha * di).collect();
                let Some(fc) = obj.eval(&cand)? else {
                    break 'search;
                };
                if fc <= fx + 1e-4 * alpha * slope {
                    accepted = Some((cand, fc));
                    break;
                }
                alpha *= 0.5;
            }
            let Some((x_new, f_new)) = accepted else {
                // no acceptable step along any remaining scale
                converged = true;
                break;
            };

            let Some(g_new) = grad(&mut obj, &x_new)? else {
                break 'search;
            };
            let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
            if sy > 1e-12 {
                bfgs_update(&mut h_inv, &s, &y, sy, dims);
            } else {
                h_inv = identity(dims);
            }
            x = x_new;
            fx = f_new;
            g = g_new;
        }
    }

    finish(obj, initial.to_flat(), converged, |flat| {
        AngleSchedule::from_flat(flat)
    })
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

/// H ← (I − ρsyᵀ)H(I − ρysᵀ) + ρssᵀ with ρ = 1/sᵀy.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64, n: usize) {
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n)
        .map(|r| (0..n).map(|c| h[r * n + c] * y[c]).sum())
        .collect();
    let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    for r in 0..n {
        for c in 0..n {
            h[r * n + c] += -rho * (s[r] * hy[c] + hy[r] * s[c])
                + rho * rho * yhy * s[r] * s[c]
                + rho * s[r] * s[c];
        }
    }
}

fn finish<F>(
    obj: BudgetedObjective<impl FnMut(&[f64]) -> Result<f64>>,
    fallback_x: Vec<f64>,
    converged: bool,
    schedule_of: F,
) -> Result<OptimizationResult>
where
    F: Fn(&[f64]) -> Result<AngleSchedule>,
{
    let best_x = if obj.best_x.is_empty() {
        fallback_x
    } else {
        obj.best_x
    };
    Ok(OptimizationResult {
        schedule: schedule_of(&best_x)?,
        final_cost: obj.best_cost,
        evaluations: obj.evaluations,
        converged,
        trace: obj.trace,
    })
}

/// Box bounds for the 4-parameter ramp search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampBounds {
    pub gamma_slope: (f64, f64),
    pub gamma_intercept: (f64, f64),
    pub beta_slope: (f64, f64),
    pub beta_intercept: (f64, f64),
}

impl Default for RampBounds {
    fn default() -> Self {
        let two_pi = std::f64::consts::TAU;
        Self {
            gamma_slope: (-2.0, 2.0),
            gamma_intercept: (-2.0, 2.0),
            beta_slope: (0.0, two_pi),
            beta_intercept: (0.0, two_pi),
        }
    }
}

impl RampBounds {
    fn lo_hi(&self) -> (Vec<f64>, Vec<f64>) {
        (
            vec![
                self.gamma_slope.0,
                self.gamma_intercept.0,
                self.beta_slope.0,
                self.beta_intercept.0,
            ],
            vec![
                self.gamma_slope.1,
                self.gamma_intercept.1,
                self.beta_slope.1,
                self.beta_intercept.1,
            ],
        )
    }
}

/// Box bounds for the 2-parameter γ-only search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaOnlyBounds {
    pub gamma_slope: (f64, f64),
    pub gamma_intercept: (f64, f64),
}

impl Default for GammaOnlyBounds {
    fn default() -> Self {
        Self {
            gamma_slope: (-2.0, 2.0),
            gamma_intercept: (-2.0, 2.0),
        }
    }
}

fn validate_box(lo: &[f64], hi: &[f64]) -> Result<()> {
    for (l, h) in lo.iter().zip(hi) {
        if !l.is_finite() || !h.is_finite() {
            return Err(Error::InvalidArgument("bounds must be finite".into()));
        }
        if l > h {
            return Err(Error::InvalidArgument(format!(
                "bound interval [{l}, {h}] is empty"
            )));
        }
    }
    Ok(())
}

fn clamp_to(lo: &[f64], hi: &[f64], x: &mut [f64]) {
    for k in 0..x.len() {
        x[k] = x[k].clamp(lo[k], hi[k]);
    }
}

struct SearchBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
    span: Vec<f64>,
    free: Vec<usize>,
}

enum DescentEnd {
    Converged,
    OutOfBudget,
}

/// Coordinate pattern descent: poll ±step along every free coordinate in a
/// fixed order, move on first improvement, halve the step otherwise, stop
/// once the step drops below `tol_frac` of the box span.
fn pattern_descent<F: FnMut(&[f64]) -> Result<f64>>(
    obj: &mut BudgetedObjective<F>,
    bx: &SearchBox,
    x: &mut Vec<f64>,
    fx: &mut f64,
    tol_frac: f64,
) -> Result<DescentEnd> {
    let mut step: Vec<f64> = bx.span.iter().map(|s| s / 4.0).collect();
    loop {
        let mut improved = false;
        'poll: for &k in &bx.free {
            for dir in [1.0, -1.0] {
                let mut cand = x.clone();
                cand[k] = (cand[k] + dir * step[k]).clamp(bx.lo[k], bx.hi[k]);
                if cand[k] == x[k] {
                    continue;
                }
                let Some(fc) = obj.eval(&cand)? else {
                    return Ok(DescentEnd::OutOfBudget);
                };
                if fc < *fx {
                    *x = cand;
                    *fx = fc;
                    improved = true;
                    break 'poll;
                }
            }
        }
        if !improved {
            if bx.free.iter().all(|&k| step[k] <= tol_frac * bx.span[k]) {
                return Ok(DescentEnd::Converged);
            }
            for &k in &bx.free {
                step[k] *= 0.5;
            }
        }
    }
}

/// Random-restart pattern search inside a box: descend from the start point,
/// then alternate small batches of seeded uniform samples with descents from
/// each batch's best, and spend the final quarter of the budget polishing
/// the global best at a tighter step tolerance. Returns true when at least
/// one descent converged within budget.
fn pattern_search(
    obj: &mut BudgetedObjective<impl FnMut(&[f64]) -> Result<f64>>,
    lo: &[f64],
    hi: &[f64],
    x0: &[f64],
    seed: u64,
) -> Result<bool> {
    let dims = x0.len();
    let span: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| h - l).collect();
    let free: Vec<usize> = (0..dims).filter(|&k| span[k] > 0.0).collect();
    let bx = SearchBox {
        lo: lo.to_vec(),
        hi: hi.to_vec(),
        span,
        free,
    };

    let mut x = x0.to_vec();
    clamp_to(lo, hi, &mut x);
    let Some(mut fx) = obj.eval(&x)? else {
        return Ok(false);
    };
    if bx.free.is_empty() {
        // collapsed box: its single point has been evaluated
        return Ok(true);
    }

    let budget = obj.budget;
    let polish_reserve = budget / 4;
    let explore_until = budget - polish_reserve;
    let coarse_tol = PATTERN_STEP_TOL * 10.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut any_converged = false;

    'explore: {
        if matches!(
            pattern_descent(obj, &bx, &mut x, &mut fx, coarse_tol)?,
            DescentEnd::OutOfBudget
        ) {
            break 'explore;
        }
        any_converged = true;
        while obj.evaluations < explore_until {
            // seeded sample batch; descend from its best point
            let batch = 16.min(explore_until - obj.evaluations);
            let mut batch_best: Option<(Vec<f64>, f64)> = None;
            for _ in 0..batch {
                let cand: Vec<f64> = (0..dims)
                    .map(|k| {
                        if bx.span[k] > 0.0 {
                            rng.gen_range(lo[k]..=hi[k])
                        } else {
                            lo[k]
                        }
                    })
                    .collect();
                let Some(fc) = obj.eval(&cand)? else {
                    break 'explore;
                };
                if batch_best.as_ref().is_none_or(|(_, bf)| fc < *bf) {
                    batch_best = Some((cand, fc));
                }
            }
            let Some((start, f0)) = batch_best else {
                break;
            };
            x = start;
            fx = f0;
            if matches!(
                pattern_descent(obj, &bx, &mut x, &mut fx, coarse_tol)?,
                DescentEnd::OutOfBudget
            ) {
                break 'explore;
            }
        }
        // polish the global best with the remaining budget
        x = obj.best_x.clone();
        fx = obj.best_cost;
        let _ = pattern_descent(obj, &bx, &mut x, &mut fx, PATTERN_STEP_TOL)?;
    }
    Ok(any_converged)
}

/// Derivative-free search over the four ramp parameters; the objective is
/// ⟨H_C⟩ of the expanded fixed-angle schedule.
pub fn optimize_linear_ramp(
    diag: &CostDiagonal,
    p: usize,
    initial: &LinearRampParams,
    bounds: &RampBounds,
    budget: usize,
    seed: u64,
    scaling: &GammaScaling,
) -> Result<(LinearRampParams, OptimizationResult)> {
    if budget == 0 {
        return Err(Error::InvalidArgument("budget must be > 0".into()));
    }
    let (lo, hi) = bounds.lo_hi();
    validate_box(&lo, &hi)?;
    let objective = |x: &[f64]| -> Result<f64> {
        let schedule = fixed_angle_schedule(p, &LinearRampParams::from_slice(x), scaling)?;
        let state = run_circuit(diag, &schedule)?;
        expectation(&state, diag)
    };
    let mut obj = BudgetedObjective::new(objective, budget);
    let converged = pattern_search(&mut obj, &lo, &hi, &initial.to_vec(), seed)?;
    let best_x = if obj.best_x.is_empty() {
        initial.to_vec()
    } else {
        obj.best_x.clone()
    };
    let best = LinearRampParams::from_slice(&best_x);
    let result = OptimizationResult {
        schedule: fixed_angle_schedule(p, &best, scaling)?,
        final_cost: obj.best_cost,
        evaluations: obj.evaluations,
        converged,
        trace: obj.trace,
    };
    Ok((best, result))
}

/// γ-only variant: β slope/intercept held fixed, searching the two γ
/// parameters.
#[allow(clippy::too_many_arguments)]
pub fn optimize_gamma_only(
    diag: &CostDiagonal,
    p: usize,
    fixed_beta: (f64, f64),
    initial: (f64, f64),
    bounds: &GammaOnlyBounds,
    budget: usize,
    seed: u64,
    scaling: &GammaScaling,
) -> Result<(LinearRampParams, OptimizationResult)> {
    if budget == 0 {
        return Err(Error::InvalidArgument("budget must be > 0".into()));
    }
    let lo = vec![bounds.gamma_slope.0, bounds.gamma_intercept.0];
    let hi = vec![bounds.gamma_slope.1, bounds.gamma_intercept.1];
    validate_box(&lo, &hi)?;
    let expand = |x: &[f64]| LinearRampParams {
        gamma_slope: x[0],
        gamma_intercept: x[1],
        beta_slope: fixed_beta.0,
        beta_intercept: fixed_beta.1,
    };
    let objective = |x: &[f64]| -> Result<f64> {
        let schedule = fixed_angle_schedule(p, &expand(x), scaling)?;
        let state = run_circuit(diag, &schedule)?;
        expectation(&state, diag)
    };
    let mut obj = BudgetedObjective::new(objective, budget);
    let converged = pattern_search(&mut obj, &lo, &hi, &[initial.0, initial.1], seed)?;
    let best_x = if obj.best_x.is_empty() {
        vec![initial.0, initial.1]
    } else {
        obj.best_x.clone()
    };
    let best = expand(&best_x);
    let result = OptimizationResult {
        schedule: fixed_angle_schedule(p, &best, scaling)?,
        final_cost: obj.best_cost,
        evaluations: obj.evaluations,
        converged,
        trace: obj.trace,
    };
    Ok((best, result))
}

/// What gets carried from a source instance to a target instance.
#[derive(Debug, Clone)]
pub enum TransferSource {
    /// A raw 2p schedule transfers verbatim.
    Schedule(AngleSchedule),
    /// Ramp parameters re-expand through the *target* model's γ scaling.
    RampParams(LinearRampParams),
}

/// Produce a depth-p schedule for `target` from an already-optimized source.
pub fn transfer(source: &TransferSource, target: &IsingModel, p: usize) -> Result<AngleSchedule> {
    match source {
        TransferSource::Schedule(s) => {
            if s.depth() != p {
                return Err(Error::InvalidArgument(format!(
                    "schedule depth {} does not match requested p={p}",
                    s.depth()
                )));
            }
            Ok(s.clone())
        }
        TransferSource::RampParams(params) => {
            fixed_angle_schedule(p, params, &GammaScaling::for_model(target))
        }
    }
}
