//! Nonlinear squeezing ξ: the cost-function variance of a state, minimized
//! over Gaussian unitaries (and, for the quintic family, the cost
//! parameters), divided by the minimum over Gaussian states.
//!
//! The nominator is evaluated from the Weyl moments of the state: the
//! symbol of U†ÔU is f(Mr + d), so every candidate U_G costs one
//! polynomial contraction and no Fock-space products.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{gaussian_threshold, CostFamily, CostFunction};
use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, C64};
use crate::gaussian::{symplectic_of, GaussianUnitaryParams};
use crate::optim::{halton_in_box, nelder_mead, NelderMeadOptions};
use crate::poly::MomentTable;
use crate::states::{MAX_ALPHA, MAX_SQUEEZE};

/// ξ must fall below 1 − `CERTIFY_MARGIN` to certify; the margin absorbs
/// round-off in the threshold minimization.
pub const CERTIFY_MARGIN: f64 = 1e-8;

/// Search box for the quintic cost parameters.
pub const S_RANGE: (f64, f64) = (1e-3, 4.0);
pub const R4_RANGE: (f64, f64) = (-2.0, 2.0);
/// Start box for each displacement component.
pub const ALPHA_START_BOX: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerBudget {
    pub n_starts: usize,
    pub max_evals: usize,
    pub tolerance: f64,
}

impl Default for OptimizerBudget {
    fn default() -> Self {
        OptimizerBudget {
            n_starts: 32,
            max_evals: 4000,
            tolerance: 1e-10,
        }
    }
}

impl OptimizerBudget {
    pub fn new(n_starts: usize, max_evals: usize, tolerance: f64) -> Result<Self> {
        let b = OptimizerBudget {
            n_starts,
            max_evals,
            tolerance,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_starts == 0 || self.max_evals == 0 || !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "optimizer budget must be positive, got {}:{}:{}",
                self.n_starts, self.max_evals, self.tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessDiagnostics {
    pub family: CostFamily,
    pub n_starts: usize,
    pub total_evals: usize,
    pub converged_starts: usize,
    /// Index of the winning start (0 is the moment-matched start; seeded
    /// starts, if any, follow the low-discrepancy ones).
    pub best_start: usize,
    pub best_converged: bool,
    pub threshold_converged: bool,
    /// Parameters of the best point that sit on a search bound.
    pub on_bound: Vec<String>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessResult {
    pub xi: f64,
    pub best_unitary: GaussianUnitaryParams,
    pub best_cost: CostFunction,
    pub nominator: f64,
    pub denominator: f64,
    pub certified_non_gaussian: bool,
    pub diagnostics: WitnessDiagnostics,
}

/// Variance of the cost for U_G ρ U_G†, from the state's Weyl moments.
pub fn nominator(moments: &MomentTable, cost: &CostFunction, ug: &GaussianUnitaryParams) -> f64 {
    moments.variance(&cost.transformed(&symplectic_of(ug)))
}

/// ξ for a fixed unitary and cost.
pub fn xi_at(rho: &DensityMatrix, cost: &CostFunction, ug: &GaussianUnitaryParams) -> Result<f64> {
    ug.validate()?;
    let threshold = gaussian_threshold(cost)?;
    let moments = MomentTable::weyl_moments(rho);
    Ok(nominator(&moments, cost, ug) / threshold.value)
}

/// ξ minimized over Gaussian unitaries (and quintic cost parameters), using
/// the default start sequence.
pub fn nonlinear_squeezing(
    rho: &DensityMatrix,
    family: CostFamily,
    budget: &OptimizerBudget,
) -> Result<WitnessResult> {
    nonlinear_squeezing_seeded(rho, family, budget, 0)
}

/// As [`nonlinear_squeezing`], with the low-discrepancy starts shifted by
/// `seed · n_starts` sequence positions.
pub fn nonlinear_squeezing_seeded(
    rho: &DensityMatrix,
    family: CostFamily,
    budget: &OptimizerBudget,
    seed: u64,
) -> Result<WitnessResult> {
    budget.validate()?;
    let moments = MomentTable::weyl_moments(rho);
    let cubic = search_cubic(&moments, budget, seed)?;
    match family {
        CostFamily::Cubic => Ok(cubic),
        CostFamily::Quintic => search_quintic(&moments, budget, seed, &cubic),
    }
}

/// Packed search vector → unitary, projected onto the supported regime.
fn unpack_unitary(v: &[f64]) -> GaussianUnitaryParams {
    let mut alpha = C64::new(v[3], v[4]);
    let norm = alpha.norm();
    if norm > MAX_ALPHA {
        alpha *= MAX_ALPHA / norm;
    }
    GaussianUnitaryParams {
        theta: v[0].rem_euclid(std::f64::consts::TAU),
        phi: v[1].rem_euclid(std::f64::consts::TAU),
        r: v[2].clamp(-MAX_SQUEEZE, MAX_SQUEEZE),
        alpha,
    }
}

fn pack_unitary(u: &GaussianUnitaryParams) -> Vec<f64> {
    vec![u.theta, u.phi, u.r, u.alpha.re, u.alpha.im]
}

fn unpack_quintic(v: &[f64]) -> (f64, f64) {
    (
        v[5].clamp(S_RANGE.0, S_RANGE.1),
        v[6].clamp(R4_RANGE.0, R4_RANGE.1),
    )
}

/// U_G that centers the state and applies the squeezing optimal for a
/// vacuum-like input and the cubic cost p + x².
fn moment_matched_start(moments: &MomentTable) -> Vec<f64> {
    let r = std::f64::consts::LN_2 / 6.0;
    let mean = [moments.get(1, 0), moments.get(0, 1)];
    // θ = φ = 0: U†rU = S r + d with d = √2(Re α, Im α); centering needs
    // d = −S·mean.
    let e = [(-r).exp(), r.exp()];
    let s2 = std::f64::consts::SQRT_2;
    vec![0.0, 0.0, r, -e[0] * mean[0] / s2, -e[1] * mean[1] / s2]
}

fn unitary_starts(
    moments: &MomentTable,
    count: usize,
    seed: u64,
    extra_dims: (&[f64], &[f64]),
) -> Vec<Vec<f64>> {
    let tau = std::f64::consts::TAU;
    let mut lo = vec![0.0, 0.0, -MAX_SQUEEZE, -ALPHA_START_BOX, -ALPHA_START_BOX];
    let mut hi = vec![tau, tau, MAX_SQUEEZE, ALPHA_START_BOX, ALPHA_START_BOX];
    lo.extend_from_slice(extra_dims.0);
    hi.extend_from_slice(extra_dims.1);
    let mut first = moment_matched_start(moments);
    // Extra coordinates of the anchor start sit at the box centre, with the
    // quintic s at 1 so that the cubic cost is reachable immediately.
    for (l, h) in extra_dims.0.iter().zip(extra_dims.1) {
        first.push(0.5 * (l + h));
    }
    if extra_dims.0.len() == 2 {
        first[5] = 1.0;
        first[6] = 0.0;
    }
    let mut starts = vec![first];
    if count > 1 {
        starts.extend(halton_in_box(count - 1, seed * count as u64, &lo, &hi));
    }
    starts
}

fn step_for(dim: usize) -> Vec<f64> {
    let mut step = vec![0.6, 0.6, 0.25, 0.4, 0.4];
    step.resize(dim, 0.3);
    step
}

struct Run {
    x: Vec<f64>,
    f: f64,
    evals: usize,
    converged: bool,
}

/// Runs the local searches in parallel; the result order follows `starts`.
fn run_starts<F>(objective: F, starts: &[Vec<f64>], budget: &OptimizerBudget) -> Vec<Run>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let opts = NelderMeadOptions {
        max_evals: budget.max_evals,
        f_tol: budget.tolerance,
        x_tol: budget.tolerance.sqrt(),
        restarts: 2,
    };
    starts
        .par_iter()
        .map(|s| {
            let step = step_for(s.len());
            let r = nelder_mead(&objective, s, &step, &opts);
            Run {
                x: r.x,
                f: r.f,
                evals: r.evals,
                converged: r.converged,
            }
        })
        .collect()
}

/// Lowest value, ties broken by the lowest start index.
fn best_index(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = k;
        }
    }
    best
}

fn bounds_hit(u: &GaussianUnitaryParams, quintic: Option<(f64, f64)>) -> Vec<String> {
    let eps = 1e-9;
    let mut out = Vec::new();
    if u.r.abs() >= MAX_SQUEEZE - eps {
        out.push(format!("r={}", u.r));
    }
    if u.alpha.norm() >= MAX_ALPHA - eps {
        out.push(format!("|alpha|={}", u.alpha.norm()));
    }
    if let Some((s, r4)) = quintic {
        if s <= S_RANGE.0 + eps || s >= S_RANGE.1 - eps {
            out.push(format!("s={s}"));
        }
        if r4 <= R4_RANGE.0 + eps || r4 >= R4_RANGE.1 - eps {
            out.push(format!("r4={r4}"));
        }
    }
    out
}

fn search_cubic(
    moments: &MomentTable,
    budget: &OptimizerBudget,
    seed: u64,
) -> Result<WitnessResult> {
    let cost = CostFunction::cubic(1.0)?;
    let threshold = gaussian_threshold(&cost)?;
    let starts = unitary_starts(moments, budget.n_starts, seed, (&[], &[]));
    let objective = |v: &[f64]| nominator(moments, &cost, &unpack_unitary(v));
    let runs = run_starts(objective, &starts, budget);

    let values: Vec<f64> = runs.iter().map(|r| r.f).collect();
    let best = best_index(&values);
    let unitary = unpack_unitary(&runs[best].x);
    let nom = nominator(moments, &cost, &unitary);
    let xi = nom / threshold.value;
    Ok(WitnessResult {
        xi,
        best_unitary: unitary,
        best_cost: cost,
        nominator: nom,
        denominator: threshold.value,
        certified_non_gaussian: xi < 1.0 - CERTIFY_MARGIN,
        diagnostics: WitnessDiagnostics {
            family: CostFamily::Cubic,
            n_starts: starts.len(),
            total_evals: runs.iter().map(|r| r.evals).sum(),
            converged_starts: runs.iter().filter(|r| r.converged).count(),
            best_start: best,
            best_converged: runs[best].converged,
            threshold_converged: threshold.converged,
            on_bound: bounds_hit(&unitary, None),
            seed,
        },
    })
}

fn search_quintic(
    moments: &MomentTable,
    budget: &OptimizerBudget,
    seed: u64,
    cubic: &WitnessResult,
) -> Result<WitnessResult> {
    let mut starts = unitary_starts(
        moments,
        budget.n_starts,
        seed,
        (&[S_RANGE.0, R4_RANGE.0], &[S_RANGE.1, R4_RANGE.1]),
    );
    // The best cubic point, embedded as s = 1, r4 = 0.
    let mut from_cubic = pack_unitary(&cubic.best_unitary);
    from_cubic.extend_from_slice(&[1.0, 0.0]);
    starts.push(from_cubic);

    let objective = |v: &[f64]| {
        let (s, r4) = unpack_quintic(v);
        let Ok(cost) = CostFunction::quintic(s, r4) else {
            return f64::INFINITY;
        };
        match gaussian_threshold(&cost) {
            Ok(t) => nominator(moments, &cost, &unpack_unitary(v)) / t.value,
            Err(_) => f64::INFINITY,
        }
    };
    let runs = run_starts(objective, &starts, budget);

    let values: Vec<f64> = runs.iter().map(|r| r.f).collect();
    let k = best_index(&values);
    let (s0, r40) = unpack_quintic(&runs[k].x);
    let cost = CostFunction::quintic(s0, r40)?;
    let threshold = gaussian_threshold(&cost)?;
    let nom0 = nominator(moments, &cost, &unpack_unitary(&runs[k].x));
    let best = (
        k,
        nom0 / threshold.value,
        nom0,
        threshold.value,
        threshold.converged,
    );
    let (k, mut xi, mut nom, mut den, mut thr_conv) = best;
    let mut unitary = unpack_unitary(&runs[k].x);
    let (mut s, mut r4) = (s0, r40);
    // The cubic cost is a member of the quintic family.
    if xi > cubic.xi {
        xi = cubic.xi;
        nom = cubic.nominator;
        den = cubic.denominator;
        thr_conv = cubic.diagnostics.threshold_converged;
        unitary = cubic.best_unitary;
        s = 1.0;
        r4 = 0.0;
    }
    Ok(WitnessResult {
        xi,
        best_unitary: unitary,
        best_cost: CostFunction::quintic(s, r4)?,
        nominator: nom,
        denominator: den,
        certified_non_gaussian: xi < 1.0 - CERTIFY_MARGIN,
        diagnostics: WitnessDiagnostics {
            family: CostFamily::Quintic,
            n_starts: starts.len(),
            total_evals: runs.iter().map(|r| r.evals).sum(),
            converged_starts: runs.iter().filter(|r| r.converged).count(),
            best_start: k,
            best_converged: runs[k].converged,
            threshold_converged: thr_conv,
            on_bound: bounds_hit(&unitary, Some((s, r4))),
            seed,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestPoint {
    pub unitary: GaussianUnitaryParams,
    pub cost: CostFunction,
    pub nominator: f64,
    pub denominator: f64,
}

impl From<&WitnessResult> for BestPoint {
    fn from(w: &WitnessResult) -> Self {
        BestPoint {
            unitary: w.best_unitary,
            cost: w.best_cost.clone(),
            nominator: w.nominator,
            denominator: w.denominator,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestParams {
    pub cubic: BestPoint,
    pub quintic: BestPoint,
}

/// Bootstrap spread of ξ, attached when the report comes from sampled data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub family: CostFamily,
    pub n_resamples: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyDiagnostics {
    pub xi_min: f64,
    pub cubic: WitnessDiagnostics,
    pub quintic: WitnessDiagnostics,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bootstrap: Vec<BootstrapSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub xi_cubic: f64,
    pub xi_quintic: f64,
    pub certified: bool,
    pub best_params: BestParams,
    pub diagnostics: CertifyDiagnostics,
}

impl CertifyReport {
    pub fn xi_min(&self) -> f64 {
        self.xi_cubic.min(self.xi_quintic)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Both witness families and the verdict.
pub fn certify(rho: &DensityMatrix, budget: &OptimizerBudget) -> Result<CertifyReport> {
    budget.validate()?;
    let moments = MomentTable::weyl_moments(rho);
    let cubic = search_cubic(&moments, budget, 0)?;
    let quintic = search_quintic(&moments, budget, 0, &cubic)?;
    let xi_min = cubic.xi.min(quintic.xi);
    Ok(CertifyReport {
        xi_cubic: cubic.xi,
        xi_quintic: quintic.xi,
        certified: xi_min < 1.0 - CERTIFY_MARGIN,
        best_params: BestParams {
            cubic: BestPoint::from(&cubic),
            quintic: BestPoint::from(&quintic),
        },
        diagnostics: CertifyDiagnostics {
            xi_min,
            cubic: cubic.diagnostics,
            quintic: quintic.diagnostics,
            bootstrap: Vec::new(),
        },
    })
}
