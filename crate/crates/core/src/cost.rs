//! Cost functions f(x, p) = p + Σₖ cₖ xᵏ, their operators and variances,
//! and the Gaussian-state threshold (the minimum variance over Gaussian
//! states and their mixtures).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{quadrature_operators, DensityMatrix, FockDim, Operator, C64};
use crate::gaussian::SymplecticAction;
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::poly::{MomentTable, Poly2};
use crate::wigner::WignerGrid;

/// Powers of x accepted in a cost function.
pub const SUPPORTED_POWERS: [u32; 2] = [2, 4];

/// Extra Fock levels used when forming Ô and Ô², enough that the products
/// are exact on the support of the input state.
const OPERATOR_PADDING: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostFamily {
    Cubic,
    Quintic,
}

impl fmt::Display for CostFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostFamily::Cubic => "cubic",
            CostFamily::Quintic => "quintic",
        })
    }
}

impl std::str::FromStr for CostFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cubic" => Ok(CostFamily::Cubic),
            "quintic" => Ok(CostFamily::Quintic),
            other => Err(Error::InvalidCost(format!("unknown cost family '{other}'"))),
        }
    }
}

/// f(x, p) = p + Σₖ cₖ xᵏ with k ∈ {2, 4}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostFunction {
    x_coeffs: BTreeMap<u32, f64>,
}

impl CostFunction {
    pub fn new(x_coeffs: BTreeMap<u32, f64>) -> Result<Self> {
        for (&k, &c) in &x_coeffs {
            if !SUPPORTED_POWERS.contains(&k) {
                return Err(Error::InvalidCost(format!(
                    "power x^{k} is not supported (allowed: 2, 4)"
                )));
            }
            if !c.is_finite() {
                return Err(Error::InvalidCost(format!(
                    "coefficient of x^{k} is not finite"
                )));
            }
        }
        if x_coeffs.values().all(|&c| c == 0.0) {
            return Err(Error::InvalidCost(
                "at least one x coefficient must be nonzero".into(),
            ));
        }
        Ok(CostFunction { x_coeffs })
    }

    /// p + z x².
    pub fn cubic(z: f64) -> Result<Self> {
        Self::new(BTreeMap::from([(2, z)]))
    }

    /// p + s x² + r4 x⁴.
    pub fn quintic(s: f64, r4: f64) -> Result<Self> {
        Self::new(BTreeMap::from([(2, s), (4, r4)]))
    }

    pub fn coeff(&self, power: u32) -> f64 {
        self.x_coeffs.get(&power).copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> &BTreeMap<u32, f64> {
        &self.x_coeffs
    }

    pub fn family(&self) -> CostFamily {
        if self.x_coeffs.contains_key(&4) {
            CostFamily::Quintic
        } else {
            CostFamily::Cubic
        }
    }

    /// f as a phase-space polynomial.
    pub fn poly(&self) -> Poly2 {
        self.transformed(&SymplecticAction::identity())
    }

    /// f(M r + d): the Weyl symbol of U†ÔU for the Gaussian unitary with
    /// phase-space action (M, d).
    pub fn transformed(&self, action: &SymplecticAction) -> Poly2 {
        let (m, d) = (&action.m, &action.d);
        let xq = Poly2::linear(m[0][0], m[0][1], d[0]);
        let mut f = Poly2::linear(m[1][0], m[1][1], d[1]);
        let x2 = xq.mul(&xq);
        for (&k, &c) in &self.x_coeffs {
            match k {
                2 => f.add_scaled(&x2, c),
                4 => f.add_scaled(&x2.mul(&x2), c),
                _ => unreachable!("validated power"),
            }
        }
        f
    }
}

impl fmt::Display for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family() {
            CostFamily::Cubic => write!(f, "cubic:z={}", self.coeff(2)),
            CostFamily::Quintic => write!(f, "quintic:s={},r4={}", self.coeff(2), self.coeff(4)),
        }
    }
}

/// Ô = p̂ + Σₖ cₖ x̂ᵏ. Entries near the truncation edge inherit the usual
/// truncation artifacts of x̂ᵏ.
pub fn cost_operator(cost: &CostFunction, dim: FockDim) -> Operator {
    let (x, p) = quadrature_operators(dim);
    let x2 = &x * &x;
    let mut o = p;
    for (&k, &c) in cost.coeffs() {
        let term = match k {
            2 => x2.clone(),
            4 => &x2 * &x2,
            _ => unreachable!("validated power"),
        };
        o = &o + &term.scale(C64::new(c, 0.0));
    }
    o
}

/// Tr[ρÔ²] − Tr[ρÔ]².
///
/// The operator is built in a space padded by a few levels so that Ô² is
/// exact on the support of ρ.
pub fn variance_of(rho: &DensityMatrix, cost: &CostFunction) -> Result<f64> {
    let dim = rho.dim();
    let big = dim.padded(OPERATOR_PADDING);
    let o = cost_operator(cost, big);
    let o2 = &o * &o;
    let rho_big = rho.resized(big);
    let m1 = rho_big.expectation(&o)?.re;
    let m2 = rho_big.expectation(&o2)?.re;
    Ok(m2 - m1 * m1)
}

/// Same quantity from the Weyl moments of ρ.
pub fn variance_from_moments(moments: &MomentTable, cost: &CostFunction) -> f64 {
    moments.variance(&cost.poly())
}

/// Variance of f for a Gaussian Wigner function with the given mean and
/// covariance (moments by Wick's theorem).
pub fn gaussian_state_variance(cost: &CostFunction, mean: [f64; 2], cov: [[f64; 2]; 2]) -> f64 {
    MomentTable::gaussian(mean, cov).variance(&cost.poly())
}

/// Pure Gaussian state reaching the threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianStateParams {
    pub mean_x: f64,
    pub mean_p: f64,
    /// ζ ≥ 0: covariance eigenvalues are e^{∓2ζ}/2.
    pub squeezing: f64,
    /// Orientation of the squeezed axis in [0, π).
    pub rotation: f64,
}

impl GaussianStateParams {
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.rotation.sin_cos();
        let lo = (-2.0 * self.squeezing).exp() / 2.0;
        let hi = (2.0 * self.squeezing).exp() / 2.0;
        [
            [lo * c * c + hi * s * s, (lo - hi) * c * s],
            [(lo - hi) * c * s, lo * s * s + hi * c * c],
        ]
    }

    fn from_covariance(mean: [f64; 2], cov: [[f64; 2]; 2]) -> Self {
        let (a, b, d) = (cov[0][0], cov[0][1], cov[1][1]);
        let tr = a + d;
        let disc = ((a - d).powi(2) / 4.0 + b * b).sqrt();
        let lo = tr / 2.0 - disc;
        let mut angle = if b.abs() < 1e-300 && a <= d {
            0.0
        } else if b.abs() < 1e-300 {
            std::f64::consts::FRAC_PI_2
        } else {
            (lo - a).atan2(b)
        };
        angle = angle.rem_euclid(std::f64::consts::PI);
        GaussianStateParams {
            mean_x: mean[0],
            mean_p: mean[1],
            squeezing: -0.5 * (2.0 * lo).ln(),
            rotation: angle,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianThreshold {
    pub value: f64,
    pub argmin: GaussianStateParams,
    pub converged: bool,
}

/// 3/2^{5/3} |z|^{2/3}: the threshold of p + z x².
pub fn cubic_threshold_analytic(z: f64) -> f64 {
    3.0 / 2f64.powf(5.0 / 3.0) * z.abs().powf(2.0 / 3.0)
}

/// Points of the coarse ln v scan.
const SCAN_POINTS: usize = 241;
/// Scan minima refined by a local search.
const REFINED_MINIMA: usize = 3;

/// Variance of f for the best pure Gaussian with mean x̄ = `mean` and
/// Vxx = v, with the x–p correlation chosen optimally.
///
/// Write p = κ(x − x̄) + η with η independent of x and Var η = 1/(4v).
/// The optimal κ cancels the linear part of g, and expanding
/// g(x̄ + √v u) = Σ aₙ Heₙ(u) in Hermite polynomials gives
/// Var f = 1/(4v) + Σ_{n≥2} n! aₙ², a sum of squares. Returns the value and
/// Cov(x, g), from which the argmin covariance follows.
fn reduced_threshold(c2: f64, c4: f64, mean: f64, v: f64) -> (f64, f64) {
    // Taylor coefficients of g about x̄.
    let b1 = 2.0 * c2 * mean + 4.0 * c4 * mean.powi(3);
    let b2 = c2 + 6.0 * c4 * mean * mean;
    let b3 = 4.0 * c4 * mean;
    let b4 = c4;
    let a2 = b2 * v + 6.0 * b4 * v * v;
    let a3 = b3 * v.powf(1.5);
    let a4 = b4 * v * v;
    let value = 0.25 / v + 2.0 * a2 * a2 + 6.0 * a3 * a3 + 24.0 * a4 * a4;
    (value, b1 * v + 3.0 * b3 * v * v)
}

/// Best x̄ for a given v. The objective is 2(A + By)² + Cy + const in
/// y = x̄² with A = c₂v + 6c₄v², B = 6c₄v, C = 96c₄²v³, so the optimum is
/// y = max(0, −(4AB + C)/(4B²)).
fn best_mean(c2: f64, c4: f64, v: f64) -> f64 {
    if c4 == 0.0 {
        return 0.0;
    }
    let a = c2 * v + 6.0 * c4 * v * v;
    let b = 6.0 * c4 * v;
    let c = 96.0 * c4 * c4 * v.powi(3);
    (-(4.0 * a * b + c) / (4.0 * b * b)).max(0.0).sqrt()
}

fn profile(c2: f64, c4: f64, log_v: f64) -> f64 {
    let v = log_v.exp();
    reduced_threshold(c2, c4, best_mean(c2, c4, v), v).0
}

/// ln v optimal for the local quadratic approximation of g at each of its
/// critical points (x = 0, and ±√(−c₂/2c₄) when c₂c₄ < 0).
fn critical_log_vs(c2: f64, c4: f64) -> Vec<f64> {
    let log_v = |z: f64| {
        if z == 0.0 {
            -std::f64::consts::LN_2
        } else {
            -(16.0 * z * z).ln() / 3.0
        }
    };
    let mut out = vec![log_v(c2)];
    if c2 * c4 < 0.0 {
        out.push(log_v(-2.0 * c2));
    }
    out
}

/// Minimum of Var f over pure Gaussian states (mixtures cannot go lower
/// because the variance is concave in the state).
///
/// The mean x̄ and the x–p correlation are eliminated in closed form and the
/// p-mean drops out, leaving a one-dimensional problem in ln Vxx: a scan
/// over ±8 around the local-quadratic estimates, then a simplex refinement
/// of the lowest scan minima.
pub fn gaussian_threshold(cost: &CostFunction) -> Result<GaussianThreshold> {
    let c2 = cost.coeff(2);
    let c4 = cost.coeff(4);
    let guesses = critical_log_vs(c2, c4);
    let lo = guesses.iter().cloned().fold(f64::INFINITY, f64::min) - 8.0;
    let hi = guesses.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 8.0;
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let scan: Vec<f64> = (0..SCAN_POINTS)
        .map(|k| profile(c2, c4, lo + step * k as f64))
        .collect();

    let mut minima: Vec<usize> = (0..SCAN_POINTS)
        .filter(|&k| {
            (k == 0 || scan[k] <= scan[k - 1]) && (k + 1 == SCAN_POINTS || scan[k] <= scan[k + 1])
        })
        .collect();
    minima.sort_by(|&a, &b| scan[a].total_cmp(&scan[b]));
    minima.truncate(REFINED_MINIMA);

    let opts = NelderMeadOptions {
        max_evals: 500,
        f_tol: 1e-15,
        x_tol: 1e-10,
        restarts: 1,
    };
    let runs: Vec<_> = minima
        .iter()
        .map(|&k| {
            nelder_mead(
                |x: &[f64]| profile(c2, c4, x[0]),
                &[lo + step * k as f64],
                &[step],
                &opts,
            )
        })
        .collect();
    let best = runs
        .iter()
        .min_by(|a, b| a.f.total_cmp(&b.f))
        .expect("scan has at least one minimum");
    let value = best.f;
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::NonPositiveThreshold(value));
    }
    let converged = runs
        .iter()
        .any(|r| r.converged && r.f - value <= 1e-10 * value.abs().max(1.0));
    let vxx = best.x[0].exp();
    let mean = best_mean(c2, c4, vxx);
    let (_, cov_xg) = reduced_threshold(c2, c4, mean, vxx);
    let vxp = -cov_xg;
    let vpp = 0.25 / vxx + vxp * vxp / vxx;
    Ok(GaussianThreshold {
        value,
        argmin: GaussianStateParams::from_covariance([mean, 0.0], [[vxx, vxp], [vxp, vpp]]),
        converged,
    })
}

/// ∫W f² − (∫W f)² on the grid (rectangle rule).
pub fn phase_space_variance(cost: &CostFunction, grid: &WignerGrid) -> Result<f64> {
    let mass = grid.total_mass();
    if mass < 0.999 {
        return Err(Error::GridCoverage(format!(
            "integrated Wigner mass {mass:.5} is below 0.999"
        )));
    }
    let poly = cost.poly();
    let cell = grid.cell_area();
    let (mut m1, mut m2) = (0.0, 0.0);
    for (i, &x) in grid.x_axis().iter().enumerate() {
        for (j, &p) in grid.p_axis().iter().enumerate() {
            let w = grid.value(i, j) * cell;
            let f = poly.eval(x, p);
            m1 += w * f;
            m2 += w * f * f;
        }
    }
    Ok(m2 - m1 * m1)
}
