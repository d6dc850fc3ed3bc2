use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::pdf::{hermite_functions, quadrature_pdf};
use super::{group_by_phase, QuadratureRecord};
use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, FockDim, C64};
use crate::states::loss_adjoint_real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TomographyConfig {
    pub n_levels: FockDim,
    /// Histogram bin width in quadrature units.
    pub bin_width: f64,
    /// Detector efficiency; POVM elements are pulled back through a loss
    /// channel of this transmittance.
    pub efficiency: f64,
    pub max_iters: usize,
    /// Stop once an iteration raises the mean log-likelihood by less.
    pub stop_tol: f64,
    /// Histogram half-width; `None` picks max(6, √(2N+1) + 3) for N levels.
    pub x_limit: Option<f64>,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        TomographyConfig {
            n_levels: FockDim::new(25).expect("valid"),
            bin_width: 0.05,
            efficiency: 1.0,
            max_iters: 5000,
            stop_tol: 1e-10,
            x_limit: None,
        }
    }
}

impl TomographyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bin_width > 0.0) || !self.bin_width.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "bin_width must be positive, got {}",
                self.bin_width
            )));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "efficiency must lie in (0, 1], got {}",
                self.efficiency
            )));
        }
        if self.max_iters == 0 || !(self.stop_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "max_iters and stop_tol must be positive".into(),
            ));
        }
        if let Some(l) = self.x_limit {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "x_limit must be positive, got {l}"
                )));
            }
        }
        Ok(())
    }

    pub fn half_width(&self) -> f64 {
        self.x_limit
            .unwrap_or_else(|| ((2.0 * self.n_levels.get() as f64 + 1.0).sqrt() + 3.0).max(6.0))
    }

    fn n_bins(&self) -> usize {
        (2.0 * self.half_width() / self.bin_width).ceil() as usize
    }
}

/// Histogram counts (or probabilities) per phase over uniform bins covering
/// [−L, L].
#[derive(Clone, Debug, PartialEq)]
pub struct BinnedData {
    pub thetas: Vec<f64>,
    pub half_width: f64,
    pub bin_width: f64,
    /// counts[phase][bin].
    pub counts: Vec<Vec<f64>>,
    /// Records that fell outside [−L, L].
    pub dropped: usize,
}

impl BinnedData {
    pub fn from_records(records: &[QuadratureRecord], config: &TomographyConfig) -> Result<Self> {
        config.validate()?;
        if records.is_empty() {
            return Err(Error::InvalidParameter("no quadrature records".into()));
        }
        let half = config.half_width();
        let n_bins = config.n_bins();
        let mut dropped = 0;
        let groups = group_by_phase(records);
        let mut counts = vec![vec![0.0; n_bins]; groups.len()];
        for (k, (_, xs)) in groups.iter().enumerate() {
            for &x in xs {
                let b = ((x + half) / config.bin_width).floor();
                if b < 0.0 || b >= n_bins as f64 {
                    dropped += 1;
                } else {
                    counts[k][b as usize] += 1.0;
                }
            }
        }
        Ok(BinnedData {
            thetas: groups.iter().map(|(t, _)| *t).collect(),
            half_width: half,
            bin_width: config.bin_width,
            counts,
            dropped,
        })
    }

    /// Exact bin probabilities of `rho` at the given phases: the
    /// infinite-data limit of [`BinnedData::from_records`].
    pub fn exact(rho: &DensityMatrix, thetas: &[f64], config: &TomographyConfig) -> Result<Self> {
        config.validate()?;
        let half = config.half_width();
        let n_bins = config.n_bins();
        let counts = thetas
            .iter()
            .map(|&t| {
                let pdf = quadrature_pdf(rho, t);
                (0..n_bins)
                    .map(|b| {
                        let lo = -half + b as f64 * config.bin_width;
                        gauss_legendre(lo, lo + config.bin_width, |x| pdf.density(x))
                    })
                    .collect()
            })
            .collect();
        Ok(BinnedData {
            thetas: thetas.to_vec(),
            half_width: half,
            bin_width: config.bin_width,
            counts,
            dropped: 0,
        })
    }

    fn n_bins(&self) -> usize {
        self.counts.first().map_or(0, |c| c.len())
    }
}

const GL_NODES: [f64; 6] = [
    -0.932_469_514_203_152,
    -0.661_209_386_466_264_5,
    -0.238_619_186_083_196_9,
    0.238_619_186_083_196_9,
    0.661_209_386_466_264_5,
    0.932_469_514_203_152,
];
const GL_WEIGHTS: [f64; 6] = [
    0.171_324_492_379_170_3,
    0.360_761_573_048_138_6,
    0.467_913_934_572_691,
    0.467_913_934_572_691,
    0.360_761_573_048_138_6,
    0.171_324_492_379_170_3,
];

fn gauss_legendre(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    GL_NODES
        .iter()
        .zip(&GL_WEIGHTS)
        .map(|(u, w)| w * f(c + h * u))
        .sum::<f64>()
        * h
}

/// Bin-integrated position projectors G_b[m][n] = ∫_b ψ_m ψ_n dx, row-major,
/// optionally pulled back through the detector loss.
fn bin_operators(n: usize, half: f64, width: f64, n_bins: usize, efficiency: f64) -> Vec<Vec<f64>> {
    (0..n_bins)
        .map(|b| {
            let lo = -half + b as f64 * width;
            let (c, h) = (lo + 0.5 * width, 0.5 * width);
            let mut g = DMatrix::<f64>::zeros(n, n);
            for (u, w) in GL_NODES.iter().zip(&GL_WEIGHTS) {
                let psi = hermite_functions(c + h * u, n);
                for i in 0..n {
                    for j in 0..n {
                        g[(i, j)] += w * h * psi[i] * psi[j];
                    }
                }
            }
            let g = if efficiency < 1.0 {
                loss_adjoint_real(&g, efficiency)
            } else {
                g
            };
            g.transpose().as_slice().to_vec()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographyResult {
    pub state: DensityMatrix,
    /// Mean log-likelihood per record after each accepted step (first entry
    /// is the starting point).
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    /// False when `max_iters` was reached first.
    pub converged: bool,
    pub dropped_records: usize,
}

/// Maximum-likelihood state from phase-resolved quadrature records.
pub fn ml_reconstruct(
    records: &[QuadratureRecord],
    config: &TomographyConfig,
) -> Result<TomographyResult> {
    let data = BinnedData::from_records(records, config)?;
    ml_reconstruct_binned(&data, config)
}

/// Maximum-likelihood state from histogram counts or probabilities.
pub fn ml_reconstruct_binned(
    data: &BinnedData,
    config: &TomographyConfig,
) -> Result<TomographyResult> {
    reconstruct_from(data, config, None)
}

struct Model<'a> {
    n: usize,
    povm: Vec<Vec<f64>>,
    data: &'a BinnedData,
    total: f64,
    /// Empirical frequencies per phase and bin.
    freqs: Vec<Vec<f64>>,
    /// Mean log-likelihood of the empirical frequencies themselves.
    offset: f64,
    /// Per phase: e^{iθ(m−l)} for the row-major entry (m, l).
    phases: Vec<Vec<C64>>,
}

impl<'a> Model<'a> {
    fn new(data: &'a BinnedData, config: &TomographyConfig) -> Result<Self> {
        let n = config.n_levels.get();
        let total: f64 = data.counts.iter().flatten().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidParameter("histogram is empty".into()));
        }
        let povm = bin_operators(
            n,
            data.half_width,
            data.bin_width,
            data.n_bins(),
            config.efficiency,
        );
        let phases = data
            .thetas
            .iter()
            .map(|&t| {
                (0..n * n)
                    .map(|k| C64::from_polar(1.0, t * ((k / n) as f64 - (k % n) as f64)))
                    .collect()
            })
            .collect();
        let freqs: Vec<Vec<f64>> = data
            .counts
            .iter()
            .map(|c| {
                let nk: f64 = c.iter().sum();
                c.iter()
                    .map(|v| if nk > 0.0 { v / nk } else { 0.0 })
                    .collect()
            })
            .collect();
        let offset = data
            .counts
            .iter()
            .flatten()
            .zip(freqs.iter().flatten())
            .filter(|(c, _)| **c > 0.0)
            .map(|(c, q)| c * q.ln())
            .sum::<f64>()
            / total;
        Ok(Model {
            n,
            povm,
            data,
            total,
            freqs,
            offset,
            phases,
        })
    }

    /// Mean log-likelihood relative to the empirical frequencies (add
    /// `offset` for the absolute value) and the operator R = Σ (f_j / p_j) Π_j.
    /// The relative form keeps the tiny gains near the optimum resolvable.
    fn evaluate(&self, rho: &DMatrix<C64>) -> (f64, DMatrix<C64>) {
        let n = self.n;
        let mut ll = 0.0;
        let mut r = DMatrix::<C64>::zeros(n, n);
        let mut rotated = vec![0.0; n * n];
        let mut weights = vec![0.0; n * n];
        for (k, counts) in self.data.counts.iter().enumerate() {
            let ph = &self.phases[k];
            // Re⟨m|R†ρR|l⟩ = Re(ρ_ml e^{−iθ(m−l)}).
            for m in 0..n {
                for l in 0..n {
                    rotated[m * n + l] = (rho[(m, l)] * ph[m * n + l].conj()).re;
                }
            }
            weights.iter_mut().for_each(|w| *w = 0.0);
            for (b, &c) in counts.iter().enumerate() {
                if c <= 0.0 {
                    continue;
                }
                let g = &self.povm[b];
                let q = self.freqs[k][b];
                let p: f64 = rotated
                    .iter()
                    .zip(g)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    .max(1e-300);
                ll += c * ((p - q) / q).ln_1p();
                let w = c / (p * self.total);
                weights
                    .iter_mut()
                    .zip(g)
                    .for_each(|(acc, gv)| *acc += w * gv);
            }
            for m in 0..n {
                for l in 0..n {
                    r[(m, l)] += ph[m * n + l] * weights[m * n + l];
                }
            }
        }
        (ll / self.total, r)
    }
}

/// Smallest dilution weight tried before declaring a stall.
const MIN_DILUTION: f64 = 1e-10;

/// Unit-trace factor A with ρ = AA†.
fn factor_of(rho: &DMatrix<C64>) -> DMatrix<C64> {
    let h = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let d = eig.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0));
    normalized(&eig.eigenvectors * DMatrix::from_diagonal(&d))
}

fn normalized(a: DMatrix<C64>) -> DMatrix<C64> {
    let norm = a.norm();
    a / C64::new(norm, 0.0)
}

pub(crate) fn reconstruct_from(
    data: &BinnedData,
    config: &TomographyConfig,
    initial: Option<&DensityMatrix>,
) -> Result<TomographyResult> {
    config.validate()?;
    let model = Model::new(data, config)?;
    let n = model.n;
    let start = match initial {
        Some(r) => r.resized(config.n_levels).matrix().clone(),
        None => DMatrix::<C64>::identity(n, n),
    };
    // Iterate on the factor: RρR is A → RA. A Nesterov extrapolation of A is
    // tried first and dropped (momentum restarted) whenever it would lower
    // the likelihood; then plain RρR, then the diluted (I + εR)A.
    let mut a = factor_of(&start);
    let mut prev = a.clone();
    let (mut ll, mut r) = model.evaluate(&(&a * a.adjoint()));
    let mut trace = vec![ll + model.offset];
    let mut converged = false;
    let mut iterations = 0;
    let mut momentum_steps = 0usize;
    let id = DMatrix::<C64>::identity(n, n);

    let propose = |a: DMatrix<C64>| {
        let a = normalized(a);
        let rho = &a * a.adjoint();
        let (ll, r) = model.evaluate(&rho);
        (a, ll, r)
    };

    while iterations < config.max_iters {
        iterations += 1;
        let mut best = None;
        let mut plain = true;
        if momentum_steps > 0 {
            let beta = (momentum_steps as f64 - 1.0) / (momentum_steps as f64 + 2.0);
            let b = normalized(&a + (&a - &prev) * C64::new(beta, 0.0));
            let (_, _, rb) = propose(b.clone());
            let cand = propose(&rb * &b);
            if cand.1 >= ll {
                best = Some(cand);
                plain = false;
            }
        }
        if best.is_none() {
            momentum_steps = 0;
            let cand = propose(&r * &a);
            if cand.1 >= ll {
                best = Some(cand);
            } else {
                let mut eps = 1.0;
                while eps >= MIN_DILUTION {
                    let cand = propose((&id + &r * C64::new(eps, 0.0)) * &a);
                    if cand.1 >= ll {
                        best = Some(cand);
                        break;
                    }
                    eps *= 0.5;
                }
            }
        }
        momentum_steps += 1;
        let Some((next, cll, cr)) = best else {
            converged = true;
            break;
        };
        let gain = cll - ll;
        prev = std::mem::replace(&mut a, next);
        ll = cll;
        r = cr;
        trace.push(ll + model.offset);
        // Extrapolated steps can gain little near a momentum restart, so only
        // a plain step is trusted to signal convergence.
        if plain && gain < config.stop_tol {
            converged = true;
            break;
        }
    }

    let rho = &a * a.adjoint();
    let state = DensityMatrix::from_trusted(rho);
    Ok(TomographyResult {
        state,
        log_likelihood: trace,
        iterations,
        converged,
        dropped_records: data.dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{fidelity, Ket};
    use crate::homodyne::{sample_quadratures, uniform_phases};
    use crate::states::{coherent_ket, loss_channel};

    fn dm(k: &Ket) -> DensityMatrix {
        DensityMatrix::from_ket(k).unwrap()
    }

    fn small_config(n: usize) -> TomographyConfig {
        TomographyConfig {
            n_levels: FockDim::new(n).unwrap(),
            ..Default::default()
        }
    }

    #[test]
    fn povm_is_complete_on_the_low_levels() {
        let n = 8;
        let cfg = small_config(n);
        let povm = bin_operators(n, cfg.half_width(), cfg.bin_width, cfg.n_bins(), 1.0);
        for i in 0..n {
            for j in 0..n {
                let s: f64 = povm.iter().map(|g| g[i * n + j]).sum();
                assert!(
                    (s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10,
                    "{i} {j} {s}"
                );
            }
        }
    }

    /// Full-rank mixture of a thermal and a coherent state.
    fn mixed_state(n: usize) -> DensityMatrix {
        let d = FockDim::new(n).unwrap();
        let coh = dm(&coherent_ket(C64::new(0.6, -0.3), d).unwrap());
        let weights: Vec<f64> = (0..n).map(|k| (1.0f64 / 3.0).powi(k as i32)).collect();
        let total: f64 = weights.iter().sum();
        let thermal = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(weights[i] / total, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        DensityMatrix::new((thermal + coh.matrix()) * C64::new(0.5, 0.0)).unwrap()
    }

    #[test]
    fn exact_probabilities_reconstruct_the_state() {
        let cfg = TomographyConfig {
            max_iters: 20_000,
            stop_tol: 1e-15,
            ..small_config(8)
        };
        let truth = mixed_state(8);
        let data = BinnedData::exact(&truth, &uniform_phases(12), &cfg).unwrap();
        let out = ml_reconstruct_binned(&data, &cfg).unwrap();
        let f = fidelity(&out.state, &truth).unwrap();
        assert!(f > 1.0 - 1e-6, "{f} after {}", out.iterations);
        assert!(out.log_likelihood.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn exact_probabilities_reconstruct_a_pure_state() {
        let cfg = TomographyConfig {
            max_iters: 20_000,
            stop_tol: 1e-15,
            ..small_config(8)
        };
        let truth = dm(&coherent_ket(C64::new(0.6, -0.3), FockDim::new(8).unwrap()).unwrap());
        let data = BinnedData::exact(&truth, &uniform_phases(12), &cfg).unwrap();
        let out = ml_reconstruct_binned(&data, &cfg).unwrap();
        let f = fidelity(&out.state, &truth).unwrap();
        assert!(f > 1.0 - 1e-6, "{f} after {}", out.iterations);
    }

    #[test]
    fn sampled_vacuum_reconstructs() {
        let cfg = small_config(10);
        let vac = dm(&Ket::basis(FockDim::new(10).unwrap(), 0).unwrap());
        let recs = sample_quadratures(&vac, &uniform_phases(12), 5_000, 11).unwrap();
        let out = ml_reconstruct(&recs, &cfg).unwrap();
        assert!(fidelity(&out.state, &vac).unwrap() > 0.995);
        assert!(out.log_likelihood.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn loss_correction_recovers_pre_detector_state() {
        let d = FockDim::new(10).unwrap();
        let one = dm(&Ket::basis(d, 1).unwrap());
        let exact = BinnedData::exact(
            &loss_channel(&one, 0.8).unwrap(),
            &uniform_phases(12),
            &TomographyConfig {
                efficiency: 0.8,
                ..small_config(10)
            },
        )
        .unwrap();
        let cfg = TomographyConfig {
            efficiency: 0.8,
            max_iters: 20_000,
            stop_tol: 1e-14,
            ..small_config(10)
        };
        let out = ml_reconstruct_binned(&exact, &cfg).unwrap();
        assert!(fidelity(&out.state, &one).unwrap() > 0.999);
    }

    #[test]
    fn config_validation() {
        let mut c = TomographyConfig::default();
        assert!(c.validate().is_ok());
        c.efficiency = 1.2;
        assert!(c.validate().is_err());
        c.efficiency = 0.9;
        c.bin_width = 0.0;
        assert!(c.validate().is_err());
    }
}
