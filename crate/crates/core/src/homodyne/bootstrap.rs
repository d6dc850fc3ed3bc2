use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tomography::{reconstruct_from, BinnedData, TomographyConfig};
use super::{group_by_phase, QuadratureRecord};
use crate::cost::CostFamily;
use crate::error::{Error, Result};
use crate::witness::{nonlinear_squeezing, OptimizerBudget};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub family: CostFamily,
    /// ξ of the reconstruction from the full record set.
    pub point_estimate: f64,
    pub mean: f64,
    /// Sample standard deviation over the resamples.
    pub std: f64,
    pub samples: Vec<f64>,
}

/// Nonparametric bootstrap of the optimized ξ: records are resampled with
/// replacement within each phase, each resample is reconstructed (warm
/// started from the full-data estimate) and optimized. Resample k draws from
/// ChaCha8 stream k of `seed`.
pub fn bootstrap_xi(
    records: &[QuadratureRecord],
    config: &TomographyConfig,
    family: CostFamily,
    n_resamples: usize,
    seed: u64,
    budget: &OptimizerBudget,
) -> Result<BootstrapResult> {
    if n_resamples < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 resamples, got {n_resamples}"
        )));
    }
    budget.validate()?;
    let full = reconstruct_from(&BinnedData::from_records(records, config)?, config, None)?;
    let point_estimate = nonlinear_squeezing(&full.state, family, budget)?.xi;

    let groups = group_by_phase(records);
    let samples: Vec<f64> = (0..n_resamples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let resampled: Vec<QuadratureRecord> = groups
                .iter()
                .flat_map(|(theta, xs)| {
                    (0..xs.len())
                        .map(|_| QuadratureRecord {
                            theta: *theta,
                            value: xs[rng.gen_range(0..xs.len())],
                        })
                        .collect::<Vec<_>>()
                })
                .collect();
            let data = BinnedData::from_records(&resampled, config)?;
            let state = reconstruct_from(&data, config, Some(&full.state))?.state;
            Ok(nonlinear_squeezing(&state, family, budget)?.xi)
        })
        .collect::<Result<_>>()?;

    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let std = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    Ok(BootstrapResult {
        family,
        point_estimate,
        mean,
        std,
        samples,
    })
}
