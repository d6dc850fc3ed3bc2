use serde::{Deserialize, Serialize};

use super::{group_by_phase, QuadratureRecord};
use crate::error::{Error, Result};
use crate::poly::weyl_combination;

/// Highest total order m + n supported by the estimator.
pub const MAX_MOMENT_ORDER: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub m: usize,
    pub n: usize,
    pub value: f64,
    pub std_error: f64,
}

/// A_k with Σ_k A_k X(θ_k)^{m+n} = :xᵐpⁿ:_W (minimum-norm least squares;
/// fails when the residual exceeds 1e-10).
pub fn weyl_moment_coefficients(m: usize, n: usize, thetas: &[f64]) -> Result<Vec<f64>> {
    weyl_combination(m, n, thetas)
}

/// Σ_k A_k · mean(X(θ_k)^{m+n}) over the recorded phases, with the
/// standard error propagated from the per-phase sample variances.
pub fn estimate_weyl_moment(
    records: &[QuadratureRecord],
    m: usize,
    n: usize,
) -> Result<MomentEstimate> {
    let order = m + n;
    if order == 0 || order > MAX_MOMENT_ORDER {
        return Err(Error::InvalidParameter(format!(
            "moment order must be in 1..={MAX_MOMENT_ORDER}, got {order}"
        )));
    }
    let groups = group_by_phase(records);
    if groups.is_empty() {
        return Err(Error::InvalidParameter("no records".into()));
    }
    let thetas: Vec<f64> = groups.iter().map(|(t, _)| *t).collect();
    let coeffs = weyl_combination(m, n, &thetas)?;

    let mut value = 0.0;
    let mut var = 0.0;
    for ((_, xs), a) in groups.iter().zip(&coeffs) {
        if *a == 0.0 {
            continue;
        }
        let count = xs.len() as f64;
        let powers: Vec<f64> = xs.iter().map(|x| x.powi(order as i32)).collect();
        let mean = powers.iter().sum::<f64>() / count;
        let sample_var = if xs.len() > 1 {
            powers.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0)
        } else {
            0.0
        };
        value += a * mean;
        var += a * a * sample_var / count;
    }
    Ok(MomentEstimate {
        m,
        n,
        value,
        std_error: var.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{DensityMatrix, FockDim, Ket};
    use crate::homodyne::{sample_quadratures, uniform_phases};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn trivial_coefficients() {
        assert_abs_diff_eq!(
            weyl_moment_coefficients(1, 0, &[0.0]).unwrap()[0],
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            weyl_moment_coefficients(0, 1, &[PI / 2.0]).unwrap()[0],
            1.0,
            epsilon = 1e-12
        );
        assert!(weyl_moment_coefficients(2, 1, &[0.0, PI / 3.0]).is_err());
        assert!(weyl_moment_coefficients(1, 1, &[0.0, PI]).is_err());
    }

    #[test]
    fn vacuum_and_single_photon_estimates() {
        let d = FockDim::new(10).unwrap();
        let phases = uniform_phases(6);
        let vac = DensityMatrix::from_ket(&Ket::basis(d, 0).unwrap()).unwrap();
        let recs = sample_quadratures(&vac, &phases, 20_000, 3).unwrap();
        let e = estimate_weyl_moment(&recs, 2, 0).unwrap();
        assert!((e.value - 0.5).abs() < 3.0 * e.std_error, "{e:?}");
        let e = estimate_weyl_moment(&recs, 1, 1).unwrap();
        assert!(e.value.abs() < 3.0 * e.std_error, "{e:?}");

        let one = DensityMatrix::from_ket(&Ket::basis(d, 1).unwrap()).unwrap();
        let recs = sample_quadratures(&one, &phases, 20_000, 4).unwrap();
        let e = estimate_weyl_moment(&recs, 2, 0).unwrap();
        assert!((e.value - 1.5).abs() < 3.0 * e.std_error, "{e:?}");
        assert!(e.std_error > 0.0);
        assert!(estimate_weyl_moment(&recs, 4, 3).is_err());
    }
}
