use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::QuadratureRecord;
use crate::error::{Error, Result};
use crate::fock::DensityMatrix;
use crate::poly::MomentTable;

/// ψ₀(x)..ψ_{n−1}(x), the position wave functions ⟨x|k⟩ for x = (a + a†)/√2.
pub fn hermite_functions(x: f64, n: usize) -> Vec<f64> {
    let mut psi = vec![0.0; n];
    if n == 0 {
        return psi;
    }
    psi[0] = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    if n > 1 {
        psi[1] = std::f64::consts::SQRT_2 * x * psi[0];
    }
    for k in 2..n {
        let kf = k as f64;
        psi[k] = (2.0 / kf).sqrt() * x * psi[k - 1] - ((kf - 1.0) / kf).sqrt() * psi[k - 2];
    }
    psi
}

/// Distribution of X(θ) for a fixed state.
#[derive(Clone, Debug)]
pub struct QuadraturePdf {
    /// Re ⟨m|R†ρR|n⟩ restricted to the populated levels.
    rotated: DMatrix<f64>,
    mean: f64,
    std_dev: f64,
}

/// pr(x|θ) = ⟨x|R(θ)†ρR(θ)|x⟩ with R(θ) = exp(iθa†a).
pub fn quadrature_pdf(rho: &DensityMatrix, theta: f64) -> QuadraturePdf {
    let m = rho.phase_rotated(theta);
    let n = populated_levels(m.matrix());
    let rotated = DMatrix::from_fn(n, n, |i, j| m.matrix()[(i, j)].re);
    let mu = MomentTable::weyl_moments(rho);
    let (s, c) = theta.sin_cos();
    let mean = c * mu.get(1, 0) + s * mu.get(0, 1);
    let second = c * c * mu.get(2, 0) + 2.0 * c * s * mu.get(1, 1) + s * s * mu.get(0, 2);
    QuadraturePdf {
        rotated,
        mean,
        std_dev: (second - mean * mean).max(0.0).sqrt(),
    }
}

fn populated_levels(m: &DMatrix<nalgebra::Complex<f64>>) -> usize {
    let n = m.nrows();
    (0..n)
        .rev()
        .find(|&k| m[(k, k)].re.abs() > 1e-20)
        .map_or(1, |k| k + 1)
}

impl QuadraturePdf {
    pub fn density(&self, x: f64) -> f64 {
        let psi = hermite_functions(x, self.rotated.nrows());
        let mut acc = 0.0;
        for (i, &pi) in psi.iter().enumerate() {
            let mut row = 0.0;
            for (j, &pj) in psi.iter().enumerate() {
                row += self.rotated[(i, j)] * pj;
            }
            acc += pi * row;
        }
        acc.max(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn std_dev(&self) -> f64 {
        self.std_dev
    }

    /// Interval carrying all but a negligible tail: the mean ± 12 standard
    /// deviations, and at least the classical turning point of the highest
    /// populated level.
    pub fn support(&self) -> (f64, f64) {
        let turning = (2.0 * self.rotated.nrows() as f64 + 1.0).sqrt() + 3.0;
        let half = (12.0 * self.std_dev)
            .max(turning - self.mean.abs())
            .max(4.0);
        (self.mean - half, self.mean + half)
    }
}

/// Points in the tabulated CDF used for inverse-transform sampling.
const CDF_POINTS: usize = 8001;

struct InverseCdf {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl InverseCdf {
    fn new(pdf: &QuadraturePdf) -> Self {
        let (lo, hi) = pdf.support();
        let step = (hi - lo) / (CDF_POINTS - 1) as f64;
        let xs: Vec<f64> = (0..CDF_POINTS).map(|k| lo + step * k as f64).collect();
        let dens: Vec<f64> = xs.iter().map(|&x| pdf.density(x)).collect();
        let mut cdf = vec![0.0; CDF_POINTS];
        for k in 1..CDF_POINTS {
            cdf[k] = cdf[k - 1] + 0.5 * step * (dens[k] + dens[k - 1]);
        }
        let total = cdf[CDF_POINTS - 1];
        for c in cdf.iter_mut() {
            *c /= total;
        }
        InverseCdf { xs, cdf }
    }

    fn sample(&self, u: f64) -> f64 {
        let k = self
            .cdf
            .partition_point(|&c| c < u)
            .clamp(1, self.xs.len() - 1);
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.xs[k - 1] + t * (self.xs[k] - self.xs[k - 1])
    }
}

/// `n_per_phase` i.i.d. outcomes at each phase, phase by phase in input
/// order. Each phase draws from its own ChaCha8 stream of `seed`, so the
/// output is reproducible and independent of scheduling.
pub fn sample_quadratures(
    rho: &DensityMatrix,
    phases: &[f64],
    n_per_phase: usize,
    seed: u64,
) -> Result<Vec<QuadratureRecord>> {
    if phases.is_empty() {
        return Err(Error::InvalidParameter("phase list is empty".into()));
    }
    let per_phase: Vec<Vec<QuadratureRecord>> = phases
        .par_iter()
        .enumerate()
        .map(|(k, &theta)| {
            let inv = InverseCdf::new(&quadrature_pdf(rho, theta));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            (0..n_per_phase)
                .map(|_| QuadratureRecord::new(theta, inv.sample(rng.gen::<f64>())))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(per_phase.into_iter().flatten().collect())
}
