//! State factories and the decoherence channels (pure loss, Gaussian
//! dephasing).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{ladder_operators, DensityMatrix, FockDim, Ket, C64};

/// Largest coherent amplitude the default truncation supports.
pub const MAX_ALPHA: f64 = 2.5;
/// Largest squeezing parameter the default truncation supports.
pub const MAX_SQUEEZE: f64 = 1.2;
pub const MAX_ADDED_PHOTONS: u32 = 5;

/// Relative squared-norm deficit tolerated before a truncated ket is
/// rejected.
const NORM_SENTINEL: f64 = 1e-6;
/// Squeezed vacuum has a geometric tail; r = 1.2 loses ~4e-6 at 60 levels.
const SQUEEZE_SENTINEL: f64 = 1e-5;

/// |α, n⟩ = N â†ⁿ |α⟩.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhotonAddedSpec {
    pub alpha: C64,
    pub n_added: u32,
}

impl PhotonAddedSpec {
    pub fn new(alpha: C64, n_added: u32) -> Result<Self> {
        let spec = PhotonAddedSpec { alpha, n_added };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.n_added > MAX_ADDED_PHOTONS {
            return Err(Error::OutOfRegime {
                what: "added photons",
                value: self.n_added as f64,
                limit: MAX_ADDED_PHOTONS as f64,
            });
        }
        Ok(())
    }
}

/// Loss followed by dephasing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub transmittance: f64,
    pub dephasing_sigma: f64,
}

impl ChannelSpec {
    pub fn new(transmittance: f64, dephasing_sigma: f64) -> Result<Self> {
        check_eta(transmittance)?;
        check_sigma(dephasing_sigma)?;
        Ok(ChannelSpec {
            transmittance,
            dephasing_sigma,
        })
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let lossy = loss_channel(rho, self.transmittance)?;
        dephasing_channel(&lossy, self.dephasing_sigma)
    }
}

fn check_alpha(alpha: C64) -> Result<()> {
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(Error::NonFinite("coherent amplitude"));
    }
    if alpha.norm() > MAX_ALPHA {
        return Err(Error::OutOfRegime {
            what: "|alpha|",
            value: alpha.norm(),
            limit: MAX_ALPHA,
        });
    }
    Ok(())
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "transmittance must lie in (0, 1], got {eta}"
        )));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "dephasing sigma must be non-negative, got {sigma}"
        )));
    }
    Ok(())
}

/// Fock state |n⟩.
pub fn fock_ket(n: usize, dim: FockDim) -> Result<Ket> {
    Ket::basis(dim, n)
}

/// Coherent state amplitudes e^{−|α|²/2} αⁿ/√(n!).
pub fn coherent_ket(alpha: C64, dim: FockDim) -> Result<Ket> {
    check_alpha(alpha)?;
    let n = dim.get();
    let mut amps = DVector::zeros(n);
    amps[0] = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for k in 1..n {
        amps[k] = amps[k - 1] * alpha / (k as f64).sqrt();
    }
    let norm_sqr = amps.norm_squared();
    if 1.0 - norm_sqr > NORM_SENTINEL {
        return Err(Error::TruncationOverflow {
            what: "coherent state",
            observed: norm_sqr,
            expected: 1.0,
        });
    }
    Ket::new(amps)
}

/// Laguerre polynomial Lₙ(x) by the three-term recurrence.
pub fn laguerre(n: u32, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 1.0 - x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 - x) * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// ⟨α|âⁿâ†ⁿ|α⟩ = n!·Lₙ(−|α|²).
pub fn photon_added_norm_sqr(alpha: C64, n_added: u32) -> f64 {
    let fact: f64 = (1..=n_added).map(|k| k as f64).product();
    fact * laguerre(n_added, -alpha.norm_sqr())
}

/// Normalized â†ⁿ|α⟩.
pub fn photon_added_coherent(spec: PhotonAddedSpec, dim: FockDim) -> Result<Ket> {
    spec.validate()?;
    let (_, adag) = ladder_operators(dim);
    let mut ket = coherent_ket(spec.alpha, dim)?;
    for _ in 0..spec.n_added {
        ket = adag.apply(&ket)?;
    }
    let observed = ket.norm().powi(2);
    let expected = photon_added_norm_sqr(spec.alpha, spec.n_added);
    if ((observed - expected) / expected).abs() > NORM_SENTINEL {
        return Err(Error::TruncationOverflow {
            what: "photon-added coherent state",
            observed,
            expected,
        });
    }
    ket.normalized()
}

/// S(r)|0⟩ with S(r) = exp((r/2)(a² − a†²)); r > 0 squeezes x.
///
/// Uses the closed-form amplitudes
/// (−tanh r)ᵏ √((2k)!)/(2ᵏ k!) / √(cosh r) on |2k⟩, truncated and
/// renormalized.
pub fn squeezed_vacuum_ket(r: f64, dim: FockDim) -> Result<Ket> {
    if !r.is_finite() {
        return Err(Error::NonFinite("squeezing"));
    }
    if r.abs() > MAX_SQUEEZE {
        return Err(Error::OutOfRegime {
            what: "|r|",
            value: r.abs(),
            limit: MAX_SQUEEZE,
        });
    }
    let n = dim.get();
    let t = -r.tanh();
    let mut amps = DVector::zeros(n);
    let mut c = 1.0 / r.cosh().sqrt();
    let mut k = 0usize;
    while 2 * k < n {
        amps[2 * k] = C64::new(c, 0.0);
        // c_{k+1}/c_k = t·√((2k+1)(2k+2))/(2(k+1))
        let kf = k as f64;
        c *= t * ((2.0 * kf + 1.0) * (2.0 * kf + 2.0)).sqrt() / (2.0 * (kf + 1.0));
        k += 1;
    }
    let norm_sqr = amps.norm_squared();
    if 1.0 - norm_sqr > SQUEEZE_SENTINEL {
        return Err(Error::TruncationOverflow {
            what: "squeezed vacuum",
            observed: norm_sqr,
            expected: 1.0,
        });
    }
    Ket::new(amps)?.normalized()
}

/// √C(j, k) for 0 ≤ k ≤ j < n, row-major in j.
fn sqrt_binomials(n: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut row = vec![1.0; j + 1];
        for k in 1..j {
            let prev = &rows[j - 1];
            row[k] = (prev[k - 1].powi(2) + prev[k].powi(2)).sqrt();
        }
        rows.push(row);
    }
    rows
}

/// Pure-loss channel with Kraus operators
/// K_k = ((1−η)^k / k!)^{1/2} η^{a†a/2} a^k.
///
/// Applied element-wise:
/// ρ'_{mn} = Σ_k √(C(m+k,k) C(n+k,k)) (1−η)^k η^{(m+n)/2} ρ_{m+k,n+k}.
pub fn loss_channel(rho: &DensityMatrix, eta: f64) -> Result<DensityMatrix> {
    check_eta(eta)?;
    if eta == 1.0 {
        return Ok(rho.clone());
    }
    let n = rho.dim().get();
    let sb = sqrt_binomials(n);
    let src = rho.matrix();
    let loss = 1.0 - eta;
    let sqrt_eta_pow: Vec<f64> = (0..n).map(|k| eta.powf(k as f64 / 2.0)).collect();
    let mut out = DMatrix::zeros(n, n);
    for m in 0..n {
        for l in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            let mut lossk = 1.0;
            for k in 0..n - m.max(l) {
                let w = sb[m + k][k] * sb[l + k][k] * lossk;
                acc += src[(m + k, l + k)] * w;
                lossk *= loss;
            }
            out[(m, l)] = acc * sqrt_eta_pow[m] * sqrt_eta_pow[l];
        }
    }
    Ok(DensityMatrix::from_trusted(out))
}

/// Heisenberg-picture adjoint of [`loss_channel`] acting on a real
/// symmetric operator: E†(O)_{jl} = Σ_k √(C(j,k)C(l,k)) (1−η)^k η^{(j+l)/2−k} O_{j−k,l−k}.
pub(crate) fn loss_adjoint_real(op: &DMatrix<f64>, eta: f64) -> DMatrix<f64> {
    let n = op.nrows();
    if eta == 1.0 {
        return op.clone();
    }
    let sb = sqrt_binomials(n);
    let loss = 1.0 - eta;
    DMatrix::from_fn(n, n, |j, l| {
        let mut acc = 0.0;
        let mut lossk = 1.0;
        for k in 0..=j.min(l) {
            let e = ((j + l) as f64) / 2.0 - k as f64;
            acc += sb[j][k] * sb[l][k] * lossk * eta.powf(e) * op[(j - k, l - k)];
            lossk *= loss;
        }
        acc
    })
}

/// Gaussian phase diffusion: ρ_{mn} ↦ ρ_{mn} exp(−σ²(m−n)²/2).
pub fn dephasing_channel(rho: &DensityMatrix, sigma: f64) -> Result<DensityMatrix> {
    check_sigma(sigma)?;
    let n = rho.dim().get();
    let src = rho.matrix();
    let out = DMatrix::from_fn(n, n, |m, l| {
        let d = m as f64 - l as f64;
        src[(m, l)] * (-0.5 * sigma * sigma * d * d).exp()
    });
    Ok(DensityMatrix::from_trusted(out))
}
