//! Gaussian unitaries U_G = R(θ) D(α) S(r) R(φ) with
//! R(φ) = exp(iφ a†a), D(α) = exp(αa† − α*a), S(r) = exp((r/2)(a² − a†²)),
//! and their affine phase-space action.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{ladder_operators, operator_exponential, FockDim, Operator, C64};
use crate::states::{MAX_ALPHA, MAX_SQUEEZE};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianUnitaryParams {
    pub theta: f64,
    pub phi: f64,
    pub r: f64,
    pub alpha: C64,
}

impl Default for GaussianUnitaryParams {
    fn default() -> Self {
        Self::identity()
    }
}

impl GaussianUnitaryParams {
    pub fn identity() -> Self {
        GaussianUnitaryParams {
            theta: 0.0,
            phi: 0.0,
            r: 0.0,
            alpha: C64::new(0.0, 0.0),
        }
    }

    pub fn new(theta: f64, phi: f64, r: f64, alpha: C64) -> Result<Self> {
        let p = GaussianUnitaryParams {
            theta,
            phi,
            r,
            alpha,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.theta, self.phi, self.r, self.alpha.re, self.alpha.im]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::NonFinite("Gaussian unitary parameters"));
        }
        if self.r.abs() > MAX_SQUEEZE {
            return Err(Error::OutOfRegime {
                what: "|r|",
                value: self.r.abs(),
                limit: MAX_SQUEEZE,
            });
        }
        if self.alpha.norm() > MAX_ALPHA {
            return Err(Error::OutOfRegime {
                what: "|alpha|",
                value: self.alpha.norm(),
                limit: MAX_ALPHA,
            });
        }
        Ok(())
    }
}

/// Affine Heisenberg action U†(x, p)ᵀU = M (x, p)ᵀ + d with det M = 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymplecticAction {
    pub m: [[f64; 2]; 2],
    pub d: [f64; 2],
}

impl SymplecticAction {
    pub fn identity() -> Self {
        SymplecticAction {
            m: [[1.0, 0.0], [0.0, 1.0]],
            d: [0.0, 0.0],
        }
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Maps a phase-space point r to M r + d.
    pub fn apply(&self, r: [f64; 2]) -> [f64; 2] {
        [
            self.m[0][0] * r[0] + self.m[0][1] * r[1] + self.d[0],
            self.m[1][0] * r[0] + self.m[1][1] * r[1] + self.d[1],
        ]
    }

    /// Action of U = A·B given `self` for A and `inner` for B:
    /// B†(M_A r + d_A)B = M_A (M_B r + d_B) + d_A.
    fn then_conjugate(&self, inner: &SymplecticAction) -> SymplecticAction {
        let a = &self.m;
        let b = &inner.m;
        let m = [
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ];
        let d = [
            a[0][0] * inner.d[0] + a[0][1] * inner.d[1] + self.d[0],
            a[1][0] * inner.d[0] + a[1][1] * inner.d[1] + self.d[1],
        ];
        SymplecticAction { m, d }
    }

    fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        SymplecticAction {
            m: [[c, -s], [s, c]],
            d: [0.0, 0.0],
        }
    }

    fn squeeze(r: f64) -> Self {
        SymplecticAction {
            m: [[(-r).exp(), 0.0], [0.0, r.exp()]],
            d: [0.0, 0.0],
        }
    }

    fn displacement(alpha: C64) -> Self {
        let s = std::f64::consts::SQRT_2;
        SymplecticAction {
            m: [[1.0, 0.0], [0.0, 1.0]],
            d: [s * alpha.re, s * alpha.im],
        }
    }
}

/// Phase-space action of U_G. The parameters are not range-checked: the
/// affine map is exact for any values.
pub fn symplectic_of(params: &GaussianUnitaryParams) -> SymplecticAction {
    // U = R(θ)D(α)S(r)R(φ): conjugation by R(θ) acts first on the
    // quadratures, R(φ) last.
    SymplecticAction::rotation(params.theta)
        .then_conjugate(&SymplecticAction::displacement(params.alpha))
        .then_conjugate(&SymplecticAction::squeeze(params.r))
        .then_conjugate(&SymplecticAction::rotation(params.phi))
}

fn rotation_operator(angle: f64, dim: FockDim) -> Operator {
    let n = dim.get();
    let mut m = DMatrix::zeros(n, n);
    for k in 0..n {
        m[(k, k)] = C64::from_polar(1.0, angle * k as f64);
    }
    Operator::from_matrix(m)
}

/// D(α) from its truncated generator.
pub fn displacement_operator(alpha: C64, dim: FockDim) -> Result<Operator> {
    let (a, adag) = ladder_operators(dim);
    let gen = &adag.scale(alpha) - &a.scale(alpha.conj());
    operator_exponential(&gen)
}

/// S(r) from its truncated generator.
pub fn squeeze_operator(r: f64, dim: FockDim) -> Result<Operator> {
    let (a, adag) = ladder_operators(dim);
    let gen = (&(&a * &a) - &(&adag * &adag)).scale(C64::new(r / 2.0, 0.0));
    operator_exponential(&gen)
}

/// Truncated matrix of U_G. Unitary only on the low-occupation subspace.
pub fn build_gaussian_unitary(params: &GaussianUnitaryParams, dim: FockDim) -> Result<Operator> {
    params.validate()?;
    let r_theta = rotation_operator(params.theta, dim);
    let r_phi = rotation_operator(params.phi, dim);
    let d = displacement_operator(params.alpha, dim)?;
    let s = squeeze_operator(params.r, dim)?;
    Ok(&(&(&r_theta * &d) * &s) * &r_phi)
}
