//! Truncated Fock-space linear algebra.
//!
//! Everything is expressed in the basis |0⟩..|n_levels−1⟩ with ħ = 1 and
//! x = (a + a†)/√2, p = (a − a†)/(i√2), so the vacuum quadrature variance
//! is 1/2.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance used when validating density matrices.
pub const STATE_TOL: f64 = 1e-10;

/// Number of retained Fock levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct FockDim(usize);

impl FockDim {
    pub const DEFAULT_LEVELS: usize = 60;

    pub fn new(n_levels: usize) -> Result<Self> {
        if n_levels < 2 {
            return Err(Error::InvalidDimension(n_levels));
        }
        Ok(FockDim(n_levels))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }

    /// The dimension grown by `extra` levels.
    pub fn padded(self, extra: usize) -> FockDim {
        FockDim(self.0 + extra)
    }
}

impl Default for FockDim {
    fn default() -> Self {
        FockDim(Self::DEFAULT_LEVELS)
    }
}

impl TryFrom<usize> for FockDim {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        FockDim::new(n)
    }
}

impl From<FockDim> for usize {
    fn from(d: FockDim) -> usize {
        d.0
    }
}

fn check_finite_matrix(m: &DMatrix<C64>, what: &'static str) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Pure state amplitudes. Not necessarily normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    amplitudes: DVector<C64>,
}

impl Ket {
    pub fn new(amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::InvalidDimension(amplitudes.len()));
        }
        if !amplitudes
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
        {
            return Err(Error::NonFinite("ket amplitudes"));
        }
        Ok(Ket { amplitudes })
    }

    /// Fock state |n⟩.
    pub fn basis(dim: FockDim, n: usize) -> Result<Self> {
        if n >= dim.get() {
            return Err(Error::InvalidParameter(format!(
                "Fock level {n} does not fit in {} levels",
                dim.get()
            )));
        }
        let mut v = DVector::zeros(dim.get());
        v[n] = C64::new(1.0, 0.0);
        Ok(Ket { amplitudes: v })
    }

    pub fn dim(&self) -> FockDim {
        FockDim(self.amplitudes.len())
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(&self) -> Result<Ket> {
        let n = self.norm();
        if n <= 0.0 || !n.is_finite() {
            return Err(Error::InvalidState("ket has zero norm".into()));
        }
        Ok(Ket {
            amplitudes: self.amplitudes.unscale(n),
        })
    }

    pub fn inner(&self, other: &Ket) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

/// A square complex matrix acting on the truncated space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    matrix: DMatrix<C64>,
}

impl Operator {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidParameter(format!(
                "operator must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.nrows() < 2 {
            return Err(Error::InvalidDimension(matrix.nrows()));
        }
        check_finite_matrix(&matrix, "operator")?;
        Ok(Operator { matrix })
    }

    pub(crate) fn from_matrix(matrix: DMatrix<C64>) -> Self {
        debug_assert!(matrix.is_square());
        Operator { matrix }
    }

    pub fn identity(dim: FockDim) -> Self {
        Operator {
            matrix: DMatrix::identity(dim.get(), dim.get()),
        }
    }

    pub fn zeros(dim: FockDim) -> Self {
        Operator {
            matrix: DMatrix::zeros(dim.get(), dim.get()),
        }
    }

    /// Photon-number operator a†a.
    pub fn number(dim: FockDim) -> Self {
        let n = dim.get();
        let mut m = DMatrix::zeros(n, n);
        for k in 0..n {
            m[(k, k)] = C64::new(k as f64, 0.0);
        }
        Operator { matrix: m }
    }

    pub fn dim(&self) -> FockDim {
        FockDim(self.matrix.nrows())
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn scale(&self, s: C64) -> Operator {
        Operator {
            matrix: &self.matrix * s,
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.matrix.nrows();
        for i in 0..n {
            for j in i..n {
                if (self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn apply(&self, ket: &Ket) -> Result<Ket> {
        same_dim(self.dim(), ket.dim())?;
        Ok(Ket {
            amplitudes: &self.matrix * &ket.amplitudes,
        })
    }

    pub fn powi(&self, k: u32) -> Operator {
        let mut out = Operator::identity(self.dim());
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// ⟨bra|O|ket⟩.
    pub fn matrix_element(&self, bra: &Ket, ket: &Ket) -> Result<C64> {
        let applied = self.apply(ket)?;
        Ok(bra.inner(&applied))
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        Operator {
            matrix: &self.matrix * &rhs.matrix,
        }
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        Operator {
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        Operator {
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

fn same_dim(a: FockDim, b: FockDim) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: a.get(),
            found: b.get(),
        });
    }
    Ok(())
}

/// Hermitian, positive-semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityMatrixJson", into = "DensityMatrixJson")]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity at [`STATE_TOL`].
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        let op = Operator::new(matrix)?;
        if !op.is_hermitian(STATE_TOL) {
            return Err(Error::InvalidState("matrix is not Hermitian".into()));
        }
        let tr = op.matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min_eig = hermitian_eigenvalues(&op.matrix)
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -STATE_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(DensityMatrix { matrix: op.matrix })
    }

    /// Explicit repair point: hermitizes, clips eigenvalues below zero and
    /// renormalizes. Fails when the input is far from a state (eigenvalue
    /// below −`clip_tol` or non-positive trace after clipping).
    pub fn repaired(matrix: DMatrix<C64>, clip_tol: f64) -> Result<Self> {
        let op = Operator::new(matrix)?;
        let eig = hermitian_part(&op.matrix).symmetric_eigen();
        if let Some(&worst) = eig
            .eigenvalues
            .iter()
            .min_by(|a, b| a.partial_cmp(b).unwrap())
        {
            if worst < -clip_tol {
                return Err(Error::InvalidState(format!(
                    "eigenvalue {worst:.3e} below clipping tolerance"
                )));
            }
        }
        let clipped = eig.eigenvalues.map(|l| l.max(0.0));
        let total: f64 = clipped.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidState("zero trace after clipping".into()));
        }
        let q = &eig.eigenvectors;
        let mut m = DMatrix::zeros(op.matrix.nrows(), op.matrix.ncols());
        for (k, &l) in clipped.iter().enumerate() {
            if l == 0.0 {
                continue;
            }
            let v = q.column(k);
            m += (v * v.adjoint()) * C64::new(l / total, 0.0);
        }
        Ok(DensityMatrix { matrix: m })
    }

    /// Wraps a matrix produced by a state-preserving map without re-validating.
    pub(crate) fn from_trusted(matrix: DMatrix<C64>) -> Self {
        DensityMatrix { matrix }
    }

    /// |ψ⟩⟨ψ| for the normalized ket.
    pub fn from_ket(ket: &Ket) -> Result<Self> {
        let k = ket.normalized()?;
        let v = &k.amplitudes;
        Ok(DensityMatrix {
            matrix: v * v.adjoint(),
        })
    }

    /// Incoherent mixture Σ wᵢ ρᵢ; weights are normalized.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        let dim = first.1.dim();
        let total: f64 = parts.iter().map(|(w, _)| *w).sum();
        if total <= 0.0 || parts.iter().any(|(w, _)| *w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidParameter(
                "mixture weights must be non-negative".into(),
            ));
        }
        let mut m = DMatrix::zeros(dim.get(), dim.get());
        for (w, rho) in parts {
            same_dim(dim, rho.dim())?;
            m += &rho.matrix * C64::new(w / total, 0.0);
        }
        Ok(DensityMatrix { matrix: m })
    }

    pub fn dim(&self) -> FockDim {
        FockDim(self.matrix.nrows())
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// Tr[ρ O].
    pub fn expectation(&self, obs: &Operator) -> Result<C64> {
        expectation(self, obs)
    }

    /// Embeds into a larger space (zero padding) or crops to a smaller one.
    /// Cropping discards population above the new cutoff without
    /// renormalizing, so it is only valid when that population is zero.
    pub fn resized(&self, dim: FockDim) -> DensityMatrix {
        let n = dim.get();
        let old = self.matrix.nrows();
        let mut m = DMatrix::zeros(n, n);
        let k = n.min(old);
        m.view_mut((0, 0), (k, k))
            .copy_from(&self.matrix.view((0, 0), (k, k)));
        DensityMatrix { matrix: m }
    }

    /// Population beyond the first `levels` Fock levels.
    pub fn tail_population(&self, levels: usize) -> f64 {
        (levels..self.matrix.nrows())
            .map(|k| self.matrix[(k, k)].re)
            .sum()
    }

    /// U ρ U†.
    pub fn conjugated(&self, unitary: &Operator) -> Result<DensityMatrix> {
        same_dim(self.dim(), unitary.dim())?;
        Ok(DensityMatrix {
            matrix: &unitary.matrix * &self.matrix * unitary.matrix.adjoint(),
        })
    }

    /// R(θ)† ρ R(θ) with R(θ) = exp(iθ a†a); entries pick up e^{iθ(n−m)}.
    pub fn phase_rotated(&self, theta: f64) -> DensityMatrix {
        let n = self.matrix.nrows();
        let phases: Vec<C64> = (0..n)
            .map(|k| C64::from_polar(1.0, theta * k as f64))
            .collect();
        let m = DMatrix::from_fn(n, n, |i, j| {
            phases[i].conj() * self.matrix[(i, j)] * phases[j]
        });
        DensityMatrix { matrix: m }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Wire format for density matrices: row-major real and imaginary parts.
#[derive(Serialize, Deserialize)]
pub struct DensityMatrixJson {
    pub n_levels: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<DensityMatrix> for DensityMatrixJson {
    fn from(rho: DensityMatrix) -> Self {
        let n = rho.matrix.nrows();
        let re = (0..n)
            .map(|i| (0..n).map(|j| rho.matrix[(i, j)].re).collect())
            .collect();
        let im = (0..n)
            .map(|i| (0..n).map(|j| rho.matrix[(i, j)].im).collect())
            .collect();
        DensityMatrixJson {
            n_levels: n,
            re,
            im,
        }
    }
}

impl TryFrom<DensityMatrixJson> for DensityMatrix {
    type Error = Error;

    fn try_from(j: DensityMatrixJson) -> Result<Self> {
        let n = j.n_levels;
        FockDim::new(n)?;
        for (name, rows) in [("re", &j.re), ("im", &j.im)] {
            if rows.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "field \"{name}\" has {} rows, expected {n}",
                    rows.len()
                )));
            }
            if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
                return Err(Error::InvalidParameter(format!(
                    "field \"{name}\" row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
        }
        let m = DMatrix::from_fn(n, n, |i, k| C64::new(j.re[i][k], j.im[i][k]));
        DensityMatrix::new(m)
    }
}

impl std::fmt::Display for DensityMatrixJson {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DensityMatrix(n_levels={})", self.n_levels)
    }
}

pub(crate) fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    hermitian_part(m)
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .collect()
}

/// (M + M†)/2 with entries below 1e-40 of the largest modulus set to zero;
/// the eigen-solver's Givens rotations overflow on extremely small entries.
fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    let mut herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let cut = 1e-40 * herm.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for z in herm.iter_mut() {
        if z.norm() < cut {
            *z = C64::new(0.0, 0.0);
        }
    }
    herm
}

/// Annihilation and creation operators: a|n⟩ = √n |n−1⟩.
pub fn ladder_operators(dim: FockDim) -> (Operator, Operator) {
    let n = dim.get();
    let mut a = DMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    let adag = a.adjoint();
    (Operator { matrix: a }, Operator { matrix: adag })
}

/// x = (a + a†)/√2, p = (a − a†)/(i√2).
pub fn quadrature_operators(dim: FockDim) -> (Operator, Operator) {
    let (a, adag) = ladder_operators(dim);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = (&a.matrix + &adag.matrix) * C64::new(s, 0.0);
    let p = (&a.matrix - &adag.matrix) * C64::new(0.0, -s);
    (Operator { matrix: x }, Operator { matrix: p })
}

/// Real tridiagonal matrix of x in the Fock basis.
pub(crate) fn position_matrix_real(n: usize) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(n, n);
    for k in 1..n {
        let v = (k as f64 / 2.0).sqrt();
        x[(k - 1, k)] = v;
        x[(k, k - 1)] = v;
    }
    x
}

/// Tr[ρ O].
pub fn expectation(rho: &DensityMatrix, obs: &Operator) -> Result<C64> {
    same_dim(rho.dim(), obs.dim())?;
    let n = rho.matrix.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += rho.matrix[(i, j)] * obs.matrix[(j, i)];
        }
    }
    Ok(acc)
}

fn psd_sqrt(m: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let eig = hermitian_part(m).symmetric_eigen();
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l < -STATE_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {l:.3e} in fidelity"
            )));
        }
        if l <= 0.0 {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        out += (v * v.adjoint()) * C64::new(l.sqrt(), 0.0);
    }
    Ok(out)
}

/// Uhlmann fidelity (Tr√(√ρ σ √ρ))², evaluated as the squared trace norm
/// of √ρ√σ so that both argument orders see the same singular values.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_dim(rho.dim(), sigma.dim())?;
    let sr = psd_sqrt(&rho.matrix)?;
    let ss = psd_sqrt(&sigma.matrix)?;
    let s: f64 = (&sr * &ss).singular_values().iter().sum();
    Ok((s * s).clamp(0.0, 1.0))
}

/// Matrix exponential (Padé scaling-and-squaring).
pub fn operator_exponential(generator: &Operator) -> Result<Operator> {
    check_finite_matrix(&generator.matrix, "exponential generator")?;
    let e = generator.matrix.exp();
    check_finite_matrix(&e, "matrix exponential")?;
    Ok(Operator { matrix: e })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dim(n: usize) -> FockDim {
        FockDim::new(n).unwrap()
    }

    #[test]
    fn rejects_tiny_dimension() {
        assert!(FockDim::new(1).is_err());
        assert!(FockDim::new(0).is_err());
    }

    #[test]
    fn ladder_entries() {
        let (a, adag) = ladder_operators(dim(2));
        assert_abs_diff_eq!(a.matrix()[(0, 1)].re, 1.0);
        assert_eq!(a.matrix().iter().filter(|z| z.norm() > 0.0).count(), 1);
        let (a, _) = ladder_operators(dim(4));
        assert_abs_diff_eq!(a.matrix()[(2, 3)].re, 3f64.sqrt(), epsilon = 1e-15);
        assert_eq!(adag, ladder_operators(dim(2)).0.adjoint());
    }

    #[test]
    fn commutator_is_identity_except_last_level() {
        let d = dim(7);
        let (a, adag) = ladder_operators(d);
        let c = &(&a * &adag) - &(&adag * &a);
        for i in 0..7 {
            for j in 0..7 {
                let want = if i == j && i < 6 {
                    1.0
                } else if i == j {
                    -6.0
                } else {
                    0.0
                };
                assert_abs_diff_eq!(c.matrix()[(i, j)].re, want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn quadrature_vacuum_moments_and_commutator() {
        let d = dim(8);
        let (x, p) = quadrature_operators(d);
        assert!(x.is_hermitian(1e-15) && p.is_hermitian(1e-15));
        let vac = DensityMatrix::from_ket(&Ket::basis(d, 0).unwrap()).unwrap();
        assert_abs_diff_eq!(
            vac.expectation(&(&x * &x)).unwrap().re,
            0.5,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(vac.expectation(&x).unwrap().norm(), 0.0);
        let c = &(&x * &p) - &(&p * &x);
        for k in 0..7 {
            assert_abs_diff_eq!(c.matrix()[(k, k)].im, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(c.matrix()[(k, k)].re, 0.0, epsilon = 1e-12);
        }
        assert!((c.matrix()[(7, 7)].im - 1.0).abs() > 1.0);
    }

    #[test]
    fn number_expectations() {
        let d = dim(5);
        let n = Operator::number(d);
        let vac = DensityMatrix::from_ket(&Ket::basis(d, 0).unwrap()).unwrap();
        let one = DensityMatrix::from_ket(&Ket::basis(d, 1).unwrap()).unwrap();
        assert_abs_diff_eq!(vac.expectation(&n).unwrap().re, 0.0);
        assert_abs_diff_eq!(one.expectation(&n).unwrap().re, 1.0);
        assert_abs_diff_eq!(one.expectation(&Operator::identity(d)).unwrap().re, 1.0);
    }

    #[test]
    fn expectation_dimension_mismatch() {
        let vac = DensityMatrix::from_ket(&Ket::basis(dim(3), 0).unwrap()).unwrap();
        assert!(matches!(
            expectation(&vac, &Operator::identity(dim(4))),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn fidelity_basic_cases() {
        let d = dim(4);
        let z = DensityMatrix::from_ket(&Ket::basis(d, 0).unwrap()).unwrap();
        let o = DensityMatrix::from_ket(&Ket::basis(d, 1).unwrap()).unwrap();
        assert_abs_diff_eq!(fidelity(&z, &z).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&z, &o).unwrap(), 0.0, epsilon = 1e-12);
        let mix = DensityMatrix::mixture(&[(0.5, &z), (0.5, &o)]).unwrap();
        assert_abs_diff_eq!(fidelity(&z, &mix).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&mix, &z).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let d = 3;
        let mut m = DMatrix::<C64>::zeros(d, d);
        m[(0, 0)] = C64::new(0.5, 0.0);
        assert!(DensityMatrix::new(m.clone()).is_err());
        m[(1, 1)] = C64::new(0.5, 0.0);
        assert!(DensityMatrix::new(m.clone()).is_ok());
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(DensityMatrix::new(m.clone()).is_err());
        m[(1, 0)] = C64::new(0.1, 0.0);
        m[(0, 1)] = C64::new(0.9, 0.0);
        m[(1, 0)] = C64::new(0.9, 0.0);
        assert!(matches!(
            DensityMatrix::new(m.clone()),
            Err(Error::InvalidState(_))
        ));
        m[(0, 0)] = C64::new(f64::NAN, 0.0);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NonFinite(_))));
    }

    #[test]
    fn repair_clips_small_negative_eigenvalues() {
        let mut m = DMatrix::<C64>::zeros(2, 2);
        m[(0, 0)] = C64::new(1.0 + 1e-12, 0.0);
        m[(1, 1)] = C64::new(-1e-12, 0.0);
        let r = DensityMatrix::repaired(m.clone(), 1e-10).unwrap();
        assert_abs_diff_eq!(r.trace().re, 1.0, epsilon = 1e-15);
        assert!(r.eigenvalues().iter().all(|&l| l >= -1e-15));
        m[(1, 1)] = C64::new(-1e-3, 0.0);
        assert!(DensityMatrix::repaired(m, 1e-10).is_err());
    }

    #[test]
    fn exponential_of_zero_and_phase() {
        let d = dim(6);
        let e = operator_exponential(&Operator::zeros(d)).unwrap();
        assert_abs_diff_eq!(
            (e.matrix() - Operator::identity(d).matrix()).norm(),
            0.0,
            epsilon = 1e-14
        );
        let gen = Operator::number(d).scale(C64::new(0.0, std::f64::consts::PI));
        let u = operator_exponential(&gen).unwrap();
        let out = u.apply(&Ket::basis(d, 1).unwrap()).unwrap();
        assert_abs_diff_eq!(out.amplitudes()[1].re, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.amplitudes()[1].im, 0.0, epsilon = 1e-12);
        let mut bad = Operator::zeros(d).into_matrix();
        bad[(0, 0)] = C64::new(f64::INFINITY, 0.0);
        assert!(operator_exponential(&Operator::from_matrix(bad)).is_err());
    }

    #[test]
    fn json_round_trip_and_field_errors() {
        let d = dim(3);
        let rho = DensityMatrix::from_ket(
            &Ket::new(DVector::from_vec(vec![
                C64::new(0.6, 0.0),
                C64::new(0.0, 0.8),
                C64::new(0.0, 0.0),
            ]))
            .unwrap(),
        )
        .unwrap();
        let s = rho.to_json().unwrap();
        let back = DensityMatrix::from_json(&s).unwrap();
        assert_abs_diff_eq!((back.matrix() - rho.matrix()).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(back.dim(), d);

        let bad = r#"{"n_levels": 2, "re": [[1.0, 0.0]], "im": [[0.0, 0.0], [0.0, 0.0]]}"#;
        let err = DensityMatrix::from_json(bad).unwrap_err().to_string();
        assert!(err.contains("\"re\""), "{err}");
    }

    #[test]
    fn resize_pads_and_crops() {
        let rho = DensityMatrix::from_ket(&Ket::basis(dim(3), 1).unwrap()).unwrap();
        let big = rho.resized(dim(6));
        assert_eq!(big.dim().get(), 6);
        assert_abs_diff_eq!(big.trace().re, 1.0);
        assert_eq!(big.resized(dim(3)), rho);
        assert_abs_diff_eq!(big.tail_population(1), 1.0);
    }
}
