//! Bivariate polynomials in (x, p) up to total degree 8 and the moment
//! tables they are contracted against.
//!
//! For the cost family f = p + g(x) and any Gaussian unitary, the Weyl
//! symbol of U†ÔU is f(Mr + d) and that of (U†ÔU)² is f(Mr + d)², so both
//! ⟨Ô⟩ and ⟨Ô²⟩ reduce to contracting a polynomial with the Weyl moments
//! ∫W xᵐpⁿ of the state.

use nalgebra::{DMatrix, DVector};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::fock::{position_matrix_real, DensityMatrix};

pub const MAX_DEGREE: usize = 8;
const N: usize = MAX_DEGREE + 1;

/// Σ c[i][j] xⁱ pʲ with i + j ≤ 8.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Poly2 {
    c: [[f64; N]; N],
    degree: usize,
}

impl Default for Poly2 {
    fn default() -> Self {
        Poly2 {
            c: [[0.0; N]; N],
            degree: 0,
        }
    }
}

impl Poly2 {
    pub fn constant(v: f64) -> Self {
        let mut p = Poly2::default();
        p.c[0][0] = v;
        p
    }

    /// a x + b p + c.
    pub fn linear(a: f64, b: f64, c: f64) -> Self {
        let mut p = Poly2::default();
        p.c[0][0] = c;
        p.c[1][0] = a;
        p.c[0][1] = b;
        p.degree = 1;
        p
    }

    pub fn monomial(i: usize, j: usize, coeff: f64) -> Self {
        assert!(i + j <= MAX_DEGREE);
        let mut p = Poly2::default();
        p.c[i][j] = coeff;
        p.degree = i + j;
        p
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.c[i][j]
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn add(&self, other: &Poly2) -> Poly2 {
        let mut out = *self;
        out.add_scaled(other, 1.0);
        out
    }

    pub fn add_scaled(&mut self, other: &Poly2, s: f64) {
        for i in 0..=other.degree {
            for j in 0..=other.degree - i {
                self.c[i][j] += s * other.c[i][j];
            }
        }
        self.degree = self.degree.max(other.degree);
    }

    pub fn scale(&self, s: f64) -> Poly2 {
        let mut out = *self;
        for row in out.c.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    /// Product; panics if the result would exceed degree 8.
    pub fn mul(&self, other: &Poly2) -> Poly2 {
        let deg = self.degree + other.degree;
        assert!(
            deg <= MAX_DEGREE,
            "polynomial degree {deg} exceeds {MAX_DEGREE}"
        );
        let mut out = Poly2 {
            c: [[0.0; N]; N],
            degree: deg,
        };
        for i in 0..=self.degree {
            for j in 0..=self.degree - i {
                let a = self.c[i][j];
                if a == 0.0 {
                    continue;
                }
                for k in 0..=other.degree {
                    for l in 0..=other.degree - k {
                        out.c[i + k][j + l] += a * other.c[k][l];
                    }
                }
            }
        }
        out
    }

    pub fn powi(&self, k: u32) -> Poly2 {
        let mut out = Poly2::constant(1.0);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn eval(&self, x: f64, p: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..=self.degree {
            for j in 0..=self.degree - i {
                let c = self.c[i][j];
                if c != 0.0 {
                    acc += c * x.powi(i as i32) * p.powi(j as i32);
                }
            }
        }
        acc
    }
}

/// μ[i][j] = E[xⁱ pʲ] for i + j ≤ 8 under a phase-space distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentTable {
    mu: [[f64; N]; N],
}

impl MomentTable {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mu[i][j]
    }

    pub fn expect(&self, poly: &Poly2) -> f64 {
        let mut acc = 0.0;
        for i in 0..=poly.degree {
            for j in 0..=poly.degree - i {
                acc += poly.c[i][j] * self.mu[i][j];
            }
        }
        acc
    }

    /// Variance of the polynomial: E[f²] − E[f]².
    pub fn variance(&self, poly: &Poly2) -> f64 {
        let m1 = self.expect(poly);
        self.expect(&poly.mul(poly)) - m1 * m1
    }

    /// Moments of the bivariate normal with the given mean and covariance,
    /// by Stein's identity E[x·h] = x̄E[h] + Vxx E[∂ₓh] + Vxp E[∂ₚh].
    pub fn gaussian(mean: [f64; 2], cov: [[f64; 2]; 2]) -> Self {
        let mut mu = [[0.0; N]; N];
        mu[0][0] = 1.0;
        for j in 1..N {
            let prev2 = if j >= 2 {
                (j - 1) as f64 * mu[0][j - 2]
            } else {
                0.0
            };
            mu[0][j] = mean[1] * mu[0][j - 1] + cov[1][1] * prev2;
        }
        for i in 1..N {
            for j in 0..N - i {
                let dx = if i >= 2 {
                    (i - 1) as f64 * mu[i - 2][j]
                } else {
                    0.0
                };
                let dp = if j >= 1 {
                    j as f64 * mu[i - 1][j - 1]
                } else {
                    0.0
                };
                mu[i][j] = mean[0] * mu[i - 1][j] + cov[0][0] * dx + cov[0][1] * dp;
            }
        }
        MomentTable { mu }
    }

    /// Weyl-symmetric moments ∫W xⁱpʲ of a state.
    ///
    /// Uses ⟨X(θ)ᴺ⟩ at nine equally spaced phases (a power of a single
    /// quadrature is already Weyl ordered) and inverts the binomial
    /// expansion. Products are formed in a space padded by the polynomial
    /// degree, so the result is exact for the given truncated matrix.
    pub fn weyl_moments(rho: &DensityMatrix) -> Self {
        let n = rho.dim().get();
        let padded = n + MAX_DEGREE + 1;
        let x = position_matrix_real(padded);
        let angles = weyl_angles();
        let rotated: Vec<DensityMatrix> = angles.iter().map(|&t| rho.phase_rotated(t)).collect();
        let rotated_re: Vec<DMatrix<f64>> =
            rotated.iter().map(|r| r.matrix().map(|z| z.re)).collect();

        let mut mu = [[0.0; N]; N];
        mu[0][0] = rho.trace().re;
        let mut xpow = DMatrix::<f64>::identity(padded, padded);
        for order in 1..=MAX_DEGREE {
            xpow = &xpow * &x;
            // ⟨X(θ)ᴺ⟩ = Tr[R†ρR xᴺ]; x is real symmetric so only Re ρ enters.
            let y = DVector::from_iterator(
                angles.len(),
                rotated_re.iter().map(|r| {
                    let mut acc = 0.0;
                    for i in 0..n {
                        let lo = i.saturating_sub(order);
                        let hi = (i + order + 1).min(n);
                        for j in lo..hi {
                            acc += r[(i, j)] * xpow[(j, i)];
                        }
                    }
                    acc
                }),
            );
            let sol = &weyl_pseudo_inverses()[order] * y;
            for (m, v) in sol.iter().enumerate() {
                mu[m][order - m] = *v;
            }
        }
        MomentTable { mu }
    }
}

/// Phases kπ/9, k = 0..8: enough to resolve every monomial of degree ≤ 8.
pub(crate) fn weyl_angles() -> [f64; N] {
    let mut a = [0.0; N];
    for (k, v) in a.iter_mut().enumerate() {
        *v = k as f64 * std::f64::consts::PI / N as f64;
    }
    a
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Rows j = 0..=order, columns k: X(θ_k)ᴺ = Σ_j C(N,j) cosʲθ sinᴺ⁻ʲθ :xʲpᴺ⁻ʲ:.
pub(crate) fn rotated_power_matrix(order: usize, thetas: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(thetas.len(), order + 1, |k, j| {
        let (s, c) = thetas[k].sin_cos();
        binomial(order, j) * c.powi(j as i32) * s.powi((order - j) as i32)
    })
}

fn weyl_pseudo_inverses() -> &'static Vec<DMatrix<f64>> {
    static CACHE: OnceLock<Vec<DMatrix<f64>>> = OnceLock::new();
    CACHE.get_or_init(|| {
        let angles = weyl_angles();
        (0..=MAX_DEGREE)
            .map(|order| {
                rotated_power_matrix(order, &angles)
                    .pseudo_inverse(1e-13)
                    .expect("pseudo-inverse of a well-conditioned matrix")
            })
            .collect()
    })
}

/// Minimum-norm coefficients A_k with Σ_k A_k X(θ_k)^{m+n} = :xᵐpⁿ:_W.
/// Fails when the monomial is not in the span of the given phases.
pub fn weyl_combination(m: usize, n: usize, thetas: &[f64]) -> Result<Vec<f64>> {
    let order = m + n;
    if order == 0 || order > MAX_DEGREE {
        return Err(Error::InvalidParameter(format!(
            "moment order must be in 1..={MAX_DEGREE}, got {order}"
        )));
    }
    if thetas.is_empty() || thetas.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter(
            "phase list must be non-empty and finite".into(),
        ));
    }
    // Columns of Bᵀ are the expansions of X(θ_k)ᴺ; solve Bᵀ A = e_m.
    let bt = rotated_power_matrix(order, thetas).transpose();
    let mut target = DVector::zeros(order + 1);
    target[m] = 1.0;
    let svd = bt.clone().svd(true, true);
    let a = svd
        .solve(&target, 1e-12)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let residual = (&bt * &a - &target).norm();
    if residual > 1e-10 {
        let distinct = distinct_mod_pi(thetas);
        if distinct < order + 1 {
            return Err(Error::InsufficientAngles {
                order,
                needed: order + 1,
                found: distinct,
            });
        }
        return Err(Error::SingularSystem { residual });
    }
    Ok(a.iter().cloned().collect())
}

pub(crate) fn distinct_mod_pi(thetas: &[f64]) -> usize {
    let pi = std::f64::consts::PI;
    let mut reduced: Vec<f64> = thetas.iter().map(|t| t.rem_euclid(pi)).collect();
    reduced.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut count = 0;
    let mut last: Option<f64> = None;
    for &t in &reduced {
        if last.is_none_or(|l| (t - l).abs() > 1e-9) {
            count += 1;
            last = Some(t);
        }
    }
    if count > 1 {
        let first = reduced[0];
        let lastv = *reduced.last().unwrap();
        if (pi - lastv + first).abs() < 1e-9 {
            count -= 1;
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn multiplication_and_eval() {
        let l = Poly2::linear(2.0, -1.0, 0.5);
        let sq = l.mul(&l);
        for &(x, p) in &[(0.3, -1.2), (1.7, 0.4)] {
            let v = 2.0 * x - p + 0.5;
            assert_abs_diff_eq!(sq.eval(x, p), v * v, epsilon = 1e-12);
            assert_abs_diff_eq!(l.powi(4).eval(x, p), v.powi(4), epsilon = 1e-10);
        }
        assert_eq!(l.powi(8).degree(), 8);
    }

    #[test]
    #[should_panic]
    fn degree_overflow_panics() {
        let l = Poly2::linear(1.0, 1.0, 0.0);
        let _ = l.powi(5).mul(&l.powi(4));
    }

    #[test]
    fn standard_normal_moments() {
        let t = MomentTable::gaussian([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]]);
        let double_fact = [1.0, 0.0, 1.0, 0.0, 3.0, 0.0, 15.0, 0.0, 105.0];
        for k in 0..=8 {
            assert_abs_diff_eq!(t.get(k, 0), double_fact[k], epsilon = 1e-12);
            assert_abs_diff_eq!(t.get(0, k), double_fact[k], epsilon = 1e-12);
        }
        assert_abs_diff_eq!(t.get(2, 2), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.get(4, 4), 9.0, epsilon = 1e-12);
    }

    #[test]
    fn correlated_gaussian_cross_moment() {
        // E[x²p²] = VxxVpp + 2Vxp² for zero mean
        let t = MomentTable::gaussian([0.0, 0.0], [[0.7, 0.2], [0.2, 0.9]]);
        assert_abs_diff_eq!(t.get(2, 2), 0.7 * 0.9 + 2.0 * 0.04, epsilon = 1e-12);
        assert_abs_diff_eq!(t.get(1, 1), 0.2, epsilon = 1e-15);
        let s = MomentTable::gaussian([0.5, -1.0], [[0.7, 0.2], [0.2, 0.9]]);
        assert_abs_diff_eq!(s.get(1, 1), 0.2 - 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.get(2, 0), 0.7 + 0.25, epsilon = 1e-15);
    }

    #[test]
    fn simple_combinations() {
        assert_abs_diff_eq!(
            weyl_combination(1, 0, &[0.0]).unwrap()[0],
            1.0,
            epsilon = 1e-14
        );
        let a = weyl_combination(0, 1, &[std::f64::consts::FRAC_PI_2]).unwrap();
        assert_abs_diff_eq!(a[0], 1.0, epsilon = 1e-14);
        assert!(matches!(
            weyl_combination(1, 1, &[0.0, std::f64::consts::PI]),
            Err(Error::InsufficientAngles { .. })
        ));
    }

    #[test]
    fn distinct_angles_modulo_pi() {
        let pi = std::f64::consts::PI;
        assert_eq!(distinct_mod_pi(&[0.0, pi, 2.0 * pi]), 1);
        assert_eq!(distinct_mod_pi(&[0.0, pi / 3.0, pi + pi / 3.0]), 2);
        assert_eq!(distinct_mod_pi(&[0.0, pi - 1e-12]), 1);
    }
}
