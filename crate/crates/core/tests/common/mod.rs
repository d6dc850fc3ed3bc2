//! Test-only oracles built directly on Fock-space matrices, sharing no code
//! with the library's moment-based witness.

#![allow(dead_code)]

use nalgebra::DMatrix;
use nlsq_core::{DensityMatrix, C64};

/// Levels added above the state's cutoff so that Ô² is exact on its support.
const PADDING: usize = 8;

struct Quadratures {
    x: DMatrix<C64>,
    p: DMatrix<C64>,
    rho: DMatrix<C64>,
}

impl Quadratures {
    fn new(rho: &DensityMatrix) -> Self {
        let n = rho.dim().get();
        let d = n + PADDING;
        let mut x = DMatrix::<C64>::zeros(d, d);
        let mut p = DMatrix::<C64>::zeros(d, d);
        for k in 1..d {
            let v = (k as f64 / 2.0).sqrt();
            x[(k - 1, k)] = C64::new(v, 0.0);
            x[(k, k - 1)] = C64::new(v, 0.0);
            p[(k - 1, k)] = C64::new(0.0, -v);
            p[(k, k - 1)] = C64::new(0.0, v);
        }
        let mut padded = DMatrix::<C64>::zeros(d, d);
        padded.view_mut((0, 0), (n, n)).copy_from(rho.matrix());
        Quadratures { x, p, rho: padded }
    }

    /// Var of p' + z x'² with x' = m00 x + m01 p + d0, p' = m10 x + m11 p.
    fn variance(&self, m: [[f64; 2]; 2], d0: f64, z: f64) -> f64 {
        let dim = self.x.nrows();
        let c = |v: f64| C64::new(v, 0.0);
        let xq = &self.x * c(m[0][0])
            + &self.p * c(m[0][1])
            + DMatrix::<C64>::identity(dim, dim) * c(d0);
        let pq = &self.x * c(m[1][0]) + &self.p * c(m[1][1]);
        let o = pq + &xq * &xq * c(z);
        let ro = &self.rho * &o;
        let mean = ro.trace().re;
        let second = (&ro * &o).trace().re;
        second - mean * mean
    }
}

/// R(a)·diag(e^{−r}, e^{r})·R(b), covering all of SL(2, R).
fn symplectic(a: f64, r: f64, b: f64) -> [[f64; 2]; 2] {
    let rot = |t: f64| [[t.cos(), t.sin()], [-t.sin(), t.cos()]];
    let mul = |u: [[f64; 2]; 2], v: [[f64; 2]; 2]| {
        let mut w = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                w[i][j] = u[i][0] * v[0][j] + u[i][1] * v[1][j];
            }
        }
        w
    };
    mul(mul(rot(a), [[(-r).exp(), 0.0], [0.0, r.exp()]]), rot(b))
}

/// min over Gaussian unitaries of Var(p + x²) divided by the closed-form
/// Gaussian bound 3/2^{5/3}: a coarse grid over (a, r, b, d0) followed by
/// compass search from the best grid points.
pub fn cubic_xi_bruteforce(rho: &DensityMatrix) -> f64 {
    let q = Quadratures::new(rho);
    let bound = 3.0 / 2f64.powf(5.0 / 3.0);
    let f = |v: &[f64; 4]| q.variance(symplectic(v[0], v[1], v[2]), v[3], 1.0) / bound;

    let pi = std::f64::consts::PI;
    let mut grid = Vec::new();
    for ia in 0..8 {
        for ir in 0..9 {
            for ib in 0..8 {
                for id in 0..9 {
                    let v = [
                        ia as f64 * pi / 8.0,
                        -1.2 + 0.3 * ir as f64,
                        ib as f64 * pi / 8.0,
                        -2.0 + 0.5 * id as f64,
                    ];
                    grid.push((f(&v), v));
                }
            }
        }
    }
    grid.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut best = f64::INFINITY;
    for &(mut val, mut v) in grid.iter().take(6) {
        let mut step = [pi / 16.0, 0.15, pi / 16.0, 0.25];
        while step.iter().any(|&s| s > 1e-7) {
            let mut improved = false;
            for k in 0..4 {
                for sign in [1.0, -1.0] {
                    let mut w = v;
                    w[k] += sign * step[k];
                    let fw = f(&w);
                    if fw < val {
                        val = fw;
                        v = w;
                        improved = true;
                    }
                }
            }
            if !improved {
                step.iter_mut().for_each(|s| *s *= 0.5);
            }
        }
        best = best.min(val);
    }
    best
}
