//! Wigner functions on uniform grids and their minima.
//!
//! Convention: W(x, p) integrates to one and the vacuum peaks at 1/π, so
//! the single-photon state reaches −1/π at the origin.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, C64};
use crate::gaussian::displacement_operator;
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::poly::MomentTable;

/// Number of standard deviations a grid must cover around the state mean.
pub const COVERAGE_SIGMAS: f64 = 5.0;
pub const DEFAULT_HALF_WIDTH: f64 = 6.0;
pub const DEFAULT_POINTS: usize = 201;

/// Uniform axis from `min` to `max` inclusive.
pub fn uniform_axis(min: f64, max: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && max > min);
    let step = (max - min) / (points - 1) as f64;
    (0..points).map(|k| min + step * k as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WignerGrid {
    x_axis: Vec<f64>,
    p_axis: Vec<f64>,
    /// Row-major, rows indexed by x.
    values: Vec<f64>,
}

impl WignerGrid {
    pub fn x_axis(&self) -> &[f64] {
        &self.x_axis
    }

    pub fn p_axis(&self) -> &[f64] {
        &self.p_axis
    }

    pub fn value(&self, ix: usize, ip: usize) -> f64 {
        self.values[ix * self.p_axis.len() + ip]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_area(&self) -> f64 {
        (self.x_axis[1] - self.x_axis[0]) * (self.p_axis[1] - self.p_axis[0])
    }

    /// Σ W ΔxΔp.
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }

    /// ∫W dp at each x node.
    pub fn marginal_x(&self) -> Vec<f64> {
        let dp = self.p_axis[1] - self.p_axis[0];
        self.values
            .chunks(self.p_axis.len())
            .map(|row| row.iter().sum::<f64>() * dp)
            .collect()
    }

    /// Smallest sample with its grid location.
    pub fn min_sample(&self) -> (f64, f64, f64) {
        let (k, v) = self
            .values
            .iter()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc },
            );
        let np = self.p_axis.len();
        (v, self.x_axis[k / np], self.p_axis[k % np])
    }

    /// CSV with header `x,p,w`, one row per grid point, x-major.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "p", "w"])?;
        for (i, &x) in self.x_axis.iter().enumerate() {
            for (j, &p) in self.p_axis.iter().enumerate() {
                w.write_record(&[x.to_string(), p.to_string(), self.value(i, j).to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Fock levels carrying population above 1e-20; higher levels contribute
/// below 1e-10/π to W because |W_{mn}| ≤ 1/π.
fn effective_levels(rho: &DensityMatrix) -> usize {
    let m = rho.matrix();
    let n = m.nrows();
    (0..n)
        .rev()
        .find(|&k| m[(k, k)].re.abs() > 1e-20)
        .map_or(1, |k| k + 1)
}

/// W(x, p) by the Laguerre recursion over Fock matrix elements.
pub fn wigner_at(rho: &DensityMatrix, x: f64, p: f64) -> f64 {
    wigner_point(rho.matrix(), effective_levels(rho), x, p)
}

fn wigner_point(m: &DMatrix<C64>, levels: usize, x: f64, p: f64) -> f64 {
    let a = C64::new(x, p) * std::f64::consts::FRAC_1_SQRT_2;
    let mut w_list = vec![C64::new(0.0, 0.0); levels];
    w_list[0] = C64::new((-2.0 * a.norm_sqr()).exp() / std::f64::consts::PI, 0.0);
    let mut w = m[(0, 0)].re * w_list[0].re;
    for n in 1..levels {
        w_list[n] = a * 2.0 * w_list[n - 1] / (n as f64).sqrt();
        w += 2.0 * (m[(0, n)] * w_list[n]).re;
    }
    for mm in 1..levels {
        let sm = (mm as f64).sqrt();
        let mut temp = w_list[mm];
        w_list[mm] = (a.conj() * 2.0 * temp - w_list[mm - 1] * sm) / sm;
        w += (m[(mm, mm)] * w_list[mm]).re;
        for n in mm + 1..levels {
            let temp2 = (a * 2.0 * w_list[n - 1] - temp * sm) / (n as f64).sqrt();
            temp = w_list[n];
            w_list[n] = temp2;
            w += 2.0 * (m[(mm, n)] * w_list[n]).re;
        }
    }
    w
}

/// Reference evaluation W = (1/π) Σ_k (−1)^k ⟨k|D†(β)ρD(β)|k⟩ with
/// β = (x + ip)/√2, using a displacement built in a space padded by
/// `padding` levels. Slow; for cross-checks.
pub fn wigner_displaced_parity(rho: &DensityMatrix, x: f64, p: f64, padding: usize) -> Result<f64> {
    let big = rho.dim().padded(padding);
    let beta = C64::new(x, p) * std::f64::consts::FRAC_1_SQRT_2;
    let d = displacement_operator(beta, big)?;
    let shifted = rho.resized(big).conjugated(&d.adjoint())?;
    let m = shifted.matrix();
    let s: f64 = (0..big.get())
        .map(|k| {
            if k % 2 == 0 {
                m[(k, k)].re
            } else {
                -m[(k, k)].re
            }
        })
        .sum();
    Ok(s / std::f64::consts::PI)
}

/// Mean and standard deviation of x and p.
pub fn quadrature_spread(rho: &DensityMatrix) -> ([f64; 2], [f64; 2]) {
    let mu = MomentTable::weyl_moments(rho);
    let mean = [mu.get(1, 0), mu.get(0, 1)];
    let sd = [
        (mu.get(2, 0) - mean[0] * mean[0]).max(0.0).sqrt(),
        (mu.get(0, 2) - mean[1] * mean[1]).max(0.0).sqrt(),
    ];
    (mean, sd)
}

/// W on the product grid. Each axis must cover the mean ± 5 standard
/// deviations of its quadrature.
pub fn wigner_evaluate(rho: &DensityMatrix, x_axis: &[f64], p_axis: &[f64]) -> Result<WignerGrid> {
    if x_axis.len() < 2 || p_axis.len() < 2 {
        return Err(Error::GridCoverage(
            "each axis needs at least two points".into(),
        ));
    }
    let (mean, sd) = quadrature_spread(rho);
    for (name, axis, c, s) in [("x", x_axis, mean[0], sd[0]), ("p", p_axis, mean[1], sd[1])] {
        let lo = c - COVERAGE_SIGMAS * s;
        let hi = c + COVERAGE_SIGMAS * s;
        let (amin, amax) = (axis[0], axis[axis.len() - 1]);
        if amin > lo || amax < hi {
            return Err(Error::GridCoverage(format!(
                "{name} axis [{amin}, {amax}] does not cover [{lo:.3}, {hi:.3}]"
            )));
        }
    }
    Ok(wigner_grid_unchecked(rho, x_axis, p_axis))
}

fn wigner_grid_unchecked(rho: &DensityMatrix, x_axis: &[f64], p_axis: &[f64]) -> WignerGrid {
    let levels = effective_levels(rho);
    let m = rho.matrix();
    let values: Vec<f64> = x_axis
        .par_iter()
        .flat_map_iter(|&x| p_axis.iter().map(move |&p| wigner_point(m, levels, x, p)))
        .collect();
    WignerGrid {
        x_axis: x_axis.to_vec(),
        p_axis: p_axis.to_vec(),
        values,
    }
}

/// Default evaluation window: [−6, 6]² at 201 points per axis, widened (at
/// the same spacing) when the state reaches beyond it.
pub fn default_axes(rho: &DensityMatrix) -> (Vec<f64>, Vec<f64>) {
    let (mean, sd) = quadrature_spread(rho);
    let step = 2.0 * DEFAULT_HALF_WIDTH / (DEFAULT_POINTS - 1) as f64;
    let axis = |c: f64, s: f64| {
        let lo = (c - COVERAGE_SIGMAS * s).min(-DEFAULT_HALF_WIDTH);
        let hi = (c + COVERAGE_SIGMAS * s).max(DEFAULT_HALF_WIDTH);
        let lo = (lo / step).floor() * step;
        let hi = (hi / step).ceil() * step;
        let n = ((hi - lo) / step).round() as usize + 1;
        uniform_axis(lo, hi, n)
    };
    (axis(mean[0], sd[0]), axis(mean[1], sd[1]))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerMinimum {
    pub value: f64,
    pub x: f64,
    pub p: f64,
}

/// Grid scan on the default window followed by simplex refinement from
/// the lowest grid samples. The result never exceeds the grid minimum.
pub fn wigner_minimum(rho: &DensityMatrix) -> WignerMinimum {
    let (xa, pa) = default_axes(rho);
    let grid = wigner_grid_unchecked(rho, &xa, &pa);
    let (gv, gx, gp) = grid.min_sample();
    let mut best = WignerMinimum {
        value: gv,
        x: gx,
        p: gp,
    };

    let (x_lo, x_hi) = (xa[0], xa[xa.len() - 1]);
    let (p_lo, p_hi) = (pa[0], pa[pa.len() - 1]);
    let step = xa[1] - xa[0];
    let levels = effective_levels(rho);
    let m = rho.matrix();
    let objective = |v: &[f64]| {
        let x = v[0].clamp(x_lo, x_hi);
        let p = v[1].clamp(p_lo, p_hi);
        wigner_point(m, levels, x, p)
    };
    let opts = NelderMeadOptions {
        max_evals: 400,
        f_tol: 1e-14,
        x_tol: 1e-9,
        restarts: 1,
    };
    for (x0, p0) in lowest_local_minima(&grid, 4) {
        let r = nelder_mead(objective, &[x0, p0], &[step, step], &opts);
        if r.f < best.value {
            best = WignerMinimum {
                value: r.f,
                x: r.x[0].clamp(x_lo, x_hi),
                p: r.x[1].clamp(p_lo, p_hi),
            };
        }
    }
    best
}

fn lowest_local_minima(grid: &WignerGrid, count: usize) -> Vec<(f64, f64)> {
    let nx = grid.x_axis.len();
    let np = grid.p_axis.len();
    let mut cands: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..nx {
        for j in 0..np {
            let v = grid.value(i, j);
            let mut is_min = true;
            for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let (ii, jj) = (i as i64 + di, j as i64 + dj);
                if ii < 0 || jj < 0 || ii >= nx as i64 || jj >= np as i64 {
                    continue;
                }
                if grid.value(ii as usize, jj as usize) < v {
                    is_min = false;
                    break;
                }
            }
            if is_min {
                cands.push((v, i, j));
            }
        }
    }
    cands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    cands
        .into_iter()
        .take(count)
        .map(|(_, i, j)| (grid.x_axis[i], grid.p_axis[j]))
        .collect()
}
