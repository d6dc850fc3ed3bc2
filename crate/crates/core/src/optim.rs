//! Derivative-free local search (Nelder–Mead) and low-discrepancy start
//! points for the multi-start drivers.

#[derive(Clone, Copy, Debug)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Converged when the spread of simplex values falls below this.
    pub f_tol: f64,
    /// ... and the simplex diameter falls below this.
    pub x_tol: f64,
    /// Fresh simplexes built around the incumbent after convergence.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_evals: 4000,
            f_tol: 1e-10,
            x_tol: 1e-7,
            restarts: 2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimizes `f` starting from `x0` with initial simplex offsets `step`.
///
/// After the simplex collapses, it is rebuilt around the best point with
/// the original step scaled by 0.1 and the search continues; the run stops
/// once a rebuild yields no improvement above `f_tol`.
pub fn nelder_mead<F>(
    mut f: F,
    x0: &[f64],
    step: &[f64],
    opts: &NelderMeadOptions,
) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    assert_eq!(dim, step.len());
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut best_x = x0.to_vec();
    let mut best_f = eval(&best_x, &mut evals);
    let mut converged = false;
    let mut scale = 1.0;

    for round in 0..=opts.restarts {
        let (x, fx, conv) = simplex_run(&mut eval, &best_x, best_f, step, scale, opts, &mut evals);
        let improved = best_f - fx > opts.f_tol;
        if fx < best_f {
            best_x = x;
            best_f = fx;
        }
        converged = conv;
        if !conv || evals >= opts.max_evals || (round > 0 && !improved) {
            break;
        }
        scale *= 0.1;
    }

    NelderMeadResult {
        x: best_x,
        f: best_f,
        evals,
        converged,
    }
}

fn simplex_run<E>(
    eval: &mut E,
    x0: &[f64],
    f0: f64,
    step: &[f64],
    scale: f64,
    opts: &NelderMeadOptions,
    evals: &mut usize,
) -> (Vec<f64>, f64, bool)
where
    E: FnMut(&[f64], &mut usize) -> f64,
{
    let dim = x0.len();
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    let mut vals: Vec<f64> = Vec::with_capacity(dim + 1);
    pts.push(x0.to_vec());
    vals.push(f0);
    for i in 0..dim {
        let mut p = x0.to_vec();
        p[i] += if step[i] != 0.0 {
            step[i] * scale
        } else {
            1e-3
        };
        vals.push(eval(&p, evals));
        pts.push(p);
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut order: Vec<usize> = (0..=dim).collect();
    loop {
        order.sort_by(|&a, &b| {
            vals[a]
                .partial_cmp(&vals[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let best = order[0];
        let worst = order[dim];
        let second = order[dim - 1];

        let spread = vals[worst] - vals[best];
        let diameter = pts
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&pts[best])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread.abs() <= opts.f_tol && diameter <= opts.x_tol.max(opts.f_tol) {
            return (pts[best].clone(), vals[best], true);
        }
        if spread.abs() <= opts.f_tol * 1e-3 {
            return (pts[best].clone(), vals[best], true);
        }
        if *evals >= opts.max_evals {
            return (pts[best].clone(), vals[best], false);
        }

        let mut centroid = vec![0.0; dim];
        for &i in order.iter().take(dim) {
            for (c, v) in centroid.iter_mut().zip(&pts[i]) {
                *c += v / dim as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[worst])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(alpha);
        let fr = eval(&xr, evals);
        if fr < vals[best] {
            let xe = along(gamma);
            let fe = eval(&xe, evals);
            if fe < fr {
                pts[worst] = xe;
                vals[worst] = fe;
            } else {
                pts[worst] = xr;
                vals[worst] = fr;
            }
            continue;
        }
        if fr < vals[second] {
            pts[worst] = xr;
            vals[worst] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[worst] {
            let xc = along(rho);
            let fc = eval(&xc, evals);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = eval(&xc, evals);
            (xc, fc)
        };
        if fc < vals[worst].min(fr) {
            pts[worst] = xc;
            vals[worst] = fc;
            continue;
        }
        let anchor = pts[best].clone();
        for &i in order.iter().skip(1) {
            let shrunk: Vec<f64> = anchor
                .iter()
                .zip(&pts[i])
                .map(|(a, p)| a + sigma * (p - a))
                .collect();
            vals[i] = eval(&shrunk, evals);
            pts[i] = shrunk;
        }
    }
}

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = base as u64;
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while index > 0 {
        out += (index % b) as f64 * inv;
        index /= b;
        inv /= base as f64;
    }
    out
}

/// Point `index` of the Halton sequence in `dim` ≤ 12 dimensions, in [0,1)^dim.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len());
    PRIMES[..dim]
        .iter()
        .map(|&b| radical_inverse(index, b))
        .collect()
}

/// `count` Halton points mapped into the box [lo, hi], skipping the first
/// `offset + 1` sequence entries.
pub fn halton_in_box(count: usize, offset: u64, lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    (0..count as u64)
        .map(|k| {
            halton(offset + k + 1, lo.len())
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(u, (l, h))| l + u * (h - l))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rosenbrock_minimum() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = nelder_mead(
            rosen,
            &[-1.2, 1.0],
            &[0.5, 0.5],
            &NelderMeadOptions {
                max_evals: 5000,
                f_tol: 1e-14,
                x_tol: 1e-9,
                restarts: 2,
            },
        );
        assert!(r.converged);
        assert_abs_diff_eq!(r.x[0], 1.0, epsilon = 1e-5);
        assert_abs_diff_eq!(r.x[1], 1.0, epsilon = 1e-5);
    }

    #[test]
    fn quadratic_in_five_dims() {
        let target = [0.3, -1.0, 2.0, 0.0, 0.7];
        let f = |x: &[f64]| {
            x.iter()
                .zip(&target)
                .enumerate()
                .map(|(i, (a, b))| (i + 1) as f64 * (a - b).powi(2))
                .sum::<f64>()
        };
        let r = nelder_mead(f, &[0.0; 5], &[1.0; 5], &NelderMeadOptions::default());
        assert!(r.f < 1e-9, "{}", r.f);
    }

    #[test]
    fn budget_is_respected() {
        let f = |x: &[f64]| x[0].sin() + x[1].cos() * x[0];
        let opts = NelderMeadOptions {
            max_evals: 50,
            ..Default::default()
        };
        let r = nelder_mead(f, &[0.0, 0.0], &[1.0, 1.0], &opts);
        assert!(r.evals <= 50 + 3);
        assert!(!r.converged);
    }

    #[test]
    fn halton_first_points() {
        assert_abs_diff_eq!(radical_inverse(1, 2), 0.5);
        assert_abs_diff_eq!(radical_inverse(3, 2), 0.75);
        assert_abs_diff_eq!(radical_inverse(5, 3), 2.0 / 3.0 + 1.0 / 9.0);
        let pts = halton_in_box(4, 0, &[0.0, -1.0], &[2.0, 1.0]);
        assert_abs_diff_eq!(pts[0][0], 1.0);
        assert_abs_diff_eq!(pts[0][1], -1.0 + 2.0 / 3.0);
    }
}
