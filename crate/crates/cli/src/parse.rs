//! Parsers for the string arguments: state specs, cost specs, ranges and
//! optimizer budgets.

use nlsq_core::states::{dephasing_channel, squeezed_vacuum_ket};
use nlsq_core::{
    coherent_ket, fock_ket, loss_channel, photon_added_coherent, CostFamily, CostFunction,
    DensityMatrix, FockDim, OptimizerBudget, PhotonAddedSpec, C64,
};

use crate::error::CliError;

/// Pure state before the optional channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Source {
    Vacuum,
    Fock(usize),
    Coherent(C64),
    PhotonAdded { alpha: Option<C64>, n: u32 },
    Squeezed(f64),
}

/// A source followed by loss (transmittance `eta`) and optional dephasing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateSpec {
    pub source: Source,
    pub eta: f64,
    pub sigma: Option<f64>,
}

impl StateSpec {
    /// Density matrix on `n_levels` Fock levels.
    pub fn build(&self, n_levels: usize) -> Result<DensityMatrix, CliError> {
        let dim = FockDim::new(n_levels)?;
        let ket = match self.source {
            Source::Vacuum => fock_ket(0, dim)?,
            Source::Fock(n) => {
                if n >= n_levels {
                    return Err(CliError::Usage(format!(
                        "fock:{n} needs more than {n_levels} levels"
                    )));
                }
                fock_ket(n, dim)?
            }
            Source::Coherent(alpha) => coherent_ket(alpha, dim)?,
            Source::PhotonAdded { alpha, n } => {
                let alpha =
                    alpha.ok_or_else(|| CliError::Usage("pacs state needs alpha=".into()))?;
                photon_added_coherent(PhotonAddedSpec::new(alpha, n)?, dim)?
            }
            Source::Squeezed(r) => squeezed_vacuum_ket(r, dim)?,
        };
        let mut rho = DensityMatrix::from_ket(&ket)?;
        if self.eta != 1.0 {
            rho = loss_channel(&rho, self.eta)?;
        }
        if let Some(sigma) = self.sigma {
            rho = dephasing_channel(&rho, sigma)?;
        }
        Ok(rho)
    }

    /// The same spec with the photon-added amplitude replaced.
    pub fn with_alpha(&self, alpha: f64) -> Result<StateSpec, CliError> {
        match self.source {
            Source::PhotonAdded { n, .. } => Ok(StateSpec {
                source: Source::PhotonAdded {
                    alpha: Some(C64::new(alpha, 0.0)),
                    n,
                },
                ..*self
            }),
            _ => Err(CliError::Usage("an alpha sweep needs a pacs state".into())),
        }
    }

    pub fn with_eta(&self, eta: f64) -> StateSpec {
        StateSpec { eta, ..*self }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn number(key: &str, s: &str) -> Result<f64, CliError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| usage(format!("{key}: cannot parse \"{s}\" as a number")))?;
    if !v.is_finite() {
        return Err(usage(format!("{key}: value must be finite")));
    }
    Ok(v)
}

/// "1.0", "1.0+0.5i", "-0.3i", "2-1e-3i".
pub fn complex(key: &str, s: &str) -> Result<C64, CliError> {
    let t = s.trim();
    let Some(body) = t.strip_suffix('i') else {
        return Ok(C64::new(number(key, t)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (number(key, &body[..k])?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        v => number(key, v)?,
    };
    Ok(C64::new(re, im))
}

/// "kind[:arg,key=value,...]".
pub fn state_spec(s: &str) -> Result<StateSpec, CliError> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    let mut positional = None;
    let mut keyed = Vec::new();
    for item in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match item.split_once('=') {
            Some((k, v)) => keyed.push((k.trim(), v.trim())),
            None if positional.is_none() => positional = Some(item),
            None => return Err(usage(format!("state \"{s}\": unexpected \"{item}\""))),
        }
    }
    let mut eta = 1.0;
    let mut sigma = None;
    let mut alpha = None;
    let mut n = None;
    let mut r = None;
    for (k, v) in keyed {
        match k {
            "eta" => eta = number(k, v)?,
            "sigma" => sigma = Some(number(k, v)?),
            "alpha" => alpha = Some(complex(k, v)?),
            "n" => {
                n = Some(
                    v.parse::<u32>()
                        .map_err(|_| usage(format!("n: \"{v}\" is not a count")))?,
                )
            }
            "r" => r = Some(number(k, v)?),
            other => return Err(usage(format!("state \"{s}\": unknown key \"{other}\""))),
        }
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(usage(format!("eta must lie in (0, 1], got {eta}")));
    }
    let source = match kind.trim() {
        "vacuum" => Source::Vacuum,
        "fock" => {
            let k = match (positional, n) {
                (Some(p), None) => p
                    .parse()
                    .map_err(|_| usage(format!("fock: \"{p}\" is not a photon number")))?,
                (None, Some(k)) => k as usize,
                _ => return Err(usage("fock state needs one photon number")),
            };
            Source::Fock(k)
        }
        "coherent" => {
            let a = match (positional, alpha) {
                (Some(p), None) => complex("alpha", p)?,
                (None, Some(a)) => a,
                _ => return Err(usage("coherent state needs one amplitude")),
            };
            Source::Coherent(a)
        }
        "pacs" => {
            if let Some(p) = positional {
                return Err(usage(format!("pacs: unexpected \"{p}\"")));
            }
            Source::PhotonAdded {
                alpha,
                n: n.unwrap_or(1),
            }
        }
        "squeezed" => {
            let v = match (positional, r) {
                (Some(p), None) => number("r", p)?,
                (None, Some(v)) => v,
                _ => return Err(usage("squeezed state needs one r")),
            };
            Source::Squeezed(v)
        }
        other => {
            return Err(usage(format!(
                "unknown state kind \"{other}\" (expected vacuum, fock, coherent, pacs or squeezed)"
            )))
        }
    };
    Ok(StateSpec { source, eta, sigma })
}

/// "cubic", "cubic:z=1.0", "quintic", "quintic:s=1.0,r4=0.2". Coefficients
/// are validated; the witness optimizes them within the family.
pub fn cost_spec(s: &str) -> Result<CostFamily, CliError> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    let family: CostFamily = kind
        .parse()
        .map_err(|_| usage(format!("unknown cost family \"{kind}\"")))?;
    let mut z = 1.0;
    let mut sc = 1.0;
    let mut r4 = 0.0;
    for item in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (k, v) = item.split_once('=').ok_or_else(|| {
            usage(format!(
                "cost \"{s}\": expected key=value, found \"{item}\""
            ))
        })?;
        match (family, k.trim()) {
            (CostFamily::Cubic, "z") => z = number(k, v)?,
            (CostFamily::Quintic, "s") => sc = number(k, v)?,
            (CostFamily::Quintic, "r4") => r4 = number(k, v)?,
            (_, other) => return Err(usage(format!("cost \"{s}\": unknown key \"{other}\""))),
        }
    }
    match family {
        CostFamily::Cubic => CostFunction::cubic(z),
        CostFamily::Quintic => CostFunction::quintic(sc, r4),
    }
    .map_err(|e| usage(e.to_string()))?;
    Ok(family)
}

/// "a:b:step" with b included, values rounded to 12 decimals so that
/// printed grid points are exact.
pub fn range(name: &str, s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, step] = parts[..] else {
        return Err(usage(format!("{name}: expected a:b:step, found \"{s}\"")));
    };
    let (a, b, step) = (number(name, a)?, number(name, b)?, number(name, step)?);
    if !(step > 0.0) {
        return Err(usage(format!("{name}: step must be positive")));
    }
    if b < a {
        return Err(usage(format!("{name}: empty range {s}")));
    }
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| ((a + k as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// "min:max:points" for a Wigner axis.
pub fn axis(name: &str, s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(usage(format!(
            "{name}: expected min:max:points, found \"{s}\""
        )));
    };
    let (a, b) = (number(name, a)?, number(name, b)?);
    let n: usize = n
        .trim()
        .parse()
        .map_err(|_| usage(format!("{name}: \"{n}\" is not a point count")))?;
    if n < 2 || !(b > a) {
        return Err(usage(format!(
            "{name}: need max > min and at least 2 points"
        )));
    }
    Ok(nlsq_core::wigner::uniform_axis(a, b, n))
}

/// "starts:evals:tol".
pub fn budget(s: &str) -> Result<OptimizerBudget, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let [starts, evals, tol] = parts[..] else {
        return Err(usage(format!(
            "budget: expected starts:evals:tol, found \"{s}\""
        )));
    };
    let count = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|_| usage(format!("budget: \"{v}\" is not a count")))
    };
    OptimizerBudget::new(count(starts)?, count(evals)?, number("budget", tol)?)
        .map_err(|e| usage(e.to_string()))
}
