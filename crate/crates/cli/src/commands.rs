use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use nlsq_core::homodyne::{
    bootstrap_xi, ml_reconstruct, read_records, sample_quadratures, uniform_phases, write_records,
};
use nlsq_core::wigner::default_axes;
use nlsq_core::witness::{nonlinear_squeezing_seeded, BootstrapSummary};
use nlsq_core::{
    certify as certify_state, fidelity, wigner_evaluate, wigner_minimum, CostFamily, CostFunction,
    DensityMatrix, FockDim, GaussianUnitaryParams, OptimizerBudget, TomographyConfig,
};

use crate::error::CliError;
use crate::parse::{self, StateSpec};
use crate::Common;

const STATE_LEVELS: usize = 60;
const RECONSTRUCTION_LEVELS: usize = 25;

fn open_output(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_text(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    let mut w = open_output(out)?;
    writeln!(w, "{text}")?;
    w.flush()?;
    Ok(())
}

fn state_levels(common: &Common) -> usize {
    common.n_levels.unwrap_or(STATE_LEVELS)
}

#[derive(Serialize)]
struct CurveParams<'a> {
    unitary: &'a GaussianUnitaryParams,
    cost: &'a CostFunction,
}

pub fn curve(state: &str, alpha_range: &str, cost: &str, common: &Common) -> Result<(), CliError> {
    let spec = parse::state_spec(state)?;
    let family = parse::cost_spec(cost)?;
    let budget = parse::budget(&common.budget)?;
    let alphas = parse::range("alpha-range", alpha_range)?;
    let specs = alphas
        .iter()
        .map(|&a| spec.with_alpha(a))
        .collect::<Result<Vec<_>, _>>()?;
    let levels = state_levels(common);
    let rows = specs
        .par_iter()
        .map(|s| -> Result<[String; 4], CliError> {
            let w = nonlinear_squeezing_seeded(&s.build(levels)?, family, &budget, common.seed)?;
            let params = serde_json::to_string(&CurveParams {
                unitary: &w.best_unitary,
                cost: &w.best_cost,
            })?;
            Ok([
                w.xi.to_string(),
                w.nominator.to_string(),
                w.denominator.to_string(),
                params,
            ])
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut w = csv::Writer::from_writer(open_output(common.out.as_deref())?);
    w.write_record([
        "alpha",
        "xi",
        "nominator",
        "denominator",
        "best_params_json",
    ])?;
    for (alpha, row) in alphas.iter().zip(rows) {
        let [xi, nom, den, params] = row;
        w.write_record([alpha.to_string(), xi, nom, den, params])?;
    }
    w.flush()?;
    Ok(())
}

pub fn loss_sweep(state: &str, eta_range: &str, common: &Common) -> Result<(), CliError> {
    let spec = parse::state_spec(state)?;
    let budget = parse::budget(&common.budget)?;
    let etas = parse::range("eta-range", eta_range)?;
    if let Some(bad) = etas.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
        return Err(CliError::Usage(format!(
            "eta-range: {bad} is outside (0, 1]"
        )));
    }
    let levels = state_levels(common);
    // Sweep losses compose with any loss already in the spec.
    let rows = etas
        .par_iter()
        .map(|&eta| -> Result<(f64, f64), CliError> {
            let rho = spec.with_eta(spec.eta * eta).build(levels)?;
            let xi = nonlinear_squeezing_seeded(&rho, CostFamily::Cubic, &budget, common.seed)?.xi;
            Ok((xi, wigner_minimum(&rho).value))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut w = csv::Writer::from_writer(open_output(common.out.as_deref())?);
    w.write_record(["eta", "xi_cubic", "wigner_min"])?;
    for (eta, (xi, wmin)) in etas.iter().zip(rows) {
        w.write_record([eta.to_string(), xi.to_string(), wmin.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn reconstruction_config(
    common: &Common,
    efficiency: f64,
    max_iters: usize,
) -> Result<TomographyConfig, CliError> {
    let config = TomographyConfig {
        n_levels: FockDim::new(common.n_levels.unwrap_or(RECONSTRUCTION_LEVELS))?,
        efficiency,
        max_iters,
        ..TomographyConfig::default()
    };
    config.validate()?;
    Ok(config)
}

fn read_input(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::reading(&path.display().to_string(), e))
}

pub fn certify(
    input: Option<&Path>,
    state: Option<&str>,
    bootstrap: Option<usize>,
    efficiency: f64,
    common: &Common,
) -> Result<(), CliError> {
    let budget = parse::budget(&common.budget)?;
    let report = match (input, state) {
        (None, Some(spec)) => certify_state(
            &parse::state_spec(spec)?.build(state_levels(common))?,
            &budget,
        )?,
        (Some(path), None) => {
            let name = path.display().to_string();
            let text = read_input(path)?;
            if text.trim_start().starts_with('{') {
                let rho =
                    DensityMatrix::from_json(&text).map_err(|e| CliError::reading(&name, e))?;
                certify_state(&rho, &budget)?
            } else {
                let records =
                    read_records(text.as_bytes()).map_err(|e| CliError::reading(&name, e))?;
                let config = reconstruction_config(
                    common,
                    efficiency,
                    TomographyConfig::default().max_iters,
                )?;
                let rho = ml_reconstruct(&records, &config)?.state;
                let mut report = certify_state(&rho, &budget)?;
                if let Some(n) = bootstrap {
                    report.diagnostics.bootstrap =
                        bootstrap_summaries(&records, &config, n, common.seed, &budget)?;
                }
                report
            }
        }
        _ => {
            return Err(CliError::Usage(
                "certify needs exactly one of --input and --state".into(),
            ))
        }
    };
    write_text(common.out.as_deref(), &report.to_json()?)
}

fn bootstrap_summaries(
    records: &[nlsq_core::QuadratureRecord],
    config: &TomographyConfig,
    n: usize,
    seed: u64,
    budget: &OptimizerBudget,
) -> Result<Vec<BootstrapSummary>, CliError> {
    [CostFamily::Cubic, CostFamily::Quintic]
        .into_iter()
        .map(|family| {
            let b = bootstrap_xi(records, config, family, n, seed, budget)?;
            Ok(BootstrapSummary {
                family,
                n_resamples: n,
                mean: b.mean,
                std: b.std,
            })
        })
        .collect()
}

pub fn sample(
    state: &str,
    phases: usize,
    per_phase: usize,
    common: &Common,
) -> Result<(), CliError> {
    if phases == 0 || per_phase == 0 {
        return Err(CliError::Usage(
            "--phases and --per-phase must be positive".into(),
        ));
    }
    let rho = parse::state_spec(state)?.build(state_levels(common))?;
    let records = sample_quadratures(&rho, &uniform_phases(phases), per_phase, common.seed)?;
    let mut w = open_output(common.out.as_deref())?;
    write_records(&records, &mut w)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TomographySummary {
    fidelity: Option<f64>,
    iterations: usize,
    converged: bool,
    dropped_records: usize,
    log_likelihood: f64,
}

pub fn tomography(
    input: &Path,
    efficiency: f64,
    reference: Option<&str>,
    max_iters: usize,
    common: &Common,
) -> Result<(), CliError> {
    let reference: Option<StateSpec> = reference.map(parse::state_spec).transpose()?;
    let config = reconstruction_config(common, efficiency, max_iters)?;
    let records = read_records(read_input(input)?.as_bytes())
        .map_err(|e| CliError::reading(&input.display().to_string(), e))?;
    let result = ml_reconstruct(&records, &config)?;
    let fidelity = match reference {
        Some(spec) => {
            let levels = STATE_LEVELS.max(config.n_levels.get());
            let truth = spec.build(levels)?;
            Some(fidelity(
                &result.state.resized(FockDim::new(levels)?),
                &truth,
            )?)
        }
        None => None,
    };
    let summary = TomographySummary {
        fidelity,
        iterations: result.iterations,
        converged: result.converged,
        dropped_records: result.dropped_records,
        log_likelihood: result.log_likelihood.last().copied().unwrap_or(f64::NAN),
    };
    write_text(common.out.as_deref(), &result.state.to_json()?)?;
    if common.out.is_some() {
        println!("{}", serde_json::to_string(&summary)?);
    } else {
        eprintln!("{}", serde_json::to_string(&summary)?);
    }
    Ok(())
}

pub fn wigner(
    state: &str,
    x_axis: Option<&str>,
    p_axis: Option<&str>,
    common: &Common,
) -> Result<(), CliError> {
    let rho = parse::state_spec(state)?.build(state_levels(common))?;
    let (dx, dp) = default_axes(&rho);
    let xs = x_axis
        .map(|s| parse::axis("x-axis", s))
        .transpose()?
        .unwrap_or(dx);
    let ps = p_axis
        .map(|s| parse::axis("p-axis", s))
        .transpose()?
        .unwrap_or(dp);
    let grid = wigner_evaluate(&rho, &xs, &ps)?;
    let out = common.out.as_deref();
    if out.is_some_and(|p| p.extension().is_some_and(|e| e == "csv")) {
        grid.write_csv(open_output(out)?)?;
        Ok(())
    } else {
        write_text(out, &grid.to_json()?)
    }
}
