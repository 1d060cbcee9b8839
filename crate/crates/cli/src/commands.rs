use rayon::prelude::*;
use serde::Serialize;

use ccsc_core::baselines::{ia_precoders_for, random_precoders, IaSelection};
use ccsc_core::ccsc::{ccsc_report, saturation_report, CcscReport, SaturationReport};
use ccsc_core::infotheory::{rate_report, sum_rate_mc};
use ccsc_core::model::json::{read_scenario, scenario_to_json};
use ccsc_core::optimizer::{evaluation_seed, optimize_sum_rate, sig6};
use ccsc_core::sampling::{random_channel_blocks, substream_seed};
use ccsc_core::{
    ChannelSet, Constellation, ConstellationKind, OptimizeParams, RateMethod, Scenario, ScenarioParts,
};

use crate::output::{json, parse_grid, write_file, CliError, CliResult, Csv};
use crate::{CcscArgs, ErgodicArgs, ErgodicPrecoder, EvalArgs, Format, IaArgs, Init, OptimizeArgs, SweepArgs};

/// Tolerances above this make almost any difference count as zero.
const LOOSE_TOL: f64 = 1e-3;

fn load(path: &std::path::Path, power_db: Option<f64>) -> CliResult<Scenario> {
    let s = read_scenario(path)?;
    Ok(match power_db {
        Some(p) if p.is_finite() => s.with_power_db(p),
        Some(_) => return Err(CliError::usage("--power-db must be finite")),
        None => s,
    })
}

pub fn eval(a: EvalArgs) -> CliResult<String> {
    let s = load(&a.scenario, a.power_db)?;
    let report = rate_report(&s, a.method, a.samples, a.seed)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(match a.format {
        Format::Json => json(&report),
        Format::Csv => {
            let mut columns = vec!["user".to_string(), "rate".to_string()];
            let mut extra: Vec<&Vec<f64>> = Vec::new();
            for (name, values) in [
                ("std_error", &report.std_error),
                ("joint", &report.joint),
                ("conditional", &report.conditional),
            ] {
                if let Some(v) = values {
                    columns.push(name.to_string());
                    extra.push(v);
                }
            }
            let mut csv = Csv::new("eval", &columns);
            for (i, r) in report.per_user.iter().enumerate() {
                let mut row = vec![*r];
                row.extend(extra.iter().map(|v| v[i]));
                csv.row_prefixed(&[(i + 1).to_string()], &row);
            }
            csv.finish()
        }
    })
}

#[derive(Serialize)]
struct CcscOutput {
    ccsc: CcscReport,
    saturation: SaturationReport,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
}

pub fn ccsc(a: CcscArgs) -> CliResult<String> {
    if !(a.tol >= 0.0) || !a.tol.is_finite() {
        return Err(CliError::usage("--tol must be a non-negative finite number"));
    }
    let s = load(&a.scenario, None)?;
    let report = ccsc_report(&s, a.tol)?;
    let saturation = saturation_report(&s, a.tol)?;
    let mut warnings = Vec::new();
    if a.tol > LOOSE_TOL {
        warnings.push(format!(
            "tolerance {} is far above round-off; nonzero differences will be treated as zero",
            a.tol
        ));
    }
    if report.users.iter().all(|u| u.min_nonzero_norm.is_none()) {
        warnings.push("every difference tuple fell under the tolerance".into());
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    Ok(json(&CcscOutput {
        ccsc: report,
        saturation,
        warnings,
    }))
}

fn ia_scenario(s: &Scenario, selection: IaSelection, samples: usize, seed: u64) -> CliResult<Scenario> {
    let v = ia_precoders_for(s, selection, samples, seed)?;
    Ok(s.with_precoders(v)?)
}

pub fn optimize(a: OptimizeArgs) -> CliResult<String> {
    let s = load(&a.scenario, a.power_db)?;
    let start = match a.init {
        Init::File => s,
        Init::Ia => ia_scenario(&s, a.ia_eigenvector.into(), a.samples, a.seed)?,
        Init::Random => {
            let v = random_precoders(&s, a.seed);
            s.with_precoders(v)?
        }
    };
    let params = OptimizeParams {
        alpha: a.alpha,
        beta: a.beta,
        epsilon: a.epsilon,
        max_iterations: a.max_iter,
        samples: a.samples,
        seed: a.seed,
    };
    let trace = optimize_sum_rate(&start, &params)?;
    eprintln!(
        "sum-rate {:.4} -> {:.4} bits (improvement {:.4}), {} iterations, {:?}",
        trace.initial_sum_rate,
        trace.final_sum_rate,
        trace.improvement(),
        trace.iterations.len(),
        trace.termination
    );
    if let Some(path) = &a.trace_csv {
        write_file(path, &trace.to_csv())?;
    }
    if let Some(path) = &a.precoders_out {
        let done = start.with_precoders(trace.final_precoders.clone())?;
        write_file(path, &(scenario_to_json(&done) + "\n"))?;
    }
    Ok(trace.to_json() + "\n")
}

fn parse_methods(spec: &str) -> CliResult<Vec<RateMethod>> {
    let mut methods = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let m: RateMethod = part.parse().map_err(CliError::usage)?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    if methods.is_empty() {
        return Err(CliError::usage("--methods is empty"));
    }
    Ok(methods)
}

pub fn sweep(a: SweepArgs) -> CliResult<String> {
    let grid = parse_grid(&a.power_db_grid)?;
    let methods = parse_methods(&a.methods)?;
    let s = load(&a.scenario, None)?;
    let k = s.users();
    let mut columns = vec!["power_db".to_string()];
    for m in &methods {
        columns.extend((1..=k).map(|i| format!("{m}_user{i}")));
        columns.push(format!("{m}_sum"));
    }
    // every grid point reuses the same seed, so the noise draws are shared
    let rows = grid
        .iter()
        .map(|&p| {
            let at = s.with_power_db(p);
            let mut row = vec![p];
            for &m in &methods {
                let r = rate_report(&at, m, a.samples, a.seed)?;
                row.extend(&r.per_user);
                row.push(r.sum_rate());
            }
            Ok(row)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut csv = Csv::new("sweep", &columns);
    for r in &rows {
        csv.row(r);
    }
    Ok(csv.finish())
}

struct DrawResult {
    ia: f64,
    optimized: Option<f64>,
}

pub fn ergodic(a: ErgodicArgs) -> CliResult<String> {
    if a.draws == 0 {
        return Err(CliError::usage("--draws must be at least 1"));
    }
    if (a.users, a.antennas, a.streams) != (3, 2, 1) {
        return Err(CliError::usage(
            "alignment precoders need --users 3 --antennas 2 --streams 1",
        ));
    }
    let grid = parse_grid(&a.power_db_grid)?;
    let tx = vec![a.antennas; a.users];
    let base = Scenario::new(ScenarioParts {
        tx_antennas: tx.clone(),
        rx_antennas: tx.clone(),
        streams: vec![a.streams; a.users],
        power_db: 0.0,
        constellation: Constellation::new(ConstellationKind::Psk, 4)?,
        channels: ChannelSet::from_fn(a.users, |_, _| ccsc_core::CMatrix::identity(a.antennas, a.antennas)),
        precoders: None,
    })?;
    let optimize = a.precoder != ErgodicPrecoder::Ia;

    let mut columns = vec!["power_db".to_string(), "draws".to_string()];
    if a.precoder != ErgodicPrecoder::Optimized {
        columns.push("ia_sum_rate".into());
    }
    if optimize {
        columns.push("optimized_sum_rate".into());
    }
    if a.precoder == ErgodicPrecoder::Both {
        columns.push("gap".into());
    }
    let mut csv = Csv::new("ergodic", &columns);

    for (pi, &p) in grid.iter().enumerate() {
        let results = (0..a.draws)
            .into_par_iter()
            .map(|d| -> CliResult<DrawResult> {
                let channels = ChannelSet::from_rx_major(random_channel_blocks(a.seed, d as u64, &tx, &tx))?;
                let draw_seed = substream_seed(a.seed, &[d as u64, pi as u64]);
                let at = base.with_channels(channels)?.with_power_db(p);
                let s = ia_scenario(&at, a.ia_eigenvector.into(), a.samples, draw_seed)?;
                let eval_seed = evaluation_seed(substream_seed(a.seed, &[d as u64]));
                let ia = sum_rate_mc(&s, a.samples, eval_seed)?.bits;
                let optimized = if optimize {
                    let params = OptimizeParams {
                        max_iterations: a.max_iter,
                        samples: a.samples,
                        seed: draw_seed,
                        ..OptimizeParams::default()
                    };
                    let trace = optimize_sum_rate(&s, &params)?;
                    let done = s.with_precoders(trace.final_precoders)?;
                    Some(sum_rate_mc(&done, a.samples, eval_seed)?.bits)
                } else {
                    None
                };
                Ok(DrawResult { ia, optimized })
            })
            .collect::<CliResult<Vec<_>>>()?;
        let n = results.len() as f64;
        let ia = results.iter().map(|r| r.ia).sum::<f64>() / n;
        let opt = results.iter().filter_map(|r| r.optimized).sum::<f64>() / n;
        let mut row = Vec::new();
        if a.precoder != ErgodicPrecoder::Optimized {
            row.push(ia);
        }
        if optimize {
            row.push(opt);
        }
        if a.precoder == ErgodicPrecoder::Both {
            row.push(opt - ia);
        }
        csv.row_prefixed(&[sig6(p), a.draws.to_string()], &row);
    }
    Ok(csv.finish())
}

pub fn ia_precoder(a: IaArgs) -> CliResult<String> {
    let s = load(&a.scenario, None)?;
    Ok(scenario_to_json(&ia_scenario(&s, a.ia_eigenvector.into(), a.samples, a.seed)?) + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn methods_parse() {
        assert_eq!(parse_methods("mc, gaussian,mc").unwrap(), vec![RateMethod::Mc, RateMethod::Gaussian]);
        assert!(parse_methods("").is_err());
        assert!(parse_methods("mc,nope").is_err());
    }
}
