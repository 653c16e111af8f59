//! Batch experiment runner for `lrperc`.
//!
//! Every subcommand resolves a TOML config plus flags into an
//! [`ExperimentConfig`], runs one estimator and writes its records as CSV or
//! JSON lines. Exit status: 0 on success, 2 for configuration, input or
//! output errors, 3 when the run finished but raised numerical flags.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::Parser;
use lrperc::edgelist::{parse_network, parse_spatial};
use lrperc::electric::{conductance_to_boundary, effective_conductance, escape_probability_mc, Network, TerminalPair};
use lrperc::estimators::{
    conductance_decay_experiment, delta_eff_estimate, edges_above_zero_experiment, long_edge_ladder,
    long_edge_probability, recurrence_verdict, DecaySource, Verdict, VerdictBudget,
};
use lrperc::mc::Exec;
use lrperc::model::sample_graph;
use lrperc::projection::project_to_znn;
use serde_json::json;

pub use config::{Command, ExperimentConfig, FileConfig, Format, Overrides};
use output::{render, Record};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_FLAGGED: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Input(#[from] lrperc::Error),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Parser)]
#[command(name = "lrperc", version, about = "Long-range percolation recurrence experiments")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// TOML experiment file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub replicas: Option<u64>,
    /// Result file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

/// What a command produced.
struct Outcome {
    /// Either records or a verbatim artifact such as an edge list.
    body: Body,
    summary: String,
    flags: Vec<String>,
}

enum Body {
    Records(Vec<Record>),
    Text(String),
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

pub fn run(cli: &Cli) -> Result<i32, CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let flags = Overrides { seed: cli.seed, replicas: cli.replicas, out: cli.out.clone(), format: cli.format };
    let config = ExperimentConfig::resolve(cli.command, file, flags)?;
    if cli.workers == Some(0) {
        return Err(CliError::Config("workers must be positive".into()));
    }
    let exec = cli.workers.map_or(Exec::default(), Exec::with_workers);
    let digest = config.digest();

    let outcome = execute(&config, exec)?;
    let text = match outcome.body {
        Body::Records(records) => render(&records, config.format, &digest, config.master_seed),
        Body::Text(body) => format!("# config_digest={digest}\n{body}"),
    };
    match &config.out {
        Some(path) => {
            fs::write(path, text).map_err(|source| CliError::Output { path: path.clone(), source })?;
            println!("{}", outcome.summary);
        }
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|source| CliError::Output { path: "<stdout>".into(), source })?;
            eprintln!("{}", outcome.summary);
        }
    }
    for f in &outcome.flags {
        eprintln!("flag: {f}");
    }
    Ok(if outcome.flags.is_empty() { EXIT_OK } else { EXIT_FLAGGED })
}

fn execute(c: &ExperimentConfig, exec: Exec) -> Result<Outcome, CliError> {
    match c.command {
        Command::Sample => sample(c),
        Command::Conductance => conductance(c),
        Command::Project => project(c),
        Command::Decay => decay(c, exec),
        Command::DeltaEff => delta_eff(c),
        Command::LongEdges => long_edges(c, exec),
        Command::EdgesAboveZero => edges_above_zero(c, exec),
        Command::Walk => walk(c, exec),
        Command::Verdict => verdict(c, exec),
    }
}

fn read_input(c: &ExperimentConfig) -> Result<Option<String>, CliError> {
    c.input
        .as_ref()
        .map(|p| fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display()))))
        .transpose()
}

/// The network named by `input`, or a sample of the model.
fn network(c: &ExperimentConfig) -> Result<Network, CliError> {
    Ok(match read_input(c)? {
        Some(text) => parse_network(&text)?,
        None => sample_graph(&c.model)?.to_network(),
    })
}

fn window_of(net: &Network) -> i64 {
    net.labels().iter().map(|z| z.abs()).max().unwrap_or(0)
}

/// Explicit source and sink, or the origin against `|z| >= radius`.
fn terminals(c: &ExperimentConfig, net: &Network) -> Result<TerminalPair, CliError> {
    match (&c.source, &c.sink) {
        (Some(a), Some(b)) => Ok(TerminalPair::new(a.clone(), b.clone())?),
        (None, None) => {
            let m = c.radius.unwrap_or_else(|| window_of(net));
            let sink: Vec<i64> = net.labels().iter().copied().filter(|z| z.abs() >= m).collect();
            Ok(TerminalPair::new(vec![c.origin], sink)?)
        }
        _ => Err(CliError::Config("source and sink must be given together".into())),
    }
}

fn sample(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    let g = sample_graph(&c.model)?;
    Ok(Outcome {
        summary: format!("sample: {} vertices, {} edges", g.vertices().count(), g.edges().len()),
        body: Body::Text(g.to_edge_list_string()),
        flags: vec![],
    })
}

fn project(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    let text = read_input(c)?.ok_or_else(|| CliError::Config("project needs estimator.input".into()))?;
    let g = parse_spatial(&text)?;
    let p = project_to_znn(&g);
    let mut body = Vec::new();
    p.write_edge_list(&mut body).expect("writing to a Vec");
    Ok(Outcome {
        summary: format!("project: path on [{}, {}] with {} edges", p.start, p.end(), p.conductances.len()),
        body: Body::Text(String::from_utf8(body).expect("ASCII")),
        flags: vec![],
    })
}

fn conductance(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    let net = network(c)?;
    let records = if c.source.is_some() || c.sink.is_some() {
        let t = terminals(c, &net)?;
        vec![Record::new("conductance", "terminals", effective_conductance(&net, &t)?)]
    } else {
        let n = window_of(&net);
        let radii: Vec<i64> = match c.radius {
            Some(m) => vec![m],
            None => c.radii.iter().copied().filter(|&m| m <= n).collect(),
        };
        if radii.is_empty() {
            return Err(CliError::Config(format!("no radius fits in the window of radius {n}")));
        }
        radii
            .iter()
            .map(|&m| Ok(Record::new("conductance", m, conductance_to_boundary(&net, c.origin, m)?).stderr(0.0)))
            .collect::<Result<Vec<_>, CliError>>()?
    };
    let summary = format!(
        "conductance: {}",
        records.iter().map(|r| format!("{}={}", output_key(r), r.point)).collect::<Vec<_>>().join(" ")
    );
    Ok(Outcome { body: Body::Records(records), summary, flags: vec![] })
}

fn output_key(r: &Record) -> String {
    match &r.key {
        serde_json::Value::String(s) => s.clone(),
        v => v.to_string(),
    }
}

fn decay(c: &ExperimentConfig, exec: Exec) -> Result<Outcome, CliError> {
    let source = match &c.law {
        Some(law) => DecaySource::Law(law.clone()),
        None => DecaySource::Model(c.model.clone()),
    };
    let fit = conductance_decay_experiment(&source, &c.radii, c.replicas, c.master_seed, exec)?;
    let mut records: Vec<Record> = fit
        .radii
        .iter()
        .zip(&fit.estimates)
        .map(|(&m, e)| Record::new("conductance", m, e.mean).stderr(e.stderr).replicas(e.count))
        .collect();
    if let (Some(slope), Some(se)) = (fit.fitted_slope, fit.slope_stderr) {
        records.push(Record::new("decay_slope", "fit", slope).stderr(se).replicas(c.replicas));
    }
    let summary = match fit.fitted_slope {
        Some(s) => format!("decay: slope {s:.4} ± {:.4} over {} radii", fit.slope_stderr.unwrap_or(f64::NAN), fit.radii.len()),
        None => "decay: slope undefined".to_string(),
    };
    Ok(Outcome { body: Body::Records(records), summary, flags: fit.flags })
}

fn delta_eff(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    let e = delta_eff_estimate(&c.model.kernel, &c.model.connection, &c.scales, c.quadrature_resolution)?;
    let mut records: Vec<Record> = e
        .scales
        .iter()
        .zip(&e.integrals)
        .zip(&e.refinement_change)
        .map(|((&n, &i), &ch)| Record::new("connection_integral", n, i).diagnostics(json!({ "refinement_change": ch })))
        .collect();
    records.push(Record::new("delta_eff", "estimate", e.estimate).stderr(e.uncertainty).diagnostics(json!({
        "divergent": e.divergent,
        "converged": e.converged,
        "fit_start": e.fit_start,
        "local_slopes": e.local_slopes,
    })));
    let mut flags = Vec::new();
    if !e.converged {
        flags.push(format!("quadrature did not converge (largest change {:e})", e.refinement_change.iter().fold(0.0f64, |a, &b| a.max(b))));
    }
    let summary = if e.divergent {
        "delta-eff: divergent (connection integral vanishes)".to_string()
    } else {
        format!("delta-eff: estimate {:.4} ± {:.4}", e.estimate, e.uncertainty)
    };
    Ok(Outcome { body: Body::Records(records), summary, flags })
}

fn long_edges(c: &ExperimentConfig, exec: Exec) -> Result<Outcome, CliError> {
    let record = |est: &lrperc::estimators::LongEdgeEstimate| {
        Record::new("long_edge_probability", est.k, est.probability.mean)
            .stderr(est.probability.stderr)
            .replicas(est.probability.count)
            .diagnostics(json!({ "exact": est.exact }))
    };
    // Widen the window so the largest scale fits.
    let kmax = c.ks.iter().copied().max().unwrap_or(0);
    let model = c.model.with_window(c.model.window_radius.max(1i64 << (kmax + 1).min(62)));
    if c.ks.len() == 1 {
        let est = long_edge_probability(&model, c.ks[0], c.replicas, c.master_seed, exec)?;
        let summary = format!("long-edges: P_{} = {:.4}", est.k, est.probability.mean);
        return Ok(Outcome { body: Body::Records(vec![record(&est)]), summary, flags: vec![] });
    }
    let ladder = long_edge_ladder(&model, &c.ks, c.replicas, c.master_seed, exec)?;
    let mut records: Vec<Record> = ladder.scales.iter().map(record).collect();
    if let (Some(t), Some(se)) = (ladder.theta, ladder.theta_stderr) {
        records.push(Record::new("theta", "fit", t).stderr(se).replicas(c.replicas).diagnostics(json!({
            "summable": ladder.summable,
            "partial_sums": ladder.partial_sums,
            "tail_estimate": ladder.tail_estimate,
        })));
    }
    let summary = format!(
        "long-edges: theta {} summable {}",
        ladder.theta.map_or("undefined".to_string(), |t| format!("{t:.4}")),
        ladder.summable
    );
    Ok(Outcome { body: Body::Records(records), summary, flags: vec![] })
}

fn edges_above_zero(c: &ExperimentConfig, exec: Exec) -> Result<Outcome, CliError> {
    let e = edges_above_zero_experiment(&c.model, c.replicas, c.master_seed, exec)?;
    let record = Record::new("edges_above_zero", c.model.window_radius, e.count.mean)
        .stderr(e.count.stderr)
        .replicas(e.count.count)
        .diagnostics(json!({ "expected": e.expected, "tail_bound": e.tail_bound }));
    let mut records = vec![record];
    if let Some(x) = e.expected {
        records.push(Record::new("edges_above_zero_expected", c.model.window_radius, x));
    }
    let summary = format!("edges-above-zero: mean {:.4} ± {:.4}", e.count.mean, e.count.stderr);
    Ok(Outcome { body: Body::Records(records), summary, flags: vec![] })
}

fn walk(c: &ExperimentConfig, exec: Exec) -> Result<Outcome, CliError> {
    let net = network(c)?;
    let t = terminals(c, &net)?;
    let e = escape_probability_mc(&net, &t, c.replicas, c.max_steps, c.master_seed, exec)?;
    let exact = effective_conductance(&net, &t)?;
    let diag = json!({ "escaped": e.escaped, "returned": e.returned, "censored": e.censored, "censored_rate": e.censored_rate });
    let records = vec![
        Record::new("escape_probability", "walk", e.probability.mean)
            .stderr(e.probability.stderr)
            .replicas(c.replicas)
            .diagnostics(diag),
        Record::new("conductance", "walk", e.conductance.mean).stderr(e.conductance.stderr).replicas(c.replicas),
        Record::new("conductance", "solver", exact).stderr(0.0),
    ];
    let mut flags = Vec::new();
    if e.censored > 0 {
        flags.push(format!("{} of {} walks censored at max_steps", e.censored, c.replicas));
    }
    let summary = format!(
        "walk: conductance {:.6} ± {:.6} (solver {exact:.6})",
        e.conductance.mean, e.conductance.stderr
    );
    Ok(Outcome { body: Body::Records(records), summary, flags })
}

fn verdict(c: &ExperimentConfig, exec: Exec) -> Result<Outcome, CliError> {
    let budget = VerdictBudget {
        scales: c.scales.clone(),
        quadrature_resolution: c.quadrature_resolution,
        long_edge_scales: c.ks.clone(),
        long_edge_replicas: c.replicas,
        radii: c.radii.clone(),
        decay_replicas: c.decay_replicas,
    };
    let r = recurrence_verdict(&c.model, &budget, c.master_seed, exec)?;
    let verdict_name = serde_json::to_value(r.verdict).expect("verdict serializes");
    let mut records = vec![Record::new("delta_eff", "estimate", r.delta_eff.estimate)
        .stderr(r.delta_eff.uncertainty)
        .diagnostics(json!({ "strong_decay": r.strong_decay, "converged": r.delta_eff.converged }))];
    if let (Some(t), Some(se)) = (r.long_edges.theta, r.long_edges.theta_stderr) {
        records.push(Record::new("theta", "fit", t).stderr(se).replicas(budget.long_edge_replicas));
    }
    records.push(
        Record::new("long_edges_summable", "criterion", if r.long_edges_summable { 1.0 } else { 0.0 })
            .diagnostics(json!({ "partial_sums": r.long_edges.partial_sums })),
    );
    if let (Some(s), Some(se)) = (r.decay.fitted_slope, r.decay.slope_stderr) {
        records.push(Record::new("decay_slope", "fit", s).stderr(se).replicas(budget.decay_replicas));
    }
    records.push(
        Record::new("verdict", verdict_name.clone(), if r.verdict == Verdict::ConsistentWithRecurrence { 1.0 } else { 0.0 })
            .diagnostics(json!({ "flags": r.flags, "notes": r.notes })),
    );
    let mut flags = r.flags.clone();
    if r.verdict == Verdict::Inconclusive && flags.is_empty() {
        flags.push("verdict inconclusive".into());
    }
    let summary = format!(
        "verdict: {} (delta_eff {:.3} ± {:.3}, long edges summable {}, decay slope {})",
        verdict_name.as_str().unwrap_or("?"),
        r.delta_eff.estimate,
        r.delta_eff.uncertainty,
        r.long_edges_summable,
        r.decay.fitted_slope.map_or("undefined".into(), |s| format!("{s:.3}"))
    );
    Ok(Outcome { body: Body::Records(records), summary, flags })
}
