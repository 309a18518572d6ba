use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use nambd::experiment::{run_experiment_with_threads, summarize, RunOptions};
use nambd::io::{self, load_manifest, load_potential, load_spec, write_outputs, ReportFormat, RunManifest};
use nambd::rates::{
    analytic_beta, association_rate, beta_infinity, beta_with_potential, rate_with_potential, smoluchowski_rate,
    DEFAULT_QUAD_TOL,
};
use nambd::spacepi::{lower_to_nam, parse_model};

#[derive(Parser)]
#[command(name = "nambd", version, about = "Brownian dynamics estimation of diffusional association rates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum TextOrJson {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run a validation experiment; exit 0 if every cell is valid, 1 otherwise.
    Validate {
        /// Experiment configuration (TOML, or JSON by extension).
        #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
        spec: Option<PathBuf>,
        /// Re-run the experiment recorded in a manifest.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, default_value = "nambd-out")]
        out: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Report format; both when omitted.
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Write the trajectory of the first replication of every cell.
        #[arg(long)]
        trace: bool,
    },
    /// Print analytic rates for a geometry.
    Rates {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        q: f64,
        #[arg(long = "D")]
        diffusion: f64,
        /// Potential of mean force file (TOML or JSON).
        #[arg(long)]
        pmf: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: TextOrJson,
    },
    /// Parse and lower a model file.
    ParseCheck {
        #[arg(long)]
        model: PathBuf,
        /// Diffusion coefficient used for lowering.
        #[arg(long = "D", default_value_t = 1.0)]
        diffusion: f64,
    },
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn validate(
    spec: Option<PathBuf>,
    manifest: Option<PathBuf>,
    out: PathBuf,
    seed: Option<u64>,
    format: Option<Format>,
    trace: bool,
) -> ExitCode {
    let loaded = match (spec, manifest) {
        (Some(p), _) => load_spec(&p),
        (None, Some(p)) => load_manifest(&p).map(|m| m.spec),
        (None, None) => unreachable!("clap requires one of --spec/--manifest"),
    };
    let mut spec = match loaded {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    if let Some(s) = seed {
        spec.master_seed = s;
    }
    let threads = match io::threads_from_env() {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    let options = RunOptions { record_replications: true, trace_replications: u64::from(trace) };
    let started = SystemTime::now();
    let clock = Instant::now();
    let outcome = match run_experiment_with_threads(&spec, options, threads) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    let report = match summarize(&outcome.verdicts, spec.tolerance, spec.confidence) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let used = if threads == 0 { rayon::current_num_threads() } else { threads };
    let manifest = RunManifest::new(&spec, &outcome.verdicts, used, started, clock.elapsed());
    let formats = match format {
        Some(Format::Csv) => vec![ReportFormat::Csv],
        Some(Format::Json) => vec![ReportFormat::Json],
        None => vec![ReportFormat::Csv, ReportFormat::Json],
    };
    if let Err(e) = write_outputs(&out, &report, &outcome, &manifest, &formats) {
        return fail(e);
    }

    println!("{:<36} {:>6} {:>9} {:>9} {:>9} {:>8}  verdict", "engine", "D", "beta_ref", "beta_hat", "ci", "n");
    for row in &report.rows {
        let fmt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.5}"));
        let verdict = match (&row.error, row.valid) {
            (Some(e), _) => format!("error: {e}"),
            (None, true) => "valid".into(),
            (None, false) => "INVALID".into(),
        };
        println!(
            "{:<36} {:>6} {:>9.5} {:>9} {:>9} {:>8}  {}{}",
            row.engine,
            row.diffusion,
            row.beta_ref,
            fmt(row.beta_hat),
            fmt(row.ci_half_width),
            row.n,
            verdict,
            if row.capped { " (capped)" } else { "" }
        );
    }
    println!("results written to {}", out.display());
    if report.all_valid {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

#[derive(Serialize)]
struct RatesOutput {
    beta_a: f64,
    k_b: f64,
    k_q: f64,
    beta_inf: f64,
    k: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_b_pmf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_q_pmf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta_pmf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_pmf: Option<f64>,
}

fn rates(a: f64, b: f64, q: f64, d: f64, pmf: Option<PathBuf>, format: TextOrJson) -> ExitCode {
    let compute = || -> Result<RatesOutput, String> {
        let err = |e: nambd::rates::RatesError| e.to_string();
        let beta_a = analytic_beta(a, b, q).map_err(err)?;
        let k_b = smoluchowski_rate(d, b).map_err(err)?;
        let k_q = smoluchowski_rate(d, q).map_err(err)?;
        let beta_inf = beta_infinity(beta_a, k_b, k_q).map_err(err)?;
        let k = association_rate(k_b, beta_inf).map_err(err)?;
        let mut out = RatesOutput { beta_a, k_b, k_q, beta_inf, k, k_b_pmf: None, k_q_pmf: None, beta_pmf: None, k_pmf: None };
        if let Some(path) = pmf {
            let pmf = load_potential(&path).map_err(|e| e.to_string())?;
            let kb = rate_with_potential(d, b, &pmf, DEFAULT_QUAD_TOL).map_err(err)?;
            let kq = rate_with_potential(d, q, &pmf, DEFAULT_QUAD_TOL).map_err(err)?;
            let beta = beta_with_potential(a, b, q, &pmf, DEFAULT_QUAD_TOL).map_err(err)?;
            let binf = beta_infinity(beta, kb, kq).map_err(err)?;
            out.k_b_pmf = Some(kb);
            out.k_q_pmf = Some(kq);
            out.beta_pmf = Some(beta);
            out.k_pmf = Some(association_rate(kb, binf).map_err(err)?);
        }
        Ok(out)
    };
    let out = match compute() {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    match format {
        TextOrJson::Json => print!("{}", io::to_json(&out)),
        TextOrJson::Text => {
            println!("beta_a    = {:.6}", out.beta_a);
            println!("k_D(b)    = {:.6}", out.k_b);
            println!("k_D(q)    = {:.6}", out.k_q);
            println!("beta_inf  = {:.6}", out.beta_inf);
            println!("k         = {:.6}", out.k);
            if let (Some(kb), Some(kq), Some(beta), Some(k)) = (out.k_b_pmf, out.k_q_pmf, out.beta_pmf, out.k_pmf) {
                println!("with potential:");
                println!("k_E(b)    = {kb:.6}");
                println!("k_E(q)    = {kq:.6}");
                println!("beta      = {beta:.6}");
                println!("k         = {k:.6}");
            }
        }
    }
    ExitCode::SUCCESS
}

fn parse_check(model: PathBuf, diffusion: f64) -> ExitCode {
    let text = match std::fs::read_to_string(&model) {
        Ok(t) => t,
        Err(e) => return fail(format!("{}: {e}", model.display())),
    };
    let doc = match parse_model(&text) {
        Ok(d) => d,
        Err(e) => return fail(format!("{}:{e}", model.display())),
    };
    let lowered = match lower_to_nam(&doc, diffusion) {
        Ok(l) => l,
        Err(e) => return fail(format!("{}: {e}", model.display())),
    };
    let g = lowered.geometry;
    println!(
        "{}: ok: a={}, b={}, q={}, D={}, potential={:?}",
        model.display(),
        g.reaction_radius(),
        g.start_radius(),
        g.escape_radius(),
        g.diffusion(),
        lowered.potential()
    );
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { spec, manifest, out, seed, format, trace } => {
            validate(spec, manifest, out, seed, format, trace)
        }
        Command::Rates { a, b, q, diffusion, pmf, format } => rates(a, b, q, diffusion, pmf, format),
        Command::ParseCheck { model, diffusion } => parse_check(model, diffusion),
    }
}
