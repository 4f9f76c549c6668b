use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use leafdim::config::{run_estimate, splitting_summary, EstimateKind, ExperimentConfig, Outcome, RunSummary};
use leafdim::descriptor::parse_system;
use leafdim::harness::{run_default_suite, run_suite, suite_params, SuiteConfig, SuiteReport};
use leafdim::Error;

/// Unstable entropies of linear partially hyperbolic toral automorphisms.
#[derive(Parser)]
#[command(name = "leafdim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues, bundle labels and the unstable rate of a system.
    Splitting {
        #[arg(long, default_value = "cat2")]
        system: String,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Run one estimator and write its CSV series and JSON summary.
    Estimate {
        #[arg(value_enum)]
        kind: Kind,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Run the verification suite (the built-in one unless --config is given).
    Verify {
        #[command(flatten)]
        opts: Overrides,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Utop,
    Hdim,
    Metric,
    Smb,
}

impl From<Kind> for EstimateKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Utop => EstimateKind::Utop,
            Kind::Hdim => EstimateKind::Hdim,
            Kind::Metric => EstimateKind::Metric,
            Kind::Smb => EstimateKind::Smb,
        }
    }
}

#[derive(Args)]
struct Overrides {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    set: Option<String>,
    /// Leaf-ball radii, comma separated.
    #[arg(long, value_delimiter = ',')]
    delta: Vec<f64>,
    /// Grid meshes, comma separated.
    #[arg(long, value_delimiter = ',')]
    mesh: Vec<u32>,
    #[arg(long)]
    n_min: Option<u32>,
    #[arg(long)]
    n_max: Option<u32>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, params: &mut leafdim::EstimatorParams) {
        if !self.delta.is_empty() {
            params.deltas = self.delta.clone();
        }
        if !self.mesh.is_empty() {
            params.meshes = self.mesh.clone();
        }
        if let Some(n) = self.n_min {
            params.n_min = n;
        }
        if let Some(n) = self.n_max {
            params.n_max = n;
        }
        if let Some(s) = self.samples {
            params.samples = s;
        }
        if let Some(s) = self.seed {
            params.seed = s;
        }
    }

    fn experiment(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::from_json(&read(path)?)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = &self.system {
            config.system = s.clone();
        }
        if let Some(s) = &self.set {
            config.set = s.clone();
        }
        if let Some(t) = self.tolerance {
            config.tolerance = t;
        }
        if let Some(o) = &self.out {
            config.output = Some(o.clone());
        }
        self.apply(&mut config.params);
        config.resolve()?;
        Ok(config)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn cmd_splitting(system: &str, json: bool) -> Result<()> {
    let s = splitting_summary(&parse_system(system)?);
    if json {
        println!("{}", serde_json::to_string_pretty(&s)?);
        return Ok(());
    }
    println!("system: {}", s.system);
    for (l, b) in s.eigenvalues.iter().zip(&s.labels) {
        println!("  {:<9} {:>14.8}", format!("{b:?}").to_lowercase(), l);
    }
    println!("unstable eigenvalue: {:.8}", s.unstable_eigenvalue);
    println!("log unstable rate:   {:.8}", s.log_unstable_rate);
    Ok(())
}

fn series_csv(summary: &RunSummary) -> Result<Option<Vec<u8>>> {
    let mut buf = Vec::new();
    match &summary.outcome {
        Outcome::Utop(_) => match summary.headline_series() {
            Some(s) => s.write_csv(&mut buf)?,
            None => return Ok(None),
        },
        Outcome::Hdim(_) => match summary.headline_fit() {
            Some(r) => r.write_csv(&mut buf)?,
            None => return Ok(None),
        },
        Outcome::Smb(r) => r.write_csv(&mut buf)?,
        Outcome::Metric { .. } => return Ok(None),
    }
    Ok(Some(buf))
}

fn cmd_estimate(kind: Kind, opts: &Overrides) -> Result<()> {
    let config = opts.experiment()?;
    let summary = run_estimate(kind.into(), &config)?;
    let name = format!("{:?}", EstimateKind::from(kind)).to_lowercase();
    if let Some(dir) = &config.output {
        if let Some(csv) = series_csv(&summary)? {
            write(dir, &format!("{name}.csv"), &csv)?;
        }
        write(dir, &format!("{name}.json"), serde_json::to_string_pretty(&summary)?.as_bytes())?;
    }
    println!(
        "{name} system={} set={} value={:.6} stable={}",
        config.system, config.set, summary.value, summary.stable
    );
    if let Outcome::Smb(r) = &summary.outcome {
        for row in &r.rows {
            println!("  n={:<3} mean={:.6} stddev={:.6}", row.n, row.mean, row.stddev);
        }
        println!("  jacobian entropy {:.6}", r.jacobian_entropy);
    }
    for w in &summary.warnings {
        println!("warning: {}", serde_json::to_string(w)?);
    }
    Ok(())
}

fn cmd_verify(opts: &Overrides) -> Result<SuiteReport> {
    let report = match &opts.config {
        Some(path) => {
            let mut config = SuiteConfig::from_json(&read(path)?)?;
            opts.apply(&mut config.params);
            config.params.validate()?;
            if opts.tolerance.is_some() {
                config.tolerance = opts.tolerance;
            }
            run_suite(&config)
        }
        None => {
            let mut params = suite_params();
            opts.apply(&mut params);
            params.validate()?;
            run_default_suite(&params, opts.tolerance)
        }
    };
    if let Some(dir) = &opts.out {
        write(dir, "report.json", serde_json::to_string_pretty(&report)?.as_bytes())?;
    }
    print!("{}", report.summary_table());
    Ok(report)
}

/// Input problems exit with 3, everything else with 1.
fn failure_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Parse { .. } | Error::Config { .. } | Error::InvalidParameter(_)) => 3,
        Some(
            Error::NotUnimodular { .. }
            | Error::UnsupportedDimension(_)
            | Error::MalformedMatrix(_)
            | Error::ComplexSpectrum
            | Error::NoUnstableDirection
            | Error::MultipleUnstable(_),
        ) => 3,
        Some(_) => 1,
        None if e.downcast_ref::<std::io::Error>().is_some() => 3,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("LEAFDIM_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let outcome = match &cli.command {
        Command::Splitting { system, json } => cmd_splitting(system, *json).map(|_| 0),
        Command::Estimate { kind, opts } => cmd_estimate(*kind, opts).map(|_| 0),
        Command::Verify { opts } => cmd_verify(opts).map(|r| r.exit_code() as u8),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(failure_code(&e))
        }
    }
}
