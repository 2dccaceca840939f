use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use focused_fdr::simulate::{
    compute_tmax, write_report_csv, FilterChoice, ProcedureSpec, ScenarioKind, SimulationConfig,
    TmaxStrategy,
};
use focused_fdr::CombinationMethod;
use serde::de::{DeserializeOwned, IntoDeserializer};

use crate::input_error;

/// Parses a unit-variant enum from its configuration-file spelling.
fn parse_name<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    T::deserialize(s.into_deserializer()).map_err(|e: serde::de::value::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// TOML configuration; command-line flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// tree, dag or gwas.
    #[arg(long, value_parser = parse_name::<ScenarioKind>)]
    pub kind: Option<ScenarioKind>,
    /// trivial, outer-nodes, soft-outer-nodes, clumping or block-minimum-screen.
    #[arg(long, value_parser = parse_name::<FilterChoice>)]
    pub filter: Option<FilterChoice>,
    /// simes or fisher.
    #[arg(long, value_parser = parse_name::<CombinationMethod>)]
    pub combination: Option<CombinationMethod>,
}

impl ScenarioArgs {
    fn config(&self) -> Result<SimulationConfig> {
        let mut cfg = match (&self.config, self.kind) {
            (Some(path), kind) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| input_error(format!("{}: {e}", path.display())))?;
                let mut cfg = SimulationConfig::from_toml_str(&text)?;
                if let Some(k) = kind {
                    cfg.kind = k;
                }
                cfg
            }
            (None, Some(kind)) => SimulationConfig::new(kind),
            (None, None) => return Err(input_error("give --kind or --config")),
        };
        if self.filter.is_some() {
            cfg.filter = self.filter;
        }
        if self.combination.is_some() {
            cfg.combination = self.combination;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Master seed; required.
    #[arg(long)]
    pub seed: u64,
    /// Replicates per amplitude (default 500).
    #[arg(long)]
    pub reps: Option<usize>,
    /// Target level (default 0.1).
    #[arg(long)]
    pub q: Option<f64>,
    /// Signal amplitudes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub amplitudes: Option<Vec<f64>>,
    /// Comma-separated procedure names, e.g. bh,focused-bh-perm.
    #[arg(long, value_delimiter = ',', value_parser = parse_name::<ProcedureSpec>)]
    pub procedures: Option<Vec<ProcedureSpec>>,
    /// Monte Carlo datasets for the oracle estimate (default 1000).
    #[arg(long)]
    pub n_mc: Option<usize>,
    /// Permutations per replicate (default 100).
    #[arg(long)]
    pub n_perm: Option<usize>,
    /// Report path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    pub format: String,
}

#[derive(Debug, Args)]
pub struct TmaxArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// exhaustive-small or nonnull-evaluation.
    #[arg(long, value_parser = parse_name::<TmaxStrategy>)]
    pub strategy: Option<TmaxStrategy>,
}

pub fn run(a: SimulateArgs) -> Result<()> {
    if a.format != "csv" {
        return Err(input_error(format!(
            "unsupported format '{}'; only csv",
            a.format
        )));
    }
    let mut cfg = a.scenario.config()?;
    if a.reps.is_some() {
        cfg.reps = a.reps;
    }
    if let Some(q) = a.q {
        cfg.q = q;
    }
    if a.amplitudes.is_some() {
        cfg.amplitudes = a.amplitudes;
    }
    if a.procedures.is_some() {
        cfg.procedures = a.procedures;
    }
    if let Some(n) = a.n_mc {
        cfg.n_mc = n;
    }
    if let Some(n) = a.n_perm {
        cfg.n_perm = n;
    }
    let reports = cfg.run(a.seed)?;
    match &a.out {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(f);
            write_report_csv(&reports, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            write_report_csv(&reports, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

pub fn tmax(a: TmaxArgs) -> Result<()> {
    let mut cfg = a.scenario.config()?;
    if a.strategy.is_some() {
        cfg.tmax = a.strategy;
    }
    let truth = cfg.truth()?;
    let strategy = cfg.tmax.unwrap_or_else(|| TmaxStrategy::auto(&truth));
    let filter = cfg.filter()?;
    let t = compute_tmax(&filter, &truth, strategy)?;
    println!("hypotheses\t{}", truth.m());
    println!("nonnull\t{}", truth.n_nonnull());
    println!("filter\t{}", filter.label());
    println!("t_max\t{t}");
    Ok(())
}
