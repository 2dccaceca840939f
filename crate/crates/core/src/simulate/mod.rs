//! Seeded Monte Carlo experiments comparing procedures before and after
//! filtering.
//!
//! Replicate `i` draws from its own random stream, so a report depends
//! only on the master seed and not on how replicates are scheduled across
//! threads. Replicates run on the ambient rayon pool.

mod config;
mod metrics;
mod rng;
mod scenarios;

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{FdrError, Result};
use crate::filters::Filter;
use crate::procedures::{
    bh, by_reshaping, focused_bh, focused_bh_with_vhat, focused_reshaped_bh, focused_storey_bh,
    storey_bh, OracleVhat, PermutationMatrix, VhatEstimator,
};
use crate::types::{generalized_fdp, PValueVector, ProcedureResult};

pub use config::{DagParams, FilterChoice, GwasParams, ScenarioKind, SimulationConfig, TreeParams};
pub use metrics::{
    compute_tmax, gamma_diagnostics, power_pi, FilterCounts, GammaDiagnostics, MeanSe,
    TmaxStrategy, MAX_EXHAUSTIVE_NONNULLS,
};
pub use rng::{stream_rng, Purpose, SimRng};
pub use scenarios::{
    random_annotated_dag, simulate_dag_dataset, simulate_genotypes, simulate_gwas_dataset,
    simulate_tree_dataset, simulation_tree, simulation_tree_nonnull_leaves, DagScenario,
    DagSimConfig, Genotypes, GwasDataset, GwasScenario, GwasSimConfig, RandomDag, Scenario,
    TreeDataset, TreeScenario, TreeSimConfig, TwoGroupData,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcedureSpec {
    Bh,
    StoreyBh,
    FocusedBh,
    FocusedStoreyBh,
    FocusedReshapedBh,
    FocusedBhOracle,
    FocusedBhPerm,
}

impl ProcedureSpec {
    pub fn label(self) -> &'static str {
        match self {
            ProcedureSpec::Bh => "bh",
            ProcedureSpec::StoreyBh => "storey-bh",
            ProcedureSpec::FocusedBh => "focused-bh",
            ProcedureSpec::FocusedStoreyBh => "focused-storey-bh",
            ProcedureSpec::FocusedReshapedBh => "focused-reshaped-bh",
            ProcedureSpec::FocusedBhOracle => "focused-bh-oracle",
            ProcedureSpec::FocusedBhPerm => "focused-bh-perm",
        }
    }
}

impl fmt::Display for ProcedureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub q: f64,
    /// Storey λ; defaults to `q`.
    pub lambda: Option<f64>,
    /// Monte Carlo datasets for the oracle estimate.
    pub n_mc: usize,
    /// Permutations per replicate.
    pub n_perm: usize,
    /// Strategy for `T_max`; chosen from the number of non-nulls if unset.
    pub tmax: Option<TmaxStrategy>,
    /// Setting index separating the random streams of different
    /// amplitudes under one master seed.
    pub setting: u16,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            q: 0.1,
            lambda: None,
            n_mc: 1000,
            n_perm: 100,
            tmax: None,
            setting: 0,
        }
    }
}

/// Metrics of one procedure on one replicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateOutcome {
    pub fdp_pre: f64,
    pub fdp_post: f64,
    pub power_pre: f64,
    pub power_post: f64,
    pub counts: FilterCounts,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcedureSummary {
    pub procedure: ProcedureSpec,
    pub fdr_pre: MeanSe,
    pub fdr_post: MeanSe,
    pub power_pre: MeanSe,
    pub power_post: MeanSe,
    pub gamma: GammaDiagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateReport {
    pub amplitude: f64,
    pub n_replicates: usize,
    pub master_seed: u64,
    pub t_max: f64,
    pub summaries: Vec<ProcedureSummary>,
    /// `outcomes[i][k]` is procedure `k` on replicate `i`.
    pub outcomes: Vec<Vec<ReplicateOutcome>>,
}

impl ReplicateReport {
    pub fn summary(&self, procedure: ProcedureSpec) -> Option<&ProcedureSummary> {
        self.summaries.iter().find(|s| s.procedure == procedure)
    }
}

fn run_one<S: Scenario>(
    scenario: &S,
    spec: ProcedureSpec,
    p: &PValueVector,
    filter: &Filter,
    opts: &RunOptions,
    oracle: Option<&OracleVhat>,
    perm: Option<&PermutationMatrix>,
) -> Result<ProcedureResult> {
    let q = opts.q;
    let lambda = opts.lambda.unwrap_or(q);
    match spec {
        ProcedureSpec::Bh => bh(p, q),
        ProcedureSpec::StoreyBh => storey_bh(p, q, lambda),
        ProcedureSpec::FocusedBh => focused_bh(p, q, filter),
        ProcedureSpec::FocusedStoreyBh => focused_storey_bh(p, q, filter, lambda),
        ProcedureSpec::FocusedReshapedBh => {
            focused_reshaped_bh(p, q, filter, &by_reshaping(scenario.truth().m())?)
        }
        ProcedureSpec::FocusedBhOracle => {
            let o = oracle.expect("oracle estimate prepared when requested");
            focused_bh_with_vhat(p, q, filter, &VhatEstimator::Oracle(o.clone()))
        }
        ProcedureSpec::FocusedBhPerm => {
            let pm = perm.expect("permutations prepared when requested");
            focused_bh_with_vhat(p, q, filter, &VhatEstimator::Permutation(pm.clone()))
        }
    }
}

/// The oracle `V̂` from `n_mc` fresh datasets of `scenario`.
pub fn estimate_oracle<S: Scenario>(
    scenario: &S,
    filter: &Filter,
    n_mc: usize,
    master_seed: u64,
    setting: u16,
) -> Result<OracleVhat> {
    let null = scenario.truth().null_mask();
    let profiles = (0..n_mc)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(master_seed, Purpose::Oracle, setting, i as u32);
            let data = scenario.draw(&mut rng);
            filter.null_threshold_profile(&scenario.pvalues(&data)?, null)
        })
        .collect::<Result<Vec<_>>>()?;
    OracleVhat::from_profiles(&profiles)
}

/// Runs every procedure on `n_reps` fresh datasets and aggregates FDR,
/// power and filter diagnostics before and after filtering.
pub fn run_replicates<S: Scenario>(
    scenario: &S,
    procedures: &[ProcedureSpec],
    filter: &Filter,
    opts: &RunOptions,
    n_reps: usize,
    master_seed: u64,
    amplitude: f64,
) -> Result<ReplicateReport> {
    if n_reps == 0 {
        return Err(FdrError::invalid("at least one replicate is required"));
    }
    if procedures.is_empty() {
        return Err(FdrError::invalid("no procedures to run"));
    }
    let truth = scenario.truth();
    if truth.n_nonnull() == 0 {
        return Err(FdrError::invalid(
            "power is undefined without non-null hypotheses",
        ));
    }
    let wants_perm = procedures.contains(&ProcedureSpec::FocusedBhPerm);
    if wants_perm {
        if opts.n_perm == 0 {
            return Err(FdrError::invalid("permutation variant needs n_perm >= 1"));
        }
        if let Some(g) = scenario.graph() {
            if !g.check_logical_relationships(truth) {
                return Err(FdrError::invalid(
                    "permutation calibration needs nulls to lie below non-nulls",
                ));
            }
        }
    }
    let strategy = opts.tmax.unwrap_or_else(|| TmaxStrategy::auto(truth));
    let t_max = compute_tmax(filter, truth, strategy)?;
    if t_max.is_nan() || t_max <= 0.0 {
        return Err(FdrError::invalid(
            "the filter can never credit a non-null (T_max = 0)",
        ));
    }
    let pre_tmax = truth.n_nonnull() as f64;
    let oracle = if procedures.contains(&ProcedureSpec::FocusedBhOracle) {
        Some(estimate_oracle(
            scenario,
            filter,
            opts.n_mc,
            master_seed,
            opts.setting,
        )?)
    } else {
        None
    };
    let ids = scenario.ids();

    let outcomes = (0..n_reps)
        .into_par_iter()
        .map(|i| -> Result<Vec<ReplicateOutcome>> {
            let mut rng = stream_rng(master_seed, Purpose::Replicate, opts.setting, i as u32);
            let data = scenario.draw(&mut rng);
            let p = PValueVector::with_shared_ids(ids.clone(), scenario.pvalues(&data)?)?;
            let perm = if wants_perm {
                let rows = (0..opts.n_perm)
                    .map(|_| scenario.permuted_pvalues(&data, &mut rng))
                    .collect::<Result<Vec<_>>>()?;
                Some(PermutationMatrix::new(rows)?)
            } else {
                None
            };
            procedures
                .iter()
                .map(|&spec| {
                    let res = run_one(
                        scenario,
                        spec,
                        &p,
                        filter,
                        opts,
                        oracle.as_ref(),
                        perm.as_ref(),
                    )?;
                    if let Some(&(_, v)) = res.fdp_hat_trace.iter().find(|e| e.0 == res.threshold) {
                        if v > opts.q && res.threshold > 0.0 {
                            return Err(FdrError::invalid(format!(
                                "{spec}: FDP estimate {v} at the selected threshold exceeds q"
                            )));
                        }
                    }
                    let pre = res.pre_filter.indicator();
                    let post = if matches!(spec, ProcedureSpec::Bh | ProcedureSpec::StoreyBh) {
                        filter.apply(&res.pre_filter, &p)?
                    } else {
                        res.post_filter.clone()
                    };
                    let filtered = ProcedureResult {
                        post_filter: post.clone(),
                        ..res.clone()
                    };
                    Ok(ReplicateOutcome {
                        fdp_pre: generalized_fdp(&pre, truth),
                        fdp_post: generalized_fdp(&post, truth),
                        power_pre: power_pi(&pre, truth, pre_tmax)?,
                        power_post: power_pi(&post, truth, t_max)?,
                        counts: FilterCounts::from_result(&filtered, truth),
                        threshold: res.threshold,
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;

    let summaries = procedures
        .iter()
        .enumerate()
        .map(|(k, &procedure)| {
            let col = |f: fn(&ReplicateOutcome) -> f64| {
                MeanSe::from_values(&outcomes.iter().map(|o| f(&o[k])).collect::<Vec<_>>())
            };
            let counts: Vec<FilterCounts> = outcomes.iter().map(|o| o[k].counts).collect();
            ProcedureSummary {
                procedure,
                fdr_pre: col(|o| o.fdp_pre),
                fdr_post: col(|o| o.fdp_post),
                power_pre: col(|o| o.power_pre),
                power_post: col(|o| o.power_post),
                gamma: gamma_diagnostics(&counts),
            }
        })
        .collect();

    Ok(ReplicateReport {
        amplitude,
        n_replicates: n_reps,
        master_seed,
        t_max,
        summaries,
        outcomes,
    })
}

pub const CSV_HEADER: &str = "amplitude,procedure,stage,metric,mean,se,n_replicates";

/// One row per amplitude × procedure × stage × metric, in a fixed order.
/// `n_replicates` counts the replicates entering each mean; for `gamma`
/// and `gamma0` replicates with a zero denominator are excluded.
pub fn write_report_csv(reports: &[ReplicateReport], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in reports {
        for s in &r.summaries {
            let rows: [(&str, &str, &MeanSe); 6] = [
                ("pre", "fdr", &s.fdr_pre),
                ("post", "fdr", &s.fdr_post),
                ("pre", "power", &s.power_pre),
                ("post", "power", &s.power_post),
                ("filter", "gamma", &s.gamma.gamma),
                ("filter", "gamma0", &s.gamma.gamma0),
            ];
            for (stage, metric, v) in rows {
                writeln!(
                    w,
                    "{},{},{stage},{metric},{},{},{}",
                    r.amplitude, s.procedure, v.mean, v.se, v.n
                )?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
