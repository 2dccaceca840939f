//! Power, maximal achievable power, and filter diagnostics.

use crate::error::{FdrError, Result};
use crate::filters::{Filter, FilterKind, StructureClass};
use crate::graph::HypothesisGraph;
use crate::types::{GroundTruth, PrioritizationVector, ProcedureResult, RejectionSet};

/// `Σ_{j∈H1} U_j / T_max` for one replicate.
pub fn power_pi(u: &PrioritizationVector, truth: &GroundTruth, t_max: f64) -> Result<f64> {
    if t_max.is_nan() || t_max <= 0.0 {
        return Err(FdrError::invalid(format!(
            "T_max = {t_max} must be positive"
        )));
    }
    Ok(crate::types::true_discovery_mass(u, truth) / t_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TmaxStrategy {
    /// Enumerates every subset of the non-nulls (at most 20 of them).
    ExhaustiveSmall,
    /// Evaluates the non-nulls, the non-null leaves and a maximum
    /// antichain of non-nulls.
    NonnullEvaluation,
}

pub const MAX_EXHAUSTIVE_NONNULLS: usize = 20;

impl TmaxStrategy {
    /// Exhaustive when the non-nulls are few enough to enumerate.
    pub fn auto(truth: &GroundTruth) -> Self {
        if truth.n_nonnull() <= MAX_EXHAUSTIVE_NONNULLS {
            TmaxStrategy::ExhaustiveSmall
        } else {
            TmaxStrategy::NonnullEvaluation
        }
    }
}

fn filter_graph(f: &Filter) -> Option<&HypothesisGraph> {
    match f.kind() {
        FilterKind::OuterNodes(g) | FilterKind::SoftOuterNodes(g) => Some(g),
        FilterKind::StructureInduced(StructureClass::Antichains(g)) => Some(g),
        _ => None,
    }
}

/// `T_max = max_{R, p} Σ_{j∈H1} U_j`, with rejection sets restricted to
/// subsets of `H1`. p-dependent filters see the p-vector that ranks the
/// non-nulls first in index order and sets every null to 1.
pub fn compute_tmax(f: &Filter, truth: &GroundTruth, strategy: TmaxStrategy) -> Result<f64> {
    let m = truth.m();
    let h1 = truth.nonnulls();
    let p: Vec<f64> = (0..m)
        .map(|j| {
            if truth.is_null(j) {
                1.0
            } else {
                0.5 * (j + 1) as f64 / (m + 1) as f64
            }
        })
        .collect();
    let credit = |r: RejectionSet| -> Result<f64> {
        let u = f.apply_values(&r, &p)?;
        Ok(crate::types::true_discovery_mass(&u, truth))
    };
    match strategy {
        TmaxStrategy::ExhaustiveSmall => {
            if h1.len() > MAX_EXHAUSTIVE_NONNULLS {
                return Err(FdrError::DomainTooLarge(format!(
                    "{} non-nulls exceed the exhaustive limit of {MAX_EXHAUSTIVE_NONNULLS}",
                    h1.len()
                )));
            }
            let mut best = 0.0f64;
            for mask in 0u32..1 << h1.len() {
                let r = RejectionSet::from_indices(
                    m,
                    (0..h1.len()).filter(|&k| mask >> k & 1 == 1).map(|k| h1[k]),
                )?;
                best = best.max(credit(r)?);
            }
            Ok(best)
        }
        TmaxStrategy::NonnullEvaluation => {
            let mut candidates = vec![h1.clone()];
            if let Some(g) = filter_graph(f) {
                candidates.push(h1.iter().copied().filter(|&j| g.is_leaf(j)).collect());
                candidates.push(g.max_antichain(&h1));
            }
            let mut best = 0.0f64;
            for c in candidates {
                best = best.max(credit(RejectionSet::from_indices(m, c)?)?);
            }
            Ok(best)
        }
    }
}

/// Rejection counts of one replicate before and after filtering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterCounts {
    /// Null rejections before filtering.
    pub v: f64,
    /// All rejections before filtering.
    pub t: f64,
    /// Null mass after filtering.
    pub v_f: f64,
    /// Total mass after filtering.
    pub t_f: f64,
}

impl FilterCounts {
    pub fn from_result(res: &ProcedureResult, truth: &GroundTruth) -> Self {
        let pre = &res.pre_filter;
        let v = pre.iter().filter(|&j| truth.is_null(j)).count() as f64;
        let t_f = res.post_filter.weighted_count();
        let v_f = t_f - crate::types::true_discovery_mass(&res.post_filter, truth);
        FilterCounts {
            v,
            t: pre.len() as f64,
            v_f: v_f.max(0.0),
            t_f,
        }
    }
}

/// A sample mean with its standard error `sd / √n` over `n` values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl MeanSe {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return MeanSe {
                mean: f64::NAN,
                se: f64::NAN,
                n: 0,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let constant = values.iter().all(|&x| x == values[0]);
        let se = if n > 1 && !constant {
            let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        MeanSe { mean, se, n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaDiagnostics {
    /// Mean of `T_F / T` over replicates with `T > 0`.
    pub gamma: MeanSe,
    /// Mean of `V_F / V` over replicates with `V > 0`.
    pub gamma0: MeanSe,
}

pub fn gamma_diagnostics(counts: &[FilterCounts]) -> GammaDiagnostics {
    let g: Vec<f64> = counts
        .iter()
        .filter(|c| c.t > 0.0)
        .map(|c| c.t_f / c.t)
        .collect();
    let g0: Vec<f64> = counts
        .iter()
        .filter(|c| c.v > 0.0)
        .map(|c| c.v_f / c.v)
        .collect();
    GammaDiagnostics {
        gamma: MeanSe::from_values(&g),
        gamma0: MeanSe::from_values(&g0),
    }
}
