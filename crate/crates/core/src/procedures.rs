//! Step-up procedures: BH, Storey BH and the Focused BH family.
//!
//! Every variant scans the thresholds `{0} ∪ {p_j}` and keeps the largest
//! `t` with `FDP̂(t) = V̂(t) / ‖F(R(t, p), p)‖ <= q`. The counting
//! estimates `m t` and `m̂₀ t` bound the null mass of scores in `[0, 1]`, so
//! they are compared with the normalized count. Oracle and permutation
//! estimates come from the same filter and are compared on its raw scale.

use std::fmt;
use std::sync::Arc;

use crate::error::{FdrError, Result};
use crate::filters::{Filter, StructureClass, ThresholdProfile};
use crate::types::{GroundTruth, PValueVector, ProcedureResult, RejectionSet};

fn check_level(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(FdrError::invalid(format!(
            "level q = {q} must lie in (0, 1)"
        )))
    }
}

/// `num / den` with `0/0 = 0`.
fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

#[derive(Clone)]
enum Reshape {
    Identity,
    Scaled(f64),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// A function `β` with `β(0) = 0`, nondecreasing and `β(u) <= u`.
#[derive(Clone)]
pub struct ReshapingFunction {
    label: String,
    shape: Reshape,
}

impl fmt::Debug for ReshapingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ReshapingFunction({})", self.label)
    }
}

impl ReshapingFunction {
    pub fn identity() -> Self {
        ReshapingFunction {
            label: "identity".into(),
            shape: Reshape::Identity,
        }
    }

    /// A user-supplied `β`; checked on a grid of `[0, 1000]` for the
    /// defining constraints.
    pub fn custom(
        label: impl Into<String>,
        beta: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let label = label.into();
        if beta(0.0) != 0.0 {
            return Err(FdrError::invalid(format!(
                "reshaping '{label}' has β(0) ≠ 0"
            )));
        }
        let mut prev = 0.0;
        for k in 1..=4000 {
            let u = k as f64 * 0.25;
            let b = beta(u);
            if !(b <= u && b >= prev) {
                return Err(FdrError::invalid(format!(
                    "reshaping '{label}' violates β(u) <= u or monotonicity at u = {u}"
                )));
            }
            prev = b;
        }
        Ok(ReshapingFunction {
            label,
            shape: Reshape::Custom(Arc::new(beta)),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, u: f64) -> f64 {
        match &self.shape {
            Reshape::Identity => u,
            Reshape::Scaled(c) => u * c,
            Reshape::Custom(f) => f(u),
        }
    }
}

/// `β(u) = u / H_m` with `H_m = Σ_{i<=m} 1/i`.
pub fn by_reshaping(m: usize) -> Result<ReshapingFunction> {
    if m == 0 {
        return Err(FdrError::invalid("BY reshaping needs m >= 1"));
    }
    let h: f64 = (1..=m).map(|i| 1.0 / i as f64).sum();
    Ok(ReshapingFunction {
        label: format!("by(m={m})"),
        shape: Reshape::Scaled(1.0 / h),
    })
}

/// Storey's `m̂₀ = (1 + #{p_j > λ}) / (1 - λ)`.
pub fn storey_m0(p: &[f64], lambda: f64) -> f64 {
    let above = p.iter().filter(|&&x| x > lambda).count();
    (1 + above) as f64 / (1.0 - lambda)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoreyOptions {
    pub lambda: f64,
    /// Caps `m̂₀` at `m`.
    pub cap_at_m: bool,
}

impl StoreyOptions {
    pub fn new(lambda: f64) -> Self {
        StoreyOptions {
            lambda,
            cap_at_m: false,
        }
    }
}

/// Monte Carlo estimate of `E[Σ_{j∈H0} U_j(t)]` as a step function of `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleVhat {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    n_mc: usize,
}

impl OracleVhat {
    /// Averages null-mass profiles of independent datasets.
    pub fn from_profiles(profiles: &[ThresholdProfile]) -> Result<Self> {
        if profiles.is_empty() {
            return Err(FdrError::invalid(
                "oracle estimate needs at least one dataset",
            ));
        }
        let mut jumps: Vec<(f64, f64)> = Vec::new();
        for prof in profiles {
            let mut prev = 0.0;
            for (&t, &c) in prof.thresholds.iter().zip(&prof.counts) {
                if c != prev {
                    jumps.push((t, c - prev));
                    prev = c;
                }
            }
        }
        jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = profiles.len() as f64;
        let mut breakpoints = Vec::new();
        let mut values = Vec::new();
        let mut acc = 0.0;
        for (t, d) in jumps {
            acc += d;
            if breakpoints.last() == Some(&t) {
                *values.last_mut().unwrap() = acc / n;
            } else {
                breakpoints.push(t);
                values.push(acc / n);
            }
        }
        Ok(OracleVhat {
            breakpoints,
            values,
            n_mc: profiles.len(),
        })
    }

    /// Draws `n_mc` fresh p-value vectors from `sampler` with the nulls of
    /// `truth` and averages the filtered null mass.
    pub fn estimate(
        f: &Filter,
        truth: &GroundTruth,
        n_mc: usize,
        mut sampler: impl FnMut(usize) -> Result<Vec<f64>>,
    ) -> Result<Self> {
        let profiles = (0..n_mc)
            .map(|i| f.null_threshold_profile(&sampler(i)?, truth.null_mask()))
            .collect::<Result<Vec<_>>>()?;
        Self::from_profiles(&profiles)
    }

    pub fn n_mc(&self) -> usize {
        self.n_mc
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = self.breakpoints.partition_point(|&s| s <= t);
        if k == 0 {
            0.0
        } else {
            self.values[k - 1]
        }
    }
}

/// `B` rows of p-values recomputed on permuted data.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationMatrix {
    rows: Vec<Vec<f64>>,
}

impl PermutationMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || m == 0 {
            return Err(FdrError::invalid(
                "permutation matrix needs at least one nonempty row",
            ));
        }
        for (b, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(FdrError::invalid(format!(
                    "permutation row {b} has {} columns, expected {m}",
                    row.len()
                )));
            }
            if let Some(x) = row.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return Err(FdrError::invalid(format!(
                    "permutation row {b} has p-value {x} outside [0, 1]"
                )));
            }
        }
        Ok(PermutationMatrix { rows })
    }

    pub fn n_permutations(&self) -> usize {
        self.rows.len()
    }

    pub fn m(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

#[derive(Debug, Clone)]
pub enum VhatEstimator {
    /// `V̂(t) = m t`.
    Counting,
    /// `V̂(t) = m̂₀ t`, with thresholds restricted to `t <= λ`.
    StoreyCounting(StoreyOptions),
    Oracle(OracleVhat),
    Permutation(PermutationMatrix),
}

/// The step-up selection shared by all variants. `fdp_hat(k, t, count)`
/// evaluates the estimate at the `k`-th profile threshold.
fn step_up(
    prof: &ThresholdProfile,
    q: f64,
    t_cap: f64,
    fdp_hat: impl Fn(usize, f64, f64) -> f64,
) -> (f64, Vec<(f64, f64)>) {
    let mut t_star = 0.0;
    let mut trace = Vec::with_capacity(prof.thresholds.len());
    for (k, (&t, &c)) in prof.thresholds.iter().zip(&prof.counts).enumerate() {
        if t > t_cap {
            break;
        }
        let v = fdp_hat(k, t, c);
        trace.push((t, v));
        if v <= q {
            t_star = t;
        }
    }
    (t_star, trace)
}

fn finish(
    p: &PValueVector,
    f: &Filter,
    t_star: f64,
    trace: Vec<(f64, f64)>,
) -> Result<ProcedureResult> {
    let pre = RejectionSet::at_threshold(p.values(), t_star);
    let post = f.apply(&pre, p)?;
    Ok(ProcedureResult {
        threshold: t_star,
        pre_filter: pre,
        post_filter: post,
        fdp_hat_trace: trace,
    })
}

/// Classical BH by a scan of the sorted p-values.
pub fn bh(p: &PValueVector, q: f64) -> Result<ProcedureResult> {
    check_level(q)?;
    let v = p.values();
    let m = v.len() as f64;
    let mut sorted = v.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut trace = Vec::with_capacity(sorted.len() + 1);
    if sorted[0] > 0.0 {
        trace.push((0.0, 0.0));
    }
    let mut t_star = 0.0;
    for k in 0..sorted.len() {
        if k + 1 < sorted.len() && sorted[k + 1] == sorted[k] {
            continue;
        }
        let t = sorted[k];
        let fdp = ratio(m * t, (k + 1) as f64);
        trace.push((t, fdp));
        if fdp <= q {
            t_star = t;
        }
    }
    finish(p, &Filter::trivial(), t_star, trace)
}

/// Storey BH: Focused Storey BH with the trivial filter.
pub fn storey_bh(p: &PValueVector, q: f64, lambda: f64) -> Result<ProcedureResult> {
    focused_storey_bh(p, q, &Filter::trivial(), lambda)
}

pub fn focused_bh(p: &PValueVector, q: f64, f: &Filter) -> Result<ProcedureResult> {
    focused_bh_with_vhat(p, q, f, &VhatEstimator::Counting)
}

pub fn focused_storey_bh(
    p: &PValueVector,
    q: f64,
    f: &Filter,
    lambda: f64,
) -> Result<ProcedureResult> {
    focused_bh_with_vhat(
        p,
        q,
        f,
        &VhatEstimator::StoreyCounting(StoreyOptions::new(lambda)),
    )
}

pub fn focused_reshaped_bh(
    p: &PValueVector,
    q: f64,
    f: &Filter,
    beta: &ReshapingFunction,
) -> Result<ProcedureResult> {
    check_level(q)?;
    let prof = f.threshold_profile(p.values())?;
    let m = p.len() as f64;
    let scale = f.count_scale();
    let (t, trace) = step_up(&prof, q, f64::INFINITY, |_, t, c| {
        ratio(m * t, beta.eval(c / scale))
    });
    finish(p, f, t, trace)
}

pub fn focused_bh_with_vhat(
    p: &PValueVector,
    q: f64,
    f: &Filter,
    v: &VhatEstimator,
) -> Result<ProcedureResult> {
    check_level(q)?;
    let values = p.values();
    let prof = f.threshold_profile(values)?;
    let m = p.len() as f64;
    let scale = f.count_scale();
    let (t, trace) = match v {
        VhatEstimator::Counting => {
            step_up(&prof, q, f64::INFINITY, |_, t, c| ratio(m * t, c / scale))
        }
        VhatEstimator::StoreyCounting(opts) => {
            if !(opts.lambda > 0.0 && opts.lambda < 1.0) {
                return Err(FdrError::invalid(format!(
                    "Storey λ = {} must lie in (0, 1)",
                    opts.lambda
                )));
            }
            let mut m0 = storey_m0(values, opts.lambda);
            if opts.cap_at_m {
                m0 = m0.min(m);
            }
            step_up(&prof, q, opts.lambda, |_, t, c| ratio(m0 * t, c / scale))
        }
        VhatEstimator::Oracle(o) => step_up(&prof, q, f64::INFINITY, |_, t, c| ratio(o.eval(t), c)),
        VhatEstimator::Permutation(perm) => {
            if perm.m() != p.len() {
                return Err(FdrError::invalid(format!(
                    "permutation matrix has {} columns for {} hypotheses",
                    perm.m(),
                    p.len()
                )));
            }
            let vhat = permutation_vhat(f, perm, &prof.thresholds)?;
            step_up(&prof, q, f64::INFINITY, |k, _, c| ratio(vhat[k], c))
        }
    };
    finish(p, f, t, trace)
}

/// `(1/B) Σ_b ‖F(R(t, p̃ᵇ), p̃ᵇ)‖` at each of `thresholds`.
pub fn permutation_vhat(
    f: &Filter,
    perm: &PermutationMatrix,
    thresholds: &[f64],
) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; thresholds.len()];
    for row in perm.rows() {
        let prof = f.threshold_profile(row)?;
        for (a, &t) in acc.iter_mut().zip(thresholds) {
            *a += prof.at(t);
        }
    }
    let b = perm.n_permutations() as f64;
    Ok(acc.into_iter().map(|x| x / b).collect())
}

/// One common threshold satisfying every filter's constraint
/// `m t / ‖F_k(R(t, p), p)‖ <= q_k`; one result per filter.
pub fn multi_focus_bh(
    p: &PValueVector,
    filters: &[Filter],
    q: &[f64],
) -> Result<Vec<ProcedureResult>> {
    if filters.is_empty() || filters.len() != q.len() {
        return Err(FdrError::invalid(format!(
            "{} filters but {} levels",
            filters.len(),
            q.len()
        )));
    }
    for &qk in q {
        check_level(qk)?;
    }
    let m = p.len() as f64;
    let profiles = filters
        .iter()
        .map(|f| f.threshold_profile(p.values()))
        .collect::<Result<Vec<_>>>()?;
    let n = profiles[0].thresholds.len();
    let mut t_star = 0.0;
    let mut traces = vec![Vec::with_capacity(n); filters.len()];
    for k in 0..n {
        let t = profiles[0].thresholds[k];
        let mut ok = true;
        for (i, prof) in profiles.iter().enumerate() {
            let v = ratio(m * t, prof.counts[k] / filters[i].count_scale());
            traces[i].push((t, v));
            ok &= v <= q[i];
        }
        if ok {
            t_star = t;
        }
    }
    filters
        .iter()
        .zip(traces)
        .map(|(f, trace)| finish(p, f, t_star, trace))
        .collect()
}

/// `m · max_{j∈U} p_j / |U|`, zero for the empty set.
pub fn structured_fdp_hat(p: &[f64], set: &[usize]) -> f64 {
    if set.is_empty() {
        return 0.0;
    }
    let max = set.iter().map(|&j| p[j]).fold(0.0, f64::max);
    p.len() as f64 * max / set.len() as f64
}

/// The largest class member with `m · max p / |U| <= q`, ties broken
/// towards the lexicographically smallest sorted index list.
pub fn structured_bh(p: &PValueVector, q: f64, class: &StructureClass) -> Result<RejectionSet> {
    check_level(q)?;
    let m = p.len();
    if class.m() != m {
        return Err(FdrError::invalid(format!(
            "structure class over {} hypotheses, got {m}",
            class.m()
        )));
    }
    if let StructureClass::AllSubsets { .. } = class {
        return Ok(bh(p, q)?.pre_filter);
    }
    let mut best: Vec<usize> = Vec::new();
    for u in class.enumerate()? {
        if structured_fdp_hat(p.values(), &u) > q {
            continue;
        }
        if u.len() > best.len() || (u.len() == best.len() && u < best) {
            best = u;
        }
    }
    RejectionSet::from_indices(m, best)
}
