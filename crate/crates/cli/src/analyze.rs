use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use focused_fdr::filters::Filter;
use focused_fdr::procedures::{
    bh, by_reshaping, focused_bh, focused_bh_with_vhat, focused_reshaped_bh, focused_storey_bh,
    multi_focus_bh, storey_bh, ReshapingFunction, VhatEstimator,
};
use focused_fdr::{io, PValueVector, ProcedureResult};

use crate::filter_spec::{FilterName, FilterResources};
use crate::input_error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Bh,
    StoreyBh,
    FocusedBh,
    FocusedStoreyBh,
    FocusedReshapedBh,
    MultiFocusBh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Reshaping {
    /// Benjamini–Yekutieli: β(u) = u / H_m.
    By,
    Identity,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// TSV with header `id<TAB>pvalue`.
    #[arg(long)]
    pub pvalues: PathBuf,
    /// Filter to apply; repeat for multi-focus-bh.
    #[arg(long, value_enum, default_value = "trivial")]
    pub filter: Vec<FilterName>,
    #[command(flatten)]
    pub resources: FilterResources,
    #[arg(long, value_enum, default_value = "focused-bh")]
    pub method: Method,
    #[arg(long, default_value_t = 0.1)]
    pub q: f64,
    /// Per-filter levels for multi-focus-bh, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub q_list: Option<Vec<f64>>,
    /// Storey λ; defaults to q.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, value_enum)]
    pub reshaping: Option<Reshaping>,
    /// Permutation p-values: a header of ids, then one row per permutation.
    #[arg(long)]
    pub permutations: Option<PathBuf>,
    /// Output directory for result.csv.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value = "csv")]
    pub format: String,
}

fn validate(a: &AnalyzeArgs) -> Result<()> {
    if a.format != "csv" {
        return Err(input_error(format!(
            "unsupported format '{}'; only csv",
            a.format
        )));
    }
    if a.method != Method::MultiFocusBh && a.filter.len() > 1 {
        return Err(input_error("several filters need --method multi-focus-bh"));
    }
    if a.method == Method::MultiFocusBh {
        if let Some(ql) = &a.q_list {
            if ql.len() != a.filter.len() {
                return Err(input_error(format!(
                    "--q-list has {} levels for {} filters",
                    ql.len(),
                    a.filter.len()
                )));
            }
        }
    } else if a.q_list.is_some() {
        return Err(input_error("--q-list applies to multi-focus-bh only"));
    }
    if a.permutations.is_some() && a.method != Method::FocusedBh {
        return Err(input_error("--permutations applies to focused-bh only"));
    }
    if a.reshaping.is_some() && a.method != Method::FocusedReshapedBh {
        return Err(input_error(
            "--reshaping applies to focused-reshaped-bh only",
        ));
    }
    if a.lambda.is_some() && !matches!(a.method, Method::StoreyBh | Method::FocusedStoreyBh) {
        return Err(input_error("--lambda applies to Storey methods only"));
    }
    Ok(())
}

pub struct Analysis {
    pub p: PValueVector,
    pub results: Vec<ProcedureResult>,
}

pub fn analyze(a: &AnalyzeArgs) -> Result<Analysis> {
    validate(a)?;
    let p = io::load_pvalues(&a.pvalues)?;
    let filters = a
        .filter
        .iter()
        .map(|&f| a.resources.build(f, p.ids()))
        .collect::<Result<Vec<Filter>>>()?;
    let lambda = a.lambda.unwrap_or(a.q);
    let single = |res: ProcedureResult| vec![res];
    let results = match a.method {
        Method::Bh => single(post_filter(bh(&p, a.q)?, &filters[0], &p)?),
        Method::StoreyBh => single(post_filter(storey_bh(&p, a.q, lambda)?, &filters[0], &p)?),
        Method::FocusedBh => match &a.permutations {
            Some(path) => {
                let perm = io::load_permutation_matrix(path, p.ids())?;
                single(focused_bh_with_vhat(
                    &p,
                    a.q,
                    &filters[0],
                    &VhatEstimator::Permutation(perm),
                )?)
            }
            None => single(focused_bh(&p, a.q, &filters[0])?),
        },
        Method::FocusedStoreyBh => single(focused_storey_bh(&p, a.q, &filters[0], lambda)?),
        Method::FocusedReshapedBh => {
            let beta = match a.reshaping.unwrap_or(Reshaping::By) {
                Reshaping::By => by_reshaping(p.len())?,
                Reshaping::Identity => ReshapingFunction::identity(),
            };
            single(focused_reshaped_bh(&p, a.q, &filters[0], &beta)?)
        }
        Method::MultiFocusBh => {
            let qs = a.q_list.clone().unwrap_or_else(|| vec![a.q; filters.len()]);
            multi_focus_bh(&p, &filters, &qs)?
        }
    };
    Ok(Analysis { p, results })
}

fn post_filter(res: ProcedureResult, f: &Filter, p: &PValueVector) -> Result<ProcedureResult> {
    let post = f.apply(&res.pre_filter, p)?;
    Ok(ProcedureResult {
        post_filter: post,
        ..res
    })
}

pub fn write_result_csv(an: &Analysis, mut w: impl Write) -> std::io::Result<()> {
    let k = an.results.len();
    if k == 1 {
        writeln!(w, "id,pvalue,rejected_pre,score_post")?;
    } else {
        let cols: Vec<String> = (1..=k).map(|i| format!("score_post_{i}")).collect();
        writeln!(w, "id,pvalue,rejected_pre,{}", cols.join(","))?;
    }
    let pre = &an.results[0].pre_filter;
    for (j, (id, pv)) in an.p.ids().iter().zip(an.p.values()).enumerate() {
        write!(w, "{id},{pv},{}", u8::from(pre.contains(j)))?;
        for r in &an.results {
            write!(w, ",{}", r.post_filter.get(j))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

fn write_file(path: &Path, an: &Analysis) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(f);
    write_result_csv(an, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn run(a: AnalyzeArgs) -> Result<()> {
    let an = analyze(&a)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let path = a.out.join("result.csv");
    write_file(&path, &an)?;
    let first = &an.results[0];
    println!("threshold\t{}", first.threshold);
    println!("rejections\t{}", first.pre_filter.len());
    for (i, r) in an.results.iter().enumerate() {
        let label = if an.results.len() == 1 {
            "filtered_discoveries".to_string()
        } else {
            format!("filtered_discoveries_{}", i + 1)
        };
        println!("{label}\t{}", r.post_filter.weighted_count());
    }
    println!("result\t{}", path.display());
    Ok(())
}
