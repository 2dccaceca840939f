use anyhow::Result;
use clap::{Args, ValueEnum};
use focused_fdr::filters::{
    check_filter_property, BlockCollection, CheckDomain, Counterexample, Filter, FilterProperty,
};

use crate::filter_spec::{FilterName, FilterResources};
use crate::input_error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PropertyName {
    Monotonic,
    Simple,
    BlockSimple,
    StronglySimple,
    StronglyBlockSimple,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long, value_enum)]
    pub filter: FilterName,
    #[command(flatten)]
    pub resources: FilterResources,
    /// Properties to check; all of them when absent.
    #[arg(long, value_enum)]
    pub property: Vec<PropertyName>,
    /// Number of hypotheses when no resource file fixes it.
    #[arg(long)]
    pub m: Option<usize>,
    /// p-value levels per coordinate, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// Use grid values verbatim so coordinates can tie.
    #[arg(long)]
    pub exact_grid: bool,
    /// Restrict rejection sets to threshold sets.
    #[arg(long)]
    pub threshold_sets: bool,
}

fn declared(f: &Filter, prop: PropertyName, threshold_sets: bool) -> Option<bool> {
    let d = f.properties();
    match prop {
        PropertyName::Monotonic if threshold_sets => d.monotonic_on_threshold_sets,
        PropertyName::Monotonic => d.monotonic,
        PropertyName::Simple => d.simple,
        PropertyName::BlockSimple => d.block_simple,
        PropertyName::StronglySimple => d.strongly_simple,
        PropertyName::StronglyBlockSimple => d.strongly_block_simple,
    }
}

fn set(ids: &[String], r: &[usize]) -> String {
    let names: Vec<&str> = r.iter().map(|&j| ids[j].as_str()).collect();
    format!("{{{}}}", names.join(", "))
}

fn vector(p: &[f64]) -> String {
    let v: Vec<String> = p
        .iter()
        .map(|x| ((x * 1e9).round() / 1e9).to_string())
        .collect();
    format!("({})", v.join(", "))
}

fn print_counterexample(ids: &[String], c: &Counterexample) {
    if let Some(j) = c.hypothesis {
        println!("  hypothesis {}", ids[j]);
    }
    println!(
        "  R1 = {}  p1 = {}  filtered count = {}",
        set(ids, &c.r1),
        vector(&c.p1),
        c.count1
    );
    println!(
        "  R2 = {}  p2 = {}  filtered count = {}",
        set(ids, &c.r2),
        vector(&c.p2),
        c.count2
    );
}

pub fn run(a: CheckArgs) -> Result<()> {
    let ids = match a.m {
        Some(m) => (1..=m).map(|j| j.to_string()).collect(),
        None => a.resources.standalone_ids(a.filter)?,
    };
    let filter = a.resources.build(a.filter, &ids)?;
    let mut domain = CheckDomain::new(ids.len());
    if let Some(g) = &a.grid {
        let mut g = g.clone();
        g.sort_by(f64::total_cmp);
        domain = domain.with_grid(g);
    }
    if a.exact_grid {
        domain = domain.exact_grid();
    }
    if a.threshold_sets {
        domain = domain.threshold_sets_only();
    }
    let props = if a.property.is_empty() {
        vec![
            PropertyName::Monotonic,
            PropertyName::Simple,
            PropertyName::BlockSimple,
            PropertyName::StronglySimple,
            PropertyName::StronglyBlockSimple,
        ]
    } else {
        a.property.clone()
    };
    let blocks: Option<BlockCollection> = filter.block_collection().or_else(|| {
        a.resources
            .blocks(FilterName::Clumping, &ids)
            .ok()
            .map(|b| b.collection())
    });
    println!("filter\t{}\thypotheses\t{}", filter.label(), ids.len());
    for prop in props {
        let property = match prop {
            PropertyName::Monotonic => FilterProperty::Monotonic,
            PropertyName::Simple => FilterProperty::Simple,
            PropertyName::StronglySimple => FilterProperty::StronglySimple,
            PropertyName::BlockSimple | PropertyName::StronglyBlockSimple => {
                let Some(c) = blocks.clone() else {
                    if a.property.is_empty() {
                        continue;
                    }
                    return Err(input_error(format!(
                        "{prop:?} needs a block collection; pass --blocks"
                    )));
                };
                if prop == PropertyName::BlockSimple {
                    FilterProperty::BlockSimple(c)
                } else {
                    FilterProperty::StronglyBlockSimple(c)
                }
            }
        };
        let check = check_filter_property(&filter, &property, &domain)?;
        let verdict = if check.holds { "holds" } else { "fails" };
        let decl = match declared(&filter, prop, a.threshold_sets) {
            Some(true) => "declared true",
            Some(false) => "declared false",
            None => "undeclared",
        };
        println!("{property}\t{verdict}\t{decl}\t{} states", check.states);
        if let Some(c) = &check.counterexample {
            print_counterexample(&ids, c);
        }
    }
    Ok(())
}
