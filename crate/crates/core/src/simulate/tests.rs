use super::*;
use crate::filters::BlockPartition;
use std::sync::Arc;

fn small_gwas(amplitude: f64) -> GwasSimConfig {
    GwasSimConfig {
        n: 60,
        m: 40,
        block_size: 10,
        maf: 0.3,
        p11: 0.9,
        causal: vec![5, 25],
        amplitude,
    }
}

fn tree_config(amplitude: f64) -> TreeSimConfig {
    TreeSimConfig {
        graph: Arc::new(simulation_tree()),
        n_cases: 20,
        n_controls: 20,
        nonnull_leaves: simulation_tree_nonnull_leaves(),
        amplitude,
        combination: crate::CombinationMethod::Simes,
    }
}

fn ks_uniform(sample: &mut [f64]) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}

#[test]
fn gwas_transition_probability() {
    let cfg = GwasSimConfig {
        n: 200,
        m: 600,
        block_size: 30,
        maf: 0.1,
        p11: 0.95,
        causal: vec![],
        amplitude: 0.0,
    };
    assert!((cfg.p01() - 1.0 / 180.0).abs() < 1e-15);
}

#[test]
fn gwas_causal_spacing() {
    assert_eq!(
        GwasSimConfig::equally_spaced_causal(600, 5),
        vec![60, 180, 300, 420, 540]
    );
    let truth = GwasSimConfig {
        causal: vec![60, 180, 300, 420, 540],
        ..SimulationConfig::new(ScenarioKind::Gwas).gwas_config(0.0)
    }
    .truth();
    assert_eq!(truth.n_nonnull(), 5 * 30);
}

#[test]
fn genotype_marginals_and_linkage() {
    let cfg = GwasSimConfig {
        n: 4000,
        m: 20,
        block_size: 10,
        maf: 0.2,
        p11: 0.8,
        causal: vec![],
        amplitude: 0.0,
    };
    let mut rng = stream_rng(3, Purpose::Setting, 0, 0);
    let g = simulate_genotypes(&cfg, &mut rng).unwrap();
    let n = g.n as f64;
    for j in 0..g.m {
        let mean = g.column(j).iter().map(|&x| x as f64).sum::<f64>() / n;
        assert!(
            (mean / 2.0 - cfg.maf).abs() < 0.02,
            "column {j} frequency {mean}"
        );
    }
    let corr = |a: &[u8], b: &[u8]| {
        let ma = a.iter().map(|&x| x as f64).sum::<f64>() / n;
        let mb = b.iter().map(|&x| x as f64).sum::<f64>() / n;
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (&x, &y) in a.iter().zip(b) {
            let (x, y) = (x as f64 - ma, y as f64 - mb);
            sab += x * y;
            saa += x * x;
            sbb += y * y;
        }
        sab / (saa * sbb).sqrt()
    };
    let expected = cfg.p11 - cfg.p01();
    let within = corr(g.column(3), g.column(4));
    assert!(
        (within - expected).abs() < 0.05,
        "lag-1 correlation {within}"
    );
    let across = corr(g.column(9), g.column(10));
    assert!(across.abs() < 0.06, "cross-block correlation {across}");
}

#[test]
fn null_gwas_pvalues_are_uniform() {
    let cfg = GwasSimConfig {
        causal: vec![],
        ..small_gwas(0.0)
    };
    let mut rng = stream_rng(11, Purpose::Setting, 0, 0);
    let s = GwasScenario::new(cfg.clone(), simulate_genotypes(&cfg, &mut rng).unwrap()).unwrap();
    let mut sample: Vec<f64> = (0..200)
        .flat_map(|i| {
            let mut r = stream_rng(11, Purpose::Replicate, 0, i);
            let y = s.draw(&mut r);
            s.pvalues(&y).unwrap().into_iter().step_by(10)
        })
        .collect();
    let d = ks_uniform(&mut sample);
    assert!(d < 1.63 / (sample.len() as f64).sqrt(), "KS statistic {d}");
}

#[test]
fn null_tree_leaf_pvalues_are_uniform() {
    let s = TreeScenario::new(tree_config(0.0)).unwrap();
    let g = simulation_tree();
    let mut sample: Vec<f64> = (0..300)
        .map(|i| {
            let mut r = stream_rng(5, Purpose::Replicate, 0, i);
            s.pvalues(&s.draw(&mut r)).unwrap()[g.leaves()[0]]
        })
        .collect();
    let d = ks_uniform(&mut sample);
    assert!(d < 1.63 / (sample.len() as f64).sqrt(), "KS statistic {d}");
}

#[test]
fn tree_truth_follows_leaves() {
    let s = TreeScenario::new(tree_config(1.0)).unwrap();
    assert_eq!(s.truth().n_nonnull(), 16);
    assert!(s.graph().unwrap().check_logical_relationships(s.truth()));
}

#[test]
fn dag_nonnulls_match_definition() {
    let cfg = SimulationConfig::new(ScenarioKind::Dag);
    let dag = cfg.dag_structure().unwrap();
    let a = dag.graph.annotations().unwrap();
    assert_eq!(a.universe(), 728);
    assert_eq!(dag.graph.len(), 170);
    assert_eq!(dag.nonnull_genes.len(), 12);
    let s = DagScenario::new(DagSimConfig {
        graph: Arc::new(dag.graph.clone()),
        n_cases: 10,
        n_controls: 10,
        nonnull_genes: dag.nonnull_genes.clone(),
        amplitude: 1.0,
        combination: crate::CombinationMethod::Simes,
    })
    .unwrap();
    let expected = (0..dag.graph.len())
        .filter(|&j| a.genes(j).iter().any(|g| dag.nonnull_genes.contains(g)))
        .count();
    assert_eq!(s.truth().n_nonnull(), expected);
    assert!(dag.graph.check_logical_relationships(s.truth()));
    for &t in &dag.terms {
        assert!(a.genes(t).iter().all(|g| dag.nonnull_genes.contains(g)));
    }
}

#[test]
fn replicates_are_deterministic() {
    let cfg = small_gwas(0.8);
    let mut rng = stream_rng(9, Purpose::Setting, 0, 0);
    let s = GwasScenario::new(cfg.clone(), simulate_genotypes(&cfg, &mut rng).unwrap()).unwrap();
    let filter = Filter::clumping(BlockPartition::contiguous(40, 10).unwrap());
    let procs = [
        ProcedureSpec::Bh,
        ProcedureSpec::FocusedBh,
        ProcedureSpec::FocusedBhOracle,
        ProcedureSpec::FocusedBhPerm,
    ];
    let opts = RunOptions {
        n_mc: 50,
        n_perm: 10,
        ..RunOptions::default()
    };
    let a = run_replicates(&s, &procs, &filter, &opts, 20, 42, 0.8).unwrap();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let b = pool.install(|| run_replicates(&s, &procs, &filter, &opts, 20, 42, 0.8).unwrap());
    assert_eq!(a, b);
    let c = run_replicates(&s, &procs, &filter, &opts, 20, 43, 0.8).unwrap();
    assert_ne!(a.outcomes, c.outcomes);
    let mut x = Vec::new();
    let mut y = Vec::new();
    write_report_csv(&[a], &mut x).unwrap();
    write_report_csv(&[b], &mut y).unwrap();
    assert_eq!(x, y);
}

#[test]
fn report_csv_layout() {
    let s = TreeScenario::new(tree_config(2.0)).unwrap();
    let filter = Filter::outer_nodes(Arc::new(simulation_tree()));
    let procs = [ProcedureSpec::Bh, ProcedureSpec::FocusedBh];
    let r = run_replicates(&s, &procs, &filter, &RunOptions::default(), 5, 1, 2.0).unwrap();
    assert_eq!(r.t_max, 4.0);
    let mut buf = Vec::new();
    write_report_csv(&[r], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 1 + 2 * 6);
    assert!(lines[1].starts_with("2,bh,pre,fdr,"));
    assert!(lines[6].starts_with("2,bh,filter,gamma0,"));
    assert!(lines[7].starts_with("2,focused-bh,pre,fdr,"));
    assert!(lines[1].ends_with(",5"));
}

#[test]
fn focused_bh_post_filter_fdp_bounded_by_trace() {
    let s = TreeScenario::new(tree_config(1.0)).unwrap();
    let filter = Filter::outer_nodes(Arc::new(simulation_tree()));
    let r = run_replicates(
        &s,
        &[ProcedureSpec::FocusedBh],
        &filter,
        &RunOptions::default(),
        30,
        2,
        1.0,
    )
    .unwrap();
    for o in &r.outcomes {
        assert!((0.0..=1.0).contains(&o[0].fdp_post));
        assert!((0.0..=1.0).contains(&o[0].power_post));
    }
}

#[test]
fn config_defaults_and_parsing() {
    let cfg =
        SimulationConfig::from_toml_str("kind = \"gwas\"\nreps = 3\n[gwas]\nm = 300\n").unwrap();
    assert_eq!(cfg.reps(), 3);
    assert_eq!(cfg.q, 0.1);
    assert_eq!(cfg.gwas.m, 300);
    assert_eq!(cfg.gwas.block_size, 30);
    assert_eq!(cfg.filter_choice(), FilterChoice::Clumping);
    assert_eq!(cfg.procedures().len(), 4);
    let tree = SimulationConfig::from_toml_str(
        "kind = \"tree\"\nprocedures = [\"bh\", \"focused-bh-perm\"]\nfilter = \"trivial\"\n",
    )
    .unwrap();
    assert_eq!(
        tree.procedures(),
        vec![ProcedureSpec::Bh, ProcedureSpec::FocusedBhPerm]
    );
    assert_eq!(tree.filter_choice(), FilterChoice::Trivial);
    assert!(SimulationConfig::from_toml_str("kind = \"tree\"\nbogus = 1\n").is_err());
    assert!(SimulationConfig::from_toml_str("kind = \"forest\"\n").is_err());
}

#[test]
fn config_run_gives_one_report_per_amplitude() {
    let mut cfg = SimulationConfig::new(ScenarioKind::Gwas);
    cfg.reps = Some(4);
    cfg.amplitudes = Some(vec![0.5, 1.0]);
    cfg.n_mc = 20;
    cfg.n_perm = 5;
    cfg.gwas = GwasParams {
        n: 50,
        m: 60,
        block_size: 10,
        n_causal: 2,
        ..GwasParams::default()
    };
    let reports = cfg.run(7).unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[1].amplitude, 1.0);
    assert_eq!(reports[0].t_max, 2.0);
    assert_eq!(reports[0].summaries.len(), 4);
}
