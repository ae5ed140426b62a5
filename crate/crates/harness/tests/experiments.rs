use tsiv::estimators::ts_align;
use tsiv::var_model::BlockLayout;
use tsiv_harness::config::ObsEquivalenceParams;
use tsiv_harness::experiments::{census_records, draw_matrix, obs_equivalence, SAMPLE};
use tsiv_harness::{run, EstimatorSpec, ExperimentConfig, ExperimentId, Family, HarnessError, Report};

fn small(id: ExperimentId) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults(id);
    cfg.n_matrices = 3;
    cfg.replicates = 2;
    if id == ExperimentId::DeltaSweep {
        cfg.sample_sizes = vec![200, 1000];
        cfg.deltas = vec![0.0, 1.0];
    }
    if id == ExperimentId::PredictUnderIntervention {
        cfg.sample_sizes = vec![500];
    }
    cfg
}

fn bytes(r: &Report) -> Vec<Vec<u8>> {
    let mut out: Vec<Vec<u8>> = r.tables.iter().map(|t| t.to_csv(&r.meta).unwrap()).collect();
    out.push(r.summary_json().into_bytes());
    out
}

#[test]
fn consistency_smoke_run_has_one_row_per_cell() {
    let mut cfg = small(ExperimentId::Consistency);
    cfg.n_matrices = 1;
    cfg.replicates = 1;
    let r = run(&cfg, Some(1)).unwrap();
    // 4 estimators × 4 sample sizes
    assert_eq!(r.table("errors").unwrap().rows.len(), 16);
    assert_eq!(r.table("summary").unwrap().rows.len(), 16);
}

#[test]
fn outputs_do_not_depend_on_the_worker_count() {
    for id in [ExperimentId::Consistency, ExperimentId::DeltaSweep, ExperimentId::PredictUnderIntervention, ExperimentId::IdentifiabilityCensus] {
        let cfg = small(id);
        assert_eq!(bytes(&run(&cfg, Some(1)).unwrap()), bytes(&run(&cfg, Some(3)).unwrap()), "{id}");
    }
}

#[test]
fn seed_changes_results_and_hash() {
    let cfg = small(ExperimentId::LagsVsInstruments);
    let mut other = cfg.clone();
    other.seed += 1;
    let (a, b) = (run(&cfg, None).unwrap(), run(&other, None).unwrap());
    assert_ne!(a.meta.config_hash, b.meta.config_hash);
    assert_ne!(a.table("errors").unwrap().rows, b.table("errors").unwrap().rows);
    assert_eq!(bytes(&a), bytes(&run(&cfg, None).unwrap()));
}

#[test]
fn lag_comparators_use_the_same_number_of_instruments() {
    let cfg = ExperimentConfig::defaults(ExperimentId::LagsVsInstruments);
    assert_eq!(cfg.estimators.len(), 2);
    let m = draw_matrix(cfg.seed, &cfg.draw.spec(cfg.dims), 0).unwrap();
    let sample = m.params().simulate(300, u64::from(SAMPLE)).unwrap();
    let rows: Vec<usize> = cfg.estimators.iter().map(|e| ts_align(&sample, &e.alignment).unwrap().instruments.nrows()).collect();
    assert_eq!(rows, vec![6, 6]);
}

#[test]
fn lags_report_ratios_per_matrix() {
    let cfg = small(ExperimentId::LagsVsInstruments);
    let r = run(&cfg, None).unwrap();
    let t = r.table("ratios").unwrap();
    assert_eq!(t.rows.len(), cfg.n_matrices * cfg.sample_sizes.len());
    assert!(r.summary["by_T"].is_array());
}

#[test]
fn equivalent_pair_differs_only_in_the_lag_one_effect_entry() {
    for a in [0.0, 0.5, -0.3] {
        let p = ObsEquivalenceParams { a, ..ObsEquivalenceParams::default() };
        let r = obs_equivalence(&p).unwrap();
        assert_eq!(r.entries.len(), 4 * (p.max_lag + 1));
        for &(lag, row, col, first, second) in &r.entries {
            let gap = first - second;
            if (lag, row, col) == (1, 3, 2) {
                assert!((gap + p.b).abs() < 1e-12, "a = {a}: {gap}");
            } else {
                assert!(gap.abs() < 1e-12, "a = {a}, lag {lag} ({row}, {col}): {gap}");
            }
        }
        // closed form of the differing entry under the first parameterization
        let (_, _, _, first, _) = *r.entries.iter().find(|e| (e.0, e.1, e.2) == (1, 3, 2)).unwrap();
        assert!((first - p.b * p.c * p.c / (1.0 - a * a)).abs() < 1e-12);
        assert_eq!(r.tce, (0.0, p.b));
    }
}

#[test]
fn explosive_confounder_is_a_config_error() {
    let mut cfg = ExperimentConfig::defaults(ExperimentId::ObsEquivalence);
    cfg.obs.a = 1.0;
    assert!(matches!(run(&cfg, None), Err(HarnessError::Config(_))));
}

#[test]
fn census_families() {
    let mut cfg = small(ExperimentId::IdentifiabilityCensus);
    cfg.n_matrices = 20;
    let generic = census_records(&cfg).unwrap();
    assert!(generic.iter().all(|r| r.identifiable && r.population));

    cfg.family = Family::RepeatedEigenvalue;
    let repeated = census_records(&cfg).unwrap();
    assert!(repeated.iter().all(|r| !r.identifiable && !r.population && r.jordan != Some(true)));

    cfg.family = Family::EqualDiagonal;
    cfg.dims = BlockLayout::new(1, 1, 1, 1);
    let equal = census_records(&cfg).unwrap();
    assert!(equal.iter().all(|r| r.identifiable && r.population));
}

#[test]
fn predict_compares_every_estimator_at_every_multiple() {
    let cfg = small(ExperimentId::PredictUnderIntervention);
    let r = run(&cfg, None).unwrap();
    let n = cfg.intervention_multiples.len();
    assert_eq!(r.summary["comparisons"].as_array().unwrap().len(), n * cfg.estimators.len());
    assert_eq!(r.table("mspe").unwrap().rows.len(), cfg.n_matrices * n * (cfg.estimators.len() + 1));
    assert_eq!(r.table("pairs").unwrap().rows.len(), cfg.n_matrices * n);
}

#[test]
fn invalid_requests_are_config_errors() {
    let cfg = small(ExperimentId::Consistency);
    assert!(matches!(run(&cfg, Some(0)), Err(HarnessError::Config(_))));
    let mut bad = cfg.clone();
    bad.sample_sizes.clear();
    assert!(matches!(run(&bad, None), Err(HarnessError::Config(_))));
    assert!("niv_x".parse::<EstimatorSpec>().is_err());
}

#[test]
fn report_files() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(&small(ExperimentId::ObsEquivalence), None).unwrap();
    let written = r.write(dir.path()).unwrap();
    let names: Vec<String> = written.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["obs_equivalence_autocovariances.csv", "obs_equivalence_summary.json"]);
    let csv = std::fs::read_to_string(&written[0]).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.contains("seed") && header.contains("config_hash") && header.contains("version"), "{header}");
}
