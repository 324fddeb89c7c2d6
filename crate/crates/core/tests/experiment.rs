mod common;

use posbias::evaluation::{evaluate_all, read_reports_csv, write_reports_csv, MatthewVariant};
use posbias::experiment::{run_benchmark, run_sweep, ExperimentConfig};
use posbias::synthetic::{zipf_ratings, SyntheticSpec};
use posbias::trainer::{train, Algorithm, TrainConfig};
use posbias::BaselineScorer;

fn small_config() -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.set("k", "6").unwrap();
    c.set("epochs", "10").unwrap();
    c.set("k-top", "3").unwrap();
    c.set("seed", "5").unwrap();
    c.set("beta", "0,0.1,1").unwrap();
    c
}

#[test]
fn full_benchmark_cells_match_independent_runs() {
    let ds = zipf_ratings(&SyntheticSpec {
        users: 30,
        items: 20,
        ratings_per_user: 8,
        ..Default::default()
    })
    .unwrap();
    let config = small_config();
    let rows = run_benchmark(&config, &ds).unwrap();
    assert_eq!(rows.len(), 7);

    // Recompute every row outside the driver.
    let split = ds.split(&config.split).unwrap();
    let eval = |name: &str, scorer: &dyn posbias::Scorer| {
        evaluate_all(
            name,
            scorer,
            &split.train,
            &split.test,
            3,
            MatthewVariant::LiteralXmax,
        )
        .unwrap()
    };
    let trained = |algorithm, beta| {
        let c = TrainConfig {
            k: 6,
            epochs: 10,
            seed: 5,
            algorithm,
            beta,
            ..TrainConfig::default()
        };
        train(&split.train, &c).unwrap().model
    };
    let expected = [
        eval("classic_mf", &trained(Algorithm::ClassicMf, 0.0)),
        eval("cosine_mf", &trained(Algorithm::CosineMf, 0.0)),
        eval("position_bias_mf", &trained(Algorithm::PositionBiasMf, 0.0)),
        eval("position_bias_mf", &trained(Algorithm::PositionBiasMf, 0.1)),
        eval("position_bias_mf", &trained(Algorithm::PositionBiasMf, 1.0)),
        eval("random", &BaselineScorer::random(5, split.train.r_max())),
        eval("zipf", &BaselineScorer::zipf(&split.train)),
    ];
    for (row, want) in rows.iter().zip(&expected) {
        assert!(row.is_ok(), "{row:?}");
        assert_eq!(row.algorithm, want.algorithm);
        assert_eq!(row.mae, want.mae);
        assert_eq!(row.position_bias, want.position_bias);
        assert_eq!(row.matthew_degree.to_bits(), want.matthew_degree.to_bits());
        assert_eq!(row.test_size, split.test.len());
    }
    // beta = 0 runs of the two cosine objectives agree exactly.
    assert_eq!(rows[1].mae, rows[2].mae);
    assert_eq!(
        rows[1].matthew_degree.to_bits(),
        rows[2].matthew_degree.to_bits()
    );
}

#[test]
fn report_rows_parse_back() {
    let ds = common::random_dataset(25, 25, 200, 6);
    let rows = run_benchmark(&small_config(), &ds).unwrap();
    let mut buf = Vec::new();
    write_reports_csv(&rows, &mut buf).unwrap();
    let back = read_reports_csv(buf.as_slice()).unwrap();
    assert_eq!(back.len(), rows.len());
    for (a, b) in rows.iter().zip(&back) {
        assert_eq!(a.algorithm, b.algorithm);
        assert_eq!(
            (a.k, a.epochs, a.seed, a.k_top, a.test_size),
            (b.k, b.epochs, b.seed, b.k_top, b.test_size)
        );
        // Six significant digits on the way out.
        assert!((a.mae - b.mae).abs() <= 1e-5 * a.mae.abs().max(1e-12));
    }
}

#[test]
fn sweep_position_bias_is_non_increasing_over_seeds() {
    let betas = [0.0, 0.1, 1.0];
    let mut mean = [0.0; 3];
    for seed in 0..5u64 {
        let ds = zipf_ratings(&SyntheticSpec {
            seed,
            ..Default::default()
        })
        .unwrap();
        let mut config = ExperimentConfig::default();
        config.set("seed", &seed.to_string()).unwrap();
        config.set("beta", "1,0.1,0").unwrap();
        let rows = run_sweep(&config, &ds).unwrap();
        assert_eq!(rows.iter().map(|r| r.beta).collect::<Vec<_>>(), betas);
        for (slot, row) in rows.iter().enumerate() {
            mean[slot] += row.position_bias / 5.0;
        }
    }
    assert!(mean[0] >= mean[1] && mean[1] >= mean[2], "{mean:?}");
}

#[test]
fn sweep_needs_two_betas() {
    let ds = common::random_dataset(10, 10, 50, 1);
    let mut config = ExperimentConfig::default();
    config.set("beta", "0.3,0.3").unwrap();
    assert!(run_sweep(&config, &ds).is_err());
}
