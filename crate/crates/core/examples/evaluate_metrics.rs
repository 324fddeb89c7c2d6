//! Score a trained model and both baselines with MAE, Degree of Matthew
//! Effect and the Position Bias Metric.

use posbias::data::SplitSpec;
use posbias::evaluation::{evaluate_all, write_reports_csv, MatthewVariant, Scorer};
use posbias::synthetic::{zipf_ratings, SyntheticSpec};
use posbias::trainer::{train, Algorithm, TrainConfig};
use posbias::BaselineScorer;

fn main() -> anyhow::Result<()> {
    let dataset = zipf_ratings(&SyntheticSpec {
        users: 400,
        items: 200,
        ..SyntheticSpec::default()
    })?;
    let split = dataset.split(&SplitSpec::default())?;

    let trained = |algorithm, beta| -> anyhow::Result<Box<dyn Scorer>> {
        let config = TrainConfig {
            algorithm,
            beta,
            ..TrainConfig::default()
        };
        Ok(Box::new(train(&split.train, &config)?.model))
    };
    let scorers: Vec<(&str, f64, Box<dyn Scorer>)> = vec![
        ("classic_mf", 0.0, trained(Algorithm::ClassicMf, 0.0)?),
        ("cosine_mf", 0.0, trained(Algorithm::CosineMf, 0.0)?),
        (
            "position_bias_mf",
            0.5,
            trained(Algorithm::PositionBiasMf, 0.5)?,
        ),
        (
            "random",
            0.0,
            Box::new(BaselineScorer::random(42, split.train.r_max())),
        ),
        ("zipf", 0.0, Box::new(BaselineScorer::zipf(&split.train))),
    ];

    let mut reports = Vec::new();
    for (name, beta, scorer) in &scorers {
        for variant in [MatthewVariant::LiteralXmax, MatthewVariant::ParetoXmin] {
            let mut report = evaluate_all(
                name,
                scorer.as_ref(),
                &split.train,
                &split.test,
                10,
                variant,
            )?;
            report.beta = *beta;
            if variant == MatthewVariant::ParetoXmin {
                report.algorithm.push_str("(pareto)");
            }
            reports.push(report);
        }
    }
    write_reports_csv(&reports, std::io::stdout())?;
    Ok(())
}
