mod common;

use ndarray::Array2;
use posbias::model::top_k;
use posbias::{Error, FactorModel, PredictionMode};
use proptest::prelude::*;

fn model_from(u: Vec<f64>, v: Vec<f64>, k: usize) -> FactorModel {
    let n = u.len() / k;
    let m = v.len() / k;
    FactorModel::from_factors(
        Array2::from_shape_vec((n, k), u).unwrap(),
        Array2::from_shape_vec((m, k), v).unwrap(),
        PredictionMode::Cosine,
        5.0,
    )
    .unwrap()
}

fn row(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, k).prop_filter("nondegenerate", |v| {
        v.iter().map(|x| x * x).sum::<f64>() > 1e-3
    })
}

/// Sorts every candidate; the reference for `top_k`.
fn brute_force(scores: &[Vec<f64>], exclude: &[Vec<usize>], k_top: usize) -> Vec<Vec<usize>> {
    scores
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut items: Vec<usize> = (0..row.len())
                .filter(|j| !exclude.get(i).is_some_and(|e| e.contains(j)))
                .collect();
            items.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap().then(a.cmp(&b)));
            items.truncate(k_top);
            items
        })
        .collect()
}

fn items_of(lists: &posbias::TopKLists) -> Vec<Vec<usize>> {
    lists
        .lists
        .iter()
        .map(|l| l.iter().map(|p| p.0).collect())
        .collect()
}

#[test]
fn top_k_matches_exhaustive_sort_on_random_model() {
    let model = FactorModel::init(3, 4, 3, 21, 1.0).unwrap();
    let scores: Vec<Vec<f64>> = (0..3)
        .map(|i| (0..4).map(|j| model.predict_cosine(i, j)).collect())
        .collect();
    let lists = top_k(3, 4, |i, j| model.predict_cosine(i, j), &[], 2);
    assert_eq!(items_of(&lists), brute_force(&scores, &[], 2));
    for list in &lists.lists {
        assert!(list.windows(2).all(|w| w[0].1 >= w[1].1));
    }
}

#[test]
fn save_load_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.pbmf");
    let model = FactorModel::init(17, 9, 5, 3, 0.1).unwrap().with_r_max(5.0);
    model.save(&path).unwrap();
    assert_eq!(FactorModel::load(&path).unwrap(), model);

    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
    assert!(matches!(FactorModel::load(&path), Err(Error::Corrupt(_))));
    assert!(matches!(
        FactorModel::load(dir.path().join("missing")),
        Err(Error::Io { .. })
    ));
}

proptest! {
    #[test]
    fn cosine_is_scale_invariant(u in row(4), v in row(4), s in 1e-3f64..1e3) {
        let base = model_from(u.clone(), v.clone(), 4).predict_cosine(0, 0);
        let scaled: Vec<f64> = u.iter().map(|x| x * s).collect();
        let moved = model_from(scaled, v, 4).predict_cosine(0, 0);
        prop_assert!((base - moved).abs() < 1e-12);
        prop_assert!(base.abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn cosine_matches_oracle(u in row(6), v in row(6)) {
        let c = model_from(u.clone(), v.clone(), 6).predict_cosine(0, 0);
        prop_assert!((c - common::cosine_oracle(&u, &v)).abs() < 1e-12);
    }

    #[test]
    fn top_k_agrees_with_brute_force(
        raw in prop::collection::vec(0u8..6, 4 * 9),
        k_top in 1usize..12,
        excluded in prop::collection::vec(0usize..9, 0..5),
    ) {
        // Few distinct values so ties are common.
        let scores: Vec<Vec<f64>> = raw.chunks(9).map(|c| c.iter().map(|&x| x as f64).collect()).collect();
        let exclude = vec![excluded.clone(), vec![], excluded, vec![8]];
        let lists = top_k(4, 9, |i, j| scores[i][j], &exclude, k_top);
        prop_assert_eq!(items_of(&lists), brute_force(&scores, &exclude, k_top));
    }

    #[test]
    fn top_k_ignores_monotone_transforms(raw in prop::collection::vec(-5.0f64..5.0, 3 * 8), k_top in 1usize..8) {
        let score = |i: usize, j: usize| raw[i * 8 + j];
        let a = top_k(3, 8, score, &[], k_top);
        let b = top_k(3, 8, |i, j| (2.0 * score(i, j)).exp() + 3.0, &[], k_top);
        prop_assert_eq!(items_of(&a), items_of(&b));
    }

    #[test]
    fn model_bytes_roundtrip(n in 1usize..5, m in 1usize..5, k in 1usize..4, seed in any::<u64>(), dot in any::<bool>()) {
        let mode = if dot { PredictionMode::Dot } else { PredictionMode::Cosine };
        let model = FactorModel::init(n, m, k, seed, 2.0).unwrap().with_mode(mode).with_r_max(4.0);
        let mut buf = Vec::new();
        model.write_to(&mut buf).unwrap();
        prop_assert_eq!(FactorModel::read_from(buf.as_slice()).unwrap(), model);
    }
}
