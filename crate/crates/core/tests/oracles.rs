use cobra_core::search::{
    cv_score, fold_partitions, grid_search, make_folds, randomized_search, CvSplit, SearchResult, SearchSpace,
};
use cobra_core::smooth::SmoothObjective;
use cobra_core::{
    AggregationSet, CobraParams, Dataset, GradientDescentConfig, LearnerSpec, SmoothingParams, Termination, TuningSet,
    Variant,
};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};

fn synthetic(n: usize, seed: u64) -> Dataset {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let x: Array2<f64> = Array2::from_shape_fn((n, 2), |_| rng.gen_range(-2.0..2.0));
    let y = Array1::from_iter(
        x.rows()
            .into_iter()
            .map(|r| 3.0 * r[0] - r[1] + (2.0 * r[0]).sin() + rng.gen_range(-0.5..0.5)),
    );
    Dataset::from_arrays(x, y).unwrap()
}

fn specs() -> Vec<LearnerSpec> {
    LearnerSpec {
        tree_max_depth: 3,
        tree_min_leaf: 3,
        ..LearnerSpec::default()
    }
    .standard_trio()
}

const SPLIT: CvSplit = CvSplit {
    machine_fraction: 0.5,
    seed: 17,
};

#[test]
fn cv_score_at_huge_epsilon_is_the_aggregation_mean_predictor() {
    let ds = synthetic(60, 3);
    let folds = make_folds(ds.n_rows(), 5, 8).unwrap();
    let got = cv_score(&ds, &specs(), &CobraParams::unanimous(1e300), &folds, SPLIT).unwrap();

    let mut total = 0.0;
    let parts = fold_partitions(&folds, SPLIT).unwrap();
    for part in &parts {
        let mean =
            part.aggregation_rows.iter().map(|&i| ds.targets[i]).sum::<f64>() / part.aggregation_rows.len() as f64;
        let mse = part
            .held_out_rows
            .iter()
            .map(|&i| (ds.targets[i] - mean).powi(2))
            .sum::<f64>()
            / part.held_out_rows.len() as f64;
        total += mse;
    }
    let want = total / parts.len() as f64;
    assert!((got - want).abs() <= 1e-10 * want.max(1.0), "{got} vs {want}");
}

#[test]
fn cv_score_at_zero_epsilon_is_dominated_by_empty_neighbourhoods() {
    let ds = synthetic(60, 3);
    let folds = make_folds(ds.n_rows(), 5, 8).unwrap();
    let got = cv_score(&ds, &specs(), &CobraParams::unanimous(0.0), &folds, SPLIT).unwrap();
    // every held-out row predicted 0: mean of y^2 per fold
    let parts = fold_partitions(&folds, SPLIT).unwrap();
    let want = parts
        .iter()
        .map(|p| p.held_out_rows.iter().map(|&i| ds.targets[i].powi(2)).sum::<f64>() / p.held_out_rows.len() as f64)
        .sum::<f64>()
        / parts.len() as f64;
    assert!((got - want).abs() <= 1e-10 * want, "{got} vs {want}");
    assert_eq!(
        got,
        cv_score(&ds, &specs(), &CobraParams::unanimous(0.0), &folds, SPLIT).unwrap()
    );
}

#[test]
fn grid_search_returns_the_dense_grid_argmin() {
    let ds = synthetic(50, 21);
    let folds = make_folds(ds.n_rows(), 5, 2).unwrap();
    let dense: Vec<f64> = (0..=80).map(|i| 8.0 * i as f64 / 80.0).collect();
    let scores: Vec<f64> = dense
        .iter()
        .map(|&e| cv_score(&ds, &specs(), &CobraParams::unanimous(e), &folds, SPLIT).unwrap())
        .collect();
    let (best_i, best) = scores
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .unwrap();

    let sub: Vec<f64> = dense.iter().copied().step_by(4).chain([dense[best_i]]).collect();
    let space = SearchSpace::Grid {
        epsilons: sub,
        alphas: None,
    };
    let r = grid_search(&ds, &specs(), &space, &folds, SPLIT).unwrap();
    assert_eq!(r.best_epsilon, dense[best_i]);
    assert_eq!(r.cv_mse, *best);
    let table_min = r.table.iter().map(|c| c.cv_mse).fold(f64::INFINITY, f64::min);
    assert_eq!(r.cv_mse, table_min);
}

#[test]
fn more_grid_candidates_never_hurt() {
    let ds = synthetic(40, 5);
    let folds = make_folds(ds.n_rows(), 4, 1).unwrap();
    let coarse = SearchSpace::linear_grid(6.0, 7, None);
    let fine = SearchSpace::linear_grid(6.0, 13, None);
    let a = grid_search(&ds, &specs(), &coarse, &folds, SPLIT).unwrap();
    let b = grid_search(&ds, &specs(), &fine, &folds, SPLIT).unwrap();
    assert!(b.cv_mse <= a.cv_mse);
}

#[test]
fn singleton_grid_and_single_draw() {
    let ds = synthetic(30, 5);
    let folds = make_folds(ds.n_rows(), 3, 1).unwrap();
    let g = grid_search(
        &ds,
        &specs(),
        &SearchSpace::Grid {
            epsilons: vec![1.5],
            alphas: None,
        },
        &folds,
        SPLIT,
    )
    .unwrap();
    assert_eq!(g.best_epsilon, 1.5);
    assert_eq!(
        g.cv_mse,
        cv_score(&ds, &specs(), &CobraParams::unanimous(1.5), &folds, SPLIT).unwrap()
    );

    let space = SearchSpace::Random {
        lo: 0.0,
        hi: 4.0,
        draws: 1,
        seed: 77,
        alphas: None,
    };
    let drawn = space.candidates().unwrap()[0].0;
    let r = randomized_search(&ds, &specs(), &space, &folds, SPLIT).unwrap();
    assert_eq!(r.best_epsilon, drawn);
    assert_eq!(
        r,
        SearchResult {
            wall_time: r.wall_time,
            ..randomized_search(&ds, &specs(), &space, &folds, SPLIT).unwrap()
        }
    );
}

#[test]
fn equal_scores_prefer_the_smaller_epsilon() {
    let ds = synthetic(30, 5);
    let folds = make_folds(ds.n_rows(), 3, 1).unwrap();
    // both far above any prediction gap: identical mean-predictor scores
    let space = SearchSpace::Grid {
        epsilons: vec![1e6, 1e5],
        alphas: None,
    };
    let r = grid_search(&ds, &specs(), &space, &folds, SPLIT).unwrap();
    assert_eq!(r.table[0].cv_mse, r.table[1].cv_mse);
    assert_eq!(r.best_epsilon, 1e5);
}

#[test]
fn randomized_search_with_many_draws_matches_a_dense_grid() {
    let ds = synthetic(40, 12);
    let folds = make_folds(ds.n_rows(), 4, 3).unwrap();
    let grid = grid_search(&ds, &specs(), &SearchSpace::linear_grid(6.0, 1000, None), &folds, SPLIT).unwrap();
    let random = randomized_search(
        &ds,
        &specs(),
        &SearchSpace::Random {
            lo: 0.0,
            hi: 6.0,
            draws: 1000,
            seed: 99,
            alphas: None,
        },
        &folds,
        SPLIT,
    )
    .unwrap();
    let rel = (random.cv_mse - grid.cv_mse).abs() / grid.cv_mse;
    assert!(rel <= 0.05, "random {} vs grid {}", random.cv_mse, grid.cv_mse);
}

/// One machine, noisy sine responses, clean tuning targets: small
/// neighbourhoods chase the noise, large ones flatten the sine, so the
/// smoothed loss has a single interior minimum in epsilon.
fn sine_instance() -> (TuningSet, AggregationSet) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    let f = |x: f64| (std::f64::consts::TAU * x).sin();
    let l = 120;
    let xa: Vec<f64> = (0..l).map(|i| i as f64 / (l - 1) as f64).collect();
    let ya: Vec<f64> = xa.iter().map(|&x| f(x) + rng.gen_range(-0.8..0.8)).collect();
    let n = 45;
    let xt: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) / n as f64).collect();
    let yt: Vec<f64> = xt.iter().map(|&x| f(x)).collect();
    (
        TuningSet::new(Array2::from_shape_vec((n, 1), xt).unwrap(), Array1::from(yt)).unwrap(),
        AggregationSet::new(Array2::from_shape_vec((l, 1), xa).unwrap(), Array1::from(ya)).unwrap(),
    )
}

#[test]
fn tuner_finds_the_dense_grid_minimum() {
    let (tuning, agg) = sine_instance();
    for variant in [Variant::SumExp, Variant::MaxExp] {
        let smoothing = SmoothingParams { beta: 60.0, variant };
        let objective = SmoothObjective::new(vec![(&tuning, &agg)], smoothing).unwrap();
        let step = 1e-4;
        let grid: Vec<(f64, f64)> = (0..=5000)
            .map(|i| i as f64 * step)
            .map(|e| (e, objective.loss(e)))
            .collect();
        let best = (0..grid.len())
            .min_by(|&a, &b| grid[a].1.total_cmp(&grid[b].1))
            .unwrap();
        let arg = grid[best].0;
        assert!(
            grid[..=best].windows(2).all(|w| w[1].1 < w[0].1),
            "{variant:?}: not decreasing up to {arg}"
        );
        assert!(
            grid[best..].windows(2).all(|w| w[1].1 > w[0].1),
            "{variant:?}: not increasing after {arg}"
        );
        assert!(arg > 0.0 && arg < 0.5);

        let trace = objective
            .tune(&GradientDescentConfig {
                epsilon_init: Some(0.3),
                grad_tol: 1e-8,
                max_iters: 2000,
                ..Default::default()
            })
            .unwrap();
        assert_ne!(trace.termination, Termination::MaxIters);
        assert!(
            (trace.epsilon_star - arg).abs() <= step,
            "{variant:?}: tuner {} vs grid {arg}",
            trace.epsilon_star
        );
    }
}

#[test]
fn gradient_zero_start_stops_immediately() {
    let (tuning, agg) = sine_instance();
    let smoothing = SmoothingParams {
        beta: 60.0,
        variant: Variant::SumExp,
    };
    let objective = SmoothObjective::new(vec![(&tuning, &agg)], smoothing).unwrap();
    // far above every gap the kernel is flat and the gradient underflows
    let trace = objective
        .tune(&GradientDescentConfig {
            epsilon_init: Some(50.0),
            ..Default::default()
        })
        .unwrap();
    assert_eq!(trace.termination, Termination::GradTol);
    assert_eq!(trace.records.len(), 1);
    assert_eq!(trace.epsilon_star, 50.0);
}
