use formscreen::formulation::{
    build_descriptor, DescriptorConvention, LoadingScale, SeparatorEncoding,
};
use formscreen::gcn::{GcnModel, GrCache, GrSet};
use formscreen::interpret::spearman;
use formscreen::numkernel::{fd_check_report, Probe};
use formscreen::regressor::{
    evaluate, fit, train, Metrics, ParityPoint, RegressorModel, RegressorObjective, TrainConfig,
    HIDDEN_WIDTHS,
};
use formscreen::synthetic::{make_dataset, SyntheticOracle};
use formscreen::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Rows = Vec<(Vec<f64>, f64)>;

fn quick(max_epochs: usize, hidden: &[usize]) -> TrainConfig {
    TrainConfig {
        initial_lr: 1e-3,
        max_epochs,
        patience: max_epochs,
        hidden: hidden.to_vec(),
        ..TrainConfig::default()
    }
}

fn monotone(n: usize, seed: u64) -> Rows {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x: f64 = rng.random_range(0.0..1.0);
            (vec![x], 50.0 + 150.0 * x * x)
        })
        .collect()
}

#[test]
fn constant_labels_are_reproduced() {
    let rows: Rows = (0..12)
        .map(|i| (vec![i as f64 / 12.0, 1.0 - i as f64 / 24.0], 200.0))
        .collect();
    let cfg = TrainConfig {
        initial_lr: 1e-2,
        ..quick(400, &[16, 8])
    };
    let (m, _) = fit(
        RegressorModel::init_for_width(1, 2, &cfg.hidden),
        &rows,
        &rows,
        &cfg,
    )
    .unwrap();
    for (x, _) in &rows {
        let p = m.predict_raw(x).unwrap();
        assert!((p - 200.0).abs() <= 1.0, "{p}");
    }
}

#[test]
fn monotone_data_gives_rank_consistent_predictions() {
    let (train_rows, val_rows) = (monotone(40, 1), monotone(20, 2));
    let cfg = quick(300, &[16, 8]);
    let (m, _) = fit(
        RegressorModel::init_for_width(0, 1, &cfg.hidden),
        &train_rows,
        &val_rows,
        &cfg,
    )
    .unwrap();
    let probe = monotone(200, 3);
    let xs: Vec<f64> = probe.iter().map(|(x, _)| x[0]).collect();
    let preds: Vec<f64> = probe
        .iter()
        .map(|(x, _)| m.predict_raw(x).unwrap())
        .collect();
    let rho = spearman(&xs, &preds).unwrap().unwrap();
    assert!(rho >= 0.95, "{rho}");
}

#[test]
fn returned_model_is_the_best_validation_checkpoint() {
    let (train_rows, val_rows) = (monotone(30, 4), monotone(15, 5));
    let cfg = TrainConfig {
        patience: 15,
        ..quick(200, &[8])
    };
    let (m, h) = fit(
        RegressorModel::init_for_width(2, 1, &cfg.hidden),
        &train_rows,
        &val_rows,
        &cfg,
    )
    .unwrap();
    let min = h.val_rmse.iter().copied().fold(f64::INFINITY, f64::min);
    assert_eq!(h.best_val_rmse, min);
    assert_eq!(h.val_rmse[h.best_epoch], min);
    let err: Vec<f64> = val_rows
        .iter()
        .map(|(x, y)| m.predict_raw(x).unwrap() - y)
        .collect();
    let rmse = (err.iter().map(|e| e * e).sum::<f64>() / err.len() as f64).sqrt();
    assert!((rmse - min).abs() <= 1e-9 * min.max(1.0), "{rmse} vs {min}");
    assert!(h.val_rmse.len() <= h.best_epoch + cfg.patience + 1);
}

#[test]
fn training_is_seed_deterministic() {
    let (train_rows, val_rows) = (monotone(20, 6), monotone(10, 7));
    let cfg = TrainConfig {
        seed: 12,
        ..quick(30, &[8, 4])
    };
    let run = || {
        fit(
            RegressorModel::init_for_width(cfg.seed, 1, &cfg.hidden),
            &train_rows,
            &val_rows,
            &cfg,
        )
        .unwrap()
    };
    let (a, ha) = run();
    let (b, hb) = run();
    assert_eq!(ha, hb);
    assert_eq!(a.params(), b.params());
    let other = TrainConfig {
        seed: 13,
        ..cfg.clone()
    };
    let (_, hc) = fit(
        RegressorModel::init_for_width(13, 1, &other.hidden),
        &train_rows,
        &val_rows,
        &other,
    )
    .unwrap();
    assert_ne!(ha.train_loss, hc.train_loss);
}

#[test]
fn full_width_gradient_check() {
    let conv = DescriptorConvention::default();
    let m = RegressorModel::init(5, conv, "fd");
    assert_eq!(
        m.widths(),
        [802, HIDDEN_WIDTHS[0], HIDDEN_WIDTHS[1], HIDDEN_WIDTHS[2], 1]
    );
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rows: Rows = (0..2)
        .map(|_| {
            (
                (0..802).map(|_| rng.random_range(0.0..1.0)).collect(),
                rng.random_range(-1.0..1.0),
            )
        })
        .collect();
    let refs: Vec<(&[f64], f64)> = rows.iter().map(|(x, y)| (x.as_slice(), *y)).collect();
    let obj = RegressorObjective::new(&m, &refs).unwrap();
    let r = fd_check_report(
        &obj,
        m.params(),
        1e-4,
        Probe::Sample {
            count: 200,
            seed: 1,
        },
    )
    .unwrap();
    assert!(r.max_rel < 1e-4, "{r:?}");
    assert!(r.kinked * 20 <= r.compared + r.kinked, "{r:?}");
}

#[test]
fn held_out_synthetic_points_fall_within_three_sigma() {
    let mut enc = GcnModel::init(2);
    enc.freeze();
    let grs = GrSet::from_model(&enc, &GrCache::new()).unwrap();
    let oracle = SyntheticOracle::default();
    let conv = DescriptorConvention::default();
    let data = make_dataset(&oracle, 93 + 60, 11).unwrap();
    let held_out = make_dataset(&oracle, 200, 12).unwrap();
    let rows: Vec<_> = data
        .iter()
        .map(|r| (build_descriptor(&r.design, &grs, conv), r.capacity))
        .collect();
    let (tr, va) = rows.split_at(93);
    let cfg = TrainConfig {
        max_epochs: 150,
        patience: 50,
        hidden: vec![128, 64, 16],
        ..TrainConfig::default()
    };
    let (m, _) = train(tr, va, &cfg).unwrap();
    let inside = held_out
        .iter()
        .filter(|r| {
            let p = m.predict(&build_descriptor(&r.design, &grs, conv)).unwrap();
            (p - oracle.capacity(&r.design)).abs() <= 3.0 * oracle.sigma
        })
        .count();
    assert!(
        inside * 100 >= 95 * held_out.len(),
        "{inside} of {}",
        held_out.len()
    );
}

#[test]
fn predictions_check_the_descriptor_convention() {
    let mut enc = GcnModel::init(0);
    enc.freeze();
    let grs = GrSet::from_model(&enc, &GrCache::new()).unwrap();
    let rec = &make_dataset(&SyntheticOracle::default(), 1, 0).unwrap()[0];
    let zero = RegressorModel::zeros(DescriptorConvention::default(), grs.version());
    let d = build_descriptor(&rec.design, &grs, DescriptorConvention::default());
    assert_eq!(zero.predict(&d).unwrap(), 0.0);

    let m = RegressorModel::init(1, DescriptorConvention::default(), grs.version());
    assert_eq!(
        m.predict(&d).unwrap().to_bits(),
        m.predict(&d).unwrap().to_bits()
    );
    let raw = DescriptorConvention {
        loading: LoadingScale::Raw,
        separator: SeparatorEncoding::Scalar,
    };
    let other = build_descriptor(&rec.design, &grs, raw);
    assert!(matches!(m.predict(&other), Err(Error::Convention(_))));
    let foreign = RegressorModel::init(1, DescriptorConvention::default(), "someone-else");
    assert!(matches!(foreign.predict(&d), Err(Error::Convention(_))));
}

#[test]
fn metrics_by_hand() {
    let parity = vec![
        ParityPoint {
            id: 1,
            measured: 1.0,
            predicted: 1.0,
        },
        ParityPoint {
            id: 2,
            measured: 4.0,
            predicted: 2.0,
        },
    ];
    let m = Metrics::from_parity(parity).unwrap();
    assert!((m.rmse - 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(m.mae, 1.0);
    assert!(Metrics::from_parity(Vec::new()).is_err());
}

#[test]
fn evaluation_of_a_perfect_fit_is_zero() {
    let mut enc = GcnModel::init(0);
    enc.freeze();
    let grs = GrSet::from_model(&enc, &GrCache::new()).unwrap();
    let zero = RegressorModel::zeros(DescriptorConvention::default(), grs.version());
    let mut recs = make_dataset(&SyntheticOracle::default(), 5, 1).unwrap();
    for r in &mut recs {
        r.capacity = 0.0;
    }
    let m = evaluate(&zero, &recs, &grs).unwrap();
    assert_eq!((m.rmse, m.mae), (0.0, 0.0));
    assert_eq!(m.parity.len(), 5);
}

#[test]
fn divergence_is_reported_with_the_epoch() {
    let rows: Rows = vec![(vec![1.0], 1e300), (vec![-1.0], -1e300)];
    let cfg = TrainConfig {
        initial_lr: 1e3,
        ..quick(20, &[4])
    };
    let r = fit(
        RegressorModel::init_for_width(0, 1, &cfg.hidden),
        &rows,
        &rows,
        &cfg,
    );
    assert!(matches!(r, Err(Error::Diverged { .. })), "{r:?}");
}
