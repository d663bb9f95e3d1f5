//! End-to-end acceptance suite. Each criterion prints one PASS/FAIL line to
//! the real stdout (bypassing the test harness capture) and then asserts.
//!
//! Criteria 10-12 need the measured 93-cell dataset; point
//! `FORMSCREEN_DATASET` at its CSV to have them reported. They never gate.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;

use formscreen::artifact::ModelArtifact;
use formscreen::baselines::{train_rfr, train_svr, FlatFeatures, RfrConfig, SvrConfig};
use formscreen::candidates::{GenConfig, Pool};
use formscreen::chem::{canonical_constituents, parse_smiles, MolecularGraph};
use formscreen::formulation::{
    build_descriptor, descriptor_from_parts, load_dataset, split_random, split_sorted, CellRecord,
    DescriptorConvention, FormulationDesign, Separator,
};
use formscreen::gcn::{
    gcn_forward, pretrain, GcnModel, GrCache, GrSet, PretrainConfig, PretrainObjective, LABEL_COUNT,
};
use formscreen::interpret::{
    average_ranks, default_loading_windows, scc_report, spearman, Grouping,
};
use formscreen::models::{CapacityModel, FgcnTrainer, ModelTrainer, RfrTrainer, SvrTrainer};
use formscreen::numkernel::{fd_check_report, FdReport, Matrix, Probe};
use formscreen::regressor::{fit, mae_of, RegressorModel, RegressorObjective, TrainConfig};
use formscreen::screening::screen;
use formscreen::synthetic::{make_dataset, make_pretrain_corpus, SyntheticOracle};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

fn report(n: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {n:>2} {verdict} {name}: {detail}");
}

fn frozen_encoder(seed: u64) -> GcnModel {
    let mut m = GcnModel::init(seed);
    m.freeze();
    m
}

// 1. Gradient checks, step 1e-4, threshold 1e-4. Coordinates whose
// perturbation flips a ReLU are counted separately (at most 5% allowed).
#[test]
fn c01_gradient_correctness() {
    const TOL: f64 = 1e-4;
    const PROBES: usize = 60;
    let mut pre = Vec::new();
    let mut reg = Vec::new();
    let conv = DescriptorConvention::default();
    for cfg in 0..25u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + cfg);

        let n_graphs = rng.random_range(2..=5);
        let graphs = make_pretrain_corpus(n_graphs, cfg)
            .unwrap()
            .into_iter()
            .map(|(s, _)| formscreen::chem::featurize(&parse_smiles(&s).unwrap()))
            .collect::<Vec<_>>();
        let targets: Vec<f64> = (0..n_graphs * LABEL_COUNT)
            .map(|_| rng.random_range(-1.5..1.5))
            .collect();
        let model = GcnModel::init(cfg);
        let obj = PretrainObjective::new(
            &model,
            graphs,
            Matrix::new(n_graphs, LABEL_COUNT, targets).unwrap(),
        )
        .unwrap();
        pre.push(
            fd_check_report(
                &obj,
                model.params(),
                1e-4,
                Probe::Sample {
                    count: PROBES,
                    seed: cfg,
                },
            )
            .unwrap(),
        );

        let m = RegressorModel::init(cfg, conv, "fd");
        let n_rows = rng.random_range(1..=3);
        let rows: Vec<(Vec<f64>, f64)> = (0..n_rows)
            .map(|_| {
                let x = (0..conv.width())
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect();
                (x, rng.random_range(-1.0..1.0))
            })
            .collect();
        let refs: Vec<(&[f64], f64)> = rows.iter().map(|(x, y)| (x.as_slice(), *y)).collect();
        let obj = RegressorObjective::new(&m, &refs).unwrap();
        reg.push(
            fd_check_report(
                &obj,
                m.params(),
                1e-4,
                Probe::Sample {
                    count: PROBES,
                    seed: cfg,
                },
            )
            .unwrap(),
        );
    }
    let summary = |rs: &[FdReport]| {
        let worst = rs.iter().map(|r| r.max_rel).fold(0.0, f64::max);
        let kinked: usize = rs.iter().map(|r| r.kinked).sum();
        let compared: usize = rs.iter().map(|r| r.compared).sum();
        (worst, kinked, compared)
    };
    let (wp, kp, cp) = summary(&pre);
    let (wr, kr, cr) = summary(&reg);
    let total = 25 * PROBES;
    let pass = wp < TOL && wr < TOL && kp * 20 <= total && kr * 20 <= total;
    report(
        1,
        "gradient correctness",
        pass,
        &format!(
            "25 configs x {PROBES} coords; pretrain max rel err {wp:.2e} over {cp} ({kp} across a ReLU kink); regressor 802-1000-500-100-1 {wr:.2e} over {cr} ({kr} across a kink) (< {TOL:e}, kinks <= 5%)"
        ),
    );
    assert!(pass);
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

// 2. Permutation invariance of graph representations.
#[test]
fn c02_permutation_invariance() {
    const TOL: f64 = 1e-9;
    let model = frozen_encoder(3);
    let gr = |g: &MolecularGraph| gcn_forward(&formscreen::chem::featurize(g), &model).unwrap();

    let small = parse_smiles("CC(=O)O").unwrap();
    assert_eq!(small.atom_count(), 4);
    let base = gr(&small);
    let perms = permutations(4);
    let mut worst_small = 0.0f64;
    for p in &perms {
        let d = max_abs_diff(base.as_slice(), gr(&small.permuted(p).unwrap()).as_slice());
        worst_small = worst_small.max(d);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_reg = 0.0f64;
    let registry = canonical_constituents();
    for c in &registry {
        let g = &c.graph;
        let base = gr(g);
        for _ in 0..20 {
            let mut p: Vec<usize> = (0..g.atom_count()).collect();
            p.shuffle(&mut rng);
            let d = max_abs_diff(base.as_slice(), gr(&g.permuted(&p).unwrap()).as_slice());
            worst_reg = worst_reg.max(d);
        }
    }
    let pass = perms.len() == 24 && worst_small <= TOL && worst_reg <= TOL;
    report(
        2,
        "permutation invariance",
        pass,
        &format!(
            "{} perms of 4-atom graph max diff {worst_small:.1e}; 20 perms x {} constituents max diff {worst_reg:.1e} (<= {TOL:e})",
            perms.len(),
            registry.len()
        ),
    );
    assert!(pass);
}

// 3. Descriptor contract.
#[test]
fn c03_descriptor_contract() {
    let model = frozen_encoder(9);
    let grs = GrSet::from_model(&model, &GrCache::new()).unwrap();
    let conv = DescriptorConvention::default();
    let mut notes = Vec::new();

    let design = FormulationDesign::new(
        [4.0, 6.0, 3.0, 1.0, 68.0, 2.0, 10.0, 6.0],
        42.0,
        Separator::Qma,
    )
    .unwrap();
    let d = build_descriptor(&design, &grs, conv);
    let len_ok = d.len() == 802;
    notes.push(format!("length {}", d.len()));

    let expected = [0.04, 0.06, 0.03, 0.01, 0.68, 0.02, 0.10, 0.06];
    let mut factors_ok = true;
    for (k, f) in expected.iter().enumerate() {
        let gr = grs.get(k).as_slice();
        let seg = d.segment(k);
        factors_ok &= seg.iter().zip(gr).all(|(s, g)| *s == f * g);
    }
    notes.push(format!("Table 2(iv) factors exact: {factors_ok}"));

    let sparse = FormulationDesign::new(
        [0.0, 0.0, 20.0, 0.0, 80.0, 0.0, 0.0, 0.0],
        45.0,
        Separator::Celgard,
    )
    .unwrap();
    let ds = build_descriptor(&sparse, &grs, conv);
    let zero_ok = [0, 1, 3, 5, 6, 7]
        .iter()
        .all(|&k| ds.segment(k).iter().all(|v| *v == 0.0));
    notes.push(format!("zero segments: {zero_ok}"));

    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let mol: [f64; 8] = std::array::from_fn(|_| rng.random_range(0.0..30.0));
        let alpha = rng.random_range(0.1..5.0);
        let scaled = mol.map(|m| alpha * m);
        let a = descriptor_from_parts(&mol, 40.0, Separator::Qma, &grs, conv);
        let b = descriptor_from_parts(&scaled, 40.0, Separator::Qma, &grs, conv);
        for k in 0..8 {
            worst = worst.max(max_abs_diff(
                &a.segment(k).iter().map(|v| alpha * v).collect::<Vec<_>>(),
                b.segment(k),
            ));
        }
    }
    let linear_ok = worst <= 1e-12;
    notes.push(format!("scaling linearity max err {worst:.1e} (<= 1e-12)"));

    let pass = len_ok && factors_ok && zero_ok && linear_ok;
    report(3, "descriptor contract", pass, &notes.join("; "));
    assert!(pass);
}

// 4. Candidate pool.
#[test]
fn c04_candidate_pool() {
    let cfg = GenConfig::default();
    let pool = formscreen::candidates::generate(&cfg).unwrap();
    let worst_sum = pool
        .iter()
        .map(|d| (d.mol().iter().sum::<f64>() - 100.0).abs())
        .fold(0.0, f64::max);
    let max_salt = pool.iter().map(|d| d.salt_total()).fold(0.0, f64::max);
    let pass = pool.len() == 33_740 && worst_sum <= 1e-9 && max_salt <= cfg.salt_cap;
    report(
        4,
        "candidate pool",
        pass,
        &format!(
            "{} designs (expect 33740); max |sum-100| {worst_sum:.1e} (<= 1e-9); max salt {max_salt} mol% (cap {}, allowance {})",
            pool.len(),
            cfg.salt_cap,
            cfg.over_cap_allowance
        ),
    );
    assert!(pass);
}

fn closed_form(x: &[f64], y: &[f64]) -> f64 {
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

fn pearson_on_average_ranks(x: &[f64], y: &[f64]) -> f64 {
    // Independent tie handling: rank = 1 + #smaller + (#equal - 1) / 2.
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|a| {
                let less = v.iter().filter(|b| *b < a).count() as f64;
                let eq = v.iter().filter(|b| *b == a).count() as f64;
                1.0 + less + (eq - 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

// 5. Spearman against oracles.
#[test]
fn c05_spearman_oracles() {
    let base: Vec<f64> = (1..=7).map(f64::from).collect();
    let perms = permutations(7);
    let exact = perms.iter().all(|p| {
        let y: Vec<f64> = p.iter().map(|&i| base[i]).collect();
        spearman(&base, &y).unwrap() == Some(closed_form(&base, &y))
    });

    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst = 0.0f64;
    let mut tested = 0;
    while tested < 1000 {
        let n = rng.random_range(5..40);
        let x: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..6))).collect();
        let y: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..6))).collect();
        let Some(rho) = spearman(&x, &y).unwrap() else {
            continue;
        };
        worst = worst.max((rho - pearson_on_average_ranks(&x, &y)).abs());
        tested += 1;
    }
    let small = spearman(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
    let pass = perms.len() == 5040 && exact && worst <= 1e-12 && small == Some(0.5);
    report(
        5,
        "spearman oracle equivalence",
        pass,
        &format!(
            "5040 perms exact: {exact}; tied vectors max diff {worst:.1e} (<= 1e-12); rho([1,2,3],[1,3,2]) = {small:?}"
        ),
    );
    assert!(pass);
}

struct Synthetic {
    oracle: SyntheticOracle,
    model: Box<dyn CapacityModel>,
    val_rmse: f64,
    train: Vec<CellRecord>,
}

fn rmse(pred: &[f64], truth: &[f64]) -> f64 {
    (pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t).powi(2))
        .sum::<f64>()
        / pred.len() as f64)
        .sqrt()
}

fn predict_all(model: &dyn CapacityModel, records: &[CellRecord]) -> (Vec<f64>, Vec<f64>) {
    records
        .iter()
        .map(|r| (model.predict(&r.design).unwrap(), r.capacity))
        .unzip()
}

/// Pretrain on a 200-molecule synthetic corpus, then fit the regressor on
/// 93 synthetic cells with early stopping on 186 more. Shared by 6 and 7.
fn synthetic() -> &'static Synthetic {
    static CELL: OnceLock<Synthetic> = OnceLock::new();
    CELL.get_or_init(|| {
        let corpus: Vec<(MolecularGraph, _)> = make_pretrain_corpus(200, 0)
            .unwrap()
            .into_iter()
            .map(|(s, l)| (parse_smiles(&s).unwrap(), l))
            .collect();
        let pre = PretrainConfig {
            max_epochs: 200,
            ..PretrainConfig::default()
        };
        let (encoder, _) = pretrain(&corpus, &pre).unwrap();
        let grs = GrSet::from_model(&encoder, &GrCache::new()).unwrap();

        let oracle = SyntheticOracle::default();
        let data = make_dataset(&oracle, 93 + 186, 7).unwrap();
        let (train, val) = data.split_at(93);
        let trainer = FgcnTrainer {
            grs,
            convention: DescriptorConvention::default(),
            config: TrainConfig {
                max_epochs: 150,
                patience: 100,
                ..TrainConfig::default()
            },
        };
        let model = trainer.fit(train, val).unwrap();
        let (p, t) = predict_all(model.as_ref(), val);
        Synthetic {
            oracle,
            val_rmse: rmse(&p, &t),
            model,
            train: train.to_vec(),
        }
    })
}

// 6. Synthetic end-to-end.
#[test]
fn c06_synthetic_end_to_end() {
    let s = synthetic();
    let pool = Pool::generate(&GenConfig::default()).unwrap();
    let results = screen(s.model.as_ref(), &pool.designs).unwrap();
    let pred: Vec<f64> = results.iter().map(|r| r.predicted).collect();
    let truth: Vec<f64> = results
        .iter()
        .map(|r| s.oracle.capacity(&r.design))
        .collect();
    let rho = spearman(&pred, &truth).unwrap().unwrap();

    let rows: Vec<(FormulationDesign, f64)> = results
        .iter()
        .map(|r| (r.design.clone(), r.predicted))
        .collect();
    let scc = scc_report(&rows, &Grouping::PerLoading, &default_loading_windows()).unwrap();
    let names = formscreen::chem::constituent_names();
    let mut sign_notes = Vec::new();
    let mut signs_ok = true;
    for (name, sign) in s.oracle.detectable_signs() {
        let k = names.iter().position(|n| *n == name).unwrap();
        let wrong: Vec<&str> = scc
            .bins
            .iter()
            .filter(|b| b.rho[k].is_none_or(|r| r.signum() != sign))
            .map(|b| b.label.as_str())
            .collect();
        signs_ok &= wrong.is_empty();
        let mark = if sign > 0.0 { '+' } else { '-' };
        if wrong.is_empty() {
            sign_notes.push(format!("{name}{mark} ok in all {} bins", scc.bins.len()));
        } else {
            sign_notes.push(format!("{name}{mark} wrong in bins {wrong:?}"));
        }
    }
    let pass = s.val_rmse <= 30.0 && rho >= 0.6 && signs_ok && results.len() == 33_740;
    report(
        6,
        "synthetic end-to-end",
        pass,
        &format!(
            "val RMSE {:.2} (<= 30); pool Spearman vs noiseless oracle {rho:.3} over {} designs (>= 0.6); {}",
            s.val_rmse,
            results.len(),
            sign_notes.join(", ")
        ),
    );
    assert!(pass);
}

fn one_feature(points: impl Iterator<Item = (f64, f64)>) -> Vec<(FlatFeatures, f64)> {
    points
        .map(|(x, y)| {
            let mut f = [0.0; 10];
            f[0] = x;
            (FlatFeatures(f), y)
        })
        .collect()
}

fn step(x: f64) -> f64 {
    if x > 50.0 {
        250.0
    } else {
        150.0
    }
}

// 7. Baseline sanity.
#[test]
fn c07_baseline_sanity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let train = one_feature(
        (0..300)
            .map(|_| rng.random_range(0.0..100.0))
            .map(|x| (x, step(x))),
    );
    let test = one_feature(
        (0..200)
            .map(|_| rng.random_range(0.0..100.0))
            .map(|x| (x, step(x))),
    );
    let forest = train_rfr(&train, &RfrConfig::default()).unwrap();
    let pred: Vec<f64> = test.iter().map(|(x, _)| forest.predict(x)).collect();
    let truth: Vec<f64> = test.iter().map(|(_, y)| *y).collect();
    let step_mae = mae_of(&pred, &truth);
    let step_ok = step_mae < 0.05 * 100.0;

    let lin = one_feature((0..40).map(|i| i as f64 / 39.0).map(|x| (x, 3.0 * x - 1.0)));
    let svr_cfg = SvrConfig {
        epsilon: 0.01,
        ..SvrConfig::default()
    };
    let svr = train_svr(&lin, &svr_cfg).unwrap();
    let worst_resid = lin
        .iter()
        .map(|(x, y)| (svr.predict(x) - y).abs())
        .fold(0.0, f64::max);
    let svr_ok = worst_resid <= svr_cfg.epsilon + 1e-3;

    let s = synthetic();
    let test_cells = make_dataset(&s.oracle, 200, 8).unwrap();
    let (fp, ft) = predict_all(s.model.as_ref(), &test_cells);
    let fgcn_mae = mae_of(&fp, &ft);
    let rfr = RfrTrainer(RfrConfig::default()).fit(&s.train, &[]).unwrap();
    let (rp, rt) = predict_all(rfr.as_ref(), &test_cells);
    let rfr_mae = mae_of(&rp, &rt);
    let order_ok = fgcn_mae <= rfr_mae + 5.0;

    let pass = step_ok && svr_ok && order_ok;
    report(
        7,
        "baseline sanity",
        pass,
        &format!(
            "RFR step MAE {step_mae:.3} (< 5.0 = 5% of range 100); SVR max residual {worst_resid:.4} (<= eps {} + 1e-3); synthetic test MAE fgcn {fgcn_mae:.2} vs rfr {rfr_mae:.2} (fgcn <= rfr + 5)",
            svr_cfg.epsilon
        ),
    );
    assert!(pass);
}

const PIPELINE: &str = r#"
seed = 4
out = "out"
[paths]
dataset = "out/dataset.csv"
corpus = "out/corpus.csv"
[synth]
molecules = 60
records = 93
[pretrain]
max_epochs = 30
[train]
max_epochs = 5
patience = 5
hidden = [64, 32]
[gen]
n_compositions = 40
[report.rfr]
n_trees = 20
"#;

fn run_pipeline(dir: &Path) {
    fs::write(dir.join("run.toml"), PIPELINE).unwrap();
    for cmd in [
        "synth",
        "pretrain",
        "train",
        "eval",
        "gen",
        "screen",
        "interpret",
        "report",
    ] {
        let o = Command::new(env!("CARGO_BIN_EXE_formscreen"))
            .current_dir(dir)
            .args(["--config", "run.toml", cmd])
            .output()
            .unwrap();
        assert!(
            o.status.success(),
            "{cmd}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

fn outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir.join("out"))
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

// 8. Determinism.
#[test]
fn c08_determinism() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    run_pipeline(a.path());
    run_pipeline(b.path());
    let (oa, ob) = (outputs(a.path()), outputs(b.path()));
    let csvs: Vec<&String> = oa.keys().filter(|k| k.ends_with(".csv")).collect();
    let differing: Vec<&String> = oa.keys().filter(|k| oa.get(*k) != ob.get(*k)).collect();
    let same_names = oa.keys().eq(ob.keys());

    let bytes = &oa["model.fsm"];
    let loaded = ModelArtifact::from_bytes(bytes).unwrap();
    let resaved = loaded.to_bytes();
    let path = a.path().join("again.fsm");
    loaded.save(&path).unwrap();
    let reloaded = ModelArtifact::load(&path).unwrap().to_bytes();
    let round_trip = &resaved == bytes && &reloaded == bytes;

    let pass = same_names && differing.is_empty() && csvs.len() >= 10 && round_trip;
    report(
        8,
        "determinism",
        pass,
        &format!(
            "{} CSVs compared across two runs, differing files {differing:?}; artifact ({} bytes) save-load-save identical: {round_trip}",
            csvs.len(),
            bytes.len()
        ),
    );
    assert!(pass);
}

// 9. Learning-rate schedule.
#[test]
fn c09_training_schedule() {
    let cfg = TrainConfig {
        max_epochs: 10_500,
        patience: 100_000,
        hidden: vec![2],
        ..TrainConfig::default()
    };
    let rows = vec![(vec![0.1, 0.2], 1.0), (vec![0.4, -0.3], 0.5)];
    let model = RegressorModel::init_for_width(0, 2, &cfg.hidden);
    let (_, h) = fit(model, &rows, &rows, &cfg).unwrap();
    let expected = |e: usize| match e {
        0..4000 => 1e-4,
        4000..7000 => 1e-3,
        _ => 1e-2,
    };
    let mismatches =
        h.lr.iter()
            .enumerate()
            .filter(|(e, lr)| **lr != expected(*e))
            .count();
    let pass = h.lr.len() == cfg.max_epochs && mismatches == 0;
    report(
        9,
        "training schedule",
        pass,
        &format!(
            "{} epochs logged; lr exactly 1e-4 on 0-3999, 1e-3 on 4000-6999, 1e-2 after; mismatches {mismatches}",
            h.lr.len()
        ),
    );
    assert!(pass);
}

fn dataset_path() -> Option<std::path::PathBuf> {
    std::env::var_os("FORMSCREEN_DATASET").map(Into::into)
}

fn skip(n: u32, name: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "criterion {n:>2} SKIP {name}: FORMSCREEN_DATASET not set (report-only)"
    );
}

fn note(n: u32, name: &str, ok: bool, detail: &str) {
    let verdict = if ok { "REPORT-OK" } else { "REPORT-MISS" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {n:>2} {verdict} {name}: {detail}");
}

/// Encoder for the measured dataset: pretrained on the synthetic corpus.
fn dataset_trainer(epochs: usize) -> FgcnTrainer {
    let corpus: Vec<(MolecularGraph, _)> = make_pretrain_corpus(200, 0)
        .unwrap()
        .into_iter()
        .map(|(s, l)| (parse_smiles(&s).unwrap(), l))
        .collect();
    let (encoder, _) = pretrain(&corpus, &PretrainConfig::default()).unwrap();
    FgcnTrainer {
        grs: GrSet::from_model(&encoder, &GrCache::new()).unwrap(),
        convention: DescriptorConvention::default(),
        config: TrainConfig {
            max_epochs: epochs,
            ..TrainConfig::default()
        },
    }
}

fn epochs_override() -> usize {
    std::env::var("FORMSCREEN_ACCEPT_EPOCHS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(TrainConfig::default().max_epochs)
}

// 10-12. Measured-dataset reproductions; reported, never asserted.
#[test]
fn c10_to_c12_dataset_reproduction() {
    let Some(path) = dataset_path() else {
        skip(10, "split RMSE 25 +/- 10");
        skip(11, "MAE ordering fgcn < rfr < svr");
        skip(12, "SCC on training data");
        return;
    };
    let ds = load_dataset(&path).unwrap();
    let records = ds.records;
    let trainer = dataset_trainer(epochs_override());

    for (label, (train, test)) in [
        ("random", split_random(&records, 0.2, 0).unwrap()),
        ("sorted", split_sorted(&records, 0.2).unwrap()),
    ] {
        let m = trainer.fit(&train, &test).unwrap();
        let (p, t) = predict_all(m.as_ref(), &test);
        let r = rmse(&p, &t);
        note(
            10,
            "split RMSE 25 +/- 10",
            (15.0..=35.0).contains(&r),
            &format!("{label} split test RMSE {r:.2}"),
        );
    }

    let (train, test) = split_random(&records, 0.15, 0).unwrap();
    let trainers: [(&str, f64, Box<dyn ModelTrainer>); 3] = [
        ("fgcn", 18.79, Box::new(trainer)),
        ("rfr", 21.10, Box::new(RfrTrainer(RfrConfig::default()))),
        ("svr", 30.00, Box::new(SvrTrainer(SvrConfig::default()))),
    ];
    let mut maes = Vec::new();
    for (name, reference, t) in &trainers {
        let m = t.fit(&train, &[]).unwrap();
        let (p, y) = predict_all(m.as_ref(), &test);
        let mae = mae_of(&p, &y);
        note(
            11,
            "MAE vs table",
            (mae - reference).abs() <= 8.0,
            &format!("{name} MAE {mae:.2} (reference {reference})"),
        );
        maes.push(mae);
    }
    note(
        11,
        "MAE ordering fgcn < rfr < svr",
        maes[0] < maes[1] && maes[1] < maes[2],
        &format!("{maes:.2?}"),
    );

    let rows: Vec<(FormulationDesign, f64)> = records
        .iter()
        .map(|r| (r.design.clone(), r.capacity))
        .collect();
    let windows = default_loading_windows();
    let scc = scc_report(&rows, &Grouping::Windows(windows.clone()), &windows);
    match scc {
        Ok(scc) => {
            let lo = scc.loading[0].rho;
            let hi = scc.loading[1].rho;
            note(
                12,
                "rho(loading) in [40,46]",
                lo.is_some_and(|r| (r + 0.07).abs() <= 0.15),
                &format!("{lo:?}"),
            );
            note(
                12,
                "rho(loading) above 46",
                hi.is_some_and(|r| r <= -0.5),
                &format!("{hi:?}"),
            );
        }
        Err(e) => note(12, "SCC on training data", false, &e.to_string()),
    }
    let m = dataset_trainer(epochs_override())
        .fit(&train, &test)
        .unwrap();
    let pool = Pool::generate(&GenConfig::default()).unwrap();
    let results = screen(m.as_ref(), &pool.designs).unwrap();
    let at40: Vec<(FormulationDesign, f64)> = results
        .iter()
        .filter(|r| r.design.loading() == 40.0)
        .map(|r| (r.design.clone(), r.predicted))
        .collect();
    let scc = scc_report(&at40, &Grouping::PerLoading, &[]).unwrap();
    let names = formscreen::chem::constituent_names();
    let rho = |n: &str| scc.bins[0].rho[names.iter().position(|c| *c == n).unwrap()];
    let (dol, libob) = (rho("DOL"), rho("LiBOB"));
    note(
        12,
        "screen SCC at 40 wt%",
        dol.is_some_and(|r| r > 0.0) && libob.is_some_and(|r| r < 0.0),
        &format!("DOL {dol:?}, LiBOB {libob:?}"),
    );
}
