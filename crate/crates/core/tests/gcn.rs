use std::sync::OnceLock;

use formscreen::chem::{canonical_constituents, featurize, parse_smiles, MolecularGraph};
use formscreen::gcn::{
    encode_constituent, gcn_forward, pretrain, read_corpus, write_corpus, GcnModel, GrCache, GrSet,
    PretrainConfig, PretrainLabel, StopReason, GR_WIDTH,
};
use formscreen::regressor::{fit, RegressorModel, TrainConfig};
use formscreen::synthetic::{graph_label, make_pretrain_corpus};
use formscreen::Error;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corpus(n: usize, seed: u64) -> Vec<(MolecularGraph, PretrainLabel)> {
    make_pretrain_corpus(n, seed)
        .unwrap()
        .into_iter()
        .map(|(s, l)| (parse_smiles(&s).unwrap(), l))
        .collect()
}

fn trained() -> &'static (GcnModel, f64) {
    static CELL: OnceLock<(GcnModel, f64)> = OnceLock::new();
    CELL.get_or_init(|| {
        let (m, h) = pretrain(&corpus(50, 3), &PretrainConfig::default()).unwrap();
        (m, h.best_loss)
    })
}

#[test]
fn synthetic_graph_statistics_are_learned() {
    let (model, best) = trained();
    assert!(*best < 0.1, "standardized MSE {best}");
    assert!(model.is_frozen());
}

#[test]
fn single_molecule_is_memorized() {
    let (_, h) = pretrain(&corpus(1, 9), &PretrainConfig::default()).unwrap();
    assert!(h.best_loss < 1e-3, "{}", h.best_loss);
}

#[test]
fn pretraining_is_seed_deterministic() {
    let cfg = PretrainConfig {
        max_epochs: 30,
        seed: 4,
        ..PretrainConfig::default()
    };
    let data = corpus(12, 1);
    let (a, ha) = pretrain(&data, &cfg).unwrap();
    let (b, hb) = pretrain(&data, &cfg).unwrap();
    assert_eq!(ha, hb);
    assert_eq!(a.params(), b.params());
    assert_eq!(ha.stop, StopReason::MaxEpochs);
}

#[test]
fn bad_corpora_are_input_errors() {
    assert!(matches!(
        pretrain(&[], &PretrainConfig::default()),
        Err(Error::Input(_))
    ));
    let g = parse_smiles("CCO").unwrap();
    let bad = PretrainLabel {
        homo_ev: f64::NAN,
        lumo_ev: 0.0,
        dipole_debye: 1.0,
    };
    assert!(matches!(
        pretrain(&[(g, bad)], &PretrainConfig::default()),
        Err(Error::Input(_))
    ));
    assert!(matches!(
        PretrainLabel::from_slice(&[1.0, 2.0]),
        Err(Error::Input(_))
    ));
}

#[test]
fn registry_encodes_to_distinct_finite_vectors() {
    let (model, _) = trained();
    let grs = GrSet::from_model(model, &GrCache::new()).unwrap();
    for gr in grs.iter() {
        assert_eq!(gr.as_slice().len(), GR_WIDTH);
        assert!(gr.as_slice().iter().all(|v| v.is_finite()));
    }
    let (licl, dol) = (grs.get(0).as_slice(), grs.get(4).as_slice());
    let gap = licl
        .iter()
        .zip(dol)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(gap > 1e-6, "{gap}");
}

#[test]
fn cache_returns_bit_identical_representations() {
    let (model, _) = trained();
    let cache = GrCache::new();
    for c in &canonical_constituents() {
        let first = cache.encode(c, model).unwrap();
        let second = cache.encode(c, model).unwrap();
        let direct = encode_constituent(c, model).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(first.as_slice()), bits(second.as_slice()));
        assert_eq!(bits(first.as_slice()), bits(direct.as_slice()));
    }
    assert_eq!(cache.len(), 8);
}

#[test]
fn unfrozen_encoder_cannot_encode() {
    let model = GcnModel::init(0);
    let c = &canonical_constituents()[0];
    assert!(matches!(
        encode_constituent(c, &model),
        Err(Error::State(_))
    ));
    assert!(matches!(
        GrSet::from_model(&model, &GrCache::new()),
        Err(Error::State(_))
    ));
}

#[test]
fn regressor_training_leaves_the_encoder_untouched() {
    let (model, _) = trained();
    let params_before = model.params().clone();
    let before = GrSet::from_model(model, &GrCache::new()).unwrap();

    let rows: Vec<(Vec<f64>, f64)> = (0..8)
        .map(|i| {
            let x: Vec<f64> = before
                .iter()
                .flat_map(|g| g.as_slice().iter().map(|v| v * i as f64 / 8.0))
                .collect();
            (x, 100.0 + i as f64)
        })
        .collect();
    let cfg = TrainConfig {
        max_epochs: 5,
        hidden: vec![8],
        ..TrainConfig::default()
    };
    let reg = RegressorModel::init_for_width(0, rows[0].0.len(), &cfg.hidden);
    fit(reg, &rows, &rows, &cfg).unwrap();

    let after = GrSet::from_model(model, &GrCache::new()).unwrap();
    assert_eq!(model.params(), &params_before);
    for (a, b) in before.iter().zip(after.iter()) {
        assert_eq!(a, b);
    }
}

#[test]
fn zero_weights_give_zero_representation() {
    let mut m = GcnModel::zeros();
    m.freeze();
    let gr = gcn_forward(&featurize(&parse_smiles("OCCOCCO").unwrap()), &m).unwrap();
    assert!(gr.as_slice().iter().all(|v| *v == 0.0));
}

#[test]
fn relabeled_molecules_share_a_representation() {
    let (model, _) = trained();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (smiles, _) in make_pretrain_corpus(20, 8).unwrap() {
        let g = parse_smiles(&smiles).unwrap();
        let base = gcn_forward(&featurize(&g), model).unwrap();
        let mut p: Vec<usize> = (0..g.atom_count()).collect();
        p.shuffle(&mut rng);
        let moved = gcn_forward(&featurize(&g.permuted(&p).unwrap()), model).unwrap();
        let d = base
            .as_slice()
            .iter()
            .zip(moved.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(d <= 1e-9, "{smiles}: {d}");
    }
}

#[test]
fn corpus_csv_round_trips_and_labels_recompute() {
    let entries = make_pretrain_corpus(15, 5).unwrap();
    let mut buf = Vec::new();
    write_corpus(&mut buf, &entries).unwrap();
    let back = read_corpus(buf.as_slice()).unwrap();
    assert_eq!(back.len(), entries.len());
    for (e, (s, l)) in back.iter().zip(&entries) {
        assert_eq!(&e.smiles, s);
        assert_eq!(e.label, *l);
        assert_eq!(graph_label(&e.graph), *l);
    }
    assert_eq!(make_pretrain_corpus(15, 5).unwrap(), entries);
}
