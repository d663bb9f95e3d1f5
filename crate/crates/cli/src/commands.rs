use std::fmt::Write as _;

use anyhow::Context;
use formscreen::artifact::ModelArtifact;
use formscreen::candidates::Pool;
use formscreen::formulation::{
    build_descriptor, load_dataset, split_random, split_sorted, CellRecord, DescriptorVector,
};
use formscreen::gcn::{load_corpus, pretrain, write_corpus, GrSet};
use formscreen::interpret::{quartile_summary, scc_report, write_quartile_csv, write_scc_csv};
use formscreen::models::{compare, write_comparison_csv, FgcnModel, FgcnTrainer, Registry};
use formscreen::regressor::{
    evaluate, train, write_metrics_csv, write_parity_csv, Metrics, RegressorModel, TrainHistory,
};
use formscreen::screening::{
    load_predictions, scatter_svg, screen, shortlist, write_predictions_csv,
};
use formscreen::synthetic::{make_dataset, make_pretrain_corpus, SyntheticOracle};
use formscreen::{Error, Result};

use crate::config::{InterpretSource, RunConfig, SplitMethod, Validation};
use crate::output::{describe, Outputs};

fn finish(outputs: Outputs) -> anyhow::Result<()> {
    let written = outputs.commit()?;
    eprintln!("wrote {}", describe(&written));
    Ok(())
}

fn load_records(cfg: &RunConfig) -> anyhow::Result<Vec<CellRecord>> {
    let path = cfg.dataset_path()?;
    let ds = load_dataset(path)?;
    if !ds.rejections.is_empty() {
        let mut msg = format!("{}: {} invalid rows", path.display(), ds.rejections.len());
        for r in ds.rejections.iter().take(10) {
            let _ = write!(msg, "\n  {r}");
        }
        return Err(Error::Input(msg).into());
    }
    if ds.renormalized > 0 {
        eprintln!("{}", ds.summary());
    }
    Ok(ds.records)
}

fn load_artifact(cfg: &RunConfig) -> anyhow::Result<ModelArtifact> {
    let path = cfg.model_path();
    ModelArtifact::load(&path).with_context(|| format!("loading model {}", path.display()))
}

fn stamp(artifact: &mut ModelArtifact, cfg: &RunConfig, command: &str) -> Result<()> {
    artifact.set_meta(&format!("{command}.seed"), cfg.seed.to_string())?;
    artifact.set_meta(&format!("{command}.config_hash"), cfg.hash())?;
    artifact.set_meta(
        "format.created_by",
        concat!("formscreen ", env!("CARGO_PKG_VERSION")),
    )
}

pub fn synth(cfg: &RunConfig) -> anyhow::Result<()> {
    let corpus = make_pretrain_corpus(cfg.synth.molecules, cfg.seed)?;
    let oracle = SyntheticOracle {
        sigma: cfg.synth.sigma,
        ..SyntheticOracle::default()
    };
    if !(oracle.sigma >= 0.0 && oracle.sigma.is_finite()) {
        return Err(Error::Config(format!(
            "synthetic sigma {} must be finite and non-negative",
            oracle.sigma
        ))
        .into());
    }
    let records = make_dataset(&oracle, cfg.synth.records, cfg.seed)?;
    let mut out = Outputs::new(cfg.out_dir());
    out.add_with("corpus.csv", |b| write_corpus(b, &corpus))?;
    out.add_with("dataset.csv", |b| {
        formscreen::formulation::write_dataset(b, &records)
    })?;
    finish(out)
}

pub fn pretrain_cmd(cfg: &RunConfig) -> anyhow::Result<()> {
    let entries = load_corpus(cfg.corpus_path()?)?;
    let corpus: Vec<_> = entries.into_iter().map(|e| (e.graph, e.label)).collect();
    eprintln!("pretraining on {} molecules", corpus.len());
    let (model, history) = pretrain(&corpus, &cfg.pretrain)?;
    eprintln!(
        "best loss {:.6} at epoch {} ({})",
        history.best_loss,
        history.best_epoch,
        history.stop.as_str()
    );
    let mut artifact = ModelArtifact::new(model)?;
    stamp(&mut artifact, cfg, "pretrain")?;
    artifact.set_meta("pretrain.best_epoch", history.best_epoch.to_string())?;
    artifact.set_meta("pretrain.molecules", corpus.len().to_string())?;
    let mut csv = String::from("epoch,loss\n");
    for (i, l) in history.losses.iter().enumerate() {
        let _ = writeln!(csv, "{i},{l}");
    }
    let mut out = Outputs::new(cfg.out_dir());
    out.add("model.fsm", artifact.to_bytes());
    out.add("pretrain_history.csv", csv.into_bytes());
    finish(out)
}

fn descriptors(
    records: &[CellRecord],
    grs: &GrSet,
    cfg: &RunConfig,
) -> Vec<(DescriptorVector, f64)> {
    records
        .iter()
        .map(|r| (build_descriptor(&r.design, grs, cfg.descriptor), r.capacity))
        .collect()
}

fn history_csv(h: &TrainHistory) -> Vec<u8> {
    let mut csv = String::from("epoch,lr,train_loss,val_rmse\n");
    for i in 0..h.train_loss.len() {
        let _ = writeln!(csv, "{i},{},{},{}", h.lr[i], h.train_loss[i], h.val_rmse[i]);
    }
    csv.into_bytes()
}

pub fn train_cmd(cfg: &RunConfig) -> anyhow::Result<()> {
    let records = load_records(cfg)?;
    let artifact = load_artifact(cfg)?;
    cfg.train.validate()?;
    let grs = artifact.gr_set()?;
    let (rest, test) = match cfg.split.method {
        SplitMethod::Random => split_random(&records, cfg.split.test_fraction, cfg.seed)?,
        SplitMethod::Sorted => split_sorted(&records, cfg.split.test_fraction)?,
    };
    let (fit_set, val_set) = match cfg.split.validation {
        Validation::Holdout => {
            let (fit, val) = split_random(
                &rest,
                cfg.split.validation_fraction,
                cfg.seed.wrapping_add(1),
            )?;
            (fit, Some(val))
        }
        Validation::Test => (rest, None),
    };
    let val_ref = val_set.as_deref().unwrap_or(&test);
    eprintln!(
        "training on {} records, validating on {}, testing on {}",
        fit_set.len(),
        val_ref.len(),
        test.len()
    );
    let (regressor, history) = train(
        &descriptors(&fit_set, &grs, cfg),
        &descriptors(val_ref, &grs, cfg),
        &cfg.train,
    )?;
    eprintln!(
        "best validation RMSE {:.3} at epoch {} ({}){}",
        history.best_val_rmse,
        history.best_epoch,
        history.stop.as_str(),
        history
            .milestone_epoch
            .map(|e| format!(", below {} from epoch {e}", cfg.train.rmse_milestone))
            .unwrap_or_default()
    );

    let fit_m = evaluate(&regressor, &fit_set, &grs)?;
    let test_m = evaluate(&regressor, &test, &grs)?;
    let val_m = val_set
        .as_deref()
        .map(|v| evaluate(&regressor, v, &grs))
        .transpose()?;
    let mut rows: Vec<(&str, &Metrics)> = vec![("train", &fit_m)];
    if let Some(v) = &val_m {
        rows.push(("val", v));
    }
    rows.push(("test", &test_m));

    let mut artifact = artifact.with_regressor(regressor)?;
    stamp(&mut artifact, cfg, "train")?;
    artifact.set_meta("train.best_epoch", history.best_epoch.to_string())?;
    artifact.set_meta(
        "train.split",
        format!("{:?}", cfg.split.method).to_lowercase(),
    )?;

    let mut out = Outputs::new(cfg.out_dir());
    out.add("model.fsm", artifact.to_bytes());
    out.add("train_history.csv", history_csv(&history));
    out.add_with("metrics.csv", |b| write_metrics_csv(b, &rows))?;
    out.add_with("parity_train.csv", |b| write_parity_csv(b, &fit_m.parity))?;
    if let Some(v) = &val_m {
        out.add_with("parity_val.csv", |b| write_parity_csv(b, &v.parity))?;
    }
    out.add_with("parity_test.csv", |b| write_parity_csv(b, &test_m.parity))?;
    for (name, m) in &rows {
        eprintln!("{name}: RMSE {:.3}, MAE {:.3}", m.rmse, m.mae);
    }
    finish(out)
}

pub fn eval_cmd(cfg: &RunConfig) -> anyhow::Result<()> {
    let records = load_records(cfg)?;
    let artifact = load_artifact(cfg)?;
    let model = artifact.require_regressor()?;
    let m = evaluate(model, &records, &artifact.gr_set()?)?;
    eprintln!(
        "{} records: RMSE {:.3}, MAE {:.3}",
        records.len(),
        m.rmse,
        m.mae
    );
    let mut out = Outputs::new(cfg.out_dir());
    out.add_with("eval_metrics.csv", |b| write_metrics_csv(b, &[("all", &m)]))?;
    out.add_with("eval_parity.csv", |b| write_parity_csv(b, &m.parity))?;
    finish(out)
}

pub fn gen_cmd(cfg: &RunConfig) -> anyhow::Result<()> {
    let pool = Pool::generate(&cfg.gen)?;
    eprintln!("generated {} designs", pool.len());
    let mut out = Outputs::new(cfg.out_dir());
    out.add_with("pool.csv", |b| pool.write_csv(b))?;
    finish(out)
}

fn fgcn_model(artifact: &ModelArtifact, regressor: &RegressorModel) -> Result<FgcnModel> {
    let grs = artifact.gr_set()?;
    Ok(FgcnModel::new(
        regressor.clone(),
        grs,
        Default::default(),
        String::new(),
    ))
}

pub fn screen_cmd(cfg: &RunConfig) -> anyhow::Result<()> {
    let artifact = load_artifact(cfg)?;
    let regressor = artifact.require_regressor()?;
    let pool_path = cfg.pool_path();
    let mut pool =
        Pool::load(&pool_path).with_context(|| format!("loading pool {}", pool_path.display()))?;
    if let Some(sep) = cfg.screen.separator {
        pool = pool.restrict_separator(sep);
    }
    if pool.is_empty() {
        return Err(Error::Input(format!(
            "pool {} has no designs to screen",
            pool_path.display()
        ))
        .into());
    }
    let sl = cfg.screen.shortlist();
    let model = fgcn_model(&artifact, regressor)?;
    let results = screen(&model, &pool.designs)?;
    let short = shortlist(&results, &sl)?;
    eprintln!(
        "screened {} designs; {} shortlisted in [{}, {}] wt% above {} mAh/g",
        results.len(),
        short.len(),
        sl.window.0,
        sl.window.1,
        sl.threshold
    );
    let mut out = Outputs::new(cfg.out_dir());
    out.add_with("predictions.csv", |b| write_predictions_csv(b, &results))?;
    out.add_with("shortlist.csv", |b| write_predictions_csv(b, &short))?;
    out.add("screen.svg", scatter_svg(&results, &sl).into_bytes());
    finish(out)
}

pub fn interpret_cmd(cfg: &RunConfig) -> anyhow::Result<()> {
    let rows: Vec<_> = match cfg.interpret.source {
        InterpretSource::Predictions => {
            let path = cfg.predictions_path();
            load_predictions(&path)?
                .into_iter()
                .map(|r| (r.design, r.predicted))
                .collect()
        }
        InterpretSource::Dataset => load_records(cfg)?
            .into_iter()
            .map(|r| (r.design, r.capacity))
            .collect(),
    };
    let report = scc_report(&rows, &cfg.interpret.grouping(), &cfg.interpret.windows())?;
    let quartiles = quartile_summary(&rows, cfg.interpret.capacity_floor)?;
    eprintln!(
        "{} rows, {} groups; {} rows at or above {} mAh/g",
        rows.len(),
        report.bins.len(),
        quartiles.n,
        quartiles.capacity_floor
    );
    for l in &report.loading {
        match l.rho {
            Some(r) => eprintln!(
                "rho(loading, capacity) over {}: {r:.3} (n={})",
                l.label, l.n
            ),
            None => eprintln!(
                "rho(loading, capacity) over {}: insufficient (n={})",
                l.label, l.n
            ),
        }
    }
    let mut out = Outputs::new(cfg.out_dir());
    out.add_with("scc.csv", |b| write_scc_csv(b, &report))?;
    out.add_with("quartiles.csv", |b| write_quartile_csv(b, &quartiles))?;
    finish(out)
}

pub fn report_cmd(cfg: &RunConfig) -> anyhow::Result<()> {
    let records = load_records(cfg)?;
    let artifact = load_artifact(cfg)?;
    cfg.train.validate()?;
    let registry = Registry::standard(
        FgcnTrainer {
            grs: artifact.gr_set()?,
            convention: cfg.descriptor,
            config: cfg.train.clone(),
        },
        cfg.report.rfr.clone(),
        cfg.report.svr.clone(),
    );
    let trainers = cfg
        .report
        .models
        .iter()
        .map(|n| registry.get(n))
        .collect::<Result<Vec<_>>>()?;
    if trainers.is_empty() {
        return Err(Error::Config("report.models is empty".into()).into());
    }
    let (train_set, test) = split_random(&records, cfg.report.test_fraction, cfg.seed)?;
    let mut fitted = Vec::new();
    for t in trainers {
        eprintln!("fitting {} on {} records", t.name(), train_set.len());
        fitted.push(t.fit(&train_set, &[])?);
    }
    let refs: Vec<_> = fitted.iter().map(|m| m.as_ref()).collect();
    let rows = compare(&refs, &test)?;
    for r in &rows {
        eprintln!("{}: test MAE {:.3}", r.model, r.mae);
    }
    let mut out = Outputs::new(cfg.out_dir());
    out.add_with("comparison.csv", |b| write_comparison_csv(b, &rows))?;
    finish(out)
}
