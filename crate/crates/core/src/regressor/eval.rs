use std::io::Write;

use crate::error::{Error, Result};
use crate::formulation::{build_descriptor, CellRecord};
use crate::gcn::GrSet;

use super::model::RegressorModel;
use super::train::rmse_of;

#[derive(Clone, Debug, PartialEq)]
pub struct ParityPoint {
    pub id: u64,
    pub measured: f64,
    pub predicted: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    pub rmse: f64,
    pub mae: f64,
    pub parity: Vec<ParityPoint>,
}

impl Metrics {
    pub fn from_parity(parity: Vec<ParityPoint>) -> Result<Self> {
        if parity.is_empty() {
            return Err(Error::Input(
                "cannot compute metrics on zero records".into(),
            ));
        }
        let pred: Vec<f64> = parity.iter().map(|p| p.predicted).collect();
        let truth: Vec<f64> = parity.iter().map(|p| p.measured).collect();
        Ok(Self {
            rmse: rmse_of(&pred, &truth),
            mae: mae_of(&pred, &truth),
            parity,
        })
    }
}

pub fn mae_of(pred: &[f64], truth: &[f64]) -> f64 {
    pred.iter()
        .zip(truth)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / pred.len() as f64
}

/// RMSE, MAE and parity pairs of `model` over `records`.
pub fn evaluate(model: &RegressorModel, records: &[CellRecord], grs: &GrSet) -> Result<Metrics> {
    let parity = records
        .iter()
        .map(|r| {
            let d = build_descriptor(&r.design, grs, model.convention());
            Ok(ParityPoint {
                id: r.id,
                measured: r.capacity,
                predicted: model.predict(&d)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Metrics::from_parity(parity)
}

/// CSV with columns split, rmse, mae.
pub fn write_metrics_csv<W: Write>(out: W, rows: &[(&str, &Metrics)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Input(format!("writing metrics: {e}"));
    w.write_record(["split", "rmse", "mae"]).map_err(err)?;
    for (split, m) in rows {
        w.write_record([split.to_string(), m.rmse.to_string(), m.mae.to_string()])
            .map_err(err)?;
    }
    w.flush()
        .map_err(|e| Error::Input(format!("writing metrics: {e}")))
}

/// CSV with columns id, measured, predicted.
pub fn write_parity_csv<W: Write>(out: W, points: &[ParityPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Input(format!("writing parity data: {e}"));
    w.write_record(["id", "measured", "predicted"])
        .map_err(err)?;
    for p in points {
        w.write_record([
            p.id.to_string(),
            p.measured.to_string(),
            p.predicted.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush()
        .map_err(|e| Error::Input(format!("writing parity data: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points(pairs: &[(f64, f64)]) -> Vec<ParityPoint> {
        pairs
            .iter()
            .enumerate()
            .map(|(i, &(measured, predicted))| ParityPoint {
                id: i as u64,
                measured,
                predicted,
            })
            .collect()
    }

    #[test]
    fn perfect_predictions_have_zero_error() {
        let m = Metrics::from_parity(points(&[(1.0, 1.0), (5.0, 5.0)])).unwrap();
        assert_eq!((m.rmse, m.mae), (0.0, 0.0));
    }

    #[test]
    fn hand_computed_errors() {
        let m = Metrics::from_parity(points(&[(1.0, 1.0), (4.0, 2.0)])).unwrap();
        assert!((m.rmse - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.mae, 1.0);
    }

    #[test]
    fn empty_is_error() {
        assert!(Metrics::from_parity(Vec::new()).is_err());
    }

    #[test]
    fn csv_layout() {
        let m = Metrics::from_parity(points(&[(1.0, 1.0), (4.0, 2.0)])).unwrap();
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &[("test", &m)]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            format!("split,rmse,mae\ntest,{},1\n", 2f64.sqrt())
        );
        let mut buf = Vec::new();
        write_parity_csv(&mut buf, &m.parity).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "id,measured,predicted\n0,1,1\n1,4,2\n"
        );
    }
}
