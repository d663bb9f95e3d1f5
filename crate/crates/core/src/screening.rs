//! Batch prediction over a candidate pool, ranking and shortlisting.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::candidates::{design_fields, pool_columns, Pool};
use crate::chem::{is_salt, CONSTITUENT_COUNT};
use crate::error::{Error, Result};
use crate::formulation::{FormulationDesign, Separator};
use crate::models::CapacityModel;

#[derive(Clone, Debug, PartialEq)]
pub struct ScreeningResult {
    pub design_id: u64,
    pub design: FormulationDesign,
    pub predicted: f64,
    /// 1 is the highest prediction.
    pub rank: usize,
}

/// Predicts every design (in parallel) and ranks by descending prediction,
/// ties by ascending id. Results come back in rank order and do not depend
/// on pool order or thread count.
pub fn screen(
    model: &dyn CapacityModel,
    pool: &[(u64, FormulationDesign)],
) -> Result<Vec<ScreeningResult>> {
    let mut ids = HashSet::with_capacity(pool.len());
    if let Some((id, _)) = pool.iter().find(|(id, _)| !ids.insert(*id)) {
        return Err(Error::Input(format!(
            "design id {id} appears twice in the pool"
        )));
    }
    let preds = pool
        .par_iter()
        .map(|(id, d)| {
            let p = model.predict(d)?;
            if !p.is_finite() {
                return Err(Error::NonFinite(format!("prediction for design {id}")));
            }
            Ok(p)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| {
        preds[b]
            .total_cmp(&preds[a])
            .then(pool[a].0.cmp(&pool[b].0))
    });
    Ok(order
        .into_iter()
        .enumerate()
        .map(|(r, i)| ScreeningResult {
            design_id: pool[i].0,
            design: pool[i].1.clone(),
            predicted: preds[i],
            rank: r + 1,
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShortlistConfig {
    /// Inclusive LiI wt% window.
    pub window: (f64, f64),
    /// Predictions must exceed this strictly, mAh/g.
    pub threshold: f64,
    pub max_n: usize,
    /// Optional per-salt mol% ceilings (registry order of the four salts).
    pub salt_caps: Option<[f64; 4]>,
}

impl Default for ShortlistConfig {
    fn default() -> Self {
        Self {
            window: (40.0, 45.0),
            threshold: 210.0,
            max_n: 50,
            salt_caps: None,
        }
    }
}

/// Top `max_n` results inside the window and above the threshold.
pub fn shortlist(
    results: &[ScreeningResult],
    config: &ShortlistConfig,
) -> Result<Vec<ScreeningResult>> {
    let (lo, hi) = config.window;
    if !(lo <= hi) {
        return Err(Error::Config(format!(
            "loading window [{lo}, {hi}] is empty"
        )));
    }
    let within_caps = |d: &FormulationDesign| match config.salt_caps {
        None => true,
        Some(caps) => (0..CONSTITUENT_COUNT)
            .filter(|&k| is_salt(k))
            .all(|k| d.mol()[k] <= caps[k]),
    };
    let mut out: Vec<ScreeningResult> = results
        .iter()
        .filter(|r| {
            let l = r.design.loading();
            l >= lo && l <= hi && r.predicted > config.threshold && within_caps(&r.design)
        })
        .cloned()
        .collect();
    out.sort_by_key(|r| r.rank);
    out.truncate(config.max_n);
    Ok(out)
}

/// CSV: design_id, composition columns, lii_wtpct, separator,
/// predicted_mah_g, rank.
pub fn write_predictions_csv<W: Write>(out: W, results: &[ScreeningResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Input(format!("writing predictions: {e}"));
    let mut header = pool_columns();
    header.extend([PREDICTED_COLUMN, RANK_COLUMN]);
    w.write_record(header).map_err(err)?;
    for r in results {
        let mut row = design_fields(r.design_id, &r.design);
        row.push(r.predicted.to_string());
        row.push(r.rank.to_string());
        w.write_record(row).map_err(err)?;
    }
    w.flush()
        .map_err(|e| Error::Input(format!("writing predictions: {e}")))
}

pub const PREDICTED_COLUMN: &str = "predicted_mah_g";
pub const RANK_COLUMN: &str = "rank";

/// Reads a predictions CSV back, in file order.
pub fn read_predictions<R: Read>(mut reader: R) -> Result<Vec<ScreeningResult>> {
    let mut text = Vec::new();
    reader
        .read_to_end(&mut text)
        .map_err(|e| Error::Input(format!("reading predictions: {e}")))?;
    let pool = Pool::read_csv(text.as_slice())?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_slice());
    let headers = rdr
        .headers()
        .map_err(|e| Error::Input(format!("reading predictions header: {e}")))?
        .clone();
    let index = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Input(format!("predictions file is missing column '{name}'")))
    };
    let (p_col, r_col) = (index(PREDICTED_COLUMN)?, index(RANK_COLUMN)?);
    let mut out = Vec::with_capacity(pool.len());
    for (row, (id, design)) in rdr.records().zip(pool.designs) {
        let row = row.map_err(|e| Error::Input(format!("malformed predictions CSV: {e}")))?;
        let bad = |what: &str| Error::Input(format!("predictions row for design {id}: {what}"));
        let predicted: f64 = row
            .get(p_col)
            .unwrap_or("")
            .parse()
            .map_err(|_| bad("bad prediction"))?;
        let rank: usize = row
            .get(r_col)
            .unwrap_or("")
            .parse()
            .map_err(|_| bad("bad rank"))?;
        if !predicted.is_finite() {
            return Err(bad("non-finite prediction"));
        }
        out.push(ScreeningResult {
            design_id: id,
            design,
            predicted,
            rank,
        });
    }
    Ok(out)
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<ScreeningResult>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_predictions(file).map_err(|e| match e {
        Error::Input(msg) => Error::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Scatter of predicted capacity against loading, one colour per
/// separator, with the shortlist window and threshold marked.
pub fn scatter_svg(results: &[ScreeningResult], config: &ShortlistConfig) -> String {
    let (w, h, pad) = (720.0, 480.0, 60.0);
    let xs = results.iter().map(|r| r.design.loading());
    let ys = results
        .iter()
        .map(|r| r.predicted)
        .chain([config.threshold]);
    let (x0, x1) = bounds(xs.chain([config.window.0, config.window.1]));
    let (y0, y1) = bounds(ys.filter(|v| v.is_finite()));
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r##"<rect x="{:.2}" y="{pad}" width="{:.2}" height="{:.2}" fill="#f2e6c9"/>"##,
        sx(config.window.0),
        sx(config.window.1) - sx(config.window.0),
        h - 2.0 * pad
    );
    for r in results {
        let colour = match r.design.separator() {
            Separator::Celgard => "#1f77b4",
            Separator::Qma => "#d62728",
        };
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="{colour}" fill-opacity="0.4"/>"#,
            sx(r.design.loading()),
            sy(r.predicted)
        );
    }
    if config.threshold.is_finite() {
        let y = sy(config.threshold);
        let _ = writeln!(
            s,
            r#"<line x1="{pad}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black" stroke-dasharray="4 3"/>"#,
            w - pad
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{pad}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        h - pad,
        w - pad,
        h - pad
    );
    let _ = writeln!(
        s,
        r#"<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{:.2}" stroke="black"/>"#,
        h - pad
    );
    for t in 0..=4 {
        let xv = x0 + (x1 - x0) * t as f64 / 4.0;
        let yv = y0 + (y1 - y0) * t as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{xv:.1}</text>"#,
            sx(xv),
            h - pad + 16.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{yv:.0}</text>"#,
            pad - 6.0,
            sy(yv) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">LiI wt%</text>"#,
        w / 2.0,
        h - 18.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 18 {:.2})">predicted capacity (mAh/g)</text>"#,
        h / 2.0,
        h / 2.0
    );
    s.push_str("</svg>\n");
    s
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        return (lo - 1.0, hi + 1.0);
    }
    let m = 0.05 * (hi - lo);
    (lo - m, hi + m)
}
