//! Rank-correlation analysis of capacity against composition and loading,
//! and five-number summaries of high-capacity designs.

use std::fmt;
use std::io::Write;

use crate::chem::{constituent_names, CONSTITUENT_COUNT};
use crate::error::{Error, Result};
use crate::formulation::FormulationDesign;

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn has_ties(v: &[f64]) -> bool {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s.windows(2).any(|w| w[0] == w[1])
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's ρ. `Ok(None)` when either input is constant.
///
/// Without ties this is 1 − 6Σd²/(n(n²−1)), computed in that form so the
/// result is exact; with ties it is the Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::Input(format!(
            "spearman on {} vs {} values",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::Input(format!(
            "spearman needs at least 3 values, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::Input("spearman input contains NaN".into()));
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    if has_ties(x) || has_ties(y) {
        return Ok(pearson(&rx, &ry));
    }
    let n = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(Some(1.0 - 6.0 * d2 / (n * (n * n - 1.0))))
}

/// A loading range in LiI wt%. The upper end is inclusive; the lower end
/// is inclusive unless `lo_open`.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadingWindow {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
}

impl LoadingWindow {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_open: false,
        }
    }

    pub fn above(lo: f64) -> Self {
        Self {
            lo,
            hi: f64::INFINITY,
            lo_open: true,
        }
    }

    pub fn contains(&self, loading: f64) -> bool {
        let lower = if self.lo_open {
            loading > self.lo
        } else {
            loading >= self.lo
        };
        lower && loading <= self.hi
    }
}

impl fmt::Display for LoadingWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lo_open { '(' } else { '[' };
        if self.hi.is_infinite() {
            write!(f, "{open}{},inf)", self.lo)
        } else {
            write!(f, "{open}{},{}]", self.lo, self.hi)
        }
    }
}

/// How rows are grouped for the per-constituent coefficients.
#[derive(Clone, Debug, PartialEq)]
pub enum Grouping {
    /// One group per distinct loading value.
    PerLoading,
    /// Explicit windows; every row must fall in at least one.
    Windows(Vec<LoadingWindow>),
}

/// Windows for ρ(loading, capacity): 40–46 wt% and above 46 wt%.
pub fn default_loading_windows() -> Vec<LoadingWindow> {
    vec![
        LoadingWindow::closed(40.0, 46.0),
        LoadingWindow::above(46.0),
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct BinScc {
    pub label: String,
    pub n: usize,
    /// Registry order; `None` marks an insufficient or constant group.
    pub rho: [Option<f64>; CONSTITUENT_COUNT],
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowScc {
    pub label: String,
    pub n: usize,
    pub rho: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SccReport {
    pub bins: Vec<BinScc>,
    /// ρ(loading, capacity) per window.
    pub loading: Vec<WindowScc>,
}

impl SccReport {
    pub fn bin(&self, label: &str) -> Option<&BinScc> {
        self.bins.iter().find(|b| b.label == label)
    }
}

fn rho_or_insufficient(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 3 {
        return None;
    }
    spearman(x, y).ok().flatten()
}

pub fn scc_report(
    rows: &[(FormulationDesign, f64)],
    grouping: &Grouping,
    loading_windows: &[LoadingWindow],
) -> Result<SccReport> {
    if rows.is_empty() {
        return Err(Error::Input("SCC report needs at least one row".into()));
    }
    if rows.iter().any(|(_, c)| !c.is_finite()) {
        return Err(Error::Input(
            "SCC report rows contain non-finite capacity".into(),
        ));
    }
    let groups: Vec<(String, Vec<usize>)> = match grouping {
        Grouping::PerLoading => {
            let mut values: Vec<f64> = rows.iter().map(|(d, _)| d.loading()).collect();
            values.sort_by(f64::total_cmp);
            values.dedup();
            values
                .into_iter()
                .map(|l| {
                    let idx = (0..rows.len())
                        .filter(|&i| rows[i].0.loading() == l)
                        .collect();
                    (l.to_string(), idx)
                })
                .collect()
        }
        Grouping::Windows(ws) => {
            if let Some((d, _)) = rows
                .iter()
                .find(|(d, _)| !ws.iter().any(|w| w.contains(d.loading())))
            {
                return Err(Error::Config(format!(
                    "loading {} wt% is not covered by any SCC bin",
                    d.loading()
                )));
            }
            ws.iter()
                .map(|w| {
                    let idx = (0..rows.len())
                        .filter(|&i| w.contains(rows[i].0.loading()))
                        .collect();
                    (w.to_string(), idx)
                })
                .collect()
        }
    };
    let bins = groups
        .into_iter()
        .map(|(label, idx)| {
            let cap: Vec<f64> = idx.iter().map(|&i| rows[i].1).collect();
            let rho = std::array::from_fn(|k| {
                let x: Vec<f64> = idx.iter().map(|&i| rows[i].0.mol()[k]).collect();
                rho_or_insufficient(&x, &cap)
            });
            BinScc {
                label,
                n: idx.len(),
                rho,
            }
        })
        .collect();
    let loading = loading_windows
        .iter()
        .map(|w| {
            let (x, y): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|(d, _)| w.contains(d.loading()))
                .map(|(d, c)| (d.loading(), *c))
                .unzip();
            WindowScc {
                label: w.to_string(),
                n: x.len(),
                rho: rho_or_insufficient(&x, &y),
            }
        })
        .collect();
    Ok(SccReport { bins, loading })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

/// CSV: loading_bin, constituent, rho, n. Loading-window rows use the
/// constituent name `loading`; insufficient coefficients are written `NA`.
pub fn write_scc_csv<W: Write>(out: W, report: &SccReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Input(format!("writing SCC report: {e}"));
    w.write_record(["loading_bin", "constituent", "rho", "n"])
        .map_err(err)?;
    let names = constituent_names();
    for b in &report.bins {
        for (name, rho) in names.iter().zip(b.rho) {
            w.write_record([b.label.as_str(), name, &fmt_opt(rho), &b.n.to_string()])
                .map_err(err)?;
        }
    }
    for l in &report.loading {
        w.write_record([
            l.label.as_str(),
            "loading",
            &fmt_opt(l.rho),
            &l.n.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush()
        .map_err(|e| Error::Input(format!("writing SCC report: {e}")))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile by linear interpolation between closest ranks, h = (n−1)p.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl FiveNumber {
    /// `None` for an empty column.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        Some(Self {
            min: s[0],
            q1: quantile(&s, 0.25),
            median: quantile(&s, 0.5),
            q3: quantile(&s, 0.75),
            max: s[s.len() - 1],
        })
    }
}

/// Minimum filtered rows for a summary.
pub const QUARTILE_MIN_ROWS: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct QuartileSummary {
    pub capacity_floor: f64,
    /// Rows at or above the floor.
    pub n: usize,
    /// Per constituent, registry order; `None` when fewer than
    /// [`QUARTILE_MIN_ROWS`] rows pass the floor.
    pub columns: Option<[FiveNumber; CONSTITUENT_COUNT]>,
}

impl QuartileSummary {
    pub fn is_insufficient(&self) -> bool {
        self.columns.is_none()
    }
}

pub fn quartile_summary(
    rows: &[(FormulationDesign, f64)],
    capacity_floor: f64,
) -> Result<QuartileSummary> {
    if rows.is_empty() {
        return Err(Error::Input(
            "quartile summary needs at least one row".into(),
        ));
    }
    if capacity_floor.is_nan() {
        return Err(Error::Config("capacity floor is NaN".into()));
    }
    let kept: Vec<&FormulationDesign> = rows
        .iter()
        .filter(|(_, c)| *c >= capacity_floor)
        .map(|(d, _)| d)
        .collect();
    let columns = (kept.len() >= QUARTILE_MIN_ROWS).then(|| {
        std::array::from_fn(|k| {
            let col: Vec<f64> = kept.iter().map(|d| d.mol()[k]).collect();
            FiveNumber::of(&col).expect("non-empty column")
        })
    });
    Ok(QuartileSummary {
        capacity_floor,
        n: kept.len(),
        columns,
    })
}

/// CSV: constituent, min, q1, median, q3, max, n, capacity_floor. An
/// insufficient summary writes `NA` for the five numbers.
pub fn write_quartile_csv<W: Write>(out: W, summary: &QuartileSummary) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Input(format!("writing quartile summary: {e}"));
    w.write_record([
        "constituent",
        "min",
        "q1",
        "median",
        "q3",
        "max",
        "n",
        "capacity_floor",
    ])
    .map_err(err)?;
    for (k, name) in constituent_names().iter().enumerate() {
        let five: Vec<String> = match &summary.columns {
            Some(c) => {
                let f = c[k];
                [f.min, f.q1, f.median, f.q3, f.max]
                    .iter()
                    .map(f64::to_string)
                    .collect()
            }
            None => vec!["NA".to_string(); 5],
        };
        let mut row = vec![name.to_string()];
        row.extend(five);
        row.push(summary.n.to_string());
        row.push(summary.capacity_floor.to_string());
        w.write_record(row).map_err(err)?;
    }
    w.flush()
        .map_err(|e| Error::Input(format!("writing quartile summary: {e}")))
}
