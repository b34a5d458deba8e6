//! CSV/JSON writers for experiment reports, plus minimal SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use pwband::{IntervalEstimate, NormBound, UnionOfIntervals};
use serde::Serialize;

use crate::experiments::coverage::CoverageReport;
use crate::experiments::diameter::DiameterReport;
use crate::experiments::norm_bounds::NormBoundReport;
use crate::experiments::single_band::SingleBand;
use crate::experiments::voting_bands::VotingReport;
use crate::Result;

fn write_csv<S: Serialize>(path: &Path, rows: impl IntoIterator<Item = S>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// `lo:hi;lo:hi` rendering of a union.
pub fn format_segments(s: &UnionOfIntervals<f64>) -> String {
    s.segments()
        .iter()
        .map(|(lo, hi)| format!("{lo}:{hi}"))
        .collect::<Vec<_>>()
        .join(";")
}

#[derive(Serialize)]
struct BandRow {
    x: f64,
    lo: Option<f64>,
    hi: Option<f64>,
    empty_flag: u8,
}

fn band_rows(intervals: &[IntervalEstimate<f64>]) -> impl Iterator<Item = BandRow> + '_ {
    intervals.iter().map(|iv| BandRow {
        x: iv.query[0],
        lo: iv.lo(),
        hi: iv.hi(),
        empty_flag: u8::from(iv.is_empty()),
    })
}

#[derive(Serialize)]
struct NormRow<'a> {
    n: usize,
    n0: usize,
    trial: usize,
    method: &'a str,
    tau: f64,
    xi_star: f64,
    alpha: f64,
    beta: f64,
    u: Option<f64>,
    norm_sq: f64,
    excess: f64,
}

fn norm_row<'a>(b: &'a NormBound<f64>, n: usize, n0: usize, trial: usize, norm_sq: f64) -> NormRow<'a> {
    NormRow {
        n,
        n0,
        trial,
        method: b.method.as_str(),
        tau: b.tau,
        xi_star: b.xi_star,
        alpha: b.alpha,
        beta: b.beta,
        u: b.u_draw,
        norm_sq,
        excess: b.tau - norm_sq,
    }
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    n: usize,
    n0: usize,
    method: &'a str,
    median: f64,
    q1: f64,
    q3: f64,
    whisker_lo: f64,
    whisker_hi: f64,
    mean: f64,
    validity: f64,
}

pub fn write_norm_bounds(dir: &Path, r: &NormBoundReport, plot: bool) -> Result<Vec<PathBuf>> {
    let trials = dir.join("norm_bounds.csv");
    write_csv(
        &trials,
        r.trials
            .iter()
            .flat_map(|t| t.bounds().map(|b| norm_row(b, t.n, t.n0, t.trial, t.norm_sq))),
    )?;
    let summary = dir.join("norm_bounds_summary.csv");
    write_csv(
        &summary,
        r.summaries.iter().map(|s| SummaryRow {
            n: s.n,
            n0: s.n0,
            method: s.method,
            median: s.excess.median,
            q1: s.excess.q1,
            q3: s.excess.q3,
            whisker_lo: s.excess.whisker_lo,
            whisker_hi: s.excess.whisker_hi,
            mean: s.excess.mean,
            validity: s.validity,
        }),
    )?;
    let mut out = vec![trials, summary];
    if plot {
        let boxes: Vec<(String, crate::stats::BoxSummary)> = r
            .summaries
            .iter()
            .map(|s| (format!("n={} {}", s.n, s.method), s.excess))
            .collect();
        let p = dir.join("norm_bounds.svg");
        fs::write(&p, svg_boxes("tau - ||f||^2", &boxes))?;
        out.push(p);
    }
    Ok(out)
}

#[derive(Serialize)]
struct AggregateRow<'a> {
    x: f64,
    scheme: &'a str,
    u_or_perm_id: usize,
    segments: String,
    total_length: f64,
}

#[derive(Serialize)]
struct SubBandRow {
    member: usize,
    x: f64,
    lo: Option<f64>,
    hi: Option<f64>,
    empty_flag: u8,
}

pub fn write_voting(dir: &Path, r: &VotingReport, plot: bool) -> Result<Vec<PathBuf>> {
    let agg = dir.join("voting_bands.csv");
    write_csv(
        &agg,
        r.aggregates.iter().map(|a| AggregateRow {
            x: a.x,
            scheme: a.scheme.as_str(),
            u_or_perm_id: a.draw,
            segments: format_segments(&a.set),
            total_length: pwband::voting::total_length(&a.set),
        }),
    )?;
    let members = dir.join("member_bands.csv");
    write_csv(
        &members,
        r.bands.iter().enumerate().flat_map(|(j, b)| {
            band_rows(&b.intervals).map(move |row| SubBandRow {
                member: j,
                x: row.x,
                lo: row.lo,
                hi: row.hi,
                empty_flag: row.empty_flag,
            })
        }),
    )?;
    let summary = dir.join("voting_summary.csv");
    write_csv(&summary, r.summaries.iter())?;
    let mut out = vec![agg, members, summary];
    if plot {
        let truth: Vec<(f64, f64)> = r.grid.iter().map(|&x| (x, r.world.truth_at(x))).collect();
        let hull = |scheme| -> Vec<(f64, f64, f64)> {
            r.aggregates
                .iter()
                .filter(|a| a.scheme == scheme && a.draw == 0)
                .filter_map(|a| a.set.hull().map(|(lo, hi)| (a.x, lo, hi)))
                .collect()
        };
        let p = dir.join("voting_bands.svg");
        fs::write(
            &p,
            svg_bands(
                &truth,
                &[
                    ("majority", hull(crate::experiments::voting_bands::Scheme::Majority)),
                    (
                        "random ordering",
                        hull(crate::experiments::voting_bands::Scheme::RandomOrdering),
                    ),
                ],
            ),
        )?;
        out.push(p);
    }
    Ok(out)
}

pub fn write_diameter(dir: &Path, r: &DiameterReport) -> Result<Vec<PathBuf>> {
    let table = dir.join("diameter_table.csv");
    write_csv(&table, r.rows.iter())?;

    #[derive(Serialize)]
    struct TrialRow {
        n: usize,
        n0: usize,
        trial: usize,
        x0: f64,
        st_mean: f64,
        ro: f64,
        rt_half: f64,
        rt_full: f64,
        ro_covers: bool,
        rt_half_covers: bool,
        rt_full_covers: bool,
    }
    let trials = dir.join("diameter_trials.csv");
    write_csv(
        &trials,
        r.trials.iter().map(|t| TrialRow {
            n: t.n,
            n0: t.n0,
            trial: t.trial,
            x0: t.x0,
            st_mean: crate::stats::mean(&t.single),
            ro: t.ordering,
            rt_half: t.threshold_half,
            rt_full: t.threshold_full,
            ro_covers: t.covered[0],
            rt_half_covers: t.covered[1],
            rt_full_covers: t.covered[2],
        }),
    )?;
    Ok(vec![table, trials])
}

pub fn write_coverage(dir: &Path, r: &CoverageReport) -> Result<Vec<PathBuf>> {
    let report = dir.join("coverage.json");
    write_json(&report, r)?;
    let trials = dir.join("coverage_trials.csv");
    write_csv(&trials, r.per_trial.iter())?;
    Ok(vec![report, trials])
}

pub fn write_single_band(dir: &Path, r: &SingleBand, plot: bool) -> Result<Vec<PathBuf>> {
    let dataset = dir.join("dataset.json");
    write_json(&dataset, &r.world.dataset.to_record(r.seed))?;
    let ellipsoid = dir.join("ellipsoid.json");
    write_json(&ellipsoid, &r.band.ellipsoid.to_record())?;
    let bound = dir.join("norm_bound.csv");
    let n = r.world.dataset.samples.len();
    write_csv(
        &bound,
        [norm_row(&r.band.bound, n, r.band.ellipsoid.dim(), 0, r.world.norm_sq())],
    )?;
    let band = dir.join("band.csv");
    write_csv(&band, band_rows(&r.band.intervals))?;
    let mut out = vec![dataset, ellipsoid, bound, band];
    if plot {
        let truth: Vec<(f64, f64)> = r.grid.iter().map(|&x| (x, r.world.truth_at(x))).collect();
        let env: Vec<(f64, f64, f64)> = r
            .band
            .intervals
            .iter()
            .filter_map(|iv| iv.bounds.map(|(lo, hi)| (iv.query[0], lo, hi)))
            .collect();
        let p = dir.join("band.svg");
        fs::write(&p, svg_bands(&truth, &[("band", env)]))?;
        out.push(p);
    }
    Ok(out)
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 40.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let span = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it
                .filter(|v| v.is_finite())
                .fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(v), b.max(v)));
            if lo > hi {
                (0.0, 1.0)
            } else if lo == hi {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        Self {
            x: span(&mut xs.clone()),
            y: span(&mut ys.clone()),
        }
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * PAD)
    }
}

fn polyline(svg: &mut String, f: &Frame, pts: impl Iterator<Item = (f64, f64)>, color: &str, dash: bool) {
    let d: Vec<String> = pts.map(|(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
    let _ = writeln!(
        svg,
        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{} points="{}"/>"#,
        if dash { r#" stroke-dasharray="4 3""# } else { "" },
        d.join(" ")
    );
}

fn svg_open(f: &Frame) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r##"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="#888"/>"##,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = writeln!(
        s,
        r#"<text x="{PAD}" y="{}" font-size="10">{:.3}</text><text x="{PAD}" y="{}" font-size="10">{:.3}</text>"#,
        PAD - 4.0,
        f.y.1,
        H - PAD + 12.0,
        f.y.0
    );
    s
}

/// Truth (black) with lower/upper envelopes of each named band.
/// `(label, [(x, lo, hi)])` per band.
pub type NamedBand<'a> = (&'a str, Vec<(f64, f64, f64)>);

pub fn svg_bands(truth: &[(f64, f64)], bands: &[NamedBand]) -> String {
    let xs = truth.iter().map(|p| p.0);
    let ys = truth.iter().map(|p| p.1).chain(
        bands
            .iter()
            .flat_map(|(_, b)| b.iter().flat_map(|&(_, lo, hi)| [lo, hi])),
    );
    let f = Frame::new(xs, ys.collect::<Vec<_>>().into_iter());
    let mut s = svg_open(&f);
    for (i, (name, b)) in bands.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        polyline(&mut s, &f, b.iter().map(|&(x, lo, _)| (x, lo)), c, false);
        polyline(&mut s, &f, b.iter().map(|&(x, _, hi)| (x, hi)), c, false);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" fill="{c}">{name}</text>"#,
            W - PAD - 110.0,
            PAD + 14.0 * (i + 1) as f64
        );
    }
    polyline(&mut s, &f, truth.iter().copied(), "black", true);
    s.push_str("</svg>\n");
    s
}

/// Vertical box plots, one per labelled summary.
pub fn svg_boxes(title: &str, boxes: &[(String, crate::stats::BoxSummary)]) -> String {
    let ys = boxes.iter().flat_map(|(_, b)| [b.whisker_lo, b.whisker_hi, 0.0]);
    let xs = [0.0, boxes.len() as f64].into_iter();
    let f = Frame::new(xs, ys.collect::<Vec<_>>().into_iter());
    let mut s = svg_open(&f);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" font-size="12">{title}</text>"#,
        W / 2.0 - 40.0
    );
    let half = 0.3 * (W - 2.0 * PAD) / boxes.len().max(1) as f64;
    for (i, (label, b)) in boxes.iter().enumerate() {
        let cx = f.px(i as f64 + 0.5);
        let c = COLORS[i % COLORS.len()];
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="{c}"/>"#,
            cx - half,
            f.py(b.q3),
            2.0 * half,
            (f.py(b.q1) - f.py(b.q3)).max(0.5)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" x2="{:.2}" y1="{my:.2}" y2="{my:.2}" stroke="{c}" stroke-width="2"/>"#,
            cx - half,
            cx + half,
            my = f.py(b.median)
        );
        for (a, z) in [(b.q3, b.whisker_hi), (b.q1, b.whisker_lo)] {
            let _ = writeln!(
                s,
                r#"<line x1="{cx:.2}" x2="{cx:.2}" y1="{:.2}" y2="{:.2}" stroke="{c}"/>"#,
                f.py(a),
                f.py(z)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" font-size="9" text-anchor="middle">{label}</text>"#,
            cx,
            H - PAD + 24.0
        );
    }
    s.push_str("</svg>\n");
    s
}
