//! Summary statistics, residue-pattern tables, correlations and the report
//! writer for a measured dataset.

use std::cmp::Reverse;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::forge::CompositeRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct StatsSummary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation; 0 for a single value (see `std_defined`).
    pub std: f64,
    pub std_defined: bool,
    pub q1: f64,
    pub q3: f64,
    pub min: u64,
    pub max: u64,
    pub zero_fraction: f64,
}

/// Linear interpolation between order statistics ("type 7").
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(deltas: &[u64]) -> Result<StatsSummary> {
    if deltas.is_empty() {
        return Err(Error::EmptySample);
    }
    let count = deltas.len();
    let mut sorted: Vec<f64> = deltas.iter().map(|&d| d as f64).collect();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / count as f64;
    let (std, std_defined) = if count > 1 {
        let ss: f64 = sorted.iter().map(|x| (x - mean).powi(2)).sum();
        ((ss / (count - 1) as f64).sqrt(), true)
    } else {
        (0.0, false)
    };
    Ok(StatsSummary {
        count,
        mean,
        median: quantile(&sorted, 0.5),
        std,
        std_defined,
        q1: quantile(&sorted, 0.25),
        q3: quantile(&sorted, 0.75),
        min: *deltas.iter().min().expect("non-empty"),
        max: *deltas.iter().max().expect("non-empty"),
        zero_fraction: deltas.iter().filter(|&&d| d == 0).count() as f64 / count as f64,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternEntry {
    pub pattern: [u8; 3],
    pub count: usize,
    pub share: f64,
}

/// Ordered residue triples, most frequent first; ties in lexicographic order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PatternTable {
    pub entries: Vec<PatternEntry>,
    pub total: usize,
}

impl PatternTable {
    pub fn top(&self, n: usize) -> &[PatternEntry] {
        &self.entries[..n.min(self.entries.len())]
    }
}

pub fn pattern_table(records: &[CompositeRecord]) -> PatternTable {
    let mut counts: BTreeMap<[u8; 3], usize> = BTreeMap::new();
    for r in records {
        *counts.entry(r.residues_mod35).or_default() += 1;
    }
    let total = records.len();
    let mut entries: Vec<PatternEntry> = counts
        .into_iter()
        .map(|(pattern, count)| PatternEntry {
            pattern,
            count,
            share: count as f64 / total as f64,
        })
        .collect();
    // BTreeMap order is lexicographic, and the sort is stable.
    entries.sort_by_key(|e| Reverse(e.count));
    PatternTable { entries, total }
}

/// `(r mod 5, r mod 7)`.
pub fn residue_decomposition(r: u64) -> Result<(u8, u8)> {
    if r >= 35 {
        return Err(Error::ResidueOutOfRange(r));
    }
    Ok(((r % 5) as u8, (r % 7) as u8))
}

/// Sample Pearson correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::UndefinedCorrelation("length mismatch"));
    }
    if xs.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant series"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Integer-aligned bins covering `[min, max]`, empty bins included.
pub fn histogram(deltas: &[u64], bin_width: u64) -> Vec<(u64, u64)> {
    let bin_width = bin_width.max(1);
    let (Some(&min), Some(&max)) = (deltas.iter().min(), deltas.iter().max()) else {
        return Vec::new();
    };
    let first = min / bin_width;
    let last = max / bin_width;
    let mut counts = vec![0u64; (last - first + 1) as usize];
    for &d in deltas {
        counts[(d / bin_width - first) as usize] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| ((first + i as u64) * bin_width, c))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub rho_k_delta: Option<f64>,
    pub rho_m_delta: Option<f64>,
    pub rho_bits_delta: Option<f64>,
    pub used: usize,
    /// Records without a usable collapse (gcd shortcut, pseudoprime sentinel
    /// or no measurement).
    pub excluded: usize,
}

fn usable_delta(r: &CompositeRecord) -> Option<u64> {
    r.lucas
        .as_ref()
        .filter(|m| !m.lucas_pseudoprime)
        .and_then(|m| m.delta)
}

pub fn correlations(records: &[CompositeRecord]) -> CorrelationReport {
    let usable: Vec<(&CompositeRecord, f64)> = records
        .iter()
        .filter_map(|r| usable_delta(r).map(|d| (r, d as f64)))
        .collect();
    let ds: Vec<f64> = usable.iter().map(|(_, d)| *d).collect();
    let series = |f: &dyn Fn(&CompositeRecord) -> f64| -> Option<f64> {
        let xs: Vec<f64> = usable.iter().map(|(r, _)| f(r)).collect();
        pearson(&xs, &ds).ok()
    };
    CorrelationReport {
        rho_k_delta: series(&|r| r.k as f64),
        rho_m_delta: series(&|r| r.m as f64),
        rho_bits_delta: series(&|r| r.n_bits as f64),
        used: usable.len(),
        excluded: records.len() - usable.len(),
    }
}

/// Everything the `analyze` command prints.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub records: usize,
    pub mr_resistant: usize,
    pub lucas_failed: usize,
    pub lucas_passed: usize,
    pub stats: StatsSummary,
    pub correlations: CorrelationReport,
    pub patterns: PatternTable,
    pub k_range: (u64, u64),
    pub m_range: (u64, u64),
    pub bits_range: (u64, u64),
    pub top_k: Vec<(u64, usize)>,
    pub max_record: usize,
}

pub fn analyze(records: &[CompositeRecord]) -> Result<Analysis> {
    if let Some(index) = records.iter().position(|r| r.lucas.is_none()) {
        return Err(Error::MissingMeasurement { index });
    }
    let deltas: Vec<u64> = records.iter().filter_map(usable_delta).collect();
    let stats = summarize(&deltas)?;
    let range = |f: &dyn Fn(&CompositeRecord) -> u64| {
        let it = records.iter().map(f);
        (it.clone().min().unwrap_or(0), it.max().unwrap_or(0))
    };
    let mut k_counts: BTreeMap<u64, usize> = BTreeMap::new();
    for r in records {
        *k_counts.entry(r.k).or_default() += 1;
    }
    let mut top_k: Vec<(u64, usize)> = k_counts.into_iter().collect();
    top_k.sort_by_key(|&(_, c)| Reverse(c));
    top_k.truncate(5);
    let max_record = records
        .iter()
        .enumerate()
        .filter_map(|(i, r)| usable_delta(r).map(|d| (i, d)))
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .expect("non-empty deltas");
    Ok(Analysis {
        records: records.len(),
        mr_resistant: records.iter().filter(|r| r.is_mr_resistant()).count(),
        lucas_failed: records
            .iter()
            .filter(|r| r.lucas.as_ref().is_some_and(|m| m.failed_strong_lucas()))
            .count(),
        lucas_passed: records
            .iter()
            .filter(|r| r.lucas.as_ref().is_some_and(|m| m.strong_lucas_pass))
            .count(),
        stats,
        correlations: correlations(records),
        patterns: pattern_table(records),
        k_range: range(&|r| r.k),
        m_range: range(&|r| r.m),
        bits_range: range(&|r| r.n_bits),
        top_k,
        max_record,
    })
}

fn rho(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.3}"))
}

impl Analysis {
    /// Plain-text rendering used by the `analyze` command.
    pub fn render_text(&self, records: &[CompositeRecord]) -> String {
        let s = &self.stats;
        let mut out = String::new();
        let _ = writeln!(out, "records: {}", self.records);
        let _ = writeln!(out, "mr_resistant: {}", self.mr_resistant);
        let _ = writeln!(out, "strong_lucas_failed: {}", self.lucas_failed);
        let _ = writeln!(out, "strong_lucas_passed: {}", self.lucas_passed);
        let _ = writeln!(out, "delta_count: {}", s.count);
        let _ = writeln!(out, "mean {:.2}", s.mean);
        let _ = writeln!(out, "median {:.2}", s.median);
        let _ = writeln!(out, "std {:.2}", s.std);
        let _ = writeln!(out, "q1 {:.2}", s.q1);
        let _ = writeln!(out, "q3 {:.2}", s.q3);
        let _ = writeln!(out, "min {}", s.min);
        let _ = writeln!(out, "max {}", s.max);
        let _ = writeln!(out, "zero_fraction {:.4}", s.zero_fraction);
        let m = &records[self.max_record];
        let _ = writeln!(
            out,
            "max_collapse_record: n_bits {} u_residue_bits {}",
            m.n_bits,
            m.lucas.as_ref().and_then(|l| l.u_residue_bits).unwrap_or(0)
        );
        let c = &self.correlations;
        let _ = writeln!(out, "rho(k, delta) {}", rho(c.rho_k_delta));
        let _ = writeln!(out, "rho(M, delta) {}", rho(c.rho_m_delta));
        let _ = writeln!(out, "rho(n_bits, delta) {}", rho(c.rho_bits_delta));
        let _ = writeln!(out, "correlation_excluded {}", c.excluded);
        let _ = writeln!(out, "k_range [{}, {}]", self.k_range.0, self.k_range.1);
        let _ = writeln!(out, "M_range [{}, {}]", self.m_range.0, self.m_range.1);
        let _ = writeln!(out, "n_bits_range [{}, {}]", self.bits_range.0, self.bits_range.1);
        for e in self.patterns.top(6) {
            let _ = writeln!(
                out,
                "pattern ({}, {}, {}) {} ({:.1}%)",
                e.pattern[0],
                e.pattern[1],
                e.pattern[2],
                e.count,
                e.share * 100.0
            );
        }
        out
    }
}

fn write_file(dir: &Path, name: &str, body: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, body)?;
    written.push(path);
    Ok(())
}

fn svg_open(w: u32, h: u32, title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n",
        w / 2
    )
}

fn bar_chart(title: &str, labels: &[String], values: &[f64], y_label: &str) -> String {
    let (w, h) = (760u32, 420u32);
    let (left, right, top, bottom) = (60.0, 20.0, 30.0, 90.0);
    let plot_w = w as f64 - left - right;
    let plot_h = h as f64 - top - bottom;
    let vmax = values.iter().cloned().fold(0.0, f64::max).max(1e-12);
    let mut s = svg_open(w, h, title);
    let n = values.len().max(1) as f64;
    let slot = plot_w / n;
    for (i, (label, v)) in labels.iter().zip(values).enumerate() {
        let bh = v / vmax * plot_h;
        let x = left + i as f64 * slot + slot * 0.1;
        let y = top + plot_h - bh;
        let _ = writeln!(
            s,
            "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{:.1}\" height=\"{bh:.1}\" fill=\"#4477aa\"/>",
            slot * 0.8
        );
        let lx = x + slot * 0.4;
        let ly = top + plot_h + 12.0;
        let _ = writeln!(
            s,
            "<text x=\"{lx:.1}\" y=\"{ly:.1}\" text-anchor=\"end\" transform=\"rotate(-45 {lx:.1} {ly:.1})\">{label}</text>"
        );
    }
    let _ = writeln!(
        s,
        "<line x1=\"{left}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        top + plot_h,
        left + plot_w,
        top + plot_h
    );
    let _ = writeln!(
        s,
        "<line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{}\" stroke=\"black\"/>",
        top + plot_h
    );
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{vmax}</text>", left - 4.0, top + 4.0);
    let _ = writeln!(
        s,
        "<text x=\"14\" y=\"{}\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">{y_label}</text>",
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );
    s.push_str("</svg>\n");
    s
}

/// Axis name, `(x, delta)` points and the correlation shown in the caption.
type Panel<'a> = (&'a str, Vec<(f64, f64)>, Option<f64>);

fn scatter_panels(panels: &[Panel]) -> String {
    let (pw, ph) = (300.0, 260.0);
    let w = (pw * panels.len() as f64) as u32;
    let h = 320u32;
    let mut s = svg_open(w, h, "U-bit collapse against construction parameters");
    for (i, (name, pts, r)) in panels.iter().enumerate() {
        let ox = i as f64 * pw + 45.0;
        let oy = 40.0;
        let (iw, ih) = (pw - 65.0, ph - 40.0);
        let xmin = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let xmax = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        let ymax = pts.iter().map(|p| p.1).fold(0.0, f64::max).max(1.0);
        let xspan = if xmax > xmin { xmax - xmin } else { 1.0 };
        let _ = writeln!(
            s,
            "<rect x=\"{ox}\" y=\"{oy}\" width=\"{iw}\" height=\"{ih}\" fill=\"none\" stroke=\"black\"/>"
        );
        for (x, y) in pts {
            let cx = ox + (x - xmin) / xspan * iw;
            let cy = oy + ih - y / ymax * ih;
            let _ = writeln!(
                s,
                "<circle cx=\"{cx:.1}\" cy=\"{cy:.1}\" r=\"2.5\" fill=\"#cc6677\" fill-opacity=\"0.6\"/>"
            );
        }
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{name} (rho = {})</text>",
            ox + iw / 2.0,
            oy + ih + 28.0,
            rho(*r)
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{xmin}</text><text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{xmax}</text>",
            ox + 10.0,
            oy + ih + 14.0,
            ox + iw,
            oy + ih + 14.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{ymax}</text>",
            ox - 4.0,
            oy + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Residues seen at least `min_count` times in any position, most common
/// first.
fn frequent_residues(records: &[CompositeRecord], limit: usize) -> Vec<(u8, usize)> {
    let mut counts: BTreeMap<u8, usize> = BTreeMap::new();
    for r in records {
        for &x in &r.residues_mod35 {
            *counts.entry(x).or_default() += 1;
        }
    }
    let mut v: Vec<(u8, usize)> = counts.into_iter().collect();
    v.sort_by_key(|&(_, c)| Reverse(c));
    v.truncate(limit);
    v
}

/// Writes the markdown summary, the flat figure data and SVG renderings.
pub fn emit_report(records: &[CompositeRecord], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::EmptySample);
    }
    let a = analyze(records)?;
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let usable: Vec<(&CompositeRecord, u64)> = records
        .iter()
        .filter_map(|r| usable_delta(r).map(|d| (r, d)))
        .collect();
    let deltas: Vec<u64> = usable.iter().map(|(_, d)| *d).collect();

    let hist = histogram(&deltas, 1);
    let mut csv = String::from("delta,count\n");
    for (bin, count) in &hist {
        let _ = writeln!(csv, "{bin},{count}");
    }
    write_file(out_dir, "delta_hist.csv", &csv, &mut written)?;
    let labels: Vec<String> = hist.iter().map(|(b, _)| b.to_string()).collect();
    let values: Vec<f64> = hist.iter().map(|(_, c)| *c as f64).collect();
    write_file(
        out_dir,
        "delta_hist.svg",
        &bar_chart("Distribution of U-bit collapse (delta, bits)", &labels, &values, "composites"),
        &mut written,
    )?;

    let top = a.patterns.top(15);
    let mut csv = String::from("rank,r1,r2,r3,count,share\n");
    for (i, e) in top.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            i + 1,
            e.pattern[0],
            e.pattern[1],
            e.pattern[2],
            e.count,
            e.share
        );
    }
    write_file(out_dir, "patterns_top15.csv", &csv, &mut written)?;
    let labels: Vec<String> = top
        .iter()
        .map(|e| format!("({}, {}, {})", e.pattern[0], e.pattern[1], e.pattern[2]))
        .collect();
    let values: Vec<f64> = top.iter().map(|e| e.count as f64).collect();
    write_file(
        out_dir,
        "patterns_top15.svg",
        &bar_chart("Most common residue patterns mod 35", &labels, &values, "composites"),
        &mut written,
    )?;

    let scatter = |name: &str, f: &dyn Fn(&CompositeRecord) -> u64| -> (String, Vec<(f64, f64)>) {
        let mut csv = format!("{name},delta\n");
        let mut pts = Vec::with_capacity(usable.len());
        for (r, d) in &usable {
            let x = f(r);
            let _ = writeln!(csv, "{x},{d}");
            pts.push((x as f64, *d as f64));
        }
        (csv, pts)
    };
    let (csv_k, pts_k) = scatter("k", &|r| r.k);
    let (csv_m, pts_m) = scatter("M", &|r| r.m);
    let (csv_b, pts_b) = scatter("n_bits", &|r| r.n_bits);
    write_file(out_dir, "scatter_k.csv", &csv_k, &mut written)?;
    write_file(out_dir, "scatter_M.csv", &csv_m, &mut written)?;
    write_file(out_dir, "scatter_bits.csv", &csv_b, &mut written)?;
    let c = &a.correlations;
    write_file(
        out_dir,
        "scatter.svg",
        &scatter_panels(&[
            ("k", pts_k, c.rho_k_delta),
            ("M", pts_m, c.rho_m_delta),
            ("n_bits", pts_b, c.rho_bits_delta),
        ]),
        &mut written,
    )?;

    write_file(out_dir, "report.md", &render_markdown(records, &a), &mut written)?;
    Ok(written)
}

fn render_markdown(records: &[CompositeRecord], a: &Analysis) -> String {
    let s = &a.stats;
    let mut md = String::new();
    let _ = writeln!(md, "# U-bit collapse report\n");
    let _ = writeln!(md, "## Sample\n");
    let _ = writeln!(md, "- records: {}", a.records);
    let _ = writeln!(md, "- Miller-Rabin resistant: {}", a.mr_resistant);
    let _ = writeln!(md, "- failed the strong Lucas test: {}", a.lucas_failed);
    let _ = writeln!(md, "- passed the strong Lucas test: {}", a.lucas_passed);
    let _ = writeln!(
        md,
        "- with a collapse measurement: {} (excluded: {})\n",
        s.count,
        a.records - s.count
    );
    let _ = writeln!(md, "## Collapse statistics (bits)\n");
    let _ = writeln!(md, "| statistic | value |\n|---|---|");
    let _ = writeln!(md, "| mean | {:.2} |", s.mean);
    let _ = writeln!(md, "| median | {:.2} |", s.median);
    let _ = writeln!(md, "| standard deviation | {:.2} |", s.std);
    let _ = writeln!(md, "| Q1 | {:.2} |", s.q1);
    let _ = writeln!(md, "| Q3 | {:.2} |", s.q3);
    let _ = writeln!(md, "| min | {} |", s.min);
    let _ = writeln!(md, "| max | {} |", s.max);
    let zeros = (s.zero_fraction * s.count as f64).round() as usize;
    let _ = writeln!(
        md,
        "| zero collapse | {} ({:.2}%) |\n",
        zeros,
        s.zero_fraction * 100.0
    );
    let m = &records[a.max_record];
    let u_bits = m.lucas.as_ref().and_then(|l| l.u_residue_bits).unwrap_or(0);
    let mean_bits = records.iter().map(|r| r.n_bits as f64).sum::<f64>() / records.len() as f64;
    let _ = writeln!(
        md,
        "Maximum collapse: max delta = {} bits ({}-bit composite, U_d reduced to {} bits). \
         A strong Lucas pseudoprime needs a collapse of about {:.0} bits (mean n_bits), \
         so the maximum is {:.2}% of the required reduction.\n",
        s.max,
        m.n_bits,
        u_bits,
        mean_bits,
        s.max as f64 / mean_bits * 100.0
    );
    let _ = writeln!(md, "## Residue patterns mod 35\n");
    let _ = writeln!(md, "| pattern | count | share |\n|---|---|---|");
    let top = a.patterns.top(15);
    for e in top {
        let _ = writeln!(
            md,
            "| ({}, {}, {}) | {} | {:.2}% |",
            e.pattern[0],
            e.pattern[1],
            e.pattern[2],
            e.count,
            e.share * 100.0
        );
    }
    let top_share: f64 = top.iter().map(|e| e.share).sum();
    let _ = writeln!(
        md,
        "\nTop {} patterns cover {:.2}% of {} records ({} distinct patterns).\n",
        top.len(),
        top_share * 100.0,
        a.patterns.total,
        a.patterns.entries.len()
    );
    let _ = writeln!(md, "Frequent residues and their (mod 5, mod 7) coordinates:\n");
    for (r, count) in frequent_residues(records, 6) {
        let (r5, r7) = residue_decomposition(r as u64).expect("residue below 35");
        let _ = writeln!(md, "- {r} = {r5} (mod 5), {r7} (mod 7): {count} occurrences");
    }
    let _ = writeln!(md, "\n## Construction parameters\n");
    let _ = writeln!(md, "- k range: [{}, {}]", a.k_range.0, a.k_range.1);
    let top_k: Vec<String> = a
        .top_k
        .iter()
        .map(|(k, c)| format!("k={k} ({c})"))
        .collect();
    let _ = writeln!(md, "- most common k: {}", top_k.join(", "));
    let _ = writeln!(md, "- M range: [{}, {}]", a.m_range.0, a.m_range.1);
    let _ = writeln!(md, "- composite bit sizes: {}-{}\n", a.bits_range.0, a.bits_range.1);
    let c = &a.correlations;
    let _ = writeln!(md, "## Correlations with delta\n");
    let _ = writeln!(md, "- rho(k, delta) = {}", rho(c.rho_k_delta));
    let _ = writeln!(md, "- rho(M, delta) = {}", rho(c.rho_m_delta));
    let _ = writeln!(md, "- rho(n_bits, delta) = {}", rho(c.rho_bits_delta));
    let _ = writeln!(md, "- records used: {}, excluded: {}", c.used, c.excluded);
    let _ = writeln!(md, "\n## Figures\n");
    let _ = writeln!(md, "- delta_hist.svg / delta_hist.csv");
    let _ = writeln!(md, "- patterns_top15.svg / patterns_top15.csv");
    let _ = writeln!(md, "- scatter.svg / scatter_k.csv, scatter_M.csv, scatter_bits.csv");
    md
}
