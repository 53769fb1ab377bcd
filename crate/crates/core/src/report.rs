//! Run configuration and byte-stable CSV/JSON rendering.
//!
//! Every command builds a [`Table`]: named columns, typed cells with a fixed
//! number format per column, and a few summary notes. CSV output is a header
//! row, the data rows and trailing `# ` comment lines for the notes; JSON is a
//! single object `{"meta": {...}, "rows": [...]}` with the notes under
//! `meta.notes`.
//!
//! Column formats:
//! - thresholds and intervals: 3 decimals
//! - variances in verification output: 10 significant digits
//! - relative errors: 3 significant digits
//! - lambda in designs: 2 decimals
//! - inputs echoed back (targets, grid values): shortest round-trip form

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::{json, Map, Value};

use crate::design::{self, Design};
use crate::error::{Error, Result};
use crate::matrix_oracle::VerificationReport;
use crate::sizing::SizingResult;
use crate::threshold_fit::{
    self, CubicFit, RatioDataset, ThresholdSpec, ThresholdTable, DEFAULT_MIN_RATIO, DEFAULT_TARGETS,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Number of evenly spaced fitted points in curve output.
pub const CURVE_RESOLUTION: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn as_str(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!(
                "unknown output format '{other}' (expected csv or json)"
            ))),
        }
    }
}

/// Settings shared by every command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub design_points: usize,
    pub maximin_restarts: usize,
    pub targets: Vec<f64>,
    pub output_format: OutputFormat,
    /// `None` writes to standard output.
    pub output_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            design_points: design::DEFAULT_POINTS,
            maximin_restarts: design::DEFAULT_RESTARTS,
            targets: DEFAULT_TARGETS.to_vec(),
            output_format: OutputFormat::Csv,
            output_path: None,
        }
    }
}

pub fn parse_targets(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("invalid target '{}'", t.trim())))
        })
        .collect()
}

impl RunConfig {
    /// Defaults overlaid with a flat `key = value` file. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "{}:{}: expected key = value",
                    path.display(),
                    i + 1
                ))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), i + 1)))?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("invalid value '{value}' for {key}")))
        }
        match key {
            "seed" => self.seed = num(key, value)?,
            "points" | "design_points" => self.design_points = num(key, value)?,
            "restarts" | "maximin_restarts" => self.maximin_restarts = num(key, value)?,
            "targets" => self.targets = parse_targets(value)?,
            "format" | "output_format" => self.output_format = value.parse()?,
            "output" | "output_path" => {
                self.output_path = match value {
                    "" | "-" => None,
                    p => Some(PathBuf::from(p)),
                }
            }
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.design_points < design::MIN_POINTS {
            return Err(Error::Config(format!(
                "points must be at least {}, got {}",
                design::MIN_POINTS,
                self.design_points
            )));
        }
        if self.maximin_restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if self.targets.is_empty() {
            return Err(Error::Config("at least one target is required".into()));
        }
        for &t in &self.targets {
            if !(t > DEFAULT_MIN_RATIO && t < 1.0) {
                return Err(Error::Config(format!(
                    "target ratio must lie in ({DEFAULT_MIN_RATIO}, 1), got {t}"
                )));
            }
        }
        Ok(())
    }

    pub fn design(&self) -> Result<Design> {
        design::latin_hypercube(self.design_points, self.seed, self.maximin_restarts)
    }

    fn meta(&self, command: &str) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("command".into(), json!(command));
        m.insert("version".into(), json!(VERSION));
        m.insert("seed".into(), json!(self.seed));
        m.insert("points".into(), json!(self.design_points));
        m.insert("restarts".into(), json!(self.maximin_restarts));
        m.insert("targets".into(), json!(self.targets));
        m
    }
}

/// How a numeric cell is printed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NumFormat {
    /// Fixed number of decimals.
    Fixed(usize),
    /// Scientific with this many significant digits.
    Sig(usize),
    /// Shortest representation that round-trips.
    Shortest,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(u64),
    Num(f64, NumFormat),
    Bool(bool),
    Empty,
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

fn fixed(v: f64, d: usize) -> Cell {
    Cell::Num(v, NumFormat::Fixed(d))
}

fn sig(v: f64, d: usize) -> Cell {
    Cell::Num(v, NumFormat::Sig(d))
}

fn shortest(v: f64) -> Cell {
    Cell::Num(v, NumFormat::Shortest)
}

pub fn format_number(v: f64, fmt: NumFormat) -> String {
    if !v.is_finite() {
        return String::new();
    }
    let s = match fmt {
        NumFormat::Fixed(d) => format!("{v:.d$}"),
        NumFormat::Sig(d) => format!("{:.*e}", d.saturating_sub(1), v),
        NumFormat::Shortest => format!("{v}"),
    };
    // "-0.000" and friends
    match s.strip_prefix('-') {
        Some(rest) if s.parse::<f64>() == Ok(0.0) => rest.to_string(),
        _ => s,
    }
}

impl Cell {
    fn to_text(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(v) => v.to_string(),
            Cell::Num(v, f) => format_number(*v, *f),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Text(s) => json!(s),
            Cell::Int(v) => json!(v),
            // Round through the text form so JSON carries the same precision as CSV.
            Cell::Num(v, f) => format_number(*v, *f)
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map_or(Value::Null, Value::Number),
            Cell::Bool(b) => json!(b),
            Cell::Empty => Value::Null,
        }
    }
}

/// One command's output.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub meta: Map<String, Value>,
    pub notes: Vec<String>,
}

impl Table {
    fn new(meta: Map<String, Value>, columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
            meta,
            notes: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_text))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        let mut out = String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))?;
        for note in &self.notes {
            let _ = writeln!(out, "# {note}");
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, cell)| (c.to_string(), cell.to_json()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let mut meta = self.meta.clone();
        meta.insert("notes".into(), json!(self.notes));
        let doc = json!({ "meta": meta, "rows": rows });
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        Ok(s)
    }
}

/// Writes to `path`, or standard output when `None`.
pub fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    use std::io::Write;
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn design_meta(meta: &mut Map<String, Value>, design: &Design) {
    meta.insert("design_size".into(), json!(design.len()));
    meta.insert(
        "min_pairwise_distance".into(),
        json!(
            format_number(design.min_pairwise_distance(), NumFormat::Fixed(3))
                .parse::<f64>()
                .ok()
        ),
    );
    meta.insert(
        "centered_l2_discrepancy".into(),
        json!(
            format_number(design.centered_l2_discrepancy(), NumFormat::Sig(6))
                .parse::<f64>()
                .ok()
        ),
    );
}

fn metrics_note(design: &Design) -> String {
    format!(
        "metrics: points={} min_pairwise_distance={} centered_l2_discrepancy={}",
        design.len(),
        format_number(design.min_pairwise_distance(), NumFormat::Fixed(3)),
        format_number(design.centered_l2_discrepancy(), NumFormat::Sig(6)),
    )
}

/// Columns: index, n, lambda (2 decimals).
pub fn design_table(design: &Design, cfg: &RunConfig) -> Table {
    let mut meta = cfg.meta("design");
    design_meta(&mut meta, design);
    let mut t = Table::new(meta, vec!["index", "n", "lambda"]);
    for (i, p) in design.points().iter().enumerate() {
        t.push(vec![i.into(), p.n.into(), fixed(p.lambda, 2)]);
    }
    t.notes.push(metrics_note(design));
    t
}

/// Columns: spec, target, ci_lo, x, ci_hi (3 decimals), r2_adj (6 decimals),
/// rmse (4 significant digits), center (6 decimals), n_rows.
pub fn thresholds_table(table: &ThresholdTable, design: &Design, cfg: &RunConfig) -> Table {
    let mut meta = cfg.meta("thresholds");
    design_meta(&mut meta, design);
    meta.insert("min_ratio".into(), json!(DEFAULT_MIN_RATIO));
    let mut t = Table::new(
        meta,
        vec![
            "spec", "target", "ci_lo", "x", "ci_hi", "r2_adj", "rmse", "center", "n_rows",
        ],
    );
    for r in &table.rows {
        let fit = r.fit.as_ref();
        t.push(vec![
            r.spec.to_string().into(),
            shortest(r.target_ratio),
            fixed(r.ci_lo, 3),
            fixed(r.x_at_target, 3),
            fixed(r.ci_hi, 3),
            fit.map_or(Cell::Empty, |f| fixed(f.r2_adj, 6)),
            fit.map_or(Cell::Empty, |f| sig(f.rmse, 4)),
            fit.map_or(Cell::Empty, |f| fixed(f.center, 6)),
            fit.map_or(Cell::Empty, |f| f.n_rows.into()),
        ]);
    }
    t.notes.push(metrics_note(design));
    t
}

/// Columns: spec, n, lambda, sigma2, closed_form, gls, ols (10 significant
/// digits), rel_err_gls, rel_err_ols (3 significant digits), verdict,
/// discriminating.
pub fn verify_table(report: &VerificationReport, cfg: &RunConfig) -> Table {
    let mut meta = cfg.meta("verify");
    meta.insert(
        "tolerance".into(),
        json!(crate::matrix_oracle::MATCH_TOLERANCE),
    );
    meta.insert("passed".into(), json!(report.passed));
    meta.insert(
        "per_spec".into(),
        Value::Array(
            report
                .per_spec
                .iter()
                .map(|s| {
                    json!({
                        "spec": s.spec.to_string(),
                        "verdict": s.verdict.map_or("MIXED".to_string(), |v| v.to_string()),
                        "rows": s.rows,
                        "discriminating_rows": s.discriminating_rows,
                        "max_rel_err": format_number(s.max_rel_err, NumFormat::Sig(3)).parse::<f64>().ok(),
                    })
                })
                .collect(),
        ),
    );
    let mut t = Table::new(
        meta,
        vec![
            "spec",
            "n",
            "lambda",
            "sigma2",
            "closed_form",
            "gls",
            "ols",
            "rel_err_gls",
            "rel_err_ols",
            "verdict",
            "discriminating",
        ],
    );
    for r in &report.rows {
        t.push(vec![
            r.spec.to_string().into(),
            r.n.into(),
            shortest(r.lambda),
            shortest(r.sigma2),
            sig(r.closed_form, 10),
            sig(r.gls, 10),
            sig(r.ols, 10),
            sig(r.rel_err_gls, 3),
            sig(r.rel_err_ols, 3),
            r.verdict.to_string().into(),
            r.discriminating.into(),
        ]);
    }
    for s in &report.per_spec {
        t.notes.push(format!(
            "{}: verdict={} rows={} discriminating={} max_rel_err={}",
            s.spec,
            s.verdict.map_or("MIXED".to_string(), |v| v.to_string()),
            s.rows,
            s.discriminating_rows,
            format_number(s.max_rel_err, NumFormat::Sig(3)),
        ));
    }
    t.notes.push(format!("passed={}", report.passed));
    t
}

/// Observed ratios for `spec` over the whole design (not only the fitted
/// `>= 0.7` part) and the cubic fitted to the restricted part.
pub fn curve_data(design: &Design, spec: ThresholdSpec) -> Result<(RatioDataset, CubicFit)> {
    let all = threshold_fit::build_ratio_dataset(design, &spec.members())?;
    let fit = threshold_fit::fit_cubic(&threshold_fit::restrict(&all, DEFAULT_MIN_RATIO)?)?;
    Ok((all, fit))
}

/// Observed rows first (`source = observed`), then `resolution` fitted
/// points spanning the fit's x-domain (`source = fitted`).
///
/// Columns: source, spec, n, lambda, x, observed_ratio, fitted_ratio,
/// in_fit. Ratios carry 10 significant digits, x 6 decimals. The fitted
/// ratio is left empty for observed rows outside the fitted x-domain.
pub fn curve_table(
    spec: ThresholdSpec,
    data: &RatioDataset,
    fit: &CubicFit,
    resolution: usize,
    cfg: &RunConfig,
) -> Table {
    let mut meta = cfg.meta("curve");
    meta.insert("spec".into(), json!(spec.to_string()));
    meta.insert("min_ratio".into(), json!(DEFAULT_MIN_RATIO));
    meta.insert("resolution".into(), json!(resolution));
    meta.insert("coefficients".into(), json!(fit.coefficients));
    meta.insert("center".into(), json!(fit.center));
    meta.insert("r2_adj".into(), json!(fit.r2_adj));
    meta.insert("rmse".into(), json!(fit.rmse));
    meta.insert("x_domain".into(), json!([fit.x_domain.0, fit.x_domain.1]));
    let mut t = Table::new(
        meta,
        vec![
            "source",
            "spec",
            "n",
            "lambda",
            "x",
            "observed_ratio",
            "fitted_ratio",
            "in_fit",
        ],
    );
    let (lo, hi) = fit.x_domain;
    for r in data.rows() {
        let in_domain = r.x >= lo && r.x <= hi;
        t.push(vec![
            "observed".into(),
            r.spec.to_string().into(),
            r.n.into(),
            fixed(r.lambda, 2),
            fixed(r.x, 6),
            sig(r.ratio, 10),
            if in_domain {
                sig(fit.eval(r.x), 10)
            } else {
                Cell::Empty
            },
            (r.ratio >= DEFAULT_MIN_RATIO).into(),
        ]);
    }
    let label = spec.to_string();
    for i in 0..resolution {
        let x = if resolution == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (resolution - 1) as f64
        };
        t.push(vec![
            "fitted".into(),
            label.as_str().into(),
            Cell::Empty,
            Cell::Empty,
            fixed(x, 6),
            Cell::Empty,
            sig(fit.eval(x), 10),
            true.into(),
        ]);
    }
    t.notes.push(format!(
        "fit: b = [{}] center={} r2_adj={} rmse={} x_domain=[{}, {}]",
        fit.coefficients
            .iter()
            .map(|b| format_number(*b, NumFormat::Sig(6)))
            .collect::<Vec<_>>()
            .join(", "),
        format_number(fit.center, NumFormat::Fixed(6)),
        format_number(fit.r2_adj, NumFormat::Fixed(6)),
        format_number(fit.rmse, NumFormat::Sig(4)),
        format_number(lo, NumFormat::Fixed(6)),
        format_number(hi, NumFormat::Fixed(6)),
    ));
    t
}

/// One row. Columns: spec, target, snr, sigma2, lambda, threshold_source,
/// ci_lo, x, ci_hi (3 decimals), n_approx, n_exact.
pub fn size_table(result: &SizingResult, cfg: &RunConfig) -> Table {
    let mut meta = cfg.meta("size");
    let per_spec: Map<String, Value> = result
        .per_spec_exact
        .iter()
        .map(|(s, n)| (s.to_string(), json!(n)))
        .collect();
    meta.insert("per_spec_exact".into(), Value::Object(per_spec));
    let mut t = Table::new(
        meta,
        vec![
            "spec",
            "target",
            "snr",
            "sigma2",
            "lambda",
            "threshold_source",
            "ci_lo",
            "x",
            "ci_hi",
            "n_approx",
            "n_exact",
        ],
    );
    let th = result.threshold_used.as_ref();
    t.push(vec![
        result.spec.to_string().into(),
        shortest(result.target_ratio),
        shortest(result.snr),
        shortest(result.sigma2),
        shortest(result.lambda),
        result.threshold_source.into(),
        th.map_or(Cell::Empty, |r| fixed(r.ci_lo, 3)),
        th.map_or(Cell::Empty, |r| fixed(r.x_at_target, 3)),
        th.map_or(Cell::Empty, |r| fixed(r.ci_hi, 3)),
        result.n_approx.map_or(Cell::Empty, Cell::from),
        result.n_exact.into(),
    ]);
    for (s, n) in &result.per_spec_exact {
        t.notes.push(format!("n_exact {s} = {n}"));
    }
    t.notes.extend(result.notes.iter().cloned());
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formats() {
        assert_eq!(format_number(1.1685, NumFormat::Fixed(3)), "1.169");
        assert_eq!(format_number(-0.0001, NumFormat::Fixed(3)), "0.000");
        assert_eq!(
            format_number(0.123456789012, NumFormat::Sig(10)),
            "1.234567890e-1"
        );
        assert_eq!(format_number(16.0, NumFormat::Shortest), "16");
        assert_eq!(format_number(0.9, NumFormat::Shortest), "0.9");
        assert_eq!(format_number(f64::NAN, NumFormat::Fixed(3)), "");
    }

    #[test]
    fn config_file_overrides_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(
            &path,
            "# comment\nseed = 7\n\npoints=120\ntargets = 0.8, 0.9\nformat = json\n",
        )
        .unwrap();
        let cfg = RunConfig::from_file(&path).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.design_points, 120);
        assert_eq!(cfg.maximin_restarts, design::DEFAULT_RESTARTS);
        assert_eq!(cfg.targets, vec![0.8, 0.9]);
        assert_eq!(cfg.output_format, OutputFormat::Json);
        cfg.validate().unwrap();

        std::fs::write(&path, "colour = blue\n").unwrap();
        assert!(RunConfig::from_file(&path).is_err());
        std::fs::write(&path, "seed\n").unwrap();
        assert!(RunConfig::from_file(&path).is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = RunConfig::default();
        cfg.validate().unwrap();
        cfg.targets = vec![0.65];
        assert!(cfg.validate().is_err());
        cfg = RunConfig {
            design_points: 5,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn csv_and_json_shapes() {
        let mut t = Table::new(RunConfig::default().meta("demo"), vec!["a", "b", "c"]);
        t.push(vec!["x,y".into(), fixed(1.0, 3), Cell::Empty]);
        t.notes.push("done".into());
        assert_eq!(t.to_csv().unwrap(), "a,b,c\n\"x,y\",1.000,\n# done\n");
        let v: Value = serde_json::from_str(&t.to_json().unwrap()).unwrap();
        assert_eq!(v["rows"][0]["a"], "x,y");
        assert_eq!(v["rows"][0]["b"], 1.0);
        assert!(v["rows"][0]["c"].is_null());
        assert_eq!(v["meta"]["seed"], 42);
        assert_eq!(v["meta"]["notes"][0], "done");
    }
}
