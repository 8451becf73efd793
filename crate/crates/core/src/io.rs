//! File formats and the scan pipeline behind the command-line tool.
//!
//! Input series are two-column CSV files, `date,price` or `date,log_price`,
//! with ISO-8601 dates. Prices are converted to natural log on load. Every
//! output is staged in a temporary file next to its destination and renamed
//! into place only once all outputs of a command have been produced.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

use crate::error::{Error, Result};
use crate::linreg::{McSummary, OlsFitter};
use crate::lppls::{bubble_scan, LpplsFit, LpplsFitter};
use crate::metrics::{
    fmt_cell, normalize_curve, LambdaEstimate, LambdaMode, RegularisedCurve, TimeIndex,
};
use crate::scan::{build_grid, endogenise_t1, Endogenised};
use crate::series::PriceSeries;
use crate::synthetic::SyntheticBubbleConfig;

/// What the value column of an input file holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueColumn {
    Price,
    LogPrice,
}

impl ValueColumn {
    fn from_header(name: &str) -> Option<Self> {
        match name {
            "price" => Some(Self::Price),
            "log_price" => Some(Self::LogPrice),
            _ => None,
        }
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Load a daily series. The result is indexed by trading day from 0.
pub fn load_csv(path: impl AsRef<Path>) -> Result<PriceSeries> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header = reader.headers()?.clone();
    let column = match (header.get(0), header.get(1), header.len()) {
        (Some("date"), Some(v), 2) => ValueColumn::from_header(v),
        _ => None,
    }
    .ok_or_else(|| {
        parse_err(
            path,
            1,
            format!(
                "expected header `date,price` or `date,log_price`, found `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        )
    })?;

    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 2 {
            return Err(parse_err(
                path,
                line,
                format!("expected 2 fields, found {}", record.len()),
            ));
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|e| parse_err(path, line, format!("bad date `{}`: {e}", &record[0])))?;
        let raw: f64 = record[1]
            .parse()
            .map_err(|_| parse_err(path, line, format!("bad number `{}`", &record[1])))?;
        if !raw.is_finite() {
            return Err(parse_err(path, line, "value is not finite"));
        }
        let value = match column {
            ValueColumn::Price if raw <= 0.0 => {
                return Err(parse_err(
                    path,
                    line,
                    format!("price must be positive, got {raw}"),
                ));
            }
            ValueColumn::Price => raw.ln(),
            ValueColumn::LogPrice => raw,
        };
        if let Some(&prev) = dates.last() {
            if date <= prev {
                let what = if date == prev {
                    "duplicate"
                } else {
                    "out-of-order"
                };
                return Err(parse_err(
                    path,
                    line,
                    format!("{what} date {date} after {prev}"),
                ));
            }
        }
        dates.push(date);
        values.push(value);
    }
    if values.is_empty() {
        return Err(parse_err(path, 2, "no observations"));
    }
    PriceSeries::with_dates(dates, values)
}

/// `date,log_price` rendering of a dated series.
pub fn series_csv(series: &PriceSeries) -> Result<Vec<u8>> {
    let dates = series
        .dates()
        .ok_or_else(|| Error::InvalidConfig("series has no calendar to write".into()))?;
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["date", "log_price"])?;
    for (d, v) in dates.iter().zip(series.values()) {
        out.write_record([d.format("%Y-%m-%d").to_string(), format!("{v}")])?;
    }
    into_bytes(out)
}

fn into_bytes(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Outputs of one command, written together.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, path: PathBuf, bytes: Vec<u8>) {
        self.files.push((path, bytes));
    }

    pub fn add_json<T: Serialize>(&mut self, path: PathBuf, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.add(path, bytes);
        Ok(())
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.files.iter().map(|(p, _)| p.as_path())
    }

    /// Stage every file next to its destination, then rename them all into
    /// place. Nothing is renamed unless every file was staged.
    pub fn commit(self) -> Result<Vec<PathBuf>> {
        let mut staged = Vec::with_capacity(self.files.len());
        for (path, bytes) in self.files {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
                _ => PathBuf::from("."),
            };
            fs::create_dir_all(&dir)?;
            let mut tmp = NamedTempFile::new_in(&dir)?;
            tmp.write_all(&bytes)?;
            tmp.as_file().sync_all()?;
            staged.push((tmp, path));
        }
        let mut written = Vec::with_capacity(staged.len());
        for (tmp, path) in staged {
            tmp.persist(&path).map_err(|e| Error::Io(e.error))?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Write one file atomically.
pub fn write_atomic(path: impl Into<PathBuf>, bytes: Vec<u8>) -> Result<()> {
    let mut a = Artifacts::default();
    a.add(path.into(), bytes);
    a.commit().map(drop)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ols,
    Lppls,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ols" => Ok(Self::Ols),
            "lppls" => Ok(Self::Lppls),
            _ => Err(Error::InvalidConfig(format!("unknown model `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRequest {
    pub input: PathBuf,
    /// Pseudo-present date; the last observation when absent.
    pub t2: Option<NaiveDate>,
    pub max_window: usize,
    pub min_window: usize,
    pub step: usize,
    pub model: ModelKind,
    pub seed: u64,
    pub lambda_mode: LambdaMode,
    pub out_dir: PathBuf,
    /// Index given to the first observation. The OLS model regresses on
    /// this index, so it fixes where the origin of the regression sits.
    pub index_origin: TimeIndex,
}

impl ScanRequest {
    pub fn new(
        input: impl Into<PathBuf>,
        model: ModelKind,
        seed: u64,
        out_dir: impl Into<PathBuf>,
    ) -> Self {
        Self {
            input: input.into(),
            t2: None,
            max_window: 1600,
            min_window: 30,
            step: 3,
            model,
            seed,
            lambda_mode: LambdaMode::Intercept,
            out_dir: out_dir.into(),
            index_origin: 0,
        }
    }
}

/// The selected window start for one scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauReport {
    pub t2: TimeIndex,
    pub t2_date: Option<NaiveDate>,
    pub tau_date: Option<NaiveDate>,
    pub tau_index: TimeIndex,
    pub lambda: f64,
    pub n_valid_windows: usize,
}

/// One LPPLS calibration as written to the fits file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub t1: TimeIndex,
    pub t2: TimeIndex,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    pub m: f64,
    pub omega: f64,
    pub tc: f64,
    pub tc_date: Option<NaiveDate>,
    pub chi2: f64,
    pub chi2_np: f64,
    pub filter_pass: bool,
    pub status: String,
}

impl FitRecord {
    pub fn new(fit: &LpplsFit, series: &PriceSeries) -> Self {
        let p = &fit.params;
        Self {
            t1: fit.t1,
            t2: fit.t2,
            a: p.a,
            b: p.b,
            c1: p.c1,
            c2: p.c2,
            m: p.m,
            omega: p.omega,
            tc: p.tc,
            tc_date: series.date_for_index(p.tc),
            chi2: fit.cost.chi2,
            chi2_np: fit.cost.chi2_np,
            filter_pass: fit.filter_pass,
            status: serde_json::to_value(fit.status)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default(),
        }
    }
}

/// Lambda document: the estimate plus the full regularised curve.
#[derive(Debug, Clone, Serialize)]
struct LambdaDocument<'a> {
    lambda: &'a LambdaEstimate,
    curve: crate::metrics::CurveDocument,
}

pub const PLOT_CSV_HEADER: [&str; 6] =
    ["t1", "date", "window_len", "chi2", "chi2_np", "chi2_lambda"];

/// Costs of usable windows, each scaled by its largest magnitude. Other
/// windows are left blank.
pub fn plot_csv<P>(curve: &RegularisedCurve<P>, series: &PriceSeries) -> Result<Vec<u8>> {
    let entries = curve.curve.entries();
    let usable: Vec<bool> = entries.iter().map(|e| e.is_usable()).collect();
    let masked = |v: Vec<f64>| -> Vec<f64> {
        let v: Vec<f64> = v
            .into_iter()
            .zip(&usable)
            .map(|(x, &u)| if u { x } else { f64::NAN })
            .collect();
        normalize_curve(&v).unwrap_or(v)
    };
    let chi2 = masked(entries.iter().map(|e| e.cost.chi2).collect());
    let chi2_np = masked(entries.iter().map(|e| e.cost.chi2_np).collect());
    let chi2_lambda = masked(curve.chi2_lambda.clone());

    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(PLOT_CSV_HEADER)?;
    for (k, e) in entries.iter().enumerate() {
        out.write_record([
            e.t1.to_string(),
            series
                .date_at(e.t1)
                .map(|d| d.to_string())
                .unwrap_or_default(),
            e.window_len.to_string(),
            fmt_cell(chi2[k]),
            fmt_cell(chi2_np[k]),
            fmt_cell(chi2_lambda[k]),
        ])?;
    }
    into_bytes(out)
}

/// Result of a completed scan command.
#[derive(Debug, Clone)]
pub struct ScanOutcome {
    pub report: TauReport,
    pub written: Vec<PathBuf>,
}

pub const CURVE_FILE: &str = "curve.csv";
pub const LAMBDA_FILE: &str = "lambda.json";
pub const TAU_FILE: &str = "tau.json";
pub const PLOT_FILE: &str = "plot.csv";
pub const FITS_FILE: &str = "fits.json";

fn tau_report<P>(out: &Endogenised<P>, series: &PriceSeries) -> TauReport {
    let t2 = out.curve.curve.t2();
    TauReport {
        t2,
        t2_date: series.date_at(t2),
        tau_date: series.date_at(out.tau),
        tau_index: out.tau,
        lambda: out.lambda.lambda,
        n_valid_windows: out.curve.curve.n_usable(),
    }
}

fn scan_artifacts<P>(
    out: &Endogenised<P>,
    series: &PriceSeries,
    dir: &Path,
    artifacts: &mut Artifacts,
) -> Result<TauReport> {
    let mut curve_csv = Vec::new();
    out.curve.write_csv(&mut curve_csv)?;
    artifacts.add(dir.join(CURVE_FILE), curve_csv);
    artifacts.add_json(
        dir.join(LAMBDA_FILE),
        &LambdaDocument {
            lambda: &out.lambda,
            curve: out.curve.to_document(),
        },
    )?;
    let report = tau_report(out, series);
    artifacts.add_json(dir.join(TAU_FILE), &report)?;
    artifacts.add(dir.join(PLOT_FILE), plot_csv(&out.curve, series)?);
    Ok(report)
}

/// Load, scan, select `tau` and write the scan outputs into `out_dir`.
///
/// Fails without writing anything when the input cannot be read, `t2` is not
/// an observation, or no window start can be selected.
pub fn scan_command(req: &ScanRequest) -> Result<ScanOutcome> {
    let series = load_csv(&req.input)?.with_origin(req.index_origin);
    let t2 = match req.t2 {
        Some(d) => series.index_of(d)?,
        None => series.last_index(),
    };
    let grid =
        build_grid(t2, req.max_window, req.min_window, req.step)?.clipped_to(series.first_index());
    let mut artifacts = Artifacts::default();
    let report = match req.model {
        ModelKind::Ols => {
            let out = endogenise_t1(&series, &grid, &OlsFitter, req.lambda_mode, req.seed)?;
            scan_artifacts(&out, &series, &req.out_dir, &mut artifacts)?
        }
        ModelKind::Lppls => {
            let out = bubble_scan(
                &series,
                &grid,
                &LpplsFitter::default(),
                req.lambda_mode,
                req.seed,
            )?;
            let fits: Vec<FitRecord> = out
                .curve
                .curve
                .entries()
                .iter()
                .filter_map(|e| e.payload.as_ref())
                .map(|f| FitRecord::new(f, &series))
                .collect();
            artifacts.add_json(req.out_dir.join(FITS_FILE), &fits)?;
            scan_artifacts(&out, &series, &req.out_dir, &mut artifacts)?
        }
    };
    let written = artifacts.commit()?;
    Ok(ScanOutcome { report, written })
}

pub const MC_CSV_FILE: &str = "mc_bench.csv";

/// Band table at `csv_path`, sidecar next to it with a `.json` extension.
pub fn write_mc_bench(summary: &McSummary, csv_path: &Path) -> Result<Vec<PathBuf>> {
    let mut csv_bytes = Vec::new();
    summary.write_csv(&mut csv_bytes)?;
    let mut a = Artifacts::default();
    a.add(csv_path.to_path_buf(), csv_bytes);
    a.add_json(csv_path.with_extension("json"), &summary.sidecar())?;
    a.commit()
}

pub const SYNTH_CSV_FILE: &str = "synth_bubble.csv";

/// Generation record written next to a synthetic series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthMeta {
    pub seed: u64,
    pub config: SyntheticBubbleConfig,
    pub true_start_index: TimeIndex,
    pub true_start_date: Option<NaiveDate>,
    /// Parameters with `tc` expressed on the series index.
    pub series_params: crate::lppls::LpplsParams,
}

/// Series at `csv_path`, generation record next to it with a `.json`
/// extension.
pub fn write_synth_bubble(
    series: &PriceSeries,
    config: &SyntheticBubbleConfig,
    seed: u64,
    csv_path: &Path,
) -> Result<Vec<PathBuf>> {
    let start = config.true_start_index();
    let meta = SynthMeta {
        seed,
        config: *config,
        true_start_index: start,
        true_start_date: series.date_at(start),
        series_params: config.params_on_series_axis(),
    };
    let mut a = Artifacts::default();
    a.add(csv_path.to_path_buf(), series_csv(series)?);
    a.add_json(csv_path.with_extension("json"), &meta)?;
    a.commit()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn prices_are_logged() {
        let dir = tempfile::tempdir().unwrap();
        let e = std::f64::consts::E;
        let p = write(
            dir.path(),
            "a.csv",
            &format!("date,price\n2020-01-02,{e}\n2020-01-03,{}\n", e * e),
        );
        let s = load_csv(&p).unwrap();
        assert!((s.values()[0] - 1.0).abs() < 1e-15);
        assert!((s.values()[1] - 2.0).abs() < 1e-15);
        assert_eq!(s.first_index(), 0);
        assert_eq!(
            s.index_of(NaiveDate::from_ymd_opt(2020, 1, 3).unwrap())
                .unwrap(),
            1
        );
    }

    #[test]
    fn log_prices_are_kept() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "a.csv",
            "date,log_price\n2020-01-02,-0.5\n2020-01-06,0.25\n",
        );
        assert_eq!(load_csv(&p).unwrap().values(), &[-0.5, 0.25]);
    }

    #[test]
    fn bad_inputs_report_lines() {
        let dir = tempfile::tempdir().unwrap();
        let cases = [
            ("dup.csv", "date,price\n2020-01-02,1\n2020-01-02,2\n", 3),
            ("order.csv", "date,price\n2020-01-03,1\n2020-01-02,2\n", 3),
            ("neg.csv", "date,price\n2020-01-02,1\n2020-01-03,0\n", 3),
            ("date.csv", "date,price\n02/01/2020,1\n", 2),
            ("num.csv", "date,price\n2020-01-02,x\n", 2),
            ("header.csv", "day,price\n2020-01-02,1\n", 1),
            ("fields.csv", "date,price\n2020-01-02,1,3\n", 2),
        ];
        for (name, body, want) in cases {
            let p = write(dir.path(), name, body);
            match load_csv(&p) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, want, "{name}"),
                other => panic!("{name}: {other:?}"),
            }
        }
        assert!(matches!(
            load_csv(dir.path().join("missing.csv")),
            Err(Error::Csv(_) | Error::Io(_))
        ));
    }

    #[test]
    fn artifacts_land_together() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::default();
        a.add(dir.path().join("x/one.txt"), b"1".to_vec());
        a.add_json(dir.path().join("x/two.json"), &[1, 2]).unwrap();
        let written = a.commit().unwrap();
        assert_eq!(written.len(), 2);
        assert_eq!(fs::read(dir.path().join("x/one.txt")).unwrap(), b"1");
        let leftovers = fs::read_dir(dir.path().join("x")).unwrap().count();
        assert_eq!(leftovers, 2);
    }

    #[test]
    fn model_names() {
        assert_eq!("ols".parse::<ModelKind>().unwrap(), ModelKind::Ols);
        assert_eq!("lppls".parse::<ModelKind>().unwrap(), ModelKind::Lppls);
        assert!("arma".parse::<ModelKind>().is_err());
    }
}
