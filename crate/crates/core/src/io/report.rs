use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::atomic_write;
use crate::analysis::{ParamValue, Provenance, StudyRow, StudyTable};
use crate::encoding::EncodingConfig;
use crate::error::{Error, Result};
use crate::resources::{MagicChoice, Normalization, ResourceReport};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        })
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format {other:?} (expected json or csv)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagicMeta {
    pub method: MagicChoice,
    pub n_samples: usize,
    pub normalization: Normalization,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub tool_version: String,
    pub study: String,
    /// Seed of the sampled estimator (and of random images, if any).
    pub seed: Option<u64>,
    pub encoding: EncodingConfig,
    pub magic: MagicMeta,
    pub provenance: Provenance,
    /// Command-line configuration that produced the report.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<serde_json::Value>,
}

/// Per-bond detail of a single encoded field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BondProfile {
    pub entropies_bits: Vec<f64>,
    pub bond_dims: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub meta: ReportMeta,
    pub rows: Vec<StudyRow>,
    /// JSON only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profiles: Option<Vec<BondProfile>>,
}

impl Report {
    pub fn from_table(table: StudyTable, run: Option<serde_json::Value>) -> Report {
        let p = &table.provenance;
        let encoding = p.encoding.first().copied().unwrap_or_default();
        let meta = ReportMeta {
            tool_version: TOOL_VERSION.to_string(),
            study: table.study.clone(),
            seed: p.seeds.first().copied(),
            encoding,
            magic: MagicMeta {
                method: p.magic.method,
                n_samples: p.magic.n_samples,
                normalization: p.magic.normalization,
            },
            provenance: table.provenance.clone(),
            run,
        };
        Report {
            meta,
            rows: table.rows,
            profiles: None,
        }
    }

    pub fn with_profiles(mut self, reports: &[ResourceReport]) -> Report {
        self.profiles = Some(
            reports
                .iter()
                .map(|r| BondProfile {
                    entropies_bits: r.entropy.entropies_bits.clone(),
                    bond_dims: r.bond_dims.clone(),
                })
                .collect(),
        );
        self
    }
}

const FIXED_COLUMNS: [&str; 12] = [
    "s_vn_norm",
    "s_vn_bits",
    "argmax_bond",
    "m2_bits",
    "m2_norm",
    "m2_stderr",
    "m2_method",
    "chi_max",
    "discarded_weight",
    "rmse",
    "s_vn_norm_std",
    "m2_norm_std",
];

const META_PREFIX: &str = "# meta: ";

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

fn fmt_param(v: &ParamValue) -> String {
    match v {
        ParamValue::Int(i) => i.to_string(),
        ParamValue::Real(r) => fmt_f64(*r),
        ParamValue::Text(s) => s.clone(),
    }
}

fn parse_param(s: &str) -> ParamValue {
    if let Ok(i) = s.parse::<i64>() {
        ParamValue::Int(i)
    } else if let Ok(r) = s.parse::<f64>() {
        ParamValue::Real(r)
    } else {
        ParamValue::Text(s.to_string())
    }
}

fn param_columns(rows: &[StudyRow]) -> Vec<String> {
    let keys: BTreeSet<&String> = rows.iter().flat_map(|r| r.params.keys()).collect();
    keys.into_iter().cloned().collect()
}

fn write_csv(report: &Report, w: &mut impl Write) -> std::io::Result<()> {
    let meta = serde_json::to_string(&report.meta)?;
    writeln!(w, "{META_PREFIX}{meta}")?;
    let params = param_columns(&report.rows);
    let mut writer = csv::Writer::from_writer(w);
    let header: Vec<&str> = params.iter().map(String::as_str).chain(FIXED_COLUMNS).collect();
    writer.write_record(&header)?;
    for row in &report.rows {
        let mut record: Vec<String> = params
            .iter()
            .map(|k| row.params.get(k).map(fmt_param).unwrap_or_default())
            .collect();
        record.extend([
            fmt_f64(row.s_vn_norm),
            fmt_f64(row.s_vn_bits),
            fmt_opt(row.argmax_bond, |b| b.to_string()),
            fmt_opt(row.m2_bits, fmt_f64),
            fmt_opt(row.m2_norm, fmt_f64),
            fmt_opt(row.m2_stderr, fmt_f64),
            row.m2_method.clone().unwrap_or_default(),
            row.chi_max.to_string(),
            fmt_f64(row.discarded_weight),
            fmt_opt(row.rmse, fmt_f64),
            fmt_opt(row.s_vn_norm_std, fmt_f64),
            fmt_opt(row.m2_norm_std, fmt_f64),
        ]);
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Write a report, atomically replacing `path`.
pub fn write_report(report: &Report, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = render_report(report, format)?;
    atomic_write(path, |w: &mut BufWriter<File>| w.write_all(&bytes))
}

/// The bytes `write_report` would write.
pub fn render_report(report: &Report, format: ReportFormat) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let res = match format {
        ReportFormat::Json => serde_json::to_writer_pretty(&mut buf, report)
            .map_err(std::io::Error::from)
            .and_then(|_| writeln!(buf)),
        ReportFormat::Csv => write_csv(report, &mut buf),
    };
    res.map_err(|e| Error::Format(format!("rendering report: {e}")))?;
    Ok(buf)
}

fn csv_error(e: impl fmt::Display) -> Error {
    Error::Format(format!("report csv: {e}"))
}

fn read_csv(reader: impl BufRead) -> Result<Report> {
    let mut reader = reader;
    let mut first = String::new();
    reader.read_line(&mut first).map_err(csv_error)?;
    let meta_json = first
        .trim_end()
        .strip_prefix(META_PREFIX)
        .ok_or_else(|| csv_error("missing meta line"))?;
    let meta: ReportMeta = serde_json::from_str(meta_json).map_err(csv_error)?;

    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
    let n_params = header.len().checked_sub(FIXED_COLUMNS.len()).ok_or_else(|| csv_error("short header"))?;
    if header[n_params..] != FIXED_COLUMNS {
        return Err(csv_error("unexpected columns"));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let cell = |k: usize| record.get(k).unwrap_or("");
        let opt_f = |k: usize| -> Result<Option<f64>> {
            let s = cell(k);
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(csv_error)
            }
        };
        let req_f = |k: usize| -> Result<f64> { cell(k).parse().map_err(csv_error) };
        let params: BTreeMap<String, ParamValue> = header[..n_params]
            .iter()
            .enumerate()
            .filter(|(k, _)| !cell(*k).is_empty())
            .map(|(k, name)| (name.clone(), parse_param(cell(k))))
            .collect();
        let b = n_params;
        rows.push(StudyRow {
            params,
            s_vn_norm: req_f(b)?,
            s_vn_bits: req_f(b + 1)?,
            argmax_bond: if cell(b + 2).is_empty() {
                None
            } else {
                Some(cell(b + 2).parse().map_err(csv_error)?)
            },
            m2_bits: opt_f(b + 3)?,
            m2_norm: opt_f(b + 4)?,
            m2_stderr: opt_f(b + 5)?,
            m2_method: Some(cell(b + 6).to_string()).filter(|s| !s.is_empty()),
            chi_max: cell(b + 7).parse().map_err(csv_error)?,
            discarded_weight: req_f(b + 8)?,
            rmse: opt_f(b + 9)?,
            s_vn_norm_std: opt_f(b + 10)?,
            m2_norm_std: opt_f(b + 11)?,
        });
    }
    Ok(Report {
        meta,
        rows,
        profiles: None,
    })
}

pub fn read_report(path: impl AsRef<Path>, format: ReportFormat) -> Result<Report> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    match format {
        ReportFormat::Json => {
            let mut text = String::new();
            reader.read_to_string(&mut text).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
        }
        ReportFormat::Csv => read_csv(reader),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resources::MagicConfig;

    fn table(rows: Vec<StudyRow>) -> StudyTable {
        StudyTable {
            study: "shift".into(),
            provenance: Provenance {
                encoding: vec![EncodingConfig::default()],
                magic: MagicConfig::default().with_seed(11),
                seeds: vec![11],
                boundary: None,
            },
            rows,
        }
    }

    fn row(x: f64, magic: bool) -> StudyRow {
        StudyRow {
            params: [("shift".to_string(), ParamValue::Real(x)), ("t".to_string(), ParamValue::Int(3))]
                .into_iter()
                .collect(),
            s_vn_norm: 0.1 + x / 3.0,
            s_vn_bits: 1.0 / 3.0,
            argmax_bond: Some(4),
            m2_bits: magic.then_some(0.123_456_789_012_345_6),
            m2_norm: magic.then_some(1e-17),
            m2_stderr: magic.then_some(0.0),
            m2_method: magic.then(|| "sampled".to_string()),
            chi_max: 17,
            discarded_weight: 3.3e-17,
            rmse: if magic { None } else { Some(0.25) },
            s_vn_norm_std: None,
            m2_norm_std: None,
        }
    }

    #[test]
    fn empty_table_has_headers() {
        let dir = tempfile::tempdir().unwrap();
        let report = Report::from_table(table(vec![]), None);
        let p = dir.path().join("e.csv");
        write_report(&report, &p, ReportFormat::Csv).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().starts_with("s_vn_norm,"));
        assert_eq!(read_report(&p, ReportFormat::Csv).unwrap(), report);
        let pj = dir.path().join("e.json");
        write_report(&report, &pj, ReportFormat::Json).unwrap();
        assert_eq!(read_report(&pj, ReportFormat::Json).unwrap().rows.len(), 0);
    }

    #[test]
    fn three_row_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let report = Report::from_table(table(vec![row(0.0, true), row(0.5, false), row(1.0, true)]), Some(serde_json::json!({"cmd": "shift"})));
        for format in [ReportFormat::Json, ReportFormat::Csv] {
            let p = dir.path().join(format!("r.{format}"));
            write_report(&report, &p, format).unwrap();
            assert_eq!(read_report(&p, format).unwrap(), report, "{format}");
        }
    }

    #[test]
    fn json_schema_keys() {
        let report = Report::from_table(table(vec![row(1.0, true)]), None);
        let v = serde_json::to_value(&report).unwrap();
        assert_eq!(v["meta"]["magic"]["normalization"], "pure_state_bound");
        assert_eq!(v["meta"]["encoding"]["ordering"], "fwd");
        assert_eq!(v["meta"]["seed"], 11);
        let r = &v["rows"][0];
        assert_eq!(r["shift"], 1.0);
        assert!(r["m2_bits"].is_number());
        for key in ["s_vn_norm", "s_vn_bits", "argmax_bond", "m2_norm", "m2_stderr", "chi_max", "discarded_weight"] {
            assert!(!r[key].is_null(), "{key}");
        }
    }
}
