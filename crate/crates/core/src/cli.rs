//! Command-line front end. Every report embeds the configuration that made
//! it, and `replay` regenerates the report from that block.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    coarse_grain_study, halving_levels, measure_field, ordering_comparison, random_image_baseline, shift_sweep,
    time_series_analysis, Boundary, ParamValue, Provenance, RandomBaselineConfig, StudyRow, StudyTable,
};
use crate::encoding::{EncodingConfig, Ordering, DEFAULT_CUTOFF};
use crate::error::{Error, ErrorKind, Result};
use crate::io::{
    load_field, load_stack, read_report, render_report, synth_shear_ic, write_field, write_report, FileFormat,
    LoadOptions, Report, ReportFormat, Selector, ShearIcParams,
};
use crate::resources::{MagicChoice, MagicConfig, Normalization};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

/// Coarsest exponent of the default halving ladder.
const DEFAULT_MIN_LEVEL: usize = 2;

#[derive(Debug, Parser)]
#[command(name = "flowmagic", version, about = "Entanglement and magic of 2D fields encoded as MPS")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Print progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
enum Command {
    /// Resources of a single field.
    Encode(EncodeCmd),
    /// One row per snapshot of a stack.
    Timeseries(TimeseriesCmd),
    /// Resources under successive coarse-graining.
    Coarse(CoarseCmd),
    /// Resources after adding constant shifts.
    Shift(ShiftCmd),
    /// Compare qubit orderings on the same field.
    Ordering(OrderingCmd),
    /// Coarse-graining averages over uniform random images.
    RandomBaseline(RandomBaselineCmd),
    /// Write the shear-flow velocity initial condition.
    SynthIc(SynthIcCmd),
    /// Regenerate a report from its embedded configuration.
    Replay(ReplayCmd),
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    /// hdf5, npy or csv; taken from the extension by default.
    #[arg(long)]
    format: Option<FileFormat>,
    #[arg(long)]
    dataset_path: Option<String>,
    /// Leading indices of a higher-rank array, outermost first.
    #[arg(long, value_delimiter = ',')]
    index: Vec<usize>,
    /// Resample non power-of-two grids with this boundary.
    #[arg(long)]
    resample: Option<Boundary>,
}

impl InputArgs {
    fn options(&self) -> LoadOptions {
        LoadOptions {
            format: self.format,
            selector: Selector {
                dataset_path: self.dataset_path.clone(),
                index: self.index.clone(),
            },
            resample: self.resample,
        }
    }
}

fn parse_cutoff(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("cutoff must be a finite non-negative number, got {s}"))
    }
}

fn parse_positive(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("expected a positive integer, got {s}")),
    }
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
struct EncodingArgs {
    #[arg(long, default_value = "fwd")]
    ordering: Ordering,
    #[arg(long, default_value_t = DEFAULT_CUTOFF, value_parser = parse_cutoff)]
    cutoff: f64,
    #[arg(long, value_parser = parse_positive)]
    max_rank: Option<usize>,
}

impl EncodingArgs {
    fn config(&self) -> EncodingConfig {
        EncodingConfig {
            ordering: self.ordering,
            cutoff: self.cutoff,
            max_rank: self.max_rank,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
struct MagicArgs {
    /// auto, dense, replica, sampled or off.
    #[arg(long, default_value = "auto")]
    magic: MagicChoice,
    #[arg(long, default_value_t = 4096, value_parser = parse_positive)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "pure_state_bound")]
    normalization: Normalization,
}

impl MagicArgs {
    fn config(&self) -> MagicConfig {
        MagicConfig {
            method: self.magic,
            n_samples: self.samples,
            seed: self.seed,
            normalization: self.normalization,
            ..MagicConfig::default()
        }
    }
}

/// Where the report goes. Not part of the recorded configuration.
#[derive(Clone, Debug, Default, PartialEq, Args)]
struct OutputArgs {
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// json or csv; taken from the extension of --out by default.
    #[arg(long)]
    out_format: Option<ReportFormat>,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
struct EncodeCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    encoding: EncodingArgs,
    #[command(flatten)]
    magic: MagicArgs,
    #[command(flatten)]
    #[serde(skip)]
    output: OutputArgs,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
struct TimeseriesCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    encoding: EncodingArgs,
    #[command(flatten)]
    magic: MagicArgs,
    #[command(flatten)]
    #[serde(skip)]
    output: OutputArgs,
}

fn parse_level(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("level {s:?} is not of the form NXxNY"))?;
    let a: usize = a.trim().parse().map_err(|e| format!("level {s:?}: {e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("level {s:?}: {e}"))?;
    if a == 0 || b == 0 {
        return Err(format!("level {s:?} has a zero exponent"));
    }
    Ok((a, b))
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
struct CoarseCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    encoding: EncodingArgs,
    #[command(flatten)]
    magic: MagicArgs,
    /// Grid exponents such as 6x6,5x5; halves down to 4x4 by default.
    #[arg(long, value_delimiter = ',', value_parser = parse_level)]
    levels: Vec<(usize, usize)>,
    #[arg(long, default_value = "periodic")]
    boundary: Boundary,
    #[command(flatten)]
    #[serde(skip)]
    output: OutputArgs,
}

fn parse_finite(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number, got {s}")),
    }
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
struct ShiftCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    encoding: EncodingArgs,
    #[command(flatten)]
    magic: MagicArgs,
    #[arg(long, value_delimiter = ',', default_value = "0,1", allow_hyphen_values = true, value_parser = parse_finite)]
    shifts: Vec<f64>,
    #[command(flatten)]
    #[serde(skip)]
    output: OutputArgs,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
struct OrderingCmd {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = DEFAULT_CUTOFF, value_parser = parse_cutoff)]
    cutoff: f64,
    #[arg(long, value_parser = parse_positive)]
    max_rank: Option<usize>,
    #[command(flatten)]
    magic: MagicArgs,
    #[command(flatten)]
    #[serde(skip)]
    output: OutputArgs,
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("range {s:?} is not of the form LO,HI"))?;
    let (lo, hi) = (parse_finite(lo.trim())?, parse_finite(hi.trim())?);
    if lo >= hi {
        return Err(format!("range {s:?} is empty"));
    }
    Ok((lo, hi))
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
struct RandomBaselineCmd {
    #[arg(long, default_value_t = 20, value_parser = parse_positive)]
    count: usize,
    #[arg(long, default_value_t = 6, value_parser = parse_positive)]
    nx: usize,
    #[arg(long, default_value_t = 6, value_parser = parse_positive)]
    ny: usize,
    /// Value range lo,hi of the uniform pixels.
    #[arg(long, default_value = "-1,1", allow_hyphen_values = true, value_parser = parse_range)]
    range: (f64, f64),
    /// Grid exponents such as 6x6,5x5; halves down to 4x4 by default.
    #[arg(long, value_delimiter = ',', value_parser = parse_level)]
    levels: Vec<(usize, usize)>,
    #[arg(long, default_value = "periodic")]
    boundary: Boundary,
    #[command(flatten)]
    encoding: EncodingArgs,
    /// Seeds both the images and the sampled estimator.
    #[command(flatten)]
    magic: MagicArgs,
    #[command(flatten)]
    #[serde(skip)]
    output: OutputArgs,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
struct SynthIcCmd {
    /// Number of shear layers.
    #[arg(long, default_value_t = 2, value_parser = parse_positive)]
    ns: usize,
    /// Number of perturbation periods along x.
    #[arg(long, default_value_t = 2, value_parser = parse_positive)]
    nb: usize,
    /// Shear width.
    #[arg(long, default_value_t = 0.1, value_parser = parse_finite)]
    w: f64,
    #[arg(long, default_value_t = 8, value_parser = parse_positive)]
    nx: usize,
    #[arg(long, default_value_t = 9, value_parser = parse_positive)]
    ny: usize,
    /// Explicit shear centers in [-1, 1).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_parser = parse_finite)]
    centers: Option<Vec<f64>>,
    /// Output directory for ux and uy.
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
    /// npy or csv.
    #[arg(long, default_value = "npy")]
    #[serde(skip)]
    out_format: Option<FileFormat>,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
struct ReplayCmd {
    /// Report to regenerate.
    #[arg(long)]
    report: PathBuf,
    #[command(flatten)]
    #[serde(skip)]
    output: OutputArgs,
}

fn report_format_of(path: &Path) -> Option<ReportFormat> {
    match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
        "json" => Some(ReportFormat::Json),
        "csv" => Some(ReportFormat::Csv),
        _ => None,
    }
}

fn levels_or_default(levels: &[(usize, usize)], nx: usize, ny: usize) -> Vec<(usize, usize)> {
    if levels.is_empty() {
        halving_levels(nx, ny, DEFAULT_MIN_LEVEL.min(nx).min(ny))
    } else {
        levels.to_vec()
    }
}

impl Command {
    fn output(&self) -> OutputArgs {
        match self {
            Command::Encode(c) => c.output.clone(),
            Command::Timeseries(c) => c.output.clone(),
            Command::Coarse(c) => c.output.clone(),
            Command::Shift(c) => c.output.clone(),
            Command::Ordering(c) => c.output.clone(),
            Command::RandomBaseline(c) => c.output.clone(),
            Command::SynthIc(_) => OutputArgs::default(),
            Command::Replay(c) => c.output.clone(),
        }
    }

    /// Compute the table, plus bond profiles for single-field runs.
    fn table(&self) -> Result<(StudyTable, Option<Vec<crate::resources::ResourceReport>>)> {
        match self {
            Command::Encode(c) => {
                let field = load_field(&c.input.input, &c.input.options())?;
                let (enc, magic) = (c.encoding.config(), c.magic.config());
                let m = measure_field(&field, &enc, &magic)?;
                let params: BTreeMap<String, ParamValue> = [("nx", field.nx()), ("ny", field.ny())]
                    .into_iter()
                    .map(|(k, v)| (k.to_string(), v.into()))
                    .collect();
                let table = StudyTable {
                    study: "encode".into(),
                    provenance: Provenance {
                        encoding: vec![enc],
                        magic,
                        seeds: if magic.method == MagicChoice::Off { vec![] } else { vec![magic.seed] },
                        boundary: None,
                    },
                    rows: vec![StudyRow::from_report(params, &m.report)],
                };
                Ok((table, Some(vec![m.report])))
            }
            Command::Timeseries(c) => {
                let stack = load_stack(&c.input.input, &c.input.options())?;
                Ok((time_series_analysis(&stack, &c.encoding.config(), &c.magic.config())?, None))
            }
            Command::Coarse(c) => {
                let field = load_field(&c.input.input, &c.input.options())?;
                let levels = levels_or_default(&c.levels, field.nx(), field.ny());
                let t = coarse_grain_study(&field, &levels, &c.encoding.config(), &c.magic.config(), c.boundary)?;
                Ok((t, None))
            }
            Command::Shift(c) => {
                let field = load_field(&c.input.input, &c.input.options())?;
                Ok((shift_sweep(&field, &c.shifts, &c.encoding.config(), &c.magic.config())?, None))
            }
            Command::Ordering(c) => {
                let field = load_field(&c.input.input, &c.input.options())?;
                let encodings: Vec<EncodingConfig> = Ordering::ALL
                    .iter()
                    .map(|&ordering| EncodingConfig {
                        ordering,
                        cutoff: c.cutoff,
                        max_rank: c.max_rank,
                    })
                    .collect();
                Ok((ordering_comparison(&field, &encodings, &c.magic.config())?, None))
            }
            Command::RandomBaseline(c) => {
                let cfg = RandomBaselineConfig {
                    count: c.count,
                    nx: c.nx,
                    ny: c.ny,
                    range: c.range,
                    levels: levels_or_default(&c.levels, c.nx, c.ny),
                    seed: c.magic.seed,
                    boundary: c.boundary,
                };
                Ok((random_image_baseline(&cfg, &c.encoding.config(), &c.magic.config())?, None))
            }
            Command::SynthIc(_) | Command::Replay(_) => {
                Err(Error::InvalidInput("this subcommand does not produce a study table".into()))
            }
        }
    }
}

fn emit(report: &Report, output: &OutputArgs, verbose: bool) -> Result<()> {
    match &output.out {
        Some(path) => {
            let format = output
                .out_format
                .or_else(|| report_format_of(path))
                .unwrap_or(ReportFormat::Json);
            write_report(report, path, format)?;
            if verbose {
                eprintln!("wrote {}", path.display());
            }
        }
        None => {
            let bytes = render_report(report, output.out_format.unwrap_or(ReportFormat::Json))?;
            std::io::stdout()
                .write_all(&bytes)
                .map_err(|e| Error::io("<stdout>", e))?;
        }
    }
    Ok(())
}

fn run_study(command: &Command, output: &OutputArgs, verbose: bool) -> Result<()> {
    let run = serde_json::to_value(command).map_err(|e| Error::Format(format!("recording run config: {e}")))?;
    let (table, profiles) = command.table()?;
    let mut report = Report::from_table(table, Some(run));
    if let Some(p) = profiles {
        report = report.with_profiles(&p);
    }
    emit(&report, output, verbose)
}

fn synth_ic(c: &SynthIcCmd, verbose: bool) -> Result<()> {
    let params = ShearIcParams {
        shear_centers: c.centers.clone(),
        ..ShearIcParams::new(c.ns, c.nb, c.w, c.nx, c.ny)
    };
    let format = c.out_format.unwrap_or(FileFormat::Npy);
    if format == FileFormat::Hdf5 {
        return Err(Error::InvalidInput("synth-ic writes npy or csv only".into()));
    }
    let (ux, uy) = synth_shear_ic(&params)?;
    std::fs::create_dir_all(&c.out).map_err(|e| Error::io(&c.out, e))?;
    for (name, field) in [("ux", &ux), ("uy", &uy)] {
        let path = c.out.join(format!("{name}.{format}"));
        write_field(field, &path, format)?;
        if verbose {
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn replay(c: &ReplayCmd, verbose: bool) -> Result<()> {
    let format = report_format_of(&c.report)
        .ok_or_else(|| Error::InvalidInput(format!("{}: expected a .json or .csv report", c.report.display())))?;
    let old = read_report(&c.report, format)?;
    let run = old
        .meta
        .run
        .ok_or_else(|| Error::InvalidInput("report has no embedded run configuration".into()))?;
    let command: Command =
        serde_json::from_value(run).map_err(|e| Error::Format(format!("embedded run configuration: {e}")))?;
    if matches!(command, Command::SynthIc(_) | Command::Replay(_)) {
        return Err(Error::InvalidInput("embedded run configuration is not a study".into()));
    }
    let mut output = c.output.clone();
    if output.out_format.is_none() && output.out.as_deref().and_then(report_format_of).is_none() {
        output.out_format = Some(format);
    }
    run_study(&command, &output, verbose)
}

fn error_json(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": { "kind": kind, "message": message } }).to_string()
}

fn execute(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::SynthIc(c) => synth_ic(c, cli.verbose),
        Command::Replay(c) => replay(c, cli.verbose),
        other => run_study(other, &other.output(), cli.verbose),
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return EXIT_OK;
        }
        Err(e) => {
            eprintln!("{}", error_json("usage", e.render().to_string().trim()));
            return EXIT_USAGE;
        }
    };
    if let Some(n) = cli.threads {
        // fails only if the global pool already exists, e.g. in tests
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let (kind, code) = match e.kind() {
                ErrorKind::Input => ("input", EXIT_INPUT),
                ErrorKind::Numeric => ("numeric", EXIT_NUMERIC),
            };
            eprintln!("{}", error_json(kind, &e.to_string()));
            code
        }
    }
}
