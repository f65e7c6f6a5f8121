use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use npyz::WriterBuilder;
use serde::{Deserialize, Serialize};

use super::atomic_write;
use crate::analysis::{resample_grid, Boundary};
use crate::encoding::Field2D;
use crate::error::{Error, Result};

/// Default HDF5 dataset path (tracer snapshots, trajectory-major then time-major).
pub const DEFAULT_DATASET_PATH: &str = "t0_fields/tracer";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Hdf5,
    Npy,
    Csv,
}

impl FileFormat {
    /// Guess from the file extension.
    pub fn from_path(path: &Path) -> Option<FileFormat> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "h5" | "hdf5" | "hdf" => Some(FileFormat::Hdf5),
            "npy" => Some(FileFormat::Npy),
            "csv" | "txt" => Some(FileFormat::Csv),
            _ => None,
        }
    }
}

impl fmt::Display for FileFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FileFormat::Hdf5 => "hdf5",
            FileFormat::Npy => "npy",
            FileFormat::Csv => "csv",
        })
    }
}

impl FromStr for FileFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "hdf5" | "h5" => Ok(FileFormat::Hdf5),
            "npy" => Ok(FileFormat::Npy),
            "csv" => Ok(FileFormat::Csv),
            other => Err(format!("unknown format {other:?} (expected hdf5, npy or csv)")),
        }
    }
}

/// How to pick a 2D slice out of a file.
///
/// `index` fixes the leading axes of an array with more than two dimensions,
/// outermost first; unspecified leading axes default to 0.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Selector {
    /// HDF5 dataset path; ignored for other formats.
    pub dataset_path: Option<String>,
    pub index: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Taken from the extension when `None`.
    pub format: Option<FileFormat>,
    pub selector: Selector,
    /// Resample grids that are not `2^a × 2^b` up to the next powers of two.
    pub resample: Option<Boundary>,
}

/// A numeric array whose 2D slices can be read one at a time.
trait ArraySource {
    fn shape(&self) -> &[usize];
    /// Row-major values of the trailing two axes at the given leading indices.
    fn slice(&self, lead: &[usize]) -> Result<Vec<f64>>;
}

struct InMemory {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl ArraySource for InMemory {
    fn shape(&self) -> &[usize] {
        &self.shape
    }

    fn slice(&self, lead: &[usize]) -> Result<Vec<f64>> {
        let nd = self.shape.len();
        let plane = self.shape[nd - 2] * self.shape[nd - 1];
        let mut offset = 0;
        for (axis, &i) in lead.iter().enumerate() {
            offset = offset * self.shape[axis] + i;
        }
        Ok(self.data[offset * plane..(offset + 1) * plane].to_vec())
    }
}

fn read_csv(path: &Path) -> Result<InMemory> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(Error::Format(format!(
                    "{}: row {} has {} columns, expected {c}",
                    path.display(),
                    r + 1,
                    record.len()
                )))
            }
            _ => {}
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::Format(format!(
                    "{}: non-numeric entry {field:?} at row {}, column {}",
                    path.display(),
                    r + 1,
                    c + 1
                ))
            })?;
            data.push(v);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::Format(format!("{}: empty csv", path.display())))?;
    Ok(InMemory {
        shape: vec![rows, cols],
        data,
    })
}

fn read_npy(path: &Path) -> Result<InMemory> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let npy = npyz::NpyFile::new(BufReader::new(file))
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if npy.order() != npyz::Order::C {
        return Err(Error::Format(format!(
            "{}: Fortran-ordered arrays are not supported",
            path.display()
        )));
    }
    let shape: Vec<usize> = npy.shape().iter().map(|&d| d as usize).collect();
    let npyz::DType::Plain(ts) = npy.dtype() else {
        return Err(Error::Format(format!("{}: structured dtype", path.display())));
    };
    let bad = |e: std::io::Error| Error::Format(format!("{}: {e}", path.display()));
    let data: Vec<f64> = match (ts.type_char(), ts.size_field()) {
        (npyz::TypeChar::Float, 8) => npy.into_vec::<f64>().map_err(bad)?,
        (npyz::TypeChar::Float, 4) => npy.into_vec::<f32>().map_err(bad)?.into_iter().map(f64::from).collect(),
        _ => {
            return Err(Error::Format(format!(
                "{}: dtype {ts} is not float32 or float64",
                path.display()
            )))
        }
    };
    Ok(InMemory { shape, data })
}

#[cfg(feature = "hdf5")]
struct Hdf5Source {
    dataset: hdf5_metno::Dataset,
    shape: Vec<usize>,
}

#[cfg(feature = "hdf5")]
fn hdf5_err(path: &Path, e: hdf5_metno::Error) -> Error {
    Error::Format(format!("{}: {e}", path.display()))
}

#[cfg(feature = "hdf5")]
fn open_hdf5(path: &Path, dataset_path: &str) -> Result<Hdf5Source> {
    if !path.exists() {
        return Err(Error::io(path, std::io::Error::from(std::io::ErrorKind::NotFound)));
    }
    let file = hdf5_metno::File::open(path).map_err(|e| hdf5_err(path, e))?;
    let dataset = file.dataset(dataset_path).map_err(|e| hdf5_err(path, e))?;
    let shape = dataset.shape();
    Ok(Hdf5Source { dataset, shape })
}

#[cfg(feature = "hdf5")]
impl ArraySource for Hdf5Source {
    fn shape(&self) -> &[usize] {
        &self.shape
    }

    fn slice(&self, lead: &[usize]) -> Result<Vec<f64>> {
        use hdf5_metno::{Hyperslab, SliceOrIndex};
        let nd = self.shape.len();
        let mut sel: Vec<SliceOrIndex> = lead.iter().map(|&i| SliceOrIndex::Index(i)).collect();
        for &d in &self.shape[nd - 2..] {
            sel.push(SliceOrIndex::SliceCount {
                start: 0,
                step: 1,
                count: d,
                block: 1,
            });
        }
        let arr = self
            .dataset
            .read_slice_2d::<f64, _>(Hyperslab::from(sel))
            .map_err(|e| Error::Format(format!("hdf5 slice {lead:?}: {e}")))?;
        Ok(arr.iter().copied().collect())
    }
}

fn open_source(path: &Path, options: &LoadOptions) -> Result<Box<dyn ArraySource>> {
    let format = match options.format {
        Some(f) => f,
        None => FileFormat::from_path(path).ok_or_else(|| {
            Error::InvalidInput(format!(
                "cannot infer the format of {}; pass it explicitly",
                path.display()
            ))
        })?,
    };
    let source: Box<dyn ArraySource> = match format {
        FileFormat::Csv => Box::new(read_csv(path)?),
        FileFormat::Npy => Box::new(read_npy(path)?),
        #[cfg(feature = "hdf5")]
        FileFormat::Hdf5 => Box::new(open_hdf5(
            path,
            options.selector.dataset_path.as_deref().unwrap_or(DEFAULT_DATASET_PATH),
        )?),
        #[cfg(not(feature = "hdf5"))]
        FileFormat::Hdf5 => {
            return Err(Error::InvalidInput("built without HDF5 support".into()));
        }
    };
    if source.shape().len() < 2 {
        return Err(Error::Shape(format!(
            "{}: array has {} dimension(s), need at least 2",
            path.display(),
            source.shape().len()
        )));
    }
    Ok(source)
}

fn check_lead(shape: &[usize], lead: &[usize]) -> Result<()> {
    for (axis, (&i, &d)) in lead.iter().zip(shape).enumerate() {
        if i >= d {
            return Err(Error::InvalidInput(format!(
                "index {i} out of range for axis {axis} of length {d}"
            )));
        }
    }
    Ok(())
}

fn to_field(values: Vec<f64>, rows: usize, cols: usize, options: &LoadOptions, what: &str) -> Result<Field2D> {
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "{what}: non-finite value at ({}, {})",
            pos / cols,
            pos % cols
        )));
    }
    let conforming = rows >= 2 && cols >= 2 && rows.is_power_of_two() && cols.is_power_of_two();
    if conforming {
        return Field2D::new(values, rows, cols);
    }
    match options.resample {
        Some(boundary) => {
            let (r, c) = (rows.next_power_of_two().max(2), cols.next_power_of_two().max(2));
            let resampled = resample_grid(&values, rows, cols, r, c, boundary)?;
            Field2D::new(resampled, r, c)
        }
        None => Err(Error::Shape(format!(
            "{what}: {rows}x{cols} is not a power-of-two grid; enable resample-on-load"
        ))),
    }
}

/// Load one 2D field.
pub fn load_field(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Field2D> {
    let path = path.as_ref();
    let source = open_source(path, options)?;
    let shape = source.shape().to_vec();
    let nd = shape.len();
    let index = &options.selector.index;
    if index.len() > nd - 2 {
        return Err(Error::InvalidInput(format!(
            "{} indices given for a {nd}-dimensional array",
            index.len()
        )));
    }
    let mut lead = index.clone();
    lead.resize(nd - 2, 0);
    check_lead(&shape, &lead)?;
    let values = source.slice(&lead)?;
    to_field(values, shape[nd - 2], shape[nd - 1], options, &path.display().to_string())
}

/// Load every 2D slice along the axis just after the fixed leading indices.
///
/// For a `(traj, time, x, y)` array with `index = [2]` this is trajectory 2
/// at every time step. A 2D array yields a single field.
pub fn load_stack(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Vec<Field2D>> {
    let path = path.as_ref();
    let source = open_source(path, options)?;
    let shape = source.shape().to_vec();
    let nd = shape.len();
    if nd == 2 {
        return load_field(path, options).map(|f| vec![f]);
    }
    let index = &options.selector.index;
    if index.len() > nd - 3 {
        return Err(Error::InvalidInput(format!(
            "{} indices given; a stack of a {nd}-dimensional array takes at most {}",
            index.len(),
            nd - 3
        )));
    }
    let mut prefix = index.clone();
    prefix.resize(nd - 3, 0);
    check_lead(&shape, &prefix)?;
    let axis = nd - 3;
    (0..shape[axis])
        .map(|t| {
            let mut lead = prefix.clone();
            lead.push(t);
            let values = source.slice(&lead)?;
            to_field(values, shape[nd - 2], shape[nd - 1], options, &format!("{} [{t}]", path.display()))
        })
        .collect()
}

/// Write a field as a 2D array (`npy` or `csv`; HDF5 output is not supported).
pub fn write_field(field: &Field2D, path: impl AsRef<Path>, format: FileFormat) -> Result<()> {
    let path = path.as_ref();
    match format {
        FileFormat::Npy => atomic_write(path, |w: &mut BufWriter<File>| {
            let mut writer = npyz::WriteOptions::new()
                .default_dtype()
                .shape(&[field.rows() as u64, field.cols() as u64])
                .writer(w)
                .begin_nd()?;
            writer.extend(field.values().iter().copied())?;
            writer.finish()
        }),
        FileFormat::Csv => atomic_write(path, |w: &mut BufWriter<File>| {
            for row in field.values().chunks(field.cols()) {
                let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
                writeln!(w, "{}", line.join(","))?;
            }
            Ok(())
        }),
        FileFormat::Hdf5 => Err(Error::InvalidInput("writing HDF5 is not supported".into())),
    }
}
