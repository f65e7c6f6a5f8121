//! File input, synthetic initial conditions and report output.

mod load;
mod report;
mod synth;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub use load::{load_field, load_stack, write_field, FileFormat, LoadOptions, Selector, DEFAULT_DATASET_PATH};
pub use report::{read_report, render_report, write_report, BondProfile, MagicMeta, Report, ReportFormat, ReportMeta, TOOL_VERSION};
pub use synth::{synth_shear_ic, ShearIcParams, SHEAR_DOMAIN_X, SHEAR_DOMAIN_Y};

use crate::error::{Error, Result};

/// Write through a temporary sibling file and rename it over `path`, so a
/// failed write never leaves a partial file behind.
pub(crate) fn atomic_write(
    path: &Path,
    write: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = File::create(&tmp).and_then(|f| {
        let mut w = BufWriter::new(f);
        write(&mut w)?;
        w.flush()?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()
    });
    if let Err(e) = result.and_then(|_| std::fs::rename(&tmp, path)) {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}
