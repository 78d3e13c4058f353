use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use wabc::timeseries::Series;
use wabc::{OutputKind, PointCloud};

use crate::CliError;

/// Columns that never hold parameter values.
const BOOKKEEPING: [&str; 4] = ["chain", "iteration", "logpost", "dist"];

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Reads a data file: a series when the first header field is `t`, a plain
/// point cloud otherwise.
pub fn read_data(path: &Path) -> Result<PointCloud, CliError> {
    let text = read_text(path)?;
    let first = text.lines().next().unwrap_or("").split(',').next().unwrap_or("").trim().to_string();
    let parsed = if first == "t" {
        Series::read_csv(text.as_bytes()).map(Series::into_cloud)
    } else {
        PointCloud::read_csv(text.as_bytes())
    };
    parsed.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn data_csv(kind: OutputKind, data: &PointCloud) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    match kind {
        OutputKind::Series => Series::new(data.clone()).write_csv(&mut buf)?,
        OutputKind::Iid => data.write_csv(&mut buf)?,
    }
    Ok(buf)
}

/// Parameter columns of a particle or chain file, skipping bookkeeping columns.
pub fn read_theta_columns(path: &Path) -> Result<(Vec<String>, PointCloud), CliError> {
    let text = read_text(path)?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| CliError::Usage(format!("{}: missing header row", path.display())))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let keep: Vec<usize> = (0..header.len())
        .filter(|&j| !BOOKKEEPING.contains(&header[j].as_str()))
        .collect();
    if keep.is_empty() {
        return Err(CliError::Usage(format!("{}: no parameter columns", path.display())));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(CliError::Usage(format!(
                "{}: line {} has {} fields, expected {}",
                path.display(),
                i + 2,
                fields.len(),
                header.len()
            )));
        }
        let row: Result<Vec<f64>, _> = keep.iter().map(|&j| fields[j].trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| CliError::Usage(format!("{}: line {}: {e}", path.display(), i + 2)))?);
    }
    let cloud = PointCloud::from_rows(&rows).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok((keep.into_iter().map(|j| header[j].clone()).collect(), cloud))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
        }
    }
    let f = fs::File::create(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(f);
    w.write_all(bytes)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

/// Writes to `path`, or to stdout when it is absent.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(p, bytes),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Runtime(format!("stdout: {e}"))),
    }
}
