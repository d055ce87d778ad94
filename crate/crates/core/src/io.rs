//! File formats: scattering-data files (TOML or JSON), CSV tables with
//! 17 significant digits and JSON run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{validation, OvError, Result};
use crate::spectral::{BasePole, PoleKind, Reflection, SampledReflection, ScatteringData};

/// Format tag written into every data file and manifest.
pub const FORMAT_VERSION: &str = "ov-1";

/// One base pole as stored on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleRecord {
    pub re: f64,
    pub im: f64,
    pub c_re: f64,
    pub c_im: f64,
    pub kind: PoleKind,
}

/// Scattering data on disk. `reflection` is `"zero"` or a CSV path
/// (columns `z,re,im`) relative to the file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringFile {
    #[serde(default = "default_format")]
    pub format: String,
    #[serde(default = "default_reflection")]
    pub reflection: String,
    #[serde(default)]
    pub poles: Vec<PoleRecord>,
}

fn default_format() -> String {
    FORMAT_VERSION.to_string()
}

fn default_reflection() -> String {
    "zero".to_string()
}

impl ScatteringFile {
    pub fn from_poles(poles: &[BasePole], reflection: &str) -> Self {
        ScatteringFile {
            format: default_format(),
            reflection: reflection.to_string(),
            poles: poles
                .iter()
                .map(|p| PoleRecord { re: p.xi.re, im: p.xi.im, c_re: p.c.re, c_im: p.c.im, kind: p.kind })
                .collect(),
        }
    }

    /// Validated base poles. Errors name the offending entry.
    pub fn base_poles(&self) -> Result<Vec<BasePole>> {
        self.poles
            .iter()
            .enumerate()
            .map(|(k, p)| {
                BasePole::new(C64::new(p.re, p.im), C64::new(p.c_re, p.c_im), p.kind)
                    .map_err(|e| OvError::Validation(format!("pole #{k} (xi = {} + {}i): {e}", p.re, p.im)))
            })
            .collect()
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn parse_err(path: &Path, e: impl std::fmt::Display) -> OvError {
    OvError::Validation(format!("{}: {e}", path.display()))
}

/// Reads a scattering file and the reflection samples it points to.
pub fn read_scattering(path: &Path) -> Result<ScatteringData> {
    let text = fs::read_to_string(path)?;
    let file: ScatteringFile = if is_json(path) {
        serde_json::from_str(&text).map_err(|e| parse_err(path, e))?
    } else {
        toml::from_str(&text).map_err(|e| parse_err(path, e))?
    };
    if file.format != FORMAT_VERSION {
        return validation(format!("{}: unsupported format {:?}", path.display(), file.format));
    }
    let poles = file.base_poles()?;
    let reflection = if file.reflection == "zero" {
        Reflection::Zero
    } else {
        let base = path.parent().unwrap_or(Path::new("."));
        Reflection::Sampled(read_reflection_csv(&base.join(&file.reflection))?)
    };
    ScatteringData::new(reflection, poles)
}

/// Writes a scattering file; a sampled reflection goes to `<stem>.r.csv`.
pub fn write_scattering(path: &Path, data: &ScatteringData) -> Result<()> {
    let reflection = match &data.reflection {
        Reflection::Zero => "zero".to_string(),
        Reflection::Sampled(s) => {
            let name = format!(
                "{}.r.csv",
                path.file_stem().and_then(|s| s.to_str()).unwrap_or("scattering")
            );
            write_reflection_csv(&path.with_file_name(&name), s)?;
            name
        }
    };
    let file = ScatteringFile::from_poles(&data.poles, &reflection);
    let text = if is_json(path) {
        serde_json::to_string_pretty(&file).map_err(|e| parse_err(path, e))? + "\n"
    } else {
        toml::to_string(&file).map_err(|e| parse_err(path, e))?
    };
    fs::write(path, text)?;
    Ok(())
}

/// `z,re,im` rows on a uniform grid.
pub fn read_reflection_csv(path: &Path) -> Result<SampledReflection> {
    let rows = read_table(path, &["z", "re", "im"])?;
    let z: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let v: Vec<C64> = rows.iter().map(|r| C64::new(r[1], r[2])).collect();
    SampledReflection::new(&z, &v)
}

pub fn write_reflection_csv(path: &Path, r: &SampledReflection) -> Result<()> {
    let rows: Vec<Vec<String>> = r
        .grid()
        .iter()
        .zip(r.values())
        .map(|(z, v)| vec![num(*z), num(v.re), num(v.im)])
        .collect();
    write_csv(path, &["z", "re", "im"], &rows)
}

/// 17 significant digits in scientific notation.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a CSV with a header row.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| parse_err(path, e))?;
    w.write_record(header).map_err(|e| parse_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| parse_err(path, e))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads numeric columns by header name.
pub fn read_table(path: &Path, columns: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| parse_err(path, e))?;
    let header = r.headers().map_err(|e| parse_err(path, e))?.clone();
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| {
            header
                .iter()
                .position(|h| h.trim() == *c)
                .ok_or_else(|| OvError::Validation(format!("{}: missing column {c:?}", path.display())))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(path, e))?;
        let row = idx
            .iter()
            .map(|&i| {
                rec.get(i).unwrap_or("").trim().parse::<f64>().map_err(|e| {
                    OvError::Validation(format!("{}: row {}: {e}", path.display(), line + 2))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(row);
    }
    Ok(out)
}

/// Column names in a CSV header.
pub fn table_columns(path: &Path) -> Result<Vec<String>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| parse_err(path, e))?;
    Ok(r.headers().map_err(|e| parse_err(path, e))?.iter().map(|h| h.trim().to_string()).collect())
}

/// Run manifest: command, parameters and versions. Keys are sorted.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub format: String,
    pub command: String,
    pub crate_version: String,
    pub parameters: serde_json::Value,
    pub results: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, parameters: serde_json::Value, results: serde_json::Value) -> Self {
        Manifest {
            format: FORMAT_VERSION.to_string(),
            command: command.to_string(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            parameters,
            results,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        // round-trip through Value so every nested map is key-sorted
        let v = serde_json::to_value(self).map_err(|e| parse_err(path, e))?;
        let text = serde_json::to_string_pretty(&v).map_err(|e| parse_err(path, e))?;
        fs::write(path, text + "\n")?;
        Ok(())
    }
}

/// `out.csv -> out.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}
