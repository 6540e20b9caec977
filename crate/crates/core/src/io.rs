//! Field artifacts and report files.
//!
//! Binary field layout (all little endian):
//!
//! ```text
//! magic    "EWIF"
//! version  u16
//! kind     u8    0 = real f64, 1 = complex f32 pairs, 2 = complex f64 pairs
//! space    u8    0 = node values, 1 = Fourier coefficients (FFT order)
//! d        u32
//! d times  n u64, a f64, b f64
//! payload  row-major samples (axis 0 slowest)
//! ```

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ewi::{SchemeSummary, Trajectory};
use crate::experiments::{ConvergenceReport, DynamicsReport, StrichartzReport};
use crate::field::SpectralField;
use crate::grid::{Grid, GridSpec};
use crate::norm::NormKind;
use crate::potential::PotentialField;

pub const MAGIC: &[u8; 4] = b"EWIF";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleKind {
    RealF64,
    ComplexF32,
    ComplexF64,
}

impl SampleKind {
    fn code(self) -> u8 {
        match self {
            SampleKind::RealF64 => 0,
            SampleKind::ComplexF32 => 1,
            SampleKind::ComplexF64 => 2,
        }
    }

    fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(SampleKind::RealF64),
            1 => Ok(SampleKind::ComplexF32),
            2 => Ok(SampleKind::ComplexF64),
            c => Err(Error::Format(format!("unknown sample kind {c}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Space {
    Nodes,
    Fourier,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArtifactHeader {
    pub version: u16,
    pub kind: SampleKind,
    pub space: Space,
    pub grid: GridSpec,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Writes raw samples with a header for `grid`.
pub fn write_samples(path: &Path, grid: &Grid, kind: SampleKind, space: Space, samples: &[Complex64]) -> Result<()> {
    if samples.len() != grid.len() {
        return Err(Error::SizeMismatch {
            expected: grid.len(),
            got: samples.len(),
        });
    }
    let io = |e| Error::io(path, e);
    let mut w = create(path)?;
    w.write_all(MAGIC).map_err(io)?;
    w.write_u16::<LE>(FORMAT_VERSION).map_err(io)?;
    w.write_u8(kind.code()).map_err(io)?;
    w.write_u8(matches!(space, Space::Fourier) as u8).map_err(io)?;
    w.write_u32::<LE>(grid.dim() as u32).map_err(io)?;
    for (j, &(a, b)) in grid.bounds().iter().enumerate() {
        w.write_u64::<LE>(grid.shape()[j] as u64).map_err(io)?;
        w.write_f64::<LE>(a).map_err(io)?;
        w.write_f64::<LE>(b).map_err(io)?;
    }
    for s in samples {
        match kind {
            SampleKind::RealF64 => w.write_f64::<LE>(s.re),
            SampleKind::ComplexF32 => w
                .write_f32::<LE>(s.re as f32)
                .and_then(|_| w.write_f32::<LE>(s.im as f32)),
            SampleKind::ComplexF64 => w.write_f64::<LE>(s.re).and_then(|_| w.write_f64::<LE>(s.im)),
        }
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Stores a field as complex node values or coefficients.
pub fn write_field(path: &Path, field: &SpectralField, kind: SampleKind, space: Space) -> Result<()> {
    match space {
        Space::Nodes => write_samples(path, field.grid(), kind, space, &field.values()),
        Space::Fourier => write_samples(path, field.grid(), kind, space, field.coeffs()),
    }
}

/// Stores `|ψ|²` at the nodes as real samples.
pub fn write_density(path: &Path, field: &SpectralField) -> Result<()> {
    let density: Vec<Complex64> = field.values().iter().map(|v| Complex64::new(v.norm_sqr(), 0.0)).collect();
    write_samples(path, field.grid(), SampleKind::RealF64, Space::Nodes, &density)
}

/// Stores the fine-grid samples of a realized potential.
pub fn write_potential(path: &Path, potential: &PotentialField) -> Result<()> {
    let values: Vec<Complex64> = potential.fine_values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    write_samples(path, potential.fine_grid(), SampleKind::RealF64, Space::Nodes, &values)
}

fn read_header_from(r: &mut impl Read, path: &Path) -> Result<ArtifactHeader> {
    let io = |e| Error::io(path, e);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("{}: not a field artifact", path.display())));
    }
    let version = r.read_u16::<LE>().map_err(io)?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("{}: unsupported version {version}", path.display())));
    }
    let kind = SampleKind::from_code(r.read_u8().map_err(io)?)?;
    let space = match r.read_u8().map_err(io)? {
        0 => Space::Nodes,
        1 => Space::Fourier,
        s => return Err(Error::Format(format!("unknown space code {s}"))),
    };
    let d = r.read_u32::<LE>().map_err(io)? as usize;
    if !(1..=3).contains(&d) {
        return Err(Error::Format(format!("dimension {d} out of range")));
    }
    let mut grid = GridSpec {
        bounds: Vec::with_capacity(d),
        n: Vec::with_capacity(d),
    };
    for _ in 0..d {
        grid.n.push(r.read_u64::<LE>().map_err(io)? as usize);
        let a = r.read_f64::<LE>().map_err(io)?;
        let b = r.read_f64::<LE>().map_err(io)?;
        grid.bounds.push([a, b]);
    }
    Ok(ArtifactHeader {
        version,
        kind,
        space,
        grid,
    })
}

pub fn read_header(path: &Path) -> Result<ArtifactHeader> {
    let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    read_header_from(&mut r, path)
}

/// Reads header and raw samples.
pub fn read_samples(path: &Path) -> Result<(ArtifactHeader, Vec<Complex64>)> {
    let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let header = read_header_from(&mut r, path)?;
    let io = |e| Error::io(path, e);
    let len: usize = header.grid.n.iter().product();
    let mut samples = Vec::with_capacity(len);
    for _ in 0..len {
        let s = match header.kind {
            SampleKind::RealF64 => Complex64::new(r.read_f64::<LE>().map_err(io)?, 0.0),
            SampleKind::ComplexF32 => {
                let re = r.read_f32::<LE>().map_err(io)?;
                let im = r.read_f32::<LE>().map_err(io)?;
                Complex64::new(re as f64, im as f64)
            }
            SampleKind::ComplexF64 => {
                let re = r.read_f64::<LE>().map_err(io)?;
                Complex64::new(re, r.read_f64::<LE>().map_err(io)?)
            }
        };
        samples.push(s);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(io)? != 0 {
        return Err(Error::Format(format!("{}: trailing bytes after payload", path.display())));
    }
    Ok((header, samples))
}

/// Reads any artifact as a field on its own grid.
pub fn read_field(path: &Path) -> Result<SpectralField> {
    let (header, samples) = read_samples(path)?;
    let grid = Arc::new(Grid::from_spec(&header.grid)?);
    match header.space {
        Space::Nodes => SpectralField::from_values(&grid, samples),
        Space::Fourier => SpectralField::from_coeffs(&grid, samples),
    }
}

/// Pretty JSON with a trailing newline; struct field order is fixed, so equal
/// values give equal bytes.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| format!("{v:e}")).unwrap_or_default()
}

/// Run identification stored in every manifest.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub preset: Option<String>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a, T: Serialize> {
    run: &'a RunInfo,
    #[serde(flatten)]
    report: &'a T,
}

/// Paths written for a convergence report.
#[derive(Clone, Debug)]
pub struct ReportFiles {
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub plots: Vec<PathBuf>,
    pub timings: PathBuf,
}

/// `errors.csv`, `manifest.json`, one `loglog_<norm>.dat` per norm and
/// `timings.json`. Everything but the timings is a pure function of the
/// report.
pub fn write_report(report: &ConvergenceReport, run: &RunInfo, dir: &Path) -> Result<ReportFiles> {
    let csv = dir.join("errors.csv");
    write_csv(
        &csv,
        &["tau", "err_L2", "err_H1"],
        report
            .rows
            .iter()
            .filter(|r| r.failure.is_none())
            .map(|r| vec![format!("{:e}", r.tau), cell(r.err_l2), cell(r.err_h1)]),
    )?;
    let manifest = dir.join("manifest.json");
    write_json(&manifest, &Manifest { run, report })?;
    let mut plots = Vec::new();
    for &kind in &report.norms {
        let name = match kind {
            NormKind::L2 => "L2",
            NormKind::H1 => "H1",
            NormKind::Lp(_) => continue,
        };
        let mut text = format!("# log10(tau) log10(err_{name})\n");
        for r in report.rows.iter().filter(|r| r.failure.is_none()) {
            if let Some(e) = r.error(kind).filter(|e| *e > 0.0) {
                text.push_str(&format!("{:e} {:e}\n", r.tau.log10(), e.log10()));
            }
        }
        let path = dir.join(format!("loglog_{name}.dat"));
        write_text(&path, &text)?;
        plots.push(path);
    }
    let timings = dir.join("timings.json");
    write_json(&timings, &report.timings)?;
    Ok(ReportFiles {
        csv,
        manifest,
        plots,
        timings,
    })
}

pub fn write_strichartz(report: &StrichartzReport, run: &RunInfo, dir: &Path) -> Result<()> {
    write_csv(
        &dir.join("strichartz.csv"),
        &["tau", "samples", "norm", "ratio"],
        report.rows.iter().map(|r| {
            vec![
                format!("{:e}", r.tau),
                r.samples.to_string(),
                format!("{:e}", r.norm),
                format!("{:e}", r.ratio),
            ]
        }),
    )?;
    write_json(&dir.join("manifest.json"), &Manifest { run, report })
}

/// Sidecar of a density snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub step: usize,
    pub time: f64,
    pub quantity: String,
    pub l2: f64,
    pub file: String,
}

#[derive(Serialize)]
struct DynamicsManifest<'a> {
    run: &'a RunInfo,
    tau: f64,
    steps: usize,
    relative_mass_drift: f64,
    first_approach: &'a Option<crate::experiments::Approach>,
    ground_state: &'a Option<crate::experiments::GroundStateSummary>,
    snapshots: Vec<SnapshotMeta>,
}

/// Density snapshots with sidecars under `snapshots/`, plus `mass.csv`,
/// `centroid.csv` and `manifest.json`. Returns the snapshot paths.
pub fn write_dynamics(report: &DynamicsReport, run: &RunInfo, dir: &Path) -> Result<Vec<PathBuf>> {
    let snap_dir = dir.join("snapshots");
    let mut metas = Vec::new();
    let mut paths = Vec::new();
    for s in &report.snapshots {
        let name = format!("density_{:07}.ewif", s.step);
        let path = snap_dir.join(&name);
        write_density(&path, &s.field)?;
        let meta = SnapshotMeta {
            step: s.step,
            time: s.time,
            quantity: "density".into(),
            l2: s.field.mass().sqrt(),
            file: name,
        };
        write_json(&path.with_extension("json"), &meta)?;
        metas.push(meta);
        paths.push(path);
    }
    write_csv(
        &dir.join("mass.csv"),
        &["step", "time", "l2"],
        report
            .mass_trace
            .iter()
            .enumerate()
            .map(|(n, m)| vec![n.to_string(), format!("{:e}", n as f64 * report.tau), format!("{m:e}")]),
    )?;
    let dims = report.centroids.first().map_or(0, |c| c.len());
    let mut header = vec!["step".to_string(), "time".to_string()];
    header.extend((0..dims).map(|j| format!("x{j}")));
    let header: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    write_csv(
        &dir.join("centroid.csv"),
        &header,
        report.centroids.iter().enumerate().map(|(n, c)| {
            let mut row = vec![n.to_string(), format!("{:e}", n as f64 * report.tau)];
            row.extend(c.iter().map(|x| format!("{x:e}")));
            row
        }),
    )?;
    write_json(
        &dir.join("manifest.json"),
        &DynamicsManifest {
            run,
            tau: report.tau,
            steps: report.mass_trace.len().saturating_sub(1),
            relative_mass_drift: report.relative_mass_drift,
            first_approach: &report.first_approach,
            ground_state: &report.ground_state,
            snapshots: metas,
        },
    )?;
    Ok(paths)
}

#[derive(Serialize)]
struct TrajectoryManifest<'a> {
    run: &'a RunInfo,
    scheme: &'a SchemeSummary,
    steps: usize,
    max_mass_drift: f64,
    states: Vec<String>,
}

/// Complex node values of every snapshot, `mass.csv` and `manifest.json`.
pub fn write_trajectory(traj: &Trajectory, scheme: &SchemeSummary, run: &RunInfo, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    let mut names = Vec::new();
    for s in &traj.snapshots {
        let name = format!("state_{:07}.ewif", s.step);
        let path = dir.join(&name);
        write_field(&path, &s.field, SampleKind::ComplexF64, Space::Nodes)?;
        paths.push(path);
        names.push(name);
    }
    let start = traj.snapshots.first().map_or(0, |s| s.step);
    write_csv(
        &dir.join("mass.csv"),
        &["step", "time", "l2"],
        traj.mass_trace.iter().enumerate().map(|(k, m)| {
            let n = start + k;
            vec![n.to_string(), format!("{:e}", n as f64 * scheme.tau), format!("{m:e}")]
        }),
    )?;
    write_json(
        &dir.join("manifest.json"),
        &TrajectoryManifest {
            run,
            scheme,
            steps: traj.mass_trace.len().saturating_sub(1),
            max_mass_drift: traj.max_mass_drift(),
            states: names,
        },
    )?;
    Ok(paths)
}

#[cfg(test)]
mod tests;
