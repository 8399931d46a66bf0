//! End-to-end runs: load, solve, emit, and record a manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{ProgressRow, Solver, SolverConfig};
use crate::error::{OtError, Result};
use crate::grid::{BoundaryKind, GridSpec, RunReport};
use crate::io::{self, InputMode, LoadOptions, Normalization, OutputFormat};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub inputs: [PathBuf; 2],
    pub input_mode: InputMode,
    pub normalization: Normalization,
    pub time_steps: usize,
    pub spatial_boundary: BoundaryKind,
    pub color_boundary: BoundaryKind,
    pub config: SolverConfig,
    pub format: OutputFormat,
    /// Also write `(R+G+B)/3` frames for RGB inputs.
    #[serde(default)]
    pub intensity: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub run: RunSpec,
    pub grid: GridSpec,
    pub out_dir: PathBuf,
    pub frames: Vec<String>,
    #[serde(default)]
    pub intensity_frames: Vec<String>,
    pub report: RunReport,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        io::read_json(path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        io::write_json(path, self)
    }
}

impl RunSpec {
    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            time_steps: self.time_steps,
            spatial_boundary: self.spatial_boundary,
            color_boundary: self.color_boundary,
            normalization: self.normalization,
        }
    }
}

/// Runs `spec`, writes frames and `manifest.json` into `out_dir`.
pub fn execute(spec: &RunSpec, out_dir: &Path, progress: Option<&mut dyn FnMut(&ProgressRow)>) -> Result<RunManifest> {
    let spec = RunSpec {
        inputs: spec.inputs.clone().map(|p| io::absolute(&p)),
        ..spec.clone()
    };
    let (f0, f1, grid) = io::load_inputs(&spec.inputs[0], &spec.inputs[1], spec.input_mode, &spec.load_options())?;
    if spec.intensity && grid.color_axis().is_none() {
        return Err(OtError::InvalidArgument("intensity output needs RGB inputs".into()));
    }
    let solution = Solver::new(&grid, &f0, &f1, &spec.config)?.run(progress)?;
    let out_dir = io::absolute(out_dir);
    let frames = io::emit_frames(&solution.frames, &grid, &out_dir, spec.format)?;
    let intensity_frames = if spec.intensity {
        io::emit_intensity(&solution.frames, &grid, &out_dir)?
    } else {
        Vec::new()
    };
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").into(),
        run: spec,
        grid,
        out_dir: out_dir.clone(),
        frames,
        intensity_frames,
        report: solution.report,
    };
    manifest.write(&out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// Re-runs the job recorded in a manifest into `out_dir`.
pub fn replay(manifest_path: &Path, out_dir: &Path, progress: Option<&mut dyn FnMut(&ProgressRow)>) -> Result<RunManifest> {
    let old = RunManifest::read(manifest_path)?;
    execute(&old.run, out_dir, progress)
}
