//! Scenario resolution: preset, then config file, then command-line flags,
//! later layers overriding earlier ones.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use nematic::scenario::{Preset, Scenario};

use crate::{CliError, CliResult};

/// The config file surface. Sections and keys are a strict set: unknown
/// keys are configuration errors, not silent no-ops.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<String>,
    #[serde(default)]
    pub mesh: MeshSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    /// Cells per unit length, applied to every axis (scaled by the box).
    pub resolution: Option<usize>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub nz: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kappa: Option<f64>,
    pub dt: Option<f64>,
    pub potential: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub max_steps: Option<usize>,
    pub stride: Option<usize>,
    /// Stop once decrement + |t|^2 drops below this factor times (1 + |E0|).
    pub stop_tol: Option<f64>,
    pub cg_tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

/// Flag-level overrides, applied on top of the config file.
#[derive(Debug, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub max_steps: Option<usize>,
    pub stride: Option<usize>,
    pub tol: Option<f64>,
}

/// Everything a run needs, fully resolved.
#[derive(Debug)]
pub struct Settings {
    pub scenario: Scenario,
    pub out_dir: PathBuf,
    pub stride: usize,
}

fn load_file(path: &Path) -> CliResult<ConfigFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Resolve preset + config file + flags into run settings.
pub fn resolve(ov: &Overrides) -> CliResult<Settings> {
    let file = match &ov.config {
        Some(path) => load_file(path)?,
        None => ConfigFile::default(),
    };

    let preset_name = ov
        .preset
        .clone()
        .or_else(|| file.preset.clone())
        .ok_or_else(|| {
            CliError::Config(
                "no scenario selected: pass --preset or set `preset` in the config file".into(),
            )
        })?;
    let mut sc = Scenario::preset(Preset::parse(&preset_name)?);

    if let Some(r) = file.mesh.resolution {
        if r == 0 {
            return Err(CliError::Config("mesh.resolution must be at least 1".into()));
        }
        sc = sc.with_resolution(r);
    }
    if let Some(nx) = file.mesh.nx {
        sc.nx = nx;
    }
    if let Some(ny) = file.mesh.ny {
        sc.ny = ny;
    }
    if let Some(nz) = file.mesh.nz {
        sc.nz = nz;
    }
    if sc.nx == 0 || sc.ny == 0 || (sc.dim == 3 && sc.nz == 0) {
        return Err(CliError::Config("mesh axes need at least one cell each".into()));
    }

    if let Some(kappa) = file.model.kappa {
        if !(kappa > 0.0) {
            return Err(CliError::Config(format!("kappa must be positive, got {kappa}")));
        }
        sc.kappa = kappa;
    }
    if let Some(dt) = file.model.dt {
        if !(dt > 0.0) {
            return Err(CliError::Config(format!("dt must be positive, got {dt}")));
        }
        sc.dt = dt;
    }
    if let Some(on) = file.model.potential {
        sc.potential_enabled = on;
    }

    if let Some(m) = file.run.max_steps {
        sc.max_steps = m;
    }
    if let Some(t) = file.run.stop_tol {
        sc.stop_tol_factor = t;
    }
    if let Some(t) = file.run.cg_tol {
        if !(t > 0.0) {
            return Err(CliError::Config(format!("run.cg_tol must be positive, got {t}")));
        }
        sc.cg_rel_tol = t;
    }

    if let Some(m) = ov.max_steps {
        sc.max_steps = m;
    }
    if let Some(t) = ov.tol {
        if t < 0.0 {
            return Err(CliError::Config(format!("--tol must be nonnegative, got {t}")));
        }
        sc.stop_tol_factor = t;
    }

    let stride = ov.stride.or(file.run.stride).unwrap_or(10);
    if stride == 0 {
        return Err(CliError::Config("stride must be at least 1".into()));
    }

    let out_dir = ov
        .out
        .clone()
        .or_else(|| file.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));

    Ok(Settings { scenario: sc, out_dir, stride })
}
