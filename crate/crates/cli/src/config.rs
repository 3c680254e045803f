//! Run configuration: a versioned JSON file plus command-line overrides.
//!
//! Precedence is flag > file > built-in default. Relative paths in the file are resolved
//! against the directory that contains it.

use crate::error::CliError;
use duplex::media::{LayerSpec, MaterialFile};
use duplex::UnitsMode;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

pub const CATALOG: [&str; 11] = [
    "optical_theorem",
    "resolvent",
    "interior",
    "poynting",
    "reciprocity",
    "lorentz_reciprocity",
    "huygens",
    "commutator_closure",
    "io_noise",
    "pseudo_unitarity",
    "cascade",
];

/// Relative tolerance applied when neither the file nor `--tol` sets one.
pub fn default_tolerance(identity: &str) -> f64 {
    match identity {
        "reciprocity" => 1e-10,
        "huygens" | "pseudo_unitarity" => 1e-12,
        "resolvent" | "commutator_closure" | "io_noise" | "cascade" => 1e-6,
        _ => 1e-8,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    /// Bounding planes `[a, b]` of the verification box.
    #[serde(rename = "box")]
    pub bounds: [f64; 2],
    /// Observation pairs `(z1, z2)` strictly inside the box.
    pub pairs: Vec<[f64; 2]>,
    /// Material used for the uniform-absorber checks; defaults to the first layer's material.
    #[serde(default)]
    pub absorber: Option<String>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub order: usize,
    pub panels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { order: 64, panels: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// Closed-form kernel of the layer stack (reduces to the homogeneous one without layers).
    Stratified,
    /// Staggered finite-difference resolvent sampled at the nearest nodes.
    Fd,
    /// Homogeneous 3D kernel of `medium_3d`.
    #[serde(rename = "homogeneous_3d")]
    Homogeneous3d,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Medium3d {
    pub eps: [f64; 2],
    pub mu: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreenSpec {
    pub kinds: Vec<KernelKind>,
    /// `(z, z′)` pairs for the planar kernels.
    #[serde(default)]
    pub points: Vec<[f64; 2]>,
    /// `(r, r′)` pairs for the 3D kernel.
    #[serde(default)]
    pub points_3d: Vec<[[f64; 3]; 2]>,
    #[serde(default)]
    pub medium_3d: Option<Medium3d>,
    /// Grid cells per shortest wavelength for the FD kernel.
    #[serde(default = "default_cells")]
    pub fd_cells_per_wavelength: usize,
    /// Artificial loss added by the FD kernel, in units of k0.
    #[serde(default = "default_eta")]
    pub fd_eta: f64,
}

fn default_cells() -> usize {
    200
}

fn default_eta() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    #[serde(default)]
    pub layers: Vec<LayerSpec>,
    pub z_from: f64,
    pub z_to: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    #[serde(default)]
    pub units: UnitsMode,
    pub frequencies: Vec<f64>,
    #[serde(default = "default_kperp")]
    pub k_perp: Vec<[f64; 2]>,
    pub material_file: PathBuf,
    #[serde(default)]
    pub geometry: Option<Geometry>,
    #[serde(default)]
    pub identities: Option<Vec<String>>,
    /// Overrides every per-identity tolerance.
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub green: Option<GreenSpec>,
    #[serde(default)]
    pub chain: Option<Vec<StageSpec>>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_kperp() -> Vec<[f64; 2]> {
    vec![[0.0, 0.0]]
}

/// Values given on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub identities: Option<Vec<String>>,
    pub units: Option<UnitsMode>,
}

/// A validated configuration with its material file loaded.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub materials: MaterialFile,
    pub identities: Vec<String>,
    pub out_dir: PathBuf,
    /// SHA-256 over the effective configuration and the material file contents.
    pub hash: String,
}

impl Loaded {
    pub fn tolerance(&self, identity: &str) -> f64 {
        self.config
            .tolerance
            .or_else(|| self.config.tolerances.get(identity).copied())
            .unwrap_or_else(|| default_tolerance(identity))
    }

    pub fn slices(&self) -> Vec<(f64, [f64; 2])> {
        let mut out = vec![];
        for &w in &self.config.frequencies {
            for &k in &self.config.k_perp {
                out.push((w, k));
            }
        }
        out
    }

    pub fn geometry(&self) -> Result<&Geometry, CliError> {
        self.config.geometry.as_ref().ok_or_else(|| CliError::Config("'geometry' is required for verify".into()))
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })
}

pub fn load(path: &Path, over: &Overrides) -> Result<Loaded, CliError> {
    let text = read(path)?;
    let mut config: RunConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if config.schema != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "{}: schema {} is not supported (expected {SCHEMA_VERSION})",
            path.display(),
            config.schema
        )));
    }
    let base = path.parent().unwrap_or(Path::new("."));
    if config.material_file.is_relative() {
        config.material_file = base.join(&config.material_file);
    }
    if let Some(u) = over.units {
        config.units = u;
    }
    if let Some(t) = over.tol {
        config.tolerance = Some(t);
    }
    if let Some(ids) = &over.identities {
        config.identities = Some(ids.clone());
    }
    let out_dir = match (&over.out, &config.output) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) if o.is_relative() => base.join(o),
        (None, Some(o)) => o.clone(),
        (None, None) => PathBuf::from("duplex-out"),
    };
    validate(&config)?;

    let material_text = read(&config.material_file)?;
    let materials = MaterialFile::from_json(&material_text)
        .map_err(|e| CliError::Config(format!("{}: {e}", config.material_file.display())))?;
    if let Some(chain) = &config.chain {
        for (i, s) in chain.iter().enumerate() {
            stage_file(&materials, s).map_err(|e| CliError::Config(format!("chain stage {}: {e}", i + 1)))?;
        }
    }
    let identities = match &config.identities {
        Some(list) => list.clone(),
        None => CATALOG.iter().map(|s| s.to_string()).collect(),
    };
    for id in &identities {
        if !CATALOG.contains(&id.as_str()) {
            return Err(CliError::UnknownIdentity(id.clone()));
        }
    }

    let mut h = Sha256::new();
    h.update(serde_json::to_vec(&config).map_err(|e| CliError::Config(e.to_string()))?);
    h.update(material_text.as_bytes());
    let hash = hex::encode(h.finalize());
    Ok(Loaded { config, materials, identities, out_dir, hash })
}

/// Material file restricted to one chain stage's layers.
pub fn stage_file(materials: &MaterialFile, stage: &StageSpec) -> duplex::Result<MaterialFile> {
    let f = MaterialFile { materials: materials.materials.clone(), layers: stage.layers.clone() };
    f.validate()?;
    Ok(f)
}

fn validate(c: &RunConfig) -> Result<(), CliError> {
    let bad = |m: String| Err(CliError::Config(m));
    if c.frequencies.is_empty() {
        return bad("frequency grid is empty".into());
    }
    if c.frequencies.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        return bad("frequencies must be positive and finite".into());
    }
    if c.k_perp.is_empty() {
        return bad("k_perp grid is empty".into());
    }
    if c.k_perp.iter().flatten().any(|k| !k.is_finite()) {
        return bad("k_perp entries must be finite".into());
    }
    for (name, t) in c.tolerance.iter().map(|t| ("tolerance", t)).chain(c.tolerances.iter().map(|(k, t)| (k.as_str(), t))) {
        if !(*t > 0.0) {
            return bad(format!("tolerance for {name} must be positive"));
        }
    }
    for k in c.tolerances.keys() {
        if !CATALOG.contains(&k.as_str()) {
            return Err(CliError::UnknownIdentity(k.clone()));
        }
    }
    if c.quadrature.order < duplex::identities::MIN_ORDER || c.quadrature.panels == 0 {
        return bad(format!("quadrature needs order >= {} and at least one panel", duplex::identities::MIN_ORDER));
    }
    if let Some(g) = &c.geometry {
        let [a, b] = g.bounds;
        if !(b > a) {
            return bad(format!("geometry box [{a}, {b}] is empty"));
        }
        if g.pairs.is_empty() {
            return bad("geometry needs at least one observation pair".into());
        }
        for &[z1, z2] in &g.pairs {
            if !(z1 > a && z1 < b && z2 > a && z2 < b) {
                return bad(format!("pair ({z1}, {z2}) is not strictly inside the box"));
            }
            if z1 == z2 {
                return bad(format!("pair ({z1}, {z2}) has coincident points"));
            }
        }
    }
    if let Some(g) = &c.green {
        if g.kinds.is_empty() {
            return bad("green.kinds is empty".into());
        }
        if g.kinds.contains(&KernelKind::Homogeneous3d) && (g.medium_3d.is_none() || g.points_3d.is_empty()) {
            return bad("homogeneous_3d needs medium_3d and points_3d".into());
        }
        if g.kinds.iter().any(|k| *k != KernelKind::Homogeneous3d) && g.points.is_empty() {
            return bad("planar kernels need green.points".into());
        }
        if g.fd_cells_per_wavelength < 4 || !(g.fd_eta >= 0.0) {
            return bad("fd_cells_per_wavelength must be >= 4 and fd_eta >= 0".into());
        }
    }
    Ok(())
}
