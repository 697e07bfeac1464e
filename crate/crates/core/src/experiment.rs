//! Synthetic experiments: scene configuration, simulated measurements, the
//! two-stage pipeline and the eight result tables (location and shape tests
//! for rigid bodies and media, each without noise and at 5% noise).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dictionary::{DictionaryConfig, DictionaryEntry, DictionaryStore};
use crate::error::{Error, Result};
use crate::forward::{Discretization, ForwardModel, ScattererKind};
use crate::geometry::{build_dictionary_shapes, DirectionSet, MeasurementSurface, ReferenceShape, SamplingGrid};
use crate::imaging::{identify, locate, IndicatorChoice, LocationIndicator, Measurement, ShapeIndicator};
use crate::incident::Incident;
use crate::material::ElasticMaterial;
use crate::medium::DEFAULT_MAX_VOXELS;
use crate::rigid::DEFAULT_MAX_PANELS;
use crate::Vec3;

/// Background material, from engineering constants or Lamé coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MaterialConfig {
    Engineering { youngs_modulus: f64, poisson_ratio: f64 },
    Lame { lambda: f64, mu: f64 },
}

impl Default for MaterialConfig {
    fn default() -> Self {
        MaterialConfig::Engineering { youngs_modulus: 3.0, poisson_ratio: 0.475 }
    }
}

impl MaterialConfig {
    pub fn at(&self, omega: f64) -> Result<ElasticMaterial> {
        match *self {
            MaterialConfig::Engineering { youngs_modulus, poisson_ratio } => {
                ElasticMaterial::from_engineering(omega, youngs_modulus, poisson_ratio)
            }
            MaterialConfig::Lame { lambda, mu } => ElasticMaterial::new(omega, lambda, mu),
        }
    }
}

/// One synthetic scene and the settings of both reconstruction stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ScattererKind,
    /// True shape for single-scene commands.
    pub shape_id: usize,
    /// True location.
    pub z0: Vec3,
    pub material: MaterialConfig,
    /// Localization frequency `ω₁`.
    pub omega_locate: f64,
    /// Identification frequency `ω₂`.
    pub omega_identify: f64,
    /// Relative noise level `ε`.
    pub noise_level: f64,
    pub surface_side: f64,
    pub surface_points_per_side: usize,
    /// Polar nodes of the far-field sphere rule used by `I_s`.
    pub far_field_nodes: usize,
    pub grid_center: Vec3,
    pub grid_spacing: f64,
    pub grid_points_per_axis: usize,
    /// Point-source polarization, also the entry polarization `p`.
    pub polarization: Vec3,
    pub locate_discretization: Discretization,
    pub identify_discretization: Discretization,
    pub dictionary: DictionaryConfig,
    /// Store root; `<out>/dictionary` when absent.
    pub dictionary_dir: Option<PathBuf>,
    pub rng_seed: u64,
    pub indicator: IndicatorChoice,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ScattererKind::Rigid,
            shape_id: 1,
            z0: Vec3::new(40.0, 0.0, 0.0),
            material: MaterialConfig::default(),
            omega_locate: 1.0,
            omega_identify: 20.0,
            noise_level: 0.0,
            surface_side: 1.0,
            surface_points_per_side: 11,
            far_field_nodes: 16,
            grid_center: Vec3::new(40.0, 0.0, 0.0),
            grid_spacing: 0.25,
            grid_points_per_axis: 21,
            polarization: Vec3::new(0.0, 0.0, 1.0),
            locate_discretization: Discretization { voxel_budget: 216, ..Discretization::default() },
            identify_discretization: Discretization::default(),
            dictionary: DictionaryConfig::default(),
            dictionary_dir: None,
            rng_seed: 20_240_601,
            indicator: IndicatorChoice::Auto,
        }
    }
}

/// Which frequency a measurement is taken at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Locate,
    Identify,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.omega_locate > 0.0 && self.omega_locate < self.omega_identify && self.omega_identify.is_finite()) {
            return bad(format!("need 0 < ω₁ < ω₂, got {} and {}", self.omega_locate, self.omega_identify));
        }
        if !(self.noise_level >= 0.0 && self.noise_level.is_finite()) {
            return bad(format!("noise level must be >= 0, got {}", self.noise_level));
        }
        if !(1..=6).contains(&self.shape_id) {
            return bad(format!("shape id must be in 1..=6, got {}", self.shape_id));
        }
        for d in [&self.locate_discretization, &self.identify_discretization] {
            if d.panel_target > DEFAULT_MAX_PANELS || d.voxel_budget > DEFAULT_MAX_VOXELS {
                return bad(format!(
                    "discretization over the memory budget ({} panels, {} voxels)",
                    d.panel_target, d.voxel_budget
                ));
            }
        }
        if !(self.grid_spacing > 0.0) || self.grid_points_per_axis == 0 || self.grid_points_per_axis > 101 {
            return bad("sampling grid needs spacing > 0 and 1..=101 points per axis".into());
        }
        if self.surface_points_per_side < 2 || !(self.surface_side > 0.0) || self.far_field_nodes < 2 {
            return bad("surface needs side > 0, >= 2 points per side and >= 2 far-field nodes".into());
        }
        if !(self.polarization.norm() > 0.0) {
            return bad("polarization must be nonzero".into());
        }
        self.material.at(1.0).map_err(|e| Error::Config(e.to_string()))?;
        self.dictionary.validate()?;
        Ok(())
    }

    /// SHA-256 (hex) of the canonical JSON form.
    pub fn hash(&self) -> Result<String> {
        Ok(hex(&Sha256::digest(serde_json::to_vec(self)?)))
    }

    pub fn omega(&self, stage: Stage) -> f64 {
        match stage {
            Stage::Locate => self.omega_locate,
            Stage::Identify => self.omega_identify,
        }
    }

    pub fn discretization(&self, stage: Stage) -> &Discretization {
        match stage {
            Stage::Locate => &self.locate_discretization,
            Stage::Identify => &self.identify_discretization,
        }
    }

    pub fn surface(&self) -> Result<MeasurementSurface> {
        MeasurementSurface::square(self.surface_side, self.surface_points_per_side)
    }

    pub fn grid(&self) -> Result<SamplingGrid> {
        SamplingGrid::new(self.grid_center, self.grid_spacing, self.grid_points_per_axis)
    }

    pub fn shape(&self, id: usize) -> Result<ReferenceShape> {
        build_dictionary_shapes()
            .into_iter()
            .find(|s| s.id == id)
            .ok_or_else(|| Error::Config(format!("unknown shape id {id}")))
    }

    pub fn store_root(&self, out: &Path) -> PathBuf {
        self.dictionary_dir.clone().unwrap_or_else(|| out.join("dictionary"))
    }

    /// Noise seed for one scene, distinct per shape, kind and stage.
    fn noise_seed(&self, kind: ScattererKind, shape_id: usize, stage: Stage) -> u64 {
        let k = match kind {
            ScattererKind::Rigid => 0,
            ScattererKind::Medium => 1,
        };
        let s = match stage {
            Stage::Locate => 0,
            Stage::Identify => 1,
        };
        self.rng_seed ^ ((shape_id as u64) << 8 | k << 4 | s).wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Scattered field of shape `shape_id` at `z0` for the point source at the
/// origin: near-field samples on `Λ` and far-field samples on the sphere
/// rule, with the configured noise.
pub fn simulate(cfg: &ExperimentConfig, kind: ScattererKind, shape_id: usize, stage: Stage) -> Result<Measurement> {
    simulate_with_noise(cfg, kind, shape_id, stage, cfg.noise_level)
}

pub fn simulate_with_noise(
    cfg: &ExperimentConfig,
    kind: ScattererKind,
    shape_id: usize,
    stage: Stage,
    noise_level: f64,
) -> Result<Measurement> {
    let mat = cfg.material.at(cfg.omega(stage))?;
    let shape = cfg.shape(shape_id)?;
    let model = ForwardModel::build(kind, &shape, &cfg.z0, &mat, cfg.discretization(stage))?;
    let incident = Incident::PointSource { p: cfg.polarization, source: Vec3::zeros() };
    let sol = model.solve(&incident, cfg.discretization(stage).solver)?;
    let surface = cfg.surface()?;
    let near = model.scattered_field(&sol, &surface.points)?;
    let dirs = DirectionSet::sphere(cfg.far_field_nodes);
    let far = model.far_field(&sol, &dirs.directions)?.iter().map(|f| f.total()).collect();
    Measurement::on_surface(mat, &surface, near)?
        .with_far_field(&dirs, far)?
        .with_noise(noise_level, cfg.noise_seed(kind, shape_id, stage))
}

/// Opens or creates the store for `kind` at the identification frequency.
pub fn open_store(cfg: &ExperimentConfig, kind: ScattererKind, root: &Path) -> Result<DictionaryStore> {
    let mat = cfg.material.at(cfg.omega_identify)?;
    DictionaryStore::open_or_create(root, kind, &mat, &cfg.identify_discretization, &cfg.dictionary)
}

/// Entries of all six shapes for incidence `d = ẑ̊`, building any that are
/// missing.
pub fn entries_for<'a>(
    cfg: &ExperimentConfig,
    store: &'a mut DictionaryStore,
    z: &Vec3,
) -> Result<Vec<&'a DictionaryEntry>> {
    let d = z.normalize();
    let shapes = build_dictionary_shapes();
    store.ensure(&shapes, &d, &cfg.polarization)?;
    let store: &'a DictionaryStore = store;
    shapes
        .iter()
        .map(|s| {
            store
                .lookup(s.id, &d, &cfg.polarization)
                .ok_or_else(|| Error::Coverage(format!("no entry for shape {} at d = {d:?}", s.id)))
        })
        .collect()
}

/// The eight result tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TableId {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
    T7,
    T8,
}

impl std::str::FromStr for TableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "T1" => TableId::T1,
            "T2" => TableId::T2,
            "T3" => TableId::T3,
            "T4" => TableId::T4,
            "T5" => TableId::T5,
            "T6" => TableId::T6,
            "T7" => TableId::T7,
            "T8" => TableId::T8,
            _ => return Err(Error::Config(format!("unknown table {s:?}, expected T1..T8"))),
        })
    }
}

impl std::fmt::Display for TableId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

/// What a table measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableTask {
    Location,
    Shape,
}

impl TableId {
    pub fn all() -> [TableId; 8] {
        use TableId::*;
        [T1, T2, T3, T4, T5, T6, T7, T8]
    }

    pub fn kind(&self) -> ScattererKind {
        use TableId::*;
        match self {
            T1 | T2 | T3 | T4 => ScattererKind::Rigid,
            _ => ScattererKind::Medium,
        }
    }

    pub fn task(&self) -> TableTask {
        use TableId::*;
        match self {
            T1 | T3 | T5 | T7 => TableTask::Location,
            _ => TableTask::Shape,
        }
    }

    pub fn noisy(&self) -> bool {
        use TableId::*;
        matches!(self, T3 | T4 | T7 | T8)
    }

    /// Location indicators reported (the last one decides pass/fail).
    pub fn location_indicators(&self) -> Vec<LocationIndicator> {
        match self {
            TableId::T1 => vec![LocationIndicator::Ip, LocationIndicator::Is],
            _ => vec![LocationIndicator::Is],
        }
    }

    pub fn shape_indicators(&self) -> Vec<ShapeIndicator> {
        match self {
            TableId::T2 => vec![ShapeIndicator::Jp, ShapeIndicator::Js],
            _ => vec![ShapeIndicator::Js],
        }
    }

    /// Noise level used for the table.
    pub fn noise_level(&self, cfg: &ExperimentConfig) -> f64 {
        if self.noisy() {
            if cfg.noise_level > 0.0 {
                cfg.noise_level
            } else {
                NOISY_TABLE_LEVEL
            }
        } else {
            0.0
        }
    }
}

/// Noise level of the noisy tables unless the config sets one.
pub const NOISY_TABLE_LEVEL: f64 = 0.05;
/// Largest accepted localization error without and with noise.
pub const LOCATION_TOLERANCE: f64 = 0.15;
pub const NOISY_LOCATION_TOLERANCE: f64 = 0.5;
/// Smallest accepted gap between the diagonal and the largest off-diagonal
/// value of a normalized shape row.
pub const SHAPE_MARGIN: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationRow {
    pub shape_id: usize,
    pub estimate: Option<Vec3>,
    pub error: Option<f64>,
    pub peak_value: Option<f64>,
    /// Failure message when the indicator could not localize.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationTable {
    pub indicator: LocationIndicator,
    pub rows: Vec<LocationRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeMatrix {
    pub indicator: ShapeIndicator,
    /// Row `i`: true shape `i + 1`; column `j`: dictionary shape `j + 1`.
    pub normalized: Vec<Vec<f64>>,
    pub raw: Vec<Vec<f64>>,
    /// Locations used for each row.
    pub locations: Vec<Vec3>,
}

/// Output of one reproduced table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub table: TableId,
    pub kind: ScattererKind,
    pub noise_level: f64,
    pub config_hash: String,
    pub dictionary_hash: Option<String>,
    pub version: String,
    pub locations: Vec<LocationTable>,
    pub shapes: Vec<ShapeMatrix>,
    pub passed: bool,
    pub checks: Vec<String>,
}

/// Localizes one scene and reports the error against the true location.
pub fn location_row(cfg: &ExperimentConfig, m: &Measurement, shape_id: usize, which: LocationIndicator) -> LocationRow {
    match cfg.grid().and_then(|g| locate(m, &g, which)) {
        Ok(loc) => LocationRow {
            shape_id,
            estimate: Some(loc.estimate),
            error: Some((loc.estimate - cfg.z0).norm()),
            peak_value: Some(loc.value),
            failure: None,
        },
        Err(e) => LocationRow { shape_id, estimate: None, error: None, peak_value: None, failure: Some(e.to_string()) },
    }
}

/// Runs one table for all six shapes.
pub fn reproduce(table: TableId, cfg: &ExperimentConfig, out: &Path) -> Result<ResultTable> {
    cfg.validate()?;
    let kind = table.kind();
    let noise = table.noise_level(cfg);
    let ids: Vec<usize> = build_dictionary_shapes().iter().map(|s| s.id).collect();
    let tol = if table.noisy() { NOISY_LOCATION_TOLERANCE } else { LOCATION_TOLERANCE };
    let mut checks = Vec::new();
    let mut passed = true;
    let mut locations = Vec::new();
    let mut shapes = Vec::new();
    let mut dictionary_hash = None;

    let located: Vec<(Measurement, LocationRow)> = ids
        .iter()
        .map(|&id| {
            let m = simulate_with_noise(cfg, kind, id, Stage::Locate, noise)?;
            let row = location_row(cfg, &m, id, LocationIndicator::Is);
            Ok((m, row))
        })
        .collect::<Result<_>>()?;

    match table.task() {
        TableTask::Location => {
            for which in table.location_indicators() {
                let rows: Vec<LocationRow> = if which == LocationIndicator::Is {
                    located.iter().map(|(_, r)| r.clone()).collect()
                } else {
                    located.iter().map(|(m, r)| location_row(cfg, m, r.shape_id, which)).collect()
                };
                if which == LocationIndicator::Is {
                    for r in &rows {
                        let ok = r.error.is_some_and(|e| e <= tol);
                        passed &= ok;
                        checks.push(match (&r.error, &r.failure) {
                            (Some(e), _) => format!(
                                "{} shape {}: |z - z0| = {e:.4} (<= {tol}) {}",
                                table,
                                r.shape_id,
                                if ok { "pass" } else { "FAIL" }
                            ),
                            (None, f) => format!("{} shape {}: FAIL {}", table, r.shape_id, f.clone().unwrap_or_default()),
                        });
                    }
                }
                locations.push(LocationTable { indicator: which, rows });
            }
        }
        TableTask::Shape => {
            let mut estimates = Vec::new();
            for (_, r) in &located {
                match r.estimate {
                    Some(z) => estimates.push(z),
                    None => {
                        return Err(Error::Localization(format!(
                            "{table}: stage one failed for shape {}: {}",
                            r.shape_id,
                            r.failure.clone().unwrap_or_default()
                        )))
                    }
                }
            }
            let root = cfg.store_root(out);
            let mut store = open_store(cfg, kind, &root)?;
            dictionary_hash = Some(store.manifest.config_hash.clone());
            let measured: Vec<Measurement> =
                ids.iter().map(|&id| simulate_with_noise(cfg, kind, id, Stage::Identify, noise)).collect::<Result<_>>()?;
            for which in table.shape_indicators() {
                let mut normalized = Vec::new();
                let mut raw = Vec::new();
                for ((id, m), z) in ids.iter().zip(&measured).zip(&estimates) {
                    let entries = entries_for(cfg, &mut store, z)?;
                    let ident = identify(m, &entries, z, which)?;
                    let diag = ident.normalized[id - 1];
                    let off = ident
                        .normalized
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| j + 1 != *id)
                        .map(|(_, v)| *v)
                        .fold(f64::NEG_INFINITY, f64::max);
                    let ok = ident.shape_id == *id && !ident.tie && diag - off >= SHAPE_MARGIN;
                    passed &= ok;
                    checks.push(format!(
                        "{table} {which:?} shape {id}: best {} margin {:.4} (>= {SHAPE_MARGIN}) {}",
                        ident.shape_id,
                        diag - off,
                        if ok { "pass" } else { "FAIL" }
                    ));
                    normalized.push(ident.normalized);
                    raw.push(ident.raw);
                }
                shapes.push(ShapeMatrix { indicator: which, normalized, raw, locations: estimates.clone() });
            }
        }
    }

    Ok(ResultTable {
        table,
        kind,
        noise_level: noise,
        config_hash: cfg.hash()?,
        dictionary_hash,
        version: env!("CARGO_PKG_VERSION").to_string(),
        locations,
        shapes,
        passed,
        checks,
    })
}

impl ResultTable {
    /// CSV rendering: location tables as `indicator,shape,z1,z2,z3,error`,
    /// shape matrices as `indicator,true_shape,D1..D6`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        if !self.locations.is_empty() {
            s.push_str("indicator,shape,z1,z2,z3,error\n");
            for t in &self.locations {
                for r in &t.rows {
                    match (r.estimate, r.error) {
                        (Some(z), Some(e)) => {
                            let _ = writeln!(
                                s,
                                "{:?},{},{:.6},{:.6},{:.6},{:.6}",
                                t.indicator, r.shape_id, z[0], z[1], z[2], e
                            );
                        }
                        _ => {
                            let _ = writeln!(s, "{:?},{},,,,", t.indicator, r.shape_id);
                        }
                    }
                }
            }
        }
        if !self.shapes.is_empty() {
            let n = self.shapes[0].normalized.first().map_or(0, |r| r.len());
            s.push_str("indicator,true_shape");
            for j in 1..=n {
                let _ = write!(s, ",D{j}");
            }
            s.push('\n');
            for m in &self.shapes {
                for (i, row) in m.normalized.iter().enumerate() {
                    let _ = write!(s, "{:?},D{}", m.indicator, i + 1);
                    for v in row {
                        let _ = write!(s, ",{v:.6}");
                    }
                    s.push('\n');
                }
            }
        }
        s
    }

    /// Writes `<table>.json` and `<table>.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        std::fs::write(dir.join(format!("{}.json", self.table)), json)?;
        std::fs::write(dir.join(format!("{}.csv", self.table)), self.to_csv())?;
        Ok(())
    }
}
