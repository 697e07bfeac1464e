//! Reference-shape far fields under shear plane-wave incidence, the test
//! fields assembled from them, and their on-disk store.
//!
//! An entry holds the far field of one shape for one incidence `(d, p)`,
//! sampled on a gnomonic grid over a small cap of directions centred on the
//! backscatter direction `−d`. Values between nodes are bilinear blends.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forward::{Discretization, ForwardModel, ScattererKind};
use crate::geometry::{ReferenceShape, SHAPE_SET_VERSION};
use crate::incident::{Incident, WavePart};
use crate::material::{ElasticMaterial, Polarization};
use crate::{re, CVec3, Vec3};

/// Version of the store layout and entry encoding.
pub const STORE_FORMAT_VERSION: u32 = 1;

/// Extent and resolution of the stored direction caps, and the lookup
/// tolerance on incident directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionaryConfig {
    pub cap_radius_deg: f64,
    pub cap_spacing_deg: f64,
    pub direction_tolerance_deg: f64,
}

impl Default for DictionaryConfig {
    fn default() -> Self {
        Self { cap_radius_deg: 6.0, cap_spacing_deg: 0.2, direction_tolerance_deg: 0.25 }
    }
}

impl DictionaryConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.cap_radius_deg > 0.0
            && self.cap_radius_deg < 60.0
            && self.cap_spacing_deg > 0.0
            && self.cap_spacing_deg <= 2.0
            && self.direction_tolerance_deg >= 0.0;
        if !ok {
            return Err(Error::Config(format!("invalid dictionary settings {self:?}")));
        }
        Ok(())
    }
}

/// Square gnomonic grid of directions around `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionCap {
    pub center: Vec3,
    pub radius_deg: f64,
    pub spacing_deg: f64,
}

impl DirectionCap {
    pub fn new(center: Vec3, radius_deg: f64, spacing_deg: f64) -> Result<Self> {
        let n = center.norm();
        if !(n > 0.0) || !(radius_deg > 0.0) || !(spacing_deg > 0.0) || radius_deg >= 60.0 {
            return Err(Error::InvalidParameter(format!("invalid cap {center:?}, {radius_deg}, {spacing_deg}")));
        }
        Ok(Self { center: center / n, radius_deg, spacing_deg })
    }

    /// Orthonormal tangent basis; the first vector is orthogonal to the
    /// coordinate axis least aligned with the centre.
    pub fn basis(&self) -> (Vec3, Vec3) {
        let c = self.center;
        let k = (0..3).min_by(|&a, &b| c[a].abs().total_cmp(&c[b].abs())).unwrap_or(0);
        let mut a = Vec3::zeros();
        a[k] = 1.0;
        let e1 = c.cross(&a).normalize();
        (e1, c.cross(&e1))
    }

    /// Gnomonic step; the outermost nodes sit at angle `radius_deg` along
    /// each tangent axis.
    fn step(&self) -> f64 {
        self.radius_deg.to_radians().tan() / self.half_nodes() as f64
    }

    /// Nodes on each side of the centre along each tangent axis.
    pub fn half_nodes(&self) -> usize {
        ((self.radius_deg / self.spacing_deg) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn nodes_per_axis(&self) -> usize {
        2 * self.half_nodes() + 1
    }

    /// Node directions, first tangent coordinate slowest.
    pub fn directions(&self) -> Vec<Vec3> {
        let (e1, e2) = self.basis();
        let n = self.half_nodes() as i64;
        let s = self.step();
        let mut out = Vec::with_capacity(self.nodes_per_axis().pow(2));
        for i in -n..=n {
            for j in -n..=n {
                out.push((self.center + e1 * (i as f64 * s) + e2 * (j as f64 * s)).normalize());
            }
        }
        out
    }

    /// Fractional grid indices of `q`, or `None` outside the cap.
    fn locate(&self, q: &Vec3) -> Option<(usize, usize, f64, f64)> {
        let qc = q.dot(&self.center);
        if qc <= 0.0 {
            return None;
        }
        let (e1, e2) = self.basis();
        let n = self.half_nodes();
        let s = self.step();
        let a = q.dot(&e1) / qc / s + n as f64;
        let b = q.dot(&e2) / qc / s + n as f64;
        let last = (2 * n) as f64;
        let tol = 1e-9;
        if a < -tol || b < -tol || a > last + tol || b > last + tol {
            return None;
        }
        let a = a.clamp(0.0, last);
        let b = b.clamp(0.0, last);
        let i = (a.floor() as usize).min(2 * n - 1);
        let j = (b.floor() as usize).min(2 * n - 1);
        Some((i, j, a - i as f64, b - j as f64))
    }

    pub fn covers(&self, q: &Vec3) -> bool {
        self.locate(q).is_some()
    }
}

/// Far field of one reference shape for the shear plane wave `u_s^i(·, d, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DictionaryEntry {
    pub shape_id: usize,
    pub kind: ScattererKind,
    pub material: ElasticMaterial,
    pub d: Vec3,
    pub p: Vec3,
    pub cap: DirectionCap,
    /// Full far field (shear plus pressure part) at each cap node.
    pub samples: Vec<CVec3>,
    /// Hash of the configuration the entry was built under.
    pub config_hash: String,
}

impl DictionaryEntry {
    /// Far field at direction `q` by bilinear interpolation on the cap.
    pub fn far_field_at(&self, q: &Vec3) -> Result<CVec3> {
        let (i, j, s, t) = self.cap.locate(&(q / q.norm())).ok_or_else(|| {
            Error::Coverage(format!("direction {q:?} outside the stored cap of shape {}", self.shape_id))
        })?;
        let n = self.cap.nodes_per_axis();
        let at = |a: usize, b: usize| self.samples[a * n + b];
        Ok(at(i, j) * re((1.0 - s) * (1.0 - t))
            + at(i + 1, j) * re(s * (1.0 - t))
            + at(i, j + 1) * re((1.0 - s) * t)
            + at(i + 1, j + 1) * re(s * t))
    }

    /// Angle in degrees between `d` and the entry's incident direction.
    pub fn direction_offset_deg(&self, d: &Vec3) -> f64 {
        (d.normalize().dot(&self.d)).clamp(-1.0, 1.0).acos().to_degrees()
    }
}

/// Builds entries for one shape, factorizing its operator once.
pub struct EntryBuilder {
    shape_id: usize,
    model: ForwardModel,
    config_hash: String,
    cfg: DictionaryConfig,
}

impl EntryBuilder {
    pub fn new(
        shape: &ReferenceShape,
        kind: ScattererKind,
        mat: &ElasticMaterial,
        disc: &Discretization,
        cfg: &DictionaryConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let model = ForwardModel::build(kind, shape, &Vec3::zeros(), mat, disc)?;
        Ok(Self { shape_id: shape.id, model, config_hash: config_hash(kind, mat, disc, cfg)?, cfg: *cfg })
    }

    /// One entry per incidence `(d, p)`; `d` must be a unit vector.
    pub fn build(&self, incidences: &[(Vec3, Vec3)]) -> Result<Vec<DictionaryEntry>> {
        let lu = self.model.factorize()?;
        incidences
            .iter()
            .map(|(d, p)| {
                let polarization = Polarization::new(*d, *p)?;
                let sol = lu.solve(&Incident::PlaneWave { polarization, part: WavePart::Shear })?;
                let cap = DirectionCap::new(-d, self.cfg.cap_radius_deg, self.cfg.cap_spacing_deg)?;
                let samples =
                    self.model.far_field(&sol, &cap.directions())?.iter().map(|f| f.total()).collect();
                Ok(DictionaryEntry {
                    shape_id: self.shape_id,
                    kind: self.model.kind(),
                    material: *self.model.material(),
                    d: *d,
                    p: *p,
                    cap,
                    samples,
                    config_hash: self.config_hash.clone(),
                })
            })
            .collect()
    }
}

/// Single entry; see [`EntryBuilder`] for batches.
pub fn build_entry(
    shape: &ReferenceShape,
    kind: ScattererKind,
    mat: &ElasticMaterial,
    disc: &Discretization,
    cfg: &DictionaryConfig,
    d: Vec3,
    p: Vec3,
) -> Result<DictionaryEntry> {
    Ok(EntryBuilder::new(shape, kind, mat, disc, cfg)?.build(&[(d, p)])?.remove(0))
}

fn test_field(entry: &DictionaryEntry, z: &Vec3, x: &Vec3, k_second: f64) -> Result<CVec3> {
    let rz = z.norm();
    let v = x - z;
    let r = v.norm();
    if rz == 0.0 || r == 0.0 {
        return Err(Error::InvalidParameter("test field needs z ≠ 0 and x ≠ z".into()));
    }
    let k_s = entry.material.k_s;
    let c = Complex64::from_polar(1.0 / (4.0 * PI * rz), k_s * rz) * Complex64::from_polar(1.0 / r, k_second * r);
    Ok(entry.far_field_at(&(v / r))? * c)
}

/// `u_sp(D_j, z; x)`: the stored far field at `(x − z)/|x − z|` with the
/// spherical factors `e^{ik_s|z|}/(4π|z|)` and `e^{ik_p|x−z|}/|x − z|`.
pub fn test_field_sp(entry: &DictionaryEntry, z: &Vec3, x: &Vec3) -> Result<CVec3> {
    test_field(entry, z, x, entry.material.k_p)
}

/// `u_ss(D_j, z; x)`: as [`test_field_sp`] with `k_s` in both factors.
pub fn test_field_ss(entry: &DictionaryEntry, z: &Vec3, x: &Vec3) -> Result<CVec3> {
    test_field(entry, z, x, entry.material.k_s)
}

#[derive(Serialize)]
struct HashInput<'a> {
    format_version: u32,
    shape_set_version: u32,
    kind: ScattererKind,
    omega: f64,
    lambda: f64,
    mu: f64,
    discretization: &'a Discretization,
    cap_radius_deg: f64,
    cap_spacing_deg: f64,
}

/// SHA-256 (hex) of everything an entry's content depends on besides the
/// shape and incidence.
pub fn config_hash(
    kind: ScattererKind,
    mat: &ElasticMaterial,
    disc: &Discretization,
    cfg: &DictionaryConfig,
) -> Result<String> {
    let input = HashInput {
        format_version: STORE_FORMAT_VERSION,
        shape_set_version: SHAPE_SET_VERSION,
        kind,
        omega: mat.omega,
        lambda: mat.lambda,
        mu: mat.mu,
        discretization: disc,
        cap_radius_deg: cfg.cap_radius_deg,
        cap_spacing_deg: cfg.cap_spacing_deg,
    };
    let bytes = serde_json::to_vec(&input)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryRecord {
    pub shape_id: usize,
    pub d: Vec3,
    pub p: Vec3,
    pub cap: DirectionCap,
    pub directions: usize,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoreManifest {
    pub format_version: u32,
    pub shape_set_version: u32,
    pub kind: ScattererKind,
    pub config_hash: String,
    pub material: ElasticMaterial,
    pub discretization: Discretization,
    pub dictionary: DictionaryConfig,
    pub shape_ids: Vec<usize>,
    pub entries: Vec<EntryRecord>,
}

/// Directory-backed, append-only collection of entries for one kind. Each
/// kind lives in its own subdirectory of the store root.
#[derive(Debug, Clone)]
pub struct DictionaryStore {
    dir: PathBuf,
    pub manifest: StoreManifest,
    entries: Vec<DictionaryEntry>,
}

const MANIFEST: &str = "manifest.json";

fn encode_samples(samples: &[CVec3]) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() * 48);
    for v in samples {
        for c in v.iter() {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    out
}

fn decode_samples(bytes: &[u8], count: usize) -> Result<Vec<CVec3>> {
    if bytes.len() != count * 48 {
        return Err(Error::Store(format!("entry file holds {} bytes, expected {}", bytes.len(), count * 48)));
    }
    let f = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().expect("8-byte slice"));
    Ok((0..count)
        .map(|i| {
            let b = 6 * i;
            CVec3::new(
                Complex64::new(f(b), f(b + 1)),
                Complex64::new(f(b + 2), f(b + 3)),
                Complex64::new(f(b + 4), f(b + 5)),
            )
        })
        .collect())
}

impl DictionaryStore {
    /// Opens `root/<kind>` if it was built under the same configuration,
    /// or creates it empty. A store with a different hash is an error.
    pub fn open_or_create(
        root: &Path,
        kind: ScattererKind,
        mat: &ElasticMaterial,
        disc: &Discretization,
        cfg: &DictionaryConfig,
    ) -> Result<Self> {
        let dir = root.join(kind.as_str());
        let hash = config_hash(kind, mat, disc, cfg)?;
        if dir.join(MANIFEST).exists() {
            let store = Self::open(root, kind)?;
            if store.manifest.config_hash != hash {
                return Err(Error::Store(format!(
                    "store at {} was built under config {}, requested {}",
                    dir.display(),
                    store.manifest.config_hash,
                    hash
                )));
            }
            return Ok(store);
        }
        fs::create_dir_all(&dir)?;
        let manifest = StoreManifest {
            format_version: STORE_FORMAT_VERSION,
            shape_set_version: SHAPE_SET_VERSION,
            kind,
            config_hash: hash,
            material: *mat,
            discretization: *disc,
            dictionary: *cfg,
            shape_ids: Vec::new(),
            entries: Vec::new(),
        };
        let store = Self { dir, manifest, entries: Vec::new() };
        store.write_manifest()?;
        Ok(store)
    }

    /// Loads `root/<kind>`.
    pub fn open(root: &Path, kind: ScattererKind) -> Result<Self> {
        let dir = root.join(kind.as_str());
        let manifest: StoreManifest = serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST))?)?;
        if manifest.format_version != STORE_FORMAT_VERSION || manifest.kind != kind {
            return Err(Error::Store(format!("incompatible manifest in {}", dir.display())));
        }
        let mut entries = Vec::with_capacity(manifest.entries.len());
        for rec in &manifest.entries {
            let samples = decode_samples(&fs::read(dir.join(&rec.file))?, rec.directions)?;
            if rec.cap.nodes_per_axis().pow(2) != rec.directions {
                return Err(Error::Store(format!("direction count mismatch in {}", rec.file)));
            }
            entries.push(DictionaryEntry {
                shape_id: rec.shape_id,
                kind,
                material: manifest.material,
                d: rec.d,
                p: rec.p,
                cap: rec.cap,
                samples,
                config_hash: manifest.config_hash.clone(),
            });
        }
        Ok(Self { dir, manifest, entries })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entries(&self) -> &[DictionaryEntry] {
        &self.entries
    }

    fn write_manifest(&self) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        fs::write(self.dir.join(MANIFEST), text)?;
        Ok(())
    }

    /// Appends an entry and persists it.
    pub fn insert(&mut self, entry: DictionaryEntry) -> Result<()> {
        if entry.config_hash != self.manifest.config_hash || entry.kind != self.manifest.kind {
            return Err(Error::Store(format!(
                "entry for shape {} was built under config {}, store has {}",
                entry.shape_id, entry.config_hash, self.manifest.config_hash
            )));
        }
        if self.lookup_exact(entry.shape_id, &entry.d, &entry.p).is_some() {
            return Err(Error::Store(format!("duplicate entry for shape {} and d = {:?}", entry.shape_id, entry.d)));
        }
        let index = self.manifest.entries.iter().filter(|r| r.shape_id == entry.shape_id).count();
        let file = format!("shape{}_{index:04}.bin", entry.shape_id);
        fs::write(self.dir.join(&file), encode_samples(&entry.samples))?;
        self.manifest.entries.push(EntryRecord {
            shape_id: entry.shape_id,
            d: entry.d,
            p: entry.p,
            cap: entry.cap,
            directions: entry.samples.len(),
            file,
        });
        if !self.manifest.shape_ids.contains(&entry.shape_id) {
            self.manifest.shape_ids.push(entry.shape_id);
            self.manifest.shape_ids.sort_unstable();
        }
        self.entries.push(entry);
        self.write_manifest()
    }

    fn lookup_exact(&self, shape_id: usize, d: &Vec3, p: &Vec3) -> Option<&DictionaryEntry> {
        self.entries.iter().find(|e| e.shape_id == shape_id && e.d == *d && e.p == *p)
    }

    /// Entry for `shape_id` whose incident direction is within the lookup
    /// tolerance of `d` (closest first, then earliest) and whose
    /// polarization equals `p`.
    pub fn lookup(&self, shape_id: usize, d: &Vec3, p: &Vec3) -> Option<&DictionaryEntry> {
        let tol = self.manifest.dictionary.direction_tolerance_deg;
        self.entries
            .iter()
            .filter(|e| e.shape_id == shape_id && (e.p - p).norm() <= 1e-12 * p.norm().max(1.0))
            .map(|e| (e.direction_offset_deg(d), e))
            .filter(|(a, _)| *a <= tol)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, e)| e)
    }

    /// Builds and inserts whatever entries are missing for `shapes` at
    /// incidence `(d, p)`. Returns the number of entries built.
    pub fn ensure(&mut self, shapes: &[ReferenceShape], d: &Vec3, p: &Vec3) -> Result<usize> {
        let mut built = 0;
        for shape in shapes {
            if self.lookup(shape.id, d, p).is_some() {
                continue;
            }
            let m = &self.manifest;
            let entry = build_entry(shape, m.kind, &m.material, &m.discretization, &m.dictionary, d.normalize(), *p)?;
            self.insert(entry)?;
            built += 1;
        }
        Ok(built)
    }

    /// Byte-level copy of the manifest and entry files into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        fs::write(dir.join(MANIFEST), text)?;
        for (rec, e) in self.manifest.entries.iter().zip(&self.entries) {
            fs::write(dir.join(&rec.file), encode_samples(&e.samples))?;
        }
        Ok(())
    }
}
