//! Direct sampling indicators.
//!
//! Stage one scans candidate locations `z̃` with `I_p`, its phaseless variant
//! `I_|p|`, or the far-field indicator `I_s`. Stage two compares the data with
//! dictionary test fields placed at the recovered location through `J_p` or
//! `J_s`. Every indicator is a normalized inner product, so multiplying the
//! data by a nonzero complex constant leaves it unchanged.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dictionary::{test_field_sp, test_field_ss, DictionaryEntry};
use crate::error::{Error, Result};
use crate::geometry::{DirectionSet, MeasurementSurface, SamplingGrid};
use crate::harmonics::vector_spherical_harmonics;
use crate::material::ElasticMaterial;
use crate::{re, CVec3, Vec3};

/// Far-field samples on a weighted direction set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarFieldData {
    pub directions: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub samples: Vec<CVec3>,
}

/// Scattered-field data from one experiment: near-field samples on the
/// receivers of `Λ` and, optionally, far-field samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Measurement {
    pub material: ElasticMaterial,
    pub receivers: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub near: Vec<CVec3>,
    pub far: Option<FarFieldData>,
    /// Relative noise level applied to the samples.
    pub noise_level: f64,
}

fn all_finite(v: &[CVec3]) -> bool {
    v.iter().all(|x| x.iter().all(|c| c.re.is_finite() && c.im.is_finite()))
}

impl Measurement {
    pub fn on_surface(material: ElasticMaterial, surface: &MeasurementSurface, near: Vec<CVec3>) -> Result<Self> {
        let m = Self {
            material,
            receivers: surface.points.clone(),
            weights: surface.weights.clone(),
            near,
            far: None,
            noise_level: 0.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_far_field(mut self, directions: &DirectionSet, samples: Vec<CVec3>) -> Result<Self> {
        self.far = Some(FarFieldData {
            directions: directions.directions.clone(),
            weights: directions.weights.clone(),
            samples,
        });
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.receivers.len() != self.near.len() || self.weights.len() != self.near.len() {
            return Err(Error::InvalidParameter(format!(
                "{} receivers, {} weights, {} samples",
                self.receivers.len(),
                self.weights.len(),
                self.near.len()
            )));
        }
        if !all_finite(&self.near) {
            return Err(Error::InvalidParameter("non-finite near-field sample".into()));
        }
        if let Some(f) = &self.far {
            if f.directions.len() != f.samples.len() || f.weights.len() != f.samples.len() {
                return Err(Error::InvalidParameter("far-field sample count mismatch".into()));
            }
            if !all_finite(&f.samples) {
                return Err(Error::InvalidParameter("non-finite far-field sample".into()));
            }
        }
        Ok(())
    }

    /// All samples multiplied by `c`.
    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.near.iter_mut().for_each(|v| *v *= c);
        if let Some(f) = &mut out.far {
            f.samples.iter_mut().for_each(|v| *v *= c);
        }
        out
    }

    /// Adds complex Gaussian noise with `‖noise‖ = ε‖u‖` in the weighted
    /// norm, separately for the near- and far-field blocks. The far block
    /// draws from its own stream of the same seed.
    pub fn with_noise(&self, epsilon: f64, seed: u64) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!("noise level must be >= 0, got {epsilon}")));
        }
        let mut out = self.clone();
        out.noise_level = epsilon;
        add_noise(&mut out.near, &self.weights, epsilon, seed, 0);
        if let Some(f) = &mut out.far {
            let w = f.weights.clone();
            add_noise(&mut f.samples, &w, epsilon, seed, 1);
        }
        Ok(out)
    }
}

fn weighted_norm(v: &[CVec3], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(x, wi)| wi * x.norm_squared()).sum::<f64>().sqrt()
}

/// `Σ wᵢ aᵢ · conj(bᵢ)`.
fn inner(a: &[CVec3], b: &[CVec3], w: &[f64]) -> Complex64 {
    a.iter().zip(b).zip(w).map(|((x, y), wi)| y.dotc(x) * wi).sum()
}

fn add_noise(samples: &mut [CVec3], weights: &[f64], epsilon: f64, seed: u64, stream: u64) {
    if epsilon == 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let noise: Vec<CVec3> = samples
        .iter()
        .map(|_| {
            CVec3::from_fn(|_, _| {
                Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
            })
        })
        .collect();
    let nn = weighted_norm(&noise, weights);
    let nu = weighted_norm(samples, weights);
    if nn == 0.0 {
        return;
    }
    let scale = epsilon * nu / nn;
    for (s, n) in samples.iter_mut().zip(&noise) {
        *s += n * re(scale);
    }
}

fn unit_from(x: &Vec3, center: &Vec3) -> Result<Vec3> {
    let v = x - center;
    let r = v.norm();
    if !(r > 0.0) {
        return Err(Error::Singular(format!("receiver {x:?} coincides with the projection centre")));
    }
    Ok(v / r)
}

/// `(x̂·v) x̂` with `x̂ = (x − c)/|x − c|` for each receiver `x`.
pub fn project_radial(samples: &[CVec3], receivers: &[Vec3], center: &Vec3) -> Result<Vec<CVec3>> {
    samples
        .iter()
        .zip(receivers)
        .map(|(v, x)| {
            let xh = unit_from(x, center)?.map(re);
            Ok(xh * xh.dot(v))
        })
        .collect()
}

/// `v − (x̂·v) x̂`, the complement of [`project_radial`].
pub fn project_tangential(samples: &[CVec3], receivers: &[Vec3], center: &Vec3) -> Result<Vec<CVec3>> {
    let radial = project_radial(samples, receivers, center)?;
    Ok(samples.iter().zip(&radial).map(|(v, r)| v - r).collect())
}

fn normalized_overlap(a: &[CVec3], b: &[CVec3], w: &[f64]) -> Result<f64> {
    let na = weighted_norm(a, w);
    let nb = weighted_norm(b, w);
    if !(na > 0.0) {
        return Err(Error::InvalidParameter("projected measurement has zero norm".into()));
    }
    if !(nb > 0.0) {
        return Err(Error::Singular("test field has zero norm".into()));
    }
    Ok((inner(a, b, w).norm() / (na * nb)).min(1.0))
}

/// `ů_p(z̃; x) = e^{ik_s|z̃|}/(4π|z̃|) · e^{ik_p|x−z̃|}/|x−z̃| · x̂` with
/// `x̂ = (x − z̃)/|x − z̃|`.
pub fn pressure_test_field(mat: &ElasticMaterial, z: &Vec3, x: &Vec3) -> Result<CVec3> {
    let rz = z.norm();
    let xh = unit_from(x, z)?;
    if !(rz > 0.0) {
        return Err(Error::Singular("candidate at the source".into()));
    }
    let r = (x - z).norm();
    let c = Complex64::from_polar(1.0 / (4.0 * PI * rz), mat.k_s * rz) * Complex64::from_polar(1.0 / r, mat.k_p * r);
    Ok(xh.map(re) * c)
}

fn pressure_pair(m: &Measurement, z: &Vec3) -> Result<(Vec<CVec3>, Vec<CVec3>)> {
    let data = project_radial(&m.near, &m.receivers, z)?;
    let test = m.receivers.iter().map(|x| pressure_test_field(&m.material, z, x)).collect::<Result<_>>()?;
    Ok((data, test))
}

/// `I_p(z̃) = |⟨P u, ů_p⟩| / (‖P u‖ ‖ů_p‖)` on `Λ`, with the radial
/// projection taken about `z̃`.
pub fn indicator_ip(m: &Measurement, z: &Vec3) -> Result<f64> {
    let (data, test) = pressure_pair(m, z)?;
    normalized_overlap(&data, &test, &m.weights)
}

/// Phaseless variant: pointwise moduli in the numerator, the same norms in
/// the denominator.
pub fn indicator_ip_phaseless(m: &Measurement, z: &Vec3) -> Result<f64> {
    let (data, test) = pressure_pair(m, z)?;
    let na = weighted_norm(&data, &m.weights);
    let nb = weighted_norm(&test, &m.weights);
    if !(na > 0.0) {
        return Err(Error::InvalidParameter("projected measurement has zero norm".into()));
    }
    let num: f64 = data.iter().zip(&test).zip(&m.weights).map(|((a, b), w)| w * a.norm() * b.norm()).sum();
    Ok((num / (na * nb)).min(1.0))
}

/// `I_s(z̃)`: root of the summed squared overlaps of the tangential far
/// field with `e^{ik_s|z̃|}/(4π|z̃|) e^{−ik_s x̂·z̃} H(x̂)` for the six degree-one
/// harmonics `H ∈ {U₁^m, V₁^m}`, divided by `‖(I − P)u^∞‖ / (4π|z̃|)`.
/// Raw values lie in `[0, 1/√2]` because each harmonic has norm `1/√2`.
pub fn indicator_is(m: &Measurement, z: &Vec3) -> Result<f64> {
    let far = m
        .far
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("I_s needs far-field samples".into()))?;
    let rz = z.norm();
    if !(rz > 0.0) {
        return Err(Error::Singular("candidate at the origin".into()));
    }
    let tangential = project_tangential(&far.samples, &far.directions, &Vec3::zeros())?;
    let norm = weighted_norm(&tangential, &far.weights);
    if !(norm > 1e-12 * weighted_norm(&far.samples, &far.weights)) {
        return Err(Error::InvalidParameter("far field has no shear part".into()));
    }
    let k = m.material.k_s;
    let lead = Complex64::from_polar(1.0 / (4.0 * PI * rz), k * rz);
    let mut sum = 0.0;
    for mm in -1..=1 {
        let mut acc = [Complex64::default(); 2];
        for ((u, xh), w) in tangential.iter().zip(&far.directions).zip(&far.weights) {
            let (hu, hv) = vector_spherical_harmonics(mm, xh)?;
            let phase = lead * Complex64::from_polar(1.0, -k * xh.dot(z));
            acc[0] += (hu * phase).dotc(u) * w;
            acc[1] += (hv * phase).dotc(u) * w;
        }
        sum += acc[0].norm_sqr() + acc[1].norm_sqr();
    }
    Ok(sum.sqrt() / (norm / (4.0 * PI * rz)))
}

fn shape_pair(
    m: &Measurement,
    entry: &DictionaryEntry,
    z: &Vec3,
    which: ShapeIndicator,
) -> Result<(Vec<CVec3>, Vec<CVec3>)> {
    let test: Vec<CVec3> = m
        .receivers
        .iter()
        .map(|x| match which {
            ShapeIndicator::Jp => test_field_sp(entry, z, x),
            ShapeIndicator::Js => test_field_ss(entry, z, x),
        })
        .collect::<Result<_>>()?;
    Ok(match which {
        ShapeIndicator::Jp => {
            (project_radial(&m.near, &m.receivers, z)?, project_radial(&test, &m.receivers, z)?)
        }
        ShapeIndicator::Js => {
            (project_tangential(&m.near, &m.receivers, z)?, project_tangential(&test, &m.receivers, z)?)
        }
    })
}

/// `J_p(D_j) = |⟨P u, P u_sp(D_j, z̊)⟩| / (‖P u‖ ‖P u_sp‖)`.
pub fn indicator_jp(m: &Measurement, entry: &DictionaryEntry, z: &Vec3) -> Result<f64> {
    let (a, b) = shape_pair(m, entry, z, ShapeIndicator::Jp)?;
    normalized_overlap(&a, &b, &m.weights)
}

/// `J_s(D_j)`: as [`indicator_jp`] with tangential projections and `u_ss`.
pub fn indicator_js(m: &Measurement, entry: &DictionaryEntry, z: &Vec3) -> Result<f64> {
    let (a, b) = shape_pair(m, entry, z, ShapeIndicator::Js)?;
    normalized_overlap(&a, &b, &m.weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocationIndicator {
    Ip,
    IpPhaseless,
    Is,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeIndicator {
    Jp,
    Js,
}

impl LocationIndicator {
    pub fn evaluate(&self, m: &Measurement, z: &Vec3) -> Result<f64> {
        match self {
            LocationIndicator::Ip => indicator_ip(m, z),
            LocationIndicator::IpPhaseless => indicator_ip_phaseless(m, z),
            LocationIndicator::Is => indicator_is(m, z),
        }
    }
}

impl ShapeIndicator {
    pub fn evaluate(&self, m: &Measurement, entry: &DictionaryEntry, z: &Vec3) -> Result<f64> {
        match self {
            ShapeIndicator::Jp => indicator_jp(m, entry, z),
            ShapeIndicator::Js => indicator_js(m, entry, z),
        }
    }
}

/// Indicator selection: explicit, or by noise regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum IndicatorChoice {
    Ip,
    IpPhaseless,
    Is,
    #[default]
    Auto,
}

impl std::str::FromStr for IndicatorChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ip" => Ok(IndicatorChoice::Ip),
            "ip-phaseless" => Ok(IndicatorChoice::IpPhaseless),
            "is" => Ok(IndicatorChoice::Is),
            "auto" => Ok(IndicatorChoice::Auto),
            _ => Err(Error::Config(format!("unknown indicator {s:?}"))),
        }
    }
}

/// Noise counts as `o(1/λ)` when `ε ≤ AUTO_NOISE_FACTOR · μ/λ`.
pub const AUTO_NOISE_FACTOR: f64 = 0.1;

impl IndicatorChoice {
    /// Stage-one and stage-two indicators. `Auto` uses the pressure pair
    /// when the noise is small against `μ/λ` and the shear pair otherwise.
    pub fn resolve(&self, noise_level: f64, mat: &ElasticMaterial) -> (LocationIndicator, ShapeIndicator) {
        match self {
            IndicatorChoice::Ip => (LocationIndicator::Ip, ShapeIndicator::Jp),
            IndicatorChoice::IpPhaseless => (LocationIndicator::IpPhaseless, ShapeIndicator::Jp),
            IndicatorChoice::Is => (LocationIndicator::Is, ShapeIndicator::Js),
            IndicatorChoice::Auto => {
                if noise_level <= AUTO_NOISE_FACTOR * mat.mu / mat.lambda.abs().max(mat.mu) {
                    (LocationIndicator::Ip, ShapeIndicator::Jp)
                } else {
                    (LocationIndicator::Is, ShapeIndicator::Js)
                }
            }
        }
    }
}

/// Indicator values over candidate points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorMap {
    pub points: Vec<Vec3>,
    pub values: Vec<f64>,
    /// First index holding the maximum.
    pub argmax: usize,
}

impl IndicatorMap {
    /// Ties go to the earliest point, which for [`SamplingGrid::points`] is
    /// the lowest in lexicographic order.
    pub fn new(points: Vec<Vec3>, values: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != values.len() {
            return Err(Error::InvalidParameter("indicator map needs one value per point".into()));
        }
        let mut argmax = 0;
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Localization(format!("non-finite indicator at {:?}", points[i])));
            }
            if *v > values[argmax] {
                argmax = i;
            }
        }
        Ok(Self { points, values, argmax })
    }

    pub fn peak(&self) -> (Vec3, f64) {
        (self.points[self.argmax], self.values[self.argmax])
    }

    pub fn median(&self) -> f64 {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }
}

/// Peak spread below which an indicator map counts as flat.
pub const FLAT_INDICATOR_THRESHOLD: f64 = 1e-6;
/// Spacing ratio between the coarse and fine sweeps.
pub const REFINE_FACTOR: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Localization {
    pub estimate: Vec3,
    pub value: f64,
    pub indicator: LocationIndicator,
    pub coarse: IndicatorMap,
    pub fine: IndicatorMap,
}

pub fn evaluate_map(m: &Measurement, points: Vec<Vec3>, which: LocationIndicator) -> Result<IndicatorMap> {
    let values = points.par_iter().map(|z| which.evaluate(m, z)).collect::<Result<Vec<_>>>()?;
    IndicatorMap::new(points, values)
}

/// Coarse sweep over `grid`, then a sweep at `1/5` of the spacing over one
/// coarse step around the coarse peak.
pub fn locate(m: &Measurement, grid: &SamplingGrid, which: LocationIndicator) -> Result<Localization> {
    let coarse = evaluate_map(m, grid.points(), which)?;
    let (peak, peak_value) = coarse.peak();
    if peak_value - coarse.median() < FLAT_INDICATOR_THRESHOLD {
        return Err(Error::Localization(format!(
            "flat {which:?} indicator: max {peak_value:.9} vs median {:.9}",
            coarse.median()
        )));
    }
    let fine_grid = SamplingGrid::new(peak, grid.spacing / REFINE_FACTOR as f64, 2 * REFINE_FACTOR + 1)?;
    let fine = evaluate_map(m, fine_grid.points(), which)?;
    let (estimate, value) = fine.peak();
    Ok(Localization { estimate, value, indicator: which, coarse, fine })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Identification {
    pub shape_id: usize,
    pub indicator: ShapeIndicator,
    /// Candidate shape ids in increasing order.
    pub shape_ids: Vec<usize>,
    pub raw: Vec<f64>,
    /// `raw` divided by its maximum.
    pub normalized: Vec<f64>,
    /// Whether more than one candidate attained the maximum.
    pub tie: bool,
}

/// Evaluates `which` for each entry at `z̊` and returns the best match.
/// Each shape id may appear once.
pub fn identify(
    m: &Measurement,
    entries: &[&DictionaryEntry],
    z: &Vec3,
    which: ShapeIndicator,
) -> Result<Identification> {
    let mut sorted: Vec<&DictionaryEntry> = entries.to_vec();
    sorted.sort_by_key(|e| e.shape_id);
    if sorted.is_empty() {
        return Err(Error::InvalidParameter("no dictionary entries".into()));
    }
    if sorted.windows(2).any(|w| w[0].shape_id == w[1].shape_id) {
        return Err(Error::InvalidParameter("duplicate shape ids among entries".into()));
    }
    let raw = sorted.par_iter().map(|e| which.evaluate(m, e, z)).collect::<Result<Vec<_>>>()?;
    let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(Error::Singular("all shape indicators vanish".into()));
    }
    let best = raw.iter().position(|v| *v == max).expect("maximum is attained");
    let tie = raw.iter().filter(|v| **v == max).count() > 1;
    Ok(Identification {
        shape_id: sorted[best].shape_id,
        indicator: which,
        shape_ids: sorted.iter().map(|e| e.shape_id).collect(),
        normalized: raw.iter().map(|v| v / max).collect(),
        raw,
        tie,
    })
}
