mod common;

use std::fs;
use std::path::Path;

use common::{experiment_material, vnorm};
use elastoscat::dictionary::*;
use elastoscat::forward::{Discretization, ForwardModel, ScattererKind};
use elastoscat::geometry::build_dictionary_shapes;
use elastoscat::incident::Incident;
use elastoscat::{CVec3, Error, Vec3};
use num_complex::Complex64;
use proptest::prelude::*;

fn small_disc() -> Discretization {
    Discretization { panel_target: 48, voxel_budget: 8, ..Discretization::default() }
}

fn coarse_cfg() -> DictionaryConfig {
    DictionaryConfig { cap_radius_deg: 2.0, cap_spacing_deg: 1.0, direction_tolerance_deg: 0.25 }
}

fn d0() -> Vec3 {
    Vec3::new(1.0, 0.0, 0.0)
}

fn p0() -> Vec3 {
    Vec3::new(0.0, 0.0, 1.0)
}

fn cube_entry(kind: ScattererKind) -> DictionaryEntry {
    let shape = &build_dictionary_shapes()[0];
    build_entry(shape, kind, &experiment_material(1.0), &small_disc(), &coarse_cfg(), d0(), p0()).unwrap()
}

fn max_diff(a: &CVec3, b: &CVec3) -> f64 {
    vnorm(&(a - b))
}

#[test]
fn three_degree_cap_at_fifth_degree_spacing_has_31_nodes_per_axis() {
    let cap = DirectionCap::new(Vec3::new(1.0, 0.0, 0.0), 3.0, 0.2).unwrap();
    assert_eq!(cap.nodes_per_axis(), 31);
    let dirs = cap.directions();
    assert_eq!(dirs.len(), 961);
    assert!((dirs[480] - cap.center).norm() < 1e-15);
    for q in &dirs {
        assert!((q.norm() - 1.0).abs() < 1e-14);
    }
    let (e1, e2) = cap.basis();
    assert!(e1.dot(&e2).abs() < 1e-15 && e1.dot(&cap.center).abs() < 1e-15);
}

#[test]
fn cap_rejects_invalid_parameters() {
    assert!(DirectionCap::new(Vec3::zeros(), 3.0, 0.2).is_err());
    assert!(DirectionCap::new(Vec3::x(), 0.0, 0.2).is_err());
    assert!(DirectionCap::new(Vec3::x(), 3.0, -1.0).is_err());
    assert!(DictionaryConfig { cap_spacing_deg: 3.0, ..DictionaryConfig::default() }.validate().is_err());
}

fn synthetic_entry(cap: DirectionCap, f: impl Fn(&Vec3) -> CVec3) -> DictionaryEntry {
    let samples = cap.directions().iter().map(&f).collect();
    DictionaryEntry {
        shape_id: 1,
        kind: ScattererKind::Rigid,
        material: experiment_material(1.0),
        d: -cap.center,
        p: p0(),
        cap,
        samples,
        config_hash: String::new(),
    }
}

/// Affine in the gnomonic coordinates of the cap.
fn gnomonic_affine(cap: &DirectionCap, q: &Vec3) -> CVec3 {
    let (e1, e2) = cap.basis();
    let qc = q.dot(&cap.center);
    let (u, v) = (q.dot(&e1) / qc, q.dot(&e2) / qc);
    CVec3::new(
        Complex64::new(1.0 + 3.0 * u, -2.0 * v),
        Complex64::new(u - v, 0.5),
        Complex64::new(0.0, 7.0 * u + v),
    )
}

#[test]
fn interpolation_is_exact_at_nodes() {
    let cap = DirectionCap::new(Vec3::new(0.3, -1.0, 0.2), 3.0, 0.5).unwrap();
    let e = synthetic_entry(cap, |q| CVec3::new(Complex64::new(q[0], q[1]), Complex64::new(q[2], 0.0), Complex64::default()));
    for (q, s) in cap.directions().iter().zip(&e.samples) {
        assert!(max_diff(&e.far_field_at(q).unwrap(), s) < 1e-13);
    }
}

#[test]
fn directions_outside_the_cap_are_a_coverage_error() {
    let cap = DirectionCap::new(Vec3::x(), 3.0, 0.2).unwrap();
    let e = synthetic_entry(cap, |_| CVec3::zeros());
    let outside = Vec3::new(1.0, 0.1, 0.0).normalize();
    assert!(matches!(e.far_field_at(&outside), Err(Error::Coverage(_))));
    let inside = Vec3::new(1.0, 0.05, 0.0).normalize();
    assert!(e.far_field_at(&inside).is_ok());
    assert!(matches!(e.far_field_at(&-Vec3::x()), Err(Error::Coverage(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bilinear_blend_reproduces_gnomonic_affine_fields(
        cx in -1.0f64..1.0, cy in -1.0f64..1.0, cz in 0.2f64..1.0,
        a in 0.0f64..1.0, b in 0.0f64..std::f64::consts::TAU,
    ) {
        let cap = DirectionCap::new(Vec3::new(cx, cy, cz), 3.0, 0.2).unwrap();
        let e = synthetic_entry(cap, |q| gnomonic_affine(&cap, q));
        let (e1, e2) = cap.basis();
        let angle = (a * 3.0f64).to_radians();
        let q = cap.center * angle.cos() + (e1 * b.cos() + e2 * b.sin()) * angle.sin();
        let got = e.far_field_at(&q).unwrap();
        prop_assert!(max_diff(&got, &gnomonic_affine(&cap, &q)) < 1e-10);
    }
}

#[test]
fn entry_samples_match_direct_far_field_and_are_reproducible() {
    let mat = experiment_material(1.0);
    let shape = &build_dictionary_shapes()[0];
    let e = cube_entry(ScattererKind::Rigid);
    assert_eq!(e.samples.len(), e.cap.nodes_per_axis().pow(2));
    assert!((e.cap.center + d0()).norm() < 1e-15);

    let model = ForwardModel::build(ScattererKind::Rigid, shape, &Vec3::zeros(), &mat, &small_disc()).unwrap();
    let sol = model.solve(&Incident::shear_plane_wave(d0(), p0()).unwrap(), Default::default()).unwrap();
    let direct = model.far_field(&sol, &[-d0()]).unwrap()[0].total();
    let stored = e.far_field_at(&-d0()).unwrap();
    assert!(max_diff(&direct, &stored) <= 1e-12 * vnorm(&direct));

    let again = cube_entry(ScattererKind::Rigid);
    assert_eq!(e, again);
}

#[test]
fn test_fields_factor_as_two_spherical_waves_times_the_far_field() {
    let e = cube_entry(ScattererKind::Medium);
    let mat = e.material;
    let z = Vec3::new(40.0, 0.2, -0.1);
    let x = Vec3::new(0.0, 0.3, 0.1);
    let v = x - z;
    let r = v.norm();
    let f = e.far_field_at(&(v / r)).unwrap();
    let outer = Complex64::from_polar(1.0 / (4.0 * std::f64::consts::PI * z.norm()), mat.k_s * z.norm());
    let sp = f * (outer * Complex64::from_polar(1.0 / r, mat.k_p * r));
    let ss = f * (outer * Complex64::from_polar(1.0 / r, mat.k_s * r));
    assert!(max_diff(&test_field_sp(&e, &z, &x).unwrap(), &sp) <= 1e-14 * vnorm(&sp));
    assert!(max_diff(&test_field_ss(&e, &z, &x).unwrap(), &ss) <= 1e-14 * vnorm(&ss));
    // Receivers whose direction from z leaves the cap are rejected.
    let off = Vec3::new(0.0, 10.0, 0.0);
    assert!(matches!(test_field_sp(&e, &z, &off), Err(Error::Coverage(_))));
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn store_round_trip_is_byte_identical() {
    let root = tempfile::tempdir().unwrap();
    let mat = experiment_material(1.0);
    let shapes = build_dictionary_shapes();
    let mut store =
        DictionaryStore::open_or_create(root.path(), ScattererKind::Rigid, &mat, &small_disc(), &coarse_cfg()).unwrap();
    assert_eq!(store.ensure(&shapes[..2], &d0(), &p0()).unwrap(), 2);
    assert_eq!(store.ensure(&shapes[..2], &d0(), &p0()).unwrap(), 0);

    let reopened = DictionaryStore::open(root.path(), ScattererKind::Rigid).unwrap();
    assert_eq!(reopened.entries(), store.entries());
    assert_eq!(reopened.manifest, store.manifest);

    let copy = tempfile::tempdir().unwrap();
    reopened.write_to(copy.path()).unwrap();
    assert_eq!(files(copy.path()), files(store.dir()));
    assert_eq!(reopened.manifest.shape_ids, vec![1, 2]);
}

#[test]
fn store_rejects_other_configurations() {
    let root = tempfile::tempdir().unwrap();
    let mat = experiment_material(1.0);
    let mut store =
        DictionaryStore::open_or_create(root.path(), ScattererKind::Rigid, &mat, &small_disc(), &coarse_cfg()).unwrap();

    let finer = Discretization { panel_target: 96, ..small_disc() };
    let shape = &build_dictionary_shapes()[0];
    let foreign = build_entry(shape, ScattererKind::Rigid, &mat, &finer, &coarse_cfg(), d0(), p0()).unwrap();
    assert!(matches!(store.insert(foreign), Err(Error::Store(_))));
    assert!(matches!(
        DictionaryStore::open_or_create(root.path(), ScattererKind::Rigid, &mat, &finer, &coarse_cfg()),
        Err(Error::Store(_))
    ));
    let other_omega = mat.with_omega(2.0).unwrap();
    assert!(DictionaryStore::open_or_create(root.path(), ScattererKind::Rigid, &other_omega, &small_disc(), &coarse_cfg())
        .is_err());
}

#[test]
fn config_hash_tracks_every_input() {
    let mat = experiment_material(1.0);
    let base = config_hash(ScattererKind::Rigid, &mat, &small_disc(), &coarse_cfg()).unwrap();
    assert_eq!(base.len(), 64);
    assert_eq!(base, config_hash(ScattererKind::Rigid, &mat, &small_disc(), &coarse_cfg()).unwrap());
    let variants = [
        config_hash(ScattererKind::Medium, &mat, &small_disc(), &coarse_cfg()).unwrap(),
        config_hash(ScattererKind::Rigid, &mat.with_omega(2.0).unwrap(), &small_disc(), &coarse_cfg()).unwrap(),
        config_hash(ScattererKind::Rigid, &mat, &Discretization { contrast: -3.0, ..small_disc() }, &coarse_cfg())
            .unwrap(),
        config_hash(ScattererKind::Rigid, &mat, &small_disc(), &DictionaryConfig { cap_radius_deg: 4.0, ..coarse_cfg() })
            .unwrap(),
    ];
    for v in &variants {
        assert_ne!(v, &base);
    }
    // The lookup tolerance does not change stored content.
    let loose = DictionaryConfig { direction_tolerance_deg: 1.0, ..coarse_cfg() };
    assert_eq!(base, config_hash(ScattererKind::Rigid, &mat, &small_disc(), &loose).unwrap());
}

#[test]
fn lookup_honours_the_direction_tolerance_and_polarization() {
    let root = tempfile::tempdir().unwrap();
    let mat = experiment_material(1.0);
    let shapes = build_dictionary_shapes();
    let mut store =
        DictionaryStore::open_or_create(root.path(), ScattererKind::Rigid, &mat, &small_disc(), &coarse_cfg()).unwrap();
    store.ensure(&shapes[..1], &d0(), &p0()).unwrap();

    let tilt = |deg: f64| Vec3::new(deg.to_radians().cos(), deg.to_radians().sin(), 0.0);
    assert!(store.lookup(1, &tilt(0.2), &p0()).is_some());
    assert!(store.lookup(1, &tilt(0.3), &p0()).is_none());
    assert!(store.lookup(2, &d0(), &p0()).is_none());
    assert!(store.lookup(1, &d0(), &Vec3::new(0.0, 1.0, 0.0)).is_none());
}

#[test]
fn kinds_live_in_disjoint_directories() {
    let root = tempfile::tempdir().unwrap();
    let mat = experiment_material(1.0);
    let shapes = build_dictionary_shapes();
    let mut rigid =
        DictionaryStore::open_or_create(root.path(), ScattererKind::Rigid, &mat, &small_disc(), &coarse_cfg()).unwrap();
    let mut medium =
        DictionaryStore::open_or_create(root.path(), ScattererKind::Medium, &mat, &small_disc(), &coarse_cfg()).unwrap();
    rigid.ensure(&shapes[..1], &d0(), &p0()).unwrap();
    medium.ensure(&shapes[..1], &d0(), &p0()).unwrap();
    assert_ne!(rigid.dir(), medium.dir());
    assert_ne!(rigid.entries()[0].samples, medium.entries()[0].samples);
    assert!(matches!(medium.insert(rigid.entries()[0].clone()), Err(Error::Store(_))));
    assert_eq!(DictionaryStore::open(root.path(), ScattererKind::Medium).unwrap().entries().len(), 1);
}
