#![allow(dead_code)]

use elastoscat::material::ElasticMaterial;

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}

/// Material with E = 3, ν = 0.475.
pub fn experiment_material(omega: f64) -> ElasticMaterial {
    ElasticMaterial::from_engineering(omega, 3.0, 0.475).unwrap()
}

pub fn vnorm(v: &elastoscat::CVec3) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub fn field_norm(v: &[elastoscat::CVec3]) -> f64 {
    v.iter().map(|x| x.iter().map(|c| c.norm_sqr()).sum::<f64>()).sum::<f64>().sqrt()
}
