//! Browser bindings. Every export takes a JSON system description and returns JSON text.

use num_traits::ToPrimitive;
use orbitstat::asymptotics::normalized_sigma;
use orbitstat::census::{CensusOptions, OrbitCensus};
use orbitstat::distribution::{joint_census, w_pmf, WeightedAdditive};
use orbitstat::ldp::{poisson_rate, subset_rate};
use orbitstat::systems::SigmaSource;
use serde_json::json;
use wasm_bindgen::prelude::*;

const PRECISION: u32 = 128;
const MAX_X: u32 = 400;

fn census(system: &str, x: u32) -> Result<OrbitCensus, String> {
    if x == 0 || x > MAX_X {
        return Err(format!("X must lie in 1..={MAX_X}"));
    }
    let source = SigmaSource::from_json(system).map_err(|e| e.to_string())?;
    OrbitCensus::from_source(&source, x as u64, PRECISION, CensusOptions::default()).map_err(|e| e.to_string())
}

/// Exact distribution of the number of distinct prime orbits among orbits of length at most `x`.
#[wasm_bindgen]
pub fn w_distribution(system: &str, x: u32) -> Result<String, String> {
    let c = census(system, x)?;
    let unit = joint_census(&WeightedAdditive::unit(c.prime_table()), x as u64).map_err(|e| e.to_string())?;
    let pmf = w_pmf(&unit, x as u64).map_err(|e| e.to_string())?;
    let f = |r: &num_rational::BigRational| r.to_f64().unwrap_or(f64::NAN);
    Ok(json!({
        "X": x,
        "values": pmf.values.iter().map(f).collect::<Vec<_>>(),
        "masses": pmf.masses().iter().map(f).collect::<Vec<_>>(),
        "mean": f(&pmf.mean()),
        "variance": f(&pmf.variance()),
    })
    .to_string())
}

/// Poisson and subset rate functions sampled on `points` equally spaced abscissae in `(0, x_max]`.
#[wasm_bindgen]
pub fn rate_curves(lambda: f64, r: f64, x_max: f64, points: u32) -> Result<String, String> {
    if !(lambda > 0.0 && r > 0.0 && r <= 1.0 && x_max > 0.0) || points < 2 {
        return Err("need lambda > 0, 0 < r <= 1, x_max > 0 and at least 2 points".into());
    }
    let xs: Vec<f64> = (1..=points).map(|i| x_max * i as f64 / points as f64).collect();
    let poisson: Vec<f64> = xs.iter().map(|&x| poisson_rate(x)).collect();
    let subset: Vec<f64> = xs.iter().map(|&x| subset_rate(x, lambda, r)).collect();
    Ok(json!({ "x": xs, "poisson": poisson, "subset": subset }).to_string())
}

/// Normalized periodic-point counts and their running averages up to `x`.
#[wasm_bindgen]
pub fn cesaro_trace(system: &str, x: u32) -> Result<String, String> {
    let c = census(system, x)?;
    let b: Vec<f64> = normalized_sigma(c.sigma_table(), &c.lambda().value).iter().map(|v| v.to_f64()).collect();
    let mut sum = 0.0;
    let running: Vec<f64> = b
        .iter()
        .enumerate()
        .map(|(i, v)| {
            sum += v;
            sum / (i + 1) as f64
        })
        .collect();
    Ok(json!({ "lambda": c.lambda().value.to_f64(), "normalized": b, "running_mean": running }).to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    const FF2: &str = r#"{"type": "builtin", "name": "FF", "q": 2}"#;

    #[test]
    fn ff2_distribution_at_two() {
        let v: Value = serde_json::from_str(&w_distribution(FF2, 2).unwrap()).unwrap();
        let m: Vec<f64> = v["masses"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert_eq!(m.len(), 3);
        assert!((m[0] - 1.0 / 7.0).abs() < 1e-15 && (m[1] - 5.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn curves_and_trace() {
        let v: Value = serde_json::from_str(&rate_curves(2.0, 0.5, 4.0, 8).unwrap()).unwrap();
        assert!(v["subset"][1].as_f64().unwrap().abs() < 1e-12);
        let t: Value = serde_json::from_str(&cesaro_trace(FF2, 30).unwrap()).unwrap();
        assert!((t["running_mean"][29].as_f64().unwrap() - 1.0).abs() < 1e-12);
        assert!(cesaro_trace("{", 5).is_err());
        assert!(w_distribution(FF2, 0).is_err());
    }
}
