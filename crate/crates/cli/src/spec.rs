//! JSON input specifications for boundary matrices and geometry.

use std::fs;

use num_complex::Complex64;
use ptcircle::u2core::{from_matrix, identity2, sigma1, sigma2, sigma3, CharacteristicMatrix, Geometry, Mat2, SpectralTriple};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::CliError;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamSpec {
    xi: f64,
    alpha: [f64; 2],
    beta: [f64; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixSpec {
    /// Row-major entries as `[re, im]` pairs.
    matrix: [[[f64; 2]; 2]; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TripleSpec {
    triple: SpectralTriple,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PresetSpec {
    preset: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GeomSpec {
    l: f64,
    #[serde(rename = "L0")]
    l0: f64,
}

/// Inline JSON when the argument starts with `{`, otherwise a path to a JSON file.
fn load_json(arg: &str, what: &str) -> Result<Value, CliError> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).map_err(|e| CliError::Config(format!("cannot read {what} file {arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("malformed {what} JSON: {e}")))
}

fn typed<T: DeserializeOwned>(v: Value, what: &str) -> Result<T, CliError> {
    serde_json::from_value(v).map_err(|e| CliError::Config(format!("invalid {what}: {e}")))
}

pub fn preset(name: &str) -> Option<Mat2> {
    let m = match name.trim_start_matches(['-', '+']) {
        "identity" | "I" => identity2(),
        "sigma1" => sigma1(),
        "sigma2" => sigma2(),
        "sigma3" => sigma3(),
        _ => return None,
    };
    Some(if name.starts_with('-') { -m } else { m })
}

pub fn parse_u(arg: &str) -> Result<CharacteristicMatrix, CliError> {
    let v = load_json(arg, "U")?;
    let Some(obj) = v.as_object() else {
        return Err(CliError::Config("U must be a JSON object".into()));
    };
    if obj.contains_key("matrix") {
        let s: MatrixSpec = typed(v, "U matrix")?;
        let m = Mat2::from_fn(|i, j| Complex64::new(s.matrix[i][j][0], s.matrix[i][j][1]));
        Ok(from_matrix(&m)?)
    } else if obj.contains_key("triple") {
        let s: TripleSpec = typed(v, "U triple")?;
        let t = SpectralTriple::new(s.triple.xi, s.triple.alpha_r, s.triple.beta_i)?;
        Ok(t.representative())
    } else if obj.contains_key("preset") {
        let s: PresetSpec = typed(v, "U preset")?;
        let m = preset(&s.preset).ok_or_else(|| CliError::Config(format!("unknown preset {:?}", s.preset)))?;
        Ok(from_matrix(&m)?)
    } else {
        let s: ParamSpec = typed(v, "U parameters")?;
        let c = |p: [f64; 2]| Complex64::new(p[0], p[1]);
        Ok(CharacteristicMatrix::new(s.xi, c(s.alpha), c(s.beta))?)
    }
}

pub fn parse_geom(arg: Option<&str>) -> Result<Geometry, CliError> {
    let Some(arg) = arg else {
        return Ok(Geometry::unit());
    };
    let s: GeomSpec = typed(load_json(arg, "geometry")?, "geometry")?;
    Ok(Geometry::new(s.l, s.l0)?)
}
