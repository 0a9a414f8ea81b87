//! Spectrum tables: the CSV/JSON schema written by `spectrum` and read by `invert`.

use std::fs;
use std::path::Path;

use ptcircle::inverse::SpectrumPrefix;
use ptcircle::u2core::{Geometry, SpectralTriple};
use ptcircle::{Level, Sector};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelRow {
    pub index: usize,
    pub sector: String,
    pub wavenumber: f64,
    pub energy: f64,
    pub multiplicity: usize,
}

impl LevelRow {
    pub fn rows(levels: &[Level]) -> Vec<LevelRow> {
        levels
            .iter()
            .enumerate()
            .map(|(index, l)| LevelRow {
                index,
                sector: l.sector.as_str().to_string(),
                wavenumber: l.wavenumber,
                energy: l.energy,
                multiplicity: l.multiplicity,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumFile {
    pub geometry: Geometry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triple: Option<SpectralTriple>,
    pub levels: Vec<LevelRow>,
}

pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Numeric(format!("csv encoding failed: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Numeric(format!("csv encoding failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Numeric(e.to_string()))
}

/// Reads a spectrum table. JSON files carry their own geometry; CSV files use `geom`.
pub fn read_spectrum(path: &Path, geom: Option<Geometry>) -> Result<(Vec<LevelRow>, Geometry), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        let f: SpectrumFile =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("malformed spectrum JSON: {e}")))?;
        Ok((f.levels, geom.unwrap_or(f.geometry)))
    } else {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let rows = r
            .deserialize()
            .collect::<Result<Vec<LevelRow>, _>>()
            .map_err(|e| CliError::Config(format!("malformed spectrum CSV: {e}")))?;
        Ok((rows, geom.unwrap_or_else(Geometry::unit)))
    }
}

pub fn prefix_from_rows(rows: &[LevelRow], geometry: Geometry) -> Result<SpectrumPrefix, CliError> {
    let mut positive_k = Vec::new();
    let mut positive_multiplicity = Vec::new();
    let mut negative_kappa = Vec::new();
    let mut has_zero_mode = false;
    for r in rows {
        let sector = Sector::parse(&r.sector)
            .ok_or_else(|| CliError::Config(format!("row {}: unknown sector {:?}", r.index, r.sector)))?;
        match sector {
            Sector::Positive => {
                positive_k.push(r.wavenumber);
                positive_multiplicity.push(r.multiplicity);
            }
            Sector::Zero => has_zero_mode = true,
            Sector::Negative => negative_kappa.push(r.wavenumber),
        }
    }
    let mut p = SpectrumPrefix::new(positive_k, has_zero_mode, negative_kappa, geometry)?;
    p.positive_multiplicity = positive_multiplicity;
    p.validate()?;
    Ok(p)
}
