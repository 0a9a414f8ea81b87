//! Recovery of the spectral triple `(ξ, α_R, β_I)` from a finite spectrum.
//!
//! Three asymptotic regimes are distinguished by the behaviour of `cos(k_n l)`:
//!
//! * case I: every root has `sin kl = 0` and all `kl = nπ` occur;
//! * case II: `cos kl` tends to a constant (`α_R = -cos ξ`);
//! * case III: `kl = nπ + c₁/n + c₃/n³ + …` with one root near each `nπ`.
//!
//! [`fit_parameters`] is an independent least-squares solver exploiting that the
//! secular function is linear in `(β_I, α_R, sin ξ, cos ξ)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{negative_levels, zero_mode_exists, Sector, Spectrum};
use crate::u2core::{Geometry, SpectralTriple};

/// Default `tol_sin` for the "exactly zero" test of case I.
pub const TOL_SIN: f64 = 1e-9;
/// Default residual below which [`fit_parameters`] is accepted.
pub const FIT_TOL: f64 = 1e-8;
/// Default tolerance on the tail extrapolation residual.
pub const TAIL_TOL: f64 = 1e-6;

/// A finite, ascending portion of a spectrum with known geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPrefix {
    pub positive_k: Vec<f64>,
    /// Multiplicity of each positive level; empty means all simple.
    #[serde(default)]
    pub positive_multiplicity: Vec<usize>,
    pub has_zero_mode: bool,
    pub negative_kappa: Vec<f64>,
    pub geometry: Geometry,
}

impl SpectrumPrefix {
    pub fn new(positive_k: Vec<f64>, has_zero_mode: bool, negative_kappa: Vec<f64>, geometry: Geometry) -> Result<Self> {
        let p = Self {
            positive_k,
            positive_multiplicity: Vec::new(),
            has_zero_mode,
            negative_kappa,
            geometry,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_spectrum(spectrum: &Spectrum, geometry: Geometry) -> Self {
        let pos: Vec<_> = spectrum.positive().collect();
        Self {
            positive_k: pos.iter().map(|l| l.wavenumber).collect(),
            positive_multiplicity: pos.iter().map(|l| l.multiplicity).collect(),
            has_zero_mode: spectrum.has_zero_mode(),
            negative_kappa: spectrum
                .levels
                .iter()
                .filter(|l| l.sector == Sector::Negative)
                .map(|l| l.wavenumber)
                .collect(),
            geometry,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.positive_k.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(Error::InvalidParameters("positive wavenumbers must be finite and > 0".into()));
        }
        if self.positive_k.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameters("positive wavenumbers must be strictly increasing".into()));
        }
        if !self.positive_multiplicity.is_empty() && self.positive_multiplicity.len() != self.positive_k.len() {
            return Err(Error::InvalidParameters("multiplicity list length mismatch".into()));
        }
        if self.negative_kappa.len() > 2 || self.negative_kappa.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(Error::InvalidParameters("at most two positive decay constants allowed".into()));
        }
        Ok(())
    }

    pub fn multiplicity(&self, i: usize) -> usize {
        self.positive_multiplicity.get(i).copied().unwrap_or(1)
    }

    /// Keeps the lowest `n` positive levels.
    pub fn truncated(&self, n: usize) -> Self {
        let mut p = self.clone();
        p.positive_k.truncate(n);
        p.positive_multiplicity.truncate(n);
        p
    }

    fn phases(&self) -> Vec<f64> {
        self.positive_k.iter().map(|k| k * self.geometry.l).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    I,
    II,
    III,
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Case::I => "I",
            Case::II => "II",
            Case::III => "III",
        })
    }
}

/// Statistics behind a case decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseDiagnostics {
    pub max_abs_sin: f64,
    /// `max |cos k_i l - mean|` over the tail window.
    pub tail_cos_spread: f64,
    pub tail_cos_mean: f64,
    /// Tail roots sit at consecutive `round(kl/π)` with alternating `cos` of size > ½.
    pub tail_alternating: bool,
    /// Every `n = 1..N` is present with `sin kl = 0`.
    pub all_multiples: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseLabel {
    pub case: Case,
    pub diagnostics: CaseDiagnostics,
}

/// Largest tail spread of `cos kl` still accepted as convergent.
const CASE_II_SPREAD: f64 = 0.05;

pub fn case_diagnostics(prefix: &SpectrumPrefix) -> Result<CaseDiagnostics> {
    prefix.validate()?;
    let n = prefix.positive_k.len();
    if n < 16 {
        return Err(Error::InsufficientData(format!("need at least 16 positive levels, got {n}")));
    }
    let xs = prefix.phases();
    let max_abs_sin = xs.iter().map(|x| x.sin().abs()).fold(0.0, f64::max);
    let tail = &xs[n - n / 4..];
    let cos: Vec<f64> = tail.iter().map(|x| x.cos()).collect();
    let mean = cos.iter().sum::<f64>() / cos.len() as f64;
    let spread = cos.iter().map(|c| (c - mean).abs()).fold(0.0, f64::max);
    let idx: Vec<i64> = tail.iter().map(|x| (x / PI).round() as i64).collect();
    let consecutive = idx.windows(2).all(|w| w[1] == w[0] + 1);
    let alternating = consecutive
        && tail.iter().zip(&idx).all(|(x, m)| {
            let c = x.cos();
            c.abs() > 0.5 && (c > 0.0) == (m % 2 == 0)
        });
    let all_multiples = xs
        .iter()
        .enumerate()
        .all(|(i, x)| ((x / PI).round() as i64) == i as i64 + 1);
    Ok(CaseDiagnostics {
        max_abs_sin,
        tail_cos_spread: spread,
        tail_cos_mean: mean,
        tail_alternating: alternating,
        all_multiples,
    })
}

/// Assigns the asymptotic case of a spectrum prefix.
pub fn classify_case(prefix: &SpectrumPrefix, tol_sin: f64) -> Result<CaseLabel> {
    let d = case_diagnostics(prefix)?;
    let case = if d.max_abs_sin < tol_sin && d.all_multiples {
        Case::I
    } else if d.tail_alternating {
        Case::III
    } else if d.tail_cos_spread < CASE_II_SPREAD && !d.tail_alternating {
        Case::II
    } else {
        return Err(Error::Ambiguous(format!(
            "tail cos spread {:.3e}, alternating {}",
            d.tail_cos_spread, d.tail_alternating
        )));
    };
    Ok(CaseLabel { case, diagnostics: d })
}

/// Case I: `ξ = β_I = 0`, `α_R` from the nonpositive sector.
pub fn recover_case_i(prefix: &SpectrumPrefix) -> Result<SpectralTriple> {
    let l0 = prefix.geometry.l0;
    let alpha_r = match (prefix.has_zero_mode, prefix.negative_kappa.as_slice()) {
        (true, []) => 1.0,
        (false, []) => -1.0,
        (false, [kappa]) => {
            let q2 = (kappa * l0).powi(2);
            (1.0 - q2) / (1.0 + q2)
        }
        (true, _) => {
            return Err(Error::Inconsistent(
                "case I cannot have both a zero mode and a negative level".into(),
            ))
        }
        (false, _) => return Err(Error::Inconsistent("case I admits at most one negative level".into())),
    };
    SpectralTriple::new(0.0, alpha_r, 0.0)
}

/// Case II: `α_R = -cos ξ`; every root obeys `r + cos kl + cot ξ · sin(kl)/(kL₀) = 0`
/// with `r = β_I / sin ξ`.
pub fn recover_case_ii(prefix: &SpectrumPrefix) -> Result<SpectralTriple> {
    recover_case_ii_with_tol(prefix, TOL_SIN)
}

pub fn recover_case_ii_with_tol(prefix: &SpectrumPrefix, tol_sin: f64) -> Result<SpectralTriple> {
    prefix.validate()?;
    let l0 = prefix.geometry.l0;
    let xs = prefix.phases();
    if xs.is_empty() {
        return Err(Error::InsufficientData("no positive levels".into()));
    }
    let (r, cot) = if xs.iter().all(|x| x.sin().abs() < tol_sin) {
        // cot ξ enters only through sin kl; a double root forces it to vanish
        let doublets = (0..xs.len()).all(|i| prefix.multiplicity(i) == 2);
        if !doublets {
            return Err(Error::DegenerateTail);
        }
        let r = -xs.iter().map(|x| x.cos()).sum::<f64>() / xs.len() as f64;
        (r, 0.0)
    } else {
        // linear least squares in (r, cot ξ)
        let rows = xs.len();
        let mut a = DMatrix::<f64>::zeros(rows, 2);
        let mut b = DVector::<f64>::zeros(rows);
        for (i, (x, k)) in xs.iter().zip(&prefix.positive_k).enumerate() {
            a[(i, 0)] = 1.0;
            a[(i, 1)] = x.sin() / (k * l0);
            b[i] = -x.cos();
        }
        let sol = a
            .svd(true, true)
            .solve(&b, 1e-14)
            .map_err(|e| Error::InternalInvariant(e.to_string()))?;
        (sol[0], sol[1])
    };
    let xi = 1.0f64.atan2(cot);
    let (s, cx) = xi.sin_cos();
    let beta_i = (r * s).clamp(-1.0, 1.0);
    let alpha_r = -cx;
    let norm = (alpha_r * alpha_r + beta_i * beta_i).sqrt();
    let (alpha_r, beta_i) = if norm > 1.0 { (alpha_r / norm, beta_i / norm) } else { (alpha_r, beta_i) };
    SpectralTriple::new(xi.min(PI - f64::EPSILON), alpha_r, beta_i)
}

/// Coefficients of `k_n l = nπ + c₁/n + c₃/n³ + …` on even (`+`) and odd (`-`) `n`,
/// and the derived `a₁, a₂, a₃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticCoeffs {
    pub c1_plus: f64,
    pub c1_minus: f64,
    pub c3_plus: f64,
    pub c3_minus: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// Largest residual of the tail extrapolation.
    pub residual: f64,
}

/// `c₃` implied by `(c₁, a₂, a₃)`.
pub fn c3_from(c1: f64, a2: f64, a3: f64) -> f64 {
    -a3 * c1 / (PI * PI) - c1 * c1 / PI + c1.powi(3) / 6.0 + a2 * c1 * c1 / (2.0 * PI)
}

/// `a₃` solving [`c3_from`] for given `(c₁, c₃, a₂)`.
pub fn a3_from(c1: f64, c3: f64, a2: f64) -> f64 {
    PI * PI * (-c3 - c1 * c1 / PI + c1.powi(3) / 6.0 + a2 * c1 * c1 / (2.0 * PI)) / c1
}

/// The forward map `(ξ, α_R, β_I) ↦ (a₁, a₂, a₃)`; undefined when `cos ξ + α_R = 0`.
pub fn a_coefficients(t: &SpectralTriple, geom: &Geometry) -> Option<(f64, f64, f64)> {
    let (s, cx) = t.xi.sin_cos();
    let q = cx + t.alpha_r;
    if q.abs() < 1e-15 {
        return None;
    }
    let r = geom.l / geom.l0;
    Some((2.0 * t.beta_i / q * r, 2.0 * s / q * r, (cx - t.alpha_r) / q * r * r))
}

/// Polynomial least squares of `y` against `h`; returns coefficients and max residual.
fn poly_fit(h: &[f64], y: &[f64], degree: usize) -> Result<(Vec<f64>, f64)> {
    let scale = h.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let a = DMatrix::from_fn(h.len(), degree + 1, |i, j| (h[i] / scale).powi(j as i32));
    let b = DVector::from_column_slice(y);
    let sol = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-15)
        .map_err(|e| Error::InternalInvariant(e.to_string()))?;
    let resid = (&a * &sol - &b).amax();
    let coeffs = (0..=degree).map(|j| sol[j] / scale.powi(j as i32)).collect();
    Ok((coeffs, resid))
}

pub fn estimate_c_coeffs(prefix: &SpectrumPrefix) -> Result<AsymptoticCoeffs> {
    estimate_c_coeffs_with_tol(prefix, TAIL_TOL)
}

/// Extrapolates `n(k_n l - nπ)` in `h = 1/n²` separately on both parities.
pub fn estimate_c_coeffs_with_tol(prefix: &SpectrumPrefix, tol: f64) -> Result<AsymptoticCoeffs> {
    prefix.validate()?;
    let n_levels = prefix.positive_k.len();
    if n_levels < 32 {
        return Err(Error::InsufficientData(format!("need at least 32 positive levels, got {n_levels}")));
    }
    let xs = prefix.phases();
    // the usable tail: consecutive indices near nπ
    let idx: Vec<i64> = xs.iter().map(|x| (x / PI).round() as i64).collect();
    let mut start = n_levels - 1;
    while start > 0 && idx[start - 1] + 1 == idx[start] && (xs[start - 1] - PI * idx[start - 1] as f64).abs() < 1.0 {
        start -= 1;
    }
    let first = start.max(n_levels / 8);
    if n_levels - first < 24 {
        return Err(Error::NoisyTail {
            residual: f64::INFINITY,
            tolerance: tol,
        });
    }
    let mut fits = [(0.0, 0.0); 2];
    let mut residual: f64 = 0.0;
    for (slot, parity) in [0i64, 1].iter().enumerate() {
        let (mut h, mut y) = (Vec::new(), Vec::new());
        for i in first..n_levels {
            let n = idx[i];
            if n.rem_euclid(2) != *parity {
                continue;
            }
            let nf = n as f64;
            h.push(1.0 / (nf * nf));
            y.push(nf * (xs[i] - PI * nf));
        }
        let degree = (h.len() / 4).clamp(1, 5);
        let (coeffs, resid) = poly_fit(&h, &y, degree)?;
        let y_scale = y.iter().map(|v| v.abs()).fold(1.0, f64::max);
        residual = residual.max(resid / y_scale);
        fits[slot] = (coeffs[0], coeffs[1]);
    }
    if residual > tol {
        return Err(Error::NoisyTail { residual, tolerance: tol });
    }
    let ((c1p, c3p), (c1m, c3m)) = (fits[0], fits[1]);
    let a1 = -0.5 * PI * (c1p - c1m);
    let a2 = -0.5 * PI * (c1p + c1m);
    if c1p.abs().max(c1m.abs()) < 1e-12 {
        return Err(Error::DivisionGuard("both c1 coefficients vanish".into()));
    }
    let a3 = if c1p.abs() >= c1m.abs() {
        a3_from(c1p, c3p, a2)
    } else {
        a3_from(c1m, c3m, a2)
    };
    Ok(AsymptoticCoeffs {
        c1_plus: c1p,
        c1_minus: c1m,
        c3_plus: c3p,
        c3_minus: c3m,
        a1,
        a2,
        a3,
        residual,
    })
}

/// Inverts `(a₁, a₂, a₃) ↦ (ξ, α_R, β_I)`.
pub fn recover_case_iii(coeffs: &AsymptoticCoeffs, geom: &Geometry) -> Result<SpectralTriple> {
    let r = geom.l0 / geom.l;
    let (a1, a2, a3) = (coeffs.a1, coeffs.a2, coeffs.a3);
    let den = 1.0 + r * r * a3;
    if den.abs() < 1e-10 {
        // cos ξ = 0
        if (r * a2).abs() < 1e-12 {
            return Err(Error::DivisionGuard("a2 vanishes with cos xi = 0".into()));
        }
        return SpectralTriple::new(PI / 2.0, 2.0 / (r * a2), a1 / a2);
    }
    let (mut num, mut den_s) = (r * a2, den);
    if num < 0.0 {
        num = -num;
        den_s = -den_s;
    }
    let mut xi = num.atan2(den_s);
    let (s, cx) = xi.sin_cos();
    let mut alpha_r = cx * (1.0 - r * r * a3) / den;
    let mut beta_i = if s.abs() > cx.abs() {
        a1 / a2 * s
    } else {
        a1 * r * cx / den
    };
    if xi >= PI {
        xi -= PI;
        alpha_r = -alpha_r;
        beta_i = -beta_i;
    }
    SpectralTriple::new(xi, alpha_r, beta_i)
}

/// Outcome of [`recover_parameters`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recovery {
    pub triple: SpectralTriple,
    pub case: Case,
    /// Result of the independent fit, when it succeeded.
    pub fit: Option<SpectralTriple>,
    pub disagreement: Option<f64>,
    pub warning: Option<String>,
    /// Weighted secular residual of `triple` on the input data.
    pub residual: f64,
}

/// Runs the asymptotic recovery for the detected case and cross-checks it
/// against [`fit_parameters`]. Ambiguous prefixes are resolved by the smaller
/// secular residual among the candidate interpretations.
pub fn recover_parameters(prefix: &SpectrumPrefix) -> Result<Recovery> {
    let (case, triple) = match classify_case(prefix, TOL_SIN) {
        Ok(label) => (label.case, recover_as(prefix, label.case)?),
        Err(Error::Ambiguous(_)) => {
            let mut best: Option<(f64, Case, SpectralTriple)> = None;
            for case in [Case::II, Case::III] {
                if let Ok(t) = recover_as(prefix, case) {
                    let r = secular_residual(prefix, &t);
                    if best.as_ref().is_none_or(|b| r < b.0) {
                        best = Some((r, case, t));
                    }
                }
            }
            let (_, case, t) = best.ok_or_else(|| Error::Ambiguous("no case interpretation succeeded".into()))?;
            (case, t)
        }
        Err(e) => return Err(e),
    };
    let fit = fit_parameters(prefix).ok().map(|f| f.triple);
    let disagreement = fit.map(|f| f.distance(&triple));
    let warning = disagreement
        .filter(|d| *d > 1e-3)
        .map(|d| format!("asymptotic and fitted triples differ by {d:.3e}"));
    Ok(Recovery {
        residual: secular_residual(prefix, &triple),
        triple,
        case,
        fit,
        disagreement,
        warning,
    })
}

fn recover_as(prefix: &SpectrumPrefix, case: Case) -> Result<SpectralTriple> {
    match case {
        Case::I => recover_case_i(prefix),
        Case::II => recover_case_ii(prefix),
        Case::III => recover_case_iii(&estimate_c_coeffs(prefix)?, &prefix.geometry),
    }
}

// ---------------------------------------------------------------------------
// least-squares fit

/// Rows of the homogeneous linear system in `(β_I, α_R, sin ξ, cos ξ)`.
fn design_rows(prefix: &SpectrumPrefix) -> Vec<[f64; 4]> {
    let g = &prefix.geometry;
    let half = g.l / (2.0 * g.l0);
    let mut rows = Vec::new();
    for (i, &k) in prefix.positive_k.iter().enumerate() {
        let x = k * g.l;
        let q2 = (k * g.l0).powi(2);
        let sinc = x.sin() / x;
        let w = 1.0 / (1.0 + k * g.l0);
        rows.push([w, w * (q2 - 1.0) * half * sinc, w * x.cos(), w * (1.0 + q2) * half * sinc]);
        if prefix.multiplicity(i) == 2 {
            // dG/dk = 0 at a double root
            let dsinc = (x * x.cos() - x.sin()) / (x * x);
            let dq2 = 2.0 * k * g.l0 * g.l0;
            let w = w / g.l;
            rows.push([
                0.0,
                w * (dq2 * half * sinc + (q2 - 1.0) * half * g.l * dsinc),
                w * -g.l * x.sin(),
                w * (dq2 * half * sinc + (1.0 + q2) * half * g.l * dsinc),
            ]);
        }
    }
    if prefix.has_zero_mode {
        rows.push([1.0, -half, 1.0, half]);
    }
    for &kappa in &prefix.negative_kappa {
        let t = kappa * g.l;
        let q2 = (kappa * g.l0).powi(2);
        let e = (-t).exp();
        // e^{-t} sinh(t)/t and e^{-t} cosh t
        let sh = -(-2.0 * t).exp_m1() / (2.0 * t);
        let ch = 0.5 * (1.0 + e * e);
        let row = [e, -(1.0 + q2) * half * sh, ch, (1.0 - q2) * half * sh];
        let w = 1.0 / row.iter().map(|v| v.abs()).fold(0.0, f64::max);
        rows.push(row.map(|v| v * w));
    }
    rows
}

fn rms_residual(rows: &[[f64; 4]], v: &[f64; 4]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let ss: f64 = rows
        .iter()
        .map(|r| (r[0] * v[0] + r[1] * v[1] + r[2] * v[2] + r[3] * v[3]).powi(2))
        .sum();
    (ss / rows.len() as f64).sqrt()
}

/// Root-mean-square of the weighted secular function of `t` over the data.
pub fn secular_residual(prefix: &SpectrumPrefix, t: &SpectralTriple) -> f64 {
    let (s, cx) = t.xi.sin_cos();
    rms_residual(&design_rows(prefix), &[t.beta_i, t.alpha_r, s, cx])
}

/// Result of [`fit_parameters`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub triple: SpectralTriple,
    pub residual: f64,
}

pub fn fit_parameters(prefix: &SpectrumPrefix) -> Result<FitResult> {
    fit_parameters_with_tol(prefix, FIT_TOL)
}

/// Minimises the weighted secular residual over the filled torus.
///
/// With `z = (sin ξ, cos ξ)` fixed the problem is linear in `y = (β_I, α_R)`;
/// eliminating `y` leaves a 2×2 quadratic form in `z` whose lowest eigenvector
/// on the unit circle is the global minimiser.
pub fn fit_parameters_with_tol(prefix: &SpectrumPrefix, tol: f64) -> Result<FitResult> {
    prefix.validate()?;
    let rows = design_rows(prefix);
    if rows.len() < 3 {
        return Err(Error::InsufficientData("need at least three data rows".into()));
    }
    let m = rows.len();
    let a1 = DMatrix::from_fn(m, 2, |i, j| rows[i][j]);
    let a2 = DMatrix::from_fn(m, 2, |i, j| rows[i][j + 2]);
    let svd1 = a1.clone().svd(true, true);
    let smax = svd1.singular_values.max();
    let rank_tol = 1e-10 * smax.max(1e-300);
    // projector onto the complement of range(A1)
    let u1 = svd1.u.as_ref().expect("u requested");
    let mut proj_a2 = a2.clone();
    for j in 0..2 {
        if svd1.singular_values[j] > rank_tol {
            let col = u1.column(j);
            let coef = col.transpose() * &a2;
            proj_a2 -= col * coef;
        }
    }
    let s_mat: Matrix2<f64> = {
        let g = proj_a2.transpose() * &proj_a2;
        Matrix2::new(g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)])
    };
    let eig = SymmetricEigen::new(s_mat);
    let j = if eig.eigenvalues[0] <= eig.eigenvalues[1] { 0 } else { 1 };
    let mut z = [eig.eigenvectors[(0, j)], eig.eigenvectors[(1, j)]];
    if z[0] < 0.0 || (z[0] == 0.0 && z[1] < 0.0) {
        z = [-z[0], -z[1]];
    }
    let rhs = -(&a2 * DVector::from_column_slice(&z));
    let y = svd1
        .solve(&rhs, rank_tol)
        .map_err(|e| Error::InternalInvariant(e.to_string()))?;
    let mut y = [y[0], y[1]];

    let rank = svd1.singular_values.iter().filter(|s| **s > rank_tol).count();
    if rank < 2 {
        // free direction inside the disc: choose the endpoint matching the nonpositive data
        let v_t = svd1.v_t.as_ref().expect("v_t requested");
        let jn = if svd1.singular_values[0] <= svd1.singular_values[1] { 0 } else { 1 };
        let d = [v_t[(jn, 0)], v_t[(jn, 1)]];
        let xi = z[0].atan2(z[1]).rem_euclid(PI);
        y = choose_on_segment(prefix, xi, y, d)?;
    }
    let xi = z[0].atan2(z[1]);
    let (mut xi, mut ar, mut bi) = (xi, y[1], y[0]);
    if xi >= PI {
        xi -= PI;
        ar = -ar;
        bi = -bi;
    }
    let norm = (ar * ar + bi * bi).sqrt();
    if norm > 1.0 {
        ar /= norm;
        bi /= norm;
    }
    let triple = SpectralTriple::new(xi.clamp(0.0, PI - f64::EPSILON), ar, bi)?;
    let residual = secular_residual(prefix, &triple);
    if !(residual < tol) {
        return Err(Error::NoConvergence { residual });
    }
    Ok(FitResult { triple, residual })
}

/// Endpoint of `y + s·d` on the unit disc whose nonpositive sector matches the data.
fn choose_on_segment(prefix: &SpectrumPrefix, xi: f64, y: [f64; 2], d: [f64; 2]) -> Result<[f64; 2]> {
    // |y + s d|² = 1
    let b = y[0] * d[0] + y[1] * d[1];
    let c = y[0] * y[0] + y[1] * y[1] - 1.0;
    let disc = (b * b - c).max(0.0).sqrt();
    let want_neg = prefix.negative_kappa.len();
    let mut candidates = Vec::new();
    for s in [-b - disc, -b + disc] {
        let p = [y[0] + s * d[0], y[1] + s * d[1]];
        if let Ok(t) = SpectralTriple::new(xi, p[1], p[0]) {
            let zero = zero_mode_exists(&t, &prefix.geometry);
            let neg = negative_levels(&t, &prefix.geometry).map(|v| v.len()).unwrap_or(usize::MAX);
            let score = (zero != prefix.has_zero_mode) as usize + neg.abs_diff(want_neg);
            candidates.push((score, p));
        }
    }
    candidates
        .into_iter()
        .min_by_key(|c| c.0)
        .map(|c| c.1)
        .ok_or_else(|| Error::InsufficientData("parameters not identifiable from the data".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::spectrum_of_triple;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn prefix_of(t: (f64, f64, f64), geom: Geometry, n: usize) -> SpectrumPrefix {
        let t = SpectralTriple::new(t.0, t.1, t.2).unwrap();
        SpectrumPrefix::from_spectrum(&spectrum_of_triple(&t, &geom, n).unwrap(), geom)
    }

    fn synthetic(ks: Vec<f64>) -> SpectrumPrefix {
        SpectrumPrefix::new(ks, false, vec![], Geometry::unit()).unwrap()
    }

    #[test]
    fn c3_matches_forward_roots() {
        // high-order coefficient checked against directly computed roots
        let geom = Geometry::unit();
        let t = SpectralTriple::new(0.7, 0.2, 0.3).unwrap();
        let p = prefix_of((0.7, 0.2, 0.3), geom, 400);
        let (a1, a2, a3) = a_coefficients(&t, &geom).unwrap();
        for &n in &[300usize, 301] {
            let x = p.positive_k[n - 1];
            let nf = n as f64;
            let c1 = -((-1f64).powi(n as i32) * a1 + a2) / PI;
            let c3 = (x - PI * nf - c1 / nf) * nf.powi(3);
            assert!((c3 - c3_from(c1, a2, a3)).abs() < 1e-4, "n={n}: {c3} vs {}", c3_from(c1, a2, a3));
        }
    }

    #[test]
    fn classify_examples() {
        let ks: Vec<f64> = (1..=40).map(|n| PI * n as f64).collect();
        assert_eq!(classify_case(&synthetic(ks), TOL_SIN).unwrap().case, Case::I);

        let mut ks = Vec::new();
        for n in 0..20 {
            ks.push(2.0 * PI / 3.0 + 2.0 * PI * n as f64);
            ks.push(4.0 * PI / 3.0 + 2.0 * PI * n as f64);
        }
        assert_eq!(classify_case(&synthetic(ks), TOL_SIN).unwrap().case, Case::II);

        let p = prefix_of((FRAC_PI_4, 0.0, 0.0), Geometry::unit(), 64);
        assert_eq!(classify_case(&p, TOL_SIN).unwrap().case, Case::III);

        let short = synthetic(vec![1.0, 2.0, 3.0]);
        assert!(matches!(classify_case(&short, TOL_SIN), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn case_i_examples() {
        let g = Geometry::new(1.0, 0.5).unwrap();
        let ks: Vec<f64> = (1..=20).map(|n| PI * n as f64).collect();
        let p = SpectrumPrefix::new(ks.clone(), true, vec![], g).unwrap();
        assert_eq!(recover_case_i(&p).unwrap(), SpectralTriple::new(0.0, 1.0, 0.0).unwrap());
        let p = SpectrumPrefix::new(ks.clone(), false, vec![], g).unwrap();
        assert_eq!(recover_case_i(&p).unwrap().alpha_r, -1.0);
        let p = SpectrumPrefix::new(ks.clone(), false, vec![1.0 / g.l0], g).unwrap();
        assert!(recover_case_i(&p).unwrap().alpha_r.abs() < 1e-15);
        let p = SpectrumPrefix::new(ks, true, vec![1.0], g).unwrap();
        assert!(matches!(recover_case_i(&p), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn case_ii_examples() {
        let g = Geometry::unit();
        let mut ks = Vec::new();
        for n in 0..20 {
            ks.push(2.0 * PI / 3.0 + 2.0 * PI * n as f64);
            ks.push(4.0 * PI / 3.0 + 2.0 * PI * n as f64);
        }
        let t = recover_case_ii(&synthetic(ks)).unwrap();
        assert!(t.distance(&SpectralTriple::new(FRAC_PI_2, 0.0, 0.5).unwrap()) < 1e-12);

        let truth = SpectralTriple::new(PI / 3.0, -0.5, 0.3).unwrap();
        let p = prefix_of((truth.xi, truth.alpha_r, truth.beta_i), g, 400);
        assert_eq!(classify_case(&p, TOL_SIN).unwrap().case, Case::II);
        assert!(recover_case_ii(&p).unwrap().distance(&truth) < 1e-6);

        let truth = SpectralTriple::new(FRAC_PI_4, -FRAC_PI_4.cos(), 0.0).unwrap();
        let p = prefix_of((truth.xi, truth.alpha_r, truth.beta_i), g, 64);
        assert!(recover_case_ii(&p).unwrap().distance(&truth) < 1e-10);
    }

    #[test]
    fn case_ii_susy_doublets() {
        let p = prefix_of((FRAC_PI_2, 0.0, -1.0), Geometry::unit(), 40);
        let t = recover_case_ii(&p).unwrap();
        assert!(t.distance(&SpectralTriple::new(FRAC_PI_2, 0.0, -1.0).unwrap()) < 1e-12);
        let mut simple = p.clone();
        simple.positive_multiplicity.clear();
        assert_eq!(recover_case_ii(&simple).unwrap_err(), Error::DegenerateTail);
    }

    #[test]
    fn c_coeffs_examples() {
        let p = prefix_of((FRAC_PI_4, 0.0, 0.0), Geometry::unit(), 64);
        let c = estimate_c_coeffs(&p).unwrap();
        assert!((c.c1_plus + 2.0 / PI).abs() < 1e-8 && (c.c1_minus + 2.0 / PI).abs() < 1e-8);
        assert!(c.a1.abs() < 1e-8);

        let p = prefix_of((PI / 6.0, 0.2, 0.0), Geometry::unit(), 64);
        let c = estimate_c_coeffs(&p).unwrap();
        assert!((c.c1_plus - c.c1_minus).abs() < 1e-8);
    }

    #[test]
    fn c_coeffs_from_synthetic_sequence() {
        let (c1, c3) = (-0.4, 0.25);
        let ks: Vec<f64> = (1..=64)
            .map(|n| {
                let n = n as f64;
                PI * n + c1 / n + c3 / n.powi(3)
            })
            .collect();
        let c = estimate_c_coeffs(&synthetic(ks)).unwrap();
        for (a, b) in [(c.c1_plus, c1), (c.c1_minus, c1), (c.c3_plus, c3), (c.c3_minus, c3)] {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn case_iii_examples() {
        let g = Geometry::unit();
        let coeffs = |a1, a2, a3| AsymptoticCoeffs {
            c1_plus: 0.0,
            c1_minus: 0.0,
            c3_plus: 0.0,
            c3_minus: 0.0,
            a1,
            a2,
            a3,
            residual: 0.0,
        };
        let t = recover_case_iii(&coeffs(0.0, 2.0, 1.0), &g).unwrap();
        assert!(t.distance(&SpectralTriple::new(FRAC_PI_4, 0.0, 0.0).unwrap()) < 1e-14);

        let err = recover_case_iii(&coeffs(-2.0, 2.0, -1.0), &g).unwrap_err();
        assert!(matches!(err, Error::InvalidParameters(_)));

        let t = recover_case_iii(&coeffs(0.0, 0.0, 3.0), &g).unwrap();
        assert_eq!((t.xi, t.beta_i), (0.0, 0.0));
        assert!((t.alpha_r + 0.5).abs() < 1e-15);
    }

    #[test]
    fn case_iii_round_trip() {
        let g = Geometry::new(1.0, 0.7).unwrap();
        let truth = SpectralTriple::new(1.1, 0.3, -0.45).unwrap();
        let p = prefix_of((truth.xi, truth.alpha_r, truth.beta_i), g, 200);
        let r = recover_parameters(&p).unwrap();
        assert_eq!(r.case, Case::III);
        assert!(r.triple.distance(&truth) < 1e-6, "{:?}", r.triple);
        assert!(r.fit.unwrap().distance(&truth) < 1e-9);
        assert!(r.warning.is_none());
    }

    #[test]
    fn fit_examples() {
        let g = Geometry::unit();
        let p = prefix_of((FRAC_PI_2, 0.0, -1.0), g, 40);
        let f = fit_parameters(&p).unwrap();
        assert!(f.residual < 1e-12);
        assert!(f.triple.distance(&SpectralTriple::new(FRAC_PI_2, 0.0, -1.0).unwrap()) < 1e-10);

        let p = prefix_of((0.0, -1.0, 0.0), g, 40);
        let f = fit_parameters(&p).unwrap();
        assert!(f.triple.distance(&SpectralTriple::new(0.0, -1.0, 0.0).unwrap()) < 1e-10);
        let p = prefix_of((0.0, 1.0, 0.0), g, 40);
        assert!((fit_parameters(&p).unwrap().triple.alpha_r - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fit_tolerates_noise() {
        use rand::{Rng, SeedableRng};
        let g = Geometry::unit();
        let truth = SpectralTriple::new(0.9, -0.3, 0.5).unwrap();
        let mut p = prefix_of((truth.xi, truth.alpha_r, truth.beta_i), g, 200);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for k in &mut p.positive_k {
            *k += rng.random_range(-1e-8..1e-8);
        }
        let f = fit_parameters_with_tol(&p, 1e-6).unwrap();
        assert!(f.triple.distance(&truth) < 1e-6);
    }
}
