//! Forward spectral problem for one point interaction on the circle.
//!
//! Units: `ħ²/2m = 1`, so a level with wavenumber `k` has energy `k²` and a
//! bound state with decay constant `κ` has energy `-κ²`.
//!
//! The positive sector is the zero set of the real secular function
//!
//! ```text
//! G(k) = [β_I + sin ξ cos kl] + [(cos ξ - α_R) + (cos ξ + α_R)(kL₀)²] sin(kl)/(2kL₀)
//! ```
//!
//! continued to `k = 0` (the zero-mode condition) and to `k = iκ` (bound states).

use std::f64::consts::PI;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::{scan_roots, ScannedRoot};
use crate::u2core::{
    c, max_abs_diff, sigma1, to_matrix, CharacteristicMatrix, Geometry, Mat2, SpectralTriple, C64,
    MEMBERSHIP_TOL,
};

/// Triples whose free radius `√(1-α_R²-β_I²)` is below this are moved onto the
/// degeneracy locus before solving.
pub const LOCUS_SNAP: f64 = 1e-7;
/// Default zero-mode tolerance on `|G(0)|`.
pub const ZERO_MODE_TOL: f64 = 1e-10;

const SERIES_CUTOFF: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    Negative,
    Zero,
    Positive,
}

impl Sector {
    pub fn as_str(&self) -> &'static str {
        match self {
            Sector::Negative => "negative",
            Sector::Zero => "zero",
            Sector::Positive => "positive",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "negative" => Some(Sector::Negative),
            "zero" => Some(Sector::Zero),
            "positive" => Some(Sector::Positive),
            _ => None,
        }
    }
}

/// One (possibly doubly degenerate) energy level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub sector: Sector,
    /// `k` for positive levels, `κ` for negative ones, `0` for the zero mode.
    pub wavenumber: f64,
    pub energy: f64,
    pub multiplicity: usize,
    /// Even-order root of the secular function whose eigenspace is one dimensional.
    #[serde(default)]
    pub near_double: bool,
}

impl Level {
    pub fn positive(k: f64, multiplicity: usize) -> Self {
        Self {
            sector: Sector::Positive,
            wavenumber: k,
            energy: k * k,
            multiplicity,
            near_double: false,
        }
    }

    pub fn negative(kappa: f64, multiplicity: usize) -> Self {
        Self {
            sector: Sector::Negative,
            wavenumber: kappa,
            energy: -kappa * kappa,
            multiplicity,
            near_double: false,
        }
    }

    pub fn zero(multiplicity: usize) -> Self {
        Self {
            sector: Sector::Zero,
            wavenumber: 0.0,
            energy: 0.0,
            multiplicity,
            near_double: false,
        }
    }
}

/// Levels in ascending energy together with the triple that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub levels: Vec<Level>,
    pub triple: SpectralTriple,
}

impl Spectrum {
    pub fn positive(&self) -> impl Iterator<Item = &Level> {
        self.levels.iter().filter(|l| l.sector == Sector::Positive)
    }

    pub fn nonpositive(&self) -> impl Iterator<Item = &Level> {
        self.levels.iter().filter(|l| l.sector != Sector::Positive)
    }

    pub fn has_zero_mode(&self) -> bool {
        self.levels.iter().any(|l| l.sector == Sector::Zero)
    }
}

// ---------------------------------------------------------------------------
// secular functions

fn sinc(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

fn sinc_prime(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        x * (-1.0 / 3.0 + x2 / 30.0 - x2 * x2 / 840.0)
    } else {
        (x * x.cos() - x.sin()) / (x * x)
    }
}

fn sinhc(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        let x2 = x * x;
        1.0 + x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sinh() / x
    }
}

struct Coefficients {
    beta_i: f64,
    sin_xi: f64,
    /// `cos ξ - α_R`
    p: f64,
    /// `cos ξ + α_R`
    q: f64,
    l: f64,
    l0: f64,
}

impl Coefficients {
    fn new(t: &SpectralTriple, g: &Geometry) -> Self {
        let (s, cx) = t.xi.sin_cos();
        // cos(π/2) rounds to 6e-17; exact cancellations must stay exact
        let clean = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
        Self {
            beta_i: t.beta_i,
            sin_xi: clean(s),
            p: clean(cx - t.alpha_r),
            q: clean(cx + t.alpha_r),
            l: g.l,
            l0: g.l0,
        }
    }

    fn g(&self, k: f64) -> f64 {
        let kl = k * self.l;
        let q = k * self.l0;
        self.beta_i
            + self.sin_xi * kl.cos()
            + (self.p + self.q * q * q) * self.l / (2.0 * self.l0) * sinc(kl)
    }

    fn dg(&self, k: f64) -> f64 {
        let kl = k * self.l;
        let q = k * self.l0;
        let ratio = self.l / (2.0 * self.l0);
        -self.sin_xi * self.l * kl.sin()
            + 2.0 * self.q * q * self.l0 * ratio * sinc(kl)
            + (self.p + self.q * q * q) * ratio * self.l * sinc_prime(kl)
    }

    /// Magnitude of the individual terms of `G`, used to scale tolerances.
    fn scale(&self, k: f64) -> f64 {
        let kl = k * self.l;
        let q = k * self.l0;
        self.beta_i.abs()
            + self.sin_xi.abs()
            + (self.p.abs() + self.q.abs() * q * q) * self.l / (2.0 * self.l0) * (1.0f64).min(1.0 / kl.max(1e-300))
    }

    /// `2 e^{-κl} G_neg(κ)`; same zeros as the bound-state condition, no overflow.
    fn g_neg_scaled(&self, kappa: f64) -> f64 {
        let t = kappa * self.l;
        let e1 = (-t).exp();
        let e2 = e1 * e1;
        // (1 - e^{-2t}) / (2κL₀) = (l/L₀) (1 - e^{-2t})/(2t)
        let f_over = self.l / self.l0 * one_minus_exp_ratio(t);
        let q = kappa * self.l0;
        2.0 * self.beta_i * e1 + self.sin_xi * (1.0 + e2) + (self.p - self.q * q * q) * f_over
    }

    fn dg_neg_scaled(&self, kappa: f64) -> f64 {
        let t = kappa * self.l;
        let e1 = (-t).exp();
        let e2 = e1 * e1;
        let q = kappa * self.l0;
        let ratio = self.l / self.l0;
        let f_over = ratio * one_minus_exp_ratio(t);
        let df_over = ratio * self.l * one_minus_exp_ratio_prime(t);
        -2.0 * self.beta_i * self.l * e1 - 2.0 * self.l * self.sin_xi * e2
            + (self.p - self.q * q * q) * df_over
            - 2.0 * self.q * q * self.l0 * f_over
    }

    fn neg_scale(&self, kappa: f64) -> f64 {
        let q = kappa * self.l0;
        2.0 * self.beta_i.abs()
            + 2.0 * self.sin_xi.abs()
            + (self.p.abs() + self.q.abs() * q * q) * self.l / self.l0 * (1.0f64).min(0.5 / (kappa * self.l).max(1e-300))
    }
}

/// `(1 - e^{-2t}) / (2t)`.
fn one_minus_exp_ratio(t: f64) -> f64 {
    if t.abs() < 1e-3 {
        1.0 - t + 2.0 * t * t / 3.0 - t * t * t / 3.0 + 2.0 * t.powi(4) / 15.0
    } else {
        -(-2.0 * t).exp_m1() / (2.0 * t)
    }
}

fn one_minus_exp_ratio_prime(t: f64) -> f64 {
    if t.abs() < 1e-3 {
        -1.0 + 4.0 * t / 3.0 - t * t + 8.0 * t.powi(3) / 15.0
    } else {
        let e2 = (-2.0 * t).exp();
        (2.0 * t * e2 + (-2.0 * t).exp_m1()) / (2.0 * t * t)
    }
}

/// The positive-sector secular function `G(k)`, continuous at `k = 0`.
pub fn secular_positive(triple: &SpectralTriple, geom: &Geometry, k: f64) -> f64 {
    Coefficients::new(triple, geom).g(k)
}

/// `dG/dk`.
pub fn secular_positive_derivative(triple: &SpectralTriple, geom: &Geometry, k: f64) -> f64 {
    Coefficients::new(triple, geom).dg(k)
}

/// The bound-state condition
/// `[β_I + sin ξ cosh κl] + [(cos ξ - α_R) - (cos ξ + α_R)(κL₀)²] sinh(κl)/(2κL₀)`.
pub fn secular_negative(triple: &SpectralTriple, geom: &Geometry, kappa: f64) -> f64 {
    let co = Coefficients::new(triple, geom);
    let t = kappa * geom.l;
    let q = kappa * geom.l0;
    co.beta_i + co.sin_xi * t.cosh() + (co.p - co.q * q * q) * geom.l / (2.0 * geom.l0) * sinhc(t)
}

/// `G(0) = [β_I + sin ξ] + [cos ξ - α_R] l/(2L₀)`.
pub fn secular_zero(triple: &SpectralTriple, geom: &Geometry) -> f64 {
    Coefficients::new(triple, geom).g(0.0)
}

pub fn zero_mode_exists(triple: &SpectralTriple, geom: &Geometry) -> bool {
    zero_mode_exists_with_tol(triple, geom, ZERO_MODE_TOL)
}

pub fn zero_mode_exists_with_tol(triple: &SpectralTriple, geom: &Geometry, tol: f64) -> bool {
    secular_zero(&snap_triple(triple), geom).abs() < tol
}

/// Moves a triple within [`LOCUS_SNAP`] of the disc boundary onto it.
pub fn snap_triple(t: &SpectralTriple) -> SpectralTriple {
    let r2 = t.alpha_r * t.alpha_r + t.beta_i * t.beta_i;
    if 1.0 - r2 < LOCUS_SNAP * LOCUS_SNAP {
        let r = r2.sqrt();
        SpectralTriple {
            xi: t.xi,
            alpha_r: t.alpha_r / r,
            beta_i: t.beta_i / r,
        }
    } else {
        *t
    }
}

/// True when the (snapped) triple lies on the degeneracy locus
/// `α_I = β_R = 0`, `β_I ≠ 0`.
pub fn on_degeneracy_locus(t: &SpectralTriple) -> bool {
    let s = snap_triple(t);
    s.alpha_r * s.alpha_r + s.beta_i * s.beta_i >= 1.0 - 1e-15 && s.beta_i.abs() > MEMBERSHIP_TOL
}

// ---------------------------------------------------------------------------
// secular matrices

/// The 2×2 matrix whose null vectors are the coefficients `(A_k, B_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecularMatrix {
    pub sector: Sector,
    pub wavenumber: f64,
    pub entries: Mat2,
}

impl SecularMatrix {
    /// Singular values, largest first.
    /// `[s_max, s_min]`, with `s_min = |det| / s_max` to keep relative accuracy near a root.
    pub fn singular_values(&self) -> [f64; 2] {
        let f2: f64 = self.entries.iter().map(|z| z.norm_sqr()).sum();
        let det = self.entries.determinant().norm();
        let disc = (f2 * f2 - 4.0 * det * det).max(0.0).sqrt();
        let s_max = (0.5 * (f2 + disc)).sqrt();
        if s_max == 0.0 {
            return [0.0, 0.0];
        }
        [s_max, det / s_max]
    }

    /// Number of singular values below `tol`.
    pub fn nullity(&self, tol: f64) -> usize {
        self.singular_values().iter().filter(|s| **s <= tol).count()
    }

    /// Scale used for rank decisions.
    pub fn rank_scale(&self, geom: &Geometry) -> f64 {
        1.0 + self.wavenumber * geom.l0 + self.wavenumber * geom.l
    }
}

/// `[(U - I) τ_k - kL₀ (U + I) σ₃ τ_k σ₃]` with `τ_k = [[1, 1], [e^{ikl}, e^{-ikl}]]`.
pub fn secular_matrix(u: &CharacteristicMatrix, geom: &Geometry, k: f64) -> SecularMatrix {
    let um = to_matrix(u);
    let (psi, dpsi) = boundary_columns(Sector::Positive, k, geom);
    SecularMatrix {
        sector: Sector::Positive,
        wavenumber: k,
        entries: boundary_operator(&um, geom, &psi, &dpsi),
    }
}

pub fn sector_matrix(u: &CharacteristicMatrix, geom: &Geometry, sector: Sector, wavenumber: f64) -> SecularMatrix {
    let um = to_matrix(u);
    let (psi, dpsi) = boundary_columns(sector, wavenumber, geom);
    SecularMatrix {
        sector,
        wavenumber,
        entries: boundary_operator(&um, geom, &psi, &dpsi),
    }
}

fn boundary_operator(um: &Mat2, geom: &Geometry, psi: &Mat2, dpsi: &Mat2) -> Mat2 {
    let id = Mat2::identity();
    (um - id) * psi + (um + id) * dpsi * c(0.0, geom.l0)
}

/// Columns map basis coefficients to `Ψ = (ψ(+0), ψ(l-0))` and
/// `Ψ' = (ψ'(+0), -ψ'(l-0))`.
fn boundary_columns(sector: Sector, w: f64, geom: &Geometry) -> (Mat2, Mat2) {
    let l = geom.l;
    match sector {
        Sector::Positive => {
            let e = C64::from_polar(1.0, w * l);
            let ik = c(0.0, w);
            let psi = Mat2::new(c(1.0, 0.0), c(1.0, 0.0), e, e.conj());
            let dpsi = Mat2::new(ik, -ik, -ik * e, ik * e.conj());
            (psi, dpsi)
        }
        Sector::Negative => {
            // basis e^{κ(x-l)}, e^{-κx}
            let e = c((-w * l).exp(), 0.0);
            let one = c(1.0, 0.0);
            let kk = c(w, 0.0);
            let psi = Mat2::new(e, one, one, e);
            let dpsi = Mat2::new(kk * e, -kk, -kk, kk * e);
            (psi, dpsi)
        }
        Sector::Zero => {
            let psi = Mat2::new(c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(l, 0.0));
            let dpsi = Mat2::new(c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0));
            (psi, dpsi)
        }
    }
}

// ---------------------------------------------------------------------------
// level search

/// Number of grid cells per `π/l` in the positive scan.
const CELLS_PER_PI: f64 = 16.0;

fn positive_grid_step(geom: &Geometry) -> f64 {
    (PI / (CELLS_PER_PI * geom.l)).min(0.25 / geom.l0)
}

fn multiplicity_on_locus(rep: &CharacteristicMatrix, geom: &Geometry, sector: Sector, w: f64) -> usize {
    let m = sector_matrix(rep, geom, sector, w);
    let tol = 1e-8 * m.rank_scale(geom);
    if m.nullity(tol) >= 2 {
        2
    } else {
        1
    }
}

fn assign_multiplicities(
    triple: &SpectralTriple,
    geom: &Geometry,
    sector: Sector,
    roots: &[ScannedRoot],
) -> Vec<Level> {
    let locus = on_degeneracy_locus(triple);
    let rep = snap_triple(triple).representative();
    roots
        .iter()
        .map(|r| {
            let mult = if locus && r.touching {
                multiplicity_on_locus(&rep, geom, sector, r.x)
            } else {
                1
            };
            let mut level = match sector {
                Sector::Positive => Level::positive(r.x, mult),
                Sector::Negative => Level::negative(r.x, mult),
                Sector::Zero => Level::zero(mult),
            };
            level.near_double = r.touching && mult == 1;
            level
        })
        .collect()
}

/// The lowest `count` distinct positive levels.
pub fn positive_levels(triple: &SpectralTriple, geom: &Geometry, count: usize) -> Result<Vec<Level>> {
    if count == 0 {
        return Err(Error::InvalidParameters("count must be at least 1".into()));
    }
    let t = snap_triple(triple);
    let co = Coefficients::new(&t, geom);
    let step = positive_grid_step(geom);
    let cap = (count as f64 + 8.0) * PI * 4.0 / geom.l;
    let k_lo = 1e-6 / geom.l.max(geom.l0);
    let zero_mode = co.g(0.0).abs() < ZERO_MODE_TOL;

    let mut roots: Vec<ScannedRoot> = Vec::with_capacity(count);
    let mut start = k_lo;
    // chunks keep the grid bounded when only a few levels are requested
    while roots.len() < count && start < cap {
        let end = (start + 64.0 * PI / geom.l).min(cap);
        let n = ((end - start) / step).ceil().max(1.0) as usize;
        let xs: Vec<f64> = (0..=n).map(|i| start + (end - start) * i as f64 / n as f64).collect();
        let found = scan_roots(
            |k| co.g(k),
            |k| co.dg(k),
            |k| 1e-12 * (1.0 + co.scale(k)),
            &xs,
            usize::MAX,
        );
        for r in found {
            let dup = roots
                .last()
                .is_some_and(|p| (p.x - r.x).abs() <= 1e-12 * r.x.max(1.0 / geom.l));
            if !dup {
                roots.push(r);
            }
        }
        start = end;
    }
    if zero_mode {
        roots.retain(|r| r.x * geom.l > 1e-4);
    }
    if roots.len() < count {
        return Err(Error::ScanExhausted {
            found: roots.len(),
            requested: count,
            cap: cap * geom.l,
        });
    }
    roots.truncate(count);
    Ok(assign_multiplicities(&t, geom, Sector::Positive, &roots))
}

/// Upper end of the bound-state search.
fn negative_cap(co: &Coefficients, geom: &Geometry) -> f64 {
    let mut kmax = (10.0 / geom.l0).max(10.0 / geom.l);
    let s = 2.0 * co.sin_xi.abs() + 2.0 * co.beta_i.abs();
    for _ in 0..200 {
        let t = kmax * geom.l;
        let f = -(-2.0 * t).exp_m1();
        let q = kmax * geom.l0;
        let stable = if co.q.abs() > 0.0 {
            co.q.abs() * q * f / 2.0 > s + co.p.abs() / (2.0 * q)
        } else if co.sin_xi != 0.0 {
            co.sin_xi.abs() > 2.0 * co.beta_i.abs() * (-t).exp() + co.p.abs() / (2.0 * q)
        } else {
            co.p.abs() * f > 4.0 * co.beta_i.abs() * q * (-t).exp()
        };
        if stable {
            break;
        }
        kmax *= 2.0;
    }
    kmax
}

/// All bound states (at most two counting multiplicity).
pub fn negative_levels(triple: &SpectralTriple, geom: &Geometry) -> Result<Vec<Level>> {
    let t = snap_triple(triple);
    let co = Coefficients::new(&t, geom);
    let kmax = negative_cap(&co, geom);
    let k_lo = 1e-6 / geom.l.max(geom.l0);
    let ratio: f64 = 1.01;
    let n = ((kmax / k_lo).ln() / ratio.ln()).ceil() as usize;
    let mut xs: Vec<f64> = (0..=n).map(|i| k_lo * ratio.powi(i as i32)).collect();
    if let Some(last) = xs.last_mut() {
        *last = last.max(kmax);
    }
    let zero_mode = co.g(0.0).abs() < ZERO_MODE_TOL;
    let mut roots = scan_roots(
        |k| co.g_neg_scaled(k),
        |k| co.dg_neg_scaled(k),
        |k| 1e-12 * (1.0 + co.neg_scale(k)),
        &xs,
        usize::MAX,
    );
    if zero_mode {
        roots.retain(|r| r.x * geom.l > 1e-4);
    }
    let levels = assign_multiplicities(&t, geom, Sector::Negative, &roots);
    let states: usize = levels.iter().map(|l| l.multiplicity).sum();
    if states > 2 {
        return Err(Error::InternalInvariant(format!(
            "found {states} negative states, at most 2 are possible"
        )));
    }
    Ok(levels.into_iter().rev().collect())
}

/// The zero-energy level, if any.
pub fn zero_level(triple: &SpectralTriple, geom: &Geometry) -> Option<Level> {
    let t = snap_triple(triple);
    if !zero_mode_exists(&t, geom) {
        return None;
    }
    let mult = if on_degeneracy_locus(&t) {
        multiplicity_on_locus(&t.representative(), geom, Sector::Zero, 0.0)
    } else {
        1
    };
    Some(Level::zero(mult))
}

/// Negative, zero and the lowest `count` positive levels in ascending energy.
pub fn spectrum_of_triple(triple: &SpectralTriple, geom: &Geometry, count: usize) -> Result<Spectrum> {
    let mut levels = negative_levels(triple, geom)?;
    if let Some(z) = zero_level(triple, geom) {
        levels.push(z);
    }
    levels.extend(positive_levels(triple, geom, count)?);
    let nonpositive: usize = levels
        .iter()
        .filter(|l| l.sector != Sector::Positive)
        .map(|l| l.multiplicity)
        .sum();
    if nonpositive > 2 + 2 {
        return Err(Error::InternalInvariant("too many nonpositive states".into()));
    }
    Ok(Spectrum {
        levels,
        triple: *triple,
    })
}

pub fn full_spectrum(u: &CharacteristicMatrix, geom: &Geometry, count: usize) -> Result<Spectrum> {
    spectrum_of_triple(&u.spectral_triple(), geom, count)
}

// ---------------------------------------------------------------------------
// degeneracy

/// How a degenerate level was identified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DegeneracyKind {
    /// `U = σ₁`: zero singlet, every positive level a doublet.
    SusyUnbroken,
    /// `U = -σ₁`: every level a doublet, no nonpositive levels.
    SusyBroken,
    /// Isolated doublets.
    Isolated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyReport {
    pub locus: bool,
    pub kind: Option<DegeneracyKind>,
    /// Degenerate levels with finite description (empty for the `±σ₁` cases,
    /// where every positive level is degenerate).
    pub levels: Vec<Level>,
}

/// Locates doubly degenerate levels from the closed-form conditions and
/// confirms each by the rank of the sector matrix.
pub fn degeneracy_at(u: &CharacteristicMatrix, geom: &Geometry) -> DegeneracyReport {
    let tol = MEMBERSHIP_TOL;
    let locus = u.alpha_i().abs() <= tol && u.beta_r().abs() <= tol && u.beta_i().abs() > tol;
    if !locus {
        return DegeneracyReport {
            locus,
            kind: None,
            levels: Vec::new(),
        };
    }
    let m = to_matrix(u);
    if max_abs_diff(&m, &sigma1()) <= tol {
        return DegeneracyReport {
            locus,
            kind: Some(DegeneracyKind::SusyUnbroken),
            levels: Vec::new(),
        };
    }
    if max_abs_diff(&m, &(-sigma1())) <= tol {
        return DegeneracyReport {
            locus,
            kind: Some(DegeneracyKind::SusyBroken),
            levels: Vec::new(),
        };
    }

    let t = snap_triple(&u.spectral_triple());
    let rep = t.representative();
    let (s, cx) = t.xi.sin_cos();
    let (p, q) = (cx - t.alpha_r, cx + t.alpha_r);
    let bi = t.beta_i;
    let mut levels = Vec::new();
    let confirm = |sector: Sector, w: f64| {
        let mm = sector_matrix(&rep, geom, sector, w);
        mm.nullity(1e-8 * mm.rank_scale(geom)) == 2
    };

    // E > 0: k²L₀²(cos ξ + α_R) = cos ξ - α_R together with the three conditions
    if q.abs() > tol && p / q > 0.0 {
        let k = (p / q).sqrt() / geom.l0;
        let kl = k * geom.l;
        let kl0 = k * geom.l0;
        let ok = (bi * kl.cos() + s).abs() < 1e-8
            && (bi * kl0 * kl.sin() + p).abs() < 1e-8
            && (bi * kl.sin() + q * kl0).abs() < 1e-8;
        if ok && confirm(Sector::Positive, k) {
            levels.push(Level::positive(k, 2));
        }
    }
    // E <= 0 needs cot ξ = l/(2L₀)
    let cot_target = geom.l / (2.0 * geom.l0);
    if s > tol && (cx / s - cot_target).abs() < 1e-8 {
        if zero_mode_exists(&t, geom) && confirm(Sector::Zero, 0.0) {
            levels.push(Level::zero(2));
        }
        if q.abs() > tol && -p / q > 0.0 {
            let kappa = (-p / q).sqrt() / geom.l0;
            if confirm(Sector::Negative, kappa) {
                levels.push(Level::negative(kappa, 2));
            }
        }
    }
    levels.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    DegeneracyReport {
        locus,
        kind: (!levels.is_empty()).then_some(DegeneracyKind::Isolated),
        levels,
    }
}

// ---------------------------------------------------------------------------
// eigenfunctions

/// `A e^{ikx} + B e^{-ikx}` (positive), `A e^{κx} + B e^{-κx}` (negative) or
/// `A + Bx` (zero), normalised on `(0, l)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenfunction {
    pub sector: Sector,
    pub wavenumber: f64,
    pub a: C64,
    pub b: C64,
    pub l: f64,
}

impl Eigenfunction {
    pub fn value(&self, x: f64) -> C64 {
        let w = self.wavenumber;
        match self.sector {
            Sector::Positive => {
                let e = C64::from_polar(1.0, w * x);
                self.a * e + self.b * e.conj()
            }
            Sector::Negative => self.a * (w * x).exp() + self.b * (-w * x).exp(),
            Sector::Zero => self.a + self.b * x,
        }
    }

    pub fn derivative(&self, x: f64) -> C64 {
        let w = self.wavenumber;
        match self.sector {
            Sector::Positive => {
                let e = C64::from_polar(1.0, w * x);
                c(0.0, w) * (self.a * e - self.b * e.conj())
            }
            Sector::Negative => w * (self.a * (w * x).exp() - self.b * (-w * x).exp()),
            Sector::Zero => self.b,
        }
    }

    pub fn energy(&self) -> f64 {
        match self.sector {
            Sector::Positive => self.wavenumber * self.wavenumber,
            Sector::Negative => -self.wavenumber * self.wavenumber,
            Sector::Zero => 0.0,
        }
    }

    /// `‖(U - I)Ψ + iL₀(U + I)Ψ'‖`.
    pub fn boundary_residual(&self, u: &CharacteristicMatrix, geom: &Geometry) -> f64 {
        let um = to_matrix(u);
        let psi = Vector2::new(self.value(0.0), self.value(geom.l));
        let dpsi = Vector2::new(self.derivative(0.0), -self.derivative(geom.l));
        let id = Mat2::identity();
        ((um - id) * psi + (um + id) * dpsi * c(0.0, geom.l0)).norm()
    }

    /// `∫₀ˡ |ψ|² dx` in closed form.
    pub fn norm_sqr(&self) -> f64 {
        let v = Vector2::new(self.a, self.b);
        let g = gram(self.sector, self.wavenumber, self.l);
        (v.adjoint() * g * v)[(0, 0)].re
    }
}

/// `G_ij = ∫₀ˡ conj(e_i) e_j dx` for the sector basis.
fn gram(sector: Sector, w: f64, l: f64) -> Mat2 {
    match sector {
        Sector::Positive => {
            // ∫ e^{-2ikx} dx
            let g12 = if (w * l).abs() < 1e-8 {
                c(l, -w * l * l)
            } else {
                (c(1.0, 0.0) - C64::from_polar(1.0, -2.0 * w * l)) / c(0.0, 2.0 * w)
            };
            Mat2::new(c(l, 0.0), g12, g12.conj(), c(l, 0.0))
        }
        Sector::Negative => {
            let g11 = l * (2.0 * w * l).exp_m1() / (2.0 * w * l);
            let g22 = -l * (-2.0 * w * l).exp_m1() / (2.0 * w * l);
            Mat2::new(c(g11, 0.0), c(l, 0.0), c(l, 0.0), c(g22, 0.0))
        }
        Sector::Zero => Mat2::new(
            c(l, 0.0),
            c(0.5 * l * l, 0.0),
            c(0.5 * l * l, 0.0),
            c(l * l * l / 3.0, 0.0),
        ),
    }
}

/// Right singular vectors of `m`, ordered by ascending singular value.
fn right_singular_vectors(m: &Mat2) -> ([f64; 2], [Vector2<C64>; 2]) {
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested v_t");
    let s = svd.singular_values;
    let vec = |i: usize| Vector2::new(vt[(i, 0)].conj(), vt[(i, 1)].conj());
    if s[0] <= s[1] {
        ([s[0], s[1]], [vec(0), vec(1)])
    } else {
        ([s[1], s[0]], [vec(1), vec(0)])
    }
}

/// Normalised eigenfunctions of a level (one per unit of multiplicity).
pub fn eigenfunction(u: &CharacteristicMatrix, geom: &Geometry, level: &Level) -> Result<Vec<Eigenfunction>> {
    let w = level.wavenumber;
    let m = sector_matrix(u, geom, level.sector, w);
    let tol = 1e-8 * m.rank_scale(geom);
    let (sv, vecs) = right_singular_vectors(&m.entries);
    let nullity = sv.iter().filter(|s| **s <= tol).count();
    if nullity != level.multiplicity {
        return Err(Error::RankMismatch {
            expected: level.multiplicity,
            found: nullity,
            wavenumber: w,
        });
    }
    let mut basis: Vec<Vector2<C64>> = vecs[..nullity].to_vec();
    if level.sector == Sector::Negative {
        // coefficients were found for e^{κ(x-l)}; convert to e^{κx}
        let shift = (-w * geom.l).exp();
        for v in &mut basis {
            v[0] *= shift;
        }
    }
    let g = gram(level.sector, w, geom.l);
    let inner = |x: &Vector2<C64>, y: &Vector2<C64>| (x.adjoint() * g * y)[(0, 0)];
    let mut ortho: Vec<Vector2<C64>> = Vec::with_capacity(nullity);
    for v in basis {
        let mut v = v;
        for e in &ortho {
            let proj = inner(e, &v);
            v -= e * proj;
        }
        let n = inner(&v, &v).re.sqrt();
        ortho.push(v / c(n, 0.0));
    }
    let fns: Vec<Eigenfunction> = ortho
        .into_iter()
        .map(|v| Eigenfunction {
            sector: level.sector,
            wavenumber: w,
            a: v[0],
            b: v[1],
            l: geom.l,
        })
        .collect();
    for f in &fns {
        let r = f.boundary_residual(u, geom);
        if !(r < 1e-8 * (1.0 + w * geom.l0).max(1.0)) {
            return Err(Error::InternalInvariant(format!(
                "boundary residual {r:.3e} at wavenumber {w}"
            )));
        }
    }
    Ok(fns)
}

/// `j(x) = Im(ψ* ψ')` in units `ħ/m = 1`.
pub fn probability_current(f: &Eigenfunction, x: f64) -> f64 {
    (f.value(x).conj() * f.derivative(x)).im
}

// ---------------------------------------------------------------------------
// supersymmetry and scale independence

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubletPairing {
    pub wavenumber: f64,
    /// `‖φ(l) - εφ(0)‖ + ‖φ'(l) - εφ'(0)‖` for `φ = ψ'/k`.
    pub boundary_residual: f64,
    /// Distance of `ψ'/k` from the doublet span, relative to its norm.
    pub span_residual: f64,
    /// `‖-φ'' - Eφ‖ / (E‖φ‖)` at sample points.
    pub energy_residual: f64,
    /// `‖ψ'‖ / k`; one for a state that is not annihilated.
    pub derivative_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SusyReport {
    /// `ε` with `U = εσ₁`.
    pub epsilon: i8,
    /// `‖ψ₀'‖` of the zero mode when present (`U = σ₁`).
    pub zero_mode_derivative_norm: Option<f64>,
    /// Unbroken when a zero mode is annihilated by the supercharge.
    pub unbroken: bool,
    pub doublets: Vec<DoubletPairing>,
    pub passed: bool,
}

/// Checks that the derivative maps each positive doublet into itself and
/// respects `ψ(l) = εψ(0)`, `ψ'(l) = εψ'(0)`.
pub fn verify_susy_pairing(u: &CharacteristicMatrix, geom: &Geometry, n_levels: usize) -> Result<SusyReport> {
    let m = to_matrix(u);
    let epsilon: i8 = if max_abs_diff(&m, &sigma1()) <= 1e-10 {
        1
    } else if max_abs_diff(&m, &(-sigma1())) <= 1e-10 {
        -1
    } else {
        return Err(Error::NotSusyCase);
    };
    let eps = epsilon as f64;
    let spec = full_spectrum(u, geom, n_levels)?;
    let mut zero_norm = None;
    let mut passed = true;
    if let Some(z) = spec.levels.iter().find(|l| l.sector == Sector::Zero) {
        let f = &eigenfunction(u, geom, z)?[0];
        let d = f.b.norm() * geom.l.sqrt();
        passed &= d < 1e-10;
        zero_norm = Some(d);
    }
    let mut doublets = Vec::new();
    for level in spec.positive() {
        if level.multiplicity != 2 {
            passed = false;
            continue;
        }
        let fs = eigenfunction(u, geom, level)?;
        let k = level.wavenumber;
        let psi = fs[0];
        // φ = ψ'/k: coefficients (iA, -iB)
        let phi = Eigenfunction {
            a: c(0.0, 1.0) * psi.a,
            b: c(0.0, -1.0) * psi.b,
            ..psi
        };
        let bc = (phi.value(geom.l) - eps * phi.value(0.0)).norm()
            + (phi.derivative(geom.l) - eps * phi.derivative(0.0)).norm() / k;
        let g = gram(Sector::Positive, k, geom.l);
        let inner = |x: &Eigenfunction, y: &Eigenfunction| {
            let vx = Vector2::new(x.a, x.b);
            let vy = Vector2::new(y.a, y.b);
            (vx.adjoint() * g * vy)[(0, 0)]
        };
        let phi_norm = inner(&phi, &phi).re.sqrt();
        let c0 = inner(&fs[0], &phi);
        let c1 = inner(&fs[1], &phi);
        let residual = Eigenfunction {
            a: phi.a - c0 * fs[0].a - c1 * fs[1].a,
            b: phi.b - c0 * fs[0].b - c1 * fs[1].b,
            ..phi
        };
        let span = residual.norm_sqr().max(0.0).sqrt() / phi_norm;
        // -φ'' - k²φ at sample points, using the derivative of φ' = ikA e^{ikx} - ikB e^{-ikx}
        let energy = (0..8)
            .map(|j| {
                let x = geom.l * (j as f64 + 0.5) / 8.0;
                let e = C64::from_polar(1.0, k * x);
                let second = -(k * k) * (phi.a * e + phi.b * e.conj());
                (-second - k * k * phi.value(x)).norm()
            })
            .fold(0.0, f64::max)
            / (k * k * phi_norm / geom.l.sqrt());
        let ok = bc < 1e-8 && span < 1e-8 && energy < 1e-8 && (phi_norm - 1.0).abs() < 1e-8;
        passed &= ok;
        doublets.push(DoubletPairing {
            wavenumber: k,
            boundary_residual: bc,
            span_residual: span,
            energy_residual: energy,
            derivative_norm: phi_norm,
        });
    }
    Ok(SusyReport {
        epsilon,
        zero_mode_derivative_norm: zero_norm,
        unbroken: zero_norm.is_some_and(|d| d < 1e-10),
        doublets,
        passed,
    })
}

/// True when the eigen-coefficients `(A : B)` of the lowest positive levels
/// depend on `k` only through `e^{ikl}`, i.e. when `L₀` drops out.
///
/// Simple levels are grouped by `e^{ikl}`; every group needs at least two
/// members with a common `(A : B)`. A non-repeating phase sequence therefore
/// fails, so ask for at least four levels. Doublets are skipped since they
/// contain every direction.
pub fn scale_independence_check(u: &CharacteristicMatrix, geom: &Geometry, n_levels: usize) -> Result<bool> {
    let levels = positive_levels(&u.spectral_triple(), geom, n_levels)?;
    // (phase, A, B, members)
    let mut groups: Vec<(C64, C64, C64, usize)> = Vec::new();
    for level in &levels {
        if level.multiplicity == 2 {
            continue;
        }
        let f = eigenfunction(u, geom, level)?;
        let (a, b) = (f[0].a, f[0].b);
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (a, b) = (a / n, b / n);
        let phase = C64::from_polar(1.0, level.wavenumber * geom.l);
        match groups.iter_mut().find(|g| (g.0 - phase).norm() <= 1e-8) {
            Some(g) => {
                if (g.1 * b - g.2 * a).norm() > 1e-8 {
                    return Ok(false);
                }
                g.3 += 1;
            }
            None => groups.push((phase, a, b, 1)),
        }
    }
    Ok(groups.iter().all(|g| g.3 >= 2))
}

/// Coefficients `(A, B)` of a 2×2 null vector, for tests and diagnostics.
pub fn null_vector(m: &Mat2) -> Vector2<C64> {
    right_singular_vectors(m).1[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::u2core::{from_matrix, haar_u2, identity2, sigma3};
    use rand::{Rng, SeedableRng};
    use std::f64::consts::FRAC_PI_2;

    fn triple(xi: f64, ar: f64, bi: f64) -> SpectralTriple {
        SpectralTriple::new(xi, ar, bi).unwrap()
    }

    #[test]
    fn secular_positive_examples() {
        let g = Geometry::new(1.3, 0.7).unwrap();
        let s1 = triple(FRAC_PI_2, 0.0, -1.0);
        let dir = triple(0.0, -1.0, 0.0);
        for &k in &[0.1, 1.0, 2.5, 17.3] {
            let expect = (k * g.l).cos() - 1.0;
            assert!((secular_positive(&s1, &g, k) - expect).abs() < 1e-14);
            let expect = (k * g.l).sin() / (k * g.l0);
            assert!((secular_positive(&dir, &g, k) - expect).abs() < 1e-13);
        }
        let t = triple(0.4, 0.3, -0.5);
        let g0 = t.beta_i + t.xi.sin() + (t.xi.cos() - t.alpha_r) * g.l / (2.0 * g.l0);
        assert!((secular_positive(&t, &g, 1e-9) - g0).abs() < 1e-12);
        assert_eq!(secular_positive(&t, &g, 0.0), secular_zero(&t, &g));
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let g = Geometry::new(1.0, 0.4).unwrap();
        let t = triple(1.1, -0.2, 0.6);
        for &k in &[1e-6f64, 1e-3, 0.05, 1.0, 7.7, 40.0] {
            let h = 1e-6 * k.max(1e-3);
            let fd = (secular_positive(&t, &g, k + h) - secular_positive(&t, &g, k - h)) / (2.0 * h);
            let an = secular_positive_derivative(&t, &g, k);
            assert!((fd - an).abs() < 1e-6 * (1.0 + an.abs()), "k={k}: {fd} vs {an}");
        }
    }

    #[test]
    fn negative_scaled_is_proportional() {
        let g = Geometry::new(1.0, 0.5).unwrap();
        let t = triple(0.7, 0.2, -0.4);
        let co = Coefficients::new(&t, &g);
        for &kappa in &[1e-5, 0.01, 0.5, 3.0, 20.0] {
            let raw = secular_negative(&t, &g, kappa);
            let scaled = co.g_neg_scaled(kappa);
            assert!((2.0 * (-kappa * g.l).exp() * raw - scaled).abs() < 1e-12 * (1.0 + scaled.abs()));
            let h = 1e-6 * kappa;
            let fd = (co.g_neg_scaled(kappa + h) - co.g_neg_scaled(kappa - h)) / (2.0 * h);
            let an = co.dg_neg_scaled(kappa);
            assert!((fd - an).abs() < 1e-5 * (1.0 + an.abs()), "kappa={kappa}: {fd} vs {an}");
        }
    }

    #[test]
    fn secular_negative_examples() {
        let g = Geometry::new(1.0, 0.8).unwrap();
        assert!(secular_negative(&triple(0.0, 0.0, 0.0), &g, 1.0 / g.l0).abs() < 1e-14);
        let s1 = triple(FRAC_PI_2, 0.0, -1.0);
        let ms1 = triple(FRAC_PI_2, 0.0, 1.0);
        for &kappa in &[0.1, 1.0, 4.0] {
            let v = secular_negative(&s1, &g, kappa);
            assert!((v - ((kappa * g.l).cosh() - 1.0)).abs() < 1e-12 && v > 0.0);
            assert!(secular_negative(&ms1, &g, kappa) >= 2.0);
        }
    }

    #[test]
    fn zero_mode_examples() {
        let g = Geometry::unit();
        assert!(zero_mode_exists(&triple(FRAC_PI_2, 0.0, -1.0), &g));
        assert!(!zero_mode_exists(&triple(FRAC_PI_2, 0.0, 1.0), &g));
        assert!(zero_mode_exists(&triple(0.0, 1.0, 0.0), &g));
    }

    #[test]
    fn positive_levels_examples() {
        let g = Geometry::new(1.7, 0.6).unwrap();
        let lv = positive_levels(&triple(FRAC_PI_2, 0.0, -1.0), &g, 12).unwrap();
        for (n, level) in lv.iter().enumerate() {
            let k = 2.0 * PI * (n + 1) as f64 / g.l;
            assert!((level.wavenumber - k).abs() * g.l < 1e-12);
            assert_eq!(level.multiplicity, 2);
        }
        let lv = positive_levels(&triple(0.0, -1.0, 0.0), &g, 12).unwrap();
        for (n, level) in lv.iter().enumerate() {
            assert!((level.wavenumber * g.l - PI * (n + 1) as f64).abs() < 1e-12);
            assert_eq!(level.multiplicity, 1);
        }
        let lv = positive_levels(&triple(FRAC_PI_2, 0.0, 0.5), &g, 8).unwrap();
        let expect = [2.0, 4.0, 8.0, 10.0, 14.0, 16.0, 20.0, 22.0];
        for (level, e) in lv.iter().zip(expect) {
            assert!((level.wavenumber * g.l - e * PI / 3.0).abs() < 1e-12);
            assert_eq!(level.multiplicity, 1);
        }
    }

    #[test]
    fn negative_levels_examples() {
        let g = Geometry::new(1.0, 0.5).unwrap();
        let lv = negative_levels(&triple(0.0, 0.0, 0.0), &g).unwrap();
        assert_eq!(lv.len(), 1);
        assert!((lv[0].wavenumber * g.l0 - 1.0).abs() < 1e-12);
        assert!(negative_levels(&triple(0.0, -1.0, 0.0), &g).unwrap().is_empty());
        let lv = negative_levels(&triple(0.0, 0.6, 0.0), &g).unwrap();
        assert_eq!(lv.len(), 1);
        assert!((lv[0].wavenumber * g.l0 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn full_spectrum_examples() {
        let g = Geometry::unit();
        let sp = full_spectrum(&from_matrix(&sigma1()).unwrap(), &g, 5).unwrap();
        assert_eq!(sp.levels[0].sector, Sector::Zero);
        assert_eq!(sp.levels[0].multiplicity, 1);
        assert_eq!(sp.levels.len(), 6);

        let sp = full_spectrum(&from_matrix(&(-sigma1())).unwrap(), &g, 5).unwrap();
        assert_eq!(sp.nonpositive().count(), 0);
        for (n, l) in sp.levels.iter().enumerate() {
            assert!((l.wavenumber - (2 * n + 1) as f64 * PI).abs() < 1e-12);
            assert_eq!(l.multiplicity, 2);
        }

        let sp = full_spectrum(&from_matrix(&sigma3()).unwrap(), &g, 5).unwrap();
        assert_eq!(sp.nonpositive().count(), 0);
        for (n, l) in sp.levels.iter().enumerate() {
            assert!((l.wavenumber - (n as f64 + 0.5) * PI).abs() < 1e-12);
            assert_eq!(l.multiplicity, 1);
        }
    }

    #[test]
    fn degeneracy_examples() {
        let g = Geometry::unit();
        let r = degeneracy_at(&from_matrix(&sigma1()).unwrap(), &g);
        assert!(r.locus && r.kind == Some(DegeneracyKind::SusyUnbroken));

        let u = CharacteristicMatrix::new(0.4, c(0.6, 0.0), c(0.3, (1.0f64 - 0.36 - 0.09).sqrt())).unwrap();
        let r = degeneracy_at(&u, &g);
        assert!(!r.locus && r.levels.is_empty());
    }

    #[test]
    fn isolated_positive_doublet() {
        // β_I = 0.8, α_R = -0.6; cos ξ = -α_R/… chosen so that the pair of
        // conditions has a solution: pick k, then ξ from β_I cos kl = -sin ξ.
        let g = Geometry::unit();
        let bi: f64 = -0.8;
        let ar: f64 = (1.0 - bi * bi).sqrt();
        // search ξ on a fine grid and keep the one that satisfies both conditions best
        let residual = |xi: f64| {
            let (s, cx) = xi.sin_cos();
            let (p, q) = (cx - ar, cx + ar);
            if q.abs() < 1e-12 || p / q <= 0.0 {
                return f64::INFINITY;
            }
            let k = (p / q).sqrt();
            (bi * k.cos() + s).abs()
        };
        let mut best = (0.0, f64::INFINITY);
        for i in 1..200_000 {
            let xi = PI * i as f64 / 200_000.0;
            let r = residual(xi);
            if r < best.1 {
                best = (xi, r);
            }
        }
        let (lo, hi) = (best.0 - PI / 200_000.0, best.0 + PI / 200_000.0);
        let (xi, _) = crate::roots::golden_min(residual, lo, hi, 1e-16);
        let u = CharacteristicMatrix::new(xi, c(ar, 0.0), c(0.0, bi)).unwrap();
        let r = degeneracy_at(&u, &g);
        assert!(r.locus);
        assert!(r.levels.len() <= 1);
        // brute-force: rank of the secular matrix at every positive level
        let sp = full_spectrum(&u, &g, 10).unwrap();
        let doublets: Vec<_> = sp.positive().filter(|l| l.multiplicity == 2).collect();
        assert!(doublets.len() <= 1);
        for (a, b) in doublets.iter().zip(&r.levels) {
            assert!((a.wavenumber - b.wavenumber).abs() < 1e-6);
        }
    }

    #[test]
    fn eigenfunction_examples() {
        let g = Geometry::new(2.0, 0.3).unwrap();
        let dir = from_matrix(&(-identity2())).unwrap();
        let f = eigenfunction(&dir, &g, &Level::positive(PI / g.l, 1)).unwrap();
        assert!((f[0].a + f[0].b).norm() < 1e-12);
        assert!((f[0].norm_sqr() - 1.0).abs() < 1e-12);

        let neu = CharacteristicMatrix::identity();
        let f = eigenfunction(&neu, &g, &Level::positive(PI / g.l, 1)).unwrap();
        assert!((f[0].a - f[0].b).norm() < 1e-12);

        let f = eigenfunction(&neu, &g, &Level::zero(1)).unwrap();
        assert!(f[0].b.norm() < 1e-14);
        assert!((f[0].a.norm() - 1.0 / g.l.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn eigenfunction_rank_mismatch() {
        let g = Geometry::unit();
        let dir = from_matrix(&(-identity2())).unwrap();
        let err = eigenfunction(&dir, &g, &Level::positive(PI, 2)).unwrap_err();
        assert!(matches!(err, Error::RankMismatch { found: 1, .. }));
    }

    #[test]
    fn current_examples() {
        let l = 1.5;
        let n = 2.0;
        let f = Eigenfunction {
            sector: Sector::Positive,
            wavenumber: 2.0 * PI * n / l,
            a: c(1.0 / l.sqrt(), 0.0),
            b: c(0.0, 0.0),
            l,
        };
        for &x in &[0.0, 0.3, 1.1] {
            assert!((probability_current(&f, x) - 2.0 * PI * n / (l * l)).abs() < 1e-12);
        }
        let real = Eigenfunction { b: c(1.0 / l.sqrt(), 0.0), ..f };
        assert!(probability_current(&real, 0.4).abs() < 1e-12);
    }

    #[test]
    fn separated_eigenfunctions_carry_no_current() {
        let g = Geometry::unit();
        let u = CharacteristicMatrix::new(0.9, C64::from_polar(1.0, 0.7), c(0.0, 0.0)).unwrap();
        let sp = full_spectrum(&u, &g, 6).unwrap();
        for level in &sp.levels {
            for f in eigenfunction(&u, &g, level).unwrap() {
                assert!(probability_current(&f, 0.0).abs() < 1e-10);
                assert!(probability_current(&f, g.l).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn susy_pairing_examples() {
        let g = Geometry::unit();
        let r = verify_susy_pairing(&from_matrix(&sigma1()).unwrap(), &g, 5).unwrap();
        assert!(r.passed && r.unbroken);
        assert!(r.zero_mode_derivative_norm.unwrap() < 1e-10);
        let r = verify_susy_pairing(&from_matrix(&(-sigma1())).unwrap(), &g, 5).unwrap();
        assert!(r.passed && !r.unbroken && r.zero_mode_derivative_norm.is_none());
        let err = verify_susy_pairing(&from_matrix(&sigma3()).unwrap(), &g, 5).unwrap_err();
        assert_eq!(err, Error::NotSusyCase);
    }

    #[test]
    fn scale_independence_examples() {
        let g = Geometry::unit();
        assert!(scale_independence_check(&from_matrix(&sigma1()).unwrap(), &g, 6).unwrap());
        assert!(scale_independence_check(&from_matrix(&(-identity2())).unwrap(), &g, 6).unwrap());
        let u = triple(PI / 4.0, 0.0, 0.0).representative();
        assert!(!scale_independence_check(&u, &g, 6).unwrap());
        // two phase branches e^{±iθ}, each with a fixed (A : B)
        let f2 = CharacteristicMatrix::new(PI / 2.0, c(0.0, 0.3), C64::from_polar(0.91f64.sqrt(), 0.7)).unwrap();
        assert!(scale_independence_check(&f2, &g, 8).unwrap());
        assert!(scale_independence_check(&from_matrix(&sigma3()).unwrap(), &g, 6).unwrap());
    }

    #[test]
    fn scale_independence_agrees_with_classification() {
        let g = Geometry::new(1.0, 0.6).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for i in 0..30 {
            let u = if i % 2 == 0 {
                haar_u2(&mut rng)
            } else {
                let ai: f64 = rng.random_range(-1.0..1.0);
                let b = C64::from_polar((1.0 - ai * ai).sqrt(), rng.random_range(0.0..2.0 * PI));
                CharacteristicMatrix::new(PI / 2.0, c(0.0, ai), b).unwrap()
            };
            let flag = crate::u2core::classify(&u, &g).scale_independent;
            assert_eq!(scale_independence_check(&u, &g, 8).unwrap(), flag, "{u:?}");
        }
    }
}
