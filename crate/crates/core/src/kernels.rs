//! Propagators `K(b, t; a, 0)` for the solvable subfamilies, and an
//! eigenfunction-expansion oracle.
//!
//! Units: `ħ = m = 1`, so a level with wavenumber `k` evolves with phase
//! `e^{-i k² t / 2}`. Physical time `T` maps to `t = ħT/m` (see [`Units`]).
//! Euclidean time is `t = -iτ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{eigenfunction, full_spectrum, Eigenfunction};
use crate::u2core::{c, classify_with_tol, oriented_walls, CharacteristicMatrix, ExtReal, Geometry, C64};

/// Endpoints, complex time and truncation budget of a kernel evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelQuery {
    pub a: f64,
    pub b: f64,
    /// `Im(time) <= 0`.
    pub time: C64,
    pub truncation_tol: f64,
    /// Explicit image cutoff `|n| <= n_max`; required for real time.
    #[serde(default)]
    pub n_max: Option<usize>,
}

impl KernelQuery {
    pub fn new(a: f64, b: f64, time: C64, truncation_tol: f64) -> Result<Self> {
        let q = Self {
            a,
            b,
            time,
            truncation_tol,
            n_max: None,
        };
        q.validate()?;
        Ok(q)
    }

    /// Euclidean time `t = -iτ`.
    pub fn euclidean(a: f64, b: f64, tau: f64, truncation_tol: f64) -> Result<Self> {
        Self::new(a, b, c(0.0, -tau), truncation_tol)
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = Some(n_max);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.b.is_finite()) {
            return Err(Error::InvalidParameters("non-finite endpoints".into()));
        }
        if !(self.time.im <= 0.0) || self.time.norm() == 0.0 || !self.time.re.is_finite() {
            return Err(Error::InvalidParameters(format!(
                "time {} must be nonzero with Im(time) <= 0",
                self.time
            )));
        }
        if !(self.truncation_tol > 0.0) {
            return Err(Error::InvalidParameters("truncation_tol must be positive".into()));
        }
        Ok(())
    }

    /// `τ` such that `|e^{i d²/(2t)}| = e^{-d²/(2τ)}`; infinite for real time.
    fn effective_tau(&self) -> f64 {
        if self.time.im < 0.0 {
            self.time.norm_sqr() / -self.time.im
        } else {
            f64::INFINITY
        }
    }
}

/// Conversion between `ħ = m = 1` and physical units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub hbar: f64,
    pub mass: f64,
}

impl Units {
    /// `t = ħT/m`, the time argument of the kernels in this module.
    pub fn reduced_time(&self, physical: C64) -> C64 {
        physical * (self.hbar / self.mass)
    }

    /// `E = ħ²k²/2m`.
    pub fn energy(&self, k: f64) -> f64 {
        self.hbar * self.hbar * k * k / (2.0 * self.mass)
    }
}

/// `√(1/(2πit))`, principal branch.
fn prefactor(t: C64) -> C64 {
    (c(0.0, 2.0 * PI) * t).inv().sqrt()
}

/// `e^{i d²/(2t)}`.
fn free_phase(d: f64, t: C64) -> C64 {
    (c(0.0, d * d) / (t * 2.0)).exp()
}

/// Image indices `n` with `|shift + n·period|` inside the Gaussian window.
fn image_range(q: &KernelQuery, shifts: &[f64], period: f64, weight_bound: f64) -> Result<(i64, i64)> {
    if let Some(n) = q.n_max {
        return Ok((-(n as i64), n as i64));
    }
    let tau = q.effective_tau();
    if !tau.is_finite() {
        return Err(Error::NonConvergent);
    }
    let pref = prefactor(q.time).norm() * weight_bound;
    // each side's tail is dominated by a geometric series with ratio < 1/2 once
    // |d| > D + period, so 4·pref·e^{-D²/2τ} bounds the omitted terms
    let ln = (4.0 * pref.max(1.0) / q.truncation_tol).ln().max(0.0);
    let d = (2.0 * tau * ln).sqrt() + period;
    let lo = shifts.iter().map(|s| ((-d - s) / period).floor() as i64).min().unwrap_or(0);
    let hi = shifts.iter().map(|s| ((d - s) / period).ceil() as i64).max().unwrap_or(0);
    Ok((lo, hi))
}

/// Wall types of the four explicitly solvable boxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Wall {
    /// `L = 0`, `ψ = 0`.
    Dirichlet,
    /// `L = ∞`, `ψ' = 0`.
    Neumann,
}

/// A box with walls at `x = 0` and `x = l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoxCase {
    pub at_zero: Wall,
    pub at_l: Wall,
}

impl BoxCase {
    pub fn new(at_zero: Wall, at_l: Wall) -> Self {
        Self { at_zero, at_l }
    }

    /// Identifies a separated `U` with walls of length `0` or `∞`.
    pub fn from_u(u: &CharacteristicMatrix, geom: &Geometry) -> Option<Self> {
        let (start, end) = oriented_walls(u, geom, 1e-10)?;
        let wall = |w: ExtReal| match w {
            ExtReal::Infinite => Some(Wall::Neumann),
            ExtReal::Finite(v) if v.abs() <= 1e-10 * geom.l0 => Some(Wall::Dirichlet),
            _ => None,
        };
        Some(Self::new(wall(start)?, wall(end)?))
    }

    /// `ε` of the image sum: `+1` for equal walls.
    pub fn epsilon(&self) -> f64 {
        if self.at_zero == self.at_l {
            1.0
        } else {
            -1.0
        }
    }

    /// Sign of the reflected images: `-1` for a Dirichlet wall at `x = 0`.
    pub fn reflection_sign(&self) -> f64 {
        match self.at_zero {
            Wall::Dirichlet => -1.0,
            Wall::Neumann => 1.0,
        }
    }
}

/// `√(1/(2πit)) Σₙ εⁿ (e^{i(b-a+2nl)²/2t} ∓ e^{i(b+a+2nl)²/2t})`.
pub fn box_kernel(case: BoxCase, geom: &Geometry, q: &KernelQuery) -> Result<C64> {
    q.validate()?;
    let (eps, sign) = (case.epsilon(), case.reflection_sign());
    let period = 2.0 * geom.l;
    let (d1, d2) = (q.b - q.a, q.b + q.a);
    let (lo, hi) = image_range(q, &[d1, d2], period, 2.0)?;
    let mut sum = c(0.0, 0.0);
    for n in lo..=hi {
        let w = if n.rem_euclid(2) == 0 { 1.0 } else { eps };
        let s = n as f64 * period;
        sum += (free_phase(d1 + s, q.time) + free_phase(d2 + s, q.time) * sign) * w;
    }
    Ok(prefactor(q.time) * sum)
}

/// `√(1/(2πit)) Σₙ e^{iθn} e^{i(b-a+nl)²/2t}`; the boundary condition is
/// `ψ(0) = e^{iθ}ψ(l)`, `ψ'(0) = e^{iθ}ψ'(l)`.
pub fn smooth_kernel(theta: f64, geom: &Geometry, q: &KernelQuery) -> Result<C64> {
    q.validate()?;
    let d = q.b - q.a;
    let (lo, hi) = image_range(q, &[d], geom.l, 1.0)?;
    let mut sum = c(0.0, 0.0);
    for n in lo..=hi {
        sum += C64::from_polar(1.0, theta * n as f64) * free_phase(d + n as f64 * geom.l, q.time);
    }
    Ok(prefactor(q.time) * sum)
}

/// `θ` of the smooth-circle condition realised by a scale-invariant `U` with `α_I = 0`.
pub fn smooth_theta(u: &CharacteristicMatrix) -> f64 {
    // U₀₁ = e^{iξ}β = iβ on the F₂ sphere
    (c(0.0, 1.0) * u.beta()).arg()
}

/// Coefficients of the scale-invariant image sum.
///
/// On the sphere `ξ = π/2`, `α_R = 0` the positive levels are
/// `kl = ±θ + 2πn` with `cos θ = -β_I`, and every eigenfunction on the `+θ`
/// branch is `(C₊e^{ikx} + C₋e^{-ikx})/√l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleInvariantData {
    pub c_plus: C64,
    pub c_minus: C64,
    pub theta: f64,
}

impl ScaleInvariantData {
    pub fn new(u: &CharacteristicMatrix) -> Result<Self> {
        if (u.xi() - PI / 2.0).abs() > 1e-10 || u.alpha_r().abs() > 1e-10 {
            return Err(Error::Unsupported("not on the scale-invariant sphere".into()));
        }
        let ai = u.alpha_i();
        let beta = u.beta();
        let bi = beta.im;
        let denominator = ((1.0 + ai) * (1.0 - bi * bi)).max(0.0).sqrt();
        if denominator < 1e-12 {
            return Err(Error::SingularCoefficients { denominator });
        }
        let theta = (-bi).clamp(-1.0, 1.0).acos();
        let e = C64::from_polar(1.0, theta);
        let ib = c(0.0, 1.0) * beta;
        let norm = 2.0 * denominator;
        Ok(Self {
            c_plus: (c(1.0 + ai, 0.0) - ib * e.conj()) / norm,
            c_minus: -(c(1.0 + ai, 0.0) - ib * e) / norm,
            theta,
        })
    }

    /// Weight of `e^{i(b-a+nl)²/2t}`.
    pub fn m(&self, n: i64) -> C64 {
        let ph = C64::from_polar(1.0, self.theta * n as f64);
        self.c_plus.norm_sqr() * ph.conj() + self.c_minus.norm_sqr() * ph
    }

    /// Weight of `e^{i(b+a+nl)²/2t}`.
    pub fn n(&self, n: i64) -> C64 {
        let ph = C64::from_polar(1.0, self.theta * n as f64);
        self.c_plus * self.c_minus.conj() * ph.conj() + self.c_plus.conj() * self.c_minus * ph
    }
}

/// `√(1/(2πit)) Σₙ (Mₙ e^{i(b-a+nl)²/2t} + Nₙ e^{i(b+a+nl)²/2t})` for `U` on the
/// scale-invariant sphere.
pub fn scale_invariant_kernel(u: &CharacteristicMatrix, geom: &Geometry, q: &KernelQuery) -> Result<C64> {
    q.validate()?;
    let data = ScaleInvariantData::new(u)?;
    let (d1, d2) = (q.b - q.a, q.b + q.a);
    let (lo, hi) = image_range(q, &[d1, d2], geom.l, 1.0)?;
    let mut sum = c(0.0, 0.0);
    for n in lo..=hi {
        let s = n as f64 * geom.l;
        sum += data.m(n) * free_phase(d1 + s, q.time) + data.n(n) * free_phase(d2 + s, q.time);
    }
    Ok(prefactor(q.time) * sum)
}

/// Eigenfunction expansion of the kernel over the lowest levels of `U`.
#[derive(Debug, Clone)]
pub struct SpectralKernel {
    modes: Vec<(f64, Eigenfunction)>,
}

/// Value of a truncated eigenfunction expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralSum {
    pub value: C64,
    /// Magnitude of the last included term.
    pub last_term: f64,
    /// Set when `last_term` exceeds the truncation tolerance.
    pub truncation_warning: bool,
}

impl SpectralKernel {
    /// Precomputes the nonpositive levels and the lowest `n_levels` positive ones.
    pub fn new(u: &CharacteristicMatrix, geom: &Geometry, n_levels: usize) -> Result<Self> {
        let spectrum = full_spectrum(u, geom, n_levels)?;
        let mut modes = Vec::new();
        for level in &spectrum.levels {
            for f in eigenfunction(u, geom, level)? {
                modes.push((level.energy, f));
            }
        }
        Ok(Self { modes })
    }

    pub fn eval(&self, q: &KernelQuery) -> Result<SpectralSum> {
        q.validate()?;
        let mut value = c(0.0, 0.0);
        let mut last_term: f64 = 0.0;
        for (energy, f) in &self.modes {
            // E = k² in ħ²/2m = 1 units evolves as e^{-ik²t/2} here
            let term = f.value(q.b) * f.value(q.a).conj() * (c(0.0, -0.5 * energy) * q.time).exp();
            value += term;
            last_term = term.norm();
        }
        Ok(SpectralSum {
            value,
            last_term,
            truncation_warning: last_term > q.truncation_tol,
        })
    }
}

pub fn spectral_kernel(u: &CharacteristicMatrix, geom: &Geometry, q: &KernelQuery, n_levels: usize) -> Result<SpectralSum> {
    SpectralKernel::new(u, geom, n_levels)?.eval(q)
}

/// Closed form applicable to a boundary condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelFamily {
    Box(BoxCase),
    Smooth { theta: f64 },
    ScaleInvariant(ScaleInvariantData),
}

impl KernelFamily {
    pub fn of(u: &CharacteristicMatrix, geom: &Geometry) -> Result<Self> {
        if let Some(b) = BoxCase::from_u(u, geom) {
            return Ok(KernelFamily::Box(b));
        }
        let report = classify_with_tol(u, geom, 1e-10);
        if report.smooth {
            return Ok(KernelFamily::Smooth { theta: smooth_theta(u) });
        }
        if report.scale_independent {
            return Ok(KernelFamily::ScaleInvariant(ScaleInvariantData::new(u)?));
        }
        Err(Error::Unsupported(
            "no closed-form kernel outside the boxes and the scale-invariant sphere".into(),
        ))
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::Box(_) => "box",
            KernelFamily::Smooth { .. } => "smooth",
            KernelFamily::ScaleInvariant(_) => "f2",
        }
    }

    pub fn eval(&self, u: &CharacteristicMatrix, geom: &Geometry, q: &KernelQuery) -> Result<C64> {
        match self {
            KernelFamily::Box(b) => box_kernel(*b, geom, q),
            KernelFamily::Smooth { theta } => smooth_kernel(*theta, geom, q),
            KernelFamily::ScaleInvariant(_) => scale_invariant_kernel(u, geom, q),
        }
    }

    /// Image weights for `|n| <= n_max`, direct images first.
    pub fn weights(&self, n_max: i64) -> Vec<C64> {
        let mut w = Vec::new();
        for n in -n_max..=n_max {
            match self {
                KernelFamily::Box(b) => {
                    let e = if n.rem_euclid(2) == 0 { 1.0 } else { b.epsilon() };
                    w.push(c(e, 0.0));
                    w.push(c(e * b.reflection_sign(), 0.0));
                }
                KernelFamily::Smooth { theta } => w.push(C64::from_polar(1.0, theta * n as f64)),
                KernelFamily::ScaleInvariant(d) => {
                    w.push(d.m(n));
                    w.push(d.n(n));
                }
            }
        }
        w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckReport {
    pub family: String,
    pub closed_form: C64,
    pub spectral: C64,
    pub deviation: f64,
    /// Every image weight has modulus one.
    pub unimodular_weights: bool,
    pub truncation_warning: bool,
}

/// Compares the closed form with the eigenfunction expansion at many queries.
#[derive(Debug, Clone)]
pub struct Crosscheck {
    u: CharacteristicMatrix,
    geom: Geometry,
    family: KernelFamily,
    oracle: SpectralKernel,
}

impl Crosscheck {
    pub fn new(u: &CharacteristicMatrix, geom: &Geometry, n_levels: usize) -> Result<Self> {
        Ok(Self {
            u: *u,
            geom: *geom,
            family: KernelFamily::of(u, geom)?,
            oracle: SpectralKernel::new(u, geom, n_levels)?,
        })
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn unimodular_weights(&self) -> bool {
        self.family.weights(8).iter().all(|w| (w.norm() - 1.0).abs() < 1e-12)
    }

    pub fn check(&self, q: &KernelQuery) -> Result<CrosscheckReport> {
        let closed_form = self.family.eval(&self.u, &self.geom, q)?;
        let spectral = self.oracle.eval(q)?;
        Ok(CrosscheckReport {
            family: self.family.name().to_string(),
            closed_form,
            spectral: spectral.value,
            deviation: (closed_form - spectral.value).norm(),
            unimodular_weights: self.unimodular_weights(),
            truncation_warning: spectral.truncation_warning,
        })
    }
}

/// Number of positive levels used by [`kernel_crosscheck`].
pub const CROSSCHECK_LEVELS: usize = 80;

pub fn kernel_crosscheck(u: &CharacteristicMatrix, geom: &Geometry, q: &KernelQuery) -> Result<CrosscheckReport> {
    Crosscheck::new(u, geom, CROSSCHECK_LEVELS)?.check(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::u2core::{from_matrix, identity2, sigma1, sigma3};

    fn unit() -> Geometry {
        Geometry::unit()
    }

    #[test]
    fn dirichlet_box_matches_sine_series() {
        let g = unit();
        let tau = 0.1;
        let case = BoxCase::new(Wall::Dirichlet, Wall::Dirichlet);
        for &a in &[0.1, 0.37, 0.8] {
            let k = box_kernel(case, &g, &KernelQuery::euclidean(a, a, tau, 1e-14).unwrap()).unwrap();
            let series: f64 = (1..200)
                .map(|n| {
                    let kn = PI * n as f64;
                    2.0 * (kn * a).sin().powi(2) * (-0.5 * kn * kn * tau).exp()
                })
                .sum();
            assert!((k.re - series).abs() < 1e-10 && k.im.abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_box_trace_matches_spectrum() {
        let g = unit();
        let tau = 0.1;
        let u = from_matrix(&sigma3()).unwrap();
        let case = BoxCase::from_u(&u, &g).unwrap();
        let nodes = 400;
        let h = g.l / nodes as f64;
        let trace: f64 = (0..nodes)
            .map(|j| {
                let x = (j as f64 + 0.5) * h;
                box_kernel(case, &g, &KernelQuery::euclidean(x, x, tau, 1e-14).unwrap()).unwrap().re * h
            })
            .sum();
        let sp = full_spectrum(&u, &g, 60).unwrap();
        let expect: f64 = sp.levels.iter().map(|l| (-0.5 * l.energy * tau).exp()).sum();
        assert!((trace - expect).abs() < 1e-8, "{trace} vs {expect}");
    }

    #[test]
    fn box_walls_of_dirichlet_and_sigma3() {
        let g = unit();
        let dir = from_matrix(&(-identity2())).unwrap();
        assert_eq!(BoxCase::from_u(&dir, &g), Some(BoxCase::new(Wall::Dirichlet, Wall::Dirichlet)));
        let s3 = BoxCase::from_u(&from_matrix(&sigma3()).unwrap(), &g).unwrap();
        assert_ne!(s3.at_zero, s3.at_l);
        assert_eq!(s3.epsilon(), -1.0);
    }

    #[test]
    fn box_vanishes_at_dirichlet_wall() {
        let g = unit();
        let case = BoxCase::new(Wall::Dirichlet, Wall::Neumann);
        let q = KernelQuery::euclidean(0.3, 0.0, 0.05, 1e-14).unwrap();
        assert!(box_kernel(case, &g, &q).unwrap().norm() < 1e-14);
        let near = KernelQuery::euclidean(0.3, 1e-6, 0.05, 1e-14).unwrap();
        let nearer = KernelQuery::euclidean(0.3, 5e-7, 0.05, 1e-14).unwrap();
        let ratio = box_kernel(case, &g, &near).unwrap().re / box_kernel(case, &g, &nearer).unwrap().re;
        assert!((ratio - 2.0).abs() < 1e-5);
    }

    #[test]
    fn smooth_theta_zero_trace_is_jacobi_theta() {
        let g = Geometry::new(1.3, 1.0).unwrap();
        let tau = 0.1 * g.l * g.l;
        let k = smooth_kernel(0.0, &g, &KernelQuery::euclidean(0.4, 0.4, tau, 1e-15).unwrap()).unwrap();
        let trace = k.re * g.l;
        let series = 1.0
            + 2.0
                * (1..100)
                    .map(|n| (-0.5 * (2.0 * PI * n as f64 / g.l).powi(2) * tau).exp())
                    .sum::<f64>();
        assert!((trace - series).abs() < 1e-12);
    }

    #[test]
    fn smooth_shift_covariance() {
        let g = unit();
        for &theta in &[0.0, PI / 3.0, PI, 5.0 * PI / 3.0] {
            let q0 = KernelQuery::euclidean(0.2, 0.55, 0.07, 1e-16).unwrap();
            let q1 = KernelQuery { b: 0.55 + g.l, ..q0 };
            let k0 = smooth_kernel(theta, &g, &q0).unwrap();
            let k1 = smooth_kernel(theta, &g, &q1).unwrap();
            assert!((k1 - C64::from_polar(1.0, -theta) * k0).norm() < 1e-12);
        }
    }

    #[test]
    fn smooth_matches_spectral_oracle() {
        let g = unit();
        let u = from_matrix(&sigma1()).unwrap();
        let oracle = SpectralKernel::new(&u, &g, 60).unwrap();
        for &(a, b) in &[(0.1, 0.7), (0.5, 0.5), (0.9, 0.05)] {
            let q = KernelQuery::euclidean(a, b, 0.1, 1e-14).unwrap();
            let closed = smooth_kernel(0.0, &g, &q).unwrap();
            assert!((closed - oracle.eval(&q).unwrap().value).norm() < 1e-8);
        }
        let pi_u = from_matrix(&(-sigma1())).unwrap();
        assert!((smooth_theta(&pi_u).abs() - PI).abs() < 1e-12);
    }

    #[test]
    fn scale_invariant_reduces_to_smooth() {
        let g = unit();
        for &th in &[0.4, 2.0, -1.1] {
            // U = [[0, e^{iθ}], [e^{-iθ}, 0]]
            let m = crate::u2core::Mat2::new(c(0.0, 0.0), C64::from_polar(1.0, th), C64::from_polar(1.0, -th), c(0.0, 0.0));
            let u = from_matrix(&m).unwrap();
            assert!((smooth_theta(&u) - th).abs() < 1e-12);
            let q = KernelQuery::euclidean(0.3, 0.8, 0.05, 1e-15).unwrap();
            let a = smooth_kernel(th, &g, &q).unwrap();
            let b = scale_invariant_kernel(&u, &g, &q).unwrap();
            assert!((a - b).norm() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn scale_invariant_matches_oracle() {
        let g = unit();
        let ai: f64 = 0.5;
        let beta = C64::from_polar((1.0 - ai * ai).sqrt(), 0.3);
        let u = CharacteristicMatrix::new(PI / 2.0, c(0.0, ai), beta).unwrap();
        let check = Crosscheck::new(&u, &g, 80).unwrap();
        assert!(!check.unimodular_weights());
        let d = ScaleInvariantData::new(&u).unwrap();
        assert!(d.m(1).norm() < 1.0);
        for &(a, b) in &[(0.1, 0.7), (0.5, 0.5), (0.93, 0.02)] {
            let r = check.check(&KernelQuery::euclidean(a, b, 0.05, 1e-14).unwrap()).unwrap();
            assert!(r.deviation < 1e-8, "{r:?}");
        }
    }

    #[test]
    fn scale_invariant_singular_denominator() {
        let u = CharacteristicMatrix::new(PI / 2.0, c(0.0, -1.0), c(0.0, 0.0)).unwrap();
        assert!(matches!(ScaleInvariantData::new(&u), Err(Error::SingularCoefficients { .. })));
    }

    #[test]
    fn real_time_needs_cutoff() {
        let g = unit();
        let q = KernelQuery::new(0.2, 0.3, c(0.5, 0.0), 1e-10).unwrap();
        assert_eq!(smooth_kernel(0.0, &g, &q).unwrap_err(), Error::NonConvergent);
        assert!(smooth_kernel(0.0, &g, &q.with_n_max(10)).is_ok());
    }

    #[test]
    fn spectral_semigroup() {
        let g = unit();
        let u = CharacteristicMatrix::new(0.6, c(0.2, 0.3), C64::from_polar((1.0f64 - 0.13).sqrt(), 1.0)).unwrap();
        let k = SpectralKernel::new(&u, &g, 60).unwrap();
        let (t1, t2) = (0.03, 0.05);
        let (a, b) = (0.2, 0.65);
        let nodes = 2000;
        let h = g.l / nodes as f64;
        let conv: C64 = (0..nodes)
            .map(|j| {
                let x = (j as f64 + 0.5) * h;
                let k2 = k.eval(&KernelQuery::euclidean(x, b, t2, 1e-12).unwrap()).unwrap().value;
                let k1 = k.eval(&KernelQuery::euclidean(a, x, t1, 1e-12).unwrap()).unwrap().value;
                k2 * k1 * h
            })
            .sum();
        let direct = k.eval(&KernelQuery::euclidean(a, b, t1 + t2, 1e-12).unwrap()).unwrap().value;
        assert!((conv - direct).norm() < 1e-6);
    }

    #[test]
    fn time_reversal_invariant_kernel_is_real_symmetric() {
        let g = unit();
        let u = CharacteristicMatrix::new(0.6, c(0.2, 0.3), c(0.0, (1.0f64 - 0.13).sqrt())).unwrap();
        let k = SpectralKernel::new(&u, &g, 60).unwrap();
        let kab = k.eval(&KernelQuery::euclidean(0.2, 0.7, 0.1, 1e-12).unwrap()).unwrap().value;
        let kba = k.eval(&KernelQuery::euclidean(0.7, 0.2, 0.1, 1e-12).unwrap()).unwrap().value;
        assert!(kab.im.abs() < 1e-12 && (kab - kba).norm() < 1e-12);
    }

    #[test]
    fn crosscheck_rejects_generic_u() {
        let u = CharacteristicMatrix::new(0.6, c(0.2, 0.3), c(0.0, (1.0f64 - 0.13).sqrt())).unwrap();
        let q = KernelQuery::euclidean(0.1, 0.2, 0.1, 1e-12).unwrap();
        assert!(matches!(kernel_crosscheck(&u, &unit(), &q), Err(Error::Unsupported(_))));
    }

    #[test]
    fn units_round_trip() {
        let units = Units { hbar: 2.0, mass: 0.5 };
        assert_eq!(units.reduced_time(c(1.0, -1.0)), c(4.0, -4.0));
        assert_eq!(units.energy(1.0), 4.0);
    }
}
