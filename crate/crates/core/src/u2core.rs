//! U(2) characteristic matrices of a point interaction on the circle.
//!
//! A boundary condition at the singular point is encoded by a unitary
//! `U = e^{iξ} [[α, β], [-β*, α*]]` with `ξ ∈ [0, π)` and `|α|² + |β|² = 1`.
//! The spectrum only sees the triple `(ξ, Re α, Im β)`; the remaining two
//! real parameters are rotated into each other by a one-parameter group of
//! spectrum-preserving maps.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;

/// Unitarity tolerance accepted by [`from_matrix`].
pub const UNITARITY_TOL: f64 = 1e-10;
/// Default tolerance for subfamily membership tests.
pub const MEMBERSHIP_TOL: f64 = 1e-10;
/// `|cot|` above this is reported as an infinite separated length.
pub const INFINITE_CUTOFF: f64 = 1e14;

const NORM_TOL: f64 = 1e-12;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity2() -> Mat2 {
    Mat2::identity()
}

pub fn sigma1() -> Mat2 {
    Mat2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))
}

pub fn sigma2() -> Mat2 {
    Mat2::new(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0))
}

pub fn sigma3() -> Mat2 {
    Mat2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0))
}

/// `exp(-i φ σ)` for a Pauli matrix `σ`.
pub fn pauli_exp(sigma: &Mat2, phi: f64) -> Mat2 {
    identity2() * c(phi.cos(), 0.0) - sigma * c(0.0, phi.sin())
}

/// Largest entry of `|m† m - I|`.
pub fn unitarity_defect(m: &Mat2) -> f64 {
    (m.adjoint() * m - identity2())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub(crate) fn max_abs_diff(a: &Mat2, b: &Mat2) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Circumference `l` and the auxiliary length `L0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub l: f64,
    #[serde(rename = "L0")]
    pub l0: f64,
}

impl Geometry {
    pub fn new(l: f64, l0: f64) -> Result<Self> {
        if !(l.is_finite() && l > 0.0 && l0.is_finite() && l0 > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "geometry needs finite positive lengths, got l = {l}, L0 = {l0}"
            )));
        }
        Ok(Self { l, l0 })
    }

    pub fn unit() -> Self {
        Self { l: 1.0, l0: 1.0 }
    }
}

impl Default for Geometry {
    fn default() -> Self {
        Self::unit()
    }
}

/// The `(ξ, α, β)` form of a characteristic matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicMatrix {
    xi: f64,
    alpha: C64,
    beta: C64,
}

impl CharacteristicMatrix {
    /// Builds the datum, folding `ξ` into `[0, π)` (the sign goes into `α`, `β`).
    pub fn new(xi: f64, alpha: C64, beta: C64) -> Result<Self> {
        if !(xi.is_finite() && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidParameters("non-finite parameter".into()));
        }
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameters(format!(
                "|alpha|^2 + |beta|^2 = {norm} is not 1"
            )));
        }
        Ok(Self::folded(xi, alpha, beta))
    }

    /// Like [`CharacteristicMatrix::new`] but rescales `(α, β)` onto the unit sphere.
    pub fn new_normalized(xi: f64, alpha: C64, beta: C64) -> Result<Self> {
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if !(norm.is_finite() && norm > 0.0 && xi.is_finite()) {
            return Err(Error::InvalidParameters("cannot normalize (alpha, beta)".into()));
        }
        Ok(Self::folded(xi, alpha / norm, beta / norm))
    }

    fn folded(xi: f64, mut alpha: C64, mut beta: C64) -> Self {
        let mut xi = xi.rem_euclid(2.0 * PI);
        if xi >= 2.0 * PI {
            xi = 0.0;
        }
        if xi >= PI {
            xi -= PI;
            alpha = -alpha;
            beta = -beta;
        }
        // rem_euclid can round up to exactly pi
        if xi >= PI {
            xi = 0.0;
            alpha = -alpha;
            beta = -beta;
        }
        Self { xi, alpha, beta }
    }

    pub fn identity() -> Self {
        Self {
            xi: 0.0,
            alpha: c(1.0, 0.0),
            beta: c(0.0, 0.0),
        }
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }
    pub fn alpha(&self) -> C64 {
        self.alpha
    }
    pub fn beta(&self) -> C64 {
        self.beta
    }
    pub fn alpha_r(&self) -> f64 {
        self.alpha.re
    }
    pub fn alpha_i(&self) -> f64 {
        self.alpha.im
    }
    pub fn beta_r(&self) -> f64 {
        self.beta.re
    }
    pub fn beta_i(&self) -> f64 {
        self.beta.im
    }

    pub fn to_matrix(&self) -> Mat2 {
        to_matrix(self)
    }

    pub fn spectral_triple(&self) -> SpectralTriple {
        spectral_triple(self)
    }
}

impl fmt::Display for CharacteristicMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(xi={}, alpha={}{:+}i, beta={}{:+}i)",
            self.xi, self.alpha.re, self.alpha.im, self.beta.re, self.beta.im
        )
    }
}

/// The spectrum-determining parameters `(ξ, α_R, β_I)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralTriple {
    pub xi: f64,
    pub alpha_r: f64,
    pub beta_i: f64,
}

impl SpectralTriple {
    pub fn new(xi: f64, alpha_r: f64, beta_i: f64) -> Result<Self> {
        if !(xi.is_finite() && alpha_r.is_finite() && beta_i.is_finite()) {
            return Err(Error::InvalidParameters("non-finite triple".into()));
        }
        if !(0.0..PI).contains(&xi) {
            return Err(Error::InvalidParameters(format!("xi = {xi} outside [0, pi)")));
        }
        if alpha_r * alpha_r + beta_i * beta_i > 1.0 + NORM_TOL {
            return Err(Error::InvalidParameters(format!(
                "alpha_r^2 + beta_i^2 = {} exceeds 1",
                alpha_r * alpha_r + beta_i * beta_i
            )));
        }
        Ok(Self { xi, alpha_r, beta_i })
    }

    /// Radius `√(1 - α_R² - β_I²)` of the free `(β_R, α_I)` circle.
    pub fn free_radius(&self) -> f64 {
        (1.0 - self.alpha_r * self.alpha_r - self.beta_i * self.beta_i)
            .max(0.0)
            .sqrt()
    }

    /// A characteristic matrix with this triple, choosing `α_I = 0` and `β_R ≥ 0`.
    pub fn representative(&self) -> CharacteristicMatrix {
        let mut rho = self.free_radius();
        if rho < MEMBERSHIP_TOL {
            rho = 0.0;
        }
        let alpha = c(self.alpha_r, 0.0);
        let beta = c(rho, self.beta_i);
        let n = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        CharacteristicMatrix {
            xi: self.xi,
            alpha: alpha / n,
            beta: beta / n,
        }
    }

    /// Component-wise distance, treating `ξ` modulo `π` together with the sign flip.
    pub fn distance(&self, other: &SpectralTriple) -> f64 {
        let direct = (self.xi - other.xi)
            .abs()
            .max((self.alpha_r - other.alpha_r).abs())
            .max((self.beta_i - other.beta_i).abs());
        let wrapped = (PI - (self.xi - other.xi).abs())
            .abs()
            .max((self.alpha_r + other.alpha_r).abs())
            .max((self.beta_i + other.beta_i).abs());
        direct.min(wrapped)
    }
}

/// Extended real used for separated-wall lengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub fn from_f64(v: f64) -> Self {
        if !v.is_finite() || v.abs() > INFINITE_CUTOFF {
            ExtReal::Infinite
        } else {
            ExtReal::Finite(v)
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtReal::Infinite)
    }

    /// True for a finite value within `tol` of zero.
    pub fn is_zero(&self, tol: f64) -> bool {
        matches!(self, ExtReal::Finite(v) if v.abs() <= tol)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::Infinite => write!(f, "inf"),
        }
    }
}

/// `L₀·cot(φ/2)` in extended-real form.
fn wall_length(l0: f64, phase: f64) -> ExtReal {
    let half = 0.5 * phase;
    let s = half.sin();
    if s == 0.0 {
        return ExtReal::Infinite;
    }
    let c = half.cos();
    // cos(π/2) rounds to 6e-17, which should read as a Dirichlet wall
    ExtReal::from_f64(if c.abs() < 1e-15 { 0.0 } else { l0 * c / s })
}

/// Membership flags of the special subfamilies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubfamilyReport {
    pub parity: bool,
    pub time_reversal: bool,
    pub pt: bool,
    pub separated: bool,
    pub scale_independent: bool,
    pub smooth: bool,
    pub isospectral: bool,
    pub semi_isospectral: bool,
    pub self_dual: bool,
    pub susy_plus: bool,
    pub susy_minus: bool,
    /// `(L₁, L₂) = L₀·cot((ξ ± arccos α_R)/2)`, present for separated `U`.
    /// The two orderings describe the same wall pair with the ends swapped.
    pub separated_lengths: Option<(ExtReal, ExtReal)>,
    /// `θ = arg β`, when `β ≠ 0`.
    pub theta: Option<f64>,
}

/// Decomposes a unitary 2×2 matrix into `(ξ, α, β)`.
pub fn from_matrix(m: &Mat2) -> Result<CharacteristicMatrix> {
    if m.iter().any(|z| !z.is_finite()) {
        return Err(Error::InvalidParameters("non-finite matrix entry".into()));
    }
    let deviation = unitarity_defect(m);
    if deviation > UNITARITY_TOL {
        return Err(Error::NonUnitary {
            deviation,
            tolerance: UNITARITY_TOL,
        });
    }
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let mut xi = 0.5 * det.arg();
    if xi < 0.0 {
        xi += PI;
    }
    if xi >= PI {
        xi -= PI;
    }
    let phase = C64::from_polar(1.0, -xi);
    let s = m * phase;
    // average the redundant entries of the SU(2) part
    let alpha = 0.5 * (s[(0, 0)] + s[(1, 1)].conj());
    let beta = 0.5 * (s[(0, 1)] - s[(1, 0)].conj());
    CharacteristicMatrix::new_normalized(xi, alpha, beta)
}

pub fn to_matrix(u: &CharacteristicMatrix) -> Mat2 {
    let p = C64::from_polar(1.0, u.xi);
    Mat2::new(
        p * u.alpha,
        p * u.beta,
        -p * u.beta.conj(),
        p * u.alpha.conj(),
    )
}

pub fn spectral_triple(u: &CharacteristicMatrix) -> SpectralTriple {
    SpectralTriple {
        xi: u.xi,
        alpha_r: u.alpha.re,
        beta_i: u.beta.im,
    }
}

/// `σ₁ U σ₁`: `α ↦ α*`, `β ↦ -β*`.
pub fn parity_map(u: &CharacteristicMatrix) -> CharacteristicMatrix {
    CharacteristicMatrix {
        xi: u.xi,
        alpha: u.alpha.conj(),
        beta: -u.beta.conj(),
    }
}

/// `Uᵀ`: `β ↦ -β*`.
pub fn time_reversal_map(u: &CharacteristicMatrix) -> CharacteristicMatrix {
    CharacteristicMatrix {
        xi: u.xi,
        alpha: u.alpha,
        beta: -u.beta.conj(),
    }
}

/// `σ₁ Uᵀ σ₁`: `α ↦ α*`.
pub fn pt_map(u: &CharacteristicMatrix) -> CharacteristicMatrix {
    CharacteristicMatrix {
        xi: u.xi,
        alpha: u.alpha.conj(),
        beta: u.beta,
    }
}

/// Rotates `β_R + iα_I` by `e^{iθ}`, keeping the spectral triple fixed.
pub fn p_theta_map(u: &CharacteristicMatrix, theta: f64) -> CharacteristicMatrix {
    let w = c(u.beta.re, u.alpha.im) * C64::from_polar(1.0, theta);
    CharacteristicMatrix {
        xi: u.xi,
        alpha: c(u.alpha.re, w.im),
        beta: c(w.re, u.beta.im),
    }
}

/// Boundary matrix induced by a transformation acting as `Ψ ↦ MΨ`, `Ψ' ↦ NΨ'`.
///
/// Returns `[M(I+U) - N(I-U)] [M(I+U) + N(I-U)]⁻¹` when it is unitary.
pub fn induced_map(u: &CharacteristicMatrix, m: &Mat2, n: &Mat2) -> Result<CharacteristicMatrix> {
    let um = to_matrix(u);
    let id = identity2();
    let plus = m * (id + um);
    let minus = n * (id - um);
    let denom = plus + minus;
    let numer = plus - minus;
    let sv = denom.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition < 1e12) {
        return Err(Error::SingularMap { condition });
    }
    let inv = denom
        .try_inverse()
        .ok_or(Error::SingularMap { condition })?;
    let uw = numer * inv;
    let deviation = unitarity_defect(&uw);
    if deviation > UNITARITY_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    from_matrix(&uw)
}

pub fn classify(u: &CharacteristicMatrix, geom: &Geometry) -> SubfamilyReport {
    classify_with_tol(u, geom, MEMBERSHIP_TOL)
}

pub fn classify_with_tol(u: &CharacteristicMatrix, geom: &Geometry, tol: f64) -> SubfamilyReport {
    let m = to_matrix(u);
    let (ar, ai, br, bi) = (u.alpha.re, u.alpha.im, u.beta.re, u.beta.im);
    let sx = u.xi.sin();
    let zero = |v: f64| v.abs() <= tol;

    let is_plus_identity = max_abs_diff(&m, &identity2()) <= tol;
    let is_minus_identity = max_abs_diff(&m, &(-identity2())) <= tol;
    let susy_plus = max_abs_diff(&m, &sigma1()) <= tol;
    let susy_minus = max_abs_diff(&m, &(-sigma1())) <= tol;

    let parity = zero(ai) && zero(br);
    let separated = u.beta.norm() <= tol;
    let scale_independent =
        (zero(u.xi - FRAC_PI_2) && zero(ar)) || is_plus_identity || is_minus_identity;
    let smooth = scale_independent && zero(ai);
    let isospectral = zero(sx) && zero(bi);
    let semi_isospectral = zero(sx - bi) || zero(sx + bi);
    let self_dual = separated && zero(ai);

    let separated_lengths = separated.then(|| {
        let acos = ar.clamp(-1.0, 1.0).acos();
        (
            wall_length(geom.l0, u.xi + acos),
            wall_length(geom.l0, u.xi - acos),
        )
    });
    let theta = (u.beta.norm() > tol).then(|| u.beta.arg());

    SubfamilyReport {
        parity,
        time_reversal: zero(br),
        pt: zero(ai),
        separated,
        scale_independent,
        smooth,
        isospectral,
        semi_isospectral,
        self_dual,
        susy_plus,
        susy_minus,
        separated_lengths,
        theta,
    }
}

/// Wall lengths of a separated `U` attached to the ends of `(0, l)`.
///
/// Returns `(L_start, L_end)` with `ψ(+0) + L_start ψ'(+0) = 0` and
/// `ψ(l-0) - L_end ψ'(l-0) = 0`; `None` when `β ≠ 0`.
pub fn oriented_walls(
    u: &CharacteristicMatrix,
    geom: &Geometry,
    tol: f64,
) -> Option<(ExtReal, ExtReal)> {
    if u.beta.norm() > tol {
        return None;
    }
    let arg = u.alpha.arg();
    Some((
        wall_length(geom.l0, u.xi + arg),
        wall_length(geom.l0, u.xi - arg),
    ))
}

/// Haar-distributed element of U(2).
pub fn haar_u2<R: Rng + ?Sized>(rng: &mut R) -> CharacteristicMatrix {
    let phi: f64 = rng.random_range(0.0..(2.0 * PI));
    let q = haar_quaternion(rng);
    let alpha = c(q[0], q[1]);
    let beta = c(q[2], q[3]);
    CharacteristicMatrix::folded(phi, alpha, beta)
}

/// Haar-distributed element of SU(2) as a matrix.
pub fn haar_su2<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    let q = haar_quaternion(rng);
    let alpha = c(q[0], q[1]);
    let beta = c(q[2], q[3]);
    Mat2::new(alpha, beta, -beta.conj(), alpha.conj())
}

fn haar_quaternion<R: Rng + ?Sized>(rng: &mut R) -> [f64; 4] {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            return q.map(|x| x / n);
        }
    }
}
