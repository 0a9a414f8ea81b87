//! Circle with point interactions at `x = 0` and `x = l/2`.
//!
//! A state on the circle is folded into `Φ(x) = (ψ(x), ψ(l-x))` on `[0, l/2)`.
//! The connection conditions are
//! `(U₁ - I)Φ(0) + iL₀(U₁ + I)Φ'(0) = 0` and
//! `(U₂ - I)Φ(l/2) + iL₀(U₂ + I)Φ'(l/2) = 0`, with plain derivatives of `Φ`.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::scan_roots;
use crate::spectrum::{Level, Sector, Spectrum};
use crate::u2core::{c, sigma1, sigma2, sigma3, to_matrix, unitarity_defect, CharacteristicMatrix, Geometry, Mat2, C64};

pub type Mat4 = Matrix4<C64>;

/// Nullity threshold on `s_i / s_max`.
const RANK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPointSystem {
    /// Condition at `x = 0`.
    pub u1: CharacteristicMatrix,
    /// Condition at `x = l/2`.
    pub u2: CharacteristicMatrix,
    pub geometry: Geometry,
}

impl TwoPointSystem {
    pub fn new(u1: CharacteristicMatrix, u2: CharacteristicMatrix, geometry: Geometry) -> Self {
        Self { u1, u2, geometry }
    }

    /// `diag(U₁, U₂)`.
    pub fn block_u(&self) -> Mat4 {
        let (a, b) = (to_matrix(&self.u1), to_matrix(&self.u2));
        let mut m = Mat4::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&a);
        m.fixed_view_mut::<2, 2>(2, 2).copy_from(&b);
        m
    }
}

/// `Φ_j = (ψ_j, ψ_{N-1-j})` on the midpoint grid `x_j = (j + ½)l/N`, `N` even.
pub fn doubled_state(psi: &[C64]) -> Result<Vec<[C64; 2]>> {
    let n = psi.len();
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::InvalidParameters(format!("need an even number of samples, got {n}")));
    }
    Ok((0..n / 2).map(|j| [psi[j], psi[n - 1 - j]]).collect())
}

/// Inverse of [`doubled_state`].
pub fn undoubled_state(phi: &[[C64; 2]]) -> Vec<C64> {
    let n = 2 * phi.len();
    let mut psi = vec![c(0.0, 0.0); n];
    for (j, p) in phi.iter().enumerate() {
        psi[j] = p[0];
        psi[n - 1 - j] = p[1];
    }
    psi
}

/// `M(k) = (U - I₄)T_k - kL₀(U + I₄)T_kΣ₃` and its conditioning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockSecular {
    pub k: f64,
    pub t_k: Mat4,
    pub sigma3: Mat4,
    pub u_block: Mat4,
    pub m: Mat4,
    /// `s_min / s_max` of `m`.
    pub merit: f64,
}

pub fn t_matrix(k: f64, l: f64) -> Mat4 {
    let e = C64::from_polar(1.0, 0.5 * k * l);
    let (o, z) = (c(1.0, 0.0), c(0.0, 0.0));
    Mat4::new(o, o, z, z, z, z, o, o, e, e.conj(), z, z, z, z, e, e.conj())
}

pub fn sigma3_block() -> Mat4 {
    Mat4::from_diagonal(&Vector4::new(c(1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)))
}

fn merit_of(m: &Mat4) -> (f64, [f64; 4]) {
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let s = [sv[0], sv[1], sv[2], sv[3]];
    if s[0] == 0.0 {
        return (0.0, s);
    }
    (s[3] / s[0], s)
}

pub fn block_secular(sys: &TwoPointSystem, k: f64) -> BlockSecular {
    let u = sys.block_u();
    let id = Mat4::identity();
    let t = t_matrix(k, sys.geometry.l);
    let s3 = sigma3_block();
    let m = (u - id) * t - (u + id) * t * s3 * c(k * sys.geometry.l0, 0.0);
    BlockSecular {
        k,
        t_k: t,
        sigma3: s3,
        u_block: u,
        m,
        merit: merit_of(&m).0,
    }
}

/// Boundary values `(Φ(0), Φ(l/2))` and plain derivatives for a sector basis
/// in each component: `cos kx`, `sin(kx)/k` (positive, regular at `k = 0`) or
/// `e^{-κx}`, `e^{κ(x-l/2)}` (negative).
fn basis_columns(sector: Sector, w: f64, l: f64) -> (Mat4, Mat4) {
    let h = 0.5 * l;
    let (v0, d0, vh, dh) = match sector {
        Sector::Positive | Sector::Zero => {
            let (s, co) = (w * h).sin_cos();
            let sk = if w * h == 0.0 { h } else { s / w };
            // values at 0 and h, derivatives at 0 and h
            ([1.0, 0.0], [0.0, 1.0], [co, sk], [-w * s, co])
        }
        Sector::Negative => {
            let e = (-w * h).exp();
            ([1.0, e], [-w, w * e], [e, 1.0], [-w * e, w])
        }
    };
    let mut psi = Mat4::zeros();
    let mut dpsi = Mat4::zeros();
    for comp in 0..2 {
        for j in 0..2 {
            let col = 2 * comp + j;
            psi[(comp, col)] = c(v0[j], 0.0);
            psi[(2 + comp, col)] = c(vh[j], 0.0);
            dpsi[(comp, col)] = c(d0[j], 0.0);
            dpsi[(2 + comp, col)] = c(dh[j], 0.0);
        }
    }
    (psi, dpsi)
}

fn sector_matrix(sys: &TwoPointSystem, sector: Sector, w: f64) -> Mat4 {
    let u = sys.block_u();
    let id = Mat4::identity();
    let (psi, dpsi) = basis_columns(sector, w, sys.geometry.l);
    (u - id) * psi + (u + id) * dpsi * c(0.0, sys.geometry.l0)
}

/// Real secular function `Re(det M(w) / √det U)` and `s_max⁴` of `M(w)`.
///
/// The phase-corrected determinant is real for any self-adjoint pair of
/// conditions, so its zeros can be bracketed by sign changes.
fn sector_det(sys: &TwoPointSystem, phase: C64, sector: Sector, w: f64) -> (f64, f64) {
    let m = sector_matrix(sys, sector, w);
    let scale = merit_of(&m).1[0].powi(4);
    ((m.determinant() * phase).re, scale)
}

fn sector_roots(sys: &TwoPointSystem, phase: C64, sector: Sector, xs: &[f64], stop_after: usize) -> Vec<f64> {
    let f = |x: f64| sector_det(sys, phase, sector, x).0;
    let df = |x: f64| {
        let h = 1e-6 * x.abs().max(1.0 / sys.geometry.l);
        (f(x + h) - f(x - h)) / (2.0 * h)
    };
    let tol = |x: f64| 1e-12 * sector_det(sys, phase, sector, x).1;
    scan_roots(f, df, tol, xs, stop_after).into_iter().map(|r| r.x).collect()
}

fn sector_nullity(sys: &TwoPointSystem, sector: Sector, w: f64) -> usize {
    let s = merit_of(&sector_matrix(sys, sector, w)).1;
    s.iter().filter(|v| **v <= RANK_TOL * s[0]).count()
}

fn kappa_cap(sys: &TwoPointSystem) -> f64 {
    let g = &sys.geometry;
    let mut cap: f64 = (10.0 / g.l0).max(10.0 / g.l);
    for u in [&sys.u1, &sys.u2] {
        let (_, tp, tm) = diagonalize_u(u);
        for th in [tp, tm] {
            if th > 0.0 && th < PI {
                cap = cap.max(4.0 * (0.5 * th).tan() / g.l0);
            }
        }
    }
    cap.min(1e12 / g.l0)
}

/// Lowest `count` positive levels plus all nonpositive levels.
pub fn spectrum2(sys: &TwoPointSystem, count: usize) -> Result<Spectrum> {
    if count == 0 {
        return Err(Error::InvalidParameters("count must be at least 1".into()));
    }
    let g = &sys.geometry;
    let phase = sys.block_u().determinant().sqrt().conj();
    let mut levels = Vec::new();

    // bound states, deepest first
    let k_lo = 1e-6 / g.l.max(g.l0);
    let cap = kappa_cap(sys);
    let ratio: f64 = 1.01;
    let n = ((cap / k_lo).ln() / ratio.ln()).ceil() as usize + 2;
    let xs: Vec<f64> = (0..=n).map(|i| k_lo * ratio.powi(i as i32)).collect();
    for kappa in sector_roots(sys, phase, Sector::Negative, &xs, usize::MAX).into_iter().rev() {
        levels.push(Level::negative(kappa, sector_nullity(sys, Sector::Negative, kappa).clamp(1, 2)));
    }

    let (d0, scale0) = sector_det(sys, phase, Sector::Zero, 0.0);
    if d0.abs() <= 1e-12 * scale0 {
        levels.push(Level::zero(sector_nullity(sys, Sector::Zero, 0.0).clamp(1, 2)));
    }

    let step = (PI / (32.0 * g.l)).min(0.1 / g.l0);
    let k_cap = (count as f64 + 8.0) * PI * 4.0 / g.l;
    let mut found: Vec<Level> = Vec::new();
    let mut start = k_lo;
    while found.len() < count && start < k_cap {
        let end = (start + 16.0 * PI / g.l).min(k_cap);
        let m = ((end - start) / step).ceil() as usize;
        let xs: Vec<f64> = (0..=m).map(|i| start + (end - start) * i as f64 / m as f64).collect();
        for k in sector_roots(sys, phase, Sector::Positive, &xs, usize::MAX) {
            if found.last().is_some_and(|p| (k - p.wavenumber).abs() <= 1e-12 * k) {
                continue;
            }
            found.push(Level::positive(k, sector_nullity(sys, Sector::Positive, k).clamp(1, 2)));
        }
        start = end;
    }
    if found.len() < count {
        return Err(Error::ScanExhausted {
            found: found.len(),
            requested: count,
            cap: k_cap * g.l,
        });
    }
    found.truncate(count);
    levels.extend(found);
    Ok(Spectrum {
        levels,
        triple: sys.u1.spectral_triple(),
    })
}

/// `(VU₁V⁻¹, VU₂V⁻¹)` for `V ∈ SU(2)`.
pub fn conjugate_pair(sys: &TwoPointSystem, v: &Mat2) -> Result<TwoPointSystem> {
    let defect = unitarity_defect(v);
    let det = v.determinant();
    if defect > 1e-10 || (det - c(1.0, 0.0)).norm() > 1e-10 {
        return Err(Error::NotSpecialUnitary(format!(
            "unitarity defect {defect:.3e}, det = {det}"
        )));
    }
    let vi = v.adjoint();
    let conj = |u: &CharacteristicMatrix| crate::u2core::from_matrix(&(v * to_matrix(u) * vi));
    Ok(TwoPointSystem {
        u1: conj(&sys.u1)?,
        u2: conj(&sys.u2)?,
        geometry: sys.geometry,
    })
}

/// The subgroup of `SU(2)` conjugations preserving `U₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum IsospectralGroup {
    FullSu2,
    /// `{e^{iρA}}` for the traceless Hermitian axis `A = n·σ`, `|n| = 1`.
    U1Subgroup { axis: [f64; 3] },
}

impl IsospectralGroup {
    /// `n·σ` for the `U(1)` case.
    pub fn axis_matrix(&self) -> Option<Mat2> {
        match self {
            IsospectralGroup::FullSu2 => None,
            IsospectralGroup::U1Subgroup { axis } => Some(
                sigma1() * c(axis[0], 0.0) + sigma2() * c(axis[1], 0.0) + sigma3() * c(axis[2], 0.0),
            ),
        }
    }
}

pub fn isospectral_group_of(u2: &CharacteristicMatrix) -> IsospectralGroup {
    let (v, tp, tm) = diagonalize_u(u2);
    let gap = (C64::from_polar(1.0, tp) - C64::from_polar(1.0, tm)).norm();
    if gap < 1e-10 {
        return IsospectralGroup::FullSu2;
    }
    let a = v.adjoint() * sigma3() * v;
    let mut n = [a[(0, 1)].re, -a[(0, 1)].im, a[(0, 0)].re];
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    for x in &mut n {
        *x /= norm;
    }
    if let Some(first) = n.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            for x in &mut n {
                *x = -*x;
            }
        }
    }
    IsospectralGroup::U1Subgroup { axis: n }
}

/// `u = v⁻¹ diag(e^{iθ⁺}, e^{iθ⁻}) v` with `v ∈ SU(2)`, `θ⁺ >= θ⁻` in `(-π, π]`.
pub fn diagonalize_u(u: &CharacteristicMatrix) -> (Mat2, f64, f64) {
    let m = to_matrix(u);
    let tr = m.trace();
    let det = m.determinant();
    let disc = (tr * tr - det * 4.0).sqrt();
    let mut lams = [(tr + disc) * 0.5, (tr - disc) * 0.5];
    let arg = |z: C64| {
        let a = z.arg();
        if a <= -PI {
            a + 2.0 * PI
        } else {
            a
        }
    };
    if arg(lams[0]) < arg(lams[1]) {
        lams.swap(0, 1);
    }
    let (tp, tm) = (arg(lams[0]), arg(lams[1]));
    if (lams[0] - lams[1]).norm() < 1e-12 {
        return (Mat2::identity(), tp, tm);
    }
    let eigvec = |lam: C64| {
        let a = nalgebra::Vector2::new(m[(0, 1)], lam - m[(0, 0)]);
        let b = nalgebra::Vector2::new(lam - m[(1, 1)], m[(1, 0)]);
        let v = if a.norm() >= b.norm() { a } else { b };
        v / c(v.norm(), 0.0)
    };
    let e1 = eigvec(lams[0]);
    let mut e2 = eigvec(lams[1]);
    // Gram-Schmidt guards against rounding in nearly degenerate cases
    let proj = e1.dotc(&e2);
    e2 -= e1 * proj;
    e2 /= c(e2.norm(), 0.0);
    // v⁻¹ has the eigenvectors as columns; fix det v⁻¹ = 1
    let mut w = Mat2::new(e1[0], e2[0], e1[1], e2[1]);
    let d = w.determinant();
    let fix = d.conj() / c(d.norm(), 0.0);
    w[(0, 1)] *= fix;
    w[(1, 1)] *= fix;
    (w.adjoint(), tp, tm)
}
