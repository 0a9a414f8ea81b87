//! Bracketing root finders used by the spectral solvers.

/// Bisection on a sign change of `f` over `[a, b]`, run to floating-point resolution.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Golden-section minimisation of a unimodal `f` on `[a, b]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, rel_tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..400 {
        if (b - a).abs() <= rel_tol * (a.abs() + b.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// A root located by [`scan_roots`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScannedRoot {
    pub x: f64,
    /// Even-order root found at an extremum rather than at a sign change.
    pub touching: bool,
}

/// Finds all roots of a smooth `f` on the grid `xs`, assuming `f'` changes sign
/// at most once per grid cell.
///
/// Each cell is split at its critical point (located by bisection on `df`), so
/// `f` is monotone on each piece. Sign changes are bisected; an extremum with
/// `|f| <= touch_tol(x)` is reported as a touching root.
pub fn scan_roots<F, D, T>(f: F, df: D, touch_tol: T, xs: &[f64], stop_after: usize) -> Vec<ScannedRoot>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
    T: Fn(f64) -> f64,
{
    let mut roots: Vec<ScannedRoot> = Vec::new();
    if xs.len() < 2 {
        return roots;
    }
    let mut fx0 = f(xs[0]);
    let mut dx0 = df(xs[0]);
    if fx0 == 0.0 {
        roots.push(ScannedRoot { x: xs[0], touching: false });
    }
    for w in xs.windows(2) {
        if roots.len() >= stop_after {
            break;
        }
        let (x0, x1) = (w[0], w[1]);
        let fx1 = f(x1);
        let dx1 = df(x1);

        let critical = if (dx0 < 0.0 && dx1 > 0.0) || (dx0 > 0.0 && dx1 < 0.0) {
            Some(bisect(&df, x0, x1, dx0))
        } else {
            None
        };

        match critical {
            None => {
                if fx0 != 0.0 && fx1 != 0.0 && (fx0 < 0.0) != (fx1 < 0.0) {
                    roots.push(ScannedRoot { x: bisect(&f, x0, x1, fx0), touching: false });
                }
            }
            Some(xc) => {
                let fc = f(xc);
                if fc.abs() <= touch_tol(xc) {
                    roots.push(ScannedRoot { x: xc, touching: true });
                } else {
                    if fx0 != 0.0 && (fx0 < 0.0) != (fc < 0.0) {
                        roots.push(ScannedRoot { x: bisect(&f, x0, xc, fx0), touching: false });
                    }
                    if fx1 != 0.0 && (fc < 0.0) != (fx1 < 0.0) {
                        roots.push(ScannedRoot { x: bisect(&f, xc, x1, fc), touching: false });
                    }
                }
            }
        }
        if fx1 == 0.0 {
            let dup = roots.last().is_some_and(|r| (r.x - x1).abs() <= 1e-12 * x1.abs().max(1.0));
            if !dup {
                roots.push(ScannedRoot { x: x1, touching: false });
            }
        }
        fx0 = fx1;
        dx0 = dx1;
    }
    roots.truncate(stop_after);
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, -2.0);
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn golden_finds_vertex() {
        let (x, fx) = golden_min(|x| (x - 0.3).abs(), 0.0, 1.0, 1e-15);
        assert!((x - 0.3).abs() < 1e-14 && fx < 1e-14);
    }

    #[test]
    fn scan_finds_simple_and_double_roots() {
        // (x-1)(x-2)^2(x-3)
        let f = |x: f64| (x - 1.0) * (x - 2.0).powi(2) * (x - 3.0);
        let df = |x: f64| {
            (x - 2.0).powi(2) * (x - 3.0)
                + 2.0 * (x - 1.0) * (x - 2.0) * (x - 3.0)
                + (x - 1.0) * (x - 2.0).powi(2)
        };
        let xs: Vec<f64> = (0..=40).map(|i| 0.013 + i as f64 * 0.1).collect();
        let roots = scan_roots(f, df, |_| 1e-12, &xs, usize::MAX);
        assert_eq!(roots.len(), 3, "{roots:?}");
        assert!((roots[0].x - 1.0).abs() < 1e-14 && !roots[0].touching);
        assert!((roots[1].x - 2.0).abs() < 1e-7 && roots[1].touching);
        assert!((roots[2].x - 3.0).abs() < 1e-14);
    }

    #[test]
    fn scan_splits_close_pair_inside_one_cell() {
        let f = |x: f64| (x - 1.0).powi(2) - 1e-6;
        let df = |x: f64| 2.0 * (x - 1.0);
        let xs = [0.7, 1.3];
        let roots = scan_roots(f, df, |_| 1e-14, &xs, usize::MAX);
        assert_eq!(roots.len(), 2);
        assert!((roots[0].x - 0.999).abs() < 1e-12 && (roots[1].x - 1.001).abs() < 1e-12);
    }
}
