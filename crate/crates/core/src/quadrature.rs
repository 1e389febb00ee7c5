//! One-dimensional adaptive quadrature and maximization.

use crate::error::{Error, Result};

/// Default absolute tolerance for kernel integrals.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

const MAX_DEPTH: u32 = 48;
const INITIAL_PANELS: usize = 16;
const MAX_TAIL_PANELS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    /// Absolute error target for the whole integral.
    pub tolerance: f64,
    pub max_depth: u32,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            tolerance: DEFAULT_TOLERANCE,
            max_depth: MAX_DEPTH,
        }
    }
}

impl Quadrature {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Quadrature {
            tolerance,
            ..Default::default()
        }
    }

    /// Adaptive Simpson on `[a, b]` with Richardson correction. The interval
    /// is pre-split into a few panels so narrow peaks are not stepped over.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Result<f64> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::QuadratureNonConvergence(format!("non-finite bounds [{a}, {b}]")));
        }
        if a == b {
            return Ok(0.0);
        }
        let h = (b - a) / INITIAL_PANELS as f64;
        let tol = self.tolerance / INITIAL_PANELS as f64;
        let mut total = 0.0;
        for i in 0..INITIAL_PANELS {
            let lo = a + h * i as f64;
            let hi = if i + 1 == INITIAL_PANELS { b } else { lo + h };
            let flo = f(lo);
            let fhi = f(hi);
            let mid = 0.5 * (lo + hi);
            let fmid = f(mid);
            let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
            total += self.recurse(&mut f, lo, hi, flo, fmid, fhi, whole, tol, self.max_depth)?;
        }
        if !total.is_finite() {
            return Err(Error::QuadratureNonConvergence("integrand produced a non-finite value".into()));
        }
        Ok(total)
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse<F: FnMut(f64) -> f64>(
        &self,
        f: &mut F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if !delta.is_finite() {
            return Err(Error::QuadratureNonConvergence(format!("non-finite integrand near {m}")));
        }
        // floor the local target at rounding level of the panel value
        let target = tol.max(1e-15 * (left.abs() + right.abs()));
        if delta.abs() <= 15.0 * target {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 || lm <= a || rm >= b {
            return Err(Error::QuadratureNonConvergence(format!(
                "recursion limit reached on [{a}, {b}] (local error {delta:e})"
            )));
        }
        Ok(self.recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + self.recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }

    /// Integral over `[a, inf)` by panels of doubling width starting at
    /// `scale`. Stops once two consecutive panels contribute less than the
    /// tolerance (absolute, or relative to the running total); reports
    /// divergence when the panel budget runs out first.
    pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, scale: f64) -> Result<f64> {
        if !(scale > 0.0) {
            return Err(Error::QuadratureNonConvergence(format!("bad panel scale {scale}")));
        }
        let panel = Quadrature {
            tolerance: self.tolerance / 8.0,
            ..*self
        };
        let mut total = 0.0;
        let mut lo = a;
        let mut width = scale;
        let mut quiet = 0;
        for _ in 0..MAX_TAIL_PANELS {
            let hi = lo + width;
            let piece = panel.integrate(&mut f, lo, hi)?;
            total += piece;
            if !total.is_finite() {
                break;
            }
            if piece.abs() <= self.tolerance.max(1e-15 * total.abs()) {
                quiet += 1;
                if quiet == 2 {
                    return Ok(total);
                }
            } else {
                quiet = 0;
            }
            lo = hi;
            width *= 2.0;
        }
        Err(Error::Divergent(format!(
            "integral from {a} to infinity did not settle after {MAX_TAIL_PANELS} doubling panels (partial sum {total:e})"
        )))
    }

    /// Integral over the whole line, split at `center`.
    pub fn integrate_line<F: FnMut(f64) -> f64>(&self, mut f: F, center: f64, scale: f64) -> Result<f64> {
        let half = Quadrature {
            tolerance: 0.5 * self.tolerance,
            ..*self
        };
        let right = half.integrate_to_infinity(&mut f, center, scale)?;
        let left = half.integrate_to_infinity(|u| f(2.0 * center - u), center, scale)?;
        Ok(left + right)
    }
}

/// Maximizes `f` on `[a, b]`: coarse scan, then golden-section refinement
/// around the best scan point. Assumes a single interior mode.
pub fn maximize<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> Result<(f64, f64)> {
    const SCAN: usize = 256;
    if !(a < b) {
        return Err(Error::QuadratureNonConvergence(format!("empty bracket [{a}, {b}]")));
    }
    let h = (b - a) / SCAN as f64;
    let mut best = (a, f(a));
    for i in 1..=SCAN {
        let x = a + h * i as f64;
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    if !best.1.is_finite() {
        return Err(Error::QuadratureNonConvergence("objective is not finite".into()));
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut lo = (best.0 - h).max(a);
    let mut hi = (best.0 + h).min(b);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if hi - lo <= 1e-14 * (1.0 + best.0.abs()) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    let (x, v) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
    Ok(if v >= best.1 { (x, v) } else { best })
}
