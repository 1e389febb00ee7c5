//! Lattice sums and eigenfunction series for periodic and Dirichlet kernels.

use std::f64::consts::PI;

use super::TruncationPolicy;
use crate::error::{Error, Result};

/// Free one-dimensional heat kernel `(4 pi t)^{-1/2} exp(-u^2 / 4t)`.
#[inline]
pub(crate) fn gaussian_1d(u: f64, t: f64) -> f64 {
    (-u * u / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
}

/// Radius beyond which lattice terms spaced by `spacing` may be dropped:
/// the omitted two-sided tail of `pref * exp(-u^2/4t)` is bounded by
/// `2 pref exp(-R^2/4t) / (1 - exp(-R spacing / 2t))` and this is made
/// smaller than the tail tolerance.
fn cutoff_radius(t: f64, spacing: f64, pref: f64, policy: &TruncationPolicy) -> Result<f64> {
    let tol = policy.tail_tolerance;
    let a0 = (1.0 / tol).ln() + (2.0 * pref).max(1.0).ln();
    let mut r = (4.0 * t * a0).sqrt();
    let bound = |r: f64| 2.0 * pref * (-r * r / (4.0 * t)).exp() / (1.0 - (-r * spacing / (2.0 * t)).exp());
    let mut guard = 0usize;
    while bound(r) >= tol {
        r += spacing;
        guard += 1;
        if guard > policy.max_terms {
            return Err(Error::TruncationBudget {
                needed: guard,
                allowed: policy.max_terms,
            });
        }
    }
    Ok(r)
}

/// Inclusive lattice index range `k` with `|offset + k spacing| <= r`.
fn lattice_range(offset: f64, spacing: f64, r: f64, policy: &TruncationPolicy) -> Result<(i64, i64)> {
    let lo = ((-r - offset) / spacing).ceil();
    let hi = ((r - offset) / spacing).floor();
    let count = (hi - lo + 1.0).max(0.0);
    if count > policy.max_terms as f64 {
        return Err(Error::TruncationBudget {
            needed: count.min(usize::MAX as f64) as usize,
            allowed: policy.max_terms,
        });
    }
    Ok((lo as i64, hi as i64))
}

/// Number of lattice terms a periodic sum at time `t` keeps.
pub fn theta_term_count(period: f64, t: f64, policy: &TruncationPolicy) -> Result<usize> {
    let pref = 1.0 / (4.0 * PI * t).sqrt();
    let r = cutoff_radius(t, period, pref, policy)?;
    let (lo, hi) = lattice_range(0.0, period, r, policy)?;
    Ok((hi - lo + 1) as usize)
}

/// Heat kernel of a circle of length `period` at separation `d`:
/// the sum of free kernels over all lattice translates.
pub(crate) fn theta_sum(d: f64, period: f64, t: f64, policy: &TruncationPolicy) -> Result<f64> {
    let pref = 1.0 / (4.0 * PI * t).sqrt();
    let r = cutoff_radius(t, period, pref, policy)?;
    let (lo, hi) = lattice_range(d, period, r, policy)?;
    let mut sum = 0.0;
    for k in lo..=hi {
        let u = d + k as f64 * period;
        sum += (-u * u / (4.0 * t)).exp();
    }
    Ok(pref * sum)
}

/// Individual lattice terms `p~_t(0, d + k L)` for `k` in the kept range;
/// the weights of the winding classes of a circle bridge.
pub(crate) fn theta_terms(d: f64, period: f64, t: f64, policy: &TruncationPolicy) -> Result<Vec<(i64, f64)>> {
    let pref = 1.0 / (4.0 * PI * t).sqrt();
    let r = cutoff_radius(t, period, pref, policy)?;
    let (lo, hi) = lattice_range(d, period, r, policy)?;
    Ok((lo..=hi)
        .map(|k| {
            let u = d + k as f64 * period;
            (k, pref * (-u * u / (4.0 * t)).exp())
        })
        .collect())
}

/// Dirichlet kernel on `(0, L)` by the method of images: reflections at
/// both ends generate translates by `2L` with alternating sign.
pub(crate) fn dirichlet_images(x: f64, y: f64, length: f64, t: f64, policy: &TruncationPolicy) -> Result<f64> {
    let spacing = 2.0 * length;
    let pref = 1.0 / (4.0 * PI * t).sqrt();
    let r = cutoff_radius(t, spacing, pref, policy)?;
    let direct = (x - y).abs();
    let mirrored = x + y;
    let mut sum = 0.0;
    let (lo, hi) = lattice_range(direct, spacing, r, policy)?;
    for k in lo..=hi {
        let u = direct + k as f64 * spacing;
        sum += (-u * u / (4.0 * t)).exp();
    }
    let (lo, hi) = lattice_range(mirrored, spacing, r, policy)?;
    for k in lo..=hi {
        let u = mirrored + k as f64 * spacing;
        sum -= (-u * u / (4.0 * t)).exp();
    }
    Ok((pref * sum).max(0.0))
}

/// Dirichlet kernel by its sine eigen-expansion
/// `(2/L) sum_m exp(-m^2 pi^2 t / L^2) sin(m pi x/L) sin(m pi y/L)`.
pub(crate) fn dirichlet_eigen(x: f64, y: f64, length: f64, t: f64, policy: &TruncationPolicy) -> Result<f64> {
    let a = PI * PI * t / (length * length);
    let scale = 2.0 / length;
    let mut sum = 0.0;
    let mut m = 1usize;
    loop {
        let mf = m as f64;
        sum += (-mf * mf * a).exp() * (mf * PI * x / length).sin() * (mf * PI * y / length).sin();
        // tail over m' > m is below exp(-(m+1)^2 a) / (1 - exp(-(2m+3) a))
        let next = (mf + 1.0) * (mf + 1.0) * a;
        let tail = scale * (-next).exp() / (1.0 - (-(2.0 * mf + 3.0) * a).exp());
        if tail < policy.tail_tolerance {
            break;
        }
        m += 1;
        if m > policy.max_terms {
            return Err(Error::TruncationBudget {
                needed: m,
                allowed: policy.max_terms,
            });
        }
    }
    Ok((scale * sum).max(0.0))
}
