//! Solving H(a, x, y) = c for y, and lower bounds on the slope of the solution.

use super::family::HSpec;
use super::ApplicationsError;
use crate::interval::RatInterval;
use crate::rat::{self, Rat};
use num::Signed;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-12, max_iters: 200 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceSolution {
    pub y: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Newton on H(a, x, .) - c inside Q2, falling back to bisection whenever a
/// step leaves the bracket or fails to shrink the residual.
pub(super) fn solve(h: &HSpec, c: f64, a: f64, x: f64, opts: &SolverOptions) -> Result<SliceSolution, ApplicationsError> {
    let f = |y: f64| h.h_f64(a, x, y) - c;
    let (mut lo, mut hi) = (rat::to_f64(&h.q2.lo), rat::to_f64(&h.q2.hi));
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo.is_finite() && fhi.is_finite()) {
        return Err(ApplicationsError::NoBracket);
    }
    for (y, v) in [(lo, flo), (hi, fhi)] {
        if v.abs() <= opts.tol {
            return Ok(SliceSolution { y, residual: v.abs(), iterations: 0 });
        }
    }
    if flo.signum() == fhi.signum() {
        return Err(ApplicationsError::NoBracket);
    }
    let lo_neg = flo < 0.0;
    let mut y = 0.5 * (lo + hi);
    let mut fy = f(y);
    for it in 1..=opts.max_iters {
        if fy.abs() <= opts.tol {
            return Ok(SliceSolution { y, residual: fy.abs(), iterations: it - 1 });
        }
        if (fy < 0.0) == lo_neg {
            lo = y;
        } else {
            hi = y;
        }
        let d = h.hy_f64(a, x, y);
        let mut next = None;
        if d.is_finite() && d != 0.0 {
            let step = fy / d;
            let mut damp = 1.0;
            for _ in 0..4 {
                let cand = y - damp * step;
                if cand > lo && cand < hi {
                    let fc = f(cand);
                    if fc.is_finite() && fc.abs() < fy.abs() {
                        next = Some((cand, fc));
                        break;
                    }
                }
                damp *= 0.5;
            }
        }
        let (ny, nf) = next.unwrap_or_else(|| {
            let m = 0.5 * (lo + hi);
            (m, f(m))
        });
        if ny == y {
            break;
        }
        y = ny;
        fy = nf;
    }
    if fy.abs() <= opts.tol {
        return Ok(SliceSolution { y, residual: fy.abs(), iterations: opts.max_iters });
    }
    Err(ApplicationsError::NoConvergence(opts.max_iters))
}

/// The y in Q2 with H(a, x, y) = c, to residual `opts.tol`.
pub fn implicit_slice(h: &HSpec, c: f64, a: f64, x: f64, opts: &SolverOptions) -> Result<SliceSolution, ApplicationsError> {
    let inside = |iv: &crate::cantor1d::Interval1, v: f64| rat::to_f64(&iv.lo) <= v && v <= rat::to_f64(&iv.hi);
    if !inside(&h.lambda, a) {
        return Err(ApplicationsError::InvalidParameter(format!("parameter {a} outside its box")));
    }
    if !inside(&h.q1, x) {
        return Err(ApplicationsError::InvalidParameter(format!("x = {x} outside Q1")));
    }
    solve(h, c, a, x, opts)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivativeBound {
    /// inf |H_x / H_y| over the boxes
    #[serde(with = "rat::pair")]
    pub eta: Rat,
    /// sign of the slice slope
    pub increasing: bool,
    /// enclosure of the slice values
    pub y_box: crate::cantor1d::Interval1,
}

/// Lower bound on the slope magnitude of every slice over the boxes.
pub fn derivative_bound(
    h: &HSpec,
    c: &RatInterval,
    a: &RatInterval,
    x: &RatInterval,
    bits: u32,
) -> Result<DerivativeBound, ApplicationsError> {
    let y = h.slice_enclosure(c, a, x, bits)?;
    let undefined = |w: &str| ApplicationsError::SliceUndefined(format!("{w} cannot be evaluated on the boxes"));
    let hx = h.hx_iv(a, x, &y, bits).ok_or_else(|| undefined("H_x"))?;
    let hy = h.hy_iv(a, x, &y, bits).ok_or_else(|| undefined("H_y"))?;
    if hx.contains_zero() {
        return Err(ApplicationsError::SignNotDefinite("H_x"));
    }
    if hy.contains_zero() {
        return Err(ApplicationsError::SignNotDefinite("H_y"));
    }
    let eta = hx.mig() / hy.mag();
    let eta = if eta.denom().bits() > 128 { rat::floor_bits(&eta, bits) } else { eta };
    if !eta.is_positive() {
        return Err(ApplicationsError::SignNotDefinite("H_x / H_y"));
    }
    Ok(DerivativeBound {
        eta,
        increasing: hx.lo.is_positive() != hy.lo.is_positive(),
        y_box: crate::cantor1d::Interval1::new(y.lo, y.hi),
    })
}
