//! Built-in and user-given H families.

use super::expr::{Env, Expr};
use super::ApplicationsError;
use crate::cantor1d::Interval1;
use crate::interval::RatInterval;
use crate::rat::{self, Rat};
use num::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HFamily {
    /// H(a, x, y) = a x + y
    AffineSum,
    /// H(a, x, y) = |x|^a + |y|^a + offset
    AlphaNorm { offset: Rat },
    /// Scalar H with its partial derivatives, as expressions in a, x, y.
    Custom1d { h: String, hx: String, hy: String },
}

/// A scalar H together with its parameter box and x/y domains.
#[derive(Clone, Debug)]
pub struct HSpec {
    pub family: HFamily,
    pub lambda: Interval1,
    pub q1: Interval1,
    pub q2: Interval1,
    exprs: [Expr; 3],
}

impl PartialEq for HSpec {
    fn eq(&self, o: &Self) -> bool {
        self.family == o.family && self.lambda == o.lambda && self.q1 == o.q1 && self.q2 == o.q2
    }
}

fn compile(family: &HFamily) -> Result<[Expr; 3], ApplicationsError> {
    let src: [String; 3] = match family {
        HFamily::AffineSum => ["a*x + y".into(), "a".into(), "1".into()],
        HFamily::AlphaNorm { offset } => [
            format!("abs(x)^a + abs(y)^a + {}", offset_text(offset)),
            "a*abs(x)^(a - 1)*sign(x)".into(),
            "a*abs(y)^(a - 1)*sign(y)".into(),
        ],
        HFamily::Custom1d { h, hx, hy } => [h.clone(), hx.clone(), hy.clone()],
    };
    Ok([Expr::parse(&src[0])?, Expr::parse(&src[1])?, Expr::parse(&src[2])?])
}

fn offset_text(r: &Rat) -> String {
    if r.is_negative() {
        format!("(0 - {}/{})", -r.numer(), r.denom())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl HSpec {
    pub fn new(family: HFamily, lambda: Interval1, q1: Interval1, q2: Interval1) -> Result<Self, ApplicationsError> {
        if let HFamily::AlphaNorm { .. } = family {
            if !lambda.lo.is_positive() {
                return Err(ApplicationsError::InvalidParameter("alpha-norm needs a positive exponent box".into()));
            }
            if !q2.lo.is_positive() {
                return Err(ApplicationsError::InvalidParameter(
                    "alpha-norm needs the y-domain inside (0, inf)".into(),
                ));
            }
        }
        let exprs = compile(&family)?;
        Ok(HSpec { family, lambda, q1, q2, exprs })
    }

    pub fn h_f64(&self, a: f64, x: f64, y: f64) -> f64 {
        self.exprs[0].eval_f64(a, x, y)
    }

    pub fn hy_f64(&self, a: f64, x: f64, y: f64) -> f64 {
        self.exprs[2].eval_f64(a, x, y)
    }

    /// -H_x / H_y, the slope of the implicit slice.
    pub fn slope_f64(&self, a: f64, x: f64, y: f64) -> f64 {
        -self.exprs[1].eval_f64(a, x, y) / self.exprs[2].eval_f64(a, x, y)
    }

    pub fn h_iv(&self, a: &RatInterval, x: &RatInterval, y: &RatInterval, bits: u32) -> Option<RatInterval> {
        self.exprs[0].eval_iv(&Env { a, x, y }, bits)
    }

    pub fn hx_iv(&self, a: &RatInterval, x: &RatInterval, y: &RatInterval, bits: u32) -> Option<RatInterval> {
        self.exprs[1].eval_iv(&Env { a, x, y }, bits)
    }

    pub fn hy_iv(&self, a: &RatInterval, x: &RatInterval, y: &RatInterval, bits: u32) -> Option<RatInterval> {
        self.exprs[2].eval_iv(&Env { a, x, y }, bits)
    }

    /// Enclosure of every y in Q2 with H(a, x, y) = c for (c, a, x) in the boxes.
    pub fn slice_enclosure(
        &self,
        c: &RatInterval,
        a: &RatInterval,
        x: &RatInterval,
        bits: u32,
    ) -> Result<RatInterval, ApplicationsError> {
        let undefined = || ApplicationsError::SliceUndefined(format!("c in {c}, a in {a}, x in {x}"));
        let raw = match &self.family {
            HFamily::AffineSum => c - &(a * x),
            HFamily::AlphaNorm { offset } => {
                let rest = c - &(&RatInterval::point(offset.clone()) + &x.abs().pow(a, bits).ok_or_else(undefined)?);
                if !rest.lo.is_positive() {
                    return Err(ApplicationsError::NoBracket);
                }
                let inv = a.recip().ok_or_else(undefined)?;
                rest.pow(&inv, bits).ok_or_else(undefined)?
            }
            HFamily::Custom1d { .. } => self.prune_q2(c, a, x, bits).ok_or(ApplicationsError::NoBracket)?,
        };
        let q2 = RatInterval::new(self.q2.lo.clone(), self.q2.hi.clone());
        let lo = rat::max_rat(&raw.lo, &q2.lo).clone();
        let hi = rat::min_rat(&raw.hi, &q2.hi).clone();
        if lo > hi {
            return Err(ApplicationsError::NoBracket);
        }
        Ok(RatInterval::new(lo, hi))
    }

    /// Keep the pieces of Q2 where H - c can vanish.
    fn prune_q2(&self, c: &RatInterval, a: &RatInterval, x: &RatInterval, bits: u32) -> Option<RatInterval> {
        const PIECES: i64 = 256;
        let step = self.q2.len() / rat::int(PIECES);
        let mut out: Option<RatInterval> = None;
        for i in 0..PIECES {
            let lo = &self.q2.lo + &step * rat::int(i);
            let y = RatInterval::new(lo.clone(), lo + &step);
            let keep = match self.h_iv(a, x, &y, bits) {
                Some(v) => {
                    let d = &v - c;
                    d.contains_zero()
                }
                None => true,
            };
            if keep {
                out = Some(match out {
                    None => y,
                    Some(o) => o.hull(&y),
                });
            }
        }
        out
    }

    /// Tight enclosure of the slice value at a single (c, a, x).
    pub fn slice_point(&self, c: &Rat, a: &Rat, x: &Rat, bits: u32) -> Result<RatInterval, ApplicationsError> {
        let (ci, ai, xi) = (RatInterval::point(c.clone()), RatInterval::point(a.clone()), RatInterval::point(x.clone()));
        match self.family {
            HFamily::Custom1d { .. } => self.certify_root(&ci, &ai, &xi, bits),
            _ => self.slice_enclosure(&ci, &ai, &xi, bits),
        }
    }

    /// Newton guess, then a sign change of H - c across a small interval around it.
    fn certify_root(&self, c: &RatInterval, a: &RatInterval, x: &RatInterval, bits: u32) -> Result<RatInterval, ApplicationsError> {
        let sol = super::slice::solve(self, rat::to_f64(&c.lo), rat::to_f64(&a.lo), rat::to_f64(&x.lo), &Default::default())?;
        let y0 = rat::from_f64(sol.y).ok_or(ApplicationsError::NoBracket)?;
        let sign_at = |y: &Rat| -> Option<i8> {
            let v = &self.h_iv(a, x, &RatInterval::point(y.clone()), bits)? - c;
            if v.lo.is_positive() {
                Some(1)
            } else if v.hi.is_negative() {
                Some(-1)
            } else {
                None
            }
        };
        let mut eps = rat::max_rat(&(y0.abs() * rat::pow2(-40)), &rat::pow2(-60)).clone();
        for _ in 0..40 {
            let (lo, hi) = (&y0 - &eps, &y0 + &eps);
            if let (Some(s), Some(t)) = (sign_at(&lo), sign_at(&hi)) {
                if s != t {
                    return Ok(RatInterval::new(lo, hi));
                }
            }
            eps *= rat::int(2);
        }
        Err(ApplicationsError::SliceUndefined(format!("no verified root near {}", sol.y)))
    }
}

#[derive(Serialize, Deserialize)]
struct FamilyRepr {
    family: String,
    #[serde(default)]
    params: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct SpecRepr {
    h: FamilyRepr,
    lambda: Interval1,
    q1: Interval1,
    q2: Interval1,
}

impl Serialize for HSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let (family, params) = match &self.family {
            HFamily::AffineSum => ("affine-sum", serde_json::json!({})),
            HFamily::AlphaNorm { offset } => ("alpha-norm", serde_json::json!({ "offset": rat::pair::to_value(offset) })),
            HFamily::Custom1d { h, hx, hy } => ("custom-1d", serde_json::json!({ "h": h, "hx": hx, "hy": hy })),
        };
        SpecRepr {
            h: FamilyRepr { family: family.into(), params },
            lambda: self.lambda.clone(),
            q1: self.q1.clone(),
            q2: self.q2.clone(),
        }
        .serialize(s)
    }
}

fn family_from(r: &FamilyRepr) -> Result<HFamily, String> {
    let text = |k: &str| -> Result<String, String> {
        r.params
            .get(k)
            .and_then(|v| v.as_str())
            .map(str::to_owned)
            .ok_or_else(|| format!("custom-1d needs a string parameter {k:?}"))
    };
    match r.family.as_str() {
        "affine-sum" => Ok(HFamily::AffineSum),
        "alpha-norm" => {
            let offset = match r.params.get("offset") {
                None => Rat::zero(),
                Some(v) => rat::loose::from_value(v)?,
            };
            Ok(HFamily::AlphaNorm { offset })
        }
        "custom-1d" => Ok(HFamily::Custom1d { h: text("h")?, hx: text("hx")?, hy: text("hy")? }),
        other => Err(format!("unknown H family {other:?}")),
    }
}

impl<'de> Deserialize<'de> for HSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let r = SpecRepr::deserialize(d)?;
        let family = family_from(&r.h).map_err(D::Error::custom)?;
        HSpec::new(family, r.lambda, r.q1, r.q2).map_err(D::Error::custom)
    }
}
