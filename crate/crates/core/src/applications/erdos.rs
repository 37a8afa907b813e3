//! A finite piece of the Erdős obstruction: one companion translated along a
//! lattice meets every map of an affine family.

use super::ApplicationsError;
use crate::cantor1d::{affine_image, GapTree, Interval1};
use crate::containment1d::{build_companion, certify_difference_interior, find_chain, lambda_slack, CompanionOptions};
use crate::rat::{self, int, Rat};
use num::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Translates companion + spacing * k meeting the window, for k_lo <= k <= k_hi.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstructionSet {
    pub companion: GapTree,
    #[serde(with = "rat::pair")]
    pub spacing: Rat,
    pub window: Interval1,
    pub k_lo: i64,
    pub k_hi: i64,
}

impl ObstructionSet {
    pub fn translate(&self, k: i64) -> Result<GapTree, ApplicationsError> {
        Ok(affine_image(&self.companion, &Rat::from_integer(1.into()), &(&self.spacing * int(k)))?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapWitness {
    #[serde(with = "rat::pair")]
    pub lambda: Rat,
    #[serde(with = "rat::pair")]
    pub t: Rat,
    pub k: i64,
    /// left end of the final interval of g(K)
    #[serde(with = "rat::pair")]
    pub point: Rat,
    #[serde(with = "rat::pair")]
    pub bound: Rat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErdosReport {
    #[serde(with = "rat::pair")]
    pub slack_lambda: Rat,
    /// |lambda| must lie strictly inside this interval
    pub admissible: Interval1,
    #[serde(with = "rat::pair")]
    pub lambda_max: Rat,
    /// spacing == |companion| - lambda_max |K|, checked exactly
    pub spacing_identity: bool,
    pub obstruction: ObstructionSet,
    pub maps: Vec<MapWitness>,
}

fn floor_div(a: &Rat, b: &Rat) -> i64 {
    (a / b).floor().to_integer().try_into().expect("translate index fits i64")
}

fn ceil_div(a: &Rat, b: &Rat) -> i64 {
    (a / b).ceil().to_integer().try_into().expect("translate index fits i64")
}

/// Every s with hull(lambda K + t) inside hull(companion) + s. The interval is
/// certified for the copy of lambda K sharing K's left end and then shifted.
fn shifts(k: &GapTree, l: &Rat, t: &Rat, companion: &GapTree, n: usize) -> Result<Interval1, ApplicationsError> {
    let h = k.hull();
    let t0 = &h.lo - rat::min_rat(&(l * &h.lo), &(l * &h.hi));
    let base = certify_difference_interior(&affine_image(k, l, &t0)?, companion, n)?;
    let d = t - &t0;
    Ok(Interval1::new(&base.lo + &d, &base.hi + &d))
}

pub fn erdos_obstruction(
    k: &GapTree,
    family: &[(Rat, Rat)],
    window: &Interval1,
    n: usize,
    opts: &CompanionOptions,
) -> Result<ErdosReport, ApplicationsError> {
    if family.is_empty() {
        return Err(ApplicationsError::InvalidParameter("empty affine family".into()));
    }
    let companion = build_companion(k, n, opts)?;
    let slack_lambda = lambda_slack(k, &companion, n)?;
    let admissible = Interval1::new(rat::rat(1, 1) / &slack_lambda, companion.hull().len() / k.hull().len());
    let out_of_slack = |i: usize, l: &Rat, t: &Rat, reason: String| ApplicationsError::FamilyOutOfSlack {
        index: i,
        lambda: l.to_string(),
        t: t.to_string(),
        reason,
    };
    for (i, (l, t)) in family.iter().enumerate() {
        let a = l.abs();
        if a <= admissible.lo {
            return Err(out_of_slack(i, l, t, format!("|lambda| must exceed 1/slack = {}", admissible.lo)));
        }
        if a >= admissible.hi {
            return Err(out_of_slack(i, l, t, format!("|lambda| must stay below {}", admissible.hi)));
        }
    }
    let lambda_max = family.iter().map(|(l, _)| l.abs()).max().expect("non-empty family");
    let spacing = certify_difference_interior(&affine_image(k, &lambda_max, &Rat::zero())?, &companion, n)?.len();
    let spacing_identity = spacing == companion.hull().len() - &lambda_max * k.hull().len();
    let ch = companion.hull().clone();
    let obstruction = ObstructionSet {
        k_lo: ceil_div(&(&window.lo - &ch.hi), &spacing),
        k_hi: floor_div(&(&window.hi - &ch.lo), &spacing),
        companion,
        spacing,
        window: window.clone(),
    };
    let mut jobs = Vec::with_capacity(family.len());
    for (i, (l, t)) in family.iter().enumerate() {
        let image = affine_image(k, l, t)?;
        let j = shifts(k, l, t, &obstruction.companion, n)?;
        let idx = ceil_div(&j.lo, &obstruction.spacing);
        debug_assert!(&obstruction.spacing * int(idx) <= j.hi);
        if idx < obstruction.k_lo || idx > obstruction.k_hi {
            return Err(out_of_slack(i, l, t, format!("needs translate {idx}, outside the window")));
        }
        jobs.push((l.clone(), t.clone(), image, idx));
    }
    let maps = jobs
        .into_par_iter()
        .map(|(lambda, t, image, idx)| {
            let chain = find_chain(&image, &obstruction.translate(idx)?, n)?;
            Ok(MapWitness { lambda, t, k: idx, point: chain.last.0.lo.clone(), bound: chain.bound })
        })
        .collect::<Result<Vec<_>, ApplicationsError>>()?;
    Ok(ErdosReport { slack_lambda, admissible, lambda_max, spacing_identity, obstruction, maps })
}
