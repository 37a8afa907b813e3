//! Orthogonal matrices with interval entries.

use super::source::AffineMap;
use super::NestedError;
use crate::interval::RatInterval;
use crate::rat::{self, Rat};
use num::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Largest accepted entry of |O^T O - I|.
pub fn defect_tolerance() -> Rat {
    rat::pow2(-40)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RotationMatrix {
    pub label: String,
    pub entries: Vec<Vec<RatInterval>>,
    /// Upper bound on the entries of |O^T O - I|.
    pub defect: Rat,
}

#[derive(Serialize, Deserialize)]
struct Repr {
    label: String,
    map: AffineMap,
    #[serde(with = "crate::rat::pair")]
    defect: Rat,
}

impl Serialize for RotationMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        Repr { label: self.label.clone(), map: self.as_map(), defect: self.defect.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RotationMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = Repr::deserialize(d)?;
        RotationMatrix::new(r.label, r.map.matrix).map_err(serde::de::Error::custom)
    }
}

impl RotationMatrix {
    pub fn new(label: impl Into<String>, entries: Vec<Vec<RatInterval>>) -> Result<Self, NestedError> {
        let d = entries.len();
        if d == 0 || entries.iter().any(|r| r.len() != d) {
            return Err(NestedError::DimensionMismatch("rotation must be square and non-empty".into()));
        }
        let mut defect = Rat::zero();
        for i in 0..d {
            for j in 0..d {
                let mut acc = RatInterval::from_i64(if i == j { -1 } else { 0 });
                for row in &entries {
                    acc = &acc + &(&row[i] * &row[j]);
                }
                let m = acc.mag();
                if m > defect {
                    defect = m;
                }
            }
        }
        if defect > defect_tolerance() {
            return Err(NestedError::NotOrthogonal(rat::to_f64(&defect)));
        }
        Ok(RotationMatrix { label: label.into(), entries, defect })
    }

    pub fn from_f64(label: impl Into<String>, rows: &[Vec<f64>]) -> Result<Self, NestedError> {
        let entries = rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|&x| rat::from_f64(x).map(RatInterval::point))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| NestedError::DimensionMismatch("non-finite matrix entry".into()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        RotationMatrix::new(label, entries)
    }

    pub fn identity(d: usize) -> Self {
        let entries = AffineMap::identity(d).matrix;
        RotationMatrix { label: "identity".into(), entries, defect: Rat::zero() }
    }

    /// Sends e_1 to (-s, s, 0, ...), e_i to e_{i+1} for 1 < i < d, and e_d to
    /// (s, s, 0, ...), with s = 1/sqrt(2) enclosed at `bits` bits. It maps the
    /// hyperplane x_d = 0 onto x_1 + x_2 = 0.
    pub fn hyperplane_repair(d: usize, bits: u32) -> Result<Self, NestedError> {
        if d < 2 {
            return Err(NestedError::DimensionMismatch("repair matrix needs d >= 2".into()));
        }
        let (lo, hi) = rat::sqrt_bounds(&rat::rat(1, 2), bits);
        let s = RatInterval::new(lo, hi);
        let zero = RatInterval::from_i64(0);
        let mut m = vec![vec![zero.clone(); d]; d];
        m[0][0] = -&s;
        m[1][0] = s.clone();
        for i in 1..d - 1 {
            m[i + 1][i] = RatInterval::point(Rat::one());
        }
        m[0][d - 1] = s.clone();
        m[1][d - 1] = s;
        RotationMatrix::new("hyperplane-repair", m)
    }

    /// Seeded rotations by Gram-Schmidt on uniform random matrices.
    pub fn quasi_random(d: usize, seed: u64, count: usize) -> Vec<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        while out.len() < count {
            let raw: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let Some(q) = gram_schmidt(raw) else { continue };
            // columns of q are orthonormal; use them as the matrix columns
            let rows: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| q[j][i]).collect()).collect();
            if let Ok(r) = RotationMatrix::from_f64(format!("random-{}", out.len()), &rows) {
                out.push(r);
            }
        }
        out
    }

    /// identity, the hyperplane repair matrix, then `extra` seeded rotations.
    pub fn default_candidates(d: usize, seed: u64, extra: usize, bits: u32) -> Vec<Self> {
        let mut v = vec![RotationMatrix::identity(d)];
        if let Ok(r) = RotationMatrix::hyperplane_repair(d, bits) {
            v.push(r);
        }
        v.extend(RotationMatrix::quasi_random(d, seed, extra));
        v
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn is_identity(&self) -> bool {
        self.entries == AffineMap::identity(self.dim()).matrix
    }

    pub fn as_map(&self) -> AffineMap {
        AffineMap { matrix: self.entries.clone(), translation: vec![RatInterval::from_i64(0); self.dim()] }
    }
}

fn gram_schmidt(vs: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for mut v in vs {
        for u in &out {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n < 1e-3 {
            return None;
        }
        v.iter_mut().for_each(|x| *x /= n);
        out.push(v);
    }
    Some(out)
}
