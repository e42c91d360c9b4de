//! Concrete dynamical systems and exact iteration.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, Q};
use crate::metric::{Laterality, OpenRegion, Pt, Space, SpaceKind};
use crate::rotation::{Arc, RotationAngle};
use crate::sampling::sample_region;
use crate::sparse::SparseVec;

/// Coefficients larger than this many bits abort iteration.
pub const MAX_COEFF_BITS: u64 = 1 << 12;

/// Working dimension for sampling in sequence spaces.
pub const DEFAULT_DIM_CAP: usize = 4;

/// One-sided generator of weights, indexed from position `0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightGen {
    Constant {
        #[serde(with = "exact::serde_q")]
        c: Q,
    },
    /// `values` first, then `default` forever.
    Explicit {
        #[serde(with = "serde_q_vec")]
        values: Vec<Q>,
        #[serde(with = "exact::serde_q")]
        default: Q,
    },
    /// Runs `c` (×1), `1/c` (×1), `c` (×2), `1/c` (×2), `c` (×3), …
    ///
    /// Partial products climb to `c^k` and fall back to `1` after each pair
    /// of runs, so their supremum is infinite while their limit is not.
    BlockOscillating {
        #[serde(with = "exact::serde_q")]
        c: Q,
    },
}

mod serde_q_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::exact::{self, Q};

    pub fn serialize<S: Serializer>(v: &[Q], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(exact::show).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Q>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|t| exact::parse(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

impl WeightGen {
    /// Weight at 0-based position `p`.
    pub fn term(&self, p: u64) -> Q {
        match self {
            WeightGen::Constant { c } => c.clone(),
            WeightGen::Explicit { values, default } => {
                values.get(p as usize).cloned().unwrap_or_else(|| default.clone())
            }
            WeightGen::BlockOscillating { c } => {
                // Block k (k >= 1) occupies positions k(k-1) .. k(k+1).
                let mut k = ((p as f64).sqrt() as u64).max(1);
                while k * (k - 1) > p {
                    k -= 1;
                }
                while (k + 1) * k <= p {
                    k += 1;
                }
                if p - k * (k - 1) < k {
                    c.clone()
                } else {
                    c.recip()
                }
            }
        }
    }

    pub fn bound(&self) -> Q {
        match self {
            WeightGen::Constant { c } => c.abs(),
            WeightGen::Explicit { values, default } => values.iter().map(|v| v.abs()).fold(default.abs(), exact::max),
            WeightGen::BlockOscillating { c } => exact::max(c.abs(), c.recip().abs()),
        }
    }

    /// Lower bound for `|a|` over all positions.
    pub fn lower_bound(&self) -> Q {
        match self {
            WeightGen::Constant { c } => c.abs(),
            WeightGen::Explicit { values, default } => values.iter().map(|v| v.abs()).fold(default.abs(), exact::min),
            WeightGen::BlockOscillating { c } => exact::min(c.abs(), c.recip().abs()),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = match self {
            WeightGen::Constant { c } | WeightGen::BlockOscillating { c } => c.is_zero(),
            WeightGen::Explicit { values, default } => default.is_zero() || values.iter().any(Zero::is_zero),
        };
        if bad {
            Err(Error::Domain("weights must be nonzero".into()))
        } else {
            Ok(())
        }
    }
}

/// Weight sequence `(a_i)`: `forward` supplies `a_1, a_2, …` and `backward`
/// supplies `a_0, a_{-1}, …` (defaulting to `forward`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightSeq {
    pub forward: WeightGen,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backward: Option<WeightGen>,
}

impl WeightSeq {
    pub fn constant(c: Q) -> Self {
        Self {
            forward: WeightGen::Constant { c },
            backward: None,
        }
    }

    pub fn explicit(values: Vec<Q>, default: Q) -> Self {
        Self {
            forward: WeightGen::Explicit { values, default },
            backward: None,
        }
    }

    pub fn block_oscillating(c: Q) -> Self {
        Self {
            forward: WeightGen::BlockOscillating { c },
            backward: None,
        }
    }

    pub fn two_sided(forward: WeightGen, backward: WeightGen) -> Self {
        Self {
            forward,
            backward: Some(backward),
        }
    }

    pub fn backward_gen(&self) -> &WeightGen {
        self.backward.as_ref().unwrap_or(&self.forward)
    }

    /// `a_i` for any integer index.
    pub fn at(&self, i: i64) -> Q {
        if i >= 1 {
            self.forward.term((i - 1) as u64)
        } else {
            self.backward_gen().term(i.unsigned_abs())
        }
    }

    pub fn bound(&self) -> Q {
        exact::max(self.forward.bound(), self.backward_gen().bound())
    }

    pub fn lower_bound(&self) -> Q {
        exact::min(self.forward.lower_bound(), self.backward_gen().lower_bound())
    }

    pub fn validate(&self) -> Result<()> {
        self.forward.validate()?;
        self.backward_gen().validate()
    }
}

/// The model systems.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemDef {
    Identity {
        space: Space,
    },
    Rotation {
        angle: RotationAngle,
    },
    /// `T e_i = a_i e_{i-1}` on `ℓ²(ℕ₀)`, `T e_0 = 0`.
    UnilateralShift {
        weights: WeightSeq,
    },
    /// `T e_i = a_i e_{i-1}` on `ℓ²(ℤ)`.
    BilateralShift {
        weights: WeightSeq,
    },
    /// `λB` on `ℓ²(ℕ₀)`.
    RolewiczLambdaB {
        #[serde(with = "exact::serde_q")]
        lambda: Q,
    },
}

impl SystemDef {
    pub fn identity(space: Space) -> Self {
        SystemDef::Identity { space }
    }

    pub fn rotation(angle: RotationAngle) -> Self {
        SystemDef::Rotation { angle }
    }

    pub fn unilateral(weights: WeightSeq) -> Result<Self> {
        weights.validate()?;
        Ok(SystemDef::UnilateralShift { weights })
    }

    pub fn bilateral(weights: WeightSeq) -> Result<Self> {
        weights.validate()?;
        Ok(SystemDef::BilateralShift { weights })
    }

    pub fn lambda_b(lambda: Q) -> Result<Self> {
        let sys = SystemDef::RolewiczLambdaB { lambda };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SystemDef::Identity { .. } | SystemDef::Rotation { .. } => Ok(()),
            SystemDef::UnilateralShift { weights } | SystemDef::BilateralShift { weights } => weights.validate(),
            SystemDef::RolewiczLambdaB { lambda } => {
                if lambda.abs() > Q::one() {
                    Ok(())
                } else {
                    Err(Error::Domain(format!(
                        "lambda = {} needs |lambda| > 1",
                        exact::show(lambda)
                    )))
                }
            }
        }
    }

    pub fn space(&self) -> Space {
        match self {
            SystemDef::Identity { space } => *space,
            SystemDef::Rotation { .. } => Space::circle(),
            SystemDef::UnilateralShift { .. } | SystemDef::RolewiczLambdaB { .. } => {
                Space::sequence(Laterality::Unilateral, DEFAULT_DIM_CAP)
            }
            SystemDef::BilateralShift { .. } => Space::sequence(Laterality::Bilateral, DEFAULT_DIM_CAP),
        }
    }

    /// Weights and laterality for the shift family (`λB` is the constant
    /// weight `λ`).
    pub fn shift_weights(&self) -> Option<(WeightSeq, Laterality)> {
        match self {
            SystemDef::UnilateralShift { weights } => Some((weights.clone(), Laterality::Unilateral)),
            SystemDef::BilateralShift { weights } => Some((weights.clone(), Laterality::Bilateral)),
            SystemDef::RolewiczLambdaB { lambda } => {
                Some((WeightSeq::constant(lambda.clone()), Laterality::Unilateral))
            }
            _ => None,
        }
    }

    /// True for operators on a sequence space.
    pub fn is_linear(&self) -> bool {
        match self {
            SystemDef::Identity { space } => matches!(space.kind, SpaceKind::SequenceL2(_)),
            SystemDef::Rotation { .. } => false,
            _ => true,
        }
    }

    pub fn rotation_angle(&self) -> Option<&RotationAngle> {
        match self {
            SystemDef::Rotation { angle } => Some(angle),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            SystemDef::Identity { space } => format!("identity on {:?}", space.kind),
            SystemDef::Rotation { angle } => format!("rotation by {}", angle.convergent()),
            SystemDef::UnilateralShift { .. } => "unilateral weighted backward shift".into(),
            SystemDef::BilateralShift { .. } => "bilateral weighted backward shift".into(),
            SystemDef::RolewiczLambdaB { lambda } => format!("{}·B", exact::show(lambda)),
        }
    }
}

pub(crate) fn shift_once(v: &SparseVec, weights: &WeightSeq, lat: Laterality) -> SparseVec {
    let mut out = SparseVec::zero();
    for (i, c) in v.iter() {
        if lat == Laterality::Unilateral && i == 0 {
            continue;
        }
        out.add_at(i - 1, &(c * weights.at(i)));
    }
    out
}

/// One application of the system.
pub fn apply(sys: &SystemDef, x: &Pt) -> Result<Pt> {
    sys.space().check(x)?;
    Ok(match sys {
        SystemDef::Identity { .. } => x.clone(),
        SystemDef::Rotation { angle } => match x {
            Pt::Circle(t) => Pt::circle(t + angle.step()),
            _ => unreachable!("space check"),
        },
        SystemDef::RolewiczLambdaB { lambda } => {
            let v = x.as_seq().expect("space check");
            let mut out = SparseVec::zero();
            for (i, c) in v.iter().filter(|(i, _)| *i >= 1) {
                out.add_at(i - 1, &(c * lambda));
            }
            Pt::Seq(out)
        }
        _ => {
            let (weights, lat) = sys.shift_weights().expect("shift");
            Pt::Seq(shift_once(x.as_seq().expect("space check"), &weights, lat))
        }
    })
}

/// `fⁿ(x)` by repeated application.
pub fn iterate(sys: &SystemDef, x: &Pt, n: u64) -> Result<Pt> {
    sys.space().check(x)?;
    match sys {
        SystemDef::Identity { .. } => Ok(x.clone()),
        SystemDef::Rotation { angle } => match x {
            Pt::Circle(t) => Ok(Pt::circle(t + angle.step() * exact::int(n as i64))),
            _ => unreachable!("space check"),
        },
        _ => {
            let mut cur = x.clone();
            for step in 1..=n {
                cur = apply(sys, &cur)?;
                check_growth(&cur, step)?;
                if cur.as_seq().is_some_and(SparseVec::is_zero) {
                    break;
                }
            }
            Ok(cur)
        }
    }
}

fn check_growth(p: &Pt, n: u64) -> Result<()> {
    match p {
        Pt::Seq(v) if v.max_bit_size() > MAX_COEFF_BITS => Err(Error::Overflow { n }),
        _ => Ok(()),
    }
}

/// `[x, f(x), …, f^{n_max}(x)]`.
pub fn orbit_segment(sys: &SystemDef, x: &Pt, n_max: u64) -> Result<Vec<Pt>> {
    sys.space().check(x)?;
    let mut out = Vec::with_capacity(n_max as usize + 1);
    out.push(x.clone());
    for step in 1..=n_max {
        let next = apply(sys, out.last().expect("nonempty"))?;
        check_growth(&next, step)?;
        out.push(next);
    }
    Ok(out)
}

/// Seeded sample of `U` pushed forward by `fⁿ`.
pub fn image_of_region_sample(sys: &SystemDef, u: &OpenRegion, n: u64, samples: usize, seed: u64) -> Result<Vec<Pt>> {
    if samples == 0 {
        return Err(Error::Config("at least one sample is required".into()));
    }
    let space = sys.space();
    sample_region(&space, u, samples, seed)?
        .iter()
        .map(|x| iterate(sys, x, n))
        .collect()
}

/// Exact image `fⁿ(U) = U + nα` of an arc under a rotation.
pub fn rotation_image_arc(angle: &RotationAngle, arc: &Arc, n: u64) -> Arc {
    arc.translate(&(angle.step() * exact::int(n as i64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat, ratio};
    use crate::metric::dist;

    fn seq(pairs: &[(i64, i64)]) -> Pt {
        Pt::Seq(SparseVec::from_pairs(pairs.iter().map(|&(i, c)| (i, int(c)))))
    }

    #[test]
    fn rotation_adds_angle_mod_one() {
        let sys = SystemDef::rotation(RotationAngle::rational(rat(0.25)).unwrap());
        assert_eq!(apply(&sys, &Pt::circle(rat(0.9))).unwrap(), Pt::circle(rat(0.15)));
        let orbit = orbit_segment(&sys, &Pt::circle(int(0)), 2).unwrap();
        assert_eq!(
            orbit,
            vec![Pt::circle(int(0)), Pt::circle(rat(0.25)), Pt::circle(rat(0.5))]
        );
    }

    #[test]
    fn unilateral_shift_examples() {
        let sys = SystemDef::unilateral(WeightSeq::constant(int(2))).unwrap();
        assert_eq!(apply(&sys, &seq(&[(3, 1)])).unwrap(), seq(&[(2, 2)]));
        assert_eq!(apply(&sys, &seq(&[(0, 1)])).unwrap(), seq(&[]));
        assert_eq!(iterate(&sys, &seq(&[(5, 1)]), 3).unwrap(), seq(&[(2, 8)]));
        assert_eq!(iterate(&sys, &seq(&[(5, 1)]), 0).unwrap(), seq(&[(5, 1)]));
    }

    #[test]
    fn lambda_b_examples() {
        let sys = SystemDef::lambda_b(int(2)).unwrap();
        assert_eq!(iterate(&sys, &seq(&[(0, 1), (1, 1)]), 1).unwrap(), seq(&[(0, 2)]));
        // Oracle: repeated single applications written out by hand.
        let orbit = orbit_segment(&sys, &seq(&[(4, 1)]), 4).unwrap();
        let expected: Vec<Pt> = vec![
            seq(&[(4, 1)]),
            seq(&[(3, 2)]),
            seq(&[(2, 4)]),
            seq(&[(1, 8)]),
            seq(&[(0, 16)]),
        ];
        assert_eq!(orbit, expected);
        assert!(SystemDef::lambda_b(rat(0.5)).is_err());
        assert!(SystemDef::lambda_b(int(-1)).is_err());
    }

    #[test]
    fn bilateral_shift_crosses_zero() {
        let weights = WeightSeq::two_sided(
            WeightGen::Constant { c: int(2) },
            WeightGen::Constant { c: ratio(1, 2) },
        );
        let sys = SystemDef::bilateral(weights).unwrap();
        // a_1 = 2, a_0 = 1/2, a_{-1} = 1/2.
        let out = iterate(&sys, &seq(&[(1, 1)]), 3).unwrap();
        assert_eq!(out, Pt::Seq(SparseVec::from_pairs([(-2, ratio(1, 2))])));
    }

    #[test]
    fn block_oscillating_runs() {
        let g = WeightGen::BlockOscillating { c: int(2) };
        let terms: Vec<Q> = (0..12).map(|p| g.term(p)).collect();
        let h = ratio(1, 2);
        let two = int(2);
        let expected = vec![
            two.clone(),
            h.clone(),
            two.clone(),
            two.clone(),
            h.clone(),
            h.clone(),
            two.clone(),
            two.clone(),
            two.clone(),
            h.clone(),
            h.clone(),
            h.clone(),
        ];
        assert_eq!(terms, expected);
        assert_eq!(g.bound(), int(2));
    }

    #[test]
    fn zero_weights_rejected() {
        assert!(SystemDef::unilateral(WeightSeq::explicit(vec![int(1), int(0)], int(1))).is_err());
        assert!(SystemDef::unilateral(WeightSeq::constant(int(0))).is_err());
    }

    #[test]
    fn space_mismatch_is_an_error() {
        let sys = SystemDef::lambda_b(int(2)).unwrap();
        assert!(apply(&sys, &Pt::circle(int(0))).is_err());
        assert!(apply(&sys, &seq(&[(-1, 1)])).is_err());
    }

    #[test]
    fn coefficient_growth_is_reported() {
        let sys = SystemDef::lambda_b(Q::new(10.into(), 1.into())).unwrap();
        let mut v = SparseVec::zero();
        v.add_at(3_000, &int(1));
        // 10^n with denominator 1 exceeds 4096 bits from n = 1233 on.
        match iterate(&sys, &Pt::Seq(v), 2_000) {
            Err(Error::Overflow { n }) => assert_eq!(n, 1233),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn region_images() {
        let sys = SystemDef::identity(Space::capped_plane());
        let u = OpenRegion::ball(Pt::plane(rat(0.5), rat(0.5)), rat(0.1)).unwrap();
        let pts = image_of_region_sample(&sys, &u, 7, 16, 3).unwrap();
        assert_eq!(pts.len(), 16);
        for p in &pts {
            assert!(u.contains(&sys.space(), p).unwrap());
        }

        let angle = RotationAngle::rational(rat(0.25)).unwrap();
        let arc = Arc::new(int(0), rat(0.1)).unwrap();
        assert_eq!(
            rotation_image_arc(&angle, &arc, 1),
            Arc::new(rat(0.25), rat(0.1)).unwrap()
        );

        let shift = SystemDef::unilateral(WeightSeq::constant(int(2))).unwrap();
        let u = OpenRegion::ball(seq(&[(2, 1)]), rat(0.1)).unwrap();
        let target = seq(&[(0, 4)]);
        for p in image_of_region_sample(&shift, &u, 2, 32, 11).unwrap() {
            assert!(dist(&shift.space(), &p, &target).unwrap() < 0.4);
        }
        assert!(image_of_region_sample(&shift, &u, 2, 0, 11).is_err());
    }
}
