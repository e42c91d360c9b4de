//! Weight products of weighted backward shifts and what they imply.

use std::io::Write;

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, Q};
use crate::metric::Laterality;
use crate::sparse::SparseVec;
use crate::systems::{SystemDef, WeightGen, WeightSeq};
use crate::verdict::{Scope, Status, Verdict};

pub const DEFAULT_HORIZON: u64 = 10_000;

/// `A_k^{(n)}`, or the marker for a power that sends `e_k` to zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WeightProduct {
    Value(Q),
    Annihilated,
}

impl WeightProduct {
    pub fn value(&self) -> Option<&Q> {
        match self {
            WeightProduct::Value(q) => Some(q),
            WeightProduct::Annihilated => None,
        }
    }
}

/// `A_k^{(n)} = a_{k-n+1} ⋯ a_k`, so that `Tⁿ e_k = A_k^{(n)} e_{k-n}`.
pub fn weight_product(w: &WeightSeq, lat: Laterality, k: i64, n: u64) -> Result<WeightProduct> {
    if lat == Laterality::Unilateral && k < 0 {
        return Err(Error::Domain(format!("index {k} is outside the unilateral space")));
    }
    let n = i64::try_from(n).map_err(|_| Error::Domain("power too large".into()))?;
    if lat == Laterality::Unilateral && k - n + 1 < 1 && n > 0 {
        return Ok(WeightProduct::Annihilated);
    }
    let mut p = Q::one();
    for j in (k - n + 1)..=k {
        p *= w.at(j);
    }
    Ok(WeightProduct::Value(p))
}

/// Right inverse `S_n v = Σ v_j / A_{j+n}^{(n)} e_{j+n}` of `Tⁿ`.
pub fn right_inverse(w: &WeightSeq, lat: Laterality, n: u64, v: &SparseVec) -> Result<SparseVec> {
    let mut out = SparseVec::zero();
    for (j, c) in v.iter() {
        let target = j + n as i64;
        match weight_product(w, lat, target, n)? {
            WeightProduct::Value(a) => out.add_at(target, &(c / a)),
            WeightProduct::Annihilated => unreachable!("target index is at least n"),
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `∏_{i=1}^{n} |a_i|`
    Forward,
    /// `∏_{i=0}^{n} |a_{-i}|`
    Backward,
    /// `∏_{i=0}^{n} |a_{-i}|⁻¹`
    BackwardReciprocal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    DivergesMonotonically,
    SupInfiniteLimNot,
    Bounded,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub divergence: f64,
    pub return_band: f64,
    pub bounded: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            divergence: 1e6,
            return_band: 2.0,
            bounded: 1e3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductTrace {
    pub direction: Direction,
    /// `(n, ln ∏ |a|)`.
    pub values: Vec<(u64, f64)>,
    pub thresholds: Thresholds,
    /// Classification read off the values alone.
    pub empirical: Classification,
    /// Exact rule for closed-form families, when one applies.
    pub analytic: Option<Classification>,
    pub classification: Classification,
    /// Indices where the product dropped back below the return band after
    /// exceeding the divergence threshold.
    pub returns: Vec<u64>,
}

impl ProductTrace {
    pub fn is_analytic(&self) -> bool {
        self.analytic.is_some()
    }
}

/// Classifies a log-product trace against the thresholds.
pub fn classify(values: &[(u64, f64)], th: &Thresholds) -> (Classification, Vec<u64>) {
    if values.is_empty() {
        return (Classification::Inconclusive, Vec::new());
    }
    let log_t0 = th.divergence.ln();
    let log_band = th.return_band.ln();
    let half = std::f64::consts::LN_2;

    // Suffix minima let each level check its whole tail at once.
    let mut suffix_min = vec![f64::INFINITY; values.len() + 1];
    for i in (0..values.len()).rev() {
        suffix_min[i] = suffix_min[i + 1].min(values[i].1);
    }

    let first_cross = values.iter().position(|&(_, l)| l > log_t0);
    let Some(first) = first_cross else {
        let max = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
        return if max < th.bounded.ln() {
            (Classification::Bounded, Vec::new())
        } else {
            (Classification::Inconclusive, Vec::new())
        };
    };

    // Levels T0, 2 T0, 4 T0, …: after crossing a level the product must
    // stay above half of it.
    let mut monotone = true;
    let mut idx = first;
    let mut level = log_t0;
    while idx < values.len() {
        if suffix_min[idx] < level - half {
            monotone = false;
            break;
        }
        level += half;
        while idx < values.len() && values[idx].1 <= level {
            idx += 1;
        }
    }

    // A return is a drop below the band after rising to twice the band.
    let mut returns = Vec::new();
    let mut armed = false;
    for &(n, l) in &values[first..] {
        if l >= log_band + half {
            armed = true;
        } else if armed && l < log_band {
            returns.push(n);
            armed = false;
        }
    }

    if monotone {
        (Classification::DivergesMonotonically, returns)
    } else if returns.len() >= 3 {
        (Classification::SupInfiniteLimNot, returns)
    } else {
        (Classification::Inconclusive, returns)
    }
}

fn analytic_rule(g: &WeightGen, reciprocal: bool) -> Classification {
    let one = Q::one();
    let inverted;
    let g = if reciprocal {
        inverted = match g {
            WeightGen::Constant { c } => WeightGen::Constant { c: c.recip() },
            WeightGen::Explicit { values, default } => WeightGen::Explicit {
                values: values.iter().map(|v| v.recip()).collect(),
                default: default.recip(),
            },
            WeightGen::BlockOscillating { c } => WeightGen::BlockOscillating { c: c.recip() },
        };
        &inverted
    } else {
        g
    };
    match g {
        WeightGen::Constant { c } | WeightGen::Explicit { default: c, .. } => {
            // Explicit sequences end in a constant tail.
            if c.abs() > one {
                Classification::DivergesMonotonically
            } else {
                Classification::Bounded
            }
        }
        WeightGen::BlockOscillating { c } => {
            if c.abs() > one {
                Classification::SupInfiniteLimNot
            } else {
                Classification::Bounded
            }
        }
    }
}

/// Running log-products of `|a|` in one direction, classified.
pub fn trace_products(w: &WeightSeq, direction: Direction, horizon: u64) -> Result<ProductTrace> {
    if horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    let th = Thresholds::default();
    let mut values = Vec::with_capacity(horizon as usize + 1);
    let mut log = 0.0f64;
    let (indices, gen): (Box<dyn Iterator<Item = (u64, i64)>>, &WeightGen) = match direction {
        Direction::Forward => (Box::new((1..=horizon).map(|n| (n, n as i64))), &w.forward),
        Direction::Backward | Direction::BackwardReciprocal => {
            (Box::new((0..=horizon).map(|n| (n, -(n as i64)))), w.backward_gen())
        }
    };
    let sign = if direction == Direction::BackwardReciprocal {
        -1.0
    } else {
        1.0
    };
    for (n, i) in indices {
        log += sign * exact::to_f64(&w.at(i).abs()).ln();
        values.push((n, log));
    }
    let (empirical, returns) = classify(&values, &th);
    let analytic = analytic_rule(gen, direction == Direction::BackwardReciprocal);
    Ok(ProductTrace {
        direction,
        classification: analytic,
        values,
        thresholds: th,
        empirical,
        analytic: Some(analytic),
        returns,
    })
}

/// Divergence test for δ-mixing together with the traces it used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingSufficiency {
    pub verdict: Verdict,
    pub traces: Vec<ProductTrace>,
}

/// Certifies δ-mixing of a shift from divergent weight products.
///
/// A unilateral shift is mixing when `∏_{i=1}^{n} |a_i| → ∞`. A bilateral one
/// additionally needs `Tⁿ e_0 → 0`, that is `∏_{i=0}^{n} |a_{-i}|⁻¹ → ∞`; the
/// plain backward product tending to infinity makes the shift expanding on
/// the negative half instead. A mixing map is δ-mixing for each `δ > 0`
/// because `V ⊂ B_δ(V)`. Any other outcome leaves the question open, since
/// the test is only sufficient.
pub fn delta_mixing_sufficiency(sys: &SystemDef, delta: &Q, horizon: u64) -> Result<MixingSufficiency> {
    let (w, lat) = sys
        .shift_weights()
        .ok_or_else(|| Error::Domain(format!("{} is not a weighted shift", sys.label())))?;
    if !delta.is_positive() {
        return Err(Error::Domain("delta must be positive".into()));
    }
    let mut traces = vec![trace_products(&w, Direction::Forward, horizon)?];
    if lat == Laterality::Bilateral {
        traces.push(trace_products(&w, Direction::BackwardReciprocal, horizon)?);
    }
    let summary: Vec<String> = traces
        .iter()
        .map(|t| format!("{:?}: {:?}", t.direction, t.classification))
        .collect();
    let summary = summary.join(", ");
    let all_diverge = traces
        .iter()
        .all(|t| t.classification == Classification::DivergesMonotonically);
    let verdict = if all_diverge {
        let scope = if traces.iter().all(ProductTrace::is_analytic) {
            Scope::Analytic
        } else {
            Scope::UpToHorizon { horizon }
        };
        Verdict::new(
            Status::Certified,
            scope,
            format!(
                "products diverge ({summary}); the shift is topologically mixing, hence delta-mixing for every delta > 0"
            ),
        )
    } else if traces.iter().any(|t| t.classification == Classification::Inconclusive) {
        Verdict::new(
            Status::Inconclusive,
            Scope::UpToHorizon { horizon },
            format!("product growth undecided within the horizon ({summary})"),
        )
    } else {
        let oscillating = traces
            .iter()
            .any(|t| t.classification == Classification::SupInfiniteLimNot);
        let detail = if oscillating {
            "; the supremum is infinite while the limit is not, which is the sup-versus-lim separation between hypercyclic and mixing shifts"
        } else {
            ""
        };
        Verdict::new(
            Status::Inconclusive,
            Scope::UpToHorizon { horizon },
            format!("sufficient condition not applicable ({summary}){detail}; no refutation is claimed"),
        )
    };
    Ok(MixingSufficiency { verdict, traces })
}

/// Writes `n,log_product` rows.
pub fn write_trace_csv<W: Write>(trace: &ProductTrace, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["n", "log_product"])?;
    for (n, l) in &trace.values {
        wtr.write_record([n.to_string(), l.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, ratio};
    use crate::metric::Pt;
    use crate::systems::iterate;

    #[test]
    fn weight_product_examples() {
        let w = WeightSeq::constant(int(2));
        let uni = Laterality::Unilateral;
        assert_eq!(weight_product(&w, uni, 5, 3).unwrap(), WeightProduct::Value(int(8)));
        assert_eq!(weight_product(&w, uni, 5, 0).unwrap(), WeightProduct::Value(int(1)));
        assert_eq!(weight_product(&w, uni, 2, 3).unwrap(), WeightProduct::Annihilated);
        assert_eq!(weight_product(&w, uni, 0, 0).unwrap(), WeightProduct::Value(int(1)));
        assert!(weight_product(&w, uni, -1, 0).is_err());
        assert_eq!(
            weight_product(&w, Laterality::Bilateral, 0, 4).unwrap(),
            WeightProduct::Value(int(16))
        );
    }

    #[test]
    fn agrees_with_iteration_on_basis_vectors() {
        let w = WeightSeq::explicit(vec![int(3), ratio(1, 2), int(-5)], int(2));
        let sys = SystemDef::unilateral(w.clone()).unwrap();
        for k in 0..8i64 {
            for n in 0..10u64 {
                let image = iterate(&sys, &Pt::Seq(SparseVec::basis(k)), n).unwrap();
                let expected = match weight_product(&w, Laterality::Unilateral, k, n).unwrap() {
                    WeightProduct::Value(a) => SparseVec::basis(k - n as i64).scale(&a),
                    WeightProduct::Annihilated => SparseVec::zero(),
                };
                assert_eq!(image, Pt::Seq(expected), "k={k} n={n}");
            }
        }
    }

    #[test]
    fn right_inverse_is_exact() {
        let w = WeightSeq::block_oscillating(int(3));
        let sys = SystemDef::unilateral(w.clone()).unwrap();
        let v = SparseVec::from_pairs([(0, ratio(2, 3)), (4, int(-1))]);
        for n in 0..12 {
            let s = right_inverse(&w, Laterality::Unilateral, n, &v).unwrap();
            assert_eq!(iterate(&sys, &Pt::Seq(s), n).unwrap(), Pt::Seq(v.clone()));
        }
    }

    #[test]
    fn classification_examples() {
        let t = trace_products(&WeightSeq::constant(int(2)), Direction::Forward, 1000).unwrap();
        assert_eq!(t.empirical, Classification::DivergesMonotonically);
        assert_eq!(t.classification, Classification::DivergesMonotonically);

        let t = trace_products(&WeightSeq::constant(ratio(1, 2)), Direction::Forward, 1000).unwrap();
        assert_eq!(t.empirical, Classification::Bounded);

        let t = trace_products(
            &WeightSeq::block_oscillating(int(2)),
            Direction::Forward,
            DEFAULT_HORIZON,
        )
        .unwrap();
        assert_eq!(t.empirical, Classification::SupInfiniteLimNot);
        assert_eq!(t.analytic, Some(Classification::SupInfiniteLimNot));
        assert!(t.returns.len() >= 3);
    }

    #[test]
    fn block_oscillating_oracle() {
        // Products climb to 2^k over block k and fall back to 1 at its end.
        let t = trace_products(&WeightSeq::block_oscillating(int(2)), Direction::Forward, 30).unwrap();
        let products: Vec<f64> = t.values.iter().map(|v| v.1.exp().round()).collect();
        let expected = [
            2., 1., 2., 4., 2., 1., 2., 4., 8., 4., 2., 1., 2., 4., 8., 16., 8., 4., 2., 1., 2., 4., 8., 16., 32., 16.,
            8., 4., 2., 1.,
        ];
        assert_eq!(products, expected);
    }

    #[test]
    fn slow_growth_needs_the_analytic_rule() {
        let t = trace_products(&WeightSeq::constant(ratio(1001, 1000)), Direction::Forward, 1000).unwrap();
        assert_eq!(t.empirical, Classification::Bounded);
        assert_eq!(t.classification, Classification::DivergesMonotonically);
    }

    #[test]
    fn explicit_weights_follow_their_tail() {
        let w = WeightSeq::explicit(vec![ratio(1, 100); 5], int(3));
        let t = trace_products(&w, Direction::Forward, 200).unwrap();
        assert_eq!(t.classification, Classification::DivergesMonotonically);
        assert_eq!(t.empirical, Classification::DivergesMonotonically);
    }

    #[test]
    fn reclassification_is_stable() {
        for w in [
            WeightSeq::constant(int(2)),
            WeightSeq::block_oscillating(int(3)),
            WeightSeq::constant(ratio(2, 3)),
        ] {
            let t = trace_products(&w, Direction::Forward, 2000).unwrap();
            assert_eq!(classify(&t.values, &t.thresholds), (t.empirical, t.returns.clone()));
        }
    }

    #[test]
    fn sufficiency_examples() {
        let delta = ratio(1, 10);
        let uni = SystemDef::unilateral(WeightSeq::constant(int(2))).unwrap();
        let r = delta_mixing_sufficiency(&uni, &delta, 1000).unwrap();
        assert!(r.verdict.is_certified());
        assert_eq!(r.verdict.scope, Scope::Analytic);

        // Forward 2, backward 1/2: T^n e_0 = 2^{-n} e_{-n} → 0, mixing.
        let bi = SystemDef::bilateral(WeightSeq::two_sided(
            WeightGen::Constant { c: int(2) },
            WeightGen::Constant { c: ratio(1, 2) },
        ))
        .unwrap();
        let r = delta_mixing_sufficiency(&bi, &delta, 1000).unwrap();
        assert!(r.verdict.is_certified());
        let backward = trace_products(&WeightSeq::constant(ratio(1, 2)), Direction::Backward, 1000).unwrap();
        assert_eq!(backward.classification, Classification::Bounded);

        // Weight 2 everywhere doubles every norm, so no orbit returns.
        let expanding = SystemDef::bilateral(WeightSeq::constant(int(2))).unwrap();
        let r = delta_mixing_sufficiency(&expanding, &delta, 1000).unwrap();
        assert!(!r.verdict.is_certified());
        assert_eq!(r.traces[1].classification, Classification::Bounded);

        let osc = SystemDef::unilateral(WeightSeq::block_oscillating(int(2))).unwrap();
        let r = delta_mixing_sufficiency(&osc, &delta, DEFAULT_HORIZON).unwrap();
        assert_eq!(r.verdict.status, Status::Inconclusive);
        assert!(r.verdict.note.contains("not applicable"));

        let rot = SystemDef::identity(crate::metric::Space::circle());
        assert!(delta_mixing_sufficiency(&rot, &delta, 10).is_err());
    }

    #[test]
    fn csv_export() {
        let t = trace_products(&WeightSeq::constant(int(2)), Direction::Forward, 3).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,log_product\n1,0.69314"));
        assert_eq!(text.lines().count(), 4);
    }
}
