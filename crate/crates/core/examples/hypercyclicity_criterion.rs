//! The delta-Hypercyclicity Criterion for 2B and the explicit points it
//! produces: x = v + S_n w lands on w + Tⁿ v exactly.

use delta_dyn::criterion::{check_delta_hc, check_sequence_mixing, lambda_b_instance, transitivity_witness};
use delta_dyn::exact::{int, rat};
use delta_dyn::metric::{OpenRegion, Pt};
use delta_dyn::sparse::SparseVec;

fn main() -> delta_dyn::error::Result<()> {
    let inst = lambda_b_instance(&int(2), 3, 64)?;
    for delta in [rat(1e-6), rat(0.1), int(10)] {
        let r = check_delta_hc(&inst, &delta, 64)?;
        println!("delta = {}: {}", delta, r.verdict.note);
    }

    let ball = |pairs: &[(i64, i64)]| {
        let c = SparseVec::from_pairs(pairs.iter().map(|&(i, c)| (i, int(c))));
        OpenRegion::ball(Pt::Seq(c), rat(0.2))
    };
    let (u, o) = (ball(&[(0, 1)])?, ball(&[(1, 1), (2, -1)])?);
    let extra = vec![SparseVec::from_pairs([(1, int(1)), (2, int(-1))])];
    let inst = inst.with_extra_samples(extra.clone(), extra)?;
    let wit = transitivity_witness(&inst, &rat(0.1), &u, &o)?;
    println!("k = {}, x = {}, T^n x = target within {}", wit.k, wit.x, wit.distance);

    let v = check_sequence_mixing(&inst, &rat(0.1), &[(u.clone(), o.clone()), (o, u)], 40)?;
    for t in &v.thresholds {
        println!("pair {}: witnesses for every k >= {}", t.pair, t.start);
    }
    Ok(())
}
