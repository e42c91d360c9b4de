//! Weighted backward shifts: closed-form powers, product traces and the
//! divergence test for mixing.

use delta_dyn::exact::{int, ratio, show};
use delta_dyn::metric::Laterality;
use delta_dyn::shifts::{delta_mixing_sufficiency, trace_products, weight_product, Direction, WeightProduct};
use delta_dyn::systems::{SystemDef, WeightGen, WeightSeq};

fn main() -> delta_dyn::error::Result<()> {
    let w = WeightSeq::explicit(vec![int(3), ratio(1, 2), int(5)], int(2));
    for (k, n) in [(3, 3), (5, 2), (1, 2)] {
        let p = match weight_product(&w, Laterality::Unilateral, k, n)? {
            WeightProduct::Value(q) => show(&q),
            WeightProduct::Annihilated => "annihilated".into(),
        };
        println!("A_{k}^({n}) = {p}");
    }

    let osc = WeightSeq::block_oscillating(int(2));
    let t = trace_products(&osc, Direction::Forward, 2_000)?;
    println!(
        "block oscillating: {:?}, returns at {:?}",
        t.classification,
        &t.returns[..5.min(t.returns.len())]
    );

    let systems = [
        ("unilateral, a = 2", SystemDef::unilateral(WeightSeq::constant(int(2)))?),
        (
            "bilateral, 2 forward, 1/2 backward",
            SystemDef::bilateral(WeightSeq::two_sided(
                WeightGen::Constant { c: int(2) },
                WeightGen::Constant { c: ratio(1, 2) },
            ))?,
        ),
        ("bilateral, a = 2", SystemDef::bilateral(WeightSeq::constant(int(2)))?),
        ("block oscillating", SystemDef::unilateral(osc)?),
    ];
    for (name, sys) in systems {
        let r = delta_mixing_sufficiency(&sys, &int(1), 2_000)?;
        println!("{name}: {:?} ({:?})", r.verdict.status, r.verdict.scope);
    }
    Ok(())
}
