//! UFB delta-mixing, delta-mixing and delta-transitivity checked side by
//! side; a certified stronger notion must never meet a weaker refutation.

use delta_dyn::certify::{default_cover, run_implication_harness, CheckConfig};
use delta_dyn::exact::{int, ratio};
use delta_dyn::metric::Space;
use delta_dyn::rotation::RotationAngle;
use delta_dyn::systems::{SystemDef, WeightSeq};

fn main() -> delta_dyn::error::Result<()> {
    let systems = [
        SystemDef::identity(Space::capped_plane()),
        SystemDef::identity(Space::circle()),
        SystemDef::rotation(RotationAngle::golden()),
        SystemDef::rotation(RotationAngle::rational(ratio(1, 3))?),
        SystemDef::unilateral(WeightSeq::constant(int(2)))?,
    ];
    for sys in systems {
        for (delta, eta) in [(ratio(1, 2), ratio(1, 4)), (ratio(1, 10), ratio(1, 20))] {
            let cfg = CheckConfig::new(delta.clone(), default_cover(&sys.space()))
                .with_eta(eta)
                .with_horizon(200)
                .with_samples(4);
            let r = run_implication_harness(&sys, &cfg)?;
            println!(
                "{:<40} delta = {:<5} UFB {:<12} TM {:<12} TT {:<12} chain holds: {}",
                sys.label(),
                delta.to_string(),
                format!("{:?}", r.ufb.status),
                format!("{:?}", r.tm.status),
                format!("{:?}", r.tt.status),
                r.holds()
            );
        }
    }
    Ok(())
}
