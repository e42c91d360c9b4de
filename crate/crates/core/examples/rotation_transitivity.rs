//! An irrational rotation is delta-transitive for every delta, delta-mixing
//! once delta reaches the half-diameter, and never UFB delta-mixing.

use delta_dyn::certify::{all_pairs, check_delta_tm, check_delta_tt, circle_cover, default_cover, CheckConfig};
use delta_dyn::exact::{rat, ratio};
use delta_dyn::metric::Space;
use delta_dyn::rotation::{default_eta_grid, refute_ufb, RotationAngle};
use delta_dyn::systems::SystemDef;

fn main() -> delta_dyn::error::Result<()> {
    let angle = RotationAngle::golden();
    let rot = SystemDef::rotation(angle.clone());

    let cfg = CheckConfig::new(rat(0.05), all_pairs(&circle_cover(32))).with_horizon(100_000);
    let tt = check_delta_tt(&rot, &cfg)?;
    let worst = tt.witnesses.iter().map(|w| w.n).max().unwrap_or(0);
    println!(
        "delta-TT at 0.05 over 1024 pairs: {:?}, largest first hit n = {worst}",
        tt.status
    );

    let cfg = CheckConfig::new(ratio(1, 2), default_cover(&Space::circle()));
    let tm = check_delta_tm(&rot, &cfg)?;
    println!("delta-TM at 1/2: {:?} ({})", tm.status, tm.note);

    let grid = default_eta_grid(&ratio(1, 2), 64);
    let ufb = refute_ufb(&angle, &ratio(1, 2), &grid, 10_000)?;
    println!("UFB at 1/2: {:?}", ufb.verdict.status);
    for o in ufb.per_eta.iter().step_by(16) {
        println!(
            "  eta = {:.4}: first failing n = {:?}",
            delta_dyn::exact::to_f64(&o.eta),
            o.first_failing
        );
    }
    Ok(())
}
