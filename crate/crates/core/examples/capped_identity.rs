//! The identity map on the plane with metric min{1, |x - y|}.
//!
//! Every pair of balls is hit at n = 0 once delta exceeds the diameter,
//! while far-apart balls are refuted exactly for small delta.

use delta_dyn::certify::{check_delta_tm, check_delta_tt, check_ufb, default_cover, CheckConfig};
use delta_dyn::exact::{int, rat};
use delta_dyn::metric::{dist, OpenRegion, Pt, Space};
use delta_dyn::systems::SystemDef;

fn main() -> delta_dyn::error::Result<()> {
    let space = Space::capped_plane();
    let id = SystemDef::identity(space);

    let far = Pt::plane(int(100), int(0));
    println!(
        "capped distance to (100, 0): {}",
        dist(&space, &Pt::plane(int(0), int(0)), &far)?
    );

    let cfg = CheckConfig::new(rat(1.2), default_cover(&space))
        .with_eta(rat(1.1))
        .with_horizon(10);
    for (name, v) in [
        ("UFB", check_ufb(&id, &cfg)?),
        ("delta-TM", check_delta_tm(&id, &cfg)?),
        ("delta-TT", check_delta_tt(&id, &cfg)?),
    ] {
        let max_n = v.witnesses.iter().map(|w| w.n).max().unwrap_or(0);
        println!(
            "{name:>8}: {:?}, {} witnesses, largest n = {max_n}",
            v.status,
            v.witnesses.len()
        );
    }

    let u = OpenRegion::ball(Pt::plane(int(0), int(0)), rat(0.05))?;
    let v = OpenRegion::ball(Pt::plane(int(5), int(0)), rat(0.05))?;
    let cfg = CheckConfig::new(rat(0.1), vec![(u, v)]).with_horizon(10);
    let verdict = check_delta_tt(&id, &cfg)?;
    println!("delta = 0.1, far balls: {:?} ({:?})", verdict.status, verdict.scope);
    Ok(())
}
