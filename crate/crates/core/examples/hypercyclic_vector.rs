//! Builds one vector whose orbit under 2B passes within delta of sixteen
//! random targets, then confirms it with the transitive-point checker.

use delta_dyn::certify::check_delta_transitive_point;
use delta_dyn::criterion::{build_delta_hc_vector, target_balls, write_plan_csv};
use delta_dyn::exact::{int, rat};
use delta_dyn::metric::Pt;
use delta_dyn::sampling::random_vectors;
use delta_dyn::systems::SystemDef;

fn main() -> delta_dyn::error::Result<()> {
    let delta = rat(0.1);
    let targets = random_vectors(16, 3, 7);
    let hv = build_delta_hc_vector(&int(2), &targets, &delta)?;
    println!(
        "x has {} nonzero coordinates, last index {:?}",
        hv.x.nnz(),
        hv.x.max_index()
    );
    write_plan_csv(&hv.plan, std::io::stdout())?;

    let sys = SystemDef::lambda_b(int(2))?;
    let horizon = hv.plan.last().map_or(0, |s| s.m) + 1;
    let r = check_delta_transitive_point(&sys, &Pt::Seq(hv.x), &target_balls(&targets, &delta)?, &delta, horizon)?;
    println!("{:?}: {}", r.verdict.status, r.verdict.note);
    Ok(())
}
