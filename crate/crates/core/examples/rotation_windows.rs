//! Return times of an irrational rotation and the window A.
//!
//! `fⁿ(U)` meets `B_δ(V)` exactly when `{nα}` lies in an arc of length
//! `|U| + |V| + 2δ`; the complement is visited with positive density.

use delta_dyn::exact::{rat, show};
use delta_dyn::rotation::{delta_fatten, equidistribution_count, refute_delta_tm, window_a, Arc, RotationAngle};

fn main() -> delta_dyn::error::Result<()> {
    let angle = RotationAngle::golden();
    println!("alpha ~ {} (q = {})", angle.convergent(), angle.denominator());

    let u = Arc::new(rat(0.225), rat(0.05))?;
    let v = Arc::new(rat(0.725), rat(0.05))?;
    let delta = rat(0.1);
    let a = window_a(&u, &delta_fatten(&v, &delta))?;
    println!("|A| = {}", show(&a.length()));

    let r = refute_delta_tm(&angle, &u, &v, &delta, 10_000)?;
    println!("{:?}: {}", r.verdict.status, r.verdict.note);
    println!("first failing times: {:?}", &r.failing[..10]);

    let (hits, expected) = equidistribution_count(&angle, &a.arc, 10_000);
    println!("hits of A up to 10^4: {hits} (expected {expected:.1})");
    Ok(())
}
