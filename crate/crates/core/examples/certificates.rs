//! Runs a bundled scenario, writes its certificate and sidecars, then
//! replays the certificate and tampers with a witness.

use delta_dyn::scenario::{find_bundled, replay, run};

fn main() -> delta_dyn::error::Result<()> {
    let sc = find_bundled("rotation-not-delta-tm").expect("bundled");
    let out = run(&sc, None, None)?;
    let dir = std::env::temp_dir().join("delta-dyn-example");
    let path = out.write(&dir)?;
    println!("{:?} -> {}", out.status(), path.display());
    for f in &out.certificate.sidecars {
        println!("  sidecar {f}");
    }

    let text = std::fs::read_to_string(&path)?;
    println!("fresh replay matches: {}", replay(&text)?.matches());

    let tampered = text.replacen("\"times\": [\n          2,", "\"times\": [\n          4,", 1);
    let r = replay(&tampered)?;
    println!("tampered replay mismatches: {:?}", r.mismatches);
    Ok(())
}
