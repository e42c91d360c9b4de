//! Seeded rational samples from open regions.

use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::exact::{self, Q};
use crate::metric::{Laterality, OpenRegion, Pt, Space, SpaceKind};
use crate::sparse::SparseVec;

const GRID_BITS: u32 = 20;

fn unit(rng: &mut ChaCha8Rng) -> Q {
    // Uniform on the dyadic grid strictly inside (-1, 1).
    let m = (1i64 << GRID_BITS) - 1;
    exact::ratio(rng.gen_range(-m..=m), 1i64 << GRID_BITS)
}

/// `count` points of `region`, reproducible from `seed`.
///
/// Balls are visited round-robin. Each ball contributes its center first,
/// followed by random perturbations, and every point is checked for exact
/// membership before it is returned.
pub fn sample_region(space: &Space, region: &OpenRegion, count: usize, seed: u64) -> Result<Vec<Pt>> {
    region.check_space(space)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let balls = region.balls();
    let mut out = Vec::with_capacity(count);
    let mut round = 0usize;
    while out.len() < count {
        for b in balls {
            if out.len() == count {
                break;
            }
            if round == 0 {
                out.push(b.center.clone());
                continue;
            }
            loop {
                let p = perturb(space, &b.center, &b.radius, &mut rng);
                if region.contains(space, &p)? {
                    out.push(p);
                    break;
                }
            }
        }
        round += 1;
    }
    Ok(out)
}

fn perturb(space: &Space, center: &Pt, r: &Q, rng: &mut ChaCha8Rng) -> Pt {
    match center {
        Pt::Circle(t) => Pt::circle(t + r * unit(rng)),
        Pt::Plane { x, y } => loop {
            let (u, v) = (unit(rng), unit(rng));
            if &u * &u + &v * &v < Q::one() {
                break Pt::plane(x + r * u, y + r * v);
            }
        },
        Pt::Seq(c) => {
            let d = space.dim_cap;
            let lo = match space.kind {
                SpaceKind::SequenceL2(Laterality::Bilateral) => -((d / 2) as i64),
                _ => 0,
            };
            // Each coordinate moves by less than r / ceil(sqrt(d)), so the
            // whole perturbation stays strictly inside the ball.
            let root = (d as f64).sqrt().ceil() as i64;
            let s = r * exact::ratio(1, root) * unit(rng).abs();
            let mut v = c.clone();
            for i in lo..lo + d as i64 {
                v.add_at(i, &(&s * unit(rng)));
            }
            Pt::Seq(v)
        }
    }
}

/// Seeded points of a full space, used as generic sample points.
pub fn sample_space(space: &Space, count: usize, seed: u64) -> Vec<Pt> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| match space.kind {
            SpaceKind::Circle => Pt::circle(unit(&mut rng).abs()),
            SpaceKind::CappedNormed => Pt::plane(exact::int(2) * unit(&mut rng), exact::int(2) * unit(&mut rng)),
            SpaceKind::SequenceL2(lat) => {
                let lo = if lat == Laterality::Bilateral {
                    -((space.dim_cap / 2) as i64)
                } else {
                    0
                };
                Pt::Seq(SparseVec::from_pairs(
                    (lo..lo + space.dim_cap as i64).map(|i| (i, unit(&mut rng))),
                ))
            }
        })
        .collect()
}

/// Seeded finitely supported vectors on indices `0..=support_cap`, with
/// dyadic coefficients in `(-2, 2)` and at least one nonzero entry.
pub fn random_vectors(count: usize, support_cap: usize, seed: u64) -> Vec<SparseVec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let mut v = SparseVec::zero();
            for i in 0..=support_cap as i64 {
                if rng.gen_bool(0.6) {
                    v.add_at(i, &(exact::int(2) * unit(&mut rng)));
                }
            }
            if !v.is_zero() {
                break v;
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};

    #[test]
    fn samples_are_members_and_reproducible() {
        let spaces = [
            (Space::circle(), Pt::circle(rat(0.95))),
            (Space::capped_plane(), Pt::plane(int(3), int(-1))),
            (Space::sequence(Laterality::Unilateral, 4), Pt::Seq(SparseVec::basis(2))),
            (Space::sequence(Laterality::Bilateral, 4), Pt::Seq(SparseVec::basis(-1))),
        ];
        for (space, center) in spaces {
            let region = OpenRegion::ball(center.clone(), rat(0.05)).unwrap();
            let a = sample_region(&space, &region, 20, 9).unwrap();
            let b = sample_region(&space, &region, 20, 9).unwrap();
            assert_eq!(a, b);
            assert_eq!(a[0], center);
            for p in &a {
                assert!(region.contains(&space, p).unwrap());
            }
            assert_ne!(a, sample_region(&space, &region, 20, 10).unwrap());
        }
    }
}
