//! Metric spaces, points, open regions and δ-neighbourhoods.
//!
//! Three carriers are modelled:
//!
//! * the circle `ℝ/ℤ` with its geodesic metric (diameter `1/2`),
//! * the Euclidean plane under the capped metric `min{1, ρ}` (diameter `1`),
//! * `ℓ²` over `ℕ₀` or `ℤ`, restricted to finitely supported vectors.
//!
//! Open sets are finite unions of open balls. Distances from a point to such
//! a union are exact: every strict comparison is decided in rational
//! arithmetic, with square roots compared by squaring.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, Q};
use crate::rotation::{arcs_cover_circle, Arc};
use crate::sparse::SparseVec;
use crate::verdict::{Failure, Scope, Status, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Laterality {
    /// Indices in `ℕ₀`.
    Unilateral,
    /// Indices in `ℤ`.
    Bilateral,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Circle,
    /// Euclidean plane with the capped metric `min{1, ρ}`.
    CappedNormed,
    SequenceL2(Laterality),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Space {
    pub kind: SpaceKind,
    /// Number of coordinates perturbed when sampling sequence-space balls.
    pub dim_cap: usize,
}

impl Space {
    pub fn circle() -> Self {
        Self {
            kind: SpaceKind::Circle,
            dim_cap: 1,
        }
    }

    pub fn capped_plane() -> Self {
        Self {
            kind: SpaceKind::CappedNormed,
            dim_cap: 2,
        }
    }

    pub fn sequence(laterality: Laterality, dim_cap: usize) -> Self {
        Self {
            kind: SpaceKind::SequenceL2(laterality),
            dim_cap: dim_cap.max(1),
        }
    }

    /// Diameter, or `None` when unbounded.
    pub fn diameter(&self) -> Option<Q> {
        match self.kind {
            SpaceKind::Circle => Some(exact::ratio(1, 2)),
            SpaceKind::CappedNormed => Some(Q::one()),
            SpaceKind::SequenceL2(_) => None,
        }
    }

    pub fn contains(&self, p: &Pt) -> bool {
        match (self.kind, p) {
            (SpaceKind::Circle, Pt::Circle(_)) => true,
            (SpaceKind::CappedNormed, Pt::Plane { .. }) => true,
            (SpaceKind::SequenceL2(Laterality::Bilateral), Pt::Seq(_)) => true,
            (SpaceKind::SequenceL2(Laterality::Unilateral), Pt::Seq(v)) => v.all_nonnegative_indices(),
            _ => false,
        }
    }

    pub fn check(&self, p: &Pt) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch {
                expected: format!("{:?}", self.kind),
                found: p.kind_name().to_string(),
            })
        }
    }
}

/// A point of one of the model spaces.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pt {
    /// Circle coordinate, kept in `[0, 1)`.
    Circle(#[serde(with = "exact::serde_q")] Q),
    Plane {
        #[serde(with = "exact::serde_q")]
        x: Q,
        #[serde(with = "exact::serde_q")]
        y: Q,
    },
    Seq(SparseVec),
}

impl Pt {
    /// Circle point reduced mod 1.
    pub fn circle(t: Q) -> Self {
        Pt::Circle(exact::frac(&t))
    }

    pub fn plane(x: Q, y: Q) -> Self {
        Pt::Plane { x, y }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            Pt::Circle(_) => "circle point",
            Pt::Plane { .. } => "plane point",
            Pt::Seq(_) => "sequence vector",
        }
    }

    pub fn as_seq(&self) -> Option<&SparseVec> {
        match self {
            Pt::Seq(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_circle(&self) -> Option<&Q> {
        match self {
            Pt::Circle(t) => Some(t),
            _ => None,
        }
    }

    /// `self + t (other - self)` for the vector carriers.
    pub fn lerp(&self, other: &Pt, t: &Q) -> Option<Pt> {
        match (self, other) {
            (Pt::Plane { x: ax, y: ay }, Pt::Plane { x: bx, y: by }) => Some(Pt::Plane {
                x: ax + (bx - ax) * t,
                y: ay + (by - ay) * t,
            }),
            (Pt::Seq(a), Pt::Seq(b)) => Some(Pt::Seq(a.lerp(b, t))),
            _ => None,
        }
    }
}

impl fmt::Display for Pt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pt::Circle(t) => write!(f, "{}", exact::show(t)),
            Pt::Plane { x, y } => write!(f, "({}, {})", exact::show(x), exact::show(y)),
            Pt::Seq(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ball {
    pub center: Pt,
    #[serde(with = "exact::serde_q")]
    pub radius: Q,
}

/// A nonempty finite union of open balls in a single space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OpenRegion {
    balls: Vec<Ball>,
}

impl OpenRegion {
    pub fn new(balls: Vec<Ball>) -> Result<Self> {
        let first = balls
            .first()
            .ok_or_else(|| Error::Domain("open region needs at least one ball".into()))?;
        for b in &balls {
            if !b.radius.is_positive() {
                return Err(Error::Domain(format!(
                    "ball radius {} is not positive",
                    exact::show(&b.radius)
                )));
            }
            if std::mem::discriminant(&b.center) != std::mem::discriminant(&first.center) {
                return Err(Error::Domain("ball centers lie in different spaces".into()));
            }
        }
        Ok(Self { balls })
    }

    pub fn ball(center: Pt, radius: Q) -> Result<Self> {
        Self::new(vec![Ball { center, radius }])
    }

    /// The open circle arc `arc` written as a ball.
    pub fn from_arc(arc: &Arc) -> Self {
        let half = arc.length() / exact::int(2);
        Self {
            balls: vec![Ball {
                center: Pt::circle(arc.start() + &half),
                radius: half,
            }],
        }
    }

    pub fn balls(&self) -> &[Ball] {
        &self.balls
    }

    pub fn check_space(&self, s: &Space) -> Result<()> {
        self.balls.iter().try_for_each(|b| s.check(&b.center))
    }

    /// Exact membership test.
    pub fn contains(&self, s: &Space, x: &Pt) -> Result<bool> {
        for b in &self.balls {
            if dist_exact(s, x, &b.center)?.lt(&b.radius) {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// An exact distance value, either rational or the square root of one.
#[derive(Clone, Debug, PartialEq)]
pub enum Length {
    Rational(Q),
    Root(Q),
}

impl Length {
    pub fn sq(&self) -> Q {
        match self {
            Length::Rational(d) => d * d,
            Length::Root(s) => s.clone(),
        }
    }

    pub fn lt(&self, t: &Q) -> bool {
        match self {
            Length::Rational(d) => d < t,
            Length::Root(s) => exact::sqrt_lt(s, t),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Length::Rational(d) => exact::to_f64(d),
            Length::Root(s) => exact::sqrt_f64(s),
        }
    }
}

fn circle_gap(x: &Q, y: &Q) -> Q {
    let d = exact::frac(&(x - y));
    let other = Q::one() - &d;
    exact::min(d, other)
}

/// Exact distance between two points of `s`.
pub fn dist_exact(s: &Space, x: &Pt, y: &Pt) -> Result<Length> {
    s.check(x)?;
    s.check(y)?;
    Ok(match (x, y) {
        (Pt::Circle(a), Pt::Circle(b)) => Length::Rational(circle_gap(a, b)),
        (Pt::Plane { x: ax, y: ay }, Pt::Plane { x: bx, y: by }) => {
            let dx = ax - bx;
            let dy = ay - by;
            let rho_sq = &dx * &dx + &dy * &dy;
            if rho_sq >= Q::one() {
                Length::Rational(Q::one())
            } else {
                Length::Root(rho_sq)
            }
        }
        (Pt::Seq(a), Pt::Seq(b)) => Length::Root(a.dist_sq(b)),
        _ => unreachable!("space check admits matching kinds only"),
    })
}

/// Metric `d(x, y)` of `s`.
pub fn dist(s: &Space, x: &Pt, y: &Pt) -> Result<f64> {
    Ok(dist_exact(s, x, y)?.to_f64())
}

/// Base (uncapped) squared distance on the vector carriers.
fn base_dist_sq(x: &Pt, y: &Pt) -> Q {
    match (x, y) {
        (Pt::Plane { x: ax, y: ay }, Pt::Plane { x: bx, y: by }) => {
            let dx = ax - bx;
            let dy = ay - by;
            &dx * &dx + &dy * &dy
        }
        (Pt::Seq(a), Pt::Seq(b)) => a.dist_sq(b),
        (Pt::Circle(a), Pt::Circle(b)) => {
            let d = circle_gap(a, b);
            &d * &d
        }
        _ => unreachable!("space check admits matching kinds only"),
    }
}

fn dist_to_ball(s: &Space, x: &Pt, b: &Ball) -> Result<f64> {
    s.check(x)?;
    s.check(&b.center)?;
    Ok(match s.kind {
        SpaceKind::Circle => {
            let d = match (x, &b.center) {
                (Pt::Circle(a), Pt::Circle(c)) => circle_gap(a, c),
                _ => unreachable!(),
            };
            exact::to_f64(&exact::max(Q::zero(), d - &b.radius))
        }
        SpaceKind::CappedNormed => {
            if b.radius > Q::one() {
                0.0
            } else {
                let rho = exact::sqrt_f64(&base_dist_sq(x, &b.center));
                (rho - exact::to_f64(&b.radius)).clamp(0.0, 1.0)
            }
        }
        SpaceKind::SequenceL2(_) => {
            let rho = exact::sqrt_f64(&base_dist_sq(x, &b.center));
            (rho - exact::to_f64(&b.radius)).max(0.0)
        }
    })
}

/// Exact test `dist(x, b) < t`.
fn ball_within(s: &Space, x: &Pt, b: &Ball, t: &Q) -> bool {
    if !t.is_positive() {
        return false;
    }
    let reach = &b.radius + t;
    match s.kind {
        SpaceKind::Circle => match (x, &b.center) {
            (Pt::Circle(a), Pt::Circle(c)) => circle_gap(a, c) < reach,
            _ => false,
        },
        SpaceKind::CappedNormed => {
            b.radius > Q::one() || t > &Q::one() || exact::sqrt_lt(&base_dist_sq(x, &b.center), &reach)
        }
        SpaceKind::SequenceL2(_) => exact::sqrt_lt(&base_dist_sq(x, &b.center), &reach),
    }
}

/// `dist(x, R)`: the infimum of `d(x, y)` over `y ∈ R`.
pub fn dist_to_region(s: &Space, x: &Pt, r: &OpenRegion) -> Result<f64> {
    r.check_space(s)?;
    let mut best = f64::INFINITY;
    for b in r.balls() {
        best = best.min(dist_to_ball(s, x, b)?);
    }
    Ok(best)
}

/// Exact test `dist(x, R) < t`; false for `t <= 0`.
pub fn region_within(s: &Space, x: &Pt, r: &OpenRegion, t: &Q) -> Result<bool> {
    s.check(x)?;
    r.check_space(s)?;
    Ok(r.balls().iter().any(|b| ball_within(s, x, b, t)))
}

/// Membership in `B_δ(R) = {x : dist(x, R) < δ}`.
pub fn in_delta_neighborhood(s: &Space, x: &Pt, r: &OpenRegion, delta: &Q) -> Result<bool> {
    if !delta.is_positive() {
        return Err(Error::Domain("delta must be positive".into()));
    }
    region_within(s, x, r, delta)
}

/// Exact test `inf_{u ∈ U, v ∈ V} d(u, v) >= t`.
pub(crate) fn regions_gap_at_least(s: &Space, u: &OpenRegion, v: &OpenRegion, t: &Q) -> bool {
    if !t.is_positive() {
        return true;
    }
    u.balls().iter().all(|bu| {
        v.balls().iter().all(|bv| {
            let reach = &bu.radius + &bv.radius + t;
            match s.kind {
                SpaceKind::CappedNormed => {
                    bu.radius <= Q::one()
                        && bv.radius <= Q::one()
                        && t <= &Q::one()
                        && !exact::sqrt_lt(&base_dist_sq(&bu.center, &bv.center), &reach)
                }
                _ => !exact::sqrt_lt(&base_dist_sq(&bu.center, &bv.center), &reach),
            }
        })
    })
}

/// Open arc covered by a circle ball.
pub(crate) fn ball_arc(b: &Ball) -> Arc {
    let c = b.center.as_circle().expect("circle ball");
    if b.radius > exact::ratio(1, 2) {
        Arc::full()
    } else {
        Arc::new(c - &b.radius, &b.radius * exact::int(2)).expect("radius in (0, 1/2]")
    }
}

/// Decides whether `B_δ(R)` is the whole space.
///
/// `δ` above the diameter settles the question analytically. Below it the
/// circle is decided by arc arithmetic and the capped plane by exhibiting a
/// far point, whose capped distance to `R` is `1`.
pub fn neighborhood_is_whole_space(s: &Space, r: &OpenRegion, delta: &Q) -> Result<Verdict> {
    if !delta.is_positive() {
        return Err(Error::Domain("delta must be positive".into()));
    }
    r.check_space(s)?;
    let diam = s
        .diameter()
        .ok_or_else(|| Error::Unsupported("whole-space test needs a finite-diameter space".into()))?;
    if delta > &diam {
        return Ok(Verdict::new(
            Status::Certified,
            Scope::Analytic,
            format!(
                "delta {} exceeds the diameter {}",
                exact::show(delta),
                exact::show(&diam)
            ),
        ));
    }
    match s.kind {
        SpaceKind::Circle => {
            let fattened: Vec<Arc> = r
                .balls()
                .iter()
                .map(|b| crate::rotation::delta_fatten(&ball_arc(b), delta))
                .collect();
            if arcs_cover_circle(&fattened) {
                let covered = fattened
                    .iter()
                    .map(|a| exact::show(&a.length()))
                    .collect::<Vec<_>>()
                    .join(", ");
                Ok(Verdict::new(
                    Status::Certified,
                    Scope::Analytic,
                    format!("fattened arcs (lengths {covered}) cover the circle"),
                ))
            } else {
                let gap = crate::rotation::uncovered_point(&fattened).expect("arcs do not cover the circle");
                let p = Pt::circle(gap);
                let d = dist_to_region(s, &p, r)?;
                let covered = fattened.iter().fold(Q::zero(), |acc, a| acc + a.length());
                Ok(Verdict::new(
                    Status::Refuted,
                    Scope::Analytic,
                    format!(
                        "fattened arcs have total length {} and miss a point",
                        exact::show(&covered)
                    ),
                )
                .with_failures(vec![Failure {
                    pair: 0,
                    times: Vec::new(),
                    horizon: 0,
                    point: Some(p),
                    distance: Some(d),
                    reason: "point outside the delta-neighbourhood".into(),
                }]))
            }
        }
        SpaceKind::CappedNormed => {
            let far = r.balls().iter().fold(exact::int(2), |acc, b| match &b.center {
                Pt::Plane { x, y } => acc + x.abs() + y.abs() + &b.radius,
                _ => acc,
            });
            let p = Pt::plane(far, Q::zero());
            debug_assert!(!region_within(s, &p, r, delta)?);
            let d = dist_to_region(s, &p, r)?;
            Ok(Verdict::new(
                Status::Refuted,
                Scope::Analytic,
                "the capped distance from a far point to the region is 1, not below delta",
            )
            .with_failures(vec![Failure {
                pair: 0,
                times: Vec::new(),
                horizon: 0,
                point: Some(p),
                distance: Some(d),
                reason: "point outside the delta-neighbourhood".into(),
            }]))
        }
        SpaceKind::SequenceL2(_) => unreachable!("infinite diameter handled above"),
    }
}
