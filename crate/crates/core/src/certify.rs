//! Checkers for δ-transitivity, δ-mixing, uniform δ-mixing and δ-transitive
//! points over a finite cover of test regions.
//!
//! Certificates rest on replayable witnesses: a point `x ∈ U` and a time `n`
//! with `dist(fⁿx, V) < δ − guard`, decided in exact arithmetic. Refutations
//! come only from exact engines (identity maps, circle arcs, expanding
//! bilateral shifts, finite orbits). Everything else is inconclusive.

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, Q};
use crate::metric::{
    ball_arc, dist_to_region, neighborhood_is_whole_space, region_within, regions_gap_at_least, Laterality, OpenRegion,
    Pt, Space, SpaceKind,
};
use crate::rotation::{arcs_cover_circle, common_point, delta_fatten, window_arc, Arc, OrbitPositions, RotationAngle};
use crate::sampling::sample_region;
use crate::shifts::right_inverse;
use crate::sparse::SparseVec;
use crate::systems::{apply, iterate, shift_once, SystemDef, WeightSeq, MAX_COEFF_BITS};
use crate::verdict::{Failure, PairThreshold, Scope, Status, Verdict, Witness};

pub const DEFAULT_GUARD: f64 = 1e-9;
pub const DEFAULT_HORIZON: u64 = 1000;
pub const DEFAULT_SAMPLES: usize = 16;

/// Failing times kept in a record; the note carries the full count.
const MAX_LISTED_TIMES: usize = 100;

/// Parameters shared by the pair checkers.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckConfig {
    pub delta: Q,
    /// Uniform radius for the UFB check, in `(0, delta)`.
    pub eta: Option<Q>,
    pub horizon: u64,
    pub pair_cover: Vec<(OpenRegion, OpenRegion)>,
    pub samples_per_region: usize,
    pub seed: u64,
    pub guard: Q,
}

impl CheckConfig {
    pub fn new(delta: Q, pair_cover: Vec<(OpenRegion, OpenRegion)>) -> Self {
        Self {
            delta,
            eta: None,
            horizon: DEFAULT_HORIZON,
            pair_cover,
            samples_per_region: DEFAULT_SAMPLES,
            seed: 0,
            guard: exact::rat(DEFAULT_GUARD),
        }
    }

    pub fn with_eta(mut self, eta: Q) -> Self {
        self.eta = Some(eta);
        self
    }

    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples_per_region = samples;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_guard(mut self, guard: Q) -> Self {
        self.guard = guard;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !self.delta.is_positive() {
            return fail("delta must be positive".into());
        }
        if let Some(eta) = &self.eta {
            if !eta.is_positive() || eta >= &self.delta {
                return fail(format!(
                    "eta {} outside (0, {})",
                    exact::show(eta),
                    exact::show(&self.delta)
                ));
            }
        }
        if self.guard.is_negative() {
            return fail("guard must be nonnegative".into());
        }
        let smallest = self.eta.as_ref().unwrap_or(&self.delta);
        if &self.guard >= smallest {
            return fail("guard must be below every radius".into());
        }
        if self.horizon == 0 {
            return fail("horizon must be at least 1".into());
        }
        if self.pair_cover.is_empty() {
            return fail("pair cover is empty".into());
        }
        if self.samples_per_region == 0 {
            return fail("samples per region must be at least 1".into());
        }
        Ok(())
    }
}

/// Eight balls of radius `1/32` and all 64 ordered pairs between them.
pub fn default_cover(space: &Space) -> Vec<(OpenRegion, OpenRegion)> {
    let centers: Vec<Pt> = match space.kind {
        SpaceKind::Circle => (0..8).map(|i| Pt::circle(exact::ratio(2 * i + 1, 16))).collect(),
        SpaceKind::CappedNormed => (0..8).map(|i| Pt::plane(exact::ratio(i, 4), Q::zero())).collect(),
        SpaceKind::SequenceL2(lat) => {
            let lo = if lat == Laterality::Bilateral { -2 } else { 0 };
            (lo..lo + 4)
                .flat_map(|i| {
                    let e = SparseVec::basis(i);
                    [Pt::Seq(e.clone()), Pt::Seq(-&e)]
                })
                .collect()
        }
    };
    let regions: Vec<OpenRegion> = centers
        .into_iter()
        .map(|c| OpenRegion::ball(c, exact::ratio(1, 32)).expect("positive radius"))
        .collect();
    all_pairs(&regions)
}

/// `count` disjoint arcs of length `1/(2 count)` centred at `(2i + 1)/(2 count)`.
pub fn circle_cover(count: usize) -> Vec<OpenRegion> {
    let c = count as i64;
    (0..c)
        .map(|i| {
            OpenRegion::ball(Pt::circle(exact::ratio(2 * i + 1, 2 * c)), exact::ratio(1, 4 * c))
                .expect("positive radius")
        })
        .collect()
}

/// Every ordered pair `(U, V)` of `regions`.
pub fn all_pairs(regions: &[OpenRegion]) -> Vec<(OpenRegion, OpenRegion)> {
    regions
        .iter()
        .flat_map(|u| regions.iter().map(move |v| (u.clone(), v.clone())))
        .collect()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Some `n ≤ horizon`.
    Exists,
    /// Every `n` from some `N` on.
    Eventually,
}

struct PairOutcome {
    status: Status,
    scope: Scope,
    witness: Option<Witness>,
    start: Option<u64>,
    failure: Option<Failure>,
    engine: &'static str,
}

impl PairOutcome {
    fn certified(scope: Scope, witness: Witness, start: u64, engine: &'static str) -> Self {
        Self {
            status: Status::Certified,
            scope,
            witness: Some(witness),
            start: Some(start),
            failure: None,
            engine,
        }
    }

    fn refuted(scope: Scope, failure: Failure, engine: &'static str) -> Self {
        Self {
            status: Status::Refuted,
            scope,
            witness: None,
            start: None,
            failure: Some(failure),
            engine,
        }
    }

    fn inconclusive(failure: Failure, engine: &'static str) -> Self {
        Self {
            status: Status::Inconclusive,
            scope: Scope::UpToHorizon {
                horizon: failure.horizon,
            },
            witness: None,
            start: None,
            failure: Some(failure),
            engine,
        }
    }
}

fn scope_rank(s: &Scope) -> u8 {
    match s {
        Scope::Analytic => 0,
        Scope::Approximant { .. } => 1,
        Scope::UpToHorizon { .. } => 2,
    }
}

fn weakest<'a>(scopes: impl Iterator<Item = &'a Scope>) -> Scope {
    scopes.max_by_key(|s| scope_rank(s)).cloned().unwrap_or(Scope::Analytic)
}

struct PairCtx<'a> {
    sys: &'a SystemDef,
    space: Space,
    cfg: &'a CheckConfig,
    idx: usize,
    u: &'a OpenRegion,
    v: &'a OpenRegion,
    /// The radius `δ` (or `η`) under test.
    radius: &'a Q,
    /// Certification threshold `radius − guard`.
    t: Q,
    mode: Mode,
}

impl PairCtx<'_> {
    fn witness(&self, n: u64, x: Pt) -> Result<Witness> {
        let image = iterate(self.sys, &x, n)?;
        let distance = dist_to_region(&self.space, &image, self.v)?;
        Ok(Witness {
            pair: self.idx,
            n,
            point: x,
            distance,
        })
    }

    fn failure(&self, times: Vec<u64>, point: Option<Pt>, distance: Option<f64>, reason: impl Into<String>) -> Failure {
        Failure {
            pair: self.idx,
            times,
            horizon: self.cfg.horizon,
            point,
            distance,
            reason: reason.into(),
        }
    }
}

/// `fⁿ(U) ∩ B_δ(V) ≠ ∅` for some `n ≤ horizon`, for every pair of the cover.
pub fn check_delta_tt(sys: &SystemDef, cfg: &CheckConfig) -> Result<Verdict> {
    run_pairs(sys, cfg, &cfg.delta, Mode::Exists)
}

/// `fⁿ(U) ∩ B_δ(V) ≠ ∅` for all `n ≥ N`, with `N` recorded per pair.
///
/// A scanned tail is reported as certified up to the horizon, and only when
/// it covers at least the second half of the scan.
pub fn check_delta_tm(sys: &SystemDef, cfg: &CheckConfig) -> Result<Verdict> {
    run_pairs(sys, cfg, &cfg.delta, Mode::Eventually)
}

/// The δ-mixing check run at the single uniform radius `η = cfg.eta`.
pub fn check_ufb(sys: &SystemDef, cfg: &CheckConfig) -> Result<Verdict> {
    let eta = cfg
        .eta
        .clone()
        .ok_or_else(|| Error::Config("the uniform check needs eta".into()))?;
    let mut verdict = run_pairs(sys, cfg, &eta, Mode::Eventually)?;
    if verdict.is_certified() {
        let t = &cfg.delta - &cfg.guard;
        for w in &verdict.witnesses {
            assert!(
                verify_pair_witness(sys, &cfg.pair_cover, w, &t)?,
                "eta witness must also serve delta"
            );
        }
    }
    verdict.note = format!("eta = {}: {}", exact::show(&eta), verdict.note);
    Ok(verdict)
}

/// Replays a pair witness: `x ∈ U` and `dist(fⁿx, V) < t`, exactly.
pub fn verify_pair_witness(sys: &SystemDef, cover: &[(OpenRegion, OpenRegion)], w: &Witness, t: &Q) -> Result<bool> {
    let (u, v) = cover
        .get(w.pair)
        .ok_or_else(|| Error::Config(format!("no pair {} in the cover", w.pair)))?;
    let space = sys.space();
    if !u.contains(&space, &w.point)? {
        return Ok(false);
    }
    let image = iterate(sys, &w.point, w.n)?;
    region_within(&space, &image, v, t)
}

fn run_pairs(sys: &SystemDef, cfg: &CheckConfig, radius: &Q, mode: Mode) -> Result<Verdict> {
    cfg.validate()?;
    sys.validate()?;
    let space = sys.space();
    for (u, v) in &cfg.pair_cover {
        u.check_space(&space)?;
        v.check_space(&space)?;
    }
    let outcomes: Vec<PairOutcome> = cfg
        .pair_cover
        .par_iter()
        .enumerate()
        .map(|(idx, (u, v))| {
            let ctx = PairCtx {
                sys,
                space,
                cfg,
                idx,
                u,
                v,
                radius,
                t: radius - &cfg.guard,
                mode,
            };
            check_pair(&ctx)
        })
        .collect::<Result<_>>()?;
    Ok(aggregate(outcomes, cfg, mode))
}

fn aggregate(outcomes: Vec<PairOutcome>, cfg: &CheckConfig, mode: Mode) -> Verdict {
    let total = outcomes.len();
    let count = |s: Status| outcomes.iter().filter(|o| o.status == s).count();
    let (certified, refuted) = (count(Status::Certified), count(Status::Refuted));
    let mut engines: Vec<&str> = outcomes.iter().map(|o| o.engine).collect();
    engines.sort_unstable();
    engines.dedup();

    let status = if refuted > 0 {
        Status::Refuted
    } else if certified == total {
        Status::Certified
    } else {
        Status::Inconclusive
    };
    let scope = match status {
        Status::Inconclusive => Scope::UpToHorizon { horizon: cfg.horizon },
        s => weakest(outcomes.iter().filter(|o| o.status == s).map(|o| &o.scope)),
    };
    let mut note = format!(
        "{certified} of {total} pairs certified, {refuted} refuted; engines: {}",
        engines.join(", ")
    );
    if status == Status::Certified && mode == Mode::Eventually && matches!(scope, Scope::UpToHorizon { .. }) {
        note.push_str("; certified up to horizon: the tail n >= N was checked through the horizon only");
    }

    let thresholds = if mode == Mode::Eventually {
        outcomes
            .iter()
            .enumerate()
            .filter_map(|(pair, o)| o.start.map(|start| PairThreshold { pair, start }))
            .collect()
    } else {
        Vec::new()
    };
    let witnesses = outcomes.iter().filter_map(|o| o.witness.clone()).collect();
    let failures = outcomes
        .into_iter()
        .filter(|o| match status {
            Status::Refuted => o.status == Status::Refuted,
            _ => o.status != Status::Certified,
        })
        .filter_map(|o| o.failure)
        .collect();
    Verdict::new(status, scope, note)
        .with_witnesses(witnesses)
        .with_failures(failures)
        .with_thresholds(thresholds)
}

fn check_pair(ctx: &PairCtx) -> Result<PairOutcome> {
    if ctx.space.diameter().is_some() && ctx.t.is_positive() {
        let whole = neighborhood_is_whole_space(&ctx.space, ctx.v, &ctx.t)?;
        if whole.is_certified() {
            let x = ctx.u.balls()[0].center.clone();
            return Ok(PairOutcome::certified(
                Scope::Analytic,
                ctx.witness(0, x)?,
                0,
                "whole-space neighbourhood",
            ));
        }
    }
    match ctx.sys {
        SystemDef::Identity { space } if space.kind == SpaceKind::Circle => arc_engine(ctx, None),
        SystemDef::Identity { .. } => identity_engine(ctx),
        SystemDef::Rotation { angle } => arc_engine(ctx, Some(angle)),
        _ => shift_engine(ctx),
    }
}

/// Pairs `(i, j, A_ij)` with `t ∈ A_ij ⇔ (U_i + t) ∩ W_j ≠ ∅`.
struct Windows {
    u_arcs: Vec<Arc>,
    targets: Vec<Arc>,
    windows: Vec<(usize, usize, Arc)>,
}

impl Windows {
    fn new(u: &OpenRegion, v: &OpenRegion, r: &Q) -> Self {
        let u_arcs: Vec<Arc> = u.balls().iter().map(ball_arc).collect();
        let targets: Vec<Arc> = v.balls().iter().map(|b| delta_fatten(&ball_arc(b), r)).collect();
        let mut windows = Vec::new();
        for (i, ua) in u_arcs.iter().enumerate() {
            for (j, w) in targets.iter().enumerate() {
                windows.push((i, j, window_arc(ua, w)));
            }
        }
        Self {
            u_arcs,
            targets,
            windows,
        }
    }

    fn hit(&self, p: &Q) -> Option<(usize, usize)> {
        self.windows
            .iter()
            .find(|(_, _, a)| a.contains(p))
            .map(|(i, j, _)| (*i, *j))
    }

    fn covers(&self) -> bool {
        let arcs: Vec<Arc> = self.windows.iter().map(|w| w.2.clone()).collect();
        arcs_cover_circle(&arcs)
    }

    /// A point of `U` carried into the target by the rotation `p`.
    fn preimage(&self, p: &Q) -> Option<Pt> {
        let (i, j) = self.hit(p)?;
        let y = common_point(&self.u_arcs[i].translate(p), &self.targets[j])?;
        Some(Pt::circle(y - p))
    }
}

fn arc_engine(ctx: &PairCtx, angle: Option<&RotationAngle>) -> Result<PairOutcome> {
    let win_t = Windows::new(ctx.u, ctx.v, &ctx.t);
    let win_d = Windows::new(ctx.u, ctx.v, ctx.radius);
    let center = ctx.u.balls()[0].center.clone();
    let center_dist = dist_to_region(&ctx.space, &center, ctx.v)?;

    let Some(angle) = angle else {
        // The identity: every n behaves like n = 0.
        let zero = Q::zero();
        if let Some(x) = win_t.preimage(&zero) {
            return Ok(PairOutcome::certified(
                Scope::Analytic,
                ctx.witness(0, x)?,
                0,
                "circle arcs",
            ));
        }
        if win_d.hit(&zero).is_none() {
            let f = ctx.failure(
                Vec::new(),
                Some(center),
                Some(center_dist),
                "f^n(U) = U misses B_delta(V) for every n",
            );
            return Ok(PairOutcome::refuted(Scope::Analytic, f, "circle arcs"));
        }
        let f = ctx.failure(Vec::new(), Some(center), Some(center_dist), "within the guard band");
        return Ok(PairOutcome::inconclusive(f, "circle arcs"));
    };

    let positions = || std::iter::once(Q::zero()).chain(OrbitPositions::new(angle));
    let period = angle
        .rational
        .then(|| angle.denominator())
        .filter(|q| *q <= ctx.cfg.horizon + 1);
    let horizon = ctx.cfg.horizon;

    if ctx.mode == Mode::Exists {
        for (n, p) in (0..=horizon).zip(positions()) {
            if let Some(y) = win_t.preimage(&p) {
                return Ok(PairOutcome::certified(
                    angle.scope(),
                    ctx.witness(n, y)?,
                    n,
                    "rotation arcs",
                ));
            }
        }
        if let Some(q) = period {
            if positions().take(q as usize).all(|p| win_d.hit(&p).is_none()) {
                let f = ctx.failure(
                    (0..q.min(MAX_LISTED_TIMES as u64)).collect(),
                    Some(center),
                    Some(center_dist),
                    format!("no time in a full period {q} meets B_delta(V)"),
                );
                return Ok(PairOutcome::refuted(Scope::Analytic, f, "rotation arcs"));
            }
        }
        let f = ctx.failure(Vec::new(), Some(center), Some(center_dist), "no hit within the horizon");
        return Ok(PairOutcome::inconclusive(f, "rotation arcs"));
    }

    if win_t.covers() {
        let x = win_t.preimage(&Q::zero()).expect("covering windows contain 0");
        return Ok(PairOutcome::certified(
            Scope::Analytic,
            ctx.witness(0, x)?,
            0,
            "rotation arcs",
        ));
    }
    if let Some(q) = period {
        let first_miss_t = positions().take(q as usize).position(|p| win_t.hit(&p).is_none());
        let Some(_) = first_miss_t else {
            let x = win_t.preimage(&Q::zero()).expect("every position hits");
            return Ok(PairOutcome::certified(
                Scope::Analytic,
                ctx.witness(0, x)?,
                0,
                "rotation arcs",
            ));
        };
        if let Some(n) = positions().take(q as usize).position(|p| win_d.hit(&p).is_none()) {
            let n = n as u64;
            let f = ctx.failure(
                (0..MAX_LISTED_TIMES as u64)
                    .map(|k| n + k * q)
                    .take_while(|m| *m <= horizon.max(n))
                    .collect(),
                Some(center),
                Some(center_dist),
                format!("periodic orbit of period {q} leaves the window at n = {n} and every n + kq"),
            );
            return Ok(PairOutcome::refuted(Scope::Analytic, f, "rotation arcs"));
        }
        let f = ctx.failure(Vec::new(), Some(center), Some(center_dist), "within the guard band");
        return Ok(PairOutcome::inconclusive(f, "rotation arcs"));
    }
    if angle.rational {
        let f = ctx.failure(
            Vec::new(),
            Some(center),
            Some(center_dist),
            "period exceeds the horizon",
        );
        return Ok(PairOutcome::inconclusive(f, "rotation arcs"));
    }

    // An uncovered gap with interior is visited infinitely often by an
    // irrational orbit; windows widened by the guard test for interior.
    let win_plus = Windows::new(ctx.u, ctx.v, &(ctx.radius + &ctx.cfg.guard));
    if win_plus.covers() {
        let f = ctx.failure(
            Vec::new(),
            Some(center),
            Some(center_dist),
            "uncovered set has empty interior",
        );
        return Ok(PairOutcome::inconclusive(f, "rotation arcs"));
    }
    let limit = horizon.saturating_add(angle.denominator());
    let mut failing = Vec::new();
    let mut count = 0u64;
    for (n, p) in (0..=limit).zip(positions()) {
        if n > horizon && count > 0 {
            break;
        }
        if win_d.hit(&p).is_none() {
            count += 1;
            if failing.len() < MAX_LISTED_TIMES {
                failing.push(n);
            }
        }
    }
    if failing.is_empty() {
        let f = ctx.failure(Vec::new(), Some(center), Some(center_dist), "no failing time found");
        return Ok(PairOutcome::inconclusive(f, "rotation arcs"));
    }
    let f = ctx.failure(
        failing,
        Some(center),
        Some(center_dist),
        format!("{count} scanned times have n·alpha outside every window; the gap has interior, so failures recur"),
    );
    Ok(PairOutcome::refuted(angle.scope(), f, "rotation arcs"))
}

/// Euclidean length of `b − a` on the vector carriers, uncapped.
fn base_len(a: &Pt, b: &Pt) -> f64 {
    match (a, b) {
        (Pt::Plane { x: ax, y: ay }, Pt::Plane { x: bx, y: by }) => {
            let dx = bx - ax;
            let dy = by - ay;
            exact::sqrt_f64(&(&dx * &dx + &dy * &dy))
        }
        (Pt::Seq(x), Pt::Seq(y)) => exact::sqrt_f64(&x.dist_sq(y)),
        _ => f64::NAN,
    }
}

/// Centers of `U` and points of `U` pushed toward each ball of `V`.
fn toward_points(space: &Space, u: &OpenRegion, v: &OpenRegion) -> Result<Vec<Pt>> {
    let mut out: Vec<Pt> = u.balls().iter().map(|b| b.center.clone()).collect();
    for bu in u.balls() {
        for bv in v.balls() {
            let len = base_len(&bu.center, &bv.center);
            if len.is_nan() || len <= 0.0 {
                continue;
            }
            let s = (exact::to_f64(&bu.radius) / len) * (1.0 - 1e-6);
            let x = if s >= 1.0 {
                bv.center.clone()
            } else {
                bu.center.lerp(&bv.center, &exact::rat(s)).expect("vector carrier")
            };
            if u.contains(space, &x)? {
                out.push(x);
            }
        }
    }
    Ok(out)
}

fn identity_engine(ctx: &PairCtx) -> Result<PairOutcome> {
    let candidates = toward_points(&ctx.space, ctx.u, ctx.v)?;
    let mut best: Option<(f64, Pt)> = None;
    for x in candidates {
        if region_within(&ctx.space, &x, ctx.v, &ctx.t)? {
            return Ok(PairOutcome::certified(
                Scope::Analytic,
                ctx.witness(0, x)?,
                0,
                "identity geometry",
            ));
        }
        let d = dist_to_region(&ctx.space, &x, ctx.v)?;
        if best.as_ref().is_none_or(|(b, _)| d < *b) {
            best = Some((d, x));
        }
    }
    let (d, x) = best.expect("at least one center");
    if regions_gap_at_least(&ctx.space, ctx.u, ctx.v, ctx.radius) {
        let f = ctx.failure(
            Vec::new(),
            Some(x),
            Some(d),
            "dist(U, V) >= delta and f^n(U) = U for every n",
        );
        return Ok(PairOutcome::refuted(Scope::Analytic, f, "identity geometry"));
    }
    let f = ctx.failure(Vec::new(), Some(x), Some(d), "closest sampled point misses");
    Ok(PairOutcome::inconclusive(f, "identity geometry"))
}

/// Exact test `sqrt(a) >= sqrt(b) + k` for `k >= 0`.
fn root_gap(a: &Q, b: &Q, k: &Q) -> bool {
    let lhs = a - b - k * k;
    !lhs.is_negative() && &lhs * &lhs >= exact::int(4) * k * k * b
}

const MAX_EXPANDING_STEPS: u64 = 64;

/// Exact test that no iterate of `B(c_u, r_u)` comes within `delta` of
/// `B(c_v, r_v)` under a bilateral shift with `1 <= m <= |a_i| <= M`.
///
/// From some `n₀` on `‖Tⁿx‖ >= mⁿ(‖c_u‖ − r_u)` exceeds `‖c_v‖ + r_v + delta`;
/// for `n < n₀` the image lies in `B(Tⁿc_u, Mⁿr_u)`, compared directly.
fn expanding_separated(w: &WeightSeq, cu: &SparseVec, ru: &Q, cv: &SparseVec, rv: &Q, delta: &Q) -> bool {
    let (m, big_m) = (w.lower_bound(), w.bound());
    let (a, b) = (cu.norm_sq(), cv.norm_sq());
    let q = rv + delta;
    let mut image = cu.clone();
    let (mut sm, mut sb) = (Q::one(), Q::one());
    for _ in 0..=MAX_EXPANDING_STEPS {
        if root_gap(&(&sm * &sm * &a), &b, &(&sm * ru + &q)) {
            return true;
        }
        if !exact::sqrt_ge(&image.dist_sq(cv), &(&sb * ru + &q)) {
            return false;
        }
        image = shift_once(&image, w, Laterality::Bilateral);
        sm *= &m;
        sb *= &big_m;
    }
    false
}

struct Candidate {
    x: SparseVec,
    image: Option<SparseVec>,
}

/// Constructive candidate `x = c_u + S_n c_v` with `Tⁿ x = Tⁿ c_u + c_v`.
struct Bridge {
    cu: SparseVec,
    cu_image: Option<SparseVec>,
    cv: SparseVec,
    s: Option<SparseVec>,
}

fn too_big(v: &SparseVec) -> bool {
    v.max_bit_size() > MAX_COEFF_BITS
}

fn shift_engine(ctx: &PairCtx) -> Result<PairOutcome> {
    let (w, lat): (WeightSeq, Laterality) = ctx.sys.shift_weights().expect("shift system");
    let seqs = |r: &OpenRegion| -> Vec<(SparseVec, Q)> {
        r.balls()
            .iter()
            .map(|b| (b.center.as_seq().expect("sequence ball").clone(), b.radius.clone()))
            .collect()
    };
    let (ub, vb) = (seqs(ctx.u), seqs(ctx.v));
    let center = ctx.u.balls()[0].center.clone();

    if lat == Laterality::Bilateral
        && w.lower_bound() >= Q::one()
        && ub.iter().all(|(cu, ru)| {
            vb.iter()
                .all(|(cv, rv)| expanding_separated(&w, cu, ru, cv, rv, ctx.radius))
        })
    {
        let d = dist_to_region(&ctx.space, &center, ctx.v)?;
        let f = ctx.failure(
            Vec::new(),
            Some(center),
            Some(d),
            "all weights have modulus >= 1: early iterates of U are separated from V exactly and later ones by norm growth",
        );
        return Ok(PairOutcome::refuted(Scope::Analytic, f, "expanding shift"));
    }

    let seed = ctx
        .cfg
        .seed
        .wrapping_add((ctx.idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut samples: Vec<Candidate> = sample_region(&ctx.space, ctx.u, ctx.cfg.samples_per_region, seed)?
        .into_iter()
        .map(|p| {
            let x = p.as_seq().expect("sequence point").clone();
            Candidate {
                image: Some(x.clone()),
                x,
            }
        })
        .collect();
    let mut bridges: Vec<Bridge> = ub
        .iter()
        .flat_map(|(cu, _)| {
            vb.iter().map(move |(cv, _)| Bridge {
                cu: cu.clone(),
                cu_image: Some(cu.clone()),
                cv: cv.clone(),
                s: Some(cv.clone()),
            })
        })
        .collect();

    let horizon = ctx.cfg.horizon;
    let mut pending: Option<(u64, SparseVec)> = None;
    let mut misses: Vec<u64> = Vec::new();
    let mut miss_count = 0u64;
    let mut closest: Option<(f64, u64, SparseVec)> = None;

    for n in 0..=horizon {
        let mut hit: Option<SparseVec> = None;
        for c in &samples {
            if let Some(img) = &c.image {
                if region_within(&ctx.space, &Pt::Seq(img.clone()), ctx.v, &ctx.t)? {
                    hit = Some(c.x.clone());
                    break;
                }
            }
        }
        if hit.is_none() {
            for b in &bridges {
                let (Some(img), Some(s)) = (&b.cu_image, &b.s) else {
                    continue;
                };
                let x = Pt::Seq(&b.cu + s);
                if ctx.u.contains(&ctx.space, &x)? && region_within(&ctx.space, &Pt::Seq(img + &b.cv), ctx.v, &ctx.t)? {
                    hit = x.as_seq().cloned();
                    break;
                }
            }
        }

        match hit {
            Some(x) => {
                if ctx.mode == Mode::Exists {
                    let wit = ctx.witness(n, Pt::Seq(x))?;
                    return Ok(PairOutcome::certified(Scope::Analytic, wit, n, "shift witnesses"));
                }
                if pending.is_none() {
                    pending = Some((n, x));
                }
            }
            None => {
                pending = None;
                miss_count += 1;
                if misses.len() == MAX_LISTED_TIMES {
                    misses.remove(0);
                }
                misses.push(n);
                for c in &samples {
                    if let Some(img) = &c.image {
                        let d = dist_to_region(&ctx.space, &Pt::Seq(img.clone()), ctx.v)?;
                        if closest.as_ref().is_none_or(|(b, _, _)| d < *b) {
                            closest = Some((d, n, c.x.clone()));
                        }
                    }
                }
            }
        }

        if n == horizon {
            break;
        }
        for c in &mut samples {
            c.image = c
                .image
                .take()
                .map(|img| shift_once(&img, &w, lat))
                .filter(|i| !too_big(i));
        }
        for b in &mut bridges {
            b.cu_image = b
                .cu_image
                .take()
                .map(|img| shift_once(&img, &w, lat))
                .filter(|i| !too_big(i));
            b.s = match b.s.take() {
                Some(s) => Some(right_inverse(&w, lat, 1, &s)?).filter(|s| !too_big(s)),
                None => None,
            };
        }
    }

    if ctx.mode == Mode::Eventually {
        if let Some((start, x)) = pending {
            if start <= horizon / 2 {
                let wit = ctx.witness(start, Pt::Seq(x))?;
                return Ok(PairOutcome::certified(
                    Scope::UpToHorizon { horizon },
                    wit,
                    start,
                    "shift witnesses",
                ));
            }
        }
    }
    let (point, distance) = match closest {
        Some((d, _, x)) => (Some(Pt::Seq(x)), Some(d)),
        None => (Some(center), None),
    };
    let reason = match ctx.mode {
        Mode::Exists => "no sampled or constructed point reaches B_delta(V) within the horizon".to_string(),
        Mode::Eventually => format!("{miss_count} scanned times without a witness; the last are listed"),
    };
    let f = ctx.failure(misses, point, distance, reason);
    Ok(PairOutcome::inconclusive(f, "shift witnesses"))
}

/// Per-target outcome of the transitive-point scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetRecord {
    pub target: usize,
    /// Time of the smallest distance seen.
    pub best_n: u64,
    pub best_distance: f64,
    /// Whether `dist(f^{best_n} x, V) < δ` holds exactly.
    pub hit: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitivePointReport {
    pub verdict: Verdict,
    pub targets: Vec<TargetRecord>,
}

/// Number of steps after which the orbit of `x` is known to repeat, when the
/// scan up to `horizon` is exhaustive.
fn orbit_exhausted(sys: &SystemDef, x: &Pt, horizon: u64) -> bool {
    match sys {
        SystemDef::Identity { .. } => true,
        SystemDef::Rotation { angle } => angle.rational && angle.denominator() <= horizon + 1,
        SystemDef::UnilateralShift { .. } | SystemDef::RolewiczLambdaB { .. } => x
            .as_seq()
            .and_then(SparseVec::max_index)
            .is_none_or(|m| (m as u64) < horizon),
        SystemDef::BilateralShift { .. } => false,
    }
}

/// Whether the orbit of `x` comes within `δ` of every target by `horizon`.
pub fn check_delta_transitive_point(
    sys: &SystemDef,
    x: &Pt,
    targets: &[OpenRegion],
    delta: &Q,
    horizon: u64,
) -> Result<TransitivePointReport> {
    if targets.is_empty() {
        return Err(Error::Config("no targets".into()));
    }
    if !delta.is_positive() {
        return Err(Error::Domain("delta must be positive".into()));
    }
    sys.validate()?;
    let space = sys.space();
    space.check(x)?;
    for t in targets {
        t.check_space(&space)?;
    }
    let delta_f = exact::to_f64(delta);
    let mut best: Vec<(u64, f64, Pt)> = vec![(0, f64::INFINITY, x.clone()); targets.len()];
    let mut first_hit: Vec<Option<(u64, Pt)>> = vec![None; targets.len()];

    let mut visit = |n: u64, p: &Pt, dists: &[f64]| -> Result<()> {
        for (i, d) in dists.iter().enumerate() {
            if *d < best[i].1 {
                best[i] = (n, *d, p.clone());
            }
            if first_hit[i].is_none() && *d < delta_f + 1e-9 && region_within(&space, p, &targets[i], delta)? {
                first_hit[i] = Some((n, p.clone()));
            }
        }
        Ok(())
    };

    match sys {
        SystemDef::Rotation { angle } => {
            // Float distances to arcs, with exact confirmation near δ.
            let x0 = x.as_circle().expect("circle point").clone();
            let balls: Vec<(f64, f64)> = targets
                .iter()
                .flat_map(|t| t.balls().iter())
                .map(|b| {
                    (
                        exact::to_f64(b.center.as_circle().expect("circle")),
                        exact::to_f64(&b.radius),
                    )
                })
                .collect();
            let per_target: Vec<usize> = targets.iter().map(|t| t.balls().len()).collect();
            let positions = std::iter::once(Q::zero()).chain(OrbitPositions::new(angle));
            let mut dists = vec![0.0; targets.len()];
            for (n, pos) in (0..=horizon).zip(positions) {
                let p = Pt::circle(&x0 + pos);
                let pf = exact::to_f64(p.as_circle().expect("circle"));
                let mut k = 0;
                for (i, count) in per_target.iter().enumerate() {
                    dists[i] = balls[k..k + count]
                        .iter()
                        .map(|(c, r)| {
                            let g = (pf - c).rem_euclid(1.0);
                            (g.min(1.0 - g) - r).max(0.0)
                        })
                        .fold(f64::INFINITY, f64::min);
                    k += count;
                }
                visit(n, &p, &dists)?;
            }
        }
        _ => {
            let mut p = x.clone();
            let stop = match sys {
                SystemDef::Identity { .. } => 0,
                _ => horizon,
            };
            for n in 0..=stop {
                let dists: Vec<f64> = targets
                    .iter()
                    .map(|t| dist_to_region(&space, &p, t))
                    .collect::<Result<_>>()?;
                visit(n, &p, &dists)?;
                if n < stop {
                    p = apply(sys, &p)?;
                    if p.as_seq().is_some_and(too_big) {
                        return Err(Error::Overflow { n: n + 1 });
                    }
                }
            }
        }
    }

    let mut records = Vec::with_capacity(targets.len());
    let mut witnesses = Vec::new();
    let mut failures = Vec::new();
    for (i, ((bn, bd, bp), fh)) in best.into_iter().zip(first_hit).enumerate() {
        let best_hits = region_within(&space, &bp, &targets[i], delta)?;
        let hit = best_hits || fh.is_some();
        records.push(TargetRecord {
            target: i,
            best_n: bn,
            best_distance: bd,
            hit: best_hits,
        });
        if hit {
            let (n, p) = if best_hits { (bn, bp) } else { fh.expect("hit") };
            let distance = dist_to_region(&space, &p, &targets[i])?;
            witnesses.push(Witness {
                pair: i,
                n,
                point: x.clone(),
                distance,
            });
        } else {
            failures.push(Failure {
                pair: i,
                times: Vec::new(),
                horizon,
                point: Some(bp),
                distance: Some(bd),
                reason: format!("closest approach at n = {bn}"),
            });
        }
    }
    let hits = witnesses.len();
    let verdict = if failures.is_empty() {
        let scope = sys.rotation_angle().map_or(Scope::Analytic, RotationAngle::scope);
        Verdict::new(
            Status::Certified,
            scope,
            format!("orbit meets B_delta of all {hits} targets"),
        )
    } else if orbit_exhausted(sys, x, horizon) {
        Verdict::new(
            Status::Refuted,
            Scope::Analytic,
            format!("the scan covers the whole orbit and misses {} targets", failures.len()),
        )
    } else {
        Verdict::new(
            Status::Inconclusive,
            Scope::UpToHorizon { horizon },
            format!("{} targets missed within the horizon", failures.len()),
        )
    };
    Ok(TransitivePointReport {
        verdict: verdict.with_witnesses(witnesses).with_failures(failures),
        targets: records,
    })
}

/// The three pair checkers on identical inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImplicationReport {
    pub ufb: Verdict,
    pub tm: Verdict,
    pub tt: Verdict,
    /// Broken implications; nonempty means the checkers are wrong.
    pub violations: Vec<String>,
}

impl ImplicationReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Runs UFB, δ-TM and δ-TT and checks `UFB ⇒ TM ⇒ TT` on the verdicts.
pub fn run_implication_harness(sys: &SystemDef, cfg: &CheckConfig) -> Result<ImplicationReport> {
    if cfg.eta.is_none() {
        return Err(Error::Config("the implication harness needs eta".into()));
    }
    let ufb = check_ufb(sys, cfg)?;
    let tm = check_delta_tm(sys, cfg)?;
    let tt = check_delta_tt(sys, cfg)?;
    let mut violations = Vec::new();
    if ufb.is_certified() && !tm.is_certified() {
        violations.push(format!("UFB certified but delta-TM is {:?}", tm.status));
    }
    if tm.is_certified() && !tt.is_certified() {
        violations.push(format!("delta-TM certified but delta-TT is {:?}", tt.status));
    }
    if tt.is_refuted() && (tm.is_certified() || ufb.is_certified()) {
        violations.push("delta-TT refuted under a certified stronger notion".into());
    }
    let t = &cfg.delta - &cfg.guard;
    for w in ufb.witnesses.iter().filter(|_| ufb.is_certified()) {
        if !verify_pair_witness(sys, &cfg.pair_cover, w, &t)? {
            violations.push(format!("UFB witness for pair {} fails at delta", w.pair));
        }
    }
    Ok(ImplicationReport {
        ufb,
        tm,
        tt,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat, ratio};
    use crate::systems::WeightGen;

    fn plane_ball(x: f64, y: f64, r: f64) -> OpenRegion {
        OpenRegion::ball(Pt::plane(rat(x), rat(y)), rat(r)).unwrap()
    }

    fn arc_ball(c: f64, r: f64) -> OpenRegion {
        OpenRegion::ball(Pt::circle(rat(c)), rat(r)).unwrap()
    }

    fn seq_ball(pairs: &[(i64, i64)], r: f64) -> OpenRegion {
        let v = SparseVec::from_pairs(pairs.iter().map(|&(i, c)| (i, int(c))));
        OpenRegion::ball(Pt::Seq(v), rat(r)).unwrap()
    }

    #[test]
    fn config_validation() {
        let cover = default_cover(&Space::capped_plane());
        assert_eq!(cover.len(), 64);
        let cfg = CheckConfig::new(rat(0.5), cover.clone());
        assert!(cfg.validate().is_ok());
        assert!(cfg.clone().with_eta(rat(0.5)).validate().is_err());
        assert!(cfg.clone().with_eta(rat(0.6)).validate().is_err());
        assert!(cfg.clone().with_horizon(0).validate().is_err());
        assert!(CheckConfig::new(rat(0.5), Vec::new()).validate().is_err());
        let sys = SystemDef::identity(Space::capped_plane());
        assert!(check_ufb(&sys, &cfg).is_err());
        assert!(check_ufb(&sys, &cfg.clone().with_eta(rat(0.7))).is_err());
    }

    #[test]
    fn identity_capped_large_delta() {
        let sys = SystemDef::identity(Space::capped_plane());
        let cfg = CheckConfig::new(rat(1.2), default_cover(&Space::capped_plane())).with_eta(rat(1.1));
        let report = run_implication_harness(&sys, &cfg).unwrap();
        for v in [&report.ufb, &report.tm, &report.tt] {
            assert!(v.is_certified());
            assert_eq!(v.scope, Scope::Analytic);
            assert_eq!(v.witnesses.len(), 64);
            assert!(v.witnesses.iter().all(|w| w.n == 0));
        }
        assert!(report.holds());
    }

    #[test]
    fn identity_capped_separated_balls() {
        let sys = SystemDef::identity(Space::capped_plane());
        let cover = vec![(plane_ball(0.0, 0.0, 0.05), plane_ball(0.5, 0.0, 0.05))];
        let cfg = CheckConfig::new(rat(0.1), cover);
        let v = check_delta_tt(&sys, &cfg).unwrap();
        assert!(v.is_refuted());
        assert_eq!(v.scope, Scope::Analytic);
        // Overlapping δ-neighbourhood: the toward point is a witness.
        let cover = vec![(plane_ball(0.0, 0.0, 0.05), plane_ball(0.18, 0.0, 0.05))];
        let v = check_delta_tt(&sys, &CheckConfig::new(rat(0.1), cover)).unwrap();
        assert!(v.is_certified());
    }

    #[test]
    fn rotation_tt_tm_and_uniform() {
        let sys = SystemDef::rotation(RotationAngle::golden());
        let regions = circle_cover(4);
        let cfg = CheckConfig::new(rat(0.05), all_pairs(&regions)).with_horizon(10_000);
        let tt = check_delta_tt(&sys, &cfg).unwrap();
        assert!(tt.is_certified());
        for w in &tt.witnesses {
            assert!(verify_pair_witness(&sys, &cfg.pair_cover, w, &(&cfg.delta - &cfg.guard)).unwrap());
        }

        let narrow = vec![(arc_ball(0.1, 0.025), arc_ball(0.6, 0.025))];
        let cfg = CheckConfig::new(rat(0.1), narrow.clone()).with_horizon(1000);
        let tm = check_delta_tm(&sys, &cfg).unwrap();
        assert!(tm.is_refuted());
        assert!(!tm.failures[0].times.is_empty());

        let half = CheckConfig::new(ratio(1, 2), narrow).with_eta(rat(0.4));
        let tm = check_delta_tm(&sys, &half).unwrap();
        assert!(tm.is_certified());
        assert_eq!(tm.scope, Scope::Analytic);
        assert!(check_ufb(&sys, &half).unwrap().is_refuted());
    }

    #[test]
    fn rational_rotation_is_settled_by_its_period() {
        let sys = SystemDef::rotation(RotationAngle::rational(ratio(1, 4)).unwrap());
        let cover = vec![(arc_ball(0.1, 0.01), arc_ball(0.2, 0.01))];
        let cfg = CheckConfig::new(rat(0.02), cover);
        let v = check_delta_tt(&sys, &cfg).unwrap();
        assert!(v.is_refuted());
        let cover = vec![(arc_ball(0.1, 0.01), arc_ball(0.35, 0.01))];
        let cfg = CheckConfig::new(rat(0.02), cover);
        assert!(check_delta_tt(&sys, &cfg).unwrap().is_certified());
        assert!(check_delta_tm(&sys, &cfg).unwrap().is_refuted());
    }

    #[test]
    fn circle_identity() {
        let sys = SystemDef::identity(Space::circle());
        let cover = vec![(arc_ball(0.1, 0.02), arc_ball(0.9, 0.02))];
        assert!(check_delta_tt(&sys, &CheckConfig::new(rat(0.2), cover.clone()))
            .unwrap()
            .is_certified());
        assert!(check_delta_tm(&sys, &CheckConfig::new(rat(0.1), cover))
            .unwrap()
            .is_refuted());
    }

    #[test]
    fn unilateral_shift_mixing_up_to_horizon() {
        let sys = SystemDef::unilateral(WeightSeq::constant(int(2))).unwrap();
        let cover = vec![
            (seq_ball(&[(0, 1)], 0.1), seq_ball(&[(1, 1)], 0.1)),
            (seq_ball(&[(2, -1)], 0.1), seq_ball(&[(0, 3)], 0.1)),
        ];
        let cfg = CheckConfig::new(rat(0.1), cover).with_horizon(60).with_samples(4);
        let tm = check_delta_tm(&sys, &cfg).unwrap();
        assert!(tm.is_certified(), "{tm:?}");
        assert_eq!(tm.scope, Scope::UpToHorizon { horizon: 60 });
        assert_eq!(tm.thresholds.len(), 2);
        for w in &tm.witnesses {
            assert!(w.distance < 0.1 - 1e-9);
            assert!(verify_pair_witness(&sys, &cfg.pair_cover, w, &(&cfg.delta - &cfg.guard)).unwrap());
        }
        assert!(check_delta_tt(&sys, &cfg).unwrap().is_certified());
    }

    #[test]
    fn expanding_bilateral_shift_is_refuted() {
        let sys = SystemDef::bilateral(WeightSeq::constant(int(2))).unwrap();
        let cover = vec![(seq_ball(&[(0, 1)], 0.1), seq_ball(&[], 0.1))];
        let cfg = CheckConfig::new(rat(0.1), cover.clone()).with_horizon(20);
        assert!(check_delta_tt(&sys, &cfg).unwrap().is_refuted());
        // Equal-norm centers: separated early by distance, later by growth.
        let cfg = CheckConfig::new(rat(0.1), default_cover(&sys.space())).with_horizon(20);
        let v = check_delta_tt(&sys, &cfg).unwrap();
        assert!(v.is_refuted());
        assert!(v.note.contains("8 of 64 pairs certified, 56 refuted"), "{}", v.note);
        // The contracting backward half makes it mixing instead.
        let sys = SystemDef::bilateral(WeightSeq::two_sided(
            WeightGen::Constant { c: int(2) },
            WeightGen::Constant { c: ratio(1, 2) },
        ))
        .unwrap();
        let cfg = CheckConfig::new(rat(0.1), cover).with_horizon(40).with_samples(2);
        assert!(check_delta_tm(&sys, &cfg).unwrap().is_certified());
    }

    #[test]
    fn transitive_points() {
        let rot = SystemDef::rotation(RotationAngle::golden());
        let targets = circle_cover(32);
        let r = check_delta_transitive_point(&rot, &Pt::circle(int(0)), &targets, &rat(0.05), 10_000).unwrap();
        assert!(r.verdict.is_certified());
        assert!(r.verdict.witnesses.iter().all(|w| w.distance < 0.05));

        let id = SystemDef::identity(Space::capped_plane());
        let far = vec![plane_ball(5.0, 5.0, 0.1)];
        let r = check_delta_transitive_point(&id, &Pt::plane(int(0), int(0)), &far, &rat(0.1), 100).unwrap();
        assert!(r.verdict.is_refuted());

        let shift = SystemDef::lambda_b(int(2)).unwrap();
        let x = Pt::Seq(SparseVec::basis(3));
        let targets = vec![seq_ball(&[(0, 8)], 0.1), seq_ball(&[(0, 1)], 0.1)];
        let r = check_delta_transitive_point(&shift, &x, &targets, &rat(0.1), 10).unwrap();
        assert!(r.verdict.is_refuted());
        assert!(r.targets[0].hit);
        assert_eq!(r.targets[0].best_n, 3);
    }

    #[test]
    fn witnesses_survive_larger_delta() {
        let sys = SystemDef::rotation(RotationAngle::golden());
        let cfg = CheckConfig::new(rat(0.02), all_pairs(&circle_cover(6))).with_horizon(5000);
        let small = check_delta_tt(&sys, &cfg).unwrap();
        assert!(small.is_certified());
        for delta in [rat(0.05), rat(0.3), rat(0.6)] {
            let t = &delta - &cfg.guard;
            for w in &small.witnesses {
                assert!(verify_pair_witness(&sys, &cfg.pair_cover, w, &t).unwrap());
            }
            let bigger = CheckConfig { delta, ..cfg.clone() };
            assert!(check_delta_tt(&sys, &bigger).unwrap().is_certified());
        }
    }
}
