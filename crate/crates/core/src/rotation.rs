//! Exact arc arithmetic on `ℝ/ℤ` and the irrational-rotation counterexamples.
//!
//! A rotation by an irrational angle is δ-transitive for every δ but not
//! δ-mixing for δ < 1/2: the set of times `n` with `fⁿ(U) ∩ B_δ(V) ≠ ∅` is
//! exactly `{n : nα mod 1 ∈ A}` for an arc `A` of length `|U| + |V| + 2δ`,
//! and the orbit of `0` leaves any proper arc infinitely often. Angles are
//! handled through a continued-fraction convergent `p/q`, and every verdict
//! names the convergent it was computed with.

use std::io::Write;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, Q};
use crate::verdict::{Failure, Scope, Status, Verdict};

/// Open arc `{start + s mod 1 : 0 < s < length}`, or the whole circle.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Arc {
    #[serde(with = "exact::serde_q")]
    start: Q,
    #[serde(with = "exact::serde_q")]
    length: Q,
    full: bool,
}

impl Arc {
    /// Arc of `length ∈ (0, 1]` starting at `start` (reduced mod 1).
    pub fn new(start: Q, length: Q) -> Result<Self> {
        if !length.is_positive() || length > Q::one() {
            return Err(Error::Domain(format!(
                "arc length {} outside (0, 1]",
                exact::show(&length)
            )));
        }
        Ok(Self {
            start: exact::frac(&start),
            length,
            full: false,
        })
    }

    pub fn full() -> Self {
        Self {
            start: Q::zero(),
            length: Q::one(),
            full: true,
        }
    }

    pub fn start(&self) -> &Q {
        &self.start
    }

    pub fn length(&self) -> Q {
        self.length.clone()
    }

    pub fn is_full(&self) -> bool {
        self.full
    }

    /// Right endpoint reduced mod 1.
    pub fn end(&self) -> Q {
        exact::frac(&(&self.start + &self.length))
    }

    pub fn contains(&self, t: &Q) -> bool {
        if self.full {
            return true;
        }
        let s = exact::frac(&(t - &self.start));
        s.is_positive() && s < self.length
    }

    /// The rigid rotation `self + shift`.
    pub fn translate(&self, shift: &Q) -> Self {
        if self.full {
            return self.clone();
        }
        Self {
            start: exact::frac(&(&self.start + shift)),
            length: self.length.clone(),
            full: false,
        }
    }

    /// A point strictly inside the arc.
    pub fn midpoint(&self) -> Q {
        exact::frac(&(&self.start + &self.length / exact::int(2)))
    }
}

/// The window `A = {t : (U + t) ∩ W ≠ ∅}` for proper arcs `U`, `W`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowA {
    pub arc: Arc,
}

impl WindowA {
    pub fn contains(&self, t: &Q) -> bool {
        self.arc.contains(t)
    }

    pub fn length(&self) -> Q {
        self.arc.length()
    }
}

/// `B_δ(V)` on the circle: the arc widened by `δ` on both sides.
///
/// Returns the full circle once `|V| + 2δ > 1`.
pub fn delta_fatten(v: &Arc, delta: &Q) -> Arc {
    if v.full {
        return Arc::full();
    }
    let length = v.length() + delta * exact::int(2);
    if length > Q::one() {
        Arc::full()
    } else {
        Arc::new(&v.start - delta, length).expect("length in (0, 1]")
    }
}

/// Window arc for arbitrary arcs; full when `|U| + |W| > 1`.
pub(crate) fn window_arc(u: &Arc, w: &Arc) -> Arc {
    if u.full || w.full {
        return Arc::full();
    }
    let length = u.length() + w.length();
    if length > Q::one() {
        return Arc::full();
    }
    // (a - d, b - c) with W = (a, b), U = (c, d).
    let start = &w.start - (&u.start + &u.length);
    Arc::new(start, length).expect("length in (0, 1]")
}

/// Exact window `A = (a − d, b − c) mod 1` for `W = (a, b)` and `U = (c, d)`.
pub fn window_a(u: &Arc, w: &Arc) -> Result<WindowA> {
    let total = u.length() + w.length();
    if u.full || w.full || total >= Q::one() {
        return Err(Error::DegenerateWindow(exact::show(&total)));
    }
    Ok(WindowA { arc: window_arc(u, w) })
}

fn endpoints(arcs: &[&Arc]) -> Vec<Q> {
    let mut pts: Vec<Q> = arcs
        .iter()
        .filter(|a| !a.full)
        .flat_map(|a| [a.start.clone(), a.end()])
        .collect();
    pts.sort();
    pts.dedup();
    pts
}

/// A point lying in both arcs, if their intersection is nonempty.
///
/// Open arcs meet in a union of open intervals bounded by their endpoints, so
/// checking the midpoints between consecutive endpoints is exhaustive.
pub fn common_point(a: &Arc, b: &Arc) -> Option<Q> {
    match (a.full, b.full) {
        (true, true) => return Some(Q::zero()),
        (true, false) => return Some(b.midpoint()),
        (false, true) => return Some(a.midpoint()),
        _ => {}
    }
    let pts = endpoints(&[a, b]);
    let n = pts.len();
    (0..n)
        .map(|i| {
            let lo = &pts[i];
            let hi = if i + 1 < n {
                pts[i + 1].clone()
            } else {
                &pts[0] + Q::one()
            };
            exact::frac(&((lo + &hi) / exact::int(2)))
        })
        .find(|m| a.contains(m) && b.contains(m))
}

/// A point of the circle outside every arc, if one exists.
pub fn uncovered_point(arcs: &[Arc]) -> Option<Q> {
    if arcs.iter().any(|a| a.full) {
        return None;
    }
    if arcs.is_empty() {
        return Some(Q::zero());
    }
    // The union is open; if it misses something, it misses a boundary point,
    // and every boundary point is an arc endpoint.
    let refs: Vec<&Arc> = arcs.iter().collect();
    endpoints(&refs)
        .into_iter()
        .find(|p| !arcs.iter().any(|a| a.contains(p)))
}

pub fn arcs_cover_circle(arcs: &[Arc]) -> bool {
    uncovered_point(arcs).is_none()
}

/// Continued-fraction convergents of a rational, in order.
pub fn convergents(x: &Q) -> Vec<Q> {
    let mut out = Vec::new();
    let (mut h_prev, mut h) = (BigInt::zero(), BigInt::one());
    let (mut k_prev, mut k) = (BigInt::one(), BigInt::zero());
    let mut num = x.numer().clone();
    let mut den = x.denom().clone();
    while !den.is_zero() {
        let (a, r) = num.div_mod_floor(&den);
        let h_next = &a * &h + &h_prev;
        let k_next = &a * &k + &k_prev;
        out.push(Q::new(h_next.clone(), k_next.clone()));
        h_prev = std::mem::replace(&mut h, h_next);
        k_prev = std::mem::replace(&mut k, k_next);
        num = std::mem::replace(&mut den, r);
    }
    out
}

/// Rotation angle `α ∈ (0, 1)` carried by an exact rational approximant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RotationAngle {
    /// Value as supplied.
    pub declared: String,
    #[serde(with = "exact::serde_q")]
    approx: Q,
    /// True when the angle is exactly `approx`.
    pub rational: bool,
}

impl RotationAngle {
    /// Smallest convergent denominator used for irrational angles.
    pub const MIN_DENOMINATOR: u64 = 1_000_000;

    /// Irrational angle given to double precision; approximated by the
    /// first convergent with `q >= 10⁶`. Angles whose expansion ends earlier
    /// are rational and flagged as such.
    pub fn irrational(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain(format!("rotation angle {alpha} outside (0, 1)")));
        }
        let x = exact::rat(alpha);
        let min_q = BigInt::from(Self::MIN_DENOMINATOR);
        let convs = convergents(&x);
        match convs.iter().find(|c| c.denom() >= &min_q) {
            Some(c) => Ok(Self {
                declared: format!("{alpha}"),
                approx: c.clone(),
                rational: false,
            }),
            None => Ok(Self {
                declared: format!("{alpha}"),
                approx: x,
                rational: true,
            }),
        }
    }

    /// `(√5 − 1)/2`, the golden-ratio angle.
    pub fn golden() -> Self {
        let mut angle = Self::irrational((5f64.sqrt() - 1.0) / 2.0).expect("in (0, 1)");
        angle.declared = "golden".into();
        angle
    }

    /// Exact rational angle `p/q`.
    pub fn rational(alpha: Q) -> Result<Self> {
        if !alpha.is_positive() || alpha >= Q::one() {
            return Err(Error::Domain(format!(
                "rotation angle {} outside (0, 1)",
                exact::show(&alpha)
            )));
        }
        Ok(Self {
            declared: exact::show(&alpha),
            approx: alpha,
            rational: true,
        })
    }

    /// The exact step used for iteration.
    pub fn step(&self) -> &Q {
        &self.approx
    }

    pub fn denominator(&self) -> u64 {
        self.approx.denom().to_u64().unwrap_or(u64::MAX)
    }

    pub fn convergent(&self) -> String {
        exact::show(&self.approx)
    }

    pub fn scope(&self) -> Scope {
        if self.rational {
            Scope::Analytic
        } else {
            Scope::Approximant {
                convergent: self.convergent(),
            }
        }
    }

    /// `{n·α}` for the approximant.
    pub fn position(&self, n: u64) -> Q {
        exact::frac(&(&self.approx * Q::from_integer(BigInt::from(n))))
    }
}

/// Orbit `{nα}`, `n = 1, 2, …`, computed by exact incremental addition.
pub(crate) struct OrbitPositions<'a> {
    step: &'a Q,
    current: Q,
}

impl<'a> OrbitPositions<'a> {
    pub(crate) fn new(angle: &'a RotationAngle) -> Self {
        Self {
            step: angle.step(),
            current: Q::zero(),
        }
    }
}

impl Iterator for OrbitPositions<'_> {
    type Item = Q;

    fn next(&mut self) -> Option<Q> {
        self.current += self.step;
        if self.current >= Q::one() {
            self.current -= Q::one();
        }
        Some(self.current.clone())
    }
}

/// Outcome of the exact non-mixing scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TmRefutation {
    pub verdict: Verdict,
    pub window: WindowA,
    /// Failing times within the requested horizon.
    pub failing: Vec<u64>,
    /// First failing time found past the horizon, when none occurred inside it.
    pub widened_to: Option<u64>,
    pub density: f64,
    pub expected_density: f64,
    pub convergent: String,
}

/// Exhibits times `n ≤ horizon` at which `fⁿ(U)` misses `B_δ(V)`.
///
/// Requires `|U| + |V| + 2δ < 1`. The scan is exhaustive; if the horizon is
/// too short it is widened, up to one full period of the approximant, until
/// a failing time appears.
pub fn refute_delta_tm(angle: &RotationAngle, u: &Arc, v: &Arc, delta: &Q, horizon: u64) -> Result<TmRefutation> {
    if !delta.is_positive() {
        return Err(Error::Domain("delta must be positive".into()));
    }
    if horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    let total = u.length() + v.length() + delta * exact::int(2);
    if u.full || v.full || total >= Q::one() {
        return Err(Error::Precondition(format!(
            "|U| + |V| + 2δ = {} is not below 1",
            exact::show(&total)
        )));
    }
    let w = delta_fatten(v, delta);
    let window = window_a(u, &w)?;

    let mut failing = Vec::new();
    let mut widened_to = None;
    let period = angle.denominator();
    for (n, pos) in (1..).zip(OrbitPositions::new(angle)) {
        let miss = !window.contains(&pos);
        if n <= horizon {
            if miss {
                failing.push(n);
            }
        } else if !failing.is_empty() {
            break;
        } else if miss {
            widened_to = Some(n);
            break;
        } else if n > horizon.saturating_add(period) {
            break;
        }
    }

    let density = failing.len() as f64 / horizon as f64;
    let expected_density = 1.0 - exact::to_f64(&window.length());
    let convergent = angle.convergent();
    let mut times = failing.clone();
    if let Some(n) = widened_to {
        times.push(n);
    }
    let status = if times.is_empty() {
        Status::Inconclusive
    } else {
        Status::Refuted
    };
    let note = format!(
        "alpha ≈ {convergent}; |A| = {}; {} failing times in 1..={horizon} (density {density:.4}, expected {expected_density:.4}){}",
        exact::show(&window.length()),
        failing.len(),
        widened_to.map(|n| format!("; horizon widened to first failure at n = {n}")).unwrap_or_default(),
    );
    let verdict = Verdict::new(status, angle.scope(), note).with_failures(vec![Failure {
        pair: 0,
        times,
        horizon: widened_to.unwrap_or(horizon),
        point: None,
        distance: None,
        reason: "n·alpha mod 1 outside the window A, so f^n(U) misses B_delta(V)".into(),
    }]);
    Ok(TmRefutation {
        verdict,
        window,
        failing,
        widened_to,
        density,
        expected_density,
        convergent,
    })
}

/// Per-η record of the uniform-radius refutation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaOutcome {
    #[serde(with = "exact::serde_q")]
    pub eta: Q,
    #[serde(with = "exact::serde_q")]
    pub v_length: Q,
    #[serde(with = "exact::serde_q")]
    pub u_length: Q,
    pub skipped: bool,
    pub failing_count: usize,
    pub first_failing: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UfbRefutation {
    pub verdict: Verdict,
    pub per_eta: Vec<EtaOutcome>,
}

/// `count` equispaced radii strictly inside `(0, delta)`.
pub fn default_eta_grid(delta: &Q, count: usize) -> Vec<Q> {
    let parts = exact::int(count as i64 + 1);
    (1..=count as i64).map(|i| delta * exact::int(i) / &parts).collect()
}

/// Refutes uniform-from-below mixing over a finite grid of radii `η < δ`.
///
/// For each `η` the target arc is `V = (0, min(0.1, 1 − 2η)/2)` and the
/// source arc `U` has half that length, which keeps `|U| + |V| + 2η < 1`;
/// failing times then come from [`refute_delta_tm`] with `δ` replaced by `η`.
pub fn refute_ufb(angle: &RotationAngle, delta: &Q, eta_grid: &[Q], horizon: u64) -> Result<UfbRefutation> {
    if eta_grid.is_empty() {
        return Err(Error::Config("eta grid is empty".into()));
    }
    if let Some(bad) = eta_grid.iter().find(|e| !e.is_positive() || *e >= delta) {
        return Err(Error::Config(format!(
            "eta {} outside (0, {})",
            exact::show(bad),
            exact::show(delta)
        )));
    }
    let mut per_eta = Vec::with_capacity(eta_grid.len());
    let mut witnessed = Vec::new();
    for eta in eta_grid {
        let room = Q::one() - eta * exact::int(2);
        let v_length = exact::min(exact::ratio(1, 10), room.clone()) / exact::int(2);
        let u_length = &v_length / exact::int(2);
        if !room.is_positive() || &v_length + eta * exact::int(2) >= Q::one() {
            per_eta.push(EtaOutcome {
                eta: eta.clone(),
                v_length: Q::zero(),
                u_length: Q::zero(),
                skipped: true,
                failing_count: 0,
                first_failing: None,
            });
            continue;
        }
        let v = Arc::new(Q::zero(), v_length.clone())?;
        let u = Arc::new(Q::zero(), u_length.clone())?;
        let scan = refute_delta_tm(angle, &u, &v, eta, horizon)?;
        let first = scan.verdict.failures[0].times.first().copied();
        if let Some(n) = first {
            witnessed.push(n);
        }
        per_eta.push(EtaOutcome {
            eta: eta.clone(),
            v_length,
            u_length,
            skipped: false,
            failing_count: scan.verdict.failures[0].times.len(),
            first_failing: first,
        });
    }
    let skipped = per_eta.iter().filter(|o| o.skipped).count();
    let all_fail = skipped == 0 && per_eta.iter().all(|o| o.first_failing.is_some());
    let status = if all_fail {
        Status::Refuted
    } else {
        Status::Inconclusive
    };
    let note = format!(
        "alpha ≈ {}; {} grid radii in (0, {}) tested, {} skipped; every tested radius has failing times: {}. \
         The quantifier over all eta is replaced by this grid.",
        angle.convergent(),
        eta_grid.len(),
        exact::show(delta),
        skipped,
        all_fail
    );
    let failures = per_eta
        .iter()
        .enumerate()
        .filter(|(_, o)| !o.skipped)
        .map(|(i, o)| Failure {
            pair: i,
            times: o.first_failing.into_iter().collect(),
            horizon,
            point: None,
            distance: None,
            reason: format!("eta = {}: f^n(U) misses B_eta(V)", exact::show(&o.eta)),
        })
        .collect();
    Ok(UfbRefutation {
        verdict: Verdict::new(status, angle.scope(), note).with_failures(failures),
        per_eta,
    })
}

/// Counts `n ∈ 1..=horizon` with `{nα} ∈ window`, against `horizon · |window|`.
pub fn equidistribution_count(angle: &RotationAngle, window: &Arc, horizon: u64) -> (u64, f64) {
    let hits = OrbitPositions::new(angle)
        .take(horizon as usize)
        .filter(|t| window.contains(t))
        .count() as u64;
    (hits, horizon as f64 * exact::to_f64(&window.length()))
}

/// Writes `n, frac_part, in_A` for `n ∈ 1..=horizon`.
pub fn write_scan_csv<W: Write>(angle: &RotationAngle, window: &WindowA, horizon: u64, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "frac_part", "in_A"])?;
    for (n, pos) in (1..=horizon).zip(OrbitPositions::new(angle)) {
        w.write_record([
            n.to_string(),
            exact::to_f64(&pos).to_string(),
            window.contains(&pos).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat, ratio};

    fn arc(start: f64, len: f64) -> Arc {
        Arc::new(rat(start), rat(len)).unwrap()
    }

    #[test]
    fn fatten_examples() {
        let w = delta_fatten(&arc(0.5, 0.05), &rat(0.1));
        assert_eq!(w, arc(0.4, 0.25));
        assert!(delta_fatten(&arc(0.7, 0.01), &ratio(1, 2)).is_full());
        let tiny = delta_fatten(&arc(0.2, 0.05), &rat(1e-12));
        assert_eq!(tiny.length(), rat(0.05) + rat(2e-12));
    }

    #[test]
    fn window_example_matches_grid_oracle() {
        let u = arc(0.0, 0.05);
        let w = arc(0.4, 0.25);
        let a = window_a(&u, &w).unwrap();
        assert_eq!(a.arc, arc(0.35, 0.3));
        assert_eq!(a.length(), u.length() + w.length());
        // Oracle: brute-force (U + t) ∩ W ≠ ∅ on a rational grid.
        for i in 0..2000 {
            let t = ratio(2 * i + 1, 4000);
            let direct = common_point(&u.translate(&t), &w).is_some();
            assert_eq!(direct, a.contains(&t), "t = {t}");
        }
        // Aligning midpoints always overlaps.
        let t = w.midpoint() - u.midpoint();
        assert!(a.contains(&exact::frac(&t)));
    }

    #[test]
    fn degenerate_window_is_rejected() {
        assert!(matches!(
            window_a(&arc(0.0, 0.5), &arc(0.2, 0.5)),
            Err(Error::DegenerateWindow(_))
        ));
    }

    #[test]
    fn coverage_and_uncovered_points() {
        assert!(!arcs_cover_circle(&[arc(0.0, 0.6)]));
        assert!(arcs_cover_circle(&[arc(0.0, 0.6), arc(0.5, 0.6)]));
        // Length-one arc misses its own start.
        let almost = Arc::new(rat(0.25), int(1)).unwrap();
        assert_eq!(uncovered_point(std::slice::from_ref(&almost)), Some(rat(0.25)));
        assert!(arcs_cover_circle(&[almost, arc(0.2, 0.1)]));
        assert!(arcs_cover_circle(&[Arc::full()]));
    }

    #[test]
    fn golden_convergent_is_fibonacci() {
        let g = RotationAngle::golden();
        assert_eq!(g.convergent(), "832040/1346269");
        assert!(g.denominator() >= RotationAngle::MIN_DENOMINATOR);
        assert!(!g.rational);
        let quarter = RotationAngle::irrational(0.25).unwrap();
        assert!(quarter.rational);
        assert_eq!(quarter.step(), &ratio(1, 4));
        assert!(RotationAngle::irrational(1.5).is_err());
    }

    #[test]
    fn convergents_of_known_fraction() {
        let c = convergents(&ratio(415, 93));
        assert_eq!(c, vec![int(4), ratio(9, 2), ratio(58, 13), ratio(415, 93)]);
    }

    #[test]
    fn refutation_preconditions() {
        let g = RotationAngle::golden();
        let u = arc(0.0, 0.05);
        assert!(matches!(
            refute_delta_tm(&g, &u, &u, &rat(0.45), 100),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn refutation_widens_short_horizons() {
        let a = RotationAngle::rational(ratio(1, 100)).unwrap();
        let u = arc(0.0, 0.05);
        let r = refute_delta_tm(&a, &u, &u, &rat(0.1), 3).unwrap();
        // A = (-0.15, 0.15) mod 1 holds n/100 for n <= 14.
        assert!(r.failing.is_empty());
        assert_eq!(r.widened_to, Some(15));
        assert!(r.verdict.is_refuted());
    }

    #[test]
    fn equidistribution_edge_cases() {
        let g = RotationAngle::golden();
        assert_eq!(equidistribution_count(&g, &Arc::full(), 500).0, 500);
        assert_eq!(equidistribution_count(&g, &arc(0.1, 0.3), 0).0, 0);
    }

    #[test]
    fn ufb_grid_validation() {
        let g = RotationAngle::golden();
        assert!(matches!(refute_ufb(&g, &ratio(1, 2), &[], 10), Err(Error::Config(_))));
        assert!(matches!(
            refute_ufb(&g, &ratio(1, 2), &[ratio(1, 2)], 10),
            Err(Error::Config(_))
        ));
        let r = refute_ufb(&g, &ratio(1, 2), &[rat(0.2)], 1000).unwrap();
        assert!(r.verdict.is_refuted());
        assert!(r.per_eta[0].failing_count > 0);
    }
}
