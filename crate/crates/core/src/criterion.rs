//! The δ-Hypercyclicity Criterion on sampled dense sets, its constructive
//! transitivity witnesses, the `λB` instance and an explicit δ-hypercyclic
//! vector for `λB`.

use std::io::Write;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, Q};
use crate::metric::{dist_to_region, region_within, Laterality, OpenRegion, Pt, SpaceKind};
use crate::shifts::right_inverse;
use crate::sparse::SparseVec;
use crate::systems::{iterate, SystemDef};
use crate::verdict::{PairThreshold, Scope, Status, Verdict, Witness};

pub const DEFAULT_TOL: f64 = 1e-9;

/// Family of maps `S_n : W → X`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RightInverse {
    /// `S_n v = Σ v_j / A_{j+n}^{(n)} e_{j+n}`, an exact right inverse of `Tⁿ`.
    ShiftInverse,
    /// `(1 + ratioⁿ)` times the shift inverse, so `TⁿS_n w → w` without equality.
    Perturbed {
        #[serde(with = "exact::serde_q")]
        ratio: Q,
    },
    /// `S_n = 0`.
    Zero,
    /// `S_n = I`.
    Identity,
}

/// Sampled data for the criterion: schedule `n_1 < n_2 < …`, samples of the
/// dense sets `V`, `W`, and the maps `S_{n_k}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionInstance {
    pub sys: SystemDef,
    pub schedule: Vec<u64>,
    pub v_sample: Vec<SparseVec>,
    pub w_sample: Vec<SparseVec>,
    pub inverse: RightInverse,
}

impl CriterionInstance {
    pub fn new(
        sys: SystemDef,
        schedule: Vec<u64>,
        v_sample: Vec<SparseVec>,
        w_sample: Vec<SparseVec>,
        inverse: RightInverse,
    ) -> Result<Self> {
        if !sys.is_linear() {
            return Err(Error::Domain(format!("{} is not a linear operator", sys.label())));
        }
        sys.validate()?;
        if schedule.is_empty() || schedule.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::Config(
                "schedule must be nonempty and strictly increasing".into(),
            ));
        }
        if v_sample.is_empty() || w_sample.is_empty() {
            return Err(Error::Config("samples must be nonempty".into()));
        }
        let space = sys.space();
        for v in v_sample.iter().chain(&w_sample) {
            space.check(&Pt::Seq(v.clone()))?;
        }
        let inst = Self {
            sys,
            schedule,
            v_sample,
            w_sample,
            inverse,
        };
        if matches!(
            inst.inverse,
            RightInverse::ShiftInverse | RightInverse::Perturbed { .. }
        ) && inst.sys.shift_weights().is_none()
        {
            return Err(Error::Config("shift inverse needs a shift operator".into()));
        }
        Ok(inst)
    }

    /// Adds sample points to both dense sets.
    pub fn with_extra_samples(mut self, v: Vec<SparseVec>, w: Vec<SparseVec>) -> Result<Self> {
        let space = self.sys.space();
        for p in v.iter().chain(&w) {
            space.check(&Pt::Seq(p.clone()))?;
        }
        self.v_sample.extend(v);
        self.w_sample.extend(w);
        Ok(self)
    }

    /// `n_k`, with `k` counted from 1.
    pub fn n_k(&self, k: usize) -> Result<u64> {
        k.checked_sub(1)
            .and_then(|i| self.schedule.get(i))
            .copied()
            .ok_or_else(|| Error::Config(format!("k = {k} outside the schedule")))
    }

    /// `S_n w`.
    pub fn s_map(&self, n: u64, w: &SparseVec) -> Result<SparseVec> {
        Ok(match &self.inverse {
            RightInverse::Zero => SparseVec::zero(),
            RightInverse::Identity => w.clone(),
            RightInverse::ShiftInverse => {
                let (weights, lat) = self.sys.shift_weights().expect("checked at construction");
                right_inverse(&weights, lat, n, w)?
            }
            RightInverse::Perturbed { ratio } => {
                let (weights, lat) = self.sys.shift_weights().expect("checked at construction");
                right_inverse(&weights, lat, n, w)?.scale(&(Q::one() + exact::pow(ratio, n)))
            }
        })
    }

    fn power(&self, v: &SparseVec, n: u64) -> Result<SparseVec> {
        match iterate(&self.sys, &Pt::Seq(v.clone()), n)? {
            Pt::Seq(out) => Ok(out),
            _ => unreachable!("linear systems act on sequences"),
        }
    }

    fn check_k_max(&self, k_max: usize) -> Result<()> {
        if k_max == 0 || k_max > self.schedule.len() {
            return Err(Error::Config(format!(
                "k_max = {k_max} outside 1..={}",
                self.schedule.len()
            )));
        }
        Ok(())
    }
}

/// `‖·‖` over `k = 1..=k_max` for one sample vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormTrace {
    pub sample: usize,
    pub values: Vec<f64>,
    /// First `k` from which the value stays below the tolerance.
    pub settles_at: Option<usize>,
}

/// `d(T^{n_k} S_{n_k} w, w)` over `k = 1..=k_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceTrace {
    pub sample: usize,
    pub values: Vec<f64>,
    pub identically_zero: bool,
    /// First `k` from which the distance stays strictly below δ.
    pub k0: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub cond1: Vec<NormTrace>,
    pub cond2: Vec<NormTrace>,
    pub cond3: Vec<DistanceTrace>,
    pub verdict: Verdict,
}

/// Exact squared quantities for the three conditions.
struct Traces {
    cond1: Vec<Vec<Q>>,
    cond2: Vec<Vec<Q>>,
    cond3: Vec<Vec<Q>>,
}

fn compute_traces(inst: &CriterionInstance, k_max: usize) -> Result<Traces> {
    let mut cond1 = Vec::with_capacity(inst.v_sample.len());
    for v in &inst.v_sample {
        let mut cur = v.clone();
        let mut at = 0u64;
        let mut row = Vec::with_capacity(k_max);
        for k in 1..=k_max {
            let n = inst.n_k(k)?;
            cur = inst.power(&cur, n - at)?;
            at = n;
            row.push(cur.norm_sq());
        }
        cond1.push(row);
    }
    let mut cond2 = Vec::with_capacity(inst.w_sample.len());
    let mut cond3 = Vec::with_capacity(inst.w_sample.len());
    for w in &inst.w_sample {
        let mut r2 = Vec::with_capacity(k_max);
        let mut r3 = Vec::with_capacity(k_max);
        for k in 1..=k_max {
            let n = inst.n_k(k)?;
            let s = inst.s_map(n, w)?;
            r2.push(s.norm_sq());
            r3.push(inst.power(&s, n)?.dist_sq(w));
        }
        cond2.push(r2);
        cond3.push(r3);
    }
    Ok(Traces { cond1, cond2, cond3 })
}

/// First 1-based index from which every squared value is below `bound_sq`.
fn settles(values: &[Q], bound_sq: &Q) -> Option<usize> {
    let tail = values.iter().rev().take_while(|v| *v < bound_sq).count();
    (tail > 0).then(|| values.len() - tail + 1)
}

fn floats(values: &[Q]) -> Vec<f64> {
    values.iter().map(exact::sqrt_f64).collect()
}

fn norm_traces(rows: &[Vec<Q>], tol_sq: &Q) -> Vec<NormTrace> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| NormTrace {
            sample: i,
            values: floats(r),
            settles_at: settles(r, tol_sq),
        })
        .collect()
}

/// Checks the three conditions with limits read as "below `tol` from some
/// `k` on" and the third condition as `d(T^{n_k} S_{n_k} w, w) < δ` from
/// some `k₀` on.
pub fn check_delta_hc(inst: &CriterionInstance, delta: &Q, k_max: usize) -> Result<CriterionReport> {
    check_delta_hc_with_tol(inst, delta, k_max, &exact::rat(DEFAULT_TOL))
}

pub fn check_delta_hc_with_tol(inst: &CriterionInstance, delta: &Q, k_max: usize, tol: &Q) -> Result<CriterionReport> {
    if !delta.is_positive() || !tol.is_positive() {
        return Err(Error::Domain("delta and tol must be positive".into()));
    }
    inst.check_k_max(k_max)?;
    let tr = compute_traces(inst, k_max)?;
    let tol_sq = tol * tol;
    let delta_sq = delta * delta;
    let cond1 = norm_traces(&tr.cond1, &tol_sq);
    let cond2 = norm_traces(&tr.cond2, &tol_sq);
    let cond3: Vec<DistanceTrace> = tr
        .cond3
        .iter()
        .enumerate()
        .map(|(i, r)| DistanceTrace {
            sample: i,
            values: floats(r),
            identically_zero: r.iter().all(Zero::is_zero),
            k0: settles(r, &delta_sq),
        })
        .collect();

    let ok1 = cond1.iter().all(|t| t.settles_at.is_some());
    let ok2 = cond2.iter().all(|t| t.settles_at.is_some());
    let ok3 = cond3.iter().all(|t| t.k0.is_some());
    let k0 = cond3.iter().filter_map(|t| t.k0).max();
    let status = if ok1 && ok2 && ok3 {
        Status::Certified
    } else {
        Status::Inconclusive
    };
    let note = format!(
        "condition 1 {}, condition 2 {}, condition 3 {} (k0 = {}) up to k = {k_max}",
        if ok1 { "holds" } else { "fails" },
        if ok2 { "holds" } else { "fails" },
        if ok3 { "holds" } else { "fails" },
        k0.map_or("none".into(), |k| k.to_string()),
    );
    let verdict = Verdict::new(status, Scope::UpToHorizon { horizon: k_max as u64 }, note);
    Ok(CriterionReport {
        cond1,
        cond2,
        cond3,
        verdict,
    })
}

/// The classical criterion: all three quantities fall below `tol` and stay.
pub fn check_classical_hc(inst: &CriterionInstance, tol: &Q, k_max: usize) -> Result<Verdict> {
    if !tol.is_positive() {
        return Err(Error::Domain("tol must be positive".into()));
    }
    inst.check_k_max(k_max)?;
    let tr = compute_traces(inst, k_max)?;
    let tol_sq = tol * tol;
    let fails = |rows: &[Vec<Q>]| rows.iter().filter(|r| settles(r, &tol_sq).is_none()).count();
    let (f1, f2, f3) = (fails(&tr.cond1), fails(&tr.cond2), fails(&tr.cond3));
    let status = if f1 + f2 + f3 == 0 {
        Status::Certified
    } else {
        Status::Inconclusive
    };
    Ok(Verdict::new(
        status,
        Scope::UpToHorizon { horizon: k_max as u64 },
        format!(
            "samples not settling below tol {}: condition 1: {f1}, condition 2: {f2}, condition 3: {f3}",
            exact::show(tol)
        ),
    ))
}

/// Explicit point `x = v + S_{n_k} w` whose orbit reaches `B_δ(O)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitivityWitness {
    pub k: usize,
    pub n: u64,
    pub v: SparseVec,
    pub w: SparseVec,
    pub x: SparseVec,
    /// `w + T^{n_k} v`, a point of `O`.
    pub target: SparseVec,
    /// `d(T^{n_k} x, target)`, equal to `d(T^{n_k} S_{n_k} w, w)`.
    pub distance: f64,
    /// `dist(T^{n_k} x, O)`.
    pub distance_to_region: f64,
}

fn first_inside<'a>(
    inst: &CriterionInstance,
    sample: &'a [SparseVec],
    r: &OpenRegion,
) -> Result<Option<&'a SparseVec>> {
    let space = inst.sys.space();
    for p in sample {
        if r.contains(&space, &Pt::Seq(p.clone()))? {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

/// Tests the three facts behind the witness at index `k`.
fn witness_at(
    inst: &CriterionInstance,
    v: &SparseVec,
    w: &SparseVec,
    k: usize,
    t: &Q,
    u: &OpenRegion,
    o: &OpenRegion,
) -> Result<Option<TransitivityWitness>> {
    let space = inst.sys.space();
    let n = inst.n_k(k)?;
    let s = inst.s_map(n, w)?;
    let x = v + &s;
    if !u.contains(&space, &Pt::Seq(x.clone()))? {
        return Ok(None);
    }
    let tv = inst.power(v, n)?;
    let target = w + &tv;
    if !o.contains(&space, &Pt::Seq(target.clone()))? {
        return Ok(None);
    }
    let tx = inst.power(&x, n)?;
    let key = tx.dist_sq(&target);
    let direct = inst.power(&s, n)?.dist_sq(w);
    assert_eq!(key, direct, "translation invariance must hold exactly");
    if !exact::sqrt_lt(&key, t) {
        return Ok(None);
    }
    let distance_to_region = dist_to_region(&space, &Pt::Seq(tx), o)?;
    Ok(Some(TransitivityWitness {
        k,
        n,
        v: v.clone(),
        w: w.clone(),
        x,
        target,
        distance: exact::sqrt_f64(&key),
        distance_to_region,
    }))
}

fn pick_samples<'a>(
    inst: &'a CriterionInstance,
    u: &OpenRegion,
    o: &OpenRegion,
) -> Result<(&'a SparseVec, &'a SparseVec)> {
    let v = first_inside(inst, &inst.v_sample, u)?
        .ok_or_else(|| Error::WitnessUnavailable("no V sample inside U".into()))?;
    let w = first_inside(inst, &inst.w_sample, o)?
        .ok_or_else(|| Error::WitnessUnavailable("no W sample inside O".into()))?;
    Ok((v, w))
}

/// `x = v + S_{n_k} w` with `x ∈ U`, `w + T^{n_k} v ∈ O` and
/// `d(T^{n_k} x, w + T^{n_k} v) < δ − guard`, for the first such `k`.
pub fn transitivity_witness(
    inst: &CriterionInstance,
    delta: &Q,
    u: &OpenRegion,
    o: &OpenRegion,
) -> Result<TransitivityWitness> {
    if !delta.is_positive() {
        return Err(Error::Domain("delta must be positive".into()));
    }
    let (v, w) = pick_samples(inst, u, o)?;
    let t = delta - exact::rat(DEFAULT_TOL);
    for k in 1..=inst.schedule.len() {
        if let Some(wit) = witness_at(inst, v, w, k, &t, u, o)? {
            return Ok(wit);
        }
    }
    Err(Error::WitnessUnavailable(format!(
        "no k <= {} satisfies all three thresholds",
        inst.schedule.len()
    )))
}

/// For each pair, the smallest `K` such that `x_k = v + S_{n_k} w` is a
/// witness for every `k ∈ [K, k_max]`.
pub fn check_sequence_mixing(
    inst: &CriterionInstance,
    delta: &Q,
    pairs: &[(OpenRegion, OpenRegion)],
    k_max: usize,
) -> Result<Verdict> {
    if !delta.is_positive() {
        return Err(Error::Domain("delta must be positive".into()));
    }
    if pairs.is_empty() {
        return Err(Error::Config("no pairs".into()));
    }
    inst.check_k_max(k_max)?;
    let t = delta - exact::rat(DEFAULT_TOL);
    let mut witnesses = Vec::new();
    let mut thresholds = Vec::new();
    let mut open = Vec::new();
    for (i, (u, o)) in pairs.iter().enumerate() {
        let (v, w) = pick_samples(inst, u, o)?;
        let mut start: Option<(usize, TransitivityWitness)> = None;
        for k in 1..=k_max {
            match witness_at(inst, v, w, k, &t, u, o)? {
                Some(wit) => {
                    if start.is_none() {
                        start = Some((k, wit));
                    }
                }
                None => start = None,
            }
        }
        match start {
            Some((k, wit)) => {
                thresholds.push(PairThreshold {
                    pair: i,
                    start: k as u64,
                });
                witnesses.push(Witness {
                    pair: i,
                    n: wit.n,
                    point: Pt::Seq(wit.x),
                    distance: wit.distance_to_region,
                });
            }
            None => open.push(i),
        }
    }
    let status = if open.is_empty() {
        Status::Certified
    } else {
        Status::Inconclusive
    };
    let note = if open.is_empty() {
        format!("every pair has a witness for all k in [K, {k_max}]")
    } else {
        format!("pairs {open:?} have no witness run ending at k = {k_max}")
    };
    Ok(Verdict::new(status, Scope::UpToHorizon { horizon: k_max as u64 }, note)
        .with_witnesses(witnesses)
        .with_thresholds(thresholds))
}

/// Instance with `V = W = {±e_i} ∪ {Σ e_i}` over indices `0..=cap`
/// (`-cap..=cap` on the bilateral space) and schedule `n_k = step · k`.
pub fn basis_instance(
    sys: SystemDef,
    support_cap: usize,
    step: u64,
    k_max: usize,
    inverse: RightInverse,
) -> Result<CriterionInstance> {
    if k_max == 0 || step == 0 {
        return Err(Error::Config("k_max and the schedule step must be positive".into()));
    }
    let cap = support_cap as i64;
    let lo = match sys.space().kind {
        SpaceKind::SequenceL2(Laterality::Bilateral) => -cap,
        _ => 0,
    };
    let mut sample: Vec<SparseVec> = (lo..=cap)
        .flat_map(|i| {
            let e = SparseVec::basis(i);
            [-&e, e]
        })
        .collect();
    sample.push(SparseVec::from_pairs((lo..=cap).map(|i| (i, Q::one()))));
    CriterionInstance::new(
        sys,
        (1..=k_max as u64).map(|k| k * step).collect(),
        sample.clone(),
        sample,
        inverse,
    )
}

/// `λB` with schedule `n_k = k` and the basis samples over `0..=support_cap`.
pub fn lambda_b_instance(lambda: &Q, support_cap: usize, k_max: usize) -> Result<CriterionInstance> {
    basis_instance(
        SystemDef::lambda_b(lambda.clone())?,
        support_cap,
        1,
        k_max,
        RightInverse::ShiftInverse,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub j: usize,
    pub m: u64,
    /// `d(T^{m_j} x, w_j)`.
    pub achieved_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HcVector {
    pub x: SparseVec,
    pub plan: Vec<PlanStep>,
}

/// Smallest `g` with `|λ|^{2g} δ² ≥ 4^{j+1} ‖w‖²`.
fn gap_for(lambda_abs: &Q, delta: &Q, w: &SparseVec, j: usize) -> u64 {
    let rhs = exact::pow(&exact::int(4), j as u64 + 1) * w.norm_sq();
    let mut lhs = delta * delta;
    let step = lambda_abs * lambda_abs;
    let mut g = 0;
    while lhs < rhs {
        lhs *= &step;
        g += 1;
    }
    g
}

/// `x = Σ_j S_{m_j} w_j` whose orbit passes within `δ` of every target.
///
/// `m_0 = 0` and `m_j − m_{j-1}` is at least the support width of `w_{j-1}`,
/// so earlier blocks vanish under `T^{m_j}`, and large enough that
/// `|λ|^{-(m_j − m_{j-1})} ‖w_j‖ ≤ δ/2^{j+1}`, so the later blocks add up to
/// less than `δ/2`.
pub fn build_delta_hc_vector(lambda: &Q, targets: &[SparseVec], delta: &Q) -> Result<HcVector> {
    if !delta.is_positive() {
        return Err(Error::Domain("delta must be positive".into()));
    }
    let sys = SystemDef::lambda_b(lambda.clone())?;
    let space = sys.space();
    for w in targets {
        space.check(&Pt::Seq(w.clone()))?;
    }
    let inst = CriterionInstance {
        sys,
        schedule: vec![1],
        v_sample: vec![SparseVec::zero()],
        w_sample: vec![SparseVec::zero()],
        inverse: RightInverse::ShiftInverse,
    };
    let lambda_abs = lambda.abs();
    let mut ms = Vec::with_capacity(targets.len());
    let mut x = SparseVec::zero();
    for (j, w) in targets.iter().enumerate() {
        let m = match ms.last() {
            None => 0,
            Some(&prev) => {
                let width = targets[j - 1].max_index().map_or(1, |i| i as u64 + 1);
                prev + width.max(gap_for(&lambda_abs, delta, w, j))
            }
        };
        x = &x + &inst.s_map(m, w)?;
        ms.push(m);
    }
    let plan = replay_plan(lambda, &x, targets, &ms)?;
    Ok(HcVector { x, plan })
}

/// Recomputes `d(T^{m_j} x, w_j)` from scratch.
pub fn replay_plan(lambda: &Q, x: &SparseVec, targets: &[SparseVec], ms: &[u64]) -> Result<Vec<PlanStep>> {
    let sys = SystemDef::lambda_b(lambda.clone())?;
    targets
        .iter()
        .zip(ms)
        .enumerate()
        .map(|(j, (w, &m))| {
            let image = iterate(&sys, &Pt::Seq(x.clone()), m)?;
            let d = image.as_seq().expect("sequence").dist_sq(w);
            Ok(PlanStep {
                j,
                m,
                achieved_distance: exact::sqrt_f64(&d),
            })
        })
        .collect()
}

/// Writes `j,m_j,achieved_distance` rows.
pub fn write_plan_csv<W: Write>(plan: &[PlanStep], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["j", "m_j", "achieved_distance"])?;
    for s in plan {
        wtr.write_record([s.j.to_string(), s.m.to_string(), s.achieved_distance.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Balls of radius `radius` around each target, for replaying a vector
/// through the transitive-point checker.
pub fn target_balls(targets: &[SparseVec], radius: &Q) -> Result<Vec<OpenRegion>> {
    targets
        .iter()
        .map(|w| OpenRegion::ball(Pt::Seq(w.clone()), radius.clone()))
        .collect()
}

/// Whether `x`'s orbit under `λB` meets `B_δ(O)` at time `n`.
pub fn reaches(lambda: &Q, x: &SparseVec, n: u64, o: &OpenRegion, delta: &Q) -> Result<bool> {
    let sys = SystemDef::lambda_b(lambda.clone())?;
    let space = sys.space();
    let image = iterate(&sys, &Pt::Seq(x.clone()), n)?;
    region_within(&space, &image, o, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::check_delta_transitive_point;
    use crate::exact::{int, rat, ratio};
    use crate::metric::Space;
    use crate::systems::WeightSeq;

    fn e(i: i64) -> SparseVec {
        SparseVec::basis(i)
    }

    #[test]
    fn lambda_b_right_inverse() {
        let inst = lambda_b_instance(&int(2), 3, 10).unwrap();
        let s = inst.s_map(3, &e(0)).unwrap();
        assert_eq!(s, e(3).scale(&ratio(1, 8)));
        assert_eq!(s.norm_sq(), ratio(1, 64));
        let w = SparseVec::from_pairs([(0, ratio(3, 7)), (2, int(-5))]);
        for n in 0..=20 {
            let s = inst.s_map(n, &w).unwrap();
            assert_eq!(inst.power(&s, n).unwrap(), w);
        }
        // Finite support dies after its last index.
        assert!(inst.power(&e(4), 5).unwrap().is_zero());
        assert!(lambda_b_instance(&int(1), 3, 10).is_err());
    }

    #[test]
    fn lambda_b_satisfies_the_criterion() {
        let inst = lambda_b_instance(&int(2), 3, 64).unwrap();
        for delta in [rat(1e-6), rat(0.1), int(10)] {
            let r = check_delta_hc(&inst, &delta, 64).unwrap();
            assert!(r.verdict.is_certified(), "{}", r.verdict.note);
            assert!(r.cond3.iter().all(|t| t.identically_zero && t.k0 == Some(1)));
        }
        assert!(check_classical_hc(&inst, &rat(1e-9), 64).unwrap().is_certified());
    }

    #[test]
    fn zero_inverse_fails_condition_three() {
        let sys = SystemDef::lambda_b(int(2)).unwrap();
        let inst = CriterionInstance::new(sys, (1..=10).collect(), vec![e(0)], vec![e(1)], RightInverse::Zero).unwrap();
        let r = check_delta_hc(&inst, &rat(0.5), 10).unwrap();
        assert!(!r.verdict.is_certified());
        assert!(r.cond3[0].k0.is_none());
        // δ above ‖w‖: the degenerate witness works.
        let u = OpenRegion::ball(Pt::Seq(e(0)), rat(0.1)).unwrap();
        let o = OpenRegion::ball(Pt::Seq(e(1)), rat(0.1)).unwrap();
        let wit = transitivity_witness(&inst, &int(2), &u, &o).unwrap();
        assert_eq!(wit.distance, 1.0);
    }

    #[test]
    fn identity_with_identity_inverse() {
        let sys = SystemDef::identity(Space::sequence(crate::metric::Laterality::Unilateral, 4));
        let inst =
            CriterionInstance::new(sys, (1..=5).collect(), vec![e(0)], vec![e(0)], RightInverse::Identity).unwrap();
        let r = check_delta_hc(&inst, &rat(0.1), 5).unwrap();
        assert!(r.cond2[0].settles_at.is_none());
        assert!(!check_classical_hc(&inst, &rat(1e-9), 5).unwrap().is_certified());
    }

    #[test]
    fn perturbed_inverse_is_classical() {
        let sys = SystemDef::unilateral(WeightSeq::constant(int(3))).unwrap();
        let inst = CriterionInstance::new(
            sys,
            (1..=40).collect(),
            vec![e(0), e(2)],
            vec![e(1)],
            RightInverse::Perturbed { ratio: ratio(1, 2) },
        )
        .unwrap();
        let r = check_delta_hc(&inst, &rat(0.01), 40).unwrap();
        assert!(r.verdict.is_certified());
        assert!(!r.cond3[0].identically_zero);
        assert_eq!(r.cond3[0].k0, Some(7));
        assert!(check_classical_hc(&inst, &rat(1e-9), 40).unwrap().is_certified());
    }

    #[test]
    fn nonlinear_systems_are_rejected() {
        let sys = SystemDef::identity(Space::circle());
        assert!(CriterionInstance::new(sys, vec![1], vec![e(0)], vec![e(0)], RightInverse::Zero).is_err());
    }

    #[test]
    fn transitivity_witness_example() {
        let inst = lambda_b_instance(&int(2), 3, 30).unwrap();
        let u = OpenRegion::ball(Pt::Seq(e(0)), rat(0.2)).unwrap();
        let o = OpenRegion::ball(Pt::Seq(e(1)), rat(0.2)).unwrap();
        let wit = transitivity_witness(&inst, &rat(0.1), &u, &o).unwrap();
        assert_eq!(wit.distance, 0.0);
        assert_eq!(wit.v, e(0));
        assert_eq!(wit.w, e(1));
        assert_eq!(wit.k, 3);

        let far = OpenRegion::ball(Pt::Seq(e(0).scale(&int(7))), rat(0.2)).unwrap();
        assert!(matches!(
            transitivity_witness(&inst, &rat(0.1), &far, &o),
            Err(Error::WitnessUnavailable(_))
        ));
    }

    #[test]
    fn sequence_mixing_thresholds() {
        let inst = lambda_b_instance(&int(2), 3, 30).unwrap();
        let ball = |i| OpenRegion::ball(Pt::Seq(e(i)), rat(0.2)).unwrap();
        let pairs = vec![(ball(0), ball(1)), (ball(2), ball(0)), (ball(3), ball(3))];
        let v = check_sequence_mixing(&inst, &rat(0.1), &pairs, 30).unwrap();
        assert!(v.is_certified());
        let ks: Vec<u64> = v.thresholds.iter().map(|t| t.start).collect();
        assert_eq!(ks, vec![3, 3, 4]);
        let v2 = check_sequence_mixing(&inst, &rat(0.2), &pairs, 30).unwrap();
        assert_eq!(v2.thresholds, v.thresholds);
        let short = check_sequence_mixing(&inst, &rat(0.1), &pairs, 3).unwrap();
        assert_eq!(short.status, Status::Inconclusive);
    }

    #[test]
    fn hc_vector_two_targets() {
        let targets = vec![e(0), e(1).scale(&int(3))];
        let hv = build_delta_hc_vector(&int(2), &targets, &rat(0.1)).unwrap();
        // Gap: width 1 against smallest g with 4^g · 0.01 >= 16 · 9, i.e. g = 7.
        assert_eq!(hv.plan.iter().map(|s| s.m).collect::<Vec<_>>(), vec![0, 7]);
        assert!(hv.plan.iter().all(|s| s.achieved_distance < 0.1));
        // Oracle: direct iteration of the explicit vector.
        let sys = SystemDef::lambda_b(int(2)).unwrap();
        let t7 = iterate(&sys, &Pt::Seq(hv.x.clone()), 7).unwrap();
        assert_eq!(t7, Pt::Seq(targets[1].clone()));
        let t0 = hv.x.dist_sq(&targets[0]);
        assert_eq!(t0, ratio(9, 1 << 14));

        let single = build_delta_hc_vector(&int(2), &[e(0)], &rat(0.1)).unwrap();
        assert_eq!(single.plan[0].achieved_distance, 0.0);
    }

    #[test]
    fn hc_vector_replays_through_the_point_checker() {
        let targets: Vec<SparseVec> = (0..6)
            .map(|i| SparseVec::from_pairs([(i % 3, ratio(i + 1, 2)), (2, int(-1))]))
            .collect();
        let delta = rat(0.1);
        let hv = build_delta_hc_vector(&int(2), &targets, &delta).unwrap();
        let ms: Vec<u64> = hv.plan.iter().map(|s| s.m).collect();
        assert_eq!(replay_plan(&int(2), &hv.x, &targets, &ms).unwrap(), hv.plan);
        let balls = target_balls(&targets, &delta).unwrap();
        let sys = SystemDef::lambda_b(int(2)).unwrap();
        let horizon = ms.last().unwrap() + 1;
        let r = check_delta_transitive_point(&sys, &Pt::Seq(hv.x.clone()), &balls, &delta, horizon).unwrap();
        assert!(r.verdict.is_certified());
        for (j, s) in hv.plan.iter().enumerate() {
            assert!(reaches(&int(2), &hv.x, s.m, &balls[j], &delta).unwrap());
        }
    }

    #[test]
    fn plan_csv() {
        let hv = build_delta_hc_vector(&int(2), &[e(0), e(1)], &rat(0.1)).unwrap();
        let mut buf = Vec::new();
        write_plan_csv(&hv.plan, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("j,m_j,achieved_distance\n0,0,"));
    }
}
