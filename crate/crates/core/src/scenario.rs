//! Named scenarios, JSON certificates with CSV sidecars, and replay.
//!
//! A scenario is a TOML file:
//!
//! ```toml
//! name = "identity-capped-ufb"
//! statement = "..."
//! check = "ufb"
//!
//! [system]
//! kind = "identity"
//! space = "capped_plane"
//!
//! [params]
//! delta = "1.2"
//! eta = "1.1"
//! seed = 1
//! ```
//!
//! Rationals are written as strings (`"1/3"`, `"0.05"`, `"1e-6"`) or bare
//! numbers. Points are strings: `"1/4"` on the circle, `"(1, 0)"` in the
//! plane, `"0:1, 2:-1/2"` (index:value pairs) in sequence spaces.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use crate::certify::{self, CheckConfig};
use crate::criterion::{self, RightInverse};
use crate::error::{Error, Result};
use crate::exact::{self, Q};
use crate::metric::{ball_arc, Laterality, OpenRegion, Pt, Space, SpaceKind};
use crate::rotation::{self, RotationAngle};
use crate::sampling;
use crate::shifts;
use crate::sparse::SparseVec;
use crate::systems::{SystemDef, WeightGen, WeightSeq, DEFAULT_DIM_CAP};
use crate::verdict::{Scope, Status, Verdict};

pub const SCHEMA_VERSION: u32 = 1;

/// Rational literal that echoes in canonical form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Num(pub Q);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&exact::show(&self.0))
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct NumVisitor;
        impl Visitor<'_> for NumVisitor {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a rational number or a string such as \"1/3\"")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Num, E> {
                exact::parse(v).map(Num).map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Num, E> {
                Ok(Num(exact::int(v)))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Num, E> {
                Ok(Num(Q::from_integer(v.into())))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Num, E> {
                if v.is_finite() {
                    Ok(Num(exact::rat(v)))
                } else {
                    Err(E::custom("non-finite number"))
                }
            }
        }
        d.deserialize_any(NumVisitor)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    DeltaTt,
    DeltaTm,
    Ufb,
    TransitivePoint,
    RotationRefuteTm,
    RotationRefuteUfb,
    ShiftSufficiency,
    CriterionDeltaHc,
    CriterionClassical,
    SequenceMixing,
    BuildVector,
    ImplicationHarness,
}

impl CheckKind {
    fn needs_seed(self) -> bool {
        matches!(
            self,
            CheckKind::DeltaTt | CheckKind::DeltaTm | CheckKind::Ufb | CheckKind::ImplicationHarness
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceName {
    Circle,
    CappedPlane,
    Unilateral,
    Bilateral,
}

impl SpaceName {
    fn space(self) -> Space {
        match self {
            SpaceName::Circle => Space::circle(),
            SpaceName::CappedPlane => Space::capped_plane(),
            SpaceName::Unilateral => Space::sequence(Laterality::Unilateral, DEFAULT_DIM_CAP),
            SpaceName::Bilateral => Space::sequence(Laterality::Bilateral, DEFAULT_DIM_CAP),
        }
    }
}

/// `"golden"`, an exact rational string, or a float taken as irrational.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AngleSpec {
    Float(f64),
    Text(String),
}

impl AngleSpec {
    fn build(&self) -> Result<RotationAngle> {
        match self {
            AngleSpec::Float(a) => RotationAngle::irrational(*a),
            AngleSpec::Text(t) if t == "golden" => Ok(RotationAngle::golden()),
            AngleSpec::Text(t) => RotationAngle::rational(exact::parse(t)?),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    Constant { c: Num },
    Explicit { values: Vec<Num>, default: Num },
    BlockOscillating { c: Num },
}

impl WeightSpec {
    fn build(&self) -> WeightGen {
        match self {
            WeightSpec::Constant { c } => WeightGen::Constant { c: c.0.clone() },
            WeightSpec::Explicit { values, default } => WeightGen::Explicit {
                values: values.iter().map(|v| v.0.clone()).collect(),
                default: default.0.clone(),
            },
            WeightSpec::BlockOscillating { c } => WeightGen::BlockOscillating { c: c.0.clone() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Identity {
        space: SpaceName,
    },
    Rotation {
        angle: AngleSpec,
    },
    UnilateralShift {
        weights: WeightSpec,
    },
    BilateralShift {
        weights: WeightSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        backward: Option<WeightSpec>,
    },
    LambdaB {
        lambda: Num,
    },
}

impl SystemSpec {
    pub fn build(&self) -> Result<SystemDef> {
        match self {
            SystemSpec::Identity { space } => Ok(SystemDef::identity(space.space())),
            SystemSpec::Rotation { angle } => Ok(SystemDef::rotation(angle.build()?)),
            SystemSpec::UnilateralShift { weights } => SystemDef::unilateral(WeightSeq {
                forward: weights.build(),
                backward: None,
            }),
            SystemSpec::BilateralShift { weights, backward } => SystemDef::bilateral(WeightSeq {
                forward: weights.build(),
                backward: backward.as_ref().map(WeightSpec::build),
            }),
            SystemSpec::LambdaB { lambda } => SystemDef::lambda_b(lambda.0.clone()),
        }
    }
}

/// One open ball, `center` written as a point string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub center: String,
    pub radius: Num,
}

impl RegionSpec {
    fn build(&self, space: &Space) -> Result<OpenRegion> {
        OpenRegion::ball(parse_point(space, &self.center)?, self.radius.0.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InverseSpec {
    ShiftInverse,
    Zero,
    Identity,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<Num>,
    /// Equal arcs covering the circle, used as the pair cover.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cover_arcs: Option<usize>,
    /// Explicit regions; every ordered pair is tested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regions: Option<Vec<RegionSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<RegionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<RegionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<RegionSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule_step: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse: Option<InverseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_vectors: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_targets: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// The statement this scenario exercises.
    pub statement: String,
    pub check: CheckKind,
    pub system: SystemSpec,
    #[serde(default)]
    pub params: Params,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of the first `key = …` assignment, for validation messages.
fn line_of_key(text: &str, key: &str) -> Option<usize> {
    text.lines()
        .position(|l| {
            l.trim_start()
                .strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
}

impl Scenario {
    /// Parses and validates a scenario, reporting the offending line.
    pub fn parse(text: &str) -> Result<Self> {
        let sc: Scenario = toml::from_str(text).map_err(|e| Error::Scenario {
            line: e.span().map(|s| line_of(text, s.start)),
            msg: e.message().to_string(),
        })?;
        sc.validate().map_err(|(key, msg)| Error::Scenario {
            line: key.and_then(|k| line_of_key(text, k)),
            msg,
        })?;
        Ok(sc)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    fn validate(&self) -> std::result::Result<(), (Option<&'static str>, String)> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err((Some("name"), format!("invalid scenario name `{}`", self.name)));
        }
        let sys = self.system.build().map_err(|e| (Some("kind"), e.to_string()))?;
        let p = &self.params;
        let need = |present: bool, key: &'static str| {
            if present {
                Ok(())
            } else {
                Err((None, format!("check `{:?}` needs params.{key}", self.check)))
            }
        };
        if self.check != CheckKind::CriterionClassical {
            need(p.delta.is_some(), "delta")?;
        }
        if self.check.needs_seed() {
            need(p.seed.is_some(), "seed")?;
        }
        let rotation_only = matches!(self.check, CheckKind::RotationRefuteTm | CheckKind::RotationRefuteUfb);
        if rotation_only && sys.rotation_angle().is_none() {
            return Err((Some("check"), "rotation checks need a rotation system".into()));
        }
        let linear_only = matches!(
            self.check,
            CheckKind::CriterionDeltaHc | CheckKind::CriterionClassical | CheckKind::SequenceMixing
        );
        if linear_only && !sys.is_linear() {
            return Err((
                Some("check"),
                "criterion checks need an operator on a sequence space".into(),
            ));
        }
        match self.check {
            CheckKind::Ufb | CheckKind::ImplicationHarness => need(p.eta.is_some(), "eta")?,
            CheckKind::TransitivePoint => {
                need(p.point.is_some(), "point")?;
                need(p.targets.is_some(), "targets")?;
            }
            CheckKind::RotationRefuteTm => {
                need(p.u.is_some(), "u")?;
                need(p.v.is_some(), "v")?;
            }
            CheckKind::ShiftSufficiency if sys.shift_weights().is_none() => {
                return Err((Some("check"), "shift sufficiency needs a weighted shift".into()));
            }
            CheckKind::SequenceMixing => need(p.regions.is_some(), "regions")?,
            CheckKind::BuildVector => {
                if !matches!(sys, SystemDef::RolewiczLambdaB { .. }) {
                    return Err((Some("check"), "build_vector needs a lambda_b system".into()));
                }
                need(
                    p.target_vectors.is_some() || p.random_targets.is_some() && p.seed.is_some(),
                    "target_vectors (or random_targets with seed)",
                )?;
            }
            _ => {}
        }
        Ok(())
    }

    fn apply_overrides(&mut self, horizon: Option<u64>, seed: Option<u64>) {
        if horizon.is_some() {
            self.params.horizon = horizon;
        }
        if seed.is_some() {
            self.params.seed = seed;
        }
    }
}

/// Parses a point string for `space`.
pub fn parse_point(space: &Space, text: &str) -> Result<Pt> {
    let t = text.trim();
    let p = match space.kind {
        SpaceKind::Circle => Pt::circle(exact::parse(t)?),
        SpaceKind::CappedNormed => {
            let inner = t.trim_start_matches('(').trim_end_matches(')');
            let (x, y) = inner
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("`{t}` is not a plane point `(x, y)`")))?;
            Pt::plane(exact::parse(x)?, exact::parse(y)?)
        }
        SpaceKind::SequenceL2(_) => Pt::Seq(parse_vector(t)?),
    };
    space.check(&p)?;
    Ok(p)
}

/// `"0:1, 2:-1/2"`; `"0"` or an empty string is the zero vector.
pub fn parse_vector(text: &str) -> Result<SparseVec> {
    let t = text.trim();
    let mut v = SparseVec::zero();
    if t.is_empty() || t == "0" {
        return Ok(v);
    }
    for term in t.split(',') {
        let (i, c) = term
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("`{term}` is not an index:value pair")))?;
        let i: i64 = i.trim().parse().map_err(|_| Error::Parse(format!("bad index `{i}`")))?;
        v.add_at(i, &exact::parse(c)?);
    }
    Ok(v)
}

fn format_vector(v: &SparseVec) -> String {
    if v.is_zero() {
        return "0".into();
    }
    v.iter()
        .map(|(i, c)| format!("{i}:{}", exact::show(c)))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub version: String,
    pub seed: Option<u64>,
    pub thresholds: serde_json::Map<String, Value>,
    pub alpha_convergent: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub schema_version: u32,
    pub scenario: Scenario,
    pub verdict: Verdict,
    pub details: Value,
    pub sidecars: Vec<String>,
    pub environment: Environment,
    pub timing_ms: u64,
}

impl Certificate {
    /// Canonical JSON without the timing field.
    pub fn canonical(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        v.as_object_mut().expect("object").remove("timing_ms");
        Ok(serde_json::to_string_pretty(&v)?)
    }
}

/// A finished run: the certificate and the sidecar files it names.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub certificate: Certificate,
    pub sidecars: Vec<(String, Vec<u8>)>,
}

impl RunOutput {
    pub fn status(&self) -> Status {
        self.certificate.verdict.status
    }

    /// Writes `<name>.json` and the sidecars into `dir`, each through a
    /// temporary file and a rename.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        for (file, bytes) in &self.sidecars {
            write_atomic(&dir.join(file), bytes)?;
        }
        let path = dir.join(format!("{}.json", self.certificate.scenario.name));
        let mut text = serde_json::to_string_pretty(&self.certificate)?;
        text.push('\n');
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

struct Outcome {
    verdict: Verdict,
    details: Value,
    sidecars: Vec<(String, Vec<u8>)>,
    thresholds: serde_json::Map<String, Value>,
}

impl Outcome {
    fn new(verdict: Verdict) -> Self {
        Self {
            verdict,
            details: Value::Null,
            sidecars: Vec::new(),
            thresholds: Default::default(),
        }
    }

    fn threshold(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.thresholds.insert(key.into(), value.into());
        self
    }
}

fn q_json(x: &Q) -> Value {
    Value::String(exact::show(x))
}

/// Runs a scenario with optional horizon and seed overrides.
pub fn run(scenario: &Scenario, horizon: Option<u64>, seed: Option<u64>) -> Result<RunOutput> {
    let mut sc = scenario.clone();
    sc.apply_overrides(horizon, seed);
    sc.validate().map_err(|(_, msg)| Error::Scenario { line: None, msg })?;
    let start = Instant::now();
    let sys = sc.system.build()?;
    let mut out = dispatch(&sc, &sys)?;
    let prefix = sc.name.clone();
    let sidecars: Vec<(String, Vec<u8>)> = out
        .sidecars
        .drain(..)
        .map(|(f, b)| (format!("{prefix}.{f}"), b))
        .collect();
    let certificate = Certificate {
        schema_version: SCHEMA_VERSION,
        environment: Environment {
            version: env!("CARGO_PKG_VERSION").into(),
            seed: sc.params.seed,
            thresholds: out.thresholds,
            alpha_convergent: sys.rotation_angle().map(RotationAngle::convergent),
        },
        scenario: sc,
        verdict: out.verdict,
        details: out.details,
        sidecars: sidecars.iter().map(|(f, _)| f.clone()).collect(),
        timing_ms: start.elapsed().as_millis() as u64,
    };
    Ok(RunOutput { certificate, sidecars })
}

fn delta(p: &Params) -> Q {
    p.delta.as_ref().expect("validated").0.clone()
}

fn cover(sys: &SystemDef, p: &Params) -> Result<Vec<(OpenRegion, OpenRegion)>> {
    let space = sys.space();
    if let Some(regions) = &p.regions {
        let built = regions.iter().map(|r| r.build(&space)).collect::<Result<Vec<_>>>()?;
        return Ok(certify::all_pairs(&built));
    }
    if let Some(n) = p.cover_arcs {
        if space.kind != SpaceKind::Circle {
            return Err(Error::Config("cover_arcs applies to the circle only".into()));
        }
        return Ok(certify::all_pairs(&certify::circle_cover(n)));
    }
    Ok(certify::default_cover(&space))
}

fn check_config(sys: &SystemDef, p: &Params) -> Result<CheckConfig> {
    let mut cfg = CheckConfig::new(delta(p), cover(sys, p)?)
        .with_horizon(p.horizon.unwrap_or(certify::DEFAULT_HORIZON))
        .with_samples(p.samples.unwrap_or(certify::DEFAULT_SAMPLES))
        .with_seed(p.seed.expect("validated"));
    if let Some(eta) = &p.eta {
        cfg = cfg.with_eta(eta.0.clone());
    }
    if let Some(g) = &p.guard {
        cfg = cfg.with_guard(g.0.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn witness_csv(v: &Verdict) -> Result<Vec<u8>> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["pair", "n", "distance", "point"])?;
    for w in &v.witnesses {
        wtr.write_record([
            w.pair.to_string(),
            w.n.to_string(),
            w.distance.to_string(),
            w.point.to_string(),
        ])?;
    }
    wtr.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn pair_outcome(verdict: Verdict, cfg: &CheckConfig) -> Result<Outcome> {
    let csv = witness_csv(&verdict)?;
    let mut out = Outcome::new(verdict)
        .threshold("guard", q_json(&cfg.guard))
        .threshold("horizon", cfg.horizon)
        .threshold("pairs", cfg.pair_cover.len());
    out.sidecars.push(("witnesses.csv".into(), csv));
    Ok(out)
}

fn instance(sc: &Scenario, sys: &SystemDef) -> Result<criterion::CriterionInstance> {
    let p = &sc.params;
    let inverse = match p.inverse.clone().unwrap_or(InverseSpec::ShiftInverse) {
        InverseSpec::ShiftInverse => RightInverse::ShiftInverse,
        InverseSpec::Zero => RightInverse::Zero,
        InverseSpec::Identity => RightInverse::Identity,
    };
    criterion::basis_instance(
        sys.clone(),
        p.support_cap.unwrap_or(3),
        p.schedule_step.unwrap_or(1),
        p.k_max.unwrap_or(64),
        inverse,
    )
}

fn dispatch(sc: &Scenario, sys: &SystemDef) -> Result<Outcome> {
    let p = &sc.params;
    match sc.check {
        CheckKind::DeltaTt => {
            let cfg = check_config(sys, p)?;
            pair_outcome(certify::check_delta_tt(sys, &cfg)?, &cfg)
        }
        CheckKind::DeltaTm => {
            let cfg = check_config(sys, p)?;
            pair_outcome(certify::check_delta_tm(sys, &cfg)?, &cfg)
        }
        CheckKind::Ufb => {
            let cfg = check_config(sys, p)?;
            let eta = cfg.eta.clone().expect("validated");
            Ok(pair_outcome(certify::check_ufb(sys, &cfg)?, &cfg)?.threshold("eta", q_json(&eta)))
        }
        CheckKind::ImplicationHarness => {
            let cfg = check_config(sys, p)?;
            let report = certify::run_implication_harness(sys, &cfg)?;
            let status = if report.holds() {
                Status::Certified
            } else {
                Status::Refuted
            };
            let note = format!(
                "UFB {:?}, delta-TM {:?}, delta-TT {:?}; {}",
                report.ufb.status,
                report.tm.status,
                report.tt.status,
                if report.holds() {
                    "implications hold".to_string()
                } else {
                    report.violations.join("; ")
                }
            );
            let mut out = Outcome::new(Verdict::new(status, Scope::UpToHorizon { horizon: cfg.horizon }, note))
                .threshold("guard", q_json(&cfg.guard))
                .threshold("horizon", cfg.horizon);
            out.details = json!({
                "ufb": report.ufb.status,
                "delta_tm": report.tm.status,
                "delta_tt": report.tt.status,
                "violations": report.violations,
            });
            Ok(out)
        }
        CheckKind::TransitivePoint => {
            let space = sys.space();
            let x = parse_point(&space, p.point.as_deref().expect("validated"))?;
            let targets = p
                .targets
                .as_ref()
                .expect("validated")
                .iter()
                .map(|r| r.build(&space))
                .collect::<Result<Vec<_>>>()?;
            let horizon = p.horizon.unwrap_or(certify::DEFAULT_HORIZON);
            let report = certify::check_delta_transitive_point(sys, &x, &targets, &delta(p), horizon)?;
            let mut out = Outcome::new(report.verdict).threshold("horizon", horizon);
            out.details = serde_json::to_value(&report.targets)?;
            Ok(out)
        }
        CheckKind::RotationRefuteTm => {
            let angle = sys.rotation_angle().expect("validated");
            let space = Space::circle();
            let arc = |r: &RegionSpec| -> Result<rotation::Arc> { Ok(ball_arc(&r.build(&space)?.balls()[0])) };
            let (u, v) = (
                arc(p.u.as_ref().expect("validated"))?,
                arc(p.v.as_ref().expect("validated"))?,
            );
            let horizon = p.horizon.unwrap_or(10_000);
            let r = rotation::refute_delta_tm(angle, &u, &v, &delta(p), horizon)?;
            let scanned = r.widened_to.unwrap_or(horizon);
            let mut scan = Vec::new();
            rotation::write_scan_csv(angle, &r.window, scanned, &mut scan)?;
            let mut failing = csv::Writer::from_writer(Vec::new());
            failing.write_record(["n"])?;
            for n in &r.failing {
                failing.write_record([n.to_string()])?;
            }
            let mut out = Outcome::new(r.verdict).threshold("horizon", scanned);
            out.details = json!({
                "window_length": q_json(&r.window.length()),
                "failing_count": r.failing.len(),
                "density": r.density,
                "expected_density": r.expected_density,
                "widened_to": r.widened_to,
            });
            out.sidecars.push(("scan.csv".into(), scan));
            out.sidecars.push((
                "failing_n.csv".into(),
                failing.into_inner().map_err(|e| Error::Io(e.into_error()))?,
            ));
            Ok(out)
        }
        CheckKind::RotationRefuteUfb => {
            let angle = sys.rotation_angle().expect("validated");
            let grid = rotation::default_eta_grid(&delta(p), p.eta_grid.unwrap_or(64));
            let horizon = p.horizon.unwrap_or(10_000);
            let r = rotation::refute_ufb(angle, &delta(p), &grid, horizon)?;
            let mut out = Outcome::new(r.verdict)
                .threshold("horizon", horizon)
                .threshold("eta_grid", grid.len());
            out.details = serde_json::to_value(&r.per_eta)?;
            Ok(out)
        }
        CheckKind::ShiftSufficiency => {
            let horizon = p.horizon.unwrap_or(shifts::DEFAULT_HORIZON);
            let r = shifts::delta_mixing_sufficiency(sys, &delta(p), horizon)?;
            let mut out = Outcome::new(r.verdict).threshold("horizon", horizon);
            if let Some(t) = r.traces.first() {
                out = out
                    .threshold("divergence", t.thresholds.divergence)
                    .threshold("return_band", t.thresholds.return_band)
                    .threshold("bounded", t.thresholds.bounded);
            }
            let mut summary = Vec::new();
            for t in &r.traces {
                let mut buf = Vec::new();
                shifts::write_trace_csv(t, &mut buf)?;
                let name = format!("{:?}", t.direction).to_lowercase();
                out.sidecars.push((format!("trace_{name}.csv"), buf));
                summary.push(json!({
                    "direction": t.direction,
                    "classification": t.classification,
                    "empirical": t.empirical,
                    "analytic": t.analytic,
                    "returns": t.returns,
                }));
            }
            out.details = Value::Array(summary);
            Ok(out)
        }
        CheckKind::CriterionDeltaHc => {
            let inst = instance(sc, sys)?;
            let k_max = inst.schedule.len();
            let r = criterion::check_delta_hc(&inst, &delta(p), k_max)?;
            let mut wtr = csv::Writer::from_writer(Vec::new());
            wtr.write_record(["condition", "sample", "k", "value"])?;
            let rows = r
                .cond1
                .iter()
                .map(|t| (1, t.sample, &t.values))
                .chain(r.cond2.iter().map(|t| (2, t.sample, &t.values)))
                .chain(r.cond3.iter().map(|t| (3, t.sample, &t.values)));
            for (c, s, values) in rows {
                for (k, x) in values.iter().enumerate() {
                    wtr.write_record([c.to_string(), s.to_string(), (k + 1).to_string(), x.to_string()])?;
                }
            }
            let mut out = Outcome::new(r.verdict.clone())
                .threshold("tol", criterion::DEFAULT_TOL)
                .threshold("k_max", k_max);
            out.details = json!({
                "samples": inst.v_sample.iter().map(format_vector).collect::<Vec<_>>(),
                "cond1_settles_at": r.cond1.iter().map(|t| t.settles_at).collect::<Vec<_>>(),
                "cond2_settles_at": r.cond2.iter().map(|t| t.settles_at).collect::<Vec<_>>(),
                "cond3_k0": r.cond3.iter().map(|t| t.k0).collect::<Vec<_>>(),
                "cond3_identically_zero": r.cond3.iter().all(|t| t.identically_zero),
            });
            out.sidecars.push((
                "criterion.csv".into(),
                wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?,
            ));
            Ok(out)
        }
        CheckKind::CriterionClassical => {
            let inst = instance(sc, sys)?;
            let tol = p
                .tol
                .as_ref()
                .map_or_else(|| exact::rat(criterion::DEFAULT_TOL), |t| t.0.clone());
            let k_max = inst.schedule.len();
            let v = criterion::check_classical_hc(&inst, &tol, k_max)?;
            Ok(Outcome::new(v).threshold("tol", q_json(&tol)).threshold("k_max", k_max))
        }
        CheckKind::SequenceMixing => {
            let space = sys.space();
            let regions = p
                .regions
                .as_ref()
                .expect("validated")
                .iter()
                .map(|r| r.build(&space))
                .collect::<Result<Vec<_>>>()?;
            let centers: Vec<SparseVec> = regions
                .iter()
                .map(|r| r.balls()[0].center.as_seq().expect("sequence space").clone())
                .collect();
            let inst = instance(sc, sys)?.with_extra_samples(centers.clone(), centers)?;
            let k_max = inst.schedule.len();
            let v = criterion::check_sequence_mixing(&inst, &delta(p), &certify::all_pairs(&regions), k_max)?;
            let csv = witness_csv(&v)?;
            let mut out = Outcome::new(v)
                .threshold("guard", criterion::DEFAULT_TOL)
                .threshold("k_max", k_max);
            out.sidecars.push(("witnesses.csv".into(), csv));
            Ok(out)
        }
        CheckKind::BuildVector => {
            let SystemDef::RolewiczLambdaB { lambda } = sys else {
                unreachable!("validated")
            };
            let targets = match &p.target_vectors {
                Some(list) => list.iter().map(|t| parse_vector(t)).collect::<Result<Vec<_>>>()?,
                None => sampling::random_vectors(
                    p.random_targets.expect("validated"),
                    p.support_cap.unwrap_or(3),
                    p.seed.expect("validated"),
                ),
            };
            let d = delta(p);
            let hv = criterion::build_delta_hc_vector(lambda, &targets, &d)?;
            let balls = criterion::target_balls(&targets, &d)?;
            let horizon = hv.plan.last().map_or(0, |s| s.m) + 1;
            let report = certify::check_delta_transitive_point(sys, &Pt::Seq(hv.x.clone()), &balls, &d, horizon)?;
            let mut plan = Vec::new();
            criterion::write_plan_csv(&hv.plan, &mut plan)?;
            let mut out = Outcome::new(report.verdict).threshold("horizon", horizon);
            out.details = json!({
                "x": format_vector(&hv.x),
                "targets": targets.iter().map(format_vector).collect::<Vec<_>>(),
                "plan": hv.plan,
            });
            out.sidecars.push(("plan.csv".into(), plan));
            Ok(out)
        }
    }
}

/// Result of replaying a certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayReport {
    pub rerun: Certificate,
    /// JSON paths that differ, empty on a match.
    pub mismatches: Vec<String>,
}

impl ReplayReport {
    pub fn matches(&self) -> bool {
        self.mismatches.is_empty()
    }
}

fn diff(path: &str, a: &Value, b: &Value, out: &mut Vec<String>) {
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            let mut keys: Vec<&String> = x.keys().chain(y.keys()).collect();
            keys.sort();
            keys.dedup();
            for k in keys {
                let sub = format!("{path}.{k}");
                match (x.get(k), y.get(k)) {
                    (Some(p), Some(q)) => diff(&sub, p, q, out),
                    _ => out.push(sub),
                }
            }
        }
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => {
            for (i, (p, q)) in x.iter().zip(y).enumerate() {
                diff(&format!("{path}[{i}]"), p, q, out);
            }
        }
        _ if a != b => out.push(path.to_string()),
        _ => {}
    }
}

/// Reruns the echoed scenario and compares everything except timing.
pub fn replay(certificate_text: &str) -> Result<ReplayReport> {
    let raw: Value = serde_json::from_str(certificate_text)?;
    match raw.get("schema_version").and_then(Value::as_u64) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        other => {
            return Err(Error::Schema(format!(
                "found schema_version {other:?}, supported {SCHEMA_VERSION}"
            )))
        }
    }
    let cert: Certificate = serde_json::from_value(raw.clone()).map_err(|e| Error::Schema(e.to_string()))?;
    let rerun = run(&cert.scenario, None, None)?.certificate;
    let mut fresh = serde_json::to_value(&rerun)?;
    let mut old = raw;
    for v in [&mut fresh, &mut old] {
        if let Some(o) = v.as_object_mut() {
            o.remove("timing_ms");
        }
    }
    let mut mismatches = Vec::new();
    diff("$", &old, &fresh, &mut mismatches);
    Ok(ReplayReport { rerun, mismatches })
}

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../scenarios/", $name, ".toml")))),*]
    };
}

const BUNDLED: &[(&str, &str)] = bundled![
    "identity-capped-ufb",
    "identity-capped-not-delta-tt",
    "implication-chain-capped-identity",
    "rotation-delta-tt",
    "rotation-not-delta-tm",
    "rotation-half-delta-tm",
    "rotation-not-ufb",
    "implication-chain-rotation",
    "rotation-rational-not-delta-tt",
    "unilateral-mixing-sufficiency",
    "unilateral-delta-tm",
    "bilateral-mixing-sufficiency",
    "bilateral-expanding-not-delta-tt",
    "block-oscillating-sup-not-lim",
    "rolewicz-lambdaB-delta-hc",
    "rolewicz-lambdaB-classical-hc",
    "rolewicz-lambdaB-sequence-mixing",
    "rolewicz-lambdaB-hc-vector",
    "rolewicz-lambdaB-transitive-point",
];

/// Bundled scenarios, parsed.
pub fn bundled() -> Vec<Scenario> {
    BUNDLED
        .iter()
        .map(|(name, text)| {
            let sc = Scenario::parse(text).unwrap_or_else(|e| panic!("bundled scenario {name}: {e}"));
            assert_eq!(&sc.name, name, "bundled file name and scenario name differ");
            sc
        })
        .collect()
}

/// Finds a bundled scenario by name.
pub fn find_bundled(name: &str) -> Option<Scenario> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| Scenario::parse(text).expect("bundled scenarios parse"))
}

/// Loads a scenario from a path, or by bundled name when no such file exists.
pub fn load(arg: &str) -> Result<Scenario> {
    let path = Path::new(arg);
    if path.exists() {
        return Scenario::from_file(path);
    }
    find_bundled(arg).ok_or_else(|| Error::Scenario {
        line: None,
        msg: format!("no file or bundled scenario `{arg}`"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenarios_parse() {
        let all = bundled();
        assert!(all.len() >= 10);
        for sc in &all {
            assert!(!sc.statement.is_empty());
        }
        assert!(find_bundled("rolewicz-lambdaB-delta-hc").is_some());
        assert!(find_bundled("implication-chain-rotation").is_some());
    }

    #[test]
    fn parse_errors_carry_lines() {
        let text = "name = \"x\"\nstatement = \"s\"\ncheck = \"nope\"\n";
        match Scenario::parse(text) {
            Err(Error::Scenario { line: Some(3), .. }) => {}
            other => panic!("{other:?}"),
        }
        let text =
            "name = \"x\"\nstatement = \"s\"\ncheck = \"ufb\"\n[system]\nkind = \"lambda_b\"\nlambda = \"1/2\"\n";
        match Scenario::parse(text) {
            Err(Error::Scenario { line: Some(5), msg }) => assert!(msg.contains("lambda")),
            other => panic!("{other:?}"),
        }
        let text = "name = \"x\"\nstatement = \"s\"\ncheck = \"ufb\"\n[system]\nkind = \"identity\"\nspace = \"circle\"\n[params]\ndelta = 1\n";
        match Scenario::parse(text) {
            Err(Error::Scenario { msg, .. }) => assert!(msg.contains("seed")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn numbers_and_points() {
        let n: Num = toml::from_str::<toml::Table>("a = 0.1").unwrap()["a"]
            .clone()
            .try_into()
            .unwrap();
        assert_eq!(n.0, exact::ratio(1, 10));
        let v = parse_vector("0:1, 2:-1/2").unwrap();
        assert_eq!(format_vector(&v), "0:1, 2:-1/2");
        assert_eq!(parse_vector(&format_vector(&v)).unwrap(), v);
        let p = parse_point(&Space::capped_plane(), "(3, -1/2)").unwrap();
        assert_eq!(p, Pt::plane(exact::int(3), exact::ratio(-1, 2)));
        assert!(parse_point(&Space::sequence(Laterality::Unilateral, 4), "-1:1").is_err());
    }

    #[test]
    fn run_and_replay() {
        let sc = find_bundled("identity-capped-ufb").unwrap();
        let out = run(&sc, None, None).unwrap();
        assert_eq!(out.status(), Status::Certified);
        let text = serde_json::to_string_pretty(&out.certificate).unwrap();
        assert!(replay(&text).unwrap().matches());

        let mut edited: Value = serde_json::from_str(&text).unwrap();
        edited["verdict"]["witnesses"][0]["n"] = json!(5);
        let r = replay(&edited.to_string()).unwrap();
        assert_eq!(r.mismatches, vec!["$.verdict.witnesses[0].n".to_string()]);

        let reseeded = run(&sc, None, Some(99)).unwrap();
        let text = serde_json::to_string(&reseeded.certificate).unwrap();
        assert!(replay(&text).unwrap().matches());

        edited["schema_version"] = json!(7);
        assert!(matches!(replay(&edited.to_string()), Err(Error::Schema(_))));
    }
}
