//! Scenario files, certificates, and the seeded scenario generator.
//!
//! A scenario names a construction (`kind`) and the objects it runs on. Most
//! objects accept a shorthand (`{"standard_module": [p, n]}`,
//! `{"cyclic": 4}`, `"regular"`, `"concrete"`, `{"random": {...}}`) or an
//! explicit matrix payload. Unknown fields are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::de::{DeserializeOwned, Error as _};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::cpmaps::{
    check_covariant_cp, check_module_cp, cp_from_representation, random_covariant_cp,
    random_module_cp, CovariantCPMap, ModuleCPMap, ModuleCpMapJson,
};
use crate::crossed::{
    build_crossed_module, check_crossed_algebra, check_crossed_module, check_integral_form,
    check_integral_stinespring, induced_cp, StructureDump,
};
use crate::error::Error;
use crate::hilbmod::{
    check_dynamical_system, check_module_axioms, standard_action, FiniteGroup, GroupJson,
    HilbertModule, ModuleDynamicalSystem, ModuleJson, ModuleRepresentation, StandardAction,
    UnitaryRep,
};
use crate::numkernel::{dist, eye, fro, relative, Mat, MatJson};
use crate::rng::{random_unitary, SeedStream};
use crate::stinespring::{
    dilate_covariant, dilate_module_cp, uniqueness_intertwiners, verify_covariant_dilation,
    verify_dilation, AltDilation, CheckSet, Dims,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const CERTIFICATE_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// Preconditions and constructions refuse inputs at `max(tol, GATE_FLOOR)`;
/// certificates judge every residual against `tol` itself.
pub const GATE_FLOOR: f64 = 1e-8;

pub const MAX_MODULE_DIM: usize = 8;
pub const MAX_GROUP_ORDER: usize = 24;
pub const MAX_AMPLIFICATION: usize = 8;

const STREAM_CONJ_H: u64 = 16;
const STREAM_CONJ_K: u64 = 17;
const STREAM_GAMMA: u64 = 20;
const STREAM_DELTA: u64 = 21;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("compute error: {0}")]
    Compute(#[from] Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Dilate,
    DilateCovariant,
    Crossed,
    Verify,
    Uniqueness,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Dilate => "dilate",
            Kind::DilateCovariant => "dilate-covariant",
            Kind::Crossed => "crossed",
            Kind::Verify => "verify",
            Kind::Uniqueness => "uniqueness",
        }
    }

    fn needs_group(&self) -> bool {
        matches!(self, Kind::DilateCovariant | Kind::Crossed)
    }
}

fn from_value<T: DeserializeOwned, E: serde::de::Error>(what: &str, v: Value) -> Result<T, E> {
    serde_json::from_value(v).map_err(|e| E::custom(format!("{what}: {e}")))
}

/// The single key of a one-entry object, if `v` is one.
fn single_key(v: &Value) -> Option<(&str, &Value)> {
    match v {
        Value::Object(m) if m.len() == 1 => m.iter().next().map(|(k, v)| (k.as_str(), v)),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ModuleSpec {
    Standard { standard_module: [usize; 2] },
    Explicit(ModuleJson),
}

impl<'de> Deserialize<'de> for ModuleSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        match single_key(&v) {
            Some(("standard_module", pn)) => Ok(ModuleSpec::Standard {
                standard_module: from_value("module.standard_module", pn.clone())?,
            }),
            _ => Ok(ModuleSpec::Explicit(from_value("module", v)?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum GroupSpec {
    Named(String),
    Cyclic { cyclic: usize },
    Symmetric { symmetric: usize },
    Table(GroupJson),
}

impl<'de> Deserialize<'de> for GroupSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        if let Value::String(s) = &v {
            return Ok(GroupSpec::Named(s.clone()));
        }
        match single_key(&v) {
            Some(("cyclic", k)) => Ok(GroupSpec::Cyclic {
                cyclic: from_value("group.cyclic", k.clone())?,
            }),
            Some(("symmetric", n)) => Ok(GroupSpec::Symmetric {
                symmetric: from_value("group.symmetric", n.clone())?,
            }),
            _ => Ok(GroupSpec::Table(from_value("group", v)?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum RepSpec {
    /// `"trivial"`, `"regular"`, `"sign"`, `"permutation"` or `"standard"`.
    Named(String),
    Trivial {
        trivial: usize,
    },
    Character {
        character: usize,
    },
    Mats {
        mats: Vec<MatJson>,
    },
    Sum {
        sum: Vec<RepSpec>,
    },
    Tensor {
        tensor: Vec<RepSpec>,
    },
}

impl<'de> Deserialize<'de> for RepSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        if let Value::String(s) = &v {
            return Ok(RepSpec::Named(s.clone()));
        }
        match single_key(&v) {
            Some(("trivial", x)) => Ok(RepSpec::Trivial {
                trivial: from_value("representation.trivial", x.clone())?,
            }),
            Some(("character", x)) => Ok(RepSpec::Character {
                character: from_value("representation.character", x.clone())?,
            }),
            Some(("mats", x)) => Ok(RepSpec::Mats {
                mats: from_value("representation.mats", x.clone())?,
            }),
            Some(("sum", x)) => Ok(RepSpec::Sum {
                sum: from_value("representation.sum", x.clone())?,
            }),
            Some(("tensor", x)) => Ok(RepSpec::Tensor {
                tensor: from_value("representation.tensor", x.clone())?,
            }),
            _ => Err(D::Error::custom(
                "representation: expected a name or one of trivial, character, mats, sum, tensor",
            )),
        }
    }
}

/// Group action on the module: a standard action `x -> gamma_t x delta_t*`
/// or explicit module maps `eta_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ActionSpec {
    Standard { gamma: RepSpec, delta: RepSpec },
    Explicit { eta: Vec<MatJson> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpec {
    pub amplification: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_dim: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeroSpec {
    pub h_dim: usize,
    pub k_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum MapSpec {
    /// `"concrete"`: `Phi(x) = x` on a standard module.
    Named(String),
    Random {
        random: RandomSpec,
    },
    Zero {
        zero: ZeroSpec,
    },
    Explicit(ModuleCpMapJson),
}

impl<'de> Deserialize<'de> for MapSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        if let Value::String(s) = &v {
            return Ok(MapSpec::Named(s.clone()));
        }
        match single_key(&v) {
            Some(("random", x)) => Ok(MapSpec::Random {
                random: from_value("cp_map.random", x.clone())?,
            }),
            Some(("zero", x)) => Ok(MapSpec::Zero {
                zero: from_value("cp_map.zero", x.clone())?,
            }),
            _ => Ok(MapSpec::Explicit(from_value("cp_map", v)?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub module: ModuleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<ActionSpec>,
    pub cp_map: MapSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<RepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_prime: Option<RepSpec>,
}

pub fn parse_scenario(bytes: &[u8]) -> Result<Scenario, ScenarioError> {
    let s: Scenario =
        serde_json::from_slice(bytes).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    if s.schema != SCHEMA_VERSION {
        return Err(ScenarioError::Parse(format!(
            "schema: unsupported version {} (expected {SCHEMA_VERSION})",
            s.schema
        )));
    }
    Ok(s)
}

fn invalid(what: &str, e: impl std::fmt::Display) -> ScenarioError {
    ScenarioError::Validation(format!("{what}: {e}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Cyclic(usize),
    Symmetric(usize),
    Other,
}

fn resolve_group(spec: &GroupSpec) -> Result<(FiniteGroup, Family), ScenarioError> {
    let (g, fam) = match spec {
        GroupSpec::Named(s) => match s.as_str() {
            "trivial" => (FiniteGroup::trivial(), Family::Cyclic(1)),
            "z2" => (FiniteGroup::cyclic(2), Family::Cyclic(2)),
            "z4" => (FiniteGroup::cyclic(4), Family::Cyclic(4)),
            "s3" => (FiniteGroup::symmetric(3), Family::Symmetric(3)),
            other => return Err(invalid("group", format!("unknown group name {other:?}"))),
        },
        GroupSpec::Cyclic { cyclic: k } => {
            if *k == 0 || *k > MAX_GROUP_ORDER {
                return Err(invalid(
                    "group.cyclic",
                    format!("order {k} outside 1..={MAX_GROUP_ORDER}"),
                ));
            }
            (FiniteGroup::cyclic(*k), Family::Cyclic(*k))
        }
        GroupSpec::Symmetric { symmetric: n } => {
            if *n == 0 || *n > 4 {
                return Err(invalid(
                    "group.symmetric",
                    format!("S_{n} outside S_1..=S_4"),
                ));
            }
            (FiniteGroup::symmetric(*n), Family::Symmetric(*n))
        }
        GroupSpec::Table(t) => {
            let g = t.to_group().map_err(|e| invalid("group", e))?;
            (g, Family::Other)
        }
    };
    if g.order() > MAX_GROUP_ORDER {
        return Err(invalid(
            "group",
            format!("order {} exceeds {MAX_GROUP_ORDER}", g.order()),
        ));
    }
    Ok((g, fam))
}

fn resolve_rep(
    spec: &RepSpec,
    g: &FiniteGroup,
    fam: Family,
    what: &str,
) -> Result<UnitaryRep, ScenarioError> {
    let named_symmetric =
        |f: fn(&FiniteGroup, usize) -> crate::Result<UnitaryRep>, name: &str| match fam {
            Family::Symmetric(n) => f(g, n).map_err(|e| invalid(what, e)),
            _ => Err(invalid(what, format!("{name:?} needs a symmetric group"))),
        };
    match spec {
        RepSpec::Named(s) => match s.as_str() {
            "trivial" => Ok(UnitaryRep::trivial(g, 1)),
            "regular" => Ok(UnitaryRep::regular(g)),
            "sign" => named_symmetric(UnitaryRep::sign, s),
            "permutation" => named_symmetric(UnitaryRep::permutation, s),
            "standard" => named_symmetric(UnitaryRep::standard, s),
            other => Err(invalid(
                what,
                format!("unknown representation name {other:?}"),
            )),
        },
        RepSpec::Trivial { trivial } => Ok(UnitaryRep::trivial(g, *trivial)),
        RepSpec::Character { character } => match fam {
            Family::Cyclic(k) => {
                UnitaryRep::character(g, k, *character).map_err(|e| invalid(what, e))
            }
            _ => Err(invalid(what, "characters need a cyclic group")),
        },
        RepSpec::Mats { mats } => {
            let ms = mats
                .iter()
                .map(Mat::try_from)
                .collect::<crate::Result<Vec<_>>>()
                .map_err(|e| invalid(what, e))?;
            UnitaryRep::new(g.clone(), ms).map_err(|e| invalid(what, e))
        }
        RepSpec::Sum { sum } => {
            let mut out = UnitaryRep::trivial(g, 0);
            for s in sum {
                out = out
                    .direct_sum(&resolve_rep(s, g, fam, what)?)
                    .map_err(|e| invalid(what, e))?;
            }
            Ok(out)
        }
        RepSpec::Tensor { tensor } => {
            let mut out = UnitaryRep::trivial(g, 1);
            for s in tensor {
                out = out
                    .tensor(&resolve_rep(s, g, fam, what)?)
                    .map_err(|e| invalid(what, e))?;
            }
            Ok(out)
        }
    }
}

fn check_bounds(p: usize, n: usize) -> Result<(), ScenarioError> {
    if p == 0 || n == 0 || p > MAX_MODULE_DIM || n > MAX_MODULE_DIM {
        return Err(ScenarioError::Compute(Error::Bounds(format!(
            "standard module dimensions ({p}, {n}) outside 1..={MAX_MODULE_DIM}"
        ))));
    }
    Ok(())
}

enum Action {
    Standard(StandardAction),
    General(ModuleDynamicalSystem),
}

impl Action {
    fn system(&self) -> &ModuleDynamicalSystem {
        match self {
            Action::Standard(sa) => &sa.system,
            Action::General(sys) => sys,
        }
    }
}

/// A scenario with every object built and its preconditions checked.
pub struct Resolved {
    pub kind: Kind,
    pub tol: f64,
    pub gate: f64,
    pub seed: u64,
    pub map: ModuleCPMap,
    pub covariant: Option<CovariantCPMap>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunOptions {
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub dump_structure: bool,
}

pub fn resolve(s: &Scenario, opts: &RunOptions) -> Result<Resolved, ScenarioError> {
    let tol = opts.tol.or(s.tolerance).unwrap_or(DEFAULT_TOLERANCE);
    if !(tol.is_finite() && tol > 0.0) {
        return Err(invalid(
            "tolerance",
            format!("{tol} is not a positive number"),
        ));
    }
    let gate = tol.max(GATE_FLOOR);
    let seed = opts.seed.unwrap_or(s.seed);

    let (module, standard) = match &s.module {
        ModuleSpec::Standard {
            standard_module: [p, n],
        } => {
            check_bounds(*p, *n)?;
            (HilbertModule::standard(*p, *n), Some((*p, *n)))
        }
        ModuleSpec::Explicit(j) => {
            let m = j.to_module().map_err(|e| invalid("module", e))?;
            let rep = check_module_axioms(&m, gate).map_err(|e| invalid("module", e))?;
            if !rep.passes(gate) {
                return Err(invalid("module", format!("module axioms fail: {rep:?}")));
            }
            (m, None)
        }
    };

    if s.kind.needs_group() && s.group.is_none() {
        return Err(invalid(
            "group",
            format!("kind {} needs a group", s.kind.as_str()),
        ));
    }
    if s.kind == Kind::Dilate
        && (s.group.is_some() || s.action.is_some() || s.u.is_some() || s.u_prime.is_some())
    {
        return Err(invalid(
            "group",
            "kind dilate takes no group data; use dilate-covariant",
        ));
    }
    if s.group.is_none() && (s.action.is_some() || s.u.is_some() || s.u_prime.is_some()) {
        return Err(invalid("group", "action, u and u_prime need a group"));
    }

    let grp = s.group.as_ref().map(resolve_group).transpose()?;
    let action = match &grp {
        None => None,
        Some((g, fam)) => Some(match (&s.action, standard) {
            (Some(ActionSpec::Standard { gamma, delta }), Some(_)) => {
                let gamma = resolve_rep(gamma, g, *fam, "action.gamma")?;
                let delta = resolve_rep(delta, g, *fam, "action.delta")?;
                let sa = standard_action(&gamma, &delta).map_err(|e| invalid("action", e))?;
                if sa.system.module() != &module {
                    return Err(invalid(
                        "action",
                        "gamma and delta dimensions must match the standard module",
                    ));
                }
                Action::Standard(sa)
            }
            (Some(ActionSpec::Standard { .. }), None) => {
                return Err(invalid(
                    "action",
                    "gamma/delta need a standard module; give eta instead",
                ))
            }
            (Some(ActionSpec::Explicit { eta }), _) => {
                let eta = eta
                    .iter()
                    .map(Mat::try_from)
                    .collect::<crate::Result<Vec<_>>>()
                    .map_err(|e| invalid("action.eta", e))?;
                let sys = ModuleDynamicalSystem::from_eta(g.clone(), module.clone(), eta)
                    .map_err(|e| invalid("action", e))?;
                Action::General(sys)
            }
            (None, Some((p, n))) => {
                let sa = standard_action(&UnitaryRep::trivial(g, p), &UnitaryRep::trivial(g, n))
                    .map_err(|e| invalid("action", e))?;
                Action::Standard(sa)
            }
            (None, None) => {
                Action::General(ModuleDynamicalSystem::trivial(g.clone(), module.clone()))
            }
        }),
    };
    if let Some(a) = &action {
        let rep = check_dynamical_system(a.system(), gate).map_err(|e| invalid("action", e))?;
        if !rep.passes(gate) {
            return Err(invalid(
                "action",
                format!("not a module dynamical system: {rep:?}"),
            ));
        }
    }

    let explicit_reps = || -> Result<(Option<UnitaryRep>, Option<UnitaryRep>), ScenarioError> {
        let Some((g, fam)) = &grp else {
            return Ok((None, None));
        };
        let u =
            s.u.as_ref()
                .map(|r| resolve_rep(r, g, *fam, "u"))
                .transpose()?;
        let up = s
            .u_prime
            .as_ref()
            .map(|r| resolve_rep(r, g, *fam, "u_prime"))
            .transpose()?;
        Ok((u, up))
    };

    let (map, gen_reps): (ModuleCPMap, Option<(UnitaryRep, UnitaryRep)>) = match &s.cp_map {
        MapSpec::Named(name) if name == "concrete" => {
            let (p, n) = standard
                .ok_or_else(|| invalid("cp_map", "\"concrete\" needs a standard module"))?;
            let pi = ModuleRepresentation::concrete_standard(p, n);
            let map = cp_from_representation(&pi, &eye(n), &eye(p))?;
            let reps = match &action {
                Some(Action::Standard(sa)) => Some((sa.delta.clone(), sa.gamma.clone())),
                _ => None,
            };
            (map, reps)
        }
        MapSpec::Named(other) => {
            return Err(invalid("cp_map", format!("unknown map name {other:?}")))
        }
        MapSpec::Zero { zero } => (ModuleCPMap::zero(&module, zero.h_dim, zero.k_dim), None),
        MapSpec::Explicit(j) => (
            j.to_map(&module, gate).map_err(|e| invalid("cp_map", e))?,
            None,
        ),
        MapSpec::Random { random } => {
            let m = random.amplification;
            if m == 0 || m > MAX_AMPLIFICATION {
                return Err(ScenarioError::Compute(Error::Bounds(format!(
                    "amplification {m} outside 1..={MAX_AMPLIFICATION}"
                ))));
            }
            let (p, n) =
                standard.ok_or_else(|| invalid("cp_map", "random maps need a standard module"))?;
            match &action {
                None => {
                    let h = random.h_dim.unwrap_or(n);
                    let k = random.k_dim.unwrap_or(p * m);
                    (
                        random_module_cp(p, n, m, h, k, seed)
                            .map_err(|e| invalid("cp_map.random", e))?,
                        None,
                    )
                }
                Some(Action::Standard(sa)) => {
                    if random.h_dim.is_some()
                        || random.k_dim.is_some()
                        || s.u.is_some()
                        || s.u_prime.is_some()
                    {
                        return Err(invalid(
                            "cp_map.random",
                            "covariant random maps fix h_dim, k_dim, u and u_prime from the seed",
                        ));
                    }
                    let out = random_covariant_cp(sa, m, seed)?;
                    (out.map.base, Some((out.map.u, out.map.u_prime)))
                }
                Some(Action::General(_)) => {
                    return Err(invalid(
                        "cp_map.random",
                        "covariant random maps need a gamma/delta action",
                    ))
                }
            }
        }
    };
    let cp = check_module_cp(&map, gate)?;
    cp.require(gate)?;

    let covariant = match (&grp, action) {
        (None, _) | (_, None) => None,
        (Some((g, _)), Some(a)) => {
            let (u_x, up_x) = explicit_reps()?;
            let (u, up) = match gen_reps {
                Some((u, up)) => (u_x.unwrap_or(u), up_x.unwrap_or(up)),
                None => (
                    u_x.unwrap_or_else(|| UnitaryRep::trivial(g, map.h_dim)),
                    up_x.unwrap_or_else(|| UnitaryRep::trivial(g, map.k_dim)),
                ),
            };
            let cov = CovariantCPMap::new(map.clone(), a.system().clone(), u, up)
                .map_err(|e| invalid("u", e))?;
            let rep = check_covariant_cp(&cov, gate)?;
            if rep.max_residual() > gate {
                return Err(ScenarioError::Compute(Error::NotCovariant {
                    residual: rep.max_residual(),
                }));
            }
            Some(cov)
        }
    };
    Ok(Resolved {
        kind: s.kind,
        tol,
        gate,
        seed,
        map,
        covariant,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum CheckEntry {
    Residual {
        value: f64,
        verdict: Verdict,
    },
    Rank {
        achieved: usize,
        required: usize,
        singular_values: Vec<f64>,
        verdict: Verdict,
    },
}

impl CheckEntry {
    pub fn verdict(&self) -> Verdict {
        match self {
            CheckEntry::Residual { verdict, .. } | CheckEntry::Rank { verdict, .. } => *verdict,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub scenario: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedRank {
    pub rank: usize,
    pub of: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub certificate_schema: u32,
    pub version: String,
    pub kind: Kind,
    pub scenario_digest: String,
    pub provenance: Provenance,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Dims>,
    pub checks: BTreeMap<String, CheckEntry>,
    /// Checks not run, with the reason.
    pub skipped: BTreeMap<String, String>,
    /// Ranks recorded for information only.
    pub observed: BTreeMap<String, ObservedRank>,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<StructureDump>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<f64>,
}

impl Certificate {
    fn new(kind: Kind, digest: String, provenance: Provenance, tol: f64) -> Self {
        Self {
            certificate_schema: CERTIFICATE_SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION").to_string(),
            kind,
            scenario_digest: digest,
            provenance,
            tolerance: tol,
            dims: None,
            checks: BTreeMap::new(),
            skipped: BTreeMap::new(),
            observed: BTreeMap::new(),
            passed: true,
            structure: None,
            duration_ms: None,
        }
    }

    /// Adds `checks`; verdicts depend only on the values and the tolerance.
    fn absorb(&mut self, checks: CheckSet) {
        let tol = self.tolerance;
        for (name, v) in checks.residuals {
            // JSON has no infinities; an unbounded residual becomes f64::MAX and fails.
            let value = if v.is_finite() { v } else { f64::MAX };
            let verdict = if value >= 0.0 && value <= tol {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            self.checks
                .insert(name, CheckEntry::Residual { value, verdict });
        }
        for (name, r) in checks.ranks {
            let singular_values = checks
                .singular_values
                .get(&name)
                .cloned()
                .unwrap_or_default();
            let verdict = if r.achieved == r.required {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            self.checks.insert(
                name,
                CheckEntry::Rank {
                    achieved: r.achieved,
                    required: r.required,
                    singular_values,
                    verdict,
                },
            );
        }
        self.passed = self.checks.values().all(|c| c.verdict() == Verdict::Pass);
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|(_, c)| c.verdict() == Verdict::Fail)
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

pub fn digest(bytes: &[u8]) -> String {
    let h = Sha256::digest(bytes);
    let mut s = String::with_capacity(71);
    s.push_str("sha256:");
    for b in h {
        let _ = write!(s, "{b:02x}");
    }
    s
}

fn positivity_residual(min_eig: f64) -> f64 {
    (-min_eig).max(0.0)
}

/// Runs a parsed scenario. `name` is recorded as provenance.
pub fn run(
    s: &Scenario,
    bytes: &[u8],
    name: &str,
    opts: &RunOptions,
) -> Result<Certificate, ScenarioError> {
    let res = resolve(s, opts)?;
    let tol = res.tol;
    let mut cert = Certificate::new(
        res.kind,
        digest(bytes),
        Provenance {
            scenario: name.to_string(),
            seed: res.seed,
        },
        tol,
    );
    match res.kind {
        Kind::Dilate => {
            let d = dilate_module_cp(&res.map, res.gate)?;
            let c = verify_dilation(&res.map, &d, tol)?;
            cert.dims = Some(c.dims);
            cert.absorb(c.checks);
        }
        Kind::DilateCovariant => {
            let phi = res
                .covariant
                .as_ref()
                .expect("covariant kinds resolve a group");
            let d = dilate_covariant(phi, res.gate)?;
            let c = verify_covariant_dilation(phi, &d, tol)?;
            cert.dims = Some(c.dims);
            cert.absorb(c.checks);
        }
        Kind::Crossed => run_crossed(&res, &mut cert, opts)?,
        Kind::Uniqueness => run_uniqueness(&res, &mut cert)?,
        Kind::Verify => run_verify(&res, &mut cert)?,
    }
    Ok(cert)
}

fn run_crossed(
    res: &Resolved,
    cert: &mut Certificate,
    opts: &RunOptions,
) -> Result<(), ScenarioError> {
    let tol = res.tol;
    let phi = res
        .covariant
        .as_ref()
        .expect("covariant kinds resolve a group");
    let cm = build_crossed_module(&phi.system)?;
    let ca = cm.algebra();

    let mut checks = CheckSet::default();
    let arep = check_crossed_algebra(ca, res.seed);
    checks.residual("crossed_associativity", arep.associativity);
    checks.residual("crossed_anti_multiplicative", arep.anti_multiplicative);
    checks.residual("crossed_involutive", arep.involutive);
    checks.residual("crossed_conjugate_linear", arep.conjugate_linear);
    let mrep = check_crossed_module(&cm, res.gate, res.seed)?;
    checks.residual("crossed_module_linearity", mrep.linearity);
    checks.residual("crossed_module_action", mrep.action);
    checks.residual("crossed_module_symmetry", mrep.symmetry);
    checks.residual(
        "crossed_module_positivity",
        positivity_residual(mrep.positivity_min_eig),
    );
    cert.observed.insert(
        "crossed_module_fullness".into(),
        ObservedRank {
            rank: mrep.fullness.0,
            of: mrep.fullness.1,
        },
    );

    let ind = induced_cp(phi, &cm, res.gate)?;
    let dcert = verify_covariant_dilation(phi, &ind.dilation, tol)?;
    cert.dims = Some(dcert.dims);
    checks.extend(dcert.checks);
    let covrep = ind.dilation.covariant_representation(phi)?;
    let form = check_integral_form(&covrep, &cm, res.gate)?;
    checks.extend(form.checks);
    if let Some(reason) = form.skipped {
        cert.skipped
            .insert("integral_form_nondegeneracy".into(), reason.into());
    }
    checks.extend(ind.checks);
    checks.extend(check_integral_stinespring(phi, &ind.dilation, &cm)?);
    cert.absorb(checks);
    if opts.dump_structure {
        cert.structure = Some(ca.structure_constants());
    }
    Ok(())
}

fn run_uniqueness(res: &Resolved, cert: &mut Certificate) -> Result<(), ScenarioError> {
    let tol = res.tol;
    let streams = SeedStream::new(res.seed);
    let (base, alt, cov_reps, dims) = match &res.covariant {
        Some(phi) => {
            let d = dilate_covariant(phi, res.gate)?;
            let c = verify_covariant_dilation(phi, &d, tol)?;
            let alt = AltDilation::from_covariant(&d);
            let reps = (d.v.clone(), d.w.clone());
            (d.base, alt, Some(reps), c.dims)
        }
        None => {
            let d = dilate_module_cp(&res.map, res.gate)?;
            let c = verify_dilation(&res.map, &d, tol)?;
            let alt = AltDilation::from_dilation(&d);
            (d, alt, None, c.dims)
        }
    };
    let r1 = random_unitary(base.h_phi(), &mut streams.stream(STREAM_CONJ_H));
    let r2 = random_unitary(base.k_phi(), &mut streams.stream(STREAM_CONJ_K));
    let alt = alt.conjugated(&r1, &r2);
    let u = uniqueness_intertwiners(
        &base,
        cov_reps.as_ref().map(|(v, w)| (v, w)),
        &alt,
        res.gate,
    )?;
    let mut checks = u.checks;
    checks.residual("u1_recovery", relative(dist(&u.u1, &r1), fro(&r1)));
    checks.residual("u2_recovery", relative(dist(&u.u2, &r2), fro(&r2)));
    cert.dims = Some(dims);
    cert.absorb(checks);
    Ok(())
}

fn run_verify(res: &Resolved, cert: &mut Certificate) -> Result<(), ScenarioError> {
    let mut checks = CheckSet::default();
    let module = &res.map.module;
    let ax = check_module_axioms(module, res.gate)?;
    checks.residual("module_linearity", ax.linearity);
    checks.residual("module_action", ax.action);
    checks.residual("module_symmetry", ax.symmetry);
    checks.residual(
        "module_positivity",
        positivity_residual(ax.positivity_min_eig),
    );
    let full = module.fullness();
    let n = module.algebra().dim();
    checks.rank("module_fullness", full, n);
    let cp = check_module_cp(&res.map, res.gate)?;
    checks.residual("cp_identity", cp.identity);
    checks.residual("cp_hermiticity", cp.hermiticity);
    checks.residual("cp_choi_positivity", positivity_residual(cp.choi_min_eig));
    if let Some(phi) = &res.covariant {
        let dynamics = check_dynamical_system(&phi.system, res.gate)?;
        checks.residual("dynamics", dynamics.max_residual());
        let cov = check_covariant_cp(phi, res.gate)?;
        checks.residual("covariance", cov.covariance);
        checks.residual("companion_covariance", cov.companion_covariance);
        checks.residual("u_unitary_rep", cov.u_residual);
        checks.residual("u_prime_unitary_rep", cov.u_prime_residual);
    }
    cert.absorb(checks);
    Ok(())
}

/// Parses and runs scenario bytes.
pub fn run_scenario_bytes(
    bytes: &[u8],
    name: &str,
    opts: &RunOptions,
) -> Result<Certificate, ScenarioError> {
    let s = parse_scenario(bytes)?;
    run(&s, bytes, name, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Table,
}

pub fn emit_certificate(cert: &Certificate, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(cert).expect("certificates serialize");
            s.push('\n');
            s
        }
        Format::Table => render_table(cert),
    }
}

fn render_table(cert: &Certificate) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "scenario   {} ({})",
        cert.provenance.scenario, cert.scenario_digest
    );
    let _ = writeln!(
        s,
        "kind       {}   seed {}   tolerance {:e}",
        cert.kind.as_str(),
        cert.provenance.seed,
        cert.tolerance
    );
    if let Some(d) = &cert.dims {
        let _ = writeln!(
            s,
            "dims       H={} K={} H_phi={} K_phi={}",
            d.h, d.k, d.h_phi, d.k_phi
        );
    }
    let width = cert
        .checks
        .keys()
        .map(|k| k.len())
        .max()
        .unwrap_or(5)
        .max(5);
    let _ = writeln!(
        s,
        "{:<width$}  {:>12}  {:>12}  verdict",
        "check", "value", "required"
    );
    for (name, c) in &cert.checks {
        let (value, required) = match c {
            CheckEntry::Residual { value, .. } => {
                (format!("{value:.3e}"), format!("<= {:.0e}", cert.tolerance))
            }
            CheckEntry::Rank {
                achieved, required, ..
            } => (format!("rank {achieved}"), format!("rank {required}")),
        };
        let verdict = match c.verdict() {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        };
        let _ = writeln!(s, "{name:<width$}  {value:>12}  {required:>12}  {verdict}");
    }
    for (name, why) in &cert.skipped {
        let _ = writeln!(
            s,
            "{name:<width$}  {:>12}  {:>12}  SKIPPED ({why})",
            "-", "-"
        );
    }
    for (name, o) in &cert.observed {
        let _ = writeln!(
            s,
            "{name:<width$}  {:>12}  {:>12}  info",
            format!("rank {}", o.rank),
            format!("of {}", o.of)
        );
    }
    if let Some(ms) = cert.duration_ms {
        let _ = writeln!(s, "duration   {ms:.1} ms");
    }
    let failed = cert.failures().len();
    let _ = writeln!(
        s,
        "result: {} ({} checks, {} failed)",
        if cert.passed { "PASS" } else { "FAIL" },
        cert.checks.len(),
        failed
    );
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub kind: Kind,
    pub p: usize,
    pub n: usize,
    pub group: Option<GroupSpec>,
    pub amplification: usize,
    pub seed: u64,
}

/// `floor(dim/|G|)` regular summands padded by trivial ones, conjugated by `q`.
fn padded_regular(g: &FiniteGroup, dim: usize, q: &Mat) -> crate::Result<UnitaryRep> {
    let mut rep = UnitaryRep::trivial(g, 0);
    for _ in 0..dim / g.order() {
        rep = rep.direct_sum(&UnitaryRep::regular(g))?;
    }
    Ok(rep
        .direct_sum(&UnitaryRep::trivial(g, dim % g.order()))?
        .conjugate(q))
}

/// A seeded scenario. Covariant kinds get a standard action whose `gamma`
/// and `delta` are seeded conjugates of padded regular representations,
/// written out explicitly; the map is the seeded random one.
pub fn generate_scenario(params: &GenParams) -> Result<Scenario, ScenarioError> {
    let GenParams {
        kind,
        p,
        n,
        amplification: m,
        seed,
        ..
    } = *params;
    check_bounds(p, n)?;
    if m == 0 || m > MAX_AMPLIFICATION {
        return Err(ScenarioError::Compute(Error::Bounds(format!(
            "amplification {m} outside 1..={MAX_AMPLIFICATION}"
        ))));
    }
    let group = match (&params.group, kind) {
        (Some(g), Kind::Dilate) => {
            return Err(invalid(
                "group",
                format!("kind dilate takes no group (got {g:?})"),
            ));
        }
        (None, k) if k.needs_group() => {
            return Err(invalid(
                "group",
                format!("kind {} needs a group", k.as_str()),
            ))
        }
        (g, _) => g.clone(),
    };
    let action = match &group {
        None => None,
        Some(spec) => {
            let (g, _) = resolve_group(spec)?;
            let streams = SeedStream::new(seed);
            let gamma =
                padded_regular(&g, p, &random_unitary(p, &mut streams.stream(STREAM_GAMMA)))?;
            let delta =
                padded_regular(&g, n, &random_unitary(n, &mut streams.stream(STREAM_DELTA)))?;
            let mats = |r: &UnitaryRep| RepSpec::Mats {
                mats: r.mats().iter().map(MatJson::from).collect(),
            };
            Some(ActionSpec::Standard {
                gamma: mats(&gamma),
                delta: mats(&delta),
            })
        }
    };
    let s = Scenario {
        schema: SCHEMA_VERSION,
        kind,
        description: Some(format!(
            "generated: p={p} n={n} amplification={m} seed={seed}"
        )),
        seed,
        tolerance: None,
        module: ModuleSpec::Standard {
            standard_module: [p, n],
        },
        group,
        action,
        cp_map: MapSpec::Random {
            random: RandomSpec {
                amplification: m,
                h_dim: None,
                k_dim: None,
            },
        },
        u: None,
        u_prime: None,
    };
    resolve(&s, &RunOptions::default())?;
    Ok(s)
}

pub fn scenario_to_json(s: &Scenario) -> String {
    let mut out = serde_json::to_string_pretty(s).expect("scenarios serialize");
    out.push('\n');
    out
}
