//! JSON certificates for decisions and tabulated witnesses.
//!
//! A certificate is a JSON object with keys in sorted order. Its `hash` field
//! is the hex SHA-256 of the compact serialization of every other field, so
//! any edit to inputs, decision or tables is detected on load. Witness tables
//! store, for each target level, the target grid index of every source grid
//! index, and cocycle values flattened as `[(index · dim + generator) · rank + c]`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cocycle::{
    verify_coe_tables, verify_conj_tables, Cocycle, CocycleError, GroupHom, LevelTable, MaterializedCoe,
    MaterializedConj, PointMap, TableCocycle, TableMap, VerificationReport, VerifyConfig,
};
use crate::decide::{coe_decide, conj_decide, free_group_counterexample_check, DecideError};
use crate::dynamics::{GroupDesc, SystemSpec};
use crate::supernatural::{parse_list, Supernatural};

pub const TOOL: &str = concat!("odocoe ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error)]
pub enum CertError {
    #[error("malformed certificate: {0}")]
    Malformed(String),
    #[error("content hash mismatch: recorded {recorded}, computed {computed}")]
    Hash { recorded: String, computed: String },
    #[error(transparent)]
    Cocycle(#[from] CocycleError),
    #[error(transparent)]
    Decide(#[from] DecideError),
}

impl From<serde_json::Error> for CertError {
    fn from(e: serde_json::Error) -> Self {
        CertError::Malformed(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertKind {
    Coe,
    Conj,
    CoeWitness,
    ConjWitness,
    Counterexample,
}

impl fmt::Display for CertKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CertKind::Coe => "coe",
            CertKind::Conj => "conj",
            CertKind::CoeWitness => "coe-witness",
            CertKind::ConjWitness => "conj-witness",
            CertKind::Counterexample => "counterexample",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelData {
    pub source_level: u32,
    pub images: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapData {
    pub source: SystemSpec,
    pub target: SystemSpec,
    pub levels: Vec<LevelData>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CocycleData {
    pub source: SystemSpec,
    /// Moduli of the target group, `0` for `Z`.
    pub target: Vec<u64>,
    pub level: u32,
    pub values: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomData {
    pub source: Vec<u64>,
    pub target: Vec<u64>,
    /// Row-major, one row per target coordinate.
    pub matrix: Vec<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessData {
    pub level: u32,
    pub radius: u32,
    pub phi: MapData,
    pub psi: MapData,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<CocycleData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<CocycleData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<HomData>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertKind,
    pub tool: String,
    pub inputs: Value,
    pub decision: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessData>,
    pub hash: String,
}

/// Outcome of re-checking a certificate.
#[derive(Debug, Clone, Serialize)]
pub struct CertCheck {
    pub kind: CertKind,
    /// Re-running the decision on the recorded inputs gives the recorded payload.
    pub decision_reproduced: bool,
    pub report: Option<VerificationReport>,
}

impl CertCheck {
    pub fn passed(&self) -> bool {
        self.decision_reproduced && self.report.as_ref().is_none_or(VerificationReport::passed)
    }
}

fn map_data(m: &TableMap) -> MapData {
    MapData {
        source: m.source().clone(),
        target: m.target().clone(),
        levels: m
            .levels()
            .iter()
            .map(|t| LevelData { source_level: t.source_level, images: t.images.clone() })
            .collect(),
    }
}

fn map_from(d: &MapData) -> Result<TableMap, CocycleError> {
    let levels =
        d.levels.iter().map(|t| LevelTable { source_level: t.source_level, images: t.images.clone() }).collect();
    TableMap::new(d.source.clone(), d.target.clone(), levels)
}

fn cocycle_data(a: &TableCocycle) -> CocycleData {
    CocycleData {
        source: a.source().clone(),
        target: a.target().moduli().to_vec(),
        level: a.level(),
        values: a.values().to_vec(),
    }
}

fn cocycle_from(d: &CocycleData) -> Result<TableCocycle, CocycleError> {
    TableCocycle::new(d.source.clone(), GroupDesc::new(d.target.clone()), d.level, d.values.clone())
}

fn pair_inputs(ms: &[Supernatural], ns: &[Supernatural]) -> Value {
    let show = |v: &[Supernatural]| Value::from(v.iter().map(ToString::to_string).collect::<Vec<_>>());
    serde_json::json!({ "ms": show(ms), "ns": show(ns) })
}

fn read_list(inputs: &Value, key: &str) -> Result<Vec<Supernatural>, CertError> {
    let items = inputs
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| CertError::Malformed(format!("inputs.{key} missing")))?;
    let text: Vec<&str> = items
        .iter()
        .map(|v| v.as_str().ok_or_else(|| CertError::Malformed(format!("inputs.{key} entries must be strings"))))
        .collect::<Result<_, _>>()?;
    parse_list(&text.join(",")).map_err(|e| CertError::Malformed(e.to_string()))
}

fn read_u64(inputs: &Value, key: &str) -> Result<u64, CertError> {
    inputs.get(key).and_then(Value::as_u64).ok_or_else(|| CertError::Malformed(format!("inputs.{key} missing")))
}

fn digest(v: &Value) -> String {
    let mut v = v.clone();
    if let Value::Object(map) = &mut v {
        map.remove("hash");
    }
    hex::encode(Sha256::digest(v.to_string().as_bytes()))
}

impl Certificate {
    fn seal(kind: CertKind, inputs: Value, decision: Value, witness: Option<WitnessData>) -> Self {
        let mut cert = Self { kind, tool: TOOL.to_string(), inputs, decision, witness, hash: String::new() };
        cert.hash = digest(&serde_json::to_value(&cert).expect("certificate serializes"));
        cert
    }

    /// Certificate of a COE decision, with the tabulated witness if given.
    pub fn coe(ms: &[Supernatural], ns: &[Supernatural], witness: Option<(&MaterializedCoe, VerifyConfig)>) -> Result<Self, CertError> {
        let d = coe_decide(ms, ns)?;
        let decision = serde_json::to_value(&d)?;
        let (kind, witness) = match witness {
            None => (CertKind::Coe, None),
            Some((m, cfg)) => (
                CertKind::CoeWitness,
                Some(WitnessData {
                    level: cfg.level,
                    radius: cfg.radius,
                    phi: map_data(&m.phi),
                    psi: map_data(&m.psi),
                    a: Some(cocycle_data(&m.a)),
                    b: Some(cocycle_data(&m.b)),
                    rho: None,
                }),
            ),
        };
        Ok(Self::seal(kind, pair_inputs(ms, ns), decision, witness))
    }

    /// Certificate of a conjugacy decision, with the tabulated witness if given.
    pub fn conj(ms: &[Supernatural], ns: &[Supernatural], witness: Option<(&MaterializedConj, VerifyConfig)>) -> Result<Self, CertError> {
        let d = conj_decide(ms, ns)?;
        let decision = serde_json::to_value(&d)?;
        let (kind, witness) = match witness {
            None => (CertKind::Conj, None),
            Some((m, cfg)) => (
                CertKind::ConjWitness,
                Some(WitnessData {
                    level: cfg.level,
                    radius: cfg.radius,
                    phi: map_data(&m.phi),
                    psi: map_data(&m.psi),
                    a: None,
                    b: None,
                    rho: Some(HomData {
                        source: m.rho.source().moduli().to_vec(),
                        target: m.rho.target().moduli().to_vec(),
                        matrix: m.rho.matrix().to_vec(),
                    }),
                }),
            ),
        };
        Ok(Self::seal(kind, pair_inputs(ms, ns), decision, witness))
    }

    pub fn counterexample(p: u64, q: u64, n: u64) -> Result<Self, CertError> {
        let report = free_group_counterexample_check(p, q, n)?;
        let inputs = serde_json::json!({ "p": p, "q": q, "n": n });
        Ok(Self::seal(CertKind::Counterexample, inputs, serde_json::to_value(&report)?, None))
    }

    /// Canonical text: pretty JSON with sorted keys.
    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("certificate serializes");
        let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
        s.push('\n');
        s
    }

    /// Recomputes the content hash of the recorded fields.
    pub fn computed_hash(&self) -> String {
        digest(&serde_json::to_value(self).expect("certificate serializes"))
    }

    pub fn materialized_coe(&self) -> Result<MaterializedCoe, CertError> {
        let w = self.witness.as_ref().ok_or_else(|| CertError::Malformed("no witness tables".into()))?;
        let (Some(a), Some(b)) = (&w.a, &w.b) else {
            return Err(CertError::Malformed("orbit equivalence tables need cocycles a and b".into()));
        };
        Ok(MaterializedCoe { phi: map_from(&w.phi)?, a: cocycle_from(a)?, psi: map_from(&w.psi)?, b: cocycle_from(b)? })
    }

    pub fn materialized_conj(&self) -> Result<MaterializedConj, CertError> {
        let w = self.witness.as_ref().ok_or_else(|| CertError::Malformed("no witness tables".into()))?;
        let rho = w.rho.as_ref().ok_or_else(|| CertError::Malformed("conjugacy tables need rho".into()))?;
        let rho = GroupHom::new(GroupDesc::new(rho.source.clone()), GroupDesc::new(rho.target.clone()), rho.matrix.clone())?;
        Ok(MaterializedConj { rho, phi: map_from(&w.phi)?, psi: map_from(&w.psi)? })
    }

    /// Level and radius the tables were emitted for.
    pub fn embedded_config(&self) -> Option<VerifyConfig> {
        self.witness.as_ref().map(|w| VerifyConfig::new(w.level, w.radius))
    }

    /// Re-derives the decision and re-runs the exhaustive table checks at `cfg`
    /// (the embedded level and radius when `None`).
    pub fn check(&self, cfg: Option<VerifyConfig>) -> Result<CertCheck, CertError> {
        let recomputed = match self.kind {
            CertKind::Coe | CertKind::CoeWitness => {
                serde_json::to_value(coe_decide(&read_list(&self.inputs, "ms")?, &read_list(&self.inputs, "ns")?)?)?
            }
            CertKind::Conj | CertKind::ConjWitness => {
                serde_json::to_value(conj_decide(&read_list(&self.inputs, "ms")?, &read_list(&self.inputs, "ns")?)?)?
            }
            CertKind::Counterexample => serde_json::to_value(free_group_counterexample_check(
                read_u64(&self.inputs, "p")?,
                read_u64(&self.inputs, "q")?,
                read_u64(&self.inputs, "n")?,
            )?)?,
        };
        let cfg = cfg.or(self.embedded_config()).unwrap_or_default();
        let report = match self.kind {
            CertKind::CoeWitness => Some(verify_coe_tables(&self.materialized_coe()?, cfg)?),
            CertKind::ConjWitness => Some(verify_conj_tables(&self.materialized_conj()?, cfg)?),
            _ => None,
        };
        Ok(CertCheck { kind: self.kind, decision_reproduced: recomputed == self.decision, report })
    }

    /// Tables re-wrapped as evaluable maps, for composing with other witnesses.
    pub fn coe_witness(&self) -> Result<crate::cocycle::CoeWitness, CertError> {
        Ok(self.materialized_coe()?.to_witness()?)
    }

    pub fn conj_witness(&self) -> Result<crate::cocycle::ConjWitness, CertError> {
        let m = self.materialized_conj()?;
        Ok(crate::cocycle::ConjWitness::new(m.rho, Arc::new(m.phi), Arc::new(m.psi))?)
    }
}

impl FromStr for Certificate {
    type Err = CertError;

    /// Parses and checks the content hash.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v: Value = serde_json::from_str(s)?;
        let cert: Certificate = serde_json::from_value(v)?;
        let computed = cert.computed_hash();
        if computed != cert.hash {
            return Err(CertError::Hash { recorded: cert.hash, computed });
        }
        Ok(cert)
    }
}
