//! Line protocol: one canonical JSON object per line, `{type, seq, payload}`.
//!
//! A session opens with `{"type":"hello","role":...,"protocol_version":1}`
//! from the engine, answered by `{"type":"hello_ack","protocol_version":1}`.
//! Every request afterwards gets exactly one response echoing its `seq`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Proposal, Role};
use crate::meta::MetaHistoryEntry;
use crate::model::{
    canonical, Blueprint, EvaluationReport, Harness, HistoryEntry, Score, Task, Trace,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Handshake {
    Hello { role: Role, protocol_version: u32 },
    HelloAck { protocol_version: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveResp {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harness: Option<Harness>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub space_exhausted: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaEvolveResp {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blueprint: Option<Blueprint>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub space_exhausted: bool,
}

impl From<Proposal<Harness>> for EvolveResp {
    fn from(p: Proposal<Harness>) -> Self {
        match p {
            Proposal::Next(h) => EvolveResp {
                harness: Some(h),
                space_exhausted: false,
            },
            Proposal::SpaceExhausted => EvolveResp {
                harness: None,
                space_exhausted: true,
            },
        }
    }
}

impl EvolveResp {
    pub fn into_proposal(self) -> Result<Proposal<Harness>, String> {
        match (self.harness, self.space_exhausted) {
            (Some(h), false) => Ok(Proposal::Next(h)),
            (None, true) => Ok(Proposal::SpaceExhausted),
            _ => Err("evolve_resp needs exactly one of harness or space_exhausted".into()),
        }
    }
}

impl From<Proposal<Blueprint>> for MetaEvolveResp {
    fn from(p: Proposal<Blueprint>) -> Self {
        match p {
            Proposal::Next(b) => MetaEvolveResp {
                blueprint: Some(b),
                space_exhausted: false,
            },
            Proposal::SpaceExhausted => MetaEvolveResp {
                blueprint: None,
                space_exhausted: true,
            },
        }
    }
}

impl MetaEvolveResp {
    pub fn into_proposal(self) -> Result<Proposal<Blueprint>, String> {
        match (self.blueprint, self.space_exhausted) {
            (Some(b), false) => Ok(Proposal::Next(b)),
            (None, true) => Ok(Proposal::SpaceExhausted),
            _ => Err("meta_evolve_resp needs exactly one of blueprint or space_exhausted".into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum Payload {
    ExecuteReq {
        task: Task,
        harness: Harness,
    },
    ExecuteResp {
        trace: Trace,
    },
    EvaluateReq {
        trace: Trace,
        task: Task,
    },
    EvaluateResp {
        report: EvaluationReport,
        score: Score,
    },
    EvolveReq {
        task_id: String,
        history: Vec<HistoryEntry>,
        best: Harness,
        seed: u64,
    },
    EvolveResp(EvolveResp),
    MetaEvolveReq {
        meta_history: Vec<MetaHistoryEntry>,
        best: Blueprint,
        seed: u64,
    },
    MetaEvolveResp(MetaEvolveResp),
    Error {
        message: String,
    },
}

impl Payload {
    pub fn type_name(&self) -> &'static str {
        match self {
            Payload::ExecuteReq { .. } => "execute_req",
            Payload::ExecuteResp { .. } => "execute_resp",
            Payload::EvaluateReq { .. } => "evaluate_req",
            Payload::EvaluateResp { .. } => "evaluate_resp",
            Payload::EvolveReq { .. } => "evolve_req",
            Payload::EvolveResp(_) => "evolve_resp",
            Payload::MetaEvolveReq { .. } => "meta_evolve_req",
            Payload::MetaEvolveResp(_) => "meta_evolve_resp",
            Payload::Error { .. } => "error",
        }
    }

    /// Response type expected for a request type, if this is a request.
    pub fn response_type(&self) -> Option<&'static str> {
        match self {
            Payload::ExecuteReq { .. } => Some("execute_resp"),
            Payload::EvaluateReq { .. } => Some("evaluate_resp"),
            Payload::EvolveReq { .. } => Some("evolve_resp"),
            Payload::MetaEvolveReq { .. } => Some("meta_evolve_resp"),
            _ => None,
        }
    }

    /// The role that must serve a request type.
    pub fn serving_role(&self) -> Option<Role> {
        match self {
            Payload::ExecuteReq { .. } => Some(Role::Worker),
            Payload::EvaluateReq { .. } => Some(Role::Evaluator),
            Payload::EvolveReq { .. } => Some(Role::Evolution),
            Payload::MetaEvolveReq { .. } => Some(Role::MetaEvolution),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolMessage {
    pub seq: u64,
    pub payload: Payload,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum WireError {
    #[error("malformed line: {0}")]
    Malformed(String),
    #[error("missing or invalid seq")]
    BadSeq,
    #[error("unknown or malformed message: {0}")]
    BadPayload(String),
}

impl ProtocolMessage {
    pub fn new(seq: u64, payload: Payload) -> Self {
        ProtocolMessage { seq, payload }
    }

    /// Canonical single-line encoding, without the trailing newline.
    pub fn encode(&self) -> String {
        let mut v = serde_json::to_value(&self.payload).expect("payloads always serialize");
        v.as_object_mut()
            .expect("adjacently tagged payloads are objects")
            .insert("seq".into(), Value::from(self.seq));
        canonical::to_canonical(&v)
    }

    pub fn decode(line: &str) -> Result<Self, WireError> {
        let mut v: Value =
            serde_json::from_str(line).map_err(|e| WireError::Malformed(e.to_string()))?;
        let obj = v
            .as_object_mut()
            .ok_or_else(|| WireError::Malformed("not an object".into()))?;
        let seq = obj
            .remove("seq")
            .and_then(|s| s.as_u64())
            .filter(|s| *s >= 1)
            .ok_or(WireError::BadSeq)?;
        if obj.keys().any(|k| k != "type" && k != "payload") {
            return Err(WireError::BadPayload("unexpected top-level field".into()));
        }
        let payload: Payload =
            serde_json::from_value(v).map_err(|e| WireError::BadPayload(e.to_string()))?;
        Ok(ProtocolMessage { seq, payload })
    }

    /// Best-effort extraction of `seq` from a line that failed to decode,
    /// so error replies can reference the offending request.
    pub fn salvage_seq(line: &str) -> Option<u64> {
        let v: Value = serde_json::from_str(line).ok()?;
        v.get("seq")?.as_u64()
    }
}

impl Handshake {
    pub fn encode(&self) -> String {
        canonical::to_canonical(self)
    }

    pub fn decode(line: &str) -> Result<Self, WireError> {
        serde_json::from_str(line).map_err(|e| WireError::Malformed(e.to_string()))
    }
}
