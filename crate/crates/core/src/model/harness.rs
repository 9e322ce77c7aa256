use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::simkit::TOOL_NAMES;

/// A configuration scalar: boolean, integer or text.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Bool(bool),
    Int(i64),
    Text(String),
}

impl Scalar {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Scalar::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Scalar::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Bool(b) => write!(f, "{b}"),
            Scalar::Int(i) => write!(f, "{i}"),
            Scalar::Text(s) => write!(f, "{s}"),
        }
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::Int(v)
    }
}

impl From<&str> for Scalar {
    fn from(v: &str) -> Self {
        Scalar::Text(v.to_string())
    }
}

/// Everything that parameterizes a worker apart from model weights.
///
/// Equality is structural, which coincides with byte equality of the
/// canonical encoding since every map is ordered.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Harness {
    pub prompts: BTreeMap<String, String>,
    pub tools: Vec<String>,
    pub orchestration: BTreeMap<String, Scalar>,
    pub model_config: BTreeMap<String, Scalar>,
    /// Free-form sections for external workers.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extensions: BTreeMap<String, Value>,
}

pub const PLANNER_DEPTH_RANGE: (i64, i64) = (1, 3);
pub const MAX_STEPS_RANGE: (i64, i64) = (1, 1000);
pub const MODEL_TIERS: [&str; 2] = ["fast", "smart"];
pub const PROMPT_STYLES: [&str; 2] = ["terse", "verbose"];

impl Harness {
    pub fn planner_depth(&self) -> Option<i64> {
        self.orchestration
            .get("planner_depth")
            .and_then(Scalar::as_int)
    }

    pub fn max_steps(&self) -> Option<i64> {
        self.orchestration.get("max_steps").and_then(Scalar::as_int)
    }

    pub fn model_tier(&self) -> Option<&str> {
        self.model_config.get("model_tier").and_then(Scalar::as_str)
    }

    pub fn prompt_style(&self) -> Option<&str> {
        self.model_config
            .get("prompt_style")
            .and_then(Scalar::as_str)
    }
}

/// Which worker the harness is meant for. Builtin workers need a nonempty
/// tool list drawn from the simulator's tool table and every knob present.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HarnessTarget {
    Builtin,
    External,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

pub fn validate_harness(doc: &Harness, target: HarnessTarget) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    validate_harness_into(doc, target, "", &mut out);
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

pub(crate) fn validate_harness_into(
    doc: &Harness,
    target: HarnessTarget,
    prefix: &str,
    out: &mut Vec<Violation>,
) {
    let builtin = target == HarnessTarget::Builtin;
    let at = |p: &str| format!("{prefix}{p}");

    if builtin && doc.tools.is_empty() {
        out.push(Violation::new(
            at("tools"),
            "builtin worker needs at least one tool",
        ));
    }
    for (i, tool) in doc.tools.iter().enumerate() {
        if doc.tools[..i].contains(tool) {
            out.push(Violation::new(
                at(&format!("tools[{i}]")),
                format!("duplicate tool {tool:?}"),
            ));
        }
        if builtin && !TOOL_NAMES.contains(&tool.as_str()) {
            out.push(Violation::new(
                at(&format!("tools[{i}]")),
                format!("unknown tool {tool:?}"),
            ));
        }
    }

    int_in_range(
        &doc.orchestration,
        "planner_depth",
        PLANNER_DEPTH_RANGE,
        builtin,
        &at("orchestration.planner_depth"),
        out,
    );
    int_in_range(
        &doc.orchestration,
        "max_steps",
        MAX_STEPS_RANGE,
        builtin,
        &at("orchestration.max_steps"),
        out,
    );
    text_in_set(
        &doc.model_config,
        "model_tier",
        &MODEL_TIERS,
        builtin,
        &at("model_config.model_tier"),
        out,
    );
    text_in_set(
        &doc.model_config,
        "prompt_style",
        &PROMPT_STYLES,
        builtin,
        &at("model_config.prompt_style"),
        out,
    );
}

fn int_in_range(
    section: &BTreeMap<String, Scalar>,
    key: &str,
    (lo, hi): (i64, i64),
    required: bool,
    path: &str,
    out: &mut Vec<Violation>,
) {
    match section.get(key) {
        None if required => out.push(Violation::new(path, "missing")),
        None => {}
        Some(Scalar::Int(v)) if (lo..=hi).contains(v) => {}
        Some(Scalar::Int(v)) => out.push(Violation::new(path, format!("{v} outside {lo}..={hi}"))),
        Some(other) => out.push(Violation::new(
            path,
            format!("expected integer, got {other}"),
        )),
    }
}

fn text_in_set(
    section: &BTreeMap<String, Scalar>,
    key: &str,
    allowed: &[&str],
    required: bool,
    path: &str,
    out: &mut Vec<Violation>,
) {
    match section.get(key) {
        None if required => out.push(Violation::new(path, "missing")),
        None => {}
        Some(Scalar::Text(v)) if allowed.contains(&v.as_str()) => {}
        Some(other) => out.push(Violation::new(
            path,
            format!("expected one of {allowed:?}, got {other}"),
        )),
    }
}

const SECTIONS: [&str; 4] = ["prompts", "tools", "orchestration", "model_config"];

/// Validates an untyped document: section presence and shape first, then
/// the typed checks of [`validate_harness`].
pub fn validate_harness_document(
    doc: &Value,
    target: HarnessTarget,
) -> Result<Harness, Vec<Violation>> {
    let Some(obj) = doc.as_object() else {
        return Err(vec![Violation::new("", "harness must be an object")]);
    };
    let missing: Vec<_> = SECTIONS
        .iter()
        .filter(|s| !obj.contains_key(**s))
        .map(|s| Violation::new(*s, "missing section"))
        .collect();
    if !missing.is_empty() {
        return Err(missing);
    }
    let harness: Harness = serde_json::from_value(doc.clone())
        .map_err(|e| vec![Violation::new("", format!("malformed harness: {e}"))])?;
    validate_harness(&harness, target)?;
    Ok(harness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::canonical::to_canonical;

    pub(crate) fn sample(tools: &[&str]) -> Harness {
        Harness {
            prompts: BTreeMap::from([("system".into(), "Transform the string.".into())]),
            tools: tools.iter().map(|t| t.to_string()).collect(),
            orchestration: BTreeMap::from([
                ("max_steps".into(), Scalar::Int(8)),
                ("planner_depth".into(), Scalar::Int(1)),
            ]),
            model_config: BTreeMap::from([
                ("model_tier".into(), Scalar::from("fast")),
                ("prompt_style".into(), Scalar::from("terse")),
            ]),
            extensions: BTreeMap::new(),
        }
    }

    #[test]
    fn well_formed_harness_is_ok() {
        assert_eq!(
            validate_harness(&sample(&["append_a"]), HarnessTarget::Builtin),
            Ok(())
        );
    }

    #[test]
    fn empty_tools_rejected_for_builtin() {
        let v = validate_harness(&sample(&[]), HarnessTarget::Builtin).unwrap_err();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "tools");
        assert_eq!(
            validate_harness(&sample(&[]), HarnessTarget::External),
            Ok(())
        );
    }

    #[test]
    fn planner_depth_out_of_range() {
        let mut h = sample(&["append_a"]);
        h.orchestration
            .insert("planner_depth".into(), Scalar::Int(7));
        let v = validate_harness(&h, HarnessTarget::Builtin).unwrap_err();
        assert_eq!(v[0].path, "orchestration.planner_depth");
    }

    #[test]
    fn unknown_and_duplicate_tools() {
        let v = validate_harness(
            &sample(&["append_a", "teleport", "append_a"]),
            HarnessTarget::Builtin,
        )
        .unwrap_err();
        let paths: Vec<_> = v.iter().map(|x| x.path.as_str()).collect();
        assert_eq!(paths, ["tools[1]", "tools[2]"]);
    }

    #[test]
    fn document_missing_section_named() {
        let mut doc = serde_json::to_value(sample(&["append_a"])).unwrap();
        doc.as_object_mut().unwrap().remove("model_config");
        let v = validate_harness_document(&doc, HarnessTarget::Builtin).unwrap_err();
        assert_eq!(v[0].path, "model_config");
    }

    #[test]
    fn canonical_form_is_a_fixed_point() {
        let h = sample(&["append_a", "drop_last"]);
        let text = to_canonical(&h);
        let back: Harness = serde_json::from_str(&text).unwrap();
        assert_eq!(back, h);
        assert_eq!(to_canonical(&back), text);
        assert!(!text.contains(' ') || text.contains("Transform the string."));
    }
}
