//! Finite harness spaces: tool subsets × planner depth × model tier ×
//! prompt style, enumerated in a fixed order (tool bitmask ascending, then
//! depth, tier, style).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::env::Tool;
use super::search::Grid;
use crate::model::harness::{MODEL_TIERS, PLANNER_DEPTH_RANGE, PROMPT_STYLES};
use crate::model::{Harness, Scalar, Violation};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HarnessSpace {
    name: String,
    tools: Vec<Tool>,
    depths: Vec<i64>,
    tiers: Vec<&'static str>,
    styles: Vec<&'static str>,
}

/// A point of a [`HarnessSpace`]. `tool_mask` bit `i` selects the space's
/// `i`-th tool.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpacePoint {
    pub tool_mask: u32,
    pub planner_depth: i64,
    pub model_tier: &'static str,
    pub prompt_style: &'static str,
}

pub const SPACE_FULL: &str = "full";
pub const SPACE_CORE3: &str = "core3";

impl HarnessSpace {
    /// All 31 nonempty subsets of the five tools: 372 harnesses.
    pub fn full() -> Self {
        Self::with_tools(SPACE_FULL, Tool::ALL.to_vec())
    }

    /// Subsets of {append_a, append_b, drop_last}: 84 harnesses.
    pub fn core3() -> Self {
        Self::with_tools(
            SPACE_CORE3,
            vec![Tool::AppendA, Tool::AppendB, Tool::DropLast],
        )
    }

    /// Every depth, tier and style over the given tool universe.
    pub fn with_tools(name: &str, mut tools: Vec<Tool>) -> Self {
        tools.sort();
        tools.dedup();
        HarnessSpace {
            name: name.to_string(),
            tools,
            depths: (PLANNER_DEPTH_RANGE.0..=PLANNER_DEPTH_RANGE.1).collect(),
            tiers: MODEL_TIERS.to_vec(),
            styles: PROMPT_STYLES.to_vec(),
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            SPACE_FULL => Some(Self::full()),
            SPACE_CORE3 => Some(Self::core3()),
            _ => None,
        }
    }

    /// Reads the `space` strategy parameter; `core3` when absent.
    pub fn from_params(params: &BTreeMap<String, Scalar>) -> Result<Self, Violation> {
        match params.get(crate::model::blueprint::STRATEGY_PARAM_SPACE) {
            None => Ok(Self::core3()),
            Some(Scalar::Text(name)) => Self::by_name(name).ok_or_else(|| {
                Violation::new(
                    "evolution_strategy.params.space",
                    format!("unknown space {name:?}"),
                )
            }),
            Some(other) => Err(Violation::new(
                "evolution_strategy.params.space",
                format!("expected a space name, got {other}"),
            )),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn tools(&self) -> &[Tool] {
        &self.tools
    }

    pub fn size(&self) -> usize {
        self.grid().size()
    }

    pub(crate) fn grid(&self) -> Grid {
        Grid::new(vec![
            (1usize << self.tools.len()) - 1,
            self.depths.len(),
            self.tiers.len(),
            self.styles.len(),
        ])
    }

    pub fn point(&self, index: usize) -> SpacePoint {
        self.point_at_coords(&self.grid().decode(index))
    }

    pub(crate) fn point_at_coords(&self, c: &[usize]) -> SpacePoint {
        SpacePoint {
            tool_mask: c[0] as u32 + 1,
            planner_depth: self.depths[c[1]],
            model_tier: self.tiers[c[2]],
            prompt_style: self.styles[c[3]],
        }
    }

    pub(crate) fn coords(&self, p: &SpacePoint) -> Option<Vec<usize>> {
        let limit = 1u32 << self.tools.len();
        if p.tool_mask == 0 || p.tool_mask >= limit {
            return None;
        }
        Some(vec![
            p.tool_mask as usize - 1,
            self.depths.iter().position(|d| *d == p.planner_depth)?,
            self.tiers.iter().position(|t| *t == p.model_tier)?,
            self.styles.iter().position(|s| *s == p.prompt_style)?,
        ])
    }

    pub fn index_of(&self, p: &SpacePoint) -> Option<usize> {
        self.coords(p).map(|c| self.grid().encode(&c))
    }

    /// The point a harness occupies, if it lies in this space.
    pub fn project(&self, h: &Harness) -> Option<SpacePoint> {
        let mut mask = 0u32;
        for name in &h.tools {
            let tool = Tool::from_name(name)?;
            let bit = self.tools.iter().position(|t| *t == tool)?;
            mask |= 1 << bit;
        }
        let depth = h.planner_depth()?;
        let tier = *self.tiers.iter().find(|t| Some(**t) == h.model_tier())?;
        let style = *self.styles.iter().find(|s| Some(**s) == h.prompt_style())?;
        let p = SpacePoint {
            tool_mask: mask,
            planner_depth: depth,
            model_tier: tier,
            prompt_style: style,
        };
        self.coords(&p).map(|_| p)
    }

    pub fn index_of_harness(&self, h: &Harness) -> Option<usize> {
        self.project(h).and_then(|p| self.index_of(&p))
    }

    /// Materializes a point, taking every field outside the space (prompts,
    /// step limit, extensions) from `template`.
    pub fn harness(&self, p: &SpacePoint, template: &Harness) -> Harness {
        let mut h = template.clone();
        h.tools = self
            .tools
            .iter()
            .enumerate()
            .filter(|(i, _)| p.tool_mask & (1 << i) != 0)
            .map(|(_, t)| t.name().to_string())
            .collect();
        h.orchestration
            .insert("planner_depth".into(), Scalar::Int(p.planner_depth));
        h.model_config
            .insert("model_tier".into(), Scalar::from(p.model_tier));
        h.model_config
            .insert("prompt_style".into(), Scalar::from(p.prompt_style));
        h
    }

    pub fn harness_at(&self, index: usize, template: &Harness) -> Harness {
        self.harness(&self.point(index), template)
    }

    pub fn enumerate<'a>(&'a self, template: &'a Harness) -> impl Iterator<Item = Harness> + 'a {
        (0..self.size()).map(move |i| self.harness_at(i, template))
    }
}

/// Integer range or explicit list in a space declaration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DepthDecl {
    List(Vec<i64>),
    Range {
        min: i64,
        #[serde(default)]
        max: Option<i64>,
    },
}

/// A harness space as declared in a file: tool universe plus optional
/// restrictions of the other axes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDeclaration {
    #[serde(default)]
    pub name: Option<String>,
    pub tools: Vec<String>,
    #[serde(default)]
    pub planner_depth: Option<DepthDecl>,
    #[serde(default)]
    pub model_tier: Option<Vec<String>>,
    #[serde(default)]
    pub prompt_style: Option<Vec<String>>,
}

impl SpaceDeclaration {
    pub fn to_space(&self) -> Result<HarnessSpace, Vec<Violation>> {
        let mut out = Vec::new();
        let mut tools = Vec::new();
        for (i, name) in self.tools.iter().enumerate() {
            match Tool::from_name(name) {
                Some(t) => tools.push(t),
                None => out.push(Violation::new(
                    format!("tools[{i}]"),
                    format!("unknown tool {name:?}"),
                )),
            }
        }
        if self.tools.is_empty() {
            out.push(Violation::new("tools", "at least one tool required"));
        }
        let mut space = HarnessSpace::with_tools(self.name.as_deref().unwrap_or("declared"), tools);
        match &self.planner_depth {
            None => {}
            Some(DepthDecl::Range { max: None, .. }) => out.push(Violation::new(
                "planner_depth",
                "non-finite range: max missing",
            )),
            Some(DepthDecl::Range {
                min,
                max: Some(max),
            }) => space.depths = (*min..=*max).collect(),
            Some(DepthDecl::List(v)) => space.depths = v.clone(),
        }
        if space
            .depths
            .iter()
            .any(|d| !(PLANNER_DEPTH_RANGE.0..=PLANNER_DEPTH_RANGE.1).contains(d))
            || space.depths.is_empty()
        {
            out.push(Violation::new("planner_depth", "values must lie in 1..=3"));
        }
        space.depths.sort();
        space.depths.dedup();
        if let Some(tiers) = &self.model_tier {
            space.tiers = pick("model_tier", tiers, &MODEL_TIERS, &mut out);
        }
        if let Some(styles) = &self.prompt_style {
            space.styles = pick("prompt_style", styles, &PROMPT_STYLES, &mut out);
        }
        if out.is_empty() {
            Ok(space)
        } else {
            Err(out)
        }
    }
}

fn pick(
    path: &str,
    given: &[String],
    allowed: &[&'static str],
    out: &mut Vec<Violation>,
) -> Vec<&'static str> {
    if given.is_empty() {
        out.push(Violation::new(path, "at least one value required"));
    }
    for g in given {
        if !allowed.contains(&g.as_str()) {
            out.push(Violation::new(path, format!("unknown value {g:?}")));
        }
    }
    allowed
        .iter()
        .copied()
        .filter(|a| given.iter().any(|g| g == a))
        .collect()
}
