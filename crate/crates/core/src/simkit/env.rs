//! StringForge: a string-rewriting environment with a fixed tool table.

use crate::model::Task;

/// Tool names in bitmask order: bit `i` of a tool mask is `TOOL_NAMES[i]`.
/// This is also ascending lexicographic order.
pub const TOOL_NAMES: [&str; 5] = ["append_a", "append_b", "drop_last", "reverse", "swapcase"];

pub const TOOL_TIME_MS: u64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tool {
    AppendA,
    AppendB,
    DropLast,
    Reverse,
    Swapcase,
}

impl Tool {
    pub const ALL: [Tool; 5] = [
        Tool::AppendA,
        Tool::AppendB,
        Tool::DropLast,
        Tool::Reverse,
        Tool::Swapcase,
    ];

    pub fn from_name(name: &str) -> Option<Tool> {
        TOOL_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| Tool::ALL[i])
    }

    pub fn name(self) -> &'static str {
        TOOL_NAMES[self as usize]
    }

    pub fn time_ms(self) -> u64 {
        TOOL_TIME_MS
    }

    /// Pure transition function.
    pub fn apply(self, s: &str) -> String {
        match self {
            Tool::AppendA => format!("{s}a"),
            Tool::AppendB => format!("{s}b"),
            Tool::DropLast => {
                let mut t = s.to_string();
                t.pop();
                t
            }
            Tool::Reverse => s.chars().rev().collect(),
            Tool::Swapcase => s
                .chars()
                .map(|c| {
                    if c.is_ascii_lowercase() {
                        c.to_ascii_uppercase()
                    } else {
                        c.to_ascii_lowercase()
                    }
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StringForgeEnv {
    start: String,
    current: String,
    steps_used: u32,
}

impl StringForgeEnv {
    pub fn new(task: &Task) -> Self {
        let start = task.environment.start.clone();
        StringForgeEnv {
            current: start.clone(),
            start,
            steps_used: 0,
        }
    }

    /// Restores the task's start state.
    pub fn reset(&mut self) {
        self.current = self.start.clone();
        self.steps_used = 0;
    }

    pub fn current(&self) -> &str {
        &self.current
    }

    pub fn steps_used(&self) -> u32 {
        self.steps_used
    }

    pub fn step(&mut self, tool: Tool) -> (&str, u64) {
        self.current = tool.apply(&self.current);
        self.steps_used += 1;
        (&self.current, tool.time_ms())
    }
}
