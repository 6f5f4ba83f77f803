//! Canonical JSON summaries: sorted keys, 17-significant-digit reals, two
//! space indentation, trailing newline.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use evodyn_core::experiments::{CyclingVerdict, ScalingCheck, SweepResult};
use evodyn_core::{EssReport64, Trajectory64};

use crate::error::Result;
use crate::table::{fmt_real, write_text};

#[derive(Debug, Clone, PartialEq)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    Real(f64),
    Str(String),
    Array(Vec<Json>),
    Object(BTreeMap<String, Json>),
}

impl From<bool> for Json {
    fn from(v: bool) -> Self {
        Json::Bool(v)
    }
}

impl From<f64> for Json {
    fn from(v: f64) -> Self {
        Json::Real(v)
    }
}

impl From<u64> for Json {
    fn from(v: u64) -> Self {
        Json::Int(v as i64)
    }
}

impl From<usize> for Json {
    fn from(v: usize) -> Self {
        Json::Int(v as i64)
    }
}

impl From<&str> for Json {
    fn from(v: &str) -> Self {
        Json::Str(v.to_string())
    }
}

impl From<String> for Json {
    fn from(v: String) -> Self {
        Json::Str(v)
    }
}

impl<T: Into<Json>> From<Option<T>> for Json {
    fn from(v: Option<T>) -> Self {
        v.map_or(Json::Null, Into::into)
    }
}

impl From<&[f64]> for Json {
    fn from(v: &[f64]) -> Self {
        Json::Array(v.iter().map(|x| Json::Real(*x)).collect())
    }
}

/// Builds an object from `(key, value)` pairs.
pub fn object<const N: usize>(pairs: [(&str, Json); N]) -> Json {
    Json::Object(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

fn escape(s: &str, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

impl Json {
    fn write(&self, depth: usize, out: &mut String) {
        let pad = |d: usize, out: &mut String| {
            out.push('\n');
            out.push_str(&"  ".repeat(d));
        };
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(i) => {
                let _ = write!(out, "{i}");
            }
            // JSON has no infinities.
            Json::Real(x) if !x.is_finite() => out.push_str("null"),
            Json::Real(x) => out.push_str(&fmt_real(*x)),
            Json::Str(s) => escape(s, out),
            Json::Array(items) if items.is_empty() => out.push_str("[]"),
            Json::Array(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    pad(depth + 1, out);
                    item.write(depth + 1, out);
                }
                pad(depth, out);
                out.push(']');
            }
            Json::Object(map) if map.is_empty() => out.push_str("{}"),
            Json::Object(map) => {
                out.push('{');
                for (i, (k, v)) in map.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    pad(depth + 1, out);
                    escape(k, out);
                    out.push_str(": ");
                    v.write(depth + 1, out);
                }
                pad(depth, out);
                out.push('}');
            }
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write(0, &mut out);
        out.push('\n');
        out
    }
}

/// A result that can be written as a JSON summary.
pub trait Summary {
    fn kind(&self) -> &'static str;
    fn fields(&self) -> Json;
}

impl Summary for SweepResult {
    fn kind(&self) -> &'static str {
        "sweep"
    }

    fn fields(&self) -> Json {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                object([
                    ("beta", r.beta.into()),
                    ("steps", r.steps.into()),
                    ("ratio", r.ratio.into()),
                    ("predicted", r.predicted.into()),
                    ("relative_deviation", r.relative_deviation().into()),
                ])
            })
            .collect();
        object([("base_steps", self.base_steps.into()), ("rows", Json::Array(rows))])
    }
}

impl Summary for CyclingVerdict {
    fn kind(&self) -> &'static str {
        "cycling"
    }

    fn fields(&self) -> Json {
        object([
            ("classification", self.classification.as_str().into()),
            ("kl_start", self.kl_start.into()),
            ("kl_end", self.kl_end.into()),
            ("kl_trend_slope", self.kl_trend_slope.into()),
            ("status", self.status.label().into()),
            ("steps_run", self.steps_run.into()),
        ])
    }
}

impl Summary for EssReport64 {
    fn kind(&self) -> &'static str {
        "ess"
    }

    fn fields(&self) -> Json {
        object([
            ("candidate", self.candidate.coords().into()),
            ("is_strict_ess", self.is_strict_ess.into()),
            ("worst_margin", self.worst_margin.into()),
            ("samples_tested", self.samples_tested.into()),
            ("radius", self.radius.into()),
        ])
    }
}

impl Summary for ScalingCheck {
    fn kind(&self) -> &'static str {
        "scaling"
    }

    fn fields(&self) -> Json {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                object([
                    ("beta", r.beta.into()),
                    ("reversed_everywhere", r.reversed_everywhere.into()),
                    ("preserved_everywhere", r.preserved_everywhere.into()),
                ])
            })
            .collect();
        object([
            ("max_relative_error", self.max_relative_error.into()),
            ("rows", Json::Array(rows)),
            ("samples", self.samples.into()),
            ("seed", self.seed.into()),
        ])
    }
}

impl Summary for Trajectory64 {
    fn kind(&self) -> &'static str {
        "run"
    }

    fn fields(&self) -> Json {
        let last = self.last();
        object([
            ("status", self.status.label().into()),
            ("records", self.len().into()),
            ("final_step", last.map(|r| r.step).into()),
            ("final_time", last.map(|r| r.time).into()),
            ("final_state", last.map_or(Json::Null, |r| r.state.coords().into())),
            ("final_kl", last.and_then(|r| r.kl).into()),
            ("final_euclidean", last.and_then(|r| r.euclidean).into()),
        ])
    }
}

/// The summary object with `kind` and `config_digest` added.
pub fn summary_document(result: &dyn Summary, config_digest: &str) -> Json {
    let mut map = match result.fields() {
        Json::Object(map) => map,
        other => BTreeMap::from([("value".to_string(), other)]),
    };
    map.insert("kind".into(), result.kind().into());
    map.insert("config_digest".into(), config_digest.into());
    Json::Object(map)
}

pub fn summary_json(result: &dyn Summary, config_digest: &str) -> String {
    summary_document(result, config_digest).render()
}

pub fn write_summary_json(result: &dyn Summary, config_digest: &str, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &summary_json(result, config_digest))
}
