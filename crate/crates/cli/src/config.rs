//! `key = value` run files.
//!
//! One setting per line, `#` starts a comment, keys may appear once. Lists
//! are comma separated; matrix rows are separated by `;`.
//!
//! ```text
//! a = 1
//! b = -1
//! dynamic = replicator
//! momentum = nesterov
//! alpha = 0.005
//! beta = 0.65
//! x0 = 0.8, 0.15, 0.05
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use evodyn_core::dynamics::{
    DEFAULT_BOUNDARY_DELTA, DEFAULT_CONTINUOUS_STEP, DEFAULT_CONVERGENCE_EPSILON, DEFAULT_MAX_STEPS,
};
use evodyn_core::experiments::config_digest;
use evodyn_core::{
    Config64, DynamicKind, DynamicsConfig, Landscape64, MatrixLandscape, MomentumKind, Point64, SimplexPoint,
};

use crate::error::{CliError, Result};

pub const DEFAULT_ALPHA: f64 = 0.005;
pub const DEFAULT_HORIZON: f64 = 10.0;
pub const DEFAULT_OUTPUT: &str = "run";

/// Every key a run file may contain, in dump order.
pub const KEYS: &[&str] = &[
    "a",
    "b",
    "matrix",
    "dynamic",
    "momentum",
    "alpha",
    "beta",
    "normalize",
    "x0",
    "reference",
    "max_steps",
    "epsilon",
    "boundary_delta",
    "horizon",
    "step",
    "record_every",
    "seed",
    "out",
    "formats",
];

#[derive(Debug, Clone, PartialEq)]
pub enum LandscapeSpec {
    Cyclic { a: f64, b: f64 },
    Matrix(Vec<Vec<f64>>),
}

impl LandscapeSpec {
    pub fn build(&self) -> Result<Landscape64> {
        match self {
            LandscapeSpec::Cyclic { a, b } => Ok(MatrixLandscape::cyclic(*a, *b)),
            LandscapeSpec::Matrix(rows) => {
                MatrixLandscape::new(rows.clone()).map_err(|e| CliError::validation("matrix", e.to_string()))
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            LandscapeSpec::Cyclic { .. } => 3,
            LandscapeSpec::Matrix(rows) => rows.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DynamicChoice {
    Replicator,
    Projection,
    /// RK4 integration of the continuous momentum replicator.
    Continuous,
}

impl DynamicChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            DynamicChoice::Replicator => "replicator",
            DynamicChoice::Projection => "projection",
            DynamicChoice::Continuous => "continuous",
        }
    }

    /// The geometry used for the discrete stepper and for digests.
    pub fn kind(self) -> DynamicKind {
        match self {
            DynamicChoice::Projection => DynamicKind::Projection,
            _ => DynamicKind::Replicator,
        }
    }
}

impl FromStr for DynamicChoice {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "replicator" => Ok(DynamicChoice::Replicator),
            "projection" => Ok(DynamicChoice::Projection),
            "continuous" => Ok(DynamicChoice::Continuous),
            other => Err(format!(
                "unknown dynamic `{other}` (expected replicator, projection or continuous)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(format!("unknown format `{other}` (expected csv, json or svg)")),
        }
    }
}

/// A fully validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub landscape: LandscapeSpec,
    pub dynamic: DynamicChoice,
    pub momentum: MomentumKind,
    pub alpha: f64,
    pub beta: f64,
    pub normalize: bool,
    pub x0: Vec<f64>,
    /// `None` means the barycenter.
    pub reference: Option<Vec<f64>>,
    pub max_steps: u64,
    pub epsilon: f64,
    pub boundary_delta: f64,
    pub horizon: f64,
    pub step: f64,
    pub record_every: u64,
    pub seed: u64,
    pub output_path: String,
    pub formats: Vec<Format>,
}

impl RunSpec {
    pub fn dim(&self) -> usize {
        self.landscape.dim()
    }

    pub fn build_landscape(&self) -> Result<Landscape64> {
        self.landscape.build()
    }

    pub fn x0_point(&self) -> Result<Point64> {
        SimplexPoint::new(self.x0.clone()).map_err(|e| CliError::validation("x0", e.to_string()))
    }

    pub fn reference_point(&self) -> Result<Point64> {
        match &self.reference {
            Some(r) => SimplexPoint::new(r.clone()).map_err(|e| CliError::validation("reference", e.to_string())),
            None => Ok(SimplexPoint::barycenter(self.dim())),
        }
    }

    pub fn dynamics_config(&self) -> Config64 {
        let mut c = DynamicsConfig::new(self.dynamic.kind(), self.momentum, self.alpha, self.beta);
        c.normalize_by_mean = self.normalize;
        c.max_steps = self.max_steps;
        c.convergence_epsilon = self.epsilon;
        c.boundary_delta = self.boundary_delta;
        c.record_every = self.record_every;
        c
    }

    /// SHA-256 identifying everything that affects the numbers produced.
    pub fn digest(&self, extra: &str) -> Result<String> {
        let mut tail = format!("source={};seed={};", self.dynamic.as_str(), self.seed);
        if self.dynamic == DynamicChoice::Continuous {
            let _ = write!(tail, "horizon={:?};step={:?};", self.horizon, self.step);
        }
        tail.push_str(extra);
        Ok(config_digest(
            &self.dynamics_config(),
            &self.build_landscape()?,
            &self.x0_point()?,
            Some(&self.reference_point()?),
            &tail,
        ))
    }

    /// Run-file text that parses back to an identical spec.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        match &self.landscape {
            LandscapeSpec::Cyclic { a, b } => {
                let _ = writeln!(s, "a = {a:?}");
                let _ = writeln!(s, "b = {b:?}");
            }
            LandscapeSpec::Matrix(rows) => {
                let rows: Vec<String> = rows.iter().map(|r| join_reals(r)).collect();
                let _ = writeln!(s, "matrix = {}", rows.join("; "));
            }
        }
        let _ = writeln!(s, "dynamic = {}", self.dynamic.as_str());
        let _ = writeln!(s, "momentum = {}", self.momentum);
        let _ = writeln!(s, "alpha = {:?}", self.alpha);
        let _ = writeln!(s, "beta = {:?}", self.beta);
        let _ = writeln!(s, "normalize = {}", self.normalize);
        let _ = writeln!(s, "x0 = {}", join_reals(&self.x0));
        if let Some(r) = &self.reference {
            let _ = writeln!(s, "reference = {}", join_reals(r));
        }
        let _ = writeln!(s, "max_steps = {}", self.max_steps);
        let _ = writeln!(s, "epsilon = {:?}", self.epsilon);
        let _ = writeln!(s, "boundary_delta = {:?}", self.boundary_delta);
        let _ = writeln!(s, "horizon = {:?}", self.horizon);
        let _ = writeln!(s, "step = {:?}", self.step);
        let _ = writeln!(s, "record_every = {}", self.record_every);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "out = {}", self.output_path);
        let formats: Vec<&str> = self.formats.iter().map(|f| f.extension()).collect();
        let _ = writeln!(s, "formats = {}", formats.join(","));
        s
    }
}

fn join_reals(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

/// Why a single `key = value` assignment was rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum SetError {
    UnknownKey(String),
    BadValue { key: &'static str, reason: String },
}

/// Accumulates settings from a file and/or command-line flags.
#[derive(Debug, Clone, Default)]
pub struct SpecBuilder {
    a: Option<f64>,
    b: Option<f64>,
    matrix: Option<Vec<Vec<f64>>>,
    dynamic: Option<DynamicChoice>,
    momentum: Option<MomentumKind>,
    alpha: Option<f64>,
    beta: Option<f64>,
    normalize: Option<bool>,
    x0: Option<Vec<f64>>,
    reference: Option<Vec<f64>>,
    max_steps: Option<u64>,
    epsilon: Option<f64>,
    boundary_delta: Option<f64>,
    horizon: Option<f64>,
    step: Option<f64>,
    record_every: Option<u64>,
    seed: Option<u64>,
    output_path: Option<String>,
    formats: Option<Vec<Format>>,
}

fn real(key: &'static str, v: &str) -> std::result::Result<f64, SetError> {
    match v.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(SetError::BadValue {
            key,
            reason: format!("expected a finite number, got `{}`", v.trim()),
        }),
    }
}

fn count(key: &'static str, v: &str) -> std::result::Result<u64, SetError> {
    let t = v.trim();
    // Accept integral reals such as `1e7`.
    t.parse::<u64>()
        .ok()
        .or_else(|| {
            t.parse::<f64>()
                .ok()
                .filter(|x| *x >= 0.0 && x.fract() == 0.0 && *x <= u64::MAX as f64)
                .map(|x| x as u64)
        })
        .ok_or_else(|| SetError::BadValue {
            key,
            reason: format!("expected a nonnegative integer, got `{t}`"),
        })
}

fn reals(key: &'static str, v: &str) -> std::result::Result<Vec<f64>, SetError> {
    v.split(',').map(|p| real(key, p)).collect()
}

fn rows(key: &'static str, v: &str) -> std::result::Result<Vec<Vec<f64>>, SetError> {
    v.split(';').map(|r| reals(key, r)).collect()
}

impl From<SetError> for CliError {
    fn from(e: SetError) -> Self {
        match e {
            SetError::UnknownKey(k) => CliError::validation(&k, "unknown setting"),
            SetError::BadValue { key, reason } => CliError::validation(key, reason),
        }
    }
}

/// Comma-separated reals, with errors naming `field`.
pub fn parse_reals(field: &'static str, v: &str) -> Result<Vec<f64>> {
    Ok(reals(field, v)?)
}

/// `;`-separated rows of comma-separated reals.
pub fn parse_matrix(v: &str) -> Result<Vec<Vec<f64>>> {
    Ok(rows("matrix", v)?)
}

fn keyword<T: FromStr<Err = String>>(key: &'static str, v: &str) -> std::result::Result<T, SetError> {
    v.parse().map_err(|reason| SetError::BadValue { key, reason })
}

impl SpecBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), SetError> {
        let k = KEYS
            .iter()
            .copied()
            .find(|k| *k == key)
            .ok_or_else(|| SetError::UnknownKey(key.to_string()))?;
        match k {
            "a" => self.a = Some(real(k, value)?),
            "b" => self.b = Some(real(k, value)?),
            "matrix" => self.matrix = Some(rows(k, value)?),
            "dynamic" => self.dynamic = Some(keyword(k, value)?),
            "momentum" => self.momentum = Some(keyword(k, value)?),
            "alpha" => self.alpha = Some(real(k, value)?),
            "beta" => self.beta = Some(real(k, value)?),
            "normalize" => {
                self.normalize = Some(match value.trim() {
                    "true" | "yes" | "1" => true,
                    "false" | "no" | "0" => false,
                    other => {
                        return Err(SetError::BadValue {
                            key: k,
                            reason: format!("expected true or false, got `{other}`"),
                        })
                    }
                })
            }
            "x0" => self.x0 = Some(reals(k, value)?),
            "reference" => self.reference = Some(reals(k, value)?),
            "max_steps" => self.max_steps = Some(count(k, value)?),
            "epsilon" => self.epsilon = Some(real(k, value)?),
            "boundary_delta" => self.boundary_delta = Some(real(k, value)?),
            "horizon" => self.horizon = Some(real(k, value)?),
            "step" => self.step = Some(real(k, value)?),
            "record_every" => self.record_every = Some(count(k, value)?),
            "seed" => self.seed = Some(count(k, value)?),
            "out" => {
                let v = value.trim();
                if v.is_empty() {
                    return Err(SetError::BadValue {
                        key: k,
                        reason: "must not be empty".into(),
                    });
                }
                self.output_path = Some(v.to_string());
            }
            "formats" => {
                let mut set = BTreeSet::new();
                for f in value.split(',').filter(|f| !f.trim().is_empty()) {
                    set.insert(keyword::<Format>(k, f)?);
                }
                self.formats = Some(set.into_iter().collect());
            }
            _ => unreachable!("key list and match arms agree"),
        }
        Ok(())
    }

    /// Applies defaults and checks every field.
    pub fn finish(self) -> Result<RunSpec> {
        let landscape = match (self.a, self.b, self.matrix) {
            (Some(a), Some(b), None) => LandscapeSpec::Cyclic { a, b },
            (None, None, Some(rows)) => LandscapeSpec::Matrix(rows),
            (None, None, None) => return Err(CliError::validation("landscape", "give either `a` and `b` or `matrix`")),
            (Some(_), None, None) => return Err(CliError::validation("b", "`a` requires `b`")),
            (None, Some(_), None) => return Err(CliError::validation("a", "`b` requires `a`")),
            _ => {
                return Err(CliError::validation(
                    "landscape",
                    "`a`/`b` and `matrix` are mutually exclusive",
                ))
            }
        };
        let x0 = self.x0.ok_or_else(|| CliError::validation("x0", "required"))?;
        let spec = RunSpec {
            landscape,
            dynamic: self.dynamic.unwrap_or(DynamicChoice::Replicator),
            momentum: self.momentum.unwrap_or(MomentumKind::None),
            alpha: self.alpha.unwrap_or(DEFAULT_ALPHA),
            beta: self.beta.unwrap_or(0.0),
            normalize: self.normalize.unwrap_or(false),
            x0,
            reference: self.reference,
            max_steps: self.max_steps.unwrap_or(DEFAULT_MAX_STEPS),
            epsilon: self.epsilon.unwrap_or(DEFAULT_CONVERGENCE_EPSILON),
            boundary_delta: self.boundary_delta.unwrap_or(DEFAULT_BOUNDARY_DELTA),
            horizon: self.horizon.unwrap_or(DEFAULT_HORIZON),
            step: self.step.unwrap_or(DEFAULT_CONTINUOUS_STEP),
            record_every: self.record_every.unwrap_or(1),
            seed: self.seed.unwrap_or(0),
            output_path: self.output_path.unwrap_or_else(|| DEFAULT_OUTPUT.to_string()),
            formats: self
                .formats
                .unwrap_or_else(|| vec![Format::Csv, Format::Json, Format::Svg]),
        };
        validate(&spec)?;
        Ok(spec)
    }
}

fn validate(spec: &RunSpec) -> Result<()> {
    let landscape = spec.build_landscape()?;
    let n = landscape.dim();
    for (field, v) in [("x0", Some(&spec.x0)), ("reference", spec.reference.as_ref())] {
        if let Some(v) = v {
            if v.len() != n {
                return Err(CliError::validation(
                    field,
                    format!("needs {n} entries, got {}", v.len()),
                ));
            }
        }
    }
    spec.x0_point()?;
    spec.reference_point()?;
    if let Err(evodyn_core::Error::InvalidConfig { field, reason }) = spec.dynamics_config().validate(n) {
        return Err(CliError::validation(field, reason));
    }
    if spec.dynamic == DynamicChoice::Continuous {
        if (1.0 - spec.beta).abs() < 1e-9 {
            return Err(CliError::validation(
                "beta",
                format!(
                    "beta = {} is singular for the continuous dynamic (time scale 1/(1 - beta))",
                    spec.beta
                ),
            ));
        }
        if spec.horizon <= 0.0 {
            return Err(CliError::validation("horizon", "must be positive"));
        }
        if !(spec.step > 0.0 && spec.step <= spec.horizon) {
            return Err(CliError::validation("step", "must lie in (0, horizon]"));
        }
    }
    if spec.formats.is_empty() {
        return Err(CliError::validation("formats", "at least one of csv, json, svg"));
    }
    if spec.formats.contains(&Format::Svg) && n != 3 {
        return Err(CliError::validation(
            "formats",
            format!("svg needs 3 strategies, landscape has {n}"),
        ));
    }
    Ok(())
}

/// Reads run-file text into a builder without applying defaults, so
/// command-line flags can still be layered on top.
pub fn parse_builder(text: &str) -> Result<SpecBuilder> {
    let mut builder = SpecBuilder::new();
    let mut seen = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(CliError::Parse {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            });
        };
        let key = key.trim();
        if !seen.insert(key.to_string()) {
            return Err(CliError::Parse {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        builder.set(key, value).map_err(|e| CliError::Parse {
            line,
            message: match e {
                SetError::UnknownKey(k) => format!("unknown key `{k}`"),
                SetError::BadValue { key, reason } => format!("`{key}`: {reason}"),
            },
        })?;
    }
    Ok(builder)
}

/// Parses and validates run-file text.
pub fn parse_config_str(text: &str) -> Result<RunSpec> {
    parse_builder(text)?.finish()
}

pub fn read_builder(path: impl AsRef<Path>) -> Result<SpecBuilder> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_builder(&text)
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<RunSpec> {
    read_builder(path)?.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    const NESTEROV_RPS: &str = "\
# cycling break, accelerated variant
a = 1
b = -1
dynamic = replicator
momentum = nesterov
alpha = 0.005
beta = 0.65   # momentum
x0 = 0.8, 0.15, 0.05
";

    #[test]
    fn parses_rps_nesterov_file() {
        let s = parse_config_str(NESTEROV_RPS).unwrap();
        assert_eq!(s.landscape, LandscapeSpec::Cyclic { a: 1.0, b: -1.0 });
        assert_eq!(s.momentum, MomentumKind::Nesterov);
        assert_eq!((s.alpha, s.beta), (0.005, 0.65));
        assert_eq!(s.dynamics_config().momentum_coefficient, 0.65);
        assert_eq!(s.formats, vec![Format::Csv, Format::Json, Format::Svg]);
        assert_eq!(s.reference_point().unwrap(), SimplexPoint::barycenter(3));
    }

    #[test]
    fn missing_x0_names_the_field() {
        let err = parse_config_str("a = 2\nb = 1\n").unwrap_err();
        assert!(
            matches!(&err, CliError::Validation { field, .. } if field == "x0"),
            "{err}"
        );
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn continuous_beta_one_is_singular() {
        let err = parse_config_str("a = 2\nb = 1\nx0 = 0.5,0.3,0.2\ndynamic = continuous\nbeta = 1.0\n").unwrap_err();
        assert!(
            matches!(&err, CliError::Validation { field, reason } if field == "beta" && reason.contains("singular"))
        );
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_config_str("a = 2\n\nb = 1\ncolour = red\n").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 4, .. }), "{err}");
        let err = parse_config_str("a = 2\nb\n").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 2, .. }));
        let err = parse_config_str("a = 2\na = 3\n").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 2, .. }));
        let err = parse_config_str("a = two\n").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 1, .. }));
    }

    #[test]
    fn range_checks_follow_dynamics_config() {
        let base = "a = 1\nb = 1\nx0 = 0.5,0.3,0.2\n";
        for (extra, field) in [
            ("alpha = 0", "alpha"),
            ("epsilon = -1", "epsilon"),
            ("boundary_delta = 0.5", "boundary_delta"),
            ("max_steps = 0", "max_steps"),
            ("record_every = 0", "record_every"),
            ("formats = ", "formats"),
            ("reference = 0.5, 0.5", "reference"),
        ] {
            let err = parse_config_str(&format!("{base}{extra}\n")).unwrap_err();
            assert!(
                matches!(&err, CliError::Validation { field: f, .. } if f == field),
                "{extra}: {err}"
            );
        }
    }

    #[test]
    fn landscape_must_be_exactly_one_form() {
        let err = parse_config_str("x0 = 0.5,0.5\n").unwrap_err();
        assert!(matches!(&err, CliError::Validation { field, .. } if field == "landscape"));
        let err = parse_config_str("a = 1\nb = 1\nmatrix = 0,1;1,0\nx0 = 0.5,0.5\n").unwrap_err();
        assert!(matches!(&err, CliError::Validation { field, .. } if field == "landscape"));
    }

    #[test]
    fn svg_requires_three_strategies() {
        let text = "matrix = 0,1;1,0\nx0 = 0.4,0.6\n";
        let err = parse_config_str(text).unwrap_err();
        assert!(matches!(&err, CliError::Validation { field, .. } if field == "formats"));
        let s = parse_config_str(&format!("{text}formats = csv,json\n")).unwrap();
        assert_eq!(s.dim(), 2);
    }

    #[test]
    fn dump_round_trips() {
        let mut s = parse_config_str(NESTEROV_RPS).unwrap();
        assert_eq!(parse_config_str(&s.to_config_string()).unwrap(), s);
        s.landscape = LandscapeSpec::Matrix(vec![vec![0.1, 1.0 / 3.0, -2.0], vec![0.0; 3], vec![1e-300, 5.0, 7.25]]);
        s.reference = Some(vec![0.2, 0.3, 0.5]);
        s.alpha = 1.0 / 200.0;
        s.formats = vec![Format::Json];
        s.dynamic = DynamicChoice::Continuous;
        assert_eq!(parse_config_str(&s.to_config_string()).unwrap(), s);
    }
}
