use std::path::PathBuf;

use clap::Args;
use manifold_points::counter::Method;
use manifold_points::scalar::{format_rational, parse_rational};
use manifold_points::{ApproxFunction, Rational, Support, Window};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_QMIN: u64 = 2;
pub const DEFAULT_SERIES_QMAX: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_BUDGET: u64 = 100_000_000;

/// Options shared by every subcommand. A `--config` TOML file uses the same
/// keys; flags given on the command line take precedence.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    /// TOML file with any of these options.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Preset (`parabola`, `paraboloid(2)`, ...) or a manifold TOML file.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifold: Option<String>,
    /// `pow:τ`, `powlog:τ:β`, `const:c`, `table:{q:v,...}` or `table:<file>`,
    /// optionally followed by `:x<scale>`.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<String>,
    /// `all`, `lacunary:<b>`, `set:{...}` or `set:<file>`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support: Option<String>,
    /// `λ_1,...,λ_d,γ_1,...,γ_m` as rational literals.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qmin: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qmax: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Hausdorff exponent.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<String>,
    /// Shorthand for `--psi pow:τ` in `series`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<String>,
    /// Taylor constant of the block decomposition; estimated when absent.
    #[arg(long = "C1")]
    #[serde(rename = "C1", skip_serializing_if = "Option::is_none")]
    pub taylor_c1: Option<String>,
    /// Lipschitz constant used by `cover`; estimated when absent.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<String>,
    /// `paper` or `half`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<String>,
    /// `exact` or `pruned`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    /// `auto`, `exact` or `float`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arithmetic: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    /// Largest number of terms in one exponential-sum evaluation.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    /// `fast` or `full`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    #[arg(long, env = "MPOINTS_THREADS")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Write 0 in timing fields.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub no_timing: bool,
    /// `csv` or `json`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Options {
    /// Fills every unset field from `base`.
    pub fn over(self, base: Options) -> Options {
        Options {
            config: self.config.or(base.config),
            manifold: self.manifold.or(base.manifold),
            psi: self.psi.or(base.psi),
            support: self.support.or(base.support),
            theta: self.theta.or(base.theta),
            q: self.q.or(base.q),
            qmin: self.qmin.or(base.qmin),
            qmax: self.qmax.or(base.qmax),
            d: self.d.or(base.d),
            m: self.m.or(base.m),
            s: self.s.or(base.s),
            tau: self.tau.or(base.tau),
            taylor_c1: self.taylor_c1.or(base.taylor_c1),
            lipschitz: self.lipschitz.or(base.lipschitz),
            window: self.window.or(base.window),
            method: self.method.or(base.method),
            arithmetic: self.arithmetic.or(base.arithmetic),
            seed: self.seed.or(base.seed),
            samples: self.samples.or(base.samples),
            budget: self.budget.or(base.budget),
            suite: self.suite.or(base.suite),
            threads: self.threads.or(base.threads),
            no_timing: self.no_timing || base.no_timing,
            format: self.format.or(base.format),
            output: self.output.or(base.output),
        }
    }

    /// Applies the `--config` file, if any.
    pub fn resolve_file(self) -> Result<Options, CliError> {
        match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read config `{}`: {e}", path.display())))?;
                let file: Options = toml::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("config `{}`: {e}", path.display())))?;
                Ok(self.over(file))
            }
            None => Ok(self),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Arithmetic {
    /// Exact rationals when every ψ(q) in play is rational, `f64` otherwise.
    #[default]
    Auto,
    Exact,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Suite {
    #[default]
    Fast,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub manifold: String,
    pub psi: Option<ApproxFunction>,
    pub theta: Option<Vec<Rational>>,
    pub q: Option<u64>,
    pub qmin: Option<u64>,
    pub qmax: Option<u64>,
    pub d: Option<usize>,
    pub m: Option<usize>,
    pub s: Option<Rational>,
    pub tau: Option<Rational>,
    pub taylor_c1: Option<Rational>,
    pub lipschitz: Option<Rational>,
    pub window: Window,
    pub method: Method,
    pub arithmetic: Arithmetic,
    pub seed: Option<u64>,
    pub samples: Option<u64>,
    pub budget: u64,
    pub suite: Suite,
    pub threads: Option<usize>,
    pub no_timing: bool,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            manifold: "parabola".into(),
            psi: None,
            theta: None,
            q: None,
            qmin: None,
            qmax: None,
            d: None,
            m: None,
            s: None,
            tau: None,
            taylor_c1: None,
            lipschitz: None,
            window: Window::Paper,
            method: Method::Pruned,
            arithmetic: Arithmetic::Auto,
            seed: None,
            samples: None,
            budget: DEFAULT_BUDGET,
            suite: Suite::Fast,
            threads: None,
            no_timing: false,
            format: None,
            output: None,
        }
    }
}

fn rational(key: &str, text: &str) -> Result<Rational, CliError> {
    parse_rational(text).map_err(|e| CliError::Usage(format!("--{key}: {e}")))
}

fn opt_rational(key: &str, text: Option<&String>) -> Result<Option<Rational>, CliError> {
    text.map(|t| rational(key, t)).transpose()
}

pub fn parse_rational_list(text: &str) -> Result<Vec<Rational>, CliError> {
    text.split(',')
        .map(|t| rational("theta", t))
        .collect()
}

impl RunConfig {
    pub fn from_options(o: &Options) -> Result<RunConfig, CliError> {
        let mut psi = o
            .psi
            .as_deref()
            .map(|p| p.parse::<ApproxFunction>().map_err(|e| CliError::Usage(format!("--psi: {e}"))))
            .transpose()?;
        if let Some(sup) = &o.support {
            let support: Support = sup.parse().map_err(|e| CliError::Usage(format!("--support: {e}")))?;
            let base = psi.ok_or_else(|| CliError::Usage("--support needs --psi".into()))?;
            psi = Some(base.with_support(support).map_err(|e| CliError::Usage(format!("--support: {e}")))?);
        }
        let window = match o.window.as_deref() {
            None => Window::Paper,
            Some(w) => w.parse().map_err(|e| CliError::Usage(format!("--window: {e}")))?,
        };
        let method = match o.method.as_deref() {
            None | Some("pruned") => Method::Pruned,
            Some("exact") => Method::Exact,
            Some(other) => return Err(CliError::Usage(format!("--method: unknown method `{other}` (exact, pruned)"))),
        };
        let arithmetic = match o.arithmetic.as_deref() {
            None | Some("auto") => Arithmetic::Auto,
            Some("exact") => Arithmetic::Exact,
            Some("float") => Arithmetic::Float,
            Some(other) => {
                return Err(CliError::Usage(format!("--arithmetic: unknown mode `{other}` (auto, exact, float)")))
            }
        };
        let suite = match o.suite.as_deref() {
            None | Some("fast") => Suite::Fast,
            Some("full") => Suite::Full,
            Some(other) => return Err(CliError::Usage(format!("--suite: unknown suite `{other}` (fast, full)"))),
        };
        let format = match o.format.as_deref() {
            None => None,
            Some("csv") => Some(Format::Csv),
            Some("json") => Some(Format::Json),
            Some(other) => return Err(CliError::Usage(format!("--format: unknown format `{other}` (csv, json)"))),
        };
        if o.threads == Some(0) {
            return Err(CliError::Usage("--threads: `0` is not a thread count".into()));
        }
        Ok(RunConfig {
            manifold: o.manifold.clone().unwrap_or_else(|| "parabola".into()),
            psi,
            theta: o.theta.as_deref().map(parse_rational_list).transpose()?,
            q: o.q,
            qmin: o.qmin,
            qmax: o.qmax,
            d: o.d,
            m: o.m,
            s: opt_rational("s", o.s.as_ref())?,
            tau: opt_rational("tau", o.tau.as_ref())?,
            taylor_c1: opt_rational("C1", o.taylor_c1.as_ref())?,
            lipschitz: opt_rational("lipschitz", o.lipschitz.as_ref())?,
            window,
            method,
            arithmetic,
            seed: o.seed,
            samples: o.samples,
            budget: o.budget.unwrap_or(DEFAULT_BUDGET),
            suite,
            threads: o.threads,
            no_timing: o.no_timing,
            format,
            output: o.output.clone(),
        })
    }

    /// Options that reproduce this configuration, with every value in
    /// canonical form.
    pub fn to_options(&self) -> Options {
        let fmt = |r: &Option<Rational>| r.as_ref().map(format_rational);
        let psi_text = self.psi.as_ref().map(|p| p.to_string());
        let support = self
            .psi
            .as_ref()
            .filter(|p| p.support != Support::All)
            .map(|p| p.support.to_string());
        Options {
            config: None,
            manifold: Some(self.manifold.clone()),
            psi: psi_text,
            support,
            theta: self
                .theta
                .as_ref()
                .map(|t| t.iter().map(format_rational).collect::<Vec<_>>().join(",")),
            q: self.q,
            qmin: self.qmin,
            qmax: self.qmax,
            d: self.d,
            m: self.m,
            s: fmt(&self.s),
            tau: fmt(&self.tau),
            taylor_c1: fmt(&self.taylor_c1),
            lipschitz: fmt(&self.lipschitz),
            window: Some(
                match self.window {
                    Window::Paper => "paper",
                    Window::Half => "half",
                }
                .into(),
            ),
            method: Some(
                match self.method {
                    Method::Exact => "exact",
                    Method::Pruned => "pruned",
                }
                .into(),
            ),
            arithmetic: Some(
                match self.arithmetic {
                    Arithmetic::Auto => "auto",
                    Arithmetic::Exact => "exact",
                    Arithmetic::Float => "float",
                }
                .into(),
            ),
            seed: self.seed,
            samples: self.samples,
            budget: Some(self.budget),
            suite: Some(
                match self.suite {
                    Suite::Fast => "fast",
                    Suite::Full => "full",
                }
                .into(),
            ),
            threads: self.threads,
            no_timing: self.no_timing,
            format: self.format.map(|f| {
                match f {
                    Format::Csv => "csv",
                    Format::Json => "json",
                }
                .into()
            }),
            output: self.output.clone(),
        }
    }

    /// Canonical TOML text; parsing it back yields an equal configuration.
    pub fn to_canonical_text(&self) -> String {
        toml::to_string(&self.to_options()).expect("options serialize to TOML")
    }

    pub fn from_text(text: &str) -> Result<RunConfig, CliError> {
        let o: Options = toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        RunConfig::from_options(&o)
    }
}
