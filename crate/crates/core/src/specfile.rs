//! TOML files for chains, weights and runs. One file may hold any of the
//! `[chain]`, `[weight]` and `[run]` sections.
//!
//! ```toml
//! [chain]
//! label = "B"
//! p = ["1"]
//! q = ["0"]
//! [chain.tail]
//! p = "1/2"
//! q = "1/2"
//!
//! [weight]
//! label = "E"
//! eta = "1"
//! alpha = "1/2"
//! beta = "1/2"
//! smooth = "2 + x"
//! atoms = [["1/2", "1/10"]]
//!
//! [run]
//! precision = 34
//! truncation = 400
//! horizon = 2000
//! ```

use std::path::{Path, PathBuf};

use rug::Rational;
use serde::{Deserialize, Serialize};

use crate::chain::{parse_rationals, ChainSpec, TailRule};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::weight::WeightSpec;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSection {
    pub p: String,
    pub q: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub label: String,
    #[serde(default)]
    pub p: Vec<String>,
    #[serde(default)]
    pub q: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub r: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kappa: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailSection>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSection {
    pub label: String,
    #[serde(default = "one")]
    pub eta: String,
    pub alpha: String,
    pub beta: String,
    #[serde(default = "one")]
    pub smooth: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atoms: Vec<(String, String)>,
}

fn one() -> String {
    "1".into()
}

/// Run parameters; every field has a default.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub precision: u32,
    pub truncation: usize,
    pub horizon: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub samples: u64,
    /// Grid size for weight discretization.
    pub grid: usize,
    /// Evaluation point for `polys` and `christoffel`.
    pub x: Option<String>,
    /// `i, j, k, l` for transition queries and ratio limits.
    pub indices: [usize; 4],
    /// Step count for transition queries.
    pub steps: usize,
    /// Number of states for `absorb`, `normalize` and `recover`.
    pub depth: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            precision: 34,
            truncation: 400,
            horizon: 2000,
            seed: 1,
            out: None,
            samples: 1_000_000,
            grid: 2400,
            x: None,
            indices: [0, 0, 0, 0],
            steps: 10,
            depth: 50,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightSection>,
    #[serde(default)]
    pub run: RunConfig,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub chain: Option<ChainSpec>,
    pub weight: Option<WeightSpec>,
    pub run: RunConfig,
}

fn parse_err(context: &str, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        context: context.into(),
        msg: e.to_string(),
    }
}

fn rational(context: &str, s: &str) -> Result<Rational> {
    match Expr::parse(s, 'x').map_err(|e| parse_err(context, e))? {
        Expr::Num(r) => Ok(r),
        _ => Err(parse_err(context, format!("'{s}' is not a constant"))),
    }
}

impl ChainSection {
    pub fn to_spec(&self) -> Result<ChainSpec> {
        let tail = match &self.tail {
            None => None,
            Some(t) => Some(TailRule::parse(&t.p, &t.q, t.r.as_deref(), t.kappa.as_deref())?),
        };
        ChainSpec::new(
            self.label.clone(),
            parse_rationals(&self.p)?,
            parse_rationals(&self.q)?,
            parse_rationals(&self.r)?,
            parse_rationals(&self.kappa)?,
            tail,
        )
    }

    pub fn from_spec(c: &ChainSpec) -> ChainSection {
        let strs = |v: &[Rational]| v.iter().map(|r| r.to_string()).collect::<Vec<_>>();
        let zero_kappa = c.prefix_kappa.iter().all(|k| *k == 0);
        ChainSection {
            label: c.label.clone(),
            p: strs(&c.prefix_p),
            q: strs(&c.prefix_q),
            r: strs(&c.prefix_r),
            kappa: if zero_kappa { vec![] } else { strs(&c.prefix_kappa) },
            tail: c.tail.as_ref().map(|t| TailSection {
                p: t.p.to_source('j'),
                q: t.q.to_source('j'),
                r: Some(t.r.to_source('j')),
                kappa: Some(t.kappa.to_source('j')),
            }),
        }
    }
}

impl WeightSection {
    pub fn to_spec(&self) -> Result<WeightSpec> {
        let ctx = format!("weight {}", self.label);
        let atoms = self
            .atoms
            .iter()
            .map(|(a, m)| Ok((rational(&ctx, a)?, rational(&ctx, m)?)))
            .collect::<Result<Vec<_>>>()?;
        WeightSpec::new(
            self.label.clone(),
            rational(&ctx, &self.eta)?,
            rational(&ctx, &self.alpha)?,
            rational(&ctx, &self.beta)?,
            Expr::parse(&self.smooth, 'x')?,
            atoms,
        )
    }

    pub fn from_spec(w: &WeightSpec) -> WeightSection {
        WeightSection {
            label: w.label.clone(),
            eta: w.eta.to_string(),
            alpha: w.alpha.to_string(),
            beta: w.beta.to_string(),
            smooth: w.smooth.to_source('x'),
            atoms: w.atoms.iter().map(|(a, m)| (a.to_string(), m.to_string())).collect(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.precision < 15 {
            return Err(Error::InvalidInput(format!(
                "precision must be at least 15 digits, got {}",
                self.precision
            )));
        }
        if self.truncation < 2 {
            return Err(Error::InvalidInput(format!(
                "truncation must be at least 2, got {}",
                self.truncation
            )));
        }
        Ok(())
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| parse_err("config", e))?;
    file.run.validate()?;
    Ok(ExperimentConfig {
        chain: file.chain.as_ref().map(ChainSection::to_spec).transpose()?,
        weight: file.weight.as_ref().map(WeightSection::to_spec).transpose()?,
        run: file.run,
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

/// A chain as a config file with a `[chain]` section only.
pub fn chain_to_toml(chain: &ChainSpec, comment: Option<&str>) -> String {
    let file = ConfigFile {
        chain: Some(ChainSection::from_spec(chain)),
        weight: None,
        run: RunConfig::default(),
    };
    let mut s = String::new();
    if let Some(c) = comment {
        s.push_str(&format!("# {c}\n"));
    }
    let body = toml::to_string(&file).expect("chain section serializes");
    // Drop the default [run] block.
    let body = match body.find("[run]") {
        Some(pos) => body[..pos].trim_end().to_string() + "\n",
        None => body,
    };
    s.push_str(&body);
    s
}

pub fn weight_to_toml(weight: &WeightSpec) -> String {
    #[derive(Serialize)]
    struct W<'a> {
        weight: &'a WeightSection,
    }
    toml::to_string(&W {
        weight: &WeightSection::from_spec(weight),
    })
    .expect("weight section serializes")
}
