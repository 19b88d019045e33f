//! Scenario files: a complete description of one data-generating process.

use std::fmt;
use std::path::Path;

use rand::Rng;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::kvfile::KvFile;

/// A scalar law for a heterogeneous quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Law {
    Constant(f64),
    Normal { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Law {
    /// Parses `constant:c`, `normal:mean,sd`, or `uniform:lo,hi`.
    pub fn parse(s: &str) -> Result<Law> {
        let err = || Error::InvalidScenario(format!("cannot parse law `{s}`"));
        let (kind, args) = s.split_once(':').ok_or_else(err)?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| err()))
            .collect::<Result<_>>()?;
        match (kind.trim(), nums.as_slice()) {
            ("constant", [c]) => Ok(Law::Constant(*c)),
            ("normal", [mean, sd]) if *sd >= 0.0 => Ok(Law::Normal { mean: *mean, sd: *sd }),
            ("uniform", [lo, hi]) if lo <= hi => Ok(Law::Uniform { lo: *lo, hi: *hi }),
            _ => Err(err()),
        }
    }

    pub fn draw(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            Law::Constant(c) => c,
            Law::Normal { mean, sd } => {
                if sd == 0.0 {
                    mean
                } else {
                    rand_distr::Normal::new(mean, sd).expect("validated sd").sample(rng)
                }
            }
            Law::Uniform { lo, hi } => {
                if lo == hi {
                    lo
                } else {
                    rng.random_range(lo..hi)
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Law::Constant(c) => c,
            Law::Normal { mean, .. } => mean,
            Law::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        match *self {
            Law::Constant(_) => true,
            Law::Normal { sd, .. } => sd == 0.0,
            Law::Uniform { lo, hi } => lo == hi,
        }
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Law::Constant(c) => write!(f, "constant:{c}"),
            Law::Normal { mean, sd } => write!(f, "normal:{mean},{sd}"),
            Law::Uniform { lo, hi } => write!(f, "uniform:{lo},{hi}"),
        }
    }
}

/// How each agent's margin state is assigned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarginLaw {
    /// Derived from the base-utility preference ranking: the margin of the
    /// top-ranked option's comparison against its next-best alternative.
    Ranking,
    /// Independent coin with the given probability of margin = 1.
    Bernoulli(f64),
}

impl MarginLaw {
    pub fn parse(s: &str) -> Result<MarginLaw> {
        if s == "ranking" {
            return Ok(MarginLaw::Ranking);
        }
        if let Some(q) = s.strip_prefix("bernoulli:") {
            let q: f64 = q
                .parse()
                .map_err(|_| Error::InvalidScenario(format!("bad margin law `{s}`")))?;
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::InvalidScenario(format!("margin probability {q} outside [0,1]")));
            }
            return Ok(MarginLaw::Bernoulli(q));
        }
        Err(Error::InvalidScenario(format!("unknown margin law `{s}`")))
    }
}

/// Full description of one simulated population.
///
/// Outcome side: potential outcomes y^k_ic are built from a base level
/// (`y_base`), per-option level returns (`rho1`, `rho2`), the base income
/// elasticity (`delta0`), and the option-specific elasticity shifts
/// (`delta1`, `delta2`).
///
/// Choice side: latent utilities U_k = V_k + taste_k + margin and income
/// terms, with the chosen option the argmax (ties to the lowest index).
/// `gamma.*` put income into the utilities; `gamma_margin.*` make that
/// income response margin-dependent; `selection_strength` correlates tastes
/// with the outcome elasticities; `compliance_selection` correlates the
/// option-0 taste with compliance type; `level_selection` correlates outcome
/// levels with compliance type.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub population_size: usize,
    pub share_never: f64,
    pub share_complier: f64,
    pub share_always: f64,
    pub instrument_probability: f64,
    pub seed: u64,

    pub y_base: Law,
    pub delta0: Law,
    pub delta1: Law,
    pub delta2: Law,
    pub rho1: Law,
    pub rho2: Law,
    pub level_selection: f64,

    pub value: [f64; 3],
    pub taste: [Law; 3],
    pub gamma: [f64; 3],
    pub gamma_margin: [f64; 3],
    pub margin_shift: [f64; 3],
    pub selection_strength: f64,
    pub compliance_selection: f64,
    pub margin_law: MarginLaw,
    pub restrictive_preferences: bool,

    /// Option whose choice equation the verification targets (0, 1, or 2).
    pub target_option: usize,
    /// Propositions this scenario is meant to verify (parsed by the CLI).
    pub verify: Vec<String>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "scenario".to_string(),
            population_size: 10_000,
            share_never: 0.2,
            share_complier: 0.6,
            share_always: 0.2,
            instrument_probability: 0.5,
            seed: 42,
            y_base: Law::Constant(0.0),
            delta0: Law::Constant(0.0),
            delta1: Law::Constant(0.0),
            delta2: Law::Constant(0.0),
            rho1: Law::Constant(0.0),
            rho2: Law::Constant(0.0),
            level_selection: 0.0,
            value: [0.0; 3],
            taste: [Law::Normal { mean: 0.0, sd: 1.0 }; 3],
            gamma: [0.0; 3],
            gamma_margin: [0.0; 3],
            margin_shift: [0.0; 3],
            selection_strength: 0.0,
            compliance_selection: 0.0,
            margin_law: MarginLaw::Ranking,
            restrictive_preferences: false,
            target_option: 1,
            verify: Vec::new(),
        }
    }
}

const SCENARIO_KEYS: [&str; 35] = [
    "name",
    "population_size",
    "share_never",
    "share_complier",
    "share_always",
    "instrument_probability",
    "seed",
    "y_base",
    "delta0",
    "delta1",
    "delta2",
    "rho1",
    "rho2",
    "level_selection",
    "value0",
    "value1",
    "value2",
    "taste0",
    "taste1",
    "taste2",
    "gamma0",
    "gamma1",
    "gamma2",
    "gamma_margin0",
    "gamma_margin1",
    "gamma_margin2",
    "margin_shift0",
    "margin_shift1",
    "margin_shift2",
    "selection_strength",
    "compliance_selection",
    "margin",
    "restrictive_preferences",
    "target_option",
    "verify",
];

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let shares = [self.share_never, self.share_complier, self.share_always];
        if shares.iter().any(|s| *s < 0.0) {
            return Err(Error::InvalidScenario("compliance shares must be ≥ 0".to_string()));
        }
        let total: f64 = shares.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidScenario(format!(
                "compliance shares sum to {total}, expected 1"
            )));
        }
        if self.population_size == 0 {
            return Err(Error::InvalidScenario("population_size must be ≥ 1".to_string()));
        }
        if !(0.0..=1.0).contains(&self.instrument_probability) {
            return Err(Error::InvalidScenario(format!(
                "instrument_probability {} outside [0,1]",
                self.instrument_probability
            )));
        }
        if self.target_option > 2 {
            return Err(Error::InvalidScenario(format!(
                "target_option {} outside 0..=2",
                self.target_option
            )));
        }
        Ok(())
    }

    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        kv.check_keys(&SCENARIO_KEYS)?;
        let mut cfg = ScenarioConfig::default();
        if let Some(n) = kv.get("name") {
            cfg.name = n.to_string();
        }
        cfg.population_size = kv.parse_or("population_size", cfg.population_size)?;
        cfg.share_never = kv.parse_or("share_never", cfg.share_never)?;
        cfg.share_complier = kv.parse_or("share_complier", cfg.share_complier)?;
        cfg.share_always = kv.parse_or("share_always", cfg.share_always)?;
        cfg.instrument_probability =
            kv.parse_or("instrument_probability", cfg.instrument_probability)?;
        cfg.seed = kv.parse_or("seed", cfg.seed)?;
        let law = |key: &str, default: Law| -> Result<Law> {
            match kv.get(key) {
                None => Ok(default),
                Some(v) => Law::parse(v),
            }
        };
        cfg.y_base = law("y_base", cfg.y_base)?;
        cfg.delta0 = law("delta0", cfg.delta0)?;
        cfg.delta1 = law("delta1", cfg.delta1)?;
        cfg.delta2 = law("delta2", cfg.delta2)?;
        cfg.rho1 = law("rho1", cfg.rho1)?;
        cfg.rho2 = law("rho2", cfg.rho2)?;
        cfg.level_selection = kv.parse_or("level_selection", cfg.level_selection)?;
        for k in 0..3 {
            cfg.value[k] = kv.parse_or(&format!("value{k}"), cfg.value[k])?;
            cfg.taste[k] = law(&format!("taste{k}"), cfg.taste[k])?;
            cfg.gamma[k] = kv.parse_or(&format!("gamma{k}"), cfg.gamma[k])?;
            cfg.gamma_margin[k] = kv.parse_or(&format!("gamma_margin{k}"), cfg.gamma_margin[k])?;
            cfg.margin_shift[k] = kv.parse_or(&format!("margin_shift{k}"), cfg.margin_shift[k])?;
        }
        cfg.selection_strength = kv.parse_or("selection_strength", cfg.selection_strength)?;
        cfg.compliance_selection =
            kv.parse_or("compliance_selection", cfg.compliance_selection)?;
        if let Some(m) = kv.get("margin") {
            cfg.margin_law = MarginLaw::parse(m)?;
        }
        cfg.restrictive_preferences =
            kv.parse_or("restrictive_preferences", cfg.restrictive_preferences)?;
        cfg.target_option = kv.parse_or("target_option", cfg.target_option)?;
        cfg.verify = kv.list("verify");
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_kv(&KvFile::load(path)?)?;
        if cfg.name == "scenario" {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                cfg.name = stem.to_string();
            }
        }
        Ok(cfg)
    }

    /// Copy with a different seed (used for replication streams).
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.seed = seed;
        c
    }
}
