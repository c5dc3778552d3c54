//! Run-configuration schema: a single JSON document with the construction
//! parameters plus per-subcommand blocks. Integers that may exceed 64
//! bits travel as decimal strings; unknown keys are rejected.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::Deserialize;

use sidonlab_core::construction::{ConstructionParams, CutRule, StageSpec, Tower, TowerCaps};
use sidonlab_core::{hp, Int, Rat};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamsConfig,
    /// Significant digits for decimal renderings of exact rationals.
    #[serde(default)]
    pub precision: Option<u32>,
    #[serde(default)]
    pub stage_cap: Option<u32>,
    #[serde(default)]
    pub range_cap: Option<usize>,
    /// Oracle floor budget.
    #[serde(default)]
    pub budget_floors: Option<u64>,
    /// Named level sets referenced by the analysis blocks.
    #[serde(default)]
    pub sets: BTreeMap<String, SetDef>,
    #[serde(default)]
    pub stages: Option<StagesBlock>,
    #[serde(default)]
    pub sidon: Option<SidonBlock>,
    #[serde(default)]
    pub theorem3: Option<WitnessBlock>,
    #[serde(default)]
    pub mixing: Option<MixingBlock>,
    #[serde(default)]
    pub poisson: Option<PoissonBlock>,
    #[serde(default)]
    pub oracle_check: Option<OracleCheckBlock>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    /// Rational or decimal string; defaults to "1".
    #[serde(default)]
    pub base_width: Option<String>,
    pub rule: RuleConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum RuleConfig {
    /// Built-in family: doubling cuts, spacers `d^i * h_j`.
    Sidon {
        d: String,
    },
    Explicit {
        stages: Vec<StageConfig>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub cuts: String,
    pub spacers: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SetDef {
    /// The full tower `X_j` of the given stage.
    Tower { tower: u32 },
    /// Explicit level ranges `[a, b)` at a stage.
    Ranges {
        stage: u32,
        ranges: Vec<(String, String)>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StagesBlock {
    pub max_stage: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SidonBlock {
    pub j: u32,
    /// Exhaustive-scan budget on the window size; decimal string.
    #[serde(default)]
    pub budget: Option<String>,
    #[serde(default)]
    pub random_samples: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessBlock {
    pub set: String,
    pub stages: Vec<u32>,
    /// "forward", "inverse", or "both" (default).
    #[serde(default)]
    pub direction: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixingBlock {
    pub a: String,
    pub b: String,
    pub ns: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoissonBlock {
    /// Significant digits for probability evaluation (default 50).
    #[serde(default)]
    pub precision: Option<u32>,
    #[serde(default)]
    pub max_factors: Option<usize>,
    #[serde(default)]
    pub max_count: Option<u32>,
    #[serde(default)]
    pub rate_cap: Option<String>,
    #[serde(default)]
    pub cylinders: Vec<CylinderConfig>,
    #[serde(default)]
    pub gap: Option<GapConfig>,
    #[serde(default)]
    pub mc: Option<McConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderConfig {
    pub label: String,
    pub parts: Vec<PartConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartConfig {
    pub set: String,
    pub count: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapConfig {
    /// Labels of cylinders from `cylinders`.
    pub c: String,
    pub c_prime: String,
    pub n: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub factors: Vec<FactorConfig>,
    pub samples: u64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorConfig {
    pub set: String,
    pub shift: String,
    pub count: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleCheckBlock {
    #[serde(default)]
    pub random_sets: Option<u32>,
    #[serde(default)]
    pub expr_cases_per_set: Option<u32>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Run against the config's own params instead of the built-in tiny
    /// parameter sets (requires tiny explicit params).
    #[serde(default)]
    pub use_params: Option<bool>,
}

/// A configuration error message destined for exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

pub fn parse_int(s: &str, what: &str) -> Result<Int, ConfigError> {
    Int::from_str(s.trim()).map_err(|_| ConfigError(format!("{what}: not an integer: {s:?}")))
}

pub fn parse_u64(s: &str, what: &str) -> Result<u64, ConfigError> {
    s.trim()
        .parse::<u64>()
        .map_err(|_| ConfigError(format!("{what}: not a 64-bit integer: {s:?}")))
}

/// Accepts "p/q", integers, and decimal strings.
pub fn parse_rat(s: &str, what: &str) -> Result<Rat, ConfigError> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n = parse_int(num, what)?;
        let d = parse_int(den, what)?;
        if d == Int::from(0) {
            return Err(ConfigError(format!("{what}: zero denominator in {s:?}")));
        }
        return Ok(Rat::new(n, d));
    }
    hp::parse_decimal(s).ok_or_else(|| ConfigError(format!("{what}: not a number: {s:?}")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn construction_params(&self) -> Result<ConstructionParams, ConfigError> {
        let base_width = match &self.params.base_width {
            Some(s) => parse_rat(s, "params.base_width")?,
            None => Rat::from_integer(Int::from(1)),
        };
        let rule = match &self.params.rule {
            RuleConfig::Sidon { d } => CutRule::Sidon {
                d: parse_int(d, "params.rule.sidon.d")?,
            },
            RuleConfig::Explicit { stages } => {
                let mut specs = Vec::with_capacity(stages.len());
                for (idx, st) in stages.iter().enumerate() {
                    let cuts = parse_u64(&st.cuts, &format!("stage {} cuts", idx + 1))?;
                    let spacers = st
                        .spacers
                        .iter()
                        .map(|s| parse_int(s, &format!("stage {} spacer", idx + 1)))
                        .collect::<Result<Vec<_>, _>>()?;
                    specs.push(StageSpec { cuts, spacers });
                }
                CutRule::Explicit { stages: specs }
            }
        };
        let params = ConstructionParams { base_width, rule };
        params.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(params)
    }

    pub fn tower(&self, stage_cap: Option<u32>) -> Result<Tower, ConfigError> {
        let params = self.construction_params()?;
        let mut caps = TowerCaps::default();
        if let Some(cap) = stage_cap.or(self.stage_cap) {
            caps.stage_cap = cap;
        }
        if let Some(cap) = self.range_cap {
            caps.range_cap = cap;
        }
        Tower::with_caps(params, caps).map_err(|e| ConfigError(e.to_string()))
    }

    /// Resolves a named set definition against the tower.
    pub fn resolve_set(
        &self,
        tower: &Tower,
        name: &str,
    ) -> Result<sidonlab_core::LevelSet, ConfigError> {
        let def = self
            .sets
            .get(name)
            .ok_or_else(|| ConfigError(format!("unknown set name {name:?}")))?;
        match def {
            SetDef::Tower { tower: j } => tower
                .tower_set(*j)
                .map_err(|e| ConfigError(format!("set {name:?}: {e}"))),
            SetDef::Ranges { stage, ranges } => {
                let parsed = ranges
                    .iter()
                    .map(|(a, b)| {
                        Ok((
                            parse_int(a, &format!("set {name:?} range start"))?,
                            parse_int(b, &format!("set {name:?} range end"))?,
                        ))
                    })
                    .collect::<Result<Vec<_>, ConfigError>>()?;
                tower
                    .level_set(*stage, parsed)
                    .map_err(|e| ConfigError(format!("set {name:?}: {e}")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_sidon_config() {
        let cfg = RunConfig::parse(r#"{"params": {"rule": {"sidon": {"d": "11"}}}}"#).unwrap();
        let params = cfg.construction_params().unwrap();
        assert!(params.sidon_hypothesis_satisfied());
        assert_eq!(params.base_width, Rat::from_integer(Int::from(1)));
    }

    #[test]
    fn rejects_unknown_keys() {
        let err = RunConfig::parse(r#"{"params": {"rule": {"sidon": {"d": "11"}}}, "bogus": 1}"#);
        assert!(err.is_err());
    }

    #[test]
    fn rejects_negative_d() {
        let cfg = RunConfig::parse(r#"{"params": {"rule": {"sidon": {"d": "-3"}}}}"#).unwrap();
        assert!(cfg.construction_params().is_err());
    }

    #[test]
    fn parses_explicit_rule_and_sets() {
        let cfg = RunConfig::parse(
            r#"{
              "params": {"base_width": "1/2", "rule": {"explicit": {"stages": [
                  {"cuts": "2", "spacers": ["1", "2"]}
              ]}}},
              "sets": {"X1": {"tower": 1}, "A": {"stage": 2, "ranges": [["0", "3"]]}}
            }"#,
        )
        .unwrap();
        let tower = cfg.tower(None).unwrap();
        let x1 = cfg.resolve_set(&tower, "X1").unwrap();
        assert_eq!(
            tower.measure(&x1).unwrap(),
            Rat::new(Int::from(1), Int::from(2))
        );
        let a = cfg.resolve_set(&tower, "A").unwrap();
        assert_eq!(a.stage(), 2);
        assert!(cfg.resolve_set(&tower, "missing").is_err());
    }

    #[test]
    fn parses_rationals_in_all_forms() {
        assert_eq!(
            parse_rat("3/4", "t").unwrap(),
            Rat::new(Int::from(3), Int::from(4))
        );
        assert_eq!(
            parse_rat("0.25", "t").unwrap(),
            Rat::new(Int::from(1), Int::from(4))
        );
        assert_eq!(
            parse_rat("2", "t").unwrap(),
            Rat::from_integer(Int::from(2))
        );
        assert!(parse_rat("x", "t").is_err());
        assert!(parse_rat("1/0", "t").is_err());
    }
}
