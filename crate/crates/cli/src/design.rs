//! Design and study configuration files (TOML) and named presets.

use std::path::Path;

use ddreg_core::harness::{Estimator, StudyConfig};
use ddreg_core::synth::{AlphaSetting, GenDesign, Scenario};
use ddreg_core::{ChainConfig, Error, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_N: usize = 2000;

/// `scenario-alpha`, e.g. `mixture-easy`.
pub fn parse_preset(name: &str) -> Result<(Scenario, AlphaSetting)> {
    let lower = name.trim().to_ascii_lowercase();
    let (s, a) = lower.split_once(['-', '/', '_']).ok_or_else(|| {
        Error::Config(format!("preset '{name}' is not of the form scenario-alpha"))
    })?;
    let scenario = match s {
        "matching" => Scenario::Matching,
        "mixture" => Scenario::Mixture,
        "decay" | "decaying" => Scenario::Decay,
        _ => {
            return Err(Error::Config(format!(
                "unknown scenario '{s}' (matching, mixture, decay)"
            )))
        }
    };
    let alpha = match a {
        "easy" => AlphaSetting::Easy,
        "hard" => AlphaSetting::Hard,
        _ => {
            return Err(Error::Config(format!(
                "unknown alpha setting '{a}' (easy, hard)"
            )))
        }
    };
    Ok((scenario, alpha))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetDesign {
    pub preset: String,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_n() -> usize {
    DEFAULT_N
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DesignSpec {
    Preset(PresetDesign),
    Full(GenDesign),
}

impl DesignSpec {
    pub fn resolve(&self) -> Result<GenDesign> {
        let d = match self {
            DesignSpec::Preset(p) => {
                let (s, a) = parse_preset(&p.preset)?;
                GenDesign::named(s, a, p.n, p.seed)
            }
            DesignSpec::Full(d) => d.clone(),
        };
        d.validate()?;
        Ok(d)
    }
}

/// `--design` accepts a preset name or a TOML file holding a `DesignSpec`.
pub fn load_design(arg: &str) -> Result<GenDesign> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        let spec: DesignSpec = toml::from_str(&text).map_err(|e| {
            Error::Config(format!("{}: not a valid design file: {e}", path.display()))
        })?;
        spec.resolve()
    } else {
        let (s, a) = parse_preset(arg).map_err(|e| {
            Error::Config(format!(
                "'{arg}' is neither a readable design file nor a preset: {e}"
            ))
        })?;
        Ok(GenDesign::named(s, a, DEFAULT_N, 0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyFile {
    pub replicates: usize,
    pub design: DesignSpec,
    pub estimator: Estimator,
    #[serde(default = "desk_chain")]
    pub chain: ChainConfig,
}

fn desk_chain() -> ChainConfig {
    ChainConfig::desk(0)
}

impl StudyFile {
    pub fn into_config(self) -> Result<StudyConfig> {
        let cfg = StudyConfig {
            design: self.design.resolve()?,
            estimator: self.estimator,
            replicates: self.replicates,
            chain: self.chain,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn load_study(path: &Path) -> Result<StudyConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let file: StudyFile = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: not a valid study file: {e}", path.display())))?;
    file.into_config()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        assert_eq!(
            parse_preset("mixture-easy").unwrap(),
            (Scenario::Mixture, AlphaSetting::Easy)
        );
        assert_eq!(
            parse_preset("Decay/hard").unwrap(),
            (Scenario::Decay, AlphaSetting::Hard)
        );
        assert!(parse_preset("mixture").is_err());
        assert!(parse_preset("linear-easy").is_err());
    }

    #[test]
    fn preset_design_file() {
        let spec: DesignSpec =
            toml::from_str("preset = \"matching-hard\"\nn = 500\nseed = 9\n").unwrap();
        let d = spec.resolve().unwrap();
        assert_eq!(
            d,
            GenDesign::named(Scenario::Matching, AlphaSetting::Hard, 500, 9)
        );
    }

    #[test]
    fn full_design_file_round_trips() {
        let d = GenDesign::named(Scenario::Decay, AlphaSetting::Easy, 300, 4);
        let text = toml::to_string(&d).unwrap();
        let spec: DesignSpec = toml::from_str(&text).unwrap();
        assert_eq!(spec.resolve().unwrap(), d);
    }

    #[test]
    fn study_file() {
        let text = r#"
replicates = 3

[design]
preset = "mixture-easy"
n = 400
seed = 11

[estimator]
kind = "bayes_adaptive"
grid = [0.1, 0.5, 0.25, 0.4]

[chain]
total_iters = 200
burn_in = 100
keep = 50
seed = 11
ellipse_dof = 6.0
"#;
        let cfg: StudyConfig = toml::from_str::<StudyFile>(text)
            .unwrap()
            .into_config()
            .unwrap();
        assert_eq!(cfg.replicates, 3);
        match cfg.estimator {
            Estimator::BayesAdaptive { grid } => assert_eq!(grid.deltas(), [0.5, 0.4, 0.25, 0.1]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn study_file_rejects_bad_grid() {
        let text = r#"
replicates = 3
[design]
preset = "mixture-easy"
[estimator]
kind = "bayes_adaptive"
grid = [0.1, 0.1]
"#;
        assert!(toml::from_str::<StudyFile>(text).is_err());
    }
}
