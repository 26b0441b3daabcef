//! Run configuration: one JSON document, overridable from the command line.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::PotentialFamily;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub lambda: f64,
    /// Potential DSL, e.g. `"quad; tent"`.
    pub potentials: String,
    pub grid_n: usize,
    pub seed: u64,
    pub burn_in: usize,
    pub n_points: usize,
    /// Sup-norm change at which value iteration stops.
    pub tol: f64,
    pub lambda_schedule: Vec<f64>,
    pub oracle_len: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lambda: 0.48,
            potentials: "quad; tent".into(),
            grid_n: 8192,
            seed: 0,
            burn_in: 1000,
            n_points: 10_000,
            tol: 1e-10,
            lambda_schedule: vec![0.9, 0.99, 0.999],
            oracle_len: 12,
        }
    }
}

/// Command-line values that replace config fields.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub lambda: Option<f64>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Loads `path` (or the defaults), applies overrides and validates.
    pub fn resolve(path: Option<&Path>, ov: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(l) = ov.lambda {
            cfg.lambda = l;
        }
        if let Some(s) = ov.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return bad(format!("lambda must lie in (0, 1), got {}", self.lambda));
        }
        if self.grid_n < 16 || self.grid_n % 2 != 0 {
            return bad(format!(
                "grid_n must be even and at least 16, got {}",
                self.grid_n
            ));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.n_points == 0 {
            return bad("n_points must be positive".into());
        }
        if self.lambda_schedule.is_empty() {
            return bad("lambda_schedule is empty".into());
        }
        if self.lambda_schedule.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
            return bad("every scheduled lambda must lie in (0, 1)".into());
        }
        if self.lambda_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return bad("lambda_schedule must be strictly increasing".into());
        }
        if self.oracle_len == 0 || self.oracle_len > crate::ergopt::MAX_ORACLE_LEN {
            return bad(format!(
                "oracle_len must be in 1..={}, got {}",
                crate::ergopt::MAX_ORACLE_LEN,
                self.oracle_len
            ));
        }
        self.family().map(|_| ())
    }

    /// DSL errors surface as config errors.
    pub fn family(&self) -> Result<PotentialFamily> {
        PotentialFamily::parse(&self.potentials).map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(format!("potentials: {other}")),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_reference_settings() {
        let c = RunConfig::from_json("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.family().unwrap(), PotentialFamily::quad_tent());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            RunConfig::from_json(r#"{"lamda": 0.5}"#),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn invariants_enforced() {
        for bad in [
            r#"{"lambda": 1.0}"#,
            r#"{"grid_n": 1025}"#,
            r#"{"tol": 0}"#,
            r#"{"lambda_schedule": [0.9, 0.9]}"#,
            r#"{"potentials": "quad; sine"}"#,
        ] {
            assert!(
                matches!(RunConfig::from_json(bad), Err(Error::Config(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn overrides_apply() {
        let c = RunConfig::resolve(
            None,
            &Overrides {
                lambda: Some(0.3),
                seed: Some(9),
            },
        )
        .unwrap();
        assert_eq!((c.lambda, c.seed), (0.3, 9));
        assert!(RunConfig::resolve(
            None,
            &Overrides {
                lambda: Some(2.0),
                seed: None
            }
        )
        .is_err());
    }
}
