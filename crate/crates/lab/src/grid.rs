//! Grid selection from `--grid`, `--config` and scenario files.

use radial_lab::ModelConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Partial grid; unset fields fall back to the next source.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub dual_points: Option<usize>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub primal_points: Option<usize>,
    #[serde(rename = "S", default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
}

impl GridSpec {
    /// Parse `M=1024,N=2048,S=30`; any subset of the keys may appear.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut spec = GridSpec::default();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--grid: expected KEY=VALUE, got {part:?}")))?;
            let bad = |e: &dyn std::fmt::Display| CliError::Usage(format!("--grid: {key}: {e}"));
            match key.trim() {
                "M" => spec.dual_points = Some(value.trim().parse().map_err(|e| bad(&e))?),
                "N" => spec.primal_points = Some(value.trim().parse().map_err(|e| bad(&e))?),
                "S" => spec.half_width = Some(value.trim().parse().map_err(|e| bad(&e))?),
                other => return Err(CliError::Usage(format!("--grid: unknown key {other:?}"))),
            }
        }
        Ok(spec)
    }

    /// Fields of `self` take precedence over `base`.
    pub fn over(self, base: ModelConfig) -> CliResult<ModelConfig> {
        let mut cfg = base;
        if let Some(m) = self.dual_points {
            cfg.dual_points = m;
        }
        if let Some(n) = self.primal_points {
            cfg.primal_points = n;
        }
        if let Some(s) = self.half_width {
            cfg.half_width = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn of(cfg: &ModelConfig) -> Self {
        GridSpec {
            dual_points: Some(cfg.dual_points),
            primal_points: Some(cfg.primal_points),
            half_width: Some(cfg.half_width),
        }
    }
}
