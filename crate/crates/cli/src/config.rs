//! Experiment configuration: JSON file, overridden by command-line flags.

use std::path::Path;

use clap::Args;
use serde::{Deserialize, Serialize};

use fpp_core::capacity::TwoPointDist;
use fpp_core::estimators::Quantity;
use fpp_core::lattice::CylinderSpec;
use fpp_core::penalized::PenaltyParams;

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: usize,
    /// Side lengths to sweep.
    pub n: Vec<usize>,
    /// Fixed cylinder height; wins over `aspect`.
    pub height: Option<usize>,
    /// `H = ceil(aspect * n)`; when both are absent, twice the pilot extent.
    pub aspect: Option<f64>,
    pub a: u64,
    pub b: u64,
    pub p_num: u64,
    pub p_den: u64,
    pub epsilon: f64,
    pub delta: f64,
    /// Slab height for the penalized flow; pilot-based when absent.
    pub slab_height: Option<usize>,
    pub n_samples: u64,
    pub master_seed: u64,
    /// Sample used by single-instance commands.
    pub sample_index: u64,
    pub quantity: Quantity,
    /// Number of equally spaced points of the chaos grid on `[0,1]`.
    pub t_points: usize,
    /// Localization radii for anchored runs.
    pub radii: Vec<f64>,
    /// Influence threshold exponents.
    pub xis: Vec<f64>,
    pub derivatives: bool,
    pub pilot_samples: u64,
    /// Sub-cylinder side for the subadditivity report; `n/2` when absent.
    pub block_side: Option<usize>,
    /// Reduced sample sizes for the suite.
    pub quick: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            d: 2,
            n: vec![8],
            height: None,
            aspect: None,
            a: 1,
            b: 2,
            p_num: 1,
            p_den: 2,
            epsilon: 0.1,
            delta: 0.2,
            slab_height: None,
            n_samples: 1000,
            master_seed: 0,
            sample_index: 0,
            quantity: Quantity::Phi,
            t_points: 6,
            radii: vec![0.0, 1.0, 2.0, 4.0, 8.0],
            xis: vec![0.5, 1.0, 1.5, 2.0],
            derivatives: true,
            pilot_samples: 100,
            block_side: None,
            quick: false,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(vec![format!("{}: {e}", path.display())]))
    }

    /// Every problem with the configuration, one message per field.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.d < 2 {
            out.push(format!("d: must be at least 2, got {}", self.d));
        }
        if self.n.is_empty() {
            out.push("n: at least one side length is required".into());
        }
        if self.height == Some(0) {
            out.push("height: must be positive".into());
        }
        if let Some(h) = self.aspect {
            if !(h > 0.0 && h.is_finite()) {
                out.push(format!("aspect: must be positive, got {h}"));
            }
        }
        if let Err(e) = self.dist() {
            out.push(format!("a/b/p_num/p_den: {e}"));
        }
        if let Err(e) = PenaltyParams::new(self.epsilon, self.delta, 1) {
            out.push(format!("epsilon/delta: {e}"));
        }
        if self.slab_height == Some(0) {
            out.push("slab_height: must be positive".into());
        }
        if self.n_samples < 2 {
            out.push(format!("n_samples: must be at least 2, got {}", self.n_samples));
        }
        if self.t_points < 2 {
            out.push(format!("t_points: must be at least 2, got {}", self.t_points));
        }
        if self.radii.iter().any(|r| !(*r >= 0.0)) {
            out.push("radii: must be nonnegative".into());
        }
        if self.pilot_samples == 0 {
            out.push("pilot_samples: must be positive".into());
        }
        if self.block_side == Some(0) {
            out.push("block_side: must be positive".into());
        }
        out
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let d = self.diagnostics();
        if d.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(d))
        }
    }

    pub fn dist(&self) -> fpp_core::Result<TwoPointDist> {
        TwoPointDist::new(self.a, self.b, self.p_num, self.p_den)
    }

    /// Cylinder for side `n`: the explicit height, the aspect ratio, or twice
    /// the largest pilot extent on a `4n` cylinder.
    pub fn spec_for(&self, n: usize) -> fpp_core::Result<CylinderSpec> {
        let height = match (self.height, self.aspect) {
            (Some(h), _) => h,
            (None, Some(h)) => (h * n as f64).ceil() as usize,
            (None, None) => {
                let pilot = CylinderSpec::new(self.d, n, (4 * n).max(2))?;
                let extent =
                    fpp_core::estimators::pilot_max_extent(&pilot, self.dist()?, self.master_seed, self.pilot_samples)?;
                (2 * extent).max(2)
            }
        };
        CylinderSpec::new(self.d, n, height)
    }

    pub fn params_for(&self, spec: &CylinderSpec) -> fpp_core::Result<PenaltyParams> {
        let slab = match self.slab_height {
            Some(h) => h,
            None => fpp_core::estimators::default_slab_height(spec, self.dist()?, self.master_seed, self.pilot_samples)?,
        };
        PenaltyParams::new(self.epsilon, self.delta, slab)
    }
}

/// Flags mirroring [`ExperimentConfig`]; each one set overrides the file.
#[derive(Args, Clone, Debug, Default)]
pub struct ConfigArgs {
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// Side length; repeat or separate with commas for a sweep.
    #[arg(long, global = true, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long, global = true)]
    pub height: Option<usize>,
    #[arg(long, global = true)]
    pub aspect: Option<f64>,
    #[arg(long, global = true)]
    pub a: Option<u64>,
    #[arg(long, global = true)]
    pub b: Option<u64>,
    #[arg(long, global = true)]
    pub p_num: Option<u64>,
    #[arg(long, global = true)]
    pub p_den: Option<u64>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub slab_height: Option<usize>,
    #[arg(long, global = true)]
    pub n_samples: Option<u64>,
    #[arg(long, global = true)]
    pub master_seed: Option<u64>,
    #[arg(long, global = true)]
    pub sample_index: Option<u64>,
    /// phi, penalized_phi, lipschitz or anchored.
    #[arg(long, global = true, value_parser = parse_quantity)]
    pub quantity: Option<Quantity>,
    #[arg(long, global = true)]
    pub t_points: Option<usize>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub xis: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub derivatives: Option<bool>,
    #[arg(long, global = true)]
    pub pilot_samples: Option<u64>,
    #[arg(long, global = true)]
    pub block_side: Option<usize>,
    #[arg(long, global = true)]
    pub quick: bool,
}

fn parse_quantity(s: &str) -> Result<Quantity, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown quantity {s:?}; expected phi, penalized_phi, lipschitz or anchored"))
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f.clone() { c.$f = v; } )* };
        }
        set!(d, n, a, b, p_num, p_den, epsilon, delta, n_samples, master_seed, sample_index, quantity, t_points,
            radii, xis, derivatives, pilot_samples);
        if self.height.is_some() {
            c.height = self.height;
        }
        if self.aspect.is_some() {
            c.aspect = self.aspect;
        }
        if self.slab_height.is_some() {
            c.slab_height = self.slab_height;
        }
        if self.block_side.is_some() {
            c.block_side = self.block_side;
        }
        c.quick |= self.quick;
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        assert!(ExperimentConfig::default().diagnostics().is_empty());
    }

    #[test]
    fn diagnostics_name_fields() {
        let c = ExperimentConfig {
            d: 1,
            n_samples: 1,
            epsilon: 0.3,
            ..ExperimentConfig::default()
        };
        let d = c.diagnostics();
        assert_eq!(d.len(), 3);
        assert!(d[0].starts_with("d:") && d[1].starts_with("epsilon/delta:") && d[2].starts_with("n_samples:"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"dd": 2}"#).is_err());
        let c: ExperimentConfig = serde_json::from_str(r#"{"n": [4, 8], "quantity": "anchored"}"#).unwrap();
        assert_eq!((c.n, c.quantity), (vec![4, 8], Quantity::Anchored));
    }

    #[test]
    fn height_resolution() {
        let mut c = ExperimentConfig {
            aspect: Some(1.5),
            ..ExperimentConfig::default()
        };
        assert_eq!(c.spec_for(5).unwrap().height, 8);
        c.height = Some(3);
        assert_eq!(c.spec_for(5).unwrap().height, 3);
        c.height = None;
        c.aspect = None;
        let h = c.spec_for(4).unwrap().height;
        assert!(h >= 2 && h % 2 == 0);
    }
}
