//! Run configuration: a flat JSON file whose fields all have defaults and
//! can each be overridden from the command line.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{ParamError, PenaltyLengthScale, ProblemParams, QuadratureSet};
use crate::geometry::{Point2, Rect};
use crate::problems::ManufacturedProblem;
use crate::quadrature::{QuadratureError, MAX_DEGREE};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("positive penalty parameters required, got gamma_d = {0}")]
    NonPositiveGammaD(f64),
    #[error("base_h must be positive, got {0}")]
    NonPositiveBaseH(f64),
    #[error("levels must be at least 1, got {0}")]
    NoLevels(usize),
    #[error("convergence studies need at least 2 levels, got {0}")]
    TooFewLevelsForStudy(usize),
    #[error("quadrature degrees must lie in 1..={MAX_DEGREE}, got {0}")]
    BadDegree(u32),
    #[error("newton_tol must be positive, got {0}")]
    NonPositiveTol(f64),
    #[error("newton_max_iter must be at least 1")]
    NoIterations,
    #[error("domain bounds are degenerate")]
    BadBounds,
    #[error("EOC band [{0}, {1}] is not ordered")]
    BadBand(f64, f64),
    #[error("unknown problem \"{0}\", expected disc-p4, disc-p2, disc, zero or affine-patch")]
    UnknownProblem(String),
    #[error("problem \"{name}\" pins p = {pinned}, got p = {got}; use problem \"disc\" for other exponents")]
    PinnedExponent {
        name: String,
        pinned: f64,
        got: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Built-in problem id: "disc-p4", "disc-p2", "disc", "zero" or
    /// "affine-patch".
    pub problem: String,
    /// Nonlinearity exponent (fixed to 4 or 2 by the aliased problems).
    pub p: f64,
    /// Nitsche boundary penalty. Must exceed the trace-inequality
    /// threshold of the mesh family; on the structured grid the penalized
    /// form loses definiteness below roughly 5, so the default stays at
    /// 10 where positivity holds on all levels.
    pub gamma_d: f64,
    /// Ghost penalty strength.
    pub gamma_1: f64,
    /// Target mesh size of level 0; level l halves it l times.
    pub base_h: f64,
    /// Number of levels solved by a convergence study (levels 0..levels).
    pub levels: usize,
    pub domain_min: [f64; 2],
    pub domain_max: [f64; 2],
    /// Disc center; the translation sweep offsets it per repetition.
    pub center: [f64; 2],
    pub volume_degree: u32,
    pub interface_degree: u32,
    pub error_degree: u32,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Use element/face lengths instead of the global h in penalties.
    pub local_length_scales: bool,
    /// Repetitions of the random-translation robustness mode; 0 disables.
    pub translate_reps: usize,
    pub seed: u64,
    /// Artifact directory; `None` disables file output.
    pub output_dir: Option<String>,
    pub eoc_band_h1: [f64; 2],
    pub eoc_band_l2: [f64; 2],
    pub eoc_band_star: [f64; 2],
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: "disc-p4".to_string(),
            p: 4.0,
            gamma_d: 10.0,
            gamma_1: 0.1,
            base_h: 0.15,
            levels: 6,
            domain_min: [-1.5, -1.5],
            domain_max: [1.5, 1.5],
            center: [0.0, 0.0],
            volume_degree: 4,
            interface_degree: 2,
            error_degree: 4,
            newton_tol: 1e-10,
            newton_max_iter: 25,
            local_length_scales: false,
            translate_reps: 0,
            seed: 0,
            output_dir: Some("out".to_string()),
            eoc_band_h1: [0.9, 1.1],
            eoc_band_l2: [1.8, 2.2],
            eoc_band_star: [0.9, 1.1],
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.gamma_d > 0.0) {
            return Err(ConfigError::NonPositiveGammaD(self.gamma_d));
        }
        if !(self.base_h > 0.0) {
            return Err(ConfigError::NonPositiveBaseH(self.base_h));
        }
        if self.levels == 0 {
            return Err(ConfigError::NoLevels(self.levels));
        }
        for degree in [self.volume_degree, self.interface_degree, self.error_degree] {
            if degree == 0 || degree > MAX_DEGREE {
                return Err(ConfigError::BadDegree(degree));
            }
        }
        if !(self.newton_tol > 0.0) {
            return Err(ConfigError::NonPositiveTol(self.newton_tol));
        }
        if self.newton_max_iter == 0 {
            return Err(ConfigError::NoIterations);
        }
        if self.domain_max[0] <= self.domain_min[0] || self.domain_max[1] <= self.domain_min[1] {
            return Err(ConfigError::BadBounds);
        }
        for band in [self.eoc_band_h1, self.eoc_band_l2, self.eoc_band_star] {
            if band[0] > band[1] {
                return Err(ConfigError::BadBand(band[0], band[1]));
            }
        }
        // Exercises the remaining ProblemParams invariants (p, gamma_1)
        // with a placeholder h.
        ProblemParams::new(self.p, self.gamma_d, self.gamma_1, 1.0)?;
        self.effective_exponent()?;
        Ok(())
    }

    /// The exponent after resolving problem aliases; rejects an explicit
    /// `p` that contradicts a pinned alias.
    pub fn effective_exponent(&self) -> Result<f64, ConfigError> {
        let pinned = match self.problem.as_str() {
            "disc-p4" => Some(4.0),
            "disc-p2" => Some(2.0),
            "disc" | "zero" | "affine-patch" => None,
            other => return Err(ConfigError::UnknownProblem(other.to_string())),
        };
        match pinned {
            Some(pinned) if self.p != pinned => Err(ConfigError::PinnedExponent {
                name: self.problem.clone(),
                pinned,
                got: self.p,
            }),
            Some(pinned) => Ok(pinned),
            None => Ok(self.p),
        }
    }

    /// Instantiates the configured problem with the disc center shifted
    /// by `offset`.
    pub fn problem_with_offset(&self, offset: Point2) -> Result<ManufacturedProblem, ConfigError> {
        let p = self.effective_exponent()?;
        let center = [self.center[0] + offset[0], self.center[1] + offset[1]];
        Ok(match self.problem.as_str() {
            "disc-p4" | "disc-p2" | "disc" => ManufacturedProblem::disc(p, center),
            "zero" => ManufacturedProblem::disc_zero_force(p, center),
            "affine-patch" => ManufacturedProblem::affine_patch(p, [0.4, -0.8, 1.3], center),
            other => return Err(ConfigError::UnknownProblem(other.to_string())),
        })
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(self.domain_min, self.domain_max)
    }

    pub fn params(&self, h: f64) -> Result<ProblemParams, ConfigError> {
        let mut params = ProblemParams::new(self.effective_exponent()?, self.gamma_d, self.gamma_1, h)?;
        if self.local_length_scales {
            params.length_scale = PenaltyLengthScale::Local;
        }
        Ok(params)
    }

    pub fn quadrature(&self) -> Result<QuadratureSet, QuadratureError> {
        QuadratureSet::with_degrees(self.volume_degree, self.interface_degree)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let config = RunConfig::default();
        config.validate().unwrap();
        assert_eq!(config.levels, 6);
        assert_eq!(config.gamma_d, 10.0);
        assert_eq!(config.gamma_1, 0.1);
        assert_eq!(config.base_h, 0.15);
    }

    #[test]
    fn json_round_trip() {
        let config = RunConfig {
            gamma_d: 12.5,
            levels: 3,
            output_dir: None,
            problem: "disc".to_string(),
            p: 2.5,
            ..RunConfig::default()
        };
        let parsed = RunConfig::from_json(&config.to_json()).unwrap();
        assert_eq!(parsed, config);
    }

    #[test]
    fn partial_json_uses_defaults() {
        let config = RunConfig::from_json(r#"{"levels": 2, "seed": 7}"#).unwrap();
        assert_eq!(config.levels, 2);
        assert_eq!(config.seed, 7);
        assert_eq!(config.base_h, 0.15);
        assert!(RunConfig::from_json(r#"{"not_a_field": 1}"#).is_err());
    }

    #[test]
    fn zero_gamma_d_rejected() {
        let config = RunConfig {
            gamma_d: 0.0,
            ..RunConfig::default()
        };
        assert!(matches!(
            config.validate(),
            Err(ConfigError::NonPositiveGammaD(_))
        ));
    }

    #[test]
    fn pinned_exponent_mismatch_rejected() {
        let mut config = RunConfig {
            p: 3.0,
            ..RunConfig::default()
        };
        assert!(matches!(
            config.validate(),
            Err(ConfigError::PinnedExponent { .. })
        ));
        config.problem = "disc".to_string();
        config.validate().unwrap();
        assert_eq!(config.effective_exponent().unwrap(), 3.0);
    }

    #[test]
    fn unknown_problem_rejected() {
        let config = RunConfig {
            problem: "torus".to_string(),
            ..RunConfig::default()
        };
        assert!(matches!(
            config.validate(),
            Err(ConfigError::UnknownProblem(_))
        ));
    }
}
