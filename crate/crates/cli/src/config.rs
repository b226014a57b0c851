//! Experiment configuration (TOML). Unknown keys are rejected.
//!
//! ```toml
//! [system]
//! state_dim = 2
//! drift = [
//!   [ { coeff = 1.0, factors = ["x2"] } ],
//!   [ { coeff = -1.0, factors = ["sin(x1)"] }, { coeff = -0.5, factors = ["x2"] } ],
//! ]
//! noise = [[0.0], [0.1]]          # n rows, one column per Wiener component
//!
//! [initial]
//! lo = [-0.1, -0.1]
//! hi = [0.1, 0.1]
//!
//! [certificate]
//! mode = "search"
//! hull = [ [[0.0, 1.0], [-2.0, -0.5]], [[0.0, 1.0], [0.0, -0.5]] ]
//!
//! [experiment]
//! method = "contraction"
//! delta = 0.05
//! times = [1.0, 2.0]
//! ```
//!
//! See the README for every table and key.

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    pub initial: BoxSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputSpec>,
    pub certificate: CertificateSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contraction: Option<ContractionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<IntervalSpec>,
    pub experiment: ExperimentSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    /// `"pendulum"` selects the built-in model; the other keys must then be absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_dim: Option<usize>,
    #[serde(default)]
    pub input_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Vec<Vec<TermSpec>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coeff: f64,
    #[serde(default)]
    pub factors: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Constant nominal input; defaults to the centre of the box.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nominal: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateMode {
    #[default]
    Inline,
    Search,
    File,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RateMode {
    /// `c = c_P`, `ℓ = 0`; only for systems without inputs.
    #[default]
    FromHull,
    /// Sobol estimate of `(c, ℓ)` over a declared box.
    Sampled,
    /// User-supplied `c` and `ell`.
    Explicit,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct CertificateSpec {
    #[serde(default)]
    pub mode: CertificateMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_p: Option<f64>,
    /// Vertices `A_i` whose convex hull contains every state Jacobian.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hull: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify_tol: Option<f64>,
    #[serde(default)]
    pub rate: RateMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_box: Option<BoxSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_samples: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct ContractionSpec {
    /// Ball centre `x*₀`; defaults to the centre of the initial box.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    /// Initial radius in the certificate norm; defaults to the smallest ball
    /// around `center` that contains the initial box.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r1: Option<f64>,
    /// Input radius (Euclidean); defaults to the smallest ball around the
    /// nominal input containing the input box.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InclusionMode {
    #[default]
    Endpoint,
    Natural,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct IntervalSpec {
    /// Coordinate change `y = T x` (row-major rows).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<Vec<Vec<f64>>>,
    /// Initial box in embedding coordinates; defaults to the interval hull
    /// of the image of the initial box.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<BoxSpec>,
    /// Box on which cooperativity is checked; defaults to the initial box.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invariant: Option<BoxSpec>,
    #[serde(default)]
    pub inclusion: InclusionMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monotone_samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Contraction,
    Interval,
    #[default]
    Both,
}

impl Method {
    pub fn includes(self, m: Method) -> bool {
        self == Method::Both || self == m
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerMode {
    /// The initial set the reach computation used (ball or parallelotope).
    #[default]
    ReachSet,
    /// The declared initial box.
    InitialBox,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_paths() -> usize {
    2000
}

fn default_dirs() -> usize {
    128
}

fn default_scale() -> f64 {
    1.0
}

fn default_out() -> String {
    "out".into()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub method: Method,
    pub delta: f64,
    pub times: Vec<f64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: String,
    #[serde(default = "default_dirs")]
    pub polygon_dirs: usize,
    #[serde(default)]
    pub sampler: SamplerMode,
    /// Multiplies every noise radius `ρ`; values below 1 deliberately shrink
    /// the sets (a negative control for validation).
    #[serde(default = "default_scale")]
    pub noise_scale: f64,
}

/// Command-line overrides applied on top of a parsed file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<String>,
    pub seed: Option<u64>,
    pub method: Option<Method>,
    pub delta: Option<f64>,
    pub paths: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.out {
            self.experiment.out = v.clone();
        }
        if let Some(v) = o.seed {
            self.experiment.seed = v;
        }
        if let Some(v) = o.method {
            self.experiment.method = v;
        }
        if let Some(v) = o.delta {
            self.experiment.delta = v;
        }
        if let Some(v) = o.paths {
            self.experiment.n_paths = v;
        }
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut canonical = self.clone();
        canonical.experiment.out.clear();
        let json = crate::formats::to_json(&canonical);
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// The reference pendulum experiment.
    pub fn pendulum_demo() -> Self {
        use stochreach::pendulum;
        let rows = |m: stochreach::Matrix| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
        };
        let x0 = pendulum::initial_box();
        let y0 = pendulum::transformed_box();
        let as_spec = |b: &stochreach::setcalc::IntervalBox| BoxSpec {
            lo: b.lo().iter().copied().collect(),
            hi: b.hi().iter().copied().collect(),
        };
        Self {
            system: SystemSpec { builtin: Some("pendulum".into()), ..Default::default() },
            initial: as_spec(&x0),
            input: None,
            certificate: CertificateSpec {
                mode: CertificateMode::Inline,
                p: Some(rows(pendulum::reference_p())),
                hull: Some(pendulum::hull().into_iter().map(rows).collect()),
                ..Default::default()
            },
            contraction: Some(ContractionSpec { center: Some(vec![0.0, 0.0]), r1: None, r2: None }),
            interval: Some(IntervalSpec {
                transform: Some(rows(pendulum::transform())),
                initial: Some(as_spec(&y0)),
                invariant: Some(as_spec(&y0)),
                inclusion: InclusionMode::Endpoint,
                monotone_samples: None,
            }),
            experiment: ExperimentSpec {
                method: Method::Both,
                delta: 0.01,
                times: vec![1.0, 2.0, 4.0],
                dt: default_dt(),
                n_paths: default_paths(),
                seed: 0,
                out: default_out(),
                polygon_dirs: default_dirs(),
                sampler: SamplerMode::ReachSet,
                noise_scale: default_scale(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [system]
        state_dim = 1
        drift = [[ { coeff = -1.0, factors = ["x1"] } ]]
        noise = [[0.5]]

        [initial]
        lo = [-0.1]
        hi = [0.1]

        [certificate]
        mode = "search"
        hull = [[[-1.0]]]

        [experiment]
        delta = 0.1
        times = [1.0]
    "#;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.experiment.dt, 1e-3);
        assert_eq!(c.experiment.n_paths, 2000);
        assert_eq!(c.experiment.method, Method::Both);
        assert_eq!(c.certificate.mode, CertificateMode::Search);
        assert_eq!(c.certificate.rate, RateMode::FromHull);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let bad = MINIMAL.replace("delta = 0.1", "delta = 0.1\nbogus = 3");
        assert!(matches!(ExperimentConfig::from_toml(&bad), Err(CliError::Config(_))));
        let bad = MINIMAL.replace("mode = \"search\"", "mode = \"guess\"");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let demo = ExperimentConfig::pendulum_demo();
        let back = ExperimentConfig::from_toml(&demo.to_toml()).unwrap();
        assert_eq!(demo, back);
    }

    #[test]
    fn hash_ignores_out_but_not_seed() {
        let mut a = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let h = a.hash();
        a.apply(&Overrides { out: Some("elsewhere".into()), ..Default::default() });
        assert_eq!(h, a.hash());
        a.apply(&Overrides { seed: Some(5), ..Default::default() });
        assert_ne!(h, a.hash());
        assert_eq!(h.len(), 64);
    }
}
