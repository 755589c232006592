//! Run configuration: a single TOML document selecting a mode, an instance
//! (prior families or schooling primitives), grids, and output options.

use std::path::PathBuf;

use serde::Deserialize;

use categorize::priors::{
    build_receiver, build_sender, QualitySupport, ReceiverCdf, ReceiverFamily, SenderFamily,
    SenderWeighting,
};
use categorize::schooling::{CostFunction, SchoolingConfig};
use categorize::tolerances::MAX_ORACLE_N;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Solve,
    Diagnose,
    Flip,
    School,
    Sweep,
    Verify,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "solve" => Ok(Mode::Solve),
            "diagnose" => Ok(Mode::Diagnose),
            "flip" => Ok(Mode::Flip),
            "school" => Ok(Mode::School),
            "sweep" => Ok(Mode::Sweep),
            "verify" => Ok(Mode::Verify),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    #[serde(default = "default_prior_n")]
    pub prior_n: usize,
    #[serde(default = "default_solver_m")]
    pub solver_m: usize,
    #[serde(default = "default_oracle_n")]
    pub oracle_n: usize,
}

fn default_prior_n() -> usize {
    1001
}
fn default_solver_m() -> usize {
    2001
}
fn default_oracle_n() -> usize {
    400
}

impl Default for Grids {
    fn default() -> Self {
        Grids {
            prior_n: default_prior_n(),
            solver_m: default_solver_m(),
            oracle_n: default_oracle_n(),
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportCfg {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseCfg {
    #[serde(default)]
    pub intervals: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchoolCfg {
    pub f0: ReceiverFamily,
    pub cost: CostFunction,
    pub lambda: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepCfg {
    pub gammas: Vec<f64>,
    pub lambdas: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputCfg {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub svg: bool,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputCfg {
    fn default() -> Self {
        OutputCfg {
            dir: default_out_dir(),
            svg: false,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Golden {
    pub name: String,
    pub expected: f64,
    pub tol: f64,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyCfg {
    #[serde(default)]
    pub goldens: Vec<Golden>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub grids: Grids,
    pub support: Option<SupportCfg>,
    pub receiver: Option<ReceiverFamily>,
    pub sender: Option<SenderFamily>,
    #[serde(default)]
    pub diagnose: DiagnoseCfg,
    pub school: Option<SchoolCfg>,
    pub sweep: Option<SweepCfg>,
    #[serde(default)]
    pub output: OutputCfg,
    #[serde(default)]
    pub verify: VerifyCfg,
}

fn default_seed() -> u64 {
    42
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = toml::from_str(&text).map_err(|e| CliError::Config(format!("{e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.grids.oracle_n > MAX_ORACLE_N {
            return Err(CliError::Config(format!(
                "grids.oracle_n = {} exceeds the oracle limit {MAX_ORACLE_N}",
                self.grids.oracle_n
            )));
        }
        if self.grids.prior_n < 3 || self.grids.solver_m < 3 {
            return Err(CliError::Config(
                "grids.prior_n and grids.solver_m must be at least 3".into(),
            ));
        }
        Ok(())
    }

    pub fn support(&self) -> Result<QualitySupport, CliError> {
        let s = self
            .support
            .ok_or_else(|| CliError::Config("missing key: support".into()))?;
        QualitySupport::new(s.lo, s.hi).map_err(CliError::config_from)
    }

    /// Builds the (sender, receiver) pair for the solve/diagnose/flip modes.
    pub fn instance(&self) -> Result<(SenderWeighting, ReceiverCdf), CliError> {
        let support = self.support()?;
        let receiver = self
            .receiver
            .as_ref()
            .ok_or_else(|| CliError::Config("missing key: receiver".into()))?;
        let sender = self
            .sender
            .as_ref()
            .ok_or_else(|| CliError::Config("missing key: sender".into()))?;
        let r =
            build_receiver(receiver, support, self.grids.prior_n).map_err(CliError::config_from)?;
        let s = build_sender(sender, support, self.grids.prior_n).map_err(CliError::config_from)?;
        Ok((s, r))
    }

    /// Builds the schooling primitives for the school mode.
    pub fn school_config(&self) -> Result<SchoolingConfig, CliError> {
        let support = self.support()?;
        let school = self
            .school
            .as_ref()
            .ok_or_else(|| CliError::Config("missing key: school".into()))?;
        let receiver = self
            .receiver
            .as_ref()
            .ok_or_else(|| CliError::Config("missing key: receiver".into()))?;
        let r =
            build_receiver(receiver, support, self.grids.prior_n).map_err(CliError::config_from)?;
        let f0 = build_receiver(&school.f0, support, self.grids.prior_n)
            .map_err(CliError::config_from)?;
        SchoolingConfig::new(f0, r, school.cost, school.lambda, school.sigma)
            .map_err(CliError::from)
    }

    pub fn sweep_config(&self) -> Result<&SweepCfg, CliError> {
        self.sweep
            .as_ref()
            .ok_or_else(|| CliError::Config("missing key: sweep".into()))
    }
}
