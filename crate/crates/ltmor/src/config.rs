//! Experiment configuration: TOML sections with environment overrides.
//!
//! Any key can be overridden by an `LTMOR_<SECTION>_<KEY>` environment
//! variable (`LTMOR_SEED` for the top-level seed); values are parsed as TOML
//! fragments and fall back to plain strings.

use crate::assembly::{CoefficientField, GramKind};
use crate::newmark::NewmarkConfig;
use crate::sampling::{default_eta, default_mu, make_sampling_plan, SamplingPlan};
use crate::{Error, Result};
use serde::Deserialize;
use std::path::{Path, PathBuf};

pub const ENV_PREFIX: &str = "LTMOR_";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mesh: MeshSection,
    #[serde(default)]
    pub coefficient: CoefficientSection,
    pub source: SourceSection,
    pub wavelet: WaveletSection,
    pub sampling: SamplingSection,
    pub rom: RomSection,
    pub time: TimeSection,
    pub output: OutputSection,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub n: usize,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientSection {
    #[default]
    Identity,
    Blocks {
        nx: usize,
        ny: usize,
        /// per block: [a11, a12, a22]
        entries: Vec<[f64; 3]>,
    },
}

impl CoefficientSection {
    pub fn to_field(&self) -> CoefficientField {
        match self {
            CoefficientSection::Identity => CoefficientField::Identity,
            CoefficientSection::Blocks { nx, ny, entries } => {
                CoefficientField::PiecewiseBlocks {
                    nx: *nx,
                    ny: *ny,
                    entries: entries.clone(),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub center: [f64; 2],
    pub width: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveletSection {
    pub alpha: f64,
    pub t0: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    pub m: usize,
    /// contour abscissa; defaults to the wavelet-driven rule
    pub mu: Option<f64>,
    /// decay-rate parameter; defaults to mu/2
    pub eta: Option<f64>,
    /// sampling sizes for the study subcommand; defaults to [m]
    pub m_grid: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum GramChoice {
    #[default]
    Stiffness,
    StiffnessPlusMass,
}

impl GramChoice {
    pub fn kind(self) -> GramKind {
        match self {
            GramChoice::Stiffness => GramKind::Stiffness,
            GramChoice::StiffnessPlusMass => GramKind::StiffnessPlusMass,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RomSection {
    pub r_values: Vec<usize>,
    #[serde(default)]
    pub gram: GramChoice,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_final: f64,
    pub steps: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

fn default_beta() -> f64 {
    0.25
}
fn default_gamma() -> f64 {
    0.5
}
fn default_stride() -> usize {
    10
}
fn default_error_samples() -> usize {
    2000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    /// keep every stride-th trajectory frame
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// times at which nodal field files are written
    #[serde(default)]
    pub field_times: Vec<f64>,
    /// target size of the error-evaluation subgrid
    #[serde(default = "default_error_samples")]
    pub error_samples: usize,
    /// evaluate the error on every step regardless of cost
    #[serde(default)]
    pub full_error_grid: bool,
}

impl ExperimentConfig {
    pub fn resolved_mu(&self) -> f64 {
        self.sampling.mu.unwrap_or_else(|| default_mu(self.wavelet.alpha))
    }

    pub fn resolved_eta(&self) -> f64 {
        self.sampling.eta.unwrap_or_else(|| default_eta(self.resolved_mu()))
    }

    pub fn plan_for(&self, m: usize) -> Result<SamplingPlan> {
        make_sampling_plan(self.wavelet.alpha, self.resolved_mu(), self.resolved_eta(), m)
    }

    pub fn newmark(&self) -> Result<NewmarkConfig> {
        NewmarkConfig::new(
            self.time.beta,
            self.time.gamma,
            self.time.t_final,
            self.time.steps,
        )
    }

    /// Sampling sizes the study iterates over.
    pub fn study_grid(&self) -> Vec<usize> {
        self.sampling
            .m_grid
            .clone()
            .unwrap_or_else(|| vec![self.sampling.m])
    }

    pub fn max_r(&self) -> usize {
        self.rom.r_values.iter().copied().max().unwrap_or(0)
    }

    /// Step stride of the error-evaluation subgrid.
    pub fn error_stride(&self) -> usize {
        if self.output.full_error_grid {
            1
        } else {
            (self.time.steps).div_ceil(self.output.error_samples).max(1)
        }
    }

    pub fn interior_dofs(&self) -> usize {
        (self.mesh.n - 1) * (self.mesh.n - 1)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.mesh.n < 2 {
            return fail(format!("mesh.n must be at least 2, got {}", self.mesh.n));
        }
        if !(self.source.width > 0.0) {
            return fail(format!(
                "source.width must be positive, got {}",
                self.source.width
            ));
        }
        if !(self.wavelet.alpha > 0.0 && self.wavelet.alpha.is_finite()) {
            return fail(format!(
                "wavelet.alpha must be positive and finite, got {}",
                self.wavelet.alpha
            ));
        }
        if !self.wavelet.t0.is_finite() {
            return fail(format!("wavelet.t0 must be finite, got {}", self.wavelet.t0));
        }
        if self.sampling.m == 0 {
            return fail("sampling.m must be at least 1".into());
        }
        let mu = self.resolved_mu();
        let eta = self.resolved_eta();
        if !(mu > 0.0 && eta > 0.0 && eta < mu) {
            return fail(format!(
                "sampling needs 0 < eta < mu, got mu = {mu}, eta = {eta}"
            ));
        }
        if self.rom.r_values.is_empty() {
            return fail("rom.r_values must not be empty".into());
        }
        let grid = self.study_grid();
        if grid.is_empty() || grid.contains(&0) {
            return fail("sampling.m_grid entries must be at least 1".into());
        }
        let min_m = *grid.iter().min().unwrap();
        let n_in = self.interior_dofs();
        for &r in &self.rom.r_values {
            if r == 0 {
                return fail("rom.r_values entries must be at least 1".into());
            }
            if r > 2 * min_m + 1 {
                return fail(format!(
                    "rom.r_values entry {r} exceeds the snapshot count 2*{min_m}+1"
                ));
            }
            if r > n_in {
                return fail(format!(
                    "rom.r_values entry {r} exceeds the {n_in} interior unknowns"
                ));
            }
        }
        if self.output.stride == 0 {
            return fail("output.stride must be at least 1".into());
        }
        if self.output.error_samples < 2 {
            return fail("output.error_samples must be at least 2".into());
        }
        for &t in &self.output.field_times {
            if !(0.0..=self.time.t_final).contains(&t) {
                return fail(format!(
                    "output.field_times entry {t} lies outside [0, {}]",
                    self.time.t_final
                ));
            }
        }
        // constructor-level checks that should surface as config errors
        self.newmark().map_err(|e| Error::Config(e.to_string()))?;
        self.plan_for(self.sampling.m)
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}

/// Parses a config file and applies environment overrides.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, std::env::vars())
}

pub fn parse_config(
    text: &str,
    env: impl Iterator<Item = (String, String)>,
) -> Result<ExperimentConfig> {
    let mut table: toml::Table = text
        .parse()
        .map_err(|e| Error::Config(format!("config parse failed: {e}")))?;
    apply_env_overrides(&mut table, env);
    let cfg: ExperimentConfig = table
        .try_into()
        .map_err(|e| Error::Config(format!("config invalid: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

fn apply_env_overrides(table: &mut toml::Table, env: impl Iterator<Item = (String, String)>) {
    let mut overrides: Vec<(String, String)> = env
        .filter_map(|(k, v)| {
            k.strip_prefix(ENV_PREFIX)
                // LTMOR_SKIP_* are test-harness profile flags, not settings
                .filter(|rest| !rest.is_empty() && !rest.starts_with("SKIP_"))
                .map(|rest| (rest.to_string(), v))
        })
        .collect();
    overrides.sort(); // deterministic application order
    for (key, raw) in overrides {
        let value = parse_fragment(&raw);
        match key.split_once('_') {
            Some((section, field)) => {
                let section = section.to_ascii_lowercase();
                let field = field.to_ascii_lowercase();
                let entry = table
                    .entry(section)
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()));
                if let toml::Value::Table(t) = entry {
                    t.insert(field, value);
                }
            }
            None => {
                table.insert(key.to_ascii_lowercase(), value);
            }
        }
    }
}

/// TOML fragment if it parses, bare string otherwise.
fn parse_fragment(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const DESK: &str = r#"
[mesh]
n = 32

[source]
center = [0.25, -0.15]
width = 0.05

[wavelet]
alpha = 6.283185307179586
t0 = 2.5

[sampling]
m = 40

[rom]
r_values = [2, 4, 8, 16]

[time]
t_final = 10.0
steps = 2000

[output]
directory = "out"
field_times = [2.5, 5.0, 7.5, 10.0]
"#;

    fn no_env() -> impl Iterator<Item = (String, String)> {
        std::iter::empty()
    }

    #[test]
    fn parses_and_fills_defaults() {
        let cfg = parse_config(DESK, no_env()).unwrap();
        assert_eq!(cfg.mesh.n, 32);
        assert_eq!(cfg.time.beta, 0.25);
        assert_eq!(cfg.time.gamma, 0.5);
        assert_eq!(cfg.output.stride, 10);
        assert_eq!(cfg.output.error_samples, 2000);
        assert!(!cfg.output.full_error_grid);
        assert_eq!(cfg.seed, 0);
        assert!(matches!(cfg.coefficient, CoefficientSection::Identity));
        assert_eq!(cfg.rom.gram, GramChoice::Stiffness);
        assert_eq!(cfg.study_grid(), vec![40]);
        assert_eq!(cfg.max_r(), 16);
        // alpha = 2*pi here, so the contour rule picks alpha/8
        assert!((cfg.resolved_mu() - 6.283185307179586 / 8.0).abs() <= 1e-15);
        assert!((cfg.resolved_eta() - cfg.resolved_mu() / 2.0).abs() <= 1e-15);
        assert_eq!(cfg.error_stride(), 1);
    }

    #[test]
    fn missing_key_is_named() {
        let broken = DESK.replace("alpha = 6.283185307179586\n", "");
        let err = parse_config(&broken, no_env()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("alpha"), "unhelpful error: {msg}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let broken = DESK.replace("n = 32", "n = 32\nflavor = 3");
        let err = parse_config(&broken, no_env()).unwrap_err();
        assert!(err.to_string().contains("flavor"));
    }

    #[test]
    fn env_overrides_reach_nested_keys() {
        let env = [
            ("LTMOR_MESH_N", "16"),
            ("LTMOR_SAMPLING_M", "5"),
            ("LTMOR_ROM_R_VALUES", "[1, 2, 3]"),
            ("LTMOR_OUTPUT_DIRECTORY", "elsewhere"),
            ("LTMOR_OUTPUT_FIELD_TIMES", "[1.0, 2.0]"),
            ("LTMOR_TIME_T_FINAL", "4.0"),
            ("LTMOR_SEED", "9"),
            ("LTMOR_SKIP_SPEEDUP", "1"),
            ("PATH", "/usr/bin"),
            ("LTMOR_", "ignored"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()));
        let cfg = parse_config(DESK, env).unwrap();
        assert_eq!(cfg.mesh.n, 16);
        assert_eq!(cfg.sampling.m, 5);
        assert_eq!(cfg.rom.r_values, vec![1, 2, 3]);
        assert_eq!(cfg.output.directory, PathBuf::from("elsewhere"));
        assert_eq!(cfg.output.field_times, vec![1.0, 2.0]);
        assert_eq!(cfg.time.t_final, 4.0);
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn basis_size_limits_enforced() {
        let big_r = DESK.replace("r_values = [2, 4, 8, 16]", "r_values = [82]");
        let err = parse_config(&big_r, no_env()).unwrap_err();
        assert!(err.to_string().contains("82"));

        // r exceeding the interior unknown count on a tiny mesh
        let env = [("LTMOR_MESH_N", "3"), ("LTMOR_ROM_R_VALUES", "[5]")]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()));
        let err = parse_config(DESK, env).unwrap_err();
        assert!(err.to_string().contains('5'));
    }

    #[test]
    fn sampling_overrides_validated() {
        let env = [("LTMOR_SAMPLING_MU", "0.5"), ("LTMOR_SAMPLING_ETA", "0.5")]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()));
        assert!(parse_config(DESK, env).is_err());
    }

    #[test]
    fn field_times_must_fit_the_horizon() {
        let broken = DESK.replace("field_times = [2.5, 5.0, 7.5, 10.0]", "field_times = [11.0]");
        assert!(parse_config(&broken, no_env()).is_err());
    }

    #[test]
    fn gram_choice_and_blocks_parse() {
        let extended = format!(
            "{DESK}\n[coefficient]\nkind = \"blocks\"\nnx = 2\nny = 1\nentries = [[2.0, 0.1, 1.0], [1.0, 0.0, 3.0]]\n"
        );
        let with_gram = extended.replace("r_values = [2, 4, 8, 16]", "r_values = [2]\ngram = \"stiffness_plus_mass\"");
        let cfg = parse_config(&with_gram, no_env()).unwrap();
        assert_eq!(cfg.rom.gram, GramChoice::StiffnessPlusMass);
        match cfg.coefficient.to_field() {
            CoefficientField::PiecewiseBlocks { nx, ny, entries } => {
                assert_eq!((nx, ny), (2, 1));
                assert_eq!(entries.len(), 2);
            }
            CoefficientField::Identity => panic!("expected block field"),
        }
    }

    #[test]
    fn error_stride_subsamples_long_marches() {
        let env = [("LTMOR_TIME_STEPS", "20000")]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()));
        let cfg = parse_config(DESK, env).unwrap();
        assert_eq!(cfg.error_stride(), 10);

        let env = [
            ("LTMOR_TIME_STEPS", "20000"),
            ("LTMOR_OUTPUT_FULL_ERROR_GRID", "true"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()));
        let cfg = parse_config(DESK, env).unwrap();
        assert_eq!(cfg.error_stride(), 1);
    }
}
