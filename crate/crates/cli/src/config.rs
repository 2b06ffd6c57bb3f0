//! JSON scenario configuration.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use corridor_dynamics::algebra::PhysicsParams;
use corridor_dynamics::evolution::{GaussianPacket, Grid, Scenario};
use corridor_dynamics::kernels::{Builtin, FieldFn, GaugeModel, MeasurementModel, ObservableSpec};
use corridor_dynamics::paths::Corridor;

/// A built-in function name (`x`, `x^2`, `p`, `harmonic(w)`, `const(c)`, `linear(c)`) times a coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionConfig {
    pub name: String,
    #[serde(default = "one")]
    pub coefficient: f64,
}

fn one() -> f64 {
    1.0
}

impl FunctionConfig {
    pub fn named(name: &str) -> Self {
        Self { name: name.into(), coefficient: 1.0 }
    }

    fn observable(&self, m: f64) -> Result<ObservableSpec> {
        Ok(Builtin::parse(&self.name)?.observable(self.coefficient, m, &self.name))
    }

    fn field(&self, m: f64) -> Result<FieldFn> {
        Ok(Builtin::parse(&self.name)?.field(self.coefficient, m)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default = "one")]
    pub m: f64,
    #[serde(default = "one")]
    pub hbar: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self { m: 1.0, hbar: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "position_x")]
    pub a: FunctionConfig,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub b: Option<FunctionConfig>,
    #[serde(default)]
    pub c: Option<FunctionConfig>,
    #[serde(default)]
    pub eta: f64,
}

fn position_x() -> FunctionConfig {
    FunctionConfig::named("x")
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { a: position_x(), kappa: 0.0, b: None, c: None, eta: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub params: ParamsConfig,
    /// Physical potential `V_phys(x)`.
    #[serde(default)]
    pub potential: Option<FunctionConfig>,
    /// Gauge field `A(x)` entering the weight as `exp(i∫A dx)`.
    #[serde(default)]
    pub gauge_field: Option<FunctionConfig>,
    #[serde(default)]
    pub model: ModelConfig,
    pub dt: f64,
    pub n_steps: usize,
    pub psi0: GaussianPacket,
    #[serde(default = "zeros")]
    pub corridor: String,
}

fn zeros() -> String {
    "zeros".into()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorridorSource {
    Zeros,
    File(PathBuf),
    Sample,
}

impl CorridorSource {
    /// `zeros`, `sample` or `file:<path>`; relative paths resolve against `base`.
    pub fn parse(spec: &str, base: &Path) -> Result<Self> {
        match spec.trim() {
            "zeros" => Ok(Self::Zeros),
            "sample" => Ok(Self::Sample),
            other => match other.strip_prefix("file:") {
                Some(p) if !p.is_empty() => {
                    let path = PathBuf::from(p);
                    Ok(Self::File(if path.is_absolute() { path } else { base.join(path) }))
                }
                _ => bail!("corridor must be \"zeros\", \"sample\" or \"file:<path>\", got {other:?}"),
            },
        }
    }

    /// Fixed corridors only; `Sample` is drawn during the run.
    pub fn load(&self, dt: f64, n_steps: usize) -> Result<Option<Corridor>> {
        match self {
            Self::Zeros => Ok(Some(Corridor::zeros(dt, n_steps)?)),
            Self::Sample => Ok(None),
            Self::File(path) => {
                let file = fs::File::open(path).with_context(|| format!("opening corridor file {}", path.display()))?;
                let c = Corridor::from_csv(dt, file).with_context(|| format!("reading corridor file {}", path.display()))?;
                if c.len() != n_steps {
                    bail!("corridor file {} has {} samples but n_steps is {}", path.display(), c.len(), n_steps);
                }
                Ok(Some(c))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    /// sha256 of the raw config bytes.
    pub digest: String,
    pub base_dir: PathBuf,
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Parses a config; errors name the offending field and position.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        anyhow!("config error at field `{path}` (line {}, column {}): {inner}", inner.line(), inner.column())
    })
}

pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let bytes = fs::read(path).with_context(|| format!("reading config {}", path.display()))?;
    let text = std::str::from_utf8(&bytes).context("config is not UTF-8")?;
    let config = parse_config(text)?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig { config, digest: digest_bytes(&bytes), base_dir })
}

impl ScenarioConfig {
    pub fn physics(&self) -> Result<PhysicsParams> {
        Ok(PhysicsParams::new(self.params.m, self.params.hbar)?)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.x_min, self.grid.x_max, self.grid.n).context("field `grid`")
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let params = self.physics()?;
        let m = params.m;
        let v_phys = self.potential.as_ref().map(|f| f.field(m)).transpose().context("field `potential`")?;
        let a_gauge = self.gauge_field.as_ref().map(|f| f.field(m)).transpose().context("field `gauge_field`")?;
        let gauge = GaugeModel::from_physical(v_phys, a_gauge, &params);
        let mc = &self.model;
        let model = MeasurementModel::new(
            mc.a.observable(m).context("field `model.a`")?,
            mc.kappa,
            mc.b.as_ref().map(|f| f.observable(m)).transpose().context("field `model.b`")?,
            mc.c.as_ref().map(|f| f.observable(m)).transpose().context("field `model.c`")?,
            mc.eta,
        )
        .context("field `model`")?;
        let s = Scenario { grid: self.grid()?, params, gauge, model, dt: self.dt, n_steps: self.n_steps, psi0: self.psi0 };
        s.validate().context("invalid scenario")?;
        Ok(s)
    }
}
