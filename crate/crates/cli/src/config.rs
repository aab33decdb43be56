//! Model configuration: a single TOML file with nested tables, strict about
//! unknown fields, plus dotted-path command-line overrides.

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use sha2::{Digest, Sha256};
use smrs_core::bsm::{PayoffSpec, VolProfile};
use smrs_core::market::{MarketState, RegimeModel};
use smrs_core::rates::RateSpec;
use smrs_core::solver::GridSpec;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub rates: RatesSection,
    pub market: MarketSection,
    pub claim: ClaimSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSection {
    /// Coefficient matrices of ascending age power, row-major.
    pub matrices: Vec<Vec<Vec<f64>>>,
    /// Age beyond which rates freeze; defaults to 4 × claim maturity.
    pub y_cap: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSection {
    pub r: Vec<f64>,
    /// Physical drift per state; defaults to r.
    pub mu: Option<Vec<f64>>,
    /// Dividend rate per state; defaults to zeros.
    pub kappa: Option<Vec<f64>>,
    pub vol: VolSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolSection {
    pub kind: String,
    /// Per-state volatility (constant kind) or base volatility (monday kind).
    pub sigma: Vec<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimSection {
    pub kind: String,
    pub maturity: f64,
    pub strike: Option<f64>,
    pub barrier: Option<f64>,
    pub recovery: Option<f64>,
    /// Face value for bond claims; defaults to the strike.
    pub face: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub t: f64,
    pub s: f64,
    pub state: usize,
    pub age: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n_t: Option<usize>,
    pub n_s: Option<usize>,
    pub n_y: Option<usize>,
    pub n_v: Option<usize>,
    pub n_x: Option<usize>,
    pub s_min: Option<f64>,
    pub s_max: Option<f64>,
    pub trunc_sd: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub n_paths: Option<usize>,
    pub barrier_steps: Option<usize>,
    pub rebalance_dt: Option<f64>,
    /// Horizon for the `simulate` command; defaults to the claim maturity.
    pub horizon: Option<f64>,
    /// How many paths the `simulate` command writes.
    pub sim_paths: Option<usize>,
}

/// Claim selected by the config, with its parameters resolved.
#[derive(Debug, Clone, PartialEq)]
pub enum ClaimKind {
    Call { strike: f64 },
    Put { strike: f64 },
    Zcb,
    UpOutCall { strike: f64, barrier: f64 },
    DownOutCall { strike: f64, barrier: f64 },
    Bond1 { face: f64 },
    Bond2 { face: f64, barrier: f64 },
    Bond3 { face: f64, barrier: f64, recovery: f64 },
}

/// Everything a command needs, validated and ready.
pub struct Built {
    pub spec: RateSpec<f64>,
    pub model: RegimeModel<f64>,
    pub grid: GridSpec<f64>,
    pub claim: ClaimKind,
    pub maturity: f64,
    pub state: MarketState<f64>,
    pub tol: f64,
    pub seed: u64,
    pub n_paths: usize,
    pub barrier_steps: usize,
    pub rebalance_dt: f64,
    pub horizon: f64,
    pub sim_paths: usize,
}

/// Loads the config file, applies `--set key=value` overrides, and returns
/// the parsed config together with a hash of the file plus overrides.
pub fn load(path: &std::path::Path, overrides: &[String]) -> Result<(ModelConfig, String)> {
    let raw = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut value: toml::Value = raw.parse().context("config is not valid TOML")?;
    for item in overrides {
        apply_override(&mut value, item)?;
    }
    let mut hasher = Sha256::new();
    hasher.update(raw.as_bytes());
    for item in overrides {
        hasher.update(b"\x00");
        hasher.update(item.as_bytes());
    }
    let hash = hex(&hasher.finalize());
    let config: ModelConfig = value.try_into().context("config does not match the schema")?;
    Ok((config, hash))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn parse_value(literal: &str) -> Result<toml::Value> {
    let doc: toml::Value = format!("v = {literal}").parse()?;
    Ok(doc
        .get("v")
        .cloned()
        .expect("document has the synthetic key"))
}

fn apply_override(root: &mut toml::Value, item: &str) -> Result<()> {
    let (path, literal) = item
        .split_once('=')
        .ok_or_else(|| anyhow!("override `{item}` is not of the form key.path=value"))?;
    // parse the right-hand side as a TOML value; fall back to a bare string
    let parsed = parse_value(literal)
        .or_else(|_| parse_value(&format!("\"{literal}\"")))
        .map_err(|e| anyhow!("override value `{literal}` is not TOML: {e}"))?;
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (idx, part) in parts.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| anyhow!("override path `{path}` crosses a non-table"))?;
        if idx == parts.len() - 1 {
            table.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    unreachable!("override paths have at least one segment")
}

impl ModelConfig {
    /// Validates and assembles the core objects. Library validation errors
    /// pass through so the caller can map them to the right exit code.
    pub fn build(&self) -> std::result::Result<Built, BuildError> {
        let maturity = self.claim.maturity;
        if !(maturity > 0.0) {
            return Err(BuildError::Other(anyhow!(
                "claim maturity must be positive, got {maturity}"
            )));
        }
        let y_cap = self.rates.y_cap.unwrap_or(4.0 * maturity);
        let spec = RateSpec::new(&self.rates.matrices, y_cap).map_err(BuildError::Core)?;

        let k = self.market.r.len();
        let vol = match self.market.vol.kind.as_str() {
            "constant" => VolProfile::constant(self.market.vol.sigma.clone()),
            "monday" => {
                let alpha = self.market.vol.alpha.ok_or_else(|| {
                    BuildError::Other(anyhow!("monday volatility needs `alpha`"))
                })?;
                let beta = self.market.vol.beta.ok_or_else(|| {
                    BuildError::Other(anyhow!("monday volatility needs `beta`"))
                })?;
                VolProfile::monday(self.market.vol.sigma.clone(), alpha, beta)
            }
            other => {
                return Err(BuildError::Other(anyhow!(
                    "unknown volatility kind `{other}`; expected constant or monday"
                )))
            }
        };
        let mu = self.market.mu.clone().unwrap_or_else(|| self.market.r.clone());
        let kappa = self.market.kappa.clone().unwrap_or_else(|| vec![0.0; k]);
        let model =
            RegimeModel::new(self.market.r.clone(), mu, kappa, vol).map_err(BuildError::Core)?;

        if spec.state_count() != model.state_count() {
            return Err(BuildError::Other(anyhow!(
                "rate matrices have {} states but the market lists {}",
                spec.state_count(),
                model.state_count()
            )));
        }

        let strike = || {
            self.claim
                .strike
                .ok_or_else(|| BuildError::Other(anyhow!("claim kind needs `strike`")))
        };
        let barrier = || {
            self.claim
                .barrier
                .ok_or_else(|| BuildError::Other(anyhow!("claim kind needs `barrier`")))
        };
        let face = || -> std::result::Result<f64, BuildError> {
            self.claim.face.or(self.claim.strike).ok_or_else(|| {
                BuildError::Other(anyhow!("bond claims need `face` (or `strike`)"))
            })
        };
        let claim = match self.claim.kind.as_str() {
            "call" => ClaimKind::Call { strike: strike()? },
            "put" => ClaimKind::Put { strike: strike()? },
            "zcb" => ClaimKind::Zcb,
            "up_out_call" => ClaimKind::UpOutCall {
                strike: strike()?,
                barrier: barrier()?,
            },
            "down_out_call" => ClaimKind::DownOutCall {
                strike: strike()?,
                barrier: barrier()?,
            },
            "bond1" => ClaimKind::Bond1 { face: face()? },
            "bond2" => ClaimKind::Bond2 {
                face: face()?,
                barrier: barrier()?,
            },
            "bond3" => ClaimKind::Bond3 {
                face: face()?,
                barrier: barrier()?,
                recovery: self.claim.recovery.ok_or_else(|| {
                    BuildError::Other(anyhow!("bond3 needs `recovery`"))
                })?,
            },
            other => {
                return Err(BuildError::Other(anyhow!(
                    "unknown claim kind `{other}`"
                )))
            }
        };

        let grid = GridSpec {
            n_t: self.grid.n_t.unwrap_or(33),
            n_s: self.grid.n_s.unwrap_or(193),
            n_y: self.grid.n_y.unwrap_or(9),
            n_v: self.grid.n_v.unwrap_or(1),
            n_x: self.grid.n_x.unwrap_or(64),
            s_min: self.grid.s_min.unwrap_or(0.125 * self.initial.s.min(1.0)),
            s_max: self.grid.s_max.unwrap_or(8.0 * self.initial.s.max(1.0)),
            trunc_sd: self.grid.trunc_sd.unwrap_or(8.0),
        };

        if self.initial.state >= spec.state_count() {
            return Err(BuildError::Other(anyhow!(
                "initial state {} out of range for {} regimes",
                self.initial.state,
                spec.state_count()
            )));
        }
        if !(self.initial.s > 0.0) || self.initial.age < 0.0 || self.initial.t < 0.0 {
            return Err(BuildError::Other(anyhow!(
                "initial point needs s > 0, t >= 0, age >= 0"
            )));
        }
        if self.initial.t > maturity {
            return Err(BuildError::Other(anyhow!(
                "initial time {} is past the claim maturity {maturity}",
                self.initial.t
            )));
        }

        Ok(Built {
            spec,
            model,
            grid,
            claim,
            maturity,
            state: MarketState::new(
                self.initial.t,
                self.initial.s,
                self.initial.state,
                self.initial.age,
            ),
            tol: self.run.tol.unwrap_or(1e-8),
            seed: self.run.seed.unwrap_or(0),
            n_paths: self.run.n_paths.unwrap_or(200_000),
            barrier_steps: self.run.barrier_steps.unwrap_or(512),
            rebalance_dt: self.run.rebalance_dt.unwrap_or(0.01),
            horizon: self.run.horizon.unwrap_or(maturity),
            sim_paths: self.run.sim_paths.unwrap_or(100),
        })
    }
}

/// Build failure: core validation (exit 2 material) or anything else.
pub enum BuildError {
    Core(smrs_core::Error),
    Other(anyhow::Error),
}

pub fn check_payoff(claim: &ClaimKind) -> Result<PayoffSpec<f64>> {
    match claim {
        ClaimKind::Call { strike } | ClaimKind::UpOutCall { strike, .. } | ClaimKind::DownOutCall { strike, .. } => {
            PayoffSpec::call(*strike).map_err(|e| anyhow!(e.to_string()))
        }
        ClaimKind::Put { strike } => PayoffSpec::put(*strike).map_err(|e| anyhow!(e.to_string())),
        ClaimKind::Zcb => PayoffSpec::constant(1.0).map_err(|e| anyhow!(e.to_string())),
        _ => bail!("claim has no direct payoff surface; use the bond command"),
    }
}
