//! Command-line front end: validates model configs and runs the pricing,
//! simulation, hedging, bond and solver-vs-Monte-Carlo commands, emitting
//! CSV artifacts plus a JSON run manifest. Outputs are deterministic for a
//! fixed config and seed.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use config::{check_payoff, BuildError, Built, ClaimKind, ModelConfig};
use smrs_core::bsm::PayoffSpec;
use smrs_core::hedge;
use smrs_core::market::MarketState;
use smrs_core::sim::{self, ChainMethod, ClaimSpec, Measure};
use smrs_core::solver::{
    solve_barrier_down_out, solve_barrier_up_out, solve_vanilla, solve_zcb, PriceSurface,
};
use smrs_core::{bonds, Error as CoreError};

#[derive(Parser)]
#[command(
    name = "smrs",
    about = "Pricing and hedging under age-dependent semi-Markov regime switching",
    version
)]
struct Cli {
    /// Model configuration file (TOML).
    #[arg(long, global = true, default_value = "config.toml")]
    config: PathBuf,
    /// Output directory for CSV artifacts and the manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Dotted-path config override, e.g. --set claim.strike=1.1 (repeatable).
    #[arg(long = "set", global = true)]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Parse and validate the configuration; no computation.
    Validate,
    /// Simulate regime/asset paths and write paths.csv.
    Simulate,
    /// Solve the pricing equation and write surface.csv.
    Price,
    /// Solve, then write hedge ratios over the price grid to hedge.csv.
    Hedge,
    /// Price the structural bond models; writes bond.csv.
    Bond,
    /// Compare the solver against the Monte Carlo pricer; nonzero exit on
    /// disagreement beyond 3 standard errors plus the bias allowance.
    Crosscheck,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Simulate => "simulate",
            Command::Price => "price",
            Command::Hedge => "hedge",
            Command::Bond => "bond",
            Command::Crosscheck => "crosscheck",
        }
    }
}

/// Everything the manifest records about one run.
struct RunLog {
    command: &'static str,
    config_hash: String,
    seed: u64,
    status: String,
    errors: Vec<serde_json::Value>,
    residual_history: Vec<f64>,
    outputs: Vec<String>,
    results: serde_json::Map<String, serde_json::Value>,
}

impl RunLog {
    fn new(command: &'static str, config_hash: String) -> Self {
        Self {
            command,
            config_hash,
            seed: 0,
            status: "ok".into(),
            errors: Vec::new(),
            residual_history: Vec::new(),
            outputs: Vec::new(),
            results: serde_json::Map::new(),
        }
    }

    fn record(&mut self, key: &str, value: serde_json::Value) {
        self.results.insert(key.to_string(), value);
    }

    fn write(&self, out_dir: &Path) -> Result<()> {
        std::fs::create_dir_all(out_dir)?;
        let manifest = json!({
            "command": self.command,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "package": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "status": self.status,
            "errors": self.errors,
            "residual_history": self.residual_history,
            "outputs": self.outputs,
            "results": serde_json::Value::Object(self.results.clone()),
        });
        let path = out_dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.command;
    let mut log = RunLog::new(command.name(), String::new());

    let exit = match config::load(&cli.config, &cli.set) {
        Ok((config, hash)) => {
            log.config_hash = hash;
            match run(command, &cli, &config, &mut log) {
                Ok(()) => 0u8,
                Err(failure) => {
                    log.status = failure.status().to_string();
                    for e in failure.error_records() {
                        log.errors.push(e);
                    }
                    eprintln!("error: {failure}");
                    failure.exit_code()
                }
            }
        }
        Err(e) => {
            log.status = "error".into();
            log.errors.push(json!({ "message": format!("{e:#}") }));
            eprintln!("error: {e:#}");
            1
        }
    };
    // the manifest is written even on failure paths
    if let Err(e) = log.write(&cli.out) {
        eprintln!("error: could not write manifest: {e:#}");
        return ExitCode::from(1);
    }
    ExitCode::from(exit)
}

/// Failure modes with their exit codes.
enum Failure {
    Validation(Vec<serde_json::Value>, String),
    Convergence(String),
    Crosscheck(String),
    Other(anyhow::Error),
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Validation(_, msg) => write!(f, "{msg}"),
            Failure::Convergence(msg) => write!(f, "{msg}"),
            Failure::Crosscheck(msg) => write!(f, "{msg}"),
            Failure::Other(e) => write!(f, "{e:#}"),
        }
    }
}

impl Failure {
    fn status(&self) -> &'static str {
        match self {
            Failure::Validation(..) => "validation_error",
            Failure::Convergence(_) => "convergence_error",
            Failure::Crosscheck(_) => "crosscheck_failed",
            Failure::Other(_) => "error",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            Failure::Validation(..) => 2,
            Failure::Convergence(_) => 3,
            Failure::Crosscheck(_) => 4,
            Failure::Other(_) => 1,
        }
    }

    fn error_records(&self) -> Vec<serde_json::Value> {
        match self {
            Failure::Validation(list, _) => list.clone(),
            other => vec![json!({ "message": other.to_string() })],
        }
    }
}

fn core_failure(err: CoreError) -> Failure {
    match err {
        CoreError::Validation(ref list) => {
            let records = list.iter().map(validation_record).collect();
            Failure::Validation(records, err.to_string())
        }
        CoreError::Convergence { .. } => Failure::Convergence(err.to_string()),
        other => Failure::Other(anyhow!(other.to_string())),
    }
}

/// Machine-readable validation records naming the offending entries.
fn validation_record(v: &smrs_core::ValidationError) -> serde_json::Value {
    use smrs_core::ValidationError as V;
    match v {
        V::NegativeRate {
            from,
            to,
            power,
            coeff,
            age,
            rate,
        } => json!({
            "kind": "negative_rate",
            "from": from, "to": to, "power": power,
            "coeff": coeff, "age": age, "rate": rate,
            "message": v.to_string(),
        }),
        V::AbsorbingState { state } => {
            json!({ "kind": "absorbing_state", "state": state, "message": v.to_string() })
        }
        V::RowSumNonzero { power, row, sum } => json!({
            "kind": "row_sum_nonzero", "power": power, "row": row, "sum": sum,
            "message": v.to_string(),
        }),
        V::Shape(msg) => json!({ "kind": "shape", "message": msg }),
        V::NonPositiveRate { state, value } => json!({
            "kind": "non_positive_rate", "state": state, "value": value,
            "message": v.to_string(),
        }),
        V::NonPositiveVol { state, value } => json!({
            "kind": "non_positive_vol", "state": state, "value": value,
            "message": v.to_string(),
        }),
        V::Parameter { name, value } => json!({
            "kind": "parameter", "name": name, "value": value,
            "message": v.to_string(),
        }),
    }
}

fn run(command: Command, cli: &Cli, config: &ModelConfig, log: &mut RunLog) -> Result<(), Failure> {
    let mut built = match config.build() {
        Ok(b) => b,
        Err(BuildError::Core(e)) => return Err(core_failure(e)),
        Err(BuildError::Other(e)) => {
            return Err(Failure::Validation(
                vec![json!({ "kind": "config", "message": e.to_string() })],
                e.to_string(),
            ))
        }
    };
    if let Some(seed) = cli.seed {
        built.seed = seed;
    }
    log.seed = built.seed;

    match command {
        Command::Validate => {
            log.record("states", json!(built.spec.state_count()));
            log.record("rate_bound", json!(built.spec.rate_bound()));
            println!(
                "ok: {} regimes, rate bound {}",
                built.spec.state_count(),
                built.spec.rate_bound()
            );
            Ok(())
        }
        Command::Simulate => simulate(cli, &built, log).map_err(Failure::Other),
        Command::Price => price(cli, &built, log),
        Command::Hedge => hedge_cmd(cli, &built, log),
        Command::Bond => bond_cmd(cli, &built, log),
        Command::Crosscheck => crosscheck(cli, &built, log),
    }
}

fn write_csv(out_dir: &Path, name: &str, header: &str, rows: &[String]) -> Result<String> {
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(name);
    let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(file, "{header}")?;
    for row in rows {
        writeln!(file, "{row}")?;
    }
    file.flush()?;
    Ok(name.to_string())
}

fn simulate(cli: &Cli, built: &Built, log: &mut RunLog) -> Result<()> {
    let mut rows = Vec::new();
    for p in 0..built.sim_paths {
        let mut chain_rng = sim::path_rng(built.seed, 2 * p as u64);
        let mut asset_rng = sim::path_rng(built.seed, 2 * p as u64 + 1);
        let mut path = sim::simulate_chain(
            &built.spec,
            built.state.regime,
            built.state.age,
            built.horizon,
            &mut chain_rng,
            ChainMethod::Thinning,
        )
        .map_err(|e| anyhow!(e.to_string()))?;
        sim::simulate_asset(
            &mut path,
            &built.model,
            built.state.s,
            built.state.t,
            Measure::Physical,
            &[],
            &mut asset_rng,
        )
        .map_err(|e| anyhow!(e.to_string()))?;

        // age just before each event: a jump resets it only after it lands
        let mut last_jump: Option<f64> = None;
        let mut jump_idx = 0usize;
        for &(t, price) in &path.asset_samples {
            let age_before = match last_jump {
                Some(tj) => t - tj,
                None => built.state.age + t,
            };
            let state = path.state_at(t);
            rows.push(format!("{p},{t},{state},{age_before},{price}"));
            while jump_idx < path.transitions.len() && path.transitions[jump_idx].0 <= t {
                last_jump = Some(path.transitions[jump_idx].0);
                jump_idx += 1;
            }
        }
    }
    let name = write_csv(
        &cli.out,
        "paths.csv",
        "path_id,event_time,state,age_before,price",
        &rows,
    )?;
    log.outputs.push(name);
    log.record("paths", json!(built.sim_paths));
    println!("wrote {} paths", built.sim_paths);
    Ok(())
}

/// Solves the configured claim's surface (vanilla or barrier).
fn solve_surface(built: &Built) -> Result<PriceSurface<f64>, Failure> {
    let payoff = check_payoff(&built.claim).map_err(Failure::Other)?;
    let result = match &built.claim {
        ClaimKind::Call { .. } | ClaimKind::Put { .. } => solve_vanilla(
            &built.model,
            &built.spec,
            &payoff,
            built.maturity,
            &built.grid,
            built.tol,
            None,
        ),
        ClaimKind::UpOutCall { strike, barrier } => solve_barrier_up_out(
            &built.model,
            &built.spec,
            *strike,
            *barrier,
            built.maturity,
            &built.grid,
            built.tol,
        ),
        ClaimKind::DownOutCall { strike, barrier } => solve_barrier_down_out(
            &built.model,
            &built.spec,
            *strike,
            *barrier,
            built.maturity,
            &built.grid,
            built.tol,
        ),
        _ => return Err(Failure::Other(anyhow!("claim has no price surface"))),
    };
    result.map_err(core_failure)
}

fn surface_rows(surface: &PriceSurface<f64>, state: &MarketState<f64>) -> (Vec<String>, f64) {
    let mut rows = Vec::new();
    let n_s = surface.log_s_grid.len();
    for (m, &t) in surface.t_grid.iter().enumerate() {
        for (l, &xi) in surface.log_s_grid.iter().enumerate() {
            let s = xi.exp();
            for i in 0..surface.states {
                let v = surface.zero_slice[(m * n_s + l) * surface.states + i];
                rows.push(format!("{t},{s},{i},0,{v}"));
            }
        }
    }
    let headline = surface.eval(state).unwrap_or(f64::NAN);
    rows.push(format!(
        "{},{},{},{},{headline}",
        state.t, state.s, state.regime, state.age
    ));
    (rows, headline)
}

fn price(cli: &Cli, built: &Built, log: &mut RunLog) -> Result<(), Failure> {
    match &built.claim {
        ClaimKind::Zcb => {
            let n_t = built.grid.n_t.max(257);
            let curve = solve_zcb(&built.model, &built.spec, built.maturity, n_t, built.tol)
                .map_err(core_failure)?;
            log.residual_history = curve.residual_history.clone();
            let mut rows = Vec::new();
            for (m, &t) in curve.t_grid.iter().enumerate() {
                for i in 0..curve.states {
                    rows.push(format!("{t},0,{i},0,{}", curve.values[m * curve.states + i]));
                }
            }
            let value = curve.value(
                &built.model,
                &built.spec,
                built.state.t,
                built.state.regime,
                built.state.age,
            );
            rows.push(format!(
                "{},0,{},{},{value}",
                built.state.t, built.state.regime, built.state.age
            ));
            let name = write_csv(&cli.out, "surface.csv", "t,s,state,age,value", &rows)
                .map_err(Failure::Other)?;
            log.outputs.push(name);
            log.record("price", json!(value));
            println!("zcb price = {value}");
            Ok(())
        }
        ClaimKind::Bond1 { .. } | ClaimKind::Bond2 { .. } | ClaimKind::Bond3 { .. } => Err(
            Failure::Other(anyhow!("bond claims are priced by the `bond` command")),
        ),
        _ => {
            let surface = solve_surface(built)?;
            log.residual_history = surface.residual_history.clone();
            let (rows, headline) = surface_rows(&surface, &built.state);
            let name = write_csv(&cli.out, "surface.csv", "t,s,state,age,value", &rows)
                .map_err(Failure::Other)?;
            log.outputs.push(name);
            log.record("price", json!(headline));
            log.record("iterations", json!(surface.iterations));
            println!("price = {headline} ({} iterations)", surface.iterations);
            Ok(())
        }
    }
}

fn hedge_cmd(cli: &Cli, built: &Built, log: &mut RunLog) -> Result<(), Failure> {
    let payoff: PayoffSpec<f64> = check_payoff(&built.claim).map_err(Failure::Other)?;
    let surface = solve_surface(built)?;
    log.residual_history = surface.residual_history.clone();
    let mut rows = Vec::new();
    let t = built.state.t;
    let age = built.state.age;
    for &xi_log in &surface.log_s_grid {
        let s = xi_log.exp();
        for i in 0..surface.states {
            let state = MarketState::new(t, s, i, age);
            let strat =
                hedge::strategy_at(&surface, &built.model, &built.spec, &payoff, &state, 1.0)
                    .map_err(core_failure)?;
            rows.push(format!(
                "{t},{s},{i},{age},{},{},{}",
                strat.xi, strat.eps, strat.value
            ));
        }
    }
    let name = write_csv(&cli.out, "hedge.csv", "t,s,state,age,xi,eps,value", &rows)
        .map_err(Failure::Other)?;
    log.outputs.push(name);
    let at_state = hedge::strategy_at(
        &surface,
        &built.model,
        &built.spec,
        &payoff,
        &built.state,
        1.0,
    )
    .map_err(core_failure)?;
    log.record("xi", json!(at_state.xi));
    log.record("value", json!(at_state.value));

    // realized cost of running the strategy at the configured rebalance step
    let cost_paths = built.n_paths.min(2_000);
    let costs = hedge::simulate_hedge_cost(
        &surface,
        &built.model,
        &built.spec,
        &built.state,
        cost_paths,
        built.rebalance_dt,
        Measure::RiskNeutral,
        built.seed,
    )
    .map_err(core_failure)?;
    let (cost_mean, cost_se) = sim::mean_and_se(&costs);
    log.record("hedge_cost_mean", json!(cost_mean));
    log.record("hedge_cost_se", json!(cost_se));
    println!(
        "hedge ratio at the initial state = {}; rebalancing cost {} ± {}",
        at_state.xi, cost_mean, cost_se
    );
    Ok(())
}

fn bond_cmd(cli: &Cli, built: &Built, log: &mut RunLog) -> Result<(), Failure> {
    let zcb_nodes = built.grid.n_t.max(257);
    let zcb = solve_zcb(
        &built.model,
        &built.spec,
        built.maturity,
        zcb_nodes,
        built.tol,
    )
    .map_err(core_failure)?;
    let mut rows = Vec::new();
    match &built.claim {
        ClaimKind::Bond1 { face } => {
            let (call, put) = bond_vanilla_surfaces(built, *face)?;
            let de = bonds::merton_bond(
                &call,
                &put,
                &zcb,
                &built.model,
                &built.spec,
                &built.state,
                *face,
            )
            .map_err(core_failure)?;
            rows.push(format!("1,{},{},0", de.debt, de.equity));
            log.record("debt", json!(de.debt));
            log.record("equity", json!(de.equity));
            println!("model 1: debt = {}, equity = {}", de.debt, de.equity);
        }
        ClaimKind::Bond2 { face, barrier } => {
            let (call, put) = bond_vanilla_surfaces(built, *face)?;
            let doc = solve_barrier_down_out(
                &built.model,
                &built.spec,
                *face,
                *barrier,
                built.maturity,
                &built.grid,
                built.tol,
            )
            .map_err(core_failure)?;
            let de = bonds::covenant_bond(
                &call,
                &put,
                &doc,
                &zcb,
                &built.model,
                &built.spec,
                &built.state,
                *face,
                *barrier,
            )
            .map_err(core_failure)?;
            rows.push(format!("2,{},{},0", de.debt, de.equity));
            log.record("debt", json!(de.debt));
            log.record("equity", json!(de.equity));
            println!("model 2: debt = {}, equity = {}", de.debt, de.equity);
        }
        ClaimKind::Bond3 {
            face,
            barrier,
            recovery,
        } => {
            let (debt, se) = bonds::recovery_bond(
                &zcb,
                &built.model,
                &built.spec,
                &built.state,
                *face,
                *barrier,
                *recovery,
                built.maturity,
                built.n_paths,
                built.seed,
                built.barrier_steps,
            )
            .map_err(core_failure)?;
            rows.push(format!("3,{debt},,{se}"));
            log.record("debt", json!(debt));
            log.record("se", json!(se));
            println!("model 3: debt = {debt} ± {se}");
        }
        _ => {
            return Err(Failure::Other(anyhow!(
                "the bond command needs a bond1/bond2/bond3 claim"
            )))
        }
    }
    let name =
        write_csv(&cli.out, "bond.csv", "model,debt,equity,se", &rows).map_err(Failure::Other)?;
    log.outputs.push(name);
    Ok(())
}

fn bond_vanilla_surfaces(
    built: &Built,
    face: f64,
) -> Result<(PriceSurface<f64>, PriceSurface<f64>), Failure> {
    let call = solve_vanilla(
        &built.model,
        &built.spec,
        &PayoffSpec::call(face).map_err(core_failure)?,
        built.maturity,
        &built.grid,
        built.tol,
        None,
    )
    .map_err(core_failure)?;
    let put = solve_vanilla(
        &built.model,
        &built.spec,
        &PayoffSpec::put(face).map_err(core_failure)?,
        built.maturity,
        &built.grid,
        built.tol,
        None,
    )
    .map_err(core_failure)?;
    Ok((call, put))
}

fn make_zcb(built: &Built) -> Result<smrs_core::solver::ZcbCurve<f64>, Failure> {
    solve_zcb(
        &built.model,
        &built.spec,
        built.maturity,
        built.grid.n_t.max(257),
        built.tol,
    )
    .map_err(core_failure)
}

fn crosscheck(cli: &Cli, built: &Built, log: &mut RunLog) -> Result<(), Failure> {
    // solver answer, Monte Carlo claim, barrier-monitoring bias allowance
    let (solver_value, mc_claim, bias): (f64, ClaimSpec<f64>, f64) = match &built.claim {
        ClaimKind::Call { strike } => {
            let surface = solve_surface(built)?;
            log.residual_history = surface.residual_history.clone();
            let v = surface.eval(&built.state).map_err(core_failure)?;
            write_surface(cli, log, &surface, built)?;
            (
                v,
                ClaimSpec::Call {
                    strike: *strike,
                    maturity: built.maturity,
                },
                0.0,
            )
        }
        ClaimKind::Put { strike } => {
            let surface = solve_surface(built)?;
            log.residual_history = surface.residual_history.clone();
            let v = surface.eval(&built.state).map_err(core_failure)?;
            write_surface(cli, log, &surface, built)?;
            (
                v,
                ClaimSpec::Put {
                    strike: *strike,
                    maturity: built.maturity,
                },
                0.0,
            )
        }
        ClaimKind::Zcb => {
            let curve = make_zcb(built)?;
            log.residual_history = curve.residual_history.clone();
            let v = curve.value(
                &built.model,
                &built.spec,
                built.state.t,
                built.state.regime,
                built.state.age,
            );
            (
                v,
                ClaimSpec::Zcb {
                    maturity: built.maturity,
                },
                0.0,
            )
        }
        ClaimKind::UpOutCall { strike, barrier } => {
            let surface = solve_surface(built)?;
            log.residual_history = surface.residual_history.clone();
            let v = surface.eval(&built.state).map_err(core_failure)?;
            write_surface(cli, log, &surface, built)?;
            (
                v,
                ClaimSpec::UpOutCall {
                    strike: *strike,
                    barrier: *barrier,
                    maturity: built.maturity,
                },
                5e-3,
            )
        }
        ClaimKind::DownOutCall { strike, barrier } => {
            let surface = solve_surface(built)?;
            log.residual_history = surface.residual_history.clone();
            let v = surface.eval(&built.state).map_err(core_failure)?;
            write_surface(cli, log, &surface, built)?;
            (
                v,
                ClaimSpec::DownOutCall {
                    strike: *strike,
                    barrier: *barrier,
                    maturity: built.maturity,
                },
                5e-3,
            )
        }
        ClaimKind::Bond1 { face } => {
            let zcb = make_zcb(built)?;
            let (call, put) = bond_vanilla_surfaces(built, *face)?;
            let de = bonds::merton_bond(
                &call,
                &put,
                &zcb,
                &built.model,
                &built.spec,
                &built.state,
                *face,
            )
            .map_err(core_failure)?;
            (
                de.debt,
                ClaimSpec::BondModel1 {
                    face: *face,
                    maturity: built.maturity,
                },
                0.0,
            )
        }
        ClaimKind::Bond2 { face, barrier } => {
            let zcb = make_zcb(built)?;
            let (call, put) = bond_vanilla_surfaces(built, *face)?;
            let doc = solve_barrier_down_out(
                &built.model,
                &built.spec,
                *face,
                *barrier,
                built.maturity,
                &built.grid,
                built.tol,
            )
            .map_err(core_failure)?;
            let de = bonds::covenant_bond(
                &call,
                &put,
                &doc,
                &zcb,
                &built.model,
                &built.spec,
                &built.state,
                *face,
                *barrier,
            )
            .map_err(core_failure)?;
            // the covenant payoff includes the barrier add-on: monitoring bias
            (
                de.debt,
                ClaimSpec::BondModel2 {
                    face: *face,
                    barrier: *barrier,
                    maturity: built.maturity,
                },
                5e-3,
            )
        }
        ClaimKind::Bond3 {
            face,
            barrier,
            recovery,
        } => {
            // both sides are Monte Carlo: two independent seeds must agree
            let zcb = make_zcb(built)?;
            let price_with = |seed: u64| {
                bonds::recovery_bond(
                    &zcb,
                    &built.model,
                    &built.spec,
                    &built.state,
                    *face,
                    *barrier,
                    *recovery,
                    built.maturity,
                    built.n_paths,
                    seed,
                    built.barrier_steps,
                )
                .map_err(core_failure)
            };
            let (a, se_a) = price_with(built.seed)?;
            let (b, se_b) = price_with(built.seed.wrapping_add(0x9e37_79b9_7f4a_7c15))?;
            let tol = 3.0 * (se_a * se_a + se_b * se_b).sqrt();
            return finish_crosscheck(cli, log, "bond3", a, b, se_b, tol);
        }
    };

    let (mc, se) = sim::mc_price(
        &mc_claim,
        &built.model,
        &built.spec,
        &built.state,
        built.n_paths,
        built.seed,
        built.barrier_steps,
    )
    .map_err(core_failure)?;
    let tol = 3.0 * se + bias;
    finish_crosscheck(
        cli,
        log,
        built_claim_name(&built.claim),
        solver_value,
        mc,
        se,
        tol,
    )
}

fn built_claim_name(claim: &ClaimKind) -> &'static str {
    match claim {
        ClaimKind::Call { .. } => "call",
        ClaimKind::Put { .. } => "put",
        ClaimKind::Zcb => "zcb",
        ClaimKind::UpOutCall { .. } => "up_out_call",
        ClaimKind::DownOutCall { .. } => "down_out_call",
        ClaimKind::Bond1 { .. } => "bond1",
        ClaimKind::Bond2 { .. } => "bond2",
        ClaimKind::Bond3 { .. } => "bond3",
    }
}

#[allow(clippy::too_many_arguments)]
fn finish_crosscheck(
    cli: &Cli,
    log: &mut RunLog,
    claim: &str,
    solver_value: f64,
    mc: f64,
    se: f64,
    tol: f64,
) -> Result<(), Failure> {
    let diff = (solver_value - mc).abs();
    let pass = diff <= tol;
    let rows = vec![format!(
        "{claim},{solver_value},{mc},{se},{diff},{tol},{}",
        if pass { "pass" } else { "fail" }
    )];
    let name = write_csv(
        &cli.out,
        "crosscheck.csv",
        "claim,solver,mc,mc_se,abs_diff,tolerance,status",
        &rows,
    )
    .map_err(Failure::Other)?;
    log.outputs.push(name);
    log.record("solver", json!(solver_value));
    log.record("mc", json!(mc));
    log.record("mc_se", json!(se));
    log.record("abs_diff", json!(diff));
    log.record("tolerance", json!(tol));
    println!(
        "crosscheck {claim}: solver {solver_value} vs mc {mc} (se {se}), |diff| {diff} vs tol {tol}: {}",
        if pass { "pass" } else { "FAIL" }
    );
    if pass {
        Ok(())
    } else {
        Err(Failure::Crosscheck(format!(
            "solver {solver_value} and Monte Carlo {mc} differ by {diff} > {tol}"
        )))
    }
}

fn write_surface(
    cli: &Cli,
    log: &mut RunLog,
    surface: &PriceSurface<f64>,
    built: &Built,
) -> Result<(), Failure> {
    let (rows, _) = surface_rows(surface, &built.state);
    let name =
        write_csv(&cli.out, "surface.csv", "t,s,state,age,value", &rows).map_err(Failure::Other)?;
    log.outputs.push(name);
    Ok(())
}
