//! Subcommand implementations. Each writes machine files atomically, embeds a
//! run manifest in its JSON report, and prints a short 2-decimal table for
//! humans.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use worldprice::convex::{
    solve_convex_weights, convex_world_prices, ConvexSolution, FallbackPolicy, Feasibility,
};
use worldprice::diagnostics::{self, dominance_pairs};
use worldprice::error::Error;
use worldprice::fe::{complete_with_fit, fe_world_prices, fit_two_way_fe, FeFit};
use worldprice::io::{fmt_full, read_panel_path, read_world_prices_path, write_panel_csv, write_world_prices_csv};
use worldprice::operators::{naive_blend, select_operator, SelectionThresholds, WorldPriceVector};
use worldprice::panel::{aggregates, PricePanel};
use worldprice::scenarios::{
    scenario_a, scenario_b, InteractionParams, MixExtremityParams, Scenario, ScenarioConfig,
};
use worldprice::sweep::run_sweep;

use crate::config::FlatConfig;
use crate::manifest::{write_atomic, RunManifest};

/// A failure plus the exit code it maps to.
pub struct CmdError {
    pub message: String,
    pub code: u8,
}

impl CmdError {
    fn input(message: impl Into<String>) -> Self {
        CmdError {
            message: message.into(),
            code: 2,
        }
    }
}

impl From<Error> for CmdError {
    fn from(err: Error) -> Self {
        let code = match &err {
            Error::InfeasibleCost { .. } | Error::ToleranceUnreachable { .. } => 3,
            Error::DisconnectedPanel { .. }
            | Error::DegenerateWeights { .. }
            | Error::DegenerateExposure
            | Error::IdentifiabilityUnreachable { .. } => 4,
            Error::Numerical(_) => 1,
            _ => 2,
        };
        CmdError {
            message: err.to_string(),
            code,
        }
    }
}

impl From<std::io::Error> for CmdError {
    fn from(err: std::io::Error) -> Self {
        CmdError::input(err.to_string())
    }
}

pub type CmdResult = Result<(), CmdError>;

fn to_json<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("report serialization cannot fail")
}

fn write_json(path: &Path, value: &Value) -> CmdResult {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report serialization cannot fail");
    bytes.push(b'\n');
    write_atomic(path, &bytes)?;
    Ok(())
}

fn write_csv_with<F>(path: &Path, write: F) -> CmdResult
where
    F: FnOnce(&mut Vec<u8>) -> worldprice::Result<()>,
{
    let mut buf = Vec::new();
    write(&mut buf).map_err(CmdError::from)?;
    write_atomic(path, &buf)?;
    Ok(())
}

fn world_prices_json(world: &WorldPriceVector) -> Value {
    Value::Array(
        world
            .product_ids
            .iter()
            .zip(&world.prices)
            .map(|(id, p)| json!({ "product_id": id, "world_price": p }))
            .collect(),
    )
}

fn print_price_table(world: &WorldPriceVector) {
    println!("product      world_price");
    for (id, p) in world.product_ids.iter().zip(&world.prices) {
        println!("{id:<12} {p:>11.2}");
    }
}

// ---------------------------------------------------------------------------
// blend

pub struct BlendArgs {
    pub input: PathBuf,
    pub operator: String,
    pub baseline: Option<PathBuf>,
    pub fallback: String,
    pub epsilon: f64,
    pub output: PathBuf,
}

/// Baseline weights as two-column CSV: `campus_id,weight` with a header row.
fn read_baseline(path: &Path, panel: &PricePanel) -> Result<Vec<f64>, CmdError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CmdError::input(format!("{}: {e}", path.display())))?;
    let mut weights = vec![None; panel.n_campuses()];
    for line in text.lines().skip(1) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (campus, weight) = line
            .split_once(',')
            .ok_or_else(|| CmdError::input(format!("baseline line {line:?}: expected campus_id,weight")))?;
        let campus = campus.trim();
        let weight: f64 = weight
            .trim()
            .parse()
            .map_err(|e| CmdError::input(format!("baseline weight for {campus}: {e}")))?;
        let j = panel
            .campus_ids()
            .iter()
            .position(|c| c == campus)
            .ok_or_else(|| CmdError::input(format!("baseline campus {campus} not in panel")))?;
        weights[j] = Some(weight);
    }
    weights
        .into_iter()
        .enumerate()
        .map(|(j, w)| {
            w.ok_or_else(|| {
                CmdError::input(format!(
                    "baseline missing campus {}",
                    panel.campus_ids()[j]
                ))
            })
        })
        .collect()
}

fn fe_summary(fit: &FeFit) -> Value {
    json!({
        "alpha": fit.alpha,
        "gamma": fit.gamma,
        "delta": fit.delta,
        "rms_residual": fit.rms_residual,
        "imputed_cells": fit.imputed_cells.len(),
        "clamped_imputations": fit.clamped_imputations,
    })
}

fn convex_summary(solution: &ConvexSolution) -> Value {
    let status = match &solution.feasibility {
        Feasibility::FeasibleExact => json!({ "status": "feasible_exact" }),
        Feasibility::SlackFallback {
            rho_penalty,
            epsilon_tol,
        } => json!({
            "status": "slack_fallback",
            "rho_penalty": rho_penalty,
            "epsilon_tol": epsilon_tol,
        }),
        Feasibility::BoundaryProjected { cost_clipped } => json!({
            "status": "boundary_projected",
            "cost_clipped": cost_clipped,
        }),
    };
    json!({
        "weights": solution.weights,
        "baseline": solution.baseline,
        "active_set": solution.active_set,
        "cost_slack": solution.cost_slack,
        "feasibility": status,
        "iterations": solution.iterations,
    })
}

pub fn cmd_blend(args: &BlendArgs, seed: u64) -> CmdResult {
    let panel = read_panel_path(&args.input)?;
    let fallback = match args.fallback.as_str() {
        "error" => FallbackPolicy::Error,
        "slack" => FallbackPolicy::Slack {
            epsilon_tol: args.epsilon,
        },
        "boundary" => FallbackPolicy::Boundary,
        other => return Err(CmdError::input(format!("unknown fallback {other}"))),
    };

    let mut detail = json!({});
    let world = match args.operator.as_str() {
        "naive" => naive_blend(&panel),
        "fe" => {
            let fit = fit_two_way_fe(&panel)?;
            detail = json!({ "fe": fe_summary(&fit) });
            fe_world_prices(&fit, &panel)
        }
        "convex" => {
            // Common weights need a complete matrix; impute holes first and
            // keep the observed cost as the target.
            let (complete, fe_detail) = if panel.is_complete() {
                (panel.clone(), Value::Null)
            } else {
                let fit = fit_two_way_fe(&panel)?;
                (complete_with_fit(&panel, &fit), fe_summary(&fit))
            };
            let agg = aggregates(&complete);
            let exposure = agg.exposure.expect("panel completed above");
            let baseline = match &args.baseline {
                Some(path) => read_baseline(path, &complete)?,
                None => agg.global_quantity_shares.clone(),
            };
            let solution =
                solve_convex_weights(&baseline, &exposure, panel.system_cost(), fallback)?;
            detail = json!({ "convex": convex_summary(&solution), "imputation": fe_detail });
            convex_world_prices(&solution, &complete)?
        }
        other => return Err(CmdError::input(format!("unknown operator {other}"))),
    };

    let cdr = diagnostics::cdr(&panel, &world)?;
    let command = json!({
        "subcommand": "blend",
        "input": args.input.display().to_string(),
        "operator": args.operator,
        "baseline": args.baseline.as_ref().map(|p| p.display().to_string()),
        "fallback": args.fallback,
        "epsilon": args.epsilon,
        "output": args.output.display().to_string(),
    });
    let mut inputs: Vec<&Path> = vec![&args.input];
    if let Some(b) = &args.baseline {
        inputs.push(b);
    }
    let manifest = RunManifest::new(command, seed, &inputs)?;

    write_csv_with(&args.output, |buf| write_world_prices_csv(&world, buf))?;
    let report = json!({
        "manifest": to_json(&manifest),
        "operator": world.operator_tag.as_str(),
        "world_prices": world_prices_json(&world),
        "cdr": cdr,
        "detail": detail,
    });
    write_json(&args.output.with_extension("json"), &report)?;
    print_price_table(&world);
    println!("cdr {cdr:.2}");
    Ok(())
}

// ---------------------------------------------------------------------------
// diagnose

pub struct DiagnoseArgs {
    pub input: PathBuf,
    pub world_prices: PathBuf,
    pub output: PathBuf,
}

pub fn cmd_diagnose(args: &DiagnoseArgs, seed: u64) -> CmdResult {
    let panel = read_panel_path(&args.input)?;
    let world = read_world_prices_path(&args.world_prices)?;
    if world.product_ids.len() != panel.n_products()
        || world
            .product_ids
            .iter()
            .any(|id| panel.product_index(id).is_none())
    {
        return Err(CmdError::input(
            "world-price products do not match the panel".to_string(),
        ));
    }
    // Align to panel order.
    let world = WorldPriceVector {
        operator_tag: world.operator_tag,
        product_ids: panel.product_ids().to_vec(),
        prices: panel
            .product_ids()
            .iter()
            .map(|id| {
                let k = world.product_ids.iter().position(|p| p == id).unwrap();
                world.prices[k]
            })
            .collect(),
    };
    let report = diagnostics::report(&panel, &world)?;
    let command = json!({
        "subcommand": "diagnose",
        "input": args.input.display().to_string(),
        "world_prices": args.world_prices.display().to_string(),
        "output": args.output.display().to_string(),
    });
    let manifest = RunManifest::new(command, seed, &[&args.input, &args.world_prices])?;
    let out = json!({ "manifest": to_json(&manifest), "diagnostics": to_json(&report) });
    write_json(&args.output, &out)?;
    match report.ovr {
        Some(rate) => println!("ovr {rate:.2}  cdr {:.2}  dominant pairs {}", report.cdr, report.dominant_pair_count),
        None => println!("ovr undefined (no dominant pairs)  cdr {:.2}", report.cdr),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// select

pub struct SelectArgs {
    pub input: PathBuf,
    pub ovr_max: Option<f64>,
    pub rms_max: Option<f64>,
    pub output: PathBuf,
}

pub fn cmd_select(args: &SelectArgs, seed: u64) -> CmdResult {
    let panel = read_panel_path(&args.input)?;
    let defaults = SelectionThresholds::default();
    let thresholds = SelectionThresholds {
        ovr_max: args.ovr_max.unwrap_or(defaults.ovr_max),
        rms_max: args.rms_max.unwrap_or(defaults.rms_max),
    };
    let rationale = select_operator(&panel, thresholds)?;
    let command = json!({
        "subcommand": "select",
        "input": args.input.display().to_string(),
        "ovr_max": thresholds.ovr_max,
        "rms_max": thresholds.rms_max,
        "output": args.output.display().to_string(),
    });
    let manifest = RunManifest::new(command, seed, &[&args.input])?;
    let out = json!({ "manifest": to_json(&manifest), "selection": to_json(&rationale) });
    write_json(&args.output, &out)?;
    println!(
        "recommendation: {:?} ({})",
        rationale.recommendation, rationale.rule_fired
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate & sweep share scenario resolution

pub struct ScenarioArgs {
    pub kind: Option<String>,
    pub config: Option<PathBuf>,
    pub preset: Option<String>,
    pub eta: Option<f64>,
    pub gamma: Option<f64>,
    pub rho_mask: Option<f64>,
    pub n_products: Option<usize>,
    pub n_campuses: Option<usize>,
    pub mix_skew: Option<f64>,
}

struct ResolvedScenario {
    config: ScenarioConfig,
    echo: Value,
}

fn resolve_scenario(args: &ScenarioArgs, seed: u64) -> Result<ResolvedScenario, CmdError> {
    let file = match &args.config {
        Some(path) => FlatConfig::load(path).map_err(CmdError::input)?,
        None => FlatConfig::default(),
    };
    let get_f64 = |flag: Option<f64>, key: &str| -> Result<Option<f64>, CmdError> {
        Ok(match flag {
            Some(v) => Some(v),
            None => file.get::<f64>(key).map_err(CmdError::input)?,
        })
    };
    let get_usize = |flag: Option<usize>, key: &str| -> Result<Option<usize>, CmdError> {
        Ok(match flag {
            Some(v) => Some(v),
            None => file.get::<usize>(key).map_err(CmdError::input)?,
        })
    };
    let kind = args
        .kind
        .clone()
        .or_else(|| file.get_str("kind"))
        .ok_or_else(|| CmdError::input("missing scenario kind (flag --kind or config key kind)"))?;
    let seed = match file.get::<u64>("seed").map_err(CmdError::input)? {
        // A --seed flag always wins; the config file is the fallback.
        Some(file_seed) if seed == 0 => file_seed,
        _ => seed,
    };
    let preset = args.preset.clone().or_else(|| file.get_str("preset"));
    let eta = get_f64(args.eta, "eta")?;
    let gamma = get_f64(args.gamma, "gamma")?;
    let rho_mask = get_f64(args.rho_mask, "rho_mask")?;
    let mix_skew = get_f64(args.mix_skew, "mix_skew")?;
    let n_products = get_usize(args.n_products, "n_products")?;
    let n_campuses = get_usize(args.n_campuses, "n_campuses")?;

    let scenario = match kind.as_str() {
        "minimal-simpson" => Scenario::MinimalSimpson,
        "aidc" | "aidc-opex" => Scenario::AiDcOpex,
        "dominance" => {
            let (def_i, def_j, mut params) = match preset.as_deref() {
                None | Some("scenario_a") => (3, 4, scenario_a()),
                Some("scenario_b") => (5, 8, scenario_b()),
                Some(other) => {
                    return Err(CmdError::input(format!("unknown preset {other}")));
                }
            };
            if let Some(skew) = mix_skew {
                params.mix_skew = skew;
            }
            Scenario::DominanceScenario {
                n_products: n_products.unwrap_or(def_i),
                n_campuses: n_campuses.unwrap_or(def_j),
                params,
            }
        }
        "mix-extremity" => Scenario::MixExtremity {
            eta: eta.unwrap_or(0.5),
            params: MixExtremityParams::default(),
        },
        "interaction" => {
            let mut params = InteractionParams::default();
            if let Some(v) = n_products {
                params.n_products = v;
            }
            if let Some(v) = n_campuses {
                params.n_campuses = v;
            }
            if let Some(v) = mix_skew {
                params.mix_skew = v;
            }
            Scenario::InteractionStress {
                gamma: gamma.unwrap_or(0.0),
                params,
            }
        }
        "sparsity" => {
            let mut params = InteractionParams::default();
            if let Some(v) = n_products {
                params.n_products = v;
            }
            if let Some(v) = n_campuses {
                params.n_campuses = v;
            }
            if let Some(v) = mix_skew {
                params.mix_skew = v;
            }
            Scenario::SparsityStress {
                rho_mask: rho_mask.unwrap_or(0.0),
                gamma: gamma.unwrap_or(0.3),
                params,
            }
        }
        other => return Err(CmdError::input(format!("unknown scenario kind {other}"))),
    };
    let config = ScenarioConfig { seed, scenario };
    let echo = to_json(&config);
    Ok(ResolvedScenario { config, echo })
}

pub struct SimulateArgs {
    pub scenario: ScenarioArgs,
    pub output_dir: PathBuf,
}

pub fn cmd_simulate(args: &SimulateArgs, seed: u64) -> CmdResult {
    let resolved = resolve_scenario(&args.scenario, seed)?;
    let panel = resolved.config.generate()?;
    std::fs::create_dir_all(&args.output_dir)?;

    let command = json!({
        "subcommand": "simulate",
        "scenario": resolved.echo,
        "output_dir": args.output_dir.display().to_string(),
    });
    let manifest = RunManifest::new(command, resolved.config.seed, &[])?;

    let panel_path = args.output_dir.join("panel.csv");
    write_csv_with(&panel_path, |buf| write_panel_csv(&panel, buf))?;

    let dominance = dominance_pairs(&panel);
    let summary = json!({
        "manifest": to_json(&manifest),
        "n_products": panel.n_products(),
        "n_campuses": panel.n_campuses(),
        "system_cost": panel.system_cost(),
        "product_totals": panel
            .product_ids()
            .iter()
            .zip(panel.product_totals())
            .map(|(id, q)| json!({ "product_id": id, "total_quantity": q }))
            .collect::<Vec<_>>(),
        "dominant_pair_count": dominance.pairs.len(),
        "missing_cells": panel.missing_cells().len(),
    });
    write_json(&args.output_dir.join("summary.json"), &summary)?;
    println!(
        "wrote {} ({} products x {} campuses, C = {:.2})",
        panel_path.display(),
        panel.n_products(),
        panel.n_campuses(),
        panel.system_cost()
    );
    Ok(())
}

pub struct SweepArgs {
    pub scenario: ScenarioArgs,
    pub grid: String,
    pub replicates: usize,
    pub output_dir: PathBuf,
}

/// Grid specs: either a comma list `0,0.1,0.2` or `start:stop:step`
/// (inclusive of the endpoint to half-step tolerance).
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CmdError> {
    let parse = |s: &str| -> Result<f64, CmdError> {
        s.trim()
            .parse()
            .map_err(|e| CmdError::input(format!("grid value {s:?}: {e}")))
    };
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(CmdError::input("grid range must be start:stop:step"));
        }
        let (start, stop, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if !(step > 0.0) || stop < start {
            return Err(CmdError::input("grid range must ascend with step > 0"));
        }
        let n = ((stop - start) / step + 0.5).floor() as usize;
        Ok((0..=n).map(|k| start + step * k as f64).collect())
    } else {
        spec.split(',').map(parse).collect()
    }
}

pub fn cmd_sweep(args: &SweepArgs, seed: u64) -> CmdResult {
    let resolved = resolve_scenario(&args.scenario, seed)?;
    let grid = parse_grid(&args.grid)?;
    let report = run_sweep(&resolved.config, &grid, args.replicates)?;
    std::fs::create_dir_all(&args.output_dir)?;

    let command = json!({
        "subcommand": "sweep",
        "scenario": resolved.echo,
        "grid": grid.iter().map(|g| fmt_full(*g)).collect::<Vec<_>>(),
        "replicates": args.replicates,
        "output_dir": args.output_dir.display().to_string(),
    });
    let manifest = RunManifest::new(command, resolved.config.seed, &[])?;

    write_csv_with(&args.output_dir.join("sweep.csv"), |buf| {
        report.write_csv(buf)
    })?;
    let out = json!({ "manifest": to_json(&manifest), "report": to_json(&report) });
    write_json(&args.output_dir.join("sweep.json"), &out)?;
    println!(
        "swept {} points x {} replicates into {}",
        grid.len(),
        args.replicates,
        args.output_dir.display()
    );
    Ok(())
}
