//! Stress-sweep harness: runs a scenario family over a parameter grid with
//! seeded replicates and aggregates per-operator diagnostics.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::convex::{convex_world_prices, solve_convex_weights, FallbackPolicy};
use crate::diagnostics::{additive_rms, dominance_pairs, imputation_rmse, ovr};
use crate::error::{Error, Result};
use crate::fe::{complete_with_fit, fe_world_prices, fit_two_way_fe};
use crate::operators::{naive_blend, WorldPriceVector};
use crate::panel::{aggregates, PricePanel};
use crate::scenarios::{
    apply_sparsity_mask, gen_interaction, gen_mix_extremity, sub_seed, Scenario, ScenarioConfig,
};

/// One value per aggregation operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerOperator<T> {
    pub naive: T,
    pub fe: T,
    pub convex: T,
}

impl<T> PerOperator<T> {
    pub fn as_pairs(&self) -> [(&'static str, &T); 3] {
        [
            ("naive", &self.naive),
            ("fe", &self.fe),
            ("convex", &self.convex),
        ]
    }
}

/// Replicate-averaged diagnostics at one grid value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// The swept parameter (η, γ, or masking probability).
    pub value: f64,
    /// Mean world-price gap between the designated pricey and cheap products.
    pub ranking_gap: PerOperator<f64>,
    /// Mean order-violation rate over replicates where it is defined.
    pub ovr: PerOperator<Option<f64>>,
    /// Share of replicates whose gap sign disagrees with the full-information
    /// oracle (sparsity sweeps only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reversal_rate: Option<PerOperator<f64>>,
    /// Mean |Δ − Δ*| against the oracle gap (sparsity sweeps only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mae_vs_oracle: Option<PerOperator<f64>>,
    /// Mean additive-fit residual of the generated panels (interaction
    /// sweeps only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub additive_rms: Option<f64>,
    /// Mean masked-cell imputation RMSE; zero when nothing was masked
    /// (sparsity sweeps only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub imputation_rmse: Option<f64>,
}

/// Full result of a grid sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub grid: Vec<f64>,
    pub per_point: Vec<SweepPoint>,
    pub replicates: usize,
}

impl SweepReport {
    /// Tidy CSV: one row per (grid value, operator, metric). Panel-level
    /// metrics carry operator `panel`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["grid_value", "operator", "metric", "value"])?;
        let full = crate::io::fmt_full;
        for point in &self.per_point {
            let gv = full(point.value);
            for (op, gap) in point.ranking_gap.as_pairs() {
                w.write_record([gv.as_str(), op, "ranking_gap", &full(*gap)])?;
            }
            for (op, rate) in point.ovr.as_pairs() {
                if let Some(rate) = rate {
                    w.write_record([gv.as_str(), op, "ovr", &full(*rate)])?;
                }
            }
            if let Some(rates) = &point.reversal_rate {
                for (op, rate) in rates.as_pairs() {
                    w.write_record([gv.as_str(), op, "reversal_rate", &full(*rate)])?;
                }
            }
            if let Some(maes) = &point.mae_vs_oracle {
                for (op, mae) in maes.as_pairs() {
                    w.write_record([gv.as_str(), op, "mae_vs_oracle", &full(*mae)])?;
                }
            }
            if let Some(rms) = point.additive_rms {
                w.write_record([gv.as_str(), "panel", "additive_rms", &full(rms)])?;
            }
            if let Some(rmse) = point.imputation_rmse {
                w.write_record([gv.as_str(), "panel", "imputation_rmse", &full(rmse)])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Designated product pair for gap tracking: first (priciest by construction)
/// minus last (cheapest).
fn designated_gap(world: &WorldPriceVector) -> f64 {
    world.prices[0] - world.prices[world.prices.len() - 1]
}

/// Common-weight world prices of a complete panel: baseline = global quantity
/// shares, cost target = the panel's own cost unless overridden.
fn convex_blend(
    panel: &PricePanel,
    cost_override: Option<f64>,
    policy: FallbackPolicy,
) -> Result<WorldPriceVector> {
    let agg = aggregates(panel);
    let exposure = agg.exposure.ok_or(Error::IncompletePanel {
        missing: panel.missing_cells().len(),
    })?;
    let cost = cost_override.unwrap_or(agg.system_cost);
    let solution = solve_convex_weights(&agg.global_quantity_shares, &exposure, cost, policy)?;
    convex_world_prices(&solution, panel)
}

struct Accumulator {
    gap: PerOperator<f64>,
    ovr_sum: PerOperator<f64>,
    ovr_n: PerOperator<usize>,
    reversals: PerOperator<f64>,
    mae: PerOperator<f64>,
    additive_rms: f64,
    imputation_rmse: f64,
    n: usize,
}

impl Accumulator {
    fn new() -> Self {
        let zero = PerOperator {
            naive: 0.0,
            fe: 0.0,
            convex: 0.0,
        };
        Accumulator {
            gap: zero,
            ovr_sum: zero,
            ovr_n: PerOperator {
                naive: 0,
                fe: 0,
                convex: 0,
            },
            reversals: zero,
            mae: zero,
            additive_rms: 0.0,
            imputation_rmse: 0.0,
            n: 0,
        }
    }

    fn add_worlds(
        &mut self,
        panel: &PricePanel,
        naive: &WorldPriceVector,
        fe: &WorldPriceVector,
        convex: &WorldPriceVector,
    ) {
        let dominance = dominance_pairs(panel);
        for (world, gap, ovr_sum, ovr_n) in [
            (naive, &mut self.gap.naive, &mut self.ovr_sum.naive, &mut self.ovr_n.naive),
            (fe, &mut self.gap.fe, &mut self.ovr_sum.fe, &mut self.ovr_n.fe),
            (convex, &mut self.gap.convex, &mut self.ovr_sum.convex, &mut self.ovr_n.convex),
        ] {
            *gap += designated_gap(world);
            if let Some(rate) = ovr(&dominance, world) {
                *ovr_sum += rate;
                *ovr_n += 1;
            }
        }
        self.n += 1;
    }

    fn add_oracle_comparison(
        &mut self,
        oracle_gap: f64,
        naive: &WorldPriceVector,
        fe: &WorldPriceVector,
        convex: &WorldPriceVector,
    ) {
        for (world, rev, mae) in [
            (naive, &mut self.reversals.naive, &mut self.mae.naive),
            (fe, &mut self.reversals.fe, &mut self.mae.fe),
            (convex, &mut self.reversals.convex, &mut self.mae.convex),
        ] {
            let gap = designated_gap(world);
            if gap * oracle_gap < 0.0 {
                *rev += 1.0;
            }
            *mae += (gap - oracle_gap).abs();
        }
    }

    fn finish(self, value: f64, with_oracle: bool, with_rms: bool, with_rmse: bool) -> SweepPoint {
        let n = self.n as f64;
        let mean = |s: PerOperator<f64>| PerOperator {
            naive: s.naive / n,
            fe: s.fe / n,
            convex: s.convex / n,
        };
        let ovr_mean = PerOperator {
            naive: (self.ovr_n.naive > 0).then(|| self.ovr_sum.naive / self.ovr_n.naive as f64),
            fe: (self.ovr_n.fe > 0).then(|| self.ovr_sum.fe / self.ovr_n.fe as f64),
            convex: (self.ovr_n.convex > 0).then(|| self.ovr_sum.convex / self.ovr_n.convex as f64),
        };
        SweepPoint {
            value,
            ranking_gap: mean(self.gap),
            ovr: ovr_mean,
            reversal_rate: with_oracle.then(|| mean(self.reversals)),
            mae_vs_oracle: with_oracle.then(|| mean(self.mae)),
            additive_rms: with_rms.then(|| self.additive_rms / n),
            imputation_rmse: with_rmse.then(|| self.imputation_rmse / n),
        }
    }
}

/// Sweep `config`'s scenario parameter over `grid`, averaging `replicates`
/// seeded replicates per point.
pub fn run_sweep(config: &ScenarioConfig, grid: &[f64], replicates: usize) -> Result<SweepReport> {
    if grid.is_empty() {
        return Err(Error::BadParams("sweep grid must be nonempty".into()));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::BadParams(
            "sweep grid must be strictly increasing".into(),
        ));
    }
    if replicates == 0 {
        return Err(Error::BadParams("replicates must be >= 1".into()));
    }
    let mut per_point = Vec::with_capacity(grid.len());
    for &value in grid {
        let mut acc = Accumulator::new();
        match &config.scenario {
            Scenario::MixExtremity { params, .. } => {
                // The generator is deterministic; replicates are redundant
                // but kept so report shapes match the other sweeps.
                let panel = gen_mix_extremity(value, params)?;
                let naive = naive_blend(&panel);
                let fit = fit_two_way_fe(&panel)?;
                let fe = fe_world_prices(&fit, &panel);
                let convex = convex_blend(&panel, None, FallbackPolicy::Error)?;
                for _ in 0..replicates {
                    acc.add_worlds(&panel, &naive, &fe, &convex);
                }
                per_point.push(acc.finish(value, false, false, false));
            }
            Scenario::InteractionStress { params, .. } => {
                for r in 0..replicates {
                    let panel =
                        gen_interaction(value, sub_seed(config.seed, r as u64), params)?;
                    let naive = naive_blend(&panel);
                    let fit = fit_two_way_fe(&panel)?;
                    let fe = fe_world_prices(&fit, &panel);
                    // Interaction panels are not product-separable, so the
                    // cost can land just outside the exposure hull; clip to
                    // the boundary rather than fail the replicate.
                    let convex = convex_blend(&panel, None, FallbackPolicy::Boundary)?;
                    acc.additive_rms += additive_rms(&panel)?;
                    acc.add_worlds(&panel, &naive, &fe, &convex);
                }
                per_point.push(acc.finish(value, false, true, false));
            }
            Scenario::SparsityStress { gamma, params, .. } => {
                for r in 0..replicates {
                    let seed_r = sub_seed(config.seed, r as u64);
                    let full = gen_interaction(*gamma, sub_seed(seed_r, 0), params)?;
                    let oracle = convex_blend(&full, None, FallbackPolicy::Boundary)?;
                    let masked = apply_sparsity_mask(&full, value, sub_seed(seed_r, 1))?;
                    let naive = naive_blend(&masked.panel);
                    let fit = fit_two_way_fe(&masked.panel)?;
                    let fe = fe_world_prices(&fit, &masked.panel);
                    // Common weights need a complete matrix: impute the holes,
                    // keep the pre-mask cost as the accounting target.
                    let completed = complete_with_fit(&masked.panel, &fit);
                    let convex = convex_blend(
                        &completed,
                        Some(masked.accounting_cost),
                        FallbackPolicy::Boundary,
                    )?;
                    acc.imputation_rmse += if masked.masked_cells.is_empty() {
                        0.0
                    } else {
                        imputation_rmse(&full, &fit)?
                    };
                    acc.add_worlds(&masked.panel, &naive, &fe, &convex);
                    acc.add_oracle_comparison(designated_gap(&oracle), &naive, &fe, &convex);
                }
                per_point.push(acc.finish(value, true, false, true));
            }
            other => {
                return Err(Error::BadParams(format!(
                    "no sweep is defined for scenario kind {:?}",
                    other.kind()
                )));
            }
        }
    }
    Ok(SweepReport {
        grid: grid.to_vec(),
        per_point,
        replicates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{InteractionParams, MixExtremityParams};

    fn mix_config() -> ScenarioConfig {
        ScenarioConfig {
            seed: 0,
            scenario: Scenario::MixExtremity {
                eta: 0.0,
                params: MixExtremityParams::default(),
            },
        }
    }

    #[test]
    fn rejects_bad_grids_and_replicates() {
        let cfg = mix_config();
        assert!(matches!(
            run_sweep(&cfg, &[], 1),
            Err(Error::BadParams(_))
        ));
        assert!(matches!(
            run_sweep(&cfg, &[0.2, 0.2], 1),
            Err(Error::BadParams(_))
        ));
        assert!(matches!(
            run_sweep(&cfg, &[0.0, 0.5], 0),
            Err(Error::BadParams(_))
        ));
        let bad = ScenarioConfig {
            seed: 0,
            scenario: Scenario::MinimalSimpson,
        };
        assert!(matches!(
            run_sweep(&bad, &[0.0, 1.0], 1),
            Err(Error::BadParams(_))
        ));
    }

    #[test]
    fn mix_extremity_gap_is_linear_in_eta() {
        let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
        let report = run_sweep(&mix_config(), &grid, 1).unwrap();
        assert_eq!(report.per_point.len(), 5);
        for (point, eta) in report.per_point.iter().zip(grid) {
            assert!((point.ranking_gap.naive - (12.0 * eta - 7.0)).abs() < 1e-9);
            assert!((point.ranking_gap.fe + 1.0).abs() < 1e-6);
            assert!((point.ranking_gap.convex + 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn interaction_sweep_reports_additive_rms() {
        let cfg = ScenarioConfig {
            seed: 5,
            scenario: Scenario::InteractionStress {
                gamma: 0.0,
                params: InteractionParams::default(),
            },
        };
        let report = run_sweep(&cfg, &[0.0, 0.25, 0.5], 3).unwrap();
        let rms: Vec<f64> = report
            .per_point
            .iter()
            .map(|p| p.additive_rms.unwrap())
            .collect();
        assert!(rms[0] <= rms[1] && rms[1] <= rms[2]);
    }

    #[test]
    fn sparsity_sweep_matches_oracle_at_zero_mask() {
        let cfg = ScenarioConfig {
            seed: 9,
            scenario: Scenario::SparsityStress {
                rho_mask: 0.0,
                gamma: 0.3,
                params: InteractionParams::default(),
            },
        };
        let report = run_sweep(&cfg, &[0.0, 0.5], 4).unwrap();
        let p0 = &report.per_point[0];
        assert!(p0.mae_vs_oracle.as_ref().unwrap().convex <= 1e-10);
        assert_eq!(p0.reversal_rate.as_ref().unwrap().convex, 0.0);
        assert_eq!(p0.imputation_rmse.unwrap(), 0.0);
        let p1 = &report.per_point[1];
        assert!(p1.imputation_rmse.unwrap() > 0.0);
    }

    #[test]
    fn csv_has_one_row_per_point_operator_metric() {
        let report = run_sweep(&mix_config(), &[0.0, 1.0], 1).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "grid_value,operator,metric,value");
        // 2 grid points × 3 operators × 2 metrics (gap, ovr).
        assert_eq!(lines.len(), 1 + 12);
    }

    #[test]
    fn sweep_is_deterministic() {
        let cfg = ScenarioConfig {
            seed: 3,
            scenario: Scenario::InteractionStress {
                gamma: 0.0,
                params: InteractionParams::default(),
            },
        };
        let a = run_sweep(&cfg, &[0.0, 0.3], 2).unwrap();
        let b = run_sweep(&cfg, &[0.0, 0.3], 2).unwrap();
        assert_eq!(a, b);
    }
}
