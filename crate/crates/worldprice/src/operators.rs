//! Blended-price operator core: the world-price vector type, the naive
//! deployment-weighted blend, and the FE-first operator selection rule.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{dominance_pairs, ovr};
use crate::error::Result;
use crate::fe::{fe_world_prices, fit_two_way_fe};
use crate::panel::PricePanel;

/// Which operator produced a world-price vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorTag {
    Naive,
    FixedEffects,
    ConvexWeights,
    ConvexSlack,
    ConvexBoundary,
}

impl OperatorTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            OperatorTag::Naive => "naive",
            OperatorTag::FixedEffects => "fe",
            OperatorTag::ConvexWeights => "convex",
            OperatorTag::ConvexSlack => "convex_slack",
            OperatorTag::ConvexBoundary => "convex_boundary",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "naive" => Some(OperatorTag::Naive),
            "fe" => Some(OperatorTag::FixedEffects),
            "convex" => Some(OperatorTag::ConvexWeights),
            "convex_slack" => Some(OperatorTag::ConvexSlack),
            "convex_boundary" => Some(OperatorTag::ConvexBoundary),
            _ => None,
        }
    }
}

/// One blended price per product, aligned with the panel's product order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldPriceVector {
    pub operator_tag: OperatorTag,
    pub product_ids: Vec<String>,
    pub prices: Vec<f64>,
}

impl WorldPriceVector {
    /// Blended system cost Σ p̄_i Q_i.
    pub fn blended_cost(&self, product_totals: &[f64]) -> f64 {
        self.prices
            .iter()
            .zip(product_totals)
            .map(|(p, q)| p * q)
            .sum()
    }
}

/// Naive deployment-weighted blend: p̄_i = Σ_j π_ij p_ij with π_ij = q_ij / Q_i
/// over observed cells. Exactly cost-preserving by the accounting identity.
pub fn naive_blend(panel: &PricePanel) -> WorldPriceVector {
    let totals = panel.product_totals();
    let prices = (0..panel.n_products())
        .map(|i| {
            (0..panel.n_campuses())
                .filter_map(|j| panel.price(i, j).map(|p| panel.quantity(i, j) * p))
                .sum::<f64>()
                / totals[i]
        })
        .collect();
    WorldPriceVector {
        operator_tag: OperatorTag::Naive,
        product_ids: panel.product_ids().to_vec(),
        prices,
    }
}

/// Outcome of the FE-first, convex-guardrail selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Recommendation {
    FixedEffects,
    ConvexWeights,
}

/// Gate thresholds for [`select_operator`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SelectionThresholds {
    /// Maximum tolerated order-violation rate of the FE world prices.
    pub ovr_max: f64,
    /// Maximum tolerated quantity-weighted RMS residual of the FE fit.
    pub rms_max: f64,
}

impl Default for SelectionThresholds {
    fn default() -> Self {
        // FE is kept while the additive fit explains prices to within 5% of
        // the quantity-weighted mean price and produces no reversals.
        Self {
            ovr_max: 0.0,
            rms_max: 0.05,
        }
    }
}

/// Diagnostics recorded while selecting an operator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionRationale {
    pub recommendation: Recommendation,
    /// Step 0: naive baseline cost identity |Σ p̄ Q − C| / max(1, C).
    pub naive_cost_gap: f64,
    pub naive_ovr: Option<f64>,
    /// Step 1: FE additive-fit residual, relative to the weighted mean price.
    pub fe_rms_residual: f64,
    pub fe_rms_relative: f64,
    /// Step 2: reversal rate of the FE world prices.
    pub fe_ovr: Option<f64>,
    pub thresholds: SelectionThresholds,
    /// Which gate fired ("fe_gates_passed", "rms_above_threshold",
    /// "ovr_above_threshold").
    pub rule_fired: String,
}

/// FE-first, convex-guardrail operator selection.
///
/// Fits the two-way FE model, checks the additive-fit residual against
/// `rms_max` (relative to the weighted mean price) and the FE order-violation
/// rate against `ovr_max`; recommends FE when both gates pass, otherwise the
/// convex common-weight operator.
pub fn select_operator(
    panel: &PricePanel,
    thresholds: SelectionThresholds,
) -> Result<SelectionRationale> {
    let naive = naive_blend(panel);
    let totals = panel.product_totals();
    let cost = panel.system_cost();
    let naive_cost_gap = (naive.blended_cost(&totals) - cost).abs() / cost.max(1.0);

    let dominance = dominance_pairs(panel);
    let naive_ovr = ovr(&dominance, &naive);

    let fit = fit_two_way_fe(panel)?;
    let fe = fe_world_prices(&fit, panel);
    let fe_ovr = ovr(&dominance, &fe);

    let grand_q: f64 = totals.iter().sum();
    let weighted_mean_price = cost / grand_q;
    let fe_rms_relative = if weighted_mean_price > 0.0 {
        fit.rms_residual / weighted_mean_price
    } else {
        fit.rms_residual
    };

    let rms_ok = fe_rms_relative <= thresholds.rms_max;
    let ovr_ok = fe_ovr.unwrap_or(0.0) <= thresholds.ovr_max;
    let (recommendation, rule_fired) = if rms_ok && ovr_ok {
        (Recommendation::FixedEffects, "fe_gates_passed")
    } else if !rms_ok {
        (Recommendation::ConvexWeights, "rms_above_threshold")
    } else {
        (Recommendation::ConvexWeights, "ovr_above_threshold")
    };

    Ok(SelectionRationale {
        recommendation,
        naive_cost_gap,
        naive_ovr,
        fe_rms_residual: fit.rms_residual,
        fe_rms_relative,
        fe_ovr,
        thresholds,
        rule_fired: rule_fired.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{build_panel, PanelRecord};
    use crate::testdata::minimal_simpson_panel;

    #[test]
    fn naive_blend_reproduces_the_simpson_reversal() {
        let panel = minimal_simpson_panel();
        let w = naive_blend(&panel);
        assert!((w.prices[0] - 9.4).abs() < 1e-12);
        assert!((w.prices[1] - 6.6).abs() < 1e-12);
    }

    #[test]
    fn single_campus_blend_equals_local_prices() {
        let recs = vec![
            PanelRecord::new("A", "E", 3.5, 2.0),
            PanelRecord::new("B", "E", 1.25, 7.0),
        ];
        let panel = build_panel(&recs).unwrap();
        let w = naive_blend(&panel);
        assert_eq!(w.prices, vec![3.5, 1.25]);
    }

    #[test]
    fn naive_matches_independent_double_loop() {
        // 3×2 panel checked against a direct Σ_j q_ij p_ij / Q_i evaluation.
        let recs = vec![
            PanelRecord::new("A", "X", 2.0, 3.0),
            PanelRecord::new("A", "Y", 5.0, 1.0),
            PanelRecord::new("B", "X", 7.0, 2.0),
            PanelRecord::new("B", "Y", 1.0, 2.0),
            PanelRecord::new("C", "X", 4.5, 9.0),
            PanelRecord::new("C", "Y", 0.5, 1.0),
        ];
        let panel = build_panel(&recs).unwrap();
        let w = naive_blend(&panel);
        let expected = [
            (3.0 * 2.0 + 1.0 * 5.0) / 4.0,
            (2.0 * 7.0 + 2.0 * 1.0) / 4.0,
            (9.0 * 4.5 + 1.0 * 0.5) / 10.0,
        ];
        for (got, want) in w.prices.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn infinite_thresholds_always_select_fe() {
        let panel = minimal_simpson_panel();
        let rationale = select_operator(
            &panel,
            SelectionThresholds {
                ovr_max: f64::INFINITY,
                rms_max: f64::INFINITY,
            },
        )
        .unwrap();
        assert_eq!(rationale.recommendation, Recommendation::FixedEffects);
    }

    #[test]
    fn additive_panel_passes_both_gates() {
        let panel = minimal_simpson_panel();
        let rationale = select_operator(&panel, SelectionThresholds::default()).unwrap();
        assert_eq!(rationale.recommendation, Recommendation::FixedEffects);
        assert_eq!(rationale.rule_fired, "fe_gates_passed");
        assert!(rationale.fe_rms_residual <= 1e-10);
        assert_eq!(rationale.fe_ovr, Some(0.0));
        assert_eq!(rationale.naive_ovr, Some(1.0));
    }
}
