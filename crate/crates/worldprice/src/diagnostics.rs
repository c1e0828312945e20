//! Ranking and cost diagnostics: dominance structure, order-violation rate,
//! cost-distortion ratio, ranking gaps, additive-fit residual, and imputation
//! error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fe::FeFit;
use crate::operators::WorldPriceVector;
use crate::panel::PricePanel;

/// Ties at the world level are not violations; a reversal must exceed this.
const REVERSAL_TOL: f64 = 1e-12;

/// Which cells dominance was decided on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DominanceEvaluation {
    /// Campuses where both products are observed.
    ObservedCellsCommon,
    CompleteMatrix,
}

/// One campuswise-dominant product pair, canonically ordered i < k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DominancePair {
    pub i: usize,
    pub k: usize,
    /// Index (i or k) of the weakly-cheaper product.
    pub cheaper: usize,
}

/// All dominant pairs of a panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceSet {
    pub pairs: Vec<DominancePair>,
    pub evaluated_on: DominanceEvaluation,
    /// Pairs sharing no observed campus; excluded from numerator and
    /// denominator alike.
    pub no_common_campus_pairs: usize,
}

/// Scan all unordered product pairs for campuswise dominance.
///
/// Dominance is decided on campuses where both products are observed: weakly
/// cheaper everywhere, strictly cheaper somewhere. Identical price rows give
/// no pair.
pub fn dominance_pairs(panel: &PricePanel) -> DominanceSet {
    let (ni, nj) = (panel.n_products(), panel.n_campuses());
    let mut pairs = Vec::new();
    let mut no_common = 0usize;
    for i in 0..ni {
        for k in i + 1..ni {
            let mut any_common = false;
            let mut i_le = true;
            let mut k_le = true;
            let mut i_lt = false;
            let mut k_lt = false;
            for j in 0..nj {
                let (Some(pi), Some(pk)) = (panel.price(i, j), panel.price(k, j)) else {
                    continue;
                };
                any_common = true;
                if pi > pk {
                    i_le = false;
                    k_lt = true;
                }
                if pk > pi {
                    k_le = false;
                    i_lt = true;
                }
            }
            if !any_common {
                no_common += 1;
                continue;
            }
            if i_le && i_lt {
                pairs.push(DominancePair { i, k, cheaper: i });
            } else if k_le && k_lt {
                pairs.push(DominancePair { i, k, cheaper: k });
            }
        }
    }
    DominanceSet {
        pairs,
        evaluated_on: if panel.is_complete() {
            DominanceEvaluation::CompleteMatrix
        } else {
            DominanceEvaluation::ObservedCellsCommon
        },
        no_common_campus_pairs: no_common,
    }
}

/// A dominant pair whose blended prices reverse the local ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub cheaper_product: String,
    pub pricier_product: String,
    pub cheaper_world_price: f64,
    pub pricier_world_price: f64,
}

/// Violating pairs of `world` against a dominance set.
pub fn violations(dominance: &DominanceSet, world: &WorldPriceVector) -> Vec<Violation> {
    let mut out = Vec::new();
    for pair in &dominance.pairs {
        let other = if pair.cheaper == pair.i { pair.k } else { pair.i };
        let p_cheap = world.prices[pair.cheaper];
        let p_other = world.prices[other];
        if p_cheap > p_other + REVERSAL_TOL {
            out.push(Violation {
                cheaper_product: world.product_ids[pair.cheaper].clone(),
                pricier_product: world.product_ids[other].clone(),
                cheaper_world_price: p_cheap,
                pricier_world_price: p_other,
            });
        }
    }
    out
}

/// Order-violation rate: violating pairs over dominant pairs.
///
/// `None` when the panel has no dominant pairs (the rate is undefined, never
/// reported as zero).
pub fn ovr(dominance: &DominanceSet, world: &WorldPriceVector) -> Option<f64> {
    if dominance.pairs.is_empty() {
        return None;
    }
    Some(violations(dominance, world).len() as f64 / dominance.pairs.len() as f64)
}

/// Cost-distortion ratio |Σ p̄_i Q_i − C| / C.
pub fn cdr(panel: &PricePanel, world: &WorldPriceVector) -> Result<f64> {
    let cost = panel.system_cost();
    if cost <= 0.0 {
        return Err(Error::ZeroSystemCost);
    }
    let blended = world.blended_cost(&panel.product_totals());
    Ok((blended - cost).abs() / cost)
}

/// Signed world-price difference p̄_a − p̄_b; positive ranks `a` pricier.
pub fn ranking_gap(world: &WorldPriceVector, a: &str, b: &str) -> Result<f64> {
    let pos = |id: &str| {
        world
            .product_ids
            .iter()
            .position(|p| p == id)
            .ok_or_else(|| Error::UnknownProduct {
                product: id.to_string(),
            })
    };
    Ok(world.prices[pos(a)?] - world.prices[pos(b)?])
}

/// RMS residual of the best unweighted additive two-way fit in levels.
///
/// On a complete matrix the unweighted fit is closed-form: fitted values are
/// row mean + column mean − grand mean.
pub fn additive_rms(panel: &PricePanel) -> Result<f64> {
    if !panel.is_complete() {
        return Err(Error::IncompletePanel {
            missing: panel.missing_cells().len(),
        });
    }
    let (ni, nj) = (panel.n_products(), panel.n_campuses());
    let p = |i: usize, j: usize| panel.price(i, j).unwrap();
    let row_means: Vec<f64> = (0..ni)
        .map(|i| (0..nj).map(|j| p(i, j)).sum::<f64>() / nj as f64)
        .collect();
    let col_means: Vec<f64> = (0..nj)
        .map(|j| (0..ni).map(|i| p(i, j)).sum::<f64>() / ni as f64)
        .collect();
    let grand = row_means.iter().sum::<f64>() / ni as f64;
    let mut ss = 0.0;
    for i in 0..ni {
        for j in 0..nj {
            let e = p(i, j) - row_means[i] - col_means[j] + grand;
            ss += e * e;
        }
    }
    Ok((ss / (ni * nj) as f64).sqrt())
}

/// RMSE of the additive imputations against the true (pre-masking) prices,
/// evaluated on masked cells only.
pub fn imputation_rmse(truth: &PricePanel, fit: &FeFit) -> Result<f64> {
    if fit.imputed_cells.is_empty() {
        return Err(Error::NoMaskedCells);
    }
    let nj = truth.n_campuses();
    let mut ss = 0.0;
    for &(i, j) in &fit.imputed_cells {
        let true_price = truth.price(i, j).ok_or(Error::IncompletePanel {
            missing: truth.missing_cells().len(),
        })?;
        let e = fit.imputed_price(i, j, nj) - true_price;
        ss += e * e;
    }
    Ok((ss / fit.imputed_cells.len() as f64).sqrt())
}

/// Serializable bundle of diagnostics with fixed field names.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    /// `None` serializes as null when no dominant pairs exist.
    pub ovr: Option<f64>,
    pub cdr: f64,
    pub dominant_pair_count: usize,
    pub violations: Vec<Violation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ranking_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub additive_rms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub imputation_rmse: Option<f64>,
}

/// Evaluate OVR, CDR, and the violation list for one world-price vector.
pub fn report(panel: &PricePanel, world: &WorldPriceVector) -> Result<DiagnosticsReport> {
    let dominance = dominance_pairs(panel);
    Ok(DiagnosticsReport {
        ovr: ovr(&dominance, world),
        cdr: cdr(panel, world)?,
        dominant_pair_count: dominance.pairs.len(),
        violations: violations(&dominance, world),
        ranking_gap: None,
        additive_rms: None,
        imputation_rmse: None,
    })
}
