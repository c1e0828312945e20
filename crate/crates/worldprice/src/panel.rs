//! Price/quantity panel: the product × campus data model every operator consumes.
//!
//! A panel holds one optional unit price and one quantity per (product, campus)
//! cell. Missing price cells model pairs that were never procured or recorded;
//! a missing cell always carries quantity zero. Panels are immutable after
//! construction and safe to share across threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One observed (product, campus, price, quantity) record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelRecord {
    pub product_id: String,
    pub campus_id: String,
    pub price: f64,
    pub quantity: f64,
}

impl PanelRecord {
    pub fn new(
        product_id: impl Into<String>,
        campus_id: impl Into<String>,
        price: f64,
        quantity: f64,
    ) -> Self {
        Self {
            product_id: product_id.into(),
            campus_id: campus_id.into(),
            price,
            quantity,
        }
    }
}

/// A validated product × campus price/quantity panel.
///
/// Identifiers are ordered by first appearance in the input records; all
/// vectors and grids use that fixed order, so downstream results are
/// deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    product_ids: Vec<String>,
    campus_ids: Vec<String>,
    /// Row-major I×J grid; `None` marks an unobserved cell.
    prices: Vec<Option<f64>>,
    /// Row-major I×J grid; missing price cells carry quantity zero.
    quantities: Vec<f64>,
}

/// Low-dimensional aggregates derived from a panel.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelAggregates {
    /// Total quantity per product, Q_i.
    pub product_totals: Vec<f64>,
    /// Realized system cost C = Σ p_ij q_ij over observed cells.
    pub system_cost: f64,
    /// Campus exposures Σ_i Q_i p_ij; `None` when the panel is incomplete.
    pub exposure: Option<Vec<f64>>,
    /// Campus share of total quantity; sums to 1.
    pub global_quantity_shares: Vec<f64>,
}

/// Build a validated panel from raw records.
///
/// Pairs absent from `records` become missing cells with zero quantity.
pub fn build_panel(records: &[PanelRecord]) -> Result<PricePanel> {
    if records.is_empty() {
        return Err(Error::EmptyPanel);
    }
    let mut product_ids: Vec<String> = Vec::new();
    let mut campus_ids: Vec<String> = Vec::new();
    for r in records {
        if !product_ids.contains(&r.product_id) {
            product_ids.push(r.product_id.clone());
        }
        if !campus_ids.contains(&r.campus_id) {
            campus_ids.push(r.campus_id.clone());
        }
    }
    let (n_products, n_campuses) = (product_ids.len(), campus_ids.len());
    let mut prices: Vec<Option<f64>> = vec![None; n_products * n_campuses];
    let mut quantities: Vec<f64> = vec![0.0; n_products * n_campuses];

    for r in records {
        if !r.price.is_finite() || r.price < 0.0 {
            return Err(Error::NegativeValue {
                product: r.product_id.clone(),
                campus: r.campus_id.clone(),
                value: r.price,
                what: "price",
            });
        }
        if !r.quantity.is_finite() || r.quantity < 0.0 {
            return Err(Error::NegativeValue {
                product: r.product_id.clone(),
                campus: r.campus_id.clone(),
                value: r.quantity,
                what: "quantity",
            });
        }
        let i = product_ids.iter().position(|p| *p == r.product_id).unwrap();
        let j = campus_ids.iter().position(|c| *c == r.campus_id).unwrap();
        let cell = i * n_campuses + j;
        if prices[cell].is_some() {
            return Err(Error::DuplicateCell {
                product: r.product_id.clone(),
                campus: r.campus_id.clone(),
            });
        }
        prices[cell] = Some(r.price);
        quantities[cell] = r.quantity;
    }

    let panel = PricePanel {
        product_ids,
        campus_ids,
        prices,
        quantities,
    };
    for (i, pid) in panel.product_ids.iter().enumerate() {
        let total: f64 = (0..panel.n_campuses()).map(|j| panel.quantity(i, j)).sum();
        if total <= 0.0 {
            return Err(Error::ZeroTotalQuantity {
                product: pid.clone(),
            });
        }
    }
    Ok(panel)
}

impl PricePanel {
    /// Number of products I.
    pub fn n_products(&self) -> usize {
        self.product_ids.len()
    }

    /// Number of campuses J.
    pub fn n_campuses(&self) -> usize {
        self.campus_ids.len()
    }

    pub fn product_ids(&self) -> &[String] {
        &self.product_ids
    }

    pub fn campus_ids(&self) -> &[String] {
        &self.campus_ids
    }

    pub fn product_index(&self, id: &str) -> Option<usize> {
        self.product_ids.iter().position(|p| p == id)
    }

    /// Observed price at (i, j), or `None` for a missing cell.
    pub fn price(&self, i: usize, j: usize) -> Option<f64> {
        self.prices[i * self.n_campuses() + j]
    }

    pub fn quantity(&self, i: usize, j: usize) -> f64 {
        self.quantities[i * self.n_campuses() + j]
    }

    /// True iff every cell carries an observed price.
    pub fn is_complete(&self) -> bool {
        self.prices.iter().all(|p| p.is_some())
    }

    /// Indices of unobserved cells, in row-major order.
    pub fn missing_cells(&self) -> Vec<(usize, usize)> {
        let nj = self.n_campuses();
        self.prices
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_none())
            .map(|(k, _)| (k / nj, k % nj))
            .collect()
    }

    /// Total quantity Q_i per product.
    pub fn product_totals(&self) -> Vec<f64> {
        (0..self.n_products())
            .map(|i| (0..self.n_campuses()).map(|j| self.quantity(i, j)).sum())
            .collect()
    }

    /// Realized system cost C over observed cells.
    pub fn system_cost(&self) -> f64 {
        let mut c = 0.0;
        for i in 0..self.n_products() {
            for j in 0..self.n_campuses() {
                if let Some(p) = self.price(i, j) {
                    c += p * self.quantity(i, j);
                }
            }
        }
        c
    }

    /// Flatten back to one record per observed cell, row-major order.
    pub fn to_records(&self) -> Vec<PanelRecord> {
        let mut out = Vec::new();
        for i in 0..self.n_products() {
            for j in 0..self.n_campuses() {
                if let Some(p) = self.price(i, j) {
                    out.push(PanelRecord::new(
                        self.product_ids[i].clone(),
                        self.campus_ids[j].clone(),
                        p,
                        self.quantity(i, j),
                    ));
                }
            }
        }
        out
    }

    /// Return a copy with cell (i, j) filled at `price` (used by imputation).
    pub(crate) fn with_price(&self, i: usize, j: usize, price: f64) -> PricePanel {
        let mut p = self.clone();
        p.prices[i * p.campus_ids.len() + j] = Some(price);
        p
    }

    /// Return a copy with cell (i, j) unobserved and its quantity zeroed.
    pub(crate) fn without_cell(&self, i: usize, j: usize) -> PricePanel {
        let mut p = self.clone();
        let cell = i * p.campus_ids.len() + j;
        p.prices[cell] = None;
        p.quantities[cell] = 0.0;
        p
    }

    /// Return a copy with the quantity at (i, j) replaced.
    pub(crate) fn with_quantity(&self, i: usize, j: usize, quantity: f64) -> PricePanel {
        let mut p = self.clone();
        p.quantities[i * p.campus_ids.len() + j] = quantity;
        p
    }
}

/// Compute the low-dimensional aggregates for a panel.
///
/// Exposure is populated only on complete panels; on incomplete panels it is
/// `None` rather than a partial sum.
pub fn aggregates(panel: &PricePanel) -> PanelAggregates {
    let product_totals = panel.product_totals();
    let system_cost = panel.system_cost();
    let exposure = if panel.is_complete() {
        Some(
            (0..panel.n_campuses())
                .map(|j| {
                    (0..panel.n_products())
                        .map(|i| product_totals[i] * panel.price(i, j).unwrap())
                        .sum()
                })
                .collect(),
        )
    } else {
        None
    };
    let grand_total: f64 = product_totals.iter().sum();
    let global_quantity_shares = (0..panel.n_campuses())
        .map(|j| {
            (0..panel.n_products())
                .map(|i| panel.quantity(i, j))
                .sum::<f64>()
                / grand_total
        })
        .collect();
    PanelAggregates {
        product_totals,
        system_cost,
        exposure,
        global_quantity_shares,
    }
}

/// True iff every (i, j) cell has an observed price.
pub fn is_complete(panel: &PricePanel) -> bool {
    panel.is_complete()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testdata::minimal_simpson_records;

    #[test]
    fn builds_the_minimal_simpson_panel() {
        let panel = build_panel(&minimal_simpson_records()).unwrap();
        assert_eq!(panel.n_products(), 2);
        assert_eq!(panel.n_campuses(), 2);
        assert!(panel.is_complete());
        assert_eq!(panel.price(0, 0), Some(10.0));
        assert_eq!(panel.quantity(1, 1), 90.0);
    }

    #[test]
    fn single_record_is_a_legal_panel() {
        let panel = build_panel(&[PanelRecord::new("A", "E", 10.0, 1.0)]).unwrap();
        assert_eq!(panel.n_products(), 1);
        assert_eq!(panel.n_campuses(), 1);
        let agg = aggregates(&panel);
        assert_eq!(agg.system_cost, 10.0);
        assert_eq!(agg.product_totals, vec![1.0]);
        assert_eq!(agg.exposure, Some(vec![10.0]));
        assert_eq!(agg.global_quantity_shares, vec![1.0]);
    }

    #[test]
    fn duplicate_cell_is_rejected() {
        let recs = vec![
            PanelRecord::new("A", "E", 10.0, 90.0),
            PanelRecord::new("A", "E", 10.0, 90.0),
        ];
        assert!(matches!(
            build_panel(&recs),
            Err(Error::DuplicateCell { .. })
        ));
    }

    #[test]
    fn rejects_negative_and_non_finite_values() {
        let recs = vec![PanelRecord::new("A", "E", -1.0, 1.0)];
        assert!(matches!(
            build_panel(&recs),
            Err(Error::NegativeValue { .. })
        ));
        let recs = vec![PanelRecord::new("A", "E", 1.0, f64::NAN)];
        assert!(matches!(
            build_panel(&recs),
            Err(Error::NegativeValue { .. })
        ));
    }

    #[test]
    fn zero_price_is_legal_but_zero_total_quantity_is_not() {
        let recs = vec![
            PanelRecord::new("A", "E", 0.0, 1.0),
            PanelRecord::new("B", "E", 1.0, 0.0),
        ];
        assert!(matches!(
            build_panel(&recs),
            Err(Error::ZeroTotalQuantity { .. })
        ));
        let recs = vec![PanelRecord::new("A", "E", 0.0, 1.0)];
        assert!(build_panel(&recs).is_ok());
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(build_panel(&[]), Err(Error::EmptyPanel)));
    }

    #[test]
    fn simpson_aggregates_match_hand_sums() {
        let panel = build_panel(&minimal_simpson_records()).unwrap();
        let agg = aggregates(&panel);
        // 90·10 + 10·4 + 10·12 + 90·6 = 1600
        assert!((agg.system_cost - 1600.0).abs() < 1e-12);
        assert_eq!(agg.product_totals, vec![100.0, 100.0]);
        // E: 100·10 + 100·12 = 2200; C: 100·4 + 100·6 = 1000
        assert_eq!(agg.exposure, Some(vec![2200.0, 1000.0]));
        assert_eq!(agg.global_quantity_shares, vec![0.5, 0.5]);
    }

    #[test]
    fn incomplete_panel_has_no_exposure() {
        let recs = vec![
            PanelRecord::new("A", "E", 10.0, 90.0),
            PanelRecord::new("B", "E", 12.0, 10.0),
            PanelRecord::new("B", "C", 6.0, 90.0),
        ];
        let panel = build_panel(&recs).unwrap();
        assert!(!is_complete(&panel));
        assert_eq!(panel.missing_cells(), vec![(0, 1)]);
        assert!(aggregates(&panel).exposure.is_none());
    }

    #[test]
    fn accounting_identity_holds() {
        // Σ_i (Σ_j π_ij p_ij) Q_i = C with π_ij = q_ij / Q_i over observed cells.
        let recs = vec![
            PanelRecord::new("A", "E", 3.0, 4.0),
            PanelRecord::new("A", "C", 1.5, 2.0),
            PanelRecord::new("B", "E", 7.25, 1.0),
            PanelRecord::new("C", "C", 0.5, 9.0),
        ];
        let panel = build_panel(&recs).unwrap();
        let agg = aggregates(&panel);
        let mut lhs = 0.0;
        for i in 0..panel.n_products() {
            let qi = agg.product_totals[i];
            let mut blended = 0.0;
            for j in 0..panel.n_campuses() {
                if let Some(p) = panel.price(i, j) {
                    blended += panel.quantity(i, j) / qi * p;
                }
            }
            lhs += blended * qi;
        }
        assert!((lhs - agg.system_cost).abs() <= 1e-10 * agg.system_cost.max(1.0));
    }
}
