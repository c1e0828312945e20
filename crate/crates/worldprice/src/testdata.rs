//! Tiny shared fixture for unit tests: two products, two campuses, with
//! campuswise dominance that the quantity-weighted blend reverses.

use crate::panel::{build_panel, PanelRecord, PricePanel};

pub fn minimal_simpson_records() -> Vec<PanelRecord> {
    vec![
        PanelRecord::new("A", "E", 10.0, 90.0),
        PanelRecord::new("A", "C", 4.0, 10.0),
        PanelRecord::new("B", "E", 12.0, 10.0),
        PanelRecord::new("B", "C", 6.0, 90.0),
    ]
}

pub fn minimal_simpson_panel() -> PricePanel {
    build_panel(&minimal_simpson_records()).unwrap()
}
