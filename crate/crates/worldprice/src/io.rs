//! File formats: panel CSV/JSON and world-price CSV/JSON.
//!
//! Panel CSV carries the header `product_id,campus_id,price,quantity`, one row
//! per observed cell. The JSON form is an array of records with the same four
//! fields. World prices serialize as `product_id,world_price,operator`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{OperatorTag, WorldPriceVector};
use crate::panel::{build_panel, PanelRecord, PricePanel};

/// Full-precision decimal rendering: 17 significant digits round-trip f64.
pub fn fmt_full(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Read a panel from CSV with header `product_id,campus_id,price,quantity`.
pub fn read_panel_csv<R: Read>(reader: R) -> Result<PricePanel> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut records = Vec::new();
    for (idx, row) in rdr.deserialize::<PanelRecord>().enumerate() {
        let rec = row.map_err(|e| Error::Parse {
            line: idx + 2, // header occupies line 1
            message: e.to_string(),
        })?;
        records.push(rec);
    }
    build_panel(&records)
}

pub fn read_panel_csv_path(path: &Path) -> Result<PricePanel> {
    read_panel_csv(std::fs::File::open(path)?)
}

/// Read a panel from a JSON array of `{product_id, campus_id, price, quantity}`.
pub fn read_panel_json<R: Read>(reader: R) -> Result<PricePanel> {
    let records: Vec<PanelRecord> = serde_json::from_reader(reader)?;
    build_panel(&records)
}

pub fn read_panel_json_path(path: &Path) -> Result<PricePanel> {
    read_panel_json(std::fs::File::open(path)?)
}

/// Read a panel, dispatching on the `.json` extension (CSV otherwise).
pub fn read_panel_path(path: &Path) -> Result<PricePanel> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => read_panel_json_path(path),
        _ => read_panel_csv_path(path),
    }
}

pub fn write_panel_csv<W: Write>(panel: &PricePanel, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["product_id", "campus_id", "price", "quantity"])?;
    for rec in panel.to_records() {
        wtr.write_record([
            rec.product_id.as_str(),
            rec.campus_id.as_str(),
            &fmt_full(rec.price),
            &fmt_full(rec.quantity),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_panel_json<W: Write>(panel: &PricePanel, writer: W) -> Result<()> {
    serde_json::to_writer_pretty(writer, &panel.to_records())?;
    Ok(())
}

/// One row of the world-price file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorldPriceRow {
    pub product_id: String,
    pub world_price: f64,
    pub operator: String,
}

pub fn write_world_prices_csv<W: Write>(world: &WorldPriceVector, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["product_id", "world_price", "operator"])?;
    for (id, price) in world.product_ids.iter().zip(&world.prices) {
        wtr.write_record([id.as_str(), &fmt_full(*price), world.operator_tag.as_str()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Read world prices from `product_id,world_price,operator` CSV.
pub fn read_world_prices_csv<R: Read>(reader: R) -> Result<WorldPriceVector> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut product_ids = Vec::new();
    let mut prices = Vec::new();
    let mut tag = OperatorTag::Naive;
    for (idx, row) in rdr.deserialize::<WorldPriceRow>().enumerate() {
        let rec = row.map_err(|e| Error::Parse {
            line: idx + 2,
            message: e.to_string(),
        })?;
        tag = OperatorTag::parse(&rec.operator).ok_or_else(|| Error::Parse {
            line: idx + 2,
            message: format!("unknown operator tag '{}'", rec.operator),
        })?;
        product_ids.push(rec.product_id);
        prices.push(rec.world_price);
    }
    if product_ids.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "world-price file has no rows".into(),
        });
    }
    Ok(WorldPriceVector {
        operator_tag: tag,
        product_ids,
        prices,
    })
}

pub fn read_world_prices_path(path: &Path) -> Result<WorldPriceVector> {
    read_world_prices_csv(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::aggregates;
    use crate::testdata::minimal_simpson_panel;

    #[test]
    fn csv_round_trip_preserves_aggregates() {
        let panel = minimal_simpson_panel();
        let mut buf = Vec::new();
        write_panel_csv(&panel, &mut buf).unwrap();
        let back = read_panel_csv(buf.as_slice()).unwrap();
        assert_eq!(aggregates(&panel), aggregates(&back));
        assert_eq!(panel, back);
    }

    #[test]
    fn json_round_trip_preserves_panel() {
        let panel = minimal_simpson_panel();
        let mut buf = Vec::new();
        write_panel_json(&panel, &mut buf).unwrap();
        let back = read_panel_json(buf.as_slice()).unwrap();
        assert_eq!(panel, back);
    }

    #[test]
    fn bad_csv_reports_its_line() {
        let text = "product_id,campus_id,price,quantity\nA,E,10,1\nB,C,not_a_number,2\n";
        match read_panel_csv(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
