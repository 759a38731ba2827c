use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use super::{DataError, DataTable};
use crate::ies::{Channel, ScenarioSeries};

/// ISO-8601 without zone, e.g. `2024-07-01T13:00:00`.
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

const N_COLS: usize = 9;

/// Column names of an input CSV. The defaults match what
/// [`DataTable::write_csv`] produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsvSchema {
    pub timestamp: String,
    pub solar_rad: String,
    pub bldg_elec: String,
    pub bldg_heat: String,
    pub bldg_cool: String,
    pub dc_elec: String,
    pub dc_waste_heat: String,
    pub price_buy: String,
    pub price_sell: String,
    /// When absent from the file the hydrogen price is taken as 0.
    pub price_h2: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            solar_rad: "solar_rad".into(),
            bldg_elec: "bldg_elec".into(),
            bldg_heat: "bldg_heat".into(),
            bldg_cool: "bldg_cool".into(),
            dc_elec: "dc_elec".into(),
            dc_waste_heat: "dc_waste_heat".into(),
            price_buy: "price_buy".into(),
            price_sell: "price_sell".into(),
            price_h2: "price_h2".into(),
        }
    }
}

impl CsvSchema {
    fn value_columns(&self) -> [&str; N_COLS] {
        [
            &self.solar_rad,
            &self.bldg_elec,
            &self.bldg_heat,
            &self.bldg_cool,
            &self.dc_elec,
            &self.dc_waste_heat,
            &self.price_buy,
            &self.price_sell,
            &self.price_h2,
        ]
    }
}

fn parse_value(field: &str) -> Option<f64> {
    let f = field.trim();
    if f.is_empty() {
        return None;
    }
    f.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_timestamp(field: &str) -> Option<NaiveDateTime> {
    let f = field.trim();
    NaiveDateTime::parse_from_str(f, TIMESTAMP_FORMAT)
        .or_else(|_| NaiveDateTime::parse_from_str(f, "%Y-%m-%d %H:%M:%S"))
        .or_else(|_| NaiveDateTime::parse_from_str(f, "%Y-%m-%dT%H:%M"))
        .ok()
}

/// Reads a CSV, drops rows with any missing or unparsable field and averages
/// the rest into hourly buckets keyed by the start of the hour.
pub fn ingest_csv<R: Read>(r: R, schema: &CsvSchema) -> Result<DataTable, DataError> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    let find = |name: &str| header.iter().position(|h| h.trim() == name);
    let ts_col = find(&schema.timestamp)
        .ok_or_else(|| DataError::Schema(format!("missing column {:?}", schema.timestamp)))?;
    let mut cols = [None; N_COLS];
    for (k, name) in schema.value_columns().iter().enumerate() {
        cols[k] = find(name);
        // only the hydrogen price may be absent
        if cols[k].is_none() && k + 1 != N_COLS {
            return Err(DataError::Schema(format!("missing column {name:?}")));
        }
    }

    let mut buckets: BTreeMap<NaiveDateTime, ([f64; N_COLS], usize)> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let Some(ts) = rec.get(ts_col).and_then(parse_timestamp) else {
            continue;
        };
        let mut row = [0.0; N_COLS];
        let mut complete = true;
        for (k, c) in cols.iter().enumerate() {
            match c {
                Some(c) => match rec.get(*c).and_then(parse_value) {
                    Some(v) => row[k] = v,
                    None => complete = false,
                },
                None => row[k] = 0.0,
            }
        }
        if !complete {
            continue;
        }
        let hour = ts
            .with_minute(0)
            .and_then(|t| t.with_second(0))
            .and_then(|t| t.with_nanosecond(0))
            .expect("valid truncation");
        let e = buckets.entry(hour).or_insert(([0.0; N_COLS], 0));
        for k in 0..N_COLS {
            e.0[k] += row[k];
        }
        e.1 += 1;
    }
    if buckets.is_empty() {
        return Err(DataError::EmptyAfterCleaning);
    }

    let mut timestamps = Vec::with_capacity(buckets.len());
    let mut s = ScenarioSeries::default();
    for (ts, (sum, n)) in buckets {
        timestamps.push(ts);
        let m = |k: usize| sum[k] / n as f64;
        for (k, ch) in Channel::ALL.iter().enumerate() {
            s.channel_mut(*ch).push(m(k));
        }
        s.price_buy.push(m(6));
        s.price_sell.push(m(7));
        s.price_h2.push(m(8));
    }
    Ok(DataTable {
        timestamps,
        series: s,
    })
}

/// `(pue - 1) * dc_elec`
pub fn derive_dc_cooling(dc_elec: &[f64], pue: f64) -> Vec<f64> {
    dc_elec.iter().map(|p| (pue - 1.0) * p).collect()
}

impl DataTable {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), DataError> {
        let schema = CsvSchema::default();
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec![schema.timestamp.as_str()];
        header.extend(schema.value_columns());
        wtr.write_record(&header)?;
        let s = &self.series;
        for (i, ts) in self.timestamps.iter().enumerate() {
            let mut rec = vec![ts.format(TIMESTAMP_FORMAT).to_string()];
            for ch in Channel::ALL {
                rec.push(s.channel(ch)[i].to_string());
            }
            rec.push(s.price_buy[i].to_string());
            rec.push(s.price_sell[i].to_string());
            rec.push(s.price_h2[i].to_string());
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}
