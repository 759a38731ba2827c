//! Time-indexed input tables: CSV ingestion, synthetic generation,
//! supervised windows and the chronological split.

mod ingest;
mod synth;
mod windows;

use chrono::NaiveDateTime;

use crate::ies::{Channel, ScenarioSeries};

pub use ingest::{derive_dc_cooling, ingest_csv, CsvSchema, TIMESTAMP_FORMAT};
pub use synth::{synth_generate, ChannelProfile, SynthProfile};
pub use windows::{channel_matrix, fit_normalizer, make_windows, split, Sample, Split};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("schema: {0}")]
    Schema(String),
    #[error("no rows left after dropping missing values")]
    EmptyAfterCleaning,
    #[error("not enough data: {0}")]
    TooShort(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Forecast(#[from] crate::forecast::ForecastError),
}

/// An hourly table: one timestamp per row plus every channel and price.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    pub timestamps: Vec<NaiveDateTime>,
    /// Columns of the table, `timestamps.len()` long.
    pub series: ScenarioSeries,
}

impl DataTable {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Rows `start..start + len` as a scenario.
    pub fn slice(&self, start: usize, len: usize) -> ScenarioSeries {
        let s = &self.series;
        let r = start..start + len;
        ScenarioSeries {
            solar_rad: s.solar_rad[r.clone()].to_vec(),
            bldg_elec: s.bldg_elec[r.clone()].to_vec(),
            bldg_heat: s.bldg_heat[r.clone()].to_vec(),
            bldg_cool: s.bldg_cool[r.clone()].to_vec(),
            dc_elec: s.dc_elec[r.clone()].to_vec(),
            dc_waste_heat: s.dc_waste_heat[r.clone()].to_vec(),
            price_buy: s.price_buy[r.clone()].to_vec(),
            price_sell: s.price_sell[r.clone()].to_vec(),
            price_h2: s.price_h2[r].to_vec(),
        }
    }

    /// Multiplies building and DC demand channels by `factor`.
    pub fn scale_demand(&mut self, factor: f64) {
        self.series.scale_demand(factor);
    }

    pub fn channel_mean(&self, ch: Channel) -> f64 {
        let v = self.series.channel(ch);
        v.iter().sum::<f64>() / v.len().max(1) as f64
    }
}
