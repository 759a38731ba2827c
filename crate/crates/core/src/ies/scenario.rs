use std::io::{Read, Write};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::layout::{pred_index, Channel, N_CHANNELS};
use super::IesError;

/// Hourly exogenous inputs over one horizon, either predicted or realized.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScenarioSeries {
    /// kW/m2
    pub solar_rad: Vec<f64>,
    /// kW
    pub bldg_elec: Vec<f64>,
    pub bldg_heat: Vec<f64>,
    pub bldg_cool: Vec<f64>,
    pub dc_elec: Vec<f64>,
    pub dc_waste_heat: Vec<f64>,
    /// $/kWh
    pub price_buy: Vec<f64>,
    pub price_sell: Vec<f64>,
    /// $/kg
    pub price_h2: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioRow {
    step: usize,
    solar_rad: f64,
    bldg_elec: f64,
    bldg_heat: f64,
    bldg_cool: f64,
    dc_elec: f64,
    dc_waste_heat: f64,
    price_buy: f64,
    price_sell: f64,
    price_h2: f64,
}

impl ScenarioSeries {
    /// All-zero demands and radiation with flat prices.
    pub fn flat(horizon: usize, buy: f64, sell: f64, h2: f64) -> Self {
        let z = vec![0.0; horizon];
        Self {
            solar_rad: z.clone(),
            bldg_elec: z.clone(),
            bldg_heat: z.clone(),
            bldg_cool: z.clone(),
            dc_elec: z.clone(),
            dc_waste_heat: z,
            price_buy: vec![buy; horizon],
            price_sell: vec![sell; horizon],
            price_h2: vec![h2; horizon],
        }
    }

    pub fn horizon(&self) -> usize {
        self.price_buy.len()
    }

    pub fn channel(&self, ch: Channel) -> &[f64] {
        match ch {
            Channel::SolarRad => &self.solar_rad,
            Channel::BldgElec => &self.bldg_elec,
            Channel::BldgHeat => &self.bldg_heat,
            Channel::BldgCool => &self.bldg_cool,
            Channel::DcElec => &self.dc_elec,
            Channel::DcWasteHeat => &self.dc_waste_heat,
        }
    }

    pub fn channel_mut(&mut self, ch: Channel) -> &mut Vec<f64> {
        match ch {
            Channel::SolarRad => &mut self.solar_rad,
            Channel::BldgElec => &mut self.bldg_elec,
            Channel::BldgHeat => &mut self.bldg_heat,
            Channel::BldgCool => &mut self.bldg_cool,
            Channel::DcElec => &mut self.dc_elec,
            Channel::DcWasteHeat => &mut self.dc_waste_heat,
        }
    }

    /// DC cooling demand `(pue - 1) * dc_elec`.
    pub fn dc_cool(&self, pue: f64) -> Vec<f64> {
        self.dc_elec.iter().map(|p| (pue - 1.0) * p).collect()
    }

    pub fn validate(&self, horizon: usize) -> Result<(), IesError> {
        let lens = [
            ("price_buy", self.price_buy.len()),
            ("price_sell", self.price_sell.len()),
            ("price_h2", self.price_h2.len()),
        ];
        for ch in Channel::ALL {
            if self.channel(ch).len() != horizon {
                return Err(IesError::Dimension(format!(
                    "{} has {} steps, expected {horizon}",
                    ch.name(),
                    self.channel(ch).len()
                )));
            }
            if let Some((t, v)) = self
                .channel(ch)
                .iter()
                .enumerate()
                .find(|(_, v)| !(**v >= 0.0 && v.is_finite()))
            {
                return Err(IesError::Config(format!(
                    "{}[{t}] must be finite and >= 0, got {v}",
                    ch.name()
                )));
            }
        }
        for (name, len) in lens {
            if len != horizon {
                return Err(IesError::Dimension(format!(
                    "{name} has {len} steps, expected {horizon}"
                )));
            }
        }
        for t in 0..horizon {
            let (b, s, h) = (self.price_buy[t], self.price_sell[t], self.price_h2[t]);
            if !(b.is_finite() && s.is_finite() && h.is_finite()) {
                return Err(IesError::Config(format!("prices at step {t} must be finite")));
            }
            if s > b {
                return Err(IesError::Config(format!(
                    "price_sell[{t}] = {s} exceeds price_buy[{t}] = {b}"
                )));
            }
        }
        Ok(())
    }

    /// The six uncertain channels flattened step-major (`t * 6 + channel`).
    pub fn prediction_vector(&self) -> DVector<f64> {
        let horizon = self.horizon();
        let mut y = DVector::zeros(horizon * N_CHANNELS);
        for ch in Channel::ALL {
            for (t, v) in self.channel(ch).iter().enumerate() {
                y[pred_index(t, ch)] = *v;
            }
        }
        y
    }

    /// Replaces the uncertain channels with `prediction`, keeping prices.
    pub fn with_prediction(&self, prediction: &DVector<f64>) -> Result<Self, IesError> {
        let horizon = self.horizon();
        if prediction.len() != horizon * N_CHANNELS {
            return Err(IesError::Dimension(format!(
                "prediction has length {}, expected {}",
                prediction.len(),
                horizon * N_CHANNELS
            )));
        }
        let mut out = self.clone();
        for ch in Channel::ALL {
            *out.channel_mut(ch) = (0..horizon).map(|t| prediction[pred_index(t, ch)]).collect();
        }
        Ok(out)
    }

    /// Multiplies the five demand-side channels (building loads and both DC
    /// channels) by `factor`; radiation and prices are untouched.
    pub fn scale_demand(&mut self, factor: f64) {
        for ch in Channel::ALL.into_iter().filter(|c| *c != Channel::SolarRad) {
            self.channel_mut(ch).iter_mut().for_each(|v| *v *= factor);
        }
    }

    /// Multiplies the DC electricity and waste-heat channels by `factor`.
    pub fn scale_dc(&mut self, factor: f64) {
        for ch in [Channel::DcElec, Channel::DcWasteHeat] {
            self.channel_mut(ch).iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), IesError> {
        let mut wtr = csv::Writer::from_writer(w);
        for t in 0..self.horizon() {
            wtr.serialize(ScenarioRow {
                step: t,
                solar_rad: self.solar_rad[t],
                bldg_elec: self.bldg_elec[t],
                bldg_heat: self.bldg_heat[t],
                bldg_cool: self.bldg_cool[t],
                dc_elec: self.dc_elec[t],
                dc_waste_heat: self.dc_waste_heat[t],
                price_buy: self.price_buy[t],
                price_sell: self.price_sell[t],
                price_h2: self.price_h2[t],
            })?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, IesError> {
        let mut out = Self::default();
        for (i, row) in csv::Reader::from_reader(r).deserialize::<ScenarioRow>().enumerate() {
            let row = row?;
            if row.step != i {
                return Err(IesError::Dimension(format!(
                    "scenario rows must be numbered 0.., row {i} has step {}",
                    row.step
                )));
            }
            out.solar_rad.push(row.solar_rad);
            out.bldg_elec.push(row.bldg_elec);
            out.bldg_heat.push(row.bldg_heat);
            out.bldg_cool.push(row.bldg_cool);
            out.dc_elec.push(row.dc_elec);
            out.dc_waste_heat.push(row.dc_waste_heat);
            out.price_buy.push(row.price_buy);
            out.price_sell.push(row.price_sell);
            out.price_h2.push(row.price_h2);
        }
        Ok(out)
    }
}
