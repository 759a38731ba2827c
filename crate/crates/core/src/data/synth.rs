use std::f64::consts::TAU;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::DataTable;
use crate::ies::{Channel, ScenarioSeries};

/// Target mean and noise levels of one synthetic channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelProfile {
    pub mean: f64,
    /// Std of a day-level multiplicative factor, AR(1) across days.
    pub daily_noise: f64,
    /// Std of an hour-level multiplicative factor, AR(1) across hours.
    pub hourly_noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthProfile {
    pub start: NaiveDateTime,
    pub solar_rad: ChannelProfile,
    pub bldg_elec: ChannelProfile,
    pub bldg_heat: ChannelProfile,
    pub bldg_cool: ChannelProfile,
    pub dc_elec: ChannelProfile,
    /// Waste heat as a fraction of DC electricity.
    pub waste_heat_ratio: f64,
    pub waste_heat_noise: f64,
    /// Weekend level of building electricity and cooling relative to weekdays.
    pub weekend_factor: f64,
    /// Day-to-day persistence of the daily factors.
    pub daily_persistence: f64,
    pub price_offpeak: f64,
    pub price_peak: f64,
    /// Peak tariff applies for hours in `[peak_start, peak_end)`.
    pub peak_start: u32,
    pub peak_end: u32,
    pub price_sell: f64,
    pub price_h2: f64,
}

impl Default for SynthProfile {
    fn default() -> Self {
        let ch = |mean, daily_noise, hourly_noise| ChannelProfile {
            mean,
            daily_noise,
            hourly_noise,
        };
        Self {
            start: NaiveDate::from_ymd_opt(2024, 6, 3)
                .expect("valid date")
                .and_hms_opt(0, 0, 0)
                .expect("valid time"),
            solar_rad: ch(0.18, 0.25, 0.10),
            bldg_elec: ch(250.0, 0.10, 0.05),
            bldg_heat: ch(60.0, 0.10, 0.05),
            bldg_cool: ch(120.0, 0.15, 0.05),
            dc_elec: ch(300.0, 0.05, 0.03),
            waste_heat_ratio: 0.1,
            waste_heat_noise: 0.02,
            weekend_factor: 0.75,
            daily_persistence: 0.6,
            price_offpeak: 0.12,
            price_peak: 0.30,
            peak_start: 8,
            peak_end: 22,
            price_sell: 0.05,
            price_h2: 4.0,
        }
    }
}

fn bell(h: f64, center: f64, width: f64) -> f64 {
    (-((h - center) / width).powi(2)).exp()
}

/// Unnormalized diurnal shape of a channel at hour `h`.
fn raw_shape(ch: Channel, h: f64) -> f64 {
    let office = 0.5 - 0.5 * (TAU * (h - 3.0) / 24.0).cos();
    match ch {
        Channel::SolarRad => {
            if (6.0..=19.0).contains(&h) {
                bell(h, 12.5, 3.0)
            } else {
                0.0
            }
        }
        Channel::BldgElec => 0.6 + office,
        Channel::BldgHeat => 1.3 - office,
        Channel::BldgCool => 0.4 + bell(h, 15.0, 5.0),
        Channel::DcElec | Channel::DcWasteHeat => 1.0 + 0.05 * (TAU * (h - 14.0) / 24.0).sin(),
    }
}

/// Diurnal shapes scaled to a daily mean of one.
fn shapes(ch: Channel) -> [f64; 24] {
    let raw: [f64; 24] = std::array::from_fn(|h| raw_shape(ch, h as f64));
    let mean = raw.iter().sum::<f64>() / 24.0;
    raw.map(|v| v / mean)
}

struct Ar1 {
    rho: f64,
    innov: Normal<f64>,
    state: f64,
}

impl Ar1 {
    fn new(rho: f64, std: f64) -> Self {
        let innov = Normal::new(0.0, std * (1.0 - rho * rho).sqrt()).expect("finite std");
        Self {
            rho,
            innov,
            state: 0.0,
        }
    }

    fn next(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        self.state = self.rho * self.state + self.innov.sample(rng);
        self.state
    }
}

/// Seeded hourly table: diurnal shape times weekly pattern times
/// `1 + daily + hourly` noise per channel, solar zero at night, two-tier
/// time-of-use purchase price.
pub fn synth_generate(seed: u64, days: usize, p: &SynthProfile) -> DataTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let demand = [
        (Channel::SolarRad, p.solar_rad),
        (Channel::BldgElec, p.bldg_elec),
        (Channel::BldgHeat, p.bldg_heat),
        (Channel::BldgCool, p.bldg_cool),
        (Channel::DcElec, p.dc_elec),
    ];
    let shape: Vec<[f64; 24]> = demand.iter().map(|(c, _)| shapes(*c)).collect();
    let mut daily: Vec<Ar1> = demand
        .iter()
        .map(|(_, c)| Ar1::new(p.daily_persistence, c.daily_noise))
        .collect();
    let mut hourly: Vec<Ar1> = demand.iter().map(|(_, c)| Ar1::new(0.8, c.hourly_noise)).collect();
    let mut waste = Ar1::new(0.8, p.waste_heat_noise);

    let w = p.weekend_factor;
    let (weekday, weekend) = (7.0 / (5.0 + 2.0 * w), 7.0 * w / (5.0 + 2.0 * w));

    let mut timestamps = Vec::with_capacity(days * 24);
    let mut s = ScenarioSeries::default();
    for d in 0..days {
        let date = p.start + Duration::days(d as i64);
        let is_weekend = matches!(date.weekday(), Weekday::Sat | Weekday::Sun);
        let day_factor: Vec<f64> = daily.iter_mut().map(|a| a.next(&mut rng)).collect();
        for h in 0..24 {
            timestamps.push(date + Duration::hours(h as i64));
            for (k, (ch, prof)) in demand.iter().enumerate() {
                let weekly = match ch {
                    Channel::BldgElec | Channel::BldgCool => {
                        if is_weekend {
                            weekend
                        } else {
                            weekday
                        }
                    }
                    _ => 1.0,
                };
                let noise = 1.0 + day_factor[k] + hourly[k].next(&mut rng);
                let v = prof.mean * shape[k][h] * weekly * noise;
                s.channel_mut(*ch).push(v.max(0.0));
            }
            let dc = *s.dc_elec.last().expect("just pushed");
            s.dc_waste_heat
                .push((p.waste_heat_ratio * dc * (1.0 + waste.next(&mut rng))).max(0.0));
            let peak = (p.peak_start..p.peak_end).contains(&(h as u32));
            s.price_buy.push(if peak { p.price_peak } else { p.price_offpeak });
            s.price_sell.push(p.price_sell);
            s.price_h2.push(p.price_h2);
        }
    }
    DataTable {
        timestamps,
        series: s,
    }
}
