use serde::{Deserialize, Serialize};

use super::IesError;

/// A storage unit (battery, hot-water tank, chilled-water tank).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageConfig {
    pub eta_ch: f64,
    pub eta_dis: f64,
    /// Charge and discharge rate limit (kW).
    #[serde(alias = "p_max", alias = "g_max", alias = "q_max")]
    pub rate_max: f64,
    /// kWh
    pub s_min: f64,
    pub s_max: f64,
    /// Defaults to the midpoint of `[s_min, s_max]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_init: Option<f64>,
}

impl StorageConfig {
    pub fn initial(&self) -> f64 {
        self.s_init.unwrap_or(0.5 * (self.s_min + self.s_max))
    }

    fn validate(&self, name: &str) -> Result<(), IesError> {
        unit_interval(&format!("{name}.eta_ch"), self.eta_ch)?;
        unit_interval(&format!("{name}.eta_dis"), self.eta_dis)?;
        nonneg(&format!("{name}.rate_max"), self.rate_max)?;
        nonneg(&format!("{name}.s_min"), self.s_min)?;
        let s0 = self.initial();
        if !(self.s_min <= s0 && s0 <= self.s_max) {
            return Err(IesError::Config(format!(
                "{name}: need s_min <= s_init <= s_max, got {} <= {s0} <= {}",
                self.s_min, self.s_max
            )));
        }
        Ok(())
    }
}

/// Electrolyzers, compressor, hydrogen tank and fuel cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HessConfig {
    /// kg of hydrogen per kWh of electrolyzer input
    pub k_el: f64,
    pub eta_comp: f64,
    /// kW
    pub p_el_max: f64,
    /// kWh of electricity per kg of hydrogen
    pub k_fc: f64,
    /// heat-to-power ratio of the fuel cells
    pub theta: f64,
    pub eta_rec: f64,
    /// kg
    pub tank_max: f64,
    /// Defaults to half the tank.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tank_init: Option<f64>,
    /// kg/h
    pub buy_max: f64,
}

impl HessConfig {
    pub fn initial_tank(&self) -> f64 {
        self.tank_init.unwrap_or(0.5 * self.tank_max)
    }

    /// kg/h produced per kW of electrolyzer input.
    pub fn production_per_kw(&self) -> f64 {
        self.k_el * self.eta_comp
    }

    /// kW of recovered heat per kg/h of hydrogen burnt.
    pub fn heat_per_kg(&self) -> f64 {
        self.eta_rec * self.theta * self.k_fc
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbsorptionChillerConfig {
    pub eta_ac: f64,
    /// kW of heat input
    pub g_ac_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChillerConfig {
    pub cop: f64,
    /// kW of electrical input
    pub p_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolarConfig {
    #[serde(alias = "eta_pv", alias = "eta_stc")]
    pub eta: f64,
    pub area_m2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatPumpConfig {
    /// Upgraded heat per unit of recovered waste heat; 0 disables recovery.
    pub eta_hp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// kW, applies to both purchase and sale
    pub p_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataCenterConfig {
    /// Power usage effectiveness; cooling demand is `(pue - 1) * dc_elec`.
    pub pue: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalStatePolicy {
    #[default]
    Free,
    /// Storage levels and the tank must end at least where they started.
    ReturnToInitial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IesConfig {
    pub horizon_steps: usize,
    pub step_hours: f64,
    pub ess: StorageConfig,
    pub tes: StorageConfig,
    pub ces: StorageConfig,
    pub hess: HessConfig,
    pub ac: AbsorptionChillerConfig,
    pub chiller: ChillerConfig,
    pub pv: SolarConfig,
    pub stc: SolarConfig,
    pub hp: HeatPumpConfig,
    pub grid: GridConfig,
    pub dc: DataCenterConfig,
    #[serde(default)]
    pub terminal_state_policy: TerminalStatePolicy,
}

fn unit_interval(name: &str, v: f64) -> Result<(), IesError> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(IesError::Config(format!("{name} must lie in (0, 1], got {v}")))
    }
}

fn nonneg(name: &str, v: f64) -> Result<(), IesError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(IesError::Config(format!("{name} must be a finite value >= 0, got {v}")))
    }
}

fn positive(name: &str, v: f64) -> Result<(), IesError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(IesError::Config(format!("{name} must be positive, got {v}")))
    }
}

impl IesConfig {
    pub fn validate(&self) -> Result<(), IesError> {
        if self.horizon_steps == 0 {
            return Err(IesError::Config("horizon_steps must be at least 1".into()));
        }
        positive("step_hours", self.step_hours)?;
        self.ess.validate("ess")?;
        self.tes.validate("tes")?;
        self.ces.validate("ces")?;

        let h = &self.hess;
        nonneg("hess.k_el", h.k_el)?;
        unit_interval("hess.eta_comp", h.eta_comp)?;
        nonneg("hess.p_el_max", h.p_el_max)?;
        nonneg("hess.k_fc", h.k_fc)?;
        nonneg("hess.theta", h.theta)?;
        unit_interval("hess.eta_rec", h.eta_rec)?;
        nonneg("hess.tank_max", h.tank_max)?;
        nonneg("hess.buy_max", h.buy_max)?;
        let t0 = h.initial_tank();
        if !(0.0 <= t0 && t0 <= h.tank_max) {
            return Err(IesError::Config(format!(
                "hess: need 0 <= tank_init <= tank_max, got {t0} > {}",
                h.tank_max
            )));
        }

        unit_interval("ac.eta_ac", self.ac.eta_ac)?;
        nonneg("ac.g_ac_max", self.ac.g_ac_max)?;
        positive("chiller.cop", self.chiller.cop)?;
        nonneg("chiller.p_max", self.chiller.p_max)?;
        unit_interval("pv.eta", self.pv.eta)?;
        nonneg("pv.area_m2", self.pv.area_m2)?;
        unit_interval("stc.eta", self.stc.eta)?;
        nonneg("stc.area_m2", self.stc.area_m2)?;
        // the heat pump upgrades heat, so its ratio may exceed one
        nonneg("hp.eta_hp", self.hp.eta_hp)?;
        nonneg("grid.p_max", self.grid.p_max)?;
        if !(self.dc.pue >= 1.0) {
            return Err(IesError::Config(format!("dc.pue must be >= 1, got {}", self.dc.pue)));
        }
        Ok(())
    }

    /// kW of PV output per kW/m2 of radiation.
    pub fn pv_gain(&self) -> f64 {
        self.pv.eta * self.pv.area_m2
    }

    /// kW of collector heat per kW/m2 of radiation.
    pub fn stc_gain(&self) -> f64 {
        self.stc.eta * self.stc.area_m2
    }

    pub fn dc_cooling_ratio(&self) -> f64 {
        self.dc.pue - 1.0
    }
}

impl Default for IesConfig {
    /// The shipped device set; `configs/default.json` holds the same values.
    fn default() -> Self {
        Self {
            horizon_steps: 24,
            step_hours: 1.0,
            ess: StorageConfig {
                eta_ch: 0.95,
                eta_dis: 0.95,
                rate_max: 100.0,
                s_min: 50.0,
                s_max: 500.0,
                s_init: None,
            },
            tes: StorageConfig {
                eta_ch: 0.9,
                eta_dis: 0.9,
                rate_max: 200.0,
                s_min: 0.0,
                s_max: 600.0,
                s_init: None,
            },
            ces: StorageConfig {
                eta_ch: 0.9,
                eta_dis: 0.9,
                rate_max: 200.0,
                s_min: 0.0,
                s_max: 600.0,
                s_init: None,
            },
            hess: HessConfig {
                k_el: 0.02,
                eta_comp: 0.9,
                p_el_max: 400.0,
                k_fc: 16.0,
                theta: 1.2,
                eta_rec: 0.8,
                tank_max: 50.0,
                tank_init: None,
                buy_max: 0.0,
            },
            ac: AbsorptionChillerConfig {
                eta_ac: 0.7,
                g_ac_max: 500.0,
            },
            chiller: ChillerConfig {
                cop: 4.0,
                p_max: 150.0,
            },
            pv: SolarConfig {
                eta: 0.2,
                area_m2: 1500.0,
            },
            stc: SolarConfig {
                eta: 0.5,
                area_m2: 20.0,
            },
            hp: HeatPumpConfig { eta_hp: 1.2 },
            grid: GridConfig { p_max: 2000.0 },
            dc: DataCenterConfig { pue: 1.3 },
            terminal_state_policy: TerminalStatePolicy::Free,
        }
    }
}
