use serde::{Deserialize, Serialize};

use super::DataError;

/// Stationary storage at the substation. Fractions are of `capacity_kwh`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EssParams {
    pub capacity_kwh: f64,
    pub p_charge_max_kw: f64,
    pub p_discharge_max_kw: f64,
    pub eta_charge: f64,
    pub eta_discharge: f64,
    pub self_discharge: f64,
    pub soc0_fraction: f64,
    pub soc_min_fraction: f64,
    pub soc_max_fraction: f64,
}

impl Default for EssParams {
    /// 1000 kWh unit with 1000 kW charge/discharge limits, 95 % efficiencies,
    /// no self-discharge, starting half full with a 10 % deep-discharge floor.
    fn default() -> Self {
        Self {
            capacity_kwh: 1000.0,
            p_charge_max_kw: 1000.0,
            p_discharge_max_kw: 1000.0,
            eta_charge: 0.95,
            eta_discharge: 0.95,
            self_discharge: 0.0,
            soc0_fraction: 0.5,
            soc_min_fraction: 0.1,
            soc_max_fraction: 1.0,
        }
    }
}

impl EssParams {
    pub fn validate(&self) -> Result<(), DataError> {
        let fail = |msg: String| Err(DataError::Validation(format!("ess: {msg}")));
        let all = [
            self.capacity_kwh,
            self.p_charge_max_kw,
            self.p_discharge_max_kw,
            self.eta_charge,
            self.eta_discharge,
            self.self_discharge,
            self.soc0_fraction,
            self.soc_min_fraction,
            self.soc_max_fraction,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return fail("parameters must be finite".into());
        }
        if self.capacity_kwh <= 0.0 {
            return fail(format!("capacity {} kWh must be positive", self.capacity_kwh));
        }
        if self.p_charge_max_kw < 0.0 || self.p_discharge_max_kw < 0.0 {
            return fail("power limits must be non-negative".into());
        }
        for (name, eta) in [("eta_charge", self.eta_charge), ("eta_discharge", self.eta_discharge)] {
            if !(eta > 0.0 && eta <= 1.0) {
                return fail(format!("{name} = {eta} outside (0, 1]"));
            }
        }
        if !(0.0..1.0).contains(&self.self_discharge) {
            return fail(format!("self_discharge = {} outside [0, 1)", self.self_discharge));
        }
        let ordered = 0.0 <= self.soc_min_fraction
            && self.soc_min_fraction <= self.soc0_fraction
            && self.soc0_fraction <= self.soc_max_fraction
            && self.soc_max_fraction <= 1.0;
        if !ordered {
            return fail(format!(
                "need 0 <= soc_min ({}) <= soc0 ({}) <= soc_max ({}) <= 1",
                self.soc_min_fraction, self.soc0_fraction, self.soc_max_fraction
            ));
        }
        Ok(())
    }

    pub fn soc0_kwh(&self) -> f64 {
        self.soc0_fraction * self.capacity_kwh
    }

    pub fn soc_min_kwh(&self) -> f64 {
        self.soc_min_fraction * self.capacity_kwh
    }

    pub fn soc_max_kwh(&self) -> f64 {
        self.soc_max_fraction * self.capacity_kwh
    }
}

/// Limits on the exchange with the main grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    pub p_buy_max_kw: f64,
    pub p_sell_max_kw: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            p_buy_max_kw: 5000.0,
            p_sell_max_kw: 5000.0,
        }
    }
}

impl GridParams {
    pub fn validate(&self) -> Result<(), DataError> {
        if !(self.p_buy_max_kw.is_finite() && self.p_buy_max_kw > 0.0) {
            return Err(DataError::Validation(format!(
                "grid: p_buy_max_kw = {} must be positive and finite",
                self.p_buy_max_kw
            )));
        }
        if !(self.p_sell_max_kw.is_finite() && self.p_sell_max_kw >= 0.0) {
            return Err(DataError::Validation(format!(
                "grid: p_sell_max_kw = {} must be non-negative and finite",
                self.p_sell_max_kw
            )));
        }
        Ok(())
    }
}

/// Rated PV power and the two radiation breakpoints of the conversion curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PvParams {
    pub rated_kw: f64,
    pub r_c_wm2: f64,
    pub r_std_wm2: f64,
}

impl PvParams {
    pub const DEFAULT_R_C_WM2: f64 = 150.0;
    pub const DEFAULT_R_STD_WM2: f64 = 1000.0;

    pub fn with_rating(rated_kw: f64) -> Self {
        Self {
            rated_kw,
            r_c_wm2: Self::DEFAULT_R_C_WM2,
            r_std_wm2: Self::DEFAULT_R_STD_WM2,
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if !(self.rated_kw.is_finite() && self.rated_kw >= 0.0) {
            return Err(DataError::Validation(format!(
                "pv: rated_kw = {} must be non-negative",
                self.rated_kw
            )));
        }
        if !(self.r_c_wm2 > 0.0 && self.r_c_wm2 < self.r_std_wm2 && self.r_std_wm2.is_finite()) {
            return Err(DataError::Validation(format!(
                "pv: need 0 < r_c ({}) < r_std ({})",
                self.r_c_wm2, self.r_std_wm2
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        EssParams::default().validate().unwrap();
        GridParams::default().validate().unwrap();
        PvParams::with_rating(200.0).validate().unwrap();
    }

    #[test]
    fn soc_fraction_ordering() {
        let ess = EssParams {
            soc0_fraction: 0.05,
            ..EssParams::default()
        };
        assert!(ess.validate().is_err());
        let ess = EssParams {
            soc_max_fraction: 1.2,
            soc0_fraction: 1.1,
            ..EssParams::default()
        };
        assert!(ess.validate().is_err());
    }

    #[test]
    fn efficiency_and_self_discharge_ranges() {
        assert!(EssParams { eta_charge: 0.0, ..EssParams::default() }.validate().is_err());
        assert!(EssParams { eta_discharge: 1.01, ..EssParams::default() }.validate().is_err());
        assert!(EssParams { self_discharge: 1.0, ..EssParams::default() }.validate().is_err());
    }

    #[test]
    fn pv_breakpoints_must_be_ordered() {
        let pv = PvParams {
            rated_kw: 10.0,
            r_c_wm2: 1000.0,
            r_std_wm2: 150.0,
        };
        assert!(pv.validate().is_err());
    }

    #[test]
    fn grid_limits() {
        assert!(GridParams { p_buy_max_kw: 0.0, p_sell_max_kw: 1.0 }.validate().is_err());
        assert!(GridParams { p_buy_max_kw: 1.0, p_sell_max_kw: 0.0 }.validate().is_ok());
        assert!(GridParams { p_buy_max_kw: f64::INFINITY, p_sell_max_kw: 0.0 }.validate().is_err());
    }
}
