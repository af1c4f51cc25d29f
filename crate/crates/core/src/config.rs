//! Scenario parameters for the engine. Text parsing lives in the `uavsim` crate.

use crate::error::{invalid, Result};
use crate::radio::{dbm_to_mw, RadioParams};
use crate::routing::Gammas;
use crate::topology::{Area, UavSpec};
use alloc::vec;
use alloc::vec::Vec;

/// Inclusive count range such as `100-1000`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountRange {
    pub lo: u32,
    pub hi: u32,
}

impl CountRange {
    pub const fn new(lo: u32, hi: u32) -> Self {
        CountRange { lo, hi }
    }
}

/// A scripted UAV failure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScriptedFailure {
    pub uav: u32,
    pub at: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub area_a: Area,
    /// MBS per km^2. The engine simulates a single cell.
    pub mbs_density_m: f64,
    pub zones_k: u32,
    pub uavs_u: CountRange,
    pub radio_range_g: f64,
    /// Offered traffic per UE, kbit/s.
    pub offered_mu_kbps: f64,
    pub pathloss_alpha: f64,
    pub bandwidth_beta_mhz: f64,
    pub ues_e: CountRange,
    pub max_cm: u32,
    pub max_cu: u32,
    pub bands_n: u32,
    /// Service requests per UE per second.
    pub service_s: f64,
    pub antenna_w_db: f64,
    pub tx_power_q_dbm: f64,

    pub seeds: u32,
    pub horizon: f64,
    pub epoch: f64,
    pub gammas: Gammas,
    pub v0_dbm: f64,
    pub tu: u32,
    pub rc: u32,
    pub re: u32,
    pub standby: u32,
    pub hello: f64,
    pub missed_hellos: u32,
    /// Route table expiry, in hello intervals.
    pub route_expiry: u32,
    pub launch_delay: f64,
    pub kappa: f64,
    pub reset_threshold: f64,
    pub cell_radius: f64,
    pub mbs_ue_capacity: u32,
    pub queue_capacity: u32,
    /// Processing cost per allocation iteration or route candidate, seconds.
    pub processing_cost: f64,
    pub intensity_c: f64,
    pub propagation: bool,
    pub sweep_e: Vec<u32>,
    pub failures: Vec<ScriptedFailure>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            area_a: Area { width: 10_000.0, height: 10_000.0 },
            mbs_density_m: 10.0,
            zones_k: 12,
            uavs_u: CountRange::new(1, 10),
            radio_range_g: 500.0,
            offered_mu_kbps: 256.0,
            pathloss_alpha: 4.0,
            bandwidth_beta_mhz: 10.0,
            ues_e: CountRange::new(100, 1000),
            max_cm: 5,
            max_cu: 5,
            bands_n: 4,
            service_s: 2.0,
            antenna_w_db: -11.0,
            tx_power_q_dbm: 35.0,

            seeds: 10,
            horizon: 60.0,
            epoch: 1.0,
            gammas: Gammas::default(),
            v0_dbm: -104.0,
            tu: 20,
            rc: 20,
            re: 1,
            standby: 1,
            hello: 1.0,
            missed_hellos: 3,
            route_expiry: 3,
            launch_delay: 5.0,
            kappa: 0.1,
            reset_threshold: 0.5,
            cell_radius: 1000.0,
            mbs_ue_capacity: 400,
            queue_capacity: 200,
            processing_cost: 0.001,
            intensity_c: 1.0,
            propagation: true,
            sweep_e: vec![100, 250, 500, 750, 1000],
            failures: Vec::new(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, "must be a finite number > 0"))
            }
        };
        let finite = |name: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, "must be finite"))
            }
        };
        positive("a", self.area_a.width)?;
        positive("a", self.area_a.height)?;
        positive("m", self.mbs_density_m)?;
        if self.zones_k == 0 {
            return Err(invalid("k", "must be >= 1"));
        }
        if self.uavs_u.lo > self.uavs_u.hi {
            return Err(invalid("u", "range is empty"));
        }
        if self.ues_e.lo > self.ues_e.hi {
            return Err(invalid("e", "range is empty"));
        }
        positive("g", self.radio_range_g)?;
        positive("mu", self.offered_mu_kbps)?;
        positive("alpha", self.pathloss_alpha)?;
        positive("beta", self.bandwidth_beta_mhz)?;
        if self.bands_n == 0 {
            return Err(invalid("n", "must be >= 1"));
        }
        positive("s", self.service_s)?;
        finite("w", self.antenna_w_db)?;
        finite("q", self.tx_power_q_dbm)?;
        if self.seeds == 0 {
            return Err(invalid("seeds", "must be >= 1"));
        }
        positive("horizon", self.horizon)?;
        positive("epoch", self.epoch)?;
        for (name, g) in [("gamma1", self.gammas.0), ("gamma2", self.gammas.1), ("gamma3", self.gammas.2)] {
            if !(g.is_finite() && g >= 0.0) {
                return Err(invalid(name, "must be finite and >= 0"));
            }
        }
        finite("v0", self.v0_dbm)?;
        if self.tu == 0 {
            return Err(invalid("tu", "must be >= 1"));
        }
        if self.re == 0 {
            return Err(invalid("re", "must be >= 1"));
        }
        positive("hello", self.hello)?;
        if self.missed_hellos == 0 {
            return Err(invalid("missed_hellos", "must be >= 1"));
        }
        if self.route_expiry == 0 {
            return Err(invalid("route_expiry", "must be >= 1"));
        }
        if !(self.launch_delay.is_finite() && self.launch_delay >= 0.0) {
            return Err(invalid("launch_delay", "must be finite and >= 0"));
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(invalid("kappa", "must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&self.reset_threshold) {
            return Err(invalid("reset_threshold", "must lie in [0, 1]"));
        }
        positive("cell_radius", self.cell_radius)?;
        if 2.0 * self.cell_radius > self.area_a.width.min(self.area_a.height) {
            return Err(invalid("cell_radius", "cell does not fit inside the area"));
        }
        if self.queue_capacity == 0 {
            return Err(invalid("queue_capacity", "must be >= 1"));
        }
        if !(self.processing_cost.is_finite() && self.processing_cost >= 0.0) {
            return Err(invalid("processing_cost", "must be finite and >= 0"));
        }
        positive("c", self.intensity_c)?;
        if self.sweep_e.is_empty() {
            return Err(invalid("sweep_e", "needs at least one value"));
        }
        for f in &self.failures {
            if !(f.at.is_finite() && f.at >= 0.0) {
                return Err(invalid("fail", "failure time must be finite and >= 0"));
            }
        }
        self.radio()?;
        Ok(())
    }

    pub fn radio(&self) -> Result<RadioParams> {
        RadioParams::from_db(
            self.tx_power_q_dbm,
            self.antenna_w_db,
            Some(self.v0_dbm),
            self.pathloss_alpha,
            self.bandwidth_beta_mhz * 1e6,
            self.bands_n,
            self.intensity_c,
        )
    }

    pub fn uav_spec(&self) -> UavSpec {
        UavSpec {
            radio_range_g: self.radio_range_g,
            resources_rc: self.rc,
            ue_resource_re: self.re,
            total_user_slots_tu: self.tu,
        }
    }

    /// Mean message size in bits: the offered rate spread over the request rate.
    pub fn mean_message_bits(&self) -> f64 {
        self.offered_mu_kbps * 1000.0 / self.service_s
    }

    /// Thermal-floor noise in mW.
    pub fn noise_mw(&self) -> f64 {
        dbm_to_mw(self.v0_dbm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    #[test]
    fn defaults_validate() {
        let c = ScenarioConfig::default();
        c.validate().unwrap();
        assert_eq!(c.mean_message_bits(), 128_000.0);
        let r = c.radio().unwrap();
        assert!((r.tx_power_q - 3162.277_660_168_379_5).abs() < 1e-9);
        assert_eq!(r.bandwidth_beta, 10e6);
    }

    #[test]
    fn bad_values_name_the_key() {
        let mut c = ScenarioConfig::default();
        c.ues_e = CountRange::new(10, 5);
        assert!(matches!(c.validate(), Err(Error::InvalidParam { name: "e", .. })));
        let mut c = ScenarioConfig::default();
        c.bands_n = 0;
        assert!(matches!(c.validate(), Err(Error::InvalidParam { name: "n", .. })));
        let mut c = ScenarioConfig::default();
        c.cell_radius = 6000.0;
        assert!(matches!(c.validate(), Err(Error::InvalidParam { name: "cell_radius", .. })));
    }
}
