//! Physical-layer math: SINR with co-channel UAV interference, Shannon rate,
//! per-UE capacity and network intensity.
//!
//! Everything here works in the linear domain (milliwatts, unitless gains).
//! Decibel values are converted once, when [`RadioParams`] is built.

use crate::error::{invalid, Error, Result};
use core::f64::consts::PI;

/// Thermal noise density in dBm/Hz at room temperature.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

/// Speed of light in m/s, used for propagation delay.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn dbm_to_mw(dbm: f64) -> f64 {
    libm::pow(10.0, dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * libm::log10(mw)
}

pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * libm::log10(lin)
}

/// Noise floor over `bandwidth_hz`, in milliwatts.
pub fn thermal_noise_mw(bandwidth_hz: f64) -> f64 {
    dbm_to_mw(THERMAL_NOISE_DBM_PER_HZ + 10.0 * libm::log10(bandwidth_hz))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    /// Transmit power, mW.
    pub tx_power_q: f64,
    /// Antenna/transmission constant, linear.
    pub antenna_w: f64,
    /// Thermal noise, mW.
    pub thermal_noise_v0: f64,
    pub pathloss_alpha: f64,
    /// System bandwidth, Hz.
    pub bandwidth_beta: f64,
    /// Number of orthogonal bands the bandwidth is split into.
    pub num_bands_n: u32,
    pub intensity_const_c: f64,
}

impl RadioParams {
    /// Builds parameters from the decibel-domain values of a scenario file.
    /// `noise_dbm` of `None` selects the thermal floor over `bandwidth_hz`.
    pub fn from_db(
        tx_power_dbm: f64,
        antenna_db: f64,
        noise_dbm: Option<f64>,
        pathloss_alpha: f64,
        bandwidth_hz: f64,
        num_bands: u32,
        intensity_const: f64,
    ) -> Result<Self> {
        let params = RadioParams {
            tx_power_q: dbm_to_mw(tx_power_dbm),
            antenna_w: db_to_linear(antenna_db),
            thermal_noise_v0: match noise_dbm {
                Some(dbm) => dbm_to_mw(dbm),
                None => thermal_noise_mw(bandwidth_hz),
            },
            pathloss_alpha,
            bandwidth_beta: bandwidth_hz,
            num_bands_n: num_bands,
            intensity_const_c: intensity_const,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, "must be finite and > 0"))
            }
        }
        positive("q", self.tx_power_q)?;
        positive("w", self.antenna_w)?;
        positive("beta", self.bandwidth_beta)?;
        positive("c", self.intensity_const_c)?;
        if !(self.thermal_noise_v0.is_finite() && self.thermal_noise_v0 >= 0.0) {
            return Err(invalid("v0", "must be finite and >= 0"));
        }
        if !(self.pathloss_alpha.is_finite() && self.pathloss_alpha >= 2.0) {
            return Err(invalid("alpha", "must be >= 2"));
        }
        if self.num_bands_n == 0 {
            return Err(invalid("n", "must be >= 1"));
        }
        Ok(())
    }

    /// Received power at `distance` metres, mW.
    pub fn received_power(&self, distance: f64) -> f64 {
        self.tx_power_q * self.antenna_w * libm::pow(distance, -self.pathloss_alpha)
    }

    /// Bandwidth of a single orthogonal band, Hz.
    pub fn band_width(&self) -> f64 {
        self.bandwidth_beta / self.num_bands_n as f64
    }
}

/// Serving distance plus one distance per co-channel interferer.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGeometry<'a> {
    pub distance_g: f64,
    pub interferer_distances: &'a [f64],
}

impl LinkGeometry<'_> {
    pub fn validate(&self) -> Result<()> {
        let ok = |d: f64| d.is_finite() && d > 0.0;
        if !ok(self.distance_g) {
            return Err(invalid("distance_g", "must be finite and > 0"));
        }
        if !self.interferer_distances.iter().all(|&d| ok(d)) {
            return Err(invalid("interferer_distances", "every distance must be finite and > 0"));
        }
        Ok(())
    }
}

pub fn sinr(params: &RadioParams, geom: &LinkGeometry<'_>) -> Result<f64> {
    geom.validate()?;
    sinr_with_noise(params, geom, params.thermal_noise_v0)
}

/// SIR: the SINR expression with the noise term dropped.
pub fn sir(params: &RadioParams, geom: &LinkGeometry<'_>) -> Result<f64> {
    geom.validate()?;
    sinr_with_noise(params, geom, 0.0)
}

fn sinr_with_noise(params: &RadioParams, geom: &LinkGeometry<'_>, noise: f64) -> Result<f64> {
    let signal = params.received_power(geom.distance_g);
    let interference: f64 = geom
        .interferer_distances
        .iter()
        .map(|&d| params.received_power(d))
        .sum();
    let denom = interference + noise;
    if denom <= 0.0 {
        return Err(Error::Domain("noiseless link without interferers has unbounded SINR"));
    }
    Ok(signal / denom)
}

/// Shannon rate over the full system bandwidth, bit/s.
pub fn data_rate(params: &RadioParams, sinr: f64) -> Result<f64> {
    if !(sinr >= 0.0) {
        return Err(Error::Domain("SINR must be non-negative"));
    }
    Ok(params.bandwidth_beta * libm::log2(1.0 + sinr))
}

/// Capacity left to one UE when `below_threshold_y` users share the band set.
pub fn per_ue_capacity(params: &RadioParams, sir: f64, below_threshold_y: u32) -> Result<f64> {
    if below_threshold_y == 0 {
        return Err(Error::Domain("no users counted below the SIR threshold"));
    }
    if !(sir > 0.0) {
        return Err(Error::Domain("SIR must be positive"));
    }
    let share = params.bandwidth_beta / (below_threshold_y as f64 * params.num_bands_n as f64);
    Ok(share * libm::log2(1.0 + sir))
}

/// Network intensity seen by a UE at serving distance `distance_g`.
///
/// Uses the exponent `alpha` on `1/sir`. The closed-form capacity in
/// [`per_ue_capacity_intensity_form`] uses `-alpha/2` on the inverse
/// quantity, so the two do not compose algebraically; both are kept as stated.
pub fn network_intensity(params: &RadioParams, distance_g: f64, sir: f64) -> Result<f64> {
    if !(distance_g > 0.0) {
        return Err(invalid("distance_g", "must be > 0"));
    }
    if !(sir > 0.0) {
        return Err(Error::Domain("SIR must be positive"));
    }
    let geometric = params.intensity_const_c / (PI * distance_g * distance_g);
    Ok(geometric * libm::pow(1.0 / sir, params.pathloss_alpha))
}

/// Per-UE capacity estimated from the request intensity instead of a measured SIR.
pub fn per_ue_capacity_intensity_form(
    params: &RadioParams,
    arrival_lambda: f64,
    distance_g: f64,
    below_threshold_y: u32,
) -> Result<f64> {
    if !(arrival_lambda > 0.0) {
        return Err(invalid("arrival_lambda", "must be > 0"));
    }
    if !(distance_g > 0.0) {
        return Err(invalid("distance_g", "must be > 0"));
    }
    if below_threshold_y == 0 {
        return Err(Error::Domain("no users counted below the SIR threshold"));
    }
    let load = arrival_lambda * PI * distance_g * distance_g / params.intensity_const_c;
    let effective = libm::pow(load, -params.pathloss_alpha / 2.0);
    let share = params.bandwidth_beta / (below_threshold_y as f64 * params.num_bands_n as f64);
    Ok(share * libm::log2(1.0 + effective))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::vec::Vec;

    fn unit(alpha: f64, v0: f64) -> RadioParams {
        RadioParams {
            tx_power_q: 1.0,
            antenna_w: 1.0,
            thermal_noise_v0: v0,
            pathloss_alpha: alpha,
            bandwidth_beta: 10e6,
            num_bands_n: 2,
            intensity_const_c: PI,
        }
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn sinr_unit_normalized() {
        let g = LinkGeometry { distance_g: 1.0, interferer_distances: &[] };
        assert_eq!(sinr(&unit(4.0, 1.0), &g).unwrap(), 1.0);
    }

    #[test]
    fn sinr_symmetric_interferer() {
        let g = LinkGeometry { distance_g: 250.0, interferer_distances: &[250.0] };
        assert_eq!(sinr(&unit(4.0, 0.0), &g).unwrap(), 1.0);
    }

    #[test]
    fn sinr_table_defaults_at_range_edge() {
        // 35 dBm, -11 dB, -104 dBm floor, 500 m: evaluated independently at 30 digits.
        let p = RadioParams::from_db(35.0, -11.0, None, 4.0, 10e6, 2, 1.0).unwrap();
        assert!(close(p.thermal_noise_v0, 3.981_071_705_534_972_5e-11, 1e-12));
        let g = LinkGeometry { distance_g: 500.0, interferer_distances: &[] };
        assert!(close(sinr(&p, &g).unwrap(), 100.953_175_116_830_92, 1e-12));
    }

    #[test]
    fn sinr_noiseless_isolated_is_domain_error() {
        let g = LinkGeometry { distance_g: 10.0, interferer_distances: &[] };
        assert!(matches!(sinr(&unit(4.0, 0.0), &g), Err(Error::Domain(_))));
        assert!(matches!(sir(&unit(4.0, 1.0), &g), Err(Error::Domain(_))));
    }

    #[test]
    fn sinr_rejects_bad_geometry() {
        let g = LinkGeometry { distance_g: 0.0, interferer_distances: &[] };
        assert!(sinr(&unit(4.0, 1.0), &g).is_err());
        let g = LinkGeometry { distance_g: 1.0, interferer_distances: &[-3.0] };
        assert!(sinr(&unit(4.0, 1.0), &g).is_err());
    }

    #[test]
    fn data_rate_examples() {
        let p = unit(4.0, 1.0);
        assert_eq!(data_rate(&p, 1.0).unwrap(), 10e6);
        assert_eq!(data_rate(&p, 0.0).unwrap(), 0.0);
        assert_eq!(data_rate(&p, 3.0).unwrap(), 20e6);
        assert!(data_rate(&p, -0.1).is_err());
    }

    #[test]
    fn per_ue_capacity_examples() {
        let p = unit(4.0, 1.0);
        assert_eq!(per_ue_capacity(&p, 3.0, 1).unwrap(), 10e6);
        assert_eq!(per_ue_capacity(&p, 1.0, 2).unwrap(), 2.5e6);
        assert!(per_ue_capacity(&p, 1.0, 0).is_err());
        assert!(per_ue_capacity(&p, 0.0, 1).is_err());
        let tiny = per_ue_capacity(&RadioParams { num_bands_n: 1, ..p }, 1e-12, 1).unwrap();
        assert!(tiny < 1e-4);
    }

    #[test]
    fn intensity_examples() {
        let p = unit(4.0, 1.0);
        assert!(close(network_intensity(&p, 1.0, 1.0).unwrap(), 1.0, 1e-15));
        assert!(close(network_intensity(&p, 2.0, 1.0).unwrap(), 0.25, 1e-15));
        let p1 = RadioParams { intensity_const_c: 1.0, ..p };
        assert!(close(network_intensity(&p1, 1.0, 2.0).unwrap(), 0.019_894_367_886_486_917, 1e-14));
    }

    #[test]
    fn intensity_form_examples() {
        let p = unit(4.0, 1.0);
        // lambda * pi * G^2 / c == 1 with c = pi, G = 1, lambda = 1.
        assert!(close(per_ue_capacity_intensity_form(&p, 1.0, 1.0, 1).unwrap(), 5e6, 1e-15));
        assert!(per_ue_capacity_intensity_form(&p, 1e12, 1e3, 1).unwrap() < 1e-6);
        // lambda * pi * G^2 / c == 4.
        let v = per_ue_capacity_intensity_form(&p, 4.0, 1.0, 1).unwrap();
        assert!(close(v, 437_314.206_251_697_04, 1e-12));
    }

    #[test]
    fn db_round_trip() {
        for dbm in [-174.0, -104.0, -11.0, 0.0, 35.0, 60.0] {
            let back = mw_to_dbm(dbm_to_mw(dbm));
            assert!((back - dbm).abs() <= 1e-9 * dbm.abs().max(1.0));
            assert!((linear_to_db(db_to_linear(dbm)) - dbm).abs() <= 1e-9 * dbm.abs().max(1.0));
        }
    }

    #[test]
    fn rate_is_concave_on_grid() {
        let p = unit(4.0, 1.0);
        let pts: Vec<f64> = (0..100).map(|i| data_rate(&p, i as f64 * 0.5).unwrap()).collect();
        for w in pts.windows(3) {
            assert!(w[2] - 2.0 * w[1] + w[0] <= 1e-6);
            assert!(w[1] > w[0]);
        }
    }

    proptest! {
        #[test]
        fn sinr_decreases_with_distance(
            d in 1.0f64..2000.0, extra in 0.1f64..500.0,
            inter in proptest::collection::vec(1.0f64..3000.0, 0..5),
        ) {
            let p = unit(4.0, 1e-12);
            let near = sinr(&p, &LinkGeometry { distance_g: d, interferer_distances: &inter }).unwrap();
            let far = sinr(&p, &LinkGeometry { distance_g: d + extra, interferer_distances: &inter }).unwrap();
            prop_assert!(far < near);
        }

        #[test]
        fn capacity_halves_when_users_double(sir in 1e-3f64..1e4, k in 1u32..1000) {
            let p = unit(4.0, 1.0);
            let a = per_ue_capacity(&p, sir, k).unwrap();
            let b = per_ue_capacity(&p, sir, 2 * k).unwrap();
            prop_assert_eq!(b, a / 2.0);
        }
    }
}
