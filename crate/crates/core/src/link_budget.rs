//! Ka-band ISL link budget for cislunar ranges.

use serde::{Deserialize, Serialize};

/// Speed of light, m/s, rounded as in the usual Ka-band budget tables.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;
/// −10·log10(Boltzmann constant), dB.
pub const BOLTZMANN_DB: f64 = 228.6;

pub const DEFAULT_T_SYS_K: f64 = 290.0;
pub const DEFAULT_L_ADC_DB: f64 = 3.0;

/// Free-space loss 20·log10(λ / 4πd) in dB; negative for any realistic range.
pub fn free_space_loss(frequency_ghz: f64, distance_km: f64) -> f64 {
    let lambda = SPEED_OF_LIGHT / (frequency_ghz * 1e9);
    20.0 * (lambda / (4.0 * std::f64::consts::PI * distance_km * 1e3)).log10()
}

pub fn received_power(eirp_dbw: f64, lf_db: f64, rx_gain_dbi: f64) -> f64 {
    eirp_dbw + lf_db + rx_gain_dbi
}

/// Carrier-to-noise density in dB-Hz.
pub fn cn0(pr_dbw: f64, t_sys_k: f64, l_adc_db: f64) -> f64 {
    pr_dbw - 10.0 * t_sys_k.log10() + BOLTZMANN_DB - l_adc_db
}

pub fn link_feasible(cn0_dbhz: f64, threshold_dbhz: f64) -> bool {
    cn0_dbhz >= threshold_dbhz
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudgetInput {
    pub frequency_ghz: f64,
    pub distance_km: f64,
    pub eirp_dbw: f64,
    pub rx_gain_dbi: f64,
    pub t_sys_k: f64,
    pub l_adc_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub input: LinkBudgetInput,
    pub wavelength_m: f64,
    pub free_space_loss_db: f64,
    pub received_power_dbw: f64,
    pub noise_density_dbw_hz: f64,
    pub cn0_dbhz: f64,
}

impl LinkBudgetInput {
    pub fn new(frequency_ghz: f64, distance_km: f64, eirp_dbw: f64, rx_gain_dbi: f64) -> Self {
        LinkBudgetInput {
            frequency_ghz,
            distance_km,
            eirp_dbw,
            rx_gain_dbi,
            t_sys_k: DEFAULT_T_SYS_K,
            l_adc_db: DEFAULT_L_ADC_DB,
        }
    }

    /// All intermediate terms of the budget.
    pub fn evaluate(&self) -> LinkBudget {
        let lf = free_space_loss(self.frequency_ghz, self.distance_km);
        let pr = received_power(self.eirp_dbw, lf, self.rx_gain_dbi);
        LinkBudget {
            input: *self,
            wavelength_m: SPEED_OF_LIGHT / (self.frequency_ghz * 1e9),
            free_space_loss_db: lf,
            received_power_dbw: pr,
            noise_density_dbw_hz: 10.0 * self.t_sys_k.log10() - BOLTZMANN_DB,
            cn0_dbhz: cn0(pr, self.t_sys_k, self.l_adc_db),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn ka_band_cislunar_loss() {
        assert_abs_diff_eq!(free_space_loss(26.5, 450_000.0), -233.97, epsilon = 0.01);
        assert_abs_diff_eq!(free_space_loss(40.0, 450_000.0), -237.54, epsilon = 0.01);
        let f = 26.5;
        let lambda_km = SPEED_OF_LIGHT / (f * 1e9) / 1e3;
        assert_abs_diff_eq!(free_space_loss(f, lambda_km / (4.0 * std::f64::consts::PI)), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn power_and_density_examples() {
        assert_abs_diff_eq!(received_power(46.0, -237.54, 25.0), -166.54, epsilon = 1e-12);
        assert_abs_diff_eq!(received_power(48.0, -233.97, 27.0), -158.97, epsilon = 1e-12);
        assert_eq!(received_power(0.0, 0.0, 0.0), 0.0);
        assert_abs_diff_eq!(cn0(-166.54, 290.0, 3.0), 34.44, epsilon = 0.01);
        assert_abs_diff_eq!(cn0(-158.97, 290.0, 3.0), 42.01, epsilon = 0.01);
        assert_abs_diff_eq!(cn0(-228.6, 1.0, 0.0), 0.0, epsilon = 1e-12);
        assert!(link_feasible(34.44, 25.0));
        assert!(!link_feasible(9.0, 10.0));
        assert!(link_feasible(10.0, 10.0));
    }

    #[test]
    fn corner_grid_stays_in_band() {
        for f in [26.5, 40.0] {
            for eirp in [46.0, 48.0] {
                for g in [25.0, 27.0] {
                    let c = LinkBudgetInput::new(f, 450_000.0, eirp, g).evaluate().cn0_dbhz;
                    assert!((34.44 - 0.02..=42.01 + 0.02).contains(&c), "{f} {eirp} {g} -> {c}");
                }
            }
        }
        let lo = LinkBudgetInput::new(40.0, 450_000.0, 46.0, 25.0).evaluate();
        let hi = LinkBudgetInput::new(26.5, 450_000.0, 48.0, 27.0).evaluate();
        assert_abs_diff_eq!(lo.cn0_dbhz, 34.44, epsilon = 0.02);
        assert_abs_diff_eq!(hi.cn0_dbhz, 42.01, epsilon = 0.02);
    }

    proptest! {
        #[test]
        fn cn0_is_monotone(d in 1e3f64..1e6, t in 10f64..1000.0, e in 0f64..60.0, g in 0f64..40.0) {
            let base = cn0(received_power(e, free_space_loss(30.0, d), g), t, 3.0);
            prop_assert!(cn0(received_power(e, free_space_loss(30.0, d * 1.01), g), t, 3.0) < base);
            prop_assert!(cn0(received_power(e, free_space_loss(30.0, d), g), t * 1.01, 3.0) < base);
            prop_assert!(cn0(received_power(e + 0.1, free_space_loss(30.0, d), g), t, 3.0) > base);
            prop_assert!(cn0(received_power(e, free_space_loss(30.0, d), g + 0.1), t, 3.0) > base);
        }
    }
}
