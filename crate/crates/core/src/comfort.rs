//! Occupant thermal comfort: the original PMV heat-balance index, its
//! automotive variant (solar gain, vent-air blending, blower-driven air
//! speed), the seven-point sensation scale and the time-varying comfort zone.
//!
//! Temperatures here are in °C; callers convert from the Kelvin-valued
//! cabin model.

use libm::{exp, fabs, pow, sqrt};
use serde::{Deserialize, Serialize};

use crate::error::ValidationErrors;

/// Reported PMV values are clamped to this magnitude.
pub const PMV_REPORT_LIMIT: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OccupantParams {
    /// Metabolic rate M, W/m².
    pub metabolic_rate: f64,
    /// Effective mechanical power W_mech, W/m².
    pub mech_power: f64,
    /// Clothing insulation I_cl, m²K/W.
    pub clothing_insulation: f64,
    /// Partial water vapour pressure p_a, Pa.
    pub vapor_pressure: f64,
    /// Weight of the cabin air temperature in the perceived air temperature.
    pub alpha1: f64,
    /// Weight of the vent air temperature in the perceived air temperature.
    pub alpha2: f64,
    /// Vent air speed per unit blower flow, (m/s)/(kg/s).
    pub vent_velocity_gain: f64,
    /// Share of the solar irradiance absorbed by the occupant.
    pub solar_fraction: f64,
}

impl Default for OccupantParams {
    fn default() -> Self {
        Self {
            metabolic_rate: 58.15,
            mech_power: 0.0,
            clothing_insulation: 0.155 * 0.5,
            vapor_pressure: 1700.0,
            alpha1: 0.8,
            alpha2: 0.2,
            vent_velocity_gain: 5.0,
            solar_fraction: 0.005,
        }
    }
}

impl OccupantParams {
    pub fn validate(&self) -> Result<(), ValidationErrors> {
        let mut errs = ValidationErrors::new();
        errs.check(self.metabolic_rate > 0.0, "metabolic_rate", "must be > 0");
        errs.check(self.mech_power >= 0.0, "mech_power", "must be >= 0");
        errs.check(
            self.clothing_insulation >= 0.0,
            "clothing_insulation",
            "must be >= 0",
        );
        errs.check(self.vapor_pressure > 0.0, "vapor_pressure", "must be > 0");
        errs.check(self.alpha1 >= 0.0, "alpha1", "must be >= 0");
        errs.check(self.alpha2 >= 0.0, "alpha2", "must be >= 0");
        errs.check(
            fabs(self.alpha1 + self.alpha2 - 1.0) <= 1e-12,
            "alpha2",
            "alpha1 + alpha2 must equal 1",
        );
        errs.check(
            self.vent_velocity_gain > 0.0,
            "vent_velocity_gain",
            "must be > 0",
        );
        errs.check(
            (0.0..=1.0).contains(&self.solar_fraction),
            "solar_fraction",
            "must be within [0, 1]",
        );
        errs.into_result()
    }

    /// Effective radiation reaching the occupant for a given irradiance.
    pub fn effective_radiation(&self, irradiance: f64) -> f64 {
        self.solar_fraction * irradiance
    }
}

/// Air temperature, mean radiant temperature (°C), air speed (m/s) and
/// effective solar gain (W/m²) seen by the occupant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComfortEnv {
    pub t_a: f64,
    pub t_mr: f64,
    pub v_air: f64,
    pub w_rad: f64,
}

/// Comfort zone: constant lower bound, upper bound relaxing exponentially
/// from `ub_initial` to `ub_final`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComfortBoundsSpec {
    pub lb_const: f64,
    pub ub_final: f64,
    pub ub_initial: f64,
    /// Decay time constant of the upper bound, s.
    pub ub_decay_tau: f64,
}

impl Default for ComfortBoundsSpec {
    fn default() -> Self {
        Self {
            lb_const: -0.5,
            ub_final: 0.5,
            ub_initial: 3.0,
            ub_decay_tau: 120.0,
        }
    }
}

impl ComfortBoundsSpec {
    pub fn validate(&self) -> Result<(), ValidationErrors> {
        let mut errs = ValidationErrors::new();
        errs.check(
            self.lb_const < self.ub_final,
            "lb_const",
            "must be < ub_final",
        );
        errs.check(
            self.ub_final <= self.ub_initial,
            "ub_final",
            "must be <= ub_initial",
        );
        errs.check(self.ub_decay_tau > 0.0, "ub_decay_tau", "must be > 0");
        errs.into_result()
    }
}

/// Clothing surface area factor f_cl.
pub fn clothing_area_factor(i_cl: f64) -> f64 {
    if i_cl <= 0.078 {
        1.00 + 1.29 * i_cl
    } else {
        1.05 + 0.645 * i_cl
    }
}

/// Convective heat transfer coefficient h_c, W/(m²K): the larger of the
/// natural and forced convection correlations.
pub fn convective_coeff(t_cl: f64, t_a: f64, v_air: f64) -> f64 {
    let natural = 2.38 * pow(fabs(t_cl - t_a), 0.25);
    let forced = 12.1 * sqrt(v_air);
    if natural > forced {
        natural
    } else {
        forced
    }
}

/// Closed-form clothing surface temperature T_cl, °C.
///
/// The vapour-pressure terms inside the braces use kPa; everywhere else
/// p_a stays in Pa.
pub fn cloth_surface_temp(occ: &OccupantParams, t_a: f64) -> f64 {
    let m = occ.metabolic_rate;
    let net = m - occ.mech_power;
    let pa = occ.vapor_pressure / 1000.0;
    35.7 - 0.0275 * net
        - occ.clothing_insulation
            * (net
                - 3.05 * (5.73 - 0.007 * net - pa)
                - 0.42 * (net - 58.15)
                - 0.0173 * m * (5.87 - pa)
                - 0.0014 * m * (34.0 - t_a))
}

/// Dry (radiative + convective) heat loss H from the clothed body, W/m².
pub fn dry_heat_loss(t_cl: f64, env: &ComfortEnv, f_cl: f64, h_c: f64) -> f64 {
    let cl = t_cl + 273.0;
    let mr = env.t_mr + 273.0;
    3.96e-8 * f_cl * (cl * cl * cl * cl - mr * mr * mr * mr) + f_cl * h_c * (t_cl - env.t_a)
}

/// Evaporative heat exchange at the skin E_c, W/m². The sweating term is
/// clamped at zero below the 58.15 W/m² threshold.
pub fn evaporative_heat(occ: &OccupantParams) -> f64 {
    let net = occ.metabolic_rate - occ.mech_power;
    let sweat = 0.42 * (net - 58.15);
    3.05e-3 * (5733.0 - 6.99 * net - occ.vapor_pressure) + if sweat > 0.0 { sweat } else { 0.0 }
}

/// Respiratory convective heat exchange C_res, W/m².
pub fn respiratory_convective(occ: &OccupantParams, t_a: f64) -> f64 {
    0.0014 * occ.metabolic_rate * (34.0 - t_a)
}

/// Respiratory evaporative heat exchange E_res, W/m².
pub fn respiratory_evaporative(occ: &OccupantParams) -> f64 {
    1.7e-5 * occ.metabolic_rate * (5867.0 - occ.vapor_pressure)
}

fn sensitivity(m: f64) -> f64 {
    0.303 * exp(-0.036 * m) + 0.028
}

/// Heat-balance PMV with an extra gain on the metabolic side.
fn pmv_with_gain(occ: &OccupantParams, env: &ComfortEnv, gain: f64) -> f64 {
    let m = occ.metabolic_rate;
    let t_cl = cloth_surface_temp(occ, env.t_a);
    let f_cl = clothing_area_factor(occ.clothing_insulation);
    let h_c = convective_coeff(t_cl, env.t_a, env.v_air);
    let losses = dry_heat_loss(t_cl, env, f_cl, h_c)
        + evaporative_heat(occ)
        + respiratory_convective(occ, env.t_a)
        + respiratory_evaporative(occ);
    sensitivity(m) * ((m - occ.mech_power + gain) - losses)
}

/// Original (indoor) PMV index. `env.w_rad` is ignored.
///
/// The value is the raw heat-balance index; use [`clamp_for_report`] before
/// presenting it on the seven-point scale.
pub fn pmv_original(occ: &OccupantParams, env: &ComfortEnv) -> f64 {
    pmv_with_gain(occ, env, 0.0)
}

/// Perceived air temperature, a blend of cabin bulk air and vent air.
pub fn blended_air_temp(t_cab: f64, t_ain: f64, occ: &OccupantParams) -> f64 {
    occ.alpha1 * t_cab + occ.alpha2 * t_ain
}

/// Air speed at the occupant, proportional to blower flow.
pub fn vent_air_velocity(m_bl: f64, occ: &OccupantParams) -> f64 {
    occ.vent_velocity_gain * m_bl
}

/// Automotive PMV: no mechanical work, the interior surfaces act as the
/// mean radiant temperature, the occupant feels a blend of cabin and vent
/// air at a blower-driven speed and absorbs `w_rad` W/m² of solar gain.
///
/// All temperatures in °C.
pub fn pmv_modified(
    t_cab: f64,
    t_ain: f64,
    t_int: f64,
    m_bl: f64,
    w_rad: f64,
    occ: &OccupantParams,
) -> f64 {
    let seated = OccupantParams {
        mech_power: 0.0,
        ..occ.clone()
    };
    let env = ComfortEnv {
        t_a: blended_air_temp(t_cab, t_ain, occ),
        t_mr: t_int,
        v_air: vent_air_velocity(m_bl, occ),
        w_rad,
    };
    pmv_with_gain(&seated, &env, w_rad)
}

pub fn clamp_for_report(y: f64) -> f64 {
    y.clamp(-PMV_REPORT_LIMIT, PMV_REPORT_LIMIT)
}

/// Seven-point thermal sensation scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SensationLevel {
    Cold,
    Cool,
    SlightlyCool,
    Neutral,
    SlightlyWarm,
    Warm,
    Hot,
}

impl SensationLevel {
    pub const ALL: [SensationLevel; 7] = [
        SensationLevel::Cold,
        SensationLevel::Cool,
        SensationLevel::SlightlyCool,
        SensationLevel::Neutral,
        SensationLevel::SlightlyWarm,
        SensationLevel::Warm,
        SensationLevel::Hot,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SensationLevel::Cold => "Cold",
            SensationLevel::Cool => "Cool",
            SensationLevel::SlightlyCool => "Slightly cool",
            SensationLevel::Neutral => "Neutral",
            SensationLevel::SlightlyWarm => "Slightly warm",
            SensationLevel::Warm => "Warm",
            SensationLevel::Hot => "Hot",
        }
    }

    /// Integer anchor of the level on the PMV scale.
    pub fn anchor(self) -> i32 {
        self as i32 - 3
    }
}

impl core::fmt::Display for SensationLevel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.label())
    }
}

/// Nearest sensation level (half-way values round away from zero), clamped
/// to the ±3 ends of the scale. NaN maps to `Neutral`.
pub fn sensation_level(y: f64) -> SensationLevel {
    let r = libm::round(y.clamp(-3.0, 3.0));
    let idx = if r.is_nan() { 3 } else { (r as i32 + 3) as usize };
    SensationLevel::ALL[idx]
}

/// Comfort bounds `(lb, ub)` at time `t` seconds.
pub fn comfort_bounds(t: f64, spec: &ComfortBoundsSpec) -> (f64, f64) {
    let ub = spec.ub_final + (spec.ub_initial - spec.ub_final) * exp(-t / spec.ub_decay_tau);
    (spec.lb_const, ub)
}
