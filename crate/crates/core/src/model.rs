//! Control-oriented cabin/evaporator dynamics, A/C power models and the
//! surrogate plant used for closed-loop testing.
//!
//! All temperatures in this module are in Kelvin.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, ValidationErrors};

/// Lowest temperature any state may take before the model is considered diverged.
pub const MIN_TEMP_K: f64 = 230.0;
/// Highest temperature any state may take before the model is considered diverged.
pub const MAX_TEMP_K: f64 = 360.0;

/// Parameters of the discrete-time A/C model and of the power estimates
/// built on top of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcParams {
    /// Interior-to-cabin coupling.
    pub gamma1: f64,
    /// Shell-to-cabin coupling.
    pub gamma2: f64,
    /// Vent air coupling, per kg/s of blower flow.
    pub gamma3: f64,
    pub gamma4: f64,
    /// Evaporator tracking gain (negative for a stable loop).
    pub gamma5: f64,
    pub gamma6: f64,
    /// Vent air temperature rise per kg/s of blower flow (K per kg/s).
    pub gamma7: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    /// Model sample time in seconds.
    pub sample_time: f64,
    /// Blower power coefficient in W per (kg/s)^3.
    pub blower_power_coeff: f64,
    /// Coefficient of performance of the refrigerant loop at standstill.
    pub cop_base: f64,
    /// `(vehicle speed m/s, efficiency multiplier)` knots, interpolated linearly.
    pub eta_speed_knots: Vec<(f64, f64)>,
    /// Specific heat of air, J/(kg K).
    pub air_cp: f64,
}

impl Default for AcParams {
    fn default() -> Self {
        Self {
            gamma1: 0.02,
            gamma2: 0.01,
            gamma3: 0.25,
            gamma4: 1.0,
            gamma5: -0.3,
            gamma6: 1.0,
            gamma7: 30.0,
            tau1: 0.0,
            tau2: 0.0,
            tau3: 0.0,
            sample_time: 5.0,
            blower_power_coeff: 6.0e4,
            cop_base: 2.5,
            eta_speed_knots: vec![(0.0, 1.0), (30.0, 1.3)],
            air_cp: 1005.0,
        }
    }
}

impl AcParams {
    pub fn validate(&self) -> Result<(), ValidationErrors> {
        let mut errs = ValidationErrors::new();
        let all = [
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("gamma3", self.gamma3),
            ("gamma4", self.gamma4),
            ("gamma5", self.gamma5),
            ("gamma6", self.gamma6),
            ("gamma7", self.gamma7),
            ("tau1", self.tau1),
            ("tau2", self.tau2),
            ("tau3", self.tau3),
        ];
        for (name, v) in all {
            errs.check(v.is_finite(), name, "must be finite");
        }
        errs.check(self.sample_time > 0.0, "sample_time", "must be > 0");
        errs.check(
            self.blower_power_coeff > 0.0,
            "blower_power_coeff",
            "must be > 0",
        );
        errs.check(self.cop_base > 0.0, "cop_base", "must be > 0");
        errs.check(self.air_cp > 0.0, "air_cp", "must be > 0");
        errs.check(
            self.gamma1 + self.gamma2 + self.gamma3 * ControlInput::M_BL_MAX < 1.0,
            "gamma1",
            "gamma1 + gamma2 + 0.17*gamma3 must be < 1 (cabin contraction)",
        );
        errs.check(
            (self.gamma4 + self.gamma5).abs() < 1.0,
            "gamma5",
            "|gamma4 + gamma5| must be < 1 (evaporator stability)",
        );
        let knots = &self.eta_speed_knots;
        if knots.is_empty() {
            errs.push("eta_speed_knots", "must contain at least one knot");
        } else {
            errs.check(
                knots[0].1 == 1.0,
                "eta_speed_knots",
                "first multiplier must be exactly 1",
            );
            errs.check(
                knots.iter().all(|&(v, eta)| v.is_finite() && eta >= 1.0),
                "eta_speed_knots",
                "all multipliers must be >= 1 and speeds finite",
            );
            errs.check(
                knots.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 >= w[0].1),
                "eta_speed_knots",
                "knots must be nondecreasing in speed and multiplier",
            );
        }
        errs.into_result()
    }
}

/// Thermal state shared by plant and prediction model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcState {
    pub t_cab: f64,
    pub t_evap: f64,
    pub t_int: f64,
    pub t_shell: f64,
}

impl AcState {
    /// Hot-soak condition after parking in the sun.
    pub const HOT_SOAK: AcState = AcState {
        t_cab: 313.15,
        t_evap: 288.15,
        t_int: 313.15,
        t_shell: 318.15,
    };

    pub fn check(&self) -> Result<(), ModelError> {
        check_temp("t_cab", self.t_cab)?;
        check_temp("t_evap", self.t_evap)?;
        check_temp("t_int", self.t_int)?;
        check_temp("t_shell", self.t_shell)
    }
}

impl Default for AcState {
    fn default() -> Self {
        Self::HOT_SOAK
    }
}

/// The two actuators: blower mass flow (kg/s) and evaporator set-point (K).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    pub m_bl: f64,
    pub t_evap_sp: f64,
}

impl ControlInput {
    pub const M_BL_MIN: f64 = 0.05;
    pub const M_BL_MAX: f64 = 0.17;
    /// 3 °C.
    pub const T_EVAP_SP_MIN: f64 = 276.15;
    /// 10 °C.
    pub const T_EVAP_SP_MAX: f64 = 283.15;

    pub fn is_within_limits(&self) -> bool {
        (Self::M_BL_MIN..=Self::M_BL_MAX).contains(&self.m_bl)
            && (Self::T_EVAP_SP_MIN..=Self::T_EVAP_SP_MAX).contains(&self.t_evap_sp)
    }
}

/// Vehicle speed (m/s), solar irradiance (W/m²) and ambient temperature (K)
/// at one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExogenousSample {
    pub v_veh: f64,
    pub w_rad: f64,
    pub t_amb: f64,
}

fn check_temp(quantity: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() && (MIN_TEMP_K..=MAX_TEMP_K).contains(&value) {
        Ok(())
    } else {
        Err(ModelError::Divergence { quantity, value })
    }
}

#[inline]
pub(crate) fn cabin_next(t_cab: f64, t_int: f64, t_shell: f64, t_ain: f64, m_bl: f64, p: &AcParams) -> f64 {
    t_cab
        + p.gamma1 * (t_int - t_cab)
        + p.gamma2 * (t_shell - t_cab)
        + p.gamma3 * (t_ain - t_cab) * m_bl
        + p.tau1
}

#[inline]
pub(crate) fn evap_next(t_evap: f64, t_evap_sp: f64, p: &AcParams) -> f64 {
    p.gamma4 * t_evap + p.gamma5 * (t_evap - t_evap_sp) + p.tau2
}

/// Next-step cabin air temperature.
pub fn step_cabin_temp(
    state: &AcState,
    u: &ControlInput,
    t_ain: f64,
    p: &AcParams,
) -> Result<f64, ModelError> {
    let next = cabin_next(state.t_cab, state.t_int, state.t_shell, t_ain, u.m_bl, p);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(ModelError::Divergence {
            quantity: "t_cab",
            value: next,
        })
    }
}

/// Next-step evaporator wall temperature.
pub fn step_evap_temp(t_evap: f64, t_evap_sp: f64, p: &AcParams) -> Result<f64, ModelError> {
    let next = evap_next(t_evap, t_evap_sp, p);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(ModelError::Divergence {
            quantity: "t_evap",
            value: next,
        })
    }
}

/// Static vent (discharge) air temperature.
#[inline]
pub fn vent_air_temp(t_evap: f64, m_bl: f64, p: &AcParams) -> f64 {
    p.gamma6 * t_evap + p.gamma7 * m_bl + p.tau3
}

/// Blower electrical power from the fan affinity law, W.
#[inline]
pub fn blower_power(m_bl: f64, p: &AcParams) -> f64 {
    p.blower_power_coeff * m_bl * m_bl * m_bl
}

/// Speed-dependent A/C efficiency multiplier (>= 1), linearly interpolated
/// between knots and held constant outside them.
pub fn efficiency_multiplier(v_veh: f64, p: &AcParams) -> f64 {
    let knots = &p.eta_speed_knots;
    let Some(first) = knots.first() else {
        return 1.0;
    };
    if v_veh <= first.0 {
        return first.1;
    }
    for w in knots.windows(2) {
        let (v0, e0) = w[0];
        let (v1, e1) = w[1];
        if v_veh <= v1 {
            if v1 == v0 {
                return e1;
            }
            return e0 + (e1 - e0) * (v_veh - v0) / (v1 - v0);
        }
    }
    knots[knots.len() - 1].1
}

#[inline]
pub(crate) fn compressor_power_raw(t_cab: f64, t_ain: f64, m_bl: f64, eta: f64, p: &AcParams) -> f64 {
    let delta = t_cab - t_ain;
    let load = if delta > 0.0 { m_bl * p.air_cp * delta } else { 0.0 };
    load / (p.cop_base * eta)
}

/// Compressor electrical power, W: delivered sensible cooling divided by the
/// speed-adjusted COP.
pub fn compressor_power(
    state: &AcState,
    u: &ControlInput,
    ex: &ExogenousSample,
    p: &AcParams,
) -> f64 {
    let t_ain = vent_air_temp(state.t_evap, u.m_bl, p);
    compressor_power_raw(state.t_cab, t_ain, u.m_bl, efficiency_multiplier(ex.v_veh, p), p)
}

/// Parameters of the surrogate plant that stands in for the high-fidelity
/// refrigerant-loop simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantParams {
    /// Nominal model parameters (the controller's view of the plant).
    pub ac: AcParams,
    /// Interior relaxation toward cabin air, 1/step.
    pub int_gain_cab: f64,
    /// Interior heating by solar irradiance, K m²/W per step.
    pub int_gain_rad: f64,
    /// Shell relaxation toward ambient, 1/step.
    pub shell_gain_amb: f64,
    /// Extra shell relaxation from ram air, K s/m per step.
    pub shell_gain_speed: f64,
    pub perturbation_seed: u64,
    /// Half-width of the uniform multiplicative perturbation of the gains.
    pub perturbation_fraction: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            ac: AcParams::default(),
            int_gain_cab: 0.02,
            int_gain_rad: 1.5e-4,
            shell_gain_amb: 0.01,
            shell_gain_speed: 0.002,
            perturbation_seed: 42,
            perturbation_fraction: 0.05,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<(), ValidationErrors> {
        let mut errs = ValidationErrors::new();
        if let Err(e) = self.ac.validate() {
            errs.extend_prefixed("ac", e);
        }
        for (name, v) in [
            ("int_gain_cab", self.int_gain_cab),
            ("int_gain_rad", self.int_gain_rad),
            ("shell_gain_amb", self.shell_gain_amb),
            ("shell_gain_speed", self.shell_gain_speed),
        ] {
            errs.check(v.is_finite() && v >= 0.0, name, "must be finite and >= 0");
        }
        errs.check(
            (0.0..=0.2).contains(&self.perturbation_fraction),
            "perturbation_fraction",
            "must be within [0, 0.2]",
        );
        errs.into_result()
    }
}

/// Surrogate plant with its parameter perturbation frozen at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    params: PlantParams,
    actual: AcParams,
}

impl Plant {
    pub fn new(params: PlantParams) -> Self {
        let mut actual = params.ac.clone();
        let frac = params.perturbation_fraction;
        if frac > 0.0 {
            // γ4 and γ6 multiply absolute temperatures and are left alone.
            let mut rng = ChaCha8Rng::seed_from_u64(params.perturbation_seed);
            for g in [
                &mut actual.gamma1,
                &mut actual.gamma2,
                &mut actual.gamma3,
                &mut actual.gamma5,
                &mut actual.gamma7,
            ] {
                let r: f64 = rng.random_range(-1.0..1.0);
                *g *= 1.0 + frac * r;
            }
        }
        Self { params, actual }
    }

    pub fn params(&self) -> &PlantParams {
        &self.params
    }

    /// The perturbed parameters the plant actually evolves with.
    pub fn actual(&self) -> &AcParams {
        &self.actual
    }

    pub fn vent_air_temp(&self, state: &AcState, u: &ControlInput) -> f64 {
        vent_air_temp(state.t_evap, u.m_bl, &self.actual)
    }

    pub fn step(
        &self,
        state: &AcState,
        u: &ControlInput,
        ex: &ExogenousSample,
    ) -> Result<AcState, ModelError> {
        let p = &self.actual;
        let t_ain = vent_air_temp(state.t_evap, u.m_bl, p);
        let t_cab = cabin_next(state.t_cab, state.t_int, state.t_shell, t_ain, u.m_bl, p);
        let t_evap = evap_next(state.t_evap, u.t_evap_sp, p);
        let t_int = state.t_int
            + self.params.int_gain_cab * (state.t_cab - state.t_int)
            + self.params.int_gain_rad * ex.w_rad;

        let offset = state.t_shell - ex.t_amb;
        let sign = if offset > 0.0 {
            1.0
        } else if offset < 0.0 {
            -1.0
        } else {
            0.0
        };
        let mut t_shell = state.t_shell + self.params.shell_gain_amb * (ex.t_amb - state.t_shell)
            - self.params.shell_gain_speed * ex.v_veh * sign;
        // relaxation never carries the shell past ambient within one step
        if (t_shell - ex.t_amb) * offset < 0.0 {
            t_shell = ex.t_amb;
        }

        let next = AcState {
            t_cab,
            t_evap,
            t_int,
            t_shell,
        };
        next.check()?;
        Ok(next)
    }
}

/// One plant step from scratch (perturbation derived from the seed each call).
pub fn plant_step(
    state: &AcState,
    u: &ControlInput,
    ex: &ExogenousSample,
    p: &PlantParams,
) -> Result<AcState, ModelError> {
    Plant::new(p.clone()).step(state, u, ex)
}
