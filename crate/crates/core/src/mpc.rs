//! Receding-horizon CECO controllers and the PI baseline.
//!
//! The optimal control problems are single-shooting: the decision vector is
//! `[m_bl(0..np), t_evap_sp(0..np)]`, extended by `eps(0..np)` for the
//! online-constraint-handling variant, and predicted states come from
//! rolling the nominal cabin model forward. Stage `np` has no control of its
//! own and reuses the last one. Interior and shell temperatures are held at
//! their measured values over the horizon.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::comfort::{self, OccupantParams};
use crate::error::{SolverError, ValidationErrors};
use crate::model::{self, AcParams, AcState, ControlInput, ExogenousSample};
use crate::nlp::{self, NlpProblem, NlpSolution, SolverOptions};
use crate::to_celsius;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ControllerKind {
    #[serde(rename = "baseline")]
    Baseline,
    #[serde(rename = "ceco-e")]
    CecoE,
    #[serde(rename = "ceco-c")]
    CecoC,
    #[serde(rename = "ceco-ioch")]
    CecoIoch,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 4] = [
        ControllerKind::Baseline,
        ControllerKind::CecoE,
        ControllerKind::CecoC,
        ControllerKind::CecoIoch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ControllerKind::Baseline => "baseline",
            ControllerKind::CecoE => "ceco-e",
            ControllerKind::CecoC => "ceco-c",
            ControllerKind::CecoIoch => "ceco-ioch",
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownController;

impl fmt::Display for UnknownController {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("expected one of baseline, ceco-e, ceco-c, ceco-ioch")
    }
}

impl core::error::Error for UnknownController {}

impl FromStr for ControllerKind {
    type Err = UnknownController;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ControllerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or(UnknownController)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpcConfig {
    /// Prediction horizon in steps.
    pub np: usize,
    /// Controller sample time, s.
    pub ts: f64,
    /// Weight on the squared PMV in the comfort-priority variant, W per PMV².
    pub comfort_weight: f64,
    /// Weight of the efficiency incentive, W.
    pub ioch_beta: f64,
    pub ioch_xi: f64,
    /// Upper bound on the comfort tightening slack, PMV.
    pub ioch_eps_ub: f64,
    /// Weight on squared PMV bound violation, W per PMV².
    pub pmv_soft_weight: f64,
    /// Margin by which the predicted PMV is kept inside its bounds, PMV.
    pub pmv_backoff: f64,
    pub t_evap_lb: f64,
    pub t_evap_ub: f64,
    pub m_bl_min: f64,
    pub m_bl_max: f64,
    pub t_evap_sp_min: f64,
    pub t_evap_sp_max: f64,
    /// Cabin temperature set-point of the baseline, K.
    pub pi_setpoint: f64,
    /// Proportional gain, (kg/s)/K.
    pub pi_kp: f64,
    /// Integral gain, (kg/s)/(K s).
    pub pi_ki: f64,
    /// Back-calculation gain (1 resets the integrator onto the limit).
    pub pi_kb: f64,
    /// Evaporator set-point commanded by the baseline, K.
    pub pi_t_evap_sp: f64,
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self {
            np: 6,
            ts: 5.0,
            comfort_weight: 1e5,
            ioch_beta: 50.0,
            ioch_xi: 0.1,
            ioch_eps_ub: 1.0,
            pmv_soft_weight: 1e6,
            pmv_backoff: 0.01,
            t_evap_lb: 273.15,
            t_evap_ub: 293.15,
            m_bl_min: ControlInput::M_BL_MIN,
            m_bl_max: ControlInput::M_BL_MAX,
            t_evap_sp_min: ControlInput::T_EVAP_SP_MIN,
            t_evap_sp_max: ControlInput::T_EVAP_SP_MAX,
            pi_setpoint: 299.15,
            pi_kp: 0.05,
            pi_ki: 0.002,
            pi_kb: 1.0,
            pi_t_evap_sp: ControlInput::T_EVAP_SP_MIN,
        }
    }
}

impl MpcConfig {
    pub fn validate(&self) -> Result<(), ValidationErrors> {
        let mut e = ValidationErrors::new();
        e.check(self.np >= 1, "np", "must be >= 1");
        e.check(self.ts > 0.0, "ts", "must be > 0");
        e.check(self.comfort_weight >= 0.0, "comfort_weight", "must be >= 0");
        e.check(self.ioch_beta >= 0.0, "ioch_beta", "must be >= 0");
        e.check(self.ioch_xi > 0.0, "ioch_xi", "must be > 0");
        e.check(self.ioch_eps_ub >= 0.0, "ioch_eps_ub", "must be >= 0");
        e.check(self.pmv_soft_weight > 0.0, "pmv_soft_weight", "must be > 0");
        e.check(self.pmv_backoff >= 0.0, "pmv_backoff", "must be >= 0");
        e.check(self.t_evap_lb < self.t_evap_ub, "t_evap_lb", "must be < t_evap_ub");
        e.check(
            ControlInput::M_BL_MIN <= self.m_bl_min && self.m_bl_min < self.m_bl_max && self.m_bl_max <= ControlInput::M_BL_MAX,
            "m_bl_min",
            "blower range must be a nonempty subset of [0.05, 0.17] kg/s",
        );
        e.check(
            ControlInput::T_EVAP_SP_MIN <= self.t_evap_sp_min
                && self.t_evap_sp_min < self.t_evap_sp_max
                && self.t_evap_sp_max <= ControlInput::T_EVAP_SP_MAX,
            "t_evap_sp_min",
            "set-point range must be a nonempty subset of [276.15, 283.15] K",
        );
        e.check(self.pi_kp >= 0.0, "pi_kp", "must be >= 0");
        e.check(self.pi_ki > 0.0, "pi_ki", "must be > 0");
        e.check(self.pi_kb > 0.0, "pi_kb", "must be > 0");
        e.check(
            (self.t_evap_sp_min..=self.t_evap_sp_max).contains(&self.pi_t_evap_sp),
            "pi_t_evap_sp",
            "must lie within the set-point range",
        );
        e.into_result()
    }
}

/// Exogenous inputs and comfort bounds for stages `0..=np`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreviewWindow {
    pub samples: Vec<ExogenousSample>,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
}

impl PreviewWindow {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn validate(&self, np: usize) -> Result<(), ValidationErrors> {
        let mut e = ValidationErrors::new();
        e.check(self.samples.len() == np + 1, "samples", "length must be np + 1");
        e.check(self.lb.len() == np + 1, "lb", "length must be np + 1");
        e.check(self.ub.len() == np + 1, "ub", "length must be np + 1");
        e.check(
            self.lb.iter().zip(&self.ub).all(|(l, u)| l < u),
            "lb",
            "must be below ub at every stage",
        );
        e.check(
            self.samples.iter().all(|s| s.v_veh >= 0.0 && s.w_rad >= 0.0),
            "samples",
            "speeds and irradiance must be >= 0",
        );
        e.into_result()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Objective {
    Energy,
    Weighted(f64),
    Ioch,
}

/// How predicted PMV bound violations are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmvConstraintMode {
    /// Quadratic penalty inside the objective.
    Soft,
    /// Inequality constraints handed to the solver.
    Hard,
}

/// One of the CECO optimal control problems at a fixed measured state.
#[derive(Debug, Clone)]
pub struct CecoOcp {
    objective: Objective,
    pmv_mode: PmvConstraintMode,
    x0: AcState,
    preview: PreviewWindow,
    cfg: MpcConfig,
    ac: AcParams,
    occ: OccupantParams,
    eta: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Per-stage quantities of a rollout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StagePrediction {
    pub t_cab: f64,
    pub t_evap: f64,
    pub t_ain: f64,
    pub y_pmv: f64,
    pub power: f64,
}

/// Builds the energy-only problem: compressor plus blower power summed over
/// the horizon, PMV kept inside its bounds.
pub fn build_general_ocp(
    x0: &AcState,
    preview: &PreviewWindow,
    cfg: &MpcConfig,
    ac: &AcParams,
    occ: &OccupantParams,
) -> CecoOcp {
    CecoOcp::new(Objective::Energy, x0, preview, cfg, ac, occ)
}

/// [`build_general_ocp`] plus `cfg.comfort_weight * y²` per stage.
pub fn build_weighted_ocp(
    x0: &AcState,
    preview: &PreviewWindow,
    cfg: &MpcConfig,
    ac: &AcParams,
    occ: &OccupantParams,
) -> CecoOcp {
    CecoOcp::new(Objective::Weighted(cfg.comfort_weight), x0, preview, cfg, ac, occ)
}

/// Energy problem with a per-stage slack `eps` that tightens the PMV upper
/// bound, rewarded by `beta (eta - 1) / (eps + xi)` when the A/C runs
/// efficiently.
pub fn build_ioch_ocp(
    x0: &AcState,
    preview: &PreviewWindow,
    cfg: &MpcConfig,
    ac: &AcParams,
    occ: &OccupantParams,
) -> CecoOcp {
    CecoOcp::new(Objective::Ioch, x0, preview, cfg, ac, occ)
}

/// Keeps `eps` at zero when the efficiency incentive vanishes.
const EPS_REGULARIZATION: f64 = 1e-6;

impl CecoOcp {
    fn new(
        objective: Objective,
        x0: &AcState,
        preview: &PreviewWindow,
        cfg: &MpcConfig,
        ac: &AcParams,
        occ: &OccupantParams,
    ) -> Self {
        let np = cfg.np;
        let mut lower = Vec::with_capacity(3 * np);
        let mut upper = Vec::with_capacity(3 * np);
        lower.extend(core::iter::repeat_n(cfg.m_bl_min, np));
        upper.extend(core::iter::repeat_n(cfg.m_bl_max, np));
        lower.extend(core::iter::repeat_n(cfg.t_evap_sp_min, np));
        upper.extend(core::iter::repeat_n(cfg.t_evap_sp_max, np));
        if objective == Objective::Ioch {
            lower.extend(core::iter::repeat_n(0.0, np));
            upper.extend(core::iter::repeat_n(cfg.ioch_eps_ub, np));
        }
        let eta = preview
            .samples
            .iter()
            .map(|s| model::efficiency_multiplier(s.v_veh, ac))
            .collect();
        Self {
            objective,
            pmv_mode: PmvConstraintMode::Soft,
            x0: *x0,
            preview: preview.clone(),
            cfg: cfg.clone(),
            ac: ac.clone(),
            occ: occ.clone(),
            eta,
            lower,
            upper,
        }
    }

    pub fn with_pmv_mode(mut self, mode: PmvConstraintMode) -> Self {
        self.pmv_mode = mode;
        self
    }

    pub fn np(&self) -> usize {
        self.cfg.np
    }

    pub fn has_slack(&self) -> bool {
        self.objective == Objective::Ioch
    }

    /// Lower-bound midpoint start: mid-range controls, zero slack.
    pub fn cold_start(&self) -> Vec<f64> {
        let np = self.cfg.np;
        let mut z = Vec::with_capacity(self.lower.len());
        z.extend(core::iter::repeat_n(0.5 * (self.cfg.m_bl_min + self.cfg.m_bl_max), np));
        z.extend(core::iter::repeat_n(
            0.5 * (self.cfg.t_evap_sp_min + self.cfg.t_evap_sp_max),
            np,
        ));
        if self.has_slack() {
            z.extend(core::iter::repeat_n(0.0, np));
        }
        z
    }

    /// Objective and (when `g` is given) the path constraints in one rollout.
    fn rollout(&self, z: &[f64], mut g: Option<&mut [f64]>, mut stages: Option<&mut Vec<StagePrediction>>) -> f64 {
        let np = self.cfg.np;
        let (m, rest) = z.split_at(np);
        let (sp, eps) = rest.split_at(np);
        let ac = &self.ac;
        let t_int = self.x0.t_int;
        let t_shell = self.x0.t_shell;
        let t_int_c = to_celsius(t_int);
        let mut t_cab = self.x0.t_cab;
        let mut t_evap = self.x0.t_evap;
        let backoff = self.cfg.pmv_backoff;
        let w = self.cfg.pmv_soft_weight;
        let hard = self.pmv_mode == PmvConstraintMode::Hard;
        let mut cost = 0.0;

        for i in 0..=np {
            let j = if i < np { i } else { np - 1 };
            let m_j = m[j];
            let e_j = if self.has_slack() { eps[j] } else { 0.0 };
            let ex = &self.preview.samples[i];
            let eta = self.eta[i];

            let t_ain = model::vent_air_temp(t_evap, m_j, ac);
            let power = model::compressor_power_raw(t_cab, t_ain, m_j, eta, ac) + model::blower_power(m_j, ac);
            let y = comfort::pmv_modified(
                to_celsius(t_cab),
                to_celsius(t_ain),
                t_int_c,
                m_j,
                self.occ.effective_radiation(ex.w_rad),
                &self.occ,
            );
            let ub = self.preview.ub[i] - e_j - backoff;
            let lb = self.preview.lb[i] + backoff;

            cost += power;
            match self.objective {
                Objective::Energy => {}
                Objective::Weighted(gamma) => cost += gamma * y * y,
                Objective::Ioch => {
                    cost += self.cfg.ioch_beta * (eta - 1.0) / (e_j + self.cfg.ioch_xi) + EPS_REGULARIZATION * e_j * e_j;
                }
            }
            if !hard {
                let over = (y - ub).max(0.0);
                let under = (lb - y).max(0.0);
                cost += w * (over * over + under * under);
            }

            if let Some(g) = g.as_deref_mut() {
                let base = if hard { 4 * i } else { 2 * i };
                g[base] = t_evap - self.cfg.t_evap_ub;
                g[base + 1] = self.cfg.t_evap_lb - t_evap;
                if hard {
                    g[base + 2] = y - ub;
                    g[base + 3] = lb - y;
                }
            }
            if let Some(st) = stages.as_deref_mut() {
                st.push(StagePrediction {
                    t_cab,
                    t_evap,
                    t_ain,
                    y_pmv: y,
                    power,
                });
            }

            let next_cab = model::cabin_next(t_cab, t_int, t_shell, t_ain, m_j, ac);
            t_evap = model::evap_next(t_evap, sp[j], ac);
            t_cab = next_cab;
        }
        cost
    }

    /// Predicted stages `0..=np` under decision vector `z`.
    pub fn predict(&self, z: &[f64]) -> Vec<StagePrediction> {
        let mut stages = Vec::with_capacity(self.cfg.np + 1);
        self.rollout(z, None, Some(&mut stages));
        stages
    }
}

impl NlpProblem for CecoOcp {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn lower_bounds(&self) -> &[f64] {
        &self.lower
    }

    fn upper_bounds(&self) -> &[f64] {
        &self.upper
    }

    fn num_constraints(&self) -> usize {
        let per_stage = match self.pmv_mode {
            PmvConstraintMode::Soft => 2,
            PmvConstraintMode::Hard => 4,
        };
        per_stage * (self.cfg.np + 1)
    }

    fn objective(&self, z: &[f64]) -> f64 {
        self.rollout(z, None, None)
    }

    fn constraints(&self, z: &[f64], g: &mut [f64]) {
        self.rollout(z, Some(g), None);
    }

    fn evaluate(&self, z: &[f64], g: &mut [f64]) -> f64 {
        self.rollout(z, Some(g), None)
    }
}

/// Shifts every block of a previous solution one step ahead, duplicating
/// the last entry.
pub fn shift_warm_start(prev: &[f64], np: usize) -> Vec<f64> {
    let mut z = Vec::with_capacity(prev.len());
    for block in prev.chunks(np) {
        z.extend_from_slice(&block[1..]);
        z.push(block[block.len() - 1]);
    }
    z
}

/// Result of one receding-horizon step.
#[derive(Debug, Clone, PartialEq)]
pub struct MpcStep {
    pub control: ControlInput,
    pub solution: NlpSolution,
    /// First slack move (zero for variants without slack).
    pub eps: f64,
}

/// Builds the problem for `kind` at the measured state, solves it from the
/// shifted previous solution (or a cold start) and returns the first move.
///
/// # Panics
///
/// Panics if `kind` is [`ControllerKind::Baseline`].
#[allow(clippy::too_many_arguments)]
pub fn mpc_step(
    kind: ControllerKind,
    x0: &AcState,
    preview: &PreviewWindow,
    warm: Option<&[f64]>,
    cfg: &MpcConfig,
    ac: &AcParams,
    occ: &OccupantParams,
    opts: &SolverOptions,
) -> Result<MpcStep, SolverError> {
    mpc_step_logged(kind, x0, preview, warm, cfg, ac, occ, opts, None)
}

#[allow(clippy::too_many_arguments)]
pub fn mpc_step_logged(
    kind: ControllerKind,
    x0: &AcState,
    preview: &PreviewWindow,
    warm: Option<&[f64]>,
    cfg: &MpcConfig,
    ac: &AcParams,
    occ: &OccupantParams,
    opts: &SolverOptions,
    log: Option<&mut Vec<nlp::IterationRecord>>,
) -> Result<MpcStep, SolverError> {
    let ocp = match kind {
        ControllerKind::Baseline => panic!("the baseline is not an MPC controller"),
        ControllerKind::CecoE => {
            let cfg0 = MpcConfig {
                comfort_weight: 0.0,
                ..cfg.clone()
            };
            build_weighted_ocp(x0, preview, &cfg0, ac, occ)
        }
        ControllerKind::CecoC => build_weighted_ocp(x0, preview, cfg, ac, occ),
        ControllerKind::CecoIoch => build_ioch_ocp(x0, preview, cfg, ac, occ),
    };
    let z0 = match warm {
        Some(prev) if prev.len() == ocp.dim() => shift_warm_start(prev, cfg.np),
        _ => ocp.cold_start(),
    };
    let solution = match log {
        Some(log) => {
            let (sol, records) = nlp::solve_logged(&ocp, &z0, opts)?;
            log.extend(records);
            sol
        }
        None => nlp::solve(&ocp, &z0, opts)?,
    };
    let np = cfg.np;
    let control = ControlInput {
        m_bl: solution.z_opt[0],
        t_evap_sp: solution.z_opt[np],
    };
    let eps = if ocp.has_slack() { solution.z_opt[2 * np] } else { 0.0 };
    Ok(MpcStep {
        control,
        solution,
        eps,
    })
}

/// Integrator state of the baseline controller, K s.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PiState {
    pub integral: f64,
}

/// Baseline blower PI with back-calculation anti-windup. The evaporator is
/// held at `cfg.pi_t_evap_sp` (maximum cooling).
///
/// The integral is corrected by `(u_sat - u) / (kb * ki)`, so with `kb = 1`
/// the integrator is pulled exactly back onto the saturation limit.
pub fn pi_baseline_step(state: &PiState, t_cab: f64, cfg: &MpcConfig) -> (ControlInput, PiState) {
    let e = t_cab - cfg.pi_setpoint;
    let raw = cfg.pi_kp * e + cfg.pi_ki * state.integral;
    let sat = raw.clamp(cfg.m_bl_min, cfg.m_bl_max);
    let integral = state.integral + cfg.ts * e + (sat - raw) / (cfg.pi_kb * cfg.pi_ki);
    (
        ControlInput {
            m_bl: sat,
            t_evap_sp: cfg.pi_t_evap_sp,
        },
        PiState { integral },
    )
}

/// Builds a preview window holding the same sample and bounds at every stage.
pub fn constant_preview(np: usize, sample: ExogenousSample, lb: f64, ub: f64) -> PreviewWindow {
    PreviewWindow {
        samples: vec![sample; np + 1],
        lb: vec![lb; np + 1],
        ub: vec![ub; np + 1],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hot_state() -> AcState {
        AcState {
            t_cab: 306.15,
            t_evap: 284.15,
            t_int: 309.15,
            t_shell: 312.15,
        }
    }

    fn sunny(v: f64) -> ExogenousSample {
        ExogenousSample {
            v_veh: v,
            w_rad: 800.0,
            t_amb: 308.15,
        }
    }

    #[test]
    fn kind_round_trips() {
        for k in ControllerKind::ALL {
            assert_eq!(k.as_str().parse::<ControllerKind>().unwrap(), k);
        }
        assert!("pid".parse::<ControllerKind>().is_err());
    }

    #[test]
    fn config_validation_names_fields() {
        MpcConfig::default().validate().unwrap();
        let cfg = MpcConfig {
            comfort_weight: -1.0,
            ioch_xi: 0.0,
            ..MpcConfig::default()
        };
        let errs = cfg.validate().unwrap_err();
        let fields: Vec<&str> = errs.errors.iter().map(|e| e.field.as_str()).collect();
        assert_eq!(fields, ["comfort_weight", "ioch_xi"]);
    }

    #[test]
    fn minimum_energy_corner_with_open_bounds() {
        let cfg = MpcConfig {
            np: 1,
            ..MpcConfig::default()
        };
        let preview = constant_preview(1, sunny(0.0), -100.0, 100.0);
        let ac = AcParams::default();
        let occ = OccupantParams::default();
        let ocp = build_general_ocp(&hot_state(), &preview, &cfg, &ac, &occ);
        let sol = nlp::solve(&ocp, &ocp.cold_start(), &SolverOptions::default()).unwrap();
        assert!((sol.z_opt[0] - 0.05).abs() < 1e-6, "{sol:?}");
        assert!((sol.z_opt[1] - 283.15).abs() < 1e-6, "{sol:?}");

        // brute-force grid over the 2-D control space agrees
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for a in 0..=60 {
            for b in 0..=70 {
                let z = [0.05 + 0.002 * a as f64, 276.15 + 0.1 * b as f64];
                let f = ocp.objective(&z);
                if f < best.0 {
                    best = (f, z[0], z[1]);
                }
            }
        }
        assert!((best.1 - sol.z_opt[0]).abs() < 1e-9);
        assert!((best.2 - sol.z_opt[1]).abs() < 1e-6);
        assert!(sol.objective_value <= best.0 + 1e-9);
    }

    #[test]
    fn tight_comfort_bound_demands_more_cooling() {
        let cfg = MpcConfig::default();
        let ac = AcParams::default();
        let occ = OccupantParams::default();
        let opts = SolverOptions::default();
        let wide = constant_preview(cfg.np, sunny(5.0), -100.0, 100.0);
        let tight = constant_preview(cfg.np, sunny(5.0), -0.5, 0.5);
        let x0 = hot_state();
        let a = build_general_ocp(&x0, &wide, &cfg, &ac, &occ);
        let b = build_general_ocp(&x0, &tight, &cfg, &ac, &occ);
        let sa = nlp::solve(&a, &a.cold_start(), &opts).unwrap();
        let sb = nlp::solve(&b, &b.cold_start(), &opts).unwrap();
        let ya = a.predict(&sa.z_opt)[1].y_pmv;
        let yb = b.predict(&sb.z_opt)[1].y_pmv;
        assert!(yb < ya, "tight {yb} wide {ya}");
        assert!(sb.objective_value > sa.objective_value);
    }

    #[test]
    fn weighted_reduces_predicted_pmv() {
        let cfg = MpcConfig::default();
        let ac = AcParams::default();
        let occ = OccupantParams::default();
        let opts = SolverOptions::default();
        let preview = constant_preview(cfg.np, sunny(8.0), -0.5, 2.0);
        let x0 = hot_state();
        let e = build_weighted_ocp(&x0, &preview, &MpcConfig { comfort_weight: 0.0, ..cfg.clone() }, &ac, &occ);
        let c = build_weighted_ocp(&x0, &preview, &cfg, &ac, &occ);
        let se = nlp::solve(&e, &e.cold_start(), &opts).unwrap();
        let sc = nlp::solve(&c, &c.cold_start(), &opts).unwrap();
        let ye = e.predict(&se.z_opt)[cfg.np].y_pmv.abs();
        let yc = c.predict(&sc.z_opt)[cfg.np].y_pmv.abs();
        assert!(yc < ye, "comfort {yc} energy {ye}");
    }

    #[test]
    fn ioch_slack_vanishes_at_standstill() {
        let cfg = MpcConfig::default();
        let ac = AcParams::default();
        let occ = OccupantParams::default();
        let preview = constant_preview(cfg.np, sunny(0.0), -0.5, 2.0);
        let ocp = build_ioch_ocp(&hot_state(), &preview, &cfg, &ac, &occ);
        let sol = nlp::solve(&ocp, &ocp.cold_start(), &SolverOptions::default()).unwrap();
        assert!(sol.z_opt[2 * cfg.np..].iter().all(|&e| e.abs() < 1e-9), "{:?}", sol.z_opt);
    }

    #[test]
    fn ioch_tightens_at_speed() {
        let cfg = MpcConfig::default();
        let ac = AcParams::default();
        let occ = OccupantParams::default();
        let opts = SolverOptions::default();
        let slow = constant_preview(cfg.np, sunny(0.0), -0.5, 2.5);
        let fast = constant_preview(cfg.np, sunny(30.0), -0.5, 2.5);
        let x0 = AcState {
            t_cab: 300.15,
            t_evap: 279.15,
            t_int: 302.15,
            t_shell: 310.15,
        };
        let a = build_ioch_ocp(&x0, &slow, &cfg, &ac, &occ);
        let b = build_ioch_ocp(&x0, &fast, &cfg, &ac, &occ);
        let sa = nlp::solve(&a, &a.cold_start(), &opts).unwrap();
        let sb = nlp::solve(&b, &b.cold_start(), &opts).unwrap();
        let eps_slow: f64 = sa.z_opt[2 * cfg.np..].iter().sum();
        let eps_fast = &sb.z_opt[2 * cfg.np..];
        assert!(eps_slow.abs() < 1e-9);
        assert!(eps_fast.iter().any(|&e| e > 1e-3), "{eps_fast:?}");
        assert!(eps_fast.iter().all(|&e| (0.0..=cfg.ioch_eps_ub).contains(&e)));
    }

    #[test]
    fn step_is_deterministic_and_returns_first_move() {
        let cfg = MpcConfig::default();
        let ac = AcParams::default();
        let occ = OccupantParams::default();
        let opts = SolverOptions::default();
        let preview = constant_preview(cfg.np, sunny(12.0), -0.5, 1.5);
        for kind in [ControllerKind::CecoE, ControllerKind::CecoC, ControllerKind::CecoIoch] {
            let a = mpc_step(kind, &hot_state(), &preview, None, &cfg, &ac, &occ, &opts).unwrap();
            let b = mpc_step(kind, &hot_state(), &preview, None, &cfg, &ac, &occ, &opts).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.control.m_bl, a.solution.z_opt[0]);
            assert_eq!(a.control.t_evap_sp, a.solution.z_opt[cfg.np]);
            assert!(a.control.is_within_limits());
        }
    }

    #[test]
    fn warm_start_shift() {
        let z = [1.0, 2.0, 3.0, 10.0, 20.0, 30.0];
        assert_eq!(shift_warm_start(&z, 3), vec![2.0, 3.0, 3.0, 20.0, 30.0, 30.0]);
    }

    #[test]
    fn pi_examples() {
        let cfg = MpcConfig::default();
        let (u, _) = pi_baseline_step(&PiState::default(), 299.15, &cfg);
        assert_eq!(u.m_bl, 0.05);
        assert_eq!(u.t_evap_sp, 276.15);
        let (u, _) = pi_baseline_step(&PiState::default(), 301.15, &cfg);
        assert!((u.m_bl - 0.1).abs() < 1e-12);
    }

    #[test]
    fn pi_integral_stops_growing_in_saturation() {
        let cfg = MpcConfig::default();
        let mut s = PiState::default();
        let mut history = Vec::new();
        for _ in 0..200 {
            let (u, next) = pi_baseline_step(&s, 313.15, &cfg);
            assert_eq!(u.m_bl, 0.17);
            history.push(next.integral);
            s = next;
        }
        let last = history[history.len() - 1];
        assert!((last - history[history.len() - 2]).abs() < 1e-9);
        // pinned where the unsaturated law would command exactly the limit
        // plus one step of error
        assert!(last <= (0.17 - cfg.pi_kp * 14.0) / cfg.pi_ki + cfg.ts * 14.0 + 1e-9);
    }

    #[test]
    fn hard_and_soft_agree_when_feasible() {
        let cfg = MpcConfig::default();
        let ac = AcParams::default();
        let occ = OccupantParams::default();
        let opts = SolverOptions::default();
        let x0 = AcState {
            t_cab: 300.15,
            t_evap: 280.15,
            t_int: 301.15,
            t_shell: 310.15,
        };
        for ub in [1.0, 1.5, 2.5] {
            let preview = constant_preview(cfg.np, sunny(6.0), -0.5, ub);
            let soft = build_general_ocp(&x0, &preview, &cfg, &ac, &occ);
            let hard = build_general_ocp(&x0, &preview, &cfg, &ac, &occ).with_pmv_mode(PmvConstraintMode::Hard);
            let ss = nlp::solve(&soft, &soft.cold_start(), &opts).unwrap();
            let sh = nlp::solve(&hard, &hard.cold_start(), &opts).unwrap();
            let ys = soft.predict(&ss.z_opt);
            let inside = ys.iter().all(|s| s.y_pmv <= ub - cfg.pmv_backoff && s.y_pmv >= -0.5 + cfg.pmv_backoff);
            if inside {
                assert!((ss.z_opt[0] - sh.z_opt[0]).abs() < 2e-3, "ub {ub}: {:?} vs {:?}", ss.z_opt, sh.z_opt);
                assert!((ss.z_opt[cfg.np] - sh.z_opt[cfg.np]).abs() < 2e-2);
            }
        }
    }

    fn random_z(np: usize, slack: bool) -> impl Strategy<Value = Vec<f64>> {
        let mut parts = vec![(0.05f64..0.17).boxed(); np];
        parts.extend(vec![(276.15f64..283.15).boxed(); np]);
        if slack {
            parts.extend(vec![(0.0f64..1.0).boxed(); np]);
        }
        parts
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn weighted_with_zero_gamma_is_general(z in random_z(6, false), v in 0.0f64..30.0, ub in 0.6f64..3.0) {
            let cfg = MpcConfig { comfort_weight: 0.0, ..MpcConfig::default() };
            let ac = AcParams::default();
            let occ = OccupantParams::default();
            let preview = constant_preview(6, sunny(v), -0.5, ub);
            let a = build_general_ocp(&hot_state(), &preview, &cfg, &ac, &occ);
            let b = build_weighted_ocp(&hot_state(), &preview, &cfg, &ac, &occ);
            prop_assert_eq!(a.objective(&z), b.objective(&z));
        }

        #[test]
        fn common_scaling_keeps_first_move(scale in 0.5f64..4.0, v in 10.0f64..30.0) {
            let cfg = MpcConfig::default();
            let mut ac = AcParams::default();
            let occ = OccupantParams::default();
            let opts = SolverOptions::default();
            let preview = constant_preview(cfg.np, sunny(v), -0.5, 2.0);
            let x0 = hot_state();
            let base = build_ioch_ocp(&x0, &preview, &cfg, &ac, &occ);
            let sa = nlp::solve(&base, &base.cold_start(), &opts).unwrap();
            let scaled_cfg = MpcConfig {
                ioch_beta: cfg.ioch_beta * scale,
                pmv_soft_weight: cfg.pmv_soft_weight * scale,
                ..cfg.clone()
            };
            ac.blower_power_coeff *= scale;
            ac.cop_base /= scale;
            let scaled = build_ioch_ocp(&x0, &preview, &scaled_cfg, &ac, &occ);
            let sb = nlp::solve(&scaled, &scaled.cold_start(), &opts).unwrap();
            prop_assert!((sa.z_opt[0] - sb.z_opt[0]).abs() < 2e-3, "{:?} {:?}", sa.z_opt, sb.z_opt);
            prop_assert!((sa.z_opt[cfg.np] - sb.z_opt[cfg.np]).abs() < 2e-2);
        }
    }
}
