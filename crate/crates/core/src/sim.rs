//! Closed-loop drive-cycle simulation and the energy/comfort metrics.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::comfort::{self, ComfortBoundsSpec, OccupantParams};
use crate::error::{SimError, SimFailure, ValidationErrors};
use crate::model::{self, AcState, ControlInput, ExogenousSample, Plant, PlantParams};
use crate::mpc::{self, ControllerKind, MpcConfig, PiState, PreviewWindow};
use crate::nlp::{IterationRecord, SolverOptions};
use crate::to_celsius;

/// Uniformly sampled exogenous inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveCycle {
    pub name: String,
    pub dt: f64,
    pub samples: Vec<ExogenousSample>,
}

impl DriveCycle {
    pub fn new(name: impl Into<String>, dt: f64, samples: Vec<ExogenousSample>) -> Result<Self, ValidationErrors> {
        let c = Self {
            name: name.into(),
            dt,
            samples,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ValidationErrors> {
        let mut e = ValidationErrors::new();
        e.check(!self.samples.is_empty(), "samples", "cycle is empty");
        e.check(self.dt > 0.0 && self.dt.is_finite(), "dt", "must be > 0");
        e.check(
            self.samples.iter().all(|s| s.v_veh >= 0.0 && s.v_veh.is_finite()),
            "v_veh",
            "speeds must be finite and >= 0",
        );
        e.check(
            self.samples.iter().all(|s| s.w_rad >= 0.0 && s.w_rad.is_finite()),
            "w_rad",
            "irradiance must be finite and >= 0",
        );
        e.check(
            self.samples.iter().all(|s| s.t_amb.is_finite() && s.t_amb > 0.0),
            "t_amb",
            "ambient temperature must be a positive Kelvin value",
        );
        e.into_result()
    }

    /// Resamples irregular `(time, sample)` rows onto a grid of spacing `dt`
    /// starting at the first time, by linear interpolation. The grid ends at
    /// the last time that fits within the data.
    pub fn resample(name: impl Into<String>, rows: &[(f64, ExogenousSample)], dt: f64) -> Result<Self, ValidationErrors> {
        let mut e = ValidationErrors::new();
        e.check(!rows.is_empty(), "rows", "no data rows");
        e.check(dt > 0.0 && dt.is_finite(), "dt", "must be > 0");
        e.check(
            rows.windows(2).all(|w| w[1].0 > w[0].0),
            "t_s",
            "time must be strictly increasing",
        );
        e.into_result()?;

        let t0 = rows[0].0;
        let t_end = rows[rows.len() - 1].0;
        let count = libm::floor((t_end - t0) / dt + 1e-9) as usize + 1;
        let mut samples = Vec::with_capacity(count);
        let mut seg = 0;
        for k in 0..count {
            let t = t0 + k as f64 * dt;
            while seg + 1 < rows.len() - 1 && rows[seg + 1].0 <= t {
                seg += 1;
            }
            let (ta, a) = rows[seg];
            let s = if rows.len() == 1 {
                a
            } else {
                let (tb, b) = rows[seg + 1];
                let f = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
                ExogenousSample {
                    v_veh: a.v_veh + f * (b.v_veh - a.v_veh),
                    w_rad: a.w_rad + f * (b.w_rad - a.w_rad),
                    t_amb: a.t_amb + f * (b.t_amb - a.t_amb),
                }
            };
            samples.push(s);
        }
        Self::new(name, dt, samples)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `(len - 1) * dt`.
    pub fn duration(&self) -> f64 {
        self.samples.len().saturating_sub(1) as f64 * self.dt
    }

    /// Sample `k`, holding the last one past the end.
    pub fn sample(&self, k: usize) -> ExogenousSample {
        self.samples[k.min(self.samples.len() - 1)]
    }

    /// The same cycle with every speed set to zero.
    pub fn at_standstill(&self) -> Self {
        Self {
            name: self.name.clone() + "-standstill",
            dt: self.dt,
            samples: self
                .samples
                .iter()
                .map(|s| ExogenousSample { v_veh: 0.0, ..*s })
                .collect(),
        }
    }
}

/// Exact future inputs for stages `k..=k+np` and the comfort bounds at those
/// times.
pub fn preview_window(cycle: &DriveCycle, k: usize, cfg: &MpcConfig, bounds: &ComfortBoundsSpec) -> PreviewWindow {
    let n = cfg.np + 1;
    let mut samples = Vec::with_capacity(n);
    let mut lb = Vec::with_capacity(n);
    let mut ub = Vec::with_capacity(n);
    for i in 0..n {
        samples.push(cycle.sample(k + i));
        let (l, u) = comfort::comfort_bounds((k + i) as f64 * cfg.ts, bounds);
        lb.push(l);
        ub.push(u);
    }
    PreviewWindow { samples, lb, ub }
}

/// Everything a closed-loop run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub cycle: DriveCycle,
    pub plant: PlantParams,
    pub mpc: MpcConfig,
    pub occupant: OccupantParams,
    pub bounds: ComfortBoundsSpec,
    pub solver: SolverOptions,
    pub initial: AcState,
}

impl Scenario {
    /// Default parameters around the given cycle.
    pub fn with_cycle(cycle: DriveCycle) -> Self {
        Self {
            cycle,
            plant: PlantParams::default(),
            mpc: MpcConfig::default(),
            occupant: OccupantParams::default(),
            bounds: ComfortBoundsSpec::default(),
            solver: SolverOptions::default(),
            initial: AcState::HOT_SOAK,
        }
    }

    pub fn validate(&self) -> Result<(), ValidationErrors> {
        let mut e = ValidationErrors::new();
        let sections: [(&str, Result<(), ValidationErrors>); 6] = [
            ("cycle", self.cycle.validate()),
            ("plant", self.plant.validate()),
            ("mpc", self.mpc.validate()),
            ("occupant", self.occupant.validate()),
            ("bounds", self.bounds.validate()),
            ("solver", self.solver.validate()),
        ];
        for (name, r) in sections {
            if let Err(errs) = r {
                e.extend_prefixed(name, errs);
            }
        }
        if let Err(m) = self.initial.check() {
            e.push("initial", m.to_string());
        }
        e.check(
            self.mpc.ts == self.plant.ac.sample_time,
            "mpc.ts",
            "must equal plant.ac.sample_time",
        );
        e.check(
            self.cycle.dt == self.mpc.ts,
            "cycle.dt",
            "cycle must be sampled at the controller period",
        );
        e.into_result()
    }
}

/// One controller period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub t: f64,
    pub state: AcState,
    pub control: ControlInput,
    pub p_comp: f64,
    pub p_bl: f64,
    /// PMV felt at this step, clamped to ±4.
    pub y_pmv: f64,
    pub y_lb: f64,
    pub y_ub: f64,
    pub solver_iters: usize,
    pub solve_ms: f64,
    /// First comfort-tightening slack move (zero unless CECO-IOCH).
    pub eps: f64,
    pub v_veh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub controller: ControllerKind,
    pub ts: f64,
    pub records: Vec<SimRecord>,
}

impl SimTrace {
    pub fn new(controller: ControllerKind, ts: f64) -> Self {
        Self {
            controller,
            ts,
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Millisecond wall clock supplied by the caller.
pub trait Clock {
    fn now_ms(&self) -> f64;
}

/// Solver iteration tagged with the closed-loop step it belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepIteration {
    pub step: usize,
    pub record: IterationRecord,
}

/// Optional instrumentation for [`run_closed_loop_with`].
#[derive(Default)]
pub struct RunHooks<'a> {
    pub clock: Option<&'a dyn Clock>,
    pub solver_log: Option<&'a mut Vec<StepIteration>>,
    /// Ignore the previous solution and cold-start every solve.
    pub cold_start: bool,
}

/// Runs `kind` over the whole scenario cycle.
pub fn run_closed_loop(kind: ControllerKind, scenario: &Scenario) -> Result<SimTrace, SimError> {
    run_closed_loop_with(kind, scenario, RunHooks::default())
}

/// [`run_closed_loop`] with timing, solver logging or cold starts.
///
/// The cycle has `n` samples and the run covers the `n - 1` intervals
/// between them; a single-sample cycle gives an empty trace.
pub fn run_closed_loop_with(kind: ControllerKind, scenario: &Scenario, mut hooks: RunHooks<'_>) -> Result<SimTrace, SimError> {
    let ts = scenario.mpc.ts;
    let mut trace = SimTrace::new(kind, ts);
    if let Err(errs) = scenario.validate() {
        return Err(SimError {
            step: 0,
            time: 0.0,
            cause: SimFailure::Invalid(errs),
            partial: trace,
        });
    }

    let plant = Plant::new(scenario.plant.clone());
    let nominal = &scenario.plant.ac;
    let occ = &scenario.occupant;
    let steps = scenario.cycle.len() - 1;
    trace.records.reserve(steps);

    let mut state = scenario.initial;
    let mut pi = PiState::default();
    let mut warm: Option<Vec<f64>> = None;

    for k in 0..steps {
        let t = k as f64 * ts;
        let (lb, ub) = comfort::comfort_bounds(t, &scenario.bounds);
        let ex = scenario.cycle.sample(k);

        let started = hooks.clock.map(|c| c.now_ms());
        let (u, iters, eps) = if kind == ControllerKind::Baseline {
            let (u, next) = mpc::pi_baseline_step(&pi, state.t_cab, &scenario.mpc);
            pi = next;
            (u, 0, 0.0)
        } else {
            let preview = preview_window(&scenario.cycle, k, &scenario.mpc, &scenario.bounds);
            let warm_ref = if hooks.cold_start { None } else { warm.as_deref() };
            let mut log = hooks.solver_log.as_ref().map(|_| Vec::new());
            let out = mpc::mpc_step_logged(
                kind,
                &state,
                &preview,
                warm_ref,
                &scenario.mpc,
                nominal,
                occ,
                &scenario.solver,
                log.as_mut(),
            );
            let step = match out {
                Ok(s) => s,
                Err(err) => {
                    return Err(SimError {
                        step: k,
                        time: t,
                        cause: SimFailure::Solver(err),
                        partial: trace,
                    })
                }
            };
            if let (Some(sink), Some(log)) = (hooks.solver_log.as_deref_mut(), log) {
                sink.extend(log.into_iter().map(|record| StepIteration { step: k, record }));
            }
            let iters = step.solution.iterations;
            warm = Some(step.solution.z_opt);
            (step.control, iters, step.eps)
        };
        let solve_ms = match (hooks.clock, started) {
            (Some(c), Some(s)) => c.now_ms() - s,
            _ => 0.0,
        };

        let actual = plant.actual();
        let t_ain = plant.vent_air_temp(&state, &u);
        let eta = model::efficiency_multiplier(ex.v_veh, actual);
        let p_comp = model::compressor_power_raw(state.t_cab, t_ain, u.m_bl, eta, actual);
        let p_bl = model::blower_power(u.m_bl, actual);
        let y = comfort::pmv_modified(
            to_celsius(state.t_cab),
            to_celsius(t_ain),
            to_celsius(state.t_int),
            u.m_bl,
            occ.effective_radiation(ex.w_rad),
            occ,
        );
        trace.records.push(SimRecord {
            t,
            state,
            control: u,
            p_comp,
            p_bl,
            y_pmv: comfort::clamp_for_report(y),
            y_lb: lb,
            y_ub: ub,
            solver_iters: iters,
            solve_ms,
            eps,
            v_veh: ex.v_veh,
        });

        state = match plant.step(&state, &u, &ex) {
            Ok(s) => s,
            Err(err) => {
                return Err(SimError {
                    step: k,
                    time: t,
                    cause: SimFailure::Model(err),
                    partial: trace,
                })
            }
        };
    }
    Ok(trace)
}

/// Rectangle-rule integral of compressor plus blower power, J.
pub fn total_energy(trace: &SimTrace) -> f64 {
    trace.records.iter().map(|r| (r.p_comp + r.p_bl) * trace.ts).sum()
}

/// Rectangle-rule integral of the squared PMV, PMV² s.
pub fn comfort_index(trace: &SimTrace) -> f64 {
    trace.records.iter().map(|r| r.y_pmv * r.y_pmv * trace.ts).sum()
}

/// Percentage of steps with the PMV outside `[y_lb, y_ub]`.
pub fn otc_violation(trace: &SimTrace) -> f64 {
    if trace.records.is_empty() {
        return 0.0;
    }
    let outside = trace
        .records
        .iter()
        .filter(|r| r.y_pmv > r.y_ub || r.y_pmv < r.y_lb)
        .count();
    outside as f64 / trace.records.len() as f64 * 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub controller: ControllerKind,
    /// A/C electrical energy, J.
    pub e_tot: f64,
    /// PMV² s.
    pub i_pmv: f64,
    pub otc_violation_pct: f64,
    /// Mean controller computation time per step, s.
    pub mean_solve_time_s: f64,
    pub steps: usize,
}

impl MetricsReport {
    pub fn from_trace(trace: &SimTrace) -> Self {
        let n = trace.records.len();
        let total_ms: f64 = trace.records.iter().map(|r| r.solve_ms).sum();
        Self {
            controller: trace.controller,
            e_tot: total_energy(trace),
            i_pmv: comfort_index(trace),
            otc_violation_pct: otc_violation(trace),
            mean_solve_time_s: if n == 0 { 0.0 } else { total_ms / n as f64 / 1000.0 },
            steps: n,
        }
    }
}

/// One row of a controller comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub controller: ControllerKind,
    pub metrics: Option<MetricsReport>,
    /// Energy saved relative to the baseline, %.
    pub savings_pct: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    /// Builds the table from per-controller outcomes; failures stay in their
    /// row.
    pub fn from_results<'a>(results: impl IntoIterator<Item = (ControllerKind, &'a Result<SimTrace, SimError>)>) -> Self {
        let mut rows: Vec<ComparisonRow> = results
            .into_iter()
            .map(|(kind, r)| match r {
                Ok(trace) => ComparisonRow {
                    controller: kind,
                    metrics: Some(MetricsReport::from_trace(trace)),
                    savings_pct: None,
                    error: None,
                },
                Err(e) => ComparisonRow {
                    controller: kind,
                    metrics: None,
                    savings_pct: None,
                    error: Some(e.to_string()),
                },
            })
            .collect();
        let base = rows
            .iter()
            .find(|r| r.controller == ControllerKind::Baseline)
            .and_then(|r| r.metrics.as_ref())
            .map(|m| m.e_tot);
        if let Some(base) = base.filter(|b| *b > 0.0) {
            for r in &mut rows {
                r.savings_pct = r.metrics.as_ref().map(|m| (base - m.e_tot) / base * 100.0);
            }
        }
        Self { rows }
    }

    pub fn get(&self, kind: ControllerKind) -> Option<&MetricsReport> {
        self.rows
            .iter()
            .find(|r| r.controller == kind)
            .and_then(|r| r.metrics.as_ref())
    }
}

/// Runs all four controllers one after another on the same scenario.
pub fn compare_controllers(scenario: &Scenario) -> (ComparisonTable, Vec<Result<SimTrace, SimError>>) {
    let results: Vec<_> = ControllerKind::ALL
        .iter()
        .map(|&k| run_closed_loop(k, scenario))
        .collect();
    let table = ComparisonTable::from_results(ControllerKind::ALL.iter().copied().zip(&results));
    (table, results)
}
