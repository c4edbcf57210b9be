//! Running controllers over a scenario, optionally timed, in parallel.

use std::time::Instant;

use ceco_core::mpc::ControllerKind;
use ceco_core::sim::{run_closed_loop_with, Clock, ComparisonTable, RunHooks, Scenario, SimTrace, StepIteration};
use ceco_core::SimError;

/// Wall clock measured from its creation.
#[derive(Debug, Clone, Copy)]
pub struct StdClock {
    origin: Instant,
}

impl StdClock {
    pub fn new() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Default for StdClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for StdClock {
    fn now_ms(&self) -> f64 {
        self.origin.elapsed().as_secs_f64() * 1000.0
    }
}

/// Runs one controller. `solve_ms` is only filled in when `timing` is set,
/// so untimed runs are byte-for-byte reproducible.
pub fn run_one(
    kind: ControllerKind,
    scenario: &Scenario,
    timing: bool,
    solver_log: Option<&mut Vec<StepIteration>>,
) -> Result<SimTrace, SimError> {
    let clock = StdClock::new();
    let hooks = RunHooks {
        clock: timing.then_some(&clock as &dyn Clock),
        solver_log,
        cold_start: false,
    };
    run_closed_loop_with(kind, scenario, hooks)
}

/// Runs all four controllers on separate threads. Results come back in
/// [`ControllerKind::ALL`] order and match a sequential run exactly.
pub fn compare_parallel(scenario: &Scenario, timing: bool) -> (ComparisonTable, Vec<Result<SimTrace, SimError>>) {
    let results: Vec<Result<SimTrace, SimError>> = std::thread::scope(|s| {
        let handles: Vec<_> = ControllerKind::ALL
            .iter()
            .map(|&k| s.spawn(move || run_one(k, scenario, timing, None)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("controller thread panicked"))
            .collect()
    });
    let table = ComparisonTable::from_results(ControllerKind::ALL.iter().copied().zip(&results));
    (table, results)
}
