//! Closed-loop execution: estimation, trigger computation, and plant
//! stepping in the order the controller specifies.
//!
//! At every trigger instant the loop measures the state, refines the
//! parameter set from the inter-trigger window (adaptive mode only),
//! recomputes the penalty, solves for the committed prefix length, and
//! applies that many inputs open loop. The profile is arrival indexed:
//! the step leaving instant `t` is driven by `v[t + 1]` and `d[t]`, so
//! the parameter pinned by the endpoint measurement is the one current
//! at the new trigger.

use nalgebra::{DVector, dvector};

use crate::error::{Error, Result};
use crate::estimator::update_efss;
use crate::mpc::MpcSolution;
use crate::scheduler::compute_trigger;
use crate::set::MEMBERSHIP_TOL;
use crate::sim::config::{Mode, Setup, SimConfig, setup};
use crate::uncertainty::Efss;

/// One row of the closed-loop trace. The state, input, and disturbance
/// belong to the step leaving instant `t`; `v_true` is the parameter
/// current at `t` (it drove the arriving step). Trigger-only fields are
/// set on rows where a new solve happened.
#[derive(Clone, Debug)]
pub struct TraceRecord {
    pub t: usize,
    pub x: DVector<f64>,
    pub u: DVector<f64>,
    pub v_true: f64,
    pub d_true: f64,
    pub is_trigger: bool,
    pub h_star: Option<usize>,
    pub beta: Option<f64>,
    pub value: Option<f64>,
    pub efss_lo: Option<f64>,
    pub efss_hi: Option<f64>,
}

/// Aggregates over one run.
#[derive(Clone, Debug)]
pub struct Metrics {
    /// Accumulated closed-loop stage cost.
    pub j_p: f64,
    /// Executed steps per trigger.
    pub average_sampling_time: f64,
    /// Steps at which the state or input constraint was violated.
    pub constraint_violations: usize,
    pub trigger_count: usize,
    /// Width of the parameter set when the run ended.
    pub efss_final_width: f64,
    /// Measurement updates discarded to keep the parameter set nonempty.
    pub estimation_faults: usize,
    /// Triggers whose updated parameter set missed the true parameter.
    pub containment_failures: usize,
    /// Intermediate states that escaped the guaranteed reach tube.
    pub tube_failures: usize,
    pub v_rate_clips: usize,
    pub d_magnitude_clips: usize,
}

/// Per-trigger solver diagnostics that do not go into the CSV trace:
/// enough to audit the prefix-length rule after the fact.
#[derive(Clone, Debug)]
pub struct TriggerLog {
    pub t: usize,
    pub h_star: usize,
    pub beta: f64,
    /// Worst-case value of the committed solution.
    pub value: f64,
    /// Worst-case value at prefix length one.
    pub value_h1: f64,
    pub h1_feasible: bool,
}

/// Trace, metrics, and an optional fault. A fault means the loop
/// aborted (the solver found no feasible input); the trace then covers
/// only the steps executed before the abort.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub trace: Vec<TraceRecord>,
    pub triggers: Vec<TriggerLog>,
    pub metrics: Metrics,
    pub fault: Option<String>,
}

pub fn run_closed_loop(cfg: &SimConfig) -> Result<RunResult> {
    let s = setup(cfg)?;
    run_with_setup(cfg, &s)
}

/// Run against an already-built stack, so batch callers can share it.
pub fn run_with_setup(cfg: &SimConfig, s: &Setup) -> Result<RunResult> {
    let profile = cfg.resolve_profile(cfg.sim.seed);
    let steps = cfg.sim.steps;
    let adaptive = matches!(cfg.sim.mode, Mode::Adaptive);
    // Raw disturbance scaling into state coordinates.
    let d_scale = cfg.plant.t / cfg.plant.m;

    let mut x = cfg.x0();
    let mut efss = Efss::initial(&s.model);
    let mut prev_sol: Option<MpcSolution> = None;
    let mut last_trigger_x = x.clone();
    let mut window_inputs: Vec<DVector<f64>> = Vec::new();
    let mut window_states: Vec<DVector<f64>> = Vec::new();

    let mut trace: Vec<TraceRecord> = Vec::with_capacity(steps);
    let mut triggers: Vec<TriggerLog> = Vec::new();
    let mut fault = None;
    let mut trigger_count = 0usize;
    let mut estimation_faults = 0usize;
    let mut containment_failures = 0usize;
    let mut tube_failures = 0usize;

    let mut t = 0usize;
    while t < steps {
        if t > 0 && adaptive {
            let update = update_efss(
                &efss,
                &last_trigger_x,
                &x,
                &window_inputs,
                &s.model,
                &s.plant,
            )?;
            estimation_faults += update.fault as usize;
            if !update
                .efss
                .set
                .contains_point(&dvector![profile.v[t]], MEMBERSHIP_TOL)
            {
                containment_failures += 1;
            }
            for (i, xi) in window_states.iter().enumerate() {
                if !update.tube.contains(i + 1, xi, MEMBERSHIP_TOL) {
                    tube_failures += 1;
                }
            }
            efss = update.efss;
        }

        let decision = match compute_trigger(
            &x,
            &efss,
            &s.model,
            s.n,
            &s.plant,
            &s.weights,
            &s.term,
            &s.trigger,
            &s.search,
            prev_sol.as_ref(),
        ) {
            Ok(d) => d,
            Err(Error::Infeasible(msg)) => {
                fault = Some(format!(
                    "no feasible input at t = {t}, x = ({:.6}, {:.6}): {msg}",
                    x[0], x[1]
                ));
                break;
            }
            Err(e) => return Err(e),
        };
        trigger_count += 1;
        triggers.push(TriggerLog {
            t,
            h_star: decision.h_star,
            beta: decision.beta,
            value: decision.chosen().value,
            value_h1: decision.solutions[0].value,
            h1_feasible: decision.solutions[0].feasible,
        });
        let hull = efss.set.hull_intersection()?;
        let h_exec = decision.h_star.min(steps - t);

        last_trigger_x = x.clone();
        window_inputs.clear();
        window_states.clear();
        for j in 0..h_exec {
            let u = decision.chosen().open_inputs[j].clone();
            let at_trigger = j == 0;
            trace.push(TraceRecord {
                t,
                x: x.clone(),
                u: u.clone(),
                v_true: profile.v[t],
                d_true: profile.d[t],
                is_trigger: at_trigger,
                h_star: at_trigger.then_some(decision.h_star),
                beta: at_trigger.then_some(decision.beta),
                value: at_trigger.then_some(decision.chosen().value),
                efss_lo: at_trigger.then_some(hull.lower()[0]),
                efss_hi: at_trigger.then_some(hull.upper()[0]),
            });
            let v_next = dvector![profile.v[t + 1]];
            let d_state = dvector![0.0, d_scale * profile.d[t]];
            x = s.plant.step(&x, &u, &v_next, &d_state);
            window_inputs.push(u);
            if j + 1 < h_exec {
                window_states.push(x.clone());
            }
            t += 1;
        }
        prev_sol = Some(decision.chosen().clone());
    }

    let j_p: f64 = trace
        .iter()
        .map(|r| s.weights.stage_cost(&r.x, &r.u))
        .sum();
    let metrics = Metrics {
        j_p,
        average_sampling_time: if trigger_count > 0 {
            trace.len() as f64 / trigger_count as f64
        } else {
            0.0
        },
        constraint_violations: count_violations(&trace, &x, s),
        trigger_count,
        efss_final_width: efss.set.diameter()?,
        estimation_faults,
        containment_failures,
        tube_failures,
        v_rate_clips: profile.v_rate_clips,
        d_magnitude_clips: profile.d_magnitude_clips,
    };
    Ok(RunResult {
        trace,
        triggers,
        metrics,
        fault,
    })
}

fn count_violations(trace: &[TraceRecord], x_final: &DVector<f64>, s: &Setup) -> usize {
    let tol = 1e-9;
    let state_ok = |x: &DVector<f64>| {
        s.plant
            .state_bounds
            .contains(x, tol)
    };
    let input_ok = |u: &DVector<f64>| s.plant.input_bounds.contains(u, tol);
    let mut count = trace
        .iter()
        .filter(|r| !state_ok(&r.x) || !input_ok(&r.u))
        .count();
    if !state_ok(x_final) {
        count += 1;
    }
    count
}
