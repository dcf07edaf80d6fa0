//! The runtime monitor.
//!
//! [`Monitor`] is the ReLU-specific loop: build a lookahead cone from the
//! observed state, and only if it reaches the unsafe set run the boundary cube
//! sweep. [`SchematicMonitor`] is the same loop over abstract abstraction and
//! verifier plug-ins. Both latch: once a step returns 0, every later step does.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cone::{construct_cone, ConeResult};
use crate::dynamics::SystemSpec;
use crate::relu_network::ReluNetwork;
use crate::verifier::{
    BoundaryReport, Condition, CubeVerifier, SweepFailure, VerifiedCache, VerifierConfig,
};

/// Extra slices added to the horizon: one interval to observe, one to compute.
pub const HORIZON_MARGIN_STEPS: usize = 2;
const WINDOW_LEN: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum MonitorError {
    #[error("horizon must be at least one step")]
    Horizon,
    #[error("epsilon must be positive, got {0}")]
    Epsilon(f64),
    #[error("bloat must be finite and nonnegative, got {0}")]
    Bloat(f64),
    #[error("budget {budget} s exceeds the observation interval {epsilon} s")]
    Budget { budget: f64, epsilon: f64 },
    #[error("lambda must be finite and nonnegative, got {0}")]
    Lambda(f64),
    #[error("network input dimension {net} does not match state dimension {state}")]
    Dimension { net: usize, state: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorConfig {
    pub horizon_steps: usize,
    /// Observation interval in seconds; equals the system's `dt`.
    pub epsilon: f64,
    pub bloat: f64,
    #[serde(default)]
    pub verifier: VerifierConfig,
    /// Soft deadline per step in seconds.
    pub budget: f64,
}

impl MonitorConfig {
    /// Defaults for `spec`: budget equal to the observation interval.
    pub fn for_spec(spec: &SystemSpec, horizon_steps: usize, bloat: f64) -> Self {
        Self {
            horizon_steps,
            epsilon: spec.dt(),
            bloat,
            verifier: VerifierConfig::default(),
            budget: spec.dt(),
        }
    }

    pub fn validate(&self) -> Result<(), MonitorError> {
        if self.horizon_steps == 0 {
            return Err(MonitorError::Horizon);
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(MonitorError::Epsilon(self.epsilon));
        }
        if !(self.bloat >= 0.0) || !self.bloat.is_finite() {
            return Err(MonitorError::Bloat(self.bloat));
        }
        if !(self.budget <= self.epsilon) {
            return Err(MonitorError::Budget {
                budget: self.budget,
                epsilon: self.epsilon,
            });
        }
        if !(self.verifier.lambda >= 0.0) || !self.verifier.lambda.is_finite() {
            return Err(MonitorError::Lambda(self.verifier.lambda));
        }
        Ok(())
    }

    /// Cone depth actually explored.
    pub fn effective_horizon(&self) -> usize {
        self.horizon_steps + HORIZON_MARGIN_STEPS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cause {
    /// The cone reached an unsafe state the certificate does not exclude, or
    /// the observed state is already outside the invariant set.
    UnsafeReach,
    /// A boundary cube failed verification.
    CubeViolation,
    /// An LP failed or the observation left the state domain.
    Numerical,
}

impl fmt::Display for Cause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cause::UnsafeReach => "unsafe_reach",
            Cause::CubeViolation => "cube_violation",
            Cause::Numerical => "numerical",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub value: bool,
    /// Present iff `value` is false.
    pub cause: Option<Cause>,
    pub witness: Option<Vec<f64>>,
    pub depth: Option<usize>,
    /// The step took longer than the configured budget.
    pub budget_overrun: bool,
}

impl Verdict {
    pub fn pass() -> Self {
        Self {
            value: true,
            cause: None,
            witness: None,
            depth: None,
            budget_overrun: false,
        }
    }

    pub fn fail(cause: Cause, witness: Option<Vec<f64>>, depth: Option<usize>) -> Self {
        Self {
            value: false,
            cause: Some(cause),
            witness,
            depth,
            budget_overrun: false,
        }
    }

    /// 1 or 0.
    pub fn bit(&self) -> u8 {
        u8::from(self.value)
    }

    /// Same verdict without timing information.
    pub fn untimed(&self) -> Self {
        Self {
            budget_overrun: false,
            ..self.clone()
        }
    }

    fn from_report(report: &BoundaryReport) -> Self {
        if report.verdict {
            return Self::pass();
        }
        let cause = match &report.failure {
            Some(SweepFailure::UnsafeInInvariant) | Some(SweepFailure::StateOutsideInvariant) => {
                Cause::UnsafeReach
            }
            Some(SweepFailure::Cube(o)) if o.condition == Some(Condition::Numerical) => {
                Cause::Numerical
            }
            Some(SweepFailure::Cube(_)) => Cause::CubeViolation,
            Some(SweepFailure::Numerical) | None => Cause::Numerical,
        };
        Self::fail(cause, report.witness.clone(), Some(report.depth))
    }
}

/// Wall-clock split of one step, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepTiming {
    pub construct_ms: f64,
    pub verify_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorState {
    pub verdict: bool,
    pub step_index: u64,
    pub cache: VerifiedCache,
    pub timing: Vec<StepTiming>,
    pub trace_window: VecDeque<Vec<f64>>,
    latched: Option<Verdict>,
}

impl MonitorState {
    fn new() -> Self {
        Self {
            verdict: true,
            step_index: 0,
            cache: VerifiedCache::new(),
            timing: Vec::new(),
            trace_window: VecDeque::with_capacity(WINDOW_LEN),
            latched: None,
        }
    }

    fn observe(&mut self, x: &[f64]) {
        if self.trace_window.len() == WINDOW_LEN {
            self.trace_window.pop_front();
        }
        self.trace_window.push_back(x.to_vec());
    }

    /// The verdict that latched the monitor to 0, if any.
    pub fn latched(&self) -> Option<&Verdict> {
        self.latched.as_ref()
    }
}

type FailSafe = Box<dyn FnMut(&Verdict) + Send>;

/// Runtime monitor for a ReLU certificate on a linear control-affine system.
pub struct Monitor {
    spec: Arc<SystemSpec>,
    net: Arc<ReluNetwork>,
    cfg: MonitorConfig,
    state: MonitorState,
    fail_safe: Option<FailSafe>,
}

impl fmt::Debug for Monitor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Monitor")
            .field("cfg", &self.cfg)
            .field("state", &self.state)
            .finish_non_exhaustive()
    }
}

impl Monitor {
    pub fn new(
        spec: Arc<SystemSpec>,
        net: Arc<ReluNetwork>,
        cfg: MonitorConfig,
    ) -> Result<Self, MonitorError> {
        cfg.validate()?;
        if net.input_dim() != spec.state_dim() {
            return Err(MonitorError::Dimension {
                net: net.input_dim(),
                state: spec.state_dim(),
            });
        }
        Ok(Self {
            spec,
            net,
            cfg,
            state: MonitorState::new(),
            fail_safe: None,
        })
    }

    /// Registers a callback run once, on the step that latches the verdict to 0.
    pub fn with_fail_safe(mut self, hook: impl FnMut(&Verdict) + Send + 'static) -> Self {
        self.fail_safe = Some(Box::new(hook));
        self
    }

    pub fn state(&self) -> &MonitorState {
        &self.state
    }

    pub fn config(&self) -> &MonitorConfig {
        &self.cfg
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn network(&self) -> &ReluNetwork {
        &self.net
    }

    pub fn verdict(&self) -> bool {
        self.state.verdict
    }

    /// Drops cached cube verifications; verdicts are unaffected.
    pub fn clear_cache(&self) {
        self.state.cache.clear();
    }

    /// Processes one observed state and returns the (latched) verdict.
    pub fn next(&mut self, x: &[f64]) -> Verdict {
        let start = Instant::now();
        self.state.step_index += 1;
        self.state.observe(x);

        if let Some(latched) = &self.state.latched {
            let v = latched.untimed();
            let total = ms_since(start);
            self.state.timing.push(StepTiming {
                total_ms: total,
                ..Default::default()
            });
            return v;
        }

        let mut timing = StepTiming::default();
        let buffer = if !in_domain(&self.spec, x) {
            Verdict::fail(Cause::Numerical, Some(x.to_vec()), None)
        } else {
            let horizon = self.cfg.effective_horizon();
            let t0 = Instant::now();
            let cone = construct_cone(&self.spec, x, horizon, self.cfg.bloat);
            timing.construct_ms = ms_since(t0);
            let t1 = Instant::now();
            let v = sweep(
                &CubeVerifier::new(&self.spec, &self.net, &self.cfg.verifier),
                x,
                cone,
                horizon,
                &self.state.cache,
            );
            timing.verify_ms = ms_since(t1);
            v
        };

        let mut verdict = if self.state.verdict {
            buffer
        } else {
            // unreachable while latching short-circuits, kept for clarity of the rule
            Verdict::fail(Cause::Numerical, None, None)
        };
        timing.total_ms = ms_since(start);
        verdict.budget_overrun = timing.total_ms > self.cfg.budget * 1e3;
        self.state.timing.push(timing);

        if !verdict.value {
            self.state.verdict = false;
            self.state.latched = Some(verdict.untimed());
            if let Some(hook) = self.fail_safe.as_mut() {
                hook(&verdict);
            }
        }
        verdict
    }
}

fn in_domain(spec: &SystemSpec, x: &[f64]) -> bool {
    x.len() == spec.state_dim() && x.iter().all(|v| v.is_finite()) && spec.state_bounds().contains(x, 0.0)
}

fn sweep(
    verifier: &CubeVerifier<'_>,
    x: &[f64],
    cone: ConeResult,
    horizon: usize,
    cache: &VerifiedCache,
) -> Verdict {
    match cone.unsafe_witness {
        None => Verdict::pass(),
        Some(w) => {
            let report = verifier.verify_cubes_on_boundary(x, &w, cone.cone, cone.depth, horizon, cache);
            Verdict::from_report(&report)
        }
    }
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Builds a monitor; shorthand for [`Monitor::new`].
pub fn monitor_init(
    spec: Arc<SystemSpec>,
    net: Arc<ReluNetwork>,
    cfg: MonitorConfig,
) -> Result<Monitor, MonitorError> {
    Monitor::new(spec, net, cfg)
}

/// Over-approximates the states reachable within a horizon from a trace prefix.
///
/// Implementations must contain every future state of the monitored system
/// within `horizon_steps` intervals of the last observation.
pub trait Abstraction {
    type Region;
    fn abstract_region(&self, window: &VecDeque<Vec<f64>>, horizon_steps: usize) -> Self::Region;
}

/// Decides whether the certificate condition holds on a region.
pub trait RegionVerifier<R> {
    fn verify(&self, region: R) -> Verdict;
}

/// Generic monitor loop over plug-in abstraction and verifier.
pub struct SchematicMonitor<A, V> {
    abstraction: A,
    verifier: V,
    horizon_steps: usize,
    verdict: bool,
    step_index: u64,
    window: VecDeque<Vec<f64>>,
    latched: Option<Verdict>,
}

impl<A, V> SchematicMonitor<A, V>
where
    A: Abstraction,
    V: RegionVerifier<A::Region>,
{
    pub fn new(abstraction: A, verifier: V, horizon_steps: usize) -> Self {
        Self {
            abstraction,
            verifier,
            horizon_steps,
            verdict: true,
            step_index: 0,
            window: VecDeque::with_capacity(WINDOW_LEN),
            latched: None,
        }
    }

    pub fn verdict(&self) -> bool {
        self.verdict
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    /// Appends `x`, verifies the abstraction over `horizon + 2` intervals, and latches.
    pub fn next(&mut self, x: &[f64]) -> Verdict {
        self.step_index += 1;
        if self.window.len() == WINDOW_LEN {
            self.window.pop_front();
        }
        self.window.push_back(x.to_vec());
        if let Some(v) = &self.latched {
            return v.clone();
        }
        let region = self
            .abstraction
            .abstract_region(&self.window, self.horizon_steps + HORIZON_MARGIN_STEPS);
        let buffer = self.verifier.verify(region);
        if !buffer.value {
            self.verdict = false;
            self.latched = Some(buffer.clone());
        }
        buffer
    }
}

/// Cone abstraction from the most recent observation.
#[derive(Debug, Clone)]
pub struct ConeAbstraction {
    pub spec: Arc<SystemSpec>,
    pub bloat: f64,
}

/// Region produced by [`ConeAbstraction`]: the observation and its cone.
#[derive(Debug, Clone)]
pub struct ObservedCone {
    pub state: Vec<f64>,
    pub cone: Option<ConeResult>,
    pub horizon: usize,
}

impl Abstraction for ConeAbstraction {
    type Region = ObservedCone;

    fn abstract_region(&self, window: &VecDeque<Vec<f64>>, horizon_steps: usize) -> ObservedCone {
        let x = window.back().expect("window holds the current state").clone();
        let cone = in_domain(&self.spec, &x).then(|| construct_cone(&self.spec, &x, horizon_steps, self.bloat));
        ObservedCone {
            state: x,
            cone,
            horizon: horizon_steps,
        }
    }
}

/// Boundary cube sweep as a region verifier.
#[derive(Debug)]
pub struct CubeSweepVerifier {
    pub spec: Arc<SystemSpec>,
    pub net: Arc<ReluNetwork>,
    pub cfg: VerifierConfig,
    pub cache: VerifiedCache,
}

impl RegionVerifier<ObservedCone> for CubeSweepVerifier {
    fn verify(&self, region: ObservedCone) -> Verdict {
        match region.cone {
            None => Verdict::fail(Cause::Numerical, Some(region.state), None),
            Some(cone) => sweep(
                &CubeVerifier::new(&self.spec, &self.net, &self.cfg),
                &region.state,
                cone,
                region.horizon,
                &self.cache,
            ),
        }
    }
}

/// Verifier returning a fixed verdict, for exercising the generic loop.
#[derive(Debug, Clone, Copy)]
pub struct ConstantVerifier(pub bool);

impl<R> RegionVerifier<R> for ConstantVerifier {
    fn verify(&self, _region: R) -> Verdict {
        if self.0 {
            Verdict::pass()
        } else {
            Verdict::fail(Cause::CubeViolation, None, None)
        }
    }
}

/// The ReLU monitor expressed through the generic loop.
pub fn relu_schematic(
    spec: Arc<SystemSpec>,
    net: Arc<ReluNetwork>,
    cfg: &MonitorConfig,
) -> SchematicMonitor<ConeAbstraction, CubeSweepVerifier> {
    SchematicMonitor::new(
        ConeAbstraction {
            spec: spec.clone(),
            bloat: cfg.bloat,
        },
        CubeSweepVerifier {
            spec,
            net,
            cfg: cfg.verifier.clone(),
            cache: VerifiedCache::new(),
        },
        cfg.horizon_steps,
    )
}
