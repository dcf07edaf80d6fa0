//! Local verification of a ReLU barrier on the activation regions ("cubes")
//! that the lookahead cone can reach.
//!
//! Starting from a boundary point found by bisection, cubes are checked one at
//! a time with small LPs and the search spreads to 1-bit Hamming neighbors that
//! also touch the zero level set of the certificate.

use std::collections::{HashSet, VecDeque};
use std::sync::RwLock;

use crate::cone::{expand_slice, Cone};
use crate::dynamics::SystemSpec;
use crate::geometry::{
    lp_minimize, polytope_nonempty, AffineForm, Halfspace, IntervalBox, LpError, LpResult,
    Polytope, Sense, LP_TOL,
};
use crate::relu_network::{
    cube_polytope_from, masked_affine, ActivationPattern, MaskedAffine, NetworkError, PatternKey,
    ReluNetwork, DEFAULT_UNSTABLE_TOL,
};

/// Bisection iteration cap.
pub const MAX_BISECTIONS: usize = 64;

/// How the unknown control input is quantified in the flow conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantifierMode {
    /// The condition must hold for every `u` in the control box.
    #[default]
    Robust,
    /// Some `u` in the control box must satisfy the condition.
    Existential,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct VerifierConfig {
    pub mode: QuantifierMode,
    /// Check the sign conditions on unstable-neuron faces of the boundary.
    pub check_unstable: bool,
    /// Check `dB/dt + lambda * B >= 0` on the whole `B >= 0` part of the cube.
    pub interior_lie_check: bool,
    pub lambda: f64,
    pub tol: f64,
    /// After the last cone slice, keep walking boundary cubes outside the cone
    /// to reach cubes inside it that the sweep could not.
    pub surface_walk: bool,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        Self {
            mode: QuantifierMode::Robust,
            check_unstable: false,
            interior_lie_check: false,
            lambda: 0.0,
            tol: LP_TOL,
            surface_walk: true,
        }
    }
}

/// An activation region with the certificate's affine form on it.
#[derive(Debug, Clone)]
pub struct Cube {
    pub pattern: ActivationPattern,
    /// Cube polytope intersected with the state bounds.
    pub region: Polytope,
    pub masked: MaskedAffine,
}

impl Cube {
    pub fn new(
        net: &ReluNetwork,
        spec: &SystemSpec,
        pattern: ActivationPattern,
    ) -> Result<Self, NetworkError> {
        let pattern = if pattern.is_canonical() {
            pattern
        } else {
            pattern.canonical()
        };
        let masked = masked_affine(net, &pattern)?;
        let mut region = cube_polytope_from(&masked, &pattern, net.input_dim());
        spec.state_bounds().append_to(&mut region);
        Ok(Self {
            pattern,
            region,
            masked,
        })
    }

    pub fn barrier(&self) -> &AffineForm {
        &self.masked.output
    }

    /// The region restricted to `B = 0`.
    pub fn boundary_slice(&self) -> Polytope {
        self.region
            .with(Halfspace::from_form(&self.masked.output, Sense::Eq))
    }

    pub fn key(&self) -> PatternKey {
        self.pattern.key()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeStatus {
    Valid,
    Violation,
    Empty,
    OutsideCone,
}

/// Which check produced a violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// `B >= 0` part of the cube meets an unsafe polytope.
    Disjointness,
    /// Certificate decreases across its zero level set.
    BoundaryFlow,
    /// Flow leaves the side of an unstable face that the pattern assumes.
    UnstableFace { neuron: usize },
    /// `dB/dt + lambda B < 0` inside the invariant set.
    InteriorLie,
    /// An LP failed; treated as a violation.
    Numerical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationOutcome {
    pub status: OutcomeStatus,
    pub witness: Option<Vec<f64>>,
    /// Smallest LP value over the flow checks that ran.
    pub margin: f64,
    pub condition: Option<Condition>,
}

impl VerificationOutcome {
    fn valid(margin: f64) -> Self {
        Self {
            status: OutcomeStatus::Valid,
            witness: None,
            margin,
            condition: None,
        }
    }

    fn violation(condition: Condition, witness: Option<Vec<f64>>, margin: f64) -> Self {
        Self {
            status: OutcomeStatus::Violation,
            witness,
            margin,
            condition: Some(condition),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.status == OutcomeStatus::Valid
    }
}

/// Worst case over the control box in robust mode, best case otherwise.
fn control_pick(mode: QuantifierMode) -> fn(&IntervalBox, &[f64]) -> f64 {
    match mode {
        QuantifierMode::Robust => IntervalBox::min_dot,
        QuantifierMode::Existential => IntervalBox::max_dot,
    }
}

/// Lie derivative of `form` along the dynamics with the control term resolved
/// over the box: returns `(coeffs, constant)` of the state-dependent part plus
/// the control contribution chosen by `control`.
fn lie_form(
    spec: &SystemSpec,
    form: &[f64],
    control: impl Fn(&IntervalBox, &[f64]) -> f64,
) -> (Vec<f64>, f64) {
    let sys = spec.system();
    let m = spec.state_dim();
    let coeffs: Vec<f64> = (0..m)
        .map(|j| (0..m).map(|i| sys.a[(i, j)] * form[i]).sum())
        .collect();
    let drift: f64 = (0..m).map(|i| sys.c[i] * form[i]).sum();
    let g: Vec<f64> = (0..spec.control_dim())
        .map(|k| (0..m).map(|i| sys.b[(i, k)] * form[i]).sum())
        .collect();
    (coeffs, drift + control(spec.control_box(), &g))
}

/// Runs the certificate checks on one cube.
pub fn verify_linear(cube: &Cube, spec: &SystemSpec, cfg: &VerifierConfig) -> VerificationOutcome {
    match verify_linear_inner(cube, spec, cfg) {
        Ok(outcome) => outcome,
        Err(_) => VerificationOutcome::violation(Condition::Numerical, None, f64::NEG_INFINITY),
    }
}

fn verify_linear_inner(
    cube: &Cube,
    spec: &SystemSpec,
    cfg: &VerifierConfig,
) -> Result<VerificationOutcome, LpError> {
    let b = cube.barrier();
    let zeros = vec![0.0; spec.state_dim()];

    // (a) the invariant part of the cube avoids every unsafe polytope
    let nonneg = cube.region.with(Halfspace::from_form(b, Sense::Ge));
    for unsafe_poly in spec.unsafe_set() {
        let p = nonneg.intersect(unsafe_poly);
        if let LpResult::Optimal { point, .. } = lp_minimize(&p, &zeros, 0.0)? {
            return Ok(VerificationOutcome::violation(
                Condition::Disjointness,
                Some(point),
                f64::NEG_INFINITY,
            ));
        }
    }

    let lower_u = control_pick(cfg.mode);
    let mut margin = f64::INFINITY;

    // (b) the certificate does not decrease on its zero level set
    let boundary = cube.boundary_slice();
    let (coeffs, constant) = lie_form(spec, &b.coeffs, lower_u);
    match lp_minimize(&boundary, &coeffs, constant)? {
        LpResult::Infeasible => {}
        LpResult::Unbounded => {
            return Ok(VerificationOutcome::violation(
                Condition::BoundaryFlow,
                None,
                f64::NEG_INFINITY,
            ))
        }
        LpResult::Optimal { value, point } => {
            margin = margin.min(value);
            if value < -cfg.tol {
                return Ok(VerificationOutcome::violation(
                    Condition::BoundaryFlow,
                    Some(point),
                    value,
                ));
            }
        }
    }

    // (c) sign conditions on unstable faces that meet the boundary
    if cfg.check_unstable {
        for (idx, z) in cube.masked.pre.iter().enumerate() {
            if z.is_constant() {
                continue;
            }
            let face = boundary.with(Halfspace::from_form(z, Sense::Eq));
            let active = cube.pattern.active.get(idx);
            // active faces need dz/dt >= 0, inactive ones dz/dt <= 0
            let (coeffs, constant) = if active {
                lie_form(spec, &z.coeffs, lower_u)
            } else {
                let neg: Vec<f64> = z.coeffs.iter().map(|v| -v).collect();
                lie_form(spec, &neg, lower_u)
            };
            match lp_minimize(&face, &coeffs, constant)? {
                LpResult::Infeasible => {}
                LpResult::Unbounded => {
                    return Ok(VerificationOutcome::violation(
                        Condition::UnstableFace { neuron: idx },
                        None,
                        f64::NEG_INFINITY,
                    ))
                }
                LpResult::Optimal { value, point } => {
                    margin = margin.min(value);
                    if value < -cfg.tol {
                        return Ok(VerificationOutcome::violation(
                            Condition::UnstableFace { neuron: idx },
                            Some(point),
                            value,
                        ));
                    }
                }
            }
        }
    }

    // (d) optional decay condition inside the invariant set
    if cfg.interior_lie_check {
        let (mut coeffs, mut constant) = lie_form(spec, &b.coeffs, lower_u);
        for (c, w) in coeffs.iter_mut().zip(&b.coeffs) {
            *c += cfg.lambda * w;
        }
        constant += cfg.lambda * b.offset;
        match lp_minimize(&nonneg, &coeffs, constant)? {
            LpResult::Infeasible => {}
            LpResult::Unbounded => {
                return Ok(VerificationOutcome::violation(
                    Condition::InteriorLie,
                    None,
                    f64::NEG_INFINITY,
                ))
            }
            LpResult::Optimal { value, point } => {
                margin = margin.min(value);
                if value < -cfg.tol {
                    return Ok(VerificationOutcome::violation(
                        Condition::InteriorLie,
                        Some(point),
                        value,
                    ));
                }
            }
        }
    }

    Ok(VerificationOutcome::valid(margin))
}

/// Robust or existential Lie derivative of the certificate form at a concrete
/// state. Used to re-check witnesses without an LP.
pub fn boundary_flow_at(
    spec: &SystemSpec,
    barrier: &AffineForm,
    mode: QuantifierMode,
    x: &[f64],
) -> f64 {
    let (coeffs, constant) = lie_form(spec, &barrier.coeffs, control_pick(mode));
    coeffs.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + constant
}

/// Result of bisecting between a safe and an unsafe state.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundarySearch {
    /// A point with `|B| <= tol` (or the last midpoint) and its canonical pattern.
    Found {
        point: Vec<f64>,
        pattern: ActivationPattern,
    },
    /// `B(x_unsafe) >= 0`: the invariant set already contains an unsafe state.
    UnsafeInInvariant { value: f64 },
    /// `B(x_safe) < 0`: the observed state is already outside the invariant set.
    SafeOutsideInvariant { value: f64 },
}

/// Bisects `[x_safe, x_unsafe]` on the sign of `B`.
pub fn binary_search_boundary(
    net: &ReluNetwork,
    x_safe: &[f64],
    x_unsafe: &[f64],
    tol_b: f64,
) -> Result<BoundarySearch, NetworkError> {
    let b_safe = net.forward(x_safe)?;
    let b_unsafe = net.forward(x_unsafe)?;
    if b_unsafe >= 0.0 {
        return Ok(BoundarySearch::UnsafeInInvariant { value: b_unsafe });
    }
    if b_safe < 0.0 {
        return Ok(BoundarySearch::SafeOutsideInvariant { value: b_safe });
    }
    let mut lo = x_safe.to_vec();
    let mut hi = x_unsafe.to_vec();
    let mut mid = midpoint(&lo, &hi);
    for _ in 0..MAX_BISECTIONS {
        mid = midpoint(&lo, &hi);
        let v = net.forward(&mid)?;
        if v.abs() <= tol_b {
            break;
        }
        if v >= 0.0 {
            lo = mid.clone();
        } else {
            hi = mid.clone();
        }
    }
    let pattern = net.canonical_pattern(&mid, DEFAULT_UNSTABLE_TOL)?;
    Ok(BoundarySearch::Found {
        point: mid,
        pattern,
    })
}

/// Default bisection tolerance for a search starting at `x_safe`.
pub fn default_tol_b(net: &ReluNetwork, x_safe: &[f64]) -> Result<f64, NetworkError> {
    Ok(1e-6 * (1.0 + net.forward(x_safe)?.abs()))
}

fn midpoint(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()
}

/// All patterns at Hamming distance one, in layer-major neuron order.
pub fn neighborhood(pattern: &ActivationPattern) -> Vec<ActivationPattern> {
    (0..pattern.num_neurons())
        .map(|idx| {
            let mut p = pattern.canonical();
            p.active.flip(idx);
            p
        })
        .collect()
}

/// Patterns already verified valid. Shared across monitor steps.
#[derive(Debug, Default)]
pub struct VerifiedCache {
    inner: RwLock<HashSet<PatternKey>>,
}

impl VerifiedCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, key: &PatternKey) -> bool {
        self.inner.read().expect("cache lock").contains(key)
    }

    pub fn insert(&self, key: PatternKey) {
        self.inner.write().expect("cache lock").insert(key);
    }

    pub fn len(&self) -> usize {
        self.inner.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.inner.write().expect("cache lock").clear();
    }

    pub fn keys(&self) -> Vec<PatternKey> {
        let mut keys: Vec<_> = self.inner.read().expect("cache lock").iter().cloned().collect();
        keys.sort();
        keys
    }
}

impl Clone for VerifiedCache {
    fn clone(&self) -> Self {
        Self {
            inner: RwLock::new(self.inner.read().expect("cache lock").clone()),
        }
    }
}

impl PartialEq for VerifiedCache {
    fn eq(&self, other: &Self) -> bool {
        *self.inner.read().expect("cache lock") == *other.inner.read().expect("cache lock")
    }
}

/// Why a boundary sweep returned verdict 0.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepFailure {
    /// The unsafe witness itself has `B >= 0`.
    UnsafeInInvariant,
    /// The current state already has `B < 0`.
    StateOutsideInvariant,
    /// A cube failed [`verify_linear`].
    Cube(VerificationOutcome),
    /// Network evaluation failed (dimension mismatch).
    Numerical,
}

#[derive(Debug, Clone)]
pub struct BoundaryReport {
    pub verdict: bool,
    pub failure: Option<SweepFailure>,
    pub witness: Option<Vec<f64>>,
    /// Pattern of the failing cube, if any.
    pub failing_pattern: Option<PatternKey>,
    /// Cubes verified (or taken from the cache) in visit order.
    pub verified: Vec<PatternKey>,
    /// Cone after the final sweep.
    pub cone: Cone,
    pub depth: usize,
}

/// The per-cube verifier bound to one system, certificate, and configuration.
#[derive(Debug, Clone, Copy)]
pub struct CubeVerifier<'a> {
    pub spec: &'a SystemSpec,
    pub net: &'a ReluNetwork,
    pub cfg: &'a VerifierConfig,
}

impl<'a> CubeVerifier<'a> {
    pub fn new(spec: &'a SystemSpec, net: &'a ReluNetwork, cfg: &'a VerifierConfig) -> Self {
        Self { spec, net, cfg }
    }

    pub fn cube(&self, pattern: ActivationPattern) -> Result<Cube, NetworkError> {
        Cube::new(self.net, self.spec, pattern)
    }

    /// Does the cube's zero level set have a point inside the state bounds?
    pub fn touches_boundary(&self, cube: &Cube) -> Result<bool, LpError> {
        polytope_nonempty(&cube.boundary_slice())
    }

    /// Does the cube's zero level set meet some slice of the cone?
    pub fn meets_cone(&self, cube: &Cube, cone: &Cone) -> Result<bool, LpError> {
        let boundary = cube.boundary_slice();
        let mut hull_probe = boundary.clone();
        cone.hull().append_to(&mut hull_probe);
        if !polytope_nonempty(&hull_probe)? {
            return Ok(false);
        }
        // later slices are the largest, so they are tried first
        for slice in cone.slices.iter().rev() {
            let mut p = boundary.clone();
            slice.append_to(&mut p);
            if polytope_nonempty(&p)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn check(&self, cube: &Cube, cache: &VerifiedCache) -> VerificationOutcome {
        if cache.contains(&cube.key()) {
            return VerificationOutcome::valid(f64::INFINITY);
        }
        let outcome = verify_linear(cube, self.spec, self.cfg);
        if outcome.is_valid() {
            cache.insert(cube.key());
        }
        outcome
    }

    /// Boundary sweep from the bisection cube between `x` and `x_unsafe`.
    ///
    /// Cubes whose boundary piece lies outside the current cone are deferred
    /// and retried after the cone grows by one slice; the sweep ends when no
    /// deferred cubes remain or the cone reaches `horizon`. Any failing cube
    /// ends the sweep with verdict 0.
    pub fn verify_cubes_on_boundary(
        &self,
        x: &[f64],
        x_unsafe: &[f64],
        mut cone: Cone,
        mut depth: usize,
        horizon: usize,
        cache: &VerifiedCache,
    ) -> BoundaryReport {
        let mut report = BoundaryReport {
            verdict: true,
            failure: None,
            witness: None,
            failing_pattern: None,
            verified: Vec::new(),
            cone: cone.clone(),
            depth,
        };
        let fail = |mut report: BoundaryReport, failure, witness, pattern, cone, depth| {
            report.verdict = false;
            report.failure = Some(failure);
            report.witness = witness;
            report.failing_pattern = pattern;
            report.cone = cone;
            report.depth = depth;
            report
        };

        let tol_b = match default_tol_b(self.net, x) {
            Ok(t) => t,
            Err(_) => return fail(report, SweepFailure::Numerical, None, None, cone, depth),
        };
        let seed = match binary_search_boundary(self.net, x, x_unsafe, tol_b) {
            Ok(BoundarySearch::Found { pattern, .. }) => pattern,
            Ok(BoundarySearch::UnsafeInInvariant { .. }) => {
                return fail(
                    report,
                    SweepFailure::UnsafeInInvariant,
                    Some(x_unsafe.to_vec()),
                    None,
                    cone,
                    depth,
                )
            }
            Ok(BoundarySearch::SafeOutsideInvariant { .. }) => {
                return fail(
                    report,
                    SweepFailure::StateOutsideInvariant,
                    Some(x.to_vec()),
                    None,
                    cone,
                    depth,
                )
            }
            Err(_) => return fail(report, SweepFailure::Numerical, None, None, cone, depth),
        };

        let numerical = VerificationOutcome::violation(Condition::Numerical, None, f64::NEG_INFINITY);
        let mut visited: HashSet<PatternKey> = HashSet::new();
        let mut discarded: HashSet<PatternKey> = HashSet::new();
        let mut boundary: Vec<ActivationPattern> = vec![seed];
        let mut pending: HashSet<PatternKey> = boundary.iter().map(|p| p.key()).collect();

        while !boundary.is_empty() {
            let mut queue: VecDeque<ActivationPattern> = VecDeque::new();
            for pattern in std::mem::take(&mut boundary) {
                let key = pattern.key();
                pending.remove(&key);
                if visited.contains(&key) {
                    continue;
                }
                let Ok(cube) = self.cube(pattern) else {
                    return fail(report, SweepFailure::Numerical, None, Some(key), cone, depth);
                };
                match self.meets_cone(&cube, &cone) {
                    Ok(false) => {
                        pending.insert(key);
                        boundary.push(cube.pattern);
                        continue;
                    }
                    Ok(true) => {}
                    Err(_) => {
                        return fail(report, SweepFailure::Cube(numerical), None, Some(key), cone, depth)
                    }
                }
                let outcome = self.check(&cube, cache);
                if !outcome.is_valid() {
                    let w = outcome.witness.clone();
                    return fail(report, SweepFailure::Cube(outcome), w, Some(key), cone, depth);
                }
                visited.insert(key.clone());
                report.verified.push(key);
                queue.push_back(cube.pattern);
            }

            while let Some(current) = queue.pop_front() {
                for next in neighborhood(&current) {
                    let key = next.key();
                    if visited.contains(&key) || discarded.contains(&key) {
                        continue;
                    }
                    let Ok(cube) = self.cube(next) else {
                        return fail(report, SweepFailure::Numerical, None, Some(key), cone, depth);
                    };
                    match self.touches_boundary(&cube) {
                        Ok(false) => {
                            discarded.insert(key);
                            continue;
                        }
                        Ok(true) => {}
                        Err(_) => {
                            return fail(report, SweepFailure::Cube(numerical), None, Some(key), cone, depth)
                        }
                    }
                    match self.meets_cone(&cube, &cone) {
                        Ok(false) => {
                            if pending.insert(key) {
                                boundary.push(cube.pattern);
                            }
                            continue;
                        }
                        Ok(true) => {}
                        Err(_) => {
                            return fail(report, SweepFailure::Cube(numerical), None, Some(key), cone, depth)
                        }
                    }
                    let outcome = self.check(&cube, cache);
                    if !outcome.is_valid() {
                        let w = outcome.witness.clone();
                        return fail(report, SweepFailure::Cube(outcome), w, Some(key), cone, depth);
                    }
                    visited.insert(key.clone());
                    report.verified.push(key);
                    queue.push_back(cube.pattern);
                }
            }

            if depth >= horizon {
                break;
            }
            let next = expand_slice(self.spec, cone.slices.last().unwrap(), cone.bloat);
            cone.slices.push(next);
            depth += 1;
        }

        if self.cfg.surface_walk && !boundary.is_empty() {
            // cubes of the final cone reachable only through cubes outside it
            let mut walked: HashSet<PatternKey> = HashSet::new();
            let mut queue: VecDeque<ActivationPattern> = VecDeque::new();
            for pattern in boundary {
                if walked.insert(pattern.key()) {
                    queue.push_back(pattern);
                }
            }
            while let Some(current) = queue.pop_front() {
                for next in neighborhood(&current) {
                    let key = next.key();
                    if visited.contains(&key) || discarded.contains(&key) || walked.contains(&key) {
                        continue;
                    }
                    let Ok(cube) = self.cube(next) else {
                        return fail(report, SweepFailure::Numerical, None, Some(key), cone, depth);
                    };
                    match self.touches_boundary(&cube) {
                        Ok(false) => {
                            discarded.insert(key);
                            continue;
                        }
                        Ok(true) => {}
                        Err(_) => {
                            return fail(report, SweepFailure::Cube(numerical), None, Some(key), cone, depth)
                        }
                    }
                    match self.meets_cone(&cube, &cone) {
                        Ok(false) => {
                            walked.insert(key);
                            queue.push_back(cube.pattern);
                            continue;
                        }
                        Ok(true) => {}
                        Err(_) => {
                            return fail(report, SweepFailure::Cube(numerical), None, Some(key), cone, depth)
                        }
                    }
                    let outcome = self.check(&cube, cache);
                    if !outcome.is_valid() {
                        let w = outcome.witness.clone();
                        return fail(report, SweepFailure::Cube(outcome), w, Some(key), cone, depth);
                    }
                    visited.insert(key.clone());
                    report.verified.push(key);
                    queue.push_back(cube.pattern);
                }
            }
        }
        report.cone = cone;
        report.depth = depth;
        report
    }
}

/// Free-function form of [`CubeVerifier::verify_cubes_on_boundary`].
#[allow(clippy::too_many_arguments)]
pub fn verify_cubes_on_boundary(
    x: &[f64],
    x_unsafe: &[f64],
    cone: Cone,
    depth: usize,
    horizon: usize,
    spec: &SystemSpec,
    net: &ReluNetwork,
    cfg: &VerifierConfig,
    cache: &VerifiedCache,
) -> BoundaryReport {
    CubeVerifier::new(spec, net, cfg).verify_cubes_on_boundary(x, x_unsafe, cone, depth, horizon, cache)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::LinearAffineSystem;
    use crate::relu_network::Layer;

    fn identity_shifted() -> ReluNetwork {
        // B(x) = relu(x + 10) - 10, i.e. B(x) = x on [-10, inf)
        ReluNetwork::new(
            1,
            vec![
                Layer {
                    weights: vec![vec![1.0]],
                    bias: vec![10.0],
                },
                Layer {
                    weights: vec![vec![1.0]],
                    bias: vec![-10.0],
                },
            ],
        )
        .unwrap()
    }

    fn integrator_1d(u: (f64, f64)) -> SystemSpec {
        SystemSpec::new(
            LinearAffineSystem::integrator(1),
            IntervalBox::symmetric(1, 2.0),
            IntervalBox::symmetric(1, 1.0),
            vec![],
            IntervalBox::new(vec![u.0], vec![u.1]).unwrap(),
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn bisection_on_identity() {
        let net = identity_shifted();
        match binary_search_boundary(&net, &[1.0], &[-1.0], 1e-6).unwrap() {
            BoundarySearch::Found { point, pattern } => {
                assert!(point[0].abs() <= 1e-6);
                assert!(pattern.active.get(0));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bisection_rejects_nonnegative_unsafe_end() {
        let net = identity_shifted();
        assert!(matches!(
            binary_search_boundary(&net, &[1.0], &[0.2], 1e-6).unwrap(),
            BoundarySearch::UnsafeInInvariant { .. }
        ));
        assert!(matches!(
            binary_search_boundary(&net, &[-0.5], &[-1.0], 1e-6).unwrap(),
            BoundarySearch::SafeOutsideInvariant { .. }
        ));
    }

    #[test]
    fn robust_and_existential_on_integrator() {
        let net = identity_shifted();
        let spec = integrator_1d((-1.0, 1.0));
        let cube = Cube::new(&net, &spec, ActivationPattern::all_active(&[1])).unwrap();
        let robust = verify_linear(&cube, &spec, &VerifierConfig::default());
        assert_eq!(robust.status, OutcomeStatus::Violation);
        assert_eq!(robust.condition, Some(Condition::BoundaryFlow));
        assert!((robust.margin + 1.0).abs() < 1e-12);
        let cfg = VerifierConfig {
            mode: QuantifierMode::Existential,
            ..Default::default()
        };
        let ex = verify_linear(&cube, &spec, &cfg);
        assert!(ex.is_valid());
        assert!((ex.margin - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_boundary_slice_is_vacuous() {
        // all-inactive cube with B = -1 everywhere
        let net = ReluNetwork::new(
            1,
            vec![
                Layer {
                    weights: vec![vec![1.0]],
                    bias: vec![0.0],
                },
                Layer {
                    weights: vec![vec![1.0]],
                    bias: vec![-1.0],
                },
            ],
        )
        .unwrap();
        let spec = integrator_1d((-1.0, 1.0));
        let cube = Cube::new(&net, &spec, ActivationPattern::all_inactive(&[1])).unwrap();
        let out = verify_linear(&cube, &spec, &VerifierConfig::default());
        assert!(out.is_valid());
        assert_eq!(out.margin, f64::INFINITY);
    }

    #[test]
    fn neighbors_flip_one_bit() {
        let p = ActivationPattern::from_layers(&[vec![true, false], vec![true]]);
        let ns = neighborhood(&p);
        assert_eq!(ns.len(), 3);
        assert_eq!(ns[0].per_layer(), vec![vec![false, false], vec![true]]);
        assert_eq!(ns[2].per_layer(), vec![vec![true, false], vec![false]]);
        for (idx, n) in ns.iter().enumerate() {
            let mut back = n.clone();
            back.active.flip(idx);
            assert_eq!(back, p);
        }
    }

    #[test]
    fn cache_roundtrip() {
        let cache = VerifiedCache::new();
        let key = ActivationPattern::all_active(&[3]).key();
        assert!(!cache.contains(&key));
        cache.insert(key.clone());
        cache.insert(key.clone());
        assert_eq!(cache.len(), 1);
        assert_eq!(cache.clone(), cache);
        cache.clear();
        assert!(cache.is_empty());
    }
}
