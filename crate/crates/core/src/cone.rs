//! Lookahead cones: per-step box over-approximations of the states reachable
//! from the current observation under any admissible control.
//!
//! Each slice is the interval-arithmetic image of the previous slice under one
//! explicit Euler step with the whole control box, inflated by an additive
//! `bloat` that covers the gap between the Euler step and the exact flow.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::SystemSpec;
use crate::geometry::{chebyshev_center, lp_minimize, IntervalBox, LpResult, Polytope};

/// Safety factor applied to the largest observed one-step defect.
pub const BLOAT_SAFETY_FACTOR: f64 = 1.5;
/// Probe count used by [`calibrate_bloat`] when none is given.
pub const DEFAULT_BLOAT_PROBES: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Cone {
    pub slices: Vec<IntervalBox>,
    pub origin: Vec<f64>,
    pub bloat: f64,
}

impl Cone {
    pub fn new(spec: &SystemSpec, origin: &[f64], bloat: f64) -> Self {
        Self {
            slices: vec![IntervalBox::point(origin).clip_to(spec.state_bounds())],
            origin: origin.to_vec(),
            bloat,
        }
    }

    /// Appends the image of the last slice.
    pub fn expand(&mut self, spec: &SystemSpec) -> &IntervalBox {
        let next = expand_slice(spec, self.slices.last().expect("cone has a slice"), self.bloat);
        self.slices.push(next);
        self.slices.last().unwrap()
    }

    /// Index of the deepest slice.
    pub fn depth(&self) -> usize {
        self.slices.len() - 1
    }

    /// Smallest box containing every slice.
    pub fn hull(&self) -> IntervalBox {
        self.slices[1..]
            .iter()
            .fold(self.slices[0].clone(), |acc, s| acc.hull(s))
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.slices.iter().any(|s| s.contains(x, tol))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeResult {
    pub cone: Cone,
    pub unsafe_witness: Option<Vec<f64>>,
    /// Slice index of the witness, or the horizon when there is none.
    pub depth: usize,
    /// Index of the unsafe polytope hit by the witness.
    pub unsafe_index: Option<usize>,
}

/// One bloated interval-Euler step of `slice`, clipped to the state bounds.
pub fn expand_slice(spec: &SystemSpec, slice: &IntervalBox, bloat: f64) -> IntervalBox {
    let sys = spec.system();
    let dt = spec.dt();
    let u = spec.control_box();
    let m = spec.state_dim();
    let mut lower = Vec::with_capacity(m);
    let mut upper = Vec::with_capacity(m);
    for i in 0..m {
        let mut lo = dt * sys.c[i];
        let mut hi = lo;
        for j in 0..m {
            let coef = if i == j { 1.0 } else { 0.0 } + dt * sys.a[(i, j)];
            let (a, b) = (coef * slice.lower[j], coef * slice.upper[j]);
            lo += a.min(b);
            hi += a.max(b);
        }
        for k in 0..spec.control_dim() {
            let coef = dt * sys.b[(i, k)];
            let (a, b) = (coef * u.lower[k], coef * u.upper[k]);
            lo += a.min(b);
            hi += a.max(b);
        }
        lower.push(lo - bloat);
        upper.push(hi + bloat);
    }
    IntervalBox { lower, upper }.clip_to(spec.state_bounds())
}

/// Builds the cone from `x` for up to `horizon` steps, stopping at the first
/// slice that meets the unsafe set.
///
/// The witness is the Chebyshev center of `slice ∩ unsafe ∩ bounds`. If the LP
/// fails numerically the slice center is reported as a witness instead.
pub fn construct_cone(spec: &SystemSpec, x: &[f64], horizon: usize, bloat: f64) -> ConeResult {
    let mut cone = Cone::new(spec, x, bloat);
    let bounds = spec.state_bounds().to_polytope();
    let regions: Vec<Polytope> = spec.unsafe_set().iter().map(|p| p.intersect(&bounds)).collect();
    let mut depth = 0;
    loop {
        let slice = cone.slices.last().unwrap().clone();
        if let Some((idx, witness)) = unsafe_hit(&regions, &slice) {
            return ConeResult {
                cone,
                unsafe_witness: Some(witness),
                depth,
                unsafe_index: Some(idx),
            };
        }
        if depth >= horizon {
            break;
        }
        cone.expand(spec);
        depth += 1;
    }
    ConeResult {
        cone,
        unsafe_witness: None,
        depth: horizon,
        unsafe_index: None,
    }
}

fn unsafe_hit(regions: &[Polytope], slice: &IntervalBox) -> Option<(usize, Vec<f64>)> {
    for (idx, region) in regions.iter().enumerate() {
        let mut p = region.clone();
        slice.append_to(&mut p);
        match lp_minimize(&p, &vec![0.0; p.dim()], 0.0) {
            Ok(LpResult::Infeasible) => continue,
            Ok(_) => {
                let witness = chebyshev_center(&p).unwrap_or_else(|_| slice.center());
                return Some((idx, witness));
            }
            Err(_) => return Some((idx, slice.center())),
        }
    }
    None
}

/// Largest componentwise gap between the exact step and the Euler step over
/// random `(x, u)` in `state_bounds × control_box`, times [`BLOAT_SAFETY_FACTOR`].
pub fn calibrate_bloat(spec: &SystemSpec, probes: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sb = spec.state_bounds();
    let cb = spec.control_box();
    let sys = spec.system();
    let dt = spec.dt();
    let mut worst: f64 = 0.0;
    let mut x = vec![0.0; spec.state_dim()];
    let mut u = vec![0.0; spec.control_dim()];
    for _ in 0..probes {
        for (i, v) in x.iter_mut().enumerate() {
            *v = sample(&mut rng, sb.lower[i], sb.upper[i]);
        }
        for (k, v) in u.iter_mut().enumerate() {
            *v = sample(&mut rng, cb.lower[k], cb.upper[k]);
        }
        let exact = spec.step_map().apply(&x, &u);
        let deriv = sys.derivative(&x, &u);
        for i in 0..x.len() {
            let euler = x[i] + dt * deriv[i];
            worst = worst.max((exact[i] - euler).abs());
        }
    }
    BLOAT_SAFETY_FACTOR * worst
}

fn sample(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}
