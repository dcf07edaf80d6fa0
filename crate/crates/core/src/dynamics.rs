//! Control-affine linear systems `x' = A x + B u + c`, exact zero-order-hold
//! stepping, and closed-loop simulation against a black-box controller.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BoxError, Halfspace, IntervalBox, Polytope};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid system: {0}")]
    Invalid(String),
    #[error("mean motion must be positive, got {0}")]
    MeanMotion(f64),
    #[error("control {index} = {value} outside [{lower}, {upper}]")]
    ControlOutOfBounds {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("state has dimension {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Box(#[from] BoxError),
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearAffineSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DVector<f64>,
}

impl LinearAffineSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DVector<f64>) -> Result<Self, DynamicsError> {
        let m = a.nrows();
        if m == 0 || a.ncols() != m {
            return Err(DynamicsError::Invalid(format!(
                "drift matrix must be square and nonempty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != m {
            return Err(DynamicsError::Invalid(format!(
                "input matrix has {} rows, expected {m}",
                b.nrows()
            )));
        }
        if c.len() != m {
            return Err(DynamicsError::Invalid(format!(
                "constant drift has length {}, expected {m}",
                c.len()
            )));
        }
        if a.iter().chain(b.iter()).chain(c.iter()).any(|v| !v.is_finite()) {
            return Err(DynamicsError::Invalid("non-finite system entry".into()));
        }
        Ok(Self { a, b, c })
    }

    pub fn from_rows(a: &[Vec<f64>], b: &[Vec<f64>], c: &[f64]) -> Result<Self, DynamicsError> {
        let m = a.len();
        let n = b.first().map_or(0, Vec::len);
        if a.iter().any(|r| r.len() != m) || b.iter().any(|r| r.len() != n) {
            return Err(DynamicsError::Invalid("ragged matrix rows".into()));
        }
        Self::new(
            DMatrix::from_row_iterator(m, m, a.iter().flatten().copied()),
            DMatrix::from_row_iterator(b.len(), n, b.iter().flatten().copied()),
            DVector::from_column_slice(c),
        )
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn control_dim(&self) -> usize {
        self.b.ncols()
    }

    /// Vector field at `(x, u)`.
    pub fn derivative(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(x);
        let u = DVector::from_column_slice(u);
        (&self.a * x + &self.b * u + &self.c).as_slice().to_vec()
    }

    /// Pure integrator `x' = u` in `dim` dimensions.
    pub fn integrator(dim: usize) -> Self {
        Self {
            a: DMatrix::zeros(dim, dim),
            b: DMatrix::identity(dim, dim),
            c: DVector::zeros(dim),
        }
    }

    /// Leaky integrator `x' = -leak (x - center) + u`.
    pub fn leaky_integrator(dim: usize, leak: f64, center: &[f64]) -> Self {
        Self {
            a: DMatrix::identity(dim, dim) * -leak,
            b: DMatrix::identity(dim, dim),
            c: DVector::from_iterator(dim, center.iter().map(|c| leak * c)),
        }
    }

    fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
        m.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

/// Clohessy-Wiltshire relative motion about a circular orbit.
///
/// State `[x, y, z, vx, vy, vz]` (radial, along-track, cross-track), control
/// `[ux, uy, uz]` as accelerations.
pub fn cwh_system(mean_motion: f64) -> Result<LinearAffineSystem, DynamicsError> {
    if !(mean_motion > 0.0) || !mean_motion.is_finite() {
        return Err(DynamicsError::MeanMotion(mean_motion));
    }
    let n = mean_motion;
    let mut a = DMatrix::zeros(6, 6);
    for i in 0..3 {
        a[(i, i + 3)] = 1.0;
    }
    a[(3, 0)] = 3.0 * n * n;
    a[(3, 4)] = 2.0 * n;
    a[(4, 3)] = -2.0 * n;
    a[(5, 2)] = -n * n;
    let mut b = DMatrix::zeros(6, 3);
    for i in 0..3 {
        b[(i + 3, i)] = 1.0;
    }
    LinearAffineSystem::new(a, b, DVector::zeros(6))
}

/// Exact one-interval transition `x+ = phi x + gamma u + drift`.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    pub phi: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    pub drift: DVector<f64>,
}

impl Discretization {
    /// Matrix exponential of the augmented system `[[A, B, c], [0, 0, 0]] * dt`.
    pub fn exact(sys: &LinearAffineSystem, dt: f64) -> Self {
        let m = sys.state_dim();
        let n = sys.control_dim();
        let size = m + n + 1;
        let mut aug = DMatrix::zeros(size, size);
        aug.view_mut((0, 0), (m, m)).copy_from(&sys.a);
        aug.view_mut((0, m), (m, n)).copy_from(&sys.b);
        aug.view_mut((0, m + n), (m, 1)).copy_from(&sys.c);
        let e = (aug * dt).exp();
        Self {
            phi: e.view((0, 0), (m, m)).into_owned(),
            gamma: e.view((0, m), (m, n)).into_owned(),
            drift: e.view((0, m + n), (m, 1)).column(0).into_owned(),
        }
    }

    pub fn apply(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(x);
        let u = DVector::from_column_slice(u);
        (&self.phi * x + &self.gamma * u + &self.drift).as_slice().to_vec()
    }
}

/// The monitored system with its domain, initial set, unsafe set, and input bounds.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    system: LinearAffineSystem,
    state_bounds: IntervalBox,
    initial_set: IntervalBox,
    unsafe_set: Vec<Polytope>,
    control_box: IntervalBox,
    dt: f64,
    step_map: Discretization,
    source: SystemDescription,
}

impl SystemSpec {
    pub fn new(
        system: LinearAffineSystem,
        state_bounds: IntervalBox,
        initial_set: IntervalBox,
        unsafe_set: Vec<Polytope>,
        control_box: IntervalBox,
        dt: f64,
    ) -> Result<Self, DynamicsError> {
        let source = SystemDescription::Matrices {
            a: LinearAffineSystem::rows(&system.a),
            b: LinearAffineSystem::rows(&system.b),
            c: system.c.as_slice().to_vec(),
        };
        Self::build(system, source, state_bounds, initial_set, unsafe_set, control_box, dt)
    }

    fn build(
        system: LinearAffineSystem,
        source: SystemDescription,
        state_bounds: IntervalBox,
        initial_set: IntervalBox,
        unsafe_set: Vec<Polytope>,
        control_box: IntervalBox,
        dt: f64,
    ) -> Result<Self, DynamicsError> {
        let m = system.state_dim();
        state_bounds.validate()?;
        initial_set.validate()?;
        control_box.validate()?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(DynamicsError::Invalid(format!("dt must be positive, got {dt}")));
        }
        if state_bounds.dim() != m || initial_set.dim() != m {
            return Err(DynamicsError::Invalid(format!(
                "state sets must have dimension {m}"
            )));
        }
        if control_box.dim() != system.control_dim() {
            return Err(DynamicsError::Invalid(format!(
                "control box has dimension {}, system has {} inputs",
                control_box.dim(),
                system.control_dim()
            )));
        }
        if !state_bounds.contains_box(&initial_set) {
            return Err(DynamicsError::Invalid(
                "initial set is not inside the state bounds".into(),
            ));
        }
        if let Some(p) = unsafe_set.iter().find(|p| p.dim() != m) {
            return Err(DynamicsError::Invalid(format!(
                "unsafe polytope has dimension {}, expected {m}",
                p.dim()
            )));
        }
        let step_map = Discretization::exact(&system, dt);
        Ok(Self {
            system,
            state_bounds,
            initial_set,
            unsafe_set,
            control_box,
            dt,
            step_map,
            source,
        })
    }

    pub fn system(&self) -> &LinearAffineSystem {
        &self.system
    }

    pub fn state_bounds(&self) -> &IntervalBox {
        &self.state_bounds
    }

    pub fn initial_set(&self) -> &IntervalBox {
        &self.initial_set
    }

    pub fn unsafe_set(&self) -> &[Polytope] {
        &self.unsafe_set
    }

    pub fn control_box(&self) -> &IntervalBox {
        &self.control_box
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn state_dim(&self) -> usize {
        self.system.state_dim()
    }

    pub fn control_dim(&self) -> usize {
        self.system.control_dim()
    }

    pub fn step_map(&self) -> &Discretization {
        &self.step_map
    }

    pub fn with_unsafe(&self, unsafe_set: Vec<Polytope>) -> Result<Self, DynamicsError> {
        Self::build(
            self.system.clone(),
            self.source.clone(),
            self.state_bounds.clone(),
            self.initial_set.clone(),
            unsafe_set,
            self.control_box.clone(),
            self.dt,
        )
    }

    pub fn with_control_box(&self, control_box: IntervalBox) -> Result<Self, DynamicsError> {
        Self::build(
            self.system.clone(),
            self.source.clone(),
            self.state_bounds.clone(),
            self.initial_set.clone(),
            self.unsafe_set.clone(),
            control_box,
            self.dt,
        )
    }

    pub fn with_initial_set(&self, initial_set: IntervalBox) -> Result<Self, DynamicsError> {
        Self::build(
            self.system.clone(),
            self.source.clone(),
            self.state_bounds.clone(),
            initial_set,
            self.unsafe_set.clone(),
            self.control_box.clone(),
            self.dt,
        )
    }

    pub fn is_unsafe(&self, x: &[f64], tol: f64) -> bool {
        self.unsafe_set.iter().any(|p| p.contains(x, tol))
    }

    /// Advances one control interval under constant `u`.
    pub fn step(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>, DynamicsError> {
        if x.len() != self.state_dim() {
            return Err(DynamicsError::Dimension {
                expected: self.state_dim(),
                got: x.len(),
            });
        }
        if u.len() != self.control_dim() {
            return Err(DynamicsError::Dimension {
                expected: self.control_dim(),
                got: u.len(),
            });
        }
        let cb = &self.control_box;
        for (index, &value) in u.iter().enumerate() {
            if !(value >= cb.lower[index] && value <= cb.upper[index]) {
                return Err(DynamicsError::ControlOutOfBounds {
                    index,
                    value,
                    lower: cb.lower[index],
                    upper: cb.upper[index],
                });
            }
        }
        Ok(self.step_map.apply(x, u))
    }

    pub fn from_json(text: &str) -> Result<Self, DynamicsError> {
        let cfg: SystemConfig = serde_json::from_str(text)?;
        Self::from_config(cfg)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self, DynamicsError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn from_config(cfg: SystemConfig) -> Result<Self, DynamicsError> {
        let system = match &cfg.system {
            SystemDescription::Matrices { a, b, c } => LinearAffineSystem::from_rows(a, b, c)?,
            SystemDescription::Cwh { mean_motion } => cwh_system(*mean_motion)?,
        };
        let m = system.state_dim();
        let unsafe_set = cfg
            .unsafe_set
            .iter()
            .map(|hs| {
                if let Some(h) = hs.iter().find(|h| h.normal.len() != m) {
                    return Err(DynamicsError::Invalid(format!(
                        "unsafe halfspace has dimension {}, expected {m}",
                        h.normal.len()
                    )));
                }
                Ok(Polytope::from_halfspaces(m, hs.iter().cloned()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::build(
            system,
            cfg.system,
            cfg.state_bounds,
            cfg.initial_set,
            unsafe_set,
            cfg.control_box,
            cfg.dt,
        )
    }

    pub fn to_config(&self) -> SystemConfig {
        SystemConfig {
            system: self.source.clone(),
            state_bounds: self.state_bounds.clone(),
            initial_set: self.initial_set.clone(),
            unsafe_set: self
                .unsafe_set
                .iter()
                .map(|p| p.constraints().to_vec())
                .collect(),
            control_box: self.control_box.clone(),
            dt: self.dt,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_config()).expect("config serializes")
    }
}

/// Dynamics section of a system config: explicit matrices or a CWH model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SystemDescription {
    #[serde(rename = "system")]
    Matrices {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        #[serde(rename = "B")]
        b: Vec<Vec<f64>>,
        c: Vec<f64>,
    },
    #[serde(rename = "cwh")]
    Cwh { mean_motion: f64 },
}

/// On-disk system config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    #[serde(flatten)]
    pub system: SystemDescription,
    pub state_bounds: IntervalBox,
    pub initial_set: IntervalBox,
    /// Union of polytopes, each a list of halfspaces.
    #[serde(rename = "unsafe", default)]
    pub unsafe_set: Vec<Vec<Halfspace>>,
    pub control_box: IntervalBox,
    pub dt: f64,
}

/// A black-box feedback policy. Outputs are clamped before use.
pub trait Controller {
    fn control(&mut self, x: &[f64]) -> Vec<f64>;

    /// A failure the controller absorbed while producing its outputs.
    fn failure(&self) -> Option<String> {
        None
    }
}

impl<F: FnMut(&[f64]) -> Vec<f64>> Controller for F {
    fn control(&mut self, x: &[f64]) -> Vec<f64> {
        self(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub states: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
}

/// Clamps a raw controller output into the control box.
pub fn clamp_control(spec: &SystemSpec, raw: &[f64]) -> Vec<f64> {
    let n = spec.control_dim();
    let mut u = raw.to_vec();
    u.resize(n, 0.0);
    spec.control_box().clamp(&u)
}

/// Closed-loop rollout of `steps` intervals from `x0`.
pub fn simulate(
    spec: &SystemSpec,
    controller: &mut dyn Controller,
    x0: &[f64],
    steps: usize,
) -> Result<Trace, DynamicsError> {
    if x0.len() != spec.state_dim() {
        return Err(DynamicsError::Dimension {
            expected: spec.state_dim(),
            got: x0.len(),
        });
    }
    let mut states = Vec::with_capacity(steps + 1);
    let mut controls = Vec::with_capacity(steps);
    let mut x = x0.to_vec();
    states.push(x.clone());
    for _ in 0..steps {
        let u = clamp_control(spec, &controller.control(&x));
        x = spec.step(&x, &u)?;
        states.push(x.clone());
        controls.push(u);
    }
    Ok(Trace { states, controls })
}
