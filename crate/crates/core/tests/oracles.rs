//! Cross-checks against independent oracles. Frozen reference values for the
//! seeded 2-4-1 fixture were computed outside this crate with numpy.

#![allow(clippy::needless_range_loop)]

use std::collections::BTreeSet;
use std::sync::Arc;

use cbf_monitor::cone::{construct_cone, Cone};
use cbf_monitor::dynamics::{
    clamp_control, cwh_system, simulate, Discretization, LinearAffineSystem, SystemSpec,
};
use cbf_monitor::geometry::{
    chebyshev_center, lp_minimize, polytope_nonempty, Halfspace, IntervalBox, LpResult, Polytope,
    Sense,
};
use cbf_monitor::monitor::{Cause, Monitor, MonitorConfig};
use cbf_monitor::relu_network::{
    cube_polytope, masked_affine, parse_network, ActivationPattern, Layer, ReluNetwork,
};
use cbf_monitor::synthetic::{
    make_synthetic_cbf, random_relu_network, SyntheticKind, SyntheticParams,
};
use cbf_monitor::verifier::{
    binary_search_boundary, neighborhood, verify_linear, BoundarySearch, Cube, CubeVerifier,
    QuantifierMode, VerifiedCache, VerifierConfig,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FIXTURE: &str = include_str!("fixtures/net_2_4_1.json");
const PROBE: [f64; 2] = [0.3, -0.7];
const PROBE_PRE: [f64; 4] = [
    -0.36714685677007497,
    -0.5330568871514388,
    0.45171124270175217,
    -0.26029089045530873,
];
const PROBE_VALUE: f64 = 0.25440206749479366;
const PROBE_GRAD: [f64; 2] = [-0.20521398652830905, -0.3397883438037612];
const PROBE_OFFSET: f64 = 0.07811442279065352;

fn fixture() -> ReluNetwork {
    parse_network(FIXTURE).unwrap()
}

/// Plain per-neuron arithmetic, no shared code with the crate.
fn hand_forward(net: &ReluNetwork, x: &[f64]) -> (Vec<f64>, f64) {
    let hidden = &net.layers()[0];
    let out = &net.layers()[1];
    let mut z = Vec::new();
    for j in 0..hidden.bias.len() {
        let mut acc = hidden.bias[j];
        for k in 0..x.len() {
            acc += hidden.weights[j][k] * x[k];
        }
        z.push(acc);
    }
    let mut b = out.bias[0];
    for j in 0..z.len() {
        if z[j] > 0.0 {
            b += out.weights[0][j] * z[j];
        }
    }
    (z, b)
}

fn integrator(dim: usize, radius: f64, u: IntervalBox, unsafe_set: Vec<Polytope>) -> SystemSpec {
    SystemSpec::new(
        LinearAffineSystem::integrator(dim),
        IntervalBox::symmetric(dim, radius),
        IntervalBox::symmetric(dim, 0.5),
        unsafe_set,
        u,
        0.1,
    )
    .unwrap()
}

#[test]
fn fixture_is_the_seeded_generator_output() {
    assert_eq!(fixture(), random_relu_network(2, &[4], 42).unwrap());
}

#[test]
fn fixture_forward_matches_frozen_value() {
    let net = fixture();
    let (z, b) = hand_forward(&net, &PROBE);
    for (a, e) in z.iter().zip(PROBE_PRE) {
        assert!((a - e).abs() < 1e-14);
    }
    assert!((b - PROBE_VALUE).abs() < 1e-14);
    assert!((net.forward(&PROBE).unwrap() - PROBE_VALUE).abs() < 1e-14);
    let pre = net.pre_activations(&PROBE).unwrap();
    for (a, e) in pre[0].iter().zip(PROBE_PRE) {
        assert!((a - e).abs() < 1e-14);
    }
}

#[test]
fn fixture_pattern_matches_oracle_signs() {
    let p = fixture().activation_pattern(&PROBE, 1e-8).unwrap();
    assert_eq!(p.per_layer(), vec![vec![false, false, true, false]]);
    assert!(p.unstable.none());
}

#[test]
fn fixture_masked_affine_matches_forward() {
    let net = fixture();
    let p = net.activation_pattern(&PROBE, 1e-8).unwrap();
    let m = masked_affine(&net, &p).unwrap();
    assert!((m.output.eval(&PROBE) - PROBE_VALUE).abs() <= 1e-12);
    for (a, e) in m.output.coeffs.iter().zip(PROBE_GRAD) {
        assert!((a - e).abs() < 1e-14);
    }
    assert!((m.output.offset - PROBE_OFFSET).abs() < 1e-14);
}

#[test]
fn random_points_lie_in_their_cube() {
    let net = fixture();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let x = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let p = net.activation_pattern(&x, 1e-8).unwrap();
        let poly = cube_polytope(&net, &p).unwrap();
        assert!(poly.contains(&x, 1e-9), "{x:?}");
    }
}

#[test]
fn case_study_architecture_roundtrips() {
    let net = random_relu_network(6, &[16; 8], 1).unwrap();
    let back = parse_network(&net.to_json()).unwrap();
    assert_eq!(back.hidden_layers().len(), 8);
    assert!(back.hidden_widths().iter().all(|&w| w == 16));
    assert_eq!(back.input_dim(), 6);
    assert_eq!(back, net);
}

#[test]
fn unreachable_pattern_has_empty_cube() {
    // z = x1 - x1 - 1 is always -1, so "active" is impossible
    let net = ReluNetwork::new(
        1,
        vec![
            Layer {
                weights: vec![vec![0.0]],
                bias: vec![-1.0],
            },
            Layer {
                weights: vec![vec![1.0]],
                bias: vec![0.0],
            },
        ],
    )
    .unwrap();
    let on = cube_polytope(&net, &ActivationPattern::from_layers(&[vec![true]])).unwrap();
    assert!(!polytope_nonempty(&on).unwrap());
    let off = cube_polytope(&net, &ActivationPattern::from_layers(&[vec![false]])).unwrap();
    assert!(polytope_nonempty(&off).unwrap());
}

/// Minimum of `c·x` over the vertices of a bounded 2D polytope, by brute force.
fn vertex_min(hs: &[(f64, f64, f64)], c: [f64; 2]) -> Option<f64> {
    // each (a, b, d) means a x + b y + d >= 0
    let mut best: Option<f64> = None;
    for i in 0..hs.len() {
        for j in i + 1..hs.len() {
            let (a1, b1, d1) = hs[i];
            let (a2, b2, d2) = hs[j];
            let det = a1 * b2 - a2 * b1;
            if det.abs() < 1e-12 {
                continue;
            }
            let x = (-d1 * b2 + d2 * b1) / det;
            let y = (-a1 * d2 + a2 * d1) / det;
            if hs.iter().all(|&(a, b, d)| a * x + b * y + d >= -1e-9) {
                let v = c[0] * x + c[1] * y;
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
    }
    best
}

#[test]
fn lp_matches_vertex_enumeration() {
    let square = Polytope::from_halfspaces(
        2,
        [
            Halfspace::ge(vec![1.0, 0.0], 0.0),
            Halfspace::ge(vec![0.0, 1.0], 0.0),
            Halfspace::le(vec![1.0, 0.0], -1.0),
            Halfspace::le(vec![0.0, 1.0], -1.0),
        ],
    );
    match lp_minimize(&square, &[1.0, 1.0], 0.0).unwrap() {
        LpResult::Optimal { value, point } => {
            assert!(value.abs() < 1e-12);
            assert!(point[0].abs() < 1e-12 && point[1].abs() < 1e-12);
        }
        other => panic!("{other:?}"),
    }

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut feasible = 0;
    for _ in 0..300 {
        let mut hs = vec![(1.0, 0.0, 5.0), (-1.0, 0.0, 5.0), (0.0, 1.0, 5.0), (0.0, -1.0, 5.0)];
        for _ in 0..rng.random_range(1..6) {
            hs.push((
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-2.0..2.0),
            ));
        }
        let c = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let poly = Polytope::from_halfspaces(2, hs.iter().map(|&(a, b, d)| Halfspace::ge(vec![a, b], d)));
        let expected = vertex_min(&hs, c);
        match (lp_minimize(&poly, &c, 0.0).unwrap(), expected) {
            (LpResult::Optimal { value, point }, Some(v)) => {
                feasible += 1;
                assert!((value - v).abs() < 1e-7, "lp {value} vertices {v}");
                assert!(poly.contains(&point, 1e-7));
            }
            (LpResult::Infeasible, None) => {}
            (got, want) => panic!("lp {got:?} vertices {want:?}"),
        }
    }
    assert!(feasible > 50);
}

#[test]
fn triangle_incenter() {
    let tri = Polytope::from_halfspaces(
        2,
        [
            Halfspace::ge(vec![1.0, 0.0], 0.0),
            Halfspace::ge(vec![0.0, 1.0], 0.0),
            Halfspace::le(vec![1.0, 1.0], -1.0),
        ],
    );
    // incenter = (a A + b B + c C) / (a + b + c) with side lengths opposite each vertex
    let (a, b, c) = (2f64.sqrt(), 1.0, 1.0);
    let vertices = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let weights = [a, b, c];
    let total: f64 = weights.iter().sum();
    let incenter: Vec<f64> = (0..2)
        .map(|k| vertices.iter().zip(weights).map(|(v, w)| v[k] * w).sum::<f64>() / total)
        .collect();
    let r = 1.0 / (2.0 + 2f64.sqrt());
    assert!((incenter[0] - r).abs() < 1e-15);
    let center = chebyshev_center(&tri).unwrap();
    assert!((center[0] - incenter[0]).abs() < 1e-9 && (center[1] - incenter[1]).abs() < 1e-9);
}

fn rk4(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], t: f64, steps: usize) -> Vec<f64> {
    let h = t / steps as f64;
    let mut x = x.to_vec();
    let add = |x: &[f64], k: &[f64], s: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    for _ in 0..steps {
        let k1 = f(&x);
        let k2 = f(&add(&x, &k1, h / 2.0));
        let k3 = f(&add(&x, &k2, h / 2.0));
        let k4 = f(&add(&x, &k3, h));
        for i in 0..x.len() {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    x
}

#[test]
fn exact_step_matches_rk4() {
    let decay = LinearAffineSystem::new(DMatrix::from_element(1, 1, -1.0), DMatrix::zeros(1, 0), DVector::zeros(1)).unwrap();
    let d = Discretization::exact(&decay, 0.1);
    let exact = d.apply(&[1.0], &[]);
    let oracle = rk4(|x| vec![-x[0]], &[1.0], 0.1, 10_000);
    assert!((exact[0] - oracle[0]).abs() < 1e-9);
    assert!((exact[0] - 0.904837).abs() < 1e-6);

    let n = 0.0011;
    let cwh = cwh_system(n).unwrap();
    let d = Discretization::exact(&cwh, 0.1);
    let x = [1.0, -2.0, 0.5, 0.01, -0.02, 0.03];
    let u = [0.004, -0.007, 0.002];
    let oracle = rk4(|s| cwh.derivative(s, &u), &x, 0.1, 10_000);
    for (a, b) in d.apply(&x, &u).iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn cwh_textbook_equations() {
    // x'' = 3n^2 x + 2n y' + ux, y'' = -2n x' + uy, z'' = -n^2 z + uz
    let n = 0.0011;
    let sys = cwh_system(n).unwrap();
    let d = sys.derivative(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], &[0.0; 3]);
    assert_eq!(d, vec![0.0, 0.0, 0.0, 3.0 * n * n, 0.0, 0.0]);
    let d = sys.derivative(&[0.0, 0.0, 2.0, 0.3, 0.5, 0.0], &[0.1, 0.2, 0.3]);
    let expect = [0.3, 0.5, 0.0, 2.0 * n * 0.5 + 0.1, -2.0 * n * 0.3 + 0.2, -n * n * 2.0 + 0.3];
    for (a, b) in d.iter().zip(expect) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn proportional_trace_matches_replay() {
    let spec = SystemSpec::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/cwh_los.json")).unwrap();
    let k = 0.5;
    let mut policy = |x: &[f64]| vec![-k * x[0], -k * x[1], -k * x[2]];
    let x0 = [0.7, -8.1, 0.2, 0.01, 0.0, -0.02];
    let trace = simulate(&spec, &mut policy, &x0, 40).unwrap();
    let mut x = x0.to_vec();
    for t in 0..40 {
        let raw = [-k * x[0], -k * x[1], -k * x[2]];
        let u: Vec<f64> = (0..3).map(|i| raw[i].clamp(-0.01, 0.01)).collect();
        assert_eq!(trace.controls[t], u);
        assert_eq!(clamp_control(&spec, &raw), u);
        x = spec.step(&x, &u).unwrap();
        assert_eq!(trace.states[t + 1], x);
    }
}

#[test]
fn bisection_matches_dense_scan() {
    let net = fixture();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (safe, bad) = loop {
        let a = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let b = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        if net.forward(&a).unwrap() > 0.05 && net.forward(&b).unwrap() < -0.05 {
            break (a, b);
        }
    };
    let BoundarySearch::Found { point, .. } = binary_search_boundary(&net, &safe, &bad, 1e-6).unwrap() else {
        panic!("no boundary found");
    };
    assert!(net.forward(&point).unwrap().abs() <= 1e-6);
    let n = 1_000_000;
    let at = |t: f64| [safe[0] + t * (bad[0] - safe[0]), safe[1] + t * (bad[1] - safe[1])];
    let mut crossings = Vec::new();
    let mut prev = net.forward(&safe).unwrap();
    for i in 1..=n {
        let t = i as f64 / n as f64;
        let v = net.forward(&at(t)).unwrap();
        if (prev >= 0.0) != (v >= 0.0) {
            crossings.push(t);
        }
        prev = v;
    }
    assert!(!crossings.is_empty());
    let len = ((bad[0] - safe[0]).powi(2) + (bad[1] - safe[1]).powi(2)).sqrt();
    let t_found = ((point[0] - safe[0]).powi(2) + (point[1] - safe[1]).powi(2)).sqrt() / len;
    // |B| <= 1e-6 pins the point to within ~1e-6 / slope of a true crossing
    assert!(crossings.iter().any(|t| (t - t_found).abs() <= 1e-4), "{crossings:?} vs {t_found}");
}

#[test]
fn affine_certificate_grid_oracle() {
    // B(x) = 1 - x1 on the 2D pure integrator
    let net = ReluNetwork::new(
        2,
        vec![Layer {
            weights: vec![vec![-1.0, 0.0]],
            bias: vec![1.0],
        }],
    )
    .unwrap();
    let unsafe_set = vec![Polytope::from_halfspaces(2, [Halfspace::ge(vec![1.0, 0.0], -1.5)])];
    for (lo, hi) in [(-1.0, -0.2), (-1.0, 0.0), (-1.0, 0.3), (0.1, 1.0), (-0.5, 0.5)] {
        let u = IntervalBox::new(vec![lo, -1.0], vec![hi, 1.0]).unwrap();
        let spec = integrator(2, 2.0, u.clone(), unsafe_set.clone());
        let cube = Cube::new(&net, &spec, ActivationPattern::from_layers(&[])).unwrap();
        let lp = verify_linear(&cube, &spec, &VerifierConfig::default()).is_valid();
        // grid oracle: Lie derivative sign at sampled boundary points, worst vertex of U
        let mut grid_ok = true;
        for i in 0..401 {
            let x = [1.0, -2.0 + 0.01 * i as f64];
            assert!(net.forward(&x).unwrap().abs() < 1e-15);
            let h = 1e-6;
            let g = [
                (net.forward(&[x[0] + h, x[1]]).unwrap() - net.forward(&x).unwrap()) / h,
                (net.forward(&[x[0], x[1] + h]).unwrap() - net.forward(&x).unwrap()) / h,
            ];
            for ux in [u.lower[0], u.upper[0]] {
                for uy in [u.lower[1], u.upper[1]] {
                    if g[0] * ux + g[1] * uy < -1e-6 {
                        grid_ok = false;
                    }
                }
            }
        }
        assert_eq!(lp, grid_ok, "U1 = [{lo}, {hi}]");
        assert_eq!(lp, hi <= 0.0);
    }
}

#[test]
fn neighbors_match_face_probes() {
    let net = fixture();
    let spec = integrator(2, 3.0, IntervalBox::symmetric(2, 1.0), vec![]);
    let pattern = net.canonical_pattern(&PROBE, 1e-8).unwrap();
    let cube = Cube::new(&net, &spec, pattern.clone()).unwrap();
    let neighbors: BTreeSet<Vec<Vec<bool>>> = neighborhood(&pattern).iter().map(|p| p.per_layer()).collect();
    let mut probed = 0;
    for (idx, z) in cube.masked.pre.iter().enumerate() {
        let face = cube.region.with(Halfspace::from_form(z, Sense::Eq));
        let norm = z.coeffs.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        // midpoint of the face segment, found by the two extreme points along it
        let along = [-z.coeffs[1], z.coeffs[0]];
        let ends: Vec<Vec<f64>> = [1.0, -1.0]
            .iter()
            .filter_map(|s| match lp_minimize(&face, &[s * along[0], s * along[1]], 0.0) {
                Ok(LpResult::Optimal { point, .. }) => Some(point),
                _ => None,
            })
            .collect();
        if ends.len() != 2 {
            continue;
        }
        let c: Vec<f64> = (0..2).map(|k| 0.5 * (ends[0][k] + ends[1][k])).collect();
        // step off the face toward the side the cube is not on
        let dir = if pattern.active.get(idx) { -1.0 } else { 1.0 };
        let probe: Vec<f64> = c.iter().zip(&z.coeffs).map(|(a, w)| a + dir * 1e-6 * w / norm).collect();
        let across = net.activation_pattern(&probe, 0.0).unwrap();
        // skip faces where the probe also crossed another face
        let mut expected = pattern.clone();
        expected.active.flip(idx);
        if across.active != expected.active {
            continue;
        }
        probed += 1;
        assert!(neighbors.contains(&across.per_layer()));
    }
    assert!(probed >= 2, "only {probed} faces probed");
}

fn diamond(margin: f64) -> ReluNetwork {
    ReluNetwork::new(
        2,
        vec![
            Layer {
                weights: vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]],
                bias: vec![0.0; 4],
            },
            Layer {
                weights: vec![vec![-1.0; 4]],
                bias: vec![margin],
            },
        ],
    )
    .unwrap()
}

fn meets(boundary: &Polytope, cone: &Cone) -> bool {
    cone.slices.iter().any(|s| {
        let mut p = boundary.clone();
        s.append_to(&mut p);
        polytope_nonempty(&p).unwrap()
    })
}

#[test]
fn sweep_matches_pattern_enumeration() {
    let net = diamond(1.0);
    let unsafe_set = vec![Polytope::from_halfspaces(2, [Halfspace::ge(vec![1.0, 0.0], -1.2)])];
    let spec = integrator(2, 3.0, IntervalBox::symmetric(2, 1.0), unsafe_set);
    let cfg = VerifierConfig {
        mode: QuantifierMode::Existential,
        ..Default::default()
    };
    let verifier = CubeVerifier::new(&spec, &net, &cfg);
    for (x, horizon) in [([0.5, 0.0], 8), ([0.5, 0.2], 20), ([0.0, 0.0], 30)] {
        let cone = construct_cone(&spec, &x, horizon, 0.0);
        let w = cone.unsafe_witness.clone().expect("cone reaches the unsafe set");
        let report = verifier.verify_cubes_on_boundary(&x, &w, cone.cone, cone.depth, horizon, &VerifiedCache::new());
        assert!(report.verdict, "{:?}", report.failure);
        let swept: BTreeSet<_> = report.verified.iter().cloned().collect();

        let mut enumerated = BTreeSet::new();
        for bits in 0..16u32 {
            let layers = vec![(0..4).map(|b| bits >> b & 1 == 1).collect::<Vec<_>>()];
            let cube = Cube::new(&net, &spec, ActivationPattern::from_layers(&layers)).unwrap();
            if !polytope_nonempty(&cube.region).unwrap() {
                continue;
            }
            let boundary = cube.boundary_slice();
            if polytope_nonempty(&boundary).unwrap() && meets(&boundary, &report.cone) {
                enumerated.insert(cube.key());
            }
        }
        assert_eq!(swept, enumerated, "x = {x:?}");
        assert!(!swept.is_empty());
    }
}

#[test]
fn valid_box_enumeration() {
    let params = SyntheticParams::origin(2, 1.0);
    let good = make_synthetic_cbf(SyntheticKind::ValidBox, &params).unwrap();
    let bad = make_synthetic_cbf(SyntheticKind::InvalidFlipped, &params).unwrap();
    let unsafe_set = vec![Polytope::from_halfspaces(2, [Halfspace::ge(vec![1.0, 0.0], -1.05)])];
    let widths = good.hidden_widths();
    let total: usize = widths.iter().sum();
    let patterns: Vec<ActivationPattern> = (0..1u64 << total)
        .map(|bits| {
            let mut flat = (0..total).map(|b| bits >> b & 1 == 1);
            let layers: Vec<Vec<bool>> = widths.iter().map(|&w| flat.by_ref().take(w).collect()).collect();
            ActivationPattern::from_layers(&layers)
        })
        .collect();
    let robust = VerifierConfig::default();

    // pure integrator with U = {0}: the only robust-valid control box
    let still = integrator(2, 3.0, IntervalBox::point(&[0.0, 0.0]), unsafe_set.clone());
    let moving = integrator(2, 3.0, IntervalBox::symmetric(2, 0.05), unsafe_set.clone());
    let leaky = SystemSpec::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/leaky_box.json")).unwrap();
    let (mut nonempty, mut on_boundary) = (0, 0);
    let mut moving_failures = 0;
    for p in &patterns {
        let cube = Cube::new(&good, &still, p.clone()).unwrap();
        if !polytope_nonempty(&cube.region).unwrap() {
            continue;
        }
        nonempty += 1;
        if polytope_nonempty(&cube.boundary_slice()).unwrap() {
            on_boundary += 1;
        }
        assert!(verify_linear(&cube, &still, &robust).is_valid(), "{p:?}");
        let cube = Cube::new(&good, &leaky, p.clone()).unwrap();
        assert!(verify_linear(&cube, &leaky, &robust).is_valid(), "{p:?}");
        let cube = Cube::new(&good, &moving, p.clone()).unwrap();
        if !verify_linear(&cube, &moving, &robust).is_valid() {
            moving_failures += 1;
        }
    }
    assert!(nonempty >= 8 && on_boundary >= 8, "{nonempty} nonempty, {on_boundary} on the boundary");
    // any nonzero control box breaks robust flow for a bounded barrier
    assert!(moving_failures > 0);

    let mut failing = 0;
    for p in &patterns {
        for spec in [&still, &leaky] {
            let cube = Cube::new(&bad, spec, p.clone()).unwrap();
            if polytope_nonempty(&cube.boundary_slice()).unwrap() && !verify_linear(&cube, spec, &robust).is_valid() {
                failing += 1;
            }
        }
    }
    assert!(failing > 0);
}

#[test]
fn integrator_identity_certificate_fails_on_first_reaching_step() {
    // B(x) = x on the 1D pure integrator is not robustly valid
    let net = Arc::new(make_synthetic_cbf(SyntheticKind::Affine, &SyntheticParams::origin(1, 0.0)).unwrap());
    let unsafe_set = vec![Polytope::from_halfspaces(1, [Halfspace::le(vec![1.0], 0.1)])];
    let spec = Arc::new(integrator(1, 5.0, IntervalBox::symmetric(1, 1.0), unsafe_set));
    let cfg = MonitorConfig::for_spec(&spec, 5, 0.0);
    let mut m = Monitor::new(spec.clone(), net.clone(), cfg.clone()).unwrap();
    let mut first = None;
    for k in 0..20 {
        let x = [2.0 - 0.1 * k as f64];
        let v = m.next(&x);
        if !v.value {
            first = Some((k, x, v));
            break;
        }
    }
    let (k, x, v) = first.expect("monitor warns");
    // eff. horizon 7 reaches 0.7 below x, the unsafe set starts at -0.1
    assert_eq!(k, 14);
    assert_eq!(v.cause, Some(Cause::CubeViolation));
    let w = v.witness.clone().unwrap();
    assert!(net.forward(&w).unwrap().abs() < 1e-9);
    let mut fresh = Monitor::new(spec, net, cfg).unwrap();
    assert_eq!(fresh.next(&x).untimed(), v.untimed());
}
