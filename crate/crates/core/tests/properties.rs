use std::path::Path;

use hfgt_hydro::architecture::{
    validate, Buffer, BufferClass, Capability, CapabilityClass, ExogenousSignal, InstantiatedArchitecture, Operand,
    OperandRole, QuantityKind, SignalShape,
};
use hfgt_hydro::devices::{PhysicalConstants, EPSILON_VOLUME};
use hfgt_hydro::esn::{assemble_firing, initial_marking};
use hfgt_hydro::hfit::{self, PlaceBlock, Tensor, Triplet};
use hfgt_hydro::ingest::{emit_scenario, parse_scenario, ScenarioDocument};
use hfgt_hydro::reference::{ode_rhs, rk4_integrate};
use hfgt_hydro::simulator::{
    concentration_series, simulate, simulate_with, stability_max_dt, SimulationConfig, SimulationWarning,
};
use proptest::prelude::*;

fn load(name: &str) -> ScenarioDocument {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.xml"));
    parse_scenario(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn example1_document_shape() {
    let doc = load("example1");
    assert_eq!(doc.architecture.buffers.len(), 2);
    assert_eq!(doc.architecture.capabilities.len(), 5);
    assert!(validate(&doc.architecture).is_valid());
}

#[test]
fn example1_named_blocks() {
    let t = hfit::build(&load("example1").architecture);
    let block = |which, row, class| t.block_view(which, PlaceBlock::from_number(row).unwrap(), class).to_dense();
    assert_eq!(block(Tensor::Minus, 4, CapabilityClass::TranspNRiver), Some(vec![vec![1]]));
    assert_eq!(block(Tensor::Minus, 1, CapabilityClass::TranspH2ORiver), Some(vec![vec![1]]));
    assert!(t.block_view(Tensor::Net, PlaceBlock::from_number(3).unwrap(), CapabilityClass::AcceptH2OLake).is_zero());
}

#[test]
fn example1_firing_layout() {
    let doc = load("example1");
    let t = hfit::build(&doc.architecture);
    let q = initial_marking(&doc.architecture, &t);
    let (u, warnings) = assemble_firing(&doc.architecture, &t, doc.config.constants, &q, 0.0, doc.config.dt);
    assert!(warnings.is_empty());
    let rho_g = 9810.0;
    let v_out = rho_g / 2.9e5 * ((7e4 - 6e4) / 2e4 - 5e4 / 1e7 + 2.0 - 0.0);
    assert_eq!(u.0[0], 0.08);
    assert_eq!(u.0[1..3], [0.0, 0.0]);
    assert!((u.0[3] - v_out).abs() < 1e-15);
    assert!((u.0[4] - 0.005 * v_out).abs() < 1e-17);
}

#[test]
fn three_lake_net_fires_four_water_transports() {
    let doc = load("example2");
    let t = hfit::build(&doc.architecture);
    let q = initial_marking(&doc.architecture, &t);
    let (u, _) = assemble_firing(&doc.architecture, &t, doc.config.constants, &q, 0.0, doc.config.dt);
    let nonzero = t.capabilities.classes().iter().zip(&u.0).filter(|(c, r)| c.is_water_transport() && **r != 0.0);
    assert_eq!(nonzero.count(), 4);
}

#[test]
fn effluent_concentration_tracks_lake() {
    let doc = load("example1");
    let traj = simulate(&doc).unwrap();
    let lake = concentration_series(&traj, "lake1").unwrap();
    for (row, c) in traj.firings.iter().zip(lake) {
        let effluent = row[4] / row[3];
        let c = c.unwrap();
        assert!((effluent - c).abs() <= 1e-14 * c, "{effluent} vs {c}");
    }
}

#[test]
fn round_trip_rebuilds_identical_triplets() {
    for name in ["example1", "example2", "example3"] {
        let doc = load(name);
        let again = parse_scenario(&emit_scenario(&doc)).unwrap();
        let (a, b) = (hfit::build(&doc.architecture), hfit::build(&again.architecture));
        for which in [Tensor::Plus, Tensor::Minus, Tensor::Net] {
            assert_eq!(a.tensor(which).triplets(), b.tensor(which).triplets(), "{name}");
        }
    }
}

/// Final Example-1 lake concentration at `dt = base / 2^level`.
fn euler_final_concentration(doc: &ScenarioDocument, base: f64, level: u32) -> f64 {
    let steps = doc.config.horizon_steps * 2usize.pow(level);
    let dt = base / f64::from(2u32.pow(level));
    let d = ScenarioDocument {
        config: SimulationConfig { dt, horizon_steps: steps, stride: steps, ..doc.config },
        ..doc.clone()
    };
    let traj = simulate(&d).unwrap();
    concentration_series(&traj, "lake1").unwrap().last().copied().flatten().unwrap()
}

#[test]
fn euler_converges_at_first_order() {
    let doc = load("example1");
    // 30 days at 4 h, then 2 h, 1 h, 30 min, 15 min.
    let base = ScenarioDocument { config: SimulationConfig { horizon_steps: 180, ..doc.config }, ..doc };
    let c: Vec<f64> = (0..5).map(|l| euler_final_concentration(&base, 14_400.0, l)).collect();
    let diffs: Vec<f64> = c.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    for pair in diffs.windows(2) {
        let ratio = pair[1] / pair[0];
        assert!((0.4..=0.6).contains(&ratio), "ratio {ratio}, diffs {diffs:?}");
    }
}

#[test]
fn rk4_converges_at_fourth_order_on_example1() {
    let doc = load("example1");
    let bound = stability_max_dt(&doc.architecture, &doc.config.constants).unwrap().max_dt;
    let duration = doc.config.duration();
    let h = duration / (duration / (bound / 4.0)).ceil();
    let end = |h: f64| {
        let steps = (duration / h).round() as usize;
        let d = ScenarioDocument {
            config: SimulationConfig { dt: h, horizon_steps: steps, stride: steps, ..doc.config },
            ..doc.clone()
        };
        concentration_series(&rk4_integrate(&d, h).unwrap(), "lake1").unwrap().last().copied().flatten().unwrap()
    };
    let (a, b, c) = (end(h), end(h / 2.0), end(h / 4.0));
    let richardson = c + (c - b) / 15.0;
    let ratio = (a - richardson).abs() / (b - richardson).abs();
    assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn example3_rhs_from_hand_edge_list() {
    let doc = load("example3");
    let arch = &doc.architecture;
    let t = hfit::build(arch);
    let q = initial_marking(arch, &t);
    let d = ode_rhs(&q, 0.0, arch, doc.config.constants, doc.config.dt);

    let ids = ["lake1", "lake2", "lake3", "land1", "land2", "land3", "point1", "point2"];
    let b = |id: &str| arch.buffer(id).unwrap();
    let head = |id: &str| (b(id).initial_water_volume - b(id).min_volume) / b(id).surface_area + b(id).elevation;
    let conc = |id: &str| b(id).initial_nitrogen_mass / b(id).initial_water_volume;
    let edges = [
        ("land1", "lake1", 3e5),
        ("land2", "lake2", 3e5),
        ("land3", "lake3", 3e5),
        ("lake1", "point1", 2.0e5),
        ("lake2", "point1", 2.1e5),
        ("point1", "lake3", 1.9e5),
        ("lake3", "point2", 2.2e5),
    ];
    let mut dv = [0.0f64; 8];
    let mut dm = [0.0f64; 8];
    // Sums of absolute contributions: the initial state is near steady, so
    // the net derivative is a small residual of larger flows.
    let mut sv = [0.0f64; 8];
    let mut sm = [0.0f64; 8];
    let at = |id: &str| ids.iter().position(|x| *x == id).unwrap();
    for (o, dst, r) in edges {
        let flow = 9810.0 * (head(o) - head(dst)) / r;
        dv[at(o)] -= flow;
        dv[at(dst)] += flow;
        dm[at(o)] -= conc(o) * flow;
        dm[at(dst)] += conc(o) * flow;
        for k in [at(o), at(dst)] {
            sv[k] += flow.abs();
            sm[k] += (conc(o) * flow).abs();
        }
    }
    for (lake, rain) in [("lake1", 0.05), ("lake2", 0.04), ("lake3", 0.03)] {
        dv[at(lake)] += rain;
    }
    // At t = 0 precipitation is at its mean and fertilizer at its trough.
    for land in ["land1", "land2", "land3"] {
        dv[at(land)] += 0.05;
        dm[at(land)] += 0.0;
    }
    for (i, id) in ids.iter().enumerate() {
        let w = t.places.get(OperandRole::Water, id).unwrap();
        let n = t.places.get(OperandRole::Nitrogen, id).unwrap();
        assert!((d[w] - dv[i]).abs() <= 1e-12 * (sv[i] + 0.05), "{id}: {} vs {}", d[w], dv[i]);
        assert!((d[n] - dm[i]).abs() <= 1e-12 * sm[i].max(1e-12), "{id}: {} vs {}", d[n], dm[i]);
    }
}

#[test]
fn warnings_are_reproducible() {
    let doc = load("example1");
    let coarse = ScenarioDocument { config: SimulationConfig { dt: 1.0e6, horizon_steps: 20, ..doc.config }, ..doc };
    let a = simulate(&coarse).unwrap();
    let b = simulate(&coarse).unwrap();
    assert!(matches!(a.warnings[0], SimulationWarning::StepAboveStabilityBound { .. }));
    assert!(a.warnings.iter().any(|w| matches!(w, SimulationWarning::Clamped { .. })));
    assert_eq!(a.warnings, b.warnings);
    let w = a.place(OperandRole::Water, "lake1").unwrap();
    assert!(a.states.iter().all(|q| q[w] >= 6e4 - 1e-9));
}

#[test]
fn permuting_buffers_permutes_rows_only() {
    let doc = load("example3");
    let mut shuffled = doc.architecture.clone();
    shuffled.buffers.reverse();
    shuffled.buffers.swap(1, 4);
    let (a, b) = (hfit::build(&doc.architecture), hfit::build(&shuffled));
    assert_eq!(a.capabilities.ids(), b.capabilities.ids());
    let label = |t: &hfit::IncidenceTensors, row: usize| {
        let p = &t.places.places()[row];
        (p.operand, p.buffer.clone())
    };
    for which in [Tensor::Plus, Tensor::Minus, Tensor::Net] {
        let relabel = |t: &hfit::IncidenceTensors| {
            let mut v: Vec<_> = t.tensor(which).triplets().iter().map(|e| (label(t, e.row), e.col, e.value)).collect();
            v.sort();
            v
        };
        assert_eq!(relabel(&a), relabel(&b));
    }
    assert_ne!(a.places.places(), b.places.places());
}

fn triplet_rows(entries: &[Triplet]) -> Vec<usize> {
    entries.iter().map(|t| t.row).collect()
}

#[test]
fn sparse_storage_is_column_major() {
    let t = hfit::build(&load("example2").architecture);
    let triplets = t.net.triplets();
    assert!(triplets.windows(2).all(|w| (w[0].col, w[0].row) < (w[1].col, w[1].row)));
    assert!(!triplet_rows(triplets).is_empty());
}

// Random valid networks: lake 0 at the top, every later non-land buffer fed
// by a river from an earlier one at least 200 m higher, every land 200 m or
// more above the lake it drains into. Heads sit at most 10 m above the bed,
// so no edge can reverse within the horizon.
#[derive(Debug, Clone)]
struct NetSpec {
    classes: Vec<u8>,
    parents: Vec<usize>,
    areas: Vec<f64>,
    elevations: Vec<f64>,
    vmins: Vec<f64>,
    extras: Vec<f64>,
    concs: Vec<f64>,
    resistances: Vec<f64>,
    rain: f64,
    fertilizer: Option<(f64, f64)>,
    dt_fraction: f64,
}

fn net_spec() -> impl Strategy<Value = NetSpec> {
    (2usize..7).prop_flat_map(|n| {
        (
            prop::collection::vec(0u8..3, n),
            prop::collection::vec(any::<prop::sample::Index>(), n),
            prop::collection::vec(1e3f64..1e5, n),
            prop::collection::vec(200.0f64..220.0, n),
            prop::collection::vec(0.0f64..1e4, n),
            prop::collection::vec(0.0f64..1e4, n),
            prop::collection::vec(0.0f64..0.05, n),
            prop::collection::vec(1e4f64..1e7, n),
            0.0f64..0.1,
            prop::option::of((0.0f64..0.01, 0.0f64..0.02)),
            0.05f64..1.0,
        )
            .prop_map(
                |(classes, idx, areas, elevations, vmins, extras, concs, resistances, rain, fert, dt)| {
                    let parents = idx.iter().enumerate().map(|(i, ix)| if i == 0 { 0 } else { ix.index(i) }).collect();
                    NetSpec {
                        classes,
                        parents,
                        areas,
                        elevations,
                        vmins,
                        extras,
                        concs,
                        resistances,
                        rain,
                        fertilizer: fert,
                        dt_fraction: dt,
                    }
                },
            )
    })
}

fn cap(id: String, class: CapabilityClass, subject: &str) -> Capability {
    Capability {
        id,
        class,
        subject: subject.into(),
        origin: None,
        destination: None,
        resistance: None,
        paired_water: None,
    }
}

#[allow(clippy::needless_range_loop)]
fn build_net(spec: &NetSpec) -> InstantiatedArchitecture {
    let n = spec.classes.len();
    let class_of = |i: usize| match (i, spec.classes[i]) {
        (0, _) => BufferClass::Lake,
        (_, 0) => BufferClass::Lake,
        (_, 1) => BufferClass::Point,
        _ => BufferClass::Land,
    };
    let mut arch = InstantiatedArchitecture {
        operands: vec![
            Operand { id: "water".into(), name: "Water".into(), kind: QuantityKind::Volume },
            Operand { id: "nitrogen".into(), name: "Nitrogen".into(), kind: QuantityKind::Mass },
        ],
        ..Default::default()
    };
    let wet: Vec<usize> = (0..n).filter(|&i| class_of(i) != BufferClass::Land).collect();
    let lakes: Vec<usize> = (0..n).filter(|&i| class_of(i) == BufferClass::Lake).collect();
    let upstream = |i: usize| {
        let earlier: Vec<usize> = wet.iter().copied().filter(|&j| j < i).collect();
        earlier[spec.parents[i] % earlier.len()]
    };
    let drain = |i: usize| lakes[spec.parents[i] % lakes.len()];
    let mut elevation = vec![0.0; n];
    for &i in wet.iter().skip(1) {
        elevation[i] = elevation[upstream(i)] - spec.elevations[i];
    }
    for i in (0..n).filter(|&i| class_of(i) == BufferClass::Land) {
        elevation[i] = elevation[drain(i)] + spec.elevations[i];
    }
    for i in 0..n {
        let v0 = spec.vmins[i] + spec.extras[i].min(10.0 * spec.areas[i]);
        arch.buffers.push(Buffer {
            id: format!("b{i}"),
            name: format!("b{i}"),
            class: class_of(i),
            surface_area: spec.areas[i],
            elevation: elevation[i],
            min_volume: spec.vmins[i],
            initial_water_volume: v0,
            initial_nitrogen_mass: spec.concs[i] * v0,
        });
    }
    arch.capabilities.push(cap("rain".into(), CapabilityClass::AcceptH2OLake, "b0"));
    arch.signals.push(ExogenousSignal { target: "rain".into(), shape: SignalShape::Constant(spec.rain) });
    for i in 0..n {
        let id = format!("b{i}");
        arch.capabilities.push(cap(format!("mix{i}"), CapabilityClass::mix(class_of(i)), &id));
        let (from, to, water_class, n_class) = match class_of(i) {
            BufferClass::Land => (i, drain(i), CapabilityClass::TranspH2OLand, CapabilityClass::TranspNLand),
            _ if i == 0 => continue,
            _ => (upstream(i), i, CapabilityClass::TranspH2ORiver, CapabilityClass::TranspNRiver),
        };
        let w = format!("w{i}");
        arch.capabilities.push(Capability {
            origin: Some(format!("b{from}")),
            destination: Some(format!("b{to}")),
            resistance: Some(spec.resistances[i]),
            ..cap(w.clone(), water_class, &format!("edge{i}"))
        });
        arch.capabilities.push(Capability {
            origin: Some(format!("b{from}")),
            destination: Some(format!("b{to}")),
            paired_water: Some(w),
            ..cap(format!("n{i}"), n_class, &format!("edge{i}"))
        });
        if class_of(i) == BufferClass::Land {
            if let Some((mean, amp)) = spec.fertilizer {
                arch.capabilities.push(cap(format!("fert{i}"), CapabilityClass::AcceptNLand, &id));
                arch.signals.push(ExogenousSignal {
                    target: format!("fert{i}"),
                    shape: SignalShape::Sinusoid { mean, amplitude: amp, period: 5e4, phase: 0.0 },
                });
            }
        }
    }
    arch
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 96, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn random_networks_keep_invariants(spec in net_spec()) {
        let arch = build_net(&spec);
        let report = validate(&arch);
        prop_assert!(report.is_valid(), "{}", report);
        prop_assert_eq!(validate(&arch), report);

        let constants = PhysicalConstants::default();
        let bound = match stability_max_dt(&arch, &constants) {
            Ok(r) => r.max_dt,
            Err(_) => 60.0,
        };
        let doc = ScenarioDocument {
            name: "random".into(),
            description: String::new(),
            config: SimulationConfig { dt: (bound * spec.dt_fraction).min(3600.0), horizon_steps: 60, constants, stride: 1 },
            architecture: arch.clone(),
        };
        let t = hfit::build(&arch);
        let water = t.places.water_range();
        let vmin: Vec<f64> = t.places.buffers().map(|p| arch.buffer(&p.buffer).unwrap().min_volume).collect();
        let classes = t.capabilities.classes().to_vec();
        let fertilized = spec.fertilizer.is_some() && arch.buffers.iter().any(|b| b.class == BufferClass::Land);
        let pairs: Vec<(usize, usize, usize, usize)> = arch
            .capabilities
            .iter()
            .filter(|c| c.class.is_nitrogen_transport())
            .map(|c| {
                let o = c.origin.as_deref().unwrap();
                (
                    t.capabilities.get(c.paired_water.as_deref().unwrap()).unwrap(),
                    t.capabilities.get(&c.id).unwrap(),
                    t.places.get(OperandRole::Water, o).unwrap(),
                    t.places.get(OperandRole::Nitrogen, o).unwrap(),
                )
            })
            .collect();
        let n0: f64 = initial_marking(&arch, &t)[t.places.nitrogen_range()].iter().sum();
        let mut failures: Vec<String> = Vec::new();

        let result = simulate_with(&doc, |v| {
            let u = v.firing.as_slice();
            for (class, rate) in classes.iter().zip(u) {
                if class.is_accept() && !(rate.is_finite() && *rate >= 0.0) {
                    failures.push(format!("step {}: accept rate {rate}", v.step));
                }
                if class.is_mix() && *rate != 0.0 {
                    failures.push(format!("step {}: mix fired", v.step));
                }
            }
            for (i, row) in water.clone().enumerate() {
                if v.after[row] < vmin[i] - 1e-9 {
                    failures.push(format!("step {}: place {row} at {} below {}", v.step, v.after[row], vmin[i]));
                }
            }
            for &(wc, nc, wp, np) in &pairs {
                let (vol, mass) = (v.before[wp], v.before[np]);
                if vol > EPSILON_VOLUME {
                    let gap = (mass * u[wc] - vol * u[nc]).abs();
                    if gap > 1e-12 * (mass * u[wc]).abs().max(1e-30) {
                        failures.push(format!("step {}: mixing gap {gap:e}", v.step));
                    }
                }
            }
            if !fertilized {
                let n: f64 = v.after[t.places.nitrogen_range()].iter().sum();
                if (n - n0).abs() > 1e-9 * n0.max(1e-300) {
                    failures.push(format!("step {}: nitrogen drift {}", v.step, n - n0));
                }
            }
        });
        prop_assert!(failures.is_empty(), "{:?}", &failures[..failures.len().min(4)]);
        prop_assert_eq!(result.map(|traj| traj.len()), Ok(61));
    }
}
