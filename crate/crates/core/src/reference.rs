//! Continuous-time oracle. The state derivative is assembled edge by edge
//! straight from the architecture, without the incidence matrices, and
//! integrated with classical fixed-step RK4.

use thiserror::Error;

use crate::architecture::{validate, ExogenousSignal, InstantiatedArchitecture, OperandRole};
use crate::devices::{PhysicalConstants, EPSILON_VOLUME};
use crate::hfit::{build_capability_index, build_place_index};
use crate::ingest::ScenarioDocument;
use crate::simulator::{concentration, SimulationError, SimulationWarning, Trajectory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReferenceError {
    #[error("reference step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error("non-finite reference state at step {step}")]
    NonFiniteState { step: usize },
    #[error("trajectories describe different architectures")]
    MismatchedArchitecture,
    #[error("time {t} s lies outside the compared trajectory")]
    OutsideHorizon { t: f64 },
}

#[derive(Debug, Clone, PartialEq)]
struct Edge {
    /// Capability id of the water transport.
    id: String,
    origin: usize,
    destination: usize,
    resistance: f64,
    /// Capability id of the slaved nitrogen transport, if any.
    nitrogen: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
struct Inflow {
    id: String,
    buffer: usize,
    operand: OperandRole,
    signal: Option<ExogenousSignal>,
}

/// Edge-list form of an architecture. States are `[V…, m…]` with buffers
/// in place order, the same layout as the engine's marking.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeModel {
    buffers: Vec<String>,
    area: Vec<f64>,
    elevation: Vec<f64>,
    min_volume: Vec<f64>,
    edges: Vec<Edge>,
    inflows: Vec<Inflow>,
    constants: PhysicalConstants,
}

/// Edge flows at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFlows {
    /// m³/s, positive from origin to destination, after clamping.
    pub water: Vec<f64>,
    /// kg/s
    pub nitrogen: Vec<f64>,
    /// `(buffer, scale)` for each clamped buffer.
    pub clamped: Vec<(usize, f64)>,
}

impl OdeModel {
    pub fn new(arch: &InstantiatedArchitecture, constants: PhysicalConstants) -> Self {
        let buffers: Vec<String> = build_place_index(arch).buffers().map(|p| p.buffer.clone()).collect();
        let at = |id: &str| buffers.iter().position(|b| b == id).expect("known buffer");
        let mut model = OdeModel {
            area: vec![],
            elevation: vec![],
            min_volume: vec![],
            edges: vec![],
            inflows: vec![],
            constants,
            buffers: vec![],
        };
        for id in &buffers {
            let b = arch.buffer(id).expect("known buffer");
            model.area.push(b.surface_area);
            model.elevation.push(b.elevation);
            model.min_volume.push(b.min_volume);
        }
        for cap in &arch.capabilities {
            let class = cap.class;
            if class.is_water_transport() {
                model.edges.push(Edge {
                    id: cap.id.clone(),
                    origin: at(cap.origin.as_deref().expect("origin")),
                    destination: at(cap.destination.as_deref().expect("destination")),
                    resistance: cap.resistance.expect("resistance"),
                    nitrogen: None,
                });
            } else if class.is_accept() {
                model.inflows.push(Inflow {
                    id: cap.id.clone(),
                    buffer: at(&cap.subject),
                    operand: class.operand().expect("accept operand"),
                    signal: arch.signals.iter().find(|s| s.target == cap.id).cloned(),
                });
            }
        }
        for cap in arch.capabilities.iter().filter(|c| c.class.is_nitrogen_transport()) {
            let partner = cap.paired_water.as_deref().expect("partner");
            if let Some(edge) = model.edges.iter_mut().find(|e| e.id == partner) {
                edge.nitrogen = Some(cap.id.clone());
            }
        }
        model.buffers = buffers;
        model
    }

    pub fn dimension(&self) -> usize {
        2 * self.buffers.len()
    }

    pub fn buffers(&self) -> &[String] {
        &self.buffers
    }

    fn head(&self, state: &[f64], b: usize) -> f64 {
        (state[b] - self.min_volume[b]) / self.area[b] + self.elevation[b]
    }

    /// Resistance-law flows, clamped so no buffer drops below its minimum
    /// over `clamp_dt`, with nitrogen carried at the origin concentration.
    pub fn flows(&self, state: &[f64], clamp_dt: f64) -> EdgeFlows {
        let n = self.buffers.len();
        let rho_g = self.constants.rho_g();
        let raw: Vec<f64> = self
            .edges
            .iter()
            .map(|e| rho_g * (self.head(state, e.origin) - self.head(state, e.destination)) / e.resistance)
            .collect();
        let donor = |i: usize| if raw[i] >= 0.0 { self.edges[i].origin } else { self.edges[i].destination };

        let mut demand = vec![0.0; n];
        for (i, q) in raw.iter().enumerate() {
            demand[donor(i)] += q.abs();
        }
        let mut scale = vec![1.0; n];
        let mut clamped = Vec::new();
        for b in 0..n {
            let spare = (state[b] - self.min_volume[b]).max(0.0);
            if demand[b] > 0.0 && demand[b] * clamp_dt > spare {
                scale[b] = spare / (demand[b] * clamp_dt);
                clamped.push((b, scale[b]));
            }
        }
        let water: Vec<f64> = raw.iter().enumerate().map(|(i, q)| q * scale[donor(i)]).collect();
        let nitrogen = self
            .edges
            .iter()
            .zip(&water)
            .map(|(e, q)| {
                let v = state[e.origin];
                if e.nitrogen.is_some() && v > EPSILON_VOLUME {
                    state[n + e.origin] / v * q
                } else {
                    0.0
                }
            })
            .collect();
        EdgeFlows { water, nitrogen, clamped }
    }

    fn inflow_rate(inflow: &Inflow, t: f64) -> f64 {
        inflow.signal.as_ref().map_or(0.0, |s| s.rate_at(t))
    }

    /// Sum of the nitrogen accept rates at `t`, kg/s.
    pub fn exogenous_nitrogen(&self, t: f64) -> f64 {
        self.inflows.iter().filter(|i| i.operand == OperandRole::Nitrogen).map(|i| Self::inflow_rate(i, t)).sum()
    }

    pub fn rhs(&self, state: &[f64], t: f64, clamp_dt: f64) -> Vec<f64> {
        assert_eq!(state.len(), self.dimension(), "state dimension");
        let n = self.buffers.len();
        let mut d = vec![0.0; 2 * n];
        for inflow in &self.inflows {
            let row = match inflow.operand {
                OperandRole::Water => inflow.buffer,
                OperandRole::Nitrogen => n + inflow.buffer,
            };
            d[row] += Self::inflow_rate(inflow, t);
        }
        let flows = self.flows(state, clamp_dt);
        for ((e, q), qn) in self.edges.iter().zip(&flows.water).zip(&flows.nitrogen) {
            d[e.origin] -= q;
            d[e.destination] += q;
            d[n + e.origin] -= qn;
            d[n + e.destination] += qn;
        }
        d
    }

    /// Per-capability rates in capability-index order.
    fn firing(&self, ids: &[String], state: &[f64], t: f64, clamp_dt: f64) -> Vec<f64> {
        let flows = self.flows(state, clamp_dt);
        let mut u = vec![0.0; ids.len()];
        let col = |id: &str| ids.iter().position(|c| c == id).expect("known capability");
        for inflow in &self.inflows {
            u[col(&inflow.id)] = Self::inflow_rate(inflow, t);
        }
        for ((e, q), qn) in self.edges.iter().zip(&flows.water).zip(&flows.nitrogen) {
            u[col(&e.id)] = *q;
            if let Some(id) = &e.nitrogen {
                u[col(id)] = *qn;
            }
        }
        u
    }
}

/// Time derivative of `[V…, m…]` at `t`, clamping over `clamp_dt`.
pub fn ode_rhs(
    state: &[f64],
    t: f64,
    arch: &InstantiatedArchitecture,
    constants: PhysicalConstants,
    clamp_dt: f64,
) -> Vec<f64> {
    OdeModel::new(arch, constants).rhs(state, t, clamp_dt)
}

fn axpy(x: &[f64], a: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| xi + a * yi).collect()
}

/// Classical RK4 over the document's horizon with step `dt_ref`.
///
/// Rows are recorded at the document's output times (every
/// `stride · dt` seconds) plus the final time.
pub fn rk4_integrate(doc: &ScenarioDocument, dt_ref: f64) -> Result<Trajectory, ReferenceError> {
    if !(dt_ref.is_finite() && dt_ref > 0.0) {
        return Err(ReferenceError::InvalidStep(dt_ref));
    }
    let arch = &doc.architecture;
    doc.config.check()?;
    let report = validate(arch);
    if !report.is_valid() {
        return Err(SimulationError::InvalidArchitecture(report).into());
    }
    let model = OdeModel::new(arch, doc.config.constants);
    let places = build_place_index(arch);
    let ids = build_capability_index(arch).ids().to_vec();

    let duration = doc.config.duration();
    let steps = ((duration / dt_ref).round() as usize).max(1);
    let record_every = ((doc.config.stride as f64 * doc.config.dt / dt_ref).round() as usize).max(1);

    let n = model.buffers.len();
    let mut state: Vec<f64> = model
        .buffers
        .iter()
        .map(|b| arch.buffer(b).expect("known buffer").initial_water_volume)
        .chain(model.buffers.iter().map(|b| arch.buffer(b).expect("known buffer").initial_nitrogen_mass))
        .collect();

    let mut traj = Trajectory {
        places: places.places().to_vec(),
        capabilities: ids.clone(),
        steps: vec![],
        times: vec![],
        states: vec![],
        firings: vec![],
        warnings: vec![],
    };
    for k in 0..=steps {
        let t = k as f64 * dt_ref;
        if k % record_every == 0 || k == steps {
            traj.steps.push(k);
            traj.times.push(t);
            traj.states.push(state.clone());
            traj.firings.push(model.firing(&ids, &state, t, dt_ref));
        }
        if k == steps {
            break;
        }
        for (b, scale) in model.flows(&state, dt_ref).clamped {
            traj.warnings.push(SimulationWarning::Clamped { step: k, buffer: model.buffers[b].clone(), scale });
        }
        let h = dt_ref;
        let k1 = model.rhs(&state, t, h);
        let k2 = model.rhs(&axpy(&state, h / 2.0, &k1), t + h / 2.0, h);
        let k3 = model.rhs(&axpy(&state, h / 2.0, &k2), t + h / 2.0, h);
        let k4 = model.rhs(&axpy(&state, h, &k3), t + h, h);
        for i in 0..2 * n {
            state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if state.iter().any(|x| !x.is_finite()) {
            return Err(ReferenceError::NonFiniteState { step: k });
        }
        for x in state.iter_mut() {
            if *x < 0.0 && *x > -1e-9 {
                *x = 0.0;
            }
        }
    }
    Ok(traj)
}

/// Concentration error of one buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct BufferError {
    pub buffer: String,
    /// kg/m³
    pub linf: f64,
    pub rmse: f64,
    /// Rows where both concentrations were defined.
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub buffers: Vec<BufferError>,
    pub linf: f64,
    pub rmse: f64,
}

impl Comparison {
    pub fn buffer(&self, id: &str) -> Option<&BufferError> {
        self.buffers.iter().find(|b| b.buffer == id)
    }
}

/// Linearly interpolates `b`'s concentrations to `a`'s times and reports
/// per-buffer Linf and RMSE.
pub fn compare_trajectories(a: &Trajectory, b: &Trajectory) -> Result<Comparison, ReferenceError> {
    if a.places != b.places || b.is_empty() {
        return Err(ReferenceError::MismatchedArchitecture);
    }
    let (t0, t1) = (b.times[0], b.times[b.len() - 1]);
    let slack = 1e-9 * (t1 - t0).abs().max(1.0);
    let mut buffers = Vec::new();
    let (mut total_sq, mut total_n, mut total_inf) = (0.0, 0usize, 0.0f64);
    for place in a.buffers() {
        let w = a.place(OperandRole::Water, &place.buffer).expect("water place");
        let m = a.place(OperandRole::Nitrogen, &place.buffer).expect("nitrogen place");
        let conc = |q: &[f64]| concentration(q[w], q[m]);
        let (mut sq, mut count, mut inf) = (0.0, 0usize, 0.0f64);
        let mut j = 0;
        for (t, qa) in a.times.iter().zip(&a.states) {
            if *t < t0 - slack || *t > t1 + slack {
                return Err(ReferenceError::OutsideHorizon { t: *t });
            }
            while j + 1 < b.len() && b.times[j + 1] < *t {
                j += 1;
            }
            let cb = if j + 1 < b.len() {
                let (ta, tb) = (b.times[j], b.times[j + 1]);
                let s = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
                match (conc(&b.states[j]), conc(&b.states[j + 1])) {
                    (Some(x), Some(y)) => Some(x + s * (y - x)),
                    _ => None,
                }
            } else {
                conc(&b.states[j])
            };
            if let (Some(x), Some(y)) = (conc(qa), cb) {
                let e = (x - y).abs();
                inf = inf.max(e);
                sq += e * e;
                count += 1;
            }
        }
        total_sq += sq;
        total_n += count;
        total_inf = total_inf.max(inf);
        let rmse = if count > 0 { (sq / count as f64).sqrt() } else { 0.0 };
        buffers.push(BufferError { buffer: place.buffer.clone(), linf: inf, rmse, samples: count });
    }
    let rmse = if total_n > 0 { (total_sq / total_n as f64).sqrt() } else { 0.0 };
    Ok(Comparison { buffers, linf: total_inf, rmse })
}
