//! Initial-value simulation: stability guard, forward-Euler time loop and
//! trajectory recording.

use std::fmt;

use thiserror::Error;

use crate::architecture::{validate, BufferClass, InstantiatedArchitecture, OperandRole, ValidationReport};
use crate::devices::{PhysicalConstants, EPSILON_VOLUME};
use crate::esn::{EngineeringSystemNet, EsnError, FiringAssembler, FiringVector};
use crate::hfit::{self, IncidenceTensors, Place, PlaceIndex};
use crate::ingest::ScenarioDocument;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    /// s
    pub dt: f64,
    pub horizon_steps: usize,
    pub constants: PhysicalConstants,
    /// Record every `stride`-th state; the final state is always recorded.
    pub stride: usize,
}

impl SimulationConfig {
    pub fn check(&self) -> Result<(), SimulationError> {
        let bad = |what: &str| Err(SimulationError::InvalidConfig(what.to_string()));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt must be positive and finite");
        }
        if self.horizon_steps == 0 {
            return bad("horizon must be at least one step");
        }
        if !(self.dt * self.horizon_steps as f64).is_finite() {
            return bad("dt times horizon overflows");
        }
        if self.stride == 0 {
            return bad("stride must be at least one");
        }
        if !(self.constants.rho > 0.0 && self.constants.g > 0.0) {
            return bad("rho and g must be positive");
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.horizon_steps as f64
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid architecture:\n{0}")]
    InvalidArchitecture(ValidationReport),
    #[error("no water-transport edges")]
    NoTransportEdges,
    #[error(transparent)]
    State(#[from] EsnError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimulationWarning {
    StepAboveStabilityBound { dt: f64, bound: f64 },
    Clamped { step: usize, buffer: String, scale: f64 },
}

impl fmt::Display for SimulationWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimulationWarning::StepAboveStabilityBound { dt, bound } => {
                write!(f, "dt = {dt} s exceeds the stability bound {bound} s")
            }
            SimulationWarning::Clamped { step, buffer, scale } => {
                write!(f, "step {step}: withdrawals from `{buffer}` scaled by {scale}")
            }
        }
    }
}

/// Time constant of one water-transport edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTimeConstant {
    pub capability: String,
    pub origin: String,
    pub destination: String,
    /// s
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub edges: Vec<EdgeTimeConstant>,
    /// `min τ / 10`, s
    pub max_dt: f64,
}

/// Largest step for which explicit Euler stays well inside its stability
/// region on every edge taken as an isolated two-buffer exchange.
///
/// For an edge with resistance `R` between areas `A_o` and `A_d` the head
/// difference decays with `τ = R / (ρg (1/A_o + 1/A_d))`.
pub fn stability_max_dt(
    arch: &InstantiatedArchitecture,
    constants: &PhysicalConstants,
) -> Result<StabilityReport, SimulationError> {
    let mut edges = Vec::new();
    for cap in arch.water_transports() {
        let (Some(o), Some(d), Some(r)) = (cap.origin.as_deref(), cap.destination.as_deref(), cap.resistance) else {
            continue;
        };
        let (Some(bo), Some(bd)) = (arch.buffer(o), arch.buffer(d)) else { continue };
        let conductance = 1.0 / bo.surface_area + 1.0 / bd.surface_area;
        edges.push(EdgeTimeConstant {
            capability: cap.id.clone(),
            origin: o.to_string(),
            destination: d.to_string(),
            tau: r / (constants.rho_g() * conductance),
        });
    }
    let tau_min = edges.iter().map(|e| e.tau).fold(f64::INFINITY, f64::min);
    if edges.is_empty() {
        return Err(SimulationError::NoTransportEdges);
    }
    Ok(StabilityReport { edges, max_dt: tau_min / 10.0 })
}

/// Recorded history of one run.
///
/// Row `i` holds the state at step `steps[i]` and the firing vector
/// evaluated at that state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub places: Vec<Place>,
    pub capabilities: Vec<String>,
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub firings: Vec<Vec<f64>>,
    pub warnings: Vec<SimulationWarning>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Buffers in place order (water block).
    pub fn buffers(&self) -> impl Iterator<Item = &Place> {
        self.places.iter().filter(|p| p.operand == OperandRole::Water)
    }

    pub fn place(&self, operand: OperandRole, buffer: &str) -> Option<usize> {
        self.places.iter().position(|p| p.operand == operand && p.buffer == buffer)
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// One step as seen by an observer: `after = before + M u dt`.
#[derive(Debug)]
pub struct StepView<'a> {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub before: &'a [f64],
    pub firing: &'a FiringVector,
    pub after: &'a [f64],
    pub tensors: &'a IncidenceTensors,
}

pub fn simulate(doc: &ScenarioDocument) -> Result<Trajectory, SimulationError> {
    simulate_with(doc, |_| {})
}

/// Runs `doc` and calls `observer` after every step.
pub fn simulate_with<F>(doc: &ScenarioDocument, mut observer: F) -> Result<Trajectory, SimulationError>
where
    F: FnMut(&StepView<'_>),
{
    let arch = &doc.architecture;
    let config = &doc.config;
    config.check()?;
    let report = validate(arch);
    if !report.is_valid() {
        return Err(SimulationError::InvalidArchitecture(report));
    }

    let tensors = hfit::build(arch);
    let assembler = FiringAssembler::new(arch, &tensors, config.constants);
    let mut net = EngineeringSystemNet::initial(arch, tensors.clone());

    let mut traj = Trajectory {
        places: tensors.places.places().to_vec(),
        capabilities: tensors.capabilities.ids().to_vec(),
        steps: Vec::new(),
        times: Vec::new(),
        states: Vec::new(),
        firings: Vec::new(),
        warnings: Vec::new(),
    };
    if let Ok(stability) = stability_max_dt(arch, &config.constants) {
        if config.dt > stability.max_dt {
            traj.warnings.push(SimulationWarning::StepAboveStabilityBound { dt: config.dt, bound: stability.max_dt });
        }
    }

    let dt = config.dt;
    let k_end = config.horizon_steps;
    for k in 0..=k_end {
        let t = k as f64 * dt;
        let (u, clamps) = assembler.assemble(&tensors, net.marking(), t, dt);
        if k % config.stride == 0 || k == k_end {
            traj.steps.push(k);
            traj.times.push(t);
            traj.states.push(net.marking().to_vec());
            traj.firings.push(u.0.clone());
        }
        if k == k_end {
            break;
        }
        traj.warnings.extend(clamps.into_iter().map(|c| SimulationWarning::Clamped {
            step: k,
            buffer: c.buffer,
            scale: c.scale,
        }));
        let before = net.marking().to_vec();
        net.step(&u, dt, k)?;
        observer(&StepView { step: k, t, dt, before: &before, firing: &u, after: net.marking(), tensors: &tensors });
    }
    Ok(traj)
}

/// `m / V` for one buffer; `None` where `V ≤ ε_V`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationSeries {
    pub buffer: String,
    pub class: BufferClass,
    /// kg/m³
    pub values: Vec<Option<f64>>,
}

pub fn concentration(volume: f64, mass: f64) -> Option<f64> {
    (volume > EPSILON_VOLUME).then(|| mass / volume)
}

pub fn concentrations(traj: &Trajectory, places: &PlaceIndex) -> Vec<ConcentrationSeries> {
    places
        .buffers()
        .map(|p| {
            let w = places.get(OperandRole::Water, &p.buffer).expect("water place");
            let n = places.get(OperandRole::Nitrogen, &p.buffer).expect("nitrogen place");
            ConcentrationSeries {
                buffer: p.buffer.clone(),
                class: p.class,
                values: traj.states.iter().map(|q| concentration(q[w], q[n])).collect(),
            }
        })
        .collect()
}

/// Concentration of one buffer straight from a trajectory.
pub fn concentration_series(traj: &Trajectory, buffer: &str) -> Option<Vec<Option<f64>>> {
    let w = traj.place(OperandRole::Water, buffer)?;
    let n = traj.place(OperandRole::Nitrogen, buffer)?;
    Some(traj.states.iter().map(|q| concentration(q[w], q[n])).collect())
}
