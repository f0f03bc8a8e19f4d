//! Engineering system net: places, transitions, incidence and the marking,
//! advanced by the discrete state transition function
//! `Q_B[k+1] = Q_B[k] + M U[k] ΔT`.
//!
//! Transitions fire instantaneously, so input and output firing vectors
//! coincide and no transition marking is kept.

use thiserror::Error;

use crate::architecture::{ExogenousSignal, InstantiatedArchitecture, OperandRole};
use crate::devices::{
    clamp_withdrawals, exogenous_rates, hydraulic_head, mixing_pairs, nitrogen_transport_rates, water_transport_rates,
    ClampWarning, HeadParameters, MixingPair, PhysicalConstants, WaterTransportSet,
};
use crate::hfit::IncidenceTensors;

/// Nitrogen underflow tolerated and rounded to zero, kg.
pub const NITROGEN_UNDERFLOW: f64 = 1e-12;
/// Water underflow tolerated and rounded to zero, m³.
pub const WATER_UNDERFLOW: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EsnError {
    #[error("non-finite state at step {step} (place {place})")]
    NonFiniteState { step: usize, place: usize },
    #[error("negative {operand:?} marking {value:e} at buffer `{buffer}` after step {step}")]
    NegativeMarking { step: usize, operand: OperandRole, buffer: String, value: f64 },
    #[error("firing vector has {got} entries, expected {expected}")]
    FiringLength { got: usize, expected: usize },
}

/// Per-capability rates aligned to the capability index.
#[derive(Debug, Clone, PartialEq)]
pub struct FiringVector(pub Vec<f64>);

impl FiringVector {
    pub fn zeros(n: usize) -> Self {
        FiringVector(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone)]
pub struct EngineeringSystemNet {
    pub tensors: IncidenceTensors,
    marking: Vec<f64>,
    scratch: Vec<f64>,
}

impl EngineeringSystemNet {
    pub fn new(tensors: IncidenceTensors, marking: Vec<f64>) -> Self {
        assert_eq!(marking.len(), tensors.places.len(), "marking must cover every place");
        let scratch = vec![0.0; marking.len()];
        EngineeringSystemNet { tensors, marking, scratch }
    }

    /// Net at its initial condition: buffer volumes and masses as declared.
    pub fn initial(arch: &InstantiatedArchitecture, tensors: IncidenceTensors) -> Self {
        let marking = initial_marking(arch, &tensors);
        Self::new(tensors, marking)
    }

    pub fn marking(&self) -> &[f64] {
        &self.marking
    }

    /// Advances the marking by one step of length `dt`.
    ///
    /// On error the marking is left unchanged.
    pub fn step(&mut self, firing: &FiringVector, dt: f64, step: usize) -> Result<(), EsnError> {
        let n_caps = self.tensors.capabilities.len();
        if firing.0.len() != n_caps {
            return Err(EsnError::FiringLength { got: firing.0.len(), expected: n_caps });
        }
        self.tensors.net.mul_vec_into(&firing.0, &mut self.scratch);
        let water = self.tensors.places.water_range();
        let mut next: Vec<f64> = self.marking.iter().zip(&self.scratch).map(|(q, delta)| q + delta * dt).collect();
        for (row, q) in next.iter_mut().enumerate() {
            if !q.is_finite() {
                return Err(EsnError::NonFiniteState { step, place: row });
            }
            let floor = if water.contains(&row) { WATER_UNDERFLOW } else { NITROGEN_UNDERFLOW };
            if *q < 0.0 {
                if *q < -floor {
                    let place = &self.tensors.places.places()[row];
                    return Err(EsnError::NegativeMarking {
                        step,
                        operand: place.operand,
                        buffer: place.buffer.clone(),
                        value: *q,
                    });
                }
                *q = 0.0;
            }
        }
        self.marking = next;
        Ok(())
    }
}

/// `C_B1`: initial volumes then initial masses, in place order.
pub fn initial_marking(arch: &InstantiatedArchitecture, tensors: &IncidenceTensors) -> Vec<f64> {
    tensors
        .places
        .places()
        .iter()
        .map(|p| {
            let b = arch.buffer(&p.buffer).expect("place index built from this architecture");
            match p.operand {
                OperandRole::Water => b.initial_water_volume,
                OperandRole::Nitrogen => b.initial_nitrogen_mass,
            }
        })
        .collect()
}

/// Precomputed device wiring that turns a marking into a firing vector.
#[derive(Debug, Clone)]
pub struct FiringAssembler {
    pub head: HeadParameters,
    pub transports: WaterTransportSet,
    pub pairs: Vec<MixingPair>,
    signals: Vec<ExogenousSignal>,
    constants: PhysicalConstants,
}

impl FiringAssembler {
    pub fn new(arch: &InstantiatedArchitecture, tensors: &IncidenceTensors, constants: PhysicalConstants) -> Self {
        let transports = WaterTransportSet::new(arch, tensors);
        let pairs = mixing_pairs(arch, tensors, &transports);
        FiringAssembler {
            head: HeadParameters::new(arch, &tensors.places),
            transports,
            pairs,
            signals: arch.signals.clone(),
            constants,
        }
    }

    /// Accept entries from the signals at `t`, water transports from the
    /// resistance law clamped over `dt`, nitrogen transports by complete
    /// mixing of the clamped water rates, mix entries zero.
    pub fn assemble(
        &self,
        tensors: &IncidenceTensors,
        marking: &[f64],
        t: f64,
        dt: f64,
    ) -> (FiringVector, Vec<ClampWarning>) {
        let mut u = FiringVector::zeros(tensors.capabilities.len());
        for (col, rate) in exogenous_rates(t, &self.signals, &tensors.capabilities) {
            u.0[col] = rate;
        }
        let q_water = &marking[tensors.places.water_range()];
        let head = hydraulic_head(q_water, &self.head);
        let raw = water_transport_rates(&head, tensors, &self.transports, &self.constants);
        let (water, warnings) = clamp_withdrawals(&raw, q_water, &self.head, &self.transports, &tensors.places, dt);
        for (&col, &rate) in self.transports.columns.iter().zip(&water) {
            u.0[col] = rate;
        }
        for (pair, rate) in self.pairs.iter().zip(nitrogen_transport_rates(marking, &water, &self.pairs)) {
            u.0[pair.column] = rate;
        }
        (u, warnings)
    }
}

/// One-shot form of [`FiringAssembler::assemble`].
pub fn assemble_firing(
    arch: &InstantiatedArchitecture,
    tensors: &IncidenceTensors,
    constants: PhysicalConstants,
    marking: &[f64],
    t: f64,
    dt: f64,
) -> (FiringVector, Vec<ClampWarning>) {
    FiringAssembler::new(arch, tensors, constants).assemble(tensors, marking, t, dt)
}
