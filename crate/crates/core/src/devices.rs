//! Constitutive device models: linear fluidic resistance for water
//! transport, complete mixing for nitrogen transport and exogenous accept
//! rates.

use crate::architecture::{ExogenousSignal, InstantiatedArchitecture, OperandRole};
use crate::hfit::{CapabilityIndex, IncidenceTensors, PlaceIndex};

/// Volume below which a buffer is treated as empty for mixing, m³.
pub const EPSILON_VOLUME: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// kg/m³
    pub rho: f64,
    /// m/s²
    pub g: f64,
}

impl PhysicalConstants {
    pub fn rho_g(&self) -> f64 {
        self.rho * self.g
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants { rho: 1000.0, g: 9.81 }
    }
}

/// Per-water-place geometry in place-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParameters {
    pub inv_area: Vec<f64>,
    pub elevation: Vec<f64>,
    pub min_volume: Vec<f64>,
}

impl HeadParameters {
    pub fn new(arch: &InstantiatedArchitecture, places: &PlaceIndex) -> Self {
        let mut params = HeadParameters { inv_area: vec![], elevation: vec![], min_volume: vec![] };
        for place in places.buffers() {
            let buffer = arch.buffer(&place.buffer).expect("place index built from this architecture");
            params.inv_area.push(1.0 / buffer.surface_area);
            params.elevation.push(buffer.elevation);
            params.min_volume.push(buffer.min_volume);
        }
        params
    }

    pub fn len(&self) -> usize {
        self.inv_area.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_area.is_empty()
    }
}

/// `A⁻¹(Q − Q_min) + z`, elementwise.
pub fn hydraulic_head(q_water: &[f64], params: &HeadParameters) -> Vec<f64> {
    assert_eq!(q_water.len(), params.len());
    q_water
        .iter()
        .zip(&params.inv_area)
        .zip(&params.min_volume)
        .zip(&params.elevation)
        .map(|(((q, inv_a), q_min), z)| inv_a * (q - q_min) + z)
        .collect()
}

/// Water-transport columns of `M` with their resistances and endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterTransportSet {
    /// Capability columns, in column order.
    pub columns: Vec<usize>,
    /// Pa·s/m³
    pub resistances: Vec<f64>,
    /// Water-place row pulled from by a positive rate.
    pub origins: Vec<usize>,
    /// Water-place row injected into by a positive rate.
    pub destinations: Vec<usize>,
}

impl WaterTransportSet {
    pub fn new(arch: &InstantiatedArchitecture, tensors: &IncidenceTensors) -> Self {
        let mut set = WaterTransportSet { columns: vec![], resistances: vec![], origins: vec![], destinations: vec![] };
        let water = tensors.places.water_range();
        for (col, (id, class)) in tensors.capabilities.ids().iter().zip(tensors.capabilities.classes()).enumerate() {
            if !class.is_water_transport() {
                continue;
            }
            let cap = arch.capability(id).expect("capability index built from this architecture");
            let column = tensors.net.column(col);
            let origin = column.iter().find(|t| t.value < 0 && water.contains(&t.row));
            let destination = column.iter().find(|t| t.value > 0 && water.contains(&t.row));
            let (Some(o), Some(d)) = (origin, destination) else {
                panic!("water transport `{id}` has no origin/destination row; validate the architecture first");
            };
            set.columns.push(col);
            set.resistances.push(cap.resistance.expect("water transport without resistance"));
            set.origins.push(o.row);
            set.destinations.push(d.row);
        }
        set
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

/// `R⁻¹ ρg (−M_transpᵀ) head` over the water-transport columns.
///
/// Rates are signed: positive moves water from origin to destination.
pub fn water_transport_rates(
    head: &[f64],
    tensors: &IncidenceTensors,
    transports: &WaterTransportSet,
    constants: &PhysicalConstants,
) -> Vec<f64> {
    let water = tensors.places.water_range();
    assert_eq!(head.len(), water.len());
    let rho_g = constants.rho_g();
    transports
        .columns
        .iter()
        .zip(&transports.resistances)
        .map(|(&col, &r)| {
            let head_drop: f64 = tensors
                .net
                .column(col)
                .iter()
                .filter(|t| water.contains(&t.row))
                .map(|t| -f64::from(t.value) * head[t.row])
                .sum();
            rho_g * head_drop / r
        })
        .collect()
}

/// A buffer whose withdrawals were scaled down during one step.
#[derive(Debug, Clone, PartialEq)]
pub struct ClampWarning {
    pub buffer: String,
    /// Factor in `[0, 1)` applied to every withdrawal from the buffer.
    pub scale: f64,
}

/// Scales withdrawals so that no buffer is drawn below its minimum volume
/// over `dt`.
///
/// A transport withdraws from its origin when its rate is positive and from
/// its destination when negative. For each buffer, if total withdrawal over
/// `dt` exceeds the volume above `min_volume`, every withdrawing rate is
/// multiplied by the same factor so the withdrawal equals that volume.
/// Inflows are left untouched and not credited.
pub fn clamp_withdrawals(
    rates: &[f64],
    q_water: &[f64],
    params: &HeadParameters,
    transports: &WaterTransportSet,
    places: &PlaceIndex,
    dt: f64,
) -> (Vec<f64>, Vec<ClampWarning>) {
    assert_eq!(rates.len(), transports.len());
    let source = |i: usize| {
        if rates[i] >= 0.0 {
            transports.origins[i]
        } else {
            transports.destinations[i]
        }
    };
    let mut withdrawal = vec![0.0; q_water.len()];
    for (i, rate) in rates.iter().enumerate() {
        withdrawal[source(i)] += rate.abs();
    }
    let scale: Vec<f64> = withdrawal
        .iter()
        .zip(q_water)
        .zip(&params.min_volume)
        .map(|((&w, &q), &q_min)| {
            let available = (q - q_min).max(0.0);
            if w > 0.0 && w * dt > available {
                available / (w * dt)
            } else {
                1.0
            }
        })
        .collect();
    let clamped = rates.iter().enumerate().map(|(i, &r)| r * scale[source(i)]).collect();
    let warnings = scale
        .iter()
        .enumerate()
        .filter(|(_, &s)| s < 1.0)
        .map(|(row, &s)| ClampWarning { buffer: places.places()[row].buffer.clone(), scale: s })
        .collect();
    (clamped, warnings)
}

/// A nitrogen transport slaved to a water transport with the same endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MixingPair {
    /// Nitrogen-transport capability column.
    pub column: usize,
    /// Position of the paired water transport in its [`WaterTransportSet`].
    pub water: usize,
    /// Origin buffer's water and nitrogen place rows.
    pub origin_water: usize,
    pub origin_nitrogen: usize,
}

pub fn mixing_pairs(
    arch: &InstantiatedArchitecture,
    tensors: &IncidenceTensors,
    transports: &WaterTransportSet,
) -> Vec<MixingPair> {
    let caps = &tensors.capabilities;
    caps.ids()
        .iter()
        .zip(caps.classes())
        .enumerate()
        .filter(|(_, (_, class))| class.is_nitrogen_transport())
        .map(|(column, (id, _))| {
            let cap = arch.capability(id).expect("capability index built from this architecture");
            let partner = cap.paired_water.as_deref().expect("nitrogen transport without partner");
            let partner_col = caps.get(partner).expect("dangling partner");
            let water = transports.columns.iter().position(|&c| c == partner_col).expect("partner is not water");
            let origin = cap.origin.as_deref().expect("transport without origin");
            MixingPair {
                column,
                water,
                origin_water: tensors.places.get(OperandRole::Water, origin).expect("origin place"),
                origin_nitrogen: tensors.places.get(OperandRole::Nitrogen, origin).expect("origin place"),
            }
        })
        .collect()
}

/// Complete mixing: each nitrogen rate carries the origin's concentration,
/// `ṁ = m V̇ / V`, and is zero when the origin holds at most
/// [`EPSILON_VOLUME`].
pub fn nitrogen_transport_rates(marking: &[f64], water_rates: &[f64], pairs: &[MixingPair]) -> Vec<f64> {
    pairs
        .iter()
        .map(|p| {
            let v = marking[p.origin_water];
            if v > EPSILON_VOLUME {
                marking[p.origin_nitrogen] * water_rates[p.water] / v
            } else {
                0.0
            }
        })
        .collect()
}

/// Rates of the signalled accept capabilities at time `t`, as
/// `(column, rate)`. Unsignalled accepts are implicitly zero.
pub fn exogenous_rates(t: f64, signals: &[ExogenousSignal], capabilities: &CapabilityIndex) -> Vec<(usize, f64)> {
    signals.iter().filter_map(|s| capabilities.get(&s.target).map(|col| (col, s.rate_at(t)))).collect()
}
