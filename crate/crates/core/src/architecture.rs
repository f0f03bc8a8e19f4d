//! Domain model of an instantiated watershed architecture.
//!
//! An architecture is a set of operands (water and nitrogen), buffers (lakes,
//! land segments and river points) and capabilities, the (resource, process)
//! pairs that accept, mix or transport operands. Exogenous signals drive the
//! accept capabilities. The model is plain data: [`validate`] reports every
//! broken rule instead of failing on the first one.

use std::collections::{HashMap, HashSet};
use std::fmt;

/// Quantity an operand is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuantityKind {
    /// m³
    Volume,
    /// kg
    Mass,
}

impl QuantityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            QuantityKind::Volume => "volume",
            QuantityKind::Mass => "mass",
        }
    }
}

/// The two operand roles of the watershed reference architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OperandRole {
    Water,
    Nitrogen,
}

impl OperandRole {
    pub fn kind(self) -> QuantityKind {
        match self {
            OperandRole::Water => QuantityKind::Volume,
            OperandRole::Nitrogen => QuantityKind::Mass,
        }
    }

    pub fn of_kind(kind: QuantityKind) -> Self {
        match kind {
            QuantityKind::Volume => OperandRole::Water,
            QuantityKind::Mass => OperandRole::Nitrogen,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Operand {
    pub id: String,
    pub name: String,
    pub kind: QuantityKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BufferClass {
    Lake,
    Land,
    Point,
}

impl BufferClass {
    pub const ALL: [BufferClass; 3] = [BufferClass::Lake, BufferClass::Land, BufferClass::Point];

    pub fn as_str(self) -> &'static str {
        match self {
            BufferClass::Lake => "lake",
            BufferClass::Land => "land",
            BufferClass::Point => "point",
        }
    }
}

impl fmt::Display for BufferClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A storage location for water and nitrogen.
#[derive(Debug, Clone, PartialEq)]
pub struct Buffer {
    pub id: String,
    pub name: String,
    pub class: BufferClass,
    /// m², strictly positive.
    pub surface_area: f64,
    /// m
    pub elevation: f64,
    /// Volume below which no head is available to drive flow, m³.
    pub min_volume: f64,
    pub initial_water_volume: f64,
    pub initial_nitrogen_mass: f64,
}

/// The ten capability classes, in the canonical firing-vector block order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CapabilityClass {
    AcceptH2OLake,
    AcceptH2OLand,
    AcceptNLand,
    MixH2OLake,
    MixH2OLand,
    MixH2OPoint,
    TranspH2OLand,
    TranspNLand,
    TranspH2ORiver,
    TranspNRiver,
}

impl CapabilityClass {
    pub const ALL: [CapabilityClass; 10] = [
        CapabilityClass::AcceptH2OLake,
        CapabilityClass::AcceptH2OLand,
        CapabilityClass::AcceptNLand,
        CapabilityClass::MixH2OLake,
        CapabilityClass::MixH2OLand,
        CapabilityClass::MixH2OPoint,
        CapabilityClass::TranspH2OLand,
        CapabilityClass::TranspNLand,
        CapabilityClass::TranspH2ORiver,
        CapabilityClass::TranspNRiver,
    ];

    /// Zero-based position of this class's block in the firing vector.
    pub fn block(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            CapabilityClass::AcceptH2OLake => "AcceptH2O-Lake",
            CapabilityClass::AcceptH2OLand => "AcceptH2O-Land",
            CapabilityClass::AcceptNLand => "AcceptN-Land",
            CapabilityClass::MixH2OLake => "MixH2O-Lake",
            CapabilityClass::MixH2OLand => "MixH2O-Land",
            CapabilityClass::MixH2OPoint => "MixH2O-Point",
            CapabilityClass::TranspH2OLand => "TranspH2O-Land",
            CapabilityClass::TranspNLand => "TranspN-Land",
            CapabilityClass::TranspH2ORiver => "TranspH2O-River",
            CapabilityClass::TranspNRiver => "TranspN-River",
        }
    }

    pub fn is_accept(self) -> bool {
        matches!(self, CapabilityClass::AcceptH2OLake | CapabilityClass::AcceptH2OLand | CapabilityClass::AcceptNLand)
    }

    pub fn is_mix(self) -> bool {
        matches!(self, CapabilityClass::MixH2OLake | CapabilityClass::MixH2OLand | CapabilityClass::MixH2OPoint)
    }

    pub fn is_transport(self) -> bool {
        self.is_water_transport() || self.is_nitrogen_transport()
    }

    pub fn is_water_transport(self) -> bool {
        matches!(self, CapabilityClass::TranspH2OLand | CapabilityClass::TranspH2ORiver)
    }

    pub fn is_nitrogen_transport(self) -> bool {
        matches!(self, CapabilityClass::TranspNLand | CapabilityClass::TranspNRiver)
    }

    /// Operand moved or injected by accept and transport classes. Mixing acts
    /// on both operands and returns `None`.
    pub fn operand(self) -> Option<OperandRole> {
        match self {
            CapabilityClass::AcceptH2OLake
            | CapabilityClass::AcceptH2OLand
            | CapabilityClass::TranspH2OLand
            | CapabilityClass::TranspH2ORiver => Some(OperandRole::Water),
            CapabilityClass::AcceptNLand | CapabilityClass::TranspNLand | CapabilityClass::TranspNRiver => {
                Some(OperandRole::Nitrogen)
            }
            _ => None,
        }
    }

    /// Class of an accept capability for `operand` at a buffer of class `at`.
    pub fn accept(operand: OperandRole, at: BufferClass) -> Option<Self> {
        match (operand, at) {
            (OperandRole::Water, BufferClass::Lake) => Some(CapabilityClass::AcceptH2OLake),
            (OperandRole::Water, BufferClass::Land) => Some(CapabilityClass::AcceptH2OLand),
            (OperandRole::Nitrogen, BufferClass::Land) => Some(CapabilityClass::AcceptNLand),
            _ => None,
        }
    }

    pub fn mix(at: BufferClass) -> Self {
        match at {
            BufferClass::Lake => CapabilityClass::MixH2OLake,
            BufferClass::Land => CapabilityClass::MixH2OLand,
            BufferClass::Point => CapabilityClass::MixH2OPoint,
        }
    }

    /// Transport out of a land segment is runoff; everything else is river flow.
    pub fn transport(operand: OperandRole, origin: BufferClass) -> Self {
        match (operand, origin) {
            (OperandRole::Water, BufferClass::Land) => CapabilityClass::TranspH2OLand,
            (OperandRole::Nitrogen, BufferClass::Land) => CapabilityClass::TranspNLand,
            (OperandRole::Water, _) => CapabilityClass::TranspH2ORiver,
            (OperandRole::Nitrogen, _) => CapabilityClass::TranspNRiver,
        }
    }
}

impl fmt::Display for CapabilityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// "Resource `subject` does process `class`".
///
/// Accept and mix capabilities act at `subject`, which is a buffer id.
/// Transport capabilities are carried by `subject` (a river segment or land
/// segment) from `origin` to `destination`.
#[derive(Debug, Clone, PartialEq)]
pub struct Capability {
    pub id: String,
    pub class: CapabilityClass,
    pub subject: String,
    pub origin: Option<String>,
    pub destination: Option<String>,
    /// Pa·s/m³, water transports only.
    pub resistance: Option<f64>,
    /// Water transport whose flow carries this nitrogen transport.
    pub paired_water: Option<String>,
}

impl Capability {
    /// Buffer an accept or mix capability acts on.
    pub fn location(&self) -> Option<&str> {
        if self.class.is_transport() {
            None
        } else {
            Some(&self.subject)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SignalShape {
    Constant(f64),
    Sinusoid {
        mean: f64,
        amplitude: f64,
        /// s, strictly positive.
        period: f64,
        /// s
        phase: f64,
    },
    /// Sorted `(time s, value)` breakpoints, held until the next breakpoint.
    Table(Vec<(f64, f64)>),
}

/// Exogenous rate driving one accept capability.
#[derive(Debug, Clone, PartialEq)]
pub struct ExogenousSignal {
    pub target: String,
    pub shape: SignalShape,
}

impl ExogenousSignal {
    /// Rate at time `t`, floored at zero.
    pub fn rate_at(&self, t: f64) -> f64 {
        let raw = match &self.shape {
            SignalShape::Constant(v) => *v,
            SignalShape::Sinusoid { mean, amplitude, period, phase } => {
                mean + amplitude * (2.0 * std::f64::consts::PI * (t - phase) / period).sin()
            }
            SignalShape::Table(points) => {
                // Before the first breakpoint the first value applies.
                let idx = points.partition_point(|&(time, _)| time <= t);
                match idx {
                    0 => points.first().map_or(0.0, |p| p.1),
                    i => points[i - 1].1,
                }
            }
        };
        raw.max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct InstantiatedArchitecture {
    pub operands: Vec<Operand>,
    /// Declaration order is significant: it fixes the order within each
    /// place block.
    pub buffers: Vec<Buffer>,
    pub capabilities: Vec<Capability>,
    pub signals: Vec<ExogenousSignal>,
}

impl InstantiatedArchitecture {
    pub fn buffer(&self, id: &str) -> Option<&Buffer> {
        self.buffers.iter().find(|b| b.id == id)
    }

    pub fn capability(&self, id: &str) -> Option<&Capability> {
        self.capabilities.iter().find(|c| c.id == id)
    }

    pub fn water_transports(&self) -> impl Iterator<Item = &Capability> {
        self.capabilities.iter().filter(|c| c.class.is_water_transport())
    }
}

/// One broken rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    DuplicateId,
    OperandSet(String),
    NonPositiveArea,
    NegativeMinVolume,
    InitialBelowMinimum,
    NegativeNitrogen,
    NonFiniteValue(&'static str),
    DanglingReference(String),
    SelfLoop,
    MissingEndpoint,
    ClassMismatch(String),
    MissingResistance,
    NonPositiveResistance,
    UnpairedNitrogenTransport,
    PairNotWaterTransport(String),
    MixingPairMismatch(String),
    SharedWaterPartner(String),
    SignalTargetNotAccept(String),
    DuplicateSignal,
    InvalidSignal(&'static str),
    NoAcceptCapability,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::DuplicateId => write!(f, "duplicate id"),
            ViolationKind::OperandSet(msg) => write!(f, "operand set: {msg}"),
            ViolationKind::NonPositiveArea => write!(f, "surface area must be strictly positive"),
            ViolationKind::NegativeMinVolume => write!(f, "minimum volume must be nonnegative"),
            ViolationKind::InitialBelowMinimum => write!(f, "initial water volume is below the minimum volume"),
            ViolationKind::NegativeNitrogen => write!(f, "initial nitrogen mass is negative"),
            ViolationKind::NonFiniteValue(field) => write!(f, "non-finite {field}"),
            ViolationKind::DanglingReference(id) => write!(f, "dangling reference `{id}`"),
            ViolationKind::SelfLoop => write!(f, "self-loop: origin and destination are the same buffer"),
            ViolationKind::MissingEndpoint => write!(f, "transport lacks an origin or destination"),
            ViolationKind::ClassMismatch(msg) => write!(f, "class mismatch: {msg}"),
            ViolationKind::MissingResistance => write!(f, "water transport has no resistance"),
            ViolationKind::NonPositiveResistance => write!(f, "resistance must be strictly positive"),
            ViolationKind::UnpairedNitrogenTransport => {
                write!(f, "nitrogen transport does not name a paired water transport")
            }
            ViolationKind::PairNotWaterTransport(id) => write!(f, "paired capability `{id}` is not a water transport"),
            ViolationKind::MixingPairMismatch(id) => {
                write!(f, "mixing pair mismatch: `{id}` joins different buffers")
            }
            ViolationKind::SharedWaterPartner(id) => {
                write!(f, "water transport `{id}` is paired with more than one nitrogen transport")
            }
            ViolationKind::SignalTargetNotAccept(id) => write!(f, "signal target `{id}` is not an accept capability"),
            ViolationKind::DuplicateSignal => write!(f, "capability is driven by more than one signal"),
            ViolationKind::InvalidSignal(msg) => write!(f, "invalid signal: {msg}"),
            ViolationKind::NoAcceptCapability => write!(f, "architecture has no accept capability"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Offending id.
    pub subject: String,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, subject: &str, kind: ViolationKind) {
        self.violations.push(Violation { subject: subject.to_string(), kind });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "valid: no violations");
        }
        writeln!(f, "{} violation(s):", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

/// Check every architecture rule, in declaration order.
pub fn validate(arch: &InstantiatedArchitecture) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut seen = HashSet::new();
    let all_ids = arch
        .operands
        .iter()
        .map(|o| &o.id)
        .chain(arch.buffers.iter().map(|b| &b.id))
        .chain(arch.capabilities.iter().map(|c| &c.id));
    for id in all_ids {
        if !seen.insert(id.as_str()) {
            report.push(id, ViolationKind::DuplicateId);
        }
    }

    check_operands(arch, &mut report);

    for b in &arch.buffers {
        for (field, value) in [
            ("surface area", b.surface_area),
            ("elevation", b.elevation),
            ("minimum volume", b.min_volume),
            ("initial water volume", b.initial_water_volume),
            ("initial nitrogen mass", b.initial_nitrogen_mass),
        ] {
            if !value.is_finite() {
                report.push(&b.id, ViolationKind::NonFiniteValue(field));
            }
        }
        if b.surface_area.is_nan() || b.surface_area <= 0.0 {
            report.push(&b.id, ViolationKind::NonPositiveArea);
        }
        if b.min_volume < 0.0 {
            report.push(&b.id, ViolationKind::NegativeMinVolume);
        }
        if b.initial_water_volume < b.min_volume {
            report.push(&b.id, ViolationKind::InitialBelowMinimum);
        }
        if b.initial_nitrogen_mass < 0.0 {
            report.push(&b.id, ViolationKind::NegativeNitrogen);
        }
    }

    let buffers: HashMap<&str, &Buffer> = arch.buffers.iter().map(|b| (b.id.as_str(), b)).collect();
    let capabilities: HashMap<&str, &Capability> = arch.capabilities.iter().map(|c| (c.id.as_str(), c)).collect();
    let mut water_partners: HashMap<&str, usize> = HashMap::new();

    for c in &arch.capabilities {
        if c.class.is_transport() {
            check_transport(c, &buffers, &capabilities, &mut water_partners, &mut report);
        } else {
            match buffers.get(c.subject.as_str()) {
                None => report.push(&c.id, ViolationKind::DanglingReference(c.subject.clone())),
                Some(b) => {
                    let expected = if c.class.is_accept() {
                        c.class.operand().and_then(|op| CapabilityClass::accept(op, b.class))
                    } else {
                        Some(CapabilityClass::mix(b.class))
                    };
                    if expected != Some(c.class) {
                        report.push(
                            &c.id,
                            ViolationKind::ClassMismatch(format!("{} cannot act at {} `{}`", c.class, b.class, b.id)),
                        );
                    }
                }
            }
        }
    }

    for c in &arch.capabilities {
        if water_partners.get(c.id.as_str()).is_some_and(|&n| n > 1) {
            report.push(&c.id, ViolationKind::SharedWaterPartner(c.id.clone()));
        }
    }

    let mut signalled = HashSet::new();
    for s in &arch.signals {
        match capabilities.get(s.target.as_str()) {
            None => report.push(&s.target, ViolationKind::DanglingReference(s.target.clone())),
            Some(c) if !c.class.is_accept() => {
                report.push(&s.target, ViolationKind::SignalTargetNotAccept(s.target.clone()))
            }
            Some(_) => {}
        }
        if !signalled.insert(s.target.as_str()) {
            report.push(&s.target, ViolationKind::DuplicateSignal);
        }
        if let Some(msg) = signal_defect(&s.shape) {
            report.push(&s.target, ViolationKind::InvalidSignal(msg));
        }
    }

    if !arch.capabilities.iter().any(|c| c.class.is_accept()) {
        report.push("architecture", ViolationKind::NoAcceptCapability);
    }

    report
}

fn check_operands(arch: &InstantiatedArchitecture, report: &mut ValidationReport) {
    let volumes = arch.operands.iter().filter(|o| o.kind == QuantityKind::Volume).count();
    let masses = arch.operands.iter().filter(|o| o.kind == QuantityKind::Mass).count();
    if arch.operands.len() != 2 || volumes != 1 || masses != 1 {
        report.push(
            "operands",
            ViolationKind::OperandSet(format!(
                "expected one volume operand and one mass operand, found {volumes} volume and {masses} mass"
            )),
        );
    }
}

fn check_transport<'a>(
    c: &'a Capability,
    buffers: &HashMap<&str, &Buffer>,
    capabilities: &HashMap<&str, &'a Capability>,
    water_partners: &mut HashMap<&'a str, usize>,
    report: &mut ValidationReport,
) {
    let (Some(origin), Some(destination)) = (c.origin.as_deref(), c.destination.as_deref()) else {
        report.push(&c.id, ViolationKind::MissingEndpoint);
        return;
    };
    if origin == destination {
        report.push(&c.id, ViolationKind::SelfLoop);
    }
    let o = buffers.get(origin);
    let d = buffers.get(destination);
    for (id, found) in [(origin, o.is_some()), (destination, d.is_some())] {
        if !found {
            report.push(&c.id, ViolationKind::DanglingReference(id.to_string()));
        }
    }
    if let (Some(o), Some(d)) = (o, d) {
        let operand = c.class.operand().unwrap_or(OperandRole::Water);
        if CapabilityClass::transport(operand, o.class) != c.class {
            report.push(
                &c.id,
                ViolationKind::ClassMismatch(format!("{} cannot originate at {} `{}`", c.class, o.class, o.id)),
            );
        }
        let destination_ok = match o.class {
            BufferClass::Land => d.class == BufferClass::Lake,
            _ => d.class != BufferClass::Land,
        };
        if !destination_ok {
            report.push(
                &c.id,
                ViolationKind::ClassMismatch(format!(
                    "{} from {} `{}` cannot deliver to {} `{}`",
                    c.class, o.class, o.id, d.class, d.id
                )),
            );
        }
    }

    if c.class.is_water_transport() {
        match c.resistance {
            None => report.push(&c.id, ViolationKind::MissingResistance),
            Some(r) if !r.is_finite() => report.push(&c.id, ViolationKind::NonFiniteValue("resistance")),
            Some(r) if r <= 0.0 => report.push(&c.id, ViolationKind::NonPositiveResistance),
            Some(_) => {}
        }
        return;
    }

    let Some(partner_id) = c.paired_water.as_deref() else {
        report.push(&c.id, ViolationKind::UnpairedNitrogenTransport);
        return;
    };
    match capabilities.get(partner_id) {
        None => report.push(&c.id, ViolationKind::DanglingReference(partner_id.to_string())),
        Some(w) if !w.class.is_water_transport() => {
            report.push(&c.id, ViolationKind::PairNotWaterTransport(partner_id.to_string()))
        }
        Some(w) => {
            *water_partners.entry(w.id.as_str()).or_default() += 1;
            if w.origin.as_deref() != Some(origin) || w.destination.as_deref() != Some(destination) {
                report.push(&c.id, ViolationKind::MixingPairMismatch(partner_id.to_string()));
            }
        }
    }
}

fn signal_defect(shape: &SignalShape) -> Option<&'static str> {
    match shape {
        SignalShape::Constant(v) if !v.is_finite() => Some("non-finite constant"),
        SignalShape::Constant(_) => None,
        SignalShape::Sinusoid { mean, amplitude, period, phase } => {
            if ![mean, amplitude, period, phase].iter().all(|v| v.is_finite()) {
                Some("non-finite sinusoid parameter")
            } else if *period <= 0.0 {
                Some("sinusoid period must be positive")
            } else {
                None
            }
        }
        SignalShape::Table(points) => {
            if points.is_empty() {
                Some("empty table")
            } else if points.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
                Some("non-finite table entry")
            } else if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                Some("table times must be strictly increasing")
            } else {
                None
            }
        }
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn operands() -> Vec<Operand> {
        vec![
            Operand { id: "water".into(), name: "Water".into(), kind: QuantityKind::Volume },
            Operand { id: "nitrogen".into(), name: "Nitrogen".into(), kind: QuantityKind::Mass },
        ]
    }

    pub fn buffer(id: &str, class: BufferClass, area: f64, elevation: f64, v0: f64, m0: f64) -> Buffer {
        Buffer {
            id: id.into(),
            name: id.into(),
            class,
            surface_area: area,
            elevation,
            min_volume: 0.0,
            initial_water_volume: v0,
            initial_nitrogen_mass: m0,
        }
    }

    pub fn local(id: &str, class: CapabilityClass, at: &str) -> Capability {
        Capability {
            id: id.into(),
            class,
            subject: at.into(),
            origin: None,
            destination: None,
            resistance: None,
            paired_water: None,
        }
    }

    pub fn water(id: &str, class: CapabilityClass, from: &str, to: &str, r: f64) -> Capability {
        Capability {
            id: id.into(),
            class,
            subject: id.into(),
            origin: Some(from.into()),
            destination: Some(to.into()),
            resistance: Some(r),
            paired_water: None,
        }
    }

    pub fn nitrogen(id: &str, class: CapabilityClass, from: &str, to: &str, partner: &str) -> Capability {
        Capability {
            id: id.into(),
            class,
            subject: id.into(),
            origin: Some(from.into()),
            destination: Some(to.into()),
            resistance: None,
            paired_water: Some(partner.into()),
        }
    }

    /// One lake draining through a river into a point, rain on the lake.
    pub fn single_lake() -> InstantiatedArchitecture {
        InstantiatedArchitecture {
            operands: operands(),
            buffers: vec![
                buffer("lake1", BufferClass::Lake, 100.0, 3.0, 1000.0, 2.0),
                buffer("point1", BufferClass::Point, 50.0, 0.0, 100.0, 0.0),
            ],
            capabilities: vec![
                local("accept1", CapabilityClass::AcceptH2OLake, "lake1"),
                local("mix1", CapabilityClass::MixH2OLake, "lake1"),
                local("mix2", CapabilityClass::MixH2OPoint, "point1"),
                water("river1_h2o", CapabilityClass::TranspH2ORiver, "lake1", "point1", 1.0e6),
                nitrogen("river1_n", CapabilityClass::TranspNRiver, "lake1", "point1", "river1_h2o"),
            ],
            signals: vec![ExogenousSignal { target: "accept1".into(), shape: SignalShape::Constant(0.01) }],
        }
    }
}
