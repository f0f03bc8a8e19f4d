//! XML scenario format.
//!
//! ```xml
//! <scenario name="example1" description="...">
//!   <config dt="3600" horizon="1440" rho="1000" g="9.81" stride="1"/>
//!   <operands>
//!     <operand id="water" name="Water" kind="volume"/>
//!     <operand id="nitrogen" name="Nitrogen" kind="mass"/>
//!   </operands>
//!   <buffers>
//!     <lake id="lake1" area="2e4" elev="2" vmin="6e4" v0="7e4" m0="350"/>
//!     <point id="point1" area="1e6" elev="0" v0="5e4" m0="50"/>
//!   </buffers>
//!   <capabilities>
//!     <accept id="rain1" at="lake1" operand="water"/>
//!     <mix id="mix1" at="lake1"/>
//!     <transport id="r1w" via="river1" operand="water" from="lake1" to="point1" resistance="2.9e5"/>
//!     <transport id="r1n" via="river1" operand="nitrogen" from="lake1" to="point1" pairedWith="r1w"/>
//!   </capabilities>
//!   <signals>
//!     <constant target="rain1" value="0.08"/>
//!     <sinusoid target="..." mean="..." amplitude="..." period="..." phase="0"/>
//!     <table target="..."><entry t="0" v="1"/><entry t="86400" v="2"/></table>
//!   </signals>
//! </scenario>
//! ```
//!
//! All quantities are SI. `rho`, `g`, `stride`, `vmin`, `phase` and `name`
//! attributes are optional.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use roxmltree::{Document, Node};
use thiserror::Error;

use crate::architecture::{
    Buffer, BufferClass, Capability, CapabilityClass, ExogenousSignal, InstantiatedArchitecture, Operand, OperandRole,
    QuantityKind, SignalShape,
};
use crate::devices::PhysicalConstants;
use crate::simulator::SimulationConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDocument {
    pub name: String,
    pub description: String,
    pub architecture: InstantiatedArchitecture,
    pub config: SimulationConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IngestError {
    #[error("{line}:{column}: malformed XML: {message}")]
    MalformedXml { line: u32, column: u32, message: String },
    #[error("{line}:{column}: schema violation: {message}")]
    SchemaViolation { line: u32, column: u32, message: String },
    #[error("{line}:{column}: dangling reference `{id}`")]
    DanglingReference { line: u32, column: u32, id: String },
    #[error("{line}:{column}: {message}")]
    DomainViolation { line: u32, column: u32, message: String },
}

impl IngestError {
    pub fn position(&self) -> (u32, u32) {
        match self {
            IngestError::MalformedXml { line, column, .. }
            | IngestError::SchemaViolation { line, column, .. }
            | IngestError::DanglingReference { line, column, .. }
            | IngestError::DomainViolation { line, column, .. } => (*line, *column),
        }
    }
}

type Result<T> = std::result::Result<T, IngestError>;

struct Parser<'a, 'input> {
    doc: &'a Document<'input>,
}

impl<'a, 'input> Parser<'a, 'input> {
    fn pos(&self, node: Node) -> (u32, u32) {
        let p = self.doc.text_pos_at(node.range().start);
        (p.row, p.col)
    }

    fn schema(&self, node: Node, message: String) -> IngestError {
        let (line, column) = self.pos(node);
        IngestError::SchemaViolation { line, column, message }
    }

    fn domain(&self, node: Node, message: String) -> IngestError {
        let (line, column) = self.pos(node);
        IngestError::DomainViolation { line, column, message }
    }

    fn dangling(&self, node: Node, id: &str) -> IngestError {
        let (line, column) = self.pos(node);
        IngestError::DanglingReference { line, column, id: id.to_string() }
    }

    /// Rejects attributes outside `allowed`.
    fn check_attributes(&self, node: Node, allowed: &[&str]) -> Result<()> {
        for attr in node.attributes() {
            if attr.namespace().is_some() || !allowed.contains(&attr.name()) {
                return Err(
                    self.schema(node, format!("unknown attribute `{}` on <{}>", attr.name(), node.tag_name().name()))
                );
            }
        }
        Ok(())
    }

    fn elements<'b>(&self, node: Node<'b, 'input>) -> Result<Vec<Node<'b, 'input>>> {
        let mut out = Vec::new();
        for child in node.children() {
            if child.is_element() {
                out.push(child);
            } else if child.is_text() && !child.text().unwrap_or("").trim().is_empty() {
                return Err(self.schema(child, format!("unexpected text inside <{}>", node.tag_name().name())));
            }
        }
        Ok(out)
    }

    fn label(node: Node) -> String {
        match node.attribute("id") {
            Some(id) => format!("<{}> `{id}`", node.tag_name().name()),
            None => format!("<{}>", node.tag_name().name()),
        }
    }

    fn required<'b>(&self, node: Node<'b, 'input>, name: &str) -> Result<&'b str> {
        node.attribute(name)
            .ok_or_else(|| self.schema(node, format!("missing attribute `{name}` on {}", Self::label(node))))
    }

    fn id(&self, node: Node<'_, 'input>) -> Result<String> {
        let id = self.required(node, "id")?;
        if id.trim().is_empty() {
            return Err(self.schema(node, format!("empty id on <{}>", node.tag_name().name())));
        }
        Ok(id.to_string())
    }

    fn number(&self, node: Node, name: &str, raw: &str) -> Result<f64> {
        let value: f64 = raw.trim().parse().map_err(|_| {
            self.domain(node, format!("attribute `{name}` on {} is not a number: `{raw}`", Self::label(node)))
        })?;
        if !value.is_finite() {
            return Err(self.domain(node, format!("attribute `{name}` on {} is not finite", Self::label(node))));
        }
        Ok(value)
    }

    fn req_f64(&self, node: Node, name: &str) -> Result<f64> {
        let raw = self.required(node, name)?;
        self.number(node, name, raw)
    }

    fn opt_f64(&self, node: Node, name: &str, default: f64) -> Result<f64> {
        match node.attribute(name) {
            Some(raw) => self.number(node, name, raw),
            None => Ok(default),
        }
    }

    fn positive(&self, node: Node, name: &str, value: f64) -> Result<f64> {
        if value > 0.0 {
            Ok(value)
        } else {
            Err(self.domain(node, format!("attribute `{name}` on {} must be positive, got {value}", Self::label(node))))
        }
    }

    fn count(&self, node: Node, name: &str, default: Option<usize>) -> Result<usize> {
        let raw = match (node.attribute(name), default) {
            (Some(raw), _) => raw,
            (None, Some(d)) => return Ok(d),
            (None, None) => self.required(node, name)?,
        };
        match raw.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(self.domain(node, format!("attribute `{name}` must be a positive integer, got `{raw}`"))),
        }
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioDocument> {
    let doc = Document::parse(text).map_err(|e| {
        let p = e.pos();
        IngestError::MalformedXml { line: p.row, column: p.col, message: e.to_string() }
    })?;
    let p = Parser { doc: &doc };
    let root = doc.root_element();
    if root.tag_name().name() != "scenario" || root.tag_name().namespace().is_some() {
        return Err(p.schema(root, format!("root element must be <scenario>, found <{}>", root.tag_name().name())));
    }
    p.check_attributes(root, &["name", "description"])?;

    let mut sections: HashMap<&str, Node> = HashMap::new();
    for child in p.elements(root)? {
        let tag = child.tag_name().name();
        if !["config", "operands", "buffers", "capabilities", "signals"].contains(&tag) {
            return Err(p.schema(child, format!("unknown element <{tag}> in <scenario>")));
        }
        if sections.insert(tag, child).is_some() {
            return Err(p.schema(child, format!("duplicate <{tag}> section")));
        }
    }
    let section =
        |tag: &str| sections.get(tag).copied().ok_or_else(|| p.schema(root, format!("missing <{tag}> section")));

    let config = parse_config(&p, section("config")?)?;
    let (operands, roles) = parse_operands(&p, section("operands")?)?;
    let buffers = parse_buffers(&p, section("buffers")?)?;
    let capabilities = parse_capabilities(&p, section("capabilities")?, &roles, &buffers)?;
    let signals = match sections.get("signals") {
        Some(&node) => parse_signals(&p, node, &capabilities)?,
        None => Vec::new(),
    };

    Ok(ScenarioDocument {
        name: root.attribute("name").unwrap_or_default().to_string(),
        description: root.attribute("description").unwrap_or_default().to_string(),
        architecture: InstantiatedArchitecture { operands, buffers, capabilities, signals },
        config,
    })
}

fn parse_config(p: &Parser, node: Node) -> Result<SimulationConfig> {
    p.check_attributes(node, &["dt", "horizon", "rho", "g", "stride"])?;
    if let Some(child) = p.elements(node)?.first() {
        return Err(p.schema(*child, "<config> takes no children".to_string()));
    }
    let defaults = PhysicalConstants::default();
    let dt = p.positive(node, "dt", p.req_f64(node, "dt")?)?;
    let horizon_steps = p.count(node, "horizon", None)?;
    let rho = p.positive(node, "rho", p.opt_f64(node, "rho", defaults.rho)?)?;
    let g = p.positive(node, "g", p.opt_f64(node, "g", defaults.g)?)?;
    let stride = p.count(node, "stride", Some(1))?;
    let config = SimulationConfig { dt, horizon_steps, constants: PhysicalConstants { rho, g }, stride };
    config.check().map_err(|e| p.domain(node, e.to_string()))?;
    Ok(config)
}

fn parse_operands(p: &Parser, node: Node) -> Result<(Vec<Operand>, HashMap<String, OperandRole>)> {
    p.check_attributes(node, &[])?;
    let mut operands = Vec::new();
    let mut roles = HashMap::new();
    for child in p.elements(node)? {
        if child.tag_name().name() != "operand" {
            return Err(p.schema(child, format!("unknown element <{}> in <operands>", child.tag_name().name())));
        }
        p.check_attributes(child, &["id", "name", "kind"])?;
        let id = p.id(child)?;
        let kind = match p.required(child, "kind")? {
            "volume" => QuantityKind::Volume,
            "mass" => QuantityKind::Mass,
            other => return Err(p.schema(child, format!("operand kind must be `volume` or `mass`, got `{other}`"))),
        };
        if roles.insert(id.clone(), OperandRole::of_kind(kind)).is_some() {
            return Err(p.domain(child, format!("duplicate operand id `{id}`")));
        }
        let name = child.attribute("name").unwrap_or(&id).to_string();
        operands.push(Operand { id, name, kind });
    }
    Ok((operands, roles))
}

fn parse_buffers(p: &Parser, node: Node) -> Result<Vec<Buffer>> {
    p.check_attributes(node, &[])?;
    let mut buffers: Vec<Buffer> = Vec::new();
    for child in p.elements(node)? {
        let class = match child.tag_name().name() {
            "lake" => BufferClass::Lake,
            "land" => BufferClass::Land,
            "point" => BufferClass::Point,
            other => return Err(p.schema(child, format!("unknown element <{other}> in <buffers>"))),
        };
        p.check_attributes(child, &["id", "name", "area", "elev", "vmin", "v0", "m0"])?;
        let id = p.id(child)?;
        let surface_area = p.positive(child, "area", p.req_f64(child, "area")?)?;
        let elevation = p.req_f64(child, "elev")?;
        let min_volume = p.opt_f64(child, "vmin", 0.0)?;
        let initial_water_volume = p.req_f64(child, "v0")?;
        let initial_nitrogen_mass = p.req_f64(child, "m0")?;
        if min_volume < 0.0 {
            return Err(p.domain(child, format!("vmin of `{id}` must be nonnegative")));
        }
        if initial_water_volume < min_volume {
            return Err(p.domain(child, format!("v0 of `{id}` is below vmin")));
        }
        if initial_nitrogen_mass < 0.0 {
            return Err(p.domain(child, format!("m0 of `{id}` must be nonnegative")));
        }
        if buffers.iter().any(|b| b.id == id) {
            return Err(p.domain(child, format!("duplicate buffer id `{id}`")));
        }
        let name = child.attribute("name").unwrap_or(&id).to_string();
        buffers.push(Buffer {
            id,
            name,
            class,
            surface_area,
            elevation,
            min_volume,
            initial_water_volume,
            initial_nitrogen_mass,
        });
    }
    Ok(buffers)
}

fn parse_capabilities(
    p: &Parser,
    node: Node,
    roles: &HashMap<String, OperandRole>,
    buffers: &[Buffer],
) -> Result<Vec<Capability>> {
    p.check_attributes(node, &[])?;
    let buffer_class =
        |n: Node, id: &str| buffers.iter().find(|b| b.id == id).map(|b| b.class).ok_or_else(|| p.dangling(n, id));
    let operand = |n: Node| -> Result<OperandRole> {
        let id = p.required(n, "operand")?;
        roles.get(id).copied().ok_or_else(|| p.dangling(n, id))
    };

    let mut capabilities: Vec<Capability> = Vec::new();
    let mut pair_nodes = Vec::new();
    for child in p.elements(node)? {
        let tag = child.tag_name().name();
        let cap = match tag {
            "accept" => {
                p.check_attributes(child, &["id", "at", "operand"])?;
                let id = p.id(child)?;
                let at = p.required(child, "at")?;
                let at_class = buffer_class(child, at)?;
                let role = operand(child)?;
                let class = CapabilityClass::accept(role, at_class).ok_or_else(|| {
                    p.domain(child, format!("accept `{id}`: {role:?} cannot be accepted at {at_class} `{at}`"))
                })?;
                Capability {
                    id,
                    class,
                    subject: at.to_string(),
                    origin: None,
                    destination: None,
                    resistance: None,
                    paired_water: None,
                }
            }
            "mix" => {
                p.check_attributes(child, &["id", "at"])?;
                let id = p.id(child)?;
                let at = p.required(child, "at")?;
                let class = CapabilityClass::mix(buffer_class(child, at)?);
                Capability {
                    id,
                    class,
                    subject: at.to_string(),
                    origin: None,
                    destination: None,
                    resistance: None,
                    paired_water: None,
                }
            }
            "transport" => {
                p.check_attributes(child, &["id", "via", "operand", "from", "to", "resistance", "pairedWith"])?;
                let id = p.id(child)?;
                let via = p.required(child, "via")?;
                let role = operand(child)?;
                let from = p.required(child, "from")?;
                let to = p.required(child, "to")?;
                let origin_class = buffer_class(child, from)?;
                buffer_class(child, to)?;
                let resistance = match role {
                    OperandRole::Water => {
                        if child.has_attribute("pairedWith") {
                            return Err(p.schema(child, format!("water transport `{id}` cannot take `pairedWith`")));
                        }
                        let r = p.req_f64(child, "resistance")?;
                        if r <= 0.0 {
                            return Err(p.domain(child, format!("resistance of `{id}` must be positive, got {r}")));
                        }
                        Some(r)
                    }
                    OperandRole::Nitrogen => {
                        if child.has_attribute("resistance") {
                            return Err(p.schema(child, format!("nitrogen transport `{id}` cannot take `resistance`")));
                        }
                        pair_nodes.push((capabilities.len(), child));
                        None
                    }
                };
                Capability {
                    id,
                    class: CapabilityClass::transport(role, origin_class),
                    subject: via.to_string(),
                    origin: Some(from.to_string()),
                    destination: Some(to.to_string()),
                    resistance,
                    paired_water: child.attribute("pairedWith").map(str::to_string),
                }
            }
            other => return Err(p.schema(child, format!("unknown element <{other}> in <capabilities>"))),
        };
        if capabilities.iter().any(|c| c.id == cap.id) {
            return Err(p.domain(child, format!("duplicate capability id `{}`", cap.id)));
        }
        capabilities.push(cap);
    }

    let ids: HashSet<&str> = capabilities.iter().map(|c| c.id.as_str()).collect();
    for (i, n) in pair_nodes {
        match capabilities[i].paired_water.as_deref() {
            None => {
                return Err(p.schema(
                    n,
                    format!("missing attribute `pairedWith` on nitrogen transport `{}`", capabilities[i].id),
                ))
            }
            Some(partner) if !ids.contains(partner) => return Err(p.dangling(n, partner)),
            Some(_) => {}
        }
    }
    Ok(capabilities)
}

fn parse_signals(p: &Parser, node: Node, capabilities: &[Capability]) -> Result<Vec<ExogenousSignal>> {
    p.check_attributes(node, &[])?;
    let mut signals = Vec::new();
    for child in p.elements(node)? {
        let tag = child.tag_name().name();
        let shape = match tag {
            "constant" => {
                p.check_attributes(child, &["target", "value"])?;
                SignalShape::Constant(p.req_f64(child, "value")?)
            }
            "sinusoid" => {
                p.check_attributes(child, &["target", "mean", "amplitude", "period", "phase"])?;
                SignalShape::Sinusoid {
                    mean: p.req_f64(child, "mean")?,
                    amplitude: p.req_f64(child, "amplitude")?,
                    period: p.positive(child, "period", p.req_f64(child, "period")?)?,
                    phase: p.opt_f64(child, "phase", 0.0)?,
                }
            }
            "table" => {
                p.check_attributes(child, &["target"])?;
                let mut points: Vec<(f64, f64)> = Vec::new();
                for entry in p.elements(child)? {
                    if entry.tag_name().name() != "entry" {
                        return Err(
                            p.schema(entry, format!("unknown element <{}> in <table>", entry.tag_name().name()))
                        );
                    }
                    p.check_attributes(entry, &["t", "v"])?;
                    let t = p.req_f64(entry, "t")?;
                    let v = p.req_f64(entry, "v")?;
                    if points.last().is_some_and(|&(prev, _)| t <= prev) {
                        return Err(p.domain(entry, format!("table times must be strictly increasing at t={t}")));
                    }
                    points.push((t, v));
                }
                if points.is_empty() {
                    return Err(p.schema(child, "<table> needs at least one <entry>".to_string()));
                }
                SignalShape::Table(points)
            }
            other => return Err(p.schema(child, format!("unknown element <{other}> in <signals>"))),
        };
        let target = p.required(child, "target")?;
        if !capabilities.iter().any(|c| c.id == target) {
            return Err(p.dangling(child, target));
        }
        signals.push(ExogenousSignal { target: target.to_string(), shape });
    }
    Ok(signals)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            c => out.push(c),
        }
    }
    out
}

/// Serializes a document; numbers use the shortest exact decimal form.
pub fn emit_scenario(doc: &ScenarioDocument) -> String {
    let arch = &doc.architecture;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(s, r#"<scenario name="{}" description="{}">"#, escape(&doc.name), escape(&doc.description));
    let c = &doc.config;
    let _ = writeln!(
        s,
        r#"  <config dt="{}" horizon="{}" rho="{}" g="{}" stride="{}"/>"#,
        c.dt, c.horizon_steps, c.constants.rho, c.constants.g, c.stride
    );

    s.push_str("  <operands>\n");
    for o in &arch.operands {
        let _ = writeln!(
            s,
            r#"    <operand id="{}" name="{}" kind="{}"/>"#,
            escape(&o.id),
            escape(&o.name),
            o.kind.as_str()
        );
    }
    s.push_str("  </operands>\n  <buffers>\n");
    for b in &arch.buffers {
        let _ = writeln!(
            s,
            r#"    <{} id="{}" name="{}" area="{}" elev="{}" vmin="{}" v0="{}" m0="{}"/>"#,
            b.class.as_str(),
            escape(&b.id),
            escape(&b.name),
            b.surface_area,
            b.elevation,
            b.min_volume,
            b.initial_water_volume,
            b.initial_nitrogen_mass
        );
    }
    s.push_str("  </buffers>\n  <capabilities>\n");
    let operand_id = |role: OperandRole| {
        arch.operands.iter().find(|o| o.kind == role.kind()).map(|o| escape(&o.id)).unwrap_or_default()
    };
    for cap in &arch.capabilities {
        let id = escape(&cap.id);
        if cap.class.is_accept() {
            let role = cap.class.operand().unwrap_or(OperandRole::Water);
            let _ =
                writeln!(s, r#"    <accept id="{id}" at="{}" operand="{}"/>"#, escape(&cap.subject), operand_id(role));
        } else if cap.class.is_mix() {
            let _ = writeln!(s, r#"    <mix id="{id}" at="{}"/>"#, escape(&cap.subject));
        } else {
            let role = cap.class.operand().unwrap_or(OperandRole::Water);
            let _ = write!(
                s,
                r#"    <transport id="{id}" via="{}" operand="{}" from="{}" to="{}""#,
                escape(&cap.subject),
                operand_id(role),
                escape(cap.origin.as_deref().unwrap_or_default()),
                escape(cap.destination.as_deref().unwrap_or_default()),
            );
            if let Some(r) = cap.resistance {
                let _ = write!(s, r#" resistance="{r}""#);
            }
            if let Some(partner) = &cap.paired_water {
                let _ = write!(s, r#" pairedWith="{}""#, escape(partner));
            }
            s.push_str("/>\n");
        }
    }
    s.push_str("  </capabilities>\n  <signals>\n");
    for sig in &arch.signals {
        let target = escape(&sig.target);
        match &sig.shape {
            SignalShape::Constant(v) => {
                let _ = writeln!(s, r#"    <constant target="{target}" value="{v}"/>"#);
            }
            SignalShape::Sinusoid { mean, amplitude, period, phase } => {
                let _ = writeln!(
                    s,
                    r#"    <sinusoid target="{target}" mean="{mean}" amplitude="{amplitude}" period="{period}" phase="{phase}"/>"#
                );
            }
            SignalShape::Table(points) => {
                let _ = writeln!(s, r#"    <table target="{target}">"#);
                for (t, v) in points {
                    let _ = writeln!(s, r#"      <entry t="{t}" v="{v}"/>"#);
                }
                s.push_str("    </table>\n");
            }
        }
    }
    s.push_str("  </signals>\n</scenario>\n");
    s
}
