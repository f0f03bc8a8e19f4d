//! Matricized hetero-functional incidence tensors.
//!
//! Rows are places (operand at buffer) in six blocks, water before nitrogen
//! and lake, land, point within each operand. Columns are capabilities in
//! the ten class blocks of [`CapabilityClass::ALL`]. Within a block, rows and
//! columns keep declaration order.

use std::collections::HashMap;
use std::io::{self, Write};

use crate::architecture::{BufferClass, CapabilityClass, InstantiatedArchitecture, OperandRole};

/// One of the six place blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlaceBlock {
    H2OLake,
    H2OLand,
    H2OPoint,
    NLake,
    NLand,
    NPoint,
}

impl PlaceBlock {
    pub const ALL: [PlaceBlock; 6] = [
        PlaceBlock::H2OLake,
        PlaceBlock::H2OLand,
        PlaceBlock::H2OPoint,
        PlaceBlock::NLake,
        PlaceBlock::NLand,
        PlaceBlock::NPoint,
    ];

    pub fn new(operand: OperandRole, class: BufferClass) -> Self {
        let offset = match class {
            BufferClass::Lake => 0,
            BufferClass::Land => 1,
            BufferClass::Point => 2,
        };
        let base = match operand {
            OperandRole::Water => 0,
            OperandRole::Nitrogen => 3,
        };
        PlaceBlock::ALL[base + offset]
    }

    /// One-based block number, as used in the block-matrix layout.
    pub fn number(self) -> usize {
        self as usize + 1
    }

    pub fn from_number(n: usize) -> Option<Self> {
        n.checked_sub(1).and_then(|i| PlaceBlock::ALL.get(i).copied())
    }
}

/// Nonzero blocks of `M` (rows: place blocks 1..6, columns: capability
/// blocks 1..10). Every other block is identically zero for any
/// architecture.
pub const BLOCK_PATTERN: [[bool; 10]; 6] = {
    const O: bool = false;
    const X: bool = true;
    [
        [X, O, O, X, O, O, X, O, X, O],
        [O, X, O, O, X, O, X, O, O, O],
        [O, O, O, O, O, X, O, O, X, O],
        [O, O, O, X, O, O, O, X, O, X],
        [O, O, X, O, X, O, O, X, O, O],
        [O, O, O, O, O, X, O, O, O, X],
    ]
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Place {
    pub operand: OperandRole,
    pub buffer: String,
    pub class: BufferClass,
}

impl Place {
    pub fn block(&self) -> PlaceBlock {
        PlaceBlock::new(self.operand, self.class)
    }
}

/// Row ordering of the engineering system net.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaceIndex {
    places: Vec<Place>,
    lookup: HashMap<(OperandRole, String), usize>,
    /// `bounds[b]..bounds[b + 1]` is the row range of block `b`.
    bounds: [usize; 7],
}

impl PlaceIndex {
    pub fn places(&self) -> &[Place] {
        &self.places
    }

    pub fn len(&self) -> usize {
        self.places.len()
    }

    pub fn is_empty(&self) -> bool {
        self.places.is_empty()
    }

    pub fn get(&self, operand: OperandRole, buffer: &str) -> Option<usize> {
        self.lookup.get(&(operand, buffer.to_string())).copied()
    }

    pub fn block_range(&self, block: PlaceBlock) -> std::ops::Range<usize> {
        let b = block as usize;
        self.bounds[b]..self.bounds[b + 1]
    }

    /// Rows of the water places (the first three blocks).
    pub fn water_range(&self) -> std::ops::Range<usize> {
        0..self.bounds[3]
    }

    pub fn nitrogen_range(&self) -> std::ops::Range<usize> {
        self.bounds[3]..self.bounds[6]
    }

    /// Buffers in row order of the water block.
    pub fn buffers(&self) -> impl Iterator<Item = &Place> {
        self.places[self.water_range()].iter()
    }
}

/// Column ordering of the engineering system net.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapabilityIndex {
    ids: Vec<String>,
    classes: Vec<CapabilityClass>,
    lookup: HashMap<String, usize>,
    bounds: [usize; 11],
}

impl CapabilityIndex {
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn classes(&self) -> &[CapabilityClass] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    pub fn block_range(&self, class: CapabilityClass) -> std::ops::Range<usize> {
        let b = class.block();
        self.bounds[b]..self.bounds[b + 1]
    }
}

pub fn build_place_index(arch: &InstantiatedArchitecture) -> PlaceIndex {
    let mut places = Vec::with_capacity(2 * arch.buffers.len());
    let mut bounds = [0; 7];
    for (b, block) in PlaceBlock::ALL.into_iter().enumerate() {
        let operand = if b < 3 { OperandRole::Water } else { OperandRole::Nitrogen };
        places.extend(
            arch.buffers.iter().filter(|buf| PlaceBlock::new(operand, buf.class) == block).map(|buf| Place {
                operand,
                buffer: buf.id.clone(),
                class: buf.class,
            }),
        );
        bounds[b + 1] = places.len();
    }
    let lookup = places.iter().enumerate().map(|(i, p)| ((p.operand, p.buffer.clone()), i)).collect();
    PlaceIndex { places, lookup, bounds }
}

pub fn build_capability_index(arch: &InstantiatedArchitecture) -> CapabilityIndex {
    let mut ids = Vec::with_capacity(arch.capabilities.len());
    let mut classes = Vec::with_capacity(arch.capabilities.len());
    let mut bounds = [0; 11];
    for class in CapabilityClass::ALL {
        for cap in arch.capabilities.iter().filter(|c| c.class == class) {
            ids.push(cap.id.clone());
            classes.push(class);
        }
        bounds[class.block() + 1] = ids.len();
    }
    let lookup = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
    CapabilityIndex { ids, classes, lookup, bounds }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Triplet {
    pub row: usize,
    pub col: usize,
    pub value: i8,
}

/// Coordinate-format sparse matrix with entries sorted by (column, row).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Triplet>,
}

/// Dense conversion is refused above this many cells.
pub const DENSE_LIMIT: usize = 10_000;

impl SparseMatrix {
    /// Builds from unsorted triplets; duplicates are summed and zeros dropped.
    pub fn from_triplets(rows: usize, cols: usize, mut entries: Vec<Triplet>) -> Self {
        debug_assert!(entries.iter().all(|t| t.row < rows && t.col < cols));
        entries.sort_by_key(|t| (t.col, t.row));
        let mut merged: Vec<Triplet> = Vec::with_capacity(entries.len());
        for t in entries {
            match merged.last_mut() {
                Some(last) if last.row == t.row && last.col == t.col => last.value += t.value,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.value != 0);
        SparseMatrix { rows, cols, entries: merged }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn triplets(&self) -> &[Triplet] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.entries.binary_search_by_key(&(col, row), |t| (t.col, t.row)).map_or(0, |i| self.entries[i].value)
    }

    /// Entries of one column, sorted by row.
    pub fn column(&self, col: usize) -> &[Triplet] {
        let start = self.entries.partition_point(|t| t.col < col);
        let end = self.entries.partition_point(|t| t.col <= col);
        &self.entries[start..end]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// `out = self * x`, accumulated in storage order.
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        out.fill(0.0);
        for t in &self.entries {
            out[t.row] += f64::from(t.value) * x[t.col];
        }
    }

    pub fn sub(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.shape(), other.shape());
        let entries = self
            .entries
            .iter()
            .copied()
            .chain(other.entries.iter().map(|t| Triplet { value: -t.value, ..*t }))
            .collect();
        SparseMatrix::from_triplets(self.rows, self.cols, entries)
    }

    /// Submatrix of the given row and column ranges, re-indexed from zero.
    pub fn slice(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> SparseMatrix {
        let entries = self
            .entries
            .iter()
            .filter(|t| rows.contains(&t.row) && cols.contains(&t.col))
            .map(|t| Triplet { row: t.row - rows.start, col: t.col - cols.start, value: t.value })
            .collect();
        SparseMatrix { rows: rows.len(), cols: cols.len(), entries }
    }

    /// Row-major dense copy, or `None` above [`DENSE_LIMIT`] cells.
    pub fn to_dense(&self) -> Option<Vec<Vec<i8>>> {
        if self.rows * self.cols > DENSE_LIMIT {
            return None;
        }
        let mut dense = vec![vec![0; self.cols]; self.rows];
        for t in &self.entries {
            dense[t.row][t.col] = t.value;
        }
        Some(dense)
    }

    /// Debug dump as `row,col,val` lines with a header.
    pub fn write_triplets_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "row,col,val")?;
        for t in &self.entries {
            writeln!(w, "{},{},{}", t.row, t.col, t.value)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tensor {
    Plus,
    Minus,
    Net,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceTensors {
    pub places: PlaceIndex,
    pub capabilities: CapabilityIndex,
    pub plus: SparseMatrix,
    pub minus: SparseMatrix,
    /// `plus - minus`
    pub net: SparseMatrix,
}

impl IncidenceTensors {
    pub fn tensor(&self, which: Tensor) -> &SparseMatrix {
        match which {
            Tensor::Plus => &self.plus,
            Tensor::Minus => &self.minus,
            Tensor::Net => &self.net,
        }
    }

    /// The `(place block, capability block)` submatrix of one tensor.
    pub fn block_view(&self, which: Tensor, places: PlaceBlock, capabilities: CapabilityClass) -> SparseMatrix {
        self.tensor(which).slice(self.places.block_range(places), self.capabilities.block_range(capabilities))
    }
}

/// Builds `M⁺`, `M⁻` and `M` from an architecture and its indices.
///
/// Accept injects its operand at its buffer. Mix is a self-loop on both
/// operand places of its buffer, so it appears in `M⁺` and `M⁻` and cancels
/// in `M`. Transport pulls its operand from the origin and injects it at the
/// destination. Unresolvable references contribute nothing; run
/// [`validate`](crate::architecture::validate) first.
pub fn build_incidence(
    arch: &InstantiatedArchitecture,
    places: &PlaceIndex,
    capabilities: &CapabilityIndex,
) -> IncidenceTensors {
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    let entry = |row, col| Triplet { row, col, value: 1 };
    for cap in &arch.capabilities {
        let Some(col) = capabilities.get(&cap.id) else { continue };
        if cap.class.is_mix() {
            for operand in [OperandRole::Water, OperandRole::Nitrogen] {
                if let Some(row) = places.get(operand, &cap.subject) {
                    plus.push(entry(row, col));
                    minus.push(entry(row, col));
                }
            }
            continue;
        }
        let Some(operand) = cap.class.operand() else { continue };
        if cap.class.is_accept() {
            if let Some(row) = places.get(operand, &cap.subject) {
                plus.push(entry(row, col));
            }
            continue;
        }
        if let Some(row) = cap.origin.as_deref().and_then(|b| places.get(operand, b)) {
            minus.push(entry(row, col));
        }
        if let Some(row) = cap.destination.as_deref().and_then(|b| places.get(operand, b)) {
            plus.push(entry(row, col));
        }
    }
    let (rows, cols) = (places.len(), capabilities.len());
    let plus = SparseMatrix::from_triplets(rows, cols, plus);
    let minus = SparseMatrix::from_triplets(rows, cols, minus);
    let net = plus.sub(&minus);
    IncidenceTensors { places: places.clone(), capabilities: capabilities.clone(), plus, minus, net }
}

/// Indices and tensors in one call.
pub fn build(arch: &InstantiatedArchitecture) -> IncidenceTensors {
    let places = build_place_index(arch);
    let capabilities = build_capability_index(arch);
    build_incidence(arch, &places, &capabilities)
}
