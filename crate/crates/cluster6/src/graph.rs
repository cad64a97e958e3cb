//! Graphs, graph-state generators, and stabilizer groups.
//!
//! A graph on n vertices defines n commuting generators (X on the vertex, Z
//! on its neighbours); the 2^n subset products form the stabilizer group.
//! The two graphs of interest here are built in: `He6`, a perfect matching of
//! three qubit pairs, and `Lc6`, the six-qubit linear cluster obtained from
//! it by adding the {1,2} and {5,6} links (a path in vertex order 4-1-2-5-6-3).
//! The local frame that maps the lab state onto these stabilizers is
//! [`tilde_frame`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::pauli::{FrameMap, Pauli, PauliString, Sign, SingleQubitFrame};

/// Cap on the number of generators a stabilizer group may be built from.
pub const MAX_GENERATORS: usize = 16;

/// Qubits carried by the first photon; the second photon carries the rest.
pub const PHOTON_A_QUBITS: [usize; 3] = [1, 2, 3];

/// An undirected simple graph on vertices 1..=n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphSpec {
    n: usize,
    edges: Vec<(usize, usize)>, // normalized u < v, sorted, deduplicated
}

impl GraphSpec {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
        }
        let mut normalized = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop on vertex {a}")));
            }
            if a == 0 || a > n || b == 0 || b > n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) outside vertex range 1..={n}"
                )));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        let before = normalized.len();
        normalized.dedup();
        if normalized.len() != before {
            return Err(Error::InvalidGraph("duplicate edge".into()));
        }
        Ok(GraphSpec { n, edges: normalized })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors(v).len()
    }

    /// Edge-list text form: header "n=<count>", then one "u v" line per edge.
    pub fn to_edge_list_text(&self) -> String {
        let mut out = format!("n={}\n", self.n);
        for (a, b) in &self.edges {
            out.push_str(&format!("{a} {b}\n"));
        }
        out
    }

    pub fn from_edge_list_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Parse("empty edge list".into()))?;
        let n: usize = header
            .trim()
            .strip_prefix("n=")
            .ok_or_else(|| Error::Parse(format!("line 1: expected header \"n=<count>\", got {header:?}")))?
            .parse()
            .map_err(|_| Error::Parse(format!("line 1: bad vertex count in {header:?}")))?;
        let mut edges = Vec::new();
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse_vertex = |tok: Option<&str>| -> Result<usize> {
                tok.and_then(|t| t.parse().ok()).ok_or_else(|| {
                    Error::Parse(format!("line {}: expected \"u v\", got {line:?}", idx + 1))
                })
            };
            let a = parse_vertex(parts.next())?;
            let b = parse_vertex(parts.next())?;
            if parts.next().is_some() {
                return Err(Error::Parse(format!(
                    "line {}: trailing tokens in {line:?}",
                    idx + 1
                )));
            }
            edges.push((a, b));
        }
        GraphSpec::new(n, edges)
    }
}

/// The built-in graphs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NamedGraph {
    He6,
    Lc6,
}

impl FromStr for NamedGraph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "he6" => Ok(NamedGraph::He6),
            "lc6" => Ok(NamedGraph::Lc6),
            _ => Err(Error::Parse(format!("unknown graph name {s:?} (expected he6 or lc6)"))),
        }
    }
}

/// Graph for a built-in name. He6 is the perfect matching {1,4},{2,5},{3,6};
/// Lc6 adds the {1,2} and {5,6} links.
pub fn builtin_graph(name: NamedGraph) -> GraphSpec {
    let matching = vec![(1, 4), (2, 5), (3, 6)];
    match name {
        NamedGraph::He6 => GraphSpec::new(6, matching).expect("static graph"),
        NamedGraph::Lc6 => {
            let mut edges = matching;
            edges.push((1, 2));
            edges.push((5, 6));
            GraphSpec::new(6, edges).expect("static graph")
        }
    }
}

/// Generator g_i = X at vertex i, Z on each neighbour, phase +1.
pub fn generators(graph: &GraphSpec) -> Vec<PauliString> {
    (1..=graph.n())
        .map(|i| {
            let mut letters = vec![(i, Pauli::X)];
            for j in graph.neighbors(i) {
                letters.push((j, Pauli::Z));
            }
            PauliString::from_letters(graph.n(), &letters).expect("valid graph indices")
        })
        .collect()
}

/// The local frame taking the canonical generators to the lab ones:
/// X2 <-> Z2, X3 -> -Z3 with Z3 -> X3, X4 <-> Z4, and X5 -> -X5.
pub fn tilde_frame() -> FrameMap {
    let swap = SingleQubitFrame::new((Sign::Plus, Pauli::Z), (Sign::Plus, Pauli::X))
        .expect("distinct letters");
    let mut frames = FrameMap::new();
    frames.insert(2, swap);
    frames.insert(
        3,
        SingleQubitFrame::new((Sign::Minus, Pauli::Z), (Sign::Plus, Pauli::X))
            .expect("distinct letters"),
    );
    frames.insert(4, swap);
    frames.insert(
        5,
        SingleQubitFrame::new((Sign::Minus, Pauli::X), (Sign::Plus, Pauli::Z))
            .expect("distinct letters"),
    );
    frames
}

/// A subset of generator indices, the key type of a stabilizer group.
///
/// Renders as "I" for the empty subset or as a join like "g1*g2*g6".
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Subset(u64);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn from_indices(indices: &[usize]) -> Result<Self> {
        let mut mask = 0u64;
        for &i in indices {
            if i == 0 || i > MAX_GENERATORS {
                return Err(Error::Parse(format!(
                    "generator index {i} outside 1..={MAX_GENERATORS}"
                )));
            }
            let bit = 1u64 << (i - 1);
            if mask & bit != 0 {
                return Err(Error::Parse(format!("duplicate generator index {i}")));
            }
            mask |= bit;
        }
        Ok(Subset(mask))
    }

    pub(crate) fn from_mask(mask: u64) -> Self {
        Subset(mask)
    }

    pub fn indices(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut bits = self.0;
        while bits != 0 {
            out.push(bits.trailing_zeros() as usize + 1);
            bits &= bits - 1;
        }
        out
    }

    pub fn contains(&self, index: usize) -> bool {
        index >= 1 && index <= 64 && self.0 & (1u64 << (index - 1)) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    /// Symmetric difference, the group operation on subset labels.
    pub fn symmetric_difference(&self, other: &Subset) -> Subset {
        Subset(self.0 ^ other.0)
    }

    /// Canonical textual key: "I" or "g1*g2*g6".
    pub fn key(&self) -> String {
        if self.is_empty() {
            return "I".into();
        }
        self.indices()
            .iter()
            .map(|i| format!("g{i}"))
            .collect::<Vec<_>>()
            .join("*")
    }

    /// Parse a canonical key. Indices must be strictly ascending.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "I" {
            return Ok(Subset::EMPTY);
        }
        let mut indices = Vec::new();
        for part in s.split('*') {
            let idx: usize = part
                .strip_prefix('g')
                .and_then(|d| d.parse().ok())
                .ok_or_else(|| Error::Parse(format!("invalid subset key {s:?}")))?;
            if let Some(&last) = indices.last() {
                if idx <= last {
                    return Err(Error::Parse(format!(
                        "subset key {s:?} is not in canonical ascending order"
                    )));
                }
            }
            indices.push(idx);
        }
        Subset::from_indices(&indices)
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.key())
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subset({})", self.key())
    }
}

// Ordered by weight first, then lexicographically on the index lists, which
// reproduces the usual tabulation order: I, g1..g6, g1*g2, g1*g3, ... g2*g3, ...
impl Ord for Subset {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| other.0.reverse_bits().cmp(&self.0.reverse_bits()))
    }
}

impl PartialOrd for Subset {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// The full stabilizer group of a generator list: all 2^m signed subset
/// products, with any local frame already folded into the stored strings.
#[derive(Clone, Debug)]
pub struct StabilizerSet {
    n: usize,
    generators: Vec<PauliString>,
    elements: BTreeMap<Subset, PauliString>,
}

impl StabilizerSet {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    /// The (frame-transformed) generator for 1-based index `i`.
    pub fn generator(&self, i: usize) -> Option<&PauliString> {
        self.generators.get(i.checked_sub(1)?)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, subset: &Subset) -> Option<&PauliString> {
        self.elements.get(subset)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Subset, &PauliString)> {
        self.elements.iter()
    }

    pub fn subsets(&self) -> impl Iterator<Item = &Subset> {
        self.elements.keys()
    }
}

/// All 2^m subset products of the generators, computed with exact phases.
///
/// If a frame is given it is applied to each generator first. The generators
/// must mutually commute and be independent.
pub fn stabilizer_group(gens: &[PauliString], frame: Option<&FrameMap>) -> Result<StabilizerSet> {
    if gens.len() > MAX_GENERATORS {
        return Err(Error::CapExceeded {
            requested: gens.len(),
            cap: MAX_GENERATORS,
        });
    }
    let n = gens.first().map_or(1, |g| g.n());
    let gens: Vec<PauliString> = match frame {
        Some(frame) => gens
            .iter()
            .map(|g| g.apply_frame(frame))
            .collect::<Result<_>>()?,
        None => gens.to_vec(),
    };
    for (i, a) in gens.iter().enumerate() {
        for (j, b) in gens.iter().enumerate().skip(i + 1) {
            if !a.commutes(b)? {
                return Err(Error::NonCommutingGenerators(i + 1, j + 1));
            }
        }
    }
    check_independent(&gens)?;

    let count = 1usize << gens.len();
    let mut by_mask: Vec<PauliString> = Vec::with_capacity(count);
    by_mask.push(PauliString::identity(n)?);
    for mask in 1..count as u64 {
        let low = mask.trailing_zeros() as usize;
        let rest = by_mask[(mask & (mask - 1)) as usize];
        by_mask.push(rest.multiply(&gens[low])?);
    }

    let mut elements = BTreeMap::new();
    for (mask, element) in by_mask.into_iter().enumerate() {
        debug_assert!(element.is_hermitian());
        elements.insert(Subset::from_mask(mask as u64), element);
    }
    Ok(StabilizerSet {
        n,
        generators: gens,
        elements,
    })
}

// GF(2) rank of the symplectic rows must equal the generator count.
fn check_independent(gens: &[PauliString]) -> Result<()> {
    let mut rows: Vec<(u64, u64, u64)> = gens
        .iter()
        .enumerate()
        .map(|(i, g)| (g.x_bits(), g.z_bits(), 1u64 << i))
        .collect();
    let mut rank = 0;
    for bit_block in 0..2 {
        for bit in 0..64u32 {
            let select = |row: &(u64, u64, u64)| {
                if bit_block == 0 {
                    row.0 >> bit & 1
                } else {
                    row.1 >> bit & 1
                }
            };
            let Some(pivot) = (rank..rows.len()).find(|&r| select(&rows[r]) == 1) else {
                continue;
            };
            rows.swap(rank, pivot);
            let lead = rows[rank];
            for r in 0..rows.len() {
                if r != rank && select(&rows[r]) == 1 {
                    rows[r].0 ^= lead.0;
                    rows[r].1 ^= lead.1;
                    rows[r].2 ^= lead.2;
                }
            }
            rank += 1;
        }
    }
    if rank < gens.len() {
        let dependent = rows[rank..]
            .iter()
            .find(|row| row.0 == 0 && row.1 == 0)
            .map(|row| {
                let indices: Vec<usize> = (0..gens.len()).filter(|i| row.2 >> i & 1 == 1).collect();
                Subset::from_indices(&indices).map(|s| s.key()).unwrap_or_default()
            })
            .unwrap_or_default();
        return Err(Error::DependentGenerators(dependent));
    }
    Ok(())
}

/// Stabilizer group of the linear cluster graph in the tilde frame, the set
/// every analysis in this crate is phrased against.
pub fn lc6_tilde() -> StabilizerSet {
    stabilizer_group(&generators(&builtin_graph(NamedGraph::Lc6)), Some(&tilde_frame()))
        .expect("built-in generators are valid")
}

/// Stabilizer group of a built-in graph without any frame applied.
pub fn plain_group(name: NamedGraph) -> StabilizerSet {
    stabilizer_group(&generators(&builtin_graph(name)), None)
        .expect("built-in generators are valid")
}
