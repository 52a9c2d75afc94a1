//! Z^d-periodic graphs, their box compressions and decaying potentials.
//!
//! A periodic graph is described by the vertices of one fundamental cell
//! `[0,1)^d` and by edges `(j, j', n)` joining vertex `j` of cell `0` to
//! vertex `j'` of cell `n`. The Laplacian is the combinatorial one,
//! `(Δu)(x) = Σ_{y~x} (u(x) - u(y))`, and the periodic Schrödinger operator
//! is `H = Δ + Q`.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{BandMatrix, SymmetricMatrix};

/// On-disk description of a periodic graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpecDocument {
    pub dim: usize,
    pub vertices: Vec<VertexSpec>,
    pub edges: Vec<EdgeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexSpec {
    pub id: usize,
    pub offset: Vec<f64>,
    #[serde(rename = "Q", default)]
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub from: usize,
    pub to: usize,
    pub cell: Vec<i64>,
}

impl GraphSpecDocument {
    pub fn from_json_str(text: &str, origin: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_string(),
            line: e.line(),
            column: e.column().max(1),
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text, &path.display().to_string())
    }
}

/// A canonical undirected edge between vertex `from` of cell `0` and vertex
/// `to` of cell `cell`. Vertex indices are zero based.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub cell: Vec<i64>,
}

impl Edge {
    /// `(j, j', n)` and `(j', j, -n)` describe the same edge; the canonical
    /// representative has `from <= to`, and for self-orbit edges a cell
    /// vector whose first nonzero entry is positive.
    fn canonical(from: usize, to: usize, cell: Vec<i64>) -> Self {
        let flip = from > to || (from == to && first_nonzero_is_negative(&cell));
        if flip {
            Edge {
                from: to,
                to: from,
                cell: cell.iter().map(|c| -c).collect(),
            }
        } else {
            Edge { from, to, cell }
        }
    }

    pub fn is_self_orbit(&self) -> bool {
        self.from == self.to
    }
}

fn first_nonzero_is_negative(cell: &[i64]) -> bool {
    cell.iter().find(|&&c| c != 0).is_some_and(|&c| c < 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicGraph {
    dim: usize,
    offsets: Vec<Vec<f64>>,
    edges: Vec<Edge>,
    degrees: Vec<usize>,
    potential: Vec<f64>,
}

/// Validates a spec document and builds the canonical periodic graph.
pub fn build_graph(spec: &GraphSpecDocument) -> Result<PeriodicGraph> {
    let d = spec.dim;
    if d == 0 {
        return Err(Error::InvalidGraph("dim must be at least 1".into()));
    }
    let nu = spec.vertices.len();
    if nu == 0 {
        return Err(Error::InvalidGraph("no vertices".into()));
    }
    let mut offsets = vec![None; nu];
    let mut potential = vec![0.0; nu];
    for v in &spec.vertices {
        if v.id == 0 || v.id > nu {
            return Err(Error::InvalidGraph(format!(
                "vertex id {} outside 1..={nu}",
                v.id
            )));
        }
        if offsets[v.id - 1].is_some() {
            return Err(Error::InvalidGraph(format!("duplicate vertex id {}", v.id)));
        }
        if v.offset.len() != d {
            return Err(Error::InvalidGraph(format!(
                "vertex {} has {} offset coordinates, expected {d}",
                v.id,
                v.offset.len()
            )));
        }
        if let Some(x) = v.offset.iter().find(|x| !(0.0..1.0).contains(*x)) {
            return Err(Error::InvalidGraph(format!(
                "vertex {} offset coordinate {x} outside [0,1)",
                v.id
            )));
        }
        if !v.q.is_finite() {
            return Err(Error::InvalidGraph(format!("vertex {} has non-finite Q", v.id)));
        }
        offsets[v.id - 1] = Some(v.offset.clone());
        potential[v.id - 1] = v.q;
    }
    let offsets: Vec<Vec<f64>> = offsets.into_iter().map(|o| o.unwrap()).collect();

    let mut edges = Vec::with_capacity(spec.edges.len());
    for e in &spec.edges {
        for id in [e.from, e.to] {
            if id == 0 || id > nu {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}, {:?}) references unknown vertex id {id}",
                    e.from, e.to, e.cell
                )));
            }
        }
        if e.cell.len() != d {
            return Err(Error::InvalidGraph(format!(
                "edge ({}, {}, {:?}) has a cell vector of length {}, expected {d}",
                e.from,
                e.to,
                e.cell,
                e.cell.len()
            )));
        }
        // Loops (j, j, 0) drop out of the Laplacian: u(x) - u(x) = 0.
        if e.from == e.to && e.cell.iter().all(|&c| c == 0) {
            continue;
        }
        edges.push(Edge::canonical(e.from - 1, e.to - 1, e.cell.clone()));
    }
    edges.sort();

    let graph = PeriodicGraph::from_parts(d, offsets, edges, potential);
    if let Some(j) = graph.degrees.iter().position(|&deg| deg == 0) {
        return Err(Error::InvalidGraph(format!("vertex {} has no edges", j + 1)));
    }
    graph.check_connected()?;
    Ok(graph)
}

impl PeriodicGraph {
    fn from_parts(dim: usize, offsets: Vec<Vec<f64>>, edges: Vec<Edge>, potential: Vec<f64>) -> Self {
        let mut degrees = vec![0usize; offsets.len()];
        for e in &edges {
            degrees[e.from] += 1;
            degrees[e.to] += 1;
        }
        PeriodicGraph {
            dim,
            offsets,
            edges,
            degrees,
            potential,
        }
    }

    /// The integer lattice Z^d with nearest-neighbour edges and `Q = 0`.
    pub fn lattice(dim: usize) -> Self {
        assert!(dim >= 1);
        let edges = (0..dim)
            .map(|i| {
                let mut cell = vec![0; dim];
                cell[i] = 1;
                Edge { from: 0, to: 0, cell }
            })
            .collect();
        Self::from_parts(dim, vec![vec![0.0; dim]], edges, vec![0.0])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of vertices per fundamental cell.
    pub fn nu(&self) -> usize {
        self.offsets.len()
    }

    pub fn offsets(&self) -> &[Vec<f64>] {
        &self.offsets
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// The periodic potential `Q`, one value per fundamental-cell vertex.
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn with_potential(mut self, q: Vec<f64>) -> Result<Self> {
        if q.len() != self.nu() || q.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidGraph(format!(
                "potential needs {} finite values",
                self.nu()
            )));
        }
        self.potential = q;
        Ok(self)
    }

    pub fn has_self_orbit_edges(&self) -> bool {
        self.edges.iter().any(Edge::is_self_orbit)
    }

    /// Embedded position `x_j + n` of vertex `j` in cell `n`.
    pub fn position(&self, vertex: usize, cell: &[i64]) -> Vec<f64> {
        self.offsets[vertex]
            .iter()
            .zip(cell)
            .map(|(x, &n)| x + n as f64)
            .collect()
    }

    fn max_cell_reach(&self) -> i64 {
        self.edges
            .iter()
            .flat_map(|e| e.cell.iter().map(|c| c.abs()))
            .max()
            .unwrap_or(0)
    }

    /// Breadth-first search on the patch of cells `|n|_∞ <= R`, where `R`
    /// is the longest edge reach (at least one, giving the 3^d patch).
    fn check_connected(&self) -> Result<()> {
        let radius = self.max_cell_reach().max(1) as usize;
        let index = BoxIndex::new(self.dim, self.nu(), radius);
        let n = index.len();
        let mut adjacency = vec![Vec::new(); n];
        for_each_box_coupling(self, &index, |a, b| {
            adjacency[a].push(b);
            adjacency[b].push(a);
        });
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(a) = queue.pop_front() {
            for &b in &adjacency[a] {
                if !seen[b] {
                    seen[b] = true;
                    count += 1;
                    queue.push_back(b);
                }
            }
        }
        if count != n {
            let (j, cell) = index.site(seen.iter().position(|s| !s).unwrap());
            return Err(Error::InvalidGraph(format!(
                "graph is disconnected on the {}-cell patch: vertex {} of cell {:?} is unreachable",
                (2 * radius + 1).pow(self.dim as u32),
                j + 1,
                cell
            )));
        }
        Ok(())
    }
}

impl fmt::Display for PeriodicGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "periodic graph: d = {}, nu = {}, {} edges",
            self.dim,
            self.nu(),
            self.edges.len()
        )
    }
}

/// Enumeration of the sites `(j, n)` with `|n|_∞ <= L`.
///
/// Rows are ordered cell-major (lexicographic in `n`, first axis slowest)
/// with the vertex index innermost, so one-dimensional chains give banded
/// matrices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoxIndex {
    dim: usize,
    nu: usize,
    radius: usize,
}

impl BoxIndex {
    pub fn new(dim: usize, nu: usize, radius: usize) -> Self {
        BoxIndex { dim, nu, radius }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn cells(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn len(&self) -> usize {
        self.cells() * self.nu
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell(&self, linear: usize) -> Vec<i64> {
        let side = self.side();
        let mut rest = linear;
        let mut cell = vec![0i64; self.dim];
        for axis in (0..self.dim).rev() {
            cell[axis] = (rest % side) as i64 - self.radius as i64;
            rest /= side;
        }
        cell
    }

    pub fn site(&self, row: usize) -> (usize, Vec<i64>) {
        (row % self.nu, self.cell(row / self.nu))
    }

    pub fn row(&self, vertex: usize, cell: &[i64]) -> Option<usize> {
        let side = self.side() as i64;
        let r = self.radius as i64;
        let mut linear = 0i64;
        for &c in cell {
            if c.abs() > r {
                return None;
            }
            linear = linear * side + (c + r);
        }
        Some(linear as usize * self.nu + vertex)
    }
}

/// Calls `visit(a, b)` once for every edge copy with both ends in the box;
/// multi-edges are visited once per copy.
fn for_each_box_coupling(graph: &PeriodicGraph, index: &BoxIndex, mut visit: impl FnMut(usize, usize)) {
    for linear in 0..index.cells() {
        let cell = index.cell(linear);
        for e in &graph.edges {
            let target: Vec<i64> = cell.iter().zip(&e.cell).map(|(a, b)| a + b).collect();
            if let Some(b) = index.row(e.to, &target) {
                let a = linear * index.nu + e.from;
                visit(a, b);
            }
        }
    }
}

/// Compression `E H E` of the periodic operator onto the box `|n|_∞ <= L`.
#[derive(Debug, Clone)]
pub struct FiniteHamiltonian {
    index: BoxIndex,
    diagonal: Vec<f64>,
    /// Strictly upper off-diagonal entries `(row, col, value)` with `row < col`.
    couplings: Vec<(usize, usize, f64)>,
}

/// Assembles the box compression: full-graph degrees on the diagonal,
/// couplings leaving the box dropped.
pub fn assemble_truncated(graph: &PeriodicGraph, radius: usize) -> FiniteHamiltonian {
    let index = BoxIndex::new(graph.dim, graph.nu(), radius);
    let diagonal = (0..index.len())
        .map(|row| {
            let j = row % graph.nu();
            graph.degrees[j] as f64 + graph.potential[j]
        })
        .collect();
    let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for_each_box_coupling(graph, &index, |a, b| {
        let key = if a < b { (a, b) } else { (b, a) };
        *acc.entry(key).or_insert(0.0) -= 1.0;
    });
    let couplings = acc.into_iter().map(|((a, b), v)| (a, b, v)).collect();
    FiniteHamiltonian {
        index,
        diagonal,
        couplings,
    }
}

impl FiniteHamiltonian {
    /// Builds a compression-like operator directly from a symmetric pattern;
    /// used for synthetic finite models.
    pub fn from_dense(matrix: &nalgebra::DMatrix<f64>) -> Self {
        let n = matrix.nrows();
        assert_eq!(n, matrix.ncols());
        let mut couplings = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                let v = matrix[(a, b)];
                if v != 0.0 {
                    couplings.push((a, b, v));
                }
            }
        }
        FiniteHamiltonian {
            index: BoxIndex::new(1, n, 0),
            diagonal: (0..n).map(|a| matrix[(a, a)]).collect(),
            couplings,
        }
    }

    pub fn index(&self) -> &BoxIndex {
        &self.index
    }

    pub fn radius(&self) -> usize {
        self.index.radius
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn couplings(&self) -> &[(usize, usize, f64)] {
        &self.couplings
    }

    pub fn bandwidth(&self) -> usize {
        self.couplings.iter().map(|&(a, b, _)| b - a).max().unwrap_or(0)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        let mut m = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.diagonal));
        for &(a, b, v) in &self.couplings {
            m[(a, b)] += v;
            m[(b, a)] += v;
        }
        debug_assert_eq!(m.nrows(), n);
        m
    }

    /// `scale * H + diag(shift)`, stored banded when the bandwidth is small
    /// compared to the dimension and dense otherwise.
    pub fn combined(&self, scale: f64, shift: &[f64]) -> SymmetricMatrix {
        let n = self.dim();
        assert_eq!(shift.len(), n);
        let bw = self.bandwidth();
        if bw <= BANDED_MAX_BANDWIDTH && n > 4 * (bw + 1) {
            let mut band = BandMatrix::zeros(n, bw);
            for a in 0..n {
                band.set(a, a, scale * self.diagonal[a] + shift[a]);
            }
            for &(a, b, v) in &self.couplings {
                band.set(b, a, scale * v);
            }
            SymmetricMatrix::Banded(band)
        } else {
            let mut m = self.to_dense() * scale;
            for a in 0..n {
                m[(a, a)] += shift[a];
            }
            SymmetricMatrix::Dense(m)
        }
    }

    /// The operator itself in its preferred storage.
    pub fn matrix(&self) -> SymmetricMatrix {
        self.combined(1.0, &vec![0.0; self.dim()])
    }
}

const BANDED_MAX_BANDWIDTH: usize = 32;

/// Angular profile `ϑ` on the unit sphere S^{d-1}.
#[derive(Debug, Clone, PartialEq)]
pub enum AngularProfile {
    Const(f64),
    /// Amplitude times the squared cosine of the angle to the first
    /// coordinate axis.
    Cos2(f64),
    /// Nearest-direction lookup in a sampled table.
    Table {
        directions: Vec<Vec<f64>>,
        values: Vec<f64>,
    },
}

impl AngularProfile {
    /// Parses `const:<c>`, `cos2` or `table:<path>`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidProfile(text.to_string(), msg.to_string());
        if let Some(c) = text.strip_prefix("const:") {
            let c: f64 = c.trim().parse().map_err(|_| bad("expected a real after `const:`"))?;
            if !c.is_finite() {
                return Err(bad("constant must be finite"));
            }
            Ok(AngularProfile::Const(c))
        } else if text == "cos2" {
            Ok(AngularProfile::Cos2(1.0))
        } else if let Some(path) = text.strip_prefix("table:") {
            let body = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.to_string(),
                source,
            })?;
            Self::parse_table(&body, path)
        } else {
            Err(bad("expected const:<c>, cos2 or table:<path>"))
        }
    }

    /// Rows of whitespace-separated numbers: `d` direction components, then
    /// the value. Blank lines and `#` comments are skipped.
    pub fn parse_table(body: &str, origin: &str) -> Result<Self> {
        let mut directions = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in body.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let nums: std::result::Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
            let nums = nums.map_err(|e| Error::Parse {
                path: origin.to_string(),
                line: lineno + 1,
                column: 1,
                message: e.to_string(),
            })?;
            if nums.len() < 2 {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    line: lineno + 1,
                    column: 1,
                    message: "expected direction components followed by a value".into(),
                });
            }
            let (dir, value) = nums.split_at(nums.len() - 1);
            if let Some(first) = directions.first() {
                let first: &Vec<f64> = first;
                if first.len() != dir.len() {
                    return Err(Error::Parse {
                        path: origin.to_string(),
                        line: lineno + 1,
                        column: 1,
                        message: format!("expected {} direction components", first.len()),
                    });
                }
            }
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    line: lineno + 1,
                    column: 1,
                    message: "zero direction".into(),
                });
            }
            directions.push(dir.iter().map(|x| x / norm).collect());
            values.push(value[0]);
        }
        if values.is_empty() {
            return Err(Error::InvalidProfile(origin.to_string(), "empty table".into()));
        }
        Ok(AngularProfile::Table { directions, values })
    }

    /// Value at a unit direction.
    pub fn eval(&self, direction: &[f64]) -> f64 {
        match self {
            AngularProfile::Const(c) => *c,
            AngularProfile::Cos2(a) => a * direction[0] * direction[0],
            AngularProfile::Table { directions, values } => {
                let mut best = f64::NEG_INFINITY;
                let mut value = values[0];
                for (dir, v) in directions.iter().zip(values) {
                    let dot: f64 = dir.iter().zip(direction).map(|(a, b)| a * b).sum();
                    if dot > best {
                        best = dot;
                        value = *v;
                    }
                }
                value
            }
        }
    }

    /// `sup ϑ`, used as the cap inside the unit ball.
    pub fn sup(&self) -> f64 {
        match self {
            AngularProfile::Const(c) => *c,
            AngularProfile::Cos2(a) => a.max(0.0),
            AngularProfile::Table { values, .. } => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn inf(&self) -> f64 {
        match self {
            AngularProfile::Const(c) => *c,
            AngularProfile::Cos2(a) => a.min(0.0),
            AngularProfile::Table { values, .. } => values.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            AngularProfile::Const(c) => AngularProfile::Const(c * factor),
            AngularProfile::Cos2(a) => AngularProfile::Cos2(a * factor),
            AngularProfile::Table { directions, values } => AngularProfile::Table {
                directions: directions.clone(),
                values: values.iter().map(|v| v * factor).collect(),
            },
        }
    }
}

/// Nonnegative decaying potential sampled on the sites of a box.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayingPotential {
    p: f64,
    profile: Option<AngularProfile>,
    index: BoxIndex,
    values: Vec<f64>,
}

/// Samples `V(x) = |x|^{-d/p} ϑ(x/|x|)` at `x = x_j + n`; inside the unit
/// ball the value is capped at `sup ϑ`.
pub fn sample_potential(
    graph: &PeriodicGraph,
    profile: &AngularProfile,
    p: f64,
    radius: usize,
) -> Result<DecayingPotential> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidPotential(format!("exponent p = {p} must be positive")));
    }
    if profile.inf() < 0.0 {
        return Err(Error::InvalidPotential(format!(
            "angular profile takes the negative value {}; V must be nonnegative",
            profile.inf()
        )));
    }
    let d = graph.dim() as f64;
    let cap = profile.sup();
    let mut potential = DecayingPotential::from_fn(graph, radius, |x| {
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        if r < 1.0 {
            cap
        } else {
            let dir: Vec<f64> = x.iter().map(|c| c / r).collect();
            r.powf(-d / p) * profile.eval(&dir)
        }
    })?;
    potential.p = p;
    potential.profile = Some(profile.clone());
    Ok(potential)
}

impl DecayingPotential {
    /// Samples an arbitrary nonnegative function of the embedded position.
    pub fn from_fn(graph: &PeriodicGraph, radius: usize, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let index = BoxIndex::new(graph.dim(), graph.nu(), radius);
        let mut values = Vec::with_capacity(index.len());
        for row in 0..index.len() {
            let (j, cell) = index.site(row);
            let x = graph.position(j, &cell);
            let v = f(&x);
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidPotential(format!(
                    "value {v} at vertex {} of cell {cell:?} is not a finite nonnegative real",
                    j + 1
                )));
            }
            values.push(v);
        }
        Ok(DecayingPotential {
            p: f64::NAN,
            profile: None,
            index,
            values,
        })
    }

    /// Wraps explicit site values (for synthetic finite models).
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidPotential(format!("value {v} is not a finite nonnegative real")));
        }
        Ok(DecayingPotential {
            p: f64::NAN,
            profile: None,
            index: BoxIndex::new(1, values.len(), 0),
            values,
        })
    }

    pub fn zeros(index: BoxIndex) -> Self {
        DecayingPotential {
            p: f64::NAN,
            profile: None,
            values: vec![0.0; index.len()],
            index,
        }
    }

    /// Exponent `p`, or NaN for potentials not built from a profile.
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn profile(&self) -> Option<&AngularProfile> {
        self.profile.as_ref()
    }

    pub fn index(&self) -> &BoxIndex {
        &self.index
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of sites where `V > 0`.
    pub fn support_size(&self) -> usize {
        self.values.iter().filter(|&&v| v > 0.0).count()
    }
}
