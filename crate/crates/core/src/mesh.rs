//! Triangular lattice meshes and hop-count distances.
//!
//! Rows are offset by half a unit on odd rows so that every edge has unit
//! length. Vertex ids are assigned row-major from 1 over the unblocked cells,
//! with the target always relabelled to the largest id `N`. Id 0 is the
//! absorbing vertex and never appears in the adjacency lists.

use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = u32;

/// The artificial absorbing vertex.
pub const ABSORBING: VertexId = 0;

pub const SQRT3_2: f64 = 0.866_025_403_784_438_6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct Cell {
    pub row: u32,
    pub col: u32,
}

impl Cell {
    pub fn new(row: u32, col: u32) -> Self {
        Cell { row, col }
    }

    pub fn position(self) -> (f64, f64) {
        let x = self.col as f64 + if self.row % 2 == 1 { 0.5 } else { 0.0 };
        (x, self.row as f64 * SQRT3_2)
    }
}

impl From<[u32; 2]> for Cell {
    fn from([row, col]: [u32; 2]) -> Self {
        Cell { row, col }
    }
}

impl From<Cell> for [u32; 2] {
    fn from(c: Cell) -> Self {
        [c.row, c.col]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub id: VertexId,
    pub cell: Cell,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    rows: u32,
    cols: u32,
    /// `vertices[i]` has id `i + 1`.
    vertices: Vec<Vertex>,
    /// Indexed by vertex id; entry 0 is the (empty) absorbing vertex.
    adjacency: Vec<Vec<VertexId>>,
    cell_ids: Vec<VertexId>,
    blocked: BTreeSet<Cell>,
    target: VertexId,
}

pub const UNREACHABLE: u32 = u32::MAX;

/// Hop counts from one source vertex, indexed by vertex id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceField {
    pub source: VertexId,
    dist: Vec<u32>,
}

impl DistanceField {
    pub fn get(&self, v: VertexId) -> Option<u32> {
        match self.dist.get(v as usize) {
            Some(&d) if d != UNREACHABLE => Some(d),
            _ => None,
        }
    }

    /// Distance with `UNREACHABLE` standing in for infinity.
    pub fn raw(&self, v: VertexId) -> u32 {
        self.dist.get(v as usize).copied().unwrap_or(UNREACHABLE)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.dist
    }
}

impl Mesh {
    /// Builds a `rows x cols` lattice with the given cells removed. The target
    /// defaults to the last vertex in row-major order; see [`Mesh::with_target`].
    pub fn build(rows: u32, cols: u32, blocked: &BTreeSet<Cell>) -> Result<Mesh> {
        if rows < 2 || cols < 2 {
            return Err(Error::InvalidMesh(format!(
                "mesh needs at least 2 rows and 2 columns, got {rows}x{cols}"
            )));
        }
        if let Some(c) = blocked.iter().find(|c| c.row >= rows || c.col >= cols) {
            return Err(Error::InvalidMesh(format!(
                "blocked cell ({}, {}) lies outside the {rows}x{cols} lattice",
                c.row, c.col
            )));
        }
        let order: Vec<Cell> = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| Cell::new(r, c)))
            .filter(|c| !blocked.contains(c))
            .collect();
        if order.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let target = order.len() as VertexId;
        Ok(Self::assemble(rows, cols, blocked.clone(), order, target))
    }

    /// Relabels vertex ids so that `cell` becomes vertex `N`; the remaining
    /// vertices keep their row-major order.
    pub fn with_target(&self, cell: Cell) -> Result<Mesh> {
        let target_id = self.id_of(cell).ok_or_else(|| {
            Error::InvalidMesh(format!(
                "target cell ({}, {}) is blocked or outside the mesh",
                cell.row, cell.col
            ))
        })?;
        let mut order: Vec<Cell> = (0..self.rows)
            .flat_map(|r| (0..self.cols).map(move |c| Cell::new(r, c)))
            .filter(|c| !self.blocked.contains(c) && *c != cell)
            .collect();
        order.push(cell);
        let _ = target_id;
        let n = order.len() as VertexId;
        Ok(Self::assemble(self.rows, self.cols, self.blocked.clone(), order, n))
    }

    fn assemble(rows: u32, cols: u32, blocked: BTreeSet<Cell>, order: Vec<Cell>, target: VertexId) -> Mesh {
        let mut cell_ids = vec![ABSORBING; (rows * cols) as usize];
        let vertices: Vec<Vertex> = order
            .iter()
            .enumerate()
            .map(|(i, &cell)| {
                let id = i as VertexId + 1;
                cell_ids[(cell.row * cols + cell.col) as usize] = id;
                let (x, y) = cell.position();
                Vertex { id, cell, x, y }
            })
            .collect();
        let lookup = |r: i64, c: i64| -> Option<VertexId> {
            if r < 0 || c < 0 || r >= rows as i64 || c >= cols as i64 {
                return None;
            }
            match cell_ids[(r as u32 * cols + c as u32) as usize] {
                ABSORBING => None,
                id => Some(id),
            }
        };
        let mut adjacency = vec![Vec::new(); vertices.len() + 1];
        for v in &vertices {
            let (r, c) = (v.cell.row as i64, v.cell.col as i64);
            // Odd rows sit half a unit to the right of even rows.
            let (lo, hi) = if r % 2 == 0 { (c - 1, c) } else { (c, c + 1) };
            let candidates = [
                (r, c - 1),
                (r, c + 1),
                (r - 1, lo),
                (r - 1, hi),
                (r + 1, lo),
                (r + 1, hi),
            ];
            let mut nbrs: Vec<VertexId> = candidates.iter().filter_map(|&(rr, cc)| lookup(rr, cc)).collect();
            nbrs.sort_unstable();
            adjacency[v.id as usize] = nbrs;
        }
        Mesh {
            rows,
            cols,
            vertices,
            adjacency,
            cell_ids,
            blocked,
            target,
        }
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    /// Number of real vertices, `N`.
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn target(&self) -> VertexId {
        self.target
    }

    pub fn blocked(&self) -> &BTreeSet<Cell> {
        &self.blocked
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v != ABSORBING && (v as usize) <= self.vertices.len()
    }

    pub fn vertex(&self, v: VertexId) -> Option<&Vertex> {
        if v == ABSORBING {
            return None;
        }
        self.vertices.get(v as usize - 1)
    }

    pub fn position(&self, v: VertexId) -> (f64, f64) {
        let vx = &self.vertices[v as usize - 1];
        (vx.x, vx.y)
    }

    /// `Γ(v)`; empty for the absorbing vertex.
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        self.adjacency.get(v as usize).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn are_adjacent(&self, u: VertexId, v: VertexId) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn id_of(&self, cell: Cell) -> Option<VertexId> {
        if cell.row >= self.rows || cell.col >= self.cols {
            return None;
        }
        match self.cell_ids[(cell.row * self.cols + cell.col) as usize] {
            ABSORBING => None,
            id => Some(id),
        }
    }

    /// Vertex closest to `point`; ties go to the smaller id.
    pub fn nearest_vertex(&self, point: (f64, f64)) -> VertexId {
        let mut best = (f64::INFINITY, ABSORBING);
        for v in &self.vertices {
            let d = (v.x - point.0).powi(2) + (v.y - point.1).powi(2);
            // 1e-12 absorbs rounding so that exact ties resolve by id.
            if d < best.0 - 1e-12 || (d <= best.0 + 1e-12 && v.id < best.1) {
                best = (d, v.id);
            }
        }
        best.1
    }

    /// BFS hop counts from `source` over the mesh minus `forbidden`.
    pub fn hop_distances(&self, source: VertexId, forbidden: &HashSet<VertexId>) -> Result<DistanceField> {
        if !self.contains(source) {
            return Err(Error::UnknownVertex(source));
        }
        if forbidden.contains(&source) {
            return Err(Error::Config(format!("source vertex {source} is forbidden")));
        }
        let dist = self.bfs(&[source], |v| !forbidden.contains(&v));
        Ok(DistanceField { source, dist })
    }

    /// Multi-source BFS restricted to vertices accepted by `allowed`.
    /// Sources are always admitted. Result is indexed by vertex id.
    pub fn bfs(&self, sources: &[VertexId], allowed: impl Fn(VertexId) -> bool) -> Vec<u32> {
        let mut dist = vec![UNREACHABLE; self.vertices.len() + 1];
        let mut queue = VecDeque::new();
        for &s in sources {
            if self.contains(s) && dist[s as usize] == UNREACHABLE {
                dist[s as usize] = 0;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            let du = dist[u as usize];
            for &w in self.neighbors(u) {
                if dist[w as usize] == UNREACHABLE && allowed(w) {
                    dist[w as usize] = du + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// A shortest path `from -> to` avoiding vertices rejected by `allowed`
    /// (the endpoints are exempt). Deterministic: neighbours are scanned in
    /// increasing id order.
    pub fn shortest_path(&self, from: VertexId, to: VertexId, allowed: impl Fn(VertexId) -> bool) -> Option<Vec<VertexId>> {
        if !self.contains(from) || !self.contains(to) {
            return None;
        }
        let mut parent = vec![ABSORBING; self.vertices.len() + 1];
        let mut seen = vec![false; self.vertices.len() + 1];
        let mut queue = VecDeque::from([from]);
        seen[from as usize] = true;
        while let Some(u) = queue.pop_front() {
            if u == to {
                let mut path = vec![to];
                let mut cur = to;
                while cur != from {
                    cur = parent[cur as usize];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for &w in self.neighbors(u) {
                if !seen[w as usize] && (w == to || allowed(w)) {
                    seen[w as usize] = true;
                    parent[w as usize] = u;
                    queue.push_back(w);
                }
            }
        }
        None
    }

    /// Bounding box of the lattice (`x` up to `cols - 0.5`, `y` up to the top row).
    pub fn extent(&self) -> (f64, f64) {
        (self.cols as f64 - 0.5, (self.rows - 1) as f64 * SQRT3_2)
    }
}
