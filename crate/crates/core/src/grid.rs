//! Cartesian triangulation of the unit square and global numbering of
//! tensor-product Lagrange degrees of freedom.
//!
//! Elements are the squares `[i h, (i+1) h] x [j h, (j+1) h]` with
//! `h = 1/m`, indexed `j * m + i`. The degree-of-freedom lattice has
//! `p m + 1` nodes per side and is numbered lexicographically with `x`
//! running fastest.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GridError {
    #[error("number of elements per side must be positive")]
    EmptyGrid,
    #[error("polynomial order must be at least 1")]
    ZeroOrder,
}

/// Direction of the coordinate that is constant along an edge.
///
/// An `X` edge is a vertical segment `x = const` whose normal is `+x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn normal(self) -> [f64; 2] {
        match self {
            Axis::X => [1.0, 0.0],
            Axis::Y => [0.0, 1.0],
        }
    }
}

/// Interior edge shared by two elements.
///
/// `left` lies on the negative side of `normal`, `right` on the positive side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub axis: Axis,
    pub left: usize,
    pub right: usize,
    pub normal: [f64; 2],
    pub length: f64,
}

/// Side of the unit square a boundary edge lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// `x = 0`
    West,
    /// `x = 1`
    East,
    /// `y = 0`
    South,
    /// `y = 1`
    North,
}

impl Side {
    pub fn outward_normal(self) -> [f64; 2] {
        match self {
            Side::West => [-1.0, 0.0],
            Side::East => [1.0, 0.0],
            Side::South => [0.0, -1.0],
            Side::North => [0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub element: usize,
    pub side: Side,
}

/// Lower-left lattice corner of an element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cell {
    pub i: usize,
    pub j: usize,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    m: usize,
    interior_edges: Vec<Edge>,
    boundary_edges: Vec<BoundaryEdge>,
}

impl Mesh {
    pub fn build_cartesian(m: usize) -> Result<Self, GridError> {
        if m == 0 {
            return Err(GridError::EmptyGrid);
        }
        let h = 1.0 / m as f64;
        let mut interior_edges = Vec::with_capacity(2 * m * (m - 1));
        // vertical edges first, then horizontal ones
        for j in 0..m {
            for i in 0..m - 1 {
                interior_edges.push(Edge {
                    axis: Axis::X,
                    left: j * m + i,
                    right: j * m + i + 1,
                    normal: Axis::X.normal(),
                    length: h,
                });
            }
        }
        for j in 0..m - 1 {
            for i in 0..m {
                interior_edges.push(Edge {
                    axis: Axis::Y,
                    left: j * m + i,
                    right: (j + 1) * m + i,
                    normal: Axis::Y.normal(),
                    length: h,
                });
            }
        }

        let mut boundary_edges = Vec::with_capacity(4 * m);
        for t in 0..m {
            boundary_edges.push(BoundaryEdge { element: t, side: Side::South });
            boundary_edges.push(BoundaryEdge { element: (m - 1) * m + t, side: Side::North });
            boundary_edges.push(BoundaryEdge { element: t * m, side: Side::West });
            boundary_edges.push(BoundaryEdge { element: t * m + m - 1, side: Side::East });
        }

        Ok(Self { m, interior_edges, boundary_edges })
    }

    /// Elements per side.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn n_elements(&self) -> usize {
        self.m * self.m
    }

    pub fn cell(&self, element: usize) -> Cell {
        Cell { i: element % self.m, j: element / self.m }
    }

    pub fn element_index(&self, cell: Cell) -> usize {
        cell.j * self.m + cell.i
    }

    /// Physical coordinates of the element's lower-left corner.
    pub fn origin(&self, element: usize) -> [f64; 2] {
        let c = self.cell(element);
        let h = self.h();
        [c.i as f64 * h, c.j as f64 * h]
    }

    /// Maps a reference point in `[0,1]^2` to physical coordinates.
    pub fn map_point(&self, element: usize, reference: [f64; 2]) -> [f64; 2] {
        let c = self.cell(element);
        let m = self.m as f64;
        [(c.i as f64 + reference[0]) / m, (c.j as f64 + reference[1]) / m]
    }

    pub fn interior_edges(&self) -> &[Edge] {
        &self.interior_edges
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }
}

/// Global numbering of the closed `(p m + 1) x (p m + 1)` node lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofMap {
    p: usize,
    m: usize,
    nodes_per_side: usize,
}

impl DofMap {
    pub fn new(mesh: &Mesh, p: usize) -> Result<Self, GridError> {
        if p == 0 {
            return Err(GridError::ZeroOrder);
        }
        Ok(Self { p, m: mesh.m(), nodes_per_side: p * mesh.m() + 1 })
    }

    pub fn order(&self) -> usize {
        self.p
    }

    /// Elements per side of the mesh this map was built for.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn nodes_per_side(&self) -> usize {
        self.nodes_per_side
    }

    pub fn total(&self) -> usize {
        self.nodes_per_side * self.nodes_per_side
    }

    /// Local nodes per element, `(p+1)^2`.
    pub fn local_count(&self) -> usize {
        (self.p + 1) * (self.p + 1)
    }

    /// Global index of local node `a + (p+1) b` of `element`.
    pub fn global_index(&self, element: usize, local: usize) -> usize {
        let q = self.p + 1;
        let (a, b) = (local % q, local / q);
        let (i, j) = (element % self.m, element / self.m);
        (j * self.p + b) * self.nodes_per_side + i * self.p + a
    }

    /// Global indices of all local nodes of `element`, in local order.
    pub fn element_dofs(&self, element: usize) -> Vec<usize> {
        (0..self.local_count()).map(|l| self.global_index(element, l)).collect()
    }

    /// Physical coordinates of a global lattice node.
    pub fn node_coords(&self, global: usize) -> [f64; 2] {
        let n = self.nodes_per_side;
        let scale = (self.p * self.m) as f64;
        [(global % n) as f64 / scale, (global / n) as f64 / scale]
    }

    pub fn matches(&self, mesh: &Mesh) -> bool {
        self.m == mesh.m()
    }
}
