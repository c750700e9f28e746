//! Uniform triangulation of the unit square.
//!
//! Node `(i1, i2)` sits at `(i1 h, i2 h)` and has index `i2 (m + 1) + i1`.
//! Every grid square is split by its anti-diagonal, from `(i1 + 1, i2)` to
//! `(i1, i2 + 1)`, so mesh lines have slopes 0, infinity and -1.

use crate::{Error, Point, Result};

/// Structured triangulation with `m` subdivisions per side.
#[derive(Debug, Clone)]
pub struct UniformMesh {
    pub m: usize,
    pub h: f64,
    /// Counterclockwise vertex triples.
    pub elements: Vec<[usize; 3]>,
    /// Elements incident to each node.
    pub patches: Vec<Vec<usize>>,
}

/// Side of the unit square carrying a boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundarySide {
    Bottom,
    Right,
    Top,
    Left,
}

impl BoundarySide {
    pub fn normal(self) -> Point {
        match self {
            BoundarySide::Bottom => [0.0, -1.0],
            BoundarySide::Right => [1.0, 0.0],
            BoundarySide::Top => [0.0, 1.0],
            BoundarySide::Left => [-1.0, 0.0],
        }
    }
}

/// A boundary edge with its owning element.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub element: usize,
    pub side: BoundarySide,
}

/// Builds the uniform mesh. `m = 0` is rejected.
pub fn build_mesh(m: usize) -> Result<UniformMesh> {
    if m == 0 {
        return Err(Error::InvalidArgument("mesh needs m >= 1".into()));
    }
    let n = m + 1;
    let id = |i1: usize, i2: usize| i2 * n + i1;
    let mut elements = Vec::with_capacity(2 * m * m);
    for i2 in 0..m {
        for i1 in 0..m {
            elements.push([id(i1, i2), id(i1 + 1, i2), id(i1, i2 + 1)]);
            elements.push([id(i1 + 1, i2), id(i1 + 1, i2 + 1), id(i1, i2 + 1)]);
        }
    }
    let mut patches = vec![Vec::new(); n * n];
    for (e, tri) in elements.iter().enumerate() {
        for &v in tri {
            patches[v].push(e);
        }
    }
    Ok(UniformMesh { m, h: 1.0 / m as f64, elements, patches })
}

impl UniformMesh {
    pub fn num_nodes(&self) -> usize {
        (self.m + 1) * (self.m + 1)
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// Grid indices `(i1, i2)` of a node.
    pub fn grid_index(&self, node: usize) -> (usize, usize) {
        (node % (self.m + 1), node / (self.m + 1))
    }

    pub fn node_id(&self, i1: usize, i2: usize) -> usize {
        i2 * (self.m + 1) + i1
    }

    pub fn node(&self, node: usize) -> Point {
        let (i1, i2) = self.grid_index(node);
        // Exact for node indices on the unit-square boundary.
        [i1 as f64 / self.m as f64, i2 as f64 / self.m as f64]
    }

    pub fn element_points(&self, e: usize) -> [Point; 3] {
        let t = self.elements[e];
        [self.node(t[0]), self.node(t[1]), self.node(t[2])]
    }

    pub fn element_area(&self) -> f64 {
        0.5 * self.h * self.h
    }

    /// Element containing `p` (ties resolved toward lower indices).
    pub fn locate(&self, p: Point) -> usize {
        let m = self.m;
        let sx = p[0] * m as f64;
        let sy = p[1] * m as f64;
        let i1 = (sx.floor().max(0.0) as usize).min(m - 1);
        let i2 = (sy.floor().max(0.0) as usize).min(m - 1);
        let (xi, eta) = (sx - i1 as f64, sy - i2 as f64);
        2 * (i2 * m + i1) + usize::from(xi + eta > 1.0)
    }

    /// The `4m` boundary edges, counterclockwise around the square.
    pub fn boundary_edges(&self) -> Vec<BoundaryEdge> {
        let m = self.m;
        let sq = |i1: usize, i2: usize| 2 * (i2 * m + i1);
        let mut out = Vec::with_capacity(4 * m);
        for i in 0..m {
            out.push(BoundaryEdge {
                nodes: [self.node_id(i, 0), self.node_id(i + 1, 0)],
                element: sq(i, 0),
                side: BoundarySide::Bottom,
            });
        }
        for i in 0..m {
            out.push(BoundaryEdge {
                nodes: [self.node_id(m, i), self.node_id(m, i + 1)],
                element: sq(m - 1, i) + 1,
                side: BoundarySide::Right,
            });
        }
        for i in (0..m).rev() {
            out.push(BoundaryEdge {
                nodes: [self.node_id(i + 1, m), self.node_id(i, m)],
                element: sq(i, m - 1) + 1,
                side: BoundarySide::Top,
            });
        }
        for i in (0..m).rev() {
            out.push(BoundaryEdge {
                nodes: [self.node_id(0, i + 1), self.node_id(0, i)],
                element: sq(0, i),
                side: BoundarySide::Left,
            });
        }
        out
    }

    /// Gradients of the three hat functions on element `e`.
    pub fn hat_gradients(&self, e: usize) -> [Point; 3] {
        let [p0, p1, p2] = self.element_points(e);
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        [
            [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
            [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
            [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
        ]
    }

    /// Barycentric coordinates of `p` with respect to element `e`.
    pub fn barycentric(&self, e: usize, p: Point) -> [f64; 3] {
        barycentric(&self.element_points(e), p)
    }
}

/// Barycentric coordinates of `p` in the triangle `t`.
pub fn barycentric(t: &[Point; 3], p: Point) -> [f64; 3] {
    let [a, b, c] = *t;
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
    let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
    [1.0 - l1 - l2, l1, l2]
}
