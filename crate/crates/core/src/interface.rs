//! Interface geometry, cut-element classification, the polygonal interface
//! proxy and the constrained sub-triangulation of cut elements.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::mesh::UniformMesh;
use crate::quadrature::signed_area;
use crate::{Error, Point, Result};

/// Distance below which a mesh vertex is considered to lie on the interface, in units of `h`.
pub const SNAP_TOL: f64 = 1e-12;

/// Subdomain label: `Omega0 = {gamma < 0}` carries `a0`, `Omega1 = {gamma > 0}` carries `a1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Omega0,
    Omega1,
}

/// The interface as a level set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InterfaceGeometry {
    /// Line through `A = (-d0, 1)` with slope `-tan(theta0)`.
    Straight { d0: f64, theta0: f64 },
    /// Circle of center `(xc, yc)` and radius `rc`.
    Circle { xc: f64, yc: f64, rc: f64 },
}

impl InterfaceGeometry {
    pub fn default_straight() -> Self {
        InterfaceGeometry::Straight { d0: 1.0 - 1.0 / 2f64.sqrt(), theta0: PI / 6.0 }
    }

    pub fn default_circle() -> Self {
        InterfaceGeometry::Circle { xc: 1.0 / 5f64.sqrt(), yc: 1.0 / 3f64.sqrt(), rc: 1.0 / 10f64.sqrt() }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            InterfaceGeometry::Straight { d0, theta0 } => {
                if !(d0 > 0.0) || !(theta0 > 0.0) || theta0 >= (1.0 / d0).atan() {
                    return Err(Error::InvalidArgument(format!(
                        "straight interface needs d0 > 0 and 0 < theta0 < atan(1/d0), got d0={d0}, theta0={theta0}"
                    )));
                }
            }
            InterfaceGeometry::Circle { xc, yc, rc } => {
                if !(rc > 0.0) || !(0.0..=1.0).contains(&xc) || !(0.0..=1.0).contains(&yc) {
                    return Err(Error::InvalidArgument(format!(
                        "circle interface needs rc > 0 and a center in the unit square, got ({xc},{yc}), rc={rc}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Level set `gamma`. For the line it is the signed distance; for the
    /// circle it is `|x - c|^2 - rc^2`.
    pub fn level_set(&self, p: Point) -> f64 {
        match *self {
            InterfaceGeometry::Straight { d0, theta0 } => -(theta0.sin() * (p[0] + d0) + theta0.cos() * (p[1] - 1.0)),
            InterfaceGeometry::Circle { xc, yc, rc } => (p[0] - xc).powi(2) + (p[1] - yc).powi(2) - rc * rc,
        }
    }

    /// Exact Euclidean distance to the interface.
    pub fn distance(&self, p: Point) -> f64 {
        match *self {
            InterfaceGeometry::Straight { .. } => self.level_set(p).abs(),
            InterfaceGeometry::Circle { xc, yc, rc } => ((p[0] - xc).hypot(p[1] - yc) - rc).abs(),
        }
    }

    pub fn side(&self, p: Point) -> Side {
        if self.level_set(p) < 0.0 {
            Side::Omega0
        } else {
            Side::Omega1
        }
    }

    pub fn is_circle(&self) -> bool {
        matches!(self, InterfaceGeometry::Circle { .. })
    }
}

/// An interface crossing in the interior of a mesh edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgePoint {
    /// Edge end nodes with `edge[0] < edge[1]`.
    pub edge: [usize; 2],
    /// Position along the edge measured from `edge[0]`.
    pub t: f64,
    pub pos: Point,
}

/// Cut elements, interface crossings and the polygonal proxy.
///
/// Point identifiers cover mesh nodes first (`0..num_nodes`) followed by
/// edge crossings.
#[derive(Debug, Clone)]
pub struct CutClassification {
    pub geometry: InterfaceGeometry,
    pub h: f64,
    pub num_nodes: usize,
    node_pos: Vec<Point>,
    /// Nodes within `SNAP_TOL * h` of the interface.
    pub node_on_interface: Vec<bool>,
    pub points: Vec<EdgePoint>,
    edge_map: BTreeMap<(usize, usize), Vec<usize>>,
    pub is_cut: Vec<bool>,
    pub cut_elements: Vec<usize>,
    /// Pieces of the proxy inside each element, as point-id pairs.
    pub chords: Vec<Vec<[usize; 2]>>,
    /// Ordered vertices of the proxy: along the line, or counterclockwise around the circle center.
    pub polygon: Vec<usize>,
    /// Number of tangential or otherwise degenerate contacts treated as non-crossing.
    pub degeneracies: usize,
}

impl CutClassification {
    pub fn num_points(&self) -> usize {
        self.num_nodes + self.points.len()
    }

    pub fn point(&self, id: usize) -> Point {
        if id < self.num_nodes {
            self.node_pos[id]
        } else {
            self.points[id - self.num_nodes].pos
        }
    }

    /// Crossing point ids on the edge `a -> b`, ordered from `a` to `b`.
    pub fn edge_points(&self, a: usize, b: usize) -> Vec<usize> {
        let key = (a.min(b), a.max(b));
        let mut v = self.edge_map.get(&key).cloned().unwrap_or_default();
        if a > b {
            v.reverse();
        }
        v
    }

    pub fn polygon_points(&self) -> Vec<Point> {
        self.polygon.iter().map(|&id| self.point(id)).collect()
    }

    /// Side of the proxy interface containing `p`. For the circle, the inside
    /// of the polygon is the perturbed `Omega0`.
    pub fn proxy_side(&self, p: Point) -> Side {
        match self.geometry {
            InterfaceGeometry::Straight { .. } => self.geometry.side(p),
            InterfaceGeometry::Circle { .. } => {
                if inside_convex_polygon(&self.polygon_points(), p) {
                    Side::Omega0
                } else {
                    Side::Omega1
                }
            }
        }
    }
}

/// Point-in-polygon for a counterclockwise convex polygon (fewer than three
/// vertices enclose nothing).
pub fn inside_convex_polygon(poly: &[Point], p: Point) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    (0..n).all(|k| {
        let a = poly[k];
        let b = poly[(k + 1) % n];
        (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0.0
    })
}

/// The three mesh edges of an element, as node pairs.
fn element_edges(tri: [usize; 3]) -> [[usize; 2]; 3] {
    [[tri[0], tri[1]], [tri[1], tri[2]], [tri[2], tri[0]]]
}

/// Classifies elements against the interface.
pub fn classify_elements(mesh: &UniformMesh, geom: &InterfaceGeometry) -> Result<CutClassification> {
    geom.validate()?;
    let h = mesh.h;
    let nn = mesh.num_nodes();
    let node_pos: Vec<Point> = (0..nn).map(|i| mesh.node(i)).collect();
    let node_on_interface: Vec<bool> = node_pos.iter().map(|&p| geom.distance(p) <= SNAP_TOL * h).collect();
    let gamma: Vec<f64> =
        node_pos.iter().zip(&node_on_interface).map(|(&p, &on)| if on { 0.0 } else { geom.level_set(p) }).collect();

    let mut degeneracies = 0usize;
    let mut points = Vec::new();
    let mut edge_map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    let mut seen = std::collections::BTreeSet::new();
    for tri in &mesh.elements {
        for [a, b] in element_edges(*tri) {
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                continue;
            }
            let (a, b) = key;
            let (p, q) = (node_pos[a], node_pos[b]);
            let ts = edge_roots(
                geom,
                p,
                q,
                gamma[a],
                gamma[b],
                node_on_interface[a],
                node_on_interface[b],
                h,
                &mut degeneracies,
            );
            for t in ts {
                let pos = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
                edge_map.entry(key).or_default().push(nn + points.len());
                points.push(EdgePoint { edge: [a, b], t, pos });
            }
        }
    }

    let mut cls = CutClassification {
        geometry: *geom,
        h,
        num_nodes: nn,
        node_pos,
        node_on_interface,
        points,
        edge_map,
        is_cut: vec![false; mesh.num_elements()],
        cut_elements: Vec::new(),
        chords: vec![Vec::new(); mesh.num_elements()],
        polygon: Vec::new(),
        degeneracies,
    };

    for (e, tri) in mesh.elements.iter().enumerate() {
        let boundary = element_boundary_points(&cls, *tri);
        let (cut, chords) = match *geom {
            InterfaceGeometry::Straight { .. } => {
                let pos = tri.iter().any(|&v| gamma[v] > 0.0);
                let neg = tri.iter().any(|&v| gamma[v] < 0.0);
                if pos && neg {
                    if boundary.len() != 2 {
                        return Err(Error::InvalidArgument(format!(
                            "element {e} has {} interface points on its boundary",
                            boundary.len()
                        )));
                    }
                    (true, vec![[boundary[0], boundary[1]]])
                } else {
                    (false, Vec::new())
                }
            }
            InterfaceGeometry::Circle { xc, yc, rc } => circle_chords(&cls, mesh, e, &boundary, [xc, yc], rc),
        };
        if geom.is_circle() && boundary.is_empty() {
            // A circle strictly inside one element touches none of its edges.
            if let InterfaceGeometry::Circle { xc, yc, .. } = *geom {
                let lam = mesh.barycentric(e, [xc, yc]);
                if lam.iter().all(|&l| l > 0.0) && tri.iter().all(|&v| gamma[v] > 0.0) {
                    cls.is_cut[e] = true;
                    cls.cut_elements.push(e);
                    cls.degeneracies += 1;
                }
            }
            continue;
        }
        if cut {
            cls.is_cut[e] = true;
            cls.cut_elements.push(e);
            cls.chords[e] = chords;
        }
    }

    cls.polygon = build_polygon(&cls);
    Ok(cls)
}

#[allow(clippy::too_many_arguments)]
fn edge_roots(
    geom: &InterfaceGeometry,
    p: Point,
    q: Point,
    ga: f64,
    gb: f64,
    snap_a: bool,
    snap_b: bool,
    h: f64,
    degeneracies: &mut usize,
) -> Vec<f64> {
    let len = (q[0] - p[0]).hypot(q[1] - p[1]);
    let tol_t = SNAP_TOL * h / len;
    let interior = |t: f64| t > tol_t && t < 1.0 - tol_t;
    match *geom {
        InterfaceGeometry::Straight { .. } => {
            if ga * gb < 0.0 {
                vec![ga / (ga - gb)]
            } else {
                Vec::new()
            }
        }
        InterfaceGeometry::Circle { xc, yc, rc } => {
            let d = [q[0] - p[0], q[1] - p[1]];
            let f = [p[0] - xc, p[1] - yc];
            let qa = d[0] * d[0] + d[1] * d[1];
            let qb = 2.0 * (f[0] * d[0] + f[1] * d[1]);
            let qc = f[0] * f[0] + f[1] * f[1] - rc * rc;
            let mut roots = Vec::new();
            match (snap_a, snap_b) {
                (true, true) => {}
                (true, false) => roots.push(-qb / qa),
                (false, true) => roots.push(qc / qa),
                (false, false) => {
                    let disc = qb * qb - 4.0 * qa * qc;
                    if disc < 0.0 {
                        return Vec::new();
                    }
                    let sq = disc.sqrt();
                    let t1 = if qb >= 0.0 { (-qb - sq) / (2.0 * qa) } else { (-qb + sq) / (2.0 * qa) };
                    let t2 = if t1 != 0.0 { qc / (qa * t1) } else { -qb / qa };
                    if (t1 - t2).abs() * len <= SNAP_TOL * h {
                        if interior(0.5 * (t1 + t2)) {
                            *degeneracies += 1;
                        }
                        return Vec::new();
                    }
                    roots.push(t1);
                    roots.push(t2);
                }
            }
            let mut r: Vec<f64> = roots.into_iter().filter(|&t| interior(t)).collect();
            r.sort_by(f64::total_cmp);
            r
        }
    }
}

/// Snapped vertices and edge crossings on the boundary of an element.
fn element_boundary_points(cls: &CutClassification, tri: [usize; 3]) -> Vec<usize> {
    let mut out = Vec::new();
    for [a, b] in element_edges(tri) {
        if cls.node_on_interface[a] {
            out.push(a);
        }
        out.extend(cls.edge_points(a, b));
    }
    out
}

/// Pairs consecutive circle crossings whose connecting arc runs through the element interior.
fn circle_chords(
    cls: &CutClassification,
    mesh: &UniformMesh,
    e: usize,
    boundary: &[usize],
    c: Point,
    rc: f64,
) -> (bool, Vec<[usize; 2]>) {
    if boundary.len() < 2 {
        return (false, Vec::new());
    }
    let mut ang: Vec<(f64, usize)> = boundary
        .iter()
        .map(|&id| {
            let p = cls.point(id);
            ((p[1] - c[1]).atan2(p[0] - c[0]), id)
        })
        .collect();
    ang.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = ang.len();
    let mut chords = Vec::new();
    for k in 0..n {
        let (a0, id0) = ang[k];
        let (a1, id1) = ang[(k + 1) % n];
        let mut span = a1 - a0;
        if span <= 0.0 {
            span += 2.0 * PI;
        }
        let mid = a0 + 0.5 * span;
        let mpt = [c[0] + rc * mid.cos(), c[1] + rc * mid.sin()];
        let lam = mesh.barycentric(e, mpt);
        if lam.iter().all(|&l| l > 0.0) {
            chords.push([id0, id1]);
        }
    }
    (!chords.is_empty(), chords)
}

fn build_polygon(cls: &CutClassification) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..cls.num_nodes).filter(|&i| cls.node_on_interface[i]).collect();
    ids.extend(cls.num_nodes..cls.num_points());
    match cls.geometry {
        InterfaceGeometry::Straight { theta0, .. } => {
            let t = [theta0.cos(), -theta0.sin()];
            let mut keyed: Vec<(f64, usize)> = ids
                .into_iter()
                .map(|id| {
                    let p = cls.point(id);
                    (p[0] * t[0] + p[1] * t[1], id)
                })
                .collect();
            keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
            keyed.into_iter().map(|(_, id)| id).collect()
        }
        InterfaceGeometry::Circle { xc, yc, .. } => {
            let mut keyed: Vec<(f64, usize)> = ids
                .into_iter()
                .map(|id| {
                    let p = cls.point(id);
                    ((p[1] - yc).atan2(p[0] - xc), id)
                })
                .collect();
            keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
            keyed.into_iter().map(|(_, id)| id).collect()
        }
    }
}

/// A triangle of the constrained sub-triangulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubTriangle {
    pub element: usize,
    /// Point ids (see [`CutClassification`]), counterclockwise.
    pub vertices: [usize; 3],
    pub side: Side,
    pub area: f64,
}

/// Sub-triangles of every element; uncut elements map to themselves.
#[derive(Debug, Clone)]
pub struct SubTriangulation {
    pub triangles: Vec<SubTriangle>,
    /// `triangles[ranges[e].0..ranges[e].1]` belong to element `e`.
    pub ranges: Vec<(usize, usize)>,
}

impl SubTriangulation {
    pub fn of_element(&self, e: usize) -> &[SubTriangle] {
        let (s, t) = self.ranges[e];
        &self.triangles[s..t]
    }
}

/// Splits every element along the proxy interface.
pub fn subtriangulate(mesh: &UniformMesh, cut: &CutClassification) -> SubTriangulation {
    let mut triangles = Vec::with_capacity(mesh.num_elements() + 2 * cut.cut_elements.len());
    let mut ranges = Vec::with_capacity(mesh.num_elements());
    for (e, &tri) in mesh.elements.iter().enumerate() {
        let start = triangles.len();
        // Polygon of the element with crossing points inserted; each vertex
        // carries a bit mask of the element edges it lies on.
        let mut poly: Vec<(usize, u8)> = Vec::with_capacity(8);
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            poly.push((a, (1u8 << k) | (1u8 << ((k + 2) % 3))));
            for id in cut.edge_points(a, b) {
                poly.push((id, 1u8 << k));
            }
        }
        let mut pieces = vec![poly];
        for &[p, q] in &cut.chords[e] {
            let Some(pi) = pieces.iter().position(|pc| pc.iter().any(|v| v.0 == p) && pc.iter().any(|v| v.0 == q))
            else {
                continue;
            };
            let piece = &pieces[pi];
            let ip = piece.iter().position(|v| v.0 == p).unwrap();
            let iq = piece.iter().position(|v| v.0 == q).unwrap();
            if piece[ip].1 & piece[iq].1 != 0 {
                continue;
            }
            let n = piece.len();
            let mut first = Vec::new();
            let mut k = ip;
            loop {
                first.push(piece[k]);
                if k == iq {
                    break;
                }
                k = (k + 1) % n;
            }
            let mut second = Vec::new();
            let mut k = iq;
            loop {
                second.push(piece[k]);
                if k == ip {
                    break;
                }
                k = (k + 1) % n;
            }
            pieces[pi] = first;
            pieces.push(second);
        }
        for piece in pieces {
            for v in ear_clip(piece) {
                let pts = [cut.point(v[0]), cut.point(v[1]), cut.point(v[2])];
                let area = signed_area(pts[0], pts[1], pts[2]);
                debug_assert!(area > 0.0, "sub-triangle orientation");
                let centroid = [(pts[0][0] + pts[1][0] + pts[2][0]) / 3.0, (pts[0][1] + pts[1][1] + pts[2][1]) / 3.0];
                triangles.push(SubTriangle { element: e, vertices: v, side: cut.proxy_side(centroid), area });
            }
        }
        ranges.push((start, triangles.len()));
    }
    SubTriangulation { triangles, ranges }
}

/// Triangulates a convex polygon whose collinear runs are encoded in the
/// vertex bit masks, never creating zero-area triangles or hanging vertices.
fn ear_clip(mut p: Vec<(usize, u8)>) -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity(p.len().saturating_sub(2));
    while p.len() > 3 {
        let n = p.len();
        let k = (0..n)
            .find(|&k| {
                let (a, b, c) = (p[(k + n - 1) % n], p[k], p[(k + 1) % n]);
                a.1 & b.1 & c.1 == 0 && a.1 & c.1 == 0
            })
            .expect("convex polygon always has an ear");
        out.push([p[(k + n - 1) % n].0, p[k].0, p[(k + 1) % n].0]);
        p.remove(k);
    }
    if p.len() == 3 && p[0].1 & p[1].1 & p[2].1 == 0 {
        out.push([p[0].0, p[1].0, p[2].0]);
    }
    out
}

/// Area between the circle and its inscribed proxy polygon (zero for the line).
pub fn mismatch_measure(cut: &CutClassification) -> f64 {
    match cut.geometry {
        InterfaceGeometry::Straight { .. } => 0.0,
        InterfaceGeometry::Circle { rc, .. } => inscribed_mismatch(&cut.polygon_points(), rc),
    }
}

/// `pi r^2` minus the area of an inscribed counterclockwise polygon.
pub fn inscribed_mismatch(poly: &[Point], r: f64) -> f64 {
    let n = poly.len();
    let mut area = 0.0;
    if n >= 3 {
        for k in 0..n {
            let a = poly[k];
            let b = poly[(k + 1) % n];
            area += a[0] * b[1] - b[0] * a[1];
        }
    }
    PI * r * r - 0.5 * area
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;

    #[test]
    fn straight_interface_is_signed_distance() {
        let g = InterfaceGeometry::default_straight();
        let InterfaceGeometry::Straight { d0, theta0 } = g else { unreachable!() };
        let a = [-d0, 1.0];
        let n = [theta0.sin(), theta0.cos()];
        for t in [-0.1, 0.1] {
            let p = [a[0] + t * n[0], a[1] + t * n[1]];
            assert!((g.distance(p) - 0.1).abs() < 1e-15);
        }
        // The polar ray direction lies on the a0 side.
        assert_eq!(g.side([a[0] + 1.0, a[1]]), Side::Omega0);
    }

    #[test]
    fn uncut_element_is_its_own_sub_triangle() {
        let mesh = build_mesh(4).unwrap();
        let cut = classify_elements(&mesh, &InterfaceGeometry::default_straight()).unwrap();
        let sub = subtriangulate(&mesh, &cut);
        for e in 0..mesh.num_elements() {
            if !cut.is_cut[e] {
                let s = sub.of_element(e);
                assert_eq!(s.len(), 1);
                assert_eq!(s[0].vertices, mesh.elements[e]);
            }
        }
    }

    #[test]
    fn straight_chords_split_into_three() {
        let mesh = build_mesh(16).unwrap();
        let cut = classify_elements(&mesh, &InterfaceGeometry::default_straight()).unwrap();
        assert!(!cut.cut_elements.is_empty());
        let sub = subtriangulate(&mesh, &cut);
        for &e in &cut.cut_elements {
            let s = sub.of_element(e);
            assert!(s.len() == 3 || s.len() == 2);
            let area: f64 = s.iter().map(|t| t.area).sum();
            assert!((area - mesh.element_area()).abs() <= 1e-12 * mesh.element_area());
        }
    }

    #[test]
    fn tiny_circles_cut_one_element() {
        let mesh = build_mesh(8).unwrap();
        let inner = InterfaceGeometry::Circle { xc: 0.52, yc: 0.51, rc: 1e-3 };
        let cut = classify_elements(&mesh, &inner).unwrap();
        assert_eq!(cut.cut_elements, vec![mesh.locate([0.52, 0.51])]);
        let corner = InterfaceGeometry::Circle { xc: 1.0, yc: 1.0, rc: 1e-9 };
        let cut = classify_elements(&mesh, &corner).unwrap();
        assert_eq!(cut.cut_elements, vec![mesh.num_elements() - 1]);
    }

    #[test]
    fn regular_polygon_mismatch() {
        let r = 0.3;
        for n in [3usize, 6, 17] {
            let poly: Vec<Point> = (0..n)
                .map(|k| {
                    let a = 2.0 * PI * k as f64 / n as f64;
                    [r * a.cos(), r * a.sin()]
                })
                .collect();
            let exact = PI * r * r - 0.5 * n as f64 * r * r * (2.0 * PI / n as f64).sin();
            assert!((inscribed_mismatch(&poly, r) - exact).abs() < 1e-15);
        }
    }

    #[test]
    fn ear_clip_handles_points_on_every_edge() {
        let poly = vec![(0, 0b101), (3, 0b001), (1, 0b011), (4, 0b010), (2, 0b110), (5, 0b100)];
        let tris = ear_clip(poly);
        assert_eq!(tris.len(), 4);
    }
}
