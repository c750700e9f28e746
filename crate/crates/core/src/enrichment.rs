//! Distance-based enrichment functions and enriched node sets.

use crate::interface::{CutClassification, InterfaceGeometry, SubTriangulation};
use crate::mesh::UniformMesh;
use crate::{Error, Point, Result};

/// Enrichment strategies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnrichmentScheme {
    /// Plain FEM.
    None,
    /// Distance enrichment at vertices of cut elements.
    Topological,
    /// Distance enrichment at every node within `r` of the interface.
    Geometric { r: f64 },
    /// Distance on cut elements, linear elsewhere, vanishing away from cut-element vertices.
    MGfem,
    /// Distance minus its nodal interpolant, at vertices of cut elements.
    Sgfem,
}

impl EnrichmentScheme {
    pub fn name(&self) -> &'static str {
        match self {
            EnrichmentScheme::None => "FEM",
            EnrichmentScheme::Topological => "Topological",
            EnrichmentScheme::Geometric { .. } => "Geometric",
            EnrichmentScheme::MGfem => "MGFEM",
            EnrichmentScheme::Sgfem => "SGFEM",
        }
    }

    /// Parses a scheme name; `r` is used for the geometric variant.
    pub fn parse(s: &str, r: f64) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "fem" | "none" => Ok(EnrichmentScheme::None),
            "topological" | "topo" => Ok(EnrichmentScheme::Topological),
            "geometric" | "geo" => Ok(EnrichmentScheme::Geometric { r }),
            "mgfem" | "gfem" => Ok(EnrichmentScheme::MGfem),
            "sgfem" => Ok(EnrichmentScheme::Sgfem),
            other => Err(Error::InvalidArgument(format!("unknown scheme '{other}'"))),
        }
    }

    pub fn is_fem(&self) -> bool {
        matches!(self, EnrichmentScheme::None)
    }
}

/// Enriched nodes and the piecewise-linear enrichment `w`.
#[derive(Debug, Clone)]
pub struct EnrichedBasis {
    pub scheme: EnrichmentScheme,
    /// Sorted enriched node ids, after the safety check.
    pub nodes: Vec<usize>,
    /// Candidates removed by the safety check.
    pub dropped: Vec<usize>,
    /// Values of `w` at every sub-triangulation vertex (point ids of the classification).
    pub w: Vec<f64>,
}

impl EnrichedBasis {
    /// `w` at a point of the sub-triangle with vertex ids `v`, given barycentric coordinates.
    pub fn eval(&self, v: [usize; 3], lam: [f64; 3]) -> f64 {
        lam[0] * self.w[v[0]] + lam[1] * self.w[v[1]] + lam[2] * self.w[v[2]]
    }
}

/// Distance to the interface at every sub-triangulation vertex; the
/// piecewise-linear interpolant over the sub-triangulation is `w*`.
pub fn distance_field(geom: &InterfaceGeometry, cut: &CutClassification) -> Vec<f64> {
    (0..cut.num_points()).map(|id| if id < cut.num_nodes { geom.distance(cut.point(id)) } else { 0.0 }).collect()
}

/// Evaluates the interpolant `w*` at `p` inside element `e`.
pub fn interpolate(
    values: &[f64],
    mesh: &UniformMesh,
    cut: &CutClassification,
    sub: &SubTriangulation,
    e: usize,
    p: Point,
) -> f64 {
    let _ = mesh;
    for st in sub.of_element(e) {
        let t = [cut.point(st.vertices[0]), cut.point(st.vertices[1]), cut.point(st.vertices[2])];
        let lam = crate::mesh::barycentric(&t, p);
        if lam.iter().all(|&l| l >= -1e-12) {
            return lam[0] * values[st.vertices[0]] + lam[1] * values[st.vertices[1]] + lam[2] * values[st.vertices[2]];
        }
    }
    f64::NAN
}

/// Safety check: keep a node's enrichment only if it is farther than `1e-14 h` from the interface.
pub fn safety_check(distance: f64, h: f64) -> bool {
    distance > 1e-14 * h
}

/// Vertices of cut elements.
fn cut_vertices(mesh: &UniformMesh, cut: &CutClassification) -> Vec<bool> {
    let mut mark = vec![false; mesh.num_nodes()];
    for &e in &cut.cut_elements {
        for &v in &mesh.elements[e] {
            mark[v] = true;
        }
    }
    mark
}

/// Candidate enriched nodes before the safety check.
pub fn enriched_nodes(scheme: EnrichmentScheme, mesh: &UniformMesh, cut: &CutClassification) -> Result<Vec<usize>> {
    let topo = cut_vertices(mesh, cut);
    let nodes: Vec<usize> = match scheme {
        EnrichmentScheme::None => return Err(Error::InvalidArgument("FEM has no enriched nodes".into())),
        EnrichmentScheme::Topological | EnrichmentScheme::Sgfem => (0..mesh.num_nodes()).filter(|&i| topo[i]).collect(),
        EnrichmentScheme::Geometric { r } => {
            if !(r > 0.0) {
                return Err(Error::InvalidArgument(format!("geometric radius must be positive, got {r}")));
            }
            (0..mesh.num_nodes()).filter(|&i| cut.geometry.distance(mesh.node(i)) <= r).collect()
        }
        EnrichmentScheme::MGfem => {
            let mut mark = vec![false; mesh.num_nodes()];
            for j in (0..mesh.num_nodes()).filter(|&j| topo[j]) {
                for &e in &mesh.patches[j] {
                    for &v in &mesh.elements[e] {
                        mark[v] = true;
                    }
                }
            }
            (0..mesh.num_nodes()).filter(|&i| mark[i]).collect()
        }
    };
    if nodes.is_empty() {
        return Err(Error::NoEnrichment);
    }
    Ok(nodes)
}

/// Builds the enrichment of a scheme from the distance values `wstar`.
pub fn build_enrichment(
    scheme: EnrichmentScheme,
    wstar: &[f64],
    mesh: &UniformMesh,
    cut: &CutClassification,
) -> Result<EnrichedBasis> {
    let candidates = enriched_nodes(scheme, mesh, cut)?;
    let nn = cut.num_nodes;
    let w: Vec<f64> = match scheme {
        EnrichmentScheme::Topological | EnrichmentScheme::Geometric { .. } => wstar.to_vec(),
        EnrichmentScheme::MGfem => {
            let topo = cut_vertices(mesh, cut);
            (0..cut.num_points())
                .map(|id| {
                    if id < nn {
                        if topo[id] {
                            wstar[id]
                        } else {
                            0.0
                        }
                    } else {
                        0.0
                    }
                })
                .collect()
        }
        EnrichmentScheme::Sgfem => (0..cut.num_points())
            .map(|id| {
                if id < nn {
                    0.0
                } else {
                    let ep = cut.points[id - nn];
                    wstar[id] - ((1.0 - ep.t) * wstar[ep.edge[0]] + ep.t * wstar[ep.edge[1]])
                }
            })
            .collect(),
        EnrichmentScheme::None => unreachable!(),
    };
    let (nodes, dropped): (Vec<usize>, Vec<usize>) =
        candidates.into_iter().partition(|&i| safety_check(cut.geometry.distance(mesh.node(i)), mesh.h));
    if nodes.is_empty() {
        return Err(Error::NoEnrichment);
    }
    Ok(EnrichedBasis { scheme, nodes, dropped, w })
}
