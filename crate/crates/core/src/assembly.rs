//! Block stiffness assembly, boundary loads and unit-diagonal scaling.

use crate::enrichment::EnrichedBasis;
use crate::interface::{CutClassification, Side, SubTriangulation};
use crate::mesh::UniformMesh;
use crate::par::{map_range, Exec};
use crate::quadrature::gauss_legendre;
use crate::skyline::SkylineCholesky;
use crate::sparse::{block_matrix, dot, Csr};
use crate::{Error, Point, Result};

/// Piecewise-constant coefficient: `a0` on `Omega0`, `a1` on `Omega1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub a0: f64,
    pub a1: f64,
}

impl Coefficients {
    pub fn new(a0: f64, a1: f64) -> Result<Self> {
        if !(a0 > 0.0 && a1 > 0.0) {
            return Err(Error::InvalidArgument(format!("coefficients must be positive, got a0={a0}, a1={a1}")));
        }
        Ok(Coefficients { a0, a1 })
    }

    pub fn on(&self, side: Side) -> f64 {
        match side {
            Side::Omega0 => self.a0,
            Side::Omega1 => self.a1,
        }
    }
}

/// Unscaled 2x2 block system. FEM unknowns cover every node but `(0, 0)`.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub a11: Csr,
    pub a12: Csr,
    pub a22: Csr,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    /// Row index to node id.
    pub fem_nodes: Vec<usize>,
    pub enr_nodes: Vec<usize>,
    /// Node id to row index.
    pub fem_dof: Vec<Option<usize>>,
    pub enr_dof: Vec<Option<usize>>,
    /// Load entry of the pinned node, kept for bookkeeping.
    pub pinned_load: f64,
    /// Enriched nodes removed because their stiffness diagonal vanished.
    pub removed_enrichment: Vec<usize>,
}

impl BlockSystem {
    pub fn n1(&self) -> usize {
        self.a11.nrows
    }

    pub fn n2(&self) -> usize {
        self.a22.nrows
    }

    pub fn full_matrix(&self) -> Csr {
        block_matrix(&self.a11, &self.a12, &self.a22)
    }

    /// Full-system ordering that interleaves the FEM and enrichment unknowns of each node.
    pub fn interleaved_order(&self) -> Vec<usize> {
        let n1 = self.n1();
        let mut perm = Vec::with_capacity(n1 + self.n2());
        for node in 0..self.fem_dof.len() {
            if let Some(r) = self.fem_dof[node] {
                perm.push(r);
            }
            if let Some(r) = self.enr_dof[node] {
                perm.push(n1 + r);
            }
        }
        perm
    }
}

/// Scaled system `A = D A_hat D` with unit diagonal and `f = D f_hat`.
#[derive(Debug, Clone)]
pub struct ScaledSystem {
    pub a11: Csr,
    pub a12: Csr,
    pub a21: Csr,
    pub a22: Csr,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    order: Vec<usize>,
}

impl ScaledSystem {
    /// Wraps blocks used as they are (`D = I`), e.g. synthetic test systems.
    pub fn from_blocks(a11: Csr, a12: Csr, a22: Csr, f1: Vec<f64>, f2: Vec<f64>) -> Self {
        let (n1, n2) = (a11.nrows, a22.nrows);
        ScaledSystem {
            a21: a12.transpose(),
            a11,
            a12,
            a22,
            f1,
            f2,
            d1: vec![1.0; n1],
            d2: vec![1.0; n2],
            order: (0..n1 + n2).collect(),
        }
    }

    pub fn n1(&self) -> usize {
        self.a11.nrows
    }

    pub fn n2(&self) -> usize {
        self.a22.nrows
    }

    pub fn has_enrichment(&self) -> bool {
        self.n2() > 0
    }

    pub fn full_matrix(&self) -> Csr {
        block_matrix(&self.a11, &self.a12, &self.a22)
    }

    pub fn full_rhs(&self) -> Vec<f64> {
        self.f1.iter().chain(&self.f2).copied().collect()
    }

    /// Node-interleaved ordering of the full system (small envelope).
    pub fn interleaved_order(&self) -> &[usize] {
        &self.order
    }

    /// Unscaled coefficients `c_hat = D x`.
    pub fn unscale(&self, x1: &[f64], x2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (x1.iter().zip(&self.d1).map(|(x, d)| x * d).collect(), x2.iter().zip(&self.d2).map(|(x, d)| x * d).collect())
    }

    /// `B(v, v)` for the scaled coefficient vectors.
    pub fn energy_sq(&self, x1: &[f64], x2: &[f64]) -> f64 {
        let mut e = dot(x1, &self.a11.matvec(x1));
        if self.has_enrichment() {
            e += 2.0 * dot(x1, &self.a12.matvec(x2)) + dot(x2, &self.a22.matvec(x2));
        }
        e
    }

    /// Direct solution of the full scaled system.
    pub fn solve_direct(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let a = self.full_matrix();
        let chol = SkylineCholesky::factor_permuted(&a, self.order.clone())?;
        let x = chol.solve(&self.full_rhs());
        let n1 = self.n1();
        Ok((x[..n1].to_vec(), x[n1..].to_vec()))
    }
}

/// Scales a block system to unit diagonal.
pub fn scale(sys: &BlockSystem) -> Result<ScaledSystem> {
    let inv_sqrt = |block: &'static str, a: &Csr| -> Result<Vec<f64>> {
        a.diagonal()
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                if v > 0.0 {
                    Ok(1.0 / v.sqrt())
                } else {
                    Err(Error::NonPositiveDiagonal { block, index: i, value: v })
                }
            })
            .collect()
    };
    let d1 = inv_sqrt("A11", &sys.a11)?;
    let d2 = inv_sqrt("A22", &sys.a22)?;
    let a12 = sys.a12.scaled(&d1, &d2);
    Ok(ScaledSystem {
        a11: sys.a11.scaled(&d1, &d1),
        a21: a12.transpose(),
        a12,
        a22: sys.a22.scaled(&d2, &d2),
        f1: sys.f1.iter().zip(&d1).map(|(f, d)| f * d).collect(),
        f2: sys.f2.iter().zip(&d2).map(|(f, d)| f * d).collect(),
        d1,
        d2,
        order: sys.interleaved_order(),
    })
}

/// Element matrix over `[N_0, N_1, N_2, w N_0, w N_1, w N_2]`.
type Local = [[f64; 6]; 6];

fn element_matrix(
    mesh: &UniformMesh,
    cut: &CutClassification,
    sub: &SubTriangulation,
    basis: Option<&EnrichedBasis>,
    enriched: &[bool],
    coeffs: Coefficients,
    e: usize,
) -> Local {
    let mut k = [[0.0; 6]; 6];
    let g = mesh.hat_gradients(e);
    let tri = mesh.elements[e];
    let pe = mesh.element_points(e);
    let any_enriched = basis.is_some() && tri.iter().any(|&v| enriched[v]);
    for st in sub.of_element(e) {
        let a = coeffs.on(st.side) * st.area;
        for i in 0..3 {
            for j in 0..3 {
                k[i][j] += a * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
            }
        }
        if !any_enriched {
            continue;
        }
        let basis = basis.expect("checked above");
        let sp: [Point; 3] = [cut.point(st.vertices[0]), cut.point(st.vertices[1]), cut.point(st.vertices[2])];
        let sw = [basis.w[st.vertices[0]], basis.w[st.vertices[1]], basis.w[st.vertices[2]]];
        let det = (sp[1][0] - sp[0][0]) * (sp[2][1] - sp[0][1]) - (sp[2][0] - sp[0][0]) * (sp[1][1] - sp[0][1]);
        let gw = [
            ((sw[1] - sw[0]) * (sp[2][1] - sp[0][1]) - (sw[2] - sw[0]) * (sp[1][1] - sp[0][1])) / det,
            ((sw[2] - sw[0]) * (sp[1][0] - sp[0][0]) - (sw[1] - sw[0]) * (sp[2][0] - sp[0][0])) / det,
        ];
        for (qa, qb) in [(0, 1), (1, 2), (2, 0)] {
            let q = [0.5 * (sp[qa][0] + sp[qb][0]), 0.5 * (sp[qa][1] + sp[qb][1])];
            let wq = 0.5 * (sw[qa] + sw[qb]);
            let lam = crate::mesh::barycentric(&pe, q);
            let ge: [Point; 3] =
                std::array::from_fn(|i| [lam[i] * gw[0] + wq * g[i][0], lam[i] * gw[1] + wq * g[i][1]]);
            let wt = a / 3.0;
            for i in 0..3 {
                for j in 0..3 {
                    let fe = g[i][0] * ge[j][0] + g[i][1] * ge[j][1];
                    k[i][3 + j] += wt * fe;
                    k[3 + j][i] += wt * fe;
                    k[3 + i][3 + j] += wt * (ge[i][0] * ge[j][0] + ge[i][1] * ge[j][1]);
                }
            }
        }
    }
    k
}

/// Assembles the stiffness blocks (loads left at zero; see [`assemble_load`]).
pub fn assemble(
    mesh: &UniformMesh,
    cut: &CutClassification,
    sub: &SubTriangulation,
    basis: Option<&EnrichedBasis>,
    coeffs: Coefficients,
    exec: Exec,
) -> Result<BlockSystem> {
    Coefficients::new(coeffs.a0, coeffs.a1)?;
    let nn = mesh.num_nodes();
    let mut enriched = vec![false; nn];
    if let Some(b) = basis {
        for &i in &b.nodes {
            enriched[i] = true;
        }
    }
    let locals: Vec<Local> =
        map_range(exec, mesh.num_elements(), |e| element_matrix(mesh, cut, sub, basis, &enriched, coeffs, e));

    // Enrichment unknowns whose diagonal vanishes carry no information.
    let mut diag = vec![0.0; nn];
    let mut scale_ref: f64 = 0.0;
    for (e, k) in locals.iter().enumerate() {
        for (a, &v) in mesh.elements[e].iter().enumerate() {
            diag[v] += k[3 + a][3 + a];
            scale_ref = scale_ref.max(k[a][a]);
        }
    }
    let mut removed = Vec::new();
    for i in 0..nn {
        if enriched[i] && !(diag[i] > 1e-30 * scale_ref) {
            enriched[i] = false;
            removed.push(i);
        }
    }

    let mut fem_dof = vec![None; nn];
    let mut fem_nodes = Vec::with_capacity(nn - 1);
    for i in 1..nn {
        fem_dof[i] = Some(fem_nodes.len());
        fem_nodes.push(i);
    }
    let mut enr_dof = vec![None; nn];
    let mut enr_nodes = Vec::new();
    for i in 0..nn {
        if enriched[i] {
            enr_dof[i] = Some(enr_nodes.len());
            enr_nodes.push(i);
        }
    }
    let (n1, n2) = (fem_nodes.len(), enr_nodes.len());
    let mut t11 = Vec::with_capacity(9 * mesh.num_elements());
    let mut t12 = Vec::new();
    let mut t22 = Vec::new();
    for (e, k) in locals.iter().enumerate() {
        let tri = mesh.elements[e];
        for a in 0..3 {
            for b in 0..3 {
                let (ra, rb) = (fem_dof[tri[a]], fem_dof[tri[b]]);
                let (sa, sb) = (enr_dof[tri[a]], enr_dof[tri[b]]);
                if let (Some(i), Some(j)) = (ra, rb) {
                    t11.push((i, j, k[a][b]));
                }
                if let (Some(i), Some(j)) = (ra, sb) {
                    t12.push((i, j, k[a][3 + b]));
                }
                if let (Some(i), Some(j)) = (sa, sb) {
                    t22.push((i, j, k[3 + a][3 + b]));
                }
            }
        }
    }
    Ok(BlockSystem {
        a11: Csr::from_triplets(n1, n1, &t11),
        a12: Csr::from_triplets(n1, n2, &t12),
        a22: Csr::from_triplets(n2, n2, &t22),
        f1: vec![0.0; n1],
        f2: vec![0.0; n2],
        fem_nodes,
        enr_nodes,
        fem_dof,
        enr_dof,
        pinned_load: 0.0,
        removed_enrichment: removed,
    })
}

/// Adds `F(v) = int_{boundary} g_N v` to the load vectors (8-point Gauss per
/// boundary segment, segments split at interface crossings).
pub fn assemble_load(
    sys: &mut BlockSystem,
    mesh: &UniformMesh,
    cut: &CutClassification,
    basis: Option<&EnrichedBasis>,
    g_n: &dyn Fn(Point, Point) -> f64,
) {
    let (x, wts) = gauss_legendre(8);
    for be in mesh.boundary_edges() {
        let [n0, n1] = be.nodes;
        let (p0, p1) = (mesh.node(n0), mesh.node(n1));
        let len = mesh.h;
        let normal = be.side.normal();
        let mut ids = vec![n0];
        ids.extend(cut.edge_points(n0, n1));
        ids.push(n1);
        let param = |p: Point| ((p[0] - p0[0]).abs() + (p[1] - p0[1]).abs()) / len;
        for seg in ids.windows(2) {
            let (qa, qb) = (cut.point(seg[0]), cut.point(seg[1]));
            let (ta, tb) = (param(qa), param(qb));
            let (wa, wb) = basis.map_or((0.0, 0.0), |b| (b.w[seg[0]], b.w[seg[1]]));
            let seg_len = (tb - ta) * len;
            for (xi, wi) in x.iter().zip(&wts) {
                let tau = ta + xi * (tb - ta);
                let pt = [p0[0] + tau * (p1[0] - p0[0]), p0[1] + tau * (p1[1] - p0[1])];
                let g = g_n(pt, normal) * wi * seg_len;
                let wv = wa + xi * (wb - wa);
                for (node, nval) in [(n0, 1.0 - tau), (n1, tau)] {
                    match sys.fem_dof[node] {
                        Some(r) => sys.f1[r] += g * nval,
                        None => sys.pinned_load += g * nval,
                    }
                    if let Some(r) = sys.enr_dof[node] {
                        sys.f2[r] += g * wv * nval;
                    }
                }
            }
        }
    }
}
