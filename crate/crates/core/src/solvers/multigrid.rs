//! Geometric multigrid on the nested uniform meshes `m = 1, 2, 4, ...`.

use crate::assembly::{assemble, scale, Coefficients};
use crate::interface::{classify_elements, subtriangulate, InterfaceGeometry};
use crate::mesh::{build_mesh, UniformMesh};
use crate::par::Exec;
use crate::skyline::SkylineCholesky;
use crate::solvers::relax::{gauss_seidel, sweep_backward, sweep_forward};
use crate::sparse::Csr;
use crate::{Error, Result};

/// Relaxation policy inside V-cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothing {
    /// Forward Gauss-Seidel until the residual stops halving (pre and post).
    Adaptive,
    /// Fixed forward pre-sweeps and backward post-sweeps; a linear symmetric preconditioner.
    Fixed { pre: usize, post: usize },
}

/// One level: its scaled FEM operator and diagonal scaling.
#[derive(Debug, Clone)]
pub struct Level {
    pub m: usize,
    pub a: Csr,
    pub d: Vec<f64>,
}

/// Levels `0..=L` with `m = 2^l`, re-discretized from the interface on every level.
#[derive(Debug, Clone)]
pub struct MeshHierarchy {
    pub levels: Vec<Level>,
    /// `prolong[l]` maps level `l - 1` to level `l` (scaled unknowns); index 0 is unused.
    pub prolong: Vec<Csr>,
    pub restrict: Vec<Csr>,
    coarse: SkylineCholesky,
    pub smoothing: Smoothing,
}

/// Nodal interpolation from the `m` mesh to the `2m` mesh over all nodes.
pub fn nodal_prolongation(coarse: &UniformMesh, fine: &UniformMesh) -> Csr {
    let (mc, mf) = (coarse.m, fine.m);
    assert_eq!(mf, 2 * mc, "meshes must be nested");
    let mut t = Vec::with_capacity(4 * fine.num_nodes());
    for j2 in 0..=mf {
        for j1 in 0..=mf {
            let row = fine.node_id(j1, j2);
            let (i1, i2) = (j1 / 2, j2 / 2);
            match (j1 % 2, j2 % 2) {
                (0, 0) => t.push((row, coarse.node_id(i1, i2), 1.0)),
                (1, 0) => {
                    t.push((row, coarse.node_id(i1, i2), 0.5));
                    t.push((row, coarse.node_id(i1 + 1, i2), 0.5));
                }
                (0, 1) => {
                    t.push((row, coarse.node_id(i1, i2), 0.5));
                    t.push((row, coarse.node_id(i1, i2 + 1), 0.5));
                }
                _ => {
                    t.push((row, coarse.node_id(i1 + 1, i2), 0.5));
                    t.push((row, coarse.node_id(i1, i2 + 1), 0.5));
                }
            }
        }
    }
    Csr::from_triplets(fine.num_nodes(), coarse.num_nodes(), &t)
}

impl MeshHierarchy {
    /// Builds levels up to `m` (a power of two) for the FEM block of the given interface problem.
    pub fn build(
        geom: &InterfaceGeometry,
        coeffs: Coefficients,
        m: usize,
        smoothing: Smoothing,
        exec: Exec,
    ) -> Result<Self> {
        if m == 0 || !m.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("multigrid needs m = 2^L, got {m}")));
        }
        let nlev = m.trailing_zeros() as usize + 1;
        let mut meshes = Vec::with_capacity(nlev);
        let mut levels = Vec::with_capacity(nlev);
        for l in 0..nlev {
            let mesh = build_mesh(1 << l)?;
            let cut = classify_elements(&mesh, geom)?;
            let sub = subtriangulate(&mesh, &cut);
            let sys = assemble(&mesh, &cut, &sub, None, coeffs, exec)?;
            let s = scale(&sys)?;
            levels.push(Level { m: mesh.m, a: s.a11, d: s.d1 });
            meshes.push(mesh);
        }
        let mut prolong = vec![Csr::zeros(0, 0)];
        let mut restrict = vec![Csr::zeros(0, 0)];
        for l in 1..nlev {
            let p = nodal_prolongation(&meshes[l - 1], &meshes[l]);
            // Drop the pinned node (0,0) and switch to scaled unknowns.
            let (nf, nc) = (meshes[l].num_nodes(), meshes[l - 1].num_nodes());
            let (df, dc) = (&levels[l].d, &levels[l - 1].d);
            let mut t = Vec::new();
            for i in 1..nf {
                let (cols, vals) = p.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    if j > 0 {
                        t.push((i - 1, j - 1, v * dc[j - 1] / df[i - 1]));
                    }
                }
            }
            let ps = Csr::from_triplets(nf - 1, nc - 1, &t);
            restrict.push(ps.transpose());
            prolong.push(ps);
        }
        let coarse = SkylineCholesky::factor(&levels[0].a)?;
        Ok(MeshHierarchy { levels, prolong, restrict, coarse, smoothing })
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn finest(&self) -> &Level {
        self.levels.last().expect("at least one level")
    }

    fn pre_smooth(&self, a: &Csr, b: &[f64], x: &mut [f64]) {
        match self.smoothing {
            Smoothing::Adaptive => {
                gauss_seidel(a, b, x);
            }
            Smoothing::Fixed { pre, .. } => (0..pre).for_each(|_| sweep_forward(a, b, x)),
        }
    }

    fn post_smooth(&self, a: &Csr, b: &[f64], x: &mut [f64]) {
        match self.smoothing {
            Smoothing::Adaptive => {
                gauss_seidel(a, b, x);
            }
            Smoothing::Fixed { post, .. } => (0..post).for_each(|_| sweep_backward(a, b, x)),
        }
    }

    /// One V-cycle on `level` for `A x = b`, updating `x` in place.
    pub fn v_cycle(&self, level: usize, b: &[f64], x: &mut [f64]) {
        if level == 0 {
            x.copy_from_slice(&self.coarse.solve(b));
            return;
        }
        let a = &self.levels[level].a;
        self.pre_smooth(a, b, x);
        let r = a.residual(b, x);
        let rc = self.restrict[level].matvec(&r);
        let mut ec = vec![0.0; rc.len()];
        self.v_cycle(level - 1, &rc, &mut ec);
        let corr = self.prolong[level].matvec(&ec);
        x.iter_mut().zip(&corr).for_each(|(xi, c)| *xi += c);
        self.post_smooth(a, b, x);
    }

    /// Full multigrid from a zero guess on the finest level.
    pub fn fmg(&self, b: &[f64]) -> Vec<f64> {
        let top = self.num_levels() - 1;
        let mut rhs = vec![b.to_vec()];
        for l in (1..=top).rev() {
            let next = self.restrict[l].matvec(rhs.last().expect("nonempty"));
            rhs.push(next);
        }
        rhs.reverse();
        let mut x = self.coarse.solve(&rhs[0]);
        for l in 1..=top {
            let mut xf = self.prolong[l].matvec(&x);
            self.v_cycle(l, &rhs[l], &mut xf);
            x = xf;
        }
        x
    }
}
