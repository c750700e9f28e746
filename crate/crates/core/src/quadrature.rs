//! Quadrature rules on intervals and triangles.

use crate::Point;

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "at least one Gauss point is required");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, refined by Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wt = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wt;
        w[n - 1 - i] = 0.5 * wt;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.5;
    }
    (x, w)
}

/// Barycentric points and weights (summing to one) of a triangle rule.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub bary: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Centroid rule, exact for degree 1.
    pub fn centroid() -> Self {
        TriangleRule { bary: vec![[1.0 / 3.0; 3]], weights: vec![1.0] }
    }

    /// Edge-midpoint rule, exact for degree 2.
    pub fn edge_midpoints() -> Self {
        TriangleRule { bary: vec![[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]], weights: vec![1.0 / 3.0; 3] }
    }

    /// Seven-point rule exact for degree 5.
    pub fn seven_point() -> Self {
        let s = 15f64.sqrt();
        let (a1, b1, w1) = ((6.0 - s) / 21.0, (9.0 + 2.0 * s) / 21.0, (155.0 - s) / 1200.0);
        let (a2, b2, w2) = ((6.0 + s) / 21.0, (9.0 - 2.0 * s) / 21.0, (155.0 + s) / 1200.0);
        TriangleRule {
            bary: vec![
                [1.0 / 3.0; 3],
                [b1, a1, a1],
                [a1, b1, a1],
                [a1, a1, b1],
                [b2, a2, a2],
                [a2, b2, a2],
                [a2, a2, b2],
            ],
            weights: vec![9.0 / 40.0, w1, w1, w1, w2, w2, w2],
        }
    }

    /// Collapsed Gauss product rule with `n * n` points, exact for degree `2n - 2`.
    pub fn collapsed_gauss(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let mut bary = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (i, &u) in x.iter().enumerate() {
            for (j, &v) in x.iter().enumerate() {
                let l1 = u;
                let l2 = v * (1.0 - u);
                bary.push([1.0 - l1 - l2, l1, l2]);
                weights.push(2.0 * w[i] * w[j] * (1.0 - u));
            }
        }
        TriangleRule { bary, weights }
    }

    /// Physical quadrature points of the triangle `t`.
    pub fn points(&self, t: &[Point; 3]) -> Vec<Point> {
        self.bary
            .iter()
            .map(|b| {
                [b[0] * t[0][0] + b[1] * t[1][0] + b[2] * t[2][0], b[0] * t[0][1] + b[1] * t[1][1] + b[2] * t[2][1]]
            })
            .collect()
    }
}

/// Signed area of a triangle (positive when counterclockwise).
pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}
