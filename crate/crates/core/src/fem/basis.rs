//! Equispaced Lagrange bases on `[0,1]`, their tensor products, Gauss rules and
//! the biquadratic geometry map.

use crate::meshkit::Point;

/// Gauss–Legendre rule with `n` points on `[0,1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut pts = vec![0.0; n];
    let mut wts = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-like initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        pts[n - 1 - i] = 0.5 * (1.0 + x);
        wts[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (pts, wts)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Values and first derivatives of the degree-`k` equispaced Lagrange basis at `x`.
pub fn lagrange_1d(k: usize, x: f64, val: &mut [f64], der: &mut [f64]) {
    let mut nodes = [0.0; 8];
    for (i, n) in nodes.iter_mut().enumerate().take(k + 1) {
        *n = i as f64 / k as f64;
    }
    for i in 0..=k {
        let mut v = 1.0;
        let mut d = 0.0;
        for m in 0..=k {
            if m == i {
                continue;
            }
            let denom = nodes[i] - nodes[m];
            // product rule accumulated on the fly
            d = d * (x - nodes[m]) / denom + v / denom;
            v *= (x - nodes[m]) / denom;
        }
        val[i] = v;
        der[i] = d;
    }
}

/// Weights of the Lagrange interpolant through arbitrary distinct `nodes`, at `x`.
pub fn lagrange_weights(nodes: &[f64], x: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|i| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != i)
                .map(|(_, &xm)| (x - xm) / (nodes[i] - xm))
                .product()
        })
        .collect()
}

/// Tensor-product Lagrange basis of degree `k` on the reference square,
/// local index `b * (k+1) + a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorBasis {
    pub degree: usize,
}

impl TensorBasis {
    pub fn new(degree: usize) -> Self {
        assert!((1..=3).contains(&degree), "supported degrees are 1..=3");
        Self { degree }
    }

    pub fn n_local(&self) -> usize {
        (self.degree + 1) * (self.degree + 1)
    }

    /// Values and reference gradients at `(xi, eta)`.
    pub fn eval(&self, xi: f64, eta: f64, val: &mut [f64], grad: &mut [[f64; 2]]) {
        let k = self.degree;
        let (mut vx, mut dx, mut vy, mut dy) = ([0.0; 4], [0.0; 4], [0.0; 4], [0.0; 4]);
        lagrange_1d(k, xi, &mut vx, &mut dx);
        lagrange_1d(k, eta, &mut vy, &mut dy);
        for b in 0..=k {
            for a in 0..=k {
                let i = b * (k + 1) + a;
                val[i] = vx[a] * vy[b];
                grad[i] = [dx[a] * vy[b], vx[a] * dy[b]];
            }
        }
    }

    /// Reference coordinates of local node `i`.
    pub fn node(&self, i: usize) -> (f64, f64) {
        let k = self.degree;
        ((i % (k + 1)) as f64 / k as f64, (i / (k + 1)) as f64 / k as f64)
    }

    /// Local indices of the nodes on face `f`, ordered along the face direction.
    pub fn face_nodes(&self, f: usize) -> Vec<usize> {
        let k = self.degree;
        let n = k + 1;
        (0..n)
            .map(|j| match f {
                0 => j,
                1 => j * n + k,
                2 => k * n + j,
                _ => j * n,
            })
            .collect()
    }
}

/// Reference point on face `f` at face parameter `t`.
pub fn face_point(f: usize, t: f64) -> (f64, f64) {
    match f {
        0 => (t, 0.0),
        1 => (1.0, t),
        2 => (t, 1.0),
        _ => (0.0, t),
    }
}

/// Unit outward normal of face `f` from its tangent along the face parameter.
pub(crate) fn face_outward(f: usize, tangent: [f64; 2]) -> [f64; 2] {
    // faces 0 and 1 run counter-clockwise around the cell, 2 and 3 clockwise
    let n = match f {
        0 | 1 => [tangent[1], -tangent[0]],
        _ => [-tangent[1], tangent[0]],
    };
    let len = (n[0] * n[0] + n[1] * n[1]).sqrt();
    [n[0] / len, n[1] / len]
}

/// Biquadratic map of a 9-node cell evaluated at a point.
#[derive(Debug, Clone, Copy)]
pub struct GeometryPoint {
    pub x: Point,
    /// `jac[i][j] = ∂x_i/∂ξ_j`
    pub jac: [[f64; 2]; 2],
    pub det: f64,
    /// `inv[j][i] = ∂ξ_j/∂x_i`
    pub inv: [[f64; 2]; 2],
}

pub fn geometry_at(nodes: &[Point; 9], xi: f64, eta: f64) -> GeometryPoint {
    let mut val = [0.0; 9];
    let mut grad = [[0.0; 2]; 9];
    TensorBasis::new(2).eval(xi, eta, &mut val, &mut grad);
    geometry_from_tables(nodes, &val, &grad)
}

pub fn geometry_from_tables(nodes: &[Point; 9], val: &[f64], grad: &[[f64; 2]]) -> GeometryPoint {
    let mut x = [0.0; 2];
    let mut jac = [[0.0; 2]; 2];
    for a in 0..9 {
        for i in 0..2 {
            x[i] += val[a] * nodes[a][i];
            for j in 0..2 {
                jac[i][j] += nodes[a][i] * grad[a][j];
            }
        }
    }
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    let inv = [
        [jac[1][1] / det, -jac[0][1] / det],
        [-jac[1][0] / det, jac[0][0] / det],
    ];
    GeometryPoint { x, jac, det, inv }
}

impl GeometryPoint {
    /// Physical gradient from a reference gradient.
    #[inline]
    pub fn grad(&self, g: [f64; 2]) -> [f64; 2] {
        [
            g[0] * self.inv[0][0] + g[1] * self.inv[1][0],
            g[0] * self.inv[0][1] + g[1] * self.inv[1][1],
        ]
    }
}

/// Basis tables at the points of a tensor Gauss rule.
#[derive(Debug, Clone)]
pub struct QuadTables {
    pub points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
    pub val: Vec<Vec<f64>>,
    pub grad: Vec<Vec<[f64; 2]>>,
}

impl QuadTables {
    pub fn new(basis: TensorBasis, n: usize) -> Self {
        let (p, w) = gauss_legendre(n);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for j in 0..n {
            for i in 0..n {
                points.push((p[i], p[j]));
                weights.push(w[i] * w[j]);
            }
        }
        Self::at_points(basis, points, weights)
    }

    pub fn at_points(basis: TensorBasis, points: Vec<(f64, f64)>, weights: Vec<f64>) -> Self {
        let nl = basis.n_local();
        let mut val = Vec::with_capacity(points.len());
        let mut grad = Vec::with_capacity(points.len());
        for &(x, y) in &points {
            let mut v = vec![0.0; nl];
            let mut g = vec![[0.0; 2]; nl];
            basis.eval(x, y, &mut v, &mut g);
            val.push(v);
            grad.push(g);
        }
        Self {
            points,
            weights,
            val,
            grad,
        }
    }
}
