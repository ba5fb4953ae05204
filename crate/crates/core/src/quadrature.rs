//! Gauss-type quadrature on the reference triangle and the reference edge.
//!
//! Reference triangle: `{(x, y) : x, y >= 0, x + y <= 1}` (area 1/2). Points
//! are stored as barycentric triples `(1 - x - y, x, y)`. Reference edge:
//! `[0, 1]`. Every rule has strictly positive weights and interior points.

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

pub const MAX_DEGREE: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRule {
    pub degree: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

impl EdgeRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Chebyshev-like initial guess, refined by Newton on P_m.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]
        nodes[i] = 0.5 * (1.0 - x);
        nodes[m - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[m - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Rule on the reference triangle exact for total degree `<= degree`.
pub fn triangle_rule(degree: usize) -> Result<TriangleRule> {
    if !(1..=MAX_DEGREE).contains(&degree) {
        return Err(Error::invalid(format!("triangle rule degree {degree} outside supported range 1..={MAX_DEGREE}")));
    }
    let (points, weights) = match degree {
        1 => (vec![[1.0 / 3.0; 3]], vec![0.5]),
        2 => {
            let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
            (vec![[a, b, b], [b, a, b], [b, b, a]], vec![1.0 / 6.0; 3])
        }
        5 => radon7(),
        d => collapsed_gauss(d),
    };
    Ok(TriangleRule { degree, points, weights })
}

// Seven-point degree-5 rule with closed-form nodes.
fn radon7() -> (Vec<[f64; 3]>, Vec<f64>) {
    let s15 = 15f64.sqrt();
    let a = (6.0 - s15) / 21.0;
    let b = (6.0 + s15) / 21.0;
    let wa = (155.0 - s15) / 2400.0;
    let wb = (155.0 + s15) / 2400.0;
    let points = vec![
        [1.0 / 3.0; 3],
        [1.0 - 2.0 * a, a, a],
        [a, 1.0 - 2.0 * a, a],
        [a, a, 1.0 - 2.0 * a],
        [1.0 - 2.0 * b, b, b],
        [b, 1.0 - 2.0 * b, b],
        [b, b, 1.0 - 2.0 * b],
    ];
    let weights = vec![9.0 / 80.0, wa, wa, wa, wb, wb, wb];
    (points, weights)
}

// Tensor Gauss rule on the square pulled back through (s, t) -> (s, (1 - s) t).
// The Jacobian (1 - s) raises the degree in s by one.
fn collapsed_gauss(degree: usize) -> (Vec<[f64; 3]>, Vec<f64>) {
    let ms = (degree + 2).div_ceil(2);
    let mt = (degree + 1).div_ceil(2);
    let (xs, ws) = gauss_legendre(ms);
    let (xt, wt) = gauss_legendre(mt);
    let mut points = Vec::with_capacity(ms * mt);
    let mut weights = Vec::with_capacity(ms * mt);
    for (&s, &wsi) in xs.iter().zip(&ws) {
        for (&t, &wti) in xt.iter().zip(&wt) {
            let x = s;
            let y = (1.0 - s) * t;
            points.push([1.0 - x - y, x, y]);
            weights.push(wsi * wti * (1.0 - s));
        }
    }
    (points, weights)
}

/// Gauss-Legendre rule on `[0, 1]` exact for degree `<= degree`.
pub fn edge_rule(degree: usize) -> Result<EdgeRule> {
    if !(1..=MAX_DEGREE).contains(&degree) {
        return Err(Error::invalid(format!("edge rule degree {degree} outside supported range 1..={MAX_DEGREE}")));
    }
    let (points, weights) = gauss_legendre((degree + 1).div_ceil(2));
    Ok(EdgeRule { degree, points, weights })
}

/// Affine-mapped quadrature `sum_q w_q |det J| f(x_q)` over one cell.
pub fn integrate_cell(mesh: &Mesh, cell: usize, integrand: impl Fn(Point) -> f64, rule: &TriangleRule) -> f64 {
    let g = mesh.geometry(cell);
    let jac = 2.0 * g.area;
    rule.points.iter().zip(&rule.weights).map(|(&lam, &w)| w * integrand(g.point(lam))).sum::<f64>() * jac
}

/// Sum of [`integrate_cell`] over all cells.
pub fn integrate_mesh(mesh: &Mesh, integrand: impl Fn(Point) -> f64, rule: &TriangleRule) -> f64 {
    (0..mesh.n_cells()).map(|c| integrate_cell(mesh, c, &integrand, rule)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_rect_mesh, Rect};

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    fn monomial_exact(a: usize, b: usize) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    fn apply(rule: &TriangleRule, f: impl Fn(f64, f64) -> f64) -> f64 {
        rule.points.iter().zip(&rule.weights).map(|(p, w)| w * f(p[1], p[2])).sum()
    }

    #[test]
    fn monomial_table_all_degrees() {
        for d in 1..=MAX_DEGREE {
            let rule = triangle_rule(d).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0), "degree {d}");
            assert!(rule.points.iter().all(|p| p.iter().all(|&l| l > 0.0 && l < 1.0)));
            for a in 0..=d {
                for b in 0..=(d - a) {
                    let q = apply(&rule, |x, y| x.powi(a as i32) * y.powi(b as i32));
                    let exact = monomial_exact(a, b);
                    assert!(
                        (q - exact).abs() < 1e-15 + 1e-13 * exact,
                        "degree {d} monomial x^{a} y^{b}: {q} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn published_examples() {
        let r1 = triangle_rule(1).unwrap();
        assert!((apply(&r1, |_, _| 1.0) - 0.5).abs() < 1e-16);
        let r2 = triangle_rule(2).unwrap();
        assert!((apply(&r2, |x, y| x * y) - 1.0 / 24.0).abs() < 1e-16);
        let r4 = triangle_rule(4).unwrap();
        assert!((apply(&r4, |x, _| x.powi(4)) - 1.0 / 30.0).abs() < 1e-15);
    }

    #[test]
    fn unsupported_degrees() {
        assert!(triangle_rule(0).is_err());
        assert!(triangle_rule(11).is_err());
        assert!(edge_rule(0).is_err());
        assert!(edge_rule(11).is_err());
    }

    #[test]
    fn edge_rules() {
        for d in 1..=MAX_DEGREE {
            let r = edge_rule(d).unwrap();
            assert!(r.weights.iter().all(|&w| w > 0.0));
            let total: f64 = r.weights.iter().sum();
            assert!((total - 1.0).abs() < 1e-15);
            for p in 0..=d {
                let q: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| w * x.powi(p as i32)).sum();
                assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "degree {d}, x^{p}");
            }
        }
        let r3 = edge_rule(3).unwrap();
        let q: f64 = r3.points.iter().zip(&r3.weights).map(|(x, w)| w * x.powi(3)).sum();
        assert!((q - 0.25).abs() < 1e-16);
    }

    #[test]
    fn cell_integration() {
        let mesh = generate_rect_mesh(Rect::new(0.0, 0.0, 2.0, 1.0), 3).unwrap();
        let r1 = triangle_rule(1).unwrap();
        for c in 0..mesh.n_cells() {
            let area = integrate_cell(&mesh, c, |_| 1.0, &r1);
            assert!((area - mesh.geometry(c).area).abs() < 1e-15);
            // linear integrand: exact value is area * f(centroid)
            let f = |p: Point| 3.0 * p[0] - 2.0 * p[1] + 0.5;
            let ctr = mesh.geometry(c).centroid();
            let q = integrate_cell(&mesh, c, f, &r1);
            assert!((q - mesh.geometry(c).area * f(ctr)).abs() < 1e-14);
        }
    }

    #[test]
    fn sine_product_over_unit_square() {
        use std::f64::consts::PI;
        let mesh = generate_rect_mesh(Rect::unit(), 32).unwrap();
        let rule = triangle_rule(6).unwrap();
        let q = integrate_mesh(&mesh, |p| (PI * p[0]).sin() * (PI * p[1]).sin(), &rule);
        assert!((q - 4.0 / (PI * PI)).abs() < 1e-6);
    }

    #[test]
    fn rotation_invariance() {
        use crate::mesh::CellGeometry;
        let verts = [[0.2, 0.1], [1.1, 0.3], [0.4, 0.9]];
        let f = |p: Point| p[0].powi(3) * p[1] - 2.0 * p[0] * p[1] * p[1] + p[1].powi(4);
        for d in [4, 5, 6, 8] {
            let rule = triangle_rule(d).unwrap();
            let mut results = Vec::new();
            for r in 0..3 {
                let g = CellGeometry::new([verts[r], verts[(r + 1) % 3], verts[(r + 2) % 3]]);
                let q: f64 =
                    rule.points.iter().zip(&rule.weights).map(|(&l, &w)| w * f(g.point(l))).sum::<f64>() * 2.0 * g.area;
                results.push(q);
            }
            assert!((results[0] - results[1]).abs() < 1e-13);
            assert!((results[0] - results[2]).abs() < 1e-13);
        }
    }
}
