//! Local P1 / Q1 element matrices and quadrature rules.

use crate::mesh::Point;

/// Stiffness and mass of the linear triangle with vertices `v` (CCW).
pub(crate) fn p1_matrices(v: &[Point]) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
    let b = [v[1][1] - v[2][1], v[2][1] - v[0][1], v[0][1] - v[1][1]];
    let c = [v[2][0] - v[1][0], v[0][0] - v[2][0], v[1][0] - v[0][0]];
    let area = 0.5 * (c[2] * b[1] - c[1] * b[2]);
    let mut k = [[0.0; 3]; 3];
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
            m[i][j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
        }
    }
    (k, m)
}

/// Gauss points on `[0, 1]` (two-point rule), weight 1/2 each.
pub(crate) const GAUSS2: [f64; 2] = [
    0.5 - 0.5 / 1.732_050_807_568_877_2,
    0.5 + 0.5 / 1.732_050_807_568_877_2,
];

/// Bilinear shape functions on the unit square, vertex order
/// `(0,0), (1,0), (1,1), (0,1)`.
pub(crate) fn q1_shape(xi: f64, eta: f64) -> [f64; 4] {
    [
        (1.0 - xi) * (1.0 - eta),
        xi * (1.0 - eta),
        xi * eta,
        (1.0 - xi) * eta,
    ]
}

fn q1_shape_grad(xi: f64, eta: f64) -> [[f64; 2]; 4] {
    [
        [-(1.0 - eta), -(1.0 - xi)],
        [1.0 - eta, -xi],
        [eta, xi],
        [-eta, 1.0 - xi],
    ]
}

/// Maps reference coordinates through the bilinear map of quad `v`.
pub(crate) fn q1_map(v: &[Point], xi: f64, eta: f64) -> Point {
    let n = q1_shape(xi, eta);
    let mut p = [0.0; 2];
    for k in 0..4 {
        p[0] += n[k] * v[k][0];
        p[1] += n[k] * v[k][1];
    }
    p
}

/// Isoparametric bilinear stiffness and mass with 2×2 Gauss quadrature
/// (exact for parallelograms).
pub(crate) fn q1_matrices(v: &[Point]) -> ([[f64; 4]; 4], [[f64; 4]; 4]) {
    let mut k = [[0.0; 4]; 4];
    let mut m = [[0.0; 4]; 4];
    for &xi in &GAUSS2 {
        for &eta in &GAUSS2 {
            let n = q1_shape(xi, eta);
            let dn = q1_shape_grad(xi, eta);
            let mut jac = [[0.0; 2]; 2];
            for a in 0..4 {
                for d in 0..2 {
                    jac[d][0] += v[a][d] * dn[a][0];
                    jac[d][1] += v[a][d] * dn[a][1];
                }
            }
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            let w = 0.25 * det;
            // physical gradient = J^{-T} ∇_ref N
            let grad: Vec<[f64; 2]> = dn
                .iter()
                .map(|g| {
                    [
                        (jac[1][1] * g[0] - jac[1][0] * g[1]) / det,
                        (-jac[0][1] * g[0] + jac[0][0] * g[1]) / det,
                    ]
                })
                .collect();
            for a in 0..4 {
                for b in 0..4 {
                    k[a][b] += w * (grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1]);
                    m[a][b] += w * n[a] * n[b];
                }
            }
        }
    }
    (k, m)
}

/// Interior three-point rule on a triangle (degree 2): barycentric points
/// and weights relative to the area.
pub(crate) const TRI3: [([f64; 3], f64); 3] = [
    ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p1_rows_sum_to_zero_and_mass_to_area() {
        let v = [[0.1, 0.2], [1.3, 0.1], [0.4, 0.9]];
        let (k, m) = p1_matrices(&v);
        let area = crate::mesh::polygon_area(&v);
        for row in k {
            assert!(row.iter().sum::<f64>().abs() < 1e-14);
        }
        let total: f64 = m.iter().flatten().sum();
        assert!((total - area).abs() < 1e-14);
    }

    #[test]
    fn q1_unit_square_reference_values() {
        let (k, m) = q1_matrices(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        assert!((k[0][0] - 2.0 / 3.0).abs() < 1e-14);
        assert!((k[0][1] + 1.0 / 6.0).abs() < 1e-14);
        assert!((k[0][2] + 1.0 / 3.0).abs() < 1e-14);
        assert!((m[0][0] - 1.0 / 9.0).abs() < 1e-14);
        assert!((m[0][2] - 1.0 / 36.0).abs() < 1e-14);
    }
}
