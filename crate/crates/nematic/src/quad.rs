//! Positive-weight quadrature on reference simplices.
//!
//! The double-well potential is quartic, so element integrals of psi(s_h)
//! need a rule exact to degree 4. The rules here are tensor Gauss-Legendre
//! rules mapped to the simplex (collapsed-coordinate construction), which
//! keeps every weight strictly positive. Positivity is not cosmetic: the
//! convex-splitting inequality and the projection-step energy decrease are
//! pointwise convexity arguments, and they survive discretization only if
//! the quadrature weights are nonnegative.

/// Quadrature rule on the reference simplex, stored in barycentric
/// coordinates. Weights are fractions of the cell measure and sum to 1, so
/// an element integral is `measure * sum_q w_q f(x_q)`.
#[derive(Debug, Clone)]
pub struct SimplexRule {
    pub dim: usize,
    /// Barycentric coordinates per point; the first dim+1 entries are used.
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

// Gauss-Legendre nodes and weights on [-1, 1].
const GL3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];
const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_86),
    (-0.339_981_043_584_856_26, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_26, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_86),
];

/// Map a [-1, 1] rule to [0, 1]; weights then sum to 1.
fn gl_unit(rule: &[(f64, f64)]) -> Vec<(f64, f64)> {
    rule.iter().map(|&(x, w)| (0.5 * (1.0 + x), 0.5 * w)).collect()
}

/// 9-point triangle rule, exact for polynomials of total degree 4.
///
/// Uses the map x = u, y = v(1-u) from the unit square, with Jacobian
/// (1-u). A degree-4 monomial becomes degree at most 5 in u and 4 in v,
/// both inside the 3-point Gauss-Legendre exactness range.
pub fn triangle_rule() -> SimplexRule {
    let g = gl_unit(&GL3);
    let mut points = Vec::with_capacity(9);
    let mut weights = Vec::with_capacity(9);
    for &(u, wu) in &g {
        for &(v, wv) in &g {
            let x = u;
            let y = v * (1.0 - u);
            points.push([1.0 - x - y, x, y, 0.0]);
            // Jacobian (1-u); times 2 so weights are fractions of the area.
            weights.push(wu * wv * (1.0 - u) * 2.0);
        }
    }
    SimplexRule { dim: 2, points, weights }
}

/// 36-point tetrahedron rule, exact for polynomials of total degree 4.
///
/// Uses x = u, y = v(1-u), z = w(1-u)(1-v) with Jacobian (1-u)^2 (1-v).
/// The Jacobian raises the u-degree to at most 6, which needs the 4-point
/// Gauss-Legendre rule in that direction.
pub fn tet_rule() -> SimplexRule {
    let gu = gl_unit(&GL4);
    let gv = gl_unit(&GL3);
    let gw = gl_unit(&GL3);
    let mut points = Vec::with_capacity(36);
    let mut weights = Vec::with_capacity(36);
    for &(u, wu) in &gu {
        for &(v, wv) in &gv {
            for &(w, ww) in &gw {
                let x = u;
                let y = v * (1.0 - u);
                let z = w * (1.0 - u) * (1.0 - v);
                points.push([1.0 - x - y - z, x, y, z]);
                // Jacobian (1-u)^2 (1-v); times 6 for weight fractions.
                weights.push(wu * wv * ww * (1.0 - u) * (1.0 - u) * (1.0 - v) * 6.0);
            }
        }
    }
    SimplexRule { dim: 3, points, weights }
}

/// Rule for the given spatial dimension (2 or 3).
pub fn rule_for_dim(dim: usize) -> SimplexRule {
    match dim {
        2 => triangle_rule(),
        3 => tet_rule(),
        _ => panic!("no simplex rule for dimension {dim}"),
    }
}
