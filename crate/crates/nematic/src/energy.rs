//! Discrete energies, their first variations, and the operator kernels
//! behind the minimization steps.
//!
//! Everything elastic is expressed through the stiffness graph: with
//! k_ij = -int grad(phi_i) . grad(phi_j), the Dirichlet energy of a nodal
//! field is the weighted sum of squared differences over stored node pairs,
//! and the main energy couples the order parameter s into the director term
//! through the pair weight (s_i^2 + s_j^2)/2. The double-well part is
//! integrated with the positive-weight simplex rule, which is what lets the
//! convex-splitting inequality survive discretization.
//!
//! Sum conventions: public values are written as sums over unordered pairs
//! (each edge once). The consistency modulus keeps its ordered-sum scale,
//! so it is twice the corresponding pair sum.

use crate::error::Result;
use crate::fem::StiffnessGraph;
use crate::fields::{scalar_times_vector, VectorField};
use crate::mesh::Mesh;
use crate::potential::Potential;
use crate::quad::SimplexRule;

fn diff_norm_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

fn diff_dot(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> f64 {
    // (a - b) . (c - d)
    a.iter().zip(b).zip(c.iter().zip(d)).map(|((&x, &y), (&u, &v))| (x - y) * (u - v)).sum()
}

/// int |grad v_h|^2 for a nodal scalar field.
pub fn dirichlet_scalar(graph: &StiffnessGraph, v: &[f64]) -> f64 {
    assert_eq!(v.len(), graph.n());
    graph.pairs().map(|(i, j, k)| k * (v[i] - v[j]) * (v[i] - v[j])).sum()
}

/// int |grad v_h|^2 for a nodal vector field (sum over components).
pub fn dirichlet_vector(graph: &StiffnessGraph, v: &VectorField) -> f64 {
    assert_eq!(v.node_count(), graph.n());
    graph.pairs().map(|(i, j, k)| k * diff_norm_sq(v.node(i), v.node(j))).sum()
}

/// Elastic energy: kappa int |grad s|^2 plus the director term with the
/// pairwise weight (s_i^2 + s_j^2)/2.
pub fn e1h(graph: &StiffnessGraph, kappa: f64, s: &[f64], n: &VectorField) -> f64 {
    assert_eq!(s.len(), graph.n());
    assert_eq!(n.node_count(), graph.n());
    let mut acc = 0.0;
    for (i, j, k) in graph.pairs() {
        let ds = s[i] - s[j];
        let w = 0.5 * (s[i] * s[i] + s[j] * s[j]);
        acc += k * (kappa * ds * ds + w * diff_norm_sq(n.node(i), n.node(j)));
    }
    acc
}

/// Director part of the elastic energy alone (the s-gradient term drops
/// out of every director update, so decrease checks compare this).
pub fn director_energy(graph: &StiffnessGraph, s: &[f64], n: &VectorField) -> f64 {
    assert_eq!(s.len(), graph.n());
    assert_eq!(n.node_count(), graph.n());
    let mut acc = 0.0;
    for (i, j, k) in graph.pairs() {
        let w = 0.5 * (s[i] * s[i] + s[j] * s[j]);
        acc += k * w * diff_norm_sq(n.node(i), n.node(j));
    }
    acc
}

/// Elastic energy in the auxiliary variable u = I_h[s n]:
/// (kappa - 1) int |grad s|^2 + int |grad u|^2.
pub fn e1h_tilde(graph: &StiffnessGraph, kappa: f64, s: &[f64], u: &VectorField) -> f64 {
    (kappa - 1.0) * dirichlet_scalar(graph, s) + dirichlet_vector(graph, u)
}

/// Consistency modulus. For unit directors, e1h = e1h_tilde + c1/4 with
/// u = I_h[s n]; the modulus measures how far the nodal product rule is
/// from exact, and vanishes iff s is constant on every edge where n jumps.
/// Ordered-sum scale (twice the pair sum).
pub fn consistency_c1h(graph: &StiffnessGraph, s: &[f64], n: &VectorField) -> f64 {
    assert_eq!(s.len(), graph.n());
    assert_eq!(n.node_count(), graph.n());
    let mut acc = 0.0;
    for (i, j, k) in graph.pairs() {
        let ds = s[i] - s[j];
        acc += k * ds * ds * diff_norm_sq(n.node(i), n.node(j));
    }
    2.0 * acc
}

/// Nodal absolute value, the scalar half of the (|s|, |s| n) comparison
/// state. Weak acuteness makes its Dirichlet energy no larger than that
/// of s.
pub fn abs_field(s: &[f64]) -> Vec<f64> {
    s.iter().map(|&v| v.abs()).collect()
}

/// Double-well energy int psi(s_h), one quadrature evaluation per point.
/// Values outside the admissible interval are clamped (and counted) by the
/// potential. A disabled potential integrates to zero without touching
/// the mesh.
pub fn e2h(mesh: &Mesh, rule: &SimplexRule, pot: &Potential, s: &[f64]) -> Result<f64> {
    assert_eq!(s.len(), mesh.node_count());
    if !pot.enabled() {
        return Ok(0.0);
    }
    assert_eq!(rule.dim, mesh.dim);
    let nv = mesh.dim + 1;
    let mut acc = 0.0;
    for c in 0..mesh.cell_count() {
        let measure = mesh.cell_measure(c);
        let cell = mesh.cell(c);
        let mut cell_acc = 0.0;
        for (p, &w) in rule.points.iter().zip(&rule.weights) {
            let mut sq = 0.0;
            for a in 0..nv {
                sq += p[a] * s[cell[a]];
            }
            cell_acc += w * pot.eval(sq)?.psi;
        }
        acc += measure * cell_acc;
    }
    Ok(acc)
}

/// First variation of e1h in the director, evaluated at v (no tangency or
/// unit-length assumption; this is the raw derivative of the quadratic
/// form). Pair-sum form of the ordered sum, hence the factor 2.
pub fn var_n_e1h(graph: &StiffnessGraph, s: &[f64], n: &VectorField, v: &VectorField) -> f64 {
    assert_eq!(s.len(), graph.n());
    let mut acc = 0.0;
    for (i, j, k) in graph.pairs() {
        let w = 0.5 * (s[i] * s[i] + s[j] * s[j]);
        acc += k * w * diff_dot(n.node(i), n.node(j), v.node(i), v.node(j));
    }
    2.0 * acc
}

/// Weighted vector Laplacian behind the director variation:
/// out_i = 2 sum_j k_ij (s_i^2 + s_j^2)/2 (v_i - v_j), so that
/// var_n_e1h(s, n, v) = sum_i v_i . (A_n n)_i. The tangential update step
/// restricts this operator to nodal tangent frames.
pub fn an_apply(graph: &StiffnessGraph, s: &[f64], v: &VectorField, out: &mut VectorField) {
    assert_eq!(v.node_count(), graph.n());
    assert_eq!(out.node_count(), graph.n());
    assert_eq!(v.dim(), out.dim());
    let dim = v.dim();
    out.data_mut().fill(0.0);
    let vd = v.data();
    let od = out.data_mut();
    for (i, j, k) in graph.pairs() {
        let c = 2.0 * k * 0.5 * (s[i] * s[i] + s[j] * s[j]);
        for d in 0..dim {
            let diff = vd[i * dim + d] - vd[j * dim + d];
            od[i * dim + d] += c * diff;
            od[j * dim + d] -= c * diff;
        }
    }
}

/// Nodal diagonal of the weighted vector Laplacian: 2 sum_j k_ij w_ij.
/// Also the diagonal of its restriction to any unit tangent frame.
pub fn an_node_diag(graph: &StiffnessGraph, s: &[f64]) -> Vec<f64> {
    let mut d = vec![0.0; graph.n()];
    for (i, j, k) in graph.pairs() {
        let c = 2.0 * k * 0.5 * (s[i] * s[i] + s[j] * s[j]);
        d[i] += c;
        d[j] += c;
    }
    d
}

/// Scalar graph Laplacian out_i = 2 sum_j k_ij (x_i - x_j). Equal to -2 K x
/// for the assembled stiffness matrix, which is how it is computed.
pub fn laplace_apply(graph: &StiffnessGraph, x: &[f64], out: &mut [f64]) {
    graph.csr.matvec(x, out);
    for v in out.iter_mut() {
        *v *= -2.0;
    }
}

/// Director-jump diagonal D_ii = sum_j k_ij |n_i - n_j|^2, the coefficient
/// of s_i in the s-variation of the coupling term.
pub fn director_diag(graph: &StiffnessGraph, n: &VectorField) -> Vec<f64> {
    let mut d = vec![0.0; graph.n()];
    for (i, j, k) in graph.pairs() {
        let jump = k * diff_norm_sq(n.node(i), n.node(j));
        d[i] += jump;
        d[j] += jump;
    }
    d
}

/// First variation of e1h in s along z: z^T (kappa L + D) s with L the
/// scalar graph Laplacian and D the director-jump diagonal.
pub fn var_s_e1h(graph: &StiffnessGraph, kappa: f64, s: &[f64], n: &VectorField, z: &[f64]) -> f64 {
    assert_eq!(z.len(), graph.n());
    let mut acc = 0.0;
    for (i, j, k) in graph.pairs() {
        let elastic = 2.0 * kappa * (s[i] - s[j]) * (z[i] - z[j]);
        let jump = diff_norm_sq(n.node(i), n.node(j));
        acc += k * (elastic + jump * (s[i] * z[i] + s[j] * z[j]));
    }
    acc
}

/// Nodal load Q_i = int f(s_h) phi_i, with f applied to the interpolated
/// value at each quadrature point. This is the building block for the
/// double-well terms of the implicit s-update.
pub fn potential_load(
    mesh: &Mesh,
    rule: &SimplexRule,
    s: &[f64],
    f: impl Fn(f64) -> Result<f64>,
) -> Result<Vec<f64>> {
    assert_eq!(s.len(), mesh.node_count());
    assert_eq!(rule.dim, mesh.dim);
    let nv = mesh.dim + 1;
    let mut q = vec![0.0; mesh.node_count()];
    for c in 0..mesh.cell_count() {
        let measure = mesh.cell_measure(c);
        let cell = mesh.cell(c);
        for (p, &w) in rule.points.iter().zip(&rule.weights) {
            let mut sq = 0.0;
            for a in 0..nv {
                sq += p[a] * s[cell[a]];
            }
            let fv = measure * w * f(sq)?;
            for a in 0..nv {
                q[cell[a]] += fv * p[a];
            }
        }
    }
    Ok(q)
}

/// Weighted mass action y_i = int w(s_h) z_h phi_i, the Jacobian block of
/// the double-well term when psi_c' is not affine.
pub fn weighted_mass_apply(
    mesh: &Mesh,
    rule: &SimplexRule,
    s: &[f64],
    w: impl Fn(f64) -> f64,
    z: &[f64],
) -> Result<Vec<f64>> {
    assert_eq!(s.len(), mesh.node_count());
    assert_eq!(z.len(), mesh.node_count());
    assert_eq!(rule.dim, mesh.dim);
    let nv = mesh.dim + 1;
    let mut y = vec![0.0; mesh.node_count()];
    for c in 0..mesh.cell_count() {
        let measure = mesh.cell_measure(c);
        let cell = mesh.cell(c);
        for (p, &wq) in rule.points.iter().zip(&rule.weights) {
            let mut sq = 0.0;
            let mut zq = 0.0;
            for a in 0..nv {
                sq += p[a] * s[cell[a]];
                zq += p[a] * z[cell[a]];
            }
            let fv = measure * wq * w(sq) * zq;
            for a in 0..nv {
                y[cell[a]] += fv * p[a];
            }
        }
    }
    Ok(y)
}

/// Convex-splitting pairing int [psi_c'(a_h) - psi_e'(b_h)] z_h. With
/// a = b it is the true first variation of e2h; with (a, b) a step pair it
/// is the right side of the energy-decrease inequality.
pub fn var_s_e2h(
    mesh: &Mesh,
    rule: &SimplexRule,
    pot: &Potential,
    s_new: &[f64],
    s_old: &[f64],
    z: &[f64],
) -> Result<f64> {
    assert_eq!(s_new.len(), mesh.node_count());
    assert_eq!(s_old.len(), mesh.node_count());
    assert_eq!(z.len(), mesh.node_count());
    if !pot.enabled() {
        return Ok(0.0);
    }
    assert_eq!(rule.dim, mesh.dim);
    let nv = mesh.dim + 1;
    let mut acc = 0.0;
    for c in 0..mesh.cell_count() {
        let measure = mesh.cell_measure(c);
        let cell = mesh.cell(c);
        for (p, &w) in rule.points.iter().zip(&rule.weights) {
            let mut aq = 0.0;
            let mut bq = 0.0;
            let mut zq = 0.0;
            for a in 0..nv {
                aq += p[a] * s_new[cell[a]];
                bq += p[a] * s_old[cell[a]];
                zq += p[a] * z[cell[a]];
            }
            let deriv = pot.eval(aq)?.psi_c_prime - pot.eval(bq)?.psi_e_prime;
            acc += measure * w * deriv * zq;
        }
    }
    Ok(acc)
}

/// All energy components of one state, with the auxiliary-variable split.
#[derive(Debug, Clone, Copy)]
pub struct EnergyBreakdown {
    pub e1: f64,
    pub e2: f64,
    pub total: f64,
    pub e1_tilde: f64,
    pub c1: f64,
}

/// Evaluate every energy component at (s, n), building u = I_h[s n]
/// internally for the auxiliary form.
pub fn breakdown(
    mesh: &Mesh,
    graph: &StiffnessGraph,
    rule: &SimplexRule,
    pot: &Potential,
    kappa: f64,
    s: &[f64],
    n: &VectorField,
) -> Result<EnergyBreakdown> {
    let e1 = e1h(graph, kappa, s, n);
    let e2 = e2h(mesh, rule, pot, s)?;
    let u = scalar_times_vector(s, n);
    let e1_tilde = e1h_tilde(graph, kappa, s, &u);
    let c1 = consistency_c1h(graph, s, n);
    Ok(EnergyBreakdown { e1, e2, total: e1 + e2, e1_tilde, c1 })
}
