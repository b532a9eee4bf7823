//! Stiffness graph, mass matrices, acuteness checks, and interpolation for
//! piecewise linear Lagrange elements.
//!
//! The central object is the node-pair stiffness graph with entries
//! k_ij = -int grad(phi_i) . grad(phi_j). Its rows sum to zero (hat
//! functions are a partition of unity), so every Dirichlet integral of a
//! nodal field v can be written as the pair sum
//!
//!   int |grad v_h|^2 = sum_{i<j} k_ij (v_i - v_j)^2,
//!
//! and weak acuteness of the mesh is exactly nonnegativity of the
//! off-diagonal k_ij. Everything downstream (energies, variations, the
//! flow) works on this graph rather than on element matrices.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fields::VectorField;
use crate::mesh::Mesh;
use crate::quad::SimplexRule;

/// Symmetric sparse matrix in compressed row storage. Both triangles are
/// stored; column indices are sorted within each row.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub val: Vec<f64>,
}

impl Csr {
    pub fn from_row_maps(rows: Vec<BTreeMap<usize, f64>>) -> Csr {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut val = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (j, v) in row {
                col_idx.push(j);
                val.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Csr { n, row_ptr, col_idx, val }
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Entry (i, j); absent entries are zero.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(pos) => self.val[lo + pos],
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi].iter().copied().zip(self.val[lo..hi].iter().copied())
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for (j, v) in self.row(i) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
    }
}

/// The node-pair stiffness graph k_ij (diagonal included).
#[derive(Debug, Clone)]
pub struct StiffnessGraph {
    pub csr: Csr,
}

impl StiffnessGraph {
    pub fn n(&self) -> usize {
        self.csr.n
    }

    pub fn k(&self, i: usize, j: usize) -> f64 {
        self.csr.entry(i, j)
    }

    /// Stored unordered pairs i < j (off-diagonal entries, each once).
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n()).flat_map(move |i| {
            self.csr.row(i).filter(move |&(j, _)| j > i).map(move |(j, k)| (i, j, k))
        })
    }

    /// Neighbors of node i with their k_ij (diagonal skipped).
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.csr.row(i).filter(move |&(j, _)| j != i)
    }

    pub fn min_offdiag(&self) -> f64 {
        self.pairs().map(|(_, _, k)| k).fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_row_sum(&self) -> f64 {
        (0..self.n())
            .map(|i| self.csr.row(i).map(|(_, v)| v).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }
}

/// Measure and barycentric gradients of one cell. Gradients are padded to
/// 3 components; entry g[a] is grad(lambda_a) for local vertex a.
pub fn cell_gradients(mesh: &Mesh, c: usize) -> Result<(f64, [[f64; 3]; 4])> {
    let det = mesh.cell_det(c);
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::Assembly {
            cell: c,
            detail: format!("degenerate or negatively oriented cell (det = {det:.3e})"),
        });
    }
    let cell = mesh.cell(c);
    let p0 = mesh.node(cell[0]);
    let mut g = [[0.0; 3]; 4];
    match mesh.dim {
        2 => {
            let p1 = mesh.node(cell[1]);
            let p2 = mesh.node(cell[2]);
            let b = [[p1[0] - p0[0], p2[0] - p0[0]], [p1[1] - p0[1], p2[1] - p0[1]]];
            // Rows of B^{-1} are the gradients of lambda_1, lambda_2.
            g[1] = [b[1][1] / det, -b[0][1] / det, 0.0];
            g[2] = [-b[1][0] / det, b[0][0] / det, 0.0];
        }
        3 => {
            let p1 = mesh.node(cell[1]);
            let p2 = mesh.node(cell[2]);
            let p3 = mesh.node(cell[3]);
            let b = [
                [p1[0] - p0[0], p2[0] - p0[0], p3[0] - p0[0]],
                [p1[1] - p0[1], p2[1] - p0[1], p3[1] - p0[1]],
                [p1[2] - p0[2], p2[2] - p0[2], p3[2] - p0[2]],
            ];
            // Row a of B^{-1} = (cofactor column a of B) / det.
            for a in 0..3 {
                let (c1, c2) = ((a + 1) % 3, (a + 2) % 3);
                for r in 0..3 {
                    let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
                    // Inverse entry (a, r): cofactor of B[r][a] / det.
                    g[a + 1][r] =
                        (b[r1][c1] * b[r2][c2] - b[r1][c2] * b[r2][c1]) / det;
                }
            }
        }
        _ => unreachable!(),
    }
    for r in 0..3 {
        g[0][r] = -(g[1][r] + g[2][r] + if mesh.dim == 3 { g[3][r] } else { 0.0 });
    }
    let dfac = if mesh.dim == 2 { 2.0 } else { 6.0 };
    Ok((det / dfac, g))
}

/// Assemble k_ij = -int grad(phi_i) . grad(phi_j) over the whole mesh.
pub fn assemble_stiffness(mesh: &Mesh) -> Result<StiffnessGraph> {
    let n = mesh.node_count();
    let nv = mesh.dim + 1;
    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for c in 0..mesh.cell_count() {
        let (measure, g) = cell_gradients(mesh, c)?;
        let cell = mesh.cell(c);
        for a in 0..nv {
            for b in 0..nv {
                let dot: f64 = (0..mesh.dim).map(|r| g[a][r] * g[b][r]).sum();
                *rows[cell[a]].entry(cell[b]).or_insert(0.0) += -measure * dot;
            }
        }
    }
    Ok(StiffnessGraph { csr: Csr::from_row_maps(rows) })
}

/// Tolerance below which an off-diagonal k_ij counts as an acuteness
/// violation; absorbs rounding in exact-zero cases such as the square's
/// diagonal edge.
pub const ACUTE_TOL: f64 = -1e-12;

#[derive(Debug, Clone)]
pub struct AcutenessReport {
    pub min_offdiag: f64,
    /// Pairs (i, j, k_ij) with k_ij below the tolerance.
    pub violations: Vec<(usize, usize, f64)>,
}

impl AcutenessReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Scan all off-diagonal entries for negative values.
pub fn check_weak_acuteness(graph: &StiffnessGraph) -> AcutenessReport {
    let mut min_offdiag = f64::INFINITY;
    let mut violations = Vec::new();
    for (i, j, k) in graph.pairs() {
        if k < min_offdiag {
            min_offdiag = k;
        }
        if k < ACUTE_TOL {
            violations.push((i, j, k));
        }
    }
    AcutenessReport { min_offdiag, violations }
}

#[derive(Debug, Clone)]
pub struct AngleReport {
    /// Largest sum of the two angles opposite an interior edge.
    pub max_interior_sum: f64,
    pub worst_edge: Option<(usize, usize)>,
    pub interior_edges: usize,
}

impl AngleReport {
    /// Opposite-angle criterion: every interior-edge sum at most pi.
    pub fn pass(&self) -> bool {
        self.max_interior_sum <= std::f64::consts::PI + 1e-12
    }
}

/// For every interior edge of a triangle mesh, sum the two opposite angles.
/// Sums at most pi are equivalent to weak acuteness of the stiffness graph.
pub fn check_angles_2d(mesh: &Mesh) -> Result<AngleReport> {
    if mesh.dim != 2 {
        return Err(Error::InvalidArgument("angle check requires a 2d mesh".into()));
    }
    let mut edges: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
    for c in 0..mesh.cell_count() {
        let cell = mesh.cell(c);
        for a in 0..3 {
            let va = cell[a];
            let (vb, vc) = (cell[(a + 1) % 3], cell[(a + 2) % 3]);
            let pa = mesh.node(va);
            let pb = mesh.node(vb);
            let pc = mesh.node(vc);
            let u = [pb[0] - pa[0], pb[1] - pa[1]];
            let v = [pc[0] - pa[0], pc[1] - pa[1]];
            let dot = u[0] * v[0] + u[1] * v[1];
            let nu = (u[0] * u[0] + u[1] * u[1]).sqrt();
            let nv = (v[0] * v[0] + v[1] * v[1]).sqrt();
            let angle = (dot / (nu * nv)).clamp(-1.0, 1.0).acos();
            let key = (vb.min(vc), vb.max(vc));
            let e = edges.entry(key).or_insert((0.0, 0));
            e.0 += angle;
            e.1 += 1;
        }
    }
    let mut max_interior_sum = f64::NEG_INFINITY;
    let mut worst_edge = None;
    let mut interior_edges = 0;
    for (&edge, &(sum, count)) in &edges {
        if count == 2 {
            interior_edges += 1;
            if sum > max_interior_sum {
                max_interior_sum = sum;
                worst_edge = Some(edge);
            }
        }
    }
    if interior_edges == 0 {
        max_interior_sum = 0.0;
    }
    Ok(AngleReport { max_interior_sum, worst_edge, interior_edges })
}

/// Diagonal (vertex rule) mass: m_i = sum over cells at i of |cell|/(d+1).
#[derive(Debug, Clone)]
pub struct LumpedMass {
    pub m: Vec<f64>,
}

impl LumpedMass {
    pub fn total(&self) -> f64 {
        self.m.iter().sum()
    }
}

pub fn lumped_mass(mesh: &Mesh) -> LumpedMass {
    let mut m = vec![0.0; mesh.node_count()];
    let share = 1.0 / (mesh.dim + 1) as f64;
    for c in 0..mesh.cell_count() {
        let measure = mesh.cell_measure(c);
        for &i in mesh.cell(c) {
            m[i] += measure * share;
        }
    }
    LumpedMass { m }
}

/// Consistent mass matrix int phi_i phi_j, integrated with the given rule
/// (the rule is degree-4 exact, far beyond the quadratic integrand, but
/// using one rule everywhere keeps the discrete potential terms mutually
/// consistent).
pub fn consistent_mass(mesh: &Mesh, rule: &SimplexRule) -> Csr {
    assert_eq!(rule.dim, mesh.dim);
    let n = mesh.node_count();
    let nv = mesh.dim + 1;
    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for c in 0..mesh.cell_count() {
        let measure = mesh.cell_measure(c);
        let cell = mesh.cell(c);
        for a in 0..nv {
            for b in 0..nv {
                let mut acc = 0.0;
                for (p, &w) in rule.points.iter().zip(&rule.weights) {
                    acc += w * p[a] * p[b];
                }
                *rows[cell[a]].entry(cell[b]).or_insert(0.0) += measure * acc;
            }
        }
    }
    Csr::from_row_maps(rows)
}

/// Nodal interpolation I_h: evaluate a closed-form function at every node.
/// Rejects non-finite values, so singular formulas must be regularized by
/// the caller.
pub fn interpolate_scalar(mesh: &Mesh, f: impl Fn(&[f64]) -> f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(mesh.node_count());
    for i in 0..mesh.node_count() {
        let v = f(mesh.node(i));
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "interpolated value at node {i} is not finite"
            )));
        }
        out.push(v);
    }
    Ok(out)
}

/// Vector-valued nodal interpolation; the function returns 3 components and
/// the first mesh.dim are kept.
pub fn interpolate_vector(mesh: &Mesh, f: impl Fn(&[f64]) -> [f64; 3]) -> Result<VectorField> {
    let dim = mesh.dim;
    let mut out = VectorField::zeros(dim, mesh.node_count());
    for i in 0..mesh.node_count() {
        let v = f(mesh.node(i));
        if v[..dim].iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "interpolated vector at node {i} is not finite"
            )));
        }
        out.set_node(i, &v[..dim]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_box_mesh_3d, build_rect_mesh_2d, Mesh};
    use crate::quad::rule_for_dim;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn unit_square_2tri() -> Mesh {
        build_rect_mesh_2d(1, 1, [0.0, 1.0], [0.0, 1.0]).unwrap()
    }

    /// Independent element-by-element Dirichlet integral: fit the affine
    /// function through the vertex values by solving a small linear system,
    /// then integrate its constant gradient. Shares no code with the
    /// stiffness assembly.
    fn dirichlet_oracle(mesh: &Mesh, v: &[f64]) -> f64 {
        let d = mesh.dim;
        let mut total = 0.0;
        for c in 0..mesh.cell_count() {
            let cell = mesh.cell(c);
            // Rows: [1, x, y(, z)] * coeffs = v at each vertex.
            let nv = d + 1;
            let mut a = vec![vec![0.0; nv]; nv];
            let mut rhs = vec![0.0; nv];
            for (r, &node) in cell.iter().enumerate() {
                a[r][0] = 1.0;
                a[r][1..=d].copy_from_slice(mesh.node(node));
                rhs[r] = v[node];
            }
            let coeffs = gauss_solve(a, rhs);
            let grad_sq: f64 = coeffs[1..].iter().map(|&g| g * g).sum();
            total += mesh.cell_measure(c) * grad_sq;
        }
        total
    }

    fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n).max_by(|&r1, &r2| a[r1][col].abs().total_cmp(&a[r2][col].abs())).unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for r in col + 1..n {
                let f = a[r][col] / a[col][col];
                for k in col..n {
                    a[r][k] -= f * a[col][k];
                }
                b[r] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
            x[r] = (b[r] - s) / a[r][r];
        }
        x
    }

    fn pair_dirichlet(g: &StiffnessGraph, v: &[f64]) -> f64 {
        g.pairs().map(|(i, j, k)| k * (v[i] - v[j]) * (v[i] - v[j])).sum()
    }

    #[test]
    fn two_triangle_square_entries() {
        // Unit square split along the main diagonal: the diagonal edge sees
        // two right angles, so its k vanishes; every leg edge sees a single
        // 45-degree angle, giving k = cot(45)/2 = 1/2.
        let g = assemble_stiffness(&unit_square_2tri()).unwrap();
        // Node order: (0,0)=0, (1,0)=1, (0,1)=2, (1,1)=3.
        assert!((g.k(0, 3)).abs() < 1e-15, "diagonal edge");
        for (i, j) in [(0, 1), (1, 3), (3, 2), (2, 0)] {
            assert!((g.k(i, j) - 0.5).abs() < 1e-15, "leg edge ({i},{j})");
        }
        assert_eq!(g.k(1, 2), 0.0, "non-adjacent nodes share no entry");
    }

    #[test]
    fn row_sums_vanish() {
        let meshes = [
            build_rect_mesh_2d(3, 2, [0.0, 1.5], [0.0, 1.0]).unwrap(),
            build_box_mesh_3d(2, 2, 2, [0.0, 1.0], [0.0, 1.0], [0.0, 1.0]).unwrap(),
        ];
        for m in &meshes {
            let g = assemble_stiffness(m).unwrap();
            assert!(g.max_abs_row_sum() < 1e-12);
            // Same fact through the matvec: constant vectors are in the kernel.
            let ones = vec![1.0; g.n()];
            let mut out = vec![0.0; g.n()];
            g.csr.matvec(&ones, &mut out);
            assert!(out.iter().all(|&y| y.abs() < 1e-12));
        }
    }

    #[test]
    fn symmetry_as_stored() {
        let m = build_box_mesh_3d(2, 1, 2, [0.0, 1.0], [0.0, 0.5], [0.0, 1.0]).unwrap();
        let g = assemble_stiffness(&m).unwrap();
        for (i, j, k) in g.pairs() {
            assert_eq!(k, g.k(j, i), "entry ({i},{j}) not symmetric");
        }
    }

    #[test]
    fn generated_meshes_are_weakly_acute() {
        let m2 = build_rect_mesh_2d(8, 8, [0.0, 1.0], [0.0, 1.0]).unwrap();
        let g2 = assemble_stiffness(&m2).unwrap();
        assert!(check_weak_acuteness(&g2).pass());

        let m3 = build_box_mesh_3d(3, 3, 3, [0.0, 1.0], [0.0, 1.0], [0.0, 1.0]).unwrap();
        let g3 = assemble_stiffness(&m3).unwrap();
        let rep = check_weak_acuteness(&g3);
        assert!(rep.pass(), "min offdiag {}", rep.min_offdiag);
    }

    #[test]
    fn obtuse_triangle_fails_acuteness() {
        // Isoceles triangle with apex angle 120 degrees; the edge opposite
        // the apex must carry k = cot(120)/2 < 0.
        let h = 0.5 / 3.0f64.sqrt();
        let mesh = Mesh::from_parts(2, vec![0.0, 0.0, 1.0, 0.0, 0.5, h], vec![0, 1, 2]);
        let g = assemble_stiffness(&mesh).unwrap();
        let rep = check_weak_acuteness(&g);
        assert!(!rep.pass());
        assert_eq!(rep.violations.len(), 1);
        let (i, j, k) = rep.violations[0];
        assert_eq!((i, j), (0, 1));
        let expected = 0.5 * (PI * 2.0 / 3.0).tan().recip();
        assert!((k - expected).abs() < 1e-12, "k = {k}, expected {expected}");
    }

    #[test]
    fn angle_sums_2d() {
        // Single square: the diagonal edge sum is exactly pi (90 + 90).
        let rep = check_angles_2d(&unit_square_2tri()).unwrap();
        assert_eq!(rep.interior_edges, 1);
        assert!((rep.max_interior_sum - PI).abs() < 1e-12);
        assert!(rep.pass());

        // 2x2 grid: diagonals stay at pi, axis-aligned interior edges at
        // 45 + 45; nothing may exceed pi.
        let m = build_rect_mesh_2d(2, 2, [0.0, 1.0], [0.0, 1.0]).unwrap();
        let rep = check_angles_2d(&m).unwrap();
        assert_eq!(rep.interior_edges, 8);
        assert!(rep.pass());
        assert!((rep.max_interior_sum - PI).abs() < 1e-12);

        // The obtuse triangle pair: sharing the long edge of two 120-degree
        // triangles pushes that edge over pi.
        let h = 0.5 / 3.0f64.sqrt();
        let mesh = Mesh::from_parts(
            2,
            vec![0.0, 0.0, 1.0, 0.0, 0.5, h, 0.5, -h],
            vec![0, 1, 2, 0, 3, 1],
        );
        let rep = check_angles_2d(&mesh).unwrap();
        assert!(!rep.pass());
        assert_eq!(rep.worst_edge, Some((0, 1)));

        let m3 = build_box_mesh_3d(1, 1, 1, [0.0, 1.0], [0.0, 1.0], [0.0, 1.0]).unwrap();
        assert!(check_angles_2d(&m3).is_err());
    }

    #[test]
    fn lumped_mass_two_triangle_square() {
        let mm = lumped_mass(&unit_square_2tri());
        // Diagonal nodes touch both triangles, the others one each.
        assert!((mm.m[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((mm.m[3] - 1.0 / 3.0).abs() < 1e-15);
        assert!((mm.m[1] - 1.0 / 6.0).abs() < 1e-15);
        assert!((mm.m[2] - 1.0 / 6.0).abs() < 1e-15);
        assert!((mm.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lumped_mass_totals() {
        let m3 = build_box_mesh_3d(2, 2, 2, [0.0, 1.0], [0.0, 1.0], [0.0, 1.0]).unwrap();
        let mm = lumped_mass(&m3);
        assert!(mm.m.iter().all(|&x| x > 0.0));
        assert!((mm.total() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn dirichlet_identity_random_fields() {
        // Pair-sum identity against the independent per-element oracle,
        // 100 random nodal fields on a randomly sized small mesh.
        let mut rng = ChaCha8Rng::seed_from_u64(0x51_1FF);
        let nx = rng.gen_range(2..6);
        let ny = rng.gen_range(2..6);
        let mesh = build_rect_mesh_2d(nx, ny, [0.0, 1.0 + rng.gen::<f64>()], [0.0, 1.0]).unwrap();
        let graph = assemble_stiffness(&mesh).unwrap();
        for _ in 0..100 {
            let v: Vec<f64> = (0..mesh.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let pair = pair_dirichlet(&graph, &v);
            let oracle = dirichlet_oracle(&mesh, &v);
            assert!(
                (pair - oracle).abs() <= 1e-10 * oracle.max(1e-30),
                "pair {pair} vs oracle {oracle}"
            );
        }
        // Same check on a small 3d mesh.
        let mesh = build_box_mesh_3d(2, 2, 2, [0.0, 1.0], [0.0, 1.0], [0.0, 1.0]).unwrap();
        let graph = assemble_stiffness(&mesh).unwrap();
        for _ in 0..20 {
            let v: Vec<f64> = (0..mesh.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let pair = pair_dirichlet(&graph, &v);
            let oracle = dirichlet_oracle(&mesh, &v);
            assert!((pair - oracle).abs() <= 1e-10 * oracle.max(1e-30));
        }
    }

    #[test]
    fn consistent_mass_matches_exact_formula() {
        // For linear hats, int phi_a phi_b over a cell is
        // |cell| (1 + delta_ab) / ((d+1)(d+2)); the quadrature rule must
        // reproduce it to rounding.
        for mesh in [
            build_rect_mesh_2d(2, 3, [0.0, 1.0], [0.0, 1.0]).unwrap(),
            build_box_mesh_3d(2, 1, 1, [0.0, 1.0], [0.0, 1.0], [0.0, 1.0]).unwrap(),
        ] {
            let rule = rule_for_dim(mesh.dim);
            let mq = consistent_mass(&mesh, &rule);
            let d = mesh.dim;
            let mut exact: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); mesh.node_count()];
            for c in 0..mesh.cell_count() {
                let measure = mesh.cell_measure(c);
                let cell = mesh.cell(c);
                for (a, &ia) in cell.iter().enumerate() {
                    for (b, &ib) in cell.iter().enumerate() {
                        let factor = if a == b { 2.0 } else { 1.0 };
                        *exact[ia].entry(ib).or_insert(0.0) +=
                            measure * factor / ((d + 1) as f64 * (d + 2) as f64);
                    }
                }
            }
            for i in 0..mesh.node_count() {
                for (j, v) in mq.row(i) {
                    let e = exact[i][&j];
                    assert!((v - e).abs() <= 1e-14 * e.abs(), "entry ({i},{j}): {v} vs {e}");
                }
            }
            // Total mass equals the domain measure.
            let total: f64 = mq.val.iter().sum();
            assert!((total - mesh.total_measure()).abs() < 1e-13);
        }
    }

    #[test]
    fn interpolation_basics() {
        let mesh = build_rect_mesh_2d(3, 3, [0.0, 1.0], [0.0, 1.0]).unwrap();
        let c = interpolate_scalar(&mesh, |_| 2.5).unwrap();
        assert!(c.iter().all(|&v| v == 2.5));

        // Affine functions are reproduced exactly: the pair-sum Dirichlet
        // integral equals |Omega| |a|^2.
        let f = |p: &[f64]| 0.3 + 2.0 * p[0] - 1.0 * p[1];
        let v = interpolate_scalar(&mesh, f).unwrap();
        let g = assemble_stiffness(&mesh).unwrap();
        let grad = pair_dirichlet(&g, &v);
        assert!((grad - 5.0).abs() < 1e-12);

        let bad = interpolate_scalar(&mesh, |p| 1.0 / (p[0] - 0.0));
        assert!(bad.is_err(), "singular values must be rejected");

        let vf = interpolate_vector(&mesh, |p| [p[0], -p[1], 0.0]).unwrap();
        assert_eq!(vf.node(1)[0], mesh.node(1)[0]);
    }
}
