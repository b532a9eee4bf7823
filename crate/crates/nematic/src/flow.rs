//! Quasi-gradient-flow minimization of the discrete energy.
//!
//! One sweep has three stages. First a tangential director update: the
//! linearized stationarity condition is solved in the discrete tangent
//! space spanned by nodal frames perpendicular to the current director.
//! Second, nodal normalization back to unit length, which cannot increase
//! the energy because the updated nodal vectors have length at least one
//! and the stiffness off-diagonals are nonnegative on weakly acute meshes.
//! Third, an implicit update of the order parameter with the double well
//! split into convex and concave parts, implicit in the convex one. Each
//! stage decreases the total energy, so the iteration is monotone without
//! any regularization of the degenerate coupling.
//!
//! Dirichlet data is taken from the initial fields: values of s on gamma_s
//! and of n on gamma_n never change, bit for bit, over any number of
//! sweeps.

use std::cell::RefCell;

use crate::energy::{
    an_apply, an_node_diag, breakdown, director_diag, director_energy, laplace_apply,
    potential_load, weighted_mass_apply, EnergyBreakdown,
};
use crate::error::{Error, Result};
use crate::fem::{
    assemble_stiffness, check_weak_acuteness, consistent_mass, lumped_mass, AcutenessReport, Csr,
    LumpedMass, StiffnessGraph,
};
use crate::fields::VectorField;
use crate::mesh::{select_boundary, BoundaryNodes, BoundarySpec, Mesh};
use crate::potential::Potential;
use crate::quad::{rule_for_dim, SimplexRule};
use crate::solver::{solve_cg, Constraints, LinearOperator};

/// Diagonal shift, scaled by the nodal mass, applied where the tangential
/// operator has an exactly zero diagonal (s vanishing on a whole node
/// star). The shifted rows have zero right-hand side, so the shift only
/// pins the undetermined coefficients at zero.
const SHIFT_EPS: f64 = 1e-14;

/// Convergence tolerance of the Newton loop for non-quadratic convex
/// parts, relative to the scale of the time-stepping term.
const NEWTON_TOL: f64 = 1e-10;

/// Per-node orthonormal frames spanning the orthogonal complement of a
/// unit director field: one vector per node in 2d, two in 3d.
pub struct TangentFrame {
    dim: usize,
    nf: usize,
    nn: usize,
    vecs: Vec<f64>,
}

impl TangentFrame {
    /// Frame vectors per node (dim - 1).
    pub fn nf(&self) -> usize {
        self.nf
    }

    pub fn frame(&self, i: usize, a: usize) -> &[f64] {
        debug_assert!(a < self.nf);
        let base = (i * self.nf + a) * self.dim;
        &self.vecs[base..base + self.dim]
    }

    /// out_i = sum_a phi[(i, a)] r_a(i).
    pub fn expand(&self, phi: &[f64], out: &mut VectorField) {
        assert_eq!(phi.len(), self.nn * self.nf);
        assert_eq!(out.node_count(), self.nn);
        let od = out.data_mut();
        od.fill(0.0);
        for i in 0..self.nn {
            for a in 0..self.nf {
                let c = phi[i * self.nf + a];
                let base = (i * self.nf + a) * self.dim;
                for d in 0..self.dim {
                    od[i * self.dim + d] += c * self.vecs[base + d];
                }
            }
        }
    }

    /// out[(i, a)] = r_a(i) . v_i.
    pub fn contract(&self, v: &VectorField, out: &mut [f64]) {
        assert_eq!(v.node_count(), self.nn);
        assert_eq!(out.len(), self.nn * self.nf);
        for i in 0..self.nn {
            let vi = v.node(i);
            for a in 0..self.nf {
                let base = (i * self.nf + a) * self.dim;
                out[i * self.nf + a] =
                    (0..self.dim).map(|d| self.vecs[base + d] * vi[d]).sum();
            }
        }
    }
}

/// Build nodal tangent frames for a unit director field. In 2d the frame
/// is the quarter-turn of the director; in 3d the first vector comes from
/// projecting out the coordinate axis least aligned with the director
/// (ties broken toward the smaller index), the second from the cross
/// product, so the construction is deterministic and never degenerate.
pub fn tangent_frame(n: &VectorField) -> Result<TangentFrame> {
    let residual = n.max_unit_residual();
    if residual > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "tangent frames need a unit director field (max |1 - |n_i|| = {residual:.3e})"
        )));
    }
    let dim = n.dim();
    let nn = n.node_count();
    let nf = dim - 1;
    let mut vecs = vec![0.0; nn * nf * dim];
    for i in 0..nn {
        let ni = n.node(i);
        match dim {
            2 => {
                vecs[i * 2] = -ni[1];
                vecs[i * 2 + 1] = ni[0];
            }
            3 => {
                let axis = (0..3).min_by(|&a, &b| ni[a].abs().total_cmp(&ni[b].abs())).unwrap();
                let mut r1 = [0.0; 3];
                r1[axis] = 1.0;
                for d in 0..3 {
                    r1[d] -= ni[axis] * ni[d];
                }
                let len = r1.iter().map(|x| x * x).sum::<f64>().sqrt();
                for v in r1.iter_mut() {
                    *v /= len;
                }
                let r2 = [
                    ni[1] * r1[2] - ni[2] * r1[1],
                    ni[2] * r1[0] - ni[0] * r1[2],
                    ni[0] * r1[1] - ni[1] * r1[0],
                ];
                let base = i * nf * dim;
                vecs[base..base + 3].copy_from_slice(&r1);
                vecs[base + 3..base + 6].copy_from_slice(&r2);
            }
            d => return Err(Error::InvalidArgument(format!("no tangent frames in {d}d"))),
        }
    }
    Ok(TangentFrame { dim, nf, nn, vecs })
}

/// The tangential stiffness operator: the weighted vector Laplacian of the
/// director energy restricted to the nodal tangent frames, plus the
/// mass-scaled shift on nodes whose star carries no weight.
struct TangentOp<'a> {
    graph: &'a StiffnessGraph,
    s: &'a [f64],
    frame: &'a TangentFrame,
    shift: &'a [f64],
    scratch: RefCell<(VectorField, VectorField)>,
}

impl LinearOperator for TangentOp<'_> {
    fn dim(&self) -> usize {
        self.frame.nn * self.frame.nf
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut guard = self.scratch.borrow_mut();
        let (tin, tout) = &mut *guard;
        self.frame.expand(x, tin);
        an_apply(self.graph, self.s, tin, tout);
        self.frame.contract(tout, y);
        let nf = self.frame.nf;
        for i in 0..self.frame.nn {
            for a in 0..nf {
                y[i * nf + a] += self.shift[i] * x[i * nf + a];
            }
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let node_diag = an_node_diag(self.graph, self.s);
        let nf = self.frame.nf;
        let mut d = vec![0.0; self.dim()];
        for i in 0..self.frame.nn {
            for a in 0..nf {
                d[i * nf + a] = node_diag[i] + self.shift[i];
            }
        }
        d
    }
}

/// Result of the tangential update.
pub struct StepAResult {
    /// Tangential correction, zero (exactly) on gamma_n nodes.
    pub t: VectorField,
    pub cg_iters: usize,
    /// Nodes whose zero-weight star needed the diagonal shift.
    pub shifted_nodes: usize,
}

/// Stage one: solve the linearized stationarity condition for a tangential
/// director correction. Solved by CG from zero, which guarantees the
/// director energy of n + t never exceeds that of n, even at loose
/// tolerances.
pub fn step_a(
    graph: &StiffnessGraph,
    s: &[f64],
    n: &VectorField,
    gamma_n: &[usize],
    lumped: &LumpedMass,
    rel_tol: f64,
    max_iters: usize,
) -> Result<StepAResult> {
    let nn = graph.n();
    let dim = n.dim();
    let frame = tangent_frame(n)?;
    let nf = frame.nf();

    let node_diag = an_node_diag(graph, s);
    let mut shift = vec![0.0; nn];
    let mut shifted_nodes = 0;
    for i in 0..nn {
        if node_diag[i] == 0.0 && gamma_n.binary_search(&i).is_err() {
            shift[i] = SHIFT_EPS * lumped.m[i];
            shifted_nodes += 1;
        }
    }

    // Right-hand side: minus the frame contraction of the energy gradient.
    let mut an_n = VectorField::zeros(dim, nn);
    an_apply(graph, s, n, &mut an_n);
    let mut b = vec![0.0; nn * nf];
    frame.contract(&an_n, &mut b);
    for v in b.iter_mut() {
        *v = -*v;
    }

    let fixed: Vec<usize> =
        gamma_n.iter().flat_map(|&i| (0..nf).map(move |a| i * nf + a)).collect();
    let cons = Constraints::new(nn * nf, &fixed, &vec![0.0; fixed.len()])?;

    let op = TangentOp {
        graph,
        s,
        frame: &frame,
        shift: &shift,
        scratch: RefCell::new((VectorField::zeros(dim, nn), VectorField::zeros(dim, nn))),
    };
    let rep = solve_cg(&op, &b, &cons, None, rel_tol, max_iters)?;

    let mut t = VectorField::zeros(dim, nn);
    frame.expand(&rep.x, &mut t);
    Ok(StepAResult { t, cg_iters: rep.iters, shifted_nodes })
}

/// Stage two: add the tangential correction and renormalize node by node.
/// Nodes with an exactly zero correction are left untouched, so Dirichlet
/// directors stay bit-identical. By tangency the updated vectors have
/// length at least one, which is what makes normalization energy-safe.
/// The correction is expected to come from the tangential solve: debug
/// builds check that it does not raise the director energy, which holds
/// for that solve but not for arbitrary tangential perturbations.
pub fn step_b(
    graph: &StiffnessGraph,
    s: &[f64],
    n: &mut VectorField,
    t: &VectorField,
) -> Result<()> {
    let nn = n.node_count();
    assert_eq!(t.node_count(), nn);
    assert_eq!(t.dim(), n.dim());

    #[cfg(debug_assertions)]
    let before = director_energy(graph, s, n);
    #[cfg(debug_assertions)]
    let mid = {
        let mut sum = n.clone();
        for i in 0..nn {
            let v: Vec<f64> =
                n.node(i).iter().zip(t.node(i)).map(|(&a, &b)| a + b).collect();
            sum.set_node(i, &v);
        }
        director_energy(graph, s, &sum)
    };

    for i in 0..nn {
        let ti = t.node(i);
        if ti.iter().all(|&v| v == 0.0) {
            continue;
        }
        let v: Vec<f64> = n.node(i).iter().zip(ti).map(|(&a, &b)| a + b).collect();
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len < 0.5 {
            return Err(Error::InvalidArgument(format!(
                "director update collapsed at node {i} (|n + t| = {len:.3e}); \
                 the correction is not tangential"
            )));
        }
        let unit: Vec<f64> = v.iter().map(|x| x / len).collect();
        n.set_node(i, &unit);
    }

    #[cfg(debug_assertions)]
    {
        let after = director_energy(graph, s, n);
        let slack = 1e-9 * (1.0 + before.abs());
        debug_assert!(mid <= before + slack, "tangential update raised energy: {before} -> {mid}");
        debug_assert!(after <= mid + slack, "normalization raised energy: {mid} -> {after}");
    }
    #[cfg(not(debug_assertions))]
    let _ = (graph, s);

    Ok(())
}

/// Linear part of the implicit s-update: the time-stepping lumped mass,
/// the scalar Laplacian scaled by kappa, the director-jump diagonal, and
/// optionally the consistent mass scaled by the slope of an affine convex
/// derivative.
struct StepCOp<'a> {
    graph: &'a StiffnessGraph,
    kappa: f64,
    inv_dt_m: &'a [f64],
    d_diag: &'a [f64],
    mass: Option<(f64, &'a Csr)>,
    scratch: RefCell<Vec<f64>>,
}

impl LinearOperator for StepCOp<'_> {
    fn dim(&self) -> usize {
        self.graph.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        let mut tmp = self.scratch.borrow_mut();
        laplace_apply(self.graph, x, &mut tmp);
        for i in 0..n {
            y[i] = self.inv_dt_m[i] * x[i] + self.kappa * tmp[i] + self.d_diag[i] * x[i];
        }
        if let Some((c2, mq)) = self.mass {
            mq.matvec(x, &mut tmp);
            for i in 0..n {
                y[i] += c2 * tmp[i];
            }
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                let mut d =
                    self.inv_dt_m[i] - 2.0 * self.kappa * self.graph.k(i, i) + self.d_diag[i];
                if let Some((c2, mq)) = self.mass {
                    d += c2 * mq.entry(i, i);
                }
                d
            })
            .collect()
    }
}

/// Jacobian of the implicit update when the convex derivative is not
/// affine: the linear part plus the mass weighted by psi_c'' at the
/// current iterate.
struct NewtonOp<'a> {
    base: StepCOp<'a>,
    mesh: &'a Mesh,
    rule: &'a SimplexRule,
    pot: &'a Potential,
    s_frozen: Vec<f64>,
    wdiag: Vec<f64>,
}

impl LinearOperator for NewtonOp<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.base.apply(x, y);
        let wm = weighted_mass_apply(self.mesh, self.rule, &self.s_frozen, |v| {
            self.pot.psi_c_second(v)
        }, x)
        .expect("weighted mass dimensions checked at construction");
        for i in 0..y.len() {
            y[i] += wm[i];
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let mut d = self.base.diagonal();
        for i in 0..d.len() {
            d[i] += self.wdiag[i];
        }
        d
    }
}

fn weighted_mass_diag(
    mesh: &Mesh,
    rule: &SimplexRule,
    s: &[f64],
    w: impl Fn(f64) -> f64,
) -> Vec<f64> {
    let nv = mesh.dim + 1;
    let mut diag = vec![0.0; mesh.node_count()];
    for c in 0..mesh.cell_count() {
        let measure = mesh.cell_measure(c);
        let cell = mesh.cell(c);
        for (p, &wq) in rule.points.iter().zip(&rule.weights) {
            let mut sq = 0.0;
            for a in 0..nv {
                sq += p[a] * s[cell[a]];
            }
            let f = measure * wq * w(sq);
            for a in 0..nv {
                diag[cell[a]] += f * p[a] * p[a];
            }
        }
    }
    diag
}

/// Everything the implicit s-update needs besides the state itself.
pub struct StepCContext<'a> {
    pub mesh: &'a Mesh,
    pub graph: &'a StiffnessGraph,
    pub rule: &'a SimplexRule,
    pub pot: &'a Potential,
    pub lumped: &'a LumpedMass,
    /// Consistent mass, required when the convex derivative is affine with
    /// a nonzero slope.
    pub mass_q: Option<&'a Csr>,
    pub kappa: f64,
    pub dt: f64,
    pub gamma_s: &'a [usize],
    pub cg_rel_tol: f64,
    pub cg_max_iters: usize,
    pub max_newton: usize,
}

/// Result of the implicit s-update.
pub struct StepCResult {
    pub s: Vec<f64>,
    pub cg_iters: usize,
    pub newton_iters: usize,
}

/// Stage three: implicit update of the order parameter against the new
/// director, with the double well split convex/concave. A quadratic
/// convex part collapses to one linear SPD solve; otherwise a damped
/// Newton iteration with SPD Jacobians runs to tight tolerance.
pub fn step_c(ctx: &StepCContext, s_old: &[f64], n_new: &VectorField) -> Result<StepCResult> {
    let nn = ctx.graph.n();
    assert_eq!(s_old.len(), nn);
    assert_eq!(n_new.node_count(), nn);

    let d_diag = director_diag(ctx.graph, n_new);
    let inv_dt_m: Vec<f64> = ctx.lumped.m.iter().map(|&m| m / ctx.dt).collect();
    let bc_values: Vec<f64> = ctx.gamma_s.iter().map(|&i| s_old[i]).collect();
    let cons = Constraints::new(nn, ctx.gamma_s, &bc_values)?;

    let q_e = if ctx.pot.enabled() {
        potential_load(ctx.mesh, ctx.rule, s_old, |v| Ok(ctx.pot.eval(v)?.psi_e_prime))?
    } else {
        vec![0.0; nn]
    };

    if let Some((a1, c2)) = ctx.pot.convex_derivative_affine() {
        let mass = if c2 != 0.0 {
            let mq = ctx.mass_q.ok_or_else(|| {
                Error::InvalidArgument(
                    "affine convex derivative with nonzero slope needs the consistent mass".into(),
                )
            })?;
            Some((c2, mq))
        } else {
            None
        };
        let op = StepCOp {
            graph: ctx.graph,
            kappa: ctx.kappa,
            inv_dt_m: &inv_dt_m,
            d_diag: &d_diag,
            mass,
            scratch: RefCell::new(vec![0.0; nn]),
        };
        let rhs: Vec<f64> = (0..nn)
            .map(|i| inv_dt_m[i] * s_old[i] + q_e[i] - a1 * ctx.lumped.m[i])
            .collect();
        let rep = solve_cg(&op, &rhs, &cons, Some(s_old), ctx.cg_rel_tol, ctx.cg_max_iters)?;
        return Ok(StepCResult { s: rep.x, cg_iters: rep.iters, newton_iters: 0 });
    }

    // Newton path. The residual is projected onto the free nodes; the
    // iterate keeps its Dirichlet values from s_old throughout.
    let free_norm = |g: &[f64]| g.iter().map(|&v| v * v).sum::<f64>().sqrt();
    let residual = |x: &[f64]| -> Result<Vec<f64>> {
        let mut l = vec![0.0; nn];
        laplace_apply(ctx.graph, x, &mut l);
        let q_c = potential_load(ctx.mesh, ctx.rule, x, |v| Ok(ctx.pot.eval(v)?.psi_c_prime))?;
        let mut g: Vec<f64> = (0..nn)
            .map(|i| {
                inv_dt_m[i] * (x[i] - s_old[i])
                    + ctx.kappa * l[i]
                    + d_diag[i] * x[i]
                    + q_c[i]
                    - q_e[i]
            })
            .collect();
        for &i in ctx.gamma_s {
            g[i] = 0.0;
        }
        Ok(g)
    };

    let scale = 1.0 + free_norm(&(0..nn).map(|i| inv_dt_m[i] * s_old[i]).collect::<Vec<_>>());
    let tol = NEWTON_TOL * scale;
    let mut x = s_old.to_vec();
    let mut g = residual(&x)?;
    let mut gn = free_norm(&g);
    let mut cg_total = 0;
    let zero_cons = Constraints::new(nn, ctx.gamma_s, &vec![0.0; ctx.gamma_s.len()])?;

    for it in 0..ctx.max_newton {
        if gn <= tol {
            return Ok(StepCResult { s: x, cg_iters: cg_total, newton_iters: it });
        }
        let op = NewtonOp {
            base: StepCOp {
                graph: ctx.graph,
                kappa: ctx.kappa,
                inv_dt_m: &inv_dt_m,
                d_diag: &d_diag,
                mass: None,
                scratch: RefCell::new(vec![0.0; nn]),
            },
            mesh: ctx.mesh,
            rule: ctx.rule,
            pot: ctx.pot,
            wdiag: weighted_mass_diag(ctx.mesh, ctx.rule, &x, |v| ctx.pot.psi_c_second(v)),
            s_frozen: x.clone(),
        };
        let neg_g: Vec<f64> = g.iter().map(|&v| -v).collect();
        let rep = solve_cg(&op, &neg_g, &zero_cons, None, ctx.cg_rel_tol, ctx.cg_max_iters)?;
        cg_total += rep.iters;

        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let xt: Vec<f64> = x.iter().zip(&rep.x).map(|(&a, &d)| a + alpha * d).collect();
            let gt = residual(&xt)?;
            let gtn = free_norm(&gt);
            if gtn < gn * (1.0 - 1e-4 * alpha) || gtn <= tol {
                x = xt;
                g = gt;
                gn = gtn;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::NewtonDivergence(format!(
                "line search stalled at residual {gn:.3e} (tolerance {tol:.3e})"
            )));
        }
    }
    if gn <= tol {
        return Ok(StepCResult { s: x, cg_iters: cg_total, newton_iters: ctx.max_newton });
    }
    Err(Error::NewtonDivergence(format!(
        "residual {gn:.3e} after {} iterations (tolerance {tol:.3e})",
        ctx.max_newton
    )))
}

/// Tunable parameters of the flow.
#[derive(Debug, Clone, Copy)]
pub struct FlowConfig {
    pub kappa: f64,
    pub dt: f64,
    /// Relative tolerance of the inner CG solves.
    pub cg_rel_tol: f64,
    /// The flow stops once the stationarity measure (the s-decrement plus
    /// the mass-weighted squared tangential correction) drops below this
    /// factor times (1 + |initial energy|).
    pub stop_tol_factor: f64,
    pub max_newton: usize,
}

impl Default for FlowConfig {
    fn default() -> FlowConfig {
        FlowConfig {
            kappa: 1.0,
            dt: 0.02,
            cg_rel_tol: 1e-10,
            stop_tol_factor: 1e-10,
            max_newton: 25,
        }
    }
}

/// Diagnostics of one sweep.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    pub step: usize,
    pub e1: f64,
    pub e2: f64,
    pub total: f64,
    pub e1_tilde: f64,
    pub c1: f64,
    pub min_s: f64,
    /// Guaranteed energy decrease of the s-update: the squared mass
    /// norm of the increment divided by the time step.
    pub decrement: f64,
    /// Mass-weighted squared norm of the tangential correction.
    pub t_norm_sq: f64,
    pub cg_iters_a: usize,
    pub cg_iters_c: usize,
    pub newton_iters: usize,
    pub shifted_nodes: usize,
}

/// Outcome of a run.
#[derive(Debug, Clone, Copy)]
pub struct RunSummary {
    pub steps_taken: usize,
    /// Whether the stationarity measure dropped below the stop tolerance
    /// before the step budget ran out.
    pub converged: bool,
    pub final_total: f64,
    pub min_s: f64,
}

/// The minimization driver: owns the mesh, the assembled operators, the
/// potential, and the current state, and advances them sweep by sweep.
pub struct Flow {
    mesh: Mesh,
    graph: StiffnessGraph,
    rule: SimplexRule,
    pot: Potential,
    lumped: LumpedMass,
    mass_q: Option<Csr>,
    config: FlowConfig,
    boundary: BoundaryNodes,
    s: Vec<f64>,
    n: VectorField,
    step_count: usize,
    e_ref: Option<f64>,
    last_total: Option<f64>,
}

impl Flow {
    /// Assemble the operators and validate the initial state. The values
    /// of s0 on gamma_s and n0 on gamma_n become the Dirichlet data.
    pub fn new(
        mesh: Mesh,
        pot: Potential,
        spec: &BoundarySpec,
        config: FlowConfig,
        s0: Vec<f64>,
        n0: VectorField,
    ) -> Result<Flow> {
        if !(config.kappa.is_finite() && config.kappa > 0.0) {
            return Err(Error::Config(format!("kappa must be positive, got {}", config.kappa)));
        }
        if !(config.dt.is_finite() && config.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", config.dt)));
        }
        if s0.len() != mesh.node_count() || n0.node_count() != mesh.node_count() {
            return Err(Error::InvalidArgument(format!(
                "initial fields sized {} / {} for a mesh with {} nodes",
                s0.len(),
                n0.node_count(),
                mesh.node_count()
            )));
        }
        if n0.dim() != mesh.dim {
            return Err(Error::InvalidArgument(format!(
                "director dimension {} on a {}d mesh",
                n0.dim(),
                mesh.dim
            )));
        }
        if let Some(bad) = s0.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite initial s value {bad}")));
        }
        let residual = n0.max_unit_residual();
        if residual > 1e-8 {
            return Err(Error::InvalidArgument(format!(
                "initial director must be unit length (max |1 - |n_i|| = {residual:.3e})"
            )));
        }

        let graph = assemble_stiffness(&mesh)?;
        let boundary = select_boundary(&mesh, spec)?;
        let lumped = lumped_mass(&mesh);
        let rule = rule_for_dim(mesh.dim);
        let needs_mass = pot.enabled()
            && matches!(pot.convex_derivative_affine(), Some((_, c2)) if c2 != 0.0);
        let mass_q = if needs_mass { Some(consistent_mass(&mesh, &rule)) } else { None };

        Ok(Flow {
            mesh,
            graph,
            rule,
            pot,
            lumped,
            mass_q,
            config,
            boundary,
            s: s0,
            n: n0,
            step_count: 0,
            e_ref: None,
            last_total: None,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn graph(&self) -> &StiffnessGraph {
        &self.graph
    }

    pub fn potential(&self) -> &Potential {
        &self.pot
    }

    pub fn boundary(&self) -> &BoundaryNodes {
        &self.boundary
    }

    pub fn config(&self) -> &FlowConfig {
        &self.config
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn director(&self) -> &VectorField {
        &self.n
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    /// Weak-acuteness check of the assembled stiffness; callers decide
    /// whether a violation is fatal for their mesh.
    pub fn acuteness(&self) -> AcutenessReport {
        check_weak_acuteness(&self.graph)
    }

    pub fn energies(&self) -> Result<EnergyBreakdown> {
        breakdown(
            &self.mesh,
            &self.graph,
            &self.rule,
            &self.pot,
            self.config.kappa,
            &self.s,
            &self.n,
        )
    }

    /// Diagnostics of the state before any sweep has run.
    pub fn initial_record(&mut self) -> Result<StepRecord> {
        let b = self.energies()?;
        if self.e_ref.is_none() {
            self.e_ref = Some(b.total);
        }
        if self.last_total.is_none() {
            self.last_total = Some(b.total);
        }
        Ok(StepRecord {
            step: self.step_count,
            e1: b.e1,
            e2: b.e2,
            total: b.total,
            e1_tilde: b.e1_tilde,
            c1: b.c1,
            min_s: self.s.iter().copied().fold(f64::INFINITY, f64::min),
            decrement: 0.0,
            t_norm_sq: 0.0,
            cg_iters_a: 0,
            cg_iters_c: 0,
            newton_iters: 0,
            shifted_nodes: 0,
        })
    }

    fn cg_cap_c(&self) -> usize {
        10 * (self.graph.n() as f64).sqrt() as usize + 200
    }

    /// One full sweep: tangential update, normalization, implicit s-update.
    pub fn step(&mut self) -> Result<StepRecord> {
        if self.last_total.is_none() {
            self.initial_record()?;
        }
        let step_index = self.step_count + 1;
        self.step_inner().map_err(|e| Error::Step { step: step_index, source: Box::new(e) })
    }

    fn step_inner(&mut self) -> Result<StepRecord> {
        let cap_c = self.cg_cap_c();
        let a = step_a(
            &self.graph,
            &self.s,
            &self.n,
            &self.boundary.gamma_n,
            &self.lumped,
            self.config.cg_rel_tol,
            4 * cap_c,
        )?;
        step_b(&self.graph, &self.s, &mut self.n, &a.t)?;

        let ctx = StepCContext {
            mesh: &self.mesh,
            graph: &self.graph,
            rule: &self.rule,
            pot: &self.pot,
            lumped: &self.lumped,
            mass_q: self.mass_q.as_ref(),
            kappa: self.config.kappa,
            dt: self.config.dt,
            gamma_s: &self.boundary.gamma_s,
            cg_rel_tol: self.config.cg_rel_tol,
            cg_max_iters: cap_c,
            max_newton: self.config.max_newton,
        };
        let c = step_c(&ctx, &self.s, &self.n)?;

        let mut decrement = 0.0;
        for i in 0..self.s.len() {
            let ds = c.s[i] - self.s[i];
            decrement += self.lumped.m[i] * ds * ds;
        }
        decrement /= self.config.dt;
        let mut t_norm_sq = 0.0;
        for i in 0..self.s.len() {
            let ti = a.t.node(i);
            t_norm_sq += self.lumped.m[i] * ti.iter().map(|&v| v * v).sum::<f64>();
        }

        self.s = c.s;
        self.step_count += 1;
        let b = self.energies()?;

        #[cfg(debug_assertions)]
        if let Some(prev) = self.last_total {
            let slack = 10.0 * self.config.cg_rel_tol * (1.0 + prev.abs());
            debug_assert!(
                b.total <= prev - decrement + slack,
                "energy rose at sweep {}: {prev} -> {} (decrement {decrement})",
                self.step_count,
                b.total
            );
        }
        self.last_total = Some(b.total);

        Ok(StepRecord {
            step: self.step_count,
            e1: b.e1,
            e2: b.e2,
            total: b.total,
            e1_tilde: b.e1_tilde,
            c1: b.c1,
            min_s: self.s.iter().copied().fold(f64::INFINITY, f64::min),
            decrement,
            t_norm_sq,
            cg_iters_a: a.cg_iters,
            cg_iters_c: c.cg_iters,
            newton_iters: c.newton_iters,
            shifted_nodes: a.shifted_nodes,
        })
    }

    /// Advance until the stationarity measure drops below the stop
    /// tolerance or the step budget runs out. Every record, including the
    /// state before the first sweep on a fresh flow, is handed to the
    /// callback.
    pub fn run(
        &mut self,
        max_steps: usize,
        mut on_record: impl FnMut(&StepRecord),
    ) -> Result<RunSummary> {
        if self.step_count == 0 && self.last_total.is_none() {
            let rec = self.initial_record()?;
            on_record(&rec);
        }
        let stop_tol =
            self.config.stop_tol_factor * (1.0 + self.e_ref.map_or(0.0, f64::abs));
        let mut converged = false;
        let mut taken = 0;
        while taken < max_steps {
            let rec = self.step()?;
            taken += 1;
            on_record(&rec);
            if rec.decrement + rec.t_norm_sq < stop_tol {
                converged = true;
                break;
            }
        }
        Ok(RunSummary {
            steps_taken: taken,
            converged,
            final_total: self.last_total.unwrap_or(f64::NAN),
            min_s: self.s.iter().copied().fold(f64::INFINITY, f64::min),
        })
    }
}

/// Unit director field pointing radially away from a planar center (the
/// z-component is zero in 3d). Nodes closer to the center than 1e-12 get
/// the first coordinate axis instead of a division by zero.
pub fn point_defect_director(mesh: &Mesh, center: [f64; 2]) -> VectorField {
    let dim = mesh.dim;
    let mut n = VectorField::zeros(dim, mesh.node_count());
    for i in 0..mesh.node_count() {
        let x = mesh.node(i);
        let dx = x[0] - center[0];
        let dy = x[1] - center[1];
        let r = (dx * dx + dy * dy).sqrt();
        let mut v = vec![0.0; dim];
        if r < 1e-12 {
            v[0] = 1.0;
        } else {
            v[0] = dx / r;
            v[1] = dy / r;
        }
        n.set_node(i, &v);
    }
    n
}

/// Unit director field pointing radially away from a 3d center: the
/// hedgehog. Its out-of-plane component is what lets the flow leave the
/// planar configuration, which is an exactly invariant set of the sweep;
/// a planar start can never escape in z. Nodes closer to the center than
/// 1e-12 get the first coordinate axis.
pub fn hedgehog_director(mesh: &Mesh, center: [f64; 3]) -> VectorField {
    assert_eq!(mesh.dim, 3, "the hedgehog init is three-dimensional");
    let mut n = VectorField::zeros(3, mesh.node_count());
    for i in 0..mesh.node_count() {
        let x = mesh.node(i);
        let d = [x[0] - center[0], x[1] - center[1], x[2] - center[2]];
        let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if r < 1e-12 {
            n.set_node(i, &[1.0, 0.0, 0.0]);
        } else {
            n.set_node(i, &[d[0] / r, d[1] / r, d[2] / r]);
        }
    }
    n
}

/// Nodes where |s| sits below a threshold, with the location of the
/// minimum: the numerical picture of a defect region.
#[derive(Debug, Clone)]
pub struct DefectReport {
    pub min_s: f64,
    pub argmin: usize,
    pub nodes: Vec<usize>,
}

pub fn defect_region(s: &[f64], threshold: f64) -> DefectReport {
    let mut min_s = f64::INFINITY;
    let mut argmin = 0;
    let mut nodes = Vec::new();
    for (i, &v) in s.iter().enumerate() {
        if v < min_s {
            min_s = v;
            argmin = i;
        }
        if v.abs() < threshold {
            nodes.push(i);
        }
    }
    DefectReport { min_s, argmin, nodes }
}
