//! Symmetric positive (semi)definite linear solves.
//!
//! The production path is Jacobi-preconditioned conjugate gradients on a
//! matrix-free operator. Dirichlet constraints are eliminated symmetrically:
//! the iterate starts from the prescribed values, and every Krylov vector is
//! projected onto the free index set, which is algebraically identical to
//! solving the reduced system and leaves constrained entries bit-identical
//! to their data. A dense Gaussian-elimination path over the same operator
//! serves as the reference for small systems.

use crate::error::{Error, Result};

/// Matrix-free symmetric linear operator.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    /// y = A x.
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// Diagonal of A, for Jacobi preconditioning.
    fn diagonal(&self) -> Vec<f64>;
}

/// Dirichlet constraint set: fixed indices with their values.
#[derive(Debug, Clone)]
pub struct Constraints {
    n: usize,
    fixed: Vec<bool>,
    values: Vec<f64>,
}

impl Constraints {
    pub fn none(n: usize) -> Constraints {
        Constraints { n, fixed: vec![false; n], values: vec![0.0; n] }
    }

    /// Fix `indices[k]` at `values[k]`; indices out of range are rejected.
    pub fn new(n: usize, indices: &[usize], values: &[f64]) -> Result<Constraints> {
        if indices.len() != values.len() {
            return Err(Error::InvalidArgument(
                "constraint indices and values differ in length".into(),
            ));
        }
        let mut c = Constraints::none(n);
        for (&i, &v) in indices.iter().zip(values) {
            if i >= n {
                return Err(Error::InvalidArgument(format!(
                    "constraint index {i} out of range for system of size {n}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "constraint value at index {i} is not finite"
                )));
            }
            c.fixed[i] = true;
            c.values[i] = v;
        }
        Ok(c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_fixed(&self, i: usize) -> bool {
        self.fixed[i]
    }

    pub fn fixed_count(&self) -> usize {
        self.fixed.iter().filter(|&&f| f).count()
    }

    /// Zero out the fixed entries of a vector.
    fn project(&self, v: &mut [f64]) {
        for i in 0..self.n {
            if self.fixed[i] {
                v[i] = 0.0;
            }
        }
    }

    /// Overwrite fixed entries with their prescribed values.
    fn impose(&self, v: &mut [f64]) {
        for i in 0..self.n {
            if self.fixed[i] {
                v[i] = self.values[i];
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solution plus convergence diagnostics.
#[derive(Debug, Clone)]
pub struct CgReport {
    pub x: Vec<f64>,
    pub iters: usize,
    pub rel_residual: f64,
}

/// Jacobi-preconditioned CG on the constrained system. `x0` is an optional
/// warm start (its fixed entries are overwritten by the constraint data).
/// Fails with a convergence error when `max_iters` is exhausted and with a
/// structural error when negative curvature shows the operator is not
/// positive definite on the free subspace.
pub fn solve_cg(
    op: &dyn LinearOperator,
    b: &[f64],
    constraints: &Constraints,
    x0: Option<&[f64]>,
    rel_tol: f64,
    max_iters: usize,
) -> Result<CgReport> {
    let n = op.dim();
    assert_eq!(b.len(), n);
    assert_eq!(constraints.n(), n);

    // Reduced right-hand side b - A x_hat with x_hat the zero-extended
    // constraint data; its norm is the convergence reference.
    let mut xhat = vec![0.0; n];
    constraints.impose(&mut xhat);
    let mut tmp = vec![0.0; n];
    op.apply(&xhat, &mut tmp);
    let mut beff = b.to_vec();
    for i in 0..n {
        beff[i] -= tmp[i];
    }
    constraints.project(&mut beff);
    let norm_b = norm(&beff);
    if norm_b == 0.0 {
        return Ok(CgReport { x: xhat, iters: 0, rel_residual: 0.0 });
    }

    let mut x = match x0 {
        Some(v) => {
            assert_eq!(v.len(), n);
            v.to_vec()
        }
        None => vec![0.0; n],
    };
    constraints.impose(&mut x);

    let mut r = vec![0.0; n];
    op.apply(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    constraints.project(&mut r);

    // Jacobi preconditioner over the free set; nonpositive diagonal entries
    // fall back to identity scaling so semidefinite operators can still be
    // probed (they fail later with a structural error if truly indefinite).
    let mut prec = op.diagonal();
    for p in prec.iter_mut() {
        *p = if *p > 0.0 { 1.0 / *p } else { 1.0 };
    }

    let apply_prec = |r: &[f64], z: &mut [f64]| {
        for i in 0..r.len() {
            z[i] = prec[i] * r[i];
        }
    };

    let mut rel = norm(&r) / norm_b;
    if rel <= rel_tol {
        return Ok(CgReport { x, iters: 0, rel_residual: rel });
    }

    let mut z = vec![0.0; n];
    apply_prec(&r, &mut z);
    constraints.project(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut history = Vec::new();

    for iter in 1..=max_iters {
        op.apply(&p, &mut q);
        constraints.project(&mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            return Err(Error::SolverIndefinite { iter, curvature: pq });
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        rel = norm(&r) / norm_b;
        history.push(rel);
        if rel <= rel_tol {
            return Ok(CgReport { x, iters: iter, rel_residual: rel });
        }
        apply_prec(&r, &mut z);
        constraints.project(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    // Keep the tail of the history; it is what shows stagnation.
    if history.len() > 32 {
        history.drain(..history.len() - 32);
    }
    Err(Error::SolverConvergence { iters: max_iters, rel_residual: rel, history })
}

/// Dense direct solve of the same constrained system, for reference use on
/// small systems (builds the matrix column by column through the operator).
pub fn dense_solve(
    op: &dyn LinearOperator,
    b: &[f64],
    constraints: &Constraints,
) -> Result<Vec<f64>> {
    let n = op.dim();
    let free: Vec<usize> = (0..n).filter(|&i| !constraints.is_fixed(i)).collect();
    let nf = free.len();

    let mut xhat = vec![0.0; n];
    constraints.impose(&mut xhat);
    let mut tmp = vec![0.0; n];
    op.apply(&xhat, &mut tmp);
    let rhs: Vec<f64> = free.iter().map(|&i| b[i] - tmp[i]).collect();

    // Column k of the full matrix, restricted to the free rows.
    let mut a = vec![vec![0.0; nf]; nf];
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for (kf, &k) in free.iter().enumerate() {
        e[k] = 1.0;
        op.apply(&e, &mut col);
        e[k] = 0.0;
        for (rf, &r) in free.iter().enumerate() {
            a[rf][kf] = col[r];
        }
    }

    let sol = gauss_solve(a, rhs)?;
    let mut x = xhat;
    for (kf, &k) in free.iter().enumerate() {
        x[k] = sol[kf];
    }
    Ok(x)
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r1, &r2| a[r1][col].abs().total_cmp(&a[r2][col].abs()))
            .unwrap();
        if a[piv][col] == 0.0 {
            return Err(Error::InvalidArgument(format!("singular matrix at column {col}")));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[r][k] -= f * a[col][k];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Ok(x)
}
