//! Nodal fields on a mesh.
//!
//! Scalar fields are plain `Vec<f64>` of nodal values. Vector fields get a
//! thin wrapper that knows the spatial dimension. Director fields are vector
//! fields that keep unit length at every node; that invariant is enforced by
//! the flow, not by this container, because the energy routines are also
//! used on non-unit fields (the auxiliary field u = s n and unnormalized
//! variation checks).

use crate::error::{Error, Result};

/// Nodal vector field, node-major storage with `dim` components per node.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    dim: usize,
    data: Vec<f64>,
}

impl VectorField {
    pub fn zeros(dim: usize, n_nodes: usize) -> VectorField {
        assert!(dim == 2 || dim == 3);
        VectorField { dim, data: vec![0.0; dim * n_nodes] }
    }

    pub fn from_data(dim: usize, data: Vec<f64>) -> VectorField {
        assert!(dim == 2 || dim == 3);
        assert_eq!(data.len() % dim, 0);
        VectorField { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Node value padded to 3 components (z = 0 in 2D).
    pub fn node3(&self, i: usize) -> [f64; 3] {
        let mut out = [0.0; 3];
        out[..self.dim].copy_from_slice(self.node(i));
        out
    }

    pub fn set_node(&mut self, i: usize, v: &[f64]) {
        assert_eq!(v.len(), self.dim);
        self.data[i * self.dim..(i + 1) * self.dim].copy_from_slice(v);
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn node_norm(&self, i: usize) -> f64 {
        self.node(i).iter().map(|&x| x * x).sum::<f64>().sqrt()
    }

    /// Largest deviation of a nodal length from 1.
    pub fn max_unit_residual(&self) -> f64 {
        (0..self.node_count())
            .map(|i| (self.node_norm(i) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Normalize every node to unit length; fails on a zero-length node.
    pub fn normalize_nodes(&mut self) -> Result<()> {
        for i in 0..self.node_count() {
            let norm = self.node_norm(i);
            if norm == 0.0 || !norm.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "cannot normalize node {i}: length {norm}"
                )));
            }
            for a in 0..self.dim {
                self.data[i * self.dim + a] /= norm;
            }
        }
        Ok(())
    }
}

/// Nodal product u = I_h[s n]: componentwise s_i * n_i.
pub fn scalar_times_vector(s: &[f64], n: &VectorField) -> VectorField {
    assert_eq!(s.len(), n.node_count());
    let dim = n.dim();
    let mut data = Vec::with_capacity(s.len() * dim);
    for (i, &si) in s.iter().enumerate() {
        for &c in n.node(i) {
            data.push(si * c);
        }
    }
    VectorField::from_data(dim, data)
}
