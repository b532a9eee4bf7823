//! Finite element toolkit for the one-constant Ericksen model of nematic
//! liquid crystals with variable degree of orientation.
//!
//! The state is a pair (s, n): a scalar degree of orientation s in (-1/2, 1)
//! and a unit director n. The energy
//!
//!   E[s, n] = 1/2 * int kappa |grad s|^2 + s^2 |grad n|^2 + int psi(s)
//!
//! degenerates where s vanishes, which is what admits point, line, and plane
//! defects at finite energy. The discretization keeps that structure at the
//! nodes of a weakly acute mesh: the elastic energy is a sum over node pairs
//! weighted by the off-diagonal stiffness entries k_ij >= 0, and the
//! minimizer is a quasi-gradient flow that alternates a tangential director
//! solve, nodal normalization, and an implicit convex-split update of s. Each
//! sweep decreases the discrete energy monotonically without any
//! regularization of the degenerate weight.
//!
//! Modules:
//! - [`mesh`]: structured simplicial meshes of rectangles and boxes whose
//!   stiffness graphs are weakly acute, plus boundary node selection.
//! - [`quad`]: positive-weight simplex quadrature, exact to degree 4.
//! - [`fem`]: stiffness graph k_ij, acuteness checks, lumped and consistent
//!   mass, Lagrange interpolation.
//! - [`fields`]: nodal scalar and vector fields.
//! - [`potential`]: double-well potential with explicit convex-concave split.
//! - [`energy`]: the discrete energies, the auxiliary identity, the
//!   consistency term, and the first variations driving the flow.
//! - [`solver`]: matrix-free preconditioned conjugate gradients with
//!   symmetric Dirichlet elimination, plus a dense reference solver.
//! - [`flow`]: the quasi-gradient-flow loop and its three steps.
//! - [`scenario`]: named experiment presets and run assembly.

pub mod energy;
pub mod error;
pub mod fem;
pub mod fields;
pub mod flow;
pub mod mesh;
pub mod potential;
pub mod quad;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
