//! Shared helpers for the integration suites: seeded random admissible states
//! and the mesh ladder the energy checks run on.

use nematic::fields::VectorField;
use nematic::mesh::Mesh;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws a random admissible state: s in (-0.45, 0.95) nodewise, n unit
/// nodewise. Directors are sampled uniformly on the sphere (circle in 2D) by
/// normalizing rejection-sampled points from the unit ball.
pub fn random_admissible(mesh: &Mesh, rng: &mut ChaCha8Rng) -> (Vec<f64>, VectorField) {
    let nn = mesh.node_count();
    let s: Vec<f64> = (0..nn).map(|_| rng.gen_range(-0.45..0.95)).collect();
    let mut n = VectorField::zeros(mesh.dim, nn);
    for i in 0..nn {
        n.set_node(i, &random_unit(mesh.dim, rng));
    }
    (s, n)
}

pub fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 1e-3 && len <= 1.0 {
            return v.iter().map(|x| x / len).collect();
        }
    }
}

/// A small random tangential perturbation of the director, used by the
/// variational checks. Not normalized on purpose.
pub fn random_vector(dim: usize, nn: usize, scale: f64, rng: &mut ChaCha8Rng) -> VectorField {
    let mut v = VectorField::zeros(dim, nn);
    for i in 0..nn {
        let d: Vec<f64> = (0..dim).map(|_| rng.gen_range(-scale..scale)).collect();
        v.set_node(i, &d);
    }
    v
}

pub fn random_scalar(nn: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..nn).map(|_| rng.gen_range(-scale..scale)).collect()
}
