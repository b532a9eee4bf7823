//! Ready-made experiment setups.
//!
//! Each preset packages a domain, resolution, boundary data, initial state,
//! and constants for one experiment family: the point defect in the square,
//! the plane defect between twisted plates, the fluting and propeller
//! states driven by side-wall anchoring, and the floating plane defect in a
//! flattened box. All of them start from the equilibrium order parameter
//! with an off-center regularized point defect in the director, and let the
//! flow find the low-energy configuration.

use crate::error::{Error, Result};
use crate::fields::VectorField;
use crate::flow::{hedgehog_director, point_defect_director, Flow, FlowConfig};
use crate::mesh::{
    build_box_mesh_3d, build_rect_mesh_2d, select_boundary, BoundarySpec, Face, Mesh,
};
use crate::potential::Potential;

/// The built-in experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Point defect in the unit square: kappa = 2, double well on, radial
    /// anchoring on the whole boundary.
    Point2d,
    /// Plane defect in the unit cube: kappa = 0.2, double well off,
    /// orthogonal uniaxial anchoring on the two z-plates.
    Plane3d,
    /// Side-wall radial anchoring on the cube at kappa = 2: the director
    /// escapes in z and no defect forms.
    Fluting,
    /// Same anchoring at kappa = 0.1: a propeller-shaped defect region.
    Propeller,
    /// Propeller setup on a box flattened to height 0.7143: the defect
    /// plane floats between top and bottom.
    Floating,
}

impl Preset {
    pub fn all() -> [Preset; 5] {
        [Preset::Point2d, Preset::Plane3d, Preset::Fluting, Preset::Propeller, Preset::Floating]
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Point2d => "point2d",
            Preset::Plane3d => "plane3d",
            Preset::Fluting => "fluting",
            Preset::Propeller => "propeller",
            Preset::Floating => "floating",
        }
    }

    pub fn parse(name: &str) -> Result<Preset> {
        Preset::all()
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| {
                let known: Vec<&str> = Preset::all().iter().map(|p| p.name()).collect();
                Error::Config(format!("unknown preset {name:?}; known: {}", known.join(", ")))
            })
    }
}

/// Dirichlet data for the director on gamma_n.
#[derive(Debug, Clone, Copy)]
pub enum DirectorBc {
    /// Planar radial field about a center (z-component zero in 3d).
    Radial { center: [f64; 2] },
    /// (1,0,0) on the bottom z-plate, (0,1,0) on the top one.
    TwistPlates,
}

/// A fully specified experiment: mesh, constants, boundary data, initial
/// state, and run defaults. Construct via `Scenario::preset`, adjust
/// fields, then `build` a flow.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub dim: usize,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub box_x: [f64; 2],
    pub box_y: [f64; 2],
    pub box_z: [f64; 2],
    pub kappa: f64,
    pub dt: f64,
    pub potential_enabled: bool,
    pub boundary: BoundarySpec,
    pub director_bc: DirectorBc,
    /// Center of the initial regularized point defect, deliberately away
    /// from the domain center so equilibria are found, not planted. 2d
    /// scenarios ignore the third component; 3d scenarios seed the full
    /// hedgehog, whose out-of-plane component lets the flow escape the
    /// (invariant) planar configuration.
    pub init_defect_center: [f64; 3],
    pub max_steps: usize,
    pub stop_tol_factor: f64,
    pub cg_rel_tol: f64,
}

impl Scenario {
    pub fn preset(p: Preset) -> Scenario {
        let unit = [0.0, 1.0];
        let base = Scenario {
            name: p.name().to_string(),
            dim: 3,
            nx: 0,
            ny: 0,
            nz: 0,
            box_x: unit,
            box_y: unit,
            box_z: unit,
            kappa: 1.0,
            dt: 0.02,
            potential_enabled: false,
            boundary: BoundarySpec { gamma_s: Face::side_walls(), gamma_n: Face::side_walls() },
            director_bc: DirectorBc::Radial { center: [0.5, 0.5] },
            init_defect_center: [0.25, 0.25, 0.25],
            max_steps: 2000,
            stop_tol_factor: 1e-10,
            cg_rel_tol: 1e-10,
        };
        let s = match p {
            Preset::Point2d => Scenario {
                dim: 2,
                kappa: 2.0,
                potential_enabled: true,
                boundary: BoundarySpec { gamma_s: Face::all(2), gamma_n: Face::all(2) },
                ..base
            },
            Preset::Plane3d => Scenario {
                kappa: 0.2,
                boundary: BoundarySpec {
                    gamma_s: vec![Face::ZLo, Face::ZHi],
                    gamma_n: vec![Face::ZLo, Face::ZHi],
                },
                director_bc: DirectorBc::TwistPlates,
                ..base
            },
            Preset::Fluting => Scenario { kappa: 2.0, ..base },
            Preset::Propeller => Scenario { kappa: 0.1, ..base },
            Preset::Floating => Scenario { kappa: 0.1, box_y: [0.0, 0.7143], ..base },
        };
        let default_res = if s.dim == 2 { 64 } else { 16 };
        s.with_resolution(default_res)
    }

    /// Set the subdivision count along x; the other axes scale with the
    /// physical extent of the box, so cells stay near-cubic (the flattened
    /// box gets proportionally fewer layers).
    pub fn with_resolution(mut self, n: usize) -> Scenario {
        let scaled = |span: [f64; 2]| {
            (((span[1] - span[0]) * n as f64).round() as usize).max(1)
        };
        self.nx = scaled(self.box_x);
        self.ny = scaled(self.box_y);
        self.nz = if self.dim == 3 { scaled(self.box_z) } else { 0 };
        self
    }

    /// Generate the mesh alone (for mesh checks without building a flow).
    pub fn build_mesh(&self) -> Result<Mesh> {
        match self.dim {
            2 => build_rect_mesh_2d(self.nx, self.ny, self.box_x, self.box_y),
            3 => build_box_mesh_3d(self.nx, self.ny, self.nz, self.box_x, self.box_y, self.box_z),
            d => Err(Error::Config(format!("scenario dimension {d} is not 2 or 3"))),
        }
    }

    /// The potential this scenario runs with: the quartic well, or its
    /// disabled stand-in that keeps the same equilibrium value.
    pub fn potential(&self) -> Potential {
        let well = Potential::quartic_well();
        if self.potential_enabled {
            well
        } else {
            Potential::disabled(well.s_star())
        }
    }

    /// Initial state: s at the well equilibrium everywhere, director from
    /// the off-center defect, then boundary data written over gamma_n
    /// nodes. The values the initial fields carry on gamma_s and gamma_n
    /// become the Dirichlet data of the flow.
    pub fn initial_state(&self, mesh: &Mesh) -> Result<(Vec<f64>, VectorField)> {
        let s_star = self.potential().s_star();
        let s0 = vec![s_star; mesh.node_count()];
        let c = self.init_defect_center;
        let mut n0 = if self.dim == 3 {
            hedgehog_director(mesh, c)
        } else {
            point_defect_director(mesh, [c[0], c[1]])
        };
        let nodes = select_boundary(mesh, &self.boundary)?;
        match self.director_bc {
            DirectorBc::Radial { center } => {
                for &i in &nodes.gamma_n {
                    let x = mesh.node(i);
                    let dx = x[0] - center[0];
                    let dy = x[1] - center[1];
                    let r = (dx * dx + dy * dy).sqrt();
                    let mut v = vec![0.0; self.dim];
                    if r < 1e-12 {
                        v[0] = 1.0;
                    } else {
                        v[0] = dx / r;
                        v[1] = dy / r;
                    }
                    n0.set_node(i, &v);
                }
            }
            DirectorBc::TwistPlates => {
                if self.dim != 3 {
                    return Err(Error::Config("plate anchoring needs a 3d box".into()));
                }
                for &i in &nodes.gamma_n {
                    let z = mesh.node(i)[2];
                    let lo = (z - self.box_z[0]).abs() <= (z - self.box_z[1]).abs();
                    n0.set_node(i, if lo { &[1.0, 0.0, 0.0] } else { &[0.0, 1.0, 0.0] });
                }
            }
        }
        Ok((s0, n0))
    }

    /// Assemble everything into a ready-to-run flow.
    pub fn build(&self) -> Result<Flow> {
        let mesh = self.build_mesh()?;
        let (s0, n0) = self.initial_state(&mesh)?;
        let config = FlowConfig {
            kappa: self.kappa,
            dt: self.dt,
            cg_rel_tol: self.cg_rel_tol,
            stop_tol_factor: self.stop_tol_factor,
            max_newton: 25,
        };
        Flow::new(mesh, self.potential(), &self.boundary, config, s0, n0)
    }
}
