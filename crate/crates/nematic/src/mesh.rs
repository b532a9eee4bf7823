//! Structured simplicial meshes of rectangles and boxes.
//!
//! Both generators produce meshes whose stiffness graphs are weakly acute
//! for cubic cells: the 2D generator splits every grid square along the same
//! diagonal into two right triangles (all angles 45 or 90 degrees), and the
//! 3D generator applies the Kuhn subdivision of each grid box into 6 path
//! tetrahedra sharing the main diagonal, which are nonobtuse when the cells
//! are cubes. Acuteness is still verified numerically after assembly, never
//! assumed.

use crate::error::{Error, Result};

/// Conforming simplicial mesh. Coordinates are node-major with `dim`
/// components per node; cells are (dim+1)-tuples of node indices with
/// positive orientation.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub dim: usize,
    pub coords: Vec<f64>,
    pub cells: Vec<usize>,
    /// Generating box, used for boundary face selection; first `dim`
    /// entries are meaningful.
    pub box_lo: [f64; 3],
    pub box_hi: [f64; 3],
}

impl Mesh {
    /// Wrap raw arrays; the bounding box is taken from the coordinates.
    /// Intended for small hand-built meshes in tests.
    pub fn from_parts(dim: usize, coords: Vec<f64>, cells: Vec<usize>) -> Mesh {
        assert!(dim == 2 || dim == 3, "dim must be 2 or 3");
        assert_eq!(coords.len() % dim, 0);
        assert_eq!(cells.len() % (dim + 1), 0);
        let n = coords.len() / dim;
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for i in 0..n {
            for a in 0..dim {
                let x = coords[i * dim + a];
                lo[a] = lo[a].min(x);
                hi[a] = hi[a].max(x);
            }
        }
        for a in dim..3 {
            lo[a] = 0.0;
            hi[a] = 0.0;
        }
        Mesh { dim, coords, cells, box_lo: lo, box_hi: hi }
    }

    pub fn node_count(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Node coordinates padded to 3 components (z = 0 in 2D).
    pub fn node3(&self, i: usize) -> [f64; 3] {
        let p = self.node(i);
        let mut out = [0.0; 3];
        out[..self.dim].copy_from_slice(p);
        out
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c * (self.dim + 1)..(c + 1) * (self.dim + 1)]
    }

    /// Signed d! * volume of a cell; positive for correctly oriented cells.
    pub fn cell_det(&self, c: usize) -> f64 {
        let cell = self.cell(c);
        let p0 = self.node(cell[0]);
        match self.dim {
            2 => {
                let p1 = self.node(cell[1]);
                let p2 = self.node(cell[2]);
                let (ax, ay) = (p1[0] - p0[0], p1[1] - p0[1]);
                let (bx, by) = (p2[0] - p0[0], p2[1] - p0[1]);
                ax * by - ay * bx
            }
            3 => {
                let p1 = self.node(cell[1]);
                let p2 = self.node(cell[2]);
                let p3 = self.node(cell[3]);
                let a = [p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]];
                let b = [p2[0] - p0[0], p2[1] - p0[1], p2[2] - p0[2]];
                let c = [p3[0] - p0[0], p3[1] - p0[1], p3[2] - p0[2]];
                a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                    + a[2] * (b[0] * c[1] - b[1] * c[0])
            }
            _ => unreachable!(),
        }
    }

    /// Area (2D) or volume (3D) of a cell.
    pub fn cell_measure(&self, c: usize) -> f64 {
        let dfac = if self.dim == 2 { 2.0 } else { 6.0 };
        self.cell_det(c).abs() / dfac
    }

    pub fn total_measure(&self) -> f64 {
        (0..self.cell_count()).map(|c| self.cell_measure(c)).sum()
    }
}

/// Axis-aligned face of the generating box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Face {
    XLo,
    XHi,
    YLo,
    YHi,
    ZLo,
    ZHi,
}

impl Face {
    pub fn axis(self) -> usize {
        match self {
            Face::XLo | Face::XHi => 0,
            Face::YLo | Face::YHi => 1,
            Face::ZLo | Face::ZHi => 2,
        }
    }

    pub fn is_hi(self) -> bool {
        matches!(self, Face::XHi | Face::YHi | Face::ZHi)
    }

    pub fn name(self) -> &'static str {
        match self {
            Face::XLo => "x_lo",
            Face::XHi => "x_hi",
            Face::YLo => "y_lo",
            Face::YHi => "y_hi",
            Face::ZLo => "z_lo",
            Face::ZHi => "z_hi",
        }
    }

    pub fn parse(name: &str) -> Result<Face> {
        match name {
            "x_lo" => Ok(Face::XLo),
            "x_hi" => Ok(Face::XHi),
            "y_lo" => Ok(Face::YLo),
            "y_hi" => Ok(Face::YHi),
            "z_lo" => Ok(Face::ZLo),
            "z_hi" => Ok(Face::ZHi),
            other => Err(Error::Config(format!("unknown boundary face '{other}'"))),
        }
    }

    /// The four side walls of a box (x and y faces).
    pub fn side_walls() -> Vec<Face> {
        vec![Face::XLo, Face::XHi, Face::YLo, Face::YHi]
    }

    pub fn all(dim: usize) -> Vec<Face> {
        let mut faces = Face::side_walls();
        if dim == 3 {
            faces.push(Face::ZLo);
            faces.push(Face::ZHi);
        }
        faces
    }
}

/// Which faces carry Dirichlet data for s (gamma_s) and for the director
/// (gamma_n). The director set must select a subset of the s set.
#[derive(Debug, Clone)]
pub struct BoundarySpec {
    pub gamma_s: Vec<Face>,
    pub gamma_n: Vec<Face>,
}

/// Sorted node index sets selected by a BoundarySpec.
#[derive(Debug, Clone)]
pub struct BoundaryNodes {
    pub gamma_s: Vec<usize>,
    pub gamma_n: Vec<usize>,
}

const FACE_TOL: f64 = 1e-12;

/// Sorted indices of the nodes lying on one box face (within 1e-12).
pub fn nodes_on_face(mesh: &Mesh, face: Face) -> Vec<usize> {
    let axis = face.axis();
    assert!(axis < mesh.dim, "face {:?} does not exist in {}d", face, mesh.dim);
    let target = if face.is_hi() { mesh.box_hi[axis] } else { mesh.box_lo[axis] };
    (0..mesh.node_count())
        .filter(|&i| (mesh.node(i)[axis] - target).abs() <= FACE_TOL)
        .collect()
}

/// Resolve a BoundarySpec into node sets and enforce gamma_n within gamma_s.
pub fn select_boundary(mesh: &Mesh, spec: &BoundarySpec) -> Result<BoundaryNodes> {
    let collect = |faces: &[Face]| -> Vec<usize> {
        let mut nodes: Vec<usize> = faces.iter().flat_map(|&f| nodes_on_face(mesh, f)).collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    };
    let gamma_s = collect(&spec.gamma_s);
    let gamma_n = collect(&spec.gamma_n);
    for &i in &gamma_n {
        if gamma_s.binary_search(&i).is_err() {
            return Err(Error::Config(format!(
                "director boundary set is not contained in the s boundary set (node {i})"
            )));
        }
    }
    Ok(BoundaryNodes { gamma_s, gamma_n })
}

fn check_counts(counts: &[usize]) -> Result<()> {
    if counts.contains(&0) {
        return Err(Error::InvalidArgument("cell counts must be at least 1".into()));
    }
    Ok(())
}

fn check_interval(iv: [f64; 2], name: &str) -> Result<()> {
    if !(iv[1] > iv[0]) || !iv[0].is_finite() || !iv[1].is_finite() {
        return Err(Error::InvalidArgument(format!(
            "{name} interval [{}, {}] is degenerate",
            iv[0], iv[1]
        )));
    }
    Ok(())
}

/// Interpolate between interval ends so that t = 0 and t = 1 land exactly
/// on the ends (no accumulated rounding on boundary nodes).
fn lerp(iv: [f64; 2], num: usize, den: usize) -> f64 {
    let t = num as f64 / den as f64;
    iv[0] * (1.0 - t) + iv[1] * t
}

/// Uniform nx-by-ny grid of squares, each split into two right triangles
/// along the same diagonal (lower-left to upper-right).
pub fn build_rect_mesh_2d(nx: usize, ny: usize, bx: [f64; 2], by: [f64; 2]) -> Result<Mesh> {
    check_counts(&[nx, ny])?;
    check_interval(bx, "x")?;
    check_interval(by, "y")?;
    let (mx, my) = (nx + 1, ny + 1);
    let mut coords = Vec::with_capacity(mx * my * 2);
    for j in 0..my {
        for i in 0..mx {
            coords.push(lerp(bx, i, nx));
            coords.push(lerp(by, j, ny));
        }
    }
    let idx = |i: usize, j: usize| i + mx * j;
    let mut cells = Vec::with_capacity(nx * ny * 6);
    for j in 0..ny {
        for i in 0..nx {
            let v00 = idx(i, j);
            let v10 = idx(i + 1, j);
            let v01 = idx(i, j + 1);
            let v11 = idx(i + 1, j + 1);
            // Both triangles counterclockwise, sharing the v00-v11 diagonal.
            cells.extend_from_slice(&[v00, v10, v11]);
            cells.extend_from_slice(&[v00, v11, v01]);
        }
    }
    Ok(Mesh {
        dim: 2,
        coords,
        cells,
        box_lo: [bx[0], by[0], 0.0],
        box_hi: [bx[1], by[1], 0.0],
    })
}

// The 6 permutations of the axes, each defining one path tetrahedron of the
// Kuhn subdivision: walk from the low corner to the high corner adding one
// axis at a time. Odd permutations get two cell vertices swapped so every
// tetrahedron is positively oriented.
const KUHN_PERMS: [([usize; 3], bool); 6] = [
    ([0, 1, 2], false),
    ([0, 2, 1], true),
    ([1, 0, 2], true),
    ([1, 2, 0], false),
    ([2, 0, 1], false),
    ([2, 1, 0], true),
];

/// Uniform grid of boxes, each split into 6 path tetrahedra (Kuhn
/// subdivision) sharing the main diagonal; conforming across boxes because
/// every box uses the same diagonal direction.
pub fn build_box_mesh_3d(
    nx: usize,
    ny: usize,
    nz: usize,
    bx: [f64; 2],
    by: [f64; 2],
    bz: [f64; 2],
) -> Result<Mesh> {
    check_counts(&[nx, ny, nz])?;
    check_interval(bx, "x")?;
    check_interval(by, "y")?;
    check_interval(bz, "z")?;
    let (mx, my, mz) = (nx + 1, ny + 1, nz + 1);
    let mut coords = Vec::with_capacity(mx * my * mz * 3);
    for k in 0..mz {
        for j in 0..my {
            for i in 0..mx {
                coords.push(lerp(bx, i, nx));
                coords.push(lerp(by, j, ny));
                coords.push(lerp(bz, k, nz));
            }
        }
    }
    let idx = |c: [usize; 3]| c[0] + mx * (c[1] + my * c[2]);
    let mut cells = Vec::with_capacity(nx * ny * nz * 24);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                for (perm, swap) in KUHN_PERMS {
                    let mut corner = [i, j, k];
                    let mut verts = [idx(corner), 0, 0, 0];
                    for (step, &axis) in perm.iter().enumerate() {
                        corner[axis] += 1;
                        verts[step + 1] = idx(corner);
                    }
                    if swap {
                        verts.swap(1, 2);
                    }
                    cells.extend_from_slice(&verts);
                }
            }
        }
    }
    Ok(Mesh {
        dim: 3,
        coords,
        cells,
        box_lo: [bx[0], by[0], bz[0]],
        box_hi: [bx[1], by[1], bz[1]],
    })
}
