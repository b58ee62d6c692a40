//! Galerkin assembly: P1 elements in 1D/2D and cubic Hermite beam elements,
//! plus the output (sensor) rows.
//!
//! Triangle integrals use a 6-point degree-4 rule so that every assembled
//! entry with affine coefficient data is exact; 1D element matrices are
//! closed forms and 1D loads use Gauss panels on (clipped) elements.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

use super::fields::{ScalarField, VectorField2};
use super::mesh::{DofMap, IntervalMesh, TriMesh};

/// 8-point Gauss-Legendre rule on [-1, 1].
const GAUSS8_X: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GAUSS8_W: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

pub(crate) fn gauss8(a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in GAUSS8_X.iter().zip(GAUSS8_W.iter()) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// 6-point degree-4 triangle rule (barycentric points, weights sum to 1).
const TRI_RULE: [([f64; 3], f64); 6] = [
    ([0.816_847_572_980_459, 0.091_576_213_509_771, 0.091_576_213_509_771], 0.109_951_743_655_322),
    ([0.091_576_213_509_771, 0.816_847_572_980_459, 0.091_576_213_509_771], 0.109_951_743_655_322),
    ([0.091_576_213_509_771, 0.091_576_213_509_771, 0.816_847_572_980_459], 0.109_951_743_655_322),
    ([0.108_103_018_168_07, 0.445_948_490_915_965, 0.445_948_490_915_965], 0.223_381_589_678_011),
    ([0.445_948_490_915_965, 0.108_103_018_168_07, 0.445_948_490_915_965], 0.223_381_589_678_011),
    ([0.445_948_490_915_965, 0.445_948_490_915_965, 0.108_103_018_168_07], 0.223_381_589_678_011),
];

// ---------------------------------------------------------------------------
// 1D P1
// ---------------------------------------------------------------------------

pub struct Fem1d {
    /// Consistent mass on all nodes.
    pub mass: DenseMatrix,
    /// Stiffness (second-difference form) on all nodes; natural boundary
    /// conditions, so no rows are constrained.
    pub stiffness: DenseMatrix,
    pub dofmap: DofMap,
}

/// P1 mass and stiffness for the Neumann heat problem: all nodes free,
/// zero-flux conditions arise naturally from the weak form.
pub fn assemble_heat_1d_neumann(mesh: &IntervalMesh) -> Fem1d {
    let n = mesh.nodes.len();
    let mut mass = DenseMatrix::zeros(n, n);
    let mut stiffness = DenseMatrix::zeros(n, n);
    for e in 0..mesh.n_elements() {
        let (x0, x1) = mesh.element(e);
        let h = x1 - x0;
        let (i, j) = (e, e + 1);
        mass[(i, i)] += h / 3.0;
        mass[(j, j)] += h / 3.0;
        mass[(i, j)] += h / 6.0;
        mass[(j, i)] += h / 6.0;
        stiffness[(i, i)] += 1.0 / h;
        stiffness[(j, j)] += 1.0 / h;
        stiffness[(i, j)] -= 1.0 / h;
        stiffness[(j, i)] -= 1.0 / h;
    }
    Fem1d { mass, stiffness, dofmap: DofMap::all_free(n) }
}

/// Load vector (f, phi_j) over all nodes, exact on indicator supports.
pub fn p1_load_1d(mesh: &IntervalMesh, field: &ScalarField) -> Vec<f64> {
    let n = mesh.nodes.len();
    let mut load = vec![0.0; n];
    for e in 0..mesh.n_elements() {
        let (x0, x1) = mesh.element(e);
        let h = x1 - x0;
        let Some((c0, c1)) = field.support_1d(x0, x1) else {
            continue;
        };
        load[e] += gauss8(c0, c1, |x| field.eval_1d(x) * (x1 - x) / h);
        load[e + 1] += gauss8(c0, c1, |x| field.eval_1d(x) * (x - x0) / h);
    }
    load
}

/// Same integral for an arbitrary function (extension profiles).
pub fn p1_load_fn_1d(mesh: &IntervalMesh, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let n = mesh.nodes.len();
    let mut load = vec![0.0; n];
    for e in 0..mesh.n_elements() {
        let (x0, x1) = mesh.element(e);
        let h = x1 - x0;
        load[e] += gauss8(x0, x1, |x| f(x) * (x1 - x) / h);
        load[e + 1] += gauss8(x0, x1, |x| f(x) * (x - x0) / h);
    }
    load
}

/// Sensor rows: row k holds the integrals of sensor field k against the P1
/// basis, on all nodes.
pub fn output_rows_1d(mesh: &IntervalMesh, sensors: &[ScalarField]) -> Result<DenseMatrix> {
    for s in sensors {
        if let ScalarField::IndicatorInterval { a, b } = s {
            if *b <= *a || *b < mesh.a || *a > mesh.b {
                return Err(Error::InvalidArgument(format!(
                    "sensor interval ({a}, {b}) does not intersect the domain"
                )));
            }
        }
    }
    let n = mesh.nodes.len();
    let mut rows = DenseMatrix::zeros(sensors.len(), n);
    for (k, s) in sensors.iter().enumerate() {
        let load = p1_load_1d(mesh, s);
        for j in 0..n {
            rows[(k, j)] = load[j];
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// 2D P1
// ---------------------------------------------------------------------------

pub struct Fem2d {
    /// Mass on all nodes.
    pub mass: DenseMatrix,
    /// nu * (grad phi_j, grad phi_i) on all nodes.
    pub diffusion: DenseMatrix,
    /// (alpha phi_j, phi_i) - (phi_j, beta . grad phi_i): the integrated-by-
    /// parts divergence-form convection plus reaction, on all nodes.
    pub convection_reaction: DenseMatrix,
    pub dofmap: DofMap,
}

struct TriGeom {
    area: f64,
    grads: [[f64; 2]; 3],
    verts: [[f64; 2]; 3],
}

fn tri_geometry(mesh: &TriMesh, t: usize) -> TriGeom {
    let [a, b, c] = mesh.triangles[t];
    let (pa, pb, pc) = (mesh.points[a], mesh.points[b], mesh.points[c]);
    let area = 0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]));
    let inv2a = 1.0 / (2.0 * area);
    let grads = [
        [(pb[1] - pc[1]) * inv2a, (pc[0] - pb[0]) * inv2a],
        [(pc[1] - pa[1]) * inv2a, (pa[0] - pc[0]) * inv2a],
        [(pa[1] - pb[1]) * inv2a, (pb[0] - pa[0]) * inv2a],
    ];
    TriGeom { area, grads, verts: [pa, pb, pc] }
}

fn bary_point(g: &TriGeom, lam: &[f64; 3]) -> [f64; 2] {
    [
        lam[0] * g.verts[0][0] + lam[1] * g.verts[1][0] + lam[2] * g.verts[2][0],
        lam[0] * g.verts[0][1] + lam[1] * g.verts[1][1] + lam[2] * g.verts[2][1],
    ]
}

pub fn assemble_parabolic_2d(
    mesh: &TriMesh,
    nu: f64,
    alpha: &ScalarField,
    beta: &VectorField2,
    dirichlet_tags: &[u32],
) -> Result<Fem2d> {
    if nu <= 0.0 {
        return Err(Error::InvalidArgument(format!("diffusion coefficient must be positive, got {nu}")));
    }
    mesh.validate()?;
    // The whole boundary must be tagged and every tag declared Dirichlet.
    let tagged: std::collections::HashSet<(usize, usize)> = mesh
        .boundary_edges
        .iter()
        .map(|e| (e.n0.min(e.n1), e.n0.max(e.n1)))
        .collect();
    for edge in mesh.topological_boundary() {
        if !tagged.contains(&edge) {
            return Err(Error::InvalidMesh(format!(
                "boundary edge ({}, {}) carries no tag; the whole boundary must be tagged",
                edge.0, edge.1
            )));
        }
    }
    for e in &mesh.boundary_edges {
        if !dirichlet_tags.contains(&e.tag) {
            return Err(Error::InvalidArgument(format!(
                "boundary tag {} is not declared Dirichlet",
                e.tag
            )));
        }
    }

    let n = mesh.n_nodes();
    let mut mass = DenseMatrix::zeros(n, n);
    let mut diffusion = DenseMatrix::zeros(n, n);
    let mut convreact = DenseMatrix::zeros(n, n);
    for t in 0..mesh.triangles.len() {
        let g = tri_geometry(mesh, t);
        let tri = mesh.triangles[t];
        for i in 0..3 {
            for j in 0..3 {
                let gd = g.area * (g.grads[i][0] * g.grads[j][0] + g.grads[i][1] * g.grads[j][1]);
                diffusion[(tri[i], tri[j])] += nu * gd;
                let mut m_ij = 0.0;
                let mut r_ij = 0.0;
                for (lam, w) in TRI_RULE.iter() {
                    let p = bary_point(&g, lam);
                    let av = alpha.eval(p[0], p[1]);
                    let bv = beta.eval(p[0], p[1]);
                    if !av.is_finite() || !bv[0].is_finite() || !bv[1].is_finite() {
                        return Err(Error::QuadratureFailure(format!(
                            "coefficient field non-finite at ({}, {})",
                            p[0], p[1]
                        )));
                    }
                    m_ij += w * g.area * lam[i] * lam[j];
                    // Row i is the test function: reaction + integrated-by-
                    // parts convection (valid since tests vanish on the
                    // Dirichlet boundary).
                    r_ij += w
                        * g.area
                        * (av * lam[j] * lam[i]
                            - lam[j] * (bv[0] * g.grads[i][0] + bv[1] * g.grads[i][1]));
                }
                mass[(tri[i], tri[j])] += m_ij;
                convreact[(tri[i], tri[j])] += r_ij;
            }
        }
    }
    let constrained = mesh.boundary_nodes(dirichlet_tags);
    let dofmap = DofMap::from_constrained(n, &constrained);
    Ok(Fem2d { mass, diffusion, convection_reaction: convreact, dofmap })
}

/// Sensor rows over all nodes: row k = quadrature of sensor k against the
/// P1 basis. Indicator rectangles are exact when aligned with the mesh.
pub fn output_rows_2d(mesh: &TriMesh, sensors: &[ScalarField]) -> Result<DenseMatrix> {
    for s in sensors {
        if let ScalarField::IndicatorRect { x0, x1, y0, y1 } = s {
            if x1 <= x0 || y1 <= y0 {
                return Err(Error::InvalidArgument("sensor rectangle is empty".into()));
            }
            let inside = mesh.points.iter().any(|p| p[0] >= *x0 && p[0] <= *x1 && p[1] >= *y0 && p[1] <= *y1);
            if !inside {
                return Err(Error::InvalidArgument("sensor rectangle lies outside the mesh".into()));
            }
        }
    }
    let n = mesh.n_nodes();
    let mut rows = DenseMatrix::zeros(sensors.len(), n);
    for t in 0..mesh.triangles.len() {
        let g = tri_geometry(mesh, t);
        let tri = mesh.triangles[t];
        for (lam, w) in TRI_RULE.iter() {
            let p = bary_point(&g, lam);
            for (k, s) in sensors.iter().enumerate() {
                let cv = s.eval(p[0], p[1]);
                if cv != 0.0 {
                    for i in 0..3 {
                        rows[(k, tri[i])] += w * g.area * cv * lam[i];
                    }
                }
            }
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Cubic Hermite beam
// ---------------------------------------------------------------------------

pub struct FemBeam {
    /// Mass over the 2-per-node (value, slope) layout.
    pub mass: DenseMatrix,
    /// Bending stiffness (phi'', psi'').
    pub bending: DenseMatrix,
    /// Clamped-left map: value and slope at the first node constrained.
    pub dofmap: DofMap,
}

/// Hermite shape functions on an element of length h at local xi in [0, 1]:
/// (left value, left slope, right value, right slope).
pub fn hermite_shape(xi: f64, h: f64) -> [f64; 4] {
    [
        1.0 - 3.0 * xi * xi + 2.0 * xi * xi * xi,
        h * (xi - 2.0 * xi * xi + xi * xi * xi),
        3.0 * xi * xi - 2.0 * xi * xi * xi,
        h * (-xi * xi + xi * xi * xi),
    ]
}

/// Second derivatives of the Hermite shape functions with respect to the
/// physical coordinate.
pub fn hermite_shape_d2(xi: f64, h: f64) -> [f64; 4] {
    let h2 = h * h;
    [
        (-6.0 + 12.0 * xi) / h2,
        (-4.0 + 6.0 * xi) / h,
        (6.0 - 12.0 * xi) / h2,
        (-2.0 + 6.0 * xi) / h,
    ]
}

fn beam_element_mass(h: f64) -> [[f64; 4]; 4] {
    let c = h / 420.0;
    [
        [156.0 * c, 22.0 * h * c, 54.0 * c, -13.0 * h * c],
        [22.0 * h * c, 4.0 * h * h * c, 13.0 * h * c, -3.0 * h * h * c],
        [54.0 * c, 13.0 * h * c, 156.0 * c, -22.0 * h * c],
        [-13.0 * h * c, -3.0 * h * h * c, -22.0 * h * c, 4.0 * h * h * c],
    ]
}

fn beam_element_bending(h: f64) -> [[f64; 4]; 4] {
    let c = 1.0 / (h * h * h);
    [
        [12.0 * c, 6.0 * h * c, -12.0 * c, 6.0 * h * c],
        [6.0 * h * c, 4.0 * h * h * c, -6.0 * h * c, 2.0 * h * h * c],
        [-12.0 * c, -6.0 * h * c, 12.0 * c, -6.0 * h * c],
        [6.0 * h * c, 2.0 * h * h * c, -6.0 * h * c, 4.0 * h * h * c],
    ]
}

pub fn assemble_beam_hermite(mesh: &IntervalMesh) -> FemBeam {
    let n_nodes = mesh.nodes.len();
    let nd = 2 * n_nodes;
    let mut mass = DenseMatrix::zeros(nd, nd);
    let mut bending = DenseMatrix::zeros(nd, nd);
    for e in 0..mesh.n_elements() {
        let (x0, x1) = mesh.element(e);
        let h = x1 - x0;
        let me = beam_element_mass(h);
        let se = beam_element_bending(h);
        let dofs = [2 * e, 2 * e + 1, 2 * e + 2, 2 * e + 3];
        for i in 0..4 {
            for j in 0..4 {
                mass[(dofs[i], dofs[j])] += me[i][j];
                bending[(dofs[i], dofs[j])] += se[i][j];
            }
        }
    }
    FemBeam { mass, bending, dofmap: DofMap::from_constrained(nd, &[0, 1]) }
}

/// Load row (c, phi_i) against the Hermite basis, on all DOFs; indicator
/// intervals are clipped per element and integrated exactly.
pub fn hermite_load(mesh: &IntervalMesh, field: &ScalarField) -> Vec<f64> {
    let nd = 2 * mesh.nodes.len();
    let mut load = vec![0.0; nd];
    for e in 0..mesh.n_elements() {
        let (x0, x1) = mesh.element(e);
        let h = x1 - x0;
        let Some((c0, c1)) = field.support_1d(x0, x1) else {
            continue;
        };
        let dofs = [2 * e, 2 * e + 1, 2 * e + 2, 2 * e + 3];
        for (k, &dof) in dofs.iter().enumerate() {
            load[dof] += gauss8(c0, c1, |x| {
                let xi = (x - x0) / h;
                field.eval_1d(x) * hermite_shape(xi, h)[k]
            });
        }
    }
    load
}

/// Hermite interpolant DOFs (value, slope) of an analytic profile.
pub fn hermite_interpolate(
    mesh: &IntervalMesh,
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
) -> Vec<f64> {
    let mut dofs = Vec::with_capacity(2 * mesh.nodes.len());
    for &x in &mesh.nodes {
        dofs.push(f(x));
        dofs.push(df(x));
    }
    dofs
}

/// Evaluate a Hermite DOF vector at a physical point.
pub fn hermite_eval(mesh: &IntervalMesh, dofs: &[f64], x: f64) -> f64 {
    let n_el = mesh.n_elements();
    let mut e = n_el - 1;
    for k in 0..n_el {
        if x <= mesh.nodes[k + 1] {
            e = k;
            break;
        }
    }
    let (x0, x1) = mesh.element(e);
    let h = x1 - x0;
    let xi = ((x - x0) / h).clamp(0.0, 1.0);
    let sh = hermite_shape(xi, h);
    let d = [dofs[2 * e], dofs[2 * e + 1], dofs[2 * e + 2], dofs[2 * e + 3]];
    sh.iter().zip(d.iter()).map(|(a, b)| a * b).sum()
}

// ---------------------------------------------------------------------------
// Restriction to free DOFs
// ---------------------------------------------------------------------------

pub fn restrict(m: &DenseMatrix, dof: &DofMap) -> DenseMatrix {
    m.select_rows(&dof.free).select_cols(&dof.free)
}

pub fn restrict_cols(m: &DenseMatrix, dof: &DofMap) -> DenseMatrix {
    m.select_cols(&dof.free)
}

pub fn restrict_vec(v: &[f64], dof: &DofMap) -> Vec<f64> {
    dof.free.iter().map(|&i| v[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh_fem::mesh::{build_interval_mesh, build_rect_mesh};
    use crate::numlin;

    #[test]
    fn heat_two_element_stiffness() {
        let mesh = build_interval_mesh(0.0, 1.0, 2).unwrap();
        let fem = assemble_heat_1d_neumann(&mesh);
        let expect = DenseMatrix::from_rows(&[&[2.0, -2.0, 0.0], &[-2.0, 4.0, -2.0], &[0.0, -2.0, 2.0]]);
        assert!((&fem.stiffness - &expect).norm_max() < 1e-14);
    }

    #[test]
    fn heat_mass_partition_of_unity() {
        let mesh = build_interval_mesh(0.0, 1.0, 7).unwrap();
        let fem = assemble_heat_1d_neumann(&mesh);
        let ones = vec![1.0; mesh.nodes.len()];
        let m1 = fem.mass.matvec(&ones);
        let total: f64 = m1.iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn heat_neumann_spectrum_converges_from_above() {
        // Eigenvalues of M^{-1} K approach (k pi)^2 monotonically from above.
        let exact = [0.0, std::f64::consts::PI.powi(2), (2.0 * std::f64::consts::PI).powi(2), (3.0 * std::f64::consts::PI).powi(2)];
        let mut prev: Option<Vec<f64>> = None;
        for n in [15usize, 30, 60] {
            let mesh = build_interval_mesh(0.0, 1.0, n).unwrap();
            let fem = assemble_heat_1d_neumann(&mesh);
            let vals = numlin::sym_eigen_generalized(&fem.stiffness, &fem.mass).unwrap();
            for k in 0..4 {
                assert!(vals[k] >= exact[k] - 1e-9, "discrete eigenvalue below the exact one");
                if let Some(p) = &prev {
                    assert!(vals[k] <= p[k] + 1e-9, "refinement must not increase eigenvalue {k}");
                }
            }
            if n == 60 {
                for k in 1..4 {
                    let rel = (vals[k] - exact[k]) / exact[k];
                    assert!(rel < 0.05, "eigenvalue {k} off by {rel:.3}");
                }
            }
            prev = Some(vals);
        }
    }

    #[test]
    fn p1_mass_unit_triangle_closed_form() {
        // Single unit right triangle against the exact barycentric integral
        // formula: int lam_i lam_j = 2A * 1!1!/(2+2)! * (2 if i == j).
        let mesh = TriMesh {
            points: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            boundary_edges: vec![
                crate::mesh_fem::mesh::BoundaryEdge { n0: 0, n1: 1, tag: 0 },
                crate::mesh_fem::mesh::BoundaryEdge { n0: 1, n1: 2, tag: 0 },
                crate::mesh_fem::mesh::BoundaryEdge { n0: 2, n1: 0, tag: 0 },
            ],
        };
        let fem = assemble_parabolic_2d(
            &mesh,
            1.0,
            &ScalarField::Constant(0.0),
            &VectorField2::zero(),
            &[0],
        )
        .unwrap();
        let area = 0.5;
        for i in 0..3 {
            for j in 0..3 {
                let expect = area / 12.0 * if i == j { 2.0 } else { 1.0 };
                assert!((fem.mass[(i, j)] - expect).abs() < 1e-15, "mass ({i},{j})");
            }
        }
    }

    #[test]
    fn zero_coefficients_give_zero_convection_reaction() {
        let mesh = build_rect_mesh((0.0, 1.0), (0.0, 1.0), 3, 3, [0, 0, 0, 0]).unwrap();
        let fem = assemble_parabolic_2d(
            &mesh,
            1.0,
            &ScalarField::Constant(0.0),
            &VectorField2::zero(),
            &[0],
        )
        .unwrap();
        assert_eq!(fem.convection_reaction.norm_max(), 0.0);
    }

    #[test]
    fn quadrature_exact_for_affine_data() {
        // Affine alpha and beta on a single triangle: compare against the
        // exact barycentric monomial formula
        // int lam1^a lam2^b lam3^c = 2A a! b! c! / (a+b+c+2)!.
        let mesh = TriMesh {
            points: vec![[0.0, 0.0], [2.0, 0.0], [0.5, 1.5]],
            triangles: vec![[0, 1, 2]],
            boundary_edges: vec![
                crate::mesh_fem::mesh::BoundaryEdge { n0: 0, n1: 1, tag: 0 },
                crate::mesh_fem::mesh::BoundaryEdge { n0: 1, n1: 2, tag: 0 },
                crate::mesh_fem::mesh::BoundaryEdge { n0: 2, n1: 0, tag: 0 },
            ],
        };
        let alpha = ScalarField::Linear { c0: 0.3, cx: 1.2, cy: -0.7 };
        let beta = VectorField2 {
            x: ScalarField::Linear { c0: -0.5, cx: 0.1, cy: 0.4 },
            y: ScalarField::Linear { c0: 0.2, cx: -0.3, cy: 0.6 },
        };
        let fem = assemble_parabolic_2d(&mesh, 1.0, &alpha, &beta, &[0]).unwrap();

        let g = tri_geometry(&mesh, 0);
        let fact = |k: usize| -> f64 { (1..=k).map(|v| v as f64).product::<f64>().max(1.0) };
        let bary_int = |e: [usize; 3]| -> f64 {
            2.0 * g.area * fact(e[0]) * fact(e[1]) * fact(e[2]) / fact(e[0] + e[1] + e[2] + 2)
        };
        // alpha in barycentric form: alpha = sum_k alpha(v_k) lam_k.
        let alpha_v: Vec<f64> = (0..3).map(|k| alpha.eval(g.verts[k][0], g.verts[k][1])).collect();
        let beta_v: Vec<[f64; 2]> = (0..3).map(|k| beta.eval(g.verts[k][0], g.verts[k][1])).collect();
        for i in 0..3 {
            for j in 0..3 {
                let mut exact = 0.0;
                for k in 0..3 {
                    let mut e = [0usize; 3];
                    e[i] += 1;
                    e[j] += 1;
                    e[k] += 1;
                    exact += alpha_v[k] * bary_int(e);
                    let mut e2 = [0usize; 3];
                    e2[j] += 1;
                    e2[k] += 1;
                    let bdotg = beta_v[k][0] * g.grads[i][0] + beta_v[k][1] * g.grads[i][1];
                    exact -= bdotg * bary_int(e2);
                }
                assert!(
                    (fem.convection_reaction[(i, j)] - exact).abs() < 1e-12,
                    "entry ({i},{j}): {} vs {exact}",
                    fem.convection_reaction[(i, j)]
                );
            }
        }
    }

    #[test]
    fn assembly_is_node_permutation_invariant() {
        let mesh = build_rect_mesh((0.0, 1.0), (0.0, 1.0), 2, 2, [0, 0, 0, 0]).unwrap();
        let alpha = ScalarField::Linear { c0: 1.0, cx: 2.0, cy: 0.0 };
        let beta = VectorField2::zero();
        let fem = assemble_parabolic_2d(&mesh, 1.0, &alpha, &beta, &[0]).unwrap();

        // Permute node numbering and remap triangles/boundary.
        let n = mesh.n_nodes();
        let perm: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
        let mut inv = vec![0usize; n];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        let mesh2 = TriMesh {
            points: {
                let mut pts = vec![[0.0; 2]; n];
                for i in 0..n {
                    pts[perm[i]] = mesh.points[i];
                }
                pts
            },
            triangles: mesh.triangles.iter().map(|t| [perm[t[0]], perm[t[1]], perm[t[2]]]).collect(),
            boundary_edges: mesh
                .boundary_edges
                .iter()
                .map(|e| crate::mesh_fem::mesh::BoundaryEdge { n0: perm[e.n0], n1: perm[e.n1], tag: e.tag })
                .collect(),
        };
        let fem2 = assemble_parabolic_2d(&mesh2, 1.0, &alpha, &beta, &[0]).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert!(
                    (fem.mass[(i, j)] - fem2.mass[(perm[i], perm[j])]).abs() < 1e-14,
                    "mass not permutation covariant at ({i},{j})"
                );
                assert!(
                    (fem.convection_reaction[(i, j)] - fem2.convection_reaction[(perm[i], perm[j])]).abs() < 1e-14
                );
            }
        }
    }

    #[test]
    fn sensor_row_area_check() {
        // Indicator of a mesh-aligned rectangle applied to w = 1 returns the
        // rectangle area.
        let mesh = build_rect_mesh((0.0, 1.0), (0.0, 1.0), 8, 8, [0, 0, 0, 0]).unwrap();
        let sensor = ScalarField::IndicatorRect { x0: 0.25, x1: 0.75, y0: 0.25, y1: 0.75 };
        let rows = output_rows_2d(&mesh, &[sensor]).unwrap();
        let total: f64 = rows.row(0).iter().sum();
        assert!((total - 0.25).abs() < 1e-12, "total {total}");
    }

    #[test]
    fn sensor_row_whole_domain_is_mass_action() {
        let mesh = build_interval_mesh(0.0, 1.0, 5).unwrap();
        let fem = assemble_heat_1d_neumann(&mesh);
        let rows = output_rows_1d(&mesh, &[ScalarField::Constant(1.0)]).unwrap();
        let ones = vec![1.0; mesh.nodes.len()];
        let m1 = fem.mass.matvec(&ones);
        for j in 0..m1.len() {
            assert!((rows[(0, j)] - m1[j]).abs() < 1e-14);
        }
    }

    #[test]
    fn beam_element_bending_matches_quadrature_oracle() {
        // Oracle: Gauss integration of the analytic second derivatives.
        let h = 0.37;
        let expect = beam_element_bending(h);
        for i in 0..4 {
            for j in 0..4 {
                let oracle = gauss8(0.0, 1.0, |xi| {
                    let d2 = hermite_shape_d2(xi, h);
                    d2[i] * d2[j] * h
                });
                assert!(
                    (expect[i][j] - oracle).abs() < 1e-10 * (1.0 + oracle.abs()),
                    "bending ({i},{j}): closed form {} vs oracle {oracle}",
                    expect[i][j]
                );
            }
        }
    }

    #[test]
    fn beam_mass_matches_quadrature_oracle() {
        let h = 1.3;
        let expect = beam_element_mass(h);
        for i in 0..4 {
            for j in 0..4 {
                let oracle = gauss8(0.0, 1.0, |xi| {
                    let s = hermite_shape(xi, h);
                    s[i] * s[j] * h
                });
                assert!((expect[i][j] - oracle).abs() < 1e-12 * (1.0 + oracle.abs()));
            }
        }
    }

    #[test]
    fn bending_annihilates_affine_fields() {
        let mesh = build_interval_mesh(0.0, 2.0, 6).unwrap();
        let beam = assemble_beam_hermite(&mesh);
        // Affine field w = 3 + 2 x: value/slope DOFs.
        let dofs = hermite_interpolate(&mesh, |x| 3.0 + 2.0 * x, |_| 2.0);
        let r = beam.bending.matvec(&dofs);
        assert!(r.iter().all(|v| v.abs() < 1e-12), "bending should annihilate affine fields");
    }

    #[test]
    fn beam_dof_counts() {
        let mesh = build_interval_mesh(0.0, 7.0, 34).unwrap();
        let beam = assemble_beam_hermite(&mesh);
        assert_eq!(beam.mass.rows(), 70);
        assert_eq!(beam.dofmap.n_free(), 68);
    }

    #[test]
    fn beam_sensor_aligned_indicator() {
        // chi_(2,4) with element boundaries exactly at 2 and 4 integrates the
        // interior elements exactly: row applied to w = 1 gives length 2.
        let mesh = build_interval_mesh(0.0, 7.0, 35).unwrap(); // h = 0.2
        let row = hermite_load(&mesh, &ScalarField::IndicatorInterval { a: 2.0, b: 4.0 });
        let ones = hermite_interpolate(&mesh, |_| 1.0, |_| 0.0);
        let total: f64 = row.iter().zip(ones.iter()).map(|(a, b)| a * b).sum();
        assert!((total - 2.0).abs() < 1e-12);
    }

    #[test]
    fn mass_matrices_positive_definite() {
        let mesh1 = build_interval_mesh(0.0, 1.0, 9).unwrap();
        let fem1 = assemble_heat_1d_neumann(&mesh1);
        let (v1, _) = numlin::sym_eigen(&fem1.mass).unwrap();
        assert!(v1[0] > 0.0);
        let mesh2 = build_rect_mesh((0.0, 1.0), (0.0, 1.0), 4, 4, [0, 0, 0, 0]).unwrap();
        let fem2 = assemble_parabolic_2d(
            &mesh2,
            1.0,
            &ScalarField::Constant(0.0),
            &VectorField2::zero(),
            &[0],
        )
        .unwrap();
        let (v2, _) = numlin::sym_eigen(&fem2.mass).unwrap();
        assert!(v2[0] > 0.0);
        let beam = assemble_beam_hermite(&mesh1);
        let (v3, _) = numlin::sym_eigen(&beam.mass).unwrap();
        assert!(v3[0] > 0.0);
    }
}
