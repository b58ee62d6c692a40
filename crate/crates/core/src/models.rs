//! Plant definitions: the three boundary-controlled families, each
//! discretized to (A_d, A_rc, C_0) matrices on free DOFs in standard form
//! (mass inverse applied once at discretization).

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::mesh_fem::{
    assemble_beam_hermite, assemble_heat_1d_neumann, assemble_parabolic_2d, build_interval_mesh,
    build_rect_mesh, hermite_load, load_mesh_file, output_rows_1d, output_rows_2d, restrict,
    restrict_cols, BoundaryProfile, DofMap, IntervalMesh, ScalarField, SideTags, TriMesh,
    VectorField2,
};
use crate::numlin::{self, ComplexSpectrum};
use std::path::PathBuf;

/// Boundary condition family for the beam: moment-controlled with free
/// shear, or control through the combined (elastic + damping) moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcVariant {
    ShearFreeMoment,
    CombinedMoment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActuatorSpec2d {
    pub tag: u32,
    pub profile: BoundaryProfile,
}

/// Beam output: weights against deflection and/or velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamSensor {
    pub deflection: Option<ScalarField>,
    pub velocity: Option<ScalarField>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Rect { x_range: (f64, f64), y_range: (f64, f64), tags: SideTags },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlantSpec {
    /// 1D heat equation with Neumann boundary control at the right end and
    /// zero flux at the left; `alpha` is a constant reaction coefficient
    /// (zero in the nominal model).
    Heat1dNeumann { nu: f64, alpha: f64, sensors: Vec<ScalarField> },
    /// Diffusion-convection-reaction equation with Dirichlet boundary
    /// control on tagged segments and zero Dirichlet data elsewhere.
    Parabolic2d {
        nu: f64,
        alpha: ScalarField,
        beta: VectorField2,
        mesh: MeshSource,
        actuators: Vec<ActuatorSpec2d>,
        sensors: Vec<ScalarField>,
    },
    /// Euler-Bernoulli beam with Kelvin-Voigt damping, clamped left end,
    /// moment control at the right end.
    BeamKv {
        length: f64,
        alpha: f64,
        beta: f64,
        gamma: f64,
        bc_variant: BcVariant,
        sensors: Vec<BeamSensor>,
    },
}

impl PlantSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PlantSpec::Heat1dNeumann { nu, sensors, .. } => {
                if *nu <= 0.0 {
                    return Err(Error::InvalidArgument("heat: nu must be positive".into()));
                }
                if sensors.is_empty() {
                    return Err(Error::InvalidArgument("heat: at least one sensor required".into()));
                }
            }
            PlantSpec::Parabolic2d { nu, actuators, sensors, .. } => {
                if *nu <= 0.0 {
                    return Err(Error::InvalidArgument("parabolic: nu must be positive".into()));
                }
                if actuators.is_empty() || sensors.is_empty() {
                    return Err(Error::InvalidArgument(
                        "parabolic: at least one actuator and one sensor required".into(),
                    ));
                }
            }
            PlantSpec::BeamKv { length, alpha, beta, gamma, sensors, .. } => {
                if *length <= 0.0 || *alpha <= 0.0 || *beta <= 0.0 || *gamma < 0.0 {
                    return Err(Error::InvalidArgument(
                        "beam: need length > 0, alpha > 0, beta > 0, gamma >= 0".into(),
                    ));
                }
                if sensors.is_empty() {
                    return Err(Error::InvalidArgument("beam: at least one sensor required".into()));
                }
                if sensors.iter().any(|s| s.deflection.is_none() && s.velocity.is_none()) {
                    return Err(Error::InvalidArgument("beam: sensor with no weights".into()));
                }
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        match self {
            PlantSpec::Heat1dNeumann { .. } | PlantSpec::BeamKv { .. } => 1,
            PlantSpec::Parabolic2d { actuators, .. } => actuators.len(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            PlantSpec::Heat1dNeumann { sensors, .. } => sensors.len(),
            PlantSpec::Parabolic2d { sensors, .. } => sensors.len(),
            PlantSpec::BeamKv { sensors, .. } => sensors.len(),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            PlantSpec::Heat1dNeumann { .. } => "heat1d_neumann",
            PlantSpec::Parabolic2d { .. } => "parabolic2d",
            PlantSpec::BeamKv { .. } => "beam_kv",
        }
    }
}

/// Multiplicative/additive coefficient perturbations for robustness runs.
/// The controller is never told; only the simulation plant changes.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub nu_factor: f64,
    pub alpha_factor: f64,
    pub alpha_shift: f64,
    pub beta_factor: f64,
    pub gamma_factor: f64,
}

impl Default for Perturbation {
    fn default() -> Self {
        Perturbation { nu_factor: 1.0, alpha_factor: 1.0, alpha_shift: 0.0, beta_factor: 1.0, gamma_factor: 1.0 }
    }
}

impl Perturbation {
    pub fn is_identity(&self) -> bool {
        *self == Perturbation::default()
    }
}

fn shift_field(f: &ScalarField, s: f64) -> Result<ScalarField> {
    if s == 0.0 {
        return Ok(f.clone());
    }
    Ok(match f {
        ScalarField::Constant(c) => ScalarField::Constant(c + s),
        ScalarField::Linear { c0, cx, cy } => ScalarField::Linear { c0: c0 + s, cx: *cx, cy: *cy },
        ScalarField::Trig { c0, terms } => ScalarField::Trig { c0: c0 + s, terms: terms.clone() },
        _ => {
            return Err(Error::InvalidArgument(
                "cannot shift an indicator coefficient field".into(),
            ))
        }
    })
}

fn scale_field(f: &ScalarField, k: f64) -> Result<ScalarField> {
    if k == 1.0 {
        return Ok(f.clone());
    }
    Ok(match f {
        ScalarField::Constant(c) => ScalarField::Constant(c * k),
        ScalarField::Linear { c0, cx, cy } => ScalarField::Linear { c0: c0 * k, cx: cx * k, cy: cy * k },
        ScalarField::Trig { c0, terms } => ScalarField::Trig {
            c0: c0 * k,
            terms: terms
                .iter()
                .map(|t| crate::mesh_fem::TrigTerm { amp: t.amp * k, ..*t })
                .collect(),
        },
        _ => {
            return Err(Error::InvalidArgument(
                "cannot scale an indicator coefficient field".into(),
            ))
        }
    })
}

/// Family-specific data kept for the extension construction and residuals.
#[derive(Debug, Clone)]
pub enum PlantDetail {
    Heat1d {
        mesh: IntervalMesh,
        mass_full: DenseMatrix,
        stiffness_full: DenseMatrix,
        nu_eff: f64,
    },
    Parabolic2d {
        mesh: TriMesh,
        mass_full: DenseMatrix,
        /// Effective-nu-scaled diffusion on all nodes.
        diffusion_full: DenseMatrix,
    },
    Beam {
        mesh: IntervalMesh,
        /// Restricted (free Hermite DOFs) mass and bending blocks.
        mass_w: DenseMatrix,
        bending_w: DenseMatrix,
        alpha_eff: f64,
        beta_eff: f64,
        gamma_eff: f64,
    },
}

/// FEM-level plant: standard-form matrices on free DOFs.
#[derive(Debug, Clone)]
pub struct DiscretizedPlant {
    pub spec: PlantSpec,
    pub resolution: usize,
    /// Discrete diffusion/bending generator part (beam: first-order blocks).
    pub a0: DenseMatrix,
    /// Discrete reaction-convection part (heat nominal: zero).
    pub arc: DenseMatrix,
    /// Output rows on the state.
    pub c0: DenseMatrix,
    pub dofmap: DofMap,
    pub detail: PlantDetail,
}

impl DiscretizedPlant {
    pub fn state_dim(&self) -> usize {
        self.a0.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.c0.rows()
    }

    /// Full generator A_0 = A_d + A_rc.
    pub fn full_generator(&self) -> DenseMatrix {
        &self.a0 + &self.arc
    }
}

pub fn discretize(spec: &PlantSpec, resolution: usize) -> Result<DiscretizedPlant> {
    discretize_perturbed(spec, resolution, &Perturbation::default())
}

pub fn discretize_perturbed(
    spec: &PlantSpec,
    resolution: usize,
    pert: &Perturbation,
) -> Result<DiscretizedPlant> {
    spec.validate()?;
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    match spec {
        PlantSpec::Heat1dNeumann { nu, alpha, sensors } => {
            let mesh = build_interval_mesh(0.0, 1.0, resolution)?;
            let fem = assemble_heat_1d_neumann(&mesh);
            let n = fem.mass.rows();
            let nu_eff = nu * pert.nu_factor;
            let alpha_eff = alpha * pert.alpha_factor + pert.alpha_shift;
            let lu = numlin::lu_factor(&fem.mass)?;
            let a0 = lu.solve_mat(&fem.stiffness).scale(-nu_eff);
            // Constant reaction: M^{-1}(alpha M) collapses to alpha I.
            let arc = DenseMatrix::scaled_identity(n, -alpha_eff);
            let c0 = output_rows_1d(&mesh, sensors)?;
            Ok(DiscretizedPlant {
                spec: spec.clone(),
                resolution,
                a0,
                arc,
                c0,
                dofmap: fem.dofmap,
                detail: PlantDetail::Heat1d {
                    mesh,
                    mass_full: fem.mass,
                    stiffness_full: fem.stiffness,
                    nu_eff,
                },
            })
        }
        PlantSpec::Parabolic2d { nu, alpha, beta, mesh, actuators, sensors } => {
            let tri = match mesh {
                MeshSource::Rect { x_range, y_range, tags } => {
                    build_rect_mesh(*x_range, *y_range, resolution, resolution, *tags)?
                }
                MeshSource::File(path) => load_mesh_file(path)?,
            };
            let mut tags: Vec<u32> = tri.boundary_edges.iter().map(|e| e.tag).collect();
            tags.sort_unstable();
            tags.dedup();
            for a in actuators {
                if !tags.contains(&a.tag) {
                    return Err(Error::InvalidArgument(format!(
                        "actuator tag {} does not exist on the mesh",
                        a.tag
                    )));
                }
            }
            let nu_eff = nu * pert.nu_factor;
            let alpha_eff = shift_field(alpha, pert.alpha_shift)?;
            let beta_eff = VectorField2 {
                x: scale_field(&beta.x, pert.beta_factor)?,
                y: scale_field(&beta.y, pert.beta_factor)?,
            };
            let fem = assemble_parabolic_2d(&tri, nu_eff, &alpha_eff, &beta_eff, &tags)?;
            let mass_ff = restrict(&fem.mass, &fem.dofmap);
            let lu = numlin::lu_factor(&mass_ff)?;
            let a0 = lu.solve_mat(&restrict(&fem.diffusion, &fem.dofmap)).scale(-1.0);
            let arc = lu
                .solve_mat(&restrict(&fem.convection_reaction, &fem.dofmap))
                .scale(-1.0);
            let c0 = restrict_cols(&output_rows_2d(&tri, sensors)?, &fem.dofmap);
            Ok(DiscretizedPlant {
                spec: spec.clone(),
                resolution,
                a0,
                arc,
                c0,
                dofmap: fem.dofmap.clone(),
                detail: PlantDetail::Parabolic2d {
                    mesh: tri,
                    mass_full: fem.mass,
                    diffusion_full: fem.diffusion,
                },
            })
        }
        PlantSpec::BeamKv { length, alpha, beta, gamma, sensors, .. } => {
            let mesh = build_interval_mesh(0.0, *length, resolution)?;
            let fem = assemble_beam_hermite(&mesh);
            let mass_w = restrict(&fem.mass, &fem.dofmap);
            let bending_w = restrict(&fem.bending, &fem.dofmap);
            let nf = mass_w.rows();
            let alpha_eff = alpha * pert.alpha_factor;
            let beta_eff = beta * pert.beta_factor;
            let gamma_eff = gamma * pert.gamma_factor;
            let lu = numlin::lu_factor(&mass_w)?;
            let minv_s = lu.solve_mat(&bending_w);
            // First-order block form on (v, v_dot): the damping gamma stays
            // in A_rc so the extension coupling column matches it.
            let mut a0 = DenseMatrix::zeros(2 * nf, 2 * nf);
            a0.set_block(0, nf, &DenseMatrix::identity(nf));
            a0.set_block(nf, 0, &minv_s.scale(-alpha_eff));
            a0.set_block(nf, nf, &minv_s.scale(-beta_eff));
            let mut arc = DenseMatrix::zeros(2 * nf, 2 * nf);
            arc.set_block(nf, nf, &DenseMatrix::scaled_identity(nf, -gamma_eff));
            // Output rows: [C1 | C2] over (v, v_dot).
            let p = sensors.len();
            let mut c0 = DenseMatrix::zeros(p, 2 * nf);
            for (k, s) in sensors.iter().enumerate() {
                if let Some(f) = &s.deflection {
                    let row = crate::mesh_fem::restrict_vec(&hermite_load(&mesh, f), &fem.dofmap);
                    for (j, v) in row.iter().enumerate() {
                        c0[(k, j)] = *v;
                    }
                }
                if let Some(f) = &s.velocity {
                    let row = crate::mesh_fem::restrict_vec(&hermite_load(&mesh, f), &fem.dofmap);
                    for (j, v) in row.iter().enumerate() {
                        c0[(k, nf + j)] = *v;
                    }
                }
            }
            Ok(DiscretizedPlant {
                spec: spec.clone(),
                resolution,
                a0,
                arc,
                c0,
                dofmap: fem.dofmap,
                detail: PlantDetail::Beam { mesh, mass_w, bending_w, alpha_eff, beta_eff, gamma_eff },
            })
        }
    }
}

pub fn plant_open_loop_spectrum(plant: &DiscretizedPlant) -> Result<ComplexSpectrum> {
    numlin::eigenvalues(&plant.full_generator())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn heat_spec() -> PlantSpec {
        PlantSpec::Heat1dNeumann {
            nu: 1.0,
            alpha: 0.0,
            sensors: vec![ScalarField::IndicatorInterval { a: 0.3, b: 0.7 }],
        }
    }

    pub(crate) fn beam_spec() -> PlantSpec {
        PlantSpec::BeamKv {
            length: 7.0,
            alpha: 10.0,
            beta: 0.01,
            gamma: 1e-5,
            bc_variant: BcVariant::ShearFreeMoment,
            sensors: vec![BeamSensor {
                deflection: Some(ScalarField::IndicatorInterval { a: 2.0, b: 4.0 }),
                velocity: Some(ScalarField::IndicatorInterval { a: 2.0, b: 4.0 }),
            }],
        }
    }

    #[test]
    fn heat_small_discretization() {
        let plant = discretize(&heat_spec(), 2).unwrap();
        assert_eq!(plant.state_dim(), 3);
        assert_eq!(plant.arc.norm_max(), 0.0);
        // a0 = -M^{-1} K reproduces the constant-kernel Neumann operator.
        let ones = vec![1.0; 3];
        let r = plant.a0.matvec(&ones);
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn heat_spectrum_contains_zero_and_rank_deficiency() {
        let plant = discretize(&heat_spec(), 20).unwrap();
        let spec = plant_open_loop_spectrum(&plant).unwrap();
        assert!(spec.distance_to(0.0, 0.0) < 1e-8);
        assert!(spec.abscissa() < 1e-10);
        // rank(a0) = n - 1: exactly one near-zero singular value.
        let s = numlin::svd(&plant.a0).unwrap().s;
        let smax = s[0];
        let small = s.iter().filter(|&&v| v <= 1e-8 * smax).count();
        assert_eq!(small, 1);
    }

    #[test]
    fn beam_demo_dimensions_and_blocks() {
        let plant = discretize(&beam_spec(), 34).unwrap();
        assert_eq!(plant.state_dim(), 136);
        let nf = 68;
        let top_right = plant.a0.block(0, nf, nf, nf);
        assert!((&top_right - &DenseMatrix::identity(nf)).norm_max() == 0.0);
        assert_eq!(plant.a0.block(0, 0, nf, nf).norm_max(), 0.0);
        assert_eq!(plant.arc.block(0, 0, nf, 2 * nf).norm_max(), 0.0);
    }

    #[test]
    fn beam_demo_small_stability_margin() {
        let plant = discretize(&beam_spec(), 34).unwrap();
        let spec = plant_open_loop_spectrum(&plant).unwrap();
        let abscissa = spec.abscissa();
        assert!(abscissa < 0.0, "beam must be (weakly) stable, got {abscissa}");
        assert!(abscissa > -1e-2, "margin should be tiny, got {abscissa}");
    }

    #[test]
    fn parabolic_demo_two_sensors() {
        let spec = PlantSpec::Parabolic2d {
            nu: 0.5,
            alpha: ScalarField::Linear { c0: 0.0, cx: 3.0, cy: 3.0 },
            beta: VectorField2 {
                x: ScalarField::Trig {
                    c0: -2.0,
                    terms: vec![
                        crate::mesh_fem::TrigTerm {
                            axis: crate::mesh_fem::TrigAxis::X,
                            kind: crate::mesh_fem::TrigKind::Cos,
                            freq: 1.0,
                            amp: 1.0,
                        },
                        crate::mesh_fem::TrigTerm {
                            axis: crate::mesh_fem::TrigAxis::Y,
                            kind: crate::mesh_fem::TrigKind::Sin,
                            freq: 2.0,
                            amp: -1.0,
                        },
                    ],
                },
                y: ScalarField::Trig {
                    c0: 0.0,
                    terms: vec![
                        crate::mesh_fem::TrigTerm {
                            axis: crate::mesh_fem::TrigAxis::X,
                            kind: crate::mesh_fem::TrigKind::Sin,
                            freq: 3.0,
                            amp: 1.0,
                        },
                        crate::mesh_fem::TrigTerm {
                            axis: crate::mesh_fem::TrigAxis::Y,
                            kind: crate::mesh_fem::TrigKind::Cos,
                            freq: 4.0,
                            amp: 1.0,
                        },
                    ],
                },
            },
            mesh: MeshSource::Rect { x_range: (0.0, 1.0), y_range: (0.0, 1.0), tags: [0, 1, 2, 3] },
            actuators: vec![ActuatorSpec2d { tag: 3, profile: BoundaryProfile::SinePi { k: 1 } }],
            sensors: vec![
                ScalarField::IndicatorRect { x0: 0.25, x1: 0.5, y0: 0.25, y1: 0.5 },
                ScalarField::IndicatorRect { x0: 0.5, x1: 0.75, y0: 0.5, y1: 0.75 },
            ],
        };
        let plant = discretize(&spec, 8).unwrap();
        assert_eq!(plant.output_dim(), 2);
        assert_eq!(plant.state_dim(), 49); // 7x7 interior nodes
    }

    #[test]
    fn stable_diffusion_reaction_real_parts_nonpositive() {
        let spec = PlantSpec::Parabolic2d {
            nu: 1.0,
            alpha: ScalarField::Constant(1.0),
            beta: VectorField2::zero(),
            mesh: MeshSource::Rect { x_range: (0.0, 1.0), y_range: (0.0, 1.0), tags: [0, 1, 2, 3] },
            actuators: vec![ActuatorSpec2d { tag: 3, profile: BoundaryProfile::SinePi { k: 1 } }],
            sensors: vec![ScalarField::Constant(1.0)],
        };
        let plant = discretize(&spec, 6).unwrap();
        let spectrum = plant_open_loop_spectrum(&plant).unwrap();
        assert!(spectrum.abscissa() <= 0.0);
    }

    #[test]
    fn refinement_moves_leading_eigenvalues_little() {
        let p1 = discretize(&heat_spec(), 30).unwrap();
        let p2 = discretize(&heat_spec(), 60).unwrap();
        let mut e1: Vec<f64> = plant_open_loop_spectrum(&p1).unwrap().values.iter().map(|v| v.0).collect();
        let mut e2: Vec<f64> = plant_open_loop_spectrum(&p2).unwrap().values.iter().map(|v| v.0).collect();
        e1.sort_by(|a, b| b.partial_cmp(a).unwrap());
        e2.sort_by(|a, b| b.partial_cmp(a).unwrap());
        // Skip the common zero mode; compare the next three.
        for k in 1..4 {
            let rel = (e1[k] - e2[k]).abs() / e2[k].abs();
            assert!(rel < 0.05, "eigenvalue {k} moved by {rel:.3}");
        }
    }

    #[test]
    fn perturbation_scales_heat_generator() {
        let base = discretize(&heat_spec(), 10).unwrap();
        let pert = Perturbation { nu_factor: 1.1, alpha_shift: 0.2, ..Default::default() };
        let p = discretize_perturbed(&heat_spec(), 10, &pert).unwrap();
        assert!((&p.a0 - &base.a0.scale(1.1)).norm_max() < 1e-12);
        assert!((&p.arc - &DenseMatrix::scaled_identity(11, -0.2)).norm_max() < 1e-15);
    }
}
