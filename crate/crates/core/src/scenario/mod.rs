//! Scenario orchestration: parse a config, run the check/synthesis/
//! simulation pipeline, and produce the artifacts the CLI writes out.

pub mod artifacts;
pub mod config;

pub use artifacts::{
    canonical_plant_string, controller_from_string, controller_to_string, decay_report, hsv_csv,
    plant_hash, trajectory_csv, ControllerArtifact,
};
pub use config::{parse_config, BeamExtensionChoice, ScenarioConfig, SimulationConfig, SynthesisConfig};

use crate::error::{Error, Result};
use crate::extended::{
    assemble_extended, check_detectability, check_nonresonance, check_stabilizability,
    coercivity_diagnostic, CheckItem, CheckReport, ExtendedSystem,
};
use crate::extension::{
    build_extension_beam_bc2, build_extension_beam_v1, build_extension_beam_v2,
    build_extension_heat1d_nu, build_extension_parabolic_2d_all, check_eta_validity,
    extension_residual, ExtensionOperator,
};
use crate::internal_model::{build_internal_model, InternalModel};
use crate::matrix::DenseMatrix;
use crate::mesh_fem::{hermite_interpolate, restrict_vec, ScalarField};
use crate::models::{discretize, discretize_perturbed, BcVariant, DiscretizedPlant, PlantDetail, PlantSpec};
use crate::numlin;
use crate::sim::{fit_decay, simulate, DecayFit, SimResult};
use crate::synthesis::{
    assemble_closed_loop, suggested_order, synthesize, ControllerRealization, SynthesisParams,
    SynthesisReport,
};

pub fn build_design_plant(cfg: &ScenarioConfig) -> Result<DiscretizedPlant> {
    discretize(&cfg.plant, cfg.synthesis.design_resolution)
}

pub fn build_sim_plant(cfg: &ScenarioConfig) -> Result<DiscretizedPlant> {
    let pert = cfg.perturbation.clone().unwrap_or_default();
    discretize_perturbed(&cfg.plant, cfg.simulation.resolution, &pert)
}

/// Extension matching a (possibly perturbed) plant: the lift is always an
/// exact realization of the plant it accompanies.
pub fn build_extension_for(
    plant: &DiscretizedPlant,
    eta: f64,
    choice: BeamExtensionChoice,
) -> Result<ExtensionOperator> {
    match (&plant.spec, &plant.detail) {
        (PlantSpec::Heat1dNeumann { .. }, PlantDetail::Heat1d { nu_eff, .. }) => {
            build_extension_heat1d_nu(eta, *nu_eff)
        }
        (PlantSpec::Parabolic2d { .. }, _) => build_extension_parabolic_2d_all(plant, eta),
        (
            PlantSpec::BeamKv { length, bc_variant, .. },
            PlantDetail::Beam { alpha_eff, beta_eff, .. },
        ) => match (bc_variant, choice) {
            (BcVariant::ShearFreeMoment, BeamExtensionChoice::V1) => {
                build_extension_beam_v1(eta, *alpha_eff, *beta_eff, *length)
            }
            (BcVariant::ShearFreeMoment, BeamExtensionChoice::V2) => {
                build_extension_beam_v2(eta, *length)
            }
            (BcVariant::CombinedMoment, BeamExtensionChoice::V1) => {
                build_extension_beam_bc2(eta, *alpha_eff, *beta_eff, *length)
            }
            (BcVariant::CombinedMoment, BeamExtensionChoice::V2) => Err(Error::InvalidArgument(
                "the second-order extension does not exist for the combined-moment boundary operator"
                    .into(),
            )),
        },
        _ => Err(Error::SpecMismatch("plant family and detail are inconsistent".into())),
    }
}

pub fn internal_model_for(reference: &crate::signals::ReferenceSignal) -> Result<InternalModel> {
    build_internal_model(reference.p, &reference.frequency_profile())
}

#[derive(Debug, Clone)]
pub struct CheckRun {
    pub reports: Vec<CheckReport>,
    /// (lambda1, c2) of the coercivity diagnostic.
    pub coercivity: (f64, f64),
    pub pass: bool,
}

impl CheckRun {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for rep in &self.reports {
            out.push_str(&format!(
                "check {}: {}\n",
                rep.name,
                if rep.pass { "PASS" } else { "FAIL" }
            ));
            for item in &rep.items {
                out.push_str(&format!(
                    "  [{}] {}  margin {:.3e} (threshold {:.0e})\n",
                    if item.pass { "ok" } else { "FAIL" },
                    item.label,
                    item.margin,
                    item.threshold
                ));
            }
        }
        out.push_str(&format!(
            "coercivity diagnostic: lambda1 = {:.6e}, c2 = {:.6e}\n",
            self.coercivity.0, self.coercivity.1
        ));
        out.push_str(&format!("overall: {}\n", if self.pass { "PASS" } else { "FAIL" }));
        out
    }
}

/// Run every verification the design relies on: eta validity, extension
/// certificates, detectability, stabilizability, nonresonance at the
/// reference frequencies, and the coercivity diagnostic.
pub fn run_check(cfg: &ScenarioConfig) -> Result<CheckRun> {
    let plant = build_design_plant(cfg)?;
    let mut reports = Vec::new();

    // Extension construction can fail when eta collides with the discrete
    // spectrum; surface that as a failed check rather than an abort.
    let eta_distance = check_eta_validity(&plant, cfg.eta);
    let ext = match build_extension_for(&plant, cfg.eta, cfg.beam_extension) {
        Ok(ext) => ext,
        Err(Error::SingularMatrix(msg)) | Err(Error::InvalidArgument(msg)) => {
            reports.push(CheckReport {
                name: "extension",
                pass: false,
                items: vec![CheckItem {
                    label: format!("extension construction: {msg}"),
                    margin: 0.0,
                    threshold: 1e-8,
                    pass: false,
                }],
            });
            return Ok(CheckRun { reports, coercivity: (f64::NAN, f64::NAN), pass: false });
        }
        Err(e) => return Err(e),
    };
    let mesh_residual = extension_residual(&ext, &plant)?;
    let ext_items = vec![
        CheckItem {
            label: "eta distance to the discrete plant spectrum".into(),
            margin: eta_distance.as_ref().copied().unwrap_or(0.0),
            threshold: 1e-6,
            pass: eta_distance.is_ok(),
        },
        CheckItem {
            label: "extension construction certificate".into(),
            margin: ext.residual_certificate,
            threshold: 1e-8,
            pass: ext.residual_certificate <= 1e-8,
        },
        CheckItem {
            label: "extension mesh-level residual".into(),
            margin: mesh_residual,
            threshold: 1e-2,
            pass: mesh_residual <= 1e-2,
        },
    ];
    reports.push(CheckReport {
        name: "extension",
        pass: ext_items.iter().all(|i| i.pass),
        items: ext_items,
    });

    let sys = assemble_extended(&plant, &ext)?;
    reports.push(check_detectability(&sys)?);
    reports.push(check_stabilizability(&sys, &plant, &ext)?);
    let freqs: Vec<f64> = cfg.reference.terms.iter().map(|t| t.omega).collect();
    reports.push(check_nonresonance(&sys, &freqs)?);
    let coercivity = coercivity_diagnostic(&sys, &plant)?;
    let pass = reports.iter().all(|r| r.pass) && coercivity.1 > 0.0;
    Ok(CheckRun { reports, coercivity, pass })
}

fn synthesis_params(cfg: &ScenarioConfig, p: usize, m: usize) -> SynthesisParams {
    SynthesisParams {
        alpha1: cfg.synthesis.alpha1,
        alpha2: cfg.synthesis.alpha2,
        r1: DenseMatrix::scaled_identity(p, cfg.synthesis.r1),
        r2: DenseMatrix::scaled_identity(m, cfg.synthesis.r2),
        q0_scale: cfg.synthesis.q0_scale,
        q1_scale: cfg.synthesis.q1_scale,
        q2_scale: cfg.synthesis.q2_scale,
        reduced_order: cfg.synthesis.reduced_order,
    }
}

#[derive(Debug, Clone)]
pub struct SynthRun {
    pub artifact: ControllerArtifact,
    pub report: SynthesisReport,
    pub design_dim: usize,
}

impl SynthRun {
    pub fn to_text(&self) -> String {
        let r = &self.report;
        format!(
            "design state dimension: {}\n\
             observer closed-loop abscissa: {:.6e}\n\
             regulator closed-loop abscissa: {:.6e}\n\
             observer Riccati residual: {:.3e}\n\
             regulator Riccati residual: {:.3e}\n\
             reduction order used: {}{}\n\
             suggested order (1e-6 tail rule): {}\n\
             leading Hankel singular values: {}\n",
            self.design_dim,
            r.observer_abscissa,
            r.regulator_abscissa,
            r.observer_residual,
            r.regulator_residual,
            r.r_used,
            if r.r_clamped { " (clamped to numerical rank)" } else { "" },
            r.suggested_r,
            r.hsv
                .iter()
                .take(8)
                .map(|v| format!("{v:.3e}"))
                .collect::<Vec<_>>()
                .join(" ")
        )
    }
}

/// Design pipeline on the coarse mesh: extension, extended system, internal
/// model, two Riccati solves, balanced truncation.
pub fn run_synth(cfg: &ScenarioConfig) -> Result<SynthRun> {
    let plant = build_design_plant(cfg)?;
    let ext = build_extension_for(&plant, cfg.eta, cfg.beam_extension)?;
    let sys = assemble_extended(&plant, &ext)?;
    let design_dim = sys.state_dim();
    if cfg.synthesis.reduced_order > design_dim {
        return Err(Error::InvalidArgument(format!(
            "reduced order {} exceeds the design state dimension {design_dim}",
            cfg.synthesis.reduced_order
        )));
    }
    let im = internal_model_for(&cfg.reference)?;
    let params = synthesis_params(cfg, sys.n_outputs(), sys.n_inputs());
    let (controller, report) = synthesize(&sys, &im, &params)?;
    Ok(SynthRun {
        artifact: ControllerArtifact {
            plant_hash: plant_hash(&cfg.plant),
            eta: cfg.eta,
            variant: sys.variant,
            controller,
        },
        report,
        design_dim,
    })
}

/// Hankel singular values of the stabilized observer triple, without
/// building a reduced controller.
pub fn run_hsv(cfg: &ScenarioConfig) -> Result<(Vec<f64>, usize)> {
    let plant = build_design_plant(cfg)?;
    let ext = build_extension_for(&plant, cfg.eta, cfg.beam_extension)?;
    let sys = assemble_extended(&plant, &ext)?;
    let im = internal_model_for(&cfg.reference)?;
    let params = synthesis_params(cfg, sys.n_outputs(), sys.n_inputs());
    let obs = crate::synthesis::observer_riccati(&sys, &params)?;
    let reg = crate::synthesis::regulator_riccati(&sys, &im, &params)?;
    let a_stab = &sys.a + &(&obs.l * &sys.c);
    let b_aug = DenseMatrix::hstack(&[&sys.b, &obs.l]);
    let bt = crate::synthesis::balanced_truncate(&a_stab, &b_aug, &reg.k2, 0)?;
    let suggestion = suggested_order(&bt.hsv);
    Ok((bt.hsv, suggestion))
}

/// Initial extended+controller state from the configured presets.
pub fn initial_state(
    cfg: &ScenarioConfig,
    plant: &DiscretizedPlant,
    sys: &ExtendedSystem,
    ctrl: &ControllerRealization,
) -> Result<Vec<f64>> {
    let mut x0 = Vec::with_capacity(sys.state_dim() + ctrl.z1_dim() + ctrl.z2_dim());
    match &plant.detail {
        PlantDetail::Heat1d { mesh, .. } => {
            for &x in &mesh.nodes {
                x0.push(cfg.simulation.initial.eval_1d(x));
            }
        }
        PlantDetail::Parabolic2d { mesh, .. } => {
            for &i in &plant.dofmap.free {
                let p = mesh.points[i];
                x0.push(cfg.simulation.initial.eval(p[0], p[1]));
            }
        }
        PlantDetail::Beam { mesh, .. } => {
            let f = &cfg.simulation.initial;
            let defl = hermite_interpolate(mesh, |x| f.eval_1d(x), |x| f.deriv_1d(x).unwrap_or(0.0));
            x0.extend(restrict_vec(&defl, &plant.dofmap));
            let zero = ScalarField::Constant(0.0);
            let v = cfg.simulation.initial_velocity.as_ref().unwrap_or(&zero);
            let vel = hermite_interpolate(mesh, |x| v.eval_1d(x), |x| v.deriv_1d(x).unwrap_or(0.0));
            x0.extend(restrict_vec(&vel, &plant.dofmap));
        }
    }
    // Input states start at rest (u(0) = 0, so v(0) = w(0)).
    x0.extend(std::iter::repeat(0.0).take(sys.input_states));
    if x0.len() != sys.state_dim() {
        return Err(Error::DimensionMismatch("initial state assembly mismatch".into()));
    }
    x0.extend(std::iter::repeat(cfg.simulation.controller_init).take(ctrl.z1_dim() + ctrl.z2_dim()));
    Ok(x0)
}

#[derive(Debug)]
pub struct SimulateRun {
    pub result: SimResult,
    pub fit: DecayFit,
    pub closed_loop_abscissa: f64,
    pub fit_window: (f64, f64),
    pub perturbed: bool,
}

/// Build the (possibly perturbed) simulation plant, couple it to the stored
/// controller, verify the plant fingerprint, and integrate.
pub fn run_simulate(cfg: &ScenarioConfig, artifact: &ControllerArtifact) -> Result<SimulateRun> {
    let expected = plant_hash(&cfg.plant);
    if artifact.plant_hash != expected {
        return Err(Error::SpecMismatch(format!(
            "controller was designed for plant {} but the config describes {expected}",
            artifact.plant_hash
        )));
    }
    let plant = build_sim_plant(cfg)?;
    let choice = match artifact.variant {
        crate::extended::ExtendedVariant::BeamV2 => BeamExtensionChoice::V2,
        _ => BeamExtensionChoice::V1,
    };
    let ext = build_extension_for(&plant, artifact.eta, choice)?;
    let sys = assemble_extended(&plant, &ext)?;
    if sys.variant != artifact.variant {
        return Err(Error::SpecMismatch("extension variant mismatch".into()));
    }
    let cl = assemble_closed_loop(&sys, &artifact.controller)?;
    let closed_loop_abscissa = numlin::spectral_abscissa(&cl.a_e)?;
    let x0 = initial_state(cfg, &plant, &sys, &artifact.controller)?;
    let result = simulate(&cl, &cfg.reference, &x0, cfg.simulation.t_final, cfg.simulation.dt)?;
    let window = cfg
        .simulation
        .fit_window
        .unwrap_or((cfg.simulation.t_final * 0.25, cfg.simulation.t_final * 0.75));
    let fit = fit_decay(&result.times, &result.error_norms(), window)?;
    Ok(SimulateRun {
        result,
        fit,
        closed_loop_abscissa,
        fit_window: window,
        perturbed: cfg.perturbation.as_ref().map(|p| !p.is_identity()).unwrap_or(false),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL_HEAT: &str = "\
[plant]
family = heat1d_neumann

[plant.sensor]
field = interval 0.3 0.7

[extension]
eta = 1.0

[reference]
type = terms

[reference.term]
omega = 0.0
n = 1
a = 1.0

[reference.term]
omega = 2.0
n = 1
b = 1.0

[synthesis]
design_resolution = 16
reduced_order = 8
alpha1 = 0.5
alpha2 = 0.5

[simulation]
resolution = 24
t_final = 20.0
dt = 0.01
initial = sin_profile 0.25
fit_window = 2.0 10.0
";

    #[test]
    fn small_heat_scenario_full_pipeline() {
        let cfg = parse_config(SMALL_HEAT).unwrap();
        let check = run_check(&cfg).unwrap();
        assert!(check.pass, "{}", check.to_text());
        let synth = run_synth(&cfg).unwrap();
        assert_eq!(synth.artifact.controller.z1_dim(), 3);
        assert_eq!(synth.artifact.controller.z2_dim(), 8);
        // Serialize and reload the controller, then simulate.
        let text = controller_to_string(&synth.artifact);
        let back = controller_from_string(&text).unwrap();
        let run = run_simulate(&cfg, &back).unwrap();
        assert!(run.closed_loop_abscissa < 0.0);
        assert!(run.result.max_error_after(15.0) < 5e-2);
        assert!(run.fit.w_e > 0.1, "w_e = {}", run.fit.w_e);
    }

    #[test]
    fn simulate_refuses_wrong_plant() {
        let cfg = parse_config(SMALL_HEAT).unwrap();
        let synth = run_synth(&cfg).unwrap();
        let other = parse_config(&SMALL_HEAT.replace("interval 0.3 0.7", "interval 0.2 0.8")).unwrap();
        match run_simulate(&other, &synth.artifact) {
            Err(Error::SpecMismatch(_)) => {}
            other => panic!("expected spec mismatch, got {other:?}"),
        }
    }

    #[test]
    fn combined_moment_beam_scenario_checks_pass() {
        let text = "\
[plant]
family = beam_kv
length = 7.0
alpha = 10.0
beta = 0.01
gamma = 1e-5
bc_variant = combined_moment

[plant.sensor]
deflection = interval 2 4
velocity = interval 2 4

[extension]
eta = 0.12
variant = beam_v1

[reference]
type = terms

[reference.term]
omega = 3.0
n = 1
b = 0.1

[synthesis]
design_resolution = 10
reduced_order = 8
alpha1 = 0.5
alpha2 = 0.5

[simulation]
resolution = 16
t_final = 10.0
dt = 0.01
initial = zero
";
        let cfg = parse_config(text).unwrap();
        let check = run_check(&cfg).unwrap();
        assert!(check.pass, "{}", check.to_text());
        // The second-order extension does not exist for this boundary
        // operator.
        let v2 = parse_config(&text.replace("variant = beam_v1", "variant = beam_v2")).unwrap();
        let plant = build_design_plant(&v2).unwrap();
        assert!(matches!(
            build_extension_for(&plant, v2.eta, v2.beam_extension),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn oversized_reduction_order_rejected_before_solving() {
        let cfg = parse_config(&SMALL_HEAT.replace("reduced_order = 8", "reduced_order = 500")).unwrap();
        match run_synth(&cfg) {
            Err(Error::InvalidArgument(msg)) => assert!(msg.contains("exceeds")),
            other => panic!("expected validation error, got {other:?}"),
        }
    }
}
