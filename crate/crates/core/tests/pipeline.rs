//! End-to-end pipeline checks on the 1D heat demo: design on a coarse mesh,
//! simulate on a finer one, and verify margins and tracking.

use regsynth_core::extended::{assemble_extended, check_detectability, check_nonresonance, check_stabilizability};
use regsynth_core::extension::build_extension_heat1d;
use regsynth_core::internal_model::build_internal_model;
use regsynth_core::matrix::DenseMatrix;
use regsynth_core::mesh_fem::ScalarField;
use regsynth_core::models::{discretize, PlantSpec};
use regsynth_core::numlin;
use regsynth_core::signals::{ReferenceSignal, SignalTerm};
use regsynth_core::sim::{fit_decay, simulate};
use regsynth_core::synthesis::{assemble_closed_loop, synthesize, SynthesisParams};

fn heat_spec() -> PlantSpec {
    PlantSpec::Heat1dNeumann {
        nu: 1.0,
        alpha: 0.0,
        sensors: vec![ScalarField::IndicatorInterval { a: 0.3, b: 0.7 }],
    }
}

fn heat_reference() -> ReferenceSignal {
    // 1 + sin(2 t)
    ReferenceSignal::new(
        1,
        vec![
            SignalTerm {
                omega: 0.0,
                a: DenseMatrix::from_rows(&[&[1.0]]),
                b: DenseMatrix::zeros(1, 1),
            },
            SignalTerm {
                omega: 2.0,
                a: DenseMatrix::zeros(1, 1),
                b: DenseMatrix::from_rows(&[&[1.0]]),
            },
        ],
    )
    .unwrap()
}

#[test]
fn heat_demo_tracks_reference() {
    let design = discretize(&heat_spec(), 60).unwrap();
    let ext = build_extension_heat1d(1.0).unwrap();
    let sys = assemble_extended(&design, &ext).unwrap();

    assert!(check_detectability(&sys).unwrap().pass);
    assert!(check_stabilizability(&sys, &design, &ext).unwrap().pass);
    assert!(check_nonresonance(&sys, &[0.0, 2.0]).unwrap().pass);

    let im = build_internal_model(1, &[(0.0, 1), (2.0, 1)]).unwrap();
    let params = SynthesisParams::default_for(1, 1, 0.5, 0.5, 12);
    let (ctrl, report) = synthesize(&sys, &im, &params).unwrap();
    assert!(report.observer_residual <= 1e-8, "observer residual {}", report.observer_residual);
    assert!(report.regulator_residual <= 1e-8, "regulator residual {}", report.regulator_residual);
    assert!(report.observer_abscissa < -0.5 + 1e-8);
    assert!(report.regulator_abscissa < -0.5 + 1e-8);
    println!("hsv head: {:?}", &report.hsv[..8.min(report.hsv.len())]);
    println!("suggested r: {}", report.suggested_r);

    // Simulate on a finer mesh.
    let sim_plant = discretize(&heat_spec(), 120).unwrap();
    let sim_sys = assemble_extended(&sim_plant, &ext).unwrap();
    let cl = assemble_closed_loop(&sim_sys, &ctrl).unwrap();
    let abscissa = numlin::spectral_abscissa(&cl.a_e).unwrap();
    println!("closed-loop abscissa (cross-mesh, r = 12): {abscissa}");
    assert!(abscissa < 0.0);

    // Initial state: 0.25 sin(pi x) profile on the plant block.
    let mut x0 = vec![0.0; cl.state_dim()];
    for i in 0..=120 {
        x0[i] = 0.25 * (std::f64::consts::PI * i as f64 / 120.0).sin();
    }
    let sig = heat_reference();
    let res = simulate(&cl, &sig, &x0, 60.0, 0.01).unwrap();
    let tail = res.max_error_after(30.0);
    println!("max error after t = 30: {tail}");
    assert!(tail <= 1e-2, "tail error {tail}");

    let fit = fit_decay(&res.times, &res.error_norms(), (5.0, 20.0)).unwrap();
    println!("fit: M_e = {}, w_e = {}", fit.m_e, fit.w_e);
    assert!(fit.w_e >= 0.2, "fitted rate {}", fit.w_e);
}

#[test]
fn heat_full_order_margin() {
    let design = discretize(&heat_spec(), 40).unwrap();
    let ext = build_extension_heat1d(1.0).unwrap();
    let sys = assemble_extended(&design, &ext).unwrap();
    let im = build_internal_model(1, &[(0.0, 1), (2.0, 1)]).unwrap();
    let full = sys.state_dim();
    let params = SynthesisParams::default_for(1, 1, 0.5, 0.5, full);
    let (ctrl, _) = synthesize(&sys, &im, &params).unwrap();
    let cl = assemble_closed_loop(&sys, &ctrl).unwrap();
    let abscissa = numlin::spectral_abscissa(&cl.a_e).unwrap();
    println!("full-order design-mesh abscissa: {abscissa}");
    assert!(abscissa < -0.95 * 0.5, "margin property violated: {abscissa}");
}

#[test]
fn controller_transfer_function_invariant_under_state_reordering() {
    use regsynth_core::synthesis::{log_frequency_grid, max_transfer_deviation};

    let design = discretize(&heat_spec(), 24).unwrap();
    let ext = build_extension_heat1d(1.0).unwrap();
    let sys = assemble_extended(&design, &ext).unwrap();
    let im = build_internal_model(1, &[(0.0, 1), (2.0, 1)]).unwrap();
    let params = SynthesisParams::default_for(1, 1, 0.5, 0.5, 6);

    // Permute the extended state and transform (A, B, C) accordingly.
    let n = sys.state_dim();
    let mut perm = DenseMatrix::zeros(n, n);
    for i in 0..n {
        perm[(i, (i * 7 + 3) % n)] = 1.0;
    }
    let mut permuted = sys.clone();
    permuted.a = &(&perm * &sys.a) * &perm.transpose();
    permuted.b = &perm * &sys.b;
    permuted.c = &sys.c * &perm.transpose();

    let (c1, _) = synthesize(&sys, &im, &params).unwrap();
    let (c2, _) = synthesize(&permuted, &im, &params).unwrap();

    // Controller as an LTI map from the tracking error to the input.
    let realize = |c: &regsynth_core::synthesis::ControllerRealization| {
        let s0 = c.z1_dim();
        let r = c.z2_dim();
        let mut a = DenseMatrix::zeros(s0 + r, s0 + r);
        a.set_block(0, 0, &c.g1);
        a.set_block(s0, 0, &(&c.b_lr * &c.k1));
        a.set_block(s0, s0, &(&c.a_lr + &(&c.b_lr * &c.k2_r)));
        let mut b = DenseMatrix::zeros(s0 + r, c.n_outputs());
        b.set_block(0, 0, &c.g2);
        b.set_block(s0, 0, &c.l_r.scale(-1.0));
        let cc = DenseMatrix::hstack(&[&c.k1, &c.k2_r]);
        (a, b, cc)
    };
    let (a1, b1, k1) = realize(&c1);
    let (a2, b2, k2) = realize(&c2);
    let grid = log_frequency_grid(60);
    let dev = max_transfer_deviation((&a1, &b1, &k1), (&a2, &b2, &k2), &grid).unwrap();
    // Scale-relative agreement: the permuted design must realize the same
    // transfer function.
    let scale = 1.0 + k1.norm_fro() * b1.norm_fro();
    println!("reordering transfer deviation: {dev:.3e} (scale {scale:.3e})");
    assert!(dev <= 1e-8 * scale, "deviation {dev} vs scale {scale}");
}

#[test]
fn fitted_rate_stable_under_simultaneous_refinement() {
    let design = discretize(&heat_spec(), 60).unwrap();
    let ext = build_extension_heat1d(1.0).unwrap();
    let sys = assemble_extended(&design, &ext).unwrap();
    let im = build_internal_model(1, &[(0.0, 1), (2.0, 1)]).unwrap();
    let params = SynthesisParams::default_for(1, 1, 0.5, 0.5, 12);
    let (ctrl, _) = synthesize(&sys, &im, &params).unwrap();
    let sig = heat_reference();

    let rate_at = |m: usize, dt: f64| -> f64 {
        let plant = discretize(&heat_spec(), m).unwrap();
        let sim_sys = assemble_extended(&plant, &ext).unwrap();
        let cl = assemble_closed_loop(&sim_sys, &ctrl).unwrap();
        let mut x0 = vec![0.0; cl.state_dim()];
        for i in 0..=m {
            x0[i] = 0.25 * (std::f64::consts::PI * i as f64 / m as f64).sin();
        }
        let res = simulate(&cl, &sig, &x0, 30.0, dt).unwrap();
        // Window above the integrator's steady floor at the coarser dt.
        fit_decay(&res.times, &res.error_norms(), (2.0, 10.0)).unwrap().w_e
    };
    let coarse = rate_at(60, 0.02);
    let fine = rate_at(120, 0.01);
    let rel = (coarse - fine).abs() / fine.abs();
    println!("fitted rates: coarse {coarse:.4}, fine {fine:.4}, change {rel:.3}");
    assert!(rel < 0.10, "fitted rate changed by {rel:.3} under refinement");
}
