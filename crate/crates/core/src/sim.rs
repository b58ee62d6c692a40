//! Time integration of the closed loop and of open-loop extended systems,
//! plus exponential-decay fitting of the tracking error.
//!
//! The integrator is the trapezoidal rule: A-stable on the stiff FEM
//! operators, second order, energy-consistent on the beam's oscillatory
//! part, and needs a single factorization per run.

use crate::error::{Error, Result};
use crate::extension::ExtensionOperator;
use crate::matrix::DenseMatrix;
use crate::models::{DiscretizedPlant, PlantDetail};
use crate::numlin;
use crate::signals::{eval_reference, ReferenceSignal};
use crate::synthesis::ClosedLoop;

#[derive(Debug, Clone)]
pub struct SimResult {
    pub times: Vec<f64>,
    /// p outputs per step.
    pub outputs: Vec<Vec<f64>>,
    pub reference: Vec<Vec<f64>>,
    /// e = y - y_ref per step.
    pub error: Vec<Vec<f64>>,
    /// Physical boundary values recovered from the input-state block.
    pub input: Vec<Vec<f64>>,
    pub state_norm: Vec<f64>,
}

impl SimResult {
    pub fn error_norms(&self) -> Vec<f64> {
        self.error.iter().map(|e| e.iter().map(|v| v * v).sum::<f64>().sqrt()).collect()
    }

    /// Largest error norm at or after the given time.
    pub fn max_error_after(&self, t_from: f64) -> f64 {
        self.times
            .iter()
            .zip(self.error_norms())
            .filter(|(t, _)| **t >= t_from)
            .map(|(_, e)| e)
            .fold(0.0, f64::max)
    }
}

/// Trapezoidal stepping of x' = A x + f(t) with one factorization:
/// (I - dt/2 A) x_{k+1} = (I + dt/2 A) x_k + dt f(t_k + dt/2).
fn trapezoid_run(
    a: &DenseMatrix,
    x0: &[f64],
    t_final: f64,
    dt: f64,
    mut forcing: impl FnMut(f64) -> Vec<f64>,
    mut observe: impl FnMut(usize, f64, &[f64]),
) -> Result<()> {
    if dt <= 0.0 || t_final < dt {
        return Err(Error::InvalidArgument("need dt > 0 and t_final >= dt".into()));
    }
    let n = a.rows();
    if x0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial state has {} entries, system has {n}",
            x0.len()
        )));
    }
    let half = 0.5 * dt;
    let mut lhs = a.scale(-half);
    let mut rhs_op = a.scale(half);
    for i in 0..n {
        lhs[(i, i)] += 1.0;
        rhs_op[(i, i)] += 1.0;
    }
    let lu = numlin::lu_factor(&lhs).map_err(|_| {
        Error::SingularMatrix(
            "trapezoidal step matrix singular: dt resonates with an eigenvalue 2/dt; change dt"
                .into(),
        )
    })?;
    let steps = (t_final / dt).round() as usize;
    let mut x = x0.to_vec();
    observe(0, 0.0, &x);
    for k in 0..steps {
        let t = k as f64 * dt;
        let mut rhs = rhs_op.matvec(&x);
        let f = forcing(t + half);
        for (r, fv) in rhs.iter_mut().zip(f.iter()) {
            *r += dt * fv;
        }
        x = lu.solve_vec(&rhs);
        let norm2: f64 = x.iter().map(|v| v * v).sum();
        if !norm2.is_finite() {
            return Err(Error::NonFinite(format!("simulation blow-up at step {}", k + 1)));
        }
        observe(k + 1, (k + 1) as f64 * dt, &x);
    }
    Ok(())
}

/// Closed-loop simulation driven by the reference signal.
pub fn simulate(
    cl: &ClosedLoop,
    sig: &ReferenceSignal,
    x0: &[f64],
    t_final: f64,
    dt: f64,
) -> Result<SimResult> {
    let p = cl.c_e.rows();
    if sig.p != p {
        return Err(Error::SpecMismatch(format!(
            "reference has {} outputs, closed loop has {p}",
            sig.p
        )));
    }
    let steps = (t_final / dt).round() as usize;
    let mut res = SimResult {
        times: Vec::with_capacity(steps + 1),
        outputs: Vec::with_capacity(steps + 1),
        reference: Vec::with_capacity(steps + 1),
        error: Vec::with_capacity(steps + 1),
        input: Vec::with_capacity(steps + 1),
        state_norm: Vec::with_capacity(steps + 1),
    };
    let b_e = cl.b_e.clone();
    let forcing = |t: f64| b_e.matvec(&eval_reference(sig, t));
    trapezoid_run(&cl.a_e, x0, t_final, dt, forcing, |_, t, x| {
        let y = cl.c_e.matvec(x);
        let r = eval_reference(sig, t);
        let e: Vec<f64> = y.iter().zip(r.iter()).map(|(a, b)| a - b).collect();
        let u = x[cl.plant_dofs..cl.plant_dofs + cl.m_inputs].to_vec();
        res.times.push(t);
        res.state_norm.push(x.iter().map(|v| v * v).sum::<f64>().sqrt());
        res.outputs.push(y);
        res.reference.push(r);
        res.error.push(e);
        res.input.push(u);
    })?;
    Ok(res)
}

/// Smooth named input profiles for the open-loop equivalence oracles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothInput {
    Zero,
    /// amp * sin(omega t)
    Sine { amp: f64, omega: f64 },
}

impl SmoothInput {
    pub fn u(&self, t: f64) -> f64 {
        match self {
            SmoothInput::Zero => 0.0,
            SmoothInput::Sine { amp, omega } => amp * (omega * t).sin(),
        }
    }

    pub fn du(&self, t: f64) -> f64 {
        match self {
            SmoothInput::Zero => 0.0,
            SmoothInput::Sine { amp, omega } => amp * omega * (omega * t).cos(),
        }
    }

    pub fn d2u(&self, t: f64) -> f64 {
        match self {
            SmoothInput::Zero => 0.0,
            SmoothInput::Sine { amp, omega } => -amp * omega * omega * (omega * t).sin(),
        }
    }
}

/// Drive two extended realizations of the same plant with the same physical
/// boundary input and consistent initial data; return the largest output
/// deviation. Exact extensions make the reconstructed outputs agree up to
/// discretization and integrator error.
pub fn open_loop_compare(
    plant: &DiscretizedPlant,
    ext_a: &ExtensionOperator,
    ext_b: &ExtensionOperator,
    input: &SmoothInput,
    w0: &[f64],
    t_final: f64,
    dt: f64,
) -> Result<f64> {
    let ya = open_loop_outputs(plant, ext_a, input, w0, t_final, dt)?;
    let yb = open_loop_outputs(plant, ext_b, input, w0, t_final, dt)?;
    let mut worst: f64 = 0.0;
    for (a, b) in ya.iter().zip(yb.iter()) {
        let d: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(d);
    }
    Ok(worst)
}

fn open_loop_outputs(
    plant: &DiscretizedPlant,
    ext: &ExtensionOperator,
    input: &SmoothInput,
    w0: &[f64],
    t_final: f64,
    dt: f64,
) -> Result<Vec<Vec<f64>>> {
    let sys = crate::extended::assemble_extended(plant, ext)?;
    let e_n = crate::extension::project_extension(ext, plant)?;
    let ns = plant.state_dim();
    if w0.len() != ns {
        return Err(Error::DimensionMismatch("physical initial state size mismatch".into()));
    }
    let eta = ext.eta;
    // Only the (stable) plant block is integrated; the input states are the
    // analytically known boundary trajectory, so the open-loop instability
    // of the eta integrator never amplifies integration error. The plant
    // block sees the coupling columns times u(t) plus B_plant kappa(t).
    let a_plant = sys.a.block(0, 0, ns, ns);
    let coupling = sys.a.block(0, ns, ns, sys.input_states);
    let b_plant = sys.b.block(0, 0, ns, 1);
    let c_plant = sys.c.block(0, 0, sys.c.rows(), ns);
    let c_input = sys.c.block(0, ns, sys.c.rows(), sys.input_states);
    let inp = *input;
    let (x0, u_states, kappa): (
        Vec<f64>,
        Box<dyn Fn(f64) -> Vec<f64>>,
        Box<dyn Fn(f64) -> f64>,
    ) = match sys.variant {
        crate::extended::ExtendedVariant::ParabolicFirstOrder
        | crate::extended::ExtendedVariant::BeamV1 => {
            let u0 = inp.u(0.0);
            let x0: Vec<f64> = (0..ns).map(|i| w0[i] - e_n[(i, 0)] * u0).collect();
            (
                x0,
                Box::new(move |t| vec![inp.u(t)]),
                Box::new(move |t| inp.du(t) - eta * inp.u(t)),
            )
        }
        crate::extended::ExtendedVariant::BeamV2 => {
            let PlantDetail::Beam { alpha_eff, beta_eff, gamma_eff, .. } = &plant.detail else {
                unreachable!()
            };
            let (al, be, ga) = (*alpha_eff, *beta_eff, *gamma_eff);
            let nf = ns / 2;
            let u0 = inp.u(0.0);
            let du0 = inp.du(0.0);
            let mut x0 = Vec::with_capacity(ns);
            for i in 0..nf {
                x0.push(w0[i] - e_n[(i, 0)] * u0);
            }
            for i in 0..nf {
                x0.push(w0[nf + i] - e_n[(i, 0)] * du0);
            }
            (
                x0,
                Box::new(move |t| vec![inp.u(t), inp.du(t)]),
                Box::new(move |t| inp.d2u(t) + (be * eta + ga) * inp.du(t) + al * eta * inp.u(t)),
            )
        }
    };
    let mut outputs = Vec::new();
    trapezoid_run(
        &a_plant,
        &x0,
        t_final,
        dt,
        |t| {
            let k = kappa(t);
            let us = u_states(t);
            let mut f = coupling.matvec(&us);
            for (fv, bv) in f.iter_mut().zip(b_plant.col(0).iter()) {
                *fv += bv * k;
            }
            f
        },
        |_, t, x| {
            let mut y = c_plant.matvec(x);
            let yu = c_input.matvec(&u_states(t));
            for (a, b) in y.iter_mut().zip(yu.iter()) {
                *a += b;
            }
            outputs.push(y);
        },
    )?;
    Ok(outputs)
}

#[derive(Debug, Clone)]
pub struct DecayFit {
    pub m_e: f64,
    pub w_e: f64,
    pub window: (f64, f64),
    /// RMS residual of the log-linear fit on the envelope points.
    pub residual: f64,
}

impl DecayFit {
    pub fn is_decaying(&self) -> bool {
        self.w_e > 1e-3
    }
}

const ERROR_FLOOR: f64 = 1e-14;
const ENVELOPE_BUCKETS: usize = 40;

/// Least-squares fit of log ||e(t)|| over the window, taken on the upper
/// envelope (per-bucket maxima) so oscillatory errors do not bias the rate.
pub fn fit_decay(times: &[f64], error_norms: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    if times.len() != error_norms.len() {
        return Err(Error::DimensionMismatch("times and errors differ in length".into()));
    }
    let (t0, t1) = window;
    if !(t1 > t0) {
        return Err(Error::InvalidArgument("fit window must have positive length".into()));
    }
    let width = (t1 - t0) / ENVELOPE_BUCKETS as f64;
    let mut peaks: Vec<(f64, f64)> = Vec::with_capacity(ENVELOPE_BUCKETS);
    for bucket in 0..ENVELOPE_BUCKETS {
        let lo = t0 + bucket as f64 * width;
        let hi = lo + width;
        let best = times
            .iter()
            .zip(error_norms.iter())
            .filter(|(t, _)| **t >= lo && **t < hi)
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap());
        if let Some((&t, &e)) = best {
            peaks.push((t, e.max(ERROR_FLOOR)));
        }
    }
    if peaks.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "only {} envelope points in the fit window",
            peaks.len()
        )));
    }
    // Least squares on (t, ln e).
    let n = peaks.len() as f64;
    let (mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0);
    for &(t, e) in &peaks {
        let y = e.ln();
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    let denom = n * stt - st * st;
    if denom.abs() < 1e-30 {
        return Err(Error::InsufficientData("degenerate time distribution in fit".into()));
    }
    let slope = (n * sty - st * sy) / denom;
    let intercept = (sy - slope * st) / n;
    let mut ss = 0.0;
    for &(t, e) in &peaks {
        ss += (e.ln() - (intercept + slope * t)).powi(2);
    }
    Ok(DecayFit {
        m_e: intercept.exp(),
        w_e: -slope,
        window,
        residual: (ss / n).sqrt(),
    })
}
