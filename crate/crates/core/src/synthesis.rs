//! Controller synthesis: observer and regulator Riccati designs on the
//! extended system, balanced truncation of the stabilized observer, and
//! closed-loop assembly against a (typically finer) simulation plant.

use crate::error::{Error, Result};
use crate::extended::ExtendedSystem;
use crate::internal_model::{default_q0, observability_ok, InternalModel};
use crate::matrix::DenseMatrix;
use crate::numlin;

#[derive(Debug, Clone)]
pub struct SynthesisParams {
    /// Observer stability-margin shift.
    pub alpha1: f64,
    /// Regulator stability-margin shift.
    pub alpha2: f64,
    /// Observer weight, p x p positive definite.
    pub r1: DenseMatrix,
    /// Regulator weight, m x m positive definite.
    pub r2: DenseMatrix,
    /// Scalar weight selectors (identity scalings) for Q0, Q1, Q2.
    pub q0_scale: f64,
    pub q1_scale: f64,
    pub q2_scale: f64,
    /// Balanced-truncation order of the observer block.
    pub reduced_order: usize,
}

impl SynthesisParams {
    pub fn default_for(p: usize, m: usize, alpha1: f64, alpha2: f64, r: usize) -> Self {
        SynthesisParams {
            alpha1,
            alpha2,
            r1: DenseMatrix::identity(p),
            r2: DenseMatrix::identity(m),
            q0_scale: 1.0,
            q1_scale: 1.0,
            q2_scale: 1.0,
            reduced_order: r,
        }
    }

    fn validate(&self, p: usize, m: usize) -> Result<()> {
        if !(self.alpha1 >= 0.0 && self.alpha2 >= 0.0) {
            return Err(Error::InvalidArgument("margin shifts must be non-negative".into()));
        }
        if self.r1.rows() != p || self.r1.cols() != p {
            return Err(Error::DimensionMismatch(format!("R1 must be {p} x {p}")));
        }
        if self.r2.rows() != m || self.r2.cols() != m {
            return Err(Error::DimensionMismatch(format!("R2 must be {m} x {m}")));
        }
        numlin::cholesky(&self.r1.symmetrize())
            .map_err(|_| Error::InvalidArgument("R1 must be positive definite".into()))?;
        numlin::cholesky(&self.r2.symmetrize())
            .map_err(|_| Error::InvalidArgument("R2 must be positive definite".into()))?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ObserverDesign {
    pub sigma: DenseMatrix,
    pub l: DenseMatrix,
    pub riccati_residual: f64,
    /// Spectral abscissa of A + L C (must sit left of -alpha1).
    pub closed_loop_abscissa: f64,
}

/// Observer Riccati: the filter equation on the shifted extended system;
/// L = -Sigma C^T R1^{-1} places the observer spectrum left of -alpha1.
pub fn observer_riccati(sys: &ExtendedSystem, params: &SynthesisParams) -> Result<ObserverDesign> {
    params.validate(sys.n_outputs(), sys.n_inputs())?;
    let n = sys.state_dim();
    let mut a_shift = sys.a.clone();
    for i in 0..n {
        a_shift[(i, i)] += params.alpha1;
    }
    let q = DenseMatrix::scaled_identity(n, params.q2_scale * params.q2_scale);
    let at = a_shift.transpose();
    let ct = sys.c.transpose();
    let sigma = numlin::care_solve(&at, &ct, &q, &params.r1).map_err(|e| match e {
        Error::NotStabilizable(m) => Error::NotDetectable(format!("observer design: {m}")),
        other => other,
    })?;
    let riccati_residual = numlin::care_residual_brq(&at, &ct, &q, &params.r1, &sigma)?;
    let l = (&(&sigma * &ct) * &numlin::inverse(&params.r1)?).scale(-1.0);
    let closed = &sys.a + &(&l * &sys.c);
    let closed_loop_abscissa = numlin::spectral_abscissa(&closed)?;
    if closed_loop_abscissa >= -params.alpha1 + 1e-8 {
        return Err(Error::NotDetectable(format!(
            "observer margin not met: abscissa {closed_loop_abscissa:.6e} vs -{}",
            params.alpha1
        )));
    }
    Ok(ObserverDesign { sigma, l, riccati_residual, closed_loop_abscissa })
}

#[derive(Debug, Clone)]
pub struct RegulatorDesign {
    pub pi: DenseMatrix,
    /// Gain on the internal-model state, m x dim Z0.
    pub k1: DenseMatrix,
    /// Gain on the extended state, m x n.
    pub k2: DenseMatrix,
    pub riccati_residual: f64,
    /// Spectral abscissa of A_c + B_c K (must sit left of -alpha2).
    pub closed_loop_abscissa: f64,
}

/// Regulator Riccati on the stacked (internal model, extended system):
/// A_c = [[G1, G2 C], [0, A]], B_c = [0; B], state weight from (Q0, Q1).
pub fn regulator_riccati(
    sys: &ExtendedSystem,
    im: &InternalModel,
    params: &SynthesisParams,
) -> Result<RegulatorDesign> {
    params.validate(sys.n_outputs(), sys.n_inputs())?;
    if im.dim_z0 > 0 && im.p != sys.n_outputs() {
        return Err(Error::DimensionMismatch(
            "internal model output count does not match the plant".into(),
        ));
    }
    let s0 = im.dim_z0;
    let n = sys.state_dim();
    let m = sys.n_inputs();
    // Degenerate weights never reach the Riccati solver.
    let q0 = default_q0(im).scale(params.q0_scale);
    if !observability_ok(&q0, &im.g1)? {
        return Err(Error::NotDetectable("(Q0, G1) is not observable".into()));
    }
    if params.q1_scale == 0.0 {
        return Err(Error::NotDetectable("Q1 = 0 leaves the plant states unweighted".into()));
    }
    let mut a_c = DenseMatrix::zeros(s0 + n, s0 + n);
    a_c.set_block(0, 0, &im.g1);
    a_c.set_block(0, s0, &(&im.g2 * &sys.c));
    a_c.set_block(s0, s0, &sys.a);
    for i in 0..s0 + n {
        a_c[(i, i)] += params.alpha2;
    }
    let mut b_c = DenseMatrix::zeros(s0 + n, m);
    b_c.set_block(s0, 0, &sys.b);
    let mut q = DenseMatrix::zeros(s0 + n, s0 + n);
    q.set_block(0, 0, &(&q0.transpose() * &q0));
    q.set_block(
        s0,
        s0,
        &DenseMatrix::scaled_identity(n, params.q1_scale * params.q1_scale),
    );
    let pi = numlin::care_solve(&a_c, &b_c, &q, &params.r2)?;
    let riccati_residual = numlin::care_residual_brq(&a_c, &b_c, &q, &params.r2, &pi)?;
    let k = (&(&numlin::inverse(&params.r2)? * &b_c.transpose()) * &pi).scale(-1.0);
    let k1 = k.block(0, 0, m, s0);
    let k2 = k.block(0, s0, m, n);
    // Margin on the unshifted stacked system.
    let mut closed = a_c.clone();
    for i in 0..s0 + n {
        closed[(i, i)] -= params.alpha2;
    }
    let closed = &closed + &(&b_c * &k);
    let closed_loop_abscissa = numlin::spectral_abscissa(&closed)?;
    if closed_loop_abscissa >= -params.alpha2 + 1e-8 {
        return Err(Error::NotStabilizable(format!(
            "regulator margin not met: abscissa {closed_loop_abscissa:.6e} vs -{}",
            params.alpha2
        )));
    }
    Ok(RegulatorDesign { pi, k1, k2, riccati_residual, closed_loop_abscissa })
}

#[derive(Debug, Clone)]
pub struct BtResult {
    pub a_r: DenseMatrix,
    pub b_r: DenseMatrix,
    pub c_r: DenseMatrix,
    /// Full Hankel singular value list of the input system.
    pub hsv: Vec<f64>,
    /// Order actually used (clamped to the numerical rank).
    pub r_used: usize,
    pub r_clamped: bool,
}

/// Square-root balanced truncation of a stable system (A, B, C): gramian
/// square roots, SVD of their cross product, and the rank-r projection.
pub fn balanced_truncate(
    a: &DenseMatrix,
    b: &DenseMatrix,
    c: &DenseMatrix,
    r: usize,
) -> Result<BtResult> {
    let n = a.rows();
    if r > n {
        return Err(Error::InvalidArgument(format!(
            "reduction order {r} exceeds the state dimension {n}"
        )));
    }
    let abscissa = numlin::spectral_abscissa(a)?;
    if abscissa >= -1e-12 {
        return Err(Error::NotHurwitz { abscissa });
    }
    let p = numlin::lyapunov_solve(a, &(b * &b.transpose()))?;
    let q = numlin::lyapunov_solve(&a.transpose(), &(&c.transpose() * c))?;
    let zc = numlin::psd_sqrt_factor(&p)?;
    let zo = numlin::psd_sqrt_factor(&q)?;
    let d = numlin::svd(&(&zo.transpose() * &zc))?;
    let hsv = d.s.clone();
    // Full order discards nothing: keep the original coordinates. (The
    // balancing similarity itself is singular whenever the realization is
    // numerically non-minimal, so it cannot be formed at full order.)
    if r == n {
        return Ok(BtResult {
            a_r: a.clone(),
            b_r: b.clone(),
            c_r: c.clone(),
            hsv,
            r_used: n,
            r_clamped: false,
        });
    }
    let rank_cut = hsv
        .iter()
        .filter(|&&s| s > 1e-14 * hsv.first().copied().unwrap_or(0.0).max(1e-300))
        .count();
    let project = |r_used: usize| -> (DenseMatrix, DenseMatrix, DenseMatrix) {
        let mut t = DenseMatrix::zeros(n, r_used);
        let mut w = DenseMatrix::zeros(n, r_used);
        for j in 0..r_used {
            let s_isqrt = 1.0 / hsv[j].sqrt();
            for i in 0..n {
                let mut tv = 0.0;
                let mut wv = 0.0;
                for k in 0..n {
                    tv += zc[(i, k)] * d.v[(k, j)];
                    wv += zo[(i, k)] * d.u[(k, j)];
                }
                t[(i, j)] = tv * s_isqrt;
                w[(i, j)] = wv * s_isqrt;
            }
        }
        (&(&w.transpose() * a) * &t, &w.transpose() * b, c * &t)
    };
    // Hankel values at the relative noise plateau carry no state
    // information; the theory guarantees a stable truncation only above
    // it, so degrade the order until the reduced system verifies stable.
    let mut r_used = r.min(rank_cut);
    loop {
        let (a_r, b_r, c_r) = project(r_used);
        if r_used == 0 || numlin::spectral_abscissa(&a_r)? < 0.0 {
            return Ok(BtResult { a_r, b_r, c_r, hsv, r_used, r_clamped: r_used < r });
        }
        r_used -= 1;
    }
}

/// Classical truncation bound: twice the discarded Hankel singular values.
pub fn bt_error_bound(hsv: &[f64], r: usize) -> f64 {
    2.0 * hsv.iter().skip(r).sum::<f64>()
}

/// Smallest order whose discarded tail is below 1e-6 of the top value.
pub fn suggested_order(hsv: &[f64]) -> usize {
    let Some(&top) = hsv.first() else {
        return 0;
    };
    let mut tail: f64 = hsv.iter().sum();
    for (r, &s) in hsv.iter().enumerate() {
        if tail - s <= 1e-6 * top {
            return r + 1;
        }
        tail -= s;
    }
    hsv.len()
}

/// The realized controller: internal model (G1, G2), internal-model gain
/// K1, and the reduced observer (A_L^r, B_L^r, L^r, K2^r).
#[derive(Debug, Clone)]
pub struct ControllerRealization {
    pub g1: DenseMatrix,
    pub g2: DenseMatrix,
    pub k1: DenseMatrix,
    pub a_lr: DenseMatrix,
    pub b_lr: DenseMatrix,
    pub l_r: DenseMatrix,
    pub k2_r: DenseMatrix,
    pub hsv: Vec<f64>,
}

impl ControllerRealization {
    pub fn z1_dim(&self) -> usize {
        self.g1.rows()
    }

    pub fn z2_dim(&self) -> usize {
        self.a_lr.rows()
    }

    pub fn n_inputs(&self) -> usize {
        self.k1.rows()
    }

    pub fn n_outputs(&self) -> usize {
        self.g2.cols()
    }
}

pub fn assemble_controller(
    im: &InternalModel,
    k1: &DenseMatrix,
    reduced: &BtResult,
    m: usize,
    p: usize,
) -> Result<ControllerRealization> {
    let r = reduced.r_used;
    if reduced.b_r.cols() != m + p || reduced.c_r.rows() != m {
        return Err(Error::DimensionMismatch("reduced observer has inconsistent blocks".into()));
    }
    if k1.rows() != m || k1.cols() != im.dim_z0 {
        return Err(Error::DimensionMismatch("K1 does not match the internal model".into()));
    }
    let b_lr = reduced.b_r.block(0, 0, r, m);
    let l_r = reduced.b_r.block(0, m, r, p);
    Ok(ControllerRealization {
        g1: im.g1.clone(),
        g2: im.g2.clone(),
        k1: k1.clone(),
        a_lr: reduced.a_r.clone(),
        b_lr,
        l_r,
        k2_r: reduced.c_r.clone(),
        hsv: reduced.hsv.clone(),
    })
}

#[derive(Debug, Clone)]
pub struct SynthesisReport {
    pub observer_abscissa: f64,
    pub regulator_abscissa: f64,
    pub observer_residual: f64,
    pub regulator_residual: f64,
    pub hsv: Vec<f64>,
    pub suggested_r: usize,
    pub r_used: usize,
    pub r_clamped: bool,
}

/// The full stabilization and reduction pipeline on a design-mesh extended
/// system: two Riccati solves, then balanced truncation of the stabilized
/// observer triple (A + L C, [B, L], K2).
pub fn synthesize(
    sys: &ExtendedSystem,
    im: &InternalModel,
    params: &SynthesisParams,
) -> Result<(ControllerRealization, SynthesisReport)> {
    let m = sys.n_inputs();
    let p = sys.n_outputs();
    let obs = observer_riccati(sys, params)?;
    let reg = regulator_riccati(sys, im, params)?;
    let a_stab = &sys.a + &(&obs.l * &sys.c);
    let b_aug = DenseMatrix::hstack(&[&sys.b, &obs.l]);
    let reduced = balanced_truncate(&a_stab, &b_aug, &reg.k2, params.reduced_order)?;
    let report = SynthesisReport {
        observer_abscissa: obs.closed_loop_abscissa,
        regulator_abscissa: reg.closed_loop_abscissa,
        observer_residual: obs.riccati_residual,
        regulator_residual: reg.riccati_residual,
        hsv: reduced.hsv.clone(),
        suggested_r: suggested_order(&reduced.hsv),
        r_used: reduced.r_used,
        r_clamped: reduced.r_clamped,
    };
    let ctrl = assemble_controller(im, &reg.k1, &reduced, m, p)?;
    Ok((ctrl, report))
}

/// Closed loop of an extended plant (usually on a finer mesh than the
/// design) with the realized controller, driven by the reference signal.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub a_e: DenseMatrix,
    pub b_e: DenseMatrix,
    pub c_e: DenseMatrix,
    pub d_e: DenseMatrix,
    pub plant_dofs: usize,
    pub input_states: usize,
    pub m_inputs: usize,
    pub z1_dim: usize,
    pub z2_dim: usize,
}

impl ClosedLoop {
    pub fn state_dim(&self) -> usize {
        self.a_e.rows()
    }
}

pub fn assemble_closed_loop(plant_sys: &ExtendedSystem, ctrl: &ControllerRealization) -> Result<ClosedLoop> {
    let n = plant_sys.state_dim();
    let m = plant_sys.n_inputs();
    let p = plant_sys.n_outputs();
    if ctrl.n_outputs() != p {
        return Err(Error::SpecMismatch(format!(
            "controller expects {} outputs, plant has {p}",
            ctrl.n_outputs()
        )));
    }
    if ctrl.n_inputs() != m {
        return Err(Error::SpecMismatch(format!(
            "controller drives {} inputs, plant has {m}",
            ctrl.n_inputs()
        )));
    }
    let s0 = ctrl.z1_dim();
    let r = ctrl.z2_dim();
    let total = n + s0 + r;
    let mut a_e = DenseMatrix::zeros(total, total);
    a_e.set_block(0, 0, &plant_sys.a);
    a_e.set_block(0, n, &(&plant_sys.b * &ctrl.k1));
    if r > 0 {
        a_e.set_block(0, n + s0, &(&plant_sys.b * &ctrl.k2_r));
    }
    a_e.set_block(n, 0, &(&ctrl.g2 * &plant_sys.c));
    a_e.set_block(n, n, &ctrl.g1);
    if r > 0 {
        a_e.set_block(n + s0, 0, &(&ctrl.l_r.scale(-1.0) * &plant_sys.c));
        a_e.set_block(n + s0, n, &(&ctrl.b_lr * &ctrl.k1));
        a_e.set_block(n + s0, n + s0, &(&ctrl.a_lr + &(&ctrl.b_lr * &ctrl.k2_r)));
    }
    let mut b_e = DenseMatrix::zeros(total, p);
    b_e.set_block(n, 0, &ctrl.g2.scale(-1.0));
    if r > 0 {
        b_e.set_block(n + s0, 0, &ctrl.l_r);
    }
    let mut c_e = DenseMatrix::zeros(p, total);
    c_e.set_block(0, 0, &plant_sys.c);
    let d_e = DenseMatrix::scaled_identity(p, -1.0);
    Ok(ClosedLoop {
        a_e,
        b_e,
        c_e,
        d_e,
        plant_dofs: plant_sys.plant_dofs,
        input_states: plant_sys.input_states,
        m_inputs: m,
        z1_dim: s0,
        z2_dim: r,
    })
}

/// Logarithmic frequency grid on [1e-3, 1e3].
pub fn log_frequency_grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / (points - 1) as f64))
        .collect()
}

/// Largest sampled deviation sigma_max(G1(iw) - G2(iw)) over the grid.
pub fn max_transfer_deviation(
    s1: (&DenseMatrix, &DenseMatrix, &DenseMatrix),
    s2: (&DenseMatrix, &DenseMatrix, &DenseMatrix),
    grid: &[f64],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &omega in grid {
        let (g1r, g1i) = numlin::freq_response(s1.0, s1.1, s1.2, omega)?;
        let (g2r, g2i) = numlin::freq_response(s2.0, s2.1, s2.2, omega)?;
        let dr = &g1r - &g2r;
        let di = &g1i - &g2i;
        worst = worst.max(numlin::sigma_max_complex(&dr, &di)?);
    }
    Ok(worst)
}
