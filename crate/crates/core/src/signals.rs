//! Reference signals: trigonometric signals with polynomial coefficients,
//! and Fourier truncation of periodic piecewise-linear waveforms.
//!
//! A signal is y(t) = a_0(t) + sum_k (a_k(t) cos(w_k t) + b_k(t) sin(w_k t))
//! with vector polynomial coefficients; the concatenated coefficient vector
//! is the payload of the tracking error bound.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// One frequency line: polynomial coefficient matrices of shape p x n
/// (column j holds the t^j coefficients). For omega = 0 the sine part must
/// be zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTerm {
    pub omega: f64,
    pub a: DenseMatrix,
    pub b: DenseMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSignal {
    pub p: usize,
    pub terms: Vec<SignalTerm>,
}

impl ReferenceSignal {
    pub fn new(p: usize, terms: Vec<SignalTerm>) -> Result<Self> {
        let mut prev = -1.0;
        for term in &terms {
            if term.omega < 0.0 || term.omega <= prev {
                return Err(Error::InvalidArgument(
                    "signal frequencies must be non-negative and strictly increasing".into(),
                ));
            }
            prev = term.omega;
            if term.a.rows() != p || term.b.rows() != p || term.a.cols() != term.b.cols() {
                return Err(Error::DimensionMismatch(format!(
                    "signal term at omega {} has inconsistent coefficient shapes",
                    term.omega
                )));
            }
            if term.omega == 0.0 && term.b.norm_max() != 0.0 {
                return Err(Error::InvalidArgument(
                    "the omega = 0 term cannot carry a sine coefficient".into(),
                ));
            }
        }
        Ok(ReferenceSignal { p, terms })
    }

    /// Frequency/multiplicity list for building the internal model:
    /// (omega_k, n_k) with n_k the polynomial length of the term.
    pub fn frequency_profile(&self) -> Vec<(f64, usize)> {
        self.terms.iter().map(|t| (t.omega, t.a.cols().max(1))).collect()
    }

    pub fn superpose(&self, other: &ReferenceSignal) -> Result<ReferenceSignal> {
        if self.p != other.p {
            return Err(Error::DimensionMismatch("superpose: output counts differ".into()));
        }
        let mut terms: Vec<SignalTerm> = self.terms.clone();
        for t in &other.terms {
            match terms.iter_mut().find(|u| u.omega == t.omega) {
                Some(u) => {
                    let n = u.a.cols().max(t.a.cols());
                    u.a = add_padded(&u.a, &t.a, n);
                    u.b = add_padded(&u.b, &t.b, n);
                }
                None => terms.push(t.clone()),
            }
        }
        terms.sort_by(|x, y| x.omega.partial_cmp(&y.omega).unwrap());
        ReferenceSignal::new(self.p, terms)
    }
}

fn add_padded(x: &DenseMatrix, y: &DenseMatrix, n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(x.rows(), n, |i, j| {
        let xv = if j < x.cols() { x[(i, j)] } else { 0.0 };
        let yv = if j < y.cols() { y[(i, j)] } else { 0.0 };
        xv + yv
    })
}

fn horner(row: &[f64], t: f64) -> f64 {
    row.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

/// Pointwise evaluation of the reference signal.
pub fn eval_reference(sig: &ReferenceSignal, t: f64) -> Vec<f64> {
    let mut y = vec![0.0; sig.p];
    for term in &sig.terms {
        let (c, s) = if term.omega == 0.0 {
            (1.0, 0.0)
        } else {
            ((term.omega * t).cos(), (term.omega * t).sin())
        };
        for i in 0..sig.p {
            y[i] += horner(term.a.row(i), t) * c + horner(term.b.row(i), t) * s;
        }
    }
    y
}

/// Euclidean norm of the concatenated polynomial coefficients.
pub fn lambda_norm(sig: &ReferenceSignal) -> f64 {
    let mut acc = 0.0;
    for term in &sig.terms {
        acc += term.a.data().iter().map(|v| v * v).sum::<f64>();
        acc += term.b.data().iter().map(|v| v * v).sum::<f64>();
    }
    acc.sqrt()
}

/// Periodic, continuous, piecewise-linear waveform given by breakpoints in
/// [0, period); values interpolate linearly and wrap around.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearWave {
    pub period: f64,
    pub breakpoints: Vec<(f64, Vec<f64>)>,
}

impl PiecewiseLinearWave {
    pub fn new(period: f64, breakpoints: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        if period <= 0.0 {
            return Err(Error::InvalidArgument("wave period must be positive".into()));
        }
        if breakpoints.is_empty() {
            return Err(Error::InvalidArgument("wave needs at least one breakpoint".into()));
        }
        let p = breakpoints[0].1.len();
        let mut prev = f64::NEG_INFINITY;
        for (t, v) in &breakpoints {
            if *t < 0.0 || *t >= period {
                return Err(Error::InvalidArgument(format!(
                    "breakpoint time {t} outside [0, {period})"
                )));
            }
            if *t <= prev {
                return Err(Error::InvalidArgument("breakpoint times must be increasing".into()));
            }
            prev = *t;
            if v.len() != p {
                return Err(Error::DimensionMismatch("ragged wave breakpoints".into()));
            }
        }
        Ok(PiecewiseLinearWave { period, breakpoints })
    }

    pub fn outputs(&self) -> usize {
        self.breakpoints[0].1.len()
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let tau = t.rem_euclid(self.period);
        let nb = self.breakpoints.len();
        // Find the segment [t_i, t_{i+1}) containing tau (cyclically).
        let mut i = nb - 1;
        for (k, (tk, _)) in self.breakpoints.iter().enumerate() {
            if *tk <= tau {
                i = k;
            } else {
                break;
            }
        }
        let (t0, v0) = &self.breakpoints[i];
        let (t1, v1) = if i + 1 < nb {
            (self.breakpoints[i + 1].0, &self.breakpoints[i + 1].1)
        } else {
            (self.breakpoints[0].0 + self.period, &self.breakpoints[0].1)
        };
        let span = t1 - t0;
        let w = if span > 0.0 { (tau - t0) / span } else { 0.0 };
        v0.iter().zip(v1.iter()).map(|(a, b)| a + w * (b - a)).collect()
    }

    fn segments(&self) -> Vec<(f64, f64)> {
        let nb = self.breakpoints.len();
        let mut segs = Vec::with_capacity(nb);
        for i in 0..nb {
            let t0 = self.breakpoints[i].0;
            let t1 = if i + 1 < nb {
                self.breakpoints[i + 1].0
            } else {
                self.breakpoints[0].0 + self.period
            };
            if t1 > t0 {
                segs.push((t0, t1));
            }
        }
        segs
    }
}

/// 4-point Gauss-Legendre nodes/weights on [-1, 1].
const GAUSS4_X: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_26,
    0.339_981_043_584_856_26,
    0.861_136_311_594_052_6,
];
const GAUSS4_W: [f64; 4] = [
    0.347_854_845_137_453_85,
    0.652_145_154_862_546_2,
    0.652_145_154_862_546_2,
    0.347_854_845_137_453_85,
];

/// Integrate f over [a, b] by composite 4-point Gauss on `panels` panels.
pub(crate) fn gauss_integrate(a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let x0 = a + p as f64 * h;
        let mid = x0 + 0.5 * h;
        for (x, w) in GAUSS4_X.iter().zip(GAUSS4_W.iter()) {
            acc += w * f(mid + 0.5 * h * x);
        }
    }
    acc * 0.5 * (b - a) / panels as f64
}

/// Truncated Fourier series of a periodic piecewise-linear wave:
/// frequencies 2 pi k / period for k = 0..=q, constant coefficients.
/// Coefficients come from composite Gauss quadrature over each linear
/// segment, 64 panels per segment.
pub fn fourier_truncate(wave: &PiecewiseLinearWave, q: usize) -> Result<ReferenceSignal> {
    let p = wave.outputs();
    let period = wave.period;
    let base = 2.0 * std::f64::consts::PI / period;
    let segs = wave.segments();
    let panels = 64;
    let mut terms = Vec::with_capacity(q + 1);
    for k in 0..=q {
        let omega = base * k as f64;
        let mut a = DenseMatrix::zeros(p, 1);
        let mut b = DenseMatrix::zeros(p, 1);
        for out in 0..p {
            let mut ca = 0.0;
            let mut cb = 0.0;
            for &(t0, t1) in &segs {
                ca += gauss_integrate(t0, t1, panels, |t| wave.eval(t)[out] * (omega * t).cos());
                if k > 0 {
                    cb += gauss_integrate(t0, t1, panels, |t| wave.eval(t)[out] * (omega * t).sin());
                }
            }
            let scale = if k == 0 { 1.0 / period } else { 2.0 / period };
            a[(out, 0)] = ca * scale;
            b[(out, 0)] = cb * scale;
        }
        terms.push(SignalTerm { omega, a, b });
    }
    ReferenceSignal::new(p, terms)
}

/// Mean square of the wave over one period (Parseval reference).
pub fn wave_mean_square(wave: &PiecewiseLinearWave) -> f64 {
    let mut acc = 0.0;
    for &(t0, t1) in &wave.segments() {
        for out in 0..wave.outputs() {
            acc += gauss_integrate(t0, t1, 64, |t| wave.eval(t)[out].powi(2));
        }
    }
    acc / wave.period
}

/// Convenience constructors for the two demo waveforms: a trapezoid
/// (plateau 1, ramp down, plateau 0, ramp up) and a triangle dipping to -1.
pub fn trapezoid_wave(period: f64) -> PiecewiseLinearWave {
    let q = period / 4.0;
    PiecewiseLinearWave::new(
        period,
        vec![
            (0.0, vec![1.0]),
            (q, vec![1.0]),
            (2.0 * q, vec![0.0]),
            (3.0 * q, vec![0.0]),
        ],
    )
    .expect("static breakpoints")
}

pub fn triangle_wave(period: f64) -> PiecewiseLinearWave {
    PiecewiseLinearWave::new(period, vec![(0.0, vec![0.0]), (period / 2.0, vec![-1.0])])
        .expect("static breakpoints")
}
