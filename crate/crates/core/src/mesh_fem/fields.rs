//! Closed set of named analytic coefficient fields: constants, affine
//! functions, trigonometric mixes, and indicator functions. Deterministic
//! and differentiable where the assemblers need derivatives; no expression
//! language.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrigAxis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrigKind {
    Sin,
    Cos,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigTerm {
    pub axis: TrigAxis,
    pub kind: TrigKind,
    pub freq: f64,
    pub amp: f64,
}

impl TrigTerm {
    fn eval(&self, x: f64, y: f64) -> f64 {
        let arg = self.freq * match self.axis {
            TrigAxis::X => x,
            TrigAxis::Y => y,
        };
        self.amp
            * match self.kind {
                TrigKind::Sin => arg.sin(),
                TrigKind::Cos => arg.cos(),
            }
    }

    fn deriv_x(&self, x: f64, _y: f64) -> f64 {
        match self.axis {
            TrigAxis::Y => 0.0,
            TrigAxis::X => {
                let arg = self.freq * x;
                self.amp
                    * self.freq
                    * match self.kind {
                        TrigKind::Sin => arg.cos(),
                        TrigKind::Cos => -arg.sin(),
                    }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScalarField {
    Constant(f64),
    /// c0 + cx * x + cy * y (cy ignored in 1D).
    Linear { c0: f64, cx: f64, cy: f64 },
    /// c0 plus a sum of single-axis trigonometric terms.
    Trig { c0: f64, terms: Vec<TrigTerm> },
    IndicatorInterval { a: f64, b: f64 },
    IndicatorRect { x0: f64, x1: f64, y0: f64, y1: f64 },
}

impl ScalarField {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            ScalarField::Constant(c) => *c,
            ScalarField::Linear { c0, cx, cy } => c0 + cx * x + cy * y,
            ScalarField::Trig { c0, terms } => c0 + terms.iter().map(|t| t.eval(x, y)).sum::<f64>(),
            ScalarField::IndicatorInterval { a, b } => {
                if x >= *a && x <= *b {
                    1.0
                } else {
                    0.0
                }
            }
            ScalarField::IndicatorRect { x0, x1, y0, y1 } => {
                if x >= *x0 && x <= *x1 && y >= *y0 && y <= *y1 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn eval_1d(&self, x: f64) -> f64 {
        self.eval(x, 0.0)
    }

    /// d/dx for analytic families; indicators are rejected (the Hermite
    /// interpolant needs slopes, which indicators do not have).
    pub fn deriv_1d(&self, x: f64) -> Result<f64> {
        match self {
            ScalarField::Constant(_) => Ok(0.0),
            ScalarField::Linear { cx, .. } => Ok(*cx),
            ScalarField::Trig { terms, .. } => Ok(terms.iter().map(|t| t.deriv_x(x, 0.0)).sum()),
            _ => Err(Error::InvalidArgument(
                "indicator fields are not differentiable; use an analytic family".into(),
            )),
        }
    }

    pub fn is_analytic(&self) -> bool {
        !matches!(self, ScalarField::IndicatorInterval { .. } | ScalarField::IndicatorRect { .. })
    }

    /// Support clipped to an interval domain, for exact 1D integration of
    /// indicator sensors. Analytic fields return the full domain.
    pub fn support_1d(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        match self {
            ScalarField::IndicatorInterval { a, b } => {
                let (c0, c1) = (a.max(lo), b.min(hi));
                if c0 < c1 {
                    Some((c0, c1))
                } else {
                    None
                }
            }
            _ => Some((lo, hi)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2 {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl VectorField2 {
    pub fn zero() -> Self {
        VectorField2 { x: ScalarField::Constant(0.0), y: ScalarField::Constant(0.0) }
    }

    pub fn eval(&self, x: f64, y: f64) -> [f64; 2] {
        [self.x.eval(x, y), self.y.eval(x, y)]
    }
}

/// Boundary actuator profile in normalized arclength s in [0, 1]; the sine
/// family vanishes at both chain endpoints, keeping the Dirichlet data
/// continuous where the controlled segment meets the homogeneous one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryProfile {
    /// sin(k * pi * s)
    SinePi { k: u32 },
}

impl BoundaryProfile {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            BoundaryProfile::SinePi { k } => (*k as f64 * std::f64::consts::PI * s).sin(),
        }
    }
}
