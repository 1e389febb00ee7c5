use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::manifold::{reduce, CoveringDescriptor, Point};

type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A bounded potential `V` with its declared sup norm. Every evaluation is
/// checked against the bound. `V` may be discontinuous; it is never
/// differentiated.
#[derive(Clone)]
pub struct Potential {
    f: PointFn,
    sup_bound: f64,
    label: String,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("label", &self.label)
            .field("sup_bound", &self.sup_bound)
            .finish()
    }
}

impl Potential {
    pub fn new(label: impl Into<String>, sup_bound: f64, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(sup_bound >= 0.0 && sup_bound.is_finite()) {
            return Err(Error::param("sup_bound", format!("must be finite and nonnegative, got {sup_bound}")));
        }
        Ok(Potential {
            f: Arc::new(f),
            sup_bound,
            label: label.into(),
        })
    }

    pub fn zero() -> Self {
        Potential::new("zero", 0.0, |_| 0.0).expect("valid")
    }

    pub fn constant(c: f64) -> Result<Self> {
        Potential::new(format!("const:{c}"), c.abs(), move |_| c)
    }

    /// `cos` of the first coordinate.
    pub fn cos() -> Self {
        Potential::new("cos", 1.0, |x| x[0].cos()).expect("valid")
    }

    /// `v` on `[a, b)` in the first coordinate, 0 elsewhere.
    pub fn step(a: f64, b: f64, v: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::param("step", format!("needs a < b, got [{a}, {b})")));
        }
        Potential::new(format!("step:{a},{b},{v}"), v.abs(), move |x| if x[0] >= a && x[0] < b { v } else { 0.0 })
    }

    /// `V + c`.
    pub fn shifted(&self, c: f64) -> Self {
        let f = Arc::clone(&self.f);
        Potential {
            f: Arc::new(move |x| f(x) + c),
            sup_bound: self.sup_bound + c.abs(),
            label: format!("{}+{c}", self.label),
        }
    }

    /// `V o pi` on the covering space.
    pub fn lifted(&self, cov: &CoveringDescriptor) -> Self {
        let f = Arc::clone(&self.f);
        let periods = cov.periods().to_vec();
        Potential {
            f: Arc::new(move |x| {
                let down: Vec<f64> = x.iter().zip(&periods).map(|(c, l)| reduce(*c, *l)).collect();
                f(&down)
            }),
            sup_bound: self.sup_bound,
            label: format!("lift({})", self.label),
        }
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: &Point) -> Result<f64> {
        if x.is_cemetery() {
            return Err(Error::Domain("potentials are not evaluated at the cemetery".into()));
        }
        self.eval_coords(x.coords())
    }

    #[inline]
    pub(crate) fn eval_coords(&self, x: &[f64]) -> Result<f64> {
        let v = (self.f)(x);
        if v.is_nan() || v.abs() > self.sup_bound * (1.0 + 1e-12) {
            return Err(Error::PotentialBound {
                value: v.abs(),
                bound: self.sup_bound,
            });
        }
        Ok(v)
    }
}

/// Terminal data `g`, read as 0 at the cemetery.
#[derive(Clone)]
pub struct Terminal {
    f: PointFn,
    sup_abs: Option<f64>,
    label: String,
}

impl fmt::Debug for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Terminal")
            .field("label", &self.label)
            .field("sup_abs", &self.sup_abs)
            .finish()
    }
}

impl Terminal {
    /// `sup_abs` enables the per-run bound `|estimate| <= e^{t |V|} sup|g|`.
    pub fn new(label: impl Into<String>, sup_abs: Option<f64>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Terminal {
            f: Arc::new(f),
            sup_abs,
            label: label.into(),
        }
    }

    pub fn one() -> Self {
        Terminal::new("one", Some(1.0), |_| 1.0)
    }

    /// Indicator of `[a, b)` in the first coordinate.
    pub fn indicator(a: f64, b: f64) -> Self {
        Terminal::new(format!("indicator:{a},{b}"), Some(1.0), move |x| {
            if x[0] >= a && x[0] < b {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn sup_abs(&self) -> Option<f64> {
        self.sup_abs
    }

    pub fn eval(&self, x: &Point) -> f64 {
        if x.is_cemetery() {
            0.0
        } else {
            (self.f)(x.coords())
        }
    }

    #[inline]
    pub(crate) fn eval_coords(&self, x: Option<&[f64]>) -> f64 {
        x.map_or(0.0, |c| (self.f)(c))
    }
}
