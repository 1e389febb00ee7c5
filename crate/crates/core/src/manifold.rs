//! Model spaces, their points, distances and covering projections.
//!
//! Hyperbolic 3-space uses the hyperboloid model: points are
//! `(x0, x1, x2, x3)` with `x0^2 - x1^2 - x2^2 - x3^2 = 1` and `x0 >= 1`.
//! Flat tori and circles store representatives in the half-open
//! fundamental box `[0, L_i)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Relative tolerance on the hyperboloid constraint.
pub const HYPERBOLOID_TOLERANCE: f64 = 1e-12;

/// Tolerance on the unit norm of a tangent direction passed to `exp_point`.
pub const UNIT_DIRECTION_TOLERANCE: f64 = 1e-12;

/// A model Riemannian manifold with an evaluable heat kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum ManifoldModel {
    Euclidean { dim: usize },
    Hyperbolic3,
    FlatTorus { periods: Vec<f64> },
    Circle { circumference: f64 },
    DirichletInterval { length: f64 },
    /// One-point compactification; the extra point is the cemetery.
    Compactified(Box<ManifoldModel>),
}

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::param(name, format!("must be a positive finite number, got {v}")))
    }
}

impl ManifoldModel {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be at least 1"));
        }
        Ok(ManifoldModel::Euclidean { dim })
    }

    pub fn hyperbolic3() -> Self {
        ManifoldModel::Hyperbolic3
    }

    pub fn flat_torus(periods: Vec<f64>) -> Result<Self> {
        if periods.is_empty() {
            return Err(Error::param("periods", "a torus needs at least one period"));
        }
        for &p in &periods {
            positive("periods", p)?;
        }
        Ok(ManifoldModel::FlatTorus { periods })
    }

    pub fn circle(circumference: f64) -> Result<Self> {
        Ok(ManifoldModel::Circle {
            circumference: positive("circumference", circumference)?,
        })
    }

    pub fn dirichlet_interval(length: f64) -> Result<Self> {
        Ok(ManifoldModel::DirichletInterval {
            length: positive("length", length)?,
        })
    }

    /// Wraps a model whose heat kernel loses mass. Only the Dirichlet
    /// interval qualifies among the supported models.
    pub fn compactified(base: ManifoldModel) -> Result<Self> {
        match base {
            ManifoldModel::DirichletInterval { .. } => Ok(ManifoldModel::Compactified(Box::new(base))),
            other => Err(Error::UnsupportedModel(format!(
                "compactification requires a substochastic base, got {other}"
            ))),
        }
    }

    /// Re-checks the parameter invariants of a model built by hand.
    pub fn validate(&self) -> Result<()> {
        match self {
            ManifoldModel::Euclidean { dim } => Self::euclidean(*dim).map(drop),
            ManifoldModel::Hyperbolic3 => Ok(()),
            ManifoldModel::FlatTorus { periods } => Self::flat_torus(periods.clone()).map(drop),
            ManifoldModel::Circle { circumference } => Self::circle(*circumference).map(drop),
            ManifoldModel::DirichletInterval { length } => Self::dirichlet_interval(*length).map(drop),
            ManifoldModel::Compactified(base) => {
                base.validate()?;
                Self::compactified((**base).clone()).map(drop)
            }
        }
    }

    /// Intrinsic dimension.
    pub fn dim(&self) -> usize {
        match self {
            ManifoldModel::Euclidean { dim } => *dim,
            ManifoldModel::Hyperbolic3 => 3,
            ManifoldModel::FlatTorus { periods } => periods.len(),
            ManifoldModel::Circle { .. } | ManifoldModel::DirichletInterval { .. } => 1,
            ManifoldModel::Compactified(base) => base.dim(),
        }
    }

    /// Number of chart coordinates of a point (4 for the hyperboloid).
    pub fn coord_len(&self) -> usize {
        match self {
            ManifoldModel::Hyperbolic3 => 4,
            ManifoldModel::Compactified(base) => base.coord_len(),
            other => other.dim(),
        }
    }

    /// Lattice periods for tori and circles.
    pub fn periods(&self) -> Option<Vec<f64>> {
        match self {
            ManifoldModel::FlatTorus { periods } => Some(periods.clone()),
            ManifoldModel::Circle { circumference } => Some(vec![*circumference]),
            _ => None,
        }
    }

    pub fn is_compactified(&self) -> bool {
        matches!(self, ManifoldModel::Compactified(_))
    }

    /// The underlying model with any compactification stripped.
    pub fn base(&self) -> &ManifoldModel {
        match self {
            ManifoldModel::Compactified(base) => base.base(),
            other => other,
        }
    }

    /// A canonical interior point: the origin, or the midpoint of an interval.
    pub fn origin(&self) -> Point {
        match self {
            ManifoldModel::Hyperbolic3 => Point::new(vec![1.0, 0.0, 0.0, 0.0]),
            ManifoldModel::DirichletInterval { length } => Point::scalar(0.5 * length),
            ManifoldModel::Compactified(base) => base.origin(),
            other => Point::new(vec![0.0; other.dim()]),
        }
    }

    pub fn validate_point(&self, x: &Point) -> Result<()> {
        if x.is_cemetery() {
            return if self.is_compactified() {
                Ok(())
            } else {
                Err(Error::Domain(format!("cemetery point on non-compactified model {self}")))
            };
        }
        let coords = x.coords();
        if coords.len() != self.coord_len() {
            return Err(Error::DimensionMismatch {
                expected: self.coord_len(),
                got: coords.len(),
            });
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("non-finite coordinate {bad}")));
        }
        match self {
            ManifoldModel::Euclidean { .. } => Ok(()),
            ManifoldModel::Hyperbolic3 => check_hyperboloid(coords),
            ManifoldModel::FlatTorus { .. } | ManifoldModel::Circle { .. } => {
                let periods = self.periods().expect("periodic model");
                for (c, l) in coords.iter().zip(&periods) {
                    if !(0.0..*l).contains(c) {
                        return Err(Error::Domain(format!(
                            "coordinate {c} outside fundamental domain [0, {l})"
                        )));
                    }
                }
                Ok(())
            }
            ManifoldModel::DirichletInterval { length } => {
                let c = coords[0];
                if c > 0.0 && c < *length {
                    Ok(())
                } else {
                    Err(Error::Domain(format!("point {c} outside open interval (0, {length})")))
                }
            }
            ManifoldModel::Compactified(base) => base.validate_point(x),
        }
    }

    /// Riemannian distance. The cemetery is not a metric point.
    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        if x.is_cemetery() || y.is_cemetery() {
            return Err(Error::Domain("distance to the cemetery is undefined".into()));
        }
        self.validate_point(x)?;
        self.validate_point(y)?;
        Ok(self.distance_unchecked(x.coords(), y.coords()))
    }

    /// Distance on raw coordinates, skipping validation. Callers guarantee
    /// that both coordinate slices are valid for the model.
    pub fn distance_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            ManifoldModel::Euclidean { .. } => x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            ManifoldModel::Hyperbolic3 => hyperbolic_distance(x, y),
            ManifoldModel::FlatTorus { periods } => x
                .iter()
                .zip(y)
                .zip(periods)
                .map(|((a, b), l)| {
                    let d = periodic_separation(*a, *b, *l);
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
            ManifoldModel::Circle { circumference } => periodic_separation(x[0], y[0], *circumference),
            ManifoldModel::DirichletInterval { .. } => (x[0] - y[0]).abs(),
            ManifoldModel::Compactified(base) => base.distance_unchecked(x, y),
        }
    }

    /// Exponential map on H^3: follow the geodesic from `base` in the unit
    /// direction `direction` (expressed in the frame transported from the
    /// origin by the boost taking the origin to `base`) for length `r`.
    pub fn exp_point(&self, base: &Point, direction: [f64; 3], r: f64) -> Result<Point> {
        if !matches!(self, ManifoldModel::Hyperbolic3) {
            return Err(Error::UnsupportedModel(format!("exp_point is defined on H^3, not {self}")));
        }
        self.validate_point(base)?;
        let norm = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_DIRECTION_TOLERANCE {
            return Err(Error::param("direction", format!("must be a unit vector, norm is {norm}")));
        }
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::param("r", format!("must be nonnegative and finite, got {r}")));
        }
        Ok(Point::new(hyperbolic_exp(base.coords(), direction, r).to_vec()))
    }
}

/// Minimal separation of two representatives on a circle of length `l`.
#[inline]
fn periodic_separation(a: f64, b: f64, l: f64) -> f64 {
    let d = (a - b).abs() % l;
    d.min(l - d)
}

fn check_hyperboloid(c: &[f64]) -> Result<()> {
    let q = c[0] * c[0] - c[1] * c[1] - c[2] * c[2] - c[3] * c[3];
    let scale = (c[0] * c[0]).max(1.0);
    if c[0] < 1.0 - HYPERBOLOID_TOLERANCE || (q - 1.0).abs() > HYPERBOLOID_TOLERANCE * scale {
        return Err(Error::Domain(format!(
            "point {c:?} is not on the upper hyperboloid (Minkowski norm {q})"
        )));
    }
    Ok(())
}

/// `rho = 2 asinh(d / 2)` where `d^2 = -<x - y, x - y>` in Minkowski
/// signature; stable for nearby points where `acosh(<x, y>)` is not.
pub(crate) fn hyperbolic_distance(x: &[f64], y: &[f64]) -> f64 {
    let d0 = x[0] - y[0];
    let spatial: f64 = (1..4).map(|i| (x[i] - y[i]) * (x[i] - y[i])).sum();
    let d2 = (spatial - d0 * d0).max(0.0);
    2.0 * (0.5 * d2.sqrt()).asinh()
}

/// `cosh(r) p + sinh(r) v`, with `v` the boost of `(0, direction)`.
pub(crate) fn hyperbolic_exp(p: &[f64], u: [f64; 3], r: f64) -> [f64; 4] {
    let pu = p[1] * u[0] + p[2] * u[1] + p[3] * u[2];
    let k = pu / (1.0 + p[0]);
    let v = [pu, u[0] + k * p[1], u[1] + k * p[2], u[2] + k * p[3]];
    let (s, c) = (r.sinh(), r.cosh());
    let x1 = c * p[1] + s * v[1];
    let x2 = c * p[2] + s * v[2];
    let x3 = c * p[3] + s * v[3];
    // Recompute x0 from the constraint so drift never accumulates.
    let x0 = (1.0 + x1 * x1 + x2 * x2 + x3 * x3).sqrt();
    [x0, x1, x2, x3]
}

/// A point in chart coordinates, or the cemetery of a compactified model.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
    cemetery: bool,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point {
            coords,
            cemetery: false,
        }
    }

    pub fn scalar(x: f64) -> Self {
        Point::new(vec![x])
    }

    pub fn cemetery() -> Self {
        Point {
            coords: Vec::new(),
            cemetery: true,
        }
    }

    /// Lifts spatial coordinates `(x1, x2, x3)` onto the hyperboloid.
    pub fn hyperboloid(spatial: [f64; 3]) -> Self {
        let [a, b, c] = spatial;
        Point::new(vec![(1.0 + a * a + b * b + c * c).sqrt(), a, b, c])
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn is_cemetery(&self) -> bool {
        self.cemetery
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Self {
        Point::scalar(x)
    }
}

/// A normal covering of a flat torus (or circle) by Euclidean space; the
/// deck group is the integer lattice spanned by the periods.
#[derive(Debug, Clone, PartialEq)]
pub struct CoveringDescriptor {
    base: ManifoldModel,
    total: ManifoldModel,
    periods: Vec<f64>,
}

impl CoveringDescriptor {
    pub fn new(base: ManifoldModel) -> Result<Self> {
        base.validate()?;
        let periods = base
            .periods()
            .ok_or_else(|| Error::UnsupportedModel(format!("{base} has no Euclidean covering here")))?;
        let total = ManifoldModel::euclidean(periods.len())?;
        Ok(CoveringDescriptor { base, total, periods })
    }

    pub fn base(&self) -> &ManifoldModel {
        &self.base
    }

    pub fn total(&self) -> &ManifoldModel {
        &self.total
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    pub fn shortest_period(&self) -> f64 {
        self.periods.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Acts on a point of the total space by the deck transformation with
    /// lattice coefficients `k`.
    pub fn deck_translate(&self, x: &Point, k: &[i64]) -> Result<Point> {
        self.total.validate_point(x)?;
        if k.len() != self.periods.len() {
            return Err(Error::DimensionMismatch {
                expected: self.periods.len(),
                got: k.len(),
            });
        }
        Ok(Point::new(
            x.coords()
                .iter()
                .zip(k)
                .zip(&self.periods)
                .map(|((c, &ki), l)| c + ki as f64 * l)
                .collect(),
        ))
    }

    pub fn project_point(&self, x: &Point) -> Result<Point> {
        self.total.validate_point(x)?;
        Ok(Point::new(self.project_coords(x.coords())))
    }

    pub(crate) fn project_coords(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.periods).map(|(c, l)| reduce(*c, *l)).collect()
    }

    /// The preimage of `x` nearest to `anchor`; ties go to the smaller
    /// lattice coefficient.
    pub fn lift_point_near(&self, x: &Point, anchor: &Point) -> Result<Point> {
        self.base.validate_point(x)?;
        self.total.validate_point(anchor)?;
        Ok(Point::new(self.lift_coords(x.coords(), anchor.coords()).0))
    }

    /// Returns the lifted coordinates and the lattice coefficients used.
    pub(crate) fn lift_coords(&self, x: &[f64], anchor: &[f64]) -> (Vec<f64>, Vec<i64>) {
        let mut lifted = Vec::with_capacity(x.len());
        let mut coeffs = Vec::with_capacity(x.len());
        for ((&c, &a), &l) in x.iter().zip(anchor).zip(&self.periods) {
            let k0 = ((a - c) / l).floor();
            let lo = c + k0 * l;
            let hi = c + (k0 + 1.0) * l;
            let (k, v) = if (hi - a).abs() < (lo - a).abs() {
                (k0 + 1.0, hi)
            } else {
                (k0, lo)
            };
            lifted.push(v);
            coeffs.push(k as i64);
        }
        (lifted, coeffs)
    }
}

/// Reduces `x` into `[0, l)`.
#[inline]
pub(crate) fn reduce(x: f64, l: f64) -> f64 {
    let r = x - (x / l).floor() * l;
    if r >= l || r < 0.0 {
        // rounding at the seam
        0.0
    } else {
        r
    }
}

impl fmt::Display for ManifoldModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ManifoldModel::Euclidean { dim } => write!(f, "euclidean:{dim}"),
            ManifoldModel::Hyperbolic3 => write!(f, "hyperbolic3"),
            ManifoldModel::FlatTorus { periods } => {
                let p: Vec<String> = periods.iter().map(|p| p.to_string()).collect();
                write!(f, "torus:{}", p.join(","))
            }
            ManifoldModel::Circle { circumference } => write!(f, "circle:{circumference}"),
            ManifoldModel::DirichletInterval { length } => write!(f, "dirichlet:{length}"),
            ManifoldModel::Compactified(base) => write!(f, "compactified:{base}"),
        }
    }
}

impl FromStr for ManifoldModel {
    type Err = Error;

    /// Parses `euclidean:N`, `hyperbolic3`, `torus:L1,L2,..`, `circle:L`,
    /// `dirichlet:L` and `compactified:<model>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        let num = |r: Option<&str>| -> Result<f64> {
            let r = r.ok_or_else(|| Error::param("model", format!("`{head}` needs a parameter")))?;
            r.trim()
                .parse::<f64>()
                .map_err(|_| Error::param("model", format!("cannot parse `{r}` as a number")))
        };
        match head.to_ascii_lowercase().as_str() {
            "euclidean" | "r" => {
                let r = rest.ok_or_else(|| Error::param("model", "euclidean needs a dimension"))?;
                let dim = r
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::param("model", format!("cannot parse dimension `{r}`")))?;
                ManifoldModel::euclidean(dim)
            }
            "hyperbolic3" | "h3" => match rest {
                None => Ok(ManifoldModel::Hyperbolic3),
                Some(_) => Err(Error::param("model", "hyperbolic3 takes no parameter")),
            },
            "torus" => {
                let r = rest.ok_or_else(|| Error::param("model", "torus needs periods"))?;
                let periods = r
                    .split(',')
                    .map(|p| {
                        p.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::param("model", format!("cannot parse period `{p}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                ManifoldModel::flat_torus(periods)
            }
            "circle" => ManifoldModel::circle(num(rest)?),
            "dirichlet" | "interval" => ManifoldModel::dirichlet_interval(num(rest)?),
            "compactified" => {
                let r = rest.ok_or_else(|| Error::param("model", "compactified needs a base model"))?;
                ManifoldModel::compactified(r.parse()?)
            }
            other => Err(Error::param("model", format!("unknown model `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn euclidean_pythagorean() {
        let m = ManifoldModel::euclidean(2).unwrap();
        let d = m.distance(&Point::new(vec![0.0, 0.0]), &Point::new(vec![3.0, 4.0])).unwrap();
        assert_eq!(d, 5.0);
    }

    #[test]
    fn circle_wraps_around() {
        let m = ManifoldModel::circle(1.0).unwrap();
        let d = m.distance(&0.1.into(), &0.9.into()).unwrap();
        assert!(close(d, 0.2, 1e-15), "{d}");
    }

    #[test]
    fn hyperbolic_axis_geodesic() {
        let m = ManifoldModel::Hyperbolic3;
        let x = Point::new(vec![1.0, 0.0, 0.0, 0.0]);
        let y = Point::new(vec![1f64.cosh(), 1f64.sinh(), 0.0, 0.0]);
        assert!(close(m.distance(&x, &y).unwrap(), 1.0, 1e-15));
    }

    #[test]
    fn cemetery_distance_is_domain_error() {
        let m = ManifoldModel::compactified(ManifoldModel::dirichlet_interval(1.0).unwrap()).unwrap();
        let err = m.distance(&Point::cemetery(), &0.5.into()).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn invalid_points_rejected() {
        let e = ManifoldModel::euclidean(2).unwrap();
        assert!(matches!(
            e.distance(&Point::scalar(0.0), &Point::new(vec![0.0, 0.0])),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
        let c = ManifoldModel::circle(1.0).unwrap();
        assert!(c.validate_point(&Point::scalar(1.0)).is_err());
        assert!(c.validate_point(&Point::cemetery()).is_err());
        let d = ManifoldModel::dirichlet_interval(1.0).unwrap();
        assert!(d.validate_point(&Point::scalar(0.0)).is_err());
        let h = ManifoldModel::Hyperbolic3;
        assert!(h.validate_point(&Point::new(vec![1.0, 0.5, 0.0, 0.0])).is_err());
        assert!(h.validate_point(&Point::new(vec![-1.0, 0.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn model_constructor_invariants() {
        assert!(ManifoldModel::euclidean(0).is_err());
        assert!(ManifoldModel::circle(-1.0).is_err());
        assert!(ManifoldModel::flat_torus(vec![1.0, 0.0]).is_err());
        assert!(ManifoldModel::dirichlet_interval(f64::NAN).is_err());
        assert!(ManifoldModel::compactified(ManifoldModel::circle(1.0).unwrap()).is_err());
    }

    #[test]
    fn model_string_round_trip() {
        for s in ["euclidean:3", "hyperbolic3", "torus:1,2", "circle:6.5", "dirichlet:3", "compactified:dirichlet:3"] {
            let m: ManifoldModel = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
        assert!("sphere:2".parse::<ManifoldModel>().is_err());
    }

    #[test]
    fn exp_point_examples() {
        let m = ManifoldModel::Hyperbolic3;
        let o = m.origin();
        assert_eq!(m.exp_point(&o, [1.0, 0.0, 0.0], 0.0).unwrap(), o);
        let p = m.exp_point(&o, [1.0, 0.0, 0.0], 1.0).unwrap();
        assert!(close(p.coords()[0], 1f64.cosh(), 1e-15));
        assert!(close(p.coords()[1], 1f64.sinh(), 1e-15));
        assert!(m.exp_point(&o, [1.0, 1.0, 0.0], 1.0).is_err());
        assert!(ManifoldModel::euclidean(3).unwrap().exp_point(&o, [1.0, 0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn project_examples() {
        let cov = CoveringDescriptor::new(ManifoldModel::circle(1.0).unwrap()).unwrap();
        assert_eq!(cov.project_point(&2.5.into()).unwrap(), Point::scalar(0.5));
        let cov2 = CoveringDescriptor::new(ManifoldModel::flat_torus(vec![1.0, 2.0]).unwrap()).unwrap();
        let p = cov2.project_point(&Point::new(vec![-0.25, 3.1])).unwrap();
        assert!(close(p.coords()[0], 0.75, 1e-15) && close(p.coords()[1], 1.1, 1e-15));
        let inside = Point::new(vec![0.3, 1.7]);
        assert_eq!(cov2.project_point(&inside).unwrap(), inside);
    }

    #[test]
    fn lift_examples() {
        let cov = CoveringDescriptor::new(ManifoldModel::circle(1.0).unwrap()).unwrap();
        assert_eq!(cov.lift_point_near(&0.5.into(), &2.4.into()).unwrap(), Point::scalar(2.5));
        assert_eq!(cov.lift_point_near(&0.0.into(), &0.5.into()).unwrap(), Point::scalar(0.0));
        // tie at -0.5 goes to the smaller (negative) coefficient
        assert_eq!(cov.lift_point_near(&0.0.into(), &(-0.5).into()).unwrap(), Point::scalar(-1.0));
    }

    fn random_h3_point(a: f64, b: f64, c: f64) -> Point {
        Point::hyperboloid([a, b, c])
    }

    fn unit(a: f64, b: f64) -> [f64; 3] {
        // a in [-1,1] is cos(theta), b is the azimuth
        let s = (1.0 - a * a).sqrt();
        [s * b.cos(), s * b.sin(), a]
    }

    proptest! {
        #[test]
        fn exp_point_distance_round_trip(
            a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64,
            ct in -1.0..1.0f64, phi in 0.0..std::f64::consts::TAU,
            r in 0.0..6.0f64,
        ) {
            let m = ManifoldModel::Hyperbolic3;
            let base = random_h3_point(a, b, c);
            let q = m.exp_point(&base, unit(ct, phi), r).unwrap();
            prop_assert!(m.validate_point(&q).is_ok());
            let d = m.distance(&base, &q).unwrap();
            prop_assert!((d - r).abs() <= 1e-10 * r.max(1.0), "d={} r={}", d, r);
            let q2 = m.exp_point(&base, unit(ct, phi), 2.0).unwrap();
            prop_assert!((m.distance(&base, &q2).unwrap() - 2.0).abs() <= 1e-10);
        }

        #[test]
        fn h3_symmetry_and_triangle(
            p in proptest::array::uniform9(-2.0..2.0f64),
        ) {
            let m = ManifoldModel::Hyperbolic3;
            let x = random_h3_point(p[0], p[1], p[2]);
            let y = random_h3_point(p[3], p[4], p[5]);
            let z = random_h3_point(p[6], p[7], p[8]);
            let dxy = m.distance(&x, &y).unwrap();
            prop_assert_eq!(dxy, m.distance(&y, &x).unwrap());
            let dyz = m.distance(&y, &z).unwrap();
            let dxz = m.distance(&x, &z).unwrap();
            prop_assert!(dxz <= dxy + dyz + 1e-12);
        }

        #[test]
        fn torus_symmetry_and_triangle(
            p in proptest::array::uniform6(0.0..1.0f64),
        ) {
            let m = ManifoldModel::flat_torus(vec![1.0, 2.5]).unwrap();
            let x = Point::new(vec![p[0], 2.5 * p[1]]);
            let y = Point::new(vec![p[2], 2.5 * p[3]]);
            let z = Point::new(vec![p[4], 2.5 * p[5]]);
            let dxy = m.distance(&x, &y).unwrap();
            prop_assert_eq!(dxy, m.distance(&y, &x).unwrap());
            prop_assert!(m.distance(&x, &z).unwrap() <= dxy + m.distance(&y, &z).unwrap() + 1e-12);
        }

        #[test]
        fn project_lift_round_trip(x in 0.0..1.0f64, anchor in -50.0..50.0f64) {
            // dyadic period: projection of the lift is bit-exact
            let cov = CoveringDescriptor::new(ManifoldModel::circle(1.0).unwrap()).unwrap();
            let lifted = cov.lift_point_near(&x.into(), &anchor.into()).unwrap();
            prop_assert!((lifted.coords()[0] - anchor).abs() <= 0.5);
            let back = cov.project_point(&lifted).unwrap();
            prop_assert!((back.coords()[0] - x).abs() <= 1e-13);
        }

        #[test]
        fn lift_of_projection_is_deck_translate(v in -40.0..40.0f64, w in -40.0..40.0f64) {
            let cov = CoveringDescriptor::new(ManifoldModel::flat_torus(vec![1.0, 3.0]).unwrap()).unwrap();
            let xt = Point::new(vec![v, w]);
            let base = cov.project_point(&xt).unwrap();
            let lifted = cov.lift_point_near(&base, &xt).unwrap();
            for (a, b) in lifted.coords().iter().zip(xt.coords()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            let anywhere = cov.lift_point_near(&base, &Point::new(vec![0.0, 0.0])).unwrap();
            for ((a, b), l) in anywhere.coords().iter().zip(xt.coords()).zip([1.0, 3.0]) {
                let k = (a - b) / l;
                prop_assert!((k - k.round()).abs() <= 1e-9);
            }
        }
    }
}
