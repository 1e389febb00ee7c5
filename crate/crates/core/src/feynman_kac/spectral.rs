use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::Potential;
use crate::error::{Error, Result};
use crate::heat_kernel::check_time;
use crate::manifold::{reduce, ManifoldModel};

/// `exp(t A)` for the second-order finite-difference discretization `A` of
/// `Delta - V` on a uniform 1D grid. Applied to samples of `g` it returns
/// samples of `e^{t(Delta - V)} g`; entries divided by the spacing
/// approximate kernel values.
#[derive(Debug, Clone)]
pub struct SemigroupMatrix {
    nodes: Vec<f64>,
    spacing: f64,
    periodic: Option<f64>,
    matrix: DMatrix<f64>,
}

/// Circle nodes are `i L / M` for `i < M`; Dirichlet nodes are the `M`
/// interior points `i L / (M + 1)` with zero boundary values.
pub fn spectral_oracle(model: &ManifoldModel, m: usize, v: &Potential, t: f64) -> Result<SemigroupMatrix> {
    check_time(t)?;
    if m < 16 {
        return Err(Error::param("grid", format!("needs at least 16 points, got {m}")));
    }
    let (nodes, spacing, periodic) = match *model {
        ManifoldModel::Circle { circumference: l } => {
            let h = l / m as f64;
            ((0..m).map(|i| i as f64 * h).collect::<Vec<_>>(), h, Some(l))
        }
        ManifoldModel::DirichletInterval { length: l } => {
            let h = l / (m + 1) as f64;
            ((1..=m).map(|i| i as f64 * h).collect(), h, None)
        }
        ref other => return Err(Error::UnsupportedModel(format!("spectral oracle on {other}"))),
    };

    let inv_h2 = 1.0 / (spacing * spacing);
    let mut a = DMatrix::<f64>::zeros(m, m);
    for (i, x) in nodes.iter().enumerate() {
        a[(i, i)] = -2.0 * inv_h2 - v.eval_coords(&[*x])?;
        if i + 1 < m {
            a[(i, i + 1)] = inv_h2;
            a[(i + 1, i)] = inv_h2;
        }
    }
    if periodic.is_some() {
        a[(0, m - 1)] = inv_h2;
        a[(m - 1, 0)] = inv_h2;
    }

    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen(format!("symmetric eigensolver did not converge (M = {m})")))?;
    if eig.eigenvalues.iter().any(|l| !l.is_finite()) {
        return Err(Error::Eigen("non-finite eigenvalue".into()));
    }
    let growth = DVector::from_iterator(m, eig.eigenvalues.iter().map(|l| (t * l).exp()));
    let q = &eig.eigenvectors;
    let scaled = DMatrix::from_fn(m, m, |i, j| q[(i, j)] * growth[j]);
    let e = scaled * q.transpose();
    let matrix = (&e + e.transpose()) * 0.5;
    Ok(SemigroupMatrix {
        nodes,
        spacing,
        periodic,
        matrix,
    })
}

impl SemigroupMatrix {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Samples of `e^{t(Delta - V)} g` at the nodes.
    pub fn apply(&self, g: &[f64]) -> Result<Vec<f64>> {
        if g.len() != self.nodes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.nodes.len(),
                got: g.len(),
            });
        }
        Ok((&self.matrix * DVector::from_column_slice(g)).iter().copied().collect())
    }

    pub fn apply_fn(&self, g: impl Fn(f64) -> f64) -> Vec<f64> {
        let samples: Vec<f64> = self.nodes.iter().map(|x| g(*x)).collect();
        self.apply(&samples).expect("matching length")
    }

    /// `(e^{t(Delta - V)} 1)(x_i)`.
    pub fn row_sum(&self, i: usize) -> f64 {
        self.matrix.row(i).sum()
    }

    /// Approximate `q_t(x_i, x_j)`.
    pub fn kernel(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)] / self.spacing
    }

    /// Index of the node at `x`, if `x` is one (up to rounding).
    pub fn node_index(&self, x: f64) -> Option<usize> {
        let x = match self.periodic {
            Some(l) => reduce(x, l),
            None => x,
        };
        let offset = if self.periodic.is_some() { 0.0 } else { 1.0 };
        let s = x / self.spacing - offset;
        let i = s.round();
        if (s - i).abs() < 1e-9 && i >= 0.0 && (i as usize) < self.nodes.len() {
            Some(i as usize)
        } else {
            None
        }
    }

    /// Linear interpolation of nodal values at `x`; periodic on the circle,
    /// zero at the Dirichlet endpoints.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        let m = self.nodes.len();
        match self.periodic {
            Some(l) => {
                let s = reduce(x, l) / self.spacing;
                let i = (s.floor() as usize).min(m - 1);
                let f = s - i as f64;
                (1.0 - f) * values[i] + f * values[(i + 1) % m]
            }
            None => {
                // extended nodes 0..=M+1 with zero boundary values
                let s = x / self.spacing;
                if !(s > 0.0 && s < (m + 1) as f64) {
                    return 0.0;
                }
                let i = s.floor() as usize;
                let f = s - i as f64;
                let at = |k: usize| if k == 0 || k > m { 0.0 } else { values[k - 1] };
                (1.0 - f) * at(i) + f * at(i + 1)
            }
        }
    }

    /// `(e^{t(Delta - V)} g)(x)` by interpolating the nodal result.
    pub fn value_at(&self, g: impl Fn(f64) -> f64, x: f64) -> f64 {
        self.interpolate(&self.apply_fn(g), x)
    }

    /// Approximate `q_t(x, y)` by bilinear interpolation of kernel entries.
    pub fn kernel_at(&self, x: f64, y: f64) -> f64 {
        let m = self.nodes.len();
        let columns: Vec<f64> = (0..m)
            .map(|j| {
                let col: Vec<f64> = (0..m).map(|i| self.kernel(i, j)).collect();
                self.interpolate(&col, x)
            })
            .collect();
        self.interpolate(&columns, y)
    }
}
