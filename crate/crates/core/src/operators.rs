//! Discrete Kirchhoff Laplacian and the linearization operators `L+`, `L-`.
//!
//! The negative Laplacian is assembled as `A = W^{-1} S`, where `S` is the
//! stiffness matrix of the discretization graph (every `h`-interval
//! contributes the symmetric pair `±1/h`) and `W` holds the trapezoid
//! weights. Interior rows reduce to the standard 3-point second difference;
//! each junction row balances the three one-sided fluxes over its `3h/2`
//! control volume, which enforces the Kirchhoff derivative condition and
//! keeps `A` self-adjoint in the weighted inner product. Constants are
//! exactly harmonic.
//!
//! Eigenvalues are extracted from the weighted symmetrization
//! `B = W^{1/2} A W^{-1/2}` with a dense symmetric solver; at desk scale
//! (`D` up to a few thousand) this is robust and fast enough.

use crate::grid::{DumbbellGrid, GraphFunction, GridError};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("eigenvalue iteration failed to converge (dim {dim}, requested {requested})")]
    ConvergenceFailure { dim: usize, requested: usize },
    #[error("requested {requested} eigenpairs but the operator has dimension {dim}")]
    TooManyEigenpairs { requested: usize, dim: usize },
}

/// A dense `D x D` operator on grid functions.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    grid: DumbbellGrid,
    matrix: DMatrix<f64>,
}

impl DiscreteOperator {
    pub fn grid(&self) -> &DumbbellGrid {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn apply(&self, u: &GraphFunction) -> Result<GraphFunction, OperatorError> {
        if u.grid() != &self.grid {
            return Err(GridError::GridMismatch.into());
        }
        let v = &self.matrix * u.values();
        Ok(GraphFunction::new(self.grid.clone(), v).expect("dimensions agree"))
    }

    /// Adds `c_i` to the diagonal, node by node.
    fn add_diagonal(&mut self, c: impl Fn(usize) -> f64) {
        for i in 0..self.grid.dof() {
            self.matrix[(i, i)] += c(i);
        }
    }

    /// `B = W^{1/2} A W^{-1/2}` split into its symmetric part and the
    /// maximum absolute entry of the antisymmetric remainder.
    pub fn weighted_symmetrization(&self) -> (DMatrix<f64>, f64) {
        let d = self.grid.dof();
        let sw: Vec<f64> = (0..d).map(|i| self.grid.weight(i).sqrt()).collect();
        let mut b = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                b[(i, j)] = self.matrix[(i, j)] * sw[i] / sw[j];
            }
        }
        let mut asym: f64 = 0.0;
        let mut sym = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                sym[(i, j)] = 0.5 * (b[(i, j)] + b[(j, i)]);
                asym = asym.max((b[(i, j)] - b[(j, i)]).abs());
            }
        }
        (sym, asym)
    }
}

/// Assembles the negative Laplacian `-Delta` with Kirchhoff junction rows.
pub fn build_laplacian(grid: &DumbbellGrid) -> DiscreteOperator {
    let d = grid.dof();
    let h = grid.h();
    let mut stiffness = DMatrix::zeros(d, d);
    for (a, b) in grid.intervals() {
        stiffness[(a, a)] += 1.0 / h;
        stiffness[(b, b)] += 1.0 / h;
        stiffness[(a, b)] -= 1.0 / h;
        stiffness[(b, a)] -= 1.0 / h;
    }
    for i in 0..d {
        let wi = grid.weight(i);
        for j in 0..d {
            stiffness[(i, j)] /= wi;
        }
    }
    DiscreteOperator { grid: grid.clone(), matrix: stiffness }
}

/// `L+ = -Delta - Lambda - 6 Phi^2`.
pub fn build_l_plus(
    grid: &DumbbellGrid,
    phi: &GraphFunction,
    lambda: f64,
) -> Result<DiscreteOperator, OperatorError> {
    if phi.grid() != grid {
        return Err(GridError::GridMismatch.into());
    }
    let mut op = build_laplacian(grid);
    op.add_diagonal(|i| -lambda - 6.0 * phi.values()[i].powi(2));
    Ok(op)
}

/// `L- = -Delta - Lambda - 2 Phi^2`.
pub fn build_l_minus(
    grid: &DumbbellGrid,
    phi: &GraphFunction,
    lambda: f64,
) -> Result<DiscreteOperator, OperatorError> {
    if phi.grid() != grid {
        return Err(GridError::GridMismatch.into());
    }
    let mut op = build_laplacian(grid);
    op.add_diagonal(|i| -lambda - 2.0 * phi.values()[i].powi(2));
    Ok(op)
}

/// The `count` algebraically smallest eigenvalues with L2-normalized
/// eigenvectors, computed on the weighted symmetrization of the operator.
pub fn eigen_smallest(
    op: &DiscreteOperator,
    count: usize,
) -> Result<Vec<(f64, GraphFunction)>, OperatorError> {
    let d = op.grid.dof();
    if count > d {
        return Err(OperatorError::TooManyEigenpairs { requested: count, dim: d });
    }
    let (sym, _) = op.weighted_symmetrization();
    let eig = sym
        .symmetric_eigen_try(1e-14, 0)
        .ok_or(OperatorError::ConvergenceFailure { dim: d, requested: count })?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut out = Vec::with_capacity(count);
    for &idx in order.iter().take(count) {
        let mut v = DVector::zeros(d);
        for i in 0..d {
            v[i] = eig.eigenvectors[(i, idx)] / op.grid.weight(i).sqrt();
        }
        // fix the sign so the largest-magnitude component is positive
        let imax = v.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap().0;
        if v[imax] < 0.0 {
            v.neg_mut();
        }
        let mut u = GraphFunction::new(op.grid.clone(), v).expect("dimensions agree");
        let n = u.norm_l2();
        if n > 0.0 {
            *u.values_mut() /= n;
        }
        out.push((eig.eigenvalues[idx], u));
    }
    Ok(out)
}

/// All eigenvalues of the weighted symmetrization, ascending.
pub fn eigenvalues(op: &DiscreteOperator) -> Result<Vec<f64>, OperatorError> {
    let d = op.grid.dof();
    let (sym, _) = op.weighted_symmetrization();
    let eig = sym
        .symmetric_eigen_try(1e-14, 0)
        .ok_or(OperatorError::ConvergenceFailure { dim: d, requested: d })?;
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Number of eigenvalues below `-1e-8 * max(1, |scale|)`; the threshold
/// absorbs the discretization noise floor around zero.
pub fn negative_eigenvalue_count(
    op: &DiscreteOperator,
    scale: f64,
) -> Result<usize, OperatorError> {
    let thresh = -1e-8 * scale.abs().max(1.0);
    Ok(eigenvalues(op)?.iter().filter(|&&v| v < thresh).count())
}

/// Discrete Kirchhoff flux defects at the two junctions, evaluated with the
/// one-sided second-order derivative stencils. Zero (to `O(h^2)`) for
/// functions compatible with the derivative condition.
pub fn kirchhoff_flux_defect(u: &GraphFunction) -> (f64, f64) {
    let g = u.grid();
    let v = u.values();
    let h = g.h();
    let jl = g.junction_left();
    let jr = g.junction_right();
    let rm: Vec<usize> = g.ring_minus_interior().collect();
    let rp: Vec<usize> = g.ring_plus_interior().collect();
    let n = g.n();

    let fwd = |u0: f64, u1: f64, u2: f64| (-u2 + 4.0 * u1 - 3.0 * u0) / (2.0 * h);
    let bwd = |u0: f64, u1: f64, u2: f64| (u2 - 4.0 * u1 + 3.0 * u0) / (2.0 * h);

    // at x = -L: u-'(-L) - u-'(-L-2pi) = u0'(-L)
    let du_minus_in = bwd(v[jl], v[rm[n - 2]], v[rm[n - 3]]);
    let du_minus_out = fwd(v[jl], v[rm[0]], v[rm[1]]);
    let du_seg_left = fwd(v[jl], v[jl + 1], v[jl + 2]);
    let defect_left = du_minus_in - du_minus_out - du_seg_left;

    // at x = +L: u+'(L) - u+'(L+2pi) = u0'(L)
    let du_plus_out = fwd(v[jr], v[rp[0]], v[rp[1]]);
    let du_plus_in = bwd(v[jr], v[rp[n - 2]], v[rp[n - 3]]);
    let du_seg_right = bwd(v[jr], v[jr - 1], v[jr - 2]);
    let defect_right = du_plus_out - du_plus_in - du_seg_right;

    (defect_left, defect_right)
}

trait SymmetricEigenExt {
    fn symmetric_eigen_try(self, eps: f64, max_niter: usize)
        -> Option<nalgebra::linalg::SymmetricEigen<f64, nalgebra::Dyn>>;
}

impl SymmetricEigenExt for DMatrix<f64> {
    fn symmetric_eigen_try(
        self,
        eps: f64,
        max_niter: usize,
    ) -> Option<nalgebra::linalg::SymmetricEigen<f64, nalgebra::Dyn>> {
        nalgebra::linalg::SymmetricEigen::try_new(self, eps, max_niter)
    }
}
