//! Nonlinear solvers and branch continuation for the stationary equation
//! `-Delta Phi - 2 Phi^3 = Lambda Phi`.
//!
//! The Petviashvili iteration lands on a branch from a rough seed; Newton
//! polishes and continues it. All inner products are quadrature-weighted so
//! fixed points, Newton solutions and discrete energy critical points agree.

use crate::grid::{DumbbellGrid, GraphFunction, GridError};
use crate::operators::{self, DiscreteOperator, OperatorError};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("lambda must be negative, got {0}")]
    InvalidLambda(f64),
    #[error("seed function is identically zero")]
    ZeroSeed,
    #[error("iterate collapsed to zero at iteration {iteration}")]
    CollapseToZero { iteration: usize },
    #[error(
        "no convergence after {iterations} iterations \
         (last multiplier {last_multiplier:?}, last step {last_delta:.3e})"
    )]
    MaxIterExceeded {
        iterations: usize,
        last_multiplier: Option<f64>,
        last_delta: f64,
        /// The unconverged iterate, for post-mortem dumps.
        last_iterate: Option<Box<GraphFunction>>,
    },
    #[error("Jacobian is numerically singular at lambda = {lambda} (iteration {iteration})")]
    SingularJacobian { lambda: f64, iteration: usize },
    #[error("Newton iterate diverged at iteration {iteration}")]
    Diverged { iteration: usize },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Solution family labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateTag {
    Constant,
    Symmetric,
    Asymmetric,
    Other,
}

impl std::fmt::Display for StateTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            StateTag::Constant => "constant",
            StateTag::Symmetric => "symmetric",
            StateTag::Asymmetric => "asymmetric",
            StateTag::Other => "other",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for StateTag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "constant" => Ok(StateTag::Constant),
            "symmetric" => Ok(StateTag::Symmetric),
            "asymmetric" => Ok(StateTag::Asymmetric),
            "other" => Ok(StateTag::Other),
            other => Err(format!("unknown state tag `{other}`")),
        }
    }
}

/// First eigenvalues of the linearization operators at a state.
#[derive(Debug, Clone, Copy)]
pub struct SpectrumHead {
    /// Three smallest eigenvalues of `L+`.
    pub lplus: [f64; 3],
    /// Smallest eigenvalue of `L-`; zero (to solver accuracy) at any
    /// converged positive state since `L- Phi = 0`.
    pub lminus_min: f64,
}

/// A converged solution record of the stationary equation.
#[derive(Debug, Clone)]
pub struct StationaryState {
    phi: GraphFunction,
    lambda: f64,
    q: f64,
    e: f64,
    residual_norm: f64,
    spectrum_head: Option<SpectrumHead>,
    tag: StateTag,
}

impl StationaryState {
    /// Packages a profile into a state, computing charge, energy and the
    /// stationary residual. The linearization spectrum is filled on demand.
    pub fn from_profile(phi: GraphFunction, lambda: f64) -> Self {
        let lap = operators::build_laplacian(phi.grid());
        Self::from_profile_with(&lap, phi, lambda)
    }

    fn from_profile_with(lap: &DiscreteOperator, phi: GraphFunction, lambda: f64) -> Self {
        let q = charge(&phi);
        let e = energy(&phi);
        let residual_norm = residual(lap, &phi, lambda).norm_l2();
        let tag = classify_profile(&phi);
        Self { phi, lambda, q, e, residual_norm, spectrum_head: None, tag }
    }

    pub fn grid(&self) -> &DumbbellGrid {
        self.phi.grid()
    }

    pub fn phi(&self) -> &GraphFunction {
        &self.phi
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn charge(&self) -> f64 {
        self.q
    }

    pub fn energy(&self) -> f64 {
        self.e
    }

    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    pub fn tag(&self) -> StateTag {
        self.tag
    }

    pub fn spectrum_head(&self) -> Option<&SpectrumHead> {
        self.spectrum_head.as_ref()
    }

    /// Computes the `L+` head and the smallest `L-` eigenvalue if missing.
    pub fn ensure_spectrum_head(&mut self) -> Result<&SpectrumHead, SolveError> {
        if self.spectrum_head.is_none() {
            let grid = self.phi.grid().clone();
            let lplus = operators::build_l_plus(&grid, &self.phi, self.lambda)?;
            let lminus = operators::build_l_minus(&grid, &self.phi, self.lambda)?;
            let lp = operators::eigen_smallest(&lplus, 3)?;
            let lm = operators::eigen_smallest(&lminus, 1)?;
            self.spectrum_head = Some(SpectrumHead {
                lplus: [lp[0].0, lp[1].0, lp[2].0],
                lminus_min: lm[0].0,
            });
        }
        Ok(self.spectrum_head.as_ref().expect("just filled"))
    }
}

/// Charge `Q = int |Phi|^2` (trapezoid quadrature).
pub fn charge(phi: &GraphFunction) -> f64 {
    phi.inner(phi)
}

/// Energy `E = int (|Phi'|^2 - |Phi|^4)`.
///
/// The derivative term is the Dirichlet sum over grid intervals, which is
/// exactly the quadratic form of the discrete Laplacian; this keeps the
/// discrete energy gradient equal to twice the stationary residual.
pub fn energy(phi: &GraphFunction) -> f64 {
    let g = phi.grid();
    let v = phi.values();
    let h = g.h();
    let mut dirichlet = 0.0;
    for (a, b) in g.intervals() {
        let d = v[a] - v[b];
        dirichlet += d * d / h;
    }
    let quartic: f64 = (0..g.dof()).map(|i| g.weight(i) * v[i].powi(4)).sum();
    dirichlet - quartic
}

/// Stationary residual `-Delta Phi - 2 Phi^3 - Lambda Phi` as a grid function.
pub fn residual(lap: &DiscreteOperator, phi: &GraphFunction, lambda: f64) -> GraphFunction {
    let mut r = lap.apply(phi).expect("same grid");
    let rv = r.values_mut();
    let v = phi.values();
    for i in 0..v.len() {
        rv[i] -= 2.0 * v[i].powi(3) + lambda * v[i];
    }
    r
}

/// Classifies a converged profile by its symmetry.
pub fn classify_profile(phi: &GraphFunction) -> StateTag {
    let vmax = phi.values().max();
    let vmin = phi.values().min();
    let sup = phi.norm_sup();
    if sup == 0.0 || vmax - vmin < 1e-6 * sup {
        return StateTag::Constant;
    }
    let mut diff = phi.reflected();
    *diff.values_mut() -= phi.values();
    if diff.norm_l2() < 1e-6 * phi.norm_l2() {
        return StateTag::Symmetric;
    }
    let (minus, plus) = phi.ring_masses();
    let q = charge(phi);
    if (plus - minus).abs() / q > 0.1 {
        return StateTag::Asymmetric;
    }
    StateTag::Other
}

#[derive(Debug, Clone)]
pub struct PetviashviliOptions {
    /// Power of the normalization multiplier.
    pub gamma: f64,
    /// Sup-norm tolerance on successive iterates.
    pub tol: f64,
    pub max_iter: usize,
    /// Fill the linearization spectrum of the returned state.
    pub compute_spectrum: bool,
}

impl Default for PetviashviliOptions {
    fn default() -> Self {
        Self { gamma: 1.5, tol: 1e-14, max_iter: 2000, compute_spectrum: false }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOptions {
    /// Residual tolerance, scaled by `max(1, |lambda|)`.
    pub tol: f64,
    pub max_iter: usize,
    pub compute_spectrum: bool,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 50, compute_spectrum: false }
    }
}

fn weighted_dot(grid: &DumbbellGrid, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (0..grid.dof()).map(|i| grid.weight(i) * a[i] * b[i]).sum()
}

/// Petviashvili fixed-point iteration
/// `u_{n+1} = M[u_n]^gamma (|Lambda| - Delta)^{-1} (2 u_n^3)` with
/// `M[u] = <(|Lambda| - Delta) u, u> / (2 ||u||_{L^4}^4)`.
///
/// Converges when successive iterates differ by less than `tol` in sup norm.
/// If the iterate stagnates at the floating-point floor while its stationary
/// residual already satisfies `< 1e-9 |Lambda|`, the state is accepted.
pub fn petviashvili(
    seed: &GraphFunction,
    lambda: f64,
    opts: &PetviashviliOptions,
) -> Result<StationaryState, SolveError> {
    petviashvili_with_trace(seed, lambda, opts).map(|(s, _)| s)
}

/// Same as [`petviashvili`] but also returns the multiplier history
/// `M[u_0], M[u_1], ...`.
pub fn petviashvili_with_trace(
    seed: &GraphFunction,
    lambda: f64,
    opts: &PetviashviliOptions,
) -> Result<(StationaryState, Vec<f64>), SolveError> {
    if lambda >= 0.0 {
        return Err(SolveError::InvalidLambda(lambda));
    }
    if seed.norm_sup() == 0.0 {
        return Err(SolveError::ZeroSeed);
    }
    let grid = seed.grid().clone();
    let lap = operators::build_laplacian(&grid);
    let d = grid.dof();
    let mut shifted: DMatrix<f64> = lap.matrix().clone();
    for i in 0..d {
        shifted[(i, i)] += lambda.abs();
    }
    let helmholtz = shifted.clone();
    let lu = nalgebra::linalg::LU::new(shifted);

    let mut u = seed.values().clone();
    let mut best_delta = f64::INFINITY;
    let mut best_iter = 0usize;
    let mut multipliers = Vec::new();
    let mut last_delta = f64::INFINITY;
    for it in 0..opts.max_iter {
        if u.amax() < 1e-12 {
            return Err(SolveError::CollapseToZero { iteration: it });
        }
        let au = &helmholtz * &u;
        let numerator = weighted_dot(&grid, &au, &u);
        let l4: f64 = (0..d).map(|i| grid.weight(i) * u[i].powi(4)).sum();
        let multiplier = numerator / (2.0 * l4);
        multipliers.push(multiplier);
        let rhs = DVector::from_fn(d, |i, _| 2.0 * u[i].powi(3));
        let mut next = lu.solve(&rhs).ok_or(SolveError::SingularJacobian {
            lambda,
            iteration: it,
        })?;
        next *= multiplier.powf(opts.gamma);
        let delta = (&next - &u).amax();
        u = next;
        last_delta = delta;
        if delta < best_delta {
            best_delta = delta;
            best_iter = it;
        }
        if delta <= opts.tol {
            let state = finish_state(&lap, &grid, u, lambda, opts.compute_spectrum)?;
            return Ok((state, multipliers));
        }
        // stagnation at the roundoff floor: accept if the residual contract
        // is already met
        if it - best_iter >= 75 {
            let phi = GraphFunction::new(grid.clone(), u.clone()).expect("dims");
            if residual(&lap, &phi, lambda).norm_l2() < 1e-9 * lambda.abs() {
                let state = finish_state(&lap, &grid, u, lambda, opts.compute_spectrum)?;
                return Ok((state, multipliers));
            }
            best_iter = it; // keep waiting until max_iter
        }
    }
    Err(SolveError::MaxIterExceeded {
        iterations: opts.max_iter,
        last_multiplier: multipliers.last().copied(),
        last_delta,
        last_iterate: Some(Box::new(GraphFunction::new(grid, u).expect("dims"))),
    })
}

fn finish_state(
    lap: &DiscreteOperator,
    grid: &DumbbellGrid,
    u: DVector<f64>,
    lambda: f64,
    compute_spectrum: bool,
) -> Result<StationaryState, SolveError> {
    let phi = GraphFunction::new(grid.clone(), u).expect("dims");
    let mut state = StationaryState::from_profile_with(lap, phi, lambda);
    if compute_spectrum {
        state.ensure_spectrum_head()?;
    }
    Ok(state)
}

/// Newton iteration on `F(Phi) = -Delta Phi - 2 Phi^3 - Lambda Phi` with the
/// Jacobian `L+`. Returns the converged state and the residual history.
pub fn newton_with_history(
    seed: &GraphFunction,
    lambda: f64,
    opts: &NewtonOptions,
) -> Result<(StationaryState, Vec<f64>), SolveError> {
    let grid = seed.grid().clone();
    let lap = operators::build_laplacian(&grid);
    let d = grid.dof();
    let mut u = seed.values().clone();
    let tol = opts.tol * lambda.abs().max(1.0);
    let mut history = Vec::new();
    for it in 0..=opts.max_iter {
        let phi = GraphFunction::new(grid.clone(), u.clone()).expect("dims");
        let res = residual(&lap, &phi, lambda);
        let rn = res.norm_l2();
        history.push(rn);
        if rn <= tol {
            let mut state = StationaryState::from_profile_with(&lap, phi, lambda);
            if opts.compute_spectrum {
                state.ensure_spectrum_head()?;
            }
            return Ok((state, history));
        }
        if it == opts.max_iter {
            break;
        }
        let mut jac = lap.matrix().clone();
        for i in 0..d {
            jac[(i, i)] -= 6.0 * u[i] * u[i] + lambda;
        }
        let lu = nalgebra::linalg::LU::new(jac);
        let du = lu
            .solve(res.values())
            .ok_or(SolveError::SingularJacobian { lambda, iteration: it })?;
        u -= du;
        if !u.amax().is_finite() || u.amax() > 1e12 {
            return Err(SolveError::Diverged { iteration: it });
        }
    }
    Err(SolveError::MaxIterExceeded {
        iterations: opts.max_iter,
        last_multiplier: None,
        last_delta: *history.last().unwrap_or(&f64::NAN),
        last_iterate: Some(Box::new(GraphFunction::new(grid, u).expect("dims"))),
    })
}

pub fn newton(
    seed: &GraphFunction,
    lambda: f64,
    opts: &NewtonOptions,
) -> Result<StationaryState, SolveError> {
    newton_with_history(seed, lambda, opts).map(|(s, _)| s)
}

/// The workflow of the numerical experiments: Petviashvili to 1e-10, then a
/// Newton polish.
pub fn hybrid(
    seed: &GraphFunction,
    lambda: f64,
    petv: &PetviashviliOptions,
    newt: &NewtonOptions,
) -> Result<StationaryState, SolveError> {
    let rough = petviashvili(seed, lambda, &PetviashviliOptions {
        tol: petv.tol.max(1e-10),
        compute_spectrum: false,
        ..petv.clone()
    })?;
    newton(rough.phi(), lambda, newt)
}

/// One row of a continuation table.
#[derive(Debug, Clone, Copy)]
pub struct BranchRow {
    pub lambda: f64,
    pub q: f64,
    pub e: f64,
    /// Second eigenvalue of `L+` at the row state.
    pub lplus_eig2: f64,
    /// Smallest eigenvalue of `L-` at the row state.
    pub lminus_min: f64,
}

/// Why a branch stopped before reaching the requested end point.
#[derive(Debug, Clone)]
pub struct BranchEnd {
    pub lambda: f64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct BranchMeta {
    pub l: f64,
    pub n: usize,
    pub lambda_start: f64,
    pub lambda_end: f64,
    pub steps: usize,
    pub end: Option<BranchEnd>,
}

/// Natural-parameter continuation record of one solution family.
#[derive(Debug, Clone)]
pub struct BranchTable {
    pub family: StateTag,
    pub rows: Vec<BranchRow>,
    pub meta: BranchMeta,
}

#[derive(Debug, Clone, Default)]
pub struct ContinuationOptions {
    pub newton: NewtonOptions,
    /// Skip the per-row eigenvalue extraction (rows carry NaN instead).
    pub skip_row_spectrum: bool,
}

/// Continues a converged state in `Lambda` with uniform nominal steps,
/// Newton-polishing each step from the previous profile. On Newton failure
/// the step is halved down to 1/8 of nominal; two failures at the minimum
/// step record a `BranchEnd` marker and stop the branch early.
pub fn continue_branch(
    seed: &StationaryState,
    lambda_end: f64,
    steps: usize,
    opts: &ContinuationOptions,
) -> Result<BranchTable, SolveError> {
    let grid = seed.grid().clone();
    let lambda_start = seed.lambda();
    let nominal = (lambda_end - lambda_start) / steps.max(1) as f64;
    let min_step = nominal / 8.0;

    let mut rows = Vec::with_capacity(steps + 1);
    let mut end = None;
    let mut current = seed.clone();
    push_row(&mut rows, &mut current, opts)?;

    let mut lambda = lambda_start;
    let mut step = nominal;
    let mut failures_at_min = 0usize;
    while (lambda_end - lambda).abs() > 1e-14 * lambda_end.abs().max(1.0) {
        let mut next_lambda = lambda + step;
        // clamp the final step onto the end point
        if (next_lambda - lambda_start).abs() >= (lambda_end - lambda_start).abs() {
            next_lambda = lambda_end;
        }
        match newton(current.phi(), next_lambda, &opts.newton) {
            Ok(state) => {
                lambda = next_lambda;
                current = state;
                push_row(&mut rows, &mut current, opts)?;
                step = nominal;
                failures_at_min = 0;
            }
            Err(err) => {
                if step.abs() > min_step.abs() * 1.001 {
                    step *= 0.5;
                    if step.abs() < min_step.abs() {
                        step = min_step;
                    }
                } else {
                    failures_at_min += 1;
                    if failures_at_min >= 2 {
                        end = Some(BranchEnd {
                            lambda: next_lambda,
                            reason: err.to_string(),
                        });
                        break;
                    }
                }
            }
        }
    }

    rows.sort_by(|a, b| b.lambda.total_cmp(&a.lambda));
    Ok(BranchTable {
        family: seed.tag(),
        rows,
        meta: BranchMeta {
            l: grid.l(),
            n: grid.n(),
            lambda_start,
            lambda_end,
            steps,
            end,
        },
    })
}

fn push_row(
    rows: &mut Vec<BranchRow>,
    state: &mut StationaryState,
    opts: &ContinuationOptions,
) -> Result<(), SolveError> {
    let (eig2, lmin) = if opts.skip_row_spectrum {
        (f64::NAN, f64::NAN)
    } else {
        let head = state.ensure_spectrum_head()?;
        (head.lplus[1], head.lminus_min)
    };
    rows.push(BranchRow {
        lambda: state.lambda(),
        q: state.charge(),
        e: state.energy(),
        lplus_eig2: eig2,
        lminus_min: lmin,
    });
    Ok(())
}

/// Gaussian seed of width `|Lambda|^{-1/2}` and height `|Lambda|^{1/2}`
/// centered on the segment midpoint or a ring midpoint.
pub fn gaussian_seed(
    grid: &DumbbellGrid,
    lambda: f64,
    center: SeedCenter,
) -> Result<GraphFunction, SolveError> {
    if lambda >= 0.0 {
        return Err(SolveError::InvalidLambda(lambda));
    }
    let mu = lambda.abs().sqrt();
    let c = match center {
        SeedCenter::Segment => 0.0,
        SeedCenter::RingPlus => grid.l() + std::f64::consts::PI,
    };
    Ok(GraphFunction::sample(grid, |_, x| {
        mu * (-0.5 * (x - c).powi(2) * lambda.abs()).exp()
    })?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedCenter {
    Segment,
    RingPlus,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closedform;
    use std::f64::consts::PI;

    #[test]
    fn charge_and_energy_of_constant() {
        let g = DumbbellGrid::new(PI / 2.0, 32).unwrap();
        let one = GraphFunction::constant(&g, 1.0);
        assert!((charge(&one) - 5.0 * PI).abs() < 1e-10);
        assert!((energy(&one) + 5.0 * PI).abs() < 1e-10);
        let zero = GraphFunction::zeros(&g);
        assert_eq!(charge(&zero), 0.0);
        assert_eq!(energy(&zero), 0.0);
    }

    #[test]
    fn petviashvili_fixed_point_at_constant_solution() {
        let g = DumbbellGrid::new(PI / 2.0, 16).unwrap();
        let lambda = -2.0_f64;
        let p = (lambda.abs() / 2.0_f64).sqrt();
        let seed = GraphFunction::constant(&g, p);
        let (state, multipliers) =
            petviashvili_with_trace(&seed, lambda, &PetviashviliOptions::default()).unwrap();
        assert_eq!(state.tag(), StateTag::Constant);
        assert!((state.phi().values()[0] - p).abs() < 1e-12);
        assert!(state.residual_norm() < 1e-9 * lambda.abs());
        // exact fixed point: M = 1 and convergence in one application
        assert!(multipliers.len() <= 2, "{multipliers:?}");
        assert!((multipliers[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn petviashvili_rejects_bad_input() {
        let g = DumbbellGrid::new(PI, 8).unwrap();
        let zero = GraphFunction::zeros(&g);
        assert!(matches!(
            petviashvili(&zero, -1.0, &PetviashviliOptions::default()),
            Err(SolveError::ZeroSeed)
        ));
        let one = GraphFunction::constant(&g, 1.0);
        assert!(matches!(
            petviashvili(&one, 1.0, &PetviashviliOptions::default()),
            Err(SolveError::InvalidLambda(_))
        ));
    }

    #[test]
    fn segment_seed_converges_to_symmetric_soliton() {
        let g = DumbbellGrid::new(PI / 2.0, 64).unwrap();
        let lambda = -10.0;
        let seed = gaussian_seed(&g, lambda, SeedCenter::Segment).unwrap();
        let state = petviashvili(&seed, lambda, &PetviashviliOptions {
            tol: 1e-13,
            max_iter: 5000,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(state.tag(), StateTag::Symmetric);
        let mu = 10.0_f64.sqrt();
        let peak = state.phi().values().max();
        assert!((peak - mu).abs() / mu < 0.02, "peak {peak}");
        // peak sits at x = 0
        let mid = g.junction_left() + g.m() / 2;
        assert_eq!(state.phi().values()[mid], peak);
        assert!((state.charge() - 2.0 * mu).abs() / (2.0 * mu) < 0.02);
    }

    #[test]
    fn ring_seed_converges_to_asymmetric_soliton() {
        let g = DumbbellGrid::new(PI / 2.0, 64).unwrap();
        let lambda = -10.0;
        let seed = gaussian_seed(&g, lambda, SeedCenter::RingPlus).unwrap();
        let state = petviashvili(&seed, lambda, &PetviashviliOptions {
            tol: 1e-13,
            max_iter: 5000,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(state.tag(), StateTag::Asymmetric);
        // peak at the ring midpoint x = L + pi
        let values = state.phi().values();
        let (imax, _) = values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        let (_, x) = g.node(imax);
        assert!((x - (g.l() + PI)).abs() < g.h() / 2.0);
    }

    #[test]
    fn petviashvili_multiplier_tends_to_one_monotonically() {
        // the last iterations of a convergent run push M[u] -> 1
        let g = DumbbellGrid::new(PI / 2.0, 32).unwrap();
        let lambda = -5.0;
        let seed = gaussian_seed(&g, lambda, SeedCenter::Segment).unwrap();
        let (_, multipliers) = petviashvili_with_trace(&seed, lambda, &PetviashviliOptions {
            tol: 1e-13,
            max_iter: 3000,
            ..Default::default()
        })
        .unwrap();
        assert!(multipliers.len() >= 10);
        let tail = &multipliers[multipliers.len() - 5..];
        for w in tail.windows(2) {
            assert!((w[1] - 1.0).abs() <= (w[0] - 1.0).abs() + 1e-13, "{tail:?}");
        }
        assert!((tail[4] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn newton_polishes_and_converges_quadratically() {
        let g = DumbbellGrid::new(PI / 2.0, 64).unwrap();
        let lambda = -10.0;
        let seed = gaussian_seed(&g, lambda, SeedCenter::Segment).unwrap();
        let rough = petviashvili(&seed, lambda, &PetviashviliOptions {
            tol: 1e-2,
            max_iter: 2000,
            ..Default::default()
        })
        .unwrap();
        let (state, history) = newton_with_history(
            rough.phi(),
            lambda,
            &NewtonOptions::default(),
        )
        .unwrap();
        assert!(state.residual_norm() < 1e-12 * lambda.abs());
        // quadratic contraction while above the roundoff floor
        let mut quadratic_steps = 0;
        for w in history.windows(2) {
            if w[0] < 1e-1 && 10.0 * w[0] * w[0] > 1e-13 {
                assert!(w[1] < 10.0 * w[0] * w[0], "history {history:?}");
                quadratic_steps += 1;
            }
        }
        assert!(quadratic_steps >= 1, "history {history:?}");
    }

    #[test]
    fn newton_from_perturbed_constant_lands_on_asymmetric_branch() {
        // seed the branch with constant + a U, with the amplitude taken from
        // the normal form a^2 = (lambda0 - lambda)/|Omega|
        use crate::normalform;
        use crate::spectrum;
        let l = PI / 2.0;
        let g = DumbbellGrid::new(l, 64).unwrap();
        let report = normalform::PitchforkReport::compute(l).unwrap();
        let lambda = report.lambda0 - 0.02;
        let p = (lambda.abs() / 2.0).sqrt();
        let amp = (0.02 / report.omega_coef.abs()).sqrt();
        let mode = spectrum::odd_eigenfunction(l, &g).unwrap();
        let mut seed = GraphFunction::constant(&g, p);
        seed.values_mut().axpy(amp, mode.values(), 1.0);
        let state = newton(&seed, lambda, &NewtonOptions::default()).unwrap();
        assert_eq!(state.tag(), StateTag::Asymmetric);
        assert!(state.charge() > report.q0_star);
        assert!((state.charge() - 0.354077).abs() < 5e-4, "Q = {}", state.charge());
    }

    #[test]
    fn reflected_solution_solves_with_equal_invariants() {
        let g = DumbbellGrid::new(PI / 2.0, 48).unwrap();
        let lambda = -6.0;
        let seed = gaussian_seed(&g, lambda, SeedCenter::RingPlus).unwrap();
        let state = hybrid(
            &seed,
            lambda,
            &PetviashviliOptions::default(),
            &NewtonOptions::default(),
        )
        .unwrap();
        let mirrored = newton(&state.phi().reflected(), lambda, &NewtonOptions::default()).unwrap();
        assert!((state.charge() - mirrored.charge()).abs() < 1e-10);
        assert!((state.energy() - mirrored.energy()).abs() < 1e-10);
        // the mirror is peaked on the other ring
        let (m0, p0) = state.phi().ring_masses();
        let (m1, p1) = mirrored.phi().ring_masses();
        assert!((m0 - p1).abs() < 1e-8 && (p0 - m1).abs() < 1e-8);
    }

    #[test]
    fn lminus_annihilates_converged_states() {
        let g = DumbbellGrid::new(PI / 2.0, 48).unwrap();
        for lambda in [-2.0, -8.0] {
            let seed = gaussian_seed(&g, lambda, SeedCenter::Segment).unwrap();
            let mut state = hybrid(
                &seed,
                lambda,
                &PetviashviliOptions::default(),
                &NewtonOptions::default(),
            )
            .unwrap();
            let lminus = operators::build_l_minus(&g, state.phi(), lambda).unwrap();
            let image = lminus.apply(state.phi()).unwrap();
            assert!(image.norm_l2() / state.phi().norm_l2() < 1e-6);
            let head = state.ensure_spectrum_head().unwrap();
            assert!(head.lminus_min.abs() < 1e-5 * lambda.abs().max(1.0));
        }
    }

    #[test]
    fn constant_branch_is_a_straight_line_in_q() {
        let l = 2.0 * PI;
        let g = DumbbellGrid::new(l, 16).unwrap();
        let lambda_start = -0.5;
        let state = closedform::constant_state(lambda_start, &g).unwrap();
        let table = continue_branch(&state, -0.01, 30, &ContinuationOptions {
            skip_row_spectrum: true,
            ..Default::default()
        })
        .unwrap();
        assert!(table.meta.end.is_none());
        assert_eq!(table.family, StateTag::Constant);
        for row in &table.rows {
            let expect = (l + 2.0 * PI) * row.lambda.abs();
            assert!((row.q - expect).abs() < 1e-8, "Q({}) = {}", row.lambda, row.q);
        }
        // rows are ordered by descending lambda
        for w in table.rows.windows(2) {
            assert!(w[0].lambda > w[1].lambda);
        }
    }

    #[test]
    fn energy_gradient_is_twice_the_residual() {
        // quadrature-weighted finite differences of H = E - Lambda Q
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let g = DumbbellGrid::new(PI, 12).unwrap();
        let lambda = -1.3;
        let phi = GraphFunction::new(
            g.clone(),
            DVector::from_fn(g.dof(), |_, _| rng.random_range(0.2..1.0)),
        )
        .unwrap();
        let lap = operators::build_laplacian(&g);
        let res = residual(&lap, &phi, lambda);
        let h_of = |v: &DVector<f64>| {
            let f = GraphFunction::new(g.clone(), v.clone()).unwrap();
            energy(&f) - lambda * charge(&f)
        };
        let delta = 1e-6;
        for i in (0..g.dof()).step_by(7) {
            let mut up = phi.values().clone();
            up[i] += delta;
            let mut dn = phi.values().clone();
            dn[i] -= delta;
            let grad = (h_of(&up) - h_of(&dn)) / (2.0 * delta * g.weight(i));
            let expect = 2.0 * res.values()[i];
            assert!(
                (grad - expect).abs() < 1e-6 * expect.abs().max(1.0),
                "node {i}: fd {grad} vs residual {expect}"
            );
        }
    }
}
