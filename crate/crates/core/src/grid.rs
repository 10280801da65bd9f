//! Dumbbell graph geometry and its uniform discretization.
//!
//! The graph consists of a central segment `I0 = [-L, L]` and two rings
//! `I- = [-L-2pi, -L]`, `I+ = [L, L+2pi]`, each ring closing on itself
//! through the junction it shares with the segment. Nodes are spaced `h`
//! apart with `h = 2pi/N = 2L/M`, which requires `N*L/pi` to be an integer.
//!
//! Junction values are stored once, in the segment block, so continuity of
//! functions across junctions holds by construction. The flux (derivative)
//! condition is imposed by the operator module.

use nalgebra::DVector;
use std::f64::consts::PI;
use thiserror::Error;

/// Both rings have circumference `2*pi`.
pub const RING_LENGTH: f64 = 2.0 * PI;

#[derive(Debug, Error)]
pub enum GridError {
    /// `N*L/pi` must be an integer so that ring and segment spacing agree.
    #[error("non-commensurate grid: N*L/pi = {0} is not an integer; change N or L")]
    NonCommensurateGrid(f64),
    #[error("N = {0} is too coarse; need N >= 4")]
    TooCoarse(usize),
    #[error("L = {0} must be positive")]
    NonPositiveLength(f64),
    #[error("sampled value is not finite at node {index} (x = {x})")]
    NonFiniteSample { index: usize, x: f64 },
    #[error("graph functions live on different grids")]
    GridMismatch,
}

/// Which edge of the graph a node belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    RingMinus,
    Segment,
    RingPlus,
}

/// Uniform discretization of the dumbbell graph.
///
/// Node ordering: ring-minus interior (`N-1` nodes), segment (`M+1` nodes
/// including both junctions), ring-plus interior (`N-1` nodes), for a total
/// of `D = M + 2N - 1` degrees of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct DumbbellGrid {
    l: f64,
    n: usize,
    m: usize,
    h: f64,
}

impl DumbbellGrid {
    /// Builds a grid with half-length `l` and `n` points per ring.
    ///
    /// Requires `n >= 4` and `n*l/pi` integral (within 1e-12, then rounded),
    /// mirroring the commensurability constraint `L = m*pi` or `pi/m`.
    pub fn new(l: f64, n: usize) -> Result<Self, GridError> {
        if l <= 0.0 || !l.is_finite() {
            return Err(GridError::NonPositiveLength(l));
        }
        if n < 4 {
            return Err(GridError::TooCoarse(n));
        }
        let m_real = n as f64 * l / PI;
        if (m_real - m_real.round()).abs() > 1e-12 * m_real.max(1.0) {
            return Err(GridError::NonCommensurateGrid(m_real));
        }
        let m = m_real.round() as usize;
        Ok(Self { l, n, m, h: RING_LENGTH / n as f64 })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    /// Grid points per ring.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Grid intervals on the segment.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Node spacing `h = 2pi/N`.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Total degrees of freedom `D = M + 2N - 1`.
    pub fn dof(&self) -> usize {
        self.m + 2 * self.n - 1
    }

    /// Total metric length of the graph, `2L + 4pi`.
    pub fn total_length(&self) -> f64 {
        2.0 * self.l + 2.0 * RING_LENGTH
    }

    /// Index of the junction at `x = -L` (segment node 0).
    pub fn junction_left(&self) -> usize {
        self.n - 1
    }

    /// Index of the junction at `x = +L` (segment node M).
    pub fn junction_right(&self) -> usize {
        self.n - 1 + self.m
    }

    pub fn ring_minus_interior(&self) -> std::ops::Range<usize> {
        0..self.n - 1
    }

    pub fn segment_nodes(&self) -> std::ops::Range<usize> {
        self.n - 1..self.n + self.m
    }

    pub fn ring_plus_interior(&self) -> std::ops::Range<usize> {
        self.n + self.m..self.dof()
    }

    /// Edge and coordinate of node `i`. Junction nodes report `Edge::Segment`.
    pub fn node(&self, i: usize) -> (Edge, f64) {
        debug_assert!(i < self.dof());
        if i < self.n - 1 {
            (Edge::RingMinus, -self.l - RING_LENGTH + (i + 1) as f64 * self.h)
        } else if i <= self.junction_right() {
            (Edge::Segment, -self.l + (i - (self.n - 1)) as f64 * self.h)
        } else {
            (Edge::RingPlus, self.l + (i - (self.n + self.m) + 1) as f64 * self.h)
        }
    }

    /// Trapezoid quadrature weight of node `i`: `h` at ordinary nodes,
    /// `3h/2` at junctions (three incident edge intervals at `h/2` each).
    pub fn weight(&self, i: usize) -> f64 {
        if i == self.junction_left() || i == self.junction_right() {
            1.5 * self.h
        } else {
            self.h
        }
    }

    pub fn weights(&self) -> DVector<f64> {
        DVector::from_fn(self.dof(), |i, _| self.weight(i))
    }

    /// All `2N + M` grid intervals as node index pairs.
    ///
    /// Rings close through their junction, so the junction index appears as
    /// an endpoint of the first and last interval of each ring.
    pub fn intervals(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(2 * self.n + self.m);
        let jl = self.junction_left();
        let jr = self.junction_right();
        // ring minus cycle: jl, rm[0], .., rm[n-2], jl
        out.push((jl, 0));
        for t in 0..self.n - 2 {
            out.push((t, t + 1));
        }
        out.push((self.n - 2, jl));
        // segment path
        for j in 0..self.m {
            out.push((jl + j, jl + j + 1));
        }
        // ring plus cycle
        let rp0 = self.n + self.m;
        out.push((jr, rp0));
        for t in 0..self.n - 2 {
            out.push((rp0 + t, rp0 + t + 1));
        }
        out.push((rp0 + self.n - 2, jr));
        out
    }

    /// Index of the node at the reflected position `x -> -x`.
    pub fn reflected_index(&self, i: usize) -> usize {
        let jl = self.junction_left();
        let rp0 = self.n + self.m;
        if i < self.n - 1 {
            // ring-minus interior t maps to ring-plus interior n-2-t
            rp0 + (self.n - 2 - i)
        } else if i <= self.junction_right() {
            jl + (self.m - (i - jl))
        } else {
            self.n - 2 - (i - rp0)
        }
    }
}

/// A real-valued function sampled at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFunction {
    grid: DumbbellGrid,
    values: DVector<f64>,
}

impl GraphFunction {
    pub fn new(grid: DumbbellGrid, values: DVector<f64>) -> Result<Self, GridError> {
        if values.len() != grid.dof() {
            return Err(GridError::GridMismatch);
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: &DumbbellGrid, value: f64) -> Self {
        Self { grid: grid.clone(), values: DVector::from_element(grid.dof(), value) }
    }

    pub fn zeros(grid: &DumbbellGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f(edge, x)` at every node. Junction nodes are evaluated on
    /// the segment edge.
    pub fn sample(
        grid: &DumbbellGrid,
        f: impl Fn(Edge, f64) -> f64,
    ) -> Result<Self, GridError> {
        let mut values = DVector::zeros(grid.dof());
        for i in 0..grid.dof() {
            let (edge, x) = grid.node(i);
            let v = f(edge, x);
            if !v.is_finite() {
                return Err(GridError::NonFiniteSample { index: i, x });
            }
            values[i] = v;
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn grid(&self) -> &DumbbellGrid {
        &self.grid
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut DVector<f64> {
        &mut self.values
    }

    pub fn into_values(self) -> DVector<f64> {
        self.values
    }

    /// Trapezoid quadrature of the function over the whole graph.
    pub fn integrate(&self) -> f64 {
        (0..self.grid.dof()).map(|i| self.grid.weight(i) * self.values[i]).sum()
    }

    /// Quadrature-weighted inner product `<u, v>_w`.
    pub fn inner(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        (0..self.grid.dof())
            .map(|i| self.grid.weight(i) * self.values[i] * other.values[i])
            .sum()
    }

    /// Discrete L2 norm in the quadrature-weighted inner product.
    pub fn norm_l2(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn norm_sup(&self) -> f64 {
        self.values.amax()
    }

    /// The function `x -> u(-x)`; the dumbbell is symmetric under reflection.
    pub fn reflected(&self) -> Self {
        let values = DVector::from_fn(self.grid.dof(), |i, _| {
            self.values[self.grid.reflected_index(i)]
        });
        Self { grid: self.grid.clone(), values }
    }

    /// Mass on each ring: `(int_{I-} u^2, int_{I+} u^2)` with junction weight
    /// `h` attributed to the ring (its two incident half-intervals).
    pub fn ring_masses(&self) -> (f64, f64) {
        let g = &self.grid;
        let h = g.h();
        let mut minus: f64 = g.ring_minus_interior().map(|i| h * self.values[i].powi(2)).sum();
        minus += h * self.values[g.junction_left()].powi(2);
        let mut plus: f64 = g.ring_plus_interior().map(|i| h * self.values[i].powi(2)).sum();
        plus += h * self.values[g.junction_right()].powi(2);
        (minus, plus)
    }
}
