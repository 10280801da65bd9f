//! Analytic linear spectrum of `-Delta` on the dumbbell graph.
//!
//! The spectrum is a simple zero, double eigenvalues `n^2` carried by modes
//! compactly supported on one ring, and two families of simple eigenvalues
//! `omega_n^2` (even) and `Omega_n^2` (odd) whose frequencies solve
//! `2 tan(w pi) + tan(w L) = 0` and `2 tan(w pi) - cot(w L) = 0`.
//! Root-finding is done on the pole-free trigonometric forms, bracketing
//! between quarter-period lattice points of both factors.

use crate::grid::{DumbbellGrid, Edge, GraphFunction, GridError};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("bracketing failed: found {found} of {requested} roots below w = {limit}")]
    BracketingFailure { found: usize, requested: usize, limit: f64 },
    #[error("L must be positive, got {0}")]
    InvalidLength(f64),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Third eigenfunction attached to a resonant double eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResonantKind {
    /// `m` even: cosine profile on the segment (even mode).
    EvenCosine,
    /// `m` odd: sine profile on the segment (odd mode).
    OddSine,
}

/// Witness that `L = pi m / (2 n)` within tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resonance {
    pub m: u32,
    pub n: u32,
    pub kind: ResonantKind,
}

/// Analytic spectrum summary for one value of `L`.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub l: f64,
    /// Double eigenvalues `n^2` for `n = 1..=n_max`.
    pub doubles: Vec<f64>,
    /// Frequencies of the even family (roots of the first dispersion relation).
    pub even_roots: Vec<f64>,
    /// Frequencies of the odd family (roots of the second dispersion relation).
    pub odd_roots: Vec<f64>,
    pub resonance: Option<Resonance>,
}

/// Pole-free form of the odd dispersion relation
/// `2 sin(w pi) sin(w L) - cos(w pi) cos(w L)`.
fn odd_form(l: f64, w: f64) -> f64 {
    2.0 * (w * PI).sin() * (w * l).sin() - (w * PI).cos() * (w * l).cos()
}

/// Pole-free form of the even dispersion relation
/// `2 sin(w pi) cos(w L) + cos(w pi) sin(w L)`.
fn even_form(l: f64, w: f64) -> f64 {
    2.0 * (w * PI).sin() * (w * l).cos() + (w * PI).cos() * (w * l).sin()
}

/// Quarter-period lattice of both trigonometric factors: multiples of `1/2`
/// and of `pi/(2L)`, merged and sorted, covering `(0, limit]`.
fn bracket_lattice(l: f64, limit: f64) -> Vec<f64> {
    let mut pts = Vec::new();
    let mut k = 1u64;
    while k as f64 * 0.5 <= limit {
        pts.push(k as f64 * 0.5);
        k += 1;
    }
    let step = PI / (2.0 * l);
    let mut k = 1u64;
    while k as f64 * step <= limit {
        pts.push(k as f64 * step);
        k += 1;
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    pts
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        if hi - lo < 4.0 * f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if flo * fm <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    0.5 * (lo + hi)
}

fn dispersion_roots(
    l: f64,
    count: usize,
    form: impl Fn(f64, f64) -> f64,
) -> Result<Vec<f64>, SpectrumError> {
    if l <= 0.0 || !l.is_finite() {
        return Err(SpectrumError::InvalidLength(l));
    }
    // enough lattice cells to host `count` roots of either family
    let limit = (count as f64 + 2.0) * (1.0 + PI / (2.0 * l)).max(2.0);
    let lattice = bracket_lattice(l, limit);
    let mut roots: Vec<f64> = Vec::new();
    let mut prev = 0.0_f64;
    let mut fprev = form(l, prev);
    for &t in &lattice {
        if roots.len() >= count {
            break;
        }
        let ft = form(l, t);
        // a root may sit exactly on a lattice point (resonant case)
        if ft.abs() < 1e-12 * (1.0 + t) {
            if t > 1e-12 && roots.last().is_none_or(|r| (r - t).abs() > 1e-11) {
                roots.push(t);
            }
            prev = t;
            fprev = ft;
            continue;
        }
        if fprev * ft < 0.0 {
            let r = bisect(|w| form(l, w), prev, t);
            if r > 1e-12 && roots.last().is_none_or(|q| (q - r).abs() > 1e-11) {
                roots.push(r);
            }
        }
        prev = t;
        fprev = ft;
    }
    if roots.len() < count {
        return Err(SpectrumError::BracketingFailure {
            found: roots.len(),
            requested: count,
            limit,
        });
    }
    roots.truncate(count);
    Ok(roots)
}

/// First `count` positive roots `Omega_n` of the odd dispersion relation.
pub fn odd_dispersion_roots(l: f64, count: usize) -> Result<Vec<f64>, SpectrumError> {
    dispersion_roots(l, count, odd_form)
}

/// First `count` positive roots `omega_n` of the even dispersion relation.
pub fn even_dispersion_roots(l: f64, count: usize) -> Result<Vec<f64>, SpectrumError> {
    dispersion_roots(l, count, even_form)
}

/// Detects whether `L` is a rational multiple of `pi/2` with denominator at
/// most 64 (tolerance 1e-9). Returns the smallest such witness.
pub fn detect_resonance(l: f64) -> Option<Resonance> {
    for n in 1..=64u32 {
        let m_real = 2.0 * n as f64 * l / PI;
        let m = m_real.round();
        if m >= 1.0 && (l - PI * m / (2.0 * n as f64)).abs() < 1e-9 {
            let m = m as u32;
            let kind =
                if m.is_multiple_of(2) { ResonantKind::EvenCosine } else { ResonantKind::OddSine };
            return Some(Resonance { m, n, kind });
        }
    }
    None
}

impl SpectrumReport {
    /// Computes the first `count` roots of each dispersion family plus the
    /// `n^2` ladder up to the largest computed root.
    pub fn compute(l: f64, count: usize) -> Result<Self, SpectrumError> {
        let odd_roots = odd_dispersion_roots(l, count)?;
        let even_roots = even_dispersion_roots(l, count)?;
        let top = odd_roots
            .iter()
            .chain(even_roots.iter())
            .fold(0.0_f64, |a, &b| a.max(b));
        let n_max = top.ceil().max(1.0) as usize;
        let doubles = (1..=n_max).map(|n| (n * n) as f64).collect();
        Ok(Self { l, doubles, even_roots, odd_roots, resonance: detect_resonance(l) })
    }

    /// The smallest `count` eigenvalues of `-Delta` with multiplicity:
    /// the simple zero, each `n^2` twice (three times at resonance with that
    /// `n`), and the squares of the dispersion roots.
    pub fn sorted_eigenvalues(&self, count: usize) -> Vec<f64> {
        let mut vals = vec![0.0];
        for &d in &self.doubles {
            vals.push(d);
            vals.push(d);
        }
        for &w in self.even_roots.iter().chain(self.odd_roots.iter()) {
            vals.push(w * w);
        }
        vals.sort_by(f64::total_cmp);
        vals.truncate(count);
        vals
    }
}

/// Samples the odd eigenfunction attached to the smallest positive
/// eigenvalue `Omega_1^2`:
/// `sin(Omega_1 x)` on the segment and
/// `±(sin(Omega_1 L)/cos(Omega_1 pi)) cos(Omega_1 (x ∓ (L+pi)))` on the rings.
pub fn odd_eigenfunction(l: f64, grid: &DumbbellGrid) -> Result<GraphFunction, SpectrumError> {
    let omega1 = odd_dispersion_roots(l, 1)?[0];
    let amp = (omega1 * l).sin() / (omega1 * PI).cos();
    Ok(GraphFunction::sample(grid, |edge, x| match edge {
        Edge::Segment => (omega1 * x).sin(),
        Edge::RingPlus => amp * (omega1 * (x - l - PI)).cos(),
        Edge::RingMinus => -amp * (omega1 * (x + l + PI)).cos(),
    })?)
}

/// Samples the third eigenfunction of a resonant double eigenvalue `n^2`.
pub fn resonant_eigenfunction(
    grid: &DumbbellGrid,
    res: &Resonance,
) -> Result<GraphFunction, SpectrumError> {
    let l = grid.l();
    let nf = res.n as f64;
    Ok(match res.kind {
        ResonantKind::EvenCosine => {
            let sign = if (res.n + res.m / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
            GraphFunction::sample(grid, |edge, x| match edge {
                Edge::Segment => (nf * x).cos(),
                Edge::RingPlus => sign * (nf * (x - l - PI)).cos(),
                Edge::RingMinus => sign * (nf * (-x - l - PI)).cos(),
            })?
        }
        ResonantKind::OddSine => {
            let sign = if (res.n + (res.m - 1) / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
            GraphFunction::sample(grid, |edge, x| match edge {
                Edge::Segment => (nf * x).sin(),
                Edge::RingPlus => sign * (nf * (x - l - PI)).cos(),
                Edge::RingMinus => -sign * (nf * (-x - l - PI)).cos(),
            })?
        }
    })
}

/// Residual of the original tangent/cotangent dispersion relations; large
/// only near poles of the tangent factors.
pub fn odd_residual(l: f64, w: f64) -> f64 {
    (2.0 * (w * PI).tan() - 1.0 / (w * l).tan()).abs()
}

pub fn even_residual(l: f64, w: f64) -> f64 {
    (2.0 * (w * PI).tan() + (w * l).tan()).abs()
}

/// Residuals of the pole-free forms used for root-finding; small at every
/// root, including those sitting on tangent poles.
pub fn odd_form_residual(l: f64, w: f64) -> f64 {
    odd_form(l, w).abs()
}

pub fn even_form_residual(l: f64, w: f64) -> f64 {
    even_form(l, w).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// At L = pi/2 the first odd root is (2/pi) asin(1/sqrt(6)) and the first
    /// even root is (2/pi) asin(sqrt(5/6)); both follow from reducing the
    /// dispersion relations with t = w pi / 2.
    fn omega1_exact_half_pi() -> f64 {
        2.0 / PI * (1.0 / 6.0_f64.sqrt()).asin()
    }

    #[test]
    fn odd_roots_at_half_pi() {
        let l = PI / 2.0;
        let roots = odd_dispersion_roots(l, 3).unwrap();
        assert!((roots[0] - omega1_exact_half_pi()).abs() < 1e-12, "{roots:?}");
        assert!((roots[0] - 0.267_720_472_801_23).abs() < 1e-12);
        assert!(roots[0] < 0.5 && roots[0] < PI / (2.0 * l));
        // the second odd root is the resonant frequency 1 at this L
        assert!((roots[1] - 1.0).abs() < 1e-11);
    }

    #[test]
    fn even_roots_orderings() {
        let l = PI / 2.0;
        let odd = odd_dispersion_roots(l, 2).unwrap();
        let even = even_dispersion_roots(l, 2).unwrap();
        let exact = 2.0 / PI * (5.0_f64 / 6.0).sqrt().asin();
        assert!((even[0] - exact).abs() < 1e-12);
        // ordering for L < pi: Omega1 < 1/2 < omega1 < min(1, pi/2L)
        assert!(odd[0] < 0.5 && 0.5 < even[0] && even[0] < 1.0);
        assert!(even_residual(l, even[0]) < 1e-10);
        assert!(odd_residual(l, odd[0]) < 1e-10);

        // ordering for L >= pi: pi/2L <= omega1 <= min(1/2, pi/L)
        let l = 2.0 * PI;
        let even = even_dispersion_roots(l, 1).unwrap();
        assert!(even[0] <= 0.5 + 1e-12);
        assert!(even[0] >= PI / (2.0 * l) - 1e-12);
    }

    #[test]
    fn interleaving_of_first_roots() {
        for l in [0.3, PI / 2.0, 1.9, PI, 5.0, 2.0 * PI, 9.0] {
            let odd = odd_dispersion_roots(l, 2).unwrap();
            let even = even_dispersion_roots(l, 1).unwrap();
            assert!(odd[0] < even[0] && even[0] < odd[1], "L={l}: {odd:?} {even:?}");
        }
    }

    #[test]
    fn omega1_limits() {
        // L -> 0: Omega1 -> 1/2
        let small = odd_dispersion_roots(1e-3, 1).unwrap()[0];
        assert!((small - 0.5).abs() < 1e-2);
        // L -> infinity: 2 L Omega1 increases towards pi (at rate 1/L;
        // expanding the dispersion relation gives Omega1 ~ pi/(2L + 4pi))
        let mut prev = 0.0;
        for l in [50.0, 100.0, 400.0, 1600.0] {
            let root = odd_dispersion_roots(l, 1).unwrap()[0];
            let scaled = 2.0 * l * root;
            assert!(scaled < PI, "bound 2 L Omega1 < pi at L={l}");
            assert!(scaled > prev, "monotone approach at L={l}");
            assert!((root - PI / (2.0 * l + 4.0 * PI)).abs() < 20.0 / (l * l), "L={l}");
            prev = scaled;
        }
        assert!((PI - prev) < 1e-2 * PI, "2 L Omega1 within 1% of pi by L=1600");
    }

    #[test]
    fn root_residuals_are_tiny() {
        for l in [PI / 2.0, PI, 2.0 * PI, 1.3] {
            for &w in &odd_dispersion_roots(l, 3).unwrap() {
                assert!(odd_form(l, w).abs() < 1e-11, "L={l} w={w}");
            }
            for &w in &even_dispersion_roots(l, 3).unwrap() {
                assert!(even_form(l, w).abs() < 1e-11, "L={l} w={w}");
            }
        }
    }

    #[test]
    fn report_ordering_chains() {
        // L < pi: 0 < Omega1 < 1/2 < omega1 < min(1, pi/2L) <= Omega2
        for l in [0.4, PI / 2.0, 2.8] {
            let r = SpectrumReport::compute(l, 2).unwrap();
            let (o1, o2) = (r.odd_roots[0], r.odd_roots[1]);
            let w1 = r.even_roots[0];
            assert!(0.0 < o1 && o1 < 0.5, "L={l}");
            assert!(0.5 < w1 && w1 < 1.0_f64.min(PI / (2.0 * l)), "L={l}");
            assert!(1.0_f64.min(PI / (2.0 * l)) <= o2 + 1e-12, "L={l}");
        }
        // L >= pi: 0 < Omega1 < pi/2L <= omega1 <= min(1/2, pi/L) < Omega2
        for l in [PI, 5.0, 2.0 * PI, 9.0] {
            let r = SpectrumReport::compute(l, 2).unwrap();
            let (o1, o2) = (r.odd_roots[0], r.odd_roots[1]);
            let w1 = r.even_roots[0];
            assert!(0.0 < o1 && o1 < PI / (2.0 * l), "L={l}");
            assert!(PI / (2.0 * l) <= w1 + 1e-12, "L={l}");
            assert!(w1 <= 0.5_f64.min(PI / l) + 1e-12, "L={l}");
            assert!(0.5_f64.min(PI / l) < o2 + 1e-12, "L={l}");
        }
    }

    #[test]
    fn resonance_witnesses() {
        let r = detect_resonance(PI / 2.0).unwrap();
        assert_eq!((r.m, r.n), (1, 1));
        assert_eq!(r.kind, ResonantKind::OddSine);

        let r = detect_resonance(2.0 * PI).unwrap();
        assert_eq!((r.m, r.n), (4, 1));
        assert_eq!(r.kind, ResonantKind::EvenCosine);

        assert!(detect_resonance(PI * std::f64::consts::SQRT_2 / 2.0).is_none());
    }

    #[test]
    fn odd_eigenfunction_matches_junction_values() {
        let l = PI / 2.0;
        let grid = DumbbellGrid::new(l, 32).unwrap();
        let u = odd_eigenfunction(l, &grid).unwrap();
        let omega1 = odd_dispersion_roots(l, 1).unwrap()[0];
        // odd: vanishes at x = 0
        let mid = grid.junction_left() + grid.m() / 2;
        assert_eq!(u.values()[mid], 0.0);
        // junction value from the segment side is sin(Omega1 L); the ring
        // formula reproduces it exactly (continuity built in)
        let expect = (omega1 * l).sin();
        assert!((u.values()[grid.junction_right()] - expect).abs() < 1e-14);
        let ring_value = (omega1 * l).sin() / (omega1 * PI).cos() * (omega1 * PI).cos();
        assert!((ring_value - expect).abs() < 1e-15);
    }

    #[test]
    fn odd_eigenfunction_norm_matches_closed_form() {
        let l = PI / 2.0;
        let omega1 = odd_dispersion_roots(l, 1).unwrap()[0];
        let exact = l + 2.0 * PI * (l * omega1).sin().powi(2) / (PI * omega1).cos().powi(2);
        let grid = DumbbellGrid::new(l, 128).unwrap();
        let u = odd_eigenfunction(l, &grid).unwrap();
        let got = u.inner(&u);
        assert!((got - exact).abs() < 1e-3 * exact, "{got} vs {exact}");
    }

    #[test]
    fn resonant_eigenfunction_is_discrete_eigenvector() {
        use crate::operators;
        let l = PI / 2.0;
        let grid = DumbbellGrid::new(l, 64).unwrap();
        let res = detect_resonance(l).unwrap();
        let u = resonant_eigenfunction(&grid, &res).unwrap();
        let lap = operators::build_laplacian(&grid);
        let au = lap.apply(&u).unwrap();
        // Rayleigh quotient close to n^2 = 1
        let rq = au.inner(&u) / u.inner(&u);
        assert!((rq - 1.0).abs() < 5e-3, "rq = {rq}");
    }

    #[test]
    fn count_zero_is_rejected_upstream() {
        // count = 0 yields an empty root list; callers treat it as usage error
        let roots = odd_dispersion_roots(PI, 0).unwrap();
        assert!(roots.is_empty());
    }
}
