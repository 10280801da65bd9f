//! Jacobi elliptic functions and complete elliptic integrals.
//!
//! Everything is built on the arithmetic-geometric mean: `K` and `E` come
//! straight from the AGM sequence, `sn`/`cn`/`dn` from the descending Landen
//! transformation (at most 16 steps). The modulus is carried together with
//! its complement `m' = 1 - k^2` so that the `k -> 1` regime keeps full
//! precision; `k = 1` itself is an explicit hyperbolic branch.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EllipticError {
    #[error("elliptic modulus {0} outside the valid range")]
    ModulusOutOfRange(f64),
    #[error("argument {xi} within 1e-6 of the quarter period K = {k_complete}; integrand pole")]
    QuadratureNearPole { xi: f64, k_complete: f64 },
}

const MAX_LANDEN_STEPS: usize = 16;

/// Elliptic modulus `k` in `(0, 1]`, carrying `m' = 1 - k^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticModulus {
    k: f64,
    m_prime: f64,
}

impl EllipticModulus {
    pub fn from_k(k: f64) -> Result<Self, EllipticError> {
        if !(k > 0.0 && k <= 1.0) {
            return Err(EllipticError::ModulusOutOfRange(k));
        }
        Ok(Self { k, m_prime: (1.0 - k) * (1.0 + k) })
    }

    /// Builds the modulus from the complementary value `k' = sqrt(1 - k^2)`;
    /// this keeps precision when `k` is exponentially close to 1.
    pub fn from_k_prime(k_prime: f64) -> Result<Self, EllipticError> {
        if !(0.0..1.0).contains(&k_prime) {
            return Err(EllipticError::ModulusOutOfRange(k_prime));
        }
        Ok(Self { k: (1.0 - k_prime * k_prime).sqrt(), m_prime: k_prime * k_prime })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn k_prime(&self) -> f64 {
        self.m_prime.sqrt()
    }

    /// `m' = 1 - k^2`.
    pub fn m_prime(&self) -> f64 {
        self.m_prime
    }

    pub fn is_degenerate(&self) -> bool {
        self.m_prime == 0.0
    }
}

/// AGM sequence shared by `K`, `E` and the Landen recursion.
struct Agm {
    a: Vec<f64>,
    c: Vec<f64>,
}

fn agm(b0: f64) -> Agm {
    let mut a = vec![1.0];
    let mut c = vec![(1.0 - b0 * b0).max(0.0).sqrt()];
    let mut an = 1.0_f64;
    let mut bn = b0;
    for _ in 0..MAX_LANDEN_STEPS {
        let cn = 0.5 * (an - bn);
        let next_a = 0.5 * (an + bn);
        bn = (an * bn).sqrt();
        an = next_a;
        a.push(an);
        c.push(cn);
        if cn.abs() < 1e-17 * an {
            break;
        }
    }
    Agm { a, c }
}

/// Complete elliptic integral of the first kind, `K(k)`, for `k` in `[0, 1)`.
pub fn complete_k(k: f64) -> Result<f64, EllipticError> {
    if !(0.0..1.0).contains(&k) {
        return Err(EllipticError::ModulusOutOfRange(k));
    }
    Ok(complete_k_from_m_prime((1.0 - k) * (1.0 + k)))
}

/// `K` evaluated from `m' = 1 - k^2`; valid for `m'` in `(0, 1]`.
pub fn complete_k_from_m_prime(m_prime: f64) -> f64 {
    let seq = agm(m_prime.sqrt());
    std::f64::consts::FRAC_PI_2 / seq.a[seq.a.len() - 1]
}

/// Complete elliptic integral of the second kind, `E(k)`, for `k` in `[0, 1]`.
pub fn complete_e(k: f64) -> Result<f64, EllipticError> {
    if !(0.0..=1.0).contains(&k) {
        return Err(EllipticError::ModulusOutOfRange(k));
    }
    if k == 1.0 {
        return Ok(1.0);
    }
    Ok(complete_e_from_m_prime((1.0 - k) * (1.0 + k), k))
}

fn complete_e_from_m_prime(m_prime: f64, k: f64) -> f64 {
    let seq = agm(m_prime.sqrt());
    let kk = std::f64::consts::FRAC_PI_2 / seq.a[seq.a.len() - 1];
    let mut sum = 0.5 * k * k; // 2^{-1} c_0^2 with c_0 = k
    let mut pow = 0.5;
    for (n, cn) in seq.c.iter().enumerate().skip(1) {
        pow *= 2.0;
        sum += pow * cn * cn;
        let _ = n;
    }
    kk * (1.0 - sum)
}

/// Jacobi elliptic functions `(sn, cn, dn)(xi; k)`.
///
/// Degenerates to `(tanh, sech, sech)` at `k = 1`; elsewhere the descending
/// Landen recursion is used after reducing `xi` modulo the period `4K`.
pub fn jacobi(xi: f64, modulus: &EllipticModulus) -> (f64, f64, f64) {
    if modulus.is_degenerate() {
        let sech = 1.0 / xi.cosh();
        return (xi.tanh(), sech, sech);
    }
    let seq = agm(modulus.k_prime());
    let n = seq.a.len() - 1;
    let quarter = std::f64::consts::FRAC_PI_2 / seq.a[n];
    // reduce to |xi| <= 2K to keep the doubled phase well-conditioned
    let period = 4.0 * quarter;
    let xi_red = xi - period * (xi / period).round();

    let mut phi = seq.a[n] * xi_red * (1u64 << n) as f64;
    for i in (1..=n).rev() {
        let s = (seq.c[i] / seq.a[i] * phi.sin()).clamp(-1.0, 1.0);
        phi = 0.5 * (phi + s.asin());
    }
    let sn = phi.sin();
    let cn = phi.cos();
    let dn = (cn * cn + modulus.m_prime() * sn * sn).sqrt();
    (sn, cn, dn)
}

/// Closed forms of `d/dk sn`, `d/dk cn`, `d/dk dn` at `k = 1`.
pub fn dk_jacobi_at_1(xi: f64) -> (f64, f64, f64) {
    let sech = 1.0 / xi.cosh();
    let tanh = xi.tanh();
    let bracket_minus = xi.sinh() * xi.cosh() - xi;
    let bracket_plus = xi.sinh() * xi.cosh() + xi;
    let d_sn = -0.5 * bracket_minus * sech * sech;
    let d_cn = 0.5 * bracket_minus * tanh * sech;
    let d_dn = -0.5 * bracket_plus * tanh * sech;
    (d_sn, d_cn, d_dn)
}

/// `d/dk dn(xi; k)` by variation of constants:
/// `-k sn(xi) cn(xi) * int_0^xi dt / cn^2(t)`.
///
/// Requires `0 <= xi < K(k)`; near the quarter period the integrand blows up
/// and `QuadratureNearPole` is returned.
pub fn dk_dn_variation(xi: f64, modulus: &EllipticModulus) -> Result<f64, EllipticError> {
    if modulus.is_degenerate() {
        return Err(EllipticError::ModulusOutOfRange(modulus.k()));
    }
    let quarter = complete_k_from_m_prime(modulus.m_prime());
    if xi < 0.0 || xi > quarter - 1e-6 {
        return Err(EllipticError::QuadratureNearPole { xi, k_complete: quarter });
    }
    if xi == 0.0 {
        return Ok(0.0);
    }
    let integrand = |t: f64| {
        let (_, cn, _) = jacobi(t, modulus);
        1.0 / (cn * cn)
    };
    let integral = adaptive_simpson(&integrand, 0.0, xi, 1e-11, 40);
    let (sn, cn, _) = jacobi(xi, modulus);
    Ok(-modulus.k() * sn * cn * integral)
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}
