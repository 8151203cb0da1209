//! Jacobi elliptic functions by the descending Landen (AGM) recursion.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const MAX_LEVELS: usize = 40;

/// Complete elliptic integral of the first kind K(k), modulus convention.
pub fn complete_k(k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::InvalidInput(format!("modulus k = {k} outside [0, 1)")));
    }
    let (mut a, mut b) = (1.0f64, (1.0 - k * k).sqrt());
    for _ in 0..MAX_LEVELS {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    Ok(PI / (2.0 * a))
}

/// (sn, cn, dn)(u, k) for modulus 0 ≤ k ≤ 1.
pub fn jacobi_elliptic(u: f64, k: f64) -> Result<(f64, f64, f64)> {
    if !(0.0..=1.0).contains(&k) || k.is_nan() {
        return Err(Error::InvalidInput(format!("modulus k = {k} outside [0, 1]")));
    }
    if k == 0.0 {
        return Ok((u.sin(), u.cos(), 1.0));
    }
    if k == 1.0 {
        let s = 1.0 / u.cosh();
        return Ok((u.tanh(), s, s));
    }
    // reduce modulo the real period 4K
    let period = 4.0 * complete_k(k)?;
    let u = u - period * (u / period).round();

    // Landen sequence carried through cotangent ratios, which stays accurate
    // near the quarter period where the angle form loses digits.
    let mut em = [0.0f64; MAX_LEVELS];
    let mut en = [0.0f64; MAX_LEVELS];
    let mut emc = 1.0 - k * k;
    let mut a = 1.0f64;
    let mut cc = 1.0f64;
    let mut levels = 0;
    for i in 0..MAX_LEVELS {
        levels = i + 1;
        em[i] = a;
        emc = emc.sqrt();
        en[i] = emc;
        cc = 0.5 * (a + emc);
        if (a - emc).abs() <= 1e-9 * a {
            break;
        }
        emc *= a;
        a = cc;
    }
    let v = u * cc;
    let mut sn = v.sin();
    let mut cn = v.cos();
    let mut dn = 1.0;
    if sn != 0.0 {
        let mut a = cn / sn;
        let mut c = cc * a;
        for ii in (0..levels).rev() {
            let b = em[ii];
            a *= c;
            c *= dn;
            dn = (en[ii] + a) / (b + a);
            a = c / b;
        }
        let a = 1.0 / (c * c + 1.0).sqrt();
        sn = if sn >= 0.0 { a } else { -a };
        cn = c * sn;
    }
    Ok((sn, cn, dn))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent route: invert F(φ, k) = u by bisection on a Simpson quadrature.
    fn quadrature_oracle(u: f64, k: f64) -> (f64, f64, f64) {
        let f = |phi: f64| {
            let n = 4000;
            let h = phi / n as f64;
            let g = |t: f64| 1.0 / (1.0 - k * k * t.sin().powi(2)).sqrt();
            let mut s = g(0.0) + g(phi);
            for i in 1..n {
                s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        let (mut lo, mut hi) = (0.0, PI / 2.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let phi = 0.5 * (lo + hi);
        (phi.sin(), phi.cos(), (1.0 - k * k * phi.sin().powi(2)).sqrt())
    }

    #[test]
    fn spot_value_matches_quadrature_oracle() {
        let (sn, cn, dn) = jacobi_elliptic(0.5, 0.5).unwrap();
        let (so, co, dno) = quadrature_oracle(0.5, 0.5);
        assert!((sn - so).abs() < 1e-12 && (cn - co).abs() < 1e-12 && (dn - dno).abs() < 1e-12);
        // frozen reference values
        assert!((sn - 0.475_082_936_028_536_5).abs() < 1e-13);
        assert!((cn - 0.879_941_022_963_758_3).abs() < 1e-13);
        assert!((dn - 0.971_377_398_838_178_8).abs() < 1e-13);
    }

    #[test]
    fn frozen_values_near_unit_modulus() {
        let (sn, cn, dn) = jacobi_elliptic(1.3, 0.9).unwrap();
        assert!((sn - 0.885_760_198_280_398_9).abs() < 1e-12);
        assert!((cn - 0.464_143_158_025_913_8).abs() < 1e-12);
        assert!((dn - 0.603_736_188_765_620_8).abs() < 1e-12);
        let (sn, cn, dn) = jacobi_elliptic(3.7, 0.99).unwrap();
        assert!((sn - 0.998_781_028_434_457_9).abs() < 1e-12);
        assert!((cn + 0.049_360_482_568_616_36).abs() < 1e-12);
        assert!((dn - 0.149_291_566_206_341_7).abs() < 1e-12);
    }

    #[test]
    fn limits() {
        let (s, c, d) = jacobi_elliptic(0.7, 0.0).unwrap();
        assert_eq!((s, c, d), (0.7f64.sin(), 0.7f64.cos(), 1.0));
        let (s, c, d) = jacobi_elliptic(0.7, 1.0).unwrap();
        assert!((s - 0.7f64.tanh()).abs() < 1e-15 && (c - 1.0 / 0.7f64.cosh()).abs() < 1e-15 && c == d);
        assert!(jacobi_elliptic(0.1, 1.1).is_err());
        assert!(jacobi_elliptic(0.1, -0.1).is_err());
    }

    #[test]
    fn quarter_period() {
        let k = 0.6;
        let kk = complete_k(k).unwrap();
        let (s, c, d) = jacobi_elliptic(kk, k).unwrap();
        assert!((s - 1.0).abs() < 1e-12 && c.abs() < 1e-12 && (d - (1.0 - k * k).sqrt()).abs() < 1e-12);
    }
}
