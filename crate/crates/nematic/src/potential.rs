//! Double-well potential psi on (-1/2, 1) with an explicit convex-concave
//! split psi = psi_c - psi_e.
//!
//! The split is what makes the implicit s-update unconditionally stable:
//! treating psi_c implicitly and psi_e explicitly turns convexity of both
//! parts into a per-step decrease of the potential energy, with no time
//! step restriction. Both parts are polynomials here; the shipped instance
//! is the quartic well with minimum near s = 0.750025.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

/// Open admissible interval for the degree of orientation.
pub const S_MIN: f64 = -0.5;
pub const S_MAX: f64 = 1.0;
/// Evaluation clamps to this margin inside (S_MIN, S_MAX). The scheme does
/// not enforce the physical bounds on iterates, so out-of-range excursions
/// are clamped and counted rather than treated as fatal.
pub const CLAMP_MARGIN: f64 = 1e-6;

fn poly_eval(coeffs: &[f64], s: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
}

fn poly_deriv(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

/// One evaluation of the split potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiEval {
    pub psi: f64,
    pub psi_c_prime: f64,
    pub psi_e_prime: f64,
    /// Whether the input had to be clamped into the admissible interval.
    pub clamped: bool,
}

/// Double-well potential with polynomial convex and concave parts
/// (coefficients in ascending powers).
#[derive(Debug)]
pub struct Potential {
    enabled: bool,
    c: Vec<f64>,
    e: Vec<f64>,
    c1: Vec<f64>,
    e1: Vec<f64>,
    c2: Vec<f64>,
    e2: Vec<f64>,
    s_star: f64,
    clamp_count: AtomicU64,
}

impl Clone for Potential {
    fn clone(&self) -> Potential {
        Potential {
            enabled: self.enabled,
            c: self.c.clone(),
            e: self.e.clone(),
            c1: self.c1.clone(),
            e1: self.e1.clone(),
            c2: self.c2.clone(),
            e2: self.e2.clone(),
            s_star: self.s_star,
            // The diagnostics counter starts fresh on a clone.
            clamp_count: AtomicU64::new(0),
        }
    }
}

impl Potential {
    /// Build a split potential from polynomial coefficients. Both parts
    /// must be convex on the admissible interval; convexity is checked by
    /// sampled second differences at 1000 points.
    pub fn new(c: Vec<f64>, e: Vec<f64>, s_star: f64) -> Result<Potential> {
        if c.iter().chain(&e).any(|v| !v.is_finite()) || !s_star.is_finite() {
            return Err(Error::InvalidArgument("potential coefficients must be finite".into()));
        }
        let c1 = poly_deriv(&c);
        let e1 = poly_deriv(&e);
        let c2 = poly_deriv(&c1);
        let e2 = poly_deriv(&e1);
        for (name, poly) in [("psi_c", &c), ("psi_e", &e)] {
            let lo = S_MIN + CLAMP_MARGIN;
            let hi = S_MAX - CLAMP_MARGIN;
            let n = 1000;
            let h = (hi - lo) / n as f64;
            for k in 1..n {
                let x = lo + k as f64 * h;
                let d2 = (poly_eval(poly, x - h) - 2.0 * poly_eval(poly, x)
                    + poly_eval(poly, x + h))
                    / (h * h);
                if d2 < -1e-8 {
                    return Err(Error::InvalidArgument(format!(
                        "{name} is not convex near s = {x:.4} (second difference {d2:.3e})"
                    )));
                }
            }
        }
        Ok(Potential {
            enabled: true,
            c,
            e,
            c1,
            e1,
            c2,
            e2,
            s_star,
            clamp_count: AtomicU64::new(0),
        })
    }

    /// The quartic well psi_c(s) = 63 s^2, psi_e(s) = -16 s^4
    /// + 21.33333333333 s^3 + 57 s^2, global minimum at s = 0.750025.
    pub fn quartic_well() -> Potential {
        Potential::new(
            vec![0.0, 0.0, 63.0],
            vec![0.0, 0.0, 57.0, 21.33333333333, -16.0],
            0.750025,
        )
        .expect("shipped quartic split is convex")
    }

    /// Potential switched off: psi and both derivatives evaluate to zero.
    /// The well location is still carried for scenarios that pin boundary
    /// values at s*.
    pub fn disabled(s_star: f64) -> Potential {
        Potential {
            enabled: false,
            c: vec![],
            e: vec![],
            c1: vec![],
            e1: vec![],
            c2: vec![],
            e2: vec![],
            s_star,
            clamp_count: AtomicU64::new(0),
        }
    }

    pub fn enabled(&self) -> bool {
        self.enabled
    }

    pub fn s_star(&self) -> f64 {
        self.s_star
    }

    /// How many evaluations had to clamp their input so far.
    pub fn clamp_count(&self) -> u64 {
        self.clamp_count.load(Ordering::Relaxed)
    }

    pub fn reset_clamp_count(&self) {
        self.clamp_count.store(0, Ordering::Relaxed);
    }

    fn clamp(&self, s: f64) -> (f64, bool) {
        let lo = S_MIN + CLAMP_MARGIN;
        let hi = S_MAX - CLAMP_MARGIN;
        if s < lo {
            self.clamp_count.fetch_add(1, Ordering::Relaxed);
            (lo, true)
        } else if s > hi {
            self.clamp_count.fetch_add(1, Ordering::Relaxed);
            (hi, true)
        } else {
            (s, false)
        }
    }

    /// Evaluate psi, psi_c', psi_e' at s (clamped into the admissible
    /// interval if needed).
    pub fn eval(&self, s: f64) -> Result<PsiEval> {
        if !s.is_finite() {
            return Err(Error::InvalidArgument(format!("potential evaluated at s = {s}")));
        }
        if !self.enabled {
            return Ok(PsiEval { psi: 0.0, psi_c_prime: 0.0, psi_e_prime: 0.0, clamped: false });
        }
        let (s, clamped) = self.clamp(s);
        Ok(PsiEval {
            psi: poly_eval(&self.c, s) - poly_eval(&self.e, s),
            psi_c_prime: poly_eval(&self.c1, s),
            psi_e_prime: poly_eval(&self.e1, s),
            clamped,
        })
    }

    /// Second derivative of the convex part (used by the Newton path of the
    /// implicit s-update). Nonnegative by the convexity check.
    pub fn psi_c_second(&self, s: f64) -> f64 {
        if !self.enabled {
            return 0.0;
        }
        let (s, _) = self.clamp(s);
        poly_eval(&self.c2, s)
    }

    pub fn psi_e_second(&self, s: f64) -> f64 {
        if !self.enabled {
            return 0.0;
        }
        let (s, _) = self.clamp(s);
        poly_eval(&self.e2, s)
    }

    /// If psi_c' is affine (psi_c quadratic), return (a, b) with
    /// psi_c'(s) = a + b s; the implicit s-update is then a single linear
    /// solve instead of a Newton loop.
    pub fn convex_derivative_affine(&self) -> Option<(f64, f64)> {
        if !self.enabled {
            return Some((0.0, 0.0));
        }
        if self.c1.len() <= 2 {
            let a = self.c1.first().copied().unwrap_or(0.0);
            let b = self.c1.get(1).copied().unwrap_or(0.0);
            Some((a, b))
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quartic_values() {
        let p = Potential::quartic_well();
        let at0 = p.eval(0.0).unwrap();
        assert_eq!(at0.psi, 0.0);
        assert_eq!(at0.psi_c_prime, 0.0);
        assert_eq!(at0.psi_e_prime, 0.0);

        // psi(1) = 63 - (-16 + 21.33333333333 + 57).
        let at1 = p.eval(1.0 - CLAMP_MARGIN).unwrap();
        assert!((at1.psi - 0.66666666667).abs() < 1e-4, "psi(1) = {}", at1.psi);

        // psi'(s) vanishes to within 1e-3 at the quoted well location.
        let e = p.eval(p.s_star()).unwrap();
        assert!((e.psi_c_prime - e.psi_e_prime).abs() < 1e-3);
        // And the well really is the minimum among the critical points.
        let well = p.eval(0.750025).unwrap().psi;
        for s in [-0.4, -0.2, 0.0, 0.25, 0.5, 0.9] {
            assert!(p.eval(s).unwrap().psi >= well - 1e-12, "psi({s}) below the well");
        }
    }

    #[test]
    fn quartic_second_derivatives_at_endpoints() {
        // psi_e'' = -192 s^2 + 128 s + 114 takes its interval minimum at an
        // endpoint: 2 at s = -1/2 and 50 at s = 1.
        let p = Potential::quartic_well();
        assert!((p.psi_e_second(S_MIN + CLAMP_MARGIN) - 2.0).abs() < 1e-3);
        assert!((p.psi_e_second(S_MAX - CLAMP_MARGIN) - 50.0).abs() < 1e-3);
        assert_eq!(p.psi_c_second(0.3), 126.0);
    }

    #[test]
    fn disabled_evaluates_to_zero() {
        let p = Potential::disabled(0.75);
        for s in [-0.4, 0.0, 0.7, 2.0] {
            let e = p.eval(s).unwrap();
            assert_eq!((e.psi, e.psi_c_prime, e.psi_e_prime), (0.0, 0.0, 0.0));
        }
        assert_eq!(p.clamp_count(), 0);
    }

    #[test]
    fn clamping_counts() {
        let p = Potential::quartic_well();
        assert!(!p.eval(0.5).unwrap().clamped);
        assert!(p.eval(1.5).unwrap().clamped);
        assert!(p.eval(-0.7).unwrap().clamped);
        assert_eq!(p.clamp_count(), 2);
        // Clamped evaluations agree with the margin point.
        let a = p.eval(1.5).unwrap();
        let b = p.eval(S_MAX - CLAMP_MARGIN).unwrap();
        assert_eq!(a.psi, b.psi);
        p.reset_clamp_count();
        assert_eq!(p.clamp_count(), 0);
    }

    #[test]
    fn rejects_bad_input() {
        let p = Potential::quartic_well();
        assert!(p.eval(f64::NAN).is_err());
        // A concave "convex part" must be rejected.
        assert!(Potential::new(vec![0.0, 0.0, -1.0], vec![0.0], 0.75).is_err());
    }

    #[test]
    fn convex_split_decrease_inequality() {
        // psi(b) - psi(a) <= (psi_c'(b) - psi_e'(a)) (b - a): convexity of
        // both parts, pointwise.
        let p = Potential::quartic_well();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..100 {
            let a = rng.gen_range(-0.45..0.95);
            let b = rng.gen_range(-0.45..0.95);
            let ea = p.eval(a).unwrap();
            let eb = p.eval(b).unwrap();
            let lhs = eb.psi - ea.psi;
            let rhs = (eb.psi_c_prime - ea.psi_e_prime) * (b - a);
            assert!(lhs <= rhs + 1e-10, "a = {a}, b = {b}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn affine_derivative_detection() {
        assert_eq!(Potential::quartic_well().convex_derivative_affine(), Some((0.0, 126.0)));
        let quartic_c = Potential::new(vec![0.0, 0.0, 0.0, 0.0, 1.0], vec![0.0], 0.5).unwrap();
        assert_eq!(quartic_c.convex_derivative_affine(), None);
        assert_eq!(Potential::disabled(0.75).convex_derivative_affine(), Some((0.0, 0.0)));
    }
}
