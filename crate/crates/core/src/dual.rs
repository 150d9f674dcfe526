//! Forward-mode differentiation with nested dual numbers.
//!
//! A `Dual<T>` carries a value and one directional derivative. Nesting
//! (`Dual<Dual<f64>>`) gives mixed second derivatives, which is all the
//! curvature engine needs: metric values, first derivatives for the
//! connection, second derivatives for the Riemann tensor.
//!
//! Metric expressions are written once against the [`Real`] trait and are
//! evaluated with `f64`, [`D1`] or [`D2`] depending on how many derivatives
//! the caller wants.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar field usable inside metric expressions.
pub trait Real:
    Copy
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(v: f64) -> Self;

    /// The underlying real value with every infinitesimal part dropped.
    fn re(&self) -> f64;

    /// Applies a scalar function given through its derivatives:
    /// `f(x, k)` must return the k-th derivative at `x`.
    ///
    /// Nesting depth `d` reads derivatives up to order `d`.
    fn lift(self, f: &dyn Fn(f64, usize) -> f64) -> Self;

    fn exp(self) -> Self {
        self.lift(&|x, _| x.exp())
    }

    fn sin(self) -> Self {
        self.lift(&|x, k| match k % 4 {
            0 => x.sin(),
            1 => x.cos(),
            2 => -x.sin(),
            _ => -x.cos(),
        })
    }

    fn cos(self) -> Self {
        self.lift(&|x, k| match k % 4 {
            0 => x.cos(),
            1 => -x.sin(),
            2 => -x.cos(),
            _ => x.sin(),
        })
    }

    fn cosh(self) -> Self {
        self.lift(&|x, k| if k % 2 == 0 { x.cosh() } else { x.sinh() })
    }

    fn sinh(self) -> Self {
        self.lift(&|x, k| if k % 2 == 0 { x.sinh() } else { x.cosh() })
    }

    /// `self^p` for real `p`; only valid for positive base values.
    fn powf(self, p: f64) -> Self {
        self.lift(&move |x, k| {
            let mut coeff = 1.0;
            for j in 0..k {
                coeff *= p - j as f64;
            }
            coeff * x.powf(p - k as f64)
        })
    }

    fn sqrt(self) -> Self {
        self.powf(0.5)
    }

    fn recip(self) -> Self {
        Self::cst(1.0) / self
    }

    fn square(self) -> Self {
        self * self
    }
}

impl Real for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }

    #[inline]
    fn re(&self) -> f64 {
        *self
    }

    #[inline]
    fn lift(self, f: &dyn Fn(f64, usize) -> f64) -> Self {
        f(self, 0)
    }

    fn exp(self) -> Self {
        f64::exp(self)
    }

    fn sin(self) -> Self {
        f64::sin(self)
    }

    fn cos(self) -> Self {
        f64::cos(self)
    }

    fn cosh(self) -> Self {
        f64::cosh(self)
    }

    fn sinh(self) -> Self {
        f64::sinh(self)
    }

    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }

    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
}

/// A value together with one directional derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub du: T,
}

/// First-order duals.
pub type D1 = Dual<f64>;
/// Second-order (hyper-)duals: two independent infinitesimals.
pub type D2 = Dual<Dual<f64>>;

impl<T: Real> Dual<T> {
    pub fn new(re: T, du: T) -> Self {
        Dual { re, du }
    }

    pub fn constant(re: T) -> Self {
        Dual {
            re,
            du: T::cst(0.0),
        }
    }
}

impl D1 {
    /// A coordinate seeded with unit derivative when `active`.
    pub fn seed(x: f64, active: bool) -> Self {
        Dual::new(x, if active { 1.0 } else { 0.0 })
    }
}

impl D2 {
    /// A coordinate seeded along the inner direction (`inner`) and the
    /// outer direction (`outer`).
    pub fn seed(x: f64, inner: bool, outer: bool) -> Self {
        Dual::new(D1::seed(x, inner), D1::seed(if outer { 1.0 } else { 0.0 }, false))
    }

    /// (value, inner derivative, outer derivative, mixed second derivative)
    pub fn parts(&self) -> (f64, f64, f64, f64) {
        (self.re.re, self.re.du, self.du.re, self.du.du)
    }
}

impl<T: Real> Add for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Dual::new(self.re + o.re, self.du + o.du)
    }
}

impl<T: Real> Sub for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Dual::new(self.re - o.re, self.du - o.du)
    }
}

impl<T: Real> Mul for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Dual::new(self.re * o.re, self.re * o.du + self.du * o.re)
    }
}

impl<T: Real> Div for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = T::cst(1.0) / o.re;
        let q = self.re * inv;
        Dual::new(q, (self.du - q * o.du) * inv)
    }
}

impl<T: Real> Neg for Dual<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.du)
    }
}

impl<T: Real> Add<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: f64) -> Self {
        Dual::new(self.re + o, self.du)
    }
}

impl<T: Real> Sub<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: f64) -> Self {
        Dual::new(self.re - o, self.du)
    }
}

impl<T: Real> Mul<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: f64) -> Self {
        Dual::new(self.re * o, self.du * o)
    }
}

impl<T: Real> Div<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: f64) -> Self {
        Dual::new(self.re / o, self.du / o)
    }
}

impl<T: Real> Real for Dual<T> {
    fn cst(v: f64) -> Self {
        Dual::constant(T::cst(v))
    }

    fn re(&self) -> f64 {
        self.re.re()
    }

    fn lift(self, f: &dyn Fn(f64, usize) -> f64) -> Self {
        let value = self.re.lift(f);
        let slope = self.re.lift(&|x, k| f(x, k + 1));
        Dual::new(value, self.du * slope)
    }
}

/// Derivative of a scalar function of one variable, exact to rounding.
pub fn derivative(f: impl Fn(D1) -> D1, x: f64) -> (f64, f64) {
    let y = f(D1::seed(x, true));
    (y.re, y.du)
}

/// Value, first and second derivative of a scalar function of one variable.
pub fn second_derivative(f: impl Fn(D2) -> D2, x: f64) -> [f64; 3] {
    let y = f(D2::seed(x, true, true));
    let (v, d_inner, _, dd) = y.parts();
    [v, d_inner, dd]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly<S: Real>(x: S) -> S {
        x * x * x * 2.0 - x * 3.0 + 1.0
    }

    #[test]
    fn polynomial_derivatives_are_exact() {
        let [v, d1, d2] = second_derivative(poly, 1.5);
        assert_eq!(v, 2.0 * 3.375 - 4.5 + 1.0);
        assert_eq!(d1, 6.0 * 2.25 - 3.0);
        assert_eq!(d2, 12.0 * 1.5);
    }

    #[test]
    fn transcendental_chain_rule() {
        let f = |x: D2| (x.sin() * x.cosh()).exp();
        let x = 0.7_f64;
        let [v, d1, d2] = second_derivative(f, x);
        let g = |x: f64| (x.sin() * x.cosh()).exp();
        let h = 1e-4;
        let fd1 = (g(x + h) - g(x - h)) / (2.0 * h);
        let fd2 = (g(x + h) - 2.0 * g(x) + g(x - h)) / (h * h);
        assert!((v - g(x)).abs() < 1e-15);
        assert!((d1 - fd1).abs() < 1e-7);
        assert!((d2 - fd2).abs() < 1e-5);
    }

    #[test]
    fn quotient_and_powers() {
        let (v, d) = derivative(|x| x.recip() + x.sqrt() + x.powf(3.0), 4.0);
        assert!((v - (0.25 + 2.0 + 64.0)).abs() < 1e-14);
        assert!((d - (-1.0 / 16.0 + 0.25 + 48.0)).abs() < 1e-13);
    }

    #[test]
    fn mixed_partials_from_two_directions() {
        // f(x, y) = x^2 y^3, seeded x along the inner and y along the outer direction.
        let x = D2::seed(2.0, true, false);
        let y = D2::seed(3.0, false, true);
        let f = x * x * y * y * y;
        let (v, dx, dy, dxy) = f.parts();
        assert_eq!(v, 108.0);
        assert_eq!(dx, 2.0 * 2.0 * 27.0);
        assert_eq!(dy, 4.0 * 27.0);
        assert_eq!(dxy, 2.0 * 2.0 * 3.0 * 9.0);
    }
}
