use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

/// Field used by the simplex code. `f64` compares with tolerances, exact
/// rationals compare against zero.
pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Send
    + Sync
    + Zero
    + One
    + Signed
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Smallest magnitude accepted as a pivot element.
    fn pivot_tol() -> Self;
    /// Slack allowed on primal feasibility and reduced-cost optimality.
    fn feas_tol() -> Self;
    /// Pivots between refactorizations of the basis inverse; `None` disables it.
    fn refactor_every() -> Option<usize>;
    fn from_f64_lossy(x: f64) -> Self;
    fn to_f64_lossy(&self) -> f64;
}

impl Scalar for f64 {
    fn pivot_tol() -> Self {
        1e-9
    }
    fn feas_tol() -> Self {
        1e-10
    }
    fn refactor_every() -> Option<usize> {
        Some(64)
    }
    fn from_f64_lossy(x: f64) -> Self {
        x
    }
    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn pivot_tol() -> Self {
        BigRational::zero()
    }
    fn feas_tol() -> Self {
        BigRational::zero()
    }
    fn refactor_every() -> Option<usize> {
        None
    }
    fn from_f64_lossy(x: f64) -> Self {
        BigRational::from_f64(x).unwrap_or_else(BigRational::zero)
    }
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// `num / den` as an exact rational.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}
