use num_traits::{Float, NumAssignOps, NumCast};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar the whole crate is generic over.
///
/// Anything satisfying `num_traits::Float` with the usual plumbing bounds
/// qualifies; `f32` and `f64` are the intended instantiations. The stated
/// tolerances in this crate assume `f64`; `f32` works but loosens them.
pub trait Real:
    Float + NumCast + NumAssignOps + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy cast from an `f64` constant. Panics only if the target type
    /// cannot represent ordinary finite literals, which no float type hits.
    fn of(x: f64) -> Self {
        NumCast::from(x).expect("float constant must be representable")
    }

    fn to_f64_lossy(self) -> f64 {
        NumCast::from(self).map_or(f64::NAN, |x: f64| x)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand used throughout the crate for `T::of` at call sites where the
/// target type is inferred.
pub fn real<T: Real>(x: f64) -> T {
    T::of(x)
}
