//! The three dynamical systems under study and their exact orbit
//! representations.

pub mod binary;
pub mod bits;
pub mod cf_fast;
pub mod cf_point;
pub mod model;
pub mod precision;

pub use binary::BinaryOrbit;
pub use bits::{BitBuf, BitSource};
pub use cf_fast::CfDigitStream;
pub use cf_point::CFPoint;
pub use model::{
    gauss_cdf, gauss_inverse_cdf, sample_doubling_orbit, sample_gauss_point, sample_gauss_seed,
    sample_mp_point, GaussF64Orbit, MapKind, MpOrbit, ValueStream,
};
pub use precision::{mp_derivative, mp_in_right_branch, mp_step, MpAlpha, PrecisionReal};
