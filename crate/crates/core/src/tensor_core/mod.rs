//! Point-wise linear algebra and differentiation for small Lorentzian metrics.

mod derive;
mod dual;
mod mat4;
mod sym;

pub use derive::{derive, DerivativeConfig, DomainBox, FnField, ScalarField, Scheme};
pub use dual::{lift, seed, values, Dual, Real};
pub use mat4::{
    cofactor_inverse, congruence, inverse_with_tangent, scale4, tangent4, to_sym, value4, zero4, M4,
};
pub use sym::{
    inverse_residual, invert_symmetric, invert_symmetric_with, signature, InversionConfig,
    Signature, SymMatrix, NEAR_ZERO_EIGEN,
};
