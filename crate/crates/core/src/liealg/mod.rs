//! so(n) kernel: wedge basis, bracket, Killing metric, the symmetric pair
//! `𝔨 + 𝔡`, adjoint action, exponential and centralizers.

mod centralizer;
mod pair;
mod rotation;
mod skew;

pub use centralizer::{
    ad_inverse, ad_matrix, centralizer_basis, AdAction, AD_INVERSE_RESIDUAL, RANK_TOL,
};
pub use pair::{split, SymmetricPairSplit};
pub use rotation::{adjoint, exp_so, orthogonality_defect, Rotation};
pub(crate) use rotation::{adjoint_unchecked, coadjoint_unchecked};
pub use skew::{
    algebra_dim, bracket, hat, killing, pair_index, vee, wedge, wedge_pairs, SkewMatrix, MAX_DIM,
};
