//! Dense complex linear algebra: the matrix type, ordered Hermitian
//! eigendecomposition, spectral functions, polar factorisations and LU.

mod eigen;
mod lu;
mod matrix;
mod polar;

pub use eigen::{eigh_desc, exp_herm, inv_sqrt_pd, log_pd, powi_herm, sqrt_pd, EigenDecomposition};
pub(crate) use eigen::ensure_strictly_decreasing;
pub use lu::{det, inverse};
pub use matrix::{max_abs_diff, norm_sq, CMatrix};
pub use polar::{polar_left, polar_right};
