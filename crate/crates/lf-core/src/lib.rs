//! Light field data model: a dense `(u, v, x, y, c)` container, its planar
//! foldings, color conversion, cubic resampling, augmentation transforms,
//! quality metrics and file formats.

pub mod color;
mod error;
mod fold;
mod image2d;
pub mod io;
mod lightfield;
pub mod metrics;
pub mod resample;
mod transform;

pub use color::{luma, rgb_to_ycbcr, ycbcr_to_rgb};
pub use error::{LfError, Result};
pub use fold::{fold_to_plane, unfold_from_plane, BatchedImages, PlaneKind};
pub use image2d::Image2D;
pub use io::{load_lf, save_lf};
pub use lightfield::{LfDims, LightField4D};
pub use metrics::{lf_metrics, psnr, ssim, LfScores};
pub use resample::{bicubic_resample_sai, Scale};
pub use transform::{apply_transform, LfTransform, Rotation};
