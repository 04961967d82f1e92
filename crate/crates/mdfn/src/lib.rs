//! Light field super-resolution network: parallel fusion blocks over four
//! foldings of the light field, a dynamic-filter upsampler working on
//! micro-lens images, and a residual branch.

mod config;
pub mod dynamic;
mod error;
mod infer;
pub mod model;
mod report;

pub use config::{parse_pairs, MdfnConfig, Upsampler, Variant};
pub use dynamic::{apply_dynamic_filters, FilterGeom};
pub use error::{MdfnError, Result};
pub use infer::{DynamicFilterField, Mdfn, DEFAULT_TILE};
pub use model::{dfb_forward, forward, init_params, mdfb_forward, mdfn_features, param_specs, rb_forward};
pub use report::{count_parameters, ParamReport, ParamRow};
