//! Densely sampled light-field reconstruction from a coarse set of rectified
//! multiview images.
//!
//! The pipeline treats every epipolar-plane image (EPI) of the light field as
//! an inpainting problem: measured views occupy a sparse subset of EPI rows,
//! and the missing rows are recovered by iterative hard thresholding in a
//! shear-adapted directional frame whose elements align with the straight
//! lines that scene points trace through an EPI.
//!
//! Module layout:
//!
//! - [`fft`]: plan-caching FFT helpers (all convolutions here are circular).
//! - [`filterbank`]: 1D scaling/wavelet cascades and the 2D directional fan
//!   window from which the frame elements are assembled.
//! - [`shearlet`]: the directional frame itself — construction, digital shear,
//!   forward/inverse transforms, frame diagnostics.
//! - [`reconstruct`]: masked-EPI inpainting by iterative hard thresholding
//!   with a linear threshold decay and adaptive step size.
//! - [`lightfield`]: light-field container, EPI slicing, reconstruction
//!   drivers, refocusing, PSNR.
//! - [`dataset`]: manifests, image/raw-video I/O, float maps, system cache.
//! - [`harness`]: synthetic ground-truth generation and leave-N-out
//!   evaluation reports.

pub mod dataset;
pub mod fft;
pub mod filterbank;
pub mod harness;
pub mod lightfield;
pub mod reconstruct;
pub mod shearlet;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A 1D filter failed a structural requirement (empty taps, wrong DC gain, …).
    #[error("invalid filter: {0}")]
    Filter(String),

    /// Two grids that must agree in shape do not.
    #[error("grid size mismatch: expected {expected:?}, got {got:?}")]
    GridMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    /// Invalid argument combinations that are not shape mismatches.
    #[error("invalid parameter: {0}")]
    Params(String),

    /// The frame function has a (near-)zero sample, so no stable dual exists.
    #[error("singular frame: min |frame function| = {min:.3e}")]
    SingularFrame { min: f64 },

    /// The iteration's data residual grew past the divergence guard.
    #[error("iteration diverged at n={iteration}: residual {residual:.3e} > 10 x reference {reference:.3e}")]
    Diverged {
        iteration: usize,
        residual: f64,
        reference: f64,
    },

    /// Reconstruction failure with the EPI coordinates attached.
    #[error("EPI (channel {channel}, slice {slice}, scanline {scanline}): {source}")]
    Epi {
        channel: usize,
        slice: usize,
        scanline: usize,
        #[source]
        source: Box<Error>,
    },

    /// Manifest or dataset structural problems.
    #[error("dataset: {0}")]
    Dataset(String),

    /// System-cache format problems; the caller should rebuild instead.
    #[error("system cache: {0}")]
    Cache(String),

    #[error("I/O on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wraps an I/O error with the path it concerns.
    pub fn io(path: impl Into<std::path::PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
