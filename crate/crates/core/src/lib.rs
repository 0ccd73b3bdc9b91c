//! Dynamic-texture descriptors built from kernelized spaces of per-frame
//! scattering histograms.
//!
//! A video is turned into a [`KernelSubspace`]:
//!
//! 1. every frame goes through a two-layer Morlet [scattering] transform,
//! 2. each subband is summarized by a histogram ([`histogram`]),
//! 3. frames are compared with a Bhattacharyya product [kernel],
//! 4. Kernel PCA and a Nyström reduction give an orthonormal basis of the
//!    principal feature subspace over a few support frames ([`subspace`]).
//!
//! Descriptors are compared with the basis-invariant Nuclear distance
//! ([`metric`]), averaged with Fréchet means ([`frechet`]) and evaluated with
//! leave-one-out 1-NN / nearest-class-center classification ([`eval`]).

pub mod calibration;
pub mod error;
pub mod eval;
pub mod frechet;
pub mod histogram;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod metric;
pub mod pipeline;
pub mod scattering;
pub mod subspace;
pub mod synth;

pub use calibration::{Calibration, Fingerprint};
pub use error::{KshsError, Result};
pub use eval::{ncc_loo, one_nn_loo, EvalMode, EvalReport, LabeledDescriptorSet};
pub use frechet::{frechet_mean, FrechetConfig, FrechetMeanResult};
pub use histogram::{BinEdges, HistogramMatrix, HistogramVector};
pub use kernel::{kernel_matrix, kernel_vec, GramMatrix};
pub use metric::{nuclear_distance, nuclear_distance_oracle, pairwise_distances, DistanceMatrix};
pub use scattering::{FilterBank, FrameImage, Grid, ScatteringConfig, ScatteringMaps};
pub use subspace::{compute_descriptor, d_se, KernelSubspace, SubspaceParams, SupportStrategy};
