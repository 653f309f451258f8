//! Approximate identities on groups with global charts: kernels, local
//! partitions, numerical convolution, Fourier summation and convergence
//! experiments.

pub mod config;
pub mod convolution;
pub mod error;
pub mod experiments;
pub mod fourier;
pub mod groups;
pub mod kernels;
pub mod partitions;
pub mod quadrature;

pub use config::Config;
pub use convolution::{convolve, ConvolutionProblem, Target, TargetFunction};
pub use error::{Error, Result};
pub use experiments::{run_convergence, ConvergenceReport, SweepSpec, Verdict};
pub use groups::{GroupChart, GroupKind, GroupPoint};
pub use kernels::{Kernel, KernelFamily, KernelKind, KernelParam};
pub use partitions::{LocalPartition, PartitionMasses};
pub use quadrature::{Estimate, QuadratureSpec};
