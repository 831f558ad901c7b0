//! Spectral echolocation on weighted graphs.
//!
//! A graph (or a point cloud turned into one with a Gaussian kernel) is
//! diagonalized, a spectrally truncated wave — or heat, Airy, Schrödinger
//! flow — is launched from a few source vertices, and the time series seen
//! at each vertex are compared to build a refined metric. The metric can be
//! turned back into an affinity, embedded and clustered.
//!
//! ```no_run
//! use spectral_echo::datasets::{gen_two_disks, TwoDisksParams};
//! use spectral_echo::echometric::SynthesisRule;
//! use spectral_echo::pipeline::{run_echo, EchoConfig};
//!
//! let data = gen_two_disks(&TwoDisksParams::default(), 1).unwrap();
//! let run = run_echo(&data.graph, &EchoConfig::new(SynthesisRule::Mean)).unwrap();
//! println!("lambda_1 = {}", run.lambda1);
//! ```

pub mod cli;
pub mod datasets;
pub mod echometric;
pub mod eigen;
pub mod embed;
pub mod error;
pub mod graph;
pub mod io;
pub mod manifest;
pub mod pipeline;
pub mod propagator;
pub mod seeds;

pub use error::{Error, Result};
