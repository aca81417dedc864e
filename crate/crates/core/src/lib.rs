//! Certified min-entropy and Rényi entropy bounds for independent discrete
//! sources with a known Shannon-entropy deficiency.
//!
//! - [`entropy`]: Shannon, Rényi and min-entropy of finite distributions.
//! - [`extremal`]: two-level distributions, the worst case for a given
//!   Shannon entropy, and the worst Rényi entropy they imply.
//! - [`tails`]: exact surprise MGFs, sub-exponential envelopes, tail bounds
//!   for sums of surprises and min-entropy certificates.
//! - [`oracle`]: brute-force and Monte Carlo checks of the above.
//! - [`ingest`]: sample files to empirical deficiency to certificate.
//! - [`table`]: curve tables written by the command-line tool.

pub mod alphabet;
pub mod entropy;
pub mod error;
pub mod extremal;
pub mod ingest;
pub mod oracle;
pub mod table;
pub mod tails;

pub use alphabet::Alphabet;
pub use entropy::{DiscreteDistribution, EntropyReport};
pub use error::{Error, Result};
pub use extremal::{Regime, TwoLevelDistribution};
pub use tails::{Certificate, Method, SubExpParams, TailQuery};
