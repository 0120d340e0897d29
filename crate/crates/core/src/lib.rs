//! Numerical laboratory for linear eigenvalue statistics of random matrices
//! with variance profiles.
//!
//! The objects of study are matrices `Y = A ∘ X` where `A` is a deterministic
//! non-negative "standard deviation profile", `X` is a random matrix with
//! i.i.d. or symmetric entries, and `∘` is the Hadamard (entrywise) product.
//! The crate provides:
//!
//! - [`profiles`]: constructors for the profile families that matter in
//!   practice (separable, sampled, band, Erdős–Rényi, cyclic block patterns,
//!   anti-diagonal bands), structural predicates (broad connectivity, super
//!   regularity), and a plain-text save/load format.
//! - [`entrylaws`]: entry distributions of the form `u(Z)` for standard
//!   Gaussian `Z` with bounded `|u'| ≤ c1`, `|u''| ≤ c2`, plus deterministic
//!   counter-based sampling of full matrices.
//! - [`cycles`]: exact distinct-index cycle sums
//!   `S_k(A) = Σ a²_{i1 i2} a²_{i2 i3} ⋯ a²_{ik i1}` over tuples of pairwise
//!   distinct indices, by brute force and by pruned DFS over the sparse
//!   support, and exact `|I_k|` counts.
//! - [`simulate`]: trace statistics `Tr P_k(A ∘ X)` via matrix powers, Monte
//!   Carlo replication, and the standardized statistic `Z_k`.
//! - [`bounds`]: every ingredient of the total-variation bound
//!   `max(a_ij)² k⁵ √n b_n^{k-1} / S_k(A)`, spectral-norm concentration
//!   checks, and the variance lower bound `Var(Tr (A∘X)^k) ≥ S_k(A)`.
//! - [`gof`]: goodness-of-fit of standardized samples against the standard
//!   normal (Kolmogorov–Smirnov, binned total variation, Wasserstein-1).
//! - [`embeddings`]: block embeddings that turn sample-covariance and
//!   matrix-product statistics into `A ∘ Y` form with exact trace identities.
//!
//! Everything is deterministic given the seeds recorded in the reports;
//! parallel execution never changes results.

pub mod bounds;
pub mod cycles;
pub mod embeddings;
pub mod entrylaws;
pub mod error;
pub mod gof;
pub(crate) mod normal;
pub mod profiles;
pub mod rng;
pub mod simulate;

pub use bounds::{BoundReport, NormCheckReport, VarianceCheckReport};
pub use cycles::{count_ik, CycleMethod, CycleSumResult};
pub use embeddings::{EmbeddingKind, EmbeddingPlan};
pub use entrylaws::{EntryLaw, EnsembleKind, MatrixEnsemble};
pub use error::{Error, Result};
pub use gof::{BinSpec, GofReport};
pub use profiles::{ErdosRenyiConfig, FamilyTag, StdDevProfile};
pub use simulate::{PolynomialSpec, SampleBatch};

/// Version string embedded in every serialized report and CSV artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
