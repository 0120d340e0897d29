//! Block embeddings that express sample-covariance and matrix-product
//! statistics as trace polynomials of a single host matrix `A ∘ Y`.
//!
//! Covariance: the host is the `(n+m) × (n+m)` symmetric matrix with the
//! rectangular factor in the off-diagonal blocks. Its square is block
//! diagonal in `XXᵀ` and `XᵀX`, so
//!
//! ```text
//! Tr Q_{2k}(host) = 2 Tr P_k(XXᵀ) + (m - n) c_0,    Q_{2k}(x) = P_k(x²)
//! ```
//!
//! Product: `m` factors sit on the cyclic superdiagonal blocks, the m-th
//! power is block diagonal in the cyclic rotations of `X_1 X_2 ⋯ X_m`, and
//!
//! ```text
//! Tr Q_{mk}(host) = m Tr P_k(X_1 ⋯ X_m) + c_0 (Σ n_r - m n_1)
//! ```
//!
//! with `Q_{mk}(x) = P_k(x^m)`; rectangular factors are rotated so the
//! first dimension is minimal, and the `c_0` correction accounts for the
//! zero eigenvalues the larger rotations pick up. The `c_0` bookkeeping is
//! centralized in [`verify_trace_identity`]; standardized statistics cancel
//! constants by centering and never see it.

use crate::entrylaws::{EnsembleKind, MatrixEnsemble};
use crate::error::{Error, Result};
use crate::profiles::{FamilyTag, StdDevProfile};
use crate::simulate::{run_batch, trace_poly, PolynomialSpec, SampleBatch};
use ndarray::{s, Array2};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    Covariance,
    Product,
}

/// A planned embedding: block layout, composed polynomial, host profile.
#[derive(Debug, Clone)]
pub struct EmbeddingPlan {
    pub kind: EmbeddingKind,
    /// `(n, m)` for covariance; the cyclic factor dimensions for products.
    pub block_dims: Vec<usize>,
    pub base_poly: PolynomialSpec,
    pub composed_poly: PolynomialSpec,
    pub host_profile: StdDevProfile,
}

impl EmbeddingPlan {
    pub fn host_dim(&self) -> usize {
        self.host_profile.nrows()
    }

    /// The ensemble kind the host must be sampled with: symmetric for the
    /// covariance embedding (the lower block is the transpose), iid for
    /// products (all factors independent).
    pub fn required_kind(&self) -> EnsembleKind {
        match self.kind {
            EmbeddingKind::Covariance => EnsembleKind::Symmetric,
            EmbeddingKind::Product => EnsembleKind::Iid,
        }
    }
}

/// Host plan for `Z_k(XXᵀ)` with an `n × m` factor.
pub fn plan_covariance(n: usize, m: usize, p: &PolynomialSpec) -> Result<EmbeddingPlan> {
    if n == 0 || m == 0 {
        return Err(Error::invalid("covariance dims", "both dimensions must be positive"));
    }
    let host = n + m;
    let entries = Array2::from_shape_fn((host, host), |(i, j)| {
        let top_i = i < n;
        let top_j = j < n;
        if top_i != top_j {
            1.0
        } else {
            0.0
        }
    });
    Ok(EmbeddingPlan {
        kind: EmbeddingKind::Covariance,
        block_dims: vec![n, m],
        base_poly: p.clone(),
        composed_poly: p.compose_power(2)?,
        host_profile: StdDevProfile::from_dense(entries, FamilyTag::BlockSparse)?,
    })
}

/// Host plan for `Z_k(X_1 ⋯ X_m)` with factor `r` of shape
/// `dims[r] × dims[r+1 mod m]`. The dimension list is rotated so that
/// `dims[0]` is minimal.
pub fn plan_product(dims: &[usize], p: &PolynomialSpec) -> Result<EmbeddingPlan> {
    if dims.len() < 2 {
        return Err(Error::invalid("product dims", "need at least 2 factors"));
    }
    if dims.contains(&0) {
        return Err(Error::invalid("product dims", "all dimensions must be positive"));
    }
    let m = dims.len();
    let argmin = dims
        .iter()
        .enumerate()
        .min_by_key(|&(_, &d)| d)
        .map(|(i, _)| i)
        .unwrap();
    let rotated: Vec<usize> = (0..m).map(|r| dims[(argmin + r) % m]).collect();

    let host: usize = rotated.iter().sum();
    let offsets: Vec<usize> = rotated
        .iter()
        .scan(0usize, |acc, &d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect();
    let mut entries = Array2::zeros((host, host));
    for r in 0..m {
        let rn = (r + 1) % m;
        let (row0, rows) = (offsets[r], rotated[r]);
        let (col0, cols) = (offsets[rn], rotated[rn]);
        for i in 0..rows {
            for j in 0..cols {
                entries[(row0 + i, col0 + j)] = 1.0;
            }
        }
    }
    Ok(EmbeddingPlan {
        kind: EmbeddingKind::Product,
        block_dims: rotated,
        base_poly: p.clone(),
        composed_poly: p.compose_power(m)?,
        host_profile: StdDevProfile::from_dense(entries, FamilyTag::BlockSparse)?,
    })
}

/// Places the factor blocks into the host layout. For covariance the single
/// block goes to the top-right with its transpose mirrored; for products
/// block `r` goes to cyclic position `(r, r+1 mod m)`.
pub fn assemble_host(plan: &EmbeddingPlan, x_blocks: &[Array2<f64>]) -> Result<Array2<f64>> {
    let host = plan.host_dim();
    let mut y = Array2::zeros((host, host));
    match plan.kind {
        EmbeddingKind::Covariance => {
            let (n, m) = (plan.block_dims[0], plan.block_dims[1]);
            let [x] = x_blocks else {
                return Err(Error::invalid(
                    "blocks",
                    format!("covariance takes 1 block, got {}", x_blocks.len()),
                ));
            };
            if x.dim() != (n, m) {
                return Err(Error::DimensionMismatch {
                    expected: (n, m),
                    got: x.dim(),
                });
            }
            y.slice_mut(s![..n, n..]).assign(x);
            y.slice_mut(s![n.., ..n]).assign(&x.t());
        }
        EmbeddingKind::Product => {
            let dims = &plan.block_dims;
            let mcount = dims.len();
            if x_blocks.len() != mcount {
                return Err(Error::invalid(
                    "blocks",
                    format!("product takes {} blocks, got {}", mcount, x_blocks.len()),
                ));
            }
            let offsets: Vec<usize> = dims
                .iter()
                .scan(0usize, |acc, &d| {
                    let o = *acc;
                    *acc += d;
                    Some(o)
                })
                .collect();
            for (r, x) in x_blocks.iter().enumerate() {
                let rn = (r + 1) % mcount;
                if x.dim() != (dims[r], dims[rn]) {
                    return Err(Error::DimensionMismatch {
                        expected: (dims[r], dims[rn]),
                        got: x.dim(),
                    });
                }
                y.slice_mut(s![
                    offsets[r]..offsets[r] + dims[r],
                    offsets[rn]..offsets[rn] + dims[rn]
                ])
                .assign(x);
            }
        }
    }
    Ok(y)
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceIdentityReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs - rhs| / (1 + |rhs|)`.
    pub residual: f64,
}

/// Evaluates both sides of the embedding trace identity on concrete factor
/// blocks and returns the relative residual.
pub fn verify_trace_identity(
    plan: &EmbeddingPlan,
    x_blocks: &[Array2<f64>],
) -> Result<TraceIdentityReport> {
    let y = assemble_host(plan, x_blocks)?;
    let lhs = trace_poly(&y, &plan.composed_poly)?;
    let c0 = plan.base_poly.c0();
    let rhs = match plan.kind {
        EmbeddingKind::Covariance => {
            let (n, m) = (plan.block_dims[0], plan.block_dims[1]);
            let x = &x_blocks[0];
            let gram = x.dot(&x.t());
            2.0 * trace_poly(&gram, &plan.base_poly)? + (m as f64 - n as f64) * c0
        }
        EmbeddingKind::Product => {
            let mcount = plan.block_dims.len();
            let mut prod = x_blocks[0].clone();
            for x in &x_blocks[1..] {
                prod = prod.dot(x);
            }
            let total: usize = plan.block_dims.iter().sum();
            let zeros = total as f64 - (mcount * plan.block_dims[0]) as f64;
            mcount as f64 * trace_poly(&prod, &plan.base_poly)? + c0 * zeros
        }
    };
    let residual = (lhs - rhs).abs() / (1.0 + rhs.abs());
    Ok(TraceIdentityReport { lhs, rhs, residual })
}

/// Monte Carlo batch of the embedded statistic: reuses the host profile and
/// the composed polynomial. The ensemble must carry a symmetric
/// unit-variance law and the host kind the plan requires.
pub fn zk_via_embedding(
    plan: &EmbeddingPlan,
    ens: &MatrixEnsemble,
    replicas: usize,
    seed: u64,
) -> Result<SampleBatch> {
    if !ens.law.is_symmetric_unit_variance() {
        let reasons: Vec<String> = ens.law.warnings().iter().map(|w| w.to_string()).collect();
        return Err(Error::NonCompliantLaw {
            name: ens.law.name().to_string(),
            reason: reasons.join("; "),
        });
    }
    if ens.kind != plan.required_kind() {
        return Err(Error::invalid(
            "ensemble kind",
            format!(
                "{:?} embedding requires {:?} host sampling, got {:?}",
                plan.kind,
                plan.required_kind(),
                ens.kind
            ),
        ));
    }
    run_batch(&plan.host_profile, ens, &plan.composed_poly, replicas, seed)
}
