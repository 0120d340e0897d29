//! Standard deviation profiles: the deterministic non-negative matrix `A`
//! in `Y = A ∘ X`, together with every profile family used by the
//! experiments and the structural predicates on its support.
//!
//! Profiles are immutable after construction. Storage is dense by default
//! and switches to a per-row coordinate list when fewer than 10% of entries
//! are nonzero; the DFS cycle-sum engine consumes that adjacency form
//! directly.

mod io;
mod predicates;

pub use predicates::{
    broad_condition_iii_holds_for, is_broadly_connected, is_broadly_connected_with,
    is_super_regular, is_super_regular_with, super_condition_iii_worst_rows, PredicateReport,
    Witness,
};

use crate::cycles;
use crate::error::{Error, Result};
use crate::rng::CounterRng;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Density below which a profile is stored as per-row coordinate lists.
const SPARSE_THRESHOLD: f64 = 0.10;

/// Provenance tag for a profile's construction recipe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyTag {
    AllOnes,
    Separable,
    Sampled,
    BandPeriodic,
    BandNonperiodic,
    ErdosRenyi,
    BlockSparse,
    AntiDiagonal,
    #[serde(rename = "remark42-i")]
    Remark42I,
    #[serde(rename = "remark42-ii")]
    Remark42II,
    #[serde(rename = "remark42-iii")]
    Remark42III,
    Custom,
}

#[derive(Debug, Clone)]
enum Storage {
    Dense(Array2<f64>),
    /// Per-row sorted `(col, value)` lists; value is the raw entry `a_ij`.
    Sparse {
        rows: Vec<Vec<(u32, f64)>>,
        cols: usize,
        nnz: usize,
    },
}

/// A deterministic non-negative matrix of entrywise standard deviations.
#[derive(Debug, Clone)]
pub struct StdDevProfile {
    storage: Storage,
    nrows: usize,
    ncols: usize,
    symmetric: bool,
    family: FamilyTag,
}

impl StdDevProfile {
    /// Wraps a dense matrix after validating non-negativity and finiteness.
    /// Symmetry is detected exactly; sparse storage is chosen automatically.
    pub fn from_dense(entries: Array2<f64>, family: FamilyTag) -> Result<Self> {
        let (n, m) = entries.dim();
        if n == 0 || m == 0 {
            return Err(Error::invalid("profile dims", "dimensions must be positive"));
        }
        let mut nnz = 0usize;
        for &v in entries.iter() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(
                    "profile entry",
                    format!("entries must be finite and non-negative, got {v}"),
                ));
            }
            if v != 0.0 {
                nnz += 1;
            }
        }
        let symmetric = n == m && {
            let mut sym = true;
            'outer: for i in 0..n {
                for j in (i + 1)..n {
                    if entries[(i, j)] != entries[(j, i)] {
                        sym = false;
                        break 'outer;
                    }
                }
            }
            sym
        };
        let storage = if (nnz as f64) < SPARSE_THRESHOLD * (n as f64) * (m as f64) {
            let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
            for ((i, j), &v) in entries.indexed_iter() {
                if v != 0.0 {
                    rows[i].push((j as u32, v));
                }
            }
            Storage::Sparse { rows, cols: m, nnz }
        } else {
            Storage::Dense(entries)
        };
        Ok(StdDevProfile {
            storage,
            nrows: n,
            ncols: m,
            symmetric,
            family,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn family(&self) -> FamilyTag {
        self.family
    }

    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(m) => m.iter().filter(|&&v| v != 0.0).count(),
            Storage::Sparse { nnz, .. } => *nnz,
        }
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(m) => m[(i, j)],
            Storage::Sparse { rows, .. } => rows[i]
                .binary_search_by(|&(c, _)| c.cmp(&(j as u32)))
                .map(|idx| rows[i][idx].1)
                .unwrap_or(0.0),
        }
    }

    /// Dense copy of the entries (materializes sparse storage).
    pub fn to_dense(&self) -> Array2<f64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse { rows, cols, .. } => {
                let mut out = Array2::zeros((self.nrows, *cols));
                for (i, row) in rows.iter().enumerate() {
                    for &(j, v) in row {
                        out[(i, j as usize)] = v;
                    }
                }
                out
            }
        }
    }

    pub fn max_entry(&self) -> f64 {
        match &self.storage {
            Storage::Dense(m) => m.iter().fold(0.0_f64, |acc, &v| acc.max(v)),
            Storage::Sparse { rows, .. } => rows
                .iter()
                .flat_map(|r| r.iter().map(|&(_, v)| v))
                .fold(0.0_f64, f64::max),
        }
    }

    /// Row sums of squared entries, `Σ_j a_ij²` per row.
    pub fn row_sq_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows];
        self.for_each_nonzero(|i, _, v| out[i] += v * v);
        out
    }

    /// Column sums of squared entries, `Σ_i a_ij²` per column.
    pub fn col_sq_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        self.for_each_nonzero(|_, j, v| out[j] += v * v);
        out
    }

    pub(crate) fn for_each_nonzero(&self, mut f: impl FnMut(usize, usize, f64)) {
        match &self.storage {
            Storage::Dense(m) => {
                for ((i, j), &v) in m.indexed_iter() {
                    if v != 0.0 {
                        f(i, j, v);
                    }
                }
            }
            Storage::Sparse { rows, .. } => {
                for (i, row) in rows.iter().enumerate() {
                    for &(j, v) in row {
                        f(i, j as usize, v);
                    }
                }
            }
        }
    }

    /// Out-adjacency of the squared profile: for each row `i`, the sorted
    /// list of `(j, a_ij²)` over nonzero entries. This is the walk graph the
    /// cycle-sum DFS runs on.
    pub fn adjacency_squared(&self) -> Vec<Vec<(u32, f64)>> {
        let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); self.nrows];
        self.for_each_nonzero(|i, j, v| adj[i].push((j as u32, v * v)));
        adj
    }

    /// Entrywise scaling by `c ≥ 0`. Band tags are dropped (their entries are
    /// pinned to {0,1}); cyclic block tags survive because only the support
    /// matters for them.
    pub fn scale(&self, c: f64) -> Result<Self> {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::invalid("scale", format!("need c ≥ 0, got {c}")));
        }
        let family = match self.family {
            FamilyTag::Remark42I | FamilyTag::Remark42II | FamilyTag::Remark42III => self.family,
            _ if c == 1.0 => self.family,
            _ => FamilyTag::Custom,
        };
        StdDevProfile::from_dense(self.to_dense() * c, family)
    }

    /// The n×n all-ones profile (diagonal included).
    pub fn all_ones(n: usize) -> Self {
        StdDevProfile::from_dense(Array2::ones((n, n)), FamilyTag::AllOnes)
            .expect("all-ones profile is always valid")
    }

    /// Stable 64-bit fingerprint of dims, symmetry flag, and entry bits.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(self.nrows.to_le_bytes());
        h.update(self.ncols.to_le_bytes());
        h.update([self.symmetric as u8]);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                h.update(self.entry(i, j).to_bits().to_le_bytes());
            }
        }
        let digest = h.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

// ---------------------------------------------------------------------------
// Constructors
// ---------------------------------------------------------------------------

/// Separable profile `a_ij = sqrt(v_i w_j)` from component vectors in (0, 1].
pub fn make_separable(v: &[f64], w: &[f64]) -> Result<StdDevProfile> {
    for (name, vec) in [("v", v), ("w", w)] {
        if vec.is_empty() {
            return Err(Error::invalid("separable factors", format!("{name} is empty")));
        }
        for &x in vec {
            if !(x > 0.0 && x <= 1.0) {
                return Err(Error::invalid(
                    "separable factors",
                    format!("{name} component {x} outside (0, 1]"),
                ));
            }
        }
    }
    if v.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: (v.len(), v.len()),
            got: (v.len(), w.len()),
        });
    }
    let n = v.len();
    let entries = Array2::from_shape_fn((n, n), |(i, j)| (v[i] * w[j]).sqrt());
    StdDevProfile::from_dense(entries, FamilyTag::Separable)
}

/// Sampled profile `a_ij = sqrt(f(i/n, j/n))` for a strictly positive `f`
/// evaluated on the grid `{1/n, ..., n/n}²`.
pub fn make_sampled(f: impl Fn(f64, f64) -> f64, n: usize) -> Result<StdDevProfile> {
    if n == 0 {
        return Err(Error::invalid("size", "n must be positive"));
    }
    let mut entries = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let x = (i + 1) as f64 / n as f64;
            let y = (j + 1) as f64 / n as f64;
            let val = f(x, y);
            if !val.is_finite() || val <= 0.0 {
                return Err(Error::invalid(
                    "sampled function",
                    format!("f({x}, {y}) = {val} is not strictly positive"),
                ));
            }
            entries[(i, j)] = val.sqrt();
        }
    }
    StdDevProfile::from_dense(entries, FamilyTag::Sampled)
}

fn band_support(i: usize, j: usize, n: usize, band: usize, periodic: bool) -> bool {
    let d = i.abs_diff(j);
    if periodic {
        d.min(n - d) <= band
    } else {
        d <= band
    }
}

/// 0/1 band profile of half-width `band`: support `|i-j| ≤ band`, or
/// `min(|i-j|, n-|i-j|) ≤ band` in the periodic (wrap-around) case.
pub fn make_band(n: usize, band: usize, periodic: bool) -> Result<StdDevProfile> {
    if n == 0 {
        return Err(Error::invalid("size", "n must be positive"));
    }
    if band == 0 || band >= n {
        return Err(Error::invalid(
            "band width",
            format!("need 1 ≤ band < n, got band={band}, n={n}"),
        ));
    }
    let entries = Array2::from_shape_fn((n, n), |(i, j)| {
        if band_support(i, j, n, band, periodic) {
            1.0
        } else {
            0.0
        }
    });
    let family = if periodic {
        FamilyTag::BandPeriodic
    } else {
        FamilyTag::BandNonperiodic
    };
    StdDevProfile::from_dense(entries, family)
}

/// Anti-diagonal band: the column-reversed band profile, so the support
/// hugs the anti-diagonal `i + j = n + 1` instead of the main diagonal.
pub fn make_anti_band(n: usize, band: usize, periodic: bool) -> Result<StdDevProfile> {
    if n == 0 {
        return Err(Error::invalid("size", "n must be positive"));
    }
    if band == 0 || band >= n {
        return Err(Error::invalid(
            "band width",
            format!("need 1 ≤ band < n, got band={band}, n={n}"),
        ));
    }
    let entries = Array2::from_shape_fn((n, n), |(i, j)| {
        if band_support(i, n - 1 - j, n, band, periodic) {
            1.0
        } else {
            0.0
        }
    });
    StdDevProfile::from_dense(entries, FamilyTag::AntiDiagonal)
}

/// Profile with an all-ones `block × block` corner and constant `fill`
/// elsewhere; `fill` must lie in [0, 1].
pub fn make_block_sparse(n: usize, block: usize, fill: f64) -> Result<StdDevProfile> {
    if n == 0 || block == 0 || block > n {
        return Err(Error::invalid(
            "block size",
            format!("need 1 ≤ block ≤ n, got block={block}, n={n}"),
        ));
    }
    if !(0.0..=1.0).contains(&fill) {
        return Err(Error::invalid("fill", format!("need fill in [0,1], got {fill}")));
    }
    let entries = Array2::from_shape_fn((n, n), |(i, j)| {
        if i < block && j < block {
            1.0
        } else {
            fill
        }
    });
    StdDevProfile::from_dense(entries, FamilyTag::BlockSparse)
}

/// Counterexample block variants: 5×5 cyclic block patterns (i), (ii) with
/// entries `1/√n`, and the corner pattern (iii) with unscaled 0/1 blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Remark42Variant {
    I,
    II,
    III,
}

/// Builds the three structured block profiles used as CLT counterexamples.
///
/// Variants I and II tile the matrix into a 5×5 grid of `n/5 × n/5` blocks;
/// a block at grid position `(r, c)` is all-ones when `c ≡ r + s (mod 5)`
/// for a shift `s` in `{1, 2}` (variant I) or `{1}` (variant II), and the
/// whole matrix is scaled by `1/√n`. Variant III splits `[n]` at `n/4` and
/// fills every block except the lower-right one with ones, unscaled.
pub fn make_remark42(variant: Remark42Variant, n: usize) -> Result<StdDevProfile> {
    match variant {
        Remark42Variant::I | Remark42Variant::II => {
            if n == 0 || !n.is_multiple_of(5) {
                return Err(Error::invalid(
                    "size",
                    format!("variant {variant:?} needs n divisible by 5, got {n}"),
                ));
            }
            let b = n / 5;
            let shifts: &[usize] = match variant {
                Remark42Variant::I => &[1, 2],
                _ => &[1],
            };
            let scale = 1.0 / (n as f64).sqrt();
            let entries = Array2::from_shape_fn((n, n), |(i, j)| {
                let (br, bc) = (i / b, j / b);
                if shifts.iter().any(|&s| (br + s) % 5 == bc) {
                    scale
                } else {
                    0.0
                }
            });
            let family = match variant {
                Remark42Variant::I => FamilyTag::Remark42I,
                _ => FamilyTag::Remark42II,
            };
            StdDevProfile::from_dense(entries, family)
        }
        Remark42Variant::III => {
            if n == 0 || !n.is_multiple_of(4) {
                return Err(Error::invalid(
                    "size",
                    format!("variant III needs n divisible by 4, got {n}"),
                ));
            }
            let q = n / 4;
            let entries = Array2::from_shape_fn((n, n), |(i, j)| {
                if i < q || j < q {
                    1.0
                } else {
                    0.0
                }
            });
            StdDevProfile::from_dense(entries, FamilyTag::Remark42III)
        }
    }
}

// ---------------------------------------------------------------------------
// Erdős–Rényi adjacency profiles
// ---------------------------------------------------------------------------

/// Configuration for sampling the adjacency matrix of `G(n, p_n)` with the
/// exponent bookkeeping `p_n ≥ n^{-γ}`, `ε_n = n^{-α} p_n^{-1}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ErdosRenyiConfig {
    pub n: usize,
    pub p: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl ErdosRenyiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("size", "n must be positive"));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::invalid("edge probability", format!("need p in (0,1], got {}", self.p)));
        }
        if !(0.0..0.5).contains(&self.gamma) {
            return Err(Error::invalid("gamma", format!("need γ in [0, 1/2), got {}", self.gamma)));
        }
        if !(self.alpha > self.gamma && self.alpha < 0.5) {
            return Err(Error::invalid(
                "alpha",
                format!("need γ < α < 1/2, got α={}, γ={}", self.alpha, self.gamma),
            ));
        }
        if self.p < (self.n as f64).powf(-self.gamma) {
            return Err(Error::invalid(
                "edge probability",
                format!("p = {} below n^-γ = {}", self.p, (self.n as f64).powf(-self.gamma)),
            ));
        }
        Ok(())
    }

    /// `ε_n = n^{-α} p^{-1}`, the slack in the row-sum budget `(1+ε_n) n p`.
    pub fn epsilon_n(&self) -> f64 {
        (self.n as f64).powf(-self.alpha) / self.p
    }
}

/// Samples a simple-graph adjacency profile: symmetric 0/1, zero diagonal,
/// each above-diagonal entry independently 1 with probability `p`.
/// Bit-reproducible for a fixed seed, independent of evaluation order.
pub fn sample_erdos_renyi(cfg: &ErdosRenyiConfig) -> Result<StdDevProfile> {
    cfg.validate()?;
    let n = cfg.n;
    let mut entries = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let u = CounterRng::derive(cfg.seed, &[i as u64, j as u64]).next_open01();
            if u < cfg.p {
                entries[(i, j)] = 1.0;
                entries[(j, i)] = 1.0;
            }
        }
    }
    StdDevProfile::from_dense(entries, FamilyTag::ErdosRenyi)
}

/// Finite-n concentration diagnostics for one sampled adjacency profile.
#[derive(Debug, Clone, Serialize)]
pub struct ErConcentrationReport {
    pub n: usize,
    pub p: f64,
    pub k: usize,
    pub seed: u64,
    /// Exact distinct-index cycle sum of the sampled adjacency matrix.
    pub s_k: f64,
    /// `S_k / (np)^k`, the normalized cycle sum that should concentrate near
    /// `|I_k| / n^k`.
    pub ratio: f64,
    /// Exact expectation of `S_k` over the graph law: `|I_k| p^k` for k ≥ 3,
    /// `|I_2| p` for k = 2 (the two factors of a 2-cycle are the same edge),
    /// and 0 for k = 1 (no loops).
    pub expected_s_k: f64,
    pub expected_ratio: f64,
    pub max_row_sum: f64,
    /// Row-sum budget `(1 + ε_n) n p`.
    pub row_budget: f64,
    pub epsilon_n: f64,
    pub row_bound_ok: bool,
}

/// Samples the graph from `cfg` and reports how its cycle sum and row sums
/// compare with the concentration predictions.
pub fn check_erdos_renyi_concentration(cfg: &ErdosRenyiConfig, k: usize) -> Result<ErConcentrationReport> {
    if k == 0 || k > 6 {
        return Err(Error::invalid("walk length", format!("need 1 ≤ k ≤ 6 at desk scale, got {k}")));
    }
    let profile = sample_erdos_renyi(cfg)?;
    let s_k = cycles::cycle_sum_dfs(&profile, k)?.value;
    let np = cfg.n as f64 * cfg.p;
    let ratio = s_k / np.powi(k as i32);
    let ik = cycles::count_ik_f64(cfg.n as u64, k as u64);
    let expected_s_k = match k {
        1 => 0.0,
        2 => ik * cfg.p,
        _ => ik * cfg.p.powi(k as i32),
    };
    let expected_ratio = expected_s_k / np.powi(k as i32);
    let max_row_sum = profile
        .row_sq_sums()
        .into_iter()
        .fold(0.0_f64, f64::max);
    let epsilon_n = cfg.epsilon_n();
    let row_budget = (1.0 + epsilon_n) * np;
    Ok(ErConcentrationReport {
        n: cfg.n,
        p: cfg.p,
        k,
        seed: cfg.seed,
        s_k,
        ratio,
        expected_s_k,
        expected_ratio,
        max_row_sum,
        row_budget,
        epsilon_n,
        row_bound_ok: max_row_sum <= row_budget,
    })
}
