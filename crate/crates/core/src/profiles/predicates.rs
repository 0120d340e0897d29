//! Structural predicates on the nonzero support of a profile: broad
//! connectivity and super regularity.
//!
//! For an `n × m` profile `A` with supports `N_A(i) = {j : a_ij > 0}` and
//! `N_{Aᵀ}(j) = {i : a_ij > 0}`:
//!
//! `(δ, ν)`-broadly connected:
//!   (i)   `|N_A(i)| ≥ δ m` for every row `i`,
//!   (ii)  `|N_{Aᵀ}(j)| ≥ δ n` for every column `j`,
//!   (iii) for every nonempty `J ⊆ [m]`, the set
//!         `N^{(δ)}(J) = {i : |N_A(i) ∩ J| ≥ δ |J|}` has size at least
//!         `min(n, (1+ν) |J|)`.
//!
//! `(δ, ε)`-super regular:
//!   (i), (ii) as above,
//!   (iii) `e_A(I, J) ≥ δ |I| |J|` for all `I ⊆ [n]`, `J ⊆ [m]` with
//!         `|I| ≥ ε n` and `|J| ≥ ε m`, where `e_A(I, J)` counts nonzero
//!         entries inside `I × J`.
//!
//! Condition (iii) quantifies over exponentially many sets. For `m ≤ 12`
//! (and `n ≤ 12` for super regularity) the check enumerates subsets exactly;
//! beyond that it falsifies over structured candidates (column-support
//! groups, row-support complements, contiguous ranges, random subsets) plus
//! any caller-supplied sets, and a pass means "not falsified", recorded via
//! the `exhaustive` flag. For a fixed `J` both predicates are decided
//! exactly: super regularity minimizes `e_A(I, J)` over `I` in closed form
//! by taking the rows with the smallest restricted counts.

use super::StdDevProfile;
use crate::error::{Error, Result};
use crate::rng::CounterRng;
use serde::Serialize;

/// Largest dimension for which condition (iii) is enumerated exhaustively.
const EXACT_LIMIT: usize = 12;
/// Random candidate sets tried per size class in the falsification sweep.
const DEFAULT_RANDOM_TRIALS: usize = 512;
/// Absolute slack when comparing integer counts against real thresholds.
const EPS: f64 = 1e-9;

/// Evidence that a predicate fails.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Witness {
    /// Condition (i) fails at this row.
    Row(usize),
    /// Condition (ii) fails at this column.
    Column(usize),
    /// Condition (iii) of broad connectivity fails for this column set.
    ColumnSet(Vec<usize>),
    /// Condition (iii) of super regularity fails for this `I × J` pair.
    Pair { rows: Vec<usize>, cols: Vec<usize> },
}

/// Outcome of a structural predicate check.
#[derive(Debug, Clone, Serialize)]
pub struct PredicateReport {
    pub holds: bool,
    /// True when condition (iii) was enumerated exhaustively; otherwise a
    /// positive result only means "not falsified".
    pub exhaustive: bool,
    pub witness: Option<Witness>,
    pub detail: String,
}

impl PredicateReport {
    fn pass(exhaustive: bool) -> Self {
        PredicateReport {
            holds: true,
            exhaustive,
            witness: None,
            detail: if exhaustive {
                "all conditions verified exhaustively".into()
            } else {
                "not falsified (condition (iii) checked on structured candidates)".into()
            },
        }
    }

    fn fail(witness: Witness, detail: String) -> Self {
        PredicateReport {
            holds: false,
            exhaustive: true,
            witness: Some(witness),
            detail,
        }
    }
}

fn check_fraction(x: f64, what: &'static str) -> Result<()> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::invalid(what, format!("need a value in (0, 1], got {x}")));
    }
    Ok(())
}

/// Row supports as bool masks, plus per-row and per-column nonzero counts.
struct Support {
    n: usize,
    m: usize,
    row_mask: Vec<Vec<bool>>,
    row_count: Vec<usize>,
    col_count: Vec<usize>,
}

impl Support {
    fn new(a: &StdDevProfile) -> Self {
        let (n, m) = a.dims();
        let mut row_mask = vec![vec![false; m]; n];
        let mut row_count = vec![0usize; n];
        let mut col_count = vec![0usize; m];
        a.for_each_nonzero(|i, j, _| {
            row_mask[i][j] = true;
            row_count[i] += 1;
            col_count[j] += 1;
        });
        Support {
            n,
            m,
            row_mask,
            row_count,
            col_count,
        }
    }

    fn restricted_count(&self, i: usize, j_set: &[usize]) -> usize {
        j_set.iter().filter(|&&j| self.row_mask[i][j]).count()
    }

    /// Degree conditions (i) and (ii), shared by both predicates.
    fn degree_conditions(&self, delta: f64) -> Option<(Witness, String)> {
        for i in 0..self.n {
            if (self.row_count[i] as f64) + EPS < delta * self.m as f64 {
                return Some((
                    Witness::Row(i),
                    format!(
                        "condition (i): row {i} has {} nonzeros < δm = {}",
                        self.row_count[i],
                        delta * self.m as f64
                    ),
                ));
            }
        }
        for j in 0..self.m {
            if (self.col_count[j] as f64) + EPS < delta * self.n as f64 {
                return Some((
                    Witness::Column(j),
                    format!(
                        "condition (ii): column {j} has {} nonzeros < δn = {}",
                        self.col_count[j],
                        delta * self.n as f64
                    ),
                ));
            }
        }
        None
    }
}

fn mask_to_indices(mask: u32, m: usize) -> Vec<usize> {
    (0..m).filter(|&j| mask & (1 << j) != 0).collect()
}

/// Evaluates broad-connectivity condition (iii) for one column set.
pub fn broad_condition_iii_holds_for(
    a: &StdDevProfile,
    delta: f64,
    nu: f64,
    j_set: &[usize],
) -> Result<bool> {
    check_fraction(delta, "delta")?;
    check_fraction(nu, "nu")?;
    let support = Support::new(a);
    validate_col_set(j_set, support.m)?;
    Ok(broad_iii_one(&support, delta, nu, j_set))
}

fn broad_iii_one(support: &Support, delta: f64, nu: f64, j_set: &[usize]) -> bool {
    if j_set.is_empty() {
        return true;
    }
    let need = delta * j_set.len() as f64;
    let neighbours = (0..support.n)
        .filter(|&i| (support.restricted_count(i, j_set) as f64) + EPS >= need)
        .count();
    let target = (support.n as f64).min((1.0 + nu) * j_set.len() as f64);
    (neighbours as f64) + EPS >= target
}

/// Evaluates super-regularity condition (iii) for one column set, minimizing
/// over admissible row sets exactly: for each size `s ≥ ⌈εn⌉` the worst `I`
/// is the `s` rows with the fewest nonzeros restricted to `J`.
/// Returns the violating row set if one exists.
pub fn super_condition_iii_worst_rows(
    a: &StdDevProfile,
    delta: f64,
    epsilon: f64,
    j_set: &[usize],
) -> Result<Option<Vec<usize>>> {
    check_fraction(delta, "delta")?;
    check_fraction(epsilon, "epsilon")?;
    let support = Support::new(a);
    validate_col_set(j_set, support.m)?;
    Ok(super_iii_one(&support, delta, epsilon, j_set))
}

fn super_iii_one(
    support: &Support,
    delta: f64,
    epsilon: f64,
    j_set: &[usize],
) -> Option<Vec<usize>> {
    let jlen = j_set.len();
    if (jlen as f64) + EPS < epsilon * support.m as f64 {
        return None; // J too small to be constrained
    }
    let mut counts: Vec<(usize, usize)> = (0..support.n)
        .map(|i| (support.restricted_count(i, j_set), i))
        .collect();
    counts.sort_unstable();
    let s_min = ((epsilon * support.n as f64) - EPS).ceil().max(1.0) as usize;
    let mut prefix = 0usize;
    for (rank, &(c, _)) in counts.iter().enumerate() {
        prefix += c;
        let s = rank + 1;
        if s < s_min {
            continue;
        }
        if (prefix as f64) + EPS < delta * (s as f64) * (jlen as f64) {
            return Some(counts[..s].iter().map(|&(_, i)| i).collect());
        }
    }
    None
}

fn validate_col_set(j_set: &[usize], m: usize) -> Result<()> {
    for &j in j_set {
        if j >= m {
            return Err(Error::invalid(
                "witness set",
                format!("column index {j} out of range for m = {m}"),
            ));
        }
    }
    Ok(())
}

/// Candidate column sets for the falsification sweep on large matrices.
fn candidate_sets(support: &Support, rand_trials: usize, seed: u64) -> Vec<Vec<usize>> {
    let m = support.m;
    let mut cands: Vec<Vec<usize>> = Vec::new();

    // Columns grouped by identical support signature: block structure shows
    // up as repeated columns, and whole groups are the natural violators.
    let mut sig_groups: std::collections::HashMap<u64, Vec<usize>> =
        std::collections::HashMap::new();
    for j in 0..m {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for i in 0..support.n {
            h ^= support.row_mask[i][j] as u64 ^ (i as u64).wrapping_mul(0x100_0000_01b3);
            h = h.wrapping_mul(0x100_0000_01b3);
        }
        sig_groups.entry(h).or_default().push(j);
    }
    for group in sig_groups.into_values() {
        cands.push(group);
    }

    // Complements of row supports: the columns a given row misses.
    for i in 0..support.n.min(4 * EXACT_LIMIT) {
        let comp: Vec<usize> = (0..m).filter(|&j| !support.row_mask[i][j]).collect();
        if !comp.is_empty() {
            cands.push(comp);
        }
    }

    // Contiguous ranges at a few dyadic widths.
    let mut width = 1usize;
    while width <= m {
        let step = (width / 2).max(1);
        let mut start = 0;
        while start + width <= m {
            cands.push((start..start + width).collect());
            start += step;
        }
        width *= 2;
    }

    // Random subsets across a geometric size grid.
    let mut rng = CounterRng::derive(seed, &[m as u64]);
    let mut size = 1usize;
    let mut sizes = Vec::new();
    while size < m {
        sizes.push(size);
        size *= 2;
    }
    sizes.push(m);
    let per_size = (rand_trials / sizes.len().max(1)).max(1);
    for &s in &sizes {
        for _ in 0..per_size {
            let mut set: Vec<usize> = (0..m).collect();
            // partial Fisher-Yates: first s entries form the sample
            for i in 0..s {
                let j = i + (rng.next_u64() as usize) % (m - i);
                set.swap(i, j);
            }
            let mut sample = set[..s].to_vec();
            sample.sort_unstable();
            cands.push(sample);
        }
    }
    cands
}

/// Checks `(δ, ν)`-broad connectivity. Exhaustive for `m ≤ 12`.
pub fn is_broadly_connected(a: &StdDevProfile, delta: f64, nu: f64) -> Result<PredicateReport> {
    is_broadly_connected_with(a, delta, nu, &[], DEFAULT_RANDOM_TRIALS, 0)
}

/// Broad connectivity with caller-supplied candidate witness sets and a
/// random falsification budget for matrices too large to enumerate.
pub fn is_broadly_connected_with(
    a: &StdDevProfile,
    delta: f64,
    nu: f64,
    user_witnesses: &[Vec<usize>],
    rand_trials: usize,
    seed: u64,
) -> Result<PredicateReport> {
    check_fraction(delta, "delta")?;
    check_fraction(nu, "nu")?;
    let support = Support::new(a);
    for w in user_witnesses {
        validate_col_set(w, support.m)?;
    }
    if let Some((witness, detail)) = support.degree_conditions(delta) {
        return Ok(PredicateReport::fail(witness, detail));
    }

    let fail = |j_set: Vec<usize>| {
        let detail = format!(
            "condition (iii): |N^(δ)(J)| < min(n, (1+ν)|J|) for |J| = {}",
            j_set.len()
        );
        PredicateReport::fail(Witness::ColumnSet(j_set), detail)
    };

    if support.m <= EXACT_LIMIT {
        for mask in 1u32..(1 << support.m) {
            let j_set = mask_to_indices(mask, support.m);
            if !broad_iii_one(&support, delta, nu, &j_set) {
                return Ok(fail(j_set));
            }
        }
        return Ok(PredicateReport::pass(true));
    }

    for j_set in user_witnesses
        .iter()
        .cloned()
        .chain(candidate_sets(&support, rand_trials, seed))
    {
        if !broad_iii_one(&support, delta, nu, &j_set) {
            return Ok(fail(j_set));
        }
    }
    Ok(PredicateReport::pass(false))
}

/// Checks `(δ, ε)`-super regularity. Exhaustive for `n, m ≤ 12`.
pub fn is_super_regular(a: &StdDevProfile, delta: f64, epsilon: f64) -> Result<PredicateReport> {
    is_super_regular_with(a, delta, epsilon, &[], DEFAULT_RANDOM_TRIALS, 0)
}

/// Super regularity with caller-supplied column sets and a random budget.
/// For every candidate `J` the row side is minimized exactly, so only the
/// column side is sampled on large matrices.
pub fn is_super_regular_with(
    a: &StdDevProfile,
    delta: f64,
    epsilon: f64,
    user_witnesses: &[Vec<usize>],
    rand_trials: usize,
    seed: u64,
) -> Result<PredicateReport> {
    check_fraction(delta, "delta")?;
    check_fraction(epsilon, "epsilon")?;
    let support = Support::new(a);
    for w in user_witnesses {
        validate_col_set(w, support.m)?;
    }
    if let Some((witness, detail)) = support.degree_conditions(delta) {
        return Ok(PredicateReport::fail(witness, detail));
    }

    let fail = |rows: Vec<usize>, cols: Vec<usize>| {
        let detail = format!(
            "condition (iii): e_A(I, J) < δ|I||J| for |I| = {}, |J| = {}",
            rows.len(),
            cols.len()
        );
        PredicateReport::fail(Witness::Pair { rows, cols }, detail)
    };

    if support.n <= EXACT_LIMIT && support.m <= EXACT_LIMIT {
        for mask in 1u32..(1 << support.m) {
            let j_set = mask_to_indices(mask, support.m);
            if let Some(rows) = super_iii_one(&support, delta, epsilon, &j_set) {
                return Ok(fail(rows, j_set));
            }
        }
        return Ok(PredicateReport::pass(true));
    }

    for j_set in user_witnesses
        .iter()
        .cloned()
        .chain(candidate_sets(&support, rand_trials, seed))
    {
        if let Some(rows) = super_iii_one(&support, delta, epsilon, &j_set) {
            return Ok(fail(rows, j_set));
        }
    }
    Ok(PredicateReport::pass(false))
}
