//! Linear eigenvalue statistics `Tr P_k(A ∘ X)` via power traces, Monte
//! Carlo replication, and the standardized statistic
//! `Z_k = (Tr P_k(Y) - mean) / sqrt(variance)`.
//!
//! Traces are computed by explicit dense matrix powers, O(k n³), holding two
//! n×n buffers; no eigenvalue solver is involved anywhere. Centering uses
//! the Monte Carlo mean, not the exact expectation, which adds an
//! O(R^{-1/2}) bias to the centering that every downstream tolerance
//! accounts for. Replicas draw from disjoint counter-based streams, run in
//! parallel, and are reduced in replica order, so batches are deterministic
//! regardless of scheduling.

use crate::entrylaws::{ComplianceWarning, EnsembleKind, MatrixEnsemble};
use crate::error::{Error, Result};
use crate::profiles::StdDevProfile;
use ndarray::linalg::general_mat_mul;
use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

/// A test polynomial `P(x) = c_0 + c_1 x + ... + c_k x^k` with `c_k ≠ 0`
/// and a bound `τ ≥ max_{i≥1} |c_i|` on the non-constant coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolynomialSpec {
    coeffs: Vec<f64>,
    tau: f64,
}

impl PolynomialSpec {
    /// Builds from `c_0..c_k`; the degree must be at least 1 and the leading
    /// coefficient nonzero. `τ` defaults to `max_{i≥1} |c_i|`.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::invalid(
                "polynomial",
                "degree must be at least 1 (constant polynomials are rejected)",
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("polynomial", "coefficients must be finite"));
        }
        let lead = *coeffs.last().unwrap();
        if lead == 0.0 {
            return Err(Error::invalid("polynomial", "leading coefficient must be nonzero"));
        }
        let tau = coeffs[1..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
        Ok(PolynomialSpec { coeffs, tau })
    }

    /// Overrides the coefficient bound; must dominate `max_{i≥1} |c_i|`.
    pub fn with_tau(mut self, tau: f64) -> Result<Self> {
        let need = self.coeffs[1..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if tau < need {
            return Err(Error::invalid(
                "tau",
                format!("bound {tau} below max coefficient {need}"),
            ));
        }
        self.tau = tau;
        Ok(self)
    }

    /// The monomial `x^k`.
    pub fn monomial(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("polynomial", "monomial degree must be at least 1"));
        }
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = 1.0;
        PolynomialSpec::new(coeffs)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn c0(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// The composition `Q(x) = P(x^m)`: coefficient `c_i` moves to degree
    /// `m·i`. Used by block embeddings.
    pub fn compose_power(&self, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("composition power", "m must be at least 1"));
        }
        let k = self.degree();
        let mut coeffs = vec![0.0; m * k + 1];
        for (i, &c) in self.coeffs.iter().enumerate() {
            coeffs[m * i] = c;
        }
        PolynomialSpec::new(coeffs)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }
}

/// `(Tr M, Tr M², ..., Tr M^k)` by repeated multiplication.
pub fn power_traces(m: &Array2<f64>, k: usize) -> Result<Vec<f64>> {
    let (r, c) = m.dim();
    if r != c {
        return Err(Error::DimensionMismatch {
            expected: (r, r),
            got: (r, c),
        });
    }
    if k == 0 {
        return Err(Error::invalid("power count", "k must be at least 1"));
    }
    let mut traces = Vec::with_capacity(k);
    traces.push(m.diag().sum());
    if k == 1 {
        return Ok(traces);
    }
    let mut cur = m.clone();
    let mut next = Array2::zeros((r, r));
    for _ in 2..=k {
        general_mat_mul(1.0, &cur, m, 0.0, &mut next);
        std::mem::swap(&mut cur, &mut next);
        traces.push(cur.diag().sum());
    }
    Ok(traces)
}

/// `Tr P(M) = c_0 n + Σ_{j≥1} c_j Tr M^j`.
pub fn trace_poly(m: &Array2<f64>, p: &PolynomialSpec) -> Result<f64> {
    let traces = power_traces(m, p.degree())?;
    let n = m.nrows() as f64;
    let mut acc = p.c0() * n;
    for (j, &t) in traces.iter().enumerate() {
        acc += p.coeffs()[j + 1] * t;
    }
    Ok(acc)
}

/// Identifies the exact configuration a batch was drawn from.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigFingerprint {
    pub profile_hash: String,
    pub law: String,
    pub ensemble_kind: EnsembleKind,
    pub degree: usize,
    pub n: usize,
    pub replicas: usize,
    pub seed: u64,
}

/// Monte Carlo replicas of `Tr P(A ∘ X)` and their standardization.
#[derive(Debug, Clone, Serialize)]
pub struct SampleBatch {
    pub replicas: usize,
    pub raw_traces: Vec<f64>,
    pub mean_hat: f64,
    pub var_hat: f64,
    /// `sqrt(var_hat / R)`.
    pub mean_se: f64,
    /// Standard error of `var_hat` via the fourth central moment.
    pub var_se: f64,
    pub z_samples: Vec<f64>,
    pub fingerprint: ConfigFingerprint,
    pub warnings: Vec<ComplianceWarning>,
}

/// Runs `R` independent replicas with derived seeds and standardizes.
///
/// Fails with [`Error::StructuralZeroVariance`] when the sample variance is
/// numerically zero (at most `10 ε max(1, max|t|²)`), carrying the raw
/// traces: that outcome is structural, not a bug, for profiles whose
/// support has no closed walk of the polynomial's degrees.
pub fn run_batch(
    a: &StdDevProfile,
    ens: &MatrixEnsemble,
    p: &PolynomialSpec,
    replicas: usize,
    seed: u64,
) -> Result<SampleBatch> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: (a.nrows(), a.nrows()),
            got: a.dims(),
        });
    }
    if replicas < 2 {
        return Err(Error::invalid("replicas", "need at least 2 replicas to standardize"));
    }
    if ens.kind == EnsembleKind::Symmetric && !a.is_symmetric() {
        return Err(Error::invalid(
            "ensemble",
            "symmetric ensemble requires a symmetric profile",
        ));
    }
    let n = a.nrows();
    let dense_a = a.to_dense();
    let seeded = ens.with_seed(seed);
    let raw_traces: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let x = seeded.sample_matrix(n, r as u64);
            let y = &dense_a * &x;
            trace_poly(&y, p).expect("square by construction")
        })
        .collect();

    let r = replicas as f64;
    let mean_hat = raw_traces.iter().sum::<f64>() / r;
    let mut m2 = 0.0;
    let mut m4 = 0.0;
    for &t in &raw_traces {
        let d = t - mean_hat;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    let var_hat = m2 / (r - 1.0);
    m4 /= r;

    let scale = raw_traces
        .iter()
        .fold(0.0f64, |m, t| m.max(t.abs()))
        .max(1.0);
    if var_hat <= 10.0 * f64::EPSILON * scale * scale {
        return Err(Error::StructuralZeroVariance { raw_traces });
    }

    let mean_se = (var_hat / r).sqrt();
    let var_se = ((m4 - var_hat * var_hat * (r - 3.0) / (r - 1.0)) / r)
        .max(0.0)
        .sqrt();
    let sd = var_hat.sqrt();
    let z_samples: Vec<f64> = raw_traces.iter().map(|&t| (t - mean_hat) / sd).collect();

    Ok(SampleBatch {
        replicas,
        raw_traces,
        mean_hat,
        var_hat,
        mean_se,
        var_se,
        z_samples,
        fingerprint: ConfigFingerprint {
            profile_hash: a.content_hash(),
            law: ens.law.name().to_string(),
            ensemble_kind: ens.kind,
            degree: p.degree(),
            n,
            replicas,
            seed,
        },
        warnings: ens.law.warnings(),
    })
}

impl SampleBatch {
    /// CSV body: header `replica,raw_trace,z` then one row per replica.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "replica,raw_trace,z")?;
        for (i, (t, z)) in self.raw_traces.iter().zip(&self.z_samples).enumerate() {
            writeln!(w, "{i},{t},{z}")?;
        }
        Ok(())
    }

    /// JSON sidecar with the fingerprint and moment estimates.
    pub fn sidecar_json(&self) -> serde_json::Value {
        serde_json::json!({
            "version": crate::VERSION,
            "fingerprint": self.fingerprint,
            "replicas": self.replicas,
            "mean_hat": self.mean_hat,
            "var_hat": self.var_hat,
            "mean_se": self.mean_se,
            "var_se": self.var_se,
            "warnings": self.warnings,
        })
    }
}

/// Does the support of `A` admit a closed walk of length exactly `k`?
/// Boolean matrix powers over the support; vertices may repeat.
pub fn has_closed_walk(a: &StdDevProfile, k: usize) -> bool {
    let n = a.nrows();
    let mut support = vec![false; n * n];
    a.for_each_nonzero(|i, j, _| support[i * n + j] = true);
    let mut power = support.clone();
    for _ in 1..k {
        let mut next = vec![false; n * n];
        for i in 0..n {
            for l in 0..n {
                if power[i * n + l] {
                    for j in 0..n {
                        if support[l * n + j] {
                            next[i * n + j] = true;
                        }
                    }
                }
            }
        }
        power = next;
    }
    (0..n).any(|i| power[i * n + i])
}

/// Monte Carlo draws of the pure power trace `Tr (A ∘ X)^k`.
pub fn monomial_trace_samples(
    a: &StdDevProfile,
    ens: &MatrixEnsemble,
    k: usize,
    trials: usize,
) -> Result<Vec<f64>> {
    let p = PolynomialSpec::monomial(k)?;
    let n = a.nrows();
    let dense_a = a.to_dense();
    Ok((0..trials)
        .into_par_iter()
        .map(|r| {
            let x = ens.sample_matrix(n, r as u64);
            let y = &dense_a * &x;
            trace_poly(&y, &p).expect("square by construction")
        })
        .collect())
}

/// True iff `Tr (A ∘ X)^k` is deterministically constant. When the support
/// admits no closed walk of length `k` the answer is exact and no sampling
/// happens; otherwise `trials` draws must agree to 1e-9 relative spread.
pub fn structural_zero_check(
    a: &StdDevProfile,
    ens: &MatrixEnsemble,
    k: usize,
    trials: usize,
) -> Result<bool> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: (a.nrows(), a.nrows()),
            got: a.dims(),
        });
    }
    if k == 0 {
        return Err(Error::invalid("walk length", "k must be at least 1"));
    }
    if !has_closed_walk(a, k) {
        return Ok(true);
    }
    if trials < 2 {
        return Err(Error::invalid("trials", "need at least 2 trials"));
    }
    let samples = monomial_trace_samples(a, ens, k, trials)?;
    Ok(trace_spread_relative(&samples) <= 1e-9)
}

/// `(max - min) / max(1, max |t|)` over a trace sample.
pub fn trace_spread_relative(samples: &[f64]) -> f64 {
    let max = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = samples.iter().fold(0.0f64, |m, t| m.max(t.abs())).max(1.0);
    (max - min) / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entrylaws::{law_gaussian, EnsembleKind, MatrixEnsemble};
    use crate::profiles::{self, FamilyTag, Remark42Variant};
    use ndarray::array;

    fn gaussian_sym(seed: u64) -> MatrixEnsemble {
        MatrixEnsemble::new(EnsembleKind::Symmetric, law_gaussian(), seed)
    }

    #[test]
    fn polynomial_validation() {
        assert!(PolynomialSpec::new(vec![1.0]).is_err()); // degree 0
        assert!(PolynomialSpec::new(vec![1.0, 0.0]).is_err()); // leading zero
        let p = PolynomialSpec::new(vec![0.0, 2.0, -1.0]).unwrap();
        assert_eq!(p.degree(), 2);
        assert_eq!(p.tau(), 2.0);
        assert!(p.clone().with_tau(1.0).is_err());
        assert_eq!(p.eval(3.0), 2.0 * 3.0 - 9.0);
    }

    #[test]
    fn compose_power_moves_coefficients() {
        let p = PolynomialSpec::new(vec![7.0, 0.0, 1.0]).unwrap(); // 7 + x²
        let q = p.compose_power(3).unwrap(); // 7 + x⁶
        assert_eq!(q.degree(), 6);
        assert_eq!(q.c0(), 7.0);
        assert_eq!(q.coeffs()[6], 1.0);
        assert!(q.coeffs()[1..6].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn power_traces_involution() {
        let m = array![[0.0, 1.0], [1.0, 0.0]];
        assert_eq!(power_traces(&m, 4).unwrap(), vec![0.0, 2.0, 0.0, 2.0]);
    }

    #[test]
    fn power_traces_identity() {
        let m = Array2::<f64>::eye(5);
        assert_eq!(power_traces(&m, 3).unwrap(), vec![5.0, 5.0, 5.0]);
    }

    #[test]
    fn trace_cube_matches_triple_loop() {
        let mut rng = crate::rng::CounterRng::derive(3, &[0]);
        let m = Array2::from_shape_fn((5, 5), |_| rng.next_standard_normal());
        // independent oracle: brute triple loop
        let mut oracle = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                for l in 0..5 {
                    oracle += m[(i, j)] * m[(j, l)] * m[(l, i)];
                }
            }
        }
        let got = power_traces(&m, 3).unwrap()[2];
        assert!((got - oracle).abs() <= 1e-12 * oracle.abs().max(1.0));
    }

    #[test]
    fn trace_poly_examples() {
        let m = array![[0.0, 1.0], [1.0, 0.0]];
        let p = PolynomialSpec::monomial(2).unwrap();
        assert_eq!(trace_poly(&m, &p).unwrap(), 2.0);
        let q = PolynomialSpec::new(vec![-1.0, 0.0, 1.0]).unwrap(); // x² - 1
        let id3 = Array2::<f64>::eye(3);
        assert_eq!(trace_poly(&id3, &q).unwrap(), 0.0);
    }

    #[test]
    fn trace_invariant_under_matched_relabeling() {
        // permuting the profile and the drawn entries by the same map
        // must leave the statistic unchanged
        let n = 9;
        let a = profiles::make_band(n, 2, true).unwrap();
        let ens = gaussian_sym(21);
        let x = ens.sample_matrix(n, 0);
        let y = crate::entrylaws::assemble(&a, &x).unwrap();
        let p = PolynomialSpec::new(vec![0.5, 1.0, 2.0, 1.0]).unwrap();
        let t1 = trace_poly(&y, &p).unwrap();

        let perm = [4usize, 7, 1, 0, 8, 3, 6, 2, 5];
        let pa = StdDevProfile::from_dense(
            Array2::from_shape_fn((n, n), |(i, j)| a.entry(perm[i], perm[j])),
            FamilyTag::Custom,
        )
        .unwrap();
        let px = Array2::from_shape_fn((n, n), |(i, j)| x[(perm[i], perm[j])]);
        let py = crate::entrylaws::assemble(&pa, &px).unwrap();
        let t2 = trace_poly(&py, &p).unwrap();
        assert!((t1 - t2).abs() <= 1e-12 * t1.abs().max(1.0), "{t1} vs {t2}");
    }

    #[test]
    fn power_traces_invariant_under_permutation_similarity() {
        let mut rng = crate::rng::CounterRng::derive(17, &[0]);
        let m = Array2::from_shape_fn((7, 7), |_| rng.next_standard_normal());
        let perm = [3usize, 0, 6, 1, 5, 2, 4];
        let pm = Array2::from_shape_fn((7, 7), |(i, j)| m[(perm[i], perm[j])]);
        let a = power_traces(&m, 5).unwrap();
        let b = power_traces(&pm, 5).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn batch_standardization_is_exact() {
        let a = StdDevProfile::all_ones(12);
        let p = PolynomialSpec::monomial(2).unwrap();
        let batch = run_batch(&a, &gaussian_sym(0), &p, 400, 5).unwrap();
        let r = batch.replicas as f64;
        let mean: f64 = batch.z_samples.iter().sum::<f64>() / r;
        let var: f64 = batch.z_samples.iter().map(|z| z * z).sum::<f64>() / (r - 1.0);
        assert!(mean.abs() < 1e-12, "mean {mean}");
        assert!((var - 1.0).abs() < 1e-12, "var {var}");
        assert!(batch.warnings.is_empty());
    }

    #[test]
    fn zero_profile_is_structural_zero_variance() {
        let a = StdDevProfile::from_dense(Array2::zeros((6, 6)), FamilyTag::Custom).unwrap();
        let p = PolynomialSpec::new(vec![3.0, 0.0, 1.0]).unwrap();
        match run_batch(&a, &gaussian_sym(0), &p, 16, 1) {
            Err(Error::StructuralZeroVariance { raw_traces }) => {
                // every trace is exactly c0 * n
                assert!(raw_traces.iter().all(|&t| t == 18.0));
            }
            other => panic!("expected StructuralZeroVariance, got {other:?}"),
        }
    }

    #[test]
    fn cyclic_block_profile_triggers_structural_zero() {
        let a = profiles::make_remark42(Remark42Variant::II, 10).unwrap();
        let p = PolynomialSpec::monomial(3).unwrap();
        let ens = MatrixEnsemble::new(EnsembleKind::Iid, law_gaussian(), 2);
        match run_batch(&a, &ens, &p, 8, 2) {
            Err(Error::StructuralZeroVariance { raw_traces }) => {
                assert!(raw_traces.iter().all(|&t| t == raw_traces[0]));
            }
            other => panic!("expected StructuralZeroVariance, got {other:?}"),
        }
    }

    #[test]
    fn structural_zero_check_cyclic_blocks() {
        let a = profiles::make_remark42(Remark42Variant::II, 10).unwrap();
        let ens = MatrixEnsemble::new(EnsembleKind::Iid, law_gaussian(), 3);
        for k in [1usize, 2, 3, 4, 6] {
            assert!(structural_zero_check(&a, &ens, k, 5).unwrap(), "k = {k}");
        }
        assert!(!structural_zero_check(&a, &ens, 5, 5).unwrap());
        // shifts {1,2} mod 5: lengths 1 and 2 are dead, 3 = 1+2+2 mod 5 lives
        let b = profiles::make_remark42(Remark42Variant::I, 10).unwrap();
        assert!(structural_zero_check(&b, &ens, 1, 5).unwrap());
        assert!(structural_zero_check(&b, &ens, 2, 5).unwrap());
        assert!(!structural_zero_check(&b, &ens, 3, 5).unwrap());
        let ones = StdDevProfile::all_ones(6);
        let sym = gaussian_sym(4);
        assert!(!structural_zero_check(&ones, &sym, 2, 5).unwrap());
    }

    #[test]
    fn batch_rejects_single_replica() {
        let a = StdDevProfile::all_ones(4);
        let p = PolynomialSpec::monomial(2).unwrap();
        assert!(run_batch(&a, &gaussian_sym(0), &p, 1, 0).is_err());
    }

    #[test]
    fn csv_export_shape() {
        let a = StdDevProfile::all_ones(8);
        let p = PolynomialSpec::monomial(2).unwrap();
        let batch = run_batch(&a, &gaussian_sym(0), &p, 10, 1).unwrap();
        let mut buf = Vec::new();
        batch.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "replica,raw_trace,z");
        assert_eq!(lines.len(), 11);
        let sidecar = batch.sidecar_json();
        assert_eq!(sidecar["replicas"], 10);
        assert!(sidecar["fingerprint"]["profile_hash"].is_string());
    }
}
