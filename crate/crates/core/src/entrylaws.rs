//! Entry distributions of the form `u(Z)` for standard Gaussian `Z` with
//! `|u'| ≤ c1` and `|u''| ≤ c2`, and the matrix ensembles built from them.
//!
//! The derivative certificates are audited on a dense grid over [-8, 8].
//! For the shipped laws the grid extends to the whole line: the identity
//! has constant derivatives, the normal-CDF transform has `|u'| = φ(x)`
//! and `|u''| = |x| φ(x)` both decreasing beyond |x| = 8, and the
//! sine-perturbed family has globally bounded trigonometric derivatives,
//! so no tail can exceed the grid maximum.
//!
//! The fluctuation machinery assumes symmetric unit-variance entries; laws
//! that violate this (the uniform transform, for instance) remain
//! constructible, and operations that care consult [`EntryLaw::warnings`]
//! and attach them to their reports.

use crate::error::{Error, Result};
use crate::normal;
use crate::profiles::StdDevProfile;
use crate::rng::CounterRng;
use ndarray::Array2;
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

type Transform = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A probability law expressed as a smooth transform `u` of a standard
/// Gaussian, with certified derivative bounds.
#[derive(Clone)]
pub struct EntryLaw {
    name: String,
    u: Transform,
    /// Analytic first derivative when known; grid checks fall back to finite
    /// differences without one.
    du: Option<Transform>,
    d2u: Option<Transform>,
    c1: f64,
    c2: f64,
    symmetric_law: bool,
    variance: f64,
}

impl fmt::Debug for EntryLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EntryLaw")
            .field("name", &self.name)
            .field("c1", &self.c1)
            .field("c2", &self.c2)
            .field("symmetric_law", &self.symmetric_law)
            .field("variance", &self.variance)
            .finish()
    }
}

/// Structured warning attached to reports when a law breaks a hypothesis of
/// the fluctuation results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ComplianceWarning {
    NonSymmetricLaw { law: String },
    NonUnitVariance { law: String, variance: f64 },
}

impl fmt::Display for ComplianceWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComplianceWarning::NonSymmetricLaw { law } => {
                write!(f, "law '{law}' is not symmetric about zero")
            }
            ComplianceWarning::NonUnitVariance { law, variance } => {
                write!(f, "law '{law}' has variance {variance}, not 1")
            }
        }
    }
}

impl EntryLaw {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn is_symmetric_law(&self) -> bool {
        self.symmetric_law
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Applies the transform to a standard normal draw.
    #[inline]
    pub fn transform(&self, z: f64) -> f64 {
        (self.u)(z)
    }

    /// Symmetric with variance one, the hypotheses of the Gaussian
    /// fluctuation results.
    pub fn is_symmetric_unit_variance(&self) -> bool {
        self.symmetric_law && (self.variance - 1.0).abs() <= 1e-12
    }

    pub fn warnings(&self) -> Vec<ComplianceWarning> {
        let mut w = Vec::new();
        if !self.symmetric_law {
            w.push(ComplianceWarning::NonSymmetricLaw {
                law: self.name.clone(),
            });
        }
        if (self.variance - 1.0).abs() > 1e-12 {
            w.push(ComplianceWarning::NonUnitVariance {
                law: self.name.clone(),
                variance: self.variance,
            });
        }
        w
    }

    /// Custom law from a transform and its certified derivative bounds.
    /// `verify_derivative_bounds` can audit the certificate on a grid.
    pub fn custom(
        name: impl Into<String>,
        u: impl Fn(f64) -> f64 + Send + Sync + 'static,
        c1: f64,
        c2: f64,
        symmetric_law: bool,
        variance: f64,
    ) -> Result<Self> {
        if c1.is_nan() || c1 <= 0.0 || c2 < 0.0 {
            return Err(Error::invalid(
                "derivative bounds",
                format!("need c1 > 0 and c2 ≥ 0, got c1={c1}, c2={c2}"),
            ));
        }
        Ok(EntryLaw {
            name: name.into(),
            u: Arc::new(u),
            du: None,
            d2u: None,
            c1,
            c2,
            symmetric_law,
            variance,
        })
    }

    /// Audits `|u'| ≤ c1` and `|u''| ≤ c2` on the grid [-8, 8] with spacing
    /// 1e-3. Analytic derivatives are used when the law ships them (the
    /// built-in laws do); otherwise central differences with a documented,
    /// looser tolerance. Returns the measured grid maxima.
    pub fn verify_derivative_bounds(&self) -> DerivativeAudit {
        let step = 1e-3;
        let lo = -8.0;
        let points = (16.0 / step) as usize + 1;
        let mut max_d1 = 0.0f64;
        let mut max_d2 = 0.0f64;
        let mut sym_defect = 0.0f64;
        for idx in 0..points {
            let x = lo + step * idx as f64;
            let d1 = match &self.du {
                Some(d) => d(x).abs(),
                None => (((self.u)(x + step) - (self.u)(x - step)) / (2.0 * step)).abs(),
            };
            let d2 = match &self.d2u {
                Some(d) => d(x).abs(),
                None => {
                    (((self.u)(x + step) - 2.0 * (self.u)(x) + (self.u)(x - step))
                        / (step * step))
                        .abs()
                }
            };
            max_d1 = max_d1.max(d1);
            max_d2 = max_d2.max(d2);
            if self.symmetric_law {
                sym_defect = sym_defect.max(((self.u)(-x) + (self.u)(x)).abs());
            }
        }
        DerivativeAudit {
            max_d1,
            max_d2,
            sym_defect,
            analytic: self.du.is_some() && self.d2u.is_some(),
        }
    }
}

/// Grid maxima measured by [`EntryLaw::verify_derivative_bounds`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DerivativeAudit {
    pub max_d1: f64,
    pub max_d2: f64,
    /// Grid maximum of `|u(-x) + u(x)|`; zero for odd transforms.
    pub sym_defect: f64,
    /// Whether analytic derivatives were available.
    pub analytic: bool,
}

/// The identity transform: standard Gaussian entries, `c1 = 1`, `c2 = 0`.
pub fn law_gaussian() -> EntryLaw {
    EntryLaw {
        name: "gaussian".into(),
        u: Arc::new(|z| z),
        du: Some(Arc::new(|_| 1.0)),
        d2u: Some(Arc::new(|_| 0.0)),
        c1: 1.0,
        c2: 0.0,
        symmetric_law: true,
        variance: 1.0,
    }
}

/// The normal CDF transform: uniform entries on [0, 1]. The bounds are
/// `c1 = (2π)^{-1/2}` (the density peak) and `c2 = (2πe)^{-1/2}` (the
/// density slope peak at x = ±1). Not symmetric, variance 1/12, so every
/// operation that assumes those hypotheses will attach warnings.
pub fn law_uniform01() -> EntryLaw {
    EntryLaw {
        name: "uniform01".into(),
        u: Arc::new(normal::cdf),
        du: Some(Arc::new(normal::pdf)),
        d2u: Some(Arc::new(|x| -x * normal::pdf(x))),
        c1: (std::f64::consts::TAU).sqrt().recip(),
        c2: (std::f64::consts::TAU * std::f64::consts::E).sqrt().recip(),
        symmetric_law: false,
        variance: 1.0 / 12.0,
    }
}

/// Closed-form variance of `z + ε sin z` under the standard Gaussian:
/// `1 + 2ε e^{-1/2} + ε² (1 - e^{-2}) / 2`, from the Gaussian moments
/// `E[z sin z] = e^{-1/2}` and `E[sin² z] = (1 - e^{-2}) / 2`.
pub fn smooth_symmetric_raw_variance(eps: f64) -> f64 {
    1.0 + 2.0 * eps * (-0.5f64).exp() + eps * eps * (1.0 - (-2.0f64).exp()) / 2.0
}

/// A non-Gaussian symmetric unit-variance family:
/// `u(z) = β (z + ε sin z)` with `β` normalizing the variance to one.
/// `c1 = β (1 + ε)` and `c2 = β ε`; the transform is odd.
pub fn law_smooth_symmetric(eps: f64) -> Result<EntryLaw> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::invalid("eps", format!("need eps in [0, 1), got {eps}")));
    }
    let beta = smooth_symmetric_raw_variance(eps).sqrt().recip();
    Ok(EntryLaw {
        name: format!("smooth-symmetric:eps={eps}"),
        u: Arc::new(move |z| beta * (z + eps * z.sin())),
        du: Some(Arc::new(move |z| beta * (1.0 + eps * z.cos()))),
        d2u: Some(Arc::new(move |z| -beta * eps * z.sin())),
        c1: beta * (1.0 + eps),
        c2: beta * eps,
        symmetric_law: true,
        variance: 1.0,
    })
}

/// Parses a law selection string: `gaussian`, `uniform01`, or
/// `smooth-symmetric:eps=<v>`.
pub fn parse_law(s: &str) -> Result<EntryLaw> {
    match s.trim() {
        "gaussian" => Ok(law_gaussian()),
        "uniform01" => Ok(law_uniform01()),
        other => {
            if let Some(rest) = other.strip_prefix("smooth-symmetric:eps=") {
                let eps: f64 = rest.parse().map_err(|_| {
                    Error::invalid("law string", format!("bad eps value '{rest}'"))
                })?;
                law_smooth_symmetric(eps)
            } else {
                Err(Error::invalid(
                    "law string",
                    format!("unknown law '{other}' (expected gaussian | uniform01 | smooth-symmetric:eps=<v>)"),
                ))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Matrix ensembles
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    /// All entries independent.
    Iid,
    /// `X_ji = X_ij` exactly; the upper triangle (diagonal included) is
    /// independent.
    Symmetric,
}

/// An entry law plus the deterministic seed-derivation rule mapping
/// `(master seed, replica, i, j)` to the Gaussian feeding each entry.
#[derive(Debug, Clone)]
pub struct MatrixEnsemble {
    pub kind: EnsembleKind,
    pub law: EntryLaw,
    master_seed: u64,
}

impl MatrixEnsemble {
    pub fn new(kind: EnsembleKind, law: EntryLaw, master_seed: u64) -> Self {
        MatrixEnsemble {
            kind,
            law,
            master_seed,
        }
    }

    /// Same law and kind, different master seed.
    pub fn with_seed(&self, master_seed: u64) -> Self {
        MatrixEnsemble {
            kind: self.kind,
            law: self.law.clone(),
            master_seed,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Correlation of `(X_ij, X_ji)`: 0 for iid, 1 for symmetric.
    pub fn rho(&self) -> f64 {
        match self.kind {
            EnsembleKind::Iid => 0.0,
            EnsembleKind::Symmetric => 1.0,
        }
    }

    /// Draws the n×n matrix for one replica. Bit-reproducible given the seed
    /// policy and replica index; symmetric draws satisfy `X = Xᵀ` exactly
    /// because the mirrored entry is the same float, not a re-draw.
    pub fn sample_matrix(&self, n: usize, replica: u64) -> Array2<f64> {
        let mut x = Array2::zeros((n, n));
        match self.kind {
            EnsembleKind::Iid => {
                for i in 0..n {
                    for j in 0..n {
                        x[(i, j)] = self.entry_value(replica, i as u64, j as u64);
                    }
                }
            }
            EnsembleKind::Symmetric => {
                for i in 0..n {
                    for j in i..n {
                        let v = self.entry_value(replica, i as u64, j as u64);
                        x[(i, j)] = v;
                        x[(j, i)] = v;
                    }
                }
            }
        }
        x
    }

    #[inline]
    fn entry_value(&self, replica: u64, i: u64, j: u64) -> f64 {
        let z = CounterRng::derive(self.master_seed, &[replica, i, j]).next_standard_normal();
        self.law.transform(z)
    }
}

/// `Y = A ∘ X`: the entrywise product. The zero pattern of `A` is preserved
/// exactly since `0 * x == 0` for finite `x`.
pub fn assemble(a: &StdDevProfile, x: &Array2<f64>) -> Result<Array2<f64>> {
    if a.dims() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dims(),
            got: x.dim(),
        });
    }
    Ok(a.to_dense() * x)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRID_SLACK: f64 = 1.0 + 1e-9;

    #[test]
    fn gaussian_law_parameters() {
        let law = law_gaussian();
        assert_eq!(law.transform(0.0), 0.0);
        assert_eq!(law.c1(), 1.0);
        assert_eq!(law.c2(), 0.0);
        assert!(law.is_symmetric_unit_variance());
        assert!(law.warnings().is_empty());
    }

    #[test]
    fn uniform_law_parameters() {
        let law = law_uniform01();
        assert!((law.c1() - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert!((law.c2() - 0.241_970_724_519_143_37).abs() < 1e-14);
        assert_eq!(law.transform(0.0), 0.5);
        assert!(!law.is_symmetric_unit_variance());
        assert_eq!(law.warnings().len(), 2);
    }

    #[test]
    fn derivative_bounds_hold_on_grid_for_all_shipped_laws() {
        for law in [
            law_gaussian(),
            law_uniform01(),
            law_smooth_symmetric(0.0).unwrap(),
            law_smooth_symmetric(0.5).unwrap(),
            law_smooth_symmetric(0.9).unwrap(),
        ] {
            let audit = law.verify_derivative_bounds();
            assert!(audit.analytic);
            assert!(
                audit.max_d1 <= law.c1() * GRID_SLACK,
                "{}: |u'| grid max {} vs c1 {}",
                law.name(),
                audit.max_d1,
                law.c1()
            );
            assert!(
                audit.max_d2 <= law.c2() * GRID_SLACK + 1e-300,
                "{}: |u''| grid max {} vs c2 {}",
                law.name(),
                audit.max_d2,
                law.c2()
            );
            if law.is_symmetric_law() {
                assert_eq!(audit.sym_defect, 0.0, "{} must be odd", law.name());
            }
        }
    }

    #[test]
    fn smooth_symmetric_is_odd_and_reduces_to_gaussian() {
        let law = law_smooth_symmetric(0.5).unwrap();
        assert_eq!(law.transform(-1.3), -law.transform(1.3));
        let id = law_smooth_symmetric(0.0).unwrap();
        for z in [-2.0, -0.5, 0.0, 1.7] {
            assert!((id.transform(z) - z).abs() < 1e-15);
        }
    }

    #[test]
    fn empirical_variance_near_one_for_compliant_laws() {
        for law in [law_gaussian(), law_smooth_symmetric(0.5).unwrap()] {
            let mut rng = CounterRng::derive(2024, &[1]);
            let n = 100_000;
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let v = law.transform(rng.next_standard_normal());
                s1 += v;
                s2 += v * v;
            }
            let mean = s1 / n as f64;
            let var = s2 / n as f64 - mean * mean;
            assert!((var - 1.0).abs() < 0.02, "{}: var {var}", law.name());
        }
    }

    #[test]
    fn uniform_mean_near_half() {
        let law = law_uniform01();
        let mut rng = CounterRng::derive(99, &[0]);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| law.transform(rng.next_standard_normal()))
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
    }

    #[test]
    fn odd_moments_vanish_for_compliant_laws() {
        // 4 standard errors: se1 = sigma/sqrt(R), se3 uses E[x^6] = 15
        let n = 100_000usize;
        for law in [law_gaussian(), law_smooth_symmetric(0.5).unwrap()] {
            let mut rng = CounterRng::derive(7, &[3]);
            let (mut m1, mut m3) = (0.0, 0.0);
            for _ in 0..n {
                let v = law.transform(rng.next_standard_normal());
                m1 += v;
                m3 += v * v * v;
            }
            m1 /= n as f64;
            m3 /= n as f64;
            let se1 = 1.0 / (n as f64).sqrt();
            let se3 = 15.0f64.sqrt() / (n as f64).sqrt();
            assert!(m1.abs() < 4.0 * se1, "{}: m1 {m1}", law.name());
            assert!(m3.abs() < 4.0 * se3, "{}: m3 {m3}", law.name());
        }
    }

    #[test]
    fn symmetric_draws_are_bitwise_symmetric() {
        let ens = MatrixEnsemble::new(EnsembleKind::Symmetric, law_gaussian(), 5);
        let x = ens.sample_matrix(40, 3);
        for i in 0..40 {
            for j in 0..40 {
                assert_eq!(x[(i, j)].to_bits(), x[(j, i)].to_bits());
            }
        }
    }

    #[test]
    fn same_seed_same_matrix() {
        let ens = MatrixEnsemble::new(EnsembleKind::Iid, law_gaussian(), 11);
        let a = ens.sample_matrix(16, 2);
        let b = ens.sample_matrix(16, 2);
        assert_eq!(a, b);
        let c = ens.sample_matrix(16, 3);
        assert_ne!(a, c);
    }

    #[test]
    fn iid_entry_mean_within_three_sigma() {
        let ens = MatrixEnsemble::new(EnsembleKind::Iid, law_gaussian(), 123);
        let x = ens.sample_matrix(1000, 0);
        let mean = x.sum() / 1e6;
        assert!(mean.abs() < 0.004, "mean {mean}");
    }

    #[test]
    fn assemble_preserves_zero_pattern() {
        let a = crate::profiles::make_band(8, 2, false).unwrap();
        let ens = MatrixEnsemble::new(EnsembleKind::Symmetric, law_gaussian(), 1);
        let x = ens.sample_matrix(8, 0);
        let y = assemble(&a, &x).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                if a.entry(i, j) == 0.0 {
                    assert_eq!(y[(i, j)], 0.0);
                } else {
                    assert_eq!(y[(i, j)], x[(i, j)]);
                }
            }
        }
        // all-ones profile reproduces X; zero profile kills it
        let ones = StdDevProfile::all_ones(8);
        assert_eq!(assemble(&ones, &x).unwrap(), x);
    }

    #[test]
    fn assemble_rejects_mismatched_dims() {
        let a = StdDevProfile::all_ones(4);
        let x = Array2::zeros((5, 5));
        assert!(matches!(
            assemble(&a, &x),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn parse_law_roundtrip() {
        assert_eq!(parse_law("gaussian").unwrap().name(), "gaussian");
        assert_eq!(parse_law("uniform01").unwrap().name(), "uniform01");
        let l = parse_law("smooth-symmetric:eps=0.25").unwrap();
        assert_eq!(l.name(), "smooth-symmetric:eps=0.25");
        assert!(parse_law("cauchy").is_err());
        assert!(parse_law("smooth-symmetric:eps=chaos").is_err());
    }
}
