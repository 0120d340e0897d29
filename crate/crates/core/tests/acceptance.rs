//! Acceptance suite: every numbered criterion below runs at its stated
//! tolerance and prints one pass/fail line. Statistical criteria use pinned
//! seeds so the suite is deterministic.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use ndarray::Array2;
use varprof::bounds::{norm_check, tv_bound_rhs, variance_lower_bound_check};
use varprof::cycles::{count_ik_f64, cycle_sum_brute, cycle_sum_dfs};
use varprof::embeddings::{
    assemble_host, plan_covariance, plan_product, verify_trace_identity, zk_via_embedding,
};
use varprof::entrylaws::{
    law_gaussian, law_smooth_symmetric, EnsembleKind, MatrixEnsemble,
};
use varprof::gof::{gof_suite, BinSpec};
use varprof::profiles::{
    check_erdos_renyi_concentration, make_band, make_remark42, sample_erdos_renyi,
    ErdosRenyiConfig, FamilyTag, Remark42Variant, StdDevProfile,
};
use varprof::rng::CounterRng;
use varprof::simulate::{
    monomial_trace_samples, run_batch, trace_poly, trace_spread_relative, PolynomialSpec,
};

fn verdict(name: &str, pass: bool, detail: String) {
    println!(
        "[acceptance] {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{name}: {detail}");
}

fn random_profile(n: usize, density: f64, seed: u64) -> StdDevProfile {
    let mut rng = CounterRng::derive(seed, &[n as u64]);
    let entries = Array2::from_shape_fn((n, n), |_| {
        if rng.next_open01() < density {
            rng.next_open01()
        } else {
            0.0
        }
    });
    StdDevProfile::from_dense(entries, FamilyTag::Custom).unwrap()
}

fn sym_gaussian(seed: u64) -> MatrixEnsemble {
    MatrixEnsemble::new(EnsembleKind::Symmetric, law_gaussian(), seed)
}

// ---------------------------------------------------------------------------
// C1: cycle-sum oracle equivalence
// ---------------------------------------------------------------------------

#[test]
fn c01_cycle_sum_oracle_equivalence() {
    let mut worst = 0.0f64;
    for seed in 0..50u64 {
        let n = 5 + (seed % 4) as usize; // sizes up to 8
        let a = random_profile(n, 0.4, seed);
        for k in [2usize, 3, 4] {
            let brute = cycle_sum_brute(&a, k).unwrap().value;
            let dfs = cycle_sum_dfs(&a, k).unwrap().value;
            let rel = (brute - dfs).abs() / brute.abs().max(1e-300);
            worst = worst.max(rel);
        }
    }
    verdict(
        "C1 cycle-sum dfs == brute on 50 random profiles",
        worst <= 1e-9,
        format!("worst relative error {worst:.3e}"),
    );
}

// ---------------------------------------------------------------------------
// C2: |I_k| Stirling check
// ---------------------------------------------------------------------------

#[test]
fn c02_count_ik_matches_stirling() {
    let n = 100.0f64;
    let k = 3.0f64;
    let exact = count_ik_f64(100, 3) / n.powi(3);
    // full second-order Stirling form, including the sqrt(n/(n-k)) factor;
    // without it the approximation sits 1.5% off at n = 100
    let approx = (-k).exp() * (1.0 - k / n).powf(-(n - k)) * (n / (n - k)).sqrt();
    let rel = (exact - approx).abs() / exact;
    verdict(
        "C2 |I_3|/n^3 vs Stirling at n=100",
        rel <= 1e-3,
        format!("exact {exact:.6}, stirling {approx:.6}, rel {rel:.2e}"),
    );
}

// ---------------------------------------------------------------------------
// C3: variance lower bound, Monte Carlo
// ---------------------------------------------------------------------------

#[test]
fn c03_variance_lower_bound_monte_carlo() {
    let a = StdDevProfile::all_ones(20);
    for k in [2usize, 3] {
        let rep = variance_lower_bound_check(&a, &sym_gaussian(1000 + k as u64), k, 5000).unwrap();
        verdict(
            &format!("C3 var_hat >= S_{k} (n=20, R=5000)"),
            rep.holds,
            format!(
                "var_hat {:.4e}, S_k {:.4e}, threshold {:.4e}",
                rep.var_hat, rep.s_k, rep.threshold
            ),
        );
    }
}

// ---------------------------------------------------------------------------
// C4: CLT surrogate on the all-ones profile
// ---------------------------------------------------------------------------

#[test]
fn c04_clt_surrogate_all_ones() {
    let a = StdDevProfile::all_ones(200);
    let p = PolynomialSpec::monomial(2).unwrap();

    let batch = run_batch(&a, &sym_gaussian(42), &p, 1000, 42).unwrap();
    let gof = gof_suite(&batch, &BinSpec::default()).unwrap();
    verdict(
        "C4a KS <= 0.06 (gaussian law, n=200, k=2, R=1000)",
        gof.ks <= 0.06,
        format!("ks {:.4}, floor {:.4}", gof.ks, gof.ks_floor),
    );

    let smooth = MatrixEnsemble::new(
        EnsembleKind::Symmetric,
        law_smooth_symmetric(0.5).unwrap(),
        43,
    );
    let batch2 = run_batch(&a, &smooth, &p, 1000, 43).unwrap();
    let gof2 = gof_suite(&batch2, &BinSpec::default()).unwrap();
    verdict(
        "C4b KS <= 0.08 (smooth-symmetric eps=0.5)",
        gof2.ks <= 0.08,
        format!("ks {:.4}", gof2.ks),
    );
}

// ---------------------------------------------------------------------------
// C5: band CLT
// ---------------------------------------------------------------------------

#[test]
fn c05_band_clt() {
    let a = make_band(400, 80, true).unwrap(); // band 80 >= log 400
    let p = PolynomialSpec::monomial(2).unwrap();
    let batch = run_batch(&a, &sym_gaussian(4), &p, 1000, 4).unwrap();
    let gof = gof_suite(&batch, &BinSpec::default()).unwrap();
    verdict(
        "C5 KS <= 0.08 (periodic band n=400 b=80, k=2, R=1000)",
        gof.ks <= 0.08,
        format!("ks {:.4}", gof.ks),
    );
}

// ---------------------------------------------------------------------------
// C6: structural zeros of the five-block cyclic profile
// ---------------------------------------------------------------------------

#[test]
fn c06_structural_zeros() {
    let a = make_remark42(Remark42Variant::II, 50).unwrap();
    let ens = MatrixEnsemble::new(EnsembleKind::Iid, law_gaussian(), 6);
    let mut detail = String::new();
    let mut ok = true;
    for k in [1usize, 2, 3, 4, 6, 7] {
        let samples = monomial_trace_samples(&a, &ens, k, 20).unwrap();
        let spread = trace_spread_relative(&samples);
        ok &= spread <= 1e-9;
        detail.push_str(&format!("k{k}:{spread:.1e} "));
    }
    let five = monomial_trace_samples(&a, &ens, 5, 20).unwrap();
    let spread5 = trace_spread_relative(&five);
    ok &= spread5 > 1e-9;
    detail.push_str(&format!("k5:{spread5:.2e} (must vary)"));
    verdict("C6 structural zeros at k not divisible by 5", ok, detail);
}

// ---------------------------------------------------------------------------
// C7: embedding trace identities
// ---------------------------------------------------------------------------

#[test]
fn c07_embedding_identities() {
    let mut rng = CounterRng::derive(7, &[0]);
    let mut randn = |rows: usize, cols: usize| {
        Array2::from_shape_fn((rows, cols), |_| rng.next_standard_normal())
    };
    let mut rng_p = CounterRng::derive(7, &[1]);
    let mut rand_poly = |max_deg: usize| {
        let deg = 1 + (rng_p.next_u64() as usize) % max_deg;
        let coeffs: Vec<f64> = (0..=deg)
            .map(|i| {
                let c = 4.0 * rng_p.next_open01() - 2.0;
                if i == deg && c.abs() < 0.1 {
                    0.5
                } else {
                    c
                }
            })
            .collect();
        PolynomialSpec::new(coeffs).unwrap()
    };

    let mut worst = 0.0f64;
    for trial in 0..50 {
        let n = 2 + trial % 6;
        let m = 2 + (trial / 2) % 6;
        let p = rand_poly(3);
        let plan = plan_covariance(n, m, &p).unwrap();
        let x = randn(n, m);
        worst = worst.max(verify_trace_identity(&plan, &[x]).unwrap().residual);
    }
    for trial in 0..50usize {
        let factors = 2 + trial % 3;
        let dims: Vec<usize> = (0..factors).map(|f| 2 + (trial + f) % 4).collect();
        let p = rand_poly(2);
        let plan = plan_product(&dims, &p).unwrap();
        let rotated = plan.block_dims.clone();
        let blocks: Vec<Array2<f64>> = (0..factors)
            .map(|r| randn(rotated[r], rotated[(r + 1) % factors]))
            .collect();
        worst = worst.max(verify_trace_identity(&plan, &blocks).unwrap().residual);
    }

    // negative control: dropping the (m-n) c0 = 28 offset must be visible
    let p = PolynomialSpec::new(vec![7.0, 0.0, 1.0]).unwrap();
    let plan = plan_covariance(2, 6, &p).unwrap();
    let x = randn(2, 6);
    let y = assemble_host(&plan, std::slice::from_ref(&x)).unwrap();
    let lhs = trace_poly(&y, &plan.composed_poly).unwrap();
    let gram = x.dot(&x.t());
    let rhs_wrong = 2.0 * trace_poly(&gram, &plan.base_poly).unwrap();
    let control_gap = (lhs - rhs_wrong).abs();
    let control_ok = (control_gap - 28.0).abs() <= 1e-8;

    verdict(
        "C7 embedding identities on 100 random instances + negative control",
        worst <= 1e-10 && control_ok,
        format!("worst residual {worst:.2e}, control gap {control_gap:.6}"),
    );
}

// ---------------------------------------------------------------------------
// C8: covariance CLT
// ---------------------------------------------------------------------------

#[test]
fn c08_covariance_clt() {
    let p = PolynomialSpec::monomial(2).unwrap();
    let plan = plan_covariance(100, 150, &p).unwrap();
    let ens = sym_gaussian(8);
    let batch = zk_via_embedding(&plan, &ens, 1000, 8).unwrap();
    let gof = gof_suite(&batch, &BinSpec::default()).unwrap();
    verdict(
        "C8 KS <= 0.08 (covariance n=100 m=150, k=2, R=1000)",
        gof.ks <= 0.08,
        format!("ks {:.4}", gof.ks),
    );

    // companion check from the embedding examples: the two-factor product
    let plan2 = plan_product(&[80, 80], &p).unwrap();
    let ens2 = MatrixEnsemble::new(EnsembleKind::Iid, law_gaussian(), 88);
    let batch2 = zk_via_embedding(&plan2, &ens2, 1000, 88).unwrap();
    let gof2 = gof_suite(&batch2, &BinSpec::default()).unwrap();
    verdict(
        "C8+ KS <= 0.10 (two-factor product n=80, k=2, R=1000)",
        gof2.ks <= 0.10,
        format!("ks {:.4}", gof2.ks),
    );
}

// ---------------------------------------------------------------------------
// C9: Erdős–Rényi concentration
// ---------------------------------------------------------------------------

#[test]
fn c09_erdos_renyi_concentration() {
    let base = ErdosRenyiConfig {
        n: 500,
        p: 0.3,
        gamma: 0.25,
        alpha: 0.35,
        seed: 0,
    };
    // the normalized cycle sum on a few sampled graphs
    let mut ratios = Vec::new();
    for seed in 0..3u64 {
        let cfg = ErdosRenyiConfig { seed, ..base };
        ratios.push(check_erdos_renyi_concentration(&cfg, 3).unwrap().ratio);
    }
    let ratio_ok = ratios.iter().all(|r| (0.9..=1.1).contains(r));
    verdict(
        "C9a S_3/(np)^3 in [0.9, 1.1] (n=500, p=0.3)",
        ratio_ok,
        format!("ratios {ratios:?}"),
    );

    // row-sum budget over 100 seeds
    let mut within = 0usize;
    for seed in 0..100u64 {
        let cfg = ErdosRenyiConfig { seed, ..base };
        let a = sample_erdos_renyi(&cfg).unwrap();
        let max_row = a.row_sq_sums().into_iter().fold(0.0f64, f64::max);
        let budget = (1.0 + cfg.epsilon_n()) * cfg.n as f64 * cfg.p;
        if max_row <= budget {
            within += 1;
        }
    }
    verdict(
        "C9b max row sum <= (1+eps_n) n p for >= 99/100 seeds (alpha=0.35)",
        within >= 99,
        format!("{within}/100 seeds within budget"),
    );
}

// ---------------------------------------------------------------------------
// C10: bound decay trend
// ---------------------------------------------------------------------------

#[test]
fn c10_bound_decay_trend() {
    let rhs: Vec<f64> = [100usize, 400, 1600]
        .iter()
        .map(|&n| tv_bound_rhs(&StdDevProfile::all_ones(n), 2).unwrap().rhs)
        .collect();
    let r1 = rhs[1] / rhs[0];
    let r2 = rhs[2] / rhs[1];
    let ok = (r1 - 0.5).abs() <= 0.2 * 0.5 && (r2 - 0.5).abs() <= 0.2 * 0.5;
    verdict(
        "C10 rhs ratios track n^{-1/2} (all-ones, k=2)",
        ok,
        format!("rhs {rhs:?}, ratios {r1:.4}, {r2:.4}"),
    );
}

// ---------------------------------------------------------------------------
// C11: norm concentration
// ---------------------------------------------------------------------------

#[test]
fn c11_norm_concentration() {
    // bulk case: the scaled norm stays below 3 on every trial
    let a = StdDevProfile::all_ones(500);
    let rep = norm_check(&a, &sym_gaussian(11), 100, 0.0, 1.0).unwrap();
    let bn = varprof::bounds::compute_bn(&a).unwrap();
    let worst = rep
        .norms
        .iter()
        .fold(0.0f64, |m, &v| m.max(v / bn.sqrt()));
    verdict(
        "C11a ||A.X|| / sqrt(b_n) <= 3 over 100 trials (n=500)",
        rep.nonconverged == 0 && rep.frobenius_ok && worst <= 3.0,
        format!("worst scaled norm {worst:.4}, nonconverged {}", rep.nonconverged),
    );

    // scalar case: exceedance at t=2 within 2x of the tail bound, and in
    // agreement with the exact scalar law
    let scalar = StdDevProfile::all_ones(1);
    let ens = MatrixEnsemble::new(EnsembleKind::Iid, law_gaussian(), 12);
    let srep = norm_check(&scalar, &ens, 20_000, 2.0, 1.0).unwrap();
    let exact = srep.exact_scalar_prob.unwrap();
    let se = (exact * (1.0 - exact) / srep.trials as f64).sqrt();
    let ok = srep.exceed_freq <= 2.0 * srep.tail_bound
        && (srep.exceed_freq - exact).abs() <= 5.0 * se + 1.0 / srep.trials as f64;
    verdict(
        "C11b scalar exceedance at t=2 within 2x of exp(-t^2/c1^2)",
        ok,
        format!(
            "freq {:.2e}, tail bound {:.2e}, exact {:.2e}",
            srep.exceed_freq, srep.tail_bound, exact
        ),
    );
}

// ---------------------------------------------------------------------------
// C12: randomized property suites
// ---------------------------------------------------------------------------

#[test]
fn c12_property_suites() {
    const CASES: usize = 200;

    // scaling covariance S_k(cA) = c^{2k} S_k(A)
    let mut worst_scale = 0.0f64;
    for case in 0..CASES as u64 {
        let a = random_profile(4 + (case % 5) as usize, 0.6, case);
        let k = 2 + (case % 3) as usize;
        let c = 0.2 + 1.5 * CounterRng::derive(case, &[9]).next_open01();
        let base = cycle_sum_dfs(&a, k).unwrap().value;
        let scaled = cycle_sum_dfs(&a.scale(c).unwrap(), k).unwrap().value;
        let expect = c.powi(2 * k as i32) * base;
        if expect > 0.0 {
            worst_scale = worst_scale.max((scaled - expect).abs() / expect);
        }
    }
    verdict(
        "C12a scaling covariance (200 cases)",
        worst_scale <= 1e-9,
        format!("worst rel {worst_scale:.2e}"),
    );

    // permutation invariance
    let mut worst_perm = 0.0f64;
    for case in 0..CASES as u64 {
        let n = 4 + (case % 5) as usize;
        let a = random_profile(n, 0.6, 1000 + case);
        let k = 2 + (case % 3) as usize;
        let shift = 1 + (case as usize % (n - 1));
        let dense = a.to_dense();
        let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let pa = StdDevProfile::from_dense(
            Array2::from_shape_fn((n, n), |(i, j)| dense[(perm[i], perm[j])]),
            FamilyTag::Custom,
        )
        .unwrap();
        let s1 = cycle_sum_dfs(&a, k).unwrap().value;
        let s2 = cycle_sum_dfs(&pa, k).unwrap().value;
        if s1 > 0.0 {
            worst_perm = worst_perm.max((s1 - s2).abs() / s1);
        }
    }
    verdict(
        "C12b permutation invariance (200 cases)",
        worst_perm <= 1e-9,
        format!("worst rel {worst_perm:.2e}"),
    );

    // monotonicity in the entries
    let mut mono_ok = true;
    for case in 0..CASES as u64 {
        let n = 4 + (case % 5) as usize;
        let a = random_profile(n, 0.5, 2000 + case);
        let k = 2 + (case % 2) as usize;
        let bump = CounterRng::derive(case, &[5]).next_open01() * 0.4;
        let b = StdDevProfile::from_dense(
            a.to_dense().mapv(|v| (v + bump).min(1.0)),
            FamilyTag::Custom,
        )
        .unwrap();
        let sa = cycle_sum_dfs(&a, k).unwrap().value;
        let sb = cycle_sum_dfs(&b, k).unwrap().value;
        mono_ok &= sb + 1e-12 >= sa;
    }
    verdict("C12c monotonicity (200 cases)", mono_ok, String::new());

    // distinct-index sum bounded by the unconstrained walk sum
    let mut bound_ok = true;
    for case in 0..CASES as u64 {
        let n = 4 + (case % 5) as usize;
        let a = random_profile(n, 0.7, 3000 + case);
        let k = 1 + (case % 4) as usize;
        let s = cycle_sum_dfs(&a, k).unwrap().value;
        let sq = a.to_dense().mapv(|v| v * v);
        let walks = varprof::simulate::power_traces(&sq, k).unwrap()[k - 1];
        bound_ok &= s <= walks * (1.0 + 1e-12) + 1e-12;
    }
    verdict(
        "C12d S_k <= Tr((A.A)^k) (200 cases)",
        bound_ok,
        String::new(),
    );

    // standardization exactness
    let mut worst_std = 0.0f64;
    let p = PolynomialSpec::monomial(2).unwrap();
    for case in 0..CASES as u64 {
        let a = random_profile(8, 0.8, 4000 + case);
        let ens = MatrixEnsemble::new(EnsembleKind::Iid, law_gaussian(), case);
        let Ok(batch) = run_batch(&a, &ens, &p, 50, case) else {
            continue;
        };
        let r = batch.replicas as f64;
        let mean: f64 = batch.z_samples.iter().sum::<f64>() / r;
        let var: f64 = batch.z_samples.iter().map(|z| z * z).sum::<f64>() / (r - 1.0);
        worst_std = worst_std.max(mean.abs()).max((var - 1.0).abs());
    }
    verdict(
        "C12e standardization exactness (200 cases)",
        worst_std <= 1e-12,
        format!("worst deviation {worst_std:.2e}"),
    );
}
