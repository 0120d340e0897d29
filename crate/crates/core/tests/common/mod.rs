//! Shared test oracles, independent of the library's computation paths.

/// Gauss–Hermite nodes and weights for ∫ e^{-x²} f(x) dx, computed by
/// Newton iteration on the Hermite recurrence (the classic gauher recipe).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    const EPS: f64 = 3e-14;
    const PIM4: f64 = 0.751_125_544_464_942_5; // π^{-1/4}
    const MAXIT: usize = 64;

    let mut x = vec![0.0f64; n];
    let mut w = vec![0.0f64; n];
    let m = n.div_ceil(2);
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..MAXIT {
            let mut p1 = PIM4;
            let mut p2 = 0.0f64;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / j as f64).sqrt() * p2 - ((j as f64 - 1.0) / j as f64).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= EPS {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `E[f(Z)]` for standard Gaussian `Z` by Gauss–Hermite quadrature.
pub fn gaussian_expectation(f: impl Fn(f64) -> f64, nodes: usize) -> f64 {
    let (x, w) = gauss_hermite(nodes);
    let scale = std::f64::consts::PI.sqrt().recip();
    x.iter()
        .zip(&w)
        .map(|(&xi, &wi)| wi * f(std::f64::consts::SQRT_2 * xi))
        .sum::<f64>()
        * scale
}
