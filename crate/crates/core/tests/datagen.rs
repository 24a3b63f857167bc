use bartvs_core::datagen::{gen_linear, ScenarioKind, ScenarioSpec};

/// Least squares with intercept by Gaussian elimination on the normal
/// equations.
fn least_squares(cols: &[&[f64]], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let p = cols.len() + 1;
    let x = |i: usize, j: usize| if j == 0 { 1.0 } else { cols[j - 1][i] };
    let mut a = vec![vec![0.0; p + 1]; p];
    for r in 0..p {
        for c in 0..p {
            a[r][c] = (0..n).map(|i| x(i, r) * x(i, c)).sum();
        }
        a[r][p] = (0..n).map(|i| x(i, r) * y[i]).sum();
    }
    for c in 0..p {
        let piv = (c..p).max_by(|&u, &v| a[u][c].abs().total_cmp(&a[v][c].abs())).unwrap();
        a.swap(c, piv);
        for r in 0..p {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=p {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    (0..p).map(|r| a[r][p] / a[r][r]).collect()
}

#[test]
fn regression_recovers_coefficients() {
    let (d, truth) = gen_linear(1000, 6, 3, 1.0, 31).unwrap();
    assert_eq!(truth, vec![0, 1, 2]);
    let cols: Vec<&[f64]> = d.columns().collect();
    let beta = least_squares(&cols, d.response());
    assert!(beta[0].abs() < 0.1, "intercept {}", beta[0]);
    for (j, b) in beta[1..].iter().enumerate() {
        let want = if j < 3 { 1.0 } else { 0.0 };
        assert!((b - want).abs() < 0.1, "beta_{j} = {b}");
    }
}

#[test]
fn noiseless_coefficients_are_ones_then_zeros() {
    let (d, truth) = gen_linear(40, 5, 2, 0.0, 2).unwrap();
    assert_eq!(truth, vec![0, 1]);
    let cols: Vec<&[f64]> = d.columns().collect();
    let beta = least_squares(&cols, d.response());
    for (b, want) in beta.iter().zip([0.0, 1.0, 1.0, 0.0, 0.0, 0.0]) {
        assert!((b - want).abs() < 1e-9);
    }
}

#[test]
fn spec_fully_determines_output() {
    let spec = ScenarioSpec { kind: ScenarioKind::Friedman, n: 30, p: 7, p0: 5, sigma_sq: 5.0, seed: 3 };
    assert_eq!(spec.generate().unwrap(), spec.generate().unwrap());
    let null = ScenarioSpec { kind: ScenarioKind::Null, p0: 0, ..spec };
    let (d, t) = null.generate().unwrap();
    assert!(t.is_empty());
    assert_eq!(d.k(), 7);
}
