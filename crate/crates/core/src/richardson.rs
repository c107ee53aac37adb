//! Extrapolation helpers.

/// Richardson extrapolation of estimates computed at steps `h, h/2, h/4, …`
/// whose error expands in integer powers `h, h², h³, …`. Each entry is a
/// vector and is extrapolated componentwise. Returns the last diagonal
/// entry of the tableau.
pub fn richardson_halving(seq: &[Vec<f64>]) -> Vec<f64> {
    assert!(!seq.is_empty(), "richardson needs at least one estimate");
    let mut row: Vec<Vec<f64>> = seq.to_vec();
    let mut k = 1;
    while row.len() > 1 {
        let f = 2f64.powi(k);
        row = row
            .windows(2)
            .map(|w| w[1].iter().zip(&w[0]).map(|(a, b)| (f * a - b) / (f - 1.0)).collect())
            .collect();
        k += 1;
    }
    row.pop().unwrap()
}

/// Value at `x = 0` of the interpolating polynomial through `(xs, ys)`,
/// by Neville's scheme.
pub fn neville_at_zero(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mut p = ys.to_vec();
    let n = xs.len();
    for m in 1..n {
        for i in 0..n - m {
            let (xi, xj) = (xs[i], xs[i + m]);
            p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
        }
    }
    p[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn removes_polynomial_error_terms() {
        // D(h) = 3 + 2h - 5h² + h³
        let d = |h: f64| 3.0 + 2.0 * h - 5.0 * h * h + h * h * h;
        let seq: Vec<Vec<f64>> = (0..4).map(|i| vec![d(0.1 / 2f64.powi(i))]).collect();
        assert!((richardson_halving(&seq)[0] - 3.0).abs() < 1e-13);
        assert_eq!(richardson_halving(&seq[..1])[0], d(0.1));
    }

    #[test]
    fn neville_recovers_constant_term() {
        let xs = [0.5, 0.25, 0.125, 0.0625];
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 - x + 4.0 * x * x * x).collect();
        assert!((neville_at_zero(&xs, &ys) - 1.5).abs() < 1e-14);
    }
}
