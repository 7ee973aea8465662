//! Oracles shared by integration tests.

/// `exp(tA) v` by a dense Taylor series with scaling and squaring.
pub fn dense_expm_apply(a: &[Vec<f64>], v: &[f64], t: f64) -> Vec<f64> {
    let n = a.len();
    let norm: f64 = a
        .iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = (norm * t).log2().ceil().max(0.0) as u32 + 4;
    let h = t / 2f64.powi(squarings as i32);
    let mul = |x: &[Vec<f64>], y: &[Vec<f64>]| -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| x[i][k] * y[k][j]).sum())
                    .collect()
            })
            .collect()
    };
    let mut e: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect())
        .collect();
    let mut term = e.clone();
    for k in 1..40 {
        term = mul(&term, a)
            .into_iter()
            .map(|r| r.into_iter().map(|x| x * h / k as f64).collect())
            .collect();
        for i in 0..n {
            for j in 0..n {
                e[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        e = mul(&e, &e);
    }
    (0..n)
        .map(|i| (0..n).map(|j| e[i][j] * v[j]).sum())
        .collect()
}
