//! Small dense helpers for row-major `d x d` blocks stored in flat slices.

/// Euclidean norm of a vector, or Frobenius norm of a flattened matrix.
pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Distance between two equally sized vectors.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `out[i * b.len() + j] = a[i] * b[j]`.
pub fn outer_into(a: &[f64], b: &[f64], out: &mut [f64]) {
    let n = b.len();
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i * n + j] = ai * bj;
        }
    }
}

pub fn outer(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() * b.len()];
    outer_into(a, b, &mut out);
    out
}

/// Row-major `(rows x cols)` matrix times vector.
pub fn mat_vec(m: &[f64], rows: usize, cols: usize, x: &[f64]) -> Vec<f64> {
    (0..rows)
        .map(|i| dot(&m[i * cols..(i + 1) * cols], x))
        .collect()
}

/// Row-major `(rows x inner) * (inner x cols)`.
pub fn mat_mul(a: &[f64], b: &[f64], rows: usize, inner: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        for k in 0..inner {
            let aik = a[i * inner + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..cols {
                out[i * cols + j] += aik * b[k * cols + j];
            }
        }
    }
    out
}

/// Quadratic form `x^T m y` for a square row-major `m`.
pub fn bilinear(x: &[f64], m: &[f64], y: &[f64]) -> f64 {
    let d = x.len();
    let mut acc = 0.0;
    for i in 0..d {
        acc += x[i] * dot(&m[i * d..(i + 1) * d], y);
    }
    acc
}

/// Frobenius pairing `sum_ij a_ij b_ij`.
pub fn frobenius(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b)
}

/// Trace pairing `sum_ij a_ij b_ji` of two square matrices.
pub fn trace_pairing(a: &[f64], b: &[f64], d: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            acc += a[i * d + j] * b[j * d + i];
        }
    }
    acc
}

pub fn identity(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

/// Summation in a fixed pairwise order, independent of thread scheduling.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 16 {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(x: &[f64]) -> (f64, f64) {
    let n = x.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(x) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = x.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_pairing_matches_explicit_sum() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [5.0, 6.0, 7.0, 8.0];
        assert_eq!(trace_pairing(&a, &b, 2), 1.0 * 5.0 + 2.0 * 7.0 + 3.0 * 6.0 + 4.0 * 8.0);
    }

    #[test]
    fn pairwise_sum_of_ones() {
        let x = vec![1.0; 1001];
        assert_eq!(pairwise_sum(&x), 1001.0);
    }

    #[test]
    fn mean_stderr_known_values() {
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0_f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
