//! Small dense linear algebra and fitting helpers shared across modules.
//!
//! Everything here operates on problems of dimension at most a few, so plain
//! Gaussian elimination and normal equations are adequate.

use num_complex::Complex64;

/// Solve the 2x2 system `a * x = b`. Returns `None` when `a` is singular
/// relative to its own scale.
pub fn solve2(a: [[f64; 2]; 2], b: [f64; 2]) -> Option<[f64; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let scale = a[0][0].abs() + a[0][1].abs() + a[1][0].abs() + a[1][1].abs();
    if det.abs() <= 1e-300 + 1e-14 * scale * scale {
        return None;
    }
    Some([
        (b[0] * a[1][1] - b[1] * a[0][1]) / det,
        (a[0][0] * b[1] - a[1][0] * b[0]) / det,
    ])
}

/// Solve an n x n system in place by Gaussian elimination with partial
/// pivoting. `a` is row-major. Returns `None` on singular pivot.
pub fn solve_n(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if a[row][col].abs() > a[piv][col].abs() {
                piv = row;
            }
        }
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    Some(x)
}

/// Eigenvalues of a real 2x2 matrix as a complex pair (closed form).
pub fn eig2(a: [[f64; 2]; 2]) -> [Complex64; 2] {
    let tr = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        [
            Complex64::new(tr / 2.0 + s, 0.0),
            Complex64::new(tr / 2.0 - s, 0.0),
        ]
    } else {
        let s = (-disc).sqrt();
        [
            Complex64::new(tr / 2.0, s),
            Complex64::new(tr / 2.0, -s),
        ]
    }
}

/// Least-squares fit of `y ~ sum_j c_j * basis_j(x)` by normal equations.
/// Returns the coefficient vector, or `None` if the Gram matrix is singular.
pub fn least_squares(xs: &[f64], ys: &[f64], basis: &[&dyn Fn(f64) -> f64]) -> Option<Vec<f64>> {
    let m = basis.len();
    let mut gram = vec![vec![0.0; m]; m];
    let mut rhs = vec![0.0; m];
    for (&x, &y) in xs.iter().zip(ys) {
        let phi: Vec<f64> = basis.iter().map(|f| f(x)).collect();
        for i in 0..m {
            for j in 0..m {
                gram[i][j] += phi[i] * phi[j];
            }
            rhs[i] += phi[i] * y;
        }
    }
    solve_n(&mut gram, &mut rhs)
}

/// Slope and intercept of the ordinary least-squares line through
/// `(xs, ys)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    (slope, intercept)
}

/// Log-log slope of `ys` against `xs` (all entries must be positive).
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_fit(&lx, &ly).0
}

/// Deterministic SplitMix64 generator for probe-point generation in tests
/// and experiments. Not a statistical-quality RNG; reproducibility is the
/// point.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform sample in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform sample in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// FNV-1a 64-bit hash, used to derive stable run-directory names from
/// configuration text.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn solve2_inverts() {
        let a = [[2.0, 1.0], [1.0, 3.0]];
        let x = solve2(a, [5.0, 10.0]).unwrap();
        assert_relative_eq!(2.0 * x[0] + x[1], 5.0, epsilon = 1e-12);
        assert_relative_eq!(x[0] + 3.0 * x[1], 10.0, epsilon = 1e-12);
    }

    #[test]
    fn solve2_rejects_singular() {
        assert!(solve2([[1.0, 2.0], [2.0, 4.0]], [1.0, 2.0]).is_none());
    }

    #[test]
    fn eig2_complex_pair() {
        // [[0, -1], [1, 0]] has eigenvalues +/- i.
        let e = eig2([[0.0, -1.0], [1.0, 0.0]]);
        assert_relative_eq!(e[0].re, 0.0, epsilon = 1e-14);
        assert_relative_eq!(e[0].im.abs(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn least_squares_recovers_quadratic() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 / 5.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 - 2.0 * x + 0.25 * x * x).collect();
        let one = |_: f64| 1.0;
        let lin = |x: f64| x;
        let quad = |x: f64| x * x;
        let c = least_squares(&xs, &ys, &[&one, &lin, &quad]).unwrap();
        assert_relative_eq!(c[0], 1.5, epsilon = 1e-10);
        assert_relative_eq!(c[1], -2.0, epsilon = 1e-10);
        assert_relative_eq!(c[2], 0.25, epsilon = 1e-10);
    }

    #[test]
    fn loglog_slope_of_power_law() {
        let xs = [0.1, 0.2, 0.4, 0.8];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(1.7)).collect();
        assert_relative_eq!(loglog_slope(&xs, &ys), 1.7, epsilon = 1e-12);
    }

    #[test]
    fn splitmix_is_deterministic() {
        let mut a = SplitMix64::new(42);
        let mut b = SplitMix64::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let u = a.next_f64();
        assert!((0.0..1.0).contains(&u));
    }
}
