//! Dense linear algebra for matrices of dimension ≤ 4.
//!
//! Eigenvalues come from the characteristic polynomial (Faddeev–LeVerrier
//! coefficients, closed-form quadratic/cubic/quartic roots, complex Newton
//! polish), eigenvectors from complex Gaussian elimination on `A − λI`.

use num_complex::Complex64;

pub type Matrix = Vec<Vec<f64>>;

pub fn identity(n: usize) -> Matrix {
    let mut m = vec![vec![0.0; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn mat_vec(a: &Matrix, v: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(r, x)| r * x).sum())
        .collect()
}

pub fn transpose(a: &Matrix) -> Matrix {
    let n = a.len();
    let m = a[0].len();
    let mut t = vec![vec![0.0; n]; m];
    for i in 0..n {
        for j in 0..m {
            t[j][i] = a[i][j];
        }
    }
    t
}

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let k = b.len();
    let m = b[0].len();
    let mut c = vec![vec![0.0; m]; n];
    for i in 0..n {
        for l in 0..k {
            let alv = a[i][l];
            if alv == 0.0 {
                continue;
            }
            for j in 0..m {
                c[i][j] += alv * b[l][j];
            }
        }
    }
    c
}

pub fn frobenius(a: &Matrix) -> f64 {
    a.iter()
        .flat_map(|r| r.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
}

pub fn trace(a: &Matrix) -> f64 {
    (0..a.len()).map(|i| a[i][i]).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot degenerates.
pub fn solve(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[row][k] -= factor * m[col][k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// Damped normal-equation step `(JᵀJ + μI)δ = −Jᵀr` for least-squares Newton.
pub fn damped_step(jacobian: &Matrix, residual: &[f64], mu: f64) -> Option<Vec<f64>> {
    let jt = transpose(jacobian);
    let mut jtj = mat_mul(&jt, jacobian);
    for (i, row) in jtj.iter_mut().enumerate() {
        row[i] += mu;
    }
    let jtr = mat_vec(&jt, residual);
    let rhs: Vec<f64> = jtr.iter().map(|x| -x).collect();
    solve(&jtj, &rhs)
}

// ---------------------------------------------------------------------------
// Polynomial roots
// ---------------------------------------------------------------------------

/// Roots of x² + bx + c.
pub fn roots_quadratic(b: f64, c: f64) -> Vec<Complex64> {
    let disc = Complex64::new(b * b - 4.0 * c, 0.0).sqrt();
    // Avoid cancellation: compute the large-magnitude root first.
    let b_c = Complex64::new(b, 0.0);
    let q = if b >= 0.0 {
        (-b_c - disc) * 0.5
    } else {
        (-b_c + disc) * 0.5
    };
    if q.norm() < 1e-300 {
        return vec![Complex64::new(0.0, 0.0), -b_c];
    }
    vec![q, Complex64::new(c, 0.0) / q]
}

/// Roots of x³ + bx² + cx + d.
pub fn roots_cubic(b: f64, c: f64, d: f64) -> Vec<Complex64> {
    // Depressed form t³ + pt + q with x = t − b/3.
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let shift = -b / 3.0;
    let disc = -4.0 * p * p * p - 27.0 * q * q;
    if disc >= 0.0 {
        // Three real roots, trigonometric form.
        let r = (-p / 3.0).max(0.0).sqrt();
        let cos_arg = if r.abs() < 1e-300 {
            0.0
        } else {
            (-q / (2.0 * r * r * r)).clamp(-1.0, 1.0)
        };
        let theta = cos_arg.acos();
        (0..3)
            .map(|k| {
                let angle = (theta + 2.0 * std::f64::consts::PI * k as f64) / 3.0;
                Complex64::new(2.0 * r * angle.cos() + shift, 0.0)
            })
            .collect()
    } else {
        // One real root via Cardano, then deflate to a quadratic.
        let sqrt_disc = (q * q / 4.0 + p * p * p / 27.0).sqrt();
        let u = (-q / 2.0 + sqrt_disc).cbrt();
        let v = (-q / 2.0 - sqrt_disc).cbrt();
        let real_root = u + v + shift;
        // x³ + bx² + cx + d = (x − real_root)(x² + βx + γ)
        let beta = b + real_root;
        let gamma = c + real_root * beta;
        let mut out = vec![Complex64::new(real_root, 0.0)];
        out.extend(roots_quadratic(beta, gamma));
        out
    }
}

/// Roots of x⁴ + bx³ + cx² + dx + e via Ferrari's factorization.
pub fn roots_quartic(b: f64, c: f64, d: f64, e: f64) -> Vec<Complex64> {
    // Depressed form y⁴ + py² + qy + r with x = y − b/4.
    let b4 = b / 4.0;
    let p = c - 6.0 * b4 * b4;
    let q = d - 2.0 * c * b4 + 8.0 * b4 * b4 * b4;
    let r = e - d * b4 + c * b4 * b4 - 3.0 * b4 * b4 * b4 * b4;
    let shift = -b4;

    let ys: Vec<Complex64> = if q.abs() < 1e-14 * (1.0 + p.abs() + r.abs()) {
        // Biquadratic: z² + pz + r with y = ±√z.
        roots_quadratic(p, r)
            .into_iter()
            .flat_map(|z| {
                let s = z.sqrt();
                [s, -s]
            })
            .collect()
    } else {
        // Find m with 8m³ + 8pm² + (2p² − 8r)m − q² = 0, m > 0.
        let ms = roots_cubic(p, (2.0 * p * p - 8.0 * r) / 8.0, -q * q / 8.0);
        let m = ms
            .iter()
            .filter(|z| z.im.abs() < 1e-9 * (1.0 + z.re.abs()) && z.re > 0.0)
            .map(|z| z.re)
            .fold(f64::NAN, f64::max);
        let m = if m.is_nan() {
            // Fall back to the real root of largest magnitude.
            ms.iter()
                .map(|z| z.re)
                .fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a })
        } else {
            m
        };
        let s = Complex64::new(2.0 * m, 0.0).sqrt();
        let tq = Complex64::new(q, 0.0) / (s * 2.0);
        let base = Complex64::new(p / 2.0 + m, 0.0);
        let mut out = Vec::with_capacity(4);
        out.extend(quadratic_complex(-s, base + tq));
        out.extend(quadratic_complex(s, base - tq));
        out
    };
    ys.into_iter().map(|y| y + shift).collect()
}

fn quadratic_complex(b: Complex64, c: Complex64) -> Vec<Complex64> {
    let disc = (b * b - c * 4.0).sqrt();
    let r1 = (-b + disc) * 0.5;
    let r2 = (-b - disc) * 0.5;
    vec![r1, r2]
}

/// Real roots of c₃x³ + c₂x² + c₁x + c₀, degrading gracefully when leading
/// coefficients vanish.
pub fn real_roots_poly3(c3: f64, c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    let scale = c3.abs().max(c2.abs()).max(c1.abs()).max(c0.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    let tol = 1e-12 * scale;
    if c3.abs() > tol {
        roots_cubic(c2 / c3, c1 / c3, c0 / c3)
            .into_iter()
            .filter(|z| z.im.abs() <= 1e-9 * (1.0 + z.re.abs()))
            .map(|z| z.re)
            .collect()
    } else if c2.abs() > tol {
        roots_quadratic(c1 / c2, c0 / c2)
            .into_iter()
            .filter(|z| z.im.abs() <= 1e-9 * (1.0 + z.re.abs()))
            .map(|z| z.re)
            .collect()
    } else if c1.abs() > tol {
        vec![-c0 / c1]
    } else {
        Vec::new()
    }
}

// ---------------------------------------------------------------------------
// Eigenvalues and eigenvectors
// ---------------------------------------------------------------------------

/// Monic characteristic polynomial coefficients `[c₁, …, cₙ]` with
/// `p(λ) = λⁿ + c₁λⁿ⁻¹ + … + cₙ`, by Faddeev–LeVerrier.
pub fn characteristic_polynomial(a: &Matrix) -> Vec<f64> {
    let n = a.len();
    let mut coeffs = Vec::with_capacity(n);
    let mut m = a.clone();
    for k in 1..=n {
        let c = -trace(&m) / k as f64;
        coeffs.push(c);
        if k == n {
            break;
        }
        let mut shifted = m.clone();
        for (i, row) in shifted.iter_mut().enumerate() {
            row[i] += c;
        }
        m = mat_mul(a, &shifted);
    }
    coeffs
}

fn eval_poly(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    // Horner for monic p and p'.
    let mut p = Complex64::new(1.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Eigenvalues of a real matrix of dimension 1..=4 via the characteristic
/// polynomial, polished by a few complex Newton steps away from multiple
/// roots.
pub fn eigenvalues(a: &Matrix) -> Vec<Complex64> {
    let n = a.len();
    let coeffs = characteristic_polynomial(a);
    let mut roots = match n {
        1 => vec![Complex64::new(-coeffs[0], 0.0)],
        2 => roots_quadratic(coeffs[0], coeffs[1]),
        3 => roots_cubic(coeffs[0], coeffs[1], coeffs[2]),
        4 => roots_quartic(coeffs[0], coeffs[1], coeffs[2], coeffs[3]),
        _ => panic!("eigenvalues supported for dimension 1..=4, got {n}"),
    };
    let scale = frobenius(a).max(1.0);
    for root in roots.iter_mut() {
        for _ in 0..4 {
            let (p, dp) = eval_poly(&coeffs, *root);
            if dp.norm() <= 1e-9 * scale.powi(n as i32 - 1) {
                break;
            }
            let step = p / dp;
            if !step.re.is_finite() || !step.im.is_finite() {
                break;
            }
            *root -= step;
        }
        // Real matrices: scrub numerically spurious imaginary parts.
        if root.im.abs() <= 1e-10 * (1.0 + root.re.abs()) {
            root.im = 0.0;
        }
    }
    roots
}

/// Sort eigenvalues by descending real part, ties by descending imaginary
/// part.
pub fn sort_spectrum(roots: &mut [Complex64]) {
    roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
}

/// Basis of the numerical null space of `A − λI` by complex Gaussian
/// elimination with partial pivoting.
pub fn null_space(a: &Matrix, lambda: Complex64, tol: f64) -> Vec<Vec<Complex64>> {
    let n = a.len();
    let mut m: Vec<Vec<Complex64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &x)| {
                    let mut z = Complex64::new(x, 0.0);
                    if i == j {
                        z -= lambda;
                    }
                    z
                })
                .collect()
        })
        .collect();

    let mut pivot_cols = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let pivot = (row..n).max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()));
        let pivot = match pivot {
            Some(p) => p,
            None => break,
        };
        if m[pivot][col].norm() <= tol {
            continue;
        }
        m.swap(row, pivot);
        let lead = m[row][col];
        for k in 0..n {
            m[row][k] /= lead;
        }
        for r in 0..n {
            if r != row && m[r][col].norm() > 0.0 {
                let factor = m[r][col];
                for k in 0..n {
                    let sub = factor * m[row][k];
                    m[r][k] -= sub;
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
        if row == n {
            break;
        }
    }

    let free_cols: Vec<usize> = (0..n).filter(|c| !pivot_cols.contains(c)).collect();
    let mut basis = Vec::new();
    for &fc in &free_cols {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[fc] = Complex64::new(1.0, 0.0);
        for (r, &pc) in pivot_cols.iter().enumerate() {
            v[pc] = -m[r][fc];
        }
        normalize(&mut v);
        basis.push(v);
    }
    basis
}

/// Deterministic normalization: unit norm with the largest-modulus component
/// rotated to the positive real axis.
fn normalize(v: &mut [Complex64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return;
    }
    let lead = v
        .iter()
        .cloned()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap();
    let phase = lead / lead.norm();
    for z in v.iter_mut() {
        *z /= phase * norm;
    }
}

/// One eigenvector for the eigenvalue, if the null space is nonempty.
pub fn eigenvector(a: &Matrix, lambda: Complex64) -> Option<Vec<Complex64>> {
    let tol = 1e-8 * frobenius(a).max(1.0);
    null_space(a, lambda, tol).into_iter().next()
}

/// Singular values by one-sided Jacobi (Hestenes) column orthogonalization.
/// Accurate to machine precision even for exactly singular matrices, unlike
/// the spectrum of AᵀA which squares the conditioning.
pub fn singular_values(a: &Matrix) -> Vec<f64> {
    let n = a.len();
    // Work on columns.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| a[i][j]).collect()).collect();
    for _sweep in 0..30 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                let alpha: f64 = cols[i].iter().map(|x| x * x).sum();
                let beta: f64 = cols[j].iter().map(|x| x * x).sum();
                let gamma: f64 = cols[i].iter().zip(&cols[j]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-30 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt().max(1e-300));
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..n {
                    let vi = cols[i][k];
                    let vj = cols[j][k];
                    cols[i][k] = c * vi - s * vj;
                    cols[j][k] = s * vi + c * vj;
                }
            }
        }
        if off <= 1e-15 {
            break;
        }
    }
    let mut sv: Vec<f64> = cols.iter().map(|c| norm(c)).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Numerical rank: singular values above an absolute threshold.
pub fn numerical_rank(a: &Matrix, threshold: f64) -> usize {
    singular_values(a)
        .into_iter()
        .filter(|s| *s > threshold)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cubic_known_roots() {
        // (x−1)(x−2)(x−3) = x³ −6x² +11x −6
        let mut roots: Vec<f64> = roots_cubic(-6.0, 11.0, -6.0).iter().map(|z| z.re).collect();
        roots.sort_by(f64::total_cmp);
        for (r, expect) in roots.iter().zip([1.0, 2.0, 3.0]) {
            assert!((r - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn quartic_known_roots() {
        // (x²+1)(x−2)(x+3) = x⁴ + x³ −5x² + x −6
        let mut roots = roots_quartic(1.0, -5.0, 1.0, -6.0);
        roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let expected = [
            Complex64::new(-3.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(2.0, 0.0),
        ];
        for (r, e) in roots.iter().zip(expected) {
            assert!((r - e).norm() < 1e-8, "{r} vs {e}");
        }
    }

    #[test]
    fn rank_of_shifted_jordan_block() {
        let m = vec![
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0],
            vec![0.0, 0.0, -1.0],
        ];
        assert_eq!(numerical_rank(&m, 1e-8 * frobenius(&m)), 2);
    }

    #[test]
    fn null_space_of_double_eigenvalue() {
        let a = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let basis = null_space(&a, Complex64::new(1.0, 0.0), 1e-10);
        assert_eq!(basis.len(), 2);
    }

    fn residual(a: &Matrix, lambda: Complex64, v: &[Complex64]) -> f64 {
        let n = a.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                acc += a[i][j] * v[j];
            }
            worst = worst.max((acc - lambda * v[i]).norm());
        }
        worst
    }

    proptest! {
        #[test]
        fn eigen_sum_and_product(entries in proptest::collection::vec(-10.0f64..10.0, 16),
                                 n in 2usize..=4) {
            let a: Matrix = (0..n).map(|i| entries[i*n..(i+1)*n].to_vec()).collect();
            let eig = eigenvalues(&a);
            let sum: Complex64 = eig.iter().sum();
            let tr = trace(&a);
            let scale = frobenius(&a).max(1.0);
            prop_assert!((sum.re - tr).abs() <= 1e-9 * scale && sum.im.abs() <= 1e-9 * scale);

            let prod: Complex64 = eig.iter().product();
            let det = determinant(&a);
            let dscale = scale.powi(n as i32).max(1.0);
            prop_assert!((prod.re - det).abs() <= 1e-9 * dscale && prod.im.abs() <= 1e-9 * dscale);
        }

        #[test]
        fn eigenpairs_satisfy_definition(entries in proptest::collection::vec(-10.0f64..10.0, 9)) {
            let a: Matrix = (0..3).map(|i| entries[i*3..(i+1)*3].to_vec()).collect();
            let scale = frobenius(&a).max(1.0);
            for lambda in eigenvalues(&a) {
                if let Some(v) = eigenvector(&a, lambda) {
                    prop_assert!(residual(&a, lambda, &v) <= 1e-8 * scale);
                }
            }
        }
    }

    fn determinant(a: &Matrix) -> f64 {
        let n = a.len();
        let mut m = a.clone();
        let mut det = 1.0;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
                .unwrap();
            if m[pivot][col] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                m.swap(col, pivot);
                det = -det;
            }
            det *= m[col][col];
            for row in col + 1..n {
                let f = m[row][col] / m[col][col];
                for k in col..n {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
        det
    }
}
