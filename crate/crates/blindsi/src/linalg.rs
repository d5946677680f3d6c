//! Dense-matrix primitives shared by the whole crate: the Toeplitz lift that
//! turns an input sequence into a convolution operator, the column-major `vec`
//! operator, the selection matrix tying the two together, and a symmetric
//! positive definite solver.
//!
//! Conventions: math indices in the docs are 1-based (row `t`, column `i`),
//! storage is 0-based. The mapping is fixed here and nowhere else: entry
//! `(t, i)` of a lift holds `u[t - i]` with `u` stored 0-based, so in storage
//! terms entry `(r, c)` holds `u[r - c]` when `r >= c` and zero otherwise.

use crate::error::{Error, Result};

pub type Matrix = nalgebra::DMatrix<f64>;
pub type Vector = nalgebra::DVector<f64>;

/// Builds the `N x n` Toeplitz convolution matrix of `u`, so that
/// `toeplitz_lift(u, n) * g` is the convolution of `u` and `g` truncated to
/// the first `N` samples.
pub fn toeplitz_lift(u: &Vector, n: usize) -> Result<Matrix> {
    let big_n = u.len();
    if n == 0 || n > big_n {
        return Err(Error::Dimension(format!(
            "toeplitz lift needs 1 <= n <= N, got n = {n}, N = {big_n}"
        )));
    }
    Ok(Matrix::from_fn(big_n, n, |r, c| {
        if r >= c {
            u[r - c]
        } else {
            0.0
        }
    }))
}

/// Column-major stacking of a matrix into a vector.
///
/// Column-major order is what makes `vec(U)^T (S ⊗ I_N) vec(U) = Tr[U^T U S]`
/// hold for symmetric `S`; a row-major stacking would need `I_N ⊗ S` instead.
pub fn vectorize(m: &Matrix) -> Vector {
    Vector::from_column_slice(m.as_slice())
}

/// The `N*n x N` selection matrix `R` with `R u = vec(toeplitz_lift(u, n))`
/// for every `u` of length `N`. Each row holds at most a single 1; the first
/// `N` rows are the identity, so `R` is injective.
pub fn selection_matrix(big_n: usize, n: usize) -> Result<Matrix> {
    if n == 0 || n > big_n {
        return Err(Error::Dimension(format!(
            "selection matrix needs 1 <= n <= N, got n = {n}, N = {big_n}"
        )));
    }
    let mut r = Matrix::zeros(big_n * n, big_n);
    for c in 0..n {
        for row in c..big_n {
            // vec position of lift entry (row, c), which copies u[row - c]
            r[(c * big_n + row, row - c)] = 1.0;
        }
    }
    Ok(r)
}

/// Kronecker product. Only used to spell out small-instance oracles in tests;
/// the production paths assemble the equivalent quadratic forms directly.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

/// Zero-pads a vector to `len` (entries keep their positions).
pub fn zero_pad(v: &Vector, len: usize) -> Result<Vector> {
    if v.len() > len {
        return Err(Error::Dimension(format!(
            "cannot pad a vector of length {} down to {len}",
            v.len()
        )));
    }
    let mut out = Vector::zeros(len);
    out.rows_mut(0, v.len()).copy_from(v);
    Ok(out)
}

/// Mean-removed variance with divisor `N` (population form).
pub fn population_variance(v: &Vector) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mean = v.sum() / v.len() as f64;
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / v.len() as f64
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
///
/// Hand-rolled rather than delegated so that a failed factorization can name
/// the pivot that went non-positive.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    l: Matrix,
}

impl CholeskyFactor {
    /// Factors `a = L L^T`. The caller is responsible for symmetry; see
    /// [`spd_solve`] for the checked entry point.
    pub fn new(a: &Matrix) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::Dimension(format!(
                "cholesky needs a square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn lower(&self) -> &Matrix {
        &self.l
    }

    /// `log det A = 2 Σ log L_jj`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|j| self.l[(j, j)].ln()).sum::<f64>()
    }

    /// Solves `A x = b` by forward/backward substitution.
    pub fn solve_vec(&self, b: &Vector) -> Result<Vector> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::Dimension(format!(
                "solve: matrix is {n}x{n} but rhs has length {}",
                b.len()
            )));
        }
        let mut x = b.clone();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    /// Solves `A X = B` column by column.
    pub fn solve_mat(&self, b: &Matrix) -> Result<Matrix> {
        let n = self.dim();
        if b.nrows() != n {
            return Err(Error::Dimension(format!(
                "solve: matrix is {n}x{n} but rhs has {} rows",
                b.nrows()
            )));
        }
        let mut x = b.clone();
        for mut col in x.column_iter_mut() {
            let mut tmp = Vector::from_column_slice(col.as_slice());
            self.solve_in_place(&mut tmp);
            col.copy_from(&tmp);
        }
        Ok(x)
    }

    fn solve_in_place(&self, x: &mut Vector) {
        let n = self.dim();
        // L z = b
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[(i, k)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        // L^T x = z
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
    }

    /// Explicit inverse, formed through the factor as `X^T X` with
    /// `X = L^{-1}` so the result is symmetric to the last bit.
    pub fn inverse(&self) -> Matrix {
        let n = self.dim();
        // X = L^{-1}: forward-substitute the identity, column by column.
        let mut x = Matrix::zeros(n, n);
        for j in 0..n {
            for i in j..n {
                let mut s = if i == j { 1.0 } else { 0.0 };
                for k in j..i {
                    s -= self.l[(i, k)] * x[(k, j)];
                }
                x[(i, j)] = s / self.l[(i, i)];
            }
        }
        x.tr_mul(&x)
    }
}

fn check_symmetric(a: &Matrix, tol: f64) -> Result<()> {
    let scale = 1.0f64.max(a.amax());
    for i in 0..a.nrows() {
        for j in i + 1..a.ncols() {
            if (a[(i, j)] - a[(j, i)]).abs() > tol * scale {
                return Err(Error::Dimension(format!(
                    "matrix is not symmetric at ({i}, {j}): {} vs {}",
                    a[(i, j)],
                    a[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

/// Solves `A X = B` for symmetric positive definite `A` through a Cholesky
/// factorization. No jitter is added on failure; callers that want jitter add
/// it themselves.
pub fn spd_solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    check_symmetric(a, 1e-10)?;
    CholeskyFactor::new(a)?.solve_mat(b)
}

/// Vector right-hand-side variant of [`spd_solve`].
pub fn spd_solve_vec(a: &Matrix, b: &Vector) -> Result<Vector> {
    check_symmetric(a, 1e-10)?;
    CholeskyFactor::new(a)?.solve_vec(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dvec(v: &[f64]) -> Vector {
        Vector::from_column_slice(v)
    }

    #[test]
    fn lift_matches_displayed_pattern() {
        let u = dvec(&[1.0, 2.0, 3.0]);
        let t = toeplitz_lift(&u, 2).unwrap();
        let expected = Matrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 1.0, 3.0, 2.0]);
        assert_eq!(t, expected);
    }

    #[test]
    fn lift_of_zero_input_is_zero() {
        let u = Vector::zeros(4);
        let t = toeplitz_lift(&u, 3).unwrap();
        assert_eq!(t, Matrix::zeros(4, 3));
    }

    #[test]
    fn lift_rejects_bad_width() {
        let u = dvec(&[1.0, 2.0]);
        assert!(matches!(toeplitz_lift(&u, 0), Err(Error::Dimension(_))));
        assert!(matches!(toeplitz_lift(&u, 3), Err(Error::Dimension(_))));
    }

    #[test]
    fn commutation_on_the_worked_pair() {
        // Both products equal the truncated convolution [3, 10].
        let v1 = dvec(&[1.0, 2.0]);
        let v2 = dvec(&[3.0, 4.0]);
        let lhs = toeplitz_lift(&v1, 2).unwrap() * &v2;
        let rhs = toeplitz_lift(&v2, 2).unwrap() * &v1;
        assert_eq!(lhs, dvec(&[3.0, 10.0]));
        assert_eq!(rhs, dvec(&[3.0, 10.0]));
    }

    #[test]
    fn vectorize_is_column_major() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(vectorize(&m), dvec(&[1.0, 3.0, 2.0, 4.0]));
        assert_eq!(vectorize(&Matrix::zeros(2, 3)), Vector::zeros(6));
    }

    #[test]
    fn trace_identity_on_worked_example() {
        // vec(U)^T (I_2 ⊗ I_3) vec(U) = Tr[U^T U] = 19 for U = T_2([1,2,3]).
        let u = toeplitz_lift(&dvec(&[1.0, 2.0, 3.0]), 2).unwrap();
        let s = Matrix::identity(2, 2);
        let v = vectorize(&u);
        let lhs = (v.transpose() * kron(&s, &Matrix::identity(3, 3)) * &v)[(0, 0)];
        let rhs = (u.tr_mul(&u)).trace();
        assert!((lhs - 19.0).abs() < 1e-12);
        assert!((rhs - 19.0).abs() < 1e-12);
    }

    #[test]
    fn selection_matrix_trivial_and_worked_cases() {
        assert_eq!(selection_matrix(2, 1).unwrap(), Matrix::identity(2, 2));

        let r = selection_matrix(3, 2).unwrap();
        let u = dvec(&[5.0, 6.0, 7.0]);
        assert_eq!(&r * &u, dvec(&[5.0, 6.0, 7.0, 0.0, 5.0, 6.0]));
    }

    #[test]
    fn selection_matrix_is_injective() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let r = selection_matrix(9, 4).unwrap();
        for _ in 0..20 {
            let u = Vector::from_fn(9, |_, _| rng.random_range(-1.0..1.0));
            let ru = &r * &u;
            // first N rows reproduce u
            assert_eq!(ru.rows(0, 9), u.rows(0, 9));
        }
    }

    #[test]
    fn kron_small_cases() {
        let i6 = kron(&Matrix::identity(2, 2), &Matrix::identity(3, 3));
        assert_eq!(i6, Matrix::identity(6, 6));

        let b = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(kron(&Matrix::from_element(1, 1, 2.0), &b), 2.0 * &b);

        let d = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let scalar = Matrix::from_element(1, 1, 3.0);
        assert_eq!(
            kron(&d, &scalar),
            Matrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 6.0])
        );
    }

    #[test]
    fn spd_solve_identity_and_diagonal() {
        let b = dvec(&[1.0, 1.0]);
        let x = spd_solve_vec(&Matrix::identity(2, 2), &b).unwrap();
        assert_eq!(x, b);

        let a = Matrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0]);
        let x = spd_solve_vec(&a, &b).unwrap();
        assert!((x[0] - 0.25).abs() < 1e-15);
        assert!((x[1] - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn spd_solve_random_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = Matrix::from_fn(8, 8, |_, _| rng.random_range(-1.0..1.0));
        let a = m.tr_mul(&m) + Matrix::identity(8, 8);
        let b = Vector::from_fn(8, |_, _| rng.random_range(-1.0..1.0));
        let x = spd_solve_vec(&a, &b).unwrap();
        let resid = (&a * &x - &b).norm() / b.norm();
        assert!(resid <= 1e-10, "residual {resid}");
    }

    #[test]
    fn spd_solve_reports_failing_pivot() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match spd_solve_vec(&a, &dvec(&[1.0, 1.0])) {
            Err(Error::NotPositiveDefinite { pivot }) => assert_eq!(pivot, 1),
            other => panic!("expected pivot failure, got {other:?}"),
        }
    }

    #[test]
    fn spd_solve_rejects_asymmetry() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(
            spd_solve_vec(&a, &dvec(&[1.0, 1.0])),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn cholesky_inverse_is_bitwise_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Matrix::from_fn(6, 6, |_, _| rng.random_range(-1.0..1.0));
        let a = m.tr_mul(&m) + Matrix::identity(6, 6);
        let inv = CholeskyFactor::new(&a).unwrap().inverse();
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(inv[(i, j)].to_bits(), inv[(j, i)].to_bits());
            }
        }
        let prod = &a * &inv;
        assert!((prod - Matrix::identity(6, 6)).amax() < 1e-10);
    }

    proptest! {
        #[test]
        fn prop_toeplitz_commutation(
            v1 in proptest::collection::vec(-5.0f64..5.0, 1..20),
            v2 in proptest::collection::vec(-5.0f64..5.0, 1..20),
        ) {
            // pad both vectors into a common ambient length so the products
            // are the same truncated convolution
            let q = v1.len() + v2.len();
            let p1 = zero_pad(&dvec(&v1), q).unwrap();
            let p2 = zero_pad(&dvec(&v2), q).unwrap();
            let lhs = toeplitz_lift(&p1, v2.len()).unwrap() * dvec(&v2);
            let rhs = toeplitz_lift(&p2, v1.len()).unwrap() * dvec(&v1);
            prop_assert!((lhs - rhs).amax() <= 1e-12);
        }

        #[test]
        fn prop_selection_matrix_matches_vec_of_lift(
            u in proptest::collection::vec(-5.0f64..5.0, 1..30),
            frac in 0.0f64..1.0,
        ) {
            let big_n = u.len();
            let n = 1 + ((big_n - 1) as f64 * frac) as usize;
            let uv = dvec(&u);
            let r = selection_matrix(big_n, n).unwrap();
            let lhs = &r * &uv;
            let rhs = vectorize(&toeplitz_lift(&uv, n).unwrap());
            // entries are copies, equality is exact
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn prop_trace_vec_identity(
            u in proptest::collection::vec(-3.0f64..3.0, 2..10),
            s_seed in proptest::collection::vec(-3.0f64..3.0, 16),
        ) {
            let big_n = u.len();
            let n = 1 + big_n / 3;
            if n > big_n { return Ok(()); }
            let raw = Matrix::from_fn(n, n, |i, j| s_seed[(i * 4 + j) % 16]);
            let s = 0.5 * (&raw + raw.transpose());
            let lift = toeplitz_lift(&dvec(&u), n).unwrap();
            let v = vectorize(&lift);
            let lhs = (v.transpose() * kron(&s, &Matrix::identity(big_n, big_n)) * &v)[(0, 0)];
            let rhs = lift.tr_mul(&lift).component_mul(&s).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }
    }
}
