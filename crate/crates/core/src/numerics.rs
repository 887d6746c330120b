//! Dense linear algebra used everywhere else.
//!
//! All eigensolves run sequentially so outputs are bit-reproducible
//! regardless of the thread budget; parallelism lives above this layer
//! (grid cells, independent lifts).

use crate::error::NumericsError;
use faer::{Mat, Par};
use num_complex::Complex64;
use std::sync::Once;

static SEQ: Once = Once::new();

/// Pin faer to sequential execution once per process.
fn ensure_seq() {
    SEQ.call_once(|| faer::set_global_parallelism(Par::Seq));
}

fn check_square_finite_c(m: &Mat<Complex64>) -> Result<(), NumericsError> {
    if m.nrows() != m.ncols() {
        return Err(NumericsError::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(NumericsError::NonFiniteEntry(i, j));
            }
        }
    }
    Ok(())
}

/// All eigenvalues with algebraic multiplicity. Real inputs take the real
/// Schur path, so their spectra come back exactly closed under conjugation.
pub fn eig_dense(m: &Mat<Complex64>) -> Result<Vec<Complex64>, NumericsError> {
    check_square_finite_c(m)?;
    let all_real = (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| m[(i, j)].im == 0.0));
    if all_real {
        let re = Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re);
        return eig_dense_real(&re);
    }
    ensure_seq();
    m.eigenvalues().map_err(|_| NumericsError::NonConvergence)
}

pub fn eig_dense_real(m: &Mat<f64>) -> Result<Vec<Complex64>, NumericsError> {
    if m.nrows() != m.ncols() {
        return Err(NumericsError::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if !m[(i, j)].is_finite() {
                return Err(NumericsError::NonFiniteEntry(i, j));
            }
        }
    }
    ensure_seq();
    m.eigenvalues().map_err(|_| NumericsError::NonConvergence)
}

/// Spectral radius of an entrywise-nonnegative real matrix via the dense
/// solve. The zero matrix gives 0.
pub fn spectral_radius_nonneg(m: &Mat<f64>) -> Result<f64, NumericsError> {
    debug_assert!((0..m.nrows()).all(|i| (0..m.ncols()).all(|j| m[(i, j)] >= 0.0)));
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let eigs = eig_dense_real(m)?;
    Ok(eigs.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Power iteration on `m + I` (shift keeps reducible and periodic cases
/// converging), returning the radius of `m`. Used as an independent
/// cross-check of `spectral_radius_nonneg`.
pub fn power_iteration_radius(m: &Mat<f64>, max_iter: usize, tol: f64) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut x = vec![1.0 / n as f64; n];
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = x[i]; // the +I shift
            for j in 0..n {
                s += m[(i, j)] * x[j];
            }
            y[i] = s;
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = y
            .iter()
            .zip(&x)
            .map(|(yi, xi)| yi * xi)
            .sum::<f64>()
            / x.iter().map(|v| v * v).sum::<f64>();
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
        if (next - lambda).abs() <= tol * next.abs().max(1.0) {
            return next - 1.0;
        }
        lambda = next;
    }
    lambda - 1.0
}

/// Determinant via pivoted LU.
pub fn det(m: &Mat<Complex64>) -> Result<Complex64, NumericsError> {
    check_square_finite_c(m)?;
    ensure_seq();
    Ok(m.determinant())
}

/// Greedy minimum-distance matching between two eigenvalue multisets;
/// returns the largest matched distance. Approximate when eigenvalues
/// cluster, which is fine at the tolerances used here.
pub fn match_multisets(a: &[Complex64], b: &[Complex64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| {
        (a[i].re, a[i].im)
            .partial_cmp(&(a[j].re, a[j].im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for &i in &order {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (j, bv) in b.iter().enumerate() {
            if !used[j] {
                let d = (a[i] - bv).norm();
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
        }
        used[best] = true;
        worst = worst.max(best_d);
    }
    Some(worst)
}

/// Largest distance from each element of `a` to its greedily matched
/// partner in `b`, where `b` may be larger than `a`. Returns the matched
/// indices of `b` alongside.
pub fn match_into(a: &[Complex64], b: &[Complex64]) -> (Vec<usize>, f64) {
    let mut used = vec![false; b.len()];
    let mut picks = Vec::with_capacity(a.len());
    let mut worst = 0.0_f64;
    for av in a {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (j, bv) in b.iter().enumerate() {
            if !used[j] {
                let d = (av - bv).norm();
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
        }
        used[best] = true;
        picks.push(best);
        worst = worst.max(best_d);
    }
    (picks, worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;

    fn cmat(rows: &[&[f64]]) -> Mat<Complex64> {
        Mat::from_fn(rows.len(), rows[0].len(), |i, j| C::new(rows[i][j], 0.0))
    }

    #[test]
    fn eig_identity_and_swap() {
        let eigs = eig_dense(&cmat(&[&[1.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert!(eigs.iter().all(|z| (z - C::new(1.0, 0.0)).norm() < 1e-12));
        let mut eigs = eig_dense(&cmat(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        eigs.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap());
        assert!((eigs[0] - C::new(-1.0, 0.0)).norm() < 1e-12);
        assert!((eigs[1] - C::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn eig_sqrt2() {
        // roots of lambda^2 = 2
        let eigs = eig_dense(&cmat(&[&[0.0, 1.0], &[2.0, 0.0]])).unwrap();
        let mut mods: Vec<f64> = eigs.iter().map(|z| z.norm()).collect();
        mods.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for m in mods {
            assert!((m - 2.0_f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn real_input_conjugation_closed() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in [5usize, 20, 50] {
            let m = Mat::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let eigs = eig_dense_real(&m).unwrap();
            let conj: Vec<C> = eigs.iter().map(|z| z.conj()).collect();
            assert!(match_multisets(&eigs, &conj).unwrap() < 1e-9);
        }
    }

    #[test]
    fn residuals_backward_stable() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 60;
        let m = Mat::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let norm = (0..n)
            .map(|i| (0..n).map(|j| m[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let eig = m.eigen().unwrap();
        let u = eig.U();
        let s = eig.S();
        for k in 0..n {
            let lam = s[k];
            let mut res = 0.0_f64;
            let mut vnorm = 0.0_f64;
            for i in 0..n {
                let mut mv = C::new(0.0, 0.0);
                for j in 0..n {
                    mv += C::new(m[(i, j)], 0.0) * u[(j, k)];
                }
                res += (mv - lam * u[(i, k)]).norm_sqr();
                vnorm += u[(i, k)].norm_sqr();
            }
            assert!(res.sqrt() / (norm * vnorm.sqrt()) < 1e-10);
        }
    }

    #[test]
    fn spectral_radius_cases() {
        let ones = Mat::from_fn(2, 2, |_, _| 1.0);
        assert!((spectral_radius_nonneg(&ones).unwrap() - 2.0).abs() < 1e-12);
        let zero = Mat::from_fn(3, 3, |_, _| 0.0);
        assert_eq!(spectral_radius_nonneg(&zero).unwrap(), 0.0);
        let m = Mat::from_fn(2, 2, |i, j| [[0.0, 1.0], [2.0, 0.0]][i][j]);
        assert!((spectral_radius_nonneg(&m).unwrap() - 2.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn spectral_radius_matches_power_iteration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in [4usize, 17, 50] {
            let m = Mat::from_fn(n, n, |_, _| rng.gen_range(0.0..1.0));
            let dense = spectral_radius_nonneg(&m).unwrap();
            let power = power_iteration_radius(&m, 20_000, 1e-13);
            assert!(
                (dense - power).abs() <= 1e-9 * dense.max(1.0),
                "n={n}: {dense} vs {power}"
            );
        }
    }

    #[test]
    fn determinants() {
        let id3 = cmat(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        assert!((det(&id3).unwrap() - C::new(1.0, 0.0)).norm() < 1e-12);
        let d = cmat(&[&[2.0, 0.0], &[0.0, 3.0]]);
        assert!((det(&d).unwrap() - C::new(6.0, 0.0)).norm() < 1e-12);
        let sing = cmat(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!(det(&sing).unwrap().norm() <= 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let rect = Mat::from_fn(2, 3, |_, _| C::new(0.0, 0.0));
        assert!(matches!(eig_dense(&rect), Err(NumericsError::NotSquare { .. })));
        let nan = Mat::from_fn(1, 1, |_, _| C::new(f64::NAN, 0.0));
        assert!(matches!(eig_dense(&nan), Err(NumericsError::NonFiniteEntry(0, 0))));
    }
}
