//! Dense complex matrix helpers shared by the operator modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

/// Guard against `0/0` in relative residuals.
pub const RESIDUAL_FLOOR: f64 = 1e-300;

/// `‖a − b‖ / max(‖a‖, ‖b‖, floor)` in the Frobenius norm.
pub fn rel_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(RESIDUAL_FLOOR)
}

/// `‖[a, b]‖ / (‖a‖ ‖b‖)`.
pub fn rel_commutator(a: &CMat, b: &CMat) -> f64 {
    (a * b - b * a).norm() / (a.norm() * b.norm()).max(RESIDUAL_FLOOR)
}

/// All permutations of `0..p` with their signs, identity first.
pub fn signed_permutations(p: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<(Vec<usize>, f64)>) {
        let p = used.len();
        if prefix.len() == p {
            let mut inv = 0;
            for i in 0..p {
                for j in i + 1..p {
                    if prefix[i] > prefix[j] {
                        inv += 1;
                    }
                }
            }
            out.push((prefix.clone(), if inv % 2 == 0 { 1.0 } else { -1.0 }));
            return;
        }
        for v in 0..p {
            if !used[v] {
                used[v] = true;
                prefix.push(v);
                rec(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; p], &mut out);
    out
}

/// Determinant of a `p × p` matrix whose entries are mutually commuting
/// operators, by the Leibniz expansion with row-major factor order.
pub fn operator_det(m: &[Vec<CMat>]) -> CMat {
    operator_det_ordered(m, &(0..m.len()).collect::<Vec<_>>())
}

/// As [`operator_det`], multiplying the factors of each term in the row order `order`.
pub fn operator_det_ordered(m: &[Vec<CMat>], order: &[usize]) -> CMat {
    let p = m.len();
    assert!(p > 0, "empty operator determinant");
    let dim = m[0][0].nrows();
    let mut acc = CMat::zeros(dim, dim);
    for (perm, sign) in signed_permutations(p) {
        let mut prod = CMat::identity(dim, dim);
        for &row in order {
            prod *= &m[row][perm[row]];
        }
        acc += prod * Complex64::new(sign, 0.0);
    }
    acc
}

/// Matrix of scalars `det` by LU.
pub fn det(m: &CMat) -> Complex64 {
    m.clone().determinant()
}

/// Eigenvalues of a general complex matrix from its Schur form.
pub fn eigenvalues(m: &CMat) -> Option<Vec<Complex64>> {
    if m.nrows() == 0 {
        return Some(Vec::new());
    }
    let schur = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 10_000)?;
    let (_, t) = schur.unpack();
    Some((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Unit right null vector of `m − λ` from the smallest singular value.
pub fn eigenvector(m: &CMat, lambda: Complex64) -> DVector<Complex64> {
    let d = m.nrows();
    let shifted = m - CMat::identity(d, d) * lambda;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let (mut best, mut idx) = (f64::INFINITY, 0);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s < best {
            best = s;
            idx = i;
        }
    }
    let v: DVector<Complex64> = v_t.row(idx).adjoint();
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_signs() {
        let p = signed_permutations(3);
        assert_eq!(p.len(), 6);
        assert_eq!(p[0], (vec![0, 1, 2], 1.0));
        assert_eq!(p.iter().map(|x| x.1).sum::<f64>(), 0.0);
    }

    #[test]
    fn scalar_operator_det_agrees_with_lu() {
        let vals = [[1.0, 2.0, 0.5], [0.3, -1.0, 4.0], [2.0, 0.0, 1.5]];
        let m: Vec<Vec<CMat>> = vals
            .iter()
            .map(|r| {
                r.iter()
                    .map(|&x| CMat::from_element(1, 1, Complex64::new(x, 0.0)))
                    .collect()
            })
            .collect();
        let d = operator_det(&m)[(0, 0)];
        let dense = CMat::from_fn(3, 3, |i, j| Complex64::new(vals[i][j], 0.0));
        assert!((d - det(&dense)).norm() < 1e-12);
    }

    #[test]
    fn eigenpairs_of_a_nonnormal_matrix() {
        let m = CMat::from_fn(3, 3, |i, j| {
            Complex64::new(
                (i * 3 + j) as f64 * 0.1 + if i == j { i as f64 } else { 0.0 },
                (i as f64 - j as f64) * 0.2,
            )
        });
        let ev = eigenvalues(&m).unwrap();
        for l in ev {
            let v = eigenvector(&m, l);
            assert!((&m * &v - &v * l).norm() < 1e-12);
        }
    }
}
