//! Congruence diagonalization of rational symmetric forms.
//!
//! A symmetric matrix S over ℚ is reduced to diagonal shape D = Pᵀ·S·P by
//! simultaneous row/column operations. The pivot rule is fixed: first nonzero
//! diagonal entry, else the first nonzero off-diagonal pair handled by the
//! rank-2 split (add one basis vector to the other, which puts 2·S[i][j] on
//! the diagonal). The rule makes the reduction deterministic, so frozen test
//! values stay stable.

use crate::matrix::ExactMatrix;
use crate::scalar::Scalar;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SignatureError {
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix has non-rational entries")]
    NotRational,
}

/// Inertia of a rational symmetric form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureReport {
    pub positive: usize,
    pub negative: usize,
    pub null: usize,
}

impl SignatureReport {
    pub fn total(&self) -> usize {
        self.positive + self.negative + self.null
    }
}

/// Result of the congruence reduction: `transform`ᵀ · S · `transform` = diag(`diagonal`).
#[derive(Debug, Clone)]
pub struct CongruenceDiagonalization {
    pub transform: ExactMatrix,
    pub diagonal: Vec<BigRational>,
    pub report: SignatureReport,
}

impl CongruenceDiagonalization {
    /// Columns of the transform spanning a maximal negative-definite subspace.
    pub fn negative_basis(&self) -> ExactMatrix {
        let n = self.transform.rows();
        let cols: Vec<usize> = (0..self.diagonal.len())
            .filter(|&i| self.diagonal[i].is_negative())
            .collect();
        ExactMatrix::from_fn(n, cols.len(), |r, k| self.transform.get(r, cols[k]).clone())
    }
}

fn rational_entries(m: &ExactMatrix) -> Result<Vec<Vec<BigRational>>, SignatureError> {
    let mut rows = Vec::with_capacity(m.rows());
    for r in 0..m.rows() {
        let mut row = Vec::with_capacity(m.cols());
        for c in 0..m.cols() {
            match m.get(r, c).as_rational() {
                Some(q) => row.push(q.clone()),
                None => return Err(SignatureError::NotRational),
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Diagonalizes a rational symmetric matrix by congruence.
pub fn congruence_diagonalize(
    sym: &ExactMatrix,
) -> Result<CongruenceDiagonalization, SignatureError> {
    if !sym.is_symmetric() {
        return Err(SignatureError::NotSymmetric);
    }
    let n = sym.rows();
    let mut s = rational_entries(sym)?;
    let mut p = ExactMatrix::identity(n);

    // basis change: new basis vector k gains c · (basis vector j)
    let add_basis = |s: &mut Vec<Vec<BigRational>>, p: &mut ExactMatrix, k: usize, j: usize, c: &BigRational| {
        let nloc = s.len();
        for t in 0..nloc {
            let add = &s[j][t] * c;
            s[k][t] += add;
        }
        for t in 0..nloc {
            let add = &s[t][j] * c;
            s[t][k] += add;
        }
        for r in 0..nloc {
            let v = p.get(r, k) + &p.get(r, j).scale_by(c);
            p.set(r, k, v);
        }
    };
    let swap_basis = |s: &mut Vec<Vec<BigRational>>, p: &mut ExactMatrix, a: usize, b: usize| {
        let nloc = s.len();
        s.swap(a, b);
        for row in s.iter_mut() {
            row.swap(a, b);
        }
        for r in 0..nloc {
            let x = p.get(r, a).clone();
            let y = p.get(r, b).clone();
            p.set(r, a, y);
            p.set(r, b, x);
        }
    };

    let mut k = 0;
    while k < n {
        if s[k][k].is_zero() {
            // first nonzero later diagonal entry
            if let Some(j) = (k + 1..n).find(|&j| !s[j][j].is_zero()) {
                swap_basis(&mut s, &mut p, k, j);
            } else {
                // first nonzero off-diagonal pair in the trailing block
                let mut found = None;
                'scan: for i in k..n {
                    for j in i + 1..n {
                        if !s[i][j].is_zero() {
                            found = Some((i, j));
                            break 'scan;
                        }
                    }
                }
                let Some((i, j)) = found else {
                    break; // trailing block is zero
                };
                // rank-2 split: basis_i += basis_j makes s[i][i] = 2 s[i][j] ≠ 0
                let one = BigRational::from_integer(1.into());
                add_basis(&mut s, &mut p, i, j, &one);
                if i != k {
                    swap_basis(&mut s, &mut p, k, i);
                }
            }
        }
        let pivot = s[k][k].clone();
        debug_assert!(!pivot.is_zero());
        for r in k + 1..n {
            if s[r][k].is_zero() {
                continue;
            }
            let c = -(&s[r][k] / &pivot);
            add_basis(&mut s, &mut p, r, k, &c);
        }
        k += 1;
    }

    let diagonal: Vec<BigRational> = (0..n).map(|i| s[i][i].clone()).collect();
    let mut report = SignatureReport {
        positive: 0,
        negative: 0,
        null: 0,
    };
    for d in &diagonal {
        if d.is_zero() {
            report.null += 1;
        } else if d.is_positive() {
            report.positive += 1;
        } else {
            report.negative += 1;
        }
    }
    Ok(CongruenceDiagonalization {
        transform: p,
        diagonal,
        report,
    })
}

/// Signature (p, q, z) of a rational symmetric form.
pub fn congruence_signature(sym: &ExactMatrix) -> Result<SignatureReport, SignatureError> {
    Ok(congruence_diagonalize(sym)?.report)
}

trait ScaleBy {
    fn scale_by(&self, c: &BigRational) -> Scalar;
}

impl ScaleBy for Scalar {
    fn scale_by(&self, c: &BigRational) -> Scalar {
        self * &Scalar::from_rational(c.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_signatures() {
        // zero 4x4 -> (0,0,4)
        let z = ExactMatrix::zeros(4, 4);
        assert_eq!(
            congruence_signature(&z).unwrap(),
            SignatureReport {
                positive: 0,
                negative: 0,
                null: 4
            }
        );
        // diag(1,-1) -> (1,1,0)
        let d = ExactMatrix::from_int_rows(&[&[1, 0], &[0, -1]]);
        assert_eq!(
            congruence_signature(&d).unwrap(),
            SignatureReport {
                positive: 1,
                negative: 1,
                null: 0
            }
        );
    }

    #[test]
    fn not_symmetric_rejected() {
        let m = ExactMatrix::from_int_rows(&[&[0, 1], &[0, 0]]);
        assert_eq!(
            congruence_signature(&m),
            Err(SignatureError::NotSymmetric)
        );
    }

    #[test]
    fn transform_diagonalizes() {
        // hyperbolic plane: needs the rank-2 split
        let h = ExactMatrix::from_int_rows(&[&[0, 1], &[1, 0]]);
        let d = congruence_diagonalize(&h).unwrap();
        assert_eq!(
            d.report,
            SignatureReport {
                positive: 1,
                negative: 1,
                null: 0
            }
        );
        let ptsp = &(&d.transform.transpose() * &h) * &d.transform;
        for r in 0..2 {
            for c in 0..2 {
                if r != c {
                    assert!(ptsp.get(r, c).is_zero());
                }
            }
        }
    }

    #[test]
    fn negative_basis_is_negative_definite() {
        let s = ExactMatrix::from_int_rows(&[&[0, 1, 0], &[1, 0, 0], &[0, 0, -3]]);
        let d = congruence_diagonalize(&s).unwrap();
        let nb = d.negative_basis();
        assert_eq!(nb.cols(), 2);
        let restricted = &(&nb.transpose() * &s) * &nb;
        let sig = congruence_signature(&restricted).unwrap();
        assert_eq!(sig.positive, 0);
        assert_eq!(sig.null, 0);
        assert_eq!(sig.negative, 2);
    }

    #[test]
    fn invariant_under_congruence() {
        let s = ExactMatrix::from_int_rows(&[&[2, 1, 0], &[1, -1, 3], &[0, 3, 0]]);
        let p = ExactMatrix::from_int_rows(&[&[1, 2, 0], &[0, 1, -1], &[1, 0, 1]]);
        assert!(p.is_invertible());
        let conj = &(&p.transpose() * &s) * &p;
        assert_eq!(
            congruence_signature(&s).unwrap(),
            congruence_signature(&conj).unwrap()
        );
    }
}
