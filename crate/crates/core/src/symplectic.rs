//! Symplectic vector spaces, Lagrangian triples, the triple quadratic form,
//! and ℤ/2 holonomy along loops of triples.
//!
//! For a triple of Lagrangian subspaces (W₁,W₂,W₃) of a 2n-dimensional
//! symplectic space the quadratic form on W₁⊕W₂⊕W₃ is
//!
//!   Q(x₁,x₂,x₃) = ω(x₁,x₂) + ω(x₂,x₃) + ω(x₃,x₁).
//!
//! Its complex rank is 3n − n₁₂ − n₂₃ − n₁₃ where n_ij = dim(W_i ∩ W_j), and
//! the real part has signature (m, m, 2(n₁₂+n₂₃+n₁₃)). Maximal subspaces on
//! which Re Q is negative definite are all isomorphic; tracking an orientation
//! of one around a closed loop of triples gives a sign, the Maslov holonomy.

use crate::matrix::ExactMatrix;
use crate::scalar::Scalar;
use crate::signature::{congruence_diagonalize, SignatureReport};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymplecticError {
    #[error("omega must be antisymmetric and invertible")]
    DegenerateForm,
    #[error("frame is not Lagrangian: {0}")]
    NotLagrangian(String),
    #[error("frames live in different symplectic spaces")]
    FrameMismatch,
    #[error("loop is not closed (first and last samples differ)")]
    LoopNotClosed,
    #[error("sample {0} has a different intersection profile")]
    StratumViolation(usize),
    #[error("projection between negative frames at step {0} is singular; refine sampling")]
    DegenerateStep(usize),
    #[error("loop needs at least two samples")]
    LoopTooShort,
}

/// A 2n-dimensional symplectic vector space over ℚ(i), given by the Gram
/// matrix of its form in the ambient coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymplecticSpace {
    n: usize,
    omega: ExactMatrix,
}

impl SymplecticSpace {
    /// The standard form: ω(e_i, e_{n+i}) = 1, all other basis pairings zero.
    pub fn standard(n: usize) -> Self {
        let mut omega = ExactMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            omega.set(i, n + i, Scalar::one());
            omega.set(n + i, i, Scalar::from_int(-1));
        }
        SymplecticSpace { n, omega }
    }

    pub fn new(n: usize, omega: ExactMatrix) -> Result<Self, SymplecticError> {
        if omega.shape() != (2 * n, 2 * n)
            || !omega.is_antisymmetric()
            || !omega.is_invertible()
        {
            return Err(SymplecticError::DegenerateForm);
        }
        Ok(SymplecticSpace { n, omega })
    }

    pub fn half_dim(&self) -> usize {
        self.n
    }

    pub fn omega(&self) -> &ExactMatrix {
        &self.omega
    }

    /// ω(x, y) for column vectors.
    pub fn pair(&self, x: &ExactMatrix, y: &ExactMatrix) -> Scalar {
        let m = &(&x.transpose() * &self.omega) * y;
        m.get(0, 0).clone()
    }

    /// Checks M ᵀ ω M = ω.
    pub fn is_symplectic_matrix(&self, m: &ExactMatrix) -> bool {
        m.shape() == (2 * self.n, 2 * self.n)
            && &(&m.transpose() * &self.omega) * m == self.omega
    }
}

/// Canonical basis of a column space: reduced column echelon form.
/// Two matrices span the same subspace iff their canonical forms are equal.
fn canonical_columns(m: &ExactMatrix) -> ExactMatrix {
    let (r, pivots) = m.transpose().rref();
    // keep only the nonzero rows (= pivot rows) of the rref
    let k = pivots.len();
    r.block(0, 0, k, m.rows()).transpose()
}

/// An n-dimensional Lagrangian subspace, stored by a canonical spanning frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagrangianFrame {
    space: SymplecticSpace,
    basis: ExactMatrix, // 2n × n, reduced column echelon form
}

impl LagrangianFrame {
    pub fn new(space: SymplecticSpace, basis: ExactMatrix) -> Result<Self, SymplecticError> {
        let n = space.half_dim();
        if basis.shape() != (2 * n, n) {
            return Err(SymplecticError::NotLagrangian(format!(
                "basis is {}x{}, expected {}x{}",
                basis.rows(),
                basis.cols(),
                2 * n,
                n
            )));
        }
        if basis.rank() != n {
            return Err(SymplecticError::NotLagrangian(
                "columns are linearly dependent".into(),
            ));
        }
        let iso = &(&basis.transpose() * space.omega()) * &basis;
        if !iso.is_zero() {
            return Err(SymplecticError::NotLagrangian(
                "basisᵀ·ω·basis is nonzero".into(),
            ));
        }
        Ok(LagrangianFrame {
            space,
            basis: canonical_columns(&basis),
        })
    }

    pub fn space(&self) -> &SymplecticSpace {
        &self.space
    }

    pub fn basis(&self) -> &ExactMatrix {
        &self.basis
    }

    /// Applies a symplectic matrix to the subspace.
    pub fn transform(&self, m: &ExactMatrix) -> Result<Self, SymplecticError> {
        LagrangianFrame::new(self.space.clone(), m * &self.basis)
    }
}

/// Three Lagrangian subspaces of one space, with cached intersection profile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagrangianTriple {
    pub w1: LagrangianFrame,
    pub w2: LagrangianFrame,
    pub w3: LagrangianFrame,
    profile: (usize, usize, usize),
}

fn intersection_dim(a: &LagrangianFrame, b: &LagrangianFrame) -> usize {
    let n2 = a.basis.rows();
    n2 - a.basis.hstack(&b.basis).unwrap().rank()
}

impl LagrangianTriple {
    pub fn new(
        w1: LagrangianFrame,
        w2: LagrangianFrame,
        w3: LagrangianFrame,
    ) -> Result<Self, SymplecticError> {
        if w1.space != w2.space || w2.space != w3.space {
            return Err(SymplecticError::FrameMismatch);
        }
        let profile = (
            intersection_dim(&w1, &w2),
            intersection_dim(&w2, &w3),
            intersection_dim(&w1, &w3),
        );
        Ok(LagrangianTriple { w1, w2, w3, profile })
    }

    pub fn space(&self) -> &SymplecticSpace {
        &self.w1.space
    }

    /// (n₁₂, n₂₃, n₁₃), cached at construction.
    pub fn intersection_profile(&self) -> (usize, usize, usize) {
        self.profile
    }

    /// Applies one symplectic matrix to all three frames.
    pub fn transform(&self, m: &ExactMatrix) -> Result<Self, SymplecticError> {
        LagrangianTriple::new(
            self.w1.transform(m)?,
            self.w2.transform(m)?,
            self.w3.transform(m)?,
        )
    }
}

/// The triple form Q on W₁⊕W₂⊕W₃: Gram matrix, complex rank, and the
/// signature of the realification of Re Q.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripleFormReport {
    /// Gram matrix of the symmetric bilinear form polarizing Q, in the
    /// concatenated frame coordinates (3n × 3n over ℚ(i)).
    pub q_matrix: ExactMatrix,
    pub complex_rank: usize,
    pub real_signature: SignatureReport,
    /// Gram matrix of Re Q on the realification (6n × 6n over ℚ), in
    /// interleaved coordinates: complex coordinate z_k = x_k + i·y_k maps to
    /// the consecutive real pair (x_k, y_k).
    pub re_gram: ExactMatrix,
}

/// Computes the triple-form report.
pub fn triple_form(t: &LagrangianTriple) -> TripleFormReport {
    let n = t.space().half_dim();
    let omega = t.space().omega();
    let half = Scalar::from_fraction(1, 2);
    let pairing = |a: &LagrangianFrame, b: &LagrangianFrame| -> ExactMatrix {
        (&(&a.basis.transpose() * omega) * &b.basis).scale(&half)
    };
    // Polarization of Q: block (r,s) holds ½·ω-pairings; blocks (1,2), (2,3),
    // (3,1) enter with +, their transposes fill the symmetric positions.
    let g12 = pairing(&t.w1, &t.w2);
    let g23 = pairing(&t.w2, &t.w3);
    let g31 = pairing(&t.w3, &t.w1);
    let zero = ExactMatrix::zeros(n, n);
    let row1 = zero
        .hstack(&g12)
        .unwrap()
        .hstack(&g31.transpose())
        .unwrap();
    let row2 = g12
        .transpose()
        .hstack(&zero)
        .unwrap()
        .hstack(&g23)
        .unwrap();
    let row3 = g31
        .hstack(&g23.transpose())
        .unwrap()
        .hstack(&zero)
        .unwrap();
    let q_matrix = row1.vstack(&row2).unwrap().vstack(&row3).unwrap();
    debug_assert!(q_matrix.is_symmetric());

    let complex_rank = q_matrix.rank();
    let re_gram = realify_quadratic(&q_matrix);
    let real_signature = crate::signature::congruence_signature(&re_gram)
        .expect("realified Gram matrix is rational symmetric");
    TripleFormReport {
        q_matrix,
        complex_rank,
        real_signature,
        re_gram,
    }
}

/// Gram matrix of Re Q on the realification of a complex quadratic form with
/// Gram matrix G = A + iB. With z = x + iy, Re(zᵀGz) = xᵀAx − 2xᵀBy − yᵀAy;
/// coordinates interleave as (x_0, y_0, x_1, y_1, …).
pub fn realify_quadratic(g: &ExactMatrix) -> ExactMatrix {
    assert!(g.is_symmetric());
    let m = g.rows();
    let a = g.re();
    let b = g.im();
    ExactMatrix::from_fn(2 * m, 2 * m, |r, c| {
        let (j, dj) = (r / 2, r % 2);
        let (k, dk) = (c / 2, c % 2);
        match (dj, dk) {
            (0, 0) => a.get(j, k).clone(),
            (1, 1) => -a.get(j, k),
            _ => -b.get(j, k),
        }
    })
}

/// A real basis (columns) of a maximal subspace on which Re Q is negative
/// definite; the column count equals the complex rank.
pub fn negative_frame(report: &TripleFormReport) -> ExactMatrix {
    congruence_diagonalize(&report.re_gram)
        .expect("re_gram is rational symmetric")
        .negative_basis()
}

/// A closed loop of Lagrangian triples within one intersection stratum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripleLoop {
    pub samples: Vec<LagrangianTriple>,
}

impl TripleLoop {
    /// Validates closedness and stratum constancy. Frames are canonical, so
    /// sample equality is subspace equality.
    pub fn new(samples: Vec<LagrangianTriple>) -> Result<Self, SymplecticError> {
        if samples.len() < 2 {
            return Err(SymplecticError::LoopTooShort);
        }
        if samples.first() != samples.last() {
            return Err(SymplecticError::LoopNotClosed);
        }
        let space = samples[0].space().clone();
        let profile = samples[0].intersection_profile();
        for (i, s) in samples.iter().enumerate() {
            if *s.space() != space {
                return Err(SymplecticError::FrameMismatch);
            }
            if s.intersection_profile() != profile {
                return Err(SymplecticError::StratumViolation(i));
            }
        }
        Ok(TripleLoop { samples })
    }
}

/// ℤ/2 holonomy of the Maslov line around the loop.
///
/// An orientation of a maximal negative frame is transported as follows: the
/// frame is carried unchanged from sample to sample while its span stays
/// negative definite for the next form; when it no longer does, the frame is
/// first rebased at the current sample to that sample's congruence frame.
/// Rebasing compares two negative subspaces of one form by projecting along
/// the form's own positive/null complement, which is always an isomorphism
/// between maximal negative subspaces; the sign of its determinant measures
/// the relative orientation. After the walk, the carried frame is compared
/// with the initial one the same way; the product of all signs is the
/// holonomy. Every identification used lies in the canonical homotopy class,
/// so the result is stable under sampling refinement. `DegenerateStep` means
/// two consecutive samples are too far apart (the local frame of one is not
/// negative for the other) and the caller must refine the sampling.
pub fn maslov_holonomy(lp: &TripleLoop) -> Result<i32, SymplecticError> {
    let decomps: Vec<(ExactMatrix, crate::signature::CongruenceDiagonalization)> = lp
        .samples
        .iter()
        .map(|t| {
            let r = triple_form(t);
            let d = congruence_diagonalize(&r.re_gram).expect("re_gram is rational symmetric");
            (r.re_gram, d)
        })
        .collect();
    let m = decomps[0].1.report.negative;
    if m == 0 {
        return Ok(1);
    }
    let mut carried = decomps[0].1.negative_basis();
    let mut sign = 1;
    for k in 0..decomps.len() - 1 {
        let next_gram = &decomps[k + 1].0;
        if negative_definite_on(next_gram, &carried) {
            continue;
        }
        // rebase at sample k through the canonical same-form projection
        sign *= canonical_rebase_sign(&decomps[k].1, &carried)
            .ok_or(SymplecticError::DegenerateStep(k))?;
        carried = decomps[k].1.negative_basis();
        if !negative_definite_on(next_gram, &carried) {
            return Err(SymplecticError::DegenerateStep(k));
        }
    }
    // close up against the initial frame (the loop ends at its first sample)
    sign *= canonical_rebase_sign(&decomps[0].1, &carried)
        .ok_or(SymplecticError::DegenerateStep(decomps.len() - 1))?;
    Ok(sign)
}

/// Whether the form restricted to the span of the columns is negative
/// definite.
fn negative_definite_on(gram: &ExactMatrix, frame: &ExactMatrix) -> bool {
    let restricted = &(&frame.transpose() * gram) * frame;
    match crate::signature::congruence_signature(&restricted) {
        Ok(s) => s.negative == frame.cols() && s.positive == 0 && s.null == 0,
        Err(_) => false,
    }
}

/// Relative orientation of a negative frame against the congruence frame of
/// the same form: express the frame in the congruence coordinates and take
/// the sign of the determinant of its negative-block component, i.e. of the
/// projection along the positive/null part of the decomposition. Singular
/// only if the frame is not maximal negative for this form.
fn canonical_rebase_sign(
    decomp: &crate::signature::CongruenceDiagonalization,
    frame: &ExactMatrix,
) -> Option<i32> {
    use num_traits::Signed;
    let coords = decomp
        .transform
        .invert()
        .expect("congruence transform is invertible")
        .matmul(frame)
        .ok()?;
    let neg_rows: Vec<usize> = (0..decomp.diagonal.len())
        .filter(|&i| decomp.diagonal[i].is_negative())
        .collect();
    if neg_rows.len() != frame.cols() {
        return None;
    }
    let block = ExactMatrix::from_fn(neg_rows.len(), frame.cols(), |r, c| {
        coords.get(neg_rows[r], c).clone()
    });
    let s = block.det().sign().expect("rational determinant");
    (s != 0).then_some(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: i64) -> Scalar {
        Scalar::from_int(v)
    }

    fn frame(space: &SymplecticSpace, cols: &[&[i64]]) -> LagrangianFrame {
        let n2 = 2 * space.half_dim();
        let m = ExactMatrix::from_fn(n2, cols.len(), |r, c| q(cols[c][r]));
        LagrangianFrame::new(space.clone(), m).unwrap()
    }

    #[test]
    fn standard_space_valid() {
        let s = SymplecticSpace::standard(2);
        assert!(s.omega().is_antisymmetric());
        assert!(s.omega().is_invertible());
        let e1 = ExactMatrix::from_int_rows(&[&[1], &[0], &[0], &[0]]);
        let f1 = ExactMatrix::from_int_rows(&[&[0], &[0], &[1], &[0]]);
        assert_eq!(s.pair(&e1, &f1), Scalar::one());
        assert_eq!(s.pair(&f1, &e1), Scalar::from_int(-1));
    }

    #[test]
    fn non_lagrangian_rejected() {
        let s = SymplecticSpace::standard(1);
        // span(e1, ...) can't even be given: wrong rank
        let m = ExactMatrix::from_int_rows(&[&[1], &[0]]);
        assert!(LagrangianFrame::new(s.clone(), m).is_ok());
        // a non-isotropic "frame" in n=2: span(e1, f1)
        let s2 = SymplecticSpace::standard(2);
        let m = ExactMatrix::from_int_rows(&[&[1, 0], &[0, 0], &[0, 1], &[0, 0]]);
        assert!(matches!(
            LagrangianFrame::new(s2, m),
            Err(SymplecticError::NotLagrangian(_))
        ));
    }

    #[test]
    fn profile_examples() {
        let s = SymplecticSpace::standard(1);
        let e1 = frame(&s, &[&[1, 0]]);
        let e2 = frame(&s, &[&[0, 1]]);
        let diag = frame(&s, &[&[1, 1]]);

        // identical frames -> (n, n, n)
        let t = LagrangianTriple::new(e1.clone(), e1.clone(), e1.clone()).unwrap();
        assert_eq!(t.intersection_profile(), (1, 1, 1));

        // span(e1)/span(e2)/span(e1+e2) -> (0,0,0)
        let t = LagrangianTriple::new(e1.clone(), e2.clone(), diag.clone()).unwrap();
        assert_eq!(t.intersection_profile(), (0, 0, 0));

        // n=2: W1=W2 ≠ W3 transverse -> (2, 0, 0)
        let s2 = SymplecticSpace::standard(2);
        let w1 = frame(&s2, &[&[1, 0, 0, 0], &[0, 1, 0, 0]]);
        let w3 = frame(&s2, &[&[0, 0, 1, 0], &[0, 0, 0, 1]]);
        let t = LagrangianTriple::new(w1.clone(), w1.clone(), w3).unwrap();
        assert_eq!(t.intersection_profile(), (2, 0, 0));
    }

    #[test]
    fn triple_form_vanishes_on_equal_frames() {
        let s = SymplecticSpace::standard(1);
        let e1 = frame(&s, &[&[1, 0]]);
        let t = LagrangianTriple::new(e1.clone(), e1.clone(), e1.clone()).unwrap();
        let r = triple_form(&t);
        assert!(r.q_matrix.is_zero());
        assert_eq!(r.complex_rank, 0);
        // 0 = 3·1 − 1 − 1 − 1
    }

    #[test]
    fn triple_form_generic_example() {
        // W1=span(e1), W2=span(e2), W3=span(e1+e2): Q(a,b,c) = ab − bc − ca
        let s = SymplecticSpace::standard(1);
        let t = LagrangianTriple::new(
            frame(&s, &[&[1, 0]]),
            frame(&s, &[&[0, 1]]),
            frame(&s, &[&[1, 1]]),
        )
        .unwrap();
        let r = triple_form(&t);
        assert_eq!(r.complex_rank, 3);
        // polarization of ab − bc − ca
        let expected = ExactMatrix::from_rows(vec![
            vec![q(0), Scalar::from_fraction(1, 2), Scalar::from_fraction(-1, 2)],
            vec![Scalar::from_fraction(1, 2), q(0), Scalar::from_fraction(-1, 2)],
            vec![
                Scalar::from_fraction(-1, 2),
                Scalar::from_fraction(-1, 2),
                q(0),
            ],
        ])
        .unwrap();
        assert_eq!(r.q_matrix, expected);
        assert_eq!(
            r.real_signature,
            SignatureReport {
                positive: 3,
                negative: 3,
                null: 0
            }
        );
    }

    #[test]
    fn negative_frame_verified_negative_definite() {
        let s = SymplecticSpace::standard(1);
        let t = LagrangianTriple::new(
            frame(&s, &[&[1, 0]]),
            frame(&s, &[&[0, 1]]),
            frame(&s, &[&[1, 1]]),
        )
        .unwrap();
        let r = triple_form(&t);
        let nf = negative_frame(&r);
        assert_eq!(nf.cols(), 3);
        let restricted = &(&nf.transpose() * &r.re_gram) * &nf;
        let sig = crate::signature::congruence_signature(&restricted).unwrap();
        assert_eq!((sig.positive, sig.negative, sig.null), (0, 3, 0));
    }

    #[test]
    fn negative_frame_rank_zero_is_empty() {
        let s = SymplecticSpace::standard(1);
        let e1 = frame(&s, &[&[1, 0]]);
        let t = LagrangianTriple::new(e1.clone(), e1.clone(), e1.clone()).unwrap();
        let r = triple_form(&t);
        assert_eq!(negative_frame(&r).cols(), 0);
    }

    #[test]
    fn constant_loop_has_trivial_holonomy() {
        let s = SymplecticSpace::standard(1);
        let t = LagrangianTriple::new(
            frame(&s, &[&[1, 0]]),
            frame(&s, &[&[0, 1]]),
            frame(&s, &[&[1, 1]]),
        )
        .unwrap();
        let lp = TripleLoop::new(vec![t.clone(), t.clone(), t.clone()]).unwrap();
        assert_eq!(maslov_holonomy(&lp).unwrap(), 1);
    }

    #[test]
    fn loop_validation_errors() {
        let s = SymplecticSpace::standard(1);
        let e1 = frame(&s, &[&[1, 0]]);
        let e2 = frame(&s, &[&[0, 1]]);
        let diag = frame(&s, &[&[1, 1]]);
        let t0 = LagrangianTriple::new(e1.clone(), e2.clone(), diag.clone()).unwrap();
        let t1 = LagrangianTriple::new(e1.clone(), e2.clone(), e1.clone()).unwrap();
        // not closed
        assert!(matches!(
            TripleLoop::new(vec![t0.clone(), t1.clone()]),
            Err(SymplecticError::LoopNotClosed)
        ));
        // profile break
        assert!(matches!(
            TripleLoop::new(vec![t0.clone(), t1.clone(), t0.clone()]),
            Err(SymplecticError::StratumViolation(1))
        ));
    }

    #[test]
    fn canonical_frames_identify_subspaces() {
        let s = SymplecticSpace::standard(1);
        let a = frame(&s, &[&[1, 1]]);
        let b = frame(&s, &[&[2, 2]]);
        assert_eq!(a, b);
        let c = frame(&s, &[&[-1, -1]]);
        assert_eq!(a, c);
    }
}
