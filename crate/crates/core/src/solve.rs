//! Homogeneous block linear systems.
//!
//! Every Hom-space computation in this crate reduces to the same shape of
//! problem: a family of unknown matrices X₁,…,X_k and a list of constraints,
//! each of the form Σ Lᵢ·X_{bᵢ}·Rᵢ = 0. The solver flattens the blocks into
//! one unknown vector, row-reduces the stacked coefficient matrix, and returns
//! a nullspace basis decoded back into matrix families.

use crate::matrix::ExactMatrix;
use crate::scalar::Scalar;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// One term L · X_block · R of a linear constraint.
#[derive(Clone, Debug)]
pub struct Term {
    pub block: usize,
    pub left: ExactMatrix,
    pub right: ExactMatrix,
}

impl Term {
    pub fn new(block: usize, left: ExactMatrix, right: ExactMatrix) -> Self {
        Term { block, left, right }
    }
}

/// A constraint Σ terms = 0. All terms must produce the same output shape.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub terms: Vec<Term>,
}

impl Constraint {
    pub fn new(terms: Vec<Term>) -> Self {
        Constraint { terms }
    }

    /// The intertwining constraint X_dst · a = b · X_src, the shape taken by
    /// every morphism condition in the workbench (quiver diagrams, monodromy
    /// intertwiners, equivariance squares).
    pub fn intertwine(
        src: usize,
        dst: usize,
        a: &ExactMatrix,
        b: &ExactMatrix,
        dst_rows: usize,
        src_cols: usize,
    ) -> Self {
        Constraint {
            terms: vec![
                Term::new(dst, ExactMatrix::identity(dst_rows), a.clone()),
                Term::new(src, (-b).clone(), ExactMatrix::identity(src_cols)),
            ],
        }
    }
}

/// A basis of the solution space of a homogeneous block system.
#[derive(Clone, Debug)]
pub struct SolutionSpace {
    /// Total number of unknown scalar entries across all blocks.
    pub ambient_dim: usize,
    /// Shapes of the unknown blocks.
    pub block_shapes: Vec<(usize, usize)>,
    /// Basis elements, each one matrix per block.
    pub basis: Vec<Vec<ExactMatrix>>,
}

impl SolutionSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Flattens a block family into a single column in the solver's entry order.
    pub fn flatten(&self, family: &[ExactMatrix]) -> ExactMatrix {
        flatten_family(&self.block_shapes, family)
    }

    /// Linear combination Σ coeffs[k] · basis[k].
    pub fn combination(&self, coeffs: &[Scalar]) -> Vec<ExactMatrix> {
        assert_eq!(coeffs.len(), self.basis.len());
        let mut out: Vec<ExactMatrix> = self
            .block_shapes
            .iter()
            .map(|&(r, c)| ExactMatrix::zeros(r, c))
            .collect();
        for (k, fam) in self.basis.iter().enumerate() {
            if coeffs[k].is_zero() {
                continue;
            }
            for (b, m) in fam.iter().enumerate() {
                out[b] = &out[b] + &m.scale(&coeffs[k]);
            }
        }
        out
    }

    /// Coordinates of `family` in this basis, or `None` if it lies outside the span.
    pub fn coordinates_of(&self, family: &[ExactMatrix]) -> Option<Vec<Scalar>> {
        let target = self.flatten(family);
        if self.basis.is_empty() {
            return target.is_zero().then(Vec::new);
        }
        let mut cols = self.flatten(&self.basis[0]);
        for fam in &self.basis[1..] {
            cols = cols.hstack(&self.flatten(fam)).unwrap();
        }
        solve_linear(&cols, &target).map(|x| x.column_vec(0))
    }

    pub fn contains(&self, family: &[ExactMatrix]) -> bool {
        self.coordinates_of(family).is_some()
    }
}

fn flatten_family(shapes: &[(usize, usize)], family: &[ExactMatrix]) -> ExactMatrix {
    assert_eq!(shapes.len(), family.len());
    let mut entries = Vec::new();
    for (m, &(r, c)) in family.iter().zip(shapes) {
        assert_eq!(m.shape(), (r, c), "family block shape mismatch");
        for i in 0..r {
            for j in 0..c {
                entries.push(m.get(i, j).clone());
            }
        }
    }
    ExactMatrix::column(entries)
}

/// Solves A·X = B exactly; `None` when the system is inconsistent.
pub fn solve_linear(a: &ExactMatrix, b: &ExactMatrix) -> Option<ExactMatrix> {
    assert_eq!(a.rows(), b.rows());
    let aug = a.hstack(b).unwrap();
    let (red, pivots) = aug.rref();
    if pivots.iter().any(|&p| p >= a.cols()) {
        return None; // pivot in the augmented part: inconsistent
    }
    let mut x = ExactMatrix::zeros(a.cols(), b.cols());
    for (row, &p) in pivots.iter().enumerate() {
        for c in 0..b.cols() {
            x.set(p, c, red.get(row, a.cols() + c).clone());
        }
    }
    Some(x)
}

/// Solves the homogeneous system given block shapes and constraints.
///
/// The solution dimension always equals `ambient − rank(flattened system)`.
pub fn solve_homogeneous(
    block_shapes: &[(usize, usize)],
    constraints: &[Constraint],
) -> Result<SolutionSpace, SolveError> {
    let offsets: Vec<usize> = block_shapes
        .iter()
        .scan(0usize, |acc, &(r, c)| {
            let here = *acc;
            *acc += r * c;
            Some(here)
        })
        .collect();
    let ambient: usize = block_shapes.iter().map(|&(r, c)| r * c).sum();

    // Assemble all equation rows.
    let mut rows: Vec<Vec<Scalar>> = Vec::new();
    for (ci, con) in constraints.iter().enumerate() {
        if con.terms.is_empty() {
            continue;
        }
        // Output shape from the first term; all terms must agree.
        let mut out_shape: Option<(usize, usize)> = None;
        for t in &con.terms {
            if t.block >= block_shapes.len() {
                return Err(SolveError::ShapeMismatch(format!(
                    "constraint {ci}: unknown block {}",
                    t.block
                )));
            }
            let (br, bc) = block_shapes[t.block];
            if t.left.cols() != br || t.right.rows() != bc {
                return Err(SolveError::ShapeMismatch(format!(
                    "constraint {ci}: term on block {} has left {}x{}, right {}x{}, block {}x{}",
                    t.block,
                    t.left.rows(),
                    t.left.cols(),
                    t.right.rows(),
                    t.right.cols(),
                    br,
                    bc
                )));
            }
            let shape = (t.left.rows(), t.right.cols());
            match out_shape {
                None => out_shape = Some(shape),
                Some(s) if s == shape => {}
                Some(s) => {
                    return Err(SolveError::ShapeMismatch(format!(
                        "constraint {ci}: output {}x{} vs {}x{}",
                        s.0, s.1, shape.0, shape.1
                    )))
                }
            }
        }
        let (p, q) = out_shape.unwrap();
        for r in 0..p {
            for c in 0..q {
                let mut row = vec![Scalar::zero(); ambient];
                for t in &con.terms {
                    let (br, bc) = block_shapes[t.block];
                    let off = offsets[t.block];
                    // coefficient of X[u][v] in (L·X·R)[r][c] is L[r][u]·R[v][c]
                    for u in 0..br {
                        let l = t.left.get(r, u);
                        if l.is_zero() {
                            continue;
                        }
                        for v in 0..bc {
                            let rr = t.right.get(v, c);
                            if rr.is_zero() {
                                continue;
                            }
                            let idx = off + u * bc + v;
                            row[idx] = &row[idx] + &(l * rr);
                        }
                    }
                }
                rows.push(row);
            }
        }
    }

    let system = if rows.is_empty() {
        ExactMatrix::zeros(0, ambient)
    } else {
        ExactMatrix::from_rows(rows).unwrap()
    };
    let null = system.nullspace_basis();
    let basis = null
        .iter()
        .map(|v| {
            block_shapes
                .iter()
                .zip(&offsets)
                .map(|(&(r, c), &off)| {
                    ExactMatrix::from_fn(r, c, |i, j| v.get(off + i * c + j, 0).clone())
                })
                .collect()
        })
        .collect();
    Ok(SolutionSpace {
        ambient_dim: ambient,
        block_shapes: block_shapes.to_vec(),
        basis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_space() {
        // no constraints, ambient dim 4 -> 4-dimensional space
        let s = solve_homogeneous(&[(2, 2)], &[]).unwrap();
        assert_eq!(s.ambient_dim, 4);
        assert_eq!(s.dim(), 4);
    }

    #[test]
    fn forced_zero() {
        // τ·1 = 0·τ on a 1x1 unknown -> 0-dimensional
        let one = ExactMatrix::identity(1);
        let zero = ExactMatrix::zeros(1, 1);
        let c = Constraint::intertwine(0, 0, &one, &zero, 1, 1);
        let s = solve_homogeneous(&[(1, 1)], &[c]).unwrap();
        assert_eq!(s.dim(), 0);
    }

    #[test]
    fn vacuous_constraint() {
        // τ·0 = 0·τ on a 1x1 unknown -> 1-dimensional
        let zero = ExactMatrix::zeros(1, 1);
        let c = Constraint::intertwine(0, 0, &zero, &zero, 1, 1);
        let s = solve_homogeneous(&[(1, 1)], &[c]).unwrap();
        assert_eq!(s.dim(), 1);
    }

    #[test]
    fn solutions_satisfy_constraints() {
        // X·A = B·X with A, B similar: solution contains the conjugating map
        let a = ExactMatrix::from_int_rows(&[&[0, 1], &[0, 0]]);
        let p = ExactMatrix::from_int_rows(&[&[1, 2], &[0, 1]]);
        let b = &(&p * &a) * &p.invert().unwrap();
        let c = Constraint::intertwine(0, 0, &a, &b, 2, 2);
        let s = solve_homogeneous(&[(2, 2)], &[c]).unwrap();
        for fam in &s.basis {
            let x = &fam[0];
            assert_eq!(&(x * &a), &(&b * x));
        }
        assert!(s.contains(&[p]));
    }

    #[test]
    fn dimension_plus_rank_is_ambient() {
        // cross-check on a two-block system
        let a = ExactMatrix::from_int_rows(&[&[1, 1], &[0, 1]]);
        let b = ExactMatrix::from_int_rows(&[&[1, 0], &[1, 1]]);
        let c = Constraint::intertwine(0, 1, &a, &b, 2, 2);
        let s = solve_homogeneous(&[(2, 2), (2, 2)], &[c.clone()]).unwrap();
        // rebuild the raw matrix to count rank independently
        let mut rows = Vec::new();
        for r in 0..2 {
            for cid in 0..2 {
                let mut row = vec![Scalar::zero(); 8];
                for u in 0..2 {
                    for v in 0..2 {
                        // dst block (index 1) occupies entries 4..8: I·X·a term
                        let coeff = if r == u {
                            a.get(v, cid).clone()
                        } else {
                            Scalar::zero()
                        };
                        row[4 + u * 2 + v] = coeff;
                        // src block: -b·X·I term
                        let coeff = if v == cid {
                            -b.get(r, u)
                        } else {
                            Scalar::zero()
                        };
                        row[u * 2 + v] = coeff;
                    }
                }
                rows.push(row);
            }
        }
        let raw = ExactMatrix::from_rows(rows).unwrap();
        assert_eq!(s.dim() + raw.rank(), s.ambient_dim);
    }

    #[test]
    fn coordinates_roundtrip() {
        let s = solve_homogeneous(&[(2, 1)], &[]).unwrap();
        let fam = vec![ExactMatrix::from_int_rows(&[&[3], &[-5]])];
        let coords = s.coordinates_of(&fam).unwrap();
        assert_eq!(s.combination(&coords), fam);
    }
}
