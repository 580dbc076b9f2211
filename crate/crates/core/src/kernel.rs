//! Action kernels: the programs that transform quiver maps under a group
//! generator.
//!
//! A kernel carries, per generator, the point permutation and a straight-line
//! formula for every ordered pair (i, j): the formula evaluates, in terms of
//! the original maps m_{kl} and the inverses (1 + m_{kk})⁻¹, the transformed
//! map stored at position (g(j), g(i)) of the new quiver. The explicit
//! braid-type polynomials are pluggable data loaded from files; built-ins are
//! the identity kernel and pure-permutation kernels. Any kernel is accepted
//! only if it passes two property gates: diagonal preservation (the diagonal
//! map at every point is unchanged, which keeps 1 + m̃_{ii} invertible and
//! makes vanishing cycles commute with the action) and relation coherence
//! (every relation word acts as the identity transformation).

use crate::group::{GroupPresentation, Letter, Word};
use crate::matrix::ExactMatrix;
use crate::quiver::Quiver;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KernelError {
    #[error("kernel evaluation failed: {0}")]
    KernelEvaluationError(String),
    #[error("kernel generator count {0} does not match presentation {1}")]
    GeneratorCountMismatch(usize, usize),
    #[error("kernel point count {0} does not match quiver {1}")]
    PointCountMismatch(usize, usize),
    #[error("no inverse program for generator {0:?}; cannot apply inverse letters")]
    NoInverse(String),
    #[error("diagonal preservation gate failed for generator {gen:?} at point {point}")]
    DiagonalGate { gen: String, point: usize },
    #[error("relation coherence gate failed for relation {0:?}")]
    RelationGate(String),
}

/// Expression over the original quiver data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expr {
    /// m[j][i]: the original map M_i → M_j (1-based in serialized form).
    M { j: usize, i: usize },
    /// inv1p[k] = (1 + m_{kk})⁻¹ (1-based in serialized form).
    Inv1p { k: usize },
    Add(Vec<Expr>),
    /// Product, leftmost factor applied last (matrix product order).
    Mul(Vec<Expr>),
    Neg(Box<Expr>),
}

impl Expr {
    /// Evaluates against a quiver (indices here are 0-based).
    pub fn eval(&self, q: &Quiver) -> Result<ExactMatrix, KernelError> {
        match self {
            Expr::M { j, i } => {
                if *j >= q.n() || *i >= q.n() {
                    return Err(KernelError::KernelEvaluationError(format!(
                        "m[{}][{}] out of range",
                        j + 1,
                        i + 1
                    )));
                }
                Ok(q.map(*j, *i).clone())
            }
            Expr::Inv1p { k } => {
                if *k >= q.n() {
                    return Err(KernelError::KernelEvaluationError(format!(
                        "inv1p[{}] out of range",
                        k + 1
                    )));
                }
                q.one_plus_diag(*k).invert().map_err(|_| {
                    KernelError::KernelEvaluationError(format!(
                        "1 + m_{{{0},{0}}} is singular",
                        k + 1
                    ))
                })
            }
            Expr::Add(terms) => {
                let mut vals = terms.iter().map(|t| t.eval(q));
                let Some(first) = vals.next() else {
                    return Err(KernelError::KernelEvaluationError("empty add".into()));
                };
                let mut acc = first?;
                for v in vals {
                    let v = v?;
                    if v.shape() != acc.shape() {
                        return Err(KernelError::KernelEvaluationError(
                            "add of mismatched shapes".into(),
                        ));
                    }
                    acc = &acc + &v;
                }
                Ok(acc)
            }
            Expr::Mul(factors) => {
                let mut vals = factors.iter().map(|t| t.eval(q));
                let Some(first) = vals.next() else {
                    return Err(KernelError::KernelEvaluationError("empty mul".into()));
                };
                let mut acc = first?;
                for v in vals {
                    let v = v?;
                    acc = acc.matmul(&v).map_err(|e| {
                        KernelError::KernelEvaluationError(format!("mul: {e}"))
                    })?;
                }
                Ok(acc)
            }
            Expr::Neg(inner) => Ok(-&inner.eval(q)?),
        }
    }

    fn shift_indices(&mut self, delta: isize) {
        match self {
            Expr::M { j, i } => {
                *j = (*j as isize + delta) as usize;
                *i = (*i as isize + delta) as usize;
            }
            Expr::Inv1p { k } => *k = (*k as isize + delta) as usize,
            Expr::Add(v) | Expr::Mul(v) => v.iter_mut().for_each(|e| e.shift_indices(delta)),
            Expr::Neg(e) => e.shift_indices(delta),
        }
    }
}

/// The action of one generator: a permutation and one program per pair.
///
/// The transformed quiver has the space M_{g(i)} at position i, and the map
/// stored at position (j, i) — written m̃_{g(j)g(i)} since it runs between
/// the spaces M_{g(i)} → M_{g(j)} — is the value of `programs[(i, j)]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorAction {
    /// perm[i] = g(i), 0-based.
    pub perm: Vec<usize>,
    /// programs[(i, j)] evaluates m̃_{g(j)g(i)}, stored at position (j, i).
    pub programs: BTreeMap<(usize, usize), Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionKernel {
    pub name: String,
    pub n_points: usize,
    /// One action per presentation generator, in presentation order.
    pub generators: Vec<GeneratorAction>,
    /// Inverse actions when available (always for the built-ins).
    pub inverses: Vec<Option<GeneratorAction>>,
}

impl ActionKernel {
    /// The kernel whose programs copy maps by position, leaving any quiver
    /// unchanged. Intended for presentations acting trivially on points; a
    /// nontrivial point action makes these programs fail the gates.
    pub fn identity(presentation: &GroupPresentation) -> Self {
        let n = presentation.n_points;
        let action_for = |perm: &[usize]| GeneratorAction {
            perm: perm.to_vec(),
            programs: (0..n)
                .flat_map(|i| (0..n).map(move |j| ((i, j), Expr::M { j, i })))
                .collect(),
        };
        ActionKernel {
            name: "identity".into(),
            n_points: n,
            generators: presentation
                .point_action
                .iter()
                .map(|p| action_for(p))
                .collect(),
            inverses: presentation
                .point_action
                .iter()
                .map(|p| Some(action_for(&crate::group::invert_permutation(p))))
                .collect(),
        }
    }

    /// Pure-permutation kernel: the quiver data is relabeled along the point
    /// permutation, m̃_{g(j)g(i)} = m_{g(j)g(i)}. Diagonal preservation holds
    /// by construction.
    pub fn pure_permutation(presentation: &GroupPresentation) -> Self {
        let n = presentation.n_points;
        let action_for = |perm: &[usize]| {
            let mut programs = BTreeMap::new();
            for i in 0..n {
                for j in 0..n {
                    programs.insert(
                        (i, j),
                        Expr::M {
                            j: perm[j],
                            i: perm[i],
                        },
                    );
                }
            }
            GeneratorAction {
                perm: perm.to_vec(),
                programs,
            }
        };
        ActionKernel {
            name: "pure-permutation".into(),
            n_points: n,
            generators: presentation
                .point_action
                .iter()
                .map(|p| action_for(p))
                .collect(),
            inverses: presentation
                .point_action
                .iter()
                .map(|p| Some(action_for(&crate::group::invert_permutation(p))))
                .collect(),
        }
    }

    fn action_for_letter(&self, letter: Letter, gen_names: &[String]) -> Result<&GeneratorAction, KernelError> {
        if letter.inverse {
            self.inverses[letter.gen]
                .as_ref()
                .ok_or_else(|| KernelError::NoInverse(gen_names[letter.gen].clone()))
        } else {
            Ok(&self.generators[letter.gen])
        }
    }
}

/// Applies one generator action to a quiver: position i of the result holds
/// the space M_{g(i)}, and the map at (j, i) is the evaluated program (i, j).
fn apply_generator(action: &GeneratorAction, q: &Quiver) -> Result<Quiver, KernelError> {
    let n = q.n();
    if action.perm.len() != n {
        return Err(KernelError::PointCountMismatch(action.perm.len(), n));
    }
    let dims: Vec<usize> = (0..n).map(|i| q.dims()[action.perm[i]]).collect();
    let mut maps: Vec<Vec<ExactMatrix>> = (0..n)
        .map(|j| (0..n).map(|i| ExactMatrix::zeros(dims[j], dims[i])).collect())
        .collect();
    for i in 0..n {
        for j in 0..n {
            let expr = action.programs.get(&(i, j)).ok_or_else(|| {
                KernelError::KernelEvaluationError(format!(
                    "missing program for pair ({}, {})",
                    i + 1,
                    j + 1
                ))
            })?;
            let value = expr.eval(q)?;
            if value.shape() != (dims[j], dims[i]) {
                return Err(KernelError::KernelEvaluationError(format!(
                    "program ({}, {}) evaluated to {}x{}, expected {}x{}",
                    i + 1,
                    j + 1,
                    value.rows(),
                    value.cols(),
                    dims[j],
                    dims[i]
                )));
            }
            maps[j][i] = value;
        }
    }
    Quiver::new(dims, maps)
        .map_err(|e| KernelError::KernelEvaluationError(format!("action output invalid: {e}")))
}

/// Applies a word (letters act left to right) to a quiver.
pub fn apply_action(
    kernel: &ActionKernel,
    presentation: &GroupPresentation,
    word: &Word,
    q: &Quiver,
) -> Result<Quiver, KernelError> {
    if kernel.generators.len() != presentation.generators.len() {
        return Err(KernelError::GeneratorCountMismatch(
            kernel.generators.len(),
            presentation.generators.len(),
        ));
    }
    if kernel.n_points != q.n() {
        return Err(KernelError::PointCountMismatch(kernel.n_points, q.n()));
    }
    let mut current = q.clone();
    for letter in word {
        let action = kernel.action_for_letter(*letter, &presentation.generators)?;
        current = apply_generator(action, &current)?;
    }
    Ok(current)
}

/// Gate: equation-(5) diagonal preservation. The transformed quiver's map at
/// position (i, i) — the self-map of the space M_{g(i)} — must equal the
/// original map at (g(i), g(i)), for every generator and inverse, checked
/// exactly on the supplied test quivers.
pub fn diagonal_preservation_gate(
    kernel: &ActionKernel,
    presentation: &GroupPresentation,
    test_quivers: &[Quiver],
) -> Result<(), KernelError> {
    for q in test_quivers {
        for (g, name) in presentation.generators.iter().enumerate() {
            for letter in [
                Letter { gen: g, inverse: false },
                Letter { gen: g, inverse: true },
            ] {
                let Ok(action) = kernel.action_for_letter(letter, &presentation.generators) else {
                    continue; // missing inverses are caught at application time
                };
                let out = apply_generator(action, q)?;
                for i in 0..q.n() {
                    let p = action.perm[i];
                    if out.map(i, i) != q.map(p, p) {
                        return Err(KernelError::DiagonalGate {
                            gen: name.clone(),
                            point: i + 1,
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

/// Gate: every relation word acts as the identity transformation on the
/// supplied test quivers.
pub fn relation_coherence_gate(
    kernel: &ActionKernel,
    presentation: &GroupPresentation,
    test_quivers: &[Quiver],
) -> Result<(), KernelError> {
    for q in test_quivers {
        for rel in &presentation.relations {
            let out = apply_action(kernel, presentation, rel, q)?;
            if out != *q {
                return Err(KernelError::RelationGate(
                    presentation.word_to_string(rel),
                ));
            }
        }
    }
    Ok(())
}

// --- JSON ---
// {"name": "...", "n_points": 2,
//  "generators": {"t": {"perm": {"1": 2, "2": 1},
//                       "maps": {"1,2": {"m": {"j": 1, "i": 2}}, ...},
//                       "inverse_maps": {...}?}}}
// Map keys "i,j" are the SOURCE pair; the program computes the map stored at
// (g(j), g(i)). All indices 1-based in files.

#[derive(Serialize, Deserialize)]
struct RawGenerator {
    #[serde(default)]
    perm: BTreeMap<String, usize>,
    maps: BTreeMap<String, Expr>,
    #[serde(default)]
    inverse_maps: Option<BTreeMap<String, Expr>>,
}

#[derive(Serialize, Deserialize)]
struct RawKernel {
    name: String,
    n_points: usize,
    generators: BTreeMap<String, RawGenerator>,
}

/// Loads a kernel from its JSON form, aligned with a presentation.
pub fn kernel_from_json(
    value: &serde_json::Value,
    presentation: &GroupPresentation,
) -> Result<ActionKernel, KernelError> {
    let raw: RawKernel = serde_json::from_value(value.clone())
        .map_err(|e| KernelError::KernelEvaluationError(format!("bad kernel file: {e}")))?;
    let n = raw.n_points;
    let parse_programs = |maps: &BTreeMap<String, Expr>| -> Result<BTreeMap<(usize, usize), Expr>, KernelError> {
        let mut programs = BTreeMap::new();
        for (key, expr) in maps {
            let (i, j) = crate::quiver::parse_pair_key(key)
                .map_err(KernelError::KernelEvaluationError)?;
            if i == 0 || j == 0 || i > n || j > n {
                return Err(KernelError::KernelEvaluationError(format!(
                    "program key {key:?} out of range"
                )));
            }
            let mut e = expr.clone();
            e.shift_indices(-1);
            programs.insert((i - 1, j - 1), e);
        }
        Ok(programs)
    };
    let mut generators = Vec::new();
    let mut inverses = Vec::new();
    for gname in &presentation.generators {
        let rawg = raw.generators.get(gname).ok_or_else(|| {
            KernelError::KernelEvaluationError(format!("kernel missing generator {gname:?}"))
        })?;
        let mut perm: Vec<usize> = (0..n).collect();
        for (from, to) in &rawg.perm {
            let from: usize = from
                .parse()
                .map_err(|e| KernelError::KernelEvaluationError(format!("bad perm key: {e}")))?;
            if from == 0 || from > n || *to == 0 || *to > n {
                return Err(KernelError::KernelEvaluationError(format!(
                    "perm {from}->{to} out of range"
                )));
            }
            perm[from - 1] = to - 1;
        }
        if !crate::group::is_permutation(&perm, n) {
            return Err(KernelError::KernelEvaluationError(format!(
                "generator {gname:?}: not a permutation"
            )));
        }
        generators.push(GeneratorAction {
            perm: perm.clone(),
            programs: parse_programs(&rawg.maps)?,
        });
        inverses.push(match &rawg.inverse_maps {
            Some(maps) => Some(GeneratorAction {
                perm: crate::group::invert_permutation(&perm),
                programs: parse_programs(maps)?,
            }),
            None => None,
        });
    }
    Ok(ActionKernel {
        name: raw.name,
        n_points: n,
        generators,
        inverses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupPresentation;

    fn z2_swap() -> GroupPresentation {
        GroupPresentation::new(
            2,
            vec!["t".into()],
            vec![vec![
                Letter { gen: 0, inverse: false },
                Letter { gen: 0, inverse: false },
            ]],
            vec![vec![1, 0]],
        )
        .unwrap()
    }

    fn sample_quiver() -> Quiver {
        let mut q = Quiver::zero(vec![1, 1]);
        q.set_map(0, 0, ExactMatrix::from_int_rows(&[&[1]]));
        q.set_map(1, 1, ExactMatrix::from_int_rows(&[&[2]]));
        q.set_map(1, 0, ExactMatrix::from_int_rows(&[&[5]]));
        q.set_map(0, 1, ExactMatrix::from_int_rows(&[&[7]]));
        q
    }

    #[test]
    fn identity_kernel_fixes_everything() {
        // a generator acting trivially on points, identity programs
        let p = GroupPresentation::new(
            2,
            vec!["t".into()],
            vec![vec![
                Letter { gen: 0, inverse: false },
                Letter { gen: 0, inverse: false },
            ]],
            vec![vec![0, 1]],
        )
        .unwrap();
        let k = ActionKernel::identity(&p);
        let q = sample_quiver();
        let w = vec![Letter { gen: 0, inverse: false }];
        assert_eq!(apply_action(&k, &p, &w, &q).unwrap(), q);
        diagonal_preservation_gate(&k, &p, &[q.clone()]).unwrap();
        relation_coherence_gate(&k, &p, &[q]).unwrap();
    }

    #[test]
    fn pure_permutation_relabels_all_data() {
        let p = z2_swap();
        let k = ActionKernel::pure_permutation(&p);
        let q = sample_quiver();
        let w = vec![Letter { gen: 0, inverse: false }];
        let out = apply_action(&k, &p, &w, &q).unwrap();
        // position i now carries the data of point g(i)
        assert_eq!(out.map(0, 0), q.map(1, 1));
        assert_eq!(out.map(1, 1), q.map(0, 0));
        assert_eq!(out.map(1, 0), q.map(0, 1));
        assert_eq!(out.map(0, 1), q.map(1, 0));
    }

    #[test]
    fn gates_pass_for_builtins() {
        let p = z2_swap();
        let quivers = vec![sample_quiver(), Quiver::zero(vec![1, 1])];
        let k = ActionKernel::pure_permutation(&p);
        diagonal_preservation_gate(&k, &p, &quivers).unwrap();
        relation_coherence_gate(&k, &p, &quivers).unwrap();
    }

    #[test]
    fn word_application_composes() {
        let p = z2_swap();
        let k = ActionKernel::pure_permutation(&p);
        let q = sample_quiver();
        let t = Letter { gen: 0, inverse: false };
        let once = apply_action(&k, &p, &vec![t], &q).unwrap();
        let twice = apply_action(&k, &p, &vec![t, t], &q).unwrap();
        assert_eq!(twice, q);
        assert_eq!(apply_action(&k, &p, &vec![t], &once).unwrap(), twice);
    }

    #[test]
    fn bad_program_detected_by_gate() {
        // a kernel that negates a diagonal entry fails the diagonal gate
        let p = z2_swap();
        let mut k = ActionKernel::pure_permutation(&p);
        let prog = k.generators[0].programs.get_mut(&(0, 0)).unwrap();
        *prog = Expr::Neg(Box::new(prog.clone()));
        let err = diagonal_preservation_gate(&k, &p, &[sample_quiver()]).unwrap_err();
        assert!(matches!(err, KernelError::DiagonalGate { .. }));
    }

    #[test]
    fn identity_kernel_fails_gate_under_nontrivial_action() {
        // identity programs with a nontrivial permutation break equation (5)
        let p = z2_swap();
        let k = ActionKernel::identity(&p);
        let err = diagonal_preservation_gate(&k, &p, &[sample_quiver()]).unwrap_err();
        assert!(matches!(err, KernelError::DiagonalGate { .. }));
    }

    #[test]
    fn kernel_json_loads() {
        let p = z2_swap();
        let text = r#"{
            "name": "swap-example",
            "n_points": 2,
            "generators": {
                "t": {
                    "perm": {"1": 2, "2": 1},
                    "maps": {
                        "1,1": {"m": {"j": 2, "i": 2}},
                        "2,2": {"m": {"j": 1, "i": 1}},
                        "1,2": {"m": {"j": 1, "i": 2}},
                        "2,1": {"m": {"j": 2, "i": 1}}
                    }
                }
            }
        }"#;
        let value: serde_json::Value = serde_json::from_str(text).unwrap();
        let k = kernel_from_json(&value, &p).unwrap();
        // this file spells out the pure-permutation kernel on 2 points
        let q = sample_quiver();
        let w = vec![Letter { gen: 0, inverse: false }];
        let expected = apply_action(&ActionKernel::pure_permutation(&p), &p, &w, &q).unwrap();
        assert_eq!(apply_action(&k, &p, &w, &q).unwrap(), expected);
    }
}
