//! Group-equivariant quivers and local systems.
//!
//! An equivariant quiver carries, per generator g, invertible structure maps
//! γ_{i,g}: M_i → M_{g(i)} making the square with the kernel-transformed maps
//! commute, with every relation word transporting to the identity. The
//! equivariant vanishing-cycle functor keeps the same spaces and structure
//! maps and takes monodromies l_i = 1 + m_{ii}; commutation of the diagonal
//! square plus diagonal preservation of the kernel make the result a valid
//! equivariant local system.

use crate::group::{GroupPresentation, Letter, Word};
use crate::kernel::{apply_action, ActionKernel, KernelError};
use crate::matrix::ExactMatrix;
use crate::quiver::{vanishing_cycles, LocalSystemQuiver, Quiver};
use crate::solve::{solve_homogeneous, Constraint, SolutionSpace};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EquivariantError {
    #[error("structure map γ for generator {gen:?} at point {point} has wrong shape or is singular")]
    BadStructureMap { gen: String, point: usize },
    #[error("diagram (4) fails for generator {gen:?} at (i={i}, j={j})")]
    Diagram4Violation { i: usize, j: usize, gen: String },
    #[error("relation {0:?} does not transport to the identity")]
    RelationViolation(String),
    #[error("presentations differ")]
    PresentationMismatch,
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("quiver error: {0}")]
    Quiver(String),
}

/// An object of 𝒬_Φ: a quiver with equivariant structure over a presentation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivariantQuiver {
    pub presentation: GroupPresentation,
    pub quiver: Quiver,
    /// structure[g][i] = γ_{i,g}: M_i → M_{g(i)}, shape (dims[g(i)], dims[i])
    pub structure: Vec<Vec<ExactMatrix>>,
}

impl EquivariantQuiver {
    /// A quiver with trivial structure over the trivial group.
    pub fn with_trivial_group(quiver: Quiver) -> Self {
        EquivariantQuiver {
            presentation: GroupPresentation::trivial(quiver.n()),
            quiver,
            structure: vec![],
        }
    }

    /// γ for a letter at a point: the structure map, or the inverse of the
    /// matching map when the letter is inverted.
    fn gamma(&self, letter: Letter, point: usize) -> ExactMatrix {
        if !letter.inverse {
            self.structure[letter.gen][point].clone()
        } else {
            let pre = crate::group::invert_permutation(&self.presentation.point_action[letter.gen])
                [point];
            self.structure[letter.gen][pre]
                .invert()
                .expect("structure maps are invertible")
        }
    }

    /// Transport along a word: per point i, the composite map M_i → M_{w(i)}.
    /// Letters apply left to right.
    pub fn transport(&self, word: &Word) -> Vec<ExactMatrix> {
        let n = self.quiver.n();
        let mut current_point: Vec<usize> = (0..n).collect();
        let mut maps: Vec<ExactMatrix> = self
            .quiver
            .dims()
            .iter()
            .map(|&d| ExactMatrix::identity(d))
            .collect();
        for letter in word {
            let step_perm = self
                .presentation
                .generator_perm(letter.gen, letter.inverse);
            for i in 0..n {
                let p = current_point[i];
                maps[i] = &self.gamma(*letter, p) * &maps[i];
                current_point[i] = step_perm[p];
            }
        }
        maps
    }
}

/// Checks all equivariance invariants exactly.
pub fn validate_equivariant(
    e: &EquivariantQuiver,
    kernel: &ActionKernel,
) -> Result<(), EquivariantError> {
    let p = &e.presentation;
    let q = &e.quiver;
    let n = q.n();
    if e.structure.len() != p.generators.len() || kernel.n_points != n || p.n_points != n {
        return Err(EquivariantError::PresentationMismatch);
    }
    // shapes and invertibility of γ
    for (g, gamma) in e.structure.iter().enumerate() {
        if gamma.len() != n {
            return Err(EquivariantError::PresentationMismatch);
        }
        for (i, m) in gamma.iter().enumerate() {
            let target = p.point_action[g][i];
            if m.shape() != (q.dims()[target], q.dims()[i]) || !m.is_invertible() {
                return Err(EquivariantError::BadStructureMap {
                    gen: p.generators[g].clone(),
                    point: i + 1,
                });
            }
        }
    }
    // diagram (4): γ_{j,g}·m_{ji} = m̃_{g(j)g(i)}·γ_{i,g}, where the right
    // factor is the transformed quiver's map stored at position (j, i)
    for g in 0..p.generators.len() {
        let word = vec![Letter {
            gen: g,
            inverse: false,
        }];
        let transformed = apply_action(kernel, p, &word, q)?;
        for j in 0..n {
            for i in 0..n {
                let lhs = &e.structure[g][j] * q.map(j, i);
                let rhs = transformed.map(j, i) * &e.structure[g][i];
                if lhs != rhs {
                    return Err(EquivariantError::Diagram4Violation {
                        i: i + 1,
                        j: j + 1,
                        gen: p.generators[g].clone(),
                    });
                }
            }
        }
    }
    // relation words transport to the identity on every M_i
    for rel in &p.relations {
        let transport = e.transport(rel);
        if transport.iter().any(|m| !m.is_identity()) {
            return Err(EquivariantError::RelationViolation(p.word_to_string(rel)));
        }
    }
    Ok(())
}

/// Basis of Hom_{𝒬_Φ}(x, y): families satisfying both the quiver-morphism
/// squares and the equivariance squares τ_{g(i)}·γ_{i,g} = γ'_{i,g}·τ_i,
/// solved as one joint linear system.
pub fn hom_equivariant(
    x: &EquivariantQuiver,
    y: &EquivariantQuiver,
) -> Result<SolutionSpace, EquivariantError> {
    if x.presentation != y.presentation {
        return Err(EquivariantError::PresentationMismatch);
    }
    let n = x.quiver.n();
    let shapes: Vec<(usize, usize)> = (0..n)
        .map(|i| (y.quiver.dims()[i], x.quiver.dims()[i]))
        .collect();
    let mut constraints = Vec::new();
    for j in 0..n {
        for i in 0..n {
            constraints.push(Constraint::intertwine(
                i,
                j,
                x.quiver.map(j, i),
                y.quiver.map(j, i),
                y.quiver.dims()[j],
                x.quiver.dims()[i],
            ));
        }
    }
    for g in 0..x.presentation.generators.len() {
        let perm = &x.presentation.point_action[g];
        for i in 0..n {
            constraints.push(Constraint::intertwine(
                i,
                perm[i],
                &x.structure[g][i],
                &y.structure[g][i],
                y.quiver.dims()[perm[i]],
                x.quiver.dims()[i],
            ));
        }
    }
    solve_homogeneous(&shapes, &constraints).map_err(|e| EquivariantError::Quiver(e.to_string()))
}

/// An object of ℒ_Ψ: an equivariant local system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivariantLocalSystem {
    pub presentation: GroupPresentation,
    pub ls: LocalSystemQuiver,
    /// structure[g][i]: L_i → L_{g(i)}
    pub structure: Vec<Vec<ExactMatrix>>,
}

impl EquivariantLocalSystem {
    fn gamma(&self, letter: Letter, point: usize) -> ExactMatrix {
        if !letter.inverse {
            self.structure[letter.gen][point].clone()
        } else {
            let pre = crate::group::invert_permutation(&self.presentation.point_action[letter.gen])
                [point];
            self.structure[letter.gen][pre]
                .invert()
                .expect("structure maps are invertible")
        }
    }

    pub fn transport(&self, word: &Word) -> Vec<ExactMatrix> {
        let n = self.ls.n();
        let mut current_point: Vec<usize> = (0..n).collect();
        let mut maps: Vec<ExactMatrix> = self
            .ls
            .dims()
            .iter()
            .map(|&d| ExactMatrix::identity(d))
            .collect();
        for letter in word {
            let step_perm = self
                .presentation
                .generator_perm(letter.gen, letter.inverse);
            for i in 0..n {
                let p = current_point[i];
                maps[i] = &self.gamma(*letter, p) * &maps[i];
                current_point[i] = step_perm[p];
            }
        }
        maps
    }

    /// Checks the Ψ-structure: invertible components that intertwine the
    /// monodromies (ρ_{g,i}·l_i = l_{g(i)}·ρ_{g,i}) and relation coherence.
    pub fn validate(&self) -> Result<(), EquivariantError> {
        let p = &self.presentation;
        let n = self.ls.n();
        if self.structure.len() != p.generators.len() || p.n_points != n {
            return Err(EquivariantError::PresentationMismatch);
        }
        for (g, comps) in self.structure.iter().enumerate() {
            for (i, m) in comps.iter().enumerate() {
                let target = p.point_action[g][i];
                if m.shape() != (self.ls.dims()[target], self.ls.dims()[i]) || !m.is_invertible() {
                    return Err(EquivariantError::BadStructureMap {
                        gen: p.generators[g].clone(),
                        point: i + 1,
                    });
                }
                let lhs = m * self.ls.monodromy(i);
                let rhs = self.ls.monodromy(target) * m;
                if lhs != rhs {
                    return Err(EquivariantError::Diagram4Violation {
                        i: i + 1,
                        j: i + 1,
                        gen: p.generators[g].clone(),
                    });
                }
            }
        }
        for rel in &p.relations {
            let transport = self.transport(rel);
            if transport.iter().any(|m| !m.is_identity()) {
                return Err(EquivariantError::RelationViolation(p.word_to_string(rel)));
            }
        }
        Ok(())
    }
}

/// Basis of Hom_{ℒ_Ψ}(x, y): intertwining with monodromies plus equivariance.
pub fn hom_equivariant_ls(
    x: &EquivariantLocalSystem,
    y: &EquivariantLocalSystem,
) -> Result<SolutionSpace, EquivariantError> {
    if x.presentation != y.presentation {
        return Err(EquivariantError::PresentationMismatch);
    }
    let n = x.ls.n();
    let shapes: Vec<(usize, usize)> = (0..n).map(|i| (y.ls.dims()[i], x.ls.dims()[i])).collect();
    let mut constraints = Vec::new();
    for i in 0..n {
        constraints.push(Constraint::intertwine(
            i,
            i,
            x.ls.monodromy(i),
            y.ls.monodromy(i),
            y.ls.dims()[i],
            x.ls.dims()[i],
        ));
    }
    for g in 0..x.presentation.generators.len() {
        let perm = &x.presentation.point_action[g];
        for i in 0..n {
            constraints.push(Constraint::intertwine(
                i,
                perm[i],
                &x.structure[g][i],
                &y.structure[g][i],
                y.ls.dims()[perm[i]],
                x.ls.dims()[i],
            ));
        }
    }
    solve_homogeneous(&shapes, &constraints).map_err(|e| EquivariantError::Quiver(e.to_string()))
}

/// The equivariant vanishing-cycle functor: underlying local system from
/// l_i = 1 + m_{ii}, structure maps reused as-is.
pub fn ls_functor(e: &EquivariantQuiver) -> EquivariantLocalSystem {
    EquivariantLocalSystem {
        presentation: e.presentation.clone(),
        ls: vanishing_cycles(&e.quiver),
        structure: e.structure.clone(),
    }
}

/// The restriction functor 𝒬_Φ → 𝒬: forgets the equivariant structure.
pub fn restrict(e: &EquivariantQuiver) -> Quiver {
    e.quiver.clone()
}

// JSON: {"presentation": {...}, "quiver": {...},
//        "structure": {"t": [matrix per point, in point order]}}
impl serde::Serialize for EquivariantQuiver {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let structure: std::collections::BTreeMap<String, &Vec<ExactMatrix>> = self
            .presentation
            .generators
            .iter()
            .cloned()
            .zip(self.structure.iter())
            .collect();
        let mut map = serde_json::Map::new();
        map.insert(
            "presentation".into(),
            serde_json::to_value(&self.presentation).map_err(serde::ser::Error::custom)?,
        );
        map.insert(
            "quiver".into(),
            serde_json::to_value(&self.quiver).map_err(serde::ser::Error::custom)?,
        );
        map.insert(
            "structure".into(),
            serde_json::to_value(&structure).map_err(serde::ser::Error::custom)?,
        );
        serde_json::Value::Object(map).serialize(serializer)
    }
}

impl<'de> serde::Deserialize<'de> for EquivariantQuiver {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(serde::Deserialize)]
        struct Raw {
            presentation: GroupPresentation,
            quiver: Quiver,
            #[serde(default)]
            structure: std::collections::BTreeMap<String, Vec<ExactMatrix>>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let mut structure = Vec::with_capacity(raw.presentation.generators.len());
        for g in &raw.presentation.generators {
            let comps = raw.structure.get(g).ok_or_else(|| {
                D::Error::custom(format!("missing structure maps for generator {g:?}"))
            })?;
            structure.push(comps.clone());
        }
        Ok(EquivariantQuiver {
            presentation: raw.presentation,
            quiver: raw.quiver,
            structure,
        })
    }
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

    fn swap_example(g1: i64, g2: i64) -> (EquivariantQuiver, ActionKernel) {
        let p = z2_swap();
        let q = Quiver::zero(vec![1, 1]);
        let e = EquivariantQuiver {
            presentation: p.clone(),
            quiver: q,
            structure: vec![vec![
                ExactMatrix::from_int_rows(&[&[g1]]),
                ExactMatrix::from_int_rows(&[&[g2]]),
            ]],
        };
        (e, ActionKernel::pure_permutation(&p))
    }

    #[test]
    fn trivial_group_always_validates() {
        let q = Quiver::zero(vec![2, 1]);
        let e = EquivariantQuiver::with_trivial_group(q);
        let k = ActionKernel::identity(&e.presentation);
        validate_equivariant(&e, &k).unwrap();
    }

    #[test]
    fn swap_example_validates() {
        let (e, k) = swap_example(1, 1);
        validate_equivariant(&e, &k).unwrap();
    }

    #[test]
    fn relation_violation_detected() {
        // γ = (1, -1): diagram (4) fine (all maps zero), but t² transports to -1
        let (e, k) = swap_example(1, -1);
        assert!(matches!(
            validate_equivariant(&e, &k),
            Err(EquivariantError::RelationViolation(_))
        ));
    }

    #[test]
    fn diagram4_violation_detected() {
        let p = z2_swap();
        let mut q = Quiver::zero(vec![1, 1]);
        q.set_map(1, 0, ExactMatrix::from_int_rows(&[&[1]]));
        // pure-permutation action moves m_{21} to position (1,2); for
        // γ = (1, 1) diagram (4) at (i=1, j=2) reads 1·m21 = m̃_{12}·1 = 0
        let e = EquivariantQuiver {
            presentation: p.clone(),
            quiver: q,
            structure: vec![vec![
                ExactMatrix::identity(1),
                ExactMatrix::identity(1),
            ]],
        };
        let k = ActionKernel::pure_permutation(&p);
        assert!(matches!(
            validate_equivariant(&e, &k),
            Err(EquivariantError::Diagram4Violation { .. })
        ));
    }

    #[test]
    fn hom_equivariant_examples() {
        // trivial group: reduces to hom_basis
        let q = Quiver::zero(vec![1, 1]);
        let e = EquivariantQuiver::with_trivial_group(q.clone());
        let h = hom_equivariant(&e, &e).unwrap();
        assert_eq!(h.dim(), crate::quiver::hom_basis(&q, &q).unwrap().dim());

        // ℤ/2 swap with γ = (1,1): τ₁ = τ₂ forced, dimension 1
        let (e, _k) = swap_example(1, 1);
        let h = hom_equivariant(&e, &e).unwrap();
        assert_eq!(h.dim(), 1);
        let fam = &h.basis[0];
        assert_eq!(fam[0], fam[1]);
    }

    #[test]
    fn constraint_monotonicity() {
        let (e, _) = swap_example(1, 1);
        let d_eq = hom_equivariant(&e, &e).unwrap().dim();
        let d_q = crate::quiver::hom_basis(&e.quiver, &e.quiver).unwrap().dim();
        assert!(d_eq <= d_q);
        assert_eq!(d_q, 2);
    }

    #[test]
    fn ls_functor_output_validates() {
        let (e, k) = swap_example(2, 2);
        // γ = (2, 1/2) would be needed for t² = 1; fix structure directly:
        let mut e = e;
        e.structure[0][1] = ExactMatrix::from_int_rows(&[&[1]])
            .scale(&crate::scalar::Scalar::from_fraction(1, 2));
        validate_equivariant(&e, &k).unwrap();
        let ls = ls_functor(&e);
        ls.validate().unwrap();
        assert!(ls.ls.monodromy(0).is_identity());
        assert_eq!(ls.structure, e.structure);
    }

    #[test]
    fn restrict_forgets_structure() {
        let (e, _) = swap_example(1, 1);
        assert_eq!(restrict(&e), e.quiver);
        // every equivariant hom element is a quiver morphism
        let h = hom_equivariant(&e, &e).unwrap();
        for fam in &h.basis {
            crate::quiver::QuiverMorphism::new(e.quiver.clone(), e.quiver.clone(), fam.clone())
                .unwrap();
        }
    }

    #[test]
    fn transport_follows_points() {
        let p = z2_swap();
        let q = Quiver::zero(vec![1, 1]);
        let e = EquivariantQuiver {
            presentation: p,
            quiver: q,
            structure: vec![vec![
                ExactMatrix::from_int_rows(&[&[2]]),
                ExactMatrix::from_int_rows(&[&[3]]),
            ]],
        };
        let w = vec![
            Letter { gen: 0, inverse: false },
            Letter { gen: 0, inverse: false },
        ];
        let t = e.transport(&w);
        // point 1: γ_{1,t} = 2 then γ at point 2: 3 → 6
        assert_eq!(*t[0].get(0, 0), crate::scalar::Scalar::from_int(6));
        assert_eq!(*t[1].get(0, 0), crate::scalar::Scalar::from_int(6));
        // inverse letter undoes the step
        let w = vec![
            Letter { gen: 0, inverse: false },
            Letter { gen: 0, inverse: true },
        ];
        let t = e.transport(&w);
        assert!(t[0].is_identity() && t[1].is_identity());
    }
}
