//! Fiber products of presented categories, the functor δ with its
//! constructive morphism lift, and the Ore-square construction.
//!
//! The fiber product of α: 𝒞₁ → 𝒞₀ and β: 𝒞₂ → 𝒞₀ has objects (A, B, r)
//! with r: α(A) ≅ β(B) and morphisms the pairs (f, g) making the square
//! β(g)·r = r'·α(f) commute. Because α and β act on morphisms by sandwich
//! forms, the square is linear in (f, g) and the fiber Hom-space is solved
//! as one stacked system — independent of the direct equivariant solve it is
//! checked against.

use crate::category::{
    equivariant_ls_category, equivariant_quiver_category, local_system_category, quiver_category,
    CatObject, CategoryError, CategoryOps, FunctorData, MorphismFamily, PresentedCategory,
};
use crate::equivariant::{hom_equivariant, ls_functor, restrict, EquivariantQuiver};
use crate::group::GroupPresentation;
use crate::kernel::ActionKernel;
use crate::matrix::ExactMatrix;
use crate::quiver::vanishing_cycles;
use crate::solve::{Constraint, Term};
use rand::Rng;
use serde::Serialize;
use std::sync::Arc;

/// Builds the fiber-product category 𝒞₁ ×_{𝒞₀} 𝒞₂.
pub fn build_fiber_product(
    c1: &PresentedCategory,
    c2: &PresentedCategory,
    c0: &PresentedCategory,
    alpha: &FunctorData,
    beta: &FunctorData,
) -> Result<PresentedCategory, CategoryError> {
    if alpha.source.name() != c1.name()
        || beta.source.name() != c2.name()
        || alpha.target.name() != c0.name()
        || beta.target.name() != c0.name()
    {
        return Err(CategoryError::CategoryMismatch(format!(
            "fiber product needs α: {} → {} and β: {} → {}",
            c1.name(),
            c0.name(),
            c2.name(),
            c0.name()
        )));
    }
    Ok(PresentedCategory::new(Arc::new(FiberOps {
        name: format!("{} x_{} {}", c1.name(), c0.name(), c2.name()),
        c1: c1.clone(),
        c2: c2.clone(),
        c0: c0.clone(),
        alpha: alpha.clone(),
        beta: beta.clone(),
    })))
}

pub fn make_pair(a: CatObject, b: CatObject, iso: Vec<ExactMatrix>) -> CatObject {
    CatObject::Pair {
        a: Box::new(a),
        b: Box::new(b),
        iso,
    }
}

fn split_pair(x: &CatObject) -> Result<(&CatObject, &CatObject, &[ExactMatrix]), CategoryError> {
    match x {
        CatObject::Pair { a, b, iso } => Ok((a, b, iso)),
        _ => Err(CategoryError::WrongCategory(
            "fiber product".into(),
            "expected a pair object".into(),
        )),
    }
}

struct FiberOps {
    name: String,
    c1: PresentedCategory,
    c2: PresentedCategory,
    c0: PresentedCategory,
    alpha: FunctorData,
    beta: FunctorData,
}

impl CategoryOps for FiberOps {
    fn name(&self) -> &str {
        &self.name
    }

    fn validate(&self, x: &CatObject) -> Result<(), CategoryError> {
        let (a, b, iso) = split_pair(x)?;
        self.c1.validate(a)?;
        self.c2.validate(b)?;
        let fa = self.alpha.apply(a)?;
        let gb = self.beta.apply(b)?;
        if !self.c0.is_morphism(&fa, &gb, &iso.to_vec())? {
            return Err(CategoryError::InvalidObject(
                "comparison r is not a morphism α(A) → β(B)".into(),
            ));
        }
        if !self.c0.is_isomorphism(&iso.to_vec()) {
            return Err(CategoryError::InvalidObject(
                "comparison r is not invertible".into(),
            ));
        }
        Ok(())
    }

    fn slots(&self, x: &CatObject, y: &CatObject) -> Result<Vec<(usize, usize)>, CategoryError> {
        let (xa, xb, _) = split_pair(x)?;
        let (ya, yb, _) = split_pair(y)?;
        let mut slots = self.c1.slots(xa, ya)?;
        slots.extend(self.c2.slots(xb, yb)?);
        Ok(slots)
    }

    fn constraints(&self, x: &CatObject, y: &CatObject) -> Result<Vec<Constraint>, CategoryError> {
        let (xa, xb, xr) = split_pair(x)?;
        let (ya, yb, yr) = split_pair(y)?;
        let offset = self.c1.slots(xa, ya)?.len();
        let mut cs = self.c1.ops_constraints(xa, ya)?;
        for c in self.c2.ops_constraints(xb, yb)? {
            cs.push(Constraint::new(
                c.terms
                    .into_iter()
                    .map(|t| Term::new(t.block + offset, t.left, t.right))
                    .collect(),
            ));
        }
        // the commuting square β(g)·r = r'·α(f), one constraint per 𝒞₀ slot
        let alpha_rows = self.alpha.morphism_rows(xa, ya)?;
        let beta_rows = self.beta.morphism_rows(xb, yb)?;
        for t in 0..alpha_rows.len().max(beta_rows.len()) {
            let mut terms = Vec::new();
            if let Some(row) = beta_rows.get(t) {
                for (s, l, r) in row {
                    terms.push(Term::new(s + offset, l.clone(), r * &xr[t]));
                }
            }
            if let Some(row) = alpha_rows.get(t) {
                for (s, l, r) in row {
                    terms.push(Term::new(*s, -&(&yr[t] * l), r.clone()));
                }
            }
            cs.push(Constraint::new(terms));
        }
        Ok(cs)
    }
}

/// The forgetful functor α: ℒ_Ψ → ℒ, (L, ρ_L) ↦ L.
pub fn forget_equivariance_functor(presentation: &GroupPresentation) -> FunctorData {
    let source = equivariant_ls_category(presentation.clone());
    let target = local_system_category();
    FunctorData::new(
        "forget",
        source,
        target.clone(),
        Arc::new(|x| match x {
            CatObject::EquivariantLocalSystem(e) => Ok(CatObject::LocalSystem(e.ls.clone())),
            _ => Err(CategoryError::WrongCategory(
                "L_Psi".into(),
                "expected an equivariant local system".into(),
            )),
        }),
        Arc::new(|x, y| {
            let (ex, ey) = match (x, y) {
                (
                    CatObject::EquivariantLocalSystem(ex),
                    CatObject::EquivariantLocalSystem(ey),
                ) => (ex, ey),
                _ => {
                    return Err(CategoryError::WrongCategory(
                        "L_Psi".into(),
                        "expected equivariant local systems".into(),
                    ))
                }
            };
            Ok((0..ex.ls.n())
                .map(|i| {
                    vec![(
                        i,
                        ExactMatrix::identity(ey.ls.dims()[i]),
                        ExactMatrix::identity(ex.ls.dims()[i]),
                    )]
                })
                .collect())
        }),
    )
}

/// The vanishing-cycle functor β: 𝒬 → ℒ.
pub fn vanishing_cycle_functor() -> FunctorData {
    FunctorData::new(
        "vanishing-cycles",
        quiver_category(),
        local_system_category(),
        Arc::new(|x| match x {
            CatObject::Quiver(q) => Ok(CatObject::LocalSystem(vanishing_cycles(q))),
            _ => Err(CategoryError::WrongCategory(
                "Q".into(),
                "expected a quiver".into(),
            )),
        }),
        Arc::new(|x, y| {
            let (qx, qy) = match (x, y) {
                (CatObject::Quiver(qx), CatObject::Quiver(qy)) => (qx, qy),
                _ => {
                    return Err(CategoryError::WrongCategory(
                        "Q".into(),
                        "expected quivers".into(),
                    ))
                }
            };
            Ok((0..qx.n())
                .map(|i| {
                    vec![(
                        i,
                        ExactMatrix::identity(qy.dims()[i]),
                        ExactMatrix::identity(qx.dims()[i]),
                    )]
                })
                .collect())
        }),
    )
}

/// The paper's fiber product ℒ_Ψ ×_ℒ 𝒬 for a presentation.
pub fn paper_fiber_product(
    presentation: &GroupPresentation,
) -> Result<PresentedCategory, CategoryError> {
    let c1 = equivariant_ls_category(presentation.clone());
    let c2 = quiver_category();
    let c0 = local_system_category();
    let alpha = forget_equivariance_functor(presentation);
    let beta = vanishing_cycle_functor();
    build_fiber_product(&c1, &c2, &c0, &alpha, &beta)
}

/// δ on objects: {Q, ρ} ↦ ({L, ρ_L}, Q, id_L).
pub fn delta(x: &EquivariantQuiver) -> CatObject {
    let ls = ls_functor(x);
    let iso: Vec<ExactMatrix> = ls
        .ls
        .dims()
        .iter()
        .map(|&d| ExactMatrix::identity(d))
        .collect();
    make_pair(
        CatObject::EquivariantLocalSystem(ls),
        CatObject::Quiver(restrict(x)),
        iso,
    )
}

/// δ on morphisms: the family σ appears as both components.
pub fn delta_on_morphism(sigma: &[ExactMatrix]) -> MorphismFamily {
    let mut fam: MorphismFamily = sigma.to_vec();
    fam.extend(sigma.iter().cloned());
    fam
}

/// Lifts a fiber-product morphism τ: δ(x) → δ(y) to the equivariant
/// morphism σ with σ_i = τ_i. Verifies the lift satisfies the quiver and
/// equivariance squares and that δ(σ) reproduces τ exactly.
pub fn lift_morphism(
    x: &EquivariantQuiver,
    y: &EquivariantQuiver,
    kernel: &ActionKernel,
    tau: &MorphismFamily,
) -> Result<Vec<ExactMatrix>, CategoryError> {
    let n = x.quiver.n();
    if tau.len() != 2 * n {
        return Err(CategoryError::LiftVerificationFailed(format!(
            "expected {} components, got {}",
            2 * n,
            tau.len()
        )));
    }
    let f_part = &tau[..n];
    let sigma = tau[n..].to_vec();
    // with r = r' = id the square forces the ℒ_Ψ component to equal σ
    if f_part != sigma.as_slice() {
        return Err(CategoryError::LiftVerificationFailed(
            "components disagree across the comparison isomorphism".into(),
        ));
    }
    let eq_cat = equivariant_quiver_category(x.presentation.clone(), kernel.clone());
    let ex = CatObject::EquivariantQuiver(x.clone());
    let ey = CatObject::EquivariantQuiver(y.clone());
    if !eq_cat.is_morphism(&ex, &ey, &sigma)? {
        return Err(CategoryError::LiftVerificationFailed(
            "σ is not an equivariant morphism".into(),
        ));
    }
    if delta_on_morphism(&sigma) != *tau {
        return Err(CategoryError::LiftVerificationFailed(
            "δ(σ) differs from τ".into(),
        ));
    }
    Ok(sigma)
}

/// Outcome of one full-faithfulness comparison.
#[derive(Debug, Clone, Serialize)]
pub struct FullFaithfulnessReport {
    pub dim_equivariant: usize,
    pub dim_fiber: usize,
    pub equal: bool,
}

/// dim Hom_{𝒬_Φ}(x, y) versus dim Hom in ℒ_Ψ ×_ℒ 𝒬 between δ-images,
/// computed by two independent solves.
pub fn full_faithfulness_check(
    x: &EquivariantQuiver,
    y: &EquivariantQuiver,
) -> Result<FullFaithfulnessReport, CategoryError> {
    let dim_equivariant = hom_equivariant(x, y)
        .map_err(|e| CategoryError::Solve(e.to_string()))?
        .dim();
    let fiber = paper_fiber_product(&x.presentation)?;
    let dim_fiber = fiber.hom_space(&delta(x), &delta(y))?.dim();
    Ok(FullFaithfulnessReport {
        dim_equivariant,
        dim_fiber,
        equal: dim_equivariant == dim_fiber,
    })
}

/// Result of the Ore-square construction.
#[derive(Debug)]
pub struct OreSquare {
    pub b_prime: PresentedCategory,
    pub f_prime: FunctorData,
    pub g_prime: FunctorData,
    /// Sample objects of ℬ′ constructed from the inputs.
    pub samples: Vec<CatObject>,
}

/// Whether the linear map Hom(x, y) → Hom(Fx, Fy) induced by a functor is
/// bijective, decided in chosen bases.
pub fn hom_bijective(
    f: &FunctorData,
    x: &CatObject,
    y: &CatObject,
) -> Result<bool, CategoryError> {
    let src = f.source.hom_space(x, y)?;
    let fx = f.apply(x)?;
    let fy = f.apply(y)?;
    let dst = f.target.hom_space(&fx, &fy)?;
    if src.dim() != dst.dim() {
        return Ok(false);
    }
    if src.dim() == 0 {
        return Ok(true);
    }
    let mut cols: Vec<ExactMatrix> = Vec::new();
    for base in &src.basis {
        let image = f.apply_morphism(x, y, base)?;
        match dst.coordinates_of(&image) {
            Some(coords) => cols.push(ExactMatrix::column(coords)),
            None => return Ok(false),
        }
    }
    let mut m = cols[0].clone();
    for c in &cols[1..] {
        m = m.hstack(c).unwrap();
    }
    Ok(m.is_invertible())
}

/// Instance-based Freyd check: Hom bijectivity over all ordered sample pairs
/// and essential surjectivity of the target samples.
pub fn freyd_check(
    f: &FunctorData,
    source_samples: &[CatObject],
    target_samples: &[CatObject],
    rng: &mut impl Rng,
) -> Result<Result<(), String>, CategoryError> {
    for (i, x) in source_samples.iter().enumerate() {
        for (j, y) in source_samples.iter().enumerate() {
            if !hom_bijective(f, x, y)? {
                return Ok(Err(format!(
                    "hom map not bijective on sample pair ({i}, {j})"
                )));
            }
        }
    }
    for (k, t) in target_samples.iter().enumerate() {
        let mut hit = false;
        for x in source_samples {
            let fx = f.apply(x)?;
            if f.target.find_isomorphism(&fx, t, rng)?.is_some() {
                hit = true;
                break;
            }
        }
        if !hit {
            return Ok(Err(format!(
                "target sample {k} is not isomorphic to any functor image"
            )));
        }
    }
    Ok(Ok(()))
}

/// The Ore square: given f: 𝒜 → ℬ (an equivalence on the tested instances)
/// and g: 𝒞 → ℬ, builds ℬ′ with projections f′: ℬ′ → 𝒞 and g′: ℬ′ → 𝒜
/// and verifies that f′ is an equivalence on the constructed instances.
pub fn ore_square(
    f: &FunctorData,
    g: &FunctorData,
    a_samples: &[CatObject],
    c_samples: &[CatObject],
    b_samples: &[CatObject],
    rng: &mut impl Rng,
) -> Result<OreSquare, CategoryError> {
    if f.target.name() != g.target.name() {
        return Err(CategoryError::CategoryMismatch(
            "f and g must share a target".into(),
        ));
    }
    if let Err(witness) = freyd_check(f, a_samples, b_samples, rng)? {
        return Err(CategoryError::NotAnEquivalence(witness));
    }
    let b_prime = build_fiber_product(&f.source, &g.source, &f.target, f, g)?;

    // sample objects (A, C, φ) with φ: F(A) ≅ G(C)
    let mut samples = Vec::new();
    for c in c_samples {
        let gc = g.apply(c)?;
        for a in a_samples {
            let fa = f.apply(a)?;
            if let Some(iso) = f.target.find_isomorphism(&fa, &gc, rng)? {
                samples.push(make_pair(a.clone(), c.clone(), iso));
                break;
            }
        }
    }

    let f_prime = pair_projection(&b_prime, &g.source, false);
    let g_prime = pair_projection(&b_prime, &f.source, true);

    if let Err(witness) = freyd_check(&f_prime, &samples, c_samples, rng)? {
        return Err(CategoryError::NotAnEquivalence(format!(
            "f' fails the Freyd criteria: {witness}"
        )));
    }
    Ok(OreSquare {
        b_prime,
        f_prime,
        g_prime,
        samples,
    })
}

/// Projection functor out of a fiber-product category onto one leg.
fn pair_projection(
    fiber: &PresentedCategory,
    target: &PresentedCategory,
    first_leg: bool,
) -> FunctorData {
    let fiber_for_slots = fiber.clone();
    let target_cl = target.clone();
    FunctorData::new(
        if first_leg { "pr1" } else { "pr2" },
        fiber.clone(),
        target.clone(),
        Arc::new(move |x| {
            let (a, b, _) = split_pair(x)?;
            Ok(if first_leg { a.clone() } else { b.clone() })
        }),
        Arc::new(move |x, y| {
            let (xa, xb, _) = split_pair(x)?;
            let (ya, yb, _) = split_pair(y)?;
            let all = fiber_for_slots.slots(x, y)?;
            let (part, offset) = if first_leg {
                (target_cl.slots(xa, ya)?, 0)
            } else {
                let second = target_cl.slots(xb, yb)?;
                let first_len = all.len() - second.len();
                (second, first_len)
            };
            Ok(part
                .iter()
                .enumerate()
                .map(|(t, &(r, c))| {
                    vec![(offset + t, ExactMatrix::identity(r), ExactMatrix::identity(c))]
                })
                .collect())
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Letter;
    use crate::quiver::Quiver;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

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

    fn swap_object() -> (EquivariantQuiver, ActionKernel) {
        let p = z2_swap();
        let e = EquivariantQuiver {
            presentation: p.clone(),
            quiver: Quiver::zero(vec![1, 1]),
            structure: vec![vec![ExactMatrix::identity(1), ExactMatrix::identity(1)]],
        };
        (e, ActionKernel::pure_permutation(&p))
    }

    #[test]
    fn delta_object_is_valid_pair() {
        let (e, _) = swap_object();
        let fiber = paper_fiber_product(&e.presentation).unwrap();
        let d = delta(&e);
        fiber.validate(&d).unwrap();
    }

    #[test]
    fn trivial_group_dims_agree() {
        let q = Quiver::zero(vec![1, 1]);
        let e = EquivariantQuiver::with_trivial_group(q);
        let report = full_faithfulness_check(&e, &e).unwrap();
        assert!(report.equal);
        assert_eq!(report.dim_equivariant, 2);
    }

    #[test]
    fn swap_example_dims_agree() {
        let (e, _) = swap_object();
        let report = full_faithfulness_check(&e, &e).unwrap();
        assert!(report.equal);
        assert_eq!(report.dim_equivariant, 1);
    }

    #[test]
    fn lift_round_trips() {
        let (e, k) = swap_object();
        let fiber = paper_fiber_product(&e.presentation).unwrap();
        let dx = delta(&e);
        let hom = fiber.hom_space(&dx, &dx).unwrap();
        assert!(hom.dim() >= 1);
        for tau in &hom.basis {
            let sigma = lift_morphism(&e, &e, &k, tau).unwrap();
            assert_eq!(delta_on_morphism(&sigma), *tau);
        }
        // and δ of an equivariant morphism lifts back to itself
        let id: Vec<ExactMatrix> = vec![ExactMatrix::identity(1), ExactMatrix::identity(1)];
        let tau = delta_on_morphism(&id);
        assert_eq!(lift_morphism(&e, &e, &k, &tau).unwrap(), id);
    }

    #[test]
    fn ore_square_with_identity_is_equivalence() {
        let cat = local_system_category();
        let f = FunctorData::identity(&cat);
        let g = FunctorData::identity(&cat);
        let mk = |m: i64| {
            CatObject::LocalSystem(
                crate::quiver::LocalSystemQuiver::new(
                    vec![1],
                    vec![ExactMatrix::from_int_rows(&[&[m]])],
                )
                .unwrap(),
            )
        };
        let samples = vec![mk(1), mk(2)];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sq = ore_square(&f, &g, &samples, &samples, &samples, &mut rng).unwrap();
        assert_eq!(sq.samples.len(), 2);
        // f' projects (A, C, φ) to C; hom dims match the base category
        let h = sq.b_prime.hom_space(&sq.samples[0], &sq.samples[0]).unwrap();
        assert_eq!(h.dim(), 1);
    }

    #[test]
    fn ore_square_rejects_non_equivalence() {
        // the zero-collapse functor is not an equivalence
        let cat = local_system_category();
        let collapse = FunctorData::new(
            "collapse",
            cat.clone(),
            cat.clone(),
            Arc::new(|x| {
                let n = match x {
                    CatObject::LocalSystem(l) => l.n(),
                    _ => 0,
                };
                Ok(CatObject::LocalSystem(
                    crate::quiver::LocalSystemQuiver::new(
                        vec![0; n],
                        vec![ExactMatrix::zeros(0, 0); n],
                    )
                    .unwrap(),
                ))
            }),
            Arc::new(|x, _y| {
                let n = match x {
                    CatObject::LocalSystem(l) => l.n(),
                    _ => 0,
                };
                Ok(vec![vec![]; n])
            }),
        );
        let mk = |m: i64| {
            CatObject::LocalSystem(
                crate::quiver::LocalSystemQuiver::new(
                    vec![1],
                    vec![ExactMatrix::from_int_rows(&[&[m]])],
                )
                .unwrap(),
            )
        };
        let samples = vec![mk(1), mk(3)];
        let g = FunctorData::identity(&cat);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let err = ore_square(&collapse, &g, &samples, &samples, &samples, &mut rng).unwrap_err();
        assert!(matches!(err, CategoryError::NotAnEquivalence(_)));
    }

    #[test]
    fn ore_square_constant_functor_degenerates() {
        // g sends everything to the zero object; ℬ′ objects pair A with any C
        // through φ: F(A) ≅ 0, which forces A ≅ 0
        let cat = local_system_category();
        let f = FunctorData::identity(&cat);
        let to_zero = FunctorData::new(
            "zero",
            cat.clone(),
            cat.clone(),
            Arc::new(|x| {
                let n = match x {
                    CatObject::LocalSystem(l) => l.n(),
                    _ => 0,
                };
                Ok(CatObject::LocalSystem(
                    crate::quiver::LocalSystemQuiver::new(
                        vec![0; n],
                        vec![ExactMatrix::zeros(0, 0); n],
                    )
                    .unwrap(),
                ))
            }),
            Arc::new(|x, _y| {
                let n = match x {
                    CatObject::LocalSystem(l) => l.n(),
                    _ => 0,
                };
                Ok(vec![vec![]; n])
            }),
        );
        let zero = CatObject::LocalSystem(
            crate::quiver::LocalSystemQuiver::new(vec![0], vec![ExactMatrix::zeros(0, 0)]).unwrap(),
        );
        let c_obj = CatObject::LocalSystem(
            crate::quiver::LocalSystemQuiver::new(vec![1], vec![ExactMatrix::from_int_rows(&[&[5]])])
                .unwrap(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // A-samples: just the zero object (the only A with F(A) ≅ 0)
        let sq = ore_square(
            &f,
            &to_zero,
            &[zero.clone()],
            &[c_obj.clone()],
            &[zero.clone()],
            &mut rng,
        )
        .unwrap();
        assert_eq!(sq.samples.len(), 1);
        match &sq.samples[0] {
            CatObject::Pair { a, b, .. } => {
                assert_eq!(**a, zero);
                assert_eq!(**b, c_obj);
            }
            _ => panic!("expected pair"),
        }
    }
}
