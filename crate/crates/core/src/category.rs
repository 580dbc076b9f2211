//! Operationally presented categories.
//!
//! All categories in this workbench share one shape: an object carries a list
//! of "slots" (finite-dimensional spaces), a morphism is a family of matrices
//! indexed by slots, composition is slotwise matrix product, and the Hom-space
//! between two objects is cut out of the slot families by homogeneous linear
//! constraints. A [`PresentedCategory`] packages the slot/constraint rules; a
//! [`FunctorData`] maps objects and acts on morphisms by sandwich forms
//! F(f)_t = Σ L·f_s·R, which keeps the action linear and lets fiber products
//! stack the commuting-square condition into one joint solve.

use crate::equivariant::{validate_equivariant, EquivariantLocalSystem, EquivariantQuiver};
use crate::group::GroupPresentation;
use crate::groupoid::GroupoidRep;
use crate::kernel::ActionKernel;
use crate::matrix::ExactMatrix;
use crate::quiver::{LocalSystemQuiver, Quiver};
use crate::sheaf::OpenLocalSystem;
use crate::solve::{solve_homogeneous, Constraint, SolutionSpace};
use rand::Rng;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CategoryError {
    #[error("object does not belong to category {0:?}: {1}")]
    WrongCategory(String, String),
    #[error("categories do not match: {0}")]
    CategoryMismatch(String),
    #[error("invalid object: {0}")]
    InvalidObject(String),
    #[error("solver error: {0}")]
    Solve(String),
    #[error("morphism lift verification failed: {0}")]
    LiftVerificationFailed(String),
    #[error("functor is not an equivalence on the tested instances: {0}")]
    NotAnEquivalence(String),
}

/// An object of one of the presented categories.
#[derive(Debug, Clone, PartialEq)]
pub enum CatObject {
    Quiver(Quiver),
    LocalSystem(LocalSystemQuiver),
    EquivariantQuiver(EquivariantQuiver),
    EquivariantLocalSystem(EquivariantLocalSystem),
    GroupoidRep(GroupoidRep),
    OpenLocalSystem(OpenLocalSystem),
    /// A fiber-product object (a, b, r) with r: α(a) → β(b).
    Pair {
        a: Box<CatObject>,
        b: Box<CatObject>,
        iso: Vec<ExactMatrix>,
    },
}

impl CatObject {
    pub fn as_quiver(&self) -> Option<&Quiver> {
        match self {
            CatObject::Quiver(q) => Some(q),
            _ => None,
        }
    }

    pub fn as_equivariant(&self) -> Option<&EquivariantQuiver> {
        match self {
            CatObject::EquivariantQuiver(e) => Some(e),
            _ => None,
        }
    }
}

/// A morphism: one matrix per slot.
pub type MorphismFamily = Vec<ExactMatrix>;

/// Slot/constraint rules of a presented category.
pub trait CategoryOps: Send + Sync {
    fn name(&self) -> &str;
    fn validate(&self, x: &CatObject) -> Result<(), CategoryError>;
    /// Shapes (rows from y, cols from x) of the morphism slots x → y.
    fn slots(&self, x: &CatObject, y: &CatObject) -> Result<Vec<(usize, usize)>, CategoryError>;
    /// Constraints cutting Hom(x, y) out of the slot families.
    fn constraints(&self, x: &CatObject, y: &CatObject) -> Result<Vec<Constraint>, CategoryError>;
}

#[derive(Clone)]
pub struct PresentedCategory {
    ops: Arc<dyn CategoryOps>,
}

impl fmt::Debug for PresentedCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PresentedCategory({})", self.ops.name())
    }
}

impl PresentedCategory {
    pub fn new(ops: Arc<dyn CategoryOps>) -> Self {
        PresentedCategory { ops }
    }

    pub fn name(&self) -> &str {
        self.ops.name()
    }

    pub fn validate(&self, x: &CatObject) -> Result<(), CategoryError> {
        self.ops.validate(x)
    }

    pub fn slots(&self, x: &CatObject, y: &CatObject) -> Result<Vec<(usize, usize)>, CategoryError> {
        self.ops.slots(x, y)
    }

    /// Raw constraint access, used by composite categories.
    pub(crate) fn ops_constraints(
        &self,
        x: &CatObject,
        y: &CatObject,
    ) -> Result<Vec<Constraint>, CategoryError> {
        self.ops.constraints(x, y)
    }

    pub fn hom_space(&self, x: &CatObject, y: &CatObject) -> Result<SolutionSpace, CategoryError> {
        let shapes = self.ops.slots(x, y)?;
        let constraints = self.ops.constraints(x, y)?;
        solve_homogeneous(&shapes, &constraints).map_err(|e| CategoryError::Solve(e.to_string()))
    }

    pub fn identity(&self, x: &CatObject) -> Result<MorphismFamily, CategoryError> {
        let shapes = self.ops.slots(x, x)?;
        Ok(shapes
            .iter()
            .map(|&(r, c)| {
                debug_assert_eq!(r, c);
                ExactMatrix::identity(r)
            })
            .collect())
    }

    /// Slotwise composition f ∘ g.
    pub fn compose(&self, f: &MorphismFamily, g: &MorphismFamily) -> MorphismFamily {
        f.iter().zip(g).map(|(a, b)| a * b).collect()
    }

    /// Checks a family against the Hom constraints (shapes and equations).
    pub fn is_morphism(
        &self,
        x: &CatObject,
        y: &CatObject,
        fam: &MorphismFamily,
    ) -> Result<bool, CategoryError> {
        let shapes = self.ops.slots(x, y)?;
        if fam.len() != shapes.len()
            || fam.iter().zip(&shapes).any(|(m, &s)| m.shape() != s)
        {
            return Ok(false);
        }
        for c in self.ops.constraints(x, y)? {
            if !constraint_satisfied(&c, fam) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn is_isomorphism(&self, fam: &MorphismFamily) -> bool {
        fam.iter().all(ExactMatrix::is_invertible)
    }

    /// Searches Hom(x, y) for an isomorphism: basis elements first, then
    /// seeded random combinations. Exhausting the search without a hit is
    /// reported as `None`; for the instance sizes used in this crate the
    /// random stage makes misses vanishingly unlikely when an iso exists.
    pub fn find_isomorphism(
        &self,
        x: &CatObject,
        y: &CatObject,
        rng: &mut impl Rng,
    ) -> Result<Option<MorphismFamily>, CategoryError> {
        let shapes = self.ops.slots(x, y)?;
        if shapes.iter().any(|&(r, c)| r != c) {
            return Ok(None);
        }
        let hom = self.hom_space(x, y)?;
        if hom.dim() == 0 {
            // only the zero morphism; it is an iso precisely for empty objects
            let zero: MorphismFamily = shapes
                .iter()
                .map(|&(r, c)| ExactMatrix::zeros(r, c))
                .collect();
            return Ok(self.is_isomorphism(&zero).then_some(zero));
        }
        for fam in &hom.basis {
            if self.is_isomorphism(fam) {
                return Ok(Some(fam.clone()));
            }
        }
        for _ in 0..200 {
            let coeffs: Vec<crate::scalar::Scalar> = (0..hom.dim())
                .map(|_| crate::scalar::Scalar::from_int(rng.gen_range(-9..=9)))
                .collect();
            let fam = hom.combination(&coeffs);
            if self.is_isomorphism(&fam) {
                return Ok(Some(fam));
            }
        }
        Ok(None)
    }
}

pub(crate) fn constraint_satisfied(c: &Constraint, fam: &MorphismFamily) -> bool {
    let mut acc: Option<ExactMatrix> = None;
    for t in &c.terms {
        let v = &(&t.left * &fam[t.block]) * &t.right;
        acc = Some(match acc {
            None => v,
            Some(a) => &a + &v,
        });
    }
    acc.map_or(true, |m| m.is_zero())
}

/// Sandwich form of a functor's action on one target slot:
/// contributions (source slot, L, R) summing to F(f)_t = Σ L·f_s·R.
pub type SandwichRow = Vec<(usize, ExactMatrix, ExactMatrix)>;

type ObjectMapFn = dyn Fn(&CatObject) -> Result<CatObject, CategoryError> + Send + Sync;
type MorphismMapFn =
    dyn Fn(&CatObject, &CatObject) -> Result<Vec<SandwichRow>, CategoryError> + Send + Sync;

/// A functor presented by an object map and linear morphism data.
#[derive(Clone)]
pub struct FunctorData {
    pub name: String,
    pub source: PresentedCategory,
    pub target: PresentedCategory,
    object_map: Arc<ObjectMapFn>,
    morphism_map: Arc<MorphismMapFn>,
}

impl fmt::Debug for FunctorData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "FunctorData({}: {} -> {})",
            self.name,
            self.source.name(),
            self.target.name()
        )
    }
}

impl FunctorData {
    pub fn new(
        name: impl Into<String>,
        source: PresentedCategory,
        target: PresentedCategory,
        object_map: Arc<ObjectMapFn>,
        morphism_map: Arc<MorphismMapFn>,
    ) -> Self {
        FunctorData {
            name: name.into(),
            source,
            target,
            object_map,
            morphism_map,
        }
    }

    pub fn identity(cat: &PresentedCategory) -> Self {
        let slots_cat = cat.clone();
        FunctorData {
            name: "id".into(),
            source: cat.clone(),
            target: cat.clone(),
            object_map: Arc::new(|x| Ok(x.clone())),
            morphism_map: Arc::new(move |x, y| {
                let shapes = slots_cat.slots(x, y)?;
                Ok(shapes
                    .iter()
                    .enumerate()
                    .map(|(s, &(r, c))| {
                        vec![(s, ExactMatrix::identity(r), ExactMatrix::identity(c))]
                    })
                    .collect())
            }),
        }
    }

    pub fn apply(&self, x: &CatObject) -> Result<CatObject, CategoryError> {
        (self.object_map)(x)
    }

    /// Sandwich rows describing the action on Hom(x, y).
    pub fn morphism_rows(
        &self,
        x: &CatObject,
        y: &CatObject,
    ) -> Result<Vec<SandwichRow>, CategoryError> {
        (self.morphism_map)(x, y)
    }

    /// Applies the functor to a concrete morphism family.
    pub fn apply_morphism(
        &self,
        x: &CatObject,
        y: &CatObject,
        fam: &MorphismFamily,
    ) -> Result<MorphismFamily, CategoryError> {
        let rows = self.morphism_rows(x, y)?;
        let fx = self.apply(x)?;
        let fy = self.apply(y)?;
        let shapes = self.target.slots(&fx, &fy)?;
        let mut out: MorphismFamily = shapes
            .iter()
            .map(|&(r, c)| ExactMatrix::zeros(r, c))
            .collect();
        for (t, row) in rows.iter().enumerate() {
            for (s, l, r) in row {
                out[t] = &out[t] + &(&(l * &fam[*s]) * r);
            }
        }
        Ok(out)
    }

    /// Spot-checks functoriality on given objects: identities map to
    /// identities and composition is preserved for basis morphisms.
    pub fn check_functoriality(&self, samples: &[CatObject]) -> Result<(), CategoryError> {
        for x in samples {
            let id = self.source.identity(x)?;
            let fid = self.apply_morphism(x, x, &id)?;
            let fx = self.apply(x)?;
            if fid != self.target.identity(&fx)? {
                return Err(CategoryError::InvalidObject(format!(
                    "functor {} does not preserve the identity",
                    self.name
                )));
            }
        }
        for x in samples {
            for y in samples {
                for z in samples {
                    let hxy = self.source.hom_space(x, y)?;
                    let hyz = self.source.hom_space(y, z)?;
                    for f in hyz.basis.iter().take(2) {
                        for g in hxy.basis.iter().take(2) {
                            let comp = self.source.compose(f, g);
                            let lhs = self.apply_morphism(x, z, &comp)?;
                            let rhs = self.target.compose(
                                &self.apply_morphism(y, z, f)?,
                                &self.apply_morphism(x, y, g)?,
                            );
                            if lhs != rhs {
                                return Err(CategoryError::InvalidObject(format!(
                                    "functor {} does not preserve composition",
                                    self.name
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Standard instances: 𝒬, ℒ, 𝒬_Φ, ℒ_Ψ
// ---------------------------------------------------------------------------

struct QuiverOps;

impl CategoryOps for QuiverOps {
    fn name(&self) -> &str {
        "Q"
    }

    fn validate(&self, x: &CatObject) -> Result<(), CategoryError> {
        match x {
            CatObject::Quiver(q) => crate::quiver::validate_quiver(q)
                .map_err(|e| CategoryError::InvalidObject(e.to_string())),
            _ => Err(CategoryError::WrongCategory(
                "Q".into(),
                "expected a quiver".into(),
            )),
        }
    }

    fn slots(&self, x: &CatObject, y: &CatObject) -> Result<Vec<(usize, usize)>, CategoryError> {
        let (qx, qy) = (expect_quiver(x)?, expect_quiver(y)?);
        if qx.n() != qy.n() {
            return Err(CategoryError::CategoryMismatch(
                "point counts differ".into(),
            ));
        }
        Ok((0..qx.n()).map(|i| (qy.dims()[i], qx.dims()[i])).collect())
    }

    fn constraints(&self, x: &CatObject, y: &CatObject) -> Result<Vec<Constraint>, CategoryError> {
        let (qx, qy) = (expect_quiver(x)?, expect_quiver(y)?);
        let mut cs = Vec::new();
        for j in 0..qx.n() {
            for i in 0..qx.n() {
                cs.push(Constraint::intertwine(
                    i,
                    j,
                    qx.map(j, i),
                    qy.map(j, i),
                    qy.dims()[j],
                    qx.dims()[i],
                ));
            }
        }
        Ok(cs)
    }
}

fn expect_quiver(x: &CatObject) -> Result<&Quiver, CategoryError> {
    x.as_quiver()
        .ok_or_else(|| CategoryError::WrongCategory("Q".into(), "expected a quiver".into()))
}

pub fn quiver_category() -> PresentedCategory {
    PresentedCategory::new(Arc::new(QuiverOps))
}

struct LocalSystemOps;

impl CategoryOps for LocalSystemOps {
    fn name(&self) -> &str {
        "L"
    }

    fn validate(&self, x: &CatObject) -> Result<(), CategoryError> {
        match x {
            CatObject::LocalSystem(_) => Ok(()),
            _ => Err(CategoryError::WrongCategory(
                "L".into(),
                "expected a local-system quiver".into(),
            )),
        }
    }

    fn slots(&self, x: &CatObject, y: &CatObject) -> Result<Vec<(usize, usize)>, CategoryError> {
        let (lx, ly) = (expect_ls(x)?, expect_ls(y)?);
        if lx.n() != ly.n() {
            return Err(CategoryError::CategoryMismatch(
                "point counts differ".into(),
            ));
        }
        Ok((0..lx.n()).map(|i| (ly.dims()[i], lx.dims()[i])).collect())
    }

    fn constraints(&self, x: &CatObject, y: &CatObject) -> Result<Vec<Constraint>, CategoryError> {
        let (lx, ly) = (expect_ls(x)?, expect_ls(y)?);
        Ok((0..lx.n())
            .map(|i| {
                Constraint::intertwine(
                    i,
                    i,
                    lx.monodromy(i),
                    ly.monodromy(i),
                    ly.dims()[i],
                    lx.dims()[i],
                )
            })
            .collect())
    }
}

fn expect_ls(x: &CatObject) -> Result<&LocalSystemQuiver, CategoryError> {
    match x {
        CatObject::LocalSystem(l) => Ok(l),
        _ => Err(CategoryError::WrongCategory(
            "L".into(),
            "expected a local-system quiver".into(),
        )),
    }
}

pub fn local_system_category() -> PresentedCategory {
    PresentedCategory::new(Arc::new(LocalSystemOps))
}

struct EquivariantQuiverOps {
    presentation: GroupPresentation,
    kernel: ActionKernel,
}

impl CategoryOps for EquivariantQuiverOps {
    fn name(&self) -> &str {
        "Q_Phi"
    }

    fn validate(&self, x: &CatObject) -> Result<(), CategoryError> {
        match x {
            CatObject::EquivariantQuiver(e) => {
                if e.presentation != self.presentation {
                    return Err(CategoryError::CategoryMismatch(
                        "presentation differs".into(),
                    ));
                }
                validate_equivariant(e, &self.kernel)
                    .map_err(|err| CategoryError::InvalidObject(err.to_string()))
            }
            _ => Err(CategoryError::WrongCategory(
                "Q_Phi".into(),
                "expected an equivariant quiver".into(),
            )),
        }
    }

    fn slots(&self, x: &CatObject, y: &CatObject) -> Result<Vec<(usize, usize)>, CategoryError> {
        let (ex, ey) = (expect_eq(x)?, expect_eq(y)?);
        Ok((0..ex.quiver.n())
            .map(|i| (ey.quiver.dims()[i], ex.quiver.dims()[i]))
            .collect())
    }

    fn constraints(&self, x: &CatObject, y: &CatObject) -> Result<Vec<Constraint>, CategoryError> {
        let (ex, ey) = (expect_eq(x)?, expect_eq(y)?);
        if ex.presentation != ey.presentation {
            return Err(CategoryError::CategoryMismatch("presentation differs".into()));
        }
        let n = ex.quiver.n();
        let mut cs = Vec::new();
        for j in 0..n {
            for i in 0..n {
                cs.push(Constraint::intertwine(
                    i,
                    j,
                    ex.quiver.map(j, i),
                    ey.quiver.map(j, i),
                    ey.quiver.dims()[j],
                    ex.quiver.dims()[i],
                ));
            }
        }
        for g in 0..ex.presentation.generators.len() {
            let perm = &ex.presentation.point_action[g];
            for i in 0..n {
                cs.push(Constraint::intertwine(
                    i,
                    perm[i],
                    &ex.structure[g][i],
                    &ey.structure[g][i],
                    ey.quiver.dims()[perm[i]],
                    ex.quiver.dims()[i],
                ));
            }
        }
        Ok(cs)
    }
}

fn expect_eq(x: &CatObject) -> Result<&EquivariantQuiver, CategoryError> {
    x.as_equivariant().ok_or_else(|| {
        CategoryError::WrongCategory("Q_Phi".into(), "expected an equivariant quiver".into())
    })
}

pub fn equivariant_quiver_category(
    presentation: GroupPresentation,
    kernel: ActionKernel,
) -> PresentedCategory {
    PresentedCategory::new(Arc::new(EquivariantQuiverOps {
        presentation,
        kernel,
    }))
}

struct EquivariantLsOps {
    presentation: GroupPresentation,
}

impl CategoryOps for EquivariantLsOps {
    fn name(&self) -> &str {
        "L_Psi"
    }

    fn validate(&self, x: &CatObject) -> Result<(), CategoryError> {
        match x {
            CatObject::EquivariantLocalSystem(e) => {
                if e.presentation != self.presentation {
                    return Err(CategoryError::CategoryMismatch(
                        "presentation differs".into(),
                    ));
                }
                e.validate()
                    .map_err(|err| CategoryError::InvalidObject(err.to_string()))
            }
            _ => Err(CategoryError::WrongCategory(
                "L_Psi".into(),
                "expected an equivariant local system".into(),
            )),
        }
    }

    fn slots(&self, x: &CatObject, y: &CatObject) -> Result<Vec<(usize, usize)>, CategoryError> {
        let (ex, ey) = (expect_els(x)?, expect_els(y)?);
        Ok((0..ex.ls.n())
            .map(|i| (ey.ls.dims()[i], ex.ls.dims()[i]))
            .collect())
    }

    fn constraints(&self, x: &CatObject, y: &CatObject) -> Result<Vec<Constraint>, CategoryError> {
        let (ex, ey) = (expect_els(x)?, expect_els(y)?);
        if ex.presentation != ey.presentation {
            return Err(CategoryError::CategoryMismatch("presentation differs".into()));
        }
        let n = ex.ls.n();
        let mut cs = Vec::new();
        for i in 0..n {
            cs.push(Constraint::intertwine(
                i,
                i,
                ex.ls.monodromy(i),
                ey.ls.monodromy(i),
                ey.ls.dims()[i],
                ex.ls.dims()[i],
            ));
        }
        for g in 0..ex.presentation.generators.len() {
            let perm = &ex.presentation.point_action[g];
            for i in 0..n {
                cs.push(Constraint::intertwine(
                    i,
                    perm[i],
                    &ex.structure[g][i],
                    &ey.structure[g][i],
                    ey.ls.dims()[perm[i]],
                    ex.ls.dims()[i],
                ));
            }
        }
        Ok(cs)
    }
}

fn expect_els(x: &CatObject) -> Result<&EquivariantLocalSystem, CategoryError> {
    match x {
        CatObject::EquivariantLocalSystem(e) => Ok(e),
        _ => Err(CategoryError::WrongCategory(
            "L_Psi".into(),
            "expected an equivariant local system".into(),
        )),
    }
}

pub fn equivariant_ls_category(presentation: GroupPresentation) -> PresentedCategory {
    PresentedCategory::new(Arc::new(EquivariantLsOps { presentation }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q1(m11: i64) -> CatObject {
        CatObject::Quiver(
            Quiver::new(vec![1], vec![vec![ExactMatrix::from_int_rows(&[&[m11]])]]).unwrap(),
        )
    }

    #[test]
    fn quiver_category_matches_hom_basis() {
        let cat = quiver_category();
        let x = q1(0);
        let y = q1(1);
        assert_eq!(cat.hom_space(&x, &x).unwrap().dim(), 1);
        assert_eq!(cat.hom_space(&y, &x).unwrap().dim(), 0);
        let id = cat.identity(&x).unwrap();
        assert!(cat.is_morphism(&x, &x, &id).unwrap());
    }

    #[test]
    fn identity_functor_behaves() {
        let cat = quiver_category();
        let f = FunctorData::identity(&cat);
        let x = q1(0);
        assert_eq!(f.apply(&x).unwrap(), x);
        f.check_functoriality(&[x.clone(), q1(2)]).unwrap();
    }

    #[test]
    fn iso_search_finds_conjugation() {
        use rand::SeedableRng;
        let cat = quiver_category();
        let a = ExactMatrix::from_int_rows(&[&[1, 1], &[0, 1]]);
        let p = ExactMatrix::from_int_rows(&[&[2, 1], &[1, 1]]);
        let b = &(&p * &a) * &p.invert().unwrap();
        let qa = CatObject::Quiver(Quiver::new(vec![2], vec![vec![a]]).unwrap());
        let qb = CatObject::Quiver(Quiver::new(vec![2], vec![vec![b]]).unwrap());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let iso = cat.find_isomorphism(&qa, &qb, &mut rng).unwrap().unwrap();
        assert!(cat.is_isomorphism(&iso));
        assert!(cat.is_morphism(&qa, &qb, &iso).unwrap());
    }
}
