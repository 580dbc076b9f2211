//! Prestacks and stacks on finite sites: coherence checks, descent data,
//! gluing, stalks, stalkwise weak-isomorphism detection, the locality
//! extension step, and inverse images along open maps.
//!
//! A prestack assigns a presented category to each open, restriction
//! functors to inclusions, and coherence isomorphisms τ to chains. Sites are
//! finite with Alexandrov semantics, so the stalk at a point is simply the
//! category at its minimal open, and the filtered colimit of the general
//! theory collapses. Equivalence checking is instance-based (Freyd criteria
//! over finite sample lists).

use crate::category::{CatObject, CategoryError, FunctorData, MorphismFamily, PresentedCategory};
use crate::fiber::freyd_check;
use crate::matrix::ExactMatrix;
use crate::sheaf::OpenLocalSystem;
use crate::site::PosetSite;
use crate::solve::{solve_homogeneous, Constraint, SolutionSpace, Term};
use rand::Rng;
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StackError {
    #[error("cocycle violation on cover members ({0}, {1}, {2})")]
    CocycleViolation(usize, usize, usize),
    #[error("inverse violation on cover members ({0}, {1})")]
    InverseViolation(usize, usize),
    #[error("descent datum invalid: {0}")]
    DescentInvalid(String),
    #[error("this prestack has no gluing routine")]
    GluingUnsupported,
    #[error("morphism of prestacks is incoherent: {0}")]
    IncoherentMorphism(String),
    #[error("coherence violation while extending: {0}")]
    CoherenceViolation(String),
    #[error("not an open map: {0}")]
    NotOpenMap(String),
    #[error("not implemented: {0}")]
    NotImplemented(String),
    #[error(transparent)]
    Category(#[from] CategoryError),
    #[error("site error: {0}")]
    Site(String),
    #[error("{0}")]
    Other(String),
}

type CategoriesFn = dyn Fn(usize) -> PresentedCategory + Send + Sync;
type RestrictionsFn = dyn Fn(usize, usize) -> FunctorData + Send + Sync;
type TauFn =
    dyn Fn(usize, usize, usize, &CatObject) -> Result<MorphismFamily, CategoryError> + Send + Sync;
type GluerFn = dyn Fn(&DescentDatum) -> Result<(CatObject, Vec<MorphismFamily>), StackError>
    + Send
    + Sync;

/// Prestack data over a finite site.
#[derive(Clone)]
pub struct PrestackData {
    pub site: Arc<PosetSite>,
    categories: Arc<CategoriesFn>,
    restrictions: Arc<RestrictionsFn>,
    tau: Arc<TauFn>,
    gluer: Option<Arc<GluerFn>>,
}

impl PrestackData {
    pub fn new(
        site: Arc<PosetSite>,
        categories: Arc<CategoriesFn>,
        restrictions: Arc<RestrictionsFn>,
        tau: Arc<TauFn>,
        gluer: Option<Arc<GluerFn>>,
    ) -> Self {
        PrestackData {
            site,
            categories,
            restrictions,
            tau,
            gluer,
        }
    }

    pub fn category(&self, open: usize) -> PresentedCategory {
        (self.categories)(open)
    }

    /// ρ_{VU}: F(U) → F(V) for V ≤ U.
    pub fn restriction(&self, v: usize, u: usize) -> FunctorData {
        debug_assert!(self.site.leq(v, u));
        (self.restrictions)(v, u)
    }

    /// τ_{WVU}(A): ρ_WV(ρ_VU(A)) → ρ_WU(A) in F(W).
    pub fn tau(
        &self,
        w: usize,
        v: usize,
        u: usize,
        a: &CatObject,
    ) -> Result<MorphismFamily, CategoryError> {
        (self.tau)(w, v, u, a)
    }

    pub fn restrict_object(&self, v: usize, u: usize, a: &CatObject) -> Result<CatObject, StackError> {
        Ok(self.restriction(v, u).apply(a)?)
    }

    pub fn can_glue(&self) -> bool {
        self.gluer.is_some()
    }
}

pub fn invert_family(fam: &MorphismFamily) -> MorphismFamily {
    fam.iter()
        .map(|m| m.invert().expect("family must be invertible"))
        .collect()
}

pub fn compose_family(f: &MorphismFamily, g: &MorphismFamily) -> MorphismFamily {
    f.iter().zip(g).map(|(a, b)| a * b).collect()
}

// ---------------------------------------------------------------------------
// Prestack coherence (Definition 1)
// ---------------------------------------------------------------------------

/// Report of prestack-axiom checks; an empty violation list means all hold.
#[derive(Debug, Clone, Default)]
pub struct PrestackReport {
    pub violations: Vec<String>,
}

impl PrestackReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Verifies I.a (ρ_UU = Id), I.b (τ with repeated opens is the identity),
/// and I.c (the coherence square for 4-chains) on the supplied objects.
pub fn check_prestack(
    p: &PrestackData,
    samples: &BTreeMap<usize, Vec<CatObject>>,
) -> Result<PrestackReport, StackError> {
    let mut report = PrestackReport::default();
    let n_opens = p.site.opens.len();
    for (&u, objs) in samples {
        let cat = p.category(u);
        for (k, a) in objs.iter().enumerate() {
            cat.validate(a)?;
            // I.a
            let rho_uu = p.restriction(u, u);
            if rho_uu.apply(a)? != *a {
                report.violations.push(format!(
                    "I.a: ρ_UU is not the identity on sample {k} of open {:?}",
                    p.site.opens[u].name
                ));
            }
            // I.b over every V ≤ U
            for v in 0..n_opens {
                if !p.site.leq(v, u) {
                    continue;
                }
                let restricted = p.restrict_object(v, u, a)?;
                let id = p.category(v).identity(&restricted)?;
                if p.tau(v, v, u, a)? != id || p.tau(v, u, u, a)? != id {
                    report.violations.push(format!(
                        "I.b: τ with repeated opens differs from the identity at ({:?} ⊆ {:?})",
                        p.site.opens[v].name, p.site.opens[u].name
                    ));
                }
            }
            // I.c on all 4-chains S ≤ W ≤ V ≤ U
            for v in 0..n_opens {
                if !p.site.leq(v, u) {
                    continue;
                }
                for w in 0..n_opens {
                    if !p.site.leq(w, v) {
                        continue;
                    }
                    for s in 0..n_opens {
                        if !p.site.leq(s, w) {
                            continue;
                        }
                        let a_v = p.restrict_object(v, u, a)?;
                        let a_wv = p.restrict_object(w, v, &a_v)?;
                        let rho_sw = p.restriction(s, w);
                        let a_w_direct = p.restrict_object(w, u, a)?;
                        // LHS: τ_SWU(A) ∘ ρ_SW(τ_WVU(A))
                        let lhs = compose_family(
                            &p.tau(s, w, u, a)?,
                            &rho_sw.apply_morphism(&a_wv, &a_w_direct, &p.tau(w, v, u, a)?)?,
                        );
                        // RHS: τ_SVU(A) ∘ τ_SWV(ρ_VU A)
                        let rhs =
                            compose_family(&p.tau(s, v, u, a)?, &p.tau(s, w, v, &a_v)?);
                        if lhs != rhs {
                            report.violations.push(format!(
                                "I.c: coherence fails on chain {:?} ⊆ {:?} ⊆ {:?} ⊆ {:?} (sample {k})",
                                p.site.opens[s].name,
                                p.site.opens[w].name,
                                p.site.opens[v].name,
                                p.site.opens[u].name
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Condition (II): the Hom presheaf is a sheaf
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct HomSheafReport {
    pub dim_global: usize,
    pub dim_equalizer: usize,
    pub restriction_injective: bool,
}

impl HomSheafReport {
    pub fn ok(&self) -> bool {
        self.dim_global == self.dim_equalizer && self.restriction_injective
    }
}

/// Restriction of a morphism along V ≤ U, normalized through τ so that it
/// runs between the direct restrictions A|V → B|V.
fn restrict_morphism_normalized(
    p: &PrestackData,
    v: usize,
    u: usize,
    a: &CatObject,
    b: &CatObject,
    fam: &MorphismFamily,
) -> Result<MorphismFamily, StackError> {
    let rho = p.restriction(v, u);
    Ok(rho.apply_morphism(a, b, fam)?)
}

/// Checks that Hom(a, b) over U equals the equalizer of the cover Homs.
pub fn check_hom_sheaf(
    p: &PrestackData,
    u: usize,
    a: &CatObject,
    b: &CatObject,
    cover: &[usize],
) -> Result<HomSheafReport, StackError> {
    p.site
        .validate_cover(u, cover)
        .map_err(|e| StackError::Site(e.to_string()))?;
    let cat_u = p.category(u);
    let hom_u = cat_u.hom_space(a, b)?;

    // Hom spaces over the members and their flattened coordinates
    let mut member_data = Vec::new();
    for &m in cover {
        let am = p.restrict_object(m, u, a)?;
        let bm = p.restrict_object(m, u, b)?;
        let hom = p.category(m).hom_space(&am, &bm)?;
        member_data.push((m, am, bm, hom));
    }

    // equalizer: coordinates u_i per member, pairwise agreement on overlaps
    let shapes: Vec<(usize, usize)> = member_data
        .iter()
        .map(|(_, _, _, h)| (h.dim(), 1))
        .collect();
    let mut constraints: Vec<Constraint> = Vec::new();
    for i in 0..member_data.len() {
        for j in i + 1..member_data.len() {
            let (mi, ref ai, ref bi, ref hi) = member_data[i];
            let (mj, ref aj, ref bj, ref hj) = member_data[j];
            let meet = p
                .site
                .intersection(mi, mj)
                .map_err(|e| StackError::Site(e.to_string()))?;
            // normalize both sides into Hom(a|meet→via i, b|meet→via i) coordinates:
            // columns of the linear maps coords_i ↦ flattened restricted morphism
            let cols_for = |member: usize,
                            am: &CatObject,
                            bm: &CatObject,
                            hom: &SolutionSpace,
                            tau_a: &MorphismFamily,
                            tau_b: &MorphismFamily|
             -> Result<Vec<ExactMatrix>, StackError> {
                let mut cols = Vec::new();
                for basis in &hom.basis {
                    let restricted =
                        restrict_morphism_normalized(p, meet, member, am, bm, basis)?;
                    // conjugate to the direct restriction: τ_b ∘ f ∘ τ_a⁻¹
                    let normalized = compose_family(
                        tau_b,
                        &compose_family(&restricted, &invert_family(tau_a)),
                    );
                    let flat: Vec<crate::scalar::Scalar> = normalized
                        .iter()
                        .flat_map(|m| {
                            (0..m.rows())
                                .flat_map(move |r| (0..m.cols()).map(move |c| m.get(r, c).clone()))
                                .collect::<Vec<_>>()
                        })
                        .collect();
                    cols.push(ExactMatrix::column(flat));
                }
                Ok(cols)
            };
            let tau_ai = p.tau(meet, mi, u, a)?;
            let tau_bi = p.tau(meet, mi, u, b)?;
            let tau_aj = p.tau(meet, mj, u, a)?;
            let tau_bj = p.tau(meet, mj, u, b)?;
            let cols_i = cols_for(mi, ai, bi, hi, &tau_ai, &tau_bi)?;
            let cols_j = cols_for(mj, aj, bj, hj, &tau_aj, &tau_bj)?;
            let flat_len = cols_i
                .first()
                .map(|c| c.rows())
                .or_else(|| cols_j.first().map(|c| c.rows()))
                .unwrap_or(0);
            let mut terms = Vec::new();
            if !cols_i.is_empty() {
                let mi_mat = stack_columns(&cols_i);
                terms.push(Term::new(i, mi_mat, ExactMatrix::identity(1)));
            }
            if !cols_j.is_empty() {
                let mj_mat = stack_columns(&cols_j);
                terms.push(Term::new(j, -&mj_mat, ExactMatrix::identity(1)));
            }
            if flat_len > 0 && !terms.is_empty() {
                constraints.push(Constraint::new(terms));
            }
        }
    }
    let equalizer = solve_homogeneous(&shapes, &constraints)
        .map_err(|e| StackError::Other(e.to_string()))?;

    // injectivity of the restriction map Hom(U) → ⊕ Hom(U_i)
    let mut images: Vec<ExactMatrix> = Vec::new();
    for basis in &hom_u.basis {
        let mut flat: Vec<crate::scalar::Scalar> = Vec::new();
        for (m, am, bm, hom_m) in &member_data {
            let restricted = restrict_morphism_normalized(p, *m, u, a, b, basis)?;
            let coords = hom_m.coordinates_of(&restricted).ok_or_else(|| {
                StackError::Other(
                    "restriction of a global morphism is not a local morphism".into(),
                )
            })?;
            flat.extend(coords);
            let _ = (am, bm);
        }
        images.push(ExactMatrix::column(flat));
    }
    let restriction_injective = if images.is_empty() {
        true
    } else {
        stack_columns(&images).rank() == images.len()
    };

    Ok(HomSheafReport {
        dim_global: hom_u.dim(),
        dim_equalizer: equalizer.dim(),
        restriction_injective,
    })
}

fn stack_columns(cols: &[ExactMatrix]) -> ExactMatrix {
    let mut m = cols[0].clone();
    for c in &cols[1..] {
        m = m.hstack(c).unwrap();
    }
    m
}

// ---------------------------------------------------------------------------
// Descent data and gluing (Definition 3, condition III)
// ---------------------------------------------------------------------------

/// A descent datum over a declared cover.
#[derive(Clone)]
pub struct DescentDatum {
    pub prestack: PrestackData,
    pub open: usize,
    pub cover: Vec<usize>,
    pub objects: Vec<CatObject>,
    /// sigmas[(i, j)]: A_i|_{U_i∩U_j} → A_j|_{U_i∩U_j}; (i, i) defaults to id
    pub sigmas: BTreeMap<(usize, usize), MorphismFamily>,
}

impl DescentDatum {
    fn sigma(&self, i: usize, j: usize) -> Result<MorphismFamily, StackError> {
        if i == j {
            let p = &self.prestack;
            let meet = self
                .prestack
                .site
                .intersection(self.cover[i], self.cover[i])
                .map_err(|e| StackError::Site(e.to_string()))?;
            let restricted = p.restrict_object(meet, self.cover[i], &self.objects[i])?;
            return Ok(p.category(meet).identity(&restricted)?);
        }
        self.sigmas
            .get(&(i, j))
            .cloned()
            .ok_or_else(|| StackError::DescentInvalid(format!("missing σ_({i},{j})")))
    }

    /// σ_ij normalized to run A_i|T → A_j|T on a smaller open T through τ.
    fn sigma_on(
        &self,
        t: usize,
        i: usize,
        j: usize,
    ) -> Result<MorphismFamily, StackError> {
        let p = &self.prestack;
        let meet = p
            .site
            .intersection(self.cover[i], self.cover[j])
            .map_err(|e| StackError::Site(e.to_string()))?;
        let sigma = self.sigma(i, j)?;
        let ai_meet = p.restrict_object(meet, self.cover[i], &self.objects[i])?;
        let aj_meet = p.restrict_object(meet, self.cover[j], &self.objects[j])?;
        let restricted = p
            .restriction(t, meet)
            .apply_morphism(&ai_meet, &aj_meet, &sigma)?;
        // conjugate through τ to compare restrictions taken along different chains:
        // τ_{T, meet, U_i}(A_i): (A_i|meet)|T → A_i|T and likewise for j
        let tau_i = p.tau(t, meet, self.cover[i], &self.objects[i])?;
        let tau_j = p.tau(t, meet, self.cover[j], &self.objects[j])?;
        Ok(compose_family(
            &tau_j,
            &compose_family(&restricted, &invert_family(&tau_i)),
        ))
    }
}

/// Verifies (a) σ_ii = id, (b) σ_ji = σ_ij⁻¹, (c) the triple cocycle, all
/// exactly and with restriction transport through τ.
pub fn check_descent(d: &DescentDatum) -> Result<(), StackError> {
    let p = &d.prestack;
    p.site
        .validate_cover(d.open, &d.cover)
        .map_err(|e| StackError::Site(e.to_string()))?;
    let k = d.cover.len();
    // (a): explicit diagonal entries must be identities
    for i in 0..k {
        if let Some(fam) = d.sigmas.get(&(i, i)) {
            let meet = p
                .site
                .intersection(d.cover[i], d.cover[i])
                .map_err(|e| StackError::Site(e.to_string()))?;
            let restricted = p.restrict_object(meet, d.cover[i], &d.objects[i])?;
            if *fam != p.category(meet).identity(&restricted)? {
                return Err(StackError::DescentInvalid(format!("σ_({i},{i}) ≠ id")));
            }
        }
    }
    // (b)
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let sij = d.sigma(i, j)?;
            let sji = d.sigma(j, i)?;
            if compose_family(&sji, &sij)
                .iter()
                .any(|m| !m.is_identity())
            {
                return Err(StackError::InverseViolation(i, j));
            }
        }
    }
    // (c): going around i → j → k → i over the triple overlap is the identity
    for i in 0..k {
        for j in 0..k {
            for l in 0..k {
                if i == j || j == l || i == l {
                    continue;
                }
                let meet_ij = p
                    .site
                    .intersection(d.cover[i], d.cover[j])
                    .map_err(|e| StackError::Site(e.to_string()))?;
                let t = p
                    .site
                    .intersection(meet_ij, d.cover[l])
                    .map_err(|e| StackError::Site(e.to_string()))?;
                if p.site.opens[t].points.is_empty() {
                    continue;
                }
                let s_ij = d.sigma_on(t, i, j)?;
                let s_jl = d.sigma_on(t, j, l)?;
                let s_li = d.sigma_on(t, l, i)?;
                let around = compose_family(&s_li, &compose_family(&s_jl, &s_ij));
                if around.iter().any(|m| !m.is_identity()) {
                    return Err(StackError::CocycleViolation(i, j, l));
                }
            }
        }
    }
    Ok(())
}

/// Glues a descent datum: returns the glued object A and the isomorphisms
/// σ_i: A|U_i → A_i, then verifies the compatibility diagrams exactly.
pub fn glue(d: &DescentDatum) -> Result<(CatObject, Vec<MorphismFamily>), StackError> {
    check_descent(d).map_err(|e| match e {
        StackError::CocycleViolation(..) | StackError::InverseViolation(..) => {
            StackError::DescentInvalid(e.to_string())
        }
        other => other,
    })?;
    let gluer = d
        .prestack
        .gluer
        .as_ref()
        .ok_or(StackError::GluingUnsupported)?;
    let (glued, sigmas) = gluer(d)?;
    verify_gluing(d, &glued, &sigmas)?;
    Ok((glued, sigmas))
}

/// Checks that (A, σ_i) satisfies the condition-(III) compatibility diagram.
pub fn verify_gluing(
    d: &DescentDatum,
    glued: &CatObject,
    sigmas: &[MorphismFamily],
) -> Result<(), StackError> {
    let p = &d.prestack;
    p.category(d.open).validate(glued)?;
    for (i, fam) in sigmas.iter().enumerate() {
        let restricted = p.restrict_object(d.cover[i], d.open, glued)?;
        let cat = p.category(d.cover[i]);
        if !cat.is_morphism(&restricted, &d.objects[i], fam)? || !cat.is_isomorphism(fam) {
            return Err(StackError::DescentInvalid(format!(
                "σ_{i} is not an isomorphism A|U_i → A_i"
            )));
        }
    }
    for i in 0..d.cover.len() {
        for j in 0..d.cover.len() {
            if i == j {
                continue;
            }
            let meet = p
                .site
                .intersection(d.cover[i], d.cover[j])
                .map_err(|e| StackError::Site(e.to_string()))?;
            // ŝ_i: A|meet → A_i|meet through τ
            let s_hat = |idx: usize| -> Result<MorphismFamily, StackError> {
                let member = d.cover[idx];
                let a_mem = p.restrict_object(member, d.open, glued)?;
                let restricted = p.restriction(meet, member).apply_morphism(
                    &a_mem,
                    &d.objects[idx],
                    &sigmas[idx],
                )?;
                let tau_glued = p.tau(meet, member, d.open, glued)?;
                Ok(compose_family(&restricted, &invert_family(&tau_glued)))
            };
            let si = s_hat(i)?;
            let sj = s_hat(j)?;
            let sij = d.sigma_on(meet, i, j)?;
            if compose_family(&sij, &si) != sj {
                return Err(StackError::DescentInvalid(format!(
                    "compatibility diagram fails between members {i} and {j}"
                )));
            }
        }
    }
    Ok(())
}

/// Dimension of the space of pairs (h: A → A′, c scalar) with
/// σ′_i ∘ h|U_i = c·σ_i for all i — exactly 1 for glued objects of the same
/// datum, which is the uniqueness-up-to-unique-isomorphism statement.
pub fn compatible_iso_space(
    d: &DescentDatum,
    a: &CatObject,
    sig_a: &[MorphismFamily],
    b: &CatObject,
    sig_b: &[MorphismFamily],
) -> Result<SolutionSpace, StackError> {
    let p = &d.prestack;
    let cat_u = p.category(d.open);
    let mut shapes = cat_u.slots(a, b)?;
    let h_blocks = shapes.len();
    shapes.push((1, 1)); // the scalar c
    let mut constraints = cat_u.ops_constraints(a, b)?;
    for (i, &member) in d.cover.iter().enumerate() {
        let rho = p.restriction(member, d.open);
        let rows = rho.morphism_rows(a, b)?;
        let a_mem = rho.apply(a)?;
        let b_mem = rho.apply(b)?;
        let slots_mem = p.category(member).slots(&a_mem, &b_mem)?;
        // constraint per member slot t: (σ′_i ∘ h|U_i)_t − c·(σ_i)_t = 0
        for (t, _shape) in slots_mem.iter().enumerate() {
            let mut terms = Vec::new();
            for (s, l, r) in &rows[t] {
                terms.push(Term::new(*s, &sig_b[i][t] * l, r.clone()));
            }
            // decompose σ_i's slot into rank-one pieces against the scalar c
            let target = &sig_a[i][t];
            for col in 0..target.cols() {
                let mut col_m = ExactMatrix::zeros(target.rows(), 1);
                for r in 0..target.rows() {
                    col_m.set(r, 0, -target.get(r, col));
                }
                let mut row_m = ExactMatrix::zeros(1, target.cols());
                row_m.set(0, col, crate::scalar::Scalar::one());
                terms.push(Term::new(h_blocks, col_m, row_m));
            }
            constraints.push(Constraint::new(terms));
        }
    }
    solve_homogeneous(&shapes, &constraints).map_err(|e| StackError::Other(e.to_string()))
}

// ---------------------------------------------------------------------------
// Stalks
// ---------------------------------------------------------------------------

/// The stalk at a point: on an Alexandrov site this is the category at the
/// point's minimal open (the filtered colimit collapses).
pub fn stalk(p: &PrestackData, point: usize) -> (usize, PresentedCategory) {
    let u = p.site.minimal_open[point];
    (u, p.category(u))
}

// ---------------------------------------------------------------------------
// Morphisms of prestacks, weak isomorphisms (Definition 2, Theorems 8–9)
// ---------------------------------------------------------------------------

type ThetaFn = dyn Fn(usize) -> FunctorData + Send + Sync;
type ComparisonFn =
    dyn Fn(usize, usize, &CatObject) -> Result<MorphismFamily, CategoryError> + Send + Sync;

/// A morphism of prestacks: per-open functors Θ(U) and comparison
/// isomorphisms Θ(V,U)(A): Θ(V)(A|V) → Θ(U)(A)|V.
#[derive(Clone)]
pub struct StackMorphismData {
    pub source: PrestackData,
    pub target: PrestackData,
    functors: Arc<ThetaFn>,
    comparisons: Arc<ComparisonFn>,
}

impl StackMorphismData {
    pub fn new(
        source: PrestackData,
        target: PrestackData,
        functors: Arc<ThetaFn>,
        comparisons: Arc<ComparisonFn>,
    ) -> Self {
        StackMorphismData {
            source,
            target,
            functors,
            comparisons,
        }
    }

    pub fn functor(&self, open: usize) -> FunctorData {
        (self.functors)(open)
    }

    pub fn comparison(
        &self,
        v: usize,
        u: usize,
        a: &CatObject,
    ) -> Result<MorphismFamily, CategoryError> {
        (self.comparisons)(v, u, a)
    }
}

/// Verifies the Definition-2 coherence equation on all 3-chains over samples.
pub fn check_morphism_coherence(
    theta: &StackMorphismData,
    samples: &BTreeMap<usize, Vec<CatObject>>,
) -> Result<(), StackError> {
    let p = &theta.source;
    let q = &theta.target;
    let n_opens = p.site.opens.len();
    for (&u, objs) in samples {
        for a in objs {
            for v in 0..n_opens {
                if !p.site.leq(v, u) {
                    continue;
                }
                for w in 0..n_opens {
                    if !p.site.leq(w, v) {
                        continue;
                    }
                    let a_v = p.restrict_object(v, u, a)?;
                    let a_wv = p.restrict_object(w, v, &a_v)?;
                    let theta_w = theta.functor(w);
                    // LHS: τ'_{WVU}(ΘU A) ∘ ρ'_W(Θ(V,U)(A)) ∘ Θ(W,V)(A|V)
                    let theta_v_a = theta.functor(v).apply(&a_v)?;
                    let theta_u_a = theta.functor(u).apply(a)?;
                    let theta_u_a_v = q.restrict_object(v, u, &theta_u_a)?;
                    let rho_w = q.restriction(w, v);
                    let lhs = compose_family(
                        &q.tau(w, v, u, &theta_u_a)?,
                        &compose_family(
                            &rho_w.apply_morphism(
                                &theta_v_a,
                                &theta_u_a_v,
                                &theta.comparison(v, u, a)?,
                            )?,
                            &theta.comparison(w, v, &a_v)?,
                        ),
                    );
                    // RHS: Θ(W,U)(A) ∘ Θ(W)(τ_{WVU}(A))
                    let a_w_direct = p.restrict_object(w, u, a)?;
                    let rhs = compose_family(
                        &theta.comparison(w, u, a)?,
                        &theta_w.apply_morphism(&a_wv, &a_w_direct, &p.tau(w, v, u, a)?)?,
                    );
                    if lhs != rhs {
                        return Err(StackError::IncoherentMorphism(format!(
                            "coherence fails on chain {:?} ⊆ {:?} ⊆ {:?}",
                            p.site.opens[w].name, p.site.opens[v].name, p.site.opens[u].name
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Verdict of the stalkwise Freyd checks.
#[derive(Debug, Clone)]
pub struct WeakIsoReport {
    pub weak_isomorphism: bool,
    pub witnesses: Vec<String>,
}

/// Evaluates the Freyd criteria for Θ at every stalk over the samples, and
/// cross-checks one non-minimal open directly. Passing every stalk is, by
/// the stalkwise detection theorems, equivalent to per-open equivalence.
pub fn check_weak_iso(
    theta: &StackMorphismData,
    source_samples: &BTreeMap<usize, Vec<CatObject>>,
    target_samples: &BTreeMap<usize, Vec<CatObject>>,
    rng: &mut impl Rng,
) -> Result<WeakIsoReport, StackError> {
    check_morphism_coherence(theta, source_samples)?;
    let site = &theta.source.site;
    let mut witnesses = Vec::new();
    let empty: Vec<CatObject> = Vec::new();
    for x in 0..site.points.len() {
        let u = site.minimal_open[x];
        let src = source_samples.get(&u).unwrap_or(&empty);
        let tgt = target_samples.get(&u).unwrap_or(&empty);
        if src.is_empty() && tgt.is_empty() {
            continue;
        }
        if let Err(w) = freyd_check(&theta.functor(u), src, tgt, rng)? {
            witnesses.push(format!(
                "stalk at point {:?} (open {:?}): {w}",
                site.points[x], site.opens[u].name
            ));
        }
    }
    // direct cross-check on one non-minimal open with samples
    let non_minimal = source_samples
        .keys()
        .find(|&&u| !site.minimal_open.iter().any(|&m| m == u));
    if let Some(&u) = non_minimal {
        let src = source_samples.get(&u).unwrap_or(&empty);
        let tgt = target_samples.get(&u).unwrap_or(&empty);
        if let Err(w) = freyd_check(&theta.functor(u), src, tgt, rng)? {
            witnesses.push(format!(
                "direct check at open {:?}: {w}",
                site.opens[u].name
            ));
        }
    }
    Ok(WeakIsoReport {
        weak_isomorphism: witnesses.is_empty(),
        witnesses,
    })
}

// ---------------------------------------------------------------------------
// Locality: extending a morphism from two opens to their union
// ---------------------------------------------------------------------------

/// Extends Θ, given on U₁ and U₂, to an object over U = U₁ ∪ U₂: restricts
/// A to the pieces, maps them through Θ(U₁) and Θ(U₂), transports the
/// canonical comparison, and glues the resulting descent datum in the target.
pub fn extend_local_morphism(
    theta: &StackMorphismData,
    u1: usize,
    u2: usize,
    u: usize,
    a: &CatObject,
) -> Result<(CatObject, Vec<MorphismFamily>), StackError> {
    let p = &theta.source;
    let q = &theta.target;
    p.site
        .validate_cover(u, &[u1, u2])
        .map_err(|e| StackError::Site(e.to_string()))?;
    let meet = p
        .site
        .intersection(u1, u2)
        .map_err(|e| StackError::Site(e.to_string()))?;
    let a1 = p.restrict_object(u1, u, a)?;
    let a2 = p.restrict_object(u2, u, a)?;
    // canonical comparison σ = τ₂⁻¹ ∘ τ₁: (A|U₁)|∩ → (A|U₂)|∩
    let sigma = compose_family(
        &invert_family(&p.tau(meet, u2, u, a)?),
        &p.tau(meet, u1, u, a)?,
    );
    let a1p = theta.functor(u1).apply(&a1)?;
    let a2p = theta.functor(u2).apply(&a2)?;
    // σ' = Θ(∩,U₂)(A₂) ∘ Θ(∩)(σ) ∘ Θ(∩,U₁)(A₁)⁻¹
    let a1_meet = p.restrict_object(meet, u1, &a1)?;
    let a2_meet = p.restrict_object(meet, u2, &a2)?;
    let theta_sigma = theta
        .functor(meet)
        .apply_morphism(&a1_meet, &a2_meet, &sigma)?;
    let sigma_prime = compose_family(
        &theta.comparison(meet, u2, &a2)?,
        &compose_family(&theta_sigma, &invert_family(&theta.comparison(meet, u1, &a1)?)),
    );
    let datum = DescentDatum {
        prestack: q.clone(),
        open: u,
        cover: vec![u1, u2],
        objects: vec![a1p, a2p],
        sigmas: BTreeMap::from([
            ((0usize, 1usize), sigma_prime.clone()),
            ((1usize, 0usize), invert_family(&sigma_prime)),
        ]),
    };
    glue(&datum).map_err(|e| match e {
        StackError::DescentInvalid(msg) => StackError::CoherenceViolation(msg),
        other => other,
    })
}

// ---------------------------------------------------------------------------
// Inverse image along an open map of sites (appendix §10)
// ---------------------------------------------------------------------------

/// A monotone open map of sites: each source open U is sent to a target
/// open f(U), preserving order and covers.
pub struct SiteMap {
    pub source: Arc<PosetSite>,
    pub target: Arc<PosetSite>,
    /// open_image[source open index] = target open index
    pub open_image: Vec<usize>,
}

impl SiteMap {
    pub fn validate(&self) -> Result<(), StackError> {
        if self.open_image.len() != self.source.opens.len() {
            return Err(StackError::NotOpenMap(
                "image must be defined on every open".into(),
            ));
        }
        for u in 0..self.source.opens.len() {
            for v in 0..self.source.opens.len() {
                if self.source.leq(u, v) && !self.target.leq(self.open_image[u], self.open_image[v])
                {
                    return Err(StackError::NotOpenMap(format!(
                        "order is not preserved on ({:?} ≤ {:?})",
                        self.source.opens[u].name, self.source.opens[v].name
                    )));
                }
            }
        }
        for (&u, families) in &self.source.covers {
            for family in families {
                let image: Vec<usize> = family.iter().map(|&m| self.open_image[m]).collect();
                self.target
                    .validate_cover(self.open_image[u], &image)
                    .map_err(|e| {
                        StackError::NotOpenMap(format!(
                            "cover of {:?} is not preserved: {e}",
                            self.source.opens[u].name
                        ))
                    })?;
            }
        }
        Ok(())
    }
}

/// (f*F)(U) = F(f(U)), with restriction and coherence data transported.
pub fn inverse_image(f: &SiteMap, prestack: &PrestackData) -> Result<PrestackData, StackError> {
    f.validate()?;
    if *prestack.site != *f.target {
        return Err(StackError::NotOpenMap(
            "prestack does not live on the target site".into(),
        ));
    }
    let image = f.open_image.clone();
    let image_r = image.clone();
    let image_t = image.clone();
    let cats = prestack.categories.clone();
    let rests = prestack.restrictions.clone();
    let taus = prestack.tau.clone();
    Ok(PrestackData {
        site: f.source.clone(),
        categories: Arc::new(move |u| cats(image[u])),
        restrictions: Arc::new(move |v, u| rests(image_r[v], image_r[u])),
        tau: Arc::new(move |w, v, u, a| taus(image_t[w], image_t[v], image_t[u], a)),
        gluer: None,
    })
}

/// Stackification interface: the theory guarantees the associated stack
/// exists, but gives no algorithm, so this workbench does not construct it.
pub fn stackify(_prestack: &PrestackData) -> Result<PrestackData, StackError> {
    Err(StackError::NotImplemented(
        "stackification: existence is known without an algorithm".into(),
    ))
}

// ---------------------------------------------------------------------------
// The concrete prestack of local systems on a finite site
// ---------------------------------------------------------------------------

struct OpenLsOps {
    site: Arc<PosetSite>,
    open: usize,
}

impl crate::category::CategoryOps for OpenLsOps {
    fn name(&self) -> &str {
        &self.site.opens[self.open].name
    }

    fn validate(&self, x: &CatObject) -> Result<(), CategoryError> {
        match x {
            CatObject::OpenLocalSystem(l) => {
                if *l.site != *self.site || l.open != self.open {
                    return Err(CategoryError::CategoryMismatch(
                        "object lives on a different open".into(),
                    ));
                }
                l.validate()
                    .map_err(|e| CategoryError::InvalidObject(e.to_string()))
            }
            _ => Err(CategoryError::WrongCategory(
                self.name().into(),
                "expected a local system on an open".into(),
            )),
        }
    }

    fn slots(&self, x: &CatObject, y: &CatObject) -> Result<Vec<(usize, usize)>, CategoryError> {
        let (lx, ly) = (expect_open_ls(x)?, expect_open_ls(y)?);
        Ok(lx
            .slot_points()
            .iter()
            .map(|p| (ly.dims[p], lx.dims[p]))
            .collect())
    }

    fn constraints(&self, x: &CatObject, y: &CatObject) -> Result<Vec<Constraint>, CategoryError> {
        let (lx, ly) = (expect_open_ls(x)?, expect_open_ls(y)?);
        let points = lx.slot_points();
        let index_of: BTreeMap<usize, usize> =
            points.iter().enumerate().map(|(k, &p)| (p, k)).collect();
        let mut cs = Vec::new();
        for ((yy, xx), m) in &lx.maps {
            let m2 = ly.maps.get(&(*yy, *xx)).ok_or_else(|| {
                CategoryError::CategoryMismatch("objects have different edges".into())
            })?;
            cs.push(Constraint::intertwine(
                index_of[yy],
                index_of[xx],
                m,
                m2,
                ly.dims[xx],
                lx.dims[yy],
            ));
        }
        Ok(cs)
    }
}

fn expect_open_ls(x: &CatObject) -> Result<&OpenLocalSystem, CategoryError> {
    match x {
        CatObject::OpenLocalSystem(l) => Ok(l),
        _ => Err(CategoryError::WrongCategory(
            "local systems".into(),
            "expected a local system on an open".into(),
        )),
    }
}

/// The category of local systems on one open of a site.
pub fn open_ls_category(site: Arc<PosetSite>, open: usize) -> PresentedCategory {
    PresentedCategory::new(Arc::new(OpenLsOps { site, open }))
}

/// Restriction functor between local-system categories of two opens.
pub fn open_ls_restriction(site: Arc<PosetSite>, v: usize, u: usize) -> FunctorData {
    let src = open_ls_category(site.clone(), u);
    let dst = open_ls_category(site.clone(), v);
    let site_obj = site.clone();
    let site_mor = site;
    FunctorData::new(
        "restrict",
        src,
        dst,
        Arc::new(move |x| {
            let l = expect_open_ls(x)?;
            let _ = &site_obj;
            l.restrict(v)
                .map(CatObject::OpenLocalSystem)
                .map_err(|e| CategoryError::InvalidObject(e.to_string()))
        }),
        Arc::new(move |x, y| {
            let (lx, ly) = (expect_open_ls(x)?, expect_open_ls(y)?);
            let src_points = lx.slot_points();
            let src_index: BTreeMap<usize, usize> = src_points
                .iter()
                .enumerate()
                .map(|(k, &p)| (p, k))
                .collect();
            let rows: Vec<_> = site_mor.opens[v]
                .points
                .iter()
                .map(|p| {
                    vec![(
                        src_index[p],
                        ExactMatrix::identity(ly.dims[p]),
                        ExactMatrix::identity(lx.dims[p]),
                    )]
                })
                .collect();
            Ok(rows)
        }),
    )
}

/// Gluing routine for local systems: pick, for each point, the first cover
/// member containing it, take its space there, and transport the structure
/// maps through the overlap isomorphisms.
fn glue_local_systems(
    d: &DescentDatum,
) -> Result<(CatObject, Vec<MorphismFamily>), StackError> {
    let p = &d.prestack;
    let site = &p.site;
    let locals: Vec<&OpenLocalSystem> = d
        .objects
        .iter()
        .map(|o| expect_open_ls(o).map_err(StackError::Category))
        .collect::<Result<Vec<_>, _>>()?;
    let member_of = |point: usize| -> usize {
        d.cover
            .iter()
            .position(|&m| site.opens[m].points.contains(&point))
            .expect("cover validated")
    };
    // σ_{i→j} at a point: the component of the normalized overlap iso
    let sigma_at = |i: usize, j: usize, point: usize| -> Result<ExactMatrix, StackError> {
        if i == j {
            return Ok(ExactMatrix::identity(locals[i].dims[&point]));
        }
        let meet = site
            .intersection(d.cover[i], d.cover[j])
            .map_err(|e| StackError::Site(e.to_string()))?;
        let sigma = d.sigma(i, j)?;
        let meet_points: Vec<usize> = site.opens[meet].points.iter().copied().collect();
        let slot = meet_points
            .iter()
            .position(|&q| q == point)
            .ok_or_else(|| StackError::Other("point missing from overlap".into()))?;
        Ok(sigma[slot].clone())
    };

    let u_points: Vec<usize> = site.opens[d.open].points.iter().copied().collect();
    let mut dims = BTreeMap::new();
    for &pt in &u_points {
        dims.insert(pt, locals[member_of(pt)].dims[&pt]);
    }
    let mut maps = BTreeMap::new();
    for (y, x) in site.hasse_edges(d.open) {
        let iy = member_of(y);
        let ix = member_of(x);
        // x ≤ y puts x inside every open containing y, in particular U_{i(y)}
        let inside = locals[iy].transport(y, x).map_err(|e| StackError::Other(e.to_string()))?;
        let cross = sigma_at(iy, ix, x)?;
        maps.insert((y, x), &cross * &inside);
    }
    let glued = OpenLocalSystem {
        site: locals[0].site.clone(),
        open: d.open,
        dims,
        maps,
    };
    glued
        .validate()
        .map_err(|e| StackError::DescentInvalid(format!("glued object invalid: {e}")))?;
    // σ_i: A|U_i → A_i, at each point the transport from the chosen member
    let mut sigmas = Vec::new();
    for (i, &member) in d.cover.iter().enumerate() {
        let mut fam = Vec::new();
        for &pt in site.opens[member].points.iter() {
            fam.push(sigma_at(member_of(pt), i, pt)?);
        }
        sigmas.push(fam);
    }
    Ok((CatObject::OpenLocalSystem(glued), sigmas))
}

/// The prestack of local systems on a finite site (a stack, in fact: its
/// gluing routine realizes condition III constructively).
pub fn local_system_prestack(site: Arc<PosetSite>) -> PrestackData {
    let s1 = site.clone();
    let s2 = site.clone();
    let s3 = site.clone();
    PrestackData {
        site,
        categories: Arc::new(move |u| open_ls_category(s1.clone(), u)),
        restrictions: Arc::new(move |v, u| open_ls_restriction(s2.clone(), v, u)),
        tau: Arc::new(move |w, _v, u, a| {
            // restriction is strictly functorial here, so τ is the identity
            let l = expect_open_ls(a)?;
            let _ = u;
            let restricted = l
                .restrict(w)
                .map_err(|e| CategoryError::InvalidObject(e.to_string()))?;
            let _ = &s3;
            Ok(restricted
                .slot_points()
                .iter()
                .map(|p| ExactMatrix::identity(restricted.dims[p]))
                .collect())
        }),
        gluer: Some(Arc::new(glue_local_systems)),
    }
}

/// A τ-twisted variant used to demonstrate prestack-axiom violations: τ on
/// one designated chain is scaled by −1.
pub fn local_system_prestack_with_bad_tau(
    site: Arc<PosetSite>,
    bad_chain: (usize, usize, usize),
) -> PrestackData {
    let base = local_system_prestack(site.clone());
    let tau = base.tau.clone();
    PrestackData {
        site,
        categories: base.categories.clone(),
        restrictions: base.restrictions.clone(),
        tau: Arc::new(move |w, v, u, a| {
            let fam = tau(w, v, u, a)?;
            if (w, v, u) == bad_chain {
                Ok(fam.iter().map(|m| -m).collect())
            } else {
                Ok(fam)
            }
        }),
        gluer: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn circle_site() -> Arc<PosetSite> {
        Arc::new(PosetSite::pseudo_circle())
    }

    fn circle_system(site: &Arc<PosetSite>, monodromy: i64) -> OpenLocalSystem {
        let x = site.open_index("X").unwrap();
        let mut obj = OpenLocalSystem::constant(site.clone(), x, 1);
        let d = site.point_index("d").unwrap();
        let b = site.point_index("b").unwrap();
        obj.maps
            .insert((d, b), ExactMatrix::from_int_rows(&[&[monodromy]]));
        obj
    }

    fn rank1_descent(site: &Arc<PosetSite>, s12: i64) -> DescentDatum {
        let p = local_system_prestack(site.clone());
        let x = site.open_index("X").unwrap();
        let uc = site.open_index("Uc").unwrap();
        let ud = site.open_index("Ud").unwrap();
        let a1 = OpenLocalSystem::constant(site.clone(), uc, 1);
        let a2 = OpenLocalSystem::constant(site.clone(), ud, 1);
        // σ_12 on Uab = {a, b}: scalar on each of the two points
        let sigma12 = vec![
            ExactMatrix::from_int_rows(&[&[1]]),
            ExactMatrix::from_int_rows(&[&[s12]]),
        ];
        let sigma21 = invert_family(&sigma12);
        DescentDatum {
            prestack: p,
            open: x,
            cover: vec![uc, ud],
            objects: vec![
                CatObject::OpenLocalSystem(a1),
                CatObject::OpenLocalSystem(a2),
            ],
            sigmas: BTreeMap::from([((0, 1), sigma12), ((1, 0), sigma21)]),
        }
    }

    #[test]
    fn prestack_axioms_hold_for_local_systems() {
        let site = circle_site();
        let p = local_system_prestack(site.clone());
        let x = site.open_index("X").unwrap();
        let samples = BTreeMap::from([(
            x,
            vec![CatObject::OpenLocalSystem(circle_system(&site, 3))],
        )]);
        let report = check_prestack(&p, &samples).unwrap();
        assert!(report.ok(), "violations: {:?}", report.violations);
    }

    #[test]
    fn bad_tau_reported() {
        let site = circle_site();
        let x = site.open_index("X").unwrap();
        let uc = site.open_index("Uc").unwrap();
        let uab = site.open_index("Uab").unwrap();
        let p = local_system_prestack_with_bad_tau(site.clone(), (uab, uc, x));
        let samples = BTreeMap::from([(
            x,
            vec![CatObject::OpenLocalSystem(circle_system(&site, 3))],
        )]);
        let report = check_prestack(&p, &samples).unwrap();
        assert!(!report.ok());
        assert!(report.violations.iter().any(|v| v.contains("I.b") || v.contains("I.c")));
    }

    #[test]
    fn hom_sheaf_condition_holds() {
        let site = circle_site();
        let p = local_system_prestack(site.clone());
        let x = site.open_index("X").unwrap();
        let uc = site.open_index("Uc").unwrap();
        let ud = site.open_index("Ud").unwrap();
        let a = CatObject::OpenLocalSystem(circle_system(&site, 1));
        let b = CatObject::OpenLocalSystem(circle_system(&site, 1));
        let report = check_hom_sheaf(&p, x, &a, &b, &[uc, ud]).unwrap();
        assert!(report.ok(), "{report:?}");
        // trivial cover
        let report = check_hom_sheaf(&p, x, &a, &b, &[x]).unwrap();
        assert!(report.ok());
    }

    #[test]
    fn descent_cocycle_examples() {
        let site = circle_site();
        // two-member cover: cocycle is vacuous, any invertible σ passes
        let d = rank1_descent(&site, 7);
        check_descent(&d).unwrap();

        // inverse violation
        let mut bad = rank1_descent(&site, 2);
        bad.sigmas.insert(
            (1, 0),
            vec![
                ExactMatrix::from_int_rows(&[&[1]]),
                ExactMatrix::from_int_rows(&[&[1]]),
            ],
        );
        assert!(matches!(
            check_descent(&bad),
            Err(StackError::InverseViolation(_, _))
        ));
    }

    #[test]
    fn glue_recovers_monodromy() {
        let site = circle_site();
        // gluing the constant pieces with σ = (1, s) produces monodromy s
        let d = rank1_descent(&site, 5);
        let (glued, sigmas) = glue(&d).unwrap();
        let l = expect_open_ls(&glued).unwrap();
        // total monodromy around the circle: product of the four edges
        let a = site.point_index("a").unwrap();
        let b = site.point_index("b").unwrap();
        let c = site.point_index("c").unwrap();
        let dd = site.point_index("d").unwrap();
        let m = &(&l.maps[&(c, a)].invert().unwrap() * &l.maps[&(dd, a)])
            * &(&l.maps[&(dd, b)].invert().unwrap() * &l.maps[&(c, b)]);
        let det = m.get(0, 0).clone();
        assert!(
            det == Scalar::from_int(5) || det == Scalar::from_fraction(1, 5),
            "holonomy should be 5 up to orientation, got {det}"
        );
        assert_eq!(sigmas.len(), 2);
    }

    #[test]
    fn reglue_gives_unique_compatible_iso() {
        let site = circle_site();
        let p = local_system_prestack(site.clone());
        let x = site.open_index("X").unwrap();
        let uc = site.open_index("Uc").unwrap();
        let ud = site.open_index("Ud").unwrap();
        let original = circle_system(&site, 3);
        // restrict and reglue with the canonical comparisons
        let a1 = original.restrict(uc).unwrap();
        let a2 = original.restrict(ud).unwrap();
        let uab = site.open_index("Uab").unwrap();
        let overlap_pts: Vec<usize> = site.opens[uab].points.iter().copied().collect();
        let id_sigma: MorphismFamily = overlap_pts
            .iter()
            .map(|p| ExactMatrix::identity(original.dims[p]))
            .collect();
        let d = DescentDatum {
            prestack: p.clone(),
            open: x,
            cover: vec![uc, ud],
            objects: vec![
                CatObject::OpenLocalSystem(a1),
                CatObject::OpenLocalSystem(a2),
            ],
            sigmas: BTreeMap::from([((0, 1), id_sigma.clone()), ((1, 0), id_sigma)]),
        };
        let (reglued, new_sigmas) = glue(&d).unwrap();
        // canonical sigmas for the original object: identities
        let orig_sigmas: Vec<MorphismFamily> = [uc, ud]
            .iter()
            .map(|&m| {
                site.opens[m]
                    .points
                    .iter()
                    .map(|p| ExactMatrix::identity(original.dims[p]))
                    .collect()
            })
            .collect();
        let orig_obj = CatObject::OpenLocalSystem(original);
        let space = compatible_iso_space(&d, &orig_obj, &orig_sigmas, &reglued, &new_sigmas)
            .unwrap();
        assert_eq!(space.dim(), 1);
        // the basis element has a nonzero scalar and invertible components
        let fam = &space.basis[0];
        assert!(!fam.last().unwrap().is_zero());
    }

    #[test]
    fn rank1_triple_cover_cocycle_example() {
        // three opens with a shared point; invertible scalars 2, 3, 1/6
        // multiply to 1 around the triple overlap, so descent holds; closing
        // with 1 instead breaks the cocycle
        let site = Arc::new(crate::suite::star_site());
        let p = local_system_prestack(site.clone());
        let x = site.open_index("X").unwrap();
        let cover: Vec<usize> = ["U1", "U2", "U3"]
            .iter()
            .map(|n| site.open_index(n).unwrap())
            .collect();
        let objects: Vec<CatObject> = cover
            .iter()
            .map(|&u| CatObject::OpenLocalSystem(OpenLocalSystem::constant(site.clone(), u, 1)))
            .collect();
        let scalar_sigma = |v: (i64, i64)| vec![ExactMatrix::from_rows(vec![vec![
            crate::scalar::Scalar::from_fraction(v.0, v.1),
        ]]).unwrap()];
        let mut sigmas = BTreeMap::new();
        sigmas.insert((0, 1), scalar_sigma((2, 1)));
        sigmas.insert((1, 0), scalar_sigma((1, 2)));
        sigmas.insert((1, 2), scalar_sigma((3, 1)));
        sigmas.insert((2, 1), scalar_sigma((1, 3)));
        sigmas.insert((2, 0), scalar_sigma((1, 6)));
        sigmas.insert((0, 2), scalar_sigma((6, 1)));
        let good = DescentDatum {
            prestack: p.clone(),
            open: x,
            cover: cover.clone(),
            objects: objects.clone(),
            sigmas: sigmas.clone(),
        };
        check_descent(&good).unwrap();
        let (_glued, sigs) = glue(&good).unwrap();
        assert_eq!(sigs.len(), 3);

        let mut bad_sigmas = sigmas;
        bad_sigmas.insert((2, 0), scalar_sigma((1, 1)));
        bad_sigmas.insert((0, 2), scalar_sigma((1, 1)));
        let bad = DescentDatum {
            prestack: p,
            open: x,
            cover,
            objects,
            sigmas: bad_sigmas,
        };
        assert!(matches!(
            check_descent(&bad),
            Err(StackError::CocycleViolation(_, _, _))
        ));
    }

    #[test]
    fn stalk_is_minimal_open_category() {
        let site = circle_site();
        let p = local_system_prestack(site.clone());
        let c = site.point_index("c").unwrap();
        let (u, _cat) = stalk(&p, c);
        assert_eq!(site.opens[u].name, "Uc");
    }

    #[test]
    fn identity_morphism_is_weak_iso() {
        let site = circle_site();
        let p = local_system_prestack(site.clone());
        let theta = StackMorphismData::new(
            p.clone(),
            p.clone(),
            Arc::new({
                let p = p.clone();
                move |u| FunctorData::identity(&p.category(u))
            }),
            Arc::new({
                let p = p.clone();
                move |v, u, a| {
                    let restricted = p.restriction(v, u).apply(a)?;
                    p.category(v).identity(&restricted)
                }
            }),
        );
        let x = site.open_index("X").unwrap();
        let uc = site.open_index("Uc").unwrap();
        let mk = |open: &str, rank: usize| {
            CatObject::OpenLocalSystem(OpenLocalSystem::constant(
                site.clone(),
                site.open_index(open).unwrap(),
                rank,
            ))
        };
        let mut samples = BTreeMap::new();
        for open in ["Ua", "Ub", "Uc", "Ud", "X"] {
            samples.insert(
                site.open_index(open).unwrap(),
                vec![mk(open, 1), mk(open, 2)],
            );
        }
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let report = check_weak_iso(&theta, &samples, &samples, &mut rng).unwrap();
        assert!(report.weak_isomorphism, "{:?}", report.witnesses);
        let _ = (x, uc);
    }

    #[test]
    fn extension_matches_direct_definition() {
        let site = circle_site();
        let p = local_system_prestack(site.clone());
        let theta = StackMorphismData::new(
            p.clone(),
            p.clone(),
            Arc::new({
                let p = p.clone();
                move |u| FunctorData::identity(&p.category(u))
            }),
            Arc::new({
                let p = p.clone();
                move |v, u, a| {
                    let restricted = p.restriction(v, u).apply(a)?;
                    p.category(v).identity(&restricted)
                }
            }),
        );
        let x = site.open_index("X").unwrap();
        let uc = site.open_index("Uc").unwrap();
        let ud = site.open_index("Ud").unwrap();
        let a = CatObject::OpenLocalSystem(circle_system(&site, 4));
        let (extended, _) = extend_local_morphism(&theta, uc, ud, x, &a).unwrap();
        // the identity morphism extends to (an object isomorphic to) A itself
        let cat = p.category(x);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        assert!(cat
            .find_isomorphism(&extended, &a, &mut rng)
            .unwrap()
            .is_some());
    }

    #[test]
    fn inverse_image_transports_prestack() {
        let site = circle_site();
        let p = local_system_prestack(site.clone());
        // f = identity map of sites
        let f = SiteMap {
            source: site.clone(),
            target: site.clone(),
            open_image: (0..site.opens.len()).collect(),
        };
        let pulled = inverse_image(&f, &p).unwrap();
        let x = site.open_index("X").unwrap();
        let samples = BTreeMap::from([(
            x,
            vec![CatObject::OpenLocalSystem(circle_system(&site, 2))],
        )]);
        let report = check_prestack(&pulled, &samples).unwrap();
        assert!(report.ok());
        // a non-monotone map is rejected
        let ua = site.open_index("Ua").unwrap();
        let mut bad_image: Vec<usize> = (0..site.opens.len()).collect();
        bad_image[x] = ua; // X ≤ X would need f(X) ≤ f(X): fine; break Uc ≤ X instead
        let uc = site.open_index("Uc").unwrap();
        bad_image[uc] = x;
        bad_image[x] = ua;
        let bad = SiteMap {
            source: site.clone(),
            target: site.clone(),
            open_image: bad_image,
        };
        assert!(matches!(
            inverse_image(&bad, &p),
            Err(StackError::NotOpenMap(_))
        ));
    }

    #[test]
    fn stackify_is_explicitly_unsupported() {
        let site = circle_site();
        let p = local_system_prestack(site);
        assert!(matches!(
            stackify(&p),
            Err(StackError::NotImplemented(_))
        ));
    }
}
