//! The batch property-test driver behind the acceptance criteria.
//!
//! Each suite draws its instances from a seeded RNG, so identical
//! (seed, config) pairs reproduce identical reports byte for byte. Failures
//! carry a replayable JSON witness of the failing instance. Timing is
//! excluded from reports unless explicitly requested, to keep the default
//! output deterministic.

use crate::category::CatObject;
use crate::equivariant::hom_equivariant;
use crate::fiber::{delta, delta_on_morphism, full_faithfulness_check, lift_morphism};
use crate::gen;
use crate::groupoid::{ArrowGen, GroupoidPresentation, GroupoidRep};
use crate::matrix::ExactMatrix;
use crate::melded::{from_equivariant_family, has_no_variation, hom_melded, validate_melded, Lambda1Model, MeldedError};
use crate::quiver::{compose, hom_basis, vanishing_cycles, vanishing_cycles_map, QuiverMorphism};
use crate::scalar::Scalar;
use crate::sheaf::OpenLocalSystem;
use crate::signature::congruence_signature;
use crate::site::PosetSite;
use crate::solve::SolutionSpace;
use crate::stack::{
    check_descent, check_weak_iso, compatible_iso_space, glue, local_system_prestack,
    DescentDatum, PrestackData, StackError, StackMorphismData,
};
use crate::symplectic::{maslov_holonomy, negative_frame, triple_form, TripleLoop};
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SuiteError {
    #[error("unknown suite {0:?}")]
    UnknownSuite(String),
}

/// Configuration of a suite run.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    /// 0 means "use the suite's own default case count".
    pub cases: usize,
    pub max_n: usize,
    pub max_dim: usize,
    /// Include wall-clock timing in the report (breaks byte determinism).
    pub include_timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            cases: 0,
            max_n: 4,
            max_dim: 3,
            include_timing: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseOutcome {
    pub index: usize,
    pub digest: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub suite: String,
    pub seed: u64,
    pub cases_run: usize,
    pub passed: usize,
    pub failed: usize,
    /// Digest per case, in case order.
    pub case_digests: Vec<String>,
    /// Failed cases with witnesses.
    pub failures: Vec<CaseOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u128>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

fn digest_of(value: &serde_json::Value) -> String {
    let text = serde_json::to_string(value).unwrap_or_default();
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let out = hasher.finalize();
    out.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

struct SuiteRun {
    name: String,
    outcomes: Vec<CaseOutcome>,
}

impl SuiteRun {
    fn new(name: &str) -> Self {
        SuiteRun {
            name: name.into(),
            outcomes: Vec::new(),
        }
    }

    fn record(
        &mut self,
        input: serde_json::Value,
        pass: bool,
        detail: Option<String>,
    ) {
        let digest = digest_of(&input);
        self.outcomes.push(CaseOutcome {
            index: self.outcomes.len(),
            digest,
            pass,
            detail: if pass { None } else { detail },
            witness: if pass { None } else { Some(input) },
        });
    }

    fn finish(self, config: &RunConfig, elapsed: Option<u128>) -> Report {
        let passed = self.outcomes.iter().filter(|o| o.pass).count();
        let failed = self.outcomes.len() - passed;
        Report {
            suite: self.name,
            seed: config.seed,
            cases_run: self.outcomes.len(),
            passed,
            failed,
            case_digests: self.outcomes.iter().map(|o| o.digest.clone()).collect(),
            failures: self.outcomes.into_iter().filter(|o| !o.pass).collect(),
            timing_ms: elapsed,
        }
    }
}

pub fn suite_names() -> &'static [&'static str] {
    &[
        "triple-rank",
        "triple-signature",
        "maslov",
        "delta-ff",
        "vc-functor",
        "descent-glue",
        "weak-iso",
        "melded",
        "no-variation",
    ]
}

fn suite_seed(config: &RunConfig, offset: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(config.seed.wrapping_mul(0x9e3779b97f4a7c15) ^ offset)
}

/// Runs a registered suite.
pub fn run_suite(config: &RunConfig, name: &str) -> Result<Report, SuiteError> {
    let start = std::time::Instant::now();
    let mut report = match name {
        "triple-rank" => triple_rank_suite(config),
        "triple-signature" => triple_signature_suite(config),
        "maslov" => maslov_suite(config),
        "delta-ff" => delta_ff_suite(config),
        "vc-functor" => vc_functor_suite(config),
        "descent-glue" => descent_glue_suite(config),
        "weak-iso" => weak_iso_suite(config),
        "melded" => melded_suite(config),
        "no-variation" => no_variation_suite(config),
        other => return Err(SuiteError::UnknownSuite(other.into())),
    };
    if config.include_timing {
        report.timing_ms = Some(start.elapsed().as_millis());
    }
    Ok(report)
}

pub fn run_all(config: &RunConfig) -> Vec<Report> {
    suite_names()
        .iter()
        .map(|name| run_suite(config, name).expect("registered suite"))
        .collect()
}

fn cases_or(config: &RunConfig, default: usize) -> usize {
    if config.cases == 0 {
        default
    } else {
        config.cases
    }
}

// ---------------------------------------------------------------------------
// 1. Triple-form rank identity
// ---------------------------------------------------------------------------

fn triple_rank_suite(config: &RunConfig) -> Report {
    let mut rng = suite_seed(config, 0x01);
    let mut run = SuiteRun::new("triple-rank");
    let cases = cases_or(config, 200);
    for k in 0..cases {
        let n = (k % config.max_n.min(4)) + 1;
        let t = gen::random_triple(&mut rng, n);
        let r = triple_form(&t);
        let (n12, n23, n13) = t.intersection_profile();
        let expected = 3 * n - n12 - n23 - n13;
        let pass = r.complex_rank == expected;
        run.record(
            serde_json::to_value(&t).unwrap_or_default(),
            pass,
            Some(format!(
                "complex rank {} ≠ 3n − n12 − n23 − n13 = {}",
                r.complex_rank, expected
            )),
        );
    }
    run.finish(config, None)
}

// ---------------------------------------------------------------------------
// 2. Signature structure
// ---------------------------------------------------------------------------

fn triple_signature_suite(config: &RunConfig) -> Report {
    let mut rng = suite_seed(config, 0x02);
    let mut run = SuiteRun::new("triple-signature");
    let cases = cases_or(config, 200);
    for k in 0..cases {
        let n = (k % config.max_n.min(4)) + 1;
        let t = gen::random_triple(&mut rng, n);
        let r = triple_form(&t);
        let (n12, n23, n13) = t.intersection_profile();
        let m = r.complex_rank;
        let sig_ok = r.real_signature.positive == m
            && r.real_signature.negative == m
            && r.real_signature.null == 2 * (n12 + n23 + n13);
        // re-verify the negative frame by an independent congruence reduction
        let nf = negative_frame(&r);
        let restricted = &(&nf.transpose() * &r.re_gram) * &nf;
        let frame_ok = match congruence_signature(&restricted) {
            Ok(s) => nf.cols() == m && s.negative == m && s.positive == 0 && s.null == 0,
            Err(_) => false,
        };
        let pass = sig_ok && frame_ok;
        run.record(
            serde_json::to_value(&t).unwrap_or_default(),
            pass,
            Some(format!(
                "signature ({}, {}, {}) or negative frame failed for m = {}",
                r.real_signature.positive, r.real_signature.negative, r.real_signature.null, m
            )),
        );
    }
    run.finish(config, None)
}

// ---------------------------------------------------------------------------
// 3. Maslov ℤ/2 structure
// ---------------------------------------------------------------------------

fn maslov_suite(config: &RunConfig) -> Report {
    let mut rng = suite_seed(config, 0x03);
    let mut run = SuiteRun::new("maslov");
    let cases = cases_or(config, 20);
    let mut produced = 0;
    let mut attempts = 0;
    while produced < cases && attempts < cases * 50 {
        attempts += 1;
        let n = rng.gen_range(1..=config.max_n.min(4));
        let family = gen::random_loop_family(&mut rng, n);
        let Some(samples) = family.sample(4) else {
            continue;
        };
        let Some(refined) = family.sample(8) else {
            continue;
        };
        let Ok(lp) = TripleLoop::new(samples.clone()) else {
            continue;
        };
        let Ok(lp_fine) = TripleLoop::new(refined) else {
            continue;
        };
        let (h, h_fine) = match (maslov_holonomy(&lp), maslov_holonomy(&lp_fine)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue, // degenerate projection: refine by moving on
        };
        // constant loop at the base sample
        let constant = TripleLoop::new(vec![samples[0].clone(), samples[0].clone()]).unwrap();
        let h_const = maslov_holonomy(&constant).unwrap_or(0);
        // doubled loop: traverse twice
        let mut doubled = samples.clone();
        doubled.extend(samples.iter().skip(1).cloned());
        let h_doubled = TripleLoop::new(doubled)
            .ok()
            .and_then(|l| maslov_holonomy(&l).ok())
            .unwrap_or(0);
        let pass = h_const == 1 && h == h_fine && h_doubled == h * h && h_doubled == 1;
        let witness = serde_json::json!({
            "n": n,
            "holonomy": h,
            "refined": h_fine,
            "constant": h_const,
            "doubled": h_doubled,
            "first_sample": serde_json::to_value(&samples[0]).unwrap_or_default(),
        });
        run.record(
            witness,
            pass,
            Some("holonomy failed ℤ/2 structure or refinement invariance".into()),
        );
        produced += 1;
    }
    run.finish(config, None)
}

// ---------------------------------------------------------------------------
// 4. δ full faithfulness
// ---------------------------------------------------------------------------

fn delta_ff_suite(config: &RunConfig) -> Report {
    let mut rng = suite_seed(config, 0x04);
    let mut run = SuiteRun::new("delta-ff");
    let cases = cases_or(config, 100);
    for _ in 0..cases {
        let n = rng.gen_range(1..=config.max_n.min(4));
        let p = gen::presentation_pool(&mut rng, n);
        let kernel = gen::builtin_kernel(&p);
        let x = gen::random_equivariant(&mut rng, &p, config.max_dim.min(3));
        let y = gen::random_equivariant(&mut rng, &p, config.max_dim.min(3));
        let witness = serde_json::json!({
            "x": serde_json::to_value(&x).unwrap_or_default(),
            "y": serde_json::to_value(&y).unwrap_or_default(),
        });
        let mut pass = true;
        let mut detail = String::new();
        match full_faithfulness_check(&x, &y) {
            Ok(r) if r.equal => {}
            Ok(r) => {
                pass = false;
                detail = format!(
                    "dim mismatch: equivariant {} vs fiber {}",
                    r.dim_equivariant, r.dim_fiber
                );
            }
            Err(e) => {
                pass = false;
                detail = e.to_string();
            }
        }
        if pass {
            // lift ∘ δ = id on equivariant morphisms
            if let Ok(hom) = hom_equivariant(&x, &y) {
                for sigma in hom.basis.iter().take(3) {
                    let tau = delta_on_morphism(sigma);
                    match lift_morphism(&x, &y, &kernel, &tau) {
                        Ok(back) if back == *sigma => {}
                        Ok(_) => {
                            pass = false;
                            detail = "lift ∘ δ is not the identity".into();
                        }
                        Err(e) => {
                            pass = false;
                            detail = format!("lift failed on δ-image: {e}");
                        }
                    }
                }
            }
            // δ ∘ lift = id on fiber morphisms
            if let Ok(fiber) = crate::fiber::paper_fiber_product(&p) {
                if let Ok(hom) = fiber.hom_space(&delta(&x), &delta(&y)) {
                    for tau in hom.basis.iter().take(3) {
                        match lift_morphism(&x, &y, &kernel, tau) {
                            Ok(sigma) => {
                                if delta_on_morphism(&sigma) != *tau {
                                    pass = false;
                                    detail = "δ ∘ lift is not the identity".into();
                                }
                            }
                            Err(e) => {
                                pass = false;
                                detail = format!("lift failed: {e}");
                            }
                        }
                    }
                }
            }
        }
        run.record(witness, pass, Some(detail));
    }
    run.finish(config, None)
}

// ---------------------------------------------------------------------------
// 5. Vanishing-cycle functoriality
// ---------------------------------------------------------------------------

fn vc_functor_suite(config: &RunConfig) -> Report {
    let mut rng = suite_seed(config, 0x05);
    let mut run = SuiteRun::new("vc-functor");
    let cases = cases_or(config, 100);
    for _ in 0..cases {
        let n = rng.gen_range(1..=config.max_n.min(4));
        let dims: Vec<usize> = (0..n)
            .map(|_| rng.gen_range(1..=config.max_dim.min(3)))
            .collect();
        let q = gen::random_quiver(&mut rng, &dims);
        // a composable pair: two random endomorphisms of q
        let hom = match hom_basis(&q, &q) {
            Ok(h) => h,
            Err(e) => {
                run.record(
                    serde_json::to_value(&q).unwrap_or_default(),
                    false,
                    Some(e.to_string()),
                );
                continue;
            }
        };
        let pick = |rng: &mut ChaCha20Rng, hom: &SolutionSpace| -> Vec<ExactMatrix> {
            let coeffs: Vec<Scalar> = (0..hom.dim())
                .map(|_| gen::random_scalar(rng, -2, 2))
                .collect();
            hom.combination(&coeffs)
        };
        let g = QuiverMorphism::new(q.clone(), q.clone(), pick(&mut rng, &hom))
            .expect("hom basis elements are morphisms");
        // about half the pairs leave q: compose with an isomorphism onto a
        // conjugated copy so the pair is not just two endomorphisms
        let f = if rng.gen_bool(0.5) {
            QuiverMorphism::new(q.clone(), q.clone(), pick(&mut rng, &hom))
                .expect("hom basis elements are morphisms")
        } else {
            let ps: Vec<ExactMatrix> = dims.iter().map(|&d| gen::random_invertible(&mut rng, d)).collect();
            let mut q2 = crate::quiver::Quiver::zero(dims.clone());
            for j in 0..n {
                for i in 0..n {
                    let conj = &(&ps[j] * q.map(j, i)) * &ps[i].invert().unwrap();
                    q2.set_map(j, i, conj);
                }
            }
            QuiverMorphism::new(q.clone(), q2, ps).expect("conjugation is a morphism")
        };
        let fg = compose(&f, &g).unwrap();
        let lhs = vanishing_cycles_map(&fg);
        let vf = vanishing_cycles_map(&f);
        let vg = vanishing_cycles_map(&g);
        let composed: Vec<ExactMatrix> = vf
            .components
            .iter()
            .zip(&vg.components)
            .map(|(a, b)| a * b)
            .collect();
        let id_ok = vanishing_cycles_map(&QuiverMorphism::identity(&q))
            .components
            .iter()
            .all(ExactMatrix::is_identity);
        let vc = vanishing_cycles(&q);
        let invertible_ok = (0..vc.n()).all(|i| vc.monodromy(i).is_invertible());
        let pass = lhs.components == composed && id_ok && invertible_ok;
        run.record(
            serde_json::to_value(&q).unwrap_or_default(),
            pass,
            Some("vanishing cycles failed functoriality or invertibility".into()),
        );
    }
    run.finish(config, None)
}

// ---------------------------------------------------------------------------
// 6. Descent and gluing
// ---------------------------------------------------------------------------

/// Star site with `petals` petal points around a shared point z:
/// opens Uz, U1..Up, X — that is, petals + 2 opens in total, all
/// intersections landing on Uz. The canonical cover of X is {U1..Up}.
pub fn petal_site(petals: usize) -> PosetSite {
    let mut points = vec!["z".to_string()];
    points.extend((1..=petals).map(|i| format!("p{i}")));
    let mut opens = vec![("Uz".to_string(), vec!["z".to_string()])];
    for i in 1..=petals {
        opens.push((format!("U{i}"), vec!["z".to_string(), format!("p{i}")]));
    }
    opens.push(("X".to_string(), points.clone()));
    let cover: Vec<String> = (1..=petals).map(|i| format!("U{i}")).collect();
    PosetSite::build(
        points,
        opens,
        vec![],
        BTreeMap::new(),
        BTreeMap::from([("X".to_string(), vec![cover])]),
    )
    .expect("petal site is valid")
}

/// Three-petal star, the smallest site with nonempty triple overlaps.
pub fn star_site() -> PosetSite {
    petal_site(3)
}

fn random_open_ls(
    rng: &mut impl Rng,
    site: &Arc<PosetSite>,
    open: usize,
    rank: usize,
) -> OpenLocalSystem {
    let mut obj = OpenLocalSystem::constant(site.clone(), open, rank);
    // twist edges with random invertibles; both pool sites are diamond-free,
    // so any invertible assignment stays path-independent
    let edges: Vec<(usize, usize)> = obj.maps.keys().copied().collect();
    for e in edges {
        obj.maps.insert(e, gen::random_invertible(rng, rank));
    }
    debug_assert!(obj.validate().is_ok());
    obj
}

struct DescentInstance {
    datum: DescentDatum,
    original: CatObject,
    original_sigmas: Vec<Vec<ExactMatrix>>,
}

fn random_descent_instance(
    rng: &mut impl Rng,
    prestack: &PrestackData,
    open: usize,
    cover: &[usize],
    rank: usize,
) -> DescentInstance {
    let site = prestack.site.clone();
    let base = random_open_ls(rng, &site, open, rank);
    // ψ_i: a random isomorphism out of each restriction
    let mut objects = Vec::new();
    let mut psis: Vec<BTreeMap<usize, ExactMatrix>> = Vec::new();
    for &member in cover {
        let restricted = base.restrict(member).unwrap();
        let mut psi = BTreeMap::new();
        let mut twisted = restricted.clone();
        for (&pt, &d) in &restricted.dims {
            psi.insert(pt, gen::random_invertible(rng, d));
        }
        for ((y, x), m) in restricted.maps.iter() {
            twisted
                .maps
                .insert((*y, *x), &(&psi[x] * m) * &psi[y].invert().unwrap());
        }
        debug_assert!(twisted.validate().is_ok());
        objects.push(CatObject::OpenLocalSystem(twisted));
        psis.push(psi);
    }
    // σ_ij = ψ_j ∘ ψ_i⁻¹ on overlap points
    let mut sigmas = BTreeMap::new();
    for i in 0..cover.len() {
        for j in 0..cover.len() {
            if i == j {
                continue;
            }
            let meet = site.intersection(cover[i], cover[j]).unwrap();
            let fam: Vec<ExactMatrix> = site.opens[meet]
                .points
                .iter()
                .map(|pt| &psis[j][pt] * &psis[i][pt].invert().unwrap())
                .collect();
            sigmas.insert((i, j), fam);
        }
    }
    let original_sigmas: Vec<Vec<ExactMatrix>> = cover
        .iter()
        .enumerate()
        .map(|(i, &member)| {
            site.opens[member]
                .points
                .iter()
                .map(|pt| psis[i][pt].clone())
                .collect()
        })
        .collect();
    DescentInstance {
        datum: DescentDatum {
            prestack: prestack.clone(),
            open,
            cover: cover.to_vec(),
            objects,
            sigmas,
        },
        original: CatObject::OpenLocalSystem(base),
        original_sigmas,
    }
}

fn descent_glue_suite(config: &RunConfig) -> Report {
    let mut rng = suite_seed(config, 0x06);
    let mut run = SuiteRun::new("descent-glue");
    let cases = cases_or(config, 50);
    for k in 0..cases {
        // random site with 4..=6 opens (2..=4 petals), full petal cover
        let petals = rng.gen_range(2..=4);
        let site = Arc::new(petal_site(petals));
        let cover_names: Vec<String> = (1..=petals).map(|i| format!("U{i}")).collect();
        let prestack = local_system_prestack(site.clone());
        let open = site.open_index("X").unwrap();
        let cover: Vec<usize> = cover_names
            .iter()
            .map(|n| site.open_index(n).unwrap())
            .collect();
        let rank = rng.gen_range(1..=config.max_dim.min(3));
        let inst = random_descent_instance(&mut rng, &prestack, open, &cover, rank);
        let witness = serde_json::json!({
            "site": serde_json::to_value(site.as_ref()).unwrap_or_default(),
            "cover": cover_names.clone(),
            "rank": rank,
            "case": k,
        });
        let mut pass = true;
        let mut detail = String::new();
        // valid data always glue
        if let Err(e) = check_descent(&inst.datum) {
            pass = false;
            detail = format!("valid datum rejected: {e}");
        } else {
            match glue(&inst.datum) {
                Ok((glued, sigmas)) => {
                    // restrict-then-reglue: unique compatible isomorphism
                    match compatible_iso_space(
                        &inst.datum,
                        &inst.original,
                        &inst.original_sigmas,
                        &glued,
                        &sigmas,
                    ) {
                        Ok(space) if space.dim() == 1 => {}
                        Ok(space) => {
                            pass = false;
                            detail =
                                format!("compatible-iso space has dimension {}", space.dim());
                        }
                        Err(e) => {
                            pass = false;
                            detail = format!("compatible-iso solve failed: {e}");
                        }
                    }
                }
                Err(e) => {
                    pass = false;
                    detail = format!("gluing failed: {e}");
                }
            }
        }
        // plant a violation
        if pass {
            let mut bad = inst.datum.clone();
            if cover.len() >= 3 {
                // scale σ_01 by 2 (and fix σ_10) so the triple cocycle breaks
                let two = Scalar::from_int(2);
                let s01 = bad.sigmas.get(&(0, 1)).unwrap().clone();
                let scaled: Vec<ExactMatrix> = s01.iter().map(|m| m.scale(&two)).collect();
                let scaled_inv: Vec<ExactMatrix> =
                    scaled.iter().map(|m| m.invert().unwrap()).collect();
                bad.sigmas.insert((0, 1), scaled);
                bad.sigmas.insert((1, 0), scaled_inv);
                match check_descent(&bad) {
                    Err(StackError::CocycleViolation(..)) => {}
                    other => {
                        pass = false;
                        detail = format!("planted cocycle violation not detected: {other:?}");
                    }
                }
            } else {
                // two members: break the inverse condition instead
                let two = Scalar::from_int(2);
                let s10 = bad.sigmas.get(&(1, 0)).unwrap().clone();
                bad.sigmas
                    .insert((1, 0), s10.iter().map(|m| m.scale(&two)).collect());
                match check_descent(&bad) {
                    Err(StackError::InverseViolation(..)) => {}
                    other => {
                        pass = false;
                        detail = format!("planted inverse violation not detected: {other:?}");
                    }
                }
            }
        }
        run.record(witness, pass, Some(detail));
    }
    run.finish(config, None)
}

// ---------------------------------------------------------------------------
// 7. Stalkwise weak-isomorphism detection
// ---------------------------------------------------------------------------

fn coboundary_twist_morphism(
    prestack: &PrestackData,
    signs: Arc<BTreeMap<usize, Scalar>>,
) -> StackMorphismData {
    use crate::category::{CategoryError, FunctorData};
    let p = prestack.clone();
    let p2 = prestack.clone();
    let functors = move |u: usize| -> FunctorData {
        let cat = p.category(u);
        let site = p.site.clone();
        let signs = signs.clone();
        FunctorData::new(
            "coboundary-twist",
            cat.clone(),
            cat.clone(),
            Arc::new({
                let signs = signs.clone();
                move |x: &CatObject| match x {
                    CatObject::OpenLocalSystem(l) => {
                        let mut out = l.clone();
                        for ((y, xpt), m) in l.maps.iter() {
                            let factor = &signs[xpt] / &signs[y];
                            out.maps.insert((*y, *xpt), m.scale(&factor));
                        }
                        Ok(CatObject::OpenLocalSystem(out))
                    }
                    _ => Err(CategoryError::InvalidObject("expected local system".into())),
                }
            }),
            Arc::new(move |x: &CatObject, y: &CatObject| {
                let (lx, ly) = match (x, y) {
                    (CatObject::OpenLocalSystem(a), CatObject::OpenLocalSystem(b)) => (a, b),
                    _ => {
                        return Err(CategoryError::InvalidObject(
                            "expected local systems".into(),
                        ))
                    }
                };
                let _ = &site;
                Ok(lx
                    .slot_points()
                    .iter()
                    .enumerate()
                    .map(|(s, p)| {
                        vec![(
                            s,
                            ExactMatrix::identity(ly.dims[p]),
                            ExactMatrix::identity(lx.dims[p]),
                        )]
                    })
                    .collect())
            }),
        )
    };
    let functors2 = functors.clone();
    StackMorphismData::new(
        prestack.clone(),
        prestack.clone(),
        Arc::new(functors),
        Arc::new(move |v, u, a| {
            // restriction commutes with the twist strictly
            let restricted = p2.restriction(v, u).apply(a)?;
            let twisted = functors2(v).apply(&restricted)?;
            p2.category(v).identity(&twisted)
        }),
    )
}

fn collapse_morphism(prestack: &PrestackData) -> StackMorphismData {
    use crate::category::{CategoryError, FunctorData};
    let p = prestack.clone();
    let p2 = prestack.clone();
    let functors = move |u: usize| -> FunctorData {
        let cat = p.category(u);
        FunctorData::new(
            "collapse",
            cat.clone(),
            cat.clone(),
            Arc::new(move |x: &CatObject| match x {
                CatObject::OpenLocalSystem(l) => {
                    let mut out = l.clone();
                    for d in out.dims.values_mut() {
                        *d = 0;
                    }
                    for m in out.maps.values_mut() {
                        *m = ExactMatrix::zeros(0, 0);
                    }
                    Ok(CatObject::OpenLocalSystem(out))
                }
                _ => Err(CategoryError::InvalidObject("expected local system".into())),
            }),
            Arc::new(move |x: &CatObject, _y: &CatObject| {
                let lx = match x {
                    CatObject::OpenLocalSystem(a) => a,
                    _ => {
                        return Err(CategoryError::InvalidObject(
                            "expected local systems".into(),
                        ))
                    }
                };
                Ok(vec![vec![]; lx.slot_points().len()])
            }),
        )
    };
    let functors2 = functors.clone();
    StackMorphismData::new(
        prestack.clone(),
        prestack.clone(),
        Arc::new(functors),
        Arc::new(move |v, u, a| {
            let restricted = p2.restriction(v, u).apply(a)?;
            let collapsed = functors2(v).apply(&restricted)?;
            p2.category(v).identity(&collapsed)
        }),
    )
}

fn weak_iso_suite(config: &RunConfig) -> Report {
    let mut rng = suite_seed(config, 0x07);
    let mut run = SuiteRun::new("weak-iso");
    let cases = cases_or(config, 60);
    let circle = Arc::new(PosetSite::pseudo_circle());
    let star = Arc::new(star_site());
    for k in 0..cases {
        let site = if (k / 2) % 2 == 0 { &circle } else { &star };
        let prestack = local_system_prestack(site.clone());
        // samples on every open
        let mut samples: BTreeMap<usize, Vec<CatObject>> = BTreeMap::new();
        for u in 0..site.opens.len() {
            if site.opens[u].points.is_empty() {
                continue;
            }
            let mut objs = Vec::new();
            for rank in 1..=2 {
                objs.push(CatObject::OpenLocalSystem(random_open_ls(
                    &mut rng, site, u, rank,
                )));
            }
            samples.insert(u, objs);
        }
        let positive = k % 2 == 0;
        let theta = if positive {
            let signs: BTreeMap<usize, Scalar> = (0..site.points.len())
                .map(|p| {
                    (p, {
                        let v = [1i64, -1, 2, 3][rng.gen_range(0..4)];
                        Scalar::from_int(v)
                    })
                })
                .collect();
            coboundary_twist_morphism(&prestack, Arc::new(signs))
        } else {
            collapse_morphism(&prestack)
        };
        // the collapse functor changes objects, so target samples must
        // include images; use the same sample lists (they contain rank-1 and
        // rank-2 objects, never rank-0, so collapse fails essential surjectivity
        // and hom bijectivity both)
        let verdict = check_weak_iso(&theta, &samples, &samples, &mut rng);
        let witness = serde_json::json!({
            "case": k,
            "site": if k % 2 == 0 { "pseudo-circle" } else { "star" },
            "planted": if positive { "positive" } else { "negative" },
        });
        let (pass, detail) = match verdict {
            Ok(r) => {
                if positive == r.weak_isomorphism
                    && (positive || !r.witnesses.is_empty())
                {
                    (true, String::new())
                } else {
                    (
                        false,
                        format!(
                            "verdict {} for planted {}: {:?}",
                            r.weak_isomorphism,
                            if positive { "positive" } else { "negative" },
                            r.witnesses
                        ),
                    )
                }
            }
            Err(e) => (false, format!("weak-iso check errored: {e}")),
        };
        run.record(witness, pass, Some(detail));
    }
    run.finish(config, None)
}

// ---------------------------------------------------------------------------
// 8. Melded consistency
// ---------------------------------------------------------------------------

fn collisions_from_cycles(p: &crate::group::GroupPresentation, g: usize) -> Vec<Vec<usize>> {
    let perm = &p.point_action[g];
    let mut seen = vec![false; perm.len()];
    let mut classes = Vec::new();
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut class = vec![start];
        seen[start] = true;
        let mut cur = perm[start];
        while cur != start {
            class.push(cur);
            seen[cur] = true;
            cur = perm[cur];
        }
        classes.push(class);
    }
    classes
}

/// Independent row-reduction over ℚ used as the oracle for Hom dimensions.
fn oracle_rank(mut rows: Vec<Vec<BigRational>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][c].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let inv = rows[rank][c].recip();
        for x in rows[rank].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..rows.len() {
            if r != rank && !rows[r][c].is_zero() {
                let f = rows[r][c].clone();
                for cc in 0..cols {
                    let sub = &rows[rank][cc] * &f;
                    rows[r][cc] -= sub;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Brute-force Hom dimension for groupoid representations: the constraint
/// matrix is assembled entry by entry and reduced by a standalone
/// elimination, independent of the block solver.
pub fn brute_force_groupoid_hom_dim(x: &GroupoidRep, y: &GroupoidRep) -> usize {
    let nodes = x.dims.len();
    let offsets: Vec<usize> = (0..nodes)
        .scan(0, |acc, i| {
            let here = *acc;
            *acc += y.dims[i] * x.dims[i];
            Some(here)
        })
        .collect();
    let ambient: usize = (0..nodes).map(|i| y.dims[i] * x.dims[i]).sum();
    let mut rows = Vec::new();
    let rat = |s: &Scalar| s.as_rational().cloned().unwrap_or_else(BigRational::zero);
    for (k, arrow) in x.presentation.arrows.iter().enumerate() {
        let (src, dst) = (arrow.src, arrow.dst);
        let mx = &x.matrices[k];
        let my = &y.matrices[k];
        // f_dst · mx − my · f_src = 0, entry (r, c)
        for r in 0..y.dims[dst] {
            for c in 0..x.dims[src] {
                let mut row = vec![BigRational::zero(); ambient];
                for u in 0..x.dims[dst] {
                    // coefficient of f_dst[r][u] in (f_dst · mx)[r][c]
                    row[offsets[dst] + r * x.dims[dst] + u] += rat(mx.get(u, c));
                }
                for v in 0..y.dims[src] {
                    // coefficient of f_src[v][c] in (my · f_src)[r][c]
                    row[offsets[src] + v * x.dims[src] + c] -= rat(my.get(r, v));
                }
                rows.push(row);
            }
        }
    }
    if rows.is_empty() {
        return ambient;
    }
    ambient - oracle_rank(rows)
}

fn random_groupoid_rep(rng: &mut impl Rng, max_dim: usize) -> GroupoidRep {
    let flavor = rng.gen_range(0..3);
    let (presentation, dims) = match flavor {
        0 => {
            // circle: one node, one loop
            let p = GroupoidPresentation::new(
                vec!["c".into()],
                vec![ArrowGen { name: "m".into(), src: 0, dst: 0 }],
                vec![],
                vec![1],
            )
            .unwrap();
            let d = rng.gen_range(1..=max_dim);
            (p, vec![d])
        }
        1 => {
            // figure eight: one node, two loops
            let p = GroupoidPresentation::new(
                vec!["c".into()],
                vec![
                    ArrowGen { name: "m1".into(), src: 0, dst: 0 },
                    ArrowGen { name: "m2".into(), src: 0, dst: 0 },
                ],
                vec![],
                vec![1, 1],
            )
            .unwrap();
            let d = rng.gen_range(1..=max_dim);
            (p, vec![d])
        }
        _ => {
            // two nodes joined by an arrow, plus a loop at the first
            let p = GroupoidPresentation::new(
                vec!["c1".into(), "c2".into()],
                vec![
                    ArrowGen { name: "bridge".into(), src: 0, dst: 1 },
                    ArrowGen { name: "loop".into(), src: 0, dst: 0 },
                ],
                vec![],
                vec![1, 1],
            )
            .unwrap();
            let d = rng.gen_range(1..=max_dim);
            (p, vec![d, d])
        }
    };
    let matrices = presentation
        .arrows
        .iter()
        .map(|a| {
            assert_eq!(dims[a.src], dims[a.dst]);
            gen::random_invertible(rng, dims[a.src])
        })
        .collect();
    GroupoidRep {
        presentation,
        dims,
        matrices,
    }
}

fn melded_suite(config: &RunConfig) -> Report {
    let mut rng = suite_seed(config, 0x08);
    let mut run = SuiteRun::new("melded");
    // two thirds family instances, one third empty covering models, so the
    // default of 150 yields 100 family validations and 50 oracle comparisons
    let cases = cases_or(config, 150);
    for k in 0..cases {
        let mut pass = true;
        let mut detail = String::new();
        let witness;
        if k % 3 == 2 {
            // empty covering model: hom_melded vs the brute-force oracle
            let x = random_groupoid_rep(&mut rng, config.max_dim.min(3));
            let y = if rng.gen_bool(0.5) {
                x.clone()
            } else {
                GroupoidRep {
                    presentation: x.presentation.clone(),
                    dims: x.dims.clone(),
                    matrices: x
                        .presentation
                        .arrows
                        .iter()
                        .map(|a| gen::random_invertible(&mut rng, x.dims[a.src]))
                        .collect(),
                }
            };
            witness = serde_json::json!({"case": k, "kind": "empty-lambda1"});
            let p0 = crate::group::GroupPresentation::trivial(0);
            let mk = |rep: &GroupoidRep| crate::melded::MeldedObject {
                lambda1: Lambda1Model::trivial(0),
                kernel: crate::kernel::ActionKernel::identity(&p0),
                a: rep.clone(),
                b: crate::equivariant::EquivariantQuiver::with_trivial_group(
                    crate::quiver::Quiver::zero(vec![]),
                ),
                gamma: vec![],
            };
            let (mx, my) = (mk(&x), mk(&y));
            match (validate_melded(&mx), hom_melded(&mx, &my)) {
                (Ok(()), Ok(h)) => {
                    let oracle = brute_force_groupoid_hom_dim(&x, &y);
                    if h.dim() != oracle {
                        pass = false;
                        detail = format!("hom dim {} ≠ oracle {}", h.dim(), oracle);
                    }
                }
                (a, b) => {
                    pass = false;
                    detail = format!("{a:?} / {}", b.err().map(|e| e.to_string()).unwrap_or_default());
                }
            }
        } else {
            let n = rng.gen_range(1..=config.max_n.min(4));
            let p = gen::presentation_pool(&mut rng, n);
            let kernel = gen::builtin_kernel(&p);
            let b = gen::random_equivariant(&mut rng, &p, config.max_dim.min(3));
            let collisions: BTreeMap<String, Vec<Vec<usize>>> = p
                .generators
                .iter()
                .enumerate()
                .map(|(g, name)| (name.clone(), collisions_from_cycles(&p, g)))
                .collect();
            let twists: BTreeMap<String, i8> = p
                .generators
                .iter()
                .map(|name| (name.clone(), if rng.gen_bool(0.25) { -1 } else { 1 }))
                .collect();
            let l1 = Lambda1Model {
                presentation: p.clone(),
                collisions,
                maslov_twist: twists,
            };
            witness = serde_json::json!({
                "case": k,
                "kind": "family",
                "b": serde_json::to_value(&b).unwrap_or_default(),
            });
            match from_equivariant_family(&b, &l1, &kernel) {
                Ok(m) => {
                    if let Err(e) = validate_melded(&m) {
                        pass = false;
                        detail = format!("validate ∘ from_equivariant_family failed: {e}");
                    } else if k % 2 == 1 {
                        // perturb one gamma component; the detector must agree
                        // with a direct residual computation
                        let sheet = rng.gen_range(0..n);
                        let d = m.b.quiver.dims()[sheet];
                        let z = loop {
                            let cand = gen::random_invertible(&mut rng, d);
                            if !cand.is_identity() {
                                break cand;
                            }
                        };
                        let mut perturbed = m.clone();
                        perturbed.gamma[sheet] = &z * &m.gamma[sheet];
                        let breaks = gamma_residual_nonzero(&perturbed, sheet);
                        let detected = matches!(
                            validate_melded(&perturbed),
                            Err(MeldedError::GammaViolation { .. })
                        );
                        if breaks != detected {
                            pass = false;
                            detail = format!(
                                "perturbation breaks={breaks} but detected={detected}"
                            );
                        }
                    }
                }
                Err(e) => {
                    pass = false;
                    detail = format!("from_equivariant_family failed: {e}");
                }
            }
        }
        run.record(witness, pass, Some(detail));
    }
    run.finish(config, None)
}

/// Direct residual computation for the gamma conditions at one sheet.
fn gamma_residual_nonzero(m: &crate::melded::MeldedObject, sheet: usize) -> bool {
    let n = m.lambda1.sheets();
    let circle = {
        let lhs = &m.gamma[sheet] * &m.a.twisted(sheet);
        let rhs = &m.b.quiver.one_plus_diag(sheet) * &m.gamma[sheet];
        lhs != rhs
    };
    if circle {
        return true;
    }
    for (g, _) in m.lambda1.presentation.generators.iter().enumerate() {
        let perm = &m.lambda1.presentation.point_action[g];
        for i in 0..n {
            let arrow = n + g * n + i;
            let lhs = &m.gamma[perm[i]] * &m.a.twisted(arrow);
            let rhs = &m.b.structure[g][i] * &m.gamma[i];
            if lhs != rhs {
                return true;
            }
        }
    }
    false
}

// ---------------------------------------------------------------------------
// 9. No-variation base case
// ---------------------------------------------------------------------------

fn no_variation_suite(config: &RunConfig) -> Report {
    let mut rng = suite_seed(config, 0x09);
    let mut run = SuiteRun::new("no-variation");
    // two thirds zero-block base cases, one third labeled surrogate verdicts,
    // so the default of 150 yields 100 guaranteed base-case instances
    let cases = cases_or(config, 150);
    for k in 0..cases {
        // a presentation whose first generator moves points
        let n = rng.gen_range(2..=config.max_n.max(2).min(4));
        let p = loop {
            let cand = gen::presentation_pool(&mut rng, n);
            if !cand.generators.is_empty()
                && cand.point_action[0].iter().enumerate().any(|(i, &x)| i != x)
            {
                break cand;
            }
        };
        let kernel = gen::builtin_kernel(&p);
        let mut b = gen::random_equivariant(&mut rng, &p, config.max_dim.min(3));
        let collisions: BTreeMap<String, Vec<Vec<usize>>> = p
            .generators
            .iter()
            .enumerate()
            .map(|(g, name)| (name.clone(), collisions_from_cycles(&p, g)))
            .collect();
        let gname = p.generators[0].clone();
        let zero_block = k % 3 != 2;
        if zero_block {
            // zero out the colliding blocks of the designated generator
            for class in &collisions[&gname] {
                if class.len() < 2 {
                    continue;
                }
                for &i in class {
                    for &j in class {
                        let shape = b.quiver.map(j, i).shape();
                        b.quiver.set_map(j, i, ExactMatrix::zeros(shape.0, shape.1));
                    }
                }
            }
        }
        let l1 = Lambda1Model {
            presentation: p.clone(),
            collisions,
            maslov_twist: BTreeMap::new(),
        };
        let witness = serde_json::json!({
            "case": k,
            "zero_block": zero_block,
            "b": serde_json::to_value(&b).unwrap_or_default(),
        });
        let mut pass = true;
        let mut detail = String::new();
        match from_equivariant_family(&b, &l1, &kernel) {
            Ok(m) => match has_no_variation(&m, &gname) {
                Ok(r) => {
                    if zero_block {
                        if !(r.no_variation && !r.decision_dependent) {
                            pass = false;
                            detail = format!(
                                "zero block: no_variation={}, decision_dependent={}",
                                r.no_variation, r.decision_dependent
                            );
                        }
                    } else {
                        // verdict is computed; nonzero colliding blocks must
                        // carry the decision-dependent label
                        let block_zero = collisions_all_zero(&m, &gname);
                        if !block_zero && !r.decision_dependent {
                            pass = false;
                            detail = "nonzero block not labeled decision-dependent".into();
                        }
                    }
                }
                Err(e) => {
                    pass = false;
                    detail = format!("variation predicate errored: {e}");
                }
            },
            Err(e) => {
                pass = false;
                detail = format!("family construction failed: {e}");
            }
        }
        run.record(witness, pass, Some(detail));
    }
    run.finish(config, None)
}

fn collisions_all_zero(m: &crate::melded::MeldedObject, generator: &str) -> bool {
    let Some(partition) = m.lambda1.collisions.get(generator) else {
        return true;
    };
    partition.iter().all(|class| {
        class.len() < 2
            || class
                .iter()
                .all(|&i| class.iter().all(|&j| m.b.quiver.map(j, i).is_zero()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_config() -> RunConfig {
        RunConfig {
            seed: 7,
            cases: 6,
            max_n: 3,
            max_dim: 2,
            include_timing: false,
        }
    }

    #[test]
    fn unknown_suite_rejected() {
        let err = run_suite(&quick_config(), "nope").unwrap_err();
        assert_eq!(err, SuiteError::UnknownSuite("nope".into()));
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = quick_config();
        let a = run_suite(&cfg, "triple-rank").unwrap();
        let b = run_suite(&cfg, "triple-rank").unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn oracle_rank_agrees_with_matrix_rank() {
        use num_traits::One;
        let rows = vec![
            vec![BigRational::one(), BigRational::from_integer(2.into())],
            vec![
                BigRational::from_integer(2.into()),
                BigRational::from_integer(4.into()),
            ],
        ];
        assert_eq!(oracle_rank(rows), 1);
    }

    #[test]
    fn quick_suites_pass() {
        let cfg = quick_config();
        for name in ["triple-rank", "triple-signature", "vc-functor"] {
            let r = run_suite(&cfg, name).unwrap();
            assert!(r.all_passed(), "{name}: {:?}", r.failures);
        }
    }
}
