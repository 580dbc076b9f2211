//! Seeded random instance generation for the property suites.
//!
//! Quiver map entries are drawn from {−2..2} and rejection-sampled until
//! every 1 + m_{ii} is invertible; symplectic matrices are products of the
//! standard generators, so everything stays exactly rational. All generators
//! take a caller-owned RNG, which keeps suite runs reproducible from a seed.

use crate::equivariant::EquivariantQuiver;
use crate::group::{GroupPresentation, Letter};
use crate::kernel::ActionKernel;
use crate::matrix::ExactMatrix;
use crate::quiver::Quiver;
use crate::scalar::Scalar;
use crate::solve::{solve_homogeneous, Constraint, Term};
use crate::symplectic::{LagrangianFrame, LagrangianTriple, SymplecticSpace};
use rand::Rng;

pub fn random_scalar(rng: &mut impl Rng, lo: i64, hi: i64) -> Scalar {
    Scalar::from_int(rng.gen_range(lo..=hi))
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> ExactMatrix {
    ExactMatrix::from_fn(rows, cols, |_, _| random_scalar(rng, -2, 2))
}

/// Random invertible matrix by rejection.
pub fn random_invertible(rng: &mut impl Rng, n: usize) -> ExactMatrix {
    loop {
        let m = random_matrix(rng, n, n);
        if m.is_invertible() {
            return m;
        }
    }
}

pub fn random_symmetric(rng: &mut impl Rng, n: usize) -> ExactMatrix {
    let mut m = ExactMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = random_scalar(rng, -2, 2);
            m.set(i, j, v.clone());
            m.set(j, i, v);
        }
    }
    m
}

/// Random quiver with entries in {−2..2}; diagonal blocks are resampled
/// until 1 + m_{ii} is invertible.
pub fn random_quiver(rng: &mut impl Rng, dims: &[usize]) -> Quiver {
    let n = dims.len();
    let mut q = Quiver::zero(dims.to_vec());
    for j in 0..n {
        for i in 0..n {
            if i == j {
                loop {
                    let cand = random_matrix(rng, dims[i], dims[i]);
                    let one_plus = &ExactMatrix::identity(dims[i]) + &cand;
                    if one_plus.is_invertible() {
                        q.set_map(i, i, cand);
                        break;
                    }
                }
            } else {
                q.set_map(j, i, random_matrix(rng, dims[j], dims[i]));
            }
        }
    }
    q
}

/// Random symplectic matrix for the standard form: a short product of the
/// generators diag(A, A⁻ᵀ), upper/lower shears by symmetric blocks, and J.
pub fn random_symplectic(rng: &mut impl Rng, n: usize) -> ExactMatrix {
    let mut m = ExactMatrix::identity(2 * n);
    let factors = rng.gen_range(2..=4);
    for _ in 0..factors {
        let f = match rng.gen_range(0..4) {
            0 => {
                let a = random_invertible(rng, n);
                let ainv_t = a.invert().unwrap().transpose();
                ExactMatrix::block_diag(&[&a, &ainv_t])
            }
            1 => {
                let s = random_symmetric(rng, n);
                let mut f = ExactMatrix::identity(2 * n);
                for r in 0..n {
                    for c in 0..n {
                        f.set(r, n + c, s.get(r, c).clone());
                    }
                }
                f
            }
            2 => {
                let s = random_symmetric(rng, n);
                let mut f = ExactMatrix::identity(2 * n);
                for r in 0..n {
                    for c in 0..n {
                        f.set(n + r, c, s.get(r, c).clone());
                    }
                }
                f
            }
            _ => {
                let mut f = ExactMatrix::zeros(2 * n, 2 * n);
                for i in 0..n {
                    f.set(i, n + i, Scalar::one());
                    f.set(n + i, i, Scalar::from_int(-1));
                }
                f
            }
        };
        m = &m * &f;
    }
    m
}

/// The standard Lagrangian span(e_1..e_n).
pub fn horizontal_frame(space: &SymplecticSpace) -> LagrangianFrame {
    let n = space.half_dim();
    let basis = ExactMatrix::from_fn(2 * n, n, |r, c| {
        if r == c {
            Scalar::one()
        } else {
            Scalar::zero()
        }
    });
    LagrangianFrame::new(space.clone(), basis).unwrap()
}

/// The vertical Lagrangian span(f_1..f_n).
pub fn vertical_frame(space: &SymplecticSpace) -> LagrangianFrame {
    let n = space.half_dim();
    let basis = ExactMatrix::from_fn(2 * n, n, |r, c| {
        if r == n + c {
            Scalar::one()
        } else {
            Scalar::zero()
        }
    });
    LagrangianFrame::new(space.clone(), basis).unwrap()
}

/// Mixed coordinate Lagrangian: e_1..e_k then f_{k+1}..f_n.
pub fn mixed_frame(space: &SymplecticSpace, k: usize) -> LagrangianFrame {
    let n = space.half_dim();
    let basis = ExactMatrix::from_fn(2 * n, n, |r, c| {
        let want = if c < k { c } else { n + c };
        if r == want {
            Scalar::one()
        } else {
            Scalar::zero()
        }
    });
    LagrangianFrame::new(space.clone(), basis).unwrap()
}

/// Graph Lagrangian {(x, Sx)} of a symmetric matrix.
pub fn graph_frame(space: &SymplecticSpace, s: &ExactMatrix) -> LagrangianFrame {
    let n = space.half_dim();
    let basis = ExactMatrix::from_fn(2 * n, n, |r, c| {
        if r < n {
            if r == c {
                Scalar::one()
            } else {
                Scalar::zero()
            }
        } else {
            s.get(r - n, c).clone()
        }
    });
    LagrangianFrame::new(space.clone(), basis).unwrap()
}

/// Random Lagrangian triple over the standard space, with varied
/// intersection patterns, finished by a common random symplectic change of
/// basis.
pub fn random_triple(rng: &mut impl Rng, n: usize) -> LagrangianTriple {
    let space = SymplecticSpace::standard(n);
    let h = horizontal_frame(&space);
    let v = vertical_frame(&space);
    let pattern = rng.gen_range(0..5);
    let (w1, w2, w3) = match pattern {
        0 => {
            // three independent random images
            let f = |rng: &mut _| {
                h.transform(&random_symplectic(rng, n)).unwrap()
            };
            (f(rng), f(rng), f(rng))
        }
        1 => (h.clone(), h.clone(), h.clone()),
        2 => {
            let k = rng.gen_range(0..=n);
            (h.clone(), v.clone(), mixed_frame(&space, k))
        }
        3 => {
            let k = rng.gen_range(0..=n);
            (
                h.clone(),
                mixed_frame(&space, k),
                h.transform(&random_symplectic(rng, n)).unwrap(),
            )
        }
        _ => (
            graph_frame(&space, &random_symmetric(rng, n)),
            graph_frame(&space, &random_symmetric(rng, n)),
            graph_frame(&space, &random_symmetric(rng, n)),
        ),
    };
    let change = random_symplectic(rng, n);
    LagrangianTriple::new(
        w1.transform(&change).unwrap(),
        w2.transform(&change).unwrap(),
        w3.transform(&change).unwrap(),
    )
    .unwrap()
}

/// Exact rational points on the unit circle in strictly increasing angular
/// order, 4·steps points per full turn. The half-angle parameter t = p/q
/// gives (c, s) = ((q²−p²)/(q²+p²), 2pq/(q²+p²)); the list at density
/// 2·steps contains the list at density steps, so doubling the density is a
/// genuine refinement of the same loop.
pub fn circle_points(steps: usize) -> Vec<(Scalar, Scalar)> {
    let s = steps as i64;
    let mut params: Vec<(i64, i64)> = Vec::with_capacity(4 * steps);
    // θ ∈ [0, π/2): t ascending from 0
    params.extend((0..s).map(|k| (k, s)));
    // θ ∈ [π/2, π): t ascending from 1 toward +∞
    params.extend((0..s).map(|k| (s, s - k)));
    // θ = π (t = ∞), then θ ∈ (π, 3π/2): t ascending from −∞
    params.push((1, 0));
    params.extend((1..s).map(|k| (-s, k)));
    // θ ∈ [3π/2, 2π): t ascending from −1 toward 0
    params.extend((0..s).map(|k| (-(s - k), s)));
    params
        .into_iter()
        .map(|(p, q)| {
            let p2 = p * p;
            let q2 = q * q;
            let denom = p2 + q2;
            (
                Scalar::from_fraction(q2 - p2, denom),
                Scalar::from_fraction(2 * p * q, denom),
            )
        })
        .collect()
}

/// Rotation by the circle point (c, s) in the (e_k, f_k) symplectic plane.
pub fn plane_rotation(n: usize, k: usize, c: &Scalar, s: &Scalar) -> ExactMatrix {
    let mut m = ExactMatrix::identity(2 * n);
    m.set(k, k, c.clone());
    m.set(k, n + k, -s);
    m.set(n + k, k, s.clone());
    m.set(n + k, n + k, c.clone());
    m
}

/// A loop of triples that can be sampled at any density, so refinement
/// invariance can compare the same geometric loop at two step counts.
#[derive(Debug, Clone)]
pub enum LoopFamily {
    /// All three frames rotate through a full turn by a conjugated plane
    /// rotation; closed and stratum-constant by construction.
    Rotation {
        base: LagrangianTriple,
        conj: ExactMatrix,
        plane: usize,
    },
    /// Only the third subspace moves: a line rotating through a half turn
    /// inside one symplectic plane, direct-summed with a fixed complement.
    /// The subspace returns to itself after the half turn.
    Pencil {
        space: SymplecticSpace,
        change: ExactMatrix,
        w1: LagrangianFrame,
        w2: LagrangianFrame,
        rest: LagrangianFrame,
    },
}

impl LoopFamily {
    /// Samples the loop with `steps` points per quarter turn. Returns `None`
    /// when a sample is degenerate or the loop leaves its stratum.
    pub fn sample(&self, steps: usize) -> Option<Vec<LagrangianTriple>> {
        match self {
            LoopFamily::Rotation { base, conj, plane } => {
                let n = base.space().half_dim();
                let conj_inv = conj.invert().unwrap();
                let mut samples = Vec::new();
                for (c, s) in circle_points(steps) {
                    let rot = &(conj * &plane_rotation(n, *plane, &c, &s)) * &conj_inv;
                    samples.push(base.transform(&rot).ok()?);
                }
                samples.push(samples[0].clone());
                let profile = samples[0].intersection_profile();
                samples
                    .iter()
                    .all(|t| t.intersection_profile() == profile)
                    .then_some(samples)
            }
            LoopFamily::Pencil {
                space,
                change,
                w1,
                w2,
                rest,
            } => {
                let n = space.half_dim();
                let half_circle: Vec<(Scalar, Scalar)> = circle_points(steps)
                    .into_iter()
                    .take(2 * steps + 1)
                    .collect();
                let mut samples = Vec::new();
                for (c, s) in &half_circle {
                    let mut basis = ExactMatrix::zeros(2 * n, n);
                    basis.set(0, 0, c.clone());
                    basis.set(n, 0, s.clone());
                    for col in 1..n {
                        for row in 0..2 * n {
                            basis.set(row, col, rest.basis().get(row, col).clone());
                        }
                    }
                    let frame = LagrangianFrame::new(space.clone(), change * &basis).ok()?;
                    samples.push(LagrangianTriple::new(w1.clone(), w2.clone(), frame).ok()?);
                }
                if samples.first() != samples.last() {
                    return None;
                }
                let profile = samples[0].intersection_profile();
                samples
                    .iter()
                    .all(|t| t.intersection_profile() == profile)
                    .then_some(samples)
            }
        }
    }
}

/// Random loop family: rotations of whole triples, or a moving pencil line
/// when n ≥ 2.
pub fn random_loop_family(rng: &mut impl Rng, n: usize) -> LoopFamily {
    if n >= 2 && rng.gen_bool(0.5) {
        let space = SymplecticSpace::standard(n);
        let change = random_symplectic(rng, n);
        let w1 = horizontal_frame(&space).transform(&change).unwrap();
        let w2 = graph_frame(&space, &random_symmetric(rng, n))
            .transform(&change)
            .unwrap();
        let rest = mixed_frame(&space, rng.gen_range(0..n));
        LoopFamily::Pencil {
            space,
            change,
            w1,
            w2,
            rest,
        }
    } else {
        let base = random_triple(rng, n);
        let conj = random_symplectic(rng, n);
        let plane = rng.gen_range(0..n);
        LoopFamily::Rotation { base, conj, plane }
    }
}

/// Presentation pool for equivariant instances: trivial, ℤ/2 swaps, a free
/// cyclic generator, and a free pair of generators.
pub fn presentation_pool(rng: &mut impl Rng, n: usize) -> GroupPresentation {
    let choice = rng.gen_range(0..4);
    match choice {
        0 => GroupPresentation::trivial(n),
        1 => {
            // involution: swap 2k points pairwise, fix the rest
            let mut perm: Vec<usize> = (0..n).collect();
            let pairs = rng.gen_range(1..=(n / 2).max(1)).min(n / 2);
            for p in 0..pairs {
                perm.swap(2 * p, 2 * p + 1);
            }
            GroupPresentation::new(
                n,
                vec!["t".into()],
                vec![vec![
                    Letter { gen: 0, inverse: false },
                    Letter { gen: 0, inverse: false },
                ]],
                vec![perm],
            )
            .unwrap()
        }
        2 => {
            // free cyclic shift
            let perm: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
            GroupPresentation::new(n, vec!["s".into()], vec![], vec![perm]).unwrap()
        }
        _ => {
            // free pair: a shift and a swap
            let shift: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
            let mut swap: Vec<usize> = (0..n).collect();
            if n >= 2 {
                swap.swap(0, 1);
            }
            GroupPresentation::new(
                n,
                vec!["s".into(), "t".into()],
                vec![],
                vec![shift, swap],
            )
            .unwrap()
        }
    }
}

/// The built-in kernel matching a presentation: identity for trivial point
/// actions, pure permutation otherwise.
pub fn builtin_kernel(p: &GroupPresentation) -> ActionKernel {
    let trivial_action = p
        .point_action
        .iter()
        .all(|perm| perm.iter().enumerate().all(|(i, &x)| i == x));
    if trivial_action {
        ActionKernel::identity(p)
    } else {
        ActionKernel::pure_permutation(p)
    }
}

/// Random involution with γ² transporting to the identity.
fn involution_structure(rng: &mut impl Rng, perm: &[usize], dims: &[usize]) -> Vec<ExactMatrix> {
    let n = perm.len();
    let mut gamma: Vec<Option<ExactMatrix>> = vec![None; n];
    for i in 0..n {
        if gamma[i].is_some() {
            continue;
        }
        let j = perm[i];
        if j == i {
            // square root of the identity: P · diag(±1) · P⁻¹
            let p = random_invertible(rng, dims[i]);
            let mut d = ExactMatrix::identity(dims[i]);
            for k in 0..dims[i] {
                if rng.gen_bool(0.5) {
                    d.set(k, k, Scalar::from_int(-1));
                }
            }
            gamma[i] = Some(&(&p * &d) * &p.invert().unwrap());
        } else {
            let c = random_invertible(rng, dims[i]);
            gamma[j] = Some(c.invert().unwrap());
            gamma[i] = Some(c);
        }
    }
    gamma.into_iter().map(Option::unwrap).collect()
}

/// Random equivariant quiver over a presentation with a built-in kernel:
/// structure maps are chosen relation-coherently, then the quiver maps are
/// solved from diagram (4) and rejection-sampled for validity.
pub fn random_equivariant(
    rng: &mut impl Rng,
    presentation: &GroupPresentation,
    max_dim: usize,
) -> EquivariantQuiver {
    let n = presentation.n_points;
    // orbit-constant dims
    let mut dims = vec![0usize; n];
    let mut assigned = vec![false; n];
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        // orbit of i under all generators
        let mut orbit = vec![i];
        let mut stack = vec![i];
        while let Some(p) = stack.pop() {
            for perm in &presentation.point_action {
                let q = perm[p];
                if !orbit.contains(&q) {
                    orbit.push(q);
                    stack.push(q);
                }
            }
        }
        let d = rng.gen_range(1..=max_dim);
        for &p in &orbit {
            dims[p] = d;
            assigned[p] = true;
        }
    }

    // structure maps per generator
    let mut structure = Vec::new();
    for (g, gname) in presentation.generators.iter().enumerate() {
        let perm = &presentation.point_action[g];
        let is_involution = presentation
            .relations
            .iter()
            .any(|r| r.len() == 2 && r.iter().all(|l| l.gen == g && !l.inverse));
        if is_involution {
            structure.push(involution_structure(rng, perm, &dims));
        } else {
            // free generator: arbitrary invertible maps
            let _ = gname;
            structure.push(
                (0..n)
                    .map(|i| {
                        let (r, c) = (dims[perm[i]], dims[i]);
                        debug_assert_eq!(r, c);
                        random_invertible(rng, c)
                    })
                    .collect(),
            );
        }
    }

    // solve diagram (4) for the maps: for the built-in kernels the
    // transformed map at position (j, i) is the original at (g(j), g(i))
    let trivial_action = presentation
        .point_action
        .iter()
        .all(|perm| perm.iter().enumerate().all(|(i, &x)| i == x));
    let blocks: Vec<(usize, usize)> = (0..n)
        .flat_map(|j| (0..n).map(move |i| (j, i)))
        .collect();
    let shapes: Vec<(usize, usize)> = blocks.iter().map(|&(j, i)| (dims[j], dims[i])).collect();
    let block_index = |j: usize, i: usize| j * n + i;
    let mut constraints = Vec::new();
    for (g, perm) in presentation.point_action.iter().enumerate() {
        for j in 0..n {
            for i in 0..n {
                let (tj, ti) = if trivial_action {
                    (j, i)
                } else {
                    (perm[j], perm[i])
                };
                // γ_j · X_(j,i) − X_(tj,ti) · γ_i = 0
                constraints.push(Constraint::new(vec![
                    Term::new(
                        block_index(j, i),
                        structure[g][j].clone(),
                        ExactMatrix::identity(dims[i]),
                    ),
                    Term::new(
                        block_index(tj, ti),
                        -&ExactMatrix::identity(dims[perm[j]]),
                        structure[g][i].clone(),
                    ),
                ]));
            }
        }
    }
    let space = solve_homogeneous(&shapes, &constraints).expect("diagram-4 system well-formed");
    let quiver = loop {
        let coeffs: Vec<Scalar> = (0..space.dim())
            .map(|_| random_scalar(rng, -2, 2))
            .collect();
        let family = space.combination(&coeffs);
        let mut q = Quiver::zero(dims.clone());
        for (b, &(j, i)) in blocks.iter().enumerate() {
            q.set_map(j, i, family[b].clone());
        }
        if crate::quiver::validate_quiver(&q).is_ok() {
            break q;
        }
    };
    EquivariantQuiver {
        presentation: presentation.clone(),
        quiver,
        structure,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivariant::validate_equivariant;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_symplectic_matrices_are_symplectic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=3 {
            let space = SymplecticSpace::standard(n);
            for _ in 0..5 {
                let m = random_symplectic(&mut rng, n);
                assert!(space.is_symplectic_matrix(&m));
            }
        }
    }

    #[test]
    fn circle_points_lie_on_circle_and_close() {
        let pts = circle_points(4);
        assert_eq!(pts.len(), 16);
        for (c, s) in &pts {
            let norm = &(c * c) + &(s * s);
            assert!(norm.is_one());
        }
        // first point is angle 0
        assert!(pts[0].0.is_one());
        assert!(pts[0].1.is_zero());
    }

    #[test]
    fn random_equivariant_instances_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let n = rng.gen_range(1..=3);
            let p = presentation_pool(&mut rng, n);
            let k = builtin_kernel(&p);
            let e = random_equivariant(&mut rng, &p, 2);
            validate_equivariant(&e, &k).unwrap();
        }
    }

    #[test]
    fn loop_families_close_and_stay_in_stratum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..6 {
            let fam = random_loop_family(&mut rng, 2);
            let Some(lp) = fam.sample(4) else { continue };
            assert_eq!(lp.first(), lp.last());
            let profile = lp[0].intersection_profile();
            assert!(lp.iter().all(|t| t.intersection_profile() == profile));
        }
    }
}
