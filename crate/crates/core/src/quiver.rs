//! The category 𝒬 of quivers and the local-system category ℒ.
//!
//! A quiver here is the linear model of a perverse sheaf on a disk singular
//! at n points: spaces M_i and maps m_{ji}: M_i → M_j for every ordered pair
//! (i, j), with 1 + m_{ii} invertible. Morphisms are families τ_i with
//! τ_j · m_{ji} = m'_{ji} · τ_i. Vanishing cycles send a quiver to the
//! local-system quiver (L_i = M_i, l_i = 1 + m_{ii}) and a morphism to the
//! same components.
//!
//! Map direction: m_{ji} maps M_i → M_j (shape dims[j] × dims[i]), matching
//! the commuting diagrams that define morphisms and equivariance. Points are
//! 1-based in JSON and error messages, 0-based internally.

use crate::matrix::ExactMatrix;
use crate::solve::{solve_homogeneous, Constraint, SolutionSpace};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuiverError {
    #[error("1 + m_{{{0},{0}}} is not invertible")]
    NotInvertible(usize), // 1-based point
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("point counts differ: {0} vs {1}")]
    PointCountMismatch(usize, usize),
    #[error("morphisms do not compose: target/source quivers differ")]
    CompositionMismatch,
    #[error("monodromy at point {0} is not invertible")]
    MonodromyNotInvertible(usize), // 1-based point
}

/// An object of 𝒬.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quiver {
    dims: Vec<usize>,
    /// maps[j][i] = m_{ji}: M_i → M_j, shape (dims[j], dims[i])
    maps: Vec<Vec<ExactMatrix>>,
}

impl Quiver {
    /// Validates shapes and the invertibility of every 1 + m_{ii}.
    pub fn new(dims: Vec<usize>, maps: Vec<Vec<ExactMatrix>>) -> Result<Self, QuiverError> {
        let n = dims.len();
        if maps.len() != n || maps.iter().any(|row| row.len() != n) {
            return Err(QuiverError::ShapeMismatch(format!(
                "expected {n}x{n} map grid"
            )));
        }
        for j in 0..n {
            for i in 0..n {
                if maps[j][i].shape() != (dims[j], dims[i]) {
                    return Err(QuiverError::ShapeMismatch(format!(
                        "m_{{{},{}}} is {}x{}, expected {}x{}",
                        j + 1,
                        i + 1,
                        maps[j][i].rows(),
                        maps[j][i].cols(),
                        dims[j],
                        dims[i]
                    )));
                }
            }
        }
        let q = Quiver { dims, maps };
        q.check_invertibility()?;
        Ok(q)
    }

    /// A quiver with all maps zero.
    pub fn zero(dims: Vec<usize>) -> Self {
        let n = dims.len();
        let maps = (0..n)
            .map(|j| (0..n).map(|i| ExactMatrix::zeros(dims[j], dims[i])).collect())
            .collect();
        Quiver { dims, maps }
    }

    fn check_invertibility(&self) -> Result<(), QuiverError> {
        for i in 0..self.n() {
            let one_plus = &ExactMatrix::identity(self.dims[i]) + &self.maps[i][i];
            if !one_plus.is_invertible() {
                return Err(QuiverError::NotInvertible(i + 1));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// m_{ji}: M_i → M_j (0-based indices).
    pub fn map(&self, j: usize, i: usize) -> &ExactMatrix {
        &self.maps[j][i]
    }

    pub fn set_map(&mut self, j: usize, i: usize, m: ExactMatrix) {
        assert_eq!(m.shape(), (self.dims[j], self.dims[i]));
        self.maps[j][i] = m;
    }

    /// 1 + m_{ii} at a point, the vanishing-cycle monodromy.
    pub fn one_plus_diag(&self, i: usize) -> ExactMatrix {
        &ExactMatrix::identity(self.dims[i]) + &self.maps[i][i]
    }

    /// Blockwise direct sum.
    pub fn direct_sum(&self, other: &Quiver) -> Result<Quiver, QuiverError> {
        if self.n() != other.n() {
            return Err(QuiverError::PointCountMismatch(self.n(), other.n()));
        }
        let dims: Vec<usize> = self
            .dims
            .iter()
            .zip(&other.dims)
            .map(|(a, b)| a + b)
            .collect();
        let maps = (0..self.n())
            .map(|j| {
                (0..self.n())
                    .map(|i| ExactMatrix::block_diag(&[&self.maps[j][i], &other.maps[j][i]]))
                    .collect()
            })
            .collect();
        Quiver::new(dims, maps)
    }
}

/// Succeeds iff all shape and invertibility invariants hold.
pub fn validate_quiver(q: &Quiver) -> Result<(), QuiverError> {
    q.check_invertibility()
}

/// A morphism in 𝒬, stored with its endpoint objects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuiverMorphism {
    pub source: Quiver,
    pub target: Quiver,
    /// components[i] = τ_i: M_i → M'_i, shape (target.dims[i], source.dims[i])
    pub components: Vec<ExactMatrix>,
}

impl QuiverMorphism {
    /// Checks shapes and the morphism condition τ_j·m_{ji} = m'_{ji}·τ_i.
    pub fn new(
        source: Quiver,
        target: Quiver,
        components: Vec<ExactMatrix>,
    ) -> Result<Self, QuiverError> {
        if source.n() != target.n() || components.len() != source.n() {
            return Err(QuiverError::PointCountMismatch(source.n(), target.n()));
        }
        for (i, c) in components.iter().enumerate() {
            if c.shape() != (target.dims[i], source.dims[i]) {
                return Err(QuiverError::ShapeMismatch(format!(
                    "τ_{} is {}x{}, expected {}x{}",
                    i + 1,
                    c.rows(),
                    c.cols(),
                    target.dims[i],
                    source.dims[i]
                )));
            }
        }
        let m = QuiverMorphism {
            source,
            target,
            components,
        };
        for j in 0..m.source.n() {
            for i in 0..m.source.n() {
                let lhs = &m.components[j] * m.source.map(j, i);
                let rhs = m.target.map(j, i) * &m.components[i];
                if lhs != rhs {
                    return Err(QuiverError::ShapeMismatch(format!(
                        "morphism square fails at (j={}, i={})",
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        Ok(m)
    }

    pub fn identity(q: &Quiver) -> Self {
        QuiverMorphism {
            source: q.clone(),
            target: q.clone(),
            components: q.dims.iter().map(|&d| ExactMatrix::identity(d)).collect(),
        }
    }

    pub fn is_isomorphism(&self) -> bool {
        self.components.iter().all(ExactMatrix::is_invertible)
    }
}

/// f ∘ g (apply g first).
pub fn compose(f: &QuiverMorphism, g: &QuiverMorphism) -> Result<QuiverMorphism, QuiverError> {
    if g.target != f.source {
        return Err(QuiverError::CompositionMismatch);
    }
    Ok(QuiverMorphism {
        source: g.source.clone(),
        target: f.target.clone(),
        components: f
            .components
            .iter()
            .zip(&g.components)
            .map(|(a, b)| a * b)
            .collect(),
    })
}

/// Basis of Hom_𝒬(q, q2): all families (τ_i) satisfying the morphism squares.
pub fn hom_basis(q: &Quiver, q2: &Quiver) -> Result<SolutionSpace, QuiverError> {
    if q.n() != q2.n() {
        return Err(QuiverError::PointCountMismatch(q.n(), q2.n()));
    }
    let shapes: Vec<(usize, usize)> = (0..q.n()).map(|i| (q2.dims[i], q.dims[i])).collect();
    let mut constraints = Vec::new();
    for j in 0..q.n() {
        for i in 0..q.n() {
            constraints.push(Constraint::intertwine(
                i,
                j,
                q.map(j, i),
                q2.map(j, i),
                q2.dims[j],
                q.dims[i],
            ));
        }
    }
    solve_homogeneous(&shapes, &constraints).map_err(|e| QuiverError::ShapeMismatch(e.to_string()))
}

/// Turns a solution-space element into a checked morphism.
pub fn morphism_from_family(
    q: &Quiver,
    q2: &Quiver,
    family: Vec<ExactMatrix>,
) -> Result<QuiverMorphism, QuiverError> {
    QuiverMorphism::new(q.clone(), q2.clone(), family)
}

/// An object of ℒ: spaces with invertible monodromies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalSystemQuiver {
    dims: Vec<usize>,
    monodromies: Vec<ExactMatrix>,
}

impl LocalSystemQuiver {
    pub fn new(dims: Vec<usize>, monodromies: Vec<ExactMatrix>) -> Result<Self, QuiverError> {
        if dims.len() != monodromies.len() {
            return Err(QuiverError::PointCountMismatch(
                dims.len(),
                monodromies.len(),
            ));
        }
        for (i, (d, l)) in dims.iter().zip(&monodromies).enumerate() {
            if l.shape() != (*d, *d) {
                return Err(QuiverError::ShapeMismatch(format!(
                    "l_{} is {}x{}, expected {}x{}",
                    i + 1,
                    l.rows(),
                    l.cols(),
                    d,
                    d
                )));
            }
            if !l.is_invertible() {
                return Err(QuiverError::MonodromyNotInvertible(i + 1));
            }
        }
        Ok(LocalSystemQuiver { dims, monodromies })
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn monodromy(&self, i: usize) -> &ExactMatrix {
        &self.monodromies[i]
    }
}

/// A morphism in ℒ: components intertwining the monodromies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalSystemMorphism {
    pub source: LocalSystemQuiver,
    pub target: LocalSystemQuiver,
    pub components: Vec<ExactMatrix>,
}

impl LocalSystemMorphism {
    pub fn new(
        source: LocalSystemQuiver,
        target: LocalSystemQuiver,
        components: Vec<ExactMatrix>,
    ) -> Result<Self, QuiverError> {
        if source.n() != target.n() || components.len() != source.n() {
            return Err(QuiverError::PointCountMismatch(source.n(), target.n()));
        }
        for i in 0..source.n() {
            let lhs = &components[i] * source.monodromy(i);
            let rhs = target.monodromy(i) * &components[i];
            if lhs != rhs {
                return Err(QuiverError::ShapeMismatch(format!(
                    "intertwining fails at point {}",
                    i + 1
                )));
            }
        }
        Ok(LocalSystemMorphism {
            source,
            target,
            components,
        })
    }
}

/// Basis of Hom_ℒ.
pub fn hom_local_system(
    a: &LocalSystemQuiver,
    b: &LocalSystemQuiver,
) -> Result<SolutionSpace, QuiverError> {
    if a.n() != b.n() {
        return Err(QuiverError::PointCountMismatch(a.n(), b.n()));
    }
    let shapes: Vec<(usize, usize)> = (0..a.n()).map(|i| (b.dims[i], a.dims[i])).collect();
    let constraints: Vec<Constraint> = (0..a.n())
        .map(|i| Constraint::intertwine(i, i, a.monodromy(i), b.monodromy(i), b.dims[i], a.dims[i]))
        .collect();
    solve_homogeneous(&shapes, &constraints).map_err(|e| QuiverError::ShapeMismatch(e.to_string()))
}

/// Object level of the vanishing-cycle functor: L_i = M_i, l_i = 1 + m_{ii}.
pub fn vanishing_cycles(q: &Quiver) -> LocalSystemQuiver {
    LocalSystemQuiver {
        dims: q.dims.clone(),
        monodromies: (0..q.n()).map(|i| q.one_plus_diag(i)).collect(),
    }
}

/// Morphism level: identical components, which intertwine automatically
/// (the morphism square at i = j gives τ_i·m_{ii} = m'_{ii}·τ_i).
pub fn vanishing_cycles_map(f: &QuiverMorphism) -> LocalSystemMorphism {
    LocalSystemMorphism::new(
        vanishing_cycles(&f.source),
        vanishing_cycles(&f.target),
        f.components.clone(),
    )
    .expect("vanishing cycles of a valid morphism always intertwines")
}

// --- JSON ---
// {"n": 2, "dims": [1, 1], "maps": {"2,1": [[...]], ...}}, 1-based "j,i" keys,
// omitted keys default to the zero map.

impl Serialize for Quiver {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut maps = BTreeMap::new();
        for j in 0..self.n() {
            for i in 0..self.n() {
                if !self.maps[j][i].is_zero() {
                    maps.insert(format!("{},{}", j + 1, i + 1), &self.maps[j][i]);
                }
            }
        }
        let mut state = serde_json::Map::new();
        state.insert("n".into(), self.n().into());
        state.insert(
            "dims".into(),
            serde_json::to_value(&self.dims).map_err(serde::ser::Error::custom)?,
        );
        state.insert(
            "maps".into(),
            serde_json::to_value(&maps).map_err(serde::ser::Error::custom)?,
        );
        serde_json::Value::Object(state).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Quiver {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            n: usize,
            dims: Vec<usize>,
            #[serde(default)]
            maps: BTreeMap<String, ExactMatrix>,
        }
        let raw = Raw::deserialize(deserializer)?;
        if raw.dims.len() != raw.n {
            return Err(D::Error::custom(format!(
                "quiver declares n={} but {} dims",
                raw.n,
                raw.dims.len()
            )));
        }
        let mut q = Quiver::zero(raw.dims.clone());
        for (key, m) in raw.maps {
            let (j, i) = parse_pair_key(&key).map_err(D::Error::custom)?;
            if j == 0 || i == 0 || j > raw.n || i > raw.n {
                return Err(D::Error::custom(format!("map key {key:?} out of range")));
            }
            if m.shape() != (raw.dims[j - 1], raw.dims[i - 1]) {
                return Err(D::Error::custom(format!(
                    "map {key:?} has shape {}x{}, expected {}x{}",
                    m.rows(),
                    m.cols(),
                    raw.dims[j - 1],
                    raw.dims[i - 1]
                )));
            }
            q.maps[j - 1][i - 1] = m;
        }
        q.check_invertibility().map_err(D::Error::custom)?;
        Ok(q)
    }
}

pub(crate) fn parse_pair_key(key: &str) -> Result<(usize, usize), String> {
    let mut parts = key.split(',');
    let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(format!("bad map key {key:?}, expected \"j,i\""));
    };
    let j = a.trim().parse::<usize>().map_err(|e| e.to_string())?;
    let i = b.trim().parse::<usize>().map_err(|e| e.to_string())?;
    Ok((j, i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;

    fn q1(m11: i64) -> Quiver {
        Quiver::new(
            vec![1],
            vec![vec![ExactMatrix::from_int_rows(&[&[m11]])]],
        )
        .unwrap()
    }

    #[test]
    fn validation_examples() {
        // m_{11} = [[0]]: 1 + 0 = 1 invertible
        assert!(validate_quiver(&q1(0)).is_ok());
        // m_{11} = [[-1]]: 1 + (-1) = 0 not invertible
        let bad = Quiver::new(
            vec![1],
            vec![vec![ExactMatrix::from_int_rows(&[&[-1]])]],
        );
        assert_eq!(bad.unwrap_err(), QuiverError::NotInvertible(1));
        // n=2, all maps zero: ok
        assert!(validate_quiver(&Quiver::zero(vec![1, 1])).is_ok());
    }

    #[test]
    fn hom_dimension_examples() {
        // endomorphisms of the 1-point zero quiver: scalars
        let a = q1(0);
        assert_eq!(hom_basis(&a, &a).unwrap().dim(), 1);
        // τ·1 = 0·τ forces τ = 0
        let b = q1(1);
        assert_eq!(hom_basis(&b, &a).unwrap().dim(), 0);
        // two unconstrained scalars
        let z = Quiver::zero(vec![1, 1]);
        assert_eq!(hom_basis(&z, &z).unwrap().dim(), 2);
    }

    #[test]
    fn identity_lies_in_hom_span() {
        let q = Quiver::new(
            vec![2, 1],
            vec![
                vec![
                    ExactMatrix::from_int_rows(&[&[0, 1], &[0, 0]]),
                    ExactMatrix::from_int_rows(&[&[1], &[2]]),
                ],
                vec![
                    ExactMatrix::from_int_rows(&[&[1, -1]]),
                    ExactMatrix::from_int_rows(&[&[0]]),
                ],
            ],
        );
        // adjust: the quiver must satisfy no condition between maps, only 1+m_ii invertible
        let q = q.unwrap();
        let hom = hom_basis(&q, &q).unwrap();
        let id: Vec<ExactMatrix> = q.dims().iter().map(|&d| ExactMatrix::identity(d)).collect();
        assert!(hom.contains(&id));
    }

    #[test]
    fn composition_and_isomorphism() {
        let a = q1(2);
        let id = QuiverMorphism::identity(&a);
        let double = QuiverMorphism::new(
            a.clone(),
            a.clone(),
            vec![ExactMatrix::from_int_rows(&[&[2]])],
        )
        .unwrap();
        let c = compose(&id, &double).unwrap();
        assert_eq!(c, double);
        assert!(double.is_isomorphism());
        let comp = compose(&double, &double).unwrap();
        assert!(comp.is_isomorphism());
        assert_eq!(*comp.components[0].get(0, 0), Scalar::from_int(4));
    }

    #[test]
    fn vanishing_cycle_examples() {
        // m11 = 0 -> l = 1
        let vc = vanishing_cycles(&q1(0));
        assert!(vc.monodromy(0).is_identity());
        // m11 = 1 -> l = 2
        let vc = vanishing_cycles(&q1(1));
        assert_eq!(*vc.monodromy(0).get(0, 0), Scalar::from_int(2));
    }

    #[test]
    fn vanishing_cycles_functorial_on_morphisms() {
        let a = q1(1);
        let f = QuiverMorphism::new(
            a.clone(),
            a.clone(),
            vec![ExactMatrix::from_int_rows(&[&[3]])],
        )
        .unwrap();
        let g = QuiverMorphism::new(
            a.clone(),
            a.clone(),
            vec![ExactMatrix::from_int_rows(&[&[-2]])],
        )
        .unwrap();
        let lhs = vanishing_cycles_map(&compose(&f, &g).unwrap());
        let rhs = LocalSystemMorphism::new(
            lhs.source.clone(),
            lhs.target.clone(),
            vanishing_cycles_map(&f)
                .components
                .iter()
                .zip(&vanishing_cycles_map(&g).components)
                .map(|(x, y)| x * y)
                .collect(),
        )
        .unwrap();
        assert_eq!(lhs.components, rhs.components);
        // vc(id) = id
        let vid = vanishing_cycles_map(&QuiverMorphism::identity(&a));
        assert!(vid.components[0].is_identity());
    }

    #[test]
    fn direct_sum_hom_additivity_small() {
        let a = q1(0);
        let b = q1(1);
        let r = q1(0);
        let sum = a.direct_sum(&b).unwrap();
        let d_sum = hom_basis(&sum, &r).unwrap().dim();
        let d_a = hom_basis(&a, &r).unwrap().dim();
        let d_b = hom_basis(&b, &r).unwrap().dim();
        assert_eq!(d_sum, d_a + d_b);
    }

    #[test]
    fn json_roundtrip_with_default_zero_maps() {
        let text = r#"{"n":2,"dims":[1,2],"maps":{"2,1":[[1],[0]]}}"#;
        let q: Quiver = serde_json::from_str(text).unwrap();
        assert!(q.map(0, 0).is_zero());
        assert!(q.map(1, 1).is_zero());
        assert_eq!(q.map(1, 0).shape(), (2, 1));
        let back = serde_json::to_string(&q).unwrap();
        let q2: Quiver = serde_json::from_str(&back).unwrap();
        assert_eq!(q, q2);
    }
}
