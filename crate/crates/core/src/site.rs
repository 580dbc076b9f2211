//! Finite sites with Alexandrov semantics.
//!
//! A site is a finite family of opens, each a set of points, ordered by
//! inclusion and closed under pairwise intersection, together with declared
//! covers. Every point has a minimal open, so stalks of a stack collapse to
//! the category at that open. Points are T₀: distinct points have distinct
//! minimal opens, which lets the specialization order live on points.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SiteError {
    #[error("unknown open {0:?}")]
    UnknownOpen(String),
    #[error("unknown point {0:?}")]
    UnknownPoint(String),
    #[error("duplicate open name {0:?}")]
    DuplicateOpen(String),
    #[error("opens {0:?} and {1:?} have the same point set")]
    NotAntisymmetric(String, String),
    #[error("intersection of {0:?} and {1:?} is not a declared open")]
    NotIntersectionClosed(String, String),
    #[error("point {0:?} has no minimal open among the declared opens")]
    NoMinimalOpen(String),
    #[error("points {0:?} and {1:?} share a minimal open (site must be T0)")]
    NotT0(String, String),
    #[error("declared order pair ({0:?} ≤ {1:?}) contradicts the point sets")]
    BadOrderPair(String, String),
    #[error("declared minimal open of {0:?} is wrong")]
    BadMinimalOpen(String),
    #[error("cover of {0:?} is invalid: {1}")]
    BadCover(String, String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpenSet {
    pub name: String,
    pub points: BTreeSet<usize>,
}

/// A finite poset site.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosetSite {
    pub points: Vec<String>,
    pub opens: Vec<OpenSet>,
    /// covers[open] = declared covering families (indices into `opens`)
    pub covers: BTreeMap<usize, Vec<Vec<usize>>>,
    /// minimal_open[point] = index of its minimal open
    pub minimal_open: Vec<usize>,
}

impl PosetSite {
    pub fn open_index(&self, name: &str) -> Result<usize, SiteError> {
        self.opens
            .iter()
            .position(|o| o.name == name)
            .ok_or_else(|| SiteError::UnknownOpen(name.to_string()))
    }

    pub fn point_index(&self, name: &str) -> Result<usize, SiteError> {
        self.points
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| SiteError::UnknownPoint(name.to_string()))
    }

    /// U ≤ V: inclusion of point sets.
    pub fn leq(&self, u: usize, v: usize) -> bool {
        self.opens[u].points.is_subset(&self.opens[v].points)
    }

    /// The declared open whose points are the intersection.
    pub fn intersection(&self, u: usize, v: usize) -> Result<usize, SiteError> {
        let meet: BTreeSet<usize> = self.opens[u]
            .points
            .intersection(&self.opens[v].points)
            .copied()
            .collect();
        self.opens
            .iter()
            .position(|o| o.points == meet)
            .ok_or_else(|| {
                SiteError::NotIntersectionClosed(
                    self.opens[u].name.clone(),
                    self.opens[v].name.clone(),
                )
            })
    }

    /// Specialization order on points: x ≤ y iff U_x ⊆ U_y.
    pub fn point_leq(&self, x: usize, y: usize) -> bool {
        self.leq(self.minimal_open[x], self.minimal_open[y])
    }

    /// Hasse edges (y, x) of the specialization order restricted to an open:
    /// x < y with no point of the open strictly between.
    pub fn hasse_edges(&self, open: usize) -> Vec<(usize, usize)> {
        let pts: Vec<usize> = self.opens[open].points.iter().copied().collect();
        let mut edges = Vec::new();
        for &y in &pts {
            for &x in &pts {
                if x == y || !self.point_leq(x, y) {
                    continue;
                }
                let between = pts.iter().any(|&z| {
                    z != x && z != y && self.point_leq(x, z) && self.point_leq(z, y)
                });
                if !between {
                    edges.push((y, x));
                }
            }
        }
        edges
    }

    /// All comparable pairs (y, x) with x < y inside an open.
    pub fn strict_pairs(&self, open: usize) -> Vec<(usize, usize)> {
        let pts: Vec<usize> = self.opens[open].points.iter().copied().collect();
        let mut out = Vec::new();
        for &y in &pts {
            for &x in &pts {
                if x != y && self.point_leq(x, y) {
                    out.push((y, x));
                }
            }
        }
        out
    }

    /// Connected components of the comparability graph of an open.
    pub fn components(&self, open: usize) -> Vec<Vec<usize>> {
        let pts: Vec<usize> = self.opens[open].points.iter().copied().collect();
        let mut comp: BTreeMap<usize, usize> = BTreeMap::new();
        let mut count = 0;
        for &start in &pts {
            if comp.contains_key(&start) {
                continue;
            }
            let id = count;
            count += 1;
            let mut stack = vec![start];
            while let Some(p) = stack.pop() {
                if comp.insert(p, id).is_some() {
                    continue;
                }
                for &qpt in &pts {
                    if qpt != p
                        && !comp.contains_key(&qpt)
                        && (self.point_leq(p, qpt) || self.point_leq(qpt, p))
                    {
                        stack.push(qpt);
                    }
                }
            }
        }
        let mut groups = vec![Vec::new(); count];
        for (&p, &id) in &comp {
            groups[id].push(p);
        }
        groups
    }

    pub fn declared_covers(&self, open: usize) -> &[Vec<usize>] {
        self.covers.get(&open).map_or(&[], |v| v.as_slice())
    }

    /// Checks that the family covers the open.
    pub fn validate_cover(&self, open: usize, members: &[usize]) -> Result<(), SiteError> {
        let mut union = BTreeSet::new();
        for &m in members {
            if !self.leq(m, open) {
                return Err(SiteError::BadCover(
                    self.opens[open].name.clone(),
                    format!("member {:?} is not contained in it", self.opens[m].name),
                ));
            }
            union.extend(self.opens[m].points.iter().copied());
        }
        if union != self.opens[open].points {
            return Err(SiteError::BadCover(
                self.opens[open].name.clone(),
                "members do not cover all points".into(),
            ));
        }
        Ok(())
    }

    /// Builds a site from named data, validating every structural invariant.
    pub fn build(
        point_names: Vec<String>,
        named_opens: Vec<(String, Vec<String>)>,
        declared_order: Vec<(String, String)>,
        declared_minimal: BTreeMap<String, String>,
        named_covers: BTreeMap<String, Vec<Vec<String>>>,
    ) -> Result<Self, SiteError> {
        let mut opens = Vec::new();
        let point_index = |name: &str| -> Result<usize, SiteError> {
            point_names
                .iter()
                .position(|p| p == name)
                .ok_or_else(|| SiteError::UnknownPoint(name.to_string()))
        };
        for (name, pts) in &named_opens {
            if opens.iter().any(|o: &OpenSet| o.name == *name) {
                return Err(SiteError::DuplicateOpen(name.clone()));
            }
            let points = pts
                .iter()
                .map(|p| point_index(p))
                .collect::<Result<BTreeSet<_>, _>>()?;
            opens.push(OpenSet {
                name: name.clone(),
                points,
            });
        }
        // antisymmetry: point sets are distinct
        for i in 0..opens.len() {
            for j in i + 1..opens.len() {
                if opens[i].points == opens[j].points {
                    return Err(SiteError::NotAntisymmetric(
                        opens[i].name.clone(),
                        opens[j].name.clone(),
                    ));
                }
            }
        }
        let mut site = PosetSite {
            points: point_names,
            opens,
            covers: BTreeMap::new(),
            minimal_open: Vec::new(),
        };
        // intersection closure
        for u in 0..site.opens.len() {
            for v in u + 1..site.opens.len() {
                site.intersection(u, v)?;
            }
        }
        // minimal opens
        let mut minimal = Vec::with_capacity(site.points.len());
        for (x, xname) in site.points.iter().enumerate() {
            let candidates: Vec<usize> = (0..site.opens.len())
                .filter(|&u| site.opens[u].points.contains(&x))
                .collect();
            let best = candidates
                .iter()
                .copied()
                .find(|&u| candidates.iter().all(|&v| site.leq(u, v)))
                .ok_or_else(|| SiteError::NoMinimalOpen(xname.clone()))?;
            minimal.push(best);
        }
        site.minimal_open = minimal;
        // T0
        for x in 0..site.points.len() {
            for y in x + 1..site.points.len() {
                if site.minimal_open[x] == site.minimal_open[y] {
                    return Err(SiteError::NotT0(
                        site.points[x].clone(),
                        site.points[y].clone(),
                    ));
                }
            }
        }
        // declared order must agree with inclusion
        for (a, b) in &declared_order {
            let (u, v) = (site.open_index(a)?, site.open_index(b)?);
            if !site.leq(u, v) {
                return Err(SiteError::BadOrderPair(a.clone(), b.clone()));
            }
        }
        // declared minimal opens must agree
        for (pt, open) in &declared_minimal {
            let x = site.point_index(pt)?;
            let u = site.open_index(open)?;
            if site.minimal_open[x] != u {
                return Err(SiteError::BadMinimalOpen(pt.clone()));
            }
        }
        // covers
        for (open_name, families) in &named_covers {
            let u = site.open_index(open_name)?;
            let mut indexed = Vec::new();
            for family in families {
                let members = family
                    .iter()
                    .map(|m| site.open_index(m))
                    .collect::<Result<Vec<_>, _>>()?;
                site.validate_cover(u, &members)?;
                indexed.push(members);
            }
            site.covers.insert(u, indexed);
        }
        Ok(site)
    }

    /// The finite model of the circle: two open arcs glued along two cells.
    /// Points: a, b open (arc interiors); c, d closed. U_c = {a, b, c},
    /// U_d = {a, b, d}; the whole space is covered by U_c and U_d.
    pub fn pseudo_circle() -> PosetSite {
        PosetSite::build(
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![
                ("Ua".into(), vec!["a".into()]),
                ("Ub".into(), vec!["b".into()]),
                ("Uc".into(), vec!["a".into(), "b".into(), "c".into()]),
                ("Ud".into(), vec!["a".into(), "b".into(), "d".into()]),
                ("Uab".into(), vec!["a".into(), "b".into()]),
                (
                    "X".into(),
                    vec!["a".into(), "b".into(), "c".into(), "d".into()],
                ),
                ("E".into(), vec![]),
            ],
            vec![],
            BTreeMap::new(),
            BTreeMap::from([(
                "X".into(),
                vec![vec!["Uc".into(), "Ud".into()]],
            )]),
        )
        .expect("pseudo-circle site is valid")
    }
}

// JSON: {"opens": [{"name": "U", "points": ["x"]}...], "order": [["V","U"]],
//        "points": {"x": "V"}, "covers": {"U": [["V","W"]]}}
impl Serialize for PosetSite {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let opens: Vec<serde_json::Value> = self
            .opens
            .iter()
            .map(|o| {
                serde_json::json!({
                    "name": o.name,
                    "points": o.points.iter().map(|&p| self.points[p].clone()).collect::<Vec<_>>(),
                })
            })
            .collect();
        let points: BTreeMap<String, String> = self
            .points
            .iter()
            .enumerate()
            .map(|(x, name)| (name.clone(), self.opens[self.minimal_open[x]].name.clone()))
            .collect();
        let covers: BTreeMap<String, Vec<Vec<String>>> = self
            .covers
            .iter()
            .map(|(&u, fams)| {
                (
                    self.opens[u].name.clone(),
                    fams.iter()
                        .map(|f| f.iter().map(|&m| self.opens[m].name.clone()).collect())
                        .collect(),
                )
            })
            .collect();
        serde_json::json!({"opens": opens, "points": points, "covers": covers})
            .serialize(serializer)
    }
}

#[derive(Deserialize)]
struct RawSite {
    opens: Vec<RawOpen>,
    #[serde(default)]
    order: Vec<(String, String)>,
    #[serde(default)]
    points: BTreeMap<String, String>,
    #[serde(default)]
    covers: BTreeMap<String, Vec<Vec<String>>>,
}

#[derive(Deserialize)]
struct RawOpen {
    name: String,
    points: Vec<String>,
}

impl<'de> Deserialize<'de> for PosetSite {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawSite::deserialize(deserializer)?;
        let mut point_names: Vec<String> = Vec::new();
        for o in &raw.opens {
            for p in &o.points {
                if !point_names.contains(p) {
                    point_names.push(p.clone());
                }
            }
        }
        let named_opens = raw
            .opens
            .into_iter()
            .map(|o| (o.name, o.points))
            .collect();
        PosetSite::build(point_names, named_opens, raw.order, raw.points, raw.covers)
            .map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pseudo_circle_structure() {
        let s = PosetSite::pseudo_circle();
        let x = s.open_index("X").unwrap();
        let uc = s.open_index("Uc").unwrap();
        let ud = s.open_index("Ud").unwrap();
        let uab = s.open_index("Uab").unwrap();
        assert!(s.leq(uc, x));
        assert_eq!(s.intersection(uc, ud).unwrap(), uab);
        // minimal opens
        let a = s.point_index("a").unwrap();
        let c = s.point_index("c").unwrap();
        assert_eq!(s.opens[s.minimal_open[a]].name, "Ua");
        assert_eq!(s.opens[s.minimal_open[c]].name, "Uc");
        // specialization: a ≤ c (a lies in every open containing c)
        assert!(s.point_leq(a, c));
        assert!(!s.point_leq(c, a));
        // Hasse edges of X: the four arcs of the circle
        let edges = s.hasse_edges(x);
        assert_eq!(edges.len(), 4);
        // one connected component
        assert_eq!(s.components(x).len(), 1);
    }

    #[test]
    fn invalid_sites_rejected() {
        // duplicate point sets break antisymmetry
        let bad = PosetSite::build(
            vec!["x".into()],
            vec![
                ("U".into(), vec!["x".into()]),
                ("V".into(), vec!["x".into()]),
            ],
            vec![],
            BTreeMap::new(),
            BTreeMap::new(),
        );
        assert!(matches!(bad, Err(SiteError::NotAntisymmetric(_, _))));

        // missing intersection
        let bad = PosetSite::build(
            vec!["x".into(), "y".into(), "z".into()],
            vec![
                ("U".into(), vec!["x".into(), "y".into()]),
                ("V".into(), vec!["y".into(), "z".into()]),
            ],
            vec![],
            BTreeMap::new(),
            BTreeMap::new(),
        );
        assert!(matches!(bad, Err(SiteError::NotIntersectionClosed(_, _))));
    }

    #[test]
    fn cover_validation() {
        let s = PosetSite::pseudo_circle();
        let x = s.open_index("X").unwrap();
        let uc = s.open_index("Uc").unwrap();
        assert!(s.validate_cover(x, &[uc]).is_err());
        let ud = s.open_index("Ud").unwrap();
        s.validate_cover(x, &[uc, ud]).unwrap();
    }

    #[test]
    fn json_roundtrip() {
        let s = PosetSite::pseudo_circle();
        let text = serde_json::to_string(&s).unwrap();
        let back: PosetSite = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }
}
