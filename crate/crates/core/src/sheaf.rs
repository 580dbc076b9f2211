//! Local systems on the opens of a finite site.
//!
//! A local system on an open U assigns a space to each point and an
//! invertible map V_y → V_x along every Hasse edge x ⋖ y of the
//! specialization order inside U, with all composites path-independent.
//! These are the concrete objects used by the descent, gluing, and
//! weak-isomorphism machinery; monodromy appears through zigzags of the
//! order (the pseudo-circle being the smallest interesting case).

use crate::matrix::ExactMatrix;
use crate::site::PosetSite;
use crate::solve::{solve_homogeneous, Constraint, SolutionSpace};
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SheafError {
    #[error("object lives on a different site")]
    SiteMismatch,
    #[error("object lives on open {0:?}, expected {1:?}")]
    OpenMismatch(String, String),
    #[error("missing data at point {0:?}")]
    MissingPoint(String),
    #[error("missing structure map for edge {0:?} -> {1:?}")]
    MissingEdge(String, String),
    #[error("structure map {0:?} -> {1:?} has wrong shape or is singular")]
    BadEdge(String, String),
    #[error("transport is path-dependent between {0:?} and {1:?}")]
    PathDependent(String, String),
    #[error("{0}")]
    Other(String),
}

/// A local system on one open of a site.
#[derive(Debug, Clone)]
pub struct OpenLocalSystem {
    pub site: Arc<PosetSite>,
    pub open: usize,
    /// dims[point] for every point of the open
    pub dims: BTreeMap<usize, usize>,
    /// maps[(y, x)]: V_y → V_x for every Hasse edge x ⋖ y inside the open
    pub maps: BTreeMap<(usize, usize), ExactMatrix>,
}

impl PartialEq for OpenLocalSystem {
    fn eq(&self, other: &Self) -> bool {
        *self.site == *other.site
            && self.open == other.open
            && self.dims == other.dims
            && self.maps == other.maps
    }
}

impl OpenLocalSystem {
    /// The constant rank-r system on an open.
    pub fn constant(site: Arc<PosetSite>, open: usize, rank: usize) -> Self {
        let dims = site.opens[open]
            .points
            .iter()
            .map(|&p| (p, rank))
            .collect();
        let maps = site
            .hasse_edges(open)
            .into_iter()
            .map(|e| (e, ExactMatrix::identity(rank)))
            .collect();
        OpenLocalSystem {
            site,
            open,
            dims,
            maps,
        }
    }

    fn point_name(&self, p: usize) -> String {
        self.site.points[p].clone()
    }

    /// Transport map V_y → V_x for any comparable pair x < y in the open,
    /// composed along Hasse edges (path independence is a validity invariant).
    pub fn transport(&self, y: usize, x: usize) -> Result<ExactMatrix, SheafError> {
        if x == y {
            return Ok(ExactMatrix::identity(
                *self
                    .dims
                    .get(&x)
                    .ok_or_else(|| SheafError::MissingPoint(self.point_name(x)))?,
            ));
        }
        if let Some(m) = self.maps.get(&(y, x)) {
            return Ok(m.clone());
        }
        // first Hasse step down from y toward x
        for (&(yy, z), m) in &self.maps {
            if yy == y && self.site.point_leq(x, z) {
                let rest = self.transport(z, x)?;
                return Ok(&rest * m);
            }
        }
        Err(SheafError::MissingEdge(
            self.point_name(y),
            self.point_name(x),
        ))
    }

    /// Checks shapes, invertibility, and path independence of transport.
    pub fn validate(&self) -> Result<(), SheafError> {
        let pts = &self.site.opens[self.open].points;
        for &p in pts {
            if !self.dims.contains_key(&p) {
                return Err(SheafError::MissingPoint(self.point_name(p)));
            }
        }
        if self.dims.len() != pts.len() {
            return Err(SheafError::Other("dims at points outside the open".into()));
        }
        let edges = self.site.hasse_edges(self.open);
        if self.maps.len() != edges.len() {
            return Err(SheafError::Other(format!(
                "expected {} structure maps, found {}",
                edges.len(),
                self.maps.len()
            )));
        }
        for (y, x) in &edges {
            let m = self
                .maps
                .get(&(*y, *x))
                .ok_or_else(|| SheafError::MissingEdge(self.point_name(*y), self.point_name(*x)))?;
            if m.shape() != (self.dims[x], self.dims[y]) || !m.is_invertible() {
                return Err(SheafError::BadEdge(
                    self.point_name(*y),
                    self.point_name(*x),
                ));
            }
        }
        // path independence: every Hasse step refines the direct transport
        for (y, x) in self.site.strict_pairs(self.open) {
            let direct = self.transport(y, x)?;
            for (&(yy, z), m) in &self.maps {
                if yy == y && (z == x || self.site.point_leq(x, z)) {
                    let via = &self.transport(z, x)? * m;
                    if via != direct {
                        return Err(SheafError::PathDependent(
                            self.point_name(y),
                            self.point_name(x),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Restriction to a smaller open.
    pub fn restrict(&self, open: usize) -> Result<OpenLocalSystem, SheafError> {
        if !self.site.leq(open, self.open) {
            return Err(SheafError::OpenMismatch(
                self.site.opens[open].name.clone(),
                self.site.opens[self.open].name.clone(),
            ));
        }
        let dims: BTreeMap<usize, usize> = self.site.opens[open]
            .points
            .iter()
            .map(|&p| (p, self.dims[&p]))
            .collect();
        let mut maps = BTreeMap::new();
        for (y, x) in self.site.hasse_edges(open) {
            maps.insert((y, x), self.transport(y, x)?);
        }
        Ok(OpenLocalSystem {
            site: self.site.clone(),
            open,
            dims,
            maps,
        })
    }

    /// Slot order for morphisms: points of the open in index order.
    pub fn slot_points(&self) -> Vec<usize> {
        self.site.opens[self.open].points.iter().copied().collect()
    }
}

/// Basis of Hom(x, y) over one open: per-point families commuting with the
/// structure maps along every Hasse edge.
pub fn hom_open_ls(
    x: &OpenLocalSystem,
    y: &OpenLocalSystem,
) -> Result<SolutionSpace, SheafError> {
    if *x.site != *y.site {
        return Err(SheafError::SiteMismatch);
    }
    if x.open != y.open {
        return Err(SheafError::OpenMismatch(
            x.site.opens[x.open].name.clone(),
            y.site.opens[y.open].name.clone(),
        ));
    }
    let points = x.slot_points();
    let index_of: BTreeMap<usize, usize> =
        points.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    let shapes: Vec<(usize, usize)> = points.iter().map(|p| (y.dims[p], x.dims[p])).collect();
    let mut constraints = Vec::new();
    for ((yy, xx), m) in &x.maps {
        let m2 = &y.maps[&(*yy, *xx)];
        // f_x ∘ m = m' ∘ f_y
        constraints.push(Constraint::intertwine(
            index_of[yy],
            index_of[xx],
            m,
            m2,
            y.dims[xx],
            x.dims[yy],
        ));
    }
    solve_homogeneous(&shapes, &constraints).map_err(|e| SheafError::Other(e.to_string()))
}

/// Builds a local system from per-point dims and per-edge maps given by
/// point names; missing edges default to identities when square.
pub fn open_ls_from_parts(
    site: Arc<PosetSite>,
    open: &str,
    dims: &BTreeMap<String, usize>,
    maps: &BTreeMap<(String, String), ExactMatrix>,
) -> Result<OpenLocalSystem, SheafError> {
    let open = site
        .open_index(open)
        .map_err(|e| SheafError::Other(e.to_string()))?;
    let mut dim_map = BTreeMap::new();
    for (name, d) in dims {
        let p = site
            .point_index(name)
            .map_err(|e| SheafError::Other(e.to_string()))?;
        dim_map.insert(p, *d);
    }
    let mut edge_map = BTreeMap::new();
    for ((yname, xname), m) in maps {
        let y = site
            .point_index(yname)
            .map_err(|e| SheafError::Other(e.to_string()))?;
        let x = site
            .point_index(xname)
            .map_err(|e| SheafError::Other(e.to_string()))?;
        edge_map.insert((y, x), m.clone());
    }
    for (y, x) in site.hasse_edges(open) {
        edge_map.entry((y, x)).or_insert_with(|| {
            ExactMatrix::identity(*dim_map.get(&x).unwrap_or(&0))
        });
    }
    let obj = OpenLocalSystem {
        site,
        open,
        dims: dim_map,
        maps: edge_map,
    };
    obj.validate()?;
    Ok(obj)
}

/// JSON form of a local system on an open (the site travels separately):
/// {"open": "X", "dims": {"a": 1, ...}, "maps": {"c>a": [[..]], ...}} —
/// the key "y>x" names the structure map V_y → V_x along the Hasse edge
/// x ⋖ y; omitted edges default to identities.
pub fn open_ls_to_json(obj: &OpenLocalSystem) -> serde_json::Value {
    let site = &obj.site;
    let dims: BTreeMap<String, usize> = obj
        .dims
        .iter()
        .map(|(&p, &d)| (site.points[p].clone(), d))
        .collect();
    let maps: BTreeMap<String, &ExactMatrix> = obj
        .maps
        .iter()
        .map(|(&(y, x), m)| (format!("{}>{}", site.points[y], site.points[x]), m))
        .collect();
    serde_json::json!({
        "open": site.opens[obj.open].name,
        "dims": dims,
        "maps": maps,
    })
}

/// Parses the JSON form against a site.
pub fn open_ls_from_json(
    site: Arc<PosetSite>,
    value: &serde_json::Value,
) -> Result<OpenLocalSystem, SheafError> {
    let open = value
        .get("open")
        .and_then(|v| v.as_str())
        .ok_or_else(|| SheafError::Other("object needs an \"open\" name".into()))?;
    let mut dims = BTreeMap::new();
    if let Some(map) = value.get("dims").and_then(|v| v.as_object()) {
        for (name, d) in map {
            dims.insert(
                name.clone(),
                d.as_u64()
                    .ok_or_else(|| SheafError::Other(format!("bad dimension for {name:?}")))?
                    as usize,
            );
        }
    }
    let mut maps = BTreeMap::new();
    if let Some(map) = value.get("maps").and_then(|v| v.as_object()) {
        for (key, m) in map {
            let (y, x) = key
                .split_once('>')
                .ok_or_else(|| SheafError::Other(format!("bad edge key {key:?}")))?;
            let matrix = crate::matrix::matrix_from_json(m).map_err(SheafError::Other)?;
            maps.insert((y.trim().to_string(), x.trim().to_string()), matrix);
        }
    }
    open_ls_from_parts(site, open, &dims, &maps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;

    fn circle_system(monodromy: i64) -> OpenLocalSystem {
        // on the pseudo-circle X: put the twist on the edge (d -> b)
        let site = Arc::new(PosetSite::pseudo_circle());
        let x = site.open_index("X").unwrap();
        let mut obj = OpenLocalSystem::constant(site.clone(), x, 1);
        let d = site.point_index("d").unwrap();
        let b = site.point_index("b").unwrap();
        obj.maps
            .insert((d, b), ExactMatrix::from_int_rows(&[&[monodromy]]));
        obj
    }

    #[test]
    fn constant_system_validates() {
        let site = Arc::new(PosetSite::pseudo_circle());
        let x = site.open_index("X").unwrap();
        OpenLocalSystem::constant(site, x, 2).validate().unwrap();
    }

    #[test]
    fn twisted_circle_validates_and_is_rigid() {
        let obj = circle_system(2);
        obj.validate().unwrap();
        // endomorphisms of an irrational-monodromy circle system: scalars only
        let h = hom_open_ls(&obj, &obj).unwrap();
        assert_eq!(h.dim(), 1);
        // no isos between different monodromies
        let other = circle_system(3);
        assert_eq!(hom_open_ls(&obj, &other).unwrap().dim(), 0);
        // constant vs constant has hom dim 1
        let site = obj.site.clone();
        let x = site.open_index("X").unwrap();
        let c1 = OpenLocalSystem::constant(site.clone(), x, 1);
        assert_eq!(hom_open_ls(&c1, &c1).unwrap().dim(), 1);
    }

    #[test]
    fn restriction_composes_transport() {
        let obj = circle_system(5);
        let site = obj.site.clone();
        let uc = site.open_index("Uc").unwrap();
        let r = obj.restrict(uc).unwrap();
        r.validate().unwrap();
        assert_eq!(r.dims.len(), 3);
        // restricting to the overlap arc gives the two interior points
        let uab = site.open_index("Uab").unwrap();
        let r2 = obj.restrict(uab).unwrap();
        r2.validate().unwrap();
        assert_eq!(r2.maps.len(), 0);
    }

    #[test]
    fn path_dependence_detected() {
        // on Uc the edges (c->a) and (c->b) are independent; make a diamond
        // with the square site: w below x,y below z
        use std::collections::BTreeMap as Map;
        let site = Arc::new(
            PosetSite::build(
                vec!["w".into(), "x".into(), "y".into(), "z".into()],
                vec![
                    ("Uw".into(), vec!["w".into()]),
                    ("Ux".into(), vec!["w".into(), "x".into()]),
                    ("Uy".into(), vec!["w".into(), "y".into()]),
                    (
                        "Uz".into(),
                        vec!["w".into(), "x".into(), "y".into(), "z".into()],
                    ),
                ],
                vec![],
                Map::new(),
                Map::new(),
            )
            .unwrap(),
        );
        let z = site.open_index("Uz").unwrap();
        let mut obj = OpenLocalSystem::constant(site.clone(), z, 1);
        obj.validate().unwrap();
        // twist one lower edge: transport z→w via x differs from via y
        let zp = site.point_index("z").unwrap();
        let xp = site.point_index("x").unwrap();
        let scale = ExactMatrix::from_int_rows(&[&[7]]);
        obj.maps.insert((zp, xp), scale);
        let err = obj.validate().unwrap_err();
        assert!(matches!(err, SheafError::PathDependent(_, _)));
        let _ = Scalar::one();
    }
}
