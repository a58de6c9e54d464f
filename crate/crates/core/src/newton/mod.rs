//! Newton polyhedra of (possibly shifted) supports, in exact arithmetic.
//!
//! The Newton polyhedron of a support set `S` is `conv(S) + R_{>=0}^n`.
//! Every facet has a componentwise nonnegative normal, so the polyhedron is
//! stored as a list of inequalities `a . x >= c` with `a >= 0`.

mod doubling;
mod faces;
mod nondegen;

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{self, LpOutcome};
use crate::poly::{ExponentVector, Polynomial};
use crate::rational::{self, Rational};

pub use doubling::{doubling_check, flow_square, DoublingCheck};
pub use faces::{all_faces, compact_faces, face_polynomial, CompactFace, Face};
pub use nondegen::{check_nondegenerate, FaceRecord, NondegeneracyConfig, NondegeneracyReport, Verdict, Witness};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NewtonError {
    #[error("support set is empty (zero polynomial)")]
    EmptySupport,
    #[error("support vectors must all have length {0}")]
    MixedDimensions(usize),
    #[error("face point {0:?} is not in the polynomial's support")]
    FaceMismatch(Vec<i64>),
    #[error("linear program failed: {0}")]
    Lp(String),
}

/// Finite set of exponent vectors of a common length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSet {
    n: usize,
    points: Vec<ExponentVector>,
}

impl SupportSet {
    pub fn new(n: usize, points: impl IntoIterator<Item = ExponentVector>) -> Result<Self, NewtonError> {
        let set: BTreeSet<ExponentVector> = points.into_iter().collect();
        if set.iter().any(|p| p.dim() != n) {
            return Err(NewtonError::MixedDimensions(n));
        }
        if set.is_empty() {
            return Err(NewtonError::EmptySupport);
        }
        Ok(SupportSet { n, points: set.into_iter().collect() })
    }

    pub fn from_vecs(points: &[Vec<i64>]) -> Result<Self, NewtonError> {
        let n = points.first().map_or(0, |p| p.len());
        Self::new(n, points.iter().map(|p| ExponentVector(p.clone())))
    }

    pub fn of_polynomial(f: &Polynomial) -> Result<Self, NewtonError> {
        Self::new(f.dim(), f.support())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> &[ExponentVector] {
        &self.points
    }

    /// Adds `b` to every coordinate of every point.
    pub fn shifted(&self, b: i64) -> SupportSet {
        SupportSet { n: self.n, points: self.points.iter().map(|p| p.shift(b)).collect() }
    }
}

/// The half-space `a . x >= c`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Facet {
    pub normal: Vec<Rational>,
    pub offset: Rational,
}

impl Facet {
    pub fn value(&self, p: &[i64]) -> Rational {
        rational::dot_int(&self.normal, p)
    }

    pub fn is_tight(&self, p: &[i64]) -> bool {
        self.value(p) == self.offset
    }

    pub fn contains_rational(&self, p: &[Rational]) -> bool {
        let v = self.normal.iter().zip(p).fold(Rational::zero(), |acc, (a, x)| acc + a * x);
        v >= self.offset
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonData {
    pub support: SupportSet,
    pub vertices: Vec<ExponentVector>,
    pub facets: Vec<Facet>,
    pub distance: Rational,
    pub diagonal_face_dim: usize,
    pub diagonal_face_support: Vec<ExponentVector>,
}

/// JSON image: `{"vertices": [[..]], "facets": [{"a": [..], "c": ..}], "d": .., "k": ..}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonJson {
    pub vertices: Vec<Vec<i64>>,
    pub facets: Vec<FacetJson>,
    #[serde(with = "rational::serde_rational")]
    pub d: Rational,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetJson {
    #[serde(with = "rational::serde_rational_vec")]
    pub a: Vec<Rational>,
    #[serde(with = "rational::serde_rational")]
    pub c: Rational,
}

impl NewtonData {
    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    pub fn to_json(&self) -> NewtonJson {
        NewtonJson {
            vertices: self.vertices.iter().map(|v| v.0.clone()).collect(),
            facets: self
                .facets
                .iter()
                .map(|f| FacetJson { a: f.normal.clone(), c: f.offset.clone() })
                .collect(),
            d: self.distance.clone(),
            k: self.diagonal_face_dim,
        }
    }

    /// Whether a rational point satisfies every facet inequality.
    pub fn contains(&self, p: &[Rational]) -> bool {
        self.facets.iter().all(|f| f.contains_rational(p))
    }

    /// Facets tight at the diagonal point `(d, ..., d)`.
    fn facets_tight_at_diagonal(&self) -> Vec<&Facet> {
        let diag = vec![self.distance.clone(); self.dim()];
        self.facets
            .iter()
            .filter(|f| f.normal.iter().zip(&diag).fold(Rational::zero(), |acc, (a, x)| acc + a * x) == f.offset)
            .collect()
    }
}

/// All `k`-subsets of `0..m`, in lexicographic order.
pub(crate) fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > m {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + m - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn dominated(p: &ExponentVector, by: &ExponentVector) -> bool {
    p != by && by.0.iter().zip(&p.0).all(|(b, a)| b <= a)
}

/// Enumerates the facets of `conv(points) + R_{>=0}^n`.
///
/// A facet is spanned by `n - |J|` points and the rays `e_j, j in J`, so we
/// try every such choice, keeping normals that are nonnegative and valid
/// on all candidates.
fn enumerate_facets(n: usize, candidates: &[ExponentVector]) -> Vec<Facet> {
    let mut found: BTreeSet<Facet> = BTreeSet::new();
    for zero_count in 0..n {
        for zero_set in combinations(n, zero_count) {
            for chosen in combinations(candidates.len(), n - zero_count) {
                let base = &candidates[chosen[0]];
                let mut rows: Vec<Vec<Rational>> = zero_set
                    .iter()
                    .map(|&j| (0..n).map(|i| rational::int((i == j) as i64)).collect())
                    .collect();
                for &c in &chosen[1..] {
                    rows.push(
                        candidates[c]
                            .0
                            .iter()
                            .zip(&base.0)
                            .map(|(a, b)| rational::int(a - b))
                            .collect(),
                    );
                }
                let ns = rational::null_space(&rows, n);
                if ns.len() != 1 {
                    continue;
                }
                let mut a = rational::primitive(&ns[0]);
                if a.iter().any(|x| x.is_negative()) {
                    if a.iter().any(|x| x.is_positive()) {
                        continue;
                    }
                    a = a.into_iter().map(|x| -x).collect();
                }
                let c = rational::dot_int(&a, &base.0);
                if candidates.iter().all(|q| rational::dot_int(&a, &q.0) >= c) {
                    found.insert(Facet { normal: a, offset: c });
                }
            }
        }
    }
    found.into_iter().collect()
}

/// Builds the Newton polyhedron of `support` with exact arithmetic.
pub fn build_newton(support: &SupportSet) -> Result<NewtonData, NewtonError> {
    let n = support.dim();
    let pts = support.points();
    if pts.is_empty() {
        return Err(NewtonError::EmptySupport);
    }
    let candidates: Vec<ExponentVector> = pts
        .iter()
        .filter(|p| !pts.iter().any(|q| dominated(p, q)))
        .cloned()
        .collect();
    let facets = enumerate_facets(n, &candidates);

    let vertices: Vec<ExponentVector> = candidates
        .iter()
        .filter(|p| {
            let tight: Vec<Vec<Rational>> =
                facets.iter().filter(|f| f.is_tight(&p.0)).map(|f| f.normal.clone()).collect();
            rational::rank(&tight) == n
        })
        .cloned()
        .collect();

    let distance = ray_shoot_distance(&facets);
    let mut data = NewtonData {
        support: support.clone(),
        vertices,
        facets,
        distance,
        diagonal_face_dim: 0,
        diagonal_face_support: Vec::new(),
    };
    let (k, tight) = diagonal_face(&data);
    data.diagonal_face_dim = k;
    data.diagonal_face_support = tight;
    Ok(data)
}

/// `max_f c_f / (a_f . 1)`: the first `t` at which `(t, ..., t)` satisfies
/// every facet inequality.
fn ray_shoot_distance(facets: &[Facet]) -> Rational {
    facets
        .iter()
        .map(|f| &f.offset / rational::sum(&f.normal))
        .max()
        .expect("a Newton polyhedron has at least one facet")
}

/// The Newton distance `d = inf { t : (t, ..., t) in N }`.
pub fn newton_distance(nd: &NewtonData) -> Rational {
    nd.distance.clone()
}

/// The Newton distance by the maximin characterization
/// `max_{a in simplex} min_{s in S} a . s`, solved as an exact LP.
pub fn newton_distance_lp(support: &SupportSet) -> Result<Rational, NewtonError> {
    let n = support.dim();
    let pts = support.points();
    let m = pts.len();
    let floor = pts.iter().flat_map(|p| p.0.iter().copied()).min().ok_or(NewtonError::EmptySupport)?;
    let floor_r = rational::int(floor);
    // Variables: a_1..a_n, w, slack_1..slack_m with z = w + floor.
    let vars = n + 1 + m;
    let mut a_eq = Vec::with_capacity(m + 1);
    let mut b_eq = Vec::with_capacity(m + 1);
    for (r, p) in pts.iter().enumerate() {
        let mut row = vec![Rational::zero(); vars];
        for i in 0..n {
            row[i] = Rational::from_integer(BigInt::from(p.0[i]));
        }
        row[n] = rational::int(-1);
        row[n + 1 + r] = rational::int(-1);
        a_eq.push(row);
        b_eq.push(floor_r.clone());
    }
    let mut simplex = vec![Rational::zero(); vars];
    for v in simplex.iter_mut().take(n) {
        *v = rational::int(1);
    }
    a_eq.push(simplex);
    b_eq.push(rational::int(1));
    let mut objective = vec![Rational::zero(); vars];
    objective[n] = rational::int(1);
    match lp::maximize(&objective, &a_eq, &b_eq) {
        LpOutcome::Optimal { value, .. } => Ok(value + floor_r),
        other => Err(NewtonError::Lp(format!("{other:?}"))),
    }
}

/// Dimension of the face whose relative interior contains `(d, ..., d)`,
/// and the support points on that face.
pub fn diagonal_face(nd: &NewtonData) -> (usize, Vec<ExponentVector>) {
    let tight = nd.facets_tight_at_diagonal();
    let normals: Vec<Vec<Rational>> = tight.iter().map(|f| f.normal.clone()).collect();
    let k = nd.dim() - rational::rank(&normals);
    let on_face = nd
        .support
        .points()
        .iter()
        .filter(|p| tight.iter().all(|f| f.is_tight(&p.0)))
        .cloned()
        .collect();
    (k, on_face)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn nd(points: &[Vec<i64>]) -> NewtonData {
        build_newton(&SupportSet::from_vecs(points).unwrap()).unwrap()
    }

    fn has_facet(d: &NewtonData, a: &[i64], c: i64) -> bool {
        let a: Vec<Rational> = a.iter().map(|&x| int(x)).collect();
        d.facets.iter().any(|f| f.normal == a && f.offset == int(c))
    }

    #[test]
    fn circle_polyhedron() {
        let d = nd(&[vec![2, 0], vec![0, 2]]);
        assert_eq!(d.vertices.len(), 2);
        assert!(has_facet(&d, &[1, 1], 2));
        assert!(has_facet(&d, &[1, 0], 0));
        assert!(has_facet(&d, &[0, 1], 0));
        assert_eq!(d.facets.len(), 3);
        assert_eq!(d.distance, int(1));
        assert_eq!(d.diagonal_face_dim, 1);
        assert_eq!(d.diagonal_face_support.len(), 2);
    }

    #[test]
    fn single_octant() {
        let d = nd(&[vec![2, 2]]);
        assert_eq!(d.vertices, vec![ExponentVector(vec![2, 2])]);
        assert!(has_facet(&d, &[1, 0], 2));
        assert!(has_facet(&d, &[0, 1], 2));
        assert_eq!(d.facets.len(), 2);
        assert_eq!(d.distance, int(2));
        assert_eq!(d.diagonal_face_dim, 0);
    }

    #[test]
    fn edge_midpoint_is_not_a_vertex() {
        let d = nd(&[vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(d.vertices, vec![ExponentVector(vec![0, 2]), ExponentVector(vec![2, 0])]);
        assert_eq!(d.diagonal_face_support.len(), 3);
    }

    #[test]
    fn named_distances() {
        assert_eq!(nd(&[vec![2, 0], vec![0, 4]]).distance, rat(4, 3));
        assert_eq!(nd(&[vec![3, 1], vec![1, 3]]).distance, int(2));
        let off = nd(&[vec![2, 3]]);
        assert_eq!(off.distance, int(3));
        assert_eq!(off.diagonal_face_dim, 1);
        assert_eq!(off.diagonal_face_support, vec![ExponentVector(vec![2, 3])]);
    }

    #[test]
    fn lp_matches_ray_shoot() {
        for pts in [
            vec![vec![2, 0], vec![0, 4]],
            vec![vec![2, 2]],
            vec![vec![4, 0, 0], vec![0, 3, 1], vec![1, 1, 5], vec![2, 2, 0]],
            vec![vec![-2, 0], vec![0, -1], vec![3, 3]],
        ] {
            let s = SupportSet::from_vecs(&pts).unwrap();
            assert_eq!(newton_distance_lp(&s).unwrap(), build_newton(&s).unwrap().distance, "{pts:?}");
        }
    }

    #[test]
    fn one_dimensional() {
        let d = nd(&[vec![3], vec![5]]);
        assert_eq!(d.distance, int(3));
        assert_eq!(d.vertices, vec![ExponentVector(vec![3])]);
        assert_eq!(d.diagonal_face_dim, 0);
    }

    #[test]
    fn empty_support_rejected() {
        assert_eq!(SupportSet::new(2, Vec::new()), Err(NewtonError::EmptySupport));
    }

    #[test]
    fn combinations_count() {
        assert_eq!(combinations(5, 2).len(), 10);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        assert!(combinations(2, 3).is_empty());
    }
}
