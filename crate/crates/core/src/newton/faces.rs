use std::collections::BTreeSet;

use num_traits::{Signed, Zero};

use super::{NewtonData, NewtonError};
use crate::poly::{ExponentVector, Polynomial};
use crate::rational::{self, Rational};

/// A face of the Newton polyhedron, described by the support points on it
/// and the facets containing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub points: Vec<ExponentVector>,
    /// Indices into [`NewtonData::facets`].
    pub facets: Vec<usize>,
    pub dim: usize,
    pub compact: bool,
}

/// A bounded face together with a strictly positive normal `w` such that
/// `w . alpha = level` on the face and `w . alpha > level` elsewhere on the
/// support.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactFace {
    pub points: Vec<ExponentVector>,
    pub dim: usize,
    pub normal: Vec<Rational>,
    pub level: Rational,
}

/// Every nonempty face (bounded or not) that contains a support point.
///
/// Faces are generated as intersections of facet incidence sets; a face is
/// bounded exactly when the sum of the normals of its facets is positive.
pub fn all_faces(nd: &NewtonData) -> Vec<Face> {
    let pts = nd.support.points();
    let incidence: Vec<BTreeSet<usize>> = nd
        .facets
        .iter()
        .map(|f| (0..pts.len()).filter(|&i| f.is_tight(&pts[i].0)).collect())
        .collect();

    let mut sets: BTreeSet<BTreeSet<usize>> = incidence.iter().filter(|s| !s.is_empty()).cloned().collect();
    let mut frontier: Vec<BTreeSet<usize>> = sets.iter().cloned().collect();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for s in &frontier {
            for inc in &incidence {
                let meet: BTreeSet<usize> = s.intersection(inc).copied().collect();
                if !meet.is_empty() && sets.insert(meet.clone()) {
                    next.push(meet);
                }
            }
        }
        frontier = next;
    }

    let n = nd.dim();
    let mut faces: Vec<Face> = sets
        .into_iter()
        .map(|s| {
            let facets: Vec<usize> = (0..incidence.len()).filter(|&f| s.is_subset(&incidence[f])).collect();
            let normals: Vec<Vec<Rational>> = facets.iter().map(|&f| nd.facets[f].normal.clone()).collect();
            let dim = n - rational::rank(&normals);
            let compact = normal_sum(nd, &facets, n).iter().all(|x| x.is_positive());
            Face { points: s.into_iter().map(|i| pts[i].clone()).collect(), facets, dim, compact }
        })
        .collect();
    faces.sort_by(|a, b| b.dim.cmp(&a.dim).then_with(|| a.points.cmp(&b.points)));
    faces
}

fn normal_sum(nd: &NewtonData, facets: &[usize], n: usize) -> Vec<Rational> {
    let mut w = vec![Rational::zero(); n];
    for &f in facets {
        for (wi, a) in w.iter_mut().zip(&nd.facets[f].normal) {
            *wi += a;
        }
    }
    w
}

/// The bounded faces, highest dimension first.
pub fn compact_faces(nd: &NewtonData) -> Vec<CompactFace> {
    all_faces(nd)
        .into_iter()
        .filter(|f| f.compact)
        .map(|f| {
            let normal = normal_sum(nd, &f.facets, nd.dim());
            let level = rational::dot_int(&normal, &f.points[0].0);
            CompactFace { points: f.points, dim: f.dim, normal, level }
        })
        .collect()
}

/// `f_F`: the part of `f` supported on the face.
pub fn face_polynomial(f: &Polynomial, face: &[ExponentVector]) -> Result<Polynomial, NewtonError> {
    let support: BTreeSet<ExponentVector> = f.support().into_iter().collect();
    if let Some(p) = face.iter().find(|p| !support.contains(p)) {
        return Err(NewtonError::FaceMismatch(p.0.clone()));
    }
    let on: BTreeSet<&ExponentVector> = face.iter().collect();
    Ok(f.filter_terms(|a| on.contains(a)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newton::{build_newton, SupportSet};
    use crate::poly::parse_polynomial;

    fn faces_of(text: &str) -> (Polynomial, Vec<CompactFace>) {
        let f = parse_polynomial(text, None).unwrap();
        let nd = build_newton(&SupportSet::of_polynomial(&f).unwrap()).unwrap();
        (f, compact_faces(&nd))
    }

    #[test]
    fn square_of_difference() {
        let (f, faces) = faces_of("(x1-x2)^2");
        assert_eq!(faces.len(), 3);
        assert_eq!(faces[0].dim, 1);
        assert_eq!(faces[0].points.len(), 3);
        let ff = face_polynomial(&f, &faces[0].points).unwrap();
        assert_eq!(ff, f);
        let vertex = face_polynomial(&f, &faces[1].points).unwrap();
        assert_eq!(vertex.len(), 1);
    }

    #[test]
    fn witness_normal_separates() {
        let (f, faces) = faces_of("x1^4 + x1^2*x2 + x2^3 + x1*x2^5");
        for face in &faces {
            assert!(face.normal.iter().all(|w| w.is_positive()));
            for a in f.support() {
                let v = rational::dot_int(&face.normal, &a.0);
                if face.points.contains(&a) {
                    assert_eq!(v, face.level);
                } else {
                    assert!(v > face.level);
                }
            }
        }
    }

    #[test]
    fn unbounded_faces_are_excluded() {
        let f = parse_polynomial("x1^2 + x2^2 + x2^5", None).unwrap();
        let nd = build_newton(&SupportSet::of_polynomial(&f).unwrap()).unwrap();
        let all = all_faces(&nd);
        let compact = compact_faces(&nd);
        assert!(all.len() > compact.len());
        let x2_5 = ExponentVector(vec![0, 5]);
        assert!(all.iter().any(|fc| fc.points.contains(&x2_5)));
        assert!(!compact.iter().any(|fc| fc.points.contains(&x2_5)));
    }

    #[test]
    fn mismatched_face_rejected() {
        let f = parse_polynomial("x1^2 + x2^2", None).unwrap();
        let bad = vec![ExponentVector(vec![1, 1])];
        assert_eq!(face_polynomial(&f, &bad), Err(NewtonError::FaceMismatch(vec![1, 1])));
    }
}
