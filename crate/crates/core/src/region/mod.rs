//! Rate and degree-of-freedom regions as small polytopes.
//!
//! Regions live in the nonnegative orthant and are stored both as a vertex
//! list and as a list of halfspaces `normal · x ≤ offset`. Analytic regions
//! use exact rationals ([`Q`]); regions built from simulated points use `f64`
//! with a membership tolerance of [`FLOAT_TOLERANCE`].

mod coord;
mod json;

use std::cmp::Ordering;

use thiserror::Error;

pub use coord::{Coord, FLOAT_TOLERANCE, Q};
pub use json::{region_from_json, region_to_json, region_to_value, JsonCoord, RegionParseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegionError {
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("unsupported dimension {0}; expected {1}")]
    Unsupported(usize, &'static str),
    #[error("time-sharing needs at least one point")]
    Empty,
    #[error("point {index} has a negative or wrong-length coordinate list")]
    BadPoint { index: usize },
}

/// `normal · x ≤ offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace<T> {
    pub normal: Vec<T>,
    pub offset: T,
}

impl<T: Coord> Halfspace<T> {
    pub fn new(normal: Vec<T>, offset: T) -> Self {
        let mut h = Self { normal, offset };
        T::normalize_halfspace(&mut h.normal, &mut h.offset);
        h
    }

    /// `x_axis ≤ bound`.
    pub fn upper(dim: usize, axis: usize, bound: T) -> Self {
        let mut normal = vec![T::zero(); dim];
        normal[axis] = T::one();
        Self::new(normal, bound)
    }

    /// `x_axis ≥ 0`.
    pub fn nonnegative(dim: usize, axis: usize) -> Self {
        let mut normal = vec![T::zero(); dim];
        normal[axis] = -T::one();
        Self::new(normal, T::zero())
    }

    pub fn slack(&self, point: &[T]) -> T {
        self.offset - dot(&self.normal, point)
    }

    pub fn holds(&self, point: &[T]) -> bool {
        T::le_tol(dot(&self.normal, point), self.offset)
    }
}

fn dot<T: Coord>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// A convex polytope in 2 or 3 dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRegion<T> {
    dimension: usize,
    vertices: Vec<Vec<T>>,
    inequalities: Vec<Halfspace<T>>,
    downward_closed: bool,
}

impl<T: Coord> RateRegion<T> {
    pub(crate) fn from_parts(
        dimension: usize,
        vertices: Vec<Vec<T>>,
        inequalities: Vec<Halfspace<T>>,
        downward_closed: bool,
    ) -> Self {
        Self { dimension, vertices, inequalities, downward_closed }
    }

    /// Builds the region cut out by `halfspaces`, enumerating its vertices by
    /// intersecting every `dimension`-subset of constraint planes.
    ///
    /// Nonnegativity constraints are added automatically. The caller asserts
    /// whether the result is downward closed.
    pub fn from_halfspaces(
        dimension: usize,
        halfspaces: Vec<Halfspace<T>>,
        downward_closed: bool,
    ) -> Result<Self, RegionError> {
        if !(2..=3).contains(&dimension) {
            return Err(RegionError::Unsupported(dimension, "2 or 3"));
        }
        if let Some(h) = halfspaces.iter().find(|h| h.normal.len() != dimension) {
            return Err(RegionError::Dimension(dimension, h.normal.len()));
        }
        let mut all: Vec<Halfspace<T>> = (0..dimension).map(|a| Halfspace::nonnegative(dimension, a)).collect();
        for h in halfspaces {
            if !all.contains(&h) {
                all.push(h);
            }
        }

        let mut vertices: Vec<Vec<T>> = Vec::new();
        let mut pick: Vec<usize> = (0..dimension).collect();
        loop {
            let rows: Vec<&Halfspace<T>> = pick.iter().map(|&i| &all[i]).collect();
            if let Some(x) = solve(&rows) {
                if all.iter().all(|h| h.holds(&x)) && !vertices.iter().any(|v| approx_eq_point(v, &x)) {
                    vertices.push(x);
                }
            }
            if !next_pick(&mut pick, all.len()) {
                break;
            }
        }
        vertices.sort_by(|a, b| cmp_points(a, b));

        // Drop constraints that touch no vertex; they are redundant.
        let inequalities = all.into_iter().filter(|h| vertices.iter().any(|v| h.slack(v).is_zero_tol())).collect();
        Ok(Self { dimension, vertices, inequalities, downward_closed })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// All extreme points, including the origin when it belongs to the region.
    pub fn vertices(&self) -> &[Vec<T>] {
        &self.vertices
    }

    /// Extreme points other than the origin.
    pub fn outer_vertices(&self) -> Vec<Vec<T>> {
        self.vertices.iter().filter(|v| !v.iter().all(|c| c.is_zero_tol())).cloned().collect()
    }

    pub fn inequalities(&self) -> &[Halfspace<T>] {
        &self.inequalities
    }

    pub fn downward_closed(&self) -> bool {
        self.downward_closed
    }

    /// Membership test; exact for rationals, `FLOAT_TOLERANCE` for floats.
    pub fn contains(&self, point: &[T]) -> bool {
        point.len() == self.dimension && self.inequalities.iter().all(|h| h.holds(point))
    }

    /// True iff `other ⊆ self`. Both regions are convex, so checking the
    /// vertices of `other` suffices.
    pub fn dominates(&self, other: &Self) -> Result<bool, RegionError> {
        if self.dimension != other.dimension {
            return Err(RegionError::Dimension(self.dimension, other.dimension));
        }
        Ok(other.vertices.iter().all(|v| self.contains(v)))
    }

    /// Vertices of `self` that lie outside `other`.
    pub fn witnesses_against(&self, other: &Self) -> Result<Vec<Vec<T>>, RegionError> {
        if self.dimension != other.dimension {
            return Err(RegionError::Dimension(self.dimension, other.dimension));
        }
        Ok(self.vertices.iter().filter(|v| !other.contains(v)).cloned().collect())
    }

    /// Downward-closed image under the coordinate projection onto `axes`.
    pub fn project(&self, axes: [usize; 2]) -> Result<RateRegion<T>, RegionError> {
        if let Some(&a) = axes.iter().find(|&&a| a >= self.dimension) {
            return Err(RegionError::Dimension(self.dimension, a + 1));
        }
        let points: Vec<Vec<T>> = self.vertices.iter().map(|v| vec![v[axes[0]], v[axes[1]]]).collect();
        time_share(&points)
    }
}

impl RateRegion<Q> {
    /// Floating-point membership for simulated points against an exact region.
    pub fn contains_approx(&self, point: &[f64]) -> bool {
        point.len() == self.dimension
            && self.inequalities.iter().all(|h| {
                let lhs: f64 = h.normal.iter().zip(point).map(|(n, x)| coord::to_f64(*n) * x).sum();
                lhs <= coord::to_f64(h.offset) + FLOAT_TOLERANCE
            })
    }
}

fn approx_eq_point<T: Coord>(a: &[T], b: &[T]) -> bool {
    a.iter().zip(b).all(|(&x, &y)| (x - y).is_zero_tol())
}

fn cmp_points<T: Coord>(a: &[T], b: &[T]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).unwrap_or(Ordering::Equal) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

fn next_pick(pick: &mut [usize], n: usize) -> bool {
    let k = pick.len();
    if k > n {
        return false;
    }
    let Some(i) = (0..k).rev().find(|&i| pick[i] < n - k + i) else {
        return false;
    };
    pick[i] += 1;
    for t in (i + 1)..k {
        pick[t] = pick[t - 1] + 1;
    }
    true
}

/// Solves the square system `normal_i · x = offset_i`; `None` if singular.
fn solve<T: Coord>(rows: &[&Halfspace<T>]) -> Option<Vec<T>> {
    let n = rows.len();
    let mut a: Vec<Vec<T>> = rows
        .iter()
        .map(|h| {
            let mut r = h.normal.clone();
            r.push(h.offset);
            r
        })
        .collect();
    for col in 0..n {
        let pivot =
            (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap_or(Ordering::Equal))?;
        if a[pivot][col].is_zero_tol() {
            return None;
        }
        a.swap(col, pivot);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                let (pivot_row, row) = if r < col {
                    let (lo, hi) = a.split_at_mut(col);
                    (&hi[0], &mut lo[r])
                } else {
                    let (lo, hi) = a.split_at_mut(r);
                    (&lo[col], &mut hi[0])
                };
                for (x, &p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x = *x - f * p;
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

/// Time-sharing region of a set of 2-D points: the downward closure of the
/// convex hull of the points and the origin.
///
/// The downward closure of a hull in the orthant equals the hull of the
/// points together with their axis projections, so the polygon is found by
/// a monotone-chain hull over that augmented set. Collinear boundary points
/// are not reported as vertices.
pub fn time_share<T: Coord>(points: &[Vec<T>]) -> Result<RateRegion<T>, RegionError> {
    if points.is_empty() {
        return Err(RegionError::Empty);
    }
    for (index, p) in points.iter().enumerate() {
        if p.len() != 2 {
            return Err(if p.len() == 3 {
                RegionError::Unsupported(3, "2 for time-sharing")
            } else {
                RegionError::BadPoint { index }
            });
        }
        if p.iter().any(|&c| c < T::zero() && !c.is_zero_tol()) {
            return Err(RegionError::BadPoint { index });
        }
    }

    let zero = T::zero();
    let clamp = |c: T| if c < zero { zero } else { c };
    let mut cloud: Vec<[T; 2]> = vec![[zero, zero]];
    for p in points {
        let (x, y) = (clamp(p[0]), clamp(p[1]));
        cloud.extend([[x, y], [x, zero], [zero, y]]);
    }
    cloud.sort_by(|a, b| cmp_points(a, b));
    cloud.dedup_by(|a, b| approx_eq_point(a, b));

    let hull = monotone_chain(&cloud);
    let vertices: Vec<Vec<T>> = hull.iter().map(|p| p.to_vec()).collect();

    let mut inequalities = vec![Halfspace::nonnegative(2, 0), Halfspace::nonnegative(2, 1)];
    let xmax = vertices.iter().map(|v| v[0]).fold(zero, |a, b| if b > a { b } else { a });
    let ymax = vertices.iter().map(|v| v[1]).fold(zero, |a, b| if b > a { b } else { a });
    let mut push = |h: Halfspace<T>| {
        if !inequalities.contains(&h) {
            inequalities.push(h);
        }
    };
    if hull.len() < 3 {
        // Segment on an axis, or the origin alone.
        push(Halfspace::upper(2, 0, xmax));
        push(Halfspace::upper(2, 1, ymax));
    } else {
        for i in 0..hull.len() {
            let p = hull[i];
            let q = hull[(i + 1) % hull.len()];
            let normal = vec![q[1] - p[1], p[0] - q[0]];
            let offset = normal[0] * p[0] + normal[1] * p[1];
            push(Halfspace::new(normal, offset));
        }
    }

    Ok(RateRegion { dimension: 2, vertices, inequalities, downward_closed: true })
}

fn cross<T: Coord>(o: [T; 2], a: [T; 2], b: [T; 2]) -> T {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counter-clockwise hull starting at the lexicographically smallest point.
fn monotone_chain<T: Coord>(sorted: &[[T; 2]]) -> Vec<[T; 2]> {
    if sorted.len() < 3 {
        return sorted.to_vec();
    }
    let keep = |h: &Vec<[T; 2]>, p: [T; 2]| {
        let c = cross(h[h.len() - 2], h[h.len() - 1], p);
        c > T::zero() && !c.is_zero_tol()
    };
    let mut lower: Vec<[T; 2]> = Vec::new();
    for &p in sorted {
        while lower.len() >= 2 && !keep(&lower, p) {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[T; 2]> = Vec::new();
    for &p in sorted.iter().rev() {
        while upper.len() >= 2 && !keep(&upper, p) {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i128, d: i128) -> Q {
        Q::new(n, d)
    }

    fn pts(v: &[(Q, Q)]) -> Vec<Vec<Q>> {
        v.iter().map(|&(a, b)| vec![a, b]).collect()
    }

    #[test]
    fn two_corners_give_simplex() {
        let r = time_share(&pts(&[(q(1, 1), q(0, 1)), (q(0, 1), q(1, 1))])).unwrap();
        assert_eq!(r.outer_vertices(), pts(&[(q(1, 1), q(0, 1)), (q(0, 1), q(1, 1))]));
        assert!(r.inequalities().contains(&Halfspace::new(vec![q(1, 1), q(1, 1)], q(1, 1))));
        assert!(r.contains(&[q(1, 2), q(1, 2)]));
        assert!(!r.contains(&[q(1, 2), q(2, 3)]));
    }

    #[test]
    fn dominating_middle_point_is_a_vertex() {
        let a = (q(3, 4), q(0, 1));
        let b = (q(0, 1), q(3, 4));
        let c = (q(1, 2), q(1, 2));
        let with = time_share(&pts(&[a, b, c])).unwrap();
        assert!(with.outer_vertices().contains(&vec![c.0, c.1]));
        assert!(with.contains(&[c.0, c.1]));
        let without = time_share(&pts(&[a, b])).unwrap();
        // r1 + r2 ≤ 3/4 excludes (1/2, 1/2).
        assert!(!without.contains(&[c.0, c.1]));
        assert!(with.dominates(&without).unwrap());
        assert!(!without.dominates(&with).unwrap());
    }

    #[test]
    fn single_point_gives_rectangle() {
        let r = time_share(&pts(&[(q(2, 3), q(1, 5))])).unwrap();
        assert_eq!(
            r.vertices(),
            &pts(&[(q(0, 1), q(0, 1)), (q(2, 3), q(0, 1)), (q(2, 3), q(1, 5)), (q(0, 1), q(1, 5))])[..]
        );
        assert!(r.contains(&[q(2, 3), q(1, 5)]));
        assert!(!r.contains(&[q(2, 3), q(1, 4)]));
    }

    #[test]
    fn degenerate_hulls() {
        let origin = time_share(&pts(&[(q(0, 1), q(0, 1))])).unwrap();
        assert_eq!(origin.vertices(), &pts(&[(q(0, 1), q(0, 1))])[..]);
        assert!(origin.contains(&[q(0, 1), q(0, 1)]));
        assert!(!origin.contains(&[q(1, 100), q(0, 1)]));

        let seg = time_share(&pts(&[(q(0, 1), q(1, 4))])).unwrap();
        assert_eq!(seg.outer_vertices(), pts(&[(q(0, 1), q(1, 4))]));
        assert!(!seg.contains(&[q(0, 1), q(1, 3)]));
        assert!(!seg.contains(&[q(1, 9), q(0, 1)]));
    }

    #[test]
    fn origin_always_contained_and_errors() {
        let r = time_share(&pts(&[(q(5, 7), q(1, 9))])).unwrap();
        assert!(r.contains(&[q(0, 1), q(0, 1)]));
        assert_eq!(time_share::<Q>(&[]), Err(RegionError::Empty));
        assert!(time_share(&[vec![q(-1, 2), q(0, 1)]]).is_err());
        let cube = RateRegion::from_halfspaces(3, vec![], true);
        assert!(cube.is_ok());
        assert!(r.dominates(&cube.unwrap()).is_err());
    }

    #[test]
    fn square_dominates_simplex_only_one_way() {
        let square = time_share(&pts(&[(q(1, 1), q(1, 1))])).unwrap();
        let simplex = time_share(&pts(&[(q(1, 1), q(0, 1)), (q(0, 1), q(1, 1))])).unwrap();
        assert!(square.dominates(&simplex).unwrap());
        assert!(!simplex.dominates(&square).unwrap());
        assert!(square.dominates(&square).unwrap());
    }

    #[test]
    fn halfspace_vertex_enumeration_3d() {
        // r1 ≤ 1, r2 ≤ 1, r0 + r1 ≤ 1, r0 + r2 ≤ 1 over (r0, r1, r2).
        let one = q(1, 1);
        let zero = q(0, 1);
        let hs = vec![
            Halfspace::upper(3, 1, one),
            Halfspace::upper(3, 2, one),
            Halfspace::new(vec![one, one, zero], one),
            Halfspace::new(vec![one, zero, one], one),
        ];
        let r = RateRegion::from_halfspaces(3, hs, true).unwrap();
        let expect: Vec<Vec<Q>> = vec![
            vec![zero, zero, zero],
            vec![zero, zero, one],
            vec![zero, one, zero],
            vec![zero, one, one],
            vec![one, zero, zero],
        ];
        assert_eq!(r.vertices(), &expect[..]);
        let proj = r.project([1, 2]).unwrap();
        assert_eq!(proj.outer_vertices(), pts(&[(one, zero), (one, one), (zero, one)]));
    }

    #[test]
    fn float_regions_use_tolerance() {
        let r = time_share(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(r.contains(&[0.5, 0.5 + 1e-13]));
        assert!(!r.contains(&[0.5, 0.5 + 1e-9]));
        let exact = time_share(&pts(&[(q(1, 1), q(0, 1)), (q(0, 1), q(1, 1))])).unwrap();
        assert!(exact.contains_approx(&[0.25, 0.75 + 5e-13]));
        assert!(!exact.contains_approx(&[0.25, 0.76]));
    }

    fn small_q() -> impl Strategy<Value = Q> {
        (0i128..=12, 1i128..=6).prop_map(|(n, d)| Q::new(n, d))
    }

    proptest! {
        #[test]
        fn time_share_is_idempotent(points in prop::collection::vec((small_q(), small_q()), 1..7)) {
            let ps: Vec<Vec<Q>> = points.iter().map(|&(a, b)| vec![a, b]).collect();
            let r = time_share(&ps).unwrap();
            let again = time_share(r.vertices()).unwrap();
            prop_assert_eq!(&again, &r);
            for p in &ps {
                prop_assert!(r.contains(p));
            }
            for v in r.vertices() {
                for h in r.inequalities() {
                    prop_assert!(h.holds(v));
                }
            }
        }

        #[test]
        fn dominated_points_are_contained(points in prop::collection::vec((small_q(), small_q()), 1..6),
                                          sx in 0i128..=4, sy in 0i128..=4) {
            let ps: Vec<Vec<Q>> = points.iter().map(|&(a, b)| vec![a, b]).collect();
            let r = time_share(&ps).unwrap();
            for p in &ps {
                let shrunk = vec![p[0] * Q::new(sx, 4), p[1] * Q::new(sy, 4)];
                prop_assert!(r.contains(&shrunk));
            }
        }
    }
}
