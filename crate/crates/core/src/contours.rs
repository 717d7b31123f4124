//! Peierls contours on the dual lattice and their adjacency classes, the
//! contour weights `F(c)`, exhaustive contour counts and the quantitative
//! Peierls bound for plus boundary conditions.
//!
//! Everything lives in doubled coordinates: the primal site `(x, y)` is
//! `(2x, 2y)`, the dual vertex `(x + ½, y + ½)` is `(2x + 1, 2y + 1)` and a
//! dual edge is named by its midpoint, which has exactly one odd coordinate.
//! Configurations are read with every site outside the box set to `+1`.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rayon::prelude::*;

use crate::dynamics::log_cosh;
use crate::error::{Error, Result};
use crate::model::{CouplingKernel, PcaParams, Site, Spin, SpinConfig};

pub type Point = [i64; 2];

/// A unit segment of the dual lattice, named by its doubled midpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DualEdge {
    mid: Point,
}

impl DualEdge {
    /// The segment separating the nearest-neighbour sites `a` and `b`.
    pub fn between(a: Point, b: Point) -> DualEdge {
        debug_assert_eq!((a[0] - b[0]).abs() + (a[1] - b[1]).abs(), 1);
        DualEdge {
            mid: [a[0] + b[0], a[1] + b[1]],
        }
    }

    pub fn from_midpoint(mid: Point) -> Option<DualEdge> {
        let odd = mid.iter().filter(|c| c.rem_euclid(2) == 1).count();
        (odd == 1).then_some(DualEdge { mid })
    }

    pub fn midpoint(&self) -> Point {
        self.mid
    }

    /// Separates horizontal neighbours, i.e. is parallel to the y axis.
    pub fn is_vertical(&self) -> bool {
        self.mid[0].rem_euclid(2) == 1
    }

    /// Doubled dual vertices at both ends.
    pub fn endpoints(&self) -> (Point, Point) {
        let [x, y] = self.mid;
        if self.is_vertical() {
            ([x, y - 1], [x, y + 1])
        } else {
            ([x - 1, y], [x + 1, y])
        }
    }

    /// The two primal sites it separates, in plain coordinates.
    pub fn primal_pair(&self) -> (Point, Point) {
        let [x, y] = self.mid;
        if self.is_vertical() {
            ([(x - 1) / 2, y / 2], [(x + 1) / 2, y / 2])
        } else {
            ([x / 2, (y - 1) / 2], [x / 2, (y + 1) / 2])
        }
    }

    fn other_end(&self, v: Point) -> Point {
        let (a, b) = self.endpoints();
        if a == v {
            b
        } else {
            a
        }
    }
}

/// Spin at a plain-coordinate site, `+1` outside the box.
pub fn spin_at(config: &SpinConfig, p: Point) -> Spin {
    config.get(&Site::from(p)).unwrap_or(Spin::Up)
}

fn check_planar(config: &SpinConfig) -> Result<()> {
    match config.region().dim() {
        2 => Ok(()),
        d => Err(Error::NotTwoDimensional(d)),
    }
}

/// Dual edges separating nearest neighbours of opposite sign.
pub fn marked_segments(config: &SpinConfig) -> Result<BTreeSet<DualEdge>> {
    check_planar(config)?;
    let mut out = BTreeSet::new();
    for site in config.region().padded(1).sites() {
        let a = [site.coords()[0], site.coords()[1]];
        for b in [[a[0] + 1, a[1]], [a[0], a[1] + 1]] {
            if spin_at(config, a) != spin_at(config, b) {
                out.insert(DualEdge::between(a, b));
            }
        }
    }
    Ok(out)
}

/// A closed curve of dual edges listed in traversal order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeierlsContour {
    edges: Vec<DualEdge>,
    vertices: Vec<Point>,
    boundary_plus: BTreeSet<Point>,
    boundary_minus: BTreeSet<Point>,
}

impl PeierlsContour {
    fn new(edges: Vec<DualEdge>, vertices: Vec<Point>, config: &SpinConfig) -> Self {
        let mut boundary_plus = BTreeSet::new();
        let mut boundary_minus = BTreeSet::new();
        for e in &edges {
            let (a, b) = e.primal_pair();
            for p in [a, b] {
                match spin_at(config, p) {
                    Spin::Up => boundary_plus.insert(p),
                    Spin::Down => boundary_minus.insert(p),
                };
            }
        }
        PeierlsContour {
            edges,
            vertices,
            boundary_plus,
            boundary_minus,
        }
    }

    pub fn edges(&self) -> &[DualEdge] {
        &self.edges
    }

    /// Doubled dual vertices; vertex `n` joins edge `n − 1` to edge `n`.
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn boundary_plus(&self) -> &BTreeSet<Point> {
        &self.boundary_plus
    }

    pub fn boundary_minus(&self) -> &BTreeSet<Point> {
        &self.boundary_minus
    }

    /// Whether the curve winds around the plain site `p`, by the parity of
    /// crossings of the ray from `p` towards `+x`.
    pub fn surrounds(&self, p: Point) -> bool {
        let crossings = self
            .edges
            .iter()
            .filter(|e| e.is_vertical() && e.mid[1] == 2 * p[1] && e.mid[0] > 2 * p[0])
            .count();
        crossings % 2 == 1
    }

    /// Number of primal sites enclosed.
    pub fn area(&self) -> i64 {
        let n = self.vertices.len();
        let twice: i64 = (0..n)
            .map(|k| {
                let a = self.vertices[k];
                let b = self.vertices[(k + 1) % n];
                a[0] * b[1] - a[1] * b[0]
            })
            .sum();
        twice.abs() / 8
    }
}

/// Splits a marked edge set into closed curves. At a dual vertex of degree
/// four the two edges bounding the same `−1` cell are joined.
pub fn split_into_peierls(config: &SpinConfig, segments: &BTreeSet<DualEdge>) -> Result<Vec<PeierlsContour>> {
    check_planar(config)?;
    let mut incident: BTreeMap<Point, Vec<DualEdge>> = BTreeMap::new();
    for e in segments {
        let (a, b) = e.endpoints();
        incident.entry(a).or_default().push(*e);
        incident.entry(b).or_default().push(*e);
    }
    if let Some((v, es)) = incident.iter().find(|(_, es)| es.len() % 2 == 1) {
        return Err(Error::ParityViolation(*v, es.len()));
    }

    let mut unused: BTreeSet<DualEdge> = segments.clone();
    let mut out = Vec::new();
    while let Some(&start) = unused.iter().next() {
        let (first, mut at) = start.endpoints();
        let mut edges = vec![start];
        let mut vertices = vec![first];
        unused.remove(&start);
        let mut current = start;
        // a curve may touch itself at a degree-four vertex, so stop on the
        // starting edge rather than the starting vertex
        loop {
            let next = continue_at(config, current, &incident[&at]);
            if next == start {
                break;
            }
            if !unused.remove(&next) {
                return Err(Error::ParityViolation(at, incident[&at].len()));
            }
            vertices.push(at);
            edges.push(next);
            at = next.other_end(at);
            current = next;
        }
        out.push(PeierlsContour::new(edges, vertices, config));
    }
    Ok(out)
}

fn continue_at(config: &SpinConfig, arrived: DualEdge, incident: &[DualEdge]) -> DualEdge {
    if incident.len() == 2 {
        return if incident[0] == arrived {
            incident[1]
        } else {
            incident[0]
        };
    }
    // degree four: leave along the other edge of the −1 cell behind `arrived`
    let (a, b) = arrived.primal_pair();
    let cell = if spin_at(config, a) == Spin::Down { a } else { b };
    incident
        .iter()
        .copied()
        .find(|e| {
            let (p, q) = e.primal_pair();
            *e != arrived && (p == cell || q == cell)
        })
        .expect("a degree-four vertex has a second edge on each -1 cell")
}

/// An equivalence class of Peierls contours under boundary sharing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContourClass {
    contours: Vec<PeierlsContour>,
    boundary_plus: BTreeSet<Point>,
    boundary_minus: BTreeSet<Point>,
}

impl ContourClass {
    pub fn contours(&self) -> &[PeierlsContour] {
        &self.contours
    }

    /// `ℓ(c)`, total number of dual edges.
    pub fn length(&self) -> usize {
        self.contours.iter().map(PeierlsContour::len).sum()
    }

    pub fn boundary_plus(&self) -> &BTreeSet<Point> {
        &self.boundary_plus
    }

    pub fn boundary_minus(&self) -> &BTreeSet<Point> {
        &self.boundary_minus
    }

    /// `∂c = ∂⁺c ∪ ∂⁻c`.
    pub fn boundary(&self) -> BTreeSet<Point> {
        self.boundary_plus.union(&self.boundary_minus).copied().collect()
    }

    pub fn edge_set(&self) -> BTreeSet<DualEdge> {
        self.contours.iter().flat_map(|g| g.edges.iter().copied()).collect()
    }

    /// Parity of the number of member curves around `p`.
    pub fn encloses_oddly(&self, p: Point) -> bool {
        self.contours.iter().filter(|g| g.surrounds(p)).count() % 2 == 1
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Groups curves whose boundaries are linked by chains of shared sites.
/// Classes come out ordered by their first member.
pub fn contour_classes(contours: Vec<PeierlsContour>) -> Vec<ContourClass> {
    let mut parent: Vec<usize> = (0..contours.len()).collect();
    let mut owner: BTreeMap<Point, usize> = BTreeMap::new();
    for (n, g) in contours.iter().enumerate() {
        for p in g.boundary_plus.iter().chain(&g.boundary_minus) {
            match owner.get(p) {
                Some(&m) => {
                    let (a, b) = (find(&mut parent, m), find(&mut parent, n));
                    parent[a.max(b)] = a.min(b);
                }
                None => {
                    owner.insert(*p, n);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<PeierlsContour>> = BTreeMap::new();
    for (n, g) in contours.into_iter().enumerate() {
        let root = find(&mut parent, n);
        groups.entry(root).or_default().push(g);
    }
    groups
        .into_values()
        .map(|contours| {
            let boundary_plus = contours.iter().flat_map(|g| g.boundary_plus.iter().copied()).collect();
            let boundary_minus = contours.iter().flat_map(|g| g.boundary_minus.iter().copied()).collect();
            ContourClass {
                contours,
                boundary_plus,
                boundary_minus,
            }
        })
        .collect()
}

/// Marked segments, curves and classes of a configuration in one go.
pub fn analyze(config: &SpinConfig) -> Result<Vec<ContourClass>> {
    let segments = marked_segments(config)?;
    Ok(contour_classes(split_into_peierls(config, &segments)?))
}

/// Index into `classes` of the class holding the innermost curve around `p`.
pub fn minimal_contour_around(config: &SpinConfig, p: Point, classes: &[ContourClass]) -> Result<usize> {
    if spin_at(config, p) != Spin::Down {
        return Err(Error::NotMinusSite(Site::from(p)));
    }
    classes
        .iter()
        .enumerate()
        .flat_map(|(n, c)| c.contours.iter().filter(|g| g.surrounds(p)).map(move |g| (g.area(), n)))
        .min()
        .map(|(_, n)| n)
        .ok_or_else(|| Error::Geometry(format!("no contour around {}", Site::from(p))))
}

/// `F(c) = Π_{i∈∂c} cosh(β Σ_j k(i−j)σ_j) / cosh(β Σ_j k(j))`.
pub fn contour_weight(class: &ContourClass, config: &SpinConfig, params: &PcaParams) -> f64 {
    let beta = params.beta;
    let full = log_cosh(beta * params.kernel.total());
    class
        .boundary()
        .iter()
        .map(|&p| {
            let m: f64 = params
                .kernel
                .support()
                .map(|(o, w)| w * spin_at(config, [p[0] + o[0], p[1] + o[1]]).as_f64())
                .sum();
            log_cosh(beta * m) - full
        })
        .sum::<f64>()
        .exp()
}

/// Flips every spin enclosed by an odd number of the curves of `class`,
/// which erases exactly the edges of `class`.
pub fn flip_inside(class: &ContourClass, config: &SpinConfig) -> SpinConfig {
    SpinConfig::from_fn(config.region().clone(), |s| {
        let p = [s.coords()[0], s.coords()[1]];
        let spin = spin_at(config, p);
        if class.encloses_oddly(p) {
            spin.flipped()
        } else {
            spin
        }
    })
}

/// Largest length accepted by [`enumerate_contours_around_origin`].
pub const MAX_ENUMERATION_LENGTH: usize = 14;

/// Number of self-avoiding closed dual curves of length `len` that wind
/// around the origin cell.
///
/// Every such curve crosses the ray `{(x, 0) : x > 0}` an odd number of
/// times. A depth-first search is started from each crossing edge,
/// traversed upwards, and a curve is kept only when the start is its
/// crossing closest to the origin.
pub fn enumerate_contours_around_origin(len: usize) -> Result<u64> {
    if len > MAX_ENUMERATION_LENGTH {
        return Err(Error::BudgetExceeded {
            requested: len,
            budget: MAX_ENUMERATION_LENGTH,
        });
    }
    if len < 4 || len % 2 == 1 {
        return Ok(0);
    }
    let reach = (len / 2) as i64;
    Ok((0..reach)
        .into_par_iter()
        .map(|a| {
            let x = 2 * a + 1;
            let mut search = Search {
                len,
                start: [x, -1],
                start_crossing: x,
                visited: HashSet::from([[x, -1], [x, 1]]),
                crossings: vec![x],
                count: 0,
            };
            search.extend([x, 1], 1);
            search.count
        })
        .sum())
}

struct Search {
    len: usize,
    start: Point,
    start_crossing: i64,
    visited: HashSet<Point>,
    crossings: Vec<i64>,
    count: u64,
}

impl Search {
    fn extend(&mut self, at: Point, used: usize) {
        let left = self.len - used;
        for step in [[2, 0], [-2, 0], [0, 2], [0, -2]] {
            let next = [at[0] + step[0], at[1] + step[1]];
            let mid = [at[0] + step[0] / 2, at[1] + step[1] / 2];
            let crossing = mid[1] == 0 && mid[0] > 0;
            if next == self.start {
                if left == 1 {
                    self.close(crossing.then_some(mid[0]));
                }
                continue;
            }
            if self.visited.contains(&next) {
                continue;
            }
            let back = ((next[0] - self.start[0]).abs() + (next[1] - self.start[1]).abs()) / 2;
            if back as usize > left - 1 {
                continue;
            }
            if crossing && mid[0] < self.start_crossing {
                continue;
            }
            self.visited.insert(next);
            if crossing {
                self.crossings.push(mid[0]);
            }
            self.extend(next, used + 1);
            if crossing {
                self.crossings.pop();
            }
            self.visited.remove(&next);
        }
    }

    fn close(&mut self, last: Option<i64>) {
        let n = self.crossings.len() + usize::from(last.is_some());
        if n % 2 == 1 {
            self.count += 1;
        }
    }
}

/// `l³ 3^{l−1}`.
pub fn contour_count_bound(len: usize) -> f64 {
    let l = len as f64;
    l.powi(3) * 3f64.powi(len as i32 - 1)
}

/// `(A, B)`: `B = Σ_j k(j)` and `A` the largest `|Σ_j k(j)σ_j|` over the
/// sign patterns of `σ_0, σ_{±e1}, σ_{±e2}` that are not constant.
pub fn peierls_constants(kernel: &CouplingKernel) -> Result<(f64, f64)> {
    if kernel.dim() != 2 {
        return Err(Error::NotTwoDimensional(kernel.dim()));
    }
    let (k0, k1, k2) = kernel.nearest_neighbor_weights().ok_or(Error::NotNearestNeighbor)?;
    let weights = [k0, k1, k1, k2, k2];
    let a = (1u32..31)
        .map(|pattern| {
            weights
                .iter()
                .enumerate()
                .map(|(b, w)| if pattern >> b & 1 == 1 { *w } else { -*w })
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max);
    Ok((a, kernel.total()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PeierlsOutcome {
    Bound(f64),
    /// `A ≥ B`: the ratio `r` is not below one.
    NonContractive,
    /// `3 r^{1/4} ≥ 1`: the series diverges.
    Divergent,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeierlsReport {
    pub a: f64,
    pub b: f64,
    /// `cosh(βA) / cosh(βB)`.
    pub ratio: f64,
    pub outcome: PeierlsOutcome,
}

const SERIES_REL_TAIL: f64 = 1e-12;

/// `Σ_{l = 4, 6, 8, …} l³ 3^{l−1} r^{l/4}` with `r = cosh(βA)/cosh(βB)`,
/// summed until a geometric majorant of the tail drops below `10⁻¹²` of the
/// partial sum.
pub fn peierls_bound(beta: f64, kernel: &CouplingKernel) -> Result<PeierlsReport> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    let (a, b) = peierls_constants(kernel)?;
    let log_ratio = log_cosh(beta * a) - log_cosh(beta * b);
    let ratio = log_ratio.exp();
    let outcome = if a >= b {
        PeierlsOutcome::NonContractive
    } else if 3.0 * ratio.powf(0.25) >= 1.0 {
        PeierlsOutcome::Divergent
    } else {
        PeierlsOutcome::Bound(sum_series(log_ratio))
    };
    Ok(PeierlsReport { a, b, ratio, outcome })
}

fn sum_series(log_ratio: f64) -> f64 {
    let term = |l: f64| (3.0 * l.ln() + (l - 1.0) * 3f64.ln() + 0.25 * l * log_ratio).exp();
    let step = 9.0 * (0.5 * log_ratio).exp();
    let mut total = 0.0;
    let mut l = 4.0;
    loop {
        let t = term(l);
        total += t;
        // term ratios ((l+2)/l)³·9√r decrease in l, so this bounds the tail
        let q = ((l + 2.0) / l).powi(3) * step;
        if q < 1.0 && t * q / (1.0 - q) < SERIES_REL_TAIL * total {
            return total;
        }
        l += 2.0;
    }
}

/// Smallest `β` (to within `tol`) whose Peierls bound is below `target`, or
/// `None` when the kernel is non-contractive.
pub fn peierls_threshold(kernel: &CouplingKernel, target: f64, tol: f64) -> Result<Option<f64>> {
    let below = |beta: f64| -> Result<bool> {
        Ok(matches!(peierls_bound(beta, kernel)?.outcome, PeierlsOutcome::Bound(v) if v < target))
    };
    if matches!(peierls_bound(1.0, kernel)?.outcome, PeierlsOutcome::NonContractive) {
        return Ok(None);
    }
    let mut hi = 1.0;
    while !below(hi)? {
        hi *= 2.0;
        if hi > 1e6 {
            return Ok(None);
        }
    }
    let mut lo = 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if below(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::parse_grid;
    use crate::model::LatticeBox;
    use proptest::prelude::*;

    fn config_from(minus: &[Point], region: LatticeBox) -> SpinConfig {
        let set: BTreeSet<Point> = minus.iter().copied().collect();
        SpinConfig::from_fn(region, |s| {
            Spin::from_bit(!set.contains(&[s.coords()[0], s.coords()[1]]))
        })
    }

    fn centered(half: i64) -> LatticeBox {
        let side = (2 * half + 1) as usize;
        LatticeBox::with_origin(Site::new(vec![-half, -half]), &[side, side]).unwrap()
    }

    fn degrees(segments: &BTreeSet<DualEdge>) -> BTreeMap<Point, usize> {
        let mut deg = BTreeMap::new();
        for e in segments {
            let (a, b) = e.endpoints();
            *deg.entry(a).or_insert(0) += 1;
            *deg.entry(b).or_insert(0) += 1;
        }
        deg
    }

    #[test]
    fn all_plus_has_no_segments() {
        let c = SpinConfig::uniform(centered(2), Spin::Up);
        assert!(marked_segments(&c).unwrap().is_empty());
        assert!(analyze(&c).unwrap().is_empty());
    }

    #[test]
    fn single_minus_site_gives_unit_square() {
        let c = config_from(&[[0, 0]], centered(2));
        let seg = marked_segments(&c).unwrap();
        let mids: BTreeSet<Point> = seg.iter().map(|e| e.midpoint()).collect();
        assert_eq!(mids, BTreeSet::from([[1, 0], [-1, 0], [0, 1], [0, -1]]));
        let curves = split_into_peierls(&c, &seg).unwrap();
        assert_eq!(curves.len(), 1);
        assert_eq!(curves[0].len(), 4);
        assert_eq!(curves[0].area(), 1);
        assert!(curves[0].surrounds([0, 0]));
        assert!(!curves[0].surrounds([1, 0]));
        assert!(!curves[0].surrounds([-1, 0]));
    }

    #[test]
    fn domino_perimeter() {
        let c = config_from(&[[0, 0], [1, 0]], centered(2));
        let seg = marked_segments(&c).unwrap();
        assert_eq!(seg.len(), 6);
        let curves = split_into_peierls(&c, &seg).unwrap();
        assert_eq!(curves.len(), 1);
        assert_eq!(curves[0].len(), 6);
        assert_eq!(curves[0].area(), 2);
    }

    #[test]
    fn diagonal_squares_split_at_the_shared_corner() {
        let c = config_from(&[[0, 0], [1, 1]], centered(2));
        let seg = marked_segments(&c).unwrap();
        assert_eq!(degrees(&seg)[&[1, 1]], 4);
        let curves = split_into_peierls(&c, &seg).unwrap();
        assert_eq!(curves.len(), 2);
        assert!(curves.iter().all(|g| g.len() == 4 && g.vertices().contains(&[1, 1])));
        let classes = contour_classes(curves);
        assert_eq!(classes.len(), 1);
        assert_eq!(classes[0].contours().len(), 2);
        assert!(classes[0].boundary_plus().contains(&[1, 0]));
    }

    #[test]
    fn far_apart_squares_are_separate_classes() {
        let c = config_from(&[[-2, -2], [2, 2]], centered(3));
        let classes = analyze(&c).unwrap();
        assert_eq!(classes.len(), 2);
        assert!(classes.iter().all(|cl| cl.contours().len() == 1));
    }

    #[test]
    fn squares_two_apart_share_a_boundary_site() {
        let classes = analyze(&config_from(&[[0, 0], [2, 0]], centered(3))).unwrap();
        assert_eq!(classes.len(), 1);
        assert_eq!(classes[0].contours().len(), 2);
        let knight = analyze(&config_from(&[[0, 0], [2, 1]], centered(3))).unwrap();
        assert_eq!(knight.len(), 2);
    }

    #[test]
    fn nested_squares_pick_the_innermost_curve() {
        // −1 ring of side 5, +1 core of side 3, −1 centre
        let c = SpinConfig::from_fn(centered(3), |s| {
            let r = s.coords()[0].abs().max(s.coords()[1].abs());
            Spin::from_bit(!(r == 0 || r == 2))
        });
        let classes = analyze(&c).unwrap();
        let n = minimal_contour_around(&c, [0, 0], &classes).unwrap();
        let innermost = classes[n]
            .contours()
            .iter()
            .filter(|g| g.surrounds([0, 0]))
            .map(PeierlsContour::area)
            .min()
            .unwrap();
        assert_eq!(innermost, 1);
        let ring = minimal_contour_around(&c, [2, 0], &classes).unwrap();
        let areas: Vec<i64> = classes[ring]
            .contours()
            .iter()
            .filter(|g| g.surrounds([2, 0]))
            .map(PeierlsContour::area)
            .collect();
        assert_eq!(areas, vec![25]);
        assert!(matches!(
            minimal_contour_around(&c, [1, 0], &classes),
            Err(Error::NotMinusSite(_))
        ));
    }

    /// Twelve curves in classes of sizes 4, 2, 1, 3, 1, 1, the first holding
    /// the minimal curve around the origin.
    pub(crate) const TWELVE_CURVES: &str = "\
+++++++++++++++++
+++++++++++++++++
+++++++++++-+-+++
++--++++++++++-++
+++++++++++++++++
+++++++++++++++++
+++++++-+++++-+-+
++++++-+-++++++++
+++++++++-+++++++
++--+++++++++++++
++--+++++++++++-+
+++++++++++++++++
+++++++++++++++++
";

    pub(crate) fn twelve_curve_config() -> SpinConfig {
        let grid = parse_grid(TWELVE_CURVES).unwrap();
        // shift so the origin sits at column 7, row 6
        let region = LatticeBox::with_origin(Site::new(vec![-7, -6]), grid.region().sides()).unwrap();
        SpinConfig::new(region, grid.spins().to_vec()).unwrap()
    }

    #[test]
    fn twelve_curve_class_structure() {
        let c = twelve_curve_config();
        assert_eq!(spin_at(&c, [0, 0]), Spin::Down);
        let classes = analyze(&c).unwrap();
        let total: usize = classes.iter().map(|cl| cl.contours().len()).sum();
        assert_eq!(total, 12);
        let mut sizes: Vec<usize> = classes.iter().map(|cl| cl.contours().len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 1, 1, 2, 3, 4]);
        let n = minimal_contour_around(&c, [0, 0], &classes).unwrap();
        assert_eq!(classes[n].contours().len(), 4);
        let unit = classes[n].contours().iter().find(|g| g.surrounds([0, 0])).unwrap();
        assert_eq!(unit.area(), 1);
    }

    #[test]
    fn unit_square_weight() {
        let c = config_from(&[[0, 0]], centered(2));
        let params = PcaParams::new(1.0, 0.0, CouplingKernel::nearest_neighbor_2d(1.0, 1.0, 1.0)).unwrap();
        let classes = analyze(&c).unwrap();
        assert_eq!(classes[0].boundary().len(), 5);
        // (cosh 3 / cosh 5)^5, evaluated with mpmath
        let f = contour_weight(&classes[0], &c, &params);
        assert!((f - 4.595_496_931_800_60e-5).abs() < 1e-17, "{f}");
        let tiny = params.clone();
        let tiny = PcaParams::new(1e-6, 0.0, tiny.kernel).unwrap();
        assert!((contour_weight(&classes[0], &c, &tiny) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn empty_class_weight_is_one() {
        let empty = ContourClass {
            contours: vec![],
            boundary_plus: BTreeSet::new(),
            boundary_minus: BTreeSet::new(),
        };
        let c = SpinConfig::uniform(centered(1), Spin::Up);
        let params = PcaParams::new(1.0, 0.0, CouplingKernel::nearest_neighbor_2d(1.0, 1.0, 1.0)).unwrap();
        assert_eq!(contour_weight(&empty, &c, &params), 1.0);
    }

    #[test]
    fn class_weights_multiply_to_the_plus_gibbs_weight() {
        use crate::gibbs::log_gibbs_product_weight;
        use crate::model::BoundaryCondition;
        let params = PcaParams::new(0.7, 0.0, CouplingKernel::nearest_neighbor_2d(0.5, 1.0, 0.8)).unwrap();
        let c = twelve_curve_config();
        let plus = SpinConfig::uniform(c.region().clone(), Spin::Up);
        let log_ratio = log_gibbs_product_weight(&c, &BoundaryCondition::plus(), &params).unwrap()
            - log_gibbs_product_weight(&plus, &BoundaryCondition::plus(), &params).unwrap();
        let product: f64 = analyze(&c)
            .unwrap()
            .iter()
            .map(|cl| contour_weight(cl, &c, &params).ln())
            .sum();
        assert!((product - log_ratio).abs() < 1e-10);
    }

    fn polyomino_oracle(len: usize) -> u64 {
        // cell sets containing the origin whose boundary is one simple cycle
        let max_cells = (len / 4) * (len / 4) + len;
        let mut seen: HashSet<BTreeSet<Point>> = HashSet::new();
        let mut frontier = vec![BTreeSet::from([[0i64, 0]])];
        let mut count = 0;
        while let Some(cells) = frontier.pop() {
            if !seen.insert(cells.clone()) {
                continue;
            }
            let perimeter: BTreeSet<DualEdge> = cells
                .iter()
                .flat_map(|&p| [[1, 0], [-1, 0], [0, 1], [0, -1]].map(|d| (p, [p[0] + d[0], p[1] + d[1]])))
                .filter(|(_, q)| !cells.contains(q))
                .map(|(p, q)| DualEdge::between(p, q))
                .collect();
            if perimeter.len() == len && degrees(&perimeter).values().all(|&d| d == 2) {
                let c = SpinConfig::from_fn(centered(len as i64), |s| {
                    Spin::from_bit(!cells.contains(&[s.coords()[0], s.coords()[1]]))
                });
                if split_into_peierls(&c, &perimeter).unwrap().len() == 1 {
                    count += 1;
                }
            }
            if cells.len() >= max_cells {
                continue;
            }
            for &p in &cells {
                for d in [[1, 0], [-1, 0], [0, 1], [0, -1]] {
                    let q = [p[0] + d[0], p[1] + d[1]];
                    if !cells.contains(&q) {
                        let mut grown = cells.clone();
                        grown.insert(q);
                        // a polygon of perimeter len spans at most len/2 − 1 cells per axis
                        let span = |axis: usize| {
                            let v: Vec<i64> = grown.iter().map(|c| c[axis]).collect();
                            v.iter().max().unwrap() - v.iter().min().unwrap() + 1
                        };
                        if span(0) + span(1) <= (len / 2) as i64 {
                            frontier.push(grown);
                        }
                    }
                }
            }
        }
        count
    }

    #[test]
    fn enumeration_matches_small_counts() {
        assert_eq!(enumerate_contours_around_origin(4).unwrap(), 1);
        assert_eq!(enumerate_contours_around_origin(6).unwrap(), 4);
        assert_eq!(enumerate_contours_around_origin(8).unwrap(), 22);
        assert_eq!(enumerate_contours_around_origin(5).unwrap(), 0);
        assert!(matches!(
            enumerate_contours_around_origin(16),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn enumeration_matches_polyomino_oracle() {
        for len in [4, 6, 8, 10] {
            assert_eq!(
                enumerate_contours_around_origin(len).unwrap(),
                polyomino_oracle(len),
                "l={len}"
            );
        }
    }

    #[test]
    fn enumeration_respects_the_counting_bound() {
        for len in (4..=12).step_by(2) {
            assert!(enumerate_contours_around_origin(len).unwrap() as f64 <= contour_count_bound(len));
        }
    }

    #[test]
    fn peierls_constant_examples() {
        let k = |a, b, c| CouplingKernel::nearest_neighbor_2d(a, b, c);
        assert_eq!(peierls_constants(&k(1.0, 1.0, 1.0)).unwrap(), (3.0, 5.0));
        assert_eq!(peierls_constants(&k(0.0, 1.0, 1.0)).unwrap(), (4.0, 4.0));
        assert_eq!(peierls_constants(&k(2.0, 1.0, 1.0)).unwrap(), (4.0, 6.0));
        let long = CouplingKernel::symmetric(2, [(vec![2, 0], 1.0)]).unwrap();
        assert_eq!(peierls_constants(&long), Err(Error::NotNearestNeighbor));
    }

    #[test]
    fn peierls_bound_outcomes() {
        let k = CouplingKernel::nearest_neighbor_2d(1.0, 1.0, 1.0);
        let r = peierls_bound(2.0, &k).unwrap();
        // cosh 6 / cosh 10, evaluated with mpmath
        assert!((r.ratio - 0.018_315_751_386_157_3).abs() < 1e-15);
        assert_eq!(r.outcome, PeierlsOutcome::Divergent);
        assert_eq!(
            peierls_bound(5.0, &CouplingKernel::nearest_neighbor_2d(0.0, 1.0, 1.0))
                .unwrap()
                .outcome,
            PeierlsOutcome::NonContractive
        );
        let mut last = f64::INFINITY;
        for beta in [6.0, 8.0, 12.0, 20.0] {
            let PeierlsOutcome::Bound(v) = peierls_bound(beta, &k).unwrap().outcome else {
                panic!("expected a bound at beta={beta}");
            };
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn series_matches_direct_summation() {
        let k = CouplingKernel::nearest_neighbor_2d(1.0, 1.0, 1.0);
        let report = peierls_bound(10.0, &k).unwrap();
        let PeierlsOutcome::Bound(v) = report.outcome else {
            panic!()
        };
        let direct: f64 = (4..400)
            .step_by(2)
            .map(|l| contour_count_bound(l) * report.ratio.powf(l as f64 / 4.0))
            .sum();
        assert!((v - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn threshold_bisection() {
        let k = CouplingKernel::nearest_neighbor_2d(1.0, 1.0, 1.0);
        let beta = peierls_threshold(&k, 0.5, 1e-6).unwrap().unwrap();
        let value = |b: f64| match peierls_bound(b, &k).unwrap().outcome {
            PeierlsOutcome::Bound(v) => v,
            _ => f64::INFINITY,
        };
        assert!(value(beta) < 0.5);
        assert!(value(beta - 1e-6) >= 0.5);
        assert_eq!(
            peierls_threshold(&CouplingKernel::nearest_neighbor_2d(0.0, 1.0, 1.0), 0.5, 1e-6).unwrap(),
            None
        );
    }

    fn random_config() -> impl Strategy<Value = SpinConfig> {
        (1usize..7, 1usize..7)
            .prop_flat_map(|(w, h)| (Just((w, h)), proptest::collection::vec(any::<bool>(), w * h)))
            .prop_map(|((w, h), bits)| {
                let region = LatticeBox::new(&[w, h]).unwrap();
                SpinConfig::new(region, bits.into_iter().map(Spin::from_bit).collect()).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn marked_segments_have_even_degree(c in random_config()) {
            let seg = marked_segments(&c).unwrap();
            prop_assert!(degrees(&seg).values().all(|d| *d == 2 || *d == 4));
        }

        #[test]
        fn curves_partition_the_marked_segments(c in random_config()) {
            let seg = marked_segments(&c).unwrap();
            let curves = split_into_peierls(&c, &seg).unwrap();
            prop_assert_eq!(curves.iter().map(PeierlsContour::len).sum::<usize>(), seg.len());
            let union: BTreeSet<DualEdge> = curves.iter().flat_map(|g| g.edges().iter().copied()).collect();
            prop_assert_eq!(&union, &seg);
            for g in &curves {
                prop_assert!(g.len() >= 4 && g.len() % 2 == 0);
                // no edge twice, consecutive edges share a vertex
                let distinct: BTreeSet<_> = g.edges().iter().collect();
                prop_assert_eq!(distinct.len(), g.len());
            }
        }

        #[test]
        fn class_length_is_at_most_four_times_boundary(c in random_config()) {
            for cl in analyze(&c).unwrap() {
                prop_assert!(cl.length() <= 4 * cl.boundary().len());
            }
        }

        #[test]
        fn boundaries_are_correct(c in random_config()) {
            for cl in analyze(&c).unwrap() {
                let edges = cl.edge_set();
                let touches = |p: Point| edges.iter().any(|e| {
                    let (a, b) = e.primal_pair();
                    a == p || b == p
                });
                for &p in cl.boundary_minus() {
                    prop_assert_eq!(spin_at(&c, p), Spin::Down);
                    prop_assert!(touches(p));
                }
                for &p in cl.boundary_plus() {
                    prop_assert_eq!(spin_at(&c, p), Spin::Up);
                    prop_assert!(touches(p));
                }
            }
        }

        #[test]
        fn flipping_inside_a_class_removes_exactly_it(c in random_config(), pick in any::<prop::sample::Index>()) {
            let classes = analyze(&c).unwrap();
            prop_assume!(!classes.is_empty());
            let k = pick.index(classes.len());
            let flipped = flip_inside(&classes[k], &c);
            let expected: BTreeSet<BTreeSet<DualEdge>> = classes
                .iter()
                .enumerate()
                .filter(|(n, _)| *n != k)
                .map(|(_, cl)| cl.edge_set())
                .collect();
            let got: BTreeSet<BTreeSet<DualEdge>> = analyze(&flipped).unwrap().iter().map(ContourClass::edge_set).collect();
            prop_assert_eq!(got, expected);
        }
    }
}
