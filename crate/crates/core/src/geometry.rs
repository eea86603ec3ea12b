//! Periodic square-lattice bookkeeping for the L x L torus.
//!
//! Indexing is row-major from (0, 0):
//! - star (vertex) `(x, y)` has index `y * L + x`;
//! - plaquette `(x, y)` is the face whose lower-left corner is star `(x, y)`,
//!   index `y * L + x`;
//! - the horizontal edge leaving star `(x, y)` towards `+x` has index
//!   `2 * (y * L + x)`, the vertical edge towards `+y` has index
//!   `2 * (y * L + x) + 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub x: usize,
    pub y: usize,
}

impl Site {
    pub fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    PosX,
    NegX,
    PosY,
    NegY,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Self::PosX, Self::NegX, Self::PosY, Self::NegY];

    pub fn unit(self) -> [i64; 2] {
        match self {
            Self::PosX => [1, 0],
            Self::NegX => [-1, 0],
            Self::PosY => [0, 1],
            Self::NegY => [0, -1],
        }
    }

    pub fn reverse(self) -> Self {
        match self {
            Self::PosX => Self::NegX,
            Self::NegX => Self::PosX,
            Self::PosY => Self::NegY,
            Self::NegY => Self::PosY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeOrientation {
    Horizontal,
    Vertical,
}

/// Whether a path lives on the lattice (stars joined by edges, carrying
/// Z-strings) or on the dual lattice (plaquettes joined across edges,
/// carrying X-strings).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Primal,
    Dual,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeGeometry {
    size: usize,
    star_edges: Vec<[usize; 4]>,
    plaquette_edges: Vec<[usize; 4]>,
    edge_stars: Vec<[usize; 2]>,
    edge_plaquettes: Vec<[usize; 2]>,
}

/// Build the L x L torus.
pub fn build_torus(size: usize) -> Result<LatticeGeometry> {
    LatticeGeometry::torus(size)
}

impl LatticeGeometry {
    pub fn torus(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::InvalidSize(size));
        }
        let n = size * size;
        let wrap = |v: isize| v.rem_euclid(size as isize) as usize;
        let idx = |x: isize, y: isize| wrap(y) * size + wrap(x);
        let h = |x: isize, y: isize| 2 * idx(x, y);
        let v = |x: isize, y: isize| 2 * idx(x, y) + 1;

        let mut star_edges = Vec::with_capacity(n);
        let mut plaquette_edges = Vec::with_capacity(n);
        for s in 0..n {
            let (x, y) = ((s % size) as isize, (s / size) as isize);
            star_edges.push([h(x, y), h(x - 1, y), v(x, y), v(x, y - 1)]);
            plaquette_edges.push([h(x, y), h(x, y + 1), v(x, y), v(x + 1, y)]);
        }
        let mut edge_stars = vec![[0; 2]; 2 * n];
        let mut edge_plaquettes = vec![[0; 2]; 2 * n];
        for s in 0..n {
            let (x, y) = ((s % size) as isize, (s / size) as isize);
            edge_stars[h(x, y)] = [idx(x, y), idx(x + 1, y)];
            edge_stars[v(x, y)] = [idx(x, y), idx(x, y + 1)];
            edge_plaquettes[h(x, y)] = [idx(x, y - 1), idx(x, y)];
            edge_plaquettes[v(x, y)] = [idx(x - 1, y), idx(x, y)];
        }
        Ok(Self {
            size,
            star_edges,
            plaquette_edges,
            edge_stars,
            edge_plaquettes,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn num_sites(&self) -> usize {
        self.size * self.size
    }

    pub fn num_stars(&self) -> usize {
        self.star_edges.len()
    }

    pub fn num_plaquettes(&self) -> usize {
        self.plaquette_edges.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_stars.len()
    }

    pub fn site(&self, index: usize) -> Site {
        Site::new(index % self.size, index / self.size)
    }

    pub fn index(&self, site: Site) -> usize {
        (site.y % self.size) * self.size + site.x % self.size
    }

    pub fn star_edges(&self, star: usize) -> [usize; 4] {
        self.star_edges[star]
    }

    pub fn plaquette_edges(&self, plaquette: usize) -> [usize; 4] {
        self.plaquette_edges[plaquette]
    }

    /// The two stars at the ends of an edge.
    pub fn edge_stars(&self, edge: usize) -> [usize; 2] {
        self.edge_stars[edge]
    }

    /// The two plaquettes sharing an edge.
    pub fn edge_plaquettes(&self, edge: usize) -> [usize; 2] {
        self.edge_plaquettes[edge]
    }

    pub fn edge_orientation(&self, edge: usize) -> EdgeOrientation {
        if edge % 2 == 0 {
            EdgeOrientation::Horizontal
        } else {
            EdgeOrientation::Vertical
        }
    }

    /// Edge index from the coordinates of its base star and orientation.
    pub fn edge_at(&self, x: isize, y: isize, orientation: EdgeOrientation) -> usize {
        let l = self.size as isize;
        let base = 2 * (y.rem_euclid(l) as usize * self.size + x.rem_euclid(l) as usize);
        match orientation {
            EdgeOrientation::Horizontal => base,
            EdgeOrientation::Vertical => base + 1,
        }
    }

    /// Midpoint of an edge in lattice units.
    pub fn edge_midpoint(&self, edge: usize) -> [f64; 2] {
        let s = self.site(edge / 2);
        match self.edge_orientation(edge) {
            EdgeOrientation::Horizontal => [s.x as f64 + 0.5, s.y as f64],
            EdgeOrientation::Vertical => [s.x as f64, s.y as f64 + 0.5],
        }
    }

    /// Minimum-image Euclidean distance between edge midpoints.
    pub fn edge_distance(&self, a: usize, b: usize) -> f64 {
        let (pa, pb) = (self.edge_midpoint(a), self.edge_midpoint(b));
        let l = self.size as f64;
        let d = |u: f64, v: f64| {
            let t = (u - v).rem_euclid(l);
            t.min(l - t)
        };
        d(pa[0], pb[0]).hypot(d(pa[1], pb[1]))
    }

    /// Neighbouring vertex (star or plaquette, same indexing) one step away.
    pub fn neighbor(&self, vertex: usize, dir: Direction) -> usize {
        let s = self.site(vertex);
        let l = self.size as isize;
        let [dx, dy] = dir.unit();
        let x = (s.x as isize + dx as isize).rem_euclid(l) as usize;
        let y = (s.y as isize + dy as isize).rem_euclid(l) as usize;
        y * self.size + x
    }

    /// Edge traversed (primal) or crossed (dual) by one step.
    pub fn step_edge(&self, kind: PathKind, vertex: usize, dir: Direction) -> usize {
        let s = self.site(vertex);
        let (x, y) = (s.x as isize, s.y as isize);
        use EdgeOrientation::*;
        match (kind, dir) {
            (PathKind::Primal, Direction::PosX) => self.edge_at(x, y, Horizontal),
            (PathKind::Primal, Direction::NegX) => self.edge_at(x - 1, y, Horizontal),
            (PathKind::Primal, Direction::PosY) => self.edge_at(x, y, Vertical),
            (PathKind::Primal, Direction::NegY) => self.edge_at(x, y - 1, Vertical),
            (PathKind::Dual, Direction::PosX) => self.edge_at(x + 1, y, Vertical),
            (PathKind::Dual, Direction::NegX) => self.edge_at(x, y, Vertical),
            (PathKind::Dual, Direction::PosY) => self.edge_at(x, y + 1, Horizontal),
            (PathKind::Dual, Direction::NegY) => self.edge_at(x, y, Horizontal),
        }
    }

    /// Vertices (stars for primal, plaquettes for dual) touched an odd number
    /// of times by an edge multiset.
    pub fn boundary(&self, kind: PathKind, edges: &[usize]) -> Vec<usize> {
        let mut parity = std::collections::BTreeMap::<usize, bool>::new();
        for &e in edges {
            let ends = match kind {
                PathKind::Primal => self.edge_stars[e],
                PathKind::Dual => self.edge_plaquettes[e],
            };
            for v in ends {
                *parity.entry(v).or_insert(false) ^= true;
            }
        }
        parity.into_iter().filter(|&(_, odd)| odd).map(|(v, _)| v).collect()
    }

    pub fn distance(&self, a: usize, b: usize) -> usize {
        periodic_l1_distance(self.site(a), self.site(b), self.size)
    }

    /// Staircase shortest path from `from` to `to`, x-moves first; on an even
    /// torus a separation of exactly L/2 is walked in the positive direction.
    pub fn shortest_path(&self, kind: PathKind, from: usize, to: usize) -> Result<LatticePath> {
        if from == to {
            return Err(Error::DegeneratePath(from));
        }
        let (a, b) = (self.site(from), self.site(to));
        let mut dirs = Vec::new();
        for (delta, pos, neg) in [
            ((b.x + self.size - a.x) % self.size, Direction::PosX, Direction::NegX),
            ((b.y + self.size - a.y) % self.size, Direction::PosY, Direction::NegY),
        ] {
            if 2 * delta <= self.size {
                dirs.extend(std::iter::repeat_n(pos, delta));
            } else {
                dirs.extend(std::iter::repeat_n(neg, self.size - delta));
            }
        }
        Ok(LatticePath::walk(self, kind, from, &dirs))
    }
}

/// Minimum over periodic images of |dx| + |dy|.
pub fn periodic_l1_distance(a: Site, b: Site, size: usize) -> usize {
    let d = |u: usize, v: usize| {
        let t = (u + size - v % size) % size;
        t.min(size - t)
    };
    d(a.x % size, b.x) + d(a.y % size, b.y)
}

/// Hausdorff pseudo-distance between two n-site configurations.
pub fn hausdorff_distance(x: &[Site], y: &[Site], size: usize) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::ArityMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::InsufficientData("empty configuration".into()));
    }
    let to_set = |p: Site, set: &[Site]| {
        set.iter()
            .map(|&q| periodic_l1_distance(p, q, size))
            .min()
            .unwrap_or(0)
    };
    let forward = x.iter().map(|&p| to_set(p, y)).max().unwrap_or(0);
    let backward = y.iter().map(|&q| to_set(q, x)).max().unwrap_or(0);
    Ok(forward.max(backward))
}

/// An ordered walk on the lattice or the dual lattice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticePath {
    pub kind: PathKind,
    /// Visited vertices, `edges.len() + 1` of them.
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
}

impl LatticePath {
    pub fn empty(kind: PathKind, at: usize) -> Self {
        Self {
            kind,
            vertices: vec![at],
            edges: Vec::new(),
        }
    }

    pub fn walk(geometry: &LatticeGeometry, kind: PathKind, start: usize, dirs: &[Direction]) -> Self {
        let mut vertices = Vec::with_capacity(dirs.len() + 1);
        let mut edges = Vec::with_capacity(dirs.len());
        let mut at = start;
        vertices.push(at);
        for &d in dirs {
            edges.push(geometry.step_edge(kind, at, d));
            at = geometry.neighbor(at, d);
            vertices.push(at);
        }
        Self {
            kind,
            vertices,
            edges,
        }
    }

    /// Straight path of `length` steps along `dir`.
    pub fn straight(geometry: &LatticeGeometry, kind: PathKind, start: usize, dir: Direction, length: usize) -> Self {
        Self::walk(geometry, kind, start, &vec![dir; length])
    }

    pub fn start(&self) -> usize {
        self.vertices[0]
    }

    pub fn end(&self) -> usize {
        *self.vertices.last().expect("paths hold at least one vertex")
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        self.start() == self.end()
    }

    /// Checks that each edge joins the consecutive vertices it claims to.
    pub fn is_consistent(&self, geometry: &LatticeGeometry) -> bool {
        if self.vertices.len() != self.edges.len() + 1 {
            return false;
        }
        self.edges.iter().enumerate().all(|(i, &e)| {
            let ends = match self.kind {
                PathKind::Primal => geometry.edge_stars(e),
                PathKind::Dual => geometry.edge_plaquettes(e),
            };
            let (a, b) = (self.vertices[i], self.vertices[i + 1]);
            (ends[0] == a && ends[1] == b) || (ends[0] == b && ends[1] == a)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn torus_counts() {
        for (l, e, s) in [(2, 8, 4), (10, 200, 100), (40, 3200, 1600)] {
            let g = build_torus(l).unwrap();
            assert_eq!(g.num_edges(), e);
            assert_eq!(g.num_stars(), s);
            assert_eq!(g.num_plaquettes(), s);
            assert_eq!(g.num_edges(), 2 * g.num_stars());
        }
        assert_eq!(build_torus(1), Err(Error::InvalidSize(1)));
        assert_eq!(build_torus(0), Err(Error::InvalidSize(0)));
    }

    #[test]
    fn incidence_invariants() {
        for l in [2, 3, 5] {
            let g = build_torus(l).unwrap();
            let mut in_stars = vec![0; g.num_edges()];
            let mut in_plaqs = vec![0; g.num_edges()];
            for s in 0..g.num_stars() {
                for e in g.star_edges(s) {
                    in_stars[e] += 1;
                    assert!(g.edge_stars(e).contains(&s));
                }
                for e in g.plaquette_edges(s) {
                    in_plaqs[e] += 1;
                    assert!(g.edge_plaquettes(e).contains(&s));
                }
            }
            assert!(in_stars.iter().all(|&c| c == 2));
            assert!(in_plaqs.iter().all(|&c| c == 2));
        }
    }

    #[test]
    fn l1_examples() {
        assert_eq!(periodic_l1_distance(Site::new(0, 0), Site::new(0, 0), 10), 0);
        assert_eq!(periodic_l1_distance(Site::new(0, 0), Site::new(9, 0), 10), 1);
        assert_eq!(periodic_l1_distance(Site::new(0, 0), Site::new(5, 5), 10), 10);
    }

    #[test]
    fn shortest_path_examples() {
        let g = build_torus(10).unwrap();
        let at = |x, y| g.index(Site::new(x, y));
        let p = g.shortest_path(PathKind::Primal, at(0, 0), at(1, 0)).unwrap();
        assert_eq!(p.len(), 1);
        let p = g.shortest_path(PathKind::Primal, at(0, 0), at(9, 0)).unwrap();
        assert_eq!(p.edges, vec![g.edge_at(-1, 0, EdgeOrientation::Horizontal)]);
        let p = g.shortest_path(PathKind::Primal, at(0, 0), at(3, 2)).unwrap();
        assert_eq!(p.len(), 5);
        assert!(p.is_consistent(&g));
        assert_eq!(g.boundary(PathKind::Primal, &p.edges), vec![at(0, 0), at(3, 2)]);
        assert_eq!(
            g.shortest_path(PathKind::Primal, 3, 3),
            Err(Error::DegeneratePath(3))
        );
    }

    #[test]
    fn dual_paths_cross_the_right_edges() {
        let g = build_torus(6).unwrap();
        let p = LatticePath::straight(&g, PathKind::Dual, g.index(Site::new(1, 2)), Direction::PosX, 3);
        assert!(p.is_consistent(&g));
        assert_eq!(
            g.boundary(PathKind::Dual, &p.edges),
            vec![g.index(Site::new(1, 2)), g.index(Site::new(4, 2))]
        );
        assert!(p
            .edges
            .iter()
            .all(|&e| g.edge_orientation(e) == EdgeOrientation::Vertical));
    }

    #[test]
    fn hausdorff_examples() {
        let s = |x, y| Site::new(x, y);
        assert_eq!(hausdorff_distance(&[s(2, 3)], &[s(2, 3)], 10).unwrap(), 0);
        assert_eq!(
            hausdorff_distance(&[s(0, 0), s(1, 0)], &[s(1, 0), s(0, 0)], 10).unwrap(),
            0
        );
        // max-min by hand: (0,4) is 3 away from (0,1), everything else is closer
        assert_eq!(
            hausdorff_distance(&[s(0, 0), s(0, 1)], &[s(0, 0), s(0, 4)], 10).unwrap(),
            3
        );
        assert!(matches!(
            hausdorff_distance(&[s(0, 0)], &[s(0, 0), s(1, 1)], 10),
            Err(Error::ArityMismatch { .. })
        ));
    }

    fn site(l: usize) -> impl Strategy<Value = Site> {
        (0..l, 0..l).prop_map(|(x, y)| Site::new(x, y))
    }

    proptest! {
        #[test]
        fn l1_is_a_metric(l in 2usize..16, seed in any::<u64>()) {
            let mut r = seed;
            let mut next = || { r = crate::seed::mix64(r.wrapping_add(1)); (r % l as u64) as usize };
            let (a, b, c) = (
                Site::new(next(), next()),
                Site::new(next(), next()),
                Site::new(next(), next()),
            );
            let d = |p, q| periodic_l1_distance(p, q, l);
            prop_assert_eq!(d(a, b), d(b, a));
            prop_assert!(d(a, c) <= d(a, b) + d(b, c));
            prop_assert!(d(a, b) <= 2 * (l / 2));
            prop_assert_eq!(d(a, b) == 0, a == b);
        }

        #[test]
        fn hausdorff_zero_iff_same_set(
            x in proptest::collection::btree_set(site(6), 1..4),
            y in proptest::collection::btree_set(site(6), 1..4),
        ) {
            prop_assume!(x.len() == y.len());
            let xs: Vec<_> = x.iter().copied().collect();
            let ys: Vec<_> = y.iter().copied().collect();
            let h = hausdorff_distance(&xs, &ys, 6).unwrap();
            prop_assert_eq!(h == 0, x == y);
        }
    }

    #[test]
    fn shortest_path_length_is_l1_for_random_pairs() {
        let mut state = 7u64;
        for l in [2usize, 3, 7, 10, 13] {
            let g = build_torus(l).unwrap();
            for _ in 0..1000 {
                state = crate::seed::mix64(state);
                let a = (state % g.num_stars() as u64) as usize;
                state = crate::seed::mix64(state);
                let b = (state % g.num_stars() as u64) as usize;
                if a == b {
                    continue;
                }
                for kind in [PathKind::Primal, PathKind::Dual] {
                    let p = g.shortest_path(kind, a, b).unwrap();
                    assert_eq!(p.len(), g.distance(a, b));
                    assert_eq!((p.start(), p.end()), (a, b));
                    assert!(p.is_consistent(&g));
                }
            }
        }
    }
}
