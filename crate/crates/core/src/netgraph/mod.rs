//! Abstract tensor-network geometries and the two geometric quantities read
//! off them: geodesic lengths between open legs and minimal cuts around regions.

mod build;
mod flow;
mod predictor;

pub use build::{
    build_branching_mera_graph_1d, build_finite_range_mera_graph, build_finite_range_mera_graph_dims,
    build_finite_range_mera_graph_with, build_mera_graph, build_mera_graph_dims, build_mps_graph, build_peps_graph,
    level_dims,
};
pub use flow::{cut_size, holographic_cut, min_cut, MinCut};
pub use predictor::{layer_sum_predictor, Branch, BranchingTree, Prediction, ScalingClass};

use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    SiteTensor,
    Disentangler,
    Isometry,
    Top,
    PepsSite,
    /// Splits one coarse site into independent continuations (branching MERA).
    Branch,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::SiteTensor => "site-tensor",
            Role::Disentangler => "disentangler",
            Role::Isometry => "isometry",
            Role::Top => "top",
            Role::PepsSite => "peps-site",
            Role::Branch => "branch",
        })
    }
}

/// Physical site coordinate: an integer on a chain or a pair on a grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Coord {
    Line(usize),
    Grid(usize, usize),
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coord::Line(x) => write!(f, "{x}"),
            Coord::Grid(x, y) => write!(f, "{x},{y}"),
        }
    }
}

impl From<usize> for Coord {
    fn from(x: usize) -> Self {
        Coord::Line(x)
    }
}

impl From<(usize, usize)> for Coord {
    fn from((x, y): (usize, usize)) -> Self {
        Coord::Grid(x, y)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Node {
    pub role: Role,
    /// Vertical position used to orient the network (physical legs at the
    /// bottom): 3z for disentanglers of layer z, 3z+1 for isometries, 3z−1 for
    /// branch nodes at scale z, 3T for top nodes.
    pub height: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Bond {
    pub u: usize,
    pub v: usize,
    pub chi: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryKind {
    Mps,
    Peps,
    Mera,
    FiniteRangeMera,
    BranchingMera,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Periodic,
    Open,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GraphMeta {
    pub kind: GeometryKind,
    pub n_sites: usize,
    pub layers: Option<usize>,
    pub z0: Option<usize>,
    pub branch_schedule: Vec<usize>,
    pub scale_invariant: bool,
    pub boundary: Boundary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TNGraph {
    nodes: Vec<Node>,
    bonds: Vec<Bond>,
    site_legs: BTreeMap<Coord, usize>,
    site_dim: usize,
    meta: GraphMeta,
}

impl TNGraph {
    pub(crate) fn new(meta: GraphMeta, site_dim: usize) -> Self {
        TNGraph { nodes: Vec::new(), bonds: Vec::new(), site_legs: BTreeMap::new(), site_dim, meta }
    }

    pub(crate) fn add_node(&mut self, role: Role, height: usize) -> usize {
        self.nodes.push(Node { role, height });
        self.nodes.len() - 1
    }

    pub(crate) fn add_bond(&mut self, u: usize, v: usize, chi: usize) {
        self.bonds.push(Bond { u, v, chi });
    }

    pub(crate) fn add_leg(&mut self, site: Coord, node: usize) {
        let prev = self.site_legs.insert(site, node);
        debug_assert!(prev.is_none(), "site {site} attached twice");
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn site_legs(&self) -> &BTreeMap<Coord, usize> {
        &self.site_legs
    }

    /// Dimension of every open (physical) leg.
    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn meta(&self) -> &GraphMeta {
        &self.meta
    }

    pub fn n_sites(&self) -> usize {
        self.site_legs.len()
    }

    pub fn count_role(&self, role: Role) -> usize {
        self.nodes.iter().filter(|n| n.role == role).count()
    }

    /// Set every virtual bond to the same dimension.
    pub fn with_uniform_bond_dim(mut self, chi: usize) -> Result<Self> {
        if chi == 0 {
            return Err(invalid("bond dimension must be >= 1"));
        }
        for b in &mut self.bonds {
            b.chi = chi;
        }
        Ok(self)
    }

    pub fn with_site_dim(mut self, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(invalid("site dimension must be >= 1"));
        }
        self.site_dim = d;
        Ok(self)
    }

    pub(crate) fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (e, b) in self.bonds.iter().enumerate() {
            adj[b.u].push((b.v, e));
            adj[b.v].push((b.u, e));
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        self.bfs(0).iter().all(Option::is_some)
    }

    /// Hop distances from `start` to every node (None when unreachable).
    pub fn bfs(&self, start: usize) -> Vec<Option<usize>> {
        let adj = self.adjacency();
        let mut dist = vec![None; self.nodes.len()];
        dist[start] = Some(0);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &(v, _) in &adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn leg_node(&self, site: Coord) -> Result<usize> {
        self.site_legs.get(&site).copied().ok_or_else(|| Error::UnknownSite(site.to_string()))
    }

    /// Check the structural invariants: bond dims ≥ 1, endpoints valid,
    /// legs on existing nodes, connectivity.
    pub fn validate(&self) -> Result<()> {
        for b in &self.bonds {
            if b.chi == 0 || b.u >= self.nodes.len() || b.v >= self.nodes.len() || b.u == b.v {
                return Err(invalid(format!("bad bond {b:?}")));
            }
        }
        if self.site_legs.values().any(|&n| n >= self.nodes.len()) {
            return Err(invalid("site leg on missing node"));
        }
        if !self.is_connected() {
            return Err(invalid("graph is not connected"));
        }
        Ok(())
    }

    /// Line-oriented export: `node id role`, `bond u v chi`, `site coord node`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, n) in self.nodes.iter().enumerate() {
            out.push_str(&format!("node {i} {}\n", n.role));
        }
        for b in &self.bonds {
            out.push_str(&format!("bond {} {} {}\n", b.u, b.v, b.chi));
        }
        for (c, n) in &self.site_legs {
            out.push_str(&format!("site {c} {n}\n"));
        }
        out
    }
}

/// Set of physical sites.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    sites: BTreeSet<Coord>,
    contiguous: bool,
}

impl Region {
    pub fn new(sites: impl IntoIterator<Item = Coord>) -> Result<Self> {
        let sites: BTreeSet<Coord> = sites.into_iter().collect();
        if sites.is_empty() {
            return Err(invalid("region must be nonempty"));
        }
        let lines = sites.iter().all(|c| matches!(c, Coord::Line(_)));
        let grids = sites.iter().all(|c| matches!(c, Coord::Grid(..)));
        if !lines && !grids {
            return Err(invalid("region mixes line and grid coordinates"));
        }
        let contiguous = if lines {
            let xs: Vec<usize> = sites.iter().map(|c| if let Coord::Line(x) = c { *x } else { 0 }).collect();
            xs.windows(2).all(|w| w[1] == w[0] + 1)
        } else {
            grid_connected(&sites)
        };
        Ok(Region { sites, contiguous })
    }

    /// Sites start..start+len on a chain.
    pub fn interval(start: usize, len: usize) -> Result<Self> {
        Region::new((start..start + len).map(Coord::Line))
    }

    /// `len` consecutive sites starting at `start` on a ring of `n` sites.
    pub fn ring_interval(start: usize, len: usize, n: usize) -> Result<Self> {
        if len > n || n == 0 {
            return Err(invalid(format!("interval of {len} sites on a ring of {n}")));
        }
        Region::new((0..len).map(|k| Coord::Line((start + k) % n)))
    }

    /// The `len` central sites of an `n`-site chain.
    pub fn central(len: usize, n: usize) -> Result<Self> {
        if len == 0 || len > n {
            return Err(invalid(format!("central block of {len} sites in {n}")));
        }
        Region::interval((n - len) / 2, len)
    }

    pub fn rect(x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        Region::new((x0..x0 + w).flat_map(|x| (y0..y0 + h).map(move |y| Coord::Grid(x, y))))
    }

    pub fn sites(&self) -> &BTreeSet<Coord> {
        &self.sites
    }

    pub fn contains(&self, c: &Coord) -> bool {
        self.sites.contains(c)
    }

    pub fn is_contiguous(&self) -> bool {
        self.contiguous
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

fn grid_connected(sites: &BTreeSet<Coord>) -> bool {
    let start = *sites.iter().next().unwrap();
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(Coord::Grid(x, y)) = stack.pop() {
        let mut nbrs = vec![Coord::Grid(x + 1, y), Coord::Grid(x, y + 1)];
        if x > 0 {
            nbrs.push(Coord::Grid(x - 1, y));
        }
        if y > 0 {
            nbrs.push(Coord::Grid(x, y - 1));
        }
        for n in nbrs {
            if sites.contains(&n) && seen.insert(n) {
                stack.push(n);
            }
        }
    }
    seen.len() == sites.len()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathMetric {
    /// Tensors on the path, both endpoint tensors included.
    Tensors,
    /// Bonds traversed.
    Links,
}

/// Length of the shortest path between the tensors carrying the legs of
/// `x1` and `x2`, counted in tensors (endpoints included).
pub fn geodesic(g: &TNGraph, x1: impl Into<Coord>, x2: impl Into<Coord>) -> Result<usize> {
    geodesic_with(g, x1.into(), x2.into(), PathMetric::Tensors)
}

pub fn geodesic_with(g: &TNGraph, x1: Coord, x2: Coord, metric: PathMetric) -> Result<usize> {
    let a = g.leg_node(x1)?;
    let b = g.leg_node(x2)?;
    let links = g.bfs(a)[b].ok_or_else(|| invalid(format!("no path between sites {x1} and {x2}")))?;
    Ok(match metric {
        PathMetric::Tensors => links + 1,
        PathMetric::Links => links,
    })
}

/// Tensor-count geodesics from `x1` to each of `targets` with one BFS.
pub fn geodesics_from(g: &TNGraph, x1: Coord, targets: &[Coord]) -> Result<Vec<usize>> {
    let dist = g.bfs(g.leg_node(x1)?);
    targets
        .iter()
        .map(|&t| {
            let node = g.leg_node(t)?;
            dist[node].map(|d| d + 1).ok_or_else(|| invalid(format!("no path between sites {x1} and {t}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_contiguity() {
        assert!(Region::interval(3, 4).unwrap().is_contiguous());
        assert!(!Region::new([Coord::Line(1), Coord::Line(3)]).unwrap().is_contiguous());
        assert!(Region::rect(1, 1, 3, 2).unwrap().is_contiguous());
        assert!(!Region::new([Coord::Grid(0, 0), Coord::Grid(2, 2)]).unwrap().is_contiguous());
        assert!(Region::new(Vec::<Coord>::new()).is_err());
        assert_eq!(Region::central(4, 10).unwrap(), Region::interval(3, 4).unwrap());
    }

    #[test]
    fn text_export_is_stable() {
        let g = build_mps_graph(3).unwrap();
        assert_eq!(
            g.to_text(),
            "node 0 site-tensor\nnode 1 site-tensor\nnode 2 site-tensor\n\
             bond 0 1 2\nbond 1 2 2\n\
             site 0 0\nsite 1 1\nsite 2 2\n"
        );
    }
}
