//! Minimal cuts via max-flow (Dinic).
//!
//! Open legs are modelled as bonds of dimension `site_dim` to a terminal
//! per site, so a cut may sever a physical leg as well as a virtual bond:
//! a tensor carrying legs from both sides of the partition is then allowed.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use super::{Coord, Region, TNGraph};
use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinCut {
    /// Fewest bonds (legs included) separating the region from the rest.
    pub n_a: usize,
    /// Smallest Σ log₂χ_e over separating cuts.
    pub weight: f64,
    /// The region was the whole lattice; both numbers are 0 by convention.
    pub whole_lattice: bool,
}

struct Dinic {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<f64>,
    level: Vec<i64>,
    next: Vec<usize>,
}

const FLOW_EPS: f64 = 1e-12;

impl Dinic {
    fn new(n: usize) -> Self {
        Dinic { head: vec![Vec::new(); n], to: Vec::new(), cap: Vec::new(), level: vec![0; n], next: vec![0; n] }
    }

    /// Undirected edge: capacity c in both directions.
    fn add_undirected(&mut self, u: usize, v: usize, c: f64) {
        self.head[u].push(self.to.len());
        self.to.push(v);
        self.cap.push(c);
        self.head[v].push(self.to.len());
        self.to.push(u);
        self.cap.push(c);
    }

    fn add_directed(&mut self, u: usize, v: usize, c: f64) {
        self.head[u].push(self.to.len());
        self.to.push(v);
        self.cap.push(c);
        self.head[v].push(self.to.len());
        self.to.push(u);
        self.cap.push(0.0);
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if self.cap[e] > FLOW_EPS && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    q.push_back(v);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: f64) -> f64 {
        if u == t {
            return pushed;
        }
        while self.next[u] < self.head[u].len() {
            let e = self.head[u][self.next[u]];
            let v = self.to[e];
            if self.cap[e] > FLOW_EPS && self.level[v] == self.level[u] + 1 {
                let got = self.dfs(v, t, pushed.min(self.cap[e]));
                if got > FLOW_EPS {
                    self.cap[e] -= got;
                    self.cap[e ^ 1] += got;
                    return got;
                }
            }
            self.next[u] += 1;
        }
        0.0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut flow = 0.0;
        while self.bfs(s, t) {
            self.next.iter_mut().for_each(|x| *x = 0);
            loop {
                let f = self.dfs(s, t, f64::INFINITY);
                if f <= FLOW_EPS {
                    break;
                }
                flow += f;
            }
        }
        flow
    }
}

fn check_region(g: &TNGraph, a: &Region) -> Result<()> {
    for c in a.sites() {
        if !g.site_legs().contains_key(c) {
            return Err(Error::UnknownSite(c.to_string()));
        }
    }
    Ok(())
}

fn cut_value(g: &TNGraph, a: &Region, capacity: impl Fn(usize) -> f64) -> f64 {
    let n = g.nodes().len();
    let sites: Vec<Coord> = g.site_legs().keys().copied().collect();
    let src = n + sites.len();
    let sink = src + 1;
    let mut net = Dinic::new(sink + 1);
    for b in g.bonds() {
        net.add_undirected(b.u, b.v, capacity(b.chi));
    }
    let leg_cap = capacity(g.site_dim());
    for (k, c) in sites.iter().enumerate() {
        let term = n + k;
        net.add_undirected(term, g.site_legs()[c], leg_cap);
        if a.contains(c) {
            net.add_directed(src, term, f64::INFINITY);
        } else {
            net.add_directed(term, sink, f64::INFINITY);
        }
    }
    net.max_flow(src, sink)
}

/// Minimal number of bonds (unit capacities) and minimal log₂χ weight
/// separating the legs of `a` from all other legs.
pub fn min_cut(g: &TNGraph, a: &Region) -> Result<MinCut> {
    check_region(g, a)?;
    if a.len() == g.n_sites() {
        return Ok(MinCut { n_a: 0, weight: 0.0, whole_lattice: true });
    }
    let unit = cut_value(g, a, |_| 1.0);
    let weight = cut_value(g, a, |chi| (chi as f64).log2());
    Ok(MinCut { n_a: unit.round() as usize, weight, whole_lattice: false })
}

/// Number of bonds (legs included) crossing the node partition where
/// `side_a` holds the tensors assigned to the region's side.
pub fn cut_size(g: &TNGraph, a: &Region, side_a: &BTreeSet<usize>) -> Result<usize> {
    check_region(g, a)?;
    let bonds = g.bonds().iter().filter(|b| side_a.contains(&b.u) != side_a.contains(&b.v)).count();
    let legs = g.site_legs().iter().filter(|(c, n)| a.contains(c) != side_a.contains(n)).count();
    Ok(bonds + legs)
}

/// Size of the cut around Ω_A = { tensors whose downward light cone reaches
/// only sites of A }: the region's shadow in the holographic direction.
pub fn holographic_cut(g: &TNGraph, a: &Region) -> Result<usize> {
    check_region(g, a)?;
    let adj = g.adjacency();
    let mut order: Vec<usize> = (0..g.nodes().len()).collect();
    order.sort_by_key(|&i| g.nodes()[i].height);
    let mut footprint: Vec<BTreeSet<Coord>> = vec![BTreeSet::new(); g.nodes().len()];
    for (c, &n) in g.site_legs() {
        footprint[n].insert(*c);
    }
    for &u in &order {
        let h = g.nodes()[u].height;
        let mut acc = footprint[u].clone();
        for &(v, _) in &adj[u] {
            if g.nodes()[v].height < h {
                acc.extend(footprint[v].iter().copied());
            }
        }
        footprint[u] = acc;
    }
    let side: BTreeSet<usize> = (0..g.nodes().len())
        .filter(|&u| !footprint[u].is_empty() && footprint[u].iter().all(|c| a.contains(c)))
        .collect();
    if side.is_empty() {
        return Err(invalid("region shadows no tensor"));
    }
    cut_size(g, a, &side)
}
