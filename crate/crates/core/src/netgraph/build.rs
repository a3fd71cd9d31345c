//! Graph builders for MPS, PEPS and binary MERA geometries.
//!
//! MERA convention, fixed everywhere in the crate: level z has width
//! W_z = N / 2^z and periodic boundaries. Layer z maps level z+1 down to
//! level z: isometry i emits sites (2i, 2i+1) of level z, then disentangler j
//! acts on the pair (2j+1, 2j+2 mod W_z). Physical legs hang off the layer-0
//! disentanglers. With open boundaries the seam disentangler on (W_z−1, 0)
//! is left out and those two sites attach straight to their isometries.

use std::collections::BTreeSet;

use super::{Boundary, Coord, GeometryKind, GraphMeta, Role, TNGraph};
use crate::error::{invalid, Result};

const DEFAULT_DIM: usize = 2;

pub fn build_mps_graph(n: usize) -> Result<TNGraph> {
    if n < 2 {
        return Err(invalid(format!("MPS graph needs N >= 2, got {n}")));
    }
    let meta = GraphMeta {
        kind: GeometryKind::Mps,
        n_sites: n,
        layers: None,
        z0: None,
        branch_schedule: Vec::new(),
        scale_invariant: false,
        boundary: Boundary::Open,
    };
    let mut g = TNGraph::new(meta, DEFAULT_DIM);
    for x in 0..n {
        let id = g.add_node(Role::SiteTensor, 0);
        g.add_leg(Coord::Line(x), id);
    }
    for x in 0..n - 1 {
        g.add_bond(x, x + 1, DEFAULT_DIM);
    }
    Ok(g)
}

/// Open-boundary grid; node id of (x, y) is x·ly + y.
pub fn build_peps_graph(lx: usize, ly: usize) -> Result<TNGraph> {
    if lx < 2 || ly < 2 {
        return Err(invalid(format!("PEPS graph needs Lx, Ly >= 2, got {lx}x{ly}")));
    }
    let meta = GraphMeta {
        kind: GeometryKind::Peps,
        n_sites: lx * ly,
        layers: None,
        z0: None,
        branch_schedule: Vec::new(),
        scale_invariant: false,
        boundary: Boundary::Open,
    };
    let mut g = TNGraph::new(meta, DEFAULT_DIM);
    for x in 0..lx {
        for y in 0..ly {
            let id = g.add_node(Role::PepsSite, 0);
            g.add_leg(Coord::Grid(x, y), id);
        }
    }
    for x in 0..lx {
        for y in 0..ly {
            let id = x * ly + y;
            if x + 1 < lx {
                g.add_bond(id, id + ly, DEFAULT_DIM);
            }
            if y + 1 < ly {
                g.add_bond(id, id + 1, DEFAULT_DIM);
            }
        }
    }
    Ok(g)
}

/// Site dimension per level: d at the bottom, then min(χ, d_z²) going up.
pub fn level_dims(d: usize, chi: usize, layers: usize) -> Vec<usize> {
    let mut dims = vec![d];
    for z in 0..layers {
        dims.push(chi.min(dims[z] * dims[z]));
    }
    dims
}

fn check_layers(n: usize, layers: usize) -> Result<usize> {
    if layers == 0 {
        return Err(invalid("MERA needs at least one layer"));
    }
    if layers >= usize::BITS as usize || n % (1usize << layers) != 0 || n >> layers == 0 {
        return Err(invalid(format!("N={n} is not a multiple of 2^{layers}")));
    }
    Ok(n >> layers)
}

/// Binary MERA with T layers over N = 2^T·n_top sites, d = χ = 2.
pub fn build_mera_graph(n: usize, layers: usize, scale_invariant: bool) -> Result<TNGraph> {
    build_mera_graph_dims(n, layers, scale_invariant, DEFAULT_DIM, DEFAULT_DIM)
}

pub fn build_mera_graph_dims(n: usize, layers: usize, scale_invariant: bool, d: usize, chi: usize) -> Result<TNGraph> {
    check_layers(n, layers)?;
    let meta = GraphMeta {
        kind: GeometryKind::Mera,
        n_sites: n,
        layers: Some(layers),
        z0: None,
        branch_schedule: Vec::new(),
        scale_invariant,
        boundary: Boundary::Periodic,
    };
    layered(meta, n, layers, d, chi, TopKind::Single, &BTreeSet::new())
}

/// z₀ MERA layers capped by one product-state node per coarse site, on an
/// open chain.
pub fn build_finite_range_mera_graph(n: usize, z0: usize) -> Result<TNGraph> {
    build_finite_range_mera_graph_dims(n, z0, DEFAULT_DIM, DEFAULT_DIM)
}

pub fn build_finite_range_mera_graph_dims(n: usize, z0: usize, d: usize, chi: usize) -> Result<TNGraph> {
    build_finite_range_mera_graph_with(n, z0, d, chi, Boundary::Open)
}

pub fn build_finite_range_mera_graph_with(
    n: usize,
    z0: usize,
    d: usize,
    chi: usize,
    boundary: Boundary,
) -> Result<TNGraph> {
    check_layers(n, z0)?;
    let meta = GraphMeta {
        kind: GeometryKind::FiniteRangeMera,
        n_sites: n,
        layers: Some(z0),
        z0: Some(z0),
        branch_schedule: Vec::new(),
        scale_invariant: false,
        boundary,
    };
    layered(meta, n, z0, d, chi, TopKind::Product, &BTreeSet::new())
}

/// Full-depth (single top site) MERA over N = 2^T sites that splits, at each
/// listed scale z★ ∈ [1, T−1], every branch into two copies continuing above
/// z★. The split is a `branch` node per coarse site feeding both copies.
pub fn build_branching_mera_graph_1d(n: usize, branch_schedule: &BTreeSet<usize>) -> Result<TNGraph> {
    if n < 2 || !n.is_power_of_two() {
        return Err(invalid(format!("branching MERA needs N a power of two >= 2, got {n}")));
    }
    let layers = n.trailing_zeros() as usize;
    if let Some(&z) = branch_schedule.iter().find(|&&z| z == 0 || z >= layers) {
        return Err(invalid(format!("branch scale {z} outside [1, {}]", layers - 1)));
    }
    let meta = GraphMeta {
        kind: GeometryKind::BranchingMera,
        n_sites: n,
        layers: Some(layers),
        z0: None,
        branch_schedule: branch_schedule.iter().copied().collect(),
        scale_invariant: false,
        boundary: Boundary::Periodic,
    };
    layered(meta, n, layers, DEFAULT_DIM, DEFAULT_DIM, TopKind::Single, branch_schedule)
}

#[derive(Clone, Copy)]
enum TopKind {
    Single,
    Product,
}

fn layered(
    meta: GraphMeta,
    n: usize,
    layers: usize,
    d: usize,
    chi: usize,
    top: TopKind,
    schedule: &BTreeSet<usize>,
) -> Result<TNGraph> {
    if d == 0 || chi == 0 {
        return Err(invalid("dimensions must be >= 1"));
    }
    let dims = level_dims(d, chi, layers);
    let open = meta.boundary == Boundary::Open;
    let mut g = TNGraph::new(meta, d);
    grow(&mut g, 0, &vec![None; n], layers, &dims, top, schedule, open);
    g.validate()?;
    Ok(g)
}

/// Add layers z..layers above the given level, recursing at branch scales.
/// `below[s]` is the node producing site s of level z (None for physical sites).
#[allow(clippy::too_many_arguments)]
fn grow(
    g: &mut TNGraph,
    z: usize,
    below: &[Option<usize>],
    layers: usize,
    dims: &[usize],
    top: TopKind,
    schedule: &BTreeSet<usize>,
    open: bool,
) {
    let width = below.len();
    if z == layers {
        match top {
            TopKind::Single => {
                let t = g.add_node(Role::Top, 3 * layers);
                for &s in below {
                    g.add_bond(t, s.expect("top above physical level"), dims[z]);
                }
            }
            TopKind::Product => {
                for &s in below {
                    let t = g.add_node(Role::Top, 3 * layers);
                    g.add_bond(t, s.expect("top above physical level"), dims[z]);
                }
            }
        }
        return;
    }
    if z > 0 && schedule.contains(&z) {
        let splits: Vec<Option<usize>> = below
            .iter()
            .map(|&s| {
                let b = g.add_node(Role::Branch, 3 * z - 1);
                g.add_bond(b, s.expect("branch above physical level"), dims[z]);
                Some(b)
            })
            .collect();
        let rest: BTreeSet<usize> = schedule.iter().copied().filter(|&s| s != z).collect();
        for _copy in 0..2 {
            grow(g, z, &splits, layers, dims, top, &rest, open);
        }
        return;
    }
    let half = width / 2;
    let n_dis = if open { half - 1 } else { half };
    let dis: Vec<usize> = (0..n_dis).map(|_| g.add_node(Role::Disentangler, 3 * z)).collect();
    for (j, &u) in dis.iter().enumerate() {
        for s in [(2 * j + 1) % width, (2 * j + 2) % width] {
            match below[s] {
                Some(node) => g.add_bond(u, node, dims[z]),
                None => g.add_leg(Coord::Line(s), u),
            }
        }
    }
    let iso: Vec<Option<usize>> = (0..half)
        .map(|i| {
            let w = g.add_node(Role::Isometry, 3 * z + 1);
            for (s, j) in [(2 * i, (i + half - 1) % half), (2 * i + 1, i)] {
                match (dis.get(j), below[s]) {
                    (Some(&u), _) => g.add_bond(w, u, dims[z]),
                    (None, Some(node)) => g.add_bond(w, node, dims[z]),
                    (None, None) => g.add_leg(Coord::Line(s), w),
                }
            }
            Some(w)
        })
        .collect();
    grow(g, z + 1, &iso, layers, dims, top, schedule, open);
}
