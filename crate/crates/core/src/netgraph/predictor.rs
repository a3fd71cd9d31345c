//! Layer-sum estimate of min-cut sizes, n(L) ≈ Σ_z m(z)·c·(L/2^z)^{D−1},
//! with branch multiplicities m(z) read off a branching tree.

use serde::Serialize;
use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{invalid, Result};

#[derive(Debug, PartialEq, Eq)]
pub struct Branch {
    pub z_start: usize,
    /// Scale at which the branch ends or splits; None = unbounded.
    pub z_end: Option<usize>,
    /// Continuations created at `z_end`. Shared subtrees are allowed, which
    /// keeps self-similar trees (a split at every scale) linear in size.
    pub children: Vec<Arc<Branch>>,
}

#[derive(Clone, Debug)]
pub struct BranchingTree {
    dim: usize,
    root: Arc<Branch>,
}

/// Depth of the explicit part of self-similar trees; far beyond any L used.
const SELF_SIMILAR_DEPTH: usize = 64;

impl BranchingTree {
    pub fn new(dim: usize, root: Arc<Branch>) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(invalid(format!("spatial dimension {dim} not in 1..=3")));
        }
        let mut checked = HashMap::new();
        validate(&root, &mut checked)?;
        Ok(BranchingTree { dim, root })
    }

    /// One branch living on scales [0, z_end): a finite-range geometry.
    pub fn single_finite(dim: usize, z_end: usize) -> Result<Self> {
        BranchingTree::new(dim, Arc::new(Branch { z_start: 0, z_end: Some(z_end), children: Vec::new() }))
    }

    /// One branch at every scale: the unbranched scale-invariant geometry.
    pub fn single_unbounded(dim: usize) -> Result<Self> {
        BranchingTree::new(dim, Arc::new(Branch { z_start: 0, z_end: None, children: Vec::new() }))
    }

    /// Every branch splits into `factor` copies at every scale, so m(z) = factor^z.
    pub fn split_every_scale(dim: usize, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(invalid("split factor must be >= 1"));
        }
        let mut node = Arc::new(Branch { z_start: SELF_SIMILAR_DEPTH, z_end: None, children: Vec::new() });
        for z in (0..SELF_SIMILAR_DEPTH).rev() {
            node = Arc::new(Branch { z_start: z, z_end: Some(z + 1), children: vec![node; factor] });
        }
        BranchingTree::new(dim, node)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn root(&self) -> &Arc<Branch> {
        &self.root
    }

    /// Number of branches alive at scale z.
    pub fn multiplicity(&self, z: usize) -> f64 {
        let mut memo = HashMap::new();
        alive(&self.root, z, &mut memo)
    }
}

fn validate(b: &Arc<Branch>, checked: &mut HashMap<*const Branch, ()>) -> Result<()> {
    if checked.contains_key(&Arc::as_ptr(b)) {
        return Ok(());
    }
    match b.z_end {
        None if !b.children.is_empty() => return Err(invalid("unbounded branch cannot have children")),
        Some(end) if end <= b.z_start => {
            return Err(invalid(format!("branch ends at {end} before it starts at {}", b.z_start)))
        }
        _ => {}
    }
    for c in &b.children {
        if Some(c.z_start) != b.z_end {
            return Err(invalid(format!("child starts at {} but parent ends at {:?}", c.z_start, b.z_end)));
        }
        validate(c, checked)?;
    }
    checked.insert(Arc::as_ptr(b), ());
    Ok(())
}

fn alive(b: &Arc<Branch>, z: usize, memo: &mut HashMap<*const Branch, f64>) -> f64 {
    if let Some(&m) = memo.get(&Arc::as_ptr(b)) {
        return m;
    }
    let m = if z < b.z_start {
        0.0
    } else {
        match b.z_end {
            None => 1.0,
            Some(end) if z < end => 1.0,
            Some(_) => b.children.iter().map(|c| alive(c, z, memo)).sum(),
        }
    };
    memo.insert(Arc::as_ptr(b), m);
    m
}

/// Growth class of n(L) when the depth follows the block, T = log₂L.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingClass {
    Constant,
    LogL,
    /// L^{D−1} for D ≥ 2.
    Boundary,
    /// L^{D−1}·log L for D ≥ 2.
    BoundaryLogL,
    /// L^D.
    Volume,
}

impl ScalingClass {
    pub fn label(&self, dim: usize) -> String {
        let pow = |p: usize| match p {
            0 => "1".to_string(),
            1 => "L".to_string(),
            p => format!("L^{p}"),
        };
        match self {
            ScalingClass::Constant => "constant".into(),
            ScalingClass::LogL => "log L".into(),
            ScalingClass::Boundary => pow(dim - 1),
            ScalingClass::BoundaryLogL => format!("{}·log L", pow(dim - 1)),
            ScalingClass::Volume => pow(dim),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Prediction {
    pub value: f64,
    pub class: ScalingClass,
    pub class_label: String,
    pub formula: String,
    /// Per-layer contributions m(z)·c·(L/2^z)^{D−1}, z = 0..T−1.
    pub layer_terms: Vec<f64>,
}

/// Evaluate Σ_{z<T} m(z)·c·(L/2^z)^{D−1} and classify its L-dependence.
pub fn layer_sum_predictor(dim: usize, l: f64, depth: usize, tree: Option<&BranchingTree>, c: f64) -> Result<Prediction> {
    if !(1..=3).contains(&dim) {
        return Err(invalid(format!("spatial dimension {dim} not in 1..=3")));
    }
    if !(l >= 2.0) {
        return Err(invalid(format!("block size {l} must be >= 2")));
    }
    if let Some(t) = tree {
        if t.dim() != dim {
            return Err(invalid(format!("tree is for D={} but D={dim} requested", t.dim())));
        }
    }
    let m = |z: usize| tree.map_or(1.0, |t| t.multiplicity(z));
    let e = (dim - 1) as i32;
    let layer_terms: Vec<f64> = (0..depth).map(|z| m(z) * c * (l / 2f64.powi(z as i32)).powi(e)).collect();
    let value = layer_terms.iter().sum();
    let class = classify(dim, &m);
    let mult = match tree {
        None => "1".to_string(),
        Some(t) => {
            let (m1, m2) = (t.multiplicity(1), t.multiplicity(2));
            if m1 > 0.0 && (m2 / m1 - m1).abs() < 1e-12 && m1 != 1.0 {
                format!("{m1}^z")
            } else {
                "tree".to_string()
            }
        }
    };
    let formula = format!("sum_{{z=0}}^{{T-1}} m(z)*c*(L/2^z)^{e}, m(z)={mult}, c={c}");
    Ok(Prediction { value, class, class_label: class.label(dim), formula, layer_terms })
}

/// The per-scale terms t_z = m(z)·2^{−z(D−1)} decide everything: a decaying
/// tail keeps n(L)/L^{D−1} bounded, a flat tail adds one unit per doubling
/// of L (a log), a growing tail outruns the boundary.
fn classify(dim: usize, m: &dyn Fn(usize) -> f64) -> ScalingClass {
    const K: usize = 40;
    let t = |z: usize| m(z) * 2f64.powi(-((z * (dim - 1)) as i32));
    let (a, b) = (t(K - 2), t(K - 1));
    let bounded = b == 0.0 || b < a * (1.0 - 1e-9);
    let flat = a > 0.0 && ((b / a) - 1.0).abs() <= 1e-9;
    match (bounded, flat, dim) {
        (true, _, 1) => ScalingClass::Constant,
        (true, _, _) => ScalingClass::Boundary,
        (false, true, 1) => ScalingClass::LogL,
        (false, true, _) => ScalingClass::BoundaryLogL,
        _ => ScalingClass::Volume,
    }
}
