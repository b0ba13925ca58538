//! Approximate maximum-weight forests with a cap on the number of edges per
//! tree component.
//!
//! Construction runs in two stages: a greedy pass adds positive-weight edges
//! in non-increasing order subject to a per-vertex degree cap and
//! acyclicity, then each resulting tree is split by a dynamic program into
//! the maximum-weight partition whose clusters induce subtrees of at most
//! `kappa` edges. The combined output is within a factor 1/4 of the optimal
//! size-restricted forest.

use crate::error::{FdeError, Result};
use crate::forest::{Edge, Forest, UnionFind};
use crate::mi::{HeldoutTerms, MiMatrix};

/// Disjoint clusters covering a tree's vertices, each inducing a connected
/// subtree; `weight` sums the tree edges kept inside clusters.
#[derive(Debug, Clone)]
pub struct Partition {
    pub clusters: Vec<Vec<usize>>,
    pub weight: f64,
}

/// Greedy forest with every vertex degree at most `max_degree`, considering
/// only positive-weight edges in non-increasing weight order.
fn greedy_degree_capped(weights: &MiMatrix, max_degree: usize) -> Forest {
    let d = weights.d();
    let mut edges: Vec<Edge> = weights
        .pairs()
        .filter(|&(_, _, w)| w > 0.0)
        .map(|(i, j, w)| Edge::new(i, j, w))
        .collect();
    edges.sort_by(|a, b| {
        b.weight
            .partial_cmp(&a.weight)
            .expect("edge weights must not be NaN")
            .then(a.i.cmp(&b.i))
            .then(a.j.cmp(&b.j))
    });
    let mut uf = UnionFind::new(d);
    let mut degree = vec![0usize; d];
    let mut accepted = Vec::new();
    for e in edges {
        if degree[e.i] >= max_degree || degree[e.j] >= max_degree {
            continue;
        }
        if uf.union(e.i, e.j) {
            degree[e.i] += 1;
            degree[e.j] += 1;
            accepted.push(e);
        }
    }
    Forest { d, edges: accepted }
}

/// First stage of the approximation: degree cap `kappa + 1`, no cycles,
/// positive weights only.
pub fn greedy_degree_bounded(weights: &MiMatrix, kappa: usize) -> Forest {
    greedy_degree_capped(weights, kappa + 1)
}

#[derive(Clone)]
struct Cell {
    weight: f64,
    cuts: Vec<usize>,
}

/// Per-vertex partition lists: entry `i` (1-based node count of the cluster
/// containing the subtree root) holds the best feasible partition, or None
/// when no partition with that root-cluster size exists.
type PartitionList = Vec<Option<Cell>>;

fn best_entry(list: &PartitionList) -> &Cell {
    list.iter()
        .flatten()
        .max_by(|a, b| a.weight.partial_cmp(&b.weight).unwrap())
        .expect("partition list always has the singleton entry")
}

/// Merge a finished child list into the parent list. The parent cluster
/// either absorbs the child's root cluster (adding the connecting edge's
/// weight) or the connecting edge is cut and the child contributes its best
/// partition unchanged.
#[allow(clippy::needless_range_loop)]
fn merge_lists(
    parent: &PartitionList,
    child: &PartitionList,
    edge_weight: f64,
    edge_idx: usize,
    cap: usize,
) -> PartitionList {
    let child_best = best_entry(child);
    let mut merged: PartitionList = vec![None; cap + 1];
    for i in 1..=cap {
        let mut best: Option<Cell> = parent[i].as_ref().map(|cell| {
            let mut cuts = cell.cuts.clone();
            cuts.extend_from_slice(&child_best.cuts);
            cuts.push(edge_idx);
            Cell {
                weight: cell.weight + child_best.weight,
                cuts,
            }
        });
        for s in 1..i {
            let t = i - s;
            if let (Some(p), Some(c)) = (&parent[s], &child[t]) {
                let weight = p.weight + c.weight + edge_weight;
                if best.as_ref().is_none_or(|b| weight > b.weight) {
                    let mut cuts = p.cuts.clone();
                    cuts.extend_from_slice(&c.cuts);
                    best = Some(Cell { weight, cuts });
                }
            }
        }
        merged[i] = best;
    }
    merged
}

/// Edge indices to remove from a single tree so that every remaining
/// component has at most `kappa` edges, maximizing the kept weight.
fn tree_partition_cuts(vertices: &[usize], edges: &[Edge], kappa: usize) -> Result<Vec<usize>> {
    if edges.is_empty() {
        return Err(FdeError::NotATree("no edges".into()));
    }
    if edges.len() != vertices.len() - 1 {
        return Err(FdeError::NotATree(format!(
            "{} edges over {} vertices",
            edges.len(),
            vertices.len()
        )));
    }
    // local vertex ids
    let index: std::collections::HashMap<usize, usize> = vertices
        .iter()
        .enumerate()
        .map(|(local, &v)| (v, local))
        .collect();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); vertices.len()];
    let mut uf = UnionFind::new(vertices.len());
    for (idx, e) in edges.iter().enumerate() {
        let (a, b) = (index[&e.i], index[&e.j]);
        if !uf.union(a, b) {
            return Err(FdeError::NotATree("edge set contains a cycle".into()));
        }
        adj[a].push((b, idx));
        adj[b].push((a, idx));
    }

    // depth-first order from the root; children processed before parents
    let root = 0;
    let mut order = Vec::with_capacity(vertices.len());
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; vertices.len()];
    let mut stack = vec![root];
    let mut seen = vec![false; vertices.len()];
    seen[root] = true;
    while let Some(v) = stack.pop() {
        order.push(v);
        for &(u, idx) in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                parent[u] = Some((v, idx));
                stack.push(u);
            }
        }
    }
    if order.len() != vertices.len() {
        return Err(FdeError::NotATree("edge set is disconnected".into()));
    }

    let cap = kappa + 1; // a cluster with <= kappa edges has <= kappa + 1 nodes
    let singleton = || {
        let mut list: PartitionList = vec![None; cap + 1];
        list[1] = Some(Cell {
            weight: 0.0,
            cuts: Vec::new(),
        });
        list
    };
    let mut lists: Vec<PartitionList> = (0..vertices.len()).map(|_| singleton()).collect();
    for &v in order.iter().rev() {
        if let Some((p, edge_idx)) = parent[v] {
            lists[p] = merge_lists(&lists[p], &lists[v], edges[edge_idx].weight, edge_idx, cap);
        }
    }
    Ok(best_entry(&lists[root]).cuts.clone())
}

/// Optimal partition of a single connected tree into clusters inducing
/// subtrees with at most `kappa` edges each, maximizing the weight kept
/// inside clusters.
pub fn tree_partition(tree: &Forest, kappa: usize) -> Result<Partition> {
    let mut vertices: Vec<usize> = tree
        .edges
        .iter()
        .flat_map(|e| [e.i, e.j])
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    vertices.sort_unstable();
    let cuts = tree_partition_cuts(&vertices, &tree.edges, kappa)?;
    let cut_set: std::collections::HashSet<usize> = cuts.into_iter().collect();

    let index: std::collections::HashMap<usize, usize> = vertices
        .iter()
        .enumerate()
        .map(|(local, &v)| (v, local))
        .collect();
    let mut uf = UnionFind::new(vertices.len());
    let mut weight = 0.0;
    for (idx, e) in tree.edges.iter().enumerate() {
        if !cut_set.contains(&idx) {
            uf.union(index[&e.i], index[&e.j]);
            weight += e.weight;
        }
    }
    let mut clusters: std::collections::BTreeMap<usize, Vec<usize>> =
        std::collections::BTreeMap::new();
    for &v in &vertices {
        clusters.entry(uf.find(index[&v])).or_default().push(v);
    }
    Ok(Partition {
        clusters: clusters.into_values().collect(),
        weight,
    })
}

/// Two-stage approximation for the maximum-weight forest whose components
/// each have at most `kappa` edges. The output weight is at least a quarter
/// of the optimum.
pub fn approx_krf(weights: &MiMatrix, kappa: usize) -> Forest {
    let grown = greedy_degree_bounded(weights, kappa);
    let mut kept = Vec::new();
    for (vertices, edge_ids) in grown.components() {
        if edge_ids.is_empty() {
            continue;
        }
        let edges: Vec<Edge> = edge_ids.iter().map(|&idx| grown.edges[idx]).collect();
        let cuts = tree_partition_cuts(&vertices, &edges, kappa)
            .expect("greedy components are trees by construction");
        let cut_set: std::collections::HashSet<usize> = cuts.into_iter().collect();
        for (idx, e) in edges.iter().enumerate() {
            if !cut_set.contains(&idx) {
                kept.push(*e);
            }
        }
    }
    kept.sort_by_key(|e| (e.i, e.j));
    Forest {
        d: weights.d(),
        edges: kept,
    }
}

/// The size-restricted forest for one `kappa`: empty at 0, a greedy matching
/// at 1, the two-stage approximation from 2 up.
pub fn restricted_candidate(weights: &MiMatrix, kappa: usize) -> Forest {
    match kappa {
        0 => Forest::empty(weights.d()),
        1 => greedy_degree_capped(weights, 1),
        _ => approx_krf(weights, kappa),
    }
}

/// Per-kappa candidate summary produced during selection.
#[derive(Debug, Clone)]
pub struct KappaCandidate {
    pub kappa: usize,
    /// Training weight of the candidate before pruning.
    pub raw_weight: f64,
    pub raw_edges: usize,
    pub pruned_edges: usize,
    pub heldout_risk: f64,
}

#[derive(Debug, Clone)]
pub struct RestrictedSelection {
    pub kappa_hat: usize,
    pub forest: Forest,
    pub candidates: Vec<KappaCandidate>,
}

/// Build, prune and score one candidate per `kappa`, returning the forest
/// minimizing held-out risk (ties toward the smaller `kappa`).
///
/// Pruning drops every candidate edge whose held-out cross weight is <= 0.
pub fn restricted_selection(
    train_weights: &MiMatrix,
    terms: &HeldoutTerms,
    kappa_max: usize,
) -> RestrictedSelection {
    let mut candidates = Vec::with_capacity(kappa_max + 1);
    let mut best: Option<(f64, usize, Forest)> = None;
    for kappa in 0..=kappa_max {
        let raw = restricted_candidate(train_weights, kappa);
        let raw_weight = raw.total_weight();
        let raw_edges = raw.edges.len();
        let mut pruned = raw;
        pruned
            .edges
            .retain(|e| terms.cross.get(e.i, e.j) > 0.0);
        let risk = crate::forest::risk_from_terms(&pruned, terms);
        candidates.push(KappaCandidate {
            kappa,
            raw_weight,
            raw_edges,
            pruned_edges: pruned.edges.len(),
            heldout_risk: risk,
        });
        if best.as_ref().is_none_or(|(r, _, _)| risk < *r) {
            best = Some((risk, kappa, pruned));
        }
    }
    let (_, kappa_hat, forest) = best.expect("at least kappa = 0 is evaluated");
    RestrictedSelection {
        kappa_hat,
        forest,
        candidates,
    }
}
