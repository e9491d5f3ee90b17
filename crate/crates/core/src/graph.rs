//! Directed graph with contiguous node ids, edge-list ingestion and
//! node-weighted shortest-path queries.
//!
//! Path lengths sum the weights of *all* nodes on the path, endpoints
//! included. Distances are capped by the caller-supplied threshold; an
//! unreachable pair reports the cap itself, which the solvers treat as
//! already satisfied.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::real::{cmp_scalar, Real};

pub type NodeId = usize;

/// Simple directed path, stored as its node sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    nodes: Vec<NodeId>,
}

impl Path {
    /// Panics if the sequence is empty or visits a node twice. Arc existence
    /// is the caller's concern; use [`Path::validate_in`] to check it.
    pub fn from_nodes(nodes: Vec<NodeId>) -> Self {
        assert!(!nodes.is_empty(), "a path has at least one node");
        let mut seen = HashSet::with_capacity(nodes.len());
        for &v in &nodes {
            assert!(seen.insert(v), "path visits node {v} twice");
        }
        Self { nodes }
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.nodes.contains(&v)
    }

    pub fn first(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn last(&self) -> NodeId {
        *self.nodes.last().unwrap()
    }

    /// Checks that consecutive nodes are joined by arcs of `g`.
    pub fn validate_in(&self, g: &Graph) -> Result<()> {
        for w in self.nodes.windows(2) {
            if !g.has_arc(w[0], w[1]) {
                return Err(Error::InvalidArgument(format!("no arc {} -> {}", w[0], w[1])));
            }
        }
        Ok(())
    }
}

/// Ordered source/sink pairs whose distance the solvers must push to the
/// threshold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetPairs {
    pairs: Vec<(NodeId, NodeId)>,
}

impl TargetPairs {
    pub fn new(pairs: Vec<(NodeId, NodeId)>, g: &Graph) -> Result<Self> {
        for &(s, t) in &pairs {
            if s == t {
                return Err(Error::InvalidArgument(format!("pair ({s}, {t}) has equal endpoints")));
            }
            if s >= g.node_count() || t >= g.node_count() {
                return Err(Error::InvalidArgument(format!(
                    "pair ({s}, {t}) out of range for {} nodes",
                    g.node_count()
                )));
            }
        }
        Ok(Self { pairs })
    }

    /// Parses raw-id pairs, one `s t` per line with `#` comments, and maps
    /// them through the graph's id remapping.
    pub fn parse(text: &str, g: &Graph) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected two node ids, got {}", toks.len()),
                });
            }
            let raw = |s: &str| -> Result<u64> {
                s.parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    msg: format!("`{s}` is not a node id"),
                })
            };
            let lookup = |raw_id: u64| -> Result<NodeId> {
                g.node_for_raw(raw_id).ok_or_else(|| Error::Parse {
                    line: lineno + 1,
                    msg: format!("node {raw_id} not present in graph"),
                })
            };
            pairs.push((lookup(raw(toks[0])?)?, lookup(raw(toks[1])?)?));
        }
        Self::new(pairs, g)
    }

    pub fn pairs(&self) -> &[(NodeId, NodeId)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Immutable directed graph. Node ids are contiguous `0..n`, remapped from
/// the raw ids of the input edge list in order of first appearance.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    arcs: Vec<(NodeId, NodeId)>,
    adj: Vec<Vec<NodeId>>,
    degree: Vec<usize>,
    raw_ids: Vec<u64>,
    raw_to_id: HashMap<u64, NodeId>,
    undirected_source: bool,
}

impl Graph {
    /// Builds a graph from arcs over ids `0..n`. Self-loops and duplicate
    /// arcs are dropped.
    pub fn from_arcs(n: usize, arcs: Vec<(NodeId, NodeId)>, undirected_source: bool) -> Self {
        let raw_ids: Vec<u64> = (0..n as u64).collect();
        Self::build(n, arcs, raw_ids, undirected_source)
    }

    /// Convenience constructor doubling each undirected edge into two arcs.
    pub fn from_undirected_edges(n: usize, edges: &[(NodeId, NodeId)]) -> Self {
        let mut arcs = Vec::with_capacity(edges.len() * 2);
        for &(u, v) in edges {
            arcs.push((u, v));
            arcs.push((v, u));
        }
        Self::from_arcs(n, arcs, true)
    }

    fn build(n: usize, arcs: Vec<(NodeId, NodeId)>, raw_ids: Vec<u64>, undirected_source: bool) -> Self {
        let mut set = BTreeSet::new();
        for (u, v) in arcs {
            assert!(u < n && v < n, "arc ({u}, {v}) out of range for {n} nodes");
            if u != v {
                set.insert((u, v));
            }
        }
        let arcs: Vec<(NodeId, NodeId)> = set.into_iter().collect();
        let mut adj = vec![Vec::new(); n];
        let mut degree = vec![0usize; n];
        for &(u, v) in &arcs {
            adj[u].push(v);
            degree[u] += 1;
            degree[v] += 1;
        }
        // adjacency comes out sorted because arcs are iterated in order
        let raw_to_id = raw_ids.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        Self { n, arcs, adj, degree, raw_ids, raw_to_id, undirected_source }
    }

    /// Parses a whitespace-separated edge list (`u v` per line, `#` comments)
    /// and remaps raw ids to `0..n` in order of first appearance. With
    /// `treat_as_undirected` every input edge yields two opposite arcs.
    pub fn from_edge_list<R: BufRead>(reader: R, treat_as_undirected: bool) -> Result<Self> {
        let mut raw_to_id: HashMap<u64, NodeId> = HashMap::new();
        let mut raw_ids: Vec<u64> = Vec::new();
        let mut arcs: Vec<(NodeId, NodeId)> = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected two node ids, got {}", toks.len()),
                });
            }
            let mut id_of = |raw: u64| -> NodeId {
                *raw_to_id.entry(raw).or_insert_with(|| {
                    raw_ids.push(raw);
                    raw_ids.len() - 1
                })
            };
            let parse = |s: &str| -> Result<u64> {
                s.parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    msg: format!("`{s}` is not a non-negative integer id"),
                })
            };
            let u = id_of(parse(toks[0])?);
            let v = id_of(parse(toks[1])?);
            arcs.push((u, v));
            if treat_as_undirected {
                arcs.push((v, u));
            }
        }
        if arcs.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let n = raw_ids.len();
        Ok(Self::build(n, arcs, raw_ids, treat_as_undirected))
    }

    pub fn from_edge_list_str(text: &str, treat_as_undirected: bool) -> Result<Self> {
        Self::from_edge_list(text.as_bytes(), treat_as_undirected)
    }

    pub(crate) fn with_raw_ids(
        n: usize,
        arcs: Vec<(NodeId, NodeId)>,
        raw_ids: Vec<u64>,
        undirected_source: bool,
    ) -> Self {
        Self::build(n, arcs, raw_ids, undirected_source)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn arcs(&self) -> &[(NodeId, NodeId)] {
        &self.arcs
    }

    pub fn successors(&self, v: NodeId) -> &[NodeId] {
        &self.adj[v]
    }

    /// In-degree plus out-degree.
    pub fn degree(&self, v: NodeId) -> usize {
        self.degree[v]
    }

    pub fn has_arc(&self, u: NodeId, v: NodeId) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    pub fn undirected_source(&self) -> bool {
        self.undirected_source
    }

    /// Raw id from the original edge list for node `v`.
    pub fn raw_id(&self, v: NodeId) -> u64 {
        self.raw_ids[v]
    }

    pub fn node_for_raw(&self, raw: u64) -> Option<NodeId> {
        self.raw_to_id.get(&raw).copied()
    }
}

/// Heap entry ordered by (distance, node id) so ties pop deterministically.
struct HeapEntry<S> {
    dist: S,
    node: NodeId,
}

impl<S: Real> PartialEq for HeapEntry<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<S: Real> Eq for HeapEntry<S> {}
impl<S: Real> PartialOrd for HeapEntry<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<S: Real> Ord for HeapEntry<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_scalar(&self.dist, &other.dist).then(self.node.cmp(&other.node))
    }
}

fn check_query_args<S: Real>(g: &Graph, weights: &[S], s: NodeId, t: NodeId) {
    assert_eq!(weights.len(), g.node_count(), "one weight per node required");
    assert!(s < g.node_count() && t < g.node_count(), "node id out of range");
    debug_assert!(weights.iter().all(|&w| w >= S::zero()), "negative node weight");
}

/// Node-weighted label-setting search. Each node's weight is paid on
/// arrival, plus the source weight at initialization. Returns distances from
/// `s` and a predecessor array for path recovery.
fn dijkstra<S: Real>(
    g: &Graph,
    weights: &[S],
    s: NodeId,
    target: Option<NodeId>,
    banned_nodes: Option<&[bool]>,
    banned_arcs: Option<&HashSet<(NodeId, NodeId)>>,
) -> (Vec<S>, Vec<Option<NodeId>>) {
    let n = g.node_count();
    let mut dist = vec![S::infinity(); n];
    let mut pred: Vec<Option<NodeId>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    let banned = |v: NodeId| banned_nodes.is_some_and(|b| b[v]);
    if banned(s) {
        return (dist, pred);
    }
    dist[s] = weights[s];
    heap.push(Reverse(HeapEntry { dist: dist[s], node: s }));
    while let Some(Reverse(HeapEntry { dist: d, node: u })) = heap.pop() {
        if settled[u] {
            continue;
        }
        settled[u] = true;
        if target == Some(u) {
            break;
        }
        for &v in g.successors(u) {
            if settled[v] || banned(v) {
                continue;
            }
            if banned_arcs.is_some_and(|b| b.contains(&(u, v))) {
                continue;
            }
            let nd = d + weights[v];
            if nd < dist[v] {
                dist[v] = nd;
                pred[v] = Some(u);
                heap.push(Reverse(HeapEntry { dist: nd, node: v }));
            }
        }
    }
    (dist, pred)
}

fn recover_path(pred: &[Option<NodeId>], s: NodeId, t: NodeId) -> Vec<NodeId> {
    let mut nodes = vec![t];
    let mut cur = t;
    while cur != s {
        cur = pred[cur].expect("predecessor chain broken");
        nodes.push(cur);
    }
    nodes.reverse();
    nodes
}

/// Minimum over `s -> t` paths of the capped node-weight sum (both endpoints
/// included). Returns `cap` when no path exists.
pub fn node_weighted_distance<S: Real>(
    g: &Graph,
    weights: &[S],
    s: NodeId,
    t: NodeId,
    cap: S,
) -> S {
    check_query_args(g, weights, s, t);
    assert!(cap > S::zero(), "cap must be positive");
    let (dist, _) = dijkstra(g, weights, s, Some(t), None, None);
    dist[t].min(cap)
}

/// All distances from `s`, uncapped (`inf` marks unreachable nodes).
pub fn node_weighted_distances_from<S: Real>(g: &Graph, weights: &[S], s: NodeId) -> Vec<S> {
    check_query_args(g, weights, s, s);
    dijkstra(g, weights, s, None, None, None).0
}

fn path_weight<S: Real>(weights: &[S], nodes: &[NodeId]) -> S {
    nodes.iter().fold(S::zero(), |acc, &v| acc + weights[v])
}

/// Float key usable in ordered collections (costs are never NaN).
#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdCost<S>(S);
impl<S: Real> Eq for OrdCost<S> {}
impl<S: Real> PartialOrd for OrdCost<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<S: Real> Ord for OrdCost<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_scalar(&self.0, &other.0)
    }
}

/// Up to `k` loopless paths from `s` to `t` in nondecreasing capped-length
/// order (Yen's algorithm over the node-weighted metric). Ties break on the
/// lexicographically smaller node sequence. Paths whose uncapped length
/// reaches `cap` may still be returned; callers filter by threshold.
pub fn k_shortest_paths<S: Real>(
    g: &Graph,
    weights: &[S],
    s: NodeId,
    t: NodeId,
    k: usize,
    cap: S,
) -> Vec<Path> {
    check_query_args(g, weights, s, t);
    assert!(k >= 1, "k must be at least 1");
    if s == t {
        return vec![Path::from_nodes(vec![s])];
    }
    let (dist, pred) = dijkstra(g, weights, s, Some(t), None, None);
    if dist[t].is_infinite() {
        return Vec::new();
    }
    let mut found: Vec<Vec<NodeId>> = vec![recover_path(&pred, s, t)];
    let mut candidates: BTreeSet<(OrdCost<S>, Vec<NodeId>)> = BTreeSet::new();
    let mut banned_nodes = vec![false; g.node_count()];

    while found.len() < k {
        let prev = found.last().unwrap().clone();
        for spur_idx in 0..prev.len() - 1 {
            let spur = prev[spur_idx];
            let root = &prev[..=spur_idx];
            let mut banned_arcs: HashSet<(NodeId, NodeId)> = HashSet::new();
            for p in &found {
                if p.len() > spur_idx && p[..=spur_idx] == *root {
                    banned_arcs.insert((p[spur_idx], p[spur_idx + 1]));
                }
            }
            for &v in &root[..spur_idx] {
                banned_nodes[v] = true;
            }
            let (d2, p2) = dijkstra(g, weights, spur, Some(t), Some(&banned_nodes), Some(&banned_arcs));
            if d2[t].is_finite() {
                let spur_path = recover_path(&p2, spur, t);
                let mut total = root[..spur_idx].to_vec();
                total.extend_from_slice(&spur_path);
                let cost = path_weight(weights, &total);
                candidates.insert((OrdCost(cost), total));
            }
            for &v in &root[..spur_idx] {
                banned_nodes[v] = false;
            }
        }
        let Some(best) = candidates.pop_first() else {
            break;
        };
        found.push(best.1);
    }

    let mut out: Vec<(OrdCost<S>, Vec<NodeId>)> = found
        .into_iter()
        .map(|nodes| (OrdCost(path_weight(weights, &nodes).min(cap)), nodes))
        .collect();
    out.sort();
    out.into_iter().map(|(_, nodes)| Path::from_nodes(nodes)).collect()
}

/// Every simple `s -> t` path, DFS order over sorted adjacency. Fails once
/// more than `limit` paths exist.
pub fn all_simple_paths(g: &Graph, s: NodeId, t: NodeId, limit: usize) -> Result<Vec<Path>> {
    assert!(s < g.node_count() && t < g.node_count(), "node id out of range");
    let mut out = Vec::new();
    let mut visited = vec![false; g.node_count()];
    let mut stack = vec![s];
    visited[s] = true;
    fn dfs(
        g: &Graph,
        t: NodeId,
        stack: &mut Vec<NodeId>,
        visited: &mut [bool],
        out: &mut Vec<Path>,
        limit: usize,
    ) -> Result<()> {
        let u = *stack.last().unwrap();
        if u == t {
            if out.len() >= limit {
                return Err(Error::LimitExceeded {
                    what: "simple path enumeration",
                    limit: limit as u64,
                    detail: "too many simple paths".into(),
                });
            }
            out.push(Path::from_nodes(stack.clone()));
            return Ok(());
        }
        for &v in g.successors(u) {
            if !visited[v] {
                visited[v] = true;
                stack.push(v);
                dfs(g, t, stack, visited, out, limit)?;
                stack.pop();
                visited[v] = false;
            }
        }
        Ok(())
    }
    dfs(g, t, &mut stack, &mut visited, &mut out, limit)?;
    Ok(out)
}
