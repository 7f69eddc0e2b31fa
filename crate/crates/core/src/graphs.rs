//! Visibility and connectivity graphs over open cells, component analysis,
//! hop-bounded connectivity and Steiner-tree connectivity repair.

use std::collections::{BTreeSet, VecDeque};

use crate::error::GraphError;
use crate::geometry::{relaxed_distance, relaxed_visibility, Cell, GridRegion};
use crate::par;

/// Undirected graph whose vertices are the open cells of a region.
#[derive(Debug, Clone)]
pub struct CellGraph {
    cells: Vec<Cell>,
    /// Region cell index -> vertex index.
    vertex_of: Vec<Option<usize>>,
    adj: Vec<Vec<usize>>,
    self_cover: Vec<bool>,
}

impl CellGraph {
    fn from_pairs<F>(region: &GridRegion, pred: F) -> Self
    where
        F: Fn(Cell, Cell) -> bool + Sync + Send,
    {
        let cells = region.open_cells();
        let mut vertex_of = vec![None; region.cell_count()];
        for (v, &c) in cells.iter().enumerate() {
            vertex_of[region.index(c)] = Some(v);
        }
        let n = cells.len();
        let upper: Vec<Vec<usize>> =
            par::map_range(n, |i| ((i + 1)..n).filter(|&j| pred(cells[i], cells[j])).collect());
        let mut adj = vec![Vec::new(); n];
        for (i, row) in upper.into_iter().enumerate() {
            for j in row {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        let self_cover = cells.iter().map(|&c| pred(c, c)).collect();
        CellGraph {
            cells,
            vertex_of,
            adj,
            self_cover,
        }
    }

    /// Build from an explicit edge list over `n` abstract vertices (cells are
    /// laid out as a `n x 1` strip). Used for synthetic graph experiments.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let cells: Vec<Cell> = (0..n).map(|i| Cell::new(i, 0)).collect();
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a != b && !adj[a].contains(&b) {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        CellGraph {
            vertex_of: (0..n).map(Some).collect(),
            cells,
            adj,
            self_cover: vec![true; n],
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, v: usize) -> Cell {
        self.cells[v]
    }

    pub fn vertex(&self, region: &GridRegion, c: Cell) -> Option<usize> {
        self.vertex_of.get(region.index(c)).copied().flatten()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    pub fn self_cover(&self, v: usize) -> bool {
        self.self_cover[v]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, a)| a.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    /// Closed neighborhood used for coverage: neighbors plus `v` itself when
    /// the cell covers itself.
    pub fn cover_set(&self, v: usize) -> Vec<usize> {
        let mut out = self.adj[v].clone();
        if self.self_cover[v] {
            let pos = out.binary_search(&v).unwrap_err();
            out.insert(pos, v);
        }
        out
    }
}

/// Edge iff the cells are within `sensing_radius` under the relaxed distance
/// and mutually visible under the relaxed visibility rule.
pub fn build_visibility_graph(region: &GridRegion, sensing_radius: f64) -> CellGraph {
    CellGraph::from_pairs(region, |a, b| {
        relaxed_distance(a, b, region) <= sensing_radius && relaxed_visibility(a, b, region)
    })
}

/// Edge iff the relaxed distance is within `comm_radius` (no line of sight
/// needed for radio links).
pub fn build_connectivity_graph(region: &GridRegion, comm_radius: f64) -> CellGraph {
    CellGraph::from_pairs(region, |a, b| relaxed_distance(a, b, region) <= comm_radius)
}

/// Component labels for the subgraph induced by `active`. Inactive vertices
/// get `None`. Components are numbered by their smallest vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    pub labels: Vec<Option<usize>>,
    pub count: usize,
}

impl Components {
    pub fn members(&self, comp: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == Some(comp))
            .map(|(v, _)| v)
            .collect()
    }
}

pub fn connected_components(graph: &CellGraph, active: &[bool]) -> Components {
    components_by(graph.len(), active, |v| graph.neighbors(v))
}

pub(crate) fn components_by<'a, F>(n: usize, active: &[bool], neighbors: F) -> Components
where
    F: Fn(usize) -> &'a [usize],
{
    let mut labels = vec![None; n];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for s in 0..n {
        if !active[s] || labels[s].is_some() {
            continue;
        }
        labels[s] = Some(count);
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &w in neighbors(u) {
                if active[w] && labels[w].is_none() {
                    labels[w] = Some(count);
                    queue.push_back(w);
                }
            }
        }
        count += 1;
    }
    Components { labels, count }
}

/// Positive entries of `A + A^2 + ... + A^h` as boolean reachability rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopMatrix {
    pub hops: usize,
    rows: Vec<Vec<u64>>,
}

impl HopMatrix {
    /// `adjacency` must be symmetric with a false diagonal.
    pub fn new(adjacency: &[Vec<bool>], hops: usize) -> Self {
        let n = adjacency.len();
        let words = n.div_ceil(64).max(1);
        let base: Vec<Vec<u64>> = adjacency
            .iter()
            .map(|row| {
                let mut bits = vec![0u64; words];
                for (j, &a) in row.iter().enumerate() {
                    if a {
                        bits[j / 64] |= 1 << (j % 64);
                    }
                }
                bits
            })
            .collect();
        let mut reach = base.clone();
        for _ in 1..hops {
            let mut next = reach.clone();
            for (i, row) in reach.iter().enumerate() {
                for j in 0..n {
                    if row[j / 64] >> (j % 64) & 1 == 1 {
                        for (w, b) in next[i].iter_mut().zip(&base[j]) {
                            *w |= *b;
                        }
                    }
                }
            }
            if next == reach {
                break;
            }
            reach = next;
        }
        HopMatrix { hops, rows: reach }
    }

    pub fn positive(&self, i: usize, j: usize) -> bool {
        self.rows[i][j / 64] >> (j % 64) & 1 == 1
    }
}

/// Connectivity via positivity of every off-diagonal entry of the
/// `(n-1)`-hop path matrix.
pub fn hop_connectivity(adjacency: &[Vec<bool>]) -> bool {
    let n = adjacency.len();
    if n <= 1 {
        return true;
    }
    let m = HopMatrix::new(adjacency, n - 1);
    (0..n).all(|i| (0..n).all(|j| i == j || m.positive(i, j)))
}

/// Connectivity graph with the deployed components contracted to terminal
/// supernodes. Nodes `0..terminal_count` are terminals; the rest are single
/// undeployed cells eligible as relays. All edges weigh one hop.
#[derive(Debug, Clone)]
pub struct CollapsedGraph {
    /// Graph vertices represented by each node.
    members: Vec<Vec<usize>>,
    adj: Vec<Vec<usize>>,
    terminal_count: usize,
}

impl CollapsedGraph {
    /// Abstract collapsed graph: nodes `0..n`, the listed terminals are
    /// renumbered to the front.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], terminals: &[usize]) -> Self {
        let mut order: Vec<usize> = terminals.to_vec();
        order.extend((0..n).filter(|v| !terminals.contains(v)));
        let mut pos = vec![0; n];
        for (i, &v) in order.iter().enumerate() {
            pos[v] = i;
        }
        let mut adj = vec![BTreeSet::new(); n];
        for &(a, b) in edges {
            if a != b {
                adj[pos[a]].insert(pos[b]);
                adj[pos[b]].insert(pos[a]);
            }
        }
        CollapsedGraph {
            members: order.into_iter().map(|v| vec![v]).collect(),
            adj: adj.into_iter().map(|s| s.into_iter().collect()).collect(),
            terminal_count: terminals.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn terminal_count(&self) -> usize {
        self.terminal_count
    }

    pub fn is_terminal(&self, node: usize) -> bool {
        node < self.terminal_count
    }

    pub fn members(&self, node: usize) -> &[usize] {
        &self.members[node]
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adj[node]
    }

    fn bfs(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.len()];
        dist[source] = 0;
        let mut q = VecDeque::from([source]);
        while let Some(u) = q.pop_front() {
            for &w in &self.adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    q.push_back(w);
                }
            }
        }
        dist
    }

    /// Lexicographically smallest shortest path from `a` to `b`.
    fn shortest_path(&self, a: usize, b: usize) -> Vec<usize> {
        let to_b = self.bfs(b);
        let mut path = vec![a];
        let mut cur = a;
        while cur != b {
            cur = *self.adj[cur]
                .iter()
                .find(|&&w| to_b[w] != usize::MAX && to_b[w] + 1 == to_b[cur])
                .expect("reachable node has a predecessor on a shortest path");
            path.push(cur);
        }
        path
    }
}

/// Contract each connected component of the deployed subgraph of `gc` into a
/// terminal. A lone deployed vertex is its own terminal.
pub fn collapse(gc: &CellGraph, deployed: &[usize]) -> CollapsedGraph {
    let mut active = vec![false; gc.len()];
    for &v in deployed {
        active[v] = true;
    }
    let comps = connected_components(gc, &active);
    let t = comps.count;
    let mut node_of = vec![0usize; gc.len()];
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); t];
    for v in 0..gc.len() {
        match comps.labels[v] {
            Some(c) => {
                node_of[v] = c;
                members[c].push(v);
            }
            None => {
                node_of[v] = members.len();
                members.push(vec![v]);
            }
        }
    }
    let mut adj = vec![BTreeSet::new(); members.len()];
    for (a, b) in gc.edges() {
        let (na, nb) = (node_of[a], node_of[b]);
        if na != nb {
            adj[na].insert(nb);
            adj[nb].insert(na);
        }
    }
    CollapsedGraph {
        members,
        adj: adj.into_iter().map(|s| s.into_iter().collect()).collect(),
        terminal_count: t,
    }
}

/// Tree in a collapsed graph spanning all terminals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SteinerTree {
    pub nodes: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
}

impl SteinerTree {
    pub fn weight(&self) -> usize {
        self.edges.len()
    }

    /// Non-terminal nodes of the tree.
    pub fn steiner_nodes(&self, cg: &CollapsedGraph) -> Vec<usize> {
        self.nodes.iter().copied().filter(|&n| !cg.is_terminal(n)).collect()
    }
}

/// Kou-Markowsky-Berman 2(1 - 1/t) approximation of the minimum Steiner
/// tree spanning the terminals of `cg`.
pub fn steiner_tree(cg: &CollapsedGraph) -> Result<SteinerTree, GraphError> {
    let t = cg.terminal_count();
    if t <= 1 {
        return Ok(SteinerTree {
            nodes: (0..t).collect(),
            edges: Vec::new(),
        });
    }
    // Metric closure over the terminals.
    let dist: Vec<Vec<usize>> = (0..t).map(|s| cg.bfs(s)).collect();
    let unreachable: Vec<usize> = (1..t).filter(|&j| dist[0][j] == usize::MAX).collect();
    if !unreachable.is_empty() {
        return Err(GraphError::InfeasibleRepair { anchor: 0, unreachable });
    }
    // Prim on the closure; ties go to the lowest index.
    let mut in_tree = vec![false; t];
    let mut best = vec![(usize::MAX, 0usize); t];
    in_tree[0] = true;
    for j in 1..t {
        best[j] = (dist[0][j], 0);
    }
    let mut closure_edges = Vec::with_capacity(t - 1);
    for _ in 1..t {
        let j = (0..t).filter(|&j| !in_tree[j]).min_by_key(|&j| (best[j].0, j)).unwrap();
        in_tree[j] = true;
        closure_edges.push((best[j].1, j));
        for k in 0..t {
            if !in_tree[k] && dist[j][k] < best[k].0 {
                best[k] = (dist[j][k], j);
            }
        }
    }
    // Expand closure edges into shortest paths.
    let mut sub_adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); cg.len()];
    let mut sub_nodes = BTreeSet::new();
    for (a, b) in closure_edges {
        let path = cg.shortest_path(a, b);
        for w in path.windows(2) {
            sub_adj[w[0]].insert(w[1]);
            sub_adj[w[1]].insert(w[0]);
        }
        sub_nodes.extend(path);
    }
    // Spanning tree of the expansion (all weights equal, so BFS suffices).
    let root = *sub_nodes.iter().next().unwrap();
    let mut tree_adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); cg.len()];
    let mut seen = vec![false; cg.len()];
    seen[root] = true;
    let mut q = VecDeque::from([root]);
    while let Some(u) = q.pop_front() {
        for &w in &sub_adj[u] {
            if !seen[w] {
                seen[w] = true;
                tree_adj[u].insert(w);
                tree_adj[w].insert(u);
                q.push_back(w);
            }
        }
    }
    // Prune non-terminal leaves until none remain.
    let mut alive: BTreeSet<usize> = sub_nodes;
    loop {
        let leaves: Vec<usize> = alive
            .iter()
            .copied()
            .filter(|&v| !cg.is_terminal(v) && tree_adj[v].len() <= 1)
            .collect();
        if leaves.is_empty() {
            break;
        }
        for v in leaves {
            alive.remove(&v);
            let ns: Vec<usize> = tree_adj[v].iter().copied().collect();
            for w in ns {
                tree_adj[w].remove(&v);
            }
            tree_adj[v].clear();
        }
    }
    let edges = alive
        .iter()
        .flat_map(|&u| tree_adj[u].iter().copied().filter(move |&w| w > u).map(move |w| (u, w)))
        .collect();
    Ok(SteinerTree {
        nodes: alive.into_iter().collect(),
        edges,
    })
}

/// Graph vertices to add as relays so that the deployed subgraph becomes
/// connected.
pub fn steiner_repair(cg: &CollapsedGraph) -> Result<Vec<usize>, GraphError> {
    let tree = steiner_tree(cg)?;
    let mut added: Vec<usize> = tree
        .steiner_nodes(cg)
        .into_iter()
        .flat_map(|n| cg.members(n).iter().copied())
        .collect();
    added.sort_unstable();
    Ok(added)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strip(n: usize, occ: &[usize]) -> GridRegion {
        let cells: Vec<Cell> = occ.iter().map(|&c| Cell::new(c, 0)).collect();
        GridRegion::with_obstacles(n, 1, 1.0, &cells).unwrap()
    }

    #[test]
    fn visibility_graph_examples() {
        let one = strip(1, &[]);
        let g = build_visibility_graph(&one, 1.5);
        assert_eq!((g.len(), g.edge_count()), (1, 0));
        assert!(g.self_cover(0));
        assert!(!build_visibility_graph(&one, 1.4).self_cover(0));

        // Ends of a 1x3 strip are sqrt(10) apart under the relaxed distance.
        let g = build_visibility_graph(&strip(3, &[]), 3.0);
        let edges: Vec<_> = g.edges().collect();
        assert_eq!(edges, vec![(0, 1), (1, 2)]);

        // 2x2 with (1,1) occupied: the remaining L-shape is mutually visible.
        let r = GridRegion::with_obstacles(2, 2, 1.0, &[Cell::new(1, 1)]).unwrap();
        let g = build_visibility_graph(&r, 10.0);
        assert_eq!(g.len(), 3);
        // (0,0)-(1,0), (0,0)-(0,1) share hulls free of the obstacle interior;
        // (1,0)-(0,1) hull cuts through (1,1).
        let edges: Vec<_> = g.edges().map(|(a, b)| (g.cell(a), g.cell(b))).collect();
        assert_eq!(
            edges,
            vec![(Cell::new(0, 0), Cell::new(1, 0)), (Cell::new(0, 0), Cell::new(0, 1))]
        );
    }

    #[test]
    fn connectivity_graph_examples() {
        let g = build_connectivity_graph(&strip(3, &[]), 3.0);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
        assert_eq!(build_connectivity_graph(&strip(1, &[]), 1.0).edge_count(), 0);
        assert_eq!(build_connectivity_graph(&strip(4, &[]), 0.1).edge_count(), 0);
        // Obstacles do not block radio links.
        let g = build_connectivity_graph(&strip(3, &[1]), 3.2);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn components_examples() {
        let g = CellGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(connected_components(&g, &[false; 3]).count, 0);
        assert_eq!(connected_components(&g, &[true; 3]).count, 1);
        let g = CellGraph::from_edges(2, &[]);
        assert_eq!(connected_components(&g, &[true; 2]).count, 2);
    }

    fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
        let mut a = vec![vec![false; n]; n];
        for &(i, j) in edges {
            a[i][j] = true;
            a[j][i] = true;
        }
        a
    }

    #[test]
    fn hop_connectivity_examples() {
        let path = adjacency(3, &[(0, 1), (1, 2)]);
        assert!(hop_connectivity(&path));
        assert!(HopMatrix::new(&path, 2).positive(0, 2));
        assert!(!HopMatrix::new(&path, 1).positive(0, 2));
        assert!(!hop_connectivity(&adjacency(4, &[(0, 1), (2, 3)])));
        assert!(hop_connectivity(&adjacency(1, &[])));
        // Wide graph exercising several bitset words.
        let n = 130;
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        assert!(hop_connectivity(&adjacency(n, &edges)));
    }

    #[test]
    fn collapse_and_repair() {
        // Path 0-1-2-3-4 with 0 and 4 deployed.
        let g = CellGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        let cg = collapse(&g, &[0, 4]);
        assert_eq!(cg.terminal_count(), 2);
        assert_eq!(steiner_repair(&cg).unwrap(), vec![1, 2, 3]);

        // Two components bridged by one middle cell.
        let g = CellGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        let cg = collapse(&g, &[0, 1, 3, 4]);
        assert_eq!(cg.terminal_count(), 2);
        assert_eq!(steiner_repair(&cg).unwrap(), vec![2]);

        // Already connected.
        let cg = collapse(&g, &[1, 2, 3]);
        assert_eq!(cg.terminal_count(), 1);
        assert!(steiner_repair(&cg).unwrap().is_empty());

        // No path.
        let g = CellGraph::from_edges(4, &[(0, 1), (2, 3)]);
        let cg = collapse(&g, &[0, 3]);
        assert!(matches!(steiner_repair(&cg), Err(GraphError::InfeasibleRepair { .. })));
    }

    #[test]
    fn two_terminals_at_distance_three() {
        let cg = CollapsedGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3)], &[0, 3]);
        let tree = steiner_tree(&cg).unwrap();
        assert_eq!(tree.weight(), 3);
        let mut inner: Vec<usize> = tree.steiner_nodes(&cg).iter().map(|&n| cg.members(n)[0]).collect();
        inner.sort_unstable();
        assert_eq!(inner, vec![1, 2]);
    }
}
