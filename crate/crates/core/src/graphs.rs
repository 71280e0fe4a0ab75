//! Per-month employee co-employment and firm mobility graphs, descriptive
//! network statistics and Louvain community detection.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::io::Write;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::registry::{month_coord, MonthIndex, RecordSet, TemporalGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphKind {
    EmployeeCoemployment,
    FirmMobility,
}

/// Undirected weighted graph over opaque `u32` node ids (person or firm
/// indexes of a [`RecordSet`]), stored as sorted adjacency lists.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    kind: GraphKind,
    snapshot: MonthIndex,
    nodes: Vec<u32>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
}

impl WeightedGraph {
    /// Build from a node set and an edge list. Rejects self-loops, non-positive
    /// weights, unknown endpoints and repeated edges.
    pub fn from_edges(
        kind: GraphKind,
        snapshot: MonthIndex,
        mut nodes: Vec<u32>,
        edges: impl IntoIterator<Item = (u32, u32, f64)>,
    ) -> Result<Self> {
        nodes.sort_unstable();
        nodes.dedup();
        let pos = |id: u32| {
            nodes
                .binary_search(&id)
                .map(|p| p as u32)
                .map_err(|_| Error::arg(format!("edge endpoint {id} is not a node")))
        };
        let mut half: Vec<(u32, u32, f64)> = Vec::new();
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::arg(format!("self-loop on node {a}")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::arg(format!("edge ({a}, {b}) has non-positive weight {w}")));
            }
            let (pa, pb) = (pos(a)?, pos(b)?);
            half.push((pa, pb, w));
            half.push((pb, pa, w));
        }
        half.sort_unstable_by_key(|e| (e.0, e.1));
        if let Some(dup) = half.windows(2).find(|p| p[0].0 == p[1].0 && p[0].1 == p[1].1) {
            return Err(Error::arg(format!(
                "repeated edge ({}, {})",
                nodes[dup[0].0 as usize], nodes[dup[0].1 as usize]
            )));
        }
        let mut offsets = vec![0usize; nodes.len() + 1];
        for e in &half {
            offsets[e.0 as usize + 1] += 1;
        }
        for i in 0..nodes.len() {
            offsets[i + 1] += offsets[i];
        }
        Ok(WeightedGraph {
            kind,
            snapshot,
            nodes,
            offsets,
            targets: half.iter().map(|e| e.1).collect(),
            weights: half.iter().map(|e| e.2).collect(),
        })
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn snapshot(&self) -> MonthIndex {
        self.snapshot
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_edges(&self) -> usize {
        self.targets.len() / 2
    }

    /// Node ids in ascending order; a node's position in this slice is its local index.
    pub fn nodes(&self) -> &[u32] {
        &self.nodes
    }

    pub fn position(&self, id: u32) -> Option<usize> {
        self.nodes.binary_search(&id).ok()
    }

    /// Neighbors of the node at local index `i` as (local index, weight), ascending.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.targets[r.clone()].iter().map(|&t| t as usize).zip(self.weights[r].iter().copied())
    }

    fn neighbor_slice(&self, i: usize) -> &[u32] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn weight(&self, a: u32, b: u32) -> Option<f64> {
        let (pa, pb) = (self.position(a)?, self.position(b)? as u32);
        let r = self.offsets[pa]..self.offsets[pa + 1];
        let k = self.targets[r.clone()].binary_search(&pb).ok()?;
        Some(self.weights[r.start + k])
    }

    /// Each undirected edge once as (id, id, weight) with the smaller id first.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        (0..self.nodes.len()).flat_map(move |i| {
            self.neighbors(i)
                .filter(move |&(j, _)| j > i)
                .map(move |(j, w)| (self.nodes[i], self.nodes[j], w))
        })
    }
}

// ---------------------------------------------------------------------------
// Employee co-employment graph
// ---------------------------------------------------------------------------

/// A person's spells visible at a snapshot, as (firm, start, end) month coordinates.
type SpellSpan = (u32, f64, f64);

fn visible_spans(rs: &RecordSet, person: u32, snap: chrono::NaiveDate, snap_c: f64) -> Vec<SpellSpan> {
    let mut spans: Vec<SpellSpan> = rs
        .spells_of_person(person)
        .iter()
        .filter(|&&s| rs.record(s).start_date <= snap)
        .map(|&s| {
            let end = rs.end_coord_asof(s, snap).unwrap_or(snap_c).min(snap_c);
            (rs.firm_of(s), rs.start_coord(s), end)
        })
        .collect();
    spans.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    spans
}

/// Total co-employment time (measure of the union of overlaps at shared firms).
fn overlap_months(a: &[SpellSpan], b: &[SpellSpan]) -> f64 {
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    for &(fa, sa, ea) in a {
        for &(fb, sb, eb) in b {
            if fa != fb {
                continue;
            }
            let lo = sa.max(sb);
            let hi = ea.min(eb);
            if hi > lo {
                pieces.push((lo, hi));
            }
        }
    }
    if pieces.len() <= 1 {
        return pieces.first().map_or(0.0, |p| p.1 - p.0);
    }
    pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut total = 0.0;
    let (mut cur_lo, mut cur_hi) = pieces[0];
    for &(lo, hi) in &pieces[1..] {
        if lo > cur_hi {
            total += cur_hi - cur_lo;
            cur_lo = lo;
            cur_hi = hi;
        } else if hi > cur_hi {
            cur_hi = hi;
        }
    }
    total + (cur_hi - cur_lo)
}

/// Co-employment graph at month `m`: persons active at `m`, linked when they
/// share an active firm, weighted by overlap / sqrt(career_i * career_j) with
/// both durations floored at one month.
pub fn build_employee_graph(grid: &TemporalGrid, rs: &RecordSet, m: MonthIndex) -> Result<WeightedGraph> {
    let active = grid.active(m)?;
    let snap = m.snapshot_date();
    let snap_c = month_coord(snap);

    let mut by_firm: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for &s in active {
        by_firm.entry(rs.firm_of(s)).or_default().push(rs.person_of(s));
    }
    let mut nodes: Vec<u32> = active.iter().map(|&s| rs.person_of(s)).collect();
    nodes.sort_unstable();
    nodes.dedup();

    let mut pairs: Vec<(u32, u32)> = Vec::new();
    for members in by_firm.values_mut() {
        members.sort_unstable();
        members.dedup();
        for (i, &p) in members.iter().enumerate() {
            for &q in &members[i + 1..] {
                pairs.push((p, q));
            }
        }
    }
    pairs.par_sort_unstable();
    pairs.dedup();

    let spans: Vec<Vec<SpellSpan>> =
        nodes.par_iter().map(|&p| visible_spans(rs, p, snap, snap_c)).collect();
    let career: Vec<f64> = spans
        .iter()
        .map(|sp| {
            let first = sp.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
            (snap_c - first).max(1.0)
        })
        .collect();
    let local = |p: u32| nodes.binary_search(&p).expect("active person is a node");

    let edges: Vec<(u32, u32, f64)> = pairs
        .par_iter()
        .map(|&(p, q)| {
            let (i, j) = (local(p), local(q));
            let overlap = overlap_months(&spans[i], &spans[j]).max(1.0);
            (p, q, overlap / (career[i] * career[j]).sqrt())
        })
        .collect();

    WeightedGraph::from_edges(GraphKind::EmployeeCoemployment, m, nodes, edges)
}

// ---------------------------------------------------------------------------
// Firm mobility graph
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FirmWeightKind {
    Count,
    Jaccard,
    Recency,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirmWeightScheme {
    pub kind: FirmWeightKind,
    /// Decay rate per month, used by [`FirmWeightKind::Recency`] only.
    #[serde(default = "default_lambda")]
    pub recency_lambda: f64,
}

fn default_lambda() -> f64 {
    0.05
}

impl Default for FirmWeightScheme {
    fn default() -> Self {
        FirmWeightScheme { kind: FirmWeightKind::Count, recency_lambda: default_lambda() }
    }
}

impl FirmWeightScheme {
    pub fn recency(lambda: f64) -> Self {
        FirmWeightScheme { kind: FirmWeightKind::Recency, recency_lambda: lambda }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == FirmWeightKind::Recency && !(self.recency_lambda > 0.0 && self.recency_lambda.is_finite()) {
            return Err(Error::arg(format!("recency_lambda must be > 0, got {}", self.recency_lambda)));
        }
        Ok(())
    }
}

/// Firm graph at month `m` over firms with at least one active spell.
pub fn build_firm_graph(
    grid: &TemporalGrid,
    rs: &RecordSet,
    m: MonthIndex,
    scheme: FirmWeightScheme,
) -> Result<WeightedGraph> {
    scheme.validate()?;
    let active = grid.active(m)?;
    let snap = m.snapshot_date();
    let snap_c = month_coord(snap);

    let mut nodes: Vec<u32> = active.iter().map(|&s| rs.firm_of(s)).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let is_node = |f: u32| nodes.binary_search(&f).is_ok();

    let mut shared: HashMap<(u32, u32), f64> = HashMap::new();
    let mut roster_size: HashMap<u32, usize> = HashMap::new();
    for p in 0..rs.n_persons() as u32 {
        let spells: Vec<usize> = rs
            .spells_of_person(p)
            .iter()
            .copied()
            .filter(|&s| rs.record(s).start_date <= snap)
            .collect();
        if spells.is_empty() {
            continue;
        }
        let mut firms: Vec<u32> = spells.iter().map(|&s| rs.firm_of(s)).collect();
        firms.sort_unstable();
        firms.dedup();
        for &f in &firms {
            *roster_size.entry(f).or_default() += 1;
        }
        match scheme.kind {
            FirmWeightKind::Count | FirmWeightKind::Jaccard => {
                for (i, &a) in firms.iter().enumerate() {
                    for &b in &firms[i + 1..] {
                        if is_node(a) && is_node(b) {
                            *shared.entry((a, b)).or_default() += 1.0;
                        }
                    }
                }
            }
            FirmWeightKind::Recency => {
                // spells are ordered by start; every earlier→later pair at
                // different firms is a transition dated at the later start.
                for (i, &s1) in spells.iter().enumerate() {
                    for &s2 in &spells[i + 1..] {
                        let (a, b) = (rs.firm_of(s1), rs.firm_of(s2));
                        if a == b || !is_node(a) || !is_node(b) {
                            continue;
                        }
                        let age = snap_c - rs.start_coord(s2);
                        let key = (a.min(b), a.max(b));
                        *shared.entry(key).or_default() += (-scheme.recency_lambda * age).exp();
                    }
                }
            }
        }
    }

    let mut edges: Vec<(u32, u32, f64)> = shared
        .into_iter()
        .map(|((a, b), v)| {
            let w = match scheme.kind {
                FirmWeightKind::Jaccard => {
                    let union = roster_size[&a] + roster_size[&b] - v as usize;
                    v / union as f64
                }
                _ => v,
            };
            (a, b, w)
        })
        .filter(|e| e.2 > 0.0)
        .collect();
    edges.sort_unstable_by_key(|e| (e.0, e.1));
    WeightedGraph::from_edges(GraphKind::FirmMobility, m, nodes, edges)
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMetrics {
    pub n_nodes: usize,
    pub n_edges: usize,
    /// `None` for an empty graph.
    pub mean_degree: Option<f64>,
    /// 3 * triangles / connected triples; `None` when there are no triples.
    pub global_clustering: Option<f64>,
    pub n_components: usize,
    pub giant_component_share: Option<f64>,
    pub degree_histogram: BTreeMap<usize, usize>,
    /// Mean BFS distance from sampled sources inside the giant component.
    pub avg_path_length_sampled: Option<f64>,
}

/// Connected components as a component label per local node index.
pub fn connected_components(g: &WeightedGraph) -> (Vec<usize>, usize) {
    let n = g.n_nodes();
    let mut comp = vec![usize::MAX; n];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = count;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbor_slice(u) {
                let v = v as usize;
                if comp[v] == usize::MAX {
                    comp[v] = count;
                    queue.push_back(v);
                }
            }
        }
        count += 1;
    }
    (comp, count)
}

fn count_triangles(g: &WeightedGraph) -> u64 {
    let mut total = 0u64;
    for u in 0..g.n_nodes() {
        let nu = g.neighbor_slice(u);
        for &v in nu.iter().filter(|&&v| v as usize > u) {
            let nv = g.neighbor_slice(v as usize);
            // common neighbors w > v
            let (mut i, mut j) = (0, 0);
            while i < nu.len() && j < nv.len() {
                match nu[i].cmp(&nv[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        if nu[i] > v {
                            total += 1;
                        }
                        i += 1;
                        j += 1;
                    }
                }
            }
        }
    }
    total
}

pub fn graph_metrics(g: &WeightedGraph, path_samples: usize, seed: u64) -> GraphMetrics {
    let n = g.n_nodes();
    let mut degree_histogram = BTreeMap::new();
    let mut triples = 0u64;
    for i in 0..n {
        let d = g.degree(i);
        *degree_histogram.entry(d).or_insert(0) += 1;
        triples += (d as u64 * d.saturating_sub(1) as u64) / 2;
    }
    let triangles = count_triangles(g);
    let (comp, n_components) = connected_components(g);
    let mut sizes = vec![0usize; n_components];
    for &c in &comp {
        sizes[c] += 1;
    }
    // Largest component; ties go to the lowest label.
    let giant = sizes.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0))).map(|(c, &s)| (c, s));

    let avg_path_length_sampled = giant.and_then(|(c, size)| {
        if size < 2 || path_samples == 0 {
            return None;
        }
        let members: Vec<usize> = (0..n).filter(|&i| comp[i] == c).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = path_samples.min(size);
        let sources: Vec<usize> = index::sample(&mut rng, size, k).into_iter().map(|i| members[i]).collect();
        let (sum, cnt) = sources
            .par_iter()
            .map(|&s| bfs_distance_sum(g, s))
            .reduce(|| (0u64, 0u64), |a, b| (a.0 + b.0, a.1 + b.1));
        Some(sum as f64 / cnt as f64)
    });

    GraphMetrics {
        n_nodes: n,
        n_edges: g.n_edges(),
        mean_degree: (n > 0).then(|| 2.0 * g.n_edges() as f64 / n as f64),
        global_clustering: (triples > 0).then(|| 3.0 * triangles as f64 / triples as f64),
        n_components,
        giant_component_share: giant.map(|(_, s)| s as f64 / n as f64),
        degree_histogram,
        avg_path_length_sampled,
    }
}

fn bfs_distance_sum(g: &WeightedGraph, source: usize) -> (u64, u64) {
    let mut dist = vec![u32::MAX; g.n_nodes()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    let (mut sum, mut cnt) = (0u64, 0u64);
    while let Some(u) = queue.pop_front() {
        for &v in g.neighbor_slice(u) {
            let v = v as usize;
            if dist[v] == u32::MAX {
                dist[v] = dist[u] + 1;
                sum += dist[v] as u64;
                cnt += 1;
                queue.push_back(v);
            }
        }
    }
    (sum, cnt)
}

// ---------------------------------------------------------------------------
// Louvain
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Communities {
    /// Community id per node id; ids are dense and numbered by first appearance
    /// in ascending node order.
    pub partition: BTreeMap<u32, usize>,
    pub modularity: f64,
    /// Modularity of the full-graph partition after each local-move pass.
    pub pass_modularity: Vec<f64>,
}

/// Weighted modularity of a partition given per local node.
pub fn modularity(g: &WeightedGraph, community: &[usize]) -> f64 {
    let n = g.n_nodes();
    let strength: Vec<f64> = (0..n).map(|i| g.neighbors(i).map(|(_, w)| w).sum()).collect();
    let two_m: f64 = strength.iter().sum();
    if two_m == 0.0 {
        return 0.0;
    }
    let mut internal = 0.0;
    for i in 0..n {
        for (j, w) in g.neighbors(i) {
            if community[i] == community[j] {
                internal += w;
            }
        }
    }
    let mut tot: HashMap<usize, f64> = HashMap::new();
    for i in 0..n {
        *tot.entry(community[i]).or_default() += strength[i];
    }
    let mut keys: Vec<_> = tot.keys().copied().collect();
    keys.sort_unstable();
    let expected: f64 = keys.iter().map(|k| tot[k] * tot[k]).sum::<f64>() / (two_m * two_m);
    internal / two_m - expected
}

struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    self_loop: Vec<f64>,
}

impl Level {
    fn strength(&self, i: usize) -> f64 {
        self.adj[i].iter().map(|e| e.1).sum::<f64>() + self.self_loop[i]
    }
}

/// Run Louvain with a seeded node visiting order. Deterministic for a given seed.
pub fn louvain_communities(g: &WeightedGraph, seed: u64) -> Result<Communities> {
    let n = g.n_nodes();
    if n == 0 {
        return Err(Error::arg("louvain on an empty graph"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level = Level {
        adj: (0..n).map(|i| g.neighbors(i).collect()).collect(),
        self_loop: vec![0.0; n],
    };
    // membership of each original node in the current level's node set
    let mut member: Vec<usize> = (0..n).collect();
    let mut pass_modularity = Vec::new();
    let two_m: f64 = (0..n).map(|i| level.strength(i)).sum();
    if two_m == 0.0 {
        return Ok(finish(g, &member, Vec::new()));
    }

    loop {
        let ln = level.adj.len();
        let k: Vec<f64> = (0..ln).map(|i| level.strength(i)).collect();
        let mut comm: Vec<usize> = (0..ln).collect();
        let mut tot = k.clone();
        let mut order: Vec<usize> = (0..ln).collect();
        order.shuffle(&mut rng);
        let mut moved_any = false;
        let mut links: HashMap<usize, f64> = HashMap::new();

        loop {
            let mut moved = 0usize;
            for &i in &order {
                let ci = comm[i];
                links.clear();
                for &(j, w) in &level.adj[i] {
                    *links.entry(comm[j]).or_default() += w;
                }
                tot[ci] -= k[i];
                let gain = |c: usize, kin: f64| kin - tot[c] * k[i] / two_m;
                let mut best = ci;
                let mut best_gain = gain(ci, links.get(&ci).copied().unwrap_or(0.0));
                let mut cands: Vec<(usize, f64)> = links.iter().map(|(&c, &w)| (c, w)).collect();
                cands.sort_unstable_by_key(|c| c.0);
                for (c, kin) in cands {
                    let gc = gain(c, kin);
                    if gc > best_gain + 1e-12 {
                        best = c;
                        best_gain = gc;
                    }
                }
                tot[best] += k[i];
                if best != ci {
                    comm[i] = best;
                    moved += 1;
                }
            }
            if moved == 0 {
                break;
            }
            moved_any = true;
            let full: Vec<usize> = member.iter().map(|&m| comm[m]).collect();
            pass_modularity.push(modularity(g, &full));
        }

        if !moved_any {
            break;
        }
        // Aggregate communities into the next level.
        let mut relabel: HashMap<usize, usize> = HashMap::new();
        for &c in &comm {
            let next = relabel.len();
            relabel.entry(c).or_insert(next);
        }
        let cn = relabel.len();
        let mut agg: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); cn];
        let mut self_loop = vec![0.0; cn];
        for i in 0..ln {
            let ci = relabel[&comm[i]];
            self_loop[ci] += level.self_loop[i];
            for &(j, w) in &level.adj[i] {
                let cj = relabel[&comm[j]];
                if ci == cj {
                    self_loop[ci] += w;
                } else {
                    *agg[ci].entry(cj).or_default() += w;
                }
            }
        }
        for m in member.iter_mut() {
            *m = relabel[&comm[*m]];
        }
        level = Level { adj: agg.into_iter().map(|m| m.into_iter().collect()).collect(), self_loop };
        if cn == 1 {
            break;
        }
    }
    Ok(finish(g, &member, pass_modularity))
}

fn finish(g: &WeightedGraph, member: &[usize], pass_modularity: Vec<f64>) -> Communities {
    let mut relabel: HashMap<usize, usize> = HashMap::new();
    let dense: Vec<usize> = member
        .iter()
        .map(|&c| {
            let next = relabel.len();
            *relabel.entry(c).or_insert(next)
        })
        .collect();
    Communities {
        partition: g.nodes().iter().copied().zip(dense.iter().copied()).collect(),
        modularity: modularity(g, &dense),
        pass_modularity,
    }
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

fn node_name(g: &WeightedGraph, rs: &RecordSet, id: u32) -> String {
    match g.kind() {
        GraphKind::EmployeeCoemployment => rs.person_name(id).to_string(),
        GraphKind::FirmMobility => rs.firm_name(id).to_string(),
    }
}

/// Edge list as `src,dst,weight`.
pub fn write_edge_csv<W: Write>(g: &WeightedGraph, rs: &RecordSet, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["src", "dst", "weight"])?;
    for (a, b, wt) in g.edges() {
        w.write_record([node_name(g, rs, a), node_name(g, rs, b), wt.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Node list as `node,degree,strength`.
pub fn write_node_csv<W: Write>(g: &WeightedGraph, rs: &RecordSet, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["node", "degree", "strength"])?;
    for (i, &id) in g.nodes().iter().enumerate() {
        let strength: f64 = g.neighbors(i).map(|(_, w)| w).sum();
        w.write_record([node_name(g, rs, id), g.degree(i).to_string(), strength.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
