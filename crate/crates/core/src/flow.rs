//! Maximum flow between vertex sets of the cylinder, the canonical
//! (source-side) minimum cut, pivotal and essential edges, and the anchored
//! flow between the lower and upper halves of the boundary.

use serde::{Deserialize, Serialize};

use crate::capacity::CapacityField;
use crate::error::{domain, Result};
use crate::lattice::{boundary_sets, EdgeId, LatticeIndex, VertexId};
use crate::network::{Cap, Network, NetworkBuilder, INF_CAP};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowResult {
    pub value: Cap,
    /// Net flow along each edge from its lower endpoint to its upper one.
    pub edge_flows: Vec<Cap>,
    /// Residual reachability from the source side, per vertex.
    pub source_reachable: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutSet {
    pub edges: Vec<EdgeId>,
    pub capacity: Cap,
    pub h_min: usize,
    pub h_max: usize,
}

impl CutSet {
    /// Sorts and deduplicates `edges`, then fills in capacity and extent.
    pub fn new(lattice: &LatticeIndex, mut edges: Vec<EdgeId>, capacities: &[Cap]) -> Self {
        edges.sort_unstable();
        edges.dedup();
        let capacity = edges.iter().map(|&e| capacities[e]).sum();
        let (h_min, h_max) = extent_of(lattice, &edges).unwrap_or((0, 0));
        CutSet { edges, capacity, h_min, h_max }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.edges.binary_search(&e).is_ok()
    }

    pub fn extent(&self) -> usize {
        self.h_max - self.h_min
    }
}

pub(crate) fn extent_of(lattice: &LatticeIndex, edges: &[EdgeId]) -> Option<(usize, usize)> {
    let mut lo = usize::MAX;
    let mut hi = 0;
    for &e in edges {
        let (u, v) = lattice.endpoints(e);
        lo = lo.min(lattice.vertex_height(u));
        hi = hi.max(lattice.vertex_height(v));
    }
    (!edges.is_empty()).then_some((lo, hi))
}

/// Reusable solver for one lattice and one pair of terminal sets; reload it
/// with new capacities for each sample.
#[derive(Clone)]
pub struct LatticeFlow<'a> {
    lattice: &'a LatticeIndex,
    net: Network,
    s: usize,
    t: usize,
    value: Cap,
    caps: Vec<Cap>,
    saved: Vec<Cap>,
}

impl<'a> LatticeFlow<'a> {
    pub fn new(lattice: &'a LatticeIndex, sources: &[VertexId], sinks: &[VertexId]) -> Result<Self> {
        if sources.is_empty() || sinks.is_empty() {
            return domain("terminal sets must be nonempty");
        }
        let nv = lattice.num_vertices();
        let mut mark = vec![0u8; nv];
        for &v in sources {
            if v >= nv {
                return domain(format!("source vertex {v} out of range"));
            }
            mark[v] |= 1;
        }
        for &v in sinks {
            if v >= nv {
                return domain(format!("sink vertex {v} out of range"));
            }
            if mark[v] & 1 == 1 {
                return domain(format!("vertex {v} is both a source and a sink"));
            }
            mark[v] |= 2;
        }
        let (s, t) = (nv, nv + 1);
        let mut b = NetworkBuilder::new(nv + 2);
        for e in 0..lattice.num_edges() {
            let (u, v) = lattice.endpoints(e);
            b.add_pair(u, v, 0, 0);
        }
        for v in 0..nv {
            if mark[v] & 1 == 1 {
                b.add_pair(s, v, INF_CAP, 0);
            }
            if mark[v] & 2 == 2 {
                b.add_pair(v, t, INF_CAP, 0);
            }
        }
        Ok(LatticeFlow {
            lattice,
            net: b.build(),
            s,
            t,
            value: 0,
            caps: vec![0; lattice.num_edges()],
            saved: Vec::new(),
        })
    }

    /// Bottom layer to top layer.
    pub fn bottom_top(lattice: &'a LatticeIndex) -> Self {
        let (bottom, top) = boundary_sets(&lattice.spec());
        Self::new(lattice, &bottom, &top).expect("bottom and top layers are disjoint")
    }

    pub fn anchored(lattice: &'a LatticeIndex) -> Result<Self> {
        let (sources, sinks) = anchored_terminals(lattice)?;
        Self::new(lattice, &sources, &sinks)
    }

    pub fn lattice(&self) -> &'a LatticeIndex {
        self.lattice
    }

    /// Loads `capacities` (one per edge) and computes a maximum flow.
    pub fn solve(&mut self, capacities: &[Cap]) -> Cap {
        assert_eq!(capacities.len(), self.caps.len(), "one capacity per edge");
        self.caps.copy_from_slice(capacities);
        for (e, &c) in capacities.iter().enumerate() {
            self.net.set_pair(e, c, c);
        }
        self.net.reset_flow();
        self.value = self.net.augment(self.s, self.t);
        self.value
    }

    pub fn value(&self) -> Cap {
        self.value
    }

    pub fn capacities(&self) -> &[Cap] {
        &self.caps
    }

    pub fn edge_flow(&self, e: EdgeId) -> Cap {
        self.net.flow(e)
    }

    pub fn result(&self) -> FlowResult {
        FlowResult {
            value: self.value,
            edge_flows: (0..self.caps.len()).map(|e| self.net.flow(e)).collect(),
            source_reachable: self.source_side(),
        }
    }

    /// Vertices reachable from the sources in the residual graph.
    pub fn source_side(&self) -> Vec<bool> {
        let mut r = self.net.reachable_from(self.s);
        r.truncate(self.lattice.num_vertices());
        r
    }

    /// Vertices from which the sinks are reachable in the residual graph.
    pub fn sink_side(&self) -> Vec<bool> {
        let mut r = self.net.reaching(self.t);
        r.truncate(self.lattice.num_vertices());
        r
    }

    pub fn canonical_cut(&self) -> CutSet {
        cut_from_side(self.lattice, &self.source_side(), &self.caps)
    }

    /// Edges lying in every minimum cut: one endpoint reachable from the
    /// sources and the other reaching the sinks.
    pub fn essential(&self) -> Vec<EdgeId> {
        let rs = self.source_side();
        let rt = self.sink_side();
        (0..self.caps.len())
            .filter(|&e| {
                let (u, v) = self.lattice.endpoints(e);
                (rs[u] && rt[v]) || (rs[v] && rt[u])
            })
            .collect()
    }

    /// Permanently sets the capacity of `e` and repairs the maximum flow.
    pub fn set_capacity(&mut self, e: EdgeId, c: Cap) -> Cap {
        if self.caps[e] != c {
            self.caps[e] = c;
            self.value = self.net.set_undirected_capacity(e, c, self.s, self.t, self.value);
        }
        self.value
    }

    /// Flow value with `e` set to `c`; the solver state is left unchanged.
    pub fn value_if(&mut self, e: EdgeId, c: Cap) -> Cap {
        let old = self.caps[e];
        if old == c {
            return self.value;
        }
        let f = self.net.flow(e);
        if c < old && f.abs() <= c {
            return self.value;
        }
        let mut saved = std::mem::take(&mut self.saved);
        saved.clear();
        saved.extend_from_slice(self.net.residual());
        let v = self.net.set_undirected_capacity(e, c, self.s, self.t, self.value);
        self.net.set_pair(e, old, old);
        self.net.restore_residual(&saved);
        self.saved = saved;
        v
    }

    /// `D_e = f(t_e = high) - f(t_e = low)` for every edge, using that a raise
    /// only matters on essential edges and a drop only when the edge carries
    /// more flow than the lower capacity.
    pub fn flip_differences(&mut self, low: Cap, high: Cap) -> Vec<Cap> {
        let mut essential = vec![false; self.caps.len()];
        for e in self.essential() {
            essential[e] = true;
        }
        (0..self.caps.len())
            .map(|e| {
                let c = self.caps[e];
                let up = if c == high || (c < high && !essential[e]) {
                    self.value
                } else {
                    self.value_if(e, high)
                };
                let down = if c == low { self.value } else { self.value_if(e, low) };
                up - down
            })
            .collect()
    }

    /// Edges with `f(t_e = high) > f(t_e = low)`.
    pub fn pivotal(&mut self, low: Cap, high: Cap) -> Vec<EdgeId> {
        self.flip_differences(low, high)
            .into_iter()
            .enumerate()
            .filter(|&(_, d)| d > 0)
            .map(|(e, _)| e)
            .collect()
    }
}

/// Edges with exactly one endpoint in `side`.
pub fn cut_from_side(lattice: &LatticeIndex, side: &[bool], capacities: &[Cap]) -> CutSet {
    let edges = (0..lattice.num_edges())
        .filter(|&e| {
            let (u, v) = lattice.endpoints(e);
            side[u] != side[v]
        })
        .collect();
    CutSet::new(lattice, edges, capacities)
}

pub fn max_flow(
    lattice: &LatticeIndex,
    field: &CapacityField,
    sources: &[VertexId],
    sinks: &[VertexId],
) -> Result<FlowResult> {
    let mut solver = LatticeFlow::new(lattice, sources, sinks)?;
    solver.solve(&field.values);
    Ok(solver.result())
}

/// Edges with exactly one endpoint reachable from the source side.
pub fn canonical_min_cut(lattice: &LatticeIndex, flow: &FlowResult, field: &CapacityField) -> CutSet {
    cut_from_side(lattice, &flow.source_reachable, &field.values)
}

pub fn pivotal_set(
    lattice: &LatticeIndex,
    field: &CapacityField,
    sources: &[VertexId],
    sinks: &[VertexId],
) -> Result<Vec<EdgeId>> {
    let mut solver = LatticeFlow::new(lattice, sources, sinks)?;
    solver.solve(&field.values);
    Ok(solver.pivotal(field.dist.low(), field.dist.high()))
}

pub fn essential_set(
    lattice: &LatticeIndex,
    field: &CapacityField,
    sources: &[VertexId],
    sinks: &[VertexId],
) -> Result<Vec<EdgeId>> {
    let mut solver = LatticeFlow::new(lattice, sources, sinks)?;
    solver.solve(&field.values);
    Ok(solver.essential())
}

/// Boundary vertices strictly below and strictly above the mid-height.
pub fn anchored_terminals(lattice: &LatticeIndex) -> Result<(Vec<VertexId>, Vec<VertexId>)> {
    let h = lattice.spec().height;
    if h < 2 {
        return domain(format!("anchored flow needs H >= 2, got {h}"));
    }
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for v in 0..lattice.num_vertices() {
        if !lattice.is_boundary_vertex(v) {
            continue;
        }
        let z2 = 2 * lattice.vertex_height(v);
        if z2 < h {
            lower.push(v);
        } else if z2 > h {
            upper.push(v);
        }
    }
    Ok((lower, upper))
}

pub fn anchored_flow(lattice: &LatticeIndex, field: &CapacityField) -> Result<FlowResult> {
    let (sources, sinks) = anchored_terminals(lattice)?;
    max_flow(lattice, field, &sources, &sinks)
}

#[derive(Serialize)]
struct FlowReport<'c> {
    value: Cap,
    cut_edges: &'c [EdgeId],
    cut_capacity: Cap,
    h_min: usize,
    h_max: usize,
}

pub fn flow_json(flow: &FlowResult, cut: &CutSet) -> String {
    serde_json::to_string_pretty(&FlowReport {
        value: flow.value,
        cut_edges: &cut.edges,
        cut_capacity: cut.capacity,
        h_min: cut.h_min,
        h_max: cut.h_max,
    })
    .expect("flow report serializes")
}
