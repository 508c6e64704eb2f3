//! Cut-set validation, vertical extent and the layer-by-layer scan of a
//! minimal cut from above (`A(i)`) and from below (`Â(i)`).

use serde::Serialize;

use crate::capacity::CapacityField;
use crate::error::{domain, Result};
use crate::flow::extent_of;
use crate::lattice::{boundary_sets, edge_boundary_of_mask, EdgeId, LatticeIndex, VertexId};

fn edge_mask(lattice: &LatticeIndex, edges: &[EdgeId]) -> Vec<bool> {
    let mut mask = vec![false; lattice.num_edges()];
    for &e in edges {
        mask[e] = true;
    }
    mask
}

fn other_end(lattice: &LatticeIndex, e: EdgeId, u: VertexId) -> VertexId {
    let (a, b) = lattice.endpoints(e);
    if a == u {
        b
    } else {
        a
    }
}

/// True iff every path from `sources` to `sinks` uses an edge of `edges`.
pub fn validate_cutset(lattice: &LatticeIndex, edges: &[EdgeId], sources: &[VertexId], sinks: &[VertexId]) -> bool {
    let removed = edge_mask(lattice, edges);
    let mut seen = vec![false; lattice.num_vertices()];
    let mut stack = Vec::new();
    for &s in sources {
        if !seen[s] {
            seen[s] = true;
            stack.push(s);
        }
    }
    while let Some(u) = stack.pop() {
        for e in lattice.incident_edges(u) {
            if removed[e] {
                continue;
            }
            let w = other_end(lattice, e, u);
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    sinks.iter().all(|&t| !seen[t])
}

pub fn is_bottom_top_cut(lattice: &LatticeIndex, edges: &[EdgeId]) -> bool {
    let (bottom, top) = boundary_sets(&lattice.spec());
    validate_cutset(lattice, edges, &bottom, &top)
}

/// `(h_min, h_max)`: lowest and highest endpoint heights.
pub fn vertical_extent(lattice: &LatticeIndex, edges: &[EdgeId]) -> Result<(usize, usize)> {
    match extent_of(lattice, edges) {
        Some(x) => Ok(x),
        None => domain("vertical extent of an empty edge set"),
    }
}

/// Vertices of `[z, H]` that reach the top layer inside `[z, H]` without
/// crossing `removed`, grown one layer at a time as `z` decreases.
struct TopReach<'l> {
    lattice: &'l LatticeIndex,
    removed: &'l [bool],
    reach: Vec<bool>,
    low: usize,
    stack: Vec<VertexId>,
}

impl<'l> TopReach<'l> {
    fn new(lattice: &'l LatticeIndex, removed: &'l [bool]) -> Self {
        let h = lattice.spec().height;
        let mut r = TopReach {
            lattice,
            removed,
            reach: vec![false; lattice.num_vertices()],
            low: h,
            stack: Vec::new(),
        };
        for v in lattice.layer(h) {
            r.reach[v] = true;
            r.stack.push(v);
        }
        r.flood();
        r
    }

    fn flood(&mut self) {
        while let Some(u) = self.stack.pop() {
            for e in self.lattice.incident_edges(u) {
                if self.removed[e] {
                    continue;
                }
                let w = other_end(self.lattice, e, u);
                if !self.reach[w] && self.lattice.vertex_height(w) >= self.low {
                    self.reach[w] = true;
                    self.stack.push(w);
                }
            }
        }
    }

    fn lower_to(&mut self, z: usize) {
        while self.low > z {
            self.low -= 1;
            for v in self.lattice.layer(self.low) {
                let up = v + self.lattice.layer_vertices();
                let e = self.lattice.edge_between(v, up).expect("vertical edge");
                if !self.removed[e] && self.reach[up] {
                    self.reach[v] = true;
                    self.stack.push(v);
                }
            }
            self.flood();
        }
    }

    /// Layer mask (by base index) of points at height `z` that cannot reach
    /// the top; `z` must be the current lower end.
    fn blocked_layer(&self, z: usize) -> Vec<bool> {
        debug_assert_eq!(z, self.low);
        self.lattice.layer(z).map(|v| !self.reach[v]).collect()
    }
}

/// Points of layer `z` from which every path to the top inside `[z, H]`
/// meets `edges`, as a mask over base indices.
pub fn blocked_from_top(lattice: &LatticeIndex, edges: &[EdgeId], z: usize) -> Vec<bool> {
    let removed = edge_mask(lattice, edges);
    let mut r = TopReach::new(lattice, &removed);
    r.lower_to(z);
    r.blocked_layer(z)
}

fn mask_count(mask: &[bool]) -> usize {
    mask.iter().filter(|&&x| x).count()
}

fn mask_indices(mask: &[bool]) -> Vec<usize> {
    mask.iter().enumerate().filter(|(_, &x)| x).map(|(i, _)| i).collect()
}

/// Whether every horizontal edge of layer `z` joining a point of `mask` to a
/// point outside it lies in `removed`.
fn boundary_inside(lattice: &LatticeIndex, removed: &[bool], mask: &[bool], z: usize) -> bool {
    let offset = z * lattice.layer_vertices();
    lattice.layer(z).all(|v| {
        !mask[v - offset]
            || lattice.incident_edges(v).all(|e| {
                let w = other_end(lattice, e, v);
                lattice.vertex_height(w) != z || mask[w - offset] || removed[e]
            })
    })
}

fn edges_between_heights(lattice: &LatticeIndex, edges: &[EdgeId], lo: usize, hi: usize) -> Vec<EdgeId> {
    edges
        .iter()
        .copied()
        .filter(|&e| {
            let (u, v) = lattice.endpoints(e);
            lattice.vertex_height(u) >= lo && lattice.vertex_height(v) <= hi
        })
        .collect()
}

fn upper_patch(lattice: &LatticeIndex, edges: &[EdgeId], z: usize, blocked: &[bool]) -> Vec<EdgeId> {
    let mut out = edges_between_heights(lattice, edges, 0, z);
    let base = z * lattice.layer_vertices();
    for (k, &b) in blocked.iter().enumerate() {
        if b {
            let v = base + k;
            out.push(lattice.edge_between(v - lattice.layer_vertices(), v).expect("vertical edge"));
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

fn lower_patch(lattice: &LatticeIndex, edges: &[EdgeId], z: usize, blocked: &[bool]) -> Vec<EdgeId> {
    let h = lattice.spec().height;
    let mut out = edges_between_heights(lattice, edges, z, h);
    let base = z * lattice.layer_vertices();
    for (k, &b) in blocked.iter().enumerate() {
        if !b {
            let v = base + k;
            out.push(lattice.edge_between(v, v + lattice.layer_vertices()).expect("vertical edge"));
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// `(E_i, Ê_i)`: the cut below `A(i)` patched with the verticals under it,
/// and the cut above `Â(i)` patched with the verticals over its complement.
/// When the layer has no edge to patch with (height 0 resp. `H`), `E` itself
/// is returned for that side.
pub fn patched_cutsets(lattice: &LatticeIndex, edges: &[EdgeId], i: usize) -> Result<(Vec<EdgeId>, Vec<EdgeId>)> {
    let (h_min, h_max) = vertical_extent(lattice, edges)?;
    let h = lattice.spec().height;
    let mut sorted = edges.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let upper = if i >= 1 && i < h_max {
        let z = h_max - i;
        upper_patch(lattice, &sorted, z, &blocked_from_top(lattice, &sorted, z))
    } else {
        sorted.clone()
    };
    let lower = if i >= 1 && h_min + i < h {
        let z = h_min + i;
        lower_patch(lattice, &sorted, z, &blocked_from_top(lattice, &sorted, z))
    } else {
        sorted.clone()
    };
    Ok((upper, lower))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanLayer {
    pub i: usize,
    /// Height `h_max - i` of the upper layer `U_i`.
    pub height: usize,
    /// `A(i)` as base indices.
    pub a_set: Vec<usize>,
    pub a_size: usize,
    pub boundary: usize,
    pub boundary_in_cut: bool,
    /// `|E \ F_i|`.
    pub above: usize,
    /// `b|A(i)| - a|E \ F_i|`; the constraint holds iff this is `>= 0`.
    pub const_slack: i64,
    /// `E_i` validated as a cut; `None` at height 0.
    pub patched_valid: Option<bool>,
    /// Height `h_min + i` of the lower layer `L_i`.
    pub hat_height: usize,
    pub hat_a_set: Vec<usize>,
    pub hat_a_size: usize,
    pub hat_boundary: usize,
    pub hat_boundary_in_cut: bool,
    /// `|E \ G_i|`.
    pub below: usize,
    /// `b|Â(i)^c| - a|E \ G_i|`.
    pub hat_const_slack: i64,
    /// `Ê_i` validated as a cut; `None` at height `H`.
    pub hat_patched_valid: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChimneyScan {
    pub h_min: usize,
    pub h_max: usize,
    pub extent: usize,
    pub cut_size: usize,
    pub layers: Vec<ScanLayer>,
    pub t_stop: Option<usize>,
    pub hat_t_stop: Option<usize>,
}

impl ChimneyScan {
    /// Every deterministic claim of the scan holds on this cut.
    pub fn all_checks_pass(&self) -> bool {
        self.violations().is_empty()
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for l in &self.layers {
            if !l.boundary_in_cut || !l.hat_boundary_in_cut {
                out.push(format!("layer {}: edge boundary not inside the cut", l.i));
            }
            if l.const_slack < 0 || l.hat_const_slack < 0 {
                out.push(format!("layer {}: size constraint violated", l.i));
            }
            if l.patched_valid == Some(false) || l.hat_patched_valid == Some(false) {
                out.push(format!("layer {}: patched set is not a cut", l.i));
            }
            if l.a_size == 0 {
                out.push(format!("layer {}: A(i) is empty", l.i));
            }
        }
        out
    }
}

/// Scans `edges` (a minimal bottom-to-top cut) for every `1 <= i <= h_max - h_min`.
pub fn chimney_scan(lattice: &LatticeIndex, field: &CapacityField, edges: &[EdgeId]) -> Result<ChimneyScan> {
    if edges.is_empty() || !is_bottom_top_cut(lattice, edges) {
        return domain("edge set does not cut the bottom from the top");
    }
    let spec = lattice.spec();
    let (a, b) = (field.dist.a as i64, field.dist.b as i64);
    let mut sorted = edges.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let removed = edge_mask(lattice, &sorted);
    let (h_min, h_max) = vertical_extent(lattice, &sorted)?;
    let extent = h_max - h_min;
    let layer_total = lattice.layer_vertices();

    // blocked[j] = A(j) for j = 0..=extent, at height h_max - j.
    let mut reach = TopReach::new(lattice, &removed);
    let mut blocked = Vec::with_capacity(extent + 1);
    for j in 0..=extent {
        reach.lower_to(h_max - j);
        blocked.push(reach.blocked_layer(h_max - j));
    }
    let (bottom, top) = boundary_sets(&spec);
    let heights: Vec<(usize, usize)> = sorted
        .iter()
        .map(|&e| {
            let (u, v) = lattice.endpoints(e);
            (lattice.vertex_height(u), lattice.vertex_height(v))
        })
        .collect();

    let threshold = |count: usize| 10 * b * count as i64 >= (10 * b - a) * layer_total as i64;
    let mut layers = Vec::with_capacity(extent);
    for i in 1..=extent {
        let z = h_max - i;
        let up = &blocked[i];
        let a_size = mask_count(up);
        let above = heights.iter().filter(|&&(_, hi)| hi > z).count();
        let patched_valid = (z >= 1).then(|| {
            validate_cutset(lattice, &upper_patch(lattice, &sorted, z, up), &bottom, &top)
        });

        let hz = h_min + i;
        let low = &blocked[extent - i];
        let hat_a_size = mask_count(low);
        let below = heights.iter().filter(|&&(lo, _)| lo < hz).count();
        let hat_patched_valid = (hz < spec.height).then(|| {
            validate_cutset(lattice, &lower_patch(lattice, &sorted, hz, low), &bottom, &top)
        });

        layers.push(ScanLayer {
            i,
            height: z,
            a_set: mask_indices(up),
            a_size,
            boundary: edge_boundary_of_mask(&spec, up),
            boundary_in_cut: boundary_inside(lattice, &removed, up, z),
            above,
            const_slack: b * a_size as i64 - a * above as i64,
            patched_valid,
            hat_height: hz,
            hat_a_set: mask_indices(low),
            hat_a_size,
            hat_boundary: edge_boundary_of_mask(&spec, low),
            hat_boundary_in_cut: boundary_inside(lattice, &removed, low, hz),
            below,
            hat_const_slack: b * (layer_total - hat_a_size) as i64 - a * below as i64,
            hat_patched_valid,
        });
    }
    let t_stop = layers.iter().find(|l| threshold(l.a_size)).map(|l| l.i);
    let hat_t_stop = layers
        .iter()
        .find(|l| threshold(layer_total - l.hat_a_size))
        .map(|l| l.i);
    Ok(ChimneyScan {
        h_min,
        h_max,
        extent,
        cut_size: sorted.len(),
        layers,
        t_stop,
        hat_t_stop,
    })
}

pub fn scan_json(scan: &ChimneyScan) -> String {
    serde_json::to_string_pretty(scan).expect("scan serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::{sample_field, CapacityField, TwoPointDist};
    use crate::flow::LatticeFlow;
    use crate::lattice::CylinderSpec;
    use crate::network::Cap;

    fn lattice(d: usize, n: usize, h: usize) -> LatticeIndex {
        LatticeIndex::new(CylinderSpec::new(d, n, h).unwrap()).unwrap()
    }

    fn flat_cut(l: &LatticeIndex, j: usize) -> Vec<EdgeId> {
        l.layer(j)
            .map(|v| l.edge_between(v, v + l.layer_vertices()).unwrap())
            .collect()
    }

    #[test]
    fn validation_basics() {
        let l = lattice(2, 3, 4);
        assert!(is_bottom_top_cut(&l, &flat_cut(&l, 2)));
        assert!(!is_bottom_top_cut(&l, &[]));
        let mut partial = flat_cut(&l, 2);
        partial.pop();
        assert!(!is_bottom_top_cut(&l, &partial));
    }

    #[test]
    fn extents() {
        let l = lattice(2, 3, 5);
        assert_eq!(vertical_extent(&l, &flat_cut(&l, 2)).unwrap(), (2, 3));
        let mut two = flat_cut(&l, 1);
        two.extend(flat_cut(&l, 3));
        assert_eq!(vertical_extent(&l, &two).unwrap(), (1, 4));
        let e = l.edge_id(l.vertex_id(&[0, 2]).unwrap(), 0).unwrap();
        assert_eq!(vertical_extent(&l, &[e]).unwrap(), (2, 2));
        assert!(vertical_extent(&l, &[]).is_err());
    }

    #[test]
    fn flat_cut_scan() {
        let l = lattice(2, 3, 6);
        let field = CapacityField::constant(&l, TwoPointDist::default(), 1);
        let e = flat_cut(&l, 3);
        let scan = chimney_scan(&l, &field, &e).unwrap();
        assert_eq!((scan.h_min, scan.h_max), (3, 4));
        assert_eq!(scan.layers.len(), 1);
        assert_eq!(scan.layers[0].a_size, 4);
        assert_eq!(scan.t_stop, Some(1));
        assert!(scan.all_checks_pass());
        for i in 1..6 {
            let (ei, hat) = patched_cutsets(&l, &e, i).unwrap();
            assert!(is_bottom_top_cut(&l, &ei));
            assert!(is_bottom_top_cut(&l, &hat));
        }
        assert_eq!(patched_cutsets(&l, &e, 9).unwrap().0, {
            let mut s = e.clone();
            s.sort();
            s
        });
        assert!(chimney_scan(&l, &field, &e[..2]).is_err());
    }

    /// A bump forced by one cheap edge high in column 0: the minimum cut is
    /// the vertical at height 3 there, three horizontals, and the bottom
    /// vertical of column 1.
    fn bump_instance() -> (LatticeIndex, CapacityField) {
        let l = lattice(2, 1, 5);
        let dist = TwoPointDist::new(1, 10, 1, 2).unwrap();
        let mut caps = vec![10 as Cap; l.num_edges()];
        let v = |x: usize, z: usize| l.vertex_id(&[x, z]).unwrap();
        caps[l.edge_between(v(0, 3), v(0, 4)).unwrap()] = 1;
        caps[l.edge_between(v(1, 0), v(1, 1)).unwrap()] = 1;
        for z in 1..=4 {
            caps[l.edge_between(v(0, z), v(1, z)).unwrap()] = 1;
        }
        (l.clone(), CapacityField::from_values(&l, dist, caps).unwrap())
    }

    #[test]
    fn bump_has_boundary_below_its_top() {
        let (l, field) = bump_instance();
        let mut solver = LatticeFlow::bottom_top(&l);
        let value = solver.solve(&field.values);
        let cut = solver.canonical_cut();
        assert_eq!(value, 5);
        assert_eq!(cut.len(), 5);
        assert_eq!((cut.h_min, cut.h_max), (0, 4));
        let scan = chimney_scan(&l, &field, &cut.edges).unwrap();
        assert!(scan.all_checks_pass(), "{:?}", scan.violations());
        for layer in scan.layers.iter().filter(|l| l.height >= 1 && l.height < 4) {
            assert!(layer.boundary >= 1, "layer {}", layer.i);
            assert_eq!(layer.a_set, vec![0]);
        }
    }

    #[test]
    fn random_min_cuts_satisfy_scan_lemmas() {
        for (d, n, h) in [(2, 4, 8), (3, 2, 6), (2, 6, 10)] {
            let l = lattice(d, n, h);
            let dist = TwoPointDist::new(1, 3, 1, 2).unwrap();
            let mut solver = LatticeFlow::bottom_top(&l);
            for k in 0..40 {
                let field = sample_field(&l, dist, 99, k);
                solver.solve(&field.values);
                let cut = solver.canonical_cut();
                let scan = chimney_scan(&l, &field, &cut.edges).unwrap();
                assert!(scan.all_checks_pass(), "{:?}", scan.violations());
                for i in 1..=h {
                    let (ei, hat) = patched_cutsets(&l, &cut.edges, i).unwrap();
                    assert!(is_bottom_top_cut(&l, &ei) || i >= cut.h_max);
                    assert!(is_bottom_top_cut(&l, &hat));
                }
            }
        }
    }

    #[test]
    fn uniform_capacities_satisfy_constraint() {
        let l = lattice(2, 5, 8);
        let dist = TwoPointDist::new(1, 2, 1, 1).unwrap();
        let field = sample_field(&l, dist, 5, 0);
        let mut solver = LatticeFlow::bottom_top(&l);
        solver.solve(&field.values);
        let scan = chimney_scan(&l, &field, &solver.canonical_cut().edges).unwrap();
        assert!(scan.layers.iter().all(|l| l.const_slack >= 0));
    }

    #[test]
    fn scan_serializes() {
        let l = lattice(2, 2, 3);
        let field = CapacityField::constant(&l, TwoPointDist::default(), 2);
        let scan = chimney_scan(&l, &field, &flat_cut(&l, 0)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&scan_json(&scan)).unwrap();
        assert_eq!(v["layers"][0]["a_size"], 3);
    }
}
