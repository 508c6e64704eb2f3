//! Cylinder lattices `[0,n]^{d-1} x [0,H]` with dense vertex and edge ids.
//!
//! Vertices are numbered row-major with `x_1` fastest and the vertical
//! coordinate `x_d` slowest. Edges are grouped by height: layer `z` holds its
//! horizontal edges (axis-major) followed by the vertical edges from `z` to
//! `z + 1`. With this layout a vertical translation by `k` layers is a constant
//! id offset, and the edges of any horizontal slab form a contiguous id range.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub type VertexId = usize;
pub type EdgeId = usize;

/// Dimensions of the closed cylinder `[0,n]^{d-1} x [0,height]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CylinderSpec {
    pub d: usize,
    pub n: usize,
    pub height: usize,
}

impl CylinderSpec {
    pub fn new(d: usize, n: usize, height: usize) -> Result<Self> {
        let spec = CylinderSpec { d, n, height };
        spec.validate()?;
        Ok(spec)
    }

    /// `n = 0` is accepted and yields a single vertical column.
    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return domain(format!("dimension d = {} must be at least 2", self.d));
        }
        if self.height < 1 {
            return domain("height must be at least 1");
        }
        Ok(())
    }

    /// `(n+1)^{d-1}`, the number of vertices in one horizontal layer.
    pub fn layer_size(&self) -> usize {
        (self.n + 1).pow((self.d - 1) as u32)
    }
}

impl std::fmt::Display for CylinderSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "d={} n={} H={}", self.d, self.n, self.height)
    }
}

/// The unit `(d-1)`-hypersquare dual to an edge. Coordinates are stored doubled
/// so that half-integers stay exact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plaquette {
    pub edge: EdgeId,
    pub normal_axis: usize,
    pub center2: Vec<i64>,
    /// Corners in Gray-code order, so consecutive corners share a side.
    pub corners2: Vec<Vec<i64>>,
}

impl Plaquette {
    pub fn center(&self) -> Vec<f64> {
        self.center2.iter().map(|&c| c as f64 / 2.0).collect()
    }

    pub fn corners(&self) -> Vec<Vec<f64>> {
        self.corners2
            .iter()
            .map(|c| c.iter().map(|&x| x as f64 / 2.0).collect())
            .collect()
    }
}

/// Vertex and edge tables of a cylinder with O(1) arithmetic neighbor lookup.
#[derive(Clone, Debug)]
pub struct LatticeIndex {
    spec: CylinderSpec,
    side: usize,
    layer_vertices: usize,
    horiz_per_axis: usize,
    layer_horiz: usize,
    block: usize,
    num_vertices: usize,
    num_edges: usize,
    endpoints: Vec<[u32; 2]>,
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

impl LatticeIndex {
    pub fn new(spec: CylinderSpec) -> Result<Self> {
        spec.validate()?;
        let too_big = || Error::Capacity(format!("lattice {spec} exceeds addressable size"));
        let side = spec.n + 1;
        let layer_vertices = checked_pow(side, spec.d - 1).ok_or_else(too_big)?;
        let horiz_per_axis = checked_pow(side, spec.d - 2)
            .and_then(|p| p.checked_mul(spec.n))
            .ok_or_else(too_big)?;
        let layer_horiz = horiz_per_axis.checked_mul(spec.d - 1).ok_or_else(too_big)?;
        let block = layer_horiz.checked_add(layer_vertices).ok_or_else(too_big)?;
        let num_vertices = layer_vertices
            .checked_mul(spec.height + 1)
            .ok_or_else(too_big)?;
        let num_edges = block
            .checked_mul(spec.height)
            .and_then(|x| x.checked_add(layer_horiz))
            .ok_or_else(too_big)?;
        // ids are stored as u32, and the flow network adds two terminal nodes
        if num_vertices + 2 > u32::MAX as usize || num_edges > (u32::MAX as usize) / 4 {
            return Err(too_big());
        }

        let mut lattice = LatticeIndex {
            spec,
            side,
            layer_vertices,
            horiz_per_axis,
            layer_horiz,
            block,
            num_vertices,
            num_edges,
            endpoints: Vec::with_capacity(num_edges),
        };
        let endpoints = (0..num_edges)
            .map(|e| {
                let (base, axis) = lattice.decode_edge(e);
                let other = base + lattice.stride(axis);
                [base as u32, other as u32]
            })
            .collect();
        lattice.endpoints = endpoints;
        Ok(lattice)
    }

    pub fn spec(&self) -> CylinderSpec {
        self.spec
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn layer_vertices(&self) -> usize {
        self.layer_vertices
    }

    /// Number of edge ids per layer (horizontal edges of the layer plus the
    /// vertical edges leaving it upwards). Translating by one layer adds this.
    pub fn layer_stride(&self) -> usize {
        self.block
    }

    pub fn horizontal_per_layer(&self) -> usize {
        self.layer_horiz
    }

    /// Id stride of a unit step along `axis` (0-based, `d-1` is vertical).
    pub fn stride(&self, axis: usize) -> usize {
        if axis + 1 == self.spec.d {
            self.layer_vertices
        } else {
            self.side.pow(axis as u32)
        }
    }

    pub fn vertex_id(&self, coords: &[usize]) -> Option<VertexId> {
        if coords.len() != self.spec.d {
            return None;
        }
        let mut id = 0;
        for (axis, &x) in coords.iter().enumerate() {
            if x > self.axis_max(axis) {
                return None;
            }
            id += x * self.stride(axis);
        }
        Some(id)
    }

    pub fn vertex_coords(&self, v: VertexId) -> Vec<usize> {
        let mut coords = Vec::with_capacity(self.spec.d);
        let mut rest = v % self.layer_vertices;
        for _ in 0..self.spec.d - 1 {
            coords.push(rest % self.side);
            rest /= self.side;
        }
        coords.push(v / self.layer_vertices);
        coords
    }

    #[inline]
    pub fn vertex_height(&self, v: VertexId) -> usize {
        v / self.layer_vertices
    }

    /// Index of the vertex within its horizontal layer.
    #[inline]
    pub fn base_index(&self, v: VertexId) -> usize {
        v % self.layer_vertices
    }

    fn axis_max(&self, axis: usize) -> usize {
        if axis + 1 == self.spec.d {
            self.spec.height
        } else {
            self.spec.n
        }
    }

    #[inline]
    pub fn coordinate(&self, v: VertexId, axis: usize) -> usize {
        if axis + 1 == self.spec.d {
            v / self.layer_vertices
        } else {
            (v / self.stride(axis)) % self.side
        }
    }

    /// Neighbor of `v` one step along `axis` in direction `up` (true: +1).
    pub fn neighbor(&self, v: VertexId, axis: usize, up: bool) -> Option<VertexId> {
        let x = self.coordinate(v, axis);
        if up {
            (x < self.axis_max(axis)).then(|| v + self.stride(axis))
        } else {
            (x > 0).then(|| v - self.stride(axis))
        }
    }

    pub fn degree(&self, v: VertexId) -> usize {
        (0..self.spec.d)
            .map(|axis| {
                usize::from(self.neighbor(v, axis, true).is_some())
                    + usize::from(self.neighbor(v, axis, false).is_some())
            })
            .sum()
    }

    /// Lower endpoint (`base`) and upper endpoint of an edge.
    #[inline]
    pub fn endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        let [u, v] = self.endpoints[e];
        (u as usize, v as usize)
    }

    pub fn edge_axis(&self, e: EdgeId) -> usize {
        let local = e % self.block;
        if local < self.layer_horiz {
            local / self.horiz_per_axis.max(1)
        } else {
            self.spec.d - 1
        }
    }

    #[inline]
    pub fn is_vertical(&self, e: EdgeId) -> bool {
        e % self.block >= self.layer_horiz
    }

    /// Height of the layer the edge belongs to (its lower endpoint).
    #[inline]
    pub fn edge_layer(&self, e: EdgeId) -> usize {
        e / self.block
    }

    fn decode_edge(&self, e: EdgeId) -> (VertexId, usize) {
        let z = e / self.block;
        let local = e % self.block;
        let layer_offset = z * self.layer_vertices;
        if local >= self.layer_horiz {
            return (layer_offset + local - self.layer_horiz, self.spec.d - 1);
        }
        let axis = local / self.horiz_per_axis;
        let mut r = local % self.horiz_per_axis;
        let mut base = 0;
        let mut stride = 1;
        for k in 0..self.spec.d - 1 {
            let radix = if k == axis { self.spec.n } else { self.side };
            base += (r % radix) * stride;
            r /= radix;
            stride *= self.side;
        }
        (layer_offset + base, axis)
    }

    /// Base vertex and 0-based axis of an edge.
    pub fn edge_base_axis(&self, e: EdgeId) -> (VertexId, usize) {
        (self.endpoints(e).0, self.edge_axis(e))
    }

    /// The edge from `base` to `base + e_axis`, if it lies inside the cylinder.
    pub fn edge_id(&self, base: VertexId, axis: usize) -> Option<EdgeId> {
        if base >= self.num_vertices || axis >= self.spec.d {
            return None;
        }
        let x = self.coordinate(base, axis);
        if x >= self.axis_max(axis) {
            return None;
        }
        let z = self.vertex_height(base);
        if axis + 1 == self.spec.d {
            return Some(z * self.block + self.layer_horiz + self.base_index(base));
        }
        let mut r = 0;
        let mut mult = 1;
        for k in 0..self.spec.d - 1 {
            let radix = if k == axis { self.spec.n } else { self.side };
            r += self.coordinate(base, k) * mult;
            mult *= radix;
        }
        Some(z * self.block + axis * self.horiz_per_axis + r)
    }

    /// Edge joining two adjacent vertices.
    pub fn edge_between(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        (0..self.spec.d).find_map(|axis| {
            if lo + self.stride(axis) == hi {
                self.edge_id(lo, axis)
            } else {
                None
            }
        })
    }

    /// All edges incident to `v`.
    pub fn incident_edges(&self, v: VertexId) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.spec.d).flat_map(move |axis| {
            let up = self.edge_id(v, axis);
            let down = self
                .neighbor(v, axis, false)
                .and_then(|w| self.edge_id(w, axis));
            up.into_iter().chain(down)
        })
    }

    /// Vertices with an extremal coordinate on some axis.
    pub fn is_boundary_vertex(&self, v: VertexId) -> bool {
        (0..self.spec.d).any(|axis| {
            let x = self.coordinate(v, axis);
            x == 0 || x == self.axis_max(axis)
        })
    }

    /// Vertices of the horizontal layer at height `z`.
    pub fn layer(&self, z: usize) -> std::ops::Range<VertexId> {
        z * self.layer_vertices..(z + 1) * self.layer_vertices
    }

    /// Edge ids with both endpoints at heights in `[lo, hi]`.
    pub fn slab_edges(&self, lo: usize, hi: usize) -> std::ops::Range<EdgeId> {
        debug_assert!(lo <= hi && hi <= self.spec.height);
        lo * self.block..hi * self.block + self.layer_horiz
    }
}

/// Bottom (`x_d = 0`) and top (`x_d = H`) vertex layers.
pub fn boundary_sets(spec: &CylinderSpec) -> (Vec<VertexId>, Vec<VertexId>) {
    let lv = spec.layer_size();
    let bottom = (0..lv).collect();
    let top = (spec.height * lv..(spec.height + 1) * lv).collect();
    (bottom, top)
}

/// Translate an edge by `k` layers; `None` when the image leaves the cylinder.
pub fn shift_edge(lattice: &LatticeIndex, e: EdgeId, k: isize) -> Option<EdgeId> {
    let block = lattice.layer_stride();
    let z = (e / block) as isize + k;
    let local = e % block;
    let h = lattice.spec().height as isize;
    let max_z = if local < lattice.horizontal_per_layer() { h } else { h - 1 };
    (0..=max_z)
        .contains(&z)
        .then(|| z as usize * block + local)
}

/// The plaquette normal to `e` through its midpoint.
pub fn dual_plaquette(lattice: &LatticeIndex, e: EdgeId) -> Plaquette {
    let (base, axis) = lattice.edge_base_axis(e);
    let d = lattice.spec().d;
    let mut center2: Vec<i64> = lattice
        .vertex_coords(base)
        .iter()
        .map(|&x| 2 * x as i64)
        .collect();
    center2[axis] += 1;
    let others: Vec<usize> = (0..d).filter(|&k| k != axis).collect();
    let corners2 = (0..1usize << others.len())
        .map(|i| {
            let gray = i ^ (i >> 1);
            let mut c = center2.clone();
            for (bit, &k) in others.iter().enumerate() {
                c[k] += if gray >> bit & 1 == 1 { 1 } else { -1 };
            }
            c
        })
        .collect();
    Plaquette {
        edge: e,
        normal_axis: axis,
        center2,
        corners2,
    }
}

/// Size of the edge boundary of a set of base points in `[0,n]^{d-1}`, given
/// as a membership mask over base indices.
pub fn edge_boundary_of_mask(spec: &CylinderSpec, mask: &[bool]) -> usize {
    let side = spec.n + 1;
    let mut count = 0;
    let mut stride = 1;
    for _ in 0..spec.d - 1 {
        for (i, &inside) in mask.iter().enumerate() {
            if (i / stride) % side < spec.n && inside != mask[i + stride] {
                count += 1;
            }
        }
        stride *= side;
    }
    count
}

/// `|ΔS|` for a set of points of `[0,n]^{d-1}` given by coordinates.
pub fn slab_edge_boundary(spec: &CylinderSpec, subset: &[Vec<usize>]) -> Result<usize> {
    let side = spec.n + 1;
    let mut mask = vec![false; spec.layer_size()];
    for p in subset {
        if p.len() != spec.d - 1 || p.iter().any(|&x| x > spec.n) {
            return domain(format!("point {p:?} not in [0,{}]^{}", spec.n, spec.d - 1));
        }
        let idx = p.iter().rev().fold(0, |acc, &x| acc * side + x);
        mask[idx] = true;
    }
    Ok(edge_boundary_of_mask(spec, &mask))
}

fn fmt_half(x2: i64) -> String {
    format!("{:.1}", x2 as f64 / 2.0)
}

/// Plaquettes as CSV: `edge,normal_axis,center,corner0,...` with each tuple a
/// space-separated list of fixed-decimal coordinates.
pub fn plaquettes_csv(lattice: &LatticeIndex, edges: &[EdgeId]) -> String {
    let d = lattice.spec().d;
    let tuple = |c: &[i64]| c.iter().map(|&x| fmt_half(x)).collect::<Vec<_>>().join(" ");
    let mut out = String::from("edge,normal_axis,center");
    for i in 0..1usize << (d - 1) {
        out.push_str(&format!(",corner{i}"));
    }
    out.push('\n');
    for &e in edges {
        let p = dual_plaquette(lattice, e);
        out.push_str(&format!("{},{},{}", e, p.normal_axis, tuple(&p.center2)));
        for c in &p.corners2 {
            out.push(',');
            out.push_str(&tuple(c));
        }
        out.push('\n');
    }
    out
}

/// Indexed-polygon text: a `PLAQ <d> <vertices> <faces>` header, one
/// coordinate line per distinct corner, then one `k i_0 .. i_{k-1}` line per
/// plaquette.
pub fn plaquettes_polygons(lattice: &LatticeIndex, edges: &[EdgeId]) -> String {
    use std::collections::BTreeMap;
    let d = lattice.spec().d;
    let mut index: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    let mut order: Vec<Vec<i64>> = Vec::new();
    let mut faces = Vec::with_capacity(edges.len());
    for &e in edges {
        let p = dual_plaquette(lattice, e);
        let face: Vec<usize> = p
            .corners2
            .into_iter()
            .map(|c| {
                *index.entry(c.clone()).or_insert_with(|| {
                    order.push(c);
                    order.len() - 1
                })
            })
            .collect();
        faces.push(face);
    }
    let mut out = format!("PLAQ {} {} {}\n", d, order.len(), faces.len());
    for c in &order {
        let line: Vec<String> = c.iter().map(|&x| fmt_half(x)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    for f in &faces {
        out.push_str(&f.len().to_string());
        for i in f {
            out.push_str(&format!(" {i}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat(d: usize, n: usize, h: usize) -> LatticeIndex {
        LatticeIndex::new(CylinderSpec::new(d, n, h).unwrap()).unwrap()
    }

    /// Naive enumeration: every vertex pair at unit distance.
    fn naive_edge_count(d: usize, n: usize, h: usize) -> usize {
        let l = lat(d, n, h);
        let mut count = 0;
        for v in 0..l.num_vertices() {
            let c = l.vertex_coords(v);
            for w in 0..l.num_vertices() {
                let c2 = l.vertex_coords(w);
                let dist: usize = c.iter().zip(&c2).map(|(a, b)| a.abs_diff(*b)).sum();
                if dist == 1 && v < w {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn counts_match_examples() {
        let l = lat(2, 1, 1);
        assert_eq!((l.num_vertices(), l.num_edges()), (4, 4));
        let l = lat(3, 2, 1);
        assert_eq!((l.num_vertices(), l.num_edges()), (18, 33));
        assert_eq!(naive_edge_count(3, 2, 1), 33);
        let l = lat(2, 3, 2);
        assert_eq!((l.num_vertices(), l.num_edges()), (12, 17));
        assert_eq!(naive_edge_count(2, 3, 2), 17);
    }

    #[test]
    fn edge_ids_are_bijective() {
        for &(d, n, h) in &[(2, 3, 4), (3, 2, 3), (4, 1, 2), (2, 0, 4)] {
            let l = lat(d, n, h);
            for e in 0..l.num_edges() {
                let (base, axis) = l.edge_base_axis(e);
                assert_eq!(l.edge_id(base, axis), Some(e));
                let (u, v) = l.endpoints(e);
                assert_eq!(v, u + l.stride(axis));
                assert_eq!(l.edge_between(v, u), Some(e));
            }
            for v in 0..l.num_vertices() {
                assert_eq!(l.vertex_id(&l.vertex_coords(v)), Some(v));
            }
        }
    }

    #[test]
    fn degree_sum_is_twice_edge_count() {
        for &(d, n, h) in &[(2, 1, 1), (2, 4, 3), (3, 2, 2), (3, 3, 1)] {
            let l = lat(d, n, h);
            let sum: usize = (0..l.num_vertices()).map(|v| l.degree(v)).sum();
            assert_eq!(sum, 2 * l.num_edges());
            let incident: usize = (0..l.num_vertices()).map(|v| l.incident_edges(v).count()).sum();
            assert_eq!(incident, 2 * l.num_edges());
        }
    }

    #[test]
    fn boundary_layers() {
        let spec = CylinderSpec::new(2, 1, 1).unwrap();
        let l = LatticeIndex::new(spec).unwrap();
        let (bottom, top) = boundary_sets(&spec);
        let coords = |s: &[usize]| s.iter().map(|&v| l.vertex_coords(v)).collect::<Vec<_>>();
        assert_eq!(coords(&bottom), vec![vec![0, 0], vec![1, 0]]);
        assert_eq!(coords(&top), vec![vec![0, 1], vec![1, 1]]);
        let (b, _) = boundary_sets(&CylinderSpec::new(3, 1, 2).unwrap());
        assert_eq!(b.len(), 4);
        let spec = CylinderSpec::new(2, 3, 5).unwrap();
        let l = LatticeIndex::new(spec).unwrap();
        let (b, _) = boundary_sets(&spec);
        assert_eq!(b.len(), 4);
        assert!(b.iter().all(|&v| l.vertex_height(v) == 0));
    }

    #[test]
    fn shifting() {
        let l = lat(2, 0, 3);
        let e = l.edge_id(l.vertex_id(&[0, 0]).unwrap(), 1).unwrap();
        let s = shift_edge(&l, e, 1).unwrap();
        assert_eq!(l.edge_base_axis(s), (l.vertex_id(&[0, 1]).unwrap(), 1));
        assert_eq!(shift_edge(&l, e, 0), Some(e));
        let top = l.edge_id(l.vertex_id(&[0, 2]).unwrap(), 1).unwrap();
        assert_eq!(shift_edge(&l, top, 1), None);
        let l = lat(3, 2, 4);
        for e in 0..l.num_edges() {
            for k in -4..=4 {
                if let Some(s) = shift_edge(&l, e, k) {
                    assert_eq!(shift_edge(&l, s, -k), Some(e));
                    let (u, _) = l.endpoints(e);
                    let (w, _) = l.endpoints(s);
                    assert_eq!(l.vertex_height(w) as isize, l.vertex_height(u) as isize + k);
                    assert_eq!(l.edge_axis(s), l.edge_axis(e));
                }
            }
        }
    }

    #[test]
    fn plaquettes() {
        let l = lat(2, 1, 1);
        let v = l.edge_id(0, 1).unwrap();
        let p = dual_plaquette(&l, v);
        assert_eq!(p.corners(), vec![vec![-0.5, 0.5], vec![0.5, 0.5]]);
        let h = l.edge_id(0, 0).unwrap();
        let p = dual_plaquette(&l, h);
        assert_eq!(p.corners(), vec![vec![0.5, -0.5], vec![0.5, 0.5]]);
        let l = lat(3, 1, 1);
        let v = l.edge_id(l.vertex_id(&[1, 1, 0]).unwrap(), 2).unwrap();
        let p = dual_plaquette(&l, v);
        assert_eq!(p.center(), vec![1.0, 1.0, 0.5]);
        assert_eq!(p.normal_axis, 2);
        assert_eq!(p.corners2.len(), 4);
        for (i, c) in p.corners2.iter().enumerate() {
            let next = &p.corners2[(i + 1) % 4];
            let diff: i64 = c.iter().zip(next).map(|(a, b)| (a - b).abs()).sum();
            assert_eq!(diff, 2, "consecutive corners share a unit side");
            assert_eq!(c[2], 1);
        }
    }

    #[test]
    fn edge_boundary_examples() {
        let spec = CylinderSpec::new(3, 2, 1).unwrap();
        assert_eq!(slab_edge_boundary(&spec, &[]).unwrap(), 0);
        let full: Vec<Vec<usize>> = (0..3).flat_map(|x| (0..3).map(move |y| vec![x, y])).collect();
        assert_eq!(slab_edge_boundary(&spec, &full).unwrap(), 0);
        assert_eq!(slab_edge_boundary(&spec, &[vec![0, 0]]).unwrap(), 2);
        assert_eq!(slab_edge_boundary(&spec, &[vec![1, 1]]).unwrap(), 4);
        assert!(slab_edge_boundary(&spec, &[vec![3, 0]]).is_err());
    }

    #[test]
    fn exports() {
        let l = lat(3, 1, 1);
        let edges: Vec<EdgeId> = (0..l.num_edges()).filter(|&e| l.is_vertical(e)).collect();
        let csv = plaquettes_csv(&l, &edges);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("edge,normal_axis,center,corner0,corner1,corner2,corner3\n"));
        let poly = plaquettes_polygons(&l, &edges);
        assert!(poly.starts_with("PLAQ 3 9 4\n"));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(CylinderSpec::new(1, 3, 3).is_err());
        assert!(CylinderSpec::new(2, 3, 0).is_err());
        let huge = CylinderSpec { d: 40, n: 100, height: 10 };
        assert!(matches!(LatticeIndex::new(huge), Err(Error::Capacity(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn boundary_is_complement_symmetric(n in 1usize..5, bits in proptest::collection::vec(any::<bool>(), 25)) {
                let spec = CylinderSpec::new(3, n.min(4), 1).unwrap();
                let mask: Vec<bool> = bits[..spec.layer_size()].to_vec();
                let comp: Vec<bool> = mask.iter().map(|b| !b).collect();
                prop_assert_eq!(edge_boundary_of_mask(&spec, &mask), edge_boundary_of_mask(&spec, &comp));
            }
        }
    }
}
