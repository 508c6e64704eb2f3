//! Residual network with paired arcs and Dinic augmentation.
//!
//! Arc `2k` and `2k+1` form pair `k` and are each other's reverse. Adjacency
//! is stored in compressed rows so a network can be reloaded with new
//! capacities without reallocation.

use std::collections::VecDeque;

pub type Cap = i64;

/// Capacity treated as unbounded. Sums of a few of these still fit in `i64`.
pub const INF_CAP: Cap = i64::MAX / 4;

const UNSEEN: u32 = u32::MAX;

#[derive(Default)]
pub struct NetworkBuilder {
    nodes: usize,
    ends: Vec<(u32, u32)>,
    caps: Vec<(Cap, Cap)>,
}

impl NetworkBuilder {
    pub fn new(nodes: usize) -> Self {
        NetworkBuilder { nodes, ..Default::default() }
    }

    /// Adds arcs `u -> v` (capacity `fwd`) and `v -> u` (capacity `bwd`) and
    /// returns the pair index.
    pub fn add_pair(&mut self, u: usize, v: usize, fwd: Cap, bwd: Cap) -> usize {
        debug_assert!(u < self.nodes && v < self.nodes);
        self.ends.push((u as u32, v as u32));
        self.caps.push((fwd, bwd));
        self.ends.len() - 1
    }

    pub fn build(self) -> Network {
        let n = self.nodes;
        let m = self.ends.len();
        let mut head = vec![0u32; 2 * m];
        let mut cap = vec![0; 2 * m];
        let mut deg = vec![0u32; n + 1];
        for (k, &(u, v)) in self.ends.iter().enumerate() {
            head[2 * k] = v;
            head[2 * k + 1] = u;
            cap[2 * k] = self.caps[k].0;
            cap[2 * k + 1] = self.caps[k].1;
            deg[u as usize + 1] += 1;
            deg[v as usize + 1] += 1;
        }
        for i in 0..n {
            deg[i + 1] += deg[i];
        }
        let start = deg.clone();
        let mut fill = deg;
        let mut adj = vec![0u32; 2 * m];
        for (k, &(u, v)) in self.ends.iter().enumerate() {
            adj[fill[u as usize] as usize] = (2 * k) as u32;
            fill[u as usize] += 1;
            adj[fill[v as usize] as usize] = (2 * k + 1) as u32;
            fill[v as usize] += 1;
        }
        Network {
            n,
            start,
            adj,
            head,
            res: cap.clone(),
            cap,
            level: vec![UNSEEN; n],
            cursor: vec![0; n],
            queue: Vec::with_capacity(n),
            path: Vec::new(),
            parent: vec![UNSEEN; n],
        }
    }
}

#[derive(Clone)]
pub struct Network {
    n: usize,
    start: Vec<u32>,
    adj: Vec<u32>,
    head: Vec<u32>,
    cap: Vec<Cap>,
    res: Vec<Cap>,
    level: Vec<u32>,
    cursor: Vec<u32>,
    queue: Vec<u32>,
    path: Vec<u32>,
    parent: Vec<u32>,
}

impl Network {
    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn num_pairs(&self) -> usize {
        self.head.len() / 2
    }

    #[inline]
    fn tail(&self, a: usize) -> usize {
        self.head[a ^ 1] as usize
    }

    #[inline]
    fn arcs(&self, u: usize) -> &[u32] {
        &self.adj[self.start[u] as usize..self.start[u + 1] as usize]
    }

    /// Sets the capacities of pair `k`; call [`Network::reset_flow`] afterwards
    /// unless the pair carried no flow.
    pub fn set_pair(&mut self, k: usize, fwd: Cap, bwd: Cap) {
        self.cap[2 * k] = fwd;
        self.cap[2 * k + 1] = bwd;
    }

    pub fn pair_capacity(&self, k: usize) -> (Cap, Cap) {
        (self.cap[2 * k], self.cap[2 * k + 1])
    }

    pub fn reset_flow(&mut self) {
        self.res.copy_from_slice(&self.cap);
    }

    /// Net flow along pair `k` in its forward direction.
    #[inline]
    pub fn flow(&self, k: usize) -> Cap {
        self.cap[2 * k] - self.res[2 * k]
    }

    pub fn residual(&self) -> &[Cap] {
        &self.res
    }

    pub fn restore_residual(&mut self, saved: &[Cap]) {
        self.res.copy_from_slice(saved);
    }

    fn bfs_levels(&mut self, s: usize, t: usize) -> bool {
        self.level.fill(UNSEEN);
        self.queue.clear();
        self.level[s] = 0;
        self.queue.push(s as u32);
        let mut qi = 0;
        while qi < self.queue.len() {
            let u = self.queue[qi] as usize;
            qi += 1;
            if u == t {
                continue;
            }
            let lu = self.level[u];
            for i in self.start[u] as usize..self.start[u + 1] as usize {
                let a = self.adj[i] as usize;
                let v = self.head[a] as usize;
                if self.res[a] > 0 && self.level[v] == UNSEEN {
                    self.level[v] = lu + 1;
                    self.queue.push(v as u32);
                }
            }
        }
        self.level[t] != UNSEEN
    }

    fn blocking_flow(&mut self, s: usize, t: usize) -> Cap {
        for u in 0..self.n {
            self.cursor[u] = self.start[u];
        }
        let mut total = 0;
        self.path.clear();
        let mut u = s;
        loop {
            if u == t {
                let push = self
                    .path
                    .iter()
                    .map(|&a| self.res[a as usize])
                    .min()
                    .unwrap_or(0);
                let mut cut_at = None;
                for (i, &a) in self.path.iter().enumerate() {
                    let a = a as usize;
                    self.res[a] -= push;
                    self.res[a ^ 1] += push;
                    if self.res[a] == 0 && cut_at.is_none() {
                        cut_at = Some(i);
                    }
                }
                total += push;
                let k = cut_at.unwrap_or(0);
                self.path.truncate(k);
                u = match self.path.last() {
                    Some(&a) => self.head[a as usize] as usize,
                    None => s,
                };
                continue;
            }
            let end = self.start[u + 1];
            let mut advanced = false;
            while self.cursor[u] < end {
                let a = self.adj[self.cursor[u] as usize] as usize;
                let v = self.head[a] as usize;
                if self.res[a] > 0 && self.level[v] == self.level[u] + 1 {
                    self.path.push(a as u32);
                    u = v;
                    advanced = true;
                    break;
                }
                self.cursor[u] += 1;
            }
            if advanced {
                continue;
            }
            self.level[u] = UNSEEN;
            match self.path.pop() {
                None => break,
                Some(a) => {
                    u = self.tail(a as usize);
                    self.cursor[u] += 1;
                }
            }
        }
        total
    }

    /// Augments from the current flow to a maximum `s -> t` flow and returns
    /// the additional value.
    pub fn augment(&mut self, s: usize, t: usize) -> Cap {
        let mut total = 0;
        while self.bfs_levels(s, t) {
            total += self.blocking_flow(s, t);
        }
        total
    }

    /// Shortest-path augmentation of at most `limit` units from `from` to `to`,
    /// never passing through `avoid`.
    fn augment_limited(&mut self, from: usize, to: usize, limit: Cap, avoid: &[usize]) -> Cap {
        let mut moved = 0;
        let mut queue = VecDeque::new();
        while moved < limit {
            self.parent.fill(UNSEEN);
            queue.clear();
            queue.push_back(from);
            self.parent[from] = u32::MAX - 1;
            let mut found = false;
            while let Some(u) = queue.pop_front() {
                if u == to {
                    found = true;
                    break;
                }
                for i in self.start[u] as usize..self.start[u + 1] as usize {
                    let a = self.adj[i] as usize;
                    let v = self.head[a] as usize;
                    if self.res[a] > 0
                        && self.parent[v] == UNSEEN
                        && (v == to || !avoid.contains(&v))
                    {
                        self.parent[v] = a as u32;
                        queue.push_back(v);
                    }
                }
            }
            if !found {
                break;
            }
            let mut push = limit - moved;
            let mut v = to;
            while v != from {
                let a = self.parent[v] as usize;
                push = push.min(self.res[a]);
                v = self.tail(a);
            }
            let mut v = to;
            while v != from {
                let a = self.parent[v] as usize;
                self.res[a] -= push;
                self.res[a ^ 1] += push;
                v = self.tail(a);
            }
            moved += push;
        }
        moved
    }

    /// Changes both arcs of pair `k` to capacity `c` and repairs a maximum
    /// `s -> t` flow of value `value`, returning the new value.
    pub fn set_undirected_capacity(&mut self, k: usize, c: Cap, s: usize, t: usize, value: Cap) -> Cap {
        let f = self.flow(k);
        let (fwd, bwd) = (2 * k, 2 * k + 1);
        let old = self.cap[fwd];
        self.cap[fwd] = c;
        self.cap[bwd] = c;
        if f.abs() <= c {
            self.res[fwd] = c - f;
            self.res[bwd] = c + f;
            return if c > old { value + self.augment(s, t) } else { value };
        }
        let clamped = f.signum() * c;
        self.res[fwd] = c - clamped;
        self.res[bwd] = c + clamped;
        let (x, y) = if f > 0 {
            (self.tail(fwd), self.head[fwd] as usize)
        } else {
            (self.head[fwd] as usize, self.tail(fwd))
        };
        let mut surplus = f.abs() - c;
        surplus -= self.augment_limited(x, y, surplus, &[s, t]);
        if surplus > 0 {
            let back = self.augment_limited(x, s, surplus, &[t]);
            let fwd_back = self.augment_limited(t, y, surplus, &[s]);
            if back != surplus || fwd_back != surplus {
                self.reset_flow();
                return self.augment(s, t);
            }
        }
        value - surplus + self.augment(s, t)
    }

    /// Nodes reachable from `s` in the residual graph.
    pub fn reachable_from(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(u) = stack.pop() {
            for &a in self.arcs(u) {
                let a = a as usize;
                let v = self.head[a] as usize;
                if self.res[a] > 0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Nodes from which `t` is reachable in the residual graph.
    pub fn reaching(&self, t: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut stack = vec![t];
        seen[t] = true;
        while let Some(u) = stack.pop() {
            for &a in self.arcs(u) {
                let a = a as usize;
                let w = self.head[a] as usize;
                if self.res[a ^ 1] > 0 && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn undirected(n: usize, edges: &[(usize, usize, Cap)]) -> Network {
        let mut b = NetworkBuilder::new(n);
        for &(u, v, c) in edges {
            b.add_pair(u, v, c, c);
        }
        b.build()
    }

    fn brute_min_cut(n: usize, edges: &[(usize, usize, Cap)], s: usize, t: usize) -> Cap {
        let mut best = Cap::MAX;
        for mask in 0u32..(1 << n) {
            if mask & (1 << s) == 0 || mask & (1 << t) != 0 {
                continue;
            }
            let c: Cap = edges
                .iter()
                .filter(|&&(u, v, _)| ((mask >> u) & 1) != ((mask >> v) & 1))
                .map(|e| e.2)
                .sum();
            best = best.min(c);
        }
        best
    }

    #[test]
    fn small_diamond() {
        let edges = [(0, 1, 3), (0, 2, 2), (1, 2, 1), (1, 3, 2), (2, 3, 3)];
        let mut net = undirected(4, &edges);
        assert_eq!(net.augment(0, 3), 5);
        assert_eq!(net.augment(0, 3), 0);
        let r = net.reachable_from(0);
        assert!(r[0] && !r[3]);
    }

    fn graph() -> impl Strategy<Value = (usize, Vec<(usize, usize, Cap)>)> {
        (3usize..8).prop_flat_map(|n| {
            let e = (0..n, 0..n, 0i64..6).prop_filter("loop", |(u, v, _)| u != v);
            (Just(n), prop::collection::vec(e, 1..16))
        })
    }

    proptest! {
        #[test]
        fn dinic_matches_brute_force((n, edges) in graph()) {
            let mut net = undirected(n, &edges);
            prop_assert_eq!(net.augment(0, n - 1), brute_min_cut(n, &edges, 0, n - 1));
        }

        #[test]
        fn incremental_update_matches_recompute(
            (n, edges) in graph(),
            pick in any::<prop::sample::Index>(),
            c in 0i64..6,
        ) {
            let mut net = undirected(n, &edges);
            let v0 = net.augment(0, n - 1);
            let k = pick.index(edges.len());
            let got = net.set_undirected_capacity(k, c, 0, n - 1, v0);
            let mut changed = edges.clone();
            changed[k].2 = c;
            prop_assert_eq!(got, brute_min_cut(n, &changed, 0, n - 1));
            for j in 0..net.num_pairs() {
                prop_assert!(net.flow(j).abs() <= changed[j].2);
            }
            prop_assert_eq!(net.augment(0, n - 1), 0);
        }
    }
}
