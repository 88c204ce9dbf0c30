//! Fill-reducing orderings on the symmetric sparsity graph.
//!
//! Nested dissection splits each connected piece along a middle level of a
//! breadth-first level structure rooted at a pseudo-peripheral vertex,
//! orders both halves recursively and places the separator last.

/// Pieces at or below this size are ordered naturally.
const LEAF_SIZE: usize = 200;

/// `order[k]` is the original index eliminated at step `k`.
pub fn nested_dissection(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut d = Dissector {
        adj,
        member: vec![0; n],
        seen: vec![0; n],
        level: vec![0; n],
        next_id: 0,
        order: Vec::with_capacity(n),
    };
    d.dissect((0..n).collect());
    d.order
}

struct Dissector<'a> {
    adj: &'a [Vec<usize>],
    member: Vec<u32>,
    seen: Vec<u32>,
    level: Vec<usize>,
    next_id: u32,
    order: Vec<usize>,
}

impl Dissector<'_> {
    fn fresh(&mut self) -> u32 {
        self.next_id += 1;
        self.next_id
    }

    fn dissect(&mut self, mut nodes: Vec<usize>) {
        if nodes.len() <= LEAF_SIZE {
            nodes.sort_unstable();
            self.order.extend(nodes);
            return;
        }
        let set = self.fresh();
        for &v in &nodes {
            self.member[v] = set;
        }
        let components = self.components(&nodes, set);
        if components.len() > 1 {
            for c in components {
                self.dissect(c);
            }
            return;
        }
        let levels = self.peripheral_levels(nodes[0], set);
        if levels.len() < 3 {
            nodes.sort_unstable();
            self.order.extend(nodes);
            return;
        }
        let half = nodes.len() / 2;
        let mut acc = 0;
        let mut mid = 1;
        for (i, l) in levels.iter().enumerate() {
            acc += l.len();
            if acc >= half {
                mid = i;
                break;
            }
        }
        let mid = mid.clamp(1, levels.len() - 2);
        let mut below: Vec<usize> = levels[..mid].iter().flatten().copied().collect();
        let above: Vec<usize> = levels[mid + 1..].iter().flatten().copied().collect();
        let mut separator = Vec::new();
        for &v in &levels[mid] {
            let touches_above = self.adj[v]
                .iter()
                .any(|&u| self.member[u] == set && self.level[u] == mid + 1);
            if touches_above {
                separator.push(v);
            } else {
                below.push(v);
            }
        }
        self.dissect(below);
        self.dissect(above);
        separator.sort_unstable();
        self.order.extend(separator);
    }

    fn components(&mut self, nodes: &[usize], set: u32) -> Vec<Vec<usize>> {
        let visit = self.fresh();
        let mut out = Vec::new();
        for &start in nodes {
            if self.seen[start] == visit {
                continue;
            }
            self.seen[start] = visit;
            let mut comp = vec![start];
            let mut head = 0;
            while head < comp.len() {
                let v = comp[head];
                head += 1;
                for &u in &self.adj[v] {
                    if self.member[u] == set && self.seen[u] != visit {
                        self.seen[u] = visit;
                        comp.push(u);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    fn bfs_levels(&mut self, root: usize, set: u32) -> Vec<Vec<usize>> {
        let visit = self.fresh();
        self.seen[root] = visit;
        self.level[root] = 0;
        let mut levels = vec![vec![root]];
        loop {
            let mut next = Vec::new();
            let depth = levels.len();
            for &v in levels.last().unwrap() {
                for &u in &self.adj[v] {
                    if self.member[u] == set && self.seen[u] != visit {
                        self.seen[u] = visit;
                        self.level[u] = depth;
                        next.push(u);
                    }
                }
            }
            if next.is_empty() {
                return levels;
            }
            levels.push(next);
        }
    }

    fn peripheral_levels(&mut self, start: usize, set: u32) -> Vec<Vec<usize>> {
        let mut levels = self.bfs_levels(start, set);
        for _ in 0..4 {
            let candidate = *levels
                .last()
                .unwrap()
                .iter()
                .min_by_key(|&&v| (self.adj[v].len(), v))
                .unwrap();
            let trial = self.bfs_levels(candidate, set);
            if trial.len() <= levels.len() {
                // Restore level numbers of the kept structure.
                levels = self.bfs_levels(levels[0][0], set);
                break;
            }
            levels = trial;
        }
        levels
    }
}

/// Moves every node flagged in `deferred` to just after the last of its
/// non-deferred neighbours in `order`. Deferred nodes without such
/// neighbours go last.
pub fn defer_after_neighbours(order: &[usize], adj: &[Vec<usize>], deferred: &[bool]) -> Vec<usize> {
    let n = order.len();
    let mut position = vec![0usize; adj.len()];
    let mut kept = Vec::with_capacity(n);
    for &v in order {
        if !deferred[v] {
            position[v] = kept.len();
            kept.push(v);
        }
    }
    let mut after: Vec<Vec<usize>> = vec![Vec::new(); kept.len()];
    let mut orphans = Vec::new();
    for &v in order {
        if deferred[v] {
            match adj[v].iter().filter(|&&u| !deferred[u]).map(|&u| position[u]).max() {
                Some(p) => after[p].push(v),
                None => orphans.push(v),
            }
        }
    }
    let mut out = Vec::with_capacity(n);
    for (p, &v) in kept.iter().enumerate() {
        out.push(v);
        out.extend(after[p].iter().copied());
    }
    out.extend(orphans);
    out
}
