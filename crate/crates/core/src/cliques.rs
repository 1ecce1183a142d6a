//! Maximal-clique enumeration over small compatibility graphs.
//!
//! Index curves maximize an orbit-segment count over all sets whose
//! dynamical diameter stays below delta; such sets are exactly the cliques
//! of the pairwise companion graph. Nets are small (at most a few hundred
//! vertices), so exact Bron-Kerbosch with pivoting is fine.

/// Adjacency as a dense symmetric bit matrix.
pub struct Adjacency {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl Adjacency {
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64);
        Adjacency {
            n,
            words,
            bits: vec![0; n * words],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn connect(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        self.bits[a * self.words + b / 64] |= 1 << (b % 64);
        self.bits[b * self.words + a / 64] |= 1 << (a % 64);
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.bits[a * self.words + b / 64] >> (b % 64) & 1 == 1
    }

    fn row(&self, a: usize) -> &[u64] {
        &self.bits[a * self.words..(a + 1) * self.words]
    }

    pub fn degree(&self, a: usize) -> usize {
        self.row(a).iter().map(|w| w.count_ones() as usize).sum()
    }
}

struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    fn full(n: usize) -> Self {
        let mut words = vec![u64::MAX; n.div_ceil(64)];
        let rem = n % 64;
        if rem != 0 {
            *words.last_mut().unwrap() = (1u64 << rem) - 1;
        }
        BitSet { words }
    }

    fn empty(n: usize) -> Self {
        BitSet {
            words: vec![0; n.div_ceil(64)],
        }
    }

    fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn remove(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }

    fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    fn is_clear(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn intersect_row(&self, row: &[u64]) -> BitSet {
        BitSet {
            words: self.words.iter().zip(row).map(|(a, b)| a & b).collect(),
        }
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            let mut out = Vec::new();
            while w != 0 {
                let b = w.trailing_zeros() as usize;
                out.push(wi * 64 + b);
                w &= w - 1;
            }
            out
        })
    }
}

/// Visit every maximal clique. Vertices are visited in canonical order so
/// the enumeration is deterministic.
pub fn for_each_maximal_clique<F: FnMut(&[usize])>(adj: &Adjacency, mut visit: F) {
    let n = adj.len();
    if n == 0 {
        return;
    }
    let mut r = Vec::new();
    let p = BitSet::full(n);
    let x = BitSet::empty(n);
    bron_kerbosch(adj, &mut r, p, x, &mut visit);
}

fn bron_kerbosch<F: FnMut(&[usize])>(
    adj: &Adjacency,
    r: &mut Vec<usize>,
    p: BitSet,
    x: BitSet,
    visit: &mut F,
) {
    if p.is_clear() && x.is_clear() {
        visit(r);
        return;
    }
    // Pivot on the vertex of P u X with the most neighbours in P.
    let pivot = p
        .iter()
        .chain(x.iter())
        .max_by_key(|&u| (p.intersect_row(adj.row(u)).count(), usize::MAX - u))
        .unwrap();
    let pivot_row = adj.row(pivot);
    let candidates: Vec<usize> = p
        .iter()
        .filter(|&v| pivot_row[v / 64] >> (v % 64) & 1 == 0)
        .collect();
    let mut p = p;
    let mut x = x;
    for v in candidates {
        if !p.contains(v) {
            continue;
        }
        r.push(v);
        let np = p.intersect_row(adj.row(v));
        let nx = x.intersect_row(adj.row(v));
        bron_kerbosch(adj, r, np, nx, visit);
        r.pop();
        p.remove(v);
        x.insert(v);
    }
}

/// Maximize `score` over all maximal cliques; returns the best clique and
/// its score. Ties resolve to the lexicographically smallest vertex list.
pub fn best_clique<S: Fn(&[usize]) -> usize>(adj: &Adjacency, score: S) -> (Vec<usize>, usize) {
    let mut best: Vec<usize> = Vec::new();
    let mut best_score = 0usize;
    for_each_maximal_clique(adj, |clique| {
        let s = score(clique);
        let mut sorted = clique.to_vec();
        sorted.sort_unstable();
        if s > best_score || (s == best_score && (best.is_empty() || sorted < best)) {
            best_score = s;
            best = sorted;
        }
    });
    (best, best_score)
}

/// Exact maximum independent set of a small conflict graph, given as an
/// adjacency closure over `n` vertices. Branches on the highest-degree
/// vertex per connected component; components here are orbit clusters and
/// stay tiny.
pub fn max_independent_set<A: Fn(usize, usize) -> bool>(n: usize, conflict: A) -> Vec<usize> {
    let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); n];
    for a in 0..n {
        for b in (a + 1)..n {
            if conflict(a, b) {
                neighbours[a].push(b);
                neighbours[b].push(a);
            }
        }
    }
    // Split into connected components and solve each exactly.
    let mut seen = vec![false; n];
    let mut result = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut component = Vec::new();
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            component.push(v);
            for &w in &neighbours[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        component.sort_unstable();
        result.extend(mis_component(&component, &neighbours));
    }
    result.sort_unstable();
    result
}

fn mis_component(active: &[usize], neighbours: &[Vec<usize>]) -> Vec<usize> {
    // Strip vertices of degree <= 1 first: they are always safe to take.
    if active.is_empty() {
        return Vec::new();
    }
    let degree = |v: usize, act: &[usize]| {
        neighbours[v].iter().filter(|w| act.contains(w)).count()
    };
    if let Some(&v) = active.iter().find(|&&v| degree(v, active) <= 1) {
        let rest: Vec<usize> = active
            .iter()
            .copied()
            .filter(|&w| w != v && !neighbours[v].contains(&w))
            .collect();
        let mut best = mis_component(&rest, neighbours);
        best.push(v);
        return best;
    }
    // Branch on the highest-degree vertex: exclude it or take it.
    let v = *active
        .iter()
        .max_by_key(|&&v| (degree(v, active), usize::MAX - v))
        .unwrap();
    let without: Vec<usize> = active.iter().copied().filter(|&w| w != v).collect();
    let excluded = mis_component(&without, neighbours);
    let rest: Vec<usize> = active
        .iter()
        .copied()
        .filter(|&w| w != v && !neighbours[v].contains(&w))
        .collect();
    let mut included = mis_component(&rest, neighbours);
    included.push(v);
    if included.len() >= excluded.len() {
        included
    } else {
        excluded
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_cliques_brute(adj: &Adjacency) -> Vec<Vec<usize>> {
        // Every subset that is a clique and cannot be extended.
        let n = adj.len();
        let mut maximal = Vec::new();
        for mask in 1u32..(1 << n) {
            let members: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            let is_clique = members
                .iter()
                .enumerate()
                .all(|(i, &a)| members[i + 1..].iter().all(|&b| adj.adjacent(a, b)));
            if !is_clique {
                continue;
            }
            let extendable = (0..n).any(|v| {
                !members.contains(&v) && members.iter().all(|&m| adj.adjacent(v, m))
            });
            if !extendable {
                maximal.push(members);
            }
        }
        maximal.sort();
        maximal
    }

    #[test]
    fn matches_brute_force_on_random_graphs() {
        // xorshift for reproducibility without pulling rand into unit tests
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for n in [1usize, 2, 5, 9, 12] {
            for _ in 0..20 {
                let mut adj = Adjacency::new(n);
                for a in 0..n {
                    for b in (a + 1)..n {
                        if next() % 100 < 45 {
                            adj.connect(a, b);
                        }
                    }
                }
                let mut found = Vec::new();
                for_each_maximal_clique(&adj, |c| {
                    let mut c = c.to_vec();
                    c.sort_unstable();
                    found.push(c);
                });
                found.sort();
                assert_eq!(found, all_cliques_brute(&adj));
            }
        }
    }

    #[test]
    fn mis_matches_brute_force() {
        let mut state = 0x853c49e6748fea9bu64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for n in [1usize, 4, 8, 11] {
            for _ in 0..20 {
                let mut edges = vec![vec![false; n]; n];
                for a in 0..n {
                    for b in (a + 1)..n {
                        if next() % 100 < 40 {
                            edges[a][b] = true;
                            edges[b][a] = true;
                        }
                    }
                }
                let got = max_independent_set(n, |a, b| edges[a][b]).len();
                let mut best = 0;
                for mask in 0u32..(1 << n) {
                    let members: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
                    let ok = members.iter().enumerate().all(|(i, &a)| {
                        members[i + 1..].iter().all(|&b| !edges[a][b])
                    });
                    if ok {
                        best = best.max(members.len());
                    }
                }
                assert_eq!(got, best);
            }
        }
    }

    #[test]
    fn best_clique_by_size() {
        let mut adj = Adjacency::new(5);
        // triangle 0-1-2 plus edge 3-4
        adj.connect(0, 1);
        adj.connect(1, 2);
        adj.connect(0, 2);
        adj.connect(3, 4);
        let (clique, score) = best_clique(&adj, |c| c.len());
        assert_eq!(clique, vec![0, 1, 2]);
        assert_eq!(score, 3);
    }
}
