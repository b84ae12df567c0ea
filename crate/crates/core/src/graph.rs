//! Regular bipartite graphs and the set operations the polymer machinery
//! is built from: external neighbourhoods, closures, 2-linked sets and
//! codegrees.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vertex_set::VertexSet;

/// One class of the bipartition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "O")]
    Odd,
    #[serde(rename = "E")]
    Even,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Odd, Side::Even];

    pub fn other(self) -> Side {
        match self {
            Side::Odd => Side::Even,
            Side::Even => Side::Odd,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Side::Odd => "O",
            Side::Even => "E",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "O" | "o" | "odd" => Ok(Side::Odd),
            "E" | "e" | "even" => Ok(Side::Even),
            _ => Err(Error::Parse(format!("unknown side {s:?}"))),
        }
    }
}

/// Size caps for graph construction and exhaustive sweeps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Largest vertex count a builder or loader accepts.
    pub max_vertices: usize,
    /// Largest `n` for which a sweep over all `2^n` vertex subsets is allowed.
    pub max_sweep_vertices: usize,
    /// Largest edge count for a sweep over all `2^|E|` spanning subgraphs.
    pub max_sweep_edges: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_vertices: 4096,
            max_sweep_vertices: 26,
            max_sweep_edges: 24,
        }
    }
}

impl Budget {
    pub fn check_vertices(&self, n: usize) -> Result<()> {
        if n > self.max_vertices {
            return Err(Error::Budget(format!(
                "{n} vertices exceeds the cap of {}",
                self.max_vertices
            )));
        }
        Ok(())
    }

    pub fn check_sweep(&self, n: usize) -> Result<()> {
        if n > self.max_sweep_vertices || n > 63 {
            return Err(Error::Budget(format!(
                "a sweep over 2^{n} subsets exceeds the cap of 2^{}",
                self.max_sweep_vertices.min(63)
            )));
        }
        Ok(())
    }

    pub fn check_edge_sweep(&self, m: usize) -> Result<()> {
        if m > self.max_sweep_edges || m > 63 {
            return Err(Error::Budget(format!(
                "a sweep over 2^{m} spanning subgraphs exceeds the cap of 2^{}",
                self.max_sweep_edges.min(63)
            )));
        }
        Ok(())
    }
}

/// Immutable `d`-regular bipartite graph with an explicit bipartition.
///
/// Vertices are `0..n`. Side labels are stored, never recomputed, so they
/// are part of the graph's identity.
#[derive(Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    n: usize,
    d: usize,
    sides: Vec<Side>,
    odd: Vec<usize>,
    even: Vec<usize>,
    adj: Vec<Vec<usize>>,
    // distance-1 and distance-2 neighbours, sorted, excluding the vertex
    square: Vec<Vec<usize>>,
    masks: Option<Vec<u64>>,
    factor_sizes: Option<Vec<usize>>,
}

impl fmt::Debug for BipartiteGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BipartiteGraph")
            .field("n", &self.n)
            .field("d", &self.d)
            .field("factor_sizes", &self.factor_sizes)
            .finish()
    }
}

impl BipartiteGraph {
    /// Validate and build. Every invariant violation names the offending
    /// vertex or edge.
    pub fn from_edges(
        sides: Vec<Side>,
        edges: &[(usize, usize)],
        factor_sizes: Option<Vec<usize>>,
        budget: &Budget,
    ) -> Result<Self> {
        let n = sides.len();
        budget.check_vertices(n)?;
        if n == 0 {
            return Err(Error::InvalidGraph("graph has no vertices".into()));
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge [{u},{v}] has an endpoint outside 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("edge [{u},{v}] is a loop")));
            }
            if sides[u] == sides[v] {
                return Err(Error::InvalidGraph(format!(
                    "edge [{u},{v}] joins two vertices of side {}",
                    sides[u]
                )));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for (v, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::InvalidGraph(format!(
                    "edge [{},{}] appears more than once",
                    v.min(w[0]),
                    v.max(w[0])
                )));
            }
        }
        let d = adj[0].len();
        if let Some(v) = (0..n).find(|&v| adj[v].len() != d) {
            return Err(Error::InvalidGraph(format!(
                "vertex {v} has degree {} but vertex 0 has degree {d}",
                adj[v].len()
            )));
        }
        if d == 0 {
            return Err(Error::InvalidGraph("graph has no edges".into()));
        }
        let odd: Vec<usize> = (0..n).filter(|&v| sides[v] == Side::Odd).collect();
        let even: Vec<usize> = (0..n).filter(|&v| sides[v] == Side::Even).collect();
        if odd.len() != even.len() {
            return Err(Error::InvalidGraph(format!(
                "sides are unbalanced: |O| = {}, |E| = {}",
                odd.len(),
                even.len()
            )));
        }
        let square = adj
            .iter()
            .enumerate()
            .map(|(v, nbrs)| {
                let mut ball: BTreeSet<usize> = nbrs.iter().copied().collect();
                for &w in nbrs {
                    ball.extend(adj[w].iter().copied());
                }
                ball.remove(&v);
                ball.into_iter().collect()
            })
            .collect();
        let masks = (n <= 64).then(|| {
            adj.iter()
                .map(|nbrs| nbrs.iter().fold(0u64, |m, &w| m | (1 << w)))
                .collect()
        });
        Ok(BipartiteGraph {
            n,
            d,
            sides,
            odd,
            even,
            adj,
            square,
            masks,
            factor_sizes,
        })
    }

    /// The `d`-dimensional hypercube; sides split by popcount parity.
    pub fn hypercube(d: usize) -> Result<Self> {
        Self::hypercube_within(d, &Budget::default())
    }

    pub fn hypercube_within(d: usize, budget: &Budget) -> Result<Self> {
        if d == 0 {
            return Err(Error::Construction("hypercube needs d >= 1".into()));
        }
        if d > 20 {
            return Err(Error::Budget(format!("hypercube dimension {d} exceeds 20")));
        }
        let n = 1usize << d;
        budget.check_vertices(n)?;
        let sides = (0..n).map(|x| parity_side(x.count_ones() as usize)).collect();
        let mut edges = Vec::with_capacity(n * d / 2);
        for x in 0..n {
            for i in 0..d {
                let y = x ^ (1 << i);
                if x < y {
                    edges.push((x, y));
                }
            }
        }
        Self::from_edges(sides, &edges, Some(vec![2; d]), budget)
    }

    /// `Z_m^t`, the `t`-fold product of `m`-cycles.
    pub fn even_torus(m: usize, t: usize) -> Result<Self> {
        Self::even_torus_within(m, t, &Budget::default())
    }

    pub fn even_torus_within(m: usize, t: usize, budget: &Budget) -> Result<Self> {
        if m % 2 == 1 {
            return Err(Error::Construction(format!(
                "odd side length {m} does not give a bipartite torus"
            )));
        }
        if m < 4 || t == 0 {
            return Err(Error::Construction(format!(
                "torus needs even m >= 4 and t >= 1, got m = {m}, t = {t}"
            )));
        }
        let n = checked_power(m, t)
            .filter(|&n| n <= budget.max_vertices)
            .ok_or_else(|| Error::Budget(format!("{m}^{t} vertices exceeds the cap")))?;
        let coords = |x: usize| -> Vec<usize> {
            let mut c = Vec::with_capacity(t);
            let mut r = x;
            for _ in 0..t {
                c.push(r % m);
                r /= m;
            }
            c
        };
        let mut sides = Vec::with_capacity(n);
        let mut edges = Vec::new();
        for x in 0..n {
            let c = coords(x);
            sides.push(parity_side(c.iter().sum()));
            let mut stride = 1;
            for &ci in c.iter() {
                let up = x - ci * stride + ((ci + 1) % m) * stride;
                edges.push((x.min(up), x.max(up)));
                stride *= m;
            }
        }
        edges.sort_unstable();
        edges.dedup();
        Self::from_edges(sides, &edges, Some(vec![m; t]), budget)
    }

    pub fn cycle(m: usize) -> Result<Self> {
        Self::even_torus(m, 1)
    }

    /// `K_{s,s}`: vertices `0..s` on side E, `s..2s` on side O.
    pub fn complete_bipartite(s: usize) -> Result<Self> {
        Self::complete_bipartite_within(s, &Budget::default())
    }

    pub fn complete_bipartite_within(s: usize, budget: &Budget) -> Result<Self> {
        if s == 0 {
            return Err(Error::Construction("K_{s,s} needs s >= 1".into()));
        }
        budget.check_vertices(2 * s)?;
        let sides = (0..2 * s)
            .map(|v| if v < s { Side::Even } else { Side::Odd })
            .collect();
        let edges: Vec<_> = (0..s)
            .flat_map(|u| (s..2 * s).map(move |v| (u, v)))
            .collect();
        Self::from_edges(sides, &edges, Some(vec![2 * s]), budget)
    }

    /// Middle two layers of `Q^{2d-1}`; side E is the layer with `d-1` ones.
    pub fn middle_layer(d: usize) -> Result<Self> {
        Self::middle_layer_within(d, &Budget::default())
    }

    pub fn middle_layer_within(d: usize, budget: &Budget) -> Result<Self> {
        if d == 0 {
            return Err(Error::Construction("middle layer needs d >= 1".into()));
        }
        let len = 2 * d - 1;
        if len > 40 {
            return Err(Error::Budget(format!("middle layer of Q^{len} is too large")));
        }
        let layer = binomial_usize(len, d - 1);
        budget.check_vertices(layer.saturating_mul(2))?;
        let words: Vec<u64> = (0u64..1 << len)
            .filter(|w| {
                let ones = w.count_ones() as usize;
                ones == d - 1 || ones == d
            })
            .collect();
        let index = |w: u64| words.binary_search(&w).expect("word in layer");
        let sides = words
            .iter()
            .map(|w| {
                if w.count_ones() as usize == d - 1 {
                    Side::Even
                } else {
                    Side::Odd
                }
            })
            .collect();
        let mut edges = Vec::new();
        for (x, &w) in words.iter().enumerate() {
            if w.count_ones() as usize == d - 1 {
                for i in 0..len {
                    if w & (1 << i) == 0 {
                        edges.push((x, index(w | (1 << i))));
                    }
                }
            }
        }
        Self::from_edges(sides, &edges, None, budget)
    }

    /// Cartesian product of connected regular bipartite factors.
    pub fn cartesian_product(factors: &[BipartiteGraph]) -> Result<Self> {
        Self::cartesian_product_within(factors, &Budget::default())
    }

    pub fn cartesian_product_within(factors: &[BipartiteGraph], budget: &Budget) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Construction("product of zero factors".into()));
        }
        for (i, f) in factors.iter().enumerate() {
            if !f.is_connected() {
                return Err(Error::Construction(format!("factor {i} is not connected")));
            }
        }
        let n = factors
            .iter()
            .try_fold(1usize, |acc, f| acc.checked_mul(f.n))
            .filter(|&n| n <= budget.max_vertices)
            .ok_or_else(|| Error::Budget("product exceeds the vertex cap".into()))?;
        let mut sides = Vec::with_capacity(n);
        let mut edges = Vec::new();
        for x in 0..n {
            let mut r = x;
            let mut stride = 1;
            let mut odd_count = 0;
            for f in factors {
                let c = r % f.n;
                r /= f.n;
                if f.sides[c] == Side::Odd {
                    odd_count += 1;
                }
                for &c2 in &f.adj[c] {
                    if c2 > c {
                        let y = x - c * stride + c2 * stride;
                        edges.push((x, y));
                    }
                }
                stride *= f.n;
            }
            sides.push(parity_side(odd_count));
        }
        let factor_sizes = factors
            .iter()
            .flat_map(|f| f.factor_sizes.clone().unwrap_or_else(|| vec![f.n]))
            .collect();
        Self::from_edges(sides, &edges, Some(factor_sizes), budget)
    }

    /// Build from a one-line spec: `hypercube:d`, `cycle:m`, `torus:m,t`,
    /// `kss:s`, `midlayer:d` or `product:spec+spec+...`.
    pub fn from_spec(spec: &str, budget: &Budget) -> Result<Self> {
        let (kind, args) = spec
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("graph spec '{spec}' has no ':'")))?;
        let nums = || -> Result<Vec<usize>> {
            args.split(',')
                .map(|a| {
                    a.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Parse(format!("'{a}' in graph spec '{spec}' is not a count")))
                })
                .collect()
        };
        let one = || -> Result<usize> {
            match nums()?.as_slice() {
                [x] => Ok(*x),
                _ => Err(Error::Parse(format!("'{spec}' takes one argument"))),
            }
        };
        match kind {
            "hypercube" => Self::hypercube_within(one()?, budget),
            "cycle" => Self::even_torus_within(one()?, 1, budget),
            "torus" => match nums()?.as_slice() {
                [m, t] => Self::even_torus_within(*m, *t, budget),
                _ => Err(Error::Parse(format!("'{spec}' takes m,t"))),
            },
            "kss" => Self::complete_bipartite_within(one()?, budget),
            "midlayer" => Self::middle_layer_within(one()?, budget),
            "product" => {
                let factors = args
                    .split('+')
                    .map(|s| Self::from_spec(s.trim(), budget))
                    .collect::<Result<Vec<_>>>()?;
                Self::cartesian_product_within(&factors, budget)
            }
            _ => Err(Error::Parse(format!("unknown graph family '{kind}'"))),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn edge_count(&self) -> usize {
        self.n * self.d / 2
    }

    pub fn side_of(&self, v: usize) -> Side {
        self.sides[v]
    }

    pub fn side_vertices(&self, side: Side) -> &[usize] {
        match side {
            Side::Odd => &self.odd,
            Side::Even => &self.even,
        }
    }

    pub fn side_set(&self, side: Side) -> VertexSet {
        VertexSet::from_vertices(self.n, self.side_vertices(side).iter().copied())
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    /// Vertices at distance 1 or 2 from `v`.
    pub fn square_neighbors(&self, v: usize) -> &[usize] {
        &self.square[v]
    }

    /// Adjacency bitmasks, available when `n <= 64`.
    pub fn adjacency_masks(&self) -> Option<&[u64]> {
        self.masks.as_deref()
    }

    /// Sizes of the base graphs when the graph was built as a product.
    pub fn factor_sizes(&self) -> Option<&[usize]> {
        self.factor_sizes.as_deref()
    }

    /// All edges `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = (0..self.n)
            .flat_map(|u| self.adj[u].iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
            .collect();
        e.sort_unstable();
        e
    }

    pub fn empty_set(&self) -> VertexSet {
        VertexSet::empty(self.n)
    }

    pub fn set<I: IntoIterator<Item = usize>>(&self, vertices: I) -> VertexSet {
        VertexSet::from_vertices(self.n, vertices)
    }

    /// `|N(v) ∩ set|`.
    pub fn degree_into(&self, v: usize, set: &VertexSet) -> usize {
        self.adj[v].iter().filter(|&&w| set.contains(w)).count()
    }

    /// Number of edges with both endpoints in `set`.
    pub fn edges_within(&self, set: &VertexSet) -> usize {
        set.iter().map(|v| self.degree_into(v, set)).sum::<usize>() / 2
    }

    /// External neighbourhood `N(X)`: vertices outside `X` adjacent to `X`.
    pub fn neighborhood(&self, x: &VertexSet) -> VertexSet {
        let mut out = self.empty_set();
        for v in x.iter() {
            for &w in &self.adj[v] {
                if !x.contains(w) {
                    out.insert(w);
                }
            }
        }
        out
    }

    /// The side a nonempty set lies on, or `None` for the empty set.
    pub fn side_of_set(&self, a: &VertexSet) -> Result<Option<Side>> {
        let mut it = a.iter();
        let Some(first) = it.next() else {
            return Ok(None);
        };
        let side = self.sides[first];
        if let Some(v) = it.find(|&v| self.sides[v] != side) {
            return Err(Error::SideMismatch(format!(
                "vertex {first} is on {side} but vertex {v} is on {}",
                side.other()
            )));
        }
        Ok(Some(side))
    }

    /// Closure `[A] = {v ∈ D : N(v) ⊆ N(A)}` for `A ⊆ D`. The empty set
    /// closes to the empty set.
    pub fn closure(&self, a: &VertexSet, side: Side) -> Result<VertexSet> {
        if let Some(s) = self.side_of_set(a)? {
            if s != side {
                return Err(Error::SideMismatch(format!(
                    "set lies on {s}, closure requested on {side}"
                )));
            }
        }
        let nbhd = self.neighborhood(a);
        let mut out = self.empty_set();
        if a.is_empty() {
            return Ok(out);
        }
        // Every closure vertex shares a neighbour with A.
        for u in nbhd.iter() {
            for &v in &self.adj[u] {
                if !out.contains(v) && self.adj[v].iter().all(|&w| nbhd.contains(w)) {
                    out.insert(v);
                }
            }
        }
        Ok(out)
    }

    /// Whether `A` is connected in the square of the graph.
    pub fn is_two_linked(&self, a: &VertexSet) -> Result<bool> {
        let Some(start) = a.first() else {
            return Err(Error::Precondition("2-linkedness of the empty set".into()));
        };
        let mut seen = self.empty_set();
        seen.insert(start);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in &self.square[v] {
                if a.contains(w) && seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        Ok(seen.len() == a.len())
    }

    /// Maximal 2-linked components of `a`, each sorted, ordered by minimum vertex.
    pub fn two_linked_components(&self, a: &VertexSet) -> Vec<VertexSet> {
        let mut left = a.clone();
        let mut comps = Vec::new();
        while let Some(start) = left.first() {
            let mut comp = self.empty_set();
            comp.insert(start);
            left.remove(start);
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &w in &self.square[v] {
                    if left.remove(w) {
                        comp.insert(w);
                        queue.push_back(w);
                    }
                }
            }
            comps.push(comp);
        }
        comps
    }

    /// Every 2-linked set of size at most `max_size` containing `v`, each
    /// once, in lexicographic order.
    pub fn enumerate_two_linked(&self, v: usize, max_size: usize) -> Result<Vec<VertexSet>> {
        if max_size == 0 {
            return Err(Error::Precondition("max_size must be >= 1".into()));
        }
        if v >= self.n {
            return Err(Error::Precondition(format!("vertex {v} outside 0..{}", self.n)));
        }
        let mut out = Vec::new();
        self.for_each_connected(v, max_size, &|_| true, &mut |s| {
            out.push(self.set(s.iter().copied()))
        });
        out.sort();
        Ok(out)
    }

    /// Every 2-linked subset of `side` with at most `max_size` vertices,
    /// each once, in lexicographic order.
    pub fn two_linked_subsets_of_side(&self, side: Side, max_size: usize) -> Vec<VertexSet> {
        let mut out = Vec::new();
        for &root in self.side_vertices(side) {
            self.for_each_connected(
                root,
                max_size,
                &|u| self.sides[u] == side && u > root,
                &mut |s| out.push(self.set(s.iter().copied())),
            );
        }
        out.sort();
        out
    }

    /// Enumerates the connected sets of the square graph that contain
    /// `root`, avoid vertices rejected by `allowed`, and have at most
    /// `max_size` vertices. Each set is visited exactly once (ESU scheme with
    /// `root` playing the role of the minimum label).
    pub fn for_each_connected(
        &self,
        root: usize,
        max_size: usize,
        allowed: &dyn Fn(usize) -> bool,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if max_size == 0 {
            return;
        }
        let mut blocked = vec![0u32; self.n];
        let mut sub = Vec::with_capacity(max_size);
        let ext: Vec<usize> = self.square[root]
            .iter()
            .copied()
            .filter(|&u| u != root && allowed(u))
            .collect();
        self.block(root, &mut blocked, 1);
        sub.push(root);
        self.extend(&mut sub, ext, max_size, allowed, &mut blocked, visit);
    }

    fn block(&self, w: usize, blocked: &mut [u32], delta: i32) {
        let apply = |b: &mut u32| *b = (*b as i32 + delta) as u32;
        apply(&mut blocked[w]);
        for &u in &self.square[w] {
            apply(&mut blocked[u]);
        }
    }

    fn extend(
        &self,
        sub: &mut Vec<usize>,
        mut ext: Vec<usize>,
        max_size: usize,
        allowed: &dyn Fn(usize) -> bool,
        blocked: &mut [u32],
        visit: &mut dyn FnMut(&[usize]),
    ) {
        visit(sub);
        if sub.len() == max_size {
            return;
        }
        while let Some(w) = ext.pop() {
            let mut next = ext.clone();
            next.extend(
                self.square[w]
                    .iter()
                    .copied()
                    .filter(|&u| blocked[u] == 0 && allowed(u)),
            );
            self.block(w, blocked, 1);
            sub.push(w);
            self.extend(sub, next, max_size, allowed, blocked, visit);
            sub.pop();
            self.block(w, blocked, -1);
        }
    }

    pub fn codegree(&self, u: usize, v: usize) -> Result<usize> {
        if u == v {
            return Err(Error::Precondition(format!("codegree of {u} with itself")));
        }
        Ok(sorted_intersection_len(&self.adj[u], &self.adj[v]))
    }

    /// Maximum codegree over distinct pairs; pairs at distance > 2 have
    /// codegree 0 and are skipped.
    pub fn max_codegree(&self) -> usize {
        (0..self.n)
            .flat_map(|u| {
                self.square[u]
                    .iter()
                    .filter(move |&&v| v > u)
                    .map(move |&v| sorted_intersection_len(&self.adj[u], &self.adj[v]))
            })
            .max()
            .unwrap_or(0)
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        seen[0] = true;
        let mut stack = vec![0];
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            n: self.n,
            d: self.d,
            side_o: self.odd.clone(),
            side_e: self.even.clone(),
            edges: self.edges().into_iter().map(|(u, v)| [u, v]).collect(),
            factor_sizes: self.factor_sizes.clone(),
        }
    }

    pub fn from_file(file: &GraphFile, budget: &Budget) -> Result<Self> {
        budget.check_vertices(file.n)?;
        let mut sides: Vec<Option<Side>> = vec![None; file.n];
        for (list, side) in [(&file.side_o, Side::Odd), (&file.side_e, Side::Even)] {
            for &v in list {
                if v >= file.n {
                    return Err(Error::InvalidGraph(format!(
                        "vertex {v} on side {side} is outside 0..{}",
                        file.n
                    )));
                }
                if sides[v].replace(side).is_some() {
                    return Err(Error::InvalidGraph(format!("vertex {v} is listed twice")));
                }
            }
        }
        let sides = sides
            .into_iter()
            .enumerate()
            .map(|(v, s)| s.ok_or_else(|| Error::InvalidGraph(format!("vertex {v} has no side"))))
            .collect::<Result<Vec<_>>>()?;
        let edges: Vec<_> = file.edges.iter().map(|e| (e[0], e[1])).collect();
        let g = Self::from_edges(sides, &edges, file.factor_sizes.clone(), budget)?;
        if g.d != file.d {
            return Err(Error::InvalidGraph(format!(
                "declared degree {} but the edges give {}",
                file.d, g.d
            )));
        }
        Ok(g)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("graph serializes")
    }

    pub fn from_json(text: &str, budget: &Budget) -> Result<Self> {
        let file: GraphFile = serde_json::from_str(text)?;
        Self::from_file(&file, budget)
    }
}

/// On-disk graph record. Lists are sorted; edges are `[u, v]` with `u < v`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub d: usize,
    #[serde(rename = "side_O")]
    pub side_o: Vec<usize>,
    #[serde(rename = "side_E")]
    pub side_e: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor_sizes: Option<Vec<usize>>,
}

/// Brute-force isomorphism test for graphs with at most 12 vertices.
/// Side labels are ignored.
pub fn isomorphic_brute(a: &BipartiteGraph, b: &BipartiteGraph) -> Result<bool> {
    if a.n > 12 || b.n > 12 {
        return Err(Error::Budget("brute-force isomorphism is limited to 12 vertices".into()));
    }
    if a.n != b.n || a.d != b.d {
        return Ok(false);
    }
    fn extend(a: &BipartiteGraph, b: &BipartiteGraph, map: &mut Vec<usize>, used: &mut [bool]) -> bool {
        let i = map.len();
        if i == a.n {
            return true;
        }
        for j in 0..b.n {
            if used[j] {
                continue;
            }
            let consistent = (0..i).all(|k| {
                a.adj[i].binary_search(&k).is_ok() == b.adj[j].binary_search(&map[k]).is_ok()
            });
            if consistent {
                used[j] = true;
                map.push(j);
                if extend(a, b, map, used) {
                    return true;
                }
                map.pop();
                used[j] = false;
            }
        }
        false
    }
    Ok(extend(a, b, &mut Vec::new(), &mut vec![false; b.n]))
}

fn parity_side(k: usize) -> Side {
    if k.is_multiple_of(2) {
        Side::Even
    } else {
        Side::Odd
    }
}

fn checked_power(base: usize, exp: usize) -> Option<usize> {
    (0..exp).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

fn binomial_usize(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

fn sorted_intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}
