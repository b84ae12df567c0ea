//! Exact Ising and hard-core weights, partition functions, the percolation
//! identity, the measures μ, μ̂ and μ̂*, and a seeded Monte Carlo estimator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{self, int, pow, Rational, Real};
use crate::graph::{BipartiteGraph, Budget, Side};
use crate::polymer::{self, PolymerSystem};
use crate::vertex_set::VertexSet;

/// Fugacity `λ` and percolation probability `p`, with `e^{-β} = 1 - p`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ModelParams {
    #[serde(with = "crate::exact::serde_rational")]
    lambda: Rational,
    #[serde(with = "crate::exact::serde_rational")]
    p: Rational,
}

impl ModelParams {
    pub fn new(lambda: Rational, p: Rational) -> Result<Self> {
        if lambda <= Rational::ZERO {
            return Err(Error::Domain(format!(
                "lambda must be positive, got {}",
                exact::format_rational(&lambda)
            )));
        }
        if p < Rational::ZERO || p > Rational::ONE {
            return Err(Error::Domain(format!(
                "p must lie in [0, 1], got {}",
                exact::format_rational(&p)
            )));
        }
        Ok(ModelParams { lambda, p })
    }

    /// Parse both values from `"n/d"` strings.
    pub fn parse(lambda: &str, p: &str) -> Result<Self> {
        Self::new(exact::parse_rational(lambda)?, exact::parse_rational(p)?)
    }

    pub fn hard_core(lambda: Rational) -> Result<Self> {
        Self::new(lambda, Rational::ONE)
    }

    pub fn lambda(&self) -> &Rational {
        &self.lambda
    }

    pub fn p(&self) -> &Rational {
        &self.p
    }

    /// `e^{-β} = 1 - p`.
    pub fn one_minus_p(&self) -> Rational {
        Rational::ONE - &self.p
    }

    pub fn is_hard_core(&self) -> bool {
        self.p == Rational::ONE
    }

    /// `α = λp`.
    pub fn alpha(&self) -> Rational {
        &self.lambda * &self.p
    }

    /// `α̃ = (1+λ)/(1+λ(1-p))`.
    pub fn alpha_tilde(&self) -> Rational {
        (Rational::ONE + &self.lambda) / (Rational::ONE + &self.lambda * self.one_minus_p())
    }

    /// `q = λ/(1+λ)`.
    pub fn q(&self) -> Rational {
        &self.lambda / (Rational::ONE + &self.lambda)
    }

    /// `ᾱ = log α̃`.
    pub fn alpha_bar(&self) -> Real {
        exact::ln_rational(&self.alpha_tilde()).expect("alpha_tilde is positive")
    }

    /// `β = -log(1-p)`; `None` in the hard-core case.
    pub fn beta(&self) -> Option<Real> {
        if self.is_hard_core() {
            None
        } else {
            Some(-exact::ln_rational(&self.one_minus_p()).expect("1 - p is positive"))
        }
    }

    /// `C_* = min{1/2, 1 - C5/2}`.
    pub fn c_star(c5: &Rational) -> Rational {
        let other = Rational::ONE - c5 / int(2);
        let half = exact::ratio(1, 2);
        if other < half {
            other
        } else {
            half
        }
    }

    pub(crate) fn lambda_powers(&self, max: usize) -> Vec<Rational> {
        powers(&self.lambda, max)
    }

    pub(crate) fn edge_factor_powers(&self, max: usize) -> Vec<Rational> {
        powers(&self.one_minus_p(), max)
    }
}

fn powers(base: &Rational, max: usize) -> Vec<Rational> {
    let mut out = Vec::with_capacity(max + 1);
    let mut cur = Rational::ONE;
    for _ in 0..=max {
        out.push(cur.clone());
        cur = &cur * base;
    }
    out
}

/// `λ^{|I|}(1-p)^{|E(I)|}`.
pub fn ising_weight(g: &BipartiteGraph, params: &ModelParams, i: &VertexSet) -> Rational {
    pow(params.lambda(), i.len()) * pow(&params.one_minus_p(), g.edges_within(i))
}

fn masks(g: &BipartiteGraph) -> Result<&[u64]> {
    g.adjacency_masks()
        .ok_or_else(|| Error::Budget(format!("{} vertices is too many for a subset sweep", g.n())))
}

/// `hist[k][e]` = number of vertex subsets with `k` vertices and `e` internal edges.
pub fn subset_histogram(g: &BipartiteGraph, budget: &Budget) -> Result<Vec<Vec<u64>>> {
    budget.check_sweep(g.n())?;
    let adj = masks(g)?;
    let n = g.n();
    let max_e = g.edge_count();
    let split = n.min(8);

    fn dfs(adj: &[u64], v: usize, n: usize, chosen: u64, k: usize, e: usize, hist: &mut [Vec<u64>]) {
        if v == n {
            hist[k][e] += 1;
            return;
        }
        dfs(adj, v + 1, n, chosen, k, e, hist);
        let added = (adj[v] & chosen).count_ones() as usize;
        dfs(adj, v + 1, n, chosen | (1 << v), k + 1, e + added, hist);
    }

    let empty = || vec![vec![0u64; max_e + 1]; n + 1];
    let hist = (0u64..1 << split)
        .into_par_iter()
        .fold(empty, |mut hist, prefix| {
            let k = prefix.count_ones() as usize;
            let e = (0..split)
                .filter(|&v| prefix & (1 << v) != 0)
                .map(|v| (adj[v] & prefix).count_ones() as usize)
                .sum::<usize>()
                / 2;
            dfs(adj, split, n, prefix, k, e, &mut hist);
            hist
        })
        .reduce(empty, |mut a, b| {
            for (ra, rb) in a.iter_mut().zip(b) {
                for (x, y) in ra.iter_mut().zip(rb) {
                    *x += y;
                }
            }
            a
        });
    Ok(hist)
}

/// `Z_G(λ, β) = Σ_I λ^{|I|}(1-p)^{|E(I)|}`, by a full subset sweep.
pub fn exact_z(g: &BipartiteGraph, params: &ModelParams, budget: &Budget) -> Result<Rational> {
    let hist = subset_histogram(g, budget)?;
    let lam = params.lambda_powers(g.n());
    let edge = params.edge_factor_powers(g.edge_count());
    let mut z = Rational::ZERO;
    for (k, row) in hist.iter().enumerate() {
        for (e, &count) in row.iter().enumerate() {
            if count > 0 {
                z += Rational::from(count) * &lam[k] * &edge[e];
            }
        }
    }
    Ok(z)
}

/// Coefficients of the independence polynomial of the graph given by
/// adjacency masks; `out[k]` counts independent sets of size `k`.
fn independence_polynomial(adj: &[u64]) -> Vec<u64> {
    fn go(adj: &[u64], avail: u64, size: usize, out: &mut [u64]) {
        if avail == 0 {
            out[size] += 1;
            return;
        }
        let v = avail.trailing_zeros() as usize;
        let rest = avail & !(1 << v);
        go(adj, rest, size, out);
        go(adj, rest & !adj[v], size + 1, out);
    }
    let n = adj.len();
    let mut out = vec![0; n + 1];
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    go(adj, all, 0, &mut out);
    out
}

/// `i(G)` by independent-set backtracking.
pub fn count_independent_sets(g: &BipartiteGraph, budget: &Budget) -> Result<u128> {
    budget.check_sweep(g.n())?;
    let poly = independence_polynomial(masks(g)?);
    Ok(poly.iter().map(|&c| c as u128).sum())
}

/// `E[Z_{G_p}(λ)]` as an explicit sum over every spanning subgraph.
pub fn percolation_expectation_exact(
    g: &BipartiteGraph,
    params: &ModelParams,
    budget: &Budget,
) -> Result<Rational> {
    let edges = g.edges();
    let m = edges.len();
    budget.check_edge_sweep(m)?;
    let n = g.n();
    if n > 64 {
        return Err(Error::Budget(format!("{n} vertices is too many for a subgraph sweep")));
    }
    let empty = || vec![vec![0u64; n + 1]; m + 1];
    // table[s][k]: pairs (S, I) with |S| = s, |I| = k, I independent in (V, S)
    let table = (0u64..1 << m)
        .into_par_iter()
        .fold(empty, |mut table, subset| {
            let mut adj = vec![0u64; n];
            for (j, &(u, v)) in edges.iter().enumerate() {
                if subset & (1 << j) != 0 {
                    adj[u] |= 1 << v;
                    adj[v] |= 1 << u;
                }
            }
            let row = &mut table[subset.count_ones() as usize];
            for (k, c) in independence_polynomial(&adj).into_iter().enumerate() {
                row[k] += c;
            }
            table
        })
        .reduce(empty, |mut a, b| {
            for (ra, rb) in a.iter_mut().zip(b) {
                for (x, y) in ra.iter_mut().zip(rb) {
                    *x += y;
                }
            }
            a
        });
    let lam = params.lambda_powers(n);
    let keep = powers(params.p(), m);
    let drop = params.edge_factor_powers(m);
    let mut total = Rational::ZERO;
    for (s, row) in table.iter().enumerate() {
        let z_s = exact::sum(
            row.iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(k, &c)| Rational::from(c) * &lam[k]),
        );
        total += z_s * &keep[s] * &drop[m - s];
    }
    Ok(total)
}

/// Monte Carlo estimate of `E[Z_{G_p}(λ)]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Standard error of the mean; zero for a single sample.
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Bernoulli draw with rational success probability.
struct Coin {
    num: u64,
    den: u64,
}

impl Coin {
    fn new(prob: &Rational) -> Result<Self> {
        let num = u64::try_from(prob.numerator().clone());
        let den = u64::try_from(prob.denominator().clone());
        match (num, den) {
            (Ok(num), Ok(den)) => Ok(Coin { num, den }),
            _ => Err(Error::Domain(format!(
                "probability {} has a denominator beyond 64 bits",
                exact::format_rational(prob)
            ))),
        }
    }

    fn flip<R: Rng>(&self, rng: &mut R) -> bool {
        rng.gen_range(0..self.den) < self.num
    }
}

/// Generator for sample `k` of a run seeded with `seed`.
pub fn substream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

/// Seeded estimate of `E[Z_{G_p}(λ)]`. Sample `k` draws its percolated
/// graph from substream `(seed, k)`, so the result does not depend on the
/// number of threads.
pub fn percolation_mc(
    g: &BipartiteGraph,
    params: &ModelParams,
    samples: u64,
    seed: u64,
    budget: &Budget,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::Precondition("samples must be >= 1".into()));
    }
    budget.check_sweep(g.n())?;
    masks(g)?;
    let n = g.n();
    let edges = g.edges();
    let coin = Coin::new(params.p())?;
    let lambda = exact::rational_to_f64(params.lambda());
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(seed, k);
            let mut adj = vec![0u64; n];
            for &(u, v) in &edges {
                if coin.flip(&mut rng) {
                    adj[u] |= 1 << v;
                    adj[v] |= 1 << u;
                }
            }
            independence_polynomial(&adj)
                .iter()
                .rev()
                .fold(0.0, |acc, &c| acc * lambda + c as f64)
        })
        .collect();
    let count = samples as f64;
    let mean = values.iter().sum::<f64>() / count;
    let stderr = if samples > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
        (var / count).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        stderr,
        samples,
        seed,
    })
}

/// Whether `rho` is an admissible polymer cutoff, i.e. lies in `(1/2, 1)`.
pub fn check_rho(rho: &Rational) -> Result<()> {
    if *rho <= exact::ratio(1, 2) || *rho >= Rational::ONE {
        return Err(Error::Domain(format!(
            "rho must lie in (1/2, 1), got {}",
            exact::format_rational(rho)
        )));
    }
    Ok(())
}

/// The default cutoff 3/4.
pub fn default_rho() -> Rational {
    exact::ratio(3, 4)
}

/// `|closure| ≤ rho·side_len`.
pub fn within_cutoff(closure_len: usize, side_len: usize, rho: &Rational) -> bool {
    Rational::from(closure_len) <= rho * Rational::from(side_len)
}

/// `I` is captured on `side` when every maximal 2-linked component of
/// `I ∩ side` has closure of size at most `rho·|side|`.
pub fn captured(g: &BipartiteGraph, i: &VertexSet, side: Side, rho: &Rational) -> bool {
    let part = i.intersection(&g.side_set(side));
    let side_len = g.n() / 2;
    g.two_linked_components(&part).iter().all(|a| {
        let closure = g.closure(a, side).expect("component lies on one side");
        within_cutoff(closure.len(), side_len, rho)
    })
}

/// Side holding fewer vertices of `I`; ties go to O.
pub fn minority_side(g: &BipartiteGraph, i: &VertexSet) -> Side {
    let odd = i.iter().filter(|&v| g.side_of(v) == Side::Odd).count();
    if odd <= i.len() - odd {
        Side::Odd
    } else {
        Side::Even
    }
}

fn for_each_subset(g: &BipartiteGraph, budget: &Budget, mut f: impl FnMut(VertexSet)) -> Result<()> {
    budget.check_sweep(g.n())?;
    for mask in 0u64..1 << g.n() {
        f(VertexSet::from_mask(g.n(), mask));
    }
    Ok(())
}

/// The four sums that tie `Z` to `Ẑ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Decomposition {
    #[serde(with = "crate::exact::serde_rational")]
    pub z: Rational,
    /// `Σ_I (1_O(I) + 1_E(I)) ω̃(I)`.
    #[serde(with = "crate::exact::serde_rational")]
    pub z_hat: Rational,
    /// `Σ ω̃` over sets captured on both sides.
    #[serde(with = "crate::exact::serde_rational")]
    pub both: Rational,
    /// `Σ ω̃` over sets captured on neither side.
    #[serde(with = "crate::exact::serde_rational")]
    pub neither: Rational,
}

impl Decomposition {
    /// Whether `Z = Ẑ − both + neither`.
    pub fn identity_holds(&self) -> bool {
        self.z == &self.z_hat - &self.both + &self.neither
    }
}

pub fn decomposition(
    g: &BipartiteGraph,
    params: &ModelParams,
    rho: &Rational,
    budget: &Budget,
) -> Result<Decomposition> {
    check_rho(rho)?;
    let mut out = Decomposition {
        z: Rational::ZERO,
        z_hat: Rational::ZERO,
        both: Rational::ZERO,
        neither: Rational::ZERO,
    };
    for_each_subset(g, budget, |i| {
        let w = ising_weight(g, params, &i);
        if w == Rational::ZERO {
            return;
        }
        let o = captured(g, &i, Side::Odd, rho);
        let e = captured(g, &i, Side::Even, rho);
        out.z += &w;
        match (o, e) {
            (true, true) => {
                out.z_hat += &w * int(2);
                out.both += w;
            }
            (false, false) => out.neither += w,
            _ => out.z_hat += w,
        }
    })?;
    Ok(out)
}

/// Every `I` captured on neither side.
pub fn nonpolymer_family(g: &BipartiteGraph, rho: &Rational, budget: &Budget) -> Result<Vec<VertexSet>> {
    check_rho(rho)?;
    let mut out = Vec::new();
    for_each_subset(g, budget, |i| {
        if !captured(g, &i, Side::Odd, rho) && !captured(g, &i, Side::Even, rho) {
            out.push(i);
        }
    })?;
    out.sort();
    Ok(out)
}

/// Finite probability table with an exact normalizer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasureTable<K> {
    entries: Vec<(K, Rational)>,
    normalizer: Rational,
}

impl<K: Ord + Clone> MeasureTable<K> {
    /// Normalize nonnegative weights. Keys must be distinct.
    pub fn from_weights(mut weights: Vec<(K, Rational)>) -> Result<Self> {
        if weights.iter().any(|(_, w)| *w < Rational::ZERO) {
            return Err(Error::Domain("negative weight in measure table".into()));
        }
        weights.sort_by(|a, b| a.0.cmp(&b.0));
        if weights.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Precondition("duplicate outcome in measure table".into()));
        }
        let normalizer = exact::sum(weights.iter().map(|(_, w)| w.clone()));
        if normalizer == Rational::ZERO {
            return Err(Error::Domain("measure table has zero total weight".into()));
        }
        let entries = weights
            .into_iter()
            .map(|(k, w)| (k, w / &normalizer))
            .collect();
        Ok(MeasureTable { entries, normalizer })
    }

    /// Empirical distribution of `draws` over the outcome space of `space`.
    pub fn empirical<I: IntoIterator<Item = K>>(space: &MeasureTable<K>, draws: I) -> Result<Self> {
        let mut counts = vec![0u64; space.entries.len()];
        for k in draws {
            let idx = space
                .entries
                .binary_search_by(|(key, _)| key.cmp(&k))
                .map_err(|_| Error::Precondition("draw outside the outcome space".into()))?;
            counts[idx] += 1;
        }
        Self::from_weights(
            space
                .entries
                .iter()
                .zip(counts)
                .map(|((k, _), c)| (k.clone(), Rational::from(c)))
                .collect(),
        )
    }

    pub fn entries(&self) -> &[(K, Rational)] {
        &self.entries
    }

    pub fn normalizer(&self) -> &Rational {
        &self.normalizer
    }

    pub fn probability(&self, key: &K) -> Option<&Rational> {
        self.entries
            .binary_search_by(|(k, _)| k.cmp(key))
            .ok()
            .map(|i| &self.entries[i].1)
    }

    pub fn total(&self) -> Rational {
        exact::sum(self.entries.iter().map(|(_, p)| p.clone()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `(1/2)·Σ|a − b|` over a common outcome space.
pub fn tv_distance<K: Ord + Clone>(a: &MeasureTable<K>, b: &MeasureTable<K>) -> Result<Rational> {
    if a.entries.len() != b.entries.len() || a.entries.iter().zip(&b.entries).any(|(x, y)| x.0 != y.0) {
        return Err(Error::Precondition("measure tables have different outcome spaces".into()));
    }
    let sum = exact::sum(a.entries.iter().zip(&b.entries).map(|((_, x), (_, y))| {
        let diff = x - y;
        if diff < Rational::ZERO {
            -diff
        } else {
            diff
        }
    }));
    Ok(sum / int(2))
}

/// μ over all vertex subsets.
pub fn mu_table(g: &BipartiteGraph, params: &ModelParams, budget: &Budget) -> Result<MeasureTable<VertexSet>> {
    let mut weights = Vec::new();
    for_each_subset(g, budget, |i| {
        let w = ising_weight(g, params, &i);
        weights.push((i, w));
    })?;
    MeasureTable::from_weights(weights)
}

/// μ̂* over pairs `(I, D)`.
pub fn mu_hat_star_table(
    g: &BipartiteGraph,
    params: &ModelParams,
    rho: &Rational,
    budget: &Budget,
) -> Result<MeasureTable<(VertexSet, Side)>> {
    check_rho(rho)?;
    let mut weights = Vec::new();
    for_each_subset(g, budget, |i| {
        let w = ising_weight(g, params, &i);
        for side in Side::BOTH {
            let ws = if captured(g, &i, side, rho) {
                w.clone()
            } else {
                Rational::ZERO
            };
            weights.push(((i.clone(), side), ws));
        }
    })?;
    MeasureTable::from_weights(weights)
}

/// μ̂, the marginal of μ̂* on `I`. Sets captured on both sides carry both weights.
pub fn mu_hat_table(
    g: &BipartiteGraph,
    params: &ModelParams,
    rho: &Rational,
    budget: &Budget,
) -> Result<MeasureTable<VertexSet>> {
    check_rho(rho)?;
    let mut weights = Vec::new();
    for_each_subset(g, budget, |i| {
        let w = ising_weight(g, params, &i);
        let times = Side::BOTH
            .iter()
            .filter(|&&side| captured(g, &i, side, rho))
            .count();
        weights.push((i, w * Rational::from(times)));
    })?;
    MeasureTable::from_weights(weights)
}

struct SideSampler {
    side: Side,
    system: PolymerSystem,
    configs: Vec<Vec<usize>>,
    cdf: Vec<f64>,
}

/// Exact sampler for μ̂*: choose `D` proportionally to `Ξ_D`, a compatible
/// polymer configuration proportionally to its weight, each boundary vertex
/// with its decoration probability, and every other vertex of the opposite
/// side with probability `q`.
pub struct MuHatSampler<'g> {
    graph: &'g BipartiteGraph,
    params: ModelParams,
    prob_odd: f64,
    sides: [SideSampler; 2],
}

impl<'g> MuHatSampler<'g> {
    pub fn new(g: &'g BipartiteGraph, params: &ModelParams, rho: &Rational, budget: &Budget) -> Result<Self> {
        check_rho(rho)?;
        let mut xis = Vec::new();
        let mut sides = Vec::new();
        for side in Side::BOTH {
            let system = PolymerSystem::build(g, side, params, rho, g.n() / 2, budget)?;
            let configs = system.configurations(polymer::CONFIGURATION_CAP)?;
            let xi = exact::sum(configs.iter().map(|(_, w)| w.clone()));
            let mut acc = Rational::ZERO;
            let cdf = configs
                .iter()
                .map(|(_, w)| {
                    acc += w;
                    exact::rational_to_f64(&(&acc / &xi))
                })
                .collect();
            xis.push(xi);
            sides.push(SideSampler {
                side,
                system,
                configs: configs.into_iter().map(|(c, _)| c).collect(),
                cdf,
            });
        }
        let prob_odd = exact::rational_to_f64(&(&xis[0] / (&xis[0] + &xis[1])));
        let sides: [SideSampler; 2] = sides.try_into().ok().expect("two sides");
        Ok(MuHatSampler {
            graph: g,
            params: params.clone(),
            prob_odd,
            sides,
        })
    }

    /// Draw number `k` of the run seeded with `seed`.
    pub fn sample(&self, seed: u64, k: u64) -> (VertexSet, Side) {
        let mut rng = substream(seed, k);
        let g = self.graph;
        let s = if rng.gen::<f64>() < self.prob_odd {
            &self.sides[0]
        } else {
            &self.sides[1]
        };
        let u: f64 = rng.gen();
        let idx = s.cdf.partition_point(|&c| c <= u).min(s.cdf.len() - 1);
        let mut i = g.empty_set();
        let mut boundary = g.empty_set();
        let lambda = exact::rational_to_f64(self.params.lambda());
        let keep = exact::rational_to_f64(&self.params.one_minus_p());
        for &a in &s.configs[idx] {
            let poly = &s.system.polymers()[a];
            for v in poly.vertices.iter() {
                i.insert(v);
            }
            for v in poly.boundary.iter() {
                boundary.insert(v);
                let w = lambda * keep.powi(g.degree_into(v, &poly.vertices) as i32);
                if rng.gen::<f64>() < w / (1.0 + w) {
                    i.insert(v);
                }
            }
        }
        let q = lambda / (1.0 + lambda);
        for &v in g.side_vertices(s.side.other()) {
            if !boundary.contains(v) && rng.gen::<f64>() < q {
                i.insert(v);
            }
        }
        (i, s.side)
    }

    /// Draws `0..count` of a seeded run, in order.
    pub fn sample_many(&self, seed: u64, count: u64) -> Vec<(VertexSet, Side)> {
        (0..count)
            .into_par_iter()
            .map(|k| self.sample(seed, k))
            .collect()
    }
}
