//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use polyexp_core::exact::{self, int, pow};
use polyexp_core::polymer::{self, Polymer};
use polyexp_core::{BipartiteGraph, ModelParams, Rational, Side, SmallGraph, VertexSet};

/// Ursell function by the connected-graph recurrence
/// `c(S) = [S independent] − Σ_{min S ∈ T ⊊ S} c(T)·[S∖T independent]`.
pub fn ursell_recurrence(h: &SmallGraph) -> Rational {
    let n = h.n;
    let full = (1u32 << n) - 1;
    let independent = |s: u32| h.edges.iter().all(|&(a, b)| s & (1 << a) == 0 || s & (1 << b) == 0);
    let mut c = vec![0i64; 1 << n];
    for s in 1..=full {
        let low = s & s.wrapping_neg();
        let mut value = i64::from(independent(s));
        let mut t = (s - 1) & s;
        while t > 0 {
            if t & low != 0 && independent(s & !t) {
                value -= c[t as usize];
            }
            t = (t - 1) & s;
        }
        c[s as usize] = value;
    }
    let fact = exact::product((1..=n as i64).map(int));
    Rational::from(c[full as usize]) / fact
}

/// Independent sets of a graph on at most 64 vertices by plain backtracking.
pub fn count_independent_backtracking(g: &BipartiteGraph) -> u128 {
    fn go(g: &BipartiteGraph, v: usize, blocked: &mut Vec<u32>) -> u128 {
        if v == g.n() {
            return 1;
        }
        let mut total = go(g, v + 1, blocked);
        if blocked[v] == 0 {
            for &w in g.neighbors(v) {
                blocked[w] += 1;
            }
            total += go(g, v + 1, blocked);
            for &w in g.neighbors(v) {
                blocked[w] -= 1;
            }
        }
        total
    }
    go(g, 0, &mut vec![0; g.n()])
}

pub fn all_subsets(g: &BipartiteGraph) -> impl Iterator<Item = VertexSet> + '_ {
    (0u64..1 << g.n()).map(move |m| VertexSet::from_mask(g.n(), m))
}

/// `λ^{|I|}(1-p)^{|E(I)|}` from the edge list.
pub fn weight(g: &BipartiteGraph, params: &ModelParams, i: &VertexSet) -> Rational {
    let inside = g.edges().iter().filter(|&&(u, v)| i.contains(u) && i.contains(v)).count();
    pow(params.lambda(), i.len()) * pow(&params.one_minus_p(), inside)
}

/// Closure of `a ⊆ side` straight from the definition.
pub fn closure(g: &BipartiteGraph, side: Side, a: &VertexSet) -> Vec<usize> {
    let nbhd: Vec<usize> = a.iter().flat_map(|v| g.neighbors(v).to_vec()).collect();
    g.side_vertices(side)
        .iter()
        .copied()
        .filter(|&u| !a.is_empty() && g.neighbors(u).iter().all(|w| nbhd.contains(w)))
        .collect()
}

/// Components of `a` under "distance at most 2" adjacency.
pub fn components(g: &BipartiteGraph, a: &VertexSet) -> Vec<Vec<usize>> {
    let verts = a.to_vec();
    let near = |u: usize, v: usize| {
        g.neighbors(u).contains(&v) || g.neighbors(u).iter().any(|w| g.neighbors(v).contains(w))
    };
    let mut seen = vec![false; verts.len()];
    let mut out = Vec::new();
    for s in 0..verts.len() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![verts[s]];
        let mut stack = vec![s];
        while let Some(i) = stack.pop() {
            for j in 0..verts.len() {
                if !seen[j] && near(verts[i], verts[j]) {
                    seen[j] = true;
                    comp.push(verts[j]);
                    stack.push(j);
                }
            }
        }
        out.push(comp);
    }
    out
}

pub fn captured(g: &BipartiteGraph, i: &VertexSet, side: Side, rho: &Rational) -> bool {
    let part = g.set(i.iter().filter(|&v| g.side_of(v) == side));
    let cap = rho * Rational::from(g.n() / 2);
    components(g, &part)
        .into_iter()
        .all(|c| Rational::from(closure(g, side, &g.set(c)).len()) <= cap)
}

/// `d_TV(μ, μ̂)` with both measures rebuilt from their definitions.
pub fn tv_mu_mu_hat(g: &BipartiteGraph, params: &ModelParams, rho: &Rational) -> Rational {
    let mut mu = Vec::new();
    let mut hat = Vec::new();
    for i in all_subsets(g) {
        let w = weight(g, params, &i);
        let times = Side::BOTH.iter().filter(|&&s| captured(g, &i, s, rho)).count();
        hat.push(&w * Rational::from(times));
        mu.push(w);
    }
    let z = exact::sum(mu.iter().cloned());
    let z_hat = exact::sum(hat.iter().cloned());
    let diffs = mu.iter().zip(&hat).map(|(a, b)| {
        let d = a / &z - b / &z_hat;
        if d < Rational::ZERO {
            -d
        } else {
            d
        }
    });
    exact::sum(diffs) / int(2)
}

/// Coefficients of `Ξ(z)` from pairwise-compatible polymer collections.
pub fn xi_coefficients(g: &BipartiteGraph, polymers: &[Polymer], params: &ModelParams, k_max: usize) -> Vec<Rational> {
    let weights: Vec<Rational> = polymers.iter().map(|p| polymer::polymer_weight(g, params, p)).collect();
    let compatible: Vec<Vec<bool>> = polymers
        .iter()
        .map(|a| polymers.iter().map(|b| polymer::compatible(g, a, b).unwrap()).collect())
        .collect();
    let mut coeffs = vec![Rational::ZERO; k_max + 1];
    fn go(
        start: usize,
        size: usize,
        w: Rational,
        chosen: &mut Vec<usize>,
        polymers: &[Polymer],
        weights: &[Rational],
        compatible: &[Vec<bool>],
        coeffs: &mut [Rational],
    ) {
        coeffs[size] += &w;
        for j in start..polymers.len() {
            let s = size + polymers[j].len();
            if s < coeffs.len() && chosen.iter().all(|&i| compatible[i][j]) {
                chosen.push(j);
                go(j + 1, s, &w * &weights[j], chosen, polymers, weights, compatible, coeffs);
                chosen.pop();
            }
        }
    }
    go(0, 0, Rational::ONE, &mut Vec::new(), polymers, &weights, &compatible, &mut coeffs);
    coeffs
}

/// `[z^k] log Ξ(z)` via `F_k = Ξ_k − (1/k) Σ_{j<k} j F_j Ξ_{k−j}`, with `Ξ_0 = 1`.
pub fn log_series(xi: &[Rational]) -> Vec<Rational> {
    let mut f = vec![Rational::ZERO; xi.len()];
    for k in 1..xi.len() {
        let mut acc = xi[k].clone();
        for j in 1..k {
            acc -= Rational::from(j) * &f[j] * &xi[k - j] / Rational::from(k);
        }
        f[k] = acc;
    }
    f
}

/// `L_k` for `k ≤ k_max` from the logarithm of the truncated partition function.
pub fn l_terms_from_log(
    g: &BipartiteGraph,
    side: Side,
    params: &ModelParams,
    rho: &Rational,
    k_max: usize,
) -> Vec<Rational> {
    let polymers = polymer::enumerate_polymers(g, side, rho, k_max).unwrap();
    log_series(&xi_coefficients(g, &polymers, params, k_max))
}

/// Empirical distribution of draws as a map from outcome to count.
pub fn histogram<K: Ord + Clone>(draws: &[K]) -> BTreeMap<K, u64> {
    let mut out = BTreeMap::new();
    for d in draws {
        *out.entry(d.clone()).or_insert(0) += 1;
    }
    out
}
