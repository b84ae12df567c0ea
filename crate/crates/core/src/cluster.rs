//! Ursell functions, cluster enumeration, the terms `L_{D,k}`, truncation
//! reports against `log Ξ`, and the Kotecký–Preiss condition.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::audit::PropertyConstants;
use crate::error::{Error, Result};
use crate::exact::{self, int, pow, Rational, Real};
use crate::graph::{BipartiteGraph, Budget, Side};
use crate::model::ModelParams;
use crate::polymer::{Polymer, PolymerSystem};

/// Largest graph accepted by [`ursell`].
pub const URSELL_MAX_VERTICES: usize = 8;

/// Small simple graph on vertices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SmallGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl SmallGraph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut clean = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u >= n || v >= n || u == v {
                return Err(Error::Precondition(format!("bad edge ({u}, {v}) on {n} vertices")));
            }
            clean.push((u.min(v), u.max(v)));
        }
        clean.sort_unstable();
        clean.dedup();
        Ok(SmallGraph { n, edges: clean })
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        SmallGraph { n, edges }
    }

    pub fn path(n: usize) -> Self {
        SmallGraph {
            n,
            edges: (1..n).map(|v| (v - 1, v)).collect(),
        }
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || spans(self.n, self.edges.iter().copied())
    }
}

fn spans(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = n;
    for (u, v) in edges {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a] = b;
            components -= 1;
        }
    }
    components == 1
}

/// `φ(H) = (1/|V|!) Σ (-1)^{|E|}` over connected spanning edge subsets `E`.
pub fn ursell(h: &SmallGraph) -> Result<Rational> {
    if h.n == 0 || h.n > URSELL_MAX_VERTICES {
        return Err(Error::Budget(format!(
            "Ursell function needs 1..={URSELL_MAX_VERTICES} vertices, got {}",
            h.n
        )));
    }
    if !h.is_connected() {
        return Ok(Rational::ZERO);
    }
    let m = h.edges.len();
    let mut total: i64 = 0;
    for mask in 0u64..1 << m {
        let chosen = h
            .edges
            .iter()
            .enumerate()
            .filter(|(j, _)| mask & (1 << j) != 0)
            .map(|(_, &e)| e);
        if spans(h.n, chosen) {
            total += if mask.count_ones() % 2 == 0 { 1 } else { -1 };
        }
    }
    Ok(Rational::from(total) / factorial(h.n))
}

fn factorial(n: usize) -> Rational {
    exact::product((1..=n as i64).map(int))
}

/// A multiset of polymers whose expanded incompatibility graph is connected.
#[derive(Clone, Debug)]
pub struct Cluster {
    /// Distinct polymers with multiplicities, ordered by polymer index.
    pub entries: Vec<(Polymer, usize)>,
    /// `‖Γ‖ = Σ multiplicity·|A|`.
    pub size: usize,
    /// Incompatibility graph on the expanded tuple.
    pub incompatibility: SmallGraph,
    pub ursell: Rational,
    /// Number of ordered tuples represented, `k!/Π mult!`.
    pub orderings: u64,
    /// Total weight of the represented tuples: `orderings·φ·Π ω(A)^mult`.
    pub weight: Rational,
}

/// Every cluster with `‖Γ‖ ≤ k_max` built from polymers of `system`.
pub fn enumerate_clusters(system: &PolymerSystem, k_max: usize) -> Result<Vec<Cluster>> {
    if k_max > URSELL_MAX_VERTICES {
        return Err(Error::Budget(format!(
            "k_max = {k_max} exceeds the Ursell cap of {URSELL_MAX_VERTICES}"
        )));
    }
    let eligible: Vec<usize> = (0..system.len())
        .filter(|&i| system.polymers()[i].len() <= k_max)
        .collect();
    let supports: Vec<Vec<usize>> = eligible
        .par_iter()
        .flat_map_iter(|&root| connected_supports(system, root, k_max))
        .collect();
    let mut cache: HashMap<SmallGraph, Rational> = HashMap::new();
    let mut out = Vec::new();
    for support in supports {
        let sizes: Vec<usize> = support.iter().map(|&i| system.polymers()[i].len()).collect();
        let mut mults = vec![1usize; support.len()];
        let base: usize = sizes.iter().sum();
        if base > k_max {
            continue;
        }
        for_each_multiplicity(&sizes, &mut mults, 0, base, k_max, &mut |mults, size| {
            let cluster = build_cluster(system, &support, mults, size, &mut cache)?;
            out.push(cluster);
            Ok(())
        })?;
    }
    Ok(out)
}

/// Connected sets of the polymer incompatibility graph containing `root`
/// whose other members have larger indices and whose total size is at most
/// `k_max`.
fn connected_supports(system: &PolymerSystem, root: usize, k_max: usize) -> Vec<Vec<usize>> {
    let size = |i: usize| system.polymers()[i].len();
    let mut out = Vec::new();
    let mut sub = vec![root];
    let mut blocked = vec![false; system.len()];
    blocked[root] = true;
    let mut touched = vec![root];
    let ext: Vec<usize> = system
        .conflicts(root)
        .iter()
        .copied()
        .filter(|&j| j > root)
        .collect();
    for &j in system.conflicts(root) {
        if !blocked[j] {
            blocked[j] = true;
            touched.push(j);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn extend(
        system: &PolymerSystem,
        root: usize,
        sub: &mut Vec<usize>,
        weight: usize,
        mut ext: Vec<usize>,
        k_max: usize,
        blocked: &mut Vec<bool>,
        size: &dyn Fn(usize) -> usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        let mut sorted = sub.clone();
        sorted.sort_unstable();
        out.push(sorted);
        while let Some(w) = ext.pop() {
            if weight + size(w) > k_max {
                continue;
            }
            let mut next = ext.clone();
            let mut newly = Vec::new();
            for &u in system.conflicts(w) {
                if u > root && !blocked[u] {
                    next.push(u);
                }
                if !blocked[u] {
                    blocked[u] = true;
                    newly.push(u);
                }
            }
            sub.push(w);
            extend(system, root, sub, weight + size(w), next, k_max, blocked, size, out);
            sub.pop();
            for u in newly {
                blocked[u] = false;
            }
        }
    }

    extend(system, root, &mut sub, size(root), ext, k_max, &mut blocked, &size, &mut out);
    out
}

fn for_each_multiplicity(
    sizes: &[usize],
    mults: &mut Vec<usize>,
    pos: usize,
    total: usize,
    k_max: usize,
    visit: &mut dyn FnMut(&[usize], usize) -> Result<()>,
) -> Result<()> {
    if pos == sizes.len() {
        return visit(mults, total);
    }
    let mut t = total;
    loop {
        for_each_multiplicity(sizes, mults, pos + 1, t, k_max, visit)?;
        if t + sizes[pos] > k_max {
            break;
        }
        t += sizes[pos];
        mults[pos] += 1;
    }
    mults[pos] = 1;
    Ok(())
}

fn build_cluster(
    system: &PolymerSystem,
    support: &[usize],
    mults: &[usize],
    size: usize,
    cache: &mut HashMap<SmallGraph, Rational>,
) -> Result<Cluster> {
    let expanded: Vec<usize> = support
        .iter()
        .zip(mults)
        .flat_map(|(&i, &m)| std::iter::repeat_n(i, m))
        .collect();
    let k = expanded.len();
    let mut edges = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            if system.incompatible(expanded[a], expanded[b]) {
                edges.push((a, b));
            }
        }
    }
    let graph = SmallGraph { n: k, edges };
    let phi = match cache.get(&graph) {
        Some(v) => v.clone(),
        None => {
            let v = ursell(&graph)?;
            cache.insert(graph.clone(), v.clone());
            v
        }
    };
    let denom: u64 = mults.iter().map(|&m| (1..=m as u64).product::<u64>()).product();
    let orderings = (1..=k as u64).product::<u64>() / denom;
    let mut weight = Rational::from(orderings) * &phi;
    for (&i, &m) in support.iter().zip(mults) {
        weight *= pow(&system.weights()[i], m);
    }
    Ok(Cluster {
        entries: support
            .iter()
            .zip(mults)
            .map(|(&i, &m)| (system.polymers()[i].clone(), m))
            .collect(),
        size,
        incompatibility: graph,
        ursell: phi,
        orderings,
        weight,
    })
}

/// `L_k` for `k = 0..=k_max` (index 0 is always zero).
pub fn l_terms(clusters: &[Cluster], k_max: usize) -> Vec<Rational> {
    let mut out = vec![Rational::ZERO; k_max + 1];
    for c in clusters {
        if c.size <= k_max {
            out[c.size] += &c.weight;
        }
    }
    out
}

/// `L_{D,k}` on a graph, with polymers of size at most `k` considered.
pub fn l_k(
    g: &BipartiteGraph,
    side: Side,
    params: &ModelParams,
    rho: &Rational,
    k: usize,
    budget: &Budget,
) -> Result<Rational> {
    let system = PolymerSystem::build(g, side, params, rho, k.max(1), budget)?;
    let clusters = enumerate_clusters(&system, k)?;
    Ok(l_terms(&clusters, k).swap_remove(k))
}

/// One row of a truncation report.
#[derive(Clone, Debug, Serialize)]
pub struct TruncationRow {
    pub k: usize,
    #[serde(rename = "L_k", with = "crate::exact::serde_rational")]
    pub l_k: Rational,
    /// `Σ_{j ≤ k} L_j`.
    #[serde(with = "crate::exact::serde_real")]
    pub partial_log: Real,
    /// `|log Ξ − Σ_{j ≤ k} L_j|`.
    #[serde(with = "crate::exact::serde_real")]
    pub residual: Real,
}

#[derive(Clone, Debug, Serialize)]
pub struct TruncationReport {
    pub side: Side,
    #[serde(with = "crate::exact::serde_rational")]
    pub xi: Rational,
    #[serde(with = "crate::exact::serde_real")]
    pub log_xi: Real,
    pub rows: Vec<TruncationRow>,
}

impl TruncationReport {
    /// `|log Ξ − Σ_{j < k} L_j|`; for `k = 1` this is `|log Ξ|`.
    pub fn residual_before(&self, k: usize) -> Real {
        if k <= 1 {
            exact::abs_real(self.log_xi.clone())
        } else {
            self.rows[k - 2].residual.clone()
        }
    }

    /// Whether residuals strictly decrease along `K = 1..=k_max`.
    pub fn residuals_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].residual < w[0].residual)
    }
}

pub fn log_xi_truncation_report(
    g: &BipartiteGraph,
    side: Side,
    params: &ModelParams,
    rho: &Rational,
    k_max: usize,
    budget: &Budget,
) -> Result<TruncationReport> {
    let full = PolymerSystem::build(g, side, params, rho, g.n() / 2, budget)?;
    let xi = full.xi()?;
    let clusters = enumerate_clusters(&full, k_max)?;
    Ok(truncation_from_parts(side, xi, &l_terms(&clusters, k_max)))
}

fn truncation_from_parts(side: Side, xi: Rational, terms: &[Rational]) -> TruncationReport {
    let log_xi = exact::ln_rational(&xi).expect("Ξ ≥ 1");
    let mut partial = Rational::ZERO;
    let rows = terms
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, l)| {
            partial += l;
            let partial_log = exact::real_from_rational(&partial);
            let residual = exact::abs_real(log_xi.clone() - partial_log.clone());
            TruncationRow {
                k,
                l_k: l.clone(),
                partial_log,
                residual,
            }
        })
        .collect();
    TruncationReport {
        side,
        xi,
        log_xi,
        rows,
    }
}

/// Result of a Kotecký–Preiss check.
#[derive(Clone, Debug, Serialize)]
pub struct KpOutcome {
    pub holds: bool,
    /// `f(A) − Σ_{A' ≁ A} |ω(A')| e^{f(A')+g(A')}` per polymer.
    #[serde(serialize_with = "serialize_reals")]
    pub margins: Vec<Real>,
    pub worst: Option<usize>,
}

fn serialize_reals<S: serde::Serializer>(xs: &[Real], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(xs.iter().map(exact::format_real))
}

/// Checks `Σ_{A' ≁ A} |ω(A')| e^{f(A')+g(A')} ≤ f(A)` for every polymer of
/// an abstract model. `incompatible(i, j)` must be true when `i == j`.
pub fn kp_check(
    weights: &[Rational],
    incompatible: impl Fn(usize, usize) -> bool,
    f: &[Real],
    g: &[Real],
) -> Result<KpOutcome> {
    let n = weights.len();
    if f.len() != n || g.len() != n {
        return Err(Error::Precondition("f, g and weights differ in length".into()));
    }
    let zero = exact::real(0);
    if f.iter().chain(g).any(|x| *x < zero) {
        return Err(Error::Domain("f and g must be nonnegative".into()));
    }
    let terms: Vec<Real> = (0..n)
        .map(|j| {
            let w = if weights[j] < Rational::ZERO {
                -weights[j].clone()
            } else {
                weights[j].clone()
            };
            exact::real_from_rational(&w) * exact::exp_real(&(f[j].clone() + g[j].clone()))
        })
        .collect();
    let slack = exact::comparison_slack();
    let margins: Vec<Real> = (0..n)
        .map(|i| {
            let lhs = (0..n)
                .filter(|&j| incompatible(i, j))
                .fold(exact::real(0), |acc, j| acc + terms[j].clone());
            f[i].clone() - lhs
        })
        .collect();
    let worst = (0..n).min_by(|&a, &b| margins[a].partial_cmp(&margins[b]).expect("finite"));
    let holds = margins.iter().all(|m| m.clone() + slack.clone() >= zero);
    Ok(KpOutcome {
        holds,
        margins,
        worst,
    })
}

/// KP check on a graph polymer system with `f(A) = a|A|` and `g(A) = b|A|`.
pub fn kp_check_linear(system: &PolymerSystem, a: &Rational, b: &Rational) -> Result<KpOutcome> {
    let f: Vec<Real> = system
        .polymers()
        .iter()
        .map(|p| exact::real_from_rational(&(a * Rational::from(p.len()))))
        .collect();
    let g: Vec<Real> = system
        .polymers()
        .iter()
        .map(|p| exact::real_from_rational(&(b * Rational::from(p.len()))))
        .collect();
    kp_check(system.weights(), |i, j| system.incompatible(i, j), &f, &g)
}

/// Tail bound row: `|log Ξ − L_{<k}|` against `e^{-bk}·Σ_{v∈D} f({v})`.
#[derive(Clone, Debug, Serialize)]
pub struct KpTailRow {
    pub k: usize,
    #[serde(with = "crate::exact::serde_real")]
    pub residual: Real,
    #[serde(with = "crate::exact::serde_real")]
    pub bound: Real,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct KpTailReport {
    pub kp: KpOutcome,
    /// The bound sums `f` over singleton polymers, so each singleton must be one.
    pub singletons_are_polymers: bool,
    pub rows: Vec<KpTailRow>,
}

impl KpTailReport {
    /// The KP condition holds and every tail row satisfies its bound.
    pub fn verified(&self) -> bool {
        self.kp.holds && self.singletons_are_polymers && self.rows.iter().all(|r| r.holds)
    }
}

/// KP check with linear `f = a|A|`, `g = b|A|`, followed by the tail bound
/// `|log Ξ − Σ_{j<k} L_j| ≤ e^{-bk} Σ_{v∈D} f({v})` for `k = 1..=k_max`.
pub fn kp_tail_report(
    g: &BipartiteGraph,
    side: Side,
    params: &ModelParams,
    rho: &Rational,
    a: &Rational,
    b: &Rational,
    k_max: usize,
    budget: &Budget,
) -> Result<KpTailReport> {
    let full = PolymerSystem::build(g, side, params, rho, g.n() / 2, budget)?;
    let kp = kp_check_linear(&full, a, b)?;
    let singletons = full.polymers().iter().filter(|p| p.len() == 1).count();
    let singletons_are_polymers = singletons == g.n() / 2;
    let clusters = enumerate_clusters(&full, k_max.saturating_sub(1))?;
    let terms = l_terms(&clusters, k_max.saturating_sub(1));
    let report = truncation_from_parts(side, full.xi()?, &terms);
    let f_total = exact::real_from_rational(&(a * Rational::from(g.n() / 2)));
    let slack = exact::comparison_slack();
    let rows = (1..=k_max)
        .map(|k| {
            let residual = report.residual_before(k);
            let decay = exact::exp_real(&exact::real_from_rational(&(-(b * Rational::from(k)))));
            let bound = decay * f_total.clone();
            let holds = residual <= bound.clone() + slack.clone();
            KpTailRow {
                k,
                residual,
                bound,
                holds,
            }
        })
        .collect();
    Ok(KpTailReport {
        kp,
        singletons_are_polymers,
        rows,
    })
}

/// Which branch of the piecewise `g̃` applies at a size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// `ℓ ≤ √d`
    Small,
    /// `√d < ℓ ≤ d^{C3}`
    Medium,
    Large,
}

/// The functions `f(ℓ) = d^{-(C5+1)}ℓ` and the three-regime `g̃`, with
/// `g = f + g̃`.
#[derive(Clone, Debug)]
pub struct KpFunctions {
    pub d: usize,
    pub constants: PropertyConstants,
    log_alpha_tilde: Real,
    log_d: Real,
}

impl KpFunctions {
    pub fn new(d: usize, params: &ModelParams, constants: PropertyConstants) -> Result<Self> {
        if d < 2 {
            return Err(Error::Domain("KP functions need d >= 2".into()));
        }
        Ok(KpFunctions {
            d,
            constants,
            log_alpha_tilde: params.alpha_bar(),
            log_d: exact::ln_rational(&int(d as i64))?,
        })
    }

    fn d_pow(&self, e: &Rational) -> Real {
        exact::exp_real(&(self.log_d.clone() * exact::real_from_rational(e)))
    }

    pub fn regime(&self, ell: usize) -> Regime {
        let l = Rational::from(ell);
        if &l * &l <= Rational::from(self.d) {
            Regime::Small
        } else if exact::real_from_rational(&l) <= self.d_pow(&self.constants.c3) {
            Regime::Medium
        } else {
            Regime::Large
        }
    }

    pub fn f(&self, ell: usize) -> Real {
        let e = -(&self.constants.c5 + Rational::ONE);
        self.d_pow(&e) * exact::real(ell as i64)
    }

    pub fn g_tilde(&self, ell: usize) -> Real {
        let c = &self.constants;
        let l = Rational::from(ell);
        let d = Rational::from(self.d);
        match self.regime(ell) {
            Regime::Small => {
                let lin = exact::real_from_rational(&(&d * &l - &c.c1 * &l * &l));
                let pen = exact::real_from_rational(&((&c.c5 + int(7)) * &l));
                lin * self.log_alpha_tilde.clone() - pen * self.log_d.clone()
            }
            Regime::Medium => {
                exact::real_from_rational(&(&d * &l / (int(2) * &c.c2))) * self.log_alpha_tilde.clone()
            }
            Regime::Large => self.f(ell),
        }
    }

    pub fn g(&self, ell: usize) -> Real {
        self.f(ell) + self.g_tilde(ell)
    }

    /// `d^{-(C5+3)}`.
    pub fn vertex_sum_rhs(&self) -> Real {
        self.d_pow(&-(&self.constants.c5 + int(3)))
    }

    /// `n·d^{(C5+7)k − C5 − 1}·α̃^{−kd + C1k²}`.
    pub fn tail_shape(&self, n: usize, k: usize) -> Real {
        let c = &self.constants;
        let kk = Rational::from(k);
        let d_exp = (&c.c5 + int(7)) * &kk - &c.c5 - Rational::ONE;
        let a_exp = -(&kk * Rational::from(self.d)) + &c.c1 * &kk * &kk;
        exact::real(n as i64)
            * self.d_pow(&d_exp)
            * exact::exp_real(&(exact::real_from_rational(&a_exp) * self.log_alpha_tilde.clone()))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VertexSumSizeRow {
    pub size: usize,
    pub regime: Regime,
    pub polymers: usize,
    #[serde(with = "crate::exact::serde_real")]
    pub g_tilde: Real,
    /// Contribution `Σ_{A ∋ v, |A| = size} ω(A) e^{f+g}` at the worst vertex.
    #[serde(with = "crate::exact::serde_real")]
    pub contribution: Real,
}

#[derive(Clone, Debug, Serialize)]
pub struct TailShapeRow {
    pub k: usize,
    #[serde(with = "crate::exact::serde_real")]
    pub bound: Real,
}

#[derive(Clone, Debug, Serialize)]
pub struct VertexSumAudit {
    pub side: Side,
    pub d: usize,
    /// Vertex attaining the largest sum.
    pub worst_vertex: Option<usize>,
    #[serde(with = "crate::exact::serde_real")]
    pub lhs: Real,
    #[serde(with = "crate::exact::serde_real")]
    pub rhs: Real,
    /// `lhs / rhs`; at or below 1 the inequality holds at this instance.
    #[serde(with = "crate::exact::serde_real")]
    pub ratio: Real,
    /// Some enumerated size has `g̃ < 0`, outside the KP hypotheses.
    pub negative_g: bool,
    /// `ℓ ↦ g̃(ℓ)/ℓ` is non-increasing over the enumerated sizes.
    pub g_over_size_nonincreasing: bool,
    pub by_size: Vec<VertexSumSizeRow>,
    pub tail_shape: Vec<TailShapeRow>,
}

/// For each `v ∈ D`, `Σ_{A ∋ v} ω(A) exp(f(A)+g(A))` over polymers with at
/// most `size_max` vertices, compared with `d^{-(C5+3)}`. A report only.
pub fn vertex_kp_sum_audit(
    g: &BipartiteGraph,
    side: Side,
    params: &ModelParams,
    rho: &Rational,
    constants: &PropertyConstants,
    size_max: usize,
    k_tail: usize,
    budget: &Budget,
) -> Result<VertexSumAudit> {
    let kp = KpFunctions::new(g.d(), params, constants.clone())?;
    let system = PolymerSystem::build(g, side, params, rho, size_max, budget)?;
    let sizes: Vec<usize> = (1..=size_max).collect();
    let factors: Vec<Real> = sizes
        .iter()
        .map(|&l| exact::exp_real(&(kp.f(l) + kp.g(l))))
        .collect();
    let mut per_vertex: Vec<(usize, Vec<Real>)> = Vec::new();
    for &v in g.side_vertices(side) {
        let mut row = vec![exact::real(0); size_max];
        for (p, w) in system.polymers().iter().zip(system.weights()) {
            if p.vertices.contains(v) {
                let l = p.len();
                row[l - 1] = row[l - 1].clone() + exact::real_from_rational(w) * factors[l - 1].clone();
            }
        }
        per_vertex.push((v, row));
    }
    let total = |row: &Vec<Real>| row.iter().fold(exact::real(0), |a, x| a + x.clone());
    let worst = per_vertex
        .iter()
        .max_by(|a, b| total(&a.1).partial_cmp(&total(&b.1)).expect("finite"));
    let rhs = kp.vertex_sum_rhs();
    let (worst_vertex, lhs, worst_row) = match worst {
        Some((v, row)) => (Some(*v), total(row), row.clone()),
        None => (None, exact::real(0), vec![exact::real(0); size_max]),
    };
    let by_size = sizes
        .iter()
        .map(|&l| VertexSumSizeRow {
            size: l,
            regime: kp.regime(l),
            polymers: system.polymers().iter().filter(|p| p.len() == l).count(),
            g_tilde: kp.g_tilde(l),
            contribution: worst_row[l - 1].clone(),
        })
        .collect::<Vec<_>>();
    let zero = exact::real(0);
    let negative_g = sizes.iter().any(|&l| kp.g_tilde(l) < zero);
    let per_size: Vec<Real> = sizes
        .iter()
        .map(|&l| kp.g_tilde(l) / exact::real(l as i64))
        .collect();
    let g_over_size_nonincreasing = per_size.windows(2).all(|w| w[1] <= w[0]);
    let tail_shape = (1..=k_tail)
        .map(|k| TailShapeRow {
            k,
            bound: kp.tail_shape(g.n(), k),
        })
        .collect();
    Ok(VertexSumAudit {
        side,
        d: g.d(),
        worst_vertex,
        ratio: lhs.clone() / rhs.clone(),
        lhs,
        rhs,
        negative_g,
        g_over_size_nonincreasing,
        by_size,
        tail_shape,
    })
}
