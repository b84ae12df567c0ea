//! Polymers, decorated polymers, their weights, brute-force polymer
//! partition functions, the families `G_D(a, b)` and ψ-approximations.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{self, pow, Rational};
use crate::graph::{BipartiteGraph, Budget, Side};
use crate::model::{self, ModelParams};
use crate::vertex_set::VertexSet;

/// Upper bound on the number of compatible configurations a brute-force
/// `Ξ` sweep will visit.
pub const CONFIGURATION_CAP: usize = 1 << 22;

/// Largest boundary for which the literal sum over decorations is evaluated.
pub const LITERAL_BOUNDARY_CAP: usize = 24;

/// A 2-linked set on one side with its closure and boundary.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Polymer {
    pub side: Side,
    pub vertices: VertexSet,
    pub closure: VertexSet,
    /// `N(vertices)`, which equals `N(closure)`.
    pub boundary: VertexSet,
}

impl Polymer {
    /// Validate `vertices` as a polymer on `side` under cutoff `rho`.
    pub fn new(g: &BipartiteGraph, side: Side, vertices: VertexSet, rho: &Rational) -> Result<Self> {
        let p = Self::unchecked(g, side, vertices)?;
        if !g.is_two_linked(&p.vertices)? {
            return Err(Error::Precondition(format!(
                "{:?} is not 2-linked",
                p.vertices
            )));
        }
        if !model::within_cutoff(p.closure.len(), g.n() / 2, rho) {
            return Err(Error::Precondition(format!(
                "closure of {:?} has {} vertices, above the cutoff",
                p.vertices,
                p.closure.len()
            )));
        }
        Ok(p)
    }

    fn unchecked(g: &BipartiteGraph, side: Side, vertices: VertexSet) -> Result<Self> {
        match g.side_of_set(&vertices)? {
            None => return Err(Error::Precondition("a polymer is nonempty".into())),
            Some(s) if s != side => {
                return Err(Error::SideMismatch(format!(
                    "vertices lie on {s}, polymer declared on {side}"
                )))
            }
            _ => {}
        }
        let closure = g.closure(&vertices, side)?;
        let boundary = g.neighborhood(&vertices);
        Ok(Polymer {
            side,
            vertices,
            closure,
            boundary,
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// Serializable polymer summary.
#[derive(Clone, Debug, Serialize)]
pub struct PolymerRecord {
    pub side: Side,
    pub vertices: Vec<usize>,
    pub closure_size: usize,
    pub boundary_size: usize,
    #[serde(with = "crate::exact::serde_rational")]
    pub weight: Rational,
}

impl PolymerRecord {
    pub fn new(p: &Polymer, weight: Rational) -> Self {
        PolymerRecord {
            side: p.side,
            vertices: p.vertices.to_vec(),
            closure_size: p.closure.len(),
            boundary_size: p.boundary.len(),
            weight,
        }
    }
}

/// Every polymer on `side` with at most `size_max` vertices, in
/// lexicographic order of vertex lists.
pub fn enumerate_polymers(
    g: &BipartiteGraph,
    side: Side,
    rho: &Rational,
    size_max: usize,
) -> Result<Vec<Polymer>> {
    model::check_rho(rho)?;
    if size_max == 0 {
        return Err(Error::Precondition("size_max must be >= 1".into()));
    }
    let side_len = g.n() / 2;
    let mut out = Vec::new();
    for a in g.two_linked_subsets_of_side(side, size_max) {
        let p = Polymer::unchecked(g, side, a)?;
        if model::within_cutoff(p.closure.len(), side_len, rho) {
            out.push(p);
        }
    }
    Ok(out)
}

/// `ω(A) = λ^{|A|} Π_{v ∈ N(A)} (1 + λ(1-p)^{deg_A(v)})/(1+λ)`.
pub fn polymer_weight(g: &BipartiteGraph, params: &ModelParams, a: &Polymer) -> Rational {
    weight_of_set(g, params, &a.vertices)
}

/// The product-form weight of an arbitrary vertex set, with no cutoff or
/// 2-linkedness requirement.
pub fn weight_of_set(g: &BipartiteGraph, params: &ModelParams, a: &VertexSet) -> Rational {
    let lam = params.lambda();
    let keep = params.one_minus_p();
    let one_plus = Rational::ONE + lam;
    let mut w = pow(lam, a.len());
    for v in g.neighborhood(a).iter() {
        let deg = g.degree_into(v, a);
        w *= (Rational::ONE + lam * pow(&keep, deg)) / &one_plus;
    }
    w
}

/// `ω(A)` as the literal sum over decorations `B ⊆ N(A)`.
pub fn polymer_weight_literal(g: &BipartiteGraph, params: &ModelParams, a: &Polymer) -> Result<Rational> {
    let boundary = a.boundary.to_vec();
    if boundary.len() > LITERAL_BOUNDARY_CAP {
        return Err(Error::Budget(format!(
            "literal weight needs 2^{} decorations",
            boundary.len()
        )));
    }
    let mut total = Rational::ZERO;
    for mask in 0u64..1 << boundary.len() {
        let b = g.set(
            boundary
                .iter()
                .enumerate()
                .filter(|(j, _)| mask & (1 << j) != 0)
                .map(|(_, &v)| v),
        );
        total += DecoratedPolymer::new(a.clone(), b)?.weight(g, params);
    }
    Ok(total)
}

/// `λ^{|A|} α̃^{-|N(A)|}`.
pub fn weight_bound(params: &ModelParams, a: &Polymer) -> Rational {
    pow(params.lambda(), a.len()) / pow(&params.alpha_tilde(), a.boundary.len())
}

/// Whether `ω(A) ≤ λ^{|A|} α̃^{-|N(A)|}`.
pub fn weight_bound_check(g: &BipartiteGraph, params: &ModelParams, a: &Polymer) -> bool {
    polymer_weight(g, params, a) <= weight_bound(params, a)
}

/// A polymer together with a subset of its boundary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecoratedPolymer {
    pub polymer: Polymer,
    pub b_set: VertexSet,
}

impl DecoratedPolymer {
    pub fn new(polymer: Polymer, b_set: VertexSet) -> Result<Self> {
        if !b_set.is_subset(&polymer.boundary) {
            return Err(Error::Precondition("decoration leaves the boundary".into()));
        }
        Ok(DecoratedPolymer { polymer, b_set })
    }

    /// `λ^{|A|+|B|}(1-p)^{|E(A,B)|}/(1+λ)^{|N(A)|}`.
    pub fn weight(&self, g: &BipartiteGraph, params: &ModelParams) -> Rational {
        let a = &self.polymer;
        let edges: usize = self.b_set.iter().map(|v| g.degree_into(v, &a.vertices)).sum();
        pow(params.lambda(), a.len() + self.b_set.len()) * pow(&params.one_minus_p(), edges)
            / pow(&(Rational::ONE + params.lambda()), a.boundary.len())
    }
}

/// Polymers are compatible when their union is not 2-linked.
pub fn compatible(g: &BipartiteGraph, a: &Polymer, b: &Polymer) -> Result<bool> {
    if a.side != b.side {
        return Err(Error::SideMismatch(format!(
            "polymers on {} and {}",
            a.side, b.side
        )));
    }
    Ok(!touching(g, &a.vertices, &b.vertices))
}

// Two 2-linked sets have a 2-linked union iff they meet or lie within distance 2.
fn touching(g: &BipartiteGraph, a: &VertexSet, b: &VertexSet) -> bool {
    !a.is_disjoint(b)
        || a
            .iter()
            .any(|v| g.square_neighbors(v).iter().any(|&w| b.contains(w)))
}

/// Polymers of one side with weights and their incompatibility graph.
#[derive(Clone, Debug)]
pub struct PolymerSystem {
    side: Side,
    polymers: Vec<Polymer>,
    weights: Vec<Rational>,
    // incompatible partners, excluding the polymer itself
    conflicts: Vec<Vec<usize>>,
}

impl PolymerSystem {
    pub fn build(
        g: &BipartiteGraph,
        side: Side,
        params: &ModelParams,
        rho: &Rational,
        size_max: usize,
        budget: &Budget,
    ) -> Result<Self> {
        budget.check_vertices(g.n())?;
        let polymers = enumerate_polymers(g, side, rho, size_max.max(1))?;
        let weights = polymers.iter().map(|a| polymer_weight(g, params, a)).collect();
        let mut conflicts = vec![Vec::new(); polymers.len()];
        for i in 0..polymers.len() {
            for j in i + 1..polymers.len() {
                if touching(g, &polymers[i].vertices, &polymers[j].vertices) {
                    conflicts[i].push(j);
                    conflicts[j].push(i);
                }
            }
        }
        Ok(PolymerSystem {
            side,
            polymers,
            weights,
            conflicts,
        })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn polymers(&self) -> &[Polymer] {
        &self.polymers
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.polymers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polymers.is_empty()
    }

    /// Whether polymers `i` and `j` are incompatible; always true for `i == j`.
    pub fn incompatible(&self, i: usize, j: usize) -> bool {
        i == j || self.conflicts[i].binary_search(&j).is_ok()
    }

    pub fn conflicts(&self, i: usize) -> &[usize] {
        &self.conflicts[i]
    }

    /// Visit every pairwise compatible family (including the empty one)
    /// whose total vertex count is at most `size_cap`.
    fn for_each_configuration(
        &self,
        size_cap: usize,
        cap: usize,
        visit: &mut dyn FnMut(&[usize], usize),
    ) -> Result<()> {
        fn go(
            sys: &PolymerSystem,
            start: usize,
            chosen: &mut Vec<usize>,
            size: usize,
            size_cap: usize,
            seen: &mut usize,
            cap: usize,
            visit: &mut dyn FnMut(&[usize], usize),
        ) -> Result<()> {
            *seen += 1;
            if *seen > cap {
                return Err(Error::Budget(format!(
                    "more than {cap} compatible polymer configurations"
                )));
            }
            visit(chosen, size);
            for i in start..sys.len() {
                let s = size + sys.polymers[i].len();
                if s > size_cap || chosen.iter().any(|&c| sys.incompatible(c, i)) {
                    continue;
                }
                chosen.push(i);
                go(sys, i + 1, chosen, s, size_cap, seen, cap, visit)?;
                chosen.pop();
            }
            Ok(())
        }
        let mut seen = 0;
        go(self, 0, &mut Vec::new(), 0, size_cap, &mut seen, cap, visit)
    }

    /// Every compatible configuration with its weight `Π ω(A)`.
    pub fn configurations(&self, cap: usize) -> Result<Vec<(Vec<usize>, Rational)>> {
        let mut out = Vec::new();
        self.for_each_configuration(usize::MAX, cap, &mut |chosen, _| {
            let w = exact::product(chosen.iter().map(|&i| self.weights[i].clone()));
            out.push((chosen.to_vec(), w));
        })?;
        Ok(out)
    }

    /// `Ξ = Σ_Θ Π_{A∈Θ} ω(A)` over compatible families.
    pub fn xi(&self) -> Result<Rational> {
        let mut total = Rational::ZERO;
        self.for_each_configuration(usize::MAX, CONFIGURATION_CAP, &mut |chosen, _| {
            total += exact::product(chosen.iter().map(|&i| self.weights[i].clone()));
        })?;
        Ok(total)
    }

    /// Coefficients of `Ξ(z) = Σ_Θ Π ω(A) z^{|A|}` up to `z^{k_max}`.
    pub fn xi_series(&self, k_max: usize) -> Result<Vec<Rational>> {
        let mut coeffs = vec![Rational::ZERO; k_max + 1];
        self.for_each_configuration(k_max, CONFIGURATION_CAP, &mut |chosen, size| {
            coeffs[size] += exact::product(chosen.iter().map(|&i| self.weights[i].clone()));
        })?;
        Ok(coeffs)
    }
}

/// Brute-force `Ξ_D` over every polymer on `side`.
pub fn xi_brute(
    g: &BipartiteGraph,
    side: Side,
    params: &ModelParams,
    rho: &Rational,
    budget: &Budget,
) -> Result<Rational> {
    PolymerSystem::build(g, side, params, rho, g.n() / 2, budget)?.xi()
}

/// `(1+λ)^{n/2}(Ξ_O + Ξ_E)`.
pub fn z_hat_from_polymers(
    g: &BipartiteGraph,
    params: &ModelParams,
    rho: &Rational,
    budget: &Budget,
) -> Result<Rational> {
    let xi_o = xi_brute(g, Side::Odd, params, rho, budget)?;
    let xi_e = xi_brute(g, Side::Even, params, rho, budget)?;
    Ok(pow(&(Rational::ONE + params.lambda()), g.n() / 2) * (xi_o + xi_e))
}

/// All 2-linked `A ⊆ side` with `|[A]| = a` and `|N(A)| = b`. No cutoff applies.
pub fn enumerate_g_ab(g: &BipartiteGraph, side: Side, a: usize, b: usize) -> Result<Vec<VertexSet>> {
    if a == 0 {
        return Err(Error::Precondition("a must be >= 1".into()));
    }
    if b < a {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for set in g.two_linked_subsets_of_side(side, a) {
        if g.neighborhood(&set).len() == b && g.closure(&set, side)?.len() == a {
            out.push(set);
        }
    }
    Ok(out)
}

/// Definition check for a ψ-approximation `(F, H)` of `A ⊆ side`.
pub fn is_psi_approximation(
    g: &BipartiteGraph,
    side: Side,
    f: &VertexSet,
    h: &VertexSet,
    a: &VertexSet,
    psi: usize,
) -> Result<bool> {
    let d = g.d();
    if psi == 0 || psi >= d {
        return Err(Error::Precondition(format!("psi = {psi} outside [1, {}]", d.saturating_sub(1))));
    }
    for (name, set, want) in [("A", a, side), ("H", h, side), ("F", f, side.other())] {
        if let Some(s) = g.side_of_set(set)? {
            if s != want {
                return Err(Error::SideMismatch(format!("{name} lies on {s}, expected {want}")));
            }
        }
    }
    if a.is_empty() {
        return Err(Error::Precondition("A must be nonempty".into()));
    }
    if !f.is_subset(&g.neighborhood(a)) || !g.closure(a, side)?.is_subset(h) {
        return Ok(false);
    }
    if h.iter().any(|u| g.degree_into(u, f) + psi < d) {
        return Ok(false);
    }
    let ok = g
        .side_vertices(side.other())
        .iter()
        .filter(|&&v| !f.contains(v))
        .all(|&v| d - g.degree_into(v, h) + psi >= d);
    Ok(ok)
}

/// Outcome of the two approximation inequalities for `A ∈ G_D(a, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ApproximationFacts {
    /// `|H| ≤ |F| + (b-a)ψ/(d-ψ)`.
    pub size_bound: bool,
    /// `|E(H, N(A)∖F)| ≤ (b-|F|)ψ`.
    pub edge_bound: bool,
}

pub fn approximation_facts(
    g: &BipartiteGraph,
    side: Side,
    f: &VertexSet,
    h: &VertexSet,
    a: &VertexSet,
    psi: usize,
) -> Result<ApproximationFacts> {
    let d = g.d();
    if psi == 0 || psi >= d {
        return Err(Error::Precondition(format!("psi = {psi} outside [1, {}]", d - 1)));
    }
    let nbhd = g.neighborhood(a);
    let big_a = g.closure(a, side)?.len() as i64;
    let b = nbhd.len() as i64;
    let (hl, fl, psi_i, d_i) = (h.len() as i64, f.len() as i64, psi as i64, d as i64);
    let size_bound = (hl - fl) * (d_i - psi_i) <= (b - big_a) * psi_i;
    let outside = nbhd.difference(f);
    let edges: usize = outside.iter().map(|v| g.degree_into(v, h)).sum();
    let edge_bound = edges as i64 <= (b - fl) * psi_i;
    Ok(ApproximationFacts {
        size_bound,
        edge_bound,
    })
}
