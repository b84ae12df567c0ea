//! Vertex-isoperimetry checks on concrete graphs and numeric audits of the
//! entropy and container inequalities.
//!
//! Inequalities whose every symbol is instantiated are asserted; asymptotic
//! hypotheses are reported as ratios.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{self, int, pow, Rational, Real};
use crate::graph::{BipartiteGraph, Budget, Side};
use crate::model::{self, ModelParams};
use crate::polymer;
use crate::vertex_set::VertexSet;

/// Largest number of subsets an exhaustive isoperimetry sweep visits.
pub const SWEEP_CAP: u64 = 50_000_000;

/// Constants `C1..C5` of the isoperimetric properties.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PropertyConstants {
    #[serde(with = "crate::exact::serde_rational")]
    pub c1: Rational,
    #[serde(with = "crate::exact::serde_rational")]
    pub c2: Rational,
    #[serde(with = "crate::exact::serde_rational")]
    pub c3: Rational,
    #[serde(with = "crate::exact::serde_rational")]
    pub c4: Rational,
    #[serde(with = "crate::exact::serde_rational")]
    pub c5: Rational,
}

impl Default for PropertyConstants {
    fn default() -> Self {
        PropertyConstants {
            c1: int(2),
            c2: int(10),
            c3: int(4),
            c4: int(1),
            c5: exact::ratio(1, 2),
        }
    }
}

impl PropertyConstants {
    pub fn new(c1: Rational, c2: Rational, c3: Rational, c4: Rational, c5: Rational) -> Result<Self> {
        for (name, c) in [("C1", &c1), ("C2", &c2), ("C3", &c3), ("C4", &c4), ("C5", &c5)] {
            if *c <= Rational::ZERO {
                return Err(Error::Domain(format!("{name} must be positive")));
            }
        }
        if c5 >= int(2) {
            return Err(Error::Domain("C5 must be below 2".into()));
        }
        Ok(PropertyConstants { c1, c2, c3, c4, c5 })
    }

    /// `C3 > C5 + 2`, required by Property I but not Property II.
    pub fn property_i_admissible(&self) -> bool {
        self.c3 > &self.c5 + int(2)
    }
}

/// How subsets are chosen for an isoperimetry check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Every nonempty one-sided subset up to the size cap.
    Exhaustive,
    /// Random one-sided 2-linked sets grown from a random vertex.
    Sampled { samples: u64, seed: u64 },
}

/// Verdict for one inequality `|N(X)| ≥ bound(|X|)`.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub condition: String,
    pub holds: bool,
    pub sets_checked: u64,
    /// Smallest `|N(X)| − bound` seen.
    #[serde(serialize_with = "serialize_opt_real")]
    pub worst_margin: Option<Real>,
    /// A violating set, when one was found.
    pub witness: Option<Vec<usize>>,
}

fn serialize_opt_real<S: serde::Serializer>(x: &Option<Real>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_str(&exact::format_real(v)),
        None => s.serialize_none(),
    }
}

/// A named numeric quantity reported without a verdict.
#[derive(Clone, Debug, Serialize)]
pub struct RatioReport {
    pub quantity: String,
    #[serde(with = "crate::exact::serde_real")]
    pub value: Real,
}

/// `|N(X)| ≥ bound` for sizes where `bound(size)` is `Some`.
struct Condition {
    name: String,
    bound: Box<dyn Fn(usize) -> Option<Real> + Sync>,
}

fn d_pow(d: usize, e: &Rational) -> Real {
    let log_d = exact::ln_rational(&int(d as i64)).expect("d >= 1");
    exact::exp_real(&(log_d * exact::real_from_rational(e)))
}

fn ln_usize(x: usize) -> Real {
    exact::ln_rational(&int(x as i64)).expect("positive")
}

/// Subsets of `side` to examine: exhaustive up to `size_cap`, or sampled.
fn candidate_sets(
    g: &BipartiteGraph,
    side: Side,
    size_cap: usize,
    mode: Mode,
) -> Result<Vec<VertexSet>> {
    let verts = g.side_vertices(side);
    match mode {
        Mode::Exhaustive => {
            let m = verts.len() as u64;
            let mut total = 0u64;
            let mut c = 1u64;
            for j in 1..=size_cap.min(verts.len()) as u64 {
                c = c.saturating_mul(m - j + 1) / j;
                total = total.saturating_add(c);
            }
            if total > SWEEP_CAP {
                return Err(Error::Budget(format!(
                    "{total} subsets exceed the sweep cap of {SWEEP_CAP}"
                )));
            }
            let mut out = Vec::with_capacity(total as usize);
            let mut chosen = Vec::new();
            fn go(g: &BipartiteGraph, verts: &[usize], start: usize, cap: usize, chosen: &mut Vec<usize>, out: &mut Vec<VertexSet>) {
                for i in start..verts.len() {
                    chosen.push(verts[i]);
                    out.push(g.set(chosen.iter().copied()));
                    if chosen.len() < cap {
                        go(g, verts, i + 1, cap, chosen, out);
                    }
                    chosen.pop();
                }
            }
            go(g, verts, 0, size_cap, &mut chosen, &mut out);
            Ok(out)
        }
        Mode::Sampled { samples, seed } => Ok((0..samples)
            .map(|k| {
                let mut rng = model::substream(seed, k);
                let target = rng.gen_range(1..=size_cap.min(verts.len()).max(1));
                let start = *verts.choose(&mut rng).expect("nonempty side");
                let mut set = g.set([start]);
                while set.len() < target {
                    let mut frontier: Vec<usize> = set
                        .iter()
                        .flat_map(|v| g.square_neighbors(v).iter().copied())
                        .filter(|&w| g.side_of(w) == side && !set.contains(w))
                        .collect();
                    frontier.sort_unstable();
                    frontier.dedup();
                    match frontier.choose(&mut rng) {
                        Some(&w) => {
                            set.insert(w);
                        }
                        None => break,
                    }
                }
                set
            })
            .collect()),
    }
}

fn evaluate(g: &BipartiteGraph, sets: &[VertexSet], conditions: &[Condition]) -> Vec<ConditionReport> {
    let slack = exact::comparison_slack();
    conditions
        .iter()
        .map(|c| {
            let results: Vec<(Real, &VertexSet)> = sets
                .par_iter()
                .filter_map(|x| {
                    let bound = (c.bound)(x.len())?;
                    let margin = exact::real(g.neighborhood(x).len() as i64) - bound;
                    Some((margin, x))
                })
                .collect();
            let worst = results
                .iter()
                .min_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
            // Re-derive the violation from scratch before reporting it.
            let witness = worst.and_then(|(m, x)| {
                let recheck = (c.bound)(x.len())
                    .map(|b| exact::real(g.neighborhood(x).len() as i64) < b - slack.clone())
                    .unwrap_or(false);
                (*m < -slack.clone() && recheck).then(|| x.to_vec())
            });
            ConditionReport {
                condition: c.name.clone(),
                holds: witness.is_none(),
                sets_checked: results.len() as u64,
                worst_margin: worst.map(|(m, _)| m.clone()),
                witness,
            }
        })
        .collect()
}

fn check_both_sides(
    g: &BipartiteGraph,
    size_cap: usize,
    mode: Mode,
    conditions: &[Condition],
) -> Result<Vec<ConditionReport>> {
    let mut sets = candidate_sets(g, Side::Odd, size_cap, mode)?;
    sets.extend(candidate_sets(g, Side::Even, size_cap, mode)?);
    Ok(evaluate(g, &sets, conditions))
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyReport {
    pub property: String,
    pub conditions: Vec<ConditionReport>,
    pub ratios: Vec<RatioReport>,
    pub constants_admissible: bool,
}

impl PropertyReport {
    pub fn condition(&self, name: &str) -> Option<&ConditionReport> {
        self.conditions.iter().find(|c| c.condition == name)
    }
}

/// Property I: Ia(1)–(3) checked over one-sided sets; Ib reported.
pub fn check_property_i(
    g: &BipartiteGraph,
    constants: &PropertyConstants,
    size_cap: usize,
    mode: Mode,
) -> Result<PropertyReport> {
    let d = g.d();
    let n = g.n();
    let c = constants.clone();
    let c1 = c.c1.clone();
    let c2 = c.c2.clone();
    let mid_cap = d_pow(d, &c.c3);
    let growth = exact::real(1) + exact::real_from_rational(&c.c4) / d_pow(d, &c.c5);
    let large_cap = Rational::from(3 * n) / int(8);
    let conditions = vec![
        Condition {
            name: "Ia(1)".into(),
            bound: Box::new(move |x| {
                let x = Rational::from(x);
                Some(exact::real_from_rational(&((Rational::from(d) - &c1 * &x) * &x)))
            }),
        },
        Condition {
            name: "Ia(2)".into(),
            bound: Box::new(move |x| {
                (exact::real(x as i64) <= mid_cap)
                    .then(|| exact::real_from_rational(&(Rational::from(d) / &c2 * Rational::from(x))))
            }),
        },
        Condition {
            name: "Ia(3)".into(),
            bound: Box::new(move |x| {
                (Rational::from(x) <= large_cap).then(|| growth.clone() * exact::real(x as i64))
            }),
        },
    ];
    let ratios = vec![
        RatioReport {
            quantity: "n/d^(C5+5)".into(),
            value: exact::real(n as i64) / d_pow(d, &(&c.c5 + int(5))),
        },
        RatioReport {
            quantity: "log(n)/d".into(),
            value: ln_usize(n) / exact::real(d as i64),
        },
    ];
    Ok(PropertyReport {
        property: "I".into(),
        conditions: check_both_sides(g, size_cap, mode, &conditions)?,
        ratios,
        constants_admissible: c.property_i_admissible(),
    })
}

/// Property II: IIa(1), IIa(2) over one-sided sets, IIb exactly, IIc reported.
pub fn check_property_ii(
    g: &BipartiteGraph,
    constants: &PropertyConstants,
    size_cap: usize,
    mode: Mode,
) -> Result<PropertyReport> {
    let d = g.d();
    let n = g.n();
    let sqrt_d = exact::exp_real(&(ln_usize(d) / exact::real(2)));
    let small_cap = exact::real((d * d * d) as i64) * ln_usize(n);
    let growth = exact::real(1) + exact::real_from_rational(&constants.c4) / d_pow(d, &constants.c5);
    let large_cap = Rational::from(3 * n) / int(8);
    let conditions = vec![
        Condition {
            name: "IIa(1)".into(),
            bound: Box::new(move |x| {
                (exact::real(x as i64) <= small_cap).then(|| sqrt_d.clone() * exact::real(x as i64))
            }),
        },
        Condition {
            name: "IIa(2)".into(),
            bound: Box::new(move |x| {
                (Rational::from(x) <= large_cap).then(|| growth.clone() * exact::real(x as i64))
            }),
        },
    ];
    let mut reports = check_both_sides(g, size_cap, mode, &conditions)?;
    let codeg = g.max_codegree();
    reports.push(ConditionReport {
        condition: "IIb".into(),
        holds: Rational::from(codeg) <= constants.c1,
        sets_checked: 0,
        worst_margin: Some(exact::real_from_rational(&(&constants.c1 - Rational::from(codeg)))),
        witness: None,
    });
    Ok(PropertyReport {
        property: "II".into(),
        conditions: reports,
        ratios: vec![
            RatioReport {
                quantity: "n/d^6".into(),
                value: exact::real(n as i64) / d_pow(d, &int(6)),
            },
            RatioReport {
                quantity: "max_codegree".into(),
                value: exact::real(codeg as i64),
            },
        ],
        constants_admissible: constants.c5 < int(2),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ProductIsoReport {
    /// Largest factor vertex count.
    pub s: usize,
    /// Number of factors.
    pub t: usize,
    pub max_codegree: usize,
    /// `max_codegree ≤ s`.
    pub codegree_holds: bool,
    /// Largest `t|X|/|N(X)|` seen: the smallest `c` for which `|N(X)| ≥ t|X|/c`.
    #[serde(serialize_with = "serialize_opt_real")]
    pub implied_c: Option<Real>,
    /// `|N(X)| ≥ |X|(1 + 2√2(1−q)/(s√t))` with `q = 2|X|/n`.
    pub expansion: ConditionReport,
}

/// Product-graph isoperimetry on a graph built as a Cartesian product.
pub fn check_product_iso(g: &BipartiteGraph, size_cap: usize, mode: Mode) -> Result<ProductIsoReport> {
    let sizes = g
        .factor_sizes()
        .ok_or_else(|| Error::Precondition("graph was not built as a Cartesian product".into()))?;
    let s = *sizes.iter().max().expect("at least one factor");
    let t = sizes.len();
    let n = g.n();
    let max_codegree = g.max_codegree();
    let mut sets = candidate_sets(g, Side::Odd, size_cap, mode)?;
    sets.extend(candidate_sets(g, Side::Even, size_cap, mode)?);
    let implied_c = sets
        .par_iter()
        .map(|x| Rational::from(t * x.len()) / Rational::from(g.neighborhood(x).len().max(1)))
        .max_by(|a, b| a.cmp(b))
        .map(|r| exact::real_from_rational(&r));
    let sqrt_t = exact::exp_real(&(ln_usize(t) / exact::real(2)));
    let two_sqrt_two = exact::exp_real(&(exact::ln_rational(&int(8)).expect("8 > 0") / exact::real(2)));
    let scale = two_sqrt_two / (exact::real(s as i64) * sqrt_t);
    let condition = Condition {
        name: "product(3)".into(),
        bound: Box::new(move |x| {
            let q = Rational::from(2 * x) / Rational::from(n);
            let gain = exact::real_from_rational(&(Rational::ONE - q)) * scale.clone();
            Some((exact::real(1) + gain) * exact::real(x as i64))
        }),
    };
    let expansion = evaluate(g, &sets, &[condition]).remove(0);
    Ok(ProductIsoReport {
        s,
        t,
        max_codegree,
        codegree_holds: max_codegree <= s,
        implied_c,
        expansion,
    })
}

/// A family `Ψ` of subsets of `[d] = {1, …, d}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PsiFamily {
    pub d: usize,
    pub subsets: Vec<Vec<usize>>,
}

impl PsiFamily {
    pub fn new(d: usize, subsets: Vec<Vec<usize>>) -> Result<Self> {
        let mut clean: Vec<Vec<usize>> = Vec::with_capacity(subsets.len());
        for mut s in subsets {
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Precondition(format!("repeated coordinate in {s:?}")));
            }
            if let Some(&c) = s.iter().find(|&&c| c == 0 || c > d) {
                return Err(Error::Precondition(format!("coordinate {c} outside [1, {d}]")));
            }
            clean.push(s);
        }
        clean.sort();
        if clean.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Precondition("subsets of a family must be distinct".into()));
        }
        Ok(PsiFamily { d, subsets: clean })
    }

    /// All singletons `{i}` of `[d]`.
    pub fn singletons(d: usize) -> Self {
        PsiFamily {
            d,
            subsets: (1..=d).map(|i| vec![i]).collect(),
        }
    }

    pub fn contains_empty(&self) -> bool {
        self.subsets.iter().any(|s| s.is_empty())
    }

    fn filtered(&self, keep: impl Fn(usize) -> bool) -> PsiFamily {
        PsiFamily {
            d: self.d,
            subsets: self.subsets.iter().filter(|s| keep(s.len())).cloned().collect(),
        }
    }
}

/// `Z(Ψ) = Σ_{ψ∈Ψ} λ^{|ψ|}(1 + λ(1-p)^{|ψ|})^d`.
pub fn z_psi(family: &PsiFamily, params: &ModelParams) -> Rational {
    let lam = params.lambda();
    let keep = params.one_minus_p();
    exact::sum(family.subsets.iter().map(|psi| {
        let k = psi.len();
        pow(lam, k) * pow(&(Rational::ONE + lam * pow(&keep, k)), family.d)
    }))
}

/// `ℓ_Ψ = |[d] ∖ ∪Ψ|`.
pub fn ell_psi(family: &PsiFamily) -> usize {
    let mut used = vec![false; family.d + 1];
    for s in &family.subsets {
        for &c in s {
            used[c] = true;
        }
    }
    (1..=family.d).filter(|&c| !used[c]).count()
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    #[serde(with = "crate::exact::serde_rational")]
    pub value: Rational,
    #[serde(with = "crate::exact::serde_real")]
    pub bound: Real,
    /// `bound − value`.
    #[serde(with = "crate::exact::serde_real")]
    pub margin: Real,
    pub holds: bool,
}

fn bound_check(value: Rational, bound: Real) -> BoundCheck {
    let v = exact::real_from_rational(&value);
    let margin = bound.clone() - v;
    let holds = margin.clone() + exact::comparison_slack() >= exact::real(0);
    BoundCheck {
        value,
        bound,
        margin,
        holds,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SplitBoundReport {
    #[serde(with = "crate::exact::serde_rational")]
    pub ell: Rational,
    #[serde(with = "crate::exact::serde_rational")]
    pub c: Rational,
    /// Split point `s = ((d−ℓ)/2)·λ/(1+λ)`.
    #[serde(with = "crate::exact::serde_rational")]
    pub s: Rational,
    pub small_members: usize,
    pub large_members: usize,
    /// `Z(Ψ^{≤s}) ≤ (1+λ)^d exp(−ᾱℓ − C log d)`.
    pub small: BoundCheck,
    /// `Z(Ψ^{>s}) ≤ (1+λ)^d exp(−ᾱℓ + d^{−C})`.
    pub large: BoundCheck,
    /// Both hypothesis inequalities on `(d, λ, p, C)` hold.
    pub hypotheses_hold: bool,
    #[serde(with = "crate::exact::serde_real")]
    pub hypothesis_margin_lambda: Real,
    #[serde(with = "crate::exact::serde_real")]
    pub hypothesis_margin_alpha_bar: Real,
    /// Pass/fail, given only when the hypotheses hold.
    pub verdict: Option<bool>,
}

/// The split bounds on `Z(Ψ^{≤s})` and `Z(Ψ^{>s})`.
pub fn split_bound_audit(family: &PsiFamily, ell: &Rational, params: &ModelParams, c: &Rational) -> Result<SplitBoundReport> {
    let d = family.d;
    if d < 2 {
        return Err(Error::Domain("need d >= 2".into()));
    }
    let ell_max = {
        let a = Rational::from(ell_psi(family));
        let b = Rational::from(d) / int(2);
        if a < b {
            a
        } else {
            b
        }
    };
    if *ell < Rational::ZERO || *ell > ell_max {
        return Err(Error::Precondition(format!(
            "ell = {} outside [0, {}]",
            exact::format_rational(ell),
            exact::format_rational(&ell_max)
        )));
    }
    let lam = params.lambda();
    let q = params.q();
    let s = (Rational::from(d) - ell) / int(2) * &q;
    let small_family = family.filtered(|k| k >= 1 && Rational::from(k) <= s);
    let large_family = family.filtered(|k| Rational::from(k) > s);
    let log_d = ln_usize(d);
    let alpha_bar = params.alpha_bar();
    let base = exact::real_from_rational(&pow(&(Rational::ONE + lam), d));
    let c_real = exact::real_from_rational(c);
    let decay = alpha_bar.clone() * exact::real_from_rational(ell);
    let small_bound = base.clone() * exact::exp_real(&(-decay.clone() - c_real.clone() * log_d.clone()));
    let d_neg_c = exact::exp_real(&(-(c_real.clone() * log_d.clone())));
    let large_bound = base * exact::exp_real(&(d_neg_c - decay));

    let d_real = exact::real(d as i64);
    let (beta_term_lambda, beta_term_alpha) = match params.beta() {
        None => (exact::real(0), exact::real(0)),
        Some(beta) => {
            let log_lambda_d = exact::ln_rational(lam)? + (c_real.clone() + exact::real(1)) * log_d.clone();
            let t1 = exact::real(4) * log_lambda_d / (beta.clone() * d_real.clone());
            let t2 = exact::real(10)
                * exact::ln_rational(&(int(2) + lam))?
                * exact::ln_rational(&(Rational::ONE + lam * Rational::from(d)))?
                / (beta * d_real.clone());
            (t1, t2)
        }
    };
    let h1 = exact::real_from_rational(&q)
        - exact::real(64) * c_real.clone() * log_d.clone() / d_real.clone()
        - beta_term_lambda;
    let h2 = alpha_bar - exact::real(4) * c_real * log_d / d_real - beta_term_alpha;
    let zero = exact::real(0);
    let hypotheses_hold = h1 >= zero && h2 >= zero;
    let small = bound_check(z_psi(&small_family, params), small_bound);
    let large = bound_check(z_psi(&large_family, params), large_bound);
    let verdict = hypotheses_hold.then_some(small.holds && large.holds);
    Ok(SplitBoundReport {
        ell: ell.clone(),
        c: c.clone(),
        s,
        small_members: small_family.subsets.len(),
        large_members: large_family.subsets.len(),
        small,
        large,
        hypotheses_hold,
        hypothesis_margin_lambda: h1,
        hypothesis_margin_alpha_bar: h2,
        verdict,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilyBoundReport {
    pub ell_psi: usize,
    /// `Z(Ψ) ≤ (1+λ)^d exp(−ᾱℓ_Ψ/2 + d^{−C})`.
    pub whole: BoundCheck,
    pub split: SplitBoundReport,
}

/// The unsplit bound, audited through the split one at `ℓ = ℓ_Ψ/2`.
/// Families containing the empty set are rejected.
pub fn family_bound_audit(family: &PsiFamily, params: &ModelParams, c: &Rational) -> Result<FamilyBoundReport> {
    if family.contains_empty() {
        return Err(Error::Precondition("the family must not contain the empty set".into()));
    }
    let ell_psi = ell_psi(family);
    let ell = Rational::from(ell_psi) / int(2);
    let split = split_bound_audit(family, &ell, params, c)?;
    let d = family.d;
    let base = exact::real_from_rational(&pow(&(Rational::ONE + params.lambda()), d));
    let d_neg_c = exact::exp_real(&(-(exact::real_from_rational(c) * ln_usize(d))));
    let bound = base * exact::exp_real(&(d_neg_c - params.alpha_bar() * exact::real_from_rational(&ell)));
    Ok(FamilyBoundReport {
        ell_psi,
        whole: bound_check(z_psi(family, params), bound),
        split,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ContainerReport {
    pub side: Side,
    pub a: usize,
    pub b: usize,
    pub family_size: usize,
    /// `Σ_{A ∈ G_D(a,b)} ω(A)`.
    #[serde(with = "crate::exact::serde_rational")]
    pub lhs: Rational,
    pub side_size: usize,
    /// `−log(LHS/|D|)·log d/((b−a)α²)` when `b > a` and `LHS > 0`.
    #[serde(serialize_with = "serialize_opt_real")]
    pub implied_c: Option<Real>,
}

/// Total weight of `G_D(a, b)` and the constant it implies.
pub fn container_sum_report(
    g: &BipartiteGraph,
    side: Side,
    a: usize,
    b: usize,
    params: &ModelParams,
) -> Result<ContainerReport> {
    let family = if b < a {
        Vec::new()
    } else {
        polymer::enumerate_g_ab(g, side, a, b)?
    };
    let lhs = exact::sum(family.iter().map(|s| polymer::weight_of_set(g, params, s)));
    let side_size = g.n() / 2;
    let alpha = params.alpha();
    let implied_c = (b > a && lhs > Rational::ZERO && alpha > Rational::ZERO && g.d() > 1).then(|| {
        let log_ratio = exact::ln_rational(&(&lhs / Rational::from(side_size))).expect("positive");
        let denom = Rational::from(b - a) * &alpha * &alpha;
        -log_ratio * ln_usize(g.d()) / exact::real_from_rational(&denom)
    });
    Ok(ContainerReport {
        side,
        a,
        b,
        family_size: family.len(),
        lhs,
        side_size,
        implied_c,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NonpolymerReport {
    pub family_size: usize,
    /// `Σ_{I∈J} λ^{|I|}(1-p)^{|E(I)|}`.
    #[serde(with = "crate::exact::serde_rational")]
    pub weight: Rational,
    #[serde(with = "crate::exact::serde_rational")]
    pub z: Rational,
    #[serde(with = "crate::exact::serde_rational")]
    pub ratio: Rational,
    /// `−log(ratio)·d/n`, absent when the ratio is zero.
    #[serde(serialize_with = "serialize_opt_real")]
    pub exponent: Option<Real>,
}

pub fn nonpolymer_weight_report(
    g: &BipartiteGraph,
    params: &ModelParams,
    rho: &Rational,
    budget: &Budget,
) -> Result<NonpolymerReport> {
    let family = model::nonpolymer_family(g, rho, budget)?;
    let weight = exact::sum(family.iter().map(|i| model::ising_weight(g, params, i)));
    let z = model::exact_z(g, params, budget)?;
    let ratio = &weight / &z;
    let exponent = (ratio > Rational::ZERO).then(|| {
        -exact::ln_rational(&ratio).expect("positive") * exact::real(g.d() as i64) / exact::real(g.n() as i64)
    });
    Ok(NonpolymerReport {
        family_size: family.len(),
        weight,
        z,
        ratio,
        exponent,
    })
}

/// For every vertex `y` and every `X ⊆ N(y)` with `|X| > d/2`, compare
/// `|N(X)|` with `(d/C2)|X|`.
pub fn neighborhood_expansion_audit(g: &BipartiteGraph, c2: &Rational) -> Result<ConditionReport> {
    let d = g.d();
    if d > 20 {
        return Err(Error::Budget(format!("2^{d} subsets per vertex is too many")));
    }
    let mut sets = Vec::new();
    for y in 0..g.n() {
        let nbrs = g.neighbors(y);
        for mask in 1u32..1 << d {
            if 2 * mask.count_ones() as usize > d {
                sets.push(g.set((0..d).filter(|&j| mask & (1 << j) != 0).map(|j| nbrs[j])));
            }
        }
    }
    sets.sort();
    sets.dedup();
    let c2 = c2.clone();
    let condition = Condition {
        name: "neighbourhood expansion".into(),
        bound: Box::new(move |x| Some(exact::real_from_rational(&(Rational::from(d) / &c2 * Rational::from(x))))),
    };
    Ok(evaluate(g, &sets, &[condition]).remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;

    #[test]
    fn z_psi_examples() {
        let lam1 = ModelParams::new(int(1), int(1)).unwrap();
        let half = ModelParams::new(int(1), ratio(1, 2)).unwrap();
        let empty = PsiFamily::new(3, vec![vec![]]).unwrap();
        assert_eq!(z_psi(&empty, &half), int(8));
        let full = PsiFamily::new(3, vec![vec![1, 2, 3]]).unwrap();
        assert_eq!(z_psi(&full, &lam1), int(1));
        assert_eq!(z_psi(&PsiFamily::singletons(2), &half), ratio(9, 2));
    }

    #[test]
    fn ell_psi_examples() {
        assert_eq!(ell_psi(&PsiFamily::new(3, vec![vec![1], vec![2]]).unwrap()), 1);
        assert_eq!(ell_psi(&PsiFamily::new(3, vec![vec![1, 2, 3]]).unwrap()), 0);
        assert_eq!(ell_psi(&PsiFamily::new(3, vec![]).unwrap()), 3);
        assert!(PsiFamily::new(3, vec![vec![4]]).is_err());
        assert!(PsiFamily::new(3, vec![vec![1], vec![1]]).is_err());
    }

    #[test]
    fn family_bound_wrappers() {
        let p = ModelParams::new(int(1), int(1)).unwrap();
        let fam = PsiFamily::new(4, vec![vec![], vec![1]]).unwrap();
        assert!(family_bound_audit(&fam, &p, &int(1)).is_err());
        let r = split_bound_audit(&PsiFamily::singletons(4), &int(0), &p, &int(1)).unwrap();
        assert!(!r.hypotheses_hold);
        assert!(r.verdict.is_none());
        assert!(split_bound_audit(&PsiFamily::singletons(4), &int(1), &p, &int(1)).is_err());
    }

    #[test]
    fn container_on_c6() {
        let c6 = BipartiteGraph::cycle(6).unwrap();
        let p = ModelParams::new(int(1), ratio(1, 2)).unwrap();
        let r = container_sum_report(&c6, Side::Even, 1, 2, &p).unwrap();
        assert_eq!(r.lhs, ratio(27, 16));
        assert_eq!(r.side_size, 3);
        assert!(r.implied_c.is_some());
        let empty = container_sum_report(&c6, Side::Even, 2, 1, &p).unwrap();
        assert_eq!(empty.lhs, int(0));
    }

    #[test]
    fn property_ii_codegree() {
        let z = BipartiteGraph::even_torus(6, 2).unwrap();
        let r = check_property_ii(&z, &PropertyConstants::default(), 2, Mode::Exhaustive).unwrap();
        assert!(r.condition("IIb").unwrap().holds);
        assert!(!r.conditions.is_empty());
    }
}
