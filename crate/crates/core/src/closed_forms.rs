//! Closed-form expansion terms and the leading-order estimates built on them.

use serde::Serialize;

use crate::cluster;
use crate::error::{Error, Result};
use crate::exact::{self, binomial, int, pow, ratio, Rational, Real};
use crate::graph::{BipartiteGraph, Budget, Side};
use crate::model::{self, ModelParams};

/// `(2−p)/2`.
fn x_of(p: &Rational) -> Rational {
    (int(2) - p) / int(2)
}

/// `(1+(1−p)²)/2`.
fn y_of(p: &Rational) -> Rational {
    let q = Rational::ONE - p;
    (Rational::ONE + &q * &q) / int(2)
}

fn check_p(p: &Rational) -> Result<()> {
    if *p < Rational::ZERO || *p > Rational::ONE {
        return Err(Error::Domain(format!("p = {} outside [0, 1]", exact::format_rational(p))));
    }
    Ok(())
}

/// `L_{D,1} = (nλ/2)(1 − λp/(1+λ))^d`.
pub fn l1_closed(n: usize, d: usize, lambda: &Rational, p: &Rational) -> Rational {
    let base = Rational::ONE - lambda * p / (Rational::ONE + lambda);
    Rational::from(n) * lambda / int(2) * pow(&base, d)
}

/// `L₂` of the even torus `Z_m^t` at `λ = 1`.
pub fn l2_torus(m: usize, t: usize, p: &Rational) -> Result<Rational> {
    check_p(p)?;
    if m < 6 || m % 2 == 1 {
        return Err(Error::Regime(format!("torus formula needs even m >= 6, got {m}")));
    }
    if t == 0 {
        return Err(Error::Domain("t must be at least 1".into()));
    }
    let (x, y) = (x_of(p), y_of(p));
    let t_r = Rational::from(t);
    let bracket = -(int(2) * &t_r * &t_r + int(1)) * pow(&x, 4)
        + int(2) * &t_r * pow(&x, 2) * &y
        + int(2) * &t_r * (&t_r - int(1)) * &y * &y;
    Ok(pow(&Rational::from(m), t) / int(4) * pow(&x, 4 * t - 4) * bracket)
}

/// `L₂` of the middle-layer graph of `Q_{2d−1}` at `λ = 1`.
pub fn l2_midlayer(d: usize, p: &Rational) -> Result<Rational> {
    check_p(p)?;
    if d < 2 {
        return Err(Error::Domain(format!("middle layer formula needs d >= 2, got {d}")));
    }
    let x = x_of(p);
    let two_minus_p = int(2) - p;
    let inner = Rational::from((d - 1) * d) * p * p - &two_minus_p * &two_minus_p;
    Ok(binomial(2 * d as u64 - 1, d as u64 - 1) / int(8) * pow(&x, 2 * (d - 1)) * inner)
}

/// `L₂` of the `t`-fold Cartesian power of `K_{s,s}` at `λ = 1`.
pub fn l2_kss_product(s: usize, t: usize, p: &Rational) -> Result<Rational> {
    check_p(p)?;
    if s == 0 || t == 0 {
        return Err(Error::Domain("s and t must be at least 1".into()));
    }
    let (x, y) = (x_of(p), y_of(p));
    let half_n = pow(&Rational::from(2 * s), t) / int(2);
    let s_r = Rational::from(s);
    let pairs = binomial(t as u64, 2);
    let st = s * t;
    let first = &half_n / int(2) * &s_r * &s_r * &pairs * pow(&x, 2 * st - 4) * &y * &y;
    let second = &half_n / int(2) * Rational::from((s - 1) * t) * pow(&x, 2 * st - 2 * s) * pow(&y, s);
    let third = &half_n / int(2)
        * pow(&x, 2 * st)
        * (Rational::ONE + Rational::from((s - 1) * t) + &s_r * &s_r * &pairs);
    Ok(first + second - third)
}

/// `a(p) = (1+(1−p)²)²/(2−p)⁴ − 1/4`.
pub fn hypercube_a(p: &Rational) -> Rational {
    let q = Rational::ONE - p;
    let num = Rational::ONE + &q * &q;
    &num * &num / pow(&(int(2) - p), 4) - ratio(1, 4)
}

/// `L₂` of `Q_t` at `λ = 1` in the form `2^t x^{2t}(a(p)·C(t,2) − 1/4)`.
pub fn l2_hypercube(t: usize, p: &Rational) -> Result<Rational> {
    check_p(p)?;
    let x = x_of(p);
    Ok(pow(&int(2), t) * pow(&x, 2 * t) * (hypercube_a(p) * binomial(t as u64, 2) - ratio(1, 4)))
}

/// `2·2^{n/2}·exp(n(2−p)^d/2^{d+1})`, the leading estimate of `E[i(G_p)]`.
pub fn expected_count_estimate(n: usize, d: usize, p: &Rational) -> Result<Real> {
    check_p(p)?;
    let exponent = Rational::from(n) * pow(&(int(2) - p), d) / pow(&int(2), d + 1);
    let log = exact::ln_rational(&int(2))? * exact::real(n as i64 / 2 + 1) + exact::real_from_rational(&exponent);
    let log = if n % 2 == 1 {
        log + exact::ln_rational(&int(2))? / exact::real(2)
    } else {
        log
    };
    Ok(exact::exp_real(&log))
}

/// `2 − 2^{1 − ℓ/(k+1)}`.
pub fn percolation_threshold(k: usize, ell: &Rational) -> Result<Real> {
    if k == 0 || *ell < Rational::ZERO {
        return Err(Error::Domain("need k >= 1 and ell >= 0".into()));
    }
    let e = Rational::ONE - ell / Rational::from(k + 1);
    let two_pow = exact::exp_real(&(exact::ln_rational(&int(2))? * exact::real_from_rational(&e)));
    Ok(exact::real(2) - two_pow)
}

/// `2(1+λ)^{2^{d−1}} exp((λ/2)(2/(1+λ))^d)`, with the `1+o(1)` factor dropped.
pub fn galvin_estimate(d: usize, lambda: &Rational) -> Result<Real> {
    if *lambda <= Rational::ZERO || d == 0 {
        return Err(Error::Domain("need lambda > 0 and d >= 1".into()));
    }
    let one_plus = Rational::ONE + lambda;
    let inner = lambda / int(2) * pow(&(int(2) / &one_plus), d);
    let sides = exact::real_from_rational(&pow(&int(2), d - 1));
    let log = exact::ln_rational(&int(2))? + sides * exact::ln_rational(&one_plus)? + exact::real_from_rational(&inner);
    Ok(exact::exp_real(&log))
}

/// Leading exponent and per-size terms of the expansion of `log Z`.
#[derive(Clone, Debug, Serialize)]
pub struct ExpansionEstimate {
    pub n: usize,
    pub d: usize,
    #[serde(with = "crate::exact::serde_rational")]
    pub lambda: Rational,
    #[serde(with = "crate::exact::serde_rational")]
    pub alpha_tilde: Rational,
    #[serde(with = "crate::exact::serde_rational")]
    pub leading_exponent: Rational,
    /// `L_1, L_2, …`, when supplied.
    #[serde(serialize_with = "serialize_terms")]
    pub terms: Vec<Rational>,
}

fn serialize_terms<S: serde::Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(exact::format_rational))
}

impl ExpansionEstimate {
    pub fn new(n: usize, d: usize, params: &ModelParams) -> Self {
        ExpansionEstimate {
            n,
            d,
            lambda: params.lambda().clone(),
            alpha_tilde: params.alpha_tilde(),
            leading_exponent: l1_closed(n, d, params.lambda(), params.p()),
            terms: Vec::new(),
        }
    }

    pub fn with_terms(mut self, terms: Vec<Rational>) -> Self {
        self.terms = terms;
        self
    }

    /// `n·d^{2(j−1)}·λ^j·α̃^{−dj}`, the magnitude envelope of `L_j` up to constants.
    pub fn term_envelope(&self, j: usize) -> Rational {
        let j = j.max(1);
        Rational::from(self.n) * pow(&Rational::from(self.d), 2 * (j - 1)) * pow(&self.lambda, j)
            / pow(&self.alpha_tilde, self.d * j)
    }
}

/// A family with an explicit `L₂` formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Torus { m: usize, t: usize },
    Midlayer { d: usize },
    Kss { s: usize, t: usize },
    Hypercube { t: usize },
}

impl Family {
    pub fn l2(&self, p: &Rational) -> Result<Rational> {
        match *self {
            Family::Torus { m, t } => l2_torus(m, t, p),
            Family::Midlayer { d } => l2_midlayer(d, p),
            Family::Kss { s, t } => l2_kss_product(s, t, p),
            Family::Hypercube { t } => l2_hypercube(t, p),
        }
    }

    pub fn graph(&self, budget: &Budget) -> Result<BipartiteGraph> {
        match *self {
            Family::Torus { m, t } => BipartiteGraph::even_torus_within(m, t, budget),
            Family::Midlayer { d } => BipartiteGraph::middle_layer_within(d, budget),
            Family::Kss { s, t } => {
                let factor = BipartiteGraph::complete_bipartite_within(s, budget)?;
                BipartiteGraph::cartesian_product_within(&vec![factor; t], budget)
            }
            Family::Hypercube { t } => BipartiteGraph::hypercube_within(t, budget),
        }
    }
}

/// Every 2-linked set of size at most 2 on either side is a polymer.
pub fn l2_regime_ok(g: &BipartiteGraph, rho: &Rational) -> Result<bool> {
    for side in Side::BOTH {
        let side_len = g.side_vertices(side).len();
        for a in g.two_linked_subsets_of_side(side, 2) {
            let closure = g.closure(&a, side)?;
            if !model::within_cutoff(closure.len(), side_len, rho) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Formula value next to the cluster-expansion value on the odd side.
#[derive(Clone, Debug, Serialize)]
pub struct L2Comparison {
    #[serde(flatten)]
    pub family: Family,
    #[serde(with = "crate::exact::serde_rational")]
    pub p: Rational,
    #[serde(with = "crate::exact::serde_rational")]
    pub formula_value: Rational,
    #[serde(with = "crate::exact::serde_rational")]
    pub oracle_value: Rational,
    /// `L₂` computed on the even side, which must agree by symmetry.
    #[serde(with = "crate::exact::serde_rational")]
    pub oracle_value_even: Rational,
    pub regime_ok: bool,
}

impl L2Comparison {
    pub fn agrees(&self) -> bool {
        self.formula_value == self.oracle_value
    }
}

pub fn verify_l2(family: Family, p: &Rational, rho: &Rational, budget: &Budget) -> Result<L2Comparison> {
    let formula_value = family.l2(p)?;
    let g = family.graph(budget)?;
    let params = ModelParams::new(int(1), p.clone())?;
    let oracle_value = cluster::l_k(&g, Side::Odd, &params, rho, 2, budget)?;
    let oracle_value_even = cluster::l_k(&g, Side::Even, &params, rho, 2, budget)?;
    Ok(L2Comparison {
        family,
        p: p.clone(),
        formula_value,
        oracle_value,
        oracle_value_even,
        regime_ok: l2_regime_ok(&g, rho)?,
    })
}
