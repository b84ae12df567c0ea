mod common;

use polyexp_core::audit::{self, PsiFamily};
use polyexp_core::closed_forms::{self, Family};
use polyexp_core::cluster::{self, SmallGraph};
use polyexp_core::exact::{self, int, pow, ratio};
use polyexp_core::model::{self, MuHatSampler};
use polyexp_core::polymer::{self, PolymerSystem};
use polyexp_core::{BipartiteGraph, Budget, ModelParams, Rational, Side};

fn rho() -> Rational {
    model::default_rho()
}

fn params(lambda: Rational, p: Rational) -> ModelParams {
    ModelParams::new(lambda, p).unwrap()
}

#[test]
fn ursell_matches_recurrence_on_all_small_graphs() {
    for n in 1..=5usize {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        for mask in 0u32..1 << pairs.len() {
            let edges = pairs.iter().enumerate().filter(|(j, _)| mask & (1 << j) != 0).map(|(_, &e)| e).collect();
            let h = SmallGraph::new(n, edges).unwrap();
            assert_eq!(cluster::ursell(&h).unwrap(), common::ursell_recurrence(&h), "{h:?}");
        }
    }
}

#[test]
fn cluster_terms_match_log_series() {
    let budget = Budget::default();
    let k22 = BipartiteGraph::complete_bipartite(2).unwrap();
    let graphs = [
        BipartiteGraph::cycle(6).unwrap(),
        BipartiteGraph::cycle(8).unwrap(),
        BipartiteGraph::hypercube(3).unwrap(),
        BipartiteGraph::cartesian_product(&[k22.clone(), k22]).unwrap(),
    ];
    for g in &graphs {
        for prm in [params(int(1), ratio(1, 2)), params(ratio(1, 3), int(1))] {
            for side in Side::BOTH {
                let system = PolymerSystem::build(g, side, &prm, &rho(), 3, &budget).unwrap();
                let clusters = cluster::enumerate_clusters(&system, 3).unwrap();
                let ours = cluster::l_terms(&clusters, 3);
                let oracle = common::l_terms_from_log(g, side, &prm, &rho(), 3);
                assert_eq!(ours, oracle, "{g:?} {side}");
            }
        }
    }
}

/// Σ over ordered tuples with connected incompatibility graph, straight from
/// the definition of a cluster.
fn ordered_tuple_l(g: &BipartiteGraph, side: Side, prm: &ModelParams, k: usize) -> Rational {
    let polymers = polymer::enumerate_polymers(g, side, &rho(), k).unwrap();
    let weights: Vec<Rational> = polymers.iter().map(|p| polymer::polymer_weight(g, prm, p)).collect();
    let mut total = Rational::ZERO;
    fn go(
        tuple: &mut Vec<usize>,
        size: usize,
        k: usize,
        g: &BipartiteGraph,
        polymers: &[polymer::Polymer],
        weights: &[Rational],
        total: &mut Rational,
    ) {
        if size == k {
            let n = tuple.len();
            let mut edges = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    let (x, y) = (&polymers[tuple[a]], &polymers[tuple[b]]);
                    if !polymer::compatible(g, x, y).unwrap() {
                        edges.push((a, b));
                    }
                }
            }
            let h = SmallGraph::new(n, edges).unwrap();
            let phi = common::ursell_recurrence(&h);
            *total += phi * exact::product(tuple.iter().map(|&i| weights[i].clone()));
            return;
        }
        for i in 0..polymers.len() {
            if size + polymers[i].len() <= k {
                tuple.push(i);
                go(tuple, size + polymers[i].len(), k, g, polymers, weights, total);
                tuple.pop();
            }
        }
    }
    go(&mut Vec::new(), 0, k, g, &polymers, &weights, &mut total);
    total
}

#[test]
fn cluster_terms_match_ordered_tuples_on_c6() {
    let c6 = BipartiteGraph::cycle(6).unwrap();
    let budget = Budget::default();
    let prm = params(int(1), ratio(1, 2));
    for k in 1..=4 {
        let ours = cluster::l_k(&c6, Side::Odd, &prm, &rho(), k, &budget).unwrap();
        assert_eq!(ours, ordered_tuple_l(&c6, Side::Odd, &prm, k), "k = {k}");
    }
}

#[test]
fn xi_series_matches_compatible_collections() {
    let g = BipartiteGraph::hypercube(3).unwrap();
    let prm = params(ratio(2, 3), ratio(3, 4));
    for side in Side::BOTH {
        let system = PolymerSystem::build(&g, side, &prm, &rho(), 4, &Budget::default()).unwrap();
        let polymers = polymer::enumerate_polymers(&g, side, &rho(), 4).unwrap();
        assert_eq!(system.xi_series(4).unwrap(), common::xi_coefficients(&g, &polymers, &prm, 4));
    }
}

#[test]
fn tv_matches_direct_definition() {
    let budget = Budget::default();
    for g in [BipartiteGraph::cycle(6).unwrap(), BipartiteGraph::hypercube(3).unwrap()] {
        for prm in [params(int(1), int(1)), params(ratio(2, 3), ratio(1, 2))] {
            let mu = model::mu_table(&g, &prm, &budget).unwrap();
            let hat = model::mu_hat_table(&g, &prm, &rho(), &budget).unwrap();
            assert_eq!(model::tv_distance(&mu, &hat).unwrap(), common::tv_mu_mu_hat(&g, &prm, &rho()));
        }
    }
}

#[test]
fn capture_matches_definition() {
    let g = BipartiteGraph::hypercube(3).unwrap();
    for i in common::all_subsets(&g) {
        for side in Side::BOTH {
            assert_eq!(model::captured(&g, &i, side, &rho()), common::captured(&g, &i, side, &rho()));
        }
    }
}

/// Pearson statistic of sampler draws against μ̂* at parameters with a wide
/// outcome space; the 0.999 quantile of χ² with ≤ 127 degrees of freedom is below 190.
#[test]
fn sampler_goodness_of_fit() {
    let budget = Budget::default();
    let c6 = BipartiteGraph::cycle(6).unwrap();
    let prm = params(ratio(1, 2), ratio(1, 2));
    let star = model::mu_hat_star_table(&c6, &prm, &rho(), &budget).unwrap();
    let draws = MuHatSampler::new(&c6, &prm, &rho(), &budget).unwrap().sample_many(11, 50_000);
    let counts = common::histogram(&draws);
    let n = draws.len() as f64;
    let mut chi = 0.0;
    for (key, w) in star.entries() {
        let prob = exact::rational_to_f64(w);
        if prob == 0.0 {
            assert!(!counts.contains_key(key));
            continue;
        }
        let observed = *counts.get(key).unwrap_or(&0) as f64;
        chi += (observed - n * prob).powi(2) / (n * prob);
    }
    assert!(chi < 190.0, "chi-square {chi}");
}

#[test]
fn torus_bracket_coefficient() {
    for t in [2usize, 3] {
        let ti = t as i64;
        let coefficient = int(6 * ti * ti - 4 * ti - 1) / pow(&int(2), 4 * t + 2);
        for m in [6usize, 8] {
            let want = coefficient.clone() * pow(&Rational::from(m), t);
            assert_eq!(closed_forms::l2_torus(m, t, &int(1)).unwrap(), want);
        }
    }
}

#[test]
fn threshold_values() {
    let mid = exact::to_f64(&closed_forms::percolation_threshold(3, &int(2)).unwrap());
    assert!((mid - 0.586).abs() < 1e-3);
    let two_term = exact::to_f64(&closed_forms::percolation_threshold(2, &int(2)).unwrap());
    assert!((two_term - 0.74).abs() < 5e-3);
    let k2 = exact::to_f64(&closed_forms::percolation_threshold(2, &int(1)).unwrap());
    assert!((k2 - (2.0 - 2f64.powf(2.0 / 3.0))).abs() < 1e-12);
}

#[test]
fn estimates_against_exact_counts() {
    let budget = Budget::default();
    let q3 = BipartiteGraph::hypercube(3).unwrap();
    let count = model::count_independent_sets(&q3, &budget).unwrap() as f64;
    let est = exact::to_f64(&closed_forms::expected_count_estimate(8, 3, &int(1)).unwrap());
    assert!(est / count > 0.5 && est / count < 2.0);
    let z = exact::rational_to_f64(&model::exact_z(&q3, &params(int(1), int(1)), &budget).unwrap());
    let galvin = exact::to_f64(&closed_forms::galvin_estimate(3, &int(1)).unwrap());
    assert!(galvin / z > 0.5 && galvin / z < 2.0);
    let at_zero = exact::to_f64(&closed_forms::expected_count_estimate(4, 2, &int(0)).unwrap());
    assert!((at_zero - 2.0 * 4.0 * 2f64.exp()).abs() < 1e-9);
}

#[test]
fn l2_families_are_side_symmetric() {
    let budget = Budget::default();
    for family in [Family::Torus { m: 6, t: 2 }, Family::Hypercube { t: 3 }, Family::Kss { s: 3, t: 2 }] {
        let c = closed_forms::verify_l2(family, &ratio(1, 3), &rho(), &budget).unwrap();
        assert_eq!(c.oracle_value, c.oracle_value_even, "{family:?}");
    }
}

#[test]
fn hypercube_and_kss_formulas_in_regime() {
    let budget = Budget::default();
    for family in [Family::Hypercube { t: 4 }, Family::Kss { s: 3, t: 2 }] {
        for p in [int(1), ratio(1, 3)] {
            let c = closed_forms::verify_l2(family, &p, &rho(), &budget).unwrap();
            assert!(c.regime_ok, "{family:?}");
            assert_eq!(c.formula_value, c.oracle_value, "{family:?} p={}", exact::format_rational(&p));
        }
    }
}

#[test]
fn kp_tail_with_admissible_functions() {
    let budget = Budget::default();
    let c6 = BipartiteGraph::cycle(6).unwrap();
    let prm = params(ratio(1, 10), int(1));
    let r = cluster::kp_tail_report(&c6, Side::Odd, &prm, &rho(), &ratio(1, 2), &ratio(1, 10), 3, &budget).unwrap();
    assert!(r.verified(), "{r:?}");
}

#[test]
fn z_psi_on_singletons_is_explicit() {
    let prm = params(int(1), ratio(1, 2));
    let fam = PsiFamily::singletons(4);
    let want = int(4) * pow(&ratio(3, 2), 4);
    assert_eq!(audit::z_psi(&fam, &prm), want);
}
