//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use polyexp_core::audit::{self, Mode, PropertyConstants};
use polyexp_core::closed_forms::{self, Family};
use polyexp_core::cluster::{self, SmallGraph};
use polyexp_core::exact::{self, int, ratio};
use polyexp_core::model::{self, MuHatSampler};
use polyexp_core::polymer;
use polyexp_core::{BipartiteGraph, Budget, MeasureTable, ModelParams, Rational, Side};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn params(lambda: Rational, p: Rational) -> ModelParams {
    ModelParams::new(lambda, p).unwrap()
}

fn rho() -> Rational {
    model::default_rho()
}

fn fmt(r: &Rational) -> String {
    exact::format_rational(r)
}

fn percolation_identity() -> Outcome {
    let budget = Budget::default();
    let graphs = [
        ("C4", BipartiteGraph::cycle(4).unwrap()),
        ("C6", BipartiteGraph::cycle(6).unwrap()),
        ("Q3", BipartiteGraph::hypercube(3).unwrap()),
        ("K33", BipartiteGraph::complete_bipartite(3).unwrap()),
        ("midlayer2", BipartiteGraph::middle_layer(2).unwrap()),
    ];
    let mut checked = 0;
    for (name, g) in &graphs {
        for lambda in [int(1), ratio(2, 3)] {
            for p in [ratio(1, 2), ratio(3, 4), int(1)] {
                let prm = params(lambda.clone(), p.clone());
                let lhs = model::percolation_expectation_exact(g, &prm, &budget).unwrap();
                let rhs = model::exact_z(g, &prm, &budget).unwrap();
                ensure(lhs == rhs, || {
                    format!("{name} λ={} p={}: {} != {}", fmt(&lambda), fmt(&p), fmt(&lhs), fmt(&rhs))
                })?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} (graph, λ, p) cases"))
}

fn hard_core_counts() -> Outcome {
    let budget = Budget::default();
    let hc = params(int(1), int(1));
    let mut found = Vec::new();
    for d in 1..=3 {
        let q = BipartiteGraph::hypercube(d).unwrap();
        let via_z = model::exact_z(&q, &hc, &budget).unwrap();
        let via_count = model::count_independent_sets(&q, &budget).unwrap();
        let via_backtrack = common::count_independent_backtracking(&q);
        ensure(via_z == Rational::from(via_count) && via_count == via_backtrack, || {
            format!("Q{d}: Z = {}, count = {via_count}, backtracking = {via_backtrack}", fmt(&via_z))
        })?;
        found.push(via_count);
    }
    ensure(found[0] == 3 && found[1] == 7, || format!("i(Q1), i(Q2) = {}, {}", found[0], found[1]))?;
    Ok(format!("i(Q1..Q3) = {found:?}"))
}

fn ursell_values() -> Outcome {
    let cases = [
        ("vertex", SmallGraph::complete(1), int(1)),
        ("edge", SmallGraph::complete(2), ratio(-1, 2)),
        ("P3", SmallGraph::path(3), ratio(1, 6)),
        ("K3", SmallGraph::complete(3), ratio(1, 3)),
    ];
    for (name, h, want) in &cases {
        let got = cluster::ursell(h).unwrap();
        let second = common::ursell_recurrence(h);
        ensure(got == *want && second == *want, || {
            format!("{name}: {} and {} vs {}", fmt(&got), fmt(&second), fmt(want))
        })?;
    }
    Ok("1, -1/2, 1/6, 1/3".into())
}

fn l1_closed_form() -> Outcome {
    let budget = Budget::default();
    let graphs = [
        ("C6", BipartiteGraph::cycle(6).unwrap()),
        ("Q3", BipartiteGraph::hypercube(3).unwrap()),
        ("Q4", BipartiteGraph::hypercube(4).unwrap()),
        ("Z6^2", BipartiteGraph::even_torus(6, 2).unwrap()),
        ("midlayer3", BipartiteGraph::middle_layer(3).unwrap()),
    ];
    let pairs = [(int(1), ratio(1, 2)), (ratio(1, 3), int(1)), (ratio(2, 3), ratio(3, 4)), (int(2), ratio(1, 5))];
    for (name, g) in &graphs {
        for (lambda, p) in &pairs {
            let prm = params(lambda.clone(), p.clone());
            let want = closed_forms::l1_closed(g.n(), g.d(), lambda, p);
            for side in Side::BOTH {
                let got = cluster::l_k(g, side, &prm, &rho(), 1, &budget).unwrap();
                ensure(got == want, || {
                    format!("{name} {side} λ={} p={}: {} != {}", fmt(lambda), fmt(p), fmt(&got), fmt(&want))
                })?;
            }
        }
    }
    Ok("5 graphs × 4 (λ, p) × 2 sides".into())
}

fn l2_closed_forms() -> Outcome {
    let budget = Budget::default();
    let mut lines = Vec::new();
    for family in [Family::Torus { m: 6, t: 2 }, Family::Midlayer { d: 3 }, Family::Kss { s: 2, t: 2 }] {
        for p in [int(1), ratio(1, 2)] {
            let c = closed_forms::verify_l2(family, &p, &rho(), &budget).unwrap();
            ensure(c.regime_ok && c.agrees() && c.oracle_value_even == c.oracle_value, || {
                format!(
                    "{family:?} p={}: formula {} oracle {} / {} regime_ok={}",
                    fmt(&p),
                    fmt(&c.formula_value),
                    fmt(&c.oracle_value),
                    fmt(&c.oracle_value_even),
                    c.regime_ok
                )
            })?;
        }
    }
    let torus1 = closed_forms::verify_l2(Family::Torus { m: 6, t: 1 }, &int(1), &rho(), &budget).unwrap();
    ensure(
        !torus1.regime_ok && torus1.formula_value == ratio(3, 32) && torus1.oracle_value == ratio(-9, 32),
        || format!("torus t=1: formula {} oracle {}", fmt(&torus1.formula_value), fmt(&torus1.oracle_value)),
    )?;
    lines.push(format!(
        "torus(6,1): {} vs {}",
        fmt(&torus1.formula_value),
        fmt(&torus1.oracle_value)
    ));
    let c6 = BipartiteGraph::cycle(6).unwrap();
    for p in [int(1), ratio(1, 2)] {
        let mid2 = closed_forms::verify_l2(Family::Midlayer { d: 2 }, &p, &rho(), &budget).unwrap();
        let reference = common::l_terms_from_log(&c6, Side::Odd, &params(int(1), p.clone()), &rho(), 2)[2].clone();
        ensure(
            !mid2.regime_ok && mid2.formula_value != mid2.oracle_value && mid2.oracle_value == reference,
            || {
                format!(
                    "midlayer(2) p={}: formula {} oracle {} log-series {}",
                    fmt(&p),
                    fmt(&mid2.formula_value),
                    fmt(&mid2.oracle_value),
                    fmt(&reference)
                )
            },
        )?;
        lines.push(format!(
            "midlayer(2) p={}: {} vs {}",
            fmt(&p),
            fmt(&mid2.formula_value),
            fmt(&mid2.oracle_value)
        ));
    }
    Ok(lines.join("; "))
}

fn hypercube_specialization() -> Outcome {
    let ps = [int(0), ratio(1, 3), ratio(1, 2), ratio(3, 4), int(1)];
    for t in 2..=4 {
        for p in &ps {
            let kss = closed_forms::l2_kss_product(1, t, p).unwrap();
            let cube = closed_forms::l2_hypercube(t, p).unwrap();
            ensure(kss == cube, || format!("t={t} p={}: {} != {}", fmt(p), fmt(&kss), fmt(&cube)))?;
        }
    }
    Ok("t ∈ {2,3,4}, 5 values of p".into())
}

fn z_hat_identity() -> Outcome {
    let budget = Budget::default();
    for (name, g) in [("C6", BipartiteGraph::cycle(6).unwrap()), ("Q3", BipartiteGraph::hypercube(3).unwrap())] {
        for (lambda, p) in [(int(1), ratio(1, 2)), (ratio(2, 3), int(1))] {
            let prm = params(lambda, p);
            let from_polymers = polymer::z_hat_from_polymers(&g, &prm, &rho(), &budget).unwrap();
            let dec = model::decomposition(&g, &prm, &rho(), &budget).unwrap();
            ensure(from_polymers == dec.z_hat, || {
                format!("{name}: {} != {}", fmt(&from_polymers), fmt(&dec.z_hat))
            })?;
            ensure(dec.identity_holds(), || format!("{name}: Z = Ẑ − B + J fails"))?;
        }
    }
    Ok("C6, Q3".into())
}

fn kp_tail() -> Outcome {
    let budget = Budget::default();
    let c6 = BipartiteGraph::cycle(6).unwrap();
    let prm = params(ratio(1, 10), int(1));
    let tenth = ratio(1, 10);
    let mut notes = Vec::new();
    for side in Side::BOTH {
        let r = cluster::kp_tail_report(&c6, side, &prm, &rho(), &tenth, &tenth, 3, &budget).unwrap();
        let worst = r.kp.worst.map(|i| exact::to_f64(&r.kp.margins[i])).unwrap_or(0.0);
        let tails: Vec<String> = r
            .rows
            .iter()
            .map(|row| format!("k={} {:.4}≤{:.4}", row.k, exact::to_f64(&row.residual), exact::to_f64(&row.bound)))
            .collect();
        notes.push(format!("{side}: kp={} worst margin {worst:.4}, {}", r.kp.holds, tails.join(", ")));
        ensure(r.verified(), || notes.join("; "))?;
    }
    Ok(notes.join("; "))
}

fn truncation_convergence() -> Outcome {
    let budget = Budget::default();
    let q3 = BipartiteGraph::hypercube(3).unwrap();
    let prm = params(ratio(1, 20), int(1));
    let mut notes = Vec::new();
    for side in Side::BOTH {
        let r = cluster::log_xi_truncation_report(&q3, side, &prm, &rho(), 3, &budget).unwrap();
        let res: Vec<f64> = r.rows.iter().map(|row| exact::to_f64(&row.residual)).collect();
        ensure(r.rows.len() == 3 && r.residuals_decreasing(), || format!("{side}: residuals {res:?}"))?;
        notes.push(format!("{side}: {:?}", res.iter().map(|r| format!("{r:.3e}")).collect::<Vec<_>>()));
    }
    Ok(notes.join("; "))
}

fn measures() -> Outcome {
    let budget = Budget::default();
    let c6 = BipartiteGraph::cycle(6).unwrap();
    let prm = params(int(1), ratio(1, 2));
    let mu = model::mu_table(&c6, &prm, &budget).unwrap();
    let mu_hat = model::mu_hat_table(&c6, &prm, &rho(), &budget).unwrap();
    let tv = model::tv_distance(&mu, &mu_hat).unwrap();
    let oracle = common::tv_mu_mu_hat(&c6, &prm, &rho());
    ensure(tv == oracle, || format!("tv {} vs oracle {}", fmt(&tv), fmt(&oracle)))?;

    let sample_prm = params(int(1), int(1));
    let star = model::mu_hat_star_table(&c6, &sample_prm, &rho(), &budget).unwrap();
    let sampler = MuHatSampler::new(&c6, &sample_prm, &rho(), &budget).unwrap();
    let draws = sampler.sample_many(2024, 100_000);
    let empirical = MeasureTable::empirical(&star, draws).unwrap();
    let sample_tv = model::tv_distance(&star, &empirical).unwrap();
    let sample_tv_f = exact::rational_to_f64(&sample_tv);
    ensure(sample_tv < ratio(1, 100), || format!("empirical TV {sample_tv_f:.5}"))?;
    Ok(format!("tv(μ, μ̂) = {}, empirical TV {sample_tv_f:.5}", fmt(&tv)))
}

fn mc_estimator() -> Outcome {
    let budget = Budget::default();
    let q3 = BipartiteGraph::hypercube(3).unwrap();
    let prm = params(int(1), ratio(1, 2));
    let exact_value = model::percolation_expectation_exact(&q3, &prm, &budget).unwrap();
    let a = model::percolation_mc(&q3, &prm, 100_000, 7, &budget).unwrap();
    let b = model::percolation_mc(&q3, &prm, 100_000, 7, &budget).unwrap();
    ensure(a.mean.to_bits() == b.mean.to_bits() && a.stderr.to_bits() == b.stderr.to_bits(), || {
        "repeat run differs".into()
    })?;
    let target = exact::rational_to_f64(&exact_value);
    let z = (a.mean - target).abs() / a.stderr;
    ensure(z <= 4.0, || format!("mean {} exact {target} z = {z:.2}", a.mean))?;
    Ok(format!("mean {:.4} exact {target:.4} |z| = {z:.2}", a.mean))
}

fn isoperimetry() -> Outcome {
    let mut notes = Vec::new();
    for (name, g) in [
        ("Q4", BipartiteGraph::hypercube(4).unwrap()),
        ("Z6^2", BipartiteGraph::even_torus(6, 2).unwrap()),
    ] {
        let constants = PropertyConstants {
            c1: Rational::from(g.max_codegree()),
            ..PropertyConstants::default()
        };
        let report = audit::check_property_i(&g, &constants, 5, Mode::Exhaustive).unwrap();
        let ia1 = report.condition("Ia(1)").unwrap();
        ensure(ia1.holds, || format!("{name}: Ia(1) violated by {:?}", ia1.witness))?;
        notes.push(format!("{name}: Ia(1) over {} sets", ia1.sets_checked));
    }
    let k22 = BipartiteGraph::complete_bipartite(2).unwrap();
    let k33 = BipartiteGraph::complete_bipartite(3).unwrap();
    let c6 = BipartiteGraph::cycle(6).unwrap();
    let products = [
        ("K22^2", BipartiteGraph::cartesian_product(&[k22.clone(), k22.clone()]).unwrap()),
        ("K22^3", BipartiteGraph::cartesian_product(&[k22.clone(), k22.clone(), k22]).unwrap()),
        ("K33^2", BipartiteGraph::cartesian_product(&[k33.clone(), k33]).unwrap()),
        ("C6^2", BipartiteGraph::cartesian_product(&[c6.clone(), c6]).unwrap()),
    ];
    for (name, g) in &products {
        let r = audit::check_product_iso(g, 2, Mode::Exhaustive).unwrap();
        ensure(r.codegree_holds, || format!("{name}: codegree {} > s = {}", r.max_codegree, r.s))?;
    }
    notes.push("product codegree ≤ s on 4 products".into());
    Ok(notes.join("; "))
}

fn polymer_weights() -> Outcome {
    let q4 = BipartiteGraph::hypercube(4).unwrap();
    let mut count = 0;
    for (lambda, p) in [(int(1), ratio(1, 2)), (ratio(1, 3), int(1)), (int(2), ratio(3, 4))] {
        let prm = params(lambda, p);
        for side in Side::BOTH {
            for a in polymer::enumerate_polymers(&q4, side, &rho(), 3).unwrap() {
                let product = polymer::polymer_weight(&q4, &prm, &a);
                let literal = polymer::polymer_weight_literal(&q4, &prm, &a).unwrap();
                ensure(product == literal, || {
                    format!("{:?}: {} != {}", a.vertices.to_vec(), fmt(&product), fmt(&literal))
                })?;
                ensure(polymer::weight_bound_check(&q4, &prm, &a), || {
                    format!("weight bound fails for {:?}", a.vertices.to_vec())
                })?;
                count += 1;
            }
        }
    }
    Ok(format!("{count} (polymer, parameter) pairs"))
}

fn psi_approximation() -> Outcome {
    let mut count = 0;
    for g in [BipartiteGraph::cycle(6).unwrap(), BipartiteGraph::hypercube(3).unwrap()] {
        let d = g.d();
        let mut psis = vec![1, d / 2];
        psis.dedup();
        for side in Side::BOTH {
            for a in polymer::enumerate_polymers(&g, side, &rho(), g.n() / 2).unwrap() {
                let f = g.neighborhood(&a.vertices);
                let h = g.closure(&a.vertices, side).unwrap();
                for &psi in &psis {
                    let ok = polymer::is_psi_approximation(&g, side, &f, &h, &a.vertices, psi).unwrap();
                    let facts = polymer::approximation_facts(&g, side, &f, &h, &a.vertices, psi).unwrap();
                    ensure(ok && facts.size_bound && facts.edge_bound, || {
                        format!("{:?} ψ={psi}: approx {ok}, facts {facts:?}", a.vertices.to_vec())
                    })?;
                    count += 1;
                }
            }
        }
    }
    Ok(format!("{count} (polymer, ψ) pairs"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 14] = [
        ("percolation identity", percolation_identity),
        ("hard-core counts", hard_core_counts),
        ("Ursell values", ursell_values),
        ("L1 closed form", l1_closed_form),
        ("L2 closed forms", l2_closed_forms),
        ("hypercube specialization", hypercube_specialization),
        ("Ẑ identity", z_hat_identity),
        ("KP tail bound", kp_tail),
        ("truncation convergence", truncation_convergence),
        ("measures", measures),
        ("MC estimator", mc_estimator),
        ("isoperimetry", isoperimetry),
        ("polymer weight dual computation", polymer_weights),
        ("ψ-approximation", psi_approximation),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| Err(e.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name} ({secs:.2}s): {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL {name} ({secs:.2}s): {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
