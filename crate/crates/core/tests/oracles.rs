mod common;

use common::*;
use mmnetloc::baseline_bb::{bb_solve, BBConfig, ConsensusMode};
use mmnetloc::cost::{cost_original, cost_z, grad_z, project_z, reduce_to_x};
use mmnetloc::mm::{lipschitz_bound, mm_step};
use mmnetloc::StateZ;
use rand::Rng;

#[test]
fn matrix_free_cost_and_gradient_match_dense_assembly() {
    for seed in 0..200 {
        for n in 1..=5 {
            let p = 2 + (seed as usize + n) % 2;
            let (net, _) = random_instance(seed * 10 + n as u64, n, p);
            let dense = dense_quadratic(&net);
            let mut rng = rng(seed);
            let z = random_z(&mut rng, &net, 2.0);
            let c = cost_z(&net, &z);
            assert!(
                (c - dense.cost(&z)).abs() <= 1e-12 * c.max(1.0),
                "seed {seed} n {n}"
            );
            let g = grad_z(&net, &z).to_flat();
            assert!(
                max_abs_diff(&g, &dense.grad(&z)) <= 1e-12,
                "seed {seed} n {n}"
            );
        }
    }
}

#[test]
fn gradient_matches_finite_differences() {
    for seed in 0..50 {
        let (net, _) = random_instance(1000 + seed, 4, 2);
        let z = random_z(&mut rng(seed), &net, 1.0);
        let fd = finite_difference(
            |v| cost_z(&net, &StateZ::from_flat(&net, v)),
            &z.to_flat(),
            1e-5,
        );
        let g = grad_z(&net, &z).to_flat();
        let rel = max_abs_diff(&fd, &g) / norm(&g).max(1.0);
        assert!(rel <= 1e-6, "seed {seed}: {rel}");
    }
}

#[test]
fn lipschitz_bound_dominates_largest_eigenvalue() {
    for seed in 0..200 {
        let n = 1 + (seed as usize % 12);
        let (net, _) = random_instance(5000 + seed, n, 2 + seed as usize % 2);
        let dense = dense_quadratic(&net);
        let exact = dense.lambda_max_exact();
        let power = dense.lambda_max_power(5000);
        assert!(
            power <= exact + 1e-9 && power >= 0.99 * exact,
            "seed {seed}: {power} vs {exact}"
        );
        assert!(lipschitz_bound(&net) >= exact - 1e-9, "seed {seed}");
    }
}

#[test]
fn quadratic_upper_bound_holds() {
    let mut r = rng(77);
    for pair in 0..10_000u64 {
        let n = 1 + (pair % 8) as usize;
        let (net, _) = random_instance(pair % 64, n, 2 + (pair % 2) as usize);
        let l = lipschitz_bound(&net);
        let z = random_z(&mut r, &net, 3.0);
        let zp = random_z(&mut r, &net, 3.0);
        let g = grad_z(&net, &z);
        let diff: Vec<f64> = zp
            .to_flat()
            .iter()
            .zip(z.to_flat())
            .map(|(a, b)| a - b)
            .collect();
        let lin: f64 = g.to_flat().iter().zip(&diff).map(|(a, b)| a * b).sum();
        let bound = cost_z(&net, &z) + lin + 0.5 * l * diff.iter().map(|d| d * d).sum::<f64>();
        let value = cost_z(&net, &zp);
        assert!(value <= bound + 1e-10 * bound.abs().max(1.0), "pair {pair}");
    }
}

#[test]
fn reformulated_cost_agrees_with_original_on_reduced_points() {
    let mut r = rng(5);
    for k in 0..10_000u64 {
        let n = 1 + (k % 10) as usize;
        let (net, meas) = random_instance(k % 97, n, 2 + (k % 2) as usize);
        let x = random_positions(&mut r, n * net.p(), 2.0);
        let a = cost_original(&net, &meas, &x);
        let b = cost_z(&net, &reduce_to_x(&net, &meas, &x));
        assert!((a - b).abs() <= 1e-10 * a.max(1.0), "draw {k}: {a} vs {b}");
    }
}

#[test]
fn mm_step_is_dense_projected_gradient() {
    for seed in 0..100 {
        let (net, meas) = random_instance(seed, 5, 2);
        let dense = dense_quadratic(&net);
        let l = lipschitz_bound(&net);
        let z = random_z(&mut rng(seed), &net, 1.0);
        let g = dense.grad(&z);
        let moved: Vec<f64> = z.to_flat().iter().zip(&g).map(|(a, b)| a - b / l).collect();
        let mut expected = StateZ::from_flat(&net, &moved);
        project_z(&net, &meas, &mut expected);
        let got = mm_step(&net, &meas, &z, l).unwrap();
        assert!(max_abs_diff(&got.to_flat(), &expected.to_flat()) <= 1e-12);
    }
}

#[test]
fn position_update_matches_per_node_formula() {
    for seed in 0..100 {
        let (net, meas) = random_instance(300 + seed, 6, 3);
        let p = net.p();
        let l = lipschitz_bound(&net);
        let z = random_z(&mut rng(seed), &net, 1.0);
        let next = mm_step(&net, &meas, &z, l).unwrap();
        let inc = net.incidence();
        for i in 0..net.n() {
            let links = net.anchor_links()[i].len() as f64;
            let bi = (l - net.degree(i) as f64 - links) / l;
            for d in 0..p {
                let mut v = bi * z.x[i * p + d];
                for nb in net.incident(i) {
                    let s = inc.sign(nb.edge, i);
                    v += (z.x[nb.neighbor * p + d] + s * z.y[nb.edge * p + d]) / l;
                }
                for (li, k) in net.links_of(i) {
                    v += (z.w[li * p + d] + net.anchor(k)[d]) / l;
                }
                assert!(
                    (v - next.x[i * p + d]).abs() <= 1e-12,
                    "seed {seed} node {i}"
                );
            }
        }
    }
}

#[test]
fn bb_with_exact_sums_matches_centralized_oracle() {
    for seed in 0..30 {
        let (net, meas) = geometric_instance(seed, 12, 2, 0.05);
        let mut r = rng(seed);
        let truth = net.true_positions().unwrap();
        let x0: Vec<f64> = truth
            .iter()
            .map(|v| v + r.random_range(-0.1..0.1))
            .collect();
        let cfg = BBConfig {
            max_iters: 40,
            consensus: ConsensusMode::Exact,
            ..BBConfig::default()
        };
        let out = bb_solve(&net, &meas, &x0, &cfg).unwrap();
        let oracle = centralized_bb(&net, &meas, &x0, 40, 1.0 / lipschitz_bound(&net));
        let last = oracle.last().unwrap();
        let scale = norm(last).max(1.0);
        assert!(max_abs_diff(&out.x, last) <= 1e-9 * scale, "seed {seed}");
    }
}
