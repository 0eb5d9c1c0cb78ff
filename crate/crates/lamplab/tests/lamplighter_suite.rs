//! The lamplighter chain against an independently coded transition matrix,
//! long-run occupation statistics, and exact-versus-empirical mixing curves
//! on an irregular base graph.

use lamplab::graphs::{FamilySpec, GraphTopology};
use lamplab::lamplighter::{self, LampState};
use lamplab::rng::replica_rng;

fn spider() -> GraphTopology {
    GraphTopology::from_edges(7, &[(0, 1), (1, 2), (2, 3), (0, 4), (4, 5), (0, 6)]).unwrap()
}

#[test]
fn two_vertex_chain_matches_an_independent_transition_matrix() {
    // Eight states (position in K_2, two lamps).  The kernel, written out
    // from the move description with no shared code: hold with probability
    // 1/2 rerandomizing the local lamp (two outcomes at 1/4), or move with
    // probability 1/2 rerandomizing both lamps (four outcomes at 1/8).
    let idx = |pos: usize, lamps: usize| pos * 4 + lamps;
    let mut kernel = [[0.0f64; 8]; 8];
    for pos in 0..2usize {
        for lamps in 0..4usize {
            let from = idx(pos, lamps);
            let keep = lamps & !(1 << pos);
            for bit in 0..2 {
                kernel[from][idx(pos, keep | bit << pos)] += 0.25;
            }
            let other = 1 - pos;
            for bits in 0..4 {
                kernel[from][idx(other, bits)] += 0.125;
            }
        }
    }
    for row in &kernel {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    // Push the dark-lamps start forward and measure TV to the uniform
    // stationary law by hand.
    let mut dist = [0.0f64; 8];
    dist[idx(0, 0)] = 1.0;
    let mut hand_curve = Vec::new();
    for _ in 0..=12u64 {
        let tv: f64 = 0.5 * dist.iter().map(|p| (p - 0.125).abs()).sum::<f64>();
        hand_curve.push(tv);
        let mut next = [0.0f64; 8];
        for (from, &mass) in dist.iter().enumerate() {
            if mass > 0.0 {
                for (to, &q) in kernel[from].iter().enumerate() {
                    next[to] += mass * q;
                }
            }
        }
        dist = next;
    }

    let g = GraphTopology::generate(&FamilySpec::Complete { n: 2 }).unwrap();
    let library_curve = lamplighter::exact_tv_curve_from(&g, 0, 12).unwrap();
    assert_eq!(library_curve.len(), hand_curve.len());
    for (t, (lib, hand)) in library_curve.iter().zip(&hand_curve).enumerate() {
        assert!(
            (lib - hand).abs() < 1e-12,
            "curves disagree at t = {t}: {lib} vs {hand}"
        );
    }
    // K_2 is transitive, so the worst-start curve is the same curve.
    let worst = lamplighter::exact_tv_curve(&g, 12).unwrap();
    for (lib, w) in library_curve.iter().zip(&worst) {
        assert!((lib - w).abs() < 1e-15);
    }
}

#[test]
fn long_run_state_occupation_matches_stationarity_on_a_triangle() {
    // One long trajectory on the 24-state chain over K_3, subsampled well
    // past the mixing time so the draws are nearly independent, should
    // occupy every state uniformly.
    let g = GraphTopology::generate(&FamilySpec::Complete { n: 3 }).unwrap();
    let mut rng = replica_rng(0x0CC0, 0);
    let mut state = LampState::dark(3, 0);
    for _ in 0..1_000u64 {
        lamplighter::step(&g, &mut state, &mut rng);
    }
    let (spacing, samples) = (16u64, 125_000u64);
    let mut counts = [0u64; 24];
    for _ in 0..samples {
        for _ in 0..spacing {
            lamplighter::step(&g, &mut state, &mut rng);
        }
        counts[state.index()] += 1;
    }
    let expected = 1.0 / 24.0;
    let sigma = (expected * (1.0 - expected) / samples as f64).sqrt();
    for (index, &count) in counts.iter().enumerate() {
        let freq = count as f64 / samples as f64;
        assert!(
            (freq - expected).abs() <= 4.0 * sigma,
            "state {index}: occupation {freq:.5} vs {expected:.5} (4 sigma = {:.5})",
            4.0 * sigma
        );
    }
}

#[test]
fn worst_start_curve_dominates_every_fixed_start_on_an_irregular_base() {
    let g = spider();
    let horizon = 15u64;
    let worst = lamplighter::exact_tv_curve(&g, horizon).unwrap();
    let mut recomputed_max = vec![0.0f64; horizon as usize + 1];
    for start in 0..g.vertex_count() as u32 {
        let curve = lamplighter::exact_tv_curve_from(&g, start, horizon).unwrap();
        for (t, &value) in curve.iter().enumerate() {
            assert!(
                value <= worst[t] + 1e-15,
                "start {start} exceeds the worst-start curve at t = {t}"
            );
            recomputed_max[t] = recomputed_max[t].max(value);
        }
    }
    for (t, (&w, &m)) in worst.iter().zip(&recomputed_max).enumerate() {
        assert!((w - m).abs() < 1e-15, "worst-start curve not attained at t = {t}");
    }
    // The chain forgets its start monotonically.
    for pair in worst.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-12);
    }
}

#[test]
fn empirical_curve_tracks_the_exact_curve_on_the_spider_base() {
    let g = spider();
    let horizon = 10u64;
    // The worst start on the spider is found by the exact layer; sample the
    // empirical curve from the same start.
    let mut worst_start = 0u32;
    let mut worst_value = -1.0;
    for start in 0..g.vertex_count() as u32 {
        let value = lamplighter::exact_tv_curve_from(&g, start, horizon).unwrap()[5];
        if value > worst_value {
            worst_value = value;
            worst_start = start;
        }
    }
    let exact = lamplighter::exact_tv_curve_from(&g, worst_start, horizon).unwrap();
    let empirical =
        lamplighter::empirical_tv_curve(&g, worst_start, horizon, 600_000, 0xE59).unwrap();
    for (t, (e, s)) in exact.iter().zip(&empirical).enumerate() {
        assert!(
            (e - s).abs() <= 0.05,
            "empirical curve off by {:.4} at t = {t} (exact {e:.4})",
            (e - s).abs()
        );
    }
}
