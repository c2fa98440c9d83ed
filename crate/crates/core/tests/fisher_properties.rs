//! Fisher information: mode agreement, finite differences, structure.

use proptest::prelude::*;
use qnt_core::fisher::{path_information, single_link_qcrb, FisherMode};
use qnt_core::network::{LinkId, MeasurementTask, NetworkGraph, Path};
use qnt_core::schemes::Scheme;
use qnt_core::task_qfim;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Fisher information from central differences of the outcome model,
/// perturbing each link parameter and recomputing the path product.
fn finite_difference_fisher(scheme: Scheme, params: &[f64], h: f64) -> Vec<Vec<f64>> {
    let probs = |ws: &[f64]| scheme.probabilities(ws.iter().product());
    let p = probs(params);
    let grads: Vec<[f64; 4]> = (0..params.len())
        .map(|i| {
            let mut up = params.to_vec();
            let mut down = params.to_vec();
            up[i] += h;
            down[i] -= h;
            let (pu, pd) = (probs(&up), probs(&down));
            std::array::from_fn(|k| (pu[k] - pd[k]) / (2.0 * h))
        })
        .collect();
    (0..params.len())
        .map(|i| {
            (0..params.len())
                .map(|j| (0..4).map(|k| grads[i][k] * grads[j][k] / p[k]).sum())
                .collect()
        })
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

#[test]
fn first_principles_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let scheme = Scheme::ALL[rng.gen_range(0..3)];
        let len = rng.gen_range(1..=3);
        let params: Vec<f64> = (0..len).map(|_| rng.gen_range(0.1..0.9)).collect();
        let fd = finite_difference_fisher(scheme, &params, 1e-6);
        let exact = path_information(scheme, &params, FisherMode::FirstPrinciples);
        for i in 0..len {
            for j in 0..len {
                assert!(
                    rel(exact[(i, j)], fd[i][j]) < 1e-5,
                    "{scheme} {params:?} ({i},{j}): {} vs {}",
                    exact[(i, j)],
                    fd[i][j]
                );
            }
        }
    }
}

#[test]
fn modes_agree_except_direct_lzm() {
    let grid: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    for scheme in Scheme::ALL {
        for &a in &grid {
            for &b in &grid {
                let params = [a, b];
                let paper = path_information(scheme, &params, FisherMode::Paper);
                let fp = path_information(scheme, &params, FisherMode::FirstPrinciples);
                for (x, y) in paper.iter().zip(fp.iter()) {
                    assert!(rel(*x, *y) < 1e-9, "{scheme} {params:?}");
                }
            }
            let paper = path_information(scheme, &[a], FisherMode::Paper)[(0, 0)];
            let fp = path_information(scheme, &[a], FisherMode::FirstPrinciples)[(0, 0)];
            match scheme {
                Scheme::Lzm => assert!((paper / fp - 2.0).abs() < 1e-12, "w={a}"),
                _ => assert!(rel(paper, fp) < 1e-9, "{scheme} w={a}"),
            }
        }
    }
}

#[test]
fn lzm_bounds_decrease_and_jbm_bounds_decrease() {
    for scheme in [Scheme::Lzm, Scheme::Jbm] {
        let values: Vec<f64> = (1..=99)
            .map(|i| single_link_qcrb(scheme, i as f64 / 100.0, FisherMode::Paper))
            .collect();
        assert!(values.windows(2).all(|p| p[1] < p[0]), "{scheme}");
    }
}

#[test]
fn pem_bound_peaks_at_one_third() {
    // (1 + 3w)(1 - w)/3 has its maximum at w = 1/3
    let at = |w: f64| single_link_qcrb(Scheme::Pem, w, FisherMode::Paper);
    assert!(at(0.2) < at(1.0 / 3.0));
    assert!(at(0.5) < at(1.0 / 3.0));
    assert!((at(1.0 / 3.0) - 4.0 / 9.0).abs() < 1e-12);
}

fn line(params: &[f64]) -> NetworkGraph {
    let links: Vec<_> = params.iter().enumerate().map(|(i, &w)| (i, i + 1, w)).collect();
    NetworkGraph::new(params.len() + 1, &links, [0, params.len()]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn single_task_matrices_are_rank_one(
        params in prop::collection::vec(0.05f64..0.95, 2..=3),
        s in 0usize..3,
        paper in any::<bool>(),
    ) {
        let scheme = Scheme::ALL[s];
        let mode = if paper { FisherMode::Paper } else { FisherMode::FirstPrinciples };
        let g = line(&params);
        let ids: Vec<_> = (0..params.len()).map(LinkId).collect();
        let task = MeasurementTask::new(scheme, Path::new(&g, &ids).unwrap());
        let f = task_qfim(&task, &params, mode).unwrap();
        prop_assert!(f.is_symmetric());
        prop_assert!(f.is_psd());
        let ev = f.eigenvalues();
        let top = ev[ev.len() - 1];
        prop_assert!(top > 0.0);
        prop_assert!(ev[ev.len() - 2].abs() < 1e-10 * top);
    }
}
