mod common;

use common::*;
use gld_core::measures::*;
use gld_core::metrics::{DecodingKernel, MetricSpec};
use gld_core::optimizer::*;
use gld_core::simulator::stream_rng;
use proptest::prelude::*;
use rand::Rng;

fn joint_strategy(rows: usize, cols: usize) -> impl Strategy<Value = JointDistribution> {
    prop::collection::vec(0.0f64..1.0, rows * cols).prop_filter_map("all zero", move |v| {
        let s: f64 = v.iter().sum();
        (s > 1e-3).then(|| JointDistribution::new(rows, cols, v.iter().map(|x| x / s).collect()).unwrap())
    })
}

fn sequence_pair(len: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (prop::collection::vec(0usize..3, len), prop::collection::vec(0usize..2, len))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn marginals_sum_the_joint(j in joint_strategy(3, 4)) {
        let r = j.row_marginal();
        let c = j.col_marginal();
        for x in 0..3 {
            prop_assert!((r.get(x) - j.row(x).iter().sum::<f64>()).abs() < 1e-12);
        }
        for y in 0..4 {
            prop_assert!((c.get(y) - (0..3).map(|x| j.get(x, y)).sum::<f64>()).abs() < 1e-12);
        }
    }

    #[test]
    fn information_identities(j in joint_strategy(3, 4)) {
        let i = mutual_information(&j);
        prop_assert!(i >= 0.0);
        let h = entropy(&j.row_marginal()) + entropy(&j.col_marginal()) - joint_entropy(&j);
        prop_assert!((i - h).abs() < 1e-9, "{i} vs {h}");
        prop_assert!((i - mi(j.probs(), 3, 4)).abs() < 1e-9);
        prop_assert!(i <= entropy(&j.row_marginal()).min(entropy(&j.col_marginal())) + 1e-9);
        // Transposition leaves the information unchanged.
        prop_assert!((mutual_information(&j.transpose()) - i).abs() < 1e-12);
    }

    #[test]
    fn product_has_zero_information(j in joint_strategy(2, 3)) {
        let p = j.row_marginal().product(&j.col_marginal());
        prop_assert!(mutual_information(&p).abs() < 1e-12);
    }

    #[test]
    fn conditional_divergence_nonnegative(j in joint_strategy(2, 3), seed in 0u64..1000) {
        let mut rng = stream_rng(seed, 1);
        let w = random_channel(&mut rng, 2, 3);
        let d = conditional_divergence(&j.conditional_rows(), &w, &j.row_marginal()).unwrap();
        prop_assert!(d >= 0.0);
        let self_d = conditional_divergence(w.kernel(), &w, &j.row_marginal()).unwrap();
        prop_assert!(self_d.abs() < 1e-12);
    }

    #[test]
    fn triple_chain_rule(t in joint_strategy(4, 3)) {
        // I(XX';Y) = I(X;Y) + I(X';Y|X).
        let m = triple_marginals(&t, 2).unwrap();
        let cmi = conditional_mutual_information(&t, 2).unwrap();
        let lhs = mutual_information(&t);
        let rhs = mutual_information(&m.first_output) + cmi;
        prop_assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
        prop_assert!(cmi >= 0.0);
    }

    #[test]
    fn empirical_joint_of_concatenation_is_mixture((x1, y1) in sequence_pair(7), (x2, y2) in sequence_pair(5)) {
        let a = empirical_joint(&x1, &y1, 3, 2).unwrap();
        let b = empirical_joint(&x2, &y2, 3, 2).unwrap();
        let x: Vec<usize> = x1.iter().chain(&x2).copied().collect();
        let y: Vec<usize> = y1.iter().chain(&y2).copied().collect();
        let whole = empirical_joint(&x, &y, 3, 2).unwrap();
        let mix = a.mixture(&b, 7.0 / 12.0).unwrap();
        prop_assert!(whole.l1_distance(&mix) < 1e-12);
        for p in whole.probs() {
            let scaled = p * 12.0;
            prop_assert!((scaled - scaled.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn affine_metric_is_linear(a in joint_strategy(2, 3), b in joint_strategy(2, 3), lambda in 0.0f64..1.0, beta in 0.1f64..5.0) {
        let mut rng = stream_rng(beta.to_bits(), 0);
        let kernel = DecodingKernel::new(&random_rows(&mut rng, 2, 3)).unwrap();
        let m = MetricSpec::mismatched(kernel, beta).unwrap();
        prop_assert!(m.is_affine());
        let mix = a.mixture(&b, lambda).unwrap();
        let lhs = m.evaluate(&mix).unwrap();
        let rhs = lambda * m.evaluate(&a).unwrap() + (1.0 - lambda) * m.evaluate(&b).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn metric_scales_with_temperature(j in joint_strategy(2, 2), p in 0.01f64..0.49, beta in 0.1f64..5.0) {
        let w = Channel::bsc(p).unwrap();
        let one = MetricSpec::matched(&w, 1.0).unwrap().evaluate(&j).unwrap();
        let scaled = MetricSpec::matched(&w, beta).unwrap().evaluate(&j).unwrap();
        prop_assert!((scaled - beta * one).abs() < 1e-9 * (1.0 + scaled.abs()));
        // Matched g is the expected log-likelihood.
        let direct: f64 = (0..2).flat_map(|x| (0..2).map(move |y| (x, y))).map(|(x, y)| j.get(x, y) * w.prob(x, y).ln()).sum();
        prop_assert!((one - direct).abs() < 1e-12);
    }

    #[test]
    fn emi_metric_is_not_affine_but_convex(a in joint_strategy(2, 2), b in joint_strategy(2, 2)) {
        let m = MetricSpec::empirical_mutual_information();
        prop_assert!(!m.is_affine());
        // Same input marginal: I is convex in the kernel.
        let qx = a.row_marginal();
        let b_same = b.conditional_rows().joint_with(&qx).unwrap();
        let mid = a.mixture(&b_same, 0.5).unwrap();
        let lhs = m.evaluate(&mid).unwrap();
        let rhs = 0.5 * (m.evaluate(&a).unwrap() + m.evaluate(&b_same).unwrap());
        prop_assert!(lhs <= rhs + 1e-12);
    }
}

#[test]
fn type_enumeration_counts() {
    // C(n + K - 1, K - 1) types.
    for (k, n, count) in [(2, 5, 6), (3, 4, 15), (4, 3, 20)] {
        let types = enumerate_types(Alphabet::new(k).unwrap(), n).unwrap();
        assert_eq!(types.len(), count);
        for t in &types {
            assert!(t.scaled_counts(n).is_some());
        }
    }
}

#[test]
fn conditional_type_count_against_brute_force() {
    let mut rng = stream_rng(5, 0);
    let words: Vec<Vec<usize>> = (0..12).map(|_| (0..6).map(|_| rng.gen_range(0..2)).collect()).collect();
    let m = 3;
    let base = &words[m];
    let n0 = base.iter().filter(|&&s| s == 0).count();
    let n1 = 6 - n0;
    // Every conditional type with denominators (n0, n1).
    for a in 0..=n0 {
        for b in 0..=n1 {
            let rows = [
                if n0 > 0 { vec![(n0 - a) as f64 / n0 as f64, a as f64 / n0 as f64] } else { vec![1.0, 0.0] },
                if n1 > 0 { vec![b as f64 / n1 as f64, (n1 - b) as f64 / n1 as f64] } else { vec![0.0, 1.0] },
            ];
            let kernel = ConditionalDistribution::new(&rows).unwrap();
            let brute = words
                .iter()
                .enumerate()
                .filter(|(i, w)| {
                    *i != m
                        && (0..6).filter(|&t| base[t] == 0 && w[t] == 1).count() == a
                        && (0..6).filter(|&t| base[t] == 1 && w[t] == 0).count() == b
                })
                .count();
            assert_eq!(conditional_type_count(&words, m, &kernel).unwrap(), brute);
        }
    }
}

#[test]
fn grid_enumeration_is_exhaustive() {
    // Unconstrained 2x2 at denominator 6: C(9, 3) points.
    let set = FeasibleSet::unconstrained(2, 2);
    assert_eq!(set.grid(6).unwrap().len(), 84);
    // Fixed marginals (1/2, 1/2) at 8: four couplings per row split, 5 tables.
    let half = Distribution::uniform(2);
    let set = FeasibleSet::with_marginals(half.clone(), half.clone());
    assert_eq!(set.grid(8).unwrap().len(), 5);
    assert_eq!(contingency_tables(&[4, 4], &[4, 4]).len(), 5);
    assert_eq!(contingency_tables(&[2, 2, 2], &[3, 3]).len(), couplings_count(&[2, 2, 2], &[3, 3]));
    // Row marginal fixed at a 4-type, 3 columns: compositions of 2 per row.
    let set = FeasibleSet::with_row_marginal(half, 3);
    assert_eq!(set.grid(4).unwrap().len(), 36);
    // Off-grid marginal: each row gridded at resolution 4, 15 splits per row.
    let set = FeasibleSet::with_row_marginal(Distribution::new(vec![0.3, 0.7]).unwrap(), 3);
    assert_eq!(set.grid(4).unwrap().len(), 225);
}

fn couplings_count(rows: &[usize], cols: &[usize]) -> usize {
    let total: usize = rows.iter().sum();
    compositions(total, rows.len() * cols.len())
        .into_iter()
        .filter(|t| {
            rows.iter().enumerate().all(|(r, &s)| (0..cols.len()).map(|c| t[r * cols.len() + c]).sum::<usize>() == s)
                && cols.iter().enumerate().all(|(c, &s)| (0..rows.len()).map(|r| t[r * cols.len() + c]).sum::<usize>() == s)
        })
        .count()
}

#[test]
fn grid_minimum_matches_exhaustive_scan() {
    let mut rng = stream_rng(9, 0);
    let w = random_channel(&mut rng, 2, 2);
    let f = |q: &JointDistribution| {
        conditional_divergence(&q.conditional_rows(), &w, &q.row_marginal()).unwrap() - 0.3 * mutual_information(q)
    };
    let set = FeasibleSet::unconstrained(2, 2);
    let out = grid_minimize(f, &set, &GridSpec::pure(10)).unwrap();
    let mut best = f64::INFINITY;
    for c in compositions(10, 4) {
        let q = JointDistribution::from_counts(2, 2, &c).unwrap();
        best = best.min(f(&q));
    }
    assert_eq!(out.value, best);
    assert_eq!(out.feasible_points, 286);
}

#[test]
fn information_bound_filters_grid() {
    let half = Distribution::uniform(2);
    let set = FeasibleSet::with_marginals(half.clone(), half).with_information_bound(0.05).unwrap();
    let out = grid_minimize(|q| -mutual_information(q), &set, &GridSpec::pure(16)).unwrap();
    assert!(-out.value <= 0.05 + 1e-9);
    let feasible = contingency_tables(&[8, 8], &[8, 8])
        .into_iter()
        .filter(|t| mutual_information(&JointDistribution::from_counts(2, 2, t).unwrap()) <= 0.05 + 1e-9)
        .count();
    assert_eq!(out.feasible_points, feasible);
}

#[test]
fn empty_feasible_grid_is_an_error() {
    let set = FeasibleSet::with_marginals(Distribution::uniform(3), Distribution::uniform(3))
        .with_information_bound(0.0)
        .unwrap();
    assert!(matches!(
        grid_minimize(|_| 0.0, &set, &GridSpec::pure(6)),
        Err(gld_core::Error::EmptyFeasibleGrid { resolution: 6 })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn refinement_never_worse_and_stays_feasible(seed in 0u64..100_000, k in 4usize..12) {
        let mut rng = stream_rng(seed, 2);
        let w = random_channel(&mut rng, 2, 3);
        let qx = Distribution::uniform(2);
        let set = FeasibleSet::with_row_marginal(qx.clone(), 3).with_information_bound(0.1).unwrap();
        let f = |q: &JointDistribution| {
            conditional_divergence(&q.conditional_rows(), &w, &q.row_marginal()).unwrap() - mutual_information(q)
        };
        let k = 2 * (k / 2);
        let pure = grid_minimize(f, &set, &GridSpec::pure(k)).unwrap();
        let refined = grid_minimize(f, &set, &GridSpec::new(k)).unwrap();
        prop_assert_eq!(pure.value, refined.grid_value);
        prop_assert!(refined.value <= refined.grid_value);
        prop_assert!(set.contains(&refined.argmin));
        prop_assert!((f(&refined.argmin) - refined.value).abs() < 1e-9);
    }

    #[test]
    fn finer_nested_grid_is_no_worse(seed in 0u64..100_000, k in 2usize..8) {
        let mut rng = stream_rng(seed, 3);
        let w = random_channel(&mut rng, 2, 2);
        let f = |q: &JointDistribution| {
            conditional_divergence(&q.conditional_rows(), &w, &q.row_marginal()).unwrap() + 0.5 * mutual_information(q)
        };
        let set = FeasibleSet::unconstrained(2, 2);
        let coarse = grid_minimize(f, &set, &GridSpec::pure(k)).unwrap();
        let fine = grid_minimize(f, &set, &GridSpec::pure(2 * k)).unwrap();
        prop_assert!(fine.value <= coarse.value + 1e-12);
    }

    #[test]
    fn rho_search_finds_piecewise_linear_maximum(peak in 1.0f64..64.0, left in 0.01f64..2.0, right in 0.01f64..2.0) {
        let f = |r: f64| if r <= peak { left * (r - peak) } else { -right * (r - peak) };
        let s = concave_search_rho(f, 1.0, 64.0, 1e-7);
        prop_assert!(s.value <= 1e-12);
        prop_assert!(s.value >= -1e-6 * (left + right));
        prop_assert!((s.rho_star - peak).abs() < 1e-5);
        prop_assert_eq!(s.boundary_flag, peak > 64.0 - 1e-6);
    }

    #[test]
    fn brent_finds_quadratic_minimum(center in -3.0f64..3.0, scale in 0.1f64..10.0) {
        let (x, v) = brent_minimize(&mut |t| scale * (t - center).powi(2) + 1.0, -5.0, 5.0, 1e-10, 200);
        prop_assert!((x - center).abs() < 1e-6);
        prop_assert!((v - 1.0).abs() < 1e-10);
    }
}

#[test]
fn rho_search_boundary_cases() {
    let inc = concave_search_rho(|r| r, 1.0, 64.0, 1e-5);
    assert_eq!(inc.rho_star, 64.0);
    assert!(inc.boundary_flag);
    let dec = concave_search_rho(|r| -r, 1.0, 64.0, 1e-5);
    assert_eq!(dec.rho_star, 1.0);
    assert_eq!(dec.value, -1.0);
    assert!(!dec.boundary_flag);
}
