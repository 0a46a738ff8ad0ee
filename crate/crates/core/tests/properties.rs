mod common;

use std::path::Path;

use pcag::aggregation::{
    analytic_loads, run_aggregate_epoch, run_default_epoch, Aggregation, NormAggregation, Operation, Psr,
    VectorSum,
};
use pcag::dist_cov::{assemble_masked, collect_masked, init_network, run_cov_round};
use pcag::dist_pim::{run_distributed_pim, PimConfig, PimNetwork};
use pcag::io::{load_trace, generate_synthetic, Config, SynthSpec, TraceOptions};
use pcag::linalg::{
    compute_basis_traced, covariance_batch, dot, norm, power_iteration, project, reconstruct,
    reference_eigendecomposition, retained_variance, CovAccumulator, InitPolicy, PcaBasis,
};
use pcag::runtime::{basis_rows, score_epoch, SupervisedRuntime};
use pcag::topology::{Neighborhoods, RoutingTree};
use pcag::Error;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use common::*;

fn random_tree(r: &mut impl Rng, p: usize) -> RoutingTree {
    let mut labels: Vec<usize> = (0..p).collect();
    labels.shuffle(r);
    let mut parent = vec![None; p];
    for k in 1..p {
        parent[labels[k]] = Some(labels[r.gen_range(0..k)]);
    }
    RoutingTree::from_parents(parent).unwrap()
}

fn vector_error_up_to_sign(a: &[f64], b: &[f64]) -> f64 {
    let plus: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let minus: f64 = a.iter().zip(b).map(|(x, y)| (x + y).powi(2)).sum();
    plus.min(minus).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn batch_covariance_is_symmetric_psd(seed in any::<u64>(), p in 1usize..12, t in 2usize..40) {
        let samples = gaussian_samples(&mut rng(seed), t, p);
        let c = covariance_batch(&samples).unwrap();
        prop_assert!(c.is_symmetric(0.0));
        let pairs = reference_eigendecomposition(&c).unwrap();
        prop_assert!(pairs.iter().all(|e| e.value >= -1e-9));
    }

    #[test]
    fn recursive_covariance_matches_batch(seed in any::<u64>(), p in 1usize..12, t in 2usize..60) {
        let samples = gaussian_samples(&mut rng(seed), t, p);
        let mut acc = CovAccumulator::new(p);
        for x in &samples {
            acc.update(x).unwrap();
        }
        let diff = acc.covariance().sub(&covariance_batch(&samples).unwrap()).unwrap();
        prop_assert!(diff.frobenius_norm() <= 1e-9);
    }

    #[test]
    fn power_iteration_with_gap_two(seed in any::<u64>(), p in 2usize..15) {
        let mut r = rng(seed);
        let mut spectrum: Vec<f64> = (0..p).map(|k| 1.0 / (k + 1) as f64).collect();
        spectrum[0] = 2.0 * spectrum[1] * r.gen_range(1.0..3.0);
        let c = with_spectrum(&mut r, &spectrum);
        let v0: Vec<f64> = (0..p).map(|_| r.gen_range(-1.0..1.0)).collect();
        let (pair, iterations) = power_iteration(&c, &v0, 1e-9, 50).unwrap();
        let reference = reference_eigendecomposition(&c).unwrap();
        prop_assert!(iterations <= 50);
        prop_assert!(vector_error_up_to_sign(&pair.vector, &reference[0].vector) <= 1e-4);
    }

    #[test]
    fn retained_variance_monotone_and_complete(values in prop::collection::vec(0.0f64..10.0, 1..20)) {
        let mut v = values;
        v.sort_by(|a, b| b.total_cmp(a));
        prop_assume!(v.iter().sum::<f64>() > 0.0);
        let curve: Vec<f64> = (1..=v.len()).map(|q| retained_variance(&v, q).unwrap()).collect();
        prop_assert!(curve.windows(2).all(|w| w[1] >= w[0]));
        prop_assert_eq!(curve[v.len() - 1], 1.0);
    }

    #[test]
    fn full_basis_round_trip(seed in any::<u64>(), p in 1usize..15) {
        let mut r = rng(seed);
        let c = random_spd(&mut r, p);
        let basis = PcaBasis::from_eigenpairs(&reference_eigendecomposition(&c).unwrap(), p, vec![1.5; p]).unwrap();
        let x: Vec<f64> = (0..p).map(|_| r.gen_range(-50.0..50.0)).collect();
        let back = reconstruct(&basis.w(), &project(&basis.w(), &x, basis.mean()).unwrap(), basis.mean()).unwrap();
        prop_assert!(x.iter().zip(&back).all(|(a, b)| (a - b).abs() <= 1e-9));
    }

    #[test]
    fn tree_structure(seed in any::<u64>(), p in 2usize..60) {
        let mut r = rng(seed);
        let (field, range) = random_connected_field(&mut r, p);
        let (nb, tree) = tree_and_mask(&field, range);
        let st = tree.stats();
        for i in 0..p {
            if let Some(par) = tree.parent(i) {
                prop_assert!(nb.contains(i, par));
                prop_assert!(field.distance(i, par) <= range);
            }
            if tree.is_leaf(i) {
                prop_assert_eq!(st.subtree_sizes[i], 1);
            }
        }
        prop_assert_eq!(st.children_counts.iter().sum::<usize>(), p - 1);
        prop_assert_eq!(st.subtree_sizes[tree.root()], p);
        prop_assert_eq!(RoutingTree::build(&field, range).unwrap(), tree.clone());

        let wider = RoutingTree::build(&field, range * r.gen_range(1.0..3.0)).unwrap();
        prop_assert!(wider.depth() <= tree.depth());
    }

    #[test]
    fn simulated_loads_match_formulas(seed in any::<u64>(), p in 1usize..50, q in 1usize..16) {
        let mut r = rng(seed);
        let tree = random_tree(&mut r, p);
        let x: Vec<f64> = (0..p).map(|_| r.gen_range(-5.0..5.0)).collect();
        let (sink, load) = run_default_epoch(&tree, &x).unwrap();
        prop_assert_eq!(sink, x.clone());
        prop_assert_eq!(load, analytic_loads(&tree, Operation::Default));
        let (norm_out, load) = run_aggregate_epoch(&tree, &NormAggregation { values: &x }).unwrap();
        prop_assert!((norm_out - norm(&x)).abs() <= 1e-9);
        prop_assert_eq!(load, analytic_loads(&tree, Operation::Aggregate(1)));
        let records: Vec<Vec<f64>> = (0..p).map(|_| (0..q).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
        let (_, load) = run_aggregate_epoch(&tree, &VectorSum::new(&records).unwrap()).unwrap();
        prop_assert_eq!(load, analytic_loads(&tree, Operation::Aggregate(q)));
    }

    #[test]
    fn relabeling_nodes_permutes_loads(seed in any::<u64>(), p in 2usize..40) {
        let mut r = rng(seed);
        let tree = random_tree(&mut r, p);
        let mut perm: Vec<usize> = (0..p).collect();
        perm.shuffle(&mut r);
        let mut parent = vec![None; p];
        for i in 0..p {
            parent[perm[i]] = tree.parent(i).map(|par| perm[par]);
        }
        let relabeled = RoutingTree::from_parents(parent).unwrap();
        let x: Vec<f64> = (0..p).map(|_| r.gen_range(0..100) as f64).collect();
        let mut xp = vec![0.0; p];
        for i in 0..p {
            xp[perm[i]] = x[i];
        }
        for op in [Operation::Default, Operation::Aggregate(3), Operation::Feedback(2)] {
            let a = analytic_loads(&tree, op);
            let b = analytic_loads(&relabeled, op);
            for i in 0..p {
                prop_assert_eq!(a.node_load(i), b.node_load(perm[i]));
            }
        }
        // integer-valued sums are exact whatever the merge order
        let recs: Vec<Vec<f64>> = x.iter().map(|v| vec![*v]).collect();
        let recs_p: Vec<Vec<f64>> = xp.iter().map(|v| vec![*v]).collect();
        let (s1, _) = run_aggregate_epoch(&tree, &VectorSum::new(&recs).unwrap()).unwrap();
        let (s2, _) = run_aggregate_epoch(&relabeled, &VectorSum::new(&recs_p).unwrap()).unwrap();
        prop_assert_eq!(s1, s2);
    }

    #[test]
    fn vector_sum_merge_is_associative_and_commutative(
        a in prop::collection::vec(-1000i32..1000, 4),
        b in prop::collection::vec(-1000i32..1000, 4),
        c in prop::collection::vec(-1000i32..1000, 4),
    ) {
        let to = |v: &Vec<i32>| Psr(v.iter().map(|x| *x as f64).collect());
        let records = vec![vec![0.0; 4]];
        let spec = VectorSum::new(&records).unwrap();
        let mut ab = to(&a);
        spec.merge(&mut ab, &to(&b)).unwrap();
        let mut ba = to(&b);
        spec.merge(&mut ba, &to(&a)).unwrap();
        prop_assert_eq!(&ab, &ba);
        let mut ab_c = ab.clone();
        spec.merge(&mut ab_c, &to(&c)).unwrap();
        let mut bc = to(&b);
        spec.merge(&mut bc, &to(&c)).unwrap();
        let mut a_bc = to(&a);
        spec.merge(&mut a_bc, &bc).unwrap();
        prop_assert_eq!(ab_c, a_bc);
    }

    #[test]
    fn distributed_covariance_properties(seed in any::<u64>(), p in 2usize..40, t in 2usize..30) {
        let mut r = rng(seed);
        let (field, range) = random_connected_field(&mut r, p);
        let nb = Neighborhoods::build(&field, range).unwrap();
        let samples = gaussian_samples(&mut r, t, p);
        let mut states = init_network(&nb);
        for x in &samples {
            let load = run_cov_round(&mut states, &nb, x).unwrap();
            prop_assert_eq!(load.max_node_load() as usize, 1 + nb.max_degree());
        }
        for i in 0..p {
            for &j in nb.of(i) {
                let cij = states[i].covariance_with(j).unwrap();
                let cji = states[j].covariance_with(i).unwrap();
                prop_assert_eq!(cij.to_bits(), cji.to_bits());
            }
        }
        let masked = assemble_masked(&states, &nb).unwrap();
        for i in 0..p {
            for j in 0..p {
                if i != j && !nb.contains(i, j) {
                    prop_assert_eq!(masked.matrix()[(i, j)], 0.0);
                }
            }
        }
        let (full, _) = collect_masked(&Neighborhoods::complete(p), &samples).unwrap();
        let diff = full.matrix().sub(&covariance_batch(&samples).unwrap()).unwrap();
        prop_assert!(diff.frobenius_norm() <= 1e-9);
    }

    #[test]
    fn distributed_pim_tracks_centralized(seed in any::<u64>(), p in 2usize..16) {
        let mut r = rng(seed);
        let c = random_spd(&mut r, p);
        let q = r.gen_range(1..=p.min(4));
        let (central, iters) = compute_basis_traced(&c, q, 1e-3, 50, InitPolicy::Diagonal).unwrap();
        let tree = random_tree(&mut r, p);
        let mut net = PimNetwork::from_matrix(&c, &Neighborhoods::complete(p)).unwrap();
        let run = run_distributed_pim(&mut net, &tree, &PimConfig::new(q, 1e-3, 50)).unwrap();
        prop_assert_eq!(&run.iterations, &iters);
        let dist = net.to_basis(vec![0.0; p]).unwrap();
        prop_assert_eq!(dist.len(), central.len());
        for (a, b) in dist.pairs().iter().zip(central.pairs()) {
            prop_assert!(vector_error_up_to_sign(&a.vector, &b.vector) <= 1e-9);
        }
        // accepted components are unit norm and mutually orthogonal
        for (k, a) in dist.pairs().iter().enumerate() {
            prop_assert!((norm(&a.vector) - 1.0).abs() <= 1e-9);
            for b in &dist.pairs()[..k] {
                prop_assert!(dot(&a.vector, &b.vector).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn eigengap_two_converges_within_fifty(seed in any::<u64>(), p in 2usize..20) {
        let mut r = rng(seed);
        let mut spectrum: Vec<f64> = (0..p).map(|k| 1.0 / (k + 2) as f64).collect();
        spectrum[0] = 2.0 * spectrum[1];
        let c = with_spectrum(&mut r, &spectrum);
        let mut net = PimNetwork::from_matrix(&c, &Neighborhoods::complete(p)).unwrap();
        let run = run_distributed_pim(&mut net, &RoutingTree::star(p), &PimConfig::new(1, 1e-3, 50)).unwrap();
        prop_assert!(run.converged[0]);
        prop_assert!(run.iterations[0] <= 50);
    }

    #[test]
    fn scores_do_not_depend_on_topology(seed in any::<u64>(), p in 2usize..30, q in 1usize..4) {
        let mut r = rng(seed);
        let q = q.min(p);
        let c = random_spd(&mut r, p);
        let mean: Vec<f64> = (0..p).map(|_| r.gen_range(10.0..30.0)).collect();
        let basis = PcaBasis::from_eigenpairs(&reference_eigendecomposition(&c).unwrap(), q, mean).unwrap();
        let ids: Vec<_> = (1..=p as u32).map(pcag::topology::SensorId).collect();
        let rows = basis_rows(&basis, &ids, None).unwrap();
        let x: Vec<f64> = (0..p).map(|_| r.gen_range(0.0..40.0)).collect();
        let (z_chain, _) = score_epoch(&RoutingTree::chain(p), &rows, &x).unwrap();
        let (z_star, _) = score_epoch(&RoutingTree::star(p), &rows, &x).unwrap();
        let (z_rand, _) = score_epoch(&random_tree(&mut r, p), &rows, &x).unwrap();
        for k in 0..q {
            prop_assert!((z_chain[k] - z_star[k]).abs() <= 1e-12);
            prop_assert!((z_chain[k] - z_rand[k]).abs() <= 1e-12);
        }
    }

    #[test]
    fn quiet_epoch_costs_aggregate_plus_feedback(seed in any::<u64>(), p in 2usize..30, q in 1usize..4) {
        let mut r = rng(seed);
        let q = q.min(p);
        let c = random_spd(&mut r, p);
        let mean = vec![0.0; p];
        let basis = PcaBasis::from_eigenpairs(&reference_eigendecomposition(&c).unwrap(), q, mean.clone()).unwrap();
        let tree = random_tree(&mut r, p);
        let ids: Vec<_> = (1..=p as u32).map(pcag::topology::SensorId).collect();
        let mut rt = SupervisedRuntime::new(&tree, basis, &ids, 1e6).unwrap();
        let x: Vec<f64> = (0..p).map(|_| r.gen_range(-1.0..1.0)).collect();
        let out = rt.step(&x).unwrap();
        prop_assert!(out.violators.is_empty());
        let mut want = analytic_loads(&tree, Operation::Aggregate(q));
        want.add(&analytic_loads(&tree, Operation::Feedback(q)));
        prop_assert_eq!(out.load, want);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn exported_trace_reloads_exactly(seed in any::<u64>(), epochs in 2usize..40) {
        let field = pcag::io::intel_field();
        let spec = SynthSpec { epochs, seed, epoch_seconds: 31.0, ..Default::default() };
        let trace = generate_synthetic(&spec, &field).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        trace.export(&path).unwrap();
        let loaded = load_trace(&path, 31.0, &TraceOptions::default()).unwrap();
        prop_assert_eq!(&loaded.trace, &trace);
        loaded.trace.export(&path).unwrap();
        prop_assert_eq!(load_trace(&path, 31.0, &TraceOptions::default()).unwrap().trace, trace);
    }
}

#[test]
fn config_rejects_bad_values() {
    let field = pcag::io::intel_field();
    let base = Path::new(".");
    let mut c = Config::default();
    c.set("q", "53", base).unwrap();
    assert!(matches!(c.validate(&field, 100), Err(Error::Config(_))));
    let mut c = Config::default();
    c.set("folds", "20", base).unwrap();
    assert!(matches!(c.validate(&field, 10), Err(Error::Config(_))));
    let mut c = Config::default();
    c.set("range", "4", base).unwrap();
    assert!(matches!(c.validate(&field, 100), Err(Error::Disconnected(_))));
    assert!(Config::parse("epsilon = -1\n", Path::new("x.conf")).is_err());
}
