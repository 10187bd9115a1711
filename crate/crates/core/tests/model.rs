use std::rc::Rc;

use proptest::prelude::*;
use relvalue::gnn::{init_embeddings, GnnConfig, GnnModel, InitMode, Relation, Vocabulary};
use relvalue::numeric::{
    numerical_gradient, relative_error, Graph, ParamId, ParamStore, Tensor, Var,
};
use relvalue::{Aggregation, RelationalStructure};

fn aggregation() -> impl Strategy<Value = Aggregation> {
    prop_oneof![Just(Aggregation::Sum), Just(Aggregation::SmoothMax)]
}

/// A chain `0 - 1 - ... - n-1` under a binary `e` plus a unary `u` on object 0.
fn chain(n: usize) -> RelationalStructure {
    let mut e = Vec::new();
    for i in 0..n as u32 - 1 {
        e.extend([i, i + 1]);
    }
    RelationalStructure {
        objects: n,
        relations: vec![
            Relation {
                name: "e".into(),
                arity: 2,
                tuples: e,
            },
            Relation {
                name: "u".into(),
                arity: 1,
                tuples: vec![0],
            },
        ],
    }
}

fn chain_model(k: usize, rounds: usize, aggregation: Aggregation, seed: u64) -> GnnModel {
    let vocab = Vocabulary::new([("e".to_string(), 2), ("u".to_string(), 1)]).unwrap();
    let config = GnnConfig {
        k,
        rounds,
        aggregation,
        ..GnnConfig::default()
    };
    GnnModel::new(config, vocab, seed).unwrap()
}

#[derive(Debug, Clone)]
enum Op {
    Relu,
    Scale(f64),
    AddSelf,
    Dense,
    SegmentSum(Vec<u32>),
    SegmentLse(Vec<u32>),
    Gather(Vec<u32>),
    ConcatCols,
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        Just(Op::Relu),
        (-2.0..2.0f64).prop_map(Op::Scale),
        Just(Op::AddSelf),
        Just(Op::Dense),
        prop::collection::vec(0u32..3, 1..6).prop_map(Op::SegmentSum),
        prop::collection::vec(0u32..3, 1..6).prop_map(Op::SegmentLse),
        prop::collection::vec(0u32..64, 1..6).prop_map(Op::Gather),
        Just(Op::ConcatCols),
    ]
}

/// Applies `ops` to `x`, fixing row counts so every op is well formed.
fn chain_ops(
    g: &mut Graph,
    store: &ParamStore,
    weights: &[ParamId],
    mut x: Var,
    ops: &[Op],
) -> Var {
    let mut wi = 0;
    for op in ops {
        let rows = g.value(x).rows();
        let cols = g.value(x).cols();
        x = match op {
            Op::Relu => g.relu(x),
            Op::Scale(c) => g.scale(x, *c),
            Op::AddSelf => g.add(x, x),
            Op::Dense if cols == 3 && wi + 1 < weights.len() => {
                let w = g.param(store, weights[wi]);
                let b = g.param(store, weights[wi + 1]);
                wi += 2;
                g.dense(x, w, b)
            }
            Op::Dense => x,
            Op::SegmentSum(seg) | Op::SegmentLse(seg) => {
                let ids: Rc<[u32]> = (0..rows).map(|r| seg[r % seg.len()]).collect();
                let segments = *ids.iter().max().unwrap() as usize + 1;
                if matches!(op, Op::SegmentSum(_)) {
                    g.segment_sum(x, ids, segments)
                } else {
                    g.segment_logsumexp(x, ids, segments)
                }
            }
            Op::Gather(idx) => {
                let ids: Rc<[u32]> = idx.iter().map(|&i| i % rows as u32).collect();
                g.gather_rows(x, ids)
            }
            Op::ConcatCols if cols == 3 => {
                let y = g.concat_cols(&[x, x]);
                let r = g.reshape(y, rows * 2, 3);
                g.relu(r)
            }
            Op::ConcatCols => x,
        };
    }
    x
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn logsumexp_lies_between_max_and_max_plus_log_n(xs in prop::collection::vec(-50.0..50.0f64, 1..20)) {
        let mut g = Graph::new();
        let x = g.input(Tensor::new(xs.len(), 1, xs.clone()));
        let y = g.logsumexp_rows(x);
        let v = g.value(y).item();
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(v >= max - 1e-12);
        prop_assert!(v <= max + (xs.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn logsumexp_is_shift_equivariant(xs in prop::collection::vec(-5.0..5.0f64, 1..10), c in -700.0..700.0f64) {
        let lse = |v: Vec<f64>| {
            let mut g = Graph::new();
            let n = v.len();
            let x = g.input(Tensor::new(n, 1, v));
            let y = g.logsumexp_rows(x);
            g.value(y).item()
        };
        let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
        prop_assert!((lse(shifted) - lse(xs) - c).abs() < 1e-9);
    }

    #[test]
    fn random_op_chains_have_correct_gradients(
        ops in prop::collection::vec(op(), 1..7),
        seed in 0u64..10_000,
        rows in 1usize..5,
    ) {
        use rand::Rng;
        let mut rng = relvalue::rng::seeded(seed);
        let mut store = ParamStore::new();
        let mut rand_tensor = |r: usize, c: usize| Tensor::new(r, c, (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect());
        let input = store.add("x", rand_tensor(rows, 3));
        let weights: Vec<ParamId> = (0..3)
            .flat_map(|i| [store.add(&format!("w{i}"), rand_tensor(3, 3)), store.add(&format!("b{i}"), rand_tensor(1, 3))])
            .collect();
        let target: Vec<f64>;
        let loss_of = |store: &ParamStore, target: Option<&[f64]>| -> (Graph, Var, Vec<f64>) {
            let mut g = Graph::new();
            let x = g.param(store, input);
            let y = chain_ops(&mut g, store, &weights, x, &ops);
            let out = g.value(y).data().to_vec();
            // Targets far from the output keep the L1 loss smooth.
            let t: Vec<f64> = target.map_or_else(|| out.iter().map(|v| v + 100.0).collect(), |t| t.to_vec());
            let l = g.l1_loss(y, &t);
            (g, l, t)
        };
        {
            let (_, _, t) = loss_of(&store, None);
            target = t;
        }
        let (g, l, _) = loss_of(&store, Some(&target));
        store.zero_grad();
        g.backward(l, &mut store);
        let coords: Vec<(ParamId, usize)> = std::iter::once(input)
            .chain(weights.iter().copied())
            .flat_map(|id| (0..store.value(id).data().len()).map(move |i| (id, i)))
            .collect();
        let analytic: Vec<f64> = coords.iter().map(|&(id, i)| store.grad(id).data()[i]).collect();
        let numeric = numerical_gradient(&mut store, &coords, 1e-6, |s| {
            let (g, l, _) = loss_of(s, Some(&target));
            g.value(l).item()
        });
        // ReLU kinks within `h` of an input are measure zero but possible.
        let err = relative_error(&analytic, &numeric);
        prop_assert!(err < 1e-5, "relative error {err:.2e} for {ops:?}");
    }

    #[test]
    fn relabeling_objects_permutes_embeddings(
        n in 2usize..8,
        seed in 0u64..1000,
        agg in aggregation(),
        perm_seed in 0u64..1000,
    ) {
        use rand::seq::SliceRandom;
        let s = chain(n);
        let model = chain_model(4, 3, agg, seed);
        let mut perm: Vec<u32> = (0..n as u32).collect();
        perm.shuffle(&mut relvalue::rng::seeded(perm_seed));
        let init = init_embeddings(n, &model.config, seed);
        let mut moved = Tensor::zeros(n, 4);
        for o in 0..n {
            let p = perm[o] as usize;
            moved.data_mut()[p * 4..(p + 1) * 4].copy_from_slice(init.row_slice(o));
        }
        let (v, a) = model.forward_with_init(&s, &init).unwrap();
        let (w, b) = model.forward_with_init(&s.permuted(&perm), &moved).unwrap();
        prop_assert!((v[0] - w[0]).abs() < 1e-9);
        for o in 0..n {
            for j in 0..4 {
                prop_assert!((a.objects.get(o, j) - b.objects.get(perm[o] as usize, j)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn embeddings_only_see_objects_within_the_round_count(
        rounds in 1usize..5,
        extra in 1usize..4,
        seed in 0u64..1000,
        agg in aggregation(),
    ) {
        // Object 0 is `rounds + extra` hops from the far end of the chain.
        let n = rounds + extra + 1;
        let s = chain(n);
        let model = chain_model(4, rounds, agg, seed);
        let init = init_embeddings(n, &model.config, seed);
        let mut changed = init.clone();
        for j in 0..4 {
            changed.data_mut()[(n - 1) * 4 + j] += 3.0;
        }
        let (_, a) = model.forward_with_init(&s, &init).unwrap();
        let (_, b) = model.forward_with_init(&s, &changed).unwrap();
        // Exactly `rounds` hops away from the far end: may change. Further: may not.
        for o in 0..n - 1 - rounds {
            prop_assert_eq!(a.objects.row_slice(o), b.objects.row_slice(o), "object {} moved", o);
        }
    }
}

#[test]
fn zero_init_makes_values_seed_independent() {
    let s = chain(5);
    let mut model = chain_model(4, 2, Aggregation::Sum, 3);
    model.config.init = InitMode::Zero;
    let a = model.forward(&s, 1).unwrap().0;
    let b = model.forward(&s, 2).unwrap().0;
    assert_eq!(a, b);
}
