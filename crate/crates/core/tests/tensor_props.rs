mod common;

use discocat::space::{build_space, cosine, tokenize_corpus, SpaceConfig, VectorSpace, Weighting, Window};
use discocat::tensor::{
    compose_full_epsilon, compose_reduced, expand_reduced_to_full, kron, kronecker_similarity_explicit,
    kronecker_similarity_factorized, learn_relation_sum, read_tensor_file, write_tensor_file, Method,
    RelationInstance, Tensor, DEFAULT_FULL_CAP,
};
use proptest::prelude::*;

fn vector(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, d)
}

fn positive(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..3.0, d)
}

/// A reduced tensor of arity `m` over dimension `d` with matching arguments.
fn reduced_case() -> impl Strategy<Value = (Tensor, Vec<Vec<f64>>)> {
    (1usize..=3, 1usize..=6).prop_flat_map(|(m, d)| {
        let d = if m == 3 { d.min(5) } else { d };
        (
            vector(d.pow(m as u32)),
            prop::collection::vec(vector(d), m),
        )
            .prop_map(move |(data, args)| (Tensor::new("r", Method::Sum, vec![d; m], data).unwrap(), args))
    })
}

/// Explicit multi-index sum `Σ T[s, i₁…iₖ] v₁[i₁]…vₖ[iₖ]` over a tensor with a
/// leading free axis.
fn contraction_oracle(t: &Tensor, args: &[Vec<f64>]) -> Vec<f64> {
    let free = t.shape[0];
    let mut out = vec![0.0; free];
    let cells: usize = t.shape[1..].iter().product();
    for s in 0..free {
        for flat in 0..cells {
            let mut rem = flat;
            let mut w = 1.0;
            for k in (0..args.len()).rev() {
                w *= args[k][rem % t.shape[k + 1]];
                rem /= t.shape[k + 1];
            }
            out[s] += t.data[s * cells + flat] * w;
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn reduced_equals_full((t, args) in reduced_case()) {
        let refs: Vec<&[f64]> = args.iter().map(Vec::as_slice).collect();
        let reduced = compose_reduced(&t, &refs).unwrap();
        let full = expand_reduced_to_full(&t, DEFAULT_FULL_CAP).unwrap();
        let via_full = compose_full_epsilon(&full, &refs).unwrap();
        prop_assert_eq!(reduced.len(), via_full.len());
        for (a, b) in reduced.iter().zip(&via_full) {
            prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
        }
    }

    #[test]
    fn factorized_kronecker_matches_explicit(
        d in 1usize..=6,
        seed in prop::collection::vec(positive(6), 4),
    ) {
        let v: Vec<&[f64]> = seed.iter().map(|x| &x[..d]).collect();
        let fast = kronecker_similarity_factorized(v[0], v[1], v[2], v[3]);
        let slow = kronecker_similarity_explicit(v[0], v[1], v[2], v[3]).unwrap();
        prop_assert!((fast.value - slow.value).abs() <= 1e-9);
    }

    #[test]
    fn curried_application_matches_index_sum(
        dims in prop::collection::vec(1usize..=4, 2..=4),
        seed in prop::collection::vec(-2.0f64..2.0, 256),
        argseed in prop::collection::vec(-2.0f64..2.0, 16),
    ) {
        let cells: usize = dims.iter().product();
        let t = Tensor::new("t", Method::Given, dims.clone(), seed[..cells].to_vec()).unwrap();
        let args: Vec<Vec<f64>> = dims[1..].iter().enumerate().map(|(k, &n)| argseed[k * 4..k * 4 + n].to_vec()).collect();
        let refs: Vec<&[f64]> = args.iter().map(Vec::as_slice).collect();
        let got = t.apply(&refs).unwrap();
        let want = contraction_oracle(&t, &args);
        for (a, b) in got.data.iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn sum_learning_is_additive(
        a in positive(3), b in positive(3), c in positive(3), e in positive(3),
    ) {
        let mut space = VectorSpace::new(vec!["x".into(), "y".into(), "z".into()]);
        for (w, v) in [("a", &a), ("b", &b), ("c", &c), ("e", &e)] {
            space.insert(w, v.clone()).unwrap();
        }
        let inst = |s: &str, o: &str| RelationInstance { relation: "v".into(), args: vec![s.into(), o.into()] };
        let both = learn_relation_sum("v", &[inst("a", "b"), inst("c", "e")], &space, 2).unwrap().tensor;
        let want: Vec<f64> = kron(&a, &b).iter().zip(kron(&c, &e)).map(|(p, q)| p + q).collect();
        for (x, y) in both.data.iter().zip(&want) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn cosine_is_bounded_and_scale_invariant(u in vector(5), v in vector(5), k in 0.1f64..10.0) {
        let s = cosine(&u, &v);
        prop_assert!(s.value >= -1.0 && s.value <= 1.0);
        let scaled: Vec<f64> = u.iter().map(|x| x * k).collect();
        if !s.degenerate {
            prop_assert!((cosine(&scaled, &v).value - s.value).abs() <= 1e-9);
            prop_assert!((cosine(&v, &u).value - s.value).abs() <= 1e-12);
        }
    }

    #[test]
    fn tensor_file_round_trips_at_nine_digits(data in prop::collection::vec(-1e6f64..1e6, 1..12)) {
        let n = data.len();
        let t = Tensor::new("w", Method::Kronecker, vec![n], data.clone()).unwrap();
        let text = write_tensor_file([&t]);
        let back = read_tensor_file(&text).unwrap();
        for (a, b) in back["w"].data.iter().zip(&data) {
            prop_assert!((a - b).abs() <= 1e-8 * b.abs().max(1e-300));
        }
        prop_assert_eq!(write_tensor_file(back.values()), text);
    }

    #[test]
    fn space_file_round_trips(rows in prop::collection::vec(vector(3), 1..6)) {
        let mut space = VectorSpace::new(vec!["b1".into(), "b2".into(), "b3".into()]);
        for (i, r) in rows.iter().enumerate() {
            space.insert(format!("w{i}"), r.clone()).unwrap();
        }
        let text = space.to_tsv();
        let back = VectorSpace::from_tsv(&text).unwrap();
        prop_assert_eq!(back.to_tsv(), text);
    }

    #[test]
    fn ppmi_is_non_negative(words in prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e"]), 4..40)) {
        let text: String = words.chunks(5).map(|c| c.join(" ")).collect::<Vec<_>>().join("\n");
        let corpus = tokenize_corpus(&text);
        let config = SpaceConfig { basis_size: 3, window: Window::Words(2), weighting: Weighting::Pmi, ..SpaceConfig::default() };
        let (space, _) = build_space(&corpus, &config).unwrap();
        prop_assert!(space.vectors.values().flatten().all(|x| *x >= 0.0));
    }
}

#[test]
fn window_counts_match_brute_force() {
    let text = "a b c a d\nb a c\nd d a b c a";
    let corpus = tokenize_corpus(text);
    let config = SpaceConfig {
        basis_size: 4,
        window: Window::Words(2),
        weighting: Weighting::Raw,
        ..SpaceConfig::default()
    };
    let (space, _) = build_space(&corpus, &config).unwrap();
    for (word, row) in &space.vectors {
        for (b, basis) in space.basis.iter().enumerate() {
            let mut want = 0.0;
            for sent in &corpus {
                for (i, w) in sent.iter().enumerate() {
                    if w != word {
                        continue;
                    }
                    for (j, c) in sent.iter().enumerate() {
                        if i != j && i.abs_diff(j) <= 2 && c == basis {
                            want += 1.0;
                        }
                    }
                }
            }
            assert_eq!(row[b], want, "{word} / {basis}");
        }
    }
}
