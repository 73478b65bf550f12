use discode_core::lsa::{
    build_term_doc_matrix, fit_lsa, fit_lsa_with, lsa_topics, LsaConfig, SvdMethod,
};
use discode_core::{TokenDocument, Vocabulary};
use nalgebra::DMatrix;

fn block_docs() -> Vec<TokenDocument> {
    (0..10)
        .map(|d| {
            let tokens: Vec<&str> = if d < 5 {
                vec!["alpha", "alpha", "beta", "beta"]
            } else {
                vec!["gamma", "delta"]
            };
            TokenDocument::new(
                format!("d{d}"),
                tokens.into_iter().map(String::from).collect(),
            )
        })
        .collect()
}

#[test]
fn two_blocks_give_two_topics() {
    let docs = block_docs();
    let vocab = Vocabulary::from_documents(&docs);
    let m = build_term_doc_matrix(&docs, &vocab).unwrap();
    let dense = m.to_dense();
    let oracle = DMatrix::from_row_slice(4, 10, dense.as_slice()).svd(false, false);
    let mut sigma: Vec<f64> = oracle.singular_values.iter().copied().collect();
    sigma.sort_by(|a, b| b.total_cmp(a));

    for method in [SvdMethod::Dense, SvdMethod::Subspace] {
        let cfg = LsaConfig {
            method,
            oversample: 1,
            ..Default::default()
        };
        let model = fit_lsa_with(&m, 2, &cfg).unwrap();
        for (got, want) in model.singular_values.iter().zip(&sigma) {
            assert!((got - want).abs() < 1e-9, "{method:?}: {got} vs {want}");
        }
        let topics = lsa_topics(&model, &vocab, 2);
        let mut words: Vec<Vec<&str>> = topics.iter().map(|t| t.words()).collect();
        for w in &mut words {
            w.sort();
        }
        assert_eq!(
            words,
            [vec!["alpha", "beta"], vec!["delta", "gamma"]],
            "{method:?}"
        );
        for t in &topics {
            assert!(t.terms.iter().all(|(_, v)| *v > 0.0));
        }
    }
}

#[test]
fn solvers_agree_on_a_wide_sparse_matrix() {
    let docs: Vec<TokenDocument> = (0..300)
        .map(|d| {
            let tokens = (0..6)
                .map(|j| format!("t{}", (d * 7 + j * j * 13) % 90))
                .collect();
            TokenDocument::new(format!("d{d}"), tokens)
        })
        .collect();
    let vocab = Vocabulary::from_documents(&docs);
    let m = build_term_doc_matrix(&docs, &vocab).unwrap();
    let dense = fit_lsa_with(
        &m,
        6,
        &LsaConfig {
            method: SvdMethod::Dense,
            ..Default::default()
        },
    )
    .unwrap();
    let sub = fit_lsa_with(
        &m,
        6,
        &LsaConfig {
            method: SvdMethod::Subspace,
            ..Default::default()
        },
    )
    .unwrap();
    for (a, b) in dense.singular_values.iter().zip(&sub.singular_values) {
        assert!(
            (a - b).abs() <= 1e-8 * dense.singular_values[0],
            "{a} vs {b}"
        );
    }
    assert!(sub.iterations >= 1);
    assert_eq!(fit_lsa(&m, 6).unwrap(), dense);
}
