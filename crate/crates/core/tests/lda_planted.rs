use discode_core::guidance::GuidanceSpec;
use discode_core::lda::{build_eta, fit_lda, lda_topics, tail_is_stable, LdaParams};
use discode_core::synthetic::{planted_corpus, PlantedCorpus, PlantedSpec};

fn three_blocks(seed: u64) -> PlantedCorpus {
    planted_corpus(&PlantedSpec {
        topics: 3,
        words_per_topic: 20,
        docs: 60,
        doc_len: 40,
        purity: 0.95,
        seed,
    })
}

#[test]
fn recovers_three_blocks_top5() {
    for seed in 0..3 {
        let c = three_blocks(seed);
        let eta = build_eta(None, &c.vocab, 3).unwrap();
        let model = fit_lda(
            &c.docs,
            &c.vocab,
            &eta,
            &LdaParams {
                seed,
                ..Default::default()
            },
        )
        .unwrap();
        let topics = lda_topics(&model, &c.vocab, 5);
        let overlap = |t: usize, b: usize| {
            topics[t]
                .words()
                .iter()
                .filter(|w| c.blocks[b].iter().any(|x| x == *w))
                .count()
        };
        let perms = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let best = perms
            .iter()
            .max_by_key(|p| (0..3).map(|t| overlap(t, p[t])).sum::<usize>())
            .unwrap();
        for (t, &b) in best.iter().enumerate() {
            assert!(overlap(t, b) >= 4, "seed {seed} topic {t}");
        }
        assert!(tail_is_stable(&model.log_likelihood_trace));
    }
}

#[test]
fn fixed_seed_is_bit_identical() {
    let c = three_blocks(9);
    let eta = build_eta(None, &c.vocab, 3).unwrap();
    let params = LdaParams {
        iterations: 50,
        seed: 4,
        ..Default::default()
    };
    let a = fit_lda(&c.docs, &c.vocab, &eta, &params).unwrap();
    let b = fit_lda(&c.docs, &c.vocab, &eta, &params).unwrap();
    assert_eq!(a.topic_word.as_slice(), b.topic_word.as_slice());
    assert_eq!(a.log_likelihood_trace, b.log_likelihood_trace);
    let other = fit_lda(&c.docs, &c.vocab, &eta, &LdaParams { seed: 5, ..params }).unwrap();
    assert_ne!(a.topic_word.as_slice(), other.topic_word.as_slice());
}

#[test]
fn guided_keyword_mass_not_below_unguided() {
    let mut diffs = Vec::new();
    for seed in 0..5 {
        let c = planted_corpus(&PlantedSpec {
            seed: seed + 200,
            ..Default::default()
        });
        let keywords = &c.blocks[1][..5];
        let ids: Vec<usize> = keywords.iter().map(|w| c.vocab.id(w).unwrap()).collect();
        let params = LdaParams {
            iterations: 300,
            seed,
            ..Default::default()
        };
        let spec = GuidanceSpec::new(vec![keywords.to_vec()]).unwrap();
        let guided = fit_lda(
            &c.docs,
            &c.vocab,
            &build_eta(Some(&spec), &c.vocab, 5).unwrap(),
            &params,
        )
        .unwrap();
        let plain = fit_lda(
            &c.docs,
            &c.vocab,
            &build_eta(None, &c.vocab, 5).unwrap(),
            &params,
        )
        .unwrap();
        let mass = |row: &[f64]| ids.iter().map(|&i| row[i]).sum::<f64>();
        let best_plain = (0..5)
            .map(|t| mass(plain.topic_word.row(t)))
            .fold(0.0, f64::max);
        diffs.push(mass(guided.topic_word.row(0)) - best_plain);
    }
    diffs.sort_by(f64::total_cmp);
    assert!(diffs[2] >= -0.05, "{diffs:?}");
}
