//! Property tests for normalization and the CoNLL-U reader.

use std::io::Cursor;

use ced_core::corpus::{bucket_by_day, load_conllu, load_jsonl, normalize_text, Document};
use proptest::prelude::*;

fn raw_text_strategy() -> impl Strategy<Value = String> {
    // Tweet-ish soup: words, sigils, urls, accents, stray punctuation.
    let fragment = prop_oneof![
        "[a-z]{1,8}",
        "@[a-zA-Z0-9_]{1,6}",
        "#[a-zA-Z]{1,6}",
        Just("http://t.co/Ab3".to_string()),
        Just("https://example.com/x?y=1#frag".to_string()),
        Just("www.news.site/path".to_string()),
        Just("Café".to_string()),
        Just("naïve RÉSUMÉ".to_string()),
        Just("@#mixed".to_string()),
        Just("!!!".to_string()),
        Just("  ".to_string()),
    ];
    proptest::collection::vec(fragment, 0..12).prop_map(|parts| parts.join(" "))
}

proptest! {
    #[test]
    fn normalize_text_is_idempotent(raw in raw_text_strategy()) {
        let once = normalize_text(&raw);
        let twice = normalize_text(&once);
        prop_assert_eq!(&twice, &once, "raw = {:?}", raw);
    }

    #[test]
    fn normalized_text_is_clean(raw in raw_text_strategy()) {
        let out = normalize_text(&raw);
        prop_assert!(!out.contains('#'));
        prop_assert!(!out.contains("http://"));
        prop_assert!(!out.contains("https://"));
        prop_assert!(!out.contains("  "));
        prop_assert_eq!(out.trim(), &out);
        prop_assert_eq!(out.to_lowercase(), out.clone());
    }
}

fn conllu_soup_strategy() -> impl Strategy<Value = String> {
    // Random small sentences with arbitrary head indices: many are invalid
    // (self-loops, cycles, multiple roots, out-of-range heads).
    let token = (0usize..8, "[a-d]{1,3}").prop_map(|(head, lemma)| (head, lemma));
    let sentence = proptest::collection::vec(token, 1..6);
    proptest::collection::vec(sentence, 1..5).prop_map(|sentences| {
        let mut out = String::from("# newdoc id = fuzz\n");
        for s in sentences {
            for (i, (head, lemma)) in s.iter().enumerate() {
                out.push_str(&format!(
                    "{}\t{}\t{}\tX\t_\t_\t{}\tdep\t_\t_\n",
                    i + 1,
                    lemma,
                    lemma,
                    head
                ));
            }
            out.push('\n');
        }
        out
    })
}

proptest! {
    #[test]
    fn conllu_reader_never_yields_invalid_trees(text in conllu_soup_strategy()) {
        let out = load_conllu(Cursor::new(text)).unwrap();
        for (_, trees) in &out.docs {
            for tree in trees {
                // Reconstructing from the same tokens must succeed: the
                // reader only emits trees that satisfy the invariants.
                let rebuilt = ced_core::corpus::DepTree::new(tree.nodes().to_vec());
                prop_assert!(rebuilt.is_ok());
                let root_count = tree.nodes().iter().filter(|t| t.head == 0).count();
                prop_assert_eq!(root_count, 1);
            }
        }
    }
}

#[test]
fn every_admitted_document_lands_in_exactly_one_slot() {
    let mut lines = Vec::new();
    for i in 0..50 {
        let ts = 1437000000 + i * 7200;
        lines.push(format!(
            r#"{{"id":"d{i}","timestamp":{ts},"text":"doc number {i}"}}"#
        ));
    }
    let out = load_jsonl(Cursor::new(lines.join("\n"))).unwrap();
    let admitted = out.docs.len();
    let slots = bucket_by_day(out.docs);
    let total: usize = slots.iter().map(|s| s.documents.len()).sum();
    assert_eq!(total, admitted);
    let mut seen = std::collections::BTreeSet::new();
    for slot in &slots {
        for doc in &slot.documents {
            assert!(seen.insert(doc.doc_id.clone()), "{} twice", doc.doc_id);
            assert_eq!(
                Document::day(doc).unwrap(),
                slot.day,
                "document outside its slot"
            );
        }
    }
}
