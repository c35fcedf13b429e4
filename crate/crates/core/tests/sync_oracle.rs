use std::collections::BTreeSet;

use cookiesync::decode::{apply_chain, Codec, DecodeParams};
use cookiesync::ids::{detect_ids, IdParams};
use cookiesync::sync::{company_pairs, detect_sync, SyncParams};
use cookiesync::synth::{generate_corpus, Carrier, ScenarioSpec, StarSpec, SyntheticCorpus};

fn detect(s: &SyntheticCorpus, params: &SyncParams) -> Vec<cookiesync::sync::SyncEvent> {
    let ids = detect_ids(&s.corpus, &IdParams::default());
    detect_sync(&s.corpus.requests, &ids, &s.company_db, params)
}

fn truth_pairs(s: &SyntheticCorpus) -> BTreeSet<(String, String)> {
    s.truth
        .sync_pairs
        .iter()
        .map(|p| (p.sender.clone(), p.receiver.clone()))
        .collect()
}

fn spec(seed: u64, carrier: Carrier, chains: Vec<Vec<Codec>>) -> ScenarioSpec {
    ScenarioSpec {
        stars: vec![
            StarSpec {
                center: "hub".into(),
                leaves: 5,
                carrier,
            },
            StarSpec {
                center: "relay".into(),
                leaves: 2,
                carrier,
            },
        ],
        codec_chains: chains,
        n_isolated: 2,
        noise: 4,
        ..ScenarioSpec::new(seed)
    }
}

fn chains() -> Vec<Vec<Vec<Codec>>> {
    vec![
        vec![],
        vec![vec![Codec::Base64]],
        vec![vec![Codec::Base64, Codec::Base64]],
        vec![
            vec![Codec::Deflate, Codec::Base64],
            vec![Codec::Gzip, Codec::Base64, Codec::Base64],
        ],
    ]
}

#[test]
fn five_leaf_star_depth_two() {
    let s = generate_corpus(&ScenarioSpec {
        stars: vec![StarSpec {
            center: "hub".into(),
            leaves: 5,
            carrier: Carrier::Query,
        }],
        codec_chains: vec![vec![Codec::Base64, Codec::Base64]],
        ..ScenarioSpec::new(11)
    })
    .unwrap();
    let pairs = company_pairs(&detect(&s, &SyncParams::default()));
    assert_eq!(pairs.len(), 5);
    assert_eq!(pairs, truth_pairs(&s));
}

#[test]
fn every_carrier_and_chain_recovered() {
    let mut seed = 100;
    for carrier in [Carrier::Query, Carrier::Post, Carrier::Nested, Carrier::Referrer] {
        for chain in chains() {
            seed += 1;
            let s = generate_corpus(&spec(seed, carrier, chain.clone())).unwrap();
            let events = detect(&s, &SyncParams::default());
            assert_eq!(company_pairs(&events), truth_pairs(&s), "{carrier:?} {chain:?}");
            assert!(events.iter().all(|e| e.sender_company != e.receiver_company));
        }
    }
}

#[test]
fn events_are_sound() {
    let params = SyncParams::default();
    for carrier in [Carrier::Query, Carrier::Post, Carrier::Nested, Carrier::Referrer] {
        for chain in chains() {
            let s = generate_corpus(&spec(7, carrier, chain)).unwrap();
            for e in detect(&s, &params) {
                let request = s
                    .corpus
                    .requests
                    .iter()
                    .find(|r| r.profile_id == e.profile_id && r.seq == e.request_seq)
                    .unwrap();
                let raw = e.location.extract(request, &params.delimiters).unwrap();
                let decoded = apply_chain(&raw, &e.codec_chain, params.decode.max_inflate_bytes).unwrap();
                let text = String::from_utf8(decoded).unwrap();
                assert!(text.contains(&e.id.value), "{e:?}");
            }
        }
    }
}

#[test]
fn deeper_decoding_never_loses_events() {
    let s = generate_corpus(&spec(
        3,
        Carrier::Query,
        vec![
            vec![],
            vec![Codec::Base64],
            vec![Codec::Base64, Codec::Base64],
            vec![Codec::Gzip, Codec::Base64, Codec::Base64],
        ],
    ))
    .unwrap();
    let mut previous: BTreeSet<String> = BTreeSet::new();
    for depth in 1..=4 {
        let params = SyncParams {
            decode: DecodeParams {
                max_depth: depth,
                ..DecodeParams::default()
            },
            ..SyncParams::default()
        };
        let events: BTreeSet<String> = detect(&s, &params)
            .iter()
            .map(|e| {
                format!(
                    "{}|{}|{}|{}|{}",
                    e.profile_id, e.request_seq, e.sender_company, e.receiver_company, e.id.value
                )
            })
            .collect();
        assert!(previous.is_subset(&events), "depth {depth}");
        previous = events;
    }
    assert_eq!(company_pairs(&detect(&s, &SyncParams::default())), truth_pairs(&s));
}

#[test]
fn shallow_decoding_misses_deep_chains() {
    let s = generate_corpus(&spec(4, Carrier::Query, vec![vec![Codec::Base64, Codec::Base64]])).unwrap();
    let shallow = SyncParams {
        decode: DecodeParams {
            max_depth: 1,
            ..DecodeParams::default()
        },
        ..SyncParams::default()
    };
    assert!(detect(&s, &shallow).is_empty());
}
