//! User-identifier detection.
//!
//! Key/value candidates are extracted from query strings, POST bodies and
//! cookies, then filtered by four elimination rules:
//!
//! 1. the same (host, key, value) seen in more than one profile;
//! 2. a (host, key) whose values differ in length;
//! 3. a (host, key) where values from different profiles are too similar
//!    (Ratcliff/Obershelp similarity at or above the threshold);
//! 4. values shorter than the minimum ID length.
//!
//! Every rule is evaluated against the full extracted candidate set, so the
//! outcome does not depend on rule order.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use percent_encoding::percent_decode;
use serde::{Deserialize, Serialize};

use crate::log_model::{CookieRecord, Corpus, RequestRecord};
use crate::similarity::{ratcliff_obershelp, similarity_upper_bound};

pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 0.66;
pub const DEFAULT_MIN_ID_LENGTH: usize = 8;
pub const DEFAULT_DELIMITERS: &[char] = &['&', ';', ',', '|'];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Cookie,
    UrlParam,
    PostParam,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IdCandidate {
    pub owner_host: String,
    pub key: String,
    pub value: String,
    pub profile_id: String,
    pub origin: Origin,
}

/// A candidate that survived every elimination rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UserId {
    pub profile_id: String,
    pub owner_host: String,
    pub key: String,
    pub value: String,
    pub origin: Origin,
}

impl From<&IdCandidate> for UserId {
    fn from(c: &IdCandidate) -> Self {
        UserId {
            profile_id: c.profile_id.clone(),
            owner_host: c.owner_host.clone(),
            key: c.key.clone(),
            value: c.value.clone(),
            origin: c.origin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdParams {
    pub similarity_threshold: f64,
    pub min_id_length: usize,
    pub delimiters: Vec<char>,
}

impl Default for IdParams {
    fn default() -> Self {
        IdParams {
            similarity_threshold: DEFAULT_SIMILARITY_THRESHOLD,
            min_id_length: DEFAULT_MIN_ID_LENGTH,
            delimiters: DEFAULT_DELIMITERS.to_vec(),
        }
    }
}

/// Percent-decodes once; bytes that do not form valid UTF-8 afterwards are
/// replaced.
pub fn percent_decode_once(raw: &[u8]) -> String {
    String::from_utf8_lossy(&percent_decode(raw).collect::<Vec<u8>>()).into_owned()
}

/// Splits `text` (after one round of percent-decoding) on the delimiters and
/// each fragment on its first `=`. Fragments without `=` or with an empty
/// key or value are skipped.
pub fn split_pairs(raw: &[u8], delimiters: &[char]) -> Vec<(String, String)> {
    let text = percent_decode_once(raw);
    text.split(|c| delimiters.contains(&c))
        .filter_map(|frag| frag.split_once('='))
        .filter(|(k, v)| !k.is_empty() && !v.is_empty())
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

pub fn extract_candidates(
    requests: &[RequestRecord],
    cookies: &[CookieRecord],
    delimiters: &[char],
) -> Vec<IdCandidate> {
    let mut out = Vec::new();
    let mut push = |host: &str, profile: &str, origin: Origin, (key, value): (String, String)| {
        out.push(IdCandidate {
            owner_host: host.to_string(),
            key,
            value,
            profile_id: profile.to_string(),
            origin,
        });
    };
    for r in requests {
        if let Some(q) = &r.url.query {
            for pair in split_pairs(q.as_bytes(), delimiters) {
                push(&r.url.host, &r.profile_id, Origin::UrlParam, pair);
            }
        }
        if let Some(body) = &r.post_body {
            for pair in split_pairs(body, delimiters) {
                push(&r.url.host, &r.profile_id, Origin::PostParam, pair);
            }
        }
    }
    for c in cookies {
        let value = String::from_utf8_lossy(&c.value);
        if value.contains(|ch| delimiters.contains(&ch)) {
            for pair in split_pairs(&c.value, delimiters) {
                push(&c.domain, &c.profile_id, Origin::Cookie, pair);
            }
        } else {
            let decoded = percent_decode_once(&c.value);
            if !c.name.is_empty() && !decoded.is_empty() {
                push(&c.domain, &c.profile_id, Origin::Cookie, (c.name.clone(), decoded));
            }
        }
    }
    out
}

/// Rule 1: drop every candidate whose (host, key, value) occurs in two or
/// more profiles.
pub fn rule_cross_profile(candidates: &[IdCandidate]) -> Vec<IdCandidate> {
    let mut profiles: HashMap<(&str, &str, &str), HashSet<&str>> = HashMap::new();
    for c in candidates {
        profiles
            .entry((&c.owner_host, &c.key, &c.value))
            .or_default()
            .insert(&c.profile_id);
    }
    candidates
        .iter()
        .filter(|c| profiles[&(c.owner_host.as_str(), c.key.as_str(), c.value.as_str())].len() < 2)
        .cloned()
        .collect()
}

/// Rule 2: drop every candidate of a (host, key) whose values do not all
/// have the same length.
pub fn rule_length_consistency(candidates: &[IdCandidate]) -> Vec<IdCandidate> {
    let mut lengths: HashMap<(&str, &str), HashSet<usize>> = HashMap::new();
    for c in candidates {
        lengths
            .entry((&c.owner_host, &c.key))
            .or_default()
            .insert(c.value.chars().count());
    }
    candidates
        .iter()
        .filter(|c| lengths[&(c.owner_host.as_str(), c.key.as_str())].len() == 1)
        .cloned()
        .collect()
}

/// Rule 3: drop every candidate of a (host, key) where two distinct values
/// observed in different profiles have similarity ≥ `threshold`.
pub fn rule_similarity(candidates: &[IdCandidate], threshold: f64) -> Vec<IdCandidate> {
    let mut groups: HashMap<(&str, &str), Vec<(&str, &str)>> = HashMap::new();
    for c in candidates {
        groups
            .entry((&c.owner_host, &c.key))
            .or_default()
            .push((&c.value, &c.profile_id));
    }
    let mut similar_keys = HashSet::new();
    for (key, obs) in &groups {
        'outer: for (i, (va, pa)) in obs.iter().enumerate() {
            for (vb, pb) in &obs[i + 1..] {
                if va != vb && pa != pb && ratcliff_obershelp(va, vb) >= threshold {
                    similar_keys.insert(*key);
                    break 'outer;
                }
            }
        }
    }
    candidates
        .iter()
        .filter(|c| !similar_keys.contains(&(c.owner_host.as_str(), c.key.as_str())))
        .cloned()
        .collect()
}

/// Rule 4: drop values shorter than `min_len` characters (inclusive bound).
pub fn rule_min_length(candidates: &[IdCandidate], min_len: usize) -> Vec<IdCandidate> {
    candidates
        .iter()
        .filter(|c| c.value.chars().count() >= min_len)
        .cloned()
        .collect()
}

/// Runs extraction and all four rules; output is sorted and deduplicated.
pub fn detect_ids(corpus: &Corpus, params: &IdParams) -> Vec<UserId> {
    let candidates = extract_candidates(&corpus.requests, &corpus.cookies, &params.delimiters);
    filter_candidates(&candidates, params)
}

/// Applies the elimination rules group by group.
pub fn filter_candidates(candidates: &[IdCandidate], params: &IdParams) -> Vec<UserId> {
    // (host, key) → value → profiles
    let mut groups: BTreeMap<(&str, &str), BTreeMap<&str, BTreeSet<&str>>> = BTreeMap::new();
    for c in candidates {
        groups
            .entry((&c.owner_host, &c.key))
            .or_default()
            .entry(&c.value)
            .or_default()
            .insert(&c.profile_id);
    }

    let mut accepted: HashSet<(&str, &str, &str)> = HashSet::new();
    for ((host, key), values) in &groups {
        let mut lengths = values.keys().map(|v| v.chars().count());
        let first = lengths.next().unwrap_or(0);
        if lengths.any(|l| l != first) || first < params.min_id_length {
            continue;
        }
        if has_similar_cross_profile_pair(values, params.similarity_threshold) {
            continue;
        }
        for (value, profiles) in values {
            if profiles.len() == 1 {
                accepted.insert((host, key, value));
            }
        }
    }

    let mut out: Vec<UserId> = candidates
        .iter()
        .filter(|c| accepted.contains(&(c.owner_host.as_str(), c.key.as_str(), c.value.as_str())))
        .map(UserId::from)
        .collect();
    out.sort();
    out.dedup();
    out
}

fn has_similar_cross_profile_pair(values: &BTreeMap<&str, BTreeSet<&str>>, threshold: f64) -> bool {
    let entries: Vec<_> = values.iter().collect();
    for (i, (va, pa)) in entries.iter().enumerate() {
        for (vb, pb) in &entries[i + 1..] {
            // some profile of a differs from some profile of b
            let cross = pa.len() > 1 || pb.len() > 1 || pa.iter().next() != pb.iter().next();
            if !cross {
                continue;
            }
            if similarity_upper_bound(va, vb) < threshold {
                continue;
            }
            if ratcliff_obershelp(va, vb) >= threshold {
                return true;
            }
        }
    }
    false
}
