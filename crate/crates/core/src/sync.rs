//! Cookie-sync detection.
//!
//! A sync event is recorded whenever a validated user ID owned by one company
//! shows up in a request to a different company, either verbatim, inside a
//! decoded parameter, inside a URL nested in a parameter, or in the referrer.
//! Matches are on the ID value alone (partners rename keys) and must be
//! token-delimited: the characters around the match may not be alphanumeric.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use aho_corasick::AhoCorasick;
use serde::{Deserialize, Serialize};

use crate::company::CompanyDb;
use crate::decode::{decode_layers, extract_urls, Codec, DecodeParams};
use crate::ids::{percent_decode_once, split_pairs, Origin, UserId, DEFAULT_DELIMITERS};
use crate::log_model::RequestRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    QueryParam,
    PostParam,
    NestedUrl,
    Referrer,
}

/// Where in the request the evidence was found.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "part", rename_all = "snake_case")]
pub enum Location {
    /// The full request URL.
    Url,
    /// The `index`-th pair of the (once percent-decoded) query string.
    Query {
        index: usize,
        key: String,
    },
    /// The full POST body.
    Body,
    /// The `index`-th pair of the POST body.
    BodyParam {
        index: usize,
        key: String,
    },
    Referrer,
}

impl Location {
    /// The raw bytes this location designates in `request`, before the
    /// event's codec chain is applied.
    pub fn extract(&self, request: &RequestRecord, delimiters: &[char]) -> Option<Vec<u8>> {
        match self {
            Location::Url => Some(request.url.to_string().into_bytes()),
            Location::Query { index, .. } => split_pairs(request.url.query_str().as_bytes(), delimiters)
                .into_iter()
                .nth(*index)
                .map(|(_, v)| v.into_bytes()),
            Location::Body => request.post_body.clone(),
            Location::BodyParam { index, .. } => split_pairs(request.post_body.as_deref()?, delimiters)
                .into_iter()
                .nth(*index)
                .map(|(_, v)| v.into_bytes()),
            Location::Referrer => {
                Some(percent_decode_once(request.referrer.as_ref()?.query_str().as_bytes()).into_bytes())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncEvent {
    pub measurement_id: String,
    pub profile_id: String,
    pub request_seq: u64,
    pub sender_company: String,
    pub receiver_company: String,
    pub mechanism: Mechanism,
    pub id: UserId,
    pub location: Location,
    pub codec_chain: Vec<Codec>,
}

impl SyncEvent {
    fn sort_key(&self) -> impl Ord + '_ {
        (
            &self.measurement_id,
            &self.profile_id,
            self.request_seq,
            &self.sender_company,
            &self.receiver_company,
            &self.id.value,
            self.mechanism,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncParams {
    pub decode: DecodeParams,
    pub delimiters: Vec<char>,
}

impl Default for SyncParams {
    fn default() -> Self {
        SyncParams {
            decode: DecodeParams::default(),
            delimiters: DEFAULT_DELIMITERS.to_vec(),
        }
    }
}

/// IDs of one profile indexed for multi-pattern search.
struct ProfileIndex<'a> {
    values: Vec<&'a str>,
    /// Per value: (owner company, representative UserId), one per company.
    owners: Vec<Vec<(String, &'a UserId)>>,
    matcher: AhoCorasick,
}

impl<'a> ProfileIndex<'a> {
    fn build(ids: &[&'a UserId], db: &CompanyDb, decode: &DecodeParams) -> ProfileIndex<'a> {
        let mut by_value: BTreeMap<&str, Vec<&UserId>> = BTreeMap::new();
        for id in ids {
            by_value.entry(&id.value).or_default().push(id);
        }
        let cookie_values: Vec<&str> = by_value
            .iter()
            .filter(|(_, holders)| holders.iter().any(|h| h.origin == Origin::Cookie))
            .map(|(v, _)| *v)
            .collect();
        let cookie_matcher = AhoCorasick::new(&cookie_values).expect("ID patterns are plain strings");
        let mut values = Vec::new();
        let mut owners = Vec::new();
        for (value, mut holders) in by_value {
            // a value held as a cookie anywhere belongs to its cookie owners;
            // a value seen only in parameters of several companies was
            // itself passed around and has no attributable origin
            let cookie_held = holders.iter().any(|h| h.origin == Origin::Cookie);
            if cookie_held {
                holders.retain(|h| h.origin == Origin::Cookie);
            }
            holders.sort();
            let mut per_company: BTreeMap<String, &UserId> = BTreeMap::new();
            for h in holders {
                per_company.entry(db.resolve(&h.owner_host)).or_insert(h);
            }
            if !cookie_held && per_company.len() > 1 {
                continue;
            }
            // a parameter value carrying (possibly encoded) a cookie ID is a
            // copy in transit; the cookie ID itself is what gets matched
            if !cookie_held
                && !cookie_values.is_empty()
                && decode_layers(value.as_bytes(), decode)
                    .iter()
                    .any(|layer| !token_matches(&cookie_matcher, &layer.text).is_empty())
            {
                continue;
            }
            values.push(value);
            owners.push(per_company.into_iter().collect());
        }
        let matcher = AhoCorasick::new(&values).expect("ID patterns are plain strings");
        ProfileIndex {
            values,
            owners,
            matcher,
        }
    }

    /// Indices of ID values occurring token-delimited in `text`.
    fn find(&self, text: &str) -> BTreeSet<usize> {
        if self.values.is_empty() {
            return BTreeSet::new();
        }
        token_matches(&self.matcher, text)
    }
}

/// Patterns found in `text` whose neighbouring characters are not
/// alphanumeric.
fn token_matches(matcher: &AhoCorasick, text: &str) -> BTreeSet<usize> {
    let mut hits = BTreeSet::new();
    for m in matcher.find_overlapping_iter(text) {
        let before = text[..m.start()].chars().next_back();
        let after = text[m.end()..].chars().next();
        if before.is_some_and(char::is_alphanumeric) || after.is_some_and(char::is_alphanumeric) {
            continue;
        }
        hits.insert(m.pattern().as_usize());
    }
    hits
}

struct Hit {
    value: usize,
    mechanism: Mechanism,
    location: Location,
    chain: Vec<Codec>,
}

/// Scans one parameter value (or body): verbatim and decoded layers, and the
/// queries of URLs found inside them.
fn scan_value(
    index: &ProfileIndex,
    raw: &[u8],
    location: Location,
    direct: Mechanism,
    params: &SyncParams,
    hits: &mut Vec<Hit>,
) {
    for layer in decode_layers(raw, &params.decode) {
        let mut nested = BTreeSet::new();
        for url in extract_urls(&layer.text) {
            nested.extend(index.find(url.query_str()));
        }
        for value in index.find(&layer.text) {
            let mechanism = if nested.contains(&value) {
                Mechanism::NestedUrl
            } else {
                direct
            };
            hits.push(Hit {
                value,
                mechanism,
                location: location.clone(),
                chain: layer.codec_chain.clone(),
            });
        }
        for value in nested {
            if !hits
                .iter()
                .any(|h| h.value == value && h.mechanism == Mechanism::NestedUrl)
            {
                hits.push(Hit {
                    value,
                    mechanism: Mechanism::NestedUrl,
                    location: location.clone(),
                    chain: layer.codec_chain.clone(),
                });
            }
        }
    }
}

fn scan_request(index: &ProfileIndex, r: &RequestRecord, params: &SyncParams) -> Vec<Hit> {
    let mut hits = Vec::new();
    for value in index.find(&r.url.to_string()) {
        hits.push(Hit {
            value,
            mechanism: Mechanism::QueryParam,
            location: Location::Url,
            chain: Vec::new(),
        });
    }
    if let Some(q) = &r.url.query {
        for (i, (key, value)) in split_pairs(q.as_bytes(), &params.delimiters).into_iter().enumerate() {
            let loc = Location::Query { index: i, key };
            scan_value(index, value.as_bytes(), loc, Mechanism::QueryParam, params, &mut hits);
        }
    }
    if let Some(body) = &r.post_body {
        scan_value(index, body, Location::Body, Mechanism::PostParam, params, &mut hits);
        for (i, (key, value)) in split_pairs(body, &params.delimiters).into_iter().enumerate() {
            let loc = Location::BodyParam { index: i, key };
            scan_value(index, value.as_bytes(), loc, Mechanism::PostParam, params, &mut hits);
        }
    }
    if let Some(referrer) = &r.referrer {
        let query = percent_decode_once(referrer.query_str().as_bytes());
        for value in index.find(&query) {
            hits.push(Hit {
                value,
                mechanism: Mechanism::Referrer,
                location: Location::Referrer,
                chain: Vec::new(),
            });
        }
    }
    hits
}

/// Detects sync events in `requests` given the validated `ids` of the same
/// corpus. IDs are only searched within their own profile's traffic. Output
/// is deduplicated and sorted by (measurement, profile, seq, sender,
/// receiver, id value, mechanism).
pub fn detect_sync(requests: &[RequestRecord], ids: &[UserId], db: &CompanyDb, params: &SyncParams) -> Vec<SyncEvent> {
    let mut per_profile: HashMap<&str, Vec<&UserId>> = HashMap::new();
    for id in ids {
        per_profile.entry(&id.profile_id).or_default().push(id);
    }
    let indices: HashMap<&str, ProfileIndex> = per_profile
        .into_iter()
        .map(|(p, ids)| (p, ProfileIndex::build(&ids, db, &params.decode)))
        .collect();

    let mut company_cache: HashMap<String, String> = HashMap::new();
    let mut company = |host: &str| -> String {
        company_cache
            .entry(host.to_string())
            .or_insert_with(|| db.resolve(host))
            .clone()
    };

    let mut events = Vec::new();
    let mut seen = BTreeSet::new();
    for r in requests {
        let Some(index) = indices.get(r.profile_id.as_str()) else {
            continue;
        };
        let hits = scan_request(index, r, params);
        if hits.is_empty() {
            continue;
        }
        let receiver = company(&r.url.host);
        let first_party = company(&r.top_level_site);
        let referrer_company = r.referrer.as_ref().map(|u| company(&u.host));
        for hit in hits {
            for (owner, id) in &index.owners[hit.value] {
                if *owner == receiver {
                    continue;
                }
                let sender = match hit.mechanism {
                    Mechanism::Referrer => match &referrer_company {
                        Some(c) => c.clone(),
                        None => continue,
                    },
                    _ => owner.clone(),
                };
                if sender == receiver || sender == first_party {
                    continue;
                }
                let key = (
                    r.profile_id.clone(),
                    sender.clone(),
                    receiver.clone(),
                    index.values[hit.value].to_string(),
                    hit.mechanism,
                    r.seq,
                    r.measurement_id.clone(),
                );
                if !seen.insert(key) {
                    continue;
                }
                events.push(SyncEvent {
                    measurement_id: r.measurement_id.clone(),
                    profile_id: r.profile_id.clone(),
                    request_seq: r.seq,
                    sender_company: sender,
                    receiver_company: receiver.clone(),
                    mechanism: hit.mechanism,
                    id: (*id).clone(),
                    location: hit.location.clone(),
                    codec_chain: hit.chain.clone(),
                });
            }
        }
    }
    events.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    events
}

/// Distinct directed (sender, receiver) company pairs.
pub fn company_pairs(events: &[SyncEvent]) -> BTreeSet<(String, String)> {
    events
        .iter()
        .map(|e| (e.sender_company.clone(), e.receiver_company.clone()))
        .collect()
}
