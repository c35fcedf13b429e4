//! Deterministic synthetic traffic with planted IDs and sync topologies.
//!
//! Every tracker company `t` owns `t.com` (cookies, sync endpoints) and
//! `t-cdn.net` (pixels). Each profile visits `n_sites` sites that embed
//! every tracker; on the first site each star center passes its cookie ID to
//! each of its leaves over the star's carrier. Decoy parameters, each built
//! to violate exactly one ID-elimination rule, go to `collect.noiseN.net`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use chrono::{DateTime, Duration, Utc};
use flate2::write::{DeflateEncoder, GzEncoder};
use flate2::Compression;
use percent_encoding::{utf8_percent_encode, NON_ALPHANUMERIC};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::company::CompanyDb;
use crate::decode::{Codec, DEFAULT_MAX_DEPTH};
use crate::ids::{
    rule_cross_profile, rule_length_consistency, rule_min_length, rule_similarity, IdCandidate, Origin, UserId,
    DEFAULT_MIN_ID_LENGTH, DEFAULT_SIMILARITY_THRESHOLD,
};
use crate::log_model::{BrowserProfile, CookieRecord, Corpus, Measurement, Method, RequestRecord, Url};
use crate::similarity::ratcliff_obershelp;
use crate::{Error, Result};

/// Planted values are redrawn until pairwise similarity is below the
/// detection threshold by this margin.
const SIMILARITY_MARGIN: f64 = 0.05;
const MAX_REDRAWS: usize = 10_000;
const USER_AGENT: &str = "Mozilla/5.0 (X11; Linux x86_64; rv:60.0) Gecko/20100101 Firefox/60.0";

/// How a star center hands its ID to a leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Carrier {
    /// `sync.leaf.com/match?partner_uid=<encoded id>`
    #[default]
    Query,
    /// POST body `partner_uid=<encoded id>`
    Post,
    /// `sync.leaf.com/match?redirect=<encoded URL carrying the id>`
    Nested,
    /// ID in the query of the referring `sync.center.com` URL (codec chains
    /// do not apply).
    Referrer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarSpec {
    pub center: String,
    pub leaves: usize,
    #[serde(default)]
    pub carrier: Carrier,
}

fn default_profiles() -> usize {
    2
}

fn default_sites() -> usize {
    3
}

fn default_id_length() -> usize {
    16
}

fn default_measurement() -> Measurement {
    Measurement {
        id: "M1".into(),
        ordinal: 1,
        week_label: "CW20".into(),
        pre_gdpr: true,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub seed: u64,
    #[serde(default = "default_profiles")]
    pub n_profiles: usize,
    #[serde(default = "default_sites")]
    pub n_sites: usize,
    #[serde(default)]
    pub stars: Vec<StarSpec>,
    #[serde(default = "default_id_length")]
    pub id_length: usize,
    /// Chains in encoding order, assigned round-robin to sync requests. An
    /// empty list sends IDs unencoded.
    #[serde(default)]
    pub codec_chains: Vec<Vec<Codec>>,
    /// Number of decoy parameters, cycling through the four rule families.
    #[serde(default)]
    pub noise: usize,
    /// Trackers with planted IDs that sync with nobody.
    #[serde(default)]
    pub n_isolated: usize,
    #[serde(default = "default_measurement")]
    pub measurement: Measurement,
}

impl ScenarioSpec {
    pub fn new(seed: u64) -> ScenarioSpec {
        ScenarioSpec {
            seed,
            n_profiles: default_profiles(),
            n_sites: default_sites(),
            stars: Vec::new(),
            id_length: default_id_length(),
            codec_chains: Vec::new(),
            noise: 0,
            n_isolated: 0,
            measurement: default_measurement(),
        }
    }

    fn trackers(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in &self.stars {
            out.push(s.center.clone());
            out.extend((1..=s.leaves).map(|j| leaf_name(&s.center, j)));
        }
        out.extend((1..=self.n_isolated).map(|i| format!("solo{i}")));
        out
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Scenario(m));
        if self.n_profiles == 0 || self.n_sites == 0 {
            return fail("n_profiles and n_sites must be at least 1".into());
        }
        if self.id_length < DEFAULT_MIN_ID_LENGTH {
            return fail(format!("id_length must be at least {DEFAULT_MIN_ID_LENGTH}"));
        }
        if self.noise > 0 && self.n_profiles < 2 {
            return fail("decoys need at least 2 profiles".into());
        }
        for s in &self.stars {
            if s.leaves == 0 {
                return fail(format!("star {} has no leaves", s.center));
            }
            let valid = !s.center.is_empty()
                && s.center
                    .chars()
                    .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-')
                && !s.center.starts_with('-');
            if !valid {
                return fail(format!("star center {:?} is not a lowercase host label", s.center));
            }
        }
        let trackers = self.trackers();
        let distinct: BTreeSet<&String> = trackers.iter().collect();
        if distinct.len() != trackers.len() {
            return fail("tracker names collide".into());
        }
        for chain in &self.codec_chains {
            if chain.len() > DEFAULT_MAX_DEPTH {
                return fail(format!("codec chain {chain:?} is deeper than {DEFAULT_MAX_DEPTH}"));
            }
            for (i, codec) in chain.iter().enumerate() {
                match codec {
                    Codec::Percent => return fail("percent is applied by transport, not as a chain step".into()),
                    Codec::Deflate | Codec::Gzip if chain.get(i + 1) != Some(&Codec::Base64) => {
                        return fail(format!("{codec:?} output must be followed by base64 in {chain:?}"));
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

fn site_name(s: usize) -> String {
    format!("site{s:02}.org")
}

fn leaf_name(center: &str, j: usize) -> String {
    format!("{center}-leaf{j}")
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SyncPair {
    pub sender: String,
    pub receiver: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoyFamily {
    /// Same value in every profile.
    CrossProfile,
    /// Value length differs between profiles.
    LengthVaries,
    /// Values differ only in their last characters.
    NearIdentical,
    /// Values shorter than the minimum ID length.
    TooShort,
}

impl DecoyFamily {
    const CYCLE: [DecoyFamily; 4] = [
        DecoyFamily::CrossProfile,
        DecoyFamily::LengthVaries,
        DecoyFamily::NearIdentical,
        DecoyFamily::TooShort,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decoy {
    pub host: String,
    pub key: String,
    pub family: DecoyFamily,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub measurement_id: String,
    /// Planted cookie IDs, sorted.
    pub user_ids: Vec<UserId>,
    /// Directed (center, leaf) pairs, sorted.
    pub sync_pairs: Vec<SyncPair>,
    pub trackers: Vec<String>,
    /// One per star.
    pub sync_components: usize,
    pub decoys: Vec<Decoy>,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub truth: GroundTruth,
    pub company_db: CompanyDb,
}

/// Company DB mapping each site to itself and each tracker's two domains
/// to the tracker's name.
pub fn company_db_json(spec: &ScenarioSpec) -> String {
    let mut map = serde_json::Map::new();
    map.insert(
        "_metadata".into(),
        serde_json::json!({ "source_label": "synthetic", "snapshot_date": "2018-05-01" }),
    );
    for s in 1..=spec.n_sites {
        let site = site_name(s);
        map.insert(site.clone(), site.into());
    }
    for t in spec.trackers() {
        map.insert(format!("{t}.com"), t.clone().into());
        map.insert(format!("{t}-cdn.net"), t.into());
    }
    serde_json::to_string_pretty(&serde_json::Value::Object(map)).expect("JSON object serializes")
}

/// Applies `chain` in encoding order.
pub fn encode_chain(text: &str, chain: &[Codec]) -> Vec<u8> {
    let mut data = text.as_bytes().to_vec();
    for codec in chain {
        data = match codec {
            Codec::Percent => utf8_percent_encode(&String::from_utf8_lossy(&data), NON_ALPHANUMERIC)
                .to_string()
                .into_bytes(),
            Codec::Base64 => STANDARD.encode(&data).into_bytes(),
            Codec::Deflate => {
                let mut e = DeflateEncoder::new(Vec::new(), Compression::default());
                e.write_all(&data).expect("in-memory write");
                e.finish().expect("in-memory write")
            }
            Codec::Gzip => {
                let mut e = GzEncoder::new(Vec::new(), Compression::default());
                e.write_all(&data).expect("in-memory write");
                e.finish().expect("in-memory write")
            }
        };
    }
    data
}

fn pct(bytes: &[u8]) -> String {
    utf8_percent_encode(&String::from_utf8_lossy(bytes), NON_ALPHANUMERIC).to_string()
}

const HEX: &[u8] = b"0123456789abcdef";
const ALNUM: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";

fn draw(rng: &mut ChaCha8Rng, alphabet: &[u8], len: usize) -> String {
    (0..len)
        .map(|_| alphabet[rng.random_range(0..alphabet.len())] as char)
        .collect()
}

fn dissimilar(candidate: &str, others: &[String]) -> bool {
    let bound = DEFAULT_SIMILARITY_THRESHOLD - SIMILARITY_MARGIN;
    others
        .iter()
        .all(|o| o != candidate && ratcliff_obershelp(candidate, o) < bound)
}

/// One value per profile, pairwise dissimilar; `len(p)` gives each length.
fn draw_values(rng: &mut ChaCha8Rng, alphabet: &[u8], n: usize, len: impl Fn(usize) -> usize) -> Result<Vec<String>> {
    let mut out: Vec<String> = Vec::with_capacity(n);
    for p in 0..n {
        let value = (0..MAX_REDRAWS)
            .map(|_| draw(rng, alphabet, len(p)))
            .find(|v| dissimilar(v, &out))
            .ok_or_else(|| Error::Scenario("could not draw dissimilar values".into()))?;
        out.push(value);
    }
    Ok(out)
}

fn candidates(host: &str, key: &str, values: &[String], profiles: &[String]) -> Vec<IdCandidate> {
    values
        .iter()
        .zip(profiles)
        .map(|(v, p)| IdCandidate {
            owner_host: host.into(),
            key: key.into(),
            value: v.clone(),
            profile_id: p.clone(),
            origin: Origin::UrlParam,
        })
        .collect()
}

/// Which of the four rules eliminate the whole set.
fn violated_rules(c: &[IdCandidate]) -> [bool; 4] {
    [
        rule_cross_profile(c).is_empty(),
        rule_length_consistency(c).is_empty(),
        rule_similarity(c, DEFAULT_SIMILARITY_THRESHOLD).is_empty(),
        rule_min_length(c, DEFAULT_MIN_ID_LENGTH).is_empty(),
    ]
}

fn decoy_values(rng: &mut ChaCha8Rng, family: DecoyFamily, spec: &ScenarioSpec) -> Result<Vec<String>> {
    let n = spec.n_profiles;
    let len = spec.id_length;
    Ok(match family {
        DecoyFamily::CrossProfile => vec![draw(rng, HEX, len); n],
        DecoyFamily::LengthVaries => draw_values(rng, HEX, n, |p| len + p)?,
        DecoyFamily::NearIdentical => {
            let mut tail = 1;
            while 16usize.pow(tail as u32) < n {
                tail += 1;
            }
            let stem = draw(rng, HEX, len.saturating_sub(tail));
            (0..n).map(|p| format!("{stem}{p:0tail$x}")).collect()
        }
        DecoyFamily::TooShort => {
            let short = rng.random_range(4..DEFAULT_MIN_ID_LENGTH);
            draw_values(rng, ALNUM, n, |_| short)?
        }
    })
}

struct Stream {
    profile: String,
    measurement: String,
    base: DateTime<Utc>,
    requests: Vec<RequestRecord>,
}

impl Stream {
    fn push(&mut self, method: Method, url: &str, referrer: Option<&str>, site: &str, body: Option<Vec<u8>>) {
        let seq = self.requests.len() as u64;
        self.requests.push(RequestRecord {
            measurement_id: self.measurement.clone(),
            profile_id: self.profile.clone(),
            seq,
            timestamp: self.base + Duration::seconds(seq as i64),
            method,
            url: Url::parse(url).expect("generated URLs are valid"),
            referrer: referrer.map(|r| Url::parse(r).expect("generated URLs are valid")),
            post_body: body,
            post_body_truncated: false,
            redirect_location: None,
            top_level_site: site.into(),
        });
    }
}

/// Generates the corpus, its ground truth and company DB. The same spec
/// always yields identical output.
pub fn generate_corpus(spec: &ScenarioSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let m = &spec.measurement;
    let profiles: Vec<String> = (1..=spec.n_profiles).map(|p| format!("P{p:02}")).collect();
    let trackers = spec.trackers();

    // tracker → one cookie ID per profile
    let mut ids: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for t in &trackers {
        let values = draw_values(&mut rng, HEX, spec.n_profiles, |_| spec.id_length)?;
        let c = candidates(&format!("{t}.com"), "uid", &values, &profiles);
        if violated_rules(&c).iter().any(|&v| v) {
            return Err(Error::Scenario(format!(
                "planted IDs of {t} violate an elimination rule"
            )));
        }
        ids.insert(t, values);
    }

    let mut decoys = Vec::new();
    let mut decoy_values_by_index = Vec::new();
    for k in 0..spec.noise {
        let family = DecoyFamily::CYCLE[k % 4];
        let host = format!("collect.noise{}.net", k + 1);
        let key = format!("d{}", k + 1);
        let values = decoy_values(&mut rng, family, spec)?;
        let violated = violated_rules(&candidates(&host, &key, &values, &profiles));
        let expected = DecoyFamily::CYCLE.iter().map(|f| *f == family);
        if !violated.iter().copied().eq(expected) {
            return Err(Error::Scenario(format!(
                "decoy {key} ({family:?}) violates rules {violated:?}"
            )));
        }
        decoys.push(Decoy { host, key, family });
        decoy_values_by_index.push(values);
    }

    // (center, leaf, carrier, chain) in spec order
    let mut syncs = Vec::new();
    for s in &spec.stars {
        for j in 1..=s.leaves {
            let chain = if spec.codec_chains.is_empty() {
                Vec::new()
            } else {
                spec.codec_chains[syncs.len() % spec.codec_chains.len()].clone()
            };
            syncs.push((s.center.clone(), leaf_name(&s.center, j), s.carrier, chain));
        }
    }

    let epoch: DateTime<Utc> = "2018-05-14T08:00:00Z".parse().expect("valid timestamp");
    let mut corpus = Corpus {
        measurements: vec![m.clone()],
        ..Corpus::default()
    };
    for (pi, profile) in profiles.iter().enumerate() {
        corpus.profiles.push(BrowserProfile {
            id: profile.clone(),
            measurement_id: m.id.clone(),
            country_tag: "DE".into(),
            user_agent: USER_AGENT.into(),
        });
        let mut stream = Stream {
            profile: profile.clone(),
            measurement: m.id.clone(),
            base: epoch + Duration::hours(pi as i64),
            requests: Vec::new(),
        };
        for s in 0..spec.n_sites {
            let site = site_name(s + 1);
            let page = format!("https://www.{site}/");
            stream.push(Method::Get, &page, None, &site, None);
            for t in &trackers {
                stream.push(
                    Method::Get,
                    &format!("https://px.{t}-cdn.net/pixel.gif"),
                    Some(&page),
                    &site,
                    None,
                );
                if s == 0 {
                    corpus.cookies.push(CookieRecord {
                        measurement_id: m.id.clone(),
                        profile_id: profile.clone(),
                        domain: format!("{t}.com"),
                        name: "uid".into(),
                        value: ids[t.as_str()][pi].clone().into_bytes(),
                        set_at: stream.base + Duration::seconds(stream.requests.len() as i64),
                    });
                }
            }
            if s != 0 {
                continue;
            }
            for (center, leaf, carrier, chain) in &syncs {
                let id = &ids[center.as_str()][pi];
                let endpoint = format!("https://sync.{leaf}.com/match");
                match carrier {
                    Carrier::Query => {
                        let url = format!("{endpoint}?partner_uid={}", pct(&encode_chain(id, chain)));
                        stream.push(Method::Get, &url, Some(&page), &site, None);
                    }
                    Carrier::Post => {
                        let body = format!("partner_uid={}", pct(&encode_chain(id, chain)));
                        stream.push(Method::Post, &endpoint, Some(&page), &site, Some(body.into_bytes()));
                    }
                    Carrier::Nested => {
                        let nested = format!("https://px.{leaf}.com/set?cuid={id}");
                        let url = format!("{endpoint}?redirect={}", pct(&encode_chain(&nested, chain)));
                        stream.push(Method::Get, &url, Some(&page), &site, None);
                    }
                    Carrier::Referrer => {
                        let push = format!("https://sync.{center}.com/push?uid={id}");
                        stream.push(Method::Get, &push, Some(&page), &site, None);
                        stream.push(Method::Get, &endpoint, Some(&push), &site, None);
                    }
                }
            }
            for (d, values) in decoys.iter().zip(&decoy_values_by_index) {
                let url = format!("https://{}/collect?{}={}", d.host, d.key, pct(values[pi].as_bytes()));
                stream.push(Method::Get, &url, Some(&page), &site, None);
            }
        }
        corpus.requests.extend(stream.requests);
    }

    let mut user_ids: Vec<UserId> = ids
        .iter()
        .flat_map(|(t, values)| {
            values.iter().zip(&profiles).map(move |(v, p)| UserId {
                profile_id: p.clone(),
                owner_host: format!("{t}.com"),
                key: "uid".into(),
                value: v.clone(),
                origin: Origin::Cookie,
            })
        })
        .collect();
    user_ids.sort();
    let mut sync_pairs: Vec<SyncPair> = syncs
        .iter()
        .map(|(c, l, _, _)| SyncPair {
            sender: c.clone(),
            receiver: l.clone(),
        })
        .collect();
    sync_pairs.sort();
    sync_pairs.dedup();

    let company_db = CompanyDb::load(company_db_json(spec).as_bytes())?;
    Ok(SyntheticCorpus {
        corpus,
        truth: GroundTruth {
            measurement_id: m.id.clone(),
            user_ids,
            sync_pairs,
            trackers,
            sync_components: spec.stars.len(),
            decoys,
        },
        company_db,
    })
}
