//! Canonical data model for captured traffic and its loaders.
//!
//! Two input formats are supported: HAR 1.2 (see [`har`]), which carries no
//! profile or measurement provenance so those are supplied by the caller, and
//! the native line-delimited format (see [`jsonl`]) that mirrors the record
//! types field for field.

pub(crate) mod bytes;
pub mod har;
pub mod jsonl;
mod url;

use std::collections::HashMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use self::url::Url;

/// Default cap on stored POST bodies.
pub const DEFAULT_MAX_POST_BODY: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Method {
    Get,
    Post,
    Other(String),
}

impl Method {
    pub fn from_token(token: &str) -> Method {
        match token.to_ascii_uppercase().as_str() {
            "GET" => Method::Get,
            "POST" => Method::Post,
            other => Method::Other(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Method::Get => "GET",
            Method::Post => "POST",
            Method::Other(t) => t,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Method {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let token = String::deserialize(deserializer)?;
        if token.is_empty() {
            return Err(serde::de::Error::custom("empty method"));
        }
        Ok(Method::from_token(&token))
    }
}

/// One captured HTTP request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub measurement_id: String,
    pub profile_id: String,
    pub seq: u64,
    pub timestamp: DateTime<Utc>,
    pub method: Method,
    pub url: Url,
    #[serde(default)]
    pub referrer: Option<Url>,
    #[serde(default, with = "bytes::option")]
    pub post_body: Option<Vec<u8>>,
    #[serde(default)]
    pub post_body_truncated: bool,
    #[serde(default)]
    pub redirect_location: Option<Url>,
    pub top_level_site: String,
}

impl RequestRecord {
    /// Stores `body`, truncating it to `limit` bytes.
    pub fn set_post_body(&mut self, mut body: Vec<u8>, limit: usize) {
        self.post_body_truncated = body.len() > limit;
        body.truncate(limit);
        self.post_body = Some(body);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CookieRecord {
    pub measurement_id: String,
    pub profile_id: String,
    pub domain: String,
    pub name: String,
    #[serde(with = "bytes")]
    pub value: Vec<u8>,
    pub set_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Measurement {
    pub id: String,
    pub ordinal: u32,
    pub week_label: String,
    pub pre_gdpr: bool,
}

impl Measurement {
    /// Numeric calendar week parsed from labels such as `CW20`.
    pub fn calendar_week(&self) -> Option<u32> {
        let digits: String = self.week_label.chars().filter(|c| c.is_ascii_digit()).collect();
        digits.parse().ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BrowserProfile {
    pub id: String,
    #[serde(default)]
    pub measurement_id: String,
    pub country_tag: String,
    pub user_agent: String,
}

/// Everything loaded from one or more capture files.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub measurements: Vec<Measurement>,
    pub profiles: Vec<BrowserProfile>,
    pub requests: Vec<RequestRecord>,
    pub cookies: Vec<CookieRecord>,
}

impl Corpus {
    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty() && self.profiles.is_empty() && self.requests.is_empty() && self.cookies.is_empty()
    }

    pub fn extend(&mut self, other: Corpus) {
        self.measurements.extend(other.measurements);
        self.profiles.extend(other.profiles);
        self.requests.extend(other.requests);
        self.cookies.extend(other.cookies);
    }

    /// Checks the cross-record invariants: unique measurement ordinals,
    /// unique profile ids per measurement, and strictly increasing `seq`
    /// per (measurement, profile).
    pub fn validate(&self) -> Result<()> {
        let mut ordinals = HashMap::new();
        for m in &self.measurements {
            if let Some(prev) = ordinals.insert(m.ordinal, &m.id) {
                return Err(Error::Invalid(format!(
                    "measurements {prev} and {} share ordinal {}",
                    m.id, m.ordinal
                )));
            }
        }
        let mut profiles = HashMap::new();
        for p in &self.profiles {
            if profiles.insert((&p.measurement_id, &p.id), ()).is_some() {
                return Err(Error::Invalid(format!(
                    "duplicate profile {} in measurement {}",
                    p.id, p.measurement_id
                )));
            }
        }
        let mut last_seq: HashMap<(&str, &str), u64> = HashMap::new();
        for r in &self.requests {
            let key = (r.measurement_id.as_str(), r.profile_id.as_str());
            if let Some(prev) = last_seq.insert(key, r.seq) {
                if r.seq <= prev {
                    return Err(Error::Invalid(format!(
                        "seq {} does not increase after {prev} in profile {}",
                        r.seq, r.profile_id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Measurements sorted by ordinal.
    pub fn measurements_ordered(&self) -> Vec<&Measurement> {
        let mut ms: Vec<_> = self.measurements.iter().collect();
        ms.sort_by_key(|m| m.ordinal);
        ms
    }

    /// Distinct measurement ids referenced by requests or declared, in
    /// ordinal order followed by undeclared ids in first-seen order.
    pub fn measurement_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.measurements_ordered().iter().map(|m| m.id.clone()).collect();
        for r in &self.requests {
            if !ids.contains(&r.measurement_id) {
                ids.push(r.measurement_id.clone());
            }
        }
        ids
    }
}
