//! Host → company resolution.
//!
//! A tracker database maps domain suffixes to owning companies. Hosts without
//! a match become their own company, named after their registrable domain.

use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDate;
use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer};

use crate::error::{Error, Result};
use crate::psl::{self, SuffixList};

/// Reserved key holding the metadata block inside a database file.
pub const METADATA_KEY: &str = "_metadata";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CompanyDb {
    entries: BTreeMap<String, String>,
    pub source_label: String,
    pub snapshot_date: Option<NaiveDate>,
    /// Keys seen more than once while loading (last value kept).
    pub duplicate_keys: usize,
}

#[derive(Debug, Default, Deserialize)]
struct Metadata {
    #[serde(default)]
    source_label: Option<String>,
    #[serde(default)]
    snapshot_date: Option<NaiveDate>,
}

/// Raw object entries, duplicates preserved.
struct Entries(Vec<(String, serde_json::Value)>);

impl<'de> Deserialize<'de> for Entries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Entries;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping domains to company names")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<Entries, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, serde_json::Value>()? {
                    out.push((k, v));
                }
                Ok(Entries(out))
            }
        }
        deserializer.deserialize_map(V)
    }
}

fn normalise_domain(d: &str) -> String {
    d.trim()
        .trim_start_matches('.')
        .trim_end_matches('.')
        .to_ascii_lowercase()
}

impl CompanyDb {
    /// An empty database: every host resolves through the fallback.
    pub fn empty() -> CompanyDb {
        CompanyDb {
            source_label: "none".into(),
            ..CompanyDb::default()
        }
    }

    pub fn from_entries<I, K, V>(entries: I) -> CompanyDb
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: Into<String>,
    {
        let mut db = CompanyDb::empty();
        db.source_label = "inline".into();
        for (k, v) in entries {
            if db.entries.insert(normalise_domain(k.as_ref()), v.into()).is_some() {
                db.duplicate_keys += 1;
            }
        }
        db
    }

    /// Loads `{domain: company, ..., "_metadata": {...}}`.
    pub fn load(bytes: &[u8]) -> Result<CompanyDb> {
        let Entries(raw) = serde_json::from_slice(bytes).map_err(|e| Error::json(bytes, &e))?;
        let mut db = CompanyDb {
            source_label: "unknown".into(),
            ..CompanyDb::default()
        };
        for (key, value) in raw {
            if key == METADATA_KEY {
                let meta: Metadata =
                    serde_json::from_value(value).map_err(|e| Error::CompanyDb(format!("metadata: {e}")))?;
                if let Some(label) = meta.source_label {
                    db.source_label = label;
                }
                db.snapshot_date = meta.snapshot_date;
                continue;
            }
            let domain = normalise_domain(&key);
            if domain.is_empty() {
                return Err(Error::CompanyDb(format!("empty domain key {key:?}")));
            }
            let company = match value {
                serde_json::Value::String(s) if !s.trim().is_empty() => s,
                other => {
                    return Err(Error::CompanyDb(format!(
                        "domain {key:?} maps to {other} (expected a non-empty company name)"
                    )))
                }
            };
            if db.entries.insert(domain, company).is_some() {
                db.duplicate_keys += 1;
            }
        }
        if db.entries.is_empty() {
            return Err(Error::CompanyDb("database has no entries".into()));
        }
        Ok(db)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, domain: &str) -> Option<&str> {
        self.entries.get(domain).map(String::as_str)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Company owning `host`: longest database suffix on a label boundary,
    /// else the registrable domain, else the host verbatim.
    pub fn resolve(&self, host: &str) -> String {
        resolve_company(host, self)
    }
}

pub fn resolve_company(host: &str, db: &CompanyDb) -> String {
    let host = host.trim().trim_end_matches('.').to_ascii_lowercase();
    if psl::is_ip_literal(&host) || !host.contains('.') {
        return host;
    }
    let mut rest = host.as_str();
    loop {
        if let Some(company) = db.entries.get(rest) {
            return company.clone();
        }
        match rest.split_once('.') {
            Some((_, parent)) => rest = parent,
            None => break,
        }
    }
    SuffixList::bundled().registrable_domain(&host).unwrap_or(host)
}
