//! Minimal structured URL that keeps the raw query byte-exact.
//!
//! General-purpose URL parsers re-encode queries; the ID pipeline needs the
//! query exactly as captured, so only scheme/host are normalised here.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Url {
    /// Lowercased scheme, e.g. `https`.
    pub scheme: String,
    /// Lowercased host without port or userinfo.
    pub host: String,
    /// Path, always starting with `/`.
    pub path: String,
    /// Raw query without the leading `?`; `None` when absent.
    pub query: Option<String>,
}

impl Url {
    /// Parses an absolute `scheme://host/...` URL. Ports, userinfo and
    /// fragments are dropped.
    pub fn parse(input: &str) -> Result<Url> {
        let input = input.trim();
        let (scheme, rest) = input.split_once("://").ok_or_else(|| Error::Url(input.to_string()))?;
        if scheme.is_empty()
            || !scheme
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
        {
            return Err(Error::Url(input.to_string()));
        }
        let mut url = Url::parse_authority_onward(rest).ok_or_else(|| Error::Url(input.to_string()))?;
        url.scheme = scheme.to_ascii_lowercase();
        Ok(url)
    }

    /// Parses a scheme-less `host/path?query` form; the scheme is recorded as
    /// `http`.
    pub fn parse_schemeless(input: &str) -> Result<Url> {
        let mut url = Url::parse_authority_onward(input.trim()).ok_or_else(|| Error::Url(input.to_string()))?;
        url.scheme = "http".to_string();
        Ok(url)
    }

    fn parse_authority_onward(rest: &str) -> Option<Url> {
        let rest = rest.split('#').next().unwrap_or_default();
        let end = rest.find(['/', '?']).unwrap_or(rest.len());
        let authority = &rest[..end];
        let tail = &rest[end..];
        let authority = authority.rsplit('@').next().unwrap_or_default();
        let host = if let Some(v6) = authority.strip_prefix('[') {
            let close = v6.find(']')?;
            format!("[{}]", &v6[..close])
        } else {
            match authority.rsplit_once(':') {
                Some((h, port)) if port.chars().all(|c| c.is_ascii_digit()) => h.to_string(),
                Some(_) => return None,
                None => authority.to_string(),
            }
        };
        let host = host.trim_end_matches('.').to_ascii_lowercase();
        if host.is_empty() || host.chars().any(|c| c.is_whitespace() || c == '/' || c == '\\') {
            return None;
        }
        let (path, query) = match tail.split_once('?') {
            Some((p, q)) => (p, Some(q.to_string())),
            None => (tail, None),
        };
        let path = if path.is_empty() {
            "/".to_string()
        } else {
            path.to_string()
        };
        Some(Url {
            scheme: String::new(),
            host,
            path,
            query,
        })
    }

    pub fn query_str(&self) -> &str {
        self.query.as_deref().unwrap_or("")
    }
}

impl fmt::Display for Url {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}://{}{}", self.scheme, self.host, self.path)?;
        if let Some(q) = &self.query {
            write!(f, "?{q}")?;
        }
        Ok(())
    }
}

impl FromStr for Url {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Url::parse(s)
    }
}

impl Serialize for Url {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Url {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Url::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_components() {
        let u = Url::parse("HTTPS://User@A.Example:8443/p/q?x=1&y=%20#frag").unwrap();
        assert_eq!(u.scheme, "https");
        assert_eq!(u.host, "a.example");
        assert_eq!(u.path, "/p/q");
        assert_eq!(u.query.as_deref(), Some("x=1&y=%20"));
        assert_eq!(u.to_string(), "https://a.example/p/q?x=1&y=%20");
    }

    #[test]
    fn empty_path_and_query() {
        let u = Url::parse("http://b.example?").unwrap();
        assert_eq!(u.path, "/");
        assert_eq!(u.query.as_deref(), Some(""));
        assert_eq!(Url::parse("http://b.example").unwrap().query, None);
    }

    #[test]
    fn ipv6_literal() {
        let u = Url::parse("http://[2001:db8::1]:80/x").unwrap();
        assert_eq!(u.host, "[2001:db8::1]");
    }

    #[test]
    fn rejects_garbage() {
        assert!(Url::parse("not a url").is_err());
        assert!(Url::parse("http:///path").is_err());
        assert!(Url::parse("http://host:port/").is_err());
    }

    #[test]
    fn normalisation_is_idempotent() {
        let u = Url::parse("http://X.org:80/a?b=C").unwrap();
        let again = Url::parse(&u.to_string()).unwrap();
        assert_eq!(u, again);
    }
}
