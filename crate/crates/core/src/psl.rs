//! Public-suffix resolution against a bundled list snapshot.
//!
//! The snapshot (`data/public_suffix_list.dat`, version 2025-04-07) is in the
//! standard one-rule-per-line format and includes both the ICANN and private
//! sections.

use std::collections::HashSet;
use std::net::IpAddr;
use std::sync::OnceLock;

const BUNDLED: &str = include_str!("../data/public_suffix_list.dat");

/// Version tag of the bundled snapshot.
pub const SNAPSHOT_VERSION: &str = "2025-04-07";

#[derive(Debug, Default, Clone)]
pub struct SuffixList {
    rules: HashSet<String>,
    /// Parent domains of `*.` rules.
    wildcards: HashSet<String>,
    /// Domains of `!` rules.
    exceptions: HashSet<String>,
}

impl SuffixList {
    /// Parses the standard list format. Comment lines start with `//`; only
    /// the first whitespace-delimited token of a line is significant.
    pub fn parse(text: &str) -> SuffixList {
        let mut list = SuffixList::default();
        for line in text.lines() {
            let Some(token) = line.split_whitespace().next() else {
                continue;
            };
            if token.starts_with("//") {
                continue;
            }
            let (set, rule) = if let Some(r) = token.strip_prefix('!') {
                (&mut list.exceptions, r)
            } else if let Some(r) = token.strip_prefix("*.") {
                (&mut list.wildcards, r)
            } else {
                (&mut list.rules, token)
            };
            let rule = rule.to_lowercase();
            if !rule.is_ascii() {
                if let Ok(ascii) = idna::domain_to_ascii(&rule) {
                    set.insert(ascii);
                }
            }
            set.insert(rule);
        }
        list
    }

    pub fn bundled() -> &'static SuffixList {
        static LIST: OnceLock<SuffixList> = OnceLock::new();
        LIST.get_or_init(|| SuffixList::parse(BUNDLED))
    }

    pub fn len(&self) -> usize {
        self.rules.len() + self.wildcards.len() + self.exceptions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of trailing labels of `host` that form its public suffix.
    fn suffix_labels(&self, labels: &[&str]) -> usize {
        let n = labels.len();
        for i in 0..n {
            if self.exceptions.contains(&labels[i..].join(".")) {
                return n - i - 1;
            }
        }
        for i in 0..n {
            let candidate = labels[i..].join(".");
            if self.rules.contains(&candidate) {
                return n - i;
            }
            if i + 1 < n && self.wildcards.contains(&labels[i + 1..].join(".")) {
                return n - i;
            }
        }
        // implicit "*" rule
        1
    }

    /// Public suffix of `host`, e.g. `co.uk` for `cdn.example.co.uk`.
    pub fn public_suffix(&self, host: &str) -> Option<String> {
        let host = normalise(host)?;
        let labels: Vec<&str> = host.split('.').collect();
        let k = self.suffix_labels(&labels);
        Some(labels[labels.len() - k..].join("."))
    }

    /// Registrable domain (eTLD+1) of `host`; `None` for IP literals, empty
    /// hosts, and hosts that are themselves public suffixes.
    pub fn registrable_domain(&self, host: &str) -> Option<String> {
        let host = normalise(host)?;
        let labels: Vec<&str> = host.split('.').collect();
        let k = self.suffix_labels(&labels);
        if labels.len() <= k {
            return None;
        }
        Some(labels[labels.len() - k - 1..].join("."))
    }
}

fn normalise(host: &str) -> Option<String> {
    let host = host.trim().trim_end_matches('.').to_ascii_lowercase();
    if host.is_empty() || is_ip_literal(&host) || host.split('.').any(str::is_empty) {
        return None;
    }
    Some(host)
}

pub fn is_ip_literal(host: &str) -> bool {
    let bare = host.trim_start_matches('[').trim_end_matches(']');
    bare.parse::<IpAddr>().is_ok()
}

/// Registrable domain against the bundled list, falling back to the host
/// itself.
pub fn site_of(host: &str) -> String {
    SuffixList::bundled()
        .registrable_domain(host)
        .unwrap_or_else(|| host.trim_end_matches('.').to_ascii_lowercase())
}
