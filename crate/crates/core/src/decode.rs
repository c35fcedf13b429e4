//! Layered decoding of parameter values and URL extraction.
//!
//! Tracking parameters are frequently wrapped in several encodings
//! (percent-encoding, Base64, DEFLATE/gzip). [`decode_layers`] explores every
//! codec at every layer breadth-first up to a depth limit and returns each
//! distinct textual decoding together with the codec chain that produced it.

use std::collections::HashSet;
use std::io::Read;
use std::sync::OnceLock;

use base64::alphabet;
use base64::engine::general_purpose::{GeneralPurpose, GeneralPurposeConfig};
use base64::engine::DecodePaddingMode;
use base64::Engine;
use flate2::read::{DeflateDecoder, GzDecoder, ZlibDecoder};
use percent_encoding::percent_decode;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::log_model::Url;
use crate::psl::SuffixList;

pub const DEFAULT_MAX_DEPTH: usize = 3;
pub const DEFAULT_MAX_INFLATE_BYTES: usize = 64 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Codec {
    Percent,
    Base64,
    Deflate,
    Gzip,
}

impl Codec {
    pub const ALL: [Codec; 4] = [Codec::Percent, Codec::Base64, Codec::Deflate, Codec::Gzip];

    /// Decodes one layer, or `None` when the codec does not apply.
    pub fn decode(self, input: &[u8], max_inflate: usize) -> Option<Vec<u8>> {
        match self {
            Codec::Percent => decode_percent(input),
            Codec::Base64 => decode_base64(input, max_inflate),
            Codec::Deflate => inflate_deflate(input, max_inflate),
            Codec::Gzip => inflate_gzip(input, max_inflate),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodedLayer {
    pub depth: usize,
    pub text: String,
    pub codec_chain: Vec<Codec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeParams {
    pub max_depth: usize,
    pub max_inflate_bytes: usize,
}

impl Default for DecodeParams {
    fn default() -> Self {
        DecodeParams {
            max_depth: DEFAULT_MAX_DEPTH,
            max_inflate_bytes: DEFAULT_MAX_INFLATE_BYTES,
        }
    }
}

fn decode_percent(input: &[u8]) -> Option<Vec<u8>> {
    if !input.contains(&b'%') {
        return None;
    }
    let out: Vec<u8> = percent_decode(input).collect();
    (out != input && std::str::from_utf8(&out).is_ok()).then_some(out)
}

fn base64_engines() -> &'static [GeneralPurpose; 2] {
    static ENGINES: OnceLock<[GeneralPurpose; 2]> = OnceLock::new();
    ENGINES.get_or_init(|| {
        let config = GeneralPurposeConfig::new()
            .with_decode_padding_mode(DecodePaddingMode::Indifferent)
            .with_decode_allow_trailing_bits(true);
        [
            GeneralPurpose::new(&alphabet::STANDARD, config),
            GeneralPurpose::new(&alphabet::URL_SAFE, config),
        ]
    })
}

fn looks_compressed(bytes: &[u8], max_inflate: usize) -> bool {
    inflate_gzip(bytes, max_inflate).is_some() || inflate_deflate(bytes, max_inflate).is_some()
}

fn decode_base64(input: &[u8], max_inflate: usize) -> Option<Vec<u8>> {
    let trimmed = input.trim_ascii();
    if trimmed.len() < 4
        || !trimmed
            .iter()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'+' | b'/' | b'-' | b'_' | b'='))
    {
        return None;
    }
    for engine in base64_engines() {
        if let Ok(bytes) = engine.decode(trimmed) {
            if bytes.is_empty() {
                continue;
            }
            if std::str::from_utf8(&bytes).is_ok() || looks_compressed(&bytes, max_inflate) {
                return Some(bytes);
            }
        }
    }
    None
}

/// Reads the whole stream, rejecting outputs above `cap` bytes.
fn read_capped<R: Read>(reader: R, cap: usize) -> Option<Vec<u8>> {
    let mut out = Vec::new();
    reader.take(cap as u64 + 1).read_to_end(&mut out).ok()?;
    (!out.is_empty() && out.len() <= cap).then_some(out)
}

fn inflate_deflate(input: &[u8], cap: usize) -> Option<Vec<u8>> {
    if input.len() < 2 {
        return None;
    }
    // zlib-wrapped streams first; the header check rules out most text
    if (u16::from(input[0]) << 8 | u16::from(input[1])) % 31 == 0 && input[0] & 0x0f == 8 {
        if let Some(out) = read_capped(ZlibDecoder::new(input), cap) {
            return Some(out);
        }
    }
    let mut decoder = DeflateDecoder::new(input);
    let out = read_capped(&mut decoder, cap)?;
    // raw DEFLATE has no header: require the stream to consume the whole input
    let consumed = decoder.total_in() as usize;
    (consumed == input.len()).then_some(out)
}

fn inflate_gzip(input: &[u8], cap: usize) -> Option<Vec<u8>> {
    if !input.starts_with(&[0x1f, 0x8b]) {
        return None;
    }
    read_capped(GzDecoder::new(input), cap)
}

/// All distinct decodings of `value` up to `max_depth` codec applications,
/// including the depth-0 original. Layers are ordered by depth, then by
/// discovery. Binary intermediate results are explored but only UTF-8 text
/// is reported.
pub fn decode_layers(value: &[u8], params: &DecodeParams) -> Vec<DecodedLayer> {
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    seen.insert(value.to_vec());
    let mut out = vec![DecodedLayer {
        depth: 0,
        text: String::from_utf8_lossy(value).into_owned(),
        codec_chain: Vec::new(),
    }];
    let mut frontier: Vec<(Vec<u8>, Vec<Codec>)> = vec![(value.to_vec(), Vec::new())];
    for depth in 1..=params.max_depth {
        let mut next = Vec::new();
        for (bytes, chain) in &frontier {
            for codec in Codec::ALL {
                let Some(decoded) = codec.decode(bytes, params.max_inflate_bytes) else {
                    continue;
                };
                if !seen.insert(decoded.clone()) {
                    continue;
                }
                let mut chain = chain.clone();
                chain.push(codec);
                if let Ok(text) = std::str::from_utf8(&decoded) {
                    out.push(DecodedLayer {
                        depth,
                        text: text.to_string(),
                        codec_chain: chain.clone(),
                    });
                }
                next.push((decoded, chain));
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    out
}

/// Applies a recorded codec chain to `value`.
pub fn apply_chain(value: &[u8], chain: &[Codec], max_inflate: usize) -> Option<Vec<u8>> {
    chain
        .iter()
        .try_fold(value.to_vec(), |acc, codec| codec.decode(&acc, max_inflate))
}

fn scheme_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"(?i)\bhttps?://[^\s"'<>|\\^`{}]+"#).unwrap())
}

fn schemeless_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r#"(?i)\b(?:[a-z0-9](?:[a-z0-9-]*[a-z0-9])?\.)+[a-z]{2,63}/[^\s"'<>|\\^`{}]*"#).unwrap()
    })
}

fn trim_trailing_punctuation(s: &str) -> &str {
    s.trim_end_matches(['.', ',', ';', ')', ']', '!', '\''])
}

/// Finds URLs in `text` and in its percent-decoded form. Matches are
/// `http(s)://…` or scheme-less `host/path?query` where the host has a
/// registrable domain.
pub fn extract_urls(text: &str) -> Vec<Url> {
    let mut found: Vec<(usize, usize, Url)> = Vec::new();
    let decoded = percent_decode(text.as_bytes())
        .decode_utf8()
        .ok()
        .map(|c| c.into_owned());
    let mut sources = vec![text];
    if let Some(d) = decoded.as_deref() {
        if d != text {
            sources.push(d);
        }
    }
    for (pass, src) in sources.into_iter().enumerate() {
        for m in scheme_re().find_iter(src) {
            if let Ok(u) = Url::parse(trim_trailing_punctuation(m.as_str())) {
                found.push((pass, m.start(), u));
            }
        }
        for m in schemeless_re().find_iter(src) {
            let before = &src[..m.start()];
            if before.ends_with("//") || before.ends_with('@') || before.ends_with('.') {
                continue;
            }
            let s = trim_trailing_punctuation(m.as_str());
            let Ok(u) = Url::parse_schemeless(s) else { continue };
            if SuffixList::bundled().registrable_domain(&u.host).is_none() {
                continue;
            }
            found.push((pass, m.start(), u));
        }
    }
    found.sort_by_key(|(pass, start, _)| (*pass, *start));
    let mut seen = HashSet::new();
    found
        .into_iter()
        .filter(|(_, _, u)| seen.insert(u.to_string()))
        .map(|(_, _, u)| u)
        .collect()
}
