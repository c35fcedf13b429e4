//! HAR 1.2 loader.
//!
//! Each log entry becomes one [`RequestRecord`]; `Set-Cookie` response
//! headers become [`CookieRecord`]s. Entries missing mandatory fields are
//! reported in [`HarLog::errors`] and skipped.

use chrono::{DateTime, Utc};
use serde::Deserialize;
use serde_json::Value;

use super::{CookieRecord, Method, RequestRecord, Url, DEFAULT_MAX_POST_BODY};
use crate::error::{Error, Result};
use crate::psl;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntryError {
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct HarLog {
    pub requests: Vec<RequestRecord>,
    pub cookies: Vec<CookieRecord>,
    pub errors: Vec<EntryError>,
}

#[derive(Debug, Clone)]
pub struct HarOptions {
    pub max_post_body: usize,
}

impl Default for HarOptions {
    fn default() -> Self {
        HarOptions {
            max_post_body: DEFAULT_MAX_POST_BODY,
        }
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct Entry {
    #[serde(default)]
    pageref: Option<String>,
    started_date_time: String,
    request: Request,
    response: Response,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct Request {
    method: String,
    url: String,
    headers: Vec<Header>,
    #[serde(default)]
    post_data: Option<PostData>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct Response {
    headers: Vec<Header>,
    #[serde(default)]
    cookies: Vec<HarCookie>,
    #[serde(default)]
    redirect_u_r_l: Option<String>,
}

#[derive(Deserialize)]
struct Header {
    name: String,
    value: String,
}

#[derive(Deserialize)]
struct HarCookie {
    name: String,
    value: String,
    #[serde(default)]
    domain: Option<String>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct PostData {
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    params: Vec<PostParam>,
}

#[derive(Deserialize)]
struct PostParam {
    name: String,
    #[serde(default)]
    value: Option<String>,
}

#[derive(Deserialize)]
struct Page {
    id: String,
    #[serde(default)]
    title: String,
}

fn header<'a>(headers: &'a [Header], name: &str) -> impl Iterator<Item = &'a str> + 'a {
    let name = name.to_ascii_lowercase();
    headers
        .iter()
        .filter(move |h| h.name.eq_ignore_ascii_case(&name))
        .map(|h| h.value.as_str())
}

/// Parses a HAR document. Provenance is supplied by the caller since HAR
/// does not record it.
pub fn parse_har(bytes: &[u8], measurement_id: &str, profile_id: &str) -> Result<HarLog> {
    parse_har_with(bytes, measurement_id, profile_id, &HarOptions::default())
}

pub fn parse_har_with(bytes: &[u8], measurement_id: &str, profile_id: &str, options: &HarOptions) -> Result<HarLog> {
    let doc: Value = serde_json::from_slice(bytes).map_err(|e| Error::json(bytes, &e))?;
    let log = doc
        .get("log")
        .ok_or_else(|| Error::Invalid("HAR document has no `log` object".into()))?;
    let pages: Vec<Page> = log
        .get("pages")
        .and_then(|p| serde_json::from_value(p.clone()).ok())
        .unwrap_or_default();
    let entries = match log.get("entries") {
        Some(Value::Array(entries)) => entries.as_slice(),
        Some(_) => return Err(Error::Invalid("HAR `log.entries` is not an array".into())),
        None => &[],
    };

    let mut out = HarLog::default();
    for (index, raw) in entries.iter().enumerate() {
        let entry: Entry = match serde_json::from_value(raw.clone()) {
            Ok(e) => e,
            Err(e) => {
                out.errors.push(EntryError {
                    index,
                    message: e.to_string(),
                });
                continue;
            }
        };
        match convert_entry(entry, index, &pages, measurement_id, profile_id, options) {
            Ok((request, cookies)) => {
                out.requests.push(request);
                out.cookies.extend(cookies);
            }
            Err(message) => out.errors.push(EntryError { index, message }),
        }
    }
    Ok(out)
}

fn convert_entry(
    entry: Entry,
    index: usize,
    pages: &[Page],
    measurement_id: &str,
    profile_id: &str,
    options: &HarOptions,
) -> std::result::Result<(RequestRecord, Vec<CookieRecord>), String> {
    let timestamp: DateTime<Utc> = DateTime::parse_from_rfc3339(&entry.started_date_time)
        .map_err(|e| format!("startedDateTime: {e}"))?
        .with_timezone(&Utc);
    let url = Url::parse(&entry.request.url).map_err(|e| e.to_string())?;
    let referrer = header(&entry.request.headers, "referer")
        .next()
        .and_then(|r| Url::parse(r).ok());
    let redirect_location = header(&entry.response.headers, "location")
        .next()
        .map(str::to_string)
        .or(entry.response.redirect_u_r_l.filter(|r| !r.is_empty()))
        .and_then(|loc| resolve_location(&url, &loc));

    let page_url = entry
        .pageref
        .as_ref()
        .and_then(|id| pages.iter().find(|p| &p.id == id))
        .and_then(|p| Url::parse(&p.title).ok());
    let site_host = page_url
        .as_ref()
        .or(referrer.as_ref())
        .map(|u| u.host.as_str())
        .unwrap_or(url.host.as_str());
    let top_level_site = psl::site_of(site_host);

    let mut record = RequestRecord {
        measurement_id: measurement_id.to_string(),
        profile_id: profile_id.to_string(),
        seq: index as u64,
        timestamp,
        method: Method::from_token(&entry.request.method),
        url,
        referrer,
        post_body: None,
        post_body_truncated: false,
        redirect_location,
        top_level_site,
    };
    if let Some(post) = entry.request.post_data {
        let body = match post.text {
            Some(text) => text,
            None => post
                .params
                .iter()
                .map(|p| format!("{}={}", p.name, p.value.as_deref().unwrap_or("")))
                .collect::<Vec<_>>()
                .join("&"),
        };
        record.set_post_body(body.into_bytes(), options.max_post_body);
    }

    let mut cookies: Vec<CookieRecord> = header(&entry.response.headers, "set-cookie")
        .flat_map(|v| v.split('\n'))
        .filter_map(|line| parse_set_cookie(line, &record.url.host))
        .map(|(domain, name, value)| CookieRecord {
            measurement_id: measurement_id.to_string(),
            profile_id: profile_id.to_string(),
            domain,
            name,
            value: value.into_bytes(),
            set_at: timestamp,
        })
        .collect();
    if cookies.is_empty() {
        cookies = entry
            .response
            .cookies
            .into_iter()
            .filter(|c| !c.name.is_empty())
            .map(|c| CookieRecord {
                measurement_id: measurement_id.to_string(),
                profile_id: profile_id.to_string(),
                domain: normalise_cookie_domain(c.domain.as_deref(), &record.url.host),
                name: c.name,
                value: c.value.into_bytes(),
                set_at: timestamp,
            })
            .collect();
    }
    Ok((record, cookies))
}

fn resolve_location(base: &Url, location: &str) -> Option<Url> {
    if let Ok(u) = Url::parse(location) {
        return Some(u);
    }
    if let Some(rest) = location.strip_prefix("//") {
        return Url::parse(&format!("{}://{rest}", base.scheme)).ok();
    }
    if location.starts_with('/') {
        return Url::parse(&format!("{}://{}{location}", base.scheme, base.host)).ok();
    }
    None
}

fn normalise_cookie_domain(domain: Option<&str>, request_host: &str) -> String {
    match domain.map(|d| d.trim().trim_start_matches('.').to_ascii_lowercase()) {
        Some(d) if !d.is_empty() => d,
        _ => request_host.to_string(),
    }
}

/// Splits a `Set-Cookie` value into (domain, name, value).
fn parse_set_cookie(line: &str, request_host: &str) -> Option<(String, String, String)> {
    let mut parts = line.split(';');
    let (name, value) = parts.next()?.split_once('=')?;
    let name = name.trim();
    if name.is_empty() {
        return None;
    }
    let domain = parts
        .filter_map(|attr| attr.split_once('='))
        .find(|(k, _)| k.trim().eq_ignore_ascii_case("domain"))
        .map(|(_, v)| v);
    Some((
        normalise_cookie_domain(domain, request_host),
        name.to_string(),
        value.trim().to_string(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(url: &str, extra_response_headers: &str) -> String {
        format!(
            r#"{{"startedDateTime":"2018-05-20T10:00:00.000Z",
                "request":{{"method":"GET","url":"{url}","headers":[]}},
                "response":{{"status":302,"headers":[{extra_response_headers}]}}}}"#
        )
    }

    fn har(entries: &[String]) -> Vec<u8> {
        format!(r#"{{"log":{{"version":"1.2","entries":[{}]}}}}"#, entries.join(",")).into_bytes()
    }

    #[test]
    fn empty_log() {
        let log = parse_har(&har(&[]), "m1", "p1").unwrap();
        assert!(log.requests.is_empty() && log.cookies.is_empty() && log.errors.is_empty());
    }

    #[test]
    fn single_get() {
        let log = parse_har(&har(&[entry("https://a.example/p?x=1", "")]), "m1", "p1").unwrap();
        assert_eq!(log.requests.len(), 1);
        let r = &log.requests[0];
        assert_eq!(r.method, Method::Get);
        assert_eq!(r.url.host, "a.example");
        assert_eq!(r.url.query.as_deref(), Some("x=1"));
        assert_eq!(r.measurement_id, "m1");
        assert_eq!(r.top_level_site, "a.example");
    }

    #[test]
    fn location_header_becomes_redirect() {
        let e = entry(
            "https://a.example/p",
            r#"{"name":"Location","value":"https://b.example/r"}"#,
        );
        let log = parse_har(&har(&[e]), "m1", "p1").unwrap();
        let loc = log.requests[0].redirect_location.as_ref().unwrap();
        assert_eq!(loc.host, "b.example");
        assert_eq!(loc.path, "/r");
    }

    #[test]
    fn relative_location_resolves_against_request() {
        let e = entry("https://a.example/p", r#"{"name":"location","value":"/next?q=1"}"#);
        let log = parse_har(&har(&[e]), "m1", "p1").unwrap();
        assert_eq!(
            log.requests[0].redirect_location.as_ref().unwrap().to_string(),
            "https://a.example/next?q=1"
        );
    }

    #[test]
    fn set_cookie_headers() {
        let e = entry(
            "https://t.tracker.example/px",
            r#"{"name":"Set-Cookie","value":"uid=abcdef0123456789; Domain=.Tracker.example; Path=/"},
               {"name":"set-cookie","value":"sess=x"}"#,
        );
        let log = parse_har(&har(&[e]), "m1", "p1").unwrap();
        assert_eq!(log.cookies.len(), 2);
        assert_eq!(log.cookies[0].domain, "tracker.example");
        assert_eq!(log.cookies[0].name, "uid");
        assert_eq!(log.cookies[0].value, b"abcdef0123456789");
        assert_eq!(log.cookies[1].domain, "t.tracker.example");
    }

    #[test]
    fn malformed_json_reports_offset() {
        let err = parse_har(b"{\"log\": [", "m", "p").unwrap_err();
        assert!(matches!(err, Error::Json { offset, .. } if offset > 0));
    }

    #[test]
    fn bad_entry_is_collected_and_parsing_continues() {
        let bad = r#"{"startedDateTime":"2018-05-20T10:00:00Z","request":{"method":"GET"},"response":{"headers":[]}}"#;
        let entries = [bad.to_string(), entry("https://ok.example/", "")];
        let log = parse_har(&har(&entries), "m1", "p1").unwrap();
        assert_eq!(log.errors.len(), 1);
        assert_eq!(log.errors[0].index, 0);
        assert_eq!(log.requests.len(), 1);
        assert_eq!(log.requests[0].seq, 1);
    }

    #[test]
    fn post_body_and_page_site() {
        let doc = r#"{"log":{"pages":[{"id":"page_1","title":"https://www.news.co.uk/article"}],
            "entries":[{"pageref":"page_1","startedDateTime":"2018-05-20T10:00:00Z",
            "request":{"method":"POST","url":"https://sync.adx.example/s","headers":[
                {"name":"Referer","value":"https://www.news.co.uk/article"}],
              "postData":{"mimeType":"application/x-www-form-urlencoded","text":"uid=0123456789abcdef"}},
            "response":{"headers":[]}}]}}"#;
        let log = parse_har_with(doc.as_bytes(), "m", "p", &HarOptions { max_post_body: 8 }).unwrap();
        let r = &log.requests[0];
        assert_eq!(r.method, Method::Post);
        assert_eq!(r.top_level_site, "news.co.uk");
        assert_eq!(r.post_body.as_deref(), Some(&b"uid=0123"[..]));
        assert!(r.post_body_truncated);
        assert_eq!(r.referrer.as_ref().unwrap().host, "www.news.co.uk");
    }
}
