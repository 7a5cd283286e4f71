//! HTTP backends for the MediaWiki search API and the TagMe tagging API.

use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::Value;
use url::Url;

use super::cache::ResponseCache;
use super::{LinkError, SearchClient, TagmeAnnotation, TagmeClient};

const KEY_SEPARATOR: char = '\u{1f}';

/// Spaces every request at least `1 / requests_per_second` apart.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn new(requests_per_second: f64) -> Self {
        let interval = if requests_per_second > 0.0 && requests_per_second.is_finite() {
            Duration::from_secs_f64(1.0 / requests_per_second)
        } else {
            Duration::ZERO
        };
        RateLimiter {
            interval,
            next: Mutex::new(None),
        }
    }

    /// Blocks until the caller may issue a request.
    pub fn acquire(&self) {
        let wait = {
            let mut next = self.next.lock().expect("rate limiter lock");
            let now = Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + self.interval);
            slot - now
        };
        if !wait.is_zero() {
            thread::sleep(wait);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub retries: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            retries: 3,
            initial_backoff: Duration::from_secs(1),
        }
    }
}

enum Failure {
    Transient(String),
    Permanent(String),
}

impl RetryPolicy {
    fn run<T>(&self, mut attempt: impl FnMut() -> Result<T, Failure>) -> Result<T, LinkError> {
        let mut backoff = self.initial_backoff;
        let mut tries = 0;
        loop {
            match attempt() {
                Ok(v) => return Ok(v),
                Err(Failure::Permanent(msg)) => return Err(LinkError::ClientUnavailable(msg)),
                Err(Failure::Transient(msg)) if tries >= self.retries => {
                    return Err(LinkError::ClientUnavailable(format!(
                        "{msg} (after {} retries)",
                        self.retries
                    )))
                }
                Err(Failure::Transient(msg)) => {
                    log::warn!("request failed: {msg}; retrying in {backoff:?}");
                    thread::sleep(backoff);
                    backoff *= 2;
                    tries += 1;
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct HttpSettings {
    pub timeout: Duration,
    pub retry: RetryPolicy,
    pub requests_per_second: f64,
    pub user_agent: String,
}

impl Default for HttpSettings {
    fn default() -> Self {
        HttpSettings {
            timeout: Duration::from_secs(30),
            retry: RetryPolicy::default(),
            requests_per_second: 5.0,
            user_agent: concat!("personlink/", env!("CARGO_PKG_VERSION")).to_string(),
        }
    }
}

#[derive(Debug, Clone)]
struct Http {
    client: Client,
    limiter: Arc<RateLimiter>,
    retry: RetryPolicy,
}

impl Http {
    fn new(settings: &HttpSettings) -> Result<Self, LinkError> {
        let client = Client::builder()
            .timeout(settings.timeout)
            .user_agent(settings.user_agent.clone())
            .build()
            .map_err(|e| LinkError::ClientUnavailable(e.to_string()))?;
        Ok(Http {
            client,
            limiter: Arc::new(RateLimiter::new(settings.requests_per_second)),
            retry: settings.retry,
        })
    }

    fn send(&self, build: impl Fn() -> reqwest::blocking::RequestBuilder) -> Result<Value, LinkError> {
        self.retry.run(|| {
            self.limiter.acquire();
            let resp = build().send().map_err(|e| Failure::Transient(e.to_string()))?;
            let status = resp.status();
            if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
                return Err(Failure::Transient(format!("HTTP {status}")));
            }
            if !status.is_success() {
                return Err(Failure::Permanent(format!("HTTP {status}")));
            }
            let body = resp.text().map_err(|e| Failure::Transient(e.to_string()))?;
            serde_json::from_str(&body).map_err(|e| Failure::Permanent(format!("invalid JSON response: {e}")))
        })
    }

    fn get(&self, base: &Url, params: &[(&str, &str)]) -> Result<Value, LinkError> {
        let mut url = base.clone();
        url.query_pairs_mut().extend_pairs(params);
        self.send(|| self.client.get(url.clone()))
    }

    fn post_form(&self, base: &Url, params: &[(&str, &str)]) -> Result<Value, LinkError> {
        let body = url::form_urlencoded::Serializer::new(String::new())
            .extend_pairs(params)
            .finish();
        self.send(|| {
            self.client
                .post(base.clone())
                .header(reqwest::header::CONTENT_TYPE, "application/x-www-form-urlencoded")
                .body(body.clone())
        })
    }
}

fn parse_url(base: &str) -> Result<Url, LinkError> {
    Url::parse(base).map_err(|e| LinkError::ClientUnavailable(format!("bad base URL {base:?}: {e}")))
}

fn canonical_title(title: &str) -> String {
    title.trim().replace(' ', "_")
}

/// MediaWiki `list=search` client; only result titles are used.
#[derive(Debug, Clone)]
pub struct WikiSearchHttpClient {
    http: Http,
    api: Url,
    limit: usize,
}

impl WikiSearchHttpClient {
    pub const DEFAULT_API: &'static str = "https://en.wikipedia.org/w/api.php";

    pub fn new(api: &str, settings: &HttpSettings) -> Result<Self, LinkError> {
        Ok(WikiSearchHttpClient {
            http: Http::new(settings)?,
            api: parse_url(api)?,
            limit: 10,
        })
    }
}

impl SearchClient for WikiSearchHttpClient {
    fn search(&self, query: &str) -> Result<Vec<String>, LinkError> {
        let limit = self.limit.to_string();
        let json = self.http.get(
            &self.api,
            &[
                ("action", "query"),
                ("list", "search"),
                ("srsearch", query),
                ("srlimit", &limit),
                ("srprop", ""),
                ("format", "json"),
                ("formatversion", "2"),
            ],
        )?;
        let hits = json["query"]["search"]
            .as_array()
            .ok_or_else(|| LinkError::ClientUnavailable("search response lacks query.search".into()))?;
        Ok(hits
            .iter()
            .filter_map(|h| h["title"].as_str())
            .map(canonical_title)
            .collect())
    }
}

/// Decides whether a Wikipedia page is about a person from its categories.
#[derive(Debug, Clone)]
struct PersonClassifier {
    http: Http,
    api: Url,
    cache: Option<Arc<ResponseCache>>,
}

fn is_person_category(category: &str) -> bool {
    let name = category.strip_prefix("Category:").unwrap_or(category);
    name == "Living people" || name.ends_with(" births") || name.ends_with(" deaths")
}

impl PersonClassifier {
    fn is_person(&self, title: &str) -> Result<bool, LinkError> {
        let key = format!("pageinfo{KEY_SEPARATOR}{title}");
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(&key)) {
            return Ok(hit == "1");
        }
        let json = self.http.get(
            &self.api,
            &[
                ("action", "query"),
                ("prop", "categories"),
                ("titles", title),
                ("cllimit", "max"),
                ("redirects", "1"),
                ("format", "json"),
                ("formatversion", "2"),
            ],
        )?;
        let person = json["query"]["pages"]
            .as_array()
            .into_iter()
            .flatten()
            .flat_map(|p| p["categories"].as_array().into_iter().flatten())
            .filter_map(|c| c["title"].as_str())
            .any(is_person_category);
        if let Some(cache) = &self.cache {
            if let Err(e) = cache.put(&key, if person { "1" } else { "0" }) {
                log::warn!("{e}");
            }
        }
        Ok(person)
    }
}

/// Maps UTF-16 code unit offsets (as returned by TagMe) to char offsets.
fn utf16_to_char_offsets(text: &str) -> Vec<usize> {
    let mut map = Vec::with_capacity(text.len() + 1);
    for (ci, c) in text.chars().enumerate() {
        for _ in 0..c.len_utf16() {
            map.push(ci);
        }
    }
    map.push(text.chars().count());
    map
}

/// TagMe `tag` endpoint client. Person flags come from the spot's Wikipedia
/// categories.
#[derive(Debug, Clone)]
pub struct TagmeHttpClient {
    http: Http,
    endpoint: Url,
    token: String,
    classifier: PersonClassifier,
}

impl TagmeHttpClient {
    pub const DEFAULT_ENDPOINT: &'static str = "https://tagme.d4science.org/tagme/tag";
    pub const TOKEN_ENV: &'static str = "TAGME_TOKEN";

    /// `mediawiki_api` is queried for page categories; `cache` memoizes
    /// those lookups.
    pub fn new(
        endpoint: &str,
        token: impl Into<String>,
        mediawiki_api: &str,
        settings: &HttpSettings,
        cache: Option<Arc<ResponseCache>>,
    ) -> Result<Self, LinkError> {
        let http = Http::new(settings)?;
        Ok(TagmeHttpClient {
            classifier: PersonClassifier {
                http: http.clone(),
                api: parse_url(mediawiki_api)?,
                cache,
            },
            http,
            endpoint: parse_url(endpoint)?,
            token: token.into(),
        })
    }
}

impl TagmeClient for TagmeHttpClient {
    fn tag(&self, text: &str) -> Result<Vec<TagmeAnnotation>, LinkError> {
        let json = self.http.post_form(
            &self.endpoint,
            &[("lang", "en"), ("gcube-token", &self.token), ("text", text)],
        )?;
        let offsets = utf16_to_char_offsets(text);
        let mut out = Vec::new();
        for a in json["annotations"].as_array().into_iter().flatten() {
            let (Some(start), Some(end), Some(title)) = (a["start"].as_u64(), a["end"].as_u64(), a["title"].as_str())
            else {
                continue;
            };
            let (Some(&start), Some(&end)) = (offsets.get(start as usize), offsets.get(end as usize)) else {
                continue;
            };
            let title = canonical_title(title);
            out.push(TagmeAnnotation {
                start,
                end,
                is_person: self.classifier.is_person(&title)?,
                title,
                rho: a["rho"].as_f64().unwrap_or(0.0).clamp(0.0, 1.0),
            });
        }
        Ok(out)
    }
}

fn cached<T: serde::Serialize + serde::de::DeserializeOwned>(
    cache: &ResponseCache,
    key: String,
    fetch: impl FnOnce() -> Result<T, LinkError>,
) -> Result<T, LinkError> {
    if let Some(hit) = cache.get(&key) {
        match serde_json::from_str(&hit) {
            Ok(v) => return Ok(v),
            Err(e) => log::warn!("undecodable cache entry, refetching: {e}"),
        }
    }
    let value = fetch()?;
    match serde_json::to_string(&value) {
        Ok(s) => {
            if let Err(e) = cache.put(&key, &s) {
                log::warn!("{e}");
            }
        }
        Err(e) => log::warn!("cannot cache response: {e}"),
    }
    Ok(value)
}

/// Search client whose responses persist in a [`ResponseCache`].
#[derive(Debug)]
pub struct CachedSearchClient<C> {
    inner: C,
    cache: Arc<ResponseCache>,
}

impl<C> CachedSearchClient<C> {
    pub fn new(inner: C, cache: Arc<ResponseCache>) -> Self {
        CachedSearchClient { inner, cache }
    }
}

impl<C: SearchClient> SearchClient for CachedSearchClient<C> {
    fn search(&self, query: &str) -> Result<Vec<String>, LinkError> {
        cached(&self.cache, format!("wikisearch{KEY_SEPARATOR}{query}"), || {
            self.inner.search(query)
        })
    }
}

#[derive(Debug)]
pub struct CachedTagmeClient<C> {
    inner: C,
    cache: Arc<ResponseCache>,
}

impl<C> CachedTagmeClient<C> {
    pub fn new(inner: C, cache: Arc<ResponseCache>) -> Self {
        CachedTagmeClient { inner, cache }
    }
}

impl<C: TagmeClient> TagmeClient for CachedTagmeClient<C> {
    fn tag(&self, text: &str) -> Result<Vec<TagmeAnnotation>, LinkError> {
        cached(&self.cache, format!("tagme{KEY_SEPARATOR}{text}"), || {
            self.inner.tag(text)
        })
    }
}
