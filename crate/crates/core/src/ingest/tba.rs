//! Read-only client for The Blue Alliance v3 API with an on-disk cache.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde_json::Value;

use crate::design::MatchRecord;
use crate::error::{Error, Result};
use crate::ingest::{EventDataset, Source};

pub const TBA_BASE_URL: &str = "https://www.thebluealliance.com/api/v3";

const ENDPOINT: &str = "matches/simple";

pub struct TbaClient {
    base_url: String,
    api_key: String,
    cache_dir: PathBuf,
    agent: ureq::Agent,
}

impl TbaClient {
    pub fn new(api_key: impl Into<String>, cache_dir: impl Into<PathBuf>) -> Self {
        TbaClient::with_base_url(TBA_BASE_URL, api_key, cache_dir)
    }

    pub fn with_base_url(base_url: impl Into<String>, api_key: impl Into<String>, cache_dir: impl Into<PathBuf>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(30)))
            .http_status_as_error(false)
            .build()
            .into();
        TbaClient {
            base_url: base_url.into().trim_end_matches('/').to_owned(),
            api_key: api_key.into(),
            cache_dir: cache_dir.into(),
            agent,
        }
    }

    pub fn cache_path(&self, event: &str) -> PathBuf {
        self.cache_dir.join(event).join("matches_simple.json")
    }

    /// Qualification matches of `event`, from the cache when present.
    pub fn event_matches(&self, event: &str, exclude: &[String]) -> Result<EventDataset> {
        if event.is_empty() || !event.chars().all(|c| c.is_ascii_alphanumeric()) {
            return Err(Error::Validation(format!("event key `{event}` must be alphanumeric")));
        }
        let cache = self.cache_path(event);
        let (body, source) = match std::fs::read_to_string(&cache) {
            Ok(text) => (text, Source::Cache),
            Err(_) => {
                let text = self.download(event)?;
                // Validate before caching so a bad response is never stored.
                parse_simple_matches(&text)?;
                write_atomic(&cache, text.as_bytes())?;
                (text, Source::Api)
            }
        };
        EventDataset::new(event, parse_simple_matches(&body)?, exclude, source)
    }

    fn download(&self, event: &str) -> Result<String> {
        if self.api_key.trim().is_empty() {
            return Err(Error::Credential("TBA_AUTH_KEY is empty".into()));
        }
        let url = format!("{}/event/{event}/{ENDPOINT}", self.base_url);
        let mut resp = self
            .agent
            .get(&url)
            .header("X-TBA-Auth-Key", &self.api_key)
            .call()
            .map_err(|e| Error::Transport(format!("GET {url}: {e}")))?;
        let status = resp.status().as_u16();
        match status {
            200 => resp
                .body_mut()
                .read_to_string()
                .map_err(|e| Error::Transport(format!("reading {url}: {e}"))),
            401 | 403 => Err(Error::Credential(format!("GET {url} returned {status}"))),
            _ => Err(Error::Transport(format!("GET {url} returned {status}"))),
        }
    }
}

/// `fetch_event_matches(event, api_key, cache_dir)` against the public API.
pub fn fetch_event_matches(event: &str, api_key: &str, cache_dir: &Path) -> Result<EventDataset> {
    TbaClient::new(api_key, cache_dir).event_matches(event, &[])
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().expect("cache path has a parent");
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn field<'a>(v: &'a Value, path: &str) -> Result<&'a Value> {
    let mut cur = v;
    for part in path.split('.') {
        cur = cur.get(part).ok_or_else(|| Error::Schema { field: path.to_owned() })?;
    }
    Ok(cur)
}

fn alliance(m: &Value, side: &str) -> Result<([String; 3], i64)> {
    let keys_path = format!("alliances.{side}.team_keys");
    let keys = field(m, &keys_path)?
        .as_array()
        .filter(|a| a.len() == 3)
        .ok_or_else(|| Error::Schema { field: keys_path.clone() })?;
    let mut ids: [String; 3] = Default::default();
    for (slot, k) in ids.iter_mut().zip(keys) {
        *slot = k.as_str().ok_or_else(|| Error::Schema { field: keys_path.clone() })?.to_owned();
    }
    let score_path = format!("alliances.{side}.score");
    let score = field(m, &score_path)?.as_i64().ok_or(Error::Schema { field: score_path })?;
    Ok((ids, score))
}

/// Qualification matches of a `matches/simple` response. Unplayed matches
/// (score `-1`) are skipped; match ids become `qm<number>`.
pub fn parse_simple_matches(body: &str) -> Result<Vec<MatchRecord>> {
    let v: Value = serde_json::from_str(body)?;
    let list = v.as_array().ok_or(Error::Schema { field: "<root array>".into() })?;
    let mut out = Vec::new();
    for m in list {
        let level = field(m, "comp_level")?.as_str().ok_or(Error::Schema { field: "comp_level".into() })?;
        if level != "qm" {
            continue;
        }
        let number = field(m, "match_number")?
            .as_u64()
            .ok_or(Error::Schema { field: "match_number".into() })?;
        let (red, red_score) = alliance(m, "red")?;
        let (blue, blue_score) = alliance(m, "blue")?;
        if red_score < 0 || blue_score < 0 {
            continue;
        }
        let to_u32 = |s: i64, side: &str| {
            u32::try_from(s).map_err(|_| Error::Schema { field: format!("alliances.{side}.score") })
        };
        out.push(MatchRecord {
            match_id: format!("qm{number}"),
            red,
            blue,
            red_score: to_u32(red_score, "red")?,
            blue_score: to_u32(blue_score, "blue")?,
        });
    }
    Ok(out)
}
