use std::path::Path;

use serde::{Deserialize, Serialize};
use url::Url;

use crate::error::{Error, Result};

const DEFAULT_BLOCKLIST: &str = include_str!("../../data/blocklist.tsv");

/// Two-label public suffixes under which the registrable name takes three
/// labels. Not a full public suffix list; covers the common ccTLD cases.
const MULTI_LABEL_SUFFIXES: &[&str] = &[
    "co.uk", "org.uk", "ac.uk", "gov.uk", "me.uk", "com.au", "net.au", "org.au", "edu.au", "co.jp",
    "ne.jp", "or.jp", "co.nz", "co.in", "co.za", "co.kr", "com.br", "com.cn", "com.mx", "com.tr",
    "com.sg", "com.hk", "com.ar", "com.tw",
];

/// Lowercased host of a URL. Scheme-less URLs such as `youtube.com/w` are
/// read as `http://`.
pub fn url_host(raw: &str) -> Option<String> {
    let raw = raw.trim();
    let parsed = match Url::parse(raw) {
        Ok(u) if u.host_str().is_some() => u,
        _ => Url::parse(&format!("http://{raw}")).ok()?,
    };
    let host = parsed
        .host_str()?
        .trim_end_matches('.')
        .to_ascii_lowercase();
    if host.is_empty() {
        None
    } else {
        Some(host)
    }
}

/// Registrable part of the URL's host (`news.bbc.co.uk` → `bbc.co.uk`,
/// `www.a.com` → `a.com`). Unparseable URLs fall back to the lowercased raw
/// string so that they still count as one host each.
pub fn registrable_host(raw: &str) -> String {
    let Some(host) = url_host(raw) else {
        return raw.trim().to_lowercase();
    };
    if host.parse::<std::net::IpAddr>().is_ok() || host.starts_with('[') {
        return host;
    }
    let labels: Vec<&str> = host.split('.').collect();
    if labels.len() <= 2 {
        return host;
    }
    let n = labels.len();
    let last_two = format!("{}.{}", labels[n - 2], labels[n - 1]);
    let keep = if MULTI_LABEL_SUFFIXES.contains(&last_two.as_str()) {
        3
    } else {
        2
    };
    labels[n.saturating_sub(keep)..].join(".")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HostKind {
    Media,
    Facebook,
}

/// Hosts whose URLs are stripped during cleansing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HostBlocklist {
    entries: Vec<(String, HostKind)>,
}

impl Default for HostBlocklist {
    fn default() -> Self {
        Self::parse(DEFAULT_BLOCKLIST).expect("bundled blocklist is well-formed")
    }
}

impl HostBlocklist {
    pub fn new(entries: Vec<(String, HostKind)>) -> Self {
        let entries = entries
            .into_iter()
            .map(|(h, k)| (h.to_ascii_lowercase(), k))
            .collect();
        Self { entries }
    }

    /// Parses `host<TAB>kind` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split_whitespace();
            let host = cols.next().unwrap_or_default();
            let kind = match cols.next() {
                None | Some("media") => HostKind::Media,
                Some("facebook") => HostKind::Facebook,
                Some(other) => {
                    return Err(Error::Format(format!(
                        "blocklist line {}: unknown host kind `{other}`",
                        i + 1
                    )))
                }
            };
            entries.push((host.to_ascii_lowercase(), kind));
        }
        Ok(Self { entries })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn entries(&self) -> &[(String, HostKind)] {
        &self.entries
    }

    /// Kind of the first listed host equal to, or a parent domain of, the
    /// URL's host.
    pub fn classify(&self, url: &str) -> Option<HostKind> {
        let host = url_host(url)?;
        self.entries.iter().find_map(|(listed, kind)| {
            let hit = host == *listed
                || (host.len() > listed.len()
                    && host.ends_with(listed.as_str())
                    && host.as_bytes()[host.len() - listed.len() - 1] == b'.');
            hit.then_some(*kind)
        })
    }
}
