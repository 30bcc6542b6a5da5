use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use crate::error::{Error, Result};

/// Drops the fragment and query string; page text is looked up per page.
pub fn canonical_url(url: &str) -> &str {
    let url = url.trim();
    let end = url.find(['#', '?']).unwrap_or(url.len());
    &url[..end]
}

/// Offline URL → page text map, loaded from `url<TAB>path` lines with paths
/// relative to the map file.
#[derive(Debug, Clone, Default)]
pub struct UrlTextMap {
    pages: HashMap<String, String>,
}

impl UrlTextMap {
    pub fn new(pages: impl IntoIterator<Item = (String, String)>) -> Self {
        Self {
            pages: pages
                .into_iter()
                .map(|(u, t)| (canonical_url(&u).to_string(), t))
                .collect(),
        }
    }

    pub fn from_tsv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut pages = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (url, file) = line.split_once('\t').ok_or_else(|| {
                Error::Format(format!(
                    "{}:{}: expected url<TAB>path",
                    path.display(),
                    i + 1
                ))
            })?;
            let file = base.join(file.trim());
            let raw = std::fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
            let is_html = file
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("html") || e.eq_ignore_ascii_case("htm"))
                || raw.trim_start().starts_with('<');
            let body = if is_html { html_to_text(&raw) } else { raw };
            pages.insert(canonical_url(url).to_string(), body);
        }
        Ok(Self { pages })
    }

    pub fn get(&self, url: &str) -> Option<&str> {
        self.pages.get(canonical_url(url)).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.pages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pages.is_empty()
    }
}

pub enum UrlTextSource {
    Offline(UrlTextMap),
    Online { agent: ureq::Agent },
}

impl UrlTextSource {
    pub fn online(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        UrlTextSource::Online { agent }
    }
}

/// Visible text of the page behind `url`, or `""` when it cannot be had.
pub fn fetch_url_text(url: &str, source: &UrlTextSource) -> String {
    match source {
        UrlTextSource::Offline(map) => match map.get(url) {
            Some(text) => text.to_string(),
            None => {
                log::debug!("no offline text for {url}");
                String::new()
            }
        },
        UrlTextSource::Online { agent } => {
            let fetched = agent
                .get(url)
                .call()
                .and_then(|mut r| r.body_mut().read_to_string());
            match fetched {
                Ok(body) => html_to_text(&body),
                Err(e) => {
                    log::warn!("fetching {url} failed: {e}");
                    String::new()
                }
            }
        }
    }
}

const INLINE_TAGS: &[&str] = &[
    "a", "abbr", "b", "bdi", "bdo", "cite", "code", "data", "dfn", "em", "i", "kbd", "mark", "q",
    "s", "samp", "small", "span", "strong", "sub", "sup", "time", "u", "var", "wbr",
];
const SKIPPED_TAGS: &[&str] = &["script", "style", "noscript", "template"];

fn decode_entity(name: &str) -> Option<char> {
    match name {
        "amp" => Some('&'),
        "lt" => Some('<'),
        "gt" => Some('>'),
        "quot" => Some('"'),
        "apos" => Some('\''),
        "nbsp" => Some(' '),
        _ => {
            let num = name.strip_prefix('#')?;
            let code = match num.strip_prefix(['x', 'X']) {
                Some(hex) => u32::from_str_radix(hex, 16).ok()?,
                None => num.parse().ok()?,
            };
            char::from_u32(code)
        }
    }
}

/// Strips markup, keeping visible text with whitespace collapsed. Block
/// tags separate words, inline tags do not; script and style bodies are
/// dropped.
pub fn html_to_text(html: &str) -> String {
    let mut out = String::with_capacity(html.len());
    let mut rest = html;
    let mut skip_until: Option<String> = None;
    while let Some(lt) = rest.find('<') {
        let (text, tail) = rest.split_at(lt);
        if skip_until.is_none() {
            push_decoded(&mut out, text);
        }
        let Some(gt) = tail.find('>') else {
            rest = "";
            break;
        };
        let tag = &tail[1..gt];
        rest = &tail[gt + 1..];
        let closing = tag.starts_with('/');
        let name: String = tag
            .trim_start_matches(['/', '!'])
            .chars()
            .take_while(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        if let Some(end) = &skip_until {
            if closing && name == *end {
                skip_until = None;
            }
            continue;
        }
        if !closing && SKIPPED_TAGS.contains(&name.as_str()) && !tag.ends_with('/') {
            skip_until = Some(name);
            continue;
        }
        if !INLINE_TAGS.contains(&name.as_str()) {
            out.push(' ');
        }
    }
    if skip_until.is_none() {
        push_decoded(&mut out, rest);
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn push_decoded(out: &mut String, text: &str) {
    let mut rest = text;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        let tail = &rest[amp + 1..];
        match tail.find(';').filter(|&i| i <= 10) {
            Some(semi) => match decode_entity(&tail[..semi]) {
                Some(c) => {
                    out.push(c);
                    rest = &tail[semi + 1..];
                }
                None => {
                    out.push('&');
                    rest = tail;
                }
            },
            None => {
                out.push('&');
                rest = tail;
            }
        }
    }
    out.push_str(rest);
}
