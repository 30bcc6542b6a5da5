use std::collections::{BTreeMap, HashMap};

use chrono::{DateTime, Datelike, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use super::{Dataset, UserProfile};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    /// Calendar months in UTC.
    #[default]
    Month,
}

/// Half-open time interval `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub label: String,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl TimeWindow {
    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        self.start <= t && t < self.end
    }
}

pub fn month_label(t: DateTime<Utc>) -> String {
    format!("{:04}-{:02}", t.year(), t.month())
}

type MonthKey = (i32, u32);

fn month_key(t: DateTime<Utc>) -> MonthKey {
    (t.year(), t.month())
}

fn month_start((y, m): MonthKey) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(y, m, 1, 0, 0, 0)
        .single()
        .expect("first of month is unambiguous in UTC")
}

fn next_month((y, m): MonthKey) -> MonthKey {
    if m == 12 {
        (y + 1, 1)
    } else {
        (y, m + 1)
    }
}

/// Splits a cleansed dataset into calendar-month snapshots.
///
/// Posts are placed by their own timestamp; replies go to the window of
/// their parent post so that each snapshot is self-contained. A user appears
/// in a window iff they posted in it. With `dense`, months without posts
/// between the first and last window (or across the span) are kept as empty
/// snapshots.
pub fn partition_windows(
    d: &Dataset,
    granularity: Granularity,
    span: Option<(DateTime<Utc>, DateTime<Utc>)>,
    dense: bool,
) -> Result<Vec<(TimeWindow, Dataset)>> {
    let Granularity::Month = granularity;
    if let Some((start, end)) = span {
        if start >= end {
            return Err(Error::Argument(format!(
                "window span start {start} is not before end {end}"
            )));
        }
    }
    let in_span = |t: DateTime<Utc>| span.is_none_or(|(s, e)| s <= t && t < e);

    let mut buckets: BTreeMap<MonthKey, Dataset> = BTreeMap::new();
    let mut post_month: HashMap<&str, MonthKey> = HashMap::new();

    for user in &d.users {
        let mut per_month: BTreeMap<MonthKey, Vec<_>> = BTreeMap::new();
        for p in user.posts.iter().filter(|p| in_span(p.created_at)) {
            let key = month_key(p.created_at);
            post_month.insert(p.id.as_str(), key);
            per_month.entry(key).or_default().push(p.clone());
        }
        for (key, posts) in per_month {
            let bucket = buckets.entry(key).or_insert_with(|| Dataset {
                provenance: d.provenance.clone(),
                ..Default::default()
            });
            bucket.users.push(UserProfile {
                posts,
                ..user_meta(user)
            });
        }
    }
    for r in &d.replies {
        if let Some(key) = post_month.get(r.parent_post_id.as_str()) {
            if let Some(bucket) = buckets.get_mut(key) {
                bucket.replies.push(r.clone());
            }
        }
    }

    if dense {
        let range = match span {
            Some((s, e)) => Some((
                month_key(s),
                month_key(e - chrono::Duration::nanoseconds(1)),
            )),
            None => buckets
                .keys()
                .next()
                .copied()
                .zip(buckets.keys().next_back().copied()),
        };
        if let Some((first, last)) = range {
            let mut k = first;
            while k <= last {
                buckets.entry(k).or_insert_with(|| Dataset {
                    provenance: d.provenance.clone(),
                    ..Default::default()
                });
                k = next_month(k);
            }
        }
    }

    Ok(buckets
        .into_iter()
        .map(|(key, mut ds)| {
            ds.link_replies();
            let mut start = month_start(key);
            let mut end = month_start(next_month(key));
            if let Some((s, e)) = span {
                start = start.max(s);
                end = end.min(e);
            }
            let window = TimeWindow {
                label: format!("{:04}-{:02}", key.0, key.1),
                start,
                end,
            };
            (window, ds)
        })
        .collect())
}

fn user_meta(u: &UserProfile) -> UserProfile {
    UserProfile {
        user_id: u.user_id.clone(),
        followers_count: u.followers_count,
        friends_count: u.friends_count,
        account_created_at: u.account_created_at,
        posts: Vec::new(),
    }
}
