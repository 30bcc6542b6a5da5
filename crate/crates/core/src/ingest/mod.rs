//! Loading, cleansing and time-partitioning of raw social datasets.
//!
//! The on-disk format is JSONL with one record per line, tagged by
//! `record_type` (`user`, `post` or `reply`). A loaded [`Dataset`] keeps
//! redundant records as they appear in the file; [`cleanse`] is the step that
//! removes them and produces the analysis-ready snapshot.

mod cleanse;
mod hosts;
mod load;
mod window;

use std::collections::HashMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use cleanse::{cleanse, CleanseConfig, CleanseReport};
pub use hosts::{registrable_host, url_host, HostBlocklist, HostKind};
pub use load::{load_dataset, read_dataset, write_jsonl, LoadReport, MAX_MALFORMED_FRACTION};
pub use window::{month_label, partition_windows, Granularity, TimeWindow};

/// One social message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    pub user_id: String,
    pub text: String,
    pub urls: Vec<String>,
    pub created_at: DateTime<Utc>,
    pub retweet_count: u64,
    pub like_count: u64,
    /// Ids of the replies to this post present in the owning dataset.
    pub reply_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    pub id: String,
    pub parent_post_id: String,
    /// Author of the reply, when the source recorded one.
    pub user_id: Option<String>,
    pub text: String,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub followers_count: u64,
    pub friends_count: u64,
    pub account_created_at: DateTime<Utc>,
    pub posts: Vec<Post>,
}

impl UserProfile {
    /// Profiles whose creation date is later than their first post are
    /// inconsistent; they are flagged but kept.
    pub fn created_after_first_post(&self) -> bool {
        self.posts
            .iter()
            .map(|p| p.created_at)
            .min()
            .is_some_and(|first| self.account_created_at > first)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: Option<String>,
    pub loaded_at: Option<DateTime<Utc>>,
    pub load: LoadReport,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub users: Vec<UserProfile>,
    pub replies: Vec<Reply>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn post_count(&self) -> usize {
        self.users.iter().map(|u| u.posts.len()).sum()
    }

    pub fn posts(&self) -> impl Iterator<Item = &Post> {
        self.users.iter().flat_map(|u| u.posts.iter())
    }

    /// Record-level equality, ignoring provenance.
    pub fn same_records(&self, other: &Dataset) -> bool {
        self.users == other.users && self.replies == other.replies
    }

    /// Rebuilds every post's `reply_ids` from the reply collection, keeping
    /// reply order. Replies to unknown posts are left alone.
    pub fn link_replies(&mut self) {
        let mut by_parent: HashMap<&str, Vec<String>> = HashMap::new();
        for r in &self.replies {
            by_parent
                .entry(r.parent_post_id.as_str())
                .or_default()
                .push(r.id.clone());
        }
        for user in &mut self.users {
            for post in &mut user.posts {
                post.reply_ids = by_parent.get(post.id.as_str()).cloned().unwrap_or_default();
            }
        }
    }

    pub fn account_date_violations(&self) -> Vec<&str> {
        self.users
            .iter()
            .filter(|u| u.created_after_first_post())
            .map(|u| u.user_id.as_str())
            .collect()
    }
}
