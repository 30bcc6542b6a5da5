use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{Dataset, HostBlocklist, HostKind, UserProfile};

#[derive(Debug, Clone)]
pub struct CleanseConfig {
    /// Users with fewer posts than this are removed.
    pub min_posts: usize,
    pub blocklist: HostBlocklist,
}

impl Default for CleanseConfig {
    fn default() -> Self {
        Self {
            min_posts: 50,
            blocklist: HostBlocklist::default(),
        }
    }
}

/// Tallies of everything [`cleanse`] removed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanseReport {
    /// Posts dropped because an earlier post had the same id.
    pub duplicates_removed: usize,
    pub duplicate_users_removed: usize,
    pub duplicate_replies_removed: usize,
    pub users_removed_min_posts: usize,
    /// Unique posts that left together with their under-threshold author.
    pub posts_removed_with_users: usize,
    pub media_urls_removed: usize,
    pub facebook_urls_removed: usize,
    pub orphan_replies_removed: usize,
}

impl CleanseReport {
    pub fn is_empty(&self) -> bool {
        *self == CleanseReport::default()
    }
}

/// Removes redundant records, low-activity users, media/Facebook URLs and
/// replies left without a parent, in that order. Record order is preserved.
pub fn cleanse(d: &Dataset, config: &CleanseConfig) -> (Dataset, CleanseReport) {
    let mut report = CleanseReport::default();

    // (i) redundant users, posts and replies; first occurrence wins
    let mut users: Vec<UserProfile> = Vec::with_capacity(d.users.len());
    let mut user_slot: HashMap<&str, usize> = HashMap::new();
    let mut seen_posts: HashSet<&str> = HashSet::new();
    for u in &d.users {
        let slot = match user_slot.get(u.user_id.as_str()) {
            Some(&i) => {
                report.duplicate_users_removed += 1;
                i
            }
            None => {
                user_slot.insert(&u.user_id, users.len());
                users.push(UserProfile {
                    posts: Vec::new(),
                    ..u.clone()
                });
                users.len() - 1
            }
        };
        for p in &u.posts {
            if seen_posts.insert(p.id.as_str()) {
                users[slot].posts.push(p.clone());
            } else {
                report.duplicates_removed += 1;
            }
        }
    }
    let mut seen_replies: HashSet<&str> = HashSet::new();
    let mut replies = Vec::with_capacity(d.replies.len());
    for r in &d.replies {
        if seen_replies.insert(r.id.as_str()) {
            replies.push(r.clone());
        } else {
            report.duplicate_replies_removed += 1;
        }
    }

    // (ii) activity threshold
    users.retain(|u| {
        let keep = u.posts.len() >= config.min_posts;
        if !keep {
            report.users_removed_min_posts += 1;
            report.posts_removed_with_users += u.posts.len();
        }
        keep
    });

    // (iii) URLs without extractable text
    for u in &mut users {
        for p in &mut u.posts {
            p.urls.retain(|url| match config.blocklist.classify(url) {
                Some(HostKind::Media) => {
                    report.media_urls_removed += 1;
                    false
                }
                Some(HostKind::Facebook) => {
                    report.facebook_urls_removed += 1;
                    false
                }
                None => true,
            });
        }
    }

    // (iv) replies follow their parent
    let live: HashSet<&str> = users
        .iter()
        .flat_map(|u| u.posts.iter().map(|p| p.id.as_str()))
        .collect();
    let before = replies.len();
    replies.retain(|r| live.contains(r.parent_post_id.as_str()));
    report.orphan_replies_removed = before - replies.len();

    let mut out = Dataset {
        users,
        replies,
        provenance: d.provenance.clone(),
    };
    out.link_replies();
    (out, report)
}
