use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{Dataset, Post, Provenance, Reply, UserProfile};
use crate::error::{Error, Result};

/// Loading fails when more than this fraction of non-blank lines is malformed.
pub const MAX_MALFORMED_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    /// Non-blank lines read.
    pub lines: usize,
    pub malformed_lines: usize,
    /// Well-formed posts whose `user_id` has no user record; dropped.
    pub unknown_user_posts: usize,
    pub account_date_violations: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "record_type", rename_all = "lowercase")]
enum Record {
    User {
        id: String,
        followers_count: u64,
        friends_count: u64,
        account_created_at: DateTime<Utc>,
    },
    Post {
        id: String,
        user_id: String,
        text: String,
        #[serde(default)]
        urls: Vec<String>,
        created_at: DateTime<Utc>,
        #[serde(default)]
        retweet_count: u64,
        #[serde(default)]
        like_count: u64,
    },
    Reply {
        id: String,
        parent_post_id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        user_id: Option<String>,
        text: String,
        created_at: DateTime<Utc>,
    },
}

impl Record {
    fn has_empty_id(&self) -> bool {
        match self {
            Record::User { id, .. } => id.is_empty(),
            Record::Post { id, user_id, .. } => id.is_empty() || user_id.is_empty(),
            Record::Reply {
                id, parent_post_id, ..
            } => id.is_empty() || parent_post_id.is_empty(),
        }
    }
}

/// Loads a JSONL dataset file. Malformed lines are counted, not fatal,
/// unless they exceed [`MAX_MALFORMED_FRACTION`].
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut ds = read_dataset(BufReader::new(file), &path.display().to_string())?;
    ds.provenance.loaded_at = Some(Utc::now());
    Ok(ds)
}

/// Reads a JSONL dataset from any reader; `source` is recorded in provenance.
pub fn read_dataset<R: BufRead>(reader: R, source: &str) -> Result<Dataset> {
    let mut report = LoadReport::default();
    let mut users: Vec<UserProfile> = Vec::new();
    let mut posts: Vec<Post> = Vec::new();
    let mut replies: Vec<Reply> = Vec::new();

    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source, e))?;
        if line.trim().is_empty() {
            continue;
        }
        report.lines += 1;
        let record = match serde_json::from_str::<Record>(&line) {
            Ok(r) if !r.has_empty_id() => r,
            Ok(_) => {
                log::warn!("{source}:{}: empty id field", lineno + 1);
                report.malformed_lines += 1;
                continue;
            }
            Err(e) => {
                log::warn!("{source}:{}: malformed record: {e}", lineno + 1);
                report.malformed_lines += 1;
                continue;
            }
        };
        match record {
            Record::User {
                id,
                followers_count,
                friends_count,
                account_created_at,
            } => users.push(UserProfile {
                user_id: id,
                followers_count,
                friends_count,
                account_created_at,
                posts: Vec::new(),
            }),
            Record::Post {
                id,
                user_id,
                text,
                urls,
                created_at,
                retweet_count,
                like_count,
            } => posts.push(Post {
                id,
                user_id,
                text,
                urls,
                created_at,
                retweet_count,
                like_count,
                reply_ids: Vec::new(),
            }),
            Record::Reply {
                id,
                parent_post_id,
                user_id,
                text,
                created_at,
            } => replies.push(Reply {
                id,
                parent_post_id,
                user_id,
                text,
                created_at,
            }),
        }
    }

    if report.lines > 0
        && report.malformed_lines as f64 > MAX_MALFORMED_FRACTION * report.lines as f64
    {
        return Err(Error::Format(format!(
            "{source}: {} of {} lines are malformed",
            report.malformed_lines, report.lines
        )));
    }

    // Posts attach to the first user record carrying their user_id.
    let mut first_index: HashMap<String, usize> = HashMap::new();
    for (i, u) in users.iter().enumerate() {
        first_index.entry(u.user_id.clone()).or_insert(i);
    }
    for post in posts {
        match first_index.get(&post.user_id) {
            Some(&i) => users[i].posts.push(post),
            None => report.unknown_user_posts += 1,
        }
    }
    if report.unknown_user_posts > 0 {
        log::warn!(
            "{source}: dropped {} posts of users without a user record",
            report.unknown_user_posts
        );
    }

    let mut ds = Dataset {
        users,
        replies,
        provenance: Provenance {
            source: Some(source.to_string()),
            loaded_at: None,
            load: LoadReport::default(),
        },
    };
    ds.link_replies();
    report.account_date_violations = ds.account_date_violations().len();
    if report.account_date_violations > 0 {
        log::warn!(
            "{source}: {} users have an account creation date after their first post",
            report.account_date_violations
        );
    }
    ds.provenance.load = report;
    Ok(ds)
}

/// Writes the dataset in the ingest JSONL format: each user record followed
/// by that user's posts, then all replies.
pub fn write_jsonl<W: Write>(ds: &Dataset, mut out: W) -> Result<()> {
    let mut emit = |rec: &Record| -> Result<()> {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n").map_err(|e| Error::io("<output>", e))
    };
    for u in &ds.users {
        emit(&Record::User {
            id: u.user_id.clone(),
            followers_count: u.followers_count,
            friends_count: u.friends_count,
            account_created_at: u.account_created_at,
        })?;
        for p in &u.posts {
            emit(&Record::Post {
                id: p.id.clone(),
                user_id: p.user_id.clone(),
                text: p.text.clone(),
                urls: p.urls.clone(),
                created_at: p.created_at,
                retweet_count: p.retweet_count,
                like_count: p.like_count,
            })?;
        }
    }
    for r in &ds.replies {
        emit(&Record::Reply {
            id: r.id.clone(),
            parent_post_id: r.parent_post_id.clone(),
            user_id: r.user_id.clone(),
            text: r.text.clone(),
            created_at: r.created_at,
        })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const USER: &str = r#"{"record_type":"user","id":"u1","followers_count":10,"friends_count":3,"account_created_at":"2015-01-01T00:00:00Z"}"#;
    const POST1: &str = r#"{"record_type":"post","id":"p1","user_id":"u1","text":"hello world","urls":["https://a.com/x"],"created_at":"2017-01-05T10:00:00Z","retweet_count":2,"like_count":5}"#;
    const POST2: &str = r#"{"record_type":"post","id":"p2","user_id":"u1","text":"second","created_at":"2017-01-06T10:00:00Z"}"#;
    const REPLY: &str = r#"{"record_type":"reply","id":"r1","parent_post_id":"p1","text":"great","created_at":"2017-01-05T11:00:00Z","extra":"ignored"}"#;

    fn read(text: &str) -> Result<Dataset> {
        read_dataset(text.as_bytes(), "test")
    }

    #[test]
    fn empty_input_gives_empty_dataset() {
        let ds = read("").unwrap();
        assert!(ds.users.is_empty());
        assert!(ds.replies.is_empty());
    }

    #[test]
    fn fixture_counts() {
        let ds = read(&[USER, POST1, POST2, REPLY].join("\n")).unwrap();
        assert_eq!(ds.users.len(), 1);
        assert_eq!(ds.post_count(), 2);
        assert_eq!(ds.replies.len(), 1);
        assert_eq!(ds.users[0].posts[0].reply_ids, vec!["r1".to_string()]);
        assert_eq!(ds.users[0].posts[1].retweet_count, 0);
    }

    #[test]
    fn malformed_lines_are_counted() {
        let text = [USER, POST1, "{not json", REPLY].join("\n");
        let ds = read(&text).unwrap();
        assert_eq!(ds.provenance.load.malformed_lines, 1);
        assert_eq!(ds.provenance.load.lines, 4);
        assert_eq!(ds.users.len() + ds.post_count() + ds.replies.len(), 3);
    }

    #[test]
    fn negative_count_is_malformed() {
        let bad = POST2.replace("\"text\"", "\"like_count\":-1,\"text\"");
        let ds = read(&[USER, POST1, &bad].join("\n")).unwrap();
        assert_eq!(ds.provenance.load.malformed_lines, 1);
        assert_eq!(ds.post_count(), 1);
    }

    #[test]
    fn unknown_record_type_is_malformed() {
        let bad = r#"{"record_type":"like","id":"x"}"#;
        let ds = read(&[USER, POST1, bad].join("\n")).unwrap();
        assert_eq!(ds.provenance.load.malformed_lines, 1);
    }

    #[test]
    fn majority_malformed_is_fatal() {
        let text = [USER, "garbage", "{}", "[1]"].join("\n");
        assert!(matches!(read(&text), Err(Error::Format(_))));
        // exactly half is tolerated
        let text = [USER, POST1, "garbage", "{}"].join("\n");
        assert!(read(&text).is_ok());
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_dataset(Path::new("/nonexistent/none.jsonl")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn posts_without_user_are_dropped_and_counted() {
        let orphan = POST1.replace("\"u1\"", "\"u9\"");
        let ds = read(&[USER, &orphan].join("\n")).unwrap();
        assert_eq!(ds.post_count(), 0);
        assert_eq!(ds.provenance.load.unknown_user_posts, 1);
    }

    #[test]
    fn late_account_creation_is_flagged() {
        let late = USER.replace("2015-01-01", "2018-01-01");
        let ds = read(&[late.as_str(), POST1].join("\n")).unwrap();
        assert_eq!(ds.provenance.load.account_date_violations, 1);
        assert_eq!(ds.account_date_violations(), vec!["u1"]);
    }

    #[test]
    fn write_then_read_is_identity() {
        let ds = read(&[USER, POST1, POST2, REPLY].join("\n")).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&ds, &mut buf).unwrap();
        let back = read_dataset(buf.as_slice(), "buf").unwrap();
        assert!(ds.same_records(&back));
    }
}
