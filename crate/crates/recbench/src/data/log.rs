//! Raw interaction logs: parsing, id remapping, and binarization.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::{Error, Result};

/// One raw feedback event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub user: u32,
    pub item: u32,
    pub rating: f64,
    pub timestamp: i64,
}

/// Input file layouts understood by [`load_interactions`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    /// `user::item::rating::timestamp` with one-based ids.
    MovielensDat,
    /// `user \t item \t rating \t timestamp`.
    TsvRating,
}

/// A deduplicated interaction log with contiguous zero-based ids.
///
/// Original ids are retained in the remapping tables so reports can refer
/// back to the source data. When the same `(user, item)` pair occurs more
/// than once, the event with the latest timestamp is kept (later input lines
/// win ties), which gives leave-one-out splitting a single well-defined
/// "last" event per pair.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionLog {
    events: Vec<Event>,
    num_users: usize,
    num_items: usize,
    user_ids: Vec<u64>,
    item_ids: Vec<u64>,
}

impl InteractionLog {
    /// Builds a log from raw `(user, item, rating, timestamp)` tuples with
    /// arbitrary non-negative integer ids. Ids are remapped to contiguous
    /// zero-based indices in ascending order of the original id.
    pub fn from_raw_events(raw: Vec<(u64, u64, f64, i64)>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::EmptyDataset("no events".into()));
        }
        let mut user_ids: Vec<u64> = raw.iter().map(|e| e.0).collect();
        let mut item_ids: Vec<u64> = raw.iter().map(|e| e.1).collect();
        user_ids.sort_unstable();
        user_ids.dedup();
        item_ids.sort_unstable();
        item_ids.dedup();
        let user_index: HashMap<u64, u32> = user_ids
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, i as u32))
            .collect();
        let item_index: HashMap<u64, u32> = item_ids
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, i as u32))
            .collect();

        // Deduplicate (user, item), keeping the latest timestamp.
        let mut latest: HashMap<(u32, u32), Event> = HashMap::with_capacity(raw.len());
        for (u, i, rating, timestamp) in raw {
            let user = user_index[&u];
            let item = item_index[&i];
            let event = Event {
                user,
                item,
                rating,
                timestamp,
            };
            latest
                .entry((user, item))
                .and_modify(|kept| {
                    if timestamp >= kept.timestamp {
                        *kept = event;
                    }
                })
                .or_insert(event);
        }
        let mut events: Vec<Event> = latest.into_values().collect();
        events.sort_unstable_by_key(|e| (e.user, e.item));
        Ok(Self {
            events,
            num_users: user_ids.len(),
            num_items: item_ids.len(),
            user_ids,
            item_ids,
        })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    /// Original id of a remapped user index.
    pub fn original_user_id(&self, user: u32) -> u64 {
        self.user_ids[user as usize]
    }

    /// Original id of a remapped item index.
    pub fn original_item_id(&self, item: u32) -> u64 {
        self.item_ids[item as usize]
    }

    /// Keeps events with `rating >= threshold` and rewrites their rating to
    /// 1.0, turning graded feedback into implicit feedback.
    pub fn binarize(&self, threshold: f64) -> InteractionLog {
        let events: Vec<Event> = self
            .events
            .iter()
            .filter(|e| e.rating >= threshold)
            .map(|e| Event { rating: 1.0, ..*e })
            .collect();
        InteractionLog {
            events,
            num_users: self.num_users,
            num_items: self.num_items,
            user_ids: self.user_ids.clone(),
            item_ids: self.item_ids.clone(),
        }
    }
}

/// Reads an interaction file in the declared format, returning a
/// deduplicated log with contiguous ids.
pub fn load_interactions(path: impl AsRef<Path>, format: LogFormat) -> Result<InteractionLog> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(display.clone(), e))?;
    let reader = BufReader::new(file);
    let mut raw = Vec::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(display.clone(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        raw.push(parse_line(&line, format, &display, line_no + 1)?);
    }
    if raw.is_empty() {
        return Err(Error::EmptyDataset(display));
    }
    InteractionLog::from_raw_events(raw)
}

fn parse_line(
    line: &str,
    format: LogFormat,
    path: &str,
    line_no: usize,
) -> Result<(u64, u64, f64, i64)> {
    let fields: Vec<&str> = match format {
        LogFormat::MovielensDat => line.split("::").collect(),
        LogFormat::TsvRating => line.split('\t').collect(),
    };
    let err = |message: String| Error::Parse {
        path: path.to_string(),
        line: line_no,
        message,
    };
    if fields.len() < 4 {
        return Err(err(format!("expected 4 fields, got {}", fields.len())));
    }
    let user: u64 = fields[0]
        .trim()
        .parse()
        .map_err(|_| err(format!("bad user id {:?}", fields[0])))?;
    let item: u64 = fields[1]
        .trim()
        .parse()
        .map_err(|_| err(format!("bad item id {:?}", fields[1])))?;
    let rating: f64 = fields[2]
        .trim()
        .parse()
        .map_err(|_| err(format!("bad rating {:?}", fields[2])))?;
    let timestamp: i64 = fields[3]
        .trim()
        .parse()
        .map_err(|_| err(format!("bad timestamp {:?}", fields[3])))?;
    Ok((user, item, rating, timestamp))
}
