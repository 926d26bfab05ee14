//! Fetcher queue with anti-starvation aging.
//!
//! An item's effective priority at cycle `c` is
//! `min(1, base + delta * (c - enqueue_cycle))`. Priorities are compared in
//! fixed point (1e-12 resolution) so that ordering and tie-breaking are
//! exact: below the cap every item ages at the same rate, so the order of
//! uncapped items is the static order of `base - delta * enqueue_cycle`;
//! capped items all sit at 1.0 and are ordered by enqueue cycle, then URL.

use std::cmp::Reverse;
use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

pub const DEFAULT_AGING_DELTA: f64 = 0.001;

const SCALE: f64 = 1e12;
const ONE: i128 = 1_000_000_000_000;

fn quantize(p: f64) -> i128 {
    (p * SCALE).round() as i128
}

#[derive(Debug, Error, PartialEq)]
pub enum FrontierError {
    #[error("priority {0} is outside (0, 1]")]
    InvalidPriority(f64),
    #[error("aging increment {0} must be positive")]
    InvalidDelta(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueueDiscipline {
    /// Highest effective priority first.
    Priority,
    /// First in, first out; priorities are kept for logging only.
    Fifo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Enqueued {
    Accepted,
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierItem {
    pub url: Url,
    pub base_priority: f64,
    pub effective_priority: f64,
    pub enqueue_cycle: u64,
}

#[derive(Debug, Clone)]
struct Entry {
    url: Url,
    base: f64,
    base_q: i128,
    enqueue_cycle: u64,
    seq: u64,
}

type UncappedKey = (Reverse<i128>, u64, String);
type CappedKey = (u64, String);

#[derive(Debug, Clone)]
pub struct Frontier {
    discipline: QueueDiscipline,
    delta: f64,
    delta_q: i128,
    seen: HashSet<String>,
    entries: HashMap<String, Entry>,
    uncapped: BTreeSet<UncappedKey>,
    capped: BTreeSet<CappedKey>,
    fifo: VecDeque<(u64, String)>,
    next_seq: u64,
}

impl Frontier {
    pub fn new(discipline: QueueDiscipline, aging_delta: f64) -> Result<Self, FrontierError> {
        if !(aging_delta > 0.0 && aging_delta.is_finite()) {
            return Err(FrontierError::InvalidDelta(aging_delta));
        }
        Ok(Frontier {
            discipline,
            delta: aging_delta,
            delta_q: quantize(aging_delta),
            seen: HashSet::new(),
            entries: HashMap::new(),
            uncapped: BTreeSet::new(),
            capped: BTreeSet::new(),
            fifo: VecDeque::new(),
            next_seq: 0,
        })
    }

    pub fn aging_delta(&self) -> f64 {
        self.delta
    }

    pub fn discipline(&self) -> QueueDiscipline {
        self.discipline
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True once a URL has ever been enqueued or marked seen.
    pub fn has_seen(&self, url: &Url) -> bool {
        self.seen.contains(url.as_str())
    }

    /// Adds a URL to the dedup set without queueing it.
    pub fn mark_seen(&mut self, url: &Url) {
        self.seen.insert(url.as_str().to_owned());
    }

    /// Stores the first sighting of a URL; later sightings are dropped
    /// whatever their priority.
    pub fn enqueue(&mut self, url: &Url, priority: f64, cycle: u64) -> Result<Enqueued, FrontierError> {
        if !(priority > 0.0 && priority <= 1.0) {
            return Err(FrontierError::InvalidPriority(priority));
        }
        if !self.seen.insert(url.as_str().to_owned()) {
            return Ok(Enqueued::Duplicate);
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.insert(Entry {
            url: url.clone(),
            base: priority,
            base_q: quantize(priority),
            enqueue_cycle: cycle,
            seq,
        });
        Ok(Enqueued::Accepted)
    }

    fn insert(&mut self, e: Entry) {
        let key = e.url.as_str().to_owned();
        match self.discipline {
            QueueDiscipline::Priority => {
                self.uncapped.insert((
                    Reverse(e.base_q - self.delta_q * i128::from(e.enqueue_cycle)),
                    e.enqueue_cycle,
                    key.clone(),
                ));
            }
            QueueDiscipline::Fifo => self.fifo.push_back((e.seq, key.clone())),
        }
        self.entries.insert(key, e);
    }

    fn effective_q(&self, e: &Entry, cycle: u64) -> i128 {
        let age = i128::from(cycle.saturating_sub(e.enqueue_cycle));
        (e.base_q + self.delta_q * age).min(ONE)
    }

    /// Effective priority of a queued URL at the given cycle.
    pub fn effective_priority(&self, url: &Url, cycle: u64) -> Option<f64> {
        self.entries
            .get(url.as_str())
            .map(|e| self.effective_q(e, cycle) as f64 / SCALE)
    }

    /// Removes and returns the item with the highest effective priority at
    /// `cycle`; ties go to the earlier enqueue cycle, then the smaller URL.
    pub fn dequeue_highest(&mut self, cycle: u64) -> Option<FrontierItem> {
        let key = match self.discipline {
            QueueDiscipline::Priority => {
                let now = self.delta_q * i128::from(cycle);
                while let Some(first) = self.uncapped.first() {
                    if first.0 .0 + now < ONE {
                        break;
                    }
                    let (_, e, url) = self.uncapped.pop_first().expect("non-empty");
                    self.capped.insert((e, url));
                }
                match self.capped.pop_first() {
                    Some((_, url)) => url,
                    None => self.uncapped.pop_first()?.2,
                }
            }
            QueueDiscipline::Fifo => self.fifo.pop_front()?.1,
        };
        let e = self.entries.remove(&key).expect("queued keys have entries");
        Some(FrontierItem {
            effective_priority: self.effective_q(&e, cycle) as f64 / SCALE,
            url: e.url,
            base_priority: e.base,
            enqueue_cycle: e.enqueue_cycle,
        })
    }

    /// Serializable copy of the queue and dedup set.
    pub fn snapshot(&self) -> FrontierState {
        let mut items: Vec<QueuedState> = self
            .entries
            .values()
            .map(|e| QueuedState {
                url: e.url.clone(),
                base_priority: e.base,
                enqueue_cycle: e.enqueue_cycle,
                seq: e.seq,
            })
            .collect();
        items.sort_by_key(|i| i.seq);
        let mut seen: Vec<String> = self.seen.iter().cloned().collect();
        seen.sort();
        FrontierState {
            discipline: self.discipline,
            aging_delta: self.delta,
            next_seq: self.next_seq,
            items,
            seen,
        }
    }

    pub fn restore(state: &FrontierState) -> Result<Self, FrontierError> {
        let mut f = Frontier::new(state.discipline, state.aging_delta)?;
        f.seen = state.seen.iter().cloned().collect();
        f.next_seq = state.next_seq;
        for i in &state.items {
            f.seen.insert(i.url.as_str().to_owned());
            f.insert(Entry {
                url: i.url.clone(),
                base: i.base_priority,
                base_q: quantize(i.base_priority),
                enqueue_cycle: i.enqueue_cycle,
                seq: i.seq,
            });
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueuedState {
    pub url: Url,
    pub base_priority: f64,
    pub enqueue_cycle: u64,
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierState {
    pub discipline: QueueDiscipline,
    pub aging_delta: f64,
    pub next_seq: u64,
    pub items: Vec<QueuedState>,
    pub seen: Vec<String>,
}
