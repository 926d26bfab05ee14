//! robots.txt handling per the original exclusion format: `User-agent`
//! records followed by `Disallow` path prefixes. Other directives are
//! ignored. A missing or unfetchable robots.txt allows everything.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use url::Url;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Group {
    agents: Vec<String>,
    disallow: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RobotsRules {
    groups: Vec<Group>,
}

impl RobotsRules {
    pub fn parse(text: &str) -> Self {
        let mut groups: Vec<Group> = Vec::new();
        let mut current: Option<Group> = None;
        let mut in_agents = false;
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((field, value)) = line.split_once(':') else {
                continue;
            };
            let value = value.trim();
            match field.trim().to_ascii_lowercase().as_str() {
                "user-agent" => {
                    if !in_agents {
                        groups.extend(current.take());
                        current = Some(Group::default());
                    }
                    in_agents = true;
                    current
                        .get_or_insert_with(Group::default)
                        .agents
                        .push(value.to_ascii_lowercase());
                }
                "disallow" => {
                    in_agents = false;
                    if let Some(g) = current.as_mut() {
                        if !value.is_empty() {
                            g.disallow.push(value.to_owned());
                        }
                    }
                }
                _ => in_agents = false,
            }
        }
        groups.extend(current);
        RobotsRules { groups }
    }

    /// The record naming this robot (case-insensitive substring match on the
    /// product token) wins over the `*` record.
    pub fn allows(&self, url: &Url, user_agent: &str) -> bool {
        let token = user_agent
            .split(|c: char| c == '/' || c.is_whitespace())
            .next()
            .unwrap_or("")
            .to_ascii_lowercase();
        let specific = self.groups.iter().find(|g| {
            g.agents
                .iter()
                .any(|a| a != "*" && !token.is_empty() && (token.contains(a.as_str()) || a.contains(token.as_str())))
        });
        let group = specific.or_else(|| self.groups.iter().find(|g| g.agents.iter().any(|a| a == "*")));
        let Some(group) = group else {
            return true;
        };
        let mut target = url.path().to_owned();
        if let Some(q) = url.query() {
            target.push('?');
            target.push_str(q);
        }
        !group.disallow.iter().any(|d| target.starts_with(d.as_str()))
    }
}

/// What fetching `/robots.txt` produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RobotsFetch {
    Found(String),
    Missing,
    Failed,
}

/// Per-origin rules cache with a time-to-live.
#[derive(Debug)]
pub struct RobotsCache {
    ttl: Duration,
    entries: HashMap<String, (Instant, RobotsRules)>,
    /// Robots fetches that failed and were treated as allow-all.
    pub failures: usize,
}

impl RobotsCache {
    pub fn new(ttl: Duration) -> Self {
        RobotsCache {
            ttl,
            entries: HashMap::new(),
            failures: 0,
        }
    }
}

pub fn robots_url(url: &Url) -> Option<Url> {
    let mut r = url.clone();
    r.set_path("/robots.txt");
    r.set_query(None);
    r.set_fragment(None);
    r.has_host().then_some(r)
}

pub fn robots_allowed<F>(cache: &mut RobotsCache, url: &Url, user_agent: &str, fetch: F) -> bool
where
    F: FnOnce(&Url) -> RobotsFetch,
{
    let origin = url.origin().ascii_serialization();
    let fresh = cache
        .entries
        .get(&origin)
        .is_some_and(|(at, _)| at.elapsed() < cache.ttl);
    if !fresh {
        let rules = match robots_url(url).map(|r| fetch(&r)) {
            Some(RobotsFetch::Found(text)) => RobotsRules::parse(&text),
            Some(RobotsFetch::Missing) => RobotsRules::default(),
            Some(RobotsFetch::Failed) | None => {
                cache.failures += 1;
                RobotsRules::default()
            }
        };
        cache.entries.insert(origin.clone(), (Instant::now(), rules));
    }
    cache.entries[&origin].1.allows(url, user_agent)
}
