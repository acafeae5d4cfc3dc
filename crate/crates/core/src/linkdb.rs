//! Geo-tagged node registry and link-statistics store.
//!
//! The store is loaded from and persisted to one JSON schema:
//!
//! ```json
//! { "nodes": [{"id": "A", "lat": 41.5, "lon": 2.1, "role": "source", "nc_capable": true}],
//!   "links": [{"src": "A", "dst": "B", "delta": 0.1, "samples": 0,
//!              "updated_at": "2024-01-01T00:00:00Z"}] }
//! ```
//!
//! Links are undirected for routing. Erasure estimates are maintained as an
//! exponentially weighted average of observed loss ratios.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::path::Path;
use std::sync::{Arc, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::analytics::PathProfile;
use crate::error::{invalid, Error, Result};

pub const DEFAULT_SMOOTHING: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Source,
    Relay,
    Sink,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoNode {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    pub role: NodeRole,
    pub nc_capable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoLink {
    pub src: String,
    pub dst: String,
    pub delta: f64,
    pub samples: u64,
    pub updated_at: DateTime<Utc>,
}

impl GeoLink {
    pub fn label(&self) -> String {
        format!("{}-{}", self.src, self.dst)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkObservation {
    pub src: String,
    pub dst: String,
    pub sent: u64,
    pub lost: u64,
    pub timestamp: DateTime<Utc>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
struct TopologyDoc {
    nodes: Vec<GeoNode>,
    links: Vec<GeoLink>,
}

/// Routing stand-in: produces the node chain between two nodes.
pub trait PathProvider {
    fn route(&self, db: &LinkDb, src: &str, dst: &str) -> Result<Vec<String>>;
}

/// Minimum-hop routing; among equal-length chains the lexicographically
/// smallest sequence of node ids wins.
#[derive(Clone, Copy, Debug, Default)]
pub struct MinHopRouter;

impl PathProvider for MinHopRouter {
    fn route(&self, db: &LinkDb, src: &str, dst: &str) -> Result<Vec<String>> {
        for id in [src, dst] {
            if !db.node_index.contains_key(id) {
                return Err(invalid(format!("unknown node {id}")));
            }
        }
        if src == dst {
            return Err(invalid("source and sink are the same node"));
        }
        let adj = db.adjacency();
        let mut dist: HashMap<&str, usize> = HashMap::from([(dst, 0)]);
        let mut queue = VecDeque::from([dst]);
        while let Some(u) = queue.pop_front() {
            for &v in adj.get(u).into_iter().flatten() {
                if !dist.contains_key(v) {
                    dist.insert(v, dist[u] + 1);
                    queue.push_back(v);
                }
            }
        }
        let Some(&d0) = dist.get(src) else {
            return Err(Error::NoPath { src: src.into(), dst: dst.into() });
        };
        let mut chain = vec![src.to_string()];
        let mut cur = src;
        for d in (0..d0).rev() {
            // adjacency sets are ordered, so the first match is the smallest id
            cur = adj[cur].iter().copied().find(|v| dist.get(v) == Some(&d)).expect("bfs layer");
            chain.push(cur.to_string());
        }
        Ok(chain)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Route {
    pub nodes: Vec<String>,
    pub profile: PathProfile,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkDb {
    nodes: Vec<GeoNode>,
    links: Vec<GeoLink>,
    node_index: HashMap<String, usize>,
    link_index: HashMap<(String, String), usize>,
    smoothing: f64,
}

/// Single writer, many readers.
pub type SharedLinkDb = Arc<RwLock<LinkDb>>;

fn key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

/// 1-based line of the `index`-th object in the top-level array `section`.
fn entry_line(text: &str, section: &str, index: usize) -> Option<usize> {
    let start = text.find(&format!("\"{section}\""))?;
    let bytes = text.as_bytes();
    let mut i = start + section.len() + 2;
    while i < bytes.len() && bytes[i] != b'[' {
        i += 1;
    }
    let (mut depth, mut seen, mut in_str, mut esc) = (0usize, 0usize, false, false);
    while i < bytes.len() {
        let c = bytes[i];
        if in_str {
            match (esc, c) {
                (true, _) => esc = false,
                (false, b'\\') => esc = true,
                (false, b'"') => in_str = false,
                _ => {}
            }
        } else {
            match c {
                b'"' => in_str = true,
                b'[' | b'{' => {
                    depth += 1;
                    if c == b'{' && depth == 2 {
                        if seen == index {
                            return Some(text[..i].matches('\n').count() + 1);
                        }
                        seen += 1;
                    }
                }
                b']' | b'}' => {
                    depth = depth.saturating_sub(1);
                    if depth == 0 {
                        return None;
                    }
                }
                _ => {}
            }
        }
        i += 1;
    }
    None
}

impl Default for LinkDb {
    fn default() -> Self {
        Self::empty()
    }
}

impl LinkDb {
    pub fn empty() -> Self {
        Self {
            nodes: Vec::new(),
            links: Vec::new(),
            node_index: HashMap::new(),
            link_index: HashMap::new(),
            smoothing: DEFAULT_SMOOTHING,
        }
    }

    /// Parses and validates a topology document.
    pub fn ingest(text: &str) -> Result<Self> {
        let doc: TopologyDoc = serde_json::from_str(text).map_err(|e| Error::Topology(e.to_string()))?;
        let at = |section: &str, i: usize| {
            entry_line(text, section, i).map(|l| format!("line {l}: ")).unwrap_or_default()
        };
        let mut db = Self::empty();
        for (i, node) in doc.nodes.into_iter().enumerate() {
            db.add_node(node).map_err(|e| Error::Topology(format!("{}nodes[{i}]: {e}", at("nodes", i))))?;
        }
        for (i, link) in doc.links.into_iter().enumerate() {
            db.add_link(link).map_err(|e| Error::Topology(format!("{}links[{i}]: {e}", at("links", i))))?;
        }
        Ok(db)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::ingest(&std::fs::read_to_string(path)?)
    }

    /// The topology document for the current contents.
    pub fn persist(&self) -> String {
        let doc = TopologyDoc { nodes: self.nodes.clone(), links: self.links.clone() };
        let mut s = serde_json::to_string_pretty(&doc).expect("topology serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.persist())?;
        Ok(())
    }

    pub fn with_smoothing(mut self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(invalid(format!("smoothing {alpha} outside (0,1]")));
        }
        self.smoothing = alpha;
        Ok(self)
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn nodes(&self) -> &[GeoNode] {
        &self.nodes
    }

    pub fn links(&self) -> &[GeoLink] {
        &self.links
    }

    pub fn node(&self, id: &str) -> Option<&GeoNode> {
        self.node_index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn link(&self, a: &str, b: &str) -> Option<&GeoLink> {
        self.link_index.get(&key(a, b)).map(|&i| &self.links[i])
    }

    pub fn add_node(&mut self, node: GeoNode) -> Result<()> {
        if node.id.is_empty() {
            return Err(invalid("empty node id"));
        }
        if self.node_index.contains_key(&node.id) {
            return Err(invalid(format!("duplicate node id {}", node.id)));
        }
        if !(-90.0..=90.0).contains(&node.lat) || !(-180.0..=180.0).contains(&node.lon) {
            return Err(invalid(format!(
                "node {} has coordinates ({}, {}) out of range",
                node.id, node.lat, node.lon
            )));
        }
        self.node_index.insert(node.id.clone(), self.nodes.len());
        self.nodes.push(node);
        Ok(())
    }

    pub fn add_link(&mut self, link: GeoLink) -> Result<()> {
        for end in [&link.src, &link.dst] {
            if !self.node_index.contains_key(end) {
                return Err(invalid(format!("link {} references unknown node {end}", link.label())));
            }
        }
        if link.src == link.dst {
            return Err(invalid(format!("link {} is a self-loop", link.label())));
        }
        if !(0.0..=1.0).contains(&link.delta) {
            return Err(invalid(format!("link {} has erasure rate {} outside [0,1]", link.label(), link.delta)));
        }
        let k = key(&link.src, &link.dst);
        if self.link_index.contains_key(&k) {
            return Err(invalid(format!("duplicate link {}", link.label())));
        }
        self.link_index.insert(k, self.links.len());
        self.links.push(link);
        Ok(())
    }

    /// Folds one loss report into the link's erasure estimate.
    pub fn update_stats(&mut self, obs: &LinkObservation) -> Result<f64> {
        if obs.sent == 0 || obs.lost > obs.sent {
            return Err(invalid(format!(
                "observation on {}-{} has lost={} sent={}",
                obs.src, obs.dst, obs.lost, obs.sent
            )));
        }
        let Some(&i) = self.link_index.get(&key(&obs.src, &obs.dst)) else {
            return Err(invalid(format!("no link {}-{}", obs.src, obs.dst)));
        };
        let ratio = obs.lost as f64 / obs.sent as f64;
        let alpha = self.smoothing;
        let link = &mut self.links[i];
        link.delta = ((1.0 - alpha) * link.delta + alpha * ratio).clamp(0.0, 1.0);
        link.samples += obs.sent;
        link.updated_at = obs.timestamp;
        Ok(link.delta)
    }

    fn adjacency(&self) -> BTreeMap<&str, BTreeSet<&str>> {
        let mut adj: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for l in &self.links {
            adj.entry(&l.src).or_default().insert(&l.dst);
            adj.entry(&l.dst).or_default().insert(&l.src);
        }
        adj
    }

    /// Profile of an explicit node chain.
    pub fn profile_of(&self, chain: &[String]) -> Result<PathProfile> {
        let mut deltas = Vec::new();
        let mut labels = Vec::new();
        for w in chain.windows(2) {
            let l = self
                .link(&w[0], &w[1])
                .ok_or_else(|| invalid(format!("no link {}-{}", w[0], w[1])))?;
            deltas.push(l.delta);
            labels.push(format!("{}-{}", w[0], w[1]));
        }
        PathProfile::with_labels(deltas, labels)
    }

    pub fn extract_path_with(&self, router: &dyn PathProvider, src: &str, dst: &str) -> Result<Route> {
        let nodes = router.route(self, src, dst)?;
        let profile = self.profile_of(&nodes)?;
        Ok(Route { nodes, profile })
    }

    pub fn extract_path(&self, src: &str, dst: &str) -> Result<Route> {
        self.extract_path_with(&MinHopRouter, src, dst)
    }
}
