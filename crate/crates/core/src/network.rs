//! Network graph, Werner links, monitor placement, paths and monitoring plans.
//!
//! Links are identified by dense indices (`e0`, `e1`, ...) so a parameter
//! vector indexed by [`LinkId`] lines up with the graph's link list. Nodes
//! are likewise dense (`v0`, `v1`, ...).

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schemes::Scheme;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("Werner parameter {0} is outside [0, 1]")]
    ParamOutOfRange(f64),
    #[error("expected {expected} link parameters, got {got}")]
    ParamCountMismatch { expected: usize, got: usize },
    #[error("a star needs at least 2 leaves, got {0}")]
    TooFewLeaves(usize),
    #[error("link {link} references node {node}, but the graph has {nodes} nodes")]
    UnknownNode { link: usize, node: usize, nodes: usize },
    #[error("link {0} is a self-loop")]
    SelfLoop(usize),
    #[error("monitor {0} is not a node of the graph")]
    UnknownMonitor(NodeId),
    #[error("unknown link {0}")]
    UnknownLink(LinkId),
    #[error("a path needs at least one link")]
    EmptyPath,
    #[error("link {0} appears more than once in the path")]
    RepeatedLink(LinkId),
    #[error("links {0} and {1} do not share exactly one node")]
    NotContiguous(LinkId, LinkId),
    #[error("path revisits node {0}")]
    RepeatedNode(NodeId),
    #[error("{scheme} task over {path} needs a monitor at {requirement}")]
    MissingMonitor {
        scheme: Scheme,
        path: String,
        requirement: &'static str,
    },
    #[error("plan does not cover link {0}")]
    UncoveredLink(LinkId),
    #[error("task {task} introduces {new_links} unestimated links; at most one is solvable")]
    Unsolvable { task: usize, new_links: usize },
    #[error("graph is not a four-node star with hub v0 and links e0, e1, e2")]
    NotExpectedStar,
}

pub type Result<T> = std::result::Result<T, NetworkError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkId(pub usize);

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// Checks that `w` is a valid Werner parameter.
pub fn check_werner(w: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&w) {
        Ok(w)
    } else {
        Err(NetworkError::ParamOutOfRange(w))
    }
}

/// A link distributing Werner states `rho(w)` between its two endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct WernerLink {
    pub id: LinkId,
    pub endpoints: (NodeId, NodeId),
    pub w: f64,
}

impl WernerLink {
    pub fn touches(&self, node: NodeId) -> bool {
        self.endpoints.0 == node || self.endpoints.1 == node
    }

    pub fn other(&self, node: NodeId) -> Option<NodeId> {
        if self.endpoints.0 == node {
            Some(self.endpoints.1)
        } else if self.endpoints.1 == node {
            Some(self.endpoints.0)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGraph {
    node_count: usize,
    links: Vec<WernerLink>,
    monitors: BTreeSet<NodeId>,
}

impl NetworkGraph {
    /// Builds a graph over nodes `v0..v{node_count-1}`. Link `i` of `links` becomes `e{i}`.
    pub fn new(
        node_count: usize,
        links: &[(usize, usize, f64)],
        monitors: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let mut built = Vec::with_capacity(links.len());
        for (i, &(a, b, w)) in links.iter().enumerate() {
            for node in [a, b] {
                if node >= node_count {
                    return Err(NetworkError::UnknownNode {
                        link: i,
                        node,
                        nodes: node_count,
                    });
                }
            }
            if a == b {
                return Err(NetworkError::SelfLoop(i));
            }
            built.push(WernerLink {
                id: LinkId(i),
                endpoints: (NodeId(a), NodeId(b)),
                w: check_werner(w)?,
            });
        }
        let graph = NetworkGraph {
            node_count,
            links: built,
            monitors: BTreeSet::new(),
        };
        graph.with_monitors(monitors.into_iter().map(NodeId))
    }

    /// Returns a copy of the graph with the monitor set replaced.
    pub fn with_monitors(&self, monitors: impl IntoIterator<Item = NodeId>) -> Result<Self> {
        let monitors: BTreeSet<NodeId> = monitors.into_iter().collect();
        if let Some(bad) = monitors.iter().find(|m| m.0 >= self.node_count) {
            return Err(NetworkError::UnknownMonitor(*bad));
        }
        Ok(NetworkGraph {
            monitors,
            ..self.clone()
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count).map(NodeId)
    }

    pub fn links(&self) -> &[WernerLink] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> Result<&WernerLink> {
        self.links.get(id.0).ok_or(NetworkError::UnknownLink(id))
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn monitors(&self) -> &BTreeSet<NodeId> {
        &self.monitors
    }

    pub fn is_monitor(&self, node: NodeId) -> bool {
        self.monitors.contains(&node)
    }

    /// Werner parameters indexed by link id.
    pub fn params(&self) -> Vec<f64> {
        self.links.iter().map(|l| l.w).collect()
    }

    /// Same topology with new link parameters.
    pub fn with_params(&self, params: &[f64]) -> Result<Self> {
        if params.len() != self.links.len() {
            return Err(NetworkError::ParamCountMismatch {
                expected: self.links.len(),
                got: params.len(),
            });
        }
        let mut out = self.clone();
        for (link, &w) in out.links.iter_mut().zip(params) {
            link.w = check_werner(w)?;
        }
        Ok(out)
    }
}

/// Star with hub `v0` and leaves `v1..=vn`; link `e_i` joins the hub to `v{i+1}`.
pub fn build_star(n_leaves: usize, link_params: &[f64]) -> Result<NetworkGraph> {
    if n_leaves < 2 {
        return Err(NetworkError::TooFewLeaves(n_leaves));
    }
    if link_params.len() != n_leaves {
        return Err(NetworkError::ParamCountMismatch {
            expected: n_leaves,
            got: link_params.len(),
        });
    }
    let links: Vec<_> = link_params
        .iter()
        .enumerate()
        .map(|(i, &w)| (0, i + 1, w))
        .collect();
    NetworkGraph::new(n_leaves + 1, &links, [])
}

/// A simple path given as an ordered list of links.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    links: Vec<LinkId>,
    nodes: Vec<NodeId>,
}

impl Path {
    pub fn new(graph: &NetworkGraph, links: &[LinkId]) -> Result<Self> {
        let first = *links.first().ok_or(NetworkError::EmptyPath)?;
        let mut seen_links = BTreeSet::new();
        for &id in links {
            graph.link(id)?;
            if !seen_links.insert(id) {
                return Err(NetworkError::RepeatedLink(id));
            }
        }

        let first_link = graph.link(first)?;
        let start = match links.get(1) {
            None => first_link.endpoints.0,
            Some(&next) => {
                let shared = shared_node(first_link, graph.link(next)?)
                    .ok_or(NetworkError::NotContiguous(first, next))?;
                first_link.other(shared).expect("shared node lies on link")
            }
        };

        let mut nodes = vec![start];
        let mut current = start;
        for pair in links.windows(2) {
            let (a, b) = (graph.link(pair[0])?, graph.link(pair[1])?);
            let shared = shared_node(a, b).ok_or(NetworkError::NotContiguous(pair[0], pair[1]))?;
            // the walk must leave `a` through the node it shares with `b`
            if a.other(current) != Some(shared) {
                return Err(NetworkError::NotContiguous(pair[0], pair[1]));
            }
            nodes.push(shared);
            current = shared;
        }
        let last = graph.link(*links.last().unwrap())?;
        let end = last
            .other(current)
            .ok_or(NetworkError::NotContiguous(last.id, last.id))?;
        nodes.push(end);

        let mut seen_nodes = BTreeSet::new();
        for &n in &nodes {
            if !seen_nodes.insert(n) {
                return Err(NetworkError::RepeatedNode(n));
            }
        }
        Ok(Path {
            links: links.to_vec(),
            nodes,
        })
    }

    pub fn links(&self) -> &[LinkId] {
        &self.links
    }

    /// Node sequence `v_0, ..., v_n` along the path.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn endpoints(&self) -> (NodeId, NodeId) {
        (self.nodes[0], *self.nodes.last().unwrap())
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn contains(&self, link: LinkId) -> bool {
        self.links.contains(&link)
    }

    /// End-to-end Werner parameter: the product of the link parameters.
    pub fn product(&self, params: &[f64]) -> f64 {
        self.links.iter().map(|l| params[l.0]).product()
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.links.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

fn shared_node(a: &WernerLink, b: &WernerLink) -> Option<NodeId> {
    let shared: Vec<NodeId> = [a.endpoints.0, a.endpoints.1]
        .into_iter()
        .filter(|n| b.touches(*n))
        .collect();
    match shared.as_slice() {
        [n] => Some(*n),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MonitoringMode {
    Direct,
    Indirect,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementTask {
    pub scheme: Scheme,
    pub path: Path,
}

impl MeasurementTask {
    pub fn new(scheme: Scheme, path: Path) -> Self {
        MeasurementTask { scheme, path }
    }

    pub fn mode(&self) -> MonitoringMode {
        if self.path.len() == 1 {
            MonitoringMode::Direct
        } else {
            MonitoringMode::Indirect
        }
    }

    /// LZM correlates outcomes at both endpoints; JBM and PEM finish at a single monitor.
    pub fn check_monitors(&self, graph: &NetworkGraph) -> Result<()> {
        let (a, b) = self.path.endpoints();
        let ok = match self.scheme {
            Scheme::Lzm => graph.is_monitor(a) && graph.is_monitor(b),
            Scheme::Jbm | Scheme::Pem => graph.is_monitor(a) || graph.is_monitor(b),
        };
        if ok {
            Ok(())
        } else {
            Err(NetworkError::MissingMonitor {
                scheme: self.scheme,
                path: self.path.to_string(),
                requirement: match self.scheme {
                    Scheme::Lzm => "both endpoints",
                    _ => "one endpoint",
                },
            })
        }
    }
}

impl fmt::Display for MeasurementTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.mode() {
            MonitoringMode::Direct => "direct",
            MonitoringMode::Indirect => "indirect",
        };
        write!(f, "{} {} {}", self.scheme, mode, self.path)
    }
}

/// Ordered measurement tasks covering every link of a graph.
///
/// Task order is significant: estimators solve tasks sequentially, so each
/// task may introduce at most one link not already estimated by its
/// predecessors.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitoringPlan {
    name: String,
    tasks: Vec<MeasurementTask>,
    monitors: BTreeSet<NodeId>,
    link_count: usize,
}

impl MonitoringPlan {
    pub fn new(
        name: impl Into<String>,
        graph: &NetworkGraph,
        tasks: Vec<MeasurementTask>,
    ) -> Result<Self> {
        for task in &tasks {
            for &l in task.path.links() {
                graph.link(l)?;
            }
            task.check_monitors(graph)?;
        }
        let mut estimated = BTreeSet::new();
        for (i, task) in tasks.iter().enumerate() {
            let new_links = task
                .path
                .links()
                .iter()
                .filter(|l| !estimated.contains(*l))
                .count();
            if new_links > 1 {
                return Err(NetworkError::Unsolvable { task: i, new_links });
            }
            estimated.extend(task.path.links().iter().copied());
        }
        if let Some(missing) = graph.links().iter().find(|l| !estimated.contains(&l.id)) {
            return Err(NetworkError::UncoveredLink(missing.id));
        }
        Ok(MonitoringPlan {
            name: name.into(),
            tasks,
            monitors: graph.monitors().clone(),
            link_count: graph.link_count(),
        })
    }

    /// A plan with no tasks over a graph without links.
    pub fn empty(name: impl Into<String>, link_count: usize) -> Self {
        MonitoringPlan {
            name: name.into(),
            tasks: Vec::new(),
            monitors: BTreeSet::new(),
            link_count,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn tasks(&self) -> &[MeasurementTask] {
        &self.tasks
    }

    pub fn monitors(&self) -> &BTreeSet<NodeId> {
        &self.monitors
    }

    /// Size of the parameter vector the plan estimates.
    pub fn link_count(&self) -> usize {
        self.link_count
    }
}

/// The four star strategies: JBM-only and hybrid JBM+LZM, each with two or three monitors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlanKind {
    #[serde(rename = "JBM2")]
    Jbm2,
    #[serde(rename = "JBM3")]
    Jbm3,
    #[serde(rename = "HYB2")]
    Hyb2,
    #[serde(rename = "HYB3")]
    Hyb3,
}

impl PlanKind {
    pub const ALL: [PlanKind; 4] = [PlanKind::Jbm2, PlanKind::Jbm3, PlanKind::Hyb2, PlanKind::Hyb3];

    pub fn name(self) -> &'static str {
        match self {
            PlanKind::Jbm2 => "JBM2",
            PlanKind::Jbm3 => "JBM3",
            PlanKind::Hyb2 => "HYB2",
            PlanKind::Hyb3 => "HYB3",
        }
    }

    /// Leaf monitors used by the strategy.
    pub fn monitors(self) -> &'static [usize] {
        match self {
            PlanKind::Jbm2 | PlanKind::Hyb2 => &[1, 2],
            PlanKind::Jbm3 | PlanKind::Hyb3 => &[1, 2, 3],
        }
    }

    fn tasks(self) -> &'static [(Scheme, &'static [usize])] {
        use Scheme::*;
        match self {
            PlanKind::Jbm2 => &[(Jbm, &[0]), (Jbm, &[1]), (Jbm, &[0, 2])],
            PlanKind::Jbm3 => &[(Jbm, &[0]), (Jbm, &[1]), (Jbm, &[2])],
            PlanKind::Hyb2 => &[(Jbm, &[0]), (Jbm, &[0, 2]), (Lzm, &[0, 1])],
            PlanKind::Hyb3 => &[(Jbm, &[0]), (Lzm, &[0, 1]), (Lzm, &[0, 2])],
        }
    }
}

impl fmt::Display for PlanKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PlanKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        PlanKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown plan `{s}` (expected JBM2, JBM3, HYB2 or HYB3)"))
    }
}

fn is_four_node_star(graph: &NetworkGraph) -> bool {
    graph.node_count() == 4
        && graph.link_count() == 3
        && graph.links().iter().enumerate().all(|(i, l)| {
            let (a, b) = l.endpoints;
            (a, b) == (NodeId(0), NodeId(i + 1)) || (b, a) == (NodeId(0), NodeId(i + 1))
        })
}

/// Builds one of the star strategies on the graph from [`build_star`] with three leaves.
pub fn builtin_plan(kind: PlanKind, graph: &NetworkGraph) -> Result<MonitoringPlan> {
    if !is_four_node_star(graph) {
        return Err(NetworkError::NotExpectedStar);
    }
    let graph = graph.with_monitors(kind.monitors().iter().copied().map(NodeId))?;
    let tasks = kind
        .tasks()
        .iter()
        .map(|(scheme, links)| {
            let ids: Vec<LinkId> = links.iter().copied().map(LinkId).collect();
            Ok(MeasurementTask::new(*scheme, Path::new(&graph, &ids)?))
        })
        .collect::<Result<Vec<_>>>()?;
    MonitoringPlan::new(kind.name(), &graph, tasks)
}

/// A one-link graph `v0 - v1` monitored directly by `scheme`.
pub fn single_link_plan(scheme: Scheme, w: f64) -> Result<(NetworkGraph, MonitoringPlan)> {
    let monitors: &[usize] = match scheme {
        Scheme::Lzm => &[0, 1],
        Scheme::Jbm | Scheme::Pem => &[0],
    };
    let graph = NetworkGraph::new(2, &[(0, 1, w)], monitors.iter().copied())?;
    let task = MeasurementTask::new(scheme, Path::new(&graph, &[LinkId(0)])?);
    let plan = MonitoringPlan::new(format!("{scheme}1"), &graph, vec![task])?;
    Ok((graph, plan))
}

/// Channel uses consumed by one round of a plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UsageLedger {
    pub per_link: Vec<u64>,
    pub total: u64,
    /// Noiseless Bell pairs consumed by PEM tasks; not network channel uses.
    pub preshared_pairs: u64,
}

impl UsageLedger {
    pub fn uses(&self, link: LinkId) -> u64 {
        self.per_link[link.0]
    }
}

/// Per-task cost: LZM and PEM use each path link once, JBM (cyclic generation) twice.
pub fn channel_uses(plan: &MonitoringPlan) -> UsageLedger {
    let mut per_link = vec![0u64; plan.link_count()];
    let mut preshared_pairs = 0;
    for task in plan.tasks() {
        let per_use = match task.scheme {
            Scheme::Lzm => 1,
            Scheme::Jbm => 2,
            Scheme::Pem => {
                preshared_pairs += 1;
                1
            }
        };
        for l in task.path.links() {
            per_link[l.0] += per_use;
        }
    }
    UsageLedger {
        total: per_link.iter().sum(),
        per_link,
        preshared_pairs,
    }
}
