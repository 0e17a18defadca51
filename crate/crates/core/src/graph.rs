//! Typed graph over items, micro outputs and persons.
//!
//! Edges: `created` (person to output), `claims` (person to item), `targets`
//! (anchored output to item) and `relates` (relationship endpoints, carrying
//! the relation code and the relationship output that asserts it). An output
//! anchored to a handle that is not registered yet keeps its `targets` edge
//! parked until the item arrives.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ids::{OutputId, PersonId};
use crate::micro::{MicroOutput, OutputBody, OutputRef, RefKind};
use crate::redif::Handle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Item,
    Micro,
    Person,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn item(h: &Handle) -> Self {
        NodeId(format!("item:{h}"))
    }

    pub fn micro(id: &OutputId) -> Self {
        NodeId(format!("micro:{id}"))
    }

    pub fn person(id: &PersonId) -> Self {
        NodeId(format!("person:{id}"))
    }

    pub fn of_ref(r: &OutputRef) -> Self {
        match r.kind {
            RefKind::Item => NodeId(format!("item:{}", r.id)),
            RefKind::Micro => NodeId(format!("micro:{}", r.id)),
        }
    }

    pub fn kind(&self) -> NodeKind {
        match self.0.split_once(':').map(|(k, _)| k) {
            Some("item") => NodeKind::Item,
            Some("micro") => NodeKind::Micro,
            _ => NodeKind::Person,
        }
    }

    /// The id without its kind prefix.
    pub fn local(&self) -> &str {
        self.0.split_once(':').map(|(_, id)| id).unwrap_or(&self.0)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", content = "relation", rename_all = "lowercase")]
pub enum EdgeLabel {
    Created,
    Targets,
    Relates(String),
    Claims,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub label: EdgeLabel,
    /// For `relates` edges, the relationship output asserting the link.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub via: Option<OutputId>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UsageGraph {
    nodes: BTreeMap<NodeId, NodeKind>,
    edges: Vec<GraphEdge>,
    incoming: BTreeMap<NodeId, Vec<usize>>,
    outgoing: BTreeMap<NodeId, Vec<usize>>,
    by_via: BTreeMap<OutputId, Vec<usize>>,
    parked: BTreeMap<Handle, Vec<GraphEdge>>,
}

impl UsageGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&NodeId, NodeKind)> {
        self.nodes.iter().map(|(id, k)| (id, *k))
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn incoming(&self, id: &NodeId) -> impl Iterator<Item = &GraphEdge> {
        self.incoming
            .get(id)
            .into_iter()
            .flatten()
            .map(|&i| &self.edges[i])
    }

    pub fn outgoing(&self, id: &NodeId) -> impl Iterator<Item = &GraphEdge> {
        self.outgoing
            .get(id)
            .into_iter()
            .flatten()
            .map(|&i| &self.edges[i])
    }

    fn add_node(&mut self, id: NodeId) {
        let kind = id.kind();
        self.nodes.entry(id).or_insert(kind);
    }

    fn push_edge(&mut self, edge: GraphEdge) {
        let i = self.edges.len();
        self.outgoing.entry(edge.from.clone()).or_default().push(i);
        self.incoming.entry(edge.to.clone()).or_default().push(i);
        if let Some(via) = &edge.via {
            self.by_via.entry(via.clone()).or_default().push(i);
        }
        self.edges.push(edge);
    }

    pub(crate) fn add_person(&mut self, id: &PersonId) {
        self.add_node(NodeId::person(id));
    }

    pub(crate) fn add_item(&mut self, h: &Handle) {
        let node = NodeId::item(h);
        if self.nodes.contains_key(&node) {
            return;
        }
        self.add_node(node);
        for edge in self.parked.remove(h).unwrap_or_default() {
            self.push_edge(edge);
        }
    }

    pub(crate) fn add_claim(&mut self, person: &PersonId, h: &Handle) {
        self.push_edge(GraphEdge {
            from: NodeId::person(person),
            to: NodeId::item(h),
            label: EdgeLabel::Claims,
            via: None,
        });
    }

    pub(crate) fn add_output(&mut self, output: &MicroOutput) {
        let node = NodeId::micro(output.id());
        self.add_node(node.clone());
        self.push_edge(GraphEdge {
            from: NodeId::person(&output.core.creator),
            to: node.clone(),
            label: EdgeLabel::Created,
            via: None,
        });
        match &output.body {
            OutputBody::Relationship(r) => self.push_edge(GraphEdge {
                from: NodeId::of_ref(&r.from_ref),
                to: NodeId::of_ref(&r.to_ref),
                label: EdgeLabel::Relates(r.relation.clone()),
                via: Some(output.id().clone()),
            }),
            body => {
                let target = &body.anchor().expect("anchored kind").target;
                let edge = GraphEdge {
                    from: node,
                    to: NodeId::item(target),
                    label: EdgeLabel::Targets,
                    via: None,
                };
                if self.nodes.contains_key(&edge.to) {
                    self.push_edge(edge);
                } else {
                    self.parked.entry(target.clone()).or_default().push(edge);
                }
            }
        }
    }

    /// Output ids whose act uses `node`: anchored outputs targeting it and
    /// relationships touching it.
    pub fn acts_using(&self, node: &NodeId) -> BTreeSet<OutputId> {
        let mut acts = BTreeSet::new();
        for e in self.incoming(node) {
            match &e.label {
                EdgeLabel::Targets => {
                    acts.insert(OutputId::new(e.from.local()));
                }
                EdgeLabel::Relates(_) => {
                    acts.extend(e.via.clone());
                }
                _ => {}
            }
        }
        for e in self.outgoing(node) {
            if let EdgeLabel::Relates(_) = e.label {
                acts.extend(e.via.clone());
            }
        }
        acts
    }

    /// Nodes the act `output` uses.
    pub fn used_by(&self, output: &OutputId) -> BTreeSet<NodeId> {
        let node = NodeId::micro(output);
        let mut used: BTreeSet<NodeId> = self
            .outgoing(&node)
            .filter(|e| e.label == EdgeLabel::Targets)
            .map(|e| e.to.clone())
            .collect();
        for e in self.relates_via(output) {
            used.insert(e.from.clone());
            used.insert(e.to.clone());
        }
        used
    }

    fn relates_via<'a>(&'a self, output: &'a OutputId) -> impl Iterator<Item = &'a GraphEdge> + 'a {
        self.by_via
            .get(output)
            .into_iter()
            .flatten()
            .map(|&i| &self.edges[i])
    }

    /// Persons owning `node`: claimants of an item, creator of an output.
    pub fn owners(&self, node: &NodeId) -> BTreeSet<PersonId> {
        self.incoming(node)
            .filter(|e| matches!(e.label, EdgeLabel::Claims | EdgeLabel::Created))
            .map(|e| PersonId::new(e.from.local()))
            .collect()
    }

    /// Nodes `person` owns.
    pub fn owned_by(&self, person: &PersonId) -> Vec<NodeId> {
        self.outgoing(&NodeId::person(person))
            .filter(|e| matches!(e.label, EdgeLabel::Claims | EdgeLabel::Created))
            .map(|e| e.to.clone())
            .collect()
    }

    pub fn created_by(&self, person: &PersonId) -> Vec<OutputId> {
        self.outgoing(&NodeId::person(person))
            .filter(|e| e.label == EdgeLabel::Created)
            .map(|e| OutputId::new(e.to.local()))
            .collect()
    }

    /// Removes a node without touching its edges. Only for corrupting a
    /// graph on purpose in tests.
    #[doc(hidden)]
    pub fn force_remove_node(&mut self, id: &NodeId) -> bool {
        self.nodes.remove(id).is_some()
    }
}


#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborCount {
    pub person_id: PersonId,
    pub usage_count: u64,
}

/// Who `person_id` builds on (upstream) and who builds on them (downstream).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborReport {
    pub person_id: PersonId,
    pub upstream: Vec<NeighborCount>,
    pub downstream: Vec<NeighborCount>,
}

fn ranked(counts: BTreeMap<PersonId, u64>, max: usize) -> Vec<NeighborCount> {
    let mut v: Vec<NeighborCount> = counts
        .into_iter()
        .map(|(person_id, usage_count)| NeighborCount { person_id, usage_count })
        .collect();
    // BTreeMap order already sorts ties by person id; the sort is stable.
    v.sort_by_key(|c| std::cmp::Reverse(c.usage_count));
    v.truncate(max);
    v
}

/// Counts public usage acts between `person` and everyone else. An act is
/// the latest version of a public micro output; it uses an item if it is
/// anchored to it or relates it, and a micro output if it relates it. Each
/// act counts once per owner it reaches, however many of that owner's nodes
/// it touches.
pub fn neighbors_of(
    graph: &UsageGraph,
    outputs: &crate::micro::OutputStore,
    person: &PersonId,
    max_results: usize,
) -> NeighborReport {
    let counts = |id: &OutputId| outputs.get(id).filter(|o| o.is_public() && outputs.is_head(id));

    let mut acts = BTreeSet::new();
    for node in graph.owned_by(person) {
        acts.extend(graph.acts_using(&node));
    }
    let mut downstream: BTreeMap<PersonId, u64> = BTreeMap::new();
    for act in &acts {
        if let Some(o) = counts(act) {
            if &o.core.creator != person {
                *downstream.entry(o.core.creator.clone()).or_default() += 1;
            }
        }
    }

    let mut upstream: BTreeMap<PersonId, u64> = BTreeMap::new();
    for act in graph.created_by(person) {
        if counts(&act).is_none() {
            continue;
        }
        let owners: BTreeSet<PersonId> = graph
            .used_by(&act)
            .iter()
            .flat_map(|n| graph.owners(n))
            .filter(|p| p != person)
            .collect();
        for o in owners {
            *upstream.entry(o).or_default() += 1;
        }
    }

    NeighborReport {
        person_id: person.clone(),
        upstream: ranked(upstream, max_results),
        downstream: ranked(downstream, max_results),
    }
}
