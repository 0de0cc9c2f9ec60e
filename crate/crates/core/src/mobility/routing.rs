//! Shortest paths over the directed roadway graph.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// One directed roadway between two junctions.
#[derive(Clone, Debug, PartialEq)]
pub struct Link<K> {
    pub from: usize,
    pub to: usize,
    /// Free-flow travel time in seconds.
    pub cost: f64,
    pub key: K,
    pub id: String,
}

#[derive(Clone, Debug)]
pub struct StreetGraph<K> {
    nodes: usize,
    out: Vec<Vec<usize>>,
    links: Vec<Link<K>>,
}

impl<K: Clone> StreetGraph<K> {
    pub fn new(nodes: usize, links: Vec<Link<K>>) -> Self {
        let mut out = vec![Vec::new(); nodes];
        for (i, l) in links.iter().enumerate() {
            out[l.from].push(i);
        }
        for v in &mut out {
            v.sort_by(|a, b| links[*a].id.cmp(&links[*b].id));
        }
        StreetGraph { nodes, out, links }
    }

    pub fn links(&self) -> &[Link<K>] {
        &self.links
    }

    /// Cheapest route from `from` to `to` as link keys. Equal-cost routes
    /// are ordered by their sequence of link ids. `None` when unreachable;
    /// an empty route when `from == to`.
    pub fn shortest_path(&self, from: usize, to: usize) -> Option<Vec<K>> {
        if from == to {
            return Some(Vec::new());
        }
        let mut best: Vec<Option<Label>> = vec![None; self.nodes];
        let mut heap = BinaryHeap::new();
        best[from] = Some(Label {
            cost: 0.0,
            path: Vec::new(),
        });
        heap.push(Entry {
            label: Label {
                cost: 0.0,
                path: Vec::new(),
            },
            node: from,
        });
        while let Some(Entry { label, node }) = heap.pop() {
            // Stale entry: a better label for this node was found since.
            if best[node].as_ref().is_some_and(|b| b.path != label.path) {
                continue;
            }
            for &li in &self.out[node] {
                let link = &self.links[li];
                let mut path = label.path.clone();
                path.push(li);
                let cand = Label {
                    cost: label.cost + link.cost,
                    path,
                };
                let improves = match &best[link.to] {
                    None => true,
                    Some(b) => cand.cmp_with(b, &self.links) == Ordering::Less,
                };
                if improves {
                    best[link.to] = Some(cand.clone());
                    heap.push(Entry {
                        label: cand,
                        node: link.to,
                    });
                }
            }
        }
        best[to]
            .take()
            .map(|l| l.path.iter().map(|&i| self.links[i].key.clone()).collect())
    }
}

const EPS: f64 = 1e-9;

#[derive(Clone, Debug)]
struct Label {
    cost: f64,
    path: Vec<usize>,
}

impl Label {
    fn cmp_with<K>(&self, other: &Label, links: &[Link<K>]) -> Ordering {
        if (self.cost - other.cost).abs() > EPS * self.cost.abs().max(1.0) {
            return self.cost.total_cmp(&other.cost);
        }
        let a = self.path.iter().map(|&i| links[i].id.as_str());
        let b = other.path.iter().map(|&i| links[i].id.as_str());
        a.cmp(b)
    }
}

struct Entry {
    label: Label,
    node: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on cost, then on the link index path.
        other
            .label
            .cost
            .total_cmp(&self.label.cost)
            .then_with(|| other.label.path.cmp(&self.label.path))
            .then_with(|| other.node.cmp(&self.node))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link(from: usize, to: usize, cost: f64, id: &str) -> Link<String> {
        Link {
            from,
            to,
            cost,
            key: id.to_string(),
            id: id.to_string(),
        }
    }

    #[test]
    fn same_origin_and_destination_is_an_empty_route() {
        let g = StreetGraph::new(2, vec![link(0, 1, 1.0, "a")]);
        assert_eq!(g.shortest_path(0, 0), Some(vec![]));
    }

    #[test]
    fn line_graph_has_a_unique_route() {
        let g = StreetGraph::new(3, vec![link(0, 1, 1.0, "a"), link(1, 2, 1.0, "b")]);
        assert_eq!(g.shortest_path(0, 2), Some(vec!["a".into(), "b".into()]));
        assert_eq!(g.shortest_path(2, 0), None);
    }

    #[test]
    fn ties_go_to_the_smaller_id_sequence() {
        let g = StreetGraph::new(
            4,
            vec![
                link(0, 1, 1.0, "z1"),
                link(1, 3, 1.0, "z2"),
                link(0, 2, 1.0, "a1"),
                link(2, 3, 1.0, "a2"),
            ],
        );
        assert_eq!(g.shortest_path(0, 3), Some(vec!["a1".into(), "a2".into()]));
    }
}
