//! Undirected vertex-labelled graphs and labelled graph collections.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};

/// A simple undirected graph with one nonnegative integer label per vertex.
///
/// Edges are stored canonically as `(u, v)` with `u < v`, sorted, which makes
/// structural equality a plain `==`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    num_vertices: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    vertex_labels: Vec<u32>,
}

impl Graph {
    /// Builds a graph, rejecting self-loops, duplicate edges (in either
    /// orientation), out-of-range endpoints and a label vector of the wrong
    /// length.
    pub fn new(
        num_vertices: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        vertex_labels: Vec<u32>,
    ) -> Result<Self> {
        if vertex_labels.len() != num_vertices {
            return Err(Error::Argument(format!(
                "{} vertex labels for {} vertices",
                vertex_labels.len(),
                num_vertices
            )));
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= num_vertices || v >= num_vertices {
                return Err(Error::Argument(format!(
                    "edge ({u}, {v}) out of range for {num_vertices} vertices"
                )));
            }
            if u == v {
                return Err(Error::Argument(format!("self-loop on vertex {u}")));
            }
            if !set.insert((u.min(v), u.max(v))) {
                return Err(Error::Argument(format!("duplicate edge ({u}, {v})")));
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut adjacency = vec![Vec::new(); num_vertices];
        for &(u, v) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Graph {
            num_vertices,
            edges,
            adjacency,
            vertex_labels,
        })
    }

    /// Builds a graph whose vertex labels are the vertex degrees.
    pub fn with_degree_labels(
        num_vertices: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let g = Graph::new(num_vertices, edges, vec![0; num_vertices])?;
        let labels = degree_labels(&g);
        Ok(g.with_labels(labels).expect("degree vector has one entry per vertex"))
    }

    /// Same topology, new labels.
    pub fn with_labels(mut self, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != self.num_vertices {
            return Err(Error::Argument(format!(
                "{} vertex labels for {} vertices",
                labels.len(),
                self.num_vertices
            )));
        }
        self.vertex_labels = labels;
        Ok(self)
    }

    /// Returns an isomorphic copy where old vertex `u` becomes `perm[u]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.num_vertices;
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::Argument("not a permutation of the vertex set".into()));
        }
        let mut labels = vec![0; n];
        for (u, &p) in perm.iter().enumerate() {
            labels[p] = self.vertex_labels[u];
        }
        Graph::new(n, self.edges.iter().map(|&(u, v)| (perm[u], perm[v])), labels)
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted neighbour list of `u`.
    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].len()
    }

    pub fn vertex_labels(&self) -> &[u32] {
        &self.vertex_labels
    }
}

/// Initial labelling for unlabelled graphs: each vertex is labelled by its degree.
pub fn degree_labels(g: &Graph) -> Vec<u32> {
    (0..g.num_vertices()).map(|u| g.degree(u) as u32).collect()
}

/// An ordered collection of graphs with dense class labels `0..num_classes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphDataset {
    name: String,
    graphs: Vec<Graph>,
    class_labels: Vec<usize>,
    num_classes: usize,
}

impl GraphDataset {
    /// Validates that there is one class label per graph and that every class
    /// in `0..num_classes` occurs.
    pub fn new(
        name: impl Into<String>,
        graphs: Vec<Graph>,
        class_labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self> {
        if graphs.len() != class_labels.len() {
            return Err(Error::Argument(format!(
                "{} graphs but {} class labels",
                graphs.len(),
                class_labels.len()
            )));
        }
        let mut present = vec![false; num_classes];
        for &c in &class_labels {
            if c >= num_classes {
                return Err(Error::Argument(format!(
                    "class label {c} outside 0..{num_classes}"
                )));
            }
            present[c] = true;
        }
        if let Some(missing) = present.iter().position(|p| !p) {
            return Err(Error::Argument(format!("class {missing} has no graphs")));
        }
        Ok(GraphDataset {
            name: name.into(),
            graphs,
            class_labels,
            num_classes,
        })
    }

    /// Like [`GraphDataset::new`] but with arbitrary integer class values that
    /// are remapped to `0..k` in first-seen order.
    pub fn from_raw_classes(
        name: impl Into<String>,
        graphs: Vec<Graph>,
        raw_classes: &[i64],
    ) -> Result<Self> {
        let (dense, k) = densify_classes(raw_classes);
        GraphDataset::new(name, graphs, dense, k)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn class_labels(&self) -> &[usize] {
        &self.class_labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    /// Replaces every graph's labels with its vertex degrees.
    pub fn with_degree_labels(mut self) -> Self {
        for g in &mut self.graphs {
            let labels = degree_labels(g);
            g.vertex_labels = labels;
        }
        self
    }

    /// Dataset with the same graphs in the order given by `order`.
    pub fn reordered(&self, order: &[usize]) -> Result<Self> {
        if order.iter().any(|&i| i >= self.len()) {
            return Err(Error::Argument("graph index out of range".into()));
        }
        GraphDataset::new(
            self.name.clone(),
            order.iter().map(|&i| self.graphs[i].clone()).collect(),
            order.iter().map(|&i| self.class_labels[i]).collect(),
            self.num_classes,
        )
    }
}

pub(crate) fn densify_classes(raw: &[i64]) -> (Vec<usize>, usize) {
    let mut seen: Vec<i64> = Vec::new();
    let dense = raw
        .iter()
        .map(|c| match seen.iter().position(|s| s == c) {
            Some(i) => i,
            None => {
                seen.push(*c);
                seen.len() - 1
            }
        })
        .collect();
    (dense, seen.len())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub name: String,
    pub graphs: usize,
    pub classes: usize,
    pub max_vertices: usize,
    pub mean_vertices: f64,
}

impl std::fmt::Display for DatasetSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: graphs={} classes={} max_vertices={} mean_vertices={:.2}",
            self.name, self.graphs, self.classes, self.max_vertices, self.mean_vertices
        )
    }
}

pub fn dataset_summary(d: &GraphDataset) -> Result<DatasetSummary> {
    if d.is_empty() {
        return Err(Error::Argument(format!("dataset {:?} is empty", d.name())));
    }
    let sizes = d.graphs().iter().map(Graph::num_vertices);
    let total: usize = sizes.clone().sum();
    Ok(DatasetSummary {
        name: d.name().to_string(),
        graphs: d.len(),
        classes: d.num_classes(),
        max_vertices: sizes.max().unwrap_or(0),
        mean_vertices: total as f64 / d.len() as f64,
    })
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn degree_labels_of_small_graphs() {
        assert_eq!(degree_labels(&triangle()), vec![2, 2, 2]);
        assert_eq!(degree_labels(&path3()), vec![1, 2, 1]);
        assert_eq!(degree_labels(&star4()), vec![3, 1, 1, 1]);
        assert_eq!(degree_labels(&single_vertex()), vec![0]);
    }

    #[test]
    fn rejects_malformed_graphs() {
        assert!(Graph::new(2, [(0, 0)], vec![0, 0]).is_err());
        assert!(Graph::new(2, [(0, 1), (1, 0)], vec![0, 0]).is_err());
        assert!(Graph::new(2, [(0, 2)], vec![0, 0]).is_err());
        assert!(Graph::new(2, [(0, 1)], vec![0]).is_err());
    }

    #[test]
    fn permutation_preserves_structure() {
        let g = star4();
        let h = g.permuted(&[3, 0, 1, 2]).unwrap();
        assert_eq!(h.vertex_labels(), &[1, 1, 1, 3]);
        assert_eq!(h.num_edges(), 3);
        assert_eq!(h.degree(3), 3);
        assert!(g.permuted(&[0, 0, 1, 2]).is_err());
    }

    #[test]
    fn dataset_requires_every_class() {
        let gs = vec![triangle(), path3()];
        assert!(GraphDataset::new("x", gs.clone(), vec![0, 0], 2).is_err());
        assert!(GraphDataset::new("x", gs.clone(), vec![0], 1).is_err());
        let d = GraphDataset::from_raw_classes("x", gs, &[-1, 1]).unwrap();
        assert_eq!(d.class_labels(), &[0, 1]);
        assert_eq!(d.num_classes(), 2);
    }

    #[test]
    fn summary_of_fixtures() {
        let s = dataset_summary(&dataset(vec![triangle()])).unwrap();
        assert_eq!((s.graphs, s.max_vertices), (1, 3));
        assert_eq!(format!("{:.2}", s.mean_vertices), "3.00");

        let s = dataset_summary(&dataset(vec![path3(), triangle()])).unwrap();
        assert_eq!(format!("{:.2}", s.mean_vertices), "3.00");

        let empty = GraphDataset::new("e", vec![], vec![], 0).unwrap();
        assert!(matches!(dataset_summary(&empty), Err(Error::Argument(_))));
    }
}
