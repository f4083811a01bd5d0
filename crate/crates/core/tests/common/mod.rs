#![allow(dead_code)]

use std::path::PathBuf;

use akbr::{Graph, GraphDataset};
use proptest::prelude::*;
use rand::Rng;

pub fn mutag_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/MUTAG")
}

/// Undirected graph on `n` vertices from a flattened upper-triangle mask.
pub fn graph_from_mask(n: usize, mask: &[bool], labels: Vec<u32>) -> Graph {
    let mut edges = Vec::new();
    let mut k = 0;
    for u in 0..n {
        for v in u + 1..n {
            if mask[k] {
                edges.push((u, v));
            }
            k += 1;
        }
    }
    Graph::new(n, edges, labels).unwrap()
}

/// Random labelled graph with 1..=max_n vertices, labels in 0..3.
pub fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        (
            Just(n),
            proptest::collection::vec(proptest::bool::weighted(0.35), pairs),
            proptest::collection::vec(0u32..3, n),
        )
            .prop_map(|(n, mask, labels)| graph_from_mask(n, &mask, labels))
    })
}

pub fn arb_dataset(max_graphs: usize, max_n: usize) -> impl Strategy<Value = GraphDataset> {
    proptest::collection::vec(arb_graph(max_n), 1..=max_graphs).prop_map(single_class)
}

pub fn single_class(graphs: Vec<Graph>) -> GraphDataset {
    let n = graphs.len();
    GraphDataset::new("random", graphs, vec![0; n], 1).unwrap()
}

pub fn random_graph<R: Rng>(rng: &mut R, max_n: usize) -> Graph {
    let n = rng.random_range(1..=max_n);
    let mask: Vec<bool> = (0..n * (n - 1) / 2).map(|_| rng.random_bool(0.35)).collect();
    let labels = (0..n).map(|_| rng.random_range(0..3)).collect();
    graph_from_mask(n, &mask, labels)
}

pub fn triangle() -> Graph {
    Graph::with_degree_labels(3, [(0, 1), (1, 2), (0, 2)]).unwrap()
}

pub fn path(n: usize) -> Graph {
    Graph::with_degree_labels(n, (1..n).map(|v| (v - 1, v))).unwrap()
}

/// Twenty tiny degree-labelled graphs; class 1 iff the graph contains a
/// triangle. Three structures per class, each repeated at least three times,
/// so a stratified 5-fold split (two test graphs per class) always leaves an
/// isomorphic copy of every test graph in the training set.
pub fn triangle_fixture() -> GraphDataset {
    let triangle_free: [(usize, &[(usize, usize)], usize); 3] = [
        (3, &[(0, 1), (1, 2)], 3),         // P3
        (4, &[(0, 1), (0, 2), (0, 3)], 3), // claw
        (4, &[(0, 1), (1, 2), (2, 3)], 4), // P4
    ];
    let with_triangle: [(usize, &[(usize, usize)], usize); 3] = [
        (3, &[(0, 1), (1, 2), (0, 2)], 3),                 // K3
        (4, &[(0, 1), (1, 2), (0, 2), (2, 3)], 3),         // paw
        (4, &[(0, 1), (1, 2), (0, 2), (1, 3), (2, 3)], 4), // diamond
    ];
    let mut graphs = Vec::new();
    let mut classes = Vec::new();
    for (class, family) in [(0, triangle_free), (1, with_triangle)] {
        for (n, edges, copies) in family {
            for _ in 0..copies {
                graphs.push(Graph::with_degree_labels(n, edges.iter().copied()).unwrap());
                classes.push(class);
            }
        }
    }
    // interleave the classes so index ranges are mixed
    let order: Vec<usize> = (0..10).flat_map(|i| [i, i + 10]).collect();
    GraphDataset::new("triangle_fixture", graphs, classes, 2)
        .unwrap()
        .reordered(&order)
        .unwrap()
}

pub fn bfs_distances(g: &Graph) -> Vec<Vec<Option<u32>>> {
    let n = g.num_vertices();
    (0..n)
        .map(|s| {
            let mut dist = vec![None; n];
            dist[s] = Some(0);
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &v in g.neighbors(u) {
                    if dist[v].is_none() {
                        dist[v] = Some(dist[u].unwrap() + 1);
                        queue.push_back(v);
                    }
                }
            }
            dist
        })
        .collect()
}
