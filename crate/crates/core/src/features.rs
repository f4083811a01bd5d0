//! Substructure count features: Weisfeiler-Lehman subtree labels and
//! shortest-path lengths, assembled into a dataset-wide count matrix.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    /// Weisfeiler-Lehman subtree counts.
    Wl,
    /// Shortest-path length counts.
    Sp,
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelKind::Wl => "wl",
            KernelKind::Sp => "sp",
        })
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wl" | "wlsk" => Ok(KernelKind::Wl),
            "sp" | "spgk" => Ok(KernelKind::Sp),
            other => Err(Error::Argument(format!("unknown kernel kind {other:?}"))),
        }
    }
}

/// What a feature column counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureId {
    /// Compressed WL label `label` of refinement round `iteration`.
    Subtree { iteration: usize, label: u32 },
    /// Vertex pairs at shortest-path distance `length`.
    PathLength(u32),
}

/// A relabelling key: the vertex's previous label and the sorted multiset of
/// its neighbours' previous labels. Round 0 keys carry the raw label and an
/// empty multiset.
type WlKey = (u32, Vec<u32>);

/// Dataset-global dictionaries mapping relabelling keys to compressed labels,
/// one per refinement round. Labels are `0, 1, 2, ...` in first-seen order
/// (graph order, then vertex order) within each round.
#[derive(Debug, Clone, Default)]
pub struct WlVocabulary {
    rounds: Vec<HashMap<WlKey, u32>>,
}

impl WlVocabulary {
    fn compress(&mut self, round: usize, key: WlKey) -> u32 {
        if self.rounds.len() <= round {
            self.rounds.resize_with(round + 1, HashMap::new);
        }
        let map = &mut self.rounds[round];
        let next = map.len() as u32;
        *map.entry(key).or_insert(next)
    }

    /// Number of distinct labels `|L^i|` in every round.
    pub fn distinct_counts(&self) -> Vec<usize> {
        self.rounds.iter().map(HashMap::len).collect()
    }

    pub fn total(&self) -> usize {
        self.rounds.iter().map(HashMap::len).sum()
    }

    pub fn num_rounds(&self) -> usize {
        self.rounds.len()
    }

    /// Looks up the compressed label of `key` in round `round`.
    pub fn label_of(&self, round: usize, prev: u32, neighbours: &[u32]) -> Option<u32> {
        self.rounds
            .get(round)
            .and_then(|m| m.get(&(prev, neighbours.to_vec())))
            .copied()
    }
}

/// Per-graph, per-round vertex labels from WL refinement.
#[derive(Debug, Clone)]
pub struct WlRelabeling {
    /// `labels[graph][round][vertex]`
    pub labels: Vec<Vec<Vec<u32>>>,
    pub vocabulary: WlVocabulary,
}

impl WlRelabeling {
    pub fn rounds(&self) -> usize {
        self.vocabulary.num_rounds()
    }
}

/// Runs `i_max` WL refinement rounds on every graph of `d` against a shared
/// vocabulary. Round 0 is the compressed initial labelling.
pub fn wl_relabel_dataset(d: &GraphDataset, i_max: usize) -> WlRelabeling {
    let mut vocabulary = WlVocabulary::default();
    let mut labels: Vec<Vec<Vec<u32>>> = d
        .graphs()
        .iter()
        .map(|g| {
            vec![g
                .vertex_labels()
                .iter()
                .map(|&l| vocabulary.compress(0, (l, Vec::new())))
                .collect()]
        })
        .collect();
    // Round 0 of an empty dataset still exists.
    if vocabulary.rounds.is_empty() {
        vocabulary.rounds.push(HashMap::new());
    }

    for round in 1..=i_max {
        for (g, per_graph) in d.graphs().iter().zip(labels.iter_mut()) {
            let prev = &per_graph[round - 1];
            let next = (0..g.num_vertices())
                .map(|u| {
                    let mut multiset: Vec<u32> = g.neighbors(u).iter().map(|&v| prev[v]).collect();
                    multiset.sort_unstable();
                    vocabulary.compress(round, (prev[u], multiset))
                })
                .collect();
            per_graph.push(next);
        }
        if vocabulary.rounds.len() <= round {
            vocabulary.rounds.push(HashMap::new());
        }
    }
    WlRelabeling { labels, vocabulary }
}

/// An `N x L` matrix of substructure counts, one row per graph.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: Array2<u64>,
    pub feature_ids: Vec<FeatureId>,
    pub kind: KernelKind,
    /// Number of WL refinement rounds for [`KernelKind::Wl`].
    pub wl_iterations: Option<usize>,
}

impl FeatureMatrix {
    pub fn num_graphs(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn to_f64(&self) -> Array2<f64> {
        self.values.mapv(|v| v as f64)
    }

    /// Writes `N L kind` followed by one whitespace-separated row per graph.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {} {}", self.num_graphs(), self.num_features(), self.kind)?;
        for row in self.values.rows() {
            let line: Vec<String> = row.iter().map(u64::to_string).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    /// Parses the text layout written by [`FeatureMatrix::write_text`].
    /// Feature ids are not part of the format, so only the counts and kind
    /// are recovered.
    pub fn read_text<R: BufRead>(r: R) -> Result<(KernelKind, Array2<u64>)> {
        let path = std::path::PathBuf::from("<feature matrix>");
        let mut lines = r.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::format(&path, 1, "empty input"))?;
        let header = header.map_err(|e| Error::io(&path, e))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let [n, l, kind] = parts.as_slice() else {
            return Err(Error::format(&path, 1, "expected header \"N L kind\""));
        };
        let bad = |line: usize| {
            let path = path.clone();
            move |_| Error::format(path, line, "not an integer")
        };
        let n: usize = n.parse().map_err(bad(1))?;
        let l: usize = l.parse().map_err(bad(1))?;
        let kind: KernelKind = kind.parse()?;
        let mut data = Vec::with_capacity(n * l);
        for (i, line) in lines.take(n) {
            let line = line.map_err(|e| Error::io(&path, e))?;
            let row = line
                .split_whitespace()
                .map(|t| t.parse::<u64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(bad(i + 1))?;
            if row.len() != l {
                return Err(Error::format(&path, i + 1, format!("expected {l} values")));
            }
            data.extend(row);
        }
        Array2::from_shape_vec((n, l), data)
            .map(|m| (kind, m))
            .map_err(|_| Error::format(&path, n + 1, "truncated matrix"))
    }
}

/// WL subtree count matrix with column blocks for rounds `0..=i_max`, each in
/// vocabulary order.
pub fn wl_feature_matrix(d: &GraphDataset, i_max: usize) -> FeatureMatrix {
    let relabeling = wl_relabel_dataset(d, i_max);
    wl_features_from_relabeling(&relabeling, i_max)
}

pub fn wl_features_from_relabeling(relabeling: &WlRelabeling, i_max: usize) -> FeatureMatrix {
    let counts = relabeling.vocabulary.distinct_counts();
    let mut offsets = Vec::with_capacity(counts.len());
    let mut feature_ids = Vec::new();
    for (round, &c) in counts.iter().enumerate().take(i_max + 1) {
        offsets.push(feature_ids.len());
        feature_ids.extend((0..c as u32).map(|label| FeatureId::Subtree { iteration: round, label }));
    }
    let mut values = Array2::zeros((relabeling.labels.len(), feature_ids.len()));
    for (g, rounds) in relabeling.labels.iter().enumerate() {
        for (round, labels) in rounds.iter().enumerate().take(i_max + 1) {
            for &l in labels {
                values[[g, offsets[round] + l as usize]] += 1;
            }
        }
    }
    FeatureMatrix {
        values,
        feature_ids,
        kind: KernelKind::Wl,
        wl_iterations: Some(i_max),
    }
}

/// Sentinel distance for vertex pairs in different connected components.
pub const UNREACHABLE: u32 = u32::MAX;

/// All-pairs unweighted shortest-path lengths by Floyd-Warshall.
pub fn floyd_shortest_paths(g: &Graph) -> Array2<u32> {
    let n = g.num_vertices();
    let mut d = Array2::from_elem((n, n), UNREACHABLE);
    for u in 0..n {
        d[[u, u]] = 0;
    }
    for &(u, v) in g.edges() {
        d[[u, v]] = 1;
        d[[v, u]] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[[i, k]];
            if dik == UNREACHABLE {
                continue;
            }
            for j in 0..n {
                let dkj = d[[k, j]];
                if dkj != UNREACHABLE && dik + dkj < d[[i, j]] {
                    d[[i, j]] = dik + dkj;
                }
            }
        }
    }
    d
}

/// Histogram of finite distances over unordered pairs `u < v`; entry `j` counts
/// pairs at distance `j + 1`.
fn path_length_histogram(g: &Graph) -> Vec<u64> {
    let d = floyd_shortest_paths(g);
    let mut hist = Vec::new();
    for u in 0..g.num_vertices() {
        for v in u + 1..g.num_vertices() {
            let len = d[[u, v]];
            if len == UNREACHABLE {
                continue;
            }
            let idx = len as usize - 1;
            if hist.len() <= idx {
                hist.resize(idx + 1, 0);
            }
            hist[idx] += 1;
        }
    }
    hist
}

/// Shortest-path count matrix; column `j` holds pairs at distance `j + 1`, up
/// to the longest finite shortest path in the dataset.
pub fn sp_feature_matrix(d: &GraphDataset) -> FeatureMatrix {
    let hists: Vec<Vec<u64>> = d.graphs().par_iter().map(path_length_histogram).collect();
    let width = hists.iter().map(Vec::len).max().unwrap_or(0);
    let mut values = Array2::zeros((hists.len(), width));
    for (g, h) in hists.iter().enumerate() {
        for (j, &c) in h.iter().enumerate() {
            values[[g, j]] = c;
        }
    }
    FeatureMatrix {
        values,
        feature_ids: (1..=width as u32).map(FeatureId::PathLength).collect(),
        kind: KernelKind::Sp,
        wl_iterations: None,
    }
}

pub fn feature_matrix(d: &GraphDataset, kind: KernelKind, wl_iterations: usize) -> FeatureMatrix {
    match kind {
        KernelKind::Wl => wl_feature_matrix(d, wl_iterations),
        KernelKind::Sp => sp_feature_matrix(d),
    }
}
