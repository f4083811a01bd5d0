//! Kernel matrices `K = X' X'^T` and their rows as graph embeddings, plus a
//! pair-counting evaluation of the classical WL and shortest-path kernels.

use std::collections::{HashMap, VecDeque};
use std::io::Write;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, KernelKind};
use crate::graph::{Graph, GraphDataset};

/// A symmetric PSD Gram matrix over the graphs of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub values: Array2<f64>,
    pub kind: KernelKind,
    /// Whether the features were attention-weighted.
    pub adaptive: bool,
}

impl KernelMatrix {
    pub fn from_features(xw: ArrayView2<'_, f64>, kind: KernelKind, adaptive: bool) -> Self {
        KernelMatrix {
            values: gram(xw),
            kind,
            adaptive,
        }
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Embedding of graph `p`: its kernel values against every graph of the
    /// dataset, i.e. row `p`.
    pub fn embedding_row(&self, p: usize) -> Result<ArrayView1<'_, f64>> {
        if p >= self.len() {
            return Err(Error::Argument(format!(
                "graph index {p} out of range for {} graphs",
                self.len()
            )));
        }
        Ok(self.values.row(p))
    }

    /// Plain-text dump: `N` on the first line, then `N` rows.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.len())?;
        for row in self.values.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// `xw · xwᵀ`.
pub fn gram(xw: ArrayView2<'_, f64>) -> Array2<f64> {
    xw.dot(&xw.t())
}

/// Backward of [`gram`]: `dL/dX' = (G + Gᵀ) X'` for `G = dL/dK`.
pub fn gram_backward(grad_k: ArrayView2<'_, f64>, xw: ArrayView2<'_, f64>) -> Array2<f64> {
    let sym = &grad_k + &grad_k.t();
    sym.dot(&xw)
}

/// Nonzero entries of a count matrix, column by column. WL columns of later
/// rounds are mostly confined to a handful of graphs, so sums over column
/// supports are far cheaper than dense `N x N x L` products.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseColumns {
    num_rows: usize,
    columns: Vec<Vec<(usize, f64)>>,
}

impl SparseColumns {
    pub fn from_dense(x: ArrayView2<'_, f64>) -> Self {
        let columns = x
            .columns()
            .into_iter()
            .map(|c| c.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(r, &v)| (r, v)).collect())
            .collect();
        SparseColumns {
            num_rows: x.nrows(),
            columns,
        }
    }

    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn num_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }
}

/// `sum_l w_l x_l x_lᵀ`, i.e. [`gram`] of the columns scaled by `sqrt(w)`.
/// With `w = alpha^2` this is the attention-weighted kernel.
pub fn weighted_gram(x: &SparseColumns, w: ArrayView1<'_, f64>) -> Array2<f64> {
    assert_eq!(w.len(), x.num_cols(), "one weight per column");
    let mut k = Array2::zeros((x.num_rows, x.num_rows));
    for (col, &wl) in x.columns.iter().zip(w) {
        for (i, &(r, a)) in col.iter().enumerate() {
            let wa = wl * a;
            k[[r, r]] += wa * a;
            for &(q, b) in &col[i + 1..] {
                k[[r, q]] += wa * b;
            }
        }
    }
    // mirror the upper triangle
    for r in 0..x.num_rows {
        for q in r + 1..x.num_rows {
            k[[q, r]] = k[[r, q]];
        }
    }
    k
}

/// Backward of [`weighted_gram`]: `dL/dw_l = x_lᵀ G x_l` for `G = dL/dK`.
pub fn weighted_gram_backward(grad_k: ArrayView2<'_, f64>, x: &SparseColumns) -> Array1<f64> {
    x.columns
        .iter()
        .map(|col| {
            let mut s = 0.0;
            for &(r, a) in col {
                let mut t = 0.0;
                for &(q, b) in col {
                    t += grad_k[[r, q]] * b;
                }
                s += a * t;
            }
            s
        })
        .collect()
}

/// Exact integer Gram matrix of raw counts.
pub fn gram_counts(x: &FeatureMatrix) -> Array2<u64> {
    let n = x.num_graphs();
    let mut k = Array2::zeros((n, n));
    for p in 0..n {
        for q in p..n {
            let v: u64 = x.values.row(p).iter().zip(x.values.row(q)).map(|(a, b)| a * b).sum();
            k[[p, q]] = v;
            k[[q, p]] = v;
        }
    }
    k
}

/// Classical kernel values computed by matching substructures pair by pair,
/// without going through a feature matrix.
///
/// WL: for every round, counts vertex pairs `(u in G_p, v in G_q)` whose
/// rooted subtrees of that height are identical, using a canonical string
/// encoding of the subtree (independent of any label dictionary).
/// SP: counts pairs of unordered vertex pairs with equal finite BFS distance.
#[derive(Debug, Clone)]
pub struct CountingKernel {
    kind: KernelKind,
    /// Per graph: multiset of substructure signatures with multiplicities.
    signatures: Vec<HashMap<String, u64>>,
}

impl CountingKernel {
    pub fn new(d: &GraphDataset, kind: KernelKind, i_max: usize) -> Self {
        let signatures = d
            .graphs()
            .iter()
            .map(|g| match kind {
                KernelKind::Wl => subtree_signatures(g, i_max),
                KernelKind::Sp => distance_signatures(g),
            })
            .collect();
        CountingKernel { kind, signatures }
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.signatures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signatures.is_empty()
    }

    /// Kernel value between graphs `p` and `q` of the dataset this was built
    /// from.
    pub fn value(&self, p: usize, q: usize) -> Result<u64> {
        let n = self.signatures.len();
        let (Some(a), Some(b)) = (self.signatures.get(p), self.signatures.get(q)) else {
            return Err(Error::Contract(format!(
                "graphs ({p}, {q}) are not part of this {n}-graph vocabulary"
            )));
        };
        Ok(a.iter().map(|(sig, &ca)| ca * b.get(sig).copied().unwrap_or(0)).sum())
    }
}

/// One-shot convenience over [`CountingKernel`].
pub fn kernel_value_by_counting(
    d: &GraphDataset,
    p: usize,
    q: usize,
    kind: KernelKind,
    i_max: usize,
) -> Result<u64> {
    CountingKernel::new(d, kind, i_max).value(p, q)
}

fn subtree_signatures(g: &Graph, i_max: usize) -> HashMap<String, u64> {
    let mut out = HashMap::new();
    let mut current: Vec<String> = g.vertex_labels().iter().map(|l| l.to_string()).collect();
    for round in 0..=i_max {
        if round > 0 {
            current = (0..g.num_vertices())
                .map(|u| {
                    let mut children: Vec<&str> = g.neighbors(u).iter().map(|&v| current[v].as_str()).collect();
                    children.sort_unstable();
                    format!("{}({})", current[u], children.join(","))
                })
                .collect();
        }
        for s in &current {
            *out.entry(format!("{round}:{s}")).or_insert(0) += 1;
        }
    }
    out
}

fn distance_signatures(g: &Graph) -> HashMap<String, u64> {
    let n = g.num_vertices();
    let mut out = HashMap::new();
    for s in 0..n {
        let mut dist = vec![usize::MAX; n];
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        for &d in dist.iter().skip(s + 1) {
            if d != usize::MAX {
                *out.entry(d.to_string()).or_insert(0) += 1;
            }
        }
    }
    out
}
