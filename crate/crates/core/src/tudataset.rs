//! Reader and writer for the TUDataset plain-text benchmark format.
//!
//! A dataset `DS` lives in one directory as
//!
//! - `DS_A.txt`: one `i, j` edge per line, 1-based global vertex ids
//! - `DS_graph_indicator.txt`: graph id (1-based) of every vertex
//! - `DS_graph_labels.txt`: class value of every graph
//! - `DS_node_labels.txt` (optional): integer label of every vertex
//!
//! Edge labels and attribute files are ignored.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::{degree_labels, Graph, GraphDataset};

/// Where the iteration-0 vertex labels come from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    /// `DS_node_labels.txt` when present, vertex degrees otherwise.
    #[default]
    File,
    /// Always use vertex degrees.
    Degree,
}

impl std::str::FromStr for LabelSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "file" => Ok(LabelSource::File),
            "degree" => Ok(LabelSource::Degree),
            other => Err(Error::Argument(format!("unknown label source {other:?}"))),
        }
    }
}

fn file_for(dir: &Path, name: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{name}_{suffix}.txt"))
}

/// Non-empty lines as (1-based line number, parsed integers).
fn read_records(path: &Path) -> Result<Vec<(usize, Vec<i64>)>> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let values = line
            .split(',')
            .map(|t| t.trim().parse::<i64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::format(path, i + 1, format!("bad integer record {line:?}: {e}")))?;
        out.push((i + 1, values));
    }
    Ok(out)
}

fn single_column(path: &Path) -> Result<Vec<(usize, i64)>> {
    read_records(path)?
        .into_iter()
        .map(|(line, v)| match v.as_slice() {
            [x] => Ok((line, *x)),
            _ => Err(Error::format(path, line, "expected exactly one value")),
        })
        .collect()
}

/// Loads `<dir>/<name>_*.txt` into a [`GraphDataset`].
///
/// Repeated or reversed edges collapse to one undirected edge and self-loops
/// are dropped. Class values are remapped to `0..k` in first-seen order.
pub fn load_tudataset(dir: impl AsRef<Path>, name: &str, labels: LabelSource) -> Result<GraphDataset> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(Error::MissingFile(dir.to_path_buf()));
    }
    let a_path = file_for(dir, name, "A");
    let ind_path = file_for(dir, name, "graph_indicator");
    let gl_path = file_for(dir, name, "graph_labels");
    let nl_path = file_for(dir, name, "node_labels");

    // Check presence up front so the error names the first missing mandatory file.
    for p in [&a_path, &ind_path, &gl_path] {
        if !p.is_file() {
            return Err(Error::MissingFile(p.clone()));
        }
    }

    let graph_classes: Vec<i64> = single_column(&gl_path)?.into_iter().map(|(_, c)| c).collect();
    let num_graphs = graph_classes.len();

    let indicator = single_column(&ind_path)?;
    // global vertex -> (graph, local index)
    let mut location = Vec::with_capacity(indicator.len());
    let mut sizes = vec![0usize; num_graphs];
    for &(line, gid) in &indicator {
        if gid < 1 || gid as usize > num_graphs {
            return Err(Error::format(
                &ind_path,
                line,
                format!("graph id {gid} outside 1..={num_graphs}"),
            ));
        }
        let g = gid as usize - 1;
        location.push((g, sizes[g]));
        sizes[g] += 1;
    }
    let total_vertices = location.len();

    let file_labels = if labels == LabelSource::File && nl_path.is_file() {
        let rows = single_column(&nl_path)?;
        if rows.len() != total_vertices {
            let line = rows.last().map_or(0, |r| r.0);
            return Err(Error::format(
                &nl_path,
                line,
                format!(
                    "vertex count mismatch: {} node labels but {} vertices in {}",
                    rows.len(),
                    total_vertices,
                    ind_path.display()
                ),
            ));
        }
        let mut per_graph: Vec<Vec<u32>> = sizes.iter().map(|&s| vec![0; s]).collect();
        for (v, (line, label)) in rows.into_iter().enumerate() {
            let label = u32::try_from(label)
                .map_err(|_| Error::format(&nl_path, line, format!("label {label} is not a nonnegative integer")))?;
            let (g, local) = location[v];
            per_graph[g][local] = label;
        }
        Some(per_graph)
    } else {
        None
    };

    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); num_graphs];
    for (line, rec) in read_records(&a_path)? {
        let [i, j] = rec.as_slice() else {
            return Err(Error::format(&a_path, line, "expected \"i, j\""));
        };
        let resolve = |x: i64| -> Result<(usize, usize)> {
            if x < 1 || x as usize > total_vertices {
                Err(Error::format(
                    &a_path,
                    line,
                    format!("vertex {x} outside 1..={total_vertices}"),
                ))
            } else {
                Ok(location[x as usize - 1])
            }
        };
        let (gi, u) = resolve(*i)?;
        let (gj, v) = resolve(*j)?;
        if gi != gj {
            return Err(Error::format(
                &a_path,
                line,
                format!("edge {i}-{j} joins vertices of graphs {} and {}", gi + 1, gj + 1),
            ));
        }
        if u != v {
            edges[gi].push((u.min(v), u.max(v)));
        }
    }

    let mut graphs = Vec::with_capacity(num_graphs);
    for (g, mut e) in edges.into_iter().enumerate() {
        e.sort_unstable();
        e.dedup();
        let n = sizes[g];
        let graph = Graph::new(n, e, vec![0; n])?;
        let labels = match &file_labels {
            Some(per_graph) => per_graph[g].clone(),
            None => degree_labels(&graph),
        };
        graphs.push(graph.with_labels(labels)?);
    }
    GraphDataset::from_raw_classes(name, graphs, &graph_classes)
}

/// Writes `d` to `<dir>/<d.name()>_*.txt`, including node labels. Each edge is
/// emitted in both orientations as the public datasets do.
pub fn write_tudataset(d: &GraphDataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = d.name();
    let mut a = String::new();
    let mut ind = String::new();
    let mut nl = String::new();
    let mut gl = String::new();
    let mut offset = 0usize;
    for (g, (graph, class)) in d.graphs().iter().zip(d.class_labels()).enumerate() {
        for &(u, v) in graph.edges() {
            a.push_str(&format!("{}, {}\n{}, {}\n", offset + u + 1, offset + v + 1, offset + v + 1, offset + u + 1));
        }
        for &label in graph.vertex_labels() {
            ind.push_str(&format!("{}\n", g + 1));
            nl.push_str(&format!("{label}\n"));
        }
        gl.push_str(&format!("{class}\n"));
        offset += graph.num_vertices();
    }
    for (suffix, body) in [("A", a), ("graph_indicator", ind), ("node_labels", nl), ("graph_labels", gl)] {
        let path = file_for(dir, name, suffix);
        let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(body.as_bytes()).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, suffix: &str, body: &str) {
        fs::write(file_for(dir, name, suffix), body).unwrap();
    }

    /// Triangle (vertices 1..3) and path 4-5-6, with repeated and reversed edges.
    fn two_graph_fixture(dir: &Path) {
        write(dir, "T", "A", "1, 2\n2, 1\n2, 3\n3,1\n1, 3\n4, 5\n5, 6\n6, 5\n");
        write(dir, "T", "graph_indicator", "1\n1\n1\n2\n2\n2\n");
        write(dir, "T", "graph_labels", "1\n-1\n");
    }

    #[test]
    fn loads_hand_written_fixture() {
        let tmp = tempfile::tempdir().unwrap();
        two_graph_fixture(tmp.path());
        let d = load_tudataset(tmp.path(), "T", LabelSource::File).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.num_classes(), 2);
        assert_eq!(d.class_labels(), &[0, 1]);
        let g = &d.graphs()[0];
        assert_eq!((g.num_vertices(), g.num_edges()), (3, 3));
        assert_eq!(g.vertex_labels(), &[2, 2, 2]);
        let p = &d.graphs()[1];
        assert_eq!((p.num_vertices(), p.num_edges()), (3, 2));
        assert_eq!(p.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(p.vertex_labels(), &[1, 2, 1]);
    }

    #[test]
    fn isolated_vertex_gets_degree_zero() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "S", "A", "");
        write(tmp.path(), "S", "graph_indicator", "1\n");
        write(tmp.path(), "S", "graph_labels", "0\n");
        let d = load_tudataset(tmp.path(), "S", LabelSource::File).unwrap();
        assert_eq!(d.graphs()[0].vertex_labels(), &[0]);
    }

    #[test]
    fn node_labels_file_and_degree_switch() {
        let tmp = tempfile::tempdir().unwrap();
        two_graph_fixture(tmp.path());
        write(tmp.path(), "T", "node_labels", "5\n6\n7\n0\n0\n1\n");
        let d = load_tudataset(tmp.path(), "T", LabelSource::File).unwrap();
        assert_eq!(d.graphs()[0].vertex_labels(), &[5, 6, 7]);
        let d = load_tudataset(tmp.path(), "T", LabelSource::Degree).unwrap();
        assert_eq!(d.graphs()[0].vertex_labels(), &[2, 2, 2]);
    }

    #[test]
    fn missing_file_is_named() {
        let tmp = tempfile::tempdir().unwrap();
        two_graph_fixture(tmp.path());
        fs::remove_file(file_for(tmp.path(), "T", "graph_labels")).unwrap();
        let err = load_tudataset(tmp.path(), "T", LabelSource::File).unwrap_err();
        assert!(matches!(err, Error::MissingFile(_)));
        assert!(err.to_string().contains("T_graph_labels.txt"));
    }

    #[test]
    fn edge_across_graphs_reports_line() {
        let tmp = tempfile::tempdir().unwrap();
        two_graph_fixture(tmp.path());
        write(tmp.path(), "T", "A", "1, 2\n3, 4\n");
        match load_tudataset(tmp.path(), "T", LabelSource::File).unwrap_err() {
            Error::Format { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
        write(tmp.path(), "T", "A", "1, 2\n\n1, 9\n");
        match load_tudataset(tmp.path(), "T", LabelSource::File).unwrap_err() {
            Error::Format { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn node_label_count_mismatch() {
        let tmp = tempfile::tempdir().unwrap();
        two_graph_fixture(tmp.path());
        write(tmp.path(), "T", "node_labels", "1\n1\n");
        let err = load_tudataset(tmp.path(), "T", LabelSource::File).unwrap_err();
        assert!(err.to_string().contains("vertex count mismatch"), "{err}");
    }

    #[test]
    fn round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        two_graph_fixture(tmp.path());
        let d = load_tudataset(tmp.path(), "T", LabelSource::File).unwrap();
        let out = tmp.path().join("out");
        write_tudataset(&d, &out).unwrap();
        let again = load_tudataset(&out, "T", LabelSource::File).unwrap();
        assert_eq!(d, again);
    }
}
