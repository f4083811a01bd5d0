mod common;

use akbr::experiment::stratified_kfold;
use akbr::features::feature_matrix;
use akbr::graph::dataset_summary;
use akbr::kernel::{gram_counts, CountingKernel};
use akbr::tudataset::{load_tudataset, LabelSource};
use akbr::KernelKind;

#[test]
fn mutag_statistics() {
    let d = load_tudataset(common::mutag_dir(), "MUTAG", LabelSource::File).unwrap();
    let s = dataset_summary(&d).unwrap();
    assert_eq!(s.graphs, 188);
    assert_eq!(s.classes, 2);
    assert_eq!(s.max_vertices, 28);
    assert_eq!(format!("{:.2}", s.mean_vertices), "17.93");
    // 125 mutagenic, 63 not
    let ones = d.class_labels().iter().filter(|&&c| c == 1).count();
    assert_eq!(ones.min(188 - ones), 63);
}

#[test]
fn mutag_ten_folds_have_18_or_19_graphs() {
    let d = load_tudataset(common::mutag_dir(), "MUTAG", LabelSource::File).unwrap();
    for seed in 0..5 {
        let folds = stratified_kfold(d.class_labels(), 10, seed).unwrap();
        let mut sizes: Vec<usize> = folds.iter().map(|f| f.test.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, [18, 18, 19, 19, 19, 19, 19, 19, 19, 19]);
    }
}

#[test]
fn mutag_gram_matches_counting_on_a_slice() {
    let d = load_tudataset(common::mutag_dir(), "MUTAG", LabelSource::File).unwrap();
    let d = d.reordered(&(0..25).collect::<Vec<_>>()).unwrap();
    for (kind, i) in [(KernelKind::Wl, 2), (KernelKind::Sp, 0)] {
        let k = gram_counts(&feature_matrix(&d, kind, i));
        let oracle = CountingKernel::new(&d, kind, i);
        for p in 0..d.len() {
            for q in 0..d.len() {
                assert_eq!(k[[p, q]], oracle.value(p, q).unwrap());
            }
        }
    }
}

#[test]
fn degree_labels_are_selectable() {
    let d = load_tudataset(common::mutag_dir(), "MUTAG", LabelSource::Degree).unwrap();
    let g = &d.graphs()[0];
    for u in 0..g.num_vertices() {
        assert_eq!(g.vertex_labels()[u] as usize, g.degree(u));
    }
}
