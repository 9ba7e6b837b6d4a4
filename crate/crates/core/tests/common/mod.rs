#![allow(dead_code)]

use std::path::PathBuf;

use neariso::io::{read_dataset, read_table, Dataset};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn dataset(name: &str) -> Dataset {
    read_dataset(&fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Second column of a two-column reference table.
pub fn reference(name: &str) -> Vec<f64> {
    let t = read_table(&fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    t.rows.iter().map(|r| r[1]).collect()
}

pub fn table(name: &str) -> Vec<(f64, f64)> {
    let t = read_table(&fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    t.rows.iter().map(|r| (r[0], r[1])).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
