//! Emitted tables against checked-in printed values: one unit of the last printed digit, integers exactly.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;

fn read_csv(text: &str) -> Vec<Vec<String>> {
    csv::Reader::from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn emit_table(id: u8) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_gwb"))
        .args(["table", &id.to_string(), "--digits", "12"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn close_to_printed(printed: &str, value: &str) -> bool {
    let (Ok(target), Ok(v)) = (printed.parse::<f64>(), value.parse::<f64>()) else {
        return printed == value;
    };
    // integers (convergence times) must match exactly
    if !printed.contains(['.', 'e', 'E']) && printed != "0" {
        return printed == value;
    }
    if printed == "0" {
        return v.abs() <= 1e-14;
    }
    let (mant, exp) = match printed.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().unwrap()),
        None => (printed, 0),
    };
    let decimals = mant.split_once('.').map_or(0, |(_, d)| d.len()) as i32;
    (v - target).abs() <= 10f64.powi(exp - decimals) * (1.0 + 1e-9)
}

/// Cells that differ from the fixture, labelled by the leading key columns and the column header.
fn mismatches(id: u8, key_cols: usize) -> BTreeSet<String> {
    let fixture = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("tests/fixtures/table{id}.csv")))
        .unwrap();
    let emitted = emit_table(id);
    let header: Vec<String> = emitted.lines().next().unwrap().split(',').map(str::to_string).collect();
    assert_eq!(fixture.lines().next().unwrap(), emitted.lines().next().unwrap());
    let (want, got) = (read_csv(&fixture), read_csv(&emitted));
    assert_eq!(want.len(), got.len());
    let mut bad = BTreeSet::new();
    for (w, g) in want.iter().zip(&got) {
        assert_eq!(w[..key_cols], g[..key_cols]);
        for j in key_cols..w.len() {
            if !close_to_printed(&w[j], &g[j]) {
                bad.insert(format!("{} {}", w[..key_cols].join(" "), header[j]));
            }
        }
    }
    bad
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

#[test]
fn table1_matches_printed() {
    assert_eq!(mismatches(1, 2), set(&["1.02 pollak n=5"]));
}

#[test]
fn table2_matches_printed() {
    assert_eq!(mismatches(2, 1), set(&["S_ser negbinomial(r=5)"]));
}

#[test]
fn table3_matches_printed() {
    assert_eq!(
        mismatches(3, 3),
        set(&["0.3 0.01 T_ser gp2", "0.3 0.01 T_ser gp3", "0.3 0.01 T_ser gp4", "0.3 0.01 T_ser gp5"])
    );
}
