//! The CSVs under `data/` are the calibrated fixtures written out. Regenerate
//! with `REFCAST_BLESS=1 cargo test --test fixture_data`.

use std::path::PathBuf;

use refcast::dataset::{parse_records, write_records, ReferenceClass};
use refcast::fixtures;

fn data_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(format!("{name}.csv"))
}

fn check(name: &str, class: ReferenceClass) {
    let want = write_records(class.records());
    let path = data_file(name);
    if std::env::var_os("REFCAST_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &want).unwrap();
    }
    let got = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(got, want, "{} is stale", path.display());
    let parsed = parse_records(&got).unwrap();
    assert!(parsed.diagnostics.is_empty());
    assert_eq!(parsed.records, class.records());
}

#[test]
fn roads_csv_matches_generator() {
    check("roads", fixtures::roads());
}

#[test]
fn rail_csv_matches_generator() {
    check("rail", fixtures::rail());
}

#[test]
fn fixed_links_csv_matches_generator() {
    check("fixed_links", fixtures::fixed_links());
}
