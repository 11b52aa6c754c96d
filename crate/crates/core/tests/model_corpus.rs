use adfm_core::{Error, SystemModel};
use std::path::{Path, PathBuf};

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus").join(name)
}

fn load_err(name: &str) -> Error {
    SystemModel::load(corpus(name)).expect_err(name)
}

#[test]
fn dimension_errors_name_the_matrix() {
    for (file, matrix) in [
        ("ragged_a.json", "A"),
        ("nonsquare_a.json", "A"),
        ("b_columns.json", "B"),
        ("c_rows.json", "C"),
        ("d_shape.json", "D"),
    ] {
        match load_err(file) {
            Error::Dimension { matrix: m, .. } => assert_eq!(m, matrix, "{file}"),
            other => panic!("{file}: unexpected {other}"),
        }
    }
}

#[test]
fn partition_errors() {
    for file in ["one_station.json", "empty_station.json"] {
        assert!(matches!(load_err(file), Error::Partition(_)), "{file}");
    }
}

#[test]
fn malformed_documents_are_parse_errors() {
    for file in [
        "unknown_field.json",
        "missing_a.json",
        "overflow.json",
        "string_entry.json",
        "truncated.json",
    ] {
        assert!(matches!(load_err(file), Error::Parse(_)), "{file}");
    }
}

#[test]
fn missing_file_names_the_path() {
    let err = load_err("does_not_exist.json");
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("does_not_exist.json"));
}

#[test]
fn fixtures_round_trip_through_json() {
    for name in ["four_station.json", "dfm2.json"] {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name);
        let model = SystemModel::load(&path).unwrap();
        let again = SystemModel::from_json_str(&model.to_json_string()).unwrap();
        assert_eq!(model, again);
    }
}
