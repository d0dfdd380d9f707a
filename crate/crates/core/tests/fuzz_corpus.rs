//! Replays the checked-in fuzz corpus through the same entry points as the fuzz targets.

use std::collections::BTreeMap;
use std::path::Path;

use causentropy::horizon::SampledField;
use causentropy::qmatrix::{self, ComplexMatrix};
use causentropy::scenario::{Report, ScenarioConfig};
use causentropy::transfer::{self, EntropyLedger};
use causentropy::DensityMatrix;

fn corpus(target: &str) -> BTreeMap<String, Vec<u8>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|entry| {
            let path = entry.unwrap().path();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read(&path).unwrap())
        })
        .collect()
}

fn text(data: &[u8]) -> &str {
    std::str::from_utf8(data).unwrap()
}

#[test]
fn state_json() {
    for (name, data) in corpus("state_json") {
        let parsed = DensityMatrix::from_json(text(&data));
        assert_eq!(parsed.is_ok(), matches!(name.as_str(), "bell" | "labelled"), "{name}");
        if let Ok(rho) = parsed {
            assert_eq!(DensityMatrix::from_json(&rho.to_json().unwrap()).unwrap(), rho);
        }
    }
}

#[test]
fn field_json() {
    for (name, data) in corpus("field_json") {
        let parsed = SampledField::from_json(text(&data));
        assert_eq!(parsed.is_ok(), name != "bad_count", "{name}");
        if let Ok(f) = parsed {
            assert_eq!(SampledField::from_json(&f.to_json().unwrap()).unwrap(), f);
        }
    }
}

#[test]
fn field_csv() {
    for (name, data) in corpus("field_csv") {
        let parsed = SampledField::from_csv(data.as_slice());
        let expect_ok = !matches!(name.as_str(), "duplicate" | "nonuniform");
        assert_eq!(parsed.is_ok(), expect_ok, "{name}");
        if let Ok(f) = parsed {
            assert_eq!(f.values().len(), f.axes().iter().map(|a| a.count).product::<usize>());
        }
    }
}

#[test]
fn ledger_json() {
    for (name, data) in corpus("ledger_json") {
        let ledger: EntropyLedger = serde_json::from_slice(&data).unwrap();
        let result = transfer::apply_transfer(&ledger);
        assert_eq!(result.is_ok(), name == "example", "{name}");
        let _ = transfer::max_transfer(&ledger);
    }
}

#[test]
fn matrix_json() {
    for (name, data) in corpus("matrix_json") {
        match serde_json::from_slice::<ComplexMatrix>(&data) {
            Ok(m) => {
                assert!(m.is_square(), "{name}");
                qmatrix::hermitian_eigenvalues(&m).unwrap();
            }
            Err(_) => assert_eq!(name, "ragged"),
        }
    }
}

#[test]
fn report_json() {
    for (name, data) in corpus("report_json") {
        let report = Report::from_json(text(&data)).unwrap_or_else(|e| panic!("{name}: {e}"));
        let canonical = report.to_canonical_json();
        assert_eq!(Report::from_json(&canonical).unwrap().to_canonical_json(), canonical, "{name}");
    }
}

#[test]
fn scenario_config() {
    for (name, data) in corpus("scenario_config") {
        let parsed = ScenarioConfig::from_json(text(&data));
        assert_eq!(parsed.is_ok(), name != "unknown_key", "{name}");
        if let Ok(config) = parsed {
            assert_eq!(ScenarioConfig::from_value(config.to_value()).unwrap(), config);
        }
    }
}
