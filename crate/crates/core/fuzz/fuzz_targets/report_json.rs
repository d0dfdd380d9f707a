#![no_main]

use libfuzzer_sys::fuzz_target;

use causentropy::scenario::Report;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(report) = Report::from_json(text) {
        let canonical = report.to_canonical_json();
        let again = Report::from_json(&canonical).expect("canonical json parses");
        assert_eq!(canonical, again.to_canonical_json());
    }
});
