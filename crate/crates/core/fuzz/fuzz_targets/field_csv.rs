#![no_main]

use libfuzzer_sys::fuzz_target;

use causentropy::horizon::SampledField;

fuzz_target!(|data: &[u8]| {
    if let Ok(field) = SampledField::from_csv(data) {
        assert_eq!(field.values().len(), field.axes().iter().map(|a| a.count).product::<usize>());
        let _ = field.integrate();
    }
});
