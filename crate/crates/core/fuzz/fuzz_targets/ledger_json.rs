#![no_main]

use libfuzzer_sys::fuzz_target;

use causentropy::transfer::{self, EntropyLedger};

fuzz_target!(|data: &[u8]| {
    let Ok(ledger) = serde_json::from_slice::<EntropyLedger>(data) else { return };
    let _ = transfer::apply_transfer(&ledger);
    let _ = transfer::max_transfer(&ledger);
});
