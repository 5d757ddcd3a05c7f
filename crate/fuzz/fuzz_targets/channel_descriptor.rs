#![no_main]

use std::str::FromStr;

use cvkey_core::ChannelSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = ChannelSpec::from_str(text) {
        // printed descriptors parse back to the same channel
        let shown = spec.to_string();
        let again = ChannelSpec::from_str(&shown).expect("display output must parse");
        assert_eq!(again.to_string(), shown);
    }
});
