#![no_main]

use std::str::FromStr;

use cvkey::job::JobSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(job) = JobSpec::from_str(text) {
        let shown = job.to_string();
        let again = JobSpec::from_str(&shown).expect("job line must parse");
        assert_eq!(again.to_string(), shown);
    }
});
