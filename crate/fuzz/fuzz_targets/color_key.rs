#![no_main]

use libfuzzer_sys::fuzz_target;
use nplan::ccwl::ColorKey;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(key) = text.parse::<ColorKey>() {
        assert_eq!(key.to_string().parse::<ColorKey>().unwrap(), key);
    }
});
