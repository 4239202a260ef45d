#![no_main]

use libfuzzer_sys::fuzz_target;
use nplan::task::{format_plan, parse_plan};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(plan) = parse_plan(text) else { return };
    // Canonical plans are a fixed point of format then parse.
    assert_eq!(parse_plan(&format_plan(&plan, None)).unwrap(), plan);
    let task = nplan::fixtures::running_example_task();
    let _ = task.validate_plan(&plan);
});
