//! Arbitrary text through the domain parser; printed domains must reparse
//! to the same value.
#![no_main]

use libfuzzer_sys::fuzz_target;
use nplan::pddl::parse_domain;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(domain) = parse_domain(text) else { return };
    let printed = domain.to_string();
    let again = parse_domain(&printed).expect("printed domain reparses");
    assert_eq!(domain, again);
});
