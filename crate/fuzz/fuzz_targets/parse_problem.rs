//! Problems against the shipped domain, then grounding.
#![no_main]

use libfuzzer_sys::fuzz_target;
use nplan::fixtures::CCBLOCKSWORLD_DOMAIN;
use nplan::pddl::{parse_domain, parse_problem};
use nplan::task::ground;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let domain = parse_domain(CCBLOCKSWORLD_DOMAIN).unwrap();
    let Ok(problem) = parse_problem(text, &domain) else { return };
    let again = parse_problem(&problem.to_string(), &domain).expect("printed problem reparses");
    assert_eq!(problem, again);
    if problem.objects.len() <= 12 {
        if let Ok(task) = ground(&domain, &problem) {
            let _ = nplan::nilg::build_nilg(&task, &task.initial);
        }
    }
});
