//! The capacity-constrained Blocksworld running example shipped with the crate.

use crate::pddl::{parse_domain, parse_problem};
use crate::task::{ground, GroundTask};

pub const CCBLOCKSWORLD_DOMAIN: &str = include_str!("../fixtures/ccblocksworld/domain.pddl");
pub const RUNNING_EXAMPLE: &str = include_str!("../fixtures/ccblocksworld/running-example.pddl");
/// Optimal 16-step plan for [`RUNNING_EXAMPLE`].
pub const RUNNING_EXAMPLE_PLAN: &str = include_str!("../fixtures/ccblocksworld/optimal.plan");
/// 10-step plan that ignores base capacities; invalid on [`RUNNING_EXAMPLE`].
pub const RUNNING_EXAMPLE_UNCAPACITATED_PLAN: &str = include_str!("../fixtures/ccblocksworld/uncapacitated.plan");

pub fn running_example_task() -> GroundTask {
    let domain = parse_domain(CCBLOCKSWORLD_DOMAIN).expect("fixture domain parses");
    let problem = parse_problem(RUNNING_EXAMPLE, &domain).expect("fixture problem parses");
    ground(&domain, &problem).expect("fixture grounds")
}
