//! Seeded instance generators for capacity-constrained Blocksworld, Ferry
//! and Spanner.
//!
//! Randomness comes from [`Lcg`], a fixed 64-bit linear congruential
//! generator, so identical specs give byte-identical files everywhere.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::fixtures::CCBLOCKSWORLD_DOMAIN;

/// `state <- state * 6364136223846793005 + 1442695040888963407 (mod 2^64)`,
/// starting from the seed. Each draw advances once and returns the high 32
/// bits. `below(n)` is `(draw * n) >> 32`; shuffles are Fisher-Yates from the
/// last index down, swapping `i` with `below(i + 1)`.
#[derive(Debug, Clone)]
pub struct Lcg(u64);

impl Lcg {
    pub const MULTIPLIER: u64 = 6364136223846793005;
    pub const INCREMENT: u64 = 1442695040888963407;

    pub fn new(seed: u64) -> Self {
        Lcg(seed)
    }

    pub fn next_u32(&mut self) -> u32 {
        self.0 = self.0.wrapping_mul(Self::MULTIPLIER).wrapping_add(Self::INCREMENT);
        (self.0 >> 32) as u32
    }

    /// Uniform-ish integer in `0..n`; `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0 && n <= u32::MAX as usize);
        ((u64::from(self.next_u32()) * n as u64) >> 32) as usize
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid generator size: {0}")]
pub struct GenError(pub String);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated {
    pub domain: String,
    pub problem: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "domain", rename_all = "lowercase")]
pub enum GeneratorSpec {
    Ccblocksworld { blocks: usize, bases: usize, capacity: usize, seed: u64 },
    Ferry { cars: usize, locations: usize, capacity: usize, seed: u64 },
    Spanner { spanners: usize, nuts: usize, locations: usize, seed: u64 },
}

impl GeneratorSpec {
    pub fn domain_name(&self) -> &'static str {
        match self {
            GeneratorSpec::Ccblocksworld { .. } => "ccblocksworld",
            GeneratorSpec::Ferry { .. } => "ferry",
            GeneratorSpec::Spanner { .. } => "spanner",
        }
    }

    pub fn problem_name(&self) -> String {
        match *self {
            GeneratorSpec::Ccblocksworld { blocks, bases, capacity, seed } => {
                format!("ccblocksworld-n{blocks}-b{bases}-c{capacity}-s{seed}")
            }
            GeneratorSpec::Ferry { cars, locations, capacity, seed } => {
                format!("ferry-c{cars}-l{locations}-k{capacity}-s{seed}")
            }
            GeneratorSpec::Spanner { spanners, nuts, locations, seed } => {
                format!("spanner-s{spanners}-n{nuts}-l{locations}-s{seed}")
            }
        }
    }

    pub fn generate(&self) -> Result<Generated, GenError> {
        match *self {
            GeneratorSpec::Ccblocksworld { blocks, bases, capacity, seed } => {
                gen_ccblocksworld(blocks, bases, capacity, seed)
            }
            GeneratorSpec::Ferry { cars, locations, capacity, seed } => gen_ferry(cars, locations, capacity, seed),
            GeneratorSpec::Spanner { spanners, nuts, locations, seed } => gen_spanner(spanners, nuts, locations, seed),
        }
    }
}

/// `{"instances": [{"file": ..., "spec": {...}}, ...]}`.
pub fn manifest_json(entries: &[(String, GeneratorSpec)]) -> serde_json::Value {
    let instances: Vec<_> =
        entries.iter().map(|(file, spec)| serde_json::json!({ "file": file, "spec": spec })).collect();
    serde_json::json!({ "instances": instances })
}

/// Towers listed bottom to top; each tower stands on one base.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tower {
    pub base: String,
    pub blocks: Vec<String>,
}

fn tower_atoms(out: &mut String, t: &Tower, with_above: bool) {
    let Some(top) = t.blocks.last() else { return };
    let _ = writeln!(out, "    (clear {top})");
    for (i, b) in t.blocks.iter().enumerate().rev() {
        let below = if i == 0 { &t.base } else { &t.blocks[i - 1] };
        let _ = writeln!(out, "    (on {b} {below})");
    }
    if with_above {
        for b in t.blocks.iter().rev() {
            let _ = writeln!(out, "    (above {b} {})", t.base);
        }
    }
}

/// Problem text in the layout of the shipped running example. Bases without
/// blocks in `init` are clear; capacities are `capacity - height`.
pub fn ccblocksworld_problem(
    name: &str,
    blocks: &[String],
    bases: &[String],
    capacity: &[usize],
    init: &[Tower],
    goal: &[Tower],
) -> String {
    let mut out = format!("(define (problem {name})\n  (:domain ccblocksworld)\n  (:objects\n");
    let _ = writeln!(out, "    {} - block", blocks.join(" "));
    let _ = writeln!(out, "    {} - base", bases.join(" "));
    out.push_str("  )\n  (:init\n    (arm_empty)\n");
    for (base, cap) in bases.iter().zip(capacity) {
        let height = init.iter().find(|t| &t.base == base).map_or(0, |t| t.blocks.len());
        let _ = writeln!(out, "    (= (capacity {base}) {})", cap - height);
    }
    for base in bases {
        if !init.iter().any(|t| &t.base == base && !t.blocks.is_empty()) {
            let _ = writeln!(out, "    (clear {base})");
        }
    }
    for t in init {
        tower_atoms(&mut out, t, true);
    }
    out.push_str("  )\n  (:goal (and\n");
    for t in goal {
        tower_atoms(&mut out, t, false);
    }
    out.push_str("  ))\n)\n");
    out
}

fn random_towers(rng: &mut Lcg, blocks: &[String], bases: &[String], capacity: usize) -> Vec<Tower> {
    let mut order: Vec<usize> = (0..blocks.len()).collect();
    rng.shuffle(&mut order);
    let mut towers: Vec<Tower> = bases.iter().map(|b| Tower { base: b.clone(), blocks: Vec::new() }).collect();
    for i in order {
        let open: Vec<usize> = (0..towers.len()).filter(|&t| towers[t].blocks.len() < capacity).collect();
        let t = open[rng.below(open.len())];
        towers[t].blocks.push(blocks[i].clone());
    }
    towers.retain(|t| !t.blocks.is_empty());
    towers
}

/// Random initial and goal towers over `n` blocks and `b` bases, each base
/// holding at most `capacity` blocks. Solvability is not guaranteed when
/// every base is full.
pub fn gen_ccblocksworld(n: usize, b: usize, capacity: usize, seed: u64) -> Result<Generated, GenError> {
    if n < 1 || b < 2 {
        return Err(GenError("ccblocksworld needs at least 1 block and 2 bases".into()));
    }
    if b * capacity < n {
        return Err(GenError(format!("{n} blocks do not fit on {b} bases of capacity {capacity}")));
    }
    let mut rng = Lcg::new(seed);
    let blocks: Vec<String> = (1..=n).map(|i| format!("b{i}")).collect();
    let bases: Vec<String> = (1..=b).map(|i| format!("base{i}")).collect();
    let init = random_towers(&mut rng, &blocks, &bases, capacity);
    let goal = random_towers(&mut rng, &blocks, &bases, capacity);
    let spec = GeneratorSpec::Ccblocksworld { blocks: n, bases: b, capacity, seed };
    Ok(Generated {
        domain: CCBLOCKSWORLD_DOMAIN.to_string(),
        problem: ccblocksworld_problem(&spec.problem_name(), &blocks, &bases, &vec![capacity; b], &init, &goal),
    })
}

pub const FERRY_DOMAIN: &str = "(define (domain ferry)
  (:requirements :strips :typing :numeric-fluents)
  (:types
    car location - object
  )
  (:predicates
    (at ?c - car ?l - location)
    (at-ferry ?l - location)
    (on ?c - car)
  )
  (:functions
    (capacity)
  )
  (:action sail
    :parameters (?from - location ?to - location)
    :precondition (at-ferry ?from)
    :effect (and
      (not (at-ferry ?from))
      (at-ferry ?to))
  )
  (:action board
    :parameters (?c - car ?l - location)
    :precondition (and
      (at ?c ?l)
      (at-ferry ?l)
      (>= (capacity) 1))
    :effect (and
      (not (at ?c ?l))
      (on ?c)
      (decrease (capacity) 1))
  )
  (:action debark
    :parameters (?c - car ?l - location)
    :precondition (and
      (on ?c)
      (at-ferry ?l))
    :effect (and
      (not (on ?c))
      (at ?c ?l)
      (increase (capacity) 1))
  )
)
";

/// Cars start at `car_at[i]` and must reach `goal_at[i]`; locations are 1-based.
pub fn ferry_problem(
    name: &str,
    locations: usize,
    capacity: usize,
    ferry_at: usize,
    car_at: &[usize],
    goal_at: &[usize],
) -> String {
    let cars: Vec<String> = (1..=car_at.len()).map(|i| format!("car{i}")).collect();
    let locs: Vec<String> = (1..=locations).map(|i| format!("loc{i}")).collect();
    let mut out = format!("(define (problem {name})\n  (:domain ferry)\n  (:objects\n");
    let _ = writeln!(out, "    {} - car", cars.join(" "));
    let _ = writeln!(out, "    {} - location", locs.join(" "));
    out.push_str("  )\n  (:init\n");
    let _ = writeln!(out, "    (at-ferry loc{ferry_at})");
    let _ = writeln!(out, "    (= (capacity) {capacity})");
    for (c, l) in cars.iter().zip(car_at) {
        let _ = writeln!(out, "    (at {c} loc{l})");
    }
    out.push_str("  )\n  (:goal (and\n");
    for (c, l) in cars.iter().zip(goal_at) {
        let _ = writeln!(out, "    (at {c} loc{l})");
    }
    out.push_str("  ))\n)\n");
    out
}

pub fn gen_ferry(cars: usize, locations: usize, capacity: usize, seed: u64) -> Result<Generated, GenError> {
    if cars < 1 || locations < 2 || capacity < 1 {
        return Err(GenError("ferry needs at least 1 car, 2 locations and capacity 1".into()));
    }
    let mut rng = Lcg::new(seed);
    let ferry_at = rng.below(locations) + 1;
    let car_at: Vec<usize> = (0..cars).map(|_| rng.below(locations) + 1).collect();
    let goal_at: Vec<usize> = (0..cars).map(|_| rng.below(locations) + 1).collect();
    let spec = GeneratorSpec::Ferry { cars, locations, capacity, seed };
    Ok(Generated {
        domain: FERRY_DOMAIN.to_string(),
        problem: ferry_problem(&spec.problem_name(), locations, capacity, ferry_at, &car_at, &goal_at),
    })
}

pub const SPANNER_DOMAIN: &str = "(define (domain spanner)
  (:requirements :strips :typing :numeric-fluents)
  (:types
    location spanner nut - object
  )
  (:predicates
    (at-man ?l - location)
    (at ?s - spanner ?l - location)
    (nut-at ?n - nut ?l - location)
    (link ?from - location ?to - location)
    (loose ?n - nut)
    (tightened ?n - nut)
  )
  (:functions
    (carried)
    (remaining)
  )
  (:action walk
    :parameters (?from - location ?to - location)
    :precondition (and
      (at-man ?from)
      (link ?from ?to))
    :effect (and
      (not (at-man ?from))
      (at-man ?to))
  )
  (:action pickup
    :parameters (?s - spanner ?l - location)
    :precondition (and
      (at-man ?l)
      (at ?s ?l))
    :effect (and
      (not (at ?s ?l))
      (increase (carried) 1))
  )
  (:action tighten
    :parameters (?n - nut ?l - location)
    :precondition (and
      (at-man ?l)
      (nut-at ?n ?l)
      (loose ?n)
      (>= (carried) 1))
    :effect (and
      (not (loose ?n))
      (tightened ?n)
      (decrease (carried) 1)
      (decrease (remaining) 1))
  )
)
";

/// Hallway `loc1 -> ... -> loc<l>`; spanner `i` lies at `spanner_at[i]`
/// (1-based), all nuts at the last location, the walker starts at `loc1`.
pub fn spanner_problem(name: &str, locations: usize, spanner_at: &[usize], nuts: usize) -> String {
    let spanners: Vec<String> = (1..=spanner_at.len()).map(|i| format!("spanner{i}")).collect();
    let nut_names: Vec<String> = (1..=nuts).map(|i| format!("nut{i}")).collect();
    let locs: Vec<String> = (1..=locations).map(|i| format!("loc{i}")).collect();
    let mut out = format!("(define (problem {name})\n  (:domain spanner)\n  (:objects\n");
    let _ = writeln!(out, "    {} - location", locs.join(" "));
    let _ = writeln!(out, "    {} - spanner", spanners.join(" "));
    let _ = writeln!(out, "    {} - nut", nut_names.join(" "));
    out.push_str("  )\n  (:init\n    (at-man loc1)\n");
    let _ = writeln!(out, "    (= (carried) 0)");
    let _ = writeln!(out, "    (= (remaining) {nuts})");
    for w in locs.windows(2) {
        let _ = writeln!(out, "    (link {} {})", w[0], w[1]);
    }
    for (s, l) in spanners.iter().zip(spanner_at) {
        let _ = writeln!(out, "    (at {s} loc{l})");
    }
    for n in &nut_names {
        let _ = writeln!(out, "    (nut-at {n} loc{locations})");
        let _ = writeln!(out, "    (loose {n})");
    }
    out.push_str("  )\n  (:goal (and\n");
    for n in &nut_names {
        let _ = writeln!(out, "    (tightened {n})");
    }
    out.push_str("    (= (remaining) 0)\n  ))\n)\n");
    out
}

/// Spanners are scattered over every location but the last.
pub fn gen_spanner(spanners: usize, nuts: usize, locations: usize, seed: u64) -> Result<Generated, GenError> {
    if nuts < 1 || locations < 2 {
        return Err(GenError("spanner needs at least 1 nut and 2 locations".into()));
    }
    if spanners < nuts {
        return Err(GenError(format!("{spanners} spanners cannot fix {nuts} nuts")));
    }
    let mut rng = Lcg::new(seed);
    let spanner_at: Vec<usize> = (0..spanners).map(|_| rng.below(locations - 1) + 1).collect();
    let spec = GeneratorSpec::Spanner { spanners, nuts, locations, seed };
    Ok(Generated {
        domain: SPANNER_DOMAIN.to_string(),
        problem: spanner_problem(&spec.problem_name(), locations, &spanner_at, nuts),
    })
}

#[cfg(test)]
mod tests {
    use std::collections::{HashMap, VecDeque};

    use super::*;
    use crate::fixtures::RUNNING_EXAMPLE;
    use crate::pddl::{parse_domain, parse_problem};
    use crate::search::{astar, gbfs, Blind, Limits, Outcome};
    use crate::task::{ground, GroundTask, State};

    fn task(g: &Generated) -> GroundTask {
        let d = parse_domain(&g.domain).unwrap();
        ground(&d, &parse_problem(&g.problem, &d).unwrap()).unwrap()
    }

    fn bfs_depth(task: &GroundTask) -> Option<usize> {
        let mut dist = HashMap::from([(task.initial.clone(), 0usize)]);
        let mut queue = VecDeque::from([task.initial.clone()]);
        while let Some(s) = queue.pop_front() {
            let d = dist[&s];
            if task.is_goal(&s) {
                return Some(d);
            }
            for (_, n) in task.successors(&s) {
                if !dist.contains_key(&n) {
                    dist.insert(n.clone(), d + 1);
                    queue.push_back(n);
                }
            }
        }
        None
    }

    #[test]
    fn lcg_reference_values() {
        let mut r = Lcg::new(0);
        // First state is the increment itself.
        assert_eq!(r.next_u32(), (Lcg::INCREMENT >> 32) as u32);
        let mut a = Lcg::new(42);
        let mut b = Lcg::new(42);
        let xs: Vec<usize> = (0..100).map(|_| a.below(7)).collect();
        assert!(xs.iter().all(|&x| x < 7));
        assert_eq!(xs, (0..100).map(|_| b.below(7)).collect::<Vec<_>>());
        let mut v: Vec<u32> = (0..10).collect();
        Lcg::new(1).shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());
    }

    fn tower(base: &str, blocks: &[&str]) -> Tower {
        Tower { base: base.into(), blocks: blocks.iter().map(|s| s.to_string()).collect() }
    }

    #[test]
    fn renderer_reproduces_the_running_example() {
        let names = |s: &str| s.split(' ').map(String::from).collect::<Vec<_>>();
        let text = ccblocksworld_problem(
            "running-example",
            &names("a b c d e f"),
            &names("i j k"),
            &[3, 3, 3],
            &[tower("i", &["a"]), tower("j", &["b", "d", "f"]), tower("k", &["c", "e"])],
            &[tower("i", &["b", "a"])],
        );
        assert_eq!(text, RUNNING_EXAMPLE);
    }

    #[test]
    fn ccblocksworld_generation() {
        let g = gen_ccblocksworld(6, 3, 3, 7).unwrap();
        assert_eq!(g, gen_ccblocksworld(6, 3, 3, 7).unwrap());
        assert_ne!(g.problem, gen_ccblocksworld(6, 3, 3, 8).unwrap().problem);
        let t = task(&g);
        assert_eq!(t.objects.len(), 9);
        let total: f64 = t.initial.values().iter().sum();
        assert_eq!(total, 9.0 - 6.0);
        assert!(gen_ccblocksworld(7, 3, 2, 0).is_err());
        assert!(gen_ccblocksworld(1, 1, 5, 0).is_err());
    }

    #[test]
    fn single_block_is_solved_in_two_steps() {
        for seed in 0..10 {
            let t = task(&gen_ccblocksworld(1, 2, 1, seed).unwrap());
            assert!(bfs_depth(&t).unwrap() <= 2);
        }
    }

    #[test]
    fn small_blocks_optimal_cost_matches_bfs() {
        for seed in 0..5 {
            let t = task(&gen_ccblocksworld(3, 2, 2, seed).unwrap());
            let depth = bfs_depth(&t);
            match astar(&t, &Blind, Limits::default()).outcome {
                Outcome::Plan { cost, .. } => assert_eq!(Some(cost as usize), depth),
                Outcome::Unsolvable => assert_eq!(depth, None),
                Outcome::ResourceLimit => panic!("limit"),
            }
        }
    }

    #[test]
    fn ferry_single_car_plan_lengths() {
        let mut seen = std::collections::BTreeSet::new();
        for ferry_at in 1..=2 {
            for car_at in 1..=2 {
                for goal_at in 1..=2 {
                    let g = Generated {
                        domain: FERRY_DOMAIN.into(),
                        problem: ferry_problem("f", 2, 1, ferry_at, &[car_at], &[goal_at]),
                    };
                    seen.insert(bfs_depth(&task(&g)).unwrap());
                }
            }
        }
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), [0, 3, 4]);
    }

    #[test]
    fn ferry_conserves_capacity_plus_cargo() {
        let t = task(&gen_ferry(3, 3, 2, 5).unwrap());
        let load = |s: &State| {
            let on = (0..t.num_props()).filter(|&i| s.holds(i) && &*t.atoms[i].symbol == "on").count();
            s.value(0) + on as f64
        };
        let start = load(&t.initial);
        let mut frontier = vec![t.initial.clone()];
        let mut seen = std::collections::HashSet::new();
        while let Some(s) = frontier.pop() {
            assert_eq!(load(&s), start);
            for (_, n) in t.successors(&s) {
                if seen.insert(n.clone()) {
                    frontier.push(n);
                }
            }
        }
        assert!(seen.len() > 10);
        assert_eq!(gen_ferry(3, 3, 2, 5).unwrap(), gen_ferry(3, 3, 2, 5).unwrap());
        assert!(gen_ferry(0, 2, 1, 0).is_err());
    }

    #[test]
    fn spanner_deadends_and_optimal_cost() {
        // Walking past the only spanner leaves the nut unfixable.
        let trap = Generated { domain: SPANNER_DOMAIN.into(), problem: spanner_problem("s", 3, &[2], 1) };
        let t = task(&trap);
        let walk = |from: &str, to: &str| t.action_by_name(&format!("(walk {from} {to})")).unwrap();
        let s = t.apply(&t.apply(&t.initial, walk("loc1", "loc2")).unwrap(), walk("loc2", "loc3")).unwrap();
        let mut residual = t.clone();
        residual.initial = s;
        assert_eq!(gbfs(&residual, &Blind, Limits::default()).outcome, Outcome::Unsolvable);

        let easy = Generated { domain: SPANNER_DOMAIN.into(), problem: spanner_problem("s", 4, &[1, 1], 2) };
        assert_eq!(bfs_depth(&task(&easy)), Some(3 + 2 + 2));
        assert!(gen_spanner(1, 2, 3, 0).is_err());
        let g = gen_spanner(3, 2, 4, 9).unwrap();
        assert!(astar(&task(&g), &Blind, Limits::default()).plan().is_some());
    }

    #[test]
    fn manifest_lists_specs() {
        let spec = GeneratorSpec::Ferry { cars: 2, locations: 3, capacity: 1, seed: 4 };
        let m = manifest_json(&[("problem01.pddl".into(), spec)]);
        assert_eq!(m["instances"][0]["spec"]["domain"], "ferry");
        assert_eq!(m["instances"][0]["spec"]["cars"], 2);
        let back: GeneratorSpec = serde_json::from_value(m["instances"][0]["spec"].clone()).unwrap();
        assert_eq!(back, spec);
        assert_eq!(spec.generate().unwrap(), gen_ferry(2, 3, 1, 4).unwrap());
    }
}
