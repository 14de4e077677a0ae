//! Built-in PDDL fixtures and a generator for small delivery instances.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DELIVERY_DOMAIN: &str = include_str!("../fixtures/delivery-domain.pddl");
pub const DELIVERY_P1: &str = include_str!("../fixtures/delivery-p1.pddl");
pub const DELIVERY_CLOSURE: &str = include_str!("../fixtures/delivery-closure.pddl");
pub const DELIVERY_TWO_BOXES: &str = include_str!("../fixtures/delivery-two-boxes.pddl");
pub const DELIVERY_UNSOLVABLE: &str = include_str!("../fixtures/delivery-unsolvable.pddl");
pub const MATCHCELLAR_DOMAIN: &str = include_str!("../fixtures/matchcellar-domain.pddl");
pub const MATCHCELLAR_P1: &str = include_str!("../fixtures/matchcellar-p1.pddl");
pub const TRAP_DOMAIN: &str = include_str!("../fixtures/trap-domain.pddl");
pub const TRAP_P1: &str = include_str!("../fixtures/trap-p1.pddl");
pub const COURIER_DOMAIN: &str = include_str!("../fixtures/courier-domain.pddl");
pub const COURIER_P1: &str = include_str!("../fixtures/courier-p1.pddl");

/// Random connected delivery problem: a line of waypoints plus optional
/// extra roads, each box with a distinct random destination.
pub fn generate_delivery(seed: u64, max_waypoints: usize, max_boxes: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=max_waypoints.max(2));
    let boxes = rng.gen_range(1..=max_boxes.max(1));
    let wp: Vec<String> = (1..=n).map(|i| format!("w{i}")).collect();
    let mut edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    for i in 0..n {
        for j in i + 2..n {
            if rng.gen_bool(0.3) {
                edges.push((i, j));
            }
        }
    }
    let mut init = vec![format!("(at r1 {})", wp[rng.gen_range(0..n)]), "(free r1)".to_string()];
    for (a, b) in &edges {
        init.push(format!("(connected {} {})", wp[*a], wp[*b]));
        init.push(format!("(connected {} {})", wp[*b], wp[*a]));
    }
    let mut goal = Vec::new();
    for b in 1..=boxes {
        let mut spots: Vec<usize> = (0..n).collect();
        spots.shuffle(&mut rng);
        init.push(format!("(box-at b{b} {})", wp[spots[0]]));
        goal.push(format!("(box-at b{b} {})", wp[spots[1]]));
    }
    let box_names: Vec<String> = (1..=boxes).map(|b| format!("b{b}")).collect();
    format!(
        "(define (problem gen-{seed})\n  (:domain delivery)\n  (:objects r1 - robot {} - box {} - waypoint)\n  (:init {})\n  (:goal (and {})))\n",
        box_names.join(" "),
        wp.join(" "),
        init.join(" "),
        goal.join(" ")
    )
}
