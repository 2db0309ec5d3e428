//! Scripted agent policies.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::games::{Action, Counter, Hunt, World};
use super::grid::{Dir, Pos};
use super::AgentPersona;
use crate::trace::Outcome;

/// Cells within this Manhattan distance of a threat are off limits to `cautious`.
pub const CAUTION_RADIUS: u32 = 2;

pub fn choose_action(
    persona: AgentPersona,
    world: &World,
    tick: u64,
    rng: &mut ChaCha8Rng,
) -> Action {
    match persona {
        AgentPersona::DoNothing => Action::Noop,
        AgentPersona::RandomWalk => random_walk(world, rng),
        AgentPersona::GreedyScore => greedy(world, tick, rng),
        AgentPersona::Rusher => rush(world),
        AgentPersona::Hunter => hunt(world, tick),
        AgentPersona::Cautious => cautious(world),
    }
}

fn random_walk(world: &World, rng: &mut ChaCha8Rng) -> Action {
    let player = world.player();
    let legal: Vec<Dir> = Dir::ALL
        .into_iter()
        .filter(|&d| world.walkable(player.step(d)))
        .collect();
    legal.choose(rng).map_or(Action::Noop, |&d| Action::Move(d))
}

/// One-step lookahead on the player's own action; ties broken at random.
fn greedy(world: &World, tick: u64, rng: &mut ChaCha8Rng) -> Action {
    let mut best: Vec<Action> = Vec::new();
    let mut best_value = f64::NEG_INFINITY;
    for &action in world.actions() {
        let mut probe = world.clone();
        let mut scratch = Counter::new();
        let value = match probe.apply_player(action, tick, &mut scratch) {
            Some(Outcome::Win) => f64::INFINITY,
            Some(Outcome::Loss) => f64::MIN,
            _ => (probe.score() - world.score()) as f64,
        };
        if value > best_value {
            best_value = value;
            best.clear();
        }
        if value == best_value {
            best.push(action);
        }
    }
    best.choose(rng).copied().unwrap_or(Action::Noop)
}

fn rush(world: &World) -> Action {
    world
        .grid()
        .first_step_towards(world.player(), &world.targets(), |p| world.walkable(p))
        .map_or(Action::Noop, Action::Move)
}

fn min_threat_distance(p: Pos, threats: &[Pos]) -> u32 {
    threats
        .iter()
        .map(|t| t.manhattan(p))
        .min()
        .unwrap_or(u32::MAX)
}

fn cautious(world: &World) -> Action {
    let threats = world.threats();
    let safe = |p: Pos| world.walkable(p) && min_threat_distance(p, &threats) > CAUTION_RADIUS;
    let goals: Vec<Pos> = world.targets().into_iter().filter(|&p| safe(p)).collect();
    let player = world.player();
    if let Some(dir) = world.grid().first_step_towards(player, &goals, safe) {
        return Action::Move(dir);
    }
    // No safe route: back away if currently exposed, otherwise hold still.
    let here = min_threat_distance(player, &threats);
    if here > CAUTION_RADIUS {
        return Action::Noop;
    }
    Dir::ALL
        .into_iter()
        .map(|d| (d, player.step(d)))
        .filter(|&(_, p)| world.walkable(p) && min_threat_distance(p, &threats) > here)
        .max_by_key(|&(d, p)| (min_threat_distance(p, &threats), std::cmp::Reverse(d)))
        .map_or(Action::Noop, |(d, _)| Action::Move(d))
}

fn hunt(world: &World, tick: u64) -> Action {
    match world.hunt() {
        Hunt::Strike(prey) => {
            let player = world.player();
            if prey.contains(&player.step(world.facing())) {
                return Action::Attack;
            }
            let Some(dir) = world.grid().first_step_to_pose(
                player,
                world.facing(),
                |p| world.walkable(p),
                |p| prey.contains(&p),
                |p, d| prey.contains(&p.step(d)),
            ) else {
                return rush(world);
            };
            // Only close in on a tick when monsters hold still, so the swing
            // lands before they can step onto the player.
            let next = player.step(dir);
            let closing = prey.iter().any(|m| m.manhattan(next) <= 1);
            if closing && world.enemies_move_after(tick) {
                Action::Noop
            } else {
                Action::Move(dir)
            }
        }
        Hunt::Chase(prey) => world
            .grid()
            .first_step_towards(world.player(), &prey, |p| world.walkable(p))
            .map_or(Action::Noop, Action::Move),
        Hunt::Rush => rush(world),
        Hunt::Cautious => cautious(world),
    }
}
