//! Rules of the three surrogate games.
//!
//! Every tick the player's action is applied first, then the world advances
//! (monsters, butterflies, ghosts). Contact is checked after both phases, so a
//! player walking into an enemy and an enemy walking into the player are
//! handled alike.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::grid::{Dir, Grid, Pos};
use super::{ArenaError, GameKind, GameSpec};
use crate::trace::Outcome;

/// Ticks between two executed sword swings in KeyQuest.
pub const SWORD_COOLDOWN: u64 = 3;
/// KeyQuest monsters step once every this many ticks.
pub const MONSTER_STEP_PERIOD: u64 = 2;
/// PelletMaze ghosts step once every this many ticks.
pub const GHOST_STEP_PERIOD: u64 = 2;
/// Probability that a ghost takes a random step instead of chasing.
pub const GHOST_DEVIATION: f64 = 0.2;
/// Ticks of ghost immunity granted by a power pellet.
pub const POWER_TICKS: u32 = 20;

pub mod mechanic {
    pub const MOVE: &str = "move";
    pub const PRESS_ATTACK: &str = "press_attack";
    pub const ATTACK_EXECUTED: &str = "attack_executed";
    pub const SLAY_MONSTER: &str = "slay_monster";
    pub const COLLECT_KEY: &str = "collect_key";
    pub const UNLOCK_DOOR: &str = "unlock_door";
    pub const PLAYER_SLAIN: &str = "player_slain";
    pub const CATCH_BUTTERFLY: &str = "catch_butterfly";
    pub const COCOON_OPENED: &str = "cocoon_opened";
    pub const BUTTERFLY_SPAWNED: &str = "butterfly_spawned";
    pub const EAT_PELLET: &str = "eat_pellet";
    pub const EAT_POWER_PELLET: &str = "eat_power_pellet";
    pub const EAT_FRUIT: &str = "eat_fruit";
    pub const EAT_GHOST: &str = "eat_ghost";
    pub const EATEN_BY_GHOST: &str = "eaten_by_ghost";
}

use mechanic::*;

pub type Counter = BTreeMap<&'static str, u64>;

fn bump(counts: &mut Counter, m: &'static str) {
    *counts.entry(m).or_insert(0) += 1;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Noop,
    Move(Dir),
    Attack,
}

const MOVE_ACTIONS: [Action; 5] = [
    Action::Noop,
    Action::Move(Dir::Up),
    Action::Move(Dir::Down),
    Action::Move(Dir::Left),
    Action::Move(Dir::Right),
];
const ATTACK_ACTIONS: [Action; 6] = [
    Action::Noop,
    Action::Move(Dir::Up),
    Action::Move(Dir::Down),
    Action::Move(Dir::Left),
    Action::Move(Dir::Right),
    Action::Attack,
];

/// What the hunter persona should do in the current state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Hunt {
    /// Line up facing one of these cells and swing.
    Strike(Vec<Pos>),
    /// Walk onto one of these cells.
    Chase(Vec<Pos>),
    Rush,
    Cautious,
}

struct Layout {
    grid: Grid,
    marks: BTreeMap<char, Vec<Pos>>,
}

impl Layout {
    fn parse(rows: &[String]) -> Result<Layout, ArenaError> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        if height == 0 || width == 0 {
            return Err(ArenaError::InvalidSpec("empty grid".into()));
        }
        if height > 15 || width > 15 {
            return Err(ArenaError::InvalidSpec(format!(
                "grid {width}x{height} exceeds 15x15"
            )));
        }
        let mut walls = Vec::with_capacity(width * height);
        let mut marks: BTreeMap<char, Vec<Pos>> = BTreeMap::new();
        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(ArenaError::InvalidSpec(format!(
                    "row {y} is not {width} cells wide"
                )));
            }
            for (x, c) in row.chars().enumerate() {
                walls.push(c == '#');
                if c != '#' {
                    marks
                        .entry(c)
                        .or_default()
                        .push(Pos::new(x as i32, y as i32));
                }
            }
        }
        Ok(Layout {
            grid: Grid::new(width, height, walls),
            marks,
        })
    }

    fn take(&mut self, c: char) -> Vec<Pos> {
        self.marks.remove(&c).unwrap_or_default()
    }

    fn exactly_one(&mut self, c: char, what: &str) -> Result<Pos, ArenaError> {
        match self.take(c).as_slice() {
            [p] => Ok(*p),
            other => Err(ArenaError::InvalidSpec(format!(
                "expected exactly one {what}, found {}",
                other.len()
            ))),
        }
    }

    fn at_least(&mut self, c: char, n: usize, what: &str) -> Result<Vec<Pos>, ArenaError> {
        let found = self.take(c);
        if found.len() < n {
            return Err(ArenaError::InvalidSpec(format!(
                "expected at least {n} {what}, found {}",
                found.len()
            )));
        }
        Ok(found)
    }

    fn finish(self) -> Result<Grid, ArenaError> {
        if let Some(c) = self.marks.keys().next() {
            return Err(ArenaError::InvalidSpec(format!("unexpected cell `{c}`")));
        }
        Ok(self.grid)
    }
}

#[derive(Debug, Clone)]
pub struct KeyQuest {
    grid: Grid,
    player: Pos,
    facing: Dir,
    key: Option<Pos>,
    door: Pos,
    monsters: Vec<Pos>,
    last_swing: Option<u64>,
    score: i64,
}

impl KeyQuest {
    fn from_layout(mut layout: Layout) -> Result<Self, ArenaError> {
        let player = layout.exactly_one('A', "player start")?;
        let key = layout.exactly_one('K', "key")?;
        let door = layout.exactly_one('D', "door")?;
        let monsters = layout.take('M');
        layout.take('.');
        Ok(KeyQuest {
            grid: layout.finish()?,
            player,
            facing: Dir::Down,
            key: Some(key),
            door,
            monsters,
            last_swing: None,
            score: 0,
        })
    }

    fn walkable(&self, p: Pos) -> bool {
        self.grid.is_floor(p) && (p != self.door || self.key.is_none())
    }

    fn apply_player(&mut self, action: Action, tick: u64, counts: &mut Counter) -> Option<Outcome> {
        match action {
            Action::Noop => None,
            Action::Move(dir) => {
                self.facing = dir;
                let target = self.player.step(dir);
                if !self.walkable(target) {
                    return None;
                }
                self.player = target;
                bump(counts, MOVE);
                if self.key == Some(target) {
                    self.key = None;
                    self.score += 1;
                    bump(counts, COLLECT_KEY);
                }
                if target == self.door {
                    self.score += 10;
                    bump(counts, UNLOCK_DOOR);
                    return Some(Outcome::Win);
                }
                if self.monsters.contains(&target) {
                    bump(counts, PLAYER_SLAIN);
                    return Some(Outcome::Loss);
                }
                None
            }
            Action::Attack => {
                bump(counts, PRESS_ATTACK);
                let ready = self
                    .last_swing
                    .is_none_or(|t| tick.saturating_sub(t) >= SWORD_COOLDOWN);
                if ready {
                    self.last_swing = Some(tick);
                    bump(counts, ATTACK_EXECUTED);
                    let struck = self.player.step(self.facing);
                    if let Some(i) = self.monsters.iter().position(|&m| m == struck) {
                        self.monsters.remove(i);
                        self.score += 2;
                        bump(counts, SLAY_MONSTER);
                    }
                }
                None
            }
        }
    }

    fn advance(
        &mut self,
        tick: u64,
        rng: &mut ChaCha8Rng,
        counts: &mut Counter,
    ) -> Option<Outcome> {
        if tick.is_multiple_of(MONSTER_STEP_PERIOD) {
            for i in 0..self.monsters.len() {
                let dir = *Dir::ALL.choose(rng).expect("non-empty");
                let target = self.monsters[i].step(dir);
                if self.grid.is_floor(target)
                    && target != self.door
                    && !self.monsters.contains(&target)
                {
                    self.monsters[i] = target;
                }
            }
        }
        if self.monsters.contains(&self.player) {
            bump(counts, PLAYER_SLAIN);
            return Some(Outcome::Loss);
        }
        None
    }

    pub fn monsters(&self) -> &[Pos] {
        &self.monsters
    }

    pub fn has_key(&self) -> bool {
        self.key.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct ButterGrid {
    grid: Grid,
    player: Pos,
    facing: Dir,
    butterflies: Vec<Pos>,
    /// Cocoon cell and whether it is still closed.
    cocoons: Vec<(Pos, bool)>,
    score: i64,
}

impl ButterGrid {
    fn from_layout(mut layout: Layout) -> Result<Self, ArenaError> {
        let player = layout.exactly_one('A', "player start")?;
        let cocoons = layout.at_least('C', 2, "cocoons")?;
        let butterflies = layout.at_least('B', 1, "butterfly")?;
        layout.take('.');
        Ok(ButterGrid {
            grid: layout.finish()?,
            player,
            facing: Dir::Down,
            butterflies,
            cocoons: cocoons.into_iter().map(|p| (p, true)).collect(),
            score: 0,
        })
    }

    fn closed_cocoons(&self) -> impl Iterator<Item = Pos> + '_ {
        self.cocoons.iter().filter(|c| c.1).map(|c| c.0)
    }

    fn catch_at_player(&mut self, counts: &mut Counter) {
        let before = self.butterflies.len();
        let player = self.player;
        self.butterflies.retain(|&b| b != player);
        for _ in self.butterflies.len()..before {
            self.score += 2;
            bump(counts, CATCH_BUTTERFLY);
        }
    }

    fn settle(&self) -> Option<Outcome> {
        if self.closed_cocoons().next().is_none() {
            Some(Outcome::Loss)
        } else if self.butterflies.is_empty() {
            Some(Outcome::Win)
        } else {
            None
        }
    }

    fn apply_player(&mut self, action: Action, counts: &mut Counter) -> Option<Outcome> {
        if let Action::Move(dir) = action {
            self.facing = dir;
            let target = self.player.step(dir);
            if self.grid.is_floor(target) {
                self.player = target;
                bump(counts, MOVE);
                self.catch_at_player(counts);
            }
        }
        self.settle()
    }

    fn advance(&mut self, rng: &mut ChaCha8Rng, counts: &mut Counter) -> Option<Outcome> {
        let mut moved = Vec::with_capacity(self.butterflies.len());
        let mut spawned = Vec::new();
        for b in std::mem::take(&mut self.butterflies) {
            let dir = *Dir::ALL.choose(rng).expect("non-empty");
            let target = b.step(dir);
            let next = if self.grid.is_floor(target) {
                target
            } else {
                b
            };
            if next == self.player {
                self.score += 2;
                bump(counts, CATCH_BUTTERFLY);
                continue;
            }
            if let Some(cocoon) = self.cocoons.iter_mut().find(|c| c.1 && c.0 == next) {
                cocoon.1 = false;
                bump(counts, COCOON_OPENED);
                bump(counts, BUTTERFLY_SPAWNED);
                spawned.push(next);
            }
            moved.push(next);
        }
        moved.extend(spawned);
        self.butterflies = moved;
        self.settle()
    }

    /// The butterfly closest to any closed cocoon.
    fn most_threatening(&self) -> Option<Pos> {
        self.butterflies.iter().copied().min_by_key(|b| {
            let d = self
                .closed_cocoons()
                .map(|c| c.manhattan(*b))
                .min()
                .unwrap_or(u32::MAX);
            (d, *b)
        })
    }

    pub fn butterflies(&self) -> &[Pos] {
        &self.butterflies
    }

    pub fn closed_cocoon_count(&self) -> usize {
        self.closed_cocoons().count()
    }
}

#[derive(Debug, Clone)]
pub struct PelletMaze {
    grid: Grid,
    player: Pos,
    facing: Dir,
    pellets: BTreeSet<Pos>,
    power: BTreeSet<Pos>,
    fruit: Option<Pos>,
    ghosts: Vec<Pos>,
    home: Pos,
    invulnerable: u32,
    score: i64,
}

impl PelletMaze {
    fn from_layout(mut layout: Layout) -> Result<Self, ArenaError> {
        let player = layout.exactly_one('A', "player start")?;
        let home = layout.exactly_one('H', "ghost home")?;
        let ghosts = layout.at_least('G', 1, "ghost")?;
        let power: BTreeSet<Pos> = layout
            .at_least('O', 1, "power pellet")?
            .into_iter()
            .collect();
        let fruit = layout.take('F').first().copied();
        let pellets: BTreeSet<Pos> = layout.at_least('.', 1, "pellet")?.into_iter().collect();
        // Floor without a pellet.
        layout.take('_');
        Ok(PelletMaze {
            grid: layout.finish()?,
            player,
            facing: Dir::Down,
            pellets,
            power,
            fruit,
            ghosts,
            home,
            invulnerable: 0,
            score: 0,
        })
    }

    fn contact(&mut self, counts: &mut Counter) -> Option<Outcome> {
        for i in 0..self.ghosts.len() {
            if self.ghosts[i] != self.player {
                continue;
            }
            if self.invulnerable > 0 {
                self.ghosts[i] = self.home;
                self.score += 20;
                bump(counts, EAT_GHOST);
            } else {
                bump(counts, EATEN_BY_GHOST);
                return Some(Outcome::Loss);
            }
        }
        None
    }

    fn apply_player(&mut self, action: Action, counts: &mut Counter) -> Option<Outcome> {
        if let Action::Move(dir) = action {
            self.facing = dir;
            let target = self.player.step(dir);
            if self.grid.is_floor(target) {
                self.player = target;
                bump(counts, MOVE);
                if self.pellets.remove(&target) {
                    self.score += 1;
                    bump(counts, EAT_PELLET);
                }
                if self.power.remove(&target) {
                    self.score += 5;
                    self.invulnerable = POWER_TICKS;
                    bump(counts, EAT_POWER_PELLET);
                }
                if self.fruit == Some(target) {
                    self.fruit = None;
                    self.score += 10;
                    bump(counts, EAT_FRUIT);
                }
            }
        }
        if let Some(outcome) = self.contact(counts) {
            return Some(outcome);
        }
        if self.pellets.is_empty() && self.power.is_empty() {
            return Some(Outcome::Win);
        }
        None
    }

    fn advance(
        &mut self,
        tick: u64,
        rng: &mut ChaCha8Rng,
        counts: &mut Counter,
    ) -> Option<Outcome> {
        if tick.is_multiple_of(GHOST_STEP_PERIOD) {
            let dist = self.grid.distances(self.player, |p| self.grid.is_floor(p));
            for i in 0..self.ghosts.len() {
                let g = self.ghosts[i];
                let options: Vec<Pos> = Dir::ALL
                    .iter()
                    .map(|&d| g.step(d))
                    .filter(|&p| self.grid.is_floor(p))
                    .collect();
                if options.is_empty() {
                    continue;
                }
                self.ghosts[i] = if rng.gen_bool(GHOST_DEVIATION) {
                    *options.choose(rng).expect("non-empty")
                } else {
                    *options
                        .iter()
                        .min_by_key(|&&p| self.grid.distance_at(&dist, p))
                        .expect("non-empty")
                };
            }
        }
        let outcome = self.contact(counts);
        self.invulnerable = self.invulnerable.saturating_sub(1);
        outcome
    }

    pub fn invulnerable_ticks(&self) -> u32 {
        self.invulnerable
    }

    pub fn ghosts(&self) -> &[Pos] {
        &self.ghosts
    }
}

/// Mutable state of one running episode.
#[derive(Debug, Clone)]
pub enum World {
    KeyQuest(KeyQuest),
    ButterGrid(ButterGrid),
    PelletMaze(PelletMaze),
}

impl World {
    pub fn from_spec(spec: &GameSpec) -> Result<World, ArenaError> {
        let layout = Layout::parse(&spec.layout)?;
        let world = match spec.game {
            GameKind::KeyQuest => World::KeyQuest(KeyQuest::from_layout(layout)?),
            GameKind::ButterGrid => World::ButterGrid(ButterGrid::from_layout(layout)?),
            GameKind::PelletMaze => World::PelletMaze(PelletMaze::from_layout(layout)?),
        };
        Ok(world)
    }

    pub fn grid(&self) -> &Grid {
        match self {
            World::KeyQuest(g) => &g.grid,
            World::ButterGrid(g) => &g.grid,
            World::PelletMaze(g) => &g.grid,
        }
    }

    pub fn player(&self) -> Pos {
        match self {
            World::KeyQuest(g) => g.player,
            World::ButterGrid(g) => g.player,
            World::PelletMaze(g) => g.player,
        }
    }

    pub fn facing(&self) -> Dir {
        match self {
            World::KeyQuest(g) => g.facing,
            World::ButterGrid(g) => g.facing,
            World::PelletMaze(g) => g.facing,
        }
    }

    pub fn score(&self) -> i64 {
        match self {
            World::KeyQuest(g) => g.score,
            World::ButterGrid(g) => g.score,
            World::PelletMaze(g) => g.score,
        }
    }

    pub fn actions(&self) -> &'static [Action] {
        match self {
            World::KeyQuest(_) => &ATTACK_ACTIONS,
            _ => &MOVE_ACTIONS,
        }
    }

    /// Whether the player may enter `p`.
    pub fn walkable(&self, p: Pos) -> bool {
        match self {
            World::KeyQuest(g) => g.walkable(p),
            _ => self.grid().is_floor(p),
        }
    }

    /// Cells whose reaching makes progress towards winning.
    pub fn targets(&self) -> Vec<Pos> {
        match self {
            World::KeyQuest(g) => vec![g.key.unwrap_or(g.door)],
            World::ButterGrid(g) => g.butterflies.clone(),
            World::PelletMaze(g) => g.pellets.iter().chain(&g.power).copied().collect(),
        }
    }

    /// Cells the player dies on contact with.
    pub fn threats(&self) -> Vec<Pos> {
        match self {
            World::KeyQuest(g) => g.monsters.clone(),
            World::ButterGrid(_) => Vec::new(),
            World::PelletMaze(g) => g.ghosts.clone(),
        }
    }

    pub fn hunt(&self) -> Hunt {
        match self {
            World::KeyQuest(g) if !g.monsters.is_empty() => Hunt::Strike(g.monsters.clone()),
            World::KeyQuest(_) => Hunt::Rush,
            World::ButterGrid(g) => match g.most_threatening() {
                Some(b) => Hunt::Chase(vec![b]),
                None => Hunt::Rush,
            },
            World::PelletMaze(g) if g.invulnerable > 0 => Hunt::Chase(g.ghosts.clone()),
            World::PelletMaze(_) => Hunt::Cautious,
        }
    }

    /// Whether enemies take a step at the end of `tick`.
    pub fn enemies_move_after(&self, tick: u64) -> bool {
        match self {
            World::KeyQuest(_) => tick.is_multiple_of(MONSTER_STEP_PERIOD),
            World::ButterGrid(_) => true,
            World::PelletMaze(_) => tick.is_multiple_of(GHOST_STEP_PERIOD),
        }
    }

    pub fn apply_player(
        &mut self,
        action: Action,
        tick: u64,
        counts: &mut Counter,
    ) -> Option<Outcome> {
        match self {
            World::KeyQuest(g) => g.apply_player(action, tick, counts),
            World::ButterGrid(g) => g.apply_player(action, counts),
            World::PelletMaze(g) => g.apply_player(action, counts),
        }
    }

    pub fn advance(
        &mut self,
        tick: u64,
        rng: &mut ChaCha8Rng,
        counts: &mut Counter,
    ) -> Option<Outcome> {
        match self {
            World::KeyQuest(g) => g.advance(tick, rng, counts),
            World::ButterGrid(g) => g.advance(rng, counts),
            World::PelletMaze(g) => g.advance(tick, rng, counts),
        }
    }

    /// Runs one full tick: player action, then the world.
    pub fn step(
        &mut self,
        action: Action,
        tick: u64,
        rng: &mut ChaCha8Rng,
        counts: &mut Counter,
    ) -> Option<Outcome> {
        self.apply_player(action, tick, counts)
            .or_else(|| self.advance(tick, rng, counts))
    }
}
