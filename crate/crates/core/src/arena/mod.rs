//! Deterministic surrogate games and scripted personas that generate playtrace corpora.
//!
//! Three built-in games stand in for larger benchmark titles:
//!
//! * `keyquest`: pick up the key, then walk through the door. Monsters
//!   wander and kill on contact; a sword with a cooldown can slay them.
//! * `buttergrid`: catch every butterfly before they open all cocoons. A
//!   butterfly entering a closed cocoon opens it and a new butterfly hatches.
//! * `pelletmaze`: eat every pellet while ghosts chase the player. Power
//!   pellets make the player immune for a few ticks and able to eat ghosts.
//!
//! An episode is a pure function of its [`EpisodeConfig`]: the episode seed
//! comes from [`derive_seed`], and the world and the persona draw from two
//! separate ChaCha streams of that seed.

mod games;
mod grid;
mod persona;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

pub use games::{
    mechanic, Action, World, GHOST_DEVIATION, GHOST_STEP_PERIOD, MONSTER_STEP_PERIOD, POWER_TICKS,
    SWORD_COOLDOWN,
};
pub use grid::{Dir, Grid, Pos};
pub use persona::{choose_action, CAUTION_RADIUS};

use crate::trace::{Corpus, MechanicId, Outcome, Playtrace, TraceError};

pub const LEVEL_ID: &str = "level0";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArenaError {
    #[error("unknown game `{0}` (expected keyquest, buttergrid or pelletmaze)")]
    UnknownGame(String),
    #[error("unknown persona `{0}` (expected one of do_nothing, random_walk, greedy_score, rusher, hunter, cautious)")]
    UnknownPersona(String),
    #[error("invalid game spec: {0}")]
    InvalidSpec(String),
    #[error("invalid batch: {0}")]
    InvalidBatch(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GameKind {
    KeyQuest,
    ButterGrid,
    PelletMaze,
}

impl GameKind {
    pub const ALL: [GameKind; 3] = [
        GameKind::KeyQuest,
        GameKind::ButterGrid,
        GameKind::PelletMaze,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GameKind::KeyQuest => "keyquest",
            GameKind::ButterGrid => "buttergrid",
            GameKind::PelletMaze => "pelletmaze",
        }
    }

    /// Mechanics this game can emit, in declaration order.
    pub fn mechanic_names(self) -> &'static [&'static str] {
        use mechanic::*;
        match self {
            GameKind::KeyQuest => &[
                MOVE,
                PRESS_ATTACK,
                ATTACK_EXECUTED,
                SLAY_MONSTER,
                COLLECT_KEY,
                UNLOCK_DOOR,
                PLAYER_SLAIN,
            ],
            GameKind::ButterGrid => &[MOVE, CATCH_BUTTERFLY, COCOON_OPENED, BUTTERFLY_SPAWNED],
            GameKind::PelletMaze => &[
                MOVE,
                EAT_PELLET,
                EAT_POWER_PELLET,
                EAT_FRUIT,
                EAT_GHOST,
                EATEN_BY_GHOST,
            ],
        }
    }
}

impl FromStr for GameKind {
    type Err = ArenaError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GameKind::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| ArenaError::UnknownGame(s.to_string()))
    }
}

impl fmt::Display for GameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A playable level: `#` wall, `.` floor (a pellet in pelletmaze), `_` bare
/// floor, `A` player start; `K` key, `D` door, `M` monster; `C` cocoon,
/// `B` butterfly; `O` power pellet, `F` fruit, `G` ghost, `H` ghost home.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameSpec {
    pub game: GameKind,
    pub layout: Vec<String>,
    pub max_ticks: u64,
}

impl GameSpec {
    pub fn mechanics(&self) -> Vec<MechanicId> {
        self.game
            .mechanic_names()
            .iter()
            .map(|m| MechanicId::new(*m).expect("built-in mechanic names are valid"))
            .collect()
    }

    pub fn validate(&self) -> Result<(), ArenaError> {
        if self.max_ticks == 0 {
            return Err(ArenaError::InvalidSpec("max_ticks must be positive".into()));
        }
        World::from_spec(self).map(|_| ())
    }
}

const KEYQUEST_LEVEL: [&str; 9] = [
    "#############",
    "#A....#.....#",
    "#.##..#...M.#",
    "#.......###.#",
    "#.##.##.....#",
    "#M...#....K.#",
    "#.##...##...#",
    "#D.....#M...#",
    "#############",
];

const BUTTERGRID_LEVEL: [&str; 11] = [
    "###############",
    "#C..B....#...C#",
    "#.....#..#.B..#",
    "#..####.......#",
    "#........##...#",
    "#...#..A..#...#",
    "#...#.........#",
    "#...##..####..#",
    "#..B......#...#",
    "#C....#......C#",
    "###############",
];

const PELLETMAZE_LEVEL: [&str; 11] = [
    "#############",
    "#O....#....O#",
    "#.##.....##.#",
    "#.#..#_#..#.#",
    "#....#G#....#",
    "#.##._H_.##.#",
    "#....#G#....#",
    "#.#..#_#..#.#",
    "#.##._A_.##.#",
    "#.....F.....#",
    "#############",
];

pub const KEYQUEST_MAX_TICKS: u64 = 200;
pub const BUTTERGRID_MAX_TICKS: u64 = 400;
pub const PELLETMAZE_MAX_TICKS: u64 = 300;

/// The fixed built-in level of a game.
pub fn builtin_level(game_id: &str) -> Result<GameSpec, ArenaError> {
    let game: GameKind = game_id.parse()?;
    let (rows, max_ticks): (&[&str], u64) = match game {
        GameKind::KeyQuest => (&KEYQUEST_LEVEL, KEYQUEST_MAX_TICKS),
        GameKind::ButterGrid => (&BUTTERGRID_LEVEL, BUTTERGRID_MAX_TICKS),
        GameKind::PelletMaze => (&PELLETMAZE_LEVEL, PELLETMAZE_MAX_TICKS),
    };
    Ok(GameSpec {
        game,
        layout: rows.iter().map(|r| r.to_string()).collect(),
        max_ticks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AgentPersona {
    /// Never acts.
    DoNothing,
    /// Uniform random legal move every tick.
    RandomWalk,
    /// Best immediate score or win, one step ahead.
    GreedyScore,
    /// Shortest path to the next win-progress target, ignoring threats.
    Rusher,
    /// Goes after monsters and ghosts.
    Hunter,
    /// Rusher targets, but keeps its distance from threats.
    Cautious,
}

impl AgentPersona {
    pub const ALL: [AgentPersona; 6] = [
        AgentPersona::DoNothing,
        AgentPersona::RandomWalk,
        AgentPersona::GreedyScore,
        AgentPersona::Rusher,
        AgentPersona::Hunter,
        AgentPersona::Cautious,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentPersona::DoNothing => "do_nothing",
            AgentPersona::RandomWalk => "random_walk",
            AgentPersona::GreedyScore => "greedy_score",
            AgentPersona::Rusher => "rusher",
            AgentPersona::Hunter => "hunter",
            AgentPersona::Cautious => "cautious",
        }
    }
}

impl FromStr for AgentPersona {
    type Err = ArenaError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgentPersona::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| ArenaError::UnknownPersona(s.to_string()))
    }
}

impl fmt::Display for AgentPersona {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpisodeConfig {
    pub game: GameSpec,
    pub persona: AgentPersona,
    pub base_seed: u64,
    pub episode_index: u64,
    pub max_ticks: u64,
}

impl EpisodeConfig {
    pub fn new(game: GameSpec, persona: AgentPersona, base_seed: u64, episode_index: u64) -> Self {
        let max_ticks = game.max_ticks;
        EpisodeConfig {
            game,
            persona,
            base_seed,
            episode_index,
            max_ticks,
        }
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Episode seed: SplitMix64 folded over base seed, game bytes, a 0xFF
/// separator, persona bytes, another separator, then the episode index.
///
/// Each fold is a bijection of the running state, so distinct episode
/// indices always yield distinct seeds for fixed (base, game, persona).
pub fn derive_seed(base_seed: u64, game_id: &str, persona: &str, episode_index: u64) -> u64 {
    let mut h = splitmix64(base_seed);
    for b in game_id
        .bytes()
        .chain(std::iter::once(0xFF))
        .chain(persona.bytes())
        .chain(std::iter::once(0xFF))
    {
        h = splitmix64(h ^ u64::from(b));
    }
    splitmix64(h ^ episode_index)
}

const WORLD_STREAM: u64 = 0;
const PERSONA_STREAM: u64 = 1;

pub fn simulate_episode(config: &EpisodeConfig) -> Result<Playtrace, ArenaError> {
    if config.max_ticks == 0 {
        return Err(ArenaError::InvalidSpec("max_ticks must be positive".into()));
    }
    let mut world = World::from_spec(&config.game)?;
    let seed = derive_seed(
        config.base_seed,
        config.game.game.as_str(),
        config.persona.as_str(),
        config.episode_index,
    );
    let mut world_rng = ChaCha8Rng::seed_from_u64(seed);
    world_rng.set_stream(WORLD_STREAM);
    let mut persona_rng = ChaCha8Rng::seed_from_u64(seed);
    persona_rng.set_stream(PERSONA_STREAM);

    let mut counts = games::Counter::new();
    let mut outcome = Outcome::Timeout;
    let mut ticks = config.max_ticks;
    for tick in 1..=config.max_ticks {
        let action = choose_action(config.persona, &world, tick, &mut persona_rng);
        if let Some(o) = world.step(action, tick, &mut world_rng, &mut counts) {
            outcome = o;
            ticks = tick;
            break;
        }
    }
    Ok(Playtrace {
        game: config.game.game.as_str().to_string(),
        level: LEVEL_ID.to_string(),
        agent: config.persona.as_str().to_string(),
        episode: config.episode_index,
        seed,
        outcome,
        ticks,
        counts: counts
            .into_iter()
            .map(|(m, c)| {
                (
                    MechanicId::new(m).expect("built-in mechanic names are valid"),
                    c,
                )
            })
            .collect(),
        score: Some(world.score()),
    })
}

/// Plays `episodes` episodes per persona on the built-in level of `game_id`.
///
/// Traces are ordered by persona (as given), then episode index.
pub fn run_batch(
    game_id: &str,
    personas: &[&str],
    episodes: u64,
    base_seed: u64,
) -> Result<Corpus, ArenaError> {
    let spec = builtin_level(game_id)?;
    let personas: Vec<AgentPersona> = personas
        .iter()
        .map(|p| p.parse())
        .collect::<Result<_, _>>()?;
    run_batch_with(&spec, &personas, episodes, base_seed)
}

pub fn run_batch_with(
    spec: &GameSpec,
    personas: &[AgentPersona],
    episodes: u64,
    base_seed: u64,
) -> Result<Corpus, ArenaError> {
    if personas.is_empty() {
        return Err(ArenaError::InvalidBatch("no personas".into()));
    }
    if episodes == 0 {
        return Err(ArenaError::InvalidBatch(
            "episodes must be at least 1".into(),
        ));
    }
    spec.validate()?;
    let jobs: Vec<(AgentPersona, u64)> = personas
        .iter()
        .flat_map(|&p| (0..episodes).map(move |e| (p, e)))
        .collect();
    let traces = jobs
        .into_par_iter()
        .map(|(persona, e)| {
            simulate_episode(&EpisodeConfig::new(spec.clone(), persona, base_seed, e))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Corpus::new(traces, spec.mechanics())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn builtin_levels_are_valid() {
        for g in GameKind::ALL {
            let spec = builtin_level(g.as_str()).unwrap();
            spec.validate().unwrap();
            assert!(spec.layout.len() <= 15 && spec.layout[0].len() <= 15);
        }
        assert_eq!(
            builtin_level("bogus"),
            Err(ArenaError::UnknownGame("bogus".into()))
        );
    }

    #[test]
    fn builtin_mechanic_lists() {
        let names = |g: &str| -> Vec<String> {
            builtin_level(g)
                .unwrap()
                .mechanics()
                .into_iter()
                .map(String::from)
                .collect()
        };
        assert_eq!(
            names("keyquest"),
            [
                "move",
                "press_attack",
                "attack_executed",
                "slay_monster",
                "collect_key",
                "unlock_door",
                "player_slain"
            ]
        );
        assert_eq!(
            names("buttergrid"),
            [
                "move",
                "catch_butterfly",
                "cocoon_opened",
                "butterfly_spawned"
            ]
        );
    }

    #[test]
    fn builtin_entity_counts() {
        let count = |g: &str, c: char| -> usize {
            builtin_level(g)
                .unwrap()
                .layout
                .iter()
                .map(|r| r.chars().filter(|&x| x == c).count())
                .sum()
        };
        assert_eq!(count("keyquest", 'M'), 3);
        assert_eq!(count("keyquest", 'K'), 1);
        assert_eq!(count("keyquest", 'D'), 1);
        assert_eq!(count("buttergrid", 'C'), 4);
        assert_eq!(count("buttergrid", 'B'), 3);
        assert_eq!(count("pelletmaze", 'O'), 2);
        assert_eq!(count("pelletmaze", 'F'), 1);
        assert_eq!(count("pelletmaze", 'G'), 2);
    }

    #[test]
    fn seeds_are_stable_and_distinct() {
        let a = derive_seed(0, "keyquest", "rusher", 0);
        assert_eq!(a, derive_seed(0, "keyquest", "rusher", 0));
        assert_ne!(a, derive_seed(0, "keyquest", "rusher", 1));
        assert_ne!(a, derive_seed(0, "keyquest", "hunter", 0));
        assert_ne!(a, derive_seed(1, "keyquest", "rusher", 0));
        // Separator keeps ("ab", "c") and ("a", "bc") apart.
        assert_ne!(derive_seed(0, "ab", "c", 0), derive_seed(0, "a", "bc", 0));
        let seeds: BTreeSet<u64> = (0..10_000)
            .map(|i| derive_seed(42, "keyquest", "rusher", i))
            .collect();
        assert_eq!(seeds.len(), 10_000);
    }

    #[test]
    fn persona_names_round_trip() {
        for p in AgentPersona::ALL {
            assert_eq!(p.as_str().parse::<AgentPersona>().unwrap(), p);
        }
        assert!(matches!(
            "nobody".parse::<AgentPersona>(),
            Err(ArenaError::UnknownPersona(_))
        ));
    }

    #[test]
    fn do_nothing_never_acts() {
        let spec = builtin_level("keyquest").unwrap();
        for e in 0..20 {
            let t = simulate_episode(&EpisodeConfig::new(
                spec.clone(),
                AgentPersona::DoNothing,
                5,
                e,
            ))
            .unwrap();
            assert_ne!(t.outcome, Outcome::Win);
            for m in ["collect_key", "unlock_door", "press_attack", "move"] {
                assert_eq!(t.count(&MechanicId::new(m).unwrap()), 0);
            }
        }
    }

    #[test]
    fn rusher_wins_when_not_intercepted() {
        let spec = builtin_level("keyquest").unwrap();
        let key = MechanicId::new("collect_key").unwrap();
        let door = MechanicId::new("unlock_door").unwrap();
        let traces: Vec<_> = (0..50)
            .map(|e| {
                simulate_episode(&EpisodeConfig::new(
                    spec.clone(),
                    AgentPersona::Rusher,
                    42,
                    e,
                ))
                .unwrap()
            })
            .collect();
        let wins: Vec<_> = traces
            .iter()
            .filter(|t| t.outcome == Outcome::Win)
            .collect();
        assert!(!wins.is_empty());
        for t in wins {
            assert_eq!((t.count(&key), t.count(&door)), (1, 1));
        }
    }

    #[test]
    fn episodes_are_deterministic() {
        for g in GameKind::ALL {
            let spec = builtin_level(g.as_str()).unwrap();
            for p in AgentPersona::ALL {
                let cfg = EpisodeConfig::new(spec.clone(), p, 9, 3);
                assert_eq!(
                    simulate_episode(&cfg).unwrap(),
                    simulate_episode(&cfg).unwrap()
                );
            }
        }
    }

    #[test]
    fn batch_shape() {
        let c = run_batch("keyquest", &["do_nothing"], 5, 7).unwrap();
        assert_eq!(c.len(), 5);
        assert!(c.traces().iter().all(|t| t.agent == "do_nothing"));
        assert_eq!(c.mechanic_universe().len(), 7);
        assert_eq!(
            c.traces().iter().map(|t| t.episode).collect::<Vec<_>>(),
            vec![0, 1, 2, 3, 4]
        );
        assert!(matches!(
            run_batch("bogus", &["rusher"], 1, 0),
            Err(ArenaError::UnknownGame(_))
        ));
        assert!(matches!(
            run_batch("keyquest", &["nobody"], 1, 0),
            Err(ArenaError::UnknownPersona(_))
        ));
        assert!(matches!(
            run_batch("keyquest", &[], 1, 0),
            Err(ArenaError::InvalidBatch(_))
        ));
        assert!(matches!(
            run_batch("keyquest", &["rusher"], 0, 0),
            Err(ArenaError::InvalidBatch(_))
        ));
    }
}
