//! Grid geometry and breadth-first search helpers shared by the games and personas.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub const fn new(x: i32, y: i32) -> Self {
        Pos { x, y }
    }

    pub fn step(self, dir: Dir) -> Pos {
        let (dx, dy) = dir.delta();
        Pos::new(self.x + dx, self.y + dy)
    }

    pub fn manhattan(self, other: Pos) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dir {
    Up,
    Down,
    Left,
    Right,
}

impl Dir {
    /// Fixed exploration order; every tie-break in the arena follows it.
    pub const ALL: [Dir; 4] = [Dir::Up, Dir::Down, Dir::Left, Dir::Right];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Dir::Up => (0, -1),
            Dir::Down => (0, 1),
            Dir::Left => (-1, 0),
            Dir::Right => (1, 0),
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Static wall layout. Cells outside the grid are walls.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    width: i32,
    height: i32,
    walls: Vec<bool>,
}

impl Grid {
    pub fn new(width: usize, height: usize, walls: Vec<bool>) -> Self {
        assert_eq!(walls.len(), width * height);
        Grid {
            width: width as i32,
            height: height as i32,
            walls,
        }
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    pub fn height(&self) -> usize {
        self.height as usize
    }

    pub fn contains(&self, p: Pos) -> bool {
        p.x >= 0 && p.y >= 0 && p.x < self.width && p.y < self.height
    }

    fn idx(&self, p: Pos) -> usize {
        (p.y * self.width + p.x) as usize
    }

    pub fn is_floor(&self, p: Pos) -> bool {
        self.contains(p) && !self.walls[self.idx(p)]
    }

    /// BFS distances from `from` over cells accepted by `passable`; `u32::MAX` if unreachable.
    pub fn distances(&self, from: Pos, passable: impl Fn(Pos) -> bool) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.walls.len()];
        if !self.contains(from) {
            return dist;
        }
        let mut queue = VecDeque::new();
        dist[self.idx(from)] = 0;
        queue.push_back(from);
        while let Some(p) = queue.pop_front() {
            let d = dist[self.idx(p)];
            for dir in Dir::ALL {
                let n = p.step(dir);
                if self.contains(n) && dist[self.idx(n)] == u32::MAX && passable(n) {
                    dist[self.idx(n)] = d + 1;
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    pub fn distance_at(&self, dist: &[u32], p: Pos) -> u32 {
        if self.contains(p) {
            dist[self.idx(p)]
        } else {
            u32::MAX
        }
    }

    /// First step of a shortest path from `start` to the nearest goal.
    ///
    /// Goals are entered even if `passable` rejects them. Returns `None` when
    /// already on a goal or no goal is reachable.
    pub fn first_step_towards(
        &self,
        start: Pos,
        goals: &[Pos],
        passable: impl Fn(Pos) -> bool,
    ) -> Option<Dir> {
        if goals.is_empty() || goals.contains(&start) || !self.contains(start) {
            return None;
        }
        let mut first: Vec<Option<Dir>> = vec![None; self.walls.len()];
        let mut seen = vec![false; self.walls.len()];
        let mut queue = VecDeque::new();
        seen[self.idx(start)] = true;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            for dir in Dir::ALL {
                let n = p.step(dir);
                if !self.contains(n) || seen[self.idx(n)] {
                    continue;
                }
                let step = if p == start {
                    Some(dir)
                } else {
                    first[self.idx(p)]
                };
                if goals.contains(&n) {
                    return step;
                }
                if passable(n) {
                    seen[self.idx(n)] = true;
                    first[self.idx(n)] = step;
                    queue.push_back(n);
                }
            }
        }
        None
    }

    /// Shortest plan over (position, facing) states to any state accepted by `is_goal`.
    ///
    /// A move into a non-passable cell only turns the player; moves towards
    /// `forbidden` cells are never taken. Returns the first direction to
    /// press, or `None` if the start state is already a goal or no goal is
    /// reachable.
    pub fn first_step_to_pose(
        &self,
        start: Pos,
        facing: Dir,
        passable: impl Fn(Pos) -> bool,
        forbidden: impl Fn(Pos) -> bool,
        is_goal: impl Fn(Pos, Dir) -> bool,
    ) -> Option<Dir> {
        if !self.contains(start) || is_goal(start, facing) {
            return None;
        }
        let key = |p: Pos, d: Dir| self.idx(p) * 4 + d.index();
        let mut first: Vec<Option<Dir>> = vec![None; self.walls.len() * 4];
        let mut seen = vec![false; self.walls.len() * 4];
        let mut queue = VecDeque::new();
        seen[key(start, facing)] = true;
        queue.push_back((start, facing));
        while let Some((p, f)) = queue.pop_front() {
            for dir in Dir::ALL {
                let target = p.step(dir);
                if forbidden(target) {
                    continue;
                }
                let next = if passable(target) { target } else { p };
                let k = key(next, dir);
                if seen[k] {
                    continue;
                }
                seen[k] = true;
                let step = if (p, f) == (start, facing) {
                    Some(dir)
                } else {
                    first[key(p, f)]
                };
                if is_goal(next, dir) {
                    return step;
                }
                first[k] = step;
                queue.push_back((next, dir));
            }
        }
        None
    }
}
