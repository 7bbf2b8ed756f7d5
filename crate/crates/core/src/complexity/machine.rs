//! Two-dimensional Turing machines ("turmites") over a binary grid.

use std::collections::HashMap;

use rand::RngCore;

use crate::grid::BitGrid;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    Up,
    Down,
    Left,
    Right,
}

impl Move {
    pub const ALL: [Move; 4] = [Move::Up, Move::Down, Move::Left, Move::Right];

    /// `(d_row, d_col)`; rows grow downwards.
    pub fn delta(self) -> (i64, i64) {
        match self {
            Move::Up => (-1, 0),
            Move::Down => (1, 0),
            Move::Left => (0, -1),
            Move::Right => (0, 1),
        }
    }
}

/// Next state of a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Next {
    Halt,
    /// 1-based state number.
    State(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Transition {
    pub write: u8,
    pub movement: Move,
    pub next: Next,
}

impl Transition {
    /// Number of distinct transitions available to an `n_states` machine.
    pub fn choices(n_states: usize) -> u64 {
        2 * 4 * (n_states as u64 + 1)
    }

    /// Decodes `0..choices(n_states)`: `write = i % 2`, `move = (i / 2) % 4`
    /// in [`Move::ALL`] order, and `i / 8` is the next state with 0 = halt.
    pub fn from_index(index: u64, n_states: usize) -> Transition {
        debug_assert!(index < Self::choices(n_states));
        let write = (index % 2) as u8;
        let movement = Move::ALL[((index / 2) % 4) as usize];
        let next = match index / 8 {
            0 => Next::Halt,
            s => Next::State(s as u8),
        };
        Transition {
            write,
            movement,
            next,
        }
    }
}

/// A machine with `n_states` states and a 2-symbol alphabet; blank is 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TuringMachine2D {
    n_states: usize,
    /// Indexed by `(state - 1) * 2 + read`.
    table: Vec<Transition>,
}

impl TuringMachine2D {
    /// `table[(state - 1) * 2 + read]`; `None` if the table has the wrong
    /// length or refers to a nonexistent state.
    pub fn new(n_states: usize, table: Vec<Transition>) -> Option<Self> {
        if n_states == 0 || n_states > u8::MAX as usize || table.len() != 2 * n_states {
            return None;
        }
        let valid = table.iter().all(|t| {
            t.write <= 1
                && match t.next {
                    Next::Halt => true,
                    Next::State(s) => s >= 1 && (s as usize) <= n_states,
                }
        });
        valid.then_some(TuringMachine2D { n_states, table })
    }

    /// Every entry drawn independently and uniformly from the
    /// [`Transition::choices`] possibilities, in table order.
    pub fn random(n_states: usize, rng: &mut impl RngCore) -> Self {
        let choices = Transition::choices(n_states);
        let table = (0..2 * n_states)
            .map(|_| Transition::from_index(rng::below(rng, choices), n_states))
            .collect();
        TuringMachine2D { n_states, table }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn transition(&self, state: u8, read: u8) -> Transition {
        self.table[(state as usize - 1) * 2 + read as usize]
    }

    pub fn table(&self) -> &[Transition] {
        &self.table
    }
}

/// Result of running a machine from a blank grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunOutcome {
    /// Halted after `steps` transitions; `output` is the bounding box of every
    /// cell written, read top row first.
    Halted { steps: u64, output: BitGrid },
    /// Still running after `max_steps` transitions.
    Running,
}

/// Runs `m` on an unbounded all-0 grid from state 1 with the head at the
/// origin. Each transition writes the current cell, moves, then changes
/// state; the halting transition counts as a step and its write is kept.
pub fn run_machine(m: &TuringMachine2D, max_steps: u64) -> RunOutcome {
    let mut cells: HashMap<(i64, i64), u8> = HashMap::new();
    let (mut row, mut col) = (0i64, 0i64);
    let mut state = 1u8;
    let (mut min_r, mut max_r, mut min_c, mut max_c) = (0i64, 0i64, 0i64, 0i64);
    for step in 1..=max_steps {
        let read = cells.get(&(row, col)).copied().unwrap_or(0);
        let t = m.transition(state, read);
        cells.insert((row, col), t.write);
        min_r = min_r.min(row);
        max_r = max_r.max(row);
        min_c = min_c.min(col);
        max_c = max_c.max(col);
        let (dr, dc) = t.movement.delta();
        row += dr;
        col += dc;
        match t.next {
            Next::Halt => {
                let h = (max_r - min_r + 1) as usize;
                let w = (max_c - min_c + 1) as usize;
                let mut out = vec![0u8; w * h];
                for (&(r, c), &v) in &cells {
                    out[(r - min_r) as usize * w + (c - min_c) as usize] = v;
                }
                return RunOutcome::Halted {
                    steps: step,
                    output: BitGrid::new(w, h, out).expect("cells are binary"),
                };
            }
            Next::State(s) => state = s,
        }
    }
    RunOutcome::Running
}

/// Outcome of a [`SquareRunner`] run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SquareRun {
    /// Halted with a `k×k` bounding box; the packed output.
    Square(u64),
    /// Halted with some other bounding box.
    OtherShape,
    Running,
}

/// Reusable interpreter for the sampler. It only reports outputs whose
/// bounding box is exactly `k×k` and agrees with [`run_machine`] on every
/// machine.
///
/// The head cannot leave a `(2·max_steps+1)²` square around the origin, so a
/// dense buffer of that size is allocated once and only the cells touched by
/// a run are cleared afterwards. Large step budgets fall back to
/// [`run_machine`].
pub struct SquareRunner {
    k: i64,
    max_steps: u64,
    span: i64,
    cells: Vec<u8>,
    touched: Vec<usize>,
}

const DENSE_LIMIT: u64 = 2047;

impl SquareRunner {
    pub fn new(k: usize, max_steps: u64) -> Self {
        let span = if max_steps <= DENSE_LIMIT {
            2 * max_steps as i64 + 1
        } else {
            0
        };
        SquareRunner {
            k: k as i64,
            max_steps,
            span,
            cells: vec![0; (span * span) as usize],
            touched: Vec::new(),
        }
    }

    pub fn run(&mut self, m: &TuringMachine2D) -> SquareRun {
        if self.span == 0 {
            return match run_machine(m, self.max_steps) {
                RunOutcome::Running => SquareRun::Running,
                RunOutcome::Halted { output, .. } => {
                    let k = self.k as usize;
                    if output.width() == k && output.height() == k {
                        SquareRun::Square(output.window(0, 0, k).expect("k fits").bits())
                    } else {
                        SquareRun::OtherShape
                    }
                }
            };
        }
        let result = self.run_dense(m);
        for &i in &self.touched {
            self.cells[i] = 0;
        }
        self.touched.clear();
        result
    }

    fn run_dense(&mut self, m: &TuringMachine2D) -> SquareRun {
        let off = self.max_steps as i64;
        let span = self.span;
        let (mut row, mut col) = (0i64, 0i64);
        let mut state = 1u8;
        let (mut min_r, mut max_r, mut min_c, mut max_c) = (0i64, 0i64, 0i64, 0i64);
        for _ in 0..self.max_steps {
            min_r = min_r.min(row);
            max_r = max_r.max(row);
            min_c = min_c.min(col);
            max_c = max_c.max(col);
            let idx = ((row + off) * span + (col + off)) as usize;
            let t = m.table[(state as usize - 1) * 2 + self.cells[idx] as usize];
            self.cells[idx] = t.write;
            self.touched.push(idx);
            let (dr, dc) = t.movement.delta();
            row += dr;
            col += dc;
            match t.next {
                Next::Halt => {
                    let k = self.k;
                    if max_r - min_r + 1 != k || max_c - min_c + 1 != k {
                        return SquareRun::OtherShape;
                    }
                    let mut bits = 0u64;
                    for r in 0..k {
                        for c in 0..k {
                            let v = self.cells
                                [((min_r + r + off) * span + (min_c + c + off)) as usize];
                            bits |= (v as u64) << (r * k + c);
                        }
                    }
                    return SquareRun::Square(bits);
                }
                Next::State(s) => state = s,
            }
        }
        SquareRun::Running
    }
}
