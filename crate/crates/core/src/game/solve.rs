use super::arena::{Arena, NodeStatus, Objective, Player};

/// Winning regions and positional strategies (edge indices) of both players.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameResult {
    pub w_exists: Vec<bool>,
    pub w_forall: Vec<bool>,
    pub strategy_exists: Vec<Option<usize>>,
    pub strategy_forall: Vec<Option<usize>>,
}

impl GameResult {
    pub fn exists_wins(&self, p: usize) -> bool {
        self.w_exists[p]
    }

    /// Regions are disjoint and cover every position.
    pub fn is_partition(&self) -> bool {
        self.w_exists
            .iter()
            .zip(&self.w_forall)
            .all(|(a, b)| a != b)
    }

    pub fn sizes(&self) -> (usize, usize) {
        (
            self.w_exists.iter().filter(|b| **b).count(),
            self.w_forall.iter().filter(|b| **b).count(),
        )
    }

    pub fn region(&self, p: Player) -> &[bool] {
        match p {
            Player::Exists => &self.w_exists,
            Player::Forall => &self.w_forall,
        }
    }

    pub fn strategy(&self, p: Player) -> &[Option<usize>] {
        match p {
            Player::Exists => &self.strategy_exists,
            Player::Forall => &self.strategy_forall,
        }
    }
}

/// Greatest fixpoint: positions from which `player` keeps out of `bad` forever.
/// Returns the region and, on owned positions, the first edge staying inside.
fn safe_region(ar: &Arena, player: Player, bad: NodeStatus) -> (Vec<bool>, Vec<Option<usize>>) {
    let n = ar.len();
    let mut x: Vec<bool> = (0..n).map(|p| ar.positions[p].status != bad).collect();
    loop {
        let mut changed = false;
        for p in 0..n {
            if !x[p] || ar.is_terminal(p) {
                continue;
            }
            let es = &ar.edges[p];
            let keep = if ar.positions[p].owner == player {
                es.iter().any(|e| x[e.target])
            } else {
                es.iter().all(|e| x[e.target])
            };
            if !keep {
                x[p] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let strat = (0..n)
        .map(|p| {
            if x[p] && !ar.is_terminal(p) && ar.positions[p].owner == player {
                ar.edges[p].iter().position(|e| x[e.target])
            } else {
                None
            }
        })
        .collect();
    (x, strat)
}

/// Least fixpoint: positions from which `player` forces a visit to `target`.
/// The strategy picks the first edge that lowers the attractor rank.
fn attractor(ar: &Arena, player: Player, target: NodeStatus) -> (Vec<bool>, Vec<Option<usize>>) {
    let n = ar.len();
    let mut rank: Vec<Option<usize>> = (0..n)
        .map(|p| (ar.positions[p].status == target).then_some(0))
        .collect();
    let mut round = 0;
    loop {
        round += 1;
        let mut added = Vec::new();
        for p in 0..n {
            if rank[p].is_some() || ar.is_terminal(p) {
                continue;
            }
            let es = &ar.edges[p];
            let inside = |t: usize| rank[t].is_some_and(|r| r < round);
            let joins = if ar.positions[p].owner == player {
                es.iter().any(|e| inside(e.target))
            } else {
                es.iter().all(|e| inside(e.target))
            };
            if joins {
                added.push(p);
            }
        }
        if added.is_empty() {
            break;
        }
        for p in added {
            rank[p] = Some(round);
        }
    }
    let strat = (0..n)
        .map(|p| match rank[p] {
            Some(r) if r > 0 && ar.positions[p].owner == player => ar.edges[p]
                .iter()
                .position(|e| rank[e.target].is_some_and(|q| q < r)),
            _ => None,
        })
        .collect();
    (rank.iter().map(Option::is_some).collect(), strat)
}

/// Solves the arena from both sides independently.
pub fn solve_game(ar: &Arena) -> GameResult {
    let ((w_exists, strategy_exists), (w_forall, strategy_forall)) = match ar.objective {
        Objective::Safety => (
            safe_region(ar, Player::Exists, NodeStatus::Lost),
            attractor(ar, Player::Forall, NodeStatus::Lost),
        ),
        Objective::Reach => (
            attractor(ar, Player::Exists, NodeStatus::Won),
            safe_region(ar, Player::Forall, NodeStatus::Won),
        ),
    };
    GameResult {
        w_exists,
        w_forall,
        strategy_exists,
        strategy_forall,
    }
}
