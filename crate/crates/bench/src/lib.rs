//! Shared fixtures for the benchmarks.

use hba_core::behaviours::{default_targets, make_lft_pool, BehaviourRef};
use hba_core::beliefs::{BeliefState, PosteriorMode};
use hba_core::games78::enumerate_games;
use hba_core::{Game, History};

/// Game `id` of the 78 with its LFT pool for player 2 and a uniform product
/// belief over the first `types` of them.
pub fn matrix_fixture(id: usize, types: usize) -> (Game, BeliefState) {
    let og = enumerate_games().into_iter().find(|g| g.id == id).expect("known game id");
    let game = og.to_game();
    let pool: Vec<BehaviourRef> = make_lft_pool(&game, &default_targets(2, 2)).expect("lft pool").into_iter().take(types).collect();
    let bs = BeliefState::uniform(PosteriorMode::Product, 1, pool).expect("belief");
    (game, bs)
}

/// A history of `t` steps alternating between the four joint actions.
pub fn cycling_history(t: usize) -> History {
    let mut h = History::new(0);
    for k in 0..t {
        h.push(vec![k % 2, (k / 2) % 2], 0);
    }
    h
}
