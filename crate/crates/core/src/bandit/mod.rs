//! Bayesian bandit convex optimization over finite scenario sets.

mod environments;
mod game;
mod hypothesis;
mod net;
mod posterior;
mod scenario;
mod strategy;

pub use environments::{random_sequence_environment, toy_environment, vee, VeeFamily};
pub use game::{
    aggregate, loglog_slope, results_csv, run_game, run_seeds, write_csv_rows, GameParams, GameResult,
    GameSummary, Policy, RoundRecord, SeedAggregate, CSV_HEADER,
};
pub use hypothesis::{hypothesis_test, hypothesis_test_with, HypothesisReport, Statistic, LEVEL};
pub use net::{build_net, Net};
pub use posterior::{posterior_update, push_alpha, PosteriorState};
pub use scenario::{Environment, Likelihood, LossEntry, Scenario, ScenarioEntry, ScenarioFile, ScenarioSet};
pub use strategy::{
    candidate_argmin, regret_info, step1_epsilon, step2_select_point, surrogates, thompson_action,
    two_point_action, ActionDistribution, ActionKind, Step1, Step2, Step3Record, Surrogates, TwoPointDecision,
    TwoPointParams,
};
