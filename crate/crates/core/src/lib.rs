//! Computer-aided analysis of the no-show paradox for four alternatives.
//!
//! The crate enumerates weighted tournaments, writes SAT encodings of
//! Condorcet-consistency together with participation (and its set-valued
//! variants), drives external SAT and MUS tools, decodes models into
//! lookup-table voting rules, and checks human-readable proof certificates.

pub mod bridge;
pub mod dimacs;
pub mod encode;
pub mod enumerate;
pub mod extensions;
pub mod proof;
pub mod rules;
pub mod voting;

pub use enumerate::{
    enumerate, oracle_enumerate, successors, EnumerationStats, Seed, TournamentIndex,
};
pub use voting::{
    margins_of_profile, AltSet, Alternative, MarginMatrix, MarginVector, Permutation, Profile,
    Ranking, RuleClass, VotingError,
};
