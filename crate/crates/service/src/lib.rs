//! Submission ledger, badge assignment, leaderboards and the HTTP API of
//! riskbench.

pub mod api;
pub mod badge;
pub mod leaderboard;
pub mod ledger;
pub mod service;

pub use api::{router, serve, DEFAULT_PORT};
pub use badge::{assign_badge, Badge, Evidence};
pub use leaderboard::{rank, LeaderboardEntry};
pub use ledger::{Ledger, LedgerError, SubmissionRecord};
pub use service::{system_clock, Clock, Leaderboard, Service, ServiceError, TaskDetail};
