pub mod export;
pub mod hazard;
pub mod health;
pub mod ict;
pub mod invariants;
pub mod kernel;
pub mod metrics;
pub mod mobility;
pub mod oracle;
pub mod report;
pub mod run;
pub mod scenario;
pub mod social;
pub mod toy;
