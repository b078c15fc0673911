//! Desk-scale simulator of relational quantum mechanics.
//!
//! [`quantum`] holds the dense linear algebra and [`facts`] the per-trial
//! ledger of observers, events and relative facts. [`bonding`] turns shared
//! facts into composite observers. [`scenarios`] is the experiment catalog,
//! [`io`] writes reports to disk, and [`verify`] bundles the invariant checks.

pub mod facts;
pub mod io;
pub mod quantum;
pub mod bonding;
pub mod scenarios;
pub mod stats;
pub mod verify;
