//! Day-ahead charging schedules for an EV fleet: the battery aggregator
//! (one LP over the whole day) and the charging-point aggregator (one LP per
//! plug-in session), plus audit and experiment tooling.

pub mod analysis;
pub mod degradation;
pub mod domain;
pub mod model;
