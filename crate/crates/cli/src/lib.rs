//! Command-line surface for tangleforge: the `.tm` format, JSON reports and
//! their schemas.

pub mod run;
pub mod schema;
pub mod tm;

pub use run::{run, RunReport};
pub use tm::{parse_tm, serialize_tm, TmDocument};
