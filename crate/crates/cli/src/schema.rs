//! Published JSON Schemas, one per report-producing subcommand.

/// Schema id stamped into every report of `command`.
pub fn schema_id(command: &str) -> String {
    format!("tangleforge/{command}/v1")
}

macro_rules! schemas {
    ($($name:literal),* $(,)?) => {
        /// `(command, schema document)` pairs.
        pub const SCHEMAS: &[(&str, &str)] = &[
            $(($name, include_str!(concat!("../schemas/", $name, ".json")))),*
        ];
    };
}

schemas!(
    "check",
    "color",
    "enumerate",
    "cap",
    "complexity",
    "rewrite",
    "equiv",
    "fuse",
    "geodesic-check",
    "faultsim",
    "aqc-gap",
    "aqc-entangle",
    "aqc-twosat",
    "detect",
    "synth",
);

pub fn schema_for(command: &str) -> Option<&'static str> {
    SCHEMAS.iter().find(|(name, _)| *name == command).map(|(_, s)| *s)
}
