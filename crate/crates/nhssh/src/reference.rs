//! Reference spin-texture tables bundled with the crate.
//!
//! Three parameter sets cover the three phases of the model: (v, r) =
//! (0.3, 0.18) with trivial winding, (0.3, 0.3) with half winding, and
//! (0.3, 1.0) with unit winding. Values are three-decimal theory textures;
//! the unit-winding table follows the continuous-band sign convention after
//! the crossing at k = π. Reproduction checks compare against these rows
//! verbatim at the 1e-3 level.

use crate::topology::{parse_texture_table, TextureSample};

pub const S1_CSV: &str = include_str!("../data/s1_theory.csv");
pub const S2_CSV: &str = include_str!("../data/s2_theory.csv");
pub const S3_CSV: &str = include_str!("../data/s3_theory.csv");

/// Identifier, model parameters and expected per-zone winding of each
/// bundled dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSet {
    pub name: &'static str,
    pub v: f64,
    pub r: f64,
    pub winding: f64,
    pub csv: &'static str,
}

pub const SETS: [ReferenceSet; 3] = [
    ReferenceSet {
        name: "s1",
        v: 0.3,
        r: 0.18,
        winding: 0.0,
        csv: S1_CSV,
    },
    ReferenceSet {
        name: "s2",
        v: 0.3,
        r: 0.3,
        winding: 0.5,
        csv: S2_CSV,
    },
    ReferenceSet {
        name: "s3",
        v: 0.3,
        r: 1.0,
        winding: 1.0,
        csv: S3_CSV,
    },
];

pub fn by_name(name: &str) -> Option<&'static ReferenceSet> {
    SETS.iter().find(|s| s.name == name)
}

fn parse(csv: &str) -> Vec<TextureSample> {
    parse_texture_table(csv).expect("bundled table parses")
}

pub fn s1_table() -> Vec<TextureSample> {
    parse(S1_CSV)
}

pub fn s2_table() -> Vec<TextureSample> {
    parse(S2_CSV)
}

pub fn s3_table() -> Vec<TextureSample> {
    parse(S3_CSV)
}
