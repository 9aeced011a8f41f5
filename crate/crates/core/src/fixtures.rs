//! Bundled example data, also shipped as CSV files under `fixtures/`.

use crate::io::{parse_counts, CountTable};

pub const DIE_CSV: &str = include_str!("../fixtures/die.csv");
pub const ALPHA_CSV: &str = include_str!("../fixtures/alpha.csv");

/// One hundred tosses of a die, by face.
pub const DIE_COUNTS: [u64; 6] = [17, 16, 25, 9, 16, 17];

/// Alpha particles emitted per interval; entry `j` counts intervals with `j` emissions.
pub const ALPHA_COUNTS: [u64; 20] = [1, 4, 13, 28, 56, 105, 126, 146, 164, 161, 123, 101, 74, 53, 23, 15, 9, 3, 1, 1];

pub fn die_table() -> CountTable {
    parse_counts(DIE_CSV).expect("bundled fixture parses")
}

pub fn alpha_table() -> CountTable {
    parse_counts(ALPHA_CSV).expect("bundled fixture parses")
}

pub fn alpha_counts() -> Vec<u64> {
    alpha_table().by_outcome()
}
