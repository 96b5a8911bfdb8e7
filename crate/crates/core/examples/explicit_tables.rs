//! Tabulated explicit values of theta quotients and of V compared against
//! independent evaluations.
//!
//! Run with `cargo run --release --example explicit_tables`.

use cubiccf::cli::{table_rows, TableName};
use cubiccf::registry::builtin_corpus;

fn main() {
    let corpus = builtin_corpus();
    for which in [TableName::Psi, TableName::Phi, TableName::V, TableName::Sec1] {
        println!("{which:?}");
        for row in table_rows(&corpus, which, 40).unwrap() {
            println!(
                "  {:<11} {:<40.40} {:<24.24} diff {:<9} {:?}",
                row.id, row.closed_form, row.numeric_value, row.difference, row.status
            );
        }
    }
}
