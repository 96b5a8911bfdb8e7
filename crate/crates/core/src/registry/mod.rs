//! Identity corpus: DSL, built-in records and the verification engine.

pub mod ast;
pub mod parser;
pub mod verify;

pub use ast::{Base, Constant, Expr, Func, IdentityRecord, Monomial, PointSpec, RecordKind};
pub use parser::{parse_corpus, parse_eval_input, parse_expr, ParseError};
pub use verify::{verify_all, verify_numeric, verify_record, verify_series, Status, VerificationReport, VerifyOptions};

/// Text of the embedded corpus.
pub const BUILTIN_CORPUS: &str = include_str!("../../corpus/builtin.cid");

/// The embedded corpus, parsed.
pub fn builtin_corpus() -> Vec<IdentityRecord> {
    parse_corpus(BUILTIN_CORPUS).expect("embedded corpus parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_counts() {
        let recs = builtin_corpus();
        let series = recs.iter().filter(|r| matches!(r.kind, RecordKind::Series { .. })).count();
        assert_eq!((series, recs.len() - series), (15, 47));
        assert!(recs.iter().all(|r| !r.reference.is_empty()));
    }

    #[test]
    fn builtin_round_trip() {
        let recs = builtin_corpus();
        let printed = ast::print_corpus(&recs);
        assert_eq!(parse_corpus(&printed).unwrap(), recs);
        assert_eq!(ast::print_corpus(&parse_corpus(&printed).unwrap()), printed);
    }

    #[test]
    fn series_fast_mode() {
        let opts = VerifyOptions {
            order: Some(30),
            ..Default::default()
        };
        let series: Vec<_> = builtin_corpus()
            .into_iter()
            .filter(|r| matches!(r.kind, RecordKind::Series { .. }))
            .collect();
        for rep in verify_all(&series, &opts, true) {
            assert_eq!(rep.status, Status::Pass, "{rep:?}");
        }
    }
}
