//! Writing identities in the corpus language and verifying them with the
//! exact series engine and the numeric engine.
//!
//! Run with `cargo run --release --example verify_corpus`.

use cubiccf::registry::verify::{integer_sites, mutate_integer};
use cubiccf::registry::{builtin_corpus, parse_corpus, verify_all, VerifyOptions};

const DOC: &str = r#"
identity cube series order=100 lattice=3 ref "1 + 1/V^3 as a psi quotient"
lhs: 1 + 1/V(q)^3
rhs: psi(q)^4/(q*psi(q^3)^4)

identity jacobi series order=100 ref "phi^2 - phi^2(-q) counts odd squares"
lhs: phi(q)^2 - phi(-q)^2
rhs: 8*q*psi(q^4)^2

identity value numeric digits=50 at q=exp(-pi) ref "V(-e^-pi)"
lhs: V(-q)
rhs: (1 - sqrt(3))/2

identity reciprocity numeric digits=40 at alpha=2 beta=1/alpha, alpha=3/5 beta=1/alpha ref "alpha beta = 1"
lhs: (1 + 1/at(V(-q), q=exp(-pi*alpha)))*(1 + 1/at(V(-q), q=exp(-pi*beta)))
rhs: 3
"#;

fn main() {
    let recs = parse_corpus(DOC).unwrap();
    let opts = VerifyOptions::default();
    for rep in verify_all(&recs, &opts, true) {
        println!("{:<12} {:<7} {:?}  {}", rep.id, rep.kind, rep.status, rep.detail);
    }

    // perturbing a constant breaks the identity
    let mutant = mutate_integer(&recs[1], 0, 1);
    println!("\nmutant: {}", mutant.rhs);
    let rep = verify_all(&[mutant], &opts, false).remove(0);
    println!("{:?}  {}", rep.status, rep.detail);

    let builtin = builtin_corpus();
    let sites: usize = builtin.iter().map(|r| integer_sites(r).len()).sum();
    println!("\nbuilt-in corpus: {} records, {sites} integer constants", builtin.len());

    match parse_corpus("identity x series order=10 ref \"r\"\nlhs: rho(q)\nrhs: 1\n") {
        Err(e) => println!("parse error: {e}"),
        Ok(_) => unreachable!(),
    }
}
