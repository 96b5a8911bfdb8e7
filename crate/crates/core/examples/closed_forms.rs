//! Building and evaluating nested-radical closed forms.
//!
//! Run with `cargo run --example closed_forms`.

use cubiccf::closedform::ClosedForm;
use cubiccf::numkern::Digits;

fn main() {
    let d = Digits::new(45).unwrap();
    let three = || ClosedForm::int(3);
    let cbrt4 = || ClosedForm::int(4).root(3);

    let entries = [
        ClosedForm::int(5).pow(1, 4),
        ClosedForm::int(1).sub(three().sqrt()).div(ClosedForm::int(2)),
        ClosedForm::int(6).mul(three().sqrt()).sub(ClosedForm::int(9)).pow(1, 4),
        ClosedForm::int(1).sub(cbrt4()).div(ClosedForm::int(2).add(cbrt4())),
        ClosedForm::Pi.pow(1, 4).div(ClosedForm::Gamma34),
        ClosedForm::rat(-5, 8).exp(),
    ];
    for cf in &entries {
        println!("{:<28} = {}", cf.to_string(), cf.eval(d).unwrap().to_decimal_string(45));
    }

    // even roots need a base that is provably positive
    let bad = three().sqrt().sub(ClosedForm::int(2)).sqrt();
    println!("{bad}: {}", bad.eval(d).unwrap_err());
}
