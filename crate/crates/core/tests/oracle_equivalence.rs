mod oracle;

use oracle::{check_seed, CONTRACTS};

#[test]
fn prover_agrees_with_enumeration() {
    let mut checked = 0;
    let mut violating = 0;
    for seed in 0..CONTRACTS {
        let t = check_seed(seed).unwrap_or_else(|e| panic!("{e}"));
        checked += t.checked;
        violating += t.violating;
    }
    assert!(checked >= 100);
    // Both outcomes must be represented for the comparison to mean anything.
    assert!(violating > 10 && checked - violating > 10, "{violating}/{checked}");
}
