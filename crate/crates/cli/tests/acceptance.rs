//! End-to-end acceptance gate. Runs the full verification suite once and
//! requires every criterion to pass, printing one line per criterion.

use recurrence_lab_cli::verify::run_acceptance;

#[test]
fn acceptance_suite() {
    let outcomes = run_acceptance(7).expect("suite ran to completion");
    assert_eq!(outcomes.len(), 11);
    let mut failed = 0usize;
    for o in &outcomes {
        println!(
            "criterion {:2} [{}] {} — {} ({:.1}s)",
            o.index,
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.detail,
            o.seconds
        );
        if !o.passed {
            failed += 1;
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
