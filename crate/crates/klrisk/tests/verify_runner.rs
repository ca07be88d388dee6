//! End-to-end runs of the identity-suite runner on the catalog families.

use klrisk::{run_identity_suites, FamilySpec, VerifyConfig};

#[test]
fn identity_suites_pass_on_catalog_families() {
    let cases = [("binomial:6", 1), ("hw:6", 1), ("trinomial:6", 1), ("poisson:60", 2)];
    for (name, n) in cases {
        let fam = FamilySpec::parse(name).unwrap().build();
        let mut config = VerifyConfig::new(&fam, n, 1);
        config.estimator_count = 6;
        let started = std::time::Instant::now();
        let outcomes = run_identity_suites(&fam, &config).unwrap();
        let elapsed = started.elapsed();
        println!("{name} (n={n}): {:?}", elapsed);
        for o in &outcomes {
            println!(
                "  {:<40} value {:>12.3e}  threshold {:>8.0e}  {}",
                o.name,
                o.value,
                o.threshold,
                if o.pass { "pass" } else { "FAIL" }
            );
            assert!(o.pass, "{name}: suite {} failed with value {}", o.name, o.value);
        }
    }
}
