//! The ten acceptance criteria, one PASS/FAIL line each. Exits nonzero when
//! any criterion fails.

use fq_cli::suite::{acceptance_suite, Workbench};
use fq_core::zeroset::EnumOptions;

fn main() {
    let mut wb = Workbench::new(EnumOptions::default(), 1);
    let results = acceptance_suite(&mut wb);
    let failed: Vec<&str> = results.iter().filter(|r| !r.pass).map(|r| r.id.as_str()).collect();
    println!("acceptance: {}/{} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failed criteria: {}", failed.join(", "));
        std::process::exit(1);
    }
}
