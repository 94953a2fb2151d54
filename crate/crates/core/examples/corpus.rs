//! Runs the bundled corpus on four threads and prints the summary table.

use conic_cert::harness::cli::summary_table;
use conic_cert::harness::corpus::{bundled_corpus_dir, run_corpus};

fn main() -> conic_cert::Result<()> {
    let doc = run_corpus(&bundled_corpus_dir(), 4, 42)?;
    print!("{}", summary_table(&doc));
    let n = doc.mismatches().count();
    println!("{} problems, {n} expectation mismatches", doc.problems.len());
    Ok(())
}
