//! Run every reproduction target and write model, reference and diff CSVs.
//!
//! cargo run --release --example reproduce_all [out_dir]

use anyhow::Result;
use tdotag::repro::{repro_all, Verdict};

fn main() -> Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "repro_out".into());
    let reports = repro_all(tdotag::DEFAULT_SEED)?;
    for r in &reports {
        r.write(dir.as_ref())?;
        println!("{}", r.summary());
        for w in &r.warnings {
            println!("  warning: {w}");
        }
        for d in r.diff.iter().filter(|d| d.verdict == Verdict::Annotated) {
            println!("  note {}.{}: {}", d.row, d.column, d.note);
        }
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    println!("\n{} targets, {failed} with failures; CSVs in {dir}/", reports.len());
    if failed > 0 {
        std::process::exit(1);
    }
    Ok(())
}
