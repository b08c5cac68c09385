//! Stability inequalities on a seeded pair of media, written as CSV.

use std::time::Instant;

use radtrans::harness::{run_suite, seeded_pair, summary, write_reports_csv, HarnessOptions, KernelSampleSpec};
use radtrans::{BoundaryPair, DomainGeometry};

fn main() -> radtrans::Result<()> {
    let geom = DomainGeometry::unit_disk();
    let seed = 2;
    let (a, b) = seeded_pair(geom, seed)?;
    let pair = BoundaryPair::planar(&geom, 2.8, 0.15)?;
    let probe = pair.at(0.6 * pair.chord(&geom));
    let opts = HarnessOptions { seed, ..Default::default() };

    let start = Instant::now();
    let reports = run_suite(&a, &b, &pair, &probe, &opts, &KernelSampleSpec { samples: 1000, seed })?;
    println!("{} checks in {:?}\n{}", reports.len(), start.elapsed(), summary(&reports));
    write_reports_csv(&reports, std::io::stdout())
}
