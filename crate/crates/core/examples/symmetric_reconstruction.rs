//! σ and σ_a along chords of a scattering medium with direction-symmetric σ,
//! from forward and reverse ballistic profiles.

use radtrans::io::tables::write_line;
use radtrans::reconstruct::{reconstruct_line, ReconstructionConfig};
use radtrans::{BoundaryPair, CoefficientField, DomainGeometry, OpticalMedium, Phase, SigmaField};

fn main() -> radtrans::Result<()> {
    let geom = DomainGeometry::unit_disk();
    let sigma = CoefficientField::function(|x| 1.2 + 0.4 * x.x - 0.3 * x.y * x.y);
    let medium = OpticalMedium::new(geom, SigmaField::Isotropic(sigma), Phase::Isotropic { sigma_s: 0.3.into() })?;
    let lines = vec![BoundaryPair::planar(&geom, 3.0, 0.1)?, BoundaryPair::planar(&geom, 1.2, -0.4)?];

    for (known, label) in [(true, "known collar"), (false, "integrated depth")] {
        let mut cfg = ReconstructionConfig::new(0.1, lines.clone())?;
        if known {
            cfg = cfg.with_known(medium.clone());
        }
        for pair in &lines {
            let line = reconstruct_line(&medium, pair, 1000, &cfg)?;
            let worst = line
                .ts
                .iter()
                .zip(&line.sigma)
                .map(|(t, s)| (s - medium.sigma(&pair.at(*t), &pair.direction)).abs())
                .fold(0.0, f64::max);
            println!("{label}: max |σ error| {worst:.2e}, warnings {:?}", line.diagnostics.warnings);
        }
    }

    let line = reconstruct_line(&medium, &lines[0], 20, &ReconstructionConfig::new(0.1, lines.clone())?)?;
    write_line(std::io::stdout(), &line)
}
