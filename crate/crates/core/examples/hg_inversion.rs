//! The anisotropy map h(g) = σ_g/σ_s in two and three dimensions, its edge
//! law (1 − g)h(g) → c(n), and inversion.

use radtrans::hgmodel::{edge_constant, h0, h_of_g, invert_h};
use radtrans::Dimension;

fn main() -> radtrans::Result<()> {
    for dim in [Dimension::Two, Dimension::Three] {
        println!("n = {}: h(0) = {:.6}, c(n) = {:.6}", dim.n(), h0(dim), edge_constant(dim));
        println!("{:>8} {:>12} {:>12} {:>12}", "g", "h(g)", "(1-g)h(g)", "inverted");
        for g in [0.0, 0.2, 0.5, 0.8, 0.9, 0.99, 0.999] {
            let h = h_of_g(g, dim)?;
            println!("{g:8.3} {h:12.6} {:12.6} {:12.9}", (1.0 - g) * h, invert_h(h, dim)?);
        }
    }
    match invert_h(0.2, Dimension::Two) {
        Err(e) => println!("below h(0): {e}"),
        Ok(g) => println!("unexpected g = {g}"),
    }
    Ok(())
}
