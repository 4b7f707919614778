//! Build a NACA 4412 reference section and deform it with Hicks-Henne
//! bumps.
//!
//! Run with `cargo run --example naca_shapes`.

use foilrom::shape::{deform_profile, naca4_profile, BumpBasis, ParameterVector};

fn main() -> foilrom::Result<()> {
    let reference = naca4_profile("4412", 200, false)?;
    let thickness = reference
        .thickness()
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    println!(
        "NACA 4412: {} stations, max thickness {:.4} chord",
        reference.n_stations(),
        thickness
    );

    let basis = BumpBasis::default();
    println!("bump peaks at {:?}, exponent {}", basis.peaks(), basis.exponent());

    // thicken the mid-chord region on both surfaces
    let mu = ParameterVector::new(vec![
        0.0, 0.0, 0.02, 0.01, 0.0, // upper weights c1..c5
        0.0, 0.0, 0.02, 0.01, 0.0, // lower weights d1..d5
    ]);
    let deformed = deform_profile(&reference, &mu, &basis)?;
    let new_thickness = deformed
        .thickness()
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    println!("after deformation: max thickness {new_thickness:.4} chord");

    let out = std::path::Path::new("target/example-output");
    std::fs::create_dir_all(out)?;
    let mut file = std::fs::File::create(out.join("naca4412_deformed.csv"))?;
    deformed.write_csv(&mut file)?;
    println!("wrote {}", out.join("naca4412_deformed.csv").display());
    Ok(())
}
