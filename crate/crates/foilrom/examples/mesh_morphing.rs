//! Propagate a boundary deformation into a mesh with RBF interpolation:
//! fit the Wendland-kernel interpolant on the wing displacements, then
//! morph the surrounding point cloud with the focal-point cutoff.
//!
//! Run with `cargo run --example mesh_morphing`.

use foilrom::config::GeometryConfig;
use foilrom::pipeline::{reference_mesh, wing_points_and_displacements};
use foilrom::rbf::{fit_rbf, morph_mesh, BoundaryTag, CutoffConfig};
use foilrom::shape::{deform_profile, naca4_profile, BumpBasis, ParameterVector};

fn main() -> foilrom::Result<()> {
    let geo = GeometryConfig::default();
    let reference = naca4_profile(&geo.naca_code, geo.n_points, geo.closed_te)?;
    let mesh = reference_mesh(&reference, &geo)?;
    println!(
        "reference mesh: {} points ({} wing, {} outer, {} interior)",
        mesh.len(),
        mesh.tagged(BoundaryTag::Wing).len(),
        mesh.tagged(BoundaryTag::Outer).len(),
        mesh.tagged(BoundaryTag::Interior).len()
    );

    let mu = ParameterVector::new(vec![
        0.005, 0.01, 0.025, 0.01, 0.005, 0.0, 0.0, 0.01, 0.0, 0.0,
    ]);
    let deformed = deform_profile(&reference, &mu, &BumpBasis::default())?;
    let (centers, displacements) = wing_points_and_displacements(&reference, &deformed)?;
    let max_disp = displacements
        .iter()
        .map(|d| d[1].abs())
        .fold(f64::NEG_INFINITY, f64::max);
    println!(
        "{} control points, largest boundary displacement {:.4} m",
        centers.len(),
        max_disp
    );

    let model = fit_rbf(&centers, &displacements, geo.kernel_radius)?;
    let cutoff = CutoffConfig::new([0.5, 0.0], geo.r_inner, geo.r_out)?;
    let morphed = morph_mesh(&mesh, &model, &cutoff)?;

    // how far does the morph reach?
    let mut moved = 0usize;
    for (p, q) in mesh.points().iter().zip(morphed.points()) {
        if p != q {
            moved += 1;
        }
    }
    println!(
        "{moved} of {} points moved; everything beyond r_out = {} m is pinned",
        mesh.len(),
        geo.r_out
    );

    let out = std::path::Path::new("target/example-output");
    std::fs::create_dir_all(out)?;
    let mut file = std::fs::File::create(out.join("morphed_mesh.csv"))?;
    morphed.write_csv(&mut file)?;
    println!("wrote {}", out.join("morphed_mesh.csv").display());
    Ok(())
}
