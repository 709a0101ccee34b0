//! Tour of the pointwise geometry kernel: membrane metric, determinant
//! identity, adapted null frame, and the two wave-operator code paths.
//!
//! Run with `cargo run --release --example geometry_tour`.

use membrane::geometry::{
    frame_bundle, metric_from_jet, wave_operator_coord, wave_operator_frame, Chart, Mat,
    SpacetimeJet, Vect,
};
use membrane::Result;

fn main() -> Result<()> {
    // An order-2 jet of φ at the event (t, x, y, z) = (2, 1.2, 0.4, −0.3):
    // gradient and Hessian of φ = 0.1·t·x + 0.05·y² − 0.02·x·z.
    let chart = Chart::Cartesian { n: 3 };
    let coords: Vect = [2.0, 1.2, 0.4, -0.3];
    let d1: Vect = [
        0.1 * coords[1],
        0.1 * coords[0] - 0.02 * coords[3],
        0.1 * coords[2],
        -0.02 * coords[1],
    ];
    let mut d2: Mat = [[0.0; 4]; 4];
    d2[0][1] = 0.1;
    d2[1][0] = 0.1;
    d2[2][2] = 0.1;
    d2[1][3] = -0.02;
    d2[3][1] = -0.02;
    let value = 0.1 * coords[0] * coords[1] + 0.05 * coords[2] * coords[2]
        - 0.02 * coords[1] * coords[3];
    let jet = SpacetimeJet::order2(chart, coords, value, d1, d2);

    // g = η + dφ⊗dφ and the determinant identity det g = −(1 + Q).
    let metric = metric_from_jet(&jet)?;
    println!("Q            = {:+.6e}", metric.q);
    println!("1 + Q        = {:+.6e}", metric.g);
    println!("det g        = {:+.6e}", metric.det_lower());
    println!(
        "det g + (1+Q) = {:+.3e}   (identity residual)",
        metric.det_lower() + metric.g
    );

    // The adapted frame: e₃, e₄ are g-null, e_A are g-orthogonal to both.
    let frame = frame_bundle(&jet, 1e-12)?;
    println!("\ng(e3, e3)    = {:+.3e}", frame.metric.inner(&frame.e3, &frame.e3));
    println!("g(e4, e4)    = {:+.3e}", frame.metric.inner(&frame.e4, &frame.e4));
    println!("g(e3, e4)    = {:+.6e}", frame.metric.inner(&frame.e3, &frame.e4));
    println!("Lφ           = {:+.6e}", frame.lphi);
    println!("L̲φ           = {:+.6e}", frame.lbarphi);
    for (name, verdict) in &frame.classes {
        println!("  {name:8} {:?}", verdict.class);
    }

    // □_{g(∂φ)}ψ computed by coordinate contraction and through the frame
    // agree to roundoff; ψ is a second, independent jet at the same event.
    let psi = SpacetimeJet::order2(
        chart,
        coords,
        0.3,
        [0.02, -0.07, 0.01, 0.04],
        {
            let mut m: Mat = [[0.0; 4]; 4];
            m[0][0] = 0.05;
            m[1][1] = -0.03;
            m[2][3] = 0.02;
            m[3][2] = 0.02;
            m
        },
    );
    let coord = wave_operator_coord(&jet, &psi)?;
    let frame_val = wave_operator_frame(&jet, &psi)?;
    println!("\n□ψ (coord)   = {coord:+.12e}");
    println!("□ψ (frame)   = {frame_val:+.12e}");
    println!("difference   = {:+.3e}", coord - frame_val);
    Ok(())
}
