//! Null forms and the signature calculus.
//!
//! Q0 vanishes when both arguments share a null gradient; the cubic membrane
//! nonlinearity expands in the radial null frame into a good bulk J₁₁ and an
//! r⁻¹-weighted angular remainder J₁₂; and the signature grading (#L − #L̲)
//! decides which frame monomials a (double) null form may contain.
//!
//! Run with `cargo run --release --example null_forms`.

use membrane::geometry::{Chart, Mat, SpacetimeJet, Vect};
use membrane::nullforms::{
    classify, double_nullform_expand, eval_nullform, signature_of, FrameDir, FrameMonomial,
    NullFormId,
};
use membrane::Result;

fn main() -> Result<()> {
    let chart = Chart::Cartesian { n: 3 };

    // A null gradient: dφ = a·(1, ω) with |ω| = 1, so η^{αβ}∂_αφ∂_βφ = 0.
    let omega = [0.6, 0.64, 0.48];
    let a = 0.37;
    let null_grad: Vect = [a, a * omega[0], a * omega[1], a * omega[2]];
    let q0 = eval_nullform(NullFormId::Q0, &null_grad, &null_grad, chart);
    println!("Q0(null, null)     = {q0:+.3e}");

    // Qαβ antisymmetry on a generic pair.
    let dpsi: Vect = [0.1, -0.2, 0.05, 0.3];
    let q12 = eval_nullform(NullFormId::Qab(1, 2), &null_grad, &dpsi, chart);
    let q21 = -eval_nullform(NullFormId::Qab(1, 2), &dpsi, &null_grad, chart);
    println!("Q12 antisymmetry   = {:+.3e}", q12 - q21);

    // Double null form split at a generic off-axis event.
    let coords: Vect = [2.0, 1.0, 0.7, -0.4];
    let mk = |d1: Vect, scale: f64| {
        let mut d2: Mat = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                d2[i][j] = scale * (0.1 + 0.03 * (i * 4 + j) as f64);
            }
        }
        SpacetimeJet::order2(chart, coords, 0.1, d1, d2)
    };
    let phi = mk([0.05, 0.02, -0.04, 0.01], 0.3);
    let psi = mk([-0.02, 0.06, 0.01, -0.03], 0.5);
    let chi = mk([0.03, -0.01, 0.02, 0.04], 0.7);
    let exp = double_nullform_expand(&phi, &psi, &chi)?;
    println!("\nS^αβ∂²χ value      = {:+.6e}", exp.value);
    println!("J11 (good bulk)    = {:+.6e}", exp.j11);
    println!("J12 (angular/r)    = {:+.6e}", exp.j12);
    println!("split residual     = {:+.3e}", exp.residual);

    // Signature calculus: L̲φ·L̲ψ has signature −2 and is forbidden; mixed and
    // angular monomials stay admissible.
    println!();
    let cases = [
        ("Lφ·L̲ψ", vec![(FrameDir::L, "φ"), (FrameDir::Lbar, "ψ")]),
        ("L̲φ·L̲ψ", vec![(FrameDir::Lbar, "φ"), (FrameDir::Lbar, "ψ")]),
        ("∇̸φ·L̲ψ", vec![(FrameDir::Angular, "φ"), (FrameDir::Lbar, "ψ")]),
        ("Lφ·Lψ", vec![(FrameDir::L, "φ"), (FrameDir::L, "ψ")]),
    ];
    for (name, dirs) in cases {
        let m = FrameMonomial::first_order(&dirs);
        println!(
            "{name:8} signature {:+}  → {:?}",
            signature_of(&m),
            classify(&m)
        );
    }
    Ok(())
}
