//! Christoffel symbols of g(∂φ) and the two routes to the covariant wave
//! operator: coordinate contraction and the null-frame form
//! 2g³⁴D₃D₄ψ + g^{AB}D_AD_Bψ. The two must agree, which exercises both the
//! connection assembly and the frame construction.

use super::frame::{frame_bundle, FrameBundle};
use super::jet::{Chart, SpacetimeJet, Ten3, Vect, MAX_DIM};
use super::metric::{metric_from_jet, MembraneMetric};
use crate::error::Result;

/// Γ^γ_{αβ} = ½g^{γδ}(∂_αg_{δβ} + ∂_βg_{δα} − ∂_δg_{αβ}) with the metric
/// derivatives assembled from the order-2 jet:
/// ∂_γ g_{αβ} = ∂_γ∂_αφ·∂_βφ + ∂_αφ·∂_γ∂_βφ.
pub fn christoffels(jet: &SpacetimeJet) -> Result<Ten3> {
    let metric = metric_from_jet(jet)?;
    christoffels_with(jet, &metric)
}

pub(crate) fn christoffels_with(jet: &SpacetimeJet, metric: &MembraneMetric) -> Result<Ten3> {
    let d = jet.dim();
    let d1 = jet.d1();
    let d2 = jet.d2()?;

    // dg[c][a][b] = ∂_c g_{ab}
    let mut dg = [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM];
    for c in 0..d {
        for a in 0..d {
            for b in 0..d {
                dg[c][a][b] = d2[c][a] * d1[b] + d1[a] * d2[c][b];
            }
        }
    }

    let mut gamma = [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM];
    for g in 0..d {
        for a in 0..d {
            for b in 0..d {
                let mut s = 0.0;
                for e in 0..d {
                    s += metric.upper[g][e] * (dg[a][e][b] + dg[b][e][a] - dg[e][a][b]);
                }
                gamma[g][a][b] = 0.5 * s;
            }
        }
    }
    Ok(gamma)
}

/// □_{g(∂φ)}ψ by coordinate contraction: g^{αβ}(∂_α∂_βψ − Γ^γ_{αβ}∂_γψ).
///
/// For ψ = φ solving the membrane equation this reduces to g^{αβ}∂_α∂_βφ by
/// the wave-gauge identity ∂_α(√g g^{αβ}) = 0. Radial-chart jets are converted
/// to Cartesian so the angular trace of the Hessian is included.
pub fn wave_operator_coord(phi: &SpacetimeJet, psi: &SpacetimeJet) -> Result<f64> {
    let (phi, psi) = align(phi, psi)?;
    let metric = metric_from_jet(&phi)?;
    let gamma = christoffels_with(&phi, &metric)?;
    let d = phi.dim();
    let pd1 = psi.d1();
    let pd2 = psi.d2()?;
    let mut out = 0.0;
    for a in 0..d {
        for b in 0..d {
            let mut hess = pd2[a][b];
            for g in 0..d {
                hess -= gamma[g][a][b] * pd1[g];
            }
            out += metric.upper[a][b] * hess;
        }
    }
    Ok(out)
}

/// □_{g(∂φ)}ψ through the adapted null frame: 2g³⁴D²ψ(e₃,e₄) + g^{AB}D²ψ(e_A,e_B),
/// with g³⁴ = 1/g(e₃,e₄) and g^{AB} the inverse of the angular Gram block.
pub fn wave_operator_frame(phi: &SpacetimeJet, psi: &SpacetimeJet) -> Result<f64> {
    let (phi, psi) = align(phi, psi)?;
    let metric = metric_from_jet(&phi)?;
    let gamma = christoffels_with(&phi, &metric)?;
    let fb = frame_bundle(&phi, 1e-12)?;
    let d = phi.dim();

    let hess = |x: &Vect, y: &Vect| -> Result<f64> {
        let pd1 = psi.d1();
        let pd2 = psi.d2()?;
        let mut s = 0.0;
        for a in 0..d {
            for b in 0..d {
                let mut h = pd2[a][b];
                for g in 0..d {
                    h -= gamma[g][a][b] * pd1[g];
                }
                s += x[a] * y[b] * h;
            }
        }
        Ok(s)
    };

    let g34 = metric.inner(&fb.e3, &fb.e4);
    let mut out = 2.0 / g34 * hess(&fb.e3, &fb.e4)?;
    out += angular_trace(&fb, &metric, hess)?;
    Ok(out)
}

fn angular_trace<F>(fb: &FrameBundle, metric: &MembraneMetric, hess: F) -> Result<f64>
where
    F: Fn(&Vect, &Vect) -> Result<f64>,
{
    match fb.e_a.len() {
        0 => Ok(0.0),
        1 => {
            let g11 = metric.inner(&fb.e_a[0], &fb.e_a[0]);
            Ok(hess(&fb.e_a[0], &fb.e_a[0])? / g11)
        }
        2 => {
            let g11 = metric.inner(&fb.e_a[0], &fb.e_a[0]);
            let g12 = metric.inner(&fb.e_a[0], &fb.e_a[1]);
            let g22 = metric.inner(&fb.e_a[1], &fb.e_a[1]);
            let det = g11 * g22 - g12 * g12;
            let (i11, i12, i22) = (g22 / det, -g12 / det, g11 / det);
            Ok(i11 * hess(&fb.e_a[0], &fb.e_a[0])?
                + 2.0 * i12 * hess(&fb.e_a[0], &fb.e_a[1])?
                + i22 * hess(&fb.e_a[1], &fb.e_a[1])?)
        }
        _ => unreachable!(),
    }
}

fn align(phi: &SpacetimeJet, psi: &SpacetimeJet) -> Result<(SpacetimeJet, SpacetimeJet)> {
    debug_assert_eq!(phi.chart, psi.chart, "wave operator needs a common chart");
    match phi.chart {
        Chart::Radial { .. } => Ok((phi.to_cartesian()?, psi.to_cartesian()?)),
        _ => Ok((phi.clone(), psi.clone())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::jet::{Chart, Mat};

    /// φ = f(t−x) travelling-wave jet with f = sin.
    fn null_wave_jet(t: f64, x: f64) -> SpacetimeJet {
        let s = t - x;
        let (f1, f2) = (s.cos(), -s.sin());
        let d1 = [f1, -f1, 0.0, 0.0];
        let mut d2: Mat = [[0.0; 4]; 4];
        d2[0][0] = f2;
        d2[0][1] = -f2;
        d2[1][0] = -f2;
        d2[1][1] = f2;
        SpacetimeJet::order2(Chart::Cartesian { n: 1 }, [t, x, 0.0, 0.0], s.sin(), d1, d2)
    }

    #[test]
    fn constant_gradient_has_no_connection() {
        let jet = SpacetimeJet::order2(
            Chart::Cartesian { n: 2 },
            [0.0, 1.0, 0.2, 0.0],
            0.0,
            [0.3, 0.1, -0.2, 0.0],
            [[0.0; 4]; 4],
        );
        let gamma = christoffels(&jet).unwrap();
        for g in 0..3 {
            for a in 0..3 {
                for b in 0..3 {
                    assert_eq!(gamma[g][a][b], 0.0);
                }
            }
        }
    }

    #[test]
    fn null_travelling_wave_solves_the_equation() {
        for (t, x) in [(0.0, 0.7), (1.3, -0.4), (2.0, 2.5)] {
            let jet = null_wave_jet(t, x);
            let b = wave_operator_coord(&jet, &jet).unwrap();
            assert!(b.abs() < 1e-13, "box = {b:.3e}");
        }
    }

    #[test]
    fn flat_background_reduces_to_dalembertian() {
        // ∂φ = 0 background; ψ quadratic with known □ψ = −ψ_tt + Δψ.
        let phi = SpacetimeJet::order2(
            Chart::Cartesian { n: 2 },
            [0.5, 1.0, 0.4, 0.0],
            0.0,
            [0.0; 4],
            [[0.0; 4]; 4],
        );
        let mut d2: Mat = [[0.0; 4]; 4];
        d2[0][0] = 2.0;
        d2[1][1] = 3.0;
        d2[2][2] = -1.0;
        let psi = SpacetimeJet::order2(
            Chart::Cartesian { n: 2 },
            [0.5, 1.0, 0.4, 0.0],
            0.0,
            [0.0; 4],
            d2,
        );
        let b = wave_operator_coord(&phi, &psi).unwrap();
        assert!((b - (-2.0 + 3.0 - 1.0)).abs() < 1e-14);
        let bf = wave_operator_frame(&phi, &psi).unwrap();
        assert!((bf - b).abs() < 1e-12);
    }

    #[test]
    fn frame_and_coordinate_routes_agree_on_generic_jets() {
        let mut rng = crate::rng::SplitMix64::new(0x11ce);
        for n in [2usize, 3] {
            for _ in 0..50 {
                let d = n + 1;
                let mut coords = [0.0; 4];
                coords[0] = rng.uniform(0.5, 2.0);
                for i in 1..d {
                    coords[i] = rng.uniform(0.4, 1.5);
                }
                let mut rand_jet = |scale: f64| {
                    let mut d1 = [0.0; 4];
                    let mut d2: Mat = [[0.0; 4]; 4];
                    for a in 0..d {
                        d1[a] = rng.uniform(-scale, scale);
                        for b in 0..d {
                            d2[a][b] = rng.uniform(-scale, scale);
                        }
                    }
                    (d1, d2)
                };
                let (pd1, pd2) = rand_jet(0.3);
                let (sd1, sd2) = rand_jet(1.0);
                let phi = SpacetimeJet::order2(Chart::Cartesian { n }, coords, 0.0, pd1, pd2);
                let psi = SpacetimeJet::order2(Chart::Cartesian { n }, coords, 0.0, sd1, sd2);
                let bc = wave_operator_coord(&phi, &psi).unwrap();
                let bf = wave_operator_frame(&phi, &psi).unwrap();
                let scale = bc.abs().max(1.0);
                assert!(
                    (bc - bf).abs() / scale < 1e-8,
                    "coord {bc:.6e} vs frame {bf:.6e}"
                );
            }
        }
    }
}
