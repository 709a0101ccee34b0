//! Null-direction frames at one event: the flat pair (L, L̲), the modified
//! multipliers (L̃, L̲̃), the metric gradients of the optical functions, and
//! the genuinely g-null frame (e₃, e₄, e_A).
//!
//! Conventions (radial optical functions u = (t−r)/2, u̲ = (t+r)/2):
//!
//!   L  = ∂ₜ + ∂_r = ∂_u̲   (tangent to the outgoing cone C_u),
//!   L̲  = ∂ₜ − ∂_r = ∂_u,    η(L, L̲) = −2,
//!   L̃  = L + (Lφ)²L̲,        L̲̃ = L̲ + (L̲φ)²L,
//!   e₃ = −Grad u + L/(2√g),  e₄ = −Grad u̲ + L̲/(2√g),
//!
//! where Grad u = g-raised du. With these assignments g(e₃,e₃) = g(e₄,e₄) = 0
//! holds identically and e₃ → L, e₄ → L̲ as ∂φ → 0. The angular frame e_A
//! starts from a Euclidean unit basis tangent to the sphere and receives u, u̲
//! corrections fixed by the orthogonality conditions
//!
//!   e_A(u) = Lφ·(e_Aφ)/(2(√g+1)),   e_A(u̲) = L̲φ·(e_Aφ)/(2(√g+1)),
//!
//! which close to a scalar linear equation for the correction amplitude.

use super::jet::{Chart, SpacetimeJet, Vect, MAX_DIM};
use super::metric::{causal_class, metric_from_jet, CausalVerdict, MembraneMetric};
use crate::error::{MembraneError, Result};

#[derive(Clone, Debug)]
pub struct FrameBundle {
    /// Spatial dimension n; chart dimension is n+1.
    pub n: usize,
    /// Metric at the event (Cartesian components).
    pub metric: MembraneMetric,
    /// Unit radial direction ω = x/r.
    pub omega: Vect,
    pub l: Vect,
    pub lbar: Vect,
    /// Euclidean angular unit basis ē_A, A = 1..n−1 (zero t-component).
    pub angular: Vec<Vect>,
    pub ltilde: Vect,
    pub lbartilde: Vect,
    pub grad_u: Vect,
    pub grad_ubar: Vect,
    pub e3: Vect,
    pub e4: Vect,
    pub e_a: Vec<Vect>,
    /// Derivatives of φ along the flat null pair.
    pub lphi: f64,
    pub lbarphi: f64,
    /// ∇̸φ components: e̅_Aφ for each angular direction.
    pub angular_phi: Vec<f64>,
    /// Causal verdicts for (L, L̲, L̃, L̲̃, Grad u, Grad u̲, e₃, e₄, e_A..).
    pub classes: Vec<(&'static str, CausalVerdict)>,
}

/// Build the frame bundle from an order-≥1 jet (Cartesian or radial chart).
pub fn frame_bundle(jet: &SpacetimeJet, tol: f64) -> Result<FrameBundle> {
    let cart = jet.to_cartesian()?;
    let n = match cart.chart {
        Chart::Cartesian { n } => n,
        _ => unreachable!(),
    };
    let d = n + 1;
    let metric = metric_from_jet(&cart)?;
    let dphi = cart.d1();

    let r = {
        let mut s = 0.0;
        for i in 1..d {
            s += cart.coords[i] * cart.coords[i];
        }
        s.sqrt()
    };
    if r < 1e-8 {
        return Err(MembraneError::OriginSingular(r));
    }
    let mut omega = [0.0; MAX_DIM];
    for i in 1..d {
        omega[i] = cart.coords[i] / r;
    }

    let mut l = [0.0; MAX_DIM];
    let mut lbar = [0.0; MAX_DIM];
    l[0] = 1.0;
    lbar[0] = 1.0;
    for i in 1..d {
        l[i] = omega[i];
        lbar[i] = -omega[i];
    }
    let lphi = dir(&l, dphi, d);
    let lbarphi = dir(&lbar, dphi, d);

    let ltilde = axpy(&l, lphi * lphi, &lbar, d);
    let lbartilde = axpy(&lbar, lbarphi * lbarphi, &l, d);

    // du = (1, −ω)/2, du̲ = (1, ω)/2; Grad = g-raise of the covector.
    let mut du = [0.0; MAX_DIM];
    let mut dubar = [0.0; MAX_DIM];
    du[0] = 0.5;
    dubar[0] = 0.5;
    for i in 1..d {
        du[i] = -0.5 * omega[i];
        dubar[i] = 0.5 * omega[i];
    }
    let grad_u = raise(&metric, &du, d);
    let grad_ubar = raise(&metric, &dubar, d);

    let sqrt_g = metric.sqrt_g();
    let mut e3 = [0.0; MAX_DIM];
    let mut e4 = [0.0; MAX_DIM];
    for a in 0..d {
        e3[a] = -grad_u[a] + l[a] / (2.0 * sqrt_g);
        e4[a] = -grad_ubar[a] + lbar[a] / (2.0 * sqrt_g);
    }

    // Euclidean angular unit basis orthogonal to ω.
    let angular = angular_basis(&omega, n);
    let angular_phi: Vec<f64> = angular.iter().map(|e| dir(e, dphi, d)).collect();

    // Correction amplitude s: e_A = s·(Lφ·L̲ + L̲φ·L) + ē_A, with
    // s = ē_Aφ / (2(√g + 1) − 2LφL̲φ).
    let denom = 2.0 * (sqrt_g + 1.0) - 2.0 * lphi * lbarphi;
    if denom.abs() < 1e-8 || (sqrt_g + 1.0).abs() < tol {
        return Err(MembraneError::FrameSolveFailed(format!(
            "angular correction system singular (denominator {denom:.3e})"
        )));
    }
    let mut e_a: Vec<Vect> = Vec::with_capacity(n.saturating_sub(1));
    for (ebar, &w) in angular.iter().zip(&angular_phi) {
        let s = w / denom;
        let mut e = *ebar;
        for a in 0..d {
            e[a] += s * (lphi * lbar[a] + lbarphi * l[a]);
        }
        e_a.push(e);
    }

    // n = 3: Gram–Schmidt the two angular frame vectors under g, then rescale
    // so the Euclidean angular part stays unit (the O(1) length requirement).
    if e_a.len() == 2 {
        let g11 = metric.inner(&e_a[0], &e_a[0]);
        if g11.abs() < 1e-12 {
            return Err(MembraneError::FrameSolveFailed(
                "angular frame vector degenerate under g".into(),
            ));
        }
        let lam = metric.inner(&e_a[0], &e_a[1]) / g11;
        let mut e2 = [0.0; MAX_DIM];
        for a in 0..d {
            e2[a] = e_a[1][a] - lam * e_a[0][a];
        }
        // Euclidean length of the angular (ω-orthogonal spatial) part.
        let mut tang = [0.0; MAX_DIM];
        let mut radial = 0.0;
        for i in 1..d {
            radial += e2[i] * omega[i];
        }
        let mut norm2 = 0.0;
        for i in 1..d {
            tang[i] = e2[i] - radial * omega[i];
            norm2 += tang[i] * tang[i];
        }
        let norm = norm2.sqrt();
        if norm < 1e-12 {
            return Err(MembraneError::FrameSolveFailed(
                "angular frame collapsed during orthogonalization".into(),
            ));
        }
        for a in 0..d {
            e2[a] /= norm;
        }
        e_a[1] = e2;
    }

    let mut classes = vec![
        ("L", causal_class(&l, &metric, tol)),
        ("Lbar", causal_class(&lbar, &metric, tol)),
        ("Ltilde", causal_class(&ltilde, &metric, tol)),
        ("Lbartilde", causal_class(&lbartilde, &metric, tol)),
        ("Grad_u", causal_class(&grad_u, &metric, tol)),
        ("Grad_ubar", causal_class(&grad_ubar, &metric, tol)),
        ("e3", causal_class(&e3, &metric, tol)),
        ("e4", causal_class(&e4, &metric, tol)),
    ];
    for (i, e) in e_a.iter().enumerate() {
        let name: &'static str = match i {
            0 => "e_1",
            _ => "e_2",
        };
        classes.push((name, causal_class(e, &metric, tol)));
    }

    Ok(FrameBundle {
        n,
        metric,
        omega,
        l,
        lbar,
        angular,
        ltilde,
        lbartilde,
        grad_u,
        grad_ubar,
        e3,
        e4,
        e_a,
        lphi,
        lbarphi,
        angular_phi,
        classes,
    })
}

/// Directional derivative X^α∂_αφ.
fn dir(x: &Vect, dphi: &Vect, d: usize) -> f64 {
    (0..d).map(|a| x[a] * dphi[a]).sum()
}

fn axpy(x: &Vect, c: f64, y: &Vect, d: usize) -> Vect {
    let mut out = [0.0; MAX_DIM];
    for a in 0..d {
        out[a] = x[a] + c * y[a];
    }
    out
}

fn raise(metric: &MembraneMetric, covec: &Vect, d: usize) -> Vect {
    let mut out = [0.0; MAX_DIM];
    for a in 0..d {
        for b in 0..d {
            out[a] += metric.upper[a][b] * covec[b];
        }
    }
    out
}

/// Deterministic Euclidean orthonormal basis of the tangent space to the
/// sphere at ω (n−1 vectors with zero time component).
fn angular_basis(omega: &Vect, n: usize) -> Vec<Vect> {
    match n {
        1 => Vec::new(),
        2 => {
            let mut e = [0.0; MAX_DIM];
            e[1] = -omega[2];
            e[2] = omega[1];
            vec![e]
        }
        3 => {
            // Pick the coordinate axis least aligned with ω, project, normalize,
            // then complete with the cross product.
            let w = [omega[1], omega[2], omega[3]];
            let mut k = 0;
            for i in 1..3 {
                if w[i].abs() < w[k].abs() {
                    k = i;
                }
            }
            let mut a = [0.0; 3];
            a[k] = 1.0;
            let dot = a[0] * w[0] + a[1] * w[1] + a[2] * w[2];
            let mut t = [a[0] - dot * w[0], a[1] - dot * w[1], a[2] - dot * w[2]];
            let norm = (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt();
            for x in &mut t {
                *x /= norm;
            }
            let c = [
                w[1] * t[2] - w[2] * t[1],
                w[2] * t[0] - w[0] * t[2],
                w[0] * t[1] - w[1] * t[0],
            ];
            let mut e1 = [0.0; MAX_DIM];
            let mut e2 = [0.0; MAX_DIM];
            e1[1..4].copy_from_slice(&t);
            e2[1..4].copy_from_slice(&c);
            vec![e1, e2]
        }
        _ => unreachable!("spatial dimension bounded by 3"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::jet::Chart;
    use crate::geometry::metric::CausalClass;

    fn jet_at(n: usize, coords: Vect, d1: Vect) -> SpacetimeJet {
        SpacetimeJet::order1(Chart::Cartesian { n }, coords, 0.0, d1)
    }

    #[test]
    fn flat_limit_collapses_to_l_lbar() {
        let jet = jet_at(3, [2.0, 1.0, 0.5, -0.3], [0.0; 4]);
        let fb = frame_bundle(&jet, 1e-12).unwrap();
        for a in 0..4 {
            assert!((fb.ltilde[a] - fb.l[a]).abs() < 1e-15);
            assert!((fb.lbartilde[a] - fb.lbar[a]).abs() < 1e-15);
            // Grad u = −L/2, Grad u̲ = −L̲/2 in the flat limit.
            assert!((fb.grad_u[a] + 0.5 * fb.l[a]).abs() < 1e-15);
            assert!((fb.grad_ubar[a] + 0.5 * fb.lbar[a]).abs() < 1e-15);
            assert!((fb.e3[a] - fb.l[a]).abs() < 1e-15);
            assert!((fb.e4[a] - fb.lbar[a]).abs() < 1e-15);
        }
        // η(L, L̲) = −2.
        assert!((fb.metric.inner(&fb.l, &fb.lbar) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn frame_null_and_orthogonal_at_generic_jet() {
        let jet = jet_at(
            3,
            [1.7, 0.9, -0.4, 0.2],
            [0.31, -0.12, 0.22, 0.05],
        );
        let fb = frame_bundle(&jet, 1e-12).unwrap();
        let m = &fb.metric;
        assert!(m.inner(&fb.e3, &fb.e3).abs() < 1e-12);
        assert!(m.inner(&fb.e4, &fb.e4).abs() < 1e-12);
        for e in &fb.e_a {
            assert!(m.inner(&fb.e3, e).abs() < 1e-12);
            assert!(m.inner(&fb.e4, e).abs() < 1e-12);
        }
        assert!(m.inner(&fb.e_a[0], &fb.e_a[1]).abs() < 1e-12);
        assert!(m.inner(&fb.e3, &fb.e4) < 0.0);
    }

    #[test]
    fn optical_gradient_components_match_closed_form() {
        let jet = jet_at(2, [1.2, 0.8, 0.3, 0.0], [0.25, 0.1, -0.2, 0.0]);
        let fb = frame_bundle(&jet, 1e-12).unwrap();
        let m = &fb.metric;
        // g(Grad u, Grad u) = g^{uu} = −(Lφ)²/(4g), and likewise for u̲.
        let guu = m.inner(&fb.grad_u, &fb.grad_u);
        let gubub = m.inner(&fb.grad_ubar, &fb.grad_ubar);
        assert!((guu + fb.lphi * fb.lphi / (4.0 * m.g)).abs() < 1e-14);
        assert!((gubub + fb.lbarphi * fb.lbarphi / (4.0 * m.g)).abs() < 1e-14);
        // Grad u applied to any X equals du(X): check against e.g. L̲(u) = 1.
        assert!((m.inner(&fb.grad_u, &fb.lbar) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn multipliers_causal_in_pulse_regime() {
        // |Lφ|, |∇̸φ| small, L̲φ order one: L̃ and L̲̃ must not be spacelike.
        let mut rng = crate::rng::SplitMix64::new(0xf0a3);
        for _ in 0..200 {
            let lphi = rng.uniform(-0.05, 0.05);
            let lbarphi = rng.uniform(0.5, 1.5);
            // Radial point on the x-axis: φ_t = (Lφ+L̲φ)/2, φ_x = (Lφ−L̲φ)/2.
            let d1 = [
                0.5 * (lphi + lbarphi),
                0.5 * (lphi - lbarphi),
                rng.uniform(-0.05, 0.05),
                0.0,
            ];
            let jet = jet_at(2, [1.0, 2.0, 0.0, 0.0], d1);
            let fb = frame_bundle(&jet, 1e-12).unwrap();
            let lt = causal_class(&fb.ltilde, &fb.metric, 1e-12);
            let lbt = causal_class(&fb.lbartilde, &fb.metric, 1e-12);
            assert_ne!(lt.class, CausalClass::Spacelike, "L̃ spacelike: {lt:?}");
            assert_ne!(lbt.class, CausalClass::Spacelike, "L̲̃ spacelike: {lbt:?}");
            // Lemma closed form: g(L̃,L̃) = −3(Lφ)² + (2LφL̲φ + (Lφ)²(L̲φ)²)(Lφ)².
            let got = fb.metric.inner(&fb.ltilde, &fb.ltilde);
            let want = -3.0 * lphi * lphi
                + (2.0 * lphi * lbarphi + lphi * lphi * lbarphi * lbarphi) * lphi * lphi;
            assert!((got - want).abs() < 1e-12);
        }
    }
}
