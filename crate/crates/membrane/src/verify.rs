//! Self-contained invariant suites: each named suite exercises one module's
//! core identities on synthetic inputs (random polynomial jets, regime-drawn
//! gradients, tiny evolutions) and reports a residual per check.
//!
//! Every check reduces to a nonnegative residual compared against a pinned
//! tolerance; passing means residual ≤ tolerance. A global tolerance override
//! exists so a caller can tighten all checks at once (e.g. to 1e-16) and see
//! the report format under failure without breaking anything real.

use crate::diagnostics::{self, Multiplier, RadialJet, Verdict};
use crate::error::{MembraneError, Result};
use crate::fields::{AnalyticField, Poly};
use crate::geometry::{
    causal_class, frame_bundle, metric_from_jet, wave_operator_coord, wave_operator_frame,
    CausalClass, Chart, SpacetimeJet, Vect,
};
use crate::io;
use crate::nullforms::{
    classify, commutator_check, double_nullform_expand, eval_nullform, Admissibility, FrameDir,
    FrameMonomial, KlainermanField, NullFormId,
};
use crate::rng::SplitMix64;
use crate::shortpulse::{direct_data, make_profiles, PulseProfile};
use crate::solver::{step_rk4, FieldState, GridSpec, Mode};

/// One invariant check: residual `value` against tolerance `tol`.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub suite: &'static str,
    pub name: &'static str,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

/// The registered suites in report order.
pub const SUITES: &[&str] = &[
    "geometry",
    "frames",
    "nullforms",
    "solver",
    "shortpulse",
    "diagnostics",
    "io",
];

/// Run one named suite. `tol_override` replaces every per-check tolerance.
pub fn run_suite(name: &str, tol_override: Option<f64>) -> Result<Vec<CheckResult>> {
    let raw = match name {
        "geometry" => geometry_suite()?,
        "frames" => frames_suite()?,
        "nullforms" => nullforms_suite()?,
        "solver" => solver_suite()?,
        "shortpulse" => shortpulse_suite()?,
        "diagnostics" => diagnostics_suite()?,
        "io" => io_suite()?,
        other => {
            return Err(MembraneError::Config(format!(
                "unknown suite '{other}' (see --list)"
            )))
        }
    };
    let suite: &'static str = SUITES
        .iter()
        .copied()
        .find(|s| *s == name)
        .expect("matched above");
    Ok(raw
        .into_iter()
        .map(|(check, value, tol)| {
            let tol = tol_override.unwrap_or(tol);
            CheckResult {
                suite,
                name: check,
                value,
                tol,
                pass: value <= tol,
            }
        })
        .collect())
}

/// Run every suite in order.
pub fn run_all(tol_override: Option<f64>) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for s in SUITES {
        out.extend(run_suite(s, tol_override)?);
    }
    Ok(out)
}

/// Verdict tree for the JSON report: suite → check → {value, tol, pass}.
pub fn report_json(checks: &[CheckResult]) -> serde_json::Value {
    let mut suites = serde_json::Map::new();
    for c in checks {
        let entry = suites
            .entry(c.suite.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
        entry.as_object_mut().unwrap().insert(
            c.name.to_string(),
            serde_json::json!({"value": c.value, "tol": c.tol, "pass": c.pass}),
        );
    }
    serde_json::json!({
        "suites": suites,
        "all_pass": checks.iter().all(|c| c.pass),
    })
}

type RawCheck = (&'static str, f64, f64);

fn random_jet(rng: &mut SplitMix64, n: usize, scale: f64, order: usize) -> SpacetimeJet {
    let p = Poly::random(rng, n + 1, scale);
    let coords = [
        rng.uniform(0.8, 1.6),
        rng.uniform(0.4, 1.2),
        rng.uniform(-0.8, 0.8),
        if n == 3 { rng.uniform(-0.8, 0.8) } else { 0.0 },
    ];
    p.jet_at(n, coords, order)
}

// ---------------------------------------------------------------------------
// geometry
// ---------------------------------------------------------------------------

fn geometry_suite() -> Result<Vec<RawCheck>> {
    let mut rng = SplitMix64::new(0x6e01);
    let mut inv_res: f64 = 0.0;
    let mut det_res: f64 = 0.0;
    let mut wave_res: f64 = 0.0;
    for _ in 0..50 {
        let n = 2 + (rng.next_u64() % 2) as usize;
        let d = n + 1;
        let jet = random_jet(&mut rng, n, 0.04, 2);
        let m = metric_from_jet(&jet)?;
        for a in 0..d {
            for b in 0..d {
                let mut s = 0.0;
                for c in 0..d {
                    s += m.lower[a][c] * m.upper[c][b];
                }
                let id = if a == b { 1.0 } else { 0.0 };
                inv_res = inv_res.max((s - id).abs());
            }
        }
        // Matrix determinant lemma: det(η + dφ⊗dφ) = det η·(1 + Q) = −g.
        det_res = det_res.max((m.det_lower() + m.g).abs());

        let psi = random_jet(&mut rng, n, 0.04, 2);
        let coord = wave_operator_coord(&jet, &psi)?;
        let frame = wave_operator_frame(&jet, &psi)?;
        wave_res = wave_res.max((coord - frame).abs());
    }
    // Causal classification sanity: ∂ₜ is timelike, L is η-null, a large
    // spatial vector is spacelike (small-gradient metric).
    let jet = random_jet(&mut rng, 3, 0.01, 1);
    let m = metric_from_jet(&jet)?;
    let dt: Vect = [1.0, 0.0, 0.0, 0.0];
    let ex: Vect = [0.0, 1.0, 0.0, 0.0];
    let mut class_bad = 0.0;
    if causal_class(&dt, &m, 1e-6).class != CausalClass::Timelike {
        class_bad += 1.0;
    }
    if causal_class(&ex, &m, 1e-6).class != CausalClass::Spacelike {
        class_bad += 1.0;
    }
    Ok(vec![
        ("metric_inverse", inv_res, 1e-12),
        ("determinant_matches_g", det_res, 1e-12),
        ("wave_operator_chart_agreement", wave_res, 1e-10),
        ("causal_classification", class_bad, 0.5),
    ])
}

// ---------------------------------------------------------------------------
// frames
// ---------------------------------------------------------------------------

/// Regime jet: |Lφ| ≤ 0.05, L̲φ ∈ [0.5, 1.5], small angular gradient, at a
/// generic off-axis event.
fn regime_jet(rng: &mut SplitMix64, n: usize) -> SpacetimeJet {
    let lphi = rng.uniform(-0.05, 0.05);
    let lbarphi = rng.uniform(0.5, 1.5);
    let d1: Vect = [
        0.5 * (lphi + lbarphi),
        0.5 * (lphi - lbarphi),
        rng.uniform(-0.05, 0.05),
        if n == 3 { rng.uniform(-0.05, 0.05) } else { 0.0 },
    ];
    SpacetimeJet::order1(
        Chart::Cartesian { n },
        [rng.uniform(0.8, 2.0), rng.uniform(1.0, 2.0), 0.0, 0.0],
        0.0,
        d1,
    )
}

fn frames_suite() -> Result<Vec<RawCheck>> {
    let mut rng = SplitMix64::new(0x6e02);
    let mut null_res: f64 = 0.0;
    let mut orth_res: f64 = 0.0;
    let mut optical_res: f64 = 0.0;
    let mut spacelike = 0.0;
    for _ in 0..100 {
        let n = 2 + (rng.next_u64() % 2) as usize;
        let fb = frame_bundle(&regime_jet(&mut rng, n), 1e-12)?;
        let m = &fb.metric;
        null_res = null_res
            .max(m.inner(&fb.e3, &fb.e3).abs())
            .max(m.inner(&fb.e4, &fb.e4).abs());
        for e in &fb.e_a {
            orth_res = orth_res
                .max(m.inner(&fb.e3, e).abs())
                .max(m.inner(&fb.e4, e).abs());
        }
        if fb.e_a.len() == 2 {
            orth_res = orth_res.max(m.inner(&fb.e_a[0], &fb.e_a[1]).abs());
        }
        // g(Grad u, Grad u) = −(Lφ)²/(4g) and the u̲ analogue.
        let guu = m.inner(&fb.grad_u, &fb.grad_u);
        let gub = m.inner(&fb.grad_ubar, &fb.grad_ubar);
        optical_res = optical_res
            .max((guu + fb.lphi * fb.lphi / (4.0 * m.g)).abs())
            .max((gub + fb.lbarphi * fb.lbarphi / (4.0 * m.g)).abs());
        for (name, v) in &fb.classes {
            if matches!(*name, "Ltilde" | "Lbartilde") && v.class == CausalClass::Spacelike {
                spacelike += 1.0;
            }
        }
    }
    Ok(vec![
        ("e3_e4_null", null_res, 1e-12),
        ("frame_orthogonality", orth_res, 1e-12),
        ("optical_gradient_norms", optical_res, 1e-12),
        ("multipliers_never_spacelike", spacelike, 0.5),
    ])
}

// ---------------------------------------------------------------------------
// nullforms
// ---------------------------------------------------------------------------

fn nullforms_suite() -> Result<Vec<RawCheck>> {
    let mut rng = SplitMix64::new(0x6e03);

    // Q0 annihilates pairs of gradients parallel to one null covector.
    let mut q0_res: f64 = 0.0;
    for _ in 0..50 {
        let n = 3;
        let chart = Chart::Cartesian { n };
        let w = [rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)];
        let norm = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        let k: Vect = [1.0, w[0] / norm, w[1] / norm, w[2] / norm];
        let (a, b) = (rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
        let dphi: Vect = [a * k[0], a * k[1], a * k[2], a * k[3]];
        let dpsi: Vect = [b * k[0], b * k[1], b * k[2], b * k[3]];
        q0_res = q0_res.max(eval_nullform(NullFormId::Q0, &dphi, &dpsi, chart).abs());
    }

    // Commutator catalogue [Z, Q0] on exact polynomial fields.
    let mut comm_res: f64 = 0.0;
    let fields = [
        KlainermanField::Omega0(1),
        KlainermanField::Omega(1, 2),
        KlainermanField::S,
        KlainermanField::L,
        KlainermanField::Lbar,
    ];
    for _ in 0..10 {
        let phi = Poly::random(&mut rng, 4, 0.5);
        let psi = Poly::random(&mut rng, 4, 0.5);
        let x: Vect = [
            rng.uniform(0.8, 1.6),
            rng.uniform(0.4, 1.2),
            rng.uniform(0.3, 1.0),
            rng.uniform(-0.8, 0.8),
        ];
        for z in fields {
            comm_res = comm_res.max(commutator_check(z, NullFormId::Q0, &phi, &psi, 3, &x)?.abs());
        }
    }

    // Double null-form expansion closes: value = J₁₁ + J₁₂ exactly.
    let mut split_res: f64 = 0.0;
    for _ in 0..20 {
        let n = 2 + (rng.next_u64() % 2) as usize;
        let phi = random_jet(&mut rng, n, 0.04, 2);
        let psi = random_jet(&mut rng, n, 0.04, 2);
        let chi = random_jet(&mut rng, n, 0.04, 2);
        split_res = split_res.max(double_nullform_expand(&phi, &psi, &chi)?.residual.abs());
    }

    // Signature filter: L̲φ·L̲ψ (signature −2) is forbidden, mixed pairs pass.
    let mut sig_bad = 0.0;
    let bad = FrameMonomial::first_order(&[(FrameDir::Lbar, "phi"), (FrameDir::Lbar, "psi")]);
    let good = FrameMonomial::first_order(&[(FrameDir::L, "phi"), (FrameDir::Lbar, "psi")]);
    if classify(&bad) != Admissibility::Forbidden {
        sig_bad += 1.0;
    }
    if classify(&good) != Admissibility::NullAdmissible {
        sig_bad += 1.0;
    }

    Ok(vec![
        ("q0_vanishes_on_parallel_null", q0_res, 1e-12),
        ("q0_commutator_catalogue", comm_res, 1e-10),
        ("double_nullform_split", split_res, 1e-10),
        ("signature_filter", sig_bad, 0.5),
    ])
}

// ---------------------------------------------------------------------------
// solver
// ---------------------------------------------------------------------------

fn solver_suite() -> Result<Vec<RawCheck>> {
    // A rightward null profile φ = f(x − t) solves the planar equation
    // exactly (Q = 0 along one null direction), so the evolution error is
    // pure discretization.
    let grid = GridSpec::new(Mode::Planar, -8.0, 8.0, 768)?;
    let f = |s: f64| 0.1 * (-(s + 2.0) * (s + 2.0) / 0.25).exp();
    let fp = |s: f64| -2.0 * (s + 2.0) / 0.25 * 0.1 * (-(s + 2.0) * (s + 2.0) / 0.25).exp();
    let n_pts = grid.n_points;
    let phi: Vec<f64> = (0..n_pts).map(|i| f(grid.x(i))).collect();
    let psi: Vec<f64> = (0..n_pts).map(|i| -fp(grid.x(i))).collect();
    let state = FieldState::new(grid.clone(), 0.0, phi, psi, 0.1)?;
    let t_end = 2.0;
    let end = crate::solver::evolve(state, t_end, 0.4, &mut crate::solver::NoObserver)?;
    let mut wave_err: f64 = 0.0;
    for i in 0..n_pts {
        wave_err = wave_err.max((end.phi[i] - f(grid.x(i) - t_end)).abs());
    }

    // Finite propagation speed: support may not outrun the light cone by more
    // than the stencil smear (12h at the 1e-6 threshold).
    let sgrid = GridSpec::new(Mode::Radial { n: 3 }, 0.0, 6.0, 600)?;
    let h = sgrid.h();
    let bump = |r: f64| {
        let s = (r - 1.5) / 0.5;
        if s.abs() < 1.0 {
            0.05 * (-1.0 / (1.0 - s * s)).exp() * (1.0f64).exp()
        } else {
            0.0
        }
    };
    let phi: Vec<f64> = (0..600).map(|i| bump(sgrid.x(i))).collect();
    let state = FieldState::new(sgrid.clone(), 0.0, phi, vec![0.0; 600], 0.1)?;
    let r0 = state.support_radius(1e-6);
    let end = crate::solver::evolve(state, 1.0, 0.4, &mut crate::solver::NoObserver)?;
    let speed_excess = (end.support_radius(1e-6) - r0 - 1.0 - 12.0 * h).max(0.0);

    // Gauge residual of three consecutive equal-step snapshots stays at the
    // discretization level for smooth small data.
    let phi: Vec<f64> = (0..n_pts)
        .map(|i| 0.02 * (-(grid.x(i) * grid.x(i)) / 2.0).exp())
        .collect();
    let s0 = FieldState::new(grid.clone(), 0.0, phi, vec![0.0; n_pts], 0.1)?;
    let dt = crate::solver::cfl_dt(&s0, 0.4)?;
    let s1 = step_rk4(&s0, dt)?;
    let s2 = step_rk4(&s1, dt)?;
    let gauge = crate::solver::gauge_residual(&s0, &s1, &s2)?;

    Ok(vec![
        ("travelling_wave_exactness", wave_err, 1e-6),
        ("finite_propagation_speed", speed_excess, 1e-12),
        ("gauge_residual_discretization", gauge, 1e-5),
    ])
}

// ---------------------------------------------------------------------------
// shortpulse
// ---------------------------------------------------------------------------

fn shortpulse_suite() -> Result<Vec<RawCheck>> {
    let delta = 0.1;
    let spec = PulseProfile::bump(1.0, 1.0);
    let grid = GridSpec::new(Mode::Radial { n: 3 }, 0.0, 4.0, 801)?;
    let data = direct_data(delta, &spec, grid)?;
    let leak = data.support_leak();
    let state = data.into_state()?;
    let flat_gap = (1.0 - state.min_g()).max(0.0);

    // Profiles vanish at the ends of the reference interval |s| < 1.
    let (f0, f1) = make_profiles(&spec, delta)?;
    let edge = f0.value(-1.0).abs().max(f0.value(1.0).abs())
        .max(f1.value(-1.0).abs())
        .max(f1.value(1.0).abs());

    Ok(vec![
        ("direct_data_support", leak, 1e-14),
        ("metric_near_flat", flat_gap, 0.5),
        ("profile_edge_vanishing", edge, 1e-12),
    ])
}

// ---------------------------------------------------------------------------
// diagnostics
// ---------------------------------------------------------------------------

fn diagnostics_suite() -> Result<Vec<RawCheck>> {
    // Classic central second-derivative stencil.
    let w = diagnostics::fd_weights(0.0, &[-1.0, 0.0, 1.0], 2);
    let stencil = [(w[2][0] - 1.0).abs(), (w[2][1] + 2.0).abs(), (w[2][2] - 1.0).abs()]
        .into_iter()
        .fold(0.0f64, f64::max);

    let pi = std::f64::consts::PI;
    let areas = (diagnostics::sphere_area(Mode::Planar) - 1.0)
        .abs()
        .max((diagnostics::sphere_area(Mode::Radial { n: 2 }) - 2.0 * pi).abs())
        .max((diagnostics::sphere_area(Mode::Radial { n: 3 }) - 4.0 * pi).abs());

    // Exact power law recovered exactly.
    let samples: Vec<(f64, f64)> = [0.02f64, 0.04, 0.08, 0.16]
        .iter()
        .map(|&x| (x, 3.0 * x.powf(0.75)))
        .collect();
    let fit = diagnostics::scaling_fit(&samples, 0.75, Verdict::Within(0.05))?;
    let fit_res = (fit.exponent - 0.75).abs();

    // The current vanishes identically on the zero field.
    let z = RadialJet::zero(1.0, 2.0);
    let cur = diagnostics::current(&z, &z, Multiplier::TwoDt)?;
    let zero_cur = cur.p_t.abs().max(cur.p_r.abs()).max(cur.p_u.abs());

    Ok(vec![
        ("fd_weights_classic_stencil", stencil, 1e-12),
        ("sphere_areas", areas, 1e-12),
        ("scaling_fit_exact_law", fit_res, 1e-10),
        ("zero_field_current", zero_cur, 1e-15),
    ])
}

// ---------------------------------------------------------------------------
// io
// ---------------------------------------------------------------------------

fn io_suite() -> Result<Vec<RawCheck>> {
    // CRC-32 reference vector.
    let crc_bad = if io::crc32(b"123456789") == 0xcbf4_3926 { 0.0 } else { 1.0 };

    // Checkpoint round trip is byte-identical.
    let grid = GridSpec::new(Mode::Radial { n: 3 }, 0.0, 4.0, 64)?;
    let mut rng = SplitMix64::new(0x6e07);
    let phi: Vec<f64> = (0..64).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let psi: Vec<f64> = (0..64).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let state = FieldState::new(grid, 1.25, phi, psi, 0.05)?;
    let bytes = io::checkpoint_bytes(&state);
    let back = io::state_from_bytes(&bytes)?;
    let mismatches = bytes
        .iter()
        .zip(io::checkpoint_bytes(&back).iter())
        .filter(|(a, b)| a != b)
        .count() as f64;

    // Config validation names the offending field.
    let mut cfg_bad = 0.0;
    let bad = "mode = \"radial\"\ndelta = 0.0\n[grid]\nn_points = 64\n";
    match io::parse_config(bad) {
        Err(e) if e.to_string().contains("delta") => {}
        _ => cfg_bad += 1.0,
    }
    let unknown = "mode = \"radial\"\ndelta = 0.08\ntypo = 1\n[grid]\nn_points = 64\n";
    if io::parse_config(unknown).is_ok() {
        cfg_bad += 1.0;
    }

    Ok(vec![
        ("crc32_reference_vector", crc_bad, 0.5),
        ("checkpoint_round_trip", mismatches, 0.5),
        ("config_field_errors", cfg_bad, 0.5),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass_at_default_tolerances() {
        let checks = run_all(None).unwrap();
        assert_eq!(
            checks.iter().map(|c| c.suite).collect::<std::collections::BTreeSet<_>>().len(),
            SUITES.len()
        );
        for c in &checks {
            assert!(c.pass, "{}/{} residual {:.3e} > {:.3e}", c.suite, c.name, c.value, c.tol);
        }
        let report = report_json(&checks);
        assert_eq!(report["all_pass"], serde_json::json!(true));
    }

    #[test]
    fn tightened_tolerance_flags_failures() {
        let checks = run_suite("geometry", Some(1e-16)).unwrap();
        assert!(checks.iter().any(|c| !c.pass));
        let report = report_json(&checks);
        assert_eq!(report["all_pass"], serde_json::json!(false));
    }

    #[test]
    fn unknown_suite_is_a_config_error() {
        let err = run_suite("spectral", None).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
