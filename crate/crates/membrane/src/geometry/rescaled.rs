//! The membrane metric in the pulse-adapted chart (u′, u̲′) = (u/δ, u̲).
//!
//! Only the flat background changes: η has η(∂_{u′}, ∂_{u̲′}) = −2δ, so the
//! contravariant components scale like g′^{u′u′} = δ⁻²g^{uu},
//! g′^{u′u̲′} = δ⁻¹g^{uu̲}, g′^{u̲′u̲′} = g^{u̲u̲}, which is exactly the
//! chain rule for u = δu′. We build g′ intrinsically (η′ + dφ⊗dφ) and expose
//! the chain-rule transform as an independent cross-check.
//!
//! Note on the printed slab-spacelikeness display: the exact pullback gives
//! g′_{t′t′} = −δ + (∂_{t′}φ)² and g′^{t′t′} = −δ⁻¹ − δ⁻²(∂_{t′}φ)²/g, whose
//! quadratic corrections differ from the typeset table by a factor and a sign
//! in the covariant entry. We implement the exact transform (it is the one
//! consistent with the chain rule to machine precision) and only assert the
//! φ = 0 value −δ plus the sign of g′^{t′t′} (slab spacelikeness), which both
//! versions share.

use super::jet::{Chart, SpacetimeJet, MAX_DIM};
use super::metric::{metric_with_eta, MembraneMetric};
use crate::error::{MembraneError, Result};

/// Metric components for a jet in the rescaled chart (u′, u̲′).
pub fn rescaled_metric(jet: &SpacetimeJet, delta: f64) -> Result<MembraneMetric> {
    if !matches!(jet.chart, Chart::Rescaled { .. }) {
        return Err(MembraneError::Config(
            "rescaled_metric expects a rescaled-chart jet".into(),
        ));
    }
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(MembraneError::Config(format!(
            "delta = {delta} outside (0, 0.5]"
        )));
    }
    metric_with_eta(jet, delta)
}

/// The same event expressed as an unprimed null-chart jet (u = δu′, u̲ = u̲′):
/// ∂_uφ = δ⁻¹∂_{u′}φ and so on by the chain rule, for cross-checking the
/// scaling table.
pub fn to_null_chart(jet: &SpacetimeJet, delta: f64) -> Result<SpacetimeJet> {
    let n = jet.chart.n();
    if !matches!(jet.chart, Chart::Rescaled { .. }) {
        return Err(MembraneError::Config(
            "to_null_chart expects a rescaled-chart jet".into(),
        ));
    }
    let coords = [delta * jet.coords[0], jet.coords[1], 0.0, 0.0];
    // scale factor per index: u-index picks up δ⁻¹.
    let s = [1.0 / delta, 1.0, 0.0, 0.0];
    let mut d1 = [0.0; MAX_DIM];
    for a in 0..2 {
        d1[a] = s[a] * jet.d1()[a];
    }
    if jet.order() < 2 {
        return Ok(SpacetimeJet::order1(Chart::Null { n }, coords, jet.value, d1));
    }
    let mut d2 = [[0.0; MAX_DIM]; MAX_DIM];
    for a in 0..2 {
        for b in 0..2 {
            d2[a][b] = s[a] * s[b] * jet.d2()?[a][b];
        }
    }
    Ok(SpacetimeJet::order2(
        Chart::Null { n },
        coords,
        jet.value,
        d1,
        d2,
    ))
}

/// g′_{t′t′} for a rescaled metric, from t′ = u′ + u̲′:
/// ¼(g′_{u′u′} + 2g′_{u′u̲′} + g′_{u̲′u̲′}).
pub fn g_tptp(metric: &MembraneMetric) -> f64 {
    0.25 * (metric.lower[0][0] + 2.0 * metric.lower[0][1] + metric.lower[1][1])
}

/// g′^{t′t′} = g′^{u′u′} + 2g′^{u′u̲′} + g′^{u̲′u̲′} (gradient of t′ = u′ + u̲′).
pub fn g_up_tptp(metric: &MembraneMetric) -> f64 {
    metric.upper[0][0] + 2.0 * metric.upper[0][1] + metric.upper[1][1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::metric::metric_from_jet;

    fn rescaled_jet(d1: [f64; 2]) -> SpacetimeJet {
        SpacetimeJet::order1(
            Chart::Rescaled { n: 3 },
            [0.3, 1.4, 0.0, 0.0],
            0.1,
            [d1[0], d1[1], 0.0, 0.0],
        )
    }

    #[test]
    fn flat_scaling_table_entry() {
        // φ = 0, δ = 0.1: g′^{u′u̲′} = δ⁻¹·g^{uu̲} = 10·(−1/2).
        let delta = 0.1;
        let jet = rescaled_jet([0.0, 0.0]);
        let m = rescaled_metric(&jet, delta).unwrap();
        assert!((m.upper[0][1] - 10.0 * (-0.5)).abs() < 1e-12);
        assert!((g_tptp(&m) + delta).abs() < 1e-15);
        assert!(g_up_tptp(&m) < 0.0, "t′ slices must stay spacelike");
    }

    #[test]
    fn chain_rule_consistency_at_random_jets() {
        let mut rng = crate::rng::SplitMix64::new(0x6a11);
        for _ in 0..200 {
            let delta = rng.uniform(0.02, 0.5);
            // Short-pulse regime: ∂_{u′}φ = δ∂_uφ stays O(δ), keeping g > 0.
            let jet = rescaled_jet([delta * rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)]);
            let mp = rescaled_metric(&jet, delta).unwrap();
            let unprimed = to_null_chart(&jet, delta).unwrap();
            let m = metric_from_jet(&unprimed).unwrap();
            // Scalars agree; contravariant components follow the table.
            assert!((mp.q - m.q).abs() < 1e-12);
            let s = [1.0 / delta, 1.0];
            for a in 0..2 {
                for b in 0..2 {
                    let want = s[a] * s[b] * m.upper[a][b];
                    assert!(
                        (mp.upper[a][b] - want).abs() < 1e-12 * want.abs().max(1.0),
                        "component ({a},{b})"
                    );
                }
            }
            // Covariant entries scale the opposite way.
            for a in 0..2 {
                for b in 0..2 {
                    let want = m.lower[a][b] / (s[a] * s[b]);
                    assert!((mp.lower[a][b] - want).abs() < 1e-12);
                }
            }
            assert!(g_up_tptp(&mp) < 0.0);
        }
    }
}
