//! The membrane metric g(∂φ) = η + dφ⊗dφ and causality classification.
//!
//! Components in a chart with flat metric η:
//!
//!   g_{αβ} = η_{αβ} + ∂_αφ ∂_βφ,
//!   g^{αβ} = η^{αβ} − ∂^αφ ∂^βφ / (1 + Q),     Q = η^{αβ}∂_αφ∂_βφ,
//!
//! with |det g_{αβ}| = (1 + Q)·|det η|. Hyperbolicity requires g = 1 + Q > 0;
//! we refuse to build a metric once g drops to the guard threshold.

use super::jet::{Chart, Mat, SpacetimeJet, Vect, MAX_DIM};
use crate::error::{MembraneError, Result};

/// Threshold below which g = 1 + Q counts as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-6;

/// Default absolute tolerance for the causal classification of a vector.
pub const CAUSAL_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct MembraneMetric {
    pub chart: Chart,
    /// Q = η^{αβ}∂_αφ∂_βφ (chart-invariant scalar).
    pub q: f64,
    /// g = 1 + Q.
    pub g: f64,
    /// g_{αβ}.
    pub lower: Mat,
    /// g^{αβ}.
    pub upper: Mat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CausalClass {
    Timelike,
    Null,
    Spacelike,
}

#[derive(Clone, Copy, Debug)]
pub struct CausalVerdict {
    /// The quadratic g(X, X).
    pub value: f64,
    pub class: CausalClass,
    pub tol: f64,
}

impl MembraneMetric {
    /// g(X, Y) by exact bilinear contraction of chart components.
    pub fn inner(&self, x: &Vect, y: &Vect) -> f64 {
        let d = self.chart.dim();
        let mut s = 0.0;
        for a in 0..d {
            for b in 0..d {
                s += self.lower[a][b] * x[a] * y[b];
            }
        }
        s
    }

    /// det(g_{αβ}) over the chart block.
    pub fn det_lower(&self) -> f64 {
        det(&self.lower, self.chart.dim())
    }

    pub fn sqrt_g(&self) -> f64 {
        self.g.sqrt()
    }
}

/// Build the metric from a jet, using the jet chart's own flat metric.
///
/// Rescaled-chart jets carry a δ-dependent flat metric and must go through
/// [`rescaled_metric`](super::rescaled::rescaled_metric) instead.
pub fn metric_from_jet(jet: &SpacetimeJet) -> Result<MembraneMetric> {
    if matches!(jet.chart, Chart::Rescaled { .. }) {
        return Err(MembraneError::Config(
            "rescaled-chart jets need δ: use rescaled_metric".into(),
        ));
    }
    metric_with_eta(jet, 0.0)
}

/// Shared construction: metric from jet with the chart flat metric η(δ).
pub(crate) fn metric_with_eta(jet: &SpacetimeJet, delta: f64) -> Result<MembraneMetric> {
    let d = jet.dim();
    let eta_lo = jet.chart.eta_lower(delta);
    let eta_up = jet.chart.eta_upper(delta);
    let dphi = jet.d1();

    // ∂^αφ = η^{αβ}∂_βφ and Q = ∂^αφ∂_αφ.
    let mut dphi_up = [0.0; MAX_DIM];
    for a in 0..d {
        for b in 0..d {
            dphi_up[a] += eta_up[a][b] * dphi[b];
        }
    }
    let mut q = 0.0;
    for a in 0..d {
        q += dphi_up[a] * dphi[a];
    }
    let g = 1.0 + q;
    if g <= DEGENERACY_THRESHOLD {
        return Err(MembraneError::DegenerateMetric {
            g,
            threshold: DEGENERACY_THRESHOLD,
            at: None,
        });
    }

    let mut lower = [[0.0; MAX_DIM]; MAX_DIM];
    let mut upper = [[0.0; MAX_DIM]; MAX_DIM];
    for a in 0..d {
        for b in 0..d {
            lower[a][b] = eta_lo[a][b] + dphi[a] * dphi[b];
            upper[a][b] = eta_up[a][b] - dphi_up[a] * dphi_up[b] / g;
        }
    }

    Ok(MembraneMetric {
        chart: jet.chart,
        q,
        g,
        lower,
        upper,
    })
}

/// Classify a vector as timelike / null / spacelike by the sign of g(X, X)
/// within an absolute tolerance.
pub fn causal_class(x: &Vect, metric: &MembraneMetric, tol: f64) -> CausalVerdict {
    let value = metric.inner(x, x);
    let class = if value < -tol {
        CausalClass::Timelike
    } else if value <= tol {
        CausalClass::Null
    } else {
        CausalClass::Spacelike
    };
    CausalVerdict { value, class, tol }
}

fn det(m: &Mat, d: usize) -> f64 {
    match d {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        4 => {
            // Laplace expansion along the first row over 3×3 minors.
            let mut total = 0.0;
            for col in 0..4 {
                let mut minor = [[0.0; MAX_DIM]; MAX_DIM];
                for (mi, i) in (1..4).enumerate() {
                    let mut mj = 0;
                    for j in 0..4 {
                        if j == col {
                            continue;
                        }
                        minor[mi][mj] = m[i][j];
                        mj += 1;
                    }
                }
                let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
                total += sign * m[0][col] * det(&minor, 3);
            }
            total
        }
        _ => unreachable!("chart dimension bounded by MAX_DIM"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::jet::Chart;

    fn jet1(chart: Chart, d1: Vect) -> SpacetimeJet {
        SpacetimeJet::order1(chart, [0.0, 1.0, 0.0, 0.0], 0.0, d1)
    }

    #[test]
    fn zero_gradient_gives_minkowski() {
        let jet = jet1(Chart::Cartesian { n: 3 }, [0.0; 4]);
        let m = metric_from_jet(&jet).unwrap();
        assert_eq!(m.q, 0.0);
        assert_eq!(m.g, 1.0);
        for a in 0..4 {
            for b in 0..4 {
                let eta = if a != b {
                    0.0
                } else if a == 0 {
                    -1.0
                } else {
                    1.0
                };
                assert_eq!(m.upper[a][b], eta);
                assert_eq!(m.lower[a][b], eta);
            }
        }
    }

    #[test]
    fn planar_point_three_four() {
        // (∂ₜφ, ∂ₓφ) = (0.3, 0.4): Q = −0.09 + 0.16 = 0.07, det g = −1.07.
        let jet = jet1(Chart::Cartesian { n: 1 }, [0.3, 0.4, 0.0, 0.0]);
        let m = metric_from_jet(&jet).unwrap();
        assert!((m.q - 0.07).abs() < 1e-15);
        assert!((m.det_lower() + 1.07).abs() < 1e-15);
        assert!((m.det_lower().abs() - m.g).abs() < 1e-15);
    }

    #[test]
    fn null_gradient_keeps_q_zero() {
        // (∂ₜφ, ∂ₓφ) = (a, a): Q = 0, g = 1, and the stated components.
        let a = 0.37;
        let jet = jet1(Chart::Cartesian { n: 1 }, [a, a, 0.0, 0.0]);
        let m = metric_from_jet(&jet).unwrap();
        assert!(m.q.abs() < 1e-15);
        assert_eq!(m.g, 1.0);
        assert!((m.upper[0][0] - (-1.0 - a * a)).abs() < 1e-15);
        assert!((m.upper[0][1] - a * a).abs() < 1e-15);
        assert!((m.upper[1][1] - (1.0 - a * a)).abs() < 1e-15);
    }

    #[test]
    fn degenerate_metric_is_an_error() {
        let jet = jet1(Chart::Cartesian { n: 1 }, [1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            metric_from_jet(&jet),
            Err(MembraneError::DegenerateMetric { .. })
        ));
    }

    #[test]
    fn causal_classes() {
        let jet = jet1(Chart::Cartesian { n: 3 }, [0.0; 4]);
        let m = metric_from_jet(&jet).unwrap();
        let t = causal_class(&[1.0, 0.0, 0.0, 0.0], &m, CAUSAL_TOL);
        assert_eq!(t.class, CausalClass::Timelike);
        assert_eq!(t.value, -1.0);
        let l = causal_class(&[1.0, 1.0, 0.0, 0.0], &m, CAUSAL_TOL);
        assert_eq!(l.class, CausalClass::Null);
        let s = causal_class(&[0.0, 1.0, 0.0, 0.0], &m, CAUSAL_TOL);
        assert_eq!(s.class, CausalClass::Spacelike);
    }
}
