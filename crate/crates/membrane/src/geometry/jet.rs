//! Pointwise field jets: value and partial derivatives of φ at one event.
//!
//! All geometry is built from these. A jet lives in a declared chart:
//!
//! - `Cartesian { n }`: coordinates (t, x¹..xⁿ), the chart of the graph
//!   equation itself; dimension n+1.
//! - `Radial { n }`: coordinates (t, r) for rotationally symmetric fields;
//!   the ambient spatial dimension n is kept so angular traces like
//!   (n−1)/r·φ_r can be reconstructed.
//! - `Null { n }`: double-null coordinates (u, u̲) with u = (t−r)/2,
//!   u̲ = (t+r)/2, restricted to the radial block.
//! - `Rescaled { n }`: pulse-adapted coordinates (u′, u̲′) = (u/δ, u̲); the
//!   flat metric in this chart depends on δ, which is supplied at the point
//!   of use (`rescaled_metric`), not stored in the chart tag.

use crate::error::{MembraneError, Result};

/// Largest chart dimension we handle (t plus up to three spatial directions).
pub const MAX_DIM: usize = 4;

pub type Vect = [f64; MAX_DIM];
pub type Mat = [[f64; MAX_DIM]; MAX_DIM];
pub type Ten3 = [[[f64; MAX_DIM]; MAX_DIM]; MAX_DIM];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Chart {
    Cartesian { n: usize },
    Radial { n: usize },
    Null { n: usize },
    Rescaled { n: usize },
}

impl Chart {
    /// Number of coordinates carried by jets in this chart.
    pub fn dim(&self) -> usize {
        match *self {
            Chart::Cartesian { n } => n + 1,
            Chart::Radial { .. } | Chart::Null { .. } | Chart::Rescaled { .. } => 2,
        }
    }

    /// Ambient spatial dimension n.
    pub fn n(&self) -> usize {
        match *self {
            Chart::Cartesian { n }
            | Chart::Radial { n }
            | Chart::Null { n }
            | Chart::Rescaled { n } => n,
        }
    }

    /// Components of the Minkowski metric η in this chart (lower indices).
    ///
    /// In null coordinates η(∂_u, ∂_u̲) = −2 with vanishing diagonal; in the
    /// rescaled chart the cross component picks up a factor δ from u = δu′.
    /// `delta` is ignored by the other charts.
    pub fn eta_lower(&self, delta: f64) -> Mat {
        let d = self.dim();
        let mut m = [[0.0; MAX_DIM]; MAX_DIM];
        match *self {
            Chart::Cartesian { .. } | Chart::Radial { .. } => {
                m[0][0] = -1.0;
                for i in 1..d {
                    m[i][i] = 1.0;
                }
            }
            Chart::Null { .. } => {
                m[0][1] = -2.0;
                m[1][0] = -2.0;
            }
            Chart::Rescaled { .. } => {
                m[0][1] = -2.0 * delta;
                m[1][0] = -2.0 * delta;
            }
        }
        m
    }

    /// Components of η with upper indices in this chart.
    pub fn eta_upper(&self, delta: f64) -> Mat {
        let d = self.dim();
        let mut m = [[0.0; MAX_DIM]; MAX_DIM];
        match *self {
            Chart::Cartesian { .. } | Chart::Radial { .. } => {
                m[0][0] = -1.0;
                for i in 1..d {
                    m[i][i] = 1.0;
                }
            }
            Chart::Null { .. } => {
                m[0][1] = -0.5;
                m[1][0] = -0.5;
            }
            Chart::Rescaled { .. } => {
                m[0][1] = -0.5 / delta;
                m[1][0] = -0.5 / delta;
            }
        }
        m
    }
}

/// Field value and partials of φ up to a requested order at one event.
///
/// Mixed partials are symmetrized on construction, so the stored arrays are
/// symmetric exactly. Derivatives beyond the stored order are an error, never
/// silent zeros.
#[derive(Clone, Debug)]
pub struct SpacetimeJet {
    pub chart: Chart,
    /// Event coordinates in the chart (length `chart.dim()`).
    pub coords: Vect,
    pub value: f64,
    d1: Vect,
    d2: Mat,
    d3: Ten3,
    order: usize,
}

impl SpacetimeJet {
    pub fn order1(chart: Chart, coords: Vect, value: f64, d1: Vect) -> Self {
        Self {
            chart,
            coords,
            value,
            d1,
            d2: [[0.0; MAX_DIM]; MAX_DIM],
            d3: [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM],
            order: 1,
        }
    }

    pub fn order2(chart: Chart, coords: Vect, value: f64, d1: Vect, d2: Mat) -> Self {
        let mut jet = Self::order1(chart, coords, value, d1);
        jet.d2 = symmetrize2(&d2, chart.dim());
        jet.order = 2;
        jet
    }

    pub fn order3(chart: Chart, coords: Vect, value: f64, d1: Vect, d2: Mat, d3: Ten3) -> Self {
        let mut jet = Self::order2(chart, coords, value, d1, d2);
        jet.d3 = symmetrize3(&d3, chart.dim());
        jet.order = 3;
        jet
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// First partials ∂_αφ.
    pub fn d1(&self) -> &Vect {
        &self.d1
    }

    /// Second partials ∂_α∂_βφ (symmetric).
    pub fn d2(&self) -> Result<&Mat> {
        if self.order < 2 {
            return Err(MembraneError::InsufficientJet {
                requested: 2,
                available: self.order,
            });
        }
        Ok(&self.d2)
    }

    /// Third partials ∂_α∂_β∂_γφ (symmetric).
    pub fn d3(&self) -> Result<&Ten3> {
        if self.order < 3 {
            return Err(MembraneError::InsufficientJet {
                requested: 3,
                available: self.order,
            });
        }
        Ok(&self.d3)
    }

    /// Re-express a radial-chart jet as a Cartesian jet of the same order
    /// (capped at 2), placing the event on the x¹-axis.
    ///
    /// Uses ∂_iφ = ω_iφ_r and ∂_i∂_jφ = ω_iω_jφ_rr + (δ_ij − ω_iω_j)φ_r/r,
    /// so it needs r bounded away from the axis.
    pub fn to_cartesian(&self) -> Result<SpacetimeJet> {
        match self.chart {
            Chart::Cartesian { .. } => Ok(self.clone()),
            Chart::Radial { n } => {
                let r = self.coords[1];
                if r < 1e-8 {
                    return Err(MembraneError::OriginSingular(r));
                }
                let mut coords = [0.0; MAX_DIM];
                coords[0] = self.coords[0];
                coords[1] = r;
                let mut d1 = [0.0; MAX_DIM];
                d1[0] = self.d1[0];
                d1[1] = self.d1[1];
                if self.order < 2 {
                    return Ok(SpacetimeJet::order1(Chart::Cartesian { n }, coords, self.value, d1));
                }
                let (ptt, ptr_, prr, pr) = (self.d2[0][0], self.d2[0][1], self.d2[1][1], self.d1[1]);
                let mut d2 = [[0.0; MAX_DIM]; MAX_DIM];
                d2[0][0] = ptt;
                d2[0][1] = ptr_;
                d2[1][0] = ptr_;
                d2[1][1] = prr;
                for i in 2..=n {
                    d2[i][i] = pr / r;
                }
                Ok(SpacetimeJet::order2(
                    Chart::Cartesian { n },
                    coords,
                    self.value,
                    d1,
                    d2,
                ))
            }
            _ => Err(MembraneError::Config(
                "jet conversion to Cartesian is only defined for Cartesian/radial charts".into(),
            )),
        }
    }
}

fn symmetrize2(m: &Mat, d: usize) -> Mat {
    let mut out = [[0.0; MAX_DIM]; MAX_DIM];
    for a in 0..d {
        for b in 0..d {
            out[a][b] = 0.5 * (m[a][b] + m[b][a]);
        }
    }
    out
}

fn symmetrize3(t: &Ten3, d: usize) -> Ten3 {
    let mut out = [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM];
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                out[a][b][c] = (t[a][b][c]
                    + t[a][c][b]
                    + t[b][a][c]
                    + t[b][c][a]
                    + t[c][a][b]
                    + t[c][b][a])
                    / 6.0;
            }
        }
    }
    out
}
