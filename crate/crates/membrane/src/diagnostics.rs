//! Cone and slice energies, energy-identity residuals, commuted fields, and
//! decay-exponent regression for planar/radial evolution histories.
//!
//! The energy machinery follows the multiplier picture: the energy momentum
//! tensor T^α_β = ∂^αφ_k∂_βφ_k − ½∂^γφ_k∂_γφ_k·δ^α_β (indices raised with
//! g^{αβ} = η^{αβ} − ∂^αφ∂^βφ/(1+Q) of the background field φ) contracts
//! with a multiplier ξ ∈ {2∂ₜ, L̃, L̲̃} into the current P^α = T^α_β ξ^β,
//! where
//!
//!   L̃ = L + (Lφ)²L̲,   L̲̃ = L̲ + (L̲φ)²L,   L = ∂ₜ + ∂ᵣ, L̲ = ∂ₜ − ∂ᵣ,
//!
//! are causal for the membrane metric in the short-pulse regime. Cone and
//! slice energies are the fluxes
//!
//!   E²(u)  = −∫_{C_u}  √g P^u  r^{n−1} du̲ dσ,
//!   E̲²(u̲) = −∫_{C̲_u̲} √g P^u̲ r^{n−1} du dσ,
//!   E²(τ)  = −∫_{Σ_τ}  √g P^t  r^{n−1} dr dσ,
//!
//! with u = (t−r)/2, u̲ = (t+r)/2, so P^u = (P^t − P^r)/2 and
//! P^u̲ = (P^t + P^r)/2. Green's theorem in the (t, r) plane turns these
//! into an exact balance over the region bounded by Σ_{t₀}, the outgoing
//! cones C_{u₀}, C_{u₁}, and the incoming cone C̲_{u̲₁}:
//!
//!   2E²(u₁) + 2E̲²(u̲₁) = E²(t₀) + 2E²(u₀) − ∬ ∂_α(√g P^α r^{n−1}) dt dr dσ.
//!
//! The cone terms carry weight 2 relative to the printed du̲/du measures
//! because du̲ = dt along an outgoing cone while the boundary one-form of
//! Green's theorem is dr − dt = −2 du there; the implementation keeps the
//! measure convention of the displays above and the exact factors of 2 in
//! the identity, which is the combination whose residual converges to zero.
//!
//! Commuted fields φ_k are words of length ≤ 2 over {∂ₜ, ∂ᵣ, B, S} with
//! B = t∂ᵣ + r∂ₜ and S = t∂ₜ + r∂ᵣ, each ∂-letter weighted by δ.

use crate::error::{MembraneError, Result};
use crate::geometry::DEGENERACY_THRESHOLD;
use crate::solver::{
    cfl_dt, derivative, rhs, second_derivative, step_rk4, FieldState, GridSpec, Mode, Parity,
    StepObserver,
};

// ---------------------------------------------------------------------------
// Finite-difference weights (Fornberg's algorithm)
// ---------------------------------------------------------------------------

/// Weights for derivatives of order 0..=m at point `z` from arbitrary nodes
/// `xs` (Fornberg's recursion). `out[k][j]` multiplies f(xs[j]) in the k-th
/// derivative.
pub fn fd_weights(z: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Area of the unit sphere S^{n−1} (1 in planar mode).
pub fn sphere_area(mode: Mode) -> f64 {
    match mode {
        Mode::Planar => 1.0,
        Mode::Radial { n } | Mode::Rescaled { n } => match n {
            1 => 2.0,
            2 => std::f64::consts::TAU,
            _ => 2.0 * std::f64::consts::TAU,
        },
    }
}

// ---------------------------------------------------------------------------
// Stored evolution history
// ---------------------------------------------------------------------------

/// Evolution slabs (φ, ψ = ∂ₜφ) at stored times, with enough structure to
/// interpolate order-2 jets anywhere inside the covered (t, r) rectangle.
#[derive(Clone, Debug)]
pub struct History {
    pub grid: GridSpec,
    pub delta: f64,
    pub times: Vec<f64>,
    pub phis: Vec<Vec<f64>>,
    pub psis: Vec<Vec<f64>>,
    /// Ghost-point parity of φ (flips under odd letters like ∂ᵣ and B).
    pub parity: Parity,
}

/// Interpolated jet of a radially symmetric (or planar) field at an event.
#[derive(Clone, Copy, Debug)]
pub struct RadialJet {
    pub t: f64,
    pub r: f64,
    pub v: f64,
    pub vt: f64,
    pub vr: f64,
    pub vtt: f64,
    pub vtr: f64,
    pub vrr: f64,
}

impl RadialJet {
    pub fn zero(t: f64, r: f64) -> Self {
        Self {
            t,
            r,
            v: 0.0,
            vt: 0.0,
            vr: 0.0,
            vtt: 0.0,
            vtr: 0.0,
            vrr: 0.0,
        }
    }

    /// Lv = ∂ₜv + ∂ᵣv.
    pub fn l(&self) -> f64 {
        self.vt + self.vr
    }

    /// L̲v = ∂ₜv − ∂ᵣv.
    pub fn lbar(&self) -> f64 {
        self.vt - self.vr
    }

    /// L²v, LL̲v, L̲²v from the second-order entries.
    pub fn ll(&self) -> f64 {
        self.vtt + 2.0 * self.vtr + self.vrr
    }

    pub fn llbar(&self) -> f64 {
        self.vtt - self.vrr
    }

    pub fn lbarlbar(&self) -> f64 {
        self.vtt - 2.0 * self.vtr + self.vrr
    }
}

impl History {
    /// Start index of a window of `w` slabs around time t.
    fn time_window(&self, t: f64, w: usize) -> Result<usize> {
        let n = self.times.len();
        if n < w {
            return Err(MembraneError::OutOfHistory(format!(
                "history holds {n} slabs, interpolation needs {w}"
            )));
        }
        let (t0, t1) = (self.times[0], self.times[n - 1]);
        let tol = 1e-9 * (1.0 + t1.abs());
        if t < t0 - tol || t > t1 + tol {
            return Err(MembraneError::OutOfHistory(format!(
                "t = {t:.6} outside stored range [{t0:.6}, {t1:.6}]"
            )));
        }
        let k = self.times.partition_point(|&s| s < t);
        Ok(k.saturating_sub(w / 2).min(n - w))
    }

    /// Start index of a window of `w` grid nodes around radius r.
    fn space_window(&self, r: f64, w: usize) -> Result<usize> {
        let g = &self.grid;
        let tol = 1e-9 * (1.0 + g.x_max.abs());
        if r < g.x_min - tol || r > g.x_max + tol {
            return Err(MembraneError::OutOfHistory(format!(
                "r = {r:.6} outside grid [{:.6}, {:.6}]",
                g.x_min, g.x_max
            )));
        }
        let i = ((r - g.x_min) / g.h()).floor() as isize;
        Ok((i - (w as isize / 2 - 1)).clamp(0, (g.n_points - w) as isize) as usize)
    }

    /// Order-2 jet at (t, r): cubic interpolation in t (ψ supplies the pure
    /// and mixed time derivatives), quintic in r.
    pub fn sample(&self, t: f64, r: f64) -> Result<RadialJet> {
        const TW: usize = 4;
        const SW: usize = 6;
        let k0 = self.time_window(t, TW)?;
        let j0 = self.space_window(r, SW)?;
        let tw = fd_weights(t, &self.times[k0..k0 + TW], 1);
        let xs: Vec<f64> = (j0..j0 + SW).map(|j| self.grid.x(j)).collect();
        let sw = fd_weights(r, &xs, 2);

        // Time-interpolated columns: φ, ψ, ∂ₜψ at the spatial window nodes.
        let mut col_phi = [0.0; SW];
        let mut col_psi = [0.0; SW];
        let mut col_psit = [0.0; SW];
        for (k, (w0, w1)) in tw[0].iter().zip(&tw[1]).enumerate() {
            for j in 0..SW {
                col_phi[j] += w0 * self.phis[k0 + k][j0 + j];
                col_psi[j] += w0 * self.psis[k0 + k][j0 + j];
                col_psit[j] += w1 * self.psis[k0 + k][j0 + j];
            }
        }
        let dot = |ws: &[f64], col: &[f64; SW]| -> f64 {
            ws.iter().zip(col).map(|(w, c)| w * c).sum()
        };
        Ok(RadialJet {
            t,
            r,
            v: dot(&sw[0], &col_phi),
            vt: dot(&sw[0], &col_psi),
            vr: dot(&sw[1], &col_phi),
            vtt: dot(&sw[0], &col_psit),
            vtr: dot(&sw[1], &col_psi),
            vrr: dot(&sw[2], &col_phi),
        })
    }

    /// ∂ₜ of the ψ slabs by 4-point finite differencing at each stored time.
    fn psi_time_derivative(&self) -> Vec<Vec<f64>> {
        let n = self.times.len();
        let w = 4.min(n);
        let mut out = vec![vec![0.0; self.grid.n_points]; n];
        for k in 0..n {
            let k0 = k.saturating_sub(w / 2).min(n - w);
            let ws = fd_weights(self.times[k], &self.times[k0..k0 + w], 1);
            for (m, c) in ws[1].iter().enumerate() {
                for j in 0..self.grid.n_points {
                    out[k][j] += c * self.psis[k0 + m][j];
                }
            }
        }
        out
    }
}

/// Observer storing every `stride`-th accepted step as a history slab.
pub struct HistoryRecorder {
    pub stride: u64,
    pub history: Option<History>,
}

impl HistoryRecorder {
    pub fn new(stride: u64) -> Self {
        Self {
            stride: stride.max(1),
            history: None,
        }
    }
}

impl StepObserver for HistoryRecorder {
    fn observe(&mut self, state: &FieldState) -> Result<()> {
        if state.step % self.stride != 0 {
            return Ok(());
        }
        let h = self.history.get_or_insert_with(|| History {
            grid: state.grid.clone(),
            delta: state.delta,
            times: Vec::new(),
            phis: Vec::new(),
            psis: Vec::new(),
            parity: Parity::Even,
        });
        h.times.push(state.t);
        h.phis.push(state.phi.clone());
        h.psis.push(state.psi.clone());
        Ok(())
    }
}

/// Evolve with a fixed step (CFL-sized at t₀, adjusted to land on t_end and
/// on a stride multiple) and record a history. A fixed step keeps the stored
/// slabs equally spaced, which the time stencils appreciate.
pub fn record_history(
    state: FieldState,
    t_end: f64,
    cfl: f64,
    stride: u64,
) -> Result<History> {
    let stride = stride.max(1);
    let dt0 = cfl_dt(&state, cfl)?;
    let raw = ((t_end - state.t) / dt0).ceil().max(1.0) as u64;
    let steps = raw.div_ceil(stride) * stride;
    let dt = (t_end - state.t) / steps as f64;
    let mut rec = HistoryRecorder::new(stride);
    let mut s = state;
    rec.observe(&s)?;
    for _ in 0..steps {
        s = step_rk4(&s, dt)?;
        rec.observe(&s)?;
    }
    Ok(rec.history.unwrap())
}

// ---------------------------------------------------------------------------
// Currents and multipliers
// ---------------------------------------------------------------------------

/// Multiplier vector fields ξ for the energy currents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Multiplier {
    /// ξ = 2∂ₜ (the constant-time energy).
    TwoDt,
    /// ξ = L̃ = L + (Lφ)²L̲.
    LTilde,
    /// ξ = L̲̃ = L̲ + (L̲φ)²L.
    LBarTilde,
}

impl Multiplier {
    /// (ξ^t, ξ^r) built from the background gradient.
    pub fn components(&self, bg_t: f64, bg_r: f64) -> (f64, f64) {
        match self {
            Multiplier::TwoDt => (2.0, 0.0),
            Multiplier::LTilde => {
                let w = (bg_t + bg_r) * (bg_t + bg_r);
                (1.0 + w, 1.0 - w)
            }
            Multiplier::LBarTilde => {
                let w = (bg_t - bg_r) * (bg_t - bg_r);
                (1.0 + w, -(1.0 - w))
            }
        }
    }
}

/// Components of the current P^α = T^α_β ξ^β at an event, in both the (t, r)
/// and the null (u, u̲) bases.
#[derive(Clone, Copy, Debug)]
pub struct Current {
    pub p_t: f64,
    pub p_r: f64,
    pub p_u: f64,
    pub p_ubar: f64,
    /// √g = √(1 + Q) of the background.
    pub sqrt_g: f64,
}

/// Current of the commuted field `fk` with background `bg` and multiplier ξ.
/// Only first-order jet entries are used.
pub fn current(bg: &RadialJet, fk: &RadialJet, xi: Multiplier) -> Result<Current> {
    let (bt, br) = (bg.vt, bg.vr);
    let g = 1.0 - bt * bt + br * br;
    if g <= DEGENERACY_THRESHOLD {
        return Err(MembraneError::DegenerateMetric {
            g,
            threshold: DEGENERACY_THRESHOLD,
            at: Some(format!("(t, r) = ({:.4}, {:.4})", bg.t, bg.r)),
        });
    }
    // g^{αβ} = η^{αβ} − ∂^αφ∂^βφ/g with ∂^t φ = −φ_t, ∂^r φ = φ_r.
    let gtt = -1.0 - bt * bt / g;
    let gtr = bt * br / g;
    let grr = 1.0 - br * br / g;
    let (ft, fr) = (fk.vt, fk.vr);
    // ∂^αφ_k raised with the membrane metric.
    let ut = gtt * ft + gtr * fr;
    let ur = gtr * ft + grr * fr;
    // X = g^{γδ}∂_γφ_k∂_δφ_k.
    let x = ut * ft + ur * fr;
    let (xt, xr) = xi.components(bt, br);
    // P^α = T^α_βξ^β with T^α_β = ∂^αφ_k∂_βφ_k − ½X δ^α_β.
    let p_t = ut * (ft * xt + fr * xr) - 0.5 * x * xt;
    let p_r = ur * (ft * xt + fr * xr) - 0.5 * x * xr;
    Ok(Current {
        p_t,
        p_r,
        p_u: 0.5 * (p_t - p_r),
        p_ubar: 0.5 * (p_t + p_r),
        sqrt_g: g.sqrt(),
    })
}

// ---------------------------------------------------------------------------
// Cones and fluxes
// ---------------------------------------------------------------------------

/// Hypersurface through the history: an outgoing cone C_u, an incoming cone
/// C̲_{u̲}, or a constant-time slice Σ_t.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConeId {
    Outgoing { u: f64 },
    Incoming { ubar: f64 },
    Slice { t: f64 },
}

impl ConeId {
    /// Event on the cone at parameter value s (s = u̲, u, r respectively).
    fn event(&self, s: f64) -> (f64, f64) {
        match *self {
            ConeId::Outgoing { u } => (u + s, s - u),
            ConeId::Incoming { ubar } => (s + ubar, ubar - s),
            ConeId::Slice { t } => (t, s),
        }
    }
}

/// Sampled cone: events, order-2 jets of the background and of the commuted
/// field at each event, and trapezoid weights r^{n−1}·Δs·|S^{n−1}|.
#[derive(Clone, Debug)]
pub struct ConeSample {
    pub id: ConeId,
    pub events: Vec<(f64, f64)>,
    pub bg: Vec<RadialJet>,
    pub fk: Vec<RadialJet>,
    pub weights: Vec<f64>,
}

/// Sample a cone over the parameter interval [s0, s1] with `res` panels.
/// `fk_history` holds the commuted field (pass the background itself for the
/// uncommuted energy).
pub fn cone_sample(
    bg_history: &History,
    fk_history: &History,
    id: ConeId,
    s0: f64,
    s1: f64,
    res: usize,
) -> Result<ConeSample> {
    if !(s1 > s0) || res < 2 {
        return Err(MembraneError::Config(format!(
            "empty cone parameter range [{s0}, {s1}] or resolution {res} < 2"
        )));
    }
    let npts = res + 1;
    let ds = (s1 - s0) / res as f64;
    let area = sphere_area(bg_history.grid.mode);
    let n = bg_history.grid.mode.n();
    let mut events = Vec::with_capacity(npts);
    let mut bg = Vec::with_capacity(npts);
    let mut fk = Vec::with_capacity(npts);
    let mut weights = Vec::with_capacity(npts);
    for k in 0..npts {
        let s = s0 + k as f64 * ds;
        let (t, r) = id.event(s);
        events.push((t, r));
        bg.push(bg_history.sample(t, r)?);
        fk.push(fk_history.sample(t, r)?);
        let trap = if k == 0 || k == npts - 1 { 0.5 } else { 1.0 };
        weights.push(r.abs().powi(n as i32 - 1) * ds * trap * area);
    }
    Ok(ConeSample {
        id,
        events,
        bg,
        fk,
        weights,
    })
}

/// Flux of a sampled cone for one multiplier.
#[derive(Clone, Copy, Debug)]
pub struct FluxEntry {
    /// E² = −∫ √g P^{normal} · weight.
    pub energy: f64,
    /// min over samples of the pointwise integrand −√g P^{normal} (the
    /// positivity margin before quadrature weighting).
    pub min_integrand: f64,
}

/// E² (resp. E̲², slice energy) of the sampled cone.
pub fn flux_energy(sample: &ConeSample, xi: Multiplier) -> Result<FluxEntry> {
    let mut energy = 0.0;
    let mut min_integrand = f64::INFINITY;
    for ((bg, fk), w) in sample.bg.iter().zip(&sample.fk).zip(&sample.weights) {
        let cur = current(bg, fk, xi)?;
        let normal = match sample.id {
            ConeId::Outgoing { .. } => cur.p_u,
            ConeId::Incoming { .. } => cur.p_ubar,
            ConeId::Slice { .. } => cur.p_t,
        };
        let integrand = -cur.sqrt_g * normal;
        min_integrand = min_integrand.min(integrand);
        energy += integrand * w;
    }
    Ok(FluxEntry {
        energy,
        min_integrand,
    })
}

// ---------------------------------------------------------------------------
// Energy identity
// ---------------------------------------------------------------------------

/// All pieces of the discrete energy balance over the region bounded by
/// Σ_{t₀}, C_{u₀}, C_{u₁}, C̲_{u̲₁}.
#[derive(Clone, Copy, Debug)]
pub struct EnergyIdentity {
    pub outgoing: f64,
    pub incoming: f64,
    pub initial_slice: f64,
    pub outer_cone: f64,
    pub bulk: f64,
    /// |2E²(u₁) + 2E̲²(u̲₁) − E²(t₀) − 2E²(u₀) + bulk|.
    pub residual: f64,
}

/// Densitised metric components (√g g^{tt}, √g g^{tr}, √g g^{rr}) as
/// functions of the background gradient.
fn metric_density(pt: f64, pr: f64) -> (f64, f64, f64) {
    let g = 1.0 - pt * pt + pr * pr;
    let s = g.sqrt();
    (-(g + pt * pt) / s, pt * pr / s, (g - pr * pr) / s)
}

/// Pointwise divergence ∂_α(√gP^α) of the current from its divergence law
///
///   ∂_α(√gP^α) = √g(□_{g}φ_k·ξφ_k + T^α_β∂_αξ^β)
///                − ½ ξ(√g g^{γρ}) ∂_γφ_k ∂_ρφ_k,
///
/// with the □φ_k·ξφ_k source dropped: it vanishes identically on solutions,
/// and dropping it is exactly what makes the energy balance a solution
/// detector rather than a tautology of Green's theorem. (For commuted fields
/// the source carries the commutator terms of the high-order equation; the
/// desk-scale identity is therefore quantitative at commuting order 0.)
fn current_divergence(
    bg_history: &History,
    fk_history: &History,
    t: f64,
    r: f64,
    xi: Multiplier,
) -> Result<f64> {
    let bg = bg_history.sample(t, r)?;
    let fk = fk_history.sample(t, r)?;
    let (pt, pr) = (bg.vt, bg.vr);
    let g = 1.0 - pt * pt + pr * pr;
    if g <= DEGENERACY_THRESHOLD {
        return Err(MembraneError::DegenerateMetric {
            g,
            threshold: DEGENERACY_THRESHOLD,
            at: Some(format!("(t, r) = ({t:.4}, {r:.4})")),
        });
    }
    let s = g.sqrt();
    let gtt = -1.0 - pt * pt / g;
    let gtr = pt * pr / g;
    let grr = 1.0 - pr * pr / g;
    let (ft, fr) = (fk.vt, fk.vr);
    let ut = gtt * ft + gtr * fr;
    let ur = gtr * ft + grr * fr;
    let x = ut * ft + ur * fr;
    // Deformation term T^α_β∂_αξ^β over the (t, r) block…
    let (d_t, d_r): ((f64, f64), (f64, f64)) = match xi {
        Multiplier::TwoDt => ((0.0, 0.0), (0.0, 0.0)),
        Multiplier::LTilde => {
            // ξ = (1 + w, 1 − w) with w = (Lφ)².
            let lphi = pt + pr;
            let wt = 2.0 * lphi * (bg.vtt + bg.vtr);
            let wr = 2.0 * lphi * (bg.vtr + bg.vrr);
            ((wt, -wt), (wr, -wr))
        }
        Multiplier::LBarTilde => {
            // ξ = (1 + w, −(1 − w)) with w = (L̲φ)².
            let lbphi = pt - pr;
            let wt = 2.0 * lbphi * (bg.vtt - bg.vtr);
            let wr = 2.0 * lbphi * (bg.vtr - bg.vrr);
            ((wt, wt), (wr, wr))
        }
    };
    let t_tt = ut * ft - 0.5 * x;
    let t_tr = ut * fr;
    let t_rt = ur * ft;
    let t_rr = ur * fr - 0.5 * x;
    let mut deform = t_tt * d_t.0 + t_rt * d_t.1 + t_tr * d_r.0 + t_rr * d_r.1;
    // …plus the angular spreading ∂_iω^j = P_ij/r of the radial component:
    // T^i_j contracts P_ij to −(n−1)X/2 for radially symmetric fields.
    let n = bg_history.grid.mode.n();
    if n > 1 {
        let (_, xi_r) = xi.components(pt, pr);
        deform += -0.5 * (n - 1) as f64 * xi_r * x / r;
    }
    // ξ(√g g^{γρ})∂_γφ_k∂_ρφ_k via the chain rule through (∂ₜφ, ∂ᵣφ).
    let eps = 1e-6;
    let dm_dpt = {
        let a = metric_density(pt + eps, pr);
        let b = metric_density(pt - eps, pr);
        ((a.0 - b.0) / (2.0 * eps), (a.1 - b.1) / (2.0 * eps), (a.2 - b.2) / (2.0 * eps))
    };
    let dm_dpr = {
        let a = metric_density(pt, pr + eps);
        let b = metric_density(pt, pr - eps);
        ((a.0 - b.0) / (2.0 * eps), (a.1 - b.1) / (2.0 * eps), (a.2 - b.2) / (2.0 * eps))
    };
    let (xi_t, xi_r) = xi.components(pt, pr);
    // ξ(pt) and ξ(pr) from the background Hessian.
    let xi_pt = xi_t * bg.vtt + xi_r * bg.vtr;
    let xi_pr = xi_t * bg.vtr + xi_r * bg.vrr;
    let xi_m = (
        dm_dpt.0 * xi_pt + dm_dpr.0 * xi_pr,
        dm_dpt.1 * xi_pt + dm_dpr.1 * xi_pr,
        dm_dpt.2 * xi_pt + dm_dpr.2 * xi_pr,
    );
    let metric_term = -0.5 * (xi_m.0 * ft * ft + 2.0 * xi_m.1 * ft * fr + xi_m.2 * fr * fr);
    Ok(s * deform + metric_term)
}

/// Evaluate the energy identity on the region t₀ ≤ t, u₀ ≤ u ≤ u₁,
/// u̲ ≤ u̲₁. Boundary fluxes use trapezoid quadrature with `res` panels per
/// edge; the bulk ∬∂_α(√gP^αr^{n−1}) is integrated in the (u, u̲) chart
/// (volume element 2 du du̲) with central differencing of the flux vector.
pub fn energy_identity_residual(
    bg_history: &History,
    fk_history: &History,
    xi: Multiplier,
    t0: f64,
    u0: f64,
    u1: f64,
    ubar1: f64,
    res: usize,
) -> Result<EnergyIdentity> {
    if !(u1 > u0) || !(ubar1 > t0 - u0) {
        return Err(MembraneError::Config(format!(
            "degenerate identity region: u ∈ [{u0}, {u1}], u̲ ≤ {ubar1}, t ≥ {t0}"
        )));
    }
    let e = |id, s0, s1| -> Result<f64> {
        let sample = cone_sample(bg_history, fk_history, id, s0, s1, res)?;
        Ok(flux_energy(&sample, xi)?.energy)
    };
    let outgoing = e(ConeId::Outgoing { u: u1 }, t0 - u1, ubar1)?;
    let outer_cone = e(ConeId::Outgoing { u: u0 }, t0 - u0, ubar1)?;
    let incoming = e(ConeId::Incoming { ubar: ubar1 }, u0, u1)?;
    let initial_slice = e(ConeId::Slice { t: t0 }, t0 - 2.0 * u1, t0 - 2.0 * u0)?;

    // Bulk: for each u, u̲ runs from the initial slice (u̲ = t₀ − u) to u̲₁.
    let area = sphere_area(bg_history.grid.mode);
    let n = bg_history.grid.mode.n();
    let div = |t: f64, r: f64| -> Result<f64> {
        let d = current_divergence(bg_history, fk_history, t, r, xi)?;
        Ok(d * r.abs().powi(n as i32 - 1) * area)
    };
    let mut bulk = 0.0;
    let du = (u1 - u0) / res as f64;
    for i in 0..=res {
        let u = u0 + i as f64 * du;
        let wu = if i == 0 || i == res { 0.5 } else { 1.0 };
        let ub0 = t0 - u;
        let dub = (ubar1 - ub0) / res as f64;
        let mut line = 0.0;
        for j in 0..=res {
            let ub = ub0 + j as f64 * dub;
            let wub = if j == 0 || j == res { 0.5 } else { 1.0 };
            line += wub * div(u + ub, ub - u)?;
        }
        bulk += wu * line * dub;
    }
    bulk *= 2.0 * du;

    let residual =
        (2.0 * outgoing + 2.0 * incoming - initial_slice - 2.0 * outer_cone + bulk).abs();
    Ok(EnergyIdentity {
        outgoing,
        incoming,
        initial_slice,
        outer_cone,
        bulk,
        residual,
    })
}

// ---------------------------------------------------------------------------
// Commuted fields
// ---------------------------------------------------------------------------

/// Commutator letters: translations and the hyperbolic rotation/scaling
/// fields B = t∂ᵣ + r∂ₜ, S = t∂ₜ + r∂ᵣ.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Letter {
    Dt,
    Dr,
    B,
    S,
}

impl Letter {
    fn flips_parity(&self) -> bool {
        matches!(self, Letter::Dr | Letter::B)
    }
}

fn apply_letter(h: &History, letter: Letter, delta: f64) -> History {
    let grid = &h.grid;
    let psi_parity = h.parity; // ψ = ∂ₜφ shares φ's spatial parity
    let psi_t = h.psi_time_derivative();
    let n_slab = h.times.len();
    let mut phis = Vec::with_capacity(n_slab);
    let mut psis = Vec::with_capacity(n_slab);
    for k in 0..n_slab {
        let t = h.times[k];
        let phi_r = derivative(grid, &h.phis[k], h.parity);
        let phi_rr = second_derivative(grid, &h.phis[k], h.parity);
        let psi_r = derivative(grid, &h.psis[k], psi_parity);
        let np = grid.n_points;
        let mut v = vec![0.0; np];
        let mut vt = vec![0.0; np];
        for i in 0..np {
            let r = grid.x(i);
            let (psi, pr) = (h.psis[k][i], phi_r[i]);
            match letter {
                Letter::Dt => {
                    v[i] = delta * psi;
                    vt[i] = delta * psi_t[k][i];
                }
                Letter::Dr => {
                    v[i] = delta * pr;
                    vt[i] = delta * psi_r[i];
                }
                Letter::B => {
                    v[i] = t * pr + r * psi;
                    vt[i] = pr + t * psi_r[i] + r * psi_t[k][i];
                }
                Letter::S => {
                    v[i] = t * psi + r * pr;
                    vt[i] = psi + t * psi_t[k][i] + r * psi_r[i];
                }
            }
        }
        // B and S mix second derivatives into vt via the product rule; Dr
        // needs ∂ᵣψ which is already there. The remaining second-derivative
        // users read them back out of the new slabs.
        let _ = phi_rr;
        phis.push(v);
        psis.push(vt);
    }
    History {
        grid: grid.clone(),
        delta: h.delta,
        times: h.times.clone(),
        phis,
        psis,
        parity: if letter.flips_parity() {
            match h.parity {
                Parity::Even => Parity::Odd,
                Parity::Odd => Parity::Even,
            }
        } else {
            h.parity
        },
    }
}

/// Apply a word of commutator letters (outermost first, length ≤ 2) to a
/// history, with δ-weights on the ∂-letters: the empty word is the identity.
pub fn apply_z(h: &History, word: &[Letter], delta: f64) -> Result<History> {
    if word.len() > 2 {
        return Err(MembraneError::Config(format!(
            "commutator words are capped at length 2, got {}",
            word.len()
        )));
    }
    let mut out = h.clone();
    for &letter in word.iter().rev() {
        out = apply_letter(&out, letter, delta);
    }
    Ok(out)
}

/// The five weighted commuted fields of order ≤ 1: φ, δ∂ₜφ, δ∂ᵣφ, Bφ, Sφ.
pub fn first_order_words() -> Vec<Vec<Letter>> {
    vec![
        vec![],
        vec![Letter::Dt],
        vec![Letter::Dr],
        vec![Letter::B],
        vec![Letter::S],
    ]
}

/// Residual of the commuted equation for a single-letter word, evaluated at
/// the given events: the commuted field v = Zφ of a solution satisfies the
/// linearized equation
///
///   Lin(v) = g^{αβ}∂²_{αβ}v − (2/g)[∂^αv∂^βφ − (Q(φ,v)/g)∂^αφ∂^βφ]∂²_{αβ}φ
///
/// exactly for translations, while the scaling field picks up the lower
/// order term coming from [□, S] = −2□ and the scaling of g(∂φ):
///
///   Lin(Sφ) = −(2/g²)∂^αφ∂^βφ∂²_{αβ}φ.
///
/// Translations in r (and the boost B) are only symmetries of the planar
/// reduction; in radial mode the supported letters are ∂ₜ and S.
pub fn commuted_residual(
    bg_history: &History,
    letter: Letter,
    delta: f64,
    events: &[(f64, f64)],
) -> Result<f64> {
    let mode = bg_history.grid.mode;
    let n = mode.n();
    let radial = matches!(mode, Mode::Radial { .. });
    if radial && matches!(letter, Letter::Dr | Letter::B) {
        return Err(MembraneError::Config(
            "∂ᵣ and B commute with the planar reduction only; radial mode supports ∂ₜ and S"
                .into(),
        ));
    }
    let commuted = apply_z(bg_history, &[letter], delta)?;
    let mut sup: f64 = 0.0;
    for &(t, r) in events {
        let bg = bg_history.sample(t, r)?;
        let v = commuted.sample(t, r)?;
        let g = 1.0 - bg.vt * bg.vt + bg.vr * bg.vr;
        if g <= DEGENERACY_THRESHOLD {
            return Err(MembraneError::DegenerateMetric {
                g,
                threshold: DEGENERACY_THRESHOLD,
                at: Some(format!("(t, r) = ({t:.4}, {r:.4})")),
            });
        }
        let a = -1.0 - bg.vt * bg.vt / g;
        let b = bg.vt * bg.vr / g;
        let c = 1.0 - bg.vr * bg.vr / g;
        let mut lin = a * v.vtt + 2.0 * b * v.vtr + c * v.vrr;
        if n > 1 {
            if r.abs() < 2.0 * bg_history.grid.h() {
                return Err(MembraneError::OriginSingular(r.abs()));
            }
            lin += (n - 1) as f64 * v.vr / r;
        }
        // M = ∂^αv∂^βφ∂²_{αβ}φ, Q(φ,v), D = ∂^αφ∂^βφ∂²_{αβ}φ (η-raised).
        let m = v.vt * bg.vt * bg.vtt
            - (v.vt * bg.vr + v.vr * bg.vt) * bg.vtr
            + v.vr * bg.vr * bg.vrr;
        let qv = -bg.vt * v.vt + bg.vr * v.vr;
        let d = bg.vt * bg.vt * bg.vtt - 2.0 * bg.vt * bg.vr * bg.vtr + bg.vr * bg.vr * bg.vrr;
        lin += -(2.0 / g) * m + (2.0 / (g * g)) * qv * d;
        let correction = match letter {
            Letter::S => -(2.0 / (g * g)) * d,
            _ => 0.0,
        };
        sup = sup.max((lin - correction).abs());
    }
    Ok(sup)
}

// ---------------------------------------------------------------------------
// Pointwise decay tracking
// ---------------------------------------------------------------------------

/// Pointwise derivative magnitudes at one u̲-station.
#[derive(Clone, Copy, Debug)]
pub struct DecayRow {
    pub ubar: f64,
    pub sup_l: f64,
    pub sup_lbar: f64,
    pub sup_ll: f64,
    pub sup_lbar_l: f64,
    pub sup_lbar_lbar: f64,
}

/// For each u̲-station, sup over the pulse cones u ∈ [0, δ] (sampled with
/// `nu` points) of |Lφ|, |L̲φ| and the second-order null combinations.
pub fn pointwise_tracker(
    history: &History,
    delta: f64,
    stations: &[f64],
    nu: usize,
) -> Result<Vec<DecayRow>> {
    let nu = nu.max(2);
    let mut rows = Vec::with_capacity(stations.len());
    for &ubar in stations {
        let mut row = DecayRow {
            ubar,
            sup_l: 0.0,
            sup_lbar: 0.0,
            sup_ll: 0.0,
            sup_lbar_l: 0.0,
            sup_lbar_lbar: 0.0,
        };
        for k in 0..nu {
            let u = delta * k as f64 / (nu - 1) as f64;
            let jet = history.sample(u + ubar, ubar - u)?;
            row.sup_l = row.sup_l.max(jet.l().abs());
            row.sup_lbar = row.sup_lbar.max(jet.lbar().abs());
            row.sup_ll = row.sup_ll.max(jet.ll().abs());
            row.sup_lbar_l = row.sup_lbar_l.max(jet.llbar().abs());
            row.sup_lbar_lbar = row.sup_lbar_lbar.max(jet.lbarlbar().abs());
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Pointwise derivative magnitudes along the last slice C_δ at the given
/// u̲-stations (u = δ fixed).
pub fn last_slice_report(
    history: &History,
    delta: f64,
    stations: &[f64],
) -> Result<Vec<DecayRow>> {
    let mut rows = Vec::with_capacity(stations.len());
    for &ubar in stations {
        let jet = history.sample(delta + ubar, ubar - delta)?;
        rows.push(DecayRow {
            ubar,
            sup_l: jet.l().abs(),
            sup_lbar: jet.lbar().abs(),
            sup_ll: jet.ll().abs(),
            sup_lbar_l: jet.llbar().abs(),
            sup_lbar_lbar: jet.lbarlbar().abs(),
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Scaling fits
// ---------------------------------------------------------------------------

/// How a fitted exponent is judged against the reference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Verdict {
    /// |slope − reference| ≤ tol.
    Within(f64),
    /// slope ≥ threshold (decay at least as strong as claimed).
    AtLeast(f64),
    /// slope ≤ threshold.
    AtMost(f64),
}

#[derive(Clone, Copy, Debug)]
pub struct ScalingFit {
    pub exponent: f64,
    pub std_error: f64,
    pub reference: f64,
    pub pass: bool,
}

/// Least-squares power-law fit y ∼ x^p on log–log pairs. Requires ≥ 3
/// positive samples whose x-range spans a factor ≥ 4.
pub fn scaling_fit(samples: &[(f64, f64)], reference: f64, verdict: Verdict) -> Result<ScalingFit> {
    if samples.len() < 3 {
        return Err(MembraneError::InsufficientSamples(format!(
            "{} samples, need at least 3",
            samples.len()
        )));
    }
    let mut xmin = f64::INFINITY;
    let mut xmax = 0.0f64;
    for &(x, y) in samples {
        if !(x > 0.0 && y > 0.0) {
            return Err(MembraneError::InsufficientSamples(format!(
                "non-positive sample ({x:.3e}, {y:.3e})"
            )));
        }
        xmin = xmin.min(x);
        xmax = xmax.max(x);
    }
    if xmax / xmin < 4.0 {
        return Err(MembraneError::InsufficientSamples(format!(
            "x-range spans factor {:.2} < 4",
            xmax / xmin
        )));
    }
    let n = samples.len() as f64;
    let lx: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ly: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let std_error = if samples.len() > 2 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    let pass = match verdict {
        Verdict::Within(tol) => (slope - reference).abs() <= tol,
        Verdict::AtLeast(thr) => slope >= thr,
        Verdict::AtMost(thr) => slope <= thr,
    };
    Ok(ScalingFit {
        exponent: slope,
        std_error,
        reference,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Incremental sweep accumulators
// ---------------------------------------------------------------------------

/// Cubic interpolation of a slab array at radius r.
fn interp_slab(grid: &GridSpec, arr: &[f64], r: f64) -> Option<f64> {
    let h = grid.h();
    if r < grid.x_min || r > grid.x_max {
        return None;
    }
    let i = (((r - grid.x_min) / h).floor() as isize - 1).clamp(0, grid.n_points as isize - 4)
        as usize;
    let xs: Vec<f64> = (i..i + 4).map(|j| grid.x(j)).collect();
    let w = fd_weights(r, &xs, 0);
    Some(w[0].iter().zip(&arr[i..i + 4]).map(|(c, v)| c * v).sum())
}

/// Incremental cone-energy and pointwise-decay accumulator for long runs:
/// per accepted step it touches each tracked outgoing cone once at its
/// current intersection radius, so no spacetime history is stored.
///
/// The energy is E²_{≤1}[ξ] = Σ_k E²[φ_k, ξ] over the five first-order
/// commuted fields, accumulated as a trapezoid in the cone parameter
/// u̲ = t − u; snapshots are recorded whenever a u̲-station is crossed.
pub struct SweepAccumulator {
    pub delta: f64,
    pub xi: Multiplier,
    pub cones: Vec<f64>,
    pub stations: Vec<f64>,
    /// Running E²_{≤1}(u; t) per cone.
    pub energy: Vec<f64>,
    /// energy[cone] snapshot at each crossed station.
    pub energy_at_station: Vec<Vec<Option<f64>>>,
    /// min over all samples of the pointwise integrand −√g P^{normal}.
    pub min_integrand: f64,
    /// sup |Lφ| over the pulse region u ∈ [0, δ].
    pub sup_l_region: f64,
    /// sup |L̲φ| just inside the last slice (on the cone u = 5δ/4).
    pub sup_lbar_cdelta: f64,
    /// (time mismatch, |L̲φ| near C_δ) nearest each station.
    pub lbar_at_station: Vec<Option<(f64, f64)>>,
    prev: Option<(f64, Vec<Option<f64>>)>,
}

impl SweepAccumulator {
    pub fn new(delta: f64, xi: Multiplier, cones: Vec<f64>, stations: Vec<f64>) -> Self {
        let nc = cones.len();
        let ns = stations.len();
        Self {
            delta,
            xi,
            cones,
            stations,
            energy: vec![0.0; nc],
            energy_at_station: vec![vec![None; ns]; nc],
            min_integrand: f64::INFINITY,
            sup_l_region: 0.0,
            sup_lbar_cdelta: 0.0,
            lbar_at_station: vec![None; ns],
            prev: None,
        }
    }

    /// Σ_k −√gP^{u}[φ_k, ξ]·r^{n−1}|S^{n−1}| at radius r of the current
    /// state, with the first-order commuted jets assembled from the slab
    /// arrays (ψ_t comes from the evolution right-hand side).
    fn integrand(
        &mut self,
        state: &FieldState,
        slab: &SlabDerivatives,
        r: f64,
    ) -> Option<f64> {
        let grid = &state.grid;
        let at = |arr: &[f64]| interp_slab(grid, arr, r);
        let phi_r = at(&slab.phi_r)?;
        let phi_rr = at(&slab.phi_rr)?;
        let psi = at(&state.psi)?;
        let psi_r = at(&slab.psi_r)?;
        let psi_t = at(&slab.psi_t)?;
        let t = state.t;
        let bg = RadialJet {
            t,
            r,
            v: 0.0,
            vt: psi,
            vr: phi_r,
            vtt: 0.0,
            vtr: 0.0,
            vrr: 0.0,
        };
        let fields =
            first_order_pairs(t, r, self.delta, psi, phi_r, phi_rr, psi_r, psi_t);
        let n = grid.mode.n();
        let w = r.abs().powi(n as i32 - 1) * sphere_area(grid.mode);
        let mut sum = 0.0;
        for (vt, vr) in fields {
            let mut fk = bg;
            fk.vt = vt;
            fk.vr = vr;
            let cur = current(&bg, &fk, self.xi).ok()?;
            let pointwise = -cur.sqrt_g * cur.p_u;
            self.min_integrand = self.min_integrand.min(pointwise);
            sum += pointwise * w;
        }
        Some(sum)
    }
}

/// (v_t, v_r) of the first-order commuted family φ, δ∂ₜφ, δ∂ᵣφ, Bφ, Sφ from
/// pointwise slab values (ψ_t supplied by the evolution right-hand side).
fn first_order_pairs(
    t: f64,
    r: f64,
    d: f64,
    psi: f64,
    phi_r: f64,
    phi_rr: f64,
    psi_r: f64,
    psi_t: f64,
) -> [(f64, f64); 5] {
    [
        (psi, phi_r),
        (d * psi_t, d * psi_r),
        (d * psi_r, d * phi_rr),
        (phi_r + t * psi_r + r * psi_t, t * phi_rr + psi + r * psi_r),
        (psi + t * psi_t + r * psi_r, t * psi_r + phi_r + r * phi_rr),
    ]
}

/// Commuted slice energy E²_{≤1}[ξ](t) = Σ_k ∫ −√g P^t[φ_k, ξ] r^{n−1} dr dσ
/// over the whole grid slice (trapezoid in r). On short-pulse data this
/// realizes the initial-slice energy hierarchy in δ.
pub fn slice_energy_leq1(state: &FieldState, xi: Multiplier) -> Result<f64> {
    let grid = &state.grid;
    let phi_r = derivative(grid, &state.phi, Parity::Even);
    let phi_rr = second_derivative(grid, &state.phi, Parity::Even);
    let psi_r = derivative(grid, &state.psi, Parity::Even);
    let psi_t = rhs(state)?.1;
    let n = grid.mode.n();
    let area = sphere_area(grid.mode);
    let h = grid.h();
    let mut total = 0.0;
    for i in 0..grid.n_points {
        let r = grid.x(i);
        let bg = RadialJet {
            t: state.t,
            r,
            v: 0.0,
            vt: state.psi[i],
            vr: phi_r[i],
            vtt: 0.0,
            vtr: 0.0,
            vrr: 0.0,
        };
        let mut point = 0.0;
        for (vt, vr) in first_order_pairs(
            state.t, r, state.delta, state.psi[i], phi_r[i], phi_rr[i], psi_r[i], psi_t[i],
        ) {
            let mut fk = bg;
            fk.vt = vt;
            fk.vr = vr;
            let cur = current(&bg, &fk, xi)?;
            point += -cur.sqrt_g * cur.p_t;
        }
        let w = if i == 0 || i == grid.n_points - 1 {
            0.5
        } else {
            1.0
        };
        total += point * r.abs().powi(n as i32 - 1) * area * w * h;
    }
    Ok(total)
}

/// Per-slab derivative arrays shared by the accumulator's cones.
struct SlabDerivatives {
    phi_r: Vec<f64>,
    phi_rr: Vec<f64>,
    psi_r: Vec<f64>,
    psi_t: Vec<f64>,
}

impl StepObserver for SweepAccumulator {
    fn observe(&mut self, state: &FieldState) -> Result<()> {
        let grid = &state.grid;
        let margin = 2.0 * grid.h();
        let slab = SlabDerivatives {
            phi_r: derivative(grid, &state.phi, Parity::Even),
            phi_rr: second_derivative(grid, &state.phi, Parity::Even),
            psi_r: derivative(grid, &state.psi, Parity::Even),
            psi_t: rhs(state)?.1,
        };
        let t = state.t;

        // Cone energies: trapezoid in u̲ against the previous step.
        let vals: Vec<Option<f64>> = self
            .cones
            .clone()
            .iter()
            .map(|&u| {
                let r = t - 2.0 * u;
                if r < grid.x_min + margin || r > grid.x_max - margin {
                    None
                } else {
                    self.integrand(state, &slab, r)
                }
            })
            .collect();
        if let Some((tp, prev_vals)) = &self.prev {
            let dt = t - tp;
            for (c, u) in self.cones.clone().iter().enumerate() {
                if let (Some(a), Some(b)) = (prev_vals[c], vals[c]) {
                    self.energy[c] += 0.5 * (a + b) * dt;
                }
                // Station snapshots: u̲ = t − u crossing.
                let ubar_prev = tp - u;
                let ubar_now = t - u;
                for (s, &station) in self.stations.clone().iter().enumerate() {
                    if ubar_prev < station && station <= ubar_now {
                        self.energy_at_station[c][s] = Some(self.energy[c]);
                    }
                }
            }
        }
        self.prev = Some((t, vals));

        // Pointwise: sup |Lφ| over u ∈ [0, δ], and |L̲φ| just inside the last
        // slice. The discrete characteristic front straddles the exact cone
        // u = δ, so sampling there measures the smeared pulse edge rather
        // than the regained smallness; a δ-proportional inset (u = 5δ/4,
        // self-similar across a sweep) stays clear of the front while
        // remaining inside the near-cone region.
        let (r_lo, r_hi) = (t - 2.0 * self.delta, t);
        for i in 0..grid.n_points {
            let r = grid.x(i);
            if r >= r_lo && r <= r_hi {
                self.sup_l_region = self
                    .sup_l_region
                    .max((state.psi[i] + slab.phi_r[i]).abs());
            }
        }
        let r_last = t - 2.5 * self.delta;
        if r_last > grid.x_min + margin && r_last < grid.x_max - margin {
            let psi = interp_slab(grid, &state.psi, r_last);
            let pr = interp_slab(grid, &slab.phi_r, r_last);
            if let (Some(psi), Some(pr)) = (psi, pr) {
                let lbar = (psi - pr).abs();
                self.sup_lbar_cdelta = self.sup_lbar_cdelta.max(lbar);
                let ubar = t - 1.25 * self.delta;
                for (s, &station) in self.stations.clone().iter().enumerate() {
                    let miss = (ubar - station).abs();
                    if self.lbar_at_station[s].map_or(true, |(m, _)| miss < m) {
                        self.lbar_at_station[s] = Some((miss, lbar));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Run several observers in sequence.
pub struct Observers<'a>(pub Vec<&'a mut dyn StepObserver>);

impl StepObserver for Observers<'_> {
    fn observe(&mut self, state: &FieldState) -> Result<()> {
        for obs in &mut self.0 {
            obs.observe(state)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use crate::solver::Mode;

    // -- fd_weights ---------------------------------------------------------

    #[test]
    fn fornberg_reproduces_classic_stencils() {
        let w = fd_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        for (a, b) in w[1].iter().zip([-0.5, 0.0, 0.5]) {
            assert!((a - b).abs() < 1e-14);
        }
        for (a, b) in w[2].iter().zip([1.0, -2.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        // 5-point 4th-order first derivative.
        let w = fd_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 1);
        for (a, b) in w[1].iter().zip([1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0]) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn slice_energy_matches_flat_quadrature() {
        // In the flat small-amplitude limit with ξ = 2∂ₜ, the density is the
        // classic Σ_k (v_t² + v_r²) summed over the five commuted fields.
        let grid = GridSpec::new(Mode::Planar, -4.0, 4.0, 400).unwrap();
        let a = 1e-3;
        let phi: Vec<f64> = (0..400)
            .map(|i| a * (-grid.x(i) * grid.x(i)).exp())
            .collect();
        let psi: Vec<f64> = (0..400)
            .map(|i| 0.5 * a * (-(grid.x(i) - 0.3).powi(2)).exp())
            .collect();
        let state = FieldState::new(grid.clone(), 1.3, phi, psi, 0.1).unwrap();
        let e = slice_energy_leq1(&state, Multiplier::TwoDt).unwrap();
        let phi_r = derivative(&grid, &state.phi, Parity::Even);
        let phi_rr = second_derivative(&grid, &state.phi, Parity::Even);
        let psi_r = derivative(&grid, &state.psi, Parity::Even);
        let psi_t = rhs(&state).unwrap().1;
        let mut want = 0.0;
        for i in 1..399 {
            for (vt, vr) in first_order_pairs(
                1.3,
                grid.x(i),
                0.1,
                state.psi[i],
                phi_r[i],
                phi_rr[i],
                psi_r[i],
                psi_t[i],
            ) {
                want += (vt * vt + vr * vr) * grid.h();
            }
        }
        assert!(e > 0.0);
        let rel = (e - want).abs() / want;
        assert!(rel < 1e-3, "relative mismatch {rel:.3e}");

        let zero = FieldState::new(grid, 0.0, vec![0.0; 400], vec![0.0; 400], 0.1).unwrap();
        assert_eq!(slice_energy_leq1(&zero, Multiplier::LTilde).unwrap(), 0.0);
    }

    // -- helpers ------------------------------------------------------------

    fn planar_grid(n: usize) -> GridSpec {
        GridSpec::new(Mode::Planar, -4.0, 4.0, n).unwrap()
    }

    /// Travelling null pulse φ = A·exp(−(t−x−c)²/w²): an exact solution.
    fn null_pulse_state(grid: GridSpec, amp: f64, c: f64, w: f64, t: f64) -> FieldState {
        let f = |s: f64| amp * (-(s - c) * (s - c) / (w * w)).exp();
        let fp = |s: f64| -2.0 * (s - c) / (w * w) * f(s);
        let phi: Vec<f64> = grid.coords().iter().map(|&x| f(t - x)).collect();
        let psi: Vec<f64> = grid.coords().iter().map(|&x| fp(t - x)).collect();
        FieldState::new(grid, t, phi, psi, 1.0).unwrap()
    }

    fn exact_pulse(amp: f64, c: f64, w: f64, t: f64, x: f64) -> f64 {
        amp * (-(t - x - c) * (t - x - c) / (w * w)).exp()
    }

    // -- history sampling ---------------------------------------------------

    #[test]
    fn history_interpolation_matches_exact_solution() {
        let grid = planar_grid(401);
        let state = null_pulse_state(grid, 0.02, -1.0, 0.4, 0.0);
        let h = record_history(state, 1.0, 0.4, 2).unwrap();
        // Sample on an outgoing cone through the pulse: the wave is constant
        // along t − x, so the closed form is known everywhere.
        let sample = cone_sample(&h, &h, ConeId::Outgoing { u: 0.1 }, 0.2, 0.4, 16).unwrap();
        for ((t, x), jet) in sample.events.iter().zip(&sample.bg) {
            let want = exact_pulse(0.02, -1.0, 0.4, *t, *x);
            assert!((jet.v - want).abs() < 1e-7, "{} vs {}", jet.v, want);
            // First derivatives too: Lφ = 0 for a left-to-right traveller.
            assert!(jet.l().abs() < 1e-6);
        }
    }

    #[test]
    fn history_rejects_outside_events() {
        let grid = planar_grid(101);
        let state = FieldState::zero(grid, 0.0, 1.0);
        let h = record_history(state, 0.5, 0.4, 1).unwrap();
        assert!(matches!(
            h.sample(2.0, 0.0),
            Err(MembraneError::OutOfHistory(_))
        ));
        assert!(matches!(
            h.sample(0.2, 9.0),
            Err(MembraneError::OutOfHistory(_))
        ));
    }

    // -- currents -----------------------------------------------------------

    #[test]
    fn zero_field_current_vanishes() {
        let bg = RadialJet::zero(1.0, 2.0);
        for xi in [Multiplier::TwoDt, Multiplier::LTilde, Multiplier::LBarTilde] {
            let cur = current(&bg, &bg, xi).unwrap();
            assert_eq!(cur.p_t, 0.0);
            assert_eq!(cur.p_r, 0.0);
        }
    }

    #[test]
    fn time_energy_density_is_the_classic_one() {
        // ξ = 2∂ₜ, small gradients: −P^t ≈ (∂ₜφ_k)² + (∂ᵣφ_k)².
        let mut rng = SplitMix64::new(0xd1a6);
        for _ in 0..100 {
            let mut bg = RadialJet::zero(1.0, 2.0);
            bg.vt = rng.uniform(-1e-3, 1e-3);
            bg.vr = rng.uniform(-1e-3, 1e-3);
            let mut fk = bg;
            fk.vt = rng.uniform(-0.5, 0.5);
            fk.vr = rng.uniform(-0.5, 0.5);
            let cur = current(&bg, &fk, Multiplier::TwoDt).unwrap();
            let classic = fk.vt * fk.vt + fk.vr * fk.vr;
            assert!((-cur.p_t - classic).abs() < 1e-2 * classic.max(1e-12));
        }
    }

    #[test]
    fn adapted_flux_is_equivalent_to_the_null_quadratic_form() {
        // Short-pulse regime |Lφ| ≤ 0.05, L̲φ ∈ [0.5, 1.5]:
        // −P^u̲[φ_k, L̃] sandwiched by |Lφ_k|² + |Lφ|⁴|L̲φ_k|² within [1/8, 8].
        let mut rng = SplitMix64::new(0x3b20);
        for _ in 0..300 {
            let lphi = rng.uniform(-0.05, 0.05);
            let lbarphi = rng.uniform(0.5, 1.5);
            let mut bg = RadialJet::zero(1.0, 2.0);
            bg.vt = 0.5 * (lphi + lbarphi);
            bg.vr = 0.5 * (lphi - lbarphi);
            let mut fk = RadialJet::zero(1.0, 2.0);
            fk.vt = rng.uniform(-1.0, 1.0);
            fk.vr = rng.uniform(-1.0, 1.0);
            let lk = fk.l();
            let lbark = fk.lbar();
            let cur = current(&bg, &fk, Multiplier::LTilde).unwrap();
            let quad = lk * lk + lphi.powi(4) * lbark * lbark;
            // Outgoing-cone flux of the L̃ energy: the equivalence
            // −P^u ∼ |Lφ_k|² + |Lφ|⁴|L̲φ_k|² (angular part absent radially).
            let flux = -cur.p_u;
            assert!(flux >= quad / 8.0 - 1e-14, "flux {flux:.3e} quad {quad:.3e}");
            assert!(flux <= 8.0 * quad + 1e-14, "flux {flux:.3e} quad {quad:.3e}");
        }
    }

    #[test]
    fn current_guards_degenerate_backgrounds() {
        let mut bg = RadialJet::zero(0.0, 1.0);
        bg.vt = 1.2;
        assert!(matches!(
            current(&bg, &bg, Multiplier::TwoDt),
            Err(MembraneError::DegenerateMetric { .. })
        ));
    }

    // -- fluxes and identity ------------------------------------------------

    #[test]
    fn zero_field_fluxes_and_identity_vanish() {
        let grid = planar_grid(101);
        let state = FieldState::zero(grid, 0.0, 1.0);
        let h = record_history(state, 1.0, 0.4, 1).unwrap();
        let s = cone_sample(&h, &h, ConeId::Slice { t: 0.5 }, -2.0, 2.0, 32).unwrap();
        assert_eq!(flux_energy(&s, Multiplier::TwoDt).unwrap().energy, 0.0);
        let id =
            energy_identity_residual(&h, &h, Multiplier::TwoDt, 0.05, -0.3, 0.0, 0.4, 24).unwrap();
        assert_eq!(id.residual, 0.0);
    }

    #[test]
    fn energy_identity_converges_and_detects_corruption() {
        let run = |n: usize| -> EnergyIdentity {
            let grid = planar_grid(n);
            let state = null_pulse_state(grid, 0.02, -0.5, 0.4, 0.0);
            let h = record_history(state, 1.2, 0.4, 1).unwrap();
            energy_identity_residual(&h, &h, Multiplier::TwoDt, 0.1, -1.2, -0.2, 1.35, 48)
                .unwrap()
        };
        let coarse = run(201);
        let fine = run(401);
        // The boundary energies are genuinely nonzero…
        assert!(coarse.outgoing + coarse.incoming > 1e-5);
        // …and the residual refines at measured order ≥ 1.5.
        let order = (coarse.residual / fine.residual).log2();
        assert!(
            order >= 1.5,
            "order {order:.2} (residuals {:.3e} → {:.3e})",
            coarse.residual,
            fine.residual
        );

        // Negative control: scaling φ by 1.01 on the slabs of a fixed time
        // window makes the history a non-solution over an O(1) region, so
        // the balance breaks by an amount that does not refine away. The
        // control run uses standing data (both characteristic families
        // present): for a one-directional traveller the missing source
        // □φ·ξ(φ) is a perfect x-derivative and would integrate to zero.
        let grid = planar_grid(201);
        let f = |x: f64| 0.02 * (-(x + 0.5) * (x + 0.5) / 0.16).exp();
        let phi: Vec<f64> = grid.coords().iter().map(|&x| f(x)).collect();
        let psi = vec![0.0; grid.n_points];
        let state = FieldState::new(grid, 0.0, phi, psi, 1.0).unwrap();
        let h = record_history(state, 1.2, 0.4, 1).unwrap();
        let clean = energy_identity_residual(&h, &h, Multiplier::TwoDt, 0.1, -1.2, -0.2, 1.35, 48)
            .unwrap();
        let mut bad_h = h.clone();
        for (k, slab) in bad_h.phis.iter_mut().enumerate() {
            if bad_h.times[k] >= 0.4 && bad_h.times[k] <= 0.7 {
                for v in slab.iter_mut() {
                    *v *= 1.01;
                }
            }
        }
        let bad =
            energy_identity_residual(&bad_h, &bad_h, Multiplier::TwoDt, 0.1, -1.2, -0.2, 1.35, 48)
                .unwrap();
        assert!(
            bad.residual > 10.0 * clean.residual,
            "corrupted {:.3e} vs clean {:.3e}",
            bad.residual,
            clean.residual
        );
    }

    // -- commuted fields ----------------------------------------------------

    #[test]
    fn empty_word_is_the_identity() {
        let grid = planar_grid(101);
        let state = null_pulse_state(grid, 0.01, 0.0, 0.5, 0.0);
        let h = record_history(state, 0.4, 0.4, 1).unwrap();
        let z = apply_z(&h, &[], 0.1).unwrap();
        assert_eq!(h.phis, z.phis);
        assert_eq!(h.psis, z.psis);
    }

    #[test]
    fn scaling_field_matches_closed_form() {
        // φ = f(t − x): Sφ = (t∂ₜ + x∂ₓ)φ = (t − x)f′(t − x).
        let grid = planar_grid(401);
        let (amp, c, w) = (0.01, 0.0, 0.5);
        let state = null_pulse_state(grid, amp, c, w, 0.0);
        let h = record_history(state, 0.8, 0.4, 1).unwrap();
        let s = apply_z(&h, &[Letter::S], 0.1).unwrap();
        let f = |s: f64| amp * (-(s - c) * (s - c) / (w * w)).exp();
        let fp = |s: f64| -2.0 * (s - c) / (w * w) * f(s);
        for &(t, x) in &[(0.4, 0.3), (0.5, -0.7), (0.6, 0.1)] {
            let got = s.sample(t, x).unwrap().v;
            let want = (t - x) * fp(t - x);
            assert!((got - want).abs() < 1e-7, "{got} vs {want}");
        }
    }

    #[test]
    fn translation_letters_commute_to_discretization_error() {
        let grid = planar_grid(401);
        let state = null_pulse_state(grid, 0.01, 0.0, 0.5, 0.0);
        let h = record_history(state, 0.8, 0.4, 1).unwrap();
        let ab = apply_z(&h, &[Letter::Dt, Letter::Dr], 0.1).unwrap();
        let ba = apply_z(&h, &[Letter::Dr, Letter::Dt], 0.1).unwrap();
        let mid = ab.phis.len() / 2;
        let diff = ab.phis[mid]
            .iter()
            .zip(&ba.phis[mid])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(diff < 1e-8, "commutator defect {diff:.3e}");
    }

    #[test]
    fn words_longer_than_two_are_rejected() {
        let grid = planar_grid(101);
        let state = FieldState::zero(grid, 0.0, 1.0);
        let h = record_history(state, 0.2, 0.4, 1).unwrap();
        assert!(matches!(
            apply_z(&h, &[Letter::Dt, Letter::Dt, Letter::Dt], 0.1),
            Err(MembraneError::Config(_))
        ));
    }

    #[test]
    fn commuted_equation_residual_refines_for_scaling() {
        let run = |n: usize| -> f64 {
            let grid = planar_grid(n);
            let state = null_pulse_state(grid, 0.02, -0.5, 0.4, 0.0);
            let h = record_history(state, 1.0, 0.4, 1).unwrap();
            let events: Vec<(f64, f64)> =
                (0..8).map(|k| (0.5, -1.2 + 0.2 * k as f64)).collect();
            commuted_residual(&h, Letter::S, 0.1, &events).unwrap()
        };
        let coarse = run(201);
        let fine = run(401);
        let order = (coarse / fine).log2();
        assert!(
            order >= 1.5,
            "order {order:.2} ({coarse:.3e} → {fine:.3e})"
        );
    }

    #[test]
    fn radial_mode_rejects_broken_symmetries() {
        let grid = GridSpec::new(Mode::Radial { n: 3 }, 0.0, 4.0, 101).unwrap();
        let state = FieldState::zero(grid, 1.0, 0.1);
        let h = record_history(state, 1.2, 0.4, 1).unwrap();
        assert!(matches!(
            commuted_residual(&h, Letter::Dr, 0.1, &[(1.1, 2.0)]),
            Err(MembraneError::Config(_))
        ));
    }

    // -- pointwise tracking -------------------------------------------------

    #[test]
    fn zero_field_decay_table_is_zero() {
        let grid = GridSpec::new(Mode::Radial { n: 3 }, 0.0, 8.0, 201).unwrap();
        let state = FieldState::zero(grid, 1.0, 0.1);
        let h = record_history(state, 3.0, 0.4, 1).unwrap();
        let rows = pointwise_tracker(&h, 0.1, &[1.5, 2.0, 2.5], 8).unwrap();
        for row in rows {
            assert_eq!(row.sup_l, 0.0);
            assert_eq!(row.sup_lbar, 0.0);
            assert_eq!(row.sup_lbar_lbar, 0.0);
        }
        let rows = last_slice_report(&h, 0.1, &[2.0, 2.5]).unwrap();
        assert!(rows.iter().all(|r| r.sup_lbar == 0.0));
    }

    // -- scaling fits -------------------------------------------------------

    #[test]
    fn exact_power_law_is_fit_exactly() {
        let samples: Vec<(f64, f64)> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&d: &f64| (d, 2.0 * d.powf(0.75)))
            .collect();
        let fit = scaling_fit(&samples, 0.75, Verdict::Within(1e-9)).unwrap();
        assert!((fit.exponent - 0.75).abs() < 1e-12);
        assert!(fit.std_error < 1e-12);
        assert!(fit.pass);
    }

    #[test]
    fn constant_samples_fit_slope_zero() {
        let samples = vec![(0.1, 3.0), (0.02, 3.0), (0.004, 3.0)];
        let fit = scaling_fit(&samples, 0.0, Verdict::Within(1e-12)).unwrap();
        assert_eq!(fit.exponent, 0.0);
    }

    #[test]
    fn perturbed_power_law_stays_near_one() {
        let samples: Vec<(f64, f64)> = [0.2, 0.1, 0.05, 0.025, 0.0125]
            .iter()
            .map(|&d: &f64| (d, d * (1.0 + 0.1 * (1.0 / d).sin())))
            .collect();
        let fit = scaling_fit(&samples, 1.0, Verdict::Within(0.1)).unwrap();
        assert!(fit.exponent > 0.9 && fit.exponent < 1.1, "{}", fit.exponent);
        assert!(fit.std_error > 0.0);
    }

    #[test]
    fn degenerate_sample_sets_are_rejected() {
        assert!(matches!(
            scaling_fit(&[(0.1, 1.0), (0.05, 2.0)], 1.0, Verdict::Within(0.1)),
            Err(MembraneError::InsufficientSamples(_))
        ));
        // Insufficient span.
        assert!(matches!(
            scaling_fit(
                &[(0.1, 1.0), (0.09, 1.0), (0.08, 1.0)],
                1.0,
                Verdict::Within(0.1)
            ),
            Err(MembraneError::InsufficientSamples(_))
        ));
        // Non-positive value.
        assert!(matches!(
            scaling_fit(
                &[(0.1, 1.0), (0.05, 0.0), (0.02, 1.0)],
                1.0,
                Verdict::Within(0.1)
            ),
            Err(MembraneError::InsufficientSamples(_))
        ));
    }

    // -- incremental accumulator -------------------------------------------

    #[test]
    fn incremental_energy_matches_posthoc_cone_flux() {
        use crate::solver::evolve;
        let grid = GridSpec::new(Mode::Radial { n: 3 }, 0.0, 6.0, 601).unwrap();
        // Small outgoing-flavoured pulse centred at r = 1.
        let f = |r: f64| 0.005 * (-(r - 1.0) * (r - 1.0) / 0.04).exp();
        let phi: Vec<f64> = grid.coords().iter().map(|&r| f(r)).collect();
        let fp = |r: f64| -2.0 * (r - 1.0) / 0.04 * f(r);
        let psi: Vec<f64> = grid.coords().iter().map(|&r| -fp(r)).collect();
        let state = FieldState::new(grid.clone(), 1.0, phi.clone(), psi.clone(), 0.1).unwrap();

        let u = 0.05;
        let mut acc =
            SweepAccumulator::new(0.1, Multiplier::LTilde, vec![u], vec![2.0]);
        let mut rec = HistoryRecorder::new(1);
        {
            let mut both = Observers(vec![&mut acc, &mut rec]);
            evolve(state, 2.2, 0.4, &mut both).unwrap();
        }
        let h = rec.history.unwrap();

        // Post-hoc: E²_{≤1}[L̃] on C_u from Σ₁ to u̲ = 2.
        let mut posthoc = 0.0;
        for word in first_order_words() {
            let fkh = apply_z(&h, &word, 0.1).unwrap();
            let s =
                cone_sample(&h, &fkh, ConeId::Outgoing { u }, 1.0 - u, 2.0, 64).unwrap();
            posthoc += flux_energy(&s, Multiplier::LTilde).unwrap().energy;
        }
        let inc = acc.energy_at_station[0][0].expect("station crossed");
        assert!(posthoc > 1e-9, "degenerate test: posthoc {posthoc:.3e}");
        assert!(
            (inc - posthoc).abs() < 0.05 * posthoc,
            "incremental {inc:.6e} vs post-hoc {posthoc:.6e}"
        );
        // Causal multiplier on an outgoing cone: nonnegative integrand.
        assert!(acc.min_integrand >= -1e-12, "{:.3e}", acc.min_integrand);
    }
}
