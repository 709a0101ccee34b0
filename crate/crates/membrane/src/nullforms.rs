//! Null forms, the null-frame decomposition identities, and the signature
//! calculus.
//!
//! The classical null forms are
//!
//!   Q0(φ,ψ)  = η^{αβ}∂_αφ∂_βψ,
//!   Qαβ(φ,ψ) = ∂_αφ∂_βψ − ∂_βφ∂_αψ,
//!
//! and the membrane nonlinearity is the (half-symmetrized) double null form
//! ∂^αφ∂^βφ∂²_{αβ}φ (indices raised by η), normalized so that
//! □φ − nonlinearity/(1+Q) = g^{αβ}∂_α∂_βφ identically.
//!
//! The decomposition identities re-express second-derivative contractions in
//! the flat null frame L = ∂ₜ+∂_r, L̲ = ∂ₜ−∂_r, ∂̄_i = ∂_i − ω_i∂_r. Both
//! sides are evaluated through independent code paths and compared; the
//! residuals are the test surface for the whole frame calculus.

use crate::error::{MembraneError, Result};
use crate::fields::AnalyticField;
use crate::geometry::{metric_from_jet, Chart, Mat, SpacetimeJet, Vect, MAX_DIM};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NullFormId {
    Q0,
    /// Qαβ with 0 ≤ α < β ≤ n.
    Qab(usize, usize),
}

impl NullFormId {
    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            NullFormId::Q0 => Ok(()),
            NullFormId::Qab(a, b) => {
                if a < b && b <= n {
                    Ok(())
                } else {
                    Err(MembraneError::Config(format!(
                        "Qαβ indices ({a},{b}) must satisfy 0 ≤ α < β ≤ {n}"
                    )))
                }
            }
        }
    }
}

/// Evaluate a null form on two gradients given in a common chart.
pub fn eval_nullform(id: NullFormId, dphi: &Vect, dpsi: &Vect, chart: Chart) -> f64 {
    match id {
        NullFormId::Q0 => {
            let eta = chart.eta_upper(0.0);
            let d = chart.dim();
            let mut s = 0.0;
            for a in 0..d {
                for b in 0..d {
                    s += eta[a][b] * dphi[a] * dpsi[b];
                }
            }
            s
        }
        NullFormId::Qab(a, b) => dphi[a] * dpsi[b] - dphi[b] * dpsi[a],
    }
}

/// The RME nonlinearity ∂^αφ∂^βφ∂²_{αβ}φ/(1+Q), so that
/// □φ − rme_nonlinearity = g^{αβ}∂_α∂_βφ exactly.
pub fn rme_nonlinearity(jet: &SpacetimeJet) -> Result<f64> {
    let jet = cartesianize(jet)?;
    let metric = metric_from_jet(&jet)?; // supplies Q, g and the degeneracy guard
    let d = jet.dim();
    let eta = jet.chart.eta_upper(0.0);
    let d1 = jet.d1();
    let d2 = jet.d2()?;
    let mut up = [0.0; MAX_DIM];
    for a in 0..d {
        for b in 0..d {
            up[a] += eta[a][b] * d1[b];
        }
    }
    let mut cubic = 0.0;
    for a in 0..d {
        for b in 0..d {
            cubic += up[a] * up[b] * d2[a][b];
        }
    }
    Ok(cubic / metric.g)
}

/// Geometry shared by the radial decompositions at one Cartesian event.
struct RadialFrame {
    d: usize,
    r: f64,
    omega: Vect,
}

impl RadialFrame {
    fn at(jet: &SpacetimeJet) -> Result<Self> {
        let d = jet.dim();
        let mut r2 = 0.0;
        for i in 1..d {
            r2 += jet.coords[i] * jet.coords[i];
        }
        let r = r2.sqrt();
        if r < 1e-8 {
            return Err(MembraneError::OriginSingular(r));
        }
        let mut omega = [0.0; MAX_DIM];
        for i in 1..d {
            omega[i] = jet.coords[i] / r;
        }
        Ok(Self { d, r, omega })
    }

    /// ∂_rψ = ω^k∂_kψ.
    fn radial(&self, d1: &Vect) -> f64 {
        (1..self.d).map(|k| self.omega[k] * d1[k]).sum()
    }

    /// ∂̄_iψ = ∂_iψ − ω_i∂_rψ (spatial indices; slot 0 unused).
    fn tangential(&self, d1: &Vect) -> Vect {
        let pr = self.radial(d1);
        let mut t = [0.0; MAX_DIM];
        for i in 1..self.d {
            t[i] = d1[i] - self.omega[i] * pr;
        }
        t
    }

    /// Second-derivative blocks of ψ in the (t, r, tangential) split:
    /// (ψ_tt, ψ_tr, ψ_rr, ∂̄_j∂_tψ, D_j = ∂̄_j∂_rψ, ∂̄_i∂̄_jψ as composition).
    fn split2(&self, jet: &SpacetimeJet) -> Result<Split2> {
        let d1 = jet.d1();
        let d2 = jet.d2()?;
        let d = self.d;
        let om = &self.omega;
        let p_tt = d2[0][0];
        let mut p_tr = 0.0;
        for k in 1..d {
            p_tr += om[k] * d2[0][k];
        }
        let mut p_rr = 0.0;
        for k in 1..d {
            for l in 1..d {
                p_rr += om[k] * om[l] * d2[k][l];
            }
        }
        let p_r = self.radial(d1);

        let mut tang_t = [0.0; MAX_DIM]; // ∂̄_j(∂_tψ)
        let mut tang_r = [0.0; MAX_DIM]; // D_j = ∂̄_j(∂_rψ)
        for j in 1..d {
            tang_t[j] = d2[0][j] - om[j] * p_tr;
            let mut s = (d1[j] - om[j] * p_r) / self.r; // P_jk∂_kψ/r
            for k in 1..d {
                s += om[k] * d2[j][k];
            }
            tang_r[j] = s - om[j] * p_rr;
        }

        // ∂̄_i∂̄_jψ (operator composition), from the rearranged split of ∂_i∂_j.
        let mut tang2 = [[0.0; MAX_DIM]; MAX_DIM];
        for i in 1..d {
            for j in 1..d {
                let p_ij = delta(i, j) - om[i] * om[j];
                tang2[i][j] = d2[i][j]
                    - om[i] * tang_r[j]
                    - om[j] * tang_r[i]
                    - p_ij * p_r / self.r
                    - om[i] * om[j] * p_rr;
            }
        }

        Ok(Split2 {
            p_r,
            p_tt,
            p_tr,
            p_rr,
            tang_t,
            tang_r,
            tang2,
        })
    }
}

struct Split2 {
    p_r: f64,
    p_tt: f64,
    p_tr: f64,
    p_rr: f64,
    tang_t: Vect,
    tang_r: Vect,
    tang2: Mat,
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// Null-frame components of a symmetric contravariant tensor k^{αβ} at one
/// radial event.
struct KSplit {
    /// Coefficients of L²ψ, LL̲ψ, L̲²ψ for the radial second-derivative block.
    a_ll: f64,
    b_llb: f64,
    c_lblb: f64,
    /// Tangential parts of k^{0j} and (kω)^j.
    bbar: Vect,
    cbar: Vect,
    /// δ̄_ij k^{ij} (angular trace).
    trbar: f64,
    /// Spatial block (for the tangential composition term).
    spatial: Mat,
}

impl KSplit {
    fn of(k: &Mat, rf: &RadialFrame) -> Self {
        let d = rf.d;
        let om = &rf.omega;
        let a = k[0][0];
        let mut b_r = 0.0;
        for i in 1..d {
            b_r += k[0][i] * om[i];
        }
        let mut c_rr = 0.0;
        let mut tr = 0.0;
        for i in 1..d {
            tr += k[i][i];
            for j in 1..d {
                c_rr += k[i][j] * om[i] * om[j];
            }
        }
        let mut bbar = [0.0; MAX_DIM];
        let mut cbar = [0.0; MAX_DIM];
        for j in 1..d {
            bbar[j] = k[0][j] - b_r * om[j];
            let mut cw = 0.0;
            for i in 1..d {
                cw += k[i][j] * om[i];
            }
            cbar[j] = cw - c_rr * om[j];
        }
        KSplit {
            a_ll: 0.25 * (a + 2.0 * b_r + c_rr),
            b_llb: 0.5 * (a - c_rr),
            c_lblb: 0.25 * (a - 2.0 * b_r + c_rr),
            bbar,
            cbar,
            trbar: tr - c_rr,
            spatial: *k,
        }
    }
}

/// Evaluate k^{αβ}∂_α∂_βψ two ways — direct contraction and the null-frame
/// decomposition — and return |difference|.
///
/// The decomposition reads (with A, B, C the null components of the radial
/// block and D_j = ∂̄_j∂_r):
///
///   k^{αβ}∂_α∂_βψ = A·L²ψ + B·LL̲ψ + C·L̲²ψ
///                 + Σ_j [(b̄+c̄)^j ∂̄_jLψ + (b̄−c̄)^j ∂̄_jL̲ψ]
///                 + k^{ij}∂̄_i∂̄_jψ + (δ̄_ij k^{ij})·∂_rψ/r.
pub fn symmetric_decompose(k: &Mat, psi: &SpacetimeJet) -> Result<f64> {
    let psi = cartesianize(psi)?;
    let rf = RadialFrame::at(&psi)?;
    let d = rf.d;
    let d2 = psi.d2()?;

    let mut lhs = 0.0;
    for a in 0..d {
        for b in 0..d {
            lhs += k[a][b] * d2[a][b];
        }
    }

    let ks = KSplit::of(k, &rf);
    let sp = rf.split2(&psi)?;
    let rhs = assemble_decomposition(&ks, &sp, &rf);
    Ok((lhs - rhs).abs())
}

fn assemble_decomposition(ks: &KSplit, sp: &Split2, rf: &RadialFrame) -> f64 {
    let d = rf.d;
    // Radial second derivatives in null directions.
    let ll = sp.p_tt + 2.0 * sp.p_tr + sp.p_rr;
    let llb = sp.p_tt - sp.p_rr;
    let lblb = sp.p_tt - 2.0 * sp.p_tr + sp.p_rr;
    let mut rhs = ks.a_ll * ll + ks.b_llb * llb + ks.c_lblb * lblb;
    for j in 1..d {
        let tang_l = sp.tang_t[j] + sp.tang_r[j];
        let tang_lb = sp.tang_t[j] - sp.tang_r[j];
        rhs += (ks.bbar[j] + ks.cbar[j]) * tang_l + (ks.bbar[j] - ks.cbar[j]) * tang_lb;
    }
    for i in 1..d {
        for j in 1..d {
            rhs += ks.spatial[i][j] * sp.tang2[i][j];
        }
    }
    rhs + ks.trbar * sp.p_r / rf.r
}

/// Result of expanding the cubic form S^{αβ}(φ,ψ)∂_α∂_βχ in the null frame.
#[derive(Clone, Copy, Debug)]
pub struct DoubleNullExpansion {
    pub value: f64,
    /// Good bulk terms (null components and pure tangential second derivatives).
    pub j11: f64,
    /// The r⁻¹-weighted terms carrying two angular derivatives.
    pub j12: f64,
    pub residual: f64,
}

/// Expand S^{αβ}(φ,ψ)∂_α∂_βχ with S^{αβ} = ½(∂^αφ∂^βψ + ∂^αψ∂^βφ) and split
/// it into the J₁₁ bulk and the r⁻¹-weighted J₁₂ remainder:
///
///   J₁₂ = (Σ_i ∂̄_iφ∂̄_iψ)·∂_rχ/r − (1/r)·Σ_i(∂̄_iφ∂_rψ + ∂̄_iψ∂_rφ)∂̄_iχ,
///
/// where the second group collects both slots of the symmetrized tangential
/// Hessian (Σ_iω_i∂̄_{(i}∂̄_{j)}χ = −∂̄_jχ/r in each slot).
pub fn double_nullform_expand(
    phi: &SpacetimeJet,
    psi: &SpacetimeJet,
    chi: &SpacetimeJet,
) -> Result<DoubleNullExpansion> {
    let phi = cartesianize(phi)?;
    let psi = cartesianize(psi)?;
    let chi = cartesianize(chi)?;
    let rf = RadialFrame::at(&chi)?;
    let d = rf.d;
    let eta = chi.chart.eta_upper(0.0);

    // S^{αβ} with η-raised gradients.
    let raise = |d1: &Vect| -> Vect {
        let mut up = [0.0; MAX_DIM];
        for a in 0..d {
            for b in 0..d {
                up[a] += eta[a][b] * d1[b];
            }
        }
        up
    };
    let fu = raise(phi.d1());
    let su = raise(psi.d1());
    let mut k = [[0.0; MAX_DIM]; MAX_DIM];
    for a in 0..d {
        for b in 0..d {
            k[a][b] = 0.5 * (fu[a] * su[b] + su[a] * fu[b]);
        }
    }

    let chi2 = chi.d2()?;
    let mut value = 0.0;
    for a in 0..d {
        for b in 0..d {
            value += k[a][b] * chi2[a][b];
        }
    }

    let ks = KSplit::of(&k, &rf);
    let sp = rf.split2(&chi)?;

    // J₁₂ from the product structure of S(φ,ψ).
    let tphi = rf.tangential(phi.d1());
    let tpsi = rf.tangential(psi.d1());
    let tchi = rf.tangential(chi.d1());
    let rphi = rf.radial(phi.d1());
    let rpsi = rf.radial(psi.d1());
    let mut angular_dot = 0.0;
    let mut mixed = 0.0;
    for i in 1..d {
        angular_dot += tphi[i] * tpsi[i];
        mixed += (tphi[i] * rpsi + tpsi[i] * rphi) * tchi[i];
    }
    let j12 = angular_dot * sp.p_r / rf.r - mixed / rf.r;

    // J₁₁ = frame bulk: the full decomposition minus both r⁻¹ groups, with the
    // tangential composition term rewritten in pure-tangential slots
    // (k^{ij}∂̄_i∂̄_j = ½Σ(∂̄φ∂̄ψ)_{sym}∂̄∂̄ − the mixed J₁₂ piece).
    let mut j11 = ks.a_ll * (sp.p_tt + 2.0 * sp.p_tr + sp.p_rr)
        + ks.b_llb * (sp.p_tt - sp.p_rr)
        + ks.c_lblb * (sp.p_tt - 2.0 * sp.p_tr + sp.p_rr);
    for j in 1..d {
        let tang_l = sp.tang_t[j] + sp.tang_r[j];
        let tang_lb = sp.tang_t[j] - sp.tang_r[j];
        j11 += (ks.bbar[j] + ks.cbar[j]) * tang_l + (ks.bbar[j] - ks.cbar[j]) * tang_lb;
    }
    for i in 1..d {
        for j in 1..d {
            j11 += 0.5 * (tphi[i] * tpsi[j] + tpsi[i] * tphi[j]) * sp.tang2[i][j];
        }
    }

    let residual = (value - (j11 + j12)).abs();
    Ok(DoubleNullExpansion {
        value,
        j11,
        j12,
        residual,
    })
}

// ---------------------------------------------------------------------------
// Signature calculus
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameDir {
    L,
    Lbar,
    Angular,
}

impl FrameDir {
    pub fn signature(&self) -> i32 {
        match self {
            FrameDir::L => 1,
            FrameDir::Lbar => -1,
            FrameDir::Angular => 0,
        }
    }
}

/// One factor of a frame monomial: a frame derivative applied to a named field.
#[derive(Clone, Debug)]
pub struct FrameFactor {
    pub dirs: Vec<FrameDir>,
    pub field: String,
}

#[derive(Clone, Debug)]
pub struct FrameMonomial {
    pub factors: Vec<FrameFactor>,
}

impl FrameMonomial {
    pub fn new(factors: Vec<(Vec<FrameDir>, &str)>) -> Self {
        Self {
            factors: factors
                .into_iter()
                .map(|(dirs, field)| FrameFactor {
                    dirs,
                    field: field.to_string(),
                })
                .collect(),
        }
    }

    /// Shorthand for single-derivative factors like Lφ·L̲ψ.
    pub fn first_order(dirs: &[(FrameDir, &str)]) -> Self {
        Self::new(dirs.iter().map(|(d, f)| (vec![*d], *f)).collect())
    }
}

/// Signature = (#L) − (#L̲) over all derivative factors; angular counts 0.
pub fn signature_of(m: &FrameMonomial) -> i32 {
    m.factors
        .iter()
        .flat_map(|f| f.dirs.iter())
        .map(|d| d.signature())
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Admissibility {
    NullAdmissible,
    Forbidden,
}

/// A monomial can appear in a (double) null form iff its signature stays
/// strictly inside (−2, 2); in particular L̲φ·L̲ψ (signature −2) is forbidden.
pub fn classify(m: &FrameMonomial) -> Admissibility {
    if signature_of(m).abs() >= 2 {
        Admissibility::Forbidden
    } else {
        Admissibility::NullAdmissible
    }
}

// ---------------------------------------------------------------------------
// Commutators of symmetry fields with Q0
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KlainermanField {
    /// Boost Ω₀ᵢ = t∂ᵢ + xᵢ∂ₜ.
    Omega0(usize),
    /// Rotation Ωᵢⱼ = xᵢ∂ⱼ − xⱼ∂ᵢ.
    Omega(usize, usize),
    /// Scaling S = t∂ₜ + x^k∂_k.
    S,
    L,
    Lbar,
}

impl KlainermanField {
    /// Components Z^α and Jacobian ∂_αZ^μ at a point.
    fn vector(&self, x: &Vect, d: usize) -> Result<(Vect, Mat)> {
        let mut z = [0.0; MAX_DIM];
        let mut dz = [[0.0; MAX_DIM]; MAX_DIM]; // dz[α][μ] = ∂_α Z^μ
        match *self {
            KlainermanField::Omega0(i) => {
                z[0] = x[i];
                z[i] = x[0];
                dz[i][0] = 1.0;
                dz[0][i] = 1.0;
            }
            KlainermanField::Omega(i, j) => {
                z[j] = x[i];
                z[i] = -x[j];
                dz[i][j] = 1.0;
                dz[j][i] = -1.0;
            }
            KlainermanField::S => {
                for a in 0..d {
                    z[a] = x[a];
                    dz[a][a] = 1.0;
                }
            }
            KlainermanField::L | KlainermanField::Lbar => {
                let mut r2 = 0.0;
                for i in 1..d {
                    r2 += x[i] * x[i];
                }
                let r = r2.sqrt();
                if r < 1e-8 {
                    return Err(MembraneError::OriginSingular(r));
                }
                let sign = if matches!(self, KlainermanField::L) {
                    1.0
                } else {
                    -1.0
                };
                z[0] = 1.0;
                for i in 1..d {
                    z[i] = sign * x[i] / r;
                }
                for a in 1..d {
                    for m in 1..d {
                        dz[a][m] = sign * (delta(a, m) - x[a] * x[m] / r2) / r;
                    }
                }
            }
        }
        Ok((z, dz))
    }
}

/// Residual of the commutator identity for [Z, Q0] on analytic fields:
///
///   [Ω₀ᵢ, Q0] = [Ωᵢⱼ, Q0] = 0,  [S, Q0] = −2Q0,
///   [L, Q0](φ,ψ) = −(2/r)Σᵢ∂̄ᵢφ∂̄ᵢψ,  [L̲, Q0](φ,ψ) = +(2/r)Σᵢ∂̄ᵢφ∂̄ᵢψ,
///
/// where [Z,Q0](φ,ψ) = Z(Q0(φ,ψ)) − Q0(Zφ,ψ) − Q0(φ,Zψ). All derivatives are
/// exact (supplied by the analytic fields), so the residual isolates the
/// identity itself.
pub fn commutator_check(
    z: KlainermanField,
    id: NullFormId,
    phi: &dyn AnalyticField,
    psi: &dyn AnalyticField,
    n: usize,
    x: &Vect,
) -> Result<f64> {
    if id != NullFormId::Q0 {
        return Err(MembraneError::Config(
            "commutator catalogue covers Q0 only".into(),
        ));
    }
    let d = n + 1;
    let chart = Chart::Cartesian { n };
    let (zv, dz) = z.vector(x, d)?;
    let eta = chart.eta_upper(0.0);

    let gphi = phi.grad(x);
    let gpsi = psi.grad(x);
    let hphi = phi.hess(x);
    let hpsi = psi.hess(x);

    // Z(Q0): ∂_αQ0 = η^{μν}(∂_α∂_μφ∂_νψ + ∂_μφ∂_α∂_νψ).
    let mut zq = 0.0;
    for a in 0..d {
        let mut dq = 0.0;
        for m in 0..d {
            for nu in 0..d {
                dq += eta[m][nu] * (hphi[a][m] * gpsi[nu] + gphi[m] * hpsi[a][nu]);
            }
        }
        zq += zv[a] * dq;
    }

    // Gradient of Zφ: ∂_α(Z^μ∂_μφ) = ∂_αZ^μ∂_μφ + Z^μ∂_α∂_μφ.
    let grad_of = |g: &Vect, h: &Mat| -> Vect {
        let mut out = [0.0; MAX_DIM];
        for a in 0..d {
            for m in 0..d {
                out[a] += dz[a][m] * g[m] + zv[m] * h[a][m];
            }
        }
        out
    };
    let gzphi = grad_of(&gphi, &hphi);
    let gzpsi = grad_of(&gpsi, &hpsi);

    let commutator = zq
        - eval_nullform(NullFormId::Q0, &gzphi, &gpsi, chart)
        - eval_nullform(NullFormId::Q0, &gphi, &gzpsi, chart);

    let expected = match z {
        KlainermanField::Omega0(_) | KlainermanField::Omega(_, _) => 0.0,
        KlainermanField::S => -2.0 * eval_nullform(NullFormId::Q0, &gphi, &gpsi, chart),
        KlainermanField::L | KlainermanField::Lbar => {
            let mut r2 = 0.0;
            for i in 1..d {
                r2 += x[i] * x[i];
            }
            let r = r2.sqrt();
            if r < 1e-8 {
                return Err(MembraneError::OriginSingular(r));
            }
            let mut omega = [0.0; MAX_DIM];
            for i in 1..d {
                omega[i] = x[i] / r;
            }
            let mut rad_phi = 0.0;
            let mut rad_psi = 0.0;
            for i in 1..d {
                rad_phi += omega[i] * gphi[i];
                rad_psi += omega[i] * gpsi[i];
            }
            let mut ang = 0.0;
            for i in 1..d {
                ang += (gphi[i] - omega[i] * rad_phi) * (gpsi[i] - omega[i] * rad_psi);
            }
            let sign = if matches!(z, KlainermanField::L) {
                -1.0
            } else {
                1.0
            };
            sign * 2.0 / r * ang
        }
    };

    Ok((commutator - expected).abs())
}

fn cartesianize(jet: &SpacetimeJet) -> Result<SpacetimeJet> {
    match jet.chart {
        Chart::Cartesian { .. } => Ok(jet.clone()),
        _ => jet.to_cartesian(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{PlaneWave, Poly, WaveShape};
    use crate::geometry::wave_operator_coord;
    use crate::rng::SplitMix64;

    #[test]
    fn q0_vanishes_on_null_gradients() {
        let mut rng = SplitMix64::new(0x9d);
        let chart = Chart::Cartesian { n: 3 };
        for _ in 0..10_000 {
            // Random null covector ξ = (|k|, k).
            let k = [rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)];
            let norm = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
            let xi = [norm, k[0], k[1], k[2]];
            let q = eval_nullform(NullFormId::Q0, &xi, &xi, chart);
            assert!(q.abs() < 1e-13 * (1.0 + norm * norm));
        }
    }

    #[test]
    fn q0_and_qab_base_cases() {
        let chart = Chart::Cartesian { n: 1 };
        let e0 = [1.0, 0.0, 0.0, 0.0];
        let e1 = [0.0, 1.0, 0.0, 0.0];
        assert_eq!(eval_nullform(NullFormId::Q0, &e0, &e0, chart), -1.0);
        assert_eq!(eval_nullform(NullFormId::Qab(0, 1), &e0, &e1, chart), 1.0);
        assert!(NullFormId::Qab(1, 1).validate(2).is_err());
    }

    #[test]
    fn nonlinearity_matches_metric_contraction() {
        // □φ − Q(φ,Q(φ,φ))/(1+Q) = g^{αβ}∂_α∂_βφ.
        let mut rng = SplitMix64::new(0x51);
        for _ in 0..200 {
            let n = 3;
            let p = Poly::random(&mut rng, n + 1, 0.2);
            let x = [rng.uniform(0.5, 1.5), rng.uniform(0.5, 1.5), 0.3, -0.2];
            let jet = p.jet_at(n, x, 2);
            let m = match metric_from_jet(&jet) {
                Ok(m) => m,
                Err(_) => continue, // skip the rare degenerate draw
            };
            let d2 = jet.d2().unwrap();
            let mut box_flat = 0.0;
            let mut box_g = 0.0;
            let eta = jet.chart.eta_upper(0.0);
            for a in 0..=n {
                for b in 0..=n {
                    box_flat += eta[a][b] * d2[a][b];
                    box_g += m.upper[a][b] * d2[a][b];
                }
            }
            let nl = rme_nonlinearity(&jet).unwrap();
            assert!(
                (box_flat - nl - box_g).abs() < 1e-12 * (1.0 + box_flat.abs()),
                "identity residual too large"
            );
        }
    }

    #[test]
    fn nonlinearity_vanishes_on_plane_null_waves() {
        let w = PlaneWave::null_x(0.4, WaveShape::Sin);
        let jet = w.jet_at(2, [0.7, 0.2, 0.5, 0.0], 2);
        assert!(rme_nonlinearity(&jet).unwrap().abs() < 1e-15);
        // And such a wave solves the full equation.
        assert!(wave_operator_coord(&jet, &jet).unwrap().abs() < 1e-13);
    }

    #[test]
    fn symmetric_decomposition_residuals() {
        let mut rng = SplitMix64::new(0xabc);
        let n = 3;
        // k = η reproduces □ψ.
        let psi = Poly::random(&mut rng, n + 1, 0.5);
        let x = [0.8, 0.9, 0.4, -0.3];
        let jet = psi.jet_at(n, x, 2);
        let eta_k = Chart::Cartesian { n }.eta_upper(0.0);
        assert!(symmetric_decompose(&eta_k, &jet).unwrap() < 1e-12);

        // Random symmetric tensors.
        for _ in 0..300 {
            let mut k = [[0.0; 4]; 4];
            for a in 0..=n {
                for b in a..=n {
                    k[a][b] = rng.uniform(-1.0, 1.0);
                    k[b][a] = k[a][b];
                }
            }
            let x = [
                rng.uniform(0.5, 2.0),
                rng.uniform(0.5, 1.5),
                rng.uniform(-1.0, 1.0),
                rng.uniform(-1.0, 1.0),
            ];
            let jet = psi.jet_at(n, x, 2);
            assert!(symmetric_decompose(&k, &jet).unwrap() < 1e-10);
        }
    }

    #[test]
    fn origin_is_guarded() {
        let psi = Poly::new(vec![(1.0, [2, 0, 0, 0])]);
        let jet = psi.jet_at(3, [1.0, 0.0, 0.0, 0.0], 2);
        assert!(matches!(
            symmetric_decompose(&[[0.0; 4]; 4], &jet),
            Err(MembraneError::OriginSingular(_))
        ));
    }

    #[test]
    fn double_nullform_expansion_residuals() {
        let mut rng = SplitMix64::new(0x77);
        let n = 3;
        for _ in 0..300 {
            let phi = Poly::random(&mut rng, n + 1, 0.4);
            let psi = Poly::random(&mut rng, n + 1, 0.4);
            let chi = Poly::random(&mut rng, n + 1, 0.4);
            let x = [
                rng.uniform(0.5, 2.0),
                rng.uniform(0.5, 1.5),
                rng.uniform(-1.0, 1.0),
                rng.uniform(-0.8, 0.8),
            ];
            let ex = double_nullform_expand(
                &phi.jet_at(n, x, 2),
                &psi.jet_at(n, x, 2),
                &chi.jet_at(n, x, 2),
            )
            .unwrap();
            assert!(ex.residual < 1e-10, "residual {:.3e}", ex.residual);
        }
    }

    #[test]
    fn double_nullform_on_null_triple_vanishes() {
        // Common null gradient direction: S^{αβ}(φ,ψ)∂²χ ∝ (η(ξ,ξ))² = 0.
        let f = PlaneWave::null_x(0.5, WaveShape::Sin);
        let g = PlaneWave::null_x(0.3, WaveShape::Gauss);
        let h = PlaneWave::null_x(0.2, WaveShape::Sin);
        let x = [0.6, 1.1, 0.0, 0.0];
        let n = 2;
        let ex =
            double_nullform_expand(&f.jet_at(n, x, 2), &g.jet_at(n, x, 2), &h.jet_at(n, x, 2))
                .unwrap();
        assert!(ex.value.abs() < 1e-14);
    }

    #[test]
    fn radial_fields_have_no_j12() {
        // φ, ψ, χ functions of (t, r) only → every ∂̄ factor vanishes.
        let mk = |c: f64| PlaneWave {
            amp: c,
            k: [1.0, 0.0, 0.0, 0.0],
            phase: 0.3,
            shape: WaveShape::Gauss,
        };
        // A t-only field is radial; also use r²-type polynomial x²+y²+z².
        let r2 = Poly::new(vec![
            (1.0, [0, 2, 0, 0]),
            (1.0, [0, 0, 2, 0]),
            (1.0, [0, 0, 0, 2]),
        ]);
        let x = [0.9, 0.7, 0.5, -0.2];
        let n = 3;
        let ex = double_nullform_expand(
            &mk(0.4).jet_at(n, x, 2),
            &r2.jet_at(n, x, 2),
            &r2.jet_at(n, x, 2),
        )
        .unwrap();
        assert_eq!(ex.j12, 0.0);
        assert!(ex.residual < 1e-12);
    }

    #[test]
    fn signature_and_classification() {
        use FrameDir::*;
        let m = FrameMonomial::first_order(&[(L, "phi"), (Lbar, "psi")]);
        assert_eq!(signature_of(&m), 0);
        assert_eq!(classify(&m), Admissibility::NullAdmissible);

        let bad = FrameMonomial::first_order(&[(Lbar, "phi"), (Lbar, "psi")]);
        assert_eq!(signature_of(&bad), -2);
        assert_eq!(classify(&bad), Admissibility::Forbidden);

        let ang = FrameMonomial::first_order(&[(Angular, "phi"), (Angular, "psi")]);
        assert_eq!(signature_of(&ang), 0);
        assert_eq!(classify(&ang), Admissibility::NullAdmissible);

        // L̲φ·L̲ψ·L²χ from the radial block: signature 0, admissible.
        let cubic = FrameMonomial::new(vec![
            (vec![Lbar], "phi"),
            (vec![Lbar], "psi"),
            (vec![L, L], "chi"),
        ]);
        assert_eq!(signature_of(&cubic), 0);
        assert_eq!(classify(&cubic), Admissibility::NullAdmissible);
    }

    #[test]
    fn commutators_match_catalogue() {
        let mut rng = SplitMix64::new(0x3e);
        let n = 3;
        for _ in 0..50 {
            let phi = Poly::random(&mut rng, n + 1, 0.6);
            let psi = Poly::random(&mut rng, n + 1, 0.6);
            let x = [
                rng.uniform(0.5, 2.0),
                rng.uniform(0.5, 1.5),
                rng.uniform(-1.0, 1.0),
                rng.uniform(-0.8, 0.8),
            ];
            for z in [
                KlainermanField::Omega0(1),
                KlainermanField::Omega0(2),
                KlainermanField::Omega(1, 2),
                KlainermanField::Omega(2, 3),
                KlainermanField::S,
                KlainermanField::L,
                KlainermanField::Lbar,
            ] {
                let res = commutator_check(z, NullFormId::Q0, &phi, &psi, n, &x).unwrap();
                assert!(res < 1e-10, "{z:?} residual {res:.3e}");
            }
        }
    }

    #[test]
    fn radial_fields_kill_the_l_commutator() {
        // [L, Q0] on radial fields: the angular correction term is zero.
        let r2 = Poly::new(vec![
            (1.0, [0, 2, 0, 0]),
            (1.0, [0, 0, 2, 0]),
            (1.0, [0, 0, 0, 2]),
        ]);
        let t2 = Poly::new(vec![(0.5, [2, 0, 0, 0])]);
        let x = [1.2, 0.8, 0.3, 0.4];
        let res = commutator_check(KlainermanField::L, NullFormId::Q0, &r2, &t2, 3, &x).unwrap();
        assert!(res < 1e-12);
    }
}
