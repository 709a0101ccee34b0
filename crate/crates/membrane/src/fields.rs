//! Closed-form test fields with hand-coded exact derivatives.
//!
//! The identity suites need to separate algebra errors from discretization
//! errors, so they evaluate both sides of each identity on fields whose
//! derivatives are exact: multivariate polynomials and plane-wave profiles.

use crate::geometry::{Chart, SpacetimeJet, Mat, Ten3, Vect, MAX_DIM};
use crate::rng::SplitMix64;

pub trait AnalyticField {
    fn value(&self, x: &Vect) -> f64;
    fn grad(&self, x: &Vect) -> Vect;
    fn hess(&self, x: &Vect) -> Mat;
    fn third(&self, x: &Vect) -> Ten3;

    /// Exact jet at an event in the Cartesian chart.
    fn jet_at(&self, n: usize, coords: Vect, order: usize) -> SpacetimeJet {
        let chart = Chart::Cartesian { n };
        match order {
            1 => SpacetimeJet::order1(chart, coords, self.value(&coords), self.grad(&coords)),
            2 => SpacetimeJet::order2(
                chart,
                coords,
                self.value(&coords),
                self.grad(&coords),
                self.hess(&coords),
            ),
            _ => SpacetimeJet::order3(
                chart,
                coords,
                self.value(&coords),
                self.grad(&coords),
                self.hess(&coords),
                self.third(&coords),
            ),
        }
    }
}

/// Multivariate polynomial Σ c·t^{p₀}x₁^{p₁}x₂^{p₂}x₃^{p₃}.
#[derive(Clone, Debug)]
pub struct Poly {
    pub terms: Vec<(f64, [u32; MAX_DIM])>,
}

impl Poly {
    pub fn new(terms: Vec<(f64, [u32; MAX_DIM])>) -> Self {
        Self { terms }
    }

    /// Random polynomial of total degree ≤ 3 in the first `dim` coordinates.
    pub fn random(rng: &mut SplitMix64, dim: usize, scale: f64) -> Self {
        let mut terms = Vec::new();
        // All exponent tuples with total degree ≤ 3.
        let push = |p: [u32; MAX_DIM], rng: &mut SplitMix64, terms: &mut Vec<(f64, [u32; 4])>| {
            terms.push((rng.uniform(-scale, scale), p));
        };
        for a in 0..=3u32 {
            for b in 0..=(3 - a) {
                for c in 0..=(3 - a - b) {
                    for e in 0..=(3 - a - b - c) {
                        let p = [a, b, c, e];
                        if p.iter().skip(dim).all(|&x| x == 0) {
                            push(p, rng, &mut terms);
                        }
                    }
                }
            }
        }
        Self { terms }
    }

    fn eval_term(coef: f64, pows: &[u32; MAX_DIM], x: &Vect, d: &[u32; MAX_DIM]) -> f64 {
        let mut v = coef;
        for a in 0..MAX_DIM {
            let (p, k) = (pows[a], d[a]);
            if k > p {
                return 0.0;
            }
            // d^k/dx^k x^p = p!/(p−k)! x^{p−k}
            let mut fall = 1.0;
            for j in 0..k {
                fall *= (p - j) as f64;
            }
            v *= fall * x[a].powi((p - k) as i32);
        }
        v
    }

    fn derive(&self, x: &Vect, d: &[u32; MAX_DIM]) -> f64 {
        self.terms
            .iter()
            .map(|(c, p)| Self::eval_term(*c, p, x, d))
            .sum()
    }
}

impl AnalyticField for Poly {
    fn value(&self, x: &Vect) -> f64 {
        self.derive(x, &[0; MAX_DIM])
    }

    fn grad(&self, x: &Vect) -> Vect {
        let mut g = [0.0; MAX_DIM];
        for a in 0..MAX_DIM {
            let mut d = [0; MAX_DIM];
            d[a] = 1;
            g[a] = self.derive(x, &d);
        }
        g
    }

    fn hess(&self, x: &Vect) -> Mat {
        let mut h = [[0.0; MAX_DIM]; MAX_DIM];
        for a in 0..MAX_DIM {
            for b in a..MAX_DIM {
                let mut d = [0; MAX_DIM];
                d[a] += 1;
                d[b] += 1;
                h[a][b] = self.derive(x, &d);
                h[b][a] = h[a][b];
            }
        }
        h
    }

    fn third(&self, x: &Vect) -> Ten3 {
        let mut t = [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM];
        for a in 0..MAX_DIM {
            for b in 0..MAX_DIM {
                for c in 0..MAX_DIM {
                    let mut d = [0; MAX_DIM];
                    d[a] += 1;
                    d[b] += 1;
                    d[c] += 1;
                    t[a][b][c] = self.derive(x, &d);
                }
            }
        }
        t
    }
}

/// Profile shape for plane waves φ = A·f(k·x + c).
#[derive(Clone, Copy, Debug)]
pub enum WaveShape {
    Sin,
    /// exp(−s²)
    Gauss,
}

impl WaveShape {
    /// (f, f′, f″, f‴) at s.
    fn jet(&self, s: f64) -> (f64, f64, f64, f64) {
        match self {
            WaveShape::Sin => (s.sin(), s.cos(), -s.sin(), -s.cos()),
            WaveShape::Gauss => {
                let e = (-s * s).exp();
                (
                    e,
                    -2.0 * s * e,
                    (4.0 * s * s - 2.0) * e,
                    (12.0 * s - 8.0 * s * s * s) * e,
                )
            }
        }
    }
}

/// Plane wave φ(x) = amp·f(k·x + phase) with covector k.
#[derive(Clone, Debug)]
pub struct PlaneWave {
    pub amp: f64,
    pub k: Vect,
    pub phase: f64,
    pub shape: WaveShape,
}

impl PlaneWave {
    /// A null travelling profile f(t − x) with unit direction along x¹.
    pub fn null_x(amp: f64, shape: WaveShape) -> Self {
        Self {
            amp,
            k: [1.0, -1.0, 0.0, 0.0],
            phase: 0.0,
            shape,
        }
    }

    fn s(&self, x: &Vect) -> f64 {
        let mut s = self.phase;
        for a in 0..MAX_DIM {
            s += self.k[a] * x[a];
        }
        s
    }
}

impl AnalyticField for PlaneWave {
    fn value(&self, x: &Vect) -> f64 {
        self.amp * self.shape.jet(self.s(x)).0
    }

    fn grad(&self, x: &Vect) -> Vect {
        let f1 = self.amp * self.shape.jet(self.s(x)).1;
        let mut g = [0.0; MAX_DIM];
        for a in 0..MAX_DIM {
            g[a] = f1 * self.k[a];
        }
        g
    }

    fn hess(&self, x: &Vect) -> Mat {
        let f2 = self.amp * self.shape.jet(self.s(x)).2;
        let mut h = [[0.0; MAX_DIM]; MAX_DIM];
        for a in 0..MAX_DIM {
            for b in 0..MAX_DIM {
                h[a][b] = f2 * self.k[a] * self.k[b];
            }
        }
        h
    }

    fn third(&self, x: &Vect) -> Ten3 {
        let f3 = self.amp * self.shape.jet(self.s(x)).3;
        let mut t = [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM];
        for a in 0..MAX_DIM {
            for b in 0..MAX_DIM {
                for c in 0..MAX_DIM {
                    t[a][b][c] = f3 * self.k[a] * self.k[b] * self.k[c];
                }
            }
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_grad<F: AnalyticField>(f: &F, x: &Vect, a: usize) -> f64 {
        let h = 1e-5;
        let mut xp = *x;
        let mut xm = *x;
        xp[a] += h;
        xm[a] -= h;
        (f.value(&xp) - f.value(&xm)) / (2.0 * h)
    }

    #[test]
    fn poly_derivatives_match_finite_differences() {
        let mut rng = SplitMix64::new(3);
        let p = Poly::random(&mut rng, 4, 1.0);
        let x = [0.3, -0.2, 0.5, 0.1];
        for a in 0..4 {
            assert!((p.grad(&x)[a] - fd_grad(&p, &x, a)).abs() < 1e-8);
        }
    }

    #[test]
    fn plane_wave_derivatives_match_finite_differences() {
        let w = PlaneWave {
            amp: 0.7,
            k: [1.0, -0.3, 0.4, 0.0],
            phase: 0.2,
            shape: WaveShape::Gauss,
        };
        let x = [0.5, 0.2, -0.1, 0.0];
        for a in 0..3 {
            assert!((w.grad(&x)[a] - fd_grad(&w, &x, a)).abs() < 1e-8);
        }
        // third derivative of the profile: FD of the Hessian diagonal
        let h = 1e-5;
        let mut xp = x;
        let mut xm = x;
        xp[0] += h;
        xm[0] -= h;
        let fd3 = (w.hess(&xp)[0][0] - w.hess(&xm)[0][0]) / (2.0 * h);
        assert!((w.third(&x)[0][0][0] - fd3).abs() < 1e-6);
    }
}
