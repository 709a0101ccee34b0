//! Convergence study on an exact solution.
//!
//! A planar wave φ = f(t − x) is an exact solution of the membrane equation
//! (its gradient is null, so the nonlinearity vanishes identically). Evolving
//! it and comparing against the shifted profile measures the full scheme
//! error; Richardson quotients over a grid ladder recover the design order 4.
//!
//! Run with `cargo run --release --example travelling_wave`.

use membrane::fields::{AnalyticField, PlaneWave, WaveShape};
use membrane::solver::{evolve, FieldState, GridSpec, Mode, NoObserver};
use membrane::Result;

/// Sample φ = f(t − x) and ψ = ∂ₜφ onto a planar grid at time t.
fn sample(grid: &GridSpec, t: f64, amp: f64) -> Result<FieldState> {
    let wave = PlaneWave {
        amp,
        k: [1.0, -1.0, 0.0, 0.0],
        phase: 0.0,
        shape: WaveShape::Gauss,
    };
    let mut phi = vec![0.0; grid.n_points];
    let mut psi = vec![0.0; grid.n_points];
    for i in 0..grid.n_points {
        let x = [t, grid.x(i), 0.0, 0.0];
        phi[i] = wave.value(&x);
        psi[i] = wave.grad(&x)[0];
    }
    FieldState::new(grid.clone(), t, phi, psi, 0.1)
}

fn main() -> Result<()> {
    let amp = 0.3;
    let t_end = 2.0;
    println!("planar null wave, amplitude {amp}, t ∈ [0, {t_end}]");
    println!("{:>8} {:>14} {:>10}", "points", "sup error", "order");

    let mut prev: Option<f64> = None;
    for &np in &[201usize, 401, 801, 1601] {
        let grid = GridSpec::new(Mode::Planar, -10.0, 10.0, np)?;
        let state = sample(&grid, 0.0, amp)?;
        let out = evolve(state, t_end, 0.4, &mut NoObserver)?;
        let exact = sample(&grid, t_end, amp)?;
        let err = out
            .phi
            .iter()
            .zip(&exact.phi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        match prev {
            None => println!("{np:>8} {err:>14.3e} {:>10}", "-"),
            Some(p) => println!("{np:>8} {err:>14.3e} {:>10.2}", (p / err).log2()),
        }
        prev = Some(err);
    }
    Ok(())
}
