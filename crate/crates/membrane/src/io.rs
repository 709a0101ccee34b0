//! Configuration, checkpoint persistence, and deterministic report output.
//!
//! Configuration is TOML with exhaustive validation: unknown keys are errors
//! (a typo in an exponent threshold must not silently relax a verdict), and
//! every rejection names the offending field. Checkpoints are a fixed binary
//! layout — magic "MEMB", format version, mode/n/δ/grid header, then the
//! (φ, ψ) arrays as little-endian f64 and a trailing CRC-32 — and round-trip
//! bit-exactly. Reports are CSV (one table per file, column names in a
//! comment header) and JSON; identical inputs produce byte-identical files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{MembraneError, Result};
use crate::solver::{FieldState, GridSpec, Mode};

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

fn default_n() -> usize {
    3
}

fn default_cfl() -> f64 {
    0.4
}

fn default_t_end() -> f64 {
    40.0
}

fn default_c() -> f64 {
    1.0
}

fn default_family() -> String {
    "bump".into()
}

fn default_source() -> String {
    "rrme".into()
}

fn default_dir() -> String {
    "out".into()
}

fn default_true() -> bool {
    true
}

fn default_multipliers() -> Vec<String> {
    vec!["ltilde".into()]
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_points: usize,
    /// Outer radius; omitted means the causal policy r_max = t_end + 2.
    #[serde(default)]
    pub r_max: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    /// Steps between checkpoints; 0 disables intermediate checkpoints.
    #[serde(default)]
    pub checkpoint_stride: u64,
    /// Kreiss–Oliger dissipation strength σ; 0 disables.
    #[serde(default)]
    pub dissipation: f64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            cfl: default_cfl(),
            t_end: default_t_end(),
            checkpoint_stride: 0,
            dissipation: 0.0,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    /// "bump" or "poly".
    #[serde(default = "default_family")]
    pub family: String,
    /// Polynomial order for the "poly" family.
    #[serde(default)]
    pub p: Option<u32>,
    #[serde(default = "default_c")]
    pub c0: f64,
    #[serde(default = "default_c")]
    pub c1: f64,
    /// Data construction path: "direct" or "rrme".
    #[serde(default = "default_source")]
    pub source: String,
    /// Grid points for the rescaled solve (defaults to the main grid size).
    #[serde(default)]
    pub rrme_points: Option<usize>,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            family: default_family(),
            p: None,
            c0: default_c(),
            c1: default_c(),
            source: default_source(),
            rrme_points: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Outgoing cones C_u to track.
    #[serde(default)]
    pub cones: Vec<f64>,
    /// u̲-stations for energy snapshots and decay tables.
    #[serde(default)]
    pub stations: Vec<f64>,
    /// Multipliers: "2dt", "ltilde", "lbartilde".
    #[serde(default = "default_multipliers")]
    pub multipliers: Vec<String>,
    /// Commuting order for E²_{≤k} (0 or 1).
    #[serde(default)]
    pub orders: usize,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            cones: Vec::new(),
            stations: Vec::new(),
            multipliers: default_multipliers(),
            orders: 1,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
    /// Refuse wall-clock or otherwise nondeterministic content in reports.
    #[serde(default = "default_true")]
    pub deterministic: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            deterministic: true,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// "planar", "radial", or "rescaled".
    pub mode: String,
    #[serde(default = "default_n")]
    pub n: usize,
    /// Single pulse width; use `deltas` for sweeps.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub deltas: Vec<f64>,
    pub grid: GridConfig,
    #[serde(default)]
    pub evolve: EvolveConfig,
    #[serde(default)]
    pub profile: ProfileConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(MembraneError::Config(msg));
        if !matches!(self.mode.as_str(), "planar" | "radial" | "rescaled") {
            return err(format!(
                "mode: '{}' is not one of planar, radial, rescaled",
                self.mode
            ));
        }
        if !(1..=3).contains(&self.n) {
            return err(format!("n: {} outside 1..=3", self.n));
        }
        for (name, d) in self
            .delta
            .iter()
            .map(|d| ("delta", *d))
            .chain(self.deltas.iter().map(|d| ("deltas", *d)))
        {
            if !(d > 0.0 && d <= 0.25) {
                return err(format!("{name}: {d} outside (0, 0.25]"));
            }
        }
        if self.delta.is_none() && self.deltas.is_empty() {
            return err("delta: missing (set delta or deltas)".into());
        }
        if self.grid.n_points < 16 {
            return err(format!("grid.n_points: {} < 16", self.grid.n_points));
        }
        if let Some(r) = self.grid.r_max {
            if !(r > 0.0) {
                return err(format!("grid.r_max: {r} must be positive"));
            }
        }
        if !(self.evolve.cfl > 0.0 && self.evolve.cfl <= 1.0) {
            return err(format!("evolve.cfl: {} outside (0, 1]", self.evolve.cfl));
        }
        if !(0.0..=1.0).contains(&self.evolve.dissipation) {
            return err(format!(
                "evolve.dissipation: {} outside [0, 1]",
                self.evolve.dissipation
            ));
        }
        if !(self.evolve.t_end > 1.0) {
            return err(format!(
                "evolve.t_end: {} must exceed the data time t = 1",
                self.evolve.t_end
            ));
        }
        if !matches!(self.profile.family.as_str(), "bump" | "poly") {
            return err(format!(
                "profile.family: '{}' is not one of bump, poly",
                self.profile.family
            ));
        }
        if self.profile.family == "poly" && self.profile.p.map_or(true, |p| p < 4) {
            return err("profile.p: poly family needs p >= 4".into());
        }
        if !matches!(self.profile.source.as_str(), "direct" | "rrme") {
            return err(format!(
                "profile.source: '{}' is not one of direct, rrme",
                self.profile.source
            ));
        }
        for m in &self.diagnostics.multipliers {
            if parse_multiplier(m).is_none() {
                return err(format!(
                    "diagnostics.multipliers: '{m}' is not one of 2dt, ltilde, lbartilde"
                ));
            }
        }
        if self.diagnostics.orders > 1 {
            return err(format!(
                "diagnostics.orders: {} (cone accumulators support 0 or 1)",
                self.diagnostics.orders
            ));
        }
        Ok(())
    }

    pub fn mode_enum(&self) -> Mode {
        match self.mode.as_str() {
            "planar" => Mode::Planar,
            "rescaled" => Mode::Rescaled { n: self.n },
            _ => Mode::Radial { n: self.n },
        }
    }

    /// Sweep list: `deltas` if given, else the single `delta`.
    pub fn delta_list(&self) -> Vec<f64> {
        if self.deltas.is_empty() {
            self.delta.into_iter().collect()
        } else {
            self.deltas.clone()
        }
    }

    /// Outer radius under the causal policy: everything interesting stays
    /// inside r ≤ t + 1, so r_max = t_end + 2 unless pinned explicitly.
    pub fn r_max(&self) -> f64 {
        self.grid.r_max.unwrap_or(self.evolve.t_end + 2.0)
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        match self.mode_enum() {
            Mode::Planar => GridSpec::new(Mode::Planar, -self.r_max(), self.r_max(), self.grid.n_points),
            m @ Mode::Radial { .. } => GridSpec::new(m, 0.0, self.r_max(), self.grid.n_points),
            m @ Mode::Rescaled { .. } => GridSpec::new(m, -0.5, 2.5, self.grid.n_points),
        }
    }
}

pub fn parse_multiplier(s: &str) -> Option<crate::diagnostics::Multiplier> {
    use crate::diagnostics::Multiplier::*;
    match s {
        "2dt" => Some(TwoDt),
        "ltilde" => Some(LTilde),
        "lbartilde" => Some(LBarTilde),
        _ => None,
    }
}

/// Parse and validate a TOML config file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    parse_config(&text)
}

/// Parse and validate a TOML config string.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text)
        .map_err(|e| MembraneError::Config(format!("config parse: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

// ---------------------------------------------------------------------------
// CRC-32 (IEEE, reflected) for checkpoint integrity
// ---------------------------------------------------------------------------

/// CRC-32 (IEEE 802.3 polynomial, reflected form) of a byte slice.
pub fn crc32(bytes: &[u8]) -> u32 {
    let mut crc: u32 = !0;
    for &b in bytes {
        crc ^= b as u32;
        for _ in 0..8 {
            let mask = (crc & 1).wrapping_neg();
            crc = (crc >> 1) ^ (0xedb8_8320 & mask);
        }
    }
    !crc
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

const MAGIC: &[u8; 4] = b"MEMB";
const VERSION: u32 = 1;

/// Serialize a field state into the checkpoint byte layout.
pub fn checkpoint_bytes(state: &FieldState) -> Vec<u8> {
    let g = &state.grid;
    let mut out = Vec::with_capacity(64 + 16 * g.n_points);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&g.mode.tag().to_le_bytes());
    out.extend_from_slice(&(g.mode.n() as u32).to_le_bytes());
    out.extend_from_slice(&state.delta.to_le_bytes());
    out.extend_from_slice(&g.x_min.to_le_bytes());
    out.extend_from_slice(&g.x_max.to_le_bytes());
    out.extend_from_slice(&(g.n_points as u64).to_le_bytes());
    out.extend_from_slice(&state.t.to_le_bytes());
    out.extend_from_slice(&state.step.to_le_bytes());
    for v in state.phi.iter().chain(state.psi.iter()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let crc = crc32(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(MembraneError::Checkpoint("truncated checkpoint".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Deserialize a checkpoint; the CRC and the format version are verified
/// before any field is trusted.
pub fn state_from_bytes(bytes: &[u8]) -> Result<FieldState> {
    if bytes.len() < 4 + 4 {
        return Err(MembraneError::Checkpoint("truncated checkpoint".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let computed = crc32(body);
    if stored != computed {
        return Err(MembraneError::Checkpoint(format!(
            "checksum mismatch: stored {stored:#010x}, computed {computed:#010x}"
        )));
    }
    let mut r = Reader { bytes: body, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(MembraneError::Checkpoint("bad magic (not MEMB)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(MembraneError::Checkpoint(format!(
            "unsupported format version {version}, this build reads {VERSION}"
        )));
    }
    let tag = r.u32()?;
    let n = r.u32()? as usize;
    let delta = r.f64()?;
    let x_min = r.f64()?;
    let x_max = r.f64()?;
    let n_points = r.u64()? as usize;
    let t = r.f64()?;
    let step = r.u64()?;
    let mode = match tag {
        0 => Mode::Planar,
        1 => Mode::Radial { n },
        2 => Mode::Rescaled { n },
        _ => {
            return Err(MembraneError::Checkpoint(format!(
                "unknown mode tag {tag}"
            )))
        }
    };
    let grid = GridSpec::new(mode, x_min, x_max, n_points)
        .map_err(|e| MembraneError::Checkpoint(format!("invalid stored grid: {e}")))?;
    let expect = 16 * n_points;
    if body.len() - r.pos != expect {
        return Err(MembraneError::Checkpoint(format!(
            "payload holds {} bytes, header promises {expect}",
            body.len() - r.pos
        )));
    }
    let mut read_arr = |len: usize| -> Result<Vec<f64>> {
        (0..len).map(|_| r.f64()).collect()
    };
    let phi = read_arr(n_points)?;
    let psi = read_arr(n_points)?;
    let mut state = FieldState::new(grid, t, phi, psi, delta)?;
    state.step = step;
    Ok(state)
}

pub fn write_checkpoint(path: &Path, state: &FieldState) -> Result<()> {
    fs::write(path, checkpoint_bytes(state))?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<FieldState> {
    state_from_bytes(&fs::read(path)?)
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Render a float for report files: shortest representation that round-trips,
/// which is deterministic across runs and platforms.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == v.trunc() && a < 1e15 {
        format!("{v:.1}")
    } else if a != 0.0 && (a < 1e-4 || a >= 1e15) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Write a CSV table of preformatted cells with `# `-prefixed comment lines
/// followed by a column header.
pub fn write_table(
    path: &Path,
    comments: &[&str],
    columns: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    let mut out = String::new();
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Numeric CSV table; numbers use the deterministic shortest rendering.
pub fn write_csv(
    path: &Path,
    comments: &[&str],
    columns: &[&str],
    rows: &[Vec<f64>],
) -> Result<()> {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|row| row.iter().map(|&v| fmt_f64(v)).collect())
        .collect();
    write_table(path, comments, columns, &rows)
}

/// Write a JSON value with a stable key order and a trailing newline.
pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| MembraneError::Config(format!("json encode: {e}")))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
