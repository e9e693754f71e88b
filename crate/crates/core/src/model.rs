//! Channel specifications and file ingestion.
//!
//! Four spec kinds are supported, all as small JSON documents:
//!
//! - `product`:  `{"d":10,"sigma2":[..],"gamma":13.0,"lambda":8.0}`
//! - `spectral`: `{"psd":{"grid":[..]},"gamma":..,"lambda":..}` or
//!   `{"psd":{"autocorr":[..]},..}`
//! - `discrete`: `{"X":2,"S":2,"T":2,"Y":2,"W":[[[[..]..]..]..],"P_T":[..],
//!   "phi":[..],"l":[..],"gamma":..,"lambda":..}` with `W` indexed `[t][x][s][y]`
//! - `fading`:   `{"theta":[..],"P_T":[..],"sigma2":..,"gamma":..,"lambda":..}`
//!
//! Every type is validated on load and immutable afterwards; instances are
//! safe to share across threads.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Tolerance for pmf normalization checks.
pub const PMF_TOL: f64 = 1e-12;

/// Input power/cost budget and state power/cost budget.
///
/// Parsing rejects non-positive budgets; library callers may still construct
/// degenerate values (e.g. `lambda = 0` for a jammer-free channel) directly,
/// and the allocation routines treat them by convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constraints {
    pub gamma: f64,
    pub lambda: f64,
}

impl Constraints {
    pub fn new(gamma: f64, lambda: f64) -> Result<Self> {
        let c = Constraints { gamma, lambda };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::validation("gamma", "must be finite and > 0"));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::validation("lambda", "must be finite and > 0"));
        }
        Ok(())
    }
}

/// `d` parallel Gaussian channels with per-channel noise variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelGaussianSpec {
    pub d: usize,
    pub sigma2: Vec<f64>,
    #[serde(flatten)]
    pub constraints: Constraints,
}

impl ParallelGaussianSpec {
    pub fn new(sigma2: Vec<f64>, gamma: f64, lambda: f64) -> Result<Self> {
        let spec = ParallelGaussianSpec {
            d: sigma2.len(),
            sigma2,
            constraints: Constraints { gamma, lambda },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.constraints.validate()?;
        if self.d == 0 {
            return Err(Error::validation("d", "must be >= 1"));
        }
        if self.d != self.sigma2.len() {
            return Err(Error::validation(
                "sigma2",
                format!("length {} does not match d = {}", self.sigma2.len(), self.d),
            ));
        }
        for (j, &s2) in self.sigma2.iter().enumerate() {
            if !(s2.is_finite() && s2 > 0.0) {
                return Err(Error::validation(
                    "sigma2",
                    format!("entry {j} = {s2} must be finite and > 0"),
                ));
            }
        }
        Ok(())
    }
}

/// Power spectral density representation.
///
/// `Grid` holds samples on the uniform midpoint grid
/// `omega_k = -pi + (2k+1) pi / M`, `k = 0..M-1`, which is symmetric under
/// `omega <-> -omega`. `Autocorr` holds coefficients `r(0..L)` of the cosine
/// series `Psi(omega) = r(0) + 2 sum_l r(l) cos(l omega)`, evaluated
/// analytically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Psd {
    #[serde(rename = "grid")]
    Grid(Vec<f64>),
    #[serde(rename = "autocorr")]
    Autocorr(Vec<f64>),
}

impl Psd {
    /// Evaluate the density at an angular frequency in `[-pi, pi]`.
    pub fn eval(&self, omega: f64) -> f64 {
        match self {
            Psd::Grid(values) => {
                let m = values.len();
                let idx = ((omega + std::f64::consts::PI) * m as f64
                    / (2.0 * std::f64::consts::PI)
                    - 0.5)
                    .round();
                let idx = idx.clamp(0.0, (m - 1) as f64) as usize;
                values[idx]
            }
            Psd::Autocorr(r) => {
                let mut v = r[0];
                for (l, &rl) in r.iter().enumerate().skip(1) {
                    v += 2.0 * rl * (l as f64 * omega).cos();
                }
                v
            }
        }
    }
}

/// Stationary colored-noise channel described by its power spectral density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSpec {
    pub psd: Psd,
    #[serde(flatten)]
    pub constraints: Constraints,
}

impl SpectralSpec {
    pub fn new(psd: Psd, gamma: f64, lambda: f64) -> Result<Self> {
        let spec = SpectralSpec {
            psd,
            constraints: Constraints { gamma, lambda },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.constraints.validate()?;
        match &self.psd {
            Psd::Grid(values) => {
                if values.is_empty() {
                    return Err(Error::validation("psd.grid", "must be nonempty"));
                }
                let m = values.len();
                for (k, &v) in values.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(Error::validation(
                            "psd.grid",
                            format!("sample {k} = {v} is not finite"),
                        ));
                    }
                    if v < 0.0 {
                        return Err(Error::validation(
                            "psd.grid",
                            format!("sample {k} = {v} is negative"),
                        ));
                    }
                    let mirror = values[m - 1 - k];
                    if (v - mirror).abs() > 1e-9 {
                        return Err(Error::validation(
                            "psd.grid",
                            format!("samples {k} and {} break omega <-> -omega symmetry", m - 1 - k),
                        ));
                    }
                }
            }
            Psd::Autocorr(r) => {
                if r.is_empty() {
                    return Err(Error::validation("psd.autocorr", "must be nonempty"));
                }
                if r.iter().any(|v| !v.is_finite()) {
                    return Err(Error::validation("psd.autocorr", "coefficients must be finite"));
                }
                // The cosine series must stay nonnegative; probe a fine grid.
                let probe = 4096.max(8 * r.len());
                for k in 0..probe {
                    let omega = -std::f64::consts::PI
                        + (2.0 * k as f64 + 1.0) * std::f64::consts::PI / probe as f64;
                    let v = self.psd.eval(omega);
                    if v < -PMF_TOL {
                        return Err(Error::validation(
                            "psd.autocorr",
                            format!("series is negative ({v:e}) at omega = {omega:.6}"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Finite-alphabet AVC with fixed parameters.
///
/// `kernel[t][x][s][y]` is the conditional pmf `W(y|x,s,t)`; `p_t` is the type
/// of the parameter sequence; `phi` and `l` are the per-symbol input and state
/// cost functions, each attaining 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteAvcSpec {
    #[serde(rename = "X")]
    pub nx: usize,
    #[serde(rename = "S")]
    pub ns: usize,
    #[serde(rename = "T")]
    pub nt: usize,
    #[serde(rename = "Y")]
    pub ny: usize,
    #[serde(rename = "W")]
    pub kernel: Vec<Vec<Vec<Vec<f64>>>>,
    #[serde(rename = "P_T")]
    pub p_t: Vec<f64>,
    pub phi: Vec<f64>,
    pub l: Vec<f64>,
    #[serde(flatten)]
    pub constraints: Constraints,
}

fn check_pmf(field: &str, p: &[f64]) -> Result<()> {
    let mut sum = 0.0;
    for (i, &v) in p.iter().enumerate() {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::validation(
                field,
                format!("entry {i} = {v} must be finite and >= 0"),
            ));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > PMF_TOL {
        return Err(Error::validation(field, format!("sums to {sum}, not 1")));
    }
    Ok(())
}

fn check_cost(field: &str, c: &[f64]) -> Result<()> {
    if c.is_empty() {
        return Err(Error::validation(field, "must be nonempty"));
    }
    let mut min = f64::INFINITY;
    for (i, &v) in c.iter().enumerate() {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::validation(
                field,
                format!("entry {i} = {v} must be finite and >= 0"),
            ));
        }
        min = min.min(v);
    }
    if min != 0.0 {
        return Err(Error::validation(field, format!("minimum is {min}, must be exactly 0")));
    }
    Ok(())
}

impl DiscreteAvcSpec {
    pub fn w(&self, t: usize, x: usize, s: usize, y: usize) -> f64 {
        self.kernel[t][x][s][y]
    }

    /// Constant-parameter slice `W(y|x,s,t)` for a fixed `t`, indexed `[x][s][y]`.
    pub fn kernel_slice(&self, t: usize) -> &Vec<Vec<Vec<f64>>> {
        &self.kernel[t]
    }

    pub fn validate(&self) -> Result<()> {
        self.constraints.validate()?;
        for (name, n) in [("X", self.nx), ("S", self.ns), ("T", self.nt), ("Y", self.ny)] {
            if n == 0 {
                return Err(Error::validation(name, "alphabet must be nonempty"));
            }
        }
        if self.kernel.len() != self.nt {
            return Err(Error::validation("W", "outer length must equal T"));
        }
        for (t, slice) in self.kernel.iter().enumerate() {
            if slice.len() != self.nx {
                return Err(Error::validation("W", format!("W[{t}] length must equal X")));
            }
            for (x, rows) in slice.iter().enumerate() {
                if rows.len() != self.ns {
                    return Err(Error::validation("W", format!("W[{t}][{x}] length must equal S")));
                }
                for (s, row) in rows.iter().enumerate() {
                    if row.len() != self.ny {
                        return Err(Error::validation(
                            "W",
                            format!("W[{t}][{x}][{s}] length must equal Y"),
                        ));
                    }
                    let mut sum = 0.0;
                    for (y, &v) in row.iter().enumerate() {
                        if !(v.is_finite() && v >= 0.0) {
                            return Err(Error::validation(
                                "W",
                                format!("W[{t}][{x}][{s}][{y}] = {v} must be finite and >= 0"),
                            ));
                        }
                        sum += v;
                    }
                    if (sum - 1.0).abs() > PMF_TOL {
                        return Err(Error::validation(
                            "W",
                            format!("row (t={t}, x={x}, s={s}) sums to {sum}, not 1"),
                        ));
                    }
                }
            }
        }
        if self.p_t.len() != self.nt {
            return Err(Error::validation("P_T", "length must equal T"));
        }
        check_pmf("P_T", &self.p_t)?;
        if self.phi.len() != self.nx {
            return Err(Error::validation("phi", "length must equal X"));
        }
        check_cost("phi", &self.phi)?;
        if self.l.len() != self.ns {
            return Err(Error::validation("l", "length must equal S"));
        }
        check_cost("l", &self.l)?;
        Ok(())
    }
}

/// Scalar Gaussian channel with fixed fading coefficients on a finite support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FadingSpec {
    pub theta: Vec<f64>,
    #[serde(rename = "P_T")]
    pub p_t: Vec<f64>,
    pub sigma2: f64,
    #[serde(flatten)]
    pub constraints: Constraints,
}

impl FadingSpec {
    pub fn validate(&self) -> Result<()> {
        self.constraints.validate()?;
        if self.theta.is_empty() {
            return Err(Error::validation("theta", "must be nonempty"));
        }
        if self.theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("theta", "coefficients must be finite"));
        }
        if self.p_t.len() != self.theta.len() {
            return Err(Error::validation("P_T", "length must match theta"));
        }
        check_pmf("P_T", &self.p_t)?;
        if !(self.sigma2.is_finite() && self.sigma2 > 0.0) {
            return Err(Error::validation("sigma2", "must be finite and > 0"));
        }
        Ok(())
    }
}

/// Which spec schema to expect when loading a file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecKind {
    Product,
    Spectral,
    Discrete,
    Fading,
}

/// A validated channel spec of any kind.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ChannelSpec {
    Product(ParallelGaussianSpec),
    Discrete(DiscreteAvcSpec),
    Fading(FadingSpec),
    Spectral(SpectralSpec),
}

fn parse<T: for<'de> Deserialize<'de>>(json: &str) -> Result<T> {
    serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))
}

/// Parse and validate a spec from a JSON string.
pub fn spec_from_json(json: &str, kind: SpecKind) -> Result<ChannelSpec> {
    let spec = match kind {
        SpecKind::Product => {
            let s: ParallelGaussianSpec = parse(json)?;
            s.validate()?;
            ChannelSpec::Product(s)
        }
        SpecKind::Spectral => {
            let s: SpectralSpec = parse(json)?;
            s.validate()?;
            ChannelSpec::Spectral(s)
        }
        SpecKind::Discrete => {
            let s: DiscreteAvcSpec = parse(json)?;
            s.validate()?;
            ChannelSpec::Discrete(s)
        }
        SpecKind::Fading => {
            let s: FadingSpec = parse(json)?;
            s.validate()?;
            ChannelSpec::Fading(s)
        }
    };
    Ok(spec)
}

/// Load and validate a spec file.
pub fn load_spec(path: &Path, kind: SpecKind) -> Result<ChannelSpec> {
    let json = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    spec_from_json(&json, kind)
}

/// Serialize a spec back to JSON. `serde_json` prints f64 values with the
/// shortest round-tripping representation, so load/serialize/load is bit-exact.
pub fn spec_to_json(spec: &ChannelSpec) -> String {
    serde_json::to_string_pretty(spec).expect("specs always serialize")
}
