//! The IIR lowpass prototype and its polyphase factorization.
//!
//! The prototype has a numerator of exactly `2M` taps and a denominator that
//! is sparse in `z^{-2M}`:
//!
//! ```text
//!            a_0 + a_1 z^-1 + ... + a_{2M-1} z^-(2M-1)
//!   P(z) = ---------------------------------------------
//!           1 + b_1 z^-2M + b_2 z^-4M + ... + b_N z^-2MN
//! ```
//!
//! Every type-I polyphase component (with respect to `2M`) is therefore the
//! same all-pole filter `E(z) = 1 / (1 + sum b_m z^-m)` scaled by `a_k`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetry tolerance for filters built in-process.
pub const CONSTRUCTION_TOLERANCE: f64 = 1e-9;
/// Symmetry tolerance for coefficient files, which may hold rounded published values.
pub const LOADING_TOLERANCE: f64 = 2e-3;

/// Sign relating mirrored numerator taps: `a_k = sign * a_{2M-1-k}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symmetry {
    Even,
    Odd,
}

impl Symmetry {
    pub fn sign(self) -> f64 {
        match self {
            Symmetry::Even => 1.0,
            Symmetry::Odd => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Symmetry::Even => "+1",
            Symmetry::Odd => "-1",
        }
    }
}

impl std::str::FromStr for Symmetry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+1" | "1" => Ok(Symmetry::Even),
            "-1" => Ok(Symmetry::Odd),
            other => Err(Error::Parse(format!(
                "symmetry must be \"+1\" or \"-1\", got {other:?}"
            ))),
        }
    }
}

/// Determine whether `a` is symmetric or antisymmetric about its midpoint.
///
/// The sign whose worst mirrored deviation is smallest wins, provided that
/// deviation, relative to the largest `|a_k|`, is within `tol`.
pub fn validate_symmetry(a: &[f64], tol: f64) -> Result<Symmetry> {
    if a.len() < 2 || !a.len().is_multiple_of(2) {
        return Err(Error::InvariantViolation(format!(
            "numerator length must be even and at least 2, got {}",
            a.len()
        )));
    }
    if a.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroNumerator);
    }
    let n = a.len();
    let peak = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let deviation = |sign: f64| {
        (0..n)
            .map(|k| (a[k] - sign * a[n - 1 - k]).abs())
            .fold(0.0_f64, f64::max)
            / peak
    };
    let even = deviation(1.0);
    let odd = deviation(-1.0);
    let (sym, dev) = if even <= odd {
        (Symmetry::Even, even)
    } else {
        (Symmetry::Odd, odd)
    };
    // NaN deviations fail this comparison as well.
    if dev <= tol {
        Ok(sym)
    } else {
        Err(Error::SymmetryViolation {
            deviation: even.min(odd),
            tolerance: tol,
        })
    }
}

/// Jury (Schur-Cohn) stability test for `1 + b_1 z^-1 + ... + b_N z^-N`.
///
/// Runs the step-down recursion of the Jury table: each stage peels off one
/// reflection coefficient `k = c_n / c_0` and the polynomial is stable iff
/// every `|k| < 1`.
pub fn check_stability(b: &[f64]) -> bool {
    let mut poly: Vec<f64> = std::iter::once(1.0).chain(b.iter().copied()).collect();
    while poly.len() > 1 {
        let n = poly.len() - 1;
        let k = poly[n] / poly[0];
        if !(k.abs() < 1.0) {
            return false;
        }
        let scale = 1.0 - k * k;
        poly = (0..n)
            .map(|i| (poly[i] - k * poly[n - i]) / scale)
            .collect();
    }
    true
}

/// Reflection coefficients to direct-form denominator (step-up recursion).
///
/// Returns `b_1..b_N` of `1 + sum b_m z^-m`; stable whenever every `|k| < 1`.
pub fn reflection_to_denominator(reflection: &[f64]) -> Vec<f64> {
    let mut poly = vec![1.0];
    for &k in reflection {
        let n = poly.len();
        let mut next = vec![0.0; n + 1];
        for i in 0..=n {
            let fwd = if i < n { poly[i] } else { 0.0 };
            let rev = if i > 0 { poly[n - i] } else { 0.0 };
            next[i] = fwd + k * rev;
        }
        poly = next;
    }
    poly.split_off(1)
}

/// The shared all-pole factor `E(z) = 1 / (1 + sum b_m z^-m)` (unit gain).
#[derive(Debug, Clone, PartialEq)]
pub struct AllPoleCore {
    denominator: Vec<f64>,
}

impl AllPoleCore {
    pub fn new(denominator: Vec<f64>) -> Result<Self> {
        if !check_stability(&denominator) {
            return Err(Error::Unstable);
        }
        Ok(Self { denominator })
    }

    pub fn denominator(&self) -> &[f64] {
        &self.denominator
    }

    pub fn order(&self) -> usize {
        self.denominator.len()
    }

    /// `1 + sum b_m z^-m` at the given point.
    pub fn inverse_at(&self, z: Complex64) -> Complex64 {
        let zinv = z.inv();
        let mut acc = Complex64::new(1.0, 0.0);
        let mut pow = Complex64::new(1.0, 0.0);
        for &b in &self.denominator {
            pow *= zinv;
            acc += pow * b;
        }
        acc
    }

    /// `E(z)` at the given point.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.inverse_at(z).inv()
    }
}

/// One type-I polyphase component `P_k(z) = a_k E(z)`.
#[derive(Debug, Clone, Copy)]
pub struct PolyphaseComponent<'a> {
    pub index: usize,
    pub scale: f64,
    pub core: &'a AllPoleCore,
}

impl PolyphaseComponent<'_> {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.core.eval(z) * self.scale
    }
}

/// Analysis prototype with `2M` numerator taps and a denominator in `z^{-2M}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeFilter {
    channels: usize,
    numerator: Vec<f64>,
    core: AllPoleCore,
    symmetry: Symmetry,
}

impl PrototypeFilter {
    /// Build and validate a prototype using the construction tolerance.
    pub fn new(channels: usize, numerator: Vec<f64>, denominator: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(channels, numerator, denominator, CONSTRUCTION_TOLERANCE)
    }

    pub fn with_tolerance(
        channels: usize,
        numerator: Vec<f64>,
        denominator: Vec<f64>,
        symmetry_tolerance: f64,
    ) -> Result<Self> {
        if channels < 2 {
            return Err(Error::TooFewChannels {
                min: 2,
                found: channels,
            });
        }
        if numerator.len() != 2 * channels {
            return Err(Error::NumeratorLength {
                expected: 2 * channels,
                found: numerator.len(),
            });
        }
        if numerator.iter().chain(&denominator).any(|v| !v.is_finite()) {
            return Err(Error::InvariantViolation(
                "coefficients must be finite".into(),
            ));
        }
        let symmetry = validate_symmetry(&numerator, symmetry_tolerance)?;
        let core = AllPoleCore::new(denominator)?;
        for k in 0..channels {
            let energy = numerator[k].powi(2) + numerator[channels + k].powi(2);
            if energy <= 0.0 {
                return Err(Error::DegeneratePair { k, channels });
            }
        }
        Ok(Self {
            channels,
            numerator,
            core,
            symmetry,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn numerator(&self) -> &[f64] {
        &self.numerator
    }

    pub fn denominator(&self) -> &[f64] {
        self.core.denominator()
    }

    pub fn core(&self) -> &AllPoleCore {
        &self.core
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    /// Denominator order `N`.
    pub fn poles(&self) -> usize {
        self.core.order()
    }

    /// `a_k^2 + a_{M+k}^2` for `k = 0..M-1`.
    pub fn pair_energies(&self) -> Vec<f64> {
        let m = self.channels;
        (0..m)
            .map(|k| self.numerator[k].powi(2) + self.numerator[m + k].powi(2))
            .collect()
    }

    pub fn polyphase_components(&self) -> Vec<PolyphaseComponent<'_>> {
        self.numerator
            .iter()
            .enumerate()
            .map(|(index, &scale)| PolyphaseComponent {
                index,
                scale,
                core: &self.core,
            })
            .collect()
    }

    /// `P(e^{jw})` evaluated from the rational form.
    pub fn response_at(&self, omega: f64) -> Complex64 {
        let num: Complex64 = self
            .numerator
            .iter()
            .enumerate()
            .map(|(k, &a)| Complex64::from_polar(a, -omega * k as f64))
            .sum();
        let decimated = Complex64::from_polar(1.0, omega * (2 * self.channels) as f64);
        num * self.core.eval(decimated)
    }

    pub fn frequency_response(&self, omega: &[f64]) -> Vec<Complex64> {
        omega.iter().map(|&w| self.response_at(w)).collect()
    }

    pub fn impulse_response(&self, length: usize) -> Result<ImpulseResponse> {
        rational_impulse_response(self.channels, &self.numerator, self.denominator(), length)
    }

    /// Shortest impulse-response length (a multiple of `2M`) whose ℓ1 tail
    /// is below `rel_tol` times the ℓ1 norm of the whole response.
    pub fn impulse_length_for_tail(&self, rel_tol: f64) -> usize {
        let period = 2 * self.channels;
        if self.core.order() == 0 {
            return period;
        }
        let mut len = period * 8;
        loop {
            let ir = self
                .impulse_response(len)
                .expect("length is at least 2M by construction");
            let head: f64 = ir.samples.iter().map(|v| v.abs()).sum();
            if ir.tail_l1 <= rel_tol * (head + ir.tail_l1) {
                // Trim back down to the first period boundary that satisfies the bound.
                let mut tail = ir.tail_l1;
                let total = head + ir.tail_l1;
                let mut cut = len;
                while cut > period {
                    let chunk: f64 = ir.samples[cut - period..cut].iter().map(|v| v.abs()).sum();
                    if tail + chunk > rel_tol * total {
                        break;
                    }
                    tail += chunk;
                    cut -= period;
                }
                return cut;
            }
            len *= 2;
        }
    }
}

/// Truncated impulse response plus the ℓ1 mass of everything beyond it.
#[derive(Debug, Clone)]
pub struct ImpulseResponse {
    pub samples: Vec<f64>,
    /// `sum_{n >= L} |p(n)|`, obtained by running the zero-input recursion
    /// until the remaining state is negligible.
    pub tail_l1: f64,
}

const TAIL_SCAN_LIMIT: usize = 1 << 26;

/// Impulse response of `sum a_k z^-k / (1 + sum b_m z^-2Mm)` without
/// requiring the numerator to be symmetric.
pub fn rational_impulse_response(
    channels: usize,
    numerator: &[f64],
    denominator: &[f64],
    length: usize,
) -> Result<ImpulseResponse> {
    let period = 2 * channels;
    if length < period {
        return Err(Error::LengthTooShort {
            requested: length,
            minimum: period,
        });
    }
    let step = |p: &[f64], n: usize| -> f64 {
        let mut v = numerator.get(n).copied().unwrap_or(0.0);
        for (m, &b) in denominator.iter().enumerate() {
            let lag = period * (m + 1);
            if n >= lag {
                v -= b * p[n - lag];
            }
        }
        v
    };
    let mut samples = Vec::with_capacity(length);
    for n in 0..length {
        let v = step(&samples, n);
        samples.push(v);
    }

    let mut tail_l1 = 0.0;
    if !denominator.is_empty() {
        // Zero-input continuation on a ring holding the last `memory` samples.
        let memory = period * denominator.len();
        let peak = samples.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let floor = 1e-300_f64.max(peak * 1e-22);
        let mut ring = vec![0.0; memory];
        for n in length.saturating_sub(memory)..length {
            ring[n % memory] = samples[n];
        }
        let mut quiet = 0usize;
        let mut n = length;
        loop {
            if n - length >= TAIL_SCAN_LIMIT {
                tail_l1 = f64::INFINITY;
                break;
            }
            let v: f64 = -denominator
                .iter()
                .enumerate()
                .map(|(m, &b)| b * ring[(n - period * (m + 1)) % memory])
                .sum::<f64>();
            ring[n % memory] = v;
            tail_l1 += v.abs();
            n += 1;
            if v.abs() <= floor {
                quiet += 1;
                if quiet >= memory {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
    }
    Ok(ImpulseResponse { samples, tail_l1 })
}

/// Uniform grid of `points` frequencies covering `[0, pi]` inclusive.
pub fn frequency_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points)
            .map(|i| PI * i as f64 / (points - 1) as f64)
            .collect(),
    }
}
