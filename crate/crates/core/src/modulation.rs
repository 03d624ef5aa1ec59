//! Cosine modulation matrices and direct-form modulated filters.

use std::f64::consts::{FRAC_PI_4, PI};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::prototype::PrototypeFilter;

/// Phase offset `(-1)^m pi/4` of channel `m`.
pub fn channel_phase(m: usize) -> f64 {
    if m.is_multiple_of(2) {
        FRAC_PI_4
    } else {
        -FRAC_PI_4
    }
}

/// `2 cos((2m+1)(pi/2M)(n - (2M-1)/2) + sign * phi(m))`.
///
/// `sign = +1` gives the analysis modulation, `-1` the synthesis one.
pub fn modulation_factor(channels: usize, m: usize, n: f64, sign: f64) -> f64 {
    let m2 = 2.0 * channels as f64;
    let freq = (2 * m + 1) as f64 * PI / m2;
    2.0 * (freq * (n - (m2 - 1.0) / 2.0) + sign * channel_phase(m)).cos()
}

/// The analysis and synthesis cosine matrices, each `M x 2M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationMatrices {
    pub channels: usize,
    pub ca: DMatrix<f64>,
    pub cs: DMatrix<f64>,
}

impl ModulationMatrices {
    pub fn new(channels: usize) -> Result<Self> {
        if channels < 2 {
            return Err(Error::TooFewChannels {
                min: 2,
                found: channels,
            });
        }
        let period = 2 * channels;
        let ca = DMatrix::from_fn(channels, period, |j, k| {
            modulation_factor(channels, j, k as f64, 1.0)
        });
        let cs = DMatrix::from_fn(channels, period, |j, k| {
            modulation_factor(channels, j, (period - 1 - k) as f64, -1.0)
        });
        Ok(Self { channels, ca, cs })
    }

    /// `2M * blockdiag(I + J, I - J)`.
    pub fn expected_cascade(&self) -> DMatrix<f64> {
        let m = self.channels;
        DMatrix::from_fn(2 * m, 2 * m, |r, c| {
            let scale = 2.0 * m as f64;
            match (r < m, c < m) {
                (true, true) => scale * (f64::from(r == c) + f64::from(r + c == m - 1)),
                (false, false) => {
                    let (r, c) = (r - m, c - m);
                    scale * (f64::from(r == c) - f64::from(r + c == m - 1))
                }
                _ => 0.0,
            }
        })
    }

    /// Largest entrywise deviation of `Cs^T Ca` from `2M blockdiag(I+J, I-J)`.
    pub fn synthesis_cascade_deviation(&self) -> f64 {
        max_abs_diff(&(self.cs.transpose() * &self.ca), &self.expected_cascade())
    }

    /// Largest entrywise deviation of `Ca^T Ca` from `2M blockdiag(I+J, I-J)`.
    pub fn analysis_gram_deviation(&self) -> f64 {
        max_abs_diff(&(self.ca.transpose() * &self.ca), &self.expected_cascade())
    }

    /// The `M x M` matrix left after folding the mirror structure of `Ca`.
    ///
    /// The first `M` columns of `Ca` are mirror-symmetric and the last `M`
    /// mirror-antisymmetric, so `Ca u` only needs the first `ceil(M/2)`
    /// columns of the left half and the first `floor(M/2)` columns of the
    /// right half, applied to the butterfly outputs `u0 + J u0` and
    /// `u1 - J u1`.
    pub fn folded(&self) -> DMatrix<f64> {
        let m = self.channels;
        let even_cols = m.div_ceil(2);
        DMatrix::from_fn(m, m, |j, c| {
            if c < even_cols {
                self.ca[(j, c)]
            } else {
                self.ca[(j, m + (c - even_cols))]
            }
        })
    }
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Direct-form analysis (`h_m`) and synthesis (`f_m`) channel filters.
#[derive(Debug, Clone)]
pub struct ModulatedFilters {
    pub analysis: Vec<Vec<f64>>,
    pub synthesis: Vec<Vec<f64>>,
}

/// Modulate the first `length` samples of the analysis prototype and the
/// whole FIR synthesis prototype `q` into `M` channel filters each.
pub fn modulated_impulse_responses(
    prototype: &PrototypeFilter,
    q: &[f64],
    length: usize,
) -> Result<ModulatedFilters> {
    let m = prototype.channels();
    let p = prototype.impulse_response(length)?.samples;
    let analysis = (0..m).map(|ch| modulate(&p, m, ch, 1.0)).collect();
    let synthesis = (0..m).map(|ch| modulate(q, m, ch, -1.0)).collect();
    Ok(ModulatedFilters {
        analysis,
        synthesis,
    })
}

/// Modulate an arbitrary prototype sequence onto channel `m`.
pub fn modulate(prototype: &[f64], channels: usize, m: usize, sign: f64) -> Vec<f64> {
    prototype
        .iter()
        .enumerate()
        .map(|(n, &v)| v * modulation_factor(channels, m, n as f64, sign))
        .collect()
}
