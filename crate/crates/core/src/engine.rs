//! Closed-form synthesis gains and the streaming analysis/synthesis banks.
//!
//! Both banks use the reduced structure: one recursive (analysis) or FIR
//! (synthesis) filter at the full rate, a `2M`-deep tapped delay line with
//! scalar gains, a butterfly, and an `M x M` cosine transform.
//!
//! The all-pole core `E(z)` appears in the polyphase matrix as `E(-z^2)` at
//! the decimated rate. Pulled back across the `M`-fold decimator it becomes
//! `E(-z^{2M})`, i.e. the feedback coefficients are `(-1)^m b_m` at lags
//! `2Mm`. That sign alternation is applied once, in [`alternating_feedback`].

use crate::error::{Error, Result};
use crate::modulation::ModulationMatrices;
use crate::prototype::PrototypeFilter;

const SINGULAR_DETERMINANT: f64 = 1e-14;

/// Default relative tolerance for perfect-reconstruction checks.
pub const PR_TOLERANCE: f64 = 1e-8;

/// Synthesis polyphase gains `s_0..s_{2M-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisGains {
    s: Vec<f64>,
}

impl SynthesisGains {
    pub fn as_slice(&self) -> &[f64] {
        &self.s
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.s
    }
}

/// Solve the `M` independent 2x2 reconstruction blocks.
///
/// Block `k` has rows `(a_k, a_{M+k})` and `(a_{M-1-k}, -a_{2M-1-k})` acting
/// on `(s_{2M-1-k}, s_{M-1-k})` with right-hand side `(1, 0)`.
pub fn derive_synthesis_gains(prototype: &PrototypeFilter) -> Result<SynthesisGains> {
    let a = prototype.numerator();
    let m = prototype.channels();
    let mut s = vec![0.0; 2 * m];
    for k in 0..m {
        let (r00, r01) = (a[k], a[m + k]);
        let (r10, r11) = (a[m - 1 - k], -a[2 * m - 1 - k]);
        let det = r00 * r11 - r01 * r10;
        if det.abs() < SINGULAR_DETERMINANT {
            return Err(Error::SingularBlock {
                block: k,
                determinant: det,
            });
        }
        // Cramer's rule against (1, 0).
        s[2 * m - 1 - k] = r11 / det;
        s[m - 1 - k] = -r10 / det;
    }
    Ok(SynthesisGains { s })
}

/// FIR synthesis prototype `q` with `q(k + 2Mm) = s_k b_m`, `b_0 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisPrototype {
    q: Vec<f64>,
}

impl SynthesisPrototype {
    pub fn taps(&self) -> &[f64] {
        &self.q
    }
}

pub fn build_synthesis_prototype(
    prototype: &PrototypeFilter,
    gains: &SynthesisGains,
) -> Result<SynthesisPrototype> {
    let period = 2 * prototype.channels();
    if gains.s.len() != period {
        return Err(Error::ShapeMismatch(format!(
            "expected {period} synthesis gains, got {}",
            gains.s.len()
        )));
    }
    let q = std::iter::once(1.0)
        .chain(prototype.denominator().iter().copied())
        .flat_map(|b| gains.s.iter().map(move |&s| s * b))
        .collect();
    Ok(SynthesisPrototype { q })
}

/// `(-1)^m b_m`, the feedback taps of `E(-z^{2M})` at lags `2Mm`.
pub fn alternating_feedback(denominator: &[f64]) -> Vec<f64> {
    denominator
        .iter()
        .enumerate()
        .map(|(i, &b)| if (i + 1) % 2 == 0 { b } else { -b })
        .collect()
}

/// Multiplication counters, split by the element of the structure that
/// performed them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounts {
    /// Full-rate samples processed.
    pub samples: u64,
    /// Decimated-rate blocks processed.
    pub blocks: u64,
    /// Multiplies in the shared recursive/FIR filter.
    pub filter: u64,
    /// Multiplies by the scalar polyphase gains.
    pub gains: u64,
    /// Multiplies inside the cosine transform.
    pub transform: u64,
}

impl OpCounts {
    pub fn total(&self) -> u64 {
        self.filter + self.gains + self.transform
    }
}

/// Folded `M x M` transform stored row-major, shared by both banks.
#[derive(Debug, Clone)]
struct FoldedTransform {
    m: usize,
    even: usize,
    odd: usize,
    rows: Vec<f64>,
}

impl FoldedTransform {
    fn new(m: usize) -> Result<Self> {
        let folded = ModulationMatrices::new(m)?.folded();
        let rows = (0..m)
            .flat_map(|j| (0..m).map(move |c| (j, c)))
            .map(|(j, c)| folded[(j, c)])
            .collect();
        Ok(Self {
            m,
            even: m.div_ceil(2),
            odd: m / 2,
            rows,
        })
    }

    /// `y = Ca u` for a `2M` vector `u`; `scratch` holds `M` entries.
    fn forward(&self, u: &[f64], scratch: &mut [f64], y: &mut [f64], muls: &mut u64) {
        let m = self.m;
        for c in 0..self.even {
            let mirror = m - 1 - c;
            scratch[c] = if mirror == c { u[c] } else { u[c] + u[mirror] };
        }
        for c in 0..self.odd {
            scratch[self.even + c] = u[m + c] - u[2 * m - 1 - c];
        }
        for (j, out) in y.iter_mut().enumerate() {
            let row = &self.rows[j * m..(j + 1) * m];
            *out = row.iter().zip(scratch.iter()).map(|(c, r)| c * r).sum();
            *muls += m as u64;
        }
    }

    /// `t = J Ca^T y` (length `2M`); `scratch` holds `M` entries.
    fn transpose(&self, y: &[f64], scratch: &mut [f64], t: &mut [f64], muls: &mut u64) {
        let m = self.m;
        for (c, r) in scratch.iter_mut().enumerate() {
            *r = (0..m).map(|j| self.rows[j * m + c] * y[j]).sum();
            *muls += m as u64;
        }
        let len = 2 * m;
        for k in 0..m {
            // (Ca^T y)_k for the mirror-symmetric half
            let c = k.min(m - 1 - k);
            t[len - 1 - k] = scratch[c];
            // (Ca^T y)_{M+k} for the mirror-antisymmetric half
            let v = if k < self.odd {
                scratch[self.even + k]
            } else if m - 1 - k < self.odd {
                -scratch[self.even + (m - 1 - k)]
            } else {
                0.0
            };
            t[len - 1 - (m + k)] = v;
        }
    }
}

/// Streaming state of the analysis bank.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisState {
    /// Output of the shared recursive filter, newest at `pos - 1`.
    history: Vec<f64>,
    pos: usize,
    samples: u64,
}

impl AnalysisState {
    fn new(len: usize) -> Self {
        Self {
            history: vec![0.0; len],
            pos: 0,
            samples: 0,
        }
    }

    pub fn reset(&mut self) {
        self.history.iter_mut().for_each(|v| *v = 0.0);
        self.pos = 0;
        self.samples = 0;
    }

    pub fn is_zero(&self) -> bool {
        self.history.iter().all(|&v| v == 0.0)
    }

    pub fn samples_processed(&self) -> u64 {
        self.samples
    }
}

/// Critically sampled analysis bank: `M` samples in, one sample per channel out.
#[derive(Debug, Clone)]
pub struct AnalysisBank {
    m: usize,
    gains: Vec<f64>,
    feedback: Vec<f64>,
    transform: FoldedTransform,
    state: AnalysisState,
    taps: Vec<f64>,
    scratch: Vec<f64>,
    block: Vec<f64>,
    counts: OpCounts,
}

impl AnalysisBank {
    pub fn new(prototype: &PrototypeFilter) -> Result<Self> {
        let m = prototype.channels();
        let feedback = alternating_feedback(prototype.denominator());
        let memory = 2 * m * feedback.len().max(1);
        Ok(Self {
            m,
            gains: prototype.numerator().to_vec(),
            feedback,
            transform: FoldedTransform::new(m)?,
            state: AnalysisState::new(memory),
            taps: vec![0.0; 2 * m],
            scratch: vec![0.0; m],
            block: vec![0.0; m],
            counts: OpCounts::default(),
        })
    }

    pub fn channels(&self) -> usize {
        self.m
    }

    pub fn state(&self) -> &AnalysisState {
        &self.state
    }

    pub fn reset(&mut self) {
        self.state.reset();
    }

    pub fn op_counts(&self) -> OpCounts {
        self.counts
    }

    pub fn reset_op_counts(&mut self) {
        self.counts = OpCounts::default();
    }

    /// Filter `x` (length a multiple of `M`) into `M` subband sequences of
    /// length `len(x)/M`. Subband sample `n` sees input up to `x[nM]`.
    pub fn process(&mut self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let m = self.m;
        if !x.len().is_multiple_of(m) {
            return Err(Error::BlockSize {
                len: x.len(),
                channels: m,
            });
        }
        let mut out = vec![Vec::with_capacity(x.len() / m); m];
        self.process_into(x, |y| {
            for (ch, &v) in out.iter_mut().zip(y) {
                ch.push(v);
            }
        })?;
        Ok(out)
    }

    /// Like [`process`](Self::process) but hands each `M`-vector of subband
    /// samples to `sink` as it is produced.
    pub fn process_into<F: FnMut(&[f64])>(&mut self, x: &[f64], mut sink: F) -> Result<()> {
        let m = self.m;
        if !x.len().is_multiple_of(m) {
            return Err(Error::BlockSize {
                len: x.len(),
                channels: m,
            });
        }
        let period = 2 * m;
        let len = self.state.history.len();
        for &sample in x {
            let pos = self.state.pos;
            let mut w = sample;
            for (i, &fb) in self.feedback.iter().enumerate() {
                let lag = period * (i + 1);
                w -= fb * self.state.history[(pos + len - lag) % len];
            }
            self.counts.filter += self.feedback.len() as u64;
            self.state.history[pos] = w;

            if self.state.samples.is_multiple_of(m as u64) {
                for (k, (tap, &a)) in self.taps.iter_mut().zip(&self.gains).enumerate() {
                    *tap = a * self.state.history[(pos + len - k) % len];
                }
                self.counts.gains += period as u64;
                self.transform.forward(
                    &self.taps,
                    &mut self.scratch,
                    &mut self.block,
                    &mut self.counts.transform,
                );
                self.counts.blocks += 1;
                sink(&self.block);
            }
            self.state.pos = (pos + 1) % len;
            self.state.samples += 1;
            self.counts.samples += 1;
        }
        Ok(())
    }
}

/// Streaming state of the synthesis bank.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisState {
    /// Pending overlap-add output of the gain stage (`2M` entries).
    pending: Vec<f64>,
    /// Past gain-stage output feeding the FIR core, newest at `pos - 1`.
    history: Vec<f64>,
    pos: usize,
}

impl SynthesisState {
    fn new(m: usize, memory: usize) -> Self {
        Self {
            pending: vec![0.0; 2 * m],
            history: vec![0.0; memory],
            pos: 0,
        }
    }

    pub fn reset(&mut self) {
        self.pending.iter_mut().for_each(|v| *v = 0.0);
        self.history.iter_mut().for_each(|v| *v = 0.0);
        self.pos = 0;
    }

    pub fn is_zero(&self) -> bool {
        self.pending.iter().chain(&self.history).all(|&v| v == 0.0)
    }
}

/// Synthesis bank: one sample per channel in, `M` output samples out.
#[derive(Debug, Clone)]
pub struct SynthesisBank {
    m: usize,
    gains: Vec<f64>,
    feedforward: Vec<f64>,
    transform: FoldedTransform,
    state: SynthesisState,
    column: Vec<f64>,
    scratch: Vec<f64>,
    spread: Vec<f64>,
    counts: OpCounts,
}

impl SynthesisBank {
    pub fn new(prototype: &PrototypeFilter) -> Result<Self> {
        let gains = derive_synthesis_gains(prototype)?;
        let m = prototype.channels();
        let feedforward = alternating_feedback(prototype.denominator());
        let memory = 2 * m * feedforward.len().max(1);
        Ok(Self {
            m,
            gains: gains.into_vec(),
            feedforward,
            transform: FoldedTransform::new(m)?,
            state: SynthesisState::new(m, memory),
            column: vec![0.0; m],
            scratch: vec![0.0; m],
            spread: vec![0.0; 2 * m],
            counts: OpCounts::default(),
        })
    }

    pub fn channels(&self) -> usize {
        self.m
    }

    pub fn state(&self) -> &SynthesisState {
        &self.state
    }

    pub fn reset(&mut self) {
        self.state.reset();
    }

    pub fn op_counts(&self) -> OpCounts {
        self.counts
    }

    pub fn reset_op_counts(&mut self) {
        self.counts = OpCounts::default();
    }

    /// Recombine `M` equal-length subband sequences into `M * len` samples.
    pub fn process(&mut self, subbands: &[Vec<f64>]) -> Result<Vec<f64>> {
        let m = self.m;
        if subbands.len() != m {
            return Err(Error::ShapeMismatch(format!(
                "expected {m} subbands, got {}",
                subbands.len()
            )));
        }
        let n = subbands[0].len();
        if let Some(bad) = subbands.iter().find(|s| s.len() != n) {
            return Err(Error::ShapeMismatch(format!(
                "subband lengths differ ({n} vs {})",
                bad.len()
            )));
        }
        let mut out = Vec::with_capacity(n * m);
        let mut frame = vec![0.0; m];
        for i in 0..n {
            for (slot, band) in frame.iter_mut().zip(subbands) {
                *slot = band[i];
            }
            self.process_block(&frame, &mut out);
        }
        Ok(out)
    }

    /// Push one subband vector (`M` values) and append `M` output samples.
    pub fn process_block(&mut self, y: &[f64], out: &mut Vec<f64>) {
        let m = self.m;
        debug_assert_eq!(y.len(), m);
        self.column.copy_from_slice(y);
        self.transform.transpose(
            &self.column,
            &mut self.scratch,
            &mut self.spread,
            &mut self.counts.transform,
        );
        for ((acc, &s), &t) in self
            .state
            .pending
            .iter_mut()
            .zip(&self.gains)
            .zip(&self.spread)
        {
            *acc += s * t;
        }
        self.counts.gains += 2 * m as u64;
        self.counts.blocks += 1;

        let period = 2 * m;
        let len = self.state.history.len();
        for i in 0..m {
            let pos = self.state.pos;
            let u = self.state.pending[i];
            let mut v = u;
            for (r, &c) in self.feedforward.iter().enumerate() {
                let lag = period * (r + 1);
                // FIR taps read values older than `u`, so read before writing.
                v += c * self.state.history[(pos + len - lag) % len];
            }
            self.counts.filter += self.feedforward.len() as u64;
            self.state.history[pos] = u;
            self.state.pos = (pos + 1) % len;
            self.counts.samples += 1;
            out.push(v);
        }
        self.state.pending.copy_within(m.., 0);
        self.state.pending[m..].iter_mut().for_each(|v| *v = 0.0);
    }
}

/// End-to-end delay and gain of the analysis/synthesis cascade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemResponse {
    pub delay: usize,
    pub gain: f64,
    /// Largest deviation from a pure delayed, scaled impulse, relative to `gain`.
    pub residual: f64,
}

/// Drive one impulse per input phase (`0..M`) through analysis and
/// synthesis and check that every phase yields the same delayed, scaled
/// impulse.
pub fn measure_system_delay_and_gain(prototype: &PrototypeFilter) -> Result<SystemResponse> {
    measure_with_tolerance(prototype, PR_TOLERANCE)
}

pub fn measure_with_tolerance(
    prototype: &PrototypeFilter,
    tolerance: f64,
) -> Result<SystemResponse> {
    let m = prototype.channels();
    let n = prototype.poles();
    // The cascade is FIR: the analysis poles cancel against the synthesis zeros.
    let span = 2 * m * (n + 4) + m;
    let len = span.div_ceil(m) * m;

    let mut measured: Option<(usize, f64)> = None;
    let mut residual = 0.0_f64;
    for phase in 0..m {
        let mut analysis = AnalysisBank::new(prototype)?;
        let mut synthesis = SynthesisBank::new(prototype)?;
        let mut x = vec![0.0; len];
        x[phase] = 1.0;
        let sub = analysis.process(&x)?;
        let y = synthesis.process(&sub)?;
        let (peak, &g) = y
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("non-empty output");
        if g == 0.0 || peak < phase {
            return Err(Error::NotPr {
                residual: f64::INFINITY,
                tolerance,
            });
        }
        let delay = peak - phase;
        let scale = g.abs();
        let off_peak = y
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != peak)
            .fold(0.0_f64, |acc, (_, v)| acc.max(v.abs()));
        residual = residual.max(off_peak / scale);
        match measured {
            None => measured = Some((delay, g)),
            Some((d0, g0)) => {
                if d0 != delay {
                    return Err(Error::NotPr {
                        residual: f64::INFINITY,
                        tolerance,
                    });
                }
                residual = residual.max((g - g0).abs() / g0.abs());
            }
        }
    }
    let (delay, gain) = measured.expect("at least two phases");
    if !(residual <= tolerance) {
        return Err(Error::NotPr {
            residual,
            tolerance,
        });
    }
    Ok(SystemResponse {
        delay,
        gain,
        residual,
    })
}

/// Run `x` through fresh analysis and synthesis banks and return the raw
/// output (delayed by the system delay and scaled by the system gain).
pub fn roundtrip(prototype: &PrototypeFilter, x: &[f64]) -> Result<Vec<f64>> {
    let mut analysis = AnalysisBank::new(prototype)?;
    let mut synthesis = SynthesisBank::new(prototype)?;
    let sub = analysis.process(x)?;
    synthesis.process(&sub)
}
