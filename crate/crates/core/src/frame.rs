//! Polyphase/Gram matrices, frame bounds, attenuation and operation counts.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::engine::{measure_system_delay_and_gain, SystemResponse};
use crate::error::{Error, Result};
use crate::modulation::ModulationMatrices;
use crate::prototype::{frequency_grid, PrototypeFilter};

/// Default number of frequency points on `[0, pi]`.
pub const DEFAULT_GRID: usize = 1024;
/// Smallest grid accepted by [`frame_bounds`].
pub const MIN_FRAME_GRID: usize = 256;

/// `E(-e^{j2w})`, the core as it appears in the decimated polyphase matrix.
fn core_on_circle(p: &PrototypeFilter, omega: f64) -> Complex64 {
    p.core().eval(-Complex64::from_polar(1.0, 2.0 * omega))
}

/// `A_M(e^{jw}) = Ca P(e^{jw})` where `P` stacks `diag(a_k E(-z^2))` over
/// `z^-1 diag(a_{M+k} E(-z^2))`.
pub fn analysis_polyphase_matrix(p: &PrototypeFilter, omega: f64) -> DMatrix<Complex64> {
    let m = p.channels();
    let a = p.numerator();
    let e = core_on_circle(p, omega);
    let delay = Complex64::from_polar(1.0, -omega);
    let stacked = DMatrix::from_fn(2 * m, m, |r, c| {
        if r == c {
            e * a[c]
        } else if r == m + c {
            delay * e * a[m + c]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let ca = ModulationMatrices::new(m)
        .expect("prototype guarantees at least two channels")
        .ca
        .map(|v| Complex64::new(v, 0.0));
    ca * stacked
}

/// `A_M^*(w) A_M(w)`.
pub fn gram_matrix(p: &PrototypeFilter, omega: f64) -> DMatrix<Complex64> {
    let a = analysis_polyphase_matrix(p, omega);
    a.adjoint() * a
}

pub fn max_off_diagonal(g: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0_f64;
    for r in 0..g.nrows() {
        for c in 0..g.ncols() {
            if r != c {
                worst = worst.max(g[(r, c)].norm());
            }
        }
    }
    worst
}

/// Closed-form Gram eigenvalues `2M (a_k^2 + a_{M+k}^2) |E(-e^{j2w})|^2`.
pub fn diagonal_eigenvalues(p: &PrototypeFilter, omega: f64) -> Vec<f64> {
    let scale = 2.0 * p.channels() as f64 * core_on_circle(p, omega).norm_sqr();
    p.pair_energies().into_iter().map(|e| e * scale).collect()
}

#[derive(Debug, Clone)]
pub struct FrameReport {
    /// Lower frame bound `A` (smallest eigenvalue over the grid).
    pub lower: f64,
    /// Upper frame bound `B`.
    pub upper: f64,
    /// `10 log10(B / A)`.
    pub ratio_db: f64,
    pub grid_size: usize,
    pub omega: Vec<f64>,
    pub lambda_min: Vec<f64>,
    pub lambda_max: Vec<f64>,
    /// Ratio from brute-force Hermitian eigendecomposition on the same grid.
    pub brute_force_ratio_db: f64,
    /// Worst per-point disagreement between closed-form and brute-force
    /// extremes, in dB.
    pub cross_check_db: f64,
    /// Worst Gershgorin radius relative to the smallest diagonal entry; the
    /// diagonal shortcut is only trusted when this is small.
    pub gershgorin_ratio: f64,
    pub system: Option<SystemResponse>,
}

/// Frame bounds on a uniform grid of `[0, pi]`, cross-checked against a
/// full eigendecomposition of the Gram matrix at every point.
pub fn frame_bounds(p: &PrototypeFilter, grid_size: usize) -> Result<FrameReport> {
    if grid_size < MIN_FRAME_GRID {
        return Err(Error::LengthTooShort {
            requested: grid_size,
            minimum: MIN_FRAME_GRID,
        });
    }
    let omega = frequency_grid(grid_size);
    let mut lambda_min = Vec::with_capacity(grid_size);
    let mut lambda_max = Vec::with_capacity(grid_size);
    let mut bf_lo = f64::INFINITY;
    let mut bf_hi = 0.0_f64;
    let mut cross_check_db = 0.0_f64;
    let mut gershgorin_ratio = 0.0_f64;
    let db = |v: f64| 10.0 * v.log10();

    for &w in &omega {
        let diag = diagonal_eigenvalues(p, w);
        let lo = diag.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = diag.iter().copied().fold(0.0, f64::max);
        lambda_min.push(lo);
        lambda_max.push(hi);

        let g = gram_matrix(p, w);
        let eig = SymmetricEigen::new(g.clone()).eigenvalues;
        let e_lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let e_hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        bf_lo = bf_lo.min(e_lo);
        bf_hi = bf_hi.max(e_hi);
        cross_check_db = cross_check_db
            .max((db(lo) - db(e_lo)).abs())
            .max((db(hi) - db(e_hi)).abs());

        let min_diag = (0..g.nrows())
            .map(|i| g[(i, i)].re)
            .fold(f64::INFINITY, f64::min);
        for r in 0..g.nrows() {
            let radius: f64 = (0..g.ncols())
                .filter(|&c| c != r)
                .map(|c| g[(r, c)].norm())
                .sum();
            gershgorin_ratio = gershgorin_ratio.max(radius / min_diag);
        }
    }

    let lower = lambda_min.iter().copied().fold(f64::INFINITY, f64::min);
    let upper = lambda_max.iter().copied().fold(0.0, f64::max);
    if !(lower >= 1e-14 * upper) {
        return Err(Error::DegenerateFrame {
            lambda_min: lower,
            lambda_max: upper,
        });
    }
    Ok(FrameReport {
        lower,
        upper,
        ratio_db: db(upper / lower),
        grid_size,
        omega,
        lambda_min,
        lambda_max,
        brute_force_ratio_db: db(bf_hi / bf_lo),
        cross_check_db,
        gershgorin_ratio,
        system: measure_system_delay_and_gain(p).ok(),
    })
}

const ATTENUATION_GRID: usize = 16384;

/// Worst stopband magnitude relative to the overall peak, as positive dB.
pub fn stopband_attenuation(p: &PrototypeFilter, stopband_edge: f64) -> Result<f64> {
    if !(stopband_edge > 0.0 && stopband_edge < PI) {
        return Err(Error::InvalidSpec(format!(
            "stopband edge must lie in (0, pi), got {stopband_edge}"
        )));
    }
    let peak = frequency_grid(ATTENUATION_GRID)
        .into_iter()
        .map(|w| p.response_at(w).norm())
        .fold(0.0, f64::max);
    let span = PI - stopband_edge;
    let stop = (0..ATTENUATION_GRID)
        .map(|i| stopband_edge + span * i as f64 / (ATTENUATION_GRID - 1) as f64)
        .map(|w| p.response_at(w).norm())
        .fold(0.0, f64::max);
    Ok(-20.0 * (stop / peak).log10())
}

/// Non-trivial multiplies of the reduced structure without a fast DCT:
/// `N` filter coefficients, `2M` polyphase gains and an `M x M` transform.
pub fn multiplication_count(channels: usize, poles: usize) -> usize {
    poles + 2 * channels + channels * channels
}

/// Complex responses `H_m(e^{jw})` of every analysis channel, computed from
/// the polyphase structure `G(z) sum_k Ca[m][k] a_k z^-k` with
/// `G(z) = E(-z^{2M})`.
pub fn channel_responses(p: &PrototypeFilter, omega: &[f64]) -> Vec<Vec<Complex64>> {
    let m = p.channels();
    let ca = ModulationMatrices::new(m)
        .expect("prototype guarantees at least two channels")
        .ca;
    let a = p.numerator();
    let mut out = vec![Vec::with_capacity(omega.len()); m];
    for &w in omega {
        let g = p
            .core()
            .eval(-Complex64::from_polar(1.0, w * (2 * m) as f64));
        let delays: Vec<Complex64> = (0..2 * m)
            .map(|k| Complex64::from_polar(a[k], -w * k as f64))
            .collect();
        for (ch, resp) in out.iter_mut().enumerate() {
            let sum: Complex64 = delays
                .iter()
                .enumerate()
                .map(|(k, d)| d * ca[(ch, k)])
                .sum();
            resp.push(sum * g);
        }
    }
    out
}
