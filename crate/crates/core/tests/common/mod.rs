//! Test-side oracles and generators, written independently of the library.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::Rng;

use cmfb::PrototypeFilter;

/// Step-up recursion from reflection coefficients to `b_1..b_N`.
pub fn lattice_to_direct(k: &[f64]) -> Vec<f64> {
    let mut a = vec![1.0];
    for &km in k {
        let prev = a.clone();
        a.push(0.0);
        for i in 1..a.len() {
            a[i] = prev.get(i).copied().unwrap_or(0.0) + km * prev[prev.len() - i];
        }
    }
    a[1..].to_vec()
}

/// A random symmetric (or antisymmetric) numerator with a random stable
/// denominator built from reflection coefficients in `(-0.8, 0.8)`.
pub fn random_prototype<R: Rng>(rng: &mut R, m: usize, n: usize) -> PrototypeFilter {
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let mut a = vec![0.0; 2 * m];
    for k in 0..m {
        let mag = rng.gen_range(0.2..1.0);
        let v = if rng.gen_bool(0.5) { mag } else { -mag };
        a[k] = v;
        a[2 * m - 1 - k] = sign * v;
    }
    let k: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.8..0.8)).collect();
    PrototypeFilter::new(m, a, lattice_to_direct(&k)).expect("generated prototype is valid")
}

pub fn noise<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Direct recursion of `P(z) = A(z) / (1 + sum b_r z^{-2Mr})`.
pub fn prototype_impulse(a: &[f64], b: &[f64], m: usize, len: usize) -> Vec<f64> {
    let period = 2 * m;
    let mut p = vec![0.0; len];
    for n in 0..len {
        let mut v = a.get(n).copied().unwrap_or(0.0);
        for (r, &br) in b.iter().enumerate() {
            let lag = period * (r + 1);
            if n >= lag {
                v -= br * p[n - lag];
            }
        }
        p[n] = v;
    }
    p
}

/// Truncate the prototype impulse response once the discarded ℓ1 tail,
/// bounded geometrically from the last full period, drops below `tol`
/// relative to the retained ℓ1 mass.
pub fn truncated_prototype(p: &PrototypeFilter, tol: f64) -> Vec<f64> {
    let m = p.channels();
    let period = 2 * m;
    let mut len = period * 16;
    loop {
        let mut h = prototype_impulse(p.numerator(), p.denominator(), m, len + 64 * period);
        let head: f64 = h[..len].iter().map(|v| v.abs()).sum();
        let tail: f64 = h[len..].iter().map(|v| v.abs()).sum();
        // the last 64 periods decay geometrically; add a generous bound for the rest
        let last: f64 = h[h.len() - period..].iter().map(|v| v.abs()).sum();
        if tail + 1e3 * last <= tol * head {
            h.truncate(len);
            return h;
        }
        len *= 2;
    }
}

/// `2 cos((2j+1) pi/(2M) (n - (2M-1)/2) + (-1)^j pi/4)`.
pub fn cosine(m: usize, j: usize, n: f64) -> f64 {
    let theta = (2 * j + 1) as f64 * PI / (2 * m) as f64;
    let phi = if j.is_multiple_of(2) {
        PI / 4.0
    } else {
        -PI / 4.0
    };
    2.0 * (theta * (n - (2 * m - 1) as f64 / 2.0) + phi).cos()
}

/// `sqrt(sum (x - y)^2 / sum y^2)`.
pub fn relative_l2(x: &[f64], reference: &[f64]) -> f64 {
    let (e, n) = x.iter().zip(reference).fold((0.0, 0.0), |(e, n), (a, b)| {
        (e + (a - b) * (a - b), n + b * b)
    });
    (e / n).sqrt()
}

/// Published numerators and synthesis gains.
pub const TABLE1_A: [f64; 6] = [1.0, -0.69195, 1.02372, 1.02372, -0.69195, 1.0];
pub const TABLE1_S: [f64; 6] = [0.48828, -0.72259, 0.49986, 0.49986, -0.72259, 0.48828];
pub const TABLE2_A: [f64; 8] = [1.0, 0.8720, 1.0820, 1.2103, 1.2103, 1.0820, 0.8720, 1.0];
pub const TABLE2_S: [f64; 8] = [
    0.4057, 0.4516, 0.5603, 0.4910, 0.4910, 0.5603, 0.4516, 0.4057,
];
pub const TABLE3_A: [f64; 12] = [
    1.0, 0.6306, 0.7423, 0.8623, 0.9526, 1.0, 1.0, 0.9526, 0.8623, 0.7412, 0.6306, 1.0,
];
pub const TABLE3_S: [f64; 12] = [
    0.4996, 0.4832, 0.5732, 0.6668, 0.7298, 0.4999, 0.4999, 0.7298, 0.6668, 0.5732, 0.4832, 0.4996,
];
