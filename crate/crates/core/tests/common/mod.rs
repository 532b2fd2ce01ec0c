//! Reference implementations and data generators shared by the integration
//! tests. The oracles deliberately avoid the library's encoding and sparse
//! network: patterns are explicit rank vectors and the transition matrix is
//! dense.

#![allow(dead_code)]

use std::collections::HashMap;

use ordnet::rng::stream;
use ordnet::{Direction, TimeSeries};
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Ranks (0-based) of a window, smallest first, earlier index first on ties.
pub fn naive_ranks(window: &[f64]) -> Vec<usize> {
    let mut ranks = vec![0; window.len()];
    for (i, r) in ranks.iter_mut().enumerate() {
        *r = (0..window.len())
            .filter(|&j| window[j] < window[i] || (window[j] == window[i] && j < i))
            .count();
    }
    ranks
}

pub fn naive_patterns(values: &[f64], m: usize, tau: usize, direction: Direction) -> Vec<Vec<usize>> {
    let mut x = values.to_vec();
    if direction == Direction::Reverse {
        x.reverse();
    }
    let span = (m - 1) * tau;
    (0..x.len() - span)
        .map(|t| naive_ranks(&(0..m).map(|k| x[t + k * tau]).collect::<Vec<_>>()))
        .collect()
}

fn entropy_of(weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    weights
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| {
            let p = w / total;
            -p * p.ln()
        })
        .sum()
}

/// `(h_pe, h_cpe, h_gne)` from explicit pattern lists and a dense matrix.
/// `include_loops` selects whether self-loop weight counts toward the node
/// probabilities of `h_gne`.
pub fn dense_quantifiers(values: &[f64], m: usize, tau: usize, direction: Direction, include_loops: bool) -> (f64, f64, f64) {
    let pats = naive_patterns(values, m, tau, direction);
    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    let seq: Vec<usize> = pats
        .iter()
        .map(|p| {
            let n = index.len();
            *index.entry(p.clone()).or_insert(n)
        })
        .collect();
    let k = index.len();
    let mut freq = vec![0.0; k];
    for &s in &seq {
        freq[s] += 1.0;
    }
    let mut a = vec![vec![0.0; k]; k];
    for w in seq.windows(2) {
        a[w[0]][w[1]] += 1.0;
    }
    let len = seq.len() as f64;
    let h_pe = entropy_of(&freq);
    let h_cpe: f64 = (0..k).map(|i| freq[i] / len * entropy_of(&a[i])).sum();

    let mut no_loops = a.clone();
    for (i, row) in no_loops.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    let strength: Vec<f64> = (0..k)
        .map(|i| {
            let s: f64 = no_loops[i].iter().sum();
            if s == 0.0 {
                0.0
            } else if include_loops {
                a[i].iter().sum()
            } else {
                s
            }
        })
        .collect();
    let total: f64 = strength.iter().sum();
    let h_gne = if total == 0.0 {
        0.0
    } else {
        (0..k).map(|i| strength[i] / total * entropy_of(&no_loops[i])).sum()
    };
    (h_pe, h_cpe, h_gne)
}

pub fn gaussian(seed: u64, tag: &str, index: u64, n: usize) -> Vec<f64> {
    let mut rng = stream(seed, tag, index);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn uniform(seed: u64, tag: &str, index: u64, n: usize) -> Vec<f64> {
    let mut rng = stream(seed, tag, index);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

pub fn series(id: &str, values: Vec<f64>) -> TimeSeries {
    TimeSeries::new(id, values).unwrap()
}

/// Stationary circular Gaussian process with an AR(1)-shaped spectrum:
/// independent complex Gaussian Fourier coefficients, so its phases are
/// uniform given the amplitudes. `n` must be even.
pub fn circular_gaussian(seed: u64, index: u64, n: usize, phi: f64) -> Vec<f64> {
    assert!(n.is_multiple_of(2));
    let mut rng = stream(seed, "circular", index);
    let amp = |k: usize| {
        let w = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        1.0 / ((1.0 - phi * w.cos()).powi(2) + (phi * w.sin()).powi(2)).sqrt()
    };
    let mut spec = vec![Complex::new(0.0, 0.0); n];
    spec[0] = Complex::new(amp(0) * rng.sample::<f64, _>(StandardNormal), 0.0);
    spec[n / 2] = Complex::new(amp(n / 2) * rng.sample::<f64, _>(StandardNormal), 0.0);
    for k in 1..n / 2 {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        spec[k] = Complex::new(re, im) * (amp(k) / 2f64.sqrt());
        spec[n - k] = spec[k].conj();
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spec);
    spec.iter().map(|c| c.re / (n as f64).sqrt()).collect()
}

/// Amplitude spectrum by the O(n^2) definition, with exact integer phase
/// reduction to keep the twiddles accurate.
pub fn naive_amplitudes(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &v) in x.iter().enumerate() {
                let phase = 2.0 * std::f64::consts::PI * ((k * t) % n) as f64 / n as f64;
                re += v * phase.cos();
                im -= v * phase.sin();
            }
            (re * re + im * im).sqrt()
        })
        .collect()
}

/// Sample autocorrelation at lag `k`.
pub fn autocorrelation(x: &[f64], k: usize) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    let cov: f64 = x.windows(k + 1).map(|w| (w[0] - mean) * (w[k] - mean)).sum();
    cov / var
}

/// Slow linear rise and abrupt reset with additive noise, rounded to whole
/// units the way RR intervals are stored in milliseconds.
pub fn quantized_sawtooth(seed: u64, index: u64, n: usize) -> Vec<f64> {
    let mut rng = stream(seed, "sawtooth", index);
    let period = 24.0 + 8.0 * rng.random::<f64>();
    let offset = period * rng.random::<f64>();
    (0..n)
        .map(|t| {
            let phase = ((t as f64 + offset) / period).fract();
            let noise: f64 = rng.sample(StandardNormal);
            (800.0 + 120.0 * phase + 2.0 * noise).round()
        })
        .collect()
}
