//! Lorenz system trajectories and peak series of the x-component.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::series::TimeSeries;

pub type State = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorenzParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub dt: f64,
    /// Steps integrated and discarded before sampling starts.
    pub n_transient: usize,
    /// Root seed for the random initial conditions.
    pub seed: u64,
}

impl Default for LorenzParams {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
            dt: 0.025,
            n_transient: 1000,
            seed: 2021,
        }
    }
}

impl LorenzParams {
    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if ![self.sigma, self.rho, self.beta].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("Lorenz parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn derivative(&self, s: &State) -> State {
        let [x, y, z] = *s;
        [
            self.sigma * (y - x),
            x * (self.rho - z) - y,
            x * y - self.beta * z,
        ]
    }

    /// One classical fourth-order Runge-Kutta step of size `dt`.
    pub fn rk4_step(&self, s: &State) -> State {
        let h = self.dt;
        let add = |a: &State, k: &State, f: f64| [a[0] + f * k[0], a[1] + f * k[1], a[2] + f * k[2]];
        let k1 = self.derivative(s);
        let k2 = self.derivative(&add(s, &k1, h / 2.0));
        let k3 = self.derivative(&add(s, &k2, h / 2.0));
        let k4 = self.derivative(&add(s, &k3, h));
        let mut out = *s;
        for i in 0..3 {
            out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out
    }
}

fn finite(s: &State) -> bool {
    s.iter().all(|v| v.is_finite())
}

/// Fixed-step RK4 trajectory. The first `n_transient` steps are discarded,
/// then `n_steps` states are returned, one per `dt`.
pub fn integrate_lorenz(params: &LorenzParams, x0: State, n_steps: usize) -> Result<Vec<State>> {
    params.validate()?;
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be >= 1".into()));
    }
    if !finite(&x0) {
        return Err(Error::InvalidArgument("initial state must be finite".into()));
    }
    let mut s = x0;
    for step in 0..params.n_transient {
        s = params.rk4_step(&s);
        if !finite(&s) {
            return Err(Error::Diverged { step: step + 1 });
        }
    }
    let mut out = Vec::with_capacity(n_steps);
    for step in 0..n_steps {
        s = params.rk4_step(&s);
        if !finite(&s) {
            return Err(Error::Diverged {
                step: params.n_transient + step + 1,
            });
        }
        out.push(s);
    }
    Ok(out)
}

/// Streaming detector of strict local maxima. A plateau bounded by lower
/// samples on both sides reports its first sample.
#[derive(Debug, Clone, Default)]
struct PeakDetector {
    prev: Option<f64>,
    /// Value of a rise (or a plateau following a rise) awaiting a fall.
    candidate: Option<f64>,
}

impl PeakDetector {
    fn push(&mut self, v: f64) -> Option<f64> {
        let mut peak = None;
        if let Some(p) = self.prev {
            if v > p {
                self.candidate = Some(v);
            } else if v < p {
                peak = self.candidate.take();
            }
        }
        self.prev = Some(v);
        peak
    }
}

/// The first `n_peaks` interior local maxima of `signal`, in order.
pub fn extract_peaks(signal: &[f64], n_peaks: usize) -> Result<TimeSeries> {
    let mut det = PeakDetector::default();
    let mut peaks = Vec::with_capacity(n_peaks);
    for &v in signal {
        if let Some(p) = det.push(v) {
            peaks.push(p);
            if peaks.len() == n_peaks {
                break;
            }
        }
    }
    if peaks.len() < n_peaks {
        return Err(Error::NotEnoughPeaks {
            found: peaks.len(),
            requested: n_peaks,
        });
    }
    TimeSeries::new("peaks", peaks)
}

/// Peaks of the x-component from one run, integrating in chunks until the
/// quota is met.
pub fn lorenz_peak_series(params: &LorenzParams, x0: State, n_peaks: usize, id: &str) -> Result<TimeSeries> {
    const CHUNK: usize = 4096;
    // a Lorenz orbit makes roughly one x-maximum per 30 steps at dt = 0.025;
    // give up well past any plausible count
    let max_steps = 10_000 + n_peaks.saturating_mul(2000);
    let mut s = integrate_lorenz(params, x0, 1)?[0];
    let mut det = PeakDetector::default();
    det.push(s[0]);
    let mut peaks = Vec::with_capacity(n_peaks);
    let mut steps = 1;
    let per_chunk = LorenzParams {
        n_transient: 0,
        ..*params
    };
    while peaks.len() < n_peaks {
        if steps >= max_steps {
            return Err(Error::NotEnoughPeaks {
                found: peaks.len(),
                requested: n_peaks,
            });
        }
        let chunk = integrate_lorenz(&per_chunk, s, CHUNK).map_err(|e| match e {
            Error::Diverged { step } => Error::Diverged {
                step: params.n_transient + steps + step,
            },
            other => other,
        })?;
        steps += CHUNK;
        s = *chunk.last().expect("non-empty chunk");
        for state in &chunk {
            if let Some(p) = det.push(state[0]) {
                peaks.push(p);
                if peaks.len() == n_peaks {
                    break;
                }
            }
        }
    }
    TimeSeries::new(id, peaks)
}

/// Initial condition of run `index`, uniform in `(0, 1)^3`.
pub fn initial_condition(seed: u64, index: u64) -> State {
    let mut rng = stream(seed, "lorenz-ic", index);
    let mut draw = || loop {
        let v: f64 = rng.random();
        if v > 0.0 {
            return v;
        }
    };
    [draw(), draw(), draw()]
}

/// `n_series` independent peak series with ids `lorenz-00`, `lorenz-01`, ...
pub fn make_lorenz_peak_ensemble(params: &LorenzParams, n_series: usize, n_peaks: usize) -> Result<Vec<TimeSeries>> {
    if n_series == 0 {
        return Err(Error::InvalidArgument("n_series must be >= 1".into()));
    }
    (0..n_series)
        .into_par_iter()
        .map(|i| {
            let x0 = initial_condition(params.seed, i as u64);
            lorenz_peak_series(params, x0, n_peaks, &format!("lorenz-{i:02}"))
        })
        .collect()
}
