//! Simulation of the multifractal return process.

use super::MsmParams;
use crate::numerics::rng::RngStream;

/// Simulate `len` returns. Components start from the uniform stationary law;
/// each period every component independently renews with its own
/// probability, redrawing from the symmetric two-point marginal.
///
/// Exactly `1 + 2 k_bar` draws are consumed per period regardless of the
/// parameters, so criterion evaluations under common random numbers stay
/// smooth in the renewal probabilities.
pub fn msm_simulate(params: &MsmParams, len: usize, stream: &mut RngStream) -> Vec<f64> {
    let k_bar = params.k_bar;
    let gammas = params.gammas();
    let sds = params.sd_by_high_count();

    // State is the bitset of components at the high (2 - m0) level.
    let mut state: u32 = 0;
    let mut high: usize = 0;
    for k in 0..k_bar {
        if stream.uniform() < 0.5 {
            state |= 1 << k;
            high += 1;
        }
    }

    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(params.mu + sds[high] * stream.standard_normal());
        for (k, &g) in gammas.iter().enumerate() {
            let switch = stream.uniform() < g;
            let new_high = stream.uniform() < 0.5;
            if switch {
                let bit = 1u32 << k;
                let was_high = state & bit != 0;
                if new_high != was_high {
                    state ^= bit;
                    if new_high {
                        high += 1;
                    } else {
                        high -= 1;
                    }
                }
            }
        }
    }
    out
}

/// Simulation variant that also reports the multiplier states (the bitset of
/// high components per period), for distributional checks.
pub fn msm_simulate_with_states(
    params: &MsmParams,
    len: usize,
    stream: &mut RngStream,
) -> (Vec<f64>, Vec<u32>) {
    let k_bar = params.k_bar;
    let gammas = params.gammas();
    let sds = params.sd_by_high_count();

    let mut state: u32 = 0;
    let mut high: usize = 0;
    for k in 0..k_bar {
        if stream.uniform() < 0.5 {
            state |= 1 << k;
            high += 1;
        }
    }

    let mut out = Vec::with_capacity(len);
    let mut states = Vec::with_capacity(len);
    for _ in 0..len {
        states.push(state);
        out.push(params.mu + sds[high] * stream.standard_normal());
        for (k, &g) in gammas.iter().enumerate() {
            let switch = stream.uniform() < g;
            let new_high = stream.uniform() < 0.5;
            if switch {
                let bit = 1u32 << k;
                let was_high = state & bit != 0;
                if new_high != was_high {
                    state ^= bit;
                    if new_high {
                        high += 1;
                    } else {
                        high -= 1;
                    }
                }
            }
        }
    }
    (out, states)
}
