//! Spin-lattice relaxation: exponential T1 extraction from time traces and
//! the two-phonon rate model Gamma(T) = sum_i A_i n_i (n_i + 1) + A_S.

use super::{least_squares_fit, FitOptions, FitResult, SeriesPoint};
use crate::phonon::{bose_occupation, bose_occupation_denergy};
use crate::{Error, Result};

/// One Raman channel: rate coefficient (1/ms) and mode energy (meV).
#[derive(Clone, Copy, Debug)]
pub struct RelaxationMode {
    pub a_per_ms: f64,
    pub homega_mev: f64,
}

/// Gamma(T) = sum_i a_i n_i(n_i + 1) + a_s, rates in 1/ms.
#[derive(Clone, Debug)]
pub struct RelaxationParams {
    pub modes: Vec<RelaxationMode>,
    pub a_s_per_ms: f64,
}

impl RelaxationParams {
    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(Error::invalid("relaxation model needs at least one mode"));
        }
        for (i, m) in self.modes.iter().enumerate() {
            if !(m.a_per_ms >= 0.0) {
                return Err(Error::invalid(format!("mode {i}: A = {} must be >= 0", m.a_per_ms)));
            }
            if !(m.homega_mev > 0.0) {
                return Err(Error::invalid(format!(
                    "mode {i}: homega = {} meV must be > 0",
                    m.homega_mev
                )));
            }
        }
        if !(self.a_s_per_ms >= 0.0) {
            return Err(Error::invalid(format!(
                "A_S = {} must be >= 0",
                self.a_s_per_ms
            )));
        }
        Ok(())
    }

    pub fn eval(&self, t_k: f64) -> f64 {
        let raman: f64 = self
            .modes
            .iter()
            .map(|m| {
                let n = bose_occupation(m.homega_mev, t_k);
                m.a_per_ms * n * (n + 1.0)
            })
            .sum();
        raman + self.a_s_per_ms
    }
}

/// Whether the mode energies are pinned during the rate fit or fit as free
/// parameters; either way the vector supplies one energy per mode. The
/// pinned form is the primary workflow (energies come from the thermal fit).
#[derive(Clone, Debug)]
pub enum EnergyConstraint {
    Fixed(Vec<f64>),
    Free(Vec<f64>),
}

impl EnergyConstraint {
    fn energies(&self) -> &[f64] {
        match self {
            EnergyConstraint::Fixed(e) | EnergyConstraint::Free(e) => e,
        }
    }

    fn is_free(&self) -> bool {
        matches!(self, EnergyConstraint::Free(_))
    }
}

/// Fits the rate curve Gamma(T). Points are (T in K, rate in 1/ms), all
/// rates > 0; needs at least 2 * mode_count + 2 points.
pub fn fit_relaxation(
    points: &[SeriesPoint],
    energies: &EnergyConstraint,
) -> Result<(RelaxationParams, FitResult)> {
    let m = energies.energies().len();
    if m == 0 {
        return Err(Error::invalid("no mode energies supplied"));
    }
    for (i, &e) in energies.energies().iter().enumerate() {
        if !(e > 0.0) {
            return Err(Error::invalid(format!("mode {i}: energy {e} meV must be > 0")));
        }
    }
    if points.len() < 2 * m + 2 {
        return Err(Error::InsufficientData {
            points: points.len(),
            params: 2 * m + 2,
        });
    }
    for p in points {
        if !(p.y > 0.0) {
            return Err(Error::invalid(format!("rate {} at {} K must be > 0", p.y, p.x)));
        }
        if p.x < 0.0 {
            return Err(Error::invalid(format!("temperature {} K < 0", p.x)));
        }
    }

    let hottest = points
        .iter()
        .copied()
        .max_by(|a, b| a.x.total_cmp(&b.x))
        .expect("non-empty by precondition");
    let min_rate = points.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let a_s0 = 0.5 * min_rate;
    let free = energies.is_free();

    let mut init: Vec<(String, f64)> = Vec::new();
    let mut bounds: Vec<(f64, f64)> = Vec::new();
    for (i, &e) in energies.energies().iter().enumerate() {
        let n = bose_occupation(e, hottest.x);
        let occ = (n * (n + 1.0)).max(1e-12);
        let a0 = ((hottest.y - a_s0) / (m as f64 * occ)).max(1e-12);
        init.push((format!("a_{i}_per_ms"), a0));
        bounds.push((0.0, f64::INFINITY));
    }
    if free {
        for (i, &e) in energies.energies().iter().enumerate() {
            init.push((format!("homega_{i}_mev"), e));
            bounds.push((1e-4, 1e4));
        }
    }
    init.push(("a_s_per_ms".to_string(), a_s0));
    bounds.push((0.0, f64::INFINITY));

    let fixed_energies = energies.energies().to_vec();
    let model = move |p: &[f64], t: f64| {
        let mut rate = p[p.len() - 1];
        for i in 0..m {
            let e = if free { p[m + i] } else { fixed_energies[i] };
            let n = bose_occupation(e, t);
            rate += p[i] * n * (n + 1.0);
        }
        rate
    };
    let jac_energies = energies.energies().to_vec();
    let jacobian = move |p: &[f64], t: f64, out: &mut [f64]| {
        for i in 0..m {
            let e = if free { p[m + i] } else { jac_energies[i] };
            let n = bose_occupation(e, t);
            out[i] = n * (n + 1.0);
            if free {
                out[m + i] = p[i] * (2.0 * n + 1.0) * bose_occupation_denergy(e, t);
            }
        }
        out[p.len() - 1] = 1.0;
    };

    let named: Vec<(&str, f64)> = init.iter().map(|(n, v)| (n.as_str(), *v)).collect();
    let result = least_squares_fit(
        &model,
        Some(&jacobian),
        points,
        &named,
        Some(&bounds),
        &FitOptions::default(),
    )?;

    let fitted = RelaxationParams {
        modes: (0..m)
            .map(|i| RelaxationMode {
                a_per_ms: result.params[i],
                homega_mev: if free {
                    result.params[m + i]
                } else {
                    energies.energies()[i]
                },
            })
            .collect(),
        a_s_per_ms: result.params[result.params.len() - 1],
    };
    Ok((fitted, result))
}

/// Fits signal(t) = c0 + c1 exp(-t / T1) and returns (T1 in ms, fit).
/// Needs at least 5 points at nonnegative, strictly increasing times.
/// A flat trace (no decay to fit) is rejected as non-decaying; recovery
/// curves (c1 < 0) are fine.
pub fn fit_t1_trace(trace: &[SeriesPoint]) -> Result<(f64, FitResult)> {
    if trace.len() < 5 {
        return Err(Error::InsufficientData {
            points: trace.len(),
            params: 5,
        });
    }
    if trace[0].x < 0.0 {
        return Err(Error::invalid(format!("time {} ms < 0", trace[0].x)));
    }
    for w in trace.windows(2) {
        if !(w[1].x > w[0].x) {
            return Err(Error::invalid(format!(
                "times must be strictly increasing; saw {} then {}",
                w[0].x, w[1].x
            )));
        }
    }
    let y_min = trace.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let y_max = trace.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
    let scale = y_max.abs().max(y_min.abs()).max(1e-300);
    if (y_max - y_min) <= 1e-9 * scale {
        return Err(Error::NonDecayingTrace);
    }

    let first = trace[0];
    let last = trace[trace.len() - 1];
    let c0_init = last.y;
    let span = last.x - first.x;
    // T1 guess: time for |signal - c0| to fall to 1/e of its initial value.
    let initial_gap = (first.y - c0_init).abs();
    let mut t1_init = span / 3.0;
    for p in trace.iter().skip(1) {
        if (p.y - c0_init).abs() <= initial_gap / std::f64::consts::E {
            t1_init = (p.x - first.x).max(span / 100.0);
            break;
        }
    }
    let c1_init = (first.y - c0_init) * (first.x / t1_init).exp();

    let model = |p: &[f64], t: f64| p[0] + p[1] * (-t / p[2]).exp();
    let jacobian = |p: &[f64], t: f64, out: &mut [f64]| {
        let e = (-t / p[2]).exp();
        out[0] = 1.0;
        out[1] = e;
        out[2] = p[1] * e * t / (p[2] * p[2]);
    };
    let inf = f64::INFINITY;
    let result = least_squares_fit(
        &model,
        Some(&jacobian),
        trace,
        &[("c0", c0_init), ("c1", c1_init), ("t1_ms", t1_init)],
        Some(&[(-inf, inf), (-inf, inf), (1e-9, inf)]),
        &FitOptions::default(),
    )?;
    Ok((result.params[2], result))
}
