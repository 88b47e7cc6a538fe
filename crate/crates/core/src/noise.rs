//! Spatially stationary conservative noise.
//!
//! The noise is a finite trigonometric sum
//! `ξ = Σ_k λ_k (√2 sin(2π k·x/L) dB^k + √2 cos(2π k·x/L) dW^k)` over wavevectors
//! `|k|_∞ ≤ K`, with one independent Brownian motion per mode and spatial
//! component. A [`NoisePath`] stores the raw Gaussian increments of every
//! stream so coupled runs can replay the same realisation exactly, and the
//! Wiener shift is a pure re-indexing of that array.

use std::f64::consts::{PI, SQRT_2};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;

/// Named amplitude spectra `k ↦ λ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AmplitudeRule {
    /// `λ_k = amplitude` for every retained wavevector.
    Flat { amplitude: f64 },
    /// `λ_k = scale |k|^(−γ)` for `k ≠ 0` and `λ_0 = zero_mode`.
    PowerLaw {
        gamma: f64,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        zero_mode: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl AmplitudeRule {
    pub fn amplitude(&self, k: [i32; 2]) -> f64 {
        match *self {
            AmplitudeRule::Flat { amplitude } => amplitude,
            AmplitudeRule::PowerLaw {
                gamma,
                scale,
                zero_mode,
            } => {
                let norm2 = (k[0] * k[0] + k[1] * k[1]) as f64;
                if norm2 == 0.0 {
                    zero_mode
                } else {
                    scale * norm2.powf(-0.5 * gamma)
                }
            }
        }
    }
}

impl Default for AmplitudeRule {
    fn default() -> Self {
        AmplitudeRule::PowerLaw {
            gamma: 2.0,
            scale: 0.5,
            zero_mode: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Sin,
    Cos,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub wavevector: [i32; 2],
    pub amplitude: f64,
    pub phase: Phase,
}

impl Mode {
    #[inline]
    fn argument(&self, x: [f64; 2], length: f64) -> f64 {
        2.0 * PI * (self.wavevector[0] as f64 * x[0] + self.wavevector[1] as f64 * x[1]) / length
    }

    /// `e(x)` without the amplitude.
    #[inline]
    pub fn value(&self, x: [f64; 2], length: f64) -> f64 {
        let a = self.argument(x, length);
        match self.phase {
            Phase::Sin => SQRT_2 * a.sin(),
            Phase::Cos => SQRT_2 * a.cos(),
        }
    }

    /// `∇e(x)` without the amplitude.
    pub fn gradient(&self, x: [f64; 2], length: f64) -> [f64; 2] {
        let a = self.argument(x, length);
        let w = 2.0 * PI / length;
        let s = match self.phase {
            Phase::Sin => SQRT_2 * a.cos(),
            Phase::Cos => -SQRT_2 * a.sin(),
        };
        [s * w * self.wavevector[0] as f64, s * w * self.wavevector[1] as f64]
    }

    /// Frobenius norm of the Hessian `∇²e(x)` without the amplitude.
    pub fn hessian_norm(&self, x: [f64; 2], length: f64) -> f64 {
        let w = 2.0 * PI / length;
        let k2 = (self.wavevector[0].pow(2) + self.wavevector[1].pow(2)) as f64;
        (self.value(x, length) * w * w * k2).abs()
    }

    /// Substream key, a function of the wavevector, phase and component only,
    /// so adding modes never perturbs the streams of existing ones.
    pub fn stream_key(&self, component: usize) -> u64 {
        let k0 = (self.wavevector[0] as i64 + (1 << 23)) as u64 & 0xFF_FFFF;
        let k1 = (self.wavevector[1] as i64 + (1 << 23)) as u64 & 0xFF_FFFF;
        let phase = match self.phase {
            Phase::Sin => 0,
            Phase::Cos => 1,
        };
        (k0 << 26) | (k1 << 2) | (phase << 1) | component as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseBasis {
    pub dim: usize,
    pub cutoff: u32,
    pub rule: AmplitudeRule,
    pub modes: Vec<Mode>,
}

/// Enumerates every `k ∈ Z^d` with `|k|_∞ ≤ cutoff` in lexicographic order,
/// `sin` before `cos`.
pub fn build_basis(dim: usize, cutoff: u32, rule: AmplitudeRule) -> Result<NoiseBasis> {
    if !(1..=2).contains(&dim) {
        return Err(invalid("noise.dim", format!("{dim} not in {{1, 2}}")));
    }
    let k = cutoff as i32;
    let range: Vec<[i32; 2]> = if dim == 1 {
        (-k..=k).map(|a| [a, 0]).collect()
    } else {
        (-k..=k).flat_map(|a| (-k..=k).map(move |b| [a, b])).collect()
    };
    let mut modes = Vec::with_capacity(2 * range.len());
    for wavevector in range {
        let amplitude = rule.amplitude(wavevector);
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(invalid(
                "noise.rule",
                format!("amplitude {amplitude} at k = {wavevector:?} is not a finite nonnegative number"),
            ));
        }
        for phase in [Phase::Sin, Phase::Cos] {
            modes.push(Mode {
                wavevector,
                amplitude,
                phase,
            });
        }
    }
    let basis = NoiseBasis {
        dim,
        cutoff,
        rule,
        modes,
    };
    let f3 = basis.f3(1.0);
    if !f3.is_finite() {
        return Err(invalid("noise.rule", "F3 is not finite"));
    }
    Ok(basis)
}

/// Spatial constants of a basis evaluated on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConstants {
    pub f1: f64,
    pub f3: f64,
    pub f4: f64,
    /// Relative variation `(max − min) / mean` of `x ↦ Σ λ² e²(x)` over the grid.
    pub stationarity_deviation: f64,
}

impl NoiseConstants {
    pub fn is_stationary(&self, tol: f64) -> bool {
        self.stationarity_deviation <= tol
    }
}

impl NoiseBasis {
    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// One Brownian motion per mode and spatial component.
    pub fn n_streams(&self) -> usize {
        self.modes.len() * self.dim
    }

    /// `Σ_j λ_j² e_j²`, which is `2 Σ_k λ_k²` for the paired basis.
    pub fn f1(&self) -> f64 {
        self.modes.chunks(2).map(|pair| 2.0 * pair[0].amplitude.powi(2)).sum()
    }

    /// `Σ_j λ_j² |∇e_j|²` on a torus of side `length`.
    pub fn f3(&self, length: f64) -> f64 {
        let w = 2.0 * PI / length;
        self.modes
            .chunks(2)
            .map(|pair| {
                let k = pair[0].wavevector;
                let k2 = (k[0] * k[0] + k[1] * k[1]) as f64;
                2.0 * pair[0].amplitude.powi(2) * w * w * k2
            })
            .sum()
    }

    /// `Σ_j λ_j² ‖∇²e_j‖_∞²` on a torus of side `length`.
    pub fn f4(&self, length: f64) -> f64 {
        let w = 2.0 * PI / length;
        self.modes
            .iter()
            .map(|m| {
                let k2 = (m.wavevector[0].pow(2) + m.wavevector[1].pow(2)) as f64;
                if k2 == 0.0 {
                    0.0
                } else {
                    m.amplitude.powi(2) * 2.0 * (w * w * k2).powi(2)
                }
            })
            .sum()
    }

    /// `Σ_j λ_j² (∂_axis e_j)²`, the per-direction share of `F₃`.
    pub fn f3_axis(&self, length: f64, axis: usize) -> f64 {
        let w = 2.0 * PI / length;
        self.modes
            .chunks(2)
            .map(|pair| {
                let ka = pair[0].wavevector[axis] as f64;
                2.0 * pair[0].amplitude.powi(2) * w * w * ka * ka
            })
            .sum()
    }
}

/// Evaluates `F₁`, `F₃` from the fields `Σ λ² e²`, `Σ λ² |∇e|²` at the cell
/// centres of `grid` and reports how far the first is from constant. `F₄`
/// uses the exact sup norm of each trigonometric Hessian.
pub fn eval_constants(basis: &NoiseBasis, grid: &Grid) -> Result<NoiseConstants> {
    if basis.dim != grid.dim {
        return Err(Error::DimensionMismatch {
            expected: grid.dim,
            got: basis.dim,
        });
    }
    let length = grid.length;
    let mut f1_field = Vec::with_capacity(grid.cells());
    let mut f3_field = Vec::with_capacity(grid.cells());
    for i in 0..grid.cells() {
        let x = grid.center(i);
        let mut a = 0.0;
        let mut b = 0.0;
        for m in &basis.modes {
            let lam2 = m.amplitude * m.amplitude;
            a += lam2 * m.value(x, length).powi(2);
            let g = m.gradient(x, length);
            b += lam2 * (g[0] * g[0] + g[1] * g[1]);
        }
        f1_field.push(a);
        f3_field.push(b);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let f1 = mean(&f1_field);
    let f3 = mean(&f3_field);
    let (lo, hi) = f1_field
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let stationarity_deviation = if f1 > 0.0 { (hi - lo) / f1 } else { 0.0 };
    Ok(NoiseConstants {
        f1,
        f3,
        f4: basis.f4(length),
        stationarity_deviation,
    })
}

/// Number of whole steps of size `dt` in `t`; errors if `t` is off the grid.
pub fn aligned_steps(t: f64, dt: f64) -> Result<i64> {
    let ratio = t / dt;
    let k = ratio.round();
    if !ratio.is_finite() || (ratio - k).abs() > 1e-7 {
        return Err(Error::Misaligned { time: t, dt });
    }
    Ok(k as i64)
}

/// Stored Brownian increments for every stream of a basis.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    pub basis: Arc<NoiseBasis>,
    pub dt: f64,
    /// Time of the left end of increment 0.
    pub origin: f64,
    pub seed: u64,
    /// Position of increment 0 within each seeded substream.
    pub offset: u64,
    n_steps: usize,
    /// Stream-major: `increments[stream * n_steps + step]`.
    increments: Vec<f64>,
}

fn generate(basis: &NoiseBasis, dt: f64, seed: u64, offset: u64, n_steps: usize) -> Vec<f64> {
    let sd = dt.sqrt();
    let mut out = Vec::with_capacity(basis.n_streams() * n_steps);
    for mode in &basis.modes {
        for component in 0..basis.dim {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(mode.stream_key(component));
            for _ in 0..offset {
                let _: f64 = rng.sample(StandardNormal);
            }
            out.extend((0..n_steps).map(|_| sd * rng.sample::<f64, _>(StandardNormal)));
        }
    }
    out
}

/// Draws `⌈T/Δt⌉` increments per stream, `N(0, Δt)` each.
pub fn sample_path(basis: Arc<NoiseBasis>, dt: f64, horizon: f64, seed: u64) -> Result<NoisePath> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid("dt", format!("{dt} must be positive")));
    }
    if !(horizon.is_finite() && horizon >= dt) {
        return Err(invalid("horizon", format!("{horizon} must be at least dt = {dt}")));
    }
    let n_steps = (horizon / dt - 1e-9).ceil() as usize;
    let increments = generate(&basis, dt, seed, 0, n_steps);
    Ok(NoisePath {
        basis,
        dt,
        origin: 0.0,
        seed,
        offset: 0,
        n_steps,
        increments,
    })
}

/// Wiener shift `θ_s`: increment `n` of the result is increment `n + s/Δt`
/// of `path`; the tail beyond the stored horizon is drawn from the same
/// substreams.
pub fn shift_path(path: &NoisePath, s: f64) -> Result<NoisePath> {
    let m = aligned_steps(s, path.dt)?;
    let new_offset = path.offset as i64 + m;
    if new_offset < 0 {
        return Err(invalid(
            "s",
            format!("shift {s} reaches before the start of the stored streams"),
        ));
    }
    let n = path.n_steps;
    let increments = if m >= 0 && (m as usize) <= n {
        let m = m as usize;
        let tail = if m > 0 {
            generate(&path.basis, path.dt, path.seed, path.offset + n as u64, m)
        } else {
            Vec::new()
        };
        let mut out = Vec::with_capacity(path.increments.len());
        for stream in 0..path.basis.n_streams() {
            out.extend_from_slice(&path.increments[stream * n + m..(stream + 1) * n]);
            out.extend_from_slice(&tail[stream * m..(stream + 1) * m]);
        }
        out
    } else {
        generate(&path.basis, path.dt, path.seed, new_offset as u64, n)
    };
    Ok(NoisePath {
        basis: path.basis.clone(),
        dt: path.dt,
        origin: 0.0,
        seed: path.seed,
        offset: new_offset as u64,
        n_steps: n,
        increments,
    })
}

impl NoisePath {
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn horizon(&self) -> f64 {
        self.origin + self.n_steps as f64 * self.dt
    }

    #[inline]
    pub fn increment(&self, stream: usize, step: usize) -> f64 {
        self.increments[stream * self.n_steps + step]
    }

    pub fn stream(&self, stream: usize) -> &[f64] {
        &self.increments[stream * self.n_steps..(stream + 1) * self.n_steps]
    }

    /// Gathers the increments of all streams for one step.
    pub fn step_increments(&self, step: usize, out: &mut [f64]) {
        for (s, o) in out.iter_mut().enumerate() {
            *o = self.increments[s * self.n_steps + step];
        }
    }

    /// `W(t_b) − W(t_a)` for one stream, as a left-to-right partial sum.
    pub fn brownian_increment(&self, stream: usize, from_step: usize, to_step: usize) -> f64 {
        self.stream(stream)[from_step..to_step].iter().sum()
    }

    /// Index of the increment starting at time `t`.
    pub fn step_index(&self, t: f64) -> Result<usize> {
        let k = aligned_steps(t - self.origin, self.dt)?;
        if k < 0 {
            return Err(invalid("t", format!("{t} precedes the path origin {}", self.origin)));
        }
        Ok(k as usize)
    }

    /// Same path, regenerated to cover at least `n_steps` increments.
    pub fn extended(&self, n_steps: usize) -> NoisePath {
        if n_steps <= self.n_steps {
            return self.clone();
        }
        let mut out = self.clone();
        out.n_steps = n_steps;
        out.increments = generate(&self.basis, self.dt, self.seed, self.offset, n_steps);
        out
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }
}

/// JSON sidecar accompanying a binary path file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathSidecar {
    pub rule: AmplitudeRule,
    pub offset: u64,
    pub origin: f64,
}

const HEADER_LEN: usize = 4 + 4 + 8 + 8 + 8 + 8;

/// Writes the little-endian header `{dim: u32, K: u32, Δt: f64, n_steps: u64,
/// n_modes: u64, seed: u64}` followed by the increments in mode-major order,
/// plus a `.json` sidecar next to it.
pub fn write_path(path: &NoisePath, file: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(file)?);
    w.write_all(&(path.basis.dim as u32).to_le_bytes())?;
    w.write_all(&path.basis.cutoff.to_le_bytes())?;
    w.write_all(&path.dt.to_le_bytes())?;
    w.write_all(&(path.n_steps as u64).to_le_bytes())?;
    w.write_all(&(path.basis.n_modes() as u64).to_le_bytes())?;
    w.write_all(&path.seed.to_le_bytes())?;
    for v in &path.increments {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    let sidecar = PathSidecar {
        rule: path.basis.rule,
        offset: path.offset,
        origin: path.origin,
    };
    std::fs::write(sidecar_path(file), serde_json::to_vec_pretty(&sidecar)?)?;
    Ok(())
}

pub fn sidecar_path(file: &Path) -> std::path::PathBuf {
    let mut s = file.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

pub fn read_path(file: &Path) -> Result<NoisePath> {
    let bad = |reason: String| Error::Format {
        path: file.display().to_string(),
        reason,
    };
    let sidecar: PathSidecar = serde_json::from_slice(&std::fs::read(sidecar_path(file))?)?;
    let mut r = BufReader::new(File::open(file)?);
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(header[o..o + 8].try_into().unwrap());
    let dim = u32_at(0) as usize;
    let cutoff = u32_at(4);
    let dt = f64::from_le_bytes(header[8..16].try_into().unwrap());
    let n_steps = u64_at(16) as usize;
    let n_modes = u64_at(24) as usize;
    let seed = u64_at(32);
    let basis = build_basis(dim, cutoff, sidecar.rule)?;
    if basis.n_modes() != n_modes {
        return Err(bad(format!(
            "header lists {n_modes} modes, basis has {}",
            basis.n_modes()
        )));
    }
    let count = n_modes * dim * n_steps;
    let mut bytes = Vec::with_capacity(count * 8);
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(bad(format!(
            "expected {} payload bytes, found {}",
            count * 8,
            bytes.len()
        )));
    }
    let increments = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(NoisePath {
        basis: Arc::new(basis),
        dt,
        origin: sidecar.origin,
        seed,
        offset: sidecar.offset,
        n_steps,
        increments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(dim: usize, k: u32) -> NoiseBasis {
        build_basis(dim, k, AmplitudeRule::Flat { amplitude: 1.0 }).unwrap()
    }

    #[test]
    fn canonical_order_is_lexicographic_sin_first() {
        let b = flat(2, 1);
        assert_eq!(b.n_modes(), 18);
        assert_eq!(b.modes[0].wavevector, [-1, -1]);
        assert_eq!(b.modes[0].phase, Phase::Sin);
        assert_eq!(b.modes[1].phase, Phase::Cos);
        assert_eq!(b.modes[2].wavevector, [-1, 0]);
        assert_eq!(b.modes[17].wavevector, [1, 1]);
        for pair in b.modes.chunks(2) {
            assert_eq!(pair[0].wavevector, pair[1].wavevector);
            assert_eq!(pair[0].amplitude, pair[1].amplitude);
        }
    }

    #[test]
    fn zero_cutoff_has_no_gradient() {
        let b = flat(1, 0);
        assert_eq!(b.n_modes(), 2);
        let g = Grid::new(1, 16).unwrap();
        let c = eval_constants(&b, &g).unwrap();
        assert_eq!(c.f3, 0.0);
        assert_eq!(c.f4, 0.0);
        assert!((c.f1 - 2.0).abs() < 1e-15);
    }

    #[test]
    fn f3_matches_direct_sum_over_modes() {
        // d = 1, K = 1, flat: pairs at k = -1, 0, 1.
        let b = flat(1, 1);
        let mut oracle = 0.0;
        for m in &b.modes {
            let k = m.wavevector[0] as f64;
            // average of |∇e|² over the torus is λ² (2πk)²
            oracle += m.amplitude.powi(2) * (2.0 * PI * k).powi(2);
        }
        assert!((b.f3(1.0) - oracle).abs() < 1e-12 * oracle);
        let c = eval_constants(&b, &Grid::new(1, 32).unwrap()).unwrap();
        assert!((c.f3 - oracle).abs() < 1e-12 * oracle);
        assert!(c.stationarity_deviation < 1e-12);
    }

    #[test]
    fn power_law_2d_constants_are_finite_sums() {
        let rule = AmplitudeRule::PowerLaw {
            gamma: 2.0,
            scale: 1.0,
            zero_mode: 0.0,
        };
        let b = build_basis(2, 2, rule).unwrap();
        let mut f1 = 0.0;
        let mut f3 = 0.0;
        for m in &b.modes {
            let k2 = (m.wavevector[0].pow(2) + m.wavevector[1].pow(2)) as f64;
            let lam = if k2 == 0.0 { 0.0 } else { 1.0 / k2 };
            f1 += lam * lam;
            f3 += lam * lam * 4.0 * PI * PI * k2;
        }
        assert!((b.f1() - f1).abs() < 1e-13);
        assert!((b.f3(1.0) - f3).abs() < 1e-11);
        let c = eval_constants(&b, &Grid::new(2, 16).unwrap()).unwrap();
        assert!((c.f1 - f1).abs() < 1e-12);
        assert!((c.f3 - f3).abs() < 1e-10);
        assert!(c.stationarity_deviation < 1e-12);
    }

    #[test]
    fn nonpaired_amplitudes_are_rejected() {
        let bad = AmplitudeRule::Flat { amplitude: -1.0 };
        assert!(build_basis(1, 2, bad).is_err());
        let nan = AmplitudeRule::PowerLaw {
            gamma: 1.0,
            scale: f64::NAN,
            zero_mode: 0.0,
        };
        assert!(build_basis(1, 2, nan).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let b = Arc::new(flat(1, 2));
        let a = sample_path(b.clone(), 0.01, 1.0, 42).unwrap();
        let c = sample_path(b, 0.01, 1.0, 42).unwrap();
        assert_eq!(a.n_steps(), 100);
        assert_eq!(a.increments, c.increments);
    }

    #[test]
    fn zero_shift_is_identity() {
        let b = Arc::new(flat(1, 1));
        let p = sample_path(b, 0.01, 1.0, 7).unwrap();
        let q = shift_path(&p, 0.0).unwrap();
        assert_eq!(p.increments, q.increments);
    }

    #[test]
    fn shifts_compose_exactly() {
        let b = Arc::new(flat(2, 1));
        let p = sample_path(b, 0.01, 0.5, 3).unwrap();
        let a = shift_path(&shift_path(&p, 0.1).unwrap(), 0.27).unwrap();
        let c = shift_path(&p, 0.37).unwrap();
        assert_eq!(a.increments, c.increments);
        // beyond the stored horizon the tail is regenerated from the seed
        let far = shift_path(&p, 0.8).unwrap();
        let longer = p.extended(130);
        for s in 0..p.basis.n_streams() {
            assert_eq!(far.stream(s), &longer.stream(s)[80..130]);
        }
    }

    #[test]
    fn misaligned_shift_is_rejected() {
        let b = Arc::new(flat(1, 1));
        let p = sample_path(b, 0.01, 1.0, 1).unwrap();
        assert!(matches!(shift_path(&p, 0.015), Err(Error::Misaligned { .. })));
    }

    #[test]
    fn helix_blocks_agree_bitwise() {
        let b = Arc::new(flat(1, 2));
        let p = sample_path(b, 0.01, 1.0, 11).unwrap();
        let q = shift_path(&p, 0.3).unwrap();
        for s in 0..p.basis.n_streams() {
            let original = p.brownian_increment(s, 30, 70);
            let shifted = q.brownian_increment(s, 0, 40);
            assert_eq!(original.to_bits(), shifted.to_bits());
        }
    }

    #[test]
    fn binary_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("path.bin");
        let b = Arc::new(build_basis(2, 1, AmplitudeRule::default()).unwrap());
        let p = shift_path(&sample_path(b, 0.02, 0.4, 5).unwrap(), 0.1).unwrap();
        write_path(&p, &file).unwrap();
        let bytes = std::fs::read(&file).unwrap();
        assert_eq!(u32::from_le_bytes(bytes[0..4].try_into().unwrap()), 2);
        assert_eq!(bytes.len(), HEADER_LEN + 8 * p.increments.len());
        let q = read_path(&file).unwrap();
        assert_eq!(p, q);
    }
}
