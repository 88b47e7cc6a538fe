//! Sampled verification of the structural coefficient conditions.
//!
//! Inequalities of the form `A(ξ) ≤ c B(ξ)` for all `ξ > 0` cannot be decided
//! on a finite grid; they are tested as "the ratio `A/B` does not keep growing
//! towards the end of the sampled range". Pointwise sign conditions (positivity,
//! coercivity, one-sided Lipschitz bounds) are tested directly, with the margin
//! equal to the minimal slack over the grid.

use serde::{Deserialize, Serialize};

use super::{theta, CoefficientSet, Phi};
use crate::error::{invalid, Result};

/// Growth factor above which a ratio is declared unbounded at a range end.
const TAIL_FACTOR: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Satisfied,
    Violated,
    Unverifiable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginKind {
    /// Minimal slack of a pointwise inequality over the sample grid.
    Infimum,
    /// Headroom of a sampled ratio before it counts as unbounded.
    TailGrowth,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionEntry {
    pub name: String,
    /// Which condition is being checked, in words.
    pub item: String,
    pub status: CheckStatus,
    pub satisfied: bool,
    pub worst_point: f64,
    pub margin: f64,
    pub kind: MarginKind,
    /// Empirical constant (largest sampled ratio), where meaningful.
    pub constant: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub entries: Vec<AssumptionEntry>,
    pub coercivity_constant: f64,
    pub checked_range: [f64; 2],
    pub p: f64,
    /// Which of the two alternative modulus conditions hold on the grid.
    pub modulus_alternatives: Vec<String>,
}

impl AssumptionReport {
    pub fn all_satisfied(&self) -> bool {
        self.entries.iter().all(|e| e.satisfied)
    }

    pub fn entry(&self, name: &str) -> Option<&AssumptionEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// Log-spaced sample grid with both endpoints.
pub(crate) fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

struct Checker<'a> {
    xs: &'a [f64],
    entries: Vec<AssumptionEntry>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum End {
    Zero,
    Infinity,
    Both,
}

impl Checker<'_> {
    fn push_unverifiable(&mut self, name: &str, item: &str, kind: MarginKind, at: f64) {
        self.entries.push(AssumptionEntry {
            name: name.into(),
            item: item.into(),
            status: CheckStatus::Unverifiable,
            satisfied: false,
            worst_point: at,
            margin: f64::NAN,
            kind,
            constant: None,
        });
    }

    fn push(&mut self, name: &str, item: &str, kind: MarginKind, worst: f64, margin: f64, constant: Option<f64>) {
        let satisfied = margin > 0.0;
        self.entries.push(AssumptionEntry {
            name: name.into(),
            item: item.into(),
            status: if satisfied {
                CheckStatus::Satisfied
            } else {
                CheckStatus::Violated
            },
            satisfied,
            worst_point: worst,
            margin,
            kind,
            constant,
        });
    }

    /// `slack(ξ) > 0` at every sample.
    fn pointwise(&mut self, name: &str, item: &str, slack: impl Fn(f64) -> f64) {
        let mut worst = (f64::INFINITY, self.xs[0]);
        for &x in self.xs {
            let s = slack(x);
            if !s.is_finite() {
                return self.push_unverifiable(name, item, MarginKind::Infimum, x);
            }
            if s < worst.0 {
                worst = (s, x);
            }
        }
        self.push(name, item, MarginKind::Infimum, worst.1, worst.0, None);
    }

    fn ratio(&mut self, name: &str, item: &str, end: End, ratio: impl Fn(f64) -> f64) {
        match tail_test(self.xs, end, &ratio) {
            Ok((worst, margin, constant)) => {
                self.push(name, item, MarginKind::TailGrowth, worst, margin, Some(constant))
            }
            Err(x) => self.push_unverifiable(name, item, MarginKind::TailGrowth, x),
        }
    }
}

/// Returns `(worst point, margin, max ratio)`; `Err(x)` on non-finite ratio.
fn tail_test(xs: &[f64], end: End, ratio: &dyn Fn(f64) -> f64) -> std::result::Result<(f64, f64, f64), f64> {
    let mut rs = Vec::with_capacity(xs.len());
    for &x in xs {
        let r = ratio(x);
        if !r.is_finite() || r < 0.0 {
            return Err(x);
        }
        rs.push(r);
    }
    let n = xs.len();
    // the outer tenth of the samples on each side is the "tail"
    let tail = (n / 10).max(1);
    let mut best = (f64::INFINITY, xs[0]);
    let interior_max = rs[tail..n - tail].iter().cloned().fold(0.0, f64::max);
    let scale = interior_max.max(1e-300);
    if matches!(end, End::Zero | End::Both) {
        let edge = rs[..tail].iter().cloned().fold(0.0, f64::max);
        let m = (TAIL_FACTOR * scale - edge) / scale;
        if m < best.0 {
            best = (m, xs[0]);
        }
    }
    if matches!(end, End::Infinity | End::Both) {
        let edge = rs[n - tail..].iter().cloned().fold(0.0, f64::max);
        let m = (TAIL_FACTOR * scale - edge) / scale;
        if m < best.0 {
            best = (m, xs[n - 1]);
        }
    }
    let constant = rs.iter().cloned().fold(0.0, f64::max);
    Ok((best.1, best.0, constant))
}

/// Checks every sampleable coefficient condition on a log-spaced grid over
/// `range` with `p = 2`.
pub fn verify_assumptions(cs: &CoefficientSet, f1: f64, range: [f64; 2], n_samples: usize) -> Result<AssumptionReport> {
    verify_assumptions_p(cs, f1, range, n_samples, 2.0)
}

pub fn verify_assumptions_p(
    cs: &CoefficientSet,
    f1: f64,
    range: [f64; 2],
    n_samples: usize,
    p: f64,
) -> Result<AssumptionReport> {
    let [lo, hi] = range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(invalid("range", format!("{range:?} must satisfy 0 < lo < hi < inf")));
    }
    if n_samples < 100 {
        return Err(invalid("n_samples", format!("{n_samples} < 100")));
    }
    if !(p >= 2.0) {
        return Err(invalid("p", format!("{p} < 2")));
    }
    let xs = log_grid(lo, hi, n_samples);
    let mut c = Checker {
        xs: &xs,
        entries: Vec::new(),
    };
    let phi: &Phi = &cs.phi;
    let sigma = cs.sigma;
    let nu = cs.nu;
    let f = cs.reaction;
    let m = cs.growth_exponent;
    let th_p = theta(phi, p, hi);
    let th_2 = theta(phi, 2.0, hi);
    let eff = cs.epsilon * f1;

    let phi0 = phi.value(0.0);
    c.pointwise("phi_monotone", "Phi(0) = 0 and Phi' > 0", |x| {
        if phi0 != 0.0 {
            -phi0.abs()
        } else {
            phi.deriv(x)
        }
    });
    c.ratio(
        "sigma_origin",
        "limsup_{xi -> 0} sigma^2(xi) / xi < inf",
        End::Zero,
        |x| sigma.value(x).powi(2) / x,
    );
    c.ratio(
        "sigma_growth",
        "sup_{xi' <= xi} sigma^2(xi') <= c (1 + xi + sigma^2(xi))",
        End::Infinity,
        {
            let xs = xs.clone();
            move |x| {
                let sup = xs
                    .iter()
                    .take_while(|&&y| y <= x)
                    .map(|&y| sigma.value(y).powi(2))
                    .fold(sigma.value(0.0).powi(2), f64::max);
                sup / (1.0 + x + sigma.value(x).powi(2))
            }
        },
    );
    c.ratio(
        "nu_growth",
        "sup_{xi' <= xi} |nu(xi')| <= c (1 + xi + |nu(xi)|)",
        End::Infinity,
        {
            let xs = xs.clone();
            move |x| {
                let sup = xs
                    .iter()
                    .take_while(|&&y| y <= x)
                    .map(|&y| nu.norm(y))
                    .fold(nu.norm(0.0), f64::max);
                sup / (1.0 + x + nu.norm(x))
            }
        },
    );
    c.ratio("phi_growth", "Phi(xi) <= c (1 + xi^m)", End::Infinity, |x| {
        phi.value(x) / (1.0 + x.powf(m))
    });
    c.ratio(
        "flux_growth",
        "|nu(xi)| + Phi'(xi) <= c (1 + xi + Theta_p(xi)^2)",
        End::Both,
        |x| (nu.norm(x) + phi.deriv(x)) / (1.0 + x + th_p.eval(x).powi(2)),
    );

    // the two alternative modulus conditions
    let mut alternatives = Vec::new();
    let mut best_a: Option<(f64, f64, f64, f64)> = None;
    for theta_exp in [0.0, 0.125, 0.25, 0.375, 0.5] {
        let r = |x: f64| x.powf(-(p - 2.0) / 2.0) * phi.deriv(x).powf(-0.5) / x.powf(theta_exp).max(1e-300);
        if let Ok((w, mg, k)) = tail_test(&xs, End::Both, &r) {
            if best_a.is_none_or(|b| mg > b.1) {
                best_a = Some((w, mg, k, theta_exp));
            }
        }
    }
    match best_a {
        Some((w, mg, k, te)) => {
            c.push(
                "modulus_a",
                &format!("xi^(-(p-2)/2) Phi'(xi)^(-1/2) <= c xi^theta (best theta = {te})"),
                MarginKind::TailGrowth,
                w,
                mg,
                Some(k),
            );
            if mg > 0.0 {
                alternatives.push(format!("a (theta = {te})"));
            }
        }
        None => c.push_unverifiable(
            "modulus_a",
            "xi^(-(p-2)/2) Phi'(xi)^(-1/2) <= c xi^theta",
            MarginKind::TailGrowth,
            lo,
        ),
    }
    {
        // |xi - xi'|^q <= c |Theta_p(xi) - Theta_p(xi')|^2 with q = 2, over all sampled pairs
        let th: Vec<f64> = xs.iter().map(|&x| th_p.eval(x)).collect();
        let n = xs.len();
        let tail = (n / 10).max(1);
        let mut worst = (0.0f64, lo);
        let mut reference = 0.0f64;
        let mut finite = true;
        for i in 0..n {
            for j in i + 1..n {
                let r = (xs[j] - xs[i]).powi(2) / (th[j] - th[i]).powi(2);
                if !r.is_finite() {
                    finite = false;
                }
                if r > worst.0 {
                    worst = (r, xs[j]);
                }
                if i >= tail && j < n - tail {
                    reference = reference.max(r);
                }
            }
        }
        if finite {
            let margin = (TAIL_FACTOR * reference - worst.0) / reference.max(1e-300);
            c.push(
                "modulus_b",
                "|xi - xi'|^2 <= c |Theta_p(xi) - Theta_p(xi')|^2",
                MarginKind::TailGrowth,
                worst.1,
                margin,
                Some(worst.0),
            );
            if margin > 0.0 {
                alternatives.push("b (q = 2)".into());
            }
        } else {
            c.push_unverifiable(
                "modulus_b",
                "|xi - xi'|^2 <= c |Theta_p(xi) - Theta_p(xi')|^2",
                MarginKind::TailGrowth,
                lo,
            );
        }
    }

    c.ratio(
        "sigma_theta",
        "sigma^2 <= c (1 + xi + Theta_2^2) and xi^(p-2) sigma^2 <= c (1 + xi + Theta_p^2)",
        End::Infinity,
        |x| {
            let s2 = sigma.value(x).powi(2);
            let a = s2 / (1.0 + x + th_2.eval(x).powi(2));
            let b = x.powf(p - 2.0) * s2 / (1.0 + x + th_p.eval(x).powi(2));
            a.max(b)
        },
    );
    c.ratio(
        "sigma_derivative_theta",
        "sigma'^4 / Phi' + (sigma sigma')^2 + Phi' <= c (1 + xi + Theta_p^2) away from 0",
        End::Infinity,
        |x| {
            let d = sigma.deriv(x);
            let lhs = d.powi(4) / phi.deriv(x) + (sigma.value(x) * d).powi(2) + phi.deriv(x);
            lhs / (1.0 + x + th_p.eval(x).powi(2))
        },
    );

    let f0 = f.value(0.0);
    c.push(
        "drift_origin",
        "f(0) = 0",
        MarginKind::Infimum,
        0.0,
        if f0 == 0.0 { 1.0 } else { -f0.abs() },
        None,
    );
    {
        let lip = f.lip();
        let mut worst = (f64::INFINITY, lo);
        for (i, &x) in xs.iter().enumerate() {
            let growth = lip * (1.0 + x) - f.value(x).abs();
            if growth < worst.0 {
                worst = (growth, x);
            }
            for &y in &xs[i + 1..] {
                let one_sided = lip + (f.value(y) - f.value(x)) * (y - x) / (y - x).powi(2);
                if one_sided < worst.0 {
                    worst = (one_sided, y);
                }
            }
        }
        // equality is allowed; shift by a relative roundoff allowance
        let margin = worst.0 + 1e-12 * lip.max(1.0);
        c.push(
            "drift_lipschitz",
            "-(f(xi) - f(xi'))(xi - xi') <= L |xi - xi'|^2 and |f(xi)| <= L (1 + xi)",
            MarginKind::Infimum,
            worst.1,
            margin,
            Some(lip),
        );
    }

    let coercivity = |x: f64| phi.deriv(x) - 0.5 * eff * sigma.deriv(x).powi(2);
    c.pointwise("coercivity", "Phi' - (eps F1 / 2)(sigma')^2 >= c1 > 0", coercivity);
    let c1 = c.entries.last().map(|e| e.margin).unwrap_or(f64::NAN);
    c.ratio(
        "second_derivative_decay",
        "|sigma''| + |Phi''| <= c (1 + Phi)^(-2)",
        End::Both,
        |x| (sigma.second(x).abs() + phi.second(x).abs()) * (1.0 + phi.value(x)).powi(2) + 1e-300,
    );

    Ok(AssumptionReport {
        entries: c.entries,
        coercivity_constant: c1,
        checked_range: range,
        p,
        modulus_alternatives: alternatives,
    })
}
