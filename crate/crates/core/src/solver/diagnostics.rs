use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSet;
use crate::grid::Grid;

/// Shifted entropy density `ξ log ξ − ξ + 1 ≥ 0`, zero at `ξ = 1`.
#[inline]
pub fn entropy_density(xi: f64) -> f64 {
    if xi <= 0.0 {
        1.0
    } else {
        xi * xi.ln() - xi + 1.0
    }
}

/// `Ψ₁(ρ) = ∫ (ρ log ρ − ρ + 1)`.
pub fn entropy(grid: &Grid, rho: &[f64]) -> f64 {
    grid.cell_volume() * rho.iter().map(|&x| entropy_density(x)).sum::<f64>()
}

/// `Ψ₂(ρ) = ∫ |∇√ρ|²`.
pub fn fisher(grid: &Grid, rho: &[f64]) -> f64 {
    let r: Vec<f64> = rho.iter().map(|&x| x.max(0.0).sqrt()).collect();
    grid.dirichlet_energy(&r)
}

/// `∫ |∇Φ(ρ)|²`.
pub fn phi_energy(grid: &Grid, cs: &CoefficientSet, rho: &[f64]) -> f64 {
    let v: Vec<f64> = rho.iter().map(|&x| cs.phi.value(x)).collect();
    grid.dirichlet_energy(&v)
}

/// Time series recorded at every save point.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub mass: Vec<f64>,
    /// `Ψ₁`
    pub entropy: Vec<f64>,
    /// `Ψ₂`
    pub fisher: Vec<f64>,
    /// `∫ |∇Φ(ρ)|²`
    pub phi_energy: Vec<f64>,
    /// `∫ σ²(ρ)`
    pub sigma_sq: Vec<f64>,
    /// `∫ |ν(ρ)|`
    pub nu_abs: Vec<f64>,
    /// `∫ f(ρ)`
    pub reaction: Vec<f64>,
    /// `∫ |∇f(ρ)|`
    pub reaction_tv: Vec<f64>,
}

impl Diagnostics {
    pub fn record(&mut self, grid: &Grid, cs: &CoefficientSet, rho: &[f64]) {
        let vol = grid.cell_volume();
        let clamp = |x: f64| x.max(0.0);
        self.mass.push(grid.integrate(rho));
        self.entropy.push(entropy(grid, rho));
        self.fisher.push(fisher(grid, rho));
        self.phi_energy.push(phi_energy(grid, cs, rho));
        self.sigma_sq
            .push(vol * rho.iter().map(|&x| cs.sigma.value(clamp(x)).powi(2)).sum::<f64>());
        self.nu_abs
            .push(vol * rho.iter().map(|&x| cs.nu.norm(clamp(x))).sum::<f64>());
        self.reaction
            .push(vol * rho.iter().map(|&x| cs.reaction.value(clamp(x))).sum::<f64>());
        if cs.reaction.is_zero() {
            self.reaction_tv.push(0.0);
        } else {
            let f: Vec<f64> = rho.iter().map(|&x| cs.reaction.value(clamp(x))).collect();
            self.reaction_tv.push(grid.total_variation(&f));
        }
    }

    /// Named series in a fixed order, for CSV output and digests.
    pub fn named(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("mass", &self.mass),
            ("entropy", &self.entropy),
            ("fisher", &self.fisher),
            ("phi_energy", &self.phi_energy),
            ("sigma_sq", &self.sigma_sq),
            ("nu_abs", &self.nu_abs),
            ("reaction", &self.reaction),
            ("reaction_tv", &self.reaction_tv),
        ]
    }
}
