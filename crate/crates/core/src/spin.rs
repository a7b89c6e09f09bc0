//! Spin-temperature statistics of an alkali ensemble.
//!
//! Under rapid spin exchange the single-atom density matrix is well
//! approximated by `ρ = exp(β F_z) / Z` over both hyperfine manifolds
//! `F = a = I + 1/2` and `F = b = I - 1/2`, with `β = ln[(1+P)/(1-P)]`.
//! The transverse spin variance of such a state sets the atomic shot
//! noise seen by a Faraday probe.
//!
//! All sums are evaluated with the stretched-state weight factored out,
//! i.e. with weights `r^(a-m)` where `r = (1-|P|)/(1+|P|)`. This is exact,
//! never overflows, and reaches the fully polarized limit (`r = 0`)
//! without special casing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nuclear spin of the atomic species, stored as `2I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct AtomSpec {
    twice_nuclear_spin: u32,
}

impl AtomSpec {
    /// 39K and 41K, `I = 3/2`.
    pub const POTASSIUM: AtomSpec = AtomSpec {
        twice_nuclear_spin: 3,
    };

    pub fn new(nuclear_spin: f64) -> Result<Self> {
        let twice = 2.0 * nuclear_spin;
        if !(twice.is_finite() && twice >= 1.0 && (twice - twice.round()).abs() < 1e-12) {
            return Err(Error::Domain(format!(
                "nuclear spin must be a positive half-integer, got {nuclear_spin}"
            )));
        }
        Ok(Self {
            twice_nuclear_spin: twice.round() as u32,
        })
    }

    pub fn from_twice(twice_nuclear_spin: u32) -> Result<Self> {
        if twice_nuclear_spin == 0 {
            return Err(Error::Domain("nuclear spin must be at least 1/2".into()));
        }
        Ok(Self { twice_nuclear_spin })
    }

    pub fn nuclear_spin(&self) -> f64 {
        f64::from(self.twice_nuclear_spin) / 2.0
    }

    /// Upper hyperfine manifold, `a = I + 1/2`.
    pub fn a(&self) -> f64 {
        self.nuclear_spin() + 0.5
    }

    /// Lower hyperfine manifold, `b = I - 1/2`.
    pub fn b(&self) -> f64 {
        self.nuclear_spin() - 0.5
    }

    /// Total number of ground-state sublevels, `2(2I+1)`.
    pub fn dimension(&self) -> usize {
        2 * (self.twice_nuclear_spin as usize + 1)
    }

    fn twice_a(&self) -> i64 {
        i64::from(self.twice_nuclear_spin) + 1
    }

    /// Visit every sublevel as `(2F, 2m)` over both manifolds.
    fn sublevels(&self) -> impl Iterator<Item = (i64, i64)> {
        let ta = self.twice_a();
        [ta, ta - 2]
            .into_iter()
            .flat_map(|tf| (0..=tf).map(move |k| (tf, -tf + 2 * k)))
    }
}

impl TryFrom<f64> for AtomSpec {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        AtomSpec::new(value)
    }
}

impl From<AtomSpec> for f64 {
    fn from(value: AtomSpec) -> f64 {
        value.nuclear_spin()
    }
}

/// Longitudinal polarization together with its spin-temperature parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinTemperature {
    pub polarization: f64,
    pub beta: f64,
}

impl SpinTemperature {
    pub fn new(polarization: f64) -> Result<Self> {
        Ok(Self {
            polarization,
            beta: beta_from_polarization(polarization)?,
        })
    }
}

/// Single-atom noise statistics at a given polarization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseStatistics {
    /// `⟨F_x²⟩` for one atom.
    pub variance_per_atom: f64,
    /// `Z(β)`; infinite at `|P| = 1`.
    pub partition_function: f64,
    pub ratio_to_unpolarized: f64,
}

/// `β = ln[(1+P)/(1-P)]`, evaluated as `2 atanh P`.
pub fn beta_from_polarization(polarization: f64) -> Result<f64> {
    if !(polarization.abs() < 1.0) {
        return Err(Error::Domain(format!(
            "spin temperature requires |P| < 1, got {polarization}"
        )));
    }
    Ok(2.0 * polarization.atanh())
}

/// `Z = Σ_{m=-a}^{a} e^{βm} + Σ_{m=-b}^{b} e^{βm}`.
pub fn partition_function(atom: AtomSpec, beta: f64) -> f64 {
    // factor out the largest exponent, e^{|β| a}
    let shift = beta.abs() * atom.a();
    let reduced: f64 = atom
        .sublevels()
        .map(|(_, tm)| (beta * tm as f64 / 2.0 - shift).exp())
        .sum();
    reduced * shift.exp()
}

/// Stretched-state-normalized sums `(Σ w, Σ w [F(F+1) - m²])`.
fn weighted_sums(atom: AtomSpec, polarization: f64) -> (f64, f64) {
    let p = polarization.abs();
    let r = (1.0 - p) / (1.0 + p);
    let ta = atom.twice_a();
    let mut z = 0.0;
    let mut num = 0.0;
    for (tf, tm) in atom.sublevels() {
        let w = r.powi(((ta - tm) / 2) as i32);
        let f = tf as f64 / 2.0;
        let m = tm as f64 / 2.0;
        z += w;
        num += w * (f * (f + 1.0) - m * m);
    }
    (z, num)
}

/// Transverse spin variance `⟨F_x²⟩` of a single atom in the spin-temperature
/// state with longitudinal polarization `P`. The collective variance of `N`
/// independent atoms is `N` times this value.
///
/// At `|P| = 1` only the stretched state survives and the result is `a/2`.
pub fn variance_per_atom(atom: AtomSpec, polarization: f64) -> Result<f64> {
    if !(polarization.abs() <= 1.0) {
        return Err(Error::Domain(format!(
            "polarization must satisfy |P| <= 1, got {polarization}"
        )));
    }
    let (z, num) = weighted_sums(atom, polarization);
    Ok(num / (2.0 * z))
}

/// Polarized-to-unpolarized atomic noise ratio.
pub fn noise_ratio(atom: AtomSpec, polarization: f64) -> Result<f64> {
    Ok(variance_per_atom(atom, polarization)? / variance_per_atom(atom, 0.0)?)
}

pub fn noise_statistics(atom: AtomSpec, polarization: f64) -> Result<NoiseStatistics> {
    let variance = variance_per_atom(atom, polarization)?;
    let partition = if polarization.abs() < 1.0 {
        partition_function(atom, beta_from_polarization(polarization)?)
    } else {
        f64::INFINITY
    };
    Ok(NoiseStatistics {
        variance_per_atom: variance,
        partition_function: partition,
        ratio_to_unpolarized: variance / variance_per_atom(atom, 0.0)?,
    })
}
