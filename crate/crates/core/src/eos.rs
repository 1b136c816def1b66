//! Ideal-gas closure in entropy/pressure variables.
//!
//! The state variables of the hydrodynamic part are entropy S and pressure p;
//! density and temperature are derived. With adiabatic exponent γ > 1, unit
//! specific heat, and the entropy normalized to vanish at ρ = p = 1:
//!
//! ```text
//!   ρ(S, p) = p^{1/γ} e^{−S/γ},      θ(S, p) = p / ((γ−1) ρ),
//!   a(S, p) = (1/ρ) ∂ρ/∂p = 1/(γ p),  b(S, p) = ρ θ = p/(γ−1).
//! ```
//!
//! `a` multiplies the material derivative of pressure in the evolution
//! equations, `b` the material derivative of entropy. The closure satisfies
//! the Gibbs relation θ dS = de + p d(1/ρ) identically with internal energy
//! e = θ; [`EosClosure::gibbs_residual`] measures it by finite differences as
//! an independent consistency probe.

use thiserror::Error;

use crate::field::ScalarField;

#[derive(Debug, Error, PartialEq)]
pub enum EosError {
    #[error("adiabatic exponent must exceed 1 (got {0})")]
    BadGamma(f64),
    #[error("pressure {value:.6e} at or below floor {floor:.1e}")]
    PressureFloor { value: f64, floor: f64 },
}

/// Closure parameters: adiabatic exponent and the positivity floors the
/// monitors enforce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EosClosure {
    pub gamma: f64,
    pub p_floor: f64,
    pub s_floor: f64,
}

impl EosClosure {
    pub fn new(gamma: f64, p_floor: f64, s_floor: f64) -> Result<Self, EosError> {
        if !(gamma > 1.0) {
            return Err(EosError::BadGamma(gamma));
        }
        Ok(EosClosure {
            gamma,
            p_floor,
            s_floor,
        })
    }

    /// Default laboratory closure: γ = 5/3, floors at 1e-8.
    pub fn monatomic() -> Self {
        EosClosure {
            gamma: 5.0 / 3.0,
            p_floor: 1e-8,
            s_floor: 1e-8,
        }
    }

    fn check_p(&self, p: f64) -> Result<(), EosError> {
        if p <= self.p_floor {
            return Err(EosError::PressureFloor {
                value: p,
                floor: self.p_floor,
            });
        }
        Ok(())
    }

    /// ρ(S, p) = p^{1/γ} e^{−S/γ}.
    pub fn density(&self, s: f64, p: f64) -> Result<f64, EosError> {
        self.check_p(p)?;
        Ok(p.powf(1.0 / self.gamma) * (-s / self.gamma).exp())
    }

    /// θ(S, p) = p / ((γ−1) ρ(S, p)).
    pub fn temperature(&self, s: f64, p: f64) -> Result<f64, EosError> {
        Ok(p / ((self.gamma - 1.0) * self.density(s, p)?))
    }

    /// a(S, p) = ρ_p/ρ = 1/(γ p): the coefficient of the pressure equation.
    pub fn coeff_a(&self, s: f64, p: f64) -> Result<f64, EosError> {
        let _ = s; // a is independent of entropy for this closure
        self.check_p(p)?;
        Ok(1.0 / (self.gamma * p))
    }

    /// b(S, p) = ρ θ = p/(γ−1): the coefficient of the entropy equation.
    pub fn coeff_b(&self, s: f64, p: f64) -> Result<f64, EosError> {
        let _ = s;
        self.check_p(p)?;
        Ok(p / (self.gamma - 1.0))
    }

    /// Adiabatic sound speed c² = γ p/ρ = 1/(a ρ).
    pub fn sound_speed(&self, s: f64, p: f64) -> Result<f64, EosError> {
        Ok((self.gamma * p / self.density(s, p)?).sqrt())
    }

    /// Defect of the Gibbs relation θ ΔS − Δe − p Δ(1/ρ) measured by central
    /// differences of step `h` along the S and p coordinate directions
    /// (internal energy e = θ for this closure). Exact closures give O(h²).
    pub fn gibbs_residual(&self, s: f64, p: f64, h: f64) -> Result<f64, EosError> {
        let along_s = self.gibbs_residual_along(s, p, [1.0, 0.0], h)?;
        let along_p = self.gibbs_residual_along(s, p, [0.0, 1.0], h)?;
        Ok(along_s.abs() + along_p.abs())
    }

    /// Directional Gibbs defect along `(dS, dp)`: the relation is evaluated
    /// on central divided differences, θ·S′ − e′ − p·(1/ρ)′, so an exact
    /// closure leaves only the O(h²) stencil defect. The zero direction gives
    /// exactly zero.
    pub fn gibbs_residual_along(
        &self,
        s: f64,
        p: f64,
        dir: [f64; 2],
        h: f64,
    ) -> Result<f64, EosError> {
        let (sp, pp) = (s + h * dir[0], p + h * dir[1]);
        let (sm, pm) = (s - h * dir[0], p - h * dir[1]);
        let theta = self.temperature(s, p)?;
        let d_s = dir[0]; // coordinate direction: the divided difference is exact
        let d_e = (self.temperature(sp, pp)? - self.temperature(sm, pm)?) / (2.0 * h);
        let d_inv_rho =
            (1.0 / self.density(sp, pp)? - 1.0 / self.density(sm, pm)?) / (2.0 * h);
        Ok(theta * d_s - d_e - p * d_inv_rho)
    }

    /// Pointwise density over a grid; fails on the first floor violation.
    pub fn density_field(&self, s: &ScalarField, p: &ScalarField) -> Result<ScalarField, EosError> {
        self.map_fields(s, p, |sv, pv, eos| eos.density(sv, pv))
    }

    pub fn coeff_a_field(&self, s: &ScalarField, p: &ScalarField) -> Result<ScalarField, EosError> {
        self.map_fields(s, p, |sv, pv, eos| eos.coeff_a(sv, pv))
    }

    pub fn coeff_b_field(&self, s: &ScalarField, p: &ScalarField) -> Result<ScalarField, EosError> {
        self.map_fields(s, p, |sv, pv, eos| eos.coeff_b(sv, pv))
    }

    fn map_fields(
        &self,
        s: &ScalarField,
        p: &ScalarField,
        f: impl Fn(f64, f64, &EosClosure) -> Result<f64, EosError>,
    ) -> Result<ScalarField, EosError> {
        assert_eq!(s.grid(), p.grid(), "grid mismatch");
        let sp = s.phys();
        let pp = p.phys();
        let mut out = Vec::with_capacity(sp.len());
        for (&sv, &pv) in sp.iter().zip(pp.iter()) {
            out.push(f(sv, pv, self)?);
        }
        let _ = (sp, pp);
        Ok(ScalarField::from_phys(s.grid(), out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_closed_forms() {
        let eos = EosClosure::monatomic();
        // Reference state.
        assert!((eos.density(0.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        // S = γ ln 2 halves the density at unit pressure.
        let g = eos.gamma;
        let got = eos.density(g * 2.0_f64.ln(), 1.0).unwrap();
        assert!((got - 0.5).abs() < 1e-14);
        // Generic point against the log-form evaluation (independent route).
        let eos2 = EosClosure::new(1.4, 1e-8, 1e-8).unwrap();
        let (s, p) = (0.3_f64, 2.0_f64);
        let symbolic = ((p.ln() - s) / 1.4).exp();
        let got = eos2.density(s, p).unwrap();
        assert!(
            ((got - symbolic) / symbolic).abs() < 1e-12,
            "density mismatch: {got} vs {symbolic}"
        );
    }

    #[test]
    fn temperature_closed_forms() {
        let eos = EosClosure::new(2.0, 1e-8, 1e-8).unwrap();
        // γ = 2: θ = p/ρ; at (S, p) = (0, 1): ρ = 1, θ = 1.
        assert!((eos.temperature(0.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        // Scaling p at fixed S = 0 and γ = 2: ρ = √p, θ = √p → θ(0, 4) = 2.
        assert!((eos.temperature(0.0, 4.0).unwrap() - 2.0).abs() < 1e-14);
        // Identity (γ−1) ρ θ = p across random states.
        let eos = EosClosure::monatomic();
        let mut x = 0.37_f64;
        for _ in 0..1000 {
            x = (x * 997.0).fract();
            let s = 2.0 * x;
            let p = 0.1 + 3.0 * ((x * 31.0).fract());
            let lhs = (eos.gamma - 1.0) * eos.density(s, p).unwrap() * eos.temperature(s, p).unwrap();
            assert!(((lhs - p) / p).abs() < 1e-12);
        }
    }

    #[test]
    fn coeff_a_matches_finite_differences() {
        let eos = EosClosure::monatomic();
        assert!((eos.coeff_a(0.0, 1.0).unwrap() - 3.0 / 5.0).abs() < 1e-14);
        let eos14 = EosClosure::new(1.4, 1e-8, 1e-8).unwrap();
        // 1/(γ p) at p = 2.5/1.4 → 1/2.5... spelled out: γ p = 1.4 · (2.5/1.4).
        assert!((eos14.coeff_a(1.0, 2.5 / 1.4).unwrap() - 1.0 / 2.5).abs() < 1e-14);
        // Central differences of ln ρ in p.
        let h = 1e-6;
        for (s, p) in [(0.0, 1.0), (0.4, 2.0), (-0.2, 0.7)] {
            let fd = (eos.density(s, p + h).unwrap() - eos.density(s, p - h).unwrap())
                / (2.0 * h * eos.density(s, p).unwrap());
            let a = eos.coeff_a(s, p).unwrap();
            assert!(
                ((fd - a) / a).abs() < 1e-6,
                "coeff_a mismatch at ({s}, {p}): {fd} vs {a}"
            );
        }
    }

    #[test]
    fn coeff_b_is_rho_theta() {
        let eos = EosClosure::monatomic();
        assert!((eos.coeff_b(0.0, 1.0).unwrap() - 1.5).abs() < 1e-14);
        let eos14 = EosClosure::new(1.4, 1e-8, 1e-8).unwrap();
        assert!((eos14.coeff_b(0.0, 2.4).unwrap() - 6.0).abs() < 1e-13);
        for (s, p) in [(0.1, 1.3), (0.8, 0.5)] {
            let rt = eos.density(s, p).unwrap() * eos.temperature(s, p).unwrap();
            let b = eos.coeff_b(s, p).unwrap();
            assert!(((rt - b) / b).abs() < 1e-13);
        }
    }

    #[test]
    fn gibbs_relation_holds_at_second_order() {
        let eos = EosClosure::monatomic();
        let r = eos.gibbs_residual(0.2, 1.5, 1e-4).unwrap();
        assert!(r <= 1e-7, "Gibbs residual too large: {r:.3e}");
        // Halving h quarters the residual (second-order closure defect of the
        // difference stencil, not of the closure itself).
        let r1 = eos.gibbs_residual(0.2, 1.5, 1e-3).unwrap();
        let r2 = eos.gibbs_residual(0.2, 1.5, 5e-4).unwrap();
        let order = (r1 / r2).log2();
        assert!(
            (order - 2.0).abs() < 0.2,
            "expected O(h²) defect, observed order {order:.3}"
        );
        // Zero direction → identically zero.
        let z = eos.gibbs_residual_along(0.2, 1.5, [0.0, 0.0], 1e-4).unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn floors_and_gamma_are_enforced() {
        assert_eq!(
            EosClosure::new(1.0, 1e-8, 1e-8).unwrap_err(),
            EosError::BadGamma(1.0)
        );
        let eos = EosClosure::monatomic();
        assert!(matches!(
            eos.density(0.0, 1e-9),
            Err(EosError::PressureFloor { .. })
        ));
    }
}
