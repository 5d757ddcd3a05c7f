//! Square-root evaluation of the Alice-reference/Bob state.
//!
//! Every quadrature is written as a combination of independent unit-variance
//! sources. A TMSV of variance `ν` contributes the squeezed sources
//! `λ± = ν ± √(ν²−1)` (with `λ− = 1/λ+` taken exactly), so determinants follow
//! from Cauchy–Binet sums of squared minors and never cancel. This keeps
//! near-unit symplectic eigenvalues accurate at `μ ~ 1e8` and large `ω`.

use crate::canonical::CanonicalForm;
use crate::error::{Error, Result};
use crate::gaussian::{decoupled_two_mode_spectrum, Mat2};

/// One quadrature (q or p) of the modes `a` (Alice's reference) and `B`,
/// expanded over four sources.
#[derive(Debug, Clone, Copy)]
struct QuadPair {
    a: [f64; 4],
    b: [f64; 4],
}

impl QuadPair {
    fn var_a(&self) -> f64 {
        self.a.iter().map(|x| x * x).sum()
    }

    fn var_b(&self) -> f64 {
        self.b.iter().map(|x| x * x).sum()
    }

    fn cov(&self) -> f64 {
        self.a.iter().zip(&self.b).map(|(x, y)| x * y).sum()
    }

    /// `var_a·var_b − cov²` as a sum of squared minors.
    fn det(&self) -> f64 {
        let mut d = 0.0;
        for i in 0..4 {
            for j in (i + 1)..4 {
                let m = self.a[i] * self.b[j] - self.a[j] * self.b[i];
                d += m * m;
            }
        }
        d
    }
}

/// Source amplitudes `(√(λ+/2), √(λ−/2))` of a TMSV of variance `nu`.
fn tmsv_amplitudes(nu: f64) -> (f64, f64) {
    let lp = nu + (nu * nu - 1.0).max(0.0).sqrt();
    ((0.5 * lp).sqrt(), (0.5 / lp).sqrt())
}

/// The two-mode state `aB` for a diagonal input ensemble `diag(x, y)` purified
/// by `a`, in factored form.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AliceBob {
    q: QuadPair,
    p: QuadPair,
}

impl AliceBob {
    pub(crate) fn new(form: &CanonicalForm, x: f64, y: f64) -> Result<Self> {
        let dilation = form.dilation()?;
        let t = dilation.transmission();
        let g = dilation.environment_coupling();
        if !is_diagonal(t) || !is_diagonal(g) {
            return Err(Error::Contract(
                "factored evaluation needs quadrature-diagonal transmission and coupling".into(),
            ));
        }
        let nu = (x * y).sqrt();
        let (kq, kp) = ((x / nu).sqrt(), (y / nu).sqrt());
        let (s, r) = tmsv_amplitudes(nu);
        let (se, re) = tmsv_amplitudes(form.omega());
        // sources: [alice squeezed +, alice squeezed −, env squeezed +, env squeezed −];
        // q_a = s n0 + r n1, q_A = k(s n0 − r n1), q_E = se m0 − re m1 (idler gets +);
        // p_a = r n0 + s n1, p_A = k(r n0 − s n1), p_E likewise with the env pair
        let q = QuadPair {
            a: [s, r, 0.0, 0.0],
            b: [t.get(0, 0) * kq * s, -t.get(0, 0) * kq * r, g.get(0, 0) * se, -g.get(0, 0) * re],
        };
        let p = QuadPair {
            a: [r, s, 0.0, 0.0],
            b: [t.get(1, 1) * kp * r, -t.get(1, 1) * kp * s, g.get(1, 1) * re, -g.get(1, 1) * se],
        };
        Ok(AliceBob { q, p })
    }

    /// `(V_B^q, V_B^p)`.
    pub(crate) fn bob_variances(&self) -> (f64, f64) {
        (self.q.var_b(), self.p.var_b())
    }

    /// Symplectic eigenvalues of `aB`, descending.
    pub(crate) fn spectrum(&self) -> Result<Vec<f64>> {
        let block = |x: &QuadPair| [x.var_a(), x.cov(), x.var_b()];
        decoupled_two_mode_spectrum(block(&self.q), block(&self.p), self.q.det(), self.p.det())
    }

    /// Largest variance entering the state, for rounding allowances.
    pub(crate) fn scale(&self) -> f64 {
        self.q.var_a().max(self.q.var_b()).max(self.p.var_a()).max(self.p.var_b())
    }

    /// Symplectic eigenvalue of `a` after homodyne detection of Bob's q (`true`)
    /// or p quadrature.
    pub(crate) fn after_homodyne(&self, on_q: bool) -> f64 {
        let (hit, other) = if on_q { (&self.q, &self.p) } else { (&self.p, &self.q) };
        (hit.det() / hit.var_b() * other.var_a()).sqrt()
    }

    /// Symplectic eigenvalue of `a` after heterodyne detection of `B`.
    pub(crate) fn after_heterodyne(&self) -> f64 {
        let cond = |x: &QuadPair| (x.det() + x.var_a()) / (x.var_b() + 1.0);
        (cond(&self.q) * cond(&self.p)).sqrt()
    }
}

fn is_diagonal(m: Mat2) -> bool {
    m.get(0, 1) == 0.0 && m.get(1, 0) == 0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::purified_alice_bob;
    use crate::gaussian::{condition_on_heterodyne, condition_on_homodyne, symplectic_spectrum, Quadrature};
    use approx::assert_relative_eq;

    fn forms() -> Vec<CanonicalForm> {
        vec![
            CanonicalForm::attenuation(0.3, 1.4).unwrap(),
            CanonicalForm::amplifier(1.8, 2.2).unwrap(),
            CanonicalForm::b1(1.3).unwrap(),
            CanonicalForm::a2(1.6).unwrap(),
            CanonicalForm::d(-0.4, 1.1).unwrap(),
        ]
    }

    #[test]
    fn matches_dense_state() {
        for form in forms() {
            for (x, y) in [(5.0, 5.0), (1.0, 7.0), (3.0, 1.0), (1.0, 1.0)] {
                let f = AliceBob::new(&form, x, y).unwrap();
                let dense = purified_alice_bob(&form, Mat2::diag(x, y)).unwrap();
                let b = dense.block(1, 1);
                let (bq, bp) = f.bob_variances();
                assert_relative_eq!(bq, b.get(0, 0), max_relative = 1e-12);
                assert_relative_eq!(bp, b.get(1, 1), max_relative = 1e-12);
                let want = symplectic_spectrum(&dense).unwrap();
                for (got, w) in f.spectrum().unwrap().iter().zip(want.values()) {
                    assert_relative_eq!(got.max(1.0), *w, max_relative = 1e-9);
                }
                let hq = symplectic_spectrum(&condition_on_homodyne(&dense, 1, Quadrature::Q).unwrap()).unwrap();
                assert_relative_eq!(f.after_homodyne(true).max(1.0), hq.values()[0], max_relative = 1e-9);
                let hp = symplectic_spectrum(&condition_on_homodyne(&dense, 1, Quadrature::P).unwrap()).unwrap();
                assert_relative_eq!(f.after_homodyne(false).max(1.0), hp.values()[0], max_relative = 1e-9);
                let het = symplectic_spectrum(&condition_on_heterodyne(&dense, 1).unwrap()).unwrap();
                assert_relative_eq!(f.after_heterodyne().max(1.0), het.values()[0], max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn pure_state_stays_pure_at_large_modulation() {
        // identity-like B1 with vacuum environment: a and B_q are perfectly
        // correlated, the q block has determinant exactly 1
        let form = CanonicalForm::b1(1.0).unwrap();
        let f = AliceBob::new(&form, 1e12, 1e12).unwrap();
        assert_relative_eq!(f.after_homodyne(true), 1.0, max_relative = 1e-9);
        assert_relative_eq!(f.q.det(), 1.0, max_relative = 1e-9);
    }
}
