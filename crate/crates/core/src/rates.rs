//! Age-dependent transition-rate families and the distributional objects
//! derived from them: holding-time law, conditional jump probabilities,
//! semi-Markov kernel and the embedded chain.
//!
//! A [`RateSpec`] is a polynomial family `Λ(y) = Λ⁽¹⁾ + y Λ⁽²⁾ + ... + yⁿ Λ⁽ⁿ⁺¹⁾`
//! of k×k rate matrices, frozen at an age cap so that row rates stay bounded
//! while the cumulative hazard still diverges. States are 0-based.

use crate::error::{Error, ValidationError};
use crate::numeric::{poly, quad};
use crate::scalar::Real;

/// Polynomial age-dependent transition-rate family, validated and frozen
/// beyond `y_cap`. Immutable after construction; all queries are pure.
#[derive(Debug, Clone)]
pub struct RateSpec<F> {
    k: usize,
    degree: usize,
    /// coeff[p][i][j] with the diagonal derived, stored row-major.
    coeff: Vec<F>,
    y_cap: F,
    /// Row exit rates at the cap (rates are constant past the cap).
    row_at_cap: Vec<F>,
    /// Cumulative hazard at the cap.
    hazard_at_cap: Vec<F>,
    /// max_i sup_{y} Σ_{j≠i} λ_ij(y); the thinning bound.
    c: F,
}

impl<F: Real> RateSpec<F> {
    /// Builds a spec from `degree + 1` coefficient matrices (row-major, each
    /// k×k with rows summing to zero) and an age cap.
    pub fn new(matrices: &[Vec<Vec<F>>], y_cap: F) -> Result<Self, Error> {
        let mut problems = Vec::new();
        if matrices.is_empty() {
            return Err(Error::validation(ValidationError::Shape(
                "at least one coefficient matrix is required".into(),
            )));
        }
        let k = matrices[0].len();
        if k < 2 {
            problems.push(ValidationError::Shape(format!(
                "need at least 2 states, got {k}"
            )));
        }
        if !(y_cap > F::zero()) || !y_cap.is_finite() {
            problems.push(ValidationError::Parameter {
                name: "y_cap",
                value: y_cap.as_f64(),
            });
        }
        for (p, m) in matrices.iter().enumerate() {
            if m.len() != k || m.iter().any(|row| row.len() != k) {
                problems.push(ValidationError::Shape(format!(
                    "coefficient matrix {p} is not {k}x{k}"
                )));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }

        let degree = matrices.len() - 1;
        let mut coeff = vec![F::zero(); (degree + 1) * k * k];
        for (p, m) in matrices.iter().enumerate() {
            for i in 0..k {
                let mut row_sum = F::zero();
                let mut scale = F::zero();
                for j in 0..k {
                    row_sum = row_sum + m[i][j];
                    scale = scale.max(m[i][j].abs());
                }
                if row_sum.abs() > F::of(1e-9) * scale.max(F::one()) {
                    problems.push(ValidationError::RowSumNonzero {
                        power: p,
                        row: i,
                        sum: row_sum.as_f64(),
                    });
                }
                for j in 0..k {
                    if i != j {
                        coeff[(p * k + i) * k + j] = m[i][j];
                    }
                }
            }
        }

        let mut spec = Self {
            k,
            degree,
            coeff,
            y_cap,
            row_at_cap: vec![F::zero(); k],
            hazard_at_cap: vec![F::zero(); k],
            c: F::zero(),
        };

        // Off-diagonal sign check on [0, y_cap]; a negative rate anywhere is a
        // construction error, never a runtime clamp.
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                let cs = spec.coeff_vec(i, j);
                let (min, at) = poly::min_on_interval(&cs, y_cap);
                if min < F::zero() {
                    let power = cs
                        .iter()
                        .position(|&c| c < F::zero())
                        .unwrap_or(0);
                    problems.push(ValidationError::NegativeRate {
                        from: i,
                        to: j,
                        power,
                        coeff: cs[power].as_f64(),
                        age: at.as_f64(),
                        rate: min.as_f64(),
                    });
                }
            }
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }

        let mut c = F::zero();
        for i in 0..k {
            let row = spec.row_coeff(i);
            spec.row_at_cap[i] = poly::eval(&row, y_cap);
            spec.hazard_at_cap[i] = poly::eval_integral(&row, y_cap);
            c = c.max(poly::max_on_interval(&row, y_cap));
            if !(spec.row_at_cap[i] > F::zero()) {
                problems.push(ValidationError::AbsorbingState { state: i });
            }
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        spec.c = c;
        Ok(spec)
    }

    /// Number of states k.
    pub fn state_count(&self) -> usize {
        self.k
    }

    /// Polynomial degree n of the family.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Age beyond which rates are frozen.
    pub fn age_cap(&self) -> F {
        self.y_cap
    }

    /// Uniform bound on the exit rates, `max_i sup_y Σ_{j≠i} λ_ij(y)`.
    pub fn rate_bound(&self) -> F {
        self.c
    }

    fn check_state(&self, i: usize) -> Result<(), Error> {
        if i >= self.k {
            Err(Error::StateIndex {
                index: i,
                count: self.k,
            })
        } else {
            Ok(())
        }
    }

    /// Ascending coefficients of the off-diagonal polynomial λ_ij.
    fn coeff_vec(&self, i: usize, j: usize) -> Vec<F> {
        (0..=self.degree)
            .map(|p| self.coeff[(p * self.k + i) * self.k + j])
            .collect()
    }

    /// Ascending coefficients of the exit-rate polynomial Σ_{j≠i} λ_ij.
    fn row_coeff(&self, i: usize) -> Vec<F> {
        (0..=self.degree)
            .map(|p| {
                (0..self.k)
                    .filter(|&j| j != i)
                    .map(|j| self.coeff[(p * self.k + i) * self.k + j])
                    .fold(F::zero(), |a, b| a + b)
            })
            .collect()
    }

    #[inline]
    fn clamp_age(&self, y: F) -> F {
        if y > self.y_cap {
            self.y_cap
        } else {
            y
        }
    }

    /// λ_ij(y): for i == j the negative exit rate. Rates freeze at the cap.
    pub fn rate(&self, i: usize, j: usize, y: F) -> Result<F, Error> {
        self.check_state(i)?;
        self.check_state(j)?;
        Ok(self.rate_unchecked(i, j, y))
    }

    #[inline]
    pub(crate) fn rate_unchecked(&self, i: usize, j: usize, y: F) -> F {
        if i == j {
            return -self.exit_rate(i, y);
        }
        let y = self.clamp_age(y);
        let mut acc = F::zero();
        for p in (0..=self.degree).rev() {
            acc = acc * y + self.coeff[(p * self.k + i) * self.k + j];
        }
        acc
    }

    /// Exit rate Σ_{j≠i} λ_ij(y), frozen past the cap.
    #[inline]
    pub fn exit_rate(&self, i: usize, y: F) -> F {
        let y = self.clamp_age(y);
        let mut acc = F::zero();
        for p in (0..=self.degree).rev() {
            let mut row = F::zero();
            for j in 0..self.k {
                if j != i {
                    row = row + self.coeff[(p * self.k + i) * self.k + j];
                }
            }
            acc = acc * y + row;
        }
        acc
    }

    /// Cumulative hazard `Λ_i(y) = ∫_0^y Σ_{j≠i} λ_ij(v) dv`.
    ///
    /// Closed-form polynomial integral up to the cap plus a linear tail, so it
    /// is exact, non-decreasing and diverges as `y → ∞`.
    pub fn cumulative_hazard(&self, i: usize, y: F) -> Result<F, Error> {
        self.check_state(i)?;
        Ok(self.cumulative_hazard_unchecked(i, y))
    }

    #[inline]
    pub(crate) fn cumulative_hazard_unchecked(&self, i: usize, y: F) -> F {
        if y <= self.y_cap {
            let row = self.row_coeff(i);
            poly::eval_integral(&row, y.max(F::zero()))
        } else {
            self.hazard_at_cap[i] + self.row_at_cap[i] * (y - self.y_cap)
        }
    }

    /// Holding-time CDF `F(y|i) = 1 - exp(-Λ_i(y))`.
    pub fn holding_cdf(&self, i: usize, y: F) -> Result<F, Error> {
        self.check_state(i)?;
        Ok(F::one() - (-self.cumulative_hazard_unchecked(i, y)).exp())
    }

    /// Holding-time density `f(y|i) = Σ_{j≠i} λ_ij(y) · exp(-Λ_i(y))`.
    pub fn holding_pdf(&self, i: usize, y: F) -> Result<F, Error> {
        self.check_state(i)?;
        Ok(self.exit_rate(i, y) * (-self.cumulative_hazard_unchecked(i, y)).exp())
    }

    /// Conditional survival ratio `(1 - F(y+dy|i)) / (1 - F(y|i))`, evaluated
    /// as `exp(-(Λ(y+dy) - Λ(y)))` so it never degenerates to 0/0.
    #[inline]
    pub fn survival_ratio(&self, i: usize, y: F, dy: F) -> F {
        let a = self.cumulative_hazard_unchecked(i, y);
        let b = self.cumulative_hazard_unchecked(i, y + dy);
        (-(b - a)).exp()
    }

    /// Conditional density ratio `f(y+dy|i) / (1 - F(y|i))`; the hazard form
    /// of the same quantity, exact for any age.
    #[inline]
    pub fn hazard_density_ratio(&self, i: usize, y: F, dy: F) -> F {
        self.exit_rate(i, y + dy) * self.survival_ratio(i, y, dy)
    }

    /// Conditional jump distribution `p_ij(y)` at age y.
    ///
    /// When the exit rate vanishes the mass sits on `j == i`, matching the
    /// indicator convention that keeps the matrix stochastic for every y.
    pub fn jump_prob(&self, i: usize, j: usize, y: F) -> Result<F, Error> {
        self.check_state(i)?;
        self.check_state(j)?;
        let row = self.exit_rate(i, y);
        if row > F::zero() {
            if i == j {
                Ok(F::zero())
            } else {
                Ok(self.rate_unchecked(i, j, y) / row)
            }
        } else {
            Ok(if i == j { F::one() } else { F::zero() })
        }
    }

    /// Semi-Markov kernel `Q_ij(y) = ∫_0^y exp(-Λ_i(s)) λ_ij(s) ds`, i ≠ j,
    /// by adaptive Simpson quadrature (absolute tolerance 1e-10).
    pub fn kernel(&self, i: usize, j: usize, y: F) -> Result<F, Error> {
        self.kernel_with_tol(i, j, y, F::of(1e-10))
    }

    fn kernel_with_tol(&self, i: usize, j: usize, y: F, tol: F) -> Result<F, Error> {
        self.check_state(i)?;
        self.check_state(j)?;
        if i == j {
            return Err(Error::Argument(
                "kernel is defined for distinct states".into(),
            ));
        }
        if y <= F::zero() {
            return Ok(F::zero());
        }
        let f = |s: F| {
            (-self.cumulative_hazard_unchecked(i, s)).exp() * self.rate_unchecked(i, j, s)
        };
        quad::adaptive_simpson(&f, F::zero(), y, tol)
    }

    /// Age at which every state's survival factor `exp(-Λ_i)` drops below 1e-12;
    /// used as the finite stand-in for `y = ∞`.
    pub fn infinity_proxy(&self) -> F {
        let target = F::of(-(1e-12f64.ln()) + 1e-6); // ≈ 27.631
        let mut y = self.y_cap;
        for i in 0..self.k {
            let have = self.hazard_at_cap[i];
            let need = if have >= target {
                // already past the target inside the cap: find it by bisection
                self.y_cap
            } else {
                self.y_cap + (target - have) / self.row_at_cap[i]
            };
            y = y.max(need);
        }
        y
    }

    /// Embedded jump chain `p̃_ij = ∫_0^∞ p_ij(y) dF_i(y)` and whether its
    /// support graph is irreducible.
    pub fn embedded_chain(&self) -> Result<EmbeddedChain<F>, Error> {
        let proxy = self.infinity_proxy();
        let k = self.k;
        let mut matrix = vec![vec![F::zero(); k]; k];
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    matrix[i][j] = self.kernel_with_tol(i, j, proxy, F::of(1e-12))?;
                }
            }
        }
        // reachability closure on the support graph
        let mut reach = vec![vec![false; k]; k];
        for i in 0..k {
            for j in 0..k {
                reach[i][j] = i == j || matrix[i][j] > F::of(1e-14);
            }
        }
        for m in 0..k {
            for i in 0..k {
                for j in 0..k {
                    if reach[i][m] && reach[m][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
        let irreducible = reach.iter().all(|row| row.iter().all(|&r| r));
        Ok(EmbeddedChain { matrix, irreducible })
    }
}

/// Embedded discrete-time chain of the semi-Markov process.
#[derive(Debug, Clone)]
pub struct EmbeddedChain<F> {
    /// Row-stochastic k×k matrix of jump destinations.
    pub matrix: Vec<Vec<F>>,
    /// True when every state reaches every other through positive-mass edges.
    pub irreducible: bool,
}
