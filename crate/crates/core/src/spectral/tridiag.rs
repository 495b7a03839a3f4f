//! Symmetric tridiagonal eigenvalue extraction.
//!
//! The solver is bisection on Sturm sequences: `count_below(x)` returns the
//! number of eigenvalues strictly below `x` by counting negative pivots of the
//! LDLᵀ factorization of `T - x·I`, and each eigenvalue is located by
//! bisecting a Gershgorin interval on that count. The method is deterministic
//! (no starting-vector luck, no iteration-order dependence), extracts
//! eigenvalues independently of each other, and is robust for the stiff
//! matrices produced by fine grids. A final inverse-iteration step polishes
//! the bisection value with a Rayleigh quotient, guarded so it can never leave
//! the bisection bracket.

use super::SpectralError;

/// Pivot guard: pivots smaller than this in magnitude are replaced so the
/// Sturm count cannot divide by zero. Matches the usual bisection practice.
const PIVOT_FLOOR: f64 = 1e-300;

/// Relative interval width below which bisection must have converged; wider
/// final intervals are reported as `ConvergenceFailure`.
const WIDTH_LIMIT_REL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub(crate) struct SymTridiag {
    pub diag: Vec<f64>,
    /// Off-diagonal entries; `off[i]` couples rows i and i+1.
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn order(&self) -> usize {
        self.diag.len()
    }

    /// Inclusive interval guaranteed to contain the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.order();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x` (Sturm count via LDLᵀ pivots).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.order() {
            let sq = if i > 0 {
                self.off[i - 1] * self.off[i - 1]
            } else {
                0.0
            };
            d = (self.diag[i] - x) - sq / d;
            if d.abs() < PIVOT_FLOOR {
                d = -PIVOT_FLOOR;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The k-th smallest eigenvalue (k is 0-based).
    pub fn eigenvalue(&self, k: usize) -> Result<f64, SpectralError> {
        let n = self.order();
        assert!(k < n, "eigenvalue index {k} out of range for order {n}");
        let (glo, ghi) = self.gershgorin();
        let scale = glo.abs().max(ghi.abs()).max(1.0);
        let mut lo = glo;
        let mut hi = ghi + 1e-12 * scale; // make the top bound strict
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break; // no representable midpoint left
            }
            if self.count_below(mid) <= k {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let width = hi - lo;
        if width > WIDTH_LIMIT_REL * scale {
            return Err(SpectralError::ConvergenceFailure {
                width,
                limit: WIDTH_LIMIT_REL * scale,
            });
        }
        Ok(self.refine(lo, hi))
    }

    /// All eigenvalues strictly below `bound`, ascending.
    pub fn eigenvalues_below(&self, bound: f64) -> Result<Vec<f64>, SpectralError> {
        let count = self.count_below(bound);
        (0..count).map(|k| self.eigenvalue(k)).collect()
    }

    /// One step of inverse iteration from the bisection interval [lo, hi],
    /// followed by a Rayleigh-quotient update. The refined value is accepted
    /// only if it stays inside (a slightly widened copy of) the bracket, so
    /// refinement can adjust the last few bits but never move to a different
    /// eigenvalue.
    fn refine(&self, lo: f64, hi: f64) -> f64 {
        let n = self.order();
        let shift = 0.5 * (lo + hi);
        if n == 1 {
            return self.diag[0];
        }
        let Some(factor) = PivotedLu::new(self, shift) else {
            return shift;
        };
        // Deterministic start vector; the small index-dependent ripple avoids
        // accidental orthogonality to the target eigenvector.
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i % 7) as f64)).collect();
        for _ in 0..2 {
            factor.solve(&mut x);
            let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            if !norm.is_finite() || norm == 0.0 {
                return shift;
            }
            for a in x.iter_mut() {
                *a /= norm;
            }
        }
        let rayleigh = self.quadratic_form(&x);
        let slack = (hi - lo).max(1e-15 * (1.0 + shift.abs()));
        if rayleigh.is_finite() && rayleigh >= lo - slack && rayleigh <= hi + slack {
            rayleigh
        } else {
            shift
        }
    }

    /// xᵀ T x for a unit vector x.
    fn quadratic_form(&self, x: &[f64]) -> f64 {
        let n = self.order();
        let mut acc = 0.0;
        for i in 0..n {
            acc += self.diag[i] * x[i] * x[i];
            if i + 1 < n {
                acc += 2.0 * self.off[i] * x[i] * x[i + 1];
            }
        }
        acc
    }
}

/// Partial-pivoting LU factorization of T - shift·I for a symmetric
/// tridiagonal T. Row swaps introduce a second superdiagonal; that is the
/// whole band growth, so the factorization stays O(n).
struct PivotedLu {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper1: Vec<f64>,
    upper2: Vec<f64>,
    swapped: Vec<bool>,
}

impl PivotedLu {
    fn new(t: &SymTridiag, shift: f64) -> Option<PivotedLu> {
        let n = t.order();
        let mut diag: Vec<f64> = t.diag.iter().map(|d| d - shift).collect();
        let mut upper1 = vec![0.0; n];
        let mut upper2 = vec![0.0; n];
        for i in 0..n - 1 {
            upper1[i] = t.off[i];
        }
        let mut lower = vec![0.0; n];
        let mut swapped = vec![false; n];
        for i in 0..n - 1 {
            let sub = t.off[i]; // entry (i+1, i) before elimination
            if sub.abs() > diag[i].abs() {
                // Swap rows i and i+1.
                swapped[i] = true;
                let (a, b) = (diag[i], upper1[i]);
                diag[i] = sub;
                upper1[i] = diag[i + 1];
                upper2[i] = if i + 2 < n { t.off[i + 1] } else { 0.0 };
                diag[i + 1] = b - (a / diag[i]) * upper1[i];
                if i + 2 < n {
                    upper1[i + 1] = t.off[i + 1] - (a / diag[i]) * upper2[i];
                }
                lower[i] = a / diag[i];
            } else {
                if diag[i].abs() < PIVOT_FLOOR {
                    diag[i] = PIVOT_FLOOR.copysign(diag[i]);
                }
                let m = sub / diag[i];
                lower[i] = m;
                diag[i + 1] -= m * upper1[i];
                // upper2[i] is zero in the unswapped case; nothing else changes.
            }
        }
        if diag[n - 1].abs() < PIVOT_FLOOR {
            diag[n - 1] = PIVOT_FLOOR.copysign(diag[n - 1]);
        }
        if diag.iter().any(|d| !d.is_finite()) {
            return None;
        }
        Some(PivotedLu {
            lower,
            diag,
            upper1,
            upper2,
            swapped,
        })
    }

    /// Solve (T - shift·I) x = b in place.
    fn solve(&self, b: &mut [f64]) {
        let n = self.diag.len();
        // Forward pass (apply the same row operations to b).
        for i in 0..n - 1 {
            if self.swapped[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= self.lower[i] * b[i];
        }
        // Back substitution against the 3-band upper factor.
        for i in (0..n).rev() {
            let mut acc = b[i];
            if i + 1 < n {
                acc -= self.upper1[i] * b[i + 1];
            }
            if i + 2 < n {
                acc -= self.upper2[i] * b[i + 2];
            }
            b[i] = acc / self.diag[i];
        }
    }
}
