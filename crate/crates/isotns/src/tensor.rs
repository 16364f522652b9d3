//! W-matrices, the plumbing construction and the parameterized paths.
//!
//! A plumbed local tensor is `T^{sr}_{ijmn} = [s=i][r=j] W_{ij,mn}` where the
//! incoming virtual pair `(i,j)` is locked to the two physical spins and `W`
//! maps incoming to outgoing virtual pairs. The tensor is an isometry from
//! `(i,j)` to `(s,r,m,n)` exactly when every row of `W` has unit 2-norm, and
//! the squared entries `R = |W|^2` then form a row-stochastic weight matrix
//! for a classical vertex model.
//!
//! Three closed-form paths are provided:
//! * [`w_set_path`] — the D=2 path between symmetry-enriched toric-code
//!   phases, with the eight-vertex weight structure;
//! * [`mps_w_path_1d`] — the 1D analogue between a product state and the
//!   cluster state;
//! * [`doubleline_path`] — the D=4 double-line path between the toric-code
//!   and double-semion ground states.
//!
//! Index convention used everywhere: a virtual pair `(i,j)` is flattened
//! row-major as `i*D + j`, matching the basis ordering |00>, |01>, |10>, |11>.

use ndarray::{Array2, Array4, Array6};
use serde_json::json;

use crate::error::{Error, Result};
use crate::scalar::{creal, sign_of, Scalar, C, EXACT_TOL};

/// Result of an isometry check: worst row-norm deviation and the verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsometryCheck<T> {
    pub passed: bool,
    /// max over rows of | ||row||^2 - 1 |
    pub max_deviation: T,
}

/// D^2 x D^2 complex matrix defining a plumbed isoTNS tensor.
///
/// Row index = incoming virtual pair `(i,j)`, column index = outgoing pair
/// `(m,n)`, both flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WMatrix<T: Scalar> {
    dim_virtual: usize,
    entries: Array2<C<T>>,
}

impl<T: Scalar> WMatrix<T> {
    /// Wrap a D^2 x D^2 matrix. Fails on non-square/non-D^2 shapes or
    /// non-finite entries; isometry is checked separately by
    /// [`check_isometry`].
    pub fn new(entries: Array2<C<T>>) -> Result<Self> {
        let (rows, cols) = entries.dim();
        if rows != cols {
            return Err(Error::Shape(format!("W must be square, got {rows}x{cols}")));
        }
        let d = (rows as f64).sqrt().round() as usize;
        if d * d != rows || d < 2 {
            return Err(Error::Shape(format!(
                "W must be D^2 x D^2 with D >= 2, got {rows} rows"
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Shape("W entries must be finite".into()));
        }
        Ok(Self { dim_virtual: d, entries })
    }

    /// Bond dimension D.
    pub fn dim_virtual(&self) -> usize {
        self.dim_virtual
    }

    pub fn entries(&self) -> &Array2<C<T>> {
        &self.entries
    }

    /// Entry `W_{ij,mn}` by the four virtual leg values.
    pub fn entry(&self, i: usize, j: usize, m: usize, n: usize) -> C<T> {
        let d = self.dim_virtual;
        self.entries[(i * d + j, m * d + n)]
    }

    /// Squared 2-norm of each row.
    pub fn row_norms_sq(&self) -> Vec<T> {
        self.entries
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|z| z.norm_sqr()).sum())
            .collect()
    }

    /// Serialize to the JSON interchange schema
    /// `{ "D": int, "entries": [[re, im], ...] }` (entries row-major).
    pub fn to_json_string(&self) -> String {
        let entries: Vec<[f64; 2]> = self
            .entries
            .iter()
            .map(|z| [z.re.to_f64_lossy(), z.im.to_f64_lossy()])
            .collect();
        json!({ "D": self.dim_virtual, "entries": entries }).to_string()
    }

    /// Parse the JSON interchange schema produced by [`Self::to_json_string`].
    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(s)?;
        let d = v["D"]
            .as_u64()
            .ok_or_else(|| Error::Shape("missing integer field \"D\"".into()))?
            as usize;
        let raw = v["entries"]
            .as_array()
            .ok_or_else(|| Error::Shape("missing array field \"entries\"".into()))?;
        if raw.len() != d * d * d * d {
            return Err(Error::Shape(format!(
                "expected {} entries for D={d}, got {}",
                d * d * d * d,
                raw.len()
            )));
        }
        let mut entries = Vec::with_capacity(raw.len());
        for e in raw {
            let pair = e
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| Error::Shape("entries must be [re, im] pairs".into()))?;
            let re = pair[0].as_f64().ok_or_else(|| Error::Shape("non-numeric entry".into()))?;
            let im = pair[1].as_f64().ok_or_else(|| Error::Shape("non-numeric entry".into()))?;
            entries.push(C::new(T::from_f64_lossy(re), T::from_f64_lossy(im)));
        }
        Self::new(Array2::from_shape_vec((d * d, d * d), entries).expect("shape"))
    }
}

/// Check the isometry condition: every row of `W` must have squared 2-norm 1
/// within `tol`. Reports the worst deviation.
pub fn check_isometry<T: Scalar>(w: &WMatrix<T>, tol: T) -> IsometryCheck<T> {
    let max_deviation = w
        .row_norms_sq()
        .into_iter()
        .map(|n| (n - T::one()).abs())
        .fold(T::zero(), T::max);
    IsometryCheck { passed: max_deviation < tol, max_deviation }
}

/// [`check_isometry`] at the default exact-arithmetic tolerance.
pub fn check_isometry_default<T: Scalar>(w: &WMatrix<T>) -> IsometryCheck<T> {
    check_isometry(w, T::from_f64_lossy(EXACT_TOL))
}

fn require_path_parameter<T: Scalar>(g: T) -> Result<()> {
    if g < -T::one() || g > T::one() || g.is_nan() {
        return Err(Error::Domain(format!("path parameter g={g} outside [-1, 1]")));
    }
    Ok(())
}

/// The D=2 path `W(g)` between the trivial and non-trivial SET phase,
/// `g` in [-1, 1]. `g = 1` is the exact toric-code fixed point, `g = -1`
/// differs from it by a single sign, `g = 0` is the six-vertex critical point.
pub fn w_set_path<T: Scalar>(g: T) -> Result<WMatrix<T>> {
    require_path_parameter(g)?;
    let one = T::one();
    let a = one / (one + g.abs()).sqrt();
    let b = (g.abs() / (one + g.abs())).sqrt();
    let h = one / T::from_f64_lossy(2.0).sqrt();
    let z = C::new(T::zero(), T::zero());
    let mut m = Array2::from_elem((4, 4), z);
    m[(0, 0)] = creal(a);
    m[(0, 3)] = creal(sign_of(g) * b);
    m[(1, 1)] = creal(h);
    m[(1, 2)] = creal(h);
    m[(2, 1)] = creal(h);
    m[(2, 2)] = creal(h);
    m[(3, 0)] = creal(b);
    m[(3, 3)] = creal(a);
    WMatrix::new(m)
}

/// The toric-code fixed point `W(1)`: all eight even-parity entries 1/sqrt(2).
pub fn w_toric_code<T: Scalar>() -> WMatrix<T> {
    w_set_path(T::one()).expect("g=1 is in range")
}

/// Real nonnegative matrix of squared moduli `R_{ij,mn} = |W_{ij,mn}|^2`.
///
/// For an isometric `W` every row sums to 1, so `R` is the transition kernel
/// of the classical vertex-model dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix<T: Scalar> {
    dim_virtual: usize,
    entries: Array2<T>,
}

impl<T: Scalar> WeightMatrix<T> {
    pub fn dim_virtual(&self) -> usize {
        self.dim_virtual
    }

    pub fn entries(&self) -> &Array2<T> {
        &self.entries
    }

    /// `R_{ij,mn}` by leg values.
    pub fn entry(&self, i: usize, j: usize, m: usize, n: usize) -> T {
        let d = self.dim_virtual;
        self.entries[(i * d + j, m * d + n)]
    }

    pub fn row_sums(&self) -> Vec<T> {
        self.entries.rows().into_iter().map(|r| r.iter().copied().sum()).collect()
    }

    /// Number of entries with weight above `tol`.
    pub fn support_count(&self, tol: T) -> usize {
        self.entries.iter().filter(|&&x| x > tol).count()
    }
}

/// Elementwise squared modulus of `W`.
pub fn weight_matrix<T: Scalar>(w: &WMatrix<T>) -> WeightMatrix<T> {
    WeightMatrix {
        dim_virtual: w.dim_virtual,
        entries: w.entries.mapv(|z| z.norm_sqr()),
    }
}

/// Rank-6 plumbed tensor `T^{sr}_{ijmn}`, axes ordered `(s, r, i, j, m, n)`.
#[derive(Debug, Clone)]
pub struct PlumbedTensor<T: Scalar> {
    w: WMatrix<T>,
    tensor: Array6<C<T>>,
}

impl<T: Scalar> PlumbedTensor<T> {
    pub fn w(&self) -> &WMatrix<T> {
        &self.w
    }

    pub fn tensor(&self) -> &Array6<C<T>> {
        &self.tensor
    }

    /// Literal contraction of the isometry condition: returns the max-norm
    /// difference between `sum_{s,r,m,n} conj(T^{sr}_{ijmn}) T^{sr}_{i'j'mn}`
    /// and the identity on the incoming pair space.
    pub fn isometry_residual(&self) -> T {
        let d = self.w.dim_virtual();
        let mut worst = T::zero();
        for i in 0..d {
            for j in 0..d {
                for ip in 0..d {
                    for jp in 0..d {
                        let mut acc = C::new(T::zero(), T::zero());
                        for s in 0..d {
                            for r in 0..d {
                                for m in 0..d {
                                    for n in 0..d {
                                        acc = acc
                                            + self.tensor[(s, r, i, j, m, n)].conj()
                                                * self.tensor[(s, r, ip, jp, m, n)];
                                    }
                                }
                            }
                        }
                        let expect = if i == ip && j == jp { T::one() } else { T::zero() };
                        worst = worst.max((acc - creal(expect)).norm());
                    }
                }
            }
        }
        worst
    }
}

/// Lift a W-matrix to the rank-6 plumbed tensor (physical dimension d = D).
pub fn plumb<T: Scalar>(w: &WMatrix<T>) -> PlumbedTensor<T> {
    let d = w.dim_virtual();
    let zero = C::new(T::zero(), T::zero());
    let mut tensor = Array6::from_elem((d, d, d, d, d, d), zero);
    for i in 0..d {
        for j in 0..d {
            for m in 0..d {
                for n in 0..d {
                    tensor[(i, j, i, j, m, n)] = w.entry(i, j, m, n);
                }
            }
        }
    }
    PlumbedTensor { w: w.clone(), tensor }
}

/// chi x chi W-matrix of the 1D plumbed MPS construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MpsWMatrix<T: Scalar> {
    entries: Array2<C<T>>,
}

impl<T: Scalar> MpsWMatrix<T> {
    pub fn new(entries: Array2<C<T>>) -> Result<Self> {
        let (r, c) = entries.dim();
        if r != c || r < 2 {
            return Err(Error::Shape(format!("1D W must be square chi x chi, got {r}x{c}")));
        }
        Ok(Self { entries })
    }

    pub fn chi(&self) -> usize {
        self.entries.dim().0
    }

    pub fn entries(&self) -> &Array2<C<T>> {
        &self.entries
    }

    /// max over rows of | ||row||^2 - 1 |
    pub fn row_norm_deviation(&self) -> T {
        self.entries
            .rows()
            .into_iter()
            .map(|r| (r.iter().map(|z| z.norm_sqr()).sum::<T>() - T::one()).abs())
            .fold(T::zero(), T::max)
    }
}

/// The 1D path: `g = 1` prepares |++...+> in the bulk, `g = -1` the cluster
/// state, `g = 0` (with delta boundary) the GHZ state.
pub fn mps_w_path_1d<T: Scalar>(g: T) -> Result<MpsWMatrix<T>> {
    require_path_parameter(g)?;
    let one = T::one();
    let a = one / (one + g.abs()).sqrt();
    let b = (g.abs() / (one + g.abs())).sqrt();
    let mut m = Array2::from_elem((2, 2), C::new(T::zero(), T::zero()));
    m[(0, 0)] = creal(a);
    m[(0, 1)] = creal(sign_of(g) * b);
    m[(1, 0)] = creal(b);
    m[(1, 1)] = creal(a);
    MpsWMatrix::new(m)
}

/// Double-line local tensor `A_{a c d' b'}` with binary indices, plus the
/// derived D=4 double-line W-matrix.
#[derive(Debug, Clone)]
pub struct DoubleLineTensor<T: Scalar> {
    a: Array4<C<T>>,
}

impl<T: Scalar> DoubleLineTensor<T> {
    pub fn a(&self) -> &Array4<C<T>> {
        &self.a
    }

    /// max over `(a,c,d')` of | sum_{b'} |A_{a c d' b'}|^2 - 1 |
    pub fn sum_rule_deviation(&self) -> T {
        let mut worst = T::zero();
        for a in 0..2 {
            for c in 0..2 {
                for dp in 0..2 {
                    let s: T = (0..2).map(|bp| self.a[(a, c, dp, bp)].norm_sqr()).sum();
                    worst = worst.max((s - T::one()).abs());
                }
            }
        }
        worst
    }

    /// The 16x16 double-line W with
    /// `W_{abcd,a'b'c'd'} = A_{a c d' b'} [a=a'][b=c][d=d'][b'=c']`.
    /// Indices flatten row-major as `8a+4b+2c+d`.
    pub fn derived_w(&self) -> Array2<C<T>> {
        let zero = C::new(T::zero(), T::zero());
        let mut w = Array2::from_elem((16, 16), zero);
        for a in 0..2usize {
            for b in 0..2usize {
                for c in 0..2usize {
                    for d in 0..2usize {
                        if b != c {
                            continue;
                        }
                        for bp in 0..2usize {
                            // a' = a, d' = d, c' = b'
                            let row = 8 * a + 4 * b + 2 * c + d;
                            let col = 8 * a + 4 * bp + 2 * bp + d;
                            w[(row, col)] = self.a[(a, c, d, bp)];
                        }
                    }
                }
            }
        }
        w
    }

    /// max over constrained rows (b = c) of | ||row||^2 - 1 |. The rows with
    /// b != c are identically zero: the double-line isometry only holds on
    /// the constrained subspace, which the sequential contraction preserves.
    pub fn constrained_row_deviation(&self) -> T {
        let w = self.derived_w();
        let mut worst = T::zero();
        for a in 0..2usize {
            for bc in 0..2usize {
                for d in 0..2usize {
                    let row = 8 * a + 4 * bc + 2 * bc + d;
                    let s: T = (0..16).map(|col| w[(row, col)].norm_sqr()).sum();
                    worst = worst.max((s - T::one()).abs());
                }
            }
        }
        worst
    }
}

/// The D=4 double-line path between the toric-code (`g = 1`) and
/// double-semion (`g = -1`) fixed points. The eight listed elements follow
/// the closed form; the remaining eight are 1/sqrt(2), which is what both
/// fixed points and the sum rule require.
pub fn doubleline_path<T: Scalar>(g: T) -> Result<DoubleLineTensor<T>> {
    require_path_parameter(g)?;
    let one = T::one();
    let p = one / (one + g.abs()).sqrt();
    let q = (g.abs() / (one + g.abs())).sqrt();
    let h = one / T::from_f64_lossy(2.0).sqrt();
    let mut a = Array4::from_elem((2, 2, 2, 2), creal(h));
    // indices (a, c, d', b')
    a[(0, 0, 1, 0)] = creal(p); // A_0010
    a[(0, 1, 1, 1)] = creal(p); // A_0111
    a[(0, 0, 1, 1)] = creal(sign_of(g) * q); // A_0011
    a[(0, 1, 1, 0)] = creal(sign_of(g) * q); // A_0110
    a[(1, 1, 0, 1)] = creal(p); // A_1101
    a[(1, 0, 0, 0)] = creal(p); // A_1000
    a[(1, 1, 0, 0)] = creal(q); // A_1100
    a[(1, 0, 0, 1)] = creal(q); // A_1001
    Ok(DoubleLineTensor { a })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn grid() -> impl Iterator<Item = f64> {
        (-20..=20).map(|i| i as f64 * 0.05)
    }

    #[test]
    fn toric_code_w_has_eight_half_entries_and_is_isometric() {
        let w = w_toric_code::<f64>();
        let nonzero: Vec<_> = w.entries().iter().filter(|z| z.norm() > 0.0).collect();
        assert_eq!(nonzero.len(), 8);
        for z in nonzero {
            assert_abs_diff_eq!(z.re, SQRT_HALF, epsilon = 1e-15);
            assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-15);
        }
        assert!(check_isometry_default(&w).passed);
    }

    #[test]
    fn non_isometric_row_reports_unit_deviation() {
        let mut m = Array2::from_elem((4, 4), creal(0.0_f64));
        m[(0, 0)] = creal(1.0);
        m[(0, 1)] = creal(1.0);
        m[(1, 1)] = creal(1.0);
        m[(2, 2)] = creal(1.0);
        m[(3, 3)] = creal(1.0);
        let w = WMatrix::new(m).unwrap();
        let check = check_isometry_default(&w);
        assert!(!check.passed);
        assert_abs_diff_eq!(check.max_deviation, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn set_path_is_isometric_along_the_grid() {
        for g in grid() {
            let w = w_set_path(g).unwrap();
            let check = check_isometry_default(&w);
            assert!(check.passed, "g={g}: deviation {}", check.max_deviation);
        }
        // direct row-sum evaluation at g = 0.3
        let w = w_set_path(0.3_f64).unwrap();
        for s in w.row_norms_sq() {
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn set_path_fixed_points_match_the_closed_form() {
        let w1 = w_set_path(1.0_f64).unwrap();
        assert_eq!(w1.entries(), w_toric_code::<f64>().entries());

        let w0 = w_set_path(0.0_f64).unwrap();
        assert_abs_diff_eq!(w0.entry(0, 0, 0, 0).re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w0.entry(0, 0, 1, 1).re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w0.entry(1, 1, 0, 0).re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w0.entry(1, 1, 1, 1).re, 1.0, epsilon = 1e-15);
        assert_eq!(weight_matrix(&w0).support_count(1e-12), 6);

        let wm = w_set_path(-1.0_f64).unwrap();
        let wtc = w_toric_code::<f64>();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if (i, j) == (0, 3) {
                    -wtc.entries()[(0, 3)]
                } else {
                    wtc.entries()[(i, j)]
                };
                assert_abs_diff_eq!((wm.entries()[(i, j)] - expect).norm(), 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn set_path_rejects_out_of_range_parameters() {
        assert!(matches!(w_set_path(1.2_f64), Err(Error::Domain(_))));
        assert!(matches!(w_set_path(-1.0001_f64), Err(Error::Domain(_))));
        assert!(matches!(mps_w_path_1d(3.0_f64), Err(Error::Domain(_))));
        assert!(matches!(doubleline_path(-2.0_f64), Err(Error::Domain(_))));
    }

    #[test]
    fn weight_matrix_values() {
        // toric code: eight entries 1/2
        let r = weight_matrix(&w_toric_code::<f64>());
        assert_eq!(r.support_count(1e-12), 8);
        for &x in r.entries().iter().filter(|&&x| x > 1e-12) {
            assert_abs_diff_eq!(x, 0.5, epsilon = 1e-15);
        }
        // g = 0: squared moduli {1, 1/2, 1/2, 1/2, 1/2, 1}
        let r0 = weight_matrix(&w_set_path(0.0_f64).unwrap());
        assert_abs_diff_eq!(r0.entry(0, 0, 0, 0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r0.entry(0, 1, 0, 1), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r0.entry(0, 1, 1, 0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r0.entry(1, 0, 0, 1), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r0.entry(1, 0, 1, 0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r0.entry(1, 1, 1, 1), 1.0, epsilon = 1e-15);
        // unit-row permutation W -> R is a permutation matrix
        let mut m = Array2::from_elem((4, 4), creal(0.0_f64));
        m[(0, 1)] = creal(1.0);
        m[(1, 2)] = creal(1.0);
        m[(2, 3)] = creal(1.0);
        m[(3, 0)] = creal(1.0);
        let rp = weight_matrix(&WMatrix::new(m).unwrap());
        assert_eq!(rp.support_count(1e-12), 4);
        for s in rp.row_sums() {
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn support_count_is_8_away_from_criticality_and_6_at_it() {
        for g in grid() {
            let r = weight_matrix(&w_set_path(g).unwrap());
            let expect = if g == 0.0 { 6 } else { 8 };
            assert_eq!(r.support_count(1e-12), expect, "g={g}");
        }
    }

    #[test]
    fn plumbed_tensor_locks_physical_to_virtual() {
        let t = plumb(&w_toric_code::<f64>());
        assert_abs_diff_eq!(t.tensor()[(0, 0, 0, 0, 0, 0)].re, SQRT_HALF, epsilon = 1e-15);
        // sigma != i forces zero
        for m in 0..2 {
            for n in 0..2 {
                assert_eq!(t.tensor()[(0, 1, 0, 0, m, n)].norm(), 0.0);
            }
        }
    }

    #[test]
    fn plumbed_isometry_contraction_holds_along_the_path() {
        for g in grid() {
            let t = plumb(&w_set_path(g).unwrap());
            assert!(t.isometry_residual() < 1e-12, "g={g}");
        }
        // also for a permutation W
        let mut m = Array2::from_elem((4, 4), creal(0.0_f64));
        m[(0, 2)] = creal(1.0);
        m[(1, 0)] = creal(1.0);
        m[(2, 3)] = creal(1.0);
        m[(3, 1)] = creal(1.0);
        let t = plumb(&WMatrix::new(m).unwrap());
        assert!(t.isometry_residual() < 1e-15);
    }

    #[test]
    fn set_path_tensor_vanishes_on_odd_parity_legs() {
        // closed-loop constraint: T = 0 whenever i+j+m+n is odd
        for g in grid() {
            let t = plumb(&w_set_path(g).unwrap());
            for i in 0..2 {
                for j in 0..2 {
                    for m in 0..2 {
                        for n in 0..2 {
                            if (i + j + m + n) % 2 == 1 {
                                assert_eq!(t.tensor()[(i, j, i, j, m, n)].norm(), 0.0);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn mps_path_endpoints() {
        let w1 = mps_w_path_1d(1.0_f64).unwrap();
        for z in w1.entries().iter() {
            assert_abs_diff_eq!(z.re, SQRT_HALF, epsilon = 1e-15);
        }
        let w0 = mps_w_path_1d(0.0_f64).unwrap();
        assert_abs_diff_eq!(w0.entries()[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w0.entries()[(0, 1)].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w0.entries()[(1, 0)].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w0.entries()[(1, 1)].re, 1.0, epsilon = 1e-15);
        let wm = mps_w_path_1d(-1.0_f64).unwrap();
        assert_abs_diff_eq!(wm.entries()[(0, 0)].re, SQRT_HALF, epsilon = 1e-15);
        assert_abs_diff_eq!(wm.entries()[(0, 1)].re, -SQRT_HALF, epsilon = 1e-15);
        assert_abs_diff_eq!(wm.entries()[(1, 0)].re, SQRT_HALF, epsilon = 1e-15);
        assert_abs_diff_eq!(wm.entries()[(1, 1)].re, SQRT_HALF, epsilon = 1e-15);
        for g in grid() {
            assert!(mps_w_path_1d(g).unwrap().row_norm_deviation() < 1e-12);
        }
    }

    #[test]
    fn doubleline_endpoints_and_sum_rule() {
        let a1 = doubleline_path(1.0_f64).unwrap();
        for z in a1.a().iter() {
            assert_abs_diff_eq!(z.re, SQRT_HALF, epsilon = 1e-15);
        }
        let am = doubleline_path(-1.0_f64).unwrap();
        for (idx, z) in am.a().indexed_iter() {
            let expect = if idx == (0, 0, 1, 1) || idx == (0, 1, 1, 0) {
                -SQRT_HALF
            } else {
                SQRT_HALF
            };
            assert_abs_diff_eq!(z.re, expect, epsilon = 1e-15);
        }
        let a0 = doubleline_path(0.0_f64).unwrap();
        assert_abs_diff_eq!(a0.a()[(0, 0, 1, 0)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a0.a()[(0, 1, 1, 1)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a0.a()[(1, 1, 0, 1)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a0.a()[(1, 0, 0, 0)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a0.a()[(0, 0, 1, 1)].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a0.a()[(0, 1, 1, 0)].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a0.a()[(1, 1, 0, 0)].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a0.a()[(1, 0, 0, 1)].re, 0.0, epsilon = 1e-15);
        for g in grid() {
            let a = doubleline_path(g).unwrap();
            assert!(a.sum_rule_deviation() < 1e-12, "g={g}");
            assert!(a.constrained_row_deviation() < 1e-12, "g={g}");
        }
    }

    #[test]
    fn wmatrix_json_round_trip() {
        let w = w_set_path(0.35_f64).unwrap();
        let s = w.to_json_string();
        let back = WMatrix::<f64>::from_json_str(&s).unwrap();
        assert_eq!(back.dim_virtual(), 2);
        for (a, b) in back.entries().iter().zip(w.entries().iter()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 0.0);
        }
        assert!(WMatrix::<f64>::from_json_str("{\"D\": 2, \"entries\": []}").is_err());
    }

    #[test]
    fn generic_scalar_instantiates_at_f32() {
        let w = w_set_path(0.5_f32).unwrap();
        assert!(check_isometry(&w, 1e-6).passed);
    }
}
