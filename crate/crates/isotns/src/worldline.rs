//! Classical engine for the worldline picture of the squared amplitudes.
//!
//! In the frame rotated by 45 degrees the lattice becomes a brickwork: time
//! slices of `l_x` edge sites (periodic in space), with vertex rows
//! alternating between pairing sites `(2k, 2k+1)` and `(2k+1, 2k+2)`. Each
//! vertex draws its outgoing pair `(m, n)` from the incoming pair `(i, j)`
//! with probability `R_{ij,mn} = |W_{ij,mn}|^2`; the outgoing top leg `n`
//! lands on the left site and the right leg `m` on the right site.
//!
//! At `g = 0` the dynamics conserves the per-slice particle number exactly
//! and single particles perform symmetric random walks; the 45-degree
//! correlations of the critical wavefunction are estimated from these
//! trajectories.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::scalar::{Scalar, C};
use crate::tensor::{WeightMatrix, WMatrix};

/// Derive a per-task RNG seed from a base seed and a task index, so results
/// are independent of worker count and scheduling.
pub fn stream_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 over a fixed combination
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Initial condition on the bottom time slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StripBoundary {
    /// Fixed Z-basis bitstring of length `l_x`.
    Bits(Vec<bool>),
    /// Uniformly random bitstring per trajectory: the classical ensemble of
    /// the |++...+> boundary state.
    PlusEnsemble,
}

/// One sampled worldline configuration on the rotated strip.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub l_x: usize,
    pub l_t: usize,
    /// `l_t + 1` slices of `l_x` bits; slice 0 is the boundary.
    pub slices: Vec<Vec<bool>>,
    pub seed: u64,
}

impl TrajectoryRecord {
    /// Particle count per slice (conserved for interior rows at g = 0).
    pub fn row_counts(&self) -> Vec<usize> {
        self.slices.iter().map(|s| s.iter().filter(|&&b| b).count()).collect()
    }
}

fn transition_cdfs<T: Scalar>(r: &WeightMatrix<T>) -> Result<[[f64; 4]; 4]> {
    if r.dim_virtual() != 2 {
        return Err(Error::Domain("worldline sampling requires D=2 weights".into()));
    }
    let mut cdfs = [[0.0f64; 4]; 4];
    for row in 0..4 {
        let mut acc = 0.0;
        for col in 0..4 {
            acc += r.entries()[(row, col)].to_f64_lossy();
            cdfs[row][col] = acc;
        }
        if (acc - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("weight row {row} sums to {acc}, not 1")));
        }
    }
    Ok(cdfs)
}

fn validate_strip(l_x: usize, l_t: usize) -> Result<()> {
    if l_x < 2 || l_x % 2 != 0 {
        return Err(Error::Validation(format!("l_x must be even and >= 2, got {l_x}")));
    }
    if l_t < 1 {
        return Err(Error::Validation("l_t must be >= 1".into()));
    }
    Ok(())
}

fn initial_slice(boundary: &StripBoundary, l_x: usize, rng: &mut ChaCha12Rng) -> Result<Vec<bool>> {
    match boundary {
        StripBoundary::Bits(bits) => {
            if bits.len() != l_x {
                return Err(Error::Validation(format!(
                    "boundary has {} bits, strip width is {l_x}",
                    bits.len()
                )));
            }
            Ok(bits.clone())
        }
        StripBoundary::PlusEnsemble => Ok((0..l_x).map(|_| rng.gen::<bool>()).collect()),
    }
}

fn advance_row(slice: &mut [bool], t: usize, cdfs: &[[f64; 4]; 4], rng: &mut ChaCha12Rng) {
    let l_x = slice.len();
    let offset = t % 2;
    let mut k = offset;
    while k < l_x {
        let left = k;
        let right = (k + 1) % l_x;
        let i = slice[left] as usize;
        let j = slice[right] as usize;
        let row = &cdfs[2 * i + j];
        let u = rng.gen::<f64>();
        let col = row.partition_point(|&c| c <= u).min(3);
        let m = (col >> 1) & 1;
        let n = col & 1;
        // top leg goes to the left site, right leg to the right site
        slice[left] = n == 1;
        slice[right] = m == 1;
        k += 2;
    }
}

/// Sample one trajectory: row-by-row ancestral sampling with jump
/// probabilities `R_{ij,mn}`, deterministic for a given seed.
pub fn sample_trajectory<T: Scalar>(
    r: &WeightMatrix<T>,
    l_x: usize,
    l_t: usize,
    boundary: &StripBoundary,
    seed: u64,
) -> Result<TrajectoryRecord> {
    validate_strip(l_x, l_t)?;
    let cdfs = transition_cdfs(r)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut slice = initial_slice(boundary, l_x, &mut rng)?;
    let mut slices = Vec::with_capacity(l_t + 1);
    slices.push(slice.clone());
    for t in 0..l_t {
        advance_row(&mut slice, t, &cdfs, &mut rng);
        slices.push(slice.clone());
    }
    Ok(TrajectoryRecord { l_x, l_t, slices, seed })
}

/// Correlation direction on the strip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Along the sequential (time) direction at fixed spatial position.
    T,
    /// Along the spatial direction within one slice.
    X,
    /// Along the 45-degree diagonal (one site and one slice per step); this
    /// is a lattice axis of the unrotated frame.
    Diag45,
}

/// Connected two-point estimate at one separation.
#[derive(Debug, Clone, Copy)]
pub struct CorrelationEstimate {
    pub direction: Direction,
    pub r: usize,
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Connected `<Z Z>` estimates versus separation, averaged over trajectories
/// and translation-equivalent bulk pairs. The bulk window keeps slices in
/// `[l_t/4, 3 l_t/4]`; the connected part subtracts the squared global mean
/// (zero by symmetry for the plus ensemble), so the quoted stderr is that of
/// the product term.
pub fn correlate<T: Scalar>(
    r: &WeightMatrix<T>,
    l_x: usize,
    l_t: usize,
    boundary: &StripBoundary,
    direction: Direction,
    samples: usize,
    seed: u64,
) -> Result<Vec<CorrelationEstimate>> {
    validate_strip(l_x, l_t)?;
    if samples < 1 {
        return Err(Error::Validation("samples must be >= 1".into()));
    }
    let cdfs = transition_cdfs(r)?;
    let w_lo = l_t / 4;
    let w_hi = 3 * l_t / 4; // inclusive slice indices
    let window = w_hi - w_lo;
    let r_max = match direction {
        Direction::T | Direction::Diag45 => window,
        Direction::X => l_x / 2,
    };
    if r_max < 1 {
        return Err(Error::Domain(format!(
            "lattice too small for {direction:?} correlations (window {window}, width {l_x})"
        )));
    }

    // per-chunk partial sums keep the reduction order fixed
    const CHUNK: usize = 512;
    let n_chunks = samples.div_ceil(CHUNK);
    struct Partial {
        zz: Vec<f64>,
        zz2: Vec<f64>,
        z: f64,
        n_z: f64,
    }
    let partials: Vec<Partial> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(samples);
            let mut zz = vec![0.0f64; r_max];
            let mut zz2 = vec![0.0f64; r_max];
            let mut z_acc = 0.0f64;
            let mut slices: Vec<Vec<i8>> = vec![vec![0; l_x]; l_t + 1];
            for traj in lo..hi {
                let mut rng = ChaCha12Rng::seed_from_u64(stream_seed(seed, traj as u64));
                let mut slice = initial_slice(boundary, l_x, &mut rng).expect("validated");
                for (s, b) in slices[0].iter_mut().zip(slice.iter()) {
                    *s = if *b { -1 } else { 1 };
                }
                for t in 0..l_t {
                    advance_row(&mut slice, t, &cdfs, &mut rng);
                    for (s, b) in slices[t + 1].iter_mut().zip(slice.iter()) {
                        *s = if *b { -1 } else { 1 };
                    }
                }
                let mut zmean = 0.0f64;
                for t in w_lo..=w_hi {
                    let row = &slices[t];
                    zmean += row.iter().map(|&v| v as f64).sum::<f64>();
                }
                zmean /= (l_x * (window + 1)) as f64;
                z_acc += zmean;
                for rr in 1..=r_max {
                    let mut acc: i64 = 0;
                    let mut count: i64 = 0;
                    match direction {
                        Direction::T => {
                            for t in w_lo..=(w_hi - rr) {
                                let (a, b) = (&slices[t], &slices[t + rr]);
                                for k in 0..l_x {
                                    acc += (a[k] * b[k]) as i64;
                                }
                                count += l_x as i64;
                            }
                        }
                        Direction::X => {
                            for t in w_lo..=w_hi {
                                let a = &slices[t];
                                for k in 0..l_x {
                                    acc += (a[k] * a[(k + rr) % l_x]) as i64;
                                }
                                count += l_x as i64;
                            }
                        }
                        Direction::Diag45 => {
                            for t in w_lo..=(w_hi - rr) {
                                let (a, b) = (&slices[t], &slices[t + rr]);
                                for k in 0..l_x {
                                    acc += (a[k] * b[(k + rr) % l_x]) as i64;
                                }
                                count += l_x as i64;
                            }
                        }
                    }
                    if count > 0 {
                        let m = acc as f64 / count as f64;
                        zz[rr - 1] += m;
                        zz2[rr - 1] += m * m;
                    }
                }
            }
            Partial { zz, zz2, z: z_acc, n_z: (hi - lo) as f64 }
        })
        .collect();

    let mut zz = vec![0.0f64; r_max];
    let mut zz2 = vec![0.0f64; r_max];
    let mut z = 0.0f64;
    let mut n = 0.0f64;
    for p in partials {
        for i in 0..r_max {
            zz[i] += p.zz[i];
            zz2[i] += p.zz2[i];
        }
        z += p.z;
        n += p.n_z;
    }
    let zbar = z / n;
    Ok((1..=r_max)
        .map(|rr| {
            let mean = zz[rr - 1] / n;
            let var = (zz2[rr - 1] / n - mean * mean).max(0.0);
            CorrelationEstimate {
                direction,
                r: rr,
                mean: mean - zbar * zbar,
                stderr: (var / (n - 1.0).max(1.0)).sqrt(),
                samples,
            }
        })
        .collect())
}

/// Least-squares fit result for `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy)]
pub struct FitResult {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub points_used: usize,
}

fn linear_fit(points: &[(f64, f64)]) -> Result<FitResult> {
    let n = points.len();
    if n < 3 {
        return Err(Error::Validation(format!("fit needs >= 3 positive points, got {n}")));
    }
    let nf = n as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let (mx, my) = (sx / nf, sy / nf);
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 =
        points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (ss_res / (nf - 2.0) / sxx).sqrt();
    Ok(FitResult { slope, stderr, intercept, points_used: n })
}

/// Power-law exponent: least squares of `ln C` vs `ln r` over `r` in
/// `[r_min, r_max]`, using only bins with `C > 0`.
pub fn fit_power_law(est: &[CorrelationEstimate], r_min: usize, r_max: usize) -> Result<FitResult> {
    let pts: Vec<(f64, f64)> = est
        .iter()
        .filter(|e| e.r >= r_min && e.r <= r_max && e.mean > 0.0)
        .map(|e| ((e.r as f64).ln(), e.mean.ln()))
        .collect();
    linear_fit(&pts)
}

/// Exponential decay rate: least squares of `ln C` vs `r` over `[r_min,
/// r_max]`, using only bins where `C` clears its own noise floor.
pub fn fit_exponential(est: &[CorrelationEstimate], r_min: usize, r_max: usize) -> Result<FitResult> {
    let pts: Vec<(f64, f64)> = est
        .iter()
        .filter(|e| e.r >= r_min && e.r <= r_max && e.mean > 3.0 * e.stderr && e.mean > 0.0)
        .map(|e| (e.r as f64, e.mean.ln()))
        .collect();
    linear_fit(&pts)
}

/// Ancestral probability of a full edge configuration on the open lattice:
/// the product of `R` entries over all vertices, zero unless the boundary
/// bits match. This is the distribution the holographic engine must
/// reproduce when sampling in the all-Z basis.
pub fn lattice_config_probability<T: Scalar>(
    lattice: &LatticeSpec,
    r: &WeightMatrix<T>,
    boundary_bits: &[bool],
    config: &[bool],
) -> Result<T> {
    if config.len() != lattice.n_edges() {
        return Err(Error::Validation("config length != edge count".into()));
    }
    let boundary = lattice.boundary_edges();
    if boundary_bits.len() != boundary.len() {
        return Err(Error::Validation("boundary length mismatch".into()));
    }
    for (&e, &b) in boundary.iter().zip(boundary_bits.iter()) {
        if config[e] != b {
            return Ok(T::zero());
        }
    }
    let mut p = T::one();
    for v in lattice.vertices() {
        let es = lattice.vertex_edges(v);
        p = p * r.entry(
            config[es.left] as usize,
            config[es.bottom] as usize,
            config[es.right] as usize,
            config[es.top] as usize,
        );
    }
    Ok(p)
}

/// Sample a full open-lattice configuration by the same ancestral process.
pub fn sample_lattice_config<T: Scalar>(
    lattice: &LatticeSpec,
    r: &WeightMatrix<T>,
    boundary_bits: &[bool],
    seed: u64,
) -> Result<Vec<bool>> {
    let boundary = lattice.boundary_edges();
    if boundary_bits.len() != boundary.len() {
        return Err(Error::Validation("boundary length mismatch".into()));
    }
    if r.dim_virtual() != 2 {
        return Err(Error::Domain("lattice sampling requires D=2 weights".into()));
    }
    let cdfs = transition_cdfs(r)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut config = vec![false; lattice.n_edges()];
    for (&e, &b) in boundary.iter().zip(boundary_bits.iter()) {
        config[e] = b;
    }
    for s in 0..lattice.n_layers() {
        for v in lattice.vertices_in_layer(s) {
            let es = lattice.vertex_edges(v);
            let i = config[es.left] as usize;
            let j = config[es.bottom] as usize;
            let u = rng.gen::<f64>();
            let col = cdfs[2 * i + j].partition_point(|&c| c <= u).min(3);
            config[es.right] = (col >> 1) & 1 == 1;
            config[es.top] = col & 1 == 1;
        }
    }
    Ok(config)
}

/// Row transfer operator `M` of the unrotated frame on a periodic ring of
/// `l` vertices: `M[(j...), (n...)] = Tr_h prod_k A^{j_k n_k}` with
/// `(A^{jn})_{h,h'} = R_{hj,h'n}`.
pub fn row_transfer_matrix<T: Scalar>(w: &WMatrix<T>, l: usize) -> Result<Array2<T>> {
    if l < 1 {
        return Err(Error::Domain("ring length must be >= 1".into()));
    }
    let d = w.dim_virtual();
    let entries = (d as f64).powi(2 * l as i32);
    if entries > (1u64 << 26) as f64 {
        return Err(Error::Resource(format!(
            "transfer matrix with D^(2L) = {entries} entries exceeds the budget"
        )));
    }
    let r = crate::tensor::weight_matrix(w);
    let dim = d.pow(l as u32);
    let digits = |mut s: usize| -> Vec<usize> {
        let mut v = vec![0; l];
        for k in (0..l).rev() {
            v[k] = s % d;
            s /= d;
        }
        v
    };
    let mut m = Array2::from_elem((dim, dim), T::zero());
    for js in 0..dim {
        let j = digits(js);
        for ns in 0..dim {
            let n = digits(ns);
            // trace of the product of l DxD slices
            let mut prod = Array2::from_shape_fn((d, d), |(h, hp)| r.entry(h, j[0], hp, n[0]));
            for k in 1..l {
                let mut next = Array2::from_elem((d, d), T::zero());
                for h in 0..d {
                    for hp in 0..d {
                        let mut acc = T::zero();
                        for hm in 0..d {
                            acc = acc + prod[(h, hm)] * r.entry(hm, j[k], hp, n[k]);
                        }
                        next[(h, hp)] = acc;
                    }
                }
                prod = next;
            }
            m[(js, ns)] = (0..d).map(|h| prod[(h, h)]).sum();
        }
    }
    Ok(m)
}

/// Squared norm of the periodic isoTNS on an `l x l` torus via the transfer
/// operator: `Tr(M^l)`.
pub fn norm_via_transfer<T: Scalar>(w: &WMatrix<T>, l: usize) -> Result<T> {
    let m = row_transfer_matrix(w, l)?;
    let dim = m.dim().0;
    let mut power = Array2::from_shape_fn((dim, dim), |(i, j)| if i == j { T::one() } else { T::zero() });
    for _ in 0..l {
        power = power.dot(&m);
    }
    Ok((0..dim).map(|i| power[(i, i)]).sum())
}

/// One brickwork period (both pairing offsets) of the rotated-frame slice
/// transfer: a `2^l_x` stochastic matrix whose Perron eigenvalue is exactly
/// 1 for any isometric `W`.
pub fn brickwork_transfer<T: Scalar>(w: &WMatrix<T>, l_x: usize) -> Result<Array2<T>> {
    if w.dim_virtual() != 2 {
        return Err(Error::Domain("brickwork transfer requires D=2".into()));
    }
    validate_strip(l_x, 1)?;
    if l_x > 12 {
        return Err(Error::Resource(format!("brickwork transfer of width {l_x} exceeds budget")));
    }
    let r = crate::tensor::weight_matrix(w);
    let dim = 1usize << l_x;
    let half = |offset: usize| -> Array2<T> {
        let mut p = Array2::from_elem((dim, dim), T::zero());
        for s in 0..dim {
            // enumerate joint outcomes of the l_x/2 independent vertices
            let n_pairs = l_x / 2;
            let mut outcomes = vec![(0usize, T::zero()); 0];
            outcomes.push((s, T::one()));
            for pair in 0..n_pairs {
                let left = (2 * pair + offset) % l_x;
                let right = (2 * pair + 1 + offset) % l_x;
                let mut next = Vec::with_capacity(outcomes.len() * 4);
                for &(state, weight) in &outcomes {
                    let i = (state >> left) & 1;
                    let j = (state >> right) & 1;
                    for col in 0..4 {
                        let pr = r.entries()[(2 * i + j, col)];
                        if pr > T::zero() {
                            let m = (col >> 1) & 1;
                            let n = col & 1;
                            let mut ns = state & !(1 << left) & !(1 << right);
                            if n == 1 {
                                ns |= 1 << left;
                            }
                            if m == 1 {
                                ns |= 1 << right;
                            }
                            next.push((ns, weight * pr));
                        }
                    }
                }
                outcomes = next;
            }
            for (state, weight) in outcomes {
                p[(s, state)] = p[(s, state)] + weight;
            }
        }
        p
    };
    Ok(half(0).dot(&half(1)))
}

/// Exact amplitude of a configuration times its conjugate on the torus,
/// enumerated by brute force; the independent oracle for
/// [`norm_via_transfer`]. Only feasible for `l <= 3`.
pub fn torus_norm_brute_force<T: Scalar>(w: &WMatrix<T>, l: usize) -> Result<T> {
    if w.dim_virtual() != 2 || l > 3 {
        return Err(Error::Resource("brute-force torus norm limited to D=2, l <= 3".into()));
    }
    let n_edges = 2 * l * l;
    let h = |x: usize, y: usize| (y % l) * l + (x % l);
    let v = |x: usize, y: usize| l * l + (y % l) * l + (x % l);
    let mut total = T::zero();
    for config in 0..(1usize << n_edges) {
        let bit = |e: usize| (config >> e) & 1;
        let mut amp: C<T> = C::new(T::one(), T::zero());
        for x in 0..l {
            for y in 0..l {
                amp = amp * w.entry(bit(h(x, y)), bit(v(x, y)), bit(h(x + 1, y)), bit(v(x, y + 1)));
            }
        }
        total = total + amp.norm_sqr();
    }
    Ok(total)
}
