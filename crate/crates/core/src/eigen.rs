//! Symmetric tridiagonal eigensolver.
//!
//! Eigenvalues come from the implicit-shift QL algorithm (the classical
//! EISPACK `imtql1` / Numerical Recipes `tqli` scheme, eigenvalue-only
//! variant). Eigenvectors come from inverse iteration with a partially
//! pivoted LU solve of the shifted tridiagonal system. Both stages are
//! O(N^2) for the full set of pairs, against O(N^3) for QL with
//! accumulated rotations.
//!
//! First eigenvector components additionally come from a dedicated
//! double-shooting recurrence ([`end_site_weights`]): disordered chains
//! localize eigenvectors, and a component like v(1) ~ 1e-60 is far below
//! the eps * ||v|| roundoff floor that any orthogonal-transformation or
//! inverse-iteration scheme leaves in every entry. Running the three-term
//! recurrence from each end toward the peak keeps full relative precision
//! instead, in the spirit of shooting to a fitting point (Numerical
//! Recipes, 2nd ed., section 17.2).

use crate::chain::TridiagonalMatrix;
use crate::mix64;

/// Subdiagonal deflation floor relative to the matrix infinity norm.
const DEFLATE_REL: f64 = 1e-14;

/// Inverse iteration stops once the residual drops below this times the
/// infinity norm; two orders tighter than the documented guarantee.
const RESIDUAL_REL: f64 = 1e-12;

const MAX_QL_SWEEPS: usize = 50;
const MAX_INVERSE_ITERATIONS: usize = 5;

/// Exponent width (in powers of two) of one rescaling block in the
/// double-shooting sweeps. Mantissas stay within 2^±500 of unity, so a
/// single block step never overflows and values two blocks apart are
/// negligible against each other.
const SCALE_BLOCK: i32 = 1000;

/// All N eigenpairs of a symmetric tridiagonal matrix.
///
/// Eigenvalues ascend; eigenvectors have unit norm, first component >= 0,
/// and residual ||Hv - lambda v|| <= 1e-10 ||H||_inf per pair. Matrices with
/// positive off-diagonals have simple spectra, so the ordering is strict;
/// eigenvalues degenerate to machine precision (possible only with
/// off-diagonal entries near zero) still satisfy the residual bound but lose
/// directional meaning inside the degenerate subspace.
pub fn eigendecompose(matrix: &TridiagonalMatrix) -> Vec<(f64, Vec<f64>)> {
    let n = matrix.order();
    if n == 1 {
        return vec![(matrix.diagonal()[0], vec![1.0])];
    }
    let scale = matrix.infinity_norm();
    let mut values = ql_eigenvalues(matrix.diagonal(), matrix.off_diagonal(), scale);
    values.sort_by(f64::total_cmp);

    let diag = matrix.diagonal();
    let off = matrix.off_diagonal();
    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n);
    // Degenerate-to-precision neighbors get explicitly orthogonalized;
    // anything with a wider gap is separated by the solve itself.
    let cluster_gap = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut group_start = 0;
    for (k, &lambda) in values.iter().enumerate() {
        let mut v = inverse_iteration(diag, off, lambda, scale, k as u64);
        if k > 0 && lambda - values[k - 1] >= cluster_gap {
            group_start = k;
        }
        for prev in &pairs[group_start..k] {
            let dot: f64 = prev.1.iter().zip(&v).map(|(a, b)| a * b).sum();
            for (x, p) in v.iter_mut().zip(&prev.1) {
                *x -= dot * p;
            }
        }
        normalize(&mut v);
        if v[0] < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
        debug_assert!(residual_norm(diag, off, lambda, &v) <= 1e-10 * scale.max(f64::MIN_POSITIVE));
        pairs.push((lambda, v));
    }
    pairs
}

/// Implicit-shift QL sweep, eigenvalues only. Unsorted on return.
pub(crate) fn ql_eigenvalues(diag: &[f64], off: &[f64], scale: f64) -> Vec<f64> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let floor = DEFLATE_REL * scale;

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            // First negligible subdiagonal at or after l bounds the active block.
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= (f64::EPSILON * dd).max(floor) {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            assert!(
                sweeps <= MAX_QL_SWEEPS,
                "QL failed to converge within {MAX_QL_SWEEPS} sweeps (order {n})"
            );
            // Wilkinson shift from the leading 2x2 of the active block.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    // Rotation annihilated early; drop the shift and restart.
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                let t = (d[i] - g) * s + 2.0 * c * b;
                p = s * t;
                d[i + 1] = g + p;
                g = c * t - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d
}

/// Eigenvalues closer than this times the matrix norm share one sweep and
/// get per-well stitching. Genuine splittings this small only arise from
/// far-separated wells; level spacing within one well is orders larger.
/// The basin cut below leaks mass of the order of the splitting itself, so
/// this threshold also bounds the relative error of clustered weights.
const CLUSTER_GAP_REL: f64 = 1e-10;

/// Candidate stitch centers this close together describe the same well;
/// wells whose tunneling splitting falls under [`CLUSTER_GAP_REL`] sit far
/// apart in any chain short of astronomic localization lengths.
const MIN_WELL_SEPARATION: usize = 10;

/// End-site weights v_n(1)^2 for the ascending eigenvalues of a positive
/// off-diagonal tridiagonal matrix, each to full relative precision no
/// matter how small.
///
/// The unnormalized eigenvector for lambda is the polynomial sequence
/// p_1 = 1, J_1 p_2 = (lambda - d_1) p_1, J_i p_{i+1} =
/// (lambda - d_i) p_i - J_{i-1} p_{i-1}, giving v(1)^2 = 1 / sum_i p_i^2.
/// Integrated in the direction where the solution grows, the recurrence is
/// dominant-solution stable; integrated past the peak it is not, because
/// the rounding of lambda seeds the growing second solution. So the sweep
/// runs from each end, the halves are matched where their product peaks
/// (the localization center), and each index takes its value from the
/// sweep that reached it while still ascending. Magnitudes are carried as
/// mantissa-times-2^(SCALE_BLOCK * block) pairs; true weights below the
/// double-precision underflow line come out as zero.
///
/// Eigenvalues degenerate to roundoff need extra care. They belong to
/// quasi-modes in wells separated by a long barrier, the sweeps at their
/// shared lambda resonate in every such well at once, and stitching all of
/// them at the global peak would assign every member the same well and
/// drop the others' weight from the measure. Members of a cluster are
/// stitched at distinct local maxima of the product profile instead, best
/// first, and each sum over p_i^2 is restricted to the basin around its
/// own peak, cut at the midpoints toward neighboring peaks, where the
/// competing resonances are suppressed by the full barrier factor.
pub(crate) fn end_site_weights(matrix: &TridiagonalMatrix, eigenvalues: &[f64]) -> Vec<f64> {
    let n = matrix.order();
    if n == 1 {
        return vec![1.0; eigenvalues.len()];
    }
    debug_assert!(
        eigenvalues.windows(2).all(|p| p[0] <= p[1]),
        "end_site_weights expects ascending eigenvalues"
    );
    let scale = matrix.infinity_norm().max(f64::MIN_POSITIVE);
    let cluster_gap = CLUSTER_GAP_REL * scale;
    let mut sweep = ShootingPair::new(n);
    let mut log_t = vec![0.0; n];
    let mut weights = Vec::with_capacity(eigenvalues.len());
    let mut clusters: Vec<(usize, usize)> = Vec::new();

    let mut start = 0;
    while start < eigenvalues.len() {
        let mut end = start + 1;
        while end < eigenvalues.len() && eigenvalues[end] - eigenvalues[end - 1] <= cluster_gap {
            end += 1;
        }
        sweep.run(matrix, eigenvalues[start]);
        if end - start == 1 {
            let center = sweep.global_peak();
            weights.push(sweep.weight_at(center, 0, n - 1, &mut log_t));
        } else {
            clusters.push((start, end));
            let centers = sweep.separated_peaks(end - start);
            for r in 0..end - start {
                let c = centers[r.min(centers.len() - 1)];
                let lo = centers.iter().filter(|&&p| p < c).max().map_or(0, |&p| (p + c) / 2 + 1);
                let hi =
                    centers.iter().filter(|&&p| p > c).min().map_or(n - 1, |&p| (c + p) / 2);
                weights.push(sweep.weight_at(c, lo, hi, &mut log_t));
            }
        }
        start = end;
    }

    // The basin partition assumes clustered quasi-modes living in compact,
    // far-separated wells, which is what disorder produces. Artificial
    // structures (one near-broken bond splitting the chain into resonant
    // halves) spread them across extended regions instead and the partition
    // misassigns mass there. The sum rule catches that; such spectra fall
    // back to inverse iteration with in-cluster orthogonalization, whose
    // eps-level absolute accuracy is enough because extended quasi-modes
    // cannot carry the tiny end-site amplitudes that demand shooting.
    if !clusters.is_empty() && (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        let diag = matrix.diagonal();
        let off = matrix.off_diagonal();
        for &(lo, hi) in &clusters {
            let mut basis: Vec<Vec<f64>> = Vec::with_capacity(hi - lo);
            for k in lo..hi {
                let mut v = inverse_iteration(diag, off, eigenvalues[k], scale, k as u64);
                for prev in &basis {
                    let dot: f64 = prev.iter().zip(&v).map(|(a, b)| a * b).sum();
                    for (x, p) in v.iter_mut().zip(prev) {
                        *x -= dot * p;
                    }
                }
                normalize(&mut v);
                weights[k] = v[0] * v[0];
                basis.push(v);
            }
        }
    }
    weights
}

/// Forward and backward three-term sweeps at one lambda, magnitudes kept
/// as mantissa-times-2^(SCALE_BLOCK * block) pairs.
struct ShootingPair {
    fwd_m: Vec<f64>,
    fwd_b: Vec<i32>,
    bwd_m: Vec<f64>,
    bwd_b: Vec<i32>,
}

impl ShootingPair {
    fn new(n: usize) -> Self {
        ShootingPair {
            fwd_m: vec![0.0; n],
            fwd_b: vec![0; n],
            bwd_m: vec![0.0; n],
            bwd_b: vec![0; n],
        }
    }

    fn run(&mut self, matrix: &TridiagonalMatrix, lambda: f64) {
        let n = matrix.order();
        let diag = matrix.diagonal();
        let off = matrix.off_diagonal();

        self.fwd_m[0] = 1.0;
        self.fwd_b[0] = 0;
        self.fwd_m[1] = (lambda - diag[0]) / off[0];
        self.fwd_b[1] = 0;
        rescale(&mut self.fwd_m[1], &mut self.fwd_b[1]);
        for i in 1..n - 1 {
            let base = self.fwd_b[i].max(self.fwd_b[i - 1]);
            let cur = block_shift(self.fwd_m[i], self.fwd_b[i] - base);
            let prev = block_shift(self.fwd_m[i - 1], self.fwd_b[i - 1] - base);
            let mut m = ((lambda - diag[i]) * cur - off[i - 1] * prev) / off[i];
            let mut b = base;
            rescale(&mut m, &mut b);
            self.fwd_m[i + 1] = m;
            self.fwd_b[i + 1] = b;
        }

        self.bwd_m[n - 1] = 1.0;
        self.bwd_b[n - 1] = 0;
        self.bwd_m[n - 2] = (lambda - diag[n - 1]) / off[n - 2];
        self.bwd_b[n - 2] = 0;
        rescale(&mut self.bwd_m[n - 2], &mut self.bwd_b[n - 2]);
        for i in (1..n - 1).rev() {
            let base = self.bwd_b[i].max(self.bwd_b[i + 1]);
            let cur = block_shift(self.bwd_m[i], self.bwd_b[i] - base);
            let prev = block_shift(self.bwd_m[i + 1], self.bwd_b[i + 1] - base);
            let mut m = ((lambda - diag[i]) * cur - off[i] * prev) / off[i - 1];
            let mut b = base;
            rescale(&mut m, &mut b);
            self.bwd_m[i - 1] = m;
            self.bwd_b[i - 1] = b;
        }
    }

    fn log_f(&self, i: usize) -> f64 {
        f64::from(SCALE_BLOCK) * f64::from(self.fwd_b[i]) + self.fwd_m[i].abs().log2()
    }

    fn log_b(&self, i: usize) -> f64 {
        f64::from(SCALE_BLOCK) * f64::from(self.bwd_b[i]) + self.bwd_m[i].abs().log2()
    }

    fn global_peak(&self) -> usize {
        let mut center = 0;
        let mut peak = f64::NEG_INFINITY;
        for i in 0..self.fwd_m.len() {
            let product = self.log_f(i) + self.log_b(i);
            if product > peak {
                peak = product;
                center = i;
            }
        }
        center
    }

    /// Local maxima of the product profile, highest first, no two closer
    /// than [`MIN_WELL_SEPARATION`]; at most `count` and at least one (the
    /// global peak, even if the profile offers fewer distinct wells than
    /// the cluster has members).
    fn separated_peaks(&self, count: usize) -> Vec<usize> {
        let n = self.fwd_m.len();
        let prof: Vec<f64> = (0..n).map(|i| self.log_f(i) + self.log_b(i)).collect();
        let mut maxima: Vec<usize> = (0..n)
            .filter(|&i| {
                prof[i].is_finite()
                    && (i == 0 || prof[i] >= prof[i - 1])
                    && (i + 1 == n || prof[i] >= prof[i + 1])
            })
            .collect();
        maxima.sort_by(|&a, &b| prof[b].total_cmp(&prof[a]));
        let mut centers: Vec<usize> = Vec::with_capacity(count);
        for i in maxima {
            if centers.len() == count {
                break;
            }
            if centers.iter().all(|&c| c.abs_diff(i) >= MIN_WELL_SEPARATION) {
                centers.push(i);
            }
        }
        if centers.is_empty() {
            centers.push(self.global_peak());
        }
        centers
    }

    /// Weight 1 / sum p_i^2 for the solution stitched at `center`, the sum
    /// running over `lo..=hi` in the forward frame with the largest term
    /// pulled out so the accumulation happens near unity.
    fn weight_at(&self, center: usize, lo: usize, hi: usize, log_t: &mut [f64]) -> f64 {
        let peak = self.log_f(center) + self.log_b(center);
        // A fully degenerate product (a node in both sweeps at every site)
        // cannot occur: log_f(0) is finite and log_b(0) is -inf only where
        // the forward solution carries all the magnitude.
        let stitch = if peak.is_finite() { self.log_f(center) - self.log_b(center) } else { 0.0 };
        let mut t_max = f64::NEG_INFINITY;
        for i in lo..=hi {
            let t = if i <= center {
                2.0 * self.log_f(i)
            } else {
                2.0 * (self.log_b(i) + stitch)
            };
            log_t[i] = t;
            t_max = t_max.max(t);
        }
        let t_ref = t_max.round();
        let sum: f64 = log_t[lo..=hi].iter().map(|t| (t - t_ref).exp2()).sum();
        (-t_ref).exp2() / sum
    }
}

/// Multiplies by 2^(SCALE_BLOCK * delta) for delta <= 0; two blocks down is
/// below relative eps of the aligned partner and truncates to zero.
fn block_shift(m: f64, delta: i32) -> f64 {
    match delta {
        0 => m,
        -1 => m * f64::from(SCALE_BLOCK).exp2().recip(),
        _ => 0.0,
    }
}

/// Renormalizes a mantissa into (2^-500, 2^500), moving whole blocks into
/// the exponent counter. Zero stays zero.
fn rescale(m: &mut f64, b: &mut i32) {
    let limit = f64::from(SCALE_BLOCK / 2).exp2();
    while m.abs() >= limit {
        *m *= f64::from(-SCALE_BLOCK).exp2();
        *b += 1;
    }
    while *m != 0.0 && m.abs() < limit.recip() {
        *m *= f64::from(SCALE_BLOCK).exp2();
        *b -= 1;
    }
}

/// One eigenvector by inverse iteration on (H - lambda I).
///
/// The start vector is pseudo-random per eigenvalue index: a fixed start
/// such as the all-ones vector is exactly orthogonal to every odd mode of a
/// mirror-symmetric chain and would stall.
fn inverse_iteration(diag: &[f64], off: &[f64], lambda: f64, scale: f64, index: u64) -> Vec<f64> {
    let n = diag.len();
    let pivot_floor = (f64::EPSILON * scale).max(1e-300);
    let mut state = mix64(0xC0FF_EE00 ^ index);
    let mut b: Vec<f64> = (0..n)
        .map(|_| {
            state = mix64(state);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    normalize(&mut b);

    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut best = b.clone();
    let mut best_res = f64::INFINITY;
    for _ in 0..MAX_INVERSE_ITERATIONS {
        solve_shifted(diag, off, lambda, &mut b, pivot_floor, &mut u, &mut v, &mut w);
        normalize(&mut b);
        let res = residual_norm(diag, off, lambda, &b);
        if res < best_res {
            best_res = res;
            best.copy_from_slice(&b);
        }
        if res <= RESIDUAL_REL * scale {
            break;
        }
    }
    best
}

/// Solves (T - shift I) x = rhs in place by Gaussian elimination with
/// partial pivoting between adjacent rows. Row i of U spans columns
/// (i, i+1, i+2), stored in (u, v, w). Pivots smaller than `pivot_floor`
/// are replaced by it; inverse iteration wants the solve to survive near
/// singularity, not to flag it.
#[allow(clippy::too_many_arguments)]
fn solve_shifted(
    diag: &[f64],
    off: &[f64],
    shift: f64,
    rhs: &mut [f64],
    pivot_floor: f64,
    u: &mut [f64],
    v: &mut [f64],
    w: &mut [f64],
) {
    let n = diag.len();
    // Active row (p, q, r) for position i, updated as rows below eliminate.
    let mut p = diag[0] - shift;
    let mut q = if n > 1 { off[0] } else { 0.0 };
    let mut r = 0.0;
    for i in 0..n - 1 {
        let below = off[i];
        if below.abs() > p.abs() {
            // Pivot: row i+1 becomes row i of U, the active row is eliminated.
            u[i] = below;
            v[i] = diag[i + 1] - shift;
            w[i] = if i + 2 < n { off[i + 1] } else { 0.0 };
            let m = p / u[i];
            let carried = rhs[i];
            rhs[i] = rhs[i + 1];
            rhs[i + 1] = carried - m * rhs[i];
            p = q - m * v[i];
            q = r - m * w[i];
        } else {
            let pivot = if p.abs() < pivot_floor { pivot_floor.copysign(p) } else { p };
            u[i] = pivot;
            v[i] = q;
            w[i] = r;
            let m = below / pivot;
            rhs[i + 1] -= m * rhs[i];
            p = (diag[i + 1] - shift) - m * q;
            q = (if i + 2 < n { off[i + 1] } else { 0.0 }) - m * r;
        }
        r = 0.0;
    }
    u[n - 1] = if p.abs() < pivot_floor { pivot_floor.copysign(p) } else { p };

    rhs[n - 1] /= u[n - 1];
    if n >= 2 {
        rhs[n - 2] = (rhs[n - 2] - v[n - 2] * rhs[n - 1]) / u[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        rhs[i] = (rhs[i] - v[i] * rhs[i + 1] - w[i] * rhs[i + 2]) / u[i];
    }
}

fn normalize(x: &mut [f64]) {
    let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm > 0.0 {
        for a in x.iter_mut() {
            *a /= norm;
        }
    }
}

fn residual_norm(diag: &[f64], off: &[f64], lambda: f64, x: &[f64]) -> f64 {
    let n = diag.len();
    let mut sum = 0.0;
    for i in 0..n {
        let mut r = (diag[i] - lambda) * x[i];
        if i > 0 {
            r += off[i - 1] * x[i - 1];
        }
        if i + 1 < n {
            r += off[i] * x[i + 1];
        }
        sum += r * r;
    }
    sum.sqrt()
}
