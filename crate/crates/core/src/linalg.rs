//! Small dense kernels on row-major `f64` slices.
//!
//! Dimensions here are a few hundred at most, so everything is written as
//! plain loops that the compiler can vectorise.

/// Dot product.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    #[cfg(target_arch = "x86_64")]
    if x86::fma_available() {
        // SAFETY: AVX2 and FMA support was just checked.
        return unsafe { x86::dot(a, b) };
    }
    dot_portable(a, b)
}

/// Four independent accumulators so the adds can pipeline.
#[inline(always)]
fn dot_portable(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let tail_a = chunks_a.remainder();
    let tail_b = chunks_b.remainder();
    for (x, y) in chunks_a.zip(chunks_b) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in tail_a.iter().zip(tail_b) {
        sum += x * y;
    }
    sum
}

/// `out = M x` for a square row-major `M`.
#[inline]
pub fn sym_matvec(m: &[f64], x: &[f64], out: &mut [f64]) {
    let n = x.len();
    debug_assert_eq!(m.len(), n * n);
    #[cfg(target_arch = "x86_64")]
    if x86::fma_available() {
        // SAFETY: AVX2 and FMA support was just checked.
        return unsafe { x86::matvec(m, x, out) };
    }
    for (row, o) in m.chunks_exact(n).zip(out.iter_mut()) {
        *o = dot_portable(row, x);
    }
}

/// `xᵀM x` for a symmetric row-major `M`, reading only the upper triangle.
#[inline]
pub fn sym_quad_form(m: &[f64], x: &[f64]) -> f64 {
    let mut out = [0.0];
    sym_quad_forms(m, &[x], &mut out);
    out[0]
}

/// `out[t] = xs[t]ᵀ M xs[t]` in one sweep over `M`. Each value is bitwise
/// equal to [`sym_quad_form`] on its own vector.
pub fn sym_quad_forms(m: &[f64], xs: &[&[f64]], out: &mut [f64]) {
    assert_eq!(xs.len(), out.len());
    #[cfg(target_arch = "x86_64")]
    if x86::fma_available() {
        for (group, o) in xs.chunks(4).zip(out.chunks_mut(4)) {
            // SAFETY: AVX2 and FMA support was just checked.
            unsafe {
                match group.len() {
                    4 => x86::quad_forms::<4>(m, group, o),
                    3 => x86::quad_forms::<3>(m, group, o),
                    2 => x86::quad_forms::<2>(m, group, o),
                    _ => x86::quad_forms::<1>(m, group, o),
                }
            }
        }
        return;
    }
    for (x, o) in xs.iter().zip(out.iter_mut()) {
        *o = quad_form_portable(m, x);
    }
}

fn quad_form_portable(m: &[f64], x: &[f64]) -> f64 {
    let n = x.len();
    assert_eq!(m.len(), n * n);
    let mut sum = 0.0;
    for i in 0..n {
        let row = &m[i * n..(i + 1) * n];
        sum += x[i] * (row[i] * x[i] + 2.0 * dot_portable(&row[i + 1..], &x[i + 1..]));
    }
    sum
}

/// `out_k = Σ_i u_i B[i, k]` for a row-major `n × k` matrix `B`.
#[inline]
pub fn transpose_matvec(b: &[f64], cols: usize, u: &[f64], out: &mut [f64]) {
    debug_assert_eq!(b.len(), u.len() * cols);
    out.iter_mut().for_each(|o| *o = 0.0);
    for (row, &ui) in b.chunks_exact(cols).zip(u) {
        for (o, &bik) in out.iter_mut().zip(row) {
            *o += ui * bik;
        }
    }
}

/// Rank-one update `M += alpha u uᵀ` of a square row-major `M`.
#[inline]
pub fn sym_rank_one(m: &mut [f64], u: &[f64], alpha: f64) {
    #[cfg(target_arch = "x86_64")]
    if x86::fma_available() {
        // SAFETY: AVX2 and FMA support was just checked.
        return unsafe { x86::rank_one(m, u, alpha) };
    }
    rank_one_portable(m, u, alpha)
}

#[inline(always)]
fn rank_one_portable(m: &mut [f64], u: &[f64], alpha: f64) {
    let n = u.len();
    for (row, &ui) in m.chunks_exact_mut(n).zip(u) {
        let s = alpha * ui;
        for (mij, &uj) in row.iter_mut().zip(u) {
            *mij += s * uj;
        }
    }
}

/// The same kernels compiled for AVX2 + FMA, picked at run time.
#[cfg(target_arch = "x86_64")]
mod x86 {
    #[inline]
    pub fn fma_available() -> bool {
        std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma")
    }

    #[inline(always)]
    unsafe fn dot_fma(a: &[f64], b: &[f64]) -> f64 {
        use std::arch::x86_64::*;
        let n = a.len().min(b.len());
        let (pa, pb) = (a.as_ptr(), b.as_ptr());
        let mut acc0 = _mm256_setzero_pd();
        let mut acc1 = _mm256_setzero_pd();
        let mut i = 0;
        while i + 8 <= n {
            acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(pa.add(i)), _mm256_loadu_pd(pb.add(i)), acc0);
            acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(pa.add(i + 4)), _mm256_loadu_pd(pb.add(i + 4)), acc1);
            i += 8;
        }
        if i + 4 <= n {
            acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(pa.add(i)), _mm256_loadu_pd(pb.add(i)), acc0);
            i += 4;
        }
        let acc = _mm256_add_pd(acc0, acc1);
        let lo = _mm256_castpd256_pd128(acc);
        let hi = _mm256_extractf128_pd(acc, 1);
        let pair = _mm_add_pd(lo, hi);
        let mut sum = _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
        while i < n {
            sum = (*pa.add(i)).mul_add(*pb.add(i), sum);
            i += 1;
        }
        sum
    }

    #[target_feature(enable = "avx2,fma")]
    pub unsafe fn dot(a: &[f64], b: &[f64]) -> f64 {
        dot_fma(a, b)
    }

    #[target_feature(enable = "avx2,fma")]
    pub unsafe fn matvec(m: &[f64], x: &[f64], out: &mut [f64]) {
        for (row, o) in m.chunks_exact(x.len()).zip(out.iter_mut()) {
            *o = dot_fma(row, x);
        }
    }

    /// Quadratic forms of `G` vectors sharing each load of `M`. Off-diagonal
    /// products accumulate in vector registers across rows, so there is a
    /// single horizontal reduction per vector. Row segments start on the
    /// 4-column grid, masking the lanes left of the diagonal.
    #[target_feature(enable = "avx2,fma")]
    pub unsafe fn quad_forms<const G: usize>(m: &[f64], xs: &[&[f64]], out: &mut [f64]) {
        use std::arch::x86_64::*;
        let n = xs[0].len();
        assert!(xs.len() == G && out.len() == G && m.len() == n * n);
        assert!(xs.iter().all(|x| x.len() == n));
        let nv = n & !3;
        let pm = m.as_ptr();
        let px: [*const f64; G] = std::array::from_fn(|g| xs[g].as_ptr());
        let lanes = _mm256_set_epi64x(3, 2, 1, 0);
        let mut acc0 = [_mm256_setzero_pd(); G];
        let mut acc1 = [_mm256_setzero_pd(); G];
        let mut diag = [0.0; G];
        let mut rest = [0.0; G];
        for i in 0..n {
            let row = pm.add(i * n);
            let aii = *row.add(i);
            let xi: [f64; G] = std::array::from_fn(|g| *px[g].add(i));
            let s: [__m256d; G] = std::array::from_fn(|g| _mm256_set1_pd(xi[g]));
            for g in 0..G {
                diag[g] = (xi[g] * xi[g]).mul_add(aii, diag[g]);
            }
            let mut j = (i + 1) & !3;
            if j < i + 1 {
                if j + 4 <= nv {
                    let keep = _mm256_castsi256_pd(_mm256_cmpgt_epi64(lanes, _mm256_set1_epi64x((i - j) as i64)));
                    let a = _mm256_and_pd(_mm256_loadu_pd(row.add(j)), keep);
                    for g in 0..G {
                        let p = _mm256_mul_pd(a, _mm256_loadu_pd(px[g].add(j)));
                        acc1[g] = _mm256_fmadd_pd(p, s[g], acc1[g]);
                    }
                    j += 4;
                } else {
                    j = i + 1;
                }
            }
            while j + 8 <= nv {
                let a0 = _mm256_loadu_pd(row.add(j));
                let a1 = _mm256_loadu_pd(row.add(j + 4));
                for g in 0..G {
                    let p0 = _mm256_mul_pd(a0, _mm256_loadu_pd(px[g].add(j)));
                    let p1 = _mm256_mul_pd(a1, _mm256_loadu_pd(px[g].add(j + 4)));
                    acc0[g] = _mm256_fmadd_pd(p0, s[g], acc0[g]);
                    acc1[g] = _mm256_fmadd_pd(p1, s[g], acc1[g]);
                }
                j += 8;
            }
            if j + 4 <= nv {
                let a0 = _mm256_loadu_pd(row.add(j));
                for g in 0..G {
                    let p0 = _mm256_mul_pd(a0, _mm256_loadu_pd(px[g].add(j)));
                    acc0[g] = _mm256_fmadd_pd(p0, s[g], acc0[g]);
                }
                j += 4;
            }
            while j < n {
                let a = *row.add(j);
                for g in 0..G {
                    rest[g] = (xi[g] * a).mul_add(*px[g].add(j), rest[g]);
                }
                j += 1;
            }
        }
        for g in 0..G {
            let acc = _mm256_add_pd(acc0[g], acc1[g]);
            let pair = _mm_add_pd(_mm256_castpd256_pd128(acc), _mm256_extractf128_pd(acc, 1));
            let off = _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
            out[g] = diag[g] + 2.0 * (off + rest[g]);
        }
    }

    #[target_feature(enable = "avx2,fma")]
    pub unsafe fn rank_one(m: &mut [f64], u: &[f64], alpha: f64) {
        super::rank_one_portable(m, u, alpha)
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factors `a` (row-major, `n × n`). Returns `None` if a pivot is not
    /// strictly positive.
    pub fn factor(a: &[f64], n: usize) -> Option<Self> {
        debug_assert_eq!(a.len(), n * n);
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let row_j = &l[j * n..j * n + j];
            let pivot = a[j * n + j] - dot(row_j, row_j);
            if !(pivot > 0.0) || !pivot.is_finite() {
                return None;
            }
            let ljj = pivot.sqrt();
            l[j * n + j] = ljj;
            for i in j + 1..n {
                let s = a[i * n + j] - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
                l[i * n + j] = s / ljj;
            }
        }
        Some(Self { n, l })
    }

    /// Row-major lower factor `L` with `A = LLᵀ`.
    pub fn lower(&self) -> &[f64] {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = rhs` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let s = x[i] - dot(&self.l[i * n..i * n + i], &x[..i]);
            x[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for (k, xk) in x.iter().enumerate().skip(i + 1) {
                s -= self.l[k * n + i] * xk;
            }
            x[i] = s / self.l[i * n + i];
        }
    }

    /// `A⁻¹` as a symmetric row-major matrix.
    pub fn inverse(&self) -> Vec<f64> {
        let n = self.n;
        let mut inv = vec![0.0; n * n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            col.iter_mut().for_each(|c| *c = 0.0);
            col[j] = 1.0;
            self.solve_in_place(&mut col);
            for i in 0..n {
                inv[i * n + j] = col[i];
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let avg = 0.5 * (inv[i * n + j] + inv[j * n + i]);
                inv[i * n + j] = avg;
                inv[j * n + i] = avg;
            }
        }
        inv
    }

    /// `ln det A`.
    pub fn log_det(&self) -> f64 {
        (0..self.n).map(|i| self.l[i * self.n + i].ln()).sum::<f64>() * 2.0
    }
}
