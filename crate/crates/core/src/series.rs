//! Power series arithmetic by FFT.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::{lit, Scalar};

/// Cyclic convolution of two real sequences of length `<= len`, where `len` is
/// a power of two. Both inputs are packed into one complex transform. Plans
/// are built per call so their twiddle tables do not outlive it.
struct Convolver<T: Scalar> {
    buf: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
}

impl<T: Scalar> Convolver<T> {
    fn new() -> Self {
        Convolver { buf: Vec::new(), scratch: Vec::new() }
    }

    /// Writes the first `out.len()` coefficients of the cyclic convolution
    /// `a * b` of length `len` into `out`, offset by `skip`.
    fn convolve(&mut self, a: &[T], b: &[T], len: usize, skip: usize, out: &mut [T]) {
        debug_assert!(len.is_power_of_two() && a.len() <= len && b.len() <= len);
        self.buf.clear();
        self.buf.resize(len, Complex::new(T::zero(), T::zero()));
        for (z, &x) in self.buf.iter_mut().zip(a) {
            z.re = x;
        }
        for (z, &y) in self.buf.iter_mut().zip(b) {
            z.im = y;
        }
        let fwd = FftPlanner::new().plan_fft_forward(len);
        self.scratch.resize(fwd.get_inplace_scratch_len(), Complex::new(T::zero(), T::zero()));
        fwd.process_with_scratch(&mut self.buf, &mut self.scratch);

        // With Z = A + iB: A_k = (Z_k + conj Z_{-k}) / 2, B_k = (Z_k - conj Z_{-k}) / 2i,
        // so A_k B_k = (Z_k^2 - conj(Z_{-k})^2) / 4i.
        let quarter_i = Complex::new(T::zero(), lit::<T>(0.25));
        let prod = |zk: Complex<T>, zm: Complex<T>| -> Complex<T> {
            let c = zm.conj();
            (zk * zk - c * c) * (-quarter_i)
        };
        let z0 = self.buf[0];
        self.buf[0] = prod(z0, z0);
        for k in 1..=len / 2 {
            let m = len - k;
            let (zk, zm) = (self.buf[k], self.buf[m]);
            self.buf[k] = prod(zk, zm);
            if m != k {
                self.buf[m] = prod(zm, zk);
            }
        }
        // inverse transform as conj(F(conj z)); only real parts are kept
        for z in self.buf.iter_mut() {
            *z = z.conj();
        }
        fwd.process_with_scratch(&mut self.buf, &mut self.scratch);
        let scale = T::one() / lit::<T>(len as f64);
        for (o, z) in out.iter_mut().zip(&self.buf[skip..]) {
            *o = z.re * scale;
        }
    }
}

/// First `len` coefficients of `1 / g` for a series with `g[0] = 1`, by
/// Newton iteration `f <- f + f (1 - g f)`, doubling precision each step.
pub(crate) fn reciprocal<T: Scalar>(g: &[T], len: usize) -> Vec<T> {
    debug_assert!(!g.is_empty() && g[0] == T::one());
    let mut f = vec![T::zero(); len];
    if len == 0 {
        return f;
    }
    f[0] = T::one();
    let mut conv = Convolver::new();
    let mut k = 1usize;
    let mut err = Vec::new();
    let mut part = Vec::new();
    while k < len {
        let k2 = (2 * k).min(len);
        let m = k2 - k;
        let size = transform_len(m);
        // coefficients k..k2 of g * f_k, taken over blocks of f_k so the
        // transform length depends on m only; lower ones are 1, 0, 0, ...
        let width = size - m + 1;
        err.clear();
        err.resize(m, T::zero());
        part.resize(m, T::zero());
        let mut a = 0;
        while a < k {
            let b = (a + width).min(k);
            let lo = k + 1 - b;
            let hi = (k2 - a).min(g.len());
            if lo < hi {
                conv.convolve(&g[lo..hi], &f[a..b], size, b - 1 - a, &mut part);
                for (e, &p) in err.iter_mut().zip(&part) {
                    *e = *e - p;
                }
            }
            a = b;
        }
        let (head, rest) = f.split_at_mut(k);
        conv.convolve(&head[..m], &err, size, 0, &mut rest[..m]);
        k = k2;
    }
    f
}

fn transform_len(m: usize) -> usize {
    (2 * m).next_power_of_two()
}

/// Peak bytes used by [`reciprocal`] for `len` coefficients.
pub(crate) fn reciprocal_bytes<T>(len: usize) -> usize {
    let mut k = 1usize;
    let mut size = 1usize;
    while k < len {
        let k2 = (2 * k).min(len);
        size = size.max(transform_len(k2 - k));
        k = k2;
    }
    let word = std::mem::size_of::<T>();
    // complex buffer, scratch and twiddles, the result and the error terms
    6 * word * size + 2 * word * len
}
