//! Raw numeric kernels shared by forward and backward passes.

/// Row-major matrix view descriptor: `rows x cols`, optionally read transposed.
#[derive(Clone, Copy)]
pub(crate) struct Mat<'a> {
    pub data: &'a [f64],
    pub rows: usize,
    pub cols: usize,
    pub transposed: bool,
}

impl<'a> Mat<'a> {
    pub fn new(data: &'a [f64], rows: usize, cols: usize) -> Self {
        Self {
            data,
            rows,
            cols,
            transposed: false,
        }
    }

    pub fn t(self) -> Self {
        Self {
            transposed: !self.transposed,
            ..self
        }
    }

    /// Logical shape after transposition.
    fn dims(&self) -> (usize, usize) {
        if self.transposed {
            (self.cols, self.rows)
        } else {
            (self.rows, self.cols)
        }
    }

    /// (row stride, col stride) of the logical matrix.
    fn strides(&self) -> (isize, isize) {
        if self.transposed {
            (1, self.cols as isize)
        } else {
            (self.cols as isize, 1)
        }
    }
}

/// `out (m x n) = beta * out + a * b`, with `out` row-major.
pub(crate) fn gemm(a: Mat<'_>, b: Mat<'_>, out: &mut [f64], beta: f64) {
    let (m, k) = a.dims();
    let (k2, n) = b.dims();
    assert_eq!(k, k2, "gemm inner dimensions");
    assert_eq!(out.len(), m * n, "gemm output size");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        out.iter_mut().for_each(|v| *v *= beta);
        return;
    }
    let (rsa, csa) = a.strides();
    let (rsb, csb) = b.strides();
    // SAFETY: the strides describe views that stay inside `a.data`, `b.data`
    // and `out`, whose lengths were checked against the logical dimensions.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            rsa,
            csa,
            b.data.as_ptr(),
            rsb,
            csb,
            beta,
            out.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Unfolds one `(channels, length)` sample into a `(channels * kernel, out_len)` patch matrix.
pub(crate) fn im2col(x: &[f64], channels: usize, len: usize, kernel: usize, cols: &mut [f64]) {
    let out_len = len + 1 - kernel;
    for c in 0..channels {
        let row_src = &x[c * len..(c + 1) * len];
        for k in 0..kernel {
            let dst = &mut cols[(c * kernel + k) * out_len..(c * kernel + k + 1) * out_len];
            dst.copy_from_slice(&row_src[k..k + out_len]);
        }
    }
}

/// Adjoint of [`im2col`]: scatters patch gradients back into `dx`.
pub(crate) fn col2im(cols: &[f64], channels: usize, len: usize, kernel: usize, dx: &mut [f64]) {
    let out_len = len + 1 - kernel;
    for c in 0..channels {
        let row_dst = &mut dx[c * len..(c + 1) * len];
        for k in 0..kernel {
            let src = &cols[(c * kernel + k) * out_len..(c * kernel + k + 1) * out_len];
            for (d, s) in row_dst[k..k + out_len].iter_mut().zip(src) {
                *d += s;
            }
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

const INV_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Exact (erf-based) GELU and its derivative.
pub(crate) fn gelu(x: f64) -> (f64, f64) {
    let cdf = 0.5 * (1.0 + libm::erf(x * INV_SQRT_2));
    let pdf = INV_SQRT_2PI * (-0.5 * x * x).exp();
    (x * cdf, cdf + x * pdf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gemm_handles_transposes() {
        // a = [[1,2],[3,4]], b = [[5,6],[7,8]]
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [5.0, 6.0, 7.0, 8.0];
        let mut out = [0.0; 4];
        gemm(Mat::new(&a, 2, 2), Mat::new(&b, 2, 2), &mut out, 0.0);
        assert_eq!(out, [19.0, 22.0, 43.0, 50.0]);
        gemm(Mat::new(&a, 2, 2).t(), Mat::new(&b, 2, 2), &mut out, 0.0);
        assert_eq!(out, [26.0, 30.0, 38.0, 44.0]);
        gemm(Mat::new(&a, 2, 2), Mat::new(&b, 2, 2).t(), &mut out, 0.0);
        assert_eq!(out, [17.0, 23.0, 39.0, 53.0]);
    }

    #[test]
    fn im2col_roundtrip_counts_overlaps() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let mut cols = [0.0; 6];
        im2col(&x, 1, 4, 3, &mut cols);
        assert_eq!(cols, [1.0, 2.0, 2.0, 3.0, 3.0, 4.0]);
        let mut dx = [0.0; 4];
        col2im(&[1.0; 6], 1, 4, 3, &mut dx);
        assert_eq!(dx, [1.0, 2.0, 2.0, 1.0]);
    }

    #[test]
    fn gelu_at_zero() {
        assert_eq!(gelu(0.0), (0.0, 0.5));
        assert_eq!(sigmoid(0.0), 0.5);
    }
}
