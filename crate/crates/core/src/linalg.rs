//! Minimal dense linear algebra on small complex matrices.
//!
//! Spinor-space matrices are at most 4x4, so everything is stored in fixed
//! `[[C<T>; 4]; 4]` arrays with an explicit runtime size. The module also
//! carries the banded solvers used by the time steppers: a cyclic scalar
//! tridiagonal solve (Schrodinger) and a cyclic 2x2-block tridiagonal solve
//! (1+1 Dirac), both closed with a Woodbury corner correction.

use num_traits::Zero;

use crate::error::{PolarError, Result};
use crate::scalar::{czero, lit, C, Real};

/// Maximum spinor-space dimension.
pub const NMAX: usize = 4;

/// Small square complex matrix with runtime size `n <= 4`.
#[derive(Clone, Copy, Debug)]
pub struct CMat<T> {
    pub n: usize,
    pub a: [[C<T>; NMAX]; NMAX],
}

/// Small complex vector with runtime size `n <= 4`.
#[derive(Clone, Copy, Debug)]
pub struct CVec<T> {
    pub n: usize,
    pub a: [C<T>; NMAX],
}

impl<T: Real> CMat<T> {
    pub fn zeros(n: usize) -> Self {
        CMat { n, a: [[czero(); NMAX]; NMAX] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i][i] = C::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_rows(rows: &[&[C<T>]]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                m.a[i][j] = *v;
            }
        }
        m
    }

    pub fn scale(&self, s: C<T>) -> Self {
        let mut m = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                m.a[i][j] = self.a[i][j] * s;
            }
        }
        m
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut m = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                m.a[i][j] = self.a[i][j] + o.a[i][j];
            }
        }
        m
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut m = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                m.a[i][j] = self.a[i][j] - o.a[i][j];
            }
        }
        m
    }

    pub fn matmul(&self, o: &Self) -> Self {
        let n = self.n;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.a[i][k];
                if aik.is_zero() {
                    continue;
                }
                for j in 0..n {
                    m.a[i][j] = m.a[i][j] + aik * o.a[k][j];
                }
            }
        }
        m
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.a[i][j] = self.a[j][i].conj();
            }
        }
        m
    }

    pub fn apply(&self, v: &CVec<T>) -> CVec<T> {
        let n = self.n;
        let mut out = CVec::zeros(n);
        for i in 0..n {
            let mut acc = czero();
            for j in 0..n {
                acc = acc + self.a[i][j] * v.a[j];
            }
            out.a[i] = acc;
        }
        out
    }

    pub fn commutator(&self, o: &Self) -> Self {
        self.matmul(o).sub(&o.matmul(self))
    }

    pub fn anticommutator(&self, o: &Self) -> Self {
        self.matmul(o).add(&o.matmul(self))
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> T {
        let mut m = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                let v = self.a[i][j].norm_sqr().sqrt();
                if v > m {
                    m = v;
                }
            }
        }
        m
    }

    /// Frobenius norm.
    pub fn fro_norm(&self) -> T {
        let mut s = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                s = s + self.a[i][j].norm_sqr();
            }
        }
        s.sqrt()
    }

    /// Matrix exponential by scaling-and-squaring with a Taylor kernel.
    pub fn exp(&self) -> Self {
        let norm = self.max_abs();
        let mut k = 0u32;
        let mut scale = T::one();
        while norm * scale > lit(0.25) && k < 40 {
            scale = scale * lit(0.5);
            k += 1;
        }
        let b = self.scale(C::new(scale, T::zero()));
        let mut term = Self::identity(self.n);
        let mut acc = Self::identity(self.n);
        for j in 1..24 {
            term = term.matmul(&b).scale(C::new(T::one() / lit(j as f64), T::zero()));
            acc = acc.add(&term);
            if term.max_abs() < lit(1e-20) {
                break;
            }
        }
        let mut res = acc;
        for _ in 0..k {
            res = res.matmul(&res);
        }
        res
    }

    /// Inverse via pivoted Gauss-Jordan.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.n;
        let mut a = self.a;
        let mut inv = Self::identity(n).a;
        for col in 0..n {
            let mut piv = col;
            let mut best = a[col][col].norm_sqr();
            for r in col + 1..n {
                let v = a[r][col].norm_sqr();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best == T::zero() {
                return Err(PolarError::Numerical("singular matrix in inverse".into()));
            }
            a.swap(col, piv);
            inv.swap(col, piv);
            let d = a[col][col];
            for j in 0..n {
                a[col][j] = a[col][j] / d;
                inv[col][j] = inv[col][j] / d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[r][col];
                if f.is_zero() {
                    continue;
                }
                for j in 0..n {
                    a[r][j] = a[r][j] - f * a[col][j];
                    inv[r][j] = inv[r][j] - f * inv[col][j];
                }
            }
        }
        Ok(CMat { n, a: inv })
    }
}

impl<T: Real> CVec<T> {
    pub fn zeros(n: usize) -> Self {
        CVec { n, a: [czero(); NMAX] }
    }

    pub fn from_slice(v: &[C<T>]) -> Self {
        let mut out = Self::zeros(v.len());
        out.a[..v.len()].copy_from_slice(v);
        out
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = *self;
        for i in 0..self.n {
            out.a[i] = self.a[i] + o.a[i];
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut out = *self;
        for i in 0..self.n {
            out.a[i] = self.a[i] - o.a[i];
        }
        out
    }

    pub fn scale(&self, s: C<T>) -> Self {
        let mut out = *self;
        for i in 0..self.n {
            out.a[i] = self.a[i] * s;
        }
        out
    }

    /// Hermitian inner product `<self, other>` (conjugate-linear in `self`).
    pub fn dot(&self, o: &Self) -> C<T> {
        let mut acc = czero();
        for i in 0..self.n {
            acc = acc + self.a[i].conj() * o.a[i];
        }
        acc
    }

    pub fn norm_sqr(&self) -> T {
        let mut acc = T::zero();
        for i in 0..self.n {
            acc = acc + self.a[i].norm_sqr();
        }
        acc
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }
}

/// Solves a cyclic (periodic) scalar tridiagonal system.
///
/// Row `i`: `lo[i]*x[i-1] + di[i]*x[i] + up[i]*x[i+1] = b[i]` with wraparound
/// indices, `n >= 3`. The corner entries are `lo[0]` (coupling to `x[n-1]`)
/// and `up[n-1]` (coupling to `x[0]`).
pub fn solve_cyclic_tridiag<T: Real>(
    lo: &[C<T>],
    di: &[C<T>],
    up: &[C<T>],
    b: &[C<T>],
) -> Result<Vec<C<T>>> {
    let n = di.len();
    if n < 3 || lo.len() != n || up.len() != n || b.len() != n {
        return Err(PolarError::Validation("cyclic tridiagonal shape mismatch".into()));
    }
    // Woodbury with a rank-2 corner correction.
    let solve_plain = |rhs: &[C<T>]| -> Result<Vec<C<T>>> {
        let mut c = vec![czero(); n];
        let mut d = vec![czero(); n];
        let mut denom = di[0];
        if denom.is_zero() {
            return Err(PolarError::Numerical("tridiagonal pivot breakdown".into()));
        }
        c[0] = up[0] / denom;
        d[0] = rhs[0] / denom;
        for i in 1..n {
            denom = di[i] - lo[i] * c[i - 1];
            if denom.is_zero() {
                return Err(PolarError::Numerical("tridiagonal pivot breakdown".into()));
            }
            c[i] = up[i] / denom;
            d[i] = (rhs[i] - lo[i] * d[i - 1]) / denom;
        }
        let mut x = vec![czero(); n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        Ok(x)
    };
    // A = T + u1 e_{n-1}^T-style corrections:
    //   A[0][n-1] = lo[0], A[n-1][0] = up[n-1].
    let mut u1 = vec![czero(); n];
    u1[0] = C::new(T::one(), T::zero());
    let mut u2 = vec![czero(); n];
    u2[n - 1] = C::new(T::one(), T::zero());
    let y = solve_plain(b)?;
    let z1 = solve_plain(&u1)?;
    let z2 = solve_plain(&u2)?;
    // Capacitance matrix (2x2): I + V^T Z where V^T rows pick components.
    // V^T y = [lo[0]*y[n-1], up[n-1]*y[0]].
    let one = C::new(T::one(), T::zero());
    let m00 = one + lo[0] * z1[n - 1];
    let m01 = lo[0] * z2[n - 1];
    let m10 = up[n - 1] * z1[0];
    let m11 = one + up[n - 1] * z2[0];
    let det = m00 * m11 - m01 * m10;
    if det.is_zero() {
        return Err(PolarError::Numerical("cyclic correction singular".into()));
    }
    let r0 = lo[0] * y[n - 1];
    let r1 = up[n - 1] * y[0];
    let a0 = (m11 * r0 - m01 * r1) / det;
    let a1 = (m00 * r1 - m10 * r0) / det;
    let mut x = y;
    for i in 0..n {
        x[i] = x[i] - z1[i] * a0 - z2[i] * a1;
    }
    Ok(x)
}

/// 2x2 complex block.
pub type Block<T> = [[C<T>; 2]; 2];

fn bzero<T: Real>() -> Block<T> {
    [[czero(); 2]; 2]
}

fn bident<T: Real>() -> Block<T> {
    let mut b = bzero();
    b[0][0] = C::new(T::one(), T::zero());
    b[1][1] = C::new(T::one(), T::zero());
    b
}

pub fn bmul<T: Real>(a: &Block<T>, b: &Block<T>) -> Block<T> {
    let mut o = bzero();
    for i in 0..2 {
        for j in 0..2 {
            o[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    o
}

pub fn bsub<T: Real>(a: &Block<T>, b: &Block<T>) -> Block<T> {
    let mut o = bzero();
    for i in 0..2 {
        for j in 0..2 {
            o[i][j] = a[i][j] - b[i][j];
        }
    }
    o
}

pub fn binv<T: Real>(a: &Block<T>) -> Result<Block<T>> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.is_zero() {
        return Err(PolarError::Numerical("singular 2x2 block".into()));
    }
    Ok([[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]])
}

pub fn bapply<T: Real>(a: &Block<T>, v: &[C<T>; 2]) -> [C<T>; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

/// Solves a cyclic block-tridiagonal system with 2x2 blocks.
///
/// Row `i` couples to rows `i-1`, `i`, `i+1` through `lo[i]`, `di[i]`, `up[i]`
/// (wraparound at the ends). `b` is the flat right-hand side, length `2n`.
pub fn solve_cyclic_block_tridiag<T: Real>(
    lo: &[Block<T>],
    di: &[Block<T>],
    up: &[Block<T>],
    b: &[C<T>],
) -> Result<Vec<C<T>>> {
    let n = di.len();
    if n < 3 || lo.len() != n || up.len() != n || b.len() != 2 * n {
        return Err(PolarError::Validation("block tridiagonal shape mismatch".into()));
    }
    let solve_plain = |rhs: &[C<T>]| -> Result<Vec<C<T>>> {
        let mut cmat = vec![bzero(); n];
        let mut dvec = vec![[czero(); 2]; n];
        let mut dinv = binv(&di[0])?;
        cmat[0] = bmul(&dinv, &up[0]);
        dvec[0] = bapply(&dinv, &[rhs[0], rhs[1]]);
        for i in 1..n {
            let dd = bsub(&di[i], &bmul(&lo[i], &cmat[i - 1]));
            dinv = binv(&dd)?;
            cmat[i] = bmul(&dinv, &up[i]);
            let lv = bapply(&lo[i], &dvec[i - 1]);
            let rv = [rhs[2 * i] - lv[0], rhs[2 * i + 1] - lv[1]];
            dvec[i] = bapply(&dinv, &rv);
        }
        let mut x = vec![czero(); 2 * n];
        x[2 * (n - 1)] = dvec[n - 1][0];
        x[2 * (n - 1) + 1] = dvec[n - 1][1];
        for i in (0..n - 1).rev() {
            let xn = [x[2 * (i + 1)], x[2 * (i + 1) + 1]];
            let cv = bapply(&cmat[i], &xn);
            x[2 * i] = dvec[i][0] - cv[0];
            x[2 * i + 1] = dvec[i][1] - cv[1];
        }
        Ok(x)
    };
    // Corner blocks: A[0][n-1] = lo[0], A[n-1][0] = up[n-1].
    // Woodbury with 4 correction columns.
    let y = solve_plain(b)?;
    let mut zcols: Vec<Vec<C<T>>> = Vec::with_capacity(4);
    for col in 0..4 {
        let mut e = vec![czero(); 2 * n];
        let (row, comp) = if col < 2 { (0usize, col) } else { (n - 1, col - 2) };
        e[2 * row + comp] = C::new(T::one(), T::zero());
        zcols.push(solve_plain(&e)?);
    }
    // V^T x picks [lo[0] * x[n-1 block]; up[n-1] * x[0 block]] as 4 scalars.
    let vt = |x: &[C<T>]| -> [C<T>; 4] {
        let xt = [x[2 * (n - 1)], x[2 * (n - 1) + 1]];
        let x0 = [x[0], x[1]];
        let a = bapply(&lo[0], &xt);
        let c = bapply(&up[n - 1], &x0);
        [a[0], a[1], c[0], c[1]]
    };
    let mut cap = CMat::<T>::identity(4);
    for (j, z) in zcols.iter().enumerate() {
        let vz = vt(z);
        for i in 0..4 {
            cap.a[i][j] = cap.a[i][j] + vz[i];
        }
    }
    let rhs_small = vt(&y);
    let capinv = cap.inverse()?;
    let mut alpha = [czero(); 4];
    for i in 0..4 {
        let mut acc = czero();
        for j in 0..4 {
            acc = acc + capinv.a[i][j] * rhs_small[j];
        }
        alpha[i] = acc;
    }
    let mut x = y;
    for i in 0..2 * n {
        let mut corr = czero();
        for (j, z) in zcols.iter().enumerate() {
            corr = corr + z[i] * alpha[j];
        }
        x[i] = x[i] - corr;
    }
    Ok(x)
}
