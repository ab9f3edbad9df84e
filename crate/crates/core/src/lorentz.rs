//! Lorentz transformations in the vector and spinor representations.
//!
//! The canonical frame attached to a polar-decomposed spinor is the product
//! of the pure boost taking `e0` to the velocity `u` and (in dim 4) the
//! spatial rotation taking `e3` to the rest-frame spin direction. Its
//! Maurer-Cartan form supplies the spacetime tensorial connection, so all of
//! this is written against the generic scalar and can run on dual numbers to
//! obtain exact frame derivatives.

use rand::Rng;

use crate::clifford::{CliffordBasis, Metric};
use crate::error::{PolarError, Result};
use crate::linalg::CMat;
use crate::scalar::{lit, C, Real};

/// Spacetime vector (components beyond `dim` are zero).
pub type V4<T> = [T; 4];
/// Matrix `L^a_b` acting on upper-index vectors.
pub type M4<T> = [[T; 4]; 4];
/// Rank-3 tensor `R_{ij mu}`, all indices lower, antisymmetric in `(i, j)`.
pub type R3<T> = [[[T; 4]; 4]; 4];

pub fn zero_v4<T: Real>() -> V4<T> {
    [T::zero(); 4]
}

pub fn zero_m4<T: Real>() -> M4<T> {
    [[T::zero(); 4]; 4]
}

pub fn identity_m4<T: Real>(dim: usize) -> M4<T> {
    let mut m = zero_m4();
    for a in 0..dim {
        m[a][a] = T::one();
    }
    m
}

pub fn matvec<T: Real>(m: &M4<T>, v: &V4<T>, dim: usize) -> V4<T> {
    let mut out = zero_v4();
    for a in 0..dim {
        let mut acc = T::zero();
        for b in 0..dim {
            acc = acc + m[a][b] * v[b];
        }
        out[a] = acc;
    }
    out
}

pub fn matmul4<T: Real>(a: &M4<T>, b: &M4<T>, dim: usize) -> M4<T> {
    let mut out = zero_m4();
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = T::zero();
            for k in 0..dim {
                acc = acc + a[i][k] * b[k][j];
            }
            out[i][j] = acc;
        }
    }
    out
}

/// Inverse of a Lorentz matrix: `(L^-1)^a_b = eta^{aa} L^b_a eta_{bb}`.
pub fn lorentz_inverse<T: Real>(m: &M4<T>, metric: &Metric) -> M4<T> {
    let dim = metric.dim;
    let mut out = zero_m4();
    for a in 0..dim {
        for b in 0..dim {
            out[a][b] = metric.eta::<T>(a) * metric.eta::<T>(b) * m[b][a];
        }
    }
    out
}

/// Pure (rotation-free) boost taking `e0` to the unit timelike vector `u`.
pub fn pure_boost<T: Real>(u: &V4<T>, dim: usize) -> M4<T> {
    let mut m = zero_m4();
    m[0][0] = u[0];
    for k in 1..dim {
        m[0][k] = u[k];
        m[k][0] = u[k];
        for j in 1..dim {
            m[k][j] = u[k] * u[j] / (T::one() + u[0]);
            if k == j {
                m[k][j] = m[k][j] + T::one();
            }
        }
    }
    m
}

/// Spatial rotation (dim 4) taking the z axis to the unit 3-vector `r`.
///
/// Near `r = -z` the construction routes through a fixed half-turn about x,
/// keeping the section smooth on each branch.
pub fn rotation_z_to<T: Real>(r: &[T; 3]) -> M4<T> {
    let rodrigues = |target: &[T; 3], from_z_sign: T| -> [[T; 3]; 3] {
        // axis = (sign*z) x target, cos = sign * z . target
        let kx = -from_z_sign * target[1];
        let ky = from_z_sign * target[0];
        let c = from_z_sign * target[2];
        let mut rot = [[T::zero(); 3]; 3];
        for i in 0..3 {
            rot[i][i] = T::one();
        }
        // K = [k]_x with k = (kx, ky, 0)
        let k = [[T::zero(), T::zero(), ky], [T::zero(), T::zero(), -kx], [-ky, kx, T::zero()]];
        let mut k2 = [[T::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = T::zero();
                for l in 0..3 {
                    acc = acc + k[i][l] * k[l][j];
                }
                k2[i][j] = acc;
            }
        }
        let f = T::one() / (T::one() + c);
        for i in 0..3 {
            for j in 0..3 {
                rot[i][j] = rot[i][j] + k[i][j] + k2[i][j] * f;
            }
        }
        rot
    };

    let spatial = if r[2] > lit(-0.9) {
        rodrigues(r, T::one())
    } else {
        // compose Rodrigues from -z with a half-turn about x
        let r2 = rodrigues(r, -T::one());
        let mut out = [[T::zero(); 3]; 3];
        let flip = [
            [T::one(), T::zero(), T::zero()],
            [T::zero(), -T::one(), T::zero()],
            [T::zero(), T::zero(), -T::one()],
        ];
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = T::zero();
                for l in 0..3 {
                    acc = acc + r2[i][l] * flip[l][j];
                }
                out[i][j] = acc;
            }
        }
        out
    };

    let mut m = identity_m4(4);
    for i in 0..3 {
        for j in 0..3 {
            m[i + 1][j + 1] = spatial[i][j];
        }
    }
    m
}

/// Canonical orthonormal frame attached to `(u, s)`.
///
/// Columns are the frame vectors: column 0 is `u`; in dim 4 column 3 is `s`
/// and the frame is the product `boost(u) * rotation(z -> boost(u)^-1 s)`;
/// in dim 3 it is the pure boost; in dim 2 the spacelike completion is the
/// fixed dual `(u^1, u^0)`.
pub fn canonical_frame<T: Real>(u: &V4<T>, s: Option<&V4<T>>, metric: &Metric) -> Result<M4<T>> {
    let dim = metric.dim;
    if u[0] <= T::zero() {
        return Err(PolarError::Validation("velocity must be future timelike".into()));
    }
    match dim {
        2 => {
            let mut m = zero_m4();
            m[0][0] = u[0];
            m[1][0] = u[1];
            m[0][1] = u[1];
            m[1][1] = u[0];
            Ok(m)
        }
        3 => Ok(pure_boost(u, 3)),
        4 => {
            let s = s.ok_or_else(|| PolarError::Validation("dim 4 frame needs a spin vector".into()))?;
            let b = pure_boost(u, 4);
            let binv = lorentz_inverse(&b, metric);
            let r = matvec(&binv, s, 4);
            // r is purely spatial for orthonormal (u, s); normalize defensively
            let nrm = (r[1] * r[1] + r[2] * r[2] + r[3] * r[3]).sqrt();
            if nrm <= T::zero() {
                return Err(PolarError::Validation("spin vector collapses under inverse boost".into()));
            }
            let rs = [r[1] / nrm, r[2] / nrm, r[3] / nrm];
            let rot = rotation_z_to(&rs);
            Ok(matmul4(&b, &rot, 4))
        }
        _ => Err(PolarError::Config(format!("unsupported dimension {dim}"))),
    }
}

/// Spacetime tensorial connection of a frame field:
/// `R_{ab mu} = -eta_{ac} (d_mu M M^-1)^c_b`, antisymmetric in `(a, b)`,
/// satisfying `d_mu u_nu = u^alpha R_{alpha nu mu}` for every frame column.
pub fn frame_connection<T: Real>(m: &M4<T>, dm: &[M4<T>], metric: &Metric) -> R3<T> {
    let dim = metric.dim;
    let minv = lorentz_inverse(m, metric);
    let mut r: R3<T> = [[[T::zero(); 4]; 4]; 4];
    for (mu, dmu) in dm.iter().enumerate().take(dim) {
        let v = matmul4(dmu, &minv, dim);
        for a in 0..dim {
            for b in 0..dim {
                r[a][b][mu] = -metric.eta::<T>(a) * v[a][b];
            }
        }
        // enforce exact antisymmetry against roundoff
        for a in 0..dim {
            r[a][a][mu] = T::zero();
            for b in 0..a {
                let half = (r[a][b][mu] - r[b][a][mu]) * lit(0.5);
                r[a][b][mu] = half;
                r[b][a][mu] = -half;
            }
        }
    }
    r
}

/// Extracts the vector representation of a spin-group element:
/// `L^-1 gamma^a L = Lambda^a_b gamma^b`.
pub fn vector_rep<T: Real>(l: &CMat<T>, basis: &CliffordBasis<T>) -> Result<M4<T>> {
    let dim = basis.dim();
    let n = basis.spinor_dim;
    let linv = l.inverse()?;
    let mut out = zero_m4();
    for a in 0..dim {
        let conj = linv.matmul(&basis.gammas[a]).matmul(l);
        for b in 0..dim {
            // Lambda^a_b = (1/n) tr(gamma_b L^-1 gamma^a L)
            let gb = basis.gamma_lower(b);
            let prod = gb.matmul(&conj);
            let mut tr = C::new(T::zero(), T::zero());
            for i in 0..n {
                tr = tr + prod.a[i][i];
            }
            out[a][b] = tr.re / lit(n as f64);
        }
    }
    Ok(out)
}

/// Spinor-representation pure boost taking the rest frame to velocity `u`:
/// `exp(zeta n_k sigma^{0k})` with rapidity `zeta = acosh(u^0)`.
pub fn spinor_boost<T: Real>(basis: &CliffordBasis<T>, u: &V4<T>) -> CMat<T> {
    let dim = basis.dim();
    let mut sp = T::zero();
    for k in 1..dim {
        sp = sp + u[k] * u[k];
    }
    let sp = sp.sqrt();
    let mut gen = CMat::zeros(basis.spinor_dim);
    if sp > T::epsilon().sqrt() {
        let zeta = u[0].acosh();
        for k in 1..dim {
            let coeff = zeta * u[k] / sp;
            gen = gen.add(&basis.sigma_upper(0, k).scale(C::new(coeff, T::zero())));
        }
    } else {
        // small-velocity branch: zeta n_k ~ u_k for u^0 ~ 1
        for k in 1..dim {
            gen = gen.add(&basis.sigma_upper(0, k).scale(C::new(u[k], T::zero())));
        }
    }
    gen.exp()
}

/// Spinor-representation rotation by `angle` about the unit axis (dim 4):
/// `exp(theta (a1 sigma^{23} + a2 sigma^{31} + a3 sigma^{12}))`.
pub fn spinor_rotation<T: Real>(basis: &CliffordBasis<T>, axis: &[T; 3], angle: T) -> CMat<T> {
    let pairs = [(2usize, 3usize), (3, 1), (1, 2)];
    let mut gen = CMat::zeros(basis.spinor_dim);
    for (k, (a, b)) in pairs.iter().enumerate() {
        gen = gen.add(&basis.sigma_upper(*a, *b).scale(C::new(angle * axis[k], T::zero())));
    }
    gen.exp()
}

/// Transforms a lower-index vector: `x'_a = L_a^b x_b`.
pub fn apply_cov<T: Real>(m: &M4<T>, x: &V4<T>, metric: &Metric) -> V4<T> {
    let dim = metric.dim;
    let mut out = zero_v4();
    for a in 0..dim {
        let mut acc = T::zero();
        for b in 0..dim {
            acc = acc + metric.eta::<T>(a) * m[a][b] * metric.eta::<T>(b) * x[b];
        }
        out[a] = acc;
    }
    out
}

/// Transforms an all-lower rank-3 tensor by `L` on every index.
pub fn apply_cov_r3<T: Real>(m: &M4<T>, r: &R3<T>, metric: &Metric) -> R3<T> {
    let dim = metric.dim;
    let mut out: R3<T> = [[[T::zero(); 4]; 4]; 4];
    let low = |a: usize, i: usize| metric.eta::<T>(a) * m[a][i] * metric.eta::<T>(i);
    for a in 0..dim {
        for b in 0..dim {
            for c in 0..dim {
                let mut acc = T::zero();
                for i in 0..dim {
                    for j in 0..dim {
                        for k in 0..dim {
                            acc = acc + low(a, i) * low(b, j) * low(c, k) * r[i][j][k];
                        }
                    }
                }
                out[a][b][c] = acc;
            }
        }
    }
    out
}

/// Random proper orthochronous transformation: boost with rapidity up to
/// `max_rapidity` in a random direction, composed (dim 4) with a random
/// rotation.
pub fn random_lorentz<T: Real, R: Rng>(rng: &mut R, metric: &Metric, max_rapidity: f64) -> M4<T> {
    let dim = metric.dim;
    let zeta = rng.gen_range(0.0..max_rapidity);
    let mut n = [0.0f64; 3];
    for v in n.iter_mut().take(dim - 1) {
        *v = rng.gen_range(-1.0..1.0);
    }
    let nn = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt().max(1e-12);
    let mut u = zero_v4::<T>();
    u[0] = lit(zeta.cosh());
    for k in 1..dim {
        u[k] = lit(zeta.sinh() * n[k - 1] / nn);
    }
    let b = pure_boost(&u, dim);
    if dim < 4 {
        return b;
    }
    // random rotation via a random axis/angle
    let mut ax: [f64; 3] =
        [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let an = (ax[0] * ax[0] + ax[1] * ax[1] + ax[2] * ax[2]).sqrt().max(1e-12);
    for v in ax.iter_mut() {
        *v /= an;
    }
    let theta = rng.gen_range(0.0..std::f64::consts::PI);
    let (st, ct) = (theta.sin(), theta.cos());
    let k = [
        [0.0, -ax[2], ax[1]],
        [ax[2], 0.0, -ax[0]],
        [-ax[1], ax[0], 0.0],
    ];
    let mut rot = identity_m4::<T>(4);
    for i in 0..3 {
        for j in 0..3 {
            let mut k2 = 0.0;
            for l in 0..3 {
                k2 += k[i][l] * k[l][j];
            }
            let val = if i == j { 1.0 } else { 0.0 } + st * k[i][j] + (1.0 - ct) * k2;
            rot[i + 1][j + 1] = lit(val);
        }
    }
    matmul4(&b, &rot, 4)
}

/// Max deviation of `M eta M^T - eta` (Lorentz-condition residual).
pub fn lorentz_residual<T: Real>(m: &M4<T>, metric: &Metric) -> T {
    let dim = metric.dim;
    let mut worst = T::zero();
    for a in 0..dim {
        for b in 0..dim {
            let mut acc = T::zero();
            for c in 0..dim {
                acc = acc + m[a][c] * metric.eta::<T>(c) * m[b][c];
            }
            let want = if a == b { metric.eta::<T>(a) } else { T::zero() };
            let d = (acc - want).abs();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}
