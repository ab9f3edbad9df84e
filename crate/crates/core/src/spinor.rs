//! Spinor bilinears, polar decomposition and reconstruction.
//!
//! Index conventions: the bilinear vectors `U^a`, `S^a` and the unit vectors
//! `u^a`, `s^a` are stored with upper indices; the angular tensor `M^{ab}`
//! with both indices upper. The density normalization `phi2` is defined by
//! `U^a = phi2 u^a`: it equals `2 phi^2` in dims 2 and 4 and `phi^2` in
//! dim 3, so `grad ln phi2 = grad ln phi^2` in every dimension.

use crate::clifford::CliffordBasis;
use crate::error::{PolarError, Result};
use crate::linalg::{CMat, CVec};
use crate::lorentz::{self, M4, V4};
use crate::scalar::{cre, czero, lit, C, Real};

/// Relative threshold separating genuine flag-dipole spinors from roundoff.
pub const SINGULAR_THRESHOLD: f64 = 1e-12;

/// A spinor value (2 components in dims 2 and 3, 4 components in dim 4).
#[derive(Clone, Copy, Debug)]
pub struct Spinor<T> {
    pub c: CVec<T>,
}

impl<T: Real> Spinor<T> {
    pub fn new(components: &[C<T>]) -> Self {
        Spinor { c: CVec::from_slice(components) }
    }

    pub fn zero(n: usize) -> Self {
        Spinor { c: CVec::zeros(n) }
    }

    pub fn len(&self) -> usize {
        self.c.n
    }

    pub fn is_empty(&self) -> bool {
        self.c.n == 0
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Spinor { c: self.c.scale(s) }
    }

    pub fn add(&self, o: &Self) -> Self {
        Spinor { c: self.c.add(&o.c) }
    }

    pub fn norm_sqr(&self) -> T {
        self.c.norm_sqr()
    }
}

/// `psibar M phi = psi^dag gamma^0 M phi`.
pub fn sandwich<T: Real>(
    psi: &Spinor<T>,
    m: Option<&CMat<T>>,
    phi: &Spinor<T>,
    basis: &CliffordBasis<T>,
) -> C<T> {
    let g0 = &basis.gammas[0];
    let right = match m {
        Some(mat) => g0.matmul(mat).apply(&phi.c),
        None => g0.apply(&phi.c),
    };
    psi.c.dot(&right)
}

/// Scalar, pseudo-scalar, vector, axial-vector and rank-2 bilinears.
#[derive(Clone, Copy, Debug)]
pub struct BilinearSet<T> {
    pub dim: usize,
    /// `Phi = psibar psi`.
    pub phi: T,
    /// `Theta = i psibar pi psi` (dims 2 and 4).
    pub theta: Option<T>,
    /// `U^a = psibar gamma^a psi`.
    pub u: V4<T>,
    /// `S^a = psibar gamma^a pi psi` (dim 4).
    pub s: Option<V4<T>>,
    /// `M^{ab} = 2 i psibar sigma^{ab} psi` (dim 4).
    pub m: Option<M4<T>>,
    /// `|psi|^2`, retained as the scale for singularity thresholds.
    pub norm_sqr: T,
}

/// Computes every bilinear defined in the working dimension.
///
/// All outputs are real by construction; imaginary parts above
/// `1e-12 |psi|^2` signal a representation/consistency bug and error out.
pub fn compute_bilinears<T: Real>(psi: &Spinor<T>, basis: &CliffordBasis<T>) -> Result<BilinearSet<T>> {
    let dim = basis.dim();
    if psi.len() != basis.spinor_dim {
        return Err(PolarError::Validation(format!(
            "spinor has {} components, representation needs {}",
            psi.len(),
            basis.spinor_dim
        )));
    }
    let scale = psi.norm_sqr();
    let tol = lit::<T>(1e-12) * (scale + T::one());
    let check_real = |z: C<T>, what: &str| -> Result<T> {
        if z.im.abs() > tol {
            return Err(PolarError::Consistency(format!(
                "bilinear {what} has imaginary part {:?}",
                z.im
            )));
        }
        Ok(z.re)
    };

    let phi = check_real(sandwich(psi, None, psi, basis), "Phi")?;
    let theta = match basis.parity.as_ref() {
        Some(par) => {
            let v = sandwich(psi, Some(par), psi, basis) * C::new(T::zero(), T::one());
            Some(check_real(v, "Theta")?)
        }
        None => None,
    };
    let mut u = lorentz::zero_v4();
    for a in 0..dim {
        u[a] = check_real(sandwich(psi, Some(&basis.gammas[a]), psi, basis), "U")?;
    }
    let (s, m) = if dim == 4 {
        let par = basis.parity.as_ref().unwrap();
        let mut sv = lorentz::zero_v4();
        for a in 0..4 {
            let ga_par = basis.gammas[a].matmul(par);
            sv[a] = check_real(sandwich(psi, Some(&ga_par), psi, basis), "S")?;
        }
        let mut mt = lorentz::zero_m4();
        for a in 0..4 {
            for b in 0..4 {
                let v = sandwich(psi, Some(&basis.sigma_upper(a, b)), psi, basis)
                    * C::new(T::zero(), lit(2.0));
                mt[a][b] = check_real(v, "M")?;
            }
        }
        (Some(sv), Some(mt))
    } else {
        (None, None)
    };

    Ok(BilinearSet { dim, phi, theta, u, s, m, norm_sqr: scale })
}

/// Module, chiral angle, velocity and spin of a regular spinor.
#[derive(Clone, Copy, Debug)]
pub struct PolarVariables<T> {
    pub dim: usize,
    /// Density normalization: `U^a = phi2 u^a` (`2 phi^2` in dims 2/4, `phi^2` in dim 3).
    pub phi2: T,
    /// Chiral angle in `(-pi, pi]` (absent in dim 3).
    pub beta: Option<T>,
    /// Unit timelike velocity, upper index.
    pub u: V4<T>,
    /// Unit spacelike spin, upper index (dim 4).
    pub s: Option<V4<T>>,
}

/// Inverts the polar parametrization of the bilinears.
pub fn polar_decompose<T: Real>(b: &BilinearSet<T>) -> Result<PolarVariables<T>> {
    let scale = b.norm_sqr * lit::<T>(SINGULAR_THRESHOLD);
    let (phi2, beta) = match b.dim {
        3 => {
            if b.phi <= scale {
                return Err(PolarError::SingularSpinor { invariant: "Phi".into() });
            }
            (b.phi, None)
        }
        _ => {
            let theta = b.theta.unwrap_or(T::zero());
            let mag = (b.phi * b.phi + theta * theta).sqrt();
            if mag <= scale {
                return Err(PolarError::SingularSpinor { invariant: "Phi^2+Theta^2".into() });
            }
            (mag, Some(theta.atan2(b.phi)))
        }
    };
    let mut u = lorentz::zero_v4();
    for a in 0..b.dim {
        u[a] = b.u[a] / phi2;
    }
    let s = b.s.map(|sv| {
        let mut s = lorentz::zero_v4();
        for a in 0..4 {
            s[a] = sv[a] / phi2;
        }
        s
    });
    Ok(PolarVariables { dim: b.dim, phi2, beta, u, s })
}

/// A spin-group element used to orient reconstructed spinors.
#[derive(Clone, Copy, Debug)]
pub struct SpinorTransform<T> {
    pub l: CMat<T>,
}

impl<T: Real> SpinorTransform<T> {
    pub fn identity(basis: &CliffordBasis<T>) -> Self {
        SpinorTransform { l: CMat::identity(basis.spinor_dim) }
    }

    /// Residual of the spinorial-metric compatibility `gamma^0 L^dag gamma^0 = L^-1`.
    pub fn spinorial_residual(&self, basis: &CliffordBasis<T>) -> Result<T> {
        let g0 = &basis.gammas[0];
        let lbar = g0.matmul(&self.l.adjoint()).matmul(g0);
        let linv = self.l.inverse()?;
        Ok(lbar.sub(&linv).max_abs())
    }
}

/// Canonical transform for `(u, s)`: `L^-1 = boost(u) rotation(z -> s_rest)`,
/// so the vector representation of `L^-1` maps `e0 -> u` and `e3 -> s`.
pub fn canonical_transform<T: Real>(
    basis: &CliffordBasis<T>,
    u: &V4<T>,
    s: &V4<T>,
) -> Result<SpinorTransform<T>> {
    if basis.dim() != 4 {
        return Err(PolarError::Config("canonical transform is a dim-4 construction".into()));
    }
    let metric = basis.metric;
    let b = lorentz::pure_boost(u, 4);
    let binv = lorentz::lorentz_inverse(&b, &metric);
    let r = lorentz::matvec(&binv, s, 4);
    let nrm = (r[1] * r[1] + r[2] * r[2] + r[3] * r[3]).sqrt();
    if nrm <= T::zero() {
        return Err(PolarError::Validation("spin direction degenerate".into()));
    }
    let rhat = [r[1] / nrm, r[2] / nrm, r[3] / nrm];
    // rotation angle/axis taking z to rhat
    let cz = rhat[2];
    let (axis, angle) = if cz > lit(-0.999999) {
        let ax = [-rhat[1], rhat[0], T::zero()];
        let n = (ax[0] * ax[0] + ax[1] * ax[1]).sqrt();
        if n < lit(1e-14) {
            ([T::one(), T::zero(), T::zero()], T::zero())
        } else {
            ([ax[0] / n, ax[1] / n, T::zero()], n.atan2(cz))
        }
    } else {
        ([T::one(), T::zero(), T::zero()], T::PI())
    };
    let lb = lorentz::spinor_boost(basis, u);
    let lr = lorentz::spinor_rotation(basis, &axis, angle);
    let linv = lb.matmul(&lr);
    Ok(SpinorTransform { l: linv.inverse()? })
}

/// Rest spinor of the chosen representation (`(1,0,1,0)` in dim 4).
pub fn rest_spinor<T: Real>(basis: &CliffordBasis<T>) -> Spinor<T> {
    match basis.dim() {
        4 => Spinor::new(&[cre(T::one()), czero(), cre(T::one()), czero()]),
        2 => {
            let inv = T::FRAC_1_SQRT_2();
            Spinor::new(&[cre(inv), cre(inv)])
        }
        _ => Spinor::new(&[cre(T::one()), czero()]),
    }
}

/// `exp(-i beta pi / 2) = cos(beta/2) - i sin(beta/2) pi`.
pub fn chiral_phase<T: Real>(basis: &CliffordBasis<T>, beta: T) -> CMat<T> {
    let par = basis.parity.as_ref().expect("chiral phase needs a parity matrix");
    let half = beta * lit(0.5);
    CMat::identity(basis.spinor_dim)
        .scale(cre(half.cos()))
        .add(&par.scale(C::new(T::zero(), -half.sin())))
}

/// Rebuilds the spinor `phi exp(-i beta pi/2) L^-1 (1,0,1,0)^T` (dim 4).
pub fn reconstruct_spinor<T: Real>(
    p: &PolarVariables<T>,
    l: &SpinorTransform<T>,
    basis: &CliffordBasis<T>,
) -> Result<Spinor<T>> {
    if p.dim != 4 || basis.dim() != 4 {
        return Err(PolarError::Config("reconstruction is defined for dim 4".into()));
    }
    let beta = p.beta.unwrap_or(T::zero());
    let phi = (p.phi2 * lit::<T>(0.5)).sqrt();
    let linv = l.l.inverse()?;
    let op = chiral_phase(basis, beta).matmul(&linv);
    let psi0 = rest_spinor(basis);
    Ok(Spinor { c: op.apply(&psi0.c) }.scale(cre(phi)))
}

/// Angular (spin-direction) tensor from polar variables:
/// `M_{ab} = 2 phi^2 (cos b u^j s^k eps_{jkab} + sin b u_[a s_b])`, returned
/// with upper indices to match [`compute_bilinears`]. The antisymmetrization
/// bracket is unnormalized throughout: `u_[a s_b] = u_a s_b - u_b s_a`.
pub fn angular_tensor<T: Real>(p: &PolarVariables<T>, basis: &CliffordBasis<T>) -> Result<M4<T>> {
    if p.dim != 4 {
        return Err(PolarError::Config("angular tensor is a dim-4 object".into()));
    }
    let metric = basis.metric;
    let s = p.s.ok_or_else(|| PolarError::Validation("missing spin vector".into()))?;
    let beta = p.beta.unwrap_or(T::zero());
    let (sinb, cosb) = beta.sin_cos();
    let u_lo = metric.raise(&p.u);
    let s_lo = metric.raise(&s);
    let mut m_lo = lorentz::zero_m4();
    for a in 0..4 {
        for b in 0..4 {
            let mut eps_term = T::zero();
            for j in 0..4 {
                for k in 0..4 {
                    let e: T = metric.eps_lower(&[j, k, a, b]);
                    if e != T::zero() {
                        eps_term = eps_term + p.u[j] * s[k] * e;
                    }
                }
            }
            let anti = u_lo[a] * s_lo[b] - u_lo[b] * s_lo[a];
            m_lo[a][b] = p.phi2 * (cosb * eps_term + sinb * anti);
        }
    }
    let mut m_up = lorentz::zero_m4();
    for a in 0..4 {
        for b in 0..4 {
            m_up[a][b] = metric.eta::<T>(a) * metric.eta::<T>(b) * m_lo[a][b];
        }
    }
    Ok(m_up)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::{build_basis, DimensionConfig};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn basis(dim: usize) -> CliffordBasis<f64> {
        build_basis(&DimensionConfig::new(dim).unwrap()).unwrap()
    }

    fn c(re: f64, im: f64) -> C<f64> {
        C::new(re, im)
    }

    pub fn random_spinor(rng: &mut ChaCha8Rng, n: usize) -> Spinor<f64> {
        let mut v = [czero::<f64>(); 4];
        for slot in v.iter_mut().take(n) {
            *slot = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        Spinor::new(&v[..n])
    }

    #[test]
    fn rest_spinor_bilinears_match_contract() {
        let b = basis(4);
        let psi = rest_spinor(&b);
        let bl = compute_bilinears(&psi, &b).unwrap();
        assert!((bl.phi - 2.0).abs() < 1e-15);
        assert!(bl.theta.unwrap().abs() < 1e-15);
        assert_eq!(bl.u[0], 2.0);
        assert!(bl.u[1].abs() + bl.u[2].abs() + bl.u[3].abs() < 1e-15);
        let s = bl.s.unwrap();
        assert_eq!(s[3], 2.0);
        assert!(s[0].abs() + s[1].abs() + s[2].abs() < 1e-15);
    }

    #[test]
    fn zero_spinor_has_zero_bilinears() {
        let b = basis(4);
        let bl = compute_bilinears(&Spinor::zero(4), &b).unwrap();
        assert_eq!(bl.phi, 0.0);
        assert_eq!(bl.u[0], 0.0);
    }

    #[test]
    fn theta_sign_convention() {
        // (1, 0, i, 0): Phi = 0, Theta = -2 with Theta = i psibar pi psi
        let b = basis(4);
        let psi = Spinor::new(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let bl = compute_bilinears(&psi, &b).unwrap();
        assert!(bl.phi.abs() < 1e-15);
        assert!((bl.theta.unwrap() - (-2.0)).abs() < 1e-15);
    }

    #[test]
    fn polar_decompose_examples() {
        let b = basis(4);
        let psi = rest_spinor(&b);
        let p = polar_decompose(&compute_bilinears(&psi, &b).unwrap()).unwrap();
        assert!((p.phi2 - 2.0).abs() < 1e-15);
        assert_eq!(p.beta.unwrap(), 0.0);
        assert_eq!(p.u[0], 1.0);
        assert_eq!(p.s.unwrap()[3], 1.0);

        // Theta-dominant state: |beta| = pi/2
        let psi2 = Spinor::new(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let p2 = polar_decompose(&compute_bilinears(&psi2, &b).unwrap()).unwrap();
        assert!((p2.phi2 - 2.0).abs() < 1e-14);
        assert!((p2.beta.unwrap().abs() - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn singular_spinor_is_rejected_by_name() {
        let b = basis(4);
        // pure chiral (Weyl) spinor: Phi = Theta = 0, U lightlike
        let psi = Spinor::new(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let bl = compute_bilinears(&psi, &b).unwrap();
        assert!(bl.phi.abs() < 1e-15);
        assert!(bl.theta.unwrap().abs() < 1e-15);
        assert_eq!(bl.u[0], 1.0);
        assert_eq!(bl.u[3], -1.0);
        match polar_decompose(&bl) {
            Err(PolarError::SingularSpinor { invariant }) => {
                assert!(invariant.contains("Phi"));
            }
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn fierz_orthonormality_random_spinors() {
        let b = basis(4);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut tested = 0;
        while tested < 2000 {
            let psi = random_spinor(&mut rng, 4);
            let bl = compute_bilinears(&psi, &b).unwrap();
            let p = match polar_decompose(&bl) {
                Ok(p) => p,
                Err(_) => continue,
            };
            if p.phi2 < 0.05 * bl.norm_sqr {
                continue; // keep conditioning compatible with the 1e-10 bound
            }
            tested += 1;
            let m = b.metric;
            let uu = m.minkowski_dot(&p.u, &p.u);
            let s = p.s.unwrap();
            let ss = m.minkowski_dot(&s, &s);
            let us = m.minkowski_dot(&p.u, &s);
            assert!((uu - 1.0).abs() < 1e-10, "u.u = {uu}");
            assert!((ss + 1.0).abs() < 1e-10, "s.s = {ss}");
            assert!(us.abs() < 1e-10, "u.s = {us}");
            let theta = bl.theta.unwrap();
            let norm = bl.phi * bl.phi + theta * theta;
            let uu_density = m.minkowski_dot(&bl.u, &bl.u);
            assert!((uu_density - norm).abs() < 1e-9 * bl.norm_sqr * bl.norm_sqr);
        }
    }

    #[test]
    fn dim3_velocity_normalization() {
        let b = basis(3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let psi = random_spinor(&mut rng, 2);
            let bl = compute_bilinears(&psi, &b).unwrap();
            let m = b.metric;
            let uu = m.minkowski_dot(&bl.u, &bl.u);
            assert!((uu - bl.phi * bl.phi).abs() < 1e-12 * (1.0 + bl.norm_sqr * bl.norm_sqr));
            if bl.phi > 0.05 * bl.norm_sqr {
                let p = polar_decompose(&bl).unwrap();
                let unorm = m.minkowski_dot(&p.u, &p.u);
                assert!((unorm - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn dim2_density_invariant() {
        let b = basis(2);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let psi = random_spinor(&mut rng, 2);
            let bl = compute_bilinears(&psi, &b).unwrap();
            let m = b.metric;
            let uu = m.minkowski_dot(&bl.u, &bl.u);
            let th = bl.theta.unwrap();
            assert!(
                (uu - (bl.phi * bl.phi + th * th)).abs() < 1e-12 * (1.0 + bl.norm_sqr * bl.norm_sqr)
            );
        }
    }

    #[test]
    fn reconstruct_identity_and_beta_pi() {
        let b = basis(4);
        let p = PolarVariables {
            dim: 4,
            phi2: 2.0,
            beta: Some(0.0),
            u: [1.0, 0.0, 0.0, 0.0],
            s: Some([0.0, 0.0, 0.0, 1.0]),
        };
        let id = SpinorTransform::identity(&b);
        let psi = reconstruct_spinor(&p, &id, &b).unwrap();
        for (got, want) in psi.c.a.iter().zip([1.0, 0.0, 1.0, 0.0]) {
            assert!((got.re - want).abs() < 1e-14 && got.im.abs() < 1e-14);
        }
        // beta = pi flips the scalar sector per the Theta sign convention
        let p_pi = PolarVariables { beta: Some(std::f64::consts::PI), ..p };
        let psi_pi = reconstruct_spinor(&p_pi, &id, &b).unwrap();
        let bl = compute_bilinears(&psi_pi, &b).unwrap();
        assert!((bl.phi + 2.0).abs() < 1e-13);
        assert!(bl.theta.unwrap().abs() < 1e-13);
        let back = polar_decompose(&bl).unwrap();
        assert!((back.beta.unwrap() - std::f64::consts::PI).abs() < 1e-13);
    }

    #[test]
    fn reconstruct_round_trip_random_orientations() {
        let b = basis(4);
        let metric = b.metric;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let lam = lorentz::random_lorentz::<f64, _>(&mut rng, &metric, 2.0);
            let u = lorentz::matvec(&lam, &[1.0, 0.0, 0.0, 0.0], 4);
            let s = lorentz::matvec(&lam, &[0.0, 0.0, 0.0, 1.0], 4);
            let p = PolarVariables {
                dim: 4,
                phi2: rng.gen_range(0.5..3.0),
                beta: Some(rng.gen_range(-3.0..3.0)),
                u,
                s: Some(s),
            };
            let l = canonical_transform(&b, &u, &s).unwrap();
            assert!(l.spinorial_residual(&b).unwrap() < 1e-12);
            let psi = reconstruct_spinor(&p, &l, &b).unwrap();
            let back = polar_decompose(&compute_bilinears(&psi, &b).unwrap()).unwrap();
            assert!((back.phi2 - p.phi2).abs() < 1e-10 * p.phi2);
            assert!((back.beta.unwrap() - p.beta.unwrap()).abs() < 1e-10);
            for a in 0..4 {
                assert!((back.u[a] - u[a]).abs() < 1e-10, "u mismatch");
                assert!((back.s.unwrap()[a] - s[a]).abs() < 1e-10, "s mismatch");
            }
        }
    }

    #[test]
    fn boosted_reconstruction_matches_vector_boost_oracle() {
        let b = basis(4);
        let zeta = 0.8f64;
        let u = [zeta.cosh(), 0.0, 0.0, zeta.sinh()];
        let s = [zeta.sinh(), 0.0, 0.0, zeta.cosh()];
        let p = PolarVariables { dim: 4, phi2: 2.0, beta: Some(0.0), u, s: Some(s) };
        let l = canonical_transform(&b, &u, &s).unwrap();
        let psi = reconstruct_spinor(&p, &l, &b).unwrap();
        let back = polar_decompose(&compute_bilinears(&psi, &b).unwrap()).unwrap();
        for a in 0..4 {
            assert!((back.u[a] - u[a]).abs() < 1e-12);
        }
    }

    #[test]
    fn angular_tensor_matches_bilinear_m() {
        let b = basis(4);
        let p = PolarVariables {
            dim: 4,
            phi2: 2.0,
            beta: Some(0.0),
            u: [1.0, 0.0, 0.0, 0.0],
            s: Some([0.0, 0.0, 0.0, 1.0]),
        };
        let m = angular_tensor(&p, &b).unwrap();
        for a in 0..4 {
            for bb in 0..4 {
                let expect = if (a, bb) == (1, 2) {
                    2.0
                } else if (a, bb) == (2, 1) {
                    -2.0
                } else {
                    0.0
                };
                assert!((m[a][bb] - expect).abs() < 1e-14, "M[{a}][{bb}] = {}", m[a][bb]);
            }
        }
        // random regular spinors: angular_tensor(polar(psi)) = bilinear M
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut tested = 0;
        while tested < 300 {
            let psi = random_spinor(&mut rng, 4);
            let bl = compute_bilinears(&psi, &b).unwrap();
            let p = match polar_decompose(&bl) {
                Ok(p) if p.phi2 > 0.05 * bl.norm_sqr => p,
                _ => continue,
            };
            tested += 1;
            let mt = angular_tensor(&p, &b).unwrap();
            let mb = bl.m.unwrap();
            for a in 0..4 {
                for cc in 0..4 {
                    assert!(
                        (mt[a][cc] - mb[a][cc]).abs() < 1e-10 * (1.0 + bl.norm_sqr),
                        "M[{a}][{cc}]: polar {} vs bilinear {}",
                        mt[a][cc],
                        mb[a][cc]
                    );
                }
            }
        }
        // phi2 -> 0 sends M -> 0
        let p0 = PolarVariables {
            dim: 4,
            phi2: 0.0,
            beta: Some(0.3),
            u: [1.0, 0.0, 0.0, 0.0],
            s: Some([0.0, 0.0, 0.0, 1.0]),
        };
        let m0 = angular_tensor(&p0, &b).unwrap();
        for row in m0.iter() {
            for v in row.iter() {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn theta_flip_flips_beta_sign_exactly() {
        let b = basis(4);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let psi = random_spinor(&mut rng, 4);
            let bl = compute_bilinears(&psi, &b).unwrap();
            if let Ok(p) = polar_decompose(&bl) {
                let mut flipped = bl;
                flipped.theta = bl.theta.map(|t| -t);
                if let Ok(pf) = polar_decompose(&flipped) {
                    let beta = p.beta.unwrap();
                    if beta.abs() < std::f64::consts::PI - 1e-9 {
                        assert_eq!(pf.beta.unwrap(), -beta);
                    }
                }
            }
        }
    }
}
