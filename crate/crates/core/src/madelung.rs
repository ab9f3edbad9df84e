//! Polar Dirac systems, Madelung systems, and the mechanized equivalence
//! between them in dimensions 2, 3 and 4.
//!
//! Every equation is evaluated on a [`PolarPointState`]: one spacetime point
//! worth of polar data (module, chiral angle, velocity, spin, momentum,
//! spacetime connection and the scalar gradients). Residual labels follow
//! the equation tags used across the crate:
//!
//! * dim 4: `dp1`, `dp2` (first-order system) and `M1`, `M2`, `M3`
//!   (continuity, curl, Hamilton-Jacobi/guidance), plus the auxiliary-vector
//!   forms `d1`, `d2` and `q1`, `q2`, `q3`;
//! * dim 3: `constraint`, `trueequation` and `M3-1`, `M3-2`;
//! * dim 2: `chan`, `mod` and `M2-1`, `M2-2`, `M2-3`.
//!
//! The equivalence suites draw random algebraic configurations constrained
//! to satisfy one family exactly and evaluate the other; both directions
//! must vanish to numerical precision.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::clifford::CliffordBasis;
use crate::connections::{BilinearGradients, ConnectionData};
use crate::error::{PolarError, Result};
use crate::lorentz::{self, M4, R3, V4};
use crate::report::ResidualReport;
use crate::scalar::{lit, Real};
use crate::spinor::{angular_tensor, PolarVariables};

/// Point data for the polar equation systems. Vectors `u`, `s` carry upper
/// indices; `p`, the connection traces and the scalar gradients are lower;
/// `du` holds `d_mu U_nu` with both indices lower.
#[derive(Clone, Copy, Debug)]
pub struct PolarPointState<T> {
    pub dim: usize,
    pub phi2: T,
    pub beta: T,
    pub u: V4<T>,
    pub s: V4<T>,
    /// Momentum covector `P_mu`.
    pub p: V4<T>,
    /// Spacetime connection `R_{ij mu}`.
    pub r: R3<T>,
    /// `R_mu` trace.
    pub r_trace: V4<T>,
    /// `B_mu` trace (dim 4; zero otherwise).
    pub b_trace: V4<T>,
    /// `d_mu ln phi2`.
    pub dlnphi2: V4<T>,
    /// `d_mu beta`.
    pub dbeta: V4<T>,
    /// `d_mu U_nu`.
    pub du: M4<T>,
    pub m: T,
}

/// Auxiliary covectors `E`, `F` of the dim-4 reduction.
#[derive(Clone, Copy, Debug)]
pub struct AuxiliaryVectors<T> {
    pub e: V4<T>,
    pub f: V4<T>,
}

impl<T: Real> PolarPointState<T> {
    /// Assembles a state from an extracted connection; `d_mu U_nu` is taken
    /// from the bilinear gradients so field data enters unprocessed.
    pub fn from_connection(
        conn: &ConnectionData<T>,
        grads: &BilinearGradients<T>,
        basis: &CliffordBasis<T>,
        mass: T,
    ) -> Self {
        let dim = conn.dim;
        let metric = basis.metric;
        let mut du = lorentz::zero_m4();
        for mu in 0..dim {
            for nu in 0..dim {
                du[mu][nu] = metric.eta::<T>(nu) * grads.du[mu][nu];
            }
        }
        PolarPointState {
            dim,
            phi2: conn.polar.phi2,
            beta: conn.polar.beta.unwrap_or(T::zero()),
            u: conn.polar.u,
            s: conn.polar.s.unwrap_or(lorentz::zero_v4()),
            p: conn.p,
            r: conn.r,
            r_trace: conn.r_trace,
            b_trace: conn.b_trace.unwrap_or(lorentz::zero_v4()),
            dlnphi2: conn.dlnphi2,
            dbeta: conn.dbeta.unwrap_or(lorentz::zero_v4()),
            du,
            m: mass,
        }
    }

    fn p_upper(&self, basis: &CliffordBasis<T>) -> V4<T> {
        basis.metric.raise(&self.p)
    }

    fn u_lower(&self, basis: &CliffordBasis<T>) -> V4<T> {
        basis.metric.raise(&self.u)
    }

    fn s_lower(&self, basis: &CliffordBasis<T>) -> V4<T> {
        basis.metric.raise(&self.s)
    }
}

fn norm_v<T: Real>(v: &V4<T>, dim: usize) -> f64 {
    let mut acc = T::zero();
    for a in 0..dim {
        acc = acc + v[a] * v[a];
    }
    acc.sqrt().to_f64().unwrap_or(f64::NAN)
}

/// Residuals of the first-order Dirac systems in polar variables.
pub fn dirac_polar_residuals<T: Real>(
    state: &PolarPointState<T>,
    basis: &CliffordBasis<T>,
) -> Result<ResidualReport> {
    if state.dim != basis.dim() {
        return Err(PolarError::Validation("state/basis dimension mismatch".into()));
    }
    let metric = basis.metric;
    let mut report = ResidualReport::new();
    match state.dim {
        4 => {
            let p_up = state.p_upper(basis);
            let u_lo = state.u_lower(basis);
            let s_lo = state.s_lower(basis);
            let (sinb, cosb) = state.beta.sin_cos();
            let mut dp1 = lorentz::zero_v4();
            let mut dp2 = lorentz::zero_v4();
            for al in 0..4 {
                // dp1_a = b_a + B_a - 2 P^nu u_[nu s_a] + 2 m s_a cos(beta)
                let mut pterm = T::zero();
                for nu in 0..4 {
                    pterm = pterm + p_up[nu] * (u_lo[nu] * s_lo[al] - u_lo[al] * s_lo[nu]);
                }
                dp1[al] = state.dbeta[al] + state.b_trace[al] - lit::<T>(2.0) * pterm
                    + lit::<T>(2.0) * state.m * s_lo[al] * cosb;
                // dp2_a = d_a + R_a - 2 P^rho u^nu s^sigma eps_{a rho nu sigma} + 2 m s_a sin(beta)
                let mut eterm = T::zero();
                for rho in 0..4 {
                    for nu in 0..4 {
                        for sg in 0..4 {
                            let e: T = metric.eps_lower(&[al, rho, nu, sg]);
                            if e != T::zero() {
                                eterm = eterm + p_up[rho] * state.u[nu] * state.s[sg] * e;
                            }
                        }
                    }
                }
                dp2[al] = state.dlnphi2[al] + state.r_trace[al] - lit::<T>(2.0) * eterm
                    + lit::<T>(2.0) * state.m * s_lo[al] * sinb;
            }
            report.record("dp1", norm_v(&dp1, 4));
            report.record("dp2", norm_v(&dp2, 4));
        }
        3 => {
            // constraint: (1/2) R_{ija} eps^{ija} + 2 P^k u_k - 2 m
            let mut reps = T::zero();
            for i in 0..3 {
                for j in 0..3 {
                    for a in 0..3 {
                        let e: T = metric.eps_upper(&[i, j, a]);
                        if e != T::zero() {
                            reps = reps + state.r[i][j][a] * e;
                        }
                    }
                }
            }
            let mut pu = T::zero();
            for k in 0..3 {
                pu = pu + state.p[k] * state.u[k];
            }
            let constraint = reps * lit::<T>(0.5) + lit::<T>(2.0) * pu - lit::<T>(2.0) * state.m;
            report.record("constraint", constraint.abs().to_f64().unwrap_or(f64::NAN));
            // trueequation_k = R_k + 2 eps_{kab} P^a u^b + d_k
            let p_up = state.p_upper(basis);
            let mut te = lorentz::zero_v4();
            for k in 0..3 {
                let mut eterm = T::zero();
                for a in 0..3 {
                    for b in 0..3 {
                        let e: T = metric.eps_lower(&[k, a, b]);
                        if e != T::zero() {
                            eterm = eterm + p_up[a] * state.u[b] * e;
                        }
                    }
                }
                te[k] = state.r_trace[k] + lit::<T>(2.0) * eterm + state.dlnphi2[k];
            }
            report.record("trueequation", norm_v(&te, 3));
        }
        2 => {
            let p_up = state.p_upper(basis);
            let (sinb, cosb) = state.beta.sin_cos();
            let mut chan = lorentz::zero_v4();
            let mut modv = lorentz::zero_v4();
            for mu in 0..2 {
                let mut pe = T::zero();
                let mut ue = T::zero();
                for al in 0..2 {
                    let e: T = metric.eps_lower(&[al, mu]);
                    if e != T::zero() {
                        pe = pe + p_up[al] * e;
                        ue = ue + state.u[al] * e;
                    }
                }
                chan[mu] = state.dbeta[mu] - lit::<T>(2.0) * pe + lit::<T>(2.0) * state.m * ue * cosb;
                modv[mu] = state.dlnphi2[mu] + state.r_trace[mu] + lit::<T>(2.0) * state.m * ue * sinb;
            }
            report.record("chan", norm_v(&chan, 2));
            report.record("mod", norm_v(&modv, 2));
        }
        _ => return Err(PolarError::Config("unsupported dimension".into())),
    }
    Ok(report)
}

/// Residuals of the Madelung systems (continuity, curl, Hamilton-Jacobi).
pub fn madelung_residuals<T: Real>(
    state: &PolarPointState<T>,
    basis: &CliffordBasis<T>,
) -> Result<ResidualReport> {
    if state.dim != basis.dim() {
        return Err(PolarError::Validation("state/basis dimension mismatch".into()));
    }
    let metric = basis.metric;
    let dim = state.dim;
    let mut report = ResidualReport::new();

    // continuity: d_mu U^mu
    let mut cont = T::zero();
    for mu in 0..dim {
        cont = cont + metric.eta::<T>(mu) * state.du[mu][mu];
    }
    match dim {
        4 => {
            report.record("M1", cont.abs().to_f64().unwrap_or(f64::NAN));
            let p_up = state.p_upper(basis);
            let u_lo = state.u_lower(basis);
            let s_lo = state.s_lower(basis);
            let (sinb, cosb) = state.beta.sin_cos();
            // curl equation M2 in density variables
            let polar = PolarVariables {
                dim: 4,
                phi2: state.phi2,
                beta: Some(state.beta),
                u: state.u,
                s: Some(state.s),
            };
            let m_up = angular_tensor(&polar, basis)?;
            let mut u_up_vec = lorentz::zero_v4();
            for a in 0..4 {
                u_up_vec[a] = state.phi2 * state.u[a];
            }
            let mut worst = T::zero();
            for al in 0..4 {
                for nu in 0..4 {
                    // grad^[al U^nu]
                    let dal = metric.eta::<T>(al);
                    let dnu = metric.eta::<T>(nu);
                    let grad_anti = dal * dnu * (state.du[al][nu] - state.du[nu][al]);
                    // R^[al U^nu]
                    let rt_up_al = dal * state.r_trace[al];
                    let rt_up_nu = dnu * state.r_trace[nu];
                    let r_anti = rt_up_al * u_up_vec[nu] - rt_up_nu * u_up_vec[al];
                    // - R^{al nu mu} U_mu
                    let mut rterm = T::zero();
                    for m_i in 0..4 {
                        rterm = rterm + dal * dnu * state.r[al][nu][m_i] * state.phi2 * state.u[m_i];
                    }
                    // + eps^{al nu mu rho} b_mu U_rho + 2 eps^{al nu mu rho} P_mu S_rho
                    let mut eterm = T::zero();
                    for mu in 0..4 {
                        for rho in 0..4 {
                            let e: T = metric.eps_upper(&[al, nu, mu, rho]);
                            if e != T::zero() {
                                let u_rho_lo = state.phi2 * u_lo[rho];
                                let s_rho_lo = state.phi2 * s_lo[rho];
                                eterm = eterm
                                    + e * (state.dbeta[mu] * u_rho_lo
                                        + lit::<T>(2.0) * state.p[mu] * s_rho_lo);
                            }
                        }
                    }
                    let total = grad_anti + r_anti - rterm + eterm - lit::<T>(2.0) * state.m * m_up[al][nu];
                    if total.abs() > worst {
                        worst = total.abs();
                    }
                }
            }
            report.record("M2", worst.to_f64().unwrap_or(f64::NAN));
            // Hamilton-Jacobi / guidance M3
            let mut worst3 = T::zero();
            for mu in 0..4 {
                let p_mu_up = p_up[mu];
                let mut hb = T::zero();
                for nu in 0..4 {
                    let bb = state.dbeta[nu] + state.b_trace[nu];
                    hb = hb + bb * (state.u[nu] * state.s[mu] - state.u[mu] * state.s[nu]);
                }
                let mut hd = T::zero();
                for nu in 0..4 {
                    let dd = state.dlnphi2[nu] + state.r_trace[nu];
                    if dd == T::zero() {
                        continue;
                    }
                    for al in 0..4 {
                        for sg in 0..4 {
                            let e: T = metric.eps_upper(&[nu, al, sg, mu]);
                            if e != T::zero() {
                                hd = hd + dd * u_lo[al] * s_lo[sg] * e;
                            }
                        }
                    }
                }
                let res = p_mu_up
                    - state.m * cosb * state.u[mu]
                    - lit::<T>(0.5) * hb
                    - lit::<T>(0.5) * hd;
                if res.abs() > worst3 {
                    worst3 = res.abs();
                }
            }
            report.record("M3", worst3.to_f64().unwrap_or(f64::NAN));
            let _ = sinb;
        }
        3 => {
            report.record("M3-1", cont.abs().to_f64().unwrap_or(f64::NAN));
            let p_up = state.p_upper(basis);
            let u_lo = state.u_lower(basis);
            // M3-2: P^i = (m - 1/4 R_abc eps^abc) u^i - 1/2 eps^{ijk} u_j (d_k + R_k)
            let mut reps = T::zero();
            for a in 0..3 {
                for b in 0..3 {
                    for c in 0..3 {
                        let e: T = metric.eps_upper(&[a, b, c]);
                        if e != T::zero() {
                            reps = reps + state.r[a][b][c] * e;
                        }
                    }
                }
            }
            let meff = state.m - reps * lit::<T>(0.25);
            let mut worst = T::zero();
            for i in 0..3 {
                let mut eterm = T::zero();
                for j in 0..3 {
                    for k in 0..3 {
                        let e: T = metric.eps_upper(&[i, j, k]);
                        if e != T::zero() {
                            eterm = eterm + e * u_lo[j] * (state.dlnphi2[k] + state.r_trace[k]);
                        }
                    }
                }
                let res = p_up[i] - meff * state.u[i] + lit::<T>(0.5) * eterm;
                if res.abs() > worst {
                    worst = res.abs();
                }
            }
            report.record("M3-2", worst.to_f64().unwrap_or(f64::NAN));
        }
        2 => {
            report.record("M2-1", cont.abs().to_f64().unwrap_or(f64::NAN));
            let p_up = state.p_upper(basis);
            let (sinb, cosb) = state.beta.sin_cos();
            // M2-2: P^nu = m cos(beta) u^nu - 1/2 eps^{nu mu} d_mu beta
            let mut worst = T::zero();
            for nu in 0..2 {
                let mut eterm = T::zero();
                for mu in 0..2 {
                    let e: T = metric.eps_upper(&[nu, mu]);
                    if e != T::zero() {
                        eterm = eterm + e * state.dbeta[mu];
                    }
                }
                let res = p_up[nu] - state.m * cosb * state.u[nu] + lit::<T>(0.5) * eterm;
                if res.abs() > worst {
                    worst = res.abs();
                }
            }
            report.record("M2-2", worst.to_f64().unwrap_or(f64::NAN));
            // M2-3: 1/2 eps^{mu nu} d_mu U_nu = -2 m phi^2 sin(beta)
            let mut curl = T::zero();
            for mu in 0..2 {
                for nu in 0..2 {
                    let e: T = metric.eps_upper(&[mu, nu]);
                    if e != T::zero() {
                        curl = curl + e * state.du[mu][nu];
                    }
                }
            }
            // 2 m phi^2 = m phi2 in the density normalization
            let res = curl * lit::<T>(0.5) + state.m * state.phi2 * sinb;
            report.record("M2-3", res.abs().to_f64().unwrap_or(f64::NAN));
        }
        _ => return Err(PolarError::Config("unsupported dimension".into())),
    }
    Ok(report)
}

/// Auxiliary vectors of the dim-4 reduction:
/// `2E = B + grad beta + 2 m s cos(beta)`,
/// `2F = R + grad ln phi2 + 2 m s sin(beta)`.
pub fn aux_vectors<T: Real>(
    state: &PolarPointState<T>,
    basis: &CliffordBasis<T>,
) -> Result<AuxiliaryVectors<T>> {
    if state.dim != 4 {
        return Err(PolarError::Config("auxiliary vectors are a dim-4 construction".into()));
    }
    let s_lo = state.s_lower(basis);
    let (sinb, cosb) = state.beta.sin_cos();
    let mut e = lorentz::zero_v4();
    let mut f = lorentz::zero_v4();
    for mu in 0..4 {
        e[mu] = (state.b_trace[mu] + state.dbeta[mu] + lit::<T>(2.0) * state.m * s_lo[mu] * cosb)
            * lit(0.5);
        f[mu] = (state.r_trace[mu] + state.dlnphi2[mu] + lit::<T>(2.0) * state.m * s_lo[mu] * sinb)
            * lit(0.5);
    }
    Ok(AuxiliaryVectors { e, f })
}

/// Residuals of the auxiliary-vector Dirac form:
/// `d1: E_mu = P^nu u_[nu s_mu]`, `d2: F_mu = P^rho u^nu s^sigma eps_{mu rho nu sigma}`.
pub fn aux_dirac_residuals<T: Real>(
    state: &PolarPointState<T>,
    basis: &CliffordBasis<T>,
) -> Result<ResidualReport> {
    let aux = aux_vectors(state, basis)?;
    let metric = basis.metric;
    let p_up = state.p_upper(basis);
    let u_lo = state.u_lower(basis);
    let s_lo = state.s_lower(basis);
    let mut d1 = lorentz::zero_v4();
    let mut d2 = lorentz::zero_v4();
    for mu in 0..4 {
        let mut pterm = T::zero();
        for nu in 0..4 {
            pterm = pterm + p_up[nu] * (u_lo[nu] * s_lo[mu] - u_lo[mu] * s_lo[nu]);
        }
        d1[mu] = aux.e[mu] - pterm;
        let mut eterm = T::zero();
        for rho in 0..4 {
            for nu in 0..4 {
                for sg in 0..4 {
                    let e: T = metric.eps_lower(&[mu, rho, nu, sg]);
                    if e != T::zero() {
                        eterm = eterm + p_up[rho] * state.u[nu] * state.s[sg] * e;
                    }
                }
            }
        }
        d2[mu] = aux.f[mu] - eterm;
    }
    let mut report = ResidualReport::new();
    report.record("d1", norm_v(&d1, 4));
    report.record("d2", norm_v(&d2, 4));
    Ok(report)
}

/// Residuals of the auxiliary-vector Madelung form `q1`, `q2`, `q3`.
pub fn aux_madelung_residuals<T: Real>(
    state: &PolarPointState<T>,
    basis: &CliffordBasis<T>,
) -> Result<ResidualReport> {
    let aux = aux_vectors(state, basis)?;
    let metric = basis.metric;
    let p_up = state.p_upper(basis);
    let u_lo = state.u_lower(basis);
    let s_lo = state.s_lower(basis);
    let f_up = metric.raise(&aux.f);
    let e_lo = aux.e;
    // q1: u^mu F_mu
    let mut q1 = T::zero();
    for mu in 0..4 {
        q1 = q1 + state.u[mu] * aux.f[mu];
    }
    // q2_{sigma pi} = eps_{alpha nu sigma pi} F^alpha u^nu - E_[sigma u_pi] - P_[sigma s_pi]
    let mut q2max = T::zero();
    for sg in 0..4 {
        for pi in 0..4 {
            let mut eterm = T::zero();
            for al in 0..4 {
                for nu in 0..4 {
                    let e: T = metric.eps_lower(&[al, nu, sg, pi]);
                    if e != T::zero() {
                        eterm = eterm + e * f_up[al] * state.u[nu];
                    }
                }
            }
            let v = eterm - (e_lo[sg] * u_lo[pi] - e_lo[pi] * u_lo[sg])
                - (state.p[sg] * s_lo[pi] - state.p[pi] * s_lo[sg]);
            if v.abs() > q2max {
                q2max = v.abs();
            }
        }
    }
    // q3^mu = P^mu - E_nu u^[nu s^mu] - F_nu u_alpha s_sigma eps^{nu alpha sigma mu}
    let mut q3max = T::zero();
    for mu in 0..4 {
        let mut et = T::zero();
        for nu in 0..4 {
            et = et + e_lo[nu] * (state.u[nu] * state.s[mu] - state.u[mu] * state.s[nu]);
        }
        let mut ft = T::zero();
        for nu in 0..4 {
            for al in 0..4 {
                for sg in 0..4 {
                    let e: T = metric.eps_upper(&[nu, al, sg, mu]);
                    if e != T::zero() {
                        ft = ft + aux.f[nu] * u_lo[al] * s_lo[sg] * e;
                    }
                }
            }
        }
        let v = p_up[mu] - et - ft;
        if v.abs() > q3max {
            q3max = v.abs();
        }
    }
    let mut report = ResidualReport::new();
    report.record("q1", q1.abs().to_f64().unwrap_or(f64::NAN));
    report.record("q2", q2max.to_f64().unwrap_or(f64::NAN));
    report.record("q3", q3max.to_f64().unwrap_or(f64::NAN));
    Ok(report)
}

/// Optional corruption injected into sampled configurations (negative
/// controls for the equivalence suites).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Perturbation {
    /// Shift the `grad ln phi2` component 0.
    Gradient(f64),
    /// Break the trace identity: shift `R_mu` without touching `R_{ij mu}`.
    BreakTrace(f64),
}

/// Random-configuration sampler shared by both suite directions.
pub struct Sampler {
    pub max_rapidity: f64,
    pub grad_range: f64,
    pub mass_range: (f64, f64),
    pub perturbation: Option<Perturbation>,
}

impl Default for Sampler {
    fn default() -> Self {
        Sampler { max_rapidity: 2.0, grad_range: 1.0, mass_range: (0.0, 2.0), perturbation: None }
    }
}

impl Sampler {
    fn base_state<T: Real>(&self, rng: &mut ChaCha8Rng, basis: &CliffordBasis<T>) -> PolarPointState<T> {
        let dim = basis.dim();
        let metric = basis.metric;
        let lam = lorentz::random_lorentz::<T, _>(rng, &metric, self.max_rapidity);
        let e0 = {
            let mut v = lorentz::zero_v4();
            v[0] = T::one();
            v
        };
        let e3 = {
            let mut v = lorentz::zero_v4();
            v[3] = T::one();
            v
        };
        let u = lorentz::matvec(&lam, &e0, dim);
        let s = if dim == 4 { lorentz::matvec(&lam, &e3, 4) } else { lorentz::zero_v4() };
        let mut r: R3<T> = [[[T::zero(); 4]; 4]; 4];
        for i in 0..dim {
            for j in 0..i {
                for mu in 0..dim {
                    let v: T = lit(rng.gen_range(-self.grad_range..self.grad_range));
                    r[i][j][mu] = v;
                    r[j][i][mu] = -v;
                }
            }
        }
        let (rt, bt) = crate::connections::trace_vectors(&r, basis).unwrap();
        let m: T = lit(rng.gen_range(self.mass_range.0..self.mass_range.1));
        let beta: T = if dim == 3 { T::zero() } else { lit(rng.gen_range(-3.1..3.1)) };
        let phi2: T = lit(rng.gen_range(0.5..2.0));
        let mut p = lorentz::zero_v4();
        for mu in 0..dim {
            p[mu] = lit(rng.gen_range(-1.0..1.0));
        }
        PolarPointState {
            dim,
            phi2,
            beta,
            u,
            s,
            p,
            r,
            r_trace: rt,
            b_trace: bt.unwrap_or(lorentz::zero_v4()),
            dlnphi2: lorentz::zero_v4(),
            dbeta: lorentz::zero_v4(),
            du: lorentz::zero_m4(),
            m,
        }
    }

    fn apply_perturbation<T: Real>(&self, state: &mut PolarPointState<T>) {
        match self.perturbation {
            Some(Perturbation::Gradient(d)) => state.dlnphi2[0] = state.dlnphi2[0] + lit(d),
            Some(Perturbation::BreakTrace(d)) => state.r_trace[0] = state.r_trace[0] + lit(d),
            None => {}
        }
    }
}

/// Fills `du` from the frame-transport identity and the density gradient:
/// `d_mu U_nu = phi2 (d_mu ln phi2 u_nu + u^alpha R_{alpha nu mu})`.
fn derive_du<T: Real>(state: &mut PolarPointState<T>, basis: &CliffordBasis<T>) {
    let dim = state.dim;
    let u_lo = state.u_lower(basis);
    for mu in 0..dim {
        for nu in 0..dim {
            let mut transport = T::zero();
            for al in 0..dim {
                transport = transport + state.u[al] * state.r[al][nu][mu];
            }
            state.du[mu][nu] = state.phi2 * (state.dlnphi2[mu] * u_lo[nu] + transport);
        }
    }
}

/// Imposes the Dirac-form system exactly by solving for the dependent
/// quantities (the scalar gradients, and in dim 3 the longitudinal momentum).
fn impose_dirac_form<T: Real>(
    state: &mut PolarPointState<T>,
    basis: &CliffordBasis<T>,
) {
    let metric = basis.metric;
    match state.dim {
        4 => {
            let p_up = state.p_upper(basis);
            let u_lo = state.u_lower(basis);
            let s_lo = state.s_lower(basis);
            let (sinb, cosb) = state.beta.sin_cos();
            for al in 0..4 {
                let mut pterm = T::zero();
                for nu in 0..4 {
                    pterm = pterm + p_up[nu] * (u_lo[nu] * s_lo[al] - u_lo[al] * s_lo[nu]);
                }
                state.dbeta[al] = -state.b_trace[al] + lit::<T>(2.0) * pterm
                    - lit::<T>(2.0) * state.m * s_lo[al] * cosb;
                let mut eterm = T::zero();
                for rho in 0..4 {
                    for nu in 0..4 {
                        for sg in 0..4 {
                            let e: T = metric.eps_lower(&[al, rho, nu, sg]);
                            if e != T::zero() {
                                eterm = eterm + p_up[rho] * state.u[nu] * state.s[sg] * e;
                            }
                        }
                    }
                }
                state.dlnphi2[al] = -state.r_trace[al] + lit::<T>(2.0) * eterm
                    - lit::<T>(2.0) * state.m * s_lo[al] * sinb;
            }
        }
        3 => {
            // constraint fixes P.u; trueequation fixes the density gradient
            let mut reps = T::zero();
            for i in 0..3 {
                for j in 0..3 {
                    for a in 0..3 {
                        let e: T = metric.eps_upper(&[i, j, a]);
                        if e != T::zero() {
                            reps = reps + state.r[i][j][a] * e;
                        }
                    }
                }
            }
            let target = state.m - reps * lit::<T>(0.25);
            let mut pu = T::zero();
            for k in 0..3 {
                pu = pu + state.p[k] * state.u[k];
            }
            let u_lo = state.u_lower(basis);
            for k in 0..3 {
                state.p[k] = state.p[k] + (target - pu) * u_lo[k];
            }
            let p_up = state.p_upper(basis);
            for k in 0..3 {
                let mut eterm = T::zero();
                for a in 0..3 {
                    for b in 0..3 {
                        let e: T = metric.eps_lower(&[k, a, b]);
                        if e != T::zero() {
                            eterm = eterm + p_up[a] * state.u[b] * e;
                        }
                    }
                }
                state.dlnphi2[k] = -state.r_trace[k] - lit::<T>(2.0) * eterm;
            }
        }
        2 => {
            let p_up = state.p_upper(basis);
            let (sinb, cosb) = state.beta.sin_cos();
            for mu in 0..2 {
                let mut pe = T::zero();
                let mut ue = T::zero();
                for al in 0..2 {
                    let e: T = metric.eps_lower(&[al, mu]);
                    if e != T::zero() {
                        pe = pe + p_up[al] * e;
                        ue = ue + state.u[al] * e;
                    }
                }
                state.dbeta[mu] = lit::<T>(2.0) * pe - lit::<T>(2.0) * state.m * ue * cosb;
                state.dlnphi2[mu] = -state.r_trace[mu] - lit::<T>(2.0) * state.m * ue * sinb;
            }
        }
        _ => unreachable!(),
    }
    derive_du(state, basis);
}

/// Imposes the Madelung-form system exactly.
fn impose_madelung_form<T: Real>(
    state: &mut PolarPointState<T>,
    basis: &CliffordBasis<T>,
    rng: &mut ChaCha8Rng,
) {
    let metric = basis.metric;
    match state.dim {
        4 => {
            // free data: (E^0, E^3, F^1, F^2) in the canonical frame; the
            // fixed-frame solution of (q1)-(q3) determines E, F, P there.
            let e0: T = lit(rng.gen_range(-1.0..1.0));
            let e3: T = lit(rng.gen_range(-1.0..1.0));
            let f1: T = lit(rng.gen_range(-1.0..1.0));
            let f2: T = lit(rng.gen_range(-1.0..1.0));
            let e_can = [e0, T::zero(), T::zero(), e3];
            let f_can = [T::zero(), f1, f2, T::zero()];
            let p_can = [e3, f2, -f1, e0];
            let frame = lorentz::canonical_frame(&state.u, Some(&state.s), &metric).unwrap();
            // upper-index vectors transform with the frame matrix
            let e_up = lorentz::matvec(&frame, &e_can, 4);
            let f_up = lorentz::matvec(&frame, &f_can, 4);
            let p_up = lorentz::matvec(&frame, &p_can, 4);
            let e_lo = metric.raise(&e_up);
            let f_lo = metric.raise(&f_up);
            state.p = metric.raise(&p_up);
            // invert the aux definitions to get the gradients
            let s_lo = state.s_lower(basis);
            let (sinb, cosb) = state.beta.sin_cos();
            for mu in 0..4 {
                state.dbeta[mu] = lit::<T>(2.0) * e_lo[mu]
                    - state.b_trace[mu]
                    - lit::<T>(2.0) * state.m * s_lo[mu] * cosb;
                state.dlnphi2[mu] = lit::<T>(2.0) * f_lo[mu]
                    - state.r_trace[mu]
                    - lit::<T>(2.0) * state.m * s_lo[mu] * sinb;
            }
        }
        3 => {
            // M3-1 constrains the longitudinal density gradient; M3-2 defines P
            let mut d = lorentz::zero_v4();
            for k in 0..3 {
                d[k] = lit(rng.gen_range(-1.0..1.0));
            }
            let mut du_dot = T::zero();
            let mut ur = T::zero();
            for k in 0..3 {
                du_dot = du_dot + d[k] * state.u[k];
                ur = ur + state.u[k] * state.r_trace[k];
            }
            let u_lo = state.u_lower(basis);
            for k in 0..3 {
                d[k] = d[k] - (du_dot + ur) * u_lo[k];
            }
            state.dlnphi2 = d;
            // momentum from the guidance equation
            let mut reps = T::zero();
            for a in 0..3 {
                for b in 0..3 {
                    for c in 0..3 {
                        let e: T = metric.eps_upper(&[a, b, c]);
                        if e != T::zero() {
                            reps = reps + state.r[a][b][c] * e;
                        }
                    }
                }
            }
            let meff = state.m - reps * lit::<T>(0.25);
            let mut p_up = lorentz::zero_v4();
            for i in 0..3 {
                let mut eterm = T::zero();
                for j in 0..3 {
                    for k in 0..3 {
                        let e: T = metric.eps_upper(&[i, j, k]);
                        if e != T::zero() {
                            eterm = eterm + e * u_lo[j] * (state.dlnphi2[k] + state.r_trace[k]);
                        }
                    }
                }
                p_up[i] = meff * state.u[i] - lit::<T>(0.5) * eterm;
            }
            state.p = metric.raise(&p_up);
        }
        2 => {
            // M2-1 and M2-3 determine the density gradient; M2-2 defines P
            let (sinb, cosb) = state.beta.sin_cos();
            let u_lo = state.u_lower(basis);
            // solve the 2x2 system for d:
            //   u^mu d_mu = -u^mu R_mu
            //   (1/2) eps^{mu nu} (d_mu u_nu + transport) = -m sin(beta) ...
            // in density variables: (1/2) eps^{mu nu} dU_{mu nu} = -m phi2 sin b
            // with dU = phi2 (d u + u R transport)
            let mut rhs1 = T::zero();
            for mu in 0..2 {
                rhs1 = rhs1 - state.u[mu] * state.r_trace[mu];
            }
            // eps part of the transport term
            let mut transport_curl = T::zero();
            for mu in 0..2 {
                for nu in 0..2 {
                    let e: T = metric.eps_upper(&[mu, nu]);
                    if e != T::zero() {
                        let mut tr = T::zero();
                        for al in 0..2 {
                            tr = tr + state.u[al] * state.r[al][nu][mu];
                        }
                        transport_curl = transport_curl + e * tr;
                    }
                }
            }
            let rhs2 = -lit::<T>(2.0) * state.m * sinb - transport_curl;
            // coefficients: eq1: d . u_up ; eq2: eps^{mu nu} d_mu u_nu(lower)
            // eq2 coefficient of d_mu: w^mu = eps^{mu nu} u_nu(lower)
            let mut w = lorentz::zero_v4();
            for mu in 0..2 {
                for nu in 0..2 {
                    let e: T = metric.eps_upper(&[mu, nu]);
                    if e != T::zero() {
                        w[mu] = w[mu] + e * u_lo[nu];
                    }
                }
            }
            // solve [u^0 u^1; w^0 w^1] d = [rhs1, rhs2]
            let det = state.u[0] * w[1] - state.u[1] * w[0];
            state.dlnphi2[0] = (rhs1 * w[1] - state.u[1] * rhs2) / det;
            state.dlnphi2[1] = (state.u[0] * rhs2 - rhs1 * w[0]) / det;
            // beta gradient free
            // momentum from the guidance equation
            let mut p_up = lorentz::zero_v4();
            for nu in 0..2 {
                let mut eterm = T::zero();
                for mu in 0..2 {
                    let e: T = metric.eps_upper(&[nu, mu]);
                    if e != T::zero() {
                        eterm = eterm + e * state.dbeta[mu];
                    }
                }
                p_up[nu] = state.m * cosb * state.u[nu] - lit::<T>(0.5) * eterm;
            }
            state.p = metric.raise(&p_up);
        }
        _ => unreachable!(),
    }
    derive_du(state, basis);
}

/// Forward equivalence suite: configurations on the Dirac-form surface,
/// Madelung-form residuals reported (for dim 4 also the `q` forms).
pub fn equivalence_forward<T: Real>(
    basis: &CliffordBasis<T>,
    seed: u64,
    n: usize,
    sampler: &Sampler,
) -> Result<ResidualReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ResidualReport::new();
    for _ in 0..n {
        let mut state = sampler.base_state(&mut rng, basis);
        impose_dirac_form(&mut state, basis);
        if sampler.perturbation.is_some() {
            sampler.apply_perturbation(&mut state);
            derive_du(&mut state, basis);
        }
        report.merge(&madelung_residuals(&state, basis)?);
        if state.dim == 4 {
            report.merge(&aux_madelung_residuals(&state, basis)?);
        }
    }
    Ok(report)
}

/// Backward equivalence suite: configurations on the Madelung-form surface,
/// Dirac-form residuals reported.
pub fn equivalence_backward<T: Real>(
    basis: &CliffordBasis<T>,
    seed: u64,
    n: usize,
    sampler: &Sampler,
) -> Result<ResidualReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ResidualReport::new();
    for i in 0..n {
        let mut state = sampler.base_state(&mut rng, basis);
        // dim 2 keeps dbeta free data
        if state.dim == 2 {
            state.dbeta[0] = lit(rng.gen_range(-1.0..1.0));
            state.dbeta[1] = lit(rng.gen_range(-1.0..1.0));
        }
        impose_madelung_form(&mut state, basis, &mut rng);
        if sampler.perturbation.is_some() {
            sampler.apply_perturbation(&mut state);
            derive_du(&mut state, basis);
        }
        report.merge(&dirac_polar_residuals(&state, basis)?);
        if state.dim == 4 {
            report.merge(&aux_dirac_residuals(&state, basis)?);
        }
        let _ = i;
    }
    Ok(report)
}

/// Result of the fixed-frame redundancy analysis.
#[derive(Clone, Debug)]
pub struct FixedFrameReport {
    /// Number of scalar equations duplicated between the `q2` and `q3` blocks.
    pub duplicates: usize,
    /// Independent equation count (11 minus duplicates).
    pub independent: usize,
    /// Worst mismatch inside the duplicated pairs (should be roundoff).
    pub pair_mismatch: f64,
    /// The 11 scalar residuals by label.
    pub equations: ResidualReport,
}

/// Boosts/rotates the state into the frame `u = e0`, `s = e3` and evaluates
/// the 11 scalar equations of the auxiliary Madelung form there, identifying
/// duplicated pairs.
pub fn fixed_frame_check<T: Real>(
    state: &PolarPointState<T>,
    basis: &CliffordBasis<T>,
) -> Result<FixedFrameReport> {
    if state.dim != 4 {
        return Err(PolarError::Config("fixed-frame analysis is a dim-4 construction".into()));
    }
    let metric = basis.metric;
    if state.u[0] <= T::zero() {
        return Err(PolarError::Validation("u not future timelike (cannot boost)".into()));
    }
    let uu = metric.minkowski_dot(&state.u, &state.u);
    if (uu - T::one()).abs() > lit(1e-6) {
        return Err(PolarError::Validation("u not unit timelike (cannot boost)".into()));
    }
    let aux = aux_vectors(state, basis)?;
    let frame = lorentz::canonical_frame(&state.u, Some(&state.s), &metric)?;
    let inv = lorentz::lorentz_inverse(&frame, &metric);
    // transform to the canonical frame: upper vectors with inv, covectors with
    // the covariant action of inv
    let p_up = lorentz::matvec(&inv, &metric.raise(&state.p), 4);
    let e_up = lorentz::matvec(&inv, &metric.raise(&aux.e), 4);
    let f_up = lorentz::matvec(&inv, &metric.raise(&aux.f), 4);

    let two = |x: T| x.to_f64().unwrap_or(f64::NAN).abs();
    let mut eqs = ResidualReport::new();
    // block (1): q1
    eqs.record("q1:F0", two(f_up[0]));
    // block (2): six components of q2 in this frame
    let q2_03 = p_up[0] - e_up[3];
    let q2_13 = p_up[1] - f_up[2];
    let q2_23 = p_up[2] + f_up[1];
    eqs.record("q2:E1", two(e_up[1]));
    eqs.record("q2:E2", two(e_up[2]));
    eqs.record("q2:F3", two(f_up[3]));
    eqs.record("q2:P0-E3", two(q2_03));
    eqs.record("q2:P1-F2", two(q2_13));
    eqs.record("q2:P2+F1", two(q2_23));
    // block (3): four components of q3
    let q3_0 = p_up[0] - e_up[3];
    let q3_1 = p_up[1] - f_up[2];
    let q3_2 = p_up[2] + f_up[1];
    let q3_3 = p_up[3] - e_up[0];
    eqs.record("q3:P0-E3", two(q3_0));
    eqs.record("q3:P1-F2", two(q3_1));
    eqs.record("q3:P2+F1", two(q3_2));
    eqs.record("q3:P3-E0", two(q3_3));

    // the duplicated pairs are identical linear forms; verify numerically
    let pair_mismatch = [
        (q2_03 - q3_0).abs(),
        (q2_13 - q3_1).abs(),
        (q2_23 - q3_2).abs(),
    ]
    .iter()
    .fold(T::zero(), |acc, v| if *v > acc { *v } else { acc })
    .to_f64()
    .unwrap_or(f64::NAN);
    let duplicates = 3;
    Ok(FixedFrameReport { duplicates, independent: 11 - duplicates, pair_mismatch, equations: eqs })
}
