//! Conserved currents, their conservation laws, the Navier-Stokes equation,
//! the second-order Hamilton-Jacobi constraint and the non-relativistic
//! limit.
//!
//! Currents come in two routes that must agree: the spinor bilinear forms
//! and the polar-variable forms built from the extracted connections. All
//! derivative-level residuals on analytic fields use exact derivatives; the
//! polar quantities are differentiated by running the whole extraction
//! pipeline on dual numbers.

use crate::clifford::{build_basis, CliffordBasis, DimensionConfig};
use crate::connections::{bilinear_gradients, decompose_derivative, ConnectionData, FieldSample};
use crate::dual::Dual;
use crate::error::{PolarError, Result};
use crate::fields::AnalyticField;
use crate::lorentz::{self, M4, R3, V4};
use crate::report::ResidualReport;
use crate::scalar::{cre, lit, C, Real};
use crate::spinor::{compute_bilinears, sandwich, Spinor};

/// External electromagnetic background: a constant potential plus the linear
/// part generated by a constant field strength,
/// `A_nu(x) = a_nu + x^mu F_{mu nu} / 2`, so `F = dA` exactly.
#[derive(Clone, Copy, Debug)]
pub struct EMField<T> {
    pub q: T,
    /// Constant part of the potential (lower index).
    pub a: V4<T>,
    /// Constant field strength `F_{mu nu}` (both lower, antisymmetric).
    pub f: M4<T>,
}

impl<T: Real> EMField<T> {
    pub fn free() -> Self {
        EMField { q: T::zero(), a: lorentz::zero_v4(), f: lorentz::zero_m4() }
    }

    pub fn constant_potential(q: T, a: V4<T>) -> Self {
        EMField { q, a, f: lorentz::zero_m4() }
    }

    /// Uniform magnetic field along z: `F_{12} = -b`.
    pub fn magnetic_z(q: T, b: T) -> Self {
        let mut f = lorentz::zero_m4();
        f[1][2] = -b;
        f[2][1] = b;
        EMField { q, a: lorentz::zero_v4(), f }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        for mu in 0..dim {
            for nu in 0..dim {
                if (self.f[mu][nu] + self.f[nu][mu]).abs() > lit(1e-12) {
                    return Err(PolarError::Validation("field strength must be antisymmetric".into()));
                }
            }
        }
        Ok(())
    }

    /// Potential at a point.
    pub fn a_at(&self, x: &V4<T>, dim: usize) -> V4<T> {
        let mut out = lorentz::zero_v4();
        for nu in 0..dim {
            let mut acc = self.a[nu];
            for mu in 0..dim {
                acc = acc + x[mu] * self.f[mu][nu] * lit(0.5);
            }
            out[nu] = acc;
        }
        out
    }

    /// Finite-difference consistency of `F = dA`.
    pub fn curl_consistency(&self, dim: usize) -> T {
        let h: T = lit(1e-5);
        let x0 = lorentz::zero_v4();
        let mut worst = T::zero();
        for mu in 0..dim {
            for nu in 0..dim {
                let mut xp = x0;
                xp[mu] = h;
                let mut xm = x0;
                xm[mu] = -h;
                let danu = (self.a_at(&xp, dim)[nu] - self.a_at(&xm, dim)[nu]) / (h + h);
                let mut yp = x0;
                yp[nu] = h;
                let mut ym = x0;
                ym[nu] = -h;
                let danu2 = (self.a_at(&yp, dim)[mu] - self.a_at(&ym, dim)[mu]) / (h + h);
                let d = (danu - danu2 - self.f[mu][nu]).abs();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }
}

/// Attaches an electromagnetic background to an analytic-field sample:
/// the plain derivatives become gauge-covariant ones.
pub fn sample_in_background<T: Real>(
    field: &AnalyticField<T>,
    x: &V4<T>,
    em: &EMField<T>,
) -> FieldSample<T> {
    let fv = field.eval(x);
    let a = em.a_at(x, field.dim);
    let mut dpsi = fv.dpsi;
    for mu in 0..field.dim {
        // D_mu psi = d_mu psi + i q A_mu psi
        dpsi[mu] = dpsi[mu].add(&fv.psi.scale(C::new(T::zero(), em.q * a[mu])));
    }
    FieldSample { dim: field.dim, psi: fv.psi, dpsi, a, q: em.q, point: *x }
}

/// Electric current, spin density tensor and energy density tensor (all
/// upper indices; `t[rho][sigma]` is not symmetric).
#[derive(Clone, Copy, Debug)]
pub struct ConservedCurrents<T> {
    pub j: V4<T>,
    pub sspin: R3<T>,
    pub t: M4<T>,
}

fn em_stress<T: Real>(em: &EMField<T>, basis: &CliffordBasis<T>) -> M4<T> {
    let dim = basis.dim();
    let metric = basis.metric;
    let mut f2 = T::zero();
    for a in 0..dim {
        for b in 0..dim {
            f2 = f2 + em.f[a][b] * metric.eta::<T>(a) * metric.eta::<T>(b) * em.f[a][b];
        }
    }
    let mut t = lorentz::zero_m4();
    for r in 0..dim {
        for s in 0..dim {
            let g_up = if r == s { metric.eta::<T>(r) } else { T::zero() };
            let mut ff = T::zero();
            for al in 0..dim {
                // F^{r al} F^s_al = eta^{rr} eta^{ss} eta^{al al} F_{r al} F_{s al}
                ff = ff
                    + metric.eta::<T>(r) * metric.eta::<T>(s) * metric.eta::<T>(al)
                        * em.f[r][al]
                        * em.f[s][al];
            }
            t[r][s] = f2 * g_up * lit::<T>(0.25) - ff;
        }
    }
    t
}

/// Spin density tensor from the axial bilinear: `S^{a n s} = (1/4) eps^{a n s m} S_m`.
fn spin_tensor_from_axial<T: Real>(s_axial_up: &V4<T>, basis: &CliffordBasis<T>) -> R3<T> {
    let metric = basis.metric;
    let s_lo = metric.raise(s_axial_up);
    let mut out: R3<T> = [[[T::zero(); 4]; 4]; 4];
    for a in 0..4 {
        for n in 0..4 {
            for sg in 0..4 {
                let mut acc = T::zero();
                for m in 0..4 {
                    let e: T = metric.eps_upper(&[a, n, sg, m]);
                    if e != T::zero() {
                        acc = acc + e * s_lo[m];
                    }
                }
                out[a][n][sg] = acc * lit(0.25);
            }
        }
    }
    out
}

/// Spinor-form currents from a field sample (dim 4).
pub fn compute_currents<T: Real>(
    sample: &FieldSample<T>,
    em: &EMField<T>,
    basis: &CliffordBasis<T>,
) -> Result<ConservedCurrents<T>> {
    if basis.dim() != 4 {
        return Err(PolarError::Config("currents are built in dim 4".into()));
    }
    em.validate(4)?;
    let bl = compute_bilinears(&sample.psi, basis)?;
    let metric = basis.metric;
    // J^mu = q U^mu
    let mut j = lorentz::zero_v4();
    for mu in 0..4 {
        j[mu] = em.q * bl.u[mu];
    }
    // spin tensor via the axial dual (cross-checked against the
    // anticommutator bilinear in the tests)
    let sspin = spin_tensor_from_axial(&bl.s.unwrap_or(lorentz::zero_v4()), basis);
    // T^{rho sigma} = EM + Im(psibar gamma^rho D^sigma psi) with the
    // convention T_matter = (i/2)(psibar g D psi - (D psibar) g psi)
    let mut t = em_stress(em, basis);
    for r in 0..4 {
        for s in 0..4 {
            let dsig = sample.dpsi[s].scale(cre(metric.eta::<T>(s))); // D^s psi
            let z = sandwich(&sample.psi, Some(&basis.gammas[r]), &dsig, basis);
            t[r][s] = t[r][s] - z.im;
        }
    }
    Ok(ConservedCurrents { j, sspin, t })
}

/// Polar-form currents from an extracted connection (dim 4).
pub fn compute_currents_polar<T: Real>(
    conn: &ConnectionData<T>,
    em: &EMField<T>,
    basis: &CliffordBasis<T>,
) -> Result<ConservedCurrents<T>> {
    if conn.dim != 4 {
        return Err(PolarError::Config("currents are built in dim 4".into()));
    }
    let metric = basis.metric;
    let phi2 = conn.polar.phi2;
    let u = conn.polar.u;
    let s = conn.polar.s.unwrap();
    let mut j = lorentz::zero_v4();
    let mut s_up = lorentz::zero_v4();
    for mu in 0..4 {
        j[mu] = em.q * phi2 * u[mu];
        s_up[mu] = phi2 * s[mu];
    }
    let sspin = spin_tensor_from_axial(&s_up, basis);
    // T^{rho sigma} = EM + P^sigma U^rho + (1/2) grad^sigma beta S^rho
    //               - (1/4) R_{alpha nu}^{  sigma} S_kappa eps^{rho alpha nu kappa}
    let p_up = metric.raise(&conn.p);
    let db_up = metric.raise(&conn.dbeta.unwrap());
    let s_lo = metric.raise(&s_up);
    let mut t = em_stress(em, basis);
    for r in 0..4 {
        for sg in 0..4 {
            let mut val = p_up[sg] * phi2 * u[r] + db_up[sg] * s_up[r] * lit(0.5);
            let mut rterm = T::zero();
            for al in 0..4 {
                for nu in 0..4 {
                    // R_{al nu}^{sigma} = eta^{sigma sigma} R_{al nu sigma}
                    let rup = metric.eta::<T>(sg) * conn.r[al][nu][sg];
                    if rup == T::zero() {
                        continue;
                    }
                    for ka in 0..4 {
                        let e: T = metric.eps_upper(&[r, al, nu, ka]);
                        if e != T::zero() {
                            rterm = rterm + rup * s_lo[ka] * e;
                        }
                    }
                }
            }
            val = val - rterm * lit(0.25);
            t[r][sg] = t[r][sg] + val;
        }
    }
    Ok(ConservedCurrents { j, sspin, t })
}

/// Anticommutator form of the spin tensor, `(i/4) psibar {gamma^a, sigma^{ns}} psi`.
pub fn spin_tensor_bilinear<T: Real>(
    psi: &Spinor<T>,
    basis: &CliffordBasis<T>,
) -> Result<R3<T>> {
    let mut out: R3<T> = [[[T::zero(); 4]; 4]; 4];
    let tol = lit::<T>(1e-10) * (psi.norm_sqr() + T::one());
    for a in 0..4 {
        for n in 0..4 {
            for sg in 0..4 {
                let anti = basis.gammas[a].anticommutator(&basis.sigma_upper(n, sg));
                let z = sandwich(psi, Some(&anti), psi, basis) * C::new(T::zero(), lit(0.25));
                if z.im.abs() > tol {
                    return Err(PolarError::Consistency("spin tensor picked up an imaginary part".into()));
                }
                out[a][n][sg] = z.re;
            }
        }
    }
    Ok(out)
}

/// Residuals of the three conservation laws at a point of an analytic free
/// field (`A = 0`; `q` only scales the current):
/// `Jcon: d_rho J^rho`, `Secon: d_rho S^{rho mu nu} + T^{[mu nu]}/2`,
/// `Tcon: d_mu T^{mu nu}`.
pub fn conservation_residuals<T: Real>(
    field: &AnalyticField<T>,
    em: &EMField<T>,
    x: &V4<T>,
    basis: &CliffordBasis<T>,
) -> Result<ResidualReport> {
    if field.dim != 4 {
        return Err(PolarError::Config("conservation laws are evaluated in dim 4".into()));
    }
    let fv = field.eval(x);
    let sample = FieldSample::free(field, x);
    let grads = bilinear_gradients(&sample, basis)?;
    let metric = basis.metric;
    let mut report = ResidualReport::new();

    // charge conservation
    let mut jdiv = T::zero();
    for mu in 0..4 {
        jdiv = jdiv + em.q * grads.du[mu][mu];
    }
    report.record("Jcon", jdiv.abs().to_f64().unwrap_or(f64::NAN));

    // spin conservation: d_rho S^{rho mu nu} = (1/4) eps^{rho mu nu m} d_rho S_m
    let ds = grads.ds.unwrap();
    let t = compute_currents(&sample, em, basis)?.t;
    let mut worst = T::zero();
    for mu in 0..4 {
        for nu in 0..4 {
            let mut div = T::zero();
            for rho in 0..4 {
                for m in 0..4 {
                    let e: T = metric.eps_upper(&[rho, mu, nu, m]);
                    if e != T::zero() {
                        // dS_m lower = eta_mm dS^m
                        div = div + e * metric.eta::<T>(m) * ds[rho][m] * lit(0.25);
                    }
                }
            }
            let res = div + (t[mu][nu] - t[nu][mu]) * lit(0.5);
            if res.abs() > worst {
                worst = res.abs();
            }
        }
    }
    report.record("Secon", worst.to_f64().unwrap_or(f64::NAN));

    // energy-momentum conservation with exact second derivatives:
    // d_rho T^{rho sigma} = -Im[ (d_rho psibar) g^rho d^sigma psi
    //                            + psibar g^rho d_rho d^sigma psi ]
    let mut worst_t = T::zero();
    for sg in 0..4 {
        let mut acc = T::zero();
        for rho in 0..4 {
            let dsig = metric.eta::<T>(sg);
            let z1 = sandwich(&fv.dpsi[rho], Some(&basis.gammas[rho]), &fv.dpsi[sg], basis);
            let z2 = sandwich(&fv.psi, Some(&basis.gammas[rho]), &fv.ddpsi[rho][sg], basis);
            acc = acc - (z1.im + z2.im) * dsig;
        }
        if acc.abs() > worst_t {
            worst_t = acc.abs();
        }
    }
    report.record("Tcon", worst_t.to_f64().unwrap_or(f64::NAN));
    Ok(report)
}

/// Conservation residuals with all current derivatives taken by central
/// finite differences of spacing `h` (order 2); used for the grid
/// convergence check.
pub fn conservation_residuals_fd(
    field: &AnalyticField<f64>,
    em: &EMField<f64>,
    x: &V4<f64>,
    h: f64,
    basis: &CliffordBasis<f64>,
) -> Result<ResidualReport> {
    let metric = basis.metric;
    let currents_at = |x: &V4<f64>| -> Result<ConservedCurrents<f64>> {
        let sample = FieldSample::free(field, x);
        compute_currents(&sample, em, basis)
    };
    let c0 = currents_at(x)?;
    let mut dj = 0.0;
    let mut dsp: R3<f64> = [[[0.0; 4]; 4]; 4];
    let mut dt: V4<f64> = lorentz::zero_v4();
    for mu in 0..4 {
        let mut xp = *x;
        xp[mu] += h;
        let mut xm = *x;
        xm[mu] -= h;
        let cp = currents_at(&xp)?;
        let cm = currents_at(&xm)?;
        dj += (cp.j[mu] - cm.j[mu]) / (2.0 * h);
        for a in 0..4 {
            for b in 0..4 {
                dsp[mu][a][b] = (cp.sspin[mu][a][b] - cm.sspin[mu][a][b]) / (2.0 * h);
            }
        }
        for sg in 0..4 {
            dt[sg] += (cp.t[mu][sg] - cm.t[mu][sg]) / (2.0 * h);
        }
    }
    let _ = metric;
    let mut report = ResidualReport::new();
    report.record("Jcon", dj.abs());
    let mut worst = 0.0f64;
    for mu in 0..4 {
        for nu in 0..4 {
            let mut div = 0.0;
            for rho in 0..4 {
                div += dsp[rho][mu][nu];
            }
            let res = div + 0.5 * (c0.t[mu][nu] - c0.t[nu][mu]);
            worst = worst.max(res.abs());
        }
    }
    report.record("Secon", worst);
    let mut worst_t = 0.0f64;
    for sg in 0..4 {
        worst_t = worst_t.max(dt[sg].abs());
    }
    report.record("Tcon", worst_t);
    Ok(report)
}

/// Connection data together with its four coordinate derivatives, obtained
/// by running the extraction on dual numbers.
pub struct ConnectionJet {
    pub value: ConnectionData<f64>,
    /// One dual-valued extraction per coordinate direction.
    pub directional: Vec<ConnectionData<Dual<f64>>>,
}

/// Evaluates the connection pipeline and its exact derivatives at `x`.
pub fn connection_jet(
    field: &AnalyticField<f64>,
    x: &V4<f64>,
    basis: &CliffordBasis<f64>,
) -> Result<ConnectionJet> {
    let sample = FieldSample::free(field, x);
    let value = decompose_derivative(&sample, basis)?;
    let dim = field.dim;
    let lifted = field.lift::<Dual<f64>>();
    let basis_d = build_basis::<Dual<f64>>(&DimensionConfig::new(dim)?)?;
    let mut directional = Vec::with_capacity(dim);
    for dir in 0..dim {
        let mut xd: V4<Dual<f64>> = [Dual::constant(0.0); 4];
        for a in 0..4 {
            xd[a] = if a == dir { Dual::variable(x[a]) } else { Dual::constant(x[a]) };
        }
        let sample_d = FieldSample::free(&lifted, &xd);
        directional.push(decompose_derivative(&sample_d, &basis_d)?);
    }
    Ok(ConnectionJet { value, directional })
}

/// Second-order potentials `M_alpha = B_alpha - 2 P^nu u_[nu s_alpha]` and
/// `Sigma_alpha = R_alpha - 2 P^rho u^nu s^sigma eps_{alpha rho nu sigma}`.
#[derive(Clone, Copy, Debug)]
pub struct SecondOrderPotentials<T> {
    pub mvec: V4<T>,
    pub sigvec: V4<T>,
}

pub fn second_order_potentials<T: Real>(
    conn: &ConnectionData<T>,
    basis: &CliffordBasis<T>,
) -> Result<SecondOrderPotentials<T>> {
    if conn.dim != 4 {
        return Err(PolarError::Config("second-order potentials are a dim-4 construction".into()));
    }
    let metric = basis.metric;
    let p_up = metric.raise(&conn.p);
    let u = conn.polar.u;
    let s = conn.polar.s.unwrap();
    let u_lo = metric.raise(&u);
    let s_lo = metric.raise(&s);
    let b_tr = conn.b_trace.unwrap();
    let mut mvec = lorentz::zero_v4();
    let mut sigvec = lorentz::zero_v4();
    for al in 0..4 {
        let mut pterm = T::zero();
        for nu in 0..4 {
            pterm = pterm + p_up[nu] * (u_lo[nu] * s_lo[al] - u_lo[al] * s_lo[nu]);
        }
        mvec[al] = b_tr[al] - lit::<T>(2.0) * pterm;
        let mut eterm = T::zero();
        for rho in 0..4 {
            for nu in 0..4 {
                for sg in 0..4 {
                    let e: T = metric.eps_lower(&[al, rho, nu, sg]);
                    if e != T::zero() {
                        eterm = eterm + p_up[rho] * u[nu] * s[sg] * e;
                    }
                }
            }
        }
        sigvec[al] = conn.r_trace[al] - lit::<T>(2.0) * eterm;
    }
    Ok(SecondOrderPotentials { mvec, sigvec })
}

/// Residual of the second-order Hamilton-Jacobi constraint
/// `(1/4) grad beta . grad beta - m^2 - lap(phi)/phi
///  + (1/2)(-div Sigma + Sigma.Sigma/2 - M.M/2) = 0`.
pub fn second_order_residual(
    field: &AnalyticField<f64>,
    x: &V4<f64>,
    basis: &CliffordBasis<f64>,
) -> Result<f64> {
    let jet = connection_jet(field, x, basis)?;
    let conn = &jet.value;
    let metric = basis.metric;
    let m = field.mass;
    let db = conn.dbeta.unwrap();
    let mut bb = 0.0;
    for mu in 0..4 {
        bb += metric.eta::<f64>(mu) * db[mu] * db[mu];
    }
    // lap(phi)/phi = sum eta^aa [ (d_a ln phi2)^2 / 4 + d_a(d_a ln phi2)/2 ]
    let mut lap = 0.0;
    for a in 0..4 {
        let da = conn.dlnphi2[a];
        let dda = jet.directional[a].dlnphi2[a].dot;
        lap += metric.eta::<f64>(a) * (0.25 * da * da + 0.5 * dda);
    }
    // div Sigma = eta^{aa} d_a Sigma_a via the dual pipeline
    let basis_d = build_basis::<Dual<f64>>(&DimensionConfig::new(4)?)?;
    let mut div_sig = 0.0;
    for a in 0..4 {
        let pot_d = second_order_potentials(&jet.directional[a], &basis_d)?;
        div_sig += metric.eta::<f64>(a) * pot_d.sigvec[a].dot;
    }
    let pots = second_order_potentials(conn, basis)?;
    let mut ss = 0.0;
    let mut mm = 0.0;
    for a in 0..4 {
        ss += metric.eta::<f64>(a) * pots.sigvec[a] * pots.sigvec[a];
        mm += metric.eta::<f64>(a) * pots.mvec[a] * pots.mvec[a];
    }
    Ok(0.25 * bb - m * m - lap + 0.5 * (-div_sig + 0.5 * ss - 0.5 * mm))
}

/// Residual of the hydrodynamic force balance
/// `U^rho d_rho P^sigma - q F^{sigma alpha} U_alpha
///  + (1/2) d_rho ( grad^sigma beta S^rho
///                 - (1/2) R_{alpha nu}^{ sigma} S_kappa eps^{rho alpha nu kappa} )`.
pub fn navier_stokes_residual(
    field: &AnalyticField<f64>,
    em: &EMField<f64>,
    x: &V4<f64>,
    basis: &CliffordBasis<f64>,
) -> Result<ResidualReport> {
    if em.q != 0.0 && (em.f.iter().flatten().any(|v| *v != 0.0)) {
        return Err(PolarError::Config(
            "analytic fields are free solutions; force-balance checks run with F = 0".into(),
        ));
    }
    let jet = connection_jet(field, x, basis)?;
    let conn = &jet.value;
    let metric = basis.metric;
    let phi2 = conn.polar.phi2;
    let u = conn.polar.u;
    let basis_d = build_basis::<Dual<f64>>(&DimensionConfig::new(4)?)?;

    // spin-stress flux as a dual-valued field of the direction rho
    let flux = |rho: usize, sg: usize| -> f64 {
        // grad^sigma beta S^rho - (1/2) R_{al nu}^{sigma} S_k eps^{rho al nu k}
        let c = &jet.directional[rho];
        let db_up = basis_d.metric.raise(&c.dbeta.unwrap());
        let s = c.polar.s.unwrap();
        let p2 = c.polar.phi2;
        let mut v = db_up[sg] * p2 * s[rho];
        let mut rterm = Dual::constant(0.0);
        for al in 0..4 {
            for nu in 0..4 {
                let rup = basis_d.metric.eta::<Dual<f64>>(sg) * c.r[al][nu][sg];
                for k in 0..4 {
                    let e: Dual<f64> = basis_d.metric.eps_upper(&[rho, al, nu, k]);
                    if e.val != 0.0 {
                        let s_lo = basis_d.metric.eta::<Dual<f64>>(k) * p2 * s[k];
                        rterm = rterm + rup * s_lo * e;
                    }
                }
            }
        }
        v = v - rterm * Dual::constant(0.5);
        v.dot
    };

    let p_up_grad = |rho: usize, sg: usize| -> f64 {
        // d_rho P^sigma
        metric.eta::<f64>(sg) * jet.directional[rho].p[sg].dot
    };

    let mut report = ResidualReport::new();
    let mut worst = 0.0f64;
    for sg in 0..4 {
        let mut conv = 0.0;
        for rho in 0..4 {
            conv += phi2 * u[rho] * p_up_grad(rho, sg);
        }
        // Lorentz term (F = 0 on the analytic corpus, kept for the record)
        let mut lorentz_term = 0.0;
        for al in 0..4 {
            let f_up = metric.eta::<f64>(sg) * metric.eta::<f64>(al) * em.f[sg][al];
            lorentz_term += em.q * f_up * metric.eta::<f64>(al) * phi2 * u[al];
        }
        let mut div_flux = 0.0;
        for rho in 0..4 {
            div_flux += flux(rho, sg);
        }
        let res = conv - lorentz_term + 0.5 * div_flux;
        worst = worst.max(res.abs());
    }
    report.record("NS", worst);
    Ok(report)
}

/// Classical reduced force law integrated in proper time:
/// `dx/dtau = u`, `du/dtau = (q/m) F^sigma_alpha u^alpha` (4th-order
/// Runge-Kutta). Returns the trajectory of `(x, u)` samples.
pub fn lorentz_force_trajectory(
    em: &EMField<f64>,
    mass: f64,
    x0: V4<f64>,
    u0: V4<f64>,
    dtau: f64,
    steps: usize,
) -> Vec<(V4<f64>, V4<f64>)> {
    let metric = crate::clifford::Metric::new(&DimensionConfig::new(4).unwrap());
    let acc = |u: &V4<f64>| -> V4<f64> {
        let mut a = lorentz::zero_v4();
        for sg in 0..4 {
            let mut f = 0.0;
            for al in 0..4 {
                // F^{sigma}_{ alpha} u^alpha = eta^{ss} F_{s al} u^al
                f += metric.eta::<f64>(sg) * em.f[sg][al] * u[al];
            }
            a[sg] = em.q / mass * f;
        }
        a
    };
    let mut out = Vec::with_capacity(steps + 1);
    let mut x = x0;
    let mut u = u0;
    out.push((x, u));
    for _ in 0..steps {
        let k1x = u;
        let k1u = acc(&u);
        let add = |a: &V4<f64>, b: &V4<f64>, f: f64| {
            let mut o = lorentz::zero_v4();
            for i in 0..4 {
                o[i] = a[i] + f * b[i];
            }
            o
        };
        let k2x = add(&u, &k1u, dtau / 2.0);
        let k2u = acc(&add(&u, &k1u, dtau / 2.0));
        let k3x = add(&u, &k2u, dtau / 2.0);
        let k3u = acc(&add(&u, &k2u, dtau / 2.0));
        let k4x = add(&u, &k3u, dtau);
        let k4u = acc(&add(&u, &k3u, dtau));
        for i in 0..4 {
            x[i] += dtau / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
            u[i] += dtau / 6.0 * (k1u[i] + 2.0 * k2u[i] + 2.0 * k3u[i] + k4u[i]);
        }
        out.push((x, u));
    }
    out
}

/// Pointwise non-relativistic comparison: the relativistic energy above rest
/// mass against the Schrodinger-Madelung form `P^2/(2m) + V + Q`.
#[derive(Clone, Copy, Debug)]
pub struct NonRelComparison {
    pub h_rel: f64,
    pub h_schrodinger: f64,
    /// magnetic coupling term `-q F^{a r} u^n s^s eps_{a r n s} / (4 m)`.
    pub v_magnetic: f64,
    /// regime indicators
    pub beta_abs: f64,
    pub r_norm: f64,
}

/// Evaluates both sides of the non-relativistic energy identification at a
/// point. Regime flags (`beta_abs`, `r_norm`) report how far the sample is
/// from the `beta = 0`, `R = 0` regime the expansion assumes.
pub fn nonrel_limit_energy(
    field: &AnalyticField<f64>,
    em: &EMField<f64>,
    x: &V4<f64>,
    basis: &CliffordBasis<f64>,
) -> Result<NonRelComparison> {
    let jet = connection_jet(field, x, basis)?;
    let conn = &jet.value;
    let m = field.mass;
    let h_rel = conn.p[0] - m;
    let mut psq = 0.0;
    for k in 1..4 {
        psq += conn.p[k] * conn.p[k];
    }
    // Q = -(spatial laplacian of phi) / (2 m phi):
    // d_k d_k phi / phi = (d_k ln phi2)^2/4 + d_k(d_k ln phi2)/2 per direction
    let mut lap = 0.0;
    for k in 1..4 {
        let dk = conn.dlnphi2[k];
        let ddk = jet.directional[k].dlnphi2[k].dot;
        lap += 0.25 * dk * dk + 0.5 * ddk;
    }
    let q_pot = -lap / (2.0 * m);
    // external magnetic coupling (vanishes for F = 0)
    let mut v_mag = 0.0;
    let metric = basis.metric;
    let u = conn.polar.u;
    let s = conn.polar.s.unwrap();
    for al in 0..4 {
        for rh in 0..4 {
            let f_up = metric.eta::<f64>(al) * metric.eta::<f64>(rh) * em.f[al][rh];
            if f_up == 0.0 {
                continue;
            }
            for nu in 0..4 {
                for sg in 0..4 {
                    let e: f64 = metric.eps_lower(&[al, rh, nu, sg]);
                    if e != 0.0 {
                        v_mag -= em.q * f_up * u[nu] * s[sg] * e / (4.0 * m);
                    }
                }
            }
        }
    }
    let mut r_norm = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            for mu in 0..4 {
                r_norm = r_norm.max(conn.r[i][j][mu].abs());
            }
        }
    }
    Ok(NonRelComparison {
        h_rel,
        h_schrodinger: psq / (2.0 * m) + v_mag + q_pot,
        v_magnetic: v_mag,
        beta_abs: conn.dbeta.map(|_| conn.polar.beta.unwrap_or(0.0).abs()).unwrap_or(0.0),
        r_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{plane_wave, superpose, Branch, PlaneWaveSpec};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn basis4() -> CliffordBasis<f64> {
        build_basis(&DimensionConfig::new(4).unwrap()).unwrap()
    }

    fn two_wave(b: &CliffordBasis<f64>) -> AnalyticField<f64> {
        superpose(&[
            plane_wave(
                &PlaneWaveSpec::from_spatial(&[0.15, -0.1, 0.3], 1.0, C::new(1.0, 0.0), Branch::Particle),
                b,
            )
            .unwrap(),
            plane_wave(
                &PlaneWaveSpec::from_spatial(&[-0.2, 0.12, 0.05], 1.0, C::new(0.5, 0.4), Branch::Particle)
                    .with_spin([0.4, 0.8, 0.45]),
                b,
            )
            .unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn rest_wave_currents() {
        let b = basis4();
        let f = plane_wave(
            &PlaneWaveSpec::from_spatial(&[0.0, 0.0, 0.0], 1.4, C::new(1.0, 0.0), Branch::Particle),
            &b,
        )
        .unwrap();
        let em = EMField { q: 0.5, ..EMField::free() };
        let sample = FieldSample::free(&f, &[0.2, 0.0, 0.0, 0.0]);
        let c = compute_currents(&sample, &em, &b).unwrap();
        assert!((c.j[0] - 0.5 * 2.0).abs() < 1e-13);
        assert!((c.t[0][0] - 2.0 * 1.4).abs() < 1e-12, "T00 = {}", c.t[0][0]);
        // spin tensor is the dual of S = (0,0,0,2)
        let m = b.metric;
        for a in 0..4 {
            for n in 0..4 {
                for s in 0..4 {
                    let want = 0.25 * m.eps_upper::<f64>(&[a, n, s, 3]) * m.eta::<f64>(3) * 2.0;
                    assert!((c.sspin[a][n][s] - want).abs() < 1e-13);
                }
            }
        }
        // q = 0 kills the current
        let c0 = compute_currents(&sample, &EMField::free(), &b).unwrap();
        assert_eq!(c0.j[0], 0.0);
    }

    #[test]
    fn spin_tensor_dual_matches_anticommutator_bilinear() {
        let b = basis4();
        let f = two_wave(&b);
        let sample = FieldSample::free(&f, &[0.3, -0.2, 0.4, 0.1]);
        let c = compute_currents(&sample, &EMField::free(), &b).unwrap();
        let direct = spin_tensor_bilinear(&sample.psi, &b).unwrap();
        for a in 0..4 {
            for n in 0..4 {
                for s in 0..4 {
                    assert!(
                        (c.sspin[a][n][s] - direct[a][n][s]).abs() < 1e-12,
                        "S[{a}{n}{s}]: dual {} vs bilinear {}",
                        c.sspin[a][n][s],
                        direct[a][n][s]
                    );
                }
            }
        }
    }

    #[test]
    fn pure_em_stress_only() {
        let b = basis4();
        let em = EMField::magnetic_z(1.0, 0.7);
        assert!(em.curl_consistency(4) < 1e-9);
        let f = plane_wave(
            &PlaneWaveSpec::from_spatial(&[0.0, 0.0, 0.0], 1.0, C::new(0.0, 0.0), Branch::Particle),
            &b,
        );
        // zero amplitude field -> zero spinor sector
        let f = f.unwrap();
        let sample = FieldSample::free(&f, &[0.0; 4]);
        let c = compute_currents(&sample, &em, &b).unwrap();
        for mu in 0..4 {
            assert_eq!(c.j[mu], 0.0);
        }
        // T = (1/4) F^2 g - F.F: for pure B_z, F^2 = 2 b^2
        let bb = 0.7 * 0.7;
        assert!((c.t[0][0] - 0.5 * bb).abs() < 1e-13, "T00 {}", c.t[0][0]);
        assert!((c.t[3][3] - -0.5 * bb).abs() < 1e-13, "T33 {}", c.t[3][3]);
    }

    #[test]
    fn polar_and_spinor_currents_agree() {
        let b = basis4();
        let f = two_wave(&b);
        let em = EMField { q: 0.8, ..EMField::free() };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut tested = 0;
        while tested < 30 {
            let x = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let sample = FieldSample::free(&f, &x);
            let conn = match decompose_derivative(&sample, &b) {
                Ok(c) => c,
                Err(_) => continue,
            };
            tested += 1;
            let cs = compute_currents(&sample, &em, &b).unwrap();
            let cp = compute_currents_polar(&conn, &em, &b).unwrap();
            for mu in 0..4 {
                assert!((cs.j[mu] - cp.j[mu]).abs() < 1e-10);
                for nu in 0..4 {
                    assert!(
                        (cs.t[mu][nu] - cp.t[mu][nu]).abs() < 1e-10,
                        "T[{mu}][{nu}]: spinor {} vs polar {}",
                        cs.t[mu][nu],
                        cp.t[mu][nu]
                    );
                }
            }
        }
    }

    #[test]
    fn conservation_laws_on_plane_wave_and_superposition() {
        let b = basis4();
        let em = EMField { q: 1.0, ..EMField::free() };
        let single = plane_wave(
            &PlaneWaveSpec::from_spatial(&[0.3, 0.0, -0.2], 1.0, C::new(1.0, 0.0), Branch::Particle),
            &b,
        )
        .unwrap();
        let rep = conservation_residuals(&single, &em, &[0.4, 0.2, 0.1, -0.3], &b).unwrap();
        assert!(rep.max() < 1e-12, "{rep}");
        let f = two_wave(&b);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let x = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let rep = conservation_residuals(&f, &em, &x, &b).unwrap();
            assert!(rep.max() < 1e-8, "{rep} at {x:?}");
        }
    }

    #[test]
    fn wrong_mass_mode_breaks_tcon() {
        let b = basis4();
        let em = EMField { q: 1.0, ..EMField::free() };
        let f = superpose(&[
            plane_wave(
                &PlaneWaveSpec::from_spatial(&[0.2, 0.0, 0.0], 1.0, C::new(1.0, 0.0), Branch::Particle),
                &b,
            )
            .unwrap(),
            plane_wave(
                &PlaneWaveSpec::from_spatial(&[-0.1, 0.2, 0.0], 1.35, C::new(0.8, 0.0), Branch::Particle),
                &b,
            )
            .unwrap(),
        ])
        .unwrap();
        let rep = conservation_residuals(&f, &em, &[0.3, 0.2, -0.4, 0.6], &b).unwrap();
        assert!(rep.get("Tcon").unwrap() > 1e-3, "{rep}");
    }

    #[test]
    fn fd_conservation_converges_at_order_two() {
        let b = basis4();
        let em = EMField { q: 1.0, ..EMField::free() };
        let f = two_wave(&b);
        let x = [0.25, -0.3, 0.2, 0.45];
        let mut errs = Vec::new();
        for lvl in 0..3 {
            let h = 0.08 / f64::powi(2.0, lvl);
            let rep = conservation_residuals_fd(&f, &em, &x, h, &b).unwrap();
            errs.push(rep.max());
        }
        let o1 = (errs[0] / errs[1]).log2();
        let o2 = (errs[1] / errs[2]).log2();
        assert!((o1 - 2.0).abs() < 0.2, "orders {o1} {o2} from {errs:?}");
        assert!((o2 - 2.0).abs() < 0.2, "orders {o1} {o2} from {errs:?}");
    }

    #[test]
    fn ns_residual_small_on_solutions() {
        let b = basis4();
        let em = EMField::free();
        let single = plane_wave(
            &PlaneWaveSpec::from_spatial(&[0.0, 0.0, 0.4], 1.0, C::new(1.0, 0.0), Branch::Particle),
            &b,
        )
        .unwrap();
        let rep = navier_stokes_residual(&single, &em, &[0.1, 0.0, 0.2, 0.3], &b).unwrap();
        assert!(rep.max() < 1e-12, "{rep}");
        let f = two_wave(&b);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..15 {
            let x = [
                rng.gen_range(-0.8..0.8),
                rng.gen_range(-0.8..0.8),
                rng.gen_range(-0.8..0.8),
                rng.gen_range(-0.8..0.8),
            ];
            let rep = navier_stokes_residual(&f, &em, &x, &b).unwrap();
            assert!(rep.max() < 1e-7, "{rep} at {x:?}");
        }
    }

    #[test]
    fn cyclotron_radius_matches_classical_oracle() {
        let em = EMField::magnetic_z(1.0, 0.5);
        let m = 1.0;
        // transverse velocity in the x-y plane
        let v = 0.6;
        let gamma = 1.0 / (1.0f64 - v * v).sqrt();
        let u0 = [gamma, gamma * v, 0.0, 0.0];
        let traj = lorentz_force_trajectory(&em, m, [0.0; 4], u0, 0.01, 4000);
        // expected radius: p_perp / (q B)
        let r_expect = gamma * m * v / (1.0 * 0.5);
        let mut xmin = f64::INFINITY;
        let mut xmax = f64::NEG_INFINITY;
        let mut ymin = f64::INFINITY;
        let mut ymax = f64::NEG_INFINITY;
        for (x, _) in &traj {
            xmin = xmin.min(x[1]);
            xmax = xmax.max(x[1]);
            ymin = ymin.min(x[2]);
            ymax = ymax.max(x[2]);
        }
        let r_measured = 0.25 * ((xmax - xmin) + (ymax - ymin));
        assert!(
            (r_measured - r_expect).abs() / r_expect < 0.01,
            "radius {r_measured} vs {r_expect}"
        );
        // proper-time normalization is preserved by the force law
        let metric = crate::clifford::Metric::new(&DimensionConfig::new(4).unwrap());
        for (_, u) in traj.iter().step_by(500) {
            assert!((metric.minkowski_dot(u, u) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn second_order_residual_on_solutions() {
        let b = basis4();
        let single = plane_wave(
            &PlaneWaveSpec::from_spatial(&[0.0, 0.0, 0.0], 1.2, C::new(1.0, 0.0), Branch::Particle),
            &b,
        )
        .unwrap();
        let r = second_order_residual(&single, &[0.1, 0.2, 0.3, 0.4], &b).unwrap();
        assert!(r.abs() < 1e-12, "rest wave second-order residual {r}");
        let f = two_wave(&b);
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..15 {
            let x = [
                rng.gen_range(-0.8..0.8),
                rng.gen_range(-0.8..0.8),
                rng.gen_range(-0.8..0.8),
                rng.gen_range(-0.8..0.8),
            ];
            let r = second_order_residual(&f, &x, &b).unwrap();
            assert!(r.abs() < 1e-7, "second-order residual {r} at {x:?}");
        }
    }

    #[test]
    fn second_order_potentials_identity() {
        // M_alpha = B_alpha - 2 P^nu u_[nu s_alpha] holds by definition
        let b = basis4();
        let f = two_wave(&b);
        let sample = FieldSample::free(&f, &[0.3, 0.1, -0.2, 0.5]);
        let conn = decompose_derivative(&sample, &b).unwrap();
        let pots = second_order_potentials(&conn, &b).unwrap();
        let metric = b.metric;
        let p_up = metric.raise(&conn.p);
        let u_lo = metric.raise(&conn.polar.u);
        let s_lo = metric.raise(&conn.polar.s.unwrap());
        for al in 0..4 {
            let mut pterm = 0.0;
            for nu in 0..4 {
                pterm += p_up[nu] * (u_lo[nu] * s_lo[al] - u_lo[al] * s_lo[nu]);
            }
            assert_eq!(pots.mvec[al], conn.b_trace.unwrap()[al] - 2.0 * pterm);
        }
    }

    #[test]
    fn dualized_spin_conservation_traces_to_continuity() {
        // [F^[a s^n] + eps E s + eps P u] traced with u_a s_n equals -u.F(aux)
        let b = basis4();
        let f = two_wave(&b);
        let sample = FieldSample::free(&f, &[0.2, -0.4, 0.3, 0.6]);
        let conn = decompose_derivative(&sample, &b).unwrap();
        let grads = bilinear_gradients(&sample, &b).unwrap();
        let st = crate::madelung::PolarPointState::from_connection(&conn, &grads, &b, f.mass);
        let aux = crate::madelung::aux_vectors(&st, &b).unwrap();
        let metric = b.metric;
        let f_up = metric.raise(&aux.f);
        let u_lo = metric.raise(&st.u);
        let s_lo = metric.raise(&st.s);
        let mut traced = 0.0;
        for a in 0..4 {
            for n in 0..4 {
                // G^{an} = F^[a s^n] + eps^{anmr} E_m s_r + eps^{anmr} P_m u_r
                let mut g = f_up[a] * st.s[n] - f_up[n] * st.s[a];
                for mm in 0..4 {
                    for rr in 0..4 {
                        let e: f64 = metric.eps_upper(&[a, n, mm, rr]);
                        if e != 0.0 {
                            g += e * (aux.e[mm] * s_lo[rr] + st.p[mm] * u_lo[rr]);
                        }
                    }
                }
                traced += u_lo[a] * s_lo[n] * g;
            }
        }
        let mut q1 = 0.0;
        for mu in 0..4 {
            q1 += st.u[mu] * aux.f[mu];
        }
        assert!((traced.abs() - q1.abs()).abs() < 1e-10, "traced {traced} vs q1 {q1}");
    }

    #[test]
    fn nonrel_rest_wave_is_trivial() {
        let b = basis4();
        let f = plane_wave(
            &PlaneWaveSpec::from_spatial(&[0.0, 0.0, 0.0], 1.0, C::new(1.0, 0.0), Branch::Particle),
            &b,
        )
        .unwrap();
        let cmp = nonrel_limit_energy(&f, &EMField::free(), &[0.0; 4], &b).unwrap();
        assert!(cmp.h_rel.abs() < 1e-12);
        assert!(cmp.h_schrodinger.abs() < 1e-12);
        assert_eq!(cmp.v_magnetic, 0.0);
    }

    #[test]
    fn nonrel_magnetic_term_substitution() {
        // rest configuration with s along z in a uniform B_z:
        // V = -q F^{ar} u^n s^s eps_{arns} / (4m) = q B s_z / (2m)
        let b = basis4();
        let f = plane_wave(
            &PlaneWaveSpec::from_spatial(&[0.0, 0.0, 0.0], 1.0, C::new(1.0, 0.0), Branch::Particle),
            &b,
        )
        .unwrap();
        let bz = 0.4;
        let em = EMField::magnetic_z(0.9, bz);
        let cmp = nonrel_limit_energy(&f, &em, &[0.0; 4], &b).unwrap();
        let expect = 0.9 * bz / (2.0 * 1.0);
        assert!(
            (cmp.v_magnetic.abs() - expect.abs()).abs() < 1e-12,
            "V = {} vs {expect}",
            cmp.v_magnetic
        );
    }
}
