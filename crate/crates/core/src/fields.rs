//! Spinor fields with trustworthy derivatives.
//!
//! Analytic plane waves and their superpositions return exact values and
//! first/second derivatives at any point (including dual-number points, which
//! is how downstream code differentiates derived quantities). Grid fields
//! carry finite-difference stencils of order 2 or 4, and the 1+1 Dirac
//! stepper advances a lattice state with the unitary implicit midpoint
//! (Cayley) scheme.

use num_traits::Zero;

use crate::clifford::CliffordBasis;
use crate::error::{PolarError, Result};
use crate::linalg::{solve_cyclic_block_tridiag, Block, CMat};
use crate::lorentz::{self, V4};
use crate::scalar::{cre, czero, lit, C, Real};
use crate::spinor::{rest_spinor, Spinor};

/// Particle or antiparticle frequency branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// `psi ~ exp(-i p.x) w`, positive frequency.
    Particle,
    /// `psi ~ exp(+i p.x) v`, negative frequency.
    Antiparticle,
}

/// One free plane-wave mode.
#[derive(Clone, Debug)]
pub struct PlaneWaveSpec<T> {
    /// Upper-index momentum `p^a` with `p.p = m^2` and `p^0 > 0`.
    pub momentum: V4<T>,
    pub mass: T,
    pub amplitude: C<T>,
    /// Rest-frame spin direction (dim 4); defaults to +z.
    pub spin: Option<[T; 3]>,
    pub branch: Branch,
}

impl<T: Real> PlaneWaveSpec<T> {
    /// Builds an on-shell spec from the spatial momentum.
    pub fn from_spatial(spatial: &[T], mass: T, amplitude: C<T>, branch: Branch) -> Self {
        let mut p = lorentz::zero_v4();
        let mut sq = mass * mass;
        for (k, &v) in spatial.iter().enumerate() {
            p[k + 1] = v;
            sq = sq + v * v;
        }
        p[0] = sq.sqrt();
        PlaneWaveSpec { momentum: p, mass, amplitude, spin: None, branch }
    }

    pub fn with_spin(mut self, spin: [T; 3]) -> Self {
        self.spin = Some(spin);
        self
    }
}

#[derive(Clone, Debug)]
struct Mode<T> {
    w: Spinor<T>,
    /// Lower-index momentum.
    p_lo: V4<T>,
    /// +1 for `exp(-i p.x)`, -1 for `exp(+i p.x)`.
    freq_sign: T,
}

/// Superposition of free plane waves with exact derivatives everywhere.
#[derive(Clone, Debug)]
pub struct AnalyticField<T> {
    pub dim: usize,
    /// Mass of the Dirac operator this field is diagnosed against.
    pub mass: T,
    modes: Vec<Mode<T>>,
}

/// Pointwise field data: value and the first two derivative levels.
#[derive(Clone, Copy, Debug)]
pub struct FieldValue<T> {
    pub psi: Spinor<T>,
    /// `d_mu psi` (lower derivative index).
    pub dpsi: [Spinor<T>; 4],
    /// `d_mu d_nu psi`.
    pub ddpsi: [[Spinor<T>; 4]; 4],
}

/// Builds the mode spinor: boost of the rest spinor, spin-oriented in dim 4.
fn mode_spinor<T: Real>(spec: &PlaneWaveSpec<T>, basis: &CliffordBasis<T>) -> Result<Spinor<T>> {
    let dim = basis.dim();
    let m = spec.mass;
    if m <= T::zero() {
        return Err(PolarError::Validation("plane waves need m > 0".into()));
    }
    let metric = basis.metric;
    let onshell = metric.minkowski_dot(&spec.momentum, &spec.momentum) - m * m;
    if onshell.abs() > lit::<T>(1e-10) * (m * m + T::one()) {
        return Err(PolarError::Validation(format!(
            "momentum is off shell: p.p - m^2 = {onshell:?}"
        )));
    }
    let mut u = lorentz::zero_v4();
    for a in 0..dim {
        u[a] = spec.momentum[a] / m;
    }

    let w_rest: Spinor<T> = if dim == 4 {
        let n = spec.spin.unwrap_or([T::zero(), T::zero(), T::one()]);
        let nn = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if nn <= T::zero() {
            return Err(PolarError::Validation("spin direction must be nonzero".into()));
        }
        let (nx, ny, nz) = (n[0] / nn, n[1] / nn, n[2] / nn);
        // chi with sigma.n chi = +chi
        let theta = (nx * nx + ny * ny).sqrt().atan2(nz);
        let phi_az = ny.atan2(nx);
        let (st, ct) = (theta * lit::<T>(0.5)).sin_cos();
        let chi0 = cre(ct);
        let chi1 = C::new(st * phi_az.cos(), st * phi_az.sin());
        let sgn = match spec.branch {
            Branch::Particle => T::one(),
            Branch::Antiparticle => -T::one(),
        };
        Spinor::new(&[chi0, chi1, chi0 * cre(sgn), chi1 * cre(sgn)])
    } else {
        match spec.branch {
            Branch::Particle => rest_spinor(basis),
            Branch::Antiparticle => {
                // gamma^0 eigenvector with eigenvalue -1
                match dim {
                    2 => {
                        let inv = T::FRAC_1_SQRT_2();
                        Spinor::new(&[cre(inv), cre(-inv)])
                    }
                    _ => Spinor::new(&[czero(), cre(T::one())]),
                }
            }
        }
    };

    let boost = lorentz::spinor_boost(basis, &u);
    let w = Spinor { c: boost.apply(&w_rest.c) };

    // construction check: (gamma.p -+ m) w = 0
    let mut gp = CMat::zeros(basis.spinor_dim);
    let p_lo = metric.raise(&spec.momentum);
    for a in 0..dim {
        gp = gp.add(&basis.gammas[a].scale(cre(p_lo[a])));
    }
    let sgn = match spec.branch {
        Branch::Particle => -T::one(),
        Branch::Antiparticle => T::one(),
    };
    let res = gp.apply(&w.c).add(&w.c.scale(cre(sgn * m)));
    if res.norm() > lit::<T>(1e-10) * (T::one() + w.c.norm()) {
        return Err(PolarError::Consistency(format!(
            "mode spinor fails the free Dirac equation: residual {:?}",
            res.norm()
        )));
    }
    Ok(w.scale(spec.amplitude))
}

/// Single plane wave as an analytic field.
pub fn plane_wave<T: Real>(spec: &PlaneWaveSpec<T>, basis: &CliffordBasis<T>) -> Result<AnalyticField<T>> {
    let w = mode_spinor(spec, basis)?;
    let freq_sign = match spec.branch {
        Branch::Particle => T::one(),
        Branch::Antiparticle => -T::one(),
    };
    Ok(AnalyticField {
        dim: basis.dim(),
        mass: spec.mass,
        modes: vec![Mode { w, p_lo: basis.metric.raise(&spec.momentum), freq_sign }],
    })
}

/// Pointwise sum of analytic fields (same dimension; the first field's mass
/// labels the Dirac operator of the result).
pub fn superpose<T: Real>(fields: &[AnalyticField<T>]) -> Result<AnalyticField<T>> {
    let first = fields.first().ok_or_else(|| PolarError::Validation("empty superposition".into()))?;
    let mut modes = Vec::new();
    for f in fields {
        if f.dim != first.dim {
            return Err(PolarError::Validation("superposed fields must share a dimension".into()));
        }
        modes.extend(f.modes.iter().cloned());
    }
    Ok(AnalyticField { dim: first.dim, mass: first.mass, modes })
}

impl<T: Real> AnalyticField<T> {
    /// Exact value and derivatives at `x` (upper-index coordinates).
    pub fn eval(&self, x: &V4<T>) -> FieldValue<T> {
        let n = self.modes.first().map(|m| m.w.len()).unwrap_or(2);
        let mut out = FieldValue {
            psi: Spinor::zero(n),
            dpsi: [Spinor::zero(n); 4],
            ddpsi: [[Spinor::zero(n); 4]; 4],
        };
        for mode in &self.modes {
            // phase = -sign * p_a x^a
            let mut px = T::zero();
            for a in 0..self.dim {
                px = px + mode.p_lo[a] * x[a];
            }
            let phase = C::new(T::zero(), -mode.freq_sign * px).exp();
            let val = mode.w.scale(phase);
            out.psi = out.psi.add(&val);
            for mu in 0..self.dim {
                let ip = C::new(T::zero(), -mode.freq_sign * mode.p_lo[mu]);
                out.dpsi[mu] = out.dpsi[mu].add(&val.scale(ip));
                for nu in 0..self.dim {
                    let ipn = C::new(T::zero(), -mode.freq_sign * mode.p_lo[nu]);
                    out.ddpsi[mu][nu] = out.ddpsi[mu][nu].add(&val.scale(ip * ipn));
                }
            }
        }
        out
    }

    /// `|| i gamma^mu d_mu psi - m psi ||` at `x` (free Dirac operator).
    pub fn dirac_residual(&self, x: &V4<T>, basis: &CliffordBasis<T>) -> T {
        let fv = self.eval(x);
        let mut acc = Spinor::zero(basis.spinor_dim).c;
        for mu in 0..self.dim {
            let g = basis.gammas[mu].scale(C::new(T::zero(), T::one()));
            acc = acc.add(&g.apply(&fv.dpsi[mu].c));
        }
        acc = acc.sub(&fv.psi.c.scale(cre(self.mass)));
        acc.norm()
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }
}

/// 1-D spatial lattice of spinor values (one fixed-time slice).
#[derive(Clone, Debug)]
pub struct GridField<T> {
    /// Left edge coordinate.
    pub x0: T,
    /// Spacing.
    pub h: T,
    /// Periodic wrap; one-sided edge stencils otherwise.
    pub periodic: bool,
    /// Stencil order (2 or 4).
    pub order: usize,
    pub values: Vec<Spinor<T>>,
}

impl<T: Real> GridField<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x_at(&self, j: usize) -> T {
        self.x0 + self.h * lit(j as f64)
    }
}

/// Central (interior) and one-sided (edges, non-periodic) first derivatives.
pub fn finite_difference_derivatives<T: Real>(g: &GridField<T>) -> Result<Vec<Spinor<T>>> {
    let n = g.len();
    let min = if g.order == 4 { 5 } else { 3 };
    if n < min {
        return Err(PolarError::Validation("grid too small for the stencil".into()));
    }
    if g.order != 2 && g.order != 4 {
        return Err(PolarError::Config("stencil order must be 2 or 4".into()));
    }
    let h = g.h;
    let sc = |x: f64| cre::<T>(lit::<T>(x) / h);
    let idx = |j: isize| -> usize {
        if g.periodic {
            j.rem_euclid(n as isize) as usize
        } else {
            j.clamp(0, n as isize - 1) as usize
        }
    };
    let mut out = Vec::with_capacity(n);
    for j in 0..n as isize {
        let interior_ok = g.periodic
            || (g.order == 2 && j >= 1 && j <= n as isize - 2)
            || (g.order == 4 && j >= 2 && j <= n as isize - 3);
        let d = if interior_ok {
            if g.order == 2 {
                g.values[idx(j + 1)].scale(sc(0.5)).add(&g.values[idx(j - 1)].scale(sc(-0.5)))
            } else {
                g.values[idx(j - 2)]
                    .scale(sc(1.0 / 12.0))
                    .add(&g.values[idx(j - 1)].scale(sc(-8.0 / 12.0)))
                    .add(&g.values[idx(j + 1)].scale(sc(8.0 / 12.0)))
                    .add(&g.values[idx(j + 2)].scale(sc(-1.0 / 12.0)))
            }
        } else {
            // one-sided stencils of matching order at the edges
            let (offsets, coeffs): (Vec<isize>, Vec<f64>) = if g.order == 2 {
                if j == 0 {
                    (vec![0, 1, 2], vec![-1.5, 2.0, -0.5])
                } else {
                    (vec![0, -1, -2], vec![1.5, -2.0, 0.5])
                }
            } else if j <= 1 {
                let base = -j;
                (
                    (0..5).map(|k| k + base).collect(),
                    one_sided4(j as usize),
                )
            } else {
                let jj = n as isize - 1 - j;
                let base = -(4 - jj);
                (
                    (0..5).map(|k| k + base).collect(),
                    one_sided4(jj as usize).iter().rev().map(|c| -c).collect(),
                )
            };
            let mut acc = Spinor::zero(g.values[0].len());
            for (o, c) in offsets.iter().zip(coeffs.iter()) {
                acc = acc.add(&g.values[idx(j + o)].scale(sc(*c)));
            }
            acc
        };
        out.push(d);
    }
    Ok(out)
}

/// Fourth-order one-sided coefficients for a node `shift` in from the left
/// edge (0 or 1), stencil on the 5 nodes starting at the edge.
fn one_sided4(shift: usize) -> Vec<f64> {
    match shift {
        0 => vec![-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -0.25],
        _ => vec![-0.25, -5.0 / 6.0, 1.5, -0.5, 1.0 / 12.0],
    }
}

/// External electromagnetic potential on the 1+1 lattice.
#[derive(Clone, Debug)]
pub struct Potential1p1<T> {
    /// Charge coupling.
    pub q: T,
    /// `A_0(x)` per node.
    pub a0: Vec<T>,
    /// `A_1(x)` per node.
    pub a1: Vec<T>,
}

impl<T: Real> Potential1p1<T> {
    pub fn free(n: usize) -> Self {
        Potential1p1 { q: T::zero(), a0: vec![T::zero(); n], a1: vec![T::zero(); n] }
    }
}

/// One implicit-midpoint (Cayley) step of the 1+1 Dirac equation on a
/// periodic lattice:
/// `(I + i dt H / 2) psi' = (I - i dt H / 2) psi` with
/// `H = -s3 p + m s1 + q A0 - q A1 s3` in the fixed 1+1 representation.
///
/// The scheme is exactly unitary for the Hermitian discrete `H`; the norm
/// drift per step is solver roundoff only.
pub fn dirac_step_1p1<T: Real>(
    g: &GridField<T>,
    mass: T,
    dt: T,
    pot: &Potential1p1<T>,
) -> Result<GridField<T>> {
    let n = g.len();
    if !g.periodic {
        return Err(PolarError::Config("the 1+1 stepper runs on periodic lattices".into()));
    }
    if pot.a0.len() != n || pot.a1.len() != n {
        return Err(PolarError::Validation("potential length mismatch".into()));
    }
    // accuracy guard for the implicit scheme
    let kinetic_scale = T::one() / g.h + mass;
    if dt * kinetic_scale > lit(10.0) {
        return Err(PolarError::Numerical("time step far beyond the accuracy regime".into()));
    }

    let half = C::new(T::zero(), dt * lit::<T>(0.5)); // i dt/2
    let w = dt / (g.h * lit::<T>(4.0)); // dt/(4h)
    let czero_b: Block<T> = [[czero(); 2]; 2];

    let mut lo = vec![czero_b; n];
    let mut up = vec![czero_b; n];
    let mut di = vec![czero_b; n];
    let mut rhs = vec![czero(); 2 * n];

    for j in 0..n {
        // diagonal part of H at node j: m s1 + q A0 - q A1 s3
        let d00 = cre(pot.q * (pot.a0[j] - pot.a1[j]));
        let d11 = cre(pot.q * (pot.a0[j] + pot.a1[j]));
        let m01 = cre(mass);
        // A = I + (i dt/2) Hdiag ; off-diagonals: -+ dt/(4h) s3
        di[j][0][0] = cre(T::one()) + half * d00;
        di[j][1][1] = cre(T::one()) + half * d11;
        di[j][0][1] = half * m01;
        di[j][1][0] = half * m01;
        up[j][0][0] = cre(-w);
        up[j][1][1] = cre(w);
        lo[j][0][0] = cre(w);
        lo[j][1][1] = cre(-w);
    }

    // rhs = (I - i dt/2 H) psi
    for j in 0..n {
        let jm = (j + n - 1) % n;
        let jp = (j + 1) % n;
        let pj = &g.values[j].c;
        let pm = &g.values[jm].c;
        let pp = &g.values[jp].c;
        let d00 = cre(pot.q * (pot.a0[j] - pot.a1[j]));
        let d11 = cre(pot.q * (pot.a0[j] + pot.a1[j]));
        let m01 = cre(mass);
        rhs[2 * j] = pj.a[0] - half * (d00 * pj.a[0] + m01 * pj.a[1])
            + cre(w) * pp.a[0]
            - cre(w) * pm.a[0];
        rhs[2 * j + 1] = pj.a[1] - half * (m01 * pj.a[0] + d11 * pj.a[1]) - cre(w) * pp.a[1]
            + cre(w) * pm.a[1];
    }

    let x = solve_cyclic_block_tridiag(&lo, &di, &up, &rhs)?;
    let mut values = Vec::with_capacity(n);
    for j in 0..n {
        values.push(Spinor::new(&[x[2 * j], x[2 * j + 1]]));
    }
    Ok(GridField { x0: g.x0, h: g.h, periodic: true, order: g.order, values })
}

/// Total discrete norm `sum_j |psi_j|^2 h`.
pub fn grid_norm<T: Real>(g: &GridField<T>) -> T {
    let mut acc = T::zero();
    for v in &g.values {
        acc = acc + v.norm_sqr();
    }
    acc * g.h
}


impl AnalyticField<f64> {
    /// Re-types the field constants for evaluation on another scalar
    /// (dual numbers for exact differentiation of derived quantities).
    pub fn lift<T: Real>(&self) -> AnalyticField<T> {
        let modes = self
            .modes
            .iter()
            .map(|m| {
                let mut w = Spinor::zero(m.w.len());
                for i in 0..m.w.len() {
                    w.c.a[i] = C::new(lit(m.w.c.a[i].re), lit(m.w.c.a[i].im));
                }
                let mut p_lo = lorentz::zero_v4();
                for a in 0..4 {
                    p_lo[a] = lit(m.p_lo[a]);
                }
                Mode { w, p_lo, freq_sign: lit(m.freq_sign) }
            })
            .collect();
        AnalyticField { dim: self.dim, mass: lit(self.mass), modes }
    }
}
