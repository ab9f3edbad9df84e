//! Non-relativistic reference: unitary Schrodinger evolution on a periodic
//! 1-D lattice, polar (module/phase) splitting, quantum potential, and the
//! residuals of the hydrodynamic form (continuity, Hamilton-Jacobi and its
//! Newton gradient).

use num_complex::Complex;

use crate::error::{PolarError, Result};
use crate::linalg::solve_cyclic_tridiag;
use crate::report::ResidualReport;
use crate::scalar::{lit, C, Real};

/// Node mask threshold relative to the peak module.
pub const NODE_MASK: f64 = 1e-8;

/// Complex scalar wave function on a periodic spatial lattice.
#[derive(Clone, Debug)]
pub struct WaveFunction<T> {
    pub x0: T,
    pub h: T,
    pub mass: T,
    /// Real potential per node.
    pub potential: Vec<T>,
    pub values: Vec<C<T>>,
    pub time: T,
}

impl<T: Real> WaveFunction<T> {
    pub fn new(x0: T, h: T, mass: T, potential: Vec<T>, values: Vec<C<T>>) -> Result<Self> {
        if potential.len() != values.len() || values.len() < 3 {
            return Err(PolarError::Config("potential/value length mismatch".into()));
        }
        Ok(WaveFunction { x0, h, mass, potential, values, time: T::zero() })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x_at(&self, j: usize) -> T {
        self.x0 + self.h * lit(j as f64)
    }

    /// Discrete norm `sum |psi|^2 h`.
    pub fn norm(&self) -> T {
        let mut acc = T::zero();
        for v in &self.values {
            acc = acc + v.norm_sqr();
        }
        acc * self.h
    }

    /// `<x>` and `<x^2>` of the density.
    pub fn moments(&self) -> (T, T) {
        let mut n = T::zero();
        let mut m1 = T::zero();
        let mut m2 = T::zero();
        for (j, v) in self.values.iter().enumerate() {
            let w = v.norm_sqr();
            let x = self.x_at(j);
            n = n + w;
            m1 = m1 + w * x;
            m2 = m2 + w * x * x;
        }
        (m1 / n, m2 / n)
    }
}

/// One unitary implicit-midpoint (Crank-Nicolson) step of
/// `i d_t psi = -(1/2m) d_xx psi + V psi` on the periodic lattice.
pub fn evolve_step<T: Real>(w: &WaveFunction<T>, dt: T) -> Result<WaveFunction<T>> {
    let n = w.len();
    let kin = T::one() / (w.mass * w.h * w.h);
    let vmax = w.potential.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    if dt * (kin + vmax) > lit(20.0) {
        return Err(PolarError::Numerical("time step far beyond the accuracy regime".into()));
    }
    let half = C::new(T::zero(), dt * lit::<T>(0.5)); // i dt/2
    let offd = -kin * lit::<T>(0.5); // off-diagonal of H
    let mut lo = vec![C::new(T::zero(), T::zero()); n];
    let mut up = vec![C::new(T::zero(), T::zero()); n];
    let mut di = vec![C::new(T::zero(), T::zero()); n];
    let mut rhs = vec![C::new(T::zero(), T::zero()); n];
    for j in 0..n {
        let hd = kin + w.potential[j];
        di[j] = C::new(T::one(), T::zero()) + half * C::new(hd, T::zero());
        lo[j] = half * C::new(offd, T::zero());
        up[j] = half * C::new(offd, T::zero());
        let jm = (j + n - 1) % n;
        let jp = (j + 1) % n;
        rhs[j] = w.values[j]
            - half * (w.values[j] * hd + (w.values[jm] + w.values[jp]) * offd);
    }
    let values = solve_cyclic_tridiag(&lo, &di, &up, &rhs)?;
    Ok(WaveFunction {
        x0: w.x0,
        h: w.h,
        mass: w.mass,
        potential: w.potential.clone(),
        values,
        time: w.time + dt,
    })
}

/// Module, unwrapped phase and quantum potential of a wave function.
#[derive(Clone, Debug)]
pub struct SchrodingerPolar<T> {
    pub phi: Vec<T>,
    /// Phase, spatially unwrapped from the leftmost above-threshold node.
    pub s: Vec<T>,
    /// `Q = -(d_xx phi) / (2 m phi)`, zeroed where masked.
    pub q: Vec<T>,
    /// `false` where the module is below the node threshold.
    pub valid: Vec<bool>,
}

/// Polar split `psi = phi exp(iS)` with 1-D sequential phase unwrapping.
pub fn polar_split<T: Real>(w: &WaveFunction<T>) -> SchrodingerPolar<T> {
    let n = w.len();
    let mut phi = Vec::with_capacity(n);
    let mut peak = T::zero();
    for v in &w.values {
        let a = v.norm_sqr().sqrt();
        if a > peak {
            peak = a;
        }
        phi.push(a);
    }
    let thresh = peak * lit::<T>(NODE_MASK);
    let valid: Vec<bool> = phi.iter().map(|p| *p > thresh).collect();
    // unwrap from the leftmost valid node
    let mut s = vec![T::zero(); n];
    let start = valid.iter().position(|v| *v).unwrap_or(0);
    let arg = |z: &C<T>| z.im.atan2(z.re);
    s[start] = arg(&w.values[start]);
    let two_pi = T::PI() + T::PI();
    let wrap = |mut d: T| {
        while d > T::PI() {
            d = d - two_pi;
        }
        while d < -T::PI() {
            d = d + two_pi;
        }
        d
    };
    for j in start + 1..n {
        let d = wrap(arg(&w.values[j]) - arg(&w.values[j - 1]));
        s[j] = s[j - 1] + d;
    }
    for j in (0..start).rev() {
        let d = wrap(arg(&w.values[j + 1]) - arg(&w.values[j]));
        s[j] = s[j + 1] - d;
    }
    // quantum potential with a central Laplacian, masked at nodes
    let mut q = vec![T::zero(); n];
    for j in 0..n {
        if !valid[j] {
            continue;
        }
        let jm = (j + n - 1) % n;
        let jp = (j + 1) % n;
        if !valid[jm] || !valid[jp] {
            continue;
        }
        let lap = (phi[jp] - phi[j] - phi[j] + phi[jm]) / (w.h * w.h);
        q[j] = -lap / (lit::<T>(2.0) * w.mass * phi[j]);
    }
    SchrodingerPolar { phi, s, q, valid }
}

/// Central spatial gradient of the phase using locally wrapped differences,
/// well defined across the periodic seam where the unwrapped phase jumps.
fn phase_gradient<T: Real>(w: &WaveFunction<T>) -> Vec<T> {
    let n = w.len();
    let arg = |z: &C<T>| z.im.atan2(z.re);
    let two_pi = T::PI() + T::PI();
    let wrap = |mut d: T| {
        while d > T::PI() {
            d = d - two_pi;
        }
        while d < -T::PI() {
            d = d + two_pi;
        }
        d
    };
    let mut out = vec![T::zero(); n];
    for j in 0..n {
        let jm = (j + n - 1) % n;
        let jp = (j + 1) % n;
        let fwd = wrap(arg(&w.values[jp]) - arg(&w.values[j]));
        let bwd = wrap(arg(&w.values[j]) - arg(&w.values[jm]));
        out[j] = (fwd + bwd) / (w.h + w.h);
    }
    out
}

/// Periodic central spatial derivative of a real nodal field.
fn ddx<T: Real>(f: &[T], h: T) -> Vec<T> {
    let n = f.len();
    let mut out = vec![T::zero(); n];
    for j in 0..n {
        let jm = (j + n - 1) % n;
        let jp = (j + 1) % n;
        out[j] = (f[jp] - f[jm]) / (h + h);
    }
    out
}

/// Aligns the overall `2 pi` branch of `b` to `a` at the first valid node.
fn align_phase<T: Real>(a: &[T], b: &mut [T], valid: &[bool]) {
    if let Some(j) = valid.iter().position(|v| *v) {
        let two_pi = T::PI() + T::PI();
        let shift = ((b[j] - a[j]) / two_pi).round() * two_pi;
        for v in b.iter_mut() {
            *v = *v - shift;
        }
    }
}

/// Residuals of the hydrodynamic (Madelung) form on three consecutive time
/// slices: continuity `d_t(m phi^2) + d_x(phi^2 P)`, the Hamilton-Jacobi
/// equation `-d_t S = P^2/(2m) + V + Q`, and its spatial gradient (Newton)
/// form. All derivatives are central. The Hamilton-Jacobi and Newton
/// residuals are density-weighted (`phi/max phi` per node) and continuity is
/// normalized by the peak density, pairing their scales with the plain
/// Schrodinger residual.
pub fn madelung_residuals_nr<T: Real>(
    prev: &WaveFunction<T>,
    cur: &WaveFunction<T>,
    next: &WaveFunction<T>,
    dt: T,
) -> Result<ResidualReport> {
    let n = cur.len();
    if prev.len() != n || next.len() != n {
        return Err(PolarError::Validation("slice length mismatch".into()));
    }
    let pp = polar_split(prev);
    let pc = polar_split(cur);
    let pn = polar_split(next);
    let mut s_prev = pp.s.clone();
    let mut s_next = pn.s.clone();
    align_phase(&pc.s, &mut s_prev, &pc.valid);
    align_phase(&pc.s, &mut s_next, &pc.valid);

    let m = cur.mass;
    let h = cur.h;
    let peak = pc.phi.iter().fold(T::zero(), |a, v| a.max(*v));
    let p = phase_gradient(cur);
    let mut flux = Vec::with_capacity(n);
    for j in 0..n {
        flux.push(pc.phi[j] * pc.phi[j] * p[j]);
    }
    let dflux = ddx(&flux, h);
    let mut hj_total = vec![T::zero(); n];
    let mut cont = T::zero();
    let mut hj = T::zero();
    let two_dt = dt + dt;
    for j in 0..n {
        let jm = (j + n - 1) % n;
        let jp = (j + 1) % n;
        let ok = pc.valid[j] && pp.valid[j] && pn.valid[j] && pc.valid[jm] && pc.valid[jp];
        if !ok {
            continue;
        }
        let drho = (pn.phi[j] * pn.phi[j] - pp.phi[j] * pp.phi[j]) / two_dt;
        let c = (m * drho + dflux[j]) / (peak * peak);
        if c.abs() > cont {
            cont = c.abs();
        }
        let hval = -(s_next[j] - s_prev[j]) / two_dt;
        let rhs = p[j] * p[j] / (m + m) + cur.potential[j] + pc.q[j];
        hj_total[j] = rhs + (s_next[j] - s_prev[j]) / two_dt;
        let r = (hval - rhs).abs() * pc.phi[j] / peak;
        if r > hj {
            hj = r;
        }
    }
    // Newton form: d_t P + d_x (P^2/2m + V + Q) = 0
    let p_prev = phase_gradient(prev);
    let p_next = phase_gradient(next);
    let mut bernoulli = Vec::with_capacity(n);
    for j in 0..n {
        bernoulli.push(p[j] * p[j] / (m + m) + cur.potential[j] + pc.q[j]);
    }
    let dbern = ddx(&bernoulli, h);
    let mut newton = T::zero();
    for j in 0..n {
        // the gradient of the Bernoulli field needs Q at j-1, j, j+1, hence
        // module validity over the full 5-node neighborhood
        let ok = (0..5).all(|o| {
            let idx = (j + n + o - 2) % n;
            pc.valid[idx]
        }) && pp.valid[j]
            && pn.valid[j];
        if !ok {
            continue;
        }
        let dp = (p_next[j] - p_prev[j]) / two_dt;
        let r = (dp + dbern[j]).abs() * pc.phi[j] / peak;
        if r > newton {
            newton = r;
        }
    }
    let mut report = ResidualReport::new();
    report.record("contpolar", cont.to_f64().unwrap_or(f64::NAN));
    report.record("enerpolar", hj.to_f64().unwrap_or(f64::NAN));
    report.record("newton", newton.to_f64().unwrap_or(f64::NAN));
    Ok(report)
}

/// Discrete Schrodinger residual `i d_t psi + (1/2m) d_xx psi - V psi` with
/// the same central stencils as the hydrodynamic residuals.
pub fn schrodinger_residual<T: Real>(
    prev: &WaveFunction<T>,
    cur: &WaveFunction<T>,
    next: &WaveFunction<T>,
    dt: T,
) -> Result<f64> {
    let n = cur.len();
    if prev.len() != n || next.len() != n {
        return Err(PolarError::Validation("slice length mismatch".into()));
    }
    let mut worst = T::zero();
    let i = C::new(T::zero(), T::one());
    for j in 0..n {
        let jm = (j + n - 1) % n;
        let jp = (j + 1) % n;
        let dtpsi = (next.values[j] - prev.values[j]) / C::new(dt + dt, T::zero());
        let lap = (cur.values[jp] - cur.values[j] - cur.values[j] + cur.values[jm])
            / C::new(cur.h * cur.h, T::zero());
        let r = i * dtpsi + lap / C::new(cur.mass + cur.mass, T::zero())
            - cur.values[j] * cur.potential[j];
        let rn = r.norm_sqr().sqrt();
        if rn > worst {
            worst = rn;
        }
    }
    Ok(worst.to_f64().unwrap_or(f64::NAN))
}

/// Free Gaussian packet `exp(-(x-c)^2/(4 sigma0^2) + i k x)` (unnormalized).
pub fn gaussian_packet<T: Real>(
    n: usize,
    length: T,
    center: T,
    sigma0: T,
    k: T,
    mass: T,
    potential: impl Fn(T) -> T,
) -> Result<WaveFunction<T>> {
    let h = length / lit(n as f64);
    let x0 = -length * lit::<T>(0.5);
    let mut values = Vec::with_capacity(n);
    let mut pot = Vec::with_capacity(n);
    for j in 0..n {
        let x = x0 + h * lit(j as f64);
        let arg = -(x - center) * (x - center) / (lit::<T>(4.0) * sigma0 * sigma0);
        let v = C::new(T::zero(), k * x).exp() * C::new(arg.exp(), T::zero());
        values.push(v);
        pot.push(potential(x));
    }
    WaveFunction::new(x0, h, mass, pot, values)
}

/// Width of the analytic free Gaussian: `sigma(t)^2 = sigma0^2 (1 + (t/(2 m sigma0^2))^2)`.
pub fn free_gaussian_sigma<T: Real>(sigma0: T, mass: T, t: T) -> T {
    let tau = t / (lit::<T>(2.0) * mass * sigma0 * sigma0);
    sigma0 * (T::one() + tau * tau).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    type W = WaveFunction<f64>;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn plane_wave_slices(n: usize, length: f64, kmode: i32, v0: f64, times: [f64; 3]) -> [W; 3] {
        let h = length / n as f64;
        let k = 2.0 * std::f64::consts::PI * kmode as f64 / length;
        let omega = k * k / 2.0 + v0;
        let build = |t: f64| -> W {
            let values = (0..n)
                .map(|j| {
                    let x = -length / 2.0 + j as f64 * h;
                    c(0.0, k * x - omega * t).exp()
                })
                .collect();
            let mut w =
                WaveFunction::new(-length / 2.0, h, 1.0, vec![v0; n], values).unwrap();
            w.time = t;
            w
        };
        [build(times[0]), build(times[1]), build(times[2])]
    }

    #[test]
    fn norm_is_conserved_per_step() {
        let w = gaussian_packet(512, 40.0, 0.0, 1.0, 0.4, 1.0, |_: f64| 0.0).unwrap();
        let n0 = w.norm();
        let mut cur = w;
        for _ in 0..50 {
            cur = evolve_step(&cur, 0.01).unwrap();
            assert!((cur.norm() - n0).abs() / n0 < 1e-12);
        }
    }

    #[test]
    fn constant_potential_is_a_global_cayley_phase() {
        let n = 128;
        let v0 = 0.7;
        let w = {
            let values = vec![c(1.0, 0.0); n];
            WaveFunction::new(0.0, 0.1, 1.0, vec![v0; n], values).unwrap()
        };
        let dt = 0.02;
        let out = evolve_step(&w, dt).unwrap();
        let cayley = (c(1.0, 0.0) - c(0.0, 0.5 * dt * v0)) / (c(1.0, 0.0) + c(0.0, 0.5 * dt * v0));
        for j in 0..n {
            assert!((out.values[j] - cayley).norm() < 1e-13);
        }
        // matches exp(-i V dt) to O(dt^3)
        assert!((cayley - c(0.0, -v0 * dt).exp()).norm() < (v0 * dt).powi(3));
    }

    #[test]
    fn free_gaussian_width_follows_the_closed_form() {
        let sigma0 = 1.0;
        let mass = 1.0;
        let dt = 5e-3;
        let steps = 100;
        let mut w = gaussian_packet(2048, 40.0, 0.0, sigma0, 0.0, mass, |_: f64| 0.0).unwrap();
        for _ in 0..steps {
            w = evolve_step(&w, dt).unwrap();
        }
        let t = dt * steps as f64;
        let (_, m2) = w.moments();
        let sigma = m2.sqrt();
        let expect = free_gaussian_sigma(sigma0, mass, t);
        assert!(
            (sigma - expect).abs() < 1e-4,
            "sigma {sigma} vs {expect} (diff {})",
            (sigma - expect).abs()
        );
    }

    #[test]
    fn coherent_state_center_oscillates_classically() {
        let omega = 1.0f64;
        let mass = 1.0;
        let x0 = 1.0;
        let mut w = gaussian_packet(
            1024,
            30.0,
            x0,
            (1.0 / (2.0 * mass * omega)).sqrt(),
            0.0,
            mass,
            |x| 0.5 * mass * omega * omega * x * x,
        )
        .unwrap();
        let dt = 2e-3;
        let steps = 800; // t = 1.6
        for _ in 0..steps {
            w = evolve_step(&w, dt).unwrap();
        }
        let t = dt * steps as f64;
        let (center, _) = w.moments();
        assert!(
            (center - x0 * (omega * t).cos()).abs() < 1e-3,
            "center {center} vs {}",
            x0 * (omega * t).cos()
        );
    }

    #[test]
    fn plane_wave_polar_split_and_residuals() {
        let [prev, cur, next] = plane_wave_slices(128, 16.0, 3, 0.25, [-0.01, 0.0, 0.01]);
        let p = polar_split(&cur);
        let k = 2.0 * std::f64::consts::PI * 3.0 / 16.0;
        for j in 1..127 {
            assert!((p.phi[j] - 1.0).abs() < 1e-12);
            assert!(p.q[j].abs() < 1e-10);
            let ds = (p.s[j + 1] - p.s[j - 1]) / (2.0 * cur.h);
            assert!((ds - k).abs() < 1e-10, "grad S {ds} vs {k}");
        }
        let rep = madelung_residuals_nr(&prev, &cur, &next, 0.01).unwrap();
        assert!(rep.max() < 1e-10, "{rep}");
    }

    #[test]
    fn gaussian_q_matches_symbolic_derivative() {
        // static Gaussian: Q = -(phi'')/(2 m phi) with
        // phi = exp(-x^2 / (4 s^2)): phi''/phi = (x^2/(4 s^4) - 1/(2 s^2))
        let s0 = 1.3f64;
        let w = gaussian_packet(4096, 40.0, 0.0, s0, 0.0, 1.0, |_: f64| 0.0).unwrap();
        let p = polar_split(&w);
        // sample the packet bulk, |x| <= 4
        let n = w.len();
        for j in (n / 2 - 400..n / 2 + 400).step_by(40) {
            let x = w.x_at(j);
            let expect = -(x * x / (4.0 * s0.powi(4)) - 1.0 / (2.0 * s0 * s0)) / 2.0;
            if p.valid[j] {
                assert!(
                    (p.q[j] - expect).abs() < 1e-4 * (1.0 + expect.abs()),
                    "Q({x}) = {} vs {expect}",
                    p.q[j]
                );
            }
        }
    }

    #[test]
    fn node_crossing_is_masked_not_propagated() {
        // odd superposition with a hard node at x = 0
        let n = 256;
        let h = 20.0 / n as f64;
        let values: Vec<_> = (0..n)
            .map(|j| {
                let x = -10.0 + j as f64 * h;
                c((x * 0.8).sin() * (-x * x / 8.0).exp(), 0.0)
            })
            .collect();
        let w = WaveFunction::new(-10.0, h, 1.0, vec![0.0; n], values).unwrap();
        let p = polar_split(&w);
        let masked = p.valid.iter().filter(|v| !**v).count();
        assert!(masked > 0, "expected masked nodes");
        for j in 0..n {
            assert!(p.q[j].is_finite());
            assert!(p.s[j].is_finite());
        }
    }

    #[test]
    fn evolved_gaussian_residuals_shrink_at_second_order() {
        let mut errs = Vec::new();
        for lvl in 0..3 {
            let n = 256 << lvl;
            let dt = 8e-3 / f64::powi(2.0, lvl);
            let steps = 10 << lvl;
            let mut w = gaussian_packet(n, 30.0, 0.0, 1.0, 0.5, 1.0, |_: f64| 0.0).unwrap();
            for _ in 0..steps {
                w = evolve_step(&w, dt).unwrap();
            }
            let prev = w.clone();
            let cur = evolve_step(&prev, dt).unwrap();
            let next = evolve_step(&cur, dt).unwrap();
            let rep = madelung_residuals_nr(&prev, &cur, &next, dt).unwrap();
            errs.push(rep.max());
        }
        let o1 = (errs[0] / errs[1]).log2();
        let o2 = (errs[1] / errs[2]).log2();
        assert!((o1 - 2.0).abs() < 0.4, "orders {o1}, {o2} from {errs:?}");
        assert!((o2 - 2.0).abs() < 0.4, "orders {o1}, {o2} from {errs:?}");
    }

    #[test]
    fn hydrodynamic_and_schrodinger_residuals_control_each_other() {
        let dt = 4e-3;
        let mut w = gaussian_packet(512, 30.0, 0.0, 1.0, 0.5, 1.0, |_: f64| 0.0).unwrap();
        for _ in 0..20 {
            w = evolve_step(&w, dt).unwrap();
        }
        let prev = w.clone();
        let cur = evolve_step(&prev, dt).unwrap();
        let next = evolve_step(&cur, dt).unwrap();
        let rm = madelung_residuals_nr(&prev, &cur, &next, dt).unwrap().max();
        let rs = schrodinger_residual(&prev, &cur, &next, dt).unwrap();
        assert!(rm < 100.0 * rs + 1e-12, "madelung {rm} vs schrodinger {rs}");
        assert!(rs < 100.0 * rm + 1e-12, "madelung {rm} vs schrodinger {rs}");
        // corrupted phase: the Hamilton-Jacobi residual jumps
        let mut bad = cur.clone();
        for (j, v) in bad.values.iter_mut().enumerate() {
            let x = 0.03 * (j as f64 * 0.1).sin();
            *v *= c(0.0, x).exp();
        }
        let rep_bad = madelung_residuals_nr(&prev, &bad, &next, dt).unwrap();
        let rep_good = madelung_residuals_nr(&prev, &cur, &next, dt).unwrap();
        assert!(rep_bad.get("enerpolar").unwrap() > 20.0 * rep_good.get("enerpolar").unwrap());
    }

    #[test]
    fn oversized_step_is_rejected() {
        let w = gaussian_packet(64, 10.0, 0.0, 1.0, 0.0, 1.0, |_: f64| 0.0).unwrap();
        assert!(evolve_step(&w, 1e3).is_err());
    }
}
