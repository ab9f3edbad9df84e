//! Clifford algebra data for spacetime dimensions 2, 3 and 4.
//!
//! Conventions fixed here and relied on everywhere else:
//!
//! * metric signature `(+,-)`, `(+,-,-)`, `(+,-,-,-)`;
//! * Levi-Civita symbol with all lower indices in increasing order equal to
//!   `+1` (`eps_{01} = eps_{012} = eps_{0123} = +1`), upper-index values
//!   obtained by raising with the metric (`eps^{01} = -1`, `eps^{012} = +1`,
//!   `eps^{0123} = -1`);
//! * `sigma_{ab} = [gamma_a, gamma_b]/4`;
//! * representations: dim 4 chiral (Weyl) with the parity-odd matrix
//!   `diag(-1,-1,+1,+1)`; dims 2 and 3 use Pauli-built 2x2 matrices.

use crate::error::{PolarError, Result};
use crate::linalg::CMat;
use crate::report::ResidualReport;
use crate::scalar::{lit, C, Real};

/// Spacetime dimension and signature.
#[derive(Clone, Debug, PartialEq)]
pub struct DimensionConfig {
    pub dim: usize,
    /// Diagonal signature entries, first entry `+1`.
    pub signature: Vec<i8>,
}

impl DimensionConfig {
    /// Standard mostly-minus configuration for `dim` in `{2, 3, 4}`.
    pub fn new(dim: usize) -> Result<Self> {
        if !(2..=4).contains(&dim) {
            return Err(PolarError::Config(format!("unsupported dimension {dim}")));
        }
        let mut signature = vec![-1i8; dim];
        signature[0] = 1;
        Ok(DimensionConfig { dim, signature })
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=4).contains(&self.dim) {
            return Err(PolarError::Config(format!("unsupported dimension {}", self.dim)));
        }
        if self.signature.len() != self.dim {
            return Err(PolarError::Config("signature length must equal dim".into()));
        }
        if self.signature[0] != 1 || self.signature.iter().filter(|&&s| s == 1).count() != 1 {
            return Err(PolarError::Config("signature must be (+,-,...,-)".into()));
        }
        if self.signature.iter().any(|&s| s != 1 && s != -1) {
            return Err(PolarError::Config("signature entries must be +-1".into()));
        }
        Ok(())
    }
}

/// Permutation sign of `idx` relative to `(0..dim)`, or 0 on repeats.
fn perm_sign(idx: &[usize]) -> i8 {
    let n = idx.len();
    for i in 0..n {
        if idx[i] >= n {
            return 0;
        }
        for j in i + 1..n {
            if idx[i] == idx[j] {
                return 0;
            }
        }
    }
    let mut sign = 1i8;
    let mut v: Vec<usize> = idx.to_vec();
    for i in 0..n {
        while v[i] != i {
            let t = v[i];
            v.swap(i, t);
            sign = -sign;
        }
    }
    sign
}

/// Real diagonal metric with raising/lowering helpers.
#[derive(Clone, Copy, Debug)]
pub struct Metric {
    pub dim: usize,
    sig: [i8; 4],
    det: i8,
}

impl Metric {
    pub fn new(config: &DimensionConfig) -> Self {
        let mut sig = [0i8; 4];
        let mut det = 1i8;
        for (i, &s) in config.signature.iter().enumerate() {
            sig[i] = s;
            det *= s;
        }
        Metric { dim: config.dim, sig, det }
    }

    /// `eta_{aa}` as a scalar.
    #[inline]
    pub fn eta<T: Real>(&self, a: usize) -> T {
        lit(self.sig[a] as f64)
    }

    #[inline]
    pub fn eta_i8(&self, a: usize) -> i8 {
        self.sig[a]
    }

    /// Metric determinant sign.
    #[inline]
    pub fn det(&self) -> i8 {
        self.det
    }

    /// Minkowski inner product of two vectors carried in the same index
    /// position (`eta` is its own inverse, so this is valid for a pair of
    /// upper or a pair of lower vectors alike).
    pub fn minkowski_dot<T: Real>(&self, u: &[T; 4], v: &[T; 4]) -> T {
        let mut s = T::zero();
        for a in 0..self.dim {
            s = s + self.eta::<T>(a) * u[a] * v[a];
        }
        s
    }

    /// Raises one index of a vector (componentwise sign flip on the spatial part).
    pub fn raise<T: Real>(&self, v: &[T; 4]) -> [T; 4] {
        let mut out = [T::zero(); 4];
        for a in 0..self.dim {
            out[a] = self.eta::<T>(a) * v[a];
        }
        out
    }

    /// Levi-Civita with all indices lower; increasing order gives `+1`.
    #[inline]
    pub fn eps_lower<T: Real>(&self, idx: &[usize]) -> T {
        debug_assert_eq!(idx.len(), self.dim);
        lit(perm_sign(idx) as f64)
    }

    /// Levi-Civita with all indices upper.
    #[inline]
    pub fn eps_upper<T: Real>(&self, idx: &[usize]) -> T {
        lit((perm_sign(idx) * self.det) as f64)
    }
}

/// Gamma/sigma/parity matrices, metric and Levi-Civita data for one dimension.
#[derive(Clone, Debug)]
pub struct CliffordBasis<T> {
    pub config: DimensionConfig,
    pub metric: Metric,
    /// `gamma^a` (upper index), `dim` entries.
    pub gammas: Vec<CMat<T>>,
    /// `sigma_{ab} = [gamma_a, gamma_b]/4` (lower indices).
    pub sigmas: Vec<Vec<CMat<T>>>,
    /// Parity-odd matrix (dims 2 and 4 only).
    pub parity: Option<CMat<T>>,
    /// Spinor-space dimension (2 or 4).
    pub spinor_dim: usize,
}

fn pauli<T: Real>(k: usize) -> CMat<T> {
    let mut m = CMat::zeros(2);
    match k {
        1 => {
            m.a[0][1] = C::new(T::one(), T::zero());
            m.a[1][0] = C::new(T::one(), T::zero());
        }
        2 => {
            m.a[0][1] = C::new(T::zero(), -T::one());
            m.a[1][0] = C::new(T::zero(), T::one());
        }
        3 => {
            m.a[0][0] = C::new(T::one(), T::zero());
            m.a[1][1] = C::new(-T::one(), T::zero());
        }
        _ => unreachable!(),
    }
    m
}

impl<T: Real> CliffordBasis<T> {
    /// `gamma_a` (lower index).
    pub fn gamma_lower(&self, a: usize) -> CMat<T> {
        self.gammas[a].scale(C::new(self.metric.eta::<T>(a), T::zero()))
    }

    /// `sigma^{ab}` (both indices raised).
    pub fn sigma_upper(&self, a: usize, b: usize) -> CMat<T> {
        let s = self.metric.eta::<T>(a) * self.metric.eta::<T>(b);
        self.sigmas[a][b].scale(C::new(s, T::zero()))
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }
}

/// Builds the fixed representation for the requested dimension.
pub fn build_basis<T: Real>(config: &DimensionConfig) -> Result<CliffordBasis<T>> {
    config.validate()?;
    let dim = config.dim;
    let metric = Metric::new(config);
    let i = C::new(T::zero(), T::one());
    let one = C::new(T::one(), T::zero());

    let (gammas, parity, spinor_dim): (Vec<CMat<T>>, Option<CMat<T>>, usize) = match dim {
        2 => {
            // gamma^0 = s1, gamma^1 = i s2, parity = s3 so that
            // 2 sigma_{01} = eps_{01} pi with eps_{01} = +1.
            let g0 = pauli(1);
            let g1 = pauli::<T>(2).scale(i);
            (vec![g0, g1], Some(pauli(3)), 2)
        }
        3 => {
            // gamma^0 = s3, gamma^1 = i s1, gamma^2 = -i s2 so that
            // 2 sigma^{ab} = i eps^{abc} gamma_c with eps^{012} = +1.
            let g0 = pauli(3);
            let g1 = pauli::<T>(1).scale(i);
            let g2 = pauli::<T>(2).scale(-i);
            (vec![g0, g1, g2], None, 2)
        }
        4 => {
            // Chiral (Weyl) representation, parity = diag(-1,-1,+1,+1).
            let mut g = Vec::with_capacity(4);
            let mut g0 = CMat::zeros(4);
            for r in 0..2 {
                g0.a[r][r + 2] = one;
                g0.a[r + 2][r] = one;
            }
            g.push(g0);
            for k in 1..=3 {
                let p = pauli::<T>(k);
                let mut gk = CMat::zeros(4);
                for r in 0..2 {
                    for c in 0..2 {
                        gk.a[r][c + 2] = p.a[r][c];
                        gk.a[r + 2][c] = -p.a[r][c];
                    }
                }
                g.push(gk);
            }
            let mut par = CMat::zeros(4);
            par.a[0][0] = -one;
            par.a[1][1] = -one;
            par.a[2][2] = one;
            par.a[3][3] = one;
            (g, Some(par), 4)
        }
        _ => unreachable!(),
    };

    let mut sigmas = vec![vec![CMat::zeros(spinor_dim); dim]; dim];
    for a in 0..dim {
        for b in 0..dim {
            let ga = gammas[a].scale(C::new(metric.eta::<T>(a), T::zero()));
            let gb = gammas[b].scale(C::new(metric.eta::<T>(b), T::zero()));
            sigmas[a][b] = ga.commutator(&gb).scale(C::new(lit(0.25), T::zero()));
        }
    }

    let basis = CliffordBasis { config: config.clone(), metric, gammas, sigmas, parity, spinor_dim };
    // The construction is fixed; make an invalid representation impossible to return.
    let report = verify_algebra(&basis);
    if report.max() > 1e-13 {
        return Err(PolarError::Consistency(format!(
            "gamma representation failed self-check: max residual {}",
            report.max()
        )));
    }
    Ok(basis)
}

/// Entrywise residuals of every algebraic invariant of the basis.
pub fn verify_algebra<T: Real>(basis: &CliffordBasis<T>) -> ResidualReport {
    let mut report = ResidualReport::new();
    let dim = basis.dim();
    let n = basis.spinor_dim;
    let metric = basis.metric;
    let to64 = |x: T| x.to_f64().unwrap_or(f64::NAN);

    // {gamma_a, gamma_b} = 2 eta_{ab} I
    let mut anti = 0.0f64;
    for a in 0..dim {
        for b in 0..dim {
            let ga = basis.gamma_lower(a);
            let gb = basis.gamma_lower(b);
            let mut want = CMat::zeros(n);
            if a == b {
                want = CMat::identity(n).scale(C::new(metric.eta::<T>(a) * lit(2.0), T::zero()));
            }
            let r = ga.anticommutator(&gb).sub(&want).max_abs();
            anti = anti.max(to64(r));
        }
    }
    report.record("anticommutation", anti);

    // sigma_{ab} = [gamma_a, gamma_b]/4
    let mut sig = 0.0f64;
    for a in 0..dim {
        for b in 0..dim {
            let want = basis
                .gamma_lower(a)
                .commutator(&basis.gamma_lower(b))
                .scale(C::new(lit(0.25), T::zero()));
            sig = sig.max(to64(basis.sigmas[a][b].sub(&want).max_abs()));
        }
    }
    report.record("sigma_def", sig);

    // Dimension-specific duality identity.
    let mut dual = 0.0f64;
    match dim {
        2 => {
            // 2 sigma_{ab} = eps_{ab} pi
            let par = basis.parity.as_ref().unwrap();
            for a in 0..2 {
                for b in 0..2 {
                    let eps: T = metric.eps_lower(&[a, b]);
                    let want = par.scale(C::new(eps, T::zero()));
                    let got = basis.sigmas[a][b].scale(C::new(lit(2.0), T::zero()));
                    dual = dual.max(to64(got.sub(&want).max_abs()));
                }
            }
            report.record("parity_sq", to64(par.matmul(par).sub(&CMat::identity(n)).max_abs()));
        }
        3 => {
            // 2 sigma^{ab} = i eps^{abc} gamma_c
            for a in 0..3 {
                for b in 0..3 {
                    let got = basis.sigma_upper(a, b).scale(C::new(lit(2.0), T::zero()));
                    let mut want = CMat::zeros(n);
                    for c in 0..3 {
                        let eps: T = metric.eps_upper(&[a, b, c]);
                        want = want.add(&basis.gamma_lower(c).scale(C::new(T::zero(), eps)));
                    }
                    dual = dual.max(to64(got.sub(&want).max_abs()));
                }
            }
        }
        4 => {
            // 2 i sigma_{ab} = eps_{abcd} pi sigma^{cd}
            let par = basis.parity.as_ref().unwrap();
            for a in 0..4 {
                for b in 0..4 {
                    let got = basis.sigmas[a][b].scale(C::new(T::zero(), lit(2.0)));
                    let mut want = CMat::zeros(n);
                    for c in 0..4 {
                        for d in 0..4 {
                            let eps: T = metric.eps_lower(&[a, b, c, d]);
                            if eps == T::zero() {
                                continue;
                            }
                            want = want
                                .add(&par.matmul(&basis.sigma_upper(c, d)).scale(C::new(eps, T::zero())));
                        }
                    }
                    dual = dual.max(to64(got.sub(&want).max_abs()));
                }
            }
            report.record("parity_sq", to64(par.matmul(par).sub(&CMat::identity(n)).max_abs()));
        }
        _ => unreachable!(),
    }
    report.record("duality", dual);
    report
}

/// Totally antisymmetric tensor of rank 0..=4, stored dense with lower indices.
#[derive(Clone, Debug)]
pub enum AntisymTensor<T> {
    R0(T),
    R1([T; 4]),
    R2([[T; 4]; 4]),
    R3([[[T; 4]; 4]; 4]),
    R4([[[[T; 4]; 4]; 4]; 4]),
}

impl<T: Real> AntisymTensor<T> {
    pub fn rank(&self) -> usize {
        match self {
            AntisymTensor::R0(_) => 0,
            AntisymTensor::R1(_) => 1,
            AntisymTensor::R2(_) => 2,
            AntisymTensor::R3(_) => 3,
            AntisymTensor::R4(_) => 4,
        }
    }

    pub fn get(&self, idx: &[usize]) -> T {
        match self {
            AntisymTensor::R0(v) => *v,
            AntisymTensor::R1(v) => v[idx[0]],
            AntisymTensor::R2(v) => v[idx[0]][idx[1]],
            AntisymTensor::R3(v) => v[idx[0]][idx[1]][idx[2]],
            AntisymTensor::R4(v) => v[idx[0]][idx[1]][idx[2]][idx[3]],
        }
    }

    fn set(&mut self, idx: &[usize], val: T) {
        match self {
            AntisymTensor::R0(v) => *v = val,
            AntisymTensor::R1(v) => v[idx[0]] = val,
            AntisymTensor::R2(v) => v[idx[0]][idx[1]] = val,
            AntisymTensor::R3(v) => v[idx[0]][idx[1]][idx[2]] = val,
            AntisymTensor::R4(v) => v[idx[0]][idx[1]][idx[2]][idx[3]] = val,
        }
    }

    pub fn zeros(rank: usize) -> Self {
        match rank {
            0 => AntisymTensor::R0(T::zero()),
            1 => AntisymTensor::R1([T::zero(); 4]),
            2 => AntisymTensor::R2([[T::zero(); 4]; 4]),
            3 => AntisymTensor::R3([[[T::zero(); 4]; 4]; 4]),
            4 => AntisymTensor::R4([[[[T::zero(); 4]; 4]; 4]; 4]),
            _ => panic!("rank out of range"),
        }
    }

    /// Checks total antisymmetry up to `tol`.
    pub fn check_antisymmetric(&self, dim: usize, tol: T) -> Result<()> {
        let k = self.rank();
        if k < 2 {
            return Ok(());
        }
        let mut idx = vec![0usize; k];
        loop {
            // compare against the sorted representative with permutation sign
            let mut sorted: Vec<(usize, usize)> = idx.iter().cloned().enumerate().collect();
            sorted.sort_by_key(|&(_, v)| v);
            let perm: Vec<usize> = sorted.iter().map(|&(p, _)| p).collect();
            let sign = perm_sign(&perm);
            let repr: Vec<usize> = sorted.iter().map(|&(_, v)| v).collect();
            let has_repeat = repr.windows(2).any(|w| w[0] == w[1]);
            let want = if has_repeat || sign == 0 {
                T::zero()
            } else {
                lit::<T>(sign as f64) * self.get(&repr)
            };
            if (self.get(&idx) - want).abs() > tol {
                return Err(PolarError::Validation("tensor is not totally antisymmetric".into()));
            }
            // advance multi-index
            let mut p = k;
            loop {
                if p == 0 {
                    return Ok(());
                }
                p -= 1;
                idx[p] += 1;
                if idx[p] < dim {
                    break;
                }
                idx[p] = 0;
            }
        }
    }
}

/// Hodge dual: contracts a totally antisymmetric rank-`k` tensor with the
/// Levi-Civita tensor, producing rank `dim - k`:
/// `(*T)_{b_1..b_{d-k}} = (1/k!) T^{a_1..a_k} eps_{a_1..a_k b_1..b_{d-k}}`.
///
/// Applying the dual twice returns the input times a sign fixed by signature
/// and rank; see [`double_dual_sign`] for the documented table.
pub fn hodge_dual<T: Real>(tensor: &AntisymTensor<T>, basis: &CliffordBasis<T>) -> Result<AntisymTensor<T>> {
    let dim = basis.dim();
    let k = tensor.rank();
    if k > dim {
        return Err(PolarError::Validation(format!("rank {k} exceeds dimension {dim}")));
    }
    tensor.check_antisymmetric(dim, lit(1e-12))?;
    let out_rank = dim - k;
    let metric = basis.metric;
    let mut out = AntisymTensor::<T>::zeros(out_rank);

    let mut bidx = vec![0usize; out_rank];
    loop {
        let mut acc = T::zero();
        // sum over the k contracted indices
        let mut aidx = vec![0usize; k];
        loop {
            // raise the contracted indices on T
            let mut t = tensor.get(&aidx);
            for &a in &aidx {
                t = t * metric.eta::<T>(a);
            }
            if t != T::zero() {
                let mut full = Vec::with_capacity(dim);
                full.extend_from_slice(&aidx);
                full.extend_from_slice(&bidx);
                acc = acc + t * metric.eps_lower::<T>(&full);
            }
            let mut p = k;
            let mut done = true;
            while p > 0 {
                p -= 1;
                aidx[p] += 1;
                if aidx[p] < dim {
                    done = false;
                    break;
                }
                aidx[p] = 0;
            }
            if done {
                break;
            }
        }
        let kfact: f64 = (1..=k).product::<usize>() as f64;
        out.set(&bidx, acc / lit(kfact.max(1.0)));

        let mut p = out_rank;
        let mut done = true;
        while p > 0 {
            p -= 1;
            bidx[p] += 1;
            if bidx[p] < dim {
                done = false;
                break;
            }
            bidx[p] = 0;
        }
        if done || out_rank == 0 {
            break;
        }
    }
    Ok(out)
}

/// Sign `s` such that `dual(dual(T)) = s * T` for a rank-`k` input.
///
/// With the conventions of this module the table is
/// `s = det(eta) * (-1)^{k (dim-k)}`:
///
/// | dim | k=0 | k=1 | k=2 | k=3 | k=4 |
/// |-----|-----|-----|-----|-----|-----|
/// | 2   | -1  | +1  | -1  |     |     |
/// | 3   | +1  | +1  | +1  | +1  |     |
/// | 4   | -1  | +1  | -1  | +1  | -1  |
pub fn double_dual_sign(dim: usize, k: usize, metric: &Metric) -> f64 {
    let s = if (k * (dim - k)) % 2 == 0 { 1.0 } else { -1.0 };
    metric.det() as f64 * s
}

/// Exhaustive check of the Levi-Civita contraction identities used by the
/// dimensional-reduction algebra:
/// dim 3: `eps^{ijk} eps_{abk} = d^i_a d^j_b - d^i_b d^j_a`;
/// dim 2: `eps_{ak} eps^{ik} = -d^i_a` and
/// `eps_{ab} eps^{ij} = -d^i_a d^j_b + d^i_b d^j_a`.
pub fn epsilon_identity_check(dim: usize) -> Result<ResidualReport> {
    let config = DimensionConfig::new(dim)?;
    let metric = Metric::new(&config);
    let mut report = ResidualReport::new();
    match dim {
        3 => {
            let mut worst = 0.0f64;
            for i in 0..3 {
                for j in 0..3 {
                    for a in 0..3 {
                        for b in 0..3 {
                            let mut lhs = 0.0;
                            for k in 0..3 {
                                lhs += metric.eps_upper::<f64>(&[i, j, k])
                                    * metric.eps_lower::<f64>(&[a, b, k]);
                            }
                            let d = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
                            let rhs = d(i, a) * d(j, b) - d(i, b) * d(j, a);
                            worst = worst.max((lhs - rhs).abs());
                        }
                    }
                }
            }
            report.record("eps3_contract1", worst);
        }
        2 => {
            let d = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
            let mut worst1 = 0.0f64;
            for a in 0..2 {
                for i in 0..2 {
                    let mut lhs = 0.0;
                    for k in 0..2 {
                        lhs += metric.eps_lower::<f64>(&[a, k]) * metric.eps_upper::<f64>(&[i, k]);
                    }
                    worst1 = worst1.max((lhs + d(i, a)).abs());
                }
            }
            report.record("eps2_contract1", worst1);
            let mut worst2 = 0.0f64;
            for a in 0..2 {
                for b in 0..2 {
                    for i in 0..2 {
                        for j in 0..2 {
                            let lhs = metric.eps_lower::<f64>(&[a, b]) * metric.eps_upper::<f64>(&[i, j]);
                            let rhs = -d(i, a) * d(j, b) + d(i, b) * d(j, a);
                            worst2 = worst2.max((lhs - rhs).abs());
                        }
                    }
                }
            }
            report.record("eps2_contract2", worst2);
        }
        _ => {
            return Err(PolarError::Config(format!(
                "epsilon identities are dimension-specific; dim {dim} not covered"
            )))
        }
    }
    Ok(report)
}
