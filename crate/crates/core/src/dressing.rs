//! Dressing construction of rotation coefficients.
//!
//! Solves `K_{ij}(s,s') = F_{ij}(s,s') + ∫_s^∞ Σ_l K_{il}(s,q)F_{lj}(q,s') dq`
//! by Nyström discretisation on composite Gauss–Legendre panels over
//! `[s, s + L]` and reads `β_{ij} = K_{ji}(s,s)`. Lamé coefficients come
//! from the same solve as `H_i = φ(s−u^i) + ∫ Σ_l K_{il}(s,q)φ(q−u^l) dq`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{Potential, Profile};
use crate::grid::{GridChart, TensorField, Variance};
use crate::lame::LameFrame;

/// Nodes and weights of the `p`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(p: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; p];
    let mut weights = vec![0.0; p];
    for k in 0..(p + 1) / 2 {
        // Chebyshev-like initial guess, refined by Newton on P_p.
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (p as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for n in 2..=p {
                let p2 = ((2 * n - 1) as f64 * x * p1 - (n - 1) as f64 * p0) / n as f64;
                p0 = p1;
                p1 = p2;
            }
            let value = if p == 0 { 1.0 } else { p1 };
            dp = p as f64 * (x * value - p0) / (x * x - 1.0);
            if p == 1 {
                dp = 1.0;
            }
            let dx = value / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[k] = -x;
        nodes[p - 1 - k] = x;
        weights[k] = w;
        weights[p - 1 - k] = w;
    }
    if p % 2 == 1 {
        nodes[p / 2] = 0.0;
    }
    (nodes, weights)
}

/// Composite rule with `panels` equal panels of `points` nodes on `[a, b]`.
pub fn composite_rule(a: f64, b: f64, panels: usize, points: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(points);
    let mut nodes = Vec::with_capacity(panels * points);
    let mut weights = Vec::with_capacity(panels * points);
    let width = (b - a) / panels as f64;
    for k in 0..panels {
        let lo = a + k as f64 * width;
        let half = 0.5 * width;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(lo + half * (xi + 1.0));
            weights.push(half * wi);
        }
    }
    (nodes, weights)
}

/// Truncation and quadrature parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    /// Truncation length `L` of `[s, s + L]`.
    pub length: f64,
    pub panels: usize,
    pub points: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            length: 8.0,
            panels: 16,
            points: 4,
        }
    }
}

impl Quadrature {
    pub fn nodes(&self) -> usize {
        self.panels * self.points
    }
}

/// Solver limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub cond_cap: f64,
    pub tail_limit: f64,
    pub check_tail: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            cond_cap: 1e12,
            tail_limit: 1e-10,
            check_tail: true,
        }
    }
}

/// Matrix kernel `F_{ij}(s, s')`.
pub trait Kernel {
    fn dim(&self) -> usize;
    fn eval(&self, i: usize, j: usize, s: f64, sp: f64) -> f64;
}

/// Kernel backed by a closure.
pub struct FnKernel<F: Fn(usize, usize, f64, f64) -> f64> {
    pub n: usize,
    pub f: F,
}

impl<F: Fn(usize, usize, f64, f64) -> f64> Kernel for FnKernel<F> {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval(&self, i: usize, j: usize, s: f64, sp: f64) -> f64 {
        (self.f)(i, j, s, sp)
    }
}

/// `Φ_{ij}` for `i < j` and skew `Φ_{ii}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSet {
    n: usize,
    /// Row-major upper triangle including the diagonal.
    entries: Vec<Potential>,
}

impl PotentialSet {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            entries: vec![Potential::Zero; n * (n + 1) / 2],
        }
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= j && j < self.n);
        i * self.n - i * (i + 1) / 2 + j
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Potential {
        &self.entries[self.slot(i, j)]
    }

    /// Set `Φ_{ij}` with `i ≤ j`. Diagonal entries must be skew-symmetric.
    pub fn set(&mut self, i: usize, j: usize, p: Potential) -> Result<()> {
        if i > j || j >= self.n {
            return Err(Error::InvalidArgument(format!(
                "potential index ({}, {}) must satisfy i <= j <= {}",
                i + 1,
                j + 1,
                self.n
            )));
        }
        if i == j {
            let probes = [(0.3, -0.7), (1.1, 0.4), (-0.2, 2.5), (0.05, 0.9)];
            if !p.is_skew(&probes) {
                return Err(Error::InvalidArgument(format!(
                    "diagonal potential Φ_{}{} is not skew-symmetric",
                    i + 1,
                    i + 1
                )));
            }
        }
        let slot = self.slot(i, j);
        self.entries[slot] = p;
        Ok(())
    }

    /// Largest coordinate beyond which every potential has decayed, over both
    /// arguments, or `None` if some potential does not decay.
    pub fn decay_edge(&self) -> Option<f64> {
        let mut edge = f64::NEG_INFINITY;
        for p in &self.entries {
            if matches!(p, Potential::Zero) {
                continue;
            }
            let e = p.envelope()?;
            edge = edge.max(e[1]).max(e[3]);
        }
        Some(if edge.is_finite() { edge } else { 0.0 })
    }

    /// Truncation length covering the decay envelope for every `u` in the chart.
    pub fn default_length(&self, chart: &GridChart, s: f64) -> Option<f64> {
        let edge = self.decay_edge()?;
        let umax = chart.upper().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Some((umax + edge - s).max(1.0))
    }
}

/// Kernel built from potentials at a fixed `u`, optionally with the
/// profile weighting `√|f^j(u^j−s')| / √|f^i(u^i−s)|`.
#[derive(Debug, Clone)]
pub struct PotentialKernel<'a> {
    pub set: &'a PotentialSet,
    pub u: Vec<f64>,
    pub profiles: Option<&'a [Profile]>,
}

impl PotentialKernel<'_> {
    fn weight(&self, axis: usize, t: f64) -> f64 {
        match self.profiles {
            None => 1.0,
            Some(p) => p[axis].value(self.u[axis] - t).abs().sqrt(),
        }
    }
}

impl Kernel for PotentialKernel<'_> {
    fn dim(&self) -> usize {
        self.set.n
    }

    fn eval(&self, i: usize, j: usize, s: f64, sp: f64) -> f64 {
        let u = &self.u;
        let base = if i < j {
            self.set.get(i, j).jet(s - u[i], sp - u[j]).dx
        } else if i > j {
            -self.set.get(j, i).jet(sp - u[j], s - u[i]).dy
        } else {
            self.set.get(i, i).jet(s - u[i], sp - u[i]).dx
        };
        if self.profiles.is_none() {
            return base;
        }
        self.weight(j, sp) / self.weight(i, s) * base
    }
}

/// Plain and profile-weighted kernels at `u`. Fails when a profile changes
/// sign on `u^i − [s, s + length]`.
pub fn build_kernel<'a>(
    set: &'a PotentialSet,
    u: &[f64],
    profiles: Option<&'a [Profile]>,
    s: f64,
    length: f64,
) -> Result<(PotentialKernel<'a>, Option<PotentialKernel<'a>>)> {
    if u.len() != set.n {
        return Err(Error::ShapeMismatch("u must have N coordinates".into()));
    }
    let plain = PotentialKernel {
        set,
        u: u.to_vec(),
        profiles: None,
    };
    let tilde = match profiles {
        None => None,
        Some(p) => {
            check_profile_range(p, &[u.to_vec()], s, length)?;
            Some(PotentialKernel {
                set,
                u: u.to_vec(),
                profiles: Some(p),
            })
        }
    };
    Ok((plain, tilde))
}

fn check_profile_range(profiles: &[Profile], us: &[Vec<f64>], s: f64, length: f64) -> Result<()> {
    for (axis, p) in profiles.iter().enumerate() {
        let lo = us.iter().map(|u| u[axis]).fold(f64::INFINITY, f64::min);
        let hi = us.iter().map(|u| u[axis]).fold(f64::NEG_INFINITY, f64::max);
        if p.sign_on(lo - s - length, hi - s).is_none() {
            return Err(Error::SignChangeOnRange { axis });
        }
    }
    Ok(())
}

/// Max of `|∂F_{ij}(s,s')/∂s' + ∂F_{ji}(s',s)/∂s|` at probe points `(s, s')`,
/// with fourth-order differences of step `1e-3`.
pub fn reduction_identity_residual(kernel: &dyn Kernel, probes: &[(f64, f64)]) -> f64 {
    let h = 1e-3;
    let d = |g: &dyn Fn(f64) -> f64, t: f64| {
        (g(t - 2.0 * h) - 8.0 * g(t - h) + 8.0 * g(t + h) - g(t + 2.0 * h)) / (12.0 * h)
    };
    let n = kernel.dim();
    let mut worst: f64 = 0.0;
    for &(s, sp) in probes {
        for i in 0..n {
            for j in 0..n {
                let a = d(&|t| kernel.eval(i, j, s, t), sp);
                let b = d(&|t| kernel.eval(j, i, sp, t), s);
                worst = worst.max((a + b).abs());
            }
        }
    }
    worst
}

/// `count` probe points drawn uniformly from `[xlo, xhi] × [ylo, yhi]`.
pub fn random_probes(seed: u64, count: usize, region: [f64; 4]) -> Vec<(f64, f64)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (
                rng.gen_range(region[0]..=region[1]),
                rng.gen_range(region[2]..=region[3]),
            )
        })
        .collect()
}

/// Left sides of the second-order reduction equations at probe points
/// `(x, y)`: for `i ≤ j`,
/// `2Φ_xy(f^i(−x) − f^j(−y)) − f^i′(−x)Φ_y + f^j′(−y)Φ_x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionPdeReport {
    /// `((i, j), residual)` for `i < j`.
    pub offdiag: Vec<((usize, usize), f64)>,
    /// `(i, residual)` for the skew diagonal potentials.
    pub diag: Vec<(usize, f64)>,
    pub max: f64,
}

pub fn reduction_pde_residual(
    set: &PotentialSet,
    profiles: &[Profile],
    probes: &[(f64, f64)],
) -> Result<ReductionPdeReport> {
    let n = set.n;
    if profiles.len() != n {
        return Err(Error::ShapeMismatch("one profile per axis required".into()));
    }
    let eval = |i: usize, j: usize| {
        let p = set.get(i, j);
        probes.iter().fold(0.0f64, |m, &(x, y)| {
            let jet = p.jet(x, y);
            let (fi, dfi) = (profiles[i].value(-x), profiles[i].derivative(-x));
            let (fj, dfj) = (profiles[j].value(-y), profiles[j].derivative(-y));
            let r = 2.0 * jet.dxy * (fi - fj) - dfi * jet.dy + dfj * jet.dx;
            m.max(r.abs())
        })
    };
    let mut offdiag = Vec::new();
    let mut diag = Vec::new();
    for i in 0..n {
        diag.push((i, eval(i, i)));
        for j in (i + 1)..n {
            offdiag.push(((i, j), eval(i, j)));
        }
    }
    let max = offdiag
        .iter()
        .map(|x| x.1)
        .chain(diag.iter().map(|x| x.1))
        .fold(0.0, f64::max);
    Ok(ReductionPdeReport { offdiag, diag, max })
}

/// Discrete solution at one dressing parameter `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct DressingSolution {
    pub s: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Row `i`, column `l*Q + m`: `K_{il}(s, q_m)`.
    pub k_nodes: DMatrix<f64>,
    /// `K_{ij}(s, s)`.
    pub k_diag: DMatrix<f64>,
    /// Estimated 1-norm condition number of the collocation matrix.
    pub cond: f64,
    /// Max residual of the discrete equations relative to the kernel scale.
    pub residual: f64,
}

impl DressingSolution {
    /// `β_{ij} = K_{ji}(s, s)`.
    pub fn beta(&self) -> DMatrix<f64> {
        self.k_diag.transpose()
    }

    /// `K_{ij}(s, s')` by Nyström interpolation.
    pub fn k_at(&self, kernel: &dyn Kernel, i: usize, j: usize, sp: f64) -> f64 {
        let n = kernel.dim();
        let q = self.nodes.len();
        let mut v = kernel.eval(i, j, self.s, sp);
        for l in 0..n {
            for m in 0..q {
                v += self.weights[m] * self.k_nodes[(i, l * q + m)] * kernel.eval(l, j, self.nodes[m], sp);
            }
        }
        v
    }

    /// `χ_i = φ(s − u^i) + ∫ Σ_l K_{il}(s,q) φ(q − u^l) dq`.
    pub fn chi(&self, u: &[f64], phi: &Profile) -> Vec<f64> {
        let n = u.len();
        let q = self.nodes.len();
        (0..n)
            .map(|i| {
                let mut v = phi.value(self.s - u[i]);
                for l in 0..n {
                    for m in 0..q {
                        v += self.weights[m] * self.k_nodes[(i, l * q + m)] * phi.value(self.nodes[m] - u[l]);
                    }
                }
                v
            })
            .collect()
    }
}

/// Nyström solve at dressing parameter `s`.
pub fn solve(kernel: &dyn Kernel, s: f64, quad: &Quadrature, opts: &SolverOptions) -> Result<DressingSolution> {
    let n = kernel.dim();
    if quad.panels == 0 || quad.points == 0 || !(quad.length > 0.0) {
        return Err(Error::InvalidArgument(
            "quadrature needs positive length, panels and points".into(),
        ));
    }
    let (nodes, weights) = composite_rule(s, s + quad.length, quad.panels, quad.points);
    let q = nodes.len();
    let size = n * q;

    if opts.check_tail {
        let tail = tail_mass(kernel, s, &nodes, quad.length);
        if tail > opts.tail_limit {
            return Err(Error::TruncationInsufficient {
                tail,
                limit: opts.tail_limit,
            });
        }
    }

    // Unknown row i: x[(l, m)] = K_{il}(s, q_m). The equations in (j, n) read
    // x[(j,n)] − Σ_{l,m} w_m F_{lj}(q_m, q_n) x[(l,m)] = F_{ij}(s, q_n),
    // i.e. Aᵀx = b with A[(l,m),(j,n)] = δ − w_m F_{lj}(q_m, q_n).
    let mut at = DMatrix::<f64>::zeros(size, size);
    for l in 0..n {
        for m in 0..q {
            let row_a = l * q + m;
            for j in 0..n {
                for nn in 0..q {
                    let col_a = j * q + nn;
                    let mut v = -weights[m] * kernel.eval(l, j, nodes[m], nodes[nn]);
                    if row_a == col_a {
                        v += 1.0;
                    }
                    at[(col_a, row_a)] = v;
                }
            }
        }
    }
    let mut rhs = DMatrix::<f64>::zeros(size, n);
    for i in 0..n {
        for j in 0..n {
            for nn in 0..q {
                rhs[(j * q + nn, i)] = kernel.eval(i, j, s, nodes[nn]);
            }
        }
    }
    let norm1 = (0..size)
        .map(|c| at.column(c).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let lu = at.clone().lu();
    if !lu.is_invertible() {
        return Err(Error::SingularSystem);
    }
    let cond = norm1 * inverse_norm1_estimate(&lu, size);
    if !cond.is_finite() || cond > opts.cond_cap {
        return Err(Error::IllConditioned(cond));
    }
    let x = lu.solve(&rhs).ok_or(Error::SingularSystem)?;
    let scale = 1.0 + rhs.amax();
    let residual = (&at * &x - &rhs).amax() / scale;
    let k_nodes = x.transpose();

    let mut sol = DressingSolution {
        s,
        nodes,
        weights,
        k_nodes,
        k_diag: DMatrix::zeros(n, n),
        cond,
        residual,
    };
    let mut k_diag = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            k_diag[(i, j)] = sol.k_at(kernel, i, j, s);
        }
    }
    sol.k_diag = k_diag;
    Ok(sol)
}

/// Max over `(l, j)` and `s' ∈ {s} ∪ nodes` of `∫_{s+L}^{s+2L} |F_{lj}(q, s')| dq`
/// and of `∫_{s+L}^{s+2L} |F_{lj}(s', q)| dq`.
fn tail_mass(kernel: &dyn Kernel, s: f64, nodes: &[f64], length: f64) -> f64 {
    let (tq, tw) = composite_rule(s + length, s + 2.0 * length, 4, 8);
    let n = kernel.dim();
    let mut worst: f64 = 0.0;
    for &sp in std::iter::once(&s).chain(nodes.iter()) {
        for l in 0..n {
            for j in 0..n {
                let a: f64 = tq
                    .iter()
                    .zip(&tw)
                    .map(|(&t, &w)| w * kernel.eval(l, j, t, sp).abs())
                    .sum();
                let b: f64 = tq
                    .iter()
                    .zip(&tw)
                    .map(|(&t, &w)| w * kernel.eval(l, j, sp, t).abs())
                    .sum();
                worst = worst.max(a).max(b);
            }
        }
    }
    worst
}

/// Hager–Higham estimate of `‖M⁻¹‖₁` from an LU factorisation of `M`.
fn inverse_norm1_estimate(lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, size: usize) -> f64 {
    // P M = L U, so Mᵀ = Uᵀ Lᵀ P and Mᵀ y = b is solved by two triangular
    // transposed solves followed by the inverse permutation.
    let l = lu.l();
    let u = lu.u();
    let p = lu.p();
    let solve_t = |b: &DVector<f64>| -> Option<DVector<f64>> {
        let z = u.tr_solve_upper_triangular(b)?;
        let mut w = l.tr_solve_lower_triangular(&z)?;
        p.inv_permute_rows(&mut w);
        Some(w)
    };
    let mut x = DVector::from_element(size, 1.0 / size as f64);
    let mut estimate = 0.0;
    for _ in 0..5 {
        let y = match lu.solve(&x) {
            Some(y) => y,
            None => return f64::INFINITY,
        };
        estimate = y.iter().map(|v| v.abs()).sum::<f64>();
        let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
        let z = match solve_t(&xi) {
            Some(z) => z,
            None => return f64::INFINITY,
        };
        let (jmax, zmax) = z.iter().enumerate().fold(
            (0, 0.0f64),
            |acc, (k, v)| if v.abs() > acc.1 { (k, v.abs()) } else { acc },
        );
        if zmax <= z.dot(&x) {
            break;
        }
        x = DVector::zeros(size);
        x[jmax] = 1.0;
    }
    estimate
}

/// A frame generated over a chart by solving at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct DressedFrame {
    pub frame: LameFrame,
    pub cond_max: f64,
    pub residual_max: f64,
}

/// Default envelope `φ(t) = 1/(1 + exp(t − 4))` for the Lamé coefficients.
pub fn default_phi() -> Profile {
    Profile::from_expr("1/(1 + exp(t - 4))").expect("valid expression")
}

/// Solve at every node of `chart` and assemble `H`, `β` into a frame with
/// signs `eps`.
pub fn dress_frame(
    set: &PotentialSet,
    chart: &GridChart,
    s: f64,
    quad: &Quadrature,
    opts: &SolverOptions,
    phi: &Profile,
    eps: &[f64],
) -> Result<DressedFrame> {
    let n = set.n;
    if chart.dim() != n {
        return Err(Error::ShapeMismatch(
            "chart dimension must equal the number of potentials' indices".into(),
        ));
    }
    let mut h = TensorField::with_components(chart, n);
    let mut beta = TensorField::zeros(chart, &[Variance::Lower, Variance::Lower]);
    let mut cond_max: f64 = 0.0;
    let mut residual_max: f64 = 0.0;
    let mut u = vec![0.0; n];
    for node in 0..chart.len() {
        chart.fill_coords(node, &mut u);
        let kernel = PotentialKernel {
            set,
            u: u.clone(),
            profiles: None,
        };
        let sol = solve(&kernel, s, quad, opts)?;
        cond_max = cond_max.max(sol.cond);
        residual_max = residual_max.max(sol.residual);
        let b = sol.beta();
        let chi = sol.chi(&u, phi);
        for i in 0..n {
            h.set(node, i, chi[i]);
            for k in 0..n {
                if i != k {
                    beta.set(node, i * n + k, b[(i, k)]);
                }
            }
        }
    }
    let frame = LameFrame::from_parts(h, beta, eps.to_vec())?;
    Ok(DressedFrame {
        frame,
        cond_max,
        residual_max,
    })
}

/// Comparison of the weighted solve against the rescaled plain solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TildeReport {
    /// Max `|K̃_{ij}(s,q) − d_j(q)/d_i(s) K_{ij}(s,q)|` over nodes and `s' = s`.
    pub kernel_defect: f64,
    /// Max `|β̃_{ij} − d_i(s)/d_j(s) β_{ij}|`.
    pub beta_defect: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Solve the plain and weighted problems independently at `u` and compare.
pub fn verify_tilde_consistency(
    set: &PotentialSet,
    profiles: &[Profile],
    u: &[f64],
    s: f64,
    quad: &Quadrature,
    opts: &SolverOptions,
    tol: f64,
) -> Result<TildeReport> {
    let (plain, tilde) = build_kernel(set, u, Some(profiles), s, quad.length)?;
    let tilde = tilde.expect("profiles supplied");
    let a = solve(&plain, s, quad, opts)?;
    let b = solve(&tilde, s, quad, opts)?;
    let n = set.n;
    let q = a.nodes.len();
    let d = |axis: usize, t: f64| profiles[axis].value(u[axis] - t).abs().sqrt();
    let mut kernel_defect: f64 = 0.0;
    for i in 0..n {
        for l in 0..n {
            for m in 0..q {
                let scaled = d(l, a.nodes[m]) / d(i, s) * a.k_nodes[(i, l * q + m)];
                kernel_defect = kernel_defect.max((b.k_nodes[(i, l * q + m)] - scaled).abs());
            }
            let scaled = d(l, s) / d(i, s) * a.k_diag[(i, l)];
            kernel_defect = kernel_defect.max((b.k_diag[(i, l)] - scaled).abs());
        }
    }
    let (ba, bb) = (a.beta(), b.beta());
    let mut beta_defect: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let scaled = d(i, s) / d(j, s) * ba[(i, j)];
            beta_defect = beta_defect.max((bb[(i, j)] - scaled).abs());
        }
    }
    Ok(TildeReport {
        kernel_defect,
        beta_defect,
        tolerance: tol,
        passed: kernel_defect <= tol && beta_defect <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for p in 1..=12 {
            let (x, w) = gauss_legendre(p);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for deg in 0..(2 * p) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let approx: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                assert!((approx - exact).abs() < 1e-13, "p={p} deg={deg}");
            }
        }
    }

    #[test]
    fn composite_rule_integrates_exponential() {
        let (x, w) = composite_rule(0.0, 2.0, 8, 4);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.exp()).sum();
        assert!((v - (2f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn condition_estimate_matches_exact_norm() {
        let m = DMatrix::<f64>::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 2.0, 5.0, 1.0, 0.3, 0.2, 3.0]);
        let exact = {
            let inv = m.clone().try_inverse().unwrap();
            (0..3)
                .map(|c| inv.column(c).iter().map(|v: &f64| v.abs()).sum::<f64>())
                .fold(0.0, f64::max)
        };
        let est = inverse_norm1_estimate(&m.lu(), 3);
        assert!(est <= exact * (1.0 + 1e-12) && est >= 0.3 * exact, "{est} vs {exact}");
    }

    #[test]
    fn zero_kernel_gives_zero() {
        let set = PotentialSet::zero(3);
        let (k, _) = build_kernel(&set, &[0.1, 0.2, 0.3], None, 0.0, 8.0).unwrap();
        let sol = solve(&k, 0.0, &Quadrature::default(), &SolverOptions::default()).unwrap();
        assert!(sol.beta().iter().all(|&v| v == 0.0));
        assert!(sol.k_nodes.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gaussian_example_kernel() {
        let mut set = PotentialSet::zero(2);
        set.set(
            0,
            1,
            Potential::Gaussian {
                amp: 1.0,
                cx: 0.0,
                cy: 0.0,
                sx: 1.0,
                sy: 1.0,
            },
        )
        .unwrap();
        let u = [0.2, -0.1];
        let (k, _) = build_kernel(&set, &u, None, 0.0, 8.0).unwrap();
        let (s, sp) = (0.7, 0.4);
        let e = (-(s - u[0]).powi(2) - (sp - u[1]).powi(2)).exp();
        assert!((k.eval(0, 1, s, sp) + 2.0 * (s - u[0]) * e).abs() < 1e-15);
        let probes = [(0.1, 0.3), (0.5, -0.2), (1.0, 1.4)];
        assert!(reduction_identity_residual(&k, &probes) < 1e-8);
    }

    #[test]
    fn non_skew_diagonal_is_rejected() {
        let mut set = PotentialSet::zero(2);
        assert!(set.set(0, 0, Potential::Log { c: 1.0 }).is_err());
        assert!(set.set(0, 0, Potential::SkewLog { c: 1.0 }).is_ok());
        assert!(set.set(1, 0, Potential::Zero).is_err());
    }
}
