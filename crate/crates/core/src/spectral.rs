//! Finite matrices: Schur triangularisation, singular values, the
//! normal-plus-nilpotent split, Weyl majorisation and cutoff trace estimators.

use std::fmt::Write as _;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::heat_kernel_normalisation;
use crate::logscale::LogValue;
use crate::series::{Grid, WindowSeries};
use crate::weights::WeightFunction;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 10_000;
const JACOBI_MAX_SWEEPS: usize = 80;

/// Square complex matrix. Diagonal matrices keep only their diagonal, so
/// spectra of large diagonal models can be formed without dense storage.
#[derive(Clone, Debug, PartialEq)]
pub enum MatrixSpec {
    Dense(CMatrix),
    Diagonal(Vec<C64>),
}

impl MatrixSpec {
    pub fn dense(m: CMatrix) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(Error::invalid(
                "MatrixSpec",
                format!("need a nonempty square matrix, got {}x{}", m.nrows(), m.ncols()),
            ));
        }
        if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::invalid("MatrixSpec", "entries must be finite"));
        }
        Ok(MatrixSpec::Dense(m))
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("MatrixSpec", "rows must all have length n"));
        }
        MatrixSpec::dense(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        MatrixSpec::from_rows(&rows)
    }

    pub fn diagonal(d: Vec<C64>) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::invalid("MatrixSpec", "empty diagonal"));
        }
        if d.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::invalid("MatrixSpec", "entries must be finite"));
        }
        Ok(MatrixSpec::Diagonal(d))
    }

    pub fn real_diagonal(d: &[f64]) -> Result<Self> {
        MatrixSpec::diagonal(d.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// `n x n` Jordan block with eigenvalue `lambda`.
    pub fn jordan_block(n: usize, lambda: C64) -> Result<Self> {
        MatrixSpec::dense(CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                lambda
            } else if j == i + 1 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    /// Entries i.i.d. complex standard normal: real and imaginary parts are
    /// independent `N(0, 1/2)`.
    pub fn random_gaussian<R: rand::Rng>(n: usize, rng: &mut R) -> Result<Self> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        MatrixSpec::dense(CMatrix::from_fn(n, n, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(s * re, s * im)
        }))
    }

    /// `count` Gaussian matrices from one seeded stream.
    pub fn random_batch(count: usize, n: usize, seed: u64) -> Result<Vec<Self>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| MatrixSpec::random_gaussian(n, &mut rng)).collect()
    }

    pub fn dim(&self) -> usize {
        match self {
            MatrixSpec::Dense(m) => m.nrows(),
            MatrixSpec::Diagonal(d) => d.len(),
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        match self {
            MatrixSpec::Dense(m) => m.clone(),
            MatrixSpec::Diagonal(d) => CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)),
        }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        match self {
            MatrixSpec::Dense(m) => max_abs(m),
            MatrixSpec::Diagonal(d) => d.iter().map(|z| z.norm()).fold(0.0, f64::max),
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        match self {
            MatrixSpec::Dense(m) => max_abs(&(m - m.adjoint())) <= tol,
            MatrixSpec::Diagonal(d) => d.iter().all(|z| z.im.abs() <= tol),
        }
    }

    /// First line `n`, then `n` rows of `n` entries `a+bi`.
    pub fn to_text(&self) -> String {
        let m = self.to_dense();
        let n = m.nrows();
        let mut out = format!("{n}\n");
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| format_complex(m[(i, j)])).collect();
            writeln!(out, "{}", row.join(" ")).unwrap();
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (first, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            reason: "empty matrix file".into(),
        })?;
        let n: usize = header.parse().map_err(|_| Error::Parse {
            line: first,
            reason: format!("expected the dimension, got `{header}`"),
        })?;
        if n == 0 {
            return Err(Error::Parse {
                line: first,
                reason: "dimension must be positive".into(),
            });
        }
        let mut rows = Vec::with_capacity(n);
        for (line, l) in lines {
            let row = l
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<C64>().map_err(|_| Error::Parse {
                        line,
                        reason: format!("bad complex entry `{tok}`"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != n {
                return Err(Error::Parse {
                    line,
                    reason: format!("expected {n} entries, got {}", row.len()),
                });
            }
            rows.push(row);
        }
        if rows.len() != n {
            return Err(Error::Parse {
                line: 0,
                reason: format!("expected {n} rows, got {}", rows.len()),
            });
        }
        MatrixSpec::from_rows(&rows)
    }
}

fn format_complex(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:?}{sign}{:?}i", z.re, z.im.abs())
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

fn is_upper_triangular(m: &CMatrix) -> bool {
    (0..m.nrows()).all(|i| (0..i).all(|j| m[(i, j)] == C64::new(0.0, 0.0)))
}

/// `T = U R U*` with `U` unitary and `R` upper triangular.
#[derive(Clone, Debug)]
pub struct Triangularization {
    pub unitary: CMatrix,
    pub upper: CMatrix,
    /// `max |U* U - I|`
    pub unitary_residual: f64,
}

impl Triangularization {
    pub fn eigenvalues(&self) -> Vec<C64> {
        self.upper.diagonal().iter().copied().collect()
    }

    /// `max |U R U* - T|`
    pub fn reconstruction_residual(&self, t: &MatrixSpec) -> f64 {
        max_abs(&(&self.unitary * &self.upper * self.unitary.adjoint() - t.to_dense()))
    }
}

pub fn triangularize(t: &MatrixSpec) -> Result<Triangularization> {
    let m = t.to_dense();
    let n = m.nrows();
    if is_upper_triangular(&m) {
        return Ok(Triangularization {
            unitary: identity(n),
            upper: m,
            unitary_residual: 0.0,
        });
    }
    let scale = max_abs(&m);
    let schur =
        Schur::try_new(m, SCHUR_EPS * scale.max(f64::MIN_POSITIVE), SCHUR_MAX_ITER).ok_or(Error::NonConvergence {
            op: "triangularize",
            residual: scale,
        })?;
    let (q, mut r) = schur.unpack();
    let mut below = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            below = below.max(r[(i, j)].norm());
            r[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    if below > 1e-10 * scale.max(1.0) {
        return Err(Error::NonConvergence {
            op: "triangularize",
            residual: below,
        });
    }
    let unitary_residual = max_abs(&(q.adjoint() * &q - identity(n)));
    Ok(Triangularization {
        unitary: q,
        upper: r,
        unitary_residual,
    })
}

/// Nonincreasing singular values by one-sided Jacobi rotations.
pub fn singular_values(t: &MatrixSpec) -> Result<Vec<f64>> {
    if let MatrixSpec::Diagonal(d) = t {
        let mut s: Vec<f64> = d.iter().map(|z| z.norm()).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        return Ok(s);
    }
    let mut a = t.to_dense();
    let n = a.ncols();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (cp, cq) = (a.column(p), a.column(q));
                let alpha = cp.norm_squared();
                let beta = cq.norm_squared();
                let gamma = cp.dotc(&cq);
                let g = gamma.norm();
                if g <= f64::EPSILON * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let tan = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + tan * tan).sqrt();
                let s = c * tan;
                for i in 0..a.nrows() {
                    let ap = a[(i, p)];
                    let aq = a[(i, q)] * phase.conj();
                    a[(i, p)] = ap * c - aq * s;
                    a[(i, q)] = ap * s + aq * c;
                }
            }
        }
        if !rotated {
            let mut s: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
            s.sort_by(|a, b| b.total_cmp(a));
            return Ok(s);
        }
    }
    Err(Error::NonConvergence {
        op: "singular_values",
        residual: f64::NAN,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumData {
    /// Schur order, with algebraic multiplicity.
    pub eigenvalues: Vec<C64>,
    pub singular_values: Vec<f64>,
    pub unitary_residual: f64,
}

pub fn spectrum(t: &MatrixSpec) -> Result<SpectrumData> {
    let (eigenvalues, unitary_residual) = match t {
        MatrixSpec::Diagonal(d) => (d.clone(), 0.0),
        MatrixSpec::Dense(_) => {
            let tri = triangularize(t)?;
            (tri.eigenvalues(), tri.unitary_residual)
        }
    };
    Ok(SpectrumData {
        eigenvalues,
        singular_values: singular_values(t)?,
        unitary_residual,
    })
}

/// `T = S + Q` with `S` normal and `Q` nilpotent, both read off one Schur form.
#[derive(Clone, Debug)]
pub struct RingroseSplit {
    pub normal: CMatrix,
    pub nilpotent: CMatrix,
    pub basis: CMatrix,
    /// Diagonal of the triangular form, the common spectrum of `S` and `T`.
    pub diagonal: Vec<C64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RingroseCheck {
    /// `max |S + Q - T|`
    pub sum_residual: f64,
    /// `max |Q^n|`
    pub nilpotency_residual: f64,
    /// Largest distance between a recomputed eigenvalue of `S` and its partner on the diagonal.
    pub spectrum_mismatch: f64,
    pub holds: bool,
}

pub fn ringrose_split(t: &MatrixSpec) -> Result<RingroseSplit> {
    let tri = triangularize(t)?;
    let n = t.dim();
    let u = &tri.unitary;
    let diag = CMatrix::from_fn(n, n, |i, j| if i == j { tri.upper[(i, i)] } else { C64::new(0.0, 0.0) });
    let strict = &tri.upper - &diag;
    Ok(RingroseSplit {
        normal: u * diag * u.adjoint(),
        nilpotent: u * strict * u.adjoint(),
        basis: tri.unitary.clone(),
        diagonal: tri.eigenvalues(),
    })
}

/// Greedy matching distance between two multisets of equal size.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("equal lengths");
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

impl RingroseSplit {
    pub fn check(&self, t: &MatrixSpec) -> Result<RingroseCheck> {
        let n = t.dim();
        let scale = t.max_abs().max(f64::MIN_POSITIVE);
        let sum_residual = max_abs(&(&self.normal + &self.nilpotent - t.to_dense()));
        let mut power = self.nilpotent.clone();
        for _ in 1..n {
            power = &power * &self.nilpotent;
        }
        let nilpotency_residual = max_abs(&power);
        let s_spec = triangularize(&MatrixSpec::dense(self.normal.clone())?)?;
        let spectrum_mismatch = multiset_distance(&s_spec.eigenvalues(), &self.diagonal);
        let holds = sum_residual <= 1e-10 * scale
            && nilpotency_residual <= 1e-8 * scale.powi(n as i32).max(f64::MIN_POSITIVE)
            && spectrum_mismatch <= 1e-10 * scale;
        Ok(RingroseCheck {
            sum_residual,
            nilpotency_residual,
            spectrum_mismatch,
            holds,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeylReport {
    pub holds: bool,
    /// `max_m (sum_{k<=m} |lambda|_k - sum_{k<=m} s_k)`, may be negative.
    pub max_slack_violation: f64,
}

pub const WEYL_SLACK: f64 = 1e-9;

pub fn weyl_check(spec: &SpectrumData) -> WeylReport {
    let mut moduli: Vec<f64> = spec.eigenvalues.iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    let (mut lhs, mut rhs) = (0.0, 0.0);
    let mut worst = f64::NEG_INFINITY;
    for (l, s) in moduli.iter().zip(&spec.singular_values) {
        lhs += l;
        rhs += s;
        worst = worst.max(lhs - rhs);
    }
    WeylReport {
        holds: worst <= WEYL_SLACK,
        max_slack_violation: worst,
    }
}

/// Sum of the eigenvalues with `|lambda| > cutoff`.
pub fn eigen_cutoff_sum(spec: &SpectrumData, cutoff: f64) -> Result<C64> {
    if !(cutoff >= 0.0) {
        return Err(Error::invalid(
            "eigen_cutoff_sum",
            format!("cutoff must be >= 0, got {cutoff}"),
        ));
    }
    Ok(spec.eigenvalues.iter().filter(|z| z.norm() > cutoff).sum())
}

/// Eigenvalues sorted by modulus, with prefix sums, for many cutoffs at once.
struct CutoffTable {
    moduli: Vec<f64>,
    prefix: Vec<C64>,
}

impl CutoffTable {
    fn new(eigenvalues: &[C64]) -> Self {
        let mut ev = eigenvalues.to_vec();
        ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
        let mut prefix = Vec::with_capacity(ev.len() + 1);
        prefix.push(C64::new(0.0, 0.0));
        for z in &ev {
            prefix.push(prefix.last().unwrap() + z);
        }
        CutoffTable {
            moduli: ev.iter().map(|z| z.norm()).collect(),
            prefix,
        }
    }

    fn count_above(&self, cutoff: f64) -> usize {
        self.moduli.partition_point(|&m| m > cutoff)
    }

    fn sum_above(&self, cutoff: f64) -> C64 {
        self.prefix[self.count_above(cutoff)]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceComparison {
    pub n: Vec<u64>,
    /// `(1/psi(n)) sum_{k<=n} s_k`, only for positive semidefinite `T`.
    pub a: Option<Vec<f64>>,
    /// Adjusted cutoff `psi(n)/n` on `sigma(T)`.
    pub b: Vec<C64>,
    /// Fixed cutoff `1/n` on `sigma(T)`.
    pub c: Vec<C64>,
    /// Adjusted cutoff on the spectrum of the normal part `S`.
    pub d: Vec<C64>,
    pub gap_ab: Option<Vec<f64>>,
    pub gap_bd: Vec<f64>,
    /// `2 (psi(n)/n) #{k : |lambda_k(S)| > psi(n)/n}`
    pub near_axis_bound: Vec<f64>,
}

impl TraceComparison {
    /// Real and imaginary parts as series in `u = ln n`.
    pub fn to_series(&self) -> Result<Vec<WindowSeries>> {
        let u: Vec<f64> = self.n.iter().map(|&n| (n as f64).ln()).collect();
        let mut out = Vec::new();
        if let Some(a) = &self.a {
            out.push(WindowSeries::new("a: singular partial sums", u.clone(), a.clone())?);
        }
        for (name, z) in [
            ("b: adjusted cutoff", &self.b),
            ("c: fixed cutoff", &self.c),
            ("d: adjusted cutoff on S", &self.d),
        ] {
            out.push(WindowSeries::new(
                format!("{name} (re)"),
                u.clone(),
                z.iter().map(|z| z.re).collect(),
            )?);
            out.push(WindowSeries::new(
                format!("{name} (im)"),
                u.clone(),
                z.iter().map(|z| z.im).collect(),
            )?);
        }
        if let Some(g) = &self.gap_ab {
            out.push(WindowSeries::new("|b - a|", u.clone(), g.clone())?);
        }
        out.push(WindowSeries::new("|b - d|", u.clone(), self.gap_bd.clone())?);
        out.push(WindowSeries::new("near-axis bound", u, self.near_axis_bound.clone())?);
        Ok(out)
    }
}

/// Lowest eigenvalue accepted as zero: `-1e-10 ||T||_max`.
fn psd_floor(t: &MatrixSpec) -> f64 {
    -1e-10 * t.max_abs()
}

/// Eigenvalues of a Hermitian `T`; `None` if `T` is not Hermitian.
fn hermitian_eigenvalues(t: &MatrixSpec) -> Option<Vec<f64>> {
    let tol = 1e-12 * t.max_abs().max(f64::MIN_POSITIVE);
    if !t.is_hermitian(tol) {
        return None;
    }
    Some(match t {
        MatrixSpec::Diagonal(d) => d.iter().map(|z| z.re).collect(),
        MatrixSpec::Dense(m) => m.clone().symmetric_eigen().eigenvalues.iter().copied().collect(),
    })
}

pub fn is_positive_semidefinite(t: &MatrixSpec) -> bool {
    let floor = psd_floor(t);
    hermitian_eigenvalues(t).is_some_and(|ev| ev.iter().all(|&l| l >= floor))
}

pub fn trace_estimate_compare(t: &MatrixSpec, psi: &WeightFunction, n_lo: u64, n_hi: u64) -> Result<TraceComparison> {
    let dim = t.dim() as u64;
    if !(1 <= n_lo && n_lo <= n_hi && n_hi <= dim) {
        return Err(Error::invalid(
            "trace_estimate_compare",
            format!("n-grid {n_lo}:{n_hi} must satisfy 1 <= a <= b <= {dim}"),
        ));
    }
    let spec = spectrum(t)?;
    let s_eigs = match t {
        MatrixSpec::Diagonal(d) => d.clone(),
        MatrixSpec::Dense(_) => {
            let split = ringrose_split(t)?;
            triangularize(&MatrixSpec::dense(split.normal)?)?.eigenvalues()
        }
    };
    let t_table = CutoffTable::new(&spec.eigenvalues);
    let s_table = CutoffTable::new(&s_eigs);
    let positive = is_positive_semidefinite(t);
    let mut s_prefix = vec![0.0];
    for s in &spec.singular_values {
        s_prefix.push(s_prefix.last().unwrap() + s);
    }

    let ns: Vec<u64> = (n_lo..=n_hi).collect();
    let mut cmp = TraceComparison {
        n: ns.clone(),
        a: positive.then(Vec::new),
        b: Vec::with_capacity(ns.len()),
        c: Vec::with_capacity(ns.len()),
        d: Vec::with_capacity(ns.len()),
        gap_ab: positive.then(Vec::new),
        gap_bd: Vec::with_capacity(ns.len()),
        near_axis_bound: Vec::with_capacity(ns.len()),
    };
    for &n in &ns {
        let nn = LogValue::from_real(n as f64);
        let psi_n = psi.value(nn).to_f64();
        let adjusted = psi.value(nn).div(nn).to_f64();
        let fixed = 1.0 / n as f64;
        let b = t_table.sum_above(adjusted) / psi_n;
        let d = s_table.sum_above(adjusted) / psi_n;
        cmp.b.push(b);
        cmp.c.push(t_table.sum_above(fixed) / psi_n);
        cmp.d.push(d);
        cmp.gap_bd.push((b - d).norm());
        cmp.near_axis_bound
            .push(2.0 * adjusted * s_table.count_above(adjusted) as f64);
        if let (Some(a), Some(gap)) = (cmp.a.as_mut(), cmp.gap_ab.as_mut()) {
            let av = s_prefix[n as usize] / psi_n;
            a.push(av);
            gap.push((b - av).norm());
        }
    }
    Ok(cmp)
}

/// `(alpha/Gamma(1/alpha)) (1/t) sum_lambda exp(-(t lambda)^-alpha)` on `t = e^u`.
pub fn heat_kernel_matrix(t: &MatrixSpec, alpha: f64, grid: &Grid) -> Result<WindowSeries> {
    let norm = heat_kernel_normalisation(alpha)?;
    let ev = hermitian_eigenvalues(t).ok_or_else(|| Error::invalid("heat_kernel_matrix", "matrix is not Hermitian"))?;
    let floor = psd_floor(t);
    if let Some(bad) = ev.iter().find(|&&l| l < floor) {
        return Err(Error::invalid(
            "heat_kernel_matrix",
            format!("eigenvalue {bad:e} is below the positivity floor {floor:e}"),
        ));
    }
    let ln_ev: Vec<f64> = ev.iter().filter(|&&l| l > 0.0).map(|l| l.ln()).collect();
    WindowSeries::from_fn(format!("heat_kernel_matrix alpha={alpha}"), grid, |u| {
        let sum: f64 = ln_ev.iter().map(|&l| (-(-alpha * (u + l)).exp()).exp()).sum();
        Ok(norm * sum * (-u).exp())
    })
}
