//! Semidefinite relaxation of unit-modulus quadratic maximisation.
//!
//! Maximising `‖Bϑ + c‖²` over unit-modulus `ϑ` is lifted to
//! `max ϑ̃ᴴ B̃ ϑ̃` with `ϑ̃ = [ϑ; 1]`, relaxed to
//! `max tr(B̃X)  s.t.  diag(X) = 1, X ⪰ 0`, solved by a primal-dual
//! interior-point method (HKM direction), and rounded back by Gaussian
//! randomisation.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;

use crate::channel::{complex_normal, C64};
use crate::error::{Error, Result};

/// `B̃ = [[BᴴB, Bᴴc], [cᴴB, 0]]` for `B` of shape `M x N` and `c` of length `M`.
pub fn lift(b: &DMatrix<C64>, c: &[C64]) -> Result<DMatrix<C64>> {
    if c.len() != b.nrows() {
        return Err(Error::Dimension(format!(
            "B has {} rows but c has {} entries",
            b.nrows(),
            c.len()
        )));
    }
    let n = b.ncols();
    let c = DVector::from_column_slice(c);
    let gram = b.adjoint() * b;
    let cross = b.adjoint() * &c;
    let mut out = DMatrix::zeros(n + 1, n + 1);
    out.view_mut((0, 0), (n, n)).copy_from(&gram);
    for i in 0..n {
        out[(i, n)] = cross[i];
        out[(n, i)] = cross[i].conj();
    }
    Ok(out)
}

/// `Re(xᴴ A x)`.
pub fn quadratic_form(a: &DMatrix<C64>, x: &[C64]) -> f64 {
    let n = x.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..n {
            row += a[(i, j)] * x[j];
        }
        acc += (x[i].conj() * row).re;
    }
    acc
}

/// Quadratic form at `[ϑ; 1]`.
pub fn lifted_objective(b_lift: &DMatrix<C64>, theta: &[C64]) -> f64 {
    let mut ext = theta.to_vec();
    ext.push(Complex64::new(1.0, 0.0));
    quadratic_form(b_lift, &ext)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    /// Stop once the relative duality gap falls below this.
    pub tolerance: f64,
    /// Gap still accepted when the iteration budget runs out.
    pub acceptable_gap: f64,
    pub max_iterations: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            acceptable_gap: 1e-7,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    /// Primal optimiser with unit diagonal.
    pub x: DMatrix<C64>,
    /// `tr(B̃X)` at the returned iterate.
    pub primal: f64,
    /// Certified upper bound on the relaxation optimum.
    pub dual_bound: f64,
    /// `(dual - primal) / max(|dual|, |primal|)`.
    pub relative_gap: f64,
    pub iterations: usize,
}

fn hermitian_error(a: &DMatrix<C64>) -> f64 {
    let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let diff = (a - a.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

fn hermitize(a: &mut DMatrix<C64>) {
    let h = (&*a + a.adjoint()) * Complex64::new(0.5, 0.0);
    *a = h;
}

/// Largest `α` keeping `x + α d` positive semidefinite (`∞` if unbounded).
fn max_step(x: &DMatrix<C64>, d: &DMatrix<C64>) -> Option<f64> {
    let l = x.clone().cholesky()?.l();
    let half = l.solve_lower_triangular(d)?;
    let mut m = l.solve_lower_triangular(&half.adjoint())?;
    hermitize(&mut m);
    let min = SymmetricEigen::new(m).eigenvalues.min();
    Some(if min >= 0.0 { f64::INFINITY } else { -1.0 / min })
}

fn relative_gap(primal: f64, dual: f64) -> f64 {
    let denom = dual.abs().max(primal.abs()).max(f64::MIN_POSITIVE);
    ((dual - primal) / denom).max(0.0)
}

fn row_major(x: &DMatrix<C64>) -> Vec<C64> {
    x.transpose().iter().copied().collect()
}

/// Solves `max tr(B̃X) s.t. diag(X) = 1, X ⪰ 0`.
pub fn solve_sdp(b_lift: &DMatrix<C64>, opts: &SdpOptions) -> Result<SdpSolution> {
    let n = b_lift.nrows();
    if n == 0 || b_lift.ncols() != n {
        return Err(Error::Dimension(format!(
            "SDP matrix must be square and non-empty, got {}x{}",
            b_lift.nrows(),
            b_lift.ncols()
        )));
    }
    if b_lift.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::InvalidArgument("SDP matrix has non-finite entries".into()));
    }
    if hermitian_error(b_lift) > 1e-10 {
        return Err(Error::InvalidArgument("SDP matrix is not Hermitian".into()));
    }
    let scale = b_lift.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(SdpSolution {
            x: DMatrix::identity(n, n),
            primal: 0.0,
            dual_bound: 0.0,
            relative_gap: 0.0,
            iterations: 0,
        });
    }
    let mut c = b_lift / Complex64::new(scale, 0.0);
    hermitize(&mut c);

    let mut x: DMatrix<C64> = DMatrix::identity(n, n);
    let mut y: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| c[(i, j)].norm()).sum::<f64>() + 1.0)
        .collect();
    let mut last_alpha = 0.0_f64;
    let mut iterations = 0;

    let dual_matrix = |y: &[f64]| {
        let mut z = -c.clone();
        for (i, yi) in y.iter().enumerate() {
            z[(i, i)] += Complex64::new(*yi, 0.0);
        }
        z
    };

    loop {
        let z = dual_matrix(&y);
        let primal = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (c[(i, j)] * x[(j, i)]).re)
            .sum::<f64>();
        let dual: f64 = y.iter().sum();
        let gap = relative_gap(primal, dual);
        let finish = |x: DMatrix<C64>, iterations| SdpSolution {
            x,
            primal: primal * scale,
            dual_bound: dual * scale,
            relative_gap: gap,
            iterations,
        };
        if gap <= opts.tolerance {
            return Ok(finish(x, iterations));
        }
        let stalled = iterations >= opts.max_iterations;
        let step = if stalled { None } else { newton_step(&x, &z, last_alpha) };
        let Some((dx, dy, alpha_p, alpha_d)) = step else {
            if gap <= opts.acceptable_gap {
                return Ok(finish(x, iterations));
            }
            return Err(Error::SolverNonConvergence {
                iterations,
                gap,
                last_iterate: row_major(&x),
            });
        };
        x += dx * Complex64::new(alpha_p, 0.0);
        for i in 0..n {
            x[(i, i)] = Complex64::new(1.0, 0.0);
        }
        hermitize(&mut x);
        for (yi, d) in y.iter_mut().zip(dy.iter()) {
            *yi += alpha_d * d;
        }
        last_alpha = alpha_p.min(alpha_d);
        iterations += 1;
    }
}

type Step = (DMatrix<C64>, DVector<f64>, f64, f64);

fn newton_step(x: &DMatrix<C64>, z: &DMatrix<C64>, last_alpha: f64) -> Option<Step> {
    let n = x.nrows();
    let zi = z.clone().cholesky()?.inverse();
    let mu = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (z[(i, j)] * x[(j, i)]).re)
        .sum::<f64>()
        / n as f64;
    let sigma = if last_alpha > 0.9 {
        0.05
    } else if last_alpha > 0.5 {
        0.2
    } else {
        0.5
    };
    let target = sigma * mu;

    let s = DMatrix::from_fn(n, n, |i, j| (zi[(i, j)] * x[(j, i)]).re);
    let rhs = DVector::from_fn(n, |i, _| target * zi[(i, i)].re - 1.0);
    let dy = s.cholesky()?.solve(&rhs);

    let mut zi_dy_x = zi.clone();
    for j in 0..n {
        for i in 0..n {
            zi_dy_x[(i, j)] *= dy[j];
        }
    }
    let mut dx = &zi * Complex64::new(target, 0.0) - x - zi_dy_x * x;
    hermitize(&mut dx);
    for i in 0..n {
        dx[(i, i)] = Complex64::new(0.0, 0.0);
    }

    let dz = DMatrix::from_diagonal(&dy.map(|v| Complex64::new(v, 0.0)));
    let alpha_p = (0.95 * max_step(x, &dx)?).min(1.0);
    let alpha_d = (0.95 * max_step(z, &dz)?).min(1.0);
    if !(alpha_p > 0.0 && alpha_d > 0.0) {
        return None;
    }
    Some((dx, dy, alpha_p, alpha_d))
}

/// Best rounded point found by Gaussian randomisation.
#[derive(Debug, Clone)]
pub struct Rounding {
    /// Unit-modulus coefficients, auxiliary entry removed.
    pub theta: Vec<C64>,
    /// `ϑ̃ᴴ B̃ ϑ̃` at the returned point.
    pub value: f64,
    /// The SDP solution was numerically rank one.
    pub rank_one: bool,
}

const RANK_ONE_RATIO: f64 = 1e-8;

fn normalise(v: &[C64]) -> Option<Vec<C64>> {
    let last = *v.last()?;
    if last.norm() == 0.0 {
        return None;
    }
    let anchor = last.arg();
    Some(
        v[..v.len() - 1]
            .iter()
            .map(|c| if c.norm() == 0.0 { C64::new(1.0, 0.0) } else { C64::cis(c.arg() - anchor) })
            .collect(),
    )
}

/// Rounds an SDP solution to unit-modulus coefficients.
///
/// A rank-one `X` gives its principal eigenvector directly; otherwise
/// `draws` Gaussian vectors `v = UΣ^{1/2} r` are rounded and the best kept.
pub fn gaussian_randomization<R: Rng + ?Sized>(
    x: &DMatrix<C64>,
    b_lift: &DMatrix<C64>,
    draws: usize,
    rng: &mut R,
) -> Result<Rounding> {
    let n = x.nrows();
    if n < 2 || x.ncols() != n || b_lift.shape() != x.shape() {
        return Err(Error::Dimension(format!(
            "randomisation needs matching square matrices of size at least 2, got {:?} and {:?}",
            x.shape(),
            b_lift.shape()
        )));
    }
    if draws == 0 {
        return Err(Error::InvalidArgument("Gamma_r must be at least 1".into()));
    }
    let mut sym = x.clone();
    hermitize(&mut sym);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]];
    if !(top > 0.0) {
        return Err(Error::Numerical("SDP solution has no positive eigenvalue".into()));
    }
    let second = eig.eigenvalues[order[1]];

    if second <= RANK_ONE_RATIO * top {
        let v: Vec<C64> = eig.eigenvectors.column(order[0]).iter().copied().collect();
        if let Some(theta) = normalise(&v) {
            let value = lifted_objective(b_lift, &theta);
            return Ok(Rounding {
                theta,
                value,
                rank_one: true,
            });
        }
    }

    let factor = DMatrix::from_fn(n, n, |i, k| {
        eig.eigenvectors[(i, order[k])] * eig.eigenvalues[order[k]].max(0.0).sqrt()
    });
    let mut best: Option<(Vec<C64>, f64)> = None;
    let mut drawn = 0;
    let mut attempts = 0usize;
    while drawn < draws {
        attempts += 1;
        if attempts > 100 * draws + 100 {
            return Err(Error::Numerical("randomisation keeps hitting a zero anchor".into()));
        }
        let r = DVector::from_fn(n, |_, _| complex_normal(rng));
        let v = &factor * r;
        let Some(theta) = normalise(v.as_slice()) else {
            continue;
        };
        drawn += 1;
        let value = lifted_objective(b_lift, &theta);
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((theta, value));
        }
    }
    let (theta, value) = best.expect("at least one draw");
    Ok(Rounding {
        theta,
        value,
        rank_one: false,
    })
}
