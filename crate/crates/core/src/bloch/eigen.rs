use super::fiber::BlochFiber;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;

const I: C = C { re: 0.0, im: 1.0 };

/// Rectangle `[re_min, re_max] × [im_min, im_max]` in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Region {
    pub fn new(re: (f64, f64), im: (f64, f64)) -> Self {
        Region {
            re_min: re.0,
            re_max: re.1,
            im_min: im.0,
            im_max: im.1,
        }
    }

    pub fn contains(&self, z: C) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    pub fn is_bounded(&self) -> bool {
        [self.re_min, self.re_max, self.im_min, self.im_max]
            .iter()
            .all(|v| v.is_finite())
            && self.re_min <= self.re_max
            && self.im_min <= self.im_max
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: C,
    /// Right pencil vector, `‖u‖₂ = 1`.
    pub u: DVector<C>,
    /// `‖Q(λ)u‖ / (‖P‖ + |λ|‖B‖ + |λ|²‖W‖)`.
    pub residual: f64,
}

/// Diagonal similarity by powers of two so that row and column norms are
/// comparable (Parlett–Reinsch).
pub fn balance(a: &mut DMatrix<C>) {
    let n = a.nrows();
    let l1 = |z: &C| z.re.abs() + z.im.abs();
    let mut done = false;
    let mut sweeps = 0;
    while !done && sweeps < 100 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += l1(&a[(j, i)]);
                    r += l1(&a[(i, j)]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / 2.0;
            while c < g {
                f *= 2.0;
                c *= 4.0;
            }
            g = r * 2.0;
            while c > g {
                f /= 2.0;
                c /= 4.0;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    a[(j, i)] *= f;
                    a[(i, j)] /= f;
                }
            }
        }
    }
}

/// All eigenvalues of the companion linearization.
pub fn companion_eigenvalues(f: &BlochFiber) -> Result<Vec<C>> {
    let mut a = f.companion()?;
    balance(&mut a);
    let schur = nalgebra::linalg::Schur::try_new(a, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::EigensolverFailure("Schur iteration did not converge".into()))?;
    let ev = schur
        .eigenvalues()
        .ok_or_else(|| Error::EigensolverFailure("Schur form not triangular".into()))?;
    Ok(ev.iter().cloned().collect())
}

fn normalized(v: DVector<C>) -> DVector<C> {
    let n = v.norm();
    if n > 0.0 && n.is_finite() {
        v / C::new(n, 0.0)
    } else {
        v
    }
}

fn start_vector(m: usize) -> DVector<C> {
    normalized(DVector::from_fn(m, |i, _| {
        C::new(1.0 + 0.1 * (i as f64 * 0.7).sin(), 0.05 * (i as f64 * 1.3).cos())
    }))
}

/// Root of `ww λ² + i bb λ − pp = 0` closest to `near`, computed without
/// cancellation.
fn quadratic_root(ww: C, bb: C, pp: C, near: C) -> C {
    let disc = (4.0 * ww * pp - bb * bb).sqrt();
    let qa = -I * bb + disc;
    let qb = -I * bb - disc;
    let q = if qa.norm() >= qb.norm() { qa } else { qb };
    if q.norm() == 0.0 {
        return C::new(0.0, 0.0);
    }
    let big = q / (2.0 * ww);
    let small = -2.0 * pp / q;
    if (big - near).norm() <= (small - near).norm() {
        big
    } else {
        small
    }
}

#[derive(Debug, Clone)]
pub struct Refined {
    pub lambda: C,
    pub u: DVector<C>,
    /// Left pencil vector: `Q(λ)ᴴ y = 0`.
    pub y: DVector<C>,
    pub residual: f64,
    pub iterations: usize,
}

fn solve_shifted(q: &DMatrix<C>, v: &DVector<C>) -> Result<DVector<C>> {
    q.clone()
        .lu()
        .solve(v)
        .ok_or_else(|| Error::EigensolverFailure("shifted pencil exactly singular".into()))
}

/// Two-sided inverse iteration with Rayleigh-functional updates on the
/// quadratic pencil, starting from the shift `lambda0`.
pub fn refine_pencil(
    f: &BlochFiber,
    lambda0: C,
    max_iter: usize,
    start: Option<(&DVector<C>, &DVector<C>)>,
) -> Result<Refined> {
    let m = f.modes();
    let (mut u, mut y) = match start {
        Some((u, y)) => (u.clone(), y.clone()),
        None => (start_vector(m), start_vector(m)),
    };
    let mut lam = lambda0;
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let delta = C::new(1.0, 0.7) * (1e-11 * (1.0 + lam.norm()));
        let q = f.pencil(lam + delta);
        let qh = q.adjoint();
        for _ in 0..2 {
            u = normalized(solve_shifted(&q, &u)?);
            y = normalized(solve_shifted(&qh, &y)?);
        }
        let yh = y.adjoint();
        let pp = (&yh * &f.p * &u)[(0, 0)];
        let bb = (&yh * &f.b * &u)[(0, 0)];
        let ww = (&yh * &f.w * &u)[(0, 0)];
        let new = quadratic_root(ww, bb, pp, lam);
        let change = (new - lam).norm();
        lam = new;
        if change <= 1e-14 * (1.0 + lam.norm()) {
            break;
        }
    }
    if !(lam.re.is_finite() && lam.im.is_finite()) {
        return Err(Error::EigensolverFailure("non-finite eigenvalue".into()));
    }
    let residual = (f.pencil(lam) * &u).norm() / f.pencil_scale(lam);
    Ok(Refined {
        lambda: lam,
        u,
        y,
        residual,
        iterations,
    })
}

/// Eigenpairs of the pencil whose eigenvalues lie in `region`.
pub fn fiber_spectrum(f: &BlochFiber, region: Region) -> Result<Vec<EigenPair>> {
    if !region.is_bounded() {
        return Err(Error::EigensolverFailure("region must be bounded".into()));
    }
    let mut out = Vec::new();
    for lam in companion_eigenvalues(f)? {
        if !region.contains(lam) {
            continue;
        }
        let r = refine_pencil(f, lam, 2, None)?;
        out.push(EigenPair {
            lambda: r.lambda,
            u: r.u,
            residual: r.residual,
        });
    }
    out.sort_by(|a, b| a.lambda.norm().total_cmp(&b.lambda.norm()));
    Ok(out)
}

/// Reciprocal-condition threshold below which a resolvent solve is refused.
pub const NEAR_SINGULAR_CONDITION: f64 = 1e13;

/// `(P − izB − z²W)⁻¹ rhs` by dense LU.
pub fn fiber_resolvent_solve(f: &BlochFiber, z: C, rhs: &DVector<C>) -> Result<DVector<C>> {
    if rhs.len() != f.modes() {
        return Err(Error::DimensionMismatch {
            expected: f.modes(),
            found: rhs.len(),
        });
    }
    let q = f.pencil(z);
    let lu = q.clone().lu();
    let diag: Vec<f64> = lu.u().diagonal().iter().map(|c| c.norm()).collect();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = if dmin > 0.0 { dmax / dmin } else { f64::INFINITY };
    let sol = lu.solve(rhs);
    let sol = match sol {
        Some(s) if cond < NEAR_SINGULAR_CONDITION => s,
        _ => return Err(Error::NearSingular { z, condition: cond }),
    };
    let res = (&q * &sol - rhs).norm() / rhs.norm().max(f64::MIN_POSITIVE);
    if !(res <= 1e-8) {
        return Err(Error::NearSingular { z, condition: cond });
    }
    Ok(sol)
}

/// Multiplicity data of the eigenvalue 0 of the companion matrix.
#[derive(Debug, Clone)]
pub struct ZeroModeReport {
    /// Number of singular values of `A` below `tol·s_max`.
    pub nullity: usize,
    /// Smallest singular value relative to the largest.
    pub smallest: f64,
    /// Next singular value relative to the largest.
    pub next: f64,
    /// `|⟨Φ₀,Ψ₀⟩| / (‖Φ₀‖‖Ψ₀‖)`: zero for a Jordan chain.
    pub biorthogonality: f64,
}

impl ZeroModeReport {
    pub fn is_simple(&self) -> bool {
        self.nullity == 1 && self.biorthogonality > 1e-8
    }
}

pub fn zero_mode_report(f: &BlochFiber) -> Result<ZeroModeReport> {
    let a = f.companion()?;
    let n = a.nrows();
    let sv = a.clone().singular_values();
    let mut s: Vec<f64> = sv.iter().cloned().collect();
    s.sort_by(|x, y| x.total_cmp(y));
    let smax = s[n - 1];
    let tol = 1e-9;
    let nullity = s.iter().filter(|v| **v < tol * smax).count();
    let svd = a.clone().svd(true, true);
    let (uq, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let imin = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map(|(i, _)| i)
        .unwrap();
    let right = vt.row(imin).adjoint();
    let left = uq.column(imin).into_owned();
    let bio = right.dotc(&left).norm() / (right.norm() * left.norm());
    Ok(ZeroModeReport {
        nullity,
        smallest: s[0] / smax,
        next: s[1] / smax,
        biorthogonality: bio,
    })
}
