//! Homogeneous isotropic media in three dimensions.
//!
//! With `φ = e^{ikR}/(4πR)`, `k = k0 n`, `n² = εμ`, the free dyadic is `G0 = (I + ∇∇/k²) φ`.
//! The second-order kernels are normalized as `gE = μ G0` and `gH = ε G0`, so that
//! `(∇×μ⁻¹∇× − k0²ε) gE = I δ`. The 6×6 first-order kernel then has blocks
//! `gEJ = k0 gE`, `gEM = i (∇×gH)/ε`, `gHJ = −i (∇×gE)/μ`, `gHM = k0 gH`, curls acting on `r`.

use crate::dual::{cross_matrix, cx};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::{Mat3, Mat6, Point, C64};
use std::f64::consts::PI;

const I: C64 = C64::new(0.0, 1.0);

/// Smallest allowed separation in units of the vacuum wavelength.
pub const MIN_SEPARATION: f64 = 1e-3;

/// Homogeneous isotropic medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Medium {
    pub eps: C64,
    pub mu: C64,
}

impl Medium {
    pub fn new(eps: C64, mu: C64) -> Result<Self> {
        if eps.im < 0.0 || mu.im < 0.0 {
            return Err(Error::Active("gain medium has no retarded kernel".into()));
        }
        if eps.norm() == 0.0 || mu.norm() == 0.0 {
            return Err(Error::Invalid("ε and μ must be nonzero".into()));
        }
        Ok(Medium { eps, mu })
    }

    pub fn vacuum() -> Self {
        Medium { eps: cx(1.0), mu: cx(1.0) }
    }

    /// Refractive index on the branch with `Im n ≥ 0`.
    pub fn index(&self) -> C64 {
        let n = (self.eps * self.mu).sqrt();
        if n.im < 0.0 || (n.im == 0.0 && n.re < 0.0) {
            -n
        } else {
            n
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    Electric,
    Magnetic,
}

/// Second-order dyadic kernel of one sector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dyadic3 {
    pub medium: Medium,
    pub k0: f64,
    pub sector: Sector,
}

fn separation(r: &Point, rp: &Point, k0: f64) -> Result<([f64; 3], f64)> {
    let d = [r[0] - rp[0], r[1] - rp[1], r[2] - rp[2]];
    let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if !len.is_finite() {
        return Err(Error::Invalid("non-finite position".into()));
    }
    if len < MIN_SEPARATION * 2.0 * PI / k0 {
        return Err(Error::Coincident);
    }
    Ok(([d[0] / len, d[1] / len, d[2] / len], len))
}

fn outer(u: &[f64; 3]) -> Mat3 {
    Mat3::from_fn(|i, j| cx(u[i] * u[j]))
}

impl Dyadic3 {
    pub fn new(medium: Medium, k0: f64, sector: Sector) -> Result<Self> {
        if !(k0 > 0.0) || !k0.is_finite() {
            return Err(Error::Invalid("k0 must be positive".into()));
        }
        Ok(Dyadic3 { medium, k0, sector })
    }

    fn weight(&self) -> C64 {
        match self.sector {
            Sector::Electric => self.medium.mu,
            Sector::Magnetic => self.medium.eps,
        }
    }

    pub fn wavenumber(&self) -> C64 {
        self.medium.index() * self.k0
    }

    pub fn eval(&self, r: &Point, rp: &Point) -> Result<Mat3> {
        let (u, len) = separation(r, rp, self.k0)?;
        let k = self.wavenumber();
        let phi = (I * k * len).exp() / (4.0 * PI * len);
        let x = k * len;
        let a = cx(1.0) + I / x - cx(1.0) / (x * x);
        let b = cx(1.0) + I * 3.0 / x - cx(3.0) / (x * x);
        Ok((Mat3::identity() * a - outer(&u) * b) * (phi * self.weight()))
    }

    /// `∇_r × g` (column-wise), in closed form.
    pub fn curl(&self, r: &Point, rp: &Point) -> Result<Mat3> {
        let (u, len) = separation(r, rp, self.k0)?;
        let k = self.wavenumber();
        let phi = (I * k * len).exp() / (4.0 * PI * len);
        let radial = phi * (I * k - 1.0 / len) * self.weight();
        Ok(cross_matrix(u).map(cx) * radial)
    }
}

/// How the curls in the block relations are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurlMode {
    Analytic,
    /// Fourth-order central differences in `r′` with one Richardson step.
    Numerical { step: f64 },
}

/// Column-wise curl with respect to the second argument, `∇_{r′} × f(r′)`.
pub fn primed_curl_numeric<F>(f: F, rp: &Point, step: f64) -> Result<Mat3>
where
    F: Fn(&Point) -> Result<Mat3>,
{
    let grad = |h: f64| -> Result<[Mat3; 3]> {
        let mut out = [Mat3::zeros(); 3];
        for (k, slot) in out.iter_mut().enumerate() {
            let at = |s: f64| {
                let mut p = *rp;
                p[k] += s * h;
                f(&p)
            };
            *slot = (at(-2.0)? - at(-1.0)? * cx(8.0) + at(1.0)? * cx(8.0) - at(2.0)?) / cx(12.0 * h);
        }
        Ok(out)
    };
    let coarse = grad(step)?;
    let fine = grad(0.5 * step)?;
    let d: Vec<Mat3> = (0..3).map(|k| (fine[k] * cx(16.0) - coarse[k]) / cx(15.0)).collect();
    // (∇×M)_{ij} = ε_{ikl} ∂_k M_{lj}
    Ok(Mat3::from_fn(|i, j| {
        let (a, b) = ((i + 1) % 3, (i + 2) % 3);
        d[a][(b, j)] - d[b][(a, j)]
    }))
}

/// Assembles the 6×6 first-order kernel from the two second-order dyadics.
pub fn first_from_second(ge: &Dyadic3, gh: &Dyadic3, r: &Point, rp: &Point, mode: CurlMode) -> Result<Mat6> {
    if ge.medium != gh.medium || ge.k0 != gh.k0 || ge.sector != Sector::Electric || gh.sector != Sector::Magnetic {
        return Err(Error::Invalid("dyadics must share medium and frequency, electric first".into()));
    }
    let Medium { eps, mu } = ge.medium;
    let k0 = cx(ge.k0);
    // ∇_r acts on a function of r − r′, so ∇_r × g = −∇_{r′} × g
    let (curl_e, curl_h) = match mode {
        CurlMode::Analytic => (ge.curl(r, rp)?, gh.curl(r, rp)?),
        CurlMode::Numerical { step } => (
            -primed_curl_numeric(|q| ge.eval(r, q), rp, step)?,
            -primed_curl_numeric(|q| gh.eval(r, q), rp, step)?,
        ),
    };
    let mut g = Mat6::zeros();
    g.fixed_view_mut::<3, 3>(0, 0).copy_from(&(ge.eval(r, rp)? * k0));
    g.fixed_view_mut::<3, 3>(0, 3).copy_from(&(curl_h * (I / eps)));
    g.fixed_view_mut::<3, 3>(3, 0).copy_from(&(curl_e * (-I / mu)));
    g.fixed_view_mut::<3, 3>(3, 3).copy_from(&(gh.eval(r, rp)? * k0));
    Ok(g)
}

/// First-order kernel of a homogeneous isotropic medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousKernel3d {
    pub electric: Dyadic3,
    pub magnetic: Dyadic3,
}

impl HomogeneousKernel3d {
    pub fn new(medium: Medium, k0: f64) -> Result<Self> {
        Ok(HomogeneousKernel3d {
            electric: Dyadic3::new(medium, k0, Sector::Electric)?,
            magnetic: Dyadic3::new(medium, k0, Sector::Magnetic)?,
        })
    }

    pub fn medium(&self) -> Medium {
        self.electric.medium
    }

    pub fn eval_with(&self, r: &Point, rp: &Point, mode: CurlMode) -> Result<Mat6> {
        first_from_second(&self.electric, &self.magnetic, r, rp, mode)
    }
}

impl Kernel for HomogeneousKernel3d {
    fn k0(&self) -> f64 {
        self.electric.k0
    }

    fn eval(&self, r: &Point, rp: &Point) -> Result<Mat6> {
        self.eval_with(r, rp, CurlMode::Analytic)
    }

    fn material(&self, _r: &Point) -> Mat6 {
        let m = self.medium();
        let mut d = Mat6::zeros();
        for i in 0..3 {
            d[(i, i)] = m.eps;
            d[(i + 3, i + 3)] = m.mu;
        }
        d
    }

    /// Depolarization term of the spherically excluded principal value.
    fn contact(&self, _r: &Point) -> Mat6 {
        let m = self.medium();
        let k0 = self.electric.k0;
        let mut d = Mat6::zeros();
        for i in 0..3 {
            d[(i, i)] = -cx(1.0) / (m.eps * 3.0 * k0);
            d[(i + 3, i + 3)] = -cx(1.0) / (m.mu * 3.0 * k0);
        }
        d
    }
}

/// Largest entry of `(i∇̄× − k0 ε̄) g(·, r′)` over probe points, by second-order central
/// differences of step `h`, relative to the largest kernel entry at each probe.
pub fn maxwell_residual_6(kernel: &dyn Kernel, rp: &Point, probes: &[Point], h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Invalid("step must be positive".into()));
    }
    let k0 = kernel.k0();
    let mut worst: f64 = 0.0;
    for p in probes {
        let dist = ((p[0] - rp[0]).powi(2) + (p[1] - rp[1]).powi(2) + (p[2] - rp[2]).powi(2)).sqrt();
        if dist <= 2.0 * h || dist < MIN_SEPARATION * 2.0 * PI / k0 {
            return Err(Error::Precondition("probe point touches the source".into()));
        }
        let mut d = [Mat6::zeros(); 3];
        for (k, slot) in d.iter_mut().enumerate() {
            let mut a = *p;
            let mut b = *p;
            a[k] += h;
            b[k] -= h;
            *slot = (kernel.eval(&a, rp)? - kernel.eval(&b, rp)?) / cx(2.0 * h);
        }
        let g = kernel.eval(p, rp)?;
        let mut res = kernel.material(p) * g * cx(-k0);
        for j in 0..6 {
            for i in 0..3 {
                let (a, b) = ((i + 1) % 3, (i + 2) % 3);
                let curl_e = d[a][(b, j)] - d[b][(a, j)];
                let curl_h = d[a][(3 + b, j)] - d[b][(3 + a, j)];
                res[(i, j)] += I * curl_h;
                res[(3 + i, j)] -= I * curl_e;
            }
        }
        let scale = g.iter().map(|z| z.norm()).fold(0.0, f64::max);
        worst = worst.max(res.iter().map(|z| z.norm()).fold(0.0, f64::max) / scale);
    }
    Ok(worst)
}

/// Angular spectrum `∫ g(ρ, z; 0, z′) e^{−i k⊥·ρ} d²ρ` by polar quadrature; needs a lossy medium
/// so that the transverse integral converges.
pub fn angular_spectrum(
    kernel: &dyn Kernel,
    z: f64,
    zp: f64,
    k_perp: [f64; 2],
    rho_max: f64,
    panels: usize,
    order: usize,
    n_phi: usize,
) -> Result<Mat6> {
    let radial = crate::quadrature::Quadrature::<f64>::panels(0.0, rho_max, panels, &[], order)?;
    let mut total = Mat6::zeros();
    for (node, w) in radial.nodes.iter().zip(&radial.weights) {
        let rho = node[2];
        let mut ring = Mat6::zeros();
        for m in 0..n_phi {
            let phi = 2.0 * PI * m as f64 / n_phi as f64;
            let (x, y) = (rho * phi.cos(), rho * phi.sin());
            let phase = (-I * (k_perp[0] * x + k_perp[1] * y)).exp();
            ring += kernel.eval(&[x, y, z], &[0.0, 0.0, zp])? * phase;
        }
        total += ring * cx(w * rho * 2.0 * PI / n_phi as f64);
    }
    Ok(total)
}
