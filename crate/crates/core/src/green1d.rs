//! Planar media at a fixed transverse wavevector.
//!
//! Fields are reduced to the tangential vector `u = (Ex, Ey, hx, hy)`, which obeys
//! `i N ∂z u − k0 C u = s`, with `N` the tangential part of `ẑ̄×` and `C = diag(C_E, C_H)`,
//! `C_E = ε_t − P/μ_zz`, `C_H = μ_t − P/ε_zz`, `P = [[qy², −qx qy], [−qx qy, qx²]]`, `q = k⊥/k0`.
//! The exact kernel uses generalized reflection matrices referenced at the far edge of each layer,
//! so only decaying exponentials are ever formed.

use crate::dual::cx;
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::media::{MaterialProfile, MaterialTensor};
use crate::{Grid, Mat2, Mat4, Mat6, Point, Vec6, C64};
use nalgebra::{DMatrix, SMatrix, SVector};

pub type Vec4 = SVector<C64, 4>;
type M42 = SMatrix<C64, 4, 2>;
type M24 = SMatrix<C64, 2, 4>;

const I: C64 = C64::new(0.0, 1.0);

/// `ẑ×` on tangential 2-vectors.
pub fn rotation() -> Mat2 {
    Mat2::new(cx(0.0), cx(-1.0), cx(1.0), cx(0.0))
}

/// Tangential block of `ẑ̄×` acting on `(Ex, Ey, hx, hy)`.
pub fn tangential_cross() -> Mat4 {
    let r = rotation();
    let mut n = Mat4::zeros();
    n.fixed_view_mut::<2, 2>(0, 2).copy_from(&r);
    n.fixed_view_mut::<2, 2>(2, 0).copy_from(&(-r));
    n
}

/// `diag(1, 1, −1, −1)`.
pub fn tangential_flip() -> Mat4 {
    Mat4::from_diagonal(&Vec4::new(cx(1.0), cx(1.0), cx(-1.0), cx(-1.0)))
}

fn inv4(m: &Mat4) -> Result<Mat4> {
    m.try_inverse().ok_or(Error::Singular(f64::INFINITY))
}

fn frob(m: &Mat4) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Outgoing kernel of the `(Ex, Z0 Hy)` pair in a homogeneous medium of index `n` (μ = 1).
pub fn homogeneous_green_1d(n: C64, omega: f64, z: f64, zp: f64) -> Result<Mat2> {
    if n.im < 0.0 {
        return Err(Error::Active(format!("Im n = {} < 0", n.im)));
    }
    if n.norm() == 0.0 || !(omega > 0.0) {
        return Err(Error::Invalid("need n ≠ 0 and omega > 0".into()));
    }
    if z == zp {
        return Err(Error::Coincident);
    }
    let s = if z > zp { 1.0 } else { -1.0 };
    let e = (I * n * omega * (z - zp).abs()).exp() * C64::new(0.0, 0.5);
    Ok(Mat2::new(e / n, e * s, e * s, e * n))
}

/// Planar stack: semi-infinite media below and above, finite layers in between.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    pub below: MaterialTensor<f64>,
    /// `(thickness, medium)` from bottom to top.
    pub layers: Vec<(f64, MaterialTensor<f64>)>,
    pub above: MaterialTensor<f64>,
    /// Height of the lowest interface.
    pub z_bottom: f64,
    /// Transverse wavevector `(kx, ky)`.
    pub k_perp: [f64; 2],
    pub omega: f64,
}

impl LayerStack {
    pub fn new(
        below: MaterialTensor<f64>,
        layers: Vec<(f64, MaterialTensor<f64>)>,
        above: MaterialTensor<f64>,
        z_bottom: f64,
        k_perp: [f64; 2],
        omega: f64,
    ) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::Invalid("omega must be positive".into()));
        }
        if layers.iter().any(|(d, _)| !(*d > 0.0) || !d.is_finite()) {
            return Err(Error::Invalid("layer thicknesses must be positive".into()));
        }
        if !z_bottom.is_finite() || !k_perp.iter().all(|k| k.is_finite()) {
            return Err(Error::Invalid("non-finite stack geometry".into()));
        }
        Ok(LayerStack { below, layers, above, z_bottom, k_perp, omega })
    }

    pub fn homogeneous(medium: MaterialTensor<f64>, k_perp: [f64; 2], omega: f64) -> Result<Self> {
        Self::new(medium, vec![], medium, 0.0, k_perp, omega)
    }

    /// Vacuum-terminated stack from a profile; gaps between layers become vacuum layers.
    pub fn from_profile(profile: &MaterialProfile, k_perp: [f64; 2], omega: f64) -> Result<Self> {
        let vac = MaterialTensor::vacuum();
        let Some((lo, _)) = profile.support() else {
            return Self::homogeneous(vac, k_perp, omega);
        };
        let mut layers = vec![];
        let mut z = lo;
        for (a, b, m) in &profile.layers {
            if *a > z {
                layers.push((a - z, vac));
            }
            layers.push((b - a, *m));
            z = *b;
        }
        Self::new(vac, layers, vac, lo, k_perp, omega)
    }

    pub fn k0(&self) -> f64 {
        self.omega
    }

    /// Transverse wavevector in units of k0.
    pub fn q(&self) -> [f64; 2] {
        [self.k_perp[0] / self.k0(), self.k_perp[1] / self.k0()]
    }

    pub fn interfaces(&self) -> Vec<f64> {
        let mut z = self.z_bottom;
        let mut out = vec![z];
        for (d, _) in &self.layers {
            z += d;
            out.push(z);
        }
        if self.layers.is_empty() {
            out.clear();
        }
        out
    }

    pub fn material_at(&self, z: f64) -> MaterialTensor<f64> {
        let faces = self.interfaces();
        if faces.is_empty() || z < faces[0] {
            return self.below;
        }
        for (k, (_, m)) in self.layers.iter().enumerate() {
            if z < faces[k + 1] {
                return *m;
            }
        }
        self.above
    }

    pub fn with_transverse(&self, k_perp: [f64; 2]) -> Self {
        LayerStack { k_perp, ..self.clone() }
    }

    fn media(&self) -> Vec<MaterialTensor<f64>> {
        let mut v = vec![self.below];
        v.extend(self.layers.iter().map(|l| l.1));
        v.push(self.above);
        v
    }

    pub fn is_lossless(&self) -> bool {
        self.media().iter().all(|m| m.is_lossless(0.0))
    }
}

/// `(C_E, C_H)` for a medium without tangential–normal coupling.
fn tangential_material(m: &MaterialTensor<f64>, q: [f64; 2]) -> Result<(Mat2, Mat2)> {
    for t in [&m.eps, &m.mu] {
        if [t[(0, 2)], t[(1, 2)], t[(2, 0)], t[(2, 1)]].iter().any(|z| z.norm() != 0.0) {
            return Err(Error::Invalid("tangential-normal material coupling is not supported".into()));
        }
    }
    let p = Mat2::new(cx(q[1] * q[1]), cx(-q[0] * q[1]), cx(-q[0] * q[1]), cx(q[0] * q[0]));
    let et = m.eps.fixed_view::<2, 2>(0, 0).into_owned();
    let mt = m.mu.fixed_view::<2, 2>(0, 0).into_owned();
    Ok((et - p / m.mu[(2, 2)], mt - p / m.eps[(2, 2)]))
}

/// Normal wavenumber `sqrt(εμ − q²)` on the decaying / outgoing branch.
fn normal_index(eps: C64, mu: C64, q: [f64; 2]) -> Result<C64> {
    let mut qz = (eps * mu - (q[0] * q[0] + q[1] * q[1])).sqrt();
    if qz.im < 0.0 || (qz.im == 0.0 && qz.re < 0.0) {
        qz = -qz;
    }
    if qz.norm() < 1e-12 {
        return Err(Error::Invalid("grazing incidence: normal wavenumber vanishes".into()));
    }
    Ok(qz)
}

#[derive(Debug, Clone)]
struct Region {
    eps: C64,
    mu: C64,
    qz: C64,
    f: M42,
    b: M42,
    fl: M24,
    bl: M24,
    lo: f64,
    hi: f64,
}

fn stack4(a: &M42, b: &M42) -> Mat4 {
    let mut m = Mat4::zeros();
    m.fixed_view_mut::<4, 2>(0, 0).copy_from(a);
    m.fixed_view_mut::<4, 2>(0, 2).copy_from(b);
    m
}

impl Region {
    fn new(m: &MaterialTensor<f64>, q: [f64; 2], lo: f64, hi: f64) -> Result<Self> {
        let (eps, mu) = m
            .scalars()
            .ok_or_else(|| Error::Invalid("the exact planar kernel needs isotropic media".into()))?;
        if eps.im < 0.0 || mu.im < 0.0 {
            return Err(Error::Active("negative loss in a layer".into()));
        }
        let qz = normal_index(eps, mu, q)?;
        let (ce, _) = tangential_material(m, q)?;
        let y = rotation() * ce / qz;
        let mut f = M42::zeros();
        let mut b = M42::zeros();
        f.fixed_view_mut::<2, 2>(0, 0).copy_from(&Mat2::identity());
        f.fixed_view_mut::<2, 2>(2, 0).copy_from(&y);
        b.fixed_view_mut::<2, 2>(0, 0).copy_from(&Mat2::identity());
        b.fixed_view_mut::<2, 2>(2, 0).copy_from(&(-y));
        let inv = inv4(&stack4(&f, &b))?;
        Ok(Region {
            eps,
            mu,
            qz,
            f,
            b,
            fl: inv.fixed_view::<2, 4>(0, 0).into_owned(),
            bl: inv.fixed_view::<2, 4>(2, 0).into_owned(),
            lo,
            hi,
        })
    }

    fn phase(&self, k0: f64, d: f64) -> C64 {
        (I * k0 * self.qz * d).exp()
    }
}

/// Exact retarded kernel of a planar stack.
#[derive(Debug, Clone)]
pub struct PlanarGreen {
    stack: LayerStack,
    k0: f64,
    q: [f64; 2],
    regions: Vec<Region>,
    /// Reflection looking up, referenced at the top edge of each region.
    up: Vec<Mat2>,
    /// Reflection looking down, referenced at the bottom edge of each region.
    down: Vec<Mat2>,
    /// Upward transmission: amplitude at the bottom of region r+1 from the top of region r.
    t_up: Vec<Mat2>,
    /// Downward transmission: amplitude at the top of region r−1 from the bottom of region r.
    t_down: Vec<Mat2>,
}

impl PlanarGreen {
    pub fn new(stack: &LayerStack) -> Result<Self> {
        let k0 = stack.k0();
        let q = stack.q();
        let faces = stack.interfaces();
        let media = stack.media();
        let m = media.len();
        let bounds = |r: usize| {
            let lo = if r == 0 { f64::NEG_INFINITY } else { faces.get(r - 1).copied().unwrap_or(stack.z_bottom) };
            let hi = if r + 1 == m { f64::INFINITY } else { faces.get(r).copied().unwrap_or(stack.z_bottom) };
            (lo, hi)
        };
        let regions = media
            .iter()
            .enumerate()
            .map(|(r, med)| {
                let (lo, hi) = bounds(r);
                Region::new(med, q, lo, hi)
            })
            .collect::<Result<Vec<_>>>()?;
        let zero = Mat2::zeros();
        let mut up = vec![zero; m];
        let mut t_up = vec![zero; m];
        for r in (0..m.saturating_sub(1)).rev() {
            let a = &regions[r + 1];
            let rb = if r + 2 == m { zero } else { up[r + 1] * a.phase(k0, 2.0 * (a.hi - a.lo)) };
            let w = a.f + a.b * rb;
            let x = inv4(&stack4(&w, &(-regions[r].b)))? * regions[r].f;
            t_up[r] = x.fixed_view::<2, 2>(0, 0).into_owned();
            up[r] = x.fixed_view::<2, 2>(2, 0).into_owned();
        }
        let mut down = vec![zero; m];
        let mut t_down = vec![zero; m];
        for r in 1..m {
            let a = &regions[r - 1];
            let ra = if r == 1 { zero } else { down[r - 1] * a.phase(k0, 2.0 * (a.hi - a.lo)) };
            let v = a.f * ra + a.b;
            let x = inv4(&stack4(&regions[r].f, &(-v)))? * (-regions[r].b);
            down[r] = x.fixed_view::<2, 2>(0, 0).into_owned();
            t_down[r] = x.fixed_view::<2, 2>(2, 0).into_owned();
        }
        Ok(PlanarGreen { stack: stack.clone(), k0, q, regions, up, down, t_up, t_down })
    }

    pub fn stack(&self) -> &LayerStack {
        &self.stack
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    /// Region containing z, intervals closed below.
    fn region(&self, z: f64) -> usize {
        self.regions.iter().position(|r| z >= r.lo && z < r.hi).unwrap_or(self.regions.len() - 1)
    }

    /// Region containing z, intervals closed above.
    fn region_left(&self, z: f64) -> usize {
        self.regions.iter().position(|r| z > r.lo && z <= r.hi).unwrap_or(0)
    }

    /// Normal-incidence index of refraction and ε, μ at z.
    pub fn medium_at(&self, z: f64) -> (C64, C64) {
        let r = &self.regions[self.region(z)];
        (r.eps, r.mu)
    }

    /// Normal wavenumber (units of k0) at z.
    pub fn normal_index_at(&self, z: f64) -> C64 {
        self.regions[self.region(z)].qz
    }

    fn upper_reflection(&self, s: usize, z: f64) -> Mat2 {
        let r = &self.regions[s];
        if s + 1 == self.regions.len() {
            Mat2::zeros()
        } else {
            self.up[s] * r.phase(self.k0, 2.0 * (r.hi - z))
        }
    }

    fn lower_reflection(&self, s: usize, z: f64) -> Mat2 {
        let r = &self.regions[s];
        if s == 0 {
            Mat2::zeros()
        } else {
            self.down[s] * r.phase(self.k0, 2.0 * (z - r.lo))
        }
    }

    /// Up- and down-going amplitudes (2×4 each) right at the source plane.
    fn source_amplitudes(&self, s: usize, zp: f64) -> Result<(M24, M24)> {
        let r = &self.regions[s];
        let ru = self.upper_reflection(s, zp);
        let rd = self.lower_reflection(s, zp);
        let m = stack4(&(r.f + r.b * ru), &(-(r.f * rd + r.b)));
        let x = inv4(&m)? * (tangential_cross() * C64::new(0.0, -1.0));
        Ok((x.fixed_view::<2, 4>(0, 0).into_owned(), x.fixed_view::<2, 4>(2, 0).into_owned()))
    }

    /// Tangential 4×4 kernel `g(z, z′)`.
    pub fn green4(&self, z: f64, zp: f64) -> Result<Mat4> {
        if z == zp {
            return Err(Error::Coincident);
        }
        if !z.is_finite() || !zp.is_finite() {
            return Err(Error::Invalid("non-finite position".into()));
        }
        let s = self.region(zp);
        let t = self.region(z);
        let (a, bm) = self.source_amplitudes(s, zp)?;
        let k0 = self.k0;
        if t == s {
            let r = &self.regions[s];
            return Ok(if z > zp {
                (r.f + r.b * self.upper_reflection(s, z)) * (a * r.phase(k0, z - zp))
            } else {
                (r.f * self.lower_reflection(s, z) + r.b) * (bm * r.phase(k0, zp - z))
            });
        }
        if t > s {
            let mut amp = a * self.regions[s].phase(k0, self.regions[s].hi - zp);
            for r in s..t {
                amp = self.t_up[r] * amp;
                if r + 1 < t {
                    let g = &self.regions[r + 1];
                    amp *= g.phase(k0, g.hi - g.lo);
                }
            }
            let g = &self.regions[t];
            Ok((g.f + g.b * self.upper_reflection(t, z)) * (amp * g.phase(k0, z - g.lo)))
        } else {
            let mut amp = bm * self.regions[s].phase(k0, zp - self.regions[s].lo);
            for r in ((t + 1)..=s).rev() {
                amp = self.t_down[r] * amp;
                if r - 1 > t {
                    let g = &self.regions[r - 1];
                    amp *= g.phase(k0, g.hi - g.lo);
                }
            }
            let g = &self.regions[t];
            Ok((g.f * self.lower_reflection(t, z) + g.b) * (amp * g.phase(k0, g.hi - z)))
        }
    }

    /// One-sided limit of the tangential kernel at the source plane.
    pub fn green4_limit(&self, zp: f64, above: bool) -> Result<Mat4> {
        let s = self.region(zp);
        let r = &self.regions[s];
        let (a, bm) = self.source_amplitudes(s, zp)?;
        Ok(if above {
            (r.f + r.b * self.upper_reflection(s, zp)) * a
        } else {
            (r.f * self.lower_reflection(s, zp) + r.b) * bm
        })
    }

    /// One-sided limit of the 6×6 kernel at the source plane.
    pub fn green6_limit(&self, zp: f64, above: bool) -> Result<Mat6> {
        Ok(self.lift_out(zp) * self.green4_limit(zp, above)? * self.lift_in(zp))
    }

    /// Field of point sources `(z′, S)`; on a source plane the mean of the one-sided limits is used.
    pub fn field(&self, sources: &[(f64, Vec6)], z: f64) -> Result<Vec6> {
        let mut e = Vec6::zeros();
        for (zp, s) in sources {
            let g = if *zp == z {
                (self.green6_limit(z, true)? + self.green6_limit(z, false)?) * cx(0.5)
            } else {
                self.green6(z, *zp)?
            };
            e += g * s;
        }
        Ok(e)
    }

    /// The `(Ex, Z0 Hy)` block of the tangential kernel.
    pub fn green2(&self, z: f64, zp: f64) -> Result<Mat2> {
        let g = self.green4(z, zp)?;
        Ok(Mat2::new(g[(0, 0)], g[(0, 3)], g[(3, 0)], g[(3, 3)]))
    }

    /// Rebuilds normal field components from tangential ones (6×4).
    pub fn lift_out(&self, z: f64) -> SMatrix<C64, 6, 4> {
        let (eps, mu) = self.medium_at(z);
        let [qx, qy] = self.q;
        let mut l = SMatrix::<C64, 6, 4>::zeros();
        l[(0, 0)] = cx(1.0);
        l[(1, 1)] = cx(1.0);
        l[(3, 2)] = cx(1.0);
        l[(4, 3)] = cx(1.0);
        l[(2, 2)] = cx(qy) / eps;
        l[(2, 3)] = cx(-qx) / eps;
        l[(5, 0)] = cx(-qy) / mu;
        l[(5, 1)] = cx(qx) / mu;
        l
    }

    /// Folds normal source components into effective tangential ones (4×6).
    pub fn lift_in(&self, zp: f64) -> SMatrix<C64, 4, 6> {
        let (eps, mu) = self.medium_at(zp);
        let [qx, qy] = self.q;
        let mut l = SMatrix::<C64, 4, 6>::zeros();
        l[(0, 0)] = cx(1.0);
        l[(1, 1)] = cx(1.0);
        l[(2, 3)] = cx(1.0);
        l[(3, 4)] = cx(1.0);
        l[(0, 5)] = cx(-qy) / mu;
        l[(1, 5)] = cx(qx) / mu;
        l[(2, 2)] = cx(qy) / eps;
        l[(3, 2)] = cx(-qx) / eps;
        l
    }

    /// Full 6×6 kernel (contact term at coincident points excluded).
    pub fn green6(&self, z: f64, zp: f64) -> Result<Mat6> {
        Ok(self.lift_out(z) * self.green4(z, zp)? * self.lift_in(zp))
    }

    fn region_propagator(&self, r: usize, d: f64) -> Mat4 {
        let g = &self.regions[r];
        g.f * g.fl * g.phase(self.k0, d) + g.b * g.bl * g.phase(self.k0, -d)
    }

    /// Tangential propagator `P(z2, z1)`: `u(z2) = P u(z1)` for source-free fields.
    pub fn propagator(&self, z2: f64, z1: f64) -> Mat4 {
        let mut p = Mat4::identity();
        let mut z = z1;
        if z2 >= z1 {
            while z < z2 {
                let r = self.region(z);
                let end = self.regions[r].hi.min(z2);
                p = self.region_propagator(r, end - z) * p;
                z = end;
            }
        } else {
            while z > z2 {
                let r = self.region_left(z);
                let end = self.regions[r].lo.max(z2);
                p = self.region_propagator(r, end - z) * p;
                z = end;
            }
        }
        p
    }

    /// `−i P(z, z′) N`: the jump part of the kernel, defined for any ordering of z and z′.
    pub fn jump_kernel(&self, z: f64, zp: f64) -> Mat4 {
        self.propagator(z, zp) * tangential_cross() * C64::new(0.0, -1.0)
    }

    /// Surface-to-surface transfer of tangential traces from z1 to z2.
    pub fn transfer(&self, z1: f64, z2: f64) -> Result<TransferKernel> {
        if !z1.is_finite() || !z2.is_finite() {
            return Err(Error::Invalid("non-finite surface position".into()));
        }
        let n = tangential_cross();
        Ok(TransferKernel {
            matrix: n * self.propagator(z2, z1) * n,
            z_from: z1,
            z_to: z2,
            omega: self.stack.omega,
            k_perp: self.stack.k_perp,
        })
    }

    /// Forward (`+z`) and backward mode bases at z, as 4×2 column blocks.
    pub fn modes(&self, z: f64) -> (SMatrix<C64, 4, 2>, SMatrix<C64, 4, 2>) {
        let r = &self.regions[self.region(z)];
        (r.f, r.b)
    }
}

impl Kernel for PlanarGreen {
    fn k0(&self) -> f64 {
        self.k0
    }

    fn eval(&self, r: &Point, rp: &Point) -> Result<Mat6> {
        self.green6(r[2], rp[2])
    }

    fn material(&self, r: &Point) -> Mat6 {
        self.stack.material_at(r[2]).full()
    }

    /// Normal components respond locally to normal sources.
    fn contact(&self, r: &Point) -> Mat6 {
        let (eps, mu) = self.medium_at(r[2]);
        let mut d = Mat6::zeros();
        d[(2, 2)] = -cx(1.0) / (eps * self.k0);
        d[(5, 5)] = -cx(1.0) / (mu * self.k0);
        d
    }

    fn partner(&self) -> Option<Box<dyn Kernel + '_>> {
        if self.stack.k_perp == [0.0, 0.0] {
            return None;
        }
        let k = self.stack.k_perp;
        PlanarGreen::new(&self.stack.with_transverse([-k[0], -k[1]]))
            .ok()
            .map(|g| Box::new(g) as Box<dyn Kernel>)
    }
}

/// Transfer of tangential dual traces between two planes.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferKernel {
    pub matrix: Mat4,
    pub z_from: f64,
    pub z_to: f64,
    pub omega: f64,
    pub k_perp: [f64; 2],
}

/// `T31 = T32 T21`; the intermediate plane, frequency and wavevector must agree.
pub fn compose(t32: &TransferKernel, t21: &TransferKernel) -> Result<TransferKernel> {
    if t21.z_to != t32.z_from {
        return Err(Error::Invalid(format!("surfaces do not chain: {} vs {}", t21.z_to, t32.z_from)));
    }
    if t21.omega != t32.omega || t21.k_perp != t32.k_perp {
        return Err(Error::Invalid("transfer kernels at different frequency or wavevector".into()));
    }
    Ok(TransferKernel { matrix: t32.matrix * t21.matrix, z_from: t21.z_from, z_to: t32.z_to, omega: t21.omega, k_perp: t21.k_perp })
}

/// One entry block of the discrete kernel together with the staggered positions it refers to.
#[derive(Debug, Clone, PartialEq)]
pub struct FdSample {
    pub value: Mat4,
    /// Positions of the four output rows `(Ex, Ey, hx, hy)`.
    pub out_z: [f64; 4],
    /// Positions of the four source columns.
    pub src_z: [f64; 4],
}

/// Staggered finite-difference resolvent with exact discrete radiation conditions.
///
/// Unknowns are grouped per cell as `[E_i; h_{i+½}]`; the last group holds `E_N` and the
/// exterior half-node value eliminated by the top boundary condition. The block-tridiagonal
/// system is factorized once; kernel columns are solved on demand.
#[derive(Debug, Clone)]
pub struct FdGreen {
    grid: Grid,
    k0: f64,
    eta: f64,
    diag: Vec<Mat4>,
    sub: Vec<Mat4>,
    sup: Vec<Mat4>,
    pivots_inv: Vec<Mat4>,
    lower: Vec<Mat4>,
    condition: f64,
}

impl FdGreen {
    /// `eta` adds `iη/k0` to ε and μ everywhere. It must be positive unless the stack is lossy.
    /// The grid ends must lie in the terminal media; `stack.k_perp` sets the transverse wavevector.
    pub fn new(stack: &LayerStack, grid: &Grid, eta: f64) -> Result<Self> {
        if !(eta >= 0.0) {
            return Err(Error::Invalid("eta must be non-negative".into()));
        }
        if eta == 0.0 && stack.is_lossless() {
            return Err(Error::Precondition("lossless profile needs eta > 0".into()));
        }
        let faces = stack.interfaces();
        if let (Some(lo), Some(hi)) = (faces.first(), faces.last()) {
            if grid.origin > *lo || grid.end() < *hi {
                return Err(Error::Precondition("grid ends must lie in the terminal media".into()));
            }
        }
        let k0 = stack.k0();
        let q = stack.q();
        let reg = |m: MaterialTensor<f64>| {
            let d = nalgebra::Matrix3::identity().map(|x: f64| C64::new(0.0, x * eta / k0));
            MaterialTensor { eps: m.eps + d, mu: m.mu + d }
        };
        let n = grid.cells;
        let h = grid.spacing;
        // exact average of C over [a, b]
        let average = |a: f64, b: f64| -> Result<(Mat2, Mat2)> {
            let mut cuts = vec![a];
            cuts.extend(faces.iter().copied().filter(|&z| z > a && z < b));
            cuts.push(b);
            let mut ce = Mat2::zeros();
            let mut ch = Mat2::zeros();
            for w in cuts.windows(2) {
                let (e, m) = tangential_material(&reg(stack.material_at(0.5 * (w[0] + w[1]))), q)?;
                ce += e * cx(w[1] - w[0]);
                ch += m * cx(w[1] - w[0]);
            }
            Ok((ce / cx(b - a), ch / cx(b - a)))
        };
        let terminal = |m: MaterialTensor<f64>| -> Result<(Mat2, C64)> {
            let m = reg(m);
            let (eps, mu) = m.scalars().ok_or_else(|| Error::Invalid("terminal media must be isotropic".into()))?;
            let qz = normal_index(eps, mu, q)?;
            let (ce, _) = tangential_material(&m, q)?;
            let mut kappa = (k0 * qz * h * 0.5).asin() * (2.0 / h);
            if kappa.im < 0.0 || (kappa.im == 0.0 && kappa.re < 0.0) {
                kappa = -kappa;
            }
            Ok((rotation() * ce / qz, (I * kappa * h * 0.5).exp()))
        };
        let (y_bot, lam_bot) = terminal(stack.below)?;
        let (y_top, lam_top) = terminal(stack.above)?;
        let r = rotation();
        let ir = r * (I / h);
        let mut diag = vec![Mat4::zeros(); n + 1];
        let mut sub = vec![Mat4::zeros(); n + 1];
        let mut sup = vec![Mat4::zeros(); n + 1];
        for i in 0..=n {
            let z = grid.node(i);
            let (ce, _) = average(z - 0.5 * h, z + 0.5 * h)?;
            let d = &mut diag[i];
            let mut ee = -ce * cx(k0);
            if i == 0 {
                ee += ir * y_bot * lam_bot;
            }
            d.fixed_view_mut::<2, 2>(0, 0).copy_from(&ee);
            d.fixed_view_mut::<2, 2>(0, 2).copy_from(&ir);
            if i < n {
                let (_, ch) = average(z, z + h)?;
                d.fixed_view_mut::<2, 2>(2, 0).copy_from(&ir);
                d.fixed_view_mut::<2, 2>(2, 2).copy_from(&(-ch * cx(k0)));
                sup[i].fixed_view_mut::<2, 2>(2, 0).copy_from(&(-ir));
            } else {
                d.fixed_view_mut::<2, 2>(2, 0).copy_from(&(-y_top * lam_top));
                d.fixed_view_mut::<2, 2>(2, 2).copy_from(&Mat2::identity());
            }
            if i > 0 {
                sub[i].fixed_view_mut::<2, 2>(0, 2).copy_from(&(-ir));
            }
        }
        let mut pivots_inv = Vec::with_capacity(n + 1);
        let mut lower = vec![Mat4::zeros(); n + 1];
        let mut condition: f64 = 0.0;
        let mut prev = diag[0];
        for i in 0..=n {
            if i > 0 {
                let inv_prev: &Mat4 = &pivots_inv[i - 1];
                lower[i] = sub[i] * inv_prev;
                prev = diag[i] - lower[i] * sup[i - 1];
            }
            let inv = prev.try_inverse().ok_or(Error::Singular(f64::INFINITY))?;
            let c = frob(&prev) * frob(&inv);
            if !c.is_finite() || c > 1e14 {
                return Err(Error::Singular(c));
            }
            condition = condition.max(c);
            pivots_inv.push(inv);
        }
        Ok(FdGreen { grid: grid.clone(), k0, eta, diag, sub, sup, pivots_inv, lower, condition })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    /// Largest block-pivot condition number met during factorization.
    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    /// Solves the discrete system for a right-hand side given per cell group.
    pub fn solve(&self, rhs: &[Vec4]) -> Result<Vec<Vec4>> {
        let n = self.grid.cells;
        if rhs.len() != n + 1 {
            return Err(Error::Invalid(format!("expected {} groups, got {}", n + 1, rhs.len())));
        }
        let mut y = rhs.to_vec();
        for i in 1..=n {
            y[i] = y[i] - self.lower[i] * y[i - 1];
        }
        let mut x = vec![Vec4::zeros(); n + 1];
        x[n] = self.pivots_inv[n] * y[n];
        for i in (0..n).rev() {
            x[i] = self.pivots_inv[i] * (y[i] - self.sup[i] * x[i + 1]);
        }
        Ok(x)
    }

    /// Applies the discrete operator.
    pub fn apply(&self, x: &[Vec4]) -> Vec<Vec4> {
        let n = self.grid.cells;
        (0..=n)
            .map(|i| {
                let mut r = self.diag[i] * x[i];
                if i > 0 {
                    r += self.sub[i] * x[i - 1];
                }
                if i < n {
                    r += self.sup[i] * x[i + 1];
                }
                r
            })
            .collect()
    }

    /// The four kernel columns for sources in cell group `src` (`E` at node `src`, h at the
    /// half node above it), as full solution vectors.
    pub fn source_columns(&self, src: usize) -> Result<[Vec<Vec4>; 4]> {
        let n = self.grid.cells;
        if src >= n {
            return Err(Error::Invalid(format!("source group {src} outside 0..{n}")));
        }
        let mut cols: [Vec<Vec4>; 4] = Default::default();
        for (c, col) in cols.iter_mut().enumerate() {
            let mut rhs = vec![Vec4::zeros(); n + 1];
            rhs[src][c] = cx(1.0 / self.grid.spacing);
            *col = self.solve(&rhs)?;
        }
        Ok(cols)
    }

    fn positions(&self, i: usize) -> [f64; 4] {
        let (e, h) = (self.grid.node(i), self.grid.half_node(i));
        [e, e, h, h]
    }

    /// Discrete kernel block from cell group `src` to cell group `out`, using precomputed columns.
    pub fn sample(&self, cols: &[Vec<Vec4>; 4], src: usize, out: usize) -> Result<FdSample> {
        if out >= self.grid.cells {
            return Err(Error::Invalid(format!("output group {out} outside the interior")));
        }
        let value = Mat4::from_fn(|r, c| cols[c][out][r]);
        Ok(FdSample { value, out_z: self.positions(out), src_z: self.positions(src) })
    }

    pub fn kernel(&self, out: usize, src: usize) -> Result<FdSample> {
        let cols = self.source_columns(src)?;
        self.sample(&cols, src, out)
    }

    /// Dense discrete kernel over the interior cell groups (rows and columns ordered
    /// `4·group + component`).
    pub fn dense(&self) -> Result<DMatrix<C64>> {
        let n = self.grid.cells;
        let mut g = DMatrix::zeros(4 * n, 4 * n);
        for j in 0..n {
            let cols = self.source_columns(j)?;
            for (c, col) in cols.iter().enumerate() {
                for i in 0..n {
                    for r in 0..4 {
                        g[(4 * i + r, 4 * j + c)] = col[i][r];
                    }
                }
            }
        }
        Ok(g)
    }
}

/// Finite-difference resolvent for a vacuum-terminated profile; the grid's transverse
/// wavevector is used.
pub fn fd_green_1d(profile: &MaterialProfile, grid: &Grid, eta: f64, omega: f64) -> Result<FdGreen> {
    let stack = LayerStack::from_profile(profile, grid.transverse, omega)?;
    FdGreen::new(&stack, grid, eta)
}

/// Tangential kernel of a stack at `(z, z′)`; neither point may sit on an interface.
pub fn stratified_green(stack: &LayerStack, z: f64, zp: f64) -> Result<Mat4> {
    let faces = stack.interfaces();
    if faces.iter().any(|&f| f == z || f == zp) {
        return Err(Error::Invalid("evaluation point on a layer interface".into()));
    }
    PlanarGreen::new(stack)?.green4(z, zp)
}
