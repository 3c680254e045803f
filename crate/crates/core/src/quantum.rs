//! Noise commutators of the quantized theory at covariance level: the c-number matrices that
//! multiply `δ(ω − ω′)`. Volume and boundary channels, their closure against `Im g`, and the
//! surface-to-surface noise budget of planar transfer kernels.
//!
//! Prefactors come from [`UnitsMode`]. The physical wavenumber in them is `units.k0(ω)` with ω
//! the kernel's frequency; kernels themselves stay dimensionless.

use crate::dual::{cx, dual_cross};
use crate::green1d::{tangential_cross, PlanarGreen, TransferKernel};
use crate::identities::{anti_hermitian, frobenius, surface_adjoint_last, volume_adjoint_last, Geometry, IdentityReport};
use crate::kernel::Kernel;
use crate::{Error, Mat4, Mat6, Point, Quadrature, Result, UnitsMode, C64};
use nalgebra::SMatrix;
use serde::Serialize;

/// Which physical channel a covariance weight belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    Volume,
    Boundary,
    TransferAdded,
}

fn physical_k0(units: UnitsMode, g: &dyn Kernel) -> f64 {
    units.k0(g.k0())
}

/// Pointwise weight `(ħ/πε0) ε̄_I` of the delta-correlated volume noise.
pub fn volume_noise_commutator(material: &Mat6, units: UnitsMode) -> Mat6 {
    anti_hermitian(material) * cx(units.volume_noise_prefactor())
}

/// Surface weight `−(ħk0/2πε0)(n̄×)` for the normal `n` given.
/// Closure of the field commutator uses the inward normal of the enclosing surface.
pub fn boundary_noise_commutator(n: Point, k0: f64, units: UnitsMode) -> Result<Mat6> {
    Ok(dual_cross(n)? * cx(-units.boundary_prefactor(k0)))
}

/// Tangential 4×4 form of the boundary weight for the normal `±ẑ`.
pub fn tangential_boundary_weight(normal_z: f64, k0: f64, units: UnitsMode) -> Mat4 {
    tangential_cross() * cx(-normal_z.signum() * units.boundary_prefactor(k0))
}

fn mode_basis(g: &PlanarGreen, z: f64, outward_z: f64) -> (Mat4, Mat4) {
    let (f, b) = g.modes(z);
    // outgoing along the outward normal first, incoming second
    let (out, inc) = if outward_z > 0.0 { (f, b) } else { (b, f) };
    let mut u = Mat4::zeros();
    u.fixed_view_mut::<4, 2>(0, 0).copy_from(&out);
    u.fixed_view_mut::<4, 2>(0, 2).copy_from(&inc);
    let mut keep = Mat4::zeros();
    keep[(2, 2)] = cx(1.0);
    keep[(3, 3)] = cx(1.0);
    (u, keep)
}

/// Boundary weight restricted to incoming modes on the face at `z` with outward normal `±ẑ`:
/// `Q W Q†` with `Q = N P_in N`, `P_in` the projector on incoming modes along outgoing ones.
pub fn projected_boundary_weight(g: &PlanarGreen, z: f64, outward_z: f64, units: UnitsMode) -> Result<Mat4> {
    let k0 = physical_k0(units, g);
    let w = tangential_boundary_weight(-outward_z, k0, units);
    let (u, keep) = mode_basis(g, z, outward_z);
    let inv = u.try_inverse().ok_or_else(|| Error::Singular(f64::INFINITY))?;
    let n = tangential_cross();
    let q = n * u * keep * inv * n;
    Ok(q * w * q.adjoint())
}

/// The boundary weight expressed on incoming-mode amplitudes (2×2); positive definite for a
/// passive terminal medium.
pub fn incoming_mode_commutator(g: &PlanarGreen, z: f64, outward_z: f64, units: UnitsMode) -> Result<SMatrix<C64, 2, 2>> {
    let k0 = physical_k0(units, g);
    let w = tangential_boundary_weight(-outward_z, k0, units);
    let (f, b) = g.modes(z);
    let inc = if outward_z > 0.0 { b } else { f };
    let m = tangential_cross() * inc;
    let gram = (m.adjoint() * m).try_inverse().ok_or_else(|| Error::Singular(f64::INFINITY))?;
    let left = gram * m.adjoint();
    Ok(left * w * left.adjoint())
}

fn embed(m: &Mat4) -> Mat6 {
    const T: [usize; 4] = [0, 1, 3, 4];
    let mut out = Mat6::zeros();
    for (i, &a) in T.iter().enumerate() {
        for (j, &b) in T.iter().enumerate() {
            out[(a, b)] = m[(i, j)];
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutatorMatrix {
    pub r1: Point,
    pub r2: Point,
    pub omega: f64,
    #[serde(serialize_with = "ser_mat6")]
    pub volume_part: Mat6,
    #[serde(serialize_with = "ser_mat6")]
    pub boundary_part: Mat6,
    #[serde(serialize_with = "ser_mat6")]
    pub total: Mat6,
    /// `(ħk0/πε0) Im g(r1, r2)`.
    #[serde(serialize_with = "ser_mat6")]
    pub target_im_g: Mat6,
    pub residual_rel: f64,
    pub report: IdentityReport,
}

/// Rows of `[re, im]` pairs.
pub fn matrix_rows<const R: usize, const C: usize>(m: &SMatrix<C64, R, C>) -> Vec<Vec<[f64; 2]>> {
    (0..R).map(|i| (0..C).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

fn ser_mat6<S: serde::Serializer>(m: &Mat6, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(matrix_rows(m))
}

/// Field commutator `[E(r1), E(r2)†]` assembled from the volume channel and the full-weight
/// boundary channel, compared with `(ħk0/πε0) Im g`.
pub fn field_commutator(g: &dyn Kernel, geom: &Geometry, r1: &Point, r2: &Point, units: UnitsMode, tol: f64) -> Result<CommutatorMatrix> {
    if !geom.region.contains(r1) || !geom.region.contains(r2) {
        return Err(Error::Precondition("observation points must be strictly inside".into()));
    }
    let k0 = g.k0();
    let kp = physical_k0(units, g);
    let volume_part = volume_adjoint_last(g, geom, r1, r2)? * cx(units.volume_noise_prefactor() * kp * k0);
    let boundary_part = boundary_channel(g, &geom.surface, r1, r2, units)?;
    let total = volume_part + boundary_part;
    let im_g = (g.eval(r1, r2)? - g.eval(r2, r1)?.adjoint()) / C64::new(0.0, 2.0);
    let target = im_g * cx(units.commutator_prefactor(kp));
    let report = IdentityReport::compare("commutator_closure", &target, &total, tol)
        .param("omega", k0)
        .channel("volume", frobenius(&volume_part))
        .channel("boundary", frobenius(&boundary_part));
    Ok(CommutatorMatrix {
        r1: *r1,
        r2: *r2,
        omega: k0,
        volume_part,
        boundary_part,
        total,
        target_im_g: target,
        residual_rel: report.residual_rel,
        report,
    })
}

/// `∮ g(r1, s) W(s) g(r2, s)† dS` with `W` the boundary weight at the inward normal.
fn boundary_channel(g: &dyn Kernel, surface: &Quadrature, r1: &Point, r2: &Point, units: UnitsMode) -> Result<Mat6> {
    // W(−n_out) = +c (n̄_out×), so the integral is c times the outward-normal surface form
    Ok(surface_adjoint_last(g, surface, r1, r2)? * cx(units.boundary_prefactor(physical_k0(units, g))))
}

/// Boundary channel of a planar box with the weight projected on incoming modes at each face.
pub fn projected_boundary_channel(g: &PlanarGreen, a: f64, b: f64, r1: &Point, r2: &Point, units: UnitsMode) -> Result<Mat6> {
    let mut acc = Mat6::zeros();
    for (z, out) in [(a, -1.0), (b, 1.0)] {
        let s = [0.0, 0.0, z];
        let w = embed(&projected_boundary_weight(g, z, out, units)?);
        acc += g.eval(r1, &s)? * w * g.eval(r2, &s)?.adjoint();
    }
    Ok(acc)
}

/// Quadrature for the direct added-noise integral between two planes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseQuadrature {
    pub panels: usize,
    pub order: usize,
}

impl Default for NoiseQuadrature {
    fn default() -> Self {
        NoiseQuadrature { panels: 4, order: 32 }
    }
}

fn check_region(g: &PlanarGreen, t: &TransferKernel) -> Result<()> {
    let s = g.stack();
    if t.omega != s.omega || t.k_perp != s.k_perp {
        return Err(Error::Invalid("transfer kernel and stack differ in frequency or wavevector".into()));
    }
    let fresh = g.transfer(t.z_from, t.z_to)?;
    let scale = frobenius(&t.matrix).max(1.0);
    if frobenius(&(fresh.matrix - t.matrix)) > 1e-9 * scale {
        return Err(Error::Invalid("transfer kernel does not belong to this stack".into()));
    }
    Ok(())
}

/// `k0² (ħ/πε0) ∫ (n̄2×) g_J ε̄_I g_J† (n̄2×)† dz` over the planes' interval, with `g_J` the
/// propagating (jump) kernel. Independent of the propagation direction.
pub fn added_noise_direct(g: &PlanarGreen, z_from: f64, z_to: f64, quad: NoiseQuadrature, units: UnitsMode) -> Result<Mat4> {
    let (lo, hi) = if z_from <= z_to { (z_from, z_to) } else { (z_to, z_from) };
    if lo == hi {
        return Ok(Mat4::zeros());
    }
    let n = tangential_cross();
    let k0 = g.k0();
    let kp = physical_k0(units, g);
    let q = Quadrature::panels(lo, hi, quad.panels, &g.stack().interfaces(), quad.order)?;
    let integral = q.sum(Mat4::zeros(), |p, w| {
        let e = anti_hermitian(&g.material(p));
        if e.iter().all(|z| *z == C64::new(0.0, 0.0)) {
            return Mat4::zeros();
        }
        let t = n * g.propagator(z_to, p[2]) * n;
        let l = g.lift_in(p[2]);
        t * l * e * l.adjoint() * t.adjoint() * cx(w)
    });
    Ok(integral * cx(units.volume_noise_prefactor() * kp * k0))
}

/// Direction sign of the planes' normal used for canonical traces: along propagation.
fn direction(z_from: f64, z_to: f64) -> f64 {
    if z_to >= z_from {
        1.0
    } else {
        -1.0
    }
}

/// `−(ħk0/2πε0)[(n̄2×) − T (n̄1×) T†]`.
pub fn added_noise_deficit(t: &TransferKernel, k0: f64, units: UnitsMode) -> Mat4 {
    let w = tangential_boundary_weight(direction(t.z_from, t.z_to), k0, units);
    w - t.matrix * w * t.matrix.adjoint()
}

#[derive(Debug, Clone)]
pub struct IoRelation {
    pub propagated: Mat4,
    pub added_direct: Mat4,
    pub added_deficit: Mat4,
    /// `T [Ψ1, Ψ1†] T† + [Ψ_N, Ψ_N†]` with the direct added noise.
    pub output: Mat4,
    /// Direct against deficit form.
    pub report: IdentityReport,
}

/// Output commutator on the second plane for the input commutator `input` on the first.
pub fn io_relation(g: &PlanarGreen, t: &TransferKernel, input: &Mat4, quad: NoiseQuadrature, units: UnitsMode, tol: f64) -> Result<IoRelation> {
    check_region(g, t)?;
    let propagated = t.matrix * input * t.matrix.adjoint();
    let added_direct = added_noise_direct(g, t.z_from, t.z_to, quad, units)?;
    let added_deficit = added_noise_deficit(t, physical_k0(units, g), units);
    let report = IdentityReport::compare("io_noise", &added_deficit, &added_direct, tol).param("omega", t.omega);
    Ok(IoRelation { propagated, added_direct, added_deficit, output: propagated + added_direct, report })
}

/// `‖T (n̄1×) T† − (n̄2×)‖ / ‖(n̄2×)‖` on the tangential trace space.
pub fn pseudo_unitarity_residual(t: &TransferKernel, tol: f64) -> IdentityReport {
    let n = tangential_cross();
    IdentityReport::compare("pseudo_unitarity", &(t.matrix * n * t.matrix.adjoint()), &n, tol).param("omega", t.omega)
}

/// Transfer and accumulated added noise between two planes.
#[derive(Debug, Clone, PartialEq)]
pub struct Budget {
    pub transfer: Mat4,
    pub noise: Mat4,
    /// `(z_from, z_to)`; `None` for the empty chain.
    pub span: Option<(f64, f64)>,
    pub omega: f64,
    pub k_perp: [f64; 2],
}

impl Budget {
    pub fn identity(omega: f64, k_perp: [f64; 2]) -> Self {
        Budget { transfer: Mat4::identity(), noise: Mat4::zeros(), span: None, omega, k_perp }
    }

    /// One element: the stack between `z_from` and `z_to`.
    pub fn stage(g: &PlanarGreen, z_from: f64, z_to: f64, quad: NoiseQuadrature, units: UnitsMode) -> Result<Self> {
        let t = g.transfer(z_from, z_to)?;
        Ok(Budget {
            transfer: t.matrix,
            noise: added_noise_direct(g, z_from, z_to, quad, units)?,
            span: Some((z_from, z_to)),
            omega: t.omega,
            k_perp: t.k_perp,
        })
    }

    /// This element followed by `next`.
    pub fn then(&self, next: &Budget) -> Result<Budget> {
        if self.omega != next.omega || self.k_perp != next.k_perp {
            return Err(Error::Invalid("stages at different frequency or wavevector".into()));
        }
        let span = match (self.span, next.span) {
            (Some((a, b)), Some((c, d))) => {
                if b != c {
                    return Err(Error::Invalid(format!("surfaces do not chain: {b} vs {c}")));
                }
                if direction(a, b) != direction(c, d) && a != b && c != d {
                    return Err(Error::Invalid(format!("propagation reverses at {b}")));
                }
                Some((a, d))
            }
            (s, None) | (None, s) => s,
        };
        Ok(Budget {
            transfer: next.transfer * self.transfer,
            noise: next.transfer * self.noise * next.transfer.adjoint() + next.noise,
            span,
            omega: self.omega,
            k_perp: self.k_perp,
        })
    }

    /// Canonical boundary weight on planes of this chain.
    pub fn canonical(&self, units: UnitsMode) -> Mat4 {
        let s = self.span.map_or(1.0, |(a, b)| direction(a, b));
        tangential_boundary_weight(s, units.k0(self.omega), units)
    }
}

#[derive(Debug, Clone)]
pub struct CascadeBudget {
    pub total: Budget,
    pub stages: Vec<Budget>,
    /// Each stage's added noise conjugated through every downstream transfer.
    pub contributions: Vec<Mat4>,
    /// Output commutator for canonical input.
    pub output: Mat4,
    pub closure: IdentityReport,
}

/// Chains the stages in order. The first inconsistent interface is named in the error.
pub fn cascade(stages: &[Budget], omega: f64, k_perp: [f64; 2], units: UnitsMode, tol: f64) -> Result<CascadeBudget> {
    let mut total = Budget::identity(omega, k_perp);
    for (i, s) in stages.iter().enumerate() {
        total = total.then(s).map_err(|e| match e {
            Error::Invalid(m) if i > 0 => Error::Invalid(format!("interface {i} (stage {i} to stage {}): {m}", i + 1)),
            other => other,
        })?;
    }
    let mut contributions = vec![];
    for i in 0..stages.len() {
        let downstream = stages[i + 1..].iter().fold(Mat4::identity(), |acc, s| s.transfer * acc);
        contributions.push(downstream * stages[i].noise * downstream.adjoint());
    }
    let canonical = total.canonical(units);
    let output = total.transfer * canonical * total.transfer.adjoint() + total.noise;
    let closure = IdentityReport::compare("cascade", &canonical, &output, tol).param("omega", omega).param("stages", stages.len() as f64);
    Ok(CascadeBudget { total, stages: stages.to_vec(), contributions, output, closure })
}
