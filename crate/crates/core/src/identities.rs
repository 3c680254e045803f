//! Numerical residuals of the classical kernel identities: optical theorem, resolvent forms,
//! interior representation, Poynting balance, reciprocity and Huygens composition.
//!
//! Every check returns an [`IdentityReport`]. Volume integrals use the geometry's quadrature;
//! where the absorber covers an observation point the local `D δ` term of the kernel is added
//! explicitly, and 3D balls carry a partition of unity so the singular part is integrated as a
//! spherical principal value.

use crate::dual::{cx, dual_cross, flip_pi};
use crate::kernel::Kernel;
use crate::{Error, Mat6, Point, Quadrature, Result, Vec6, C64};
use nalgebra::SMatrix;
use serde::Serialize;
use std::collections::BTreeMap;

/// Floor of the denominator in relative residuals.
pub const REL_FLOOR: f64 = 1e-300;
/// Smallest accepted Gauss order.
pub const MIN_ORDER: usize = 4;

pub fn frobenius<const R: usize, const C: usize>(m: &SMatrix<C64, R, C>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `(m − m†)/2i`.
pub fn anti_hermitian<const N: usize>(m: &SMatrix<C64, N, N>) -> SMatrix<C64, N, N> {
    (m - m.adjoint()) / C64::new(0.0, 2.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub identity: String,
    pub params: BTreeMap<String, f64>,
    pub residual_abs: f64,
    pub residual_rel: f64,
    pub lhs_norm: f64,
    pub rhs_norm: f64,
    /// Quadrature orders of a convergence run, oldest first, with the matching relative residuals.
    pub orders: Vec<usize>,
    pub history: Vec<f64>,
    /// `−d log(residual)/d log(order)` over the last refinement step.
    pub slope: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub provenance: String,
    /// Norms of the individual contributions to the right-hand side.
    pub channels: BTreeMap<String, f64>,
}

impl IdentityReport {
    pub fn compare<const R: usize, const C: usize>(
        identity: &str,
        lhs: &SMatrix<C64, R, C>,
        rhs: &SMatrix<C64, R, C>,
        tolerance: f64,
    ) -> Self {
        let (l, r) = (frobenius(lhs), frobenius(rhs));
        let abs = frobenius(&(lhs - rhs));
        let rel = abs / l.max(r).max(REL_FLOOR);
        IdentityReport {
            identity: identity.into(),
            params: BTreeMap::new(),
            residual_abs: abs,
            residual_rel: rel,
            lhs_norm: l,
            rhs_norm: r,
            orders: vec![],
            history: vec![],
            slope: None,
            tolerance,
            pass: rel <= tolerance,
            provenance: "analytic".into(),
            channels: BTreeMap::new(),
        }
    }

    pub fn compare_scalar(identity: &str, lhs: C64, rhs: C64, tolerance: f64) -> Self {
        Self::compare(identity, &SMatrix::<C64, 1, 1>::new(lhs), &SMatrix::<C64, 1, 1>::new(rhs), tolerance)
    }

    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    pub fn channel(mut self, key: &str, norm: f64) -> Self {
        self.channels.insert(key.into(), norm);
        self
    }

    pub fn provenance(mut self, p: &str) -> Self {
        self.provenance = p.into();
        self
    }

    /// Re-judges the report against another tolerance.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.pass = self.residual_rel <= tolerance;
        self
    }
}

/// Runs `check` at each order and returns the last report with the residual history and slope.
pub fn convergence<F>(orders: &[usize], mut check: F) -> Result<IdentityReport>
where
    F: FnMut(usize) -> Result<IdentityReport>,
{
    let mut last: Option<IdentityReport> = None;
    let mut history = vec![];
    for &n in orders {
        let r = check(n)?;
        history.push(r.residual_rel);
        last = Some(r);
    }
    let mut report = last.ok_or_else(|| Error::Invalid("no quadrature orders given".into()))?;
    report.slope = match (orders, history.as_slice()) {
        ([.., n1, n2], [.., e1, e2]) if *e1 > 0.0 && *e2 > 0.0 && n1 != n2 => {
            Some(-(e2 / e1).ln() / (*n2 as f64 / *n1 as f64).ln())
        }
        _ => None,
    };
    report.orders = orders.to_vec();
    report.history = history;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    /// `a < z < b` for planar problems (per unit transverse area).
    Interval { a: f64, b: f64 },
    Ball { center: Point, radius: f64 },
}

impl Region {
    /// Strictly inside, with a relative margin against landing on the surface.
    pub fn contains(&self, r: &Point) -> bool {
        match *self {
            Region::Interval { a, b } => {
                let m = 1e-12 * (b - a);
                r[2] > a + m && r[2] < b - m
            }
            Region::Ball { center, radius } => dist(r, &center) < radius * (1.0 - 1e-12),
        }
    }
}

/// Closed surface with outward normals plus the interior volume rule.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub region: Region,
    pub volume: Quadrature,
    pub surface: Quadrature,
    pub order: usize,
}

/// Quadrature counts for [`Geometry::ball`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallRule {
    pub n_r: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    /// Support radius of the cores around observation points.
    pub core_radius: f64,
    pub core_n_r: usize,
    pub core_n_theta: usize,
    pub core_n_phi: usize,
    pub surface_theta: usize,
    pub surface_phi: usize,
}

impl BallRule {
    /// All counts scaled from one order `n` (radial and polar `n`, azimuth `2n`).
    pub fn uniform(n: usize, core_radius: f64) -> Self {
        BallRule {
            n_r: n,
            n_theta: n,
            n_phi: 2 * n,
            core_radius,
            core_n_r: (n / 2).max(MIN_ORDER),
            core_n_theta: n / 2,
            core_n_phi: n,
            surface_theta: n,
            surface_phi: 2 * n,
        }
    }
}

/// C∞ step: 1 for `s ≤ ½`, 0 for `s ≥ 1`.
fn bump(s: f64) -> f64 {
    if s <= 0.5 {
        return 1.0;
    }
    if s >= 1.0 {
        return 0.0;
    }
    let t = 2.0 * s - 1.0;
    let psi = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    psi(1.0 - t) / (psi(1.0 - t) + psi(t))
}

fn dist(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn scaled(mut q: Quadrature, f: impl Fn(&Point) -> f64) -> Quadrature {
    let mut out = Quadrature { nodes: vec![], weights: vec![], normals: None };
    for (p, w) in q.nodes.drain(..).zip(q.weights.drain(..)) {
        let s = f(&p);
        if s != 0.0 {
            out.nodes.push(p);
            out.weights.push(w * s);
        }
    }
    out
}

impl Geometry {
    /// Slab `[a, b]` with `panels` equal Gauss panels of `order` points; `breaks` (interfaces,
    /// observation points) are added as panel edges so every integrand is smooth per panel.
    pub fn interval(a: f64, b: f64, breaks: &[f64], panels: usize, order: usize) -> Result<Self> {
        check_order(order)?;
        Ok(Geometry {
            region: Region::Interval { a, b },
            volume: Quadrature::panels(a, b, panels, breaks, order)?,
            surface: Quadrature::slab_faces(a, b),
            order,
        })
    }

    /// Ball with product Gauss rules. Each observation point gets a core ball carrying a smooth
    /// partition-of-unity factor; a symmetric angular rule centred on the point integrates the
    /// `1/R³` part of a kernel product as a spherical principal value.
    pub fn ball(center: Point, radius: f64, observation: &[Point], rule: BallRule) -> Result<Self> {
        check_order(rule.n_r.min(rule.n_theta).min(rule.core_n_theta).min(rule.core_n_r))?;
        if rule.n_phi % 2 == 1 || rule.core_n_phi % 2 == 1 {
            return Err(Error::Invalid("azimuthal counts must be even for a symmetric rule".into()));
        }
        let b = rule.core_radius;
        for (i, p) in observation.iter().enumerate() {
            if dist(p, &center) + b >= radius {
                return Err(Error::Precondition(format!("core {i} reaches the surface")));
            }
            for q in &observation[..i] {
                if dist(p, q) <= 2.0 * b {
                    return Err(Error::Precondition("observation cores overlap".into()));
                }
            }
        }
        let chi = |r: &Point| -> f64 { observation.iter().map(|p| bump(dist(r, p) / b)).sum() };
        let mut volume = scaled(Quadrature::shell(center, 0.0, radius, rule.n_r, rule.n_theta, rule.n_phi)?, |r| {
            1.0 - chi(r)
        });
        for p in observation {
            let core = Quadrature::shell(*p, 0.0, b, rule.core_n_r, rule.core_n_theta, rule.core_n_phi)?;
            volume = volume.join(scaled(core, |r| bump(dist(r, p) / b)));
        }
        Ok(Geometry {
            region: Region::Ball { center, radius },
            volume,
            surface: Quadrature::sphere(center, radius, rule.surface_theta, rule.surface_phi)?,
            order: rule.n_theta,
        })
    }

    /// Same region and surface without a volume rule (vacuum interiors).
    pub fn surface_only(region: Region, surface: Quadrature) -> Self {
        Geometry { region, volume: Quadrature { nodes: vec![], weights: vec![], normals: None }, surface, order: MIN_ORDER }
    }

    fn interior(&self, r: &Point) -> Result<()> {
        if self.region.contains(r) {
            Ok(())
        } else {
            Err(Error::Precondition(format!("point {r:?} is not strictly inside the geometry")))
        }
    }
}

fn check_order(n: usize) -> Result<()> {
    if n < MIN_ORDER {
        return Err(Error::Invalid(format!("quadrature order {n} below minimum {MIN_ORDER}")));
    }
    Ok(())
}

fn normals(q: &Quadrature) -> Result<&[Point]> {
    q.normals.as_deref().ok_or_else(|| Error::Invalid("surface rule without normals".into()))
}

fn loss(g: &dyn Kernel, r: &Point) -> Mat6 {
    anti_hermitian(&g.material(r))
}

/// `∫ g(r, r1)† ε̄_I g(r, r2) dV` including the local terms at r1 and r2.
pub fn volume_adjoint_first(g: &dyn Kernel, geom: &Geometry, r1: &Point, r2: &Point) -> Result<Mat6> {
    let mut v = geom.volume.try_sum(Mat6::zeros(), |r, w| {
        let e = loss(g, r);
        if e.iter().all(|z| *z == C64::new(0.0, 0.0)) {
            return Ok(Mat6::zeros());
        }
        Ok(g.eval(r, r1)?.adjoint() * e * g.eval(r, r2)? * cx(w))
    })?;
    if geom.region.contains(r1) {
        v += g.contact(r1).adjoint() * loss(g, r1) * g.eval(r1, r2)?;
    }
    if geom.region.contains(r2) {
        v += g.eval(r2, r1)?.adjoint() * loss(g, r2) * g.contact(r2);
    }
    Ok(v)
}

/// `∫ g(r1, r) ε̄_I g(r2, r)† dV` including the local terms at r1 and r2.
pub fn volume_adjoint_last(g: &dyn Kernel, geom: &Geometry, r1: &Point, r2: &Point) -> Result<Mat6> {
    let mut v = geom.volume.try_sum(Mat6::zeros(), |r, w| {
        let e = loss(g, r);
        if e.iter().all(|z| *z == C64::new(0.0, 0.0)) {
            return Ok(Mat6::zeros());
        }
        Ok(g.eval(r1, r)? * e * g.eval(r2, r)?.adjoint() * cx(w))
    })?;
    if geom.region.contains(r1) {
        v += g.contact(r1) * loss(g, r1) * g.eval(r2, r1)?.adjoint();
    }
    if geom.region.contains(r2) {
        v += g.eval(r1, r2)? * loss(g, r2) * g.contact(r2).adjoint();
    }
    Ok(v)
}

/// `∮ g(s, r1)† (n̄×) g(s, r2) dS` with outward normals.
pub fn surface_adjoint_first(g: &dyn Kernel, surface: &Quadrature, r1: &Point, r2: &Point) -> Result<Mat6> {
    let ns = normals(surface)?;
    let terms = surface
        .nodes
        .iter()
        .zip(&surface.weights)
        .zip(ns)
        .map(|((s, &w), n)| Ok(g.eval(s, r1)?.adjoint() * dual_cross(*n)? * g.eval(s, r2)? * cx(w)))
        .collect::<Result<Vec<Mat6>>>()?;
    Ok(crate::quadrature::pairwise_sum(&terms, Mat6::zeros()))
}

/// `∮ g(r1, s) (n̄×) g(r2, s)† dS` with outward normals.
pub fn surface_adjoint_last(g: &dyn Kernel, surface: &Quadrature, r1: &Point, r2: &Point) -> Result<Mat6> {
    let ns = normals(surface)?;
    let terms = surface
        .nodes
        .iter()
        .zip(&surface.weights)
        .zip(ns)
        .map(|((s, &w), n)| Ok(g.eval(r1, s)? * dual_cross(*n)? * g.eval(r2, s)?.adjoint() * cx(w)))
        .collect::<Result<Vec<Mat6>>>()?;
    Ok(crate::quadrature::pairwise_sum(&terms, Mat6::zeros()))
}

/// `g(r1, r2) − g(r2, r1)†`.
pub fn kernel_defect(g: &dyn Kernel, r1: &Point, r2: &Point) -> Result<Mat6> {
    Ok(g.eval(r1, r2)? - g.eval(r2, r1)?.adjoint())
}

#[derive(Debug, Clone)]
pub struct OpticalTheorem {
    /// `g(r1, r2) − g(r2, r1)†`.
    pub lhs: Mat6,
    /// `2ik0 ∫ g† ε̄_I g dV`.
    pub volume: Mat6,
    /// `−i ∮ g† (n̄×) g dS`.
    pub surface: Mat6,
    pub report: IdentityReport,
    /// `Im g = k0 ∫ g ε̄_I g† dV + ½ ∮ g (n̄×) g† dS`, checked on its own.
    pub partition: IdentityReport,
    pub partition_volume: Mat6,
    pub partition_surface: Mat6,
}

pub fn optical_theorem(g: &dyn Kernel, geom: &Geometry, r1: &Point, r2: &Point, tol: f64) -> Result<OpticalTheorem> {
    check_order(geom.order)?;
    geom.interior(r1)?;
    geom.interior(r2)?;
    let k0 = g.k0();
    let lhs = kernel_defect(g, r1, r2)?;
    let volume = volume_adjoint_first(g, geom, r1, r2)? * C64::new(0.0, 2.0 * k0);
    let surface = surface_adjoint_first(g, &geom.surface, r1, r2)? * C64::new(0.0, -1.0);
    let report = IdentityReport::compare("optical_theorem", &lhs, &(volume + surface), tol)
        .param("k0", k0)
        .param("order", geom.order as f64)
        .channel("volume", frobenius(&volume))
        .channel("surface", frobenius(&surface));
    let im_g = lhs / C64::new(0.0, 2.0);
    let partition_volume = volume_adjoint_last(g, geom, r1, r2)? * cx(k0);
    let partition_surface = surface_adjoint_last(g, &geom.surface, r1, r2)? * cx(0.5);
    let partition = IdentityReport::compare("optical_theorem_partition", &im_g, &(partition_volume + partition_surface), tol)
        .param("k0", k0)
        .param("order", geom.order as f64)
        .channel("volume", frobenius(&partition_volume))
        .channel("surface", frobenius(&partition_surface));
    Ok(OpticalTheorem { lhs, volume, surface, report, partition, partition_volume, partition_surface })
}

#[derive(Debug, Clone)]
pub struct Resolvent {
    /// `g − g†` against `2ik0 ∫ g† ε̄_I g`.
    pub adjoint_first: IdentityReport,
    /// `g − g†` against `2ik0 ∫ g ε̄_I g†`.
    pub adjoint_last: IdentityReport,
    /// Relative difference between the two volume terms.
    pub ordering_gap: f64,
}

/// Both orderings of the volume-only (fully absorptive) form; the surface term is dropped.
pub fn resolvent_identity(g: &dyn Kernel, geom: &Geometry, r1: &Point, r2: &Point, tol: f64) -> Result<Resolvent> {
    check_order(geom.order)?;
    geom.interior(r1)?;
    geom.interior(r2)?;
    let k0 = g.k0();
    let lhs = kernel_defect(g, r1, r2)?;
    let scale = C64::new(0.0, 2.0 * k0);
    let a = volume_adjoint_first(g, geom, r1, r2)? * scale;
    let b = volume_adjoint_last(g, geom, r1, r2)? * scale;
    let gap = frobenius(&(a - b)) / frobenius(&a).max(frobenius(&b)).max(REL_FLOOR);
    Ok(Resolvent {
        adjoint_first: IdentityReport::compare("resolvent", &lhs, &a, tol).param("k0", k0),
        adjoint_last: IdentityReport::compare("resolvent_alternative", &lhs, &b, tol).param("k0", k0),
        ordering_gap: gap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSource {
    pub position: Point,
    pub strength: Vec6,
}

/// A source made of point terms and an optional smooth density integrated with the volume rule.
#[derive(Clone, Copy)]
pub struct Source<'a> {
    pub points: &'a [PointSource],
    pub density: Option<&'a (dyn Fn(&Point) -> Vec6 + Sync)>,
}

impl<'a> Source<'a> {
    pub fn points(points: &'a [PointSource]) -> Self {
        Source { points, density: None }
    }
}

pub type FieldFn<'a> = &'a (dyn Fn(&Point) -> Result<Vec6> + Sync);

#[derive(Debug, Clone)]
pub struct Interior {
    pub direct: Vec6,
    pub volume: Vec6,
    pub surface: Vec6,
    pub report: IdentityReport,
}

/// Reconstructs `field(r)` from the sources inside the geometry and the boundary values of
/// `field`: `∫ g S dV′ − i ∮ g (n̄×) E dS`.
pub fn interior_representation(
    g: &dyn Kernel,
    geom: &Geometry,
    source: Source,
    field: FieldFn,
    r: &Point,
    tol: f64,
) -> Result<Interior> {
    geom.interior(r)?;
    let mut volume = Vec6::zeros();
    for p in source.points {
        if geom.region.contains(&p.position) {
            volume += g.eval(r, &p.position)? * p.strength;
        } else if on_surface(&geom.region, &p.position) {
            return Err(Error::Precondition("source touches the surface".into()));
        }
    }
    if let Some(rho) = source.density {
        volume += geom.volume.try_sum(Vec6::zeros(), |rp, w| Ok(g.eval(r, rp)? * rho(rp) * cx(w)))?;
        volume += g.contact(r) * rho(r);
    }
    let ns = normals(&geom.surface)?;
    let terms = geom
        .surface
        .nodes
        .iter()
        .zip(&geom.surface.weights)
        .zip(ns)
        .map(|((s, &w), n)| Ok(g.eval(r, s)? * dual_cross(*n)? * field(s)? * C64::new(0.0, -w)))
        .collect::<Result<Vec<Vec6>>>()?;
    let surface = crate::quadrature::pairwise_sum(&terms, Vec6::zeros());
    let direct = field(r)?;
    let report = IdentityReport::compare("interior", &direct, &(volume + surface), tol)
        .param("k0", g.k0())
        .channel("volume", frobenius(&volume))
        .channel("surface", frobenius(&surface));
    Ok(Interior { direct, volume, surface, report })
}

fn on_surface(region: &Region, p: &Point) -> bool {
    match *region {
        Region::Interval { a, b } => (p[2] - a).abs() <= 1e-12 * (b - a) || (p[2] - b).abs() <= 1e-12 * (b - a),
        Region::Ball { center, radius } => (dist(p, &center) - radius).abs() <= 1e-12 * radius,
    }
}

#[derive(Debug, Clone)]
pub struct Poynting {
    /// `Re⟨𝓙|E⟩` with `𝓙 = −iS`.
    pub source_power: f64,
    /// `−k0 ⟨E|ε̄_I E⟩`.
    pub dissipation: f64,
    /// `½ ⟨E|(n̄×)E⟩_S`.
    pub flux: f64,
    pub report: IdentityReport,
}

/// Power balance of a driven field. `medium` supplies `k0` and `ε̄`; the field at a point source
/// must be the mean of its one-sided limits.
pub fn poynting_balance(medium: &dyn Kernel, geom: &Geometry, source: Source, field: FieldFn, tol: f64) -> Result<Poynting> {
    let k0 = medium.k0();
    let mut drive = C64::new(0.0, 0.0);
    for p in source.points {
        if geom.region.contains(&p.position) {
            let j = p.strength * C64::new(0.0, -1.0);
            drive += j.dotc(&field(&p.position)?);
        }
    }
    if let Some(rho) = source.density {
        drive += geom.volume.try_sum(C64::new(0.0, 0.0), |r, w| {
            let j = rho(r) * C64::new(0.0, -1.0);
            Ok(j.dotc(&field(r)?) * w)
        })?;
    }
    let absorbed = geom.volume.try_sum(0.0, |r, w| {
        let e = field(r)?;
        Ok(e.dotc(&(loss(medium, r) * e)).re * w)
    })?;
    let ns = normals(&geom.surface)?;
    let mut flux_terms = vec![];
    for ((s, &w), n) in geom.surface.nodes.iter().zip(&geom.surface.weights).zip(ns) {
        let e = field(s)?;
        flux_terms.push(e.dotc(&(dual_cross(*n)? * e)).re * w);
    }
    let flux = 0.5 * crate::quadrature::pairwise_sum(&flux_terms, 0.0);
    let dissipation = -k0 * absorbed;
    let report = IdentityReport::compare_scalar("poynting", cx(drive.re), cx(dissipation + flux), tol)
        .param("k0", k0)
        .channel("dissipation", dissipation.abs())
        .channel("flux", flux.abs());
    Ok(Poynting { source_power: drive.re, dissipation, flux, report })
}

/// `g(r1, r2)` against `Π g(r2, r1)ᵀ Π`, the second kernel taken from the reciprocal partner.
pub fn reciprocity_residual(g: &dyn Kernel, r1: &Point, r2: &Point, tol: f64) -> Result<IdentityReport> {
    let pi = flip_pi::<f64>();
    let a = g.eval(r1, r2)?;
    let b = match g.partner() {
        Some(p) => p.eval(r2, r1)?,
        None => g.eval(r2, r1)?,
    };
    Ok(IdentityReport::compare("reciprocity", &a, &(pi * b.transpose() * pi), tol).param("k0", g.k0()))
}

/// `aᵀ Π b`.
fn reciprocal(a: &Vec6, b: &Vec6) -> C64 {
    (a.transpose() * flip_pi::<f64>() * b)[(0, 0)]
}

#[derive(Debug, Clone)]
pub struct Lorentz {
    /// `⟨E1|S2⟩_R − ⟨S1|E2⟩_R`.
    pub volume: C64,
    /// `i ⟨E1|(n̄×) E2⟩_{R,S}`.
    pub surface: C64,
    pub report: IdentityReport,
}

/// Lorentz reciprocity between two driven problems in the same medium. For planar problems at
/// nonzero transverse wavevector the second problem lives at the reversed wavevector.
pub fn lorentz_reciprocity(
    geom: &Geometry,
    pair1: (&[PointSource], FieldFn),
    pair2: (&[PointSource], FieldFn),
    tol: f64,
) -> Result<Lorentz> {
    let bracket = |src: &[PointSource], field: FieldFn| -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for p in src {
            if geom.region.contains(&p.position) {
                acc += reciprocal(&field(&p.position)?, &p.strength);
            } else if on_surface(&geom.region, &p.position) {
                return Err(Error::Precondition("source touches the surface".into()));
            }
        }
        Ok(acc)
    };
    let volume = bracket(pair2.0, pair1.1)? - bracket(pair1.0, pair2.1)?;
    let ns = normals(&geom.surface)?;
    let mut terms = vec![];
    for ((s, &w), n) in geom.surface.nodes.iter().zip(&geom.surface.weights).zip(ns) {
        terms.push(reciprocal(&pair1.1(s)?, &(dual_cross(*n)? * pair2.1(s)?)) * w);
    }
    let surface = crate::quadrature::pairwise_sum(&terms, C64::new(0.0, 0.0)) * C64::new(0.0, 1.0);
    let report = IdentityReport::compare_scalar("lorentz_reciprocity", volume, surface, tol)
        .channel("volume", volume.norm())
        .channel("surface", surface.norm());
    Ok(Lorentz { volume, surface, report })
}

/// Polar rule on the plane `z`, truncated at `radius` with a cosine taper over the outer 10%.
pub fn truncated_plane(z: f64, radius: f64, panels: usize, order: usize, n_phi: usize, normal_z: f64) -> Result<Quadrature> {
    let q = Quadrature::disk(z, radius, panels, order, n_phi, normal_z)?;
    let edge = 0.9 * radius;
    let mut out = Quadrature { nodes: vec![], weights: vec![], normals: Some(vec![]) };
    for (p, &w) in q.nodes.iter().zip(&q.weights) {
        let rho = p[0].hypot(p[1]);
        let t = if rho <= edge { 1.0 } else { 0.5 * (1.0 + (std::f64::consts::PI * (rho - edge) / (radius - edge)).cos()) };
        if t > 0.0 {
            out.nodes.push(*p);
            out.weights.push(w * t);
            out.normals.as_mut().unwrap().push([0.0, 0.0, normal_z]);
        }
    }
    Ok(out)
}

/// `g(r3, r1)` against `∮ g(r3, s)(−i n̄×) g(s, r1) dS` over a surface separating the points.
/// The identity holds with normals pointing toward `r1`; reversed normals flip the sign.
pub fn huygens(g: &dyn Kernel, surface: &Quadrature, r1: &Point, r3: &Point, tol: f64) -> Result<IdentityReport> {
    let ns = normals(surface)?;
    let (s0, n0) = match (surface.nodes.first(), ns.first()) {
        (Some(s), Some(n)) => (s, n),
        _ => return Err(Error::Invalid("empty surface".into())),
    };
    let side = |r: &Point| (0..3).map(|k| (r[k] - s0[k]) * n0[k]).sum::<f64>();
    if side(r1) * side(r3) >= 0.0 {
        return Err(Error::Precondition("points must lie on opposite sides of the surface".into()));
    }
    let lhs = g.eval(r3, r1)?;
    let terms = surface
        .nodes
        .iter()
        .zip(&surface.weights)
        .zip(ns)
        .map(|((s, &w), n)| Ok(g.eval(r3, s)? * dual_cross(*n)? * g.eval(s, r1)? * C64::new(0.0, -w)))
        .collect::<Result<Vec<Mat6>>>()?;
    let rhs = crate::quadrature::pairwise_sum(&terms, Mat6::zeros());
    Ok(IdentityReport::compare("huygens", &lhs, &rhs, tol).param("k0", g.k0()).param("nodes", surface.len() as f64))
}
