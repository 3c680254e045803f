//! Identity catalog runners: one selected identity on one `(ω, k⊥)` slice.

use crate::config::Loaded;
use crate::error::{CliError, Context};
use duplex::green1d::{LayerStack, PlanarGreen};
use duplex::identities::{
    huygens, interior_representation, lorentz_reciprocity, optical_theorem, poynting_balance, reciprocity_residual,
    resolvent_identity, Geometry, IdentityReport, PointSource, Region, Source,
};
use duplex::quantum::{
    cascade, field_commutator, io_relation, pseudo_unitarity_residual, tangential_boundary_weight, Budget, NoiseQuadrature,
};
use duplex::{Point, Quadrature, Vec6, C64};

/// 2·Im(k_z)·L for the uniform-absorber checks: the dropped surface term is about e^(−20).
const ABSORBER_DEPTH: f64 = 20.0;
const MAX_ABSORBER_PANELS: usize = 200_000;

pub struct Slice<'a> {
    pub loaded: &'a Loaded,
    pub omega: f64,
    pub k_perp: [f64; 2],
}

fn pt(z: f64) -> Point {
    [0.0, 0.0, z]
}

fn source(z: f64, s: [f64; 6]) -> PointSource {
    PointSource { position: pt(z), strength: Vec6::from_fn(|i, _| C64::new(s[i], 0.0)) }
}

const DIPOLE_A: [f64; 6] = [1.0, -0.5, 0.3, 0.2, 0.4, -0.1];
const DIPOLE_B: [f64; 6] = [0.2, 0.9, -0.4, 0.6, -0.3, 0.5];
/// Normal components of a sheet source radiate a local δ-field whose power is undefined in
/// lossy media, so the power balance is driven tangentially.
const DIPOLE_T: [f64; 6] = [1.0, -0.5, 0.0, 0.2, 0.4, 0.0];

fn planar_field<'a>(g: &'a PlanarGreen, sources: &'a [PointSource]) -> impl Fn(&Point) -> duplex::Result<Vec6> + Sync + 'a {
    let planar: Vec<(f64, Vec6)> = sources.iter().map(|p| (p.position[2], p.strength)).collect();
    move |r| g.field(&planar, r[2])
}

impl<'a> Slice<'a> {
    fn ctx(&self, what: &str) -> String {
        format!("{what} at omega = {}, k_perp = {:?}", self.omega, self.k_perp)
    }

    fn stack(&self, k_perp: [f64; 2]) -> Result<LayerStack, CliError> {
        let profile = self.loaded.materials.profile(self.omega).context(|| self.ctx("material profile"))?;
        LayerStack::from_profile(&profile, k_perp, self.omega).context(|| self.ctx("layer stack"))
    }

    fn kernel(&self, k_perp: [f64; 2]) -> Result<PlanarGreen, CliError> {
        PlanarGreen::new(&self.stack(k_perp)?).context(|| self.ctx("planar kernel"))
    }

    fn box_geometry(&self, g: &PlanarGreen, extra: &[f64]) -> Result<Geometry, CliError> {
        let geo = self.loaded.geometry()?;
        let [a, b] = geo.bounds;
        let mut breaks: Vec<f64> = g.stack().interfaces().into_iter().filter(|z| *z > a && *z < b).collect();
        breaks.extend_from_slice(extra);
        let q = self.loaded.config.quadrature;
        Geometry::interval(a, b, &breaks, q.panels, q.order).context(|| self.ctx("box quadrature"))
    }

    fn tag(&self, r: IdentityReport, z: Option<(f64, f64)>) -> IdentityReport {
        let r = r.param("omega", self.omega).param("kx", self.k_perp[0]).param("ky", self.k_perp[1]);
        match z {
            Some((z1, z2)) => r.param("z1", z1).param("z2", z2),
            None => r,
        }
    }

    pub fn run(&self, identity: &str) -> Result<Vec<IdentityReport>, CliError> {
        let tol = self.loaded.tolerance(identity);
        let geo = self.loaded.geometry()?;
        let [a, b] = geo.bounds;
        let units = self.loaded.config.units;
        let g = self.kernel(self.k_perp)?;
        let mut out = vec![];
        match identity {
            "optical_theorem" => {
                for &[z1, z2] in &geo.pairs {
                    let geom = self.box_geometry(&g, &[z1, z2])?;
                    let ot = optical_theorem(&g, &geom, &pt(z1), &pt(z2), tol).context(|| self.ctx(identity))?;
                    out.push(self.tag(ot.report, Some((z1, z2))));
                    out.push(self.tag(ot.partition, Some((z1, z2))));
                }
            }
            "resolvent" => {
                let absorber = self.absorber(&g)?;
                for &[z1, z2] in &geo.pairs {
                    let (lo, hi) = (z1.min(z2), z1.max(z2));
                    let kz = absorber.normal_index_at(lo) * absorber.k0();
                    let depth = ABSORBER_DEPTH / (2.0 * kz.im);
                    let len = hi - lo + 2.0 * depth;
                    let panels = (len * kz.norm() / std::f64::consts::PI).ceil() as usize + 1;
                    if panels > MAX_ABSORBER_PANELS {
                        return Err(CliError::Config(format!(
                            "{}: absorber too weakly lossy for the volume-only check (Im k_z = {:.3e})",
                            self.ctx(identity),
                            kz.im
                        )));
                    }
                    let geom = Geometry::interval(lo - depth, hi + depth, &[z1, z2], panels, 24)
                        .context(|| self.ctx(identity))?;
                    let r = resolvent_identity(&absorber, &geom, &pt(z1), &pt(z2), tol).context(|| self.ctx(identity))?;
                    out.push(self.tag(r.adjoint_first.param("depth", depth), Some((z1, z2))));
                    out.push(self.tag(r.adjoint_last.param("depth", depth), Some((z1, z2))));
                }
            }
            "interior" => {
                for &[z1, z2] in &geo.pairs {
                    let src = [source(z1, DIPOLE_A), source(a - 0.3 * (b - a), DIPOLE_B)];
                    let field = planar_field(&g, &src);
                    let geom = self.box_geometry(&g, &[z1, z2])?;
                    let rep = interior_representation(&g, &geom, Source::points(&src), &field, &pt(z2), tol)
                        .context(|| self.ctx(identity))?;
                    out.push(self.tag(rep.report, Some((z1, z2))));
                }
            }
            "poynting" => {
                for &[z1, z2] in &geo.pairs {
                    let src = [source(z1, DIPOLE_T)];
                    let field = planar_field(&g, &src);
                    let geom = self.box_geometry(&g, &[z1])?;
                    let p = poynting_balance(&g, &geom, Source::points(&src), &field, tol).context(|| self.ctx(identity))?;
                    out.push(self.tag(p.report, Some((z1, z2))));
                }
            }
            "reciprocity" => {
                for &[z1, z2] in &geo.pairs {
                    for (p, q) in [(z1, z2), (z2, z1)] {
                        let r = reciprocity_residual(&g, &pt(p), &pt(q), tol).context(|| self.ctx(identity))?;
                        out.push(self.tag(r, Some((p, q))));
                    }
                }
            }
            "lorentz_reciprocity" => {
                let partner = self.kernel([-self.k_perp[0], -self.k_perp[1]])?;
                let geom = Geometry::surface_only(Region::Interval { a, b }, Quadrature::slab_faces(a, b));
                for &[z1, z2] in &geo.pairs {
                    let s1 = [source(z1, DIPOLE_A)];
                    let s2 = [source(b + 0.3 * (b - a), DIPOLE_B)];
                    let (f1, f2) = (planar_field(&g, &s1), planar_field(&partner, &s2));
                    let l = lorentz_reciprocity(&geom, (&s1, &f1), (&s2, &f2), tol).context(|| self.ctx(identity))?;
                    out.push(self.tag(l.report, Some((z1, z2))));
                }
            }
            "huygens" => {
                for &[z1, z2] in &geo.pairs {
                    let mid = 0.5 * (z1 + z2);
                    let toward = if z1 < mid { -1.0 } else { 1.0 };
                    let r = huygens(&g, &Quadrature::plane_point(mid, toward), &pt(z1), &pt(z2), tol)
                        .context(|| self.ctx(identity))?;
                    out.push(self.tag(r, Some((z1, z2))));
                }
            }
            "commutator_closure" => {
                for &[z1, z2] in &geo.pairs {
                    let geom = self.box_geometry(&g, &[z1, z2])?;
                    let c = field_commutator(&g, &geom, &pt(z1), &pt(z2), units, tol).context(|| self.ctx(identity))?;
                    out.push(self.tag(c.report, Some((z1, z2))));
                }
            }
            "io_noise" => {
                let t = g.transfer(a, b).context(|| self.ctx(identity))?;
                let input = tangential_boundary_weight(1.0, units.k0(self.omega), units);
                let io = io_relation(&g, &t, &input, self.noise_quadrature(), units, tol).context(|| self.ctx(identity))?;
                out.push(self.tag(io.report, Some((a, b))));
            }
            "pseudo_unitarity" => {
                let reference = PlanarGreen::new(&lossless(g.stack())).context(|| self.ctx(identity))?;
                let t = reference.transfer(a, b).context(|| self.ctx(identity))?;
                out.push(self.tag(pseudo_unitarity_residual(&t, tol), Some((a, b))));
            }
            "cascade" => {
                let m = 0.5 * (a + b);
                let quad = self.noise_quadrature();
                let stages = [
                    Budget::stage(&g, a, m, quad, units).context(|| self.ctx(identity))?,
                    Budget::stage(&g, m, b, quad, units).context(|| self.ctx(identity))?,
                ];
                let c = cascade(&stages, self.omega, self.k_perp, units, tol).context(|| self.ctx(identity))?;
                out.push(self.tag(c.closure, Some((a, b))));
            }
            other => return Err(CliError::UnknownIdentity(other.into())),
        }
        Ok(out)
    }

    pub fn noise_quadrature(&self) -> NoiseQuadrature {
        let q = self.loaded.config.quadrature;
        NoiseQuadrature { panels: 2 * q.panels, order: q.order }
    }

    /// Uniform medium made of the configured absorber material.
    fn absorber(&self, g: &PlanarGreen) -> Result<PlanarGreen, CliError> {
        let geo = self.loaded.geometry()?;
        let files = &self.loaded.materials;
        let name = match (&geo.absorber, files.layers.first()) {
            (Some(n), _) => n.clone(),
            (None, Some(l)) => l.material.clone(),
            (None, None) => return Err(CliError::Config("resolvent needs an absorber material or at least one layer".into())),
        };
        let tensor = files.material(&name).and_then(|m| m.tensor(self.omega)).context(|| self.ctx("absorber"))?;
        let stack = LayerStack::homogeneous(tensor, g.stack().k_perp, self.omega).context(|| self.ctx("absorber"))?;
        let k = PlanarGreen::new(&stack).context(|| self.ctx("absorber"))?;
        if !(k.normal_index_at(0.0).im > 0.0) {
            return Err(CliError::Config(format!("{}: absorber '{name}' is lossless", self.ctx("resolvent"))));
        }
        Ok(k)
    }
}

/// Same geometry with every medium replaced by its Hermitian part.
pub fn lossless(stack: &LayerStack) -> LayerStack {
    let strip = |m: &duplex::media::MaterialTensor<f64>| {
        let re = |x: &duplex::Mat3| (x + x.adjoint()) * C64::new(0.5, 0.0);
        duplex::media::MaterialTensor { eps: re(&m.eps), mu: re(&m.mu) }
    };
    LayerStack {
        below: strip(&stack.below),
        layers: stack.layers.iter().map(|(d, m)| (*d, strip(m))).collect(),
        above: strip(&stack.above),
        ..stack.clone()
    }
}
