//! Dual-field algebra: six-component `[E; Z0 H]` vectors, the dual cross product,
//! the field flip, inner products and the discrete dual curl on a staggered line grid.

use crate::error::{Error, Result};
use crate::quadrature::{Point, Quadrature};
use crate::scalar::Real;
use nalgebra::{SMatrix, SVector};
use num_complex::Complex;

pub type Mat6<T> = SMatrix<Complex<T>, 6, 6>;
pub type Vec6<T> = SVector<Complex<T>, 6>;
pub type Mat3<T> = SMatrix<Complex<T>, 3, 3>;
pub type Mat2<T> = SMatrix<Complex<T>, 2, 2>;

pub fn cx<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

fn im_unit<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

/// Real matrix of `v ↦ a × v`.
pub fn cross_matrix<T: Real>(a: Point<T>) -> SMatrix<T, 3, 3> {
    let z = T::zero();
    SMatrix::<T, 3, 3>::new(z, -a[2], a[1], a[2], z, -a[0], -a[1], a[0], z)
}

pub fn block_diag<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Mat6<T> {
    let mut m = Mat6::<T>::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(a);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(b);
    m
}

/// The four 3×3 blocks `[ee, eh, he, hh]`.
pub fn blocks<T: Real>(m: &Mat6<T>) -> [Mat3<T>; 4] {
    [
        m.fixed_view::<3, 3>(0, 0).into_owned(),
        m.fixed_view::<3, 3>(0, 3).into_owned(),
        m.fixed_view::<3, 3>(3, 0).into_owned(),
        m.fixed_view::<3, 3>(3, 3).into_owned(),
    ]
}

/// Dual cross product `n̄×`: `[E; h] ↦ [n×h; −n×E]`, without the unit-length check.
pub fn dual_cross_unchecked<T: Real>(n: Point<T>) -> Mat6<T> {
    let c = cross_matrix(n).map(cx);
    let mut m = Mat6::<T>::zeros();
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(&c);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-c));
    m
}

/// Dual cross product `n̄×` for a unit normal.
pub fn dual_cross<T: Real>(n: Point<T>) -> Result<Mat6<T>> {
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    let tol = T::lit(1e4) * T::eps();
    if !((norm - T::one()).abs() <= tol) {
        return Err(Error::NonUnitNormal(norm.as_f64()));
    }
    Ok(dual_cross_unchecked(n))
}

/// Field flip `Π = diag(I3, −I3)`.
pub fn flip_pi<T: Real>() -> Mat6<T> {
    Mat6::<T>::from_diagonal(&Vec6::<T>::from_fn(|i, _| if i < 3 { cx(T::one()) } else { cx(-T::one()) }))
}

/// Symplectic unit `[[0, 1], [−1, 0]]`.
pub fn symplectic_j<T: Real>() -> SMatrix<T, 2, 2> {
    SMatrix::<T, 2, 2>::new(T::zero(), T::one(), -T::one(), T::zero())
}

/// `diag(P_t, P_t)` with `P_t = I − n nᵀ`.
pub fn tangential_projector<T: Real>(n: Point<T>) -> Mat6<T> {
    let nn = SMatrix::<T, 3, 1>::new(n[0], n[1], n[2]);
    let p = (SMatrix::<T, 3, 3>::identity() - nn * nn.transpose()).map(cx);
    block_diag(&p, &p)
}

/// A uniform line grid along z with the magnetic sector staggered by half a cell.
///
/// Electric samples sit on the nodes `origin + i·spacing`, `i = 0..=cells`; magnetic samples on
/// the half nodes `origin + (i + ½)·spacing`, `i = 0..cells`. Fields vary transversally as
/// `exp(i k⊥·ρ)` with `k⊥ = transverse`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    pub origin: T,
    pub spacing: T,
    pub cells: usize,
    pub transverse: [T; 2],
}

impl<T: Real> Grid<T> {
    pub fn new(origin: T, spacing: T, cells: usize) -> Result<Self> {
        if !(spacing > T::zero()) || cells == 0 {
            return Err(Error::DegenerateGrid("need positive spacing and at least one cell".into()));
        }
        Ok(Grid { origin, spacing, cells, transverse: [T::zero(), T::zero()] })
    }

    /// Grid covering [a, b] with `cells` cells.
    pub fn span(a: T, b: T, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::DegenerateGrid("need at least one cell".into()));
        }
        Self::new(a, (b - a) / T::from_usize(cells).unwrap(), cells)
    }

    pub fn with_transverse(mut self, kx: T, ky: T) -> Self {
        self.transverse = [kx, ky];
        self
    }

    pub fn node(&self, i: usize) -> T {
        self.origin + self.spacing * T::from_usize(i).unwrap()
    }

    pub fn half_node(&self, i: usize) -> T {
        self.origin + self.spacing * (T::from_usize(i).unwrap() + T::lit(0.5))
    }

    pub fn end(&self) -> T {
        self.node(self.cells)
    }

    /// Number of samples (electric nodes).
    pub fn samples(&self) -> usize {
        self.cells + 1
    }

    pub fn nodes(&self) -> Vec<Point<T>> {
        (0..self.samples()).map(|i| [T::zero(), T::zero(), self.node(i)]).collect()
    }

    /// Trapezoid rule on the electric nodes.
    pub fn quadrature(&self) -> Result<Quadrature<T>> {
        Quadrature::trapezoid(self.origin, self.spacing, self.samples())
    }

    /// The two end faces with outward normals.
    pub fn faces(&self) -> Quadrature<T> {
        Quadrature::slab_faces(self.origin, self.end())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layout<T> {
    /// Values given pointwise at these positions (all six components collocated).
    Points(Vec<Point<T>>),
    /// Values on a staggered line grid. Sample `i` holds E at node `i` and h at half node `i`;
    /// the magnetic slot of the last sample is unused and kept at zero.
    Staggered(Grid<T>),
}

/// Six-component `[E; Z0 H]` field.
#[derive(Debug, Clone, PartialEq)]
pub struct DualField<T: Real> {
    pub layout: Layout<T>,
    pub values: Vec<Vec6<T>>,
    pub omega: T,
}

/// Dual current `[Z0 J_E; J_M]`; the Maxwell right-hand side is `S = i·J`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSource<T: Real> {
    pub current: DualField<T>,
}

impl<T: Real> DualSource<T> {
    pub fn new(current: DualField<T>) -> Self {
        DualSource { current }
    }

    /// `S = i J`.
    pub fn rhs(&self) -> DualField<T> {
        self.current.map(|v| v * im_unit::<T>())
    }
}

/// Output of [`dual_curl_apply`]: the field plus the samples where one-sided stencils were used.
#[derive(Debug, Clone, PartialEq)]
pub struct CurlOutput<T: Real> {
    pub field: DualField<T>,
    pub one_sided: Vec<usize>,
}

impl<T: Real> DualField<T> {
    pub fn from_points<F: Fn(&Point<T>) -> Vec6<T>>(points: Vec<Point<T>>, omega: T, f: F) -> Self {
        let values = points.iter().map(&f).collect();
        DualField { layout: Layout::Points(points), values, omega }
    }

    /// Samples `f` on a staggered grid: E rows at nodes, h rows at half nodes.
    pub fn from_grid<F: Fn(T) -> Vec6<T>>(grid: &Grid<T>, omega: T, f: F) -> Self {
        let n = grid.samples();
        let values = (0..n)
            .map(|i| {
                let e = f(grid.node(i));
                let h = if i < grid.cells { f(grid.half_node(i)) } else { Vec6::zeros() };
                Vec6::from_fn(|k, _| if k < 3 { e[k] } else { h[k] })
            })
            .collect();
        DualField { layout: Layout::Staggered(grid.clone()), values, omega }
    }

    pub fn map<F: Fn(Vec6<T>) -> Vec6<T>>(&self, f: F) -> Self {
        DualField { layout: self.layout.clone(), values: self.values.iter().map(|v| f(*v)).collect(), omega: self.omega }
    }

    /// Collocated copy: staggered magnetic samples are interpolated to the electric nodes
    /// (second order, one-sided at the two ends). Point layouts are returned unchanged.
    pub fn collocated(&self) -> Result<Self> {
        match &self.layout {
            Layout::Points(_) => Ok(self.clone()),
            Layout::Staggered(g) => {
                if g.cells < 3 {
                    return Err(Error::DegenerateGrid("need at least 3 cells".into()));
                }
                let hs = magnetic_at_nodes(g, &self.values);
                let values = self
                    .values
                    .iter()
                    .zip(&hs)
                    .map(|(v, h)| Vec6::from_fn(|k, _| if k < 3 { v[k] } else { h[k - 3] }))
                    .collect();
                Ok(DualField { layout: Layout::Points(g.nodes()), values, omega: self.omega })
            }
        }
    }

    pub fn points(&self) -> Vec<Point<T>> {
        match &self.layout {
            Layout::Points(p) => p.clone(),
            Layout::Staggered(g) => g.nodes(),
        }
    }
}

fn same_point<T: Real>(a: &Point<T>, b: &Point<T>) -> bool {
    let tol = T::eps().sqrt();
    (0..3).all(|k| (a[k] - b[k]).abs() <= tol * (T::one() + a[k].abs().max(b[k].abs())))
}

fn check_pair<T: Real>(f1: &DualField<T>, f2: &DualField<T>) -> Result<()> {
    if f1.layout != f2.layout || f1.values.len() != f2.values.len() {
        return Err(Error::GridMismatch);
    }
    if f1.omega != f2.omega {
        return Err(Error::FrequencyMismatch);
    }
    Ok(())
}

fn weighted_sum<T: Real, F>(f1: &DualField<T>, f2: &DualField<T>, q: &Quadrature<T>, form: F) -> Result<Complex<T>>
where
    F: Fn(&Vec6<T>, &Vec6<T>) -> Complex<T>,
{
    check_pair(f1, f2)?;
    let a = f1.collocated()?;
    let b = f2.collocated()?;
    let pts = a.points();
    if q.nodes.len() != pts.len() || !q.nodes.iter().zip(&pts).all(|(x, y)| same_point(x, y)) {
        return Err(Error::QuadratureMismatch("nodes differ from the field samples".into()));
    }
    let terms: Vec<Complex<T>> = a
        .values
        .iter()
        .zip(&b.values)
        .zip(&q.weights)
        .map(|((x, y), &w)| form(x, y) * cx(w))
        .collect();
    Ok(crate::quadrature::pairwise_sum(&terms, cx(T::zero())))
}

/// `∫ f1† f2 dV` by the quadrature `q`, whose nodes must coincide with the samples.
pub fn energy_inner<T: Real>(f1: &DualField<T>, f2: &DualField<T>, q: &Quadrature<T>) -> Result<Complex<T>> {
    weighted_sum(f1, f2, q, |x, y| x.dotc(y))
}

/// `∫ f1ᵀ Π f2 dV` (bilinear).
pub fn reciprocal_inner<T: Real>(f1: &DualField<T>, f2: &DualField<T>, q: &Quadrature<T>) -> Result<Complex<T>> {
    weighted_sum(f1, f2, q, |x, y| {
        (0..6).fold(cx(T::zero()), |acc, k| if k < 3 { acc + x[k] * y[k] } else { acc - x[k] * y[k] })
    })
}

/// `∮ f1† (n̄× f2) dS` on the surface rule; every surface node must be one of the samples.
pub fn surface_pairing<T: Real>(
    f1: &DualField<T>,
    f2: &DualField<T>,
    surface: &Quadrature<T>,
    normals: &[Point<T>],
) -> Result<Complex<T>> {
    check_pair(f1, f2)?;
    if normals.len() != surface.nodes.len() {
        return Err(Error::QuadratureMismatch("one normal per surface node required".into()));
    }
    let a = f1.collocated()?;
    let b = f2.collocated()?;
    let pts = a.points();
    let mut terms = Vec::with_capacity(surface.nodes.len());
    for ((s, &w), n) in surface.nodes.iter().zip(&surface.weights).zip(normals) {
        let k = pts
            .iter()
            .position(|p| same_point(p, s))
            .ok_or_else(|| Error::QuadratureMismatch("missing surface sample".into()))?;
        let nx = dual_cross(*n)?;
        terms.push(a.values[k].dotc(&(nx * b.values[k])) * cx(w));
    }
    Ok(crate::quadrature::pairwise_sum(&terms, cx(T::zero())))
}

/// Time reversal `Π f*`.
pub fn time_reverse<T: Real>(f: &DualField<T>) -> DualField<T> {
    f.map(|v| Vec6::from_fn(|k, _| if k < 3 { v[k].conj() } else { -v[k].conj() }))
}

/// Magnetic components interpolated from half nodes to nodes.
fn magnetic_at_nodes<T: Real>(g: &Grid<T>, v: &[Vec6<T>]) -> Vec<[Complex<T>; 3]> {
    let n = g.cells;
    let h = |i: usize, k: usize| v[i][3 + k];
    (0..=n)
        .map(|i| {
            std::array::from_fn(|k| {
                if i == 0 {
                    (h(0, k) * cx(T::lit(15.0)) - h(1, k) * cx(T::lit(10.0)) + h(2, k) * cx(T::lit(3.0))) * cx(T::lit(0.125))
                } else if i == n {
                    (h(n - 1, k) * cx(T::lit(15.0)) - h(n - 2, k) * cx(T::lit(10.0)) + h(n - 3, k) * cx(T::lit(3.0)))
                        * cx(T::lit(0.125))
                } else {
                    (h(i - 1, k) + h(i, k)) * cx(T::lit(0.5))
                }
            })
        })
        .collect()
}

/// `∇ × a` for a field `a(z) exp(i k⊥·ρ)` given `a` and `∂z a` at one point.
fn curl<T: Real>(a: [Complex<T>; 3], dz: [Complex<T>; 3], k: [T; 2]) -> [Complex<T>; 3] {
    let i = im_unit::<T>();
    let (kx, ky) = (cx(k[0]), cx(k[1]));
    [i * ky * a[2] - dz[1], dz[0] - i * kx * a[2], i * kx * a[1] - i * ky * a[0]]
}

/// Discrete `i ∇̄×` on a staggered grid. Electric rows are evaluated at nodes from the magnetic
/// half-node samples (centered differences inside, one-sided second order at both ends);
/// magnetic rows at half nodes from the electric node samples.
pub fn dual_curl_apply<T: Real>(f: &DualField<T>) -> Result<CurlOutput<T>> {
    let g = match &f.layout {
        Layout::Staggered(g) => g,
        Layout::Points(_) => return Err(Error::DegenerateGrid("dual curl needs a staggered grid".into())),
    };
    let n = g.cells;
    if n < 3 {
        return Err(Error::DegenerateGrid("need at least 3 cells".into()));
    }
    let i_unit = im_unit::<T>();
    let inv = cx(T::one() / g.spacing);
    let v = &f.values;
    let h_nodes = magnetic_at_nodes(g, v);
    let h = |i: usize, k: usize| v[i][3 + k];
    let mut out = vec![Vec6::<T>::zeros(); n + 1];
    for i in 0..=n {
        let dh: [Complex<T>; 3] = std::array::from_fn(|k| {
            let d = if i == 0 {
                -h(0, k) * cx(T::lit(2.0)) + h(1, k) * cx(T::lit(3.0)) - h(2, k)
            } else if i == n {
                h(n - 1, k) * cx(T::lit(2.0)) - h(n - 2, k) * cx(T::lit(3.0)) + h(n - 3, k)
            } else {
                h(i, k) - h(i - 1, k)
            };
            d * inv
        });
        let c = curl(h_nodes[i], dh, g.transverse);
        for k in 0..3 {
            out[i][k] = i_unit * c[k];
        }
    }
    for i in 0..n {
        let e: [Complex<T>; 3] = std::array::from_fn(|k| (v[i][k] + v[i + 1][k]) * cx(T::lit(0.5)));
        let de: [Complex<T>; 3] = std::array::from_fn(|k| (v[i + 1][k] - v[i][k]) * inv);
        let c = curl(e, de, g.transverse);
        for k in 0..3 {
            out[i][3 + k] = -i_unit * c[k];
        }
    }
    Ok(CurlOutput {
        field: DualField { layout: f.layout.clone(), values: out, omega: f.omega },
        one_sided: vec![0, n],
    })
}

/// |z| for a generic complex scalar.
pub fn modulus<T: Real>(z: Complex<T>) -> T {
    nalgebra::ComplexField::modulus(z)
}
