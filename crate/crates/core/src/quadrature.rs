//! Quadrature rules on lines, planes, spheres, shells and boxes.
//!
//! Every rule stores its nodes as 3-points. One-dimensional rules live on the z axis.
//! Sums use a fixed pairwise reduction order so results are reproducible bit for bit.

use crate::error::{Error, Result};
use crate::scalar::Real;
use gauss_quad::legendre::GaussLegendre;
use std::ops::Add;

pub type Point<T> = [T; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature<T> {
    pub nodes: Vec<Point<T>>,
    pub weights: Vec<T>,
    /// Unit normals for surface rules, `None` for volume and line rules.
    pub normals: Option<Vec<Point<T>>>,
}

/// Gauss–Legendre nodes and weights on [-1, 1].
fn legendre(n: usize) -> Result<Vec<(f64, f64)>> {
    let n = std::num::NonZeroUsize::new(n).ok_or_else(|| Error::Invalid("quadrature order must be positive".into()))?;
    Ok(GaussLegendre::new(n).as_node_weight_pairs().to_vec())
}

/// Nodes and weights of an `n` point Gauss–Legendre rule mapped to [a, b].
pub fn gauss_legendre<T: Real>(a: T, b: T, n: usize) -> Result<Vec<(T, T)>> {
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    Ok(legendre(n)?
        .into_iter()
        .map(|(x, w)| (mid + half * T::lit(x), half * T::lit(w)))
        .collect())
}

/// Sum in a fixed binary-tree order.
pub fn pairwise_sum<V: Clone + Add<Output = V>>(xs: &[V], zero: V) -> V {
    const BLOCK: usize = 8;
    if xs.len() <= BLOCK {
        return xs.iter().cloned().fold(zero, |acc, x| acc + x);
    }
    let (l, r) = xs.split_at(xs.len() / 2);
    pairwise_sum(l, zero.clone()) + pairwise_sum(r, zero)
}

impl<T: Real> Quadrature<T> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Sum of the weights.
    pub fn measure(&self) -> T {
        pairwise_sum(&self.weights, T::zero())
    }

    /// Σ f(node, weight) with pairwise reduction.
    pub fn sum<V, F>(&self, zero: V, f: F) -> V
    where
        V: Clone + Add<Output = V>,
        F: Fn(&Point<T>, T) -> V,
    {
        let terms: Vec<V> = self.nodes.iter().zip(&self.weights).map(|(p, &w)| f(p, w)).collect();
        pairwise_sum(&terms, zero)
    }

    /// Like [`Quadrature::sum`] for fallible integrands.
    pub fn try_sum<V, F>(&self, zero: V, f: F) -> Result<V>
    where
        V: Clone + Add<Output = V>,
        F: Fn(&Point<T>, T) -> Result<V>,
    {
        let terms = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(p, &w)| f(p, w))
            .collect::<Result<Vec<V>>>()?;
        Ok(pairwise_sum(&terms, zero))
    }

    /// Gauss–Legendre rule on the segment [a, b] of the z axis.
    pub fn line(a: T, b: T, n: usize) -> Result<Self> {
        if !(b > a) {
            return Err(Error::Invalid("line rule needs a < b".into()));
        }
        let (nodes, weights) = gauss_legendre(a, b, n)?
            .into_iter()
            .map(|(z, w)| ([T::zero(), T::zero(), z], w))
            .unzip();
        Ok(Quadrature { nodes, weights, normals: None })
    }

    /// Composite Gauss–Legendre rule with panel edges at `breaks`.
    /// Breaks are sorted and repeated values dropped, so kinks can be listed freely.
    pub fn composite_line(breaks: &[T], n: usize) -> Result<Self> {
        let mut b: Vec<T> = breaks.to_vec();
        b.sort_by(|x, y| x.partial_cmp(y).expect("finite breaks"));
        b.dedup_by(|x, y| (*x - *y).abs() <= T::eps() * (T::one() + y.abs()));
        if b.len() < 2 {
            return Err(Error::Invalid("composite rule needs two distinct breaks".into()));
        }
        let mut out = Quadrature { nodes: vec![], weights: vec![], normals: None };
        for w in b.windows(2) {
            let p = Self::line(w[0], w[1], n)?;
            out.nodes.extend(p.nodes);
            out.weights.extend(p.weights);
        }
        Ok(out)
    }

    /// Composite rule on [a, b] with `panels` equal panels plus extra breaks.
    pub fn panels(a: T, b: T, panels: usize, extra: &[T], n: usize) -> Result<Self> {
        if panels == 0 {
            return Err(Error::Invalid("need at least one panel".into()));
        }
        let mut breaks: Vec<T> = (0..=panels)
            .map(|i| a + (b - a) * T::from_usize(i).unwrap() / T::from_usize(panels).unwrap())
            .collect();
        breaks.extend(extra.iter().copied().filter(|&x| x > a && x < b));
        Self::composite_line(&breaks, n)
    }

    /// Trapezoid rule on equally spaced z nodes `z0 + i h`, `i = 0..count`.
    pub fn trapezoid(z0: T, h: T, count: usize) -> Result<Self> {
        if count < 2 || !(h > T::zero()) {
            return Err(Error::Invalid("trapezoid rule needs two nodes and positive spacing".into()));
        }
        let nodes = (0..count)
            .map(|i| [T::zero(), T::zero(), z0 + h * T::from_usize(i).unwrap()])
            .collect();
        let weights = (0..count)
            .map(|i| if i == 0 || i + 1 == count { h * T::lit(0.5) } else { h })
            .collect();
        Ok(Quadrature { nodes, weights, normals: None })
    }

    /// The "surface" of a 1D slab at height z: a single node of unit weight per unit transverse area.
    pub fn plane_point(z: T, normal_z: T) -> Self {
        Quadrature {
            nodes: vec![[T::zero(), T::zero(), z]],
            weights: vec![T::one()],
            normals: Some(vec![[T::zero(), T::zero(), normal_z]]),
        }
    }

    /// Both faces of the slab [a, b] with outward normals.
    pub fn slab_faces(a: T, b: T) -> Self {
        let mut lo = Self::plane_point(a, -T::one());
        let hi = Self::plane_point(b, T::one());
        lo.nodes.extend(hi.nodes);
        lo.weights.extend(hi.weights);
        lo.normals.as_mut().unwrap().extend(hi.normals.unwrap());
        lo
    }

    /// Product Gauss rule on the rectangle [x0,x1]×[y0,y1] in the plane z, normal +z.
    pub fn rectangle(x: (T, T), y: (T, T), z: T, n: usize) -> Result<Self> {
        let gx = gauss_legendre(x.0, x.1, n)?;
        let gy = gauss_legendre(y.0, y.1, n)?;
        let mut q = Quadrature { nodes: vec![], weights: vec![], normals: Some(vec![]) };
        for &(xi, wx) in &gx {
            for &(yj, wy) in &gy {
                q.nodes.push([xi, yj, z]);
                q.weights.push(wx * wy);
                q.normals.as_mut().unwrap().push([T::zero(), T::zero(), T::one()]);
            }
        }
        Ok(q)
    }

    /// Polar rule on the disk of radius `radius` in the plane z with normal `(0,0,normal_z)`.
    /// Radial direction: `panels` Gauss panels of order `n`; azimuth: `n_phi` uniform points.
    pub fn disk(z: T, radius: T, panels: usize, n: usize, n_phi: usize, normal_z: T) -> Result<Self> {
        if n_phi == 0 {
            return Err(Error::Invalid("azimuthal count must be positive".into()));
        }
        let radial = Self::panels(T::zero(), radius, panels, &[], n)?;
        let dphi = T::two_pi() / T::from_usize(n_phi).unwrap();
        let mut q = Quadrature { nodes: vec![], weights: vec![], normals: Some(vec![]) };
        for (p, &w) in radial.nodes.iter().zip(&radial.weights) {
            let rho = p[2];
            for k in 0..n_phi {
                let phi = dphi * T::from_usize(k).unwrap();
                q.nodes.push([rho * phi.cos(), rho * phi.sin(), z]);
                q.weights.push(rho * w * dphi);
                q.normals.as_mut().unwrap().push([T::zero(), T::zero(), normal_z]);
            }
        }
        Ok(q)
    }

    /// Product rule on a sphere: Gauss–Legendre in cos θ, uniform in φ. Normals point outward.
    pub fn sphere(center: Point<T>, radius: T, n_theta: usize, n_phi: usize) -> Result<Self> {
        if !(radius > T::zero()) || n_phi == 0 {
            return Err(Error::Invalid("sphere rule needs positive radius and azimuthal count".into()));
        }
        let gt = gauss_legendre(-T::one(), T::one(), n_theta)?;
        let dphi = T::two_pi() / T::from_usize(n_phi).unwrap();
        let mut q = Quadrature { nodes: vec![], weights: vec![], normals: Some(vec![]) };
        for &(ct, wt) in &gt {
            let st = (T::one() - ct * ct).max(T::zero()).sqrt();
            for k in 0..n_phi {
                let phi = (T::from_usize(k).unwrap() + T::lit(0.5)) * dphi;
                let n = [st * phi.cos(), st * phi.sin(), ct];
                q.nodes.push([
                    center[0] + radius * n[0],
                    center[1] + radius * n[1],
                    center[2] + radius * n[2],
                ]);
                q.weights.push(radius * radius * wt * dphi);
                q.normals.as_mut().unwrap().push(n);
            }
        }
        Ok(q)
    }

    /// Volume rule on the spherical shell r_in < |r − c| < r_out (r_in may be 0 for a ball).
    pub fn shell(center: Point<T>, r_in: T, r_out: T, n_r: usize, n_theta: usize, n_phi: usize) -> Result<Self> {
        if !(r_out > r_in) || r_in < T::zero() {
            return Err(Error::Invalid("shell needs 0 <= r_in < r_out".into()));
        }
        let gr = gauss_legendre(r_in, r_out, n_r)?;
        let unit = Self::sphere([T::zero(); 3], T::one(), n_theta, n_phi)?;
        let mut q = Quadrature { nodes: vec![], weights: vec![], normals: None };
        for &(r, wr) in &gr {
            for (p, &w) in unit.nodes.iter().zip(&unit.weights) {
                q.nodes.push([center[0] + r * p[0], center[1] + r * p[1], center[2] + r * p[2]]);
                q.weights.push(r * r * wr * w);
            }
        }
        Ok(q)
    }

    /// Product Gauss rule on the box [lo, hi].
    pub fn cuboid(lo: Point<T>, hi: Point<T>, n: usize) -> Result<Self> {
        let g: Vec<Vec<(T, T)>> = (0..3).map(|d| gauss_legendre(lo[d], hi[d], n)).collect::<Result<_>>()?;
        let mut q = Quadrature { nodes: vec![], weights: vec![], normals: None };
        for &(x, wx) in &g[0] {
            for &(y, wy) in &g[1] {
                for &(z, wz) in &g[2] {
                    q.nodes.push([x, y, z]);
                    q.weights.push(wx * wy * wz);
                }
            }
        }
        Ok(q)
    }

    /// Concatenates two rules of the same kind.
    pub fn join(mut self, other: Self) -> Self {
        self.nodes.extend(other.nodes);
        self.weights.extend(other.weights);
        match (&mut self.normals, other.normals) {
            (Some(a), Some(b)) => a.extend(b),
            (a, _) => *a = None,
        }
        self
    }

    /// Flips every normal.
    pub fn reversed(mut self) -> Self {
        if let Some(ns) = self.normals.as_mut() {
            for n in ns.iter_mut() {
                *n = [-n[0], -n[1], -n[2]];
            }
        }
        self
    }
}
