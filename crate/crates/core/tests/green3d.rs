use duplex::dual::{cx, flip_pi};
use duplex::green1d::{LayerStack, PlanarGreen};
use duplex::green3d::*;
use duplex::kernel::{Block, Corrupted, Kernel};
use duplex::media::MaterialTensor;
use duplex::{Error, Mat3, Mat6, Point, C64};
use proptest::prelude::*;
use std::f64::consts::PI;

fn lossy() -> Medium {
    Medium::new(C64::new(2.25, 0.3), cx(1.0)).unwrap()
}

fn max6(m: &Mat6) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn max3(m: &Mat3) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn dyadic_index_symmetry() {
    let g = Dyadic3::new(lossy(), 1.3, Sector::Electric).unwrap();
    let (r, rp) = ([0.3, -1.2, 0.8], [-0.4, 0.5, 2.1]);
    let d = g.eval(&r, &rp).unwrap() - g.eval(&rp, &r).unwrap().transpose();
    assert!(max3(&d) <= 1e-15 * max3(&g.eval(&r, &rp).unwrap()));
}

/// `∇×∇×gE − k² gE = 0` away from the source, by second-order differences.
#[test]
fn dyadic_solves_the_vector_helmholtz_equation() {
    let g = Dyadic3::new(Medium::new(C64::new(2.0, 0.1), C64::new(1.2, 0.0)).unwrap(), 1.0, Sector::Electric).unwrap();
    let k = g.wavenumber();
    let rp = [0.0, 0.0, 0.0];
    let r = [1.1, -0.7, 1.6];
    let residual = |h: f64| {
        let at = |dx: [f64; 3]| g.eval(&[r[0] + dx[0], r[1] + dx[1], r[2] + dx[2]], &rp).unwrap();
        let e = |k: usize, s: f64| {
            let mut d = [0.0; 3];
            d[k] = s * h;
            d
        };
        let e2 = |k: usize, s: f64, l: usize, t: f64| {
            let mut d = [0.0; 3];
            d[k] += s * h;
            d[l] += t * h;
            d
        };
        // Hessian of each entry
        let hess = |a: usize, b: usize| {
            if a == b {
                (at(e(a, 1.0)) - at([0.0; 3]) * cx(2.0) + at(e(a, -1.0))) / cx(h * h)
            } else {
                (at(e2(a, 1.0, b, 1.0)) - at(e2(a, 1.0, b, -1.0)) - at(e2(a, -1.0, b, 1.0)) + at(e2(a, -1.0, b, -1.0)))
                    / cx(4.0 * h * h)
            }
        };
        let hs: Vec<Vec<Mat3>> = (0..3).map(|a| (0..3).map(|b| hess(a, b)).collect()).collect();
        // ∇×∇×F = ∇(∇·F) − ∇²F, column-wise
        let cc = Mat3::from_fn(|i, j| {
            let div_grad: C64 = (0..3).map(|l| hs[i][l][(l, j)]).sum();
            let lap: C64 = (0..3).map(|l| hs[l][l][(i, j)]).sum();
            div_grad - lap
        });
        let g0 = at([0.0; 3]);
        max3(&(cc - g0 * k * k)) / max3(&(g0 * k * k))
    };
    let (a, b) = (residual(2e-3), residual(1e-3));
    assert!(b < 1e-5, "{a} {b}");
    assert!((a / b).log2() > 1.8, "{a} {b}");
}

#[test]
fn far_field_is_transverse() {
    let g = Dyadic3::new(Medium::vacuum(), 1.0, Sector::Electric).unwrap();
    let ratio = |kr: f64| {
        let m = g.eval(&[0.0, 0.0, kr], &[0.0; 3]).unwrap();
        m[(2, 2)].norm() / m[(0, 0)].norm()
    };
    let (a, b) = (ratio(50.0), ratio(100.0));
    assert!(a < 0.05 && (a / b - 2.0).abs() < 0.01, "{a} {b}");
}

#[test]
fn vacuum_duality() {
    let k = HomogeneousKernel3d::new(Medium::vacuum(), 2.0).unwrap();
    let g = k.eval(&[0.3, 0.1, -0.2], &[-0.5, 0.4, 0.7]).unwrap();
    let b = duplex::dual::blocks(&g);
    assert!(max3(&(b[3] - b[0])) < 1e-16);
    assert!(max3(&(b[2] + b[1])) < 1e-16);
}

#[test]
fn numerical_and_analytic_curls_agree() {
    let k0 = 1.0;
    let kernel = HomogeneousKernel3d::new(lossy(), k0).unwrap();
    let n = lossy().index().re;
    // k0 R = 3 along a generic direction
    let dir = [0.48, -0.6, 0.64];
    let len = 3.0 / (k0 * n);
    let r = [dir[0] * len, dir[1] * len, dir[2] * len];
    let rp = [0.0; 3];
    let step = 1e-4 * 2.0 * PI / k0;
    let a = kernel.eval_with(&r, &rp, CurlMode::Analytic).unwrap();
    let b = kernel.eval_with(&r, &rp, CurlMode::Numerical { step }).unwrap();
    let worst = a.iter().zip(b.iter()).filter(|(x, _)| x.norm() > 1e-12 * max6(&a)).map(|(x, y)| (x - y).norm() / x.norm()).fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst}");
}

fn random_point(v: &[f64]) -> Point {
    [v[0], v[1], v[2]]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]
    #[test]
    fn kernel_reciprocity(v in proptest::collection::vec(-2.0..2.0f64, 6)) {
        let kernel = HomogeneousKernel3d::new(Medium::new(C64::new(2.0, 0.4), C64::new(1.3, 0.2)).unwrap(), 1.7).unwrap();
        let (r, rp) = (random_point(&v[..3]), random_point(&v[3..]));
        prop_assume!(((r[0]-rp[0]).powi(2) + (r[1]-rp[1]).powi(2) + (r[2]-rp[2]).powi(2)).sqrt() > 0.05);
        let pi = flip_pi();
        let a = kernel.eval(&r, &rp).unwrap();
        let b = kernel.eval(&rp, &r).unwrap();
        prop_assert!(max6(&(pi * b.transpose() * pi - a)) <= 1e-10 * max6(&a));
    }
}

#[test]
fn first_order_residual_converges() {
    for medium in [Medium::vacuum(), Medium::new(C64::new(1.5, 0.1).powi(2), cx(1.0)).unwrap()] {
        let kernel = HomogeneousKernel3d::new(medium, 1.0).unwrap();
        let rp = [0.1, -0.2, 0.05];
        let probes: Vec<Point> = [2.0, 5.0, 10.0]
            .iter()
            .map(|kr| [rp[0] + 0.6 * kr, rp[1] + 0.0, rp[2] + 0.8 * kr])
            .collect();
        let a = maxwell_residual_6(&kernel, &rp, &probes, 2e-3).unwrap();
        let b = maxwell_residual_6(&kernel, &rp, &probes, 1e-3).unwrap();
        assert!(b < 1e-5, "{a} {b}");
        assert!((a / b).log2() > 1.9, "{a} {b}");
    }
}

#[test]
fn corrupted_block_leaves_a_residual_plateau() {
    let kernel = HomogeneousKernel3d::new(Medium::vacuum(), 1.0).unwrap();
    let bad = Corrupted::new(&kernel, Block::EM, 1.01);
    let rp = [0.0; 3];
    let probes = [[0.5, 1.0, 3.0]];
    let a = maxwell_residual_6(&bad, &rp, &probes, 2e-3).unwrap();
    let b = maxwell_residual_6(&bad, &rp, &probes, 1e-3).unwrap();
    assert!(a > 1e-3 && b > 1e-3, "{a} {b}");
    assert!((a / b - 1.0).abs() < 0.01, "{a} {b}");
}

/// The phase advance between two radii grows with frequency at the rate `Re(n) ΔR`.
#[test]
fn outgoing_group_delay() {
    let medium = Medium::new(C64::new(1.44, 0.05), cx(1.0)).unwrap();
    let phase = |k0: f64| {
        let k = HomogeneousKernel3d::new(medium, k0).unwrap();
        let a = k.eval(&[0.0, 0.0, 20.0], &[0.0; 3]).unwrap()[(0, 0)];
        let b = k.eval(&[0.0, 0.0, 30.0], &[0.0; 3]).unwrap()[(0, 0)];
        (b / a).arg()
    };
    let dk = 1e-4;
    let delay = (phase(1.0 + dk) - phase(1.0 - dk)) / (2.0 * dk);
    let expect = medium.index().re * 10.0;
    assert!((delay / expect - 1.0).abs() < 1e-2, "{delay} {expect}");
}

/// The transverse Fourier transform of the 3D kernel is the planar kernel of the same medium.
#[test]
fn angular_spectrum_matches_planar_kernel() {
    let (eps, mu, k0) = (C64::new(1.5, 0.6), C64::new(1.1, 0.05), 2.0);
    let kernel = HomogeneousKernel3d::new(Medium::new(eps, mu).unwrap(), k0).unwrap();
    for k_perp in [[0.0, 0.0], [0.7, -0.3]] {
        let spectrum = angular_spectrum(&kernel, 0.6, 0.0, k_perp, 45.0, 90, 12, 64).unwrap();
        let stack = LayerStack::homogeneous(MaterialTensor::isotropic(eps, mu), k_perp, k0).unwrap();
        let planar = PlanarGreen::new(&stack).unwrap().green6(0.6, 0.0).unwrap();
        let err = max6(&(spectrum - planar)) / max6(&planar);
        assert!(err < 1e-6, "{k_perp:?} {err}");
    }
}

#[test]
fn evaluation_preconditions() {
    let kernel = HomogeneousKernel3d::new(Medium::vacuum(), 1.0).unwrap();
    assert!(matches!(kernel.eval(&[0.0; 3], &[0.0, 0.0, 1e-4]), Err(Error::Coincident)));
    assert!(matches!(Medium::new(C64::new(1.0, -0.1), cx(1.0)), Err(Error::Active(_))));
    assert!(maxwell_residual_6(&kernel, &[0.0; 3], &[[0.0, 0.0, 1e-3]], 1e-3).is_err());
}
