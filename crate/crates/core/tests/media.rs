use duplex::dual::cx;
use duplex::media::*;
use duplex::{Error, Mat3, Mat6, UnitsMode, C64};
use proptest::prelude::*;
use std::f64::consts::PI;

fn osc(omega0: f64, gamma: f64, strength: f64) -> LorentzOscillator<f64> {
    LorentzOscillator::new(omega0, gamma, strength).unwrap()
}

fn max_abs(m: &Mat6) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn susceptibility_limits() {
    let o = osc(2.0, 0.3, 1.5);
    let s = susceptibility(&o, 0.0).unwrap();
    assert_eq!(s, C64::new(1.5 / 4.0, 0.0));
    let r = susceptibility(&o, 2.0).unwrap();
    assert!((r - C64::new(0.0, 1.5 / (0.3 * 2.0))).norm() < 1e-15);
    for k in 1..=1000 {
        let w = 0.01 * k as f64;
        assert!(susceptibility(&o, w).unwrap().im > 0.0);
    }
    let lossless = osc(2.0, 0.0, 1.0);
    assert!(matches!(susceptibility(&lossless, 2.0), Err(Error::Pole(_))));
    assert!(susceptibility(&lossless, 1.0).unwrap().im == 0.0);
    assert!(matches!(LorentzOscillator::new(1.0, -0.1, 1.0), Err(Error::Active(_))));
    assert!(LorentzOscillator::new(1.0, 0.1, -1.0).is_err());
}

#[test]
fn single_precision_susceptibility() {
    let o = LorentzOscillator::<f32>::new(2.0, 0.5, 1.0).unwrap();
    let s = susceptibility(&o, 2.0f32).unwrap();
    assert!((s.im - 1.0).abs() < 1e-6);
}

proptest! {
    #[test]
    fn susceptibility_is_real_in_time(w0 in 0.0..5.0f64, g in 0.01..2.0f64, s in 0.0..4.0f64, w in 0.01..6.0f64) {
        let o = osc(w0, g, s);
        let a = susceptibility(&o, w).unwrap();
        let b = susceptibility(&o, -w).unwrap();
        prop_assert!((a - b.conj()).norm() <= 1e-14 * (1.0 + a.norm()));
    }

    #[test]
    fn lorentz_media_are_passive(w0 in 0.0..5.0f64, g in 0.001..2.0f64, s in 0.0..4.0f64,
                                 w0m in 0.0..5.0f64, gm in 0.001..2.0f64, sm in 0.0..4.0f64, w in 0.01..6.0f64) {
        let m = LorentzMaterial {
            oscillators: vec![(Sector::Electric, osc(w0, g, s)), (Sector::Magnetic, osc(w0m, gm, sm))],
        };
        let t = m.tensor(w).unwrap();
        prop_assert!(t.min_loss_eigenvalue() >= -1e-14);
        prop_assert!(t.is_reciprocal());
        prop_assert_eq!(t.transpose(), t);
    }

    #[test]
    fn hermitian_split_reconstructs(v in proptest::collection::vec(-2.0..2.0f64, 36)) {
        let e = Mat3::from_fn(|i, j| C64::new(v[3 * i + j], v[9 + 3 * i + j]));
        let m = Mat3::from_fn(|i, j| C64::new(v[18 + 3 * i + j], v[27 + 3 * i + j]));
        let t = material_tensor(&e, &m);
        let (re, im) = hermitian_split(&t);
        prop_assert!(max_abs(&(re + im * C64::new(0.0, 1.0) - t.full())) < 1e-15);
        prop_assert!(max_abs(&(re - re.adjoint())) == 0.0);
        prop_assert!(max_abs(&(im - im.adjoint())) == 0.0);
    }
}

#[test]
fn material_tensor_assembly() {
    let vac = material_tensor_scalar(cx(0.0), cx(0.0));
    assert_eq!(vac.full(), Mat6::identity());
    let d = material_tensor_scalar(cx(1.25), cx(0.0));
    assert_eq!(d.eps, Mat3::identity() * cx(2.25));
    assert_eq!(d.mu, Mat3::identity());
    let chi = susceptibility(&osc(1.0, 0.2, 0.5), 1.0).unwrap();
    let t = material_tensor_scalar(chi, cx(0.0));
    let (_, im) = hermitian_split(&t);
    for i in 0..6 {
        for j in 0..6 {
            let inside = i < 3 && j < 3 && i == j;
            assert_eq!(im[(i, j)].norm() > 0.0, inside, "({i},{j})");
        }
    }
    let full = MaterialTensor::<f64>::from_full(&t.full()).unwrap();
    assert_eq!(full, t);
    let mut bad = t.full();
    bad[(0, 4)] = cx(1.0);
    assert!(MaterialTensor::<f64>::from_full(&bad).is_err());
}

#[test]
fn hermitian_split_examples() {
    let sym = MaterialTensor::isotropic(cx(2.0), cx(1.5));
    let (_, im) = hermitian_split(&sym);
    assert_eq!(max_abs(&im), 0.0);
    let lossy = MaterialTensor::isotropic(C64::new(2.0, 0.3), C64::new(2.0, 0.3));
    let (re, im) = hermitian_split(&lossy);
    assert!(max_abs(&(re - Mat6::identity() * cx(2.0))) < 1e-15);
    assert!(max_abs(&(im - Mat6::identity() * cx(0.3))) < 1e-15);
}

#[test]
fn markov_coupling_values() {
    let u = UnitsMode::Dimensionless;
    assert_eq!(markov_coupling(&osc(1.0, 0.0, 1.0), 1.0, 1.0, u).unwrap(), 0.0);
    let k = markov_coupling(&osc(1.0, 1.0, 1.0), 1.0, 1.0, u).unwrap();
    assert!((k - 1.0 / (4.0 * PI.powi(3))).abs() < 1e-16);
    let o = osc(1.0, 0.4, 2.0);
    let base = markov_coupling(&o, 0.7, 1.0, u).unwrap();
    for k in 1..20 {
        let w = 0.37 * k as f64;
        let v = markov_coupling(&o, 0.7, w, u).unwrap();
        assert!((v - base * w).abs() <= 1e-15 * v);
    }
    assert!(markov_coupling(&o, 1.0, 0.0, u).is_err());
    assert!(markov_coupling(&o, 1.0, -1.0, u).is_err());
}

#[test]
fn noise_spectrum_values() {
    let u = UnitsMode::Dimensionless;
    assert_eq!(noise_spectrum(&osc(1.0, 0.0, 1.0), Sector::Electric, 0.5, u).unwrap(), cx(0.0));
    let o = osc(1.2, 0.3, 0.8);
    let at_res = noise_spectrum(&o, Sector::Electric, 1.2, u).unwrap().norm_sqr();
    assert!(at_res.is_finite() && at_res > 0.0);
    assert!(noise_spectrum(&o, Sector::Magnetic, 0.0, u).is_err());
}

/// The ratio |χ_N|²/Im χ is frequency independent; in dimensionless units it equals 1/π.
#[test]
fn noise_to_loss_ratio_is_constant() {
    for units in [UnitsMode::Dimensionless, UnitsMode::Si] {
        for sector in [Sector::Electric, Sector::Magnetic] {
            let o = osc(1.1, 0.25, 0.9);
            let ratio = |w: f64| noise_spectrum(&o, sector, w, units).unwrap().norm_sqr() / susceptibility(&o, w).unwrap().im;
            let r0 = ratio(0.3);
            for k in 1..50 {
                let r = ratio(0.3 + 0.07 * k as f64);
                assert!((r - r0).abs() <= 1e-12 * r0.abs(), "{units:?} {sector:?}");
            }
            if units == UnitsMode::Dimensionless {
                assert!((r0 - 1.0 / PI).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn material_file_round_trip() {
    let text = r#"{
        "materials": {
            "absorber": [{"sector": "electric", "omega0": 1.0, "gamma": 0.2, "strength": 0.5}],
            "magnetic": [{"sector": "magnetic", "omega0": 2.0, "gamma": 0.1, "strength": 0.3}]
        },
        "layers": [
            {"z_min": 0.0, "z_max": 0.5, "material": "absorber"},
            {"z_min": 0.5, "z_max": 1.0, "material": "magnetic"}
        ]
    }"#;
    let f = MaterialFile::from_json(text).unwrap();
    let p = f.profile(1.0).unwrap();
    assert_eq!(p.support(), Some((0.0, 1.0)));
    assert_eq!(p.at(-1.0), MaterialTensor::vacuum());
    let a = p.at(0.25).scalars().unwrap();
    assert!((a.0 - C64::new(1.0, 2.5)).norm() < 1e-14);
    assert_eq!(a.1, cx(1.0));
    let bad = text.replace("\"z_min\": 0.5", "\"z_min\": 0.4");
    assert!(MaterialFile::from_json(&bad).is_err());
    let unknown = text.replace("\"material\": \"magnetic\"", "\"material\": \"nope\"");
    assert!(MaterialFile::from_json(&unknown).is_err());
    let gain = text.replace("\"gamma\": 0.2", "\"gamma\": -0.2");
    assert!(MaterialFile::from_json(&gain).is_err());
}
