use std::f64::consts::PI;

use csie_core::basis::RwgBasis;
use csie_core::mesh::{gen_cube, gen_icosphere};
use csie_core::operators::io::{cache_key, read_matrix, write_matrix, MatrixCache};
use csie_core::operators::{assemble, assemble_k, assemble_t, greens, QuadratureConfig, Request, Testing};
use csie_core::quadrature::RuleOrder;
use csie_core::{DenseComplexMatrix, Error, Vec3};

fn cube18() -> RwgBasis {
    RwgBasis::new(&gen_cube(1.0, 1).unwrap()).unwrap()
}

fn relative_change(a: &DenseComplexMatrix, b: &DenseComplexMatrix) -> f64 {
    a.add_scaled((-1.0).into(), b).unwrap().max_abs() / a.max_abs()
}

fn symmetry(m: &DenseComplexMatrix) -> f64 {
    relative_change(m, &m.transpose())
}

#[test]
fn greens_values() {
    let g = greens(&Vec3::zeros(), &Vec3::new(1.0, 0.0, 0.0), PI).unwrap();
    assert!((g.re + 1.0 / (4.0 * PI)).abs() < 1e-15);
    assert!(g.im.abs() < 1e-15);
    let g0 = greens(&Vec3::zeros(), &Vec3::new(0.0, 2.0, 0.0), 0.0).unwrap();
    assert_eq!(g0.im, 0.0);
    assert!((g0.re - 1.0 / (8.0 * PI)).abs() < 1e-16);
    for k in [0.1, 1.0, 7.0] {
        let g = greens(&Vec3::zeros(), &Vec3::new(0.3, 0.0, 0.4), k).unwrap();
        assert!((g.norm() - 1.0 / (4.0 * PI * 0.5)).abs() < 1e-15);
    }
    assert!(greens(&Vec3::zeros(), &Vec3::zeros(), 1.0).is_err());
}

#[test]
fn nonpositive_wavenumber_is_rejected() {
    let b = cube18();
    let q = QuadratureConfig::default();
    for k in [0.0, -1.0, f64::NAN] {
        assert!(matches!(assemble_t(&b, k, &q), Err(Error::InvalidArgument(_))));
        assert!(matches!(assemble_k(&b, k, &q, Testing::Beta), Err(Error::InvalidArgument(_))));
    }
}

#[test]
fn cube_operators_are_symmetric_and_converged() {
    let b = cube18();
    let k = PI;
    let set = |rule: RuleOrder| {
        let q = QuadratureConfig::default().with_near_rules(rule, rule);
        let s = assemble(&b, k, &q, Request::ALL).unwrap();
        (s.t.unwrap(), s.k.unwrap(), s.k_nxb.unwrap())
    };
    let (t3, k3, _) = set(RuleOrder::P3);
    let (t7, k7, kn7) = set(RuleOrder::P7);
    let (t12, k12, _) = set(RuleOrder::P12);
    for m in [&t7, &k7, &kn7] {
        assert!(m.all_finite());
    }
    assert!(symmetry(&t7) <= 1e-6, "T symmetry {}", symmetry(&t7));
    assert!(symmetry(&k7) <= 1e-6, "K symmetry {}", symmetry(&k7));

    let (dt1, dt2) = (relative_change(&t7, &t3), relative_change(&t12, &t7));
    let (dk1, dk2) = (relative_change(&k7, &k3), relative_change(&k12, &k7));
    assert!(dt2 < dt1 && dk2 < dk1, "T {dt1:e} {dt2:e}, K {dk1:e} {dk2:e}");
    assert!(dt2 < 1e-6 && dk2 < 1e-6, "T {dt2:e}, K {dk2:e}");

    // Self terms in particular.
    for n in 0..b.len() {
        let d = (t12[(n, n)] - t7[(n, n)]).norm() / t12[(n, n)].norm();
        assert!(d < 1e-6, "self term {n}: {d:e}");
    }
}

#[test]
fn doubling_near_threshold_is_harmless() {
    let q = QuadratureConfig::default();
    let doubled = QuadratureConfig {
        near_threshold: 2.0 * q.near_threshold,
        ..q
    };
    let k = PI;
    let b = cube18();
    let a = assemble(&b, k, &q, Request::ALL).unwrap();
    let c = assemble(&b, k, &doubled, Request::ALL).unwrap();
    assert!(relative_change(a.t.as_ref().unwrap(), c.t.as_ref().unwrap()) < 1e-6);
    assert!(relative_change(a.k.as_ref().unwrap(), c.k.as_ref().unwrap()) < 1e-6);
}

#[test]
fn static_limit_is_real() {
    let b = cube18();
    let k = 1e-4;
    let s = assemble(&b, k, &QuadratureConfig::default(), Request::ALL).unwrap();
    for m in [s.t.unwrap(), s.k.unwrap(), s.k_nxb.unwrap()] {
        let max_im = m.as_slice().iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        assert!(max_im <= 1e-6 * m.max_abs(), "{max_im:e} vs {:e}", m.max_abs());
    }
}

#[test]
fn rotated_operator_vanishes_within_a_face() {
    // Functions whose supports lie in one face of the cube see only coplanar
    // sources there, so K_mn = 0 when both supports share the face.
    let b = RwgBasis::new(&gen_cube(1.0, 2).unwrap()).unwrap();
    let k = assemble_k(&b, 2.0, &QuadratureConfig::default(), Testing::Beta).unwrap();
    let mesh = b.mesh();
    let face = |f: &csie_core::basis::RwgFunction| {
        let (np, nm) = (mesh.normal(f.plus), mesh.normal(f.minus));
        ((np - nm).norm() < 1e-12).then_some(np)
    };
    let mut checked = 0;
    for m in 0..b.len() {
        for n in 0..b.len() {
            match (face(b.function(m)), face(b.function(n))) {
                (Some(a), Some(c)) if (a - c).norm() < 1e-12 => {
                    // Coplanar only if the faces are the same plane, not the opposite parallel face.
                    let pm = mesh.centroid(b.function(m).plus);
                    let pn = mesh.centroid(b.function(n).plus);
                    if (pm - pn).dot(&a).abs() < 1e-12 {
                        assert_eq!(k[(m, n)].norm(), 0.0, "({m}, {n})");
                        checked += 1;
                    }
                }
                _ => {}
            }
        }
    }
    assert!(checked > 0);
}

#[test]
fn assembly_is_deterministic() {
    let b = RwgBasis::new(&gen_icosphere(1.0, 1).unwrap()).unwrap();
    let q = QuadratureConfig::default();
    let a = assemble(&b, 3.0, &q, Request::ALL).unwrap();
    let c = assemble(&b, 3.0, &q, Request::ALL).unwrap();
    assert_eq!(a, c);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let d = pool.install(|| assemble(&b, 3.0, &q, Request::ALL).unwrap());
    assert_eq!(a, d);
}

#[test]
fn partial_requests_match_full_assembly() {
    let b = RwgBasis::new(&gen_icosphere(1.0, 1).unwrap()).unwrap();
    let q = QuadratureConfig::default();
    let all = assemble(&b, 2.5, &q, Request::ALL).unwrap();
    assert_eq!(all.t.unwrap(), assemble_t(&b, 2.5, &q).unwrap());
    assert_eq!(all.k.unwrap(), assemble_k(&b, 2.5, &q, Testing::Beta).unwrap());
    assert_eq!(all.k_nxb.unwrap(), assemble_k(&b, 2.5, &q, Testing::NCrossBeta).unwrap());
}

#[test]
fn invalid_quadrature_config_is_rejected() {
    let b = cube18();
    let q = QuadratureConfig {
        extraction_order: 3,
        ..Default::default()
    };
    assert!(assemble_t(&b, 1.0, &q).is_err());
    let q = QuadratureConfig {
        extraction_order: 1,
        near_threshold: -1.0,
        ..Default::default()
    };
    assert!(assemble_t(&b, 1.0, &q).is_err());
}

#[test]
fn first_order_extraction_agrees() {
    let b = cube18();
    let q2 = QuadratureConfig::default();
    let q1 = QuadratureConfig {
        extraction_order: 1,
        ..q2
    };
    let t2 = assemble_t(&b, PI, &q2).unwrap();
    let t1 = assemble_t(&b, PI, &q1).unwrap();
    assert!(relative_change(&t2, &t1) < 1e-5, "{}", relative_change(&t2, &t1));
}

#[test]
fn matrix_dump_round_trips() {
    let b = cube18();
    let t = assemble_t(&b, 2.0, &QuadratureConfig::default()).unwrap();
    let mut bytes = Vec::new();
    write_matrix(&mut bytes, &t).unwrap();
    assert_eq!(bytes.len(), 8 + 16 + 16 * 18 * 18);
    assert_eq!(&bytes[..8], b"CSIEMAT1");
    assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 18);
    let back = read_matrix(bytes.as_slice()).unwrap();
    assert_eq!(back.as_slice(), t.as_slice());

    assert!(read_matrix(&bytes[..bytes.len() - 1]).is_err());
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(read_matrix(bad.as_slice()).is_err());

    let dir = tempfile::tempdir().unwrap();
    let cache = MatrixCache::new(dir.path()).unwrap();
    let key = cache_key(b.mesh(), 2.0, &QuadratureConfig::default());
    assert!(cache.get(&key, "t").is_none());
    cache.put(&key, "t", &t).unwrap();
    assert_eq!(cache.get(&key, "t").unwrap().as_slice(), t.as_slice());
}

#[test]
fn cache_key_tracks_inputs() {
    let mesh = gen_cube(1.0, 1).unwrap();
    let q = QuadratureConfig::default();
    let key = cache_key(&mesh, 2.0, &q);
    assert_eq!(key.len(), 64);
    assert_eq!(key, cache_key(&gen_cube(1.0, 1).unwrap(), 2.0, &q));
    assert_ne!(key, cache_key(&mesh, 2.0 + 1e-12, &q));
    assert_ne!(key, cache_key(&mesh.scaled(1.0 + 1e-12).unwrap(), 2.0, &q));
    assert_ne!(key, cache_key(&mesh, 2.0, &q.with_near_rules(RuleOrder::P12, RuleOrder::P7)));
}
