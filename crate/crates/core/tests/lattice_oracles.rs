mod common;

use common::{max_rel_dev, rel_err, rng, Oracle};
use sic_core::gauge_algebra::{GaugeGroup, GroupKind};
use sic_core::ym_lattice::{
    equations_of_motion, evolve, field_strength, gauss_residual, step_in_place, total_energy,
    FieldConfiguration, LatticeSpec, VECTOR_COMPONENTS,
};

fn spec(kind: GroupKind, dims: usize, sites: usize, g: f64, dt: f64) -> LatticeSpec {
    LatticeSpec::new(GaugeGroup::new(kind), dims, sites, 0.7, g, dt).unwrap()
}

const ORACLE_CASES: &[(GroupKind, usize)] = &[
    (GroupKind::SU2, 1),
    (GroupKind::SU2, 2),
    (GroupKind::SU2, 3),
    (GroupKind::SU3, 1),
    (GroupKind::SU3, 2),
    (GroupKind::U1, 3),
];

#[test]
fn field_strength_matches_direct_summation() {
    for (n, &(kind, dims)) in ORACLE_CASES.iter().enumerate() {
        let s = spec(kind, dims, 4, 1.3, 0.01);
        let oracle = Oracle::new(&s, kind);
        let cfg = FieldConfiguration::random(&s, 0.8, &mut rng(100 + n as u64));
        for site in 0..s.n_sites() {
            let c = s.coords(site);
            for i in 0..VECTOR_COMPONENTS {
                for j in 0..VECTOR_COMPONENTS {
                    if i == j {
                        continue;
                    }
                    let got = field_strength(&cfg, &s, site, i, j).unwrap();
                    let want = oracle.strength(&cfg.a, c, i, j, s.coupling());
                    assert!(
                        max_rel_dev(got.components(), &want) <= 1e-12,
                        "{kind} D={dims} site {site} F_{i}{j}"
                    );
                }
            }
        }
    }
}

#[test]
fn equations_of_motion_match_direct_summation() {
    for (n, &(kind, dims)) in ORACLE_CASES.iter().enumerate() {
        let s = spec(kind, dims, 4, 0.9, 0.01);
        let oracle = Oracle::new(&s, kind);
        let cfg = FieldConfiguration::random(&s, 0.8, &mut rng(200 + n as u64));
        let (da, de) = equations_of_motion(&cfg, &s).unwrap();
        assert_eq!(da, cfg.e);
        let want = oracle.force(&cfg.a);
        assert!(max_rel_dev(&de, &want) <= 1e-12, "{kind} D={dims}");
    }
}

#[test]
fn energy_split_matches_direct_summation() {
    for (n, &(kind, dims)) in ORACLE_CASES.iter().enumerate() {
        let s = spec(kind, dims, 4, 1.1, 0.01);
        let oracle = Oracle::new(&s, kind);
        let cfg = FieldConfiguration::random(&s, 0.8, &mut rng(300 + n as u64));
        let got = total_energy(&cfg, &s);
        let total = oracle.energy(&cfg, s.coupling());
        let quadratic = oracle.energy(&cfg, 0.0);
        assert!(rel_err(got.total, total) <= 1e-12);
        assert!(rel_err(got.quadratic, quadratic) <= 1e-12);
        if kind == GroupKind::U1 {
            assert_eq!(got.nonlinear, 0.0);
        } else {
            // the difference loses digits relative to the total
            assert!((got.nonlinear - (total - quadratic)).abs() <= 1e-12 * total);
        }
    }
}

#[test]
fn force_is_minus_energy_gradient() {
    // H is quartic in A; a central difference with h = 1e-4 is accurate to ~1e-8
    let s = spec(GroupKind::SU3, 2, 4, 1.2, 0.01);
    let cfg = FieldConfiguration::random(&s, 0.5, &mut rng(7));
    let (_, de) = equations_of_motion(&cfg, &s).unwrap();
    let h = 1e-4;
    let scale = de.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for k in (0..cfg.a.len()).step_by(7) {
        let mut plus = cfg.clone();
        plus.a[k] += h;
        let mut minus = cfg.clone();
        minus.a[k] -= h;
        let grad = (total_energy(&plus, &s).total - total_energy(&minus, &s).total) / (2.0 * h);
        let expect = -grad / s.cell_volume();
        assert!((de[k] - expect).abs() <= 1e-7 * scale, "component {k}: {} vs {expect}", de[k]);
    }
}

#[test]
fn su2_at_zero_coupling_is_three_copies_of_u1() {
    let su2 = spec(GroupKind::SU2, 2, 6, 0.0, 0.05);
    let u1 = spec(GroupKind::U1, 2, 6, 0.0, 0.05);
    let mut cfg = FieldConfiguration::random(&su2, 0.5, &mut rng(11));
    let copies: Vec<FieldConfiguration> = (0..3)
        .map(|c| {
            let pick = |f: &[f64]| -> Vec<f64> { f.iter().skip(c).step_by(3).copied().collect() };
            FieldConfiguration::from_fields(&u1, pick(&cfg.a), pick(&cfg.e)).unwrap()
        })
        .collect();
    let mut copies = copies;
    for _ in 0..50 {
        step_in_place(&mut cfg, &su2).unwrap();
        for u in copies.iter_mut() {
            step_in_place(u, &u1).unwrap();
        }
    }
    for (c, u) in copies.iter().enumerate() {
        let got: Vec<f64> = cfg.a.iter().skip(c).step_by(3).copied().collect();
        assert_eq!(got, u.a, "component {c}");
    }
    let e = total_energy(&cfg, &su2);
    let sum: f64 = copies.iter().map(|u| total_energy(u, &u1).total).sum();
    assert!(rel_err(e.total, sum) <= 1e-13);
    assert_eq!(e.nonlinear, 0.0);
}

#[test]
fn field_strength_scaling() {
    // F(A/λ; λg) = F(A; g)/λ
    let lambda = 4.0;
    for kind in [GroupKind::SU2, GroupKind::SU3] {
        let s = spec(kind, 2, 4, 0.8, 0.01);
        let scaled_spec = s.with_coupling(lambda * s.coupling());
        let cfg = FieldConfiguration::random(&s, 0.6, &mut rng(13));
        let scaled = FieldConfiguration::from_fields(
            &s,
            cfg.a.iter().map(|a| a / lambda).collect(),
            cfg.e.clone(),
        )
        .unwrap();
        for site in 0..s.n_sites() {
            let f = field_strength(&cfg, &s, site, 0, 1).unwrap();
            let fs = field_strength(&scaled, &scaled_spec, site, 0, 1).unwrap();
            let want: Vec<f64> = f.components().iter().map(|v| v / lambda).collect();
            assert!(max_rel_dev(fs.components(), &want) <= 1e-14);
        }
    }
}

#[test]
fn leapfrog_is_time_reversible() {
    for kind in [GroupKind::SU2, GroupKind::SU3] {
        let s = spec(kind, 1, 16, 1.0, 0.01);
        let start = FieldConfiguration::random(&s, 0.3, &mut rng(17));
        let mut cfg = start.clone();
        for _ in 0..500 {
            step_in_place(&mut cfg, &s).unwrap();
        }
        cfg.e.iter_mut().for_each(|e| *e = -*e);
        for _ in 0..500 {
            step_in_place(&mut cfg, &s).unwrap();
        }
        let dev = cfg
            .a
            .iter()
            .zip(&start.a)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(dev <= 1e-8, "{kind}: {dev}");
    }
}

#[test]
fn plane_wave_follows_discrete_dispersion() {
    // A_y = ε cos(kx), E = 0: central differences give ω = sin(ka)/a and
    // the leapfrog recursion gives A_n = A_0 cos(nΩdt), cos(Ωdt) = 1 − (ωdt)²/2
    let n = 16;
    let a = 1.0;
    let dt = 0.1;
    let s = LatticeSpec::new(GaugeGroup::u1(), 1, n, a, 1.0, dt).unwrap();
    let m = 3.0;
    let k = 2.0 * std::f64::consts::PI * m / (n as f64 * a);
    let eps = 0.01;
    let mut cfg = FieldConfiguration::vacuum(&s);
    for site in 0..n {
        cfg.a[s.index(site, 1, 0)] = eps * (k * site as f64 * a).cos();
    }
    let omega = (k * a).sin() / a;
    let big_omega = (1.0 - 0.5 * (omega * dt).powi(2)).acos() / dt;
    for step in 1..=400 {
        step_in_place(&mut cfg, &s).unwrap();
        let want = eps * (big_omega * step as f64 * dt).cos();
        for site in [0, 5] {
            let got = cfg.a[s.index(site, 1, 0)];
            let expect = want * (k * site as f64 * a).cos();
            assert!((got - expect).abs() <= 1e-12, "step {step} site {site}");
        }
    }
}

#[test]
fn gauss_law_preserved_for_abelian_fields() {
    let s = spec(GroupKind::U1, 2, 8, 1.0, 0.05);
    let mut cfg = FieldConfiguration::random(&s, 0.5, &mut rng(19));
    cfg.e.iter_mut().for_each(|e| *e = 0.0);
    let records = evolve(&mut cfg, &s, 200, 50).unwrap();
    for r in &records {
        assert!(r.gauss_max <= 1e-12, "{}", r.gauss_max);
    }
    assert!(gauss_residual(&cfg, &s).max_abs <= 1e-12);
}
