use std::sync::OnceLock;

use katolab::grid::{BoundaryStrip, Domain, VectorGridField};
use katolab::kato::{noise_scale, scaled_exponent};
use katolab::noise::{NoiseConfig, NoiseKind, NoiseModel};
use katolab::ops::{advect_grid, gradient_energy, GradientMode};
use katolab::sde::{BrownianPath, EnergyPoint, TrajectoryRecord};
use katolab::spectral::SpectralBasis;
use proptest::prelude::*;

const NX: usize = 8;
const MODES: usize = 12;

fn basis() -> &'static SpectralBasis {
    static B: OnceLock<SpectralBasis> = OnceLock::new();
    B.get_or_init(|| SpectralBasis::build(&Domain::new(NX).unwrap(), MODES).unwrap())
}

fn model(kind: NoiseKind) -> NoiseModel {
    NoiseModel::new(basis(), &NoiseConfig::new(kind, 3, 0.5)).unwrap()
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, MODES)
}

fn faces() -> impl Strategy<Value = VectorGridField> {
    let d = Domain::new(NX).unwrap();
    let (nu, nv) = (d.n_u(), d.n_v());
    (prop::collection::vec(-1.0f64..1.0, nu), prop::collection::vec(-1.0f64..1.0, nv)).prop_map(move |(u, v)| {
        let mut f = VectorGridField::new(&d, u, v).unwrap();
        f.clear_boundary_normal();
        f
    })
}

fn field(c: Vec<f64>) -> VectorGridField {
    basis().velocity(c).unwrap().grid
}

fn h1(f: &VectorGridField) -> f64 {
    gradient_energy(basis().domain(), f, GradientMode::Free, None).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn leray_is_an_orthogonal_projection(f in faces(), g in faces()) {
        let p = basis().leray();
        let pf = p.project(&f).unwrap();
        let pg = p.project(&g).unwrap();
        prop_assert!(p.project(&pf).unwrap().sub(&pf).max_abs() <= 1e-12 * pf.max_abs().max(1.0));
        prop_assert!((pf.dot(&g) - f.dot(&pg)).abs() <= 1e-12 * f.norm() * g.norm());
        prop_assert!(pf.max_divergence() <= 1e-10 * f.max_abs().max(1.0));
    }

    #[test]
    fn advection_is_skew(a in coeffs(), b in coeffs(), c in coeffs()) {
        let d = basis().domain();
        let (phi, f, g) = (field(a), field(b), field(c));
        let af = advect_grid(d, &phi, &f);
        let ag = advect_grid(d, &phi, &g);
        prop_assert!(af.dot(&f).abs() <= 1e-11);
        prop_assert!((af.dot(&g) + f.dot(&ag)).abs() <= 1e-11);
    }

    #[test]
    fn strip_weights_grow_with_width(w1 in 0.001f64..0.5, w2 in 0.001f64..0.5) {
        let d = Domain::new(NX).unwrap();
        let (lo, hi) = if w1 <= w2 { (w1, w2) } else { (w2, w1) };
        let a = BoundaryStrip::new(&d, lo).unwrap();
        let b = BoundaryStrip::new(&d, hi).unwrap();
        for (x, y) in a.cell_weights.iter().zip(&b.cell_weights).chain(a.u_weights.iter().zip(&b.u_weights)) {
            prop_assert!((0.0..=1.0).contains(x) && (0.0..=1.0).contains(y));
            prop_assert!(x <= y);
        }
        prop_assert!((a.area() - a.exact_area()).abs() <= 1e-12);
    }

    #[test]
    fn strip_gradient_energy_is_dominated(c in coeffs(), w in 0.01f64..0.5) {
        let d = basis().domain();
        let f = field(c);
        let s = BoundaryStrip::new(d, w).unwrap();
        for mode in [GradientMode::NoSlip, GradientMode::Free] {
            prop_assert!(gradient_energy(d, &f, mode, Some(&s)) <= gradient_energy(d, &f, mode, None));
        }
    }

    #[test]
    fn noise_modes_are_linear(a in coeffs(), b in coeffs(), s in -2.0f64..2.0, t in -2.0f64..2.0) {
        for kind in [NoiseKind::Multiplicative, NoiseKind::TransportIto, NoiseKind::Salt] {
            let m = model(kind);
            let (f, g) = (field(a.clone()), field(b.clone()));
            let mut comb = f.scaled(s);
            comb.axpy(t, &g);
            for i in 0..m.n_noise() {
                let mut want = m.apply_grid(i, &f).unwrap().scaled(s);
                want.axpy(t, &m.apply_grid(i, &g).unwrap());
                let got = m.apply_grid(i, &comb).unwrap();
                prop_assert!(got.sub(&want).max_abs() <= 1e-12 * want.max_abs().max(1.0));
            }
        }
    }

    #[test]
    fn adjoint_duality(a in coeffs(), b in coeffs()) {
        for kind in [NoiseKind::TransportStratonovich, NoiseKind::Salt] {
            let m = model(kind);
            let (f, g) = (field(a.clone()), field(b.clone()));
            for i in 0..m.n_noise() {
                let lhs = m.apply_q(i, &g).unwrap().dot(&f);
                let rhs = g.dot(&m.apply_adjoint(i, &f).unwrap().total());
                prop_assert!((lhs - rhs).abs() <= 1e-10 * h1(&g) * h1(&f));
            }
        }
    }

    #[test]
    fn stratonovich_transport_is_energy_neutral(a in coeffs()) {
        let m = model(NoiseKind::TransportStratonovich);
        let phi = field(a);
        for i in 0..m.n_noise() {
            let q = m.apply_q(i, &phi).unwrap();
            let qq = m.apply_q(i, &q).unwrap().dot(&phi);
            prop_assert!((qq + q.norm_sq()).abs() <= 1e-10 * q.norm_sq().max(1.0));
        }
    }

    #[test]
    fn coarsening_keeps_increment_totals(seed in any::<u64>(), k in 1usize..4) {
        let fine = BrownianPath::generate(seed, k, 16, 1.0 / 64.0);
        let coarse = fine.coarsen(4);
        let total = |p: &BrownianPath| -> Vec<f64> {
            (0..k).map(|i| p.increments.iter().map(|row| row[i]).sum()).collect()
        };
        for (x, y) in total(&fine).iter().zip(total(&coarse)) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn noise_scaling_is_exact_at_alpha_one(nu in 1e-4f64..0.99, alpha in 0.5f64..2.0) {
        prop_assert_eq!(noise_scale(nu, 1.0).to_bits(), nu.to_bits());
        prop_assert_eq!(scaled_exponent(alpha), 2.0 * (alpha - 0.5));
        prop_assert!(noise_scale(nu, alpha) > 0.0);
    }
}

fn record() -> impl Strategy<Value = TrajectoryRecord> {
    (1usize..6, 1usize..4, any::<u64>(), prop::option::of((0usize..10, 0.0f64..1.0))).prop_flat_map(|(len, n, seed, stop)| {
        (
            prop::collection::vec(any::<f64>(), len),
            prop::collection::vec(prop::collection::vec(any::<f64>(), n), len),
            prop::collection::vec((any::<f64>(), any::<f64>(), any::<f64>()), len),
            prop::collection::vec(prop::collection::vec(any::<f64>(), n), len.saturating_sub(1)),
            "[0-9a-f]{0,64}",
        )
            .prop_map(move |(times, coeffs, energy, increments, digest)| TrajectoryRecord {
                times,
                coeffs,
                energy: energy.into_iter().map(|(a, b, c)| EnergyPoint { l2_sq: a, h1_sq: b, dissipation: c }).collect(),
                stop_hit: stop,
                seed,
                brownian_digest: digest,
                increments,
            })
    })
}

fn bits(r: &TrajectoryRecord) -> Vec<u64> {
    r.times
        .iter()
        .chain(r.coeffs.iter().flatten())
        .chain(r.energy.iter().flat_map(|e| [&e.l2_sq, &e.h1_sq, &e.dissipation]))
        .chain(r.increments.iter().flatten())
        .map(|x| x.to_bits())
        .collect()
}

proptest! {
    #[test]
    fn trajectory_bytes_round_trip(r in record()) {
        let back = TrajectoryRecord::from_bytes(&r.to_bytes()).unwrap();
        prop_assert_eq!(bits(&back), bits(&r));
        prop_assert_eq!(back.seed, r.seed);
        prop_assert_eq!(&back.brownian_digest, &r.brownian_digest);
        prop_assert_eq!(back.stop_hit.map(|s| (s.0, s.1.to_bits())), r.stop_hit.map(|s| (s.0, s.1.to_bits())));
        prop_assert_eq!(back.to_bytes(), r.to_bytes());
    }
}
