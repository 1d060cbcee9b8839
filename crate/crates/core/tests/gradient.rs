mod common;

use std::f64::consts::LOG2_E;

use ccsc_core::fixtures::{siso_three_user, two_user_bpsk};
use ccsc_core::infotheory::sum_rate_mc;
use ccsc_core::mmse::{mmse_full, mmse_interference, sum_rate_gradient};
use ccsc_core::model::effective_channel;
use ccsc_core::sampling::random_channel_blocks;
use ccsc_core::{
    CMatrix, ChannelSet, Constellation, ConstellationKind, EnumerationCap, JointSymbolTable, PrecoderSet, Scenario,
    ScenarioParts, C64,
};
use nalgebra::DMatrix;

const NODES: usize = 40;

fn random_siso(seed: u64, power_db: f64) -> Scenario {
    Scenario::new(ScenarioParts {
        tx_antennas: vec![1; 3],
        rx_antennas: vec![1; 3],
        streams: vec![1; 3],
        power_db,
        constellation: Constellation::new(ConstellationKind::Psk, 4).unwrap(),
        channels: ChannelSet::from_rx_major(random_channel_blocks(seed, 0, &[1, 1, 1], &[1, 1, 1])).unwrap(),
        precoders: Some(PrecoderSet(
            [0.3, 1.4, -2.2].iter().map(|&a| CMatrix::from_element(1, 1, C64::from_polar(0.9, a))).collect(),
        )),
    })
    .unwrap()
}

/// Backs the precoders off the power budget so perturbations stay feasible.
fn interior(s: Scenario) -> Scenario {
    let v = PrecoderSet(s.precoders().iter().map(|v| v * C64::from(0.9)).collect());
    s.with_precoders(v).unwrap()
}

fn symbols(table: &JointSymbolTable) -> Vec<Vec<C64>> {
    (0..table.total()).map(|k| table.vector(k).unwrap().iter().copied().collect()).collect()
}

struct Receiver {
    full: CMatrix,
    interference: CMatrix,
    e_full: DMatrix<C64>,
    e_interference: DMatrix<C64>,
    rate: f64,
}

fn receiver(s: &Scenario, rx: usize) -> Receiver {
    let p = s.power_linear();
    let eff = effective_channel(s, rx);
    let full = JointSymbolTable::full(s, EnumerationCap::default()).unwrap();
    let rest = JointSymbolTable::excluding(s, rx, EnumerationCap::default()).unwrap();
    let pf = common::received_points(&eff.full, &full, p);
    let pi = common::received_points(&eff.interference, &rest, p);
    Receiver {
        rate: common::quadrature_mi(&pf, NODES) - common::quadrature_mi(&pi, NODES),
        e_full: common::quadrature_mmse(&pf, &symbols(&full), NODES),
        e_interference: common::quadrature_mmse(&pi, &symbols(&rest), NODES),
        full: eff.full,
        interference: eff.interference,
    }
}

fn quadrature_sum_rate(s: &Scenario) -> f64 {
    (0..s.users()).map(|rx| receiver(s, rx).rate).sum()
}

/// Scalar form of the MMSE gradient for one-stream, one-antenna users,
/// with every expectation taken by quadrature.
fn quadrature_gradient(s: &Scenario) -> Vec<C64> {
    let k = s.users();
    let p = s.power_linear();
    let rx: Vec<Receiver> = (0..k).map(|j| receiver(s, j)).collect();
    (0..k)
        .map(|i| {
            let mut g = C64::new(0.0, 0.0);
            for (j, r) in rx.iter().enumerate() {
                let h = s.channel(i, j)[(0, 0)].conj();
                g += h * (&r.full * &r.e_full)[(0, i)];
                if j != i {
                    let col = if i > j { i - 1 } else { i };
                    g -= h * (&r.interference * &r.e_interference)[(0, col)];
                }
            }
            g * p * LOG2_E
        })
        .collect()
}

fn perturbed(s: &Scenario, i: usize, delta: C64) -> Scenario {
    let mut v = s.precoders().clone();
    v.0[i][(0, 0)] += delta;
    s.with_precoders(v).unwrap()
}

fn relative(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

fn split(g: &[C64]) -> Vec<f64> {
    g.iter().flat_map(|z| [2.0 * z.re, 2.0 * z.im]).collect()
}

#[test]
fn quadrature_gradient_matches_exact_differences() {
    const H: f64 = 1e-5;
    for s in [random_siso(5, 5.0), interior(siso_three_user(5.0)), interior(two_user_bpsk(3.0))] {
        let analytic = split(&quadrature_gradient(&s));
        let fd: Vec<f64> = (0..s.users())
            .flat_map(|i| {
                let s = &s;
                [C64::new(H, 0.0), C64::new(0.0, H)].map(move |d| {
                    (quadrature_sum_rate(&perturbed(s, i, d)) - quadrature_sum_rate(&perturbed(s, i, -d))) / (2.0 * H)
                })
            })
            .collect();
        let err = relative(&analytic, &fd);
        assert!(err <= 1e-3, "relative error {err:.2e}");
    }
}

#[test]
fn monte_carlo_gradient_tracks_quadrature() {
    let s = random_siso(5, 5.0);
    let exact = split(&quadrature_gradient(&s));
    let mc = split(&sum_rate_gradient(&s, 50_000, 3).unwrap().gradients.iter().map(|g| g[(0, 0)]).collect::<Vec<_>>());
    let err = relative(&mc, &exact);
    assert!(err <= 1e-2, "relative error {err:.2e}");
}

#[test]
fn bpsk_gradient_matches_common_noise_differences() {
    const H: f64 = 1e-4;
    // the MMSE-based estimate carries about 4/sqrt(samples) relative noise here
    const SAMPLES: usize = 400_000;
    let s = interior(two_user_bpsk(3.0));
    let g = sum_rate_gradient(&s, SAMPLES, 11).unwrap();
    let analytic = split(&g.gradients.iter().map(|g| g[(0, 0)]).collect::<Vec<_>>());
    let f = |s: Scenario| sum_rate_mc(&s, SAMPLES, 11).unwrap().bits;
    let fd: Vec<f64> = (0..2)
        .flat_map(|i| {
            [C64::new(H, 0.0), C64::new(0.0, H)]
                .map(|d| (f(perturbed(&s, i, d)) - f(perturbed(&s, i, -d))) / (2.0 * H))
        })
        .collect();
    let err = relative(&analytic, &fd);
    assert!(err <= 1e-2, "relative error {err:.2e}");
}

#[test]
fn mmse_matrices_match_quadrature() {
    let s = two_user_bpsk(6.0);
    for rx in 0..2 {
        let r = receiver(&s, rx);
        let full = mmse_full(&s, rx, 100_000, 5).unwrap().matrix;
        let intf = mmse_interference(&s, rx, 100_000, 5).unwrap().matrix;
        assert!((&full - &r.e_full).norm() < 1e-2, "rx {rx}: {} vs {}", r.e_full, full);
        assert!((intf - &r.e_interference).norm() < 1e-2, "rx {rx}");
    }
}

#[test]
fn mmse_matrices_are_hermitian_psd() {
    let s = random_siso(8, 2.0);
    for rx in 0..3 {
        for m in [
            mmse_full(&s, rx, 3000, 1).unwrap().matrix,
            mmse_interference(&s, rx, 3000, 1).unwrap().matrix,
        ] {
            assert!((&m - m.adjoint()).norm() < 1e-12);
            let eig = m.symmetric_eigenvalues();
            assert!(eig.iter().all(|&l| l > -1e-12), "{eig}");
            // error covariance of unit-energy symbols is bounded by the prior
            assert!(eig.iter().all(|&l| l < 1.0 + 1e-9), "{eig}");
        }
    }
}
