mod common;

use std::sync::OnceLock;

use kshs::calibration::{calibrate_frames, Calibration};
use kshs::histogram::{build_histogram_matrix, BinEdges, HistogramMatrix};
use kshs::kernel::kernel_matrix;
use kshs::linalg::whitened_range;
use kshs::metric::nuclear_distance;
use kshs::scattering::ScatteringConfig;
use kshs::subspace::{
    compute_descriptor, d_se, descriptor_from_histograms, kernel_pca, nystrom_reduce, subsample_support,
    support_indices, uniform_stride_indices, KernelSubspace, SubspaceParams, SupportStrategy,
};
use kshs::synth::{random_histograms, random_orthogonal, RANDOM_FINGERPRINT};
use kshs::{Fingerprint, KshsError};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

use common::{rng, synthetic_frames};

struct Video {
    calibration: Calibration,
    h: HistogramMatrix,
}

/// Histogram matrix of one 40-frame synthetic video, calibrated on itself.
fn video() -> &'static Video {
    static VIDEO: OnceLock<Video> = OnceLock::new();
    VIDEO.get_or_init(|| {
        let scattering = ScatteringConfig::default();
        let bank = scattering.filter_bank().unwrap();
        let frames = synthetic_frames(0, 3, 40, 128);
        let calibration = calibrate_frames(&frames, &bank, scattering, true, 20, 0.99).unwrap();
        let h = build_histogram_matrix(&frames, &bank, &calibration.edges, 2, true).unwrap();
        Video { calibration, h }
    })
}

fn wrap(c: DMatrix<f64>, support: HistogramMatrix) -> KernelSubspace {
    let edges = BinEdges::new(vec![1.0; support.n_bands()], support.n_bins()).unwrap();
    KernelSubspace::new(c, support, edges, RANDOM_FINGERPRINT, SupportStrategy::UniformStride).unwrap()
}

fn random_h(seed: u64, columns: usize) -> HistogramMatrix {
    random_histograms(&mut rng(seed), 4, 6, columns)
}

#[test]
fn kernel_pca_single_column() {
    let h = random_h(1, 1);
    let c = kernel_pca(&h, 1).unwrap();
    assert!((c[(0, 0)] - 1.0).abs() < 1e-12);
}

#[test]
fn kernel_pca_is_orthonormal_and_optimal() {
    let h = random_h(2, 20);
    let k = kernel_matrix(&h, &h).unwrap();
    let c = kernel_pca(&h, 5).unwrap();
    assert!(kshs::linalg::orthogonality_residual(&c, &k) < 1e-8);
    // captured second moment of all feature vectors, for an orthonormal basis Φ(H_S)W
    let captured = |basis_over_h: &DMatrix<f64>| (basis_over_h.transpose() * &k * &k * basis_over_h).trace();
    let best = captured(&c);
    let mut r = rng(3);
    for _ in 0..100 {
        let mut picks: Vec<usize> = (0..20).collect();
        for i in 0..5 {
            let j = r.random_range(i..20);
            picks.swap(i, j);
        }
        let picks = &picks[..5];
        let sub = h.select(picks).unwrap();
        let w = whitened_range(&kernel_matrix(&sub, &sub).unwrap(), 5).unwrap();
        let mut embedded = DMatrix::zeros(20, w.ncols());
        for (row, &p) in picks.iter().enumerate() {
            embedded.set_row(p, &w.row(row));
        }
        assert!(best >= captured(&embedded) - 1e-9);
    }
}

#[test]
fn rank_deficiency_fails_loudly() {
    let h = random_h(4, 1);
    let repeated = h.select(&[0, 0, 0]).unwrap();
    assert!(matches!(kernel_pca(&repeated, 2), Err(KshsError::RankDeficient { needed: 2, found: 1 })));
}

#[test]
fn stride_examples() {
    assert_eq!(uniform_stride_indices(7, 7), (0..7).collect::<Vec<_>>());
    assert_eq!(
        uniform_stride_indices(50, 15),
        vec![1, 5, 8, 11, 15, 18, 21, 25, 28, 31, 35, 38, 41, 45, 48]
    );
    assert_eq!(uniform_stride_indices(9, 1), vec![4]);
    let h = random_h(5, 6);
    assert_eq!(subsample_support(&h, 6, SupportStrategy::UniformStride).unwrap(), h);
    assert!(matches!(
        subsample_support(&h, 7, SupportStrategy::UniformStride),
        Err(KshsError::SupportTooLarge { support: 7, available: 6 })
    ));
}

#[test]
fn kmedoid_support_is_distinct() {
    let h = random_h(6, 25);
    let idx = support_indices(&h, 8, SupportStrategy::KMedoids).unwrap();
    assert_eq!(idx.len(), 8);
    assert!(idx.windows(2).all(|w| w[0] < w[1]) && idx[7] < 25);
    let params = SubspaceParams {
        dim: 3,
        support: 8,
        strategy: SupportStrategy::KMedoids,
    };
    let edges = BinEdges::new(vec![1.0; 4], 6).unwrap();
    let d = descriptor_from_histograms(&h, &edges, RANDOM_FINGERPRINT, &params).unwrap();
    assert!(d.orthogonality_residual() < 1e-6);
    assert_eq!(d.strategy(), SupportStrategy::KMedoids);
}

#[test]
fn d_se_examples() {
    let h = random_h(7, 10);
    let c = kernel_pca(&h, 3).unwrap();
    let x = wrap(c.clone(), h.clone());
    assert!(d_se(&x, &x).unwrap() < 1e-6);
    let flipped = wrap(-c, h);
    assert!((d_se(&x, &flipped).unwrap().powi(2) - 6.0).abs() < 1e-9);

    // all mass in bin 0 versus bin 1 of every band: zero cross Gram block
    let one_hot = |bin: usize| {
        let mut m = DMatrix::zeros(6, 3);
        for col in 0..3 {
            for band in 0..3 {
                m[(band * 2 + bin, col)] = if col == band { 1.0 } else { 0.0 };
            }
            m[(col * 2 + bin, col)] = 0.0;
            m[(col * 2 + 1 - bin, col)] = 1.0;
            for band in 0..3 {
                if band != col {
                    m[(band * 2 + bin, col)] = 1.0;
                }
            }
        }
        HistogramMatrix::new(m, 3, 2, false).unwrap()
    };
    let (ha, hb) = (one_hot(0), one_hot(1));
    assert!(kernel_matrix(&ha, &hb).unwrap().iter().all(|v| *v == 0.0));
    let a = wrap(kernel_pca(&ha, 2).unwrap(), ha);
    let b = wrap(kernel_pca(&hb, 2).unwrap(), hb);
    assert!((d_se(&a, &b).unwrap().powi(2) - 2.0).abs() < 1e-9);
}

#[test]
fn d_se_validation() {
    let h = random_h(8, 6);
    let c = kernel_pca(&h, 2).unwrap();
    let x = wrap(c.clone(), h.clone());
    let other = KernelSubspace::new(
        c.clone(),
        h.clone(),
        x.edges().clone(),
        Fingerprint([1; 32]),
        SupportStrategy::UniformStride,
    )
    .unwrap();
    assert!(matches!(d_se(&x, &other), Err(KshsError::FingerprintMismatch { .. })));
    let stretched = wrap(c * 2.0, h);
    assert!(matches!(d_se(&x, &stretched), Err(KshsError::NotOrthogonal(_))));
}

#[test]
fn nystrom_full_support_recovers_subspace() {
    let v = video();
    let c = kernel_pca(&v.h, 5).unwrap();
    let full = wrap(c.clone(), v.h.clone());
    let reduced = wrap(nystrom_reduce(&c, &v.h, &v.h).unwrap(), v.h.clone());
    assert!(reduced.orthogonality_residual() < 1e-6);
    assert!(d_se(&full, &reduced).unwrap() < 1e-6);
}

/// Nested supports: the 5-point stride, then the 10- and 15-point strides,
/// then everything, each extending the previous set.
fn nested_supports(n: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = Vec::new();
    for k in [5, 10, 15, n] {
        for i in uniform_stride_indices(n, k) {
            if !order.contains(&i) {
                order.push(i);
            }
        }
    }
    [5, 10, 15, n].iter().map(|&k| order[..k].to_vec()).collect()
}

#[test]
fn nystrom_error_shrinks_over_nested_supports() {
    let v = video();
    let c = kernel_pca(&v.h, 5).unwrap();
    let full = wrap(c.clone(), v.h.clone());
    let mut previous = f64::INFINITY;
    for support in nested_supports(v.h.len()) {
        let h_tilde = v.h.select(&support).unwrap();
        let reduced = wrap(nystrom_reduce(&c, &v.h, &h_tilde).unwrap(), h_tilde);
        assert!(reduced.orthogonality_residual() < 1e-6);
        let d = d_se(&full, &reduced).unwrap();
        assert!(d <= previous + 1e-9, "{d} > {previous}");
        previous = d;
    }
    assert!(previous < 1e-6);
}

#[test]
fn nystrom_beats_other_orthonormal_bases_on_the_support() {
    let h = random_h(9, 30);
    let c = kernel_pca(&h, 3).unwrap();
    let full = wrap(c.clone(), h.clone());
    let h_tilde = subsample_support(&h, 8, SupportStrategy::UniformStride).unwrap();
    let best = d_se(&full, &wrap(nystrom_reduce(&c, &h, &h_tilde).unwrap(), h_tilde.clone())).unwrap();
    let w = whitened_range(&kernel_matrix(&h_tilde, &h_tilde).unwrap(), 3).unwrap();
    let mut r = rng(10);
    for _ in 0..50 {
        let q = random_orthogonal(&mut r, w.ncols());
        let candidate = wrap(&w * q.columns(0, 3), h_tilde.clone());
        assert!(candidate.orthogonality_residual() < 1e-6);
        assert!(best <= d_se(&full, &candidate).unwrap() + 1e-12);
    }
}

#[test]
fn descriptor_shapes_on_fifty_frames() {
    let scattering = ScatteringConfig::default();
    let bank = scattering.filter_bank().unwrap();
    let frames = synthetic_frames(2, 1, 50, 128);
    let calibration = calibrate_frames(&frames, &bank, scattering, true, 20, 0.99).unwrap();
    let d = compute_descriptor(&frames, &bank, &calibration, &SubspaceParams::default()).unwrap();
    assert_eq!(d.coefficients().shape(), (15, 5));
    assert_eq!(d.support().columns().shape(), (2260, 15));
    assert_eq!(d.fingerprint(), calibration.fingerprint());
    assert!(d.orthogonality_residual() < 1e-6);
    let again = compute_descriptor(&frames, &bank, &calibration, &SubspaceParams::default()).unwrap();
    assert_eq!(d, again);
}

#[test]
fn degenerate_sizing_gives_square_coefficients() {
    let v = video();
    let h = v.h.select(&[0, 10, 20, 30]).unwrap();
    let params = SubspaceParams {
        dim: 4,
        support: 4,
        strategy: SupportStrategy::UniformStride,
    };
    let d = descriptor_from_histograms(&h, &v.calibration.edges, v.calibration.fingerprint(), &params).unwrap();
    assert_eq!(d.coefficients().shape(), (4, 4));
    assert!(d.orthogonality_residual() < 1e-6);
}

#[test]
fn full_support_descriptor_ignores_frame_order() {
    let v = video();
    let n = v.h.len();
    let params = SubspaceParams {
        dim: 5,
        support: n,
        strategy: SupportStrategy::UniformStride,
    };
    let mut perm: Vec<usize> = (0..n).collect();
    let mut r = rng(12);
    for i in (1..n).rev() {
        perm.swap(i, r.random_range(0..=i));
    }
    let fp = v.calibration.fingerprint();
    let a = descriptor_from_histograms(&v.h, &v.calibration.edges, fp, &params).unwrap();
    let b = descriptor_from_histograms(&v.h.select(&perm).unwrap(), &v.calibration.edges, fp, &params).unwrap();
    assert!(nuclear_distance(&a, &b).unwrap() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn prop_descriptors_are_orthonormal(seed in any::<u64>(), frames in 6usize..25, dim in 1usize..4) {
        let h = random_h(seed, frames);
        let support = (frames / 2).max(dim);
        let params = SubspaceParams { dim, support, strategy: SupportStrategy::UniformStride };
        let edges = BinEdges::new(vec![1.0; 4], 6).unwrap();
        let d = descriptor_from_histograms(&h, &edges, RANDOM_FINGERPRINT, &params).unwrap();
        prop_assert!(d.orthogonality_residual() < 1e-6);
        prop_assert!(d.dim() <= d.support_size());
    }

    #[test]
    fn prop_full_support_is_isometric(seed in any::<u64>(), frames in 3usize..20, dim in 1usize..3) {
        let h = random_h(seed, frames);
        let c = kernel_pca(&h, dim).unwrap();
        let full = wrap(c.clone(), h.clone());
        let reduced = wrap(nystrom_reduce(&c, &h, &h).unwrap(), h.clone());
        prop_assert!(d_se(&full, &reduced).unwrap() < 1e-6);
    }

    #[test]
    fn prop_stride_indices_are_distinct(n in 1usize..200, k in 1usize..200) {
        prop_assume!(k <= n);
        let idx = uniform_stride_indices(n, k);
        prop_assert_eq!(idx.len(), k);
        prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(idx[k - 1] < n);
    }
}
