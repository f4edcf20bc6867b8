mod common;

use common::*;
use mcf_core::operators::{
    embed_sketches, haar_forward, haar_inverse, srop_adjoint, srop_apply, CirculantMatrix,
    LinearOperator,
};
use mcf_core::physics::{measure, NoiseModel};
use mcf_core::recon::SparsityBasis;
use mcf_core::rng::rng_from_seed;
use mcf_core::{
    compute_visibilities, fermat_spiral_layout, integer_grid_layout, interf_adjoint,
    interf_forward, make_sketches, operators::deterministic_probe_set, operators::recover_matrix,
    ImageGrid, Optics, SensingOp, SketchDistribution,
};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn spiral(q: usize, n: usize) -> (mcf_core::CoreLayout, ImageGrid, mcf_core::VisibilitySet) {
    let layout = fermat_spiral_layout(q, 2e-4, Optics::default()).unwrap();
    let grid = ImageGrid::fitted(&layout, n).unwrap();
    let vis = compute_visibilities(&layout, &grid).unwrap();
    (layout, grid, vis)
}

fn adjoint_gap(lhs: f64, rhs: f64, scale: f64) -> f64 {
    (lhs - rhs).abs() / scale.max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn interf_output_is_exactly_hermitian(seed: u64, q in 2usize..12, n in prop::sample::select(vec![8usize, 16])) {
        let (_, grid, vis) = spiral(q, n);
        let f = random_image(n, &mut rng_from_seed(seed));
        let h = interf_forward(f.view(), &vis, &grid).unwrap();
        let e = h.entries();
        for j in 0..q {
            for k in 0..q {
                prop_assert_eq!(e[[j, k]], e[[k, j]].conj());
            }
        }
    }

    #[test]
    fn interf_forward_is_linear(seed: u64, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let (_, grid, vis) = spiral(9, 16);
        let mut rng = rng_from_seed(seed);
        let f = random_image(16, &mut rng);
        let g = random_image(16, &mut rng);
        let lhs = interf_forward((&f * a + &g * b).view(), &vis, &grid).unwrap();
        let hf = interf_forward(f.view(), &vis, &grid).unwrap();
        let hg = interf_forward(g.view(), &vis, &grid).unwrap();
        let rhs = hf.entries() * Complex64::new(a, 0.0) + hg.entries() * Complex64::new(b, 0.0);
        let scale = frob_c(&rhs).max(frob_c(hf.entries()) + frob_c(hg.entries()));
        prop_assert!(frob_c(&(lhs.entries() - &rhs)) <= 1e-12 * scale);
    }

    #[test]
    fn nonnegative_lattice_images_give_psd_matrices(seed: u64, side in 2usize..5) {
        let layout = integer_grid_layout(side, 1e-5, Optics::default()).unwrap();
        let grid = ImageGrid::lattice(&layout, 1e-5, 16).unwrap();
        let vis = compute_visibilities(&layout, &grid).unwrap();
        let f = random_nonnegative_image(16, &mut rng_from_seed(seed));
        let h = interf_forward(f.view(), &vis, &grid).unwrap();
        prop_assert!(min_eigenvalue(h.entries()) >= -1e-10 * h.norm());
    }

    #[test]
    fn physical_matrix_of_nonnegative_image_is_psd(seed: u64) {
        // Recovered from noiseless speckle measurements with polarization probes.
        let (layout, grid, _) = spiral(8, 16);
        let f = random_nonnegative_image(16, &mut rng_from_seed(seed));
        let probes = deterministic_probe_set(8);
        let y: Vec<f64> = (0..probes.len())
            .map(|m| measure(f.view(), probes.vector(m), &layout, &grid, &NoiseModel::none(), 0).unwrap())
            .collect();
        let h = recover_matrix(&y, 8).unwrap();
        prop_assert!(min_eigenvalue(h.entries()) >= -1e-10 * h.norm());
    }

    #[test]
    fn interf_adjoint_identity(seed: u64, q in 2usize..10) {
        let (_, grid, vis) = spiral(q, 16);
        let mut rng = rng_from_seed(seed);
        let f = random_image(16, &mut rng);
        let h = random_hermitian(q, &mut rng);
        let bf = interf_forward(f.view(), &vis, &grid).unwrap();
        let lhs = bf.inner(&h);
        let rhs = (&f * &interf_adjoint(&h, &vis, &grid).unwrap()).sum();
        prop_assert!(adjoint_gap(lhs, rhs, bf.norm() * h.norm()) < 1e-10);
    }

    #[test]
    fn srop_adjoint_identity(seed: u64, q in 1usize..10, m in 1usize..30) {
        let mut rng = rng_from_seed(seed);
        let h = random_hermitian(q, &mut rng);
        let sk = make_sketches(m, q, SketchDistribution::ComplexGaussian, rng.gen()).unwrap();
        let y: Array1<f64> = (0..m).map(|_| rng.gen::<f64>() - 0.5).collect();
        let ah = srop_apply(&h, &sk).unwrap();
        let lhs = ah.dot(&y);
        let rhs = h.inner(&srop_adjoint(y.view(), &sk).unwrap());
        prop_assert!(adjoint_gap(lhs, rhs, norm2(&ah) * norm2(&y)) < 1e-10);
    }

    #[test]
    fn general_sensing_adjoint_identity(seed: u64, q in 2usize..12, m in 1usize..40) {
        let (layout, grid, _) = spiral(q, 16);
        let mut rng = rng_from_seed(seed);
        let sk = make_sketches(m, q, SketchDistribution::ComplexGaussian, rng.gen()).unwrap();
        let op = SensingOp::general(layout, grid, sk).unwrap();
        let f = random_image(16, &mut rng);
        let y: Array1<f64> = (0..m).map(|_| rng.gen::<f64>() - 0.5).collect();
        let bf = op.apply(f.view()).unwrap();
        let rhs = (&f * &op.adjoint(y.view()).unwrap()).sum();
        prop_assert!(adjoint_gap(bf.dot(&y), rhs, norm2(&bf) * norm2(&y)) < 1e-10);
    }

    #[test]
    fn circulant_sensing_adjoint_identity(seed: u64, side in 2usize..7, m in 1usize..30) {
        let mut rng = rng_from_seed(seed);
        let sk = make_sketches(m, side * side, SketchDistribution::ComplexGaussian, rng.gen()).unwrap();
        let op = SensingOp::circulant(side, 1e-5, Optics::default(), sk).unwrap();
        let f = random_image(side, &mut rng);
        let y: Array1<f64> = (0..m).map(|_| rng.gen::<f64>() - 0.5).collect();
        let bf = op.apply(f.view()).unwrap();
        let rhs = (&f * &op.adjoint(y.view()).unwrap()).sum();
        prop_assert!(adjoint_gap(bf.dot(&y), rhs, norm2(&bf) * norm2(&y)) < 1e-10);
    }

    #[test]
    fn circulant_matrix_adjoint_identity(seed: u64, n0 in 1usize..6, n1 in 1usize..6) {
        let mut rng = rng_from_seed(seed);
        let mut c = || Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        let v = Array2::from_shape_simple_fn((n0, n1), &mut c);
        let x: Array1<Complex64> = (0..n0 * n1).map(|_| c()).collect();
        let y: Array1<Complex64> = (0..n0 * n1).map(|_| c()).collect();
        let m = CirculantMatrix::from_generator(v.view());
        let cx = m.matvec(x.view()).unwrap();
        let lhs: Complex64 = y.iter().zip(&cx).map(|(a, b)| a.conj() * b).sum();
        let rhs: Complex64 = m.rmatvec(y.view()).unwrap().iter().zip(&x).map(|(a, b)| a.conj() * b).sum();
        let scale = cx.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() * y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!((lhs - rhs).norm() < 1e-10 * scale);
    }

    #[test]
    fn haar_adjoint_is_inverse(seed: u64, log_side in 1u32..6) {
        let n = 1usize << log_side;
        let mut rng = rng_from_seed(seed);
        let f = random_image(n, &mut rng);
        let c = random_image(n, &mut rng);
        let lhs = (&haar_forward(f.view()).unwrap() * &c).sum();
        let rhs = (&f * &haar_inverse(c.view()).unwrap()).sum();
        let scale = f.iter().map(|v| v * v).sum::<f64>().sqrt() * c.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((lhs - rhs).abs() < 1e-10 * scale);
    }

    #[test]
    fn general_and_circulant_agree(seed: u64, q_side in 2usize..5) {
        let n = 2 * q_side.next_power_of_two().max(4);
        let pitch = 1e-5;
        let layout = integer_grid_layout(q_side, pitch, Optics::default()).unwrap();
        let grid = ImageGrid::lattice(&layout, pitch, n).unwrap();
        let mut rng = rng_from_seed(seed);
        let sk = make_sketches(12, q_side * q_side, SketchDistribution::ComplexGaussian, rng.gen()).unwrap();
        let general = SensingOp::general(layout, grid, sk.clone()).unwrap();
        let circ = SensingOp::circulant(n, pitch, Optics::default(), embed_sketches(&sk, q_side, n).unwrap()).unwrap();
        let f = random_image(n, &mut rng);
        let a = general.apply(f.view()).unwrap();
        let b = circ.apply(f.view()).unwrap();
        prop_assert!(rel_diff(&a, &b) < 1e-12);
    }

    #[test]
    fn fused_and_staged_paths_agree(seed: u64, q in 2usize..10, m in 1usize..20) {
        let (layout, grid, _) = spiral(q, 8);
        let mut rng = rng_from_seed(seed);
        let sk = make_sketches(m, q, SketchDistribution::Steering, rng.gen()).unwrap();
        let op = SensingOp::general(layout, grid, sk).unwrap();
        let f = random_image(8, &mut rng);
        prop_assert!(rel_diff(&op.apply(f.view()).unwrap(), &op.apply_reference(f.view()).unwrap()) < 1e-12);
        let y: Array1<f64> = (0..m).map(|_| rng.gen::<f64>() - 0.5).collect();
        let a = Array1::from_iter(op.adjoint(y.view()).unwrap());
        let b = Array1::from_iter(op.adjoint_reference(y.view()).unwrap());
        prop_assert!(rel_diff(&a, &b) < 1e-10);
    }

    #[test]
    fn linear_operator_view_matches_image_api(seed: u64) {
        let (layout, grid, _) = spiral(7, 8);
        let mut rng = rng_from_seed(seed);
        let op = SensingOp::general(layout, grid, make_sketches(9, 7, SketchDistribution::ComplexGaussian, 1).unwrap()).unwrap();
        let f = random_image(8, &mut rng);
        let flat = Array1::from_iter(f.iter().copied());
        prop_assert_eq!(op.matvec(flat.view()), op.apply(f.view()).unwrap());
    }

    #[test]
    fn sketches_are_reproducible(seed: u64, m in 1usize..20, q in 1usize..10) {
        for d in [SketchDistribution::ComplexGaussian, SketchDistribution::Steering] {
            prop_assert_eq!(make_sketches(m, q, d, seed).unwrap(), make_sketches(m, q, d, seed).unwrap());
        }
    }

    #[test]
    fn basis_names_parse_case_insensitively(upper: bool) {
        let cases = [("identity", SparsityBasis::Identity), ("haar", SparsityBasis::Haar)];
        for (name, b) in cases {
            let text = if upper { name.to_uppercase() } else { name.to_string() };
            prop_assert_eq!(text.parse::<SparsityBasis>().unwrap(), b);
        }
    }
}
