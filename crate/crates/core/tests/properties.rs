//! Invariants over randomized inputs.

use genre_core::costmodel::{additions_per_pixel, bram_count, CostQuery, Phase};
use genre_core::dump::{read_dump, write_dump};
use genre_core::fixedpoint::{quantize, QFormat, Rounding};
use genre_core::metrics::{psnr, ssim, Peak, SsimConfig};
use genre_core::uwt::analyse;
use genre_core::{
    decompose, shrink_and_combine, solve_closed_form, solve_gradient_descent, Distribution, FilterRealization, GramSystem, Image,
    NoiseModel, SolverConfig,
};
use proptest::prelude::*;

fn realization() -> impl Strategy<Value = FilterRealization> {
    prop::sample::select(FilterRealization::ALL.to_vec())
}

fn distribution() -> impl Strategy<Value = Distribution> {
    prop::sample::select(vec![Distribution::Gaussian, Distribution::Uniform, Distribution::Laplacian])
}

/// Side lengths from {8, 16, 32}, levels 1..=3, and pixel data.
fn image_case() -> impl Strategy<Value = (Image, usize)> {
    (prop::sample::select(vec![8usize, 16, 32]), prop::sample::select(vec![8usize, 16, 32]), 1usize..=3).prop_flat_map(|(w, h, levels)| {
        prop::collection::vec(-500.0f64..500.0, w * h).prop_map(move |v| (Image::new(w, h, v).unwrap(), levels))
    })
}

fn image_8bit(w: usize, h: usize) -> impl Strategy<Value = Image> {
    prop::collection::vec(0u8..=255, w * h).prop_map(move |v| Image::from_u8(w, h, &v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn synthesis_images_sum_to_the_input((y, levels) in image_case(), r in realization()) {
        let psis = analyse(&y, levels, r).unwrap();
        prop_assert!(psis.sum().max_abs_diff(&y).unwrap() < 1e-9);
        let ones = vec![1.0; psis.len()];
        prop_assert!(shrink_and_combine(&psis, &ones).unwrap().max_abs_diff(&y).unwrap() < 1e-9);
        let zeros = vec![0.0; psis.len()];
        prop_assert!(shrink_and_combine(&psis, &zeros).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn realizations_agree((y, levels) in image_case(), a in realization(), b in realization()) {
        let (x, z) = (decompose(&y, levels, a).unwrap(), decompose(&y, levels, b).unwrap());
        for (p, q) in x.bands().iter().zip(z.bands()) {
            prop_assert!(p.max_abs_diff(q).unwrap() < 1e-9);
        }
    }

    #[test]
    fn constant_images_have_empty_details(c in -300.0f64..300.0, levels in 1usize..=4, r in realization()) {
        let bands = decompose(&Image::filled(16, 16, c), levels, r).unwrap();
        let (details, ll) = bands.bands().split_at(3 * levels);
        prop_assert!(details.iter().all(|d| d.data().iter().all(|v| v.abs() < 1e-9)));
        prop_assert!(ll[0].data().iter().all(|v| (v - c).abs() < 1e-9));
    }

    #[test]
    fn quantize_is_idempotent(x in -1000.0f64..1000.0, int_bits in 0u32..12, frac_bits in 0u32..16, signed: bool, nearest: bool) {
        let fmt = if signed { QFormat::signed(int_bits, frac_bits) } else { QFormat::unsigned(int_bits, frac_bits) };
        let mode = if nearest { Rounding::Nearest } else { Rounding::Truncate };
        let once = quantize(x, fmt, mode);
        let twice = quantize(once.to_f64(), fmt, mode);
        prop_assert_eq!(once.raw, twice.raw);
        prop_assert!(!twice.overflow);
        prop_assert!(once.to_f64() >= fmt.min_value() && once.to_f64() <= fmt.max_value());
        if !once.overflow {
            prop_assert!((once.to_f64() - x).abs() <= fmt.lsb());
        }
    }

    #[test]
    fn bram_count_is_monotone(
        r in prop::sample::select(vec![FilterRealization::Uwt1d, FilterRealization::Uwt2d, FilterRealization::Ruwt1d, FilterRealization::Ruwt2d]),
        rec: bool,
        level in 1usize..6,
        bits in 4u32..32,
        width in prop::sample::select(vec![64usize, 128, 256, 512, 1024]),
    ) {
        let phase = if rec { Phase::Recomposition } else { Phase::Decomposition };
        let q = CostQuery { image_width: width, bit_width: bits, ..CostQuery::new(r, phase, level) };
        let base = bram_count(&q).unwrap();
        let deeper = bram_count(&CostQuery { level: level + 1, ..q }).unwrap();
        let wider = bram_count(&CostQuery { bit_width: bits + 1, ..q }).unwrap();
        let longer = bram_count(&CostQuery { image_width: width * 2, ..q }).unwrap();
        prop_assert!(deeper.blocks >= base.blocks);
        prop_assert!(wider.blocks >= base.blocks);
        prop_assert!(longer.blocks >= base.blocks);
        prop_assert!(base.physical as f64 >= genre_core::costmodel::ratio_to_f64(base.blocks));
        prop_assert!(additions_per_pixel(&q).is_ok());
    }

    #[test]
    fn noise_is_reproducible_and_row_local(seed: u64, dist in distribution(), sigma in 0.5f64..50.0) {
        let model = NoiseModel::new(dist, sigma, seed);
        let a = Image::zeros(16, 8).add_noise(&model).unwrap();
        prop_assert_eq!(&a, &Image::zeros(16, 8).add_noise(&model).unwrap());
        // a taller image shares the leading rows
        let tall = Image::zeros(16, 24).add_noise(&model).unwrap();
        prop_assert_eq!(a.data(), &tall.data()[..16 * 8]);
        let other = Image::zeros(16, 8).add_noise(&NoiseModel::new(dist, sigma, seed.wrapping_add(1))).unwrap();
        prop_assert_ne!(&a, &other);
    }

    #[test]
    fn gradient_descent_matches_closed_form_on_conditioned_systems(
        entries in prop::collection::vec(-1.0f64..1.0, 16),
        diag in prop::collection::vec(0.5f64..2.0, 4),
        c in prop::collection::vec(-5.0f64..5.0, 4),
    ) {
        // Q = A^T A + D is positive definite with condition below ~40
        let n = 4;
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                gram[i * n + j] = (0..n).map(|k| entries[k * n + i] * entries[k * n + j]).sum::<f64>() + if i == j { diag[i] } else { 0.0 };
            }
        }
        let s = GramSystem { bands: n, pixels: 1, gram, correlation: c, trace: vec![0.0; n], energy: 0.0, sigma: 0.0 };
        let (closed, _) = solve_closed_form(&s, &SolverConfig::default()).unwrap();
        let (gd, report) = solve_gradient_descent(&s, &SolverConfig::gradient_descent(), &[1.0; 4]).unwrap();
        prop_assert!(report.converged);
        let gap = closed.iter().zip(gd.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(gap <= 1e-3, "gap {}", gap);
    }

    #[test]
    fn ssim_is_bounded_and_reflexive(a in image_8bit(16, 16), b in image_8bit(16, 16)) {
        let cfg = SsimConfig::default();
        prop_assert_eq!(ssim(&a, &a, &cfg).unwrap(), 1.0);
        let s = ssim(&a, &b, &cfg).unwrap();
        prop_assert!((-1.0..=1.0).contains(&s));
        let g = ssim(&a, &b, &SsimConfig::global()).unwrap();
        prop_assert!((-1.0..=1.0).contains(&g));
    }

    #[test]
    fn psnr_swap_changes_only_the_peak(a in image_8bit(8, 8), b in image_8bit(8, 8)) {
        prop_assume!(a != b);
        let forward = psnr(&a, &b, Peak::ReferenceMax).unwrap();
        let backward = psnr(&b, &a, Peak::ReferenceMax).unwrap();
        let expected = 20.0 * (a.max() / b.max()).log10();
        prop_assert!((forward - backward - expected).abs() < 1e-9);
        prop_assert_eq!(psnr(&a, &b, Peak::Dynamic8Bit).unwrap(), psnr(&b, &a, Peak::Dynamic8Bit).unwrap());
    }

    #[test]
    fn dumps_round_trip_at_single_precision((y, levels) in image_case()) {
        let bands = decompose(&y, levels, FilterRealization::Uwt2d).unwrap().into_bands();
        let mut bytes = Vec::new();
        write_dump(&mut bytes, &bands).unwrap();
        let back = read_dump(bytes.as_slice()).unwrap();
        prop_assert_eq!(back.len(), bands.len());
        for (a, b) in back.iter().zip(&bands) {
            for (x, z) in a.data().iter().zip(b.data()) {
                prop_assert_eq!(*x, f64::from(*z as f32));
            }
        }
    }
}
