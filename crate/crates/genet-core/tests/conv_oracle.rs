//! Grouped convolution vs the naive direct-loop oracle, plus a throughput
//! probe (ignored by default) used to size the desk-scale training runs.

use genet_core::conv::{conv2d_backward, conv2d_forward, conv2d_naive, ConvSpec};
use genet_core::{RngState, Tensor};

fn rand_tensor(shape: &[usize], rng: &mut RngState) -> Tensor<f32> {
    Tensor::randn(shape, 0.0, 1.0, rng)
}

/// Weights at fan-in scale, as a trained network would see them.
fn rand_weight(shape: &[usize], rng: &mut RngState) -> Tensor<f32> {
    let fan_in: usize = shape[1..].iter().product();
    Tensor::randn(shape, 0.0, (2.0 / fan_in as f64).sqrt(), rng)
}

#[test]
fn grouped_matches_naive_on_random_instances() {
    let mut rng = RngState::new(2024);
    let mut cases = 0;
    for &(cin, cout, h, w, kh, stride, pad) in &[
        (4, 8, 9, 9, 3, 1, 1),
        (8, 8, 7, 5, 3, 1, 1),
        (4, 4, 8, 8, 1, 1, 0),
        (8, 16, 10, 10, 3, 2, 1),
        (16, 16, 6, 6, 3, 1, 1),
        (4, 8, 5, 7, 5, 1, 2),
    ] {
        for g in [1usize, 2, 4, cin] {
            if cin % g != 0 || cout % g != 0 {
                continue;
            }
            let x = rand_tensor(&[2, cin, h, w], &mut rng);
            let wt = rand_weight(&[cout, cin / g, kh, kh], &mut rng);
            let bias = rand_tensor(&[cout], &mut rng);
            let spec = ConvSpec::new(stride, pad, g);
            let fast = conv2d_forward(&x, &wt, Some(&bias), spec).unwrap();
            let slow = conv2d_naive(&x, &wt, Some(&bias), spec).unwrap();
            assert_eq!(fast.shape(), slow.shape());
            let diff = fast.max_abs_diff(&slow);
            assert!(diff < 1e-5, "g={g} kh={kh} s={stride} p={pad}: diff {diff}");
            cases += 1;
        }
    }
    assert!(cases >= 10, "only {cases} oracle instances exercised");
}

#[test]
fn groups_slice_channels_without_mixing() {
    // g=2 conv equals two independent g=1 convs on the channel halves.
    let mut rng = RngState::new(7);
    let x = rand_tensor(&[2, 6, 8, 8], &mut rng);
    let wt = rand_tensor(&[10, 3, 3, 3], &mut rng);
    let spec = ConvSpec::new(1, 1, 2);
    let full = conv2d_forward(&x, &wt, None, spec).unwrap();

    for g in 0..2usize {
        let mut xh = Tensor::<f32>::zeros(&[2, 3, 8, 8]);
        for b in 0..2 {
            for c in 0..3 {
                let src = &x.data()[((b * 6 + g * 3 + c) * 8) * 8..((b * 6 + g * 3 + c) * 8 + 8) * 8];
                xh.data_mut()[((b * 3 + c) * 8) * 8..((b * 3 + c) * 8 + 8) * 8].copy_from_slice(src);
            }
        }
        let wh = Tensor::from_vec(
            vec![5, 3, 3, 3],
            wt.data()[g * 5 * 27..(g + 1) * 5 * 27].to_vec(),
        )
        .unwrap();
        let half = conv2d_forward(&xh, &wh, None, ConvSpec::new(1, 1, 1)).unwrap();
        for b in 0..2 {
            for c in 0..5 {
                let lo = ((b * 10 + g * 5 + c) * 8) * 8;
                let lo_h = ((b * 5 + c) * 8) * 8;
                assert_eq!(&full.data()[lo..lo + 64], &half.data()[lo_h..lo_h + 64]);
            }
        }
    }
}

#[test]
fn identity_pointwise_kernel_is_identity() {
    let mut rng = RngState::new(3);
    let x = rand_tensor(&[1, 3, 5, 5], &mut rng);
    let mut w = Tensor::<f32>::zeros(&[3, 3, 1, 1]);
    for c in 0..3 {
        w.data_mut()[c * 3 + c] = 1.0;
    }
    let y = conv2d_forward(&x, &w, None, ConvSpec::new(1, 0, 1)).unwrap();
    assert_eq!(x.data(), y.data());
}

#[test]
fn depthwise_average_kernel_blurs_per_channel() {
    let mut rng = RngState::new(4);
    let x = rand_tensor(&[1, 4, 6, 6], &mut rng);
    let w = Tensor::from_vec(vec![4, 1, 3, 3], vec![1.0f32 / 9.0; 36]).unwrap();
    let spec = ConvSpec::new(1, 1, 4);
    let fast = conv2d_forward(&x, &w, None, spec).unwrap();
    let slow = conv2d_naive(&x, &w, None, spec).unwrap();
    assert!(fast.max_abs_diff(&slow) < 1e-6);
    // interior pixel = mean of the 3x3 neighborhood of the same channel
    let c = 2;
    let mut want = 0.0f32;
    for dy in 0..3 {
        for dx in 0..3 {
            want += x.data()[(c * 6 + 2 + dy) * 6 + 2 + dx] / 9.0;
        }
    }
    let got = fast.data()[(c * 6 + 3) * 6 + 3];
    assert!((want - got).abs() < 1e-5);
}

#[test]
fn divisibility_violation_is_rejected() {
    let x = Tensor::<f32>::zeros(&[1, 6, 4, 4]);
    let w = Tensor::<f32>::zeros(&[8, 2, 3, 3]);
    let err = conv2d_forward(&x, &w, None, ConvSpec::new(1, 1, 4)).unwrap_err();
    assert_eq!(err.code(), "E_ARG");
}

#[test]
fn spatial_underflow_is_rejected() {
    let x = Tensor::<f32>::zeros(&[1, 1, 2, 2]);
    let w = Tensor::<f32>::zeros(&[1, 1, 5, 5]);
    let err = conv2d_forward(&x, &w, None, ConvSpec::new(1, 0, 1)).unwrap_err();
    assert_eq!(err.code(), "E_SHAPE");
}

#[test]
#[ignore = "throughput probe, run explicitly"]
fn conv_throughput_probe() {
    let mut rng = RngState::new(1);
    // stage-1-like shape: the dominant cost in the desk-scale runs
    let x = rand_tensor(&[32, 16, 28, 28], &mut rng);
    let wt = rand_tensor(&[16, 16, 3, 3], &mut rng);
    let spec = ConvSpec::new(1, 1, 1);
    let macs_fwd = 32.0 * 16.0 * 16.0 * 9.0 * 784.0;

    let t0 = std::time::Instant::now();
    let mut reps = 0;
    while t0.elapsed().as_secs_f64() < 2.0 {
        let y = conv2d_forward(&x, &wt, None, spec).unwrap();
        std::hint::black_box(y);
        reps += 1;
    }
    let fwd_gflops = 2.0 * macs_fwd * reps as f64 / t0.elapsed().as_secs_f64() / 1e9;

    let dy = rand_tensor(&[32, 16, 28, 28], &mut rng);
    let t1 = std::time::Instant::now();
    let mut reps_b = 0;
    while t1.elapsed().as_secs_f64() < 2.0 {
        let g = conv2d_backward(&x, &wt, &dy, spec, true, false).unwrap();
        std::hint::black_box(g.dweight);
        reps_b += 1;
    }
    let bwd_gflops = 2.0 * 2.0 * macs_fwd * reps_b as f64 / t1.elapsed().as_secs_f64() / 1e9;
    panic!("forward {fwd_gflops:.1} GFLOP/s, backward {bwd_gflops:.1} GFLOP/s");
}
