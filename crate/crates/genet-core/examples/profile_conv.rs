// temp phase profiler
use genet_core::conv::{conv2d_backward, conv2d_forward, ConvSpec};
use genet_core::{RngState, Tensor};
fn main() {
    let mut rng = RngState::new(1);
    let x = Tensor::<f32>::randn(&[32, 16, 28, 28], 0.0, 1.0, &mut rng);
    let wt = Tensor::<f32>::randn(&[16, 16, 3, 3], 0.0, 0.1, &mut rng);
    let dy = Tensor::<f32>::randn(&[32, 16, 28, 28], 0.0, 1.0, &mut rng);
    let spec = ConvSpec::new(1, 1, 1);
    for (label, need_dx) in [("dW only (im2col+nt)", false), ("dW+dx (adds tn+col2im)", true)] {
        let t = std::time::Instant::now();
        let mut reps = 0;
        while t.elapsed().as_secs_f64() < 2.0 {
            let g = conv2d_backward(&x, &wt, &dy, spec, need_dx, false).unwrap();
            std::hint::black_box(g.dweight);
            reps += 1;
        }
        let per = t.elapsed().as_secs_f64() / reps as f64 * 1000.0;
        println!("{label}: {per:.2} ms/batch32");
    }
    let t = std::time::Instant::now();
    let mut reps = 0;
    while t.elapsed().as_secs_f64() < 2.0 {
        let y = conv2d_forward(&x, &wt, None, spec).unwrap();
        std::hint::black_box(y);
        reps += 1;
    }
    println!("forward: {:.2} ms/batch32", t.elapsed().as_secs_f64() / reps as f64 * 1000.0);
}
