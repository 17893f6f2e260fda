use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dqs_core::neural_net::{
    adam_step, log_cosh, Activation, AdamConfig, AdamState, Dense, Gradients, LayerGrad, Mlp,
    Q_NETWORK_LAYERS,
};

const FD_STEP: f64 = 1e-5;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Scalar-loop forward pass with no matrix library.
fn naive_forward(net: &Mlp, x: &[f64]) -> f64 {
    let mut h = x.to_vec();
    for layer in net.layers() {
        let mut out = Vec::with_capacity(layer.output_dim());
        for i in 0..layer.output_dim() {
            let mut z = layer.bias[i];
            for (k, hk) in h.iter().enumerate() {
                z += layer.weights[(i, k)] * hk;
            }
            out.push(match layer.activation {
                Activation::Tanh => (z.exp() - (-z).exp()) / (z.exp() + (-z).exp()),
                Activation::Relu => {
                    if z > 0.0 {
                        z
                    } else {
                        0.0
                    }
                }
                Activation::Sigmoid => z.exp() / (1.0 + z.exp()),
            });
        }
        h = out;
    }
    h[0]
}

fn random_input<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Random biases so relu and sigmoid see a spread of pre-activations.
fn random_net<R: Rng>(input_dim: usize, rng: &mut R) -> Mlp {
    let mut net = Mlp::q_network(input_dim, rng).unwrap();
    for layer in net.layers_mut() {
        layer.bias = DVector::from_fn(layer.bias.len(), |_, _| rng.gen_range(-0.3..0.3));
    }
    net
}

#[test]
fn forward_matches_scalar_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..10 {
        let net = random_net(8, &mut rng);
        for _ in 0..10 {
            let x = random_input(8, &mut rng);
            let a = net.forward(&x).unwrap();
            let b = naive_forward(&net, &x);
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}

#[test]
fn parameter_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let net = random_net(8, &mut rng);
        let x = random_input(8, &mut rng);
        let target = rng.gen_range(0.0..1.0);
        let bp = net.backward(&x, target).unwrap();
        let loss = |n: &Mlp| log_cosh(n.forward(&x).unwrap() - target);
        assert!((bp.loss - loss(&net)).abs() < 1e-15);

        for (l, layer) in net.layers().iter().enumerate() {
            for _ in 0..20 {
                let i = rng.gen_range(0..layer.weights.nrows());
                let k = rng.gen_range(0..layer.weights.ncols());
                let mut plus = net.clone();
                plus.layers_mut()[l].weights[(i, k)] += FD_STEP;
                let mut minus = net.clone();
                minus.layers_mut()[l].weights[(i, k)] -= FD_STEP;
                let fd = (loss(&plus) - loss(&minus)) / (2.0 * FD_STEP);
                let e = rel_err(bp.gradients.layers[l].weights[(i, k)], fd);
                worst = worst.max(e);
            }
            for i in 0..layer.bias.len().min(20) {
                let mut plus = net.clone();
                plus.layers_mut()[l].bias[i] += FD_STEP;
                let mut minus = net.clone();
                minus.layers_mut()[l].bias[i] -= FD_STEP;
                let fd = (loss(&plus) - loss(&minus)) / (2.0 * FD_STEP);
                worst = worst.max(rel_err(bp.gradients.layers[l].bias[i], fd));
            }
        }
    }
    assert!(worst < 1e-4, "worst relative error {worst}");
}

#[test]
fn input_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..10 {
        let net = random_net(8, &mut rng);
        let x = random_input(8, &mut rng);
        let (value, grad) = net.output_gradient(&x).unwrap();
        assert_eq!(value, net.forward(&x).unwrap());
        for k in 0..8 {
            let mut xp = x.clone();
            xp[k] += FD_STEP;
            let mut xm = x.clone();
            xm[k] -= FD_STEP;
            let fd = (net.forward(&xp).unwrap() - net.forward(&xm).unwrap()) / (2.0 * FD_STEP);
            assert!(rel_err(grad[k], fd) < 1e-4, "{} vs {fd}", grad[k]);
        }
    }
}

#[test]
fn batched_suffix_evaluation_matches_single_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let net = random_net(13, &mut rng);
    let prefix = random_input(4, &mut rng);
    let suffixes = DMatrix::from_fn(9, 15, |_, _| rng.gen_range(-1.0..1.0));
    let (values, grads) = net.suffix_value_and_grad(&prefix, &suffixes).unwrap();
    for b in 0..15 {
        let mut x = prefix.clone();
        x.extend(suffixes.column(b).iter());
        let (v, g) = net.output_gradient(&x).unwrap();
        assert!((values[b] - v).abs() < 1e-12);
        for k in 0..9 {
            assert!((grads[(k, b)] - g[4 + k]).abs() < 1e-12);
        }
    }
    assert!(net.suffix_value_and_grad(&prefix, &DMatrix::zeros(8, 1)).is_err());
}

#[test]
fn log_cosh_is_stable_and_symmetric() {
    for x in [0.0f64, 1e-8, 0.3, 2.0, 50.0, 800.0] {
        let reference = if x < 20.0 { x.cosh().ln() } else { x - std::f64::consts::LN_2 };
        assert!((log_cosh(x) - reference).abs() < 1e-12 * reference.max(1.0));
        assert_eq!(log_cosh(x), log_cosh(-x));
    }
}

/// Network whose parameters are treated as a flat vector; the last layer
/// shape keeps `from_layers` satisfied.
fn flat_net(values: &[f64; 9]) -> Mlp {
    let hidden = Dense {
        weights: DMatrix::from_row_slice(2, 2, &values[0..4]),
        bias: DVector::from_column_slice(&values[4..6]),
        activation: Activation::Tanh,
    };
    let out = Dense {
        weights: DMatrix::from_row_slice(1, 2, &values[6..8]),
        bias: DVector::from_element(1, values[8]),
        activation: Activation::Sigmoid,
    };
    Mlp::from_layers(2, vec![hidden, out]).unwrap()
}

fn flatten(net: &Mlp) -> Vec<f64> {
    let mut v = Vec::new();
    for layer in net.layers() {
        v.extend(layer.weights.transpose().iter());
        v.extend(layer.bias.iter());
    }
    v
}

fn gradients_from_flat(net: &Mlp, g: &[f64]) -> Gradients {
    let mut it = g.iter().copied();
    Gradients {
        layers: net
            .layers()
            .iter()
            .map(|l| LayerGrad {
                weights: DMatrix::from_row_iterator(
                    l.weights.nrows(),
                    l.weights.ncols(),
                    it.by_ref().take(l.weights.len()),
                ),
                bias: DVector::from_iterator(l.bias.len(), it.by_ref().take(l.bias.len())),
            })
            .collect(),
    }
}

#[test]
fn adam_minimizes_convex_quadratic_and_matches_reference() {
    let cfg = AdamConfig {
        learning_rate: 0.05,
        ..AdamConfig::default()
    };
    let optimum = [0.5, -1.0, 2.0, 0.0, 1.5, -0.5, 0.25, -2.0, 1.0];
    let scales = [1.0, 2.0, 0.5, 3.0, 1.0, 1.5, 4.0, 0.8, 2.5];
    let mut net = flat_net(&[0.0; 9]);
    let mut state = AdamState::new(&net, cfg);

    // Scalar reference Adam
    let mut p = [0.0f64; 9];
    let mut m = [0.0f64; 9];
    let mut v = [0.0f64; 9];

    let loss = |q: &[f64]| -> f64 {
        q.iter()
            .zip(&optimum)
            .zip(&scales)
            .map(|((x, o), s)| s * (x - o).powi(2))
            .sum()
    };
    let initial = loss(&flatten(&net));
    for t in 1..=300 {
        let q = flatten(&net);
        let g: Vec<f64> = (0..9).map(|i| 2.0 * scales[i] * (q[i] - optimum[i])).collect();
        let grads = gradients_from_flat(&net, &g);
        adam_step(&mut net, &mut state, &grads).unwrap();

        for i in 0..9 {
            let gi = 2.0 * scales[i] * (p[i] - optimum[i]);
            m[i] = 0.9 * m[i] + 0.1 * gi;
            v[i] = 0.999 * v[i] + 0.001 * gi * gi;
            let mh = m[i] / (1.0 - 0.9f64.powi(t));
            let vh = v[i] / (1.0 - 0.999f64.powi(t));
            p[i] -= 0.05 * mh / (vh.sqrt() + 1e-8);
        }
        let q = flatten(&net);
        for i in 0..9 {
            assert!((q[i] - p[i]).abs() < 1e-12);
        }
        if t == 100 {
            assert!(loss(&q) < 0.05 * initial, "loss {} after 100 steps", loss(&q));
        }
    }
    assert!(loss(&flatten(&net)) < 1e-3 * initial);
    assert_eq!(state.step, 300);
}

#[test]
fn glorot_limits_respected() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    let net = Mlp::new(17, &Q_NETWORK_LAYERS, &mut rng).unwrap();
    let mut fan_in = 17;
    for layer in net.layers() {
        let limit = (6.0 / (fan_in + layer.output_dim()) as f64).sqrt();
        assert!(layer.weights.iter().all(|w| w.abs() <= limit));
        assert!(layer.bias.iter().all(|&b| b == 0.0));
        fan_in = layer.output_dim();
    }
}
