use phg_tinynn::gradcheck::{central_difference, compare, DEFAULT_STEP, DEFAULT_TOLERANCE};
use phg_tinynn::ops::*;
use phg_tinynn::{Adam, AdamConfig, Gradients, Linear, ParamStore, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Scalar probe `sum(c * y)`; its gradient w.r.t. `y` is `c`.
fn probe(c: &Tensor, y: &Tensor) -> f64 {
    c.data().iter().zip(y.data()).map(|(a, b)| a * b).sum()
}

fn with(t: &Tensor, data: &[f64]) -> Tensor {
    Tensor::from_vec(t.shape(), data.to_vec()).unwrap()
}

fn assert_close(name: &str, analytic: &Tensor, numeric: &[f64]) {
    let r = compare(analytic.data(), numeric);
    assert!(r.passes(DEFAULT_TOLERANCE), "{name}: {r:?}");
}

#[test]
fn linear_gradients() {
    let mut g = rng(1);
    let (x, w, b) = (random(&mut g, &[4, 5]), random(&mut g, &[3, 5]), random(&mut g, &[3]));
    let c = random(&mut g, &[4, 3]);
    let grads = linear_backward(&x, &w, &c).unwrap();
    let nx = central_difference(x.data(), DEFAULT_STEP, |v| probe(&c, &linear_forward(&with(&x, v), &w, &b).unwrap()));
    let nw = central_difference(w.data(), DEFAULT_STEP, |v| probe(&c, &linear_forward(&x, &with(&w, v), &b).unwrap()));
    let nb = central_difference(b.data(), DEFAULT_STEP, |v| probe(&c, &linear_forward(&x, &w, &with(&b, v)).unwrap()));
    assert_close("dx", &grads.dx, &nx);
    assert_close("dw", &grads.dweight, &nw);
    assert_close("db", &grads.dbias, &nb);
    // The tighter bound quoted for the linear layer.
    assert!(compare(grads.dweight.data(), &nw).passes(1e-6));
}

#[test]
fn activation_gradients() {
    let mut g = rng(2);
    let x = random(&mut g, &[20]);
    let c = random(&mut g, &[20]);
    let nr = central_difference(x.data(), DEFAULT_STEP, |v| probe(&c, &relu_forward(&with(&x, v))));
    assert_close("relu", &relu_backward(&x, &c).unwrap(), &nr);
    let ns = central_difference(x.data(), DEFAULT_STEP, |v| probe(&c, &sigmoid_forward(&with(&x, v))));
    assert_close("sigmoid", &sigmoid_backward(&sigmoid_forward(&x), &c).unwrap(), &ns);
}

#[test]
fn max_pool_gradients() {
    let mut g = rng(3);
    let p = random(&mut g, &[7, 4]);
    let mask = [true, false, true, true, false, true, true];
    let c = random(&mut g, &[4]);
    let (_, arg) = set_max_pool(&p, &mask).unwrap();
    let analytic = set_max_pool_backward(&arg, 7, &c).unwrap();
    let numeric = central_difference(p.data(), DEFAULT_STEP, |v| probe(&c, &set_max_pool(&with(&p, v), &mask).unwrap().0));
    assert_close("max_pool", &analytic, &numeric);
    for (r, present) in mask.iter().enumerate() {
        if !present {
            assert!(analytic.data()[r * 4..r * 4 + 4].iter().all(|&v| v == 0.0));
        }
    }
}

#[test]
fn max_pool_permutation_invariance() {
    let mut g = rng(4);
    let p = random(&mut g, &[6, 3]);
    let mask = [true, true, false, true, true, false];
    let perm = [3, 0, 5, 1, 4, 2];
    let mut data = Vec::new();
    let mut pmask = Vec::new();
    for &i in &perm {
        data.extend_from_slice(&p.data()[i * 3..i * 3 + 3]);
        pmask.push(mask[i]);
    }
    let shuffled = Tensor::from_vec(&[6, 3], data).unwrap();
    assert_eq!(set_max_pool(&p, &mask).unwrap().0, set_max_pool(&shuffled, &pmask).unwrap().0);
}

#[test]
fn cross_entropy_gradients() {
    let mut g = rng(5);
    let logits = random(&mut g, &[5]);
    let (_, analytic) = softmax_cross_entropy(&logits, 3).unwrap();
    let numeric = central_difference(logits.data(), DEFAULT_STEP, |v| softmax_cross_entropy(&with(&logits, v), 3).unwrap().0);
    assert_close("cross_entropy", &analytic, &numeric);
}

#[test]
fn conv_gradients() {
    let mut g = rng(6);
    let (x, w, b) = (random(&mut g, &[5, 4, 2]), random(&mut g, &[3, 3, 3, 2]), random(&mut g, &[3]));
    let c = random(&mut g, &[5, 4, 3]);
    let grads = conv3x3_backward(&x, &w, &c).unwrap();
    let nx = central_difference(x.data(), DEFAULT_STEP, |v| probe(&c, &conv3x3_forward(&with(&x, v), &w, &b).unwrap()));
    let nw = central_difference(w.data(), DEFAULT_STEP, |v| probe(&c, &conv3x3_forward(&x, &with(&w, v), &b).unwrap()));
    let nb = central_difference(b.data(), DEFAULT_STEP, |v| probe(&c, &conv3x3_forward(&x, &w, &with(&b, v)).unwrap()));
    assert_close("conv dx", &grads.dx, &nx);
    assert_close("conv dw", &grads.dweight, &nw);
    assert_close("conv db", &grads.dbias, &nb);
}

#[test]
fn pooling_gradients() {
    let mut g = rng(7);
    let x = random(&mut g, &[5, 6, 2]);
    let c = random(&mut g, &[2, 3, 2]);
    let numeric = central_difference(x.data(), DEFAULT_STEP, |v| probe(&c, &avg_pool2_forward(&with(&x, v)).unwrap()));
    assert_close("avg_pool2", &avg_pool2_backward(x.shape(), &c).unwrap(), &numeric);

    let c = random(&mut g, &[2]);
    let numeric = central_difference(x.data(), DEFAULT_STEP, |v| probe(&c, &global_avg_pool_forward(&with(&x, v)).unwrap()));
    assert_close("global_avg_pool", &global_avg_pool_backward(x.shape(), &c).unwrap(), &numeric);
}

#[test]
fn channel_scale_gradients() {
    let mut g = rng(8);
    let (f, s) = (random(&mut g, &[3, 3, 4]), random(&mut g, &[4]));
    let c = random(&mut g, &[3, 3, 4]);
    let (df, ds) = channel_scale_backward(&f, &s, &c).unwrap();
    let nf = central_difference(f.data(), DEFAULT_STEP, |v| probe(&c, &channel_scale_forward(&with(&f, v), &s).unwrap()));
    let ns = central_difference(s.data(), DEFAULT_STEP, |v| probe(&c, &channel_scale_forward(&f, &with(&s, v)).unwrap()));
    assert_close("scale features", &df, &nf);
    assert_close("scale gate", &ds, &ns);
}

/// linear -> relu -> linear -> sigmoid -> linear -> cross-entropy.
struct Composite {
    store: ParamStore,
    layers: [Linear; 3],
}

impl Composite {
    fn new(seed: u64) -> Self {
        let mut g = rng(seed);
        let mut store = ParamStore::new();
        let layers = [
            Linear::new(&mut store, "l1", 6, 8, &mut g),
            Linear::new(&mut store, "l2", 8, 5, &mut g),
            Linear::new(&mut store, "l3", 5, 3, &mut g),
        ];
        // Non-zero biases so every path is exercised.
        for id in store.ids().collect::<Vec<_>>() {
            if store.name(id).ends_with("bias") {
                let t = random(&mut g, store.get(id).shape());
                *store.get_mut(id) = t;
            }
        }
        Self { store, layers }
    }

    fn loss(&self, store: &ParamStore, x: &Tensor) -> f64 {
        let h1 = relu_forward(&self.layers[0].forward(store, x).unwrap());
        let h2 = sigmoid_forward(&self.layers[1].forward(store, &h1).unwrap());
        let out = self.layers[2].forward(store, &h2).unwrap();
        softmax_cross_entropy(&out, 1).unwrap().0
    }

    fn gradients(&self, x: &Tensor) -> (Gradients, Tensor) {
        let s = &self.store;
        let a1 = self.layers[0].forward(s, x).unwrap();
        let h1 = relu_forward(&a1);
        let h2 = sigmoid_forward(&self.layers[1].forward(s, &h1).unwrap());
        let out = self.layers[2].forward(s, &h2).unwrap();
        let (_, dout) = softmax_cross_entropy(&out, 1).unwrap();
        let mut grads = Gradients::zeros_like(s);
        let dh2 = self.layers[2].backward(s, &h2, &dout, &mut grads).unwrap();
        let da2 = sigmoid_backward(&h2, &dh2).unwrap();
        let dh1 = self.layers[1].backward(s, &h1, &da2, &mut grads).unwrap();
        let da1 = relu_backward(&a1, &dh1).unwrap();
        let dx = self.layers[0].backward(s, x, &da1, &mut grads).unwrap();
        (grads, dx)
    }
}

#[test]
fn composite_chain_rule() {
    let net = Composite::new(9);
    let x = random(&mut rng(10), &[6]);
    let (grads, dx) = net.gradients(&x);
    for id in net.store.ids() {
        let base = net.store.get(id).clone();
        let numeric = central_difference(base.data(), DEFAULT_STEP, |v| {
            let mut s = net.store.clone();
            *s.get_mut(id) = with(&base, v);
            net.loss(&s, &x)
        });
        assert_close(net.store.name(id), grads.get(id), &numeric);
    }
    let nx = central_difference(x.data(), DEFAULT_STEP, |v| net.loss(&net.store, &with(&x, v)));
    assert_close("input", &dx, &nx);
}

#[test]
fn seeded_training_is_reproducible() {
    let run = || {
        let mut net = Composite::new(11);
        let mut adam = Adam::new(&net.store, AdamConfig { lr: 0.01, ..Default::default() });
        let x = random(&mut rng(12), &[6]);
        for _ in 0..25 {
            let (grads, _) = net.gradients(&x);
            adam.step(&mut net.store, &grads).unwrap();
        }
        let loss = net.loss_at(&x);
        (net.store, loss)
    };
    let (a, la) = run();
    let (b, lb) = run();
    assert_eq!(a, b);
    assert_eq!(la.to_bits(), lb.to_bits());
    let start = Composite::new(11);
    assert!(la < start.loss(&start.store, &random(&mut rng(12), &[6])));
}

impl Composite {
    fn loss_at(&self, x: &Tensor) -> f64 {
        self.loss(&self.store, x)
    }
}
