use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::check::finite_difference_check;
use super::*;
use crate::graph::{normalized_adjacency, Graph};

fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

fn store(entries: &[(&str, Tensor)]) -> ParamStore {
    let mut s = ParamStore::new();
    for (name, t) in entries {
        s.add(*name, t.clone());
    }
    s
}

fn id(s: &ParamStore, name: &str) -> ParamId {
    s.id(name).unwrap()
}

/// Runs `build` to a scalar, then checks its gradients against central
/// differences with step 1e-5.
fn assert_gradients<F>(s: &ParamStore, build: F)
where
    F: Fn(&mut Tape) -> Var,
{
    let mut tape = Tape::new(s);
    let loss = build(&mut tape);
    let grads = tape.backward(loss);
    let report = finite_difference_check(s, &grads, 1e-5, |p| {
        let mut t = Tape::new(p);
        let l = build(&mut t);
        t.value(l).item()
    });
    assert!(report.max_relative_error < 1e-4, "{report:?}");
}

#[test]
fn graph_conv_examples() {
    // Single isolated node: tanh(x * w).
    let g = Graph::new(0, vec![0], &[]).unwrap();
    let s = store(&[
        ("h", Tensor::matrix(1, 1, vec![0.7])),
        ("w", Tensor::matrix(1, 1, vec![-1.3])),
    ]);
    let mut t = Tape::new(&s);
    let (h, w) = (t.param(id(&s, "h")), t.param(id(&s, "w")));
    let hw = t.matmul(h, w);
    let sh = t.spmm(normalized_adjacency(&g), hw);
    let y = t.tanh(sh);
    assert_eq!(t.value(y).data(), &[(0.7f64 * -1.3).tanh()]);

    // Two connected nodes average their features.
    let g = Graph::new(0, vec![0, 0], &[(0, 1)]).unwrap();
    let s = store(&[
        ("h", Tensor::matrix(2, 1, vec![1.0, 3.0])),
        ("w", Tensor::matrix(1, 1, vec![1.0])),
    ]);
    let mut t = Tape::new(&s);
    let (h, w) = (t.param(id(&s, "h")), t.param(id(&s, "w")));
    let hw = t.matmul(h, w);
    let sh = t.spmm(normalized_adjacency(&g), hw);
    let y = t.tanh(sh);
    assert_eq!(t.value(y).data(), &[2f64.tanh(), 2f64.tanh()]);

    // Zero weights give zero output.
    let s = store(&[("h", Tensor::matrix(2, 3, vec![1.0; 6])), ("w", Tensor::zeros(&[3, 4]))]);
    let mut t = Tape::new(&s);
    let (h, w) = (t.param(id(&s, "h")), t.param(id(&s, "w")));
    let hw = t.matmul(h, w);
    let sh = t.spmm(normalized_adjacency(&g), hw);
    let y = t.tanh(sh);
    assert!(t.value(y).data().iter().all(|&v| v == 0.0));
}

#[test]
fn graph_conv_commutes_with_node_permutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = Graph::new(0, vec![0; 5], &[(0, 1), (1, 2), (2, 3), (1, 4)]).unwrap();
    let perm = [2, 0, 4, 1, 3];
    let h = random_tensor(&mut rng, &[5, 3]);
    let mut hp = Tensor::zeros(&[5, 3]);
    for (old, &new) in perm.iter().enumerate() {
        hp.data_mut()[new * 3..new * 3 + 3].copy_from_slice(&h.data()[old * 3..old * 3 + 3]);
    }
    let s = store(&[("w", random_tensor(&mut rng, &[3, 2]))]);
    let conv = |graph: &Graph, x: &Tensor| {
        let mut t = Tape::new(&s);
        let xv = t.input(x.clone());
        let w = t.param(id(&s, "w"));
        let xw = t.matmul(xv, w);
        let sx = t.spmm(normalized_adjacency(graph), xw);
        let y = t.tanh(sx);
        t.value(y).clone()
    };
    let (a, b) = (conv(&g, &h), conv(&g.permuted(&perm), &hp));
    for (old, &new) in perm.iter().enumerate() {
        for c in 0..2 {
            assert!((a.data()[old * 2 + c] - b.data()[new * 2 + c]).abs() < 1e-14);
        }
    }
}

#[test]
fn sortpool_examples() {
    let s = ParamStore::new();
    // Already sorted, n = k: identity.
    let mut t = Tape::new(&s);
    let x = t.input(Tensor::matrix(3, 2, vec![0.0, 3.0, 5.0, 2.0, 1.0, 1.0]));
    let y = t.sortpool(x, 3);
    assert_eq!(t.value(y).data(), t.value(x).data());

    // n = 1, k = 3 pads with zero rows.
    let x = t.input(Tensor::matrix(1, 2, vec![0.4, -0.1]));
    let y = t.sortpool(x, 3);
    assert_eq!(t.value(y).data(), &[0.4, -0.1, 0.0, 0.0, 0.0, 0.0]);

    // Last column [0.2, 0.9, 0.5], k = 2 -> rows 1 then 2.
    let x = t.input(Tensor::matrix(3, 2, vec![10.0, 0.2, 20.0, 0.9, 30.0, 0.5]));
    let y = t.sortpool(x, 2);
    assert_eq!(t.value(y).data(), &[20.0, 0.9, 30.0, 0.5]);
}

#[test]
fn sortpool_tie_breaking() {
    let s = ParamStore::new();
    let mut t = Tape::new(&s);
    // Equal last column: the previous column decides (descending); a full tie
    // keeps the original order.
    let x = t.input(Tensor::matrix(4, 2, vec![1.0, 0.5, 3.0, 0.5, 1.0, 0.5, 2.0, 0.7]));
    let y = t.sortpool(x, 4);
    assert_eq!(t.value(y).data(), &[2.0, 0.7, 3.0, 0.5, 1.0, 0.5, 1.0, 0.5]);
}

#[test]
fn sortpool_routes_gradient_only_to_selected_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let s = store(&[("x", random_tensor(&mut rng, &[6, 3]))]);
    let upstream = random_tensor(&mut rng, &[4, 3]);
    let mut t = Tape::new(&s);
    let x = t.param(id(&s, "x"));
    let y = t.sortpool(x, 4);
    let grads = t.backward_from(y, upstream.clone());
    let dx = grads.get(id(&s, "x"));
    let zero_rows = dx.data().chunks(3).filter(|r| r.iter().all(|&v| v == 0.0)).count();
    assert_eq!(zero_rows, 2);
    let total_in: f64 = upstream.data().iter().sum();
    let total_out: f64 = dx.data().iter().sum();
    assert!((total_in - total_out).abs() < 1e-12);
}

#[test]
fn conv1d_examples() {
    let s = ParamStore::new();
    let mut t = Tape::new(&s);
    let x = t.input(Tensor::matrix(1, 3, vec![1.0, 2.0, 3.0]));
    let f = t.input(Tensor::new(vec![1, 1, 3], vec![1.0, 0.0, -1.0]));
    let y = t.conv1d(x, f, 1);
    assert_eq!(t.value(y).data(), &[-2.0]);

    let f = t.input(Tensor::new(vec![1, 1, 2], vec![1.0, 1.0]));
    let y = t.conv1d(x, f, 1);
    assert_eq!(t.value(y).data(), &[3.0, 5.0]);

    let x = t.input(Tensor::matrix(1, 4, vec![1.0, 2.0, 3.0, 4.0]));
    let y = t.conv1d(x, f, 2);
    assert_eq!(t.value(y).data(), &[3.0, 7.0]);
    assert_eq!(t.value(y).shape(), &[1, 2]);
}

#[test]
#[should_panic(expected = "shorter than filter width")]
fn conv1d_rejects_short_input() {
    let s = ParamStore::new();
    let mut t = Tape::new(&s);
    let x = t.input(Tensor::matrix(1, 2, vec![1.0, 2.0]));
    let f = t.input(Tensor::new(vec![1, 1, 3], vec![1.0; 3]));
    t.conv1d(x, f, 1);
}

#[test]
fn activations_and_log_softmax() {
    let s = ParamStore::new();
    let mut t = Tape::new(&s);
    let x = t.input(Tensor::row_vector(vec![-1.0, 0.0, 2.0]));
    let y = t.relu(x);
    assert_eq!(t.value(y).data(), &[0.0, 0.0, 2.0]);

    let x = t.input(Tensor::row_vector(vec![0.3, 0.3]));
    let y = t.log_softmax(x);
    for &v in t.value(y).data() {
        assert!((v + 2f64.ln()).abs() < 1e-15);
    }

    let base = vec![0.1, -2.0, 3.5, 0.0];
    let a = t.input(Tensor::row_vector(base.clone()));
    let b = t.input(Tensor::row_vector(base.iter().map(|v| v + 100.0).collect()));
    let (la, lb) = (t.log_softmax(a), t.log_softmax(b));
    for (u, v) in t.value(la).data().iter().zip(t.value(lb).data()) {
        assert!((u - v).abs() < 1e-12);
    }
    let total: f64 = t.value(la).data().iter().map(|v| v.exp()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn dot_head_and_losses() {
    let s = ParamStore::new();
    let mut t = Tape::new(&s);
    let e1 = t.input(Tensor::row_vector(vec![1.0, 0.0]));
    let e2 = t.input(Tensor::row_vector(vec![0.0, 1.0]));
    let d = t.dot(e1, e2);
    assert_eq!(t.value(d).item(), 0.0);
    let e = t.input(Tensor::row_vector(vec![1.0, 2.0]));
    let d = t.dot(e, e);
    assert_eq!(t.value(d).item(), 5.0);
    let z = t.input(Tensor::row_vector(vec![0.0, 0.0]));
    let d = t.dot(z, e);
    assert_eq!(t.value(d).item(), 0.0);

    let p = t.input(Tensor::scalar(0.5));
    let l = t.mse(p, 0.5);
    assert_eq!(t.value(l).item(), 0.0);
    let p = t.input(Tensor::scalar(1.0));
    let l = t.mse(p, 0.0);
    assert_eq!(t.value(l).item(), 1.0);

    let logits = t.input(Tensor::row_vector(vec![0.0, 0.0]));
    let logp = t.log_softmax(logits);
    let l = t.nll(logp, 1);
    assert!((t.value(l).item() - 2f64.ln()).abs() < 1e-15);
}

#[test]
fn dot_head_gradients_swap_inputs() {
    let s = store(&[
        ("a", Tensor::row_vector(vec![0.5, -1.0, 2.0])),
        ("b", Tensor::row_vector(vec![3.0, 0.25, -0.5])),
    ]);
    let mut t = Tape::new(&s);
    let (a, b) = (t.param(id(&s, "a")), t.param(id(&s, "b")));
    let d = t.dot(a, b);
    let g = t.backward(d);
    assert_eq!(g.get(id(&s, "a")).data(), s.value(id(&s, "b")).data());
    assert_eq!(g.get(id(&s, "b")).data(), s.value(id(&s, "a")).data());
}

#[test]
#[should_panic(expected = "dot product of lengths")]
fn dot_head_rejects_length_mismatch() {
    let s = ParamStore::new();
    let mut t = Tape::new(&s);
    let a = t.input(Tensor::row_vector(vec![1.0, 2.0]));
    let b = t.input(Tensor::row_vector(vec![1.0]));
    t.dot(a, b);
}

#[test]
#[should_panic(expected = "class 2 outside")]
fn nll_rejects_unknown_class() {
    let s = ParamStore::new();
    let mut t = Tape::new(&s);
    let x = t.input(Tensor::row_vector(vec![-0.1, -2.0]));
    t.nll(x, 2);
}

#[test]
#[should_panic(expected = "never recorded")]
fn backward_without_forward() {
    let s = ParamStore::new();
    let mut other = Tape::new(&s);
    let v = other.input(Tensor::scalar(1.0));
    let _ = other.scale(v, 2.0);
    let empty = Tape::new(&s);
    empty.backward_from(v, Tensor::scalar(1.0));
}

#[test]
fn dense_quadratic_loss_matches_closed_form() {
    // L = |Wx - y|^2, dL/dW = 2 (Wx - y) x^T. Row-vector convention:
    // out = x^T W^T, so with M = W^T (k x r), dL/dM = x (2 (Wx - y))^T.
    let w = [[0.5, -1.0, 2.0], [1.5, 0.25, -0.75]];
    let x = [1.0, -2.0, 0.5];
    let y = [0.3, -0.2];
    let wt: Vec<f64> = (0..3).flat_map(|j| (0..2).map(move |i| w[i][j])).collect();
    let s = store(&[("m", Tensor::matrix(3, 2, wt))]);
    let mut t = Tape::new(&s);
    let xv = t.input(Tensor::row_vector(x.to_vec()));
    let m = t.param(id(&s, "m"));
    let out = t.matmul(xv, m);
    let mut terms = Vec::new();
    for (i, &target) in y.iter().enumerate() {
        let mut sel = vec![0.0; 2];
        sel[i] = 1.0;
        let e = t.input(Tensor::row_vector(sel));
        let comp = t.dot(out, e);
        terms.push(t.mse(comp, target));
    }
    let loss = t.sum(&terms);
    let g = t.backward(loss);
    let wx: Vec<f64> = (0..2).map(|i| (0..3).map(|j| w[i][j] * x[j]).sum()).collect();
    for j in 0..3 {
        for i in 0..2 {
            let expected = 2.0 * (wx[i] - y[i]) * x[j];
            assert!((g.get(id(&s, "m")).data()[j * 2 + i] - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn unused_parameters_get_zero_gradient() {
    let s = store(&[
        ("used", Tensor::scalar(2.0)),
        ("unused", Tensor::matrix(2, 2, vec![1.0; 4])),
    ]);
    let mut t = Tape::new(&s);
    let u = t.param(id(&s, "used"));
    let _other = t.param(id(&s, "unused"));
    let l = t.mse(u, 0.0);
    let g = t.backward(l);
    assert_eq!(g.get(id(&s, "used")).data(), &[4.0]);
    assert!(g.get(id(&s, "unused")).data().iter().all(|&v| v == 0.0));
}

#[test]
fn finite_differences_per_layer() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g = Graph::new(0, vec![0, 1, 0, 2, 1, 0, 0], &[(0, 1), (1, 2), (2, 3), (3, 4), (1, 5)]).unwrap();
    let adj = normalized_adjacency(&g);

    // Graph convolution with tanh.
    let s = store(&[
        ("h", random_tensor(&mut rng, &[7, 3])),
        ("w", random_tensor(&mut rng, &[3, 4])),
    ]);
    assert_gradients(&s, |t| {
        let (h, w) = (t.param(ParamId(0)), t.param(ParamId(1)));
        let hw = t.matmul(h, w);
        let sh = t.spmm(adj.clone(), hw);
        let y = t.tanh(sh);
        let r = t.reshape(y, &[1, 28]);
        t.dot(r, r)
    });

    // Sortpool over concatenated channels, with padding.
    let s = store(&[
        ("a", random_tensor(&mut rng, &[7, 2])),
        ("b", random_tensor(&mut rng, &[7, 1])),
    ]);
    let probe = random_tensor(&mut rng, &[1, 27]);
    assert_gradients(&s, |t| {
        let (a, b) = (t.param(ParamId(0)), t.param(ParamId(1)));
        let c = t.concat_cols(&[a, b]);
        let p = t.sortpool(c, 9);
        let r = t.reshape(p, &[1, 27]);
        let q = t.input(probe.clone());
        t.dot(r, q)
    });

    // Strided convolution, channel bias, relu.
    let s = store(&[
        ("x", random_tensor(&mut rng, &[2, 11])),
        ("f", random_tensor(&mut rng, &[3, 2, 3])),
        ("b", random_tensor(&mut rng, &[3])),
    ]);
    assert_gradients(&s, |t| {
        let (x, f, b) = (t.param(ParamId(0)), t.param(ParamId(1)), t.param(ParamId(2)));
        let y = t.conv1d(x, f, 2);
        let y = t.add_channel_bias(y, b);
        let y = t.relu(y);
        let r = t.reshape(y, &[1, 15]);
        t.dot(r, r)
    });

    // Dense layer, row bias, log-softmax, NLL.
    let s = store(&[
        ("x", random_tensor(&mut rng, &[1, 5])),
        ("w", random_tensor(&mut rng, &[5, 3])),
        ("b", random_tensor(&mut rng, &[3])),
    ]);
    assert_gradients(&s, |t| {
        let (x, w, b) = (t.param(ParamId(0)), t.param(ParamId(1)), t.param(ParamId(2)));
        let y = t.matmul(x, w);
        let y = t.add_row_bias(y, b);
        let lp = t.log_softmax(y);
        t.nll(lp, 2)
    });

    // Dot head, MSE, dropout mask, mean.
    let s = store(&[
        ("e1", random_tensor(&mut rng, &[1, 4])),
        ("e2", random_tensor(&mut rng, &[1, 4])),
    ]);
    assert_gradients(&s, |t| {
        let (a, b) = (t.param(ParamId(0)), t.param(ParamId(1)));
        let bd = t.dropout(b, vec![2.0, 0.0, 2.0, 2.0]);
        let d1 = t.dot(a, bd);
        let d2 = t.dot(a, a);
        let l1 = t.mse(d1, 0.3);
        let l2 = t.mse(d2, 1.0);
        t.mean(&[l1, l2])
    });
}
