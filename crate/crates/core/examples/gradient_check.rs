//! Central-difference check of every parameter gradient of a small DGCNN.

use kernel_pretrain::autodiff::Tape;
use kernel_pretrain::graph::Graph;
use kernel_pretrain::model::{Network, NetworkConfig};

fn loss(net: &Network, g: &Graph, class: usize) -> f64 {
    let mut tape = Tape::new(net.params());
    let input = net.prepare(g);
    let logp = net.classify_on(&mut tape, &input, None);
    let l = tape.nll(logp, class);
    tape.value(l).data()[0]
}

fn main() -> kernel_pretrain::Result<()> {
    let g = Graph::new(0, vec![0, 1, 2, 1, 0], &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 1)])?;
    let mut net = Network::build(NetworkConfig::dgcnn(3, 2, 5), 11)?;

    let mut tape = Tape::new(net.params());
    let input = net.prepare(&g);
    let logp = net.classify_on(&mut tape, &input, None);
    let l = tape.nll(logp, 1);
    let grads = tape.backward(l);

    let h = 1e-5;
    let ids: Vec<_> = net.params().ids().collect();
    for id in ids {
        let name = net.params().name(id).to_string();
        let analytic = grads.get(id).data().to_vec();
        let mut worst: f64 = 0.0;
        for (i, &a) in analytic.iter().enumerate() {
            let x = net.params().value(id).data()[i];
            net.params_mut().value_mut(id).data_mut()[i] = x + h;
            let up = loss(&net, &g, 1);
            net.params_mut().value_mut(id).data_mut()[i] = x - h;
            let down = loss(&net, &g, 1);
            net.params_mut().value_mut(id).data_mut()[i] = x;
            let numeric = (up - down) / (2.0 * h);
            let err = (numeric - a).abs() / numeric.abs().max(a.abs()).max(1e-6);
            worst = worst.max(err);
        }
        println!(
            "{name:>8}: {:>6} entries, worst relative error {worst:.2e}",
            analytic.len()
        );
    }
    Ok(())
}
