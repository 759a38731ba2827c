//! Reverse-mode differentiation of a one-layer tanh network on the tape,
//! checked against finite differences of the forward pass.
//!
//!     cargo run --example tape_autodiff

use ies_e2e::forecast::Tape;
use nalgebra::{DMatrix, DVector};

fn forward(params: &[DMatrix<f64>], x: &DVector<f64>) -> f64 {
    let mut tape = Tape::new(params);
    let input = tape.leaf(x.clone());
    let h = tape.affine(0, 1, input);
    let y = tape.tanh(h);
    tape.value(y).sum()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let w = DMatrix::from_row_slice(2, 3, &[0.3, -0.2, 0.5, 0.1, 0.4, -0.6]);
    let b = DMatrix::from_column_slice(2, 1, &[0.05, -0.1]);
    let params = vec![w, b];
    let x = DVector::from_vec(vec![1.0, 0.5, -1.5]);

    let mut tape = Tape::new(&params);
    let input = tape.leaf(x.clone());
    let h = tape.affine(0, 1, input);
    let y = tape.tanh(h);
    println!("output {:?} on a tape of {} nodes", tape.value(y).as_slice(), tape.len());
    let grads = tape.backward(y, &DVector::from_element(2, 1.0))?;

    let step = 1e-6;
    for (p, g) in grads.iter().enumerate() {
        for i in 0..g.len() {
            let mut up = params.clone();
            up[p][i] += step;
            let mut dn = params.clone();
            dn[p][i] -= step;
            let fd = (forward(&up, &x) - forward(&dn, &x)) / (2.0 * step);
            println!("param {p}[{i}]: tape {:+.8}, finite difference {fd:+.8}", g[i]);
        }
    }
    Ok(())
}
