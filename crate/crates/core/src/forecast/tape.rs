//! Reverse-mode autodiff over vector-valued nodes.
//!
//! Every node holds a column vector. Parameters are matrices living outside
//! the tape and enter only through [`Tape::matvec`] and [`Tape::add_bias`],
//! so their gradients accumulate as outer products during [`Tape::backward`].

use nalgebra::{DMatrix, DVector};

use super::ForecastError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    /// `params[p] * x`
    MatVec { p: usize, x: NodeId },
    /// `x + params[p]` with `params[p]` an `n x 1` matrix
    AddBias { x: NodeId, p: usize },
    Add(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Sigmoid(NodeId),
    Tanh(NodeId),
    OneMinus(NodeId),
    Slice { x: NodeId, start: usize },
    Concat(Vec<NodeId>),
}

#[derive(Debug, Clone)]
struct Node {
    value: DVector<f64>,
    op: Op,
}

/// A recorded forward computation. Gradients can be pulled back once.
#[derive(Debug)]
pub struct Tape<'p> {
    params: &'p [DMatrix<f64>],
    nodes: Vec<Node>,
    consumed: bool,
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p [DMatrix<f64>]) -> Self {
        Self {
            params,
            nodes: Vec::new(),
            consumed: false,
        }
    }

    fn push(&mut self, value: DVector<f64>, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    pub fn value(&self, id: NodeId) -> &DVector<f64> {
        &self.nodes[id.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf(&mut self, v: DVector<f64>) -> NodeId {
        self.push(v, Op::Leaf)
    }

    pub fn matvec(&mut self, p: usize, x: NodeId) -> NodeId {
        let v = &self.params[p] * self.value(x);
        self.push(v, Op::MatVec { p, x })
    }

    pub fn add_bias(&mut self, x: NodeId, p: usize) -> NodeId {
        let v = self.value(x) + self.params[p].column(0);
        self.push(v, Op::AddBias { x, p })
    }

    /// `params[w] * x + params[b]`
    pub fn affine(&mut self, w: usize, b: usize, x: NodeId) -> NodeId {
        let y = self.matvec(w, x);
        self.add_bias(y, b)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a) + self.value(b);
        self.push(v, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a).component_mul(self.value(b));
        self.push(v, Op::Mul(a, b))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(sigmoid);
        self.push(v, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(f64::tanh);
        self.push(v, Op::Tanh(a))
    }

    pub fn one_minus(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(|x| 1.0 - x);
        self.push(v, Op::OneMinus(a))
    }

    pub fn slice(&mut self, x: NodeId, start: usize, len: usize) -> NodeId {
        let v = self.value(x).rows(start, len).into_owned();
        self.push(v, Op::Slice { x, start })
    }

    pub fn concat(&mut self, parts: &[NodeId]) -> NodeId {
        let n = parts.iter().map(|p| self.value(*p).len()).sum();
        let mut v = DVector::zeros(n);
        let mut at = 0;
        for p in parts {
            let x = self.value(*p);
            v.rows_mut(at, x.len()).copy_from(x);
            at += x.len();
        }
        self.push(v, Op::Concat(parts.to_vec()))
    }

    /// Pulls `grad` at `out` back to every parameter. Returns one gradient
    /// matrix per parameter, shaped like the parameter.
    pub fn backward(&mut self, out: NodeId, grad: &DVector<f64>) -> Result<Vec<DMatrix<f64>>, ForecastError> {
        if self.consumed {
            return Err(ForecastError::TapeConsumed);
        }
        self.consumed = true;
        if grad.len() != self.value(out).len() {
            return Err(ForecastError::ShapeMismatch(format!(
                "output gradient has length {}, node has {}",
                grad.len(),
                self.value(out).len()
            )));
        }
        let mut pg: Vec<DMatrix<f64>> = self
            .params
            .iter()
            .map(|p| DMatrix::zeros(p.nrows(), p.ncols()))
            .collect();
        let mut g: Vec<Option<DVector<f64>>> = vec![None; out.0 + 1];
        g[out.0] = Some(grad.clone());

        fn acc(g: &mut [Option<DVector<f64>>], id: NodeId, d: DVector<f64>) {
            match &mut g[id.0] {
                Some(x) => *x += d,
                slot => *slot = Some(d),
            }
        }

        for i in (0..=out.0).rev() {
            let Some(gi) = g[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {}
                Op::MatVec { p, x } => {
                    let xv = &self.nodes[x.0].value;
                    pg[*p].ger(1.0, &gi, xv, 1.0);
                    acc(&mut g, *x, self.params[*p].tr_mul(&gi));
                }
                Op::AddBias { x, p } => {
                    pg[*p].column_mut(0).axpy(1.0, &gi, 1.0);
                    acc(&mut g, *x, gi);
                }
                Op::Add(a, b) => {
                    acc(&mut g, *a, gi.clone());
                    acc(&mut g, *b, gi);
                }
                Op::Mul(a, b) => {
                    let da = gi.component_mul(&self.nodes[b.0].value);
                    let db = gi.component_mul(&self.nodes[a.0].value);
                    acc(&mut g, *a, da);
                    acc(&mut g, *b, db);
                }
                Op::Sigmoid(a) => {
                    let d = gi.zip_map(&node.value, |g, s| g * s * (1.0 - s));
                    acc(&mut g, *a, d);
                }
                Op::Tanh(a) => {
                    let d = gi.zip_map(&node.value, |g, t| g * (1.0 - t * t));
                    acc(&mut g, *a, d);
                }
                Op::OneMinus(a) => acc(&mut g, *a, -gi),
                Op::Slice { x, start } => {
                    let mut d = DVector::zeros(self.nodes[x.0].value.len());
                    d.rows_mut(*start, gi.len()).copy_from(&gi);
                    acc(&mut g, *x, d);
                }
                Op::Concat(parts) => {
                    let mut at = 0;
                    for p in parts {
                        let n = self.nodes[p.0].value.len();
                        acc(&mut g, *p, gi.rows(at, n).into_owned());
                        at += n;
                    }
                }
            }
        }
        Ok(pg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_gradient() {
        let params = vec![DMatrix::from_element(1, 1, 2.0)];
        let mut tape = Tape::new(&params);
        let x = tape.leaf(DVector::from_element(1, 3.0));
        let y = tape.matvec(0, x);
        assert_eq!(tape.value(y)[0], 6.0);
        let g = tape.backward(y, &DVector::from_element(1, 1.0)).unwrap();
        assert_eq!(g[0][(0, 0)], 3.0);
        assert!(matches!(
            tape.backward(y, &DVector::from_element(1, 1.0)),
            Err(ForecastError::TapeConsumed)
        ));
    }

    #[test]
    fn gates_match_finite_differences() {
        let params = vec![
            DMatrix::from_row_slice(3, 2, &[0.3, -0.2, 0.5, 0.1, -0.4, 0.7]),
            DMatrix::from_column_slice(3, 1, &[0.1, -0.1, 0.2]),
        ];
        fn f(ps: &[DMatrix<f64>]) -> (f64, Tape<'_>, NodeId) {
            let mut t = Tape::new(ps);
            let x = t.leaf(DVector::from_vec(vec![0.9, -1.3]));
            let a = t.affine(0, 1, x);
            let s = t.sigmoid(a);
            let h = t.tanh(a);
            let m = t.one_minus(s);
            let p = t.mul(m, h);
            let q = t.slice(p, 1, 2);
            let r = t.slice(s, 0, 1);
            let c = t.concat(&[q, r]);
            let o = t.add(c, c);
            (t.value(o).sum(), t, o)
        }
        let (_, mut tape, out) = f(&params);
        let g = tape.backward(out, &DVector::from_element(3, 1.0)).unwrap();
        for k in 0..2 {
            for i in 0..params[k].len() {
                let mut up = params.clone();
                up[k][i] += 1e-6;
                let mut dn = params.clone();
                dn[k][i] -= 1e-6;
                let fd = (f(&up).0 - f(&dn).0) / 2e-6;
                assert!((fd - g[k][i]).abs() < 1e-8, "param {k}[{i}]: {fd} vs {}", g[k][i]);
            }
        }
    }
}
