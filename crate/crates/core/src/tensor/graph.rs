//! Append-only computation tape. Nodes are created in topological order
//! by construction; backward walks the tape in reverse.

use super::{ParameterStore, Tensor, TensorError};

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Leaf,
    Add(Var, Var),
    AddN(Vec<Var>),
    Sub(Var, Var),
    Mul(Var, Var),
    ScaleConst(Var, f64),
    MatVec(Var, Var),
    Dot(Var, Var),
    Concat(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    SoftmaxK(Var, f64),
    Log(Var),
    Abs(Var),
    Sum(Var),
    MeanVecs(Vec<Var>),
    StackScalars(Vec<Var>),
    Pick(Var, usize),
    Row(Var, usize),
    ScaleByScalar(Var, Var),
    DivByScalar(Var, Var),
}

struct Node {
    op: Op,
    value: Tensor,
    grad: Option<Tensor>,
    param: Option<String>,
}

/// Reverse-mode autodiff tape.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn grad(&self, v: Var) -> Option<&Tensor> {
        self.nodes[v.0].grad.as_ref()
    }

    fn push(&mut self, op: Op, value: Tensor) -> Var {
        self.nodes.push(Node {
            op,
            value,
            grad: None,
            param: None,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(Op::Leaf, value)
    }

    pub fn scalar(&mut self, value: f64) -> Var {
        self.constant(Tensor::scalar(value))
    }

    /// Leaf bound to a named parameter; backward accumulates its
    /// gradient into the store.
    pub fn param(&mut self, store: &ParameterStore, name: &str) -> Var {
        let value = store.value(name).clone();
        let var = self.push(Op::Leaf, value);
        self.nodes[var.0].param = Some(name.to_string());
        var
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(va.shape(), vb.shape(), "add: shape mismatch");
        let data = va
            .data()
            .iter()
            .zip(vb.data())
            .map(|(x, y)| x + y)
            .collect();
        let value = Tensor::new(va.shape().to_vec(), data);
        self.push(Op::Add(a, b), value)
    }

    /// Sum of any number of same-shape tensors; empty input is a scalar 0.
    pub fn add_n(&mut self, vars: &[Var]) -> Var {
        if vars.is_empty() {
            return self.scalar(0.0);
        }
        let shape = self.nodes[vars[0].0].value.shape().to_vec();
        let mut data = vec![0.0; self.nodes[vars[0].0].value.len()];
        for v in vars {
            let t = &self.nodes[v.0].value;
            assert_eq!(t.shape(), &shape[..], "add_n: shape mismatch");
            for (acc, x) in data.iter_mut().zip(t.data()) {
                *acc += x;
            }
        }
        self.push(Op::AddN(vars.to_vec()), Tensor::new(shape, data))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(va.shape(), vb.shape(), "sub: shape mismatch");
        let data = va
            .data()
            .iter()
            .zip(vb.data())
            .map(|(x, y)| x - y)
            .collect();
        let value = Tensor::new(va.shape().to_vec(), data);
        self.push(Op::Sub(a, b), value)
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(va.shape(), vb.shape(), "mul: shape mismatch");
        let data = va
            .data()
            .iter()
            .zip(vb.data())
            .map(|(x, y)| x * y)
            .collect();
        let value = Tensor::new(va.shape().to_vec(), data);
        self.push(Op::Mul(a, b), value)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let va = &self.nodes[a.0].value;
        let value = Tensor::new(va.shape().to_vec(), va.data().iter().map(|x| c * x).collect());
        self.push(Op::ScaleConst(a, c), value)
    }

    /// Matrix [m,n] times vector [n].
    pub fn matvec(&mut self, m: Var, x: Var) -> Var {
        let (vm, vx) = (&self.nodes[m.0].value, &self.nodes[x.0].value);
        assert_eq!(vm.shape().len(), 2, "matvec: lhs must be a matrix");
        assert_eq!(vx.shape().len(), 1, "matvec: rhs must be a vector");
        assert_eq!(vm.cols(), vx.len(), "matvec: inner dimensions differ");
        let (rows, cols) = (vm.rows(), vm.cols());
        let mut out = vec![0.0; rows];
        for r in 0..rows {
            let row = &vm.data()[r * cols..(r + 1) * cols];
            out[r] = row.iter().zip(vx.data()).map(|(a, b)| a * b).sum();
        }
        self.push(Op::MatVec(m, x), Tensor::vector(out))
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(va.shape(), vb.shape(), "dot: shape mismatch");
        assert_eq!(va.shape().len(), 1, "dot: vectors only");
        let value = va.data().iter().zip(vb.data()).map(|(x, y)| x * y).sum();
        self.push(Op::Dot(a, b), Tensor::scalar(value))
    }

    pub fn concat(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(va.shape().len(), 1, "concat: vectors only");
        assert_eq!(vb.shape().len(), 1, "concat: vectors only");
        let mut data = va.data().to_vec();
        data.extend_from_slice(vb.data());
        self.push(Op::Concat(a, b), Tensor::vector(data))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let va = &self.nodes[a.0].value;
        let data = va.data().iter().map(|x| sigmoid(*x)).collect();
        let value = Tensor::new(va.shape().to_vec(), data);
        self.push(Op::Sigmoid(a), value)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let va = &self.nodes[a.0].value;
        let data = va.data().iter().map(|x| x.tanh()).collect();
        let value = Tensor::new(va.shape().to_vec(), data);
        self.push(Op::Tanh(a), value)
    }

    /// Softmax with a constant added to the denominator:
    /// `p_i = exp(z_i) / (sum_j exp(z_j) + k)`, stabilized by max
    /// subtraction applied to every term including `k`.
    pub fn softmax_k(&mut self, a: Var, k: f64) -> Var {
        let va = &self.nodes[a.0].value;
        assert_eq!(va.shape().len(), 1, "softmax_k: vectors only");
        let probs = softmax_with_constant(va.data(), k).expect("finite logits");
        self.push(Op::SoftmaxK(a, k), Tensor::vector(probs))
    }

    pub fn log(&mut self, a: Var) -> Var {
        let va = &self.nodes[a.0].value;
        let data = va.data().iter().map(|x| x.ln()).collect();
        let value = Tensor::new(va.shape().to_vec(), data);
        self.push(Op::Log(a), value)
    }

    pub fn abs(&mut self, a: Var) -> Var {
        let va = &self.nodes[a.0].value;
        let data = va.data().iter().map(|x| x.abs()).collect();
        let value = Tensor::new(va.shape().to_vec(), data);
        self.push(Op::Abs(a), value)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let value = self.nodes[a.0].value.data().iter().sum();
        self.push(Op::Sum(a), Tensor::scalar(value))
    }

    /// Elementwise mean of same-shape vectors.
    pub fn mean_vecs(&mut self, vars: &[Var]) -> Var {
        assert!(!vars.is_empty(), "mean_vecs: empty set");
        let shape = self.nodes[vars[0].0].value.shape().to_vec();
        let mut data = vec![0.0; self.nodes[vars[0].0].value.len()];
        for v in vars {
            let t = &self.nodes[v.0].value;
            assert_eq!(t.shape(), &shape[..], "mean_vecs: shape mismatch");
            for (acc, x) in data.iter_mut().zip(t.data()) {
                *acc += x;
            }
        }
        let n = vars.len() as f64;
        for x in &mut data {
            *x /= n;
        }
        self.push(Op::MeanVecs(vars.to_vec()), Tensor::new(shape, data))
    }

    pub fn stack_scalars(&mut self, vars: &[Var]) -> Var {
        let data = vars
            .iter()
            .map(|v| {
                let t = &self.nodes[v.0].value;
                assert!(t.is_scalar(), "stack_scalars: scalars only");
                t.scalar_value()
            })
            .collect();
        self.push(Op::StackScalars(vars.to_vec()), Tensor::vector(data))
    }

    pub fn pick(&mut self, a: Var, index: usize) -> Var {
        let va = &self.nodes[a.0].value;
        assert_eq!(va.shape().len(), 1, "pick: vectors only");
        let value = va.data()[index];
        self.push(Op::Pick(a, index), Tensor::scalar(value))
    }

    /// Row of a matrix as a vector.
    pub fn row(&mut self, m: Var, r: Var_usize_guard(r: usize)) -> Var {
        unreachable!()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softmax with constant `k >= 0` in the denominator.
/// Returns `NonFiniteInput` when a logit is not finite.
pub fn softmax_with_constant(logits: &[f64], k: f64) -> Result<Vec<f64>, TensorError> {
    if logits.iter().any(|x| !x.is_finite()) || !k.is_finite() {
        return Err(TensorError::NonFiniteInput("softmax_with_constant"));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scaled_k = k * (-max).exp();
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let denom: f64 = exps.iter().sum::<f64>() + scaled_k;
    Ok(exps.into_iter().map(|e| e / denom).collect())
}
