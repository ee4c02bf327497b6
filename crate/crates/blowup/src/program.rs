//! Straight-line evaluation programs for sets of polynomials.
//!
//! Every monomial `x^γ` needed by any output is a node computed as
//! `node(γ - e_j) · x_j`, where `j` is the last variable with `γ_j > 0`.
//! The same program is evaluated at points, on whole series, and
//! coefficient by coefficient (for recursions where later coefficients of
//! the inputs are still unknown).

use std::collections::BTreeMap;

use crate::interval::Interval;
use crate::linalg::Scalar;
use crate::poly::Poly;
use crate::series::{for_each_split, Series};

#[derive(Clone, Debug)]
struct Node {
    pred: usize,
    var: usize,
}

#[derive(Clone, Debug)]
pub struct Program {
    n: usize,
    nodes: Vec<Node>,
    exps: Vec<Vec<u32>>,
    outputs: Vec<Vec<(usize, Interval)>>,
}

impl Program {
    /// Builds one output per polynomial (all in `n` variables).
    pub fn new(n: usize, polys: &[&Poly]) -> Program {
        let mut set: BTreeMap<(u32, Vec<u32>), ()> = BTreeMap::new();
        set.insert((0, vec![0; n]), ());
        for p in polys {
            assert_eq!(p.nvars(), n);
            for (e, _) in p.terms() {
                let mut cur = e.clone();
                loop {
                    let d: u32 = cur.iter().sum();
                    if set.insert((d, cur.clone()), ()).is_some() || d == 0 {
                        break;
                    }
                    let j = cur.iter().rposition(|&v| v > 0).unwrap();
                    cur[j] -= 1;
                }
            }
        }
        let exps: Vec<Vec<u32>> = set.into_keys().map(|(_, e)| e).collect();
        let pos: BTreeMap<&Vec<u32>, usize> = exps.iter().enumerate().map(|(i, e)| (e, i)).collect();
        let nodes = exps
            .iter()
            .map(|e| match e.iter().rposition(|&v| v > 0) {
                None => Node { pred: usize::MAX, var: 0 },
                Some(j) => {
                    let mut p = e.clone();
                    p[j] -= 1;
                    Node { pred: pos[&p], var: j }
                }
            })
            .collect();
        let outputs = polys
            .iter()
            .map(|p| p.interval_terms().into_iter().map(|(c, e)| (pos[&e], c)).collect())
            .collect();
        Program { n, nodes, exps, outputs }
    }

    pub fn num_inputs(&self) -> usize {
        self.n
    }
    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }
    pub fn max_degree(&self) -> u32 {
        self.exps.iter().map(|e| e.iter().sum::<u32>()).max().unwrap_or(0)
    }

    /// Same program with every output multiplied by `-1`.
    pub fn negated(&self) -> Program {
        let mut p = self.clone();
        for o in &mut p.outputs {
            for t in o.iter_mut() {
                t.1 = -t.1;
            }
        }
        p
    }

    /// Monomial values at a point.
    pub fn node_values<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let mut v: Vec<T> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            if node.pred == usize::MAX {
                v.push(T::one());
            } else {
                let val = v[node.pred] * x[node.var];
                v.push(val);
            }
        }
        v
    }

    /// All outputs at a point.
    pub fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let v = self.node_values(x);
        self.outputs.iter().map(|o| combine(o, |k| v[k])).collect()
    }

    /// Selected outputs at a point.
    pub fn eval_outputs<T: Scalar>(&self, x: &[T], which: std::ops::Range<usize>) -> Vec<T> {
        let v = self.node_values(x);
        self.outputs[which].iter().map(|o| combine(o, |k| v[k])).collect()
    }

    /// Composition with series inputs. Products are exact unless `trunc`
    /// is given, in which case discarded mass goes to the tails.
    pub fn eval_series(&self, x: &[Series], trunc: Option<usize>) -> Vec<Series> {
        let m = x[0].m();
        let mut vals: Vec<Series> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            if node.pred == usize::MAX {
                vals.push(Series::constant(m, 0, Interval::ONE));
            } else {
                let s = vals[node.pred].try_mul(&x[node.var], trunc).expect("series shape");
                vals.push(s);
            }
        }
        self.outputs
            .iter()
            .map(|o| {
                let mut acc = Series::zeros(m, 0);
                for &(k, c) in o {
                    acc.axpy(c, &vals[k]);
                }
                acc
            })
            .collect()
    }

    /// Starts an order-by-order evaluation with room for `len` coefficients.
    pub fn incremental<T: Scalar>(&self, len: usize) -> Incremental<T> {
        Incremental { nodes: vec![vec![T::zero(); len]; self.nodes.len()] }
    }

    /// Computes every node coefficient at storage index `idx` (multi-index
    /// `alpha`) from input coefficients `x[j][..]`; node coefficients at
    /// indices below `alpha` must be final.
    pub fn step<T: Scalar>(&self, st: &mut Incremental<T>, idx: usize, alpha: &[u32], x: &[Vec<T>]) {
        for (k, node) in self.nodes.iter().enumerate() {
            if node.pred == usize::MAX {
                st.nodes[k][idx] = if idx == 0 { T::one() } else { T::zero() };
                continue;
            }
            let xs = &x[node.var];
            let (head, tail) = st.nodes.split_at_mut(k);
            let pred = &head[node.pred];
            let mut acc = T::zero();
            for_each_split(alpha, |b, c| acc += pred[b] * xs[c]);
            tail[0][idx] = acc;
        }
    }

    /// One-variable specialization of [`Program::step`] (`idx = order`).
    pub fn step1<T: Scalar>(&self, st: &mut Incremental<T>, k: usize, x: &[Vec<T>]) {
        for (i, node) in self.nodes.iter().enumerate() {
            if node.pred == usize::MAX {
                st.nodes[i][k] = if k == 0 { T::one() } else { T::zero() };
                continue;
            }
            let xs = &x[node.var];
            let (head, tail) = st.nodes.split_at_mut(i);
            let pred = &head[node.pred];
            let mut acc = T::zero();
            for b in 0..=k {
                acc += pred[b] * xs[k - b];
            }
            tail[0][k] = acc;
        }
    }

    /// Output `o` at coefficient index `idx` of an incremental evaluation.
    pub fn output_at<T: Scalar>(&self, st: &Incremental<T>, o: usize, idx: usize) -> T {
        combine(&self.outputs[o], |k| st.nodes[k][idx])
    }
}

fn combine<T: Scalar, F: Fn(usize) -> T>(terms: &[(usize, Interval)], val: F) -> T {
    let mut s = T::zero();
    for &(k, c) in terms {
        s += T::from_interval(c) * val(k);
    }
    s
}

/// Node coefficient storage of an order-by-order evaluation.
#[derive(Clone, Debug)]
pub struct Incremental<T> {
    nodes: Vec<Vec<T>>,
}

impl<T: Scalar> Incremental<T> {
    /// Grows storage to `len` coefficients per node.
    pub fn ensure_len(&mut self, len: usize) {
        for v in &mut self.nodes {
            if v.len() < len {
                v.resize(len, T::zero());
            }
        }
    }
}
