use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Parameters of a `D → h1 → h2 → n` ReLU network.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub w2: DMatrix<f64>,
    pub b2: DVector<f64>,
    pub w3: DMatrix<f64>,
    pub b3: DVector<f64>,
}

/// Gradients with the same shapes as [`Mlp`].
pub type Gradients = Mlp;

impl Mlp {
    pub fn zeros(input: usize, h1: usize, h2: usize, out: usize) -> Self {
        Self {
            w1: DMatrix::zeros(h1, input),
            b1: DVector::zeros(h1),
            w2: DMatrix::zeros(h2, h1),
            b2: DVector::zeros(h2),
            w3: DMatrix::zeros(out, h2),
            b3: DVector::zeros(out),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng>(input: usize, h1: usize, h2: usize, out: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(input, h1, h2, out);
        for w in [&mut m.w1, &mut m.w2, &mut m.w3] {
            let (fan_out, fan_in) = w.shape();
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in w.iter_mut() {
                *v = rng.random_range(-bound..bound);
            }
        }
        m
    }

    pub fn input_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn hidden(&self) -> (usize, usize) {
        (self.w1.nrows(), self.w2.nrows())
    }

    pub fn n_outputs(&self) -> usize {
        self.w3.nrows()
    }

    /// Tensors in serialization order: W1, b1, W2, b2, W3, b3.
    pub fn tensors(&self) -> [&[f64]; 6] {
        [
            self.w1.as_slice(),
            self.b1.as_slice(),
            self.w2.as_slice(),
            self.b2.as_slice(),
            self.w3.as_slice(),
            self.b3.as_slice(),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 6] {
        [
            self.w1.as_mut_slice(),
            self.b1.as_mut_slice(),
            self.w2.as_mut_slice(),
            self.b2.as_mut_slice(),
            self.w3.as_mut_slice(),
            self.b3.as_mut_slice(),
        ]
    }

    pub fn squared_weight_norm(&self) -> f64 {
        self.w1.norm_squared() + self.w2.norm_squared() + self.w3.norm_squared()
    }

    /// Logits for a batch (one row per example).
    pub fn logits(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.forward(x).logits
    }

    fn forward(&self, x: &DMatrix<f64>) -> Forward {
        let z1 = affine(x, &self.w1, &self.b1);
        let a1 = z1.map(relu);
        let z2 = affine(&a1, &self.w2, &self.b2);
        let a2 = z2.map(relu);
        let logits = affine(&a2, &self.w3, &self.b3);
        Forward {
            z1,
            a1,
            z2,
            a2,
            logits,
        }
    }

    /// Mean softmax cross-entropy plus `reg·Σ‖W‖²` over the three weight
    /// matrices.
    pub fn loss(&self, x: &DMatrix<f64>, y: &[usize], reg: f64) -> f64 {
        let f = self.forward(x);
        cross_entropy(&f.logits, y).0 + reg * self.squared_weight_norm()
    }

    pub fn loss_and_grad(&self, x: &DMatrix<f64>, y: &[usize], reg: f64) -> (f64, Gradients) {
        let f = self.forward(x);
        let (ce, delta) = cross_entropy(&f.logits, y);
        let loss = ce + reg * self.squared_weight_norm();

        let gw3 = delta.transpose() * &f.a2 + &self.w3 * (2.0 * reg);
        let gb3 = column_sums(&delta);
        let mut d2 = &delta * &self.w3;
        mask(&mut d2, &f.z2);
        let gw2 = d2.transpose() * &f.a1 + &self.w2 * (2.0 * reg);
        let gb2 = column_sums(&d2);
        let mut d1 = &d2 * &self.w2;
        mask(&mut d1, &f.z1);
        let gw1 = d1.transpose() * x + &self.w1 * (2.0 * reg);
        let gb1 = column_sums(&d1);

        (
            loss,
            Mlp {
                w1: gw1,
                b1: gb1,
                w2: gw2,
                b2: gb2,
                w3: gw3,
                b3: gb3,
            },
        )
    }

    /// Predicted label per row; ties go to the lowest label id.
    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<usize> {
        let logits = self.logits(x);
        (0..logits.nrows())
            .map(|i| {
                let row = logits.row(i);
                let mut best = 0;
                for j in 1..row.len() {
                    if row[j] > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }
}

struct Forward {
    z1: DMatrix<f64>,
    a1: DMatrix<f64>,
    z2: DMatrix<f64>,
    a2: DMatrix<f64>,
    logits: DMatrix<f64>,
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

fn affine(x: &DMatrix<f64>, w: &DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    let mut z = x * w.transpose();
    for mut row in z.row_iter_mut() {
        row += b.transpose();
    }
    z
}

fn mask(d: &mut DMatrix<f64>, z: &DMatrix<f64>) {
    d.zip_apply(z, |g, zv| {
        if zv <= 0.0 {
            *g = 0.0;
        }
    });
}

fn column_sums(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum()))
}

/// Mean cross-entropy and its gradient with respect to the logits.
fn cross_entropy(logits: &DMatrix<f64>, y: &[usize]) -> (f64, DMatrix<f64>) {
    let b = logits.nrows() as f64;
    let mut grad = DMatrix::zeros(logits.nrows(), logits.ncols());
    let mut loss = 0.0;
    for (i, &label) in y.iter().enumerate() {
        let row = logits.row(i);
        let max = row.max();
        let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let log_z = max + sum.ln();
        loss += log_z - row[label];
        for j in 0..row.len() {
            grad[(i, j)] = (row[j] - log_z).exp() / b;
        }
        grad[(i, label)] -= 1.0 / b;
    }
    (loss / b, grad)
}

/// Adam state for one [`Mlp`].
pub(crate) struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Mlp,
    v: Mlp,
}

impl Adam {
    pub(crate) fn new(model: &Mlp, lr: f64) -> Self {
        let (h1, h2) = model.hidden();
        let zeros = Mlp::zeros(model.input_dim(), h1, h2, model.n_outputs());
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub(crate) fn step(&mut self, model: &mut Mlp, grad: &Gradients) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        let params = model.tensors_mut();
        let grads = grad.tensors();
        let ms = self.m.tensors_mut();
        let vs = self.v.tensors_mut();
        for (((p, g), m), v) in params.into_iter().zip(grads).zip(ms).zip(vs) {
            for k in 0..p.len() {
                m[k] = b1 * m[k] + (1.0 - b1) * g[k];
                v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
                let mh = m[k] / c1;
                let vh = v[k] / c2;
                p[k] -= lr * mh / (vh.sqrt() + eps);
            }
        }
    }
}
