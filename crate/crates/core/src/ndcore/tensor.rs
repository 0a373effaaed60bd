use super::error::{NdError, Result};
use super::kernels;

/// Dense row-major `f64` array of rank 1 to 3.
///
/// A tensor flagged `requires_grad` carries a same-shape gradient buffer once
/// a backward pass has accumulated into it.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
    requires_grad: bool,
    grad: Option<Vec<f64>>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        kernels::check_rank(&shape)?;
        if kernels::numel(&shape) != data.len() {
            return Err(NdError::InvalidShape {
                shape,
                reason: format!("holds {} values", data.len()),
            });
        }
        kernels::check_finite("Tensor::new", &data)?;
        Ok(Tensor {
            shape,
            data,
            requires_grad: false,
            grad: None,
        })
    }

    pub(crate) fn from_parts_unchecked(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(kernels::numel(&shape), data.len());
        Tensor {
            shape,
            data,
            requires_grad: false,
            grad: None,
        }
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        Tensor::new(shape.to_vec(), vec![0.0; kernels::numel(shape)])
    }

    pub fn full(shape: &[usize], value: f64) -> Result<Self> {
        Tensor::new(shape.to_vec(), vec![value; kernels::numel(shape)])
    }

    pub fn scalar(value: f64) -> Result<Self> {
        Tensor::new(vec![1], vec![value])
    }

    pub fn vector(values: &[f64]) -> Result<Self> {
        Tensor::new(vec![values.len()], values.to_vec())
    }

    /// Builds an `rows × cols` matrix; every row must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(NdError::Shape {
                    op: "from_rows",
                    lhs: vec![cols],
                    rhs: vec![r.len()],
                });
            }
            data.extend_from_slice(r);
        }
        Tensor::new(vec![rows.len(), cols], data)
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Tensor::new(vec![n, n], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    /// Element `(i, j)` of a rank-2 tensor.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        assert_eq!(self.rank(), 2, "at() needs a matrix");
        self.data[i * self.shape[1] + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        assert_eq!(self.rank(), 2, "row() needs a matrix");
        let c = self.shape[1];
        &self.data[i * c..(i + 1) * c]
    }

    /// Overwrites the values in place; the new data must be finite.
    pub fn set_data(&mut self, data: Vec<f64>) -> Result<()> {
        if data.len() != self.data.len() {
            return Err(NdError::Shape {
                op: "set_data",
                lhs: self.shape.clone(),
                rhs: vec![data.len()],
            });
        }
        kernels::check_finite("set_data", &data)?;
        self.data = data;
        Ok(())
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor> {
        kernels::check_rank(shape)?;
        if kernels::numel(shape) != self.numel() {
            return Err(NdError::Shape {
                op: "reshape",
                lhs: self.shape.clone(),
                rhs: shape.to_vec(),
            });
        }
        Ok(Tensor::from_parts_unchecked(shape.to_vec(), self.data.clone()))
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    pub fn set_requires_grad(&mut self, flag: bool) {
        self.requires_grad = flag;
        if !flag {
            self.grad = None;
        }
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = self.grad.as_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub(crate) fn accumulate_grad(&mut self, delta: &[f64]) {
        debug_assert_eq!(delta.len(), self.data.len());
        match self.grad.as_mut() {
            Some(g) => g.iter_mut().zip(delta).for_each(|(g, d)| *g += d),
            None => self.grad = Some(delta.to_vec()),
        }
    }

    pub(crate) fn data_and_grad_mut(&mut self) -> (&mut [f64], Option<&[f64]>) {
        (&mut self.data, self.grad.as_deref())
    }

    pub(crate) fn grad_mut(&mut self) -> Option<&mut [f64]> {
        self.grad.as_deref_mut()
    }

    fn wrap(op: &'static str, (shape, data): (Vec<usize>, Vec<f64>)) -> Result<Tensor> {
        kernels::check_finite(op, &data)?;
        Ok(Tensor::from_parts_unchecked(shape, data))
    }

    fn zip_with(&self, other: &Tensor, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        kernels::same_shape(op, &self.shape, &other.shape)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Tensor::wrap(op, (self.shape.clone(), data))
    }

    fn map(&self, op: &'static str, f: impl Fn(f64) -> f64) -> Result<Tensor> {
        Tensor::wrap(op, (self.shape.clone(), self.data.iter().map(|&v| f(v)).collect()))
    }

    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        Tensor::wrap(
            "matmul",
            kernels::matmul(&self.shape, &self.data, &other.shape, &other.data)?,
        )
    }

    pub fn batch_matmul(&self, other: &Tensor) -> Result<Tensor> {
        Tensor::wrap(
            "batch_matmul",
            kernels::batch_matmul(&self.shape, &self.data, &other.shape, &other.data)?,
        )
    }

    pub fn transpose(&self) -> Result<Tensor> {
        Tensor::wrap("transpose", kernels::transpose_last(&self.shape, &self.data)?)
    }

    /// Softmax over the last axis (each row of a matrix).
    pub fn softmax_rows(&self) -> Result<Tensor> {
        kernels::check_finite("softmax_rows", &self.data)?;
        Tensor::wrap(
            "softmax_rows",
            (self.shape.clone(), kernels::softmax_last(&self.shape, &self.data)),
        )
    }

    pub fn sigmoid(&self) -> Result<Tensor> {
        self.map("sigmoid", kernels::sigmoid)
    }

    pub fn tanh_act(&self) -> Result<Tensor> {
        self.map("tanh", f64::tanh)
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn hadamard(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, "hadamard", |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Result<Tensor> {
        self.map("scale", |v| v * c)
    }

    pub fn concat(&self, other: &Tensor, axis: usize) -> Result<Tensor> {
        Tensor::wrap(
            "concat",
            kernels::concat(&self.shape, &self.data, &other.shape, &other.data, axis)?,
        )
    }

    pub fn select(&self, axis: usize, index: usize) -> Result<Tensor> {
        Tensor::wrap("select", kernels::select(&self.shape, &self.data, axis, index)?)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }
}
