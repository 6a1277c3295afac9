use std::f64::consts::TAU;
use std::sync::Arc;

use crate::sim::Lattice;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type PointFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;

/// A time profile `a(t)` with its derivative.
#[derive(Clone)]
pub struct TimeFn {
    value: ScalarFn,
    derivative: ScalarFn,
    constant: bool,
}

impl TimeFn {
    pub fn one() -> Self {
        Self { value: Arc::new(|_| 1.0), derivative: Arc::new(|_| 0.0), constant: true }
    }

    /// `e^{-rate t}`.
    pub fn exponential(rate: f64) -> Self {
        Self {
            value: Arc::new(move |t| (-rate * t).exp()),
            derivative: Arc::new(move |t| -rate * (-rate * t).exp()),
            constant: rate == 0.0,
        }
    }

    pub fn new(value: ScalarFn, derivative: ScalarFn) -> Self {
        Self { value, derivative, constant: false }
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.value)(t)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        (self.derivative)(t)
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }

    pub(crate) fn value_fn(&self) -> ScalarFn {
        self.value.clone()
    }

    pub(crate) fn derivative_fn(&self) -> ScalarFn {
        self.derivative.clone()
    }
}

/// A spatial profile `b(u)` on the torus with analytic gradient and Laplacian.
#[derive(Clone)]
pub struct SpatialFn {
    value: PointFn,
    gradient: VectorFn,
    laplacian: PointFn,
    constant: bool,
}

impl SpatialFn {
    pub fn constant(c: f64) -> Self {
        Self {
            value: Arc::new(move |_| c),
            gradient: Arc::new(|_| [0.0; 2]),
            laplacian: Arc::new(|_| 0.0),
            constant: true,
        }
    }

    /// `amplitude · cos(2π k u_axis)`.
    pub fn cosine(amplitude: f64, k: u32, axis: usize) -> Self {
        let w = TAU * k as f64;
        Self {
            value: Arc::new(move |u| amplitude * (w * u[axis]).cos()),
            gradient: Arc::new(move |u| {
                let mut g = [0.0; 2];
                g[axis] = -amplitude * w * (w * u[axis]).sin();
                g
            }),
            laplacian: Arc::new(move |u| -amplitude * w * w * (w * u[axis]).cos()),
            constant: k == 0,
        }
    }

    /// `amplitude · sin(2π k u_axis)`.
    pub fn sine(amplitude: f64, k: u32, axis: usize) -> Self {
        let w = TAU * k as f64;
        Self {
            value: Arc::new(move |u| amplitude * (w * u[axis]).sin()),
            gradient: Arc::new(move |u| {
                let mut g = [0.0; 2];
                g[axis] = amplitude * w * (w * u[axis]).cos();
                g
            }),
            laplacian: Arc::new(move |u| -amplitude * w * w * (w * u[axis]).sin()),
            constant: false,
        }
    }

    pub fn new(value: PointFn, gradient: VectorFn, laplacian: PointFn) -> Self {
        Self { value, gradient, laplacian, constant: false }
    }

    pub fn value(&self, u: [f64; 2]) -> f64 {
        (self.value)(u)
    }

    pub fn gradient(&self, u: [f64; 2]) -> [f64; 2] {
        (self.gradient)(u)
    }

    pub fn laplacian(&self, u: [f64; 2]) -> f64 {
        (self.laplacian)(u)
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }
}

/// One separable piece `a(t) b(u)`.
#[derive(Clone)]
pub struct FieldTerm {
    pub time: TimeFn,
    pub space: SpatialFn,
}

/// A test field `G(t, u) = sum_k a_k(t) b_k(u)` on `[0, T] × T^d` together
/// with its lattice derivatives.
#[derive(Clone)]
pub struct DiscreteTestField {
    dim: usize,
    terms: Vec<FieldTerm>,
}

fn wrap(u: f64) -> f64 {
    u - u.floor()
}

impl DiscreteTestField {
    pub fn new(dim: usize, terms: Vec<FieldTerm>) -> Self {
        Self { dim, terms }
    }

    /// A time-independent field `b(u)`.
    pub fn stationary(dim: usize, space: SpatialFn) -> Self {
        Self::new(dim, vec![FieldTerm { time: TimeFn::one(), space }])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[FieldTerm] {
        &self.terms
    }

    pub fn is_time_independent(&self) -> bool {
        self.terms.iter().all(|t| t.time.is_constant())
    }

    pub fn is_spatially_constant(&self) -> bool {
        self.terms.iter().all(|t| t.space.is_constant())
    }

    pub fn value(&self, t: f64, u: [f64; 2]) -> f64 {
        self.terms.iter().map(|k| k.time.value(t) * k.space.value(u)).sum()
    }

    pub fn time_derivative(&self, t: f64, u: [f64; 2]) -> f64 {
        self.terms.iter().map(|k| k.time.derivative(t) * k.space.value(u)).sum()
    }

    pub fn gradient(&self, t: f64, u: [f64; 2]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for k in &self.terms {
            let a = k.time.value(t);
            let gk = k.space.gradient(u);
            g[0] += a * gk[0];
            g[1] += a * gk[1];
        }
        g
    }

    pub fn laplacian(&self, t: f64, u: [f64; 2]) -> f64 {
        self.terms.iter().map(|k| k.time.value(t) * k.space.laplacian(u)).sum()
    }

    fn step(&self, u: [f64; 2], j: usize, h: f64) -> [f64; 2] {
        let mut v = u;
        v[j] = wrap(v[j] + h);
        v
    }

    /// `Δ^N G(t, u) = N² sum_j [G(u + e_j/N) + G(u - e_j/N) - 2 G(u)]`.
    pub fn discrete_laplacian(&self, t: f64, u: [f64; 2], n: usize) -> f64 {
        let h = 1.0 / n as f64;
        let centre = self.value(t, u);
        let mut acc = 0.0;
        for j in 0..self.dim {
            acc += self.value(t, self.step(u, j, h)) + self.value(t, self.step(u, j, -h)) - 2.0 * centre;
        }
        (n * n) as f64 * acc
    }

    /// `∂^N_{+j} G(t, u) = N [G(u + e_j/N) - G(u)]`.
    pub fn right_derivative(&self, t: f64, u: [f64; 2], n: usize, j: usize) -> f64 {
        n as f64 * (self.value(t, self.step(u, j, 1.0 / n as f64)) - self.value(t, u))
    }

    /// `∇^N_+ G(t, u)`.
    pub fn right_gradient(&self, t: f64, u: [f64; 2], n: usize) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (j, slot) in g.iter_mut().enumerate().take(self.dim) {
            *slot = self.right_derivative(t, u, n, j);
        }
        g
    }

    /// `max_x |Δ^N G(t, x/N) - ΔG(t, x/N)|` over the lattice.
    pub fn taylor_defect(&self, t: f64, lattice: &Lattice) -> f64 {
        let n = lattice.side();
        (0..lattice.sites())
            .map(|x| {
                let u = lattice.position(x);
                (self.discrete_laplacian(t, u, n) - self.laplacian(t, u)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `sup_u |∇G(t, u)|²`, sampled on a lattice of the given side.
    pub fn gradient_sup_squared(&self, t: f64, side: usize) -> f64 {
        let lattice = Lattice::new(self.dim, side).expect("side >= 1");
        (0..lattice.sites())
            .map(|x| {
                let g = self.gradient(t, lattice.position(x));
                g[0] * g[0] + g[1] * g[1]
            })
            .fold(0.0, f64::max)
    }
}
