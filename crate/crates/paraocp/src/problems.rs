//! Manufactured optimal control problems with known solutions.
//!
//! Each problem carries the exact optimal triple `(y*, u*, p*)` together with
//! the derivatives needed to check the optimality system pointwise:
//!
//! ```text
//! y_t − Δy = f + u,       y(0) = y₀
//! −p_t − Δp = y_d − y,    p(T) = 0
//! α u = p
//! ```

use std::f64::consts::PI;

use paraocp_core::{BoundaryCondition, ControlProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Example {
    /// Dirichlet, separable sine modes, `T = 2`.
    Sine,
    /// Neumann, exponential cosine modes, `T = 1`.
    Cosine,
}

impl Example {
    pub fn id(self) -> &'static str {
        match self {
            Example::Sine => "5.1",
            Example::Cosine => "5.2",
        }
    }
}

impl std::str::FromStr for Example {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "5.1" => Ok(Example::Sine),
            "5.2" => Ok(Example::Cosine),
            other => Err(format!("unknown example '{other}' (expected 5.1 or 5.2)")),
        }
    }
}

/// Coefficients of the Neumann example. `y* = g(t)·C(x)` with
/// `C = cos(πx₁)cos(πx₂)` and
/// `g = c₁e^{at} + c₂e^{−at} + c₃ + c₄ + c₅e^{aT} + c₆e^{−aT}`, `a = π²/3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineCoefficients {
    pub c: [f64; 12],
}

impl CosineCoefficients {
    pub fn new(alpha: f64) -> Self {
        let e = (PI * PI / 3.0).exp();
        let pi4 = PI.powi(4);
        let c1 = -5.0 * (5.0 / e - 6.0) / (-6.0 + 7.0 * e);
        let c2 = 5.0;
        let c3 = (7.0 + 141.0 * e + 7.0 * e * e - 6.0 - 106.0 / e) / (4.0 * (6.0 - 7.0 * e));
        let c456 = 0.25;
        let c7 = 5.0 * (9.0 + 35.0 * alpha * pi4) * (5.0 / e - 6.0) / (9.0 * (6.0 - 7.0 * e));
        let c8 = 5.0 + 175.0 / 9.0 * alpha * pi4;
        let c10 = 0.25 + alpha * pi4;
        let c9 = 4.0 * c3 * c10;
        Self {
            c: [c1, c2, c3, c456, c456, c456, c7, c8, c9, c10, c10, c10],
        }
    }

    /// The `c_i` with 1-based index, as tabulated.
    pub fn get(&self, i: usize) -> f64 {
        self.c[i - 1]
    }
}

const RATE: f64 = PI * PI / 3.0;

#[derive(Debug, Clone)]
pub struct ManufacturedProblem {
    example: Example,
    alpha: f64,
    beta: f64,
    cosine: CosineCoefficients,
}

impl ManufacturedProblem {
    pub fn new(example: Example) -> Self {
        let alpha = match example {
            Example::Sine => 1e-2,
            Example::Cosine => 1e-3,
        };
        Self::with_alpha(example, alpha)
    }

    /// Same problem with a different regularization; the desired state is
    /// rebuilt so that the exact solution stays optimal.
    pub fn with_alpha(example: Example, alpha: f64) -> Self {
        let beta = match example {
            Example::Sine => 10.0,
            Example::Cosine => 100.0,
        };
        Self {
            example,
            alpha,
            beta,
            cosine: CosineCoefficients::new(alpha),
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn example(&self) -> Example {
        self.example
    }

    pub fn name(&self) -> &'static str {
        self.example.id()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Default penalty β for this problem.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn coefficients(&self) -> &CosineCoefficients {
        &self.cosine
    }

    fn spatial(&self, x: f64, y: f64) -> f64 {
        match self.example {
            Example::Sine => (PI * x).sin() * (PI * y).sin(),
            Example::Cosine => (PI * x).cos() * (PI * y).cos(),
        }
    }

    /// Both spatial modes satisfy `−ΔS = 2π² S`.
    const EIGENVALUE: f64 = 2.0 * PI * PI;

    /// Temporal factor of `y*` and its derivative.
    fn state_time(&self, t: f64) -> (f64, f64) {
        match self.example {
            Example::Sine => ((PI * t).cos(), -PI * (PI * t).sin()),
            Example::Cosine => {
                let c = &self.cosine.c;
                let tf = self.horizon();
                let ea = (RATE * t).exp();
                let eb = (-RATE * t).exp();
                let g = c[0] * ea
                    + c[1] * eb
                    + c[2]
                    + c[3]
                    + c[4] * (RATE * tf).exp()
                    + c[5] * (-RATE * tf).exp();
                (g, RATE * (c[0] * ea - c[1] * eb))
            }
        }
    }

    /// Temporal factor of `u*` and its derivative.
    fn control_time(&self, t: f64) -> (f64, f64) {
        match self.example {
            Example::Sine => ((PI * t).sin(), PI * (PI * t).cos()),
            Example::Cosine => {
                // u = g' + 2π² g, so u' = g'' + 2π² g' with g'' = a²(c₁e^{at} + c₂e^{−at}).
                let c = &self.cosine.c;
                let (g, dg) = self.state_time(t);
                let ddg = RATE * RATE * (c[0] * (RATE * t).exp() + c[1] * (-RATE * t).exp());
                (dg + Self::EIGENVALUE * g, ddg + Self::EIGENVALUE * dg)
            }
        }
    }

    pub fn y_star(&self, x: f64, y: f64, t: f64) -> f64 {
        self.state_time(t).0 * self.spatial(x, y)
    }

    pub fn u_star(&self, x: f64, y: f64, t: f64) -> f64 {
        self.control_time(t).0 * self.spatial(x, y)
    }

    /// Adjoint state `p* = α u*`.
    pub fn p_star(&self, x: f64, y: f64, t: f64) -> f64 {
        self.alpha * self.u_star(x, y, t)
    }

    /// `(∂_t y*, −Δy*)` at a point.
    pub fn state_derivatives(&self, x: f64, y: f64, t: f64) -> (f64, f64) {
        let s = self.spatial(x, y);
        let (g, dg) = self.state_time(t);
        (dg * s, Self::EIGENVALUE * g * s)
    }

    /// `(∂_t p*, −Δp*)` at a point.
    pub fn adjoint_derivatives(&self, x: f64, y: f64, t: f64) -> (f64, f64) {
        let s = self.alpha * self.spatial(x, y);
        let (v, dv) = self.control_time(t);
        (dv * s, Self::EIGENVALUE * v * s)
    }

    /// Outward normal derivative of `y*` at a boundary point (zero for the
    /// Neumann example).
    pub fn normal_derivative(&self, x: f64, y: f64, t: f64) -> f64 {
        let g = self.state_time(t).0;
        let (sx, cx) = (PI * x).sin_cos();
        let (sy, cy) = (PI * y).sin_cos();
        let (dx, dy) = match self.example {
            Example::Sine => (PI * cx * sy, PI * sx * cy),
            Example::Cosine => (-PI * sx * cy, -PI * cx * sy),
        };
        let tol = 1e-14;
        let mut n = 0.0;
        if x.abs() < tol {
            n -= dx;
        }
        if (x - 1.0).abs() < tol {
            n += dx;
        }
        if y.abs() < tol {
            n -= dy;
        }
        if (y - 1.0).abs() < tol {
            n += dy;
        }
        g * n
    }

    /// Residuals of the state equation, adjoint equation and gradient
    /// condition at one space-time point.
    pub fn optimality_residuals(&self, x: f64, y: f64, t: f64) -> [f64; 3] {
        let (yt, ly) = self.state_derivatives(x, y, t);
        let (pt, lp) = self.adjoint_derivatives(x, y, t);
        let state = yt + ly - self.source(x, y, t) - self.u_star(x, y, t);
        let adjoint = -pt + lp - (self.desired_state(x, y, t) - self.y_star(x, y, t));
        let gradient = self.alpha * self.u_star(x, y, t) - self.p_star(x, y, t);
        [state, adjoint, gradient]
    }
}

impl ControlProblem for ManufacturedProblem {
    fn boundary_condition(&self) -> BoundaryCondition {
        match self.example {
            Example::Sine => BoundaryCondition::Dirichlet,
            Example::Cosine => BoundaryCondition::Neumann,
        }
    }

    fn horizon(&self) -> f64 {
        match self.example {
            Example::Sine => 2.0,
            Example::Cosine => 1.0,
        }
    }

    fn source(&self, x: f64, y: f64, t: f64) -> f64 {
        match self.example {
            Example::Sine => {
                let (s, c) = (PI * t).sin_cos();
                (2.0 * PI * PI * c - PI * s - s) * self.spatial(x, y)
            }
            Example::Cosine => 0.0,
        }
    }

    fn desired_state(&self, x: f64, y: f64, t: f64) -> f64 {
        let s = self.spatial(x, y);
        match self.example {
            Example::Sine => {
                let (sn, cs) = (PI * t).sin_cos();
                let a = self.alpha;
                (cs - a * PI * cs + 2.0 * a * PI * PI * sn) * s
            }
            Example::Cosine => {
                let c = &self.cosine.c;
                let tf = self.horizon();
                let omega_a = |tt: f64| (RATE * tt).exp();
                let omega_b = |tt: f64| (-RATE * tt).exp();
                (c[6] * omega_a(t)
                    + c[7] * omega_b(t)
                    + c[8] * omega_a(0.0)
                    + c[9] * omega_b(0.0)
                    + c[10] * omega_a(tf)
                    + c[11] * omega_b(tf))
                    * s
            }
        }
    }

    fn initial_state(&self, x: f64, y: f64) -> f64 {
        self.y_star(x, y, 0.0)
    }
}
