//! Fixed-step classical Runge-Kutta integration with compensated summation.

/// Right-hand side `dy = f(y)` of an autonomous system. Returns `false` when the
/// state has left the domain of the vector field.
pub trait System {
    fn dim(&self) -> usize;
    fn rhs(&mut self, y: &[f64], dy: &mut [f64]) -> bool;
}

/// Reusable stage buffers.
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
    comp: Vec<f64>,
}

/// Why an integration stopped before its final step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Halt {
    Completed,
    /// Left the domain during step `k` (state is the last valid one).
    Domain(usize),
    /// Observer asked to stop after step `k`.
    Observer(usize),
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Rk4 {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
            comp: vec![0.0; dim],
        }
    }

    /// Advance `y` by `steps` steps of size `h`. `observe(k, y)` is called after
    /// every completed step `k` (1-based) and may return `false` to stop.
    pub fn run<S: System, F: FnMut(usize, &[f64]) -> bool>(
        &mut self,
        sys: &mut S,
        y: &mut [f64],
        h: f64,
        steps: usize,
        mut observe: F,
    ) -> Halt {
        let n = y.len();
        self.comp.iter_mut().for_each(|c| *c = 0.0);
        for step in 1..=steps {
            if !sys.rhs(y, &mut self.k1) {
                return Halt::Domain(step);
            }
            for i in 0..n {
                self.tmp[i] = y[i] + 0.5 * h * self.k1[i];
            }
            if !sys.rhs(&self.tmp, &mut self.k2) {
                return Halt::Domain(step);
            }
            for i in 0..n {
                self.tmp[i] = y[i] + 0.5 * h * self.k2[i];
            }
            if !sys.rhs(&self.tmp, &mut self.k3) {
                return Halt::Domain(step);
            }
            for i in 0..n {
                self.tmp[i] = y[i] + h * self.k3[i];
            }
            if !sys.rhs(&self.tmp, &mut self.k4) {
                return Halt::Domain(step);
            }
            for i in 0..n {
                let inc = h / 6.0 * (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]);
                // Kahan update of y[i] += inc
                let adj = inc - self.comp[i];
                let t = y[i] + adj;
                self.comp[i] = (t - y[i]) - adj;
                y[i] = t;
            }
            if !observe(step, y) {
                return Halt::Observer(step);
            }
        }
        Halt::Completed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Oscillator;
    impl System for Oscillator {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&mut self, y: &[f64], dy: &mut [f64]) -> bool {
            dy[0] = y[1];
            dy[1] = -y[0];
            true
        }
    }

    #[test]
    fn harmonic_oscillator_fourth_order() {
        let mut errs = Vec::new();
        for &n in &[100usize, 200] {
            let mut y = vec![0.0, 1.0];
            let h = 1.0 / n as f64;
            Rk4::new(2).run(&mut Oscillator, &mut y, h, n, |_, _| true);
            errs.push((y[0] - 1f64.sin()).abs());
        }
        let order = (errs[0] / errs[1]).log2();
        assert!((order - 4.0).abs() < 0.2, "observed order {order}");
    }

    #[test]
    fn observer_can_stop() {
        let mut y = vec![0.0, 1.0];
        let halt = Rk4::new(2).run(&mut Oscillator, &mut y, 0.1, 10, |k, _| k < 3);
        assert_eq!(halt, Halt::Observer(3));
    }
}
