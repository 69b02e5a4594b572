//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use std::cell::RefCell;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights for the odd-position Kronrod nodes 1, 3, 5 and the centre.
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const MAX_INTERVALS: usize = 20_000;

#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Estimate {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut vals = [(0.0, 0.0); 7];
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    let mut resabs = WGK[7] * fc.abs();
    for i in 0..7 {
        let dx = h * XGK[i];
        let (f1, f2) = (f(c - dx), f(c + dx));
        vals[i] = (f1, f2);
        k += WGK[i] * (f1 + f2);
        resabs += WGK[i] * (f1.abs() + f2.abs());
        if i % 2 == 1 {
            g += WG[i / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * k;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for i in 0..7 {
        resasc += WGK[i] * ((vals[i].0 - mean).abs() + (vals[i].1 - mean).abs());
    }
    let h = h.abs();
    let (resabs, resasc) = (resabs * h, resasc * h);
    // Error scaling used by QUADPACK's qk15.
    let mut err = ((k - g) * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Estimate { value: k * h, error: err }
}

struct Part {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Part {
    fn eq(&self, o: &Self) -> bool {
        self.est.error == o.est.error
    }
}
impl Eq for Part {}
impl PartialOrd for Part {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Part {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.est.error.total_cmp(&o.est.error)
    }
}

/// Integrates `f` over [a, b] to absolute tolerance `tol`, bisecting the
/// interval with the largest error estimate first.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<Estimate> {
    integrate_breaks(&mut f, &[a, b], tol)
}

/// Like [`integrate`] but starts from the partition given by `breaks`
/// (sorted, at least two points), useful when `f` has known kinks.
pub fn integrate_breaks<F: FnMut(f64) -> f64>(f: &mut F, breaks: &[f64], tol: f64) -> Result<Estimate> {
    integrate_tol(f, breaks, tol, 0.0)
}

/// Adaptive integration stopping once the error estimate is below
/// max(abs_tol, rel_tol · |value|).
pub fn integrate_tol<F: FnMut(f64) -> f64>(f: &mut F, breaks: &[f64], abs_tol: f64, rel_tol: f64) -> Result<Estimate> {
    if breaks.len() < 2 {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let mut heap: BinaryHeap<Part> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| Part {
            a: w[0],
            b: w[1],
            est: gk15(f, w[0], w[1]),
        })
        .collect();
    let mut total_err: f64 = heap.iter().map(|p| p.est.error).sum();
    let mut total_val: f64 = heap.iter().map(|p| p.est.value).sum();
    let tol = |v: f64| abs_tol.max(rel_tol * v.abs());
    while total_err > tol(total_val) {
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::QuadratureNonConvergence {
                a: breaks[0],
                b: *breaks.last().unwrap(),
                err: total_err,
            });
        }
        let worst = heap.pop().expect("nonempty");
        let m = 0.5 * (worst.a + worst.b);
        if !(m > worst.a && m < worst.b) {
            return Err(Error::QuadratureNonConvergence {
                a: worst.a,
                b: worst.b,
                err: total_err,
            });
        }
        let left = Part { a: worst.a, b: m, est: gk15(f, worst.a, m) };
        let right = Part { a: m, b: worst.b, est: gk15(f, m, worst.b) };
        total_err += left.est.error + right.est.error - worst.est.error;
        total_val += left.est.value + right.est.value - worst.est.value;
        heap.push(left);
        heap.push(right);
        if total_err <= tol(total_val) {
            // Guard against drift in the running sums.
            total_err = heap.iter().map(|p| p.est.error).sum();
            total_val = heap.iter().map(|p| p.est.value).sum();
        }
    }
    // Sum in position order so the result does not depend on refinement history.
    let mut parts = heap.into_vec();
    parts.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(Estimate {
        value: parts.iter().map(|p| p.est.value).sum(),
        error: parts.iter().map(|p| p.est.error).sum(),
    })
}

/// Iterated adaptive integration over [0,1]^d with the same breakpoints on
/// every axis. The inner tolerance is tightened so that the outer error
/// estimate stays meaningful.
pub fn integrate_cube<F: Fn(&[f64]) -> f64>(f: F, d: usize, breaks: &[f64], tol: f64) -> Result<f64> {
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let mut x = vec![0.0; d];
    let v = nested(&f, d, 0, &mut x, breaks, tol, &failure);
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

fn nested<F: Fn(&[f64]) -> f64>(
    f: &F,
    d: usize,
    axis: usize,
    x: &mut Vec<f64>,
    breaks: &[f64],
    tol: f64,
    failure: &RefCell<Option<Error>>,
) -> f64 {
    if failure.borrow().is_some() {
        return 0.0;
    }
    if axis + 1 == d {
        let mut g = |t: f64| {
            x[axis] = t;
            f(x)
        };
        return match integrate_breaks(&mut g, breaks, tol) {
            Ok(e) => e.value,
            Err(e) => {
                failure.borrow_mut().replace(e);
                0.0
            }
        };
    }
    let inner_tol = tol * 0.1;
    let mut xs = x.clone();
    let mut g = |t: f64| {
        xs[axis] = t;
        nested(f, d, axis + 1, &mut xs, breaks, inner_tol, failure)
    };
    match integrate_breaks(&mut g, breaks, tol) {
        Ok(e) => e.value,
        Err(e) => {
            failure.borrow_mut().replace(e);
            0.0
        }
    }
}
