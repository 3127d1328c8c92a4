//! One-dimensional golden-section search and a box-constrained Nelder-Mead.

use crate::error::Result;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineMax {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Maximizes `f` on `[a, b]` until the bracket is narrower than `tol`.
/// The returned point is the best evaluated one.
pub fn golden_section_max<F>(f: F, a: f64, b: f64, tol: f64) -> Result<LineMax>
where
    F: Fn(f64) -> Result<f64>,
{
    let (mut a, mut b) = if a <= b { (a, b) } else { (b, a) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut iterations = 0;
    while b - a > tol && iterations < 200 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        iterations += 1;
    }
    let (x, value) = if fc >= fd { (c, fc) } else { (d, fd) };
    Ok(LineMax {
        x,
        value,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Initial simplex edge, per coordinate, as a fraction of the box width.
    pub initial_step: f64,
    /// Stop once every vertex is within `xtol` (sup norm) of the best.
    pub xtol: f64,
    pub max_evaluations: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            xtol: 1e-10,
            max_evaluations: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Sup-norm distance from the best vertex to the farthest one.
    pub simplex_size: f64,
}

struct Vertex {
    x: Vec<f64>,
    f: f64,
}

/// Minimizes `f` over the box `bounds` starting from `x0`. Trial points are
/// projected onto the box.
pub fn nelder_mead<F>(
    f: F,
    x0: &[f64],
    bounds: &[(f64, f64)],
    opts: &NelderMeadOptions,
) -> Result<NelderMeadResult>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    assert_eq!(x0.len(), bounds.len());
    let dim = x0.len();
    let project = |x: &mut Vec<f64>| {
        for (xi, (lo, hi)) in x.iter_mut().zip(bounds) {
            *xi = xi.clamp(*lo, *hi);
        }
    };
    let evaluations = std::cell::Cell::new(0usize);
    let eval = |x: Vec<f64>| -> Result<Vertex> {
        evaluations.set(evaluations.get() + 1);
        let fx = f(&x)?;
        Ok(Vertex {
            f: if fx.is_nan() { f64::INFINITY } else { fx },
            x,
        })
    };

    let mut start = x0.to_vec();
    project(&mut start);
    let mut simplex = vec![eval(start.clone())?];
    for i in 0..dim {
        let (lo, hi) = bounds[i];
        let step = opts.initial_step * (hi - lo);
        let mut x = start.clone();
        // Step inward when the start sits on the upper bound.
        x[i] = if x[i] + step <= hi { x[i] + step } else { x[i] - step };
        simplex.push(eval(x)?);
    }

    let mut iterations = 0;
    loop {
        simplex.sort_by(|a, b| a.f.total_cmp(&b.f).then_with(|| lex_cmp(&a.x, &b.x)));
        let size = simplex_size(&simplex);
        if size < opts.xtol || evaluations.get() >= opts.max_evaluations {
            let best = &simplex[0];
            return Ok(NelderMeadResult {
                x: best.x.clone(),
                value: best.f,
                iterations,
                evaluations: evaluations.get(),
                simplex_size: size,
            });
        }
        iterations += 1;

        let worst = dim;
        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..worst].iter().map(|v| v.x[j]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            let mut x: Vec<f64> = centroid
                .iter()
                .zip(&simplex[worst].x)
                .map(|(c, w)| c + t * (c - w))
                .collect();
            project(&mut x);
            x
        };

        let reflected = eval(along(1.0))?;
        if reflected.f < simplex[0].f {
            let expanded = eval(along(2.0))?;
            simplex[worst] = if expanded.f < reflected.f { expanded } else { reflected };
            continue;
        }
        if reflected.f < simplex[worst - 1].f {
            simplex[worst] = reflected;
            continue;
        }
        let contracted = if reflected.f < simplex[worst].f {
            eval(along(0.5))?
        } else {
            eval(along(-0.5))?
        };
        if contracted.f < reflected.f.min(simplex[worst].f) {
            simplex[worst] = contracted;
            continue;
        }
        // Shrink toward the best vertex.
        let best = simplex[0].x.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = best
                .iter()
                .zip(&vertex.x)
                .map(|(b, v)| b + 0.5 * (v - b))
                .collect();
            *vertex = eval(x)?;
        }
    }
}

fn simplex_size(simplex: &[Vertex]) -> f64 {
    let best = &simplex[0].x;
    simplex[1..]
        .iter()
        .flat_map(|v| v.x.iter().zip(best).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn golden_finds_interior_maximum() {
        let r = golden_section_max(|x| Ok(-(x - 0.3f64).powi(2) + 2.0), -1.0, 2.0, 1e-9).unwrap();
        assert_abs_diff_eq!(r.x, 0.3, epsilon = 1e-7);
        assert_abs_diff_eq!(r.value, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn golden_approaches_boundary_maximum() {
        let r = golden_section_max(Ok, 0.0, 1.0, 1e-8).unwrap();
        assert!(r.x > 1.0 - 1e-8);
    }

    #[test]
    fn golden_propagates_errors() {
        let r = golden_section_max(
            |_| Err(crate::error::Error::InvalidArgument("boom".into())),
            0.0,
            1.0,
            1e-3,
        );
        assert!(r.is_err());
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let rosen = |x: &[f64]| Ok((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
        let r = nelder_mead(
            rosen,
            &[-1.2, 1.0],
            &[(-5.0, 5.0), (-5.0, 5.0)],
            &NelderMeadOptions::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(r.x[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.x[1], 1.0, epsilon = 1e-6);
        assert!(r.simplex_size < 1e-10);
    }

    #[test]
    fn nelder_mead_respects_bounds() {
        let r = nelder_mead(
            |x: &[f64]| Ok((x[0] - 3.0).powi(2) + (x[1] + 4.0).powi(2)),
            &[0.0, 0.0],
            &[(-1.0, 1.0), (-1.0, 1.0)],
            &NelderMeadOptions::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(r.x[0], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(r.x[1], -1.0, epsilon = 1e-8);
    }

    #[test]
    fn nelder_mead_one_dimensional_kink() {
        let r = nelder_mead(
            |x: &[f64]| Ok((x[0] - 0.25).abs()),
            &[0.9],
            &[(-1.0, 1.0)],
            &NelderMeadOptions::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(r.x[0], 0.25, epsilon = 1e-9);
    }
}
