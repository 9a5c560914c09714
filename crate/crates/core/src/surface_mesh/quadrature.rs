//! Quadrature rules on the reference segment and triangle.
//!
//! Points are barycentric and weights sum to one, so an integral over an
//! element is `measure * sum(w * f(point))`.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    /// Exact for quadratics: P1 x P1 products.
    Quadratic,
    /// Exact for quartics on triangles, quintics on segments.
    Quartic,
}

#[derive(Clone, Copy, Debug)]
pub struct QuadPoint<const D: usize> {
    pub local: [f64; D],
    pub weight: f64,
}

pub fn rule<const D: usize>(rule: Rule) -> Vec<QuadPoint<D>> {
    match D {
        2 => segment(rule)
            .into_iter()
            .map(|(s, w)| QuadPoint {
                local: std::array::from_fn(|a| if a == 0 { 1.0 - s } else { s }),
                weight: w,
            })
            .collect(),
        3 => triangle(rule)
            .into_iter()
            .map(|(l, w)| QuadPoint {
                local: std::array::from_fn(|a| l[a]),
                weight: w,
            })
            .collect(),
        _ => unreachable!("interface meshes are 2D or 3D"),
    }
}

fn segment(rule: Rule) -> Vec<(f64, f64)> {
    match rule {
        Rule::Quadratic => {
            let d = 0.5 / 3f64.sqrt();
            vec![(0.5 - d, 0.5), (0.5 + d, 0.5)]
        }
        Rule::Quartic => {
            let d = 0.5 * 0.6f64.sqrt();
            vec![(0.5 - d, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
        }
    }
}

fn triangle(rule: Rule) -> Vec<([f64; 3], f64)> {
    fn orbit(a: f64, w: f64, out: &mut Vec<([f64; 3], f64)>) {
        let b = 1.0 - 2.0 * a;
        out.push(([b, a, a], w));
        out.push(([a, b, a], w));
        out.push(([a, a, b], w));
    }
    let mut pts = Vec::new();
    match rule {
        Rule::Quadratic => orbit(1.0 / 6.0, 1.0 / 3.0, &mut pts),
        Rule::Quartic => {
            orbit(0.445948490915965, 0.223381589678011, &mut pts);
            orbit(0.091576213509771, 0.109951743655322, &mut pts);
        }
    }
    pts
}
