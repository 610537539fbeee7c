use std::f64::consts::PI;

/// Deterministic quasi-uniform directions on the unit sphere of `R^dim`, one
/// per antipodal pair, always including the coordinate axes.
pub fn sphere_directions(dim: usize, n: usize) -> Vec<Vec<f64>> {
    let n = n.max(dim).max(1);
    let mut out: Vec<Vec<f64>> = match dim {
        0 => return Vec::new(),
        1 => vec![vec![1.0]],
        2 => {
            let n = n + n % 2;
            (0..n)
                .map(|k| {
                    let th = PI * k as f64 / n as f64;
                    vec![th.cos(), th.sin()]
                })
                .collect()
        }
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|i| {
                    let z = (i as f64 + 0.5) / n as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let phi = golden * i as f64;
                    vec![rho * phi.cos(), rho * phi.sin(), z]
                })
                .collect()
        }
        _ => cube_surface(dim, n),
    };
    for k in 0..dim {
        let mut e = vec![0.0; dim];
        e[k] = 1.0;
        if !out.iter().any(|x| same_line(x, &e)) {
            out.push(e);
        }
    }
    out
}

fn same_line(x: &[f64], y: &[f64]) -> bool {
    let d: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    (d.abs() - 1.0).abs() < 1e-12
}

// Lattice on the faces x_k = 1 of the cube, normalised. Covers every
// direction up to sign.
fn cube_surface(dim: usize, n: usize) -> Vec<Vec<f64>> {
    let per_face = (n as f64 / dim as f64).max(1.0);
    let m = (per_face.powf(1.0 / (dim - 1) as f64).ceil() as usize).max(2);
    let count = m.pow((dim - 1) as u32);
    let mut out = Vec::new();
    for face in 0..dim {
        for code in 0..count {
            let mut rest = code;
            let p: Vec<f64> = (0..dim)
                .map(|k| {
                    if k == face {
                        1.0
                    } else {
                        let i = rest % m;
                        rest /= m;
                        -1.0 + 2.0 * i as f64 / (m - 1) as f64
                    }
                })
                .collect();
            // each line once: skip points already on a lower-indexed face
            if (0..face).any(|k| p[k].abs() >= 1.0 - 1e-12) {
                continue;
            }
            let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            out.push(p.iter().map(|v| v / r).collect());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions_are_unit_and_contain_axes() {
        for dim in 1..=5 {
            let dirs = sphere_directions(dim, 40);
            assert!(dirs.len() >= dim);
            for x in &dirs {
                let r: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!((r - 1.0).abs() < 1e-12);
            }
            for k in 0..dim {
                assert!(dirs.iter().any(|x| (x[k] - 1.0).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn planar_grid_hits_the_vertical() {
        let dirs = sphere_directions(2, 7);
        assert_eq!(dirs.len(), 8);
        assert!(dirs.iter().any(|x| x[0].abs() < 1e-12));
    }
}
