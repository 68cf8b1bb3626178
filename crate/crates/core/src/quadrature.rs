//! Symmetric triangle rules (Dunavant) and Gauss–Legendre rules on intervals.

/// Rule on the reference triangle in barycentric coordinates; weights sum to 1
/// and are multiplied by the element area by callers.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

fn orbit3(a: f64, w: f64, points: &mut Vec<[f64; 3]>, weights: &mut Vec<f64>) {
    let b = 1.0 - 2.0 * a;
    for p in [[b, a, a], [a, b, a], [a, a, b]] {
        points.push(p);
        weights.push(w);
    }
}

fn orbit6(a: f64, b: f64, w: f64, points: &mut Vec<[f64; 3]>, weights: &mut Vec<f64>) {
    let c = 1.0 - a - b;
    for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
        points.push(p);
        weights.push(w);
    }
}

impl QuadratureRule {
    /// Three interior points, exact for quadratics.
    pub fn degree2() -> Self {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        orbit3(1.0 / 6.0, 1.0 / 3.0, &mut points, &mut weights);
        QuadratureRule {
            points,
            weights,
            degree: 2,
        }
    }

    /// Six points, exact for quartics (cubes of P1 functions times P1 tests).
    pub fn degree4() -> Self {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        orbit3(0.445_948_490_915_965, 0.223_381_589_678_011, &mut points, &mut weights);
        orbit3(0.091_576_213_509_771, 0.109_951_743_655_322, &mut points, &mut weights);
        QuadratureRule {
            points,
            weights,
            degree: 4,
        }
    }

    /// Sixteen points, exact for degree 8.
    pub fn degree8() -> Self {
        let mut points = vec![[1.0 / 3.0; 3]];
        let mut weights = vec![0.144_315_607_677_787];
        orbit3(0.459_292_588_292_723, 0.095_091_634_267_285, &mut points, &mut weights);
        orbit3(0.170_569_307_751_760, 0.103_217_370_534_718, &mut points, &mut weights);
        orbit3(0.050_547_228_317_031, 0.032_458_497_623_198, &mut points, &mut weights);
        orbit6(
            0.008_394_777_409_958,
            0.263_112_829_634_638,
            0.027_230_314_174_435,
            &mut points,
            &mut weights,
        );
        QuadratureRule {
            points,
            weights,
            degree: 8,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 3], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]` (weights sum to 1).
pub fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    let (nodes, weights): (&[f64], &[f64]) = match n {
        1 => (&[0.0], &[2.0]),
        2 => {
            const X: f64 = 0.577_350_269_189_625_8;
            (&[-X, X], &[1.0, 1.0])
        }
        3 => {
            const X: f64 = 0.774_596_669_241_483_4;
            (&[-X, 0.0, X], &[5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        4 => (
            &[
                -0.861_136_311_594_052_6,
                -0.339_981_043_584_856_3,
                0.339_981_043_584_856_3,
                0.861_136_311_594_052_6,
            ],
            &[
                0.347_854_845_137_453_9,
                0.652_145_154_862_546_1,
                0.652_145_154_862_546_1,
                0.347_854_845_137_453_9,
            ],
        ),
        _ => panic!("Gauss-Legendre rule with {n} points is not tabulated"),
    };
    nodes
        .iter()
        .zip(weights)
        .map(|(&x, &w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Exact integral of `l0^a l1^b l2^c` over a triangle of unit area.
    fn monomial_exact(a: u32, b: u32, c: u32) -> f64 {
        2.0 * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2)
    }

    fn check_exactness(rule: &QuadratureRule) {
        assert!(rule.weights.iter().all(|&w| w > 0.0));
        assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        for a in 0..=rule.degree as u32 {
            for b in 0..=(rule.degree as u32 - a) {
                let c = rule.degree as u32 - a - b;
                for (a, b, c) in [(a, b, c), (a, b, 0), (a, 0, 0)] {
                    let q: f64 = rule
                        .iter()
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32))
                        .sum();
                    let e = monomial_exact(a, b, c);
                    assert!((q - e).abs() < 1e-14, "degree {} rule fails on ({a},{b},{c}): {q} vs {e}", rule.degree);
                }
            }
        }
    }

    #[test]
    fn triangle_rules_are_exact_to_their_degree() {
        check_exactness(&QuadratureRule::degree2());
        check_exactness(&QuadratureRule::degree4());
        check_exactness(&QuadratureRule::degree8());
    }

    #[test]
    fn degree4_rule_is_not_exact_for_degree6() {
        let rule = QuadratureRule::degree4();
        let q: f64 = rule.iter().map(|(p, w)| w * p[0].powi(6)).sum();
        assert!((q - monomial_exact(6, 0, 0)).abs() > 1e-6);
    }

    #[test]
    fn gauss_rules_integrate_polynomials() {
        for n in 1..=4 {
            let rule = gauss_legendre_unit(n);
            for p in 0..(2 * n) as i32 {
                let q: f64 = rule.iter().map(|(x, w)| w * x.powi(p)).sum();
                assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-15, "n={n}, p={p}");
            }
        }
    }
}
