//! Numerical integration on the reference triangle and on segments.
//!
//! Rules are exact for polynomials up to the requested degree. Up to degree
//! two a symmetric edge-midpoint rule is used; higher degrees collapse a
//! tensor Gauss-Legendre grid onto the triangle, which keeps the weights in
//! closed form for any degree.

use crate::error::Error;
use crate::Result;

/// Quadrature rule on the reference triangle with vertices (0,0), (1,0),
/// (0,1). Points are stored in barycentric coordinates; weights sum to the
/// reference area 1/2.
#[derive(Clone, Debug)]
pub struct TriQuadrature {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl TriQuadrature {
    /// Smallest tabulated rule exact for polynomials of total degree `degree`.
    pub fn for_degree(degree: usize) -> Result<TriQuadrature> {
        if degree <= 2 {
            // Edge midpoints, weight 1/6 each: the classical degree-2 rule.
            return Ok(TriQuadrature {
                points: vec![[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
                weights: vec![1.0 / 6.0; 3],
                degree: 2,
            });
        }
        // Collapsed tensor rule: map (u, v) in [0,1]^2 to (xi, eta) =
        // (u, v(1-u)); the Jacobian factor (1-u) raises the u-degree by one,
        // so n Gauss points handle total degree 2n - 2.
        let n = (degree + 2).div_ceil(2);
        let line = GaussLegendre::new(n)?;
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            let (u, wu) = (line.nodes01[i], line.weights01[i]);
            for j in 0..n {
                let (v, wv) = (line.nodes01[j], line.weights01[j]);
                let xi = u;
                let eta = v * (1.0 - u);
                points.push([1.0 - xi - eta, xi, eta]);
                weights.push(wu * wv * (1.0 - u));
            }
        }
        Ok(TriQuadrature { points, weights, degree: 2 * n - 2 })
    }
}

/// Gauss-Legendre nodes and weights rescaled to [0, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes01: Vec<f64>,
    pub weights01: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule, exact for degree `2n - 1`. Tabulated for n up to 8.
    pub fn new(n: usize) -> Result<GaussLegendre> {
        // Nodes x and weights w on [-1, 1]; only the non-negative nodes are
        // listed, the rest follow by symmetry.
        let half: &[(f64, f64)] = match n {
            1 => &[(0.0, 2.0)],
            2 => &[(0.577_350_269_189_625_8, 1.0)],
            3 => &[
                (0.0, 0.888_888_888_888_888_9),
                (0.774_596_669_241_483_4, 0.555_555_555_555_555_6),
            ],
            4 => &[
                (0.339_981_043_584_856_26, 0.652_145_154_862_546_1),
                (0.861_136_311_594_052_6, 0.347_854_845_137_453_86),
            ],
            5 => &[
                (0.0, 0.568_888_888_888_888_9),
                (0.538_469_310_105_683_1, 0.478_628_670_499_366_47),
                (0.906_179_845_938_664, 0.236_926_885_056_189_08),
            ],
            6 => &[
                (0.238_619_186_083_196_9, 0.467_913_934_572_691_05),
                (0.661_209_386_466_264_5, 0.360_761_573_048_138_6),
                (0.932_469_514_203_152, 0.171_324_492_379_170_35),
            ],
            7 => &[
                (0.0, 0.417_959_183_673_469_4),
                (0.405_845_151_377_397_17, 0.381_830_050_505_118_94),
                (0.741_531_185_599_394_4, 0.279_705_391_489_276_7),
                (0.949_107_912_342_758_5, 0.129_484_966_168_869_7),
            ],
            8 => &[
                (0.183_434_642_495_649_8, 0.362_683_783_378_362,),
                (0.525_532_409_916_329, 0.313_706_645_877_887_3),
                (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
                (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
            ],
            _ => {
                return Err(Error::UnsupportedDegree(2 * n - 1));
            }
        };
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
        for &(x, w) in half {
            if x == 0.0 {
                pairs.push((0.0, w));
            } else {
                pairs.push((-x, w));
                pairs.push((x, w));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(GaussLegendre {
            nodes01: pairs.iter().map(|&(x, _)| 0.5 * (x + 1.0)).collect(),
            weights01: pairs.iter().map(|&(_, w)| 0.5 * w).collect(),
        })
    }
}
