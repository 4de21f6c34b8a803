//! Continuous climbing games built by bilinear interpolation of a 3x3 payoff
//! table whose nodes sit at `{0, 0.5, 1}` on each axis.

use super::{Environment, StateId, Transition};
use crate::error::{Error, Result};
use crate::primitives::RandomSource;

/// Row index = agent 1's node, column index = agent 2's node.
pub type Grid3 = [[f64; 3]; 3];

const CLIMBING: Grid3 = [
    [11.0, -30.0, 0.0], //
    [-30.0, 7.0, 6.0],
    [0.0, 0.0, 5.0],
];

const CLIMBING_HIGH: Grid3 = [
    [11.0, -30.0, 0.0], //
    [-30.0, 14.0, 6.0],
    [0.0, 0.0, 5.0],
];

const CLIMBING_LOW: Grid3 = [
    [11.0, -30.0, 0.0], //
    [-30.0, 0.0, 6.0],
    [0.0, 0.0, 5.0],
];

/// Bilinear interpolation of `grid` at `(a1, a2)`.
pub fn bilinear_eval(grid: &Grid3, a1: f64, a2: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a1) || !(0.0..=1.0).contains(&a2) {
        return Err(Error::Usage(format!("action ({a1}, {a2}) outside [0,1]^2")));
    }
    Ok(bilinear_unchecked(grid, a1, a2))
}

#[inline]
fn cell(a: f64) -> (usize, f64) {
    if a >= 0.5 {
        (1, (a - 0.5) * 2.0)
    } else {
        (0, a * 2.0)
    }
}

#[inline]
fn bilinear_unchecked(grid: &Grid3, a1: f64, a2: f64) -> f64 {
    let (i, u) = cell(a1);
    let (j, v) = cell(a2);
    let f00 = grid[i][j];
    let f10 = grid[i + 1][j];
    let f01 = grid[i][j + 1];
    let f11 = grid[i + 1][j + 1];
    (1.0 - u) * (1.0 - v) * f00 + u * (1.0 - v) * f10 + (1.0 - u) * v * f01 + u * v * f11
}

/// One deterministic grid, or two grids chosen by a fair coin each round.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGameSpec {
    grids: Vec<Grid3>,
}

impl MatrixGameSpec {
    pub fn climbing() -> Self {
        MatrixGameSpec {
            grids: vec![CLIMBING],
        }
    }

    pub fn partially_stochastic_climbing() -> Self {
        MatrixGameSpec {
            grids: vec![CLIMBING_HIGH, CLIMBING_LOW],
        }
    }

    pub fn custom(grid: Grid3, alternative: Option<Grid3>) -> Result<Self> {
        let mut grids = vec![grid];
        grids.extend(alternative);
        if grids.iter().flatten().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config(
                "payoff grid contains non-finite values".into(),
            ));
        }
        Ok(MatrixGameSpec { grids })
    }

    pub fn grids(&self) -> &[Grid3] {
        &self.grids
    }

    pub fn is_stochastic(&self) -> bool {
        self.grids.len() > 1
    }

    /// Expected reward of a joint action.
    pub fn expected(&self, a1: f64, a2: f64) -> Result<f64> {
        let mut sum = 0.0;
        for g in &self.grids {
            sum += bilinear_eval(g, a1, a2)?;
        }
        Ok(sum / self.grids.len() as f64)
    }

    /// Samples one reward. Stochastic games flip a fair coin between grids.
    pub fn sample(&self, a1: f64, a2: f64, rng: &mut RandomSource) -> Result<f64> {
        let grid = if self.is_stochastic() {
            &self.grids[usize::from(!rng.chance(0.5))]
        } else {
            &self.grids[0]
        };
        bilinear_eval(grid, a1, a2)
    }

    pub fn step(&self, a1: f64, a2: f64, rng: &mut RandomSource) -> Result<Transition> {
        Ok(Transition {
            next: StateId::SINGLE,
            reward: self.sample(a1, a2, rng)?,
            terminal: true,
        })
    }
}

/// Expected-reward map sampled on a uniform `resolution x resolution` lattice
/// over `[0,1]^2`. Row `i` is agent 1's action `i / (resolution - 1)`.
pub fn colormap_grid(spec: &MatrixGameSpec, resolution: usize) -> Result<Vec<Vec<f64>>> {
    if resolution < 2 {
        return Err(Error::Usage(format!(
            "colormap resolution must be at least 2, got {resolution}"
        )));
    }
    let step = 1.0 / (resolution - 1) as f64;
    let coord = |k: usize| {
        if k == resolution - 1 {
            1.0
        } else {
            k as f64 * step
        }
    };
    (0..resolution)
        .map(|i| {
            (0..resolution)
                .map(|j| spec.expected(coord(i), coord(j)))
                .collect()
        })
        .collect()
}

/// A repeated single-state two-player game.
#[derive(Debug, Clone)]
pub struct MatrixGame {
    spec: MatrixGameSpec,
}

impl MatrixGame {
    pub fn new(spec: MatrixGameSpec) -> Self {
        MatrixGame { spec }
    }

    pub fn spec(&self) -> &MatrixGameSpec {
        &self.spec
    }
}

impl Environment for MatrixGame {
    fn reset(&mut self) -> StateId {
        StateId::SINGLE
    }

    fn step(&mut self, actions: &[f64], rng: &mut RandomSource) -> Result<Transition> {
        match actions {
            [a1, a2] => self.spec.step(*a1, *a2, rng),
            _ => Err(Error::Usage(format!(
                "matrix game expects 2 action components, got {}",
                actions.len()
            ))),
        }
    }

    fn action_dims(&self) -> usize {
        2
    }

    fn is_single_state(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const NODES: [f64; 3] = [0.0, 0.5, 1.0];

    #[test]
    fn climbing_examples() {
        let g = &MatrixGameSpec::climbing().grids[0];
        assert_eq!(bilinear_eval(g, 0.0, 0.0).unwrap(), 11.0);
        assert!((bilinear_eval(g, 0.25, 0.25).unwrap() - (-10.5)).abs() < 1e-12);
        assert!((bilinear_eval(g, 0.1, 0.0).unwrap() - 2.8).abs() < 1e-12);
        assert_eq!(bilinear_eval(g, 0.5, 0.5).unwrap(), 7.0);
    }

    #[test]
    fn exact_at_nodes() {
        for spec in [
            MatrixGameSpec::climbing(),
            MatrixGameSpec::partially_stochastic_climbing(),
        ] {
            for g in spec.grids() {
                for (i, &a1) in NODES.iter().enumerate() {
                    for (j, &a2) in NODES.iter().enumerate() {
                        assert_eq!(bilinear_eval(g, a1, a2).unwrap(), g[i][j]);
                    }
                }
            }
        }
    }

    #[test]
    fn out_of_range_is_usage_error() {
        let g = &CLIMBING;
        assert!(matches!(bilinear_eval(g, -0.01, 0.0), Err(Error::Usage(_))));
        assert!(matches!(bilinear_eval(g, 0.0, 1.01), Err(Error::Usage(_))));
        assert!(bilinear_eval(g, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn stochastic_grids_differ_only_at_center() {
        let spec = MatrixGameSpec::partially_stochastic_climbing();
        let [hi, lo] = [spec.grids[0], spec.grids[1]];
        for i in 0..3 {
            for j in 0..3 {
                if (i, j) == (1, 1) {
                    assert_eq!((hi[i][j], lo[i][j]), (14.0, 0.0));
                } else {
                    assert_eq!(hi[i][j], lo[i][j]);
                }
            }
        }
    }

    #[test]
    fn matrix_step_examples() {
        let mut rng = RandomSource::new(3, "test");
        let cg = MatrixGameSpec::climbing();
        let t = cg.step(0.0, 0.0, &mut rng).unwrap();
        assert_eq!(t.reward, 11.0);
        assert!(t.terminal);

        let pscg = MatrixGameSpec::partially_stochastic_climbing();
        let mut high = 0;
        let n = 20_000;
        for _ in 0..n {
            let r = pscg.step(0.5, 0.5, &mut rng).unwrap().reward;
            assert!(r == 14.0 || r == 0.0);
            high += usize::from(r == 14.0);
            assert_eq!(pscg.step(0.0, 0.0, &mut rng).unwrap().reward, 11.0);
        }
        let p = high as f64 / n as f64;
        assert!((p - 0.5).abs() < 0.02, "p = {p}");
    }

    #[test]
    fn colormap_examples() {
        let cg = MatrixGameSpec::climbing();
        let m = colormap_grid(&cg, 3).unwrap();
        assert_eq!(m, CLIMBING.iter().map(|r| r.to_vec()).collect::<Vec<_>>());

        let m2 = colormap_grid(&cg, 2).unwrap();
        assert_eq!(m2, vec![vec![11.0, 0.0], vec![0.0, 5.0]]);

        let ps = colormap_grid(&MatrixGameSpec::partially_stochastic_climbing(), 3).unwrap();
        assert_eq!(ps[1][1], 7.0);
        assert!(colormap_grid(&cg, 1).is_err());
    }

    proptest! {
        #[test]
        fn linear_along_grid_lines(line in 0usize..3, seg in 0usize..2, t in 0f64..=1.0, horizontal: bool) {
            let g = &CLIMBING;
            let fixed = NODES[line];
            let (p, q) = (NODES[seg], NODES[seg + 1]);
            let x = (1.0 - t) * p + t * q;
            let (val, vp, vq) = if horizontal {
                (bilinear_eval(g, fixed, x).unwrap(), g[line][seg], g[line][seg + 1])
            } else {
                (bilinear_eval(g, x, fixed).unwrap(), g[seg][line], g[seg + 1][line])
            };
            prop_assert!((val - ((1.0 - t) * vp + t * vq)).abs() < 1e-9);
        }

        #[test]
        fn bounded_by_enclosing_corners(a1 in 0f64..=1.0, a2 in 0f64..=1.0) {
            for g in MatrixGameSpec::partially_stochastic_climbing().grids() {
                let (i, _) = cell(a1);
                let (j, _) = cell(a2);
                let corners = [g[i][j], g[i + 1][j], g[i][j + 1], g[i + 1][j + 1]];
                let lo = corners.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = corners.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let v = bilinear_eval(g, a1, a2).unwrap();
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }
}
