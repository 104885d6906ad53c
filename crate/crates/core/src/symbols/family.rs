//! Parameterized symbol families for sweeps.

use serde::{Deserialize, Serialize};

use super::{exp_convex, exp_staircase, half_plane, multilac_staircase, Side, Symbol};
use crate::error::Result;
use crate::lacunary::{generate_admissible, GeneratorOptions, TreeShape};
use crate::rational::Dyadic;
use crate::registry::{params, Registry};
use crate::signal::Grid;

/// A family `param -> m`, optionally randomized by a seed.
pub trait SymbolFamily: Send + Sync {
    fn name(&self) -> &'static str;
    fn build(&self, param: usize, seed: u64, grid: &Grid) -> Result<Symbol>;
    /// Period of the sweep grid with `n` samples when the largest parameter
    /// is `max_param`.
    fn sweep_period(&self, n: usize, max_param: usize) -> f64;
    /// Whether members depend on the seed.
    fn seeded(&self) -> bool {
        false
    }
}

/// Half band reaching `|xi| = 2^ceil(log2 J)`.
fn staircase_period(n: usize, max_param: usize) -> f64 {
    let reach = max_param.max(1).next_power_of_two() as f64;
    n as f64 / (4.0 * reach)
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitFamily {}

impl SymbolFamily for UnitFamily {
    fn name(&self) -> &'static str {
        "unit"
    }

    fn build(&self, _param: usize, _seed: u64, _grid: &Grid) -> Result<Symbol> {
        Ok(Symbol::unit())
    }

    fn sweep_period(&self, _n: usize, _max_param: usize) -> f64 {
        1.0
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpStaircaseFamily {}

impl SymbolFamily for ExpStaircaseFamily {
    fn name(&self) -> &'static str {
        "exp_staircase"
    }

    fn build(&self, param: usize, _seed: u64, _grid: &Grid) -> Result<Symbol> {
        Ok(exp_staircase(param)?.into())
    }

    fn sweep_period(&self, n: usize, max_param: usize) -> f64 {
        staircase_period(n, max_param)
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpConvexFamily {}

impl SymbolFamily for ExpConvexFamily {
    fn name(&self) -> &'static str {
        "exp_convex"
    }

    fn build(&self, param: usize, _seed: u64, grid: &Grid) -> Result<Symbol> {
        Ok(exp_convex(param, grid)?.into())
    }

    fn sweep_period(&self, n: usize, max_param: usize) -> f64 {
        staircase_period(n, max_param)
    }
}

fn two() -> usize {
    2
}

fn two_u32() -> u32 {
    2
}

/// Staircases over generated admissible sequences of length `param`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultilacFamily {
    #[serde(default = "two")]
    pub d: usize,
    #[serde(default = "two_u32")]
    pub b: u32,
    #[serde(default)]
    pub beta: Option<u8>,
    #[serde(default)]
    pub shape: TreeShape,
}

impl Default for MultilacFamily {
    fn default() -> Self {
        MultilacFamily { d: 2, b: 2, beta: None, shape: TreeShape::Random }
    }
}

impl SymbolFamily for MultilacFamily {
    fn name(&self) -> &'static str {
        "multilac"
    }

    fn build(&self, param: usize, seed: u64, _grid: &Grid) -> Result<Symbol> {
        let opts = GeneratorOptions { shape: self.shape, beta: self.beta, ..GeneratorOptions::default() };
        let seqs = generate_admissible(param, self.d, self.b, seed, &opts)?;
        Ok(multilac_staircase(&seqs)?.into())
    }

    /// The eta shells lie in `(0, 4)`; the half band covers them. Larger
    /// `xi_j` are cut at the band edge.
    fn sweep_period(&self, n: usize, _max_param: usize) -> f64 {
        n as f64 / 16.0
    }

    fn seeded(&self) -> bool {
        true
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfPlaneFamily {
    #[serde(default)]
    pub slope: Dyadic,
    #[serde(default)]
    pub offset: Dyadic,
    #[serde(default)]
    pub side: Side,
}

impl SymbolFamily for HalfPlaneFamily {
    fn name(&self) -> &'static str {
        "half_plane"
    }

    fn build(&self, _param: usize, _seed: u64, grid: &Grid) -> Result<Symbol> {
        Ok(half_plane(self.slope, self.offset, self.side, grid)?.into())
    }

    fn sweep_period(&self, _n: usize, _max_param: usize) -> f64 {
        1.0
    }
}

/// A fixed user-supplied symbol.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomFamily {
    pub symbol: Symbol,
    #[serde(default)]
    pub period: Option<f64>,
}

impl SymbolFamily for CustomFamily {
    fn name(&self) -> &'static str {
        "custom"
    }

    fn build(&self, _param: usize, _seed: u64, grid: &Grid) -> Result<Symbol> {
        if let Symbol::Grid(t) = &self.symbol {
            t.grid().same_as(grid)?;
        }
        Ok(self.symbol.clone())
    }

    fn sweep_period(&self, _n: usize, _max_param: usize) -> f64 {
        match (&self.symbol, self.period) {
            (_, Some(l)) => l,
            (Symbol::Grid(t), None) => t.grid().l(),
            _ => 1.0,
        }
    }
}

/// Families by name: `unit`, `exp_staircase`, `exp_convex`, `multilac`,
/// `half_plane`, `custom`.
pub fn family_registry() -> Registry<dyn SymbolFamily> {
    let mut r: Registry<dyn SymbolFamily> = Registry::new("symbol family");
    r.register("unit", |v| Ok(Box::new(params::<UnitFamily>(v)?)));
    r.register("exp_staircase", |v| Ok(Box::new(params::<ExpStaircaseFamily>(v)?)));
    r.register("exp_convex", |v| Ok(Box::new(params::<ExpConvexFamily>(v)?)));
    r.register("multilac", |v| Ok(Box::new(params::<MultilacFamily>(v)?)));
    r.register("half_plane", |v| Ok(Box::new(params::<HalfPlaneFamily>(v)?)));
    r.register("custom", |v| Ok(Box::new(params::<CustomFamily>(v)?)));
    r
}
