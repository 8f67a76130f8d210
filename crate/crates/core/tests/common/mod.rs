#![allow(dead_code)]

use std::collections::BTreeMap;

use blendopt::model::{
    Bracket, BiomassType, ProblemInstance, RefinerySpec, Supplier, SupplyCurve, TriangularParams, UniformParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub struct Dims {
    pub suppliers: usize,
    pub biomass: usize,
    pub brackets: usize,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_curve(rng: &mut impl Rng, brackets: usize) -> SupplyCurve {
    let mut lower = 0.0;
    let mut price = rng.gen_range(5.0..30.0f64).round();
    let mut out = Vec::with_capacity(brackets);
    for _ in 0..brackets {
        let upper = lower + rng.gen_range(10..200) as f64;
        out.push(Bracket { lower, upper, price });
        lower = upper;
        price += rng.gen_range(1..10) as f64;
    }
    SupplyCurve::new(out).unwrap()
}

pub fn random_biomass(rng: &mut impl Rng, id: String) -> BiomassType {
    let min = rng.gen_range(0.2..1.2f64);
    let mode = min + rng.gen_range(0.0..0.4);
    let max = mode + rng.gen_range(0.05..0.6);
    let low = rng.gen_range(10.0..17.0f64);
    BiomassType {
        id,
        ash: TriangularParams::new(min, mode, max).unwrap(),
        heat: UniformParams::new(low, low + rng.gen_range(0.0..3.0)).unwrap(),
        efficiency: rng.gen_range(0.7..1.0),
        harvest_collection: 0.0,
        processing: rng.gen_range(0.0..10.0f64).round(),
        storage: rng.gen_range(0.0..3.0f64).round(),
        transport_fixed: rng.gen_range(0.0..5.0f64).round(),
        transport_variable: 0.05,
        harvest_cost: None,
    }
}

/// A random instance whose thermal requirement is a fraction of what the
/// whole supply could deliver at the lowest heating values.
pub fn random_instance(seed: u64, dims: Dims, risk: f64, inner_risk: f64) -> ProblemInstance {
    let mut rng = rng(seed);
    let biomass: Vec<BiomassType> = (0..dims.biomass).map(|b| random_biomass(&mut rng, format!("b{b}"))).collect();
    let mut capacity = 0.0;
    let suppliers: Vec<Supplier> = (0..dims.suppliers)
        .map(|i| {
            let mut curves = BTreeMap::new();
            for bt in &biomass {
                let c = random_curve(&mut rng, dims.brackets);
                capacity += c.availability() * bt.efficiency * bt.heat.low;
                curves.insert(bt.id.clone(), c);
            }
            Supplier { id: format!("s{i}"), coords: None, distance: rng.gen_range(0.0..100.0f64).round(), curves }
        })
        .collect();
    let refinery = RefinerySpec {
        ash_limit: 1.0,
        thermal_requirement: (capacity * rng.gen_range(0.1..0.6)).round().max(1.0),
        risk_ash: risk,
        risk_thermal: risk,
        inner_risk_ash: inner_risk,
        inner_risk_thermal: inner_risk,
    };
    ProblemInstance::new(suppliers, biomass, refinery).unwrap()
}

pub fn random_prices(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.0..60.0)).collect()
}
