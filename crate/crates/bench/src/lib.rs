//! Fixtures shared by the benches in `benches/`.

use swanlab_core::{mono, parse_component, Ambient, LaurentElement, NablaModule, Result, SurfaceModel};

/// `dwork(sum of x^a t^b)` in two variables.
pub fn dwork2(p: u32, exps: &[(i64, i64)]) -> Result<NablaModule> {
    let f = exps.iter().fold(LaurentElement::zero(p, 2), |acc, &(a, b)| acc + mono(p, &[a, b]));
    NablaModule::dwork(f)
}

/// Rank-4 tensor of two rank-2 sums.
pub fn rank_four(p: u32) -> Result<NablaModule> {
    let a = NablaModule::direct_sum(&dwork2(p, &[(-1, -1)])?, &dwork2(p, &[(-2, 0)])?)?;
    let b = NablaModule::direct_sum(&dwork2(p, &[(0, -3)])?, &dwork2(p, &[(-1, 1)])?)?;
    NablaModule::tensor(&a, &b)
}

/// Boundary model along `t = 0` in P1xP1.
pub fn boundary_model(p: u32, exps: &[(i64, i64)]) -> Result<SurfaceModel> {
    let names = ["x".to_string(), "t".to_string()];
    let z = parse_component(Ambient::P1xP1, "t=0", &names)?;
    SurfaceModel::new(Ambient::P1xP1, &dwork2(p, exps)?, z, names)
}

/// `dwork(x^-2) (+) dwork(t^-2)`, whose sweep has a bent first break.
pub fn two_leaf_sum(p: u32) -> Result<NablaModule> {
    NablaModule::direct_sum(&dwork2(p, &[(-2, 0)])?, &dwork2(p, &[(0, -2)])?)
}
