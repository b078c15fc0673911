//! Both z⊗z and x⊗x diagonalize the Bell state; any orthogonal rotation of
//! the degenerate Schmidt block does too. A state with unequal coefficients
//! loses this freedom.

use std::f64::consts::{FRAC_1_SQRT_2 as H, PI};

use nalgebra::DMatrix;
use rand::Rng;

use super::{trial_rng, Ctx, Metric, Outcome, ParamSpec, Result};
use crate::quantum::{
    is_schmidt_basis, rotate_degenerate_block, schmidt_decompose, Bipartition, BasisSpec, PureState, SubsystemId,
    SubsystemLabel, C64,
};

pub(super) const PARAMS: &[ParamSpec] = &[
    ParamSpec::int("rotations", 100, 0, 1_000_000),
    ParamSpec::float("theta", PI / 8.0, 0.0, PI / 2.0),
];

fn two_qubit(amps: [f64; 4]) -> Result<PureState> {
    let factors = vec![SubsystemLabel::new(0, 2), SubsystemLabel::new(1, 2)];
    Ok(PureState::new(factors, amps.iter().map(|&a| C64::new(a, 0.0)).collect(), 1e-10)?)
}

pub(super) fn run(ctx: &Ctx) -> Result<Outcome> {
    let tol = ctx.tolerances.norm_tol;
    let theta = ctx.param("theta");
    let rotations = ctx.param_usize("rotations");
    let cut = Bipartition::new([SubsystemId(0)], [SubsystemId(1)]);
    let z = BasisSpec::computational(2);
    let x = BasisSpec::fourier(2);
    let mut out = Outcome::default();

    let bell = two_qubit([H, 0.0, 0.0, H])?;
    let zz = is_schmidt_basis(&bell, &cut, &z, &z, tol)?;
    let xx = is_schmidt_basis(&bell, &cut, &x, &x, tol)?;
    out.metric("zzSchmidt", Metric::exact(f64::from(u8::from(zz))));
    out.metric("xxSchmidt", Metric::exact(f64::from(u8::from(xx))));
    out.metric("dualBasis", Metric::exact(f64::from(u8::from(zz && xx))));
    out.check("dualBasis", zz && xx, format!("z⊗z {zz}, x⊗x {xx}"));

    let sd = schmidt_decompose(&bell, &cut, ctx.tolerances.degen_tol)?;
    let sizes: Vec<usize> = sd.degeneracy_classes.iter().map(Vec::len).collect();
    out.metric("degenerateClassSize", Metric::count(sd.largest_class()));
    out.check("singleDegenerateClass", sizes == [2], format!("class sizes {sizes:?}"));

    // random elements of O(2), both rotations and reflections
    let mut rng = trial_rng(ctx.seed, 0);
    let mut passed = 0;
    for _ in 0..rotations {
        let phi = rng.random::<f64>() * 2.0 * PI;
        let (s, c) = phi.sin_cos();
        let r = if rng.random::<bool>() {
            DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
        } else {
            DMatrix::from_row_slice(2, 2, &[c, s, s, -c])
        };
        let rotated = rotate_degenerate_block(&sd, 0, &r, tol)?;
        let (u, v) = rotated.completed_bases("rot");
        let ok = is_schmidt_basis(&bell, &cut, &u, &v, tol)?;
        let recon = rotated.reconstruct().distance(&bell) <= ctx.tolerances.recon_tol;
        passed += usize::from(ok && recon);
    }
    out.metric("rotationsPassed", Metric::count(passed));
    out.check("rotationsPass", passed == rotations, format!("{passed}/{rotations} rotated bases pass"));

    let (sn, cs) = theta.sin_cos();
    let control = two_qubit([cs, 0.0, 0.0, sn])?;
    let control_zz = is_schmidt_basis(&control, &cut, &z, &z, tol)?;
    let control_xx = is_schmidt_basis(&control, &cut, &x, &x, tol)?;
    out.metric("controlDualBasis", Metric::exact(f64::from(u8::from(control_zz && control_xx))));
    out.check(
        "controlFailsXX",
        control_zz && !control_xx,
        format!("cos θ|00⟩ + sin θ|11⟩ at θ = {theta}: z⊗z {control_zz}, x⊗x {control_xx}"),
    );

    let product = two_qubit([H, H, 0.0, 0.0])?;
    let rank = schmidt_decompose(&product, &cut, ctx.tolerances.degen_tol)?.rank();
    out.metric("productRank", Metric::count(rank));
    out.check("productRankOne", rank == 1, format!("rank {rank}"));

    if ctx.trials > 1 {
        out.notes.push("the check is deterministic; trials beyond the first are not repeated".into());
    }
    Ok(out)
}
