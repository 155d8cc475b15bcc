use std::sync::Arc;

use super::*;
use crate::fvgeom::{build_geometry, Scheme};
use crate::geometry::Vec3;
use crate::material::{isotropic_permeability, Fluid, Material, SpatialParams, VanGenuchten};
use crate::mesh::{build_structured_quad, MARKER_BOTTOM, MARKER_LEFT, MARKER_RIGHT, MARKER_TOP};
use crate::models::{initial_solution, BcKind, OneP, ProblemDefinition, TwoP};
use rand::{Rng, SeedableRng};

const K: f64 = 1e-12;

fn darcy_pair(scheme: Scheme) -> Assembler {
    let mesh = build_structured_quad(2, 1, Vec3::xy(0.0, 0.0), Vec3::xy(2.0, 1.0)).unwrap();
    let gg = Arc::new(build_geometry(Arc::new(mesh), scheme).unwrap());
    let sp = SpatialParams::uniform(Material::new(0.2, isotropic_permeability(K)), 2).unwrap();
    let problem = ProblemDefinition::new(1)
        .with_uniform_boundary(&[MARKER_LEFT, MARKER_RIGHT], BcKind::Dirichlet)
        .with_uniform_boundary(&[MARKER_BOTTOM, MARKER_TOP], BcKind::Neumann)
        .with_dirichlet(|x, _, out| out[0] = if x.x < 1.0 { 2e5 } else { 1e5 });
    Assembler::single(
        gg,
        Arc::new(OneP::new(Arc::new(sp), Fluid::water(), problem)),
    )
}

#[test]
fn two_cell_darcy_hand_solution() {
    // 2K (p0 - pL) + K (p0 - p1) = 0, K (p1 - p0) + 2K (p1 - pR) = 0
    let (pl, pr) = (2e5, 1e5);
    let u = [(3.0 * pl + pr) / 4.0, (pl + 3.0 * pr) / 4.0];
    let asm = darcy_pair(Scheme::Tpfa);
    let r = asm.residual(&u).unwrap();
    let scale = K * 1000.0 / 1e-3 * (pl - pr);
    assert!(norm_inf(&r) < 1e-12 * scale, "{r:?}");

    let mut v = vec![1.5e5, 1.5e5];
    let rep = newton_solve(
        &mut darcy_pair(Scheme::Tpfa),
        &mut v,
        &NewtonConfig::default(),
    )
    .unwrap();
    assert!(rep.iterations <= 2);
    assert!((v[0] - u[0]).abs() < 1e-6 && (v[1] - u[1]).abs() < 1e-6);
}

#[test]
fn numeric_jacobian_matches_two_point_stencil() {
    let asm = darcy_pair(Scheme::Tpfa);
    let j = asm.jacobian(&[1.7e5, 1.2e5]).unwrap();
    let c = 1000.0 / 1e-3 * K;
    let analytic = [3.0 * c, -c, -c, 3.0 * c];
    for (a, b) in j.to_dense().iter().zip(analytic) {
        assert!((a - b).abs() <= 1e-6 * b.abs(), "{a} vs {b}");
    }
}

#[test]
fn zero_state_zero_residual() {
    let mesh = build_structured_quad(3, 3, Vec3::xy(0.0, 0.0), Vec3::xy(1.0, 1.0)).unwrap();
    for scheme in [Scheme::Tpfa, Scheme::Box] {
        let gg = Arc::new(build_geometry(Arc::new(mesh.clone()), scheme).unwrap());
        let sp = SpatialParams::uniform(Material::new(0.2, isotropic_permeability(K)), 9).unwrap();
        let problem = ProblemDefinition::new(1).with_uniform_boundary(
            &[MARKER_LEFT, MARKER_RIGHT, MARKER_BOTTOM, MARKER_TOP],
            BcKind::Dirichlet,
        );
        let asm = Assembler::single(
            gg.clone(),
            Arc::new(OneP::new(Arc::new(sp), Fluid::water(), problem)),
        );
        let r = asm.residual(&vec![0.0; gg.num_dofs()]).unwrap();
        assert!(r.iter().all(|v| *v == 0.0));
    }
}

#[test]
fn steady_equals_transient_limit() {
    let mut asm = darcy_pair(Scheme::Box);
    let u = vec![1.9e5, 1.8e5, 1.2e5, 1.9e5, 1.8e5, 1.2e5];
    let steady = asm.residual(&u).unwrap();
    asm.set_transient(1e300, 1e300, &[0.0; 6]).unwrap();
    let transient = asm.residual(&u).unwrap();
    for (a, b) in steady.iter().zip(&transient) {
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-30));
    }
    // box Dirichlet rows hold u - u_D
    assert_eq!(steady[0], 1.9e5 - 2e5);
    assert_eq!(steady[2], 1.2e5 - 1e5);
}

#[test]
fn storage_gives_positive_diagonal() {
    let mut asm = darcy_pair(Scheme::Tpfa);
    let u = [1.5e5, 1.5e5];
    let steady = asm.jacobian(&u).unwrap();
    asm.set_transient(1.0, 1.0, &u).unwrap();
    // slightly compressible water makes storage increase with p
    let gg = asm.domains()[0].gg.clone();
    let sp = SpatialParams::uniform(Material::new(0.2, isotropic_permeability(K)), 2).unwrap();
    let phys = OneP::new(
        Arc::new(sp),
        Fluid::water(),
        asm.domains()[0].physics.problem().clone(),
    )
    .with_compressibility(4.5e-10, 1e5);
    let mut asm2 = Assembler::single(gg, Arc::new(phys));
    asm2.set_transient(1.0, 1.0, &u).unwrap();
    let transient = asm2.jacobian(&u).unwrap();
    for i in 0..2 {
        assert!(transient.get(i, i) > steady.get(i, i));
    }
}

fn two_phase_4x4() -> (Assembler, Arc<crate::fvgeom::GridGeometry>) {
    let mesh = build_structured_quad(4, 4, Vec3::xy(0.0, 0.0), Vec3::xy(1.0, 1.0)).unwrap();
    let gg = Arc::new(build_geometry(Arc::new(mesh), Scheme::Tpfa).unwrap());
    let vg = VanGenuchten::new(1e-3, 3.0, 0.0).unwrap();
    let sp = SpatialParams::uniform(
        Material::new(0.15, isotropic_permeability(1e-12)).with_vg(vg),
        16,
    )
    .unwrap();
    let problem = ProblemDefinition::new(2)
        .with_uniform_boundary(&[MARKER_LEFT, MARKER_RIGHT], BcKind::Dirichlet)
        .with_uniform_boundary(&[MARKER_BOTTOM, MARKER_TOP], BcKind::Neumann)
        .with_dirichlet(|x, _, out| {
            out[0] = 1e5 + 9810.0 * (1.0 - x.y);
            out[1] = 0.0;
        });
    let phys = TwoP::new(Arc::new(sp), Fluid::water(), Fluid::nitrogen(), problem)
        .unwrap()
        .with_gravity(Vec3::xy(0.0, -9.81));
    (Assembler::single(gg.clone(), Arc::new(phys)), gg)
}

/// Hydrostatic water pressure with +-1 kPa noise, gas saturation away from
/// the regularized ends.
fn random_two_phase_state(gg: &crate::fvgeom::GridGeometry, rng: &mut impl Rng) -> Vec<f64> {
    let mut u = Vec::with_capacity(gg.num_dofs() * 2);
    for x in gg.dof_positions() {
        u.push(1e5 + 9810.0 * (1.0 - x.y) + rng.random_range(-1e3..1e3));
        u.push(rng.random_range(0.05..0.95));
    }
    u
}

#[test]
fn forward_and_central_jacobians_agree_on_two_phase() {
    let (mut asm, gg) = two_phase_4x4();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let n = gg.num_dofs() * 2;
    let old: Vec<f64> = (0..n)
        .map(|i| if i % 2 == 0 { 1.05e5 } else { 0.2 })
        .collect();
    asm.set_transient(100.0, 100.0, &old).unwrap();
    let u = random_two_phase_state(&gg, &mut rng);
    let fwd = asm.jacobian(&u).unwrap();
    let central = asm
        .with_differencing(NumericDiff::central(1e-6))
        .jacobian(&u)
        .unwrap();
    let scale = central.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..n {
        for (j, c) in central.row(i) {
            let f = fwd.get(i, j);
            let err = (f - c).abs() / c.abs().max(1e-9 * scale);
            assert!(err < 1e-5, "({i},{j}): {f} vs {c}");
        }
    }
}

#[test]
fn transient_step_conserves_mass_with_neumann_boundaries() {
    let mesh = build_structured_quad(5, 3, Vec3::xy(0.0, 0.0), Vec3::xy(1.0, 0.6)).unwrap();
    for scheme in [Scheme::Tpfa, Scheme::Box] {
        let gg = Arc::new(build_geometry(Arc::new(mesh.clone()), scheme).unwrap());
        let sp =
            SpatialParams::uniform(Material::new(0.3, isotropic_permeability(1e-11)), 15).unwrap();
        let problem = ProblemDefinition::new(1)
            .with_uniform_boundary(
                &[MARKER_LEFT, MARKER_RIGHT, MARKER_BOTTOM, MARKER_TOP],
                BcKind::Neumann,
            )
            .with_neumann(|m, _, _, _, out| out[0] = if m == MARKER_LEFT { -1e-3 } else { 0.0 })
            .with_source(|e, _, _, _, out| out[0] = if e == 7 { 2e-3 } else { 0.0 })
            .with_initial(|x, out| out[0] = 1e5 + 100.0 * x.x);
        let phys = OneP::new(Arc::new(sp), Fluid::water(), problem).with_compressibility(1e-8, 1e5);
        let phys = Arc::new(phys);
        let u0 = initial_solution(&gg, &*phys);
        let mut asm = Assembler::single(gg.clone(), phys);
        asm.set_transient(10.0, 10.0, &u0).unwrap();
        let mut u = u0.clone();
        newton_solve(&mut asm, &mut u, &NewtonConfig::default()).unwrap();
        let parts = &asm.residual_parts(&u).unwrap()[0];
        let [st, fl, bd, so, _] = parts.sums(0, 1);
        let scale = st.abs().max(bd.abs());
        assert!(fl.abs() < 1e-12 * scale, "{scheme:?}: interior fluxes {fl}");
        assert!(
            (st + bd + so).abs() < 1e-10 * scale,
            "{scheme:?}: {st} {bd} {so}"
        );
    }
}

mod props {
    use super::*;
    use crate::solvers::compare_with_central;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn jacobian_oracle_on_random_two_phase_states(seed in 0u64..10_000) {
            let (mut asm, gg) = two_phase_4x4();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let u = random_two_phase_state(&gg, &mut rng);
            asm.set_transient(50.0, 50.0, &u).unwrap();
            let r = compare_with_central(&mut asm, &u, 1e-6, 1e-9).unwrap();
            prop_assert!(r.max_error < 1e-5, "{:?}", r);
            // An upwind switch within the oracle stencil touches a handful of entries.
            prop_assert!(r.kinked * 20 <= r.entries, "{:?}", r);
        }

        #[test]
        fn lu_solves_diagonally_dominant_systems(seed in 0u64..10_000, n in 1usize..60) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut t = TripletMatrix::new(n, n);
            for i in 0..n {
                t.push(i, i, 10.0 + rng.random_range(0.0..1.0));
                for _ in 0..4 {
                    t.push(i, rng.random_range(0..n), rng.random_range(-1.0..1.0));
                }
            }
            let a = t.to_csr();
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = LinearSolver::Direct.solve(&a, &b).unwrap();
            let r: Vec<f64> = a.mul_vec(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
            prop_assert!(norm2(&r) <= 1e-12 * norm2(&b));
        }
    }
}
