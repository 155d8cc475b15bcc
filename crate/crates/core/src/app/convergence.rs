//! Grid convergence study for `-div(K grad p) = f` with the manufactured
//! solution `p = sin(pi x) sin(pi y)` on the unit square.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::audit::AuditTable;
use super::params::ParameterTree;
use super::vtk::Field;
use super::{newton_config, OutputConfig};
use crate::error::{Error, Result};
use crate::fvgeom::{build_geometry, GridGeometry, Scheme};
use crate::geometry::{Mat3, Vec3};
use crate::material::{rotated_permeability, Fluid, Material, SpatialParams};
use crate::mesh::{
    build_structured_quad, Mesh, MARKER_BOTTOM, MARKER_LEFT, MARKER_RIGHT, MARKER_TOP,
};
use crate::models::{initial_solution, BcKind, OneP, ProblemDefinition};
use crate::solvers::{newton_solve, Assembler};

#[derive(Clone, Debug)]
pub struct ConvergenceSetup {
    pub schemes: Vec<Scheme>,
    pub levels: Vec<usize>,
    pub permeability: Mat3,
    /// Interior vertex displacement as a fraction of the mesh size.
    pub perturbation: f64,
    pub seed: u64,
}

impl ConvergenceSetup {
    pub fn from_params(p: &ParameterTree) -> Result<Self> {
        let schemes = p
            .get_vec_or(
                "Convergence.Schemes",
                vec!["tpfa".to_string(), "box".to_string()],
            )?
            .iter()
            .map(|s| parse_scheme(s))
            .collect::<Result<Vec<_>>>()?;
        let levels: Vec<usize> = p.get_vec_or("Convergence.Levels", vec![8, 16, 32, 64])?;
        if levels.is_empty() || levels.contains(&0) {
            return Err(Error::InvalidArgument(
                "Convergence.Levels must be positive".into(),
            ));
        }
        let kh = p.get_or("Convergence.Kh", 1.0)?;
        let xi = p.get_or("Convergence.Xi", 1.0)?;
        let phi = p.get_or("Convergence.PhiDeg", 0.0)?;
        let perturbation = p.get_or("Convergence.Perturbation", 0.0)?;
        if !(0.0..0.25).contains(&perturbation) {
            return Err(Error::InvalidArgument(format!(
                "Convergence.Perturbation {perturbation} must lie in [0, 0.25)"
            )));
        }
        Ok(ConvergenceSetup {
            schemes,
            levels,
            permeability: rotated_permeability(kh, xi, phi)?,
            perturbation,
            seed: p.get_or("Convergence.Seed", 7)?,
        })
    }
}

pub fn parse_scheme(s: &str) -> Result<Scheme> {
    match s.to_ascii_lowercase().as_str() {
        "tpfa" | "cctpfa" => Ok(Scheme::Tpfa),
        "box" => Ok(Scheme::Box),
        other => Err(Error::InvalidArgument(format!("unknown scheme `{other}`"))),
    }
}

#[derive(Clone, Debug)]
pub struct LevelResult {
    pub cells: usize,
    pub dofs: usize,
    pub l2_error: f64,
    pub newton_iterations: usize,
}

#[derive(Clone, Debug)]
pub struct SchemeResult {
    pub scheme: Scheme,
    pub levels: Vec<LevelResult>,
}

impl SchemeResult {
    /// Pairwise orders `log2(e_i / e_{i+1})` scaled by the refinement ratio.
    pub fn orders(&self) -> Vec<f64> {
        self.levels
            .windows(2)
            .map(|w| {
                (w[0].l2_error / w[1].l2_error).ln() / (w[1].cells as f64 / w[0].cells as f64).ln()
            })
            .collect()
    }

    /// Least-squares slope of `log e` against `log h`.
    pub fn fitted_order(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .levels
            .iter()
            .map(|l| ((1.0 / l.cells as f64).ln(), l.l2_error.ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }
}

pub fn exact(x: Vec3) -> f64 {
    (PI * x.x).sin() * (PI * x.y).sin()
}

/// Right-hand side for a constant tensor.
pub fn source_term(k: &Mat3, x: Vec3) -> f64 {
    let m = &k.0;
    let (sx, cx) = (PI * x.x).sin_cos();
    let (sy, cy) = (PI * x.y).sin_cos();
    PI * PI * ((m[0][0] + m[1][1]) * sx * sy - 2.0 * m[0][1] * cx * cy)
}

/// Unit-square quad grid, interior vertices jittered by up to
/// `perturbation * h` in each direction.
pub fn perturbed_grid(n: usize, perturbation: f64, seed: u64) -> Result<Mesh> {
    let m = build_structured_quad(n, n, Vec3::xy(0.0, 0.0), Vec3::xy(1.0, 1.0))?;
    if perturbation == 0.0 {
        return Ok(m);
    }
    let h = 1.0 / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1000).wrapping_add(n as u64));
    let d = perturbation * h;
    m.displace_interior_vertices(|_, _| {
        Vec3::xy(rng.random_range(-d..=d), rng.random_range(-d..=d))
    })
}

fn solve_level(
    setup: &ConvergenceSetup,
    scheme: Scheme,
    n: usize,
    p: &ParameterTree,
) -> Result<(Arc<GridGeometry>, Vec<f64>, LevelResult)> {
    let mesh = perturbed_grid(n, setup.perturbation, setup.seed)?;
    let gg = Arc::new(build_geometry(Arc::new(mesh), scheme)?);
    let k = setup.permeability;
    let problem = ProblemDefinition::new(1)
        .with_uniform_boundary(
            &[MARKER_LEFT, MARKER_RIGHT, MARKER_BOTTOM, MARKER_TOP],
            BcKind::Dirichlet,
        )
        .with_dirichlet(|x, _, out| out[0] = exact(x))
        .with_source(move |_, x, _, _, out| out[0] = source_term(&k, x));
    let unit = Fluid::Constant {
        density: 1.0,
        viscosity: 1.0,
        molar_density: 1.0,
        diffusion: 0.0,
    };
    let sp = SpatialParams::uniform(Material::new(1.0, k), gg.num_elements())?;
    let physics = Arc::new(OneP::new(Arc::new(sp), unit, problem));
    let mut asm = Assembler::single(gg.clone(), physics.clone());
    asm.set_steady(0.0);
    let mut u = initial_solution(&gg, physics.as_ref());
    let report = newton_solve(&mut asm, &mut u, &newton_config(p)?)?;
    let vols = gg.dof_volumes();
    let err2: f64 = gg
        .dof_positions()
        .iter()
        .zip(&u)
        .zip(&vols)
        .map(|((x, uh), v)| v * (uh - exact(*x)).powi(2))
        .sum();
    let level = LevelResult {
        cells: n,
        dofs: gg.num_dofs(),
        l2_error: err2.sqrt(),
        newton_iterations: report.iterations,
    };
    Ok((gg, u, level))
}

/// Runs every scheme on every level and writes the error table.
pub fn run_convergence(p: &ParameterTree) -> Result<Vec<SchemeResult>> {
    let setup = ConvergenceSetup::from_params(p)?;
    let out = OutputConfig::from_params(p, "convergence")?;
    let mut audit = AuditTable::new(&["scheme", "cells", "dofs", "l2_error", "order", "newton"]);
    let mut results = Vec::new();
    for &scheme in &setup.schemes {
        let mut series = out.series(&format!("{}_{}", out.name, scheme.name()))?;
        let mut levels: Vec<LevelResult> = Vec::new();
        for &n in &setup.levels {
            let (gg, u, level) = solve_level(&setup, scheme, n, p)?;
            let order = levels
                .last()
                .map(|prev| {
                    (prev.l2_error / level.l2_error).ln() / (n as f64 / prev.cells as f64).ln()
                })
                .unwrap_or(f64::NAN);
            println!(
                "{} N={n} dofs={} L2={:.6e} order={order:.3}",
                scheme.name(),
                level.dofs,
                level.l2_error
            );
            audit.push(vec![
                if scheme == Scheme::Tpfa { 0.0 } else { 1.0 },
                n as f64,
                level.dofs as f64,
                level.l2_error,
                order,
                level.newton_iterations as f64,
            ])?;
            if let Some(series) = series.as_mut() {
                let exact_field: Vec<f64> = gg.dof_positions().iter().map(|x| exact(*x)).collect();
                let err: Vec<f64> = u.iter().zip(&exact_field).map(|(a, b)| a - b).collect();
                series.write(
                    &gg,
                    &[
                        Field::new("p", u),
                        Field::new("p_exact", exact_field),
                        Field::new("error", err),
                    ],
                )?;
            }
            levels.push(level);
        }
        results.push(SchemeResult { scheme, levels });
    }
    out.write_audit(&audit)?;
    Ok(results)
}
