//! Root water uptake from a closed soil column with a passive soil tracer.
//!
//! Soil: Richards equation with tracer on a box grid (domain 0). Root:
//! xylem flow on a branched segment network (domain 1, TPFA). The collar
//! extracts the transpiration rate unless that would drive its pressure
//! below the wilting point, in which case the wilting pressure is imposed.

use std::cell::RefCell;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use super::audit::AuditTable;
use super::params::ParameterTree;
use super::vtk::{split_fields, Field};
use super::{newton_config_with, time_loop, OutputConfig};
use crate::error::{Error, Result};
use crate::fvgeom::{build_geometry, Scheme};
use crate::geometry::Vec3;
use crate::material::{isotropic_permeability, Fluid, Material, SpatialParams, VanGenuchten};
use crate::mesh::{
    build_segment_network, build_structured_quad, SegmentNetwork, MARKER_BOTTOM, MARKER_LEFT,
    MARKER_RIGHT, MARKER_TOP,
};
use crate::models::{gravity_vector, initial_solution, BcKind, ProblemDefinition, Richards, Xylem};
use crate::multidomain::EmbeddedCoupling;
use crate::solvers::{newton_solve, Assembler, CouplingContext, NewtonConfig, Subdomain};

/// Synthetic tap root with alternating laterals in the `x`-`y` plane.
///
/// The collar is vertex 0, just below the soil surface at `y = height`.
/// Returns the network and the number of tap-root segments (they come
/// first).
pub fn synthetic_root(
    width: f64,
    height: f64,
    tap_radius: f64,
    lateral_radius: f64,
) -> Result<(SegmentNetwork, usize)> {
    let tap_segments = 12;
    let x0 = 0.503 * width;
    let (top, bottom) = (0.99 * height, 0.15 * height);
    let mut points: Vec<Vec3> = (0..=tap_segments)
        .map(|k| {
            let s = k as f64 / tap_segments as f64;
            // slight sideways wobble keeps the root off grid lines
            Vec3::xy(
                x0 + 0.004 * width * (3.0 * s).sin(),
                top - s * (top - bottom),
            )
        })
        .collect();
    let mut segments: Vec<[usize; 2]> = (0..tap_segments).map(|k| [k, k + 1]).collect();
    let mut radii = vec![tap_radius; tap_segments];
    for (i, &k) in [2usize, 5, 8, 10].iter().enumerate() {
        let side = if i % 2 == 0 { 1.0 } else { -1.0 };
        let mut prev = k;
        let base = points[k];
        for j in 1..=4 {
            let s = j as f64 / 4.0;
            let p = Vec3::xy(
                base.x + side * s * 0.31 * width,
                base.y - s * (0.07 + 0.02 * i as f64) * height,
            );
            points.push(p);
            segments.push([prev, points.len() - 1]);
            radii.push(lateral_radius);
            prev = points.len() - 1;
        }
    }
    Ok((
        build_segment_network(&points, &segments, &radii)?,
        tap_segments,
    ))
}

#[derive(Clone, Debug)]
pub struct RootSoilSetup {
    pub cells: usize,
    pub width: f64,
    pub height: f64,
    pub soil: Material,
    pub root_porosity: f64,
    pub k_ax: f64,
    pub k_rad: f64,
    pub tap_radius: f64,
    pub lateral_radius: f64,
    /// Transpiration demand in kg/s.
    pub transpiration: f64,
    pub wilting_pressure: f64,
    pub initial_top_pressure: f64,
    pub initial_mole_fraction: f64,
    pub circle_average: bool,
}

impl RootSoilSetup {
    pub fn from_params(p: &ParameterTree) -> Result<Self> {
        let vg = VanGenuchten::new(
            p.get_or("Soil.VgAlpha", 2.956e-4)?,
            p.get_or("Soil.VgN", 2.0)?,
            p.get_or("Soil.ResidualSaturation", 0.1)?,
        )?;
        let soil = Material::new(
            p.get_or("Soil.Porosity", 0.4)?,
            isotropic_permeability(p.get_or("Soil.Permeability", 1e-12)?),
        )
        .with_vg(vg);
        Ok(RootSoilSetup {
            cells: p.get_or("Grid.Cells", 16)?,
            width: p.get_or("Grid.Width", 0.1)?,
            height: p.get_or("Grid.Height", 0.1)?,
            soil,
            root_porosity: p.get_or("Root.Porosity", 0.4)?,
            k_ax: p.get_or("Root.AxialConductivity", 5.1e-17)?,
            k_rad: p.get_or("Root.RadialConductivity", 2.04e-11)?,
            tap_radius: p.get_or("Root.TapRadius", 1e-3)?,
            lateral_radius: p.get_or("Root.LateralRadius", 5e-4)?,
            transpiration: p.get_or("Problem.Transpiration", 2.15e-8)?,
            wilting_pressure: p.get_or("Problem.WiltingPressure", -1.4e6)?,
            initial_top_pressure: p.get_or("Problem.InitialTopPressure", 9.5e4)?,
            initial_mole_fraction: p.get_or("Problem.InitialMoleFraction", 3e-7)?,
            circle_average: p.get_or("Problem.CircleAverage", true)?,
        })
    }
}

#[derive(Clone, Debug)]
pub struct RootSoilResult {
    pub audit: AuditTable,
    pub steps: usize,
    /// Final soil tracer mole fraction per soil dof.
    pub soil_tracer: Vec<f64>,
    /// Final radial uptake per unit root length in mol/(m s), positive into
    /// the root.
    pub segment_uptake: Vec<f64>,
    /// Soil dofs whose control volumes exchange with each segment.
    pub segment_soil_dofs: Vec<Vec<usize>>,
    /// Final water drawn from each soil dof in mol/s.
    pub soil_uptake: Vec<f64>,
}

/// Totals that the audit tracks.
struct Totals {
    water: f64,
    tracer: f64,
}

pub fn run_rootsoil(p: &ParameterTree) -> Result<RootSoilResult> {
    let setup = RootSoilSetup::from_params(p)?;
    let out = OutputConfig::from_params(p, "rootsoil")?;
    let g = gravity_vector(2);
    let water = Fluid::water();
    let (rho, rho_m) = (water.density(0.0), water.molar_density(0.0));
    let molar_mass = water.molar_mass();

    let soil_mesh = build_structured_quad(
        setup.cells,
        setup.cells,
        Vec3::xy(0.0, 0.0),
        Vec3::xy(setup.width, setup.height),
    )?;
    let soil_gg = Arc::new(build_geometry(Arc::new(soil_mesh), Scheme::Box)?);
    let (net, _) = synthetic_root(
        setup.width,
        setup.height,
        setup.tap_radius,
        setup.lateral_radius,
    )?;
    let radii: Vec<f64> = (0..net.num_segments())
        .map(|s| net.radius(s).unwrap_or(setup.tap_radius))
        .collect();
    let collar = net.mesh.vertex(0);
    let root_gg = Arc::new(build_geometry(Arc::new(net.mesh.clone()), Scheme::Tpfa)?);

    let (p_top, height, x0) = (
        setup.initial_top_pressure,
        setup.height,
        setup.initial_mole_fraction,
    );
    let hydrostatic = move |y: f64| p_top + rho * g.norm() * (height - y);
    let soil_problem = ProblemDefinition::new(2)
        .with_uniform_boundary(
            &[MARKER_LEFT, MARKER_RIGHT, MARKER_BOTTOM, MARKER_TOP],
            BcKind::Neumann,
        )
        .with_initial(move |x, out| {
            out[0] = hydrostatic(x.y);
            out[1] = x0;
        });
    let soil_params = SpatialParams::uniform(setup.soil.clone(), soil_gg.num_elements())?;
    let richards =
        Arc::new(Richards::new(Arc::new(soil_params), water, soil_problem)?.with_gravity(g));

    let wilting = Arc::new(AtomicBool::new(false));
    let at_collar = move |x: Vec3| x.distance(collar) < 1e-12;
    let demand = setup.transpiration / molar_mass;
    let p_wilt = setup.wilting_pressure;
    let root_problem = {
        let (w1, w2) = (wilting.clone(), wilting.clone());
        ProblemDefinition::new(2)
            .with_selector(move |_, x| {
                Some(if at_collar(x) && w1.load(Ordering::Relaxed) {
                    vec![BcKind::Dirichlet, BcKind::Neumann]
                } else {
                    vec![BcKind::Neumann; 2]
                })
            })
            .with_neumann(move |_, x, _, _, out| {
                out.fill(0.0);
                if at_collar(x) && !w2.load(Ordering::Relaxed) {
                    out[0] = demand;
                }
            })
            .with_dirichlet(move |_, _, out| {
                out[0] = p_wilt;
                out[1] = 0.0;
            })
            .with_initial(move |x, out| {
                out[0] = hydrostatic(x.y);
                out[1] = 0.0;
            })
    };
    let xylem = Arc::new(
        Xylem::new(
            radii,
            setup.root_porosity,
            setup.k_ax,
            setup.k_rad,
            water,
            root_problem,
        )?
        .with_gravity(g),
    );
    let coupling = Arc::new(EmbeddedCoupling::new(
        soil_gg.clone(),
        richards.clone(),
        root_gg.clone(),
        xylem.clone(),
        setup.circle_average,
    )?);
    let segment_soil_dofs: Vec<Vec<usize>> = {
        let mut v = vec![Vec::new(); root_gg.num_elements()];
        for is in &coupling.glue().intersections {
            for &t in &is.targets {
                v[is.domain_element].extend_from_slice(soil_gg.mesh().element(t));
            }
        }
        for d in v.iter_mut() {
            d.sort_unstable();
            d.dedup();
        }
        v
    };
    let asm = Assembler::new(
        vec![
            Subdomain::new(soil_gg.clone(), richards.clone()),
            Subdomain::new(root_gg.clone(), xylem.clone()),
        ],
        coupling.clone(),
    )?;
    let n_soil = soil_gg.num_dofs() * 2;
    let mut u0 = initial_solution(&soil_gg, richards.as_ref());
    u0.extend(initial_solution(&root_gg, xylem.as_ref()));

    // Mass balances need the residual near the flux roundoff level; the
    // shift alone stalls there once root pressures get large.
    let newton = newton_config_with(
        p,
        NewtonConfig {
            max_relative_shift: 1e-12,
            absolute_residual: 1e-15,
            ..NewtonConfig::default()
        },
    )?;
    let mut tl = time_loop(p, (60.0, 259200.0, 3600.0))?;

    let totals = |u: &[f64]| -> Totals {
        let mut t = Totals {
            water: 0.0,
            tracer: 0.0,
        };
        for scv in soil_gg.scvs() {
            let e = scv.element;
            let vars = &u[2 * scv.dof..2 * scv.dof + 2];
            let w = scv.volume
                * richards.params().material(e).porosity
                * richards.saturation(e, vars[0])
                * rho_m;
            t.water += w * molar_mass;
            t.tracer += w * vars[1];
        }
        t
    };
    // Soil water change between two states, summed per control volume to
    // avoid cancellation of the large totals.
    let water_change = |new: &[f64], old: &[f64]| -> f64 {
        soil_gg
            .scvs()
            .iter()
            .map(|scv| {
                let e = scv.element;
                let phi = richards.params().material(e).porosity;
                let ds = richards.saturation(e, new[2 * scv.dof])
                    - richards.saturation(e, old[2 * scv.dof]);
                scv.volume * phi * ds * rho_m * molar_mass
            })
            .sum()
    };
    let root_tracer = |u: &[f64]| -> f64 {
        root_gg
            .scvs()
            .iter()
            .map(|scv| {
                scv.volume
                    * setup.root_porosity
                    * rho_m
                    * xylem.cross_section(scv.element)
                    * u[n_soil + 2 * scv.dof + 1]
            })
            .sum()
    };
    let collar_dof = root_gg
        .scvfs()
        .iter()
        .find(|f| f.boundary && at_collar(f.center))
        .map(|f| root_gg.scv(f.inside_scv).dof)
        .ok_or_else(|| Error::InvalidMesh("collar is not a network tip".into()))?;
    // Face pressure at the collar implied by the cell value and the flux.
    let collar_pressure = |u: &[f64], flux_mol: f64| -> f64 {
        if wilting.load(Ordering::Relaxed) {
            return p_wilt;
        }
        let xc = root_gg.scv(collar_dof).center;
        let pc = u[n_soil + 2 * collar_dof];
        let d = xc.distance(collar);
        let psi_face = pc - rho * g.dot(xc) - flux_mol / rho_m * d / setup.k_ax;
        psi_face + rho * g.dot(collar)
    };
    let exchange = |asm: &Assembler, u: &[f64]| -> Result<Vec<f64>> {
        let states = asm.split(u)?;
        let ctx = CouplingContext {
            domains: asm.domains(),
            states: &states,
            t: asm.time(),
        };
        Ok(coupling.root_exchange(&ctx))
    };

    let mut audit = AuditTable::new(&[
        "t",
        "dt",
        "newton",
        "wilting",
        "collar_flux",
        "collar_pressure",
        "soil_water",
        "soil_water_rate",
        "uptake",
        "soil_tracer",
        "root_tracer",
        "max_tracer",
    ]);
    let mut soil_series = out.series(&out.name)?;
    let mut root_series = out.series(&format!("{}_root", out.name))?;
    let mut write_vtk = |u: &[f64]| -> Result<()> {
        let (us, ur) = u.split_at(n_soil);
        if let Some(s) = soil_series.as_mut() {
            let mut fields = split_fields(&["p_w", "x_tracer"], us);
            let sw = soil_gg
                .dof_positions()
                .iter()
                .enumerate()
                .map(|(d, _)| richards.saturation(0, us[2 * d]))
                .collect();
            fields.push(Field::new("S_w", sw));
            s.write(&soil_gg, &fields)?;
        }
        if let Some(s) = root_series.as_mut() {
            s.write(&root_gg, &split_fields(&["p_r", "x_tracer"], ur))?;
        }
        Ok(())
    };

    let t0 = totals(&u0);
    let flux0 = exchange(&asm, &u0)?.iter().sum::<f64>();
    audit.push(vec![
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        collar_pressure(&u0, 0.0),
        t0.water,
        0.0,
        -flux0 * molar_mass,
        t0.tracer,
        root_tracer(&u0),
        x0,
    ])?;
    if out.vtk {
        write_vtk(&u0)?;
    }

    let asm = RefCell::new(asm);
    let t_end = tl.end_time();
    let state = RefCell::new(u0);
    let old = RefCell::new(Vec::new());
    let mut steps = 0;
    let last_mode = RefCell::new(false);
    tl.run(
        |t_new, dt| {
            let mut u = state.borrow_mut();
            let mut asm = asm.borrow_mut();
            *old.borrow_mut() = u.clone();
            wilting.store(false, Ordering::Relaxed);
            asm.set_transient(t_new, dt, &u)?;
            let mut trial = u.clone();
            // Demand the soil cannot deliver shows up either as a collar
            // pressure below the wilting point or as a failed solve.
            let unconstrained = newton_solve(&mut *asm, &mut trial, &newton);
            let it = match &unconstrained {
                Ok(r) if collar_pressure(&trial, demand) >= p_wilt => r.iterations,
                _ => {
                    wilting.store(true, Ordering::Relaxed);
                    trial.clone_from(&u);
                    let wilt = newton_solve(&mut *asm, &mut trial, &newton);
                    match (wilt, unconstrained) {
                        (Ok(w), Ok(_)) => w.iterations,
                        (Ok(w), Err(e)) => {
                            let flux = asm.residual_parts(&trial)?[1].boundary[2 * collar_dof];
                            // The pressure limit admits more than the demand, so
                            // the unconstrained failure was a step size problem.
                            if flux > demand {
                                return Err(e);
                            }
                            w.iterations
                        }
                        (Err(e), _) => return Err(e),
                    }
                }
            };
            *last_mode.borrow_mut() = wilting.load(Ordering::Relaxed);
            *u = trial;
            Ok(it)
        },
        |r| {
            out.report(r);
            steps = r.step;
            let u = state.borrow();
            let asm = asm.borrow();
            let parts = asm.residual_parts(&u)?;
            let collar_flux = parts[1].boundary[2 * collar_dof];
            let t = totals(&u);
            let rate = water_change(&u, &old.borrow()) / r.dt;
            let uptake = -exchange(&asm, &u)?.iter().sum::<f64>() * molar_mass;
            let max_x = u[..n_soil]
                .iter()
                .skip(1)
                .step_by(2)
                .copied()
                .fold(f64::MIN, f64::max);
            audit.push(vec![
                r.t,
                r.dt,
                r.newton_iterations as f64,
                f64::from(u8::from(*last_mode.borrow())),
                collar_flux * molar_mass,
                collar_pressure(&u, collar_flux),
                t.water,
                rate,
                uptake,
                t.tracer,
                root_tracer(&u),
                max_x,
            ])?;
            if out.wants_vtk(r.step, r.t >= t_end) {
                write_vtk(&u)?;
            }
            Ok(())
        },
    )?;
    out.write_audit(&audit)?;
    let u = state.into_inner();
    let lengths: Vec<f64> = (0..net.num_segments())
        .map(|s| net.segment_length(s))
        .collect();
    let segment_uptake = exchange(&asm.borrow(), &u)?
        .iter()
        .zip(&lengths)
        .map(|(q, l)| -q / l)
        .collect();
    let soil_uptake = {
        let asm = asm.borrow();
        let states = asm.split(&u)?;
        let ctx = CouplingContext {
            domains: asm.domains(),
            states: &states,
            t: asm.time(),
        };
        coupling.soil_exchange(&ctx).iter().map(|q| -q).collect()
    };
    Ok(RootSoilResult {
        audit,
        steps,
        soil_tracer: u[..n_soil].iter().skip(1).step_by(2).copied().collect(),
        segment_uptake,
        segment_soil_dofs,
        soil_uptake,
    })
}
