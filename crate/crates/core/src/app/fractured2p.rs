//! Buoyant gas migration through a water-saturated matrix with conductive
//! and blocking fractures on grid facets.

use std::cell::RefCell;
use std::sync::Arc;

use super::audit::AuditTable;
use super::params::ParameterTree;
use super::vtk::split_fields;
use super::{newton_config, time_loop, OutputConfig};
use crate::error::{Error, Result};
use crate::fvgeom::{build_geometry, GridGeometry, Scheme};
use crate::geometry::Vec3;
use crate::material::{rotated_permeability, Fluid, Material, SpatialParams, VanGenuchten};
use crate::mesh::{
    build_structured_quad, read_msh, MshMesh, MARKER_BOTTOM, MARKER_LEFT, MARKER_RIGHT, MARKER_TOP,
};
use crate::models::{gravity_vector, initial_solution, BcKind, ProblemDefinition, TwoP, GRAVITY};
use crate::multidomain::{FacetCoupling, FractureKind};
use crate::solvers::{newton_solve, Assembler, CouplingManager, NoCoupling, Subdomain};

/// Physical tag of conductive fracture lines in the mesh file.
pub const TAG_CONDUCTIVE: i32 = 10;
/// Physical tag of blocking fracture lines.
pub const TAG_BLOCKING: i32 = 11;

/// The desk-scale mesh shipped with the crate.
pub const BUNDLED_MESH: &str = include_str!("../../data/fractured2p.msh");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FractureMode {
    None,
    Conductive,
    Blocking,
    Both,
}

impl FractureMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(FractureMode::None),
            "conductive" => Ok(FractureMode::Conductive),
            "blocking" => Ok(FractureMode::Blocking),
            "both" => Ok(FractureMode::Both),
            other => Err(Error::InvalidArgument(format!(
                "unknown fracture mode `{other}`"
            ))),
        }
    }

    fn includes(self, tag: i32) -> bool {
        match self {
            FractureMode::None => false,
            FractureMode::Conductive => tag == TAG_CONDUCTIVE,
            FractureMode::Blocking => tag == TAG_BLOCKING,
            FractureMode::Both => tag == TAG_CONDUCTIVE || tag == TAG_BLOCKING,
        }
    }
}

/// Unit square with `n` x `n` cells, a vertical conductive fracture at
/// `x = 1/2` spanning all but the outer cell rows and a horizontal blocking
/// fracture at `y = 1/2` over the middle half of the width.
pub fn desk_mesh(n: usize) -> Result<MshMesh> {
    if n < 4 || !n.is_multiple_of(4) {
        return Err(Error::InvalidArgument(format!(
            "desk mesh size {n} must be a positive multiple of 4"
        )));
    }
    let bulk = build_structured_quad(n, n, Vec3::xy(0.0, 0.0), Vec3::xy(1.0, 1.0))?;
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mid = n / 2;
    let mut lines = Vec::new();
    for j in 1..n - 1 {
        lines.push(([idx(mid, j), idx(mid, j + 1)], TAG_CONDUCTIVE));
    }
    for i in n / 4..3 * n / 4 {
        lines.push(([idx(i, mid), idx(i + 1, mid)], TAG_BLOCKING));
    }
    MshMesh::from_bulk_and_lines(bulk, &lines)
}

/// Material with van Genuchten parameters read from `group`.
fn material(p: &ParameterTree, group: &str, d: [f64; 6]) -> Result<Material> {
    let get = |k: &str, v: f64| p.get_or(&format!("{group}.{k}"), v);
    let k = rotated_permeability(
        get("Permeability", d[1])?,
        get("AnisotropyRatio", d[2])?,
        get("PermeabilityAngle", d[3])?,
    )?;
    let vg = VanGenuchten::new(get("VgAlpha", d[4])?, get("VgN", d[5])?, 0.0)?;
    Ok(Material::new(get("Porosity", d[0])?, k).with_vg(vg))
}

#[derive(Clone, Debug)]
pub struct FracturedSetup {
    pub mode: FractureMode,
    pub matrix: Material,
    pub conductive: Material,
    pub blocking: Material,
    pub conductive_factor: f64,
    /// Width of the gas patch on the bottom boundary and its center.
    pub patch_width: f64,
    pub patch_center: f64,
    pub boundary_saturation: f64,
    pub top_pressure: f64,
    pub arrival_saturation: f64,
    pub stop_at_arrival: bool,
}

impl FracturedSetup {
    pub fn from_params(p: &ParameterTree) -> Result<Self> {
        let aperture = p.get_or("Fracture.Aperture", 0.05)?;
        Ok(FracturedSetup {
            mode: FractureMode::parse(&p.get_or("Fracture.Mode", "both".to_string())?)?,
            matrix: material(p, "Matrix", [0.15, 1e-12, 0.15, -25.0, 1e-3, 3.0])?,
            blocking: material(p, "BlockingFracture", [0.15, 1e-16, 1.0, 0.0, 1e-2, 2.0])?
                .with_aperture(aperture),
            conductive: material(p, "ConductiveFracture", [0.85, 1e-9, 1.0, 0.0, 1e-4, 23.0])?
                .with_aperture(aperture),
            conductive_factor: p.get_or("Fracture.ConductiveFactor", 1e4)?,
            patch_width: p.get_or("Problem.PatchWidth", 0.25)?,
            patch_center: p.get_or("Problem.PatchCenter", 0.5)?,
            boundary_saturation: p.get_or("Problem.BoundarySaturation", 0.99)?,
            top_pressure: p.get_or("Problem.TopPressure", 1e5)?,
            arrival_saturation: p.get_or("Problem.ArrivalSaturation", 0.05)?,
            stop_at_arrival: p.get_or("Problem.StopAtArrival", false)?,
        })
    }
}

#[derive(Clone, Debug)]
pub struct FracturedResult {
    pub audit: AuditTable,
    /// First time the top cell row reaches the arrival saturation,
    /// interpolated linearly between steps.
    pub arrival_time: Option<f64>,
    pub steps: usize,
    /// Step-size reductions after failed Newton solves.
    pub retries: usize,
    pub initial_state: Vec<Vec<f64>>,
    pub final_state: Vec<Vec<f64>>,
}

/// Cell sets the audit averages over.
struct Monitors {
    top: Vec<usize>,
    below: Vec<usize>,
    above: Vec<usize>,
    mid_height: f64,
}

fn monitors(mesh: &MshMesh) -> Result<Monitors> {
    let bulk = mesh
        .bulk
        .as_ref()
        .ok_or_else(|| Error::InvalidMesh("no bulk grid".into()))?;
    let bb = bulk.bounding_box();
    let top = (0..bulk.num_elements())
        .filter(|&e| {
            bulk.element_facets(e)
                .iter()
                .any(|&f| bulk.facet(f).is_boundary() && bulk.facet(f).marker == MARKER_TOP)
        })
        .collect();
    let (mut below, mut above) = (Vec::new(), Vec::new());
    if let Some(net) = &mesh.network {
        for (s, facet) in mesh.network_element_to_facet.iter().enumerate() {
            if net.mesh.element_marker(s) != TAG_BLOCKING {
                continue;
            }
            let Some(f) = facet else { continue };
            let fc = bulk.facet_center(*f);
            for &e in &bulk.facet(*f).elements {
                if bulk.element_center(e).y < fc.y {
                    below.push(e);
                } else {
                    above.push(e);
                }
            }
        }
    }
    Ok(Monitors {
        top,
        below,
        above,
        mid_height: 0.5 * (bb.min.y + bb.max.y),
    })
}

/// Restricts the network to the fractures active in `mode`.
fn select_fractures(full: &MshMesh, mode: FractureMode) -> Result<MshMesh> {
    let bulk = full
        .bulk
        .clone()
        .ok_or_else(|| Error::InvalidMesh("no bulk grid".into()))?;
    let mut lines = Vec::new();
    if let Some(net) = &full.network {
        for e in 0..net.mesh.num_elements() {
            let tag = net.mesh.element_marker(e);
            if mode.includes(tag) {
                let v = net.mesh.element(e);
                lines.push((
                    [
                        full.network_vertex_to_bulk[v[0]],
                        full.network_vertex_to_bulk[v[1]],
                    ],
                    tag,
                ));
            }
        }
    }
    MshMesh::from_bulk_and_lines(bulk, &lines)
}

fn load_mesh(p: &ParameterTree) -> Result<MshMesh> {
    match p.raw("Grid.File") {
        Some(path) => read_msh(&std::fs::read_to_string(path)?),
        None => read_msh(BUNDLED_MESH),
    }
}

/// Gas mass of a two-phase domain over a set of elements.
fn gas_mass(gg: &GridGeometry, model: &TwoP, u: &[f64], cells: impl Iterator<Item = usize>) -> f64 {
    cells
        .map(|e| {
            let m = model.params().material(e);
            let s = model.state(e, &u[2 * e..2 * e + 2]);
            m.aperture.unwrap_or(1.0) * m.porosity * s.rho_n * s.sn * gg.scv(e).volume
        })
        .sum()
}

fn mean_sn(u: &[f64], cells: &[usize]) -> f64 {
    if cells.is_empty() {
        return 0.0;
    }
    cells.iter().map(|&e| u[2 * e + 1]).sum::<f64>() / cells.len() as f64
}

pub fn run_fractured2p(p: &ParameterTree) -> Result<FracturedResult> {
    let setup = FracturedSetup::from_params(p)?;
    let out = OutputConfig::from_params(p, "fractured2p")?;
    let full = load_mesh(p)?;
    let mon = monitors(&full)?;
    let msh = select_fractures(&full, setup.mode)?;
    let bulk_mesh = Arc::new(msh.bulk.clone().expect("checked in select_fractures"));
    let bulk_gg = Arc::new(build_geometry(bulk_mesh.clone(), Scheme::Tpfa)?);
    let height = bulk_mesh.bounding_box().max.y;
    let g = gravity_vector(2);

    let rho_w = Fluid::water().density(0.0);
    let p_top = setup.top_pressure;
    let hydrostatic = move |y: f64| p_top + rho_w * GRAVITY * (height - y);
    let (pc, pw, sd) = (
        setup.patch_center,
        setup.patch_width,
        setup.boundary_saturation,
    );
    let bottom = bulk_mesh.bounding_box().min.y;
    let in_patch = move |x: Vec3| (x.x - pc).abs() < 0.5 * pw && (x.y - bottom).abs() < 1e-9;

    let matrix_problem = ProblemDefinition::new(2)
        .with_uniform_boundary(&[MARKER_LEFT, MARKER_RIGHT], BcKind::Dirichlet)
        .with_uniform_boundary(&[MARKER_BOTTOM, MARKER_TOP], BcKind::Neumann)
        .with_selector(move |m, x| {
            (m == MARKER_BOTTOM && in_patch(x)).then(|| vec![BcKind::Dirichlet; 2])
        })
        .with_dirichlet(move |x, _, out| {
            out[0] = hydrostatic(x.y);
            out[1] = if in_patch(x) { sd } else { 0.0 };
        })
        .with_initial(move |x, out| {
            out[0] = hydrostatic(x.y);
            out[1] = 0.0;
        });
    let matrix_params = SpatialParams::uniform(setup.matrix.clone(), bulk_gg.num_elements())?;
    let matrix = Arc::new(
        TwoP::new(
            Arc::new(matrix_params),
            Fluid::water(),
            Fluid::nitrogen(),
            matrix_problem,
        )?
        .with_gravity(g),
    );

    let mut domains = vec![Subdomain::new(bulk_gg.clone(), matrix.clone())];
    let mut fracture: Option<(Arc<GridGeometry>, Arc<TwoP>)> = None;
    let coupling: Arc<dyn CouplingManager> = match &msh.network {
        Some(net) => {
            let frac_gg = Arc::new(build_geometry(Arc::new(net.mesh.clone()), Scheme::Tpfa)?);
            let tags: Vec<i32> = net.mesh.element_markers().to_vec();
            let kinds: Vec<FractureKind> = tags
                .iter()
                .map(|&t| {
                    if t == TAG_BLOCKING {
                        FractureKind::Blocking
                    } else {
                        FractureKind::Conductive
                    }
                })
                .collect();
            let which: Vec<usize> = kinds
                .iter()
                .map(|k| usize::from(*k == FractureKind::Blocking))
                .collect();
            let frac_params = SpatialParams::new(
                vec![setup.conductive.clone(), setup.blocking.clone()],
                which,
            )?;
            let frac_problem = ProblemDefinition::new(2)
                .with_selector(|_, _| Some(vec![BcKind::Neumann; 2]))
                .with_initial(move |x, out| {
                    out[0] = hydrostatic(x.y);
                    out[1] = 0.0;
                });
            let frac_model = Arc::new(
                TwoP::new(
                    Arc::new(frac_params),
                    Fluid::water(),
                    Fluid::nitrogen(),
                    frac_problem,
                )?
                .with_gravity(g),
            );
            let fc = FacetCoupling::new(
                bulk_gg.clone(),
                matrix.clone(),
                frac_gg.clone(),
                frac_model.clone(),
                &msh.network_element_to_facet,
                kinds,
            )?
            .with_conductive_factor(setup.conductive_factor);
            domains.push(Subdomain::new(frac_gg.clone(), frac_model.clone()));
            fracture = Some((frac_gg, frac_model));
            Arc::new(fc)
        }
        None => Arc::new(NoCoupling),
    };

    let mut asm = Assembler::new(domains, coupling)?;
    let mut u0 = initial_solution(&bulk_gg, matrix.as_ref());
    if let Some((gg, model)) = &fracture {
        u0.extend(initial_solution(gg, model.as_ref()));
    }
    let newton = newton_config(p)?;
    let mut tl = time_loop(p, (10.0, 75000.0, 1000.0))?;

    let mut audit = AuditTable::new(&[
        "t",
        "dt",
        "newton",
        "retries",
        "gas_matrix",
        "gas_fracture",
        "gas_lower",
        "gas_upper",
        "sn_top_max",
        "sn_below_barrier",
        "sn_above_barrier",
    ]);
    let mut matrix_series = out.series(&out.name)?;
    let mut fracture_series = match fracture {
        Some(_) => out.series(&format!("{}_fracture", out.name))?,
        None => None,
    };
    let n_bulk = bulk_gg.num_dofs() * 2;
    let record = |audit: &mut AuditTable,
                  t: f64,
                  dt: f64,
                  newton: usize,
                  retries: usize,
                  u: &[f64]|
     -> Result<f64> {
        let (um, uf) = u.split_at(n_bulk);
        let cells = 0..bulk_gg.num_elements();
        let lower = gas_mass(
            &bulk_gg,
            &matrix,
            um,
            cells
                .clone()
                .filter(|&e| bulk_gg.scv(e).center.y < mon.mid_height),
        );
        let upper = gas_mass(
            &bulk_gg,
            &matrix,
            um,
            cells
                .clone()
                .filter(|&e| bulk_gg.scv(e).center.y >= mon.mid_height),
        );
        let frac = match &fracture {
            Some((gg, model)) => gas_mass(gg, model, uf, 0..gg.num_elements()),
            None => 0.0,
        };
        let top = mon.top.iter().map(|&e| um[2 * e + 1]).fold(0.0, f64::max);
        audit.push(vec![
            t,
            dt,
            newton as f64,
            retries as f64,
            lower + upper,
            frac,
            lower,
            upper,
            top,
            mean_sn(um, &mon.below),
            mean_sn(um, &mon.above),
        ])?;
        Ok(top)
    };
    let write_vtk = |ms: &mut Option<super::OutputSeries>,
                     fs: &mut Option<super::OutputSeries>,
                     u: &[f64]|
     -> Result<()> {
        let (um, uf) = u.split_at(n_bulk);
        if let Some(s) = ms.as_mut() {
            s.write(&bulk_gg, &split_fields(&["p_w", "S_n"], um))?;
        }
        if let (Some(s), Some((gg, _))) = (fs.as_mut(), &fracture) {
            s.write(gg, &split_fields(&["p_w", "S_n"], uf))?;
        }
        Ok(())
    };

    record(&mut audit, 0.0, 0.0, 0, 0, &u0)?;
    if out.vtk {
        write_vtk(&mut matrix_series, &mut fracture_series, &u0)?;
    }
    let state = RefCell::new(u0.clone());
    let mut arrival = None;
    let mut prev = (0.0, 0.0);
    let mut retries = 0;
    let mut steps = 0;
    tl.run_while(
        |t_new, dt| {
            let mut u = state.borrow_mut();
            asm.set_transient(t_new, dt, &u)?;
            Ok(newton_solve(&mut asm, &mut u, &newton)?.iterations)
        },
        |r| {
            out.report(r);
            let u = state.borrow();
            steps = r.step;
            retries += r.retries;
            let top = record(&mut audit, r.t, r.dt, r.newton_iterations, r.retries, &u)?;
            if arrival.is_none() && top >= setup.arrival_saturation {
                let (t0, s0) = prev;
                arrival = Some(t0 + (r.t - t0) * (setup.arrival_saturation - s0) / (top - s0));
            }
            prev = (r.t, top);
            let stop = setup.stop_at_arrival && arrival.is_some();
            if out.wants_vtk(r.step, stop) {
                write_vtk(&mut matrix_series, &mut fracture_series, &u)?;
            }
            Ok(!stop)
        },
    )?;
    out.write_audit(&audit)?;
    match arrival {
        Some(t) => println!("gas arrival at the top row: t={t}"),
        None => println!("no gas arrival at the top row"),
    }
    let final_u = state.into_inner();
    let split = |u: &[f64]| -> Vec<Vec<f64>> {
        let (a, b) = u.split_at(n_bulk);
        if b.is_empty() {
            vec![a.to_vec()]
        } else {
            vec![a.to_vec(), b.to_vec()]
        }
    };
    Ok(FracturedResult {
        audit,
        arrival_time: arrival,
        steps,
        retries,
        initial_state: split(&u0),
        final_state: split(&final_u),
    })
}
