use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fvgeom::{GridGeometry, Scheme, SubControlVolumeFace};
use crate::models::{half_transmissibility, TwoP};
use crate::solvers::{CouplingContext, CouplingManager};

/// Hydraulic role of a fracture element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FractureKind {
    /// Pressure continuity, realized with an interface transmissibility
    /// `conductive_factor` times the matrix half transmissibility.
    Conductive,
    /// Two-point flux across half the aperture with the fracture normal
    /// permeability.
    Blocking,
}

/// Conforming matrix-fracture coupling for two-phase flow on cell-centered
/// grids. Domain 0 is the matrix, domain 1 the fracture network whose
/// elements coincide with matrix facets.
///
/// Each matrix face on a fracture is replaced by an exchange flux per phase
/// `F = t lambda_up (psi_cell - psi_frac)` with the series transmissibility
/// of the matrix half cell and the fracture half aperture; the fracture gets
/// the sum of both sides as a source.
pub struct FacetCoupling {
    bulk: Arc<GridGeometry>,
    bulk_model: Arc<TwoP>,
    frac: Arc<GridGeometry>,
    frac_model: Arc<TwoP>,
    kinds: Vec<FractureKind>,
    facet_to_frac: Vec<Option<usize>>,
    /// Per matrix element: (scvf, fracture element).
    bulk_faces: Vec<Vec<(usize, usize)>>,
    /// Per fracture element: matrix scvfs on it.
    frac_faces: Vec<Vec<usize>>,
    bulk_stencil: Vec<Vec<usize>>,
    frac_stencil: Vec<Vec<usize>>,
    conductive_factor: f64,
}

impl FacetCoupling {
    /// `element_to_facet[f]` is the matrix facet of fracture element `f`.
    pub fn new(
        bulk: Arc<GridGeometry>,
        bulk_model: Arc<TwoP>,
        frac: Arc<GridGeometry>,
        frac_model: Arc<TwoP>,
        element_to_facet: &[Option<usize>],
        kinds: Vec<FractureKind>,
    ) -> Result<Self> {
        if bulk.scheme() != Scheme::Tpfa || frac.scheme() != Scheme::Tpfa {
            return Err(Error::InvalidArgument(
                "facet coupling is implemented for tpfa only".into(),
            ));
        }
        let nf = frac.num_elements();
        if element_to_facet.len() != nf || kinds.len() != nf {
            return Err(Error::LengthMismatch {
                what: "fracture element map",
                expected: nf,
                got: element_to_facet.len().min(kinds.len()),
            });
        }
        let mesh = bulk.mesh();
        let mut facet_to_frac = vec![None; mesh.num_facets()];
        for (f, facet) in element_to_facet.iter().enumerate() {
            let facet = facet.ok_or_else(|| {
                Error::InvalidMesh(format!(
                    "fracture element {f} does not lie on a matrix facet"
                ))
            })?;
            if mesh.facet(facet).is_boundary() {
                return Err(Error::InvalidMesh(format!(
                    "fracture element {f} lies on the domain boundary"
                )));
            }
            if frac_model.params().material(f).aperture.is_none() {
                return Err(Error::InvalidArgument(format!(
                    "fracture element {f} has no aperture"
                )));
            }
            facet_to_frac[facet] = Some(f);
        }
        let mut bulk_faces = vec![Vec::new(); bulk.num_elements()];
        let mut frac_faces = vec![Vec::new(); nf];
        for scvf in bulk.scvfs() {
            if let Some(f) = scvf.facet.and_then(|fa| facet_to_frac[fa]) {
                bulk_faces[scvf.element].push((scvf.index, f));
                frac_faces[f].push(scvf.index);
            }
        }
        let mut bulk_stencil: Vec<Vec<usize>> = bulk_faces
            .iter()
            .map(|v| v.iter().map(|p| p.1).collect())
            .collect();
        let mut frac_stencil: Vec<Vec<usize>> = frac_faces
            .iter()
            .map(|v| v.iter().map(|&s| bulk.scvf(s).element).collect())
            .collect();
        for v in bulk_stencil.iter_mut().chain(frac_stencil.iter_mut()) {
            v.sort_unstable();
            v.dedup();
        }
        Ok(FacetCoupling {
            bulk,
            bulk_model,
            frac,
            frac_model,
            kinds,
            facet_to_frac,
            bulk_faces,
            frac_faces,
            bulk_stencil,
            frac_stencil,
            conductive_factor: 1e4,
        })
    }

    pub fn with_conductive_factor(mut self, factor: f64) -> Self {
        self.conductive_factor = factor;
        self
    }

    pub fn kind(&self, frac_element: usize) -> FractureKind {
        self.kinds[frac_element]
    }

    /// Series transmissibility between a matrix cell (through `scvf`) and
    /// the fracture element `f`.
    pub fn interface_transmissibility(&self, scvf: &SubControlVolumeFace, f: usize) -> Result<f64> {
        let e = scvf.element;
        let xc = self.bulk.scv(e).center;
        let k = &self.bulk_model.params().material(e).permeability;
        let t_cell = half_transmissibility(
            scvf.area,
            scvf.normal,
            k,
            (scvf.center - xc).dot(scvf.normal),
        )?;
        let mat = self.frac_model.params().material(f);
        let t_frac = match self.kinds[f] {
            FractureKind::Conductive => self.conductive_factor * t_cell,
            FractureKind::Blocking => {
                let a = mat.aperture.expect("checked at construction");
                scvf.area * mat.permeability.quad_form(scvf.normal) / (0.5 * a)
            }
        };
        if t_cell + t_frac == 0.0 {
            return Ok(0.0);
        }
        Ok(t_cell * t_frac / (t_cell + t_frac))
    }

    /// Phase fluxes from the matrix cell into the fracture through `scvf`.
    pub fn interface_flux(&self, ctx: &CouplingContext, scvf: usize, f: usize) -> Result<[f64; 2]> {
        let face = self.bulk.scvf(scvf);
        let e = face.element;
        let t = self.interface_transmissibility(face, f)?;
        let sc = self.bulk_model.state(e, ctx.vars(0, e));
        let sf = self.frac_model.state(f, ctx.vars(1, f));
        let g = self.bulk_model.gravity();
        let xc = self.bulk.scv(e).center;
        let xf = self.frac.scv(f).center;
        let mut out = [0.0; 2];
        for (phase, o) in out.iter_mut().enumerate() {
            let (pc, pf, rc, rf, mc, mf) = if phase == 0 {
                (sc.pw, sf.pw, sc.rho_w, sf.rho_w, sc.mob_w, sf.mob_w)
            } else {
                (sc.pn, sf.pn, sc.rho_n, sf.rho_n, sc.mob_n, sf.mob_n)
            };
            let rho = 0.5 * (rc + rf);
            let dpsi = (pc - rho * g.dot(xc)) - (pf - rho * g.dot(xf));
            let lambda = if dpsi >= 0.0 { rc * mc } else { rf * mf };
            *o = t * lambda * dpsi;
        }
        Ok(out)
    }

    /// Total exchange into each fracture element.
    pub fn fracture_sources(&self, ctx: &CouplingContext) -> Result<Vec<[f64; 2]>> {
        let mut out = vec![[0.0; 2]; self.frac.num_elements()];
        for (f, faces) in self.frac_faces.iter().enumerate() {
            for &s in faces {
                let q = self.interface_flux(ctx, s, f)?;
                out[f][0] += q[0];
                out[f][1] += q[1];
            }
        }
        Ok(out)
    }
}

impl CouplingManager for FacetCoupling {
    fn stencil(&self, domain: usize, element: usize, other: usize) -> &[usize] {
        match (domain, other) {
            (0, 1) => &self.bulk_stencil[element],
            (1, 0) => &self.frac_stencil[element],
            _ => &[],
        }
    }

    fn skip_scvf(&self, domain: usize, scvf: &SubControlVolumeFace) -> bool {
        domain == 0
            && !scvf.boundary
            && scvf
                .facet
                .is_some_and(|fa| self.facet_to_frac[fa].is_some())
    }

    fn add_coupling(
        &self,
        ctx: &CouplingContext,
        domain: usize,
        element: usize,
        out: &mut [f64],
    ) -> Result<()> {
        match domain {
            0 => {
                for &(s, f) in &self.bulk_faces[element] {
                    let q = self.interface_flux(ctx, s, f)?;
                    out[0] += q[0];
                    out[1] += q[1];
                }
            }
            1 => {
                for &s in &self.frac_faces[element] {
                    let q = self.interface_flux(ctx, s, element)?;
                    out[0] -= q[0];
                    out[1] -= q[1];
                }
            }
            _ => {}
        }
        Ok(())
    }
}
