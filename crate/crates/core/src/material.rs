//! Constitutive relations and material parameter fields.

use crate::error::{Error, Result};
use crate::geometry::Mat3;

/// Universal gas constant in J/(mol K).
pub const GAS_CONSTANT: f64 = 8.314462618;

/// Van Genuchten retention curve with Mualem relative permeabilities.
///
/// The capillary pressure is continued linearly (tangent) below
/// `se_low` and by a straight line to zero above `se_high`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VanGenuchten {
    pub alpha: f64,
    pub n: f64,
    pub swr: f64,
    pub se_low: f64,
    pub se_high: f64,
}

impl VanGenuchten {
    pub fn new(alpha: f64, n: f64, swr: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(n > 1.0) || !(0.0..1.0).contains(&swr) {
            return Err(Error::InvalidArgument(format!(
                "van Genuchten parameters alpha={alpha}, n={n}, swr={swr}"
            )));
        }
        Ok(VanGenuchten {
            alpha,
            n,
            swr,
            se_low: 0.01,
            se_high: 0.99,
        })
    }

    pub fn with_regularization(mut self, se_low: f64, se_high: f64) -> Result<Self> {
        if !(0.0 < se_low && se_low < se_high && se_high <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "regularization thresholds {se_low}, {se_high}"
            )));
        }
        self.se_low = se_low;
        self.se_high = se_high;
        Ok(self)
    }

    pub fn m(&self) -> f64 {
        1.0 - 1.0 / self.n
    }

    pub fn effective_saturation(&self, sw: f64) -> f64 {
        (sw - self.swr) / (1.0 - self.swr)
    }

    fn pc_raw(&self, se: f64) -> f64 {
        (se.powf(-1.0 / self.m()) - 1.0).powf(1.0 / self.n) / self.alpha
    }

    fn dpc_dse_raw(&self, se: f64) -> f64 {
        let m = self.m();
        let inner = se.powf(-1.0 / m) - 1.0;
        -(1.0 / (self.alpha * self.n * m))
            * inner.powf(1.0 / self.n - 1.0)
            * se.powf(-1.0 / m - 1.0)
    }

    /// Capillary pressure in Pa.
    pub fn pc(&self, sw: f64) -> f64 {
        let se = self.effective_saturation(sw);
        if se < self.se_low {
            self.pc_raw(self.se_low) + self.dpc_dse_raw(self.se_low) * (se - self.se_low)
        } else if se > self.se_high {
            if self.se_high >= 1.0 {
                return 0.0;
            }
            self.pc_raw(self.se_high) * (1.0 - se) / (1.0 - self.se_high)
        } else {
            self.pc_raw(se)
        }
    }

    /// Inverse of [`pc`](Self::pc) for `pc > 0`; returns 1 for `pc <= 0`.
    pub fn sw_from_pc(&self, pc: f64) -> f64 {
        if pc <= 0.0 {
            return 1.0;
        }
        let p_high = if self.se_high < 1.0 {
            self.pc_raw(self.se_high)
        } else {
            0.0
        };
        let p_low = self.pc_raw(self.se_low);
        let se = if pc < p_high {
            1.0 - pc / p_high * (1.0 - self.se_high)
        } else if pc > p_low {
            self.se_low + (pc - p_low) / self.dpc_dse_raw(self.se_low)
        } else {
            (1.0 + (self.alpha * pc).powf(self.n)).powf(-self.m())
        };
        self.swr + se * (1.0 - self.swr)
    }

    /// Wetting-phase relative permeability, clamped to [0, 1].
    pub fn krw(&self, sw: f64) -> f64 {
        let se = self.effective_saturation(sw).clamp(0.0, 1.0);
        let m = self.m();
        let r = se.sqrt() * (1.0 - (1.0 - se.powf(1.0 / m)).powf(m)).powi(2);
        r.clamp(0.0, 1.0)
    }

    /// Non-wetting-phase relative permeability, clamped to [0, 1].
    pub fn krn(&self, sw: f64) -> f64 {
        let se = self.effective_saturation(sw).clamp(0.0, 1.0);
        let m = self.m();
        let r = (1.0 - se).sqrt() * (1.0 - se.powf(1.0 / m)).powf(2.0 * m);
        r.clamp(0.0, 1.0)
    }
}

/// Intrinsic permeability `R(phi)^-1 diag(kh, kh/xi) R(phi)` with `phi` in
/// degrees.
pub fn rotated_permeability(kh: f64, xi: f64, phi_deg: f64) -> Result<Mat3> {
    if !(kh > 0.0) || !(xi > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "permeability kh={kh} and anisotropy ratio {xi} must be positive"
        )));
    }
    let kv = kh / xi;
    let (s, c) = phi_deg.to_radians().sin_cos();
    let xy = c * s * (kv - kh);
    Ok(Mat3([
        [kh * c * c + kv * s * s, xy, 0.0],
        [xy, kh * s * s + kv * c * c, 0.0],
        [0.0, 0.0, 0.0],
    ]))
}

pub fn isotropic_permeability(k: f64) -> Mat3 {
    Mat3([[k, 0.0, 0.0], [0.0, k, 0.0], [0.0, 0.0, k]])
}

/// Checks symmetry and positive definiteness of the in-plane part.
pub fn validate_permeability(k: &Mat3) -> Result<()> {
    let m = &k.0;
    let scale = m[0][0].abs().max(m[1][1].abs());
    if (m[0][1] - m[1][0]).abs() > 1e-15 * scale {
        return Err(Error::InvalidArgument(
            "permeability tensor is not symmetric".into(),
        ));
    }
    if !(m[0][0] > 0.0) || !(m[0][0] * m[1][1] - m[0][1] * m[1][0] > 0.0) {
        return Err(Error::InvalidArgument(
            "permeability tensor is not positive definite".into(),
        ));
    }
    Ok(())
}

/// Constant fluid properties or an ideal gas.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Fluid {
    Constant {
        density: f64,
        viscosity: f64,
        molar_density: f64,
        diffusion: f64,
    },
    IdealGas {
        molar_mass: f64,
        temperature: f64,
        viscosity: f64,
    },
}

impl Fluid {
    pub fn water() -> Fluid {
        Fluid::Constant {
            density: 1000.0,
            viscosity: 1e-3,
            molar_density: 5.55e4,
            diffusion: 2.3e-9,
        }
    }

    pub fn nitrogen() -> Fluid {
        Fluid::IdealGas {
            molar_mass: 0.028,
            temperature: 293.15,
            viscosity: 1.75e-5,
        }
    }

    /// Mass density at pressure `p` in kg/m^3.
    pub fn density(&self, p: f64) -> f64 {
        match *self {
            Fluid::Constant { density, .. } => density,
            Fluid::IdealGas {
                molar_mass,
                temperature,
                ..
            } => p * molar_mass / (GAS_CONSTANT * temperature),
        }
    }

    pub fn viscosity(&self) -> f64 {
        match *self {
            Fluid::Constant { viscosity, .. } | Fluid::IdealGas { viscosity, .. } => viscosity,
        }
    }

    /// Molar density at pressure `p` in mol/m^3.
    pub fn molar_density(&self, p: f64) -> f64 {
        match *self {
            Fluid::Constant { molar_density, .. } => molar_density,
            Fluid::IdealGas { temperature, .. } => p / (GAS_CONSTANT * temperature),
        }
    }

    /// Binary diffusion coefficient of a dissolved component in m^2/s.
    pub fn diffusion(&self) -> f64 {
        match *self {
            Fluid::Constant { diffusion, .. } => diffusion,
            Fluid::IdealGas { .. } => 0.0,
        }
    }

    /// Molar mass implied by the constant densities, kg/mol.
    pub fn molar_mass(&self) -> f64 {
        match *self {
            Fluid::Constant {
                density,
                molar_density,
                ..
            } => density / molar_density,
            Fluid::IdealGas { molar_mass, .. } => molar_mass,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Fluid::Constant {
                density,
                viscosity,
                molar_density,
                diffusion,
            } => density > 0.0 && viscosity > 0.0 && molar_density > 0.0 && diffusion >= 0.0,
            Fluid::IdealGas {
                molar_mass,
                temperature,
                viscosity,
            } => molar_mass > 0.0 && temperature > 0.0 && viscosity > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid fluid {self:?}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Material {
    pub porosity: f64,
    pub permeability: Mat3,
    pub vg: Option<VanGenuchten>,
    pub aperture: Option<f64>,
}

impl Material {
    pub fn new(porosity: f64, permeability: Mat3) -> Self {
        Material {
            porosity,
            permeability,
            vg: None,
            aperture: None,
        }
    }

    pub fn with_vg(mut self, vg: VanGenuchten) -> Self {
        self.vg = Some(vg);
        self
    }

    pub fn with_aperture(mut self, a: f64) -> Self {
        self.aperture = Some(a);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.porosity > 0.0 && self.porosity <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "porosity {}",
                self.porosity
            )));
        }
        if let Some(a) = self.aperture {
            if !(a > 0.0) {
                return Err(Error::InvalidArgument(format!("aperture {a}")));
            }
        }
        validate_permeability(&self.permeability)
    }
}

/// Per-element material assignment.
#[derive(Clone, Debug)]
pub struct SpatialParams {
    materials: Vec<Material>,
    element_material: Vec<usize>,
}

impl SpatialParams {
    pub fn uniform(material: Material, num_elements: usize) -> Result<Self> {
        Self::new(vec![material], vec![0; num_elements])
    }

    pub fn new(materials: Vec<Material>, element_material: Vec<usize>) -> Result<Self> {
        for m in &materials {
            m.validate()?;
        }
        if let Some(&i) = element_material.iter().find(|&&i| i >= materials.len()) {
            return Err(Error::OutOfRange {
                what: "material",
                index: i,
                len: materials.len(),
            });
        }
        Ok(SpatialParams {
            materials,
            element_material,
        })
    }

    pub fn material(&self, element: usize) -> &Material {
        &self.materials[self.element_material[element]]
    }

    pub fn materials(&self) -> &[Material] {
        &self.materials
    }

    pub fn num_elements(&self) -> usize {
        self.element_material.len()
    }
}
