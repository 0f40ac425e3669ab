use serde::{Deserialize, Serialize};

use super::element::{brick_conductivity, brick_lumped_capacity, face_mass, Integration};
use super::scenario::ThermalScenario;
use super::sparse::CsrMatrix;
use super::SolverError;
use crate::mesostructure::{Material, VoxelGrid};

const MM: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialProperties {
    /// kg/m³
    pub density: f64,
    /// J/(kg·K)
    pub specific_heat: f64,
    /// W/(m·K)
    pub conductivity: f64,
}

impl MaterialProperties {
    pub const PLA: Self = Self {
        density: 1240.0,
        specific_heat: 1800.0,
        conductivity: 0.13,
    };

    /// Still air near 300 K.
    pub const AIR: Self = Self {
        density: 1.2,
        specific_heat: 1005.0,
        conductivity: 0.026,
    };

    pub fn volumetric_heat_capacity(&self) -> f64 {
        self.density * self.specific_heat
    }

    pub fn validate(&self, name: &str) -> Result<(), String> {
        for (field, v) in [
            ("density", self.density),
            ("specific_heat", self.specific_heat),
            ("conductivity", self.conductivity),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name}.{field} must be > 0, got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Materials {
    pub pla: MaterialProperties,
    pub air: MaterialProperties,
}

impl Default for Materials {
    fn default() -> Self {
        Self {
            pla: MaterialProperties::PLA,
            air: MaterialProperties::AIR,
        }
    }
}

impl Materials {
    pub fn get(&self, m: Material) -> &MaterialProperties {
        match m {
            Material::Pla => &self.pla,
            Material::Air => &self.air,
        }
    }
}

/// Faces of the grid's bounding box. `Bottom` is the bed contact plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    XMin,
    XMax,
    YMin,
    YMax,
    Bottom,
    Top,
}

impl Face {
    pub const SIDES: [Face; 4] = [Face::XMin, Face::XMax, Face::YMin, Face::YMax];

    /// Outward unit normal.
    pub fn normal(self) -> [f64; 3] {
        match self {
            Face::XMin => [-1.0, 0.0, 0.0],
            Face::XMax => [1.0, 0.0, 0.0],
            Face::YMin => [0.0, -1.0, 0.0],
            Face::YMax => [0.0, 1.0, 0.0],
            Face::Bottom => [0.0, 0.0, -1.0],
            Face::Top => [0.0, 0.0, 1.0],
        }
    }

    /// Node quads (ordered around the perimeter) tiling this face, with the
    /// quad area in m².
    pub fn quads(self, grid: &VoxelGrid) -> (Vec<[usize; 4]>, f64) {
        let [nx, ny, nz] = grid.dims();
        let [dx, dy, dz] = grid.spacing().map(|d| d * MM);
        // axis normal to the face and the fixed node index along it
        let (axis, fixed) = match self {
            Face::XMin => (0, 0),
            Face::XMax => (0, nx),
            Face::YMin => (1, 0),
            Face::YMax => (1, ny),
            Face::Bottom => (2, 0),
            Face::Top => (2, nz),
        };
        let (u_axis, v_axis) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let cells = [nx, ny, nz];
        let h = [dx, dy, dz];
        let mut quads = Vec::with_capacity(cells[u_axis] * cells[v_axis]);
        let node = |u: usize, v: usize| {
            let mut ijk = [0usize; 3];
            ijk[axis] = fixed;
            ijk[u_axis] = u;
            ijk[v_axis] = v;
            grid.node_index(ijk[0], ijk[1], ijk[2])
        };
        for v in 0..cells[v_axis] {
            for u in 0..cells[u_axis] {
                quads.push([node(u, v), node(u + 1, v), node(u + 1, v + 1), node(u, v + 1)]);
            }
        }
        (quads, h[u_axis] * h[v_axis])
    }

    /// Nodes on this face.
    pub fn nodes(self, grid: &VoxelGrid) -> Vec<usize> {
        let mut nodes: Vec<usize> = self.quads(grid).0.into_iter().flatten().collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convection {
    pub face: Face,
    /// W/(m²·K)
    pub h: f64,
    /// °C
    pub ambient: f64,
}

/// Semi-discrete heat equation `C dT/dt + S T = F` on the nodes of a grid,
/// where `S` is conduction plus convective face terms. Nodes may carry a
/// prescribed temperature, eliminated when the system is solved.
#[derive(Debug, Clone)]
pub struct ThermalSystem {
    grid: VoxelGrid,
    conductance: CsrMatrix,
    capacity: Vec<f64>,
    load: Vec<f64>,
    fixed: Vec<Option<f64>>,
    convection: Vec<Convection>,
    heat_source: f64,
    integration: Integration,
}

/// Conduction and lumped capacity for `grid`; no boundary terms yet.
pub fn assemble(grid: &VoxelGrid, materials: &Materials) -> ThermalSystem {
    assemble_with_source(grid, materials, 0.0)
}

/// As [`assemble`], with a uniform volumetric source `q_vol` (W/m³) in PLA cells.
pub fn assemble_with_source(grid: &VoxelGrid, materials: &Materials, q_vol: f64) -> ThermalSystem {
    assemble_with(grid, materials, q_vol, Integration::default())
}

/// As [`assemble_with_source`], with an explicit quadrature rule. Convective
/// faces added later use the same rule.
pub fn assemble_with(grid: &VoxelGrid, materials: &Materials, q_vol: f64, rule: Integration) -> ThermalSystem {
    let h = grid.spacing().map(|d| d * MM);
    let volume = h[0] * h[1] * h[2];
    let ke = [
        brick_conductivity(materials.air.conductivity, h, rule),
        brick_conductivity(materials.pla.conductivity, h, rule),
    ];
    let ce = [
        brick_lumped_capacity(materials.air.volumetric_heat_capacity(), h),
        brick_lumped_capacity(materials.pla.volumetric_heat_capacity(), h),
    ];
    let n = grid.node_count();
    let mut conductance = CsrMatrix::structured(grid.node_dims());
    let mut capacity = vec![0.0; n];
    let mut load = vec![0.0; n];
    let [nx, ny, nz] = grid.dims();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let mat = grid.material_at(i, j, k);
                let m = mat.code() as usize;
                let nodes: [usize; 8] = std::array::from_fn(|l| {
                    grid.node_index(i + (l & 1), j + ((l >> 1) & 1), k + (l >> 2))
                });
                for a in 0..8 {
                    for b in 0..8 {
                        conductance.add(nodes[a], nodes[b], ke[m][a][b]);
                    }
                    capacity[nodes[a]] += ce[m][a];
                    if mat == Material::Pla && q_vol != 0.0 {
                        load[nodes[a]] += q_vol * volume / 8.0;
                    }
                }
            }
        }
    }
    ThermalSystem {
        grid: grid.clone(),
        conductance,
        capacity,
        load,
        fixed: vec![None; n],
        convection: Vec::new(),
        heat_source: q_vol,
        integration: rule,
    }
}

impl ThermalSystem {
    pub fn grid(&self) -> &VoxelGrid {
        &self.grid
    }

    pub fn node_count(&self) -> usize {
        self.capacity.len()
    }

    /// Conduction plus convective face matrix.
    pub fn conductance(&self) -> &CsrMatrix {
        &self.conductance
    }

    pub fn capacity(&self) -> &[f64] {
        &self.capacity
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    pub fn fixed(&self) -> &[Option<f64>] {
        &self.fixed
    }

    pub fn has_constraints(&self) -> bool {
        self.fixed.iter().any(Option::is_some)
    }

    pub fn convection(&self) -> &[Convection] {
        &self.convection
    }

    pub fn integration(&self) -> Integration {
        self.integration
    }

    /// Prescribe `value` on the bed contact face.
    pub fn apply_dirichlet(&mut self, bed_temperature: f64) {
        let nodes = Face::Bottom.nodes(&self.grid);
        self.fix_nodes(&nodes, bed_temperature);
    }

    pub fn fix_nodes(&mut self, nodes: &[usize], value: f64) {
        for &n in nodes {
            self.fixed[n] = Some(value);
        }
    }

    /// Convective exchange `h (T − ambient)` over one face.
    pub fn add_convection(&mut self, face: Face, h: f64, ambient: f64) {
        if h == 0.0 {
            return;
        }
        let (quads, area) = face.quads(&self.grid);
        let m = face_mass(area, self.integration);
        for q in &quads {
            for a in 0..4 {
                for b in 0..4 {
                    self.conductance.add(q[a], q[b], h * m[a][b]);
                }
                self.load[q[a]] += h * ambient * area / 4.0;
            }
        }
        self.convection.push(Convection { face, h, ambient });
    }

    /// Side faces exchange with `side_ambient`, the top with `top_ambient`.
    pub fn apply_robin(&mut self, scenario: &ThermalScenario) {
        for face in Face::SIDES {
            self.add_convection(face, scenario.h, scenario.side_ambient);
        }
        self.add_convection(Face::Top, scenario.h, scenario.top_ambient);
    }

    /// Net heat flow (W) entering through prescribed-temperature nodes.
    pub fn constrained_heat_flow(&self, temperatures: &[f64]) -> f64 {
        let mut st = vec![0.0; temperatures.len()];
        self.conductance.mul_vec(temperatures, &mut st);
        self.fixed
            .iter()
            .enumerate()
            .filter(|(_, f)| f.is_some())
            .map(|(i, _)| st[i] - self.load[i])
            .sum()
    }

    /// Heat flow (W) leaving through convective faces, integrated face by face.
    pub fn convective_heat_flow(&self, temperatures: &[f64]) -> f64 {
        self.convection
            .iter()
            .map(|c| {
                let (quads, area) = c.face.quads(&self.grid);
                quads
                    .iter()
                    .map(|q| {
                        let mean = q.iter().map(|&n| temperatures[n]).sum::<f64>() / 4.0;
                        c.h * area * (mean - c.ambient)
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    /// Total volumetric heat generation (W).
    pub fn generated_heat(&self) -> f64 {
        self.heat_source * self.grid.count(Material::Pla) as f64 * self.grid.cell_volume() * MM.powi(3)
    }
}

/// Conduction, bed temperature and two-zone convection for `scenario`.
pub fn build_system(grid: &VoxelGrid, materials: &Materials, scenario: &ThermalScenario) -> ThermalSystem {
    build_system_with(grid, materials, scenario, Integration::default())
}

pub fn build_system_with(
    grid: &VoxelGrid,
    materials: &Materials,
    scenario: &ThermalScenario,
    rule: Integration,
) -> ThermalSystem {
    let mut system = assemble_with(grid, materials, scenario.q_vol, rule);
    system.apply_dirichlet(scenario.bed_temperature);
    system.apply_robin(scenario);
    system
}

/// Error for a steady problem that has neither prescribed temperatures nor
/// convective exchange.
pub(crate) fn check_not_singular(system: &ThermalSystem) -> Result<(), SolverError> {
    if system.has_constraints() || system.convection.iter().any(|c| c.h > 0.0) {
        Ok(())
    } else {
        Err(SolverError::Singular(
            "no prescribed bed temperature and no convective face with h > 0".into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesostructure::FilamentSection;
    use crate::mesostructure::build_continuum_grid;

    fn one_cell() -> VoxelGrid {
        build_continuum_grid(0.45, 0.45, 0.2, &FilamentSection::default()).unwrap()
    }

    #[test]
    fn constant_field_has_no_flux() {
        let sys = assemble(&one_cell(), &Materials::default());
        let mut y = vec![0.0; 8];
        sys.conductance().mul_vec(&[37.0; 8], &mut y);
        assert!(y.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn single_cell_capacity() {
        let sys = assemble(&one_cell(), &Materials::default());
        let total: f64 = sys.capacity().iter().sum();
        let expected = 1240.0 * 1800.0 * 0.45e-3 * 0.45e-3 * 0.2e-3;
        assert!((total - expected).abs() < 1e-12 * expected);
        assert!((total - 9.04e-5).abs() < 0.005e-5);
        assert!(sys.capacity().iter().all(|&c| c > 0.0));
    }

    #[test]
    fn conductance_is_symmetric() {
        let g = build_continuum_grid(1.5, 1.0, 0.6, &FilamentSection::default()).unwrap();
        let mut sys = assemble(&g, &Materials::default());
        sys.add_convection(Face::Top, 25.0, 27.0);
        sys.add_convection(Face::XMin, 25.0, 56.0);
        let a = sys.conductance();
        for r in 0..a.n() {
            for (c, v) in a.row(r) {
                assert!((v - a.get(c, r)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_h_leaves_system_unchanged() {
        let g = one_cell();
        let base = assemble(&g, &Materials::default());
        let mut sys = base.clone();
        sys.apply_robin(&ThermalScenario {
            h: 0.0,
            ..ThermalScenario::default()
        });
        assert_eq!(sys.conductance(), base.conductance());
        assert_eq!(sys.load(), base.load());
    }

    #[test]
    fn face_quads_cover_area() {
        let g = build_continuum_grid(3.0, 2.0, 1.0, &FilamentSection::default()).unwrap();
        let e = g.extent();
        for (face, expect) in [
            (Face::Top, e[0] * e[1]),
            (Face::XMin, e[1] * e[2]),
            (Face::YMax, e[0] * e[2]),
        ] {
            let (q, a) = face.quads(&g);
            assert!((q.len() as f64 * a - expect * 1e-6).abs() < 1e-15);
        }
        assert_eq!(Face::Bottom.nodes(&g).len(), (g.nx() + 1) * (g.ny() + 1));
        assert_eq!(Face::Top.normal(), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn singular_detection() {
        let sys = assemble(&one_cell(), &Materials::default());
        assert!(check_not_singular(&sys).is_err());
        let mut sys2 = sys.clone();
        sys2.apply_dirichlet(50.0);
        assert!(check_not_singular(&sys2).is_ok());
    }
}
