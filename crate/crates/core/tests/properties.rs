//! Randomized checks of the structural invariants across modules.

use std::f64::consts::PI;

use helmab_core::analysis::trunc_coeffs;
use helmab_core::assembly::{assemble, solve_problem, PlaneWaveConvention};
use helmab_core::bubble::{build_submesh, condense_element, interior_count};
use helmab_core::fdstencil::{fd2d_sevenpoint, LatticeDomain, StencilScheme};
use helmab_core::linalg::{sparse_solve, DenseLu};
use helmab_core::mesh::io::{read_mesh, write_mesh};
use helmab_core::mesh::lattice::{Lattice, LatticeShape};
use helmab_core::mesh::{lattice_mesh, structured_quad_mesh, QuadRegion, SideMarkers};
use helmab_core::verify::{error_inf, ExactSolution, SampleSet};
use helmab_core::{
    BoundaryMarker, Complex64, DirichletData, ElementGeometry, ElementKind, Method, MuTable,
    ProblemSpec, Source,
};
use proptest::prelude::*;

fn shape() -> impl Strategy<Value = LatticeShape> {
    prop_oneof![
        (2usize..12).prop_map(|n| LatticeShape::Triangle { n }),
        (1usize..10, 1usize..10).prop_map(|(nx, ny)| LatticeShape::Parallelogram { nx, ny }),
        (1usize..6).prop_map(|radius| LatticeShape::Hexagon { radius }),
    ]
}

fn shape_area(shape: LatticeShape, h: f64) -> f64 {
    let s3 = 3f64.sqrt();
    match shape {
        LatticeShape::Triangle { n } => s3 / 4.0 * (n as f64 * h).powi(2),
        LatticeShape::Parallelogram { nx, ny } => s3 / 2.0 * nx as f64 * ny as f64 * h * h,
        LatticeShape::Hexagon { radius } => 3.0 * s3 / 2.0 * (radius as f64 * h).powi(2),
    }
}

fn triangle() -> impl Strategy<Value = Vec<[f64; 2]>> {
    // counter-clockwise triangles bounded away from degeneracy
    (0.2f64..1.5, 0.0f64..2.0 * PI, 0.4f64..1.2, 0.5f64..2.5, -3.0f64..3.0, -3.0f64..3.0)
        .prop_map(|(r, phi, s, angle, x0, y0)| {
            let a = [x0, y0];
            let b = [x0 + r * phi.cos(), y0 + r * phi.sin()];
            let c = [
                x0 + s * r * (phi + angle).cos(),
                y0 + s * r * (phi + angle).sin(),
            ];
            vec![a, b, c]
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lattice_mesh_area_and_orientation(shape in shape(), h in 0.01f64..2.0) {
        let mesh = lattice_mesh(shape, h, [0.3, -0.7], |_, _| BoundaryMarker::Dirichlet).unwrap();
        let exact = shape_area(shape, h);
        prop_assert!((mesh.total_area() - exact).abs() <= 1e-10 * exact);
        for e in 0..mesh.n_elements() {
            prop_assert!(mesh.element_geometry(e).unwrap().area > 0.0);
        }
    }

    #[test]
    fn lattice_interior_nodes_have_six_elements(shape in shape()) {
        let lattice = Lattice::new(shape, 1.0, [0.0, 0.0]).unwrap();
        let mesh = lattice.to_mesh(|_, _| BoundaryMarker::Dirichlet).unwrap();
        let mut incident = vec![0usize; mesh.n_nodes()];
        for el in mesh.elements() {
            for &k in el {
                incident[k] += 1;
            }
        }
        for k in (0..lattice.len()).filter(|&k| lattice.is_interior(k)) {
            prop_assert_eq!(incident[k], 6);
        }
    }

    #[test]
    fn mesh_text_round_trip(shape in shape(), h in 1e-3f64..10.0, x0 in -5.0f64..5.0) {
        let mesh = lattice_mesh(shape, h, [x0, 0.1], |a, _| {
            if a[1] > 0.1 + 1e-12 { BoundaryMarker::Neumann } else { BoundaryMarker::Dirichlet }
        })
        .unwrap();
        let mut buf = Vec::new();
        write_mesh(&mesh, &mut buf).unwrap();
        let back = read_mesh(buf.as_slice()).unwrap();
        prop_assert_eq!(back.nodes(), mesh.nodes());
        prop_assert_eq!(back.connectivity(), mesh.connectivity());
        prop_assert_eq!(back.boundary_edges(), mesh.boundary_edges());
    }

    #[test]
    fn quad_mesh_area(nx in 1usize..8, ny in 1usize..8, h in 0.05f64..1.0) {
        let region = QuadRegion::Rectangle {
            origin: [0.0, 0.0],
            width: nx as f64 * h,
            height: ny as f64 * h,
        };
        let mesh = structured_quad_mesh(&region, h, SideMarkers::all(BoundaryMarker::Dirichlet)).unwrap();
        let exact = (nx * ny) as f64 * h * h;
        prop_assert!((mesh.total_area() - exact).abs() <= 1e-10 * exact);
    }

    #[test]
    fn equilateral_medians(h in 1e-4f64..100.0, phi in 0.0f64..2.0 * PI, x0 in -10.0f64..10.0) {
        let v: Vec<[f64; 2]> = (0..3)
            .map(|k| {
                let t = phi + 2.0 * PI * k as f64 / 3.0;
                let r = h / 3f64.sqrt();
                [x0 + r * t.cos(), r * t.sin()]
            })
            .collect();
        let g = ElementGeometry::from_vertices(ElementKind::Triangle, v);
        for m in g.medians.unwrap() {
            prop_assert!((m - 3f64.sqrt() / 2.0 * h).abs() <= 1e-12 * h);
        }
        prop_assert!(g.area > 0.0 && g.h_char > 0.0);
    }

    #[test]
    fn submesh_counts_follow_formula(n_s in 3usize..=20, v in triangle()) {
        let tri = ElementGeometry::from_vertices(ElementKind::Triangle, v);
        let sub = build_submesh(&tri, n_s).unwrap();
        prop_assert_eq!(sub.n_interior, interior_count(ElementKind::Triangle, n_s));
        prop_assert_eq!(sub.n_interior, n_s * (n_s + 1) / 2 - 3 * (n_s - 1));
        let quad = ElementGeometry::from_vertices(
            ElementKind::Quad,
            vec![[0.0, 0.0], [1.0, 0.1], [1.2, 1.0], [-0.1, 0.9]],
        );
        prop_assert_eq!(build_submesh(&quad, n_s).unwrap().n_interior, (n_s - 2) * (n_s - 2));
    }

    #[test]
    fn bubble_mass_rotation_equivariance(v in triangle(), ch in 0.1f64..1.0, shift in 1usize..3) {
        let g = ElementGeometry::from_vertices(ElementKind::Triangle, v);
        let c = ch / g.h_char;
        let mus = [5.4, 5.5, 5.6];
        let a = condense_element(&g, c, &mus, 10, &Source::Zero).unwrap();
        let r = g.rotated(shift);
        let rmus: Vec<f64> = (0..3).map(|i| mus[(i + shift) % 3]).collect();
        let b = condense_element(&r, c, &rmus, 10, &Source::Zero).unwrap();
        let scale = a.bubble_mass.norm_inf();
        for i in 0..3 {
            for j in 0..3 {
                let d = b.bubble_mass[(i, j)] - a.bubble_mass[((i + shift) % 3, (j + shift) % 3)];
                prop_assert!(d.norm() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn linear_matrices_symmetric_and_real_bubbles(v in triangle(), ch in 0.1f64..1.5) {
        let g = ElementGeometry::from_vertices(ElementKind::Triangle, v);
        let k = condense_element(&g, ch / g.h_char, &[2.0, 3.0, 4.0], 10, &Source::Constant(Complex64::new(1.0, 0.0)))
            .unwrap();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((k.linear_stiffness[(i, j)] - k.linear_stiffness[(j, i)]).norm() <= 1e-14 * k.linear_stiffness.norm_inf());
                prop_assert!((k.linear_mass[(i, j)] - k.linear_mass[(j, i)]).norm() <= 1e-14 * k.linear_mass.norm_inf());
                prop_assert!(k.bubble_mass[(i, j)].im == 0.0);
            }
            prop_assert!(k.source_terms[i].im == 0.0);
        }
    }

    #[test]
    fn mu_exact_keys(i in 0usize..64) {
        for kind in [ElementKind::Triangle, ElementKind::Quad] {
            let table = MuTable::builtin(kind);
            let rows = table.rows();
            let row = rows[i % rows.len()];
            let hit = table.lookup(row.key).unwrap();
            let first = rows.iter().find(|r| r.key == row.key).unwrap();
            prop_assert_eq!(hit.mu, first.mu);
            prop_assert_eq!(hit.n_s, first.n_s);
        }
    }

    #[test]
    fn pseudo_ab_one_is_pseudo_rfb(c in 0.1f64..500.0, h in 1e-4f64..0.05) {
        match (StencilScheme::PseudoAb { mu: 1.0 }.alpha2(c, h), StencilScheme::PseudoRfb.alpha2(c, h)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }

    #[test]
    fn c2_coincides_at_multiples_of_pi_over_3(beta in -1.0f64..1.0) {
        let k0 = trunc_coeffs(beta, 0.0).c2;
        for theta in [PI / 3.0, 2.0 * PI / 3.0] {
            prop_assert!((trunc_coeffs(beta, theta).c2 - k0).abs() <= 1e-15);
        }
    }

    #[test]
    fn error_norm_is_nonnegative(c in 1.0f64..40.0, theta in 0.0f64..PI) {
        let mesh = lattice_mesh(LatticeShape::Triangle { n: 6 }, 1.0 / 6.0, [0.0, 0.0], |_, _| BoundaryMarker::Dirichlet)
            .unwrap();
        let values = vec![Complex64::new(0.3, -0.1); mesh.n_nodes()];
        let exact = ExactSolution::PlaneWave { c, theta, convention: PlaneWaveConvention::SinCos };
        for s in [SampleSet::Nodes, SampleSet::NodesAndCentroids] {
            let r = error_inf(&mesh, &values, &exact, s).unwrap();
            prop_assert!(r.inf_norm >= 0.0 && r.rel_inf >= 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sevenpoint_matrix_is_symmetric(
        shape in shape(),
        scheme in prop_oneof![
            Just(StencilScheme::Galerkin),
            Just(StencilScheme::PseudoRfb),
            (1.0f64..8.0).prop_map(|mu| StencilScheme::PseudoAb { mu }),
            Just(StencilScheme::FourthOrder),
        ],
        ch in 0.1f64..2.0,
    ) {
        let lattice = Lattice::new(shape, 0.05, [0.0, 0.0]).unwrap();
        if (0..lattice.len()).all(|k| !lattice.is_interior(k)) {
            return Ok(());
        }
        let domain = LatticeDomain::new(lattice, |p| Complex64::new(p[0], 0.0));
        let sys = fd2d_sevenpoint(&domain, scheme, ch / 0.05).unwrap();
        prop_assert!(sys.system.matrix.is_symmetric(0.0));
    }

    #[test]
    fn sparse_agrees_with_dense(n in 3usize..12, ch in 0.2f64..1.2, robin in any::<bool>(), method in 0usize..3) {
        let h = 1.0 / n as f64;
        let c = ch / h;
        let mesh = lattice_mesh(LatticeShape::Triangle { n }, h, [0.0, 0.0], |a, b| {
            if robin && (a[1] - b[1]).abs() > 1e-12 { BoundaryMarker::Robin } else { BoundaryMarker::Dirichlet }
        })
        .unwrap();
        let method = [Method::Galerkin, Method::Rfb, Method::Ab][method];
        let spec = ProblemSpec::new(c, method)
            .with_dirichlet(DirichletData::PlaneWave { theta: 0.3, convention: PlaneWaveConvention::SinCos })
            .with_clamp(true);
        let sys = assemble(&mesh, &spec).unwrap().system;
        prop_assume!(sys.n() <= 500);
        let xs = sparse_solve(&sys).unwrap();
        let xd = DenseLu::factor(&sys.matrix.to_dense()).unwrap().solve(&sys.rhs);
        let scale = xd.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (a, b) in xs.iter().zip(&xd) {
            prop_assert!((a - b).norm() <= 1e-9 * scale);
        }
        // identical input, identical bits
        prop_assert_eq!(sparse_solve(&sys).unwrap(), xs);
    }

    #[test]
    fn renumbering_permutes_solution(n in 3usize..10, seed in any::<u64>(), method in 0usize..3) {
        let h = 1.0 / n as f64;
        let mesh = lattice_mesh(LatticeShape::Triangle { n }, h, [0.0, 0.0], |_, _| BoundaryMarker::Dirichlet)
            .unwrap();
        let mut perm: Vec<usize> = (0..mesh.n_nodes()).collect();
        // Fisher-Yates driven by a small LCG
        let mut state = seed | 1;
        for i in (1..perm.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (state >> 33) as usize % (i + 1));
        }
        let renumbered = mesh.renumbered(&perm).unwrap();
        let method = [Method::Galerkin, Method::Rfb, Method::Ab][method];
        let spec = ProblemSpec::new(0.6 / h, method)
            .with_dirichlet(DirichletData::PlaneWave { theta: 0.7, convention: PlaneWaveConvention::SinCos });
        let a = solve_problem(&mesh, &spec).unwrap().nodal_values;
        let b = solve_problem(&renumbered, &spec).unwrap().nodal_values;
        let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (old, &new) in perm.iter().enumerate() {
            prop_assert!((a[old] - b[new]).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn real_problems_stay_real(n in 3usize..10, ch in 0.2f64..1.0, method in 0usize..3) {
        let h = 1.0 / n as f64;
        let mesh = lattice_mesh(LatticeShape::Triangle { n }, h, [0.0, 0.0], |a, b| {
            if (a[1] - b[1]).abs() > 1e-12 { BoundaryMarker::Neumann } else { BoundaryMarker::Dirichlet }
        })
        .unwrap();
        let method = [Method::Galerkin, Method::Rfb, Method::Ab][method];
        let spec = ProblemSpec::new(ch / h, method)
            .with_source(Source::SinX)
            .with_dirichlet(DirichletData::Constant(Complex64::new(0.1, 0.0)));
        let u = solve_problem(&mesh, &spec).unwrap().nodal_values;
        let re = u.iter().map(|v| v.re.abs()).fold(0.0, f64::max);
        let im = u.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        prop_assert!(im <= 1e-10 * re);
    }
}
