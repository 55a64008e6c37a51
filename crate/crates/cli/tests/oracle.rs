use kvflow::oracle::compare_assembly;
use kvflow_core::assembly::{assemble_convection, Discretization};
use rand::{Rng, SeedableRng};

#[test]
fn sparse_assembly_matches_dense_oracle() {
    for n in [1, 2] {
        for seed in 0..3 {
            let c = compare_assembly(n, seed).unwrap();
            assert!(c.max() <= 1e-13, "{c:?}");
        }
    }
}

#[test]
fn convection_antisymmetry_on_n8() {
    let disc = Discretization::structured(8).unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
    let nv = disc.layout.n_velocity();
    for _ in 0..100 {
        let w: Vec<f64> = (0..nv).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..nv).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = assemble_convection(&w, &disc.mesh, &disc.layout).unwrap();
        let bound = 1e-12 * v.iter().map(|x| x * x).sum::<f64>() * disc.forms.stiffness.quadratic_form(&w).sqrt();
        assert!(n.quadratic_form(&v).abs() <= bound);
    }
}
