use fskde::{
    canonical_distance_fk, AngleWeightSet, AngleWeightSet32, Descriptor, Descriptor32, Kernel, Kernel32, KernelMode,
};

fn pair() -> (Vec<f64>, Vec<f64>) {
    let angles = vec![0.3, -2.0, 3.1, 1.0, -0.4, 2.2];
    let weights = vec![1.0, 0.5, 2.25, 0.75, 1.5, 1.0];
    (angles, weights)
}

#[test]
fn f32_pipeline_tracks_f64() {
    let (angles, weights) = pair();
    let set64 = AngleWeightSet::new(angles.clone(), weights.clone()).unwrap();
    let set32 = AngleWeightSet32::new(
        angles.iter().map(|&a| a as f32).collect(),
        weights.iter().map(|&w| w as f32).collect(),
    )
    .unwrap();
    let d64 = Descriptor::estimate(&set64, &Kernel::new(12, KernelMode::Exact));
    let d32: Descriptor32 = Descriptor::estimate(&set32, &Kernel32::new(12, KernelMode::Exact));
    for (a, b) in d32.coeffs().iter().zip(d64.coeffs()) {
        assert!((f64::from(a.re) - b.re).abs() < 1e-6 && (f64::from(a.im) - b.im).abs() < 1e-6);
    }
    for theta in [-3.0f32, -1.0, 0.0, 0.5, 2.9] {
        assert!((f64::from(d32.evaluate(theta)) - d64.evaluate(f64::from(theta))).abs() < 1e-5);
    }
}

#[test]
fn f32_canonical_distance_is_rotation_invariant() {
    let (angles, weights) = pair();
    let set = AngleWeightSet32::new(
        angles.iter().map(|&a| a as f32).collect(),
        weights.iter().map(|&w| w as f32).collect(),
    )
    .unwrap();
    let kernel = Kernel32::new(8, KernelMode::Exact);
    let a = Descriptor::estimate(&set, &kernel);
    let b = Descriptor::estimate(&set.rotated(1.3), &kernel);
    assert!(a.distance(&b) > 0.05);
    assert!(canonical_distance_fk(&a, &b).unwrap() < 1e-4);
}
