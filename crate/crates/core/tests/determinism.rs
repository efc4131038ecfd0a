//! Thread-count invariance of the estimation pipeline: the same inputs
//! must produce bit-identical reports no matter how many rayon workers
//! carry the load.

use dol_core::estimators::{estimate_curve, EstimatorKind};
use dol_core::ingest::{generate, SyntheticKind, SyntheticSpec};
use dol_core::{EstimatorConfig, NoiseGrid, UnitConvention};

#[test]
fn reports_are_bit_identical_across_pool_sizes() {
    let spec = SyntheticSpec {
        kind: SyntheticKind::IsotropicGaussian {
            mean: vec![0.0; 3],
            scale: 1.0,
        },
        n_samples: 120,
        dim: 3,
        seed: 77,
    };
    let ds = generate(&spec).unwrap();
    let grid = NoiseGrid::linspace(-2.0, 2.0, 6).unwrap();
    let config = EstimatorConfig::defaults_for(ds.n_samples(), 31);

    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            estimate_curve(
                &ds,
                &grid,
                EstimatorKind::Cdol,
                &config,
                UnitConvention::Total,
            )
            .unwrap()
        })
    };

    let single = run(1);
    let eight = run(8);
    let three = run(3);
    assert_eq!(single, eight);
    assert_eq!(single, three);

    for kind in [EstimatorKind::Full, EstimatorKind::Snis, EstimatorKind::Dol] {
        let pool1 = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let pool8 = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap();
        let a = pool1
            .install(|| estimate_curve(&ds, &grid, kind, &config, UnitConvention::Total).unwrap());
        let b = pool8
            .install(|| estimate_curve(&ds, &grid, kind, &config, UnitConvention::Total).unwrap());
        assert_eq!(a, b, "{kind:?} differs across pool sizes");
    }
}
