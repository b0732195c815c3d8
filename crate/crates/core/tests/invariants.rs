use std::path::Path;

use lab_core::besov::{besov_norm, BesovIndex};
use lab_core::littlewood_paley::{build_partition, decompose};
use lab_core::paraproduct::bony::bony;
use lab_core::random::RandomSpectrum;
use lab_core::scenarios::ScenarioConfig;
use lab_core::spectral::{dealias_field, lp_norm};
use lab_core::{Field, Field32, Grid};
use proptest::prelude::*;

fn rel(a: &Field, b: &Field) -> f64 {
    lp_norm(&a.sub(b).unwrap(), 2.0).unwrap() / lp_norm(b, 2.0).unwrap().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decomposition_reconstructs(seed in any::<u64>(), dim in 1usize..=3) {
        let grid = Grid::new(dim, 16, 1.0).unwrap();
        let part = build_partition::<f64>(grid).unwrap();
        let f = RandomSpectrum::default().field::<f64>(grid, 2, seed).unwrap().add_scalar(0.7);
        let back = decompose(&f, &part).unwrap().reconstruct();
        prop_assert!(rel(&back, &dealias_field(&f).unwrap()) < 1e-12);
    }

    #[test]
    fn bony_sums_to_product(seed in any::<u64>()) {
        let grid = Grid::new(2, 32, 1.0).unwrap();
        let part = build_partition::<f64>(grid).unwrap();
        let u = RandomSpectrum::default().field::<f64>(grid, 1, seed).unwrap();
        let v = RandomSpectrum::default().field::<f64>(grid, 1, seed ^ 0x9e37).unwrap();
        let terms = bony(&u, &v, &part).unwrap();
        let exact = lab_core::paraproduct::bony::dealiased_product(&u, &v).unwrap();
        prop_assert!(rel(&terms.sum(), &exact) < 1e-10);
    }

    #[test]
    fn besov_norm_is_translation_invariant_and_homogeneous(
        seed in any::<u64>(),
        shift in prop::array::uniform3(-20i64..20),
        s in -1.0f64..1.5,
        p in prop::sample::select(vec![1.0, 2.0, 4.0, f64::INFINITY]),
        r in prop::sample::select(vec![1.0, 2.0, f64::INFINITY]),
        scale in -3.0f64..3.0,
    ) {
        let grid = Grid::new(3, 16, 1.0).unwrap();
        let part = build_partition::<f64>(grid).unwrap();
        let idx = BesovIndex::new(s, p, r).unwrap();
        let f = RandomSpectrum::default().field::<f64>(grid, 1, seed).unwrap();
        let base = besov_norm(&f, idx, &part).unwrap();
        let moved = besov_norm(&f.roll(shift), idx, &part).unwrap();
        let scaled = besov_norm(&f.scale(scale), idx, &part).unwrap();
        prop_assert!((moved - base).abs() <= 1e-9 * base);
        prop_assert!((scaled - scale.abs() * base).abs() <= 1e-12 * base.max(1.0));
    }

    #[test]
    fn single_precision_tracks_double(seed in any::<u64>()) {
        let grid = Grid::new(2, 32, 1.0).unwrap();
        let idx = BesovIndex::new(0.5, 2.0, 1.0).unwrap();
        let f = RandomSpectrum::default().field::<f64>(grid, 1, seed).unwrap();
        let f32_field: Field32 = f.cast();
        let d = besov_norm(&f, idx, &build_partition::<f64>(grid).unwrap()).unwrap();
        let s = besov_norm(&f32_field, idx, &build_partition::<f32>(grid).unwrap()).unwrap() as f64;
        prop_assert!((s - d).abs() <= 1e-5 * d);
    }
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/configs");
    let mut count = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let cfg = ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            let text = serde_json::to_string(&cfg).unwrap();
            assert_eq!(ScenarioConfig::from_json(&text).unwrap(), cfg);
            count += 1;
        }
    }
    assert!(count >= 7);
}
