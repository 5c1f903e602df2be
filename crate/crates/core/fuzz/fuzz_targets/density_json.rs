#![no_main]

use entrokl::densities::{AnalyticDensity, DensitySpec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(density) = AnalyticDensity::from_json(text) {
        let spec = DensitySpec::from_json(&density.spec().to_json()).expect("spec round-trips");
        assert_eq!(&spec, density.spec());
        let mut x = vec![0.0; density.dim()];
        let f = density.pdf(&x).expect("dimension matches");
        assert!(f >= 0.0 && f.is_finite());
        x.iter_mut().for_each(|v| *v = 0.5);
        let _ = density.ball_mass_exact(&x, 0.25);
    }
});
