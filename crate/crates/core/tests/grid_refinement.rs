use efimov_fano::grid::build_grid;
use efimov_fano::model::KEV_PER_MEV;
use efimov_fano::pipeline::{calibrated_carbon20, carbon20_grid, BORON19_GRID, CARBON20_GRID};
use efimov_fano::scattering::cross_section_curve;
use efimov_fano::spectrum::{boron19_check, boron19_config, find_trimers, SearchWindow, BORON19_BETA_INV_FM, BORON19_NC_SCATTERING_LENGTH_FM};

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "{a:?} vs {b:?}");
    a.iter().zip(b).map(|(x, y)| ((x - y) / y).abs()).fold(0.0, f64::max)
}

#[test]
fn carbon20_levels_stable_on_doubling() {
    let cal = calibrated_carbon20(&carbon20_grid()).unwrap();
    let fine = build_grid(2 * CARBON20_GRID.0, CARBON20_GRID.1).unwrap();
    for eps in [100.0, 150.0, 250.0] {
        let c = cal.config.with_nc_epsilon2(eps / KEV_PER_MEV).unwrap();
        let w = SearchWindow::below_threshold(&c);
        let a = find_trimers(&c, &carbon20_grid(), w, usize::MAX).unwrap().energies_kev();
        let b = find_trimers(&c, &fine, w, usize::MAX).unwrap().energies_kev();
        assert!(max_rel(&a, &b) < 1e-3, "{eps} keV: {a:?} vs {b:?}");
    }
}

#[test]
fn boron19_levels_stable_on_doubling() {
    let c = boron19_config(BORON19_NC_SCATTERING_LENGTH_FM, BORON19_BETA_INV_FM).unwrap();
    let coarse = build_grid(BORON19_GRID.0, BORON19_GRID.1).unwrap();
    let fine = build_grid(2 * BORON19_GRID.0, BORON19_GRID.1).unwrap();
    let a = boron19_check(&c, &coarse).unwrap().energies_kev();
    let b = boron19_check(&c, &fine).unwrap().energies_kev();
    assert!(max_rel(&a, &b) < 1e-3, "{a:?} vs {b:?}");
}

#[test]
fn cross_section_stable_on_doubling() {
    let cal = calibrated_carbon20(&carbon20_grid()).unwrap();
    let fine = build_grid(2 * CARBON20_GRID.0, CARBON20_GRID.1).unwrap();
    let energies: Vec<f64> = (0..20).map(|i| 0.05 + 0.5 * i as f64).collect();
    for eps in [250.0, 150.0] {
        let c = cal.config.with_nc_epsilon2(eps / KEV_PER_MEV).unwrap();
        let a = cross_section_curve(&c, &carbon20_grid(), &energies).unwrap().sigmas();
        let b = cross_section_curve(&c, &fine, &energies).unwrap().sigmas();
        assert!(max_rel(&a, &b) < 5e-3, "{eps} keV: {a:?} vs {b:?}");
    }
}
