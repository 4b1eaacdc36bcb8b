use cohk::spectral::{
    reflected_resolvent_element, resolvent_element, spectrum_scan, time_average_overlap, OscillatorModel, ScanOptions,
};
use cohk::{Point, C64};

/// `wₙ = e^{z̄₀ + w₀}(z̄w)ⁿ/n!` for the single-mode number operator.
fn weights(z: &Point, w: &Point, count: usize) -> Vec<C64> {
    let (z0, u) = z.as_klauder().unwrap();
    let (w0, v) = w.as_klauder().unwrap();
    let x = u[0].conj() * v[0];
    let mut out = vec![(z0.conj() + w0).exp()];
    for n in 1..count {
        out.push(out[n - 1] * x / n as f64);
    }
    out
}

fn points() -> [Point; 3] {
    [
        Point::klauder(C64::new(-0.5, 0.0), &[C64::new(1.0, 0.0)]),
        Point::klauder(C64::new(0.1, 0.3), &[C64::new(0.4, -0.7)]),
        Point::klauder(C64::new(-0.2, -0.1), &[C64::new(-0.9, 0.2)]),
    ]
}

#[test]
fn resolvent_matches_line_sum_off_diagonal() {
    let model = OscillatorModel::harmonic(&[1.0], 1.0).unwrap();
    let [a, b, c] = points();
    for (z, w) in [(&a, &b), (&b, &c), (&c, &a)] {
        for e in [C64::new(0.5, 0.2), C64::new(2.3, 0.05), C64::new(-1.0, 1.0)] {
            let oracle: C64 = weights(z, w, 60).iter().enumerate().map(|(n, wn)| wn / (e - n as f64)).sum();
            let g = resolvent_element(&model, z, w, e, 0.0, 0.0).unwrap().value;
            assert!((g - oracle).norm() < 1e-6 * oracle.norm().max(1.0), "E = {e}: {g} vs {oracle}");
        }
    }
}

#[test]
fn resolvent_is_hermitian_across_the_real_axis() {
    let model = OscillatorModel::harmonic(&[1.0], 1.0).unwrap();
    let [a, b, _] = points();
    for e in [C64::new(0.5, 0.1), C64::new(1.7, 0.3)] {
        let up = resolvent_element(&model, &a, &b, e, 0.0, 0.0).unwrap().value;
        let down = reflected_resolvent_element(&model, &b, &a, e.conj(), 0.0, 0.0).unwrap().value;
        assert!((up - down.conj()).norm() < 1e-6 * up.norm(), "{up} vs {down}");
    }
}

#[test]
fn off_spectrum_time_average_decays_like_one_over_t() {
    let model = OscillatorModel::harmonic(&[1.0], 1.0).unwrap();
    let [z, ..] = points();
    let w = weights(&z, &z, 40);
    let e = 0.5;
    // |(1/2T)∫ e^{i(E−n)t} dt| = |sin((E−n)T)/((E−n)T)| ≤ 1/(|E−n|T)
    let envelope: f64 = w.iter().enumerate().map(|(n, wn)| wn.norm() / (e - n as f64).abs()).sum();
    let dt = 0.05;
    let series = model.kernel_series(&z, &z, dt, 8001).unwrap();
    let mut scaled = Vec::new();
    for t in [25.0, 50.0, 100.0, 200.0, 400.0] {
        let avg = time_average_overlap(&series, None, e, t, 1.0).unwrap().norm();
        assert!(avg <= 1.01 * envelope / t, "T = {t}: {avg} > {}", envelope / t);
        scaled.push(avg * t);
    }
    assert!(scaled.iter().any(|s| *s > 0.05 * envelope), "average should not vanish faster than 1/T: {scaled:?}");
}

#[test]
fn two_mode_lattice_lines() {
    let omegas = [1.0, std::f64::consts::SQRT_2];
    let model = OscillatorModel::harmonic(&omegas, 1.0).unwrap();
    let z = Point::klauder(C64::from(0.0), &[C64::new(0.5, 0.0), C64::new(0.0, 0.4)]);
    let t = 600.0;
    let dt = 0.05;
    let series = model.kernel_series(&z, &z, dt, (t / dt) as usize + 1).unwrap();
    let grid: Vec<f64> = (0..=1600).map(|k| -0.2 + k as f64 * 0.002).collect();
    let lines = spectrum_scan(&series, None, &grid, ScanOptions::default()).unwrap();
    // K(z,z) = Π exp(|aⱼ|²); the line at n₁ω₁ + n₂ω₂ carries Π |aⱼ|^{2nⱼ}/nⱼ! × e^{z̄₀+z₀}
    let (x1, x2) = (0.25f64, 0.16f64);
    let fact = |n: i32| (1..=n).map(f64::from).product::<f64>();
    for (n1, n2) in [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0)] {
        let energy = n1 as f64 * omegas[0] + n2 as f64 * omegas[1];
        let want = x1.powi(n1) / fact(n1) * x2.powi(n2) / fact(n2);
        let line = lines.iter().find(|l| (l.energy - energy).abs() < 0.002).unwrap_or_else(|| panic!("no line at {energy}: {lines:?}"));
        assert!((line.weight - want).abs() < 1e-3, "E = {energy}: {} vs {want}", line.weight);
    }
}
