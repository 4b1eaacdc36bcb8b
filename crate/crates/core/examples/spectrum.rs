//! Line spectrum and resolvent of the harmonic model from K_t alone.

use cohk::spectral::{rational_element, resolvent_element, spectrum_scan, time_average_overlap, OscillatorModel, ScanOptions};
use cohk::{Point, C64};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = OscillatorModel::harmonic(&[1.0], 1.0)?;
    let z = Point::klauder(C64::new(-0.5, 0.0), &[C64::new(1.0, 0.0)]);

    let t_half = 200.0 * std::f64::consts::TAU;
    let series = model.kernel_series(&z, &z, 0.05, (t_half / 0.05).round() as usize + 1)?;
    let grid: Vec<f64> = (0..=3200).map(|k| -0.5 + k as f64 * 0.0025).collect();
    let mut factorial = 1.0;
    for (n, line) in spectrum_scan(&series, None, &grid, ScanOptions::default())?.iter().enumerate() {
        if n > 0 {
            factorial *= n as f64;
        }
        println!("E = {:.6}  weight {:.6}  e^-1/n! = {:.6}", line.energy, line.weight, (-1f64).exp() / factorial);
    }
    println!("time average at E = 0: {:.6}", time_average_overlap(&series, None, 0.0, t_half, 1.0)?.re);

    let e = C64::new(0.5, 0.1);
    println!("G(0.5 + 0.1i) = {:.8}", resolvent_element(&model, &z, &z, e, 0.0, 0.0)?.value);
    let r = rational_element(&model, &z, &z, &[C64::new(-1.0, 0.0)], &[C64::new(1.0, 0.0)], 0.01)?;
    println!("⟨z|(H + 1)⁻¹|z⟩ = {:.8}", r.re);
    Ok(())
}
