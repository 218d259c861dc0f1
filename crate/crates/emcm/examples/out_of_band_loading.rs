//! The out-of-band loading term is not optional: statics and higher-order
//! modes shift the apparent port reference planes, and a reduced coupling
//! matrix evaluated without its affine loading visibly mispredicts the
//! response.
//!
//! Run with: cargo run -p emcm --example out_of_band_loading

use emcm::impedance::{em_coupling_from_inband, eval_impedance, split_inband, z_to_s};
use emcm::model::{FrequencyBand, PoleResidueModel, PoleResidueTerm};
use emcm::narrowband::{eval_total_s, reduce_to_classical, taylor_outofband};

fn main() -> emcm::Result<()> {
    let band = FrequencyBand::new(12.21e9, 12.26e9)?;
    let k0 = band.k0();
    let model = PoleResidueModel::new(
        2,
        vec![
            PoleResidueTerm::new(0.9995 * k0, vec![0.020, 0.012], true),
            PoleResidueTerm::new(1.0005 * k0, vec![-0.014, 0.021], true),
            // Strong statics and one higher-order mode: the phase loading.
            PoleResidueTerm::new(0.0, vec![8.0, 5.0], false),
            PoleResidueTerm::new(1.45 * k0, vec![7.0, -4.5], false),
        ],
    );

    let (inband, outofband) = split_inband(&model, &band);
    let emcm = em_coupling_from_inband(&inband)?;
    let ccm = reduce_to_classical(&emcm, &band, model.eta0)?;
    let oob = taylor_outofband(&outofband, model.ports, model.eta0, &band)?;

    println!(
        "{:>10} {:>12} {:>12} {:>12}",
        "f (GHz)", "|S11| exact", "with oob", "without oob"
    );
    let mut worst = 0.0_f64;
    for i in 0..9 {
        let f = band.f1_hz() + (band.f2_hz() - band.f1_hz()) * i as f64 / 8.0;
        let exact = z_to_s(
            &eval_impedance(&model, emcm::model::wavenumber(f))?,
            model.eta0,
        )?[(0, 0)]
            .norm();
        let with = eval_total_s(&ccm, Some(&oob), f, model.eta0)?[(0, 0)].norm();
        let without = eval_total_s(&ccm, None, f, model.eta0)?[(0, 0)].norm();
        worst = worst.max((with - without).abs());
        println!(
            "{:>10.4} {:>12.6} {:>12.6} {:>12.6}",
            f / 1e9,
            exact,
            with,
            without
        );
    }
    println!("\nmax |S11| error from dropping the loading term: {worst:.3}");
    Ok(())
}
