use emcm::fit::classical::{find_zeros, prototype_poles};
use emcm::impedance::z_to_s;
use emcm::io::matrix_file::read_matrix;
use emcm::narrowband::eval_classical;

fn main() {
    let path = format!(
        "{}/fixtures/dual_mode_classical.cm",
        env!("CARGO_MANIFEST_DIR")
    );
    let ccm = read_matrix(&path).unwrap().to_classical().unwrap();
    let zeros = find_zeros(&ccm, 1.0, -10.0, 10.0, 2001).unwrap();
    println!("-- S at own targets (truth matrix) --");
    for &kt in &zeros.transmission_zeros {
        let s = z_to_s(&eval_classical(&ccm, kt).unwrap(), 1.0).unwrap();
        println!(
            "S21({kt:+.12}) = {:.3e} + {:.3e} j  |.|={:.3e}",
            s[(1, 0)].re,
            s[(1, 0)].im,
            s[(1, 0)].norm()
        );
    }
    for &kr in &zeros.reflection_zeros {
        let s = z_to_s(&eval_classical(&ccm, kr).unwrap(), 1.0).unwrap();
        println!(
            "S11({kr:+.12}) = {:.3e} + {:.3e} j  |.|={:.3e}",
            s[(0, 0)].re,
            s[(0, 0)].im,
            s[(0, 0)].norm()
        );
    }
    let p1 = prototype_poles(&ccm, 1.0).unwrap();
    let p2 = prototype_poles(&ccm, 1.0).unwrap();
    let pole_rep: f64 = p1
        .iter()
        .zip(&p2)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    println!("pole repeatability: {pole_rep:.3e}");
}
