//! Command-line interface.
//!
//! One subcommand per pipeline stage: `eval` sweeps a model to Touchstone or
//! CSV, `narrowband` reduces a model to a classical matrix plus out-of-band
//! file, `inverse` maps a classical matrix back to a coupling-matrix model,
//! `basis` changes the resonator basis, `zeros` extracts zeros and poles,
//! `fit-model` fits a pole-residue model to sampled impedance data,
//! `fit-classical` fits a masked classical matrix to zero/pole targets, and
//! `compare` ranks the differences between two matrices.
//!
//! Exit codes: 0 on success, 1 on computation errors, 2 on usage errors.
//! Output is deterministic: fixed formatting and ordering throughout.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::fit::classical::{
    find_zeros, fit_classical, ClassicalFitOptions, FitTargets, TopologyMask,
};
use crate::fit::rational::{fit_pole_residue, RANK1_WARN};
use crate::impedance::{em_coupling_from_inband, split_inband, sweep_s_parameters};
use crate::io::export::{export_csv, export_touchstone, read_csv_samples};
use crate::io::matrix_file::{read_matrix, write_matrix, CouplingMatrixFile};
use crate::io::model_file::{read_model, write_model};
use crate::io::oob_file::write_oob;
use crate::io::transform_file::{read_transform, write_transform};
use crate::io::zeros_file::{read_zeros, write_zeros};
use crate::model::{FrequencyBand, PoleResidueModel, PoleResidueTerm, ETA0};
use crate::narrowband::{bandpass_map_hz, inverse_reduce, reduce_to_classical, taylor_outofband};

/// Print to stdout, ignoring a closed pipe (`emcm ... | head` is fine).
macro_rules! outln {
    ($($arg:tt)*) => {
        let _ = writeln!(std::io::stdout(), $($arg)*);
    };
}

#[derive(Parser)]
#[command(
    name = "emcm",
    about = "Coupling-matrix toolkit for coupled-resonator microwave circuits",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a model's S parameters over a frequency grid and export them.
    Eval(EvalArgs),
    /// Reduce a model to a classical coupling matrix and out-of-band file.
    Narrowband(NarrowbandArgs),
    /// Map a classical coupling matrix back to a coupling-matrix model.
    Inverse(InverseArgs),
    /// Diagonalize a matrix's resonator block, or apply a stored transform.
    Basis(BasisArgs),
    /// Extract transmission/reflection zeros and prototype poles.
    Zeros(ZerosArgs),
    /// Fit a rank-1 pole-residue model to sampled impedance data (CSV).
    FitModel(FitModelArgs),
    /// Fit a masked classical coupling matrix to zero/pole targets.
    FitClassical(FitClassicalArgs),
    /// Rank the entry-wise differences between two coupling matrices.
    Compare(CompareArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// Pole-residue model file.
    #[arg(long)]
    model: PathBuf,
    /// Sweep start frequency in Hz.
    #[arg(long)]
    f_start: f64,
    /// Sweep stop frequency in Hz.
    #[arg(long)]
    f_stop: f64,
    /// Number of grid points.
    #[arg(long, default_value_t = 201)]
    points: usize,
    /// Reference impedance for the S parameters; defaults to the model eta0.
    #[arg(long)]
    zref: Option<f64>,
    /// Output path.
    #[arg(long)]
    out: PathBuf,
    /// Output format.
    #[arg(long, default_value = "touchstone", value_parser = ["touchstone", "csv"])]
    format: String,
}

#[derive(Args)]
struct NarrowbandArgs {
    /// Pole-residue model file.
    #[arg(long)]
    model: PathBuf,
    /// Analysis band as f1:f2 in Hz; defaults to the band in the model file.
    #[arg(long)]
    band: Option<String>,
    /// Classical coupling-matrix output path.
    #[arg(long)]
    out_matrix: PathBuf,
    /// Out-of-band (affine loading) output path.
    #[arg(long)]
    out_oob: PathBuf,
}

#[derive(Args)]
struct InverseArgs {
    /// Classical coupling-matrix file.
    #[arg(long)]
    matrix: PathBuf,
    /// Intrinsic impedance used in the mapping.
    #[arg(long, default_value_t = ETA0)]
    eta0: f64,
    /// Write the recovered model (transversal form) here.
    #[arg(long)]
    out: PathBuf,
    /// Also write the recovered coupling-matrix pair (dense resonator block).
    #[arg(long)]
    matrix_out: Option<PathBuf>,
}

#[derive(Args)]
struct BasisArgs {
    /// Coupling-matrix file holding the pair to transform.
    #[arg(long)]
    matrix: PathBuf,
    /// Apply this stored transform instead of diagonalizing.
    #[arg(long)]
    apply: Option<PathBuf>,
    /// Transformed matrix output path.
    #[arg(long)]
    out: PathBuf,
    /// Where to store the transform produced by diagonalization.
    #[arg(long)]
    transform_out: Option<PathBuf>,
}

#[derive(Args)]
struct ZerosArgs {
    /// Classical coupling-matrix file.
    matrix: PathBuf,
    /// Band override as f1:f2 in Hz for the physical-frequency mapping.
    #[arg(long)]
    band: Option<String>,
    /// Termination impedance (prototype convention).
    #[arg(long, default_value_t = 1.0)]
    zref: f64,
    /// Scan range lower edge in normalized frequency.
    #[arg(long, default_value_t = -10.0)]
    k_lo: f64,
    /// Scan range upper edge in normalized frequency.
    #[arg(long, default_value_t = 10.0)]
    k_hi: f64,
    /// Scan grid points.
    #[arg(long, default_value_t = 2001)]
    grid: usize,
    /// Write the zero set (normalized) to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitModelArgs {
    /// Sampled impedance matrices (CSV with freq_hz,Z11_re,Z11_im,... header).
    #[arg(long)]
    samples: PathBuf,
    /// Number of poles to fit.
    #[arg(long)]
    poles: usize,
    /// Intrinsic impedance of the fitted model.
    #[arg(long, default_value_t = ETA0)]
    eta0: f64,
    /// Relative residual change below which the iteration stops.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 50)]
    max_iters: usize,
    /// Fitted model output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitClassicalArgs {
    /// Target zero set file (tz/rz/pole lines, normalized frequencies).
    #[arg(long)]
    targets: PathBuf,
    /// Starting classical coupling-matrix file.
    #[arg(long)]
    init: PathBuf,
    /// Topology mask file (0/1 matrix body); defaults to the nonzero pattern
    /// of the starting matrix.
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    /// Weight of the transmission-zero targets.
    #[arg(long, default_value_t = 1.0)]
    w_tz: f64,
    /// Weight of the reflection-zero targets.
    #[arg(long, default_value_t = 1.0)]
    w_rz: f64,
    /// Weight of the pole targets.
    #[arg(long, default_value_t = 1.0)]
    w_pole: f64,
    /// Termination impedance (prototype convention).
    #[arg(long, default_value_t = 1.0)]
    zref: f64,
    /// Fitted matrix output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// First coupling-matrix file.
    a: PathBuf,
    /// Second coupling-matrix file.
    b: PathBuf,
    /// How many top entries to list.
    #[arg(long, default_value_t = 10)]
    top: usize,
    /// List only entries with |delta| at or above this.
    #[arg(long)]
    threshold: Option<f64>,
}

fn parse_band_flag(flag: &str) -> Result<FrequencyBand> {
    let (f1, f2) = flag
        .split_once(':')
        .ok_or_else(|| Error::InvalidArgument(format!("band must be f1:f2 in Hz, got `{flag}`")))?;
    let f1: f64 = f1
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad band edge `{f1}`")))?;
    let f2: f64 = f2
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad band edge `{f2}`")))?;
    FrequencyBand::new(f1, f2)
}

fn run_eval(args: &EvalArgs) -> Result<()> {
    let file = read_model(&args.model)?;
    let z_ref = args.zref.unwrap_or(file.model.eta0);
    let sweep = sweep_s_parameters(&file.model, args.f_start, args.f_stop, args.points, z_ref)?;
    match args.format.as_str() {
        "touchstone" => export_touchstone(&args.out, &sweep)?,
        _ => export_csv(&args.out, &sweep)?,
    }
    outln!(
        "wrote {} points ({} ports, zref {} ohm) to {}",
        sweep.len(),
        sweep.ports(),
        z_ref,
        args.out.display()
    );
    Ok(())
}

fn run_narrowband(args: &NarrowbandArgs) -> Result<()> {
    let file = read_model(&args.model)?;
    let band = match &args.band {
        Some(flag) => parse_band_flag(flag)?,
        None => file.band.ok_or_else(|| {
            Error::InvalidArgument("no band: pass --band f1:f2 or add one to the model".into())
        })?,
    };
    let (inband, outofband) = split_inband(&file.model, &band);
    let emcm = em_coupling_from_inband(&inband)?;
    let ccm = reduce_to_classical(&emcm, &band, file.model.eta0)?;
    let oob = taylor_outofband(&outofband, file.model.ports, file.model.eta0, &band)?;
    write_matrix(&args.out_matrix, &CouplingMatrixFile::from_classical(&ccm))?;
    write_oob(&args.out_oob, &oob, &band)?;
    outln!(
        "reduced {} in-band terms over {}-{} Hz; {} out-of-band terms folded into {}",
        inband.len(),
        band.f1_hz(),
        band.f2_hz(),
        outofband.len(),
        args.out_oob.display()
    );
    Ok(())
}

fn run_inverse(args: &InverseArgs) -> Result<()> {
    let file = read_matrix(&args.matrix)?;
    let ccm = file.to_classical()?;
    let emcm = inverse_reduce(&ccm, args.eta0)?;
    let (transversal, _) = crate::basis::to_transversal(&emcm);
    let mut terms = Vec::with_capacity(transversal.order());
    for n in 0..transversal.order() {
        let k_n = transversal.k()[(n, n)].max(0.0).sqrt();
        let c: Vec<f64> = (0..transversal.ports())
            .map(|p| transversal.c()[(p, n)])
            .collect();
        terms.push(PoleResidueTerm::new(k_n, c, true));
    }
    let model = PoleResidueModel::new(transversal.ports(), terms).with_eta0(args.eta0);
    write_model(&args.out, &model, Some(&file.band))?;
    if let Some(path) = &args.matrix_out {
        write_matrix(path, &CouplingMatrixFile::from_em(&emcm, file.band))?;
    }
    outln!(
        "recovered {} eigenresonances into {}",
        model.terms.len(),
        args.out.display()
    );
    Ok(())
}

fn run_basis(args: &BasisArgs) -> Result<()> {
    let file = read_matrix(&args.matrix)?;
    let emcm = file.to_em()?;
    let (transformed, transform) = match &args.apply {
        Some(path) => {
            let q = read_transform(path)?;
            (crate::basis::apply_basis(&emcm, &q)?, q)
        }
        None => crate::basis::to_transversal(&emcm),
    };
    write_matrix(
        &args.out,
        &CouplingMatrixFile::from_em(&transformed, file.band),
    )?;
    if let Some(path) = &args.transform_out {
        write_transform(path, &transform)?;
    }
    outln!("wrote transformed matrix to {}", args.out.display());
    Ok(())
}

fn run_zeros(args: &ZerosArgs) -> Result<()> {
    let file = read_matrix(&args.matrix)?;
    let band = match &args.band {
        Some(flag) => parse_band_flag(flag)?,
        None => file.band,
    };
    let ccm = file.to_classical()?;
    let zeros = find_zeros(&ccm, args.zref, args.k_lo, args.k_hi, args.grid)?;
    outln!("transmission zeros ({}):", zeros.transmission_zeros.len());
    for tz in &zeros.transmission_zeros {
        outln!(
            "  K = {tz:+.9}   f = {:.9e} Hz",
            bandpass_map_hz(*tz, &band)
        );
    }
    outln!("reflection zeros ({}):", zeros.reflection_zeros.len());
    for rz in &zeros.reflection_zeros {
        outln!(
            "  K = {rz:+.9}   f = {:.9e} Hz",
            bandpass_map_hz(*rz, &band)
        );
    }
    outln!("prototype poles ({}):", zeros.prototype_poles.len());
    for p in &zeros.prototype_poles {
        outln!("  K = {:+.9} {:+.9}j", p.re, p.im);
    }
    if let Some(path) = &args.out {
        write_zeros(path, &zeros)?;
    }
    Ok(())
}

fn run_fit_model(args: &FitModelArgs) -> Result<()> {
    let samples = read_csv_samples(&args.samples)?;
    let report = fit_pole_residue(&samples, args.poles, args.eta0, args.max_iters, args.tol)?;
    write_model(&args.out, &report.model, None)?;
    outln!(
        "fitted {} poles in {} iterations, residual {:.3e}{}",
        report.model.terms.len(),
        report.iterations,
        report.residual,
        if report.converged {
            ""
        } else {
            " (not converged)"
        }
    );
    for (term, quality) in report.model.terms.iter().zip(&report.rank1_quality) {
        if *quality > RANK1_WARN {
            outln!(
                "warning: residue at k = {} has rank-1 quality {quality:.3e}",
                term.k_n
            );
        }
    }
    Ok(())
}

fn run_fit_classical(args: &FitClassicalArgs) -> Result<()> {
    let targets = FitTargets::Zeros(read_zeros(&args.targets)?);
    let init_file = read_matrix(&args.init)?;
    let init = init_file.to_classical()?;
    let mask = match &args.mask {
        Some(path) => {
            let mask_file = read_matrix(path)?;
            TopologyMask::new(mask_file.matrix.map(|v| v != 0.0), init_file.ports)?
        }
        None => TopologyMask::from_nonzeros(&init_file.matrix, init_file.ports)?,
    };
    let opts = ClassicalFitOptions {
        max_iters: args.max_iters,
        tol: args.tol,
        weight_tz: args.w_tz,
        weight_rz: args.w_rz,
        weight_pole: args.w_pole,
        z_ref: args.zref,
        ..Default::default()
    };
    let report = fit_classical(&targets, &mask, &init, &opts)?;
    write_matrix(&args.out, &CouplingMatrixFile::from_classical(&report.ccm))?;
    outln!(
        "residual {:.3e} after {} iterations{}",
        report.residual,
        report.iterations,
        if report.converged {
            ""
        } else {
            " (not converged)"
        }
    );
    Ok(())
}

fn run_compare(args: &CompareArgs) -> Result<()> {
    let a = read_matrix(&args.a)?;
    let b = read_matrix(&args.b)?;
    let report = crate::basis::compare_coupling(&a.matrix, &b.matrix, a.matrix.nrows().pow(2))?;
    let entries: Vec<_> = match args.threshold {
        Some(t) => report.above(t),
        None => report.entries().iter().take(args.top).collect(),
    };
    outln!(
        "{:>4} {:>4} {:>12} {:>12} {:>12}",
        "row",
        "col",
        "a",
        "b",
        "|delta|"
    );
    for e in entries {
        outln!(
            "{:>4} {:>4} {:>12.6} {:>12.6} {:>12.6}",
            e.row,
            e.col,
            e.value_a,
            e.value_b,
            e.delta
        );
    }
    Ok(())
}

/// Parse and run one CLI invocation; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with exit code 0.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Eval(args) => run_eval(args),
        Command::Narrowband(args) => run_narrowband(args),
        Command::Inverse(args) => run_inverse(args),
        Command::Basis(args) => run_basis(args),
        Command::Zeros(args) => run_zeros(args),
        Command::FitModel(args) => run_fit_model(args),
        Command::FitClassical(args) => run_fit_classical(args),
        Command::Compare(args) => run_compare(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
