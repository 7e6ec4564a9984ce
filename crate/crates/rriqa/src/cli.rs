//! Command-line front end: feature extraction, pairwise scoring,
//! dataset evaluation, synthetic distortion, tiling-catalog inspection,
//! subband histograms, and an embedded self-check.
//!
//! Exit codes: 0 on success, 1 on domain errors (one-line diagnostic on
//! stderr), 2 on usage errors.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Parser, Subcommand};
use thiserror::Error;

use crate::bkf::{pdf, BkfParams};
use crate::eval::{evaluate_dataset, parse_manifest, EvalError, ParamMode};
use crate::features::{
    band_pairs, dequantize, extract, quantize, FeatureError, FeatureVector, QuantizedFeatures,
};
use crate::image::{GrayImage, ImageError};
use crate::metrics::{l2_distance_closed, l2_distance_quadrature, score, MeasureId, MetricError};
use crate::quad::integrate;
use crate::synth::textured_image;
use crate::tetrolet::{
    forward, haar_tetromino, haar_tetromino_inverse, inverse, TetroletError, TilingCatalog,
    SYMMETRY_CLASS_COUNT, TILING_COUNT,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Image(#[from] ImageError),
    #[error("{0}")]
    Feature(#[from] FeatureError),
    #[error("{0}")]
    Transform(#[from] TetroletError),
    #[error("{0}")]
    Metric(#[from] MetricError),
    #[error("{0}")]
    Eval(#[from] EvalError),
    #[error("Io: {0}")]
    Io(#[from] std::io::Error),
    #[error("SelfCheckFailed: {0} check(s) failed")]
    SelfCheckFailed(usize),
    #[error("{0}")]
    Other(String),
}

#[derive(Parser)]
#[command(
    name = "rriqa",
    version,
    about = "Reduced-reference image quality assessment over an adaptive block transform"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract the quantized reduced-reference features of an image.
    Extract {
        /// Reference image (PGM).
        reference: PathBuf,
        /// Output feature container (24 bytes).
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a distorted input against stored reference features.
    Score {
        /// Reference feature container written by `extract`.
        #[arg(long = "ref-features")]
        ref_features: PathBuf,
        /// Distorted image (PGM) or a second feature container (.tqrr).
        distorted: PathBuf,
        /// Measure to compute: q1..q5.
        #[arg(long)]
        measure: MeasureId,
    },
    /// Evaluate a measure against subjective scores from a manifest.
    Evaluate {
        /// Tab-separated manifest: subset, ref path, dist path, dmos.
        #[arg(long)]
        manifest: PathBuf,
        /// Measure to compute: q1..q5.
        #[arg(long)]
        measure: MeasureId,
        /// Score from raw sender-side parameters instead of the codec path.
        #[arg(long)]
        raw_params: bool,
        /// Also write every (subset, ref, dist, q, dmos) row to a file.
        #[arg(long)]
        dump_scores: Option<PathBuf>,
    },
    /// Apply a synthetic distortion to an image.
    #[command(group(ArgGroup::new("kind").required(true).args(["blur", "noise"])))]
    Distort {
        /// Input image (PGM).
        image: PathBuf,
        /// Gaussian blur standard deviation.
        #[arg(long)]
        blur: Option<f64>,
        /// Additive white noise standard deviation.
        #[arg(long)]
        noise: Option<f64>,
        /// Seed for the noise generator.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output image (PGM).
        #[arg(long)]
        out: PathBuf,
    },
    /// Dump the tiling catalog, one line per tiling.
    Tilings,
    /// Print a histogram of one detail subband.
    Histogram {
        /// Input image (PGM).
        image: PathBuf,
        /// Decomposition level, 1..=3.
        #[arg(long)]
        level: usize,
        /// Detail index, 1..=3.
        #[arg(long)]
        detail: usize,
        /// Number of equal-width bins.
        #[arg(long, default_value_t = 50)]
        bins: usize,
    },
    /// Run the embedded invariant suite; exits nonzero on failure.
    Selfcheck,
}

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn format_score(v: f64) -> String {
    format!("{v:.5e}")
}

fn with_path<E: std::fmt::Display>(path: &Path) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Other(format!("{}: {e}", path.display()))
}

fn load_features(path: &Path) -> Result<FeatureVector<f64>, CliError> {
    let bytes = fs::read(path).map_err(with_path(path))?;
    let qf = QuantizedFeatures::deserialize(&bytes).map_err(with_path(path))?;
    Ok(dequantize(&qf))
}

fn load_image(path: &Path) -> Result<GrayImage<f64>, CliError> {
    GrayImage::load(path).map_err(with_path(path))
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Extract { reference, out } => {
            let img = load_image(&reference)?;
            let qf = quantize(&extract(&img)?);
            fs::write(&out, qf.serialize()).map_err(with_path(&out))?;
            Ok(())
        }
        Command::Score {
            ref_features,
            distorted,
            measure,
        } => {
            let ref_fv = load_features(&ref_features)?;
            let dist_fv = if distorted.extension().is_some_and(|e| e == "tqrr") {
                load_features(&distorted)?
            } else {
                extract(&load_image(&distorted)?)?
            };
            let s = score(measure, &band_pairs(&ref_fv, &dist_fv))?;
            println!("{}", format_score(s.value));
            Ok(())
        }
        Command::Evaluate {
            manifest,
            measure,
            raw_params,
            dump_scores,
        } => {
            let text = fs::read_to_string(&manifest).map_err(with_path(&manifest))?;
            let records = parse_manifest(&text)?;
            let mode = if raw_params {
                ParamMode::Raw
            } else {
                ParamMode::Quantized
            };
            let report = evaluate_dataset::<f64>(&records, measure, mode);
            for f in &report.failures {
                eprintln!("warning: [{}] {}: {}", f.subset, f.context, f.reason);
            }
            if let Some(path) = dump_scores {
                fs::write(&path, report.render_scores()).map_err(with_path(&path))?;
            }
            print!("{}", report.render_table());
            if report.subsets.is_empty() {
                return Err(CliError::Other(
                    "no subset had enough usable records to evaluate".into(),
                ));
            }
            Ok(())
        }
        Command::Distort {
            image,
            blur,
            noise,
            seed,
            out,
        } => {
            let img = load_image(&image)?;
            let distorted = match (blur, noise) {
                (Some(sigma), None) => img.gaussian_blur(sigma)?,
                (None, Some(sigma)) => img.add_white_noise(sigma, seed),
                _ => unreachable!("clap group enforces exactly one distortion"),
            };
            distorted.save_pgm(&out).map_err(with_path(&out))?;
            Ok(())
        }
        Command::Tilings => {
            print!("{}", TilingCatalog::shared().dump());
            Ok(())
        }
        Command::Histogram {
            image,
            level,
            detail,
            bins,
        } => {
            if bins == 0 {
                return Err(CliError::Other("bins must be positive".into()));
            }
            let img = load_image(&image)?;
            let cropped = img.crop_to_multiple(16)?;
            let dec = forward(&cropped, 3)?;
            let sb = dec.subband(level, detail)?;
            let data = sb.data();
            let min = data.iter().copied().fold(f64::INFINITY, f64::min);
            let max = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let hi = if max > min { max } else { min + 1.0 };
            let width = (hi - min) / bins as f64;
            let mut counts = vec![0usize; bins];
            for &v in data {
                let k = (((v - min) / width) as usize).min(bins - 1);
                counts[k] += 1;
            }
            println!(
                "# subband level={level} detail={detail} coeffs={}",
                data.len()
            );
            let edges: Vec<String> = (0..=bins)
                .map(|k| format!("{:.6}", min + k as f64 * width))
                .collect();
            println!("edges: {}", edges.join(" "));
            let counts: Vec<String> = counts.iter().map(|c| c.to_string()).collect();
            println!("counts: {}", counts.join(" "));
            Ok(())
        }
        Command::Selfcheck => selfcheck(),
    }
}

fn selfcheck() -> Result<(), CliError> {
    let mut failures = 0usize;
    let mut check = |name: &str, outcome: Result<(), String>| match outcome {
        Ok(()) => println!("ok   {name}"),
        Err(reason) => {
            failures += 1;
            println!("FAIL {name}: {reason}");
        }
    };

    let catalog = TilingCatalog::shared();
    check(
        "tiling catalog size",
        (catalog.len() == TILING_COUNT)
            .then_some(())
            .ok_or_else(|| format!("{} tilings", catalog.len())),
    );
    check(
        "tiling symmetry classes",
        (catalog.symmetry_class_count() == SYMMETRY_CLASS_COUNT)
            .then_some(())
            .ok_or_else(|| format!("{} classes", catalog.symmetry_class_count())),
    );
    check(
        "square tiling pinned at index 0",
        (catalog.get(0).map(|t| t.owner_digits())
            == Some([0, 0, 1, 1, 0, 0, 1, 1, 2, 2, 3, 3, 2, 2, 3, 3]))
        .then_some(())
        .ok_or_else(|| "unexpected partition at index 0".to_string()),
    );

    check("4-point transform roundtrip", {
        let v = [3.25f64, -1.5, 0.75, 9.0];
        let back = haar_tetromino_inverse(haar_tetromino(v));
        v.iter()
            .zip(&back)
            .all(|(a, b)| (a - b).abs() < 1e-12)
            .then_some(())
            .ok_or_else(|| format!("{back:?}"))
    });

    check("perfect reconstruction", {
        let img: GrayImage<f64> = textured_image(32, 32, 99);
        forward(&img, 3)
            .and_then(|dec| inverse(&dec))
            .map_err(|e| e.to_string())
            .and_then(|back| {
                let max_err = img
                    .samples()
                    .iter()
                    .zip(back.samples())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                (max_err <= 1e-9)
                    .then_some(())
                    .ok_or_else(|| format!("max error {max_err:e}"))
            })
    });

    check("blur kernel normalization", {
        let img: GrayImage<f64> =
            GrayImage::from_samples(32, 32, vec![100.0; 1024]).expect("valid dims");
        img.gaussian_blur(1.7)
            .map_err(|e| e.to_string())
            .and_then(|b| {
                b.samples()
                    .iter()
                    .all(|&v| (v - 100.0).abs() < 1e-10)
                    .then_some(())
                    .ok_or_else(|| "constant image changed".to_string())
            })
    });

    check("density normalization", {
        let p = BkfParams::new(1.0f64, 2.0).expect("valid");
        integrate(|x| pdf(x, &p), 0.0, 60.0, 1e-9)
            .map_err(|e| e.to_string())
            .and_then(|half| {
                let total = 2.0 * half;
                ((total - 1.0).abs() < 1e-6 && (pdf(0.0, &p) - 0.5).abs() < 1e-9)
                    .then_some(())
                    .ok_or_else(|| format!("integral {total}"))
            })
    });

    check("distance closed form vs quadrature", {
        let a = BkfParams::new(0.7f64, 1.3).expect("valid");
        let b = BkfParams::new(1.6f64, 0.4).expect("valid");
        match (l2_distance_closed(&a, &b), l2_distance_quadrature(&a, &b)) {
            (Ok(c), Ok(q)) => ((c - q).abs() <= 1e-5 * q + 1e-7)
                .then_some(())
                .ok_or_else(|| format!("closed {c} vs quadrature {q}")),
            (c, q) => Err(format!("{c:?} vs {q:?}")),
        }
    });

    check("quantizer endpoints and payload size", {
        let img: GrayImage<f64> = textured_image(64, 64, 7);
        extract(&img)
            .map_err(|e| e.to_string())
            .map(|fv| quantize(&fv))
            .and_then(|qf| {
                (qf.payload().len() == 18 && qf.serialize().len() == 24)
                    .then_some(())
                    .ok_or_else(|| "unexpected payload size".to_string())
            })
    });

    if failures > 0 {
        Err(CliError::SelfCheckFailed(failures))
    } else {
        println!("all checks passed");
        Ok(())
    }
}
