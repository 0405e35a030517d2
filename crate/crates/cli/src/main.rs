//! `fskde`: command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O error, 3 numerical
//! precondition failure. Every failure prints one line
//! `fskde: <usage|io|numerical>: <reason>` on stderr.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use fskde::canonical::scheme_distance;
use fskde::descriptor::DescriptorJson;
use fskde::image_field::{gradient_field, local_fskde};
use fskde::io::{export_field, fmt_f64, load_gray, read_angle_csv};
use fskde::patch_bench::{
    generate_synthetic, load_dataset, run_benchmarks, write_dataset, BenchOptions, Method, SyntheticConfig,
    DEFAULT_EPSILON, DEFAULT_MASK_DIAMETER,
};
use fskde::stability::{random_base, seeded_stream, simulate_stability, symmetric_base};
use fskde::{CanonScheme, Descriptor, GradientOperator, Kernel, KernelMode, TruncationMask, Window};

#[derive(Parser)]
#[command(name = "fskde", version, about = "Fourier-series kernel density estimation of angular data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Approx,
    Auto,
}

impl ModeArg {
    fn resolve(self, order: usize) -> KernelMode {
        match self {
            ModeArg::Exact => KernelMode::Exact,
            ModeArg::Approx => KernelMode::NormalApprox,
            ModeArg::Auto => KernelMode::default_for(order),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CanonArg {
    None,
    F1,
    Fk,
}

impl From<CanonArg> for CanonScheme {
    fn from(c: CanonArg) -> Self {
        match c {
            CanonArg::None => CanonScheme::None,
            CanonArg::F1 => CanonScheme::F1,
            CanonArg::Fk => CanonScheme::Fk,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GradientArg {
    Central,
    Sobel,
}

#[derive(Clone, Copy, ValueEnum)]
enum WindowArg {
    Box,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaseArg {
    Random,
    Symmetric,
}

#[derive(Subcommand)]
enum Command {
    /// Print the kernel sampled on a grid (CSV `theta,h`) followed by its
    /// coefficients as one JSON line `{"K":..,"H":[..]}`.
    Kernel {
        #[arg(long)]
        order: usize,
        #[arg(long, value_enum, default_value = "auto")]
        mode: ModeArg,
        /// Number of grid points on [-π, π).
        #[arg(long, default_value_t = 512, value_parser = clap::value_parser!(u64).range(1..))]
        grid: u64,
    },
    /// Estimate a descriptor from a `theta,weight` CSV and print it as JSON.
    Estimate {
        #[arg(long)]
        order: usize,
        #[arg(long)]
        input: PathBuf,
        /// Angles in the CSV are degrees.
        #[arg(long)]
        degrees: bool,
        #[arg(long, value_enum, default_value = "auto")]
        mode: ModeArg,
        /// Drop coefficients whose kernel ratio falls below this threshold.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Write here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Evaluate a descriptor JSON at angles (CSV `theta,value`).
    Evaluate {
        #[arg(long)]
        descriptor: PathBuf,
        /// Comma-separated angles in radians.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required_unless_present = "grid")]
        theta: Vec<f64>,
        /// Evaluate on this many points of [-π, π) instead.
        #[arg(long, conflicts_with = "theta")]
        grid: Option<usize>,
    },
    /// Distance between two descriptor JSON files.
    Distance {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_enum, default_value = "none")]
        canon: CanonArg,
    },
    /// Compute the local descriptor field of a PGM/PNG image.
    DescribeImage {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        order: usize,
        /// Output directory for plane files and manifest.json.
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value = "box")]
        window: WindowArg,
        /// Box side length.
        #[arg(long, default_value_t = 9)]
        size: usize,
        /// Gaussian window standard deviation, in pixels.
        #[arg(long, default_value_t = 2.0)]
        sigma: f64,
        /// Gaussian window radius; defaults to ceil(3 sigma).
        #[arg(long)]
        radius: Option<usize>,
        #[arg(long, value_enum, default_value = "central")]
        gradient: GradientArg,
        #[arg(long, value_enum, default_value = "auto")]
        mode: ModeArg,
    },
    /// Run the patch-matching benchmark on a dataset manifest.
    Match {
        #[arg(long)]
        manifest: PathBuf,
        /// Comma-separated methods: intensity, hist, hist_canon, fskde,
        /// fskde_f1, fskde_fk.
        #[arg(long, value_delimiter = ',', default_value = "intensity,hist,hist_canon,fskde,fskde_f1,fskde_fk")]
        methods: Vec<String>,
        /// Histogram bins, or reals kept by the FS-KDE methods.
        #[arg(long, default_value_t = 20)]
        size: usize,
        /// Rotate every patch by a random angle before description.
        #[arg(long)]
        rotate: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MASK_DIAMETER)]
        mask_diameter: f64,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        /// Report CSV; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also write per-pair distances to this CSV.
        #[arg(long)]
        dump_distances: Option<PathBuf>,
    },
    /// Monte-Carlo stability simulation of first-coefficient canonicalization.
    Simulate {
        #[arg(long)]
        order: usize,
        #[arg(long)]
        n: usize,
        /// Comma-separated noise scales; defaults to 0.01, 0.1, 0.5 times sqrt(N).
        #[arg(long, value_delimiter = ',')]
        sigmas: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "random")]
        base: BaseArg,
        #[arg(long, value_enum, default_value = "auto")]
        mode: ModeArg,
        /// Per-trial CSV; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        /// JSON summary of means and standard errors.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Write a synthetic patch dataset (PGM patches, pairs.txt, manifest.json).
    GenSynthetic {
        #[arg(long)]
        output: PathBuf,
        /// Pairs per class.
        #[arg(long, default_value_t = 2000)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        size: usize,
    },
}

enum Failure {
    Usage(String),
    Io(String),
    Numerical(String),
}

impl From<fskde::Error> for Failure {
    fn from(e: fskde::Error) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.render().to_string();
            // clap lists missing arguments on the lines after the headline
            let reason: Vec<&str> = text
                .lines()
                .take_while(|l| !l.is_empty() && !l.starts_with("Usage:"))
                .map(|l| l.trim().trim_start_matches("error: "))
                .collect();
            eprintln!("fskde: usage: {}", reason.join(" "));
            match text.lines().find(|l| l.starts_with("Usage:")) {
                Some(usage) => eprintln!("{usage}"),
                None => eprintln!("{}", Cli::command().render_usage()),
            }
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (kind, msg, code) = match f {
                Failure::Usage(m) => ("usage", m, 1),
                Failure::Io(m) => ("io", m, 2),
                Failure::Numerical(m) => ("numerical", m, 3),
            };
            eprintln!("fskde: {kind}: {}", msg.replace('\n', " "));
            ExitCode::from(code)
        }
    }
}

/// Opens `path` for writing, or stdout.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p).map_err(io_err(p))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn output_name(path: Option<&Path>) -> PathBuf {
    path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf)
}

fn grid(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| -std::f64::consts::PI + std::f64::consts::TAU * i as f64 / n as f64)
}

fn read_descriptor(path: &Path) -> Result<Descriptor<f64>, Failure> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let json: DescriptorJson =
        serde_json::from_str(&text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(Descriptor::from_json(&json)?)
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Kernel { order, mode, grid: n } => {
            let kernel = Kernel::<f64>::new(order, mode.resolve(order));
            let mut out = sink(None)?;
            let write = |out: &mut dyn Write| -> io::Result<()> {
                writeln!(out, "theta,h")?;
                for theta in grid(n as usize) {
                    writeln!(out, "{},{}", fmt_f64(theta), fmt_f64(kernel.eval(theta)))?;
                }
                let json = serde_json::json!({ "K": order, "H": kernel.coeffs() });
                writeln!(out, "{json}")?;
                out.flush()
            };
            write(&mut out).map_err(io_err(Path::new("<stdout>")))
        }
        Command::Estimate { order, input, degrees, mode, epsilon, output } => {
            let set = read_angle_csv(&input, degrees)?;
            let kernel = Kernel::new(order, mode.resolve(order));
            let mut d = Descriptor::estimate(&set, &kernel);
            if let Some(eps) = epsilon {
                d = d.truncate(&TruncationMask::new(order, eps)?)?;
            }
            let text = serde_json::to_string(&d.to_json()).expect("descriptor serializes");
            let mut out = sink(output.as_deref())?;
            writeln!(out, "{text}").and_then(|_| out.flush()).map_err(io_err(&output_name(output.as_deref())))
        }
        Command::Evaluate { descriptor, theta, grid: n } => {
            let d = read_descriptor(&descriptor)?;
            let thetas: Vec<f64> = match n {
                Some(0) => return Err(Failure::Usage("--grid must be positive".into())),
                Some(n) => grid(n).collect(),
                None => theta,
            };
            let mut out = sink(None)?;
            let write = |out: &mut dyn Write| -> io::Result<()> {
                writeln!(out, "theta,value")?;
                for t in thetas {
                    writeln!(out, "{},{}", fmt_f64(t), fmt_f64(d.evaluate(t)))?;
                }
                out.flush()
            };
            write(&mut out).map_err(io_err(Path::new("<stdout>")))
        }
        Command::Distance { a, b, canon } => {
            let (a, b) = (read_descriptor(&a)?, read_descriptor(&b)?);
            let dist = scheme_distance(&a, &b, canon.into())?;
            println!("{}", fmt_f64(dist));
            Ok(())
        }
        Command::DescribeImage { input, order, output, window, size, sigma, radius, gradient, mode } => {
            let img = load_gray(&input)?;
            let op = match gradient {
                GradientArg::Central => GradientOperator::Central,
                GradientArg::Sobel => GradientOperator::Sobel,
            };
            let field = gradient_field(img.view(), op)?;
            let window = match window {
                WindowArg::Box => Window::boxed(size, size)?,
                WindowArg::Gaussian => Window::truncated_gaussian(sigma, radius.unwrap_or((3.0 * sigma).ceil() as usize))?,
            };
            let kernel = Kernel::new(order, mode.resolve(order));
            let field = local_fskde(&field, &window, &kernel)?;
            let manifest = export_field(&field, &output)?;
            println!("{}", manifest.display());
            Ok(())
        }
        Command::Match { manifest, methods, size, rotate, seed, mask_diameter, epsilon, output, dump_distances } => {
            let methods: Vec<Method> =
                methods.iter().map(|m| m.parse()).collect::<Result<_, _>>().map_err(|e: fskde::Error| Failure::Usage(e.to_string()))?;
            let dataset = load_dataset(&manifest)?;
            let options = BenchOptions { mask_diameter, epsilon, rotate_seed: rotate.then_some(seed) };
            let report = run_benchmarks(&dataset, &methods, size, &options)?;
            let mut out = sink(output.as_deref())?;
            report.write_csv(&mut out).and_then(|_| out.flush()).map_err(io_err(&output_name(output.as_deref())))?;
            if let Some(path) = dump_distances {
                let mut out = sink(Some(&path))?;
                report.write_distances(&dataset, &mut out).and_then(|_| out.flush()).map_err(io_err(&path))?;
            }
            Ok(())
        }
        Command::Simulate { order, n, sigmas, trials, seed, base, mode, output, summary } => {
            if n == 0 {
                return Err(Failure::Usage("--n must be positive".into()));
            }
            let sigmas = if sigmas.is_empty() {
                let root = (n as f64).sqrt();
                vec![0.01 * root, 0.1 * root, 0.5 * root]
            } else {
                sigmas
            };
            let base = match base {
                BaseArg::Random => random_base(n, &mut seeded_stream(seed, u64::MAX)),
                BaseArg::Symmetric => symmetric_base(n),
            };
            let kernel = Kernel::new(order, mode.resolve(order));
            let report = simulate_stability(&base, &kernel, &sigmas, trials, seed)?;
            let mut out = sink(output.as_deref())?;
            report.write_csv(&mut out).and_then(|_| out.flush()).map_err(io_err(&output_name(output.as_deref())))?;
            if let Some(path) = summary {
                let text = serde_json::to_string_pretty(&report.summary_json()).expect("summary serializes");
                fs::write(&path, text).map_err(io_err(&path))?;
            }
            Ok(())
        }
        Command::GenSynthetic { output, pairs, seed, size } => {
            let cfg = SyntheticConfig {
                n_corresponding: pairs,
                n_non_corresponding: pairs,
                patch_size: size,
                seed,
                ..Default::default()
            };
            let dataset = generate_synthetic(&cfg)?;
            let manifest = write_dataset(&dataset, &output)?;
            println!("{}", manifest.display());
            Ok(())
        }
    }
}
