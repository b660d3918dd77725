use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bcs_core::codec::{analyze, context_count};
use bcs_core::entropy::{bpp_from_entropy, zero_order_entropy};
use bcs_core::sensing::measurements_for_subrate;
use bcs_core::sweep::{self, GridPoint, RdRow, SweepConfig};
use bcs_core::{
    decode_image, encode_image_detailed, read_pgm, significance_position_profile, write_pgm, CodecParams, Container,
    EdgeMode, Error, GrayImage, Scheme, HEADER_LEN,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_FORMAT: u8 = 3;

#[derive(Parser)]
#[command(name = "bcs", version, about = "Block compressive sensing measurement codec")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure, quantize and entropy code a PGM image.
    Encode {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long, value_enum, default_value_t = SchemeArg::Ac)]
        scheme: SchemeArg,
        /// Write the quantization indices as CSV (one row per block).
        #[arg(long)]
        dump_indices: Option<PathBuf>,
    },
    /// Decode a stream back to quantization indices and a back-projection preview.
    Decode {
        input: PathBuf,
        #[arg(long)]
        preview: Option<PathBuf>,
        #[arg(long)]
        dump_indices: Option<PathBuf>,
    },
    /// Rate sweep over a grid of (subrate, step) points for each input image.
    RdSweep {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// File with one `subrate,step` pair per line (default: built-in 20-point grid).
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        block_size: usize,
        #[arg(long)]
        pad: bool,
    },
    /// Print the zero-order entropy rate estimate of the quantization indices.
    Entropy {
        input: PathBuf,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Per-position frequency of significant indices.
    SigProfile {
        input: PathBuf,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Clone, Copy)]
struct Sampling {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Measurements per pixel, in (0, 1].
    #[arg(long)]
    subrate: f64,
    /// Quantizer step size.
    #[arg(long)]
    step: f64,
    #[arg(long, default_value_t = 16)]
    block_size: usize,
    /// Pad images whose sides are not multiples of the block size.
    #[arg(long)]
    pad: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Ac,
    Cabac,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Ac => Scheme::Proposed,
            SchemeArg::Cabac => Scheme::CabacStyle,
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

type CmdResult = std::result::Result<(), Failure>;

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn codec_failure(context: &Path, e: Error) -> Failure {
    let code = match e {
        Error::InvalidParameter(_) | Error::Geometry(_) | Error::LengthMismatch { .. } => EXIT_USAGE,
        _ => EXIT_FORMAT,
    };
    Failure {
        code,
        message: format!("{}: {e}", context.display()),
    }
}

fn read_file(path: &Path) -> std::result::Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    })
}

fn write_file(path: &Path, data: &[u8]) -> CmdResult {
    fs::write(path, data).map_err(|e| Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    })
}

fn load_image(path: &Path) -> std::result::Result<GrayImage, Failure> {
    read_pgm(&read_file(path)?).map_err(|e| codec_failure(path, e))
}

fn edge_mode(pad: bool) -> EdgeMode {
    if pad {
        EdgeMode::Replicate
    } else {
        EdgeMode::Strict
    }
}

impl Sampling {
    fn params(&self, scheme: Scheme) -> std::result::Result<CodecParams, Failure> {
        if !(self.subrate > 0.0 && self.subrate <= 1.0) {
            return Err(usage(format!("--subrate must be in (0, 1], got {}", self.subrate)));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(usage(format!("--step must be positive, got {}", self.step)));
        }
        if self.block_size == 0 || self.block_size > 255 {
            return Err(usage(format!(
                "--block-size must be in 1..=255, got {}",
                self.block_size
            )));
        }
        let measurements = measurements_for_subrate(self.subrate, self.block_size).map_err(|e| usage(e.to_string()))?;
        Ok(CodecParams {
            seed: self.seed,
            block_size: self.block_size,
            measurements,
            step: self.step,
            scheme,
            edge_mode: edge_mode(self.pad),
        })
    }
}

fn indices_csv(blocks: &[Vec<i32>]) -> String {
    let mut s = String::from("block");
    for m in 1..=blocks.first().map_or(0, Vec::len) {
        let _ = write!(s, ",i{m}");
    }
    s.push('\n');
    for (j, b) in blocks.iter().enumerate() {
        let _ = write!(s, "{}", j + 1);
        for i in b {
            let _ = write!(s, ",{i}");
        }
        s.push('\n');
    }
    s
}

fn cmd_encode(input: &Path, output: &Path, sampling: &Sampling, scheme: Scheme, dump: Option<&Path>) -> CmdResult {
    let params = sampling.params(scheme)?;
    let img = load_image(input)?;
    let enc = encode_image_detailed(&img, &params).map_err(|e| codec_failure(input, e))?;
    let bytes = enc.container.to_bytes();
    write_file(output, &bytes)?;
    if let Some(path) = dump {
        write_file(path, indices_csv(&enc.analysis.indices).as_bytes())?;
    }
    let pixels = img.pixel_count() as f64;
    println!(
        "measurements/block {}  blocks {}  contexts {}",
        params.measurements,
        enc.analysis.indices.len(),
        context_count(scheme)
    );
    println!(
        "payload {} bytes  bpp {:.6}  total {} bytes  bpp incl. header {:.6}",
        enc.container.payload.len(),
        8.0 * enc.container.payload.len() as f64 / pixels,
        bytes.len(),
        8.0 * bytes.len() as f64 / pixels
    );
    Ok(())
}

fn cmd_decode(input: &Path, preview: Option<&Path>, dump: Option<&Path>) -> CmdResult {
    let bytes = read_file(input)?;
    let container = Container::from_bytes(&bytes).map_err(|e| codec_failure(input, e))?;
    let decoded = decode_image(&container).map_err(|e| match e {
        Error::Truncated { offset } => codec_failure(
            input,
            Error::Truncated {
                offset: offset + HEADER_LEN,
            },
        ),
        e => codec_failure(input, e),
    })?;
    if let Some(path) = preview {
        write_file(path, &write_pgm(&decoded.preview))?;
    }
    if let Some(path) = dump {
        write_file(path, indices_csv(&decoded.indices).as_bytes())?;
    }
    let h = &container.header;
    println!(
        "{}x{}  B={}  M_B={}  step={}  seed={}  scheme={:?}  blocks={}",
        h.width,
        h.height,
        h.block_size,
        h.measurements,
        h.quant_step,
        h.seed,
        h.scheme,
        decoded.indices.len()
    );
    Ok(())
}

const SWEEP_HEADER: &str = "image,point,subrate,m_b,step,bpp_entropy,bpp_cabac,bpp_ac,br13,br23,mse\n";

fn sweep_row(image: &str, r: &RdRow) -> String {
    format!(
        "{image},{},{:.6},{},{:.6},{:.6},{:.6},{:.6},{:.4},{:.4},{:.6}\n",
        r.point, r.subrate, r.measurements, r.step, r.bpp_entropy, r.bpp_cabac, r.bpp_ac, r.br13, r.br23, r.mse
    )
}

fn cmd_rd_sweep(inputs: &[PathBuf], grid: Option<&Path>, out: &Path, cfg: &SweepConfig) -> CmdResult {
    if cfg.block_size == 0 || cfg.block_size > 255 {
        return Err(usage(format!(
            "--block-size must be in 1..=255, got {}",
            cfg.block_size
        )));
    }
    let points: Vec<GridPoint> = match grid {
        Some(path) => {
            let text = String::from_utf8_lossy(&read_file(path)?).into_owned();
            sweep::parse_grid(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => sweep::default_grid(),
    };
    let mut csv = String::from(SWEEP_HEADER);
    let mut first_failure: Option<Failure> = None;
    for input in inputs {
        let name = input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let img = match load_image(input) {
            Ok(img) => img,
            Err(f) => {
                eprintln!("error: {}", f.message);
                first_failure.get_or_insert(f);
                continue;
            }
        };
        let mut rows = Vec::new();
        for res in sweep::run_image(&img, &points, cfg) {
            match res {
                Ok(r) => {
                    csv.push_str(&sweep_row(&name, &r));
                    rows.push(r);
                }
                Err(e) => {
                    let f = codec_failure(input, e);
                    eprintln!("error: {}", f.message);
                    first_failure.get_or_insert(f);
                }
            }
        }
        if let Some(a) = sweep::average(&rows) {
            let _ = writeln!(
                csv,
                "{name},AVG,,,,{:.6},{:.6},{:.6},{:.4},{:.4},{:.6}",
                a.bpp_entropy, a.bpp_cabac, a.bpp_ac, a.br13, a.br23, a.mse
            );
            eprintln!(
                "{name}: {} points  avg BR(1,3) {:.2}%  avg BR(2,3) {:.2}%",
                rows.len(),
                a.br13,
                a.br23
            );
        }
    }
    write_file(out, csv.as_bytes())?;
    first_failure.map_or(Ok(()), Err)
}

fn cmd_entropy(input: &Path, sampling: &Sampling) -> CmdResult {
    let params = sampling.params(Scheme::Proposed)?;
    let img = load_image(input)?;
    let a = analyze(&img, &params).map_err(|e| codec_failure(input, e))?;
    let bits = zero_order_entropy(a.indices.iter().flatten().copied()).map_err(|e| codec_failure(input, e))?;
    let bpp = bpp_from_entropy(bits, a.total_indices(), img.pixel_count()).map_err(|e| codec_failure(input, e))?;
    println!("entropy {bits:.6} bits/index  bpp {bpp:.6}");
    Ok(())
}

fn cmd_sig_profile(input: &Path, sampling: &Sampling, out: &Path) -> CmdResult {
    let params = sampling.params(Scheme::Proposed)?;
    let img = load_image(input)?;
    let a = analyze(&img, &params).map_err(|e| codec_failure(input, e))?;
    let profile = significance_position_profile(&a.indices).map_err(|e| codec_failure(input, e))?;
    let header: Vec<String> = (1..=profile.len()).map(|m| format!("m{m}")).collect();
    let values: Vec<String> = profile.iter().map(|f| format!("{f:.6}")).collect();
    let csv = format!("{}\n{}\n", header.join(","), values.join(","));
    write_file(out, csv.as_bytes())
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Encode {
            input,
            output,
            sampling,
            scheme,
            dump_indices,
        } => cmd_encode(&input, &output, &sampling, scheme.into(), dump_indices.as_deref()),
        Command::Decode {
            input,
            preview,
            dump_indices,
        } => cmd_decode(&input, preview.as_deref(), dump_indices.as_deref()),
        Command::RdSweep {
            inputs,
            grid,
            out,
            seed,
            block_size,
            pad,
        } => {
            let cfg = SweepConfig {
                seed,
                block_size,
                edge_mode: edge_mode(pad),
            };
            cmd_rd_sweep(&inputs, grid.as_deref(), &out, &cfg)
        }
        Command::Entropy { input, sampling } => cmd_entropy(&input, &sampling),
        Command::SigProfile { input, sampling, out } => cmd_sig_profile(&input, &sampling, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
