//! Command-line front end: encode, decode, analyze, bdrate, synth.
//!
//! All text output is line-oriented `key=value`. Exit status is 0 on
//! success, 1 on usage errors and 2 on data or format errors.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use chantrunc::bitstream::{CodecChoice, CodecRegistry, Qrle};
use chantrunc::fcmt::{read_tensor_sequence, write_tensor_sequence};
use chantrunc::metrics::{bd_rate, bitrate_of_stream, masked_mse, RateAccuracyCurve, RatePoint};
use chantrunc::pipeline::{decode_stream, encode_sequence, EncoderConfig};
use chantrunc::synth::{Regimes, SynthSpec};
use chantrunc::tensor::channel_stats;
use chantrunc::truncation::{
    classify_channels, compute_threshold, plan_sequence, Alpha, CutoffConfig,
};
use chantrunc::{Error, SequenceF32};

#[derive(Parser)]
#[command(
    name = "chantrunc",
    version,
    about = "Feature tensor channel truncation codec"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CodecArg {
    Raw,
    Qrle,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a .fcmt tensor sequence into a .fctb stream.
    Encode {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, default_value = "2/3", value_parser = parse_alpha)]
        alpha: Alpha,
        #[arg(long, default_value_t = 128)]
        refresh: usize,
        #[arg(long, value_enum, default_value = "qrle")]
        codec: CodecArg,
        /// QRLE requantization step (1, 2, 4, 8, 16 or 32).
        #[arg(long, default_value_t = 1)]
        q: u16,
        /// Send every channel (the reference path without truncation).
        #[arg(long)]
        no_truncation: bool,
        /// Also encode at each of these QRLE steps and report rate points.
        #[arg(long, value_delimiter = ',')]
        ladder: Vec<u16>,
        /// Write the ladder's rate,accuracy curve here.
        #[arg(long)]
        curve_out: Option<PathBuf>,
        /// Write a JSON run manifest here.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        fps: Option<f64>,
    },
    /// Decode a .fctb stream back to a full-shape .fcmt sequence.
    Decode { input: PathBuf, output: PathBuf },
    /// Print channel ranges, the cutoff threshold and the resulting mask.
    Analyze {
        input: PathBuf,
        #[arg(long, default_value = "2/3", value_parser = parse_alpha)]
        alpha: Alpha,
        /// Frame to analyze.
        #[arg(long, default_value_t = 0)]
        frame: usize,
    },
    /// BD-rate of a test curve against an anchor curve, in percent.
    Bdrate {
        #[arg(long)]
        anchor: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
    /// Generate a deterministic synthetic corpus.
    Synth {
        output: PathBuf,
        #[arg(long, default_value_t = 320)]
        channels: usize,
        #[arg(long, default_value_t = 200)]
        active: usize,
        #[arg(long, default_value_t = 32)]
        height: usize,
        #[arg(long, default_value_t = 32)]
        width: usize,
        #[arg(long, default_value_t = 128)]
        frames: usize,
        #[arg(long, default_value_t = 4.0)]
        signal: f64,
        #[arg(long, default_value_t = 0.2)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Switch the active channel set every N frames.
        #[arg(long, requires = "regime_active")]
        regime_length: Option<usize>,
        /// Active counts of successive regimes.
        #[arg(long, value_delimiter = ',', requires = "regime_length")]
        regime_active: Vec<usize>,
    },
}

fn parse_alpha(s: &str) -> Result<Alpha, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum CliError {
    Usage(String),
    Data(Error),
    Io(PathBuf, std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

impl CliError {
    fn report(&self) -> ExitCode {
        let (kind, msg, code) = match self {
            CliError::Usage(m) => ("usage", m.clone(), 1),
            CliError::Data(e) => (e.kind(), e.to_string(), 2),
            CliError::Io(p, e) => ("io", format!("{}: {e}", p.display()), 2),
        };
        eprintln!("error kind={kind} message={msg:?}");
        ExitCode::from(code)
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::Io(path.into(), e))
}

fn write(path: &Path, bytes: &[u8]) -> CliResult {
    fs::write(path, bytes).map_err(|e| CliError::Io(path.into(), e))
}

fn codec_choice(codec: CodecArg, q: u16) -> CliResult<CodecChoice> {
    match codec {
        CodecArg::Raw if q != 1 => {
            Err(CliError::Usage("--q applies to the qrle codec only".into()))
        }
        CodecArg::Raw => Ok(CodecChoice::Raw),
        CodecArg::Qrle => Qrle::new(q)
            .map(CodecChoice::Qrle)
            .map_err(|e| CliError::Usage(e.to_string())),
    }
}

#[derive(Serialize)]
struct RatePointRecord {
    q: u16,
    bits: u64,
    accuracy: f64,
}

#[derive(Serialize)]
struct RunManifest {
    input: String,
    output: String,
    alpha: String,
    refresh_period: usize,
    truncation: bool,
    inner_codec_id: u8,
    q: u16,
    q_ladder: Vec<u16>,
    rate_points: Vec<RatePointRecord>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_encode(
    input: &Path,
    output: &Path,
    alpha: Alpha,
    refresh: usize,
    codec: CodecArg,
    q: u16,
    truncation: bool,
    ladder: &[u16],
    curve_out: Option<&Path>,
    manifest: Option<&Path>,
    fps: Option<f64>,
) -> CliResult {
    let cutoff = CutoffConfig::new(alpha, refresh).map_err(|e| CliError::Usage(e.to_string()))?;
    if !ladder.is_empty() && !matches!(codec, CodecArg::Qrle) {
        return Err(CliError::Usage("--ladder requires --codec qrle".into()));
    }
    if curve_out.is_some() && ladder.is_empty() {
        return Err(CliError::Usage("--curve-out requires --ladder".into()));
    }
    let config = EncoderConfig {
        cutoff,
        truncation,
        codec: codec_choice(codec, q)?,
    };
    let seq = read_tensor_sequence(&read(input)?)?;

    let encoded = encode_sequence(&seq, &config)?;
    write(output, &encoded.bytes)?;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "codec={} q={} alpha={} refresh={} truncation={}",
        config.codec.codec().name(),
        config.codec.step(),
        alpha,
        refresh,
        if truncation { "on" } else { "off" }
    );
    for p in &encoded.plans {
        let _ = writeln!(
            out,
            "period={} start={} length={} truncation_enabled={} active_count={}",
            p.period_index,
            p.start,
            p.length,
            p.truncation_enabled as u8,
            p.mask.active_count()
        );
    }
    let l = encoded.layout;
    let _ = writeln!(
        out,
        "layout_cols={} layout_rows={} frame_width={} frame_height={}",
        l.cols,
        l.rows,
        l.frame_width(),
        l.frame_height()
    );
    let rate = bitrate_of_stream(encoded.bytes.len(), seq.len(), fps)?;
    let _ = write!(
        out,
        "frames={} total_bits={} hls_bits={} bits_per_frame={}",
        seq.len(),
        rate.total_bits,
        encoded.hls_bits(),
        rate.bits_per_frame
    );
    if let Some(bps) = rate.bits_per_second {
        let _ = write!(out, " bits_per_second={bps}");
    }
    out.push('\n');

    let mut rate_points = Vec::new();
    if !ladder.is_empty() {
        let registry = CodecRegistry::default();
        // accuracy proxy: negative MSE over the channels the cutoff keeps
        let reference_plans = plan_sequence(&seq, &cutoff, true)?;
        for &step in ladder {
            let c = EncoderConfig {
                codec: codec_choice(CodecArg::Qrle, step)?,
                ..config
            };
            let e = encode_sequence(&seq, &c)?;
            let recon: SequenceF32 = decode_stream(&e.bytes, &registry)?;
            let accuracy = -masked_mse(&seq, &recon, &reference_plans)?;
            let _ = writeln!(
                out,
                "rate_point q={step} bits={} accuracy={accuracy}",
                e.total_bits()
            );
            rate_points.push(RatePointRecord {
                q: step,
                bits: e.total_bits(),
                accuracy,
            });
        }
        if let Some(path) = curve_out {
            let mut pts: Vec<RatePoint<f64>> = rate_points
                .iter()
                .map(|p| RatePoint {
                    rate: p.bits as f64,
                    accuracy: p.accuracy,
                })
                .collect();
            pts.sort_by(|a, b| a.rate.total_cmp(&b.rate));
            write(path, RateAccuracyCurve::new(pts)?.to_csv().as_bytes())?;
        }
    }

    if let Some(path) = manifest {
        let m = RunManifest {
            input: input.display().to_string(),
            output: output.display().to_string(),
            alpha: alpha.to_string(),
            refresh_period: refresh,
            truncation,
            inner_codec_id: config.codec.id(),
            q: config.codec.step(),
            q_ladder: ladder.to_vec(),
            rate_points,
        };
        let json = serde_json::to_string_pretty(&m).expect("manifest serializes");
        write(path, json.as_bytes())?;
    }
    print!("{out}");
    Ok(())
}

fn cmd_decode(input: &Path, output: &Path) -> CliResult {
    let seq = decode_stream(&read(input)?, &CodecRegistry::default())?;
    write(output, &write_tensor_sequence(&seq)?)?;
    let s = seq.shape();
    println!(
        "frames={} channels={} height={} width={}",
        seq.len(),
        s.channels,
        s.height,
        s.width
    );
    Ok(())
}

fn cmd_analyze(input: &Path, alpha: Alpha, frame: usize) -> CliResult {
    let seq = read_tensor_sequence(&read(input)?)?;
    let tensor = seq.frames().get(frame).ok_or_else(|| {
        CliError::Usage(format!(
            "frame {frame} out of range (sequence has {})",
            seq.len()
        ))
    })?;
    let stats = channel_stats(tensor);
    let ranges: Vec<f32> = stats.iter().map(|s| s.range).collect();
    let threshold = compute_threshold(&ranges, alpha)?;
    let mask = classify_channels(&ranges, threshold)?;

    let mut out = String::new();
    let _ = writeln!(out, "frame={frame} channels={} alpha={alpha}", stats.len());
    for s in &stats {
        let _ = writeln!(
            out,
            "channel={} min={} max={} range={} active={}",
            s.channel_index,
            s.min,
            s.max,
            s.range,
            mask.is_active(s.channel_index) as u8
        );
    }
    let _ = writeln!(out, "threshold={threshold}");
    let _ = writeln!(
        out,
        "active_count={} inactive_count={}",
        mask.active_count(),
        mask.len() - mask.active_count()
    );
    print!("{out}");
    Ok(())
}

fn cmd_bdrate(anchor: &Path, test: &Path) -> CliResult {
    let load = |p: &Path| -> CliResult<RateAccuracyCurve<f64>> {
        let text = String::from_utf8(read(p)?).map_err(|_| {
            CliError::Data(Error::CurveSyntax {
                line: 0,
                reason: "not UTF-8".into(),
            })
        })?;
        Ok(RateAccuracyCurve::parse_csv(&text)?)
    };
    let bd = bd_rate(&load(anchor)?, &load(test)?)?;
    println!("bd_rate_percent={bd:.6}");
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Encode {
            input,
            output,
            alpha,
            refresh,
            codec,
            q,
            no_truncation,
            ladder,
            curve_out,
            manifest,
            fps,
        } => cmd_encode(
            &input,
            &output,
            alpha,
            refresh,
            codec,
            q,
            !no_truncation,
            &ladder,
            curve_out.as_deref(),
            manifest.as_deref(),
            fps,
        ),
        Command::Decode { input, output } => cmd_decode(&input, &output),
        Command::Analyze {
            input,
            alpha,
            frame,
        } => cmd_analyze(&input, alpha, frame),
        Command::Bdrate { anchor, test } => cmd_bdrate(&anchor, &test),
        Command::Synth {
            output,
            channels,
            active,
            height,
            width,
            frames,
            signal,
            noise,
            seed,
            regime_length,
            regime_active,
        } => {
            let spec = SynthSpec {
                channels,
                active_count: active,
                height,
                width,
                frame_count: frames,
                signal_amplitude: signal,
                noise_amplitude: noise,
                seed,
                regimes: regime_length.map(|length| Regimes {
                    length,
                    active_counts: regime_active.clone(),
                }),
            };
            spec.validate(Alpha::DEFAULT)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let seq: SequenceF32 = spec.generate()?;
            write(&output, &write_tensor_sequence(&seq)?)?;
            println!("frames={frames} channels={channels} active={active} height={height} width={width} seed={seed}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            return CliError::Usage(first.trim_start_matches("error: ").to_string()).report();
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}
