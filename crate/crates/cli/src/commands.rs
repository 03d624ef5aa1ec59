use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use cmfb::engine::{measure_with_tolerance, AnalysisBank, SynthesisBank};
use cmfb::frame::{channel_responses, MIN_FRAME_GRID};
use cmfb::io::{
    load_prototype, read_signal, read_subbands, save_prototype, write_csv, write_signal,
    write_subbands,
};
use cmfb::prototype::frequency_grid;
use cmfb::{
    derive_synthesis_gains, design_prototype, frame_bounds, stopband_attenuation, DesignSpec,
    Error, PrototypeFilter, SystemResponse,
};

use crate::{
    DesignArgs, Failure, Mode, ProcessArgs, ResponseArgs, VerifyArgs, EXIT_INFEASIBLE, EXIT_USAGE,
    EXIT_VERIFY,
};

type Outcome = std::result::Result<(), Failure>;

fn create(path: &Path) -> std::result::Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::new(crate::EXIT_IO, format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> std::result::Result<File, Failure> {
    File::open(path).map_err(|e| Failure::new(crate::EXIT_IO, format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> std::result::Result<PrototypeFilter, Failure> {
    load_prototype(path).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

fn default_edge(channels: usize) -> f64 {
    1.5 * PI / channels as f64
}

pub fn design(args: &DesignArgs) -> Outcome {
    let mut spec = DesignSpec::new(args.channels, args.poles);
    spec.passband_ripple_db = args.ripple_db;
    if let Some(c) = args.cutoff {
        spec.cutoff = c;
    }
    if let Some(w) = args.stopband_edge {
        spec.stopband_edge = w;
    }
    spec.seed = args.seed;
    spec.max_iterations = args.max_iterations;

    eprintln!(
        "designing M={} N={} (ripple {} dB, passband edge {:.6} rad, stopband edge {:.6} rad, seed {})",
        spec.channels,
        spec.poles,
        spec.passband_ripple_db,
        spec.passband_edge(),
        spec.stopband_edge,
        spec.seed
    );
    let result = match design_prototype(&spec) {
        Ok(r) => r,
        Err(Error::InfeasibleSpec { best }) => {
            return Err(Failure::new(
                EXIT_INFEASIBLE,
                format!(
                    "ripple target {} dB not met: best design has {:.4} dB ripple, {:.2} dB stopband attenuation; nothing written",
                    spec.passband_ripple_db, best.passband_ripple_db, best.stopband_attenuation_db
                ),
            ))
        }
        Err(e) => return Err(e.into()),
    };
    let system = measure_with_tolerance(&result.prototype, cmfb::engine::PR_TOLERANCE)?;
    save_prototype(&result.prototype, &args.output)?;

    println!("channels              {}", spec.channels);
    println!("poles                 {}", spec.poles);
    println!(
        "stopband attenuation  {:.2} dB (soft target >= 25 dB)",
        result.stopband_attenuation_db
    );
    println!("passband ripple       {:.4} dB", result.passband_ripple_db);
    println!("iterations            {}", result.iterations);
    println!("converged             {}", result.converged);
    println!("system delay          {}", system.delay);
    println!("system gain           {:.12}", system.gain);
    println!("coefficients          {}", args.output.display());
    Ok(())
}

pub fn verify(args: &VerifyArgs) -> Outcome {
    if args.grid < MIN_FRAME_GRID {
        return Err(Failure::new(
            EXIT_USAGE,
            format!(
                "grid must have at least {MIN_FRAME_GRID} points, got {}",
                args.grid
            ),
        ));
    }
    let p = load(&args.coefficients)?;
    let m = p.channels();
    println!("channels              {m}");
    println!("poles                 {}", p.poles());
    println!("symmetry              {}", p.symmetry().as_str());

    let system = match measure_with_tolerance(&p, args.tolerance) {
        Ok(s) => s,
        Err(e) => {
            println!("perfect reconstruction FAIL");
            return Err(e.into());
        }
    };
    println!("system delay          {}", system.delay);
    println!("system gain           {:.12}", system.gain);
    println!("max residual          {:.3e}", system.residual);

    let gains = derive_synthesis_gains(&p)?;
    println!();
    println!("   k            a_k            s_k");
    for (k, (a, s)) in p.numerator().iter().zip(gains.as_slice()).enumerate() {
        println!("{k:>4} {a:>14.8} {s:>14.8}");
    }

    let frame = frame_bounds(&p, args.grid)?;
    println!();
    println!("frame lower bound     {:.9}", frame.lower);
    println!("frame upper bound     {:.9}", frame.upper);
    println!("frame ratio           {:.6} dB", frame.ratio_db);
    println!("brute-force ratio     {:.6} dB", frame.brute_force_ratio_db);
    println!("eigen cross-check     {:.3e} dB", frame.cross_check_db);

    let edge = args.stopband_edge.unwrap_or_else(|| default_edge(m));
    let att = stopband_attenuation(&p, edge)?;
    println!("stopband attenuation  {att:.2} dB (edge {edge:.6} rad)");
    println!();
    println!("perfect reconstruction PASS");
    Ok(())
}

fn db(v: f64) -> f64 {
    20.0 * v.max(1e-300).log10()
}

pub fn response(args: &ResponseArgs) -> Outcome {
    if args.grid < 2 {
        return Err(Failure::new(EXIT_USAGE, "grid must have at least 2 points"));
    }
    let p = load(&args.coefficients)?;
    let omega = frequency_grid(args.grid);
    let channels = channel_responses(&p, &omega);

    let names: Vec<String> = (0..p.channels()).map(|m| format!("h{m}_db")).collect();
    let mut header: Vec<&str> = vec!["omega"];
    header.extend(names.iter().map(String::as_str));
    if args.prototype {
        header.push("prototype_db");
    }
    let rows: Vec<Vec<f64>> = omega
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let mut row = Vec::with_capacity(header.len());
            row.push(w);
            row.extend(channels.iter().map(|h| db(h[i].norm())));
            if args.prototype {
                row.push(db(p.response_at(w).norm()));
            }
            row
        })
        .collect();

    match &args.output {
        Some(path) => write_csv(create(path)?, &header, &rows)?,
        None => write_csv(std::io::stdout().lock(), &header, &rows)?,
    }
    Ok(())
}

/// Zero-pad to a whole number of blocks.
fn pad_to_blocks(mut x: Vec<f64>, m: usize) -> Vec<f64> {
    let rem = x.len() % m;
    if rem != 0 {
        eprintln!("padding input with {} zeros to a multiple of {m}", m - rem);
        x.resize(x.len() + m - rem, 0.0);
    }
    x
}

/// Drop the system delay and undo the system gain.
fn compensate(raw: &[f64], system: &SystemResponse) -> Vec<f64> {
    raw.iter()
        .skip(system.delay)
        .map(|v| v / system.gain)
        .collect()
}

pub fn process(args: &ProcessArgs) -> Outcome {
    let p = load(&args.coefficients)?;
    let m = p.channels();
    let format = args.format.into();
    match args.mode {
        Mode::Analyze => {
            let x = pad_to_blocks(read_signal(open(&args.input)?, format)?, m);
            let sub = AnalysisBank::new(&p)?.process(&x)?;
            write_subbands(create(&args.output)?, &sub)?;
            eprintln!(
                "analyzed {} samples into {m} x {} subband samples",
                x.len(),
                x.len() / m
            );
        }
        Mode::Synthesize => {
            let sub = read_subbands(open(&args.input)?)?;
            if sub.len() != m {
                return Err(Error::ShapeMismatch(format!(
                    "subband file has {} channels, coefficients have {m}",
                    sub.len()
                ))
                .into());
            }
            let system = measure_with_tolerance(&p, args.tolerance)?;
            let raw = SynthesisBank::new(&p)?.process(&sub)?;
            let y = compensate(&raw, &system);
            write_signal(create(&args.output)?, &y, format)?;
            eprintln!(
                "synthesized {} samples (delay {} removed)",
                y.len(),
                system.delay
            );
        }
        Mode::Roundtrip => {
            let x = pad_to_blocks(read_signal(open(&args.input)?, format)?, m);
            let system = measure_with_tolerance(&p, args.tolerance)?;
            let sub = AnalysisBank::new(&p)?.process(&x)?;
            let raw = SynthesisBank::new(&p)?.process(&sub)?;
            let y = compensate(&raw, &system);
            let mut out = create(&args.output)?;
            write_signal(&mut out, &y, format)?;
            out.flush().map_err(Error::from)?;

            let (err, norm) = y.iter().zip(&x).fold((0.0, 0.0), |(e, n), (a, b)| {
                (e + (a - b) * (a - b), n + b * b)
            });
            let rel = if norm > 0.0 {
                (err / norm).sqrt()
            } else {
                err.sqrt()
            };
            println!("samples               {}", y.len());
            println!("system delay          {}", system.delay);
            println!("system gain           {:.12}", system.gain);
            println!("relative error        {rel:.3e}");
            if !(rel <= args.tolerance) {
                return Err(Failure::new(
                    EXIT_VERIFY,
                    format!("relative error {rel:.3e} exceeds {:.1e}", args.tolerance),
                ));
            }
        }
    }
    Ok(())
}
