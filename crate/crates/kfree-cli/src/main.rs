//! `kfree`: command-line surface over the certified-bounds and
//! empirical-verification toolkit.

use clap::{Parser, Subcommand, ValueEnum};
use kfree::critical::{enumerate_s, gap_histogram, validate_spacing};
use kfree::interval::parse_rational;
use kfree::optimizer::{search, SearchSpec};
use kfree::pipeline::{assemble_margin, preset, prove_range, PRESET_NAMES};
use kfree::sieve::{
    check_interval, count_kfree, scan_gaps_detailed, sieve_segment, verify_record_run,
    DEFAULT_SEGMENT,
};
use kfree::{CertInterval, Error};
use serde_json::{json, Value};

const EXIT_OK: i32 = 0;
const EXIT_UNVERIFIED: i32 = 1;
const EXIT_USAGE: i32 = 2;
const EXIT_HYPOTHESIS: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Parser)]
#[command(
    name = "kfree",
    version,
    about = "Certified bounds and exhaustive verification for gaps between squarefree integers",
    propagate_version = true
)]
struct Cli {
    /// Output format for reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Worker thread count (default: KFREE_THREADS or all cores). Output is
    /// byte-identical across thread counts.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the k-free integers in [lo, hi).
    Sieve {
        #[arg(long)]
        lo: u64,
        #[arg(long)]
        hi: u64,
        #[arg(long, default_value_t = 2)]
        k: u32,
    },
    /// Scan maximal runs of non-k-free integers with starts up to a limit.
    Gaps {
        #[arg(long)]
        limit: u64,
        #[arg(long, default_value_t = 2)]
        k: u32,
        /// Segment length for the scan (clamped to [64, 2^30]).
        #[arg(long, default_value_t = DEFAULT_SEGMENT)]
        segment: u64,
    },
    /// Find the least k-free integer in (x, x + floor(h)].
    CheckInterval {
        #[arg(long)]
        x: u64,
        /// Interval length as an integer, decimal, or fraction.
        #[arg(long)]
        h: String,
        #[arg(long, default_value_t = 2)]
        k: u32,
    },
    /// Exact count of k-free integers up to x (Mobius identity).
    Count {
        #[arg(long)]
        x: u64,
        #[arg(long, default_value_t = 2)]
        k: u32,
    },
    /// Verify a claimed maximal run of consecutive non-squarefree integers.
    VerifyRecord {
        #[arg(long)]
        start: u64,
        #[arg(long)]
        length: u64,
    },
    /// Enumerate the critical set S(M, N) = odd u in (M, N] with
    /// x mod u^2 >= u^2 - h.
    EnumerateS {
        #[arg(long)]
        x: u64,
        #[arg(long)]
        h: u64,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        n: u64,
    },
    /// Enumerate S(M, lambda*M) and check the spacing lemmas exactly.
    ValidateSpacing {
        #[arg(long)]
        x: u64,
        #[arg(long)]
        h: u64,
        /// H, the lower end of the composed M-range (the hypothesis H <= M
        /// is reported as a flag).
        #[arg(long)]
        cap_h: u64,
        #[arg(long)]
        m: u64,
        #[arg(long, default_value = "1.045")]
        lambda: String,
    },
    /// Evaluate the full sigma-budget of a preset at one point x = e^t.
    Sigma {
        /// One of the built-in parameter rows.
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESET_NAMES))]
        preset: String,
        /// log x at which to evaluate (default: the preset's range base).
        #[arg(long)]
        x_log: Option<String>,
    },
    /// Certify the budget over a preset's whole x-range.
    Prove {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESET_NAMES))]
        preset: String,
    },
    /// Grid search + coordinate descent over parameter sets from a
    /// key=value config file ("-" for stdin).
    Optimize {
        #[arg(long)]
        config: String,
    },
}

/// JSON number that survives consumers with 53-bit integer mantissas.
fn ju(n: u64) -> Value {
    if n < (1u64 << 53) {
        n.into()
    } else {
        n.to_string().into()
    }
}

fn error_exit(err: &Error) -> i32 {
    let (kind, code) = match err {
        Error::Hypothesis(_) => ("hypothesis", EXIT_HYPOTHESIS),
        Error::Domain(_) | Error::Limit(_) | Error::Overflow(_) | Error::Spec(_) => {
            ("usage", EXIT_USAGE)
        }
        _ => ("unverified", EXIT_UNVERIFIED),
    };
    eprintln!(
        "{}",
        json!({ "schema": 1, "error": { "kind": kind, "message": err.to_string() } })
    );
    code
}

fn run(cli: &Cli) -> kfree::Result<i32> {
    let fmt = cli.format;
    match &cli.command {
        Command::Sieve { lo, hi, k } => {
            let seg = sieve_segment(*lo, *hi, *k)?;
            let free: Vec<u64> = (seg.lo()..seg.hi()).filter(|&n| seg.is_free(n)).collect();
            match fmt {
                Format::Json => println!(
                    "{}",
                    json!({
                        "schema": 1,
                        "lo": ju(*lo),
                        "hi": ju(*hi),
                        "k": k,
                        "count": free.len(),
                        "free": free.iter().map(|&n| ju(n)).collect::<Vec<_>>(),
                    })
                ),
                Format::Csv => {
                    println!("n");
                    for n in &free {
                        println!("{n}");
                    }
                }
                Format::Text => {
                    println!("{}-free in [{lo}, {hi}): {} integers", k, free.len());
                    for n in &free {
                        println!("{n}");
                    }
                }
            }
            Ok(EXIT_OK)
        }
        Command::Gaps { limit, k, segment } => {
            let scan = scan_gaps_detailed(*limit, *k, *segment, None)?;
            match fmt {
                Format::Csv => {
                    println!("start,length,k");
                    for (len, start) in &scan.first_occurrence {
                        println!("{start},{len},{k}");
                    }
                }
                Format::Json => println!(
                    "{}",
                    json!({
                        "schema": 1,
                        "limit": ju(*limit),
                        "k": k,
                        "first_occurrence": scan
                            .first_occurrence
                            .iter()
                            .map(|(len, start)| json!({ "length": len, "start": ju(*start) }))
                            .collect::<Vec<_>>(),
                        "max": scan.max.map(|r| json!({
                            "start": ju(r.start),
                            "length": r.length,
                            "k": r.k,
                        })),
                    })
                ),
                Format::Text => {
                    for (len, start) in &scan.first_occurrence {
                        println!("first run of length {len} starts at {start}");
                    }
                    if let Some(r) = scan.max {
                        println!("longest run: start {} length {}", r.start, r.length);
                    }
                }
            }
            Ok(EXIT_OK)
        }
        Command::CheckInterval { x, h, k } => {
            let h = CertInterval::from_rational(&parse_rational(h)?, 96);
            let found = check_interval(*x, &h, *k)?;
            match fmt {
                Format::Json => println!(
                    "{}",
                    json!({
                        "schema": 1,
                        "x": ju(*x),
                        "k": k,
                        "found": found.map(ju),
                    })
                ),
                _ => match found {
                    Some(n) => println!("least {k}-free after {x}: {n}"),
                    None => println!("no {k}-free integer in the interval after {x}"),
                },
            }
            Ok(if found.is_some() { EXIT_OK } else { EXIT_UNVERIFIED })
        }
        Command::Count { x, k } => {
            let q = count_kfree(*x, *k)?;
            match fmt {
                Format::Json => println!(
                    "{}",
                    json!({ "schema": 1, "x": ju(*x), "k": k, "count": ju(q) })
                ),
                _ => println!("{q}"),
            }
            Ok(EXIT_OK)
        }
        Command::VerifyRecord { start, length } => {
            let r = verify_record_run(*start, *length)?;
            match fmt {
                Format::Json => println!(
                    "{}",
                    json!({
                        "schema": 1,
                        "start": ju(r.start),
                        "length": r.length,
                        "confirmed": r.confirmed,
                        "failures": r.failures,
                    })
                ),
                _ => {
                    if r.confirmed {
                        println!("confirmed: {length} consecutive non-squarefree integers at {start}, maximal");
                    } else {
                        println!("rejected:");
                        for f in &r.failures {
                            println!("  {f}");
                        }
                    }
                }
            }
            Ok(if r.confirmed { EXIT_OK } else { EXIT_UNVERIFIED })
        }
        Command::EnumerateS { x, h, m, n } => {
            let set = enumerate_s(*x, *h, *m, *n)?;
            let hist = gap_histogram(&set);
            match fmt {
                Format::Json => println!(
                    "{}",
                    json!({
                        "schema": 1,
                        "x": ju(*x),
                        "h": ju(*h),
                        "m": ju(*m),
                        "n": ju(*n),
                        "members": set.members.iter().map(|&u| ju(u)).collect::<Vec<_>>(),
                        "s1_len": hist.s1_len,
                    })
                ),
                Format::Csv => {
                    println!("u");
                    for u in &set.members {
                        println!("{u}");
                    }
                }
                Format::Text => {
                    println!("|S({m}, {n})| = {}", set.members.len());
                    for u in &set.members {
                        println!("{u}");
                    }
                }
            }
            Ok(EXIT_OK)
        }
        Command::ValidateSpacing { x, h, cap_h, m, lambda } => {
            let lambda = parse_rational(lambda)?;
            let rep = validate_spacing(*x, *h, *cap_h, *m, &lambda)?;
            let clean = rep.violations.is_empty();
            match fmt {
                Format::Json => {
                    let mut v = serde_json::to_value(&rep).expect("report serializes");
                    // Re-emit the wide counters as strings where needed.
                    v["x"] = ju(rep.x);
                    v["h"] = ju(rep.h);
                    v["cap_h"] = ju(rep.cap_h);
                    v["m_lower"] = ju(rep.m_lower);
                    v["n_upper"] = ju(rep.n_upper);
                    println!("{}", json!({ "schema": 1, "report": v }));
                }
                _ => {
                    println!(
                        "S(M) size {}, flags {:?}, {} violations",
                        rep.set_size,
                        rep.hypothesis_flags,
                        rep.violations.len()
                    );
                    for viol in &rep.violations {
                        println!(
                            "  [{}] {}: {}",
                            if viol.informational { "info" } else { "FAIL" },
                            viol.check,
                            viol.detail
                        );
                    }
                }
            }
            Ok(if clean { EXIT_OK } else { EXIT_UNVERIFIED })
        }
        Command::Sigma { preset: name, x_log } => {
            let params = preset(name)?;
            let t = match x_log {
                Some(t) => parse_rational(t)?,
                None => params.x_lo_log.clone(),
            };
            let x = CertInterval::exp_rational(&t, params.prec);
            let b = assemble_margin(&x, &params)?;
            match fmt {
                Format::Json => {
                    let v = serde_json::to_value(&b).expect("breakdown serializes");
                    println!("{}", json!({ "schema": 1, "x_log": t.to_string(), "breakdown": v }));
                }
                _ => {
                    println!("case: {}", b.case_label);
                    for (name, value) in &b.internals {
                        println!("  {name}: {value}");
                    }
                    println!("sigma0: {}", b.sigma0);
                    println!("sigma1: {}", b.sigma1);
                    println!("sigma2: {}", b.sigma2);
                    println!("sigma3: {}", b.sigma3);
                    println!("total:  {}", b.total);
                    println!("budget: {}", b.budget);
                    println!("margin: {}", b.margin);
                    println!("proved: {}", b.proved);
                }
            }
            Ok(if b.proved { EXIT_OK } else { EXIT_UNVERIFIED })
        }
        Command::Prove { preset: name } => {
            let params = preset(name)?;
            let cert = prove_range(&params)?;
            match fmt {
                Format::Json => {
                    let v = serde_json::to_value(&cert).expect("certificate serializes");
                    println!("{}", json!({ "schema": 1, "certificate": v }));
                }
                _ => {
                    println!(
                        "{}: {}",
                        name,
                        if cert.proved { "proved" } else { "NOT proved" }
                    );
                    println!("  subintervals: {}", cert.subintervals.len());
                    if let Some(tail) = &cert.tail {
                        println!(
                            "  tail frontier: e^{} (margin {})",
                            tail.frontier_log, tail.margin
                        );
                    }
                    if let Some(f) = &cert.failure {
                        println!("  failure: {f}");
                    }
                }
            }
            Ok(if cert.proved { EXIT_OK } else { EXIT_UNVERIFIED })
        }
        Command::Optimize { config } => {
            let text = if config == "-" {
                use std::io::Read;
                let mut buf = String::new();
                std::io::stdin()
                    .read_to_string(&mut buf)
                    .map_err(|e| Error::Domain(format!("reading stdin: {e}")))?;
                buf
            } else {
                std::fs::read_to_string(config)
                    .map_err(|e| Error::Domain(format!("reading {config}: {e}")))?
            };
            let spec = SearchSpec::parse(&text)?;
            let report = search(&spec)?;
            let feasible = report.best.feasible;
            match fmt {
                Format::Json => {
                    let v = serde_json::to_value(&report).expect("report serializes");
                    println!("{}", json!({ "schema": 1, "search": v }));
                }
                _ => {
                    println!("cells evaluated: {}", report.cells_evaluated);
                    println!("descent steps: {}", report.descent_steps);
                    let best = &report.best;
                    if best.feasible {
                        println!(
                            "best feasible cell: c={} J={} m={} lambda={} delta={}",
                            best.c, best.j, best.m, best.lambda, best.delta
                        );
                        if let Some(margin) = &best.margin {
                            println!("  margin: {margin}");
                        }
                        if let Some(min_c) = &report.min_c {
                            println!("  minimal feasible c (bisected): {min_c}");
                        }
                    } else {
                        println!("no feasible cell found");
                    }
                }
            }
            Ok(if feasible { EXIT_OK } else { EXIT_UNVERIFIED })
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("KFREE_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!(
                "{}",
                json!({ "schema": 1, "error": { "kind": "usage", "message": e.to_string() } })
            );
            std::process::exit(EXIT_USAGE);
        }
    }
    match run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => std::process::exit(error_exit(&e)),
    }
}
