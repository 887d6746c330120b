//! Command-line surface: finite spectra, cover-spectrum verdicts, region
//! scans, random-lift experiments, and identity audits, all reproducible
//! from a seed. Exit codes: 0 ok, 1 internal failure, 2 usage/validation.

use clap::{Parser, Subcommand};
use nbspectra::finite_spectrum::{bass_max_residual, growth_rate, nb_matrix, nb_spectrum};
use nbspectra::graph::Graph;
use nbspectra::lifts;
use nbspectra::numerics;
use nbspectra::operator::OperatorFamily;
use nbspectra::scanner::{self, GridDims, Region, ScanOptions};
use nbspectra::solver::{membership, SolveBudget};
use num_complex::Complex64;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "nbspectra", version, about = "Non-backtracking spectra of graphs, their universal covers, and random lifts")]
struct Cli {
    /// Worker threads (affects wall time only, never output bytes).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for all randomized components; falls back to NBSPECTRA_SEED.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues of the non-backtracking operator of a finite graph.
    Spectrum {
        graph: PathBuf,
        /// companion: 2n x 2n linearization plus +-1 multiplicities;
        /// direct: dense solve of the 2m x 2m edge matrix.
        #[arg(long, default_value = "companion")]
        method: String,
        /// Output CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Raster scan of the cover spectrum over a complex rectangle.
    Scan {
        graph: PathBuf,
        #[arg(long, default_value = "qlambda")]
        operator: String,
        /// re_min,re_max,im_min,im_max
        #[arg(long, allow_hyphen_values = true)]
        region: String,
        /// NRExNIM, e.g. 200x200
        #[arg(long)]
        grid: String,
        /// Output prefix: writes PREFIX.csv, PREFIX.pgm, PREFIX.meta.json
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        no_symmetry: bool,
        #[arg(long)]
        no_second_pass: bool,
        /// Newton starts per cell.
        #[arg(long)]
        starts: Option<usize>,
    },
    /// Membership verdict for one spectral parameter.
    Ratios {
        graph: PathBuf,
        #[arg(long, default_value = "qlambda")]
        operator: String,
        /// a+bi, a-bi, or a
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long)]
        starts: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random n-lift: old/new split point cloud and statistics.
    Lift {
        graph: PathBuf,
        #[arg(short = 'n', long = "n")]
        n: usize,
        /// Raster prefix (PREFIX.csv + PREFIX.meta.json) for distance stats.
        #[arg(long)]
        raster: Option<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        eps_d: f64,
        /// Output prefix: writes PREFIX.points.csv, PREFIX.stats.json
        #[arg(long)]
        out: PathBuf,
    },
    /// Determinant-identity residual and annulus audit of a graph.
    Verify {
        graph: PathBuf,
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let seed = cli
        .seed
        .or_else(|| std::env::var("NBSPECTRA_SEED").ok().and_then(|s| s.parse().ok()))
        .unwrap_or(0);
    match run(cli.command, seed) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CmdError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}

enum CmdError {
    Usage(String),
    Internal(String),
}

fn usage<E: std::fmt::Display>(e: E) -> CmdError {
    CmdError::Usage(e.to_string())
}

fn internal<E: std::fmt::Display>(e: E) -> CmdError {
    CmdError::Internal(e.to_string())
}

fn load_graph(path: &Path) -> Result<Graph, CmdError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CmdError::Usage(format!("cannot read {}: {e}", path.display())))?;
    Graph::parse(&text).map_err(usage)
}

fn family_for(kind: &str, g: Arc<Graph>) -> Result<OperatorFamily, CmdError> {
    match kind {
        "qlambda" => Ok(OperatorFamily::q_lambda(g)),
        "adjshift" => Ok(OperatorFamily::adjacency_shift(g)),
        other => Err(CmdError::Usage(format!(
            "unknown operator `{other}` (expected qlambda or adjshift)"
        ))),
    }
}

/// Accepts `a`, `a+bi`, `a-bi` with plain `.`-decimal floats.
fn parse_lambda(s: &str) -> Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot parse `{s}` as a complex number (want a, a+bi, or a-bi)");
    if let Some(body) = t.strip_suffix('i') {
        // find the sign splitting real and imaginary parts; skip a leading
        // sign and exponent signs
        let mut split = None;
        for (idx, c) in body.char_indices().skip(1) {
            if (c == '+' || c == '-') && !matches!(body.as_bytes()[idx - 1], b'e' | b'E') {
                split = Some(idx);
            }
        }
        match split {
            Some(idx) => {
                let re: f64 = body[..idx].parse().map_err(|_| bad())?;
                let im_str = &body[idx..];
                let im: f64 = if im_str == "+" {
                    1.0
                } else if im_str == "-" {
                    -1.0
                } else {
                    im_str.parse().map_err(|_| bad())?
                };
                Ok(Complex64::new(re, im))
            }
            None => {
                let im: f64 = if body.is_empty() {
                    1.0
                } else if body == "-" {
                    -1.0
                } else {
                    body.parse().map_err(|_| bad())?
                };
                Ok(Complex64::new(0.0, im))
            }
        }
    } else {
        let re: f64 = t.parse().map_err(|_| bad())?;
        Ok(Complex64::new(re, 0.0))
    }
}

fn parse_region(s: &str) -> Result<Region, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(format!("region `{s}` must be re_min,re_max,im_min,im_max"));
    }
    let vals: Result<Vec<f64>, _> = parts.iter().map(|p| p.trim().parse::<f64>()).collect();
    let v = vals.map_err(|_| format!("bad number in region `{s}`"))?;
    if v[0] >= v[1] || v[2] >= v[3] {
        return Err(format!("degenerate region `{s}`"));
    }
    Ok(Region { re_min: v[0], re_max: v[1], im_min: v[2], im_max: v[3] })
}

fn parse_grid(s: &str) -> Result<GridDims, String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("grid `{s}` must be NRExNIM, e.g. 200x200"))?;
    let n_re: usize = a.trim().parse().map_err(|_| format!("bad grid `{s}`"))?;
    let n_im: usize = b.trim().parse().map_err(|_| format!("bad grid `{s}`"))?;
    if n_re == 0 || n_im == 0 {
        return Err(format!("grid `{s}` must be positive"));
    }
    Ok(GridDims { n_re, n_im })
}

fn config_json(subcommand: &str, graph: &Path, g: &Graph, seed: u64, extra: serde_json::Value) -> serde_json::Value {
    let mut obj = serde_json::json!({
        "version": nbspectra::VERSION,
        "subcommand": subcommand,
        "graph_path": graph.display().to_string(),
        "graph_hash": g.canonical_hash(),
        "seed": seed,
    });
    if let (Some(dst), Some(src)) = (obj.as_object_mut(), extra.as_object()) {
        for (k, v) in src {
            dst.insert(k.clone(), v.clone());
        }
    }
    obj
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), CmdError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(internal),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cmd: Command, seed: u64) -> Result<(), CmdError> {
    match cmd {
        Command::Spectrum { graph, method, out } => {
            let g = load_graph(&graph)?;
            let values = match method.as_str() {
                "companion" => nb_spectrum(&g).map_err(usage)?.values,
                "direct" => {
                    let b = nb_matrix(&g).map_err(usage)?;
                    numerics::eig_dense_real(&b).map_err(internal)?
                }
                other => {
                    return Err(CmdError::Usage(format!(
                        "unknown method `{other}` (expected companion or direct)"
                    )))
                }
            };
            let config = config_json("spectrum", &graph, &g, seed, serde_json::json!({
                "method": method,
            }));
            let mut text = format!("# config {config}\nre,im\n");
            for z in &values {
                let _ = writeln!(text, "{:.12},{:.12}", z.re, z.im);
            }
            write_text(out.as_deref(), &text)?;
            eprintln!("{} eigenvalues ({method})", values.len());
            Ok(())
        }
        Command::Scan { graph, operator, region, grid, out, no_symmetry, no_second_pass, starts } => {
            let g = Arc::new(load_graph(&graph)?);
            let family = family_for(&operator, Arc::clone(&g))?;
            let region = parse_region(&region).map_err(CmdError::Usage)?;
            let grid = parse_grid(&grid).map_err(CmdError::Usage)?;
            if g.d_min() < 2 {
                return Err(CmdError::Usage(format!(
                    "minimum degree {} < 2: cover-spectrum scans need d_min >= 2",
                    g.d_min()
                )));
            }
            let mut budget = SolveBudget::default().with_seed(seed);
            if let Some(n) = starts {
                budget.newton_starts = n;
            }
            let opts = ScanOptions {
                use_symmetry: if no_symmetry { Some(false) } else { None },
                second_pass: !no_second_pass,
                budget,
            };
            let t0 = std::time::Instant::now();
            let mut raster = scanner::scan(&family, region, grid, &opts);
            let elapsed = t0.elapsed();
            raster.meta.config = Some(config_json("scan", &graph, &g, seed, serde_json::json!({
                "operator": operator,
                "region": [region.re_min, region.re_max, region.im_min, region.im_max],
                "grid": [grid.n_re, grid.n_im],
                "starts": opts.budget.newton_starts,
                "eps_alpha": opts.budget.eps_alpha,
                "use_symmetry": !no_symmetry,
            })));

            let base = out.display().to_string();
            let config_line = format!("# config {}\n", raster.meta.config.as_ref().unwrap());
            let mut csv = Vec::new();
            scanner::write_raster_csv(&raster, &mut csv).map_err(internal)?;
            let mut csv_text = config_line.clone();
            csv_text.push_str(&String::from_utf8(csv).map_err(internal)?);
            std::fs::write(format!("{base}.csv"), csv_text).map_err(internal)?;

            let mut pgm = Vec::new();
            scanner::write_raster_pgm(&raster, &mut pgm).map_err(internal)?;
            let pgm_text = String::from_utf8(pgm).map_err(internal)?;
            let pgm_text = pgm_text.replacen("P2\n", &format!("P2\n{config_line}"), 1);
            std::fs::write(format!("{base}.pgm"), pgm_text).map_err(internal)?;

            let mut meta = Vec::new();
            scanner::write_raster_meta(&raster, &mut meta).map_err(internal)?;
            std::fs::write(format!("{base}.meta.json"), meta).map_err(internal)?;

            eprintln!(
                "scan {}x{}: {} in / {} out / {} unknown cells, gr = {:.6}, {:.1?}",
                grid.n_re, grid.n_im, raster.meta.in_cells, raster.meta.out_cells,
                raster.meta.unknown_cells, raster.meta.gr, elapsed
            );
            Ok(())
        }
        Command::Ratios { graph, operator, lambda, starts, out } => {
            let g = Arc::new(load_graph(&graph)?);
            let family = family_for(&operator, Arc::clone(&g))?;
            let lam = parse_lambda(&lambda).map_err(CmdError::Usage)?;
            if g.d_min() < 2 {
                return Err(CmdError::Usage(format!(
                    "minimum degree {} < 2: cover-spectrum verdicts need d_min >= 2",
                    g.d_min()
                )));
            }
            let mut budget = SolveBudget::default().with_seed(seed);
            if let Some(n) = starts {
                budget.newton_starts = n;
            }
            let verdict = membership(&family, lam, &budget);
            let mut json = verdict.to_json();
            json["config"] = config_json("ratios", &graph, &g, seed, serde_json::json!({
                "operator": operator,
                "lambda": [lam.re, lam.im],
                "starts": budget.newton_starts,
            }));
            let text = format!("{}\n", serde_json::to_string_pretty(&json).map_err(internal)?);
            write_text(out.as_deref(), &text)?;
            Ok(())
        }
        Command::Lift { graph, n, raster, eps_d, out } => {
            if n < 1 {
                return Err(CmdError::Usage("lift degree must be >= 1".into()));
            }
            let g = load_graph(&graph)?;
            if g.d_min() < 2 {
                return Err(CmdError::Usage(format!(
                    "minimum degree {} < 2: lift spectra need d_min >= 2",
                    g.d_min()
                )));
            }
            let t0 = std::time::Instant::now();
            let lift = lifts::random_lift(&g, n, seed);
            let base_spec = nb_spectrum(&g).map_err(usage)?;
            let lift_spec = nb_spectrum(&lift).map_err(usage)?;
            let tagged = lifts::split_old_new(&lift_spec, &base_spec, 1e-6).map_err(internal)?;

            let config = config_json("lift", &graph, &g, seed, serde_json::json!({
                "n": n,
                "eps_d": eps_d,
                "lift_connected": lift.is_connected(),
            }));
            let base = out.display().to_string();
            let mut cloud = Vec::new();
            lifts::write_point_cloud(&tagged, &mut cloud).map_err(internal)?;
            let cloud_text = format!("# config {config}\n{}", String::from_utf8(cloud).map_err(internal)?);
            std::fs::write(format!("{base}.points.csv"), cloud_text).map_err(internal)?;

            let stats = match raster {
                Some(prefix) => {
                    let p = prefix.display().to_string();
                    let csv = std::fs::read_to_string(format!("{p}.csv"))
                        .map_err(|e| CmdError::Usage(format!("cannot read raster: {e}")))?;
                    let csv = csv
                        .lines()
                        .filter(|l| !l.starts_with('#'))
                        .collect::<Vec<_>>()
                        .join("\n");
                    let meta = std::fs::read_to_string(format!("{p}.meta.json"))
                        .map_err(|e| CmdError::Usage(format!("cannot read raster meta: {e}")))?;
                    let raster = scanner::load_raster(&csv, &meta).map_err(usage)?;
                    Some(
                        lifts::region_distance_stats(&tagged.new_values(), &raster, eps_d)
                            .map_err(usage)?,
                    )
                }
                None => None,
            };
            let n_old = tagged.tags.iter().filter(|&&t| t == lifts::Tag::Old).count();
            let json = serde_json::json!({
                "config": config,
                "n_eigenvalues": tagged.values.len(),
                "n_old": n_old,
                "n_new": tagged.values.len() - n_old,
                "max_old_match_distance": tagged.max_old_match,
                "lift_connected": lift.is_connected(),
                "region_stats": stats,
            });
            std::fs::write(
                format!("{base}.stats.json"),
                format!("{}\n", serde_json::to_string_pretty(&json).map_err(internal)?),
            )
            .map_err(internal)?;
            eprintln!(
                "lift n={n}: {} eigenvalues ({} old, {} new) in {:.1?}",
                tagged.values.len(),
                n_old,
                tagged.values.len() - n_old,
                t0.elapsed()
            );
            Ok(())
        }
        Command::Verify { graph, samples } => {
            let g = load_graph(&graph)?;
            if g.d_min() < 2 {
                return Err(CmdError::Usage(format!(
                    "minimum degree {} < 2: refusing (identities assume d_min >= 2)",
                    g.d_min()
                )));
            }
            let residual = bass_max_residual(&g, samples, seed).map_err(usage)?;
            let spec = nb_spectrum(&g).map_err(usage)?;
            let gr = growth_rate(&g).map_err(usage)?;
            let lo = ((g.d_min() as f64) - 1.0).sqrt();
            let hi = ((g.d_max() as f64) - 1.0).sqrt();
            let mut complex_violations = 0usize;
            let mut real_violations = 0usize;
            for z in &spec.values {
                if z.im.abs() > 1e-8 {
                    if z.norm() < lo - 1e-6 || z.norm() > hi + 1e-6 {
                        complex_violations += 1;
                    }
                } else if z.norm() > (g.d_max() as f64) - 1.0 + 1e-6 || z.norm() < 1.0 - 1e-6 {
                    real_violations += 1;
                }
            }
            println!("graph: {} vertices, {} edges, hash {}", g.n_vertices(), g.n_undirected(), g.canonical_hash());
            println!("determinant identity max residual over {samples} samples: {residual:.3e}");
            println!("growth rate: {gr:.10}");
            println!(
                "annulus audit: {} complex / {} real violations over {} eigenvalues",
                complex_violations,
                real_violations,
                spec.values.len()
            );
            if residual > 1e-9 || complex_violations + real_violations > 0 {
                return Err(CmdError::Internal("audit failed".into()));
            }
            println!("ok");
            Ok(())
        }
    }
}
