//! The `flexsky` command line.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 when the data or the
//! configuration is rejected.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use flexsky::data_io::PRNG_ALGORITHM;
use flexsky::digest::stable_digest;
use flexsky::{
    centroid_function, function_from_raw_weights, gen_synthetic, load_csv, nd, parse_constraints,
    parse_family, po, precision, recall, sky, topk, write_csv, DatasetConfig, Distribution, Error,
    FunctionFamily, NdAlgorithm, PoMethod, QueryResult, Relation, ScoringFunction,
    SyntheticSpec, WeightPolytope,
};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "flexsky", version, about = "Skyline, restricted skyline and top-k queries")]
struct Cli {
    /// Result format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Json, global = true)]
    output: OutputFormat,
    /// Report elapsed_ms as 0 so output bytes depend only on the inputs.
    #[arg(long, global = true)]
    no_timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Dataset CSV with a header row.
    #[arg(long)]
    input: PathBuf,
    /// JSON schema naming the columns to use and their directions.
    #[arg(long)]
    schema: PathBuf,
}

#[derive(Args, Debug)]
struct FamilyArgs {
    /// Function family JSON (finite members or a linear constraint block).
    #[arg(long, conflicts_with = "constraints")]
    family: Option<PathBuf>,
    /// Weight constraints JSON; the full simplex when neither is given.
    #[arg(long)]
    constraints: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pareto skyline.
    Sky {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Tuples not dominated under every function of the family.
    Nd {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value = "sve1")]
        algorithm: NdAlgorithm,
    },
    /// Tuples that are the unique best for some function of the family.
    Po {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value = "direct")]
        method: PoMethod,
    },
    /// The k best tuples under one scoring function.
    Topk {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        k: usize,
        /// Weights over the raw attribute values, higher meaning more useful.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true,
              required_unless_present = "family", conflicts_with = "family")]
        weights: Option<Vec<f64>>,
        /// Finite family JSON; pick a member with --family-member.
        #[arg(long, requires = "family_member")]
        family: Option<PathBuf>,
        #[arg(long)]
        family_member: Option<usize>,
    },
    /// Precision and recall of a tuple set against a top-k ranking.
    Metrics {
        #[command(flatten)]
        data: DataArgs,
        /// A file of ids, or `op:sky`, `op:nd[:algorithm]`, `op:po[:method]`.
        #[arg(long)]
        set_from: String,
        #[arg(long)]
        k: usize,
        /// Raw-space weights of the ranking function; the constraint
        /// centroid when omitted.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        weights: Option<Vec<f64>>,
        #[arg(long)]
        constraints: Option<PathBuf>,
    },
    /// Seeded synthetic dataset as CSV.
    Gen {
        #[command(flatten)]
        spec: GenArgs,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Wall times and result sizes of every operator on a synthetic dataset.
    Bench {
        #[command(flatten)]
        spec: GenArgs,
        #[arg(long)]
        constraints: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        repeat: usize,
    },
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value = "independent")]
    dist: Distribution,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl GenArgs {
    fn spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            n: self.n,
            d: self.d,
            distribution: self.dist,
            seed: self.seed,
        }
    }
}

#[derive(Serialize)]
struct ResultJson<'a> {
    operator: &'a str,
    ids: &'a [usize],
    size: usize,
    elapsed_ms: f64,
    config_digest: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    scores: Option<&'a [f64]>,
}

#[derive(Serialize)]
struct MetricsJson<'a> {
    set: &'a str,
    size: usize,
    k: usize,
    precision: f64,
    recall: f64,
    config_digest: &'a str,
}

#[derive(Serialize)]
struct GenJson<'a> {
    out: &'a str,
    n: usize,
    d: usize,
    dist: &'a str,
    seed: u64,
    prng: &'a str,
}

#[derive(Serialize)]
struct BenchRow {
    operator: &'static str,
    algorithm: &'static str,
    repeat: usize,
    n: usize,
    d: usize,
    dist: &'static str,
    seed: u64,
    elapsed_ms: f64,
    size: usize,
}

struct Session {
    format: OutputFormat,
    no_timing: bool,
    digest: String,
}

impl Session {
    fn millis(&self, elapsed: Duration) -> f64 {
        if self.no_timing {
            0.0
        } else {
            elapsed.as_secs_f64() * 1000.0
        }
    }

    fn emit(&self, res: &QueryResult, scores: Option<&[f64]>, out: &mut dyn Write) -> flexsky::Result<()> {
        match self.format {
            OutputFormat::Json => {
                let json = ResultJson {
                    operator: res.operator.name(),
                    ids: &res.ids,
                    size: res.size,
                    elapsed_ms: self.millis(res.elapsed),
                    config_digest: &self.digest,
                    scores,
                };
                writeln!(out, "{}", to_json(&json))?;
            }
            OutputFormat::Csv => {
                match scores {
                    Some(_) => writeln!(out, "operator,id,score")?,
                    None => writeln!(out, "operator,id")?,
                }
                for (i, id) in res.ids.iter().enumerate() {
                    match scores {
                        Some(s) => writeln!(out, "{},{id},{}", res.operator, s[i])?,
                        None => writeln!(out, "{},{id}", res.operator)?,
                    }
                }
            }
        }
        Ok(())
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("plain structs serialize")
}

fn read_text(path: &Path) -> flexsky::Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load(data: &DataArgs) -> flexsky::Result<Relation> {
    let config = DatasetConfig::from_json(&read_text(&data.schema)?)?;
    load_csv(&data.input, &config)
}

fn polytope(constraints: Option<&Path>, d: usize) -> flexsky::Result<WeightPolytope> {
    let cs = match constraints {
        Some(path) => parse_constraints(&read_text(path)?, d)?,
        None => Vec::new(),
    };
    WeightPolytope::new(d, cs)
}

fn family(args: &FamilyArgs, d: usize) -> flexsky::Result<FunctionFamily> {
    match &args.family {
        Some(path) => parse_family(&read_text(path)?, d),
        None => Ok(FunctionFamily::linear(polytope(args.constraints.as_deref(), d)?)),
    }
}

/// Hash of the command line and every input file's bytes.
fn config_digest(argv: &[OsString], files: &[&Path]) -> String {
    let mut parts: Vec<String> = vec![env!("CARGO_PKG_VERSION").to_string()];
    parts.extend(argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()));
    for f in files {
        let bytes = fs::read(f).unwrap_or_default();
        parts.push(String::from_utf8_lossy(&bytes).into_owned());
    }
    stable_digest(&parts)
}

fn input_files(command: &Command) -> Vec<&Path> {
    let mut files: Vec<&Path> = Vec::new();
    match command {
        Command::Sky { data } => files.extend([data.input.as_path(), data.schema.as_path()]),
        Command::Nd { data, family, .. } | Command::Po { data, family, .. } => {
            files.extend([data.input.as_path(), data.schema.as_path()]);
            files.extend(family.family.as_deref());
            files.extend(family.constraints.as_deref());
        }
        Command::Topk { data, family, .. } => {
            files.extend([data.input.as_path(), data.schema.as_path()]);
            files.extend(family.as_deref());
        }
        Command::Metrics { data, set_from, constraints, .. } => {
            files.extend([data.input.as_path(), data.schema.as_path()]);
            if !set_from.starts_with("op:") {
                files.push(Path::new(set_from));
            }
            files.extend(constraints.as_deref());
        }
        Command::Bench { constraints, .. } => files.extend(constraints.as_deref()),
        Command::Gen { .. } => {}
    }
    files
}

fn parse_ids(text: &str) -> flexsky::Result<Vec<usize>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::Parse { location: "id set".into(), message: format!("`{s}` is not a tuple id") })
        })
        .collect()
}

/// The id set named by `spec`, and a label for it.
fn resolve_set(spec: &str, r: &Relation, p: &WeightPolytope) -> flexsky::Result<(Vec<usize>, String)> {
    let Some(op) = spec.strip_prefix("op:") else {
        let ids = parse_ids(&read_text(Path::new(spec))?)?;
        if let Some(bad) = ids.iter().find(|&&id| id >= r.len()) {
            return Err(Error::Validation(format!("id {bad} is out of range for {} tuples", r.len())));
        }
        return Ok((ids, spec.to_string()));
    };
    let (name, variant) = op.split_once(':').map_or((op, None), |(a, b)| (a, Some(b)));
    let family = FunctionFamily::linear(p.clone());
    let res = match name.to_ascii_lowercase().as_str() {
        "sky" => sky(r),
        "nd" => nd(r, &family, variant.unwrap_or("sve1").parse()?)?,
        "po" => po(r, &family, variant.unwrap_or("direct").parse()?)?,
        _ => return Err(Error::Config(format!("unknown operator `{name}` in set spec"))),
    };
    Ok((res.ids, op.to_string()))
}

fn execute(cli: Cli, argv: &[OsString], out: &mut dyn Write) -> flexsky::Result<()> {
    let session = Session {
        format: cli.output,
        no_timing: cli.no_timing,
        digest: config_digest(argv, &input_files(&cli.command)),
    };
    match cli.command {
        Command::Sky { data } => {
            let r = load(&data)?;
            session.emit(&sky(&r), None, out)
        }
        Command::Nd { data, family: f, algorithm } => {
            let r = load(&data)?;
            let res = nd(&r, &family(&f, r.arity())?, algorithm)?;
            session.emit(&res, None, out)
        }
        Command::Po { data, family: f, method } => {
            let r = load(&data)?;
            let res = po(&r, &family(&f, r.arity())?, method)?;
            session.emit(&res, None, out)
        }
        Command::Topk { data, k, weights, family: fam, family_member } => {
            let r = load(&data)?;
            if let Some(w) = weights {
                let f = function_from_raw_weights(&r, &w)?;
                let res = topk(&r, &f, k)?;
                let raw: Vec<f64> = res
                    .ids
                    .iter()
                    .map(|&id| w.iter().zip(r.tuples()[id].raw_values()).map(|(a, b)| a * b).sum())
                    .collect();
                session.emit(&res, Some(&raw), out)
            } else {
                let path = fam.expect("clap requires a family without weights");
                let member = family_member.expect("clap requires a member with a family");
                let f: ScoringFunction = match parse_family(&read_text(&path)?, r.arity())? {
                    FunctionFamily::Finite(members) => members.get(member).cloned().ok_or_else(|| {
                        Error::Validation(format!("family has {} members, no member {member}", members.len()))
                    })?,
                    FunctionFamily::Linear(_) => {
                        return Err(Error::Config("--family-member needs a finite family".into()))
                    }
                };
                let res = topk(&r, &f, k)?;
                session.emit(&res, res.scores.as_deref(), out)
            }
        }
        Command::Metrics { data, set_from, k, weights, constraints } => {
            let r = load(&data)?;
            let p = polytope(constraints.as_deref(), r.arity())?;
            let f = match weights {
                Some(w) => function_from_raw_weights(&r, &w)?,
                None => centroid_function(&p),
            };
            let (ids, label) = resolve_set(&set_from, &r, &p)?;
            let pre = precision(&ids, &r, &f, k)?;
            let rec = recall(&ids, &r, &f, k)?;
            let size = ids.iter().collect::<std::collections::BTreeSet<_>>().len();
            match session.format {
                OutputFormat::Json => {
                    let json = MetricsJson {
                        set: &label,
                        size,
                        k,
                        precision: pre,
                        recall: rec,
                        config_digest: &session.digest,
                    };
                    writeln!(out, "{}", to_json(&json))?;
                }
                OutputFormat::Csv => {
                    writeln!(out, "set,size,k,precision,recall")?;
                    writeln!(out, "{label},{size},{k},{pre},{rec}")?;
                }
            }
            Ok(())
        }
        Command::Gen { spec, out: path } => {
            let r = gen_synthetic(&spec.spec())?;
            match path {
                None => write_csv(&r, &mut *out),
                Some(path) => {
                    let file = fs::File::create(&path)
                        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                    write_csv(&r, std::io::BufWriter::new(file))?;
                    let json = GenJson {
                        out: &path.to_string_lossy(),
                        n: spec.n,
                        d: spec.d,
                        dist: spec.dist.name(),
                        seed: spec.seed,
                        prng: PRNG_ALGORITHM,
                    };
                    writeln!(out, "{}", to_json(&json))?;
                    Ok(())
                }
            }
        }
        Command::Bench { spec, constraints, repeat } => {
            let r = gen_synthetic(&spec.spec())?;
            let p = polytope(constraints.as_deref(), r.arity())?;
            let rows = bench(&r, &p, &spec, repeat, &session)?;
            match session.format {
                OutputFormat::Json => writeln!(out, "{}", to_json(&rows))?,
                OutputFormat::Csv => {
                    writeln!(out, "operator,algorithm,repeat,n,d,dist,seed,elapsed_ms,size")?;
                    for b in &rows {
                        writeln!(
                            out,
                            "{},{},{},{},{},{},{},{},{}",
                            b.operator, b.algorithm, b.repeat, b.n, b.d, b.dist, b.seed, b.elapsed_ms, b.size
                        )?;
                    }
                }
            }
            Ok(())
        }
    }
}

fn bench(r: &Relation, p: &WeightPolytope, spec: &GenArgs, repeat: usize, session: &Session) -> flexsky::Result<Vec<BenchRow>> {
    let family = FunctionFamily::linear(p.clone());
    let mut rows = Vec::new();
    for rep in 0..repeat {
        let mut runs: Vec<(&'static str, QueryResult)> = vec![("-", sky(r))];
        for alg in NdAlgorithm::ALL {
            runs.push((alg.name(), nd(r, &family, alg)?));
        }
        for method in [PoMethod::Direct, PoMethod::Pond] {
            runs.push((method.name(), po(r, &family, method)?));
        }
        for (algorithm, res) in runs {
            rows.push(BenchRow {
                operator: res.operator.name(),
                algorithm,
                repeat: rep,
                n: spec.n,
                d: spec.d,
                dist: spec.dist.name(),
                seed: spec.seed,
                elapsed_ms: session.millis(res.elapsed),
                size: res.size,
            });
        }
    }
    Ok(rows)
}

/// Parses `argv` (program name first) and runs the command, writing results
/// to `out` and diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { write!(out, "{rendered}") } else { write!(err, "{rendered}") };
            return code;
        }
    };
    match execute(cli, &argv, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}
