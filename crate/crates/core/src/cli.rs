//! Command-line surface tying the modules together for batch use.
//!
//! Exit codes: 0 success, 1 invalid usage or input, 2 the audit found at
//! least one DP violation (so CI pipelines can gate on it). All randomized
//! subcommands require an explicit --seed; identical argv produce
//! byte-identical output artifacts.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::str::FromStr;

use serde::Deserialize;

use crate::audit::{check_dp_bound, AuditFinding};
use crate::mechanism::{privatize, MechanismSpec, ScaleMode};
use crate::rng::SeededRng;
use crate::sensitivity::{analytic_report, empirical_sensitivity};
use crate::simulate::{
    run_violation_simulation, PairMode, SamplerKind, SigmaConvention, SimulationConfig,
    SimulationResult,
};
use crate::vector::{clip, ClipSpec, LatentVector, NormKind};

const USAGE: &str = "\
dpaudit — audit toolkit for Laplace-mechanism privatization of clipped latent vectors

USAGE: dpaudit <SUBCOMMAND> [FLAGS]

SUBCOMMANDS:
  clip            Rescale a vector into the L1 or L2 ball of radius C
  noise           Privatize a vector: clip, then add per-coordinate Laplace noise
  sensitivity     Claimed vs true L1 sensitivity of L2 clipping, with optional
                  Monte Carlo estimate
  counterexample  Emit the two-dimensional pair that refutes the claimed 2C
                  sensitivity (exits 2)
  audit           Check neighboring pairs from a file against the DP bound
                  (exits 2 iff any violation)
  simulate        Violation-fraction sweep over latent dimensions, as CSV

Run `dpaudit <SUBCOMMAND> --help` for flags and details.
";

const MODE_HELP: &str = "\
Modes:
  claimed-adept       L2 clip, Laplace noise at scale 2C/eps. Calibrated to
                      the refuted claim that the L2 ball of radius C has L1
                      diameter 2C. NOT epsilon-DP for dimension >= 2: the
                      true L1 sensitivity of L2 clipping is 2C*sqrt(n).
  corrected-rescaled  L2 clip, noise rescaled to the true sensitivity
                      2C*sqrt(n) (scale 2C*sqrt(n)/eps). epsilon-DP.
  corrected-l1clip    L1 clip, noise at scale 2C/eps. The L1 ball's L1
                      diameter really is 2C. epsilon-DP.
";

/// Route an argv to the matching subcommand and emit its report.
pub fn dispatch(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some(command) = args.first() else {
        let _ = write!(err, "{USAGE}");
        return 1;
    };
    if command == "--help" || command == "-h" || command == "help" {
        let _ = write!(out, "{USAGE}");
        return 0;
    }

    let rest = &args[1..];
    let outcome = match command.as_str() {
        "clip" => cmd_clip(rest),
        "noise" => cmd_noise(rest),
        "sensitivity" => cmd_sensitivity(rest),
        "counterexample" => cmd_counterexample(rest),
        "audit" => cmd_audit(rest),
        "simulate" => cmd_simulate(rest),
        other => Err(format!("unknown subcommand '{other}'\n\n{USAGE}")),
    };

    match outcome {
        Ok(Output { code, stdout }) => {
            if out.write_all(stdout.as_bytes()).is_err() {
                return 1;
            }
            code
        }
        Err(message) => {
            let _ = writeln!(err, "error: {message}");
            1
        }
    }
}

struct Output {
    code: i32,
    stdout: String,
}

impl Output {
    fn ok(stdout: String) -> Result<Self, String> {
        Ok(Self { code: 0, stdout })
    }
}

type CmdResult = Result<Output, String>;

// ---------------------------------------------------------------------------
// flag parsing
// ---------------------------------------------------------------------------

struct Flags {
    values: BTreeMap<String, String>,
    switches: BTreeSet<String>,
}

impl Flags {
    /// Parse `--name value`, `--name=value` and boolean switches; reject
    /// anything not in the allow lists.
    fn parse(args: &[String], value_names: &[&str], switch_names: &[&str]) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        let mut switches = BTreeSet::new();
        let mut i = 0;
        while i < args.len() {
            let arg = &args[i];
            let Some(body) = arg.strip_prefix("--") else {
                return Err(format!("unexpected argument '{arg}'"));
            };
            if let Some((name, value)) = body.split_once('=') {
                if !value_names.contains(&name) {
                    return Err(format!("unknown flag '--{name}'"));
                }
                values.insert(name.to_string(), value.to_string());
                i += 1;
            } else if switch_names.contains(&body) {
                switches.insert(body.to_string());
                i += 1;
            } else if value_names.contains(&body) {
                let Some(value) = args.get(i + 1) else {
                    return Err(format!("flag '--{body}' needs a value"));
                };
                values.insert(body.to_string(), value.clone());
                i += 2;
            } else {
                return Err(format!("unknown flag '--{body}'"));
            }
        }
        Ok(Self { values, switches })
    }

    fn wants_help(args: &[String]) -> bool {
        args.iter().any(|a| a == "--help" || a == "-h")
    }

    fn get(&self, name: &str) -> Option<&str> {
        self.values.get(name).map(String::as_str)
    }

    fn required(&self, name: &str) -> Result<&str, String> {
        self.get(name).ok_or_else(|| format!("missing required flag '--{name}'"))
    }

    fn has(&self, name: &str) -> bool {
        self.switches.contains(name)
    }

    fn positive_f64(&self, name: &str) -> Result<f64, String> {
        let raw = self.required(name)?;
        let value: f64 = raw
            .parse()
            .map_err(|_| format!("flag '--{name}' expects a number, got '{raw}'"))?;
        if value > 0.0 && value.is_finite() {
            Ok(value)
        } else {
            Err(format!("flag '--{name}' must be positive and finite, got {raw}"))
        }
    }

    fn u64_value(&self, name: &str) -> Result<u64, String> {
        let raw = self.required(name)?;
        raw.parse()
            .map_err(|_| format!("flag '--{name}' expects a non-negative integer, got '{raw}'"))
    }

    fn usize_min(&self, name: &str, min: usize) -> Result<usize, String> {
        let raw = self.required(name)?;
        let value: usize = raw
            .parse()
            .map_err(|_| format!("flag '--{name}' expects an integer, got '{raw}'"))?;
        if value < min {
            return Err(format!("flag '--{name}' must be >= {min}, got {value}"));
        }
        Ok(value)
    }

    fn parse_enum<T: FromStr>(&self, name: &str) -> Result<T, String>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.required(name)?;
        raw.parse().map_err(|e| format!("flag '--{name}': {e}"))
    }

    fn threads(&self) -> Result<Option<usize>, String> {
        match self.get("threads") {
            None => Ok(None),
            Some(raw) => {
                let value: usize = raw
                    .parse()
                    .map_err(|_| format!("flag '--threads' expects an integer, got '{raw}'"))?;
                if value == 0 {
                    return Err("flag '--threads' must be >= 1".into());
                }
                Ok(Some(value))
            }
        }
    }
}

fn parse_vector(raw: &str) -> Result<LatentVector, String> {
    let components = raw
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| format!("invalid vector component '{part}'"))
        })
        .collect::<Result<Vec<f64>, String>>()?;
    LatentVector::new(components).map_err(|e| e.to_string())
}

fn parse_dims(raw: &str) -> Result<Vec<usize>, String> {
    raw.split(',')
        .map(|part| {
            let dim: usize = part
                .trim()
                .parse()
                .map_err(|_| format!("invalid dimension '{part}'"))?;
            if dim == 0 {
                return Err("dimensions must be >= 1".to_string());
            }
            Ok(dim)
        })
        .collect()
}

/// Run `f` inside a rayon pool capped at `threads` workers; results are
/// identical for any worker count, the cap only limits parallelism.
fn run_in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, String> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| format!("failed to build thread pool: {e}"))?;
            Ok(pool.install(f))
        }
    }
}

fn json_line<T: serde::Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| format!("serialization failed: {e}"))
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

const CLIP_HELP: &str = "\
dpaudit clip --norm <l1|l2> --clip C --vector v1,v2,...

Rescale the vector into the chosen norm ball of radius C:
v * min(1, C / ||v||_p). Vectors already inside the ball pass through
unchanged. Prints the clipped vector as a JSON array. The L2 variant is
the original mechanism's transform; the L1 variant is the corrected
clipping whose ball has L1 diameter 2C.
";

fn cmd_clip(args: &[String]) -> CmdResult {
    if Flags::wants_help(args) {
        return Output::ok(CLIP_HELP.into());
    }
    let flags = Flags::parse(args, &["norm", "clip", "vector"], &[])?;
    let norm: NormKind = flags.parse_enum("norm")?;
    let c = flags.positive_f64("clip")?;
    let vector = parse_vector(flags.required("vector")?)?;
    let spec = ClipSpec::new(norm, c).map_err(|e| e.to_string())?;
    Output::ok(json_line(&clip(&vector, &spec))?)
}

const NOISE_HELP: &str = "\
dpaudit noise --mode <MODE> --clip C --epsilon E --seed S --vector v1,v2,...

Privatize a latent vector: clip it, then add i.i.d. zero-centered Laplace
noise to every coordinate. Prints the privatized vector as a JSON array.
The seed is required; identical seeds reproduce identical output.

";

fn cmd_noise(args: &[String]) -> CmdResult {
    if Flags::wants_help(args) {
        return Output::ok(format!("{NOISE_HELP}{MODE_HELP}"));
    }
    let flags = Flags::parse(args, &["mode", "clip", "epsilon", "seed", "vector"], &[])?;
    let mode: ScaleMode = flags.parse_enum("mode")?;
    let c = flags.positive_f64("clip")?;
    let epsilon = flags.positive_f64("epsilon")?;
    let seed = flags.u64_value("seed")?;
    let vector = parse_vector(flags.required("vector")?)?;
    let spec = MechanismSpec::from_mode(mode, c, epsilon, vector.dim())
        .map_err(|e| e.to_string())?;
    let privatized = privatize(&vector, &spec, &mut SeededRng::substream(seed, 0))
        .map_err(|e| e.to_string())?;
    Output::ok(json_line(&privatized)?)
}

const SENSITIVITY_HELP: &str = "\
dpaudit sensitivity --dim N --clip C
                    [--empirical --vectors M --sampler <uniform|gaussian> --seed S]
                    [--threads T]

Report the claimed vs true L1 sensitivity of L2 clipping at constant C in
N dimensions, as JSON. The claimed value 2C is refuted for N >= 2; the
true value is 2C*sqrt(N), realized by the antipodal corner pair
(+-C/sqrt(N), ..., +-C/sqrt(N)), which the report carries as its witness.
With --empirical, the maximum is also estimated over M sampled latent
vectors (uniform on (-C, C) per coordinate, or zero-centered Gaussian with
variance 0.1*C) and the arg-max pair becomes the witness.
";

fn cmd_sensitivity(args: &[String]) -> CmdResult {
    if Flags::wants_help(args) {
        return Output::ok(SENSITIVITY_HELP.into());
    }
    let flags = Flags::parse(
        args,
        &["dim", "clip", "vectors", "sampler", "seed", "threads"],
        &["empirical"],
    )?;
    let dim = flags.usize_min("dim", 1)?;
    let c = flags.positive_f64("clip")?;
    let spec = ClipSpec::new(NormKind::L2, c).map_err(|e| e.to_string())?;

    let report = if flags.has("empirical") {
        let vectors = flags.usize_min("vectors", 2)?;
        let sampler: SamplerKind = flags.parse_enum("sampler")?;
        let seed = flags.u64_value("seed")?;
        run_in_pool(flags.threads()?, || {
            empirical_sensitivity(&spec, dim, sampler, vectors, seed)
        })?
    } else {
        analytic_report(&spec, dim)
    };
    Output::ok(json_line(&report)?)
}

const COUNTEREXAMPLE_HELP: &str = "\
dpaudit counterexample --clip C --epsilon E

Audit the refutation pair (-2C/3, -2C/3) and (2C/3, 2C/3) under the
claimed-adept mechanism. Both vectors survive L2 clipping unchanged, yet
their L1 distance is 8C/3 > 2C, so the mechanism's density ratio reaches
exp(4/3 * eps) > exp(eps): the claimed sensitivity 2C is refuted and the
mechanism is not epsilon-DP. Prints the finding as JSON and exits 2.
";

fn cmd_counterexample(args: &[String]) -> CmdResult {
    if Flags::wants_help(args) {
        return Output::ok(COUNTEREXAMPLE_HELP.into());
    }
    let flags = Flags::parse(args, &["clip", "epsilon"], &[])?;
    let c = flags.positive_f64("clip")?;
    let epsilon = flags.positive_f64("epsilon")?;
    let spec = MechanismSpec::claimed_adept(c, epsilon).map_err(|e| e.to_string())?;
    let (x, y) = crate::sensitivity::counterexample_pair(c);
    let finding = check_dp_bound(&x, &y, &spec).map_err(|e| e.to_string())?;
    let code = if finding.violated { 2 } else { 0 };
    Ok(Output {
        code,
        stdout: json_line(&finding)?,
    })
}

const AUDIT_HELP: &str = "\
dpaudit audit --mode <MODE> --clip C --epsilon E --pairs-file PATH

Check neighboring pairs against the Laplace-mechanism DP bound: a pair
violates it when the clipped L1 distance exceeds the sensitivity the noise
was calibrated to. PATH holds one JSON object per line:
  {\"x\": [..], \"y\": [..]}
One finding is printed per line (newline-delimited JSON). Exits 2 iff any
pair violates the bound, 0 otherwise.

";

fn cmd_audit(args: &[String]) -> CmdResult {
    if Flags::wants_help(args) {
        return Output::ok(format!("{AUDIT_HELP}{MODE_HELP}"));
    }
    let flags = Flags::parse(args, &["mode", "clip", "epsilon", "pairs-file"], &[])?;
    let mode: ScaleMode = flags.parse_enum("mode")?;
    let c = flags.positive_f64("clip")?;
    let epsilon = flags.positive_f64("epsilon")?;
    let path = flags.required("pairs-file")?;
    let contents = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read pairs file '{path}': {e}"))?;

    #[derive(Deserialize)]
    struct PairRecord {
        x: LatentVector,
        y: LatentVector,
    }

    let mut stdout = String::new();
    let mut any_violation = false;
    for (idx, line) in contents.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: PairRecord = serde_json::from_str(line)
            .map_err(|e| format!("pairs file line {}: {e}", idx + 1))?;
        let spec = MechanismSpec::from_mode(mode, c, epsilon, record.x.dim())
            .map_err(|e| e.to_string())?;
        let finding: AuditFinding = check_dp_bound(&record.x, &record.y, &spec)
            .map_err(|e| format!("pairs file line {}: {e}", idx + 1))?;
        any_violation |= finding.violated;
        stdout.push_str(&json_line(&finding)?);
    }
    Ok(Output {
        code: if any_violation { 2 } else { 0 },
        stdout,
    })
}

const SIMULATE_HELP: &str = "\
dpaudit simulate --vectors M --sampler <uniform|gaussian|both> --clip C --seed S
                 [--dims d1,d2,...] [--pair-mode <all|sampled:K>]
                 [--sigma-convention <variance|stddev>] [--out PATH] [--threads T]

For each dimension, sample M latent vectors, L2-clip them at C, and count
vector pairs whose L1 distance strictly exceeds the claimed sensitivity
bound 2C. In the local-DP reading every pair is neighboring, so each such
pair is a privacy violation of the claimed-adept calibration. Emits CSV
(to stdout, or PATH with --out) with the columns

  dim,sampler,num_vectors,pairs_checked,violations,violation_fraction,clip_constant,seed

Samplers: uniform draws each coordinate from (-C, +C); gaussian draws
zero-centered normal with variance 0.1*C (--sigma-convention stddev reads
0.1*C as the standard deviation instead). --dims defaults to the sweep
1,2,4,...,1024. --pair-mode sampled:K checks K distinct random pairs
instead of all M*(M-1)/2.
";

fn cmd_simulate(args: &[String]) -> CmdResult {
    if Flags::wants_help(args) {
        return Output::ok(SIMULATE_HELP.into());
    }
    let flags = Flags::parse(
        args,
        &[
            "dims",
            "vectors",
            "sampler",
            "clip",
            "seed",
            "pair-mode",
            "sigma-convention",
            "out",
            "threads",
        ],
        &[],
    )?;
    let dims = match flags.get("dims") {
        Some(raw) => parse_dims(raw)?,
        None => crate::simulate::DEFAULT_DIM_SWEEP.to_vec(),
    };
    let num_vectors = flags.usize_min("vectors", 2)?;
    let c = flags.positive_f64("clip")?;
    let seed = flags.u64_value("seed")?;

    let samplers: Vec<SamplerKind> = match flags.required("sampler")? {
        "both" => vec![SamplerKind::UniformPerDim, SamplerKind::GaussianZeroCentered],
        other => vec![other
            .parse()
            .map_err(|e: crate::error::Error| format!("flag '--sampler': {e}"))?],
    };

    let pair_mode = match flags.get("pair-mode") {
        None | Some("all") => PairMode::AllPairs,
        Some(raw) => match raw.strip_prefix("sampled:") {
            Some(count) => {
                let k: u64 = count
                    .parse()
                    .map_err(|_| format!("invalid pair sample count '{count}'"))?;
                if k == 0 {
                    return Err("pair sample count must be >= 1".into());
                }
                PairMode::SampledPairs(k)
            }
            None => {
                return Err(format!(
                    "flag '--pair-mode' expects 'all' or 'sampled:K', got '{raw}'"
                ))
            }
        },
    };

    let sigma_convention: SigmaConvention = match flags.get("sigma-convention") {
        None => SigmaConvention::Variance,
        Some(raw) => raw
            .parse()
            .map_err(|e: crate::error::Error| format!("flag '--sigma-convention': {e}"))?,
    };

    let threads = flags.threads()?;
    let mut records = Vec::new();
    for sampler in samplers {
        let config = SimulationConfig {
            dims: dims.clone(),
            num_vectors,
            clip_constant: c,
            sampler,
            pair_mode,
            seed,
            sigma_convention,
        };
        let result =
            run_in_pool(threads, move || run_violation_simulation(&config))?
                .map_err(|e| e.to_string())?;
        records.extend(result.records);
    }
    let csv = SimulationResult { records }.to_csv();

    match flags.get("out") {
        Some(path) => {
            std::fs::write(path, csv.as_bytes())
                .map_err(|e| format!("cannot write '{path}': {e}"))?;
            Output::ok(String::new())
        }
        None => Output::ok(csv),
    }
}
