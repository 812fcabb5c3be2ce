//! Run configuration: JSON schema, defaults and cross-field checks.
//!
//! ```json
//! {
//!   "model": {
//!     "h": [[0, 1], [1, 0]],
//!     "theta": 1.0,
//!     "laws": {"kind": "stable", "alpha": 0.6}
//!   },
//!   "task": {"type": "solve", "method": "renewal", "t_max": 2.0},
//!   "seed": 7,
//!   "output_path": "pi.csv"
//! }
//! ```
//!
//! `theta` and `laws` take either one value shared by all states or one per
//! state. Laws are `stable {alpha}` (with `alpha = 1` meaning exponential),
//! `mixture {components: [{weight, alpha}]}` or `markov`.

use std::path::PathBuf;

use std::fmt;
use std::marker::PhantomData;

use serde::de::value::{MapAccessDeserializer, SeqAccessDeserializer};
use serde::de::{self, IntoDeserializer, MapAccess, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer};
use serde_json::Value;
use sha2::{Digest, Sha256};
use smk_core::bernstein::BernsteinSpec;
use smk_core::laplace::InversionConfig;
use smk_core::limits::LimitExperimentConfig;
use smk_core::semi_markov::SemiMarkovModel;

use crate::error::ConfigError;
use crate::locate::{locate, JsonPath, Segment};

pub const SEED_ENV: &str = "SMK_SEED";

/// Largest deviation of an `H` row sum from 1.
const H_ROW_TOL: f64 = 1e-12;

/// One value shared by all states, or a list with one per state.
#[derive(Debug)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for OneOrMany<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V<T>(PhantomData<T>);

        impl<'de, T: Deserialize<'de>> Visitor<'de> for V<T> {
            type Value = OneOrMany<T>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a single value or a list with one value per state")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, seq: A) -> Result<Self::Value, A::Error> {
                Vec::deserialize(SeqAccessDeserializer::new(seq)).map(OneOrMany::Many)
            }

            fn visit_map<A: MapAccess<'de>>(self, map: A) -> Result<Self::Value, A::Error> {
                T::deserialize(MapAccessDeserializer::new(map)).map(OneOrMany::One)
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
                T::deserialize(v.into_deserializer()).map(OneOrMany::One)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
                T::deserialize(v.into_deserializer()).map(OneOrMany::One)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
                T::deserialize(v.into_deserializer()).map(OneOrMany::One)
            }
        }

        d.deserialize_any(V(PhantomData))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum LawSpec {
    Stable { alpha: f64 },
    Mixture { components: Vec<ComponentSpec> },
    Markov,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentSpec {
    weight: f64,
    alpha: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSpec {
    h: Vec<Vec<f64>>,
    theta: OneOrMany<f64>,
    laws: OneOrMany<LawSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Renewal,
    VolterraCaputo,
    Evolutionary,
    MatrixExp,
}

impl SolveMethod {
    pub fn name(self) -> &'static str {
        match self {
            SolveMethod::Renewal => "renewal",
            SolveMethod::VolterraCaputo => "volterra_caputo",
            SolveMethod::Evolutionary => "evolutionary",
            SolveMethod::MatrixExp => "matrix_exp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    #[default]
    Direct,
    TimeChange,
}

/// Written as `{"type": "<name>", ...}`; deserialised externally tagged so
/// that errors keep the path of the offending field.
#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum TaskSpec {
    Simulate {
        #[serde(default)]
        x0: usize,
        horizon: f64,
        #[serde(default = "one")]
        n_paths: usize,
        #[serde(default)]
        construction: Construction,
    },
    Marginal {
        #[serde(default)]
        x0: usize,
        t: Option<f64>,
        times: Option<Vec<f64>>,
        n_paths: usize,
    },
    Solve {
        method: SolveMethod,
        t_max: f64,
        dt: Option<f64>,
        /// Keep every k-th step.
        #[serde(default = "one")]
        record_every: usize,
    },
    Oracle {
        t_max: Option<f64>,
        #[serde(default = "default_points")]
        n_points: usize,
        times: Option<Vec<f64>>,
        #[serde(default = "InversionConfig::talbot")]
        inversion: InversionConfig,
    },
    Limit {
        experiment: LimitExperimentConfig,
    },
    Validate {
        #[serde(default = "one_f64")]
        t_max: f64,
        dt: Option<f64>,
        #[serde(default = "default_validate_paths")]
        n_paths: usize,
        #[serde(default)]
        x0: usize,
    },
}

fn one() -> usize {
    1
}

fn one_f64() -> f64 {
    1.0
}

fn default_points() -> usize {
    20
}

fn default_validate_paths() -> usize {
    20_000
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: Option<ModelSpec>,
    task: Value,
    seed: Option<u64>,
    output_path: Option<PathBuf>,
}

/// A validated task with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Simulate {
        x0: usize,
        horizon: f64,
        n_paths: usize,
        construction: Construction,
    },
    Marginal {
        x0: usize,
        times: Vec<f64>,
        n_paths: usize,
    },
    Solve {
        method: SolveMethod,
        t_max: f64,
        dt: f64,
        record_every: usize,
    },
    Oracle {
        times: Vec<f64>,
        inversion: InversionConfig,
    },
    Limit {
        experiment: LimitExperimentConfig,
    },
    Validate {
        t_max: f64,
        dt: f64,
        n_paths: usize,
        x0: usize,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Simulate { .. } => "simulate",
            Task::Marginal { .. } => "marginal",
            Task::Solve { .. } => "solve",
            Task::Oracle { .. } => "oracle",
            Task::Limit { .. } => "limit",
            Task::Validate { .. } => "validate",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Absent only for `limit`, which builds its own lattice.
    pub model: Option<SemiMarkovModel>,
    pub task: Task,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    /// Hex SHA-256 of the configuration text.
    pub config_sha256: String,
}

/// Parse and validate a configuration. A missing `seed` falls back to
/// `SMK_SEED`, then to 0.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let env_seed = std::env::var(SEED_ENV).ok();
    parse_config_with(text, env_seed.as_deref())
}

/// [`parse_config`] with the fallback seed given explicitly.
pub fn parse_config_with(text: &str, env_seed: Option<&str>) -> Result<RunConfig, ConfigError> {
    let (raw, task_spec) = deserialize(text)?;
    let at = |path: JsonPath, message: String| {
        let (line, column) = locate(text, &path);
        ConfigError::Invariant {
            field: path.to_string(),
            line,
            column,
            message,
        }
    };
    let schema = |path: JsonPath, message: String| {
        let (line, column) = locate(text, &path);
        ConfigError::Schema {
            field: path.to_string(),
            line,
            column,
            message,
        }
    };

    let seed = match (raw.seed, env_seed) {
        (Some(s), _) => s,
        (None, Some(v)) => v.trim().parse().map_err(|_| ConfigError::Env {
            name: SEED_ENV,
            message: format!("{v:?} is not an unsigned 64-bit integer"),
        })?,
        (None, None) => 0,
    };

    let root = JsonPath::root();
    let model = match raw.model {
        Some(spec) => Some(build_model(spec, &root.key("model"), &at)?),
        None => None,
    };
    let tp = root.key("task");
    if model.is_none() && !matches!(task_spec, TaskSpec::Limit { .. }) {
        return Err(schema(
            root.key("model"),
            "a model is required for this task".into(),
        ));
    }
    let task = build_task(task_spec, model.as_ref(), &tp, &at, &schema)?;

    Ok(RunConfig {
        model,
        task,
        seed,
        output_path: raw.output_path,
        config_sha256: sha256_hex(text.as_bytes()),
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn deserialize(text: &str) -> Result<(RawConfig, TaskSpec), ConfigError> {
    let syntax = |e: serde_json::Error| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    };
    let schema = |path: JsonPath, message: String| {
        let message = strip_position(&message);
        // point at the offending key itself when serde names one
        let path = match backticked(&message) {
            Some(k)
                if (message.starts_with("unknown field")
                    || message.starts_with("duplicate field"))
                    && path.0.last() != Some(&Segment::Key(k.to_string())) =>
            {
                path.key(k)
            }
            _ => path,
        };
        let (line, column) = locate(text, &path);
        ConfigError::Schema {
            field: path.to_string(),
            line,
            column,
            message,
        }
    };
    let mut de = serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let path = JsonPath::parse(&err.path().to_string());
        let inner = err.into_inner();
        if inner.is_data() {
            schema(path, inner.to_string())
        } else {
            syntax(inner)
        }
    })?;
    de.end().map_err(syntax)?;

    let tp = JsonPath::root().key("task");
    let Value::Object(mut fields) = raw.task.clone() else {
        return Err(schema(tp, "expected an object with a `type` field".into()));
    };
    let kind = match fields.remove("type") {
        Some(Value::String(k)) => k,
        Some(_) => return Err(schema(tp.key("type"), "`type` must be a string".into())),
        None => return Err(schema(tp, "missing field `type`".into())),
    };
    let mut tagged = serde_json::Map::new();
    tagged.insert(kind, Value::Object(fields));
    let task = serde_path_to_error::deserialize(Value::Object(tagged)).map_err(|err| {
        let mut path = JsonPath::parse(&err.path().to_string());
        let message = err.into_inner().to_string();
        if path.0.is_empty() {
            // unknown variant
            return schema(tp.key("type"), message.replace("variant", "task type"));
        }
        path.0.remove(0);
        let mut full = tp.clone();
        full.0.extend(path.0);
        schema(full, message)
    })?;
    Ok((raw, task))
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

fn backticked(msg: &str) -> Option<&str> {
    let a = msg.find('`')?;
    let b = msg[a + 1..].find('`')?;
    Some(&msg[a + 1..a + 1 + b])
}

fn per_state<T: Clone>(
    v: OneOrMany<T>,
    n: usize,
    path: &JsonPath,
    at: &impl Fn(JsonPath, String) -> ConfigError,
) -> Result<Vec<T>, ConfigError> {
    match v {
        OneOrMany::One(x) => Ok(vec![x; n]),
        OneOrMany::Many(xs) if xs.len() == n => Ok(xs),
        OneOrMany::Many(xs) => Err(at(
            path.clone(),
            format!("has {} entries but H has {n} rows", xs.len()),
        )),
    }
}

fn build_model(
    spec: ModelSpec,
    path: &JsonPath,
    at: &impl Fn(JsonPath, String) -> ConfigError,
) -> Result<SemiMarkovModel, ConfigError> {
    let hp = path.key("h");
    let n = spec.h.len();
    if n == 0 {
        return Err(at(hp, "H needs at least one row".into()));
    }
    for (i, row) in spec.h.iter().enumerate() {
        if row.len() != n {
            return Err(at(
                hp.index(i),
                format!("row {i} of H has {} entries, expected {n}", row.len()),
            ));
        }
        if let Some(j) = row.iter().position(|p| !(*p >= 0.0 && *p <= 1.0)) {
            return Err(at(
                hp.index(i).index(j),
                format!("H[{i}][{j}] = {} is not a probability", row[j]),
            ));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > H_ROW_TOL {
            return Err(at(
                hp.index(i),
                format!("row {i} of H sums to {s}, expected 1"),
            ));
        }
    }

    let tp = path.key("theta");
    let single_theta = matches!(spec.theta, OneOrMany::One(_));
    let theta = per_state(spec.theta, n, &tp, at)?;
    if let Some(i) = theta.iter().position(|t| !(*t > 0.0 && t.is_finite())) {
        let p = if single_theta {
            tp.clone()
        } else {
            tp.index(i)
        };
        return Err(at(
            p,
            format!("rate {} of state {i} must be positive", theta[i]),
        ));
    }

    let lp = path.key("laws");
    let single = matches!(spec.laws, OneOrMany::One(_));
    let laws = per_state(spec.laws, n, &lp, at)?;
    let mut exponents = Vec::with_capacity(n);
    for (i, law) in laws.into_iter().enumerate() {
        let p = if single { lp.clone() } else { lp.index(i) };
        let e = match law {
            LawSpec::Stable { alpha } => {
                if !(alpha > 0.0 && alpha <= 1.0) {
                    return Err(at(
                        p.key("alpha"),
                        format!("stable order {alpha} must lie in (0, 1]"),
                    ));
                }
                BernsteinSpec::with_order(alpha)
            }
            LawSpec::Mixture { components } => {
                let cp = p.key("components");
                if components.is_empty() {
                    return Err(at(cp, "a mixture needs at least one component".into()));
                }
                for (k, c) in components.iter().enumerate() {
                    if !(c.weight > 0.0 && c.weight.is_finite()) {
                        return Err(at(
                            cp.index(k).key("weight"),
                            format!("weight {} must be positive", c.weight),
                        ));
                    }
                    if !(c.alpha > 0.0 && c.alpha < 1.0) {
                        return Err(at(
                            cp.index(k).key("alpha"),
                            format!("order {} must lie in (0, 1)", c.alpha),
                        ));
                    }
                }
                let pairs: Vec<(f64, f64)> =
                    components.iter().map(|c| (c.weight, c.alpha)).collect();
                BernsteinSpec::mixture(&pairs)
            }
            LawSpec::Markov => Ok(BernsteinSpec::MarkovDegenerate),
        }
        .map_err(|e| at(p.clone(), e.to_string()))?;
        exponents.push(e);
    }
    SemiMarkovModel::new(spec.h, theta, exponents).map_err(|e| at(path.clone(), e.to_string()))
}

fn check_times(
    times: &[f64],
    path: &JsonPath,
    at: &impl Fn(JsonPath, String) -> ConfigError,
) -> Result<(), ConfigError> {
    if times.is_empty() {
        return Err(at(path.clone(), "needs at least one time".into()));
    }
    if let Some(k) = times.iter().position(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(at(
            path.index(k),
            format!("time {} must be finite and nonnegative", times[k]),
        ));
    }
    if let Some(k) = times.windows(2).position(|w| !(w[0] < w[1])) {
        return Err(at(
            path.index(k + 1),
            "times must be strictly increasing".into(),
        ));
    }
    Ok(())
}

fn check_positive(
    v: f64,
    path: JsonPath,
    at: &impl Fn(JsonPath, String) -> ConfigError,
) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(at(path, format!("{v} must be positive and finite")))
    }
}

fn check_state(
    x0: usize,
    model: &SemiMarkovModel,
    path: JsonPath,
    at: &impl Fn(JsonPath, String) -> ConfigError,
) -> Result<(), ConfigError> {
    if x0 < model.n_states() {
        Ok(())
    } else {
        Err(at(
            path,
            format!(
                "state {x0} does not exist; the model has {} states",
                model.n_states()
            ),
        ))
    }
}

/// `dt` in `(0, t_max]`, defaulting to `t_max/2000`.
fn step(
    t_max: f64,
    dt: Option<f64>,
    path: JsonPath,
    at: &impl Fn(JsonPath, String) -> ConfigError,
) -> Result<f64, ConfigError> {
    match dt {
        None => Ok(smk_core::kolmogorov::default_dt(t_max)),
        Some(dt) if dt > 0.0 && dt <= t_max => Ok(dt),
        Some(dt) => Err(at(path, format!("dt = {dt} must lie in (0, t_max]"))),
    }
}

/// Which solvers accept which laws.
pub fn capability_error(method: SolveMethod, model: &SemiMarkovModel) -> Option<String> {
    let mixture = (0..model.n_states())
        .find(|&i| matches!(model.exponent(i), BernsteinSpec::StableMixture { .. }));
    let non_markov = (0..model.n_states()).find(|&i| !model.exponent(i).is_markov());
    match method {
        SolveMethod::Renewal => None,
        SolveMethod::VolterraCaputo | SolveMethod::Evolutionary => mixture.map(|i| {
            format!(
                "method {} accepts stable and exponential laws only, but state {i} has a mixture \
                 (capability matrix: renewal = any law; volterra_caputo, evolutionary = stable or markov; \
                 matrix_exp = markov)",
                method.name()
            )
        }),
        SolveMethod::MatrixExp => non_markov.map(|i| {
            format!(
                "method matrix_exp needs exponential holding times, but state {i} is fractional \
                 (capability matrix: renewal = any law; volterra_caputo, evolutionary = stable or markov; \
                 matrix_exp = markov)"
            )
        }),
    }
}

fn build_task(
    spec: TaskSpec,
    model: Option<&SemiMarkovModel>,
    tp: &JsonPath,
    at: &impl Fn(JsonPath, String) -> ConfigError,
    schema: &impl Fn(JsonPath, String) -> ConfigError,
) -> Result<Task, ConfigError> {
    Ok(match spec {
        TaskSpec::Simulate {
            x0,
            horizon,
            n_paths,
            construction,
        } => {
            let m = model.expect("checked by caller");
            check_state(x0, m, tp.key("x0"), at)?;
            check_positive(horizon, tp.key("horizon"), at)?;
            if n_paths == 0 {
                return Err(at(tp.key("n_paths"), "n_paths must be positive".into()));
            }
            if construction == Construction::TimeChange {
                if let Some(i) = (0..m.n_states()).find(|&i| m.exponent(i).is_markov()) {
                    return Err(schema(
                        tp.key("construction"),
                        format!("the time-change construction needs a subordinator in every state; state {i} is exponential"),
                    ));
                }
            }
            Task::Simulate {
                x0,
                horizon,
                n_paths,
                construction,
            }
        }
        TaskSpec::Marginal {
            x0,
            t,
            times,
            n_paths,
        } => {
            let m = model.expect("checked by caller");
            check_state(x0, m, tp.key("x0"), at)?;
            let times = match (t, times) {
                (Some(t), None) => {
                    check_times(&[t], &tp.key("t"), at)?;
                    vec![t]
                }
                (None, Some(ts)) => {
                    check_times(&ts, &tp.key("times"), at)?;
                    ts
                }
                _ => {
                    return Err(schema(
                        tp.clone(),
                        "give exactly one of `t` and `times`".into(),
                    ))
                }
            };
            if n_paths < 1000 {
                return Err(at(
                    tp.key("n_paths"),
                    format!("n_paths = {n_paths} must be at least 1000"),
                ));
            }
            Task::Marginal { x0, times, n_paths }
        }
        TaskSpec::Solve {
            method,
            t_max,
            dt,
            record_every,
        } => {
            let m = model.expect("checked by caller");
            if let Some(msg) = capability_error(method, m) {
                return Err(schema(tp.key("method"), msg));
            }
            check_positive(t_max, tp.key("t_max"), at)?;
            let dt = step(t_max, dt, tp.key("dt"), at)?;
            if method == SolveMethod::Renewal && (t_max / dt).round() < 100.0 {
                return Err(at(
                    tp.key("dt"),
                    format!("the renewal solver needs dt <= t_max/100, got dt = {dt}"),
                ));
            }
            if record_every == 0 {
                return Err(at(
                    tp.key("record_every"),
                    "record_every must be positive".into(),
                ));
            }
            Task::Solve {
                method,
                t_max,
                dt,
                record_every,
            }
        }
        TaskSpec::Oracle {
            t_max,
            n_points,
            times,
            inversion,
        } => {
            inversion
                .validate()
                .map_err(|e| at(tp.key("inversion"), e.to_string()))?;
            let times = match (t_max, times) {
                (Some(t_max), None) => {
                    check_positive(t_max, tp.key("t_max"), at)?;
                    if n_points == 0 {
                        return Err(at(tp.key("n_points"), "n_points must be positive".into()));
                    }
                    (0..=n_points)
                        .map(|k| t_max * k as f64 / n_points as f64)
                        .collect()
                }
                (None, Some(ts)) => {
                    check_times(&ts, &tp.key("times"), at)?;
                    ts
                }
                _ => {
                    return Err(schema(
                        tp.clone(),
                        "give exactly one of `t_max` and `times`".into(),
                    ))
                }
            };
            Task::Oracle { times, inversion }
        }
        TaskSpec::Limit { experiment } => {
            experiment
                .validate()
                .map_err(|e| at(tp.key("experiment"), e.to_string()))?;
            Task::Limit { experiment }
        }
        TaskSpec::Validate {
            t_max,
            dt,
            n_paths,
            x0,
        } => {
            let m = model.expect("checked by caller");
            check_state(x0, m, tp.key("x0"), at)?;
            check_positive(t_max, tp.key("t_max"), at)?;
            let dt = step(t_max, dt, tp.key("dt"), at)?;
            if (t_max / dt).round() < 100.0 {
                return Err(at(
                    tp.key("dt"),
                    format!("dt = {dt} gives fewer than 100 steps"),
                ));
            }
            if n_paths < 1000 {
                return Err(at(
                    tp.key("n_paths"),
                    format!("n_paths = {n_paths} must be at least 1000"),
                ));
            }
            Task::Validate {
                t_max,
                dt,
                n_paths,
                x0,
            }
        }
    })
}
