use std::collections::BTreeMap;
use std::fs;
use std::io::IsTerminal;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc, Mutex};

use bpipe_core::clock::{Clock, SystemClock};
use bpipe_core::config::{parse_config, validate_config, Severity, TaskId};
use bpipe_core::engine::{estimate_manual_overhead, EngineError, JobResult, StdinPrompt};
use bpipe_core::planner::build_plan;
use bpipe_core::platformsim::{serve_platform, Account, Platform, ServeError, TransformProfile};
use bpipe_core::recordkeeping::{load_state, RecordError};
use bpipe_core::workers::{builtin_profiles, builtin_registry, PlatformsFile, WorkerRegistry};
use bpipe_core::{Engine, EngineOptions};

use crate::report;
use crate::RunFlags;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FATAL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CORRUPT: u8 = 3;

/// Test hook: abort at the n-th crash site.
const CRASH_ENV: &str = "BPIPE_CRASH_AFTER";

fn init_logging(debug: bool) {
    let mut b = env_logger::Builder::new();
    b.filter_level(log::LevelFilter::Info).format_timestamp_secs();
    b.parse_default_env();
    if debug {
        b.filter_level(log::LevelFilter::Debug);
    }
    let _ = b.try_init();
}

fn registry(platforms: Option<&Path>, clock: Arc<dyn Clock>) -> Result<WorkerRegistry, String> {
    let mut reg = builtin_registry(Arc::clone(&clock));
    if let Some(p) = platforms {
        let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
        let file = PlatformsFile::from_json(&text).map_err(|e| format!("{}: {e}", p.display()))?;
        file.register_into(&mut reg, clock)
            .map_err(|e| format!("{}: {e}", p.display()))?;
    }
    Ok(reg)
}

fn engine_options(flags: &RunFlags) -> EngineOptions {
    let stop = Arc::new(AtomicBool::new(false));
    let s = Arc::clone(&stop);
    let _ = ctrlc::set_handler(move || {
        if s.swap(true, Ordering::SeqCst) {
            std::process::exit(130);
        }
        eprintln!("interrupt: finishing the current batch (press again to quit now)");
    });
    let interactive = !flags.non_interactive && std::io::stdin().is_terminal();
    EngineOptions {
        clock: Arc::new(SystemClock::new()),
        prompt: interactive.then(|| Arc::new(Mutex::new(StdinPrompt)) as _),
        parallel_branches: flags.parallel_branches,
        credentials: BTreeMap::new(),
        stop,
        crash_after: std::env::var(CRASH_ENV).ok().and_then(|v| v.trim().parse().ok()),
    }
}

fn engine_error_code(e: &EngineError) -> u8 {
    match e {
        EngineError::Config(_)
        | EngineError::Plan(_)
        | EngineError::Invalid(_)
        | EngineError::UnknownPlatform(_)
        | EngineError::MissingSource { .. } => EXIT_USAGE,
        EngineError::Record(RecordError::CorruptState { .. }) => EXIT_CORRUPT,
        EngineError::Record(_) | EngineError::Worker { .. } => EXIT_FATAL,
    }
}

fn finish(result: &JobResult) -> u8 {
    println!("job root: {}", result.job_root.display());
    print!("{}", report::counts_table(result));
    if result.terminated_early {
        let why = result
            .tasks
            .values()
            .find_map(|t| t.note.clone())
            .unwrap_or_else(|| "terminated".into());
        eprintln!("job terminated: {why}");
        eprintln!("resume with: bpipe resume {}", result.job_root.display());
        EXIT_FATAL
    } else if result.interrupted {
        eprintln!("job interrupted; resume with: bpipe resume {}", result.job_root.display());
        EXIT_FATAL
    } else {
        EXIT_OK
    }
}

pub fn run(config: &Path, base_dir: &Path, flags: &RunFlags) -> u8 {
    let text = match fs::read_to_string(config) {
        Ok(t) => t,
        Err(e) => {
            init_logging(flags.debug);
            eprintln!("error: {}: {e}", config.display());
            return EXIT_USAGE;
        }
    };
    let cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            init_logging(flags.debug);
            eprintln!("error: {}: {e}", config.display());
            return EXIT_USAGE;
        }
    };
    init_logging(flags.debug || cfg.debug);
    let anchor = config
        .parent()
        .map(Path::to_path_buf)
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| PathBuf::from("."));
    let anchor = fs::canonicalize(&anchor).unwrap_or(anchor);
    let cfg = cfg.resolve_paths(&anchor);

    let opts = engine_options(flags);
    let reg = match registry(flags.platforms.as_deref(), Arc::clone(&opts.clock)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    for f in validate_config(&cfg, &reg.code_set()).findings {
        if f.severity == Severity::Warning {
            log::warn!("{f}");
        }
    }
    match Engine::new(&reg, opts).run_job(&cfg, &text, base_dir) {
        Ok(r) => finish(&r),
        Err(e) => {
            eprintln!("error: {e}");
            engine_error_code(&e)
        }
    }
}

pub fn resume(job_root: &Path, flags: &RunFlags) -> u8 {
    let state = match load_state(job_root) {
        Ok(s) => s,
        Err(e) => {
            init_logging(flags.debug);
            eprintln!("error: {e}");
            return EXIT_CORRUPT;
        }
    };
    init_logging(flags.debug || state.config.debug);
    if state.status.all_final() && !state.dropped_partial_line {
        println!("job root: {}", job_root.display());
        println!("nothing to do: every task already finished");
        return EXIT_OK;
    }
    let opts = engine_options(flags);
    let reg = match registry(flags.platforms.as_deref(), Arc::clone(&opts.clock)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match Engine::new(&reg, opts).resume_job(job_root) {
        Ok(r) => finish(&r),
        Err(e) => {
            eprintln!("error: {e}");
            engine_error_code(&e)
        }
    }
}

pub fn validate(config: &Path, platforms: Option<&Path>) -> u8 {
    init_logging(false);
    let text = match fs::read_to_string(config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", config.display());
            return EXIT_USAGE;
        }
    };
    let cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let reg = match registry(platforms, Arc::new(SystemClock::new())) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let report = validate_config(&cfg, &reg.code_set());
    for f in &report.findings {
        match f.severity {
            Severity::Error => eprintln!("error: {f}"),
            Severity::Warning => eprintln!("warning: {f}"),
        }
    }
    if report.has_errors() {
        return EXIT_USAGE;
    }
    match build_plan(&cfg) {
        Ok(plan) => {
            let order: Vec<String> = plan.order.iter().map(ToString::to_string).collect();
            println!("ok: {} task(s), order {}", plan.order.len(), order.join(", "));
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

pub fn inspect(job_root: &Path, task: Option<&str>, json: bool) -> u8 {
    init_logging(false);
    let state = match load_state(job_root) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CORRUPT;
        }
    };
    let filter = match task {
        None => None,
        Some(t) => match t.parse::<TaskId>() {
            Ok(id) if state.status.tasks.contains_key(&id) => Some(id),
            Ok(id) => {
                eprintln!("error: job has no task {id}");
                return EXIT_USAGE;
            }
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        },
    };
    let entries: Vec<_> = state
        .entries
        .iter()
        .filter(|e| filter.as_ref().is_none_or(|f| &e.task_id == f))
        .collect();
    if json {
        println!("{}", serde_json::to_string_pretty(&entries).expect("entries serialize"));
    } else {
        print!("{}", report::inspect_table(&state.status, &entries, filter.as_ref()));
    }
    EXIT_OK
}

pub fn estimate(n_images: i64, n_platforms: i64, chunk: i64, points: i64, minutes: i64) -> u8 {
    match estimate_manual_overhead(n_images, n_platforms, chunk, points, minutes) {
        Ok(m) if m >= 60 => {
            println!("{m} minutes ({:.1} hours)", m as f64 / 60.0);
            EXIT_OK
        }
        Ok(m) => {
            println!("{m} minutes");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn load_profile(arg: &str) -> Result<TransformProfile, String> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some((_, p)) = builtin_profiles().into_iter().find(|(d, _)| d.platform_code == arg) {
            return Ok(p);
        }
    }
    let text = fs::read_to_string(path).map_err(|e| format!("{arg}: {e}"))?;
    TransformProfile::from_json(&text).map_err(|e| format!("{arg}: {e}"))
}

pub fn simserve(profile: &str, bind: IpAddr, port: u16, login: Option<(String, String)>) -> u8 {
    init_logging(false);
    let profile = match load_profile(profile).and_then(|p| p.validate().map(|_| p).map_err(|e| e.to_string())) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let account = login.map(|(user, pass)| Account { user, pass });
    let platform = Arc::new(Platform::new(profile, account, Arc::new(SystemClock::new())));
    let handle = match serve_platform(platform, SocketAddr::new(bind, port)) {
        Ok(h) => h,
        Err(e @ ServeError::Profile(_)) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FATAL;
        }
    };
    println!("listening on {}", handle.base_url());
    let (tx, rx) = mpsc::channel();
    let _ = ctrlc::set_handler(move || {
        let _ = tx.send(());
    });
    let _ = rx.recv();
    eprintln!("shutting down");
    handle.shutdown();
    EXIT_OK
}
