//! C ABI for `mep-core`.
//!
//! Every fallible function returns a [`MepStatus`]. On failure a message is
//! kept per thread and can be read with [`mep_last_error_message`].
//! Objects are opaque handles released by their `_free` function; strings
//! returned through `char **` are released with [`mep_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufWriter;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mep_core::circuit::{export_dot, mismatches, Netlist};
use mep_core::engine::{benchmark_instance, run_batch, BatchStats, EvolutionParams, MutationMode, Target};
use mep_core::knapsack::{generate_truth_table, subset_sum_oracle, KnapsackInstance, TruthTable};
use mep_core::primitives::PrimitiveSet;
use mep_core::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MepStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    Panic = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(MepStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Parse { .. } => MepStatus::Parse,
            Error::Io(_) => MepStatus::Io,
            _ => MepStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MepStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MepStatus {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".into());
        Err(Failure(MepStatus::Panic, format!("panic: {msg}")))
    });
    let (status, msg) = match outcome {
        Ok(()) => (MepStatus::Ok, None),
        Err(Failure(s, m)) => (s, Some(CString::new(m.replace('\0', " ")).unwrap_or_default())),
    };
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
    status
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn utf8<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(MepStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

/// Message of the last failed call on this thread, or NULL after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn mep_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn mep_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Truth table handle.
pub struct MepTruthTable(TruthTable);

/// Builds the subset-sum table for base set 1..=n and target `sum`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mep_table_generate(n: usize, sum: u64, out: *mut *mut MepTruthTable) -> MepStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let table = generate_truth_table(&KnapsackInstance::new(n, sum)?)?;
        *out = Box::into_raw(Box::new(MepTruthTable(table)));
        Ok(())
    })
}

/// Parses a table from its text form.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mep_table_parse(text: *const c_char, out: *mut *mut MepTruthTable) -> MepStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let table = TruthTable::parse(utf8(text, "text")?)?;
        *out = Box::into_raw(Box::new(MepTruthTable(table)));
        Ok(())
    })
}

/// Reads a table file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mep_table_load(path: *const c_char, out: *mut *mut MepTruthTable) -> MepStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let path = utf8(path, "path")?;
        let file = File::open(path).map_err(|e| Failure(MepStatus::Io, format!("{path}: {e}")))?;
        let table = TruthTable::load(file)?;
        *out = Box::into_raw(Box::new(MepTruthTable(table)));
        Ok(())
    })
}

/// Writes a table file.
///
/// # Safety
/// `table` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mep_table_save(table: *const MepTruthTable, path: *const c_char) -> MepStatus {
    guard(|| {
        let table = borrow(table, "table")?;
        let path = utf8(path, "path")?;
        let io = |e: std::io::Error| Failure(MepStatus::Io, format!("{path}: {e}"));
        let file = File::create(path).map_err(io)?;
        table.0.save(BufWriter::new(file)).map_err(io)
    })
}

/// Number of input variables, or 0 for NULL.
///
/// # Safety
/// `table` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mep_table_inputs(table: *const MepTruthTable) -> usize {
    table.as_ref().map_or(0, |t| t.0.inputs())
}

/// Output bit of fitness case `case`.
///
/// # Safety
/// `table` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mep_table_output(table: *const MepTruthTable, case: usize, out: *mut bool) -> MepStatus {
    guard(|| {
        let table = borrow(table, "table")?;
        let out = out_ptr(out, "out")?;
        if case >= table.0.rows() {
            return Err(Failure(MepStatus::InvalidArgument, format!("case {case} out of range")));
        }
        *out = table.0.outputs.get(case);
        Ok(())
    })
}

/// Text form of the table; release with `mep_string_free`.
///
/// # Safety
/// `table` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mep_table_to_string(table: *const MepTruthTable, out: *mut *mut c_char) -> MepStatus {
    guard(|| {
        let table = borrow(table, "table")?;
        *out_ptr(out, "out")? = c_string(table.0.to_text());
        Ok(())
    })
}

/// Releases a table. NULL is ignored.
///
/// # Safety
/// `table` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn mep_table_free(table: *mut MepTruthTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Whether some subset of `items[0..len]` sums to exactly `k`.
///
/// # Safety
/// `items` must point to `len` values (may be NULL when `len` is 0); `out`
/// must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mep_subset_sum(items: *const u64, len: usize, k: u64, out: *mut bool) -> MepStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let items = if len == 0 {
            &[][..]
        } else if items.is_null() {
            return Err(null("items"));
        } else {
            std::slice::from_raw_parts(items, len)
        };
        *out = subset_sum_oracle(items, k);
        Ok(())
    })
}

/// Evolution settings.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MepParams {
    pub population_size: usize,
    pub chromosome_length: usize,
    pub generations: usize,
    pub crossover_probability: f64,
    pub mutations_per_chromosome: usize,
    /// When true, each slot mutates with probability m / slots instead of
    /// exactly m events.
    pub expected_mutations: bool,
    pub p_function: f64,
    pub stop_on_success: bool,
    pub seed: u64,
}

impl From<&EvolutionParams> for MepParams {
    fn from(p: &EvolutionParams) -> Self {
        MepParams {
            population_size: p.population_size,
            chromosome_length: p.chromosome_length,
            generations: p.generations,
            crossover_probability: p.crossover_probability,
            mutations_per_chromosome: p.mutations_per_chromosome,
            expected_mutations: p.mutation_mode == MutationMode::Expected,
            p_function: p.p_function,
            stop_on_success: p.stop_on_success,
            seed: p.seed,
        }
    }
}

impl From<&MepParams> for EvolutionParams {
    fn from(p: &MepParams) -> Self {
        EvolutionParams {
            population_size: p.population_size,
            chromosome_length: p.chromosome_length,
            generations: p.generations,
            crossover_probability: p.crossover_probability,
            mutations_per_chromosome: p.mutations_per_chromosome,
            mutation_mode: if p.expected_mutations { MutationMode::Expected } else { MutationMode::Exact },
            p_function: p.p_function,
            stop_on_success: p.stop_on_success,
            seed: p.seed,
        }
    }
}

/// Default settings.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mep_params_default(out: *mut MepParams) -> MepStatus {
    guard(|| {
        *out_ptr(out, "out")? = MepParams::from(&EvolutionParams::default());
        Ok(())
    })
}

/// Settings and instance of benchmark row `row` (1..=4). `n` and `sum` may
/// be NULL.
///
/// # Safety
/// `out` must be valid for writes; `n` and `sum` NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mep_params_benchmark(
    row: usize,
    out: *mut MepParams,
    n: *mut usize,
    sum: *mut u64,
) -> MepStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let (inst, params) = benchmark_instance(row)?;
        *out = MepParams::from(&params);
        if let Some(n) = n.as_mut() {
            *n = inst.n;
        }
        if let Some(sum) = sum.as_mut() {
            *sum = inst.k;
        }
        Ok(())
    })
}

/// Results of a batch of runs.
pub struct MepBatch(BatchStats);

/// Per-run summary. Missing values are -1.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MepRunRecord {
    pub run: usize,
    pub seed: u64,
    pub success: bool,
    pub best_fitness: f64,
    pub first_hit_generation: i64,
    pub best_gene: usize,
    pub gate_count: i64,
    pub evaluations: u64,
}

/// Runs `runs` independent evolutions against `table`; run `i` uses seed
/// `params.seed + i`. `workers` 0 uses every core.
///
/// # Safety
/// `table` must be a live handle; `params` readable; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mep_batch_run(
    table: *const MepTruthTable,
    params: *const MepParams,
    runs: usize,
    workers: usize,
    out: *mut *mut MepBatch,
) -> MepStatus {
    guard(|| {
        let table = borrow(table, "table")?;
        let params = EvolutionParams::from(borrow(params, "params")?);
        let out = out_ptr(out, "out")?;
        let pset = PrimitiveSet::gates(table.0.inputs())?;
        let target = Target::Boolean(table.0.clone());
        let stats = run_batch(&params, &pset, &target, runs, params.seed, workers)?;
        *out = Box::into_raw(Box::new(MepBatch(stats)));
        Ok(())
    })
}

/// Number of runs in the batch, or 0 for NULL.
///
/// # Safety
/// `batch` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mep_batch_runs(batch: *const MepBatch) -> usize {
    batch.as_ref().map_or(0, |b| b.0.runs)
}

/// Number of runs that found a perfect circuit, or 0 for NULL.
///
/// # Safety
/// `batch` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mep_batch_successes(batch: *const MepBatch) -> usize {
    batch.as_ref().map_or(0, |b| b.0.successes)
}

/// Summary of run `index`.
///
/// # Safety
/// `batch` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mep_batch_record(batch: *const MepBatch, index: usize, out: *mut MepRunRecord) -> MepStatus {
    guard(|| {
        let batch = borrow(batch, "batch")?;
        let out = out_ptr(out, "out")?;
        let r = batch
            .0
            .records
            .get(index)
            .ok_or_else(|| Failure(MepStatus::InvalidArgument, format!("run {index} out of range")))?;
        let opt = |v: Option<usize>| v.map_or(-1, |x| x as i64);
        *out = MepRunRecord {
            run: r.run,
            seed: r.seed,
            success: r.success,
            best_fitness: r.best_fitness,
            first_hit_generation: opt(r.first_hit_generation),
            best_gene: r.best_gene,
            gate_count: opt(r.gate_count),
            evaluations: r.evaluations,
        };
        Ok(())
    })
}

/// Netlist text of the smallest perfect circuit of run `index`, or NULL
/// when the run failed. Release with `mep_string_free`.
///
/// # Safety
/// `batch` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mep_batch_netlist(batch: *const MepBatch, index: usize, out: *mut *mut c_char) -> MepStatus {
    guard(|| {
        let batch = borrow(batch, "batch")?;
        let out = out_ptr(out, "out")?;
        let r = batch
            .0
            .records
            .get(index)
            .ok_or_else(|| Failure(MepStatus::InvalidArgument, format!("run {index} out of range")))?;
        *out = r.netlist.clone().map_or(ptr::null_mut(), c_string);
        Ok(())
    })
}

/// Releases a batch. NULL is ignored.
///
/// # Safety
/// `batch` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn mep_batch_free(batch: *mut MepBatch) {
    if !batch.is_null() {
        drop(Box::from_raw(batch));
    }
}

/// Counts the cases where the netlist in `netlist_text` disagrees with
/// `table`; 0 means the circuit is correct.
///
/// # Safety
/// `netlist_text` must be a NUL-terminated string; `table` a live handle;
/// `mismatching` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mep_netlist_verify(
    netlist_text: *const c_char,
    table: *const MepTruthTable,
    mismatching: *mut usize,
) -> MepStatus {
    guard(|| {
        let nl = Netlist::parse(utf8(netlist_text, "netlist_text")?)?;
        let table = borrow(table, "table")?;
        *out_ptr(mismatching, "mismatching")? = mismatches(&nl, &table.0)?.len();
        Ok(())
    })
}

/// Graphviz DOT rendering of a netlist. Release with `mep_string_free`.
///
/// # Safety
/// `netlist_text` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mep_netlist_to_dot(netlist_text: *const c_char, out: *mut *mut c_char) -> MepStatus {
    guard(|| {
        let nl = Netlist::parse(utf8(netlist_text, "netlist_text")?)?;
        *out_ptr(out, "out")? = c_string(export_dot(&nl));
        Ok(())
    })
}
