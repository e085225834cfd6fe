#ifndef MEP_H
#define MEP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum MepStatus {
  MEP_STATUS_OK = 0,
  MEP_STATUS_NULL_POINTER = 1,
  MEP_STATUS_INVALID_ARGUMENT = 2,
  MEP_STATUS_PARSE = 3,
  MEP_STATUS_IO = 4,
  MEP_STATUS_PANIC = 5,
} MepStatus;

/**
 * Results of a batch of runs.
 */
typedef struct MepBatch MepBatch;

/**
 * Truth table handle.
 */
typedef struct MepTruthTable MepTruthTable;

/**
 * Evolution settings.
 */
typedef struct MepParams {
  size_t population_size;
  size_t chromosome_length;
  size_t generations;
  double crossover_probability;
  size_t mutations_per_chromosome;
  /**
   * When true, each slot mutates with probability m / slots instead of
   * exactly m events.
   */
  bool expected_mutations;
  double p_function;
  bool stop_on_success;
  uint64_t seed;
} MepParams;

/**
 * Per-run summary. Missing values are -1.
 */
typedef struct MepRunRecord {
  size_t run;
  uint64_t seed;
  bool success;
  double best_fitness;
  int64_t first_hit_generation;
  size_t best_gene;
  int64_t gate_count;
  uint64_t evaluations;
} MepRunRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL after a success.
 * Valid until the next call into this library on the same thread.
 */
const char *mep_last_error_message(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void mep_string_free(char *s);

/**
 * Builds the subset-sum table for base set 1..=n and target `sum`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum MepStatus mep_table_generate(size_t n, uint64_t sum, struct MepTruthTable **out);

/**
 * Parses a table from its text form.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum MepStatus mep_table_parse(const char *text, struct MepTruthTable **out);

/**
 * Reads a table file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum MepStatus mep_table_load(const char *path, struct MepTruthTable **out);

/**
 * Writes a table file.
 *
 * # Safety
 * `table` must be a live handle; `path` a NUL-terminated string.
 */
enum MepStatus mep_table_save(const struct MepTruthTable *table, const char *path);

/**
 * Number of input variables, or 0 for NULL.
 *
 * # Safety
 * `table` must be NULL or a live handle.
 */
size_t mep_table_inputs(const struct MepTruthTable *table);

/**
 * Output bit of fitness case `case`.
 *
 * # Safety
 * `table` must be a live handle; `out` must be valid for writes.
 */
enum MepStatus mep_table_output(const struct MepTruthTable *table, size_t case_, bool *out);

/**
 * Text form of the table; release with `mep_string_free`.
 *
 * # Safety
 * `table` must be a live handle; `out` must be valid for writes.
 */
enum MepStatus mep_table_to_string(const struct MepTruthTable *table, char **out);

/**
 * Releases a table. NULL is ignored.
 *
 * # Safety
 * `table` must come from this library and not have been freed.
 */
void mep_table_free(struct MepTruthTable *table);

/**
 * Whether some subset of `items[0..len]` sums to exactly `k`.
 *
 * # Safety
 * `items` must point to `len` values (may be NULL when `len` is 0); `out`
 * must be valid for writes.
 */
enum MepStatus mep_subset_sum(const uint64_t *items, size_t len, uint64_t k, bool *out);

/**
 * Default settings.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum MepStatus mep_params_default(struct MepParams *out);

/**
 * Settings and instance of benchmark row `row` (1..=4). `n` and `sum` may
 * be NULL.
 *
 * # Safety
 * `out` must be valid for writes; `n` and `sum` NULL or valid for writes.
 */
enum MepStatus mep_params_benchmark(size_t row, struct MepParams *out, size_t *n, uint64_t *sum);

/**
 * Runs `runs` independent evolutions against `table`; run `i` uses seed
 * `params.seed + i`. `workers` 0 uses every core.
 *
 * # Safety
 * `table` must be a live handle; `params` readable; `out` valid for writes.
 */
enum MepStatus mep_batch_run(const struct MepTruthTable *table,
                             const struct MepParams *params,
                             size_t runs,
                             size_t workers,
                             struct MepBatch **out);

/**
 * Number of runs in the batch, or 0 for NULL.
 *
 * # Safety
 * `batch` must be NULL or a live handle.
 */
size_t mep_batch_runs(const struct MepBatch *batch);

/**
 * Number of runs that found a perfect circuit, or 0 for NULL.
 *
 * # Safety
 * `batch` must be NULL or a live handle.
 */
size_t mep_batch_successes(const struct MepBatch *batch);

/**
 * Summary of run `index`.
 *
 * # Safety
 * `batch` must be a live handle; `out` valid for writes.
 */
enum MepStatus mep_batch_record(const struct MepBatch *batch,
                                size_t index,
                                struct MepRunRecord *out);

/**
 * Netlist text of the smallest perfect circuit of run `index`, or NULL
 * when the run failed. Release with `mep_string_free`.
 *
 * # Safety
 * `batch` must be a live handle; `out` valid for writes.
 */
enum MepStatus mep_batch_netlist(const struct MepBatch *batch, size_t index, char **out);

/**
 * Releases a batch. NULL is ignored.
 *
 * # Safety
 * `batch` must come from this library and not have been freed.
 */
void mep_batch_free(struct MepBatch *batch);

/**
 * Counts the cases where the netlist in `netlist_text` disagrees with
 * `table`; 0 means the circuit is correct.
 *
 * # Safety
 * `netlist_text` must be a NUL-terminated string; `table` a live handle;
 * `mismatching` valid for writes.
 */
enum MepStatus mep_netlist_verify(const char *netlist_text,
                                  const struct MepTruthTable *table,
                                  size_t *mismatching);

/**
 * Graphviz DOT rendering of a netlist. Release with `mep_string_free`.
 *
 * # Safety
 * `netlist_text` must be a NUL-terminated string; `out` valid for writes.
 */
enum MepStatus mep_netlist_to_dot(const char *netlist_text, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MEP_H */
