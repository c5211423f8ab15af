#ifndef RVA_H
#define RVA_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RvaStatus {
  RVA_STATUS_OK = 0,
  RVA_STATUS_TYPE_ERROR = 1,
  RVA_STATUS_RUNTIME_ERROR = 2,
  RVA_STATUS_ORACLE_MISMATCH = 3,
  RVA_STATUS_PARSE_ERROR = 4,
  RVA_STATUS_INVALID_ARGUMENT = 5,
  RVA_STATUS_PANIC = 6,
} RvaStatus;

/**
 * A running `main`.
 */
typedef struct RvaMachine RvaMachine;

/**
 * A parsed and checked program.
 */
typedef struct RvaProgram RvaProgram;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * JSON text of the last error on this thread, or null if the last call
 * succeeded. Valid until the next call on the same thread.
 */
const char *rva_last_error(void);

/**
 * Library version as a static string.
 */
const char *rva_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void rva_string_free(char *s);

/**
 * Parses and typechecks a program.
 *
 * # Safety
 * `source` must be a NUL-terminated string; `out` must be writable.
 */
enum RvaStatus rva_program_parse(const char *source, struct RvaProgram **out);

/**
 * # Safety
 * `p` must be null or a handle from [`rva_program_parse`], not yet freed.
 */
void rva_program_free(struct RvaProgram *p);

/**
 * The check results as a JSON array of `{kind, name, type}`.
 *
 * # Safety
 * `p` must be a live program handle; `out` must be writable.
 */
enum RvaStatus rva_program_check_json(const struct RvaProgram *p, char **out);

/**
 * Loads `main` on the initial heap drawn from `seed`, with slots replaced
 * by `heap_json` when it is not null. `fuel` of zero means no step limit.
 * `tie_first` selects lowest-index tie breaking instead of failing on ties.
 *
 * # Safety
 * `p` must be a live program handle, `heap_json` null or a NUL-terminated
 * string, and `out` writable.
 */
enum RvaStatus rva_machine_new(const struct RvaProgram *p,
                               uint64_t seed,
                               const char *heap_json,
                               uint64_t fuel,
                               bool tie_first,
                               struct RvaMachine **out);

/**
 * # Safety
 * `m` must be null or a handle from [`rva_machine_new`], not yet freed.
 */
void rva_machine_free(struct RvaMachine *m);

/**
 * One reduction step. Sets `*done` once the command is a value.
 *
 * # Safety
 * `m` must be a live machine handle; `done` must be writable.
 */
enum RvaStatus rva_machine_step(struct RvaMachine *m, bool *done);

/**
 * Steps until the command is a value.
 *
 * # Safety
 * `m` must be a live machine handle.
 */
enum RvaStatus rva_machine_run(struct RvaMachine *m);

/**
 * Number of steps taken so far, or zero for a null handle.
 *
 * # Safety
 * `m` must be null or a live machine handle.
 */
uint64_t rva_machine_steps(const struct RvaMachine *m);

/**
 * The final value as JSON; an error if the machine has not finished.
 *
 * # Safety
 * `m` must be a live machine handle; `out` must be writable.
 */
enum RvaStatus rva_machine_value_json(struct RvaMachine *m, char **out);

/**
 * The current heap as a JSON object of location to weights.
 *
 * # Safety
 * `m` must be a live machine handle; `out` must be writable.
 */
enum RvaStatus rva_machine_heap_json(struct RvaMachine *m, char **out);

/**
 * The current command, pretty-printed.
 *
 * # Safety
 * `m` must be a live machine handle; `out` must be writable.
 */
enum RvaStatus rva_machine_command(struct RvaMachine *m, char **out);

/**
 * Runs `main` on both backends from the heap drawn from `seed` and writes
 * their largest relative difference. Returns `OracleMismatch` above `tol`.
 *
 * # Safety
 * `p` must be a live program handle; `max_rel_diff` must be writable.
 */
enum RvaStatus rva_oracle_compare(const struct RvaProgram *p,
                                  uint64_t seed,
                                  double tol,
                                  double *max_rel_diff);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RVA_H */
