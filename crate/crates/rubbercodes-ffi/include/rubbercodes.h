#ifndef RUBBERCODES_H
#define RUBBERCODES_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RcStatus {
  RC_STATUS_OK = 0,
  RC_STATUS_INVALID_ARGUMENT = 1,
  RC_STATUS_NULL_POINTER = 2,
  RC_STATUS_OUT_OF_RANGE = 3,
  // Decoding returned the wrong message or none at all.
  RC_STATUS_DECODE_FAILED = 4,
  // Exhaustive verification found a failing error pattern.
  RC_STATUS_COUNTEREXAMPLE = 5,
  RC_STATUS_CAP_EXCEEDED = 6,
  RC_STATUS_INTERNAL = 7,
} RcStatus;

// A code: method, parameters and skeleton space.
typedef struct RcCode RcCode;

// Result of [`rc_verify`].
typedef struct RcReport RcReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next call into the library from this thread.
const char *rc_last_error(void);

// Frees a string returned by this library.
//
// # Safety
// `s` must be null or a pointer returned by this library that has not
// been freed yet.
void rc_string_free(char *s);

// Builds a code. `method` is one of `rubber1`, `rubberr`, `modified`,
// `lebedev`, `unidir`, `broken`. `r == 0` keeps the method's default run
// length; `channel` may be null for the default channel, otherwise one of
// `sym`, `z`, `invz`, `unidir`.
//
// # Safety
// `method` and a non-null `channel` must be NUL-terminated strings; `out`
// must be a valid pointer to write the handle to.
enum RcStatus rc_code_new(const char *method,
                          size_t q,
                          size_t n,
                          size_t t,
                          size_t r,
                          size_t z,
                          const char *channel,
                          struct RcCode **out);

// # Safety
// `code` must be null or a handle from [`rc_code_new`] not yet freed.
void rc_code_free(struct RcCode *code);

// Number of messages, as a decimal string, or null on a null handle.
//
// # Safety
// `code` must be null or a live handle.
char *rc_code_capacity(const struct RcCode *code);

// Skeleton length, or 0 on a null handle.
//
// # Safety
// `code` must be null or a live handle.
size_t rc_code_skeleton_len(const struct RcCode *code);

// Writes the skeleton of message `index` (decimal) into `buf`, which must
// hold exactly the skeleton length.
//
// # Safety
// `code` must be a live handle, `index` a NUL-terminated string and `buf`
// valid for `len` writes.
enum RcStatus rc_code_unrank(const struct RcCode *code,
                             const char *index,
                             uint8_t *buf,
                             size_t len);

// Message index of a skeleton, as a decimal string in `*out`.
//
// # Safety
// `code` must be a live handle, `seq` valid for `len` reads and `out` a
// valid pointer.
enum RcStatus rc_code_rank(const struct RcCode *code, const uint8_t *seq, size_t len, char **out);

// Sends one block. Errors are given as `n_errors` zero-based positions
// and the symbols received there; `up` picks the hidden direction for
// unidirectional codes. The received word is written to `received` (n
// symbols, may be null) and the decoded message to `*decoded` (may be
// null). Returns [`RcStatus::DecodeFailed`] when decoding did not recover
// the message.
//
// # Safety
// `code` must be a live handle, `message` a NUL-terminated string,
// `positions` and `values` valid for `n_errors` reads, and non-null
// `received` valid for n writes.
enum RcStatus rc_transmit(const struct RcCode *code,
                          const char *message,
                          const size_t *positions,
                          const uint8_t *values,
                          size_t n_errors,
                          bool up,
                          uint8_t *received,
                          char **decoded);

// Exhaustively checks every message against every adversary. A report is
// written to `*out` both when the code verifies ([`RcStatus::Ok`]) and
// when a counterexample is found ([`RcStatus::Counterexample`]).
// `jobs == 0` means one thread; `cap == 0` uses the library default.
//
// # Safety
// `code` must be a live handle and `out` a valid pointer.
enum RcStatus rc_verify(const struct RcCode *code,
                        size_t jobs,
                        uint64_t cap,
                        struct RcReport **out);

// # Safety
// `report` must be null or a handle from [`rc_verify`] not yet freed.
void rc_report_free(struct RcReport *report);

// # Safety
// `report` must be null or a live handle.
bool rc_report_verified(const struct RcReport *report);

// Leaves explored by the search.
//
// # Safety
// `report` must be null or a live handle.
uint64_t rc_report_leaves(const struct RcReport *report);

// Leaves where an error turned a sent symbol into the rubber.
//
// # Safety
// `report` must be null or a live handle.
uint64_t rc_report_towards_rubber_leaves(const struct RcReport *report);

// Failing message index as a decimal string, or null when verified.
//
// # Safety
// `report` must be null or a live handle.
char *rc_report_counterexample_message(const struct RcReport *report);

// Failing error pattern in the command-line `pos:sym,...` form (1-based
// positions), or null when verified.
//
// # Safety
// `report` must be null or a live handle.
char *rc_report_counterexample_errors(const struct RcReport *report);

// Rate of the multi-run modified rubber, best over `r` in `2..=r_max`.
double rc_r_mr(double tau, size_t q, size_t r_max);

double rc_rubber_rate(double tau, size_t q, size_t r);

double rc_modified_rubber_rate(double tau, size_t q, size_t r);

// Largest root of the run-length characteristic polynomial.
double rc_solve_z_r(size_t q, size_t r);

double rc_c2f_binary(double tau);

double rc_adl_upper(double tau, size_t q);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RUBBERCODES_H */
