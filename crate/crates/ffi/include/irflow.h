#ifndef IRFLOW_H
#define IRFLOW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IrflowStatus {
  IRFLOW_STATUS_OK = 0,
  IRFLOW_STATUS_INVALID_ARGUMENT = 1,
  /**
   * The report was produced but at least one bound check failed.
   */
  IRFLOW_STATUS_BOUND_CHECK_FAILED = 2,
  /**
   * A level could not be solved; the report holds the scales before it.
   */
  IRFLOW_STATUS_SOLVER_FAILURE = 3,
  IRFLOW_STATUS_CONFIG_ERROR = 4,
  IRFLOW_STATUS_PANIC = 5,
} IrflowStatus;

/**
 * Model and run settings.
 */
typedef struct IrflowParams IrflowParams;

/**
 * Result of one cascade run.
 */
typedef struct IrflowReport IrflowReport;

/**
 * One scale of the cascade. Quantities undefined at the deepest scale are NaN.
 */
typedef struct IrflowScaleRecord {
  uintptr_t n;
  double rho_n;
  double e_n;
  double gap_n;
  double gap_tilde;
  double energy_step;
  double proj_step;
  double contraction_q;
  double sigma1_elem;
  double residual_full;
  uintptr_t dim;
} IrflowScaleRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Baseline parameters. Never null.
 */
struct IrflowParams *irflow_params_default(void);

/**
 * Parses a JSON config (same keys as the command-line tool) into `*out`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum IrflowStatus irflow_params_from_json(const char *json, struct IrflowParams **out);

/**
 * Sets one numeric parameter: `g`, `gamma`, `kappa`, `tol_eig`, `J`,
 * `N_max`, `N_scales`, or `allow_out_of_regime` (nonzero for true).
 *
 * # Safety
 * `params` must come from this library; `name` must be NUL-terminated.
 */
enum IrflowStatus irflow_params_set(struct IrflowParams *params, const char *name, double value);

/**
 * # Safety
 * `params` must come from this library or be null.
 */
void irflow_params_free(struct IrflowParams *params);

/**
 * Runs the cascade. A report is stored in `*out` for `Ok`,
 * `BoundCheckFailed` and `SolverFailure`; otherwise `*out` is null.
 *
 * # Safety
 * `params` must come from this library and `out` be writable.
 */
enum IrflowStatus irflow_run_cascade(const struct IrflowParams *params, struct IrflowReport **out);

/**
 * # Safety
 * `report` must come from this library or be null.
 */
void irflow_report_free(struct IrflowReport *report);

/**
 * Number of recorded scales; 0 for a null report.
 *
 * # Safety
 * `report` must come from this library or be null.
 */
uintptr_t irflow_report_num_scales(const struct IrflowReport *report);

/**
 * # Safety
 * `report` must come from this library or be null.
 */
uintptr_t irflow_report_num_checks(const struct IrflowReport *report);

/**
 * # Safety
 * `report` must come from this library or be null.
 */
uintptr_t irflow_report_num_failed_checks(const struct IrflowReport *report);

/**
 * Copies scale `n` into `*out`.
 *
 * # Safety
 * `report` must come from this library and `out` be writable.
 */
enum IrflowStatus irflow_report_record(const struct IrflowReport *report,
                                       uintptr_t n,
                                       struct IrflowScaleRecord *out);

/**
 * Ground-energy estimate and its error bound.
 *
 * # Safety
 * `report` must come from this library; output pointers must be writable.
 */
enum IrflowStatus irflow_report_ground_energy(const struct IrflowReport *report,
                                              double *e_gs,
                                              double *error_bound);

/**
 * Full report as JSON; null on failure.
 *
 * # Safety
 * `report` must come from this library or be null.
 */
char *irflow_report_to_json(const struct IrflowReport *report);

/**
 * Per-scale table in the command-line `cascade.csv` layout; null on failure.
 *
 * # Safety
 * `report` must come from this library or be null.
 */
char *irflow_report_to_csv(const struct IrflowReport *report);

/**
 * # Safety
 * `s` must come from this library or be null.
 */
void irflow_string_free(char *s);

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call into the library from the same thread.
 */
const char *irflow_last_error_message(void);

const char *irflow_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IRFLOW_H */
