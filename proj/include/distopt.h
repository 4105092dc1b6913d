/* C interface to the distributed optimal-control optimization library.
 *
 * All functions return DISTOPT_OK (0) on success or a nonzero error code;
 * the thread-local message for the most recent failure is available via
 * distopt_last_error(). Objects are opaque handles released with their
 * matching _free function. Strings returned through `char**` out-parameters
 * are heap-allocated and must be released with distopt_free_string();
 * `const char*` getters stay owned by the handle they came from.
 */

#ifndef DISTOPT_H
#define DISTOPT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define DISTOPT_OK 0
#define DISTOPT_ERR_CONFIG 2   /* unparseable or inconsistent configuration */
#define DISTOPT_ERR_NUMERIC 3  /* solver failure or non-convergence */
#define DISTOPT_ERR_PROPERTY 4 /* a checked run property was violated */
#define DISTOPT_ERR_INVALID 5  /* argument or precondition violation */
#define DISTOPT_ERR_IO 6       /* file system failure */

typedef struct distopt_experiment distopt_experiment;
typedef struct distopt_result distopt_result;

const char* distopt_version(void);

const char* distopt_last_error(void);
int distopt_last_error_code(void);

/* Experiments ----------------------------------------------------------- */

int distopt_experiment_load(const char* path, distopt_experiment** out);
int distopt_experiment_parse(const char* text, distopt_experiment** out);
int distopt_experiment_set_seed(distopt_experiment* exp, uint64_t seed);
int distopt_experiment_set_out_dir(distopt_experiment* exp, const char* dir);
const char* distopt_experiment_name(const distopt_experiment* exp);
const char* distopt_experiment_out_dir(const distopt_experiment* exp);
void distopt_experiment_free(distopt_experiment* exp);

/* Runs a configured experiment; on success *out owns the trace and the rate
 * report. Returns DISTOPT_ERR_PROPERTY when the run finished but a checked
 * property failed (the result is still produced). */
int distopt_experiment_run(distopt_experiment* exp, distopt_result** out);

/* Results --------------------------------------------------------------- */

/* Writes trace.csv, trace.meta, and report.txt under `dir`. */
int distopt_result_write(const distopt_result* res, const char* dir);
int64_t distopt_result_iterations(const distopt_result* res);
int distopt_result_converged(const distopt_result* res);
const char* distopt_result_classification(const distopt_result* res);
const char* distopt_result_trace_csv(const distopt_result* res);
const char* distopt_result_meta_text(const distopt_result* res);
const char* distopt_result_report_text(const distopt_result* res);
/* Scalar report fields: final_err, sigma, rho, c, r1, r2, log_ratio_slope,
 * linear_c, riccati_residual. Unknown key: DISTOPT_ERR_INVALID. */
int distopt_result_metric(const distopt_result* res, const char* key,
                          double* out);
void distopt_result_free(distopt_result* res);

/* Tools ------------------------------------------------------------------ */

/* Re-fits a saved trace CSV and yields the rate report text. */
int distopt_fit_csv(const char* csv_path, char** report_text);

/* Runs every config, measuring iterations and message cost to bring the
 * error under `tol`; yields the joined table. `seed_override` may be NULL. */
int distopt_compare(const char* const* config_paths, size_t count,
                    const uint64_t* seed_override, double tol,
                    char** table_text);

/* Built-in invariant suite over bundled instances. Returns DISTOPT_OK when
 * every check passes, DISTOPT_ERR_PROPERTY otherwise; the per-check log is
 * yielded through report_text. */
int distopt_selftest(char** report_text);

void distopt_free_string(char* s);

#ifdef __cplusplus
}
#endif

#endif /* DISTOPT_H */
