#ifndef THRESHOLD_STOP_H
#define THRESHOLD_STOP_H

#include <stdint.h>

#if defined(TSTOP_BUILDING_LIBRARY)
#define TSTOP_API __attribute__((visibility("default")))
#else
#define TSTOP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct tstop_problem tstop_problem;

typedef enum tstop_status {
  TSTOP_OK = 0,
  TSTOP_ERR_ARGUMENT = 1,   /* null pointer or bad option */
  TSTOP_ERR_VALIDATION = 2, /* invalid problem, missing file, unsupported setup */
  TSTOP_ERR_NUMERICAL = 3,  /* a numerical procedure failed; partial output may exist */
  TSTOP_ERR_IO = 4,         /* output file could not be written */
  TSTOP_ERR_INTERNAL = 5
} tstop_status;

TSTOP_API const char* tstop_version(void);

/* Message for the last failed call on this thread ("" when none). */
TSTOP_API const char* tstop_last_error(void);

TSTOP_API tstop_status tstop_problem_load(const char* path, tstop_problem** out);
TSTOP_API tstop_status tstop_problem_parse(const char* text, tstop_problem** out);
TSTOP_API void tstop_problem_free(tstop_problem* problem);

/* The current problem as key-table text (free with tstop_string_free). */
TSTOP_API tstop_status tstop_problem_echo(const tstop_problem* problem, char** text);

TSTOP_API tstop_status tstop_problem_set_seed(tstop_problem* problem, uint64_t seed);
TSTOP_API tstop_status tstop_problem_set_grid_points(tstop_problem* problem, uint64_t points);

/* JSON report of the full analysis. On TSTOP_ERR_NUMERICAL *json still holds
   the partial report. */
TSTOP_API tstop_status tstop_analyze(const tstop_problem* problem, char** json);

/* CSV for what in {"h", "value", "psi", "mc_sweep"} written to out_path. */
TSTOP_API tstop_status tstop_plot_data(const tstop_problem* problem, const char* what,
                                       const char* out_path);

/* Monte Carlo estimate as JSON. Null x0 / p fall back to the problem's mc
   block and the optimal threshold. */
TSTOP_API tstop_status tstop_mc(const tstop_problem* problem, const double* x0, const double* p,
                                char** json);

TSTOP_API void tstop_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
