/* C interface to libmaxrank. All handles are opaque; every function returns
 * an mxr_status. On failure, mxr_last_error_message() describes the most
 * recent error on the calling thread. Strings returned through char** are
 * owned by the caller and released with mxr_string_free. */
#ifndef MAXRANK_H
#define MAXRANK_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define MXR_API __attribute__((visibility("default")))
#else
#define MXR_API
#endif

typedef enum mxr_status {
    MXR_OK = 0,
    MXR_ERR_CONFIG = 1,
    MXR_ERR_CONTRACT = 2,
    MXR_ERR_SAMPLING = 3,
    MXR_ERR_DEGENERATE = 4,
    MXR_ERR_NONCONVERGENCE = 5,
    MXR_ERR_IO = 6,
    MXR_ERR_PRECONDITION = 7,
    MXR_ERR_INTERNAL = 99
} mxr_status;

typedef enum mxr_operator { MXR_MONGE_AMPERE = 0, MXR_DONALDSON = 1 } mxr_operator;

typedef struct mxr_grid mxr_grid;
typedef struct mxr_field mxr_field;
typedef struct mxr_problem mxr_problem;

MXR_API const char* mxr_version(void);
MXR_API const char* mxr_last_error_message(void);
MXR_API const char* mxr_status_name(mxr_status status);
MXR_API void mxr_string_free(char* s);

/* Grid: n space dimensions (1..3), Nx points per periodic axis, Nt time cells. */
MXR_API mxr_status mxr_grid_create(int n, int nx, int nt, mxr_grid** out);
MXR_API void mxr_grid_destroy(mxr_grid* grid);
MXR_API mxr_status mxr_grid_size(const mxr_grid* grid, size_t* points, size_t* space_points);

/* Field values are stored with the time index fastest. */
MXR_API mxr_status mxr_field_create(const mxr_grid* grid, const double* values, size_t count, mxr_field** out);
MXR_API void mxr_field_destroy(mxr_field* field);
MXR_API mxr_status mxr_field_values(const mxr_field* field, double* out, size_t count);
MXR_API mxr_status mxr_field_write(const mxr_field* field, const char* path);
MXR_API mxr_status mxr_field_read(const char* path, mxr_field** out);

/* u0 and u1 hold space_points values each. */
MXR_API mxr_status mxr_problem_create(mxr_operator op, const mxr_grid* grid, double eps, const double* u0,
                                      const double* u1, size_t count, mxr_problem** out);
MXR_API void mxr_problem_destroy(mxr_problem* problem);
MXR_API mxr_status mxr_boundary_lambda(const mxr_problem* problem, double* out);

typedef struct mxr_solver_options {
    double tol;
    int max_iter;
    double backtrack;
    double min_step;
    int cone_safeguard;
    int continuation; /* > 0: Donaldson s-homotopy with that many steps */
} mxr_solver_options;

MXR_API void mxr_solver_options_default(mxr_solver_options* opts);

typedef struct mxr_solve_info {
    int converged;
    int iterations;
    double final_residual;
    double cone_margin;
} mxr_solve_info;

/* Solves from the built-in initial guess. On non-convergence *out is NULL,
 * info is filled and MXR_ERR_NONCONVERGENCE is returned. */
MXR_API mxr_status mxr_solve(const mxr_problem* problem, const mxr_solver_options* opts, mxr_field** out,
                             mxr_solve_info* info);

typedef struct mxr_theorem_info {
    double mu0;
    double lambda_boundary;
    double tol;
    int min_rank;
    int max_rank;
    int lower_bound_pass, lower_bound_applies;
    int constant_rank_pass, constant_rank_applies;
    int strict_pass, strict_applies;
} mxr_theorem_info;

/* tol < 0 selects the default 5 h^2. */
MXR_API mxr_status mxr_check_theorems(const mxr_field* u, const mxr_problem* problem, double tol,
                                      mxr_theorem_info* out);

/* Runs one command described by a JSON configuration (same keys as the CLI
 * config file). *report receives the JSON report; *exit_code the process exit
 * code (0 ok, 1 internal, 2 validation, 3 non-convergence, 4 violation). */
MXR_API mxr_status mxr_run(const char* config_json, char** report, int* exit_code);

#ifdef __cplusplus
}
#endif

#endif
