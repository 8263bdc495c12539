#ifndef MVTSP_H
#define MVTSP_H

#include <stdint.h>
#include <stdbool.h>

typedef enum MvtspAlgorithm {
  MVTSP_ALGORITHM_APX15 = 0,
  MVTSP_ALGORITHM_APX25 = 1,
  MVTSP_ALGORITHM_EXACT = 2,
  /**
   * Iterative rounding on a degree-bounded instance.
   */
  MVTSP_ALGORITHM_BDGPE = 3,
} MvtspAlgorithm;

typedef enum MvtspRegime {
  MVTSP_REGIME_BOTH = 0,
  MVTSP_REGIME_LOWER = 1,
  MVTSP_REGIME_UPPER = 2,
} MvtspRegime;

/**
 * Result code of every fallible call.
 */
typedef enum MvtspStatus {
  MVTSP_STATUS_OK = 0,
  MVTSP_STATUS_NULL_POINTER = 1,
  MVTSP_STATUS_INVALID_ARGUMENT = 2,
  MVTSP_STATUS_PARSE = 3,
  MVTSP_STATUS_INFEASIBLE = 4,
  MVTSP_STATUS_BUDGET_EXCEEDED = 5,
  MVTSP_STATUS_FAILED = 6,
  MVTSP_STATUS_PANIC = 7,
} MvtspStatus;

/**
 * Opaque instance handle (either a tour or a degree-bounded instance).
 */
typedef struct MvtspInstance MvtspInstance;

/**
 * Opaque solution handle tied to the digest of its instance.
 */
typedef struct MvtspSolution MvtspSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy of the calling thread's last error message, or NULL when the last
 * call succeeded. Free the result with `mvtsp_string_free`.
 */
char *mvtsp_last_error_message(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and must not be used afterwards.
 */
void mvtsp_string_free(char *s);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mvtsp_version(void);

/**
 * Parses an instance file (either kind).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum MvtspStatus mvtsp_instance_from_json(const char *json, struct MvtspInstance **out);

/**
 * Seeded random metric instance on `n` vertices with requests in `1..=r_max`.
 *
 * # Safety
 * `out` must be writable.
 */
enum MvtspStatus mvtsp_instance_generate(uint64_t seed,
                                         uint32_t n,
                                         int64_t r_max,
                                         struct MvtspInstance **out);

/**
 * Seeded random degree-bounded instance on `size` (1 to 6) elements.
 *
 * # Safety
 * `out` must be writable.
 */
enum MvtspStatus mvtsp_bdgpe_generate(uint64_t seed,
                                      uint32_t size,
                                      enum MvtspRegime regime,
                                      struct MvtspInstance **out);

/**
 * Releases an instance. NULL is ignored.
 *
 * # Safety
 * `inst` must come from this library and must not be used afterwards.
 */
void mvtsp_instance_free(struct MvtspInstance *inst);

/**
 * Canonical JSON of the instance.
 *
 * # Safety
 * `inst` must be a live handle; `out` must be writable.
 */
enum MvtspStatus mvtsp_instance_to_json(const struct MvtspInstance *inst, char **out);

/**
 * Hex SHA-256 digest of the canonical JSON.
 *
 * # Safety
 * `inst` must be a live handle; `out` must be writable.
 */
enum MvtspStatus mvtsp_instance_digest(const struct MvtspInstance *inst, char **out);

/**
 * Runs `alg` on the instance. Tour algorithms need a tour instance,
 * `MVTSP_ALGORITHM_BDGPE` a degree-bounded one; `MVTSP_ALGORITHM_EXACT`
 * accepts both and uses the default oracle budget.
 *
 * # Safety
 * `inst` must be a live handle; `out` must be writable.
 */
enum MvtspStatus mvtsp_solve(const struct MvtspInstance *inst,
                             enum MvtspAlgorithm alg,
                             struct MvtspSolution **out);

/**
 * Releases a solution. NULL is ignored.
 *
 * # Safety
 * `sol` must come from this library and must not be used afterwards.
 */
void mvtsp_solution_free(struct MvtspSolution *sol);

/**
 * Exact cost as a `"p/q"` string.
 *
 * # Safety
 * `sol` must be a live handle; `out` must be writable.
 */
enum MvtspStatus mvtsp_solution_cost(const struct MvtspSolution *sol, char **out);

/**
 * Solution file JSON.
 *
 * # Safety
 * `sol` must be a live handle; `out` must be writable.
 */
enum MvtspStatus mvtsp_solution_to_json(const struct MvtspSolution *sol, char **out);

/**
 * Multiplicity of edge `{u, v}` in a tour solution (0 for absent edges).
 *
 * # Safety
 * `sol` must be a live handle; `out` must be writable.
 */
enum MvtspStatus mvtsp_solution_edge(const struct MvtspSolution *sol,
                                     uint32_t u,
                                     uint32_t v,
                                     int64_t *out);

/**
 * Checks a solution against an instance: degrees and connectivity for a
 * tour, polyhedron membership and the regime's violation bound for an
 * element. A digest mismatch is an error, an unmet bound sets `*ok = false`.
 *
 * # Safety
 * Both handles must be live; `ok` must be writable.
 */
enum MvtspStatus mvtsp_solution_check(const struct MvtspInstance *inst,
                                      const struct MvtspSolution *sol,
                                      bool *ok);

/**
 * Parses a solution file for `inst`.
 *
 * # Safety
 * `inst` must be a live handle, `json` NUL-terminated, `out` writable.
 */
enum MvtspStatus mvtsp_solution_from_json(const struct MvtspInstance *inst,
                                          const char *json,
                                          struct MvtspSolution **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MVTSP_H */
