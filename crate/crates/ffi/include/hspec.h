#ifndef HSPEC_H
#define HSPEC_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum HspecStatus {
  HSPEC_STATUS_OK = 0,
  HSPEC_STATUS_NULL_POINTER = 1,
  HSPEC_STATUS_INVALID_ARGUMENT = 2,
  HSPEC_STATUS_PARSE = 3,
  HSPEC_STATUS_EVALUATION = 4,
  HSPEC_STATUS_NUMERICAL = 5,
  HSPEC_STATUS_REFUSED = 6,
  HSPEC_STATUS_PANIC = 7,
} HspecStatus;

typedef enum HspecCriterion {
  HSPEC_CRITERION_HILBERT_SCHMIDT = 0,
  HSPEC_CRITERION_TRACE_CLASS = 1,
  HSPEC_CRITERION_SR_SMALL = 2,
  HSPEC_CRITERION_SR_SIGMA = 3,
} HspecCriterion;

typedef enum HspecTailFlag {
  HSPEC_TAIL_FLAG_CONVERGING = 0,
  HSPEC_TAIL_FLAG_DIVERGING = 1,
  HSPEC_TAIL_FLAG_INCONCLUSIVE = 2,
} HspecTailFlag;

// Opaque handle to an assembled truncated operator.
typedef struct HspecOperator HspecOperator;

// Opaque symbol handle.
typedef struct HspecSymbol HspecSymbol;

// Summary of a criterion verdict. `slope` and `growth_exponent` are NaN
// when `has_fit` is false.
typedef struct HspecVerdict {
  double partial_sum;
  double last_shell;
  enum HspecTailFlag tail_flag;
  bool has_fit;
  double slope;
  double growth_exponent;
  size_t shell_count;
} HspecVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer stays
// valid until the next failing call on the same thread.
const char *hspec_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *hspec_version(void);

// Parses an expression symbol in `dim` variables.
enum HspecStatus hspec_symbol_parse(const char *expr, size_t dim, struct HspecSymbol **out);

// Builds a builtin symbol ("power", "heat", "bandlimit") from parallel
// arrays of parameter names and values.
enum HspecStatus hspec_symbol_builtin(const char *family,
                                      const char *const *param_names,
                                      const double *param_values,
                                      size_t param_count,
                                      size_t dim,
                                      struct HspecSymbol **out);

// Loads a symbol from the JSON symbol-file format.
enum HspecStatus hspec_symbol_from_json(const char *json, struct HspecSymbol **out);

void hspec_symbol_free(struct HspecSymbol *symbol);

enum HspecStatus hspec_symbol_dim(const struct HspecSymbol *symbol, size_t *out);

// Sets or clears the positive self-adjoint claim required by the
// trace-class criterion.
enum HspecStatus hspec_symbol_set_positive_selfadjoint(struct HspecSymbol *symbol, bool claim);

// Evaluates m(x, ν); `x` and `nu` both hold `dim` entries.
enum HspecStatus hspec_symbol_eval(const struct HspecSymbol *symbol,
                                   const double *x,
                                   const size_t *nu,
                                   size_t dim,
                                   double *out);

// Assembles P_N T_m P_N at level `level`. `quad_order` 0 selects N + 32.
enum HspecStatus hspec_operator_assemble(const struct HspecSymbol *symbol,
                                         size_t level,
                                         size_t quad_order,
                                         struct HspecOperator **out);

void hspec_operator_free(struct HspecOperator *op);

// Matrix dimension (number of multi-indices with |ν| ≤ N).
enum HspecStatus hspec_operator_size(const struct HspecOperator *op, size_t *out);

// Copies the matrix row-major into `buf`, which must hold size² values.
enum HspecStatus hspec_operator_entries(const struct HspecOperator *op, double *buf, size_t len);

// Writes the singular values in descending order; `buf` must hold size values.
enum HspecStatus hspec_operator_singular_values(const struct HspecOperator *op,
                                                double *buf,
                                                size_t len);

// Schatten r-norm (Σσ^r)^(1/r); the raw sum goes to `raw_sum` when non-NULL.
enum HspecStatus hspec_operator_schatten_norm(const struct HspecOperator *op,
                                              double r,
                                              double *norm,
                                              double *raw_sum);

enum HspecStatus hspec_operator_matrix_trace(const struct HspecOperator *op, double *out);

// Sum of eigenvalues. `imaginary_residual` (optional) receives |Σ Im λ|.
enum HspecStatus hspec_operator_spectral_trace(const struct HspecOperator *op,
                                               double *out,
                                               double *imaginary_residual);

// Σ_{|ν|≤N} ∫ m(x,ν) φ_ν(x)² dx. `quad_order` 0 selects N + 32.
enum HspecStatus hspec_trace_formula(const struct HspecSymbol *symbol,
                                     size_t level,
                                     size_t quad_order,
                                     double *out);

// Runs one criterion. `r` is ignored for HilbertSchmidt and TraceClass and
// `sigma` is used only by SrSigma. A refused trace-class check returns
// `HSPEC_STATUS_REFUSED` with the reason in the last-error slot.
enum HspecStatus hspec_check_criterion(const struct HspecSymbol *symbol,
                                       size_t level,
                                       size_t quad_order,
                                       enum HspecCriterion criterion,
                                       double r,
                                       double sigma,
                                       struct HspecVerdict *out);

// Normalized Hermite function φ_ν(x) in `dim` variables.
enum HspecStatus hspec_hermite_eval(const size_t *nu, const double *x, size_t dim, double *out);

// Oscillator eigenvalue λ_ν = 2|ν| + n.
enum HspecStatus hspec_lambda(const size_t *nu, size_t dim, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HSPEC_H */
