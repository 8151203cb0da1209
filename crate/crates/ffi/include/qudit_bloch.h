#ifndef QUDIT_BLOCH_H
#define QUDIT_BLOCH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

// Status codes returned by every fallible call.
typedef enum QbStatus {
  QB_STATUS_OK = 0,
  QB_STATUS_NULL_POINTER = 1,
  QB_STATUS_INVALID_INPUT = 2,
  QB_STATUS_SHAPE = 3,
  QB_STATUS_NOT_HERMITIAN = 4,
  QB_STATUS_CAP_EXCEEDED = 5,
  QB_STATUS_STEP_UNDERFLOW = 6,
  QB_STATUS_SINGULAR_INERTIA = 7,
  QB_STATUS_SEPARATRIX = 8,
  QB_STATUS_REPEATED_MOMENTS = 9,
  QB_STATUS_DEGENERATE = 10,
  QB_STATUS_RESONANCE = 11,
  QB_STATUS_NOT_STATIONARY = 12,
  QB_STATUS_NUMERICAL = 13,
  QB_STATUS_PANIC = 14,
} QbStatus;

// Element ordering for [`qb_basis_new`].
typedef enum QbOrdering {
  // All symmetric, then antisymmetric, then diagonal elements.
  QB_ORDERING_GROUPED = 0,
  // Gell-Mann order (λ1..λ8 at d = 3).
  QB_ORDERING_STANDARD = 1,
} QbOrdering;

// Opaque generalized Gell-Mann basis.
typedef struct QbBasis QbBasis;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (nul-terminated,
// truncated to `len`) and returns the full message length without the nul.
// Returns 0 when no error has been recorded.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t qb_last_error_message(char *buf, size_t len);

// Library version as a static nul-terminated string.
const char *qb_version(void);

// Builds the su(d) basis and stores a new handle in `*out`.
//
// # Safety
// `out` must be a valid pointer to a handle slot.
enum QbStatus qb_basis_new(size_t d, enum QbOrdering ordering, struct QbBasis **out);

// Releases a handle from [`qb_basis_new`]; null is ignored.
//
// # Safety
// `b` must be null or a live handle that is not used afterwards.
void qb_basis_free(struct QbBasis *b);

// Hilbert-space dimension d, or 0 for a null handle.
//
// # Safety
// `b` must be null or a live handle.
size_t qb_basis_dim(const struct QbBasis *b);

// Number of basis elements d² − 1, or 0 for a null handle.
//
// # Safety
// `b` must be null or a live handle.
size_t qb_basis_len(const struct QbBasis *b);

// Writes element `k` (0-based) as d×d row-major real and imaginary parts.
//
// # Safety
// `b` must be a live handle; `re` and `im` must hold d² doubles each.
enum QbStatus qb_basis_element(const struct QbBasis *b, size_t k, double *re, double *im);

// f_ijk (0-based indices).
//
// # Safety
// `b` must be a live handle and `out` a writable double.
enum QbStatus qb_basis_f(const struct QbBasis *b, size_t i, size_t j, size_t k, double *out);

// g_ijk (0-based indices).
//
// # Safety
// `b` must be a live handle and `out` a writable double.
enum QbStatus qb_basis_g(const struct QbBasis *b, size_t i, size_t j, size_t k, double *out);

// Decomposes a Hermitian d×d operator into its scalar part Tr(A)/d and
// the d² − 1 coefficients Tr(AΛ_k)/2.
//
// # Safety
// `re`, `im` must hold d² doubles; `scalar` one double; `vec` d² − 1 doubles.
enum QbStatus qb_decompose(const struct QbBasis *b,
                           const double *re,
                           const double *im,
                           double *scalar,
                           double *vec);

// Inverse of [`qb_decompose`].
//
// # Safety
// `vec` must hold d² − 1 doubles; `re`, `im` d² doubles each.
enum QbStatus qb_reconstruct(const struct QbBasis *b,
                             double scalar,
                             const double *vec,
                             double *re,
                             double *im);

// Jacobi elliptic functions sn, cn, dn of argument `u` and modulus `k`.
//
// # Safety
// `sn`, `cn`, `dn` must be writable doubles.
enum QbStatus qb_jacobi_elliptic(double u, double k, double *sn, double *cn, double *dn);

// Integrates the generalized Euler equations; `out` receives `ntimes` rows
// of d² − 1 angular-velocity components.
//
// # Safety
// `omega0` and `moments` must hold d² − 1 doubles, `times` `ntimes`
// doubles and `out` ntimes·(d² − 1) doubles.
enum QbStatus qb_integrate_euler(const struct QbBasis *b,
                                 const double *omega0,
                                 const double *moments,
                                 const double *times,
                                 size_t ntimes,
                                 double tol,
                                 double *out);

// Exact von Neumann propagation; `out` receives `ntimes` rows of Bloch coefficients.
//
// # Safety
// Matrix arguments must hold d² doubles each, `times` `ntimes` doubles and
// `out` ntimes·(d² − 1) doubles.
enum QbStatus qb_propagate_spectral(const struct QbBasis *b,
                                    const double *h_re,
                                    const double *h_im,
                                    const double *rho_re,
                                    const double *rho_im,
                                    const double *times,
                                    size_t ntimes,
                                    double *out);

// Wootters concurrence of a 4×4 two-qubit density matrix.
//
// # Safety
// `re`, `im` must hold 16 doubles each; `out` must be writable.
enum QbStatus qb_concurrence(const double *re, const double *im, double *out);

// Amplitudes of the oscillating entangled state on n parties of dimension d
// at time `t`; `re` and `im` receive d^n doubles each.
//
// # Safety
// `omegas` must hold `nomegas` doubles; `re`, `im` d^n doubles each.
enum QbStatus qb_oscillating_state(size_t d,
                                   size_t n,
                                   const double *omegas,
                                   size_t nomegas,
                                   size_t k_ref,
                                   double t,
                                   double *re,
                                   double *im);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUDIT_BLOCH_H */
