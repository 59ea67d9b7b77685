#ifndef QAXIOM_H
#define QAXIOM_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QaxStatus {
  QAX_STATUS_OK = 0,
  QAX_STATUS_NULL_POINTER = 1,
  QAX_STATUS_INVALID_ARGUMENT = 2,
  QAX_STATUS_DIMENSION_MISMATCH = 3,
  QAX_STATUS_NOT_HERMITIAN = 4,
  QAX_STATUS_DEGENERATE = 5,
  QAX_STATUS_NON_POSITIVE = 6,
  QAX_STATUS_MALFORMED_RAYS = 7,
  QAX_STATUS_ORDER_TOO_LARGE = 8,
  QAX_STATUS_CUTOFF_TOO_SMALL = 9,
  QAX_STATUS_PANIC = 99,
} QaxStatus;

// GNS space handle.
typedef struct QaxGnsSpace QaxGnsSpace;

// Ray set handle.
typedef struct QaxRaySet QaxRaySet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the next
// call into the library from the same thread.
const char *qax_last_error_message(void);

// `G(t1, t2) = e^{-i w |t1 - t2|} / (2 w)`.
enum QaxStatus qax_two_point(double t1, double t2, double omega, double *out_re, double *out_im);

// Vacuum Green's function of `n` times by Wick pairing.
enum QaxStatus qax_wick_green(const double *times,
                              size_t n,
                              double omega,
                              double *out_re,
                              double *out_im);

// Vacuum Green's function on a Fock truncation with `cutoff` levels.
enum QaxStatus qax_fock_green(const double *times,
                              size_t n,
                              double omega,
                              size_t cutoff,
                              double *out_re,
                              double *out_im);

// Born probabilities of `state` (n complex entries) over the eigenbasis of the
// nondegenerate Hermitian `observable` (n x n complex). Writes the probabilities
// and matching eigenvalues, in the canonical order of the context, to arrays of
// length `n`.
enum QaxStatus qax_born_distribution(const double *state,
                                     const double *observable,
                                     size_t n,
                                     double *out_probabilities,
                                     double *out_values);

// Parses a NUL-terminated CSV of `x,y,z` rays.
enum QaxStatus qax_rayset_from_csv(const char *text, struct QaxRaySet **out_set);

// The built-in 33-ray set of Peres.
enum QaxStatus qax_rayset_peres33(struct QaxRaySet **out_set);

// Number of rays, or 0 for NULL.
size_t qax_rayset_len(const struct QaxRaySet *set);

void qax_rayset_free(struct QaxRaySet *set);

// Exhaustive search for a noncontextual assignment. `out_sat` receives 1 or 0.
// When satisfiable and `out_assignment` is not NULL, it receives one value per ray.
enum QaxStatus qax_ks_search(const struct QaxRaySet *set,
                             int32_t *out_sat,
                             uint64_t *out_nodes,
                             uint8_t *out_assignment);

// GNS space of the vector state `state` (n complex entries) on the full n x n
// algebra.
enum QaxStatus qax_gns_vector_state(const double *state, size_t n, struct QaxGnsSpace **out_space);

// GNS space of the normalized trace on the full n x n algebra.
enum QaxStatus qax_gns_tracial(size_t n, struct QaxGnsSpace **out_space);

// Dimension of the GNS space, or 0 for NULL.
size_t qax_gns_rank(const struct QaxGnsSpace *space);

// `<Phi(I), Pi(S) Phi(I)>` for an n x n complex element `element`.
enum QaxStatus qax_gns_vacuum_expectation(const struct QaxGnsSpace *space,
                                          const double *element,
                                          double *out_re,
                                          double *out_im);

void qax_gns_free(struct QaxGnsSpace *space);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QAXIOM_H */
