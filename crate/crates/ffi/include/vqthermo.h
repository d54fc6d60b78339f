#ifndef VQTHERMO_H
#define VQTHERMO_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum VqStatus {
  VQ_STATUS_OK = 0,
  VQ_STATUS_NULL_POINTER = 1,
  VQ_STATUS_INVALID_ARGUMENT = 2,
  VQ_STATUS_ENERGY_CONSERVATION = 3,
  VQ_STATUS_UNDERDETERMINED = 4,
  VQ_STATUS_UNDEFINED_QUANTITY = 5,
  VQ_STATUS_BUFFER_TOO_SMALL = 6,
  VQ_STATUS_PANIC = 7,
} VqStatus;

typedef enum VqScheme {
  VQ_SCHEME_TYPICAL = 0,
  VQ_SCHEME_VIRTUAL = 1,
} VqScheme;

/**
 * Opaque builder for an effective reset master equation.
 */
typedef struct VqEffRme VqEffRme;

typedef struct VqMachine {
  double omega1;
  double omega2;
  double temp1;
  double temp2;
  double rate1;
  double rate2;
  double coupling;
} VqMachine;

typedef struct VqVirtualQubit {
  double gap;
  double pop_ground;
  double pop_excited;
  double norm;
  double vtemp;
} VqVirtualQubit;

typedef struct VqLaserConfig {
  double energies[3];
  double omega_b1;
  double omega_c1;
  double t_hot;
  double t_cold;
  double t_env;
  double q_env;
  double q_hot;
  double q_cold;
  bool lossless;
} VqLaserConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread, NUL-terminated, into `buf`.
 * Returns the message length in bytes excluding the terminator; if that is
 * `>= len` the message was truncated.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t vq_last_error_message(char *buf, size_t len);

/**
 * `T_v = (Ω₁ − Ω₂)/(Ω₁/T₁ − Ω₂/T₂)`.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `double`.
 */
enum VqStatus vq_virtual_temperature(double omega1,
                                     double omega2,
                                     double temp1,
                                     double temp2,
                                     double *out);

/**
 * # Safety
 * `m` must be null or point to a valid `VqMachine`; `out` must be null or writable.
 */
enum VqStatus vq_virtual_qubit(const struct VqMachine *m, struct VqVirtualQubit *out);

/**
 * Effective reset rate `2g²n/(rate₁ + rate₂)`.
 *
 * # Safety
 * `m` must be null or point to a valid `VqMachine`; `out` must be null or writable.
 */
enum VqStatus vq_effective_rate(const struct VqMachine *m, double *out);

/**
 * Steady-state `p₁/p₀` of the three-level laser; `scheme` is a [`VqScheme`] value.
 *
 * # Safety
 * `cfg` must be null or point to a valid `VqLaserConfig`; `out` must be null or writable.
 */
enum VqStatus vq_laser_inversion_ratio(const struct VqLaserConfig *cfg,
                                       uint32_t scheme,
                                       double *out);

/**
 * Starts an effective model on `n` levels with the given energies.
 *
 * # Safety
 * `energies` must be null or valid for `n` reads; `out` must be null or writable.
 */
enum VqStatus vq_effrme_new(const double *energies, size_t n, struct VqEffRme **out);

/**
 * Adds a reset channel on levels `(k, l)` towards the populations
 * `(1 − pop_excited, pop_excited)`.
 *
 * # Safety
 * `h` must be null or a handle from [`vq_effrme_new`] that has not been freed.
 */
enum VqStatus vq_effrme_add_channel(struct VqEffRme *h,
                                    size_t k,
                                    size_t l,
                                    double rate,
                                    double pop_excited);

/**
 * Writes the steady-state populations into `out[0..len]`; `len` must equal
 * the number of levels.
 *
 * # Safety
 * `h` must be null or a live handle; `out` must be null or valid for `len` writes.
 */
enum VqStatus vq_effrme_steady_state(const struct VqEffRme *h, double *out, size_t len);

/**
 * # Safety
 * `h` must be null or a handle from [`vq_effrme_new`] not yet freed.
 */
void vq_effrme_free(struct VqEffRme *h);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VQTHERMO_H */
