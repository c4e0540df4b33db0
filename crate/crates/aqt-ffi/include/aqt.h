/* C bindings for the aqt quantum-state reconstruction library. */

#ifndef AQT_H
#define AQT_H

/* Generated by cbindgen from aqt-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes shared by every binding; aligned with the CLI exit codes
// (2 validation, 3 capacity, 4 numeric) plus binding-specific values.
typedef enum AqtStatus {
  AQT_STATUS_OK = 0,
  // Invalid arguments, shapes, domains or file contents.
  AQT_STATUS_VALIDATION = 2,
  // A size cap would be exceeded.
  AQT_STATUS_CAPACITY = 3,
  // A numeric routine failed.
  AQT_STATUS_NUMERIC = 4,
  // File input/output failed.
  AQT_STATUS_IO = 5,
  // A required pointer was null.
  AQT_STATUS_NULL_POINTER = 6,
} AqtStatus;

// Opaque collection of measurement outcomes.
typedef struct AqtDataset AqtDataset;

// Opaque dense density matrix.
typedef struct AqtDensityMatrix AqtDensityMatrix;

// Opaque single-qubit POVM frame.
typedef struct AqtFrame AqtFrame;

// Opaque autoregressive model.
typedef struct AqtModel AqtModel;

// Opaque target state (GHZ or faulty-qubit mixture).
typedef struct AqtState AqtState;

// Training settings; mirror of the library defaults via
// [`aqt_train_options_default`].
typedef struct AqtTrainOptions {
  double learning_rate;
  uint64_t batch_size;
  uint64_t epochs;
  double beta1;
  double beta2;
  double epsilon;
  uint64_t seed;
  // 0 = keep dataset order, 1 = shuffle every epoch.
  uint8_t shuffle;
  double heldout_fraction;
  uint64_t patience;
  double lr_decay;
} AqtTrainOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message (UTF-8, NUL-terminated, truncated to fit)
// into `buf` and returns the full message length in bytes.
//
// # Safety
// `buf` must point to `len` writable bytes, or be null (then only the
// length is returned).
uintptr_t aqt_last_error(char *buf, uintptr_t len);

// Creates the n-qubit GHZ state.
//
// # Safety
// `out` must be a valid pointer.
enum AqtStatus aqt_state_ghz(uintptr_t n_qubits, struct AqtState **out);

// Creates the 3-qubit faulty-qubit mixture with error rate `p`.
//
// # Safety
// `out` must be a valid pointer.
enum AqtStatus aqt_state_faulty(double p, struct AqtState **out);

// Creates the Pauli-4 POVM frame.
//
// # Safety
// `out` must be a valid pointer.
enum AqtStatus aqt_frame_pauli4(struct AqtFrame **out);

// Exact outcome probability of a full measurement string.
//
// # Safety
// All pointers must be valid; `symbols` must hold `len` bytes.
enum AqtStatus aqt_outcome_prob(const struct AqtState *state,
                                const struct AqtFrame *frame,
                                const uint8_t *symbols,
                                uintptr_t len,
                                double *out);

// Draws `n_samples` i.i.d. outcomes from the state's exact distribution.
//
// # Safety
// All pointers must be valid.
enum AqtStatus aqt_sample(const struct AqtState *state,
                          const struct AqtFrame *frame,
                          uintptr_t n_samples,
                          uint64_t seed,
                          struct AqtDataset **out);

// Reads a dataset file in the aqt-dataset v1 format.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be valid.
enum AqtStatus aqt_dataset_load(const char *path, struct AqtDataset **out);

// Writes the dataset in the aqt-dataset v1 format.
//
// # Safety
// `dataset` must be live; `path` must be a NUL-terminated string.
enum AqtStatus aqt_dataset_save(const struct AqtDataset *dataset, const char *path);

// Number of outcome strings.
//
// # Safety
// `dataset` must be live.
uintptr_t aqt_dataset_len(const struct AqtDataset *dataset);

// Qubits per outcome string.
//
// # Safety
// `dataset` must be live.
uintptr_t aqt_dataset_n_qubits(const struct AqtDataset *dataset);

// Copies outcome `index` (symbols 0..=3, one byte per qubit) into `buf`.
//
// # Safety
// `buf` must hold at least `aqt_dataset_n_qubits` bytes.
enum AqtStatus aqt_dataset_outcome(const struct AqtDataset *dataset, uintptr_t index, uint8_t *buf);

// Fills `out` with the default training options.
//
// # Safety
// `out` must be a valid pointer.
enum AqtStatus aqt_train_options_default(struct AqtTrainOptions *out);

// Initializes a fresh desk-scale model (2 layers, 64-dim embedding).
//
// # Safety
// `out` must be a valid pointer.
enum AqtStatus aqt_model_init_desk(uintptr_t n_qubits, uint64_t seed, struct AqtModel **out);

// Trains a copy of `model` on `dataset`; returns the trained model.
//
// # Safety
// All pointers must be valid.
enum AqtStatus aqt_train(const struct AqtModel *model,
                         const struct AqtDataset *dataset,
                         const struct AqtTrainOptions *options,
                         struct AqtModel **out);

// Loads a checkpoint file.
//
// # Safety
// `path` must be NUL-terminated; `out` must be valid.
enum AqtStatus aqt_model_load(const char *path, struct AqtModel **out);

// Saves a checkpoint file.
//
// # Safety
// `model` must be live; `path` must be NUL-terminated.
enum AqtStatus aqt_model_save(const struct AqtModel *model, const char *path);

// Sequence length (qubit count) of the model.
//
// # Safety
// `model` must be live.
uintptr_t aqt_model_n_qubits(const struct AqtModel *model);

// Exact `ln p(a)` of a full outcome string under the model.
//
// # Safety
// All pointers must be valid; `symbols` must hold `len` bytes.
enum AqtStatus aqt_model_log_prob(const struct AqtModel *model,
                                  const uint8_t *symbols,
                                  uintptr_t len,
                                  double *out);

// Ancestral sampling from the model.
//
// # Safety
// All pointers must be valid.
enum AqtStatus aqt_model_sample(const struct AqtModel *model,
                                uintptr_t n_samples,
                                uint64_t seed,
                                struct AqtDataset **out);

// Monte Carlo classical fidelity between the state's exact distribution
// and the model, drawing `n_samples` from the model.
//
// # Safety
// All pointers must be valid.
enum AqtStatus aqt_classical_fidelity_sampled(const struct AqtState *state,
                                              const struct AqtFrame *frame,
                                              const struct AqtModel *model,
                                              uintptr_t n_samples,
                                              uint64_t seed,
                                              double *out_value,
                                              double *out_std_error);

// Exact classical fidelity between the state's distribution and the model
// (4^n enumeration, capped at 8 qubits).
//
// # Safety
// All pointers must be valid.
enum AqtStatus aqt_classical_fidelity_exact(const struct AqtState *state,
                                            const struct AqtFrame *frame,
                                            const struct AqtModel *model,
                                            double *out_value);

// Raw (possibly indefinite) frame inversion of the model's distribution.
//
// # Safety
// All pointers must be valid.
enum AqtStatus aqt_reconstruct_from_model(const struct AqtModel *model,
                                          const struct AqtFrame *frame,
                                          struct AqtDensityMatrix **out);

// Physical (PSD by construction) maximum-likelihood fit of the model's
// distribution.
//
// # Safety
// All pointers must be valid.
enum AqtStatus aqt_physical_fit_from_model(const struct AqtModel *model,
                                           const struct AqtFrame *frame,
                                           uintptr_t max_iters,
                                           double tol,
                                           struct AqtDensityMatrix **out);

// Raw frame inversion of the dataset's empirical frequencies.
//
// # Safety
// All pointers must be valid.
enum AqtStatus aqt_linear_inversion(const struct AqtDataset *dataset,
                                    const struct AqtFrame *frame,
                                    struct AqtDensityMatrix **out);

// Iterative maximum-likelihood reconstruction from a dataset.
// `out_converged` receives 1 when the log-likelihood gain dropped below
// `tol` before `max_iters`.
//
// # Safety
// All pointers must be valid.
enum AqtStatus aqt_mle_reconstruct(const struct AqtDataset *dataset,
                                   const struct AqtFrame *frame,
                                   uintptr_t max_iters,
                                   double tol,
                                   struct AqtDensityMatrix **out,
                                   uint8_t *out_converged);

// Eigenvalue-clipping PSD projection; `out_distance` receives the
// Frobenius norm of the change.
//
// # Safety
// All pointers must be valid.
enum AqtStatus aqt_project_to_psd(const struct AqtDensityMatrix *dm,
                                  struct AqtDensityMatrix **out,
                                  double *out_distance);

// Quantum (Uhlmann) fidelity between two PSD density matrices.
//
// # Safety
// All pointers must be valid.
enum AqtStatus aqt_quantum_fidelity(const struct AqtDensityMatrix *rho0,
                                    const struct AqtDensityMatrix *rho1,
                                    double *out);

// Builds the dense density matrix of a target state (capped at 12 qubits).
//
// # Safety
// All pointers must be valid.
enum AqtStatus aqt_state_density_matrix(const struct AqtState *state,
                                        struct AqtDensityMatrix **out);

// Qubit count of the density matrix.
//
// # Safety
// `dm` must be live.
uintptr_t aqt_dm_n_qubits(const struct AqtDensityMatrix *dm);

// 1 when the matrix is PSD-safe (projected or PSD by construction).
//
// # Safety
// `dm` must be live.
uint8_t aqt_dm_is_projected(const struct AqtDensityMatrix *dm);

// Reads one matrix entry.
//
// # Safety
// All pointers must be valid.
enum AqtStatus aqt_dm_get(const struct AqtDensityMatrix *dm,
                          uintptr_t row,
                          uintptr_t col,
                          double *out_re,
                          double *out_im);

// Fraction of absolute mass outside the four GHZ corner elements.
//
// # Safety
// All pointers must be valid.
enum AqtStatus aqt_dm_off_corner_fraction(const struct AqtDensityMatrix *dm, double *out);

// Writes the aqt-dm v1 export format.
//
// # Safety
// `dm` must be live; `path` must be NUL-terminated.
enum AqtStatus aqt_dm_save(const struct AqtDensityMatrix *dm, const char *path);

// Reads the aqt-dm v1 export format.
//
// # Safety
// `path` must be NUL-terminated; `out` must be valid.
enum AqtStatus aqt_dm_load(const char *path, struct AqtDensityMatrix **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AQT_H */
